"""Classical engine for linear coordinate transformations on integer grids.

A transform with unit determinant is decomposed into a full shear, Givens
rotations (each split into two kinds of 2D shears plus optional quarter
turns), and an optional reflection.  On the grid, every shear becomes an
exact permutation: row values are updated in fixed-point arithmetic,
wrapped with a centered modulo, and rounded half-up.  The module also
evaluates the Gaussian-state error bounds for each step and measures true
trace distances against exactly resampled Gaussians.

Conventions (used consistently in forward and inverse maps):
  * rounding is half-up on the signed value, R(x) = floor(x + 1/2);
  * shear coefficients are quantized to r = n_bits - 1 fraction bits;
  * grids are two's-complement ranges [-2**(n_bits-1), 2**(n_bits-1) - 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# total dense-amplitude budget: dims * n_bits may not exceed this
MAX_TOTAL_BITS = 24
PROGRAM_MATRIX_TOL = 1e-10


# ---------------------------------------------------------------------------
# transform programs


@dataclass(frozen=True)
class Step:
    """One program step.

    kind is one of "lower_shear", "upper_shear" (matrix in ``data``),
    "s1" (axes=(i, j), coeff=tan(phi/2) acting on row i),
    "s2" (axes=(i, j), coeff=-sin(phi) acting on row j),
    "quarter" (axes=(i, j), coeff=sign), "reflect" (axes=(axis,)).
    """

    kind: str
    axes: tuple = ()
    coeff: float = 0.0
    data: np.ndarray | None = None

    def matrix(self, dim: int) -> np.ndarray:
        m = np.eye(dim)
        if self.kind in ("lower_shear", "upper_shear"):
            return np.array(self.data, dtype=float)
        if self.kind == "s1":
            i, j = self.axes
            m[i, j] = self.coeff
            return m
        if self.kind == "s2":
            i, j = self.axes
            m[j, i] = self.coeff
            return m
        if self.kind == "quarter":
            i, j = self.axes
            s = self.coeff
            m[i, i] = 0.0
            m[j, j] = 0.0
            m[i, j] = s
            m[j, i] = -s
            return m
        if self.kind == "reflect":
            m[self.axes[0], self.axes[0]] = -1.0
            return m
        raise ValueError(f"unknown step kind {self.kind!r}")


@dataclass
class TransformProgram:
    """Ordered steps whose matrix product equals the inverse transform."""

    dim: int
    steps: list = field(default_factory=list)
    source: dict = field(default_factory=dict)   # T, X, L, givens list

    def matrix(self) -> np.ndarray:
        """Product of step matrices in application order (equals T^-1)."""
        m = np.eye(self.dim)
        for step in self.steps:
            m = step.matrix(self.dim) @ m
        return m


def givens_matrix(dim: int, i: int, j: int, theta: float) -> np.ndarray:
    """Plane rotation with +sin at (i, j) and -sin at (j, i)."""
    g = np.eye(dim)
    c, s = math.cos(theta), math.sin(theta)
    g[i, i] = c
    g[j, j] = c
    g[i, j] = s
    g[j, i] = -s
    return g


def ql_unit_decompose(a: np.ndarray, tol: float = 1e-9):
    """QL decomposition ``a = X @ L`` with orthogonal X and unit-lower L.

    Valid only when the QL factor's diagonal is 1 (as it is for transposes
    of shear-times-rotation products); raises otherwise, since a diagonal
    scale must be factored out of the transform first.
    """
    a = np.asarray(a, dtype=float)
    d = a.shape[0]
    q, r = np.linalg.qr(a[::-1, ::-1])
    x = q[::-1, ::-1]
    low = r[::-1, ::-1]
    signs = np.sign(np.diag(low))
    signs[signs == 0] = 1.0
    x = x * signs[None, :]
    low = low * signs[:, None]
    if np.max(np.abs(np.diag(low) - 1.0)) > tol:
        raise ValueError(
            "transform does not factor as orthogonal times unit shear; "
            "factor out the diagonal scale first"
        )
    low = low.copy()
    np.fill_diagonal(low, 1.0)
    low[np.triu_indices(d, 1)] = 0.0
    return x, low


def givens_decompose(x: np.ndarray):
    """Decompose a rotation (orthogonal, det +1) into plane rotations.

    Returns a list of (i, j, theta) such that ``x = prod G(i,j,theta)`` in
    list order.  Zero-angle rotations are dropped.
    """
    m = np.array(x, dtype=float)
    d = m.shape[0]
    gs = []
    for col in range(d - 1):
        for row in range(d - 1, col, -1):
            a, b = m[row - 1, col], m[row, col]
            r = math.hypot(a, b)
            if r < 1e-300:
                continue
            # rotation in plane (row-1, row) zeroing m[row, col] and leaving
            # a positive value at m[row-1, col]
            c, s = a / r, -b / r
            theta = math.atan2(s, c)
            g = givens_matrix(d, row - 1, row, theta)
            m = g.T @ m
            if abs(theta) > 0.0:
                gs.append((row - 1, row, theta))
    # residual is orthogonal upper-triangular, i.e. diag(+-1); absorb any
    # leftover -1 pairs as rotations by -pi
    diag = np.diag(m).copy()
    neg = [i for i in range(d) if diag[i] < 0]
    if len(neg) % 2 == 1:
        raise ValueError("matrix has determinant -1; reflect first")
    for i, j in zip(neg[0::2], neg[1::2]):
        gs.append((i, j, -math.pi))
        m = givens_matrix(d, i, j, -math.pi).T @ m
    if np.max(np.abs(m - np.eye(d))) > 1e-9:
        raise ValueError("Givens decomposition failed to reduce to identity")
    return gs


def reduce_angle(theta: float):
    """Reduce a rotation angle into [-pi/2, pi/2) plus a quarter turn.

    Returns (phi, h, sign) with theta = phi + h*sign*pi/2, after first
    normalizing theta into [-pi, pi).
    """
    while theta >= math.pi:
        theta -= 2.0 * math.pi
    while theta < -math.pi:
        theta += 2.0 * math.pi
    h = 1 if (theta >= math.pi / 2 or theta < -math.pi / 2) else 0
    sign = 1.0 if theta >= 0 else -1.0
    phi = theta - (math.pi / 2) * h * sign
    return phi, h, sign


def decompose_lct(t_matrix: np.ndarray, det_tol: float = 1e-9) -> TransformProgram:
    """Decompose an invertible |det| = 1 transform into a grid program.

    The program applies, in order: the full lower shear from the QL
    decomposition of T^-1, then for each Givens rotation (last factor
    first) an optional quarter turn followed by the three 2D shears, and
    finally a reflection when the orthogonal factor has determinant -1.
    """
    t_matrix = np.asarray(t_matrix, dtype=float)
    d = t_matrix.shape[0]
    det = np.linalg.det(t_matrix)
    if abs(abs(det) - 1.0) > det_tol:
        raise ValueError(f"|det T| = {abs(det)!r} differs from 1 beyond {det_tol}")
    t_inv = np.linalg.inv(t_matrix)
    x, low = ql_unit_decompose(t_inv)
    det_x = np.linalg.det(x)
    reflected = det_x < 0
    x_rot = x.copy()
    if reflected:
        x_rot[0, :] *= -1.0  # x = Y @ x_rot with Y = diag(-1, 1, ..., 1)
    givens = givens_decompose(x_rot)

    steps = [Step("lower_shear", data=low)]
    givens_records = []
    for (i, j, theta) in reversed(givens):
        phi, h, sign = reduce_angle(theta)
        givens_records.append({"i": i, "j": j, "theta": theta, "phi": phi, "h": h})
        if h:
            steps.append(Step("quarter", axes=(i, j), coeff=sign))
        t_half = math.tan(phi / 2.0)
        s_full = math.sin(phi)
        steps.append(Step("s1", axes=(i, j), coeff=t_half))
        steps.append(Step("s2", axes=(i, j), coeff=-s_full))
        steps.append(Step("s1", axes=(i, j), coeff=t_half))
    if reflected:
        steps.append(Step("reflect", axes=(0,)))

    prog = TransformProgram(
        dim=d,
        steps=steps,
        source={"T": t_matrix, "X": x, "L": low, "givens": givens_records},
    )
    assert np.max(np.abs(prog.matrix() - t_inv)) <= PROGRAM_MATRIX_TOL * max(
        1.0, np.max(np.abs(t_inv))
    ), "program product deviates from T^-1"
    return prog


def cholesky_unit(lam: np.ndarray, tol: float = 1e-10):
    """Cholesky split ``lam = L @ diag(d) @ L.T`` with unit-lower L."""
    lam = np.asarray(lam, dtype=float)
    try:
        c = np.linalg.cholesky(lam)
    except np.linalg.LinAlgError as exc:
        raise ValueError("matrix is not symmetric positive definite") from exc
    d = np.diag(c).copy()
    low = c / d[None, :]
    d_ch = d ** 2
    assert np.max(np.abs(low @ np.diag(d_ch) @ low.T - lam)) <= tol * max(1.0, np.max(np.abs(lam)))
    return low, d_ch


def ssct_program(lam: np.ndarray) -> tuple[TransformProgram, np.ndarray]:
    """Single-shear program for a correlated Gaussian with matrix ``lam``.

    Returns the program (one upper shear ``L^{-T}``) and the diagonal of the
    product Gaussian to be prepared before shearing.
    """
    low, d_ch = cholesky_unit(lam)
    shear = np.linalg.inv(low).T  # unit upper triangular
    prog = TransformProgram(
        dim=lam.shape[0],
        steps=[Step("upper_shear", data=shear)],
        source={"L_ch": low, "D_ch": d_ch, "S": shear},
    )
    return prog, d_ch


# ---------------------------------------------------------------------------
# grid states and exact permutation arithmetic


@dataclass
class GridState:
    """Dense amplitudes over a two's-complement integer grid.

    ``amplitudes`` has shape ``(2**n_bits,) * dims`` and is indexed by
    ``n + 2**(n_bits-1)`` along each axis.  ``n_int`` flags the interior box
    ``[-2**(n_int-1), 2**(n_int-1)-1]**dims`` that carries the support.
    """

    dims: int
    n_bits: int
    amplitudes: np.ndarray
    n_int: int | None = None

    def __post_init__(self):
        if self.dims * self.n_bits > MAX_TOTAL_BITS:
            raise ValueError(
                f"dims*n_bits = {self.dims * self.n_bits} exceeds cap {MAX_TOTAL_BITS}"
            )
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm {norm!r} deviates from 1")

    @property
    def half(self) -> int:
        return 1 << (self.n_bits - 1)

    def all_coords(self) -> np.ndarray:
        axes = [np.arange(-self.half, self.half)] * self.dims
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1).astype(np.int64)


def delta_state(dims: int, n_bits: int, point) -> GridState:
    amps = np.zeros((1 << n_bits,) * dims)
    half = 1 << (n_bits - 1)
    amps[tuple(int(c) + half for c in point)] = 1.0
    return GridState(dims, n_bits, amps)


def separable_gaussian_state(dims: int, n_bits: int, sigma_prime, delta: float,
                             n_int: int | None = None) -> GridState:
    """Normalized product Gaussian exp(-delta^2 sum_a sigma'_a n_a^2 / 2),
    hard-truncated to the interior box when ``n_int`` is given."""
    sigma_prime = np.broadcast_to(np.asarray(sigma_prime, dtype=float), (dims,))
    half = 1 << (n_bits - 1)
    grids = []
    for a in range(dims):
        n = np.arange(-half, half, dtype=float)
        g = np.exp(-0.5 * delta ** 2 * sigma_prime[a] * n ** 2)
        if n_int is not None:
            ih = 1 << (n_int - 1)
            g[(n < -ih) | (n > ih - 1)] = 0.0
        grids.append(g)
    amps = grids[0]
    for g in grids[1:]:
        amps = np.multiply.outer(amps, g)
    amps = amps / np.linalg.norm(amps)
    return GridState(dims, n_bits, amps, n_int=n_int)


class WrapCounter:
    """Counts centered-modulo wrap events during program execution."""

    def __init__(self):
        self.count = 0

    def add(self, n: int):
        self.count += int(n)


def _quantize_coeff(b: float, r: int) -> int:
    """Fixed-point representation of a shear coefficient: round-half-up at
    r fraction bits, returned as the scaled integer."""
    return int(math.floor(b * (1 << r) + 0.5))


def _wrap_int(vals: np.ndarray, modulus: int, counter: WrapCounter | None) -> np.ndarray:
    wrapped = (vals + modulus) % (2 * modulus) - modulus
    if counter is not None:
        counter.add(np.count_nonzero(wrapped != vals))
    return wrapped


def _round_scaled(vals: np.ndarray, r: int) -> np.ndarray:
    """Half-up rounding of fixed-point values (scaled by 2**r) to integers."""
    return (vals + (1 << (r - 1))) >> r


def _row_value(coords: np.ndarray, coeffs: dict, r: int) -> np.ndarray:
    """Scaled fixed-point value sum_j b_ij n_j over the given columns."""
    s = np.zeros(coords.shape[0], dtype=np.int64)
    for j, c in coeffs.items():
        s += np.int64(c) * coords[:, j]
    return s


def _apply_full_shear(coords: np.ndarray, matrix: np.ndarray, lower: bool,
                      n_bits: int, counter: WrapCounter | None, inverse: bool = False):
    """In-place full-shear permutation (or its exact inverse) on coords."""
    d = matrix.shape[0]
    e_half = np.int64(1) << (n_bits - 1)
    r = n_bits - 1
    m_scaled = int(e_half) << r
    order = range(d - 1, -1, -1) if lower else range(d)
    if inverse:
        order = reversed(list(order))
    for i in order:
        cols = range(i) if lower else range(i + 1, d)
        coeffs = {j: _quantize_coeff(matrix[i, j], r) for j in cols if matrix[i, j] != 0.0}
        if not coeffs:
            continue
        s = _row_value(coords, coeffs, r)
        if inverse:
            add = _round_scaled(_wrap_int(s, m_scaled, None), r)
            coords[:, i] = _wrap_int(coords[:, i] - add, e_half, None)
        else:
            s = s + (coords[:, i].astype(np.int64) << r)
            s = _wrap_int(s, m_scaled, counter)
            rounded = _round_scaled(s, r)
            coords[:, i] = _wrap_int(rounded, e_half, counter)
    return coords


def _apply_2d_shear(coords: np.ndarray, target: int, source: int, coeff: float,
                    n_bits: int, counter: WrapCounter | None, inverse: bool = False):
    e_half = np.int64(1) << (n_bits - 1)
    r = n_bits - 1
    m_scaled = int(e_half) << r
    c = _quantize_coeff(coeff, r)
    s = np.int64(c) * coords[:, source]
    s = _wrap_int(s, m_scaled, None if inverse else counter)
    add = _round_scaled(s, r)
    if inverse:
        coords[:, target] = _wrap_int(coords[:, target] - add, e_half, None)
    else:
        coords[:, target] = _wrap_int(coords[:, target] + add, e_half, counter)
    return coords


def _negate(vals: np.ndarray, n_bits: int) -> np.ndarray:
    e_half = np.int64(1) << (n_bits - 1)
    return (-vals + e_half) % (2 * e_half) - e_half


def push_points(coords: np.ndarray, program: TransformProgram, n_bits: int,
                counter: WrapCounter | None = None, inverse: bool = False) -> np.ndarray:
    """Apply the program's grid permutation to an array of integer points.

    With ``inverse=True`` the exact inverse permutation is applied (each row
    update subtracts the same rounded value the forward map added, so
    forward followed by inverse is the identity bit-for-bit).
    """
    coords = np.array(coords, dtype=np.int64, copy=True)
    steps = reversed(program.steps) if inverse else program.steps
    for step in steps:
        if step.kind in ("lower_shear", "upper_shear"):
            _apply_full_shear(coords, np.asarray(step.data, dtype=float),
                              step.kind == "lower_shear", n_bits, counter, inverse)
        elif step.kind == "s1":
            i, j = step.axes
            _apply_2d_shear(coords, i, j, step.coeff, n_bits, counter, inverse)
        elif step.kind == "s2":
            i, j = step.axes
            _apply_2d_shear(coords, j, i, step.coeff, n_bits, counter, inverse)
        elif step.kind == "quarter":
            i, j = step.axes
            sign = int(step.coeff if not inverse else -step.coeff)
            new_i = _negate(coords[:, j], n_bits) if sign < 0 else coords[:, j].copy()
            new_j = _negate(coords[:, i], n_bits) if sign > 0 else coords[:, i].copy()
            coords[:, i] = new_i
            coords[:, j] = new_j
        elif step.kind == "reflect":
            a = step.axes[0]
            coords[:, a] = _negate(coords[:, a], n_bits)
        else:
            raise ValueError(f"unknown step kind {step.kind!r}")
    return coords


def _permute_dense(state: GridState, program: TransformProgram,
                   counter: WrapCounter | None = None) -> GridState:
    coords = state.all_coords()
    new_coords = push_points(coords, program, state.n_bits, counter)
    shape = state.amplitudes.shape
    flat_old = np.ravel_multi_index(tuple((coords[:, a] + state.half) for a in range(state.dims)), shape)
    flat_new = np.ravel_multi_index(tuple((new_coords[:, a] + state.half) for a in range(state.dims)), shape)
    out = np.zeros_like(state.amplitudes).ravel()
    out[flat_new] = state.amplitudes.ravel()[flat_old]
    return GridState(state.dims, state.n_bits, out.reshape(shape), n_int=state.n_int)


def apply_shear_grid(state: GridState, matrix: np.ndarray, direction: str) -> GridState:
    """Apply one full shear permutation to a dense grid state.

    ``matrix`` must be unit-triangular of the stated direction; the update is
    row-sequential (descending rows for lower shears, ascending for upper)
    with centered-modulo wraparound and half-up rounding.  The map is a
    bijection, so the norm is preserved bit-for-bit.
    """
    matrix = np.asarray(matrix, dtype=float)
    if not np.allclose(np.diag(matrix), 1.0):
        raise ValueError("shear must be unit-triangular")
    if direction == "lower":
        if np.any(np.triu(matrix, 1) != 0):
            raise ValueError("lower shear has entries above the diagonal")
        step = Step("lower_shear", data=matrix)
    elif direction == "upper":
        if np.any(np.tril(matrix, -1) != 0):
            raise ValueError("upper shear has entries below the diagonal")
        step = Step("upper_shear", data=matrix)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    prog = TransformProgram(dim=state.dims, steps=[step])
    return _permute_dense(state, prog)


def apply_program(state: GridState, program: TransformProgram,
                  counter: WrapCounter | None = None) -> GridState:
    """Apply a full transform program to a dense grid state."""
    return _permute_dense(state, program, counter)


def apply_ssct(lam: np.ndarray, delta: float, n_bits: int,
               n_int: int | None = None) -> tuple[GridState, TransformProgram]:
    """Prepare the product Gaussian from the Cholesky diagonal of ``lam`` and
    apply the single shear ``L^{-T}``; returns the state and the program."""
    prog, d_ch = ssct_program(lam)
    state = separable_gaussian_state(lam.shape[0], n_bits, d_ch, delta, n_int=n_int)
    return apply_program(state, prog), prog


# ---------------------------------------------------------------------------
# error bounds and measurement


def shear_error_bound(shear: np.ndarray, sigma_prime, delta: float, dims: int) -> float:
    """Gaussian shear-error bound sqrt(2)*(1 - exp(-delta^2 * dims * lmax))^1/2
    with lmax the largest eigenvalue of S^-T Sigma' S^-1."""
    sigma_prime = np.diag(np.broadcast_to(np.asarray(sigma_prime, dtype=float), (dims,)))
    if np.any(np.diag(sigma_prime) <= 0):
        raise ValueError("Gaussian exponent matrix must be positive definite")
    s_inv = np.linalg.inv(np.asarray(shear, dtype=float))
    lam_p = s_inv.T @ sigma_prime @ s_inv
    lmax = float(np.linalg.eigvalsh(lam_p)[-1])
    return math.sqrt(2.0) * math.sqrt(max(0.0, 1.0 - math.exp(-delta ** 2 * dims * lmax)))


def ortho_step_bounds(program: TransformProgram, sigma_prime, delta: float) -> list:
    """Per-step 2D-shear error bounds along a program.

    Walks the program keeping the argument matrix C (amplitudes are
    g(delta*C*n) after each step); for each 2D shear the bound uses the
    post-step Gaussian matrix C^T Sigma' C at the updated coordinate.
    Quarter turns and reflections contribute zero.
    """
    d = program.dim
    sigma_mat = np.diag(np.broadcast_to(np.asarray(sigma_prime, dtype=float), (d,)))
    c_mat = np.eye(d)
    out = []
    for idx, step in enumerate(program.steps):
        c_mat = c_mat @ np.linalg.inv(step.matrix(d))
        if step.kind == "s1":
            k = step.axes[0]
        elif step.kind == "s2":
            k = step.axes[1]
        else:
            continue
        lam_p = c_mat.T @ sigma_mat @ c_mat
        val = math.sqrt(2.0) * math.sqrt(max(0.0, 1.0 - math.exp(-delta ** 2 * lam_p[k, k])))
        out.append((idx, k, val))
    return out


def program_error_bound(program: TransformProgram, sigma_prime, delta: float) -> dict:
    """Full-program bound: the full-shear term plus the 2D-shear sum."""
    d = program.dim
    shear_bound = 0.0
    for step in program.steps:
        if step.kind in ("lower_shear", "upper_shear"):
            shear_bound += shear_error_bound(step.matrix(d), sigma_prime, delta, d)
    ortho = ortho_step_bounds(program, sigma_prime, delta)
    ortho_bound = float(sum(v for (_, _, v) in ortho))
    return {
        "shear": shear_bound,
        "ortho": ortho_bound,
        "total": shear_bound + ortho_bound,
        "ortho_steps": ortho,
    }


def error_bounds(kind: str, sigma_prime, program: TransformProgram, delta: float,
                 dims: int) -> float:
    """Dispatcher: kind="shear" gives the full-shear bound of the program's
    (first) full shear; kind="ortho_step" gives the summed 2D-shear bound."""
    if kind == "shear":
        for step in program.steps:
            if step.kind in ("lower_shear", "upper_shear"):
                return shear_error_bound(step.matrix(dims), sigma_prime, delta, dims)
        return 0.0
    if kind == "ortho_step":
        return float(sum(v for (_, _, v) in ortho_step_bounds(program, sigma_prime, delta)))
    raise ValueError(f"unknown bound kind {kind!r}")


def measure_transform_error(approx: GridState, exact: GridState) -> float:
    """Trace distance sqrt(1 - |<approx|exact>|^2) between two grid states."""
    if approx.amplitudes.shape != exact.amplitudes.shape:
        raise ValueError("states live on different grids")
    ov = abs(np.vdot(approx.amplitudes, exact.amplitudes))
    return math.sqrt(max(0.0, 1.0 - ov ** 2))


def exact_resampled_gaussian(t_matrix: np.ndarray, sigma_prime, delta: float,
                             n_bits: int) -> GridState:
    """Oracle state with amplitudes proportional to g(delta * T * n), i.e.
    the separable Gaussian resampled exactly after the transform."""
    t_matrix = np.asarray(t_matrix, dtype=float)
    d = t_matrix.shape[0]
    sigma_mat = np.diag(np.broadcast_to(np.asarray(sigma_prime, dtype=float), (d,)))
    m_quad = t_matrix.T @ sigma_mat @ t_matrix
    half = 1 << (n_bits - 1)
    axes = [np.arange(-half, half, dtype=float)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    quad = np.zeros_like(mesh[0])
    for a in range(d):
        for b in range(d):
            if m_quad[a, b] != 0.0:
                quad += m_quad[a, b] * mesh[a] * mesh[b]
    amps = np.exp(-0.5 * delta ** 2 * quad)
    amps /= np.linalg.norm(amps)
    return GridState(d, n_bits, amps)


# ---------------------------------------------------------------------------
# point-based Gaussian instance harness (memory-light, used for sweeps)


def _interior_coords(dims: int, n_int: int) -> np.ndarray:
    half = 1 << (n_int - 1)
    axes = [np.arange(-half, half)] * dims
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1).astype(np.int64)


def _lattice_norm_sq(quad: np.ndarray, n_bits: int, cutoff: float = 120.0) -> float:
    """Sum of exp(-n^T quad n) over the grid, enumerated over the bounding
    box of the ellipsoid quad <= cutoff (the tail beyond is below 1e-52)."""
    d = quad.shape[0]
    half = 1 << (n_bits - 1)
    inv = np.linalg.inv(quad)
    widths = [min(half, int(math.ceil(math.sqrt(cutoff * inv[a, a]))) + 1) for a in range(d)]
    axes = [np.arange(-w, w + 1, dtype=float) for w in widths]
    total = 0.0
    # chunk along the first axis to keep peak memory modest
    chunk = max(1, int(4e6 // max(1, np.prod([len(ax) for ax in axes[1:]]))))
    first = axes[0]
    for start in range(0, len(first), chunk):
        sub = [first[start:start + chunk]] + axes[1:]
        mesh = np.meshgrid(*sub, indexing="ij")
        q = np.zeros_like(mesh[0])
        for a in range(d):
            for b in range(d):
                if quad[a, b] != 0.0:
                    q += quad[a, b] * mesh[a] * mesh[b]
        total += float(np.sum(np.exp(-q)))
    return total


def gaussian_instance_error(program: TransformProgram, sigma_prime, delta: float,
                            n_bits: int, n_int: int) -> dict:
    """Measured trace distance, analytic bound, and wrap count for one
    truncated-Gaussian instance pushed through a program.

    The initial state is the separable Gaussian hard-truncated to the
    interior box; the reference is the exactly resampled Gaussian
    g(delta*T*n) on the full grid.  Works directly on the support points, so
    grids beyond the dense cap are fine.
    """
    d = program.dim
    sigma_vec = np.broadcast_to(np.asarray(sigma_prime, dtype=float), (d,))
    t_matrix = np.linalg.inv(program.matrix())

    coords = _interior_coords(d, n_int)
    quad0 = np.einsum("na,a,na->n", coords.astype(float), sigma_vec, coords.astype(float))
    amps = np.exp(-0.5 * delta ** 2 * quad0)
    norm0 = math.sqrt(float(np.sum(amps ** 2)))

    counter = WrapCounter()
    final = push_points(coords, program, n_bits, counter)

    sigma_mat = np.diag(sigma_vec)
    m_quad = delta ** 2 * (t_matrix.T @ sigma_mat @ t_matrix)
    quad_f = np.einsum("na,ab,nb->n", final.astype(float), m_quad, final.astype(float))
    g_exact = np.exp(-0.5 * quad_f)
    norm_ex = math.sqrt(_lattice_norm_sq(m_quad, n_bits))

    overlap = float(np.sum(amps * g_exact)) / (norm0 * norm_ex)
    measured = math.sqrt(max(0.0, 1.0 - overlap ** 2))
    bounds = program_error_bound(program, sigma_vec, delta)
    return {
        "measured": measured,
        "bound": bounds["total"],
        "bound_shear": bounds["shear"],
        "bound_ortho": bounds["ortho"],
        "wraps": counter.count,
        "overlap": overlap,
    }
