"""Domain types, unit conventions, and ingestion/validation of molecule files.

All physical quantities are in atomic units (Hartree energies, bohr lengths,
electron masses, elementary charges).  Simulation times are accepted in
femtoseconds and converted with ``1 a.u. of time = 0.0241888 fs``.
Logarithms are base 2 throughout the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

# 1 atomic unit of time, expressed in femtoseconds.
FS_PER_ATOMIC_TIME = 0.0241888

DET_A_TOL = 1e-9


def fs_to_au(t_fs: float) -> float:
    """Convert a time from femtoseconds to atomic units."""
    return t_fs / FS_PER_ATOMIC_TIME


def ceil_log2(x) -> int:
    """``ceil(log2(x))`` computed exactly for positive integers."""
    if x <= 0:
        raise ValueError(f"ceil_log2 requires a positive argument, got {x}")
    if isinstance(x, (int, np.integer)):
        return int(x - 1).bit_length()
    return int(math.ceil(math.log2(x)))


class ValidationError(ValueError):
    """Raised when a molecule file violates a structural invariant."""


@dataclass(frozen=True)
class ParticleTable:
    """Masses and charges of all particles, electrons first.

    Attributes:
        masses: particle masses in electron-mass units (electrons have mass 1).
        charges: signed integer charges in units of e (electrons have -1).
        eta_e: number of electrons.
        eta_n: number of nuclei.
    """

    masses: tuple
    charges: tuple
    eta_e: int
    eta_n: int

    @property
    def eta(self) -> int:
        return self.eta_e + self.eta_n

    @property
    def n_eta(self) -> int:
        """Qubits needed to index a particle, ceil(log2(eta))."""
        return ceil_log2(self.eta)

    @property
    def is_neutral(self) -> bool:
        return sum(self.charges) == 0

    @property
    def lambda_m(self) -> float:
        """Sum of inverse masses (kinetic LCU-norm prefactor)."""
        return float(sum(1.0 / m for m in self.masses))

    @property
    def sum_abs_charge_pairs(self) -> float:
        """``sum_{i != j} |z_i||z_j|`` over ordered particle pairs."""
        s1 = sum(abs(z) for z in self.charges)
        s2 = sum(z * z for z in self.charges)
        return float(s1 * s1 - s2)


@dataclass(frozen=True)
class NormalModeData:
    """Normal-mode metadata for the nuclear state.

    ``transform`` is the normalized coordinate-transform matrix (det = 1)
    obtained by factoring the diagonal scale matrix ``d`` out of the
    mass-weighted normal-mode rotation; ``omegas`` are the (already rescaled)
    harmonic frequencies in Hartree.
    """

    omegas: tuple
    transform: np.ndarray          # (3*eta_n, 3*eta_n), det = 1
    d_diag: tuple                  # positive diagonal of the factored scale
    r0: tuple                      # equilibrium geometry, 3*eta_n bohr values
    gamma_trans: float             # translational Gaussian width
    upsilon_rot: float             # rotational Gaussian width
    linear: bool = False

    @property
    def n_vib(self) -> int:
        return len(self.omegas)


@dataclass(frozen=True)
class ElectronicMeta:
    """Electronic basis metadata (molecular orbitals and their MPS sizes)."""

    n_mob: int                     # number of molecular orbitals
    d_configs: int                 # number of electronic configurations
    n_gauss: int                   # Gaussian primitives per orbital expansion
    gamma_max: float               # largest Gaussian exponent
    l_max: int                     # largest Cartesian angular power
    sigma_ortho: float             # orthogonalization eigenvalue cutoff
    bond_dims: np.ndarray          # (n_mob, n_sites) per-orbital MPS bond dims
    b_asp: int = 10                # precision qubits, arbitrary state prep
    b_rot: int = 8                 # precision qubits, rotation multiplexor


@dataclass(frozen=True)
class NuclearMeta:
    """Nuclear basis metadata (single-modals and their MPS sizes)."""

    n_smb: int                     # single-modal basis size per mode
    n_vib: int
    d_configs: int                 # number of nuclear configurations
    n_hg: int                      # Hermite-Gaussian primitives per mode
    bond_dims: np.ndarray          # (n_modes, n_smb, n_sites) MPS bond dims
    b_asp: int = 10
    b_rot: int = 8
    b_grad: int = 30               # phase-gradient register width


@dataclass(frozen=True)
class ChannelConstraint:
    """One pairwise-distance constraint of a reaction channel."""

    alpha: int                     # nucleus index
    beta: int                      # nucleus index
    cutoff: float                  # bohr
    direction: str                 # "greater" | "less"


@dataclass(frozen=True)
class ReactionChannel:
    """A reaction channel: conjunction of pairwise-distance constraints."""

    constraints: tuple

    @property
    def b_j(self) -> int:
        return len(self.constraints)

    def nuclei_involved(self) -> set:
        out = set()
        for c in self.constraints:
            out.add(c.alpha)
            out.add(c.beta)
        return out


@dataclass
class ErrorBudget:
    """Tree of error allocations from the total observable error downwards.

    The top-level constraint is
    ``2 * lambda_O * (eps_ISP + eps_prop + eps_B) + eps_meas <= eps_total``
    with ``eps_meas = eps_QAE + eps_O``.  The propagation sub-splits
    (``eps_H = eps_T + eps_V + eps_theta``, QSP terms) are resolved once the
    simulation time and QSP degree are known.
    """

    eps_total: float
    lambda_obs: float
    eps_isp: float = 0.0
    eps_prop: float = 0.0
    eps_b: float = 0.0
    eps_meas: float = 0.0
    eps_qae: float = 0.0
    eps_obs: float = 0.0
    # propagation sub-splits (filled by resolve_prop_splits)
    eps_h: float = 0.0
    eps_qsp: float = 0.0
    eps_t: float = 0.0
    eps_v: float = 0.0
    eps_theta: float = 0.0
    eps_dtilde: float = 0.0
    eps_rot: float = 0.0
    eps_phi: float = 0.0
    eps_gamma: float = 0.0
    # ISP sub-splits (uniform across the seven contributions by default)
    eps_asp: float = 0.0
    eps_mps_classical: float = 0.0
    eps_mps_quantum: float = 0.0
    eps_shear: float = 0.0
    eps_ortho: float = 0.0
    eps_pk: float = 0.0
    eps_trim: float = 0.0
    eps_lct: float = 0.0
    policy: str = "paper_default"

    def feasibility_margin(self) -> float:
        """Slack of the top-level constraint; non-negative iff feasible."""
        used = 2.0 * self.lambda_obs * (self.eps_isp + self.eps_prop + self.eps_b)
        return self.eps_total - used - self.eps_meas


@dataclass
class MoleculeSpec:
    """Validated physical input: the estimator's sole description of a run."""

    particles: ParticleTable
    normal_modes: NormalModeData
    electronic: ElectronicMeta
    nuclear: NuclearMeta
    channels: tuple
    budget_raw: dict
    time_fs: float = 30.0
    allow_non_neutral: bool = False
    overrides: dict = field(default_factory=dict)
    anchors: dict = field(default_factory=dict)

    @property
    def time_au(self) -> float:
        return fs_to_au(self.time_fs)


def _require(cond: bool, msg: str):
    if not cond:
        raise ValidationError(msg)


def validate_molecule(spec: MoleculeSpec) -> MoleculeSpec:
    """Check all structural invariants of a parsed molecule description.

    Returns the input unchanged on success; raises :class:`ValidationError`
    with a diagnostic message otherwise.
    """
    p = spec.particles
    _require(len(p.masses) == len(p.charges), "masses and charges must have equal length")
    _require(p.eta == len(p.masses), f"eta={p.eta} != number of particle entries {len(p.masses)}")
    _require(p.eta >= 1, "at least one particle required")
    for j in range(p.eta_e):
        _require(p.masses[j] == 1, f"electron {j} must have mass 1, got {p.masses[j]}")
        _require(p.charges[j] == -1, f"electron {j} must have charge -1, got {p.charges[j]}")
    for j, (m, z) in enumerate(zip(p.masses, p.charges)):
        _require(m > 0, f"particle {j} has non-positive mass {m}")
        _require(z == int(z), f"particle {j} has non-integer charge {z}")
    if not p.is_neutral and not spec.allow_non_neutral:
        raise ValidationError(
            f"net charge {sum(p.charges)} != 0; set allow_non_neutral to override"
        )

    nm = spec.normal_modes
    if p.eta_n > 0:
        dim = 3 * p.eta_n
        a = np.asarray(nm.transform, dtype=float)
        _require(a.shape == (dim, dim), f"transform must be {dim}x{dim}, got {a.shape}")
        det = float(np.linalg.det(a))
        _require(abs(det - 1.0) <= DET_A_TOL, f"det(transform)={det!r} deviates from 1 beyond {DET_A_TOL}")
        expected_vib = max(0, dim - (5 if nm.linear else 6))
        _require(
            nm.n_vib == expected_vib,
            f"expected {expected_vib} vibrational frequencies for "
            f"{'linear' if nm.linear else 'non-linear'} molecule, got {nm.n_vib}",
        )
        for i, w in enumerate(nm.omegas):
            _require(w > 0, f"frequency {i} must be positive, got {w}")
        for i, d in enumerate(nm.d_diag):
            _require(d > 0, f"scale diagonal entry {i} must be positive, got {d}")
        _require(len(nm.r0) == dim, f"equilibrium geometry must have {dim} entries")
        _require(nm.gamma_trans > 0 and nm.upsilon_rot > 0, "Gaussian widths must be positive")

    e = spec.electronic
    _require(e.n_mob >= 1 and e.d_configs >= 1 and e.n_gauss >= 1, "electronic counts must be >= 1")
    _require(e.gamma_max > 0 and e.sigma_ortho > 0, "gamma_max and sigma must be positive")
    _require(e.l_max >= 0, "l_max must be non-negative")
    _require(np.all(np.asarray(e.bond_dims) >= 1), "electronic bond dimensions must be >= 1")

    n = spec.nuclear
    _require(n.n_smb >= 1 and n.d_configs >= 1 and n.n_hg >= 1, "nuclear counts must be >= 1")
    _require(np.all(np.asarray(n.bond_dims) >= 1), "nuclear bond dimensions must be >= 1")

    for ch in spec.channels:
        for c in ch.constraints:
            _require(c.alpha != c.beta, f"constraint pairs a nucleus with itself: {c}")
            _require(c.cutoff > 0, f"constraint cutoff must be positive: {c}")
            _require(c.direction in ("greater", "less"), f"unknown direction {c.direction!r}")
        max_pairs = p.eta_n * (p.eta_n - 1) // 2
        _require(ch.b_j >= 1, "reaction channel needs at least one constraint")
        _require(ch.b_j <= max_pairs, f"channel has {ch.b_j} constraints > eta_n(eta_n-1)/2 = {max_pairs}")

    return spec


def molecule_from_dict(doc: dict) -> MoleculeSpec:
    """Build an (unvalidated) MoleculeSpec from a parsed JSON document."""
    missing = [k for k in ("particles", "normal_modes", "electronic", "nuclear", "channels", "budget") if k not in doc]
    if missing:
        raise ValidationError(f"missing required top-level key(s): {', '.join(missing)}")

    pd = doc["particles"]
    particles = ParticleTable(
        masses=tuple(pd["masses"]),
        charges=tuple(int(z) for z in pd["charges"]),
        eta_e=int(pd["eta_e"]),
        eta_n=int(pd["eta_n"]),
    )

    nd = doc["normal_modes"]
    normal_modes = NormalModeData(
        omegas=tuple(nd["omegas"]),
        transform=np.asarray(nd["transform"], dtype=float),
        d_diag=tuple(nd["d_diag"]),
        r0=tuple(nd["r0"]),
        gamma_trans=float(nd["gamma_trans"]),
        upsilon_rot=float(nd["upsilon_rot"]),
        linear=bool(nd.get("linear", False)),
    )

    ed = doc["electronic"]
    electronic = ElectronicMeta(
        n_mob=int(ed["n_mob"]),
        d_configs=int(ed["d_configs"]),
        n_gauss=int(ed["n_gauss"]),
        gamma_max=float(ed["gamma_max"]),
        l_max=int(ed["l_max"]),
        sigma_ortho=float(ed["sigma_ortho"]),
        bond_dims=np.asarray(ed["bond_dims"], dtype=int),
        b_asp=int(ed.get("b_asp", 10)),
        b_rot=int(ed.get("b_rot", 8)),
    )

    nud = doc["nuclear"]
    nuclear = NuclearMeta(
        n_smb=int(nud["n_smb"]),
        n_vib=int(nud["n_vib"]),
        d_configs=int(nud["d_configs"]),
        n_hg=int(nud["n_hg"]),
        bond_dims=np.asarray(nud["bond_dims"], dtype=int),
        b_asp=int(nud.get("b_asp", 10)),
        b_rot=int(nud.get("b_rot", 8)),
        b_grad=int(nud.get("b_grad", 30)),
    )

    channels = []
    for ch in doc["channels"]:
        constraints = tuple(
            ChannelConstraint(
                alpha=int(c["alpha"]),
                beta=int(c["beta"]),
                cutoff=float(c["cutoff"]),
                direction=str(c["direction"]),
            )
            for c in ch["constraints"]
        )
        channels.append(ReactionChannel(constraints=constraints))

    sim = doc.get("simulation", {})
    return MoleculeSpec(
        particles=particles,
        normal_modes=normal_modes,
        electronic=electronic,
        nuclear=nuclear,
        channels=tuple(channels),
        budget_raw=dict(doc["budget"]),
        time_fs=float(sim.get("time_fs", doc["budget"].get("time_fs", 30.0))),
        allow_non_neutral=bool(doc.get("allow_non_neutral", False)),
        overrides=dict(sim.get("overrides", {})),
        anchors=dict(sim.get("anchors", {})),
    )


def molecule_to_dict(spec: MoleculeSpec) -> dict:
    """Serialize a MoleculeSpec back to the JSON document layout."""
    doc = {
        "particles": {
            "masses": list(spec.particles.masses),
            "charges": list(spec.particles.charges),
            "eta_e": spec.particles.eta_e,
            "eta_n": spec.particles.eta_n,
        },
        "normal_modes": {
            "omegas": list(spec.normal_modes.omegas),
            "transform": np.asarray(spec.normal_modes.transform).tolist(),
            "d_diag": list(spec.normal_modes.d_diag),
            "r0": list(spec.normal_modes.r0),
            "gamma_trans": spec.normal_modes.gamma_trans,
            "upsilon_rot": spec.normal_modes.upsilon_rot,
            "linear": spec.normal_modes.linear,
        },
        "electronic": {
            "n_mob": spec.electronic.n_mob,
            "d_configs": spec.electronic.d_configs,
            "n_gauss": spec.electronic.n_gauss,
            "gamma_max": spec.electronic.gamma_max,
            "l_max": spec.electronic.l_max,
            "sigma_ortho": spec.electronic.sigma_ortho,
            "bond_dims": np.asarray(spec.electronic.bond_dims).tolist(),
            "b_asp": spec.electronic.b_asp,
            "b_rot": spec.electronic.b_rot,
        },
        "nuclear": {
            "n_smb": spec.nuclear.n_smb,
            "n_vib": spec.nuclear.n_vib,
            "d_configs": spec.nuclear.d_configs,
            "n_hg": spec.nuclear.n_hg,
            "bond_dims": np.asarray(spec.nuclear.bond_dims).tolist(),
            "b_asp": spec.nuclear.b_asp,
            "b_rot": spec.nuclear.b_rot,
            "b_grad": spec.nuclear.b_grad,
        },
        "channels": [
            {"constraints": [asdict(c) for c in ch.constraints]} for ch in spec.channels
        ],
        "budget": dict(spec.budget_raw),
        "simulation": {
            "time_fs": spec.time_fs,
            "overrides": dict(spec.overrides),
            "anchors": dict(spec.anchors),
        },
    }
    if spec.allow_non_neutral:
        doc["allow_non_neutral"] = True
    return doc


def load_molecule(path) -> MoleculeSpec:
    """Load and validate a molecule JSON file."""
    with open(path) as fh:
        doc = json.load(fh)
    return validate_molecule(molecule_from_dict(doc))
