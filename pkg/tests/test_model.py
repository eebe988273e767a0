import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qdyncost.model import (
    ParticleTable,
    ValidationError,
    ceil_log2,
    fs_to_au,
    load_molecule,
    molecule_from_dict,
    molecule_to_dict,
    validate_molecule,
)

CH4 = "molecules/ch4_synthetic.json"


def test_ch4_counts():
    spec = load_molecule(CH4)
    p = spec.particles
    assert p.eta_e == 10
    assert p.eta_n == 5
    assert p.eta == 15
    assert p.n_eta == 4


def test_free_electron_minimal_table():
    doc = json.load(open(CH4))
    doc["particles"] = {"masses": [1.0], "charges": [-1], "eta_e": 1, "eta_n": 0}
    doc["allow_non_neutral"] = True
    doc["channels"] = []
    spec = validate_molecule(molecule_from_dict(doc))
    assert spec.particles.eta == 1
    assert spec.particles.eta_e == 1
    assert spec.particles.eta_n == 0


def test_identity_transform_det_check_passes():
    spec = load_molecule(CH4)
    assert np.allclose(spec.normal_modes.transform, np.eye(15))
    validate_molecule(spec)  # det == 1 exactly


def test_non_neutral_rejected_without_override():
    doc = json.load(open(CH4))
    doc["particles"]["charges"][-1] = 2  # break neutrality
    with pytest.raises(ValidationError, match="net charge"):
        validate_molecule(molecule_from_dict(doc))
    doc["allow_non_neutral"] = True
    validate_molecule(molecule_from_dict(doc))


def test_det_deviation_rejected():
    doc = json.load(open(CH4))
    doc["normal_modes"]["transform"][0][0] = 1.0 + 1e-6
    with pytest.raises(ValidationError, match="det"):
        validate_molecule(molecule_from_dict(doc))


def test_negative_mass_and_frequency_rejected():
    doc = json.load(open(CH4))
    doc["particles"]["masses"][12] = -5.0
    with pytest.raises(ValidationError, match="mass"):
        validate_molecule(molecule_from_dict(doc))
    doc = json.load(open(CH4))
    doc["normal_modes"]["omegas"][0] = -0.01
    with pytest.raises(ValidationError, match="frequency"):
        validate_molecule(molecule_from_dict(doc))


def test_missing_top_level_key():
    doc = json.load(open(CH4))
    del doc["budget"]
    with pytest.raises(ValidationError, match="budget"):
        molecule_from_dict(doc)


def test_reserialize_revalidate_idempotent():
    spec = load_molecule(CH4)
    doc = molecule_to_dict(spec)
    spec2 = validate_molecule(molecule_from_dict(doc))
    doc2 = molecule_to_dict(spec2)
    assert json.dumps(doc, sort_keys=True) == json.dumps(doc2, sort_keys=True)


@given(st.integers(min_value=1, max_value=10 ** 9))
def test_n_eta_matches_bit_length(eta):
    assert ceil_log2(eta) == math.ceil(math.log2(eta)) if eta > 1 else ceil_log2(eta) == 0
    # cross-check against integer bit-length arithmetic
    assert ceil_log2(eta) == (eta - 1).bit_length()


def test_time_conversion_constant():
    assert fs_to_au(0.0241888) == pytest.approx(1.0)
    assert fs_to_au(30.0) == pytest.approx(1240.2434, abs=1e-3)


def test_channel_cutoffs_are_bond_length_plus_margin():
    # dissociation cutoffs sit 0.4 bohr beyond the equilibrium bond lengths
    spec = load_molecule(CH4)
    r0 = np.asarray(spec.normal_modes.r0).reshape(-1, 3)
    for c in spec.channels[0].constraints:
        bond = float(np.linalg.norm(r0[c.alpha] - r0[c.beta]))
        assert c.cutoff == pytest.approx(bond + 0.4, abs=1e-3)
    spec_br = load_molecule("molecules/ch3obr_synthetic.json")
    r0b = np.asarray(spec_br.normal_modes.r0).reshape(-1, 3)
    for c in spec_br.channels[0].constraints:
        bond = float(np.linalg.norm(r0b[c.alpha] - r0b[c.beta]))
        assert c.cutoff == pytest.approx(bond + 0.4, abs=1e-3)


def test_particle_table_helpers():
    # water: 10 electrons, nuclei 8, 1, 1
    pt = ParticleTable(masses=(1.0,) * 10 + (29164.4, 1837.5, 1837.5),
                       charges=(-1,) * 10 + (8, 1, 1), eta_e=10, eta_n=3)
    assert pt.is_neutral
    assert pt.sum_abs_charge_pairs == 400 - 76
