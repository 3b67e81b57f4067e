import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmpschannel.core import BlockCovariance, NumericalError, validate_quantum
from gmpschannel.gmps_build import (
    BuildingBlock,
    NotNearestNeighbor,
    assemble_gmps,
    build_report,
    building_block_cm,
    convergence_study,
    export_cm_csv,
    extract_phi_in,
    is_circulant,
    phi_in_from_squeezing,
    read_cm_csv,
    spectral_deviation,
    squeezing_for_phi_in,
    squeezing_to_db,
    tms_chain,
)
from gmpschannel.spectra import markov_matrix


@pytest.mark.parametrize("r_B", [0.0, 0.3, 1.1])
def test_building_block_is_pure(r_B):
    bb = BuildingBlock.from_squeezing(r_B)
    assert bb.r_B == pytest.approx(r_B)
    assert bb.w - bb.v == pytest.approx(1.0)
    cm = BlockCovariance.from_full(bb.cm())
    assert validate_quantum(cm)
    assert cm.is_pure()


def test_building_block_vacuum():
    assert np.allclose(building_block_cm(1.0), 0.5 * np.eye(6))
    with pytest.raises(ValueError):
        BuildingBlock(0.5)


def test_tms_chain_pairs():
    m = tms_chain(3, 0.4)
    assert m[1, 2] == pytest.approx(math.sinh(0.8))
    assert m[5, 0] == m[0, 5] == pytest.approx(math.sinh(0.8))
    assert m[0, 1] == 0.0
    # each TMS pair is a pure two-mode state: det of the pair block is 1
    assert np.linalg.det(m[np.ix_([1, 2], [1, 2])]) == pytest.approx(1.0)


def test_vacuum_gmps():
    cm = assemble_gmps(6, 0.0)
    assert np.allclose(cm.q_block, 0.5 * np.eye(6))
    assert np.allclose(cm.p_block, 0.5 * np.eye(6))


@pytest.mark.parametrize("n", [2, 3, 8, 64, 256])
@pytest.mark.parametrize("r", [0.2, 0.6, 1.1])
def test_assembled_state_is_pure_valid_circulant(n, r):
    cm = assemble_gmps(n, r)
    assert abs(np.expm1(cm.log_det2())) < 1e-7
    assert validate_quantum(cm)
    assert is_circulant(cm.q_block) and is_circulant(cm.p_block)


def test_assemble_rejects_bad_input():
    with pytest.raises(ValueError):
        assemble_gmps(1, 0.3)
    with pytest.raises(ValueError):
        assemble_gmps(4, -0.1)


def test_assemble_ill_conditioned():
    with pytest.raises(NumericalError):
        assemble_gmps(4, 20.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.4), st.floats(0.0, 1.4), st.sampled_from([4, 16, 64]))
def test_fit_recovers_closed_form(r_B, r_T, n):
    cm = assemble_gmps(n, r_B, r_T)
    fit = extract_phi_in(cm)
    assert fit.phi_in == pytest.approx(phi_in_from_squeezing(r_B, r_T), abs=1e-7)
    assert fit.residual < 1e-7


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 0.9))
def test_squeezing_inverse_roundtrip(phi):
    r = squeezing_for_phi_in(phi)
    assert phi_in_from_squeezing(r) == pytest.approx(phi, abs=1e-10)


def test_closed_form_values():
    # 2 phi / (1 + phi^2) = tanh(r)^3 for r_B = r_T = r
    k = math.tanh(1.08) ** 3
    assert phi_in_from_squeezing(1.08) == pytest.approx((1 - math.sqrt(1 - k * k)) / k, rel=1e-12)
    assert phi_in_from_squeezing(0.0) == 0.0
    assert squeezing_for_phi_in(0.0) == 0.0
    with pytest.raises(ValueError):
        squeezing_for_phi_in(1.0)


def test_anchor_r108():
    assert phi_in_from_squeezing(1.08) == pytest.approx(0.3, abs=0.05)


@pytest.mark.xfail(strict=True, reason="r=1.18 gives phi_in=0.311 in this construction, not 0.4")
def test_anchor_r118():
    assert phi_in_from_squeezing(1.18) == pytest.approx(0.4, abs=0.05)


def test_squeezing_to_db():
    assert squeezing_to_db(0.0) == 0.0
    assert squeezing_to_db(1.08) == pytest.approx(9.380760809, abs=1e-8)
    assert squeezing_to_db(1.18) == pytest.approx(10.249349773, abs=1e-8)
    assert squeezing_to_db(1.0) == pytest.approx(10 * math.log10(math.exp(2.0)))
    with pytest.raises(ValueError):
        squeezing_to_db(-1.0)


def test_convergence_study():
    rep = convergence_study(0.6, None, [8, 16, 32, 64, 128])
    assert rep.monotone, rep.message
    assert dict(rep.rows)[128] < 1e-3
    with pytest.raises(ValueError):
        convergence_study(0.6, None, [64, 8])


def test_fit_rejects_non_gmps_state():
    q = markov_matrix(64, 0.6)
    cm = BlockCovariance(q, np.linalg.inv(q) / 4)
    with pytest.raises(NotNearestNeighbor) as exc:
        extract_phi_in(cm)
    assert exc.value.residual > 1e-2
    with pytest.raises(ValueError):
        extract_phi_in(assemble_gmps(2, 0.3))


def test_spectral_deviation_detects_wrong_phi():
    cm = assemble_gmps(32, 0.8)
    phi = phi_in_from_squeezing(0.8)
    assert spectral_deviation(cm, phi) < 1e-12
    assert spectral_deviation(cm, phi + 0.05) > 1e-2


def test_csv_roundtrip(tmp_path):
    cm = assemble_gmps(5, 0.4)
    path = tmp_path / "cm.csv"
    export_cm_csv(cm, path, {"n": 5, "r_B": 0.4})
    back, meta = read_cm_csv(path)
    assert meta == {"n": 5, "r_B": 0.4}
    assert np.array_equal(back.q_block, cm.q_block)
    assert np.array_equal(back.p_block, cm.p_block)


def test_build_report():
    rep = build_report(128, 0.3)
    assert rep["valid"]
    assert rep["purity_residual"] < 1e-7
    assert rep["fit_residual"] < 1e-3
    assert rep["phi_in_fit"] == pytest.approx(rep["phi_in_closed_form"], abs=1e-8)
    small = build_report(2, 0.3)
    assert small["phi_in_fit"] is None
