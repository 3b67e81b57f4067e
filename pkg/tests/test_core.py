import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmpschannel.core import (
    BlockCovariance,
    ChannelConfig,
    Custom,
    Gibbs,
    Markov,
    NonMarkov,
    QuadratureSpectrum,
    assemble_full,
    min_uncertainty_eigenvalue,
    symplectic_form,
    validate_quantum,
)


def test_vacuum_is_pure_and_valid():
    cm = BlockCovariance.vacuum(4)
    assert cm.n == 4
    assert cm.is_pure()
    assert validate_quantum(cm)
    assert min_uncertainty_eigenvalue(cm) == pytest.approx(0.0, abs=1e-14)


def test_thermal_state_is_mixed_and_valid():
    cm = BlockCovariance(1.5 * np.eye(3), 1.5 * np.eye(3))
    assert validate_quantum(cm)
    assert not cm.is_pure()
    assert cm.log_det2() == pytest.approx(6 * np.log(3.0))


def test_oversqueezed_state_is_rejected():
    # q * p = 0.04 < 1/4 violates the uncertainty relation
    cm = BlockCovariance(0.1 * np.eye(2), 0.4 * np.eye(2))
    assert not validate_quantum(cm)


def test_squeezed_vacuum_stays_valid():
    r = 1.3
    cm = BlockCovariance(0.5 * np.exp(-2 * r) * np.eye(1), 0.5 * np.exp(2 * r) * np.eye(1))
    assert validate_quantum(cm)
    assert cm.is_pure()


def test_block_shape_and_symmetry_checks():
    with pytest.raises(ValueError, match="square"):
        BlockCovariance(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(ValueError, match="does not match"):
        BlockCovariance(np.eye(2), np.eye(3))
    with pytest.raises(ValueError, match="symmetric"):
        BlockCovariance(np.array([[1.0, 0.2], [0.0, 1.0]]), np.eye(2))


def test_blocks_are_read_only_copies():
    q = np.eye(2)
    cm = BlockCovariance(q, np.eye(2))
    q[0, 0] = 7.0
    assert cm.q_block[0, 0] == 1.0
    with pytest.raises(ValueError):
        cm.q_block[0, 0] = 2.0


def test_full_matrix_roundtrip():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(3, 3))
    q = a @ a.T + np.eye(3)
    cm = BlockCovariance(q, np.linalg.inv(q) / 4)
    full = assemble_full(cm)
    assert full.shape == (6, 6)
    assert np.all(full[:3, 3:] == 0)
    back = BlockCovariance.from_full(full)
    assert np.array_equal(back.q_block, cm.q_block)
    assert back.is_pure()


def test_from_full_rejects_qp_correlations():
    full = np.eye(4)
    full[0, 2] = full[2, 0] = 0.1
    with pytest.raises(ValueError, match="q-p"):
        BlockCovariance.from_full(full)
    with pytest.raises(ValueError):
        BlockCovariance.from_full(np.eye(3))


def test_symplectic_form():
    om = symplectic_form(2)
    assert np.array_equal(om.T, -om)
    assert np.array_equal(om @ om, -np.eye(4))


def test_validate_requires_block_covariance():
    with pytest.raises(TypeError):
        validate_quantum(np.eye(2))


@st.composite
def valid_cms(draw):
    n = draw(st.integers(1, 5))
    seed = draw(st.integers(0, 2**32 - 1))
    thermal = draw(st.floats(0.0, 3.0))
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    q = a @ a.T + 0.05 * np.eye(n)
    q = 0.5 * (q + q.T)
    # pure state q (+) q^{-1}/4, plus isotropic thermal noise
    p = np.linalg.inv(q) / 4
    p = 0.5 * (p + p.T)
    return BlockCovariance(q + thermal * np.eye(n), p + thermal * np.eye(n))


@settings(max_examples=60, deadline=None)
@given(valid_cms())
def test_valid_states_have_det_at_least_one(cm):
    assert validate_quantum(cm, tol=1e-8)
    assert cm.log_det2() >= -1e-8


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_single_mode_validity_matches_uncertainty_product(q, p):
    cm = BlockCovariance(np.array([[q]]), np.array([[p]]))
    assert validate_quantum(cm, tol=1e-9 * max(q, p)) == (q * p >= 0.25 * (1 - 1e-9))


def test_noise_plan_validation():
    with pytest.raises(ValueError):
        Markov(1.0, 1.0)
    with pytest.raises(ValueError):
        Markov(-1.0, 0.2)
    with pytest.raises(ValueError):
        NonMarkov(-0.1, 0.2)
    with pytest.raises(ValueError):
        Gibbs(0.0, 0.3)
    with pytest.raises(ValueError):
        Gibbs(1.0, 0.3, convention="other")
    with pytest.raises(ValueError):
        Custom(np.arange(2.0), np.ones(2), np.ones(2))
    with pytest.raises(ValueError):
        Custom(np.arange(4.0), np.array([1.0, 0.0, 1.0, 1.0]), np.ones(4))


def test_channel_config():
    cfg = ChannelConfig(Markov(1.0, 0.3), 5.0)
    assert (cfg.kappa, cfg.kappa_env) == (1.0, 1.0)
    lossy = ChannelConfig(NonMarkov(1.0, 0.3), 5.0, kind="lossy", eta=0.7)
    assert lossy.kappa == 0.7
    assert lossy.kappa_env == pytest.approx(0.3)
    with pytest.raises(ValueError):
        ChannelConfig(Markov(1.0, 0.3), -1.0)
    with pytest.raises(ValueError):
        ChannelConfig(Markov(1.0, 0.3), 1.0, kind="lossy", eta=1.5)
    with pytest.raises(ValueError):
        ChannelConfig(Markov(1.0, 0.3), 1.0, kind="amplifier")
    with pytest.raises(ValueError, match="N_N >= 1/2"):
        ChannelConfig(NonMarkov(0.4, 0.3), 1.0, kind="lossy", eta=0.5)


def test_quadrature_spectrum_check():
    ok = QuadratureSpectrum(lambda x: 2 + np.cos(x), lambda x: 2 - np.cos(x))
    ok.check()
    q, p = ok(np.array([0.0, np.pi]))
    assert np.allclose(q, [3, 1]) and np.allclose(p, [1, 3])
    with pytest.raises(ValueError, match="positive"):
        QuadratureSpectrum(lambda x: np.cos(x), lambda x: 1 + 0 * x).check()
    with pytest.raises(ValueError, match="periodic"):
        QuadratureSpectrum(lambda x: 1 + x, lambda x: 1 + 0 * x).check()
