"""Infinite-n block spectra of the noise models and of the GMPS input.

All spectra live on x in [0, 2pi]. Spectral averages use the composite
trapezoid rule on a uniform grid, which converges geometrically for the
smooth periodic integrands that appear here.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .core import (
    TWO_PI,
    ChannelConfig,
    Custom,
    Gibbs,
    Markov,
    NoisePlan,
    NonMarkov,
    NumericalError,
    QuadratureSpectrum,
    UnsupportedNoise,
)

DEFAULT_GRID_POINTS = 4097
CONVERGENCE_TOL = 1e-10
MAX_GRID_POINTS = 2**20 + 1


class GmpsDomainError(ValueError):
    """GMPS spectrum parameters that do not describe a quantum state."""

    def __init__(self, message: str, failed: str):
        self.failed = failed
        super().__init__(message)


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------


def trapezoid_grid(points: int = DEFAULT_GRID_POINTS):
    """Uniform grid on [0, 2pi] (both endpoints) and trapezoid weights.

    Weights are normalised so that ``weights @ f(x)`` is the spectral mean
    (1/2pi) * integral of f.
    """
    if points < 3:
        raise ValueError("need at least 3 grid points")
    x = np.linspace(0.0, TWO_PI, points)
    w = np.full(points, 1.0 / (points - 1))
    w[0] = w[-1] = 0.5 / (points - 1)
    return x, w


def spectral_mean(func, points: int = DEFAULT_GRID_POINTS, tol: float = CONVERGENCE_TOL,
                  max_points: int = MAX_GRID_POINTS) -> float:
    """(1/2pi) * integral of ``func`` over [0, 2pi] with a self-check.

    The grid is refined (K -> 2K - 1, nested) until two consecutive
    estimates differ by less than ``tol``.
    """
    x, w = trapezoid_grid(points)
    prev = float(w @ func(x))
    while True:
        points = 2 * points - 1
        if points > max_points:
            raise NumericalError(
                f"spectral mean did not converge to {tol:g} within {max_points} points"
            )
        x, w = trapezoid_grid(points)
        cur = float(w @ func(x))
        if abs(cur - prev) < tol:
            return cur
        prev = cur


# --------------------------------------------------------------------------
# analytic spectra
# --------------------------------------------------------------------------


def markov_spectrum(N, phi, x):
    """Block spectra of N * M(+-phi) as n -> infinity; q first."""
    if not 0.0 <= phi < 1.0:
        raise ValueError(f"Markov spectrum diverges for phi={phi} (need 0 <= phi < 1)")
    c = np.cos(np.asarray(x, dtype=float))
    num = N * (1.0 - phi * phi)
    return num / (1.0 + phi * phi - 2.0 * phi * c), num / (1.0 + phi * phi + 2.0 * phi * c)


def nonmarkov_spectrum(N, s, x):
    """Block spectra N * exp(+-2 s cos x)."""
    if N < 0:
        raise ValueError(f"N_N must be >= 0, got {N}")
    c = np.cos(np.asarray(x, dtype=float))
    return N * np.exp(2.0 * s * c), N * np.exp(-2.0 * s * c)


def gmps_general_spectrum(Ntilde, phi_in, delta, x, check: bool = True):
    """q spectrum of a general one-dimensional GMPS.

    ``Ntilde * ((1 - phi^2) / (1 + phi^2 - 2 phi cos x) + delta)``. The p
    spectrum follows from purity as 1 / (4 gamma_q).

    Raises GmpsDomainError when ``delta * Ntilde < -1/2`` (``failed ==
    "bound"``) or when the spectrum is not strictly positive at some of
    the requested x (``failed == "positivity"``). The first condition does
    not imply the second when delta < 0.
    """
    if Ntilde < 0:
        raise ValueError(f"Ntilde must be >= 0, got {Ntilde}")
    if not 0.0 <= phi_in < 1.0:
        raise ValueError(f"phi_in must lie in [0, 1), got {phi_in}")
    if check and delta * Ntilde < -0.5:
        raise GmpsDomainError(
            f"delta*Ntilde = {delta * Ntilde:.6g} < -1/2", failed="bound"
        )
    c = np.cos(np.asarray(x, dtype=float))
    gq = Ntilde * ((1.0 - phi_in**2) / (1.0 + phi_in**2 - 2.0 * phi_in * c) + delta)
    if check and np.min(gq) <= 0:
        raise GmpsDomainError(
            f"GMPS spectrum not positive (min {np.min(gq):.6g})", failed="positivity"
        )
    return gq


def gmps_nn_spectrum(phi_in, x):
    """Nearest-neighbour GMPS spectra (q, p); their product is 1/4."""
    if not 0.0 <= phi_in < 1.0:
        raise ValueError(f"phi_in must lie in [0, 1), got {phi_in}")
    c = np.cos(np.asarray(x, dtype=float))
    a = 1.0 + phi_in * phi_in
    return a / (a - 2.0 * phi_in * c) - 0.5, a / (a + 2.0 * phi_in * c) - 0.5


def gmps_nn(phi_in: float) -> QuadratureSpectrum:
    if not 0.0 <= phi_in < 1.0:
        raise ValueError(f"phi_in must lie in [0, 1), got {phi_in}")
    return QuadratureSpectrum(
        lambda x: gmps_nn_spectrum(phi_in, x)[0],
        lambda x: gmps_nn_spectrum(phi_in, x)[1],
    )


def flat_spectrum(value: float) -> QuadratureSpectrum:
    return QuadratureSpectrum(
        lambda x: np.full(np.shape(x), float(value)),
        lambda x: np.full(np.shape(x), float(value)),
    )


# --------------------------------------------------------------------------
# custom (sampled) spectra
# --------------------------------------------------------------------------


def _uniform_samples(x, values, name="spectrum"):
    """Check a uniform grid on [0, 2pi) and drop a duplicated 2pi endpoint."""
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    if abs(x[0]) > 1e-12:
        raise ValueError(f"{name}: grid must start at x=0")
    if np.isclose(x[-1], TWO_PI, rtol=0, atol=1e-9):
        if not np.isclose(values[-1], values[0], rtol=1e-9, atol=1e-12):
            raise ValueError(f"{name}: samples at 0 and 2pi differ")
        x, values = x[:-1], values[:-1]
    m = x.size
    if not np.allclose(np.diff(x), TWO_PI / m, rtol=1e-9, atol=1e-12):
        raise ValueError(f"{name}: grid must be uniform with spacing 2pi/M")
    return values


def trig_interpolant(samples):
    """Trigonometric interpolant of periodic samples on x_j = 2pi j / M."""
    samples = np.asarray(samples, dtype=float)
    m = samples.size
    coef = np.fft.rfft(samples) / m
    k = np.arange(coef.size)
    weight = np.full(coef.size, 2.0)
    weight[0] = 1.0
    if m % 2 == 0:
        weight[-1] = 1.0

    a = weight * coef.real
    b = weight * coef.imag

    def f(x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.empty_like(flat)
        for start in range(0, flat.size, 512):
            phase = np.multiply.outer(flat[start:start + 512], k)
            out[start:start + 512] = np.cos(phase) @ a - np.sin(phase) @ b
        return out.reshape(x.shape)

    return f


def custom_spectrum(plan: Custom) -> QuadratureSpectrum:
    q = _uniform_samples(plan.x, plan.gamma_q, "gamma_q")
    p = _uniform_samples(plan.x, plan.gamma_p, "gamma_p")
    return QuadratureSpectrum(trig_interpolant(q), trig_interpolant(p))


def _read_two_column(path):
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (x, value), got {data.shape[1]}")
    return data[:, 0], data[:, 1]


def load_custom_csv(q_path, p_path) -> Custom:
    """Read q and p spectra from two-column (x, value) CSV files."""
    xq, q = _read_two_column(q_path)
    xp, p = _read_two_column(p_path)
    if xq.shape != xp.shape or not np.allclose(xq, xp, rtol=0, atol=1e-12):
        raise ValueError("q and p spectra must share the same x grid")
    _uniform_samples(xq, q, "gamma_q")
    _uniform_samples(xp, p, "gamma_p")
    plan = Custom(xq, q, p)
    custom_spectrum(plan).check()
    return plan


# --------------------------------------------------------------------------
# noise plans
# --------------------------------------------------------------------------


def noise_spectrum(plan: NoisePlan) -> QuadratureSpectrum:
    """Spectral representation of a noise plan (spectra pass through)."""
    if isinstance(plan, QuadratureSpectrum):
        return plan
    if isinstance(plan, Markov):
        return QuadratureSpectrum(
            lambda x: markov_spectrum(plan.N, plan.phi, x)[0],
            lambda x: markov_spectrum(plan.N, plan.phi, x)[1],
        )
    if isinstance(plan, NonMarkov):
        return QuadratureSpectrum(
            lambda x: nonmarkov_spectrum(plan.N, plan.s, x)[0],
            lambda x: nonmarkov_spectrum(plan.N, plan.s, x)[1],
        )
    if isinstance(plan, Gibbs):
        from .gibbs import gibbs_noise, gibbs_plan_chain

        return gibbs_noise(gibbs_plan_chain(plan))
    if isinstance(plan, Custom):
        return custom_spectrum(plan)
    raise TypeError(f"not a noise plan: {plan!r}")


def mean_noise_energy(spec: QuadratureSpectrum, points: int = DEFAULT_GRID_POINTS) -> float:
    """Added noise energy: the spectral mean of gamma_q."""
    return spectral_mean(lambda x: spec(x)[0], points)


def mean_quadrature_energy(spec: QuadratureSpectrum, points: int = DEFAULT_GRID_POINTS) -> float:
    """Spectral mean of (gamma_q + gamma_p) / 2.

    Equal to :func:`mean_noise_energy` for spectra with the q/p mirror
    symmetry; this is the quantity the energy constraint actually fixes.
    """
    return spectral_mean(lambda x: 0.5 * np.add(*spec(x)), points)


def max_at_origin(gamma, points: int = DEFAULT_GRID_POINTS, rtol: float = 1e-12) -> bool:
    x, _ = trapezoid_grid(points)
    vals = np.asarray(gamma(x), dtype=float)
    return bool(vals.max() <= vals[0] * (1.0 + rtol) + rtol)


def input_threshold(cfg: ChannelConfig, input_q0: float,
                    points: int = DEFAULT_GRID_POINTS) -> float:
    """Minimum mean photon number for the global water-filling solution.

    ``input_q0`` is the input q spectrum at x = 0. The additive result is
    gamma_in(0) + gamma_env(0) - 1/2 - Nbar. For the lossy channel the
    same condition, flatness of the modulated output at the peak x = 0, is
    solved with the beam-splitter weights and expressed in input photons.
    """
    spec = noise_spectrum(cfg.noise)
    if not max_at_origin(spec.gamma_q, points):
        raise UnsupportedNoise("noise q spectrum does not peak at x = 0")
    env0 = float(spec(np.array([0.0]))[0][0])
    nbar_env = mean_noise_energy(spec, points)
    k, kp = cfg.kappa, cfg.kappa_env
    if k <= 0:
        raise ValueError("threshold undefined for eta = 0")
    return (k * input_q0 + kp * (env0 - nbar_env)) / k - 0.5


# --------------------------------------------------------------------------
# finite-n matrices
# --------------------------------------------------------------------------


def markov_matrix(n: int, phi: float) -> np.ndarray:
    """Symmetric Toeplitz matrix M_ij = phi^|i-j| (phi may be negative)."""
    return scipy.linalg.toeplitz(phi ** np.arange(n))


def hopping_matrix(n: int) -> np.ndarray:
    """Omega_ij = delta_{i,j+1} + delta_{i+1,j}."""
    return np.eye(n, k=1) + np.eye(n, k=-1)


def nonmarkov_matrix(n: int, s: float) -> np.ndarray:
    return scipy.linalg.expm(s * hopping_matrix(n))


def quantile_grid(n: int) -> np.ndarray:
    """Midpoint grid x_j = pi (j + 1/2) / n on [0, pi].

    Sorted samples of an even symbol on this grid are the natural finite-n
    comparison for the sorted eigenvalues of its Toeplitz matrix.
    """
    return np.pi * (np.arange(n) + 0.5) / n


def toeplitz_deviation(kind: str, param: float, n: int, N: float = 1.0) -> dict:
    """Max |sorted eigenvalues - sorted analytic samples| for both quadratures.

    ``kind`` is "markov" (param = phi) or "nonmarkov" (param = s).
    """
    x = quantile_grid(n)
    if kind == "markov":
        mats = (N * markov_matrix(n, param), N * markov_matrix(n, -param))
        an = markov_spectrum(N, param, x)
    elif kind == "nonmarkov":
        mats = (N * nonmarkov_matrix(n, param), N * nonmarkov_matrix(n, -param))
        an = nonmarkov_spectrum(N, param, x)
    else:
        raise ValueError(f"unknown noise kind {kind!r}")
    devs = [np.abs(np.linalg.eigvalsh(m) - np.sort(a)).max() for m, a in zip(mats, an)]
    return {"n": n, "q": float(devs[0]), "p": float(devs[1]), "max": float(max(devs))}
