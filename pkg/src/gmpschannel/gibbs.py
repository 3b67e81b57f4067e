"""Thermal harmonic-chain noise, for which the GMPS is the exact optimal input.

The chain Hamiltonian H = (sum p_i^2 + sum q_i V_ij q_j) / 2 with V = C^2
has the GMPS (C^{-1} (+) C) / 2 as its ground state. Its Gibbs state has
covariance (N_env (+) N_env)(C^{-1} (+) C), N_env = I + (2 exp(beta C) - I)^{-1}.
Everything here works with the spectra c(x) of C, n_env(x) of N_env.

Normalisation: the matrix above tends to C^{-1} (+) C as beta -> infinity,
twice the GMPS covariance. The default "normalized" convention divides by
two so the zero-temperature noise equals the GMPS; "literal" keeps the
matrix as written. The q/p ratio, and hence the optimal input, is the same
in both.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
import scipy.linalg

from .capacity import gaussian_capacity, optimal_input_spectrum
from .core import BelowThreshold, ChannelConfig, Gibbs, QuadratureSpectrum
from .spectra import DEFAULT_GRID_POINTS, gmps_nn_spectrum, trapezoid_grid

OPTIMALITY_TOL = 1e-10


@dataclass(frozen=True)
class HarmonicChainNoise:
    beta: float
    c_spectrum: Callable[[np.ndarray], np.ndarray]
    convention: Literal["normalized", "literal"] = "normalized"
    phi_chain: float | None = None

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.convention not in ("normalized", "literal"):
            raise ValueError(f"unknown convention {self.convention!r}")

    @classmethod
    def nearest_neighbor(cls, beta: float, phi_chain: float,
                         convention: str = "normalized") -> "HarmonicChainNoise":
        """Chain whose ground state is the nearest-neighbour GMPS at ``phi_chain``."""
        if not 0.0 <= phi_chain < 1.0:
            raise ValueError(f"phi_chain must lie in [0, 1), got {phi_chain}")
        return cls(beta, lambda x: 0.5 / gmps_nn_spectrum(phi_chain, x)[0],
                   convention, phi_chain)

    def c(self, x):
        c = np.asarray(self.c_spectrum(np.asarray(x, dtype=float)), dtype=float)
        if np.min(c) <= 0:
            raise ValueError("chain spectrum c(x) must be positive")
        return c

    def n_env(self, x):
        return thermal_factor(self.beta, self.c(x))


def thermal_factor(beta, c):
    """n_env = 1 + 1 / (2 exp(beta c) - 1), written with exp(-beta c) to avoid overflow."""
    e = np.exp(-beta * np.asarray(c, dtype=float))
    return 1.0 + e / (2.0 - e)


def gibbs_noise_spectrum(chain: HarmonicChainNoise, x):
    """Noise block spectra (q, p) of the thermal chain."""
    c = chain.c(x)
    n = thermal_factor(chain.beta, c)
    scale = 0.5 if chain.convention == "normalized" else 1.0
    return scale * n / c, scale * n * c


def gibbs_noise(chain: HarmonicChainNoise) -> QuadratureSpectrum:
    return QuadratureSpectrum(
        lambda x: gibbs_noise_spectrum(chain, x)[0],
        lambda x: gibbs_noise_spectrum(chain, x)[1],
    )


def chain_ground_state(chain: HarmonicChainNoise) -> QuadratureSpectrum:
    """GMPS spectra (1/(2c), c/2) of the chain's ground state."""
    return QuadratureSpectrum(lambda x: 0.5 / chain.c(x), lambda x: 0.5 * chain.c(x))


def chain_potential_spectrum(chain: HarmonicChainNoise):
    """Spectrum v(x) = c(x)^2 of the potential matrix V = C^2."""
    return lambda x: chain.c(x) ** 2


def chain_matrices(chain: HarmonicChainNoise, n: int, samples: int = 4096):
    """Finite-n symmetric Toeplitz C with symbol c(x), and N_env built from it."""
    x = 2.0 * np.pi * np.arange(samples) / samples
    coef = np.fft.rfft(chain.c(x)).real / samples
    if n > coef.size:
        raise ValueError("increase samples for this n")
    C = scipy.linalg.toeplitz(coef[:n])
    N_env = np.eye(n) + np.linalg.inv(2.0 * scipy.linalg.expm(chain.beta * C) - np.eye(n))
    return C, N_env


@dataclass(frozen=True)
class OptimalityReport:
    passed: bool
    max_deviation: float
    tol: float
    capacity: float | None = None
    gmps_rate: float | None = None
    nbar_thr: float | None = None

    @property
    def rate_gap(self) -> float | None:
        if self.capacity is None:
            return None
        return abs(self.capacity - self.gmps_rate)


def verify_exact_optimality(chain: HarmonicChainNoise, noise: QuadratureSpectrum | None = None,
                            nbar: float | None = None, points: int = DEFAULT_GRID_POINTS,
                            tol: float = OPTIMALITY_TOL) -> OptimalityReport:
    """Compare the optimal input for the noise with the chain's GMPS pointwise.

    ``noise`` defaults to the chain's own Gibbs noise; passing another
    spectrum (e.g. Markov) shows the GMPS is not optimal there. With
    ``nbar`` the additive-channel capacity and GMPS rate are also computed;
    below threshold they are left as None.
    """
    if noise is None:
        noise = gibbs_noise(chain)
    x, _ = trapezoid_grid(points)
    opt_q, opt_p = optimal_input_spectrum(noise, x)
    gm_q, gm_p = chain_ground_state(chain)(x)
    dev = float(max(np.abs(opt_q - gm_q).max(), np.abs(opt_p - gm_p).max()))
    cap = rate = thr = None
    if nbar is not None:
        cfg = ChannelConfig(noise, nbar)
        try:
            c_rep = gaussian_capacity(cfg, "optimal", points=points)
            g_rep = gaussian_capacity(cfg, chain_ground_state(chain), points=points)
            cap, rate, thr = c_rep.rate, g_rep.rate, c_rep.nbar_thr
        except BelowThreshold as exc:
            thr = exc.nbar_thr
    return OptimalityReport(dev <= tol, dev, tol, cap, rate, thr)


def gibbs_plan_chain(plan: Gibbs) -> HarmonicChainNoise:
    return HarmonicChainNoise.nearest_neighbor(plan.beta, plan.phi_chain, plan.convention)
