"""Water-filling capacity and transmission rates above threshold.

For an input with block spectra gamma_in(x) the channel output is
gamma_out = kappa * gamma_in + kappa' * gamma_env, and the modulation tops
both quadratures up to a common water level

    gbar = kappa * (nbar + 1/2) + kappa' * <(gamma_env^q + gamma_env^p) / 2>,

fixed by the energy constraint. The rate in bits per use is

    g(gbar - 1/2) - <g(sqrt(gamma_out^q gamma_out^p) - 1/2)>,

which for the additive channel is g(nbar + Nbar) minus the output term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Union

import numpy as np
from scipy.special import xlogy

from .core import BelowThreshold, ChannelConfig, QuadratureSpectrum
from .spectra import DEFAULT_GRID_POINTS, gmps_nn_spectrum, noise_spectrum, trapezoid_grid

InputFamily = Union[Literal["optimal", "coherent", "gmps"], QuadratureSpectrum]

THRESHOLD_SLACK = 1e-12


def g_entropy(x):
    """Entropy in bits of a thermal state with mean photon number x.

    g(x) = (x+1) log2(x+1) - x log2(x) for x > 0 and 0 otherwise.
    """
    x = np.asarray(x, dtype=float)
    xp = np.where(x > 0, x, 0.0)
    out = np.where(x > 0, (xlogy(xp + 1.0, xp + 1.0) - xlogy(xp, xp)) / np.log(2.0), 0.0)
    return float(out) if out.ndim == 0 else out


def _check_noise(env_q, env_p):
    """Noise must be positive, or vanish in both quadratures (noiseless)."""
    zero = (env_q == 0) & (env_p == 0)
    if np.any((env_q <= 0) & ~zero) or np.any((env_p <= 0) & ~zero):
        raise ValueError("noise spectrum must be strictly positive or identically zero")
    return zero


def optimal_input_spectrum(noise: QuadratureSpectrum, x):
    """Optimal pure input: (1/2) sqrt(gamma_env^q / gamma_env^p) and its inverse.

    Where the noise vanishes in both quadratures the input is vacuum.
    """
    env_q, env_p = noise(x)
    zero = _check_noise(env_q, env_p)
    ratio = np.divide(env_q, env_p, out=np.ones(np.shape(env_q)), where=~zero)
    in_q = 0.5 * np.sqrt(ratio)
    return in_q, 0.25 / in_q


@dataclass(frozen=True, eq=False)
class RateReport:
    """Result of a rate evaluation, with the sampled spectra behind it."""

    rate: float
    nbar_thr: float
    waterfill_level: float
    x: np.ndarray
    input_q: np.ndarray
    input_p: np.ndarray
    modulation_q: np.ndarray
    modulation_p: np.ndarray
    output_q: np.ndarray
    output_p: np.ndarray
    weights: np.ndarray
    family: str = "optimal"
    phi_in: float | None = None


class RateEvaluator:
    """Channel and noise sampled once on the quadrature grid.

    Used directly by the phi_in optimiser, which evaluates many inputs for
    the same channel.
    """

    def __init__(self, cfg: ChannelConfig, points: int = DEFAULT_GRID_POINTS):
        if cfg.kappa <= 0:
            raise ValueError("rates are undefined for a fully lossy channel (eta = 0)")
        self.cfg = cfg
        self.noise = noise_spectrum(cfg.noise)
        self.x, self.w = trapezoid_grid(points)
        env_q, env_p = self.noise(self.x)
        _check_noise(env_q, env_p)
        self.env_q = np.array(env_q)
        self.env_p = np.array(env_p)
        self.env_mean = float(self.w @ (0.5 * (self.env_q + self.env_p)))
        k, kp = cfg.kappa, cfg.kappa_env
        self.level = k * (cfg.nbar + 0.5) + kp * self.env_mean

    def output(self, in_q, in_p):
        k, kp = self.cfg.kappa, self.cfg.kappa_env
        return k * in_q + kp * self.env_q, k * in_p + kp * self.env_p

    def threshold(self, in_q, in_p) -> float:
        """Smallest nbar keeping the modulation spectrum non-negative."""
        out_q, out_p = self.output(in_q, in_p)
        peak = max(out_q.max(), out_p.max())
        k, kp = self.cfg.kappa, self.cfg.kappa_env
        return float((peak - kp * self.env_mean) / k - 0.5)

    def feasible(self, in_q, in_p) -> bool:
        thr = self.threshold(in_q, in_p)
        return self.cfg.nbar >= thr - THRESHOLD_SLACK * max(1.0, abs(thr))

    def rate(self, in_q, in_p) -> float:
        """Rate without the threshold check."""
        out_q, out_p = self.output(in_q, in_p)
        nu = np.sqrt(out_q * out_p)
        return float(g_entropy(self.level - 0.5) - self.w @ g_entropy(nu - 0.5))

    def input_for(self, family: InputFamily, phi_in: float = 0.0):
        if isinstance(family, QuadratureSpectrum):
            in_q, in_p = family(self.x)
            return np.array(in_q), np.array(in_p)
        if family == "optimal":
            return optimal_input_spectrum(self.noise, self.x)
        if family == "coherent":
            half = np.full_like(self.x, 0.5)
            return half, half.copy()
        if family == "gmps":
            return gmps_nn_spectrum(phi_in, self.x)
        raise ValueError(f"unknown input family {family!r}")

    def report(self, family: InputFamily = "optimal", phi_in: float = 0.0) -> RateReport:
        in_q, in_p = self.input_for(family, phi_in)
        thr = self.threshold(in_q, in_p)
        name = "custom" if isinstance(family, QuadratureSpectrum) else family
        if not self.feasible(in_q, in_p):
            raise BelowThreshold(self.cfg.nbar, thr, what=f"{name} input")
        out_q, out_p = self.output(in_q, in_p)
        k = self.cfg.kappa
        return RateReport(
            rate=self.rate(in_q, in_p),
            nbar_thr=thr,
            waterfill_level=self.level,
            x=self.x,
            input_q=in_q,
            input_p=in_p,
            modulation_q=(self.level - out_q) / k,
            modulation_p=(self.level - out_p) / k,
            output_q=out_q,
            output_p=out_p,
            weights=self.w,
            family=name,
            phi_in=phi_in if name == "gmps" else None,
        )


def gaussian_capacity(cfg: ChannelConfig, inp: InputFamily = "optimal",
                      phi_in: float = 0.0, points: int = DEFAULT_GRID_POINTS) -> RateReport:
    """Rate of ``cfg`` for the given input family.

    ``inp`` is "optimal" (the Gaussian capacity), "coherent" (vacuum input),
    "gmps" (nearest-neighbour GMPS with correlation ``phi_in``) or any
    QuadratureSpectrum. Raises BelowThreshold when nbar is below the
    water-filling threshold of that input.
    """
    return RateEvaluator(cfg, points).report(inp, phi_in)


def coherent_rate(cfg: ChannelConfig, points: int = DEFAULT_GRID_POINTS) -> RateReport:
    return gaussian_capacity(cfg, "coherent", points=points)
