"""GMPS input rates: feasibility bound, phi_in optimisation and sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .capacity import RateEvaluator
from .core import BelowThreshold, ChannelConfig, Gibbs, Markov, NoisePlan, NonMarkov, QuadratureSpectrum
from .spectra import DEFAULT_GRID_POINTS, gmps_nn_spectrum

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
PHI_UPPER = 1.0 - 1e-7


def golden_section_max(f, a: float, b: float, tol: float = 1e-8, max_iter: int = 200):
    """Maximise a unimodal ``f`` on [a, b]; returns (x, f(x)).

    The endpoints are compared against the interior estimate, so maxima
    sitting on the boundary are returned exactly. Values within a relative
    1e-15 of each other count as ties and resolve toward the endpoint.
    """
    if b < a:
        raise ValueError("empty interval")
    fa, fb = f(a), f(b)
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    lo, hi = a, b
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
    xm = 0.5 * (lo + hi)
    fm = f(xm)
    slack = 1e-15 * max(1.0, abs(fm))
    best = max([(fa, a), (fb, b)], key=lambda t: t[0])
    if best[0] >= fm - slack:
        return best[1], best[0]
    return xm, fm


def _evaluator(cfg_or_ev, points):
    if isinstance(cfg_or_ev, RateEvaluator):
        return cfg_or_ev
    return RateEvaluator(cfg_or_ev, points)


def feasible_phi_max(cfg, points: int = DEFAULT_GRID_POINTS, tol: float = 1e-10) -> float:
    """Largest phi_in whose GMPS threshold does not exceed nbar.

    The GMPS threshold grows monotonically with phi_in, so the boundary is
    found by bisection. ``cfg`` may also be a prepared RateEvaluator.
    """
    ev = _evaluator(cfg, points)

    def excess(phi):
        return ev.threshold(*gmps_nn_spectrum(phi, ev.x)) - ev.cfg.nbar

    e0 = excess(0.0)
    if e0 > 1e-12 * max(1.0, abs(e0 + ev.cfg.nbar)):
        raise BelowThreshold(ev.cfg.nbar, e0 + ev.cfg.nbar, what="GMPS input at phi_in=0")
    lo, hi = 0.0, PHI_UPPER
    if excess(hi) <= 0:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if excess(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return lo


def count_local_maxima(values) -> int:
    """Number of local maxima of a sampled curve, endpoints included.

    Plateaus (differences below a relative 1e-13) are ignored.
    """
    v = np.asarray(values, dtype=float)
    scale = 1e-13 * max(1.0, np.abs(v).max(initial=0.0))
    d = np.diff(v)
    signs = np.sign(np.where(np.abs(d) > scale, d, 0.0))
    signs = signs[signs != 0]
    if signs.size == 0:
        return 1
    count = int(signs[0] < 0) + int(signs[-1] > 0)
    count += int(np.count_nonzero((signs[:-1] > 0) & (signs[1:] < 0)))
    return count


@dataclass(frozen=True)
class PhiOptimum:
    phi_in: float
    rate: float
    phi_max: float
    unimodal: bool


def optimize_phi_in(cfg, points: int = DEFAULT_GRID_POINTS, scan_points: int = 200,
                    tol: float = 1e-8) -> PhiOptimum:
    """Maximise the nearest-neighbour GMPS rate over phi_in.

    A ``scan_points`` grid over the feasible interval checks unimodality and
    brackets the best sample; golden-section search then refines inside the
    bracket. When the scan finds several maxima the bracket still comes from
    the global grid maximum, so the result is a locally refined grid search.
    """
    ev = _evaluator(cfg, points)
    phi_max = feasible_phi_max(ev)

    def rate(phi):
        return ev.rate(*gmps_nn_spectrum(phi, ev.x))

    grid = np.linspace(0.0, phi_max, scan_points)
    vals = np.array([rate(p) for p in grid])
    unimodal = count_local_maxima(vals) <= 1
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, scan_points - 1)]
    phi, best = golden_section_max(rate, lo, hi, tol=tol)
    return PhiOptimum(phi_in=float(phi), rate=float(best), phi_max=float(phi_max), unimodal=unimodal)


def approx_phi_in(noise: NoisePlan) -> float:
    """Closed-form estimate of the optimal phi_in: phi/2 or s/2."""
    if isinstance(noise, Markov):
        return 0.5 * noise.phi
    if isinstance(noise, NonMarkov):
        return 0.5 * noise.s
    raise ValueError(f"no closed-form phi_in estimate for {type(noise).__name__} noise")


def stationarity_residual(noise: QuadratureSpectrum, phi_in: float, x):
    """Pointwise first-order condition for phi_in.

    gamma_env^q / gamma_env^p minus the squared ratio of the GMPS
    denominators; it vanishes for all x only when the GMPS is optimal.
    """
    env_q, env_p = noise(x)
    c = np.cos(np.asarray(x, dtype=float))
    a = 1.0 + phi_in * phi_in
    ratio = (a + 2.0 * phi_in * c) / (a - 2.0 * phi_in * c)
    return env_q / env_p - ratio**2


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

SWEEP_PARAMS = ("phi", "s", "eta", "beta", "nbar", "N")


def with_param(cfg: ChannelConfig, name: str, value: float) -> ChannelConfig:
    """Copy of ``cfg`` with one sweep parameter replaced."""
    noise = cfg.noise
    if name == "phi":
        if isinstance(noise, Markov):
            return replace(cfg, noise=replace(noise, phi=value))
        if isinstance(noise, Gibbs):
            return replace(cfg, noise=replace(noise, phi_chain=value))
    elif name == "s" and isinstance(noise, NonMarkov):
        return replace(cfg, noise=replace(noise, s=value))
    elif name == "beta" and isinstance(noise, Gibbs):
        return replace(cfg, noise=replace(noise, beta=value))
    elif name == "eta":
        return replace(cfg, kind="lossy", eta=value)
    elif name == "nbar":
        return replace(cfg, nbar=value)
    elif name == "N" and isinstance(noise, (Markov, NonMarkov)):
        return replace(cfg, noise=replace(noise, N=value))
    raise ValueError(f"cannot sweep {name!r} for {type(noise).__name__} noise")


@dataclass(frozen=True)
class SweepRow:
    param: float
    C: float = math.nan
    R_gmps: float = math.nan
    R_coh: float = math.nan
    phi_in_opt: float = math.nan
    ratio: float = math.nan
    nbar_thr: float = math.nan
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def sweep_point(cfg: ChannelConfig, points: int = DEFAULT_GRID_POINTS, param: float = math.nan) -> SweepRow:
    """Capacity, optimised GMPS rate and coherent rate for one channel."""
    try:
        ev = RateEvaluator(cfg, points)
        cap = ev.report("optimal")
        coh = ev.report("coherent")
        opt = optimize_phi_in(ev)
    except (BelowThreshold, ValueError) as exc:
        thr = getattr(exc, "nbar_thr", math.nan)
        return SweepRow(param=param, nbar_thr=thr, error=str(exc))
    return SweepRow(
        param=param,
        C=cap.rate,
        R_gmps=opt.rate,
        R_coh=coh.rate,
        phi_in_opt=opt.phi_in,
        ratio=opt.rate / cap.rate if cap.rate > 0 else math.nan,
        nbar_thr=cap.nbar_thr,
    )


def _sweep_task(args):
    cfg, name, value, points = args
    try:
        point_cfg = with_param(cfg, name, value)
    except ValueError as exc:
        return SweepRow(param=value, error=str(exc))
    return sweep_point(point_cfg, points, param=value)


def rate_ratio_sweep(cfg: ChannelConfig, param: str, values, points: int = DEFAULT_GRID_POINTS,
                     workers: int = 1) -> list[SweepRow]:
    """One SweepRow per value, in input order; failing points carry ``error``."""
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; choose from {SWEEP_PARAMS}")
    tasks = [(cfg, param, float(v), points) for v in values]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_task, tasks))
    return [_sweep_task(t) for t in tasks]
