"""Finite-n nearest-neighbour GMPS from the three-mode building block.

Each site carries a building block with modes (1, 1', 2) and the two TMS
halves (l, r) that connect it to its neighbours. Bell measurements glue
mode 1 to l and mode 1' to r, leaving mode 2 as the GMPS site. At the
covariance level this is a Schur complement:

    gamma = Gamma_t - Gamma_wt^T (Gamma_ww + theta Gamma_TMS theta)^{-1} Gamma_wt.

Ancilla ordering: the 2n glued pairs are indexed (l_1, r_1, l_2, r_2, ...),
i.e. mode 1 of site i sits at position 2i and mode 1' at 2i+1 (0-based),
in both Gamma_ww and Gamma_TMS. The TMS couples r_i to l_{i+1} cyclically
(corner entry (2n-1, 0)), which makes the output exactly circulant.

For this construction the block spectra are exactly the nearest-neighbour
family with 2 phi / (1 + phi^2) = tanh(r_B)^2 tanh(r_T).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar

from .core import BlockCovariance, NumericalError, validate_quantum
from .spectra import gmps_nn_spectrum

FIT_RESIDUAL_LIMIT = 1e-2
MAX_CONDITION = 1e12


class NotNearestNeighbor(ValueError):
    """Spectrum is not fitted by the nearest-neighbour GMPS family."""

    def __init__(self, phi_in: float, residual: float):
        self.phi_in = phi_in
        self.residual = residual
        super().__init__(
            f"best nearest-neighbour fit phi_in={phi_in:.6g} leaves residual "
            f"{residual:.3g} > {FIT_RESIDUAL_LIMIT:g}"
        )


@dataclass(frozen=True)
class BuildingBlock:
    """Three-mode building block parameterised by t = cosh(2 r_B) >= 1."""

    t: float

    def __post_init__(self):
        if not self.t >= 1.0:
            raise ValueError(f"building block needs t >= 1, got {self.t}")

    @classmethod
    def from_squeezing(cls, r_B: float) -> "BuildingBlock":
        return cls(math.cosh(2.0 * r_B))

    @property
    def w(self) -> float:
        return (self.t + 1.0) / 2.0

    @property
    def v(self) -> float:
        return (self.t - 1.0) / 2.0

    @property
    def u(self) -> float:
        return math.sqrt((self.t * self.t - 1.0) / 2.0)

    @property
    def r_B(self) -> float:
        return math.acosh(self.t) / 2.0

    def cm(self) -> np.ndarray:
        return building_block_cm(self.t)


def building_block_cm(t: float) -> np.ndarray:
    """6x6 covariance matrix, ordering (q1, q1', q2, p1, p1', p2)."""
    if not t >= 1.0:
        raise ValueError(f"building block needs t >= 1, got {t}")
    w, v, u = (t + 1) / 2, (t - 1) / 2, math.sqrt((t * t - 1) / 2)
    q = np.array([[w, v, u], [v, w, u], [u, u, t]])
    p = np.array([[w, v, -u], [v, w, -u], [-u, -u, t]])
    return 0.5 * scipy.linalg.block_diag(q, p)


def tms_chain(n: int, r: float) -> np.ndarray:
    """2n x 2n matrix gamma_TMS(r): cosh(2r) on the diagonal, sinh(2r)
    between positions (2i+1, 2i+2) and in the (0, 2n-1) corners."""
    ch, sh = math.cosh(2.0 * r), math.sinh(2.0 * r)
    m = ch * np.eye(2 * n)
    for i in range(n):
        a, b = 2 * i + 1, (2 * i + 2) % (2 * n)
        m[a, b] = m[b, a] = sh
    return m


def _gmps_blocks(n: int, r_B: float, r_T: float):
    """Gamma_t, Gamma_wt, Gamma_ww, Gamma_TMS and theta in (q; p) ordering."""
    bb = BuildingBlock.from_squeezing(r_B)
    t, w, v, u = bb.t, bb.w, bb.v, bb.u
    gamma_t = 0.5 * t * np.eye(2 * n)
    wq = np.zeros((2 * n, n))
    for i in range(n):
        wq[2 * i, i] = wq[2 * i + 1, i] = u
    gamma_wt = 0.5 * scipy.linalg.block_diag(wq, -wq)
    pair = np.array([[w, v], [v, w]])
    gamma_ww = 0.5 * np.kron(np.eye(2 * n), pair)
    gamma_tms = 0.5 * scipy.linalg.block_diag(tms_chain(n, r_T), tms_chain(n, -r_T))
    theta = np.diag(np.r_[np.ones(2 * n), -np.ones(2 * n)])
    return gamma_t, gamma_wt, gamma_ww, gamma_tms, theta


def assemble_gmps(n: int, r_B: float, r_T: float | None = None) -> BlockCovariance:
    """Covariance matrix of the n-mode nearest-neighbour GMPS.

    ``r_T`` defaults to ``r_B``. Raises NumericalError if the glued ancilla
    matrix is singular or too ill-conditioned to invert.
    """
    if n < 2:
        raise ValueError(f"need at least 2 modes, got n={n}")
    if r_T is None:
        r_T = r_B
    if r_B < 0 or r_T < 0:
        raise ValueError("squeezing parameters must be >= 0")
    gamma_t, gamma_wt, gamma_ww, gamma_tms, theta = _gmps_blocks(n, r_B, r_T)
    flipped = theta @ gamma_tms @ theta
    # Gamma_TMS carries no q-p block, so the partial transpose must be inert
    assert np.array_equal(flipped, gamma_tms)
    kernel = gamma_ww + flipped
    cond = np.linalg.cond(kernel)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NumericalError(f"ancilla matrix ill-conditioned (cond={cond:.3g})")
    try:
        factor = scipy.linalg.cho_factor(kernel)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"ancilla matrix not positive definite (cond={cond:.3g})") from exc
    gamma = gamma_t - gamma_wt.T @ scipy.linalg.cho_solve(factor, gamma_wt)
    gamma = 0.5 * (gamma + gamma.T)
    return BlockCovariance.from_full(gamma)


def phi_in_from_squeezing(r_B: float, r_T: float | None = None) -> float:
    """Closed-form phi_in of the assembled GMPS in the n -> infinity limit."""
    if r_T is None:
        r_T = r_B
    k = math.tanh(r_B) ** 2 * math.tanh(r_T)
    # smaller root of k phi^2 - 2 phi + k = 0, in cancellation-free form
    return k / (1.0 + math.sqrt(1.0 - k * k))


def squeezing_for_phi_in(phi_in: float) -> float:
    """Common squeezing r_B = r_T that produces ``phi_in``."""
    if not 0.0 <= phi_in < 1.0:
        raise ValueError(f"phi_in must lie in [0, 1), got {phi_in}")
    k = 2.0 * phi_in / (1.0 + phi_in * phi_in)
    return math.atanh(k ** (1.0 / 3.0))


def squeezing_to_db(r: float) -> float:
    """Squeezing in decibels, 10 log10(exp(2r))."""
    if r < 0:
        raise ValueError("squeezing must be >= 0")
    return 20.0 * r / math.log(10.0)


def circulant_grid(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def spectral_deviation(cm: BlockCovariance, phi_in: float) -> float:
    """Max |sorted q eigenvalues - sorted nearest-neighbour samples|."""
    eig = np.linalg.eigvalsh(cm.q_block)
    model = np.sort(gmps_nn_spectrum(phi_in, circulant_grid(cm.n))[0])
    return float(np.abs(eig - model).max())


@dataclass(frozen=True)
class PhiFit:
    phi_in: float
    residual: float


def extract_phi_in(cm: BlockCovariance, min_modes: int = 4) -> PhiFit:
    """Least-squares fit of the q-block spectrum to the nearest-neighbour family.

    ``residual`` is the max absolute eigenvalue deviation at the fitted
    phi_in. Raises NotNearestNeighbor when it exceeds 1e-2.
    """
    if cm.n < min_modes:
        raise ValueError(f"fit needs n >= {min_modes} modes, got {cm.n}")
    eig = np.linalg.eigvalsh(cm.q_block)
    x = circulant_grid(cm.n)

    def sse(phi):
        return float(np.sum((eig - np.sort(gmps_nn_spectrum(phi, x)[0])) ** 2))

    res = minimize_scalar(sse, bounds=(0.0, 1.0 - 1e-9), method="bounded",
                          options={"xatol": 1e-13})
    phi = float(res.x)
    if sse(0.0) <= res.fun:
        phi = 0.0
    resid = spectral_deviation(cm, phi)
    if resid > FIT_RESIDUAL_LIMIT:
        raise NotNearestNeighbor(phi, resid)
    return PhiFit(phi, resid)


@dataclass(frozen=True)
class ConvergenceReport:
    rows: list  # (n, deviation) pairs
    phi_in: float
    monotone: bool
    message: str = ""


def convergence_study(r_B: float, r_T: float | None, n_list, slack: float = 0.10,
                      floor: float = 1e-12) -> ConvergenceReport:
    """Deviation of the finite-n spectrum from the infinite-n spectrum.

    Consecutive deviations may grow by at most ``slack`` (relative) plus
    ``floor`` (absolute); the floor absorbs round-off once the deviation
    reaches machine precision, which it does at every n here because the
    cyclic construction is exactly circulant.
    """
    n_list = list(n_list)
    if n_list != sorted(n_list):
        raise ValueError("n_list must be ascending")
    phi = phi_in_from_squeezing(r_B, r_T)
    rows = [(n, spectral_deviation(assemble_gmps(n, r_B, r_T), phi)) for n in n_list]
    bad = [
        (a, b) for (a, b) in zip(rows, rows[1:]) if b[1] > (1.0 + slack) * a[1] + floor
    ]
    msg = "" if not bad else "deviation grew: " + ", ".join(
        f"n={a[0]}:{a[1]:.3g} -> n={b[0]}:{b[1]:.3g}" for a, b in bad)
    return ConvergenceReport(rows, phi, not bad, msg)


def is_circulant(m: np.ndarray, atol: float = 1e-9) -> bool:
    return bool(np.abs(m - np.roll(np.roll(m, 1, axis=0), 1, axis=1)).max() <= atol)


def export_cm_csv(cm: BlockCovariance, path, meta: dict) -> None:
    """Write q-block rows then p-block rows, with a JSON header comment."""
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        for block in (cm.q_block, cm.p_block):
            for row in block:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_cm_csv(path):
    """Inverse of :func:`export_cm_csv`; returns (BlockCovariance, meta)."""
    with open(path) as fh:
        header = fh.readline()
    if not header.startswith("# "):
        raise ValueError(f"{path}: missing JSON header line")
    meta = json.loads(header[2:])
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    n = data.shape[1]
    if data.shape[0] != 2 * n:
        raise ValueError(f"{path}: expected {2 * n} rows, got {data.shape[0]}")
    return BlockCovariance(data[:n], data[n:]), meta


def build_report(n: int, r_B: float, r_T: float | None = None) -> dict:
    """Assemble, fit and validate; the record printed by the CLI."""
    cm = assemble_gmps(n, r_B, r_T)
    fit = None
    if n >= 4:
        try:
            fit = extract_phi_in(cm)
        except NotNearestNeighbor as exc:
            fit = PhiFit(exc.phi_in, exc.residual)
    return {
        "cm": cm,
        "n": n,
        "r_B": r_B,
        "r_T": r_B if r_T is None else r_T,
        "phi_in_fit": None if fit is None else fit.phi_in,
        "fit_residual": None if fit is None else fit.residual,
        "phi_in_closed_form": phi_in_from_squeezing(r_B, r_T),
        "purity_residual": float(abs(np.expm1(cm.log_det2()))),
        "valid": validate_quantum(cm),
    }
