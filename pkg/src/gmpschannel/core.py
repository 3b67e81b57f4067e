"""Domain types shared across the package.

Conventions: hbar = 1, vacuum quadrature variance 1/2, and covariance
matrices ordered as (q_1..q_n; p_1..p_n) with no q-p cross block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Union

import numpy as np

SYMMETRY_TOL = 1e-12
VALIDITY_TOL = 1e-10
PURITY_RTOL = 1e-8

TWO_PI = 2.0 * np.pi


class BelowThreshold(ValueError):
    """Input energy is below the global water-filling threshold."""

    def __init__(self, nbar: float, nbar_thr: float, what: str = "input"):
        self.nbar = nbar
        self.nbar_thr = nbar_thr
        super().__init__(
            f"nbar={nbar:.9g} is below the water-filling threshold "
            f"{nbar_thr:.9g} for the {what}"
        )


class UnsupportedNoise(ValueError):
    """Noise spectrum outside the class the formulas apply to."""


class NumericalError(RuntimeError):
    """Quadrature non-convergence or an ill-conditioned linear solve."""


# --------------------------------------------------------------------------
# Spectra and covariance matrices
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpectrum:
    """Pair of block spectra gamma_q(x), gamma_p(x) on x in [0, 2pi].

    Both callables must accept numpy arrays.
    """

    gamma_q: Callable[[np.ndarray], np.ndarray]
    gamma_p: Callable[[np.ndarray], np.ndarray]
    domain_size: float = TWO_PI

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        q = np.broadcast_to(np.asarray(self.gamma_q(x), dtype=float), x.shape)
        p = np.broadcast_to(np.asarray(self.gamma_p(x), dtype=float), x.shape)
        return q, p

    def check(self, points: int = 1025, atol: float = 1e-9) -> None:
        """Raise ValueError unless positive and 2pi-periodic on a grid."""
        x = np.linspace(0.0, self.domain_size, points)
        q, p = self(x)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("spectrum is not finite on [0, 2pi]")
        if q.min() <= 0 or p.min() <= 0:
            raise ValueError(
                f"spectrum not strictly positive (min q={q.min():.3g}, "
                f"min p={p.min():.3g})"
            )
        scale = max(1.0, abs(q[0]), abs(p[0]))
        if abs(q[0] - q[-1]) > atol * scale or abs(p[0] - p[-1]) > atol * scale:
            raise ValueError("spectrum is not 2pi-periodic")


@dataclass(frozen=True, eq=False)
class BlockCovariance:
    """Covariance matrix q_block (+) p_block of an n-mode Gaussian state."""

    q_block: np.ndarray
    p_block: np.ndarray

    def __post_init__(self):
        q = np.array(self.q_block, dtype=float)
        p = np.array(self.p_block, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError(f"q_block must be square, got shape {q.shape}")
        if p.shape != q.shape:
            raise ValueError(
                f"p_block shape {p.shape} does not match q_block {q.shape}"
            )
        for name, m in (("q_block", q), ("p_block", p)):
            if np.abs(m - m.T).max(initial=0.0) > SYMMETRY_TOL:
                raise ValueError(f"{name} is not symmetric")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "q_block", q)
        object.__setattr__(self, "p_block", p)

    @property
    def n(self) -> int:
        return self.q_block.shape[0]

    @classmethod
    def vacuum(cls, n: int) -> "BlockCovariance":
        return cls(0.5 * np.eye(n), 0.5 * np.eye(n))

    @classmethod
    def from_full(cls, gamma: np.ndarray) -> "BlockCovariance":
        """Split a 2n x 2n matrix into its diagonal blocks.

        The off-diagonal q-p blocks must vanish.
        """
        gamma = np.asarray(gamma, dtype=float)
        if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1] or gamma.shape[0] % 2:
            raise ValueError(f"expected a 2n x 2n matrix, got {gamma.shape}")
        n = gamma.shape[0] // 2
        if np.abs(gamma[:n, n:]).max(initial=0.0) > SYMMETRY_TOL:
            raise ValueError("matrix has q-p correlations")
        return cls(gamma[:n, :n], gamma[n:, n:])

    def log_det2(self) -> float:
        """log det(2 gamma); zero for a pure state."""
        s1, l1 = np.linalg.slogdet(2.0 * self.q_block)
        s2, l2 = np.linalg.slogdet(2.0 * self.p_block)
        if s1 <= 0 or s2 <= 0:
            return -np.inf
        return float(l1 + l2)

    def is_pure(self, rtol: float = PURITY_RTOL) -> bool:
        return abs(np.expm1(self.log_det2())) <= rtol


def symplectic_form(n: int) -> np.ndarray:
    """Real symplectic form [[0, I], [-I, 0]] for the (q; p) ordering."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def assemble_full(cm: BlockCovariance) -> np.ndarray:
    """Return the 2n x 2n matrix q_block (+) p_block."""
    n = cm.n
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = cm.q_block
    out[n:, n:] = cm.p_block
    return out


def min_uncertainty_eigenvalue(cm: BlockCovariance) -> float:
    """Smallest eigenvalue of the Hermitian matrix gamma + i*Omega/2."""
    gamma = assemble_full(cm)
    herm = gamma + 0.5j * symplectic_form(cm.n)
    return float(np.linalg.eigvalsh(herm)[0])


def validate_quantum(cm: BlockCovariance, tol: float = VALIDITY_TOL) -> bool:
    """True iff the matrix satisfies the uncertainty relation.

    Positivity of gamma + i*Omega/2 with Omega the real symplectic form,
    eigenvalues down to -tol.
    """
    if not isinstance(cm, BlockCovariance):
        raise TypeError("expected a BlockCovariance")
    return min_uncertainty_eigenvalue(cm) >= -tol


# --------------------------------------------------------------------------
# Noise plans and channel configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Markov:
    """Markov noise N_M * M(+-phi) with M_ij(phi) = phi^|i-j|."""

    N: float
    phi: float

    def __post_init__(self):
        if self.N < 0:
            raise ValueError(f"Markov noise variance must be >= 0, got {self.N}")
        if not 0.0 <= self.phi < 1.0:
            raise ValueError(f"Markov correlation must lie in [0, 1), got {self.phi}")


@dataclass(frozen=True)
class NonMarkov:
    """Non-Markovian noise N_N * exp(+-s Omega), Omega the hopping matrix."""

    N: float
    s: float

    def __post_init__(self):
        if self.N < 0:
            raise ValueError(f"non-Markov noise variance must be >= 0, got {self.N}")
        if not np.isfinite(self.s):
            raise ValueError("s must be finite")


@dataclass(frozen=True)
class Gibbs:
    """Thermal harmonic-chain noise built on a nearest-neighbour GMPS.

    ``convention`` selects between the zero-temperature limit equal to the
    GMPS covariance ("normalized") and the matrix exactly as printed, which
    is twice that ("literal").
    """

    beta: float
    phi_chain: float
    convention: Literal["normalized", "literal"] = "normalized"

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not 0.0 <= self.phi_chain < 1.0:
            raise ValueError(f"phi_chain must lie in [0, 1), got {self.phi_chain}")
        if self.convention not in ("normalized", "literal"):
            raise ValueError(f"unknown convention {self.convention!r}")


@dataclass(frozen=True, eq=False)
class Custom:
    """Sampled spectra on a uniform grid over [0, 2pi)."""

    x: np.ndarray
    gamma_q: np.ndarray
    gamma_p: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        q = np.asarray(self.gamma_q, dtype=float)
        p = np.asarray(self.gamma_p, dtype=float)
        if not (x.ndim == q.ndim == p.ndim == 1 and x.size == q.size == p.size):
            raise ValueError("custom spectrum needs three 1-d arrays of equal length")
        if x.size < 3:
            raise ValueError("custom spectrum needs at least 3 samples")
        if q.min() <= 0 or p.min() <= 0:
            raise ValueError("custom spectrum samples must be strictly positive")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "gamma_q", q)
        object.__setattr__(self, "gamma_p", p)


NoisePlan = Union[Markov, NonMarkov, Gibbs, Custom]


@dataclass(frozen=True)
class ChannelConfig:
    """Channel kind, noise model and mean input photon number per use.

    ``noise`` is a noise plan or, for ad-hoc spectra, a QuadratureSpectrum.
    """

    noise: Union[NoisePlan, QuadratureSpectrum]
    nbar: float
    kind: Literal["additive", "lossy"] = "additive"
    eta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("additive", "lossy"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if not self.nbar >= 0:
            raise ValueError(f"nbar must be >= 0, got {self.nbar}")
        if self.kind == "lossy" and isinstance(self.noise, NonMarkov) and self.noise.N < 0.5:
            raise ValueError("lossy channel requires N_N >= 1/2")

    @property
    def kappa(self) -> float:
        return self.eta if self.kind == "lossy" else 1.0

    @property
    def kappa_env(self) -> float:
        return 1.0 - self.eta if self.kind == "lossy" else 1.0
