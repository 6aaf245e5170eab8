"""Domain types and closed-form scalar functions shared by both engines.

Everything here is a pure function of immutable value types: network
parameters, path loss, distance-dependent LOS probability and the
Nakagami/Rayleigh fading laws. The analytic engine and the Monte Carlo
simulator both build on these primitives, so they live in one place.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Association",
    "NetworkConfig",
    "PathLossModel",
    "LosKind",
    "LosModel",
    "FadingModel",
    "plos",
    "m_from_k",
    "gamma_ccdf",
    "pathloss",
    "assoc_kernels",
]


class Association(enum.Enum):
    """Serving-BS selection rule."""

    CLOSEST = "closest"
    STRONGEST = "strongest"


@dataclass(frozen=True)
class NetworkConfig:
    """Full parameterization of one experiment cell.

    density      BS density in BS/m^2 (> 0)
    theta        SIR/SINR threshold, linear (> 0)
    association  serving-BS selection rule
    sigma2       noise power, linear; 0 means interference-limited (SIR)
    """

    density: float
    theta: float
    association: Association
    sigma2: float = 0.0

    def __post_init__(self):
        if not self.density > 0:
            raise ValueError(f"density must be > 0, got {self.density}")
        if not self.theta > 0:
            raise ValueError(f"theta must be > 0, got {self.theta}")
        if self.sigma2 < 0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")
        if not isinstance(self.association, Association):
            raise TypeError("association must be an Association")


@dataclass(frozen=True)
class PathLossModel:
    """Piecewise power-law path loss.

    ``gain(r) = r**-exponents[n]`` for r in the n-th segment. Segment n
    covers ``[transitions[n-1], transitions[n])`` with implicit bounds 0 and
    infinity, i.e. segments are left-closed; the boundary belongs to the
    outer segment. A single exponent with no transitions is the standard
    single-slope model.
    """

    exponents: tuple[float, ...]
    transitions: tuple[float, ...] = ()

    def __post_init__(self):
        exps = tuple(float(a) for a in self.exponents)
        trans = tuple(float(t) for t in self.transitions)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "transitions", trans)
        if len(exps) < 1:
            raise ValueError("need at least one path loss exponent")
        if len(trans) != len(exps) - 1:
            raise ValueError(
                f"{len(exps)} exponents need {len(exps) - 1} transition distances, "
                f"got {len(trans)}"
            )
        if any(a <= 0 for a in exps):
            raise ValueError("path loss exponents must be positive")
        if any(t <= 0 for t in trans):
            raise ValueError("transition distances must be positive")
        if any(t2 <= t1 for t1, t2 in zip(trans, trans[1:])):
            raise ValueError("transition distances must be strictly increasing")

    @classmethod
    def single_slope(cls, alpha: float) -> "PathLossModel":
        return cls(exponents=(alpha,))

    @property
    def n_slopes(self) -> int:
        return len(self.exponents)

    @property
    def far_field_exponent(self) -> float:
        return self.exponents[-1]

    def segment_index(self, r):
        """Index of the segment containing r (left-closed intervals)."""
        return np.searchsorted(np.asarray(self.transitions), r, side="right")

    def segment_bounds(self):
        """Yield (lower, upper, exponent) per segment; last upper is inf."""
        edges = (0.0,) + self.transitions + (math.inf,)
        for n, alpha in enumerate(self.exponents):
            yield edges[n], edges[n + 1], alpha

    def gain(self, r):
        """Path gain ``r**-alpha_n``; vectorized, r > 0 required."""
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise ValueError("path loss is singular at r = 0; r must be > 0")
        if self.n_slopes == 1:
            return r ** (-self.exponents[0])
        alpha = np.asarray(self.exponents)[self.segment_index(r)]
        return r ** (-alpha)


class LosKind(enum.Enum):
    NONE = "none"
    CONSTANT = "constant"
    UMI = "umi"
    STEP = "step"


@dataclass(frozen=True)
class LosModel:
    """Distance-dependent LOS probability.

    Kinds:
      none        p(r) = 0 everywhere
      constant    p(r) = p
      umi         urban-microcell law min(d1/r, 1)(1 - exp(-r/d2)) + exp(-r/d2)
      step        p(r) = 1 for r <= d, else 0
    """

    kind: LosKind
    p: float = 0.0
    d1: float = 18.0
    d2: float = 36.0
    d: float = 0.0

    def __post_init__(self):
        if self.kind is LosKind.CONSTANT and not 0.0 <= self.p <= 1.0:
            raise ValueError(f"constant LOS probability must be in [0, 1], got {self.p}")
        if self.kind is LosKind.UMI and (self.d1 <= 0 or self.d2 <= 0):
            raise ValueError("umi distances d1, d2 must be positive")
        if self.kind is LosKind.STEP and self.d <= 0:
            raise ValueError("step critical distance must be positive")

    @classmethod
    def none(cls) -> "LosModel":
        return cls(kind=LosKind.NONE)

    @classmethod
    def constant(cls, p: float) -> "LosModel":
        return cls(kind=LosKind.CONSTANT, p=p)

    @classmethod
    def umi(cls, d1: float = 18.0, d2: float = 36.0) -> "LosModel":
        return cls(kind=LosKind.UMI, d1=d1, d2=d2)

    @classmethod
    def step(cls, d: float) -> "LosModel":
        return cls(kind=LosKind.STEP, d=d)

    def breakpoints(self) -> tuple[float, ...]:
        """Distances where p(r) is non-smooth; integration splits there."""
        if self.kind is LosKind.UMI:
            return (self.d1,)
        if self.kind is LosKind.STEP:
            return (self.d,)
        return ()

    def reach(self) -> float:
        """Largest distance parameter of the model, 0 if distance-free."""
        if self.kind is LosKind.UMI:
            return max(self.d1, self.d2)
        if self.kind is LosKind.STEP:
            return self.d
        return 0.0


def plos(model: LosModel, r):
    """LOS probability at distance r (>= 0); vectorized."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("distance must be >= 0")
    if model.kind is LosKind.NONE:
        out = np.zeros_like(r)
    elif model.kind is LosKind.CONSTANT:
        out = np.full_like(r, model.p)
    elif model.kind is LosKind.STEP:
        out = np.where(r <= model.d, 1.0, 0.0)
    else:
        # r = 0 is covered by the r <= d1 branch, so guard the division only.
        safe_r = np.where(r > 0, r, 1.0)
        e = np.exp(-safe_r / model.d2)
        frac = np.minimum(model.d1 / safe_r, 1.0)
        out = np.where(r <= model.d1, 1.0, frac * (1.0 - e) + e)
    return out if out.ndim else float(out)


def m_from_k(k_linear: float) -> int:
    """Nakagami shape from a Ricean K-factor (linear, >= 0).

    Rounds (K+1)^2 / (2K+1) half-up to an integer and clamps to >= 1, so the
    K = 0 (pure scattering) case degenerates to Rayleigh.
    """
    if k_linear < 0:
        raise ValueError(f"K-factor must be >= 0, got {k_linear}")
    m_real = (k_linear + 1.0) ** 2 / (2.0 * k_linear + 1.0)
    return max(1, math.floor(m_real + 0.5))


def gamma_ccdf(m: int, z: float) -> float:
    """Complementary cdf of a unit-mean Gamma(m, 1/m) power gain.

    Equals exp(-m z) * sum_{k<m} (m z)^k / k!, evaluated with a running-term
    recurrence; falls back to log-space accumulation when exp(-m z) would
    underflow prematurely.
    """
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ValueError(f"shape m must be an integer >= 1, got {m}")
    if z < 0:
        raise ValueError(f"power gain must be >= 0, got {z}")
    mz = m * z
    if mz == 0.0:
        return 1.0
    if mz < 700.0:
        term = 1.0
        total = 1.0
        for k in range(1, m):
            term *= mz / k
            total += term
        return math.exp(-mz) * total
    # log-space: logsumexp over k log(mz) - lgamma(k+1), shifted by -mz
    logs = [k * math.log(mz) - math.lgamma(k + 1) for k in range(m)]
    peak = max(logs)
    acc = sum(math.exp(v - peak) for v in logs)
    out = -mz + peak + math.log(acc)
    return math.exp(out) if out > -745.0 else 0.0


def pathloss(model: PathLossModel, r):
    """Path gain at distance r > 0; boundary r = R_n joins segment n."""
    return model.gain(r)


def assoc_kernels(policy: Association, density: float):
    """Association kernel pair (phi, nu).

    phi(r) is the weight density in the serving-distance integrals and nu(r)
    the lower interference limit given serving distance r: the closest rule
    weighs by the nearest-neighbor pdf and excludes interferers inside r,
    while the strongest rule weighs all distances and excludes nothing.
    """
    if density <= 0:
        raise ValueError(f"density must be > 0, got {density}")
    if policy is Association.CLOSEST:

        def phi(r):
            r = np.asarray(r, dtype=float)
            out = 2.0 * math.pi * density * r * np.exp(-math.pi * density * r * r)
            return out if out.ndim else float(out)

        def nu(r):
            return r

    else:

        def phi(r):
            r = np.asarray(r, dtype=float)
            out = 2.0 * math.pi * density * r
            return out if out.ndim else float(out)

        def nu(r):
            return 0.0 * r if isinstance(r, np.ndarray) else 0.0

    return phi, nu


@dataclass(frozen=True)
class FadingModel:
    """Small-scale fading laws for the two propagation states.

    NLOS links are Rayleigh (exponential power gain, unit mean). LOS links
    are Nakagami-m (Gamma(m, 1/m) power gain, unit mean) with integer
    shape m >= 1; m = 1 makes both states coincide. The shape is usually
    derived from a Ricean K-factor via :func:`m_from_k`.
    """

    m: int
    k_factor: float | None = None

    def __post_init__(self):
        if not (isinstance(self.m, (int, np.integer)) and self.m >= 1):
            raise ValueError(f"Nakagami shape must be an integer >= 1, got {self.m}")
        object.__setattr__(self, "m", int(self.m))

    @classmethod
    def from_k_factor(cls, k_linear: float) -> "FadingModel":
        return cls(m=m_from_k(k_linear), k_factor=k_linear)

    def los_ccdf(self, z: float) -> float:
        return gamma_ccdf(self.m, z)

    def nlos_ccdf(self, z: float) -> float:
        return gamma_ccdf(1, z)
