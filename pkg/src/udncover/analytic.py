"""Analytic coverage-probability engine.

Coverage is assembled from Laplace transforms of the aggregate interference
seen from a serving distance r. For a serving link with Nakagami-m fading
the success probability needs the first m-1 derivatives of that transform;
they are obtained by differentiating the closed-form integrands (one
quadrature per order) and composing through the exponential, never by
finite differences.

All heavy lifting happens on scaled Taylor-style coefficients
``e_j = (-s)^j eta^(j)(s) / j!`` of the log-transform eta, which stay O(1)
even at shape m = 17 and huge arguments s, so the derivative sums are
numerically benign wherever the underlying math is.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import lru_cache as _cache

import numpy as np

from .model import (
    Association,
    FadingModel,
    LosKind,
    LosModel,
    NetworkConfig,
    PathLossModel,
    assoc_kernels,
    plos,
)
from .quadrature import (
    DEFAULT_SPEC,
    QuadSpec,
    integrate_finite,
    integrate_semi_infinite,
)

__all__ = [
    "Scenario",
    "CoverageMethod",
    "CoverageResult",
    "LaplaceEvaluation",
    "OrderTooHigh",
    "FLAG_EXCEEDS_ONE",
    "FLAG_UPPER_BOUND_UNCLAMPED",
    "FLAG_CANCELLATION_LOSS",
    "exp_composition_derivatives",
    "laplace_nlos",
    "laplace_los",
    "laplace_nlos_multislope",
    "laplace_los_multislope",
    "laplace_los_derivatives",
    "los_success_probability",
    "coverage_nlos",
    "coverage",
    "coverage_step_simplified",
    "coverage_low_density_limit",
    "coverage_upper_bound",
    "coverage_multislope",
]

FLAG_EXCEEDS_ONE = "ExceedsOne"
FLAG_UPPER_BOUND_UNCLAMPED = "UpperBoundUnclamped"
FLAG_CANCELLATION_LOSS = "CancellationLoss"

# Numerical slack before a value above 1 is treated as a real exceedance
# rather than quadrature roundoff.
_ONE_SLACK = 1e-9


def _inner_spec(quad: QuadSpec) -> QuadSpec:
    """Tolerances for integrals nested inside an outer one.

    Inner results must be two orders quieter than the outer tolerance or the
    outer adaptive loop stalls on the evaluation noise of its integrand.
    """
    return QuadSpec(
        rel_tol=quad.rel_tol * 1e-2,
        abs_tol=quad.abs_tol * 1e-2,
        max_subdivisions=quad.max_subdivisions,
    )


class OrderTooHigh(ValueError):
    """Requested derivative order exceeds what the fading shape supports."""


@dataclass(frozen=True)
class Scenario:
    """Immutable bundle of everything one coverage evaluation needs."""

    net: NetworkConfig
    path_loss: PathLossModel
    los: LosModel
    fading: FadingModel

    def __post_init__(self):
        if (
            self.net.association is Association.STRONGEST
            and self.path_loss.far_field_exponent <= 2
        ):
            raise ValueError(
                "strongest association needs a far-field path loss exponent > 2; "
                f"got {self.path_loss.far_field_exponent} (the interference "
                "functional diverges otherwise)"
            )

    def kernels(self):
        return assoc_kernels(self.net.association, self.net.density)


class CoverageMethod(enum.Enum):
    EXACT = "exact"
    UPPER_BOUND = "upper_bound"
    LOW_DENSITY_LIMIT = "low_density_limit"


@dataclass(frozen=True)
class CoverageResult:
    pcov: float
    method: CoverageMethod
    quad_error: float
    flag: str | None = None


@dataclass(frozen=True)
class LaplaceEvaluation:
    """One interference Laplace-transform evaluation, conditioned on r."""

    s: float
    r: float
    value: float

    def __post_init__(self):
        if self.s < 0 or self.r < 0:
            raise ValueError("s and r must be >= 0")
        if not 0.0 < self.value <= 1.0 + _ONE_SLACK:
            raise ValueError(f"transform value must lie in (0, 1], got {self.value}")

    @classmethod
    def compute(cls, scn: Scenario, s: float, r: float, los: bool = True):
        value = laplace_los_multislope(scn, s, r) if los else laplace_nlos_multislope(scn, s, r)
        return cls(s=s, r=r, value=value)


# ---------------------------------------------------------------------------
# integrand stacks
#
# All stacks are expressed through x = s * t**-alpha and return the scaled
# rows (s^j / j!) * |kernel derivative| * t, which are uniformly bounded:
# x / (1+x) < 1 regardless of how large s grows.
# ---------------------------------------------------------------------------


def _x_of(t, s, alpha):
    with np.errstate(over="ignore"):
        u = t ** (-alpha)
    return s * u


def _q_of(x):
    """x/(1+x), stable for tiny x (1 - 1/(1+x) loses all digits there)."""
    with np.errstate(invalid="ignore"):
        q = x / (1.0 + x)
    return np.where(np.isinf(x), 1.0, q)


def _geometric_powers(q, k_max):
    """q^1 .. q^k_max, shape (k_max, n)."""
    return np.cumprod(np.broadcast_to(q, (k_max, q.size)), axis=0)


@_cache(maxsize=None)
def _neg_binom_coefs(m, k_max):
    """C(m+j-1, j) for j = 1..k_max as a column vector."""
    out = np.empty(k_max)
    acc = 1.0
    for j in range(1, k_max + 1):
        acc *= (m + j - 1) / j
        out[j - 1] = acc
    return out[:, None]


def _nlos_rows(t, s, alpha, k_max):
    """Rows j=0..k_max of the Rayleigh-interferer kernel stack.

    row 0 = (1 - 1/(1+x)) t; row j = (x/(1+x))^j (1+x)^-1 t. All rows are
    nonnegative and bounded by t.
    """
    x = _x_of(t, s, alpha)
    inv = 1.0 / (1.0 + x)
    q = _q_of(x)
    rows = np.empty((k_max + 1, t.size))
    rows[0] = t * q
    if k_max >= 1:
        rows[1:] = (t * inv) * _geometric_powers(q, k_max)
    return rows


def _gamma_rows(t, s, alpha, m, k_max):
    """Rows for the Nakagami-interferer kernel stack (critical-distance model).

    row 0 = (1 - (1+x/m)^-m) t; row j = C(m+j-1, j) qB^j invB^m t with
    qB = (x/m)/(1+x/m). Nonnegative rows again.
    """
    x = _x_of(t, s, alpha)
    xb = x / m
    invb = 1.0 / (1.0 + xb)
    qb = _q_of(xb)
    rows = np.empty((k_max + 1, t.size))
    rows[0] = -np.expm1(-m * np.log1p(xb)) * t
    if k_max >= 1:
        rows[1:] = _neg_binom_coefs(m, k_max) * _geometric_powers(qb, k_max) * (invb**m * t)
    return rows


def _los_mix_rows(t, s, alpha, m, k_max):
    """Rows of the (Rayleigh - Nakagami) kernel difference stack.

    row j = (s^j/j!) d^j/ds^j [1/(1+x) - (1+x/m)^-m] t up to the uniform
    sign (-1)^j. Rows 0 and 1 cancel at leading order for small x and use
    expm1/log1p forms there.
    """
    x = _x_of(t, s, alpha)
    inv = 1.0 / (1.0 + x)
    q = _q_of(x)
    xb = x / m
    invb = 1.0 / (1.0 + xb)
    qb = _q_of(xb)
    invb_m = invb**m

    # a_j = x^j (1+x)^-(j+1), b_j = C(m+j-1, j) qB^j invB^m, rows = (a - b) t
    rows = np.empty((k_max + 1, t.size))
    rows[0] = inv - invb_m
    if k_max >= 1:
        a = inv * _geometric_powers(q, k_max)
        b = _neg_binom_coefs(m, k_max) * _geometric_powers(qb, k_max) * invb_m
        rows[1:] = a - b

    # rows 0 and 1 lose all digits for small x; rewrite through expm1
    small = x < 1.0
    if np.any(small):
        xs, xbs = x[small], xb[small]
        l1, l1b = np.log1p(xs), np.log1p(xbs)
        rows[0][small] = invb_m[small] * np.expm1(m * l1b - l1)
        if k_max >= 1:
            y1 = invb_m[small] * invb[small]
            rows[1][small] = xs * y1 * np.expm1((m + 1) * l1b - 2.0 * l1)
    return rows * t


def _los_support(los: LosModel):
    """Upper end of the LOS-probability support (inf if unbounded)."""
    if los.kind is LosKind.STEP:
        return los.d
    if los.kind is LosKind.NONE:
        return 0.0
    return math.inf


def _segments(pl: PathLossModel, lower: float):
    """Path loss segments intersected with [lower, inf)."""
    out = []
    for lo, hi, alpha in pl.segment_bounds():
        lo = max(lo, lower)
        if hi > lo:
            out.append((lo, hi, alpha))
    return out


def _stack_integral(rows_fn, lo, hi, alpha, quad, breakpoints=()):
    """Integrate a row stack on [lo, hi], hi possibly inf."""
    if math.isinf(hi):
        return integrate_semi_infinite(
            rows_fn, lo, quad, tail_decay_hint=alpha, breakpoints=breakpoints
        )
    val, err = integrate_finite(rows_fn, lo, hi, quad, breakpoints=breakpoints)
    return val, err


def _log_laplace_coeffs(scn, s, r, k_max, quad, include_los, include_noise):
    """Scaled coefficients e_j = (-s)^j eta^(j)(s)/j!, j = 0..k_max.

    eta is the log of the interference Laplace transform conditioned on the
    serving distance r (interferers beyond nu(r)), for the configured path
    loss and, when include_los is set, the LOS/NLOS propagation mixture.
    include_noise folds the additive-noise factor exp(-s sigma2) in.
    """
    e = np.zeros(k_max + 1)
    if s < 0:
        raise ValueError(f"Laplace argument must be >= 0, got {s}")
    if s > 0:
        _, nu = scn.kernels()
        lower = float(nu(r))
        two_pi_l = 2.0 * math.pi * scn.net.density
        m = scn.fading.m
        los_hi = _los_support(scn.los)
        los_breaks = scn.los.breakpoints()

        for lo, hi, alpha in _segments(scn.path_loss, lower):
            # the mixture correction rows share nodes with the Rayleigh rows,
            # so both kernels ride one adaptive pass per segment
            with_mix = (
                include_los
                and m > 1
                and scn.los.kind is not LosKind.NONE
                and los_hi > lo
            )

            def stack(t, a=alpha, mix=with_mix):
                rows = _nlos_rows(t, s, a, k_max)
                if not mix:
                    return rows
                mix_rows = _los_mix_rows(t, s, a, m, k_max) * plos(scn.los, t)
                return np.concatenate([rows, mix_rows])

            bks = [b for b in los_breaks if lo < b < hi] if with_mix else ()
            val, _ = _stack_integral(stack, lo, hi, alpha, quad, breakpoints=bks)
            val = np.atleast_1d(val)
            e[0] -= two_pi_l * val[0]
            e[1:] += two_pi_l * val[1 : k_max + 1]
            if with_mix:
                e -= two_pi_l * val[k_max + 1 :]

    if include_noise and scn.net.sigma2 > 0.0:
        e[0] -= s * scn.net.sigma2
        if k_max >= 1:
            e[1] += s * scn.net.sigma2
    return e


def _log_laplace_coeffs_step(scn, s, r, k_max, quad, include_noise):
    """Scaled coefficients of the critical-distance (step LOS) transform.

    Interferers inside the critical distance d are all LOS (Nakagami kernel
    on [nu(r), d]), everything beyond is NLOS (Rayleigh kernel on [d, inf)).
    Single-slope path loss.
    """
    e = np.zeros(k_max + 1)
    if s > 0:
        _, nu = scn.kernels()
        lower = float(nu(r))
        alpha = scn.path_loss.exponents[0]
        two_pi_l = 2.0 * math.pi * scn.net.density
        m = scn.fading.m
        d = scn.los.d

        if d > lower:
            val, _ = integrate_finite(
                lambda t: _gamma_rows(t, s, alpha, m, k_max), lower, d, quad
            )
            val = np.atleast_1d(val)
            e[0] -= two_pi_l * val[0]
            e[1:] += two_pi_l * val[1:]

        tail_from = max(d, lower)
        val, _ = integrate_semi_infinite(
            lambda t: _nlos_rows(t, s, alpha, k_max), tail_from, quad, tail_decay_hint=alpha
        )
        val = np.atleast_1d(val)
        e[0] -= two_pi_l * val[0]
        e[1:] += two_pi_l * val[1:]

    if include_noise and scn.net.sigma2 > 0.0:
        e[0] -= s * scn.net.sigma2
        if k_max >= 1:
            e[1] += s * scn.net.sigma2
    return e


# ---------------------------------------------------------------------------
# derivative composition
# ---------------------------------------------------------------------------


def exp_composition_derivatives(log_derivs):
    """Derivatives of L = exp(eta) from derivatives of eta.

    Given eta(s), eta'(s), ..., eta^(K)(s), returns L(s), L'(s), ..., L^(K)(s)
    via L^(k) = sum_j C(k-1, j) eta^(j+1) L^(k-1-j). This is the seam used to
    validate the recursion against hand-checkable synthetic logs.
    """
    eta = np.asarray(log_derivs, dtype=float)
    out = np.empty_like(eta)
    out[0] = math.exp(eta[0])
    for k in range(1, eta.size):
        out[k] = math.fsum(
            math.comb(k - 1, j) * eta[j + 1] * out[k - 1 - j] for j in range(k)
        )
    return out


def _partial_exp_sum(e):
    """sum_{k<m} (-s)^k/k! L^(k)(s) from the scaled coefficients e_j.

    Uses the power-series exponential recursion on T_k = (-s)^k L^(k)/k!:
    T_0 = exp(e_0), T_k = (1/k) sum_{i=1..k} i e_i T_{k-i}. Every T_k is a
    probability mass term, so the sum lands in [0, 1].
    """
    k_max = e.size - 1
    t = np.empty(k_max + 1)
    t[0] = math.exp(e[0])
    for k in range(1, k_max + 1):
        t[k] = math.fsum(i * e[i] * t[k - i] for i in range(1, k + 1)) / k
    return min(1.0, max(0.0, math.fsum(t)))


def _scaled_to_plain(e, s):
    """Convert e_j = (-s)^j eta^(j)/j! back to plain eta^(j)."""
    out = np.empty_like(e)
    sign = 1.0
    fact = 1.0
    spow = 1.0
    for j in range(e.size):
        if j > 0:
            sign = -sign
            fact *= j
            spow *= s
        out[j] = sign * fact * e[j] / spow
    return out


# ---------------------------------------------------------------------------
# Laplace transform surface
# ---------------------------------------------------------------------------


def _require_single_slope(scn, what):
    if scn.path_loss.n_slopes != 1:
        raise ValueError(
            f"{what} handles single-slope path loss only; "
            "use the multislope variant"
        )


def laplace_nlos(scn: Scenario, s: float, r: float) -> float:
    """Interference Laplace transform with all interferers NLOS (Rayleigh).

    Conditioned on serving distance r: interferers live beyond nu(r).
    Single-slope path loss.
    """
    _require_single_slope(scn, "laplace_nlos")
    return laplace_nlos_multislope(scn, s, r)


def laplace_los(scn: Scenario, s: float, r: float) -> float:
    """Interference Laplace transform with the LOS/NLOS propagation mixture."""
    _require_single_slope(scn, "laplace_los")
    return laplace_los_multislope(scn, s, r)


def laplace_nlos_multislope(scn: Scenario, s: float, r: float, quad: QuadSpec = DEFAULT_SPEC) -> float:
    """NLOS-only transform under the configured (possibly piecewise) path loss."""
    e = _log_laplace_coeffs(scn, s, r, 0, quad, include_los=False, include_noise=False)
    return math.exp(e[0])


def laplace_los_multislope(scn: Scenario, s: float, r: float, quad: QuadSpec = DEFAULT_SPEC) -> float:
    """Mixture transform under the configured (possibly piecewise) path loss."""
    e = _log_laplace_coeffs(scn, s, r, 0, quad, include_los=True, include_noise=False)
    return math.exp(e[0])


def laplace_los_derivatives(
    scn: Scenario, s: float, r: float, k_max: int, quad: QuadSpec = DEFAULT_SPEC
) -> np.ndarray:
    """d^k/ds^k of the mixture transform for k = 0..k_max.

    k_max must stay below the Nakagami shape m (higher orders are never
    needed and the evaluation order is tied to m). s must be positive.
    """
    if k_max >= scn.fading.m:
        raise OrderTooHigh(
            f"k_max = {k_max} but fading shape m = {scn.fading.m} "
            "supports orders 0..m-1 only"
        )
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if s <= 0:
        raise ValueError(f"derivatives need s > 0, got {s}")
    e = _log_laplace_coeffs(scn, s, r, k_max, quad, include_los=True, include_noise=False)
    return exp_composition_derivatives(_scaled_to_plain(e, s))


def los_success_probability(scn: Scenario, z: float, r: float, quad: QuadSpec = DEFAULT_SPEC) -> float:
    """Probability that a LOS (Nakagami-m) serving link at distance r beats z.

    Equals the interference expectation of the Gamma power-gain ccdf at z*I,
    i.e. sum_{k<m} (-s)^k/k! L^(k)(s) evaluated at s = m z. Includes the
    noise factor when the scenario runs with sigma2 > 0.
    """
    if z < 0:
        raise ValueError(f"threshold argument must be >= 0, got {z}")
    if z == 0.0:
        return 1.0
    m = scn.fading.m
    e = _log_laplace_coeffs(scn, m * z, r, m - 1, quad, include_los=True, include_noise=True)
    return _partial_exp_sum(e)


def _step_success_probability(scn, z, r, quad):
    """Same as los_success_probability but on the step-LOS transform."""
    if z == 0.0:
        return 1.0
    m = scn.fading.m
    e = _log_laplace_coeffs_step(scn, m * z, r, m - 1, quad, include_noise=True)
    return _partial_exp_sum(e)


def _step_log_transform_many(scn, s_values, r, quad):
    """log of the step-LOS transform at a whole vector of arguments.

    One stacked quadrature pass per range instead of one adaptive run per
    argument; used by the derivative-free bound, which needs the transform
    at m arguments per serving distance.
    """
    _, nu = scn.kernels()
    lower = float(nu(r))
    alpha = scn.path_loss.exponents[0]
    two_pi_l = 2.0 * math.pi * scn.net.density
    m = scn.fading.m
    d = scn.los.d
    sv = np.asarray(s_values, dtype=float)[:, None]
    out = np.zeros(sv.size)

    def annulus(t):
        xb = _x_of(t, 1.0, alpha) * (sv / m)
        return -np.expm1(-m * np.log1p(xb)) * t

    def tail(t):
        x = _x_of(t, 1.0, alpha) * sv
        return t * _q_of(x)

    if d > lower:
        val, _ = integrate_finite(annulus, lower, d, quad)
        out -= two_pi_l * np.atleast_1d(val)
    val, _ = integrate_semi_infinite(tail, max(d, lower), quad, tail_decay_hint=alpha)
    out -= two_pi_l * np.atleast_1d(val)
    return out


def _nlos_success_probability(scn, z, r, quad):
    """Rayleigh serving-link success probability (noise factor included)."""
    e = _log_laplace_coeffs(scn, z, r, 0, quad, include_los=False, include_noise=True)
    return math.exp(e[0])


# ---------------------------------------------------------------------------
# outer integrals over the serving distance
# ---------------------------------------------------------------------------

# exp(-40) ~ 4e-18: truncating Gaussian-type serving-distance kernels at this
# exponent leaves an error far below every tolerance in use.
_TRUNC_EXPONENT = 40.0


def _nlos_interference_scale(alpha):
    """Closed-form constant for the NLOS interference exponent s^(2/alpha)."""
    return (math.pi / alpha) / math.sin(2.0 * math.pi / alpha)


def _outer_upper(scn):
    """Serving-distance truncation radius for the outer integrals."""
    lam = scn.net.density
    if scn.net.association is Association.CLOSEST:
        # nearest-neighbor kernel exp(-pi lam r^2)
        return math.sqrt(_TRUNC_EXPONENT / (math.pi * lam))
    # strongest: every transform is bounded by the far-field NLOS one, whose
    # exponent grows like 2 pi lam c_a theta^(2/a) r^2 minus a near-field term
    alpha = scn.path_loss.far_field_exponent
    c = _nlos_interference_scale(alpha)
    theta = scn.net.theta
    r_near = scn.path_loss.transitions[-1] if scn.path_loss.transitions else 0.0
    r2 = (_TRUNC_EXPONENT + math.pi * lam * r_near**2) / (
        2.0 * math.pi * lam * c * theta ** (2.0 / alpha)
    )
    return max(math.sqrt(r2), 2.0 * r_near + 1.0)


def _integrate_serving(scn, g, quad, lo=0.0, hi=None, breakpoints=()):
    """Integrate g(r) (scalar) against the serving-distance measure layout.

    Truncates at the association-specific radius where the integrand has
    provably decayed below everything representable.
    """
    upper = _outer_upper(scn) if hi is None else hi
    if upper <= lo:
        return 0.0, 0.0
    bks = [b for b in breakpoints if lo < b < upper]

    def f(r):
        return np.array([g(float(ri)) for ri in np.atleast_1d(r)])

    return integrate_finite(f, lo, upper, quad, breakpoints=bks)


def _outer_breakpoints(scn):
    return tuple(scn.path_loss.transitions) + scn.los.breakpoints()


def _finish(scn, pcov, err, method=CoverageMethod.EXACT):
    """Clamp roundoff overshoot, flag genuine exceedance (strongest, theta<1)."""
    flag = None
    if pcov > 1.0:
        if pcov <= 1.0 + _ONE_SLACK or scn.net.association is Association.CLOSEST:
            pcov = 1.0
        else:
            flag = FLAG_EXCEEDS_ONE
    pcov = max(0.0, pcov)
    return CoverageResult(pcov=pcov, method=method, quad_error=err, flag=flag)


def coverage_nlos(scn: Scenario, quad: QuadSpec = DEFAULT_SPEC) -> CoverageResult:
    """Coverage probability with NLOS (Rayleigh) propagation everywhere."""
    phi, _ = scn.kernels()
    theta = scn.net.theta
    inner = _inner_spec(quad)

    def g(r):
        s = theta / float(scn.path_loss.gain(r))
        return _nlos_success_probability(scn, s, r, inner) * phi(r)

    val, err = _integrate_serving(scn, g, quad, breakpoints=_outer_breakpoints(scn))
    return _finish(scn, val, err)


def _coverage_general(scn: Scenario, quad: QuadSpec) -> CoverageResult:
    """Mixture coverage for any number of path loss slopes.

    NLOS baseline plus the LOS correction weighted by the LOS probability of
    the serving link; the serving-link argument uses the segment exponent of
    the serving distance.
    """
    base = coverage_nlos(scn, quad)
    if scn.los.kind is LosKind.NONE:
        return base

    phi, _ = scn.kernels()
    theta = scn.net.theta
    inner = _inner_spec(quad)

    def corr(r):
        p = float(plos(scn.los, r))
        if p == 0.0:
            return 0.0
        z = theta / float(scn.path_loss.gain(r))
        up = los_success_probability(scn, z, r, inner)
        nl = _nlos_success_probability(scn, z, r, inner)
        return p * (up - nl) * phi(r)

    hi_support = _los_support(scn.los)
    val, err = _integrate_serving(
        scn,
        corr,
        quad,
        hi=None if math.isinf(hi_support) else min(hi_support, _outer_upper(scn)),
        breakpoints=_outer_breakpoints(scn),
    )
    return _finish(scn, base.pcov + val, base.quad_error + err)


def coverage(scn: Scenario, quad: QuadSpec = DEFAULT_SPEC) -> CoverageResult:
    """Coverage probability under the LOS/NLOS mixture (single-slope)."""
    _require_single_slope(scn, "coverage")
    return _coverage_general(scn, quad)


def coverage_multislope(scn: Scenario, quad: QuadSpec = DEFAULT_SPEC) -> CoverageResult:
    """Coverage probability under the LOS/NLOS mixture, any slope count."""
    return _coverage_general(scn, quad)


def _require_step(scn, what):
    if scn.los.kind is not LosKind.STEP:
        raise ValueError(f"{what} requires the step (critical-distance) LOS model")


def coverage_step_simplified(scn: Scenario, quad: QuadSpec = DEFAULT_SPEC) -> CoverageResult:
    """Coverage under the critical-distance LOS model, decomposed at d.

    Serving links beyond d are NLOS against NLOS-only interference; serving
    links inside d are LOS against the step-mixture transform (Nakagami
    interferers inside d, Rayleigh beyond). Same value as the general
    route with a step LOS model, via a cheaper integral decomposition.
    """
    _require_single_slope(scn, "coverage_step_simplified")
    _require_step(scn, "coverage_step_simplified")
    phi, _ = scn.kernels()
    theta = scn.net.theta
    alpha = scn.path_loss.exponents[0]
    d = scn.los.d
    inner = _inner_spec(quad)

    def g_far(r):
        return _nlos_success_probability(scn, theta * r**alpha, r, inner) * phi(r)

    far, err_far = _integrate_serving(scn, g_far, quad, lo=d)

    def g_near(r):
        return _step_success_probability(scn, theta * r**alpha, r, inner) * phi(r)

    near, err_near = _integrate_serving(scn, g_near, quad, lo=0.0, hi=min(d, _outer_upper(scn)))
    return _finish(scn, far + near, err_far + err_near)


def coverage_low_density_limit(scn: Scenario, quad: QuadSpec = DEFAULT_SPEC) -> CoverageResult:
    """Vanishing-density limit of the step-model coverage: the NLOS value."""
    res = coverage_nlos(scn, quad)
    return replace(res, method=CoverageMethod.LOW_DENSITY_LIMIT)


def coverage_upper_bound(scn: Scenario, quad: QuadSpec = DEFAULT_SPEC) -> CoverageResult:
    """Derivative-free upper bound on the step-model coverage.

    Replaces the m-term derivative sum with an alternating binomial
    combination of plain transform evaluations at inflated arguments
    c k m theta r^alpha, c = Gamma(m+1)^(-1/m). Coincides with the exact
    value at m = 1 and dominates it otherwise.
    """
    _require_single_slope(scn, "coverage_upper_bound")
    _require_step(scn, "coverage_upper_bound")
    phi, _ = scn.kernels()
    m = scn.fading.m
    theta = scn.net.theta
    alpha = scn.path_loss.exponents[0]
    sigma2 = scn.net.sigma2
    d = scn.los.d
    c = math.exp(-math.lgamma(m + 1) / m)
    binoms = [math.comb(m, k) for k in range(m + 1)]
    cancellation = False
    inner = _inner_spec(quad)

    def g_far(r):
        return _nlos_success_probability(scn, theta * r**alpha, r, inner) * phi(r)

    far, err_far = _integrate_serving(scn, g_far, quad, lo=d)

    def g_near(r):
        nonlocal cancellation
        base = c * m * theta * r**alpha
        s_values = base * np.arange(1, m + 1)
        logs = _step_log_transform_many(scn, s_values, r, inner) - s_values * sigma2
        terms = [
            (-1.0) ** (k + 1) * binoms[k] * math.exp(logs[k - 1]) for k in range(1, m + 1)
        ]
        total = math.fsum(terms)
        if abs(total) < 1e-10 * max(abs(v) for v in terms):
            cancellation = True
        return total * phi(r)

    near, err_near = _integrate_serving(scn, g_near, quad, lo=0.0, hi=min(d, _outer_upper(scn)))

    pcov = far + near
    err = err_far + err_near
    flag = None
    if pcov > 1.0 + _ONE_SLACK:
        flag = FLAG_UPPER_BOUND_UNCLAMPED
    elif pcov > 1.0:
        pcov = 1.0
    if cancellation:
        flag = FLAG_CANCELLATION_LOSS if flag is None else f"{flag}+{FLAG_CANCELLATION_LOSS}"
    return CoverageResult(
        pcov=max(0.0, pcov),
        method=CoverageMethod.UPPER_BOUND,
        quad_error=err,
        flag=flag,
    )
