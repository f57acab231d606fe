"""Convexity classification of the FBC rate curve and its concave surrogate.

With a = Q^{-1}(eps)/sqrt(m), the rate constraint in nats reads
f(x) = ln(1+x) - a*sqrt(x(x+2))/(x+1) = N*ln2/m. f is convex on
[g^{-1}(a), g2^{-1}(a)] and concave above when a <= beta = g(x0), and
concave on its whole domain otherwise. The surrogate f_modified replaces
the convex part by the tangent at g2^{-1}(a), which makes the SINR needed
for N bits convex in N.
"""
import functools
import logging
import math
from typing import Dict, Iterable, List, Tuple

import numpy as np
from scipy import optimize

from ..models.fbc import ApproxContext
from .fbc import LN2, FbcDomainError, ArrayLike, _as_output, q_inv

ROOT_TOL = 1e-10
DEFAULT_APPROX_CAP = 1e30
_RTOL = 4.0 * np.finfo(float).eps


class InvalidContextError(ValueError):
    """Exception raised when a bound is requested on a curve without convex segment."""


class InfeasibleRateError(ValueError):
    """Exception raised when a rate demand needs an SINR above the cap."""


def _g(x: float) -> float:
    return (x + 1.0) * math.log1p(x) / math.sqrt(x * (x + 2.0))


def _g2(x: float) -> float:
    s = x * (x + 2.0)
    return (x + 1.0) * s * math.sqrt(s) / (3.0 * x * x + 6.0 * x + 1.0)


def boundary_funcs(x: float) -> Tuple[float, float, float]:
    """Boundary functions (g, g1, g2) of the convexity classification.

    Args:
        x (float): The SINR, strictly positive.

    Returns:
        Tuple[float, float, float]: g(x), g1(x) and g2(x).

    Raises:
        FbcDomainError: If x <= 0.
    """
    if x <= 0.0:
        raise FbcDomainError(f"Invalid SINR: {x} (must be positive)")
    g1 = (x + 1.0) * math.sqrt(x * (x + 2.0))
    return _g(x), g1, _g2(x)


@functools.lru_cache(maxsize=None)
def critical_point() -> Tuple[float, float]:
    """Positive root x0 of g2(x) = g(x) and the threshold beta = g(x0)."""
    lo, hi = 1e-3, 2.0
    gap = lambda x: _g2(x) - _g(x)
    if not gap(lo) < 0.0 < gap(hi):
        raise RuntimeError(f"No sign change of g2 - g on [{lo}, {hi}]")
    x0 = optimize.bisect(gap, lo, hi, xtol=ROOT_TOL)
    return x0, _g(x0)


def _increasing_inverse(func, level: float) -> float:
    # func is strictly increasing on (0, inf) and vanishes at 0
    lo = 1e-15
    if func(lo) >= level:
        return lo
    hi = 1.0
    while func(hi) < level:
        hi *= 2.0
    return optimize.bisect(lambda x: func(x) - level, lo, hi, xtol=ROOT_TOL)


def f_exact(x: ArrayLike, a: float) -> ArrayLike:
    x = np.asarray(x, dtype=float)
    return _as_output(np.log1p(x) - a * np.sqrt(x * (x + 2.0)) / (x + 1.0))


def f_derivative(x: ArrayLike, a: float) -> ArrayLike:
    x = np.asarray(x, dtype=float)
    return _as_output(1.0 / (x + 1.0) - a / ((x + 1.0) ** 2 * np.sqrt(x * (x + 2.0))))


def f_second_derivative(x: ArrayLike, a: float) -> ArrayLike:
    x = np.asarray(x, dtype=float)
    s = x * (x + 2.0)
    value = -1.0 / (x + 1.0) ** 2 + a * (2.0 * s + (x + 1.0) ** 2) / ((x + 1.0) ** 3 * s ** 1.5)
    return _as_output(value)


def dispersion_scale(m: float, error_prob: float) -> float:
    """The dispersion scale a = Q^{-1}(eps)/sqrt(m) of the nat-form rate curve."""
    return q_inv(error_prob) / math.sqrt(m)


def context_for_scale(a: float) -> ApproxContext:
    """Compute the breakpoints of the rate curve for dispersion scale a."""
    if a < 0.0:
        raise FbcDomainError(f"Invalid dispersion scale: {a}")
    x0, beta = critical_point()
    if a == 0.0:
        return ApproxContext(a=0.0, beta=beta, x0=x0, x_lo=0.0, x_mid=0.0,
                             f_mid=0.0, slope_mid=1.0, x_zero=0.0)
    x_lo = _increasing_inverse(_g, a)
    if a > beta:
        return ApproxContext(a=a, beta=beta, x0=x0, x_lo=x_lo)
    x_mid = _increasing_inverse(_g2, a)
    f_mid = float(f_exact(x_mid, a))
    slope_mid = float(f_derivative(x_mid, a))
    return ApproxContext(a=a, beta=beta, x0=x0, x_lo=x_lo, x_mid=x_mid, f_mid=f_mid,
                         slope_mid=slope_mid, x_zero=x_mid - f_mid / slope_mid)


@functools.lru_cache(maxsize=8192)
def approx_context(m: float, error_prob: float) -> ApproxContext:
    return context_for_scale(dispersion_scale(m, error_prob))


def _require_convex_segment(ctx: ApproxContext):
    if not ctx.has_convex_segment:
        raise InvalidContextError(f"Invalid context: a={ctx.a} exceeds beta={ctx.beta}, no convex segment")


def f_lower(x: ArrayLike, ctx: ApproxContext) -> ArrayLike:
    """Tangent of the rate curve at x_mid, a lower bound on the convex segment."""
    _require_convex_segment(ctx)
    x = np.asarray(x, dtype=float)
    return _as_output(ctx.slope_mid * (x - ctx.x_mid) + ctx.f_mid)


def f_upper(x: ArrayLike, ctx: ApproxContext) -> ArrayLike:
    """Chord from (x_lo, 0) to (x_mid, f(x_mid)), an upper bound on the convex segment."""
    _require_convex_segment(ctx)
    x = np.asarray(x, dtype=float)
    span = ctx.x_mid - ctx.x_lo
    if span <= 0.0:
        return _as_output(np.full(x.shape, ctx.f_mid))
    return _as_output(ctx.f_mid * (x - ctx.x_lo) / span)


def f_modified(x: ArrayLike, ctx: ApproxContext) -> ArrayLike:
    """Concave surrogate of the rate curve: tangent below x_mid, exact above.

    Raises:
        FbcDomainError: If x is below the domain edge x_lo.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < ctx.x_lo - ROOT_TOL):
        raise FbcDomainError(f"Invalid SINR: {x} is below the domain edge {ctx.x_lo}")
    exact = np.asarray(f_exact(x, ctx.a))
    if not ctx.has_convex_segment:
        return _as_output(exact)
    lower = ctx.slope_mid * (x - ctx.x_mid) + ctx.f_mid
    return _as_output(np.where(x < ctx.x_mid, lower, exact))


def sinr_approx(bits: float, m: float, error_prob: float, cap: float = DEFAULT_APPROX_CAP) -> float:
    """Surrogate SINR for `bits` bits in m symbols, solving f_modified(x) = bits*ln2/m.

    `bits` may be fractional. The result is convex and increasing in bits and
    never below the exact SINR map.

    Args:
        bits (float): Bit load, nonnegative.
        m (float): Blocklength.
        error_prob (float): Block-error target.
        cap (float, optional): Largest admissible SINR. Defaults to 1e30.

    Returns:
        float: The surrogate SINR.

    Raises:
        InfeasibleRateError: If the rate needs an SINR above `cap`.
    """
    if bits <= 0.0:
        return 0.0
    ctx = approx_context(float(m), float(error_prob))
    target = bits * LN2 / m
    if ctx.has_convex_segment and target < ctx.f_mid:
        return ctx.x_mid + (target - ctx.f_mid) / ctx.slope_mid
    lo = ctx.x_mid if ctx.has_convex_segment else ctx.x_lo
    residual = lambda x: math.log1p(x) - ctx.a * math.sqrt(x * (x + 2.0)) / (x + 1.0) - target
    if residual(lo) >= 0.0:
        return lo
    hi = max(2.0 * lo, 1.0)
    while residual(hi) < 0.0:
        hi *= 2.0
        if hi > cap:
            raise InfeasibleRateError(f"Rate {bits / m} bpcu needs an SINR above {cap}")
    return optimize.brentq(residual, lo, hi, xtol=1e-14, rtol=_RTOL)


def bound_gap(ctx: ApproxContext) -> float:
    """Largest vertical gap between f_upper and f_lower where f_lower >= 0, in bpcu.

    Both bounds are lines, so the gap peaks where the lower bound crosses zero.
    """
    if not ctx.has_convex_segment or ctx.x_mid <= ctx.x_lo:
        return 0.0
    return float(f_upper(ctx.x_zero, ctx)) / LN2


def approx_gap_table(blocklengths: Iterable[int], error_probs: Iterable[float]) -> List[Dict[str, float]]:
    """Gap surface of the surrogate over an (m, eps) grid."""
    rows = []
    for m in blocklengths:
        for eps in error_probs:
            ctx = approx_context(float(m), float(eps))
            rows.append({
                "blocklength": m,
                "error_prob": eps,
                "a": ctx.a,
                "beta": ctx.beta,
                "x_lo": ctx.x_lo,
                "x_mid": ctx.x_mid if ctx.has_convex_segment else math.nan,
                "max_gap_bpcu": bound_gap(ctx),
            })
    logging.debug(f"Computed approximation gap surface with {len(rows)} points")
    return rows
