"""Normal-approximation finite-blocklength (FBC) rate kernel.

All rates are in bits per channel use unless stated otherwise. Functions
taking a blocklength or SINR accept scalars or numpy arrays and broadcast;
scalar inputs return Python floats.
"""
import logging
import math
from typing import Optional, Union

import numpy as np
from scipy import special

from ..models.fbc import FbcParams, RatePoint

LN2 = math.log(2.0)

# Q^{-1}(eps)/sqrt(N) at or below this keeps m*Gamma(m) decreasing in m
MONOTONICITY_BOUND = 2.0 * math.sqrt(LN2) / (4.0 - math.sqrt(2.0))

DEFAULT_SINR_TOL = 1e-9
MAX_SINR = 1e300
_RESOLUTION = 4.0 * np.finfo(float).eps
_MAX_BISECTIONS = 4096

ArrayLike = Union[float, np.ndarray]


class FbcDomainError(ValueError):
    """Exception raised when a kernel input is outside its domain."""


class UnboundedSinrError(FbcDomainError):
    """Exception raised when no SINR below the bracket cap meets the rate demand."""


def _as_output(value) -> ArrayLike:
    arr = np.asarray(value, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def _check_error_prob(eps: float):
    if not 0.0 < eps <= 0.5:
        raise FbcDomainError(f"Invalid error probability: {eps}")


def q_inv(eps: float) -> float:
    """Inverse of the Gaussian Q-function (upper-tail standard normal quantile).

    Args:
        eps (float): Tail probability in (0, 1).

    Returns:
        float: Q^{-1}(eps).

    Raises:
        FbcDomainError: If eps is not in (0, 1).
    """
    if not 0.0 < eps < 1.0:
        raise FbcDomainError(f"Invalid probability: {eps}")
    return float(math.sqrt(2.0) * special.erfcinv(2.0 * eps))


def _dispersion_root(gamma):
    # sqrt(1 - 1/(1+gamma)^2), written to keep precision for small gamma
    return np.sqrt(gamma * (gamma + 2.0)) / (gamma + 1.0)


def fbc_rate(gamma: ArrayLike, m: ArrayLike, eps: float) -> ArrayLike:
    """Achievable rate in bits per channel use at SINR gamma, blocklength m.

    The value may be negative for short blocks at low SINR.
    """
    _check_error_prob(eps)
    gamma = np.asarray(gamma, dtype=float)
    m = np.asarray(m, dtype=float)
    if np.any(gamma < 0.0):
        raise FbcDomainError(f"Invalid SINR: {gamma}")
    if np.any(m < 1.0):
        raise FbcDomainError(f"Invalid blocklength: {m}")
    rate = np.log1p(gamma) / LN2 - _dispersion_root(gamma) / np.sqrt(m) * q_inv(eps) / LN2
    return _as_output(rate)


def fbc_residual(m: ArrayLike, gamma: ArrayLike, params: FbcParams) -> ArrayLike:
    """Residual of the rate constraint in natural-log form.

    m*ln(1+gamma) - sqrt(m)*sqrt(gamma(gamma+2))/(gamma+1)*Q^{-1}(eps) - N*ln2,
    zero iff N bits fit in m symbols at SINR gamma. Increasing in gamma.
    """
    gamma = np.asarray(gamma, dtype=float)
    m = np.asarray(m, dtype=float)
    residual = (m * np.log1p(gamma)
                - np.sqrt(m) * _dispersion_root(gamma) * q_inv(params.error_prob)
                - params.bits * LN2)
    return _as_output(residual)


def _required_blocklength(gamma, bits, qinv):
    # positive root of log2(1+g)*s^2 - c*sqrt(V)*s - N = 0 in s = sqrt(m)
    log_term = np.log1p(gamma) / LN2
    c = qinv / LN2
    sv = _dispersion_root(gamma)
    root = (c * sv + np.sqrt((c * sv) ** 2 + 4.0 * bits * log_term)) / (2.0 * log_term)
    return root * root


def _required_blocklength_scalar(gamma: float, bits: float, qinv: float) -> float:
    log_term = math.log1p(gamma) / LN2
    c = qinv / LN2
    sv = math.sqrt(gamma * (gamma + 2.0)) / (gamma + 1.0)
    root = (c * sv + math.sqrt((c * sv) ** 2 + 4.0 * bits * log_term)) / (2.0 * log_term)
    return root * root


def blocklength_for_sinr(gamma: ArrayLike, params: FbcParams) -> ArrayLike:
    """Blocklength at which N bits are exactly carried at SINR gamma.

    Args:
        gamma (ArrayLike): The SINR, strictly positive.
        params (FbcParams): The codeword demand.

    Returns:
        ArrayLike: The (real) blocklength.

    Raises:
        FbcDomainError: If gamma <= 0.
    """
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 0.0):
        raise FbcDomainError(f"Invalid SINR: {gamma} (must be positive)")
    return _as_output(_required_blocklength(gamma, params.bits, q_inv(params.error_prob)))


def _bisect_scalar(m: float, bits: float, qinv: float, tol: float, upper: float) -> float:
    lo, hi = 0.0, upper
    for _ in range(_MAX_BISECTIONS):
        if hi - lo <= max(tol, _RESOLUTION * hi):
            break
        mid = 0.5 * (lo + hi)
        if _required_blocklength_scalar(mid, bits, qinv) < m:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _bisect_array(m: np.ndarray, bits: np.ndarray, qinv: float, tol: float, upper: np.ndarray) -> np.ndarray:
    lo = np.zeros_like(upper)
    hi = upper.copy()
    for _ in range(_MAX_BISECTIONS):
        active = (hi - lo) > np.maximum(tol, _RESOLUTION * hi)
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        too_short = _required_blocklength(mid, bits, qinv) < m
        hi = np.where(active & too_short, mid, hi)
        lo = np.where(active & ~too_short, mid, lo)
    return 0.5 * (lo + hi)


def _grow_upper(m: np.ndarray, bits: np.ndarray, qinv: float) -> np.ndarray:
    upper = np.ones(np.broadcast(m, bits).shape)
    while True:
        short = _required_blocklength(upper, bits, qinv) > m
        if not np.any(short):
            return upper
        if np.any(upper[short] >= MAX_SINR):
            raise UnboundedSinrError(f"No finite SINR carries {bits} bits in {m} symbols")
        upper = np.where(short, upper * 2.0, upper)


def sinr_table(bits: ArrayLike, blocklengths: ArrayLike, error_prob: float,
               tol: float = DEFAULT_SINR_TOL, upper: Optional[float] = None) -> np.ndarray:
    """Vectorized SINR map Gamma(N, m) over a grid of bit loads and blocklengths.

    Bit loads broadcast against blocklengths (e.g. a column of bits against a
    row of blocklengths). Entries with zero bits are 0. Entries that need more
    than `upper` are NaN.

    Args:
        bits (ArrayLike): Bit loads, nonnegative.
        blocklengths (ArrayLike): Blocklengths, positive.
        error_prob (float): Block-error target.
        tol (float, optional): SINR bracket width at exit. Defaults to 1e-9.
        upper (float, optional): SINR cap; the bracket is grown when None.

    Returns:
        np.ndarray: SINR values with the broadcast shape.
    """
    _check_error_prob(error_prob)
    bits, m = np.broadcast_arrays(np.asarray(bits, dtype=float), np.asarray(blocklengths, dtype=float))
    shape = bits.shape
    bits, m = bits.ravel(), m.ravel()
    qinv = q_inv(error_prob)
    result = np.zeros(bits.shape)
    loaded = bits > 0.0
    if not np.any(loaded):
        return result.reshape(shape)
    b, mm = bits[loaded], m[loaded]
    if upper is None:
        cap = _grow_upper(mm, b, qinv)
        reachable = np.ones(b.shape, dtype=bool)
    else:
        cap = np.full(b.shape, float(upper))
        reachable = _required_blocklength(cap, b, qinv) <= mm
    gamma = np.full(b.shape, np.nan)
    if np.any(reachable):
        gamma[reachable] = _bisect_array(mm[reachable], b[reachable], qinv, tol, cap[reachable])
    result[loaded] = gamma
    return result.reshape(shape)


def sinr_for_blocklength(m: ArrayLike, params: FbcParams, tol: float = DEFAULT_SINR_TOL,
                         upper: Optional[float] = None) -> ArrayLike:
    """Implicit SINR function Gamma(m): the SINR at which N bits fit in m symbols.

    Bisection on the SINR bracket [0, upper]: each trial SINR is mapped to its
    required blocklength, and the bracket top moves down when that is shorter
    than m.

    Args:
        m (ArrayLike): The blocklength(s), at least the minimum blocklength.
        params (FbcParams): The codeword demand.
        tol (float, optional): Bracket width at exit. Defaults to 1e-9.
        upper (float, optional): Bracket cap, P_max*h + delta in the solvers.
            When None, the bracket is doubled until it holds the root.

    Returns:
        ArrayLike: The SINR.

    Raises:
        FbcDomainError: If m is below the minimum blocklength or tol <= 0.
        UnboundedSinrError: If the demand needs an SINR above `upper`.
    """
    if tol <= 0.0:
        raise FbcDomainError(f"Invalid tolerance: {tol}")
    m_arr = np.asarray(m, dtype=float)
    if np.any(m_arr < params.min_blocklength):
        raise FbcDomainError(f"Invalid blocklength: {m} is below the minimum {params.min_blocklength}")
    if upper is not None and upper <= 0.0:
        raise FbcDomainError(f"Invalid SINR cap: {upper}")
    qinv = q_inv(params.error_prob)
    if m_arr.ndim == 0:
        m_val = float(m_arr)
        if upper is None:
            cap = 1.0
            while _required_blocklength_scalar(cap, params.bits, qinv) > m_val:
                cap *= 2.0
                if cap >= MAX_SINR:
                    raise UnboundedSinrError(f"No finite SINR carries {params.bits} bits in {m_val} symbols")
        else:
            cap = float(upper)
            if _required_blocklength_scalar(cap, params.bits, qinv) > m_val:
                raise UnboundedSinrError(f"{params.bits} bits need an SINR above {cap} in {m_val} symbols")
        return _bisect_scalar(m_val, float(params.bits), qinv, tol, cap)
    gamma = sinr_table(params.bits, m_arr, params.error_prob, tol=tol, upper=upper)
    if np.any(np.isnan(gamma)):
        raise UnboundedSinrError(f"{params.bits} bits need an SINR above {upper} for some blocklengths")
    return gamma


def snr_energy(m: ArrayLike, params: FbcParams, tol: float = DEFAULT_SINR_TOL) -> ArrayLike:
    """E(m) = m*Gamma(m), in SINR-symbols (divide by the gain for watt-symbols)."""
    gamma = sinr_for_blocklength(m, params, tol=tol)
    return _as_output(np.asarray(m, dtype=float) * gamma)


def monotonicity_holds(params: FbcParams) -> bool:
    """True iff Q^{-1}(eps)/sqrt(N) stays within MONOTONICITY_BOUND."""
    ratio = q_inv(params.error_prob) / math.sqrt(params.bits)
    if ratio > MONOTONICITY_BOUND:
        logging.debug(f"Energy monotonicity fails for N={params.bits}, eps={params.error_prob}: ratio {ratio:.6f}")
        return False
    return True


def rate_point(m: float, params: FbcParams, tol: float = DEFAULT_SINR_TOL,
               upper: Optional[float] = None) -> RatePoint:
    """Solve the rate constraint at blocklength m."""
    gamma = sinr_for_blocklength(float(m), params, tol=tol, upper=upper)
    return RatePoint(sinr=gamma, blocklength=float(m), rate=params.bits / float(m))
