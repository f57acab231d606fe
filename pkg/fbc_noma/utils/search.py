import math
from typing import Callable, List, Optional, Tuple

# Inverse golden ratio: the surviving interior point is then an interior point of the next step.
GOLDEN_RATIO = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_interval(func: Callable[[float], float], lower: float, upper: float,
                            ratio: float = GOLDEN_RATIO, tol: float = 0.5) -> Tuple[float, float, int]:
    """Shrink [lower, upper] around the minimizer of a unimodal function.

    The surviving interior point and its value are carried into the next
    step, so each iteration evaluates `func` once.

    Args:
        func (Callable[[float], float]): The unimodal objective.
        lower (float): Lower end of the search interval.
        upper (float): Upper end of the search interval.
        ratio (float, optional): Interior point ratio. Defaults to the inverse golden ratio.
        tol (float, optional): Interval width at exit. Defaults to 0.5.

    Returns:
        Tuple[float, float, int]: The final interval and the iteration count.
    """
    lo, hi = float(lower), float(upper)
    iterations = 0
    if hi - lo < tol:
        return lo, hi, iterations
    left = lo + (1.0 - ratio) * (hi - lo)
    right = lo + ratio * (hi - lo)
    f_left, f_right = func(left), func(right)
    while True:
        drop_left = f_left >= f_right
        if drop_left:
            lo = left
            left, f_left = right, f_right
            right = lo + ratio * (hi - lo)
        else:
            hi = right
            right, f_right = left, f_left
            left = lo + (1.0 - ratio) * (hi - lo)
        iterations += 1
        if hi - lo < tol:
            return lo, hi, iterations
        if drop_left:
            f_right = func(right)
        else:
            f_left = func(left)
        # ratios below the golden one can swap the carried and the new point
        if left > right:
            left, right, f_left, f_right = right, left, f_right, f_left


def integer_candidates(lo: float, hi: float, lower: int, upper: int) -> List[int]:
    """Integers from floor(lo) to ceil(hi), clipped to [lower, upper]."""
    first = max(lower, int(math.floor(lo)))
    last = min(upper, int(math.ceil(hi)))
    return list(range(first, last + 1))


def golden_section_integer(func: Callable[[float], float], lower: int, upper: int,
                           ratio: float = GOLDEN_RATIO, tol: float = 0.5,
                           score: Optional[Callable[[int], float]] = None) -> Tuple[int, float]:
    """Integer minimizer of a unimodal function over [lower, upper].

    The continuous search runs on `func`; the integers left in the final
    interval are compared with `score` (defaults to `func`). Ties go to the
    smallest integer.
    """
    score = score or func
    if upper <= lower:
        return lower, score(lower)
    lo, hi, _ = golden_section_interval(func, lower, upper, ratio=ratio, tol=tol)
    best, best_value = None, math.inf
    for n in integer_candidates(lo, hi, lower, upper):
        value = score(n)
        if best is None or value < best_value:
            best, best_value = n, value
    return best, best_value


def bisect_integer(predicate: Callable[[int], bool], lo: int, hi: int) -> int:
    """Smallest integer in (lo, hi] where a monotone predicate holds.

    The predicate must be false at lo and true at hi.
    """
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return hi
