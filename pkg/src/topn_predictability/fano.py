"""Generalized Fano bound for Top-N predictability.

The true next-item distribution of a user is replaced by a surrogate that
keeps the ``r`` most probable items, tied together through the population
ratios ``c_i = p_i / p_1``, and spreads the remaining mass uniformly over the
other ``M - r`` candidates. The entropy of that surrogate, seen as a function
of the top probability alone, is strictly decreasing and concave on its
feasible interval, so equating it to a measured entropy rate pins down a
unique upper bound on the Top-1 accuracy. Top-k bounds follow by scaling
with the cumulative ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

__all__ = [
    "FanoProblem",
    "BoundResult",
    "FeasibilityError",
    "zipf_ratios",
    "feasible_interval",
    "sf_eval",
    "sf_derivative",
    "sf_solve",
    "solve_classic",
    "solve_naive_topn",
    "topn_from_pi1",
    "solve_ranks",
    "with_correction",
]

TOL = 1e-10
MAX_ITER = 200
# relative slack when testing a point against the closed feasible interval
_EDGE = 1e-12


class FeasibilityError(ValueError):
    """Raised when a probability lies outside the surrogate's feasible domain."""

    def __init__(self, message, constraint):
        super().__init__(message)
        self.constraint = constraint


def zipf_ratios(xi: float, r: int) -> np.ndarray:
    """Ratios ``c_i = i**-xi`` for ``i = 1..r``."""
    if r < 1:
        raise ValueError("r must be >= 1")
    return np.arange(1, r + 1, dtype=float) ** (-float(xi))


@dataclass(frozen=True)
class FanoProblem:
    """One instance of the scaled-entropy equation.

    Parameters
    ----------
    S : float
        Entropy rate in bits per symbol.
    M : int
        Number of candidate items.
    c : sequence of float
        Probability ratios of the ``r`` leading items, ``c[0] == 1``,
        non-increasing and positive. ``r`` is ``len(c)``.
    """

    S: float
    M: int
    c: tuple = (1.0,)

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.c))
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "M", int(self.M))
        if not math.isfinite(self.S) or self.S < 0:
            raise ValueError(f"S must be finite and >= 0, got {self.S}")
        if self.M < 2:
            raise ValueError(f"M must be >= 2, got {self.M}")
        if not 1 <= self.r <= self.M - 1:
            raise ValueError(f"need 1 <= r <= M - 1, got r={self.r}, M={self.M}")
        if abs(c[0] - 1.0) > 1e-12:
            raise ValueError("c[0] must be 1")
        if any(v <= 0 or v > 1 for v in c):
            raise ValueError("every ratio must lie in (0, 1]")
        if any(b > a for a, b in zip(c, c[1:])):
            raise ValueError("ratios must be non-increasing")

    @property
    def r(self) -> int:
        return len(self.c)

    @classmethod
    def from_xi(cls, S, M, r, xi):
        return cls(S, M, tuple(zipf_ratios(xi, r)))


@dataclass(frozen=True)
class BoundResult:
    """Solution of a :class:`FanoProblem`.

    ``topn[k-1]`` is the Top-k bound ``min(1, pi1 * sum(c[:k]))``.
    ``original`` holds the uncorrected result when this one came out of a
    calibration correction.
    """

    pi1: float
    topn: tuple
    clamped: bool
    residual: float
    c: tuple = ()
    deviation: float = 0.0
    original: "BoundResult | None" = field(default=None, repr=False)


def topn_from_pi1(pi1, c) -> tuple:
    return tuple(float(v) for v in np.minimum(1.0, pi1 * np.cumsum(c)))


def feasible_interval(problem: FanoProblem) -> tuple[float, float]:
    """Closed interval ``[x_lo, x_hi]`` of admissible top probabilities.

    ``x_hi`` empties the uniform tail; at ``x_lo`` the smallest coupled
    probability equals the tail level.
    """
    total = math.fsum(problem.c)
    x_hi = 1.0 / total
    x_lo = 1.0 / (problem.c[-1] * (problem.M - problem.r) + total)
    return x_lo, x_hi


def _xlogx(p):
    return p * math.log2(p) if p > 0 else 0.0


def _check_domain(problem, pi1):
    x_lo, x_hi = feasible_interval(problem)
    if not math.isfinite(pi1) or pi1 > x_hi * (1 + _EDGE):
        raise FeasibilityError(
            f"pi1={pi1!r} leaves negative tail mass (sum(c)*pi1 > 1)", "tail_mass"
        )
    if pi1 < x_lo * (1 - _EDGE):
        raise FeasibilityError(
            f"pi1={pi1!r} puts c_r*pi1 below the uniform tail level", "tail_order"
        )


def sf_eval(problem: FanoProblem, pi1: float) -> float:
    """Entropy in bits of the surrogate distribution with top probability ``pi1``."""
    _check_domain(problem, pi1)
    heads = [ci * pi1 for ci in problem.c]
    rest = max(0.0, 1.0 - math.fsum(heads))
    h = -math.fsum(_xlogx(q) for q in heads) - _xlogx(rest)
    return h + rest * math.log2(problem.M - problem.r)


def sf_derivative(problem: FanoProblem, pi1: float) -> float:
    """Closed-form d/d(pi1) of :func:`sf_eval` on the interior of the domain.

    Equals ``-sum_i c_i * log2(c_i * pi1 / tail)`` with
    ``tail = (1 - sum(c) * pi1) / (M - r)``.
    """
    _check_domain(problem, pi1)
    c = np.asarray(problem.c)
    tail = (1.0 - c.sum() * pi1) / (problem.M - problem.r)
    if tail <= 0:
        return -math.inf
    return float(-np.sum(c * np.log2(c * pi1 / tail)))


def sf_solve(problem: FanoProblem, tol: float = TOL, max_iter: int = MAX_ITER) -> BoundResult:
    """Solve ``sf_eval(problem, x) == problem.S`` for ``x`` by bisection.

    Entropies above the surrogate's maximum (reached at the lower end of the
    domain) clamp to ``x_lo``. Entropies at or below its minimum (zero for
    ``r == 1``, the entropy of the bare head for larger ``r``) clamp to
    ``x_hi``. Clamping is reported through ``BoundResult.clamped`` rather
    than raised.
    """
    S = problem.S
    lo, hi = feasible_interval(problem)
    s_lo = sf_eval(problem, lo)
    s_hi = sf_eval(problem, hi)

    clamped = False
    if S >= s_lo:
        x, clamped = lo, True
    elif S <= s_hi:
        x, clamped = hi, True
    else:
        # invariant: f(lo) > S >= f(hi)
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            if sf_eval(problem, mid) > S:
                lo = mid
            else:
                hi = mid
            if hi - lo <= tol:
                break
        x = 0.5 * (lo + hi)

    residual = abs(sf_eval(problem, x) - S)
    return BoundResult(
        pi1=x,
        topn=topn_from_pi1(x, problem.c),
        clamped=clamped,
        residual=residual,
        c=problem.c,
    )


def solve_classic(S: float, M: int) -> float:
    """Top-1 bound from the two-level Fano equality (all but one item flattened)."""
    return sf_solve(FanoProblem(S, M, (1.0,))).pi1


def solve_naive_topn(S: float, M: int, N: int) -> float:
    """Top-N bound obtained by substituting ``M - N`` for ``M - 1``.

    This treats the Top-N candidates as a block and is kept only to show
    that it barely moves with ``N`` when ``M`` is large.
    """
    if N < 0 or M - N < 1:
        raise ValueError(f"need 0 <= N and M - N >= 1, got M={M}, N={N}")
    # (1 - x) * log2(M - N) is the r = 1 surrogate with M - N + 1 candidates
    return sf_solve(FanoProblem(S, M - N + 1, (1.0,))).pi1


def solve_ranks(S: float, M: int, c: Sequence[float], ranks=None) -> dict:
    """Top-1 bounds for several truncations of the same ratio vector.

    Returns ``{r: BoundResult}`` for each ``r`` in ``ranks`` (default
    ``1..len(c)``), skipping ranks that would leave no tail (``r >= M``).
    The bound does not increase with ``r`` as long as the larger rank is not
    clamped at its lower endpoint, which rises with ``r``.
    """
    c = tuple(c)
    ranks = range(1, len(c) + 1) if ranks is None else ranks
    return {r: sf_solve(FanoProblem(S, M, c[:r])) for r in ranks if r <= M - 1}


def with_correction(bound: BoundResult, deviation: float) -> BoundResult:
    """Divide ``pi1`` by ``1 + deviation`` (capped at 1) and rebuild the Top-k vector."""
    if deviation <= -1:
        raise ValueError("deviation must exceed -1")
    pi1 = min(1.0, bound.pi1 / (1.0 + deviation))
    return replace(
        bound,
        pi1=pi1,
        topn=topn_from_pi1(pi1, bound.c),
        deviation=deviation,
        original=bound,
    )
