"""Population item popularity: rank-frequency profile, Zipf exponent, ratios."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

logger = logging.getLogger(__name__)

__all__ = ["PopularityProfile", "rank_frequencies", "fit_zipf", "c_ratios", "DEFAULT_R", "DEFAULT_MAX_RANK"]

DEFAULT_R = 10
DEFAULT_MAX_RANK = 1000


@dataclass(frozen=True)
class PopularityProfile:
    """Item counts sorted in decreasing order.

    ``items[k]`` is the item code holding rank ``k + 1``. ``xi`` and ``c``
    are filled by :func:`fit_zipf` and :func:`c_ratios` when attached with
    :meth:`with_fit`.
    """

    freqs: np.ndarray
    items: np.ndarray
    xi: float | None = None
    c: np.ndarray | None = None
    xi_negative: bool = False

    @property
    def total(self) -> int:
        return int(self.freqs.sum())

    def with_fit(self, r=DEFAULT_R, max_rank=DEFAULT_MAX_RANK) -> "PopularityProfile":
        xi = fit_zipf(self, max_rank)
        return replace(self, xi=xi, c=c_ratios(self, min(r, len(self.freqs))), xi_negative=xi < 0)


def rank_frequencies(log) -> PopularityProfile:
    """Count interactions per item over the whole log.

    Equal counts are ordered by item code. ``log`` is an
    :class:`~topn_predictability.events.EventLog` or any integer array of
    item codes.
    """
    items = np.asarray(getattr(log, "items", log), dtype=np.int64)
    if items.size == 0:
        raise ValueError("cannot rank an empty log")
    counts = np.bincount(items)
    codes = np.flatnonzero(counts)
    # stable sort on negated counts keeps ascending code order among ties
    order = np.argsort(-counts[codes], kind="stable")
    return PopularityProfile(counts[codes][order], codes[order])


def fit_zipf(profile, max_rank: int = DEFAULT_MAX_RANK) -> float:
    """Least-squares Zipf exponent over the first ``max_rank`` ranks.

    Returns minus the slope of ``log f_k`` against ``log k``. A negative
    value is returned as is and logged.
    """
    freqs = np.asarray(getattr(profile, "freqs", profile), dtype=float)
    if max_rank < 3:
        raise ValueError("max_rank must be >= 3")
    freqs = freqs[: min(max_rank, len(freqs))]
    freqs = freqs[freqs > 0]
    if len(freqs) < 3:
        raise ValueError(f"need at least 3 ranks with positive frequency, got {len(freqs)}")
    ranks = np.arange(1, len(freqs) + 1)
    slope = np.polyfit(np.log(ranks), np.log(freqs), 1)[0]
    xi = float(-slope)
    if xi < 0:
        logger.warning("fitted Zipf exponent is negative (%.4g)", xi)
    return xi


def c_ratios(profile, r: int = DEFAULT_R) -> np.ndarray:
    """``f_i / f_1`` for the ``r`` most frequent items."""
    freqs = np.asarray(getattr(profile, "freqs", profile), dtype=float)
    if not 1 <= r <= len(freqs):
        raise ValueError(f"r must lie in [1, {len(freqs)}], got {r}")
    c = freqs[:r] / freqs[0]
    c[0] = 1.0
    return c
