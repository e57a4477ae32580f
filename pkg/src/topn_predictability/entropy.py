"""Lempel-Ziv entropy-rate estimation for symbol sequences.

For every position ``i`` the estimator needs ``Lambda_i``, the length of the
shortest substring starting at ``i`` that is not contained in the prefix
``s[:i]``. When the whole remaining suffix is contained in the prefix the
match-to-end convention ``Lambda_i = n - i + 1`` (0-based ``i``) is used.

The profile is computed with an online suffix automaton of the prefix. The
longest prefix match at ``i + 1`` is at least the match at ``i`` minus one,
so the match is carried from one position to the next instead of being
rebuilt, which keeps the whole pass linear in ``n`` (times the dictionary
cost of a transition lookup).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["LambdaProfile", "lz_lambdas", "lz_entropy_rate", "EntropyEstimate"]


@dataclass(frozen=True)
class LambdaProfile:
    lambdas: np.ndarray

    @property
    def n(self) -> int:
        return len(self.lambdas)

    @property
    def total(self) -> int:
        return int(self.lambdas.sum())


@dataclass(frozen=True)
class EntropyEstimate:
    """Entropy rate in bits per symbol together with the sequence size info."""

    S: float
    n: int
    M: int


def _as_symbols(seq):
    symbols = getattr(seq, "symbols", seq)
    if isinstance(symbols, str):
        return list(symbols)
    if isinstance(symbols, np.ndarray):
        return symbols.tolist()
    return list(symbols)


def lz_lambdas(seq) -> LambdaProfile:
    """Shortest-new-substring lengths of ``seq``.

    ``seq`` may be a :class:`~topn_predictability.events.SymbolSequence`,
    a numpy array, a list or a string; symbols only need to be hashable.
    """
    s = _as_symbols(seq)
    n = len(s)
    if n == 0:
        raise ValueError("cannot compute a Lambda profile of an empty sequence")

    # suffix automaton of s[:i], grown one symbol per position
    link = [-1]
    length = [0]
    trans = [{}]
    last = 0

    def extend(ch):
        nonlocal last
        cur = len(length)
        length.append(length[last] + 1)
        link.append(-1)
        trans.append({})
        p = last
        while p != -1 and ch not in trans[p]:
            trans[p][ch] = cur
            p = link[p]
        cloned = None
        if p == -1:
            link[cur] = 0
        else:
            q = trans[p][ch]
            if length[p] + 1 == length[q]:
                link[cur] = q
            else:
                clone = len(length)
                length.append(length[p] + 1)
                link.append(link[q])
                trans.append(dict(trans[q]))
                while p != -1 and trans[p].get(ch) == q:
                    trans[p][ch] = clone
                    p = link[p]
                link[q] = clone
                link[cur] = clone
                cloned = (q, clone)
        last = cur
        return cloned

    lambdas = np.empty(n, dtype=np.int64)
    state, matched = 0, 0  # automaton state holding s[i:i+matched]
    for i in range(n):
        while i + matched < n:
            nxt = trans[state].get(s[i + matched])
            if nxt is None:
                break
            state = nxt
            matched += 1
        lambdas[i] = n - i + 1 if i + matched == n else matched + 1

        cloned = extend(s[i])
        if cloned is not None and state == cloned[0] and matched <= length[cloned[1]]:
            state = cloned[1]
        # drop the leading symbol: s[i+1:i+matched] is still inside s[:i+1]
        if matched > 0:
            matched -= 1
            if matched <= length[link[state]]:
                state = link[state]
            if matched == 0:
                state = 0
    return LambdaProfile(lambdas)


def lz_entropy_rate(seq, profile: LambdaProfile | None = None) -> float:
    """Lempel-Ziv entropy-rate estimate in bits per symbol.

    ``S = n * log2(n) / sum(Lambda)``.
    """
    s = getattr(seq, "symbols", seq)
    n = len(s)
    if n < 2:
        raise ValueError(f"entropy rate needs at least 2 symbols, got {n}")
    if profile is None:
        profile = lz_lambdas(seq)
    return n * math.log2(n) / profile.total


def estimate(seq) -> EntropyEstimate:
    """Entropy rate plus ``n`` and the number of distinct symbols ``M``."""
    symbols = getattr(seq, "symbols", seq)
    n = len(symbols)
    M = len(set(_as_symbols(symbols)))
    return EntropyEstimate(lz_entropy_rate(seq), n, M)
