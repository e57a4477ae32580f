"""Markov sequence generators with known predictability.

Two constructions are provided.

``first_order``
    A six-slot circulant chain. Five named slots hold one concrete state
    each; the sixth slot ``R`` stands for the remaining ``M - 5`` states.
    From any slot the chain moves ``k`` slots ahead (``k = 0..4``) with
    probability ``c[k] * p`` and to the slot closing the cycle with the
    leftover mass. Entering ``R`` draws one of its members uniformly.

``second_order``
    The next state depends on the two previous ones. With probability
    ``c[x] * p`` the chain jumps to state ``i + j + x`` (1-based, wrapped
    modulo ``M``), otherwise to a uniformly random state.

Randomness comes from numpy's PCG64 bit generator; the algorithm name is
kept in :data:`PRNG` and written to generated metadata.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .events import SymbolSequence
from .fano import zipf_ratios

__all__ = [
    "PRNG",
    "HEADS",
    "GeneratorSpec",
    "GroundTruth",
    "OracleResult",
    "generate",
    "generate_first_order",
    "generate_second_order",
    "true_predictability",
    "oracle_accuracy",
    "first_order_slot_matrix",
    "first_order_entropy_rate",
    "second_order_entropy_rate",
]

PRNG = f"numpy.random.PCG64 (numpy {np.__version__})"
HEADS = 5
_SLOTS = HEADS + 1
_R = HEADS  # index of the aggregate slot


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of one synthetic sequence.

    ``c`` defaults to ``i**-xi`` for ``i = 1..5``. ``r_mode`` only affects the
    first-order chain: ``"uniform"`` sends the ``R -> R`` transition to a
    fresh uniformly drawn member, ``"same"`` keeps the current member.
    """

    method: str = "second_order"
    M: int = 1000
    p: float = 0.2
    xi: float = 0.6
    length: int = 2**13
    seed: int = 0
    c: tuple = None
    r_mode: str = "uniform"

    def __post_init__(self):
        c = zipf_ratios(self.xi, HEADS) if self.c is None else np.asarray(self.c, float)
        object.__setattr__(self, "c", tuple(float(v) for v in c))
        if self.method not in ("first_order", "second_order"):
            raise ValueError(f"unknown generator method {self.method!r}")
        if self.r_mode not in ("uniform", "same"):
            raise ValueError(f"unknown r_mode {self.r_mode!r}")
        if len(self.c) != HEADS:
            raise ValueError(f"need exactly {HEADS} ratios, got {len(self.c)}")
        if any(v <= 0 for v in self.c):
            raise ValueError("ratios must be positive")
        if self.p < 0 or self.head_mass >= 1:
            raise ValueError(
                f"need 0 <= p and sum(c) * p < 1, got p={self.p}, sum={self.head_mass:.6g}"
            )
        if self.M <= HEADS:
            raise ValueError(f"M must exceed {HEADS}, got {self.M}")
        if self.length < 1:
            raise ValueError("length must be >= 1")

    @property
    def head_mass(self) -> float:
        return math.fsum(self.c) * self.p

    @property
    def jump_probs(self) -> np.ndarray:
        """Probabilities of the six moves: the five heads, then the rest."""
        probs = np.empty(_SLOTS)
        probs[:HEADS] = np.asarray(self.c) * self.p
        probs[HEADS] = 1.0 - probs[:HEADS].sum()
        return probs

    def metadata(self) -> dict:
        meta = asdict(self)
        meta["c"] = list(self.c)
        meta["prng"] = PRNG
        return meta


@dataclass(frozen=True)
class GroundTruth:
    top_pi: tuple
    cumulative: tuple
    source: str


@dataclass(frozen=True)
class OracleResult:
    accuracy: float
    stderr: float
    steps: int


def _rng(spec):
    return np.random.Generator(np.random.PCG64(spec.seed))


def _first_order_states(spec, rng, length):
    """Slot walk and concrete states (named slots are states 0..4)."""
    moves = rng.choice(_SLOTS, size=length, p=spec.jump_probs)
    start = rng.integers(_SLOTS)
    # slot after step t is start + sum of the first t moves
    slots = (start + np.concatenate(([0], np.cumsum(moves[:-1])))) % _SLOTS
    members = rng.integers(HEADS, spec.M, size=length)
    states = np.where(slots == _R, members, slots)
    if spec.r_mode == "same":
        # staying in R keeps the concrete member
        stay = (slots == _R) & (moves.take(np.arange(-1, length - 1)) == 0)
        stay[0] = False
        idx = np.where(stay, 0, np.arange(length))
        np.maximum.accumulate(idx, out=idx)
        states = states[idx]
    return slots, states


def generate_first_order(spec: GeneratorSpec) -> SymbolSequence:
    if spec.method != "first_order":
        raise ValueError("spec.method must be 'first_order'")
    _, states = _first_order_states(spec, _rng(spec), spec.length)
    return SymbolSequence(states.astype(np.int64))


def _second_order_draws(spec, rng, length):
    u = rng.random(length)
    uniform = rng.integers(1, spec.M + 1, size=length)
    # offset x in 0..4 for a head move, -1 for a uniform draw
    cum = np.cumsum(np.asarray(spec.c) * spec.p)
    offset = np.searchsorted(cum, u, side="left")
    offset[offset >= HEADS] = -1
    return offset, uniform


def _second_order_walk(spec, offset, uniform, length):
    M = spec.M
    out = uniform[:2].tolist()
    if length > 2:
        offs = offset.tolist()
        draws = uniform.tolist()
        prev, cur = out
        for t in range(2, length):
            x = offs[t]
            nxt = draws[t] if x < 0 else (prev + cur + x - 1) % M + 1
            out.append(nxt)
            prev, cur = cur, nxt
    return np.asarray(out, dtype=np.int64)


def generate_second_order(spec: GeneratorSpec) -> SymbolSequence:
    """States are emitted 0-based (``state - 1``)."""
    if spec.method != "second_order":
        raise ValueError("spec.method must be 'second_order'")
    rng = _rng(spec)
    offset, uniform = _second_order_draws(spec, rng, spec.length)
    states = _second_order_walk(spec, offset, uniform, spec.length)
    return SymbolSequence(states - 1)


def generate(spec: GeneratorSpec) -> SymbolSequence:
    if spec.method == "first_order":
        return generate_first_order(spec)
    return generate_second_order(spec)


def first_order_slot_matrix(spec: GeneratorSpec) -> np.ndarray:
    """6x6 slot transition matrix; row ``s`` moves ``k`` slots ahead."""
    probs = spec.jump_probs
    P = np.zeros((_SLOTS, _SLOTS))
    for s in range(_SLOTS):
        for k in range(_SLOTS):
            P[s, (s + k) % _SLOTS] = probs[k]
    return P


def _stationary(P):
    w, v = np.linalg.eig(P.T)
    pi = np.real(v[:, np.argmin(np.abs(w - 1))])
    return pi / pi.sum()


def _first_order_rows(spec):
    """Concrete next-state probabilities from each slot, as
    ``(named[6, 5], r_prob[6], r_count[6])``: probabilities of the five named
    states, and the per-member probability and member count inside ``R``."""
    P = first_order_slot_matrix(spec)
    n_r = spec.M - HEADS
    named = P[:, :HEADS]
    r_prob = P[:, _R] / n_r
    r_count = np.full(_SLOTS, n_r)
    if spec.r_mode == "same":
        # from a member of R the R-mass stays on that member
        r_prob = r_prob.copy()
        r_prob[_R] = P[_R, _R]
        r_count[_R] = 1
    return named, r_prob, r_count


def _sorted_row(named_row, r_prob, r_count, k):
    vals = list(named_row) + [r_prob] * int(min(r_count, k))
    vals.sort(reverse=True)
    vals += [0.0] * (k - len(vals))
    return np.asarray(vals[:k])


def true_predictability(spec: GeneratorSpec, ranks: int = HEADS) -> GroundTruth:
    """Per-rank optimal hit probabilities and their prefix sums.

    The second-order values are analytic: rank ``k <= 5`` gets
    ``c_k p + (1 - sum(c) p) / M``, deeper ranks only the uniform share.
    The first-order values average the sorted concrete next-state
    probabilities of every slot over the stationary slot distribution.
    """
    if spec.method == "second_order":
        tail = (1.0 - spec.head_mass) / spec.M
        top = [
            (spec.c[k] * spec.p if k < HEADS else 0.0) + tail
            for k in range(min(ranks, spec.M))
        ]
        source = "analytic"
    else:
        named, r_prob, r_count = _first_order_rows(spec)
        occupancy = _stationary(first_order_slot_matrix(spec))
        k = min(ranks, spec.M)
        rows = np.array(
            [_sorted_row(named[s], r_prob[s], r_count[s], k) for s in range(_SLOTS)]
        )
        top = list(occupancy @ rows)
        source = "stationary-oracle"
    top = tuple(float(v) for v in top)
    cumulative = tuple(float(v) for v in np.minimum(1.0, np.cumsum(top)))
    return GroundTruth(top, cumulative, source)


def first_order_entropy_rate(spec: GeneratorSpec) -> float:
    """Exact entropy rate (bits) of the concrete first-order chain."""
    named, r_prob, r_count = _first_order_rows(spec)
    occupancy = _stationary(first_order_slot_matrix(spec))

    def h(q):
        q = q[q > 0]
        return -float(np.sum(q * np.log2(q)))

    rows = []
    for s in range(_SLOTS):
        rp = r_prob[s]
        rows.append(h(named[s]) + (-r_count[s] * rp * math.log2(rp) if rp > 0 else 0.0))
    return float(occupancy @ np.asarray(rows))


def second_order_entropy_rate(spec: GeneratorSpec) -> float:
    """Exact entropy rate (bits) of the second-order chain."""
    tail = (1.0 - spec.head_mass) / spec.M
    q = np.asarray(spec.c) * spec.p + tail
    rest = (spec.M - HEADS) * tail
    return -float(np.sum(q * np.log2(q))) - (rest * math.log2(tail) if tail > 0 else 0.0)


def oracle_accuracy(spec: GeneratorSpec, N: int, steps: int) -> OracleResult:
    """Empirical Top-N accuracy of a predictor that knows the chain exactly.

    At each step the predictor lists the ``N`` most probable next states
    given the true current state (and, for the second-order chain, the one
    before). Ties among equally likely uniform-tail states are broken by
    state index. ``stderr`` is the binomial standard error of the hit rate.
    """
    if not 1 <= N <= spec.M:
        raise ValueError(f"need 1 <= N <= M, got N={N}")
    if steps < 1000:
        raise ValueError("steps must be >= 1000")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    length = steps + 2

    if spec.method == "second_order":
        offset, uniform = _second_order_draws(spec, rng, length)
        states = _second_order_walk(spec, offset, uniform, length)
        base = states[:-2] + states[1:-1]
        nxt = states[2:]
        # predicted set is wrap(base + x) for x = 0..N-1
        delta = (nxt - base) % spec.M
        hits = delta < N
    else:
        slots, states = _first_order_states(spec, rng, length)
        named, r_prob, r_count = _first_order_rows(spec)
        predicted = {}
        for s in range(_SLOTS):
            cand = [(named[s][t], t) for t in range(HEADS)]
            if r_count[s] == 1:
                cand.append((r_prob[s], None))  # the current member itself
            else:
                cand += [(r_prob[s], HEADS + m) for m in range(min(N, spec.M - HEADS))]
            cand.sort(key=lambda pair: -pair[0])
            predicted[s] = [t for _, t in cand[:N]]
        hits = np.zeros(steps, dtype=bool)
        cur, nxt, cur_slot = states[:-2], states[1:-1], slots[:-2]
        for s in range(_SLOTS):
            mask = cur_slot == s
            targets = predicted[s]
            fixed = np.array([t for t in targets if t is not None], dtype=np.int64)
            hit = np.isin(nxt[mask], fixed)
            if None in targets:
                hit |= nxt[mask] == cur[mask]
            hits[mask] = hit
    acc = float(hits.mean())
    return OracleResult(acc, math.sqrt(acc * (1 - acc) / steps), steps)
