"""End-to-end predictability analysis of an interaction log.

parse -> per-user sequences -> Lempel-Ziv entropy -> population ratios and
Zipf exponent -> per-user Fano bound -> user average -> optional calibration.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .calibration import CalibrationTable, lookup, read_table
from .entropy import lz_entropy_rate
from .events import DEFAULT_MIN_LENGTH, FormatConfig, build_sequences, parse_events
from .fano import BoundResult, FanoProblem, sf_solve, topn_from_pi1, zipf_ratios
from .popularity import DEFAULT_MAX_RANK, DEFAULT_R, c_ratios, fit_zipf, rank_frequencies

logger = logging.getLogger(__name__)

__all__ = ["AnalyzeConfig", "UserRow", "PredictabilityReport", "analyze", "solve_user"]


@dataclass(frozen=True)
class AnalyzeConfig:
    """Options for :func:`analyze`.

    ``c_source="population"`` takes the ratios from observed item counts;
    ``"zipf"`` synthesizes ``i**-xi`` from the fitted (or overridden)
    exponent, which matches how calibration tables are built.
    ``m_mode="user"`` uses each user's distinct-item count as the candidate
    set size, ``"global"`` the whole catalogue. ``weighting`` chooses equal
    user weights or weights proportional to sequence length.
    """

    format: FormatConfig = FormatConfig()
    min_length: int = DEFAULT_MIN_LENGTH
    rank: int = DEFAULT_R
    xi_override: float | None = None
    c_source: str = "population"
    m_mode: str = "user"
    weighting: str = "user"
    max_rank: int = DEFAULT_MAX_RANK

    def __post_init__(self):
        if self.c_source not in ("population", "zipf"):
            raise ValueError(f"c_source must be 'population' or 'zipf', got {self.c_source!r}")
        if self.m_mode not in ("user", "global"):
            raise ValueError(f"m_mode must be 'user' or 'global', got {self.m_mode!r}")
        if self.weighting not in ("user", "event"):
            raise ValueError(f"weighting must be 'user' or 'event', got {self.weighting!r}")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class UserRow:
    user_id: str
    n: int
    M: int
    S: float
    pi1: float
    clamped: bool


@dataclass
class PredictabilityReport:
    users: list
    topn: tuple
    topn_corrected: tuple | None
    pi1: float
    pi1_corrected: float | None
    deviation: float | None
    c: tuple
    xi: float
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "metadata": self.meta,
            "users": [asdict(u) for u in self.users],
            "aggregate": [
                {
                    "k": k + 1,
                    "bound": self.topn[k],
                    "corrected": None if self.topn_corrected is None else self.topn_corrected[k],
                }
                for k in range(len(self.topn))
            ],
        }

    def to_json(self) -> str:
        def rounded(obj):
            if isinstance(obj, float):
                return float(f"{obj:.6g}")
            if isinstance(obj, dict):
                return {k: rounded(v) for k, v in obj.items()}
            if isinstance(obj, list):
                return [rounded(v) for v in obj]
            return obj

        return json.dumps(rounded(self.to_dict()), indent=2, sort_keys=False) + "\n"

    def to_tsv(self) -> str:
        out = io.StringIO()
        for key, value in self.meta.items():
            out.write(f"# {key}={_g(value)}\n")
        out.write("user_id\tn\tM\tS\tpi1\tclamped\n")
        for u in self.users:
            out.write(f"{u.user_id}\t{u.n}\t{u.M}\t{_g(u.S)}\t{_g(u.pi1)}\t{int(u.clamped)}\n")
        out.write("\nk\tbound\tcorrected\n")
        for k, v in enumerate(self.topn):
            corr = "" if self.topn_corrected is None else _g(self.topn_corrected[k])
            out.write(f"{k + 1}\t{_g(v)}\t{corr}\n")
        return out.getvalue()


def _g(x):
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, (list, tuple)):
        return ",".join(_g(v) for v in x)
    return str(x)


def solve_user(S: float, M: int, c) -> BoundResult:
    """Fano bound for one user, tolerating tiny candidate sets.

    A user with a single distinct item is perfectly predictable. When the
    user has no more distinct items than ratios, the solve uses the first
    ``M - 1`` ratios while the Top-k vector still uses all of them.
    """
    c = tuple(float(v) for v in c)
    if M <= 1:
        return BoundResult(1.0, topn_from_pi1(1.0, c), True, 0.0, c)
    r = min(len(c), M - 1)
    res = sf_solve(FanoProblem(S, M, c[:r]))
    return BoundResult(res.pi1, topn_from_pi1(res.pi1, c), res.clamped, res.residual, c)


def analyze(source, config: AnalyzeConfig = AnalyzeConfig(), table=None) -> PredictabilityReport:
    """Top-1..Top-r predictability bounds for every user of a log.

    ``source`` is anything :func:`~topn_predictability.events.parse_events`
    accepts, or an already parsed ``EventLog``. ``table`` is an optional
    :class:`CalibrationTable` or path to one. Users whose bound cannot be
    computed are skipped and counted in ``meta["skipped_users"]``.
    """
    log = source if hasattr(source, "users") and hasattr(source, "items") else parse_events(
        source, config.format
    )
    seqs = build_sequences(log, config.min_length)
    if isinstance(table, (str, bytes)) or hasattr(table, "__fspath__"):
        table = read_table(table)

    profile = rank_frequencies(log)
    xi_fit = fit_zipf(profile, config.max_rank) if len(profile.freqs) >= 3 else float("nan")
    xi = config.xi_override if config.xi_override is not None else xi_fit
    if config.c_source == "zipf":
        c = tuple(zipf_ratios(xi, config.rank))
    else:
        c = tuple(c_ratios(profile, min(config.rank, len(profile.freqs))))

    rows, bounds, weights = [], [], []
    skipped = 0
    for uid in sorted(seqs.by_user, key=str):
        seq = seqs.by_user[uid]
        try:
            S = lz_entropy_rate(seq)
            M = seq.vocab_size if config.m_mode == "user" else log.item_count
            res = solve_user(S, M, c)
        except (ValueError, ArithmeticError) as exc:
            logger.warning("skipping user %s: %s", uid, exc)
            skipped += 1
            continue
        rows.append(UserRow(str(uid), seq.length, int(M), float(S), res.pi1, res.clamped))
        bounds.append(res.topn)
        weights.append(1.0 if config.weighting == "user" else float(seq.length))

    if not rows:
        raise ValueError("no user produced a bound (check min_length)")
    w = np.asarray(weights) / np.sum(weights)
    topn = tuple(float(v) for v in w @ np.asarray(bounds))
    pi1 = float(w @ np.asarray([r.pi1 for r in rows]))

    deviation = pi1_corr = topn_corr = None
    if table is not None:
        deviation = lookup(table, pi1, xi, len(c))
        pi1_corr = min(1.0, pi1 / (1 + deviation))
        topn_corr = topn_from_pi1(pi1_corr, c)

    meta = {
        "version": __version__,
        "config_hash": config.digest(),
        "table_id": table.table_id() if table is not None else "none",
        "xi": float(xi),
        "xi_fitted": float(xi_fit),
        "r": len(c),
        "c": [float(v) for v in c],
        "c_source": config.c_source,
        "m_mode": config.m_mode,
        "weighting": config.weighting,
        "users": len(rows),
        "skipped_users": skipped,
        "excluded_users": seqs.excluded_users,
        "malformed_lines": log.malformed,
        "pi1": pi1,
        "pi1_corrected": pi1_corr if pi1_corr is not None else "none",
        "deviation": deviation if deviation is not None else "none",
    }
    return PredictabilityReport(rows, topn, topn_corr, pi1, pi1_corr, deviation, c, float(xi), meta)
