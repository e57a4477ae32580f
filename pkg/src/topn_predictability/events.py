"""Ingest interaction logs and turn them into per-user symbol sequences.

Records are kept column-wise (user codes, item codes, order keys) so that
logs with tens of millions of rows stay cheap; :class:`EventRecord` objects
are only materialized on demand.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "EventRecord",
    "EventLog",
    "SymbolSequence",
    "SequenceSet",
    "FormatConfig",
    "ConfigError",
    "EmptyLogError",
    "parse_events",
    "build_sequences",
]

DEFAULT_MIN_LENGTH = 50


class ConfigError(ValueError):
    """Column mapping or format options do not fit the input."""


class EmptyLogError(ValueError):
    """The input held no usable record."""


@dataclass(frozen=True)
class EventRecord:
    user_id: str
    item_id: str
    timestamp: float


@dataclass(frozen=True)
class FormatConfig:
    """How to read a delimited interaction log.

    Columns are given by 0-based index or, when ``header`` is true, by name.
    ``time`` may be ``None`` (file order is the time order), a single column
    or a sequence of columns compared lexicographically, e.g. a day column
    followed by a time-of-day column.
    """

    delimiter: str = ","
    header: bool = False
    user: int | str = 0
    item: int | str = 1
    time: int | str | Sequence[int | str] | None = 2

    @classmethod
    def from_mapping(cls, columns: str, **kwargs) -> "FormatConfig":
        """Build from a ``"user,item[,time[+time...]]"`` string."""
        parts = [p.strip() for p in columns.split(",")]
        if len(parts) not in (2, 3):
            raise ConfigError(f"column mapping needs 2 or 3 fields, got {columns!r}")

        def conv(tok):
            return int(tok) if tok.lstrip("-").isdigit() else tok

        time = None
        if len(parts) == 3 and parts[2] not in ("", "-"):
            keys = [conv(t) for t in parts[2].split("+")]
            time = keys[0] if len(keys) == 1 else tuple(keys)
        return cls(user=conv(parts[0]), item=conv(parts[1]), time=time, **kwargs)

    @property
    def time_columns(self) -> tuple:
        if self.time is None:
            return ()
        if isinstance(self.time, (list, tuple)):
            return tuple(self.time)
        return (self.time,)


@dataclass
class EventLog:
    """Column-wise interaction log.

    ``users``/``items`` are integer codes into ``user_ids``/``item_ids``,
    assigned in order of first appearance. ``times`` has one column per
    order key; when the source has no order key it holds the row number.
    """

    users: np.ndarray
    items: np.ndarray
    times: np.ndarray
    user_ids: list
    item_ids: list
    malformed: int = 0
    lines: int = 0

    @property
    def user_count(self) -> int:
        return len(self.user_ids)

    @property
    def item_count(self) -> int:
        return len(self.item_ids)

    def __len__(self):
        return len(self.users)

    @property
    def records(self) -> list[EventRecord]:
        return list(self.iter_records())

    def iter_records(self) -> Iterator[EventRecord]:
        for u, i, t in zip(self.users, self.items, self.times):
            ts = float(t[0]) if len(t) == 1 else tuple(float(v) for v in t)
            yield EventRecord(self.user_ids[u], self.item_ids[i], ts)

    @classmethod
    def from_records(cls, records) -> "EventLog":
        """Build a log from ``(user, item, timestamp)`` triples or records."""
        user_codes, item_codes = {}, {}
        users, items, times = [], [], []
        for rec in records:
            if isinstance(rec, EventRecord):
                u, i, t = rec.user_id, rec.item_id, rec.timestamp
            else:
                u, i, t = rec
            users.append(user_codes.setdefault(u, len(user_codes)))
            items.append(item_codes.setdefault(i, len(item_codes)))
            times.append(t)
        t = np.asarray(times, dtype=float).reshape(len(times), -1)
        return cls(
            np.asarray(users, dtype=np.int64),
            np.asarray(items, dtype=np.int64),
            t,
            list(user_codes),
            list(item_codes),
            lines=len(users),
        )


@dataclass(frozen=True)
class SymbolSequence:
    """Time-ordered integer codes of one user's behaviour."""

    symbols: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "symbols", np.asarray(self.symbols, dtype=np.int64))

    @property
    def length(self) -> int:
        return len(self.symbols)

    def __len__(self):
        return len(self.symbols)

    @property
    def vocab_size(self) -> int:
        return len(np.unique(self.symbols))


@dataclass
class SequenceSet:
    """Per-user sequences sharing one item dictionary.

    ``vocabulary[code]`` is the item id behind a symbol code.
    """

    by_user: dict
    vocabulary: list
    excluded_users: int = 0
    excluded_events: int = 0

    def __getitem__(self, user_id) -> SymbolSequence:
        return self.by_user[user_id]

    def __len__(self):
        return len(self.by_user)

    def __iter__(self):
        return iter(self.by_user)

    def items(self):
        return self.by_user.items()

    def decode(self, user_id) -> list:
        return [self.vocabulary[c] for c in self.by_user[user_id].symbols]


def _resolve(col, header, what):
    if isinstance(col, int):
        return col
    if header is None:
        raise ConfigError(f"{what} column {col!r} given by name but the input has no header")
    try:
        return header.index(col)
    except ValueError:
        raise ConfigError(f"{what} column {col!r} not found in header {header}") from None


def parse_events(source, config: FormatConfig = FormatConfig()) -> EventLog:
    """Parse a delimited text stream into an :class:`EventLog`.

    ``source`` is a path, a text stream or a binary stream. Rows with too
    few fields, an empty user or item, or a non-finite order key are counted
    in ``EventLog.malformed`` and skipped.

    Raises
    ------
    OSError
        The source cannot be read.
    ConfigError
        The column mapping refers to a column the input does not have.
    EmptyLogError
        No valid record was found.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="", encoding="utf-8") as fh:
            return parse_events(fh, config)
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(source, "mode", ""):
        source = io.TextIOWrapper(source, encoding="utf-8", newline="")

    reader = csv.reader(source, delimiter=config.delimiter)
    header = None
    if config.header:
        header = next(reader, None)
        if header is None:
            raise EmptyLogError("input is empty")
        header = [h.strip() for h in header]
    u_col = _resolve(config.user, header, "user")
    i_col = _resolve(config.item, header, "item")
    t_cols = [_resolve(c, header, "time") for c in config.time_columns]
    if header is not None:
        missing = [c for c in [u_col, i_col, *t_cols] if c >= len(header)]
        if missing:
            raise ConfigError(f"column index {missing[0]} beyond header width {len(header)}")
    width = max([u_col, i_col, *t_cols]) + 1

    user_codes, item_codes = {}, {}
    users, items, times = [], [], []
    malformed = lines = 0
    for row in reader:
        lines += 1
        if not row or (len(row) == 1 and not row[0].strip()):
            malformed += 1
            continue
        if len(row) < width:
            malformed += 1
            continue
        u, i = row[u_col].strip(), row[i_col].strip()
        if not u or not i:
            malformed += 1
            continue
        if t_cols:
            try:
                key = [float(row[c]) for c in t_cols]
            except ValueError:
                malformed += 1
                continue
            if not all(math.isfinite(v) for v in key):
                malformed += 1
                continue
        else:
            key = [float(len(users))]
        users.append(user_codes.setdefault(u, len(user_codes)))
        items.append(item_codes.setdefault(i, len(item_codes)))
        times.append(key)

    if malformed:
        logger.warning("skipped %d malformed line(s) out of %d", malformed, lines)
    if not users:
        raise EmptyLogError(f"no valid records in {lines} line(s)")
    return EventLog(
        np.asarray(users, dtype=np.int64),
        np.asarray(items, dtype=np.int64),
        np.asarray(times, dtype=float),
        list(user_codes),
        list(item_codes),
        malformed=malformed,
        lines=lines,
    )


def build_sequences(log: EventLog, min_length: int = DEFAULT_MIN_LENGTH) -> SequenceSet:
    """Group a log by user into time-ordered sequences of global item codes.

    Ties in the order key keep input order. Users with fewer than
    ``min_length`` events are dropped and counted.
    """
    if min_length < 1:
        raise ValueError("min_length must be >= 1")
    vocabulary = list(log.item_ids)
    if len(log) == 0:
        return SequenceSet({}, vocabulary)

    # lexsort uses the last key as primary; row index last-resort keeps ties stable
    keys = [np.arange(len(log))]
    keys += [log.times[:, k] for k in range(log.times.shape[1] - 1, -1, -1)]
    keys.append(log.users)
    order = np.lexsort(keys)
    users = log.users[order]
    items = log.items[order]
    bounds = np.flatnonzero(np.diff(users)) + 1
    starts = np.concatenate(([0], bounds))
    ends = np.concatenate((bounds, [len(users)]))

    by_user = {}
    excluded_users = excluded_events = 0
    for a, b in zip(starts, ends):
        uid = log.user_ids[users[a]]
        if b - a < min_length:
            excluded_users += 1
            excluded_events += int(b - a)
            continue
        by_user[uid] = SymbolSequence(items[a:b].copy())
    return SequenceSet(by_user, vocabulary, excluded_users, excluded_events)
