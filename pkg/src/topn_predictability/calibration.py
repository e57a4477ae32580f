"""Bias tables for the scaled Fano bound.

Sequences with known predictability are generated over a grid of base
probabilities ``p`` and Zipf exponents ``xi``; for each scaling rank ``r``
the median bound is compared with the true Top-1 predictability. The
relative deviation ``(bound - truth) / truth`` is stored per cell and later
used to pull bounds measured on real data back towards the truth.

Table files are UTF-8 text: ``#`` header lines carrying ``key=value``
metadata, then one tab-separated ``p xi r deviation n_seeds`` row per cell.
Infeasible cells (``sum(c) * p >= 1``) are kept with ``nan`` deviation and
zero seeds so the grid stays complete.
"""

from __future__ import annotations

import hashlib
import io
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import fano, synth
from .entropy import lz_entropy_rate

logger = logging.getLogger(__name__)

__all__ = [
    "FORMAT_VERSION",
    "CalibrationCell",
    "CalibrationTable",
    "CalibrationWarning",
    "TableFormatError",
    "default_grid",
    "build_table",
    "lookup",
    "correct",
    "read_table",
    "write_table",
]

FORMAT_VERSION = 1
COLUMNS = ("p", "xi", "r", "deviation", "n_seeds")
DEFAULT_LENGTH = 2**15
DEFAULT_SEEDS = 20
DEFAULT_M = 1000
# relative spread of a column's expected bounds below which lookup warns
FLAT_SPREAD = 0.01


class CalibrationWarning(UserWarning):
    """A lookup fell outside the table and was clamped to its boundary."""


class TableFormatError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationCell:
    p: float
    xi: float
    r: int
    deviation: float
    n_seeds: int
    seq_length: int = 0

    @property
    def feasible(self) -> bool:
        return self.n_seeds > 0 and not math.isnan(self.deviation)


def default_grid():
    """``p`` in 0.01..0.62, ``xi`` in 0.53..0.67 (both step 0.01), ``r`` in 1..10."""
    ps = [round(0.01 * k, 2) for k in range(1, 63)]
    xis = [round(0.01 * k, 2) for k in range(53, 68)]
    return ps, xis, list(range(1, 11))


@dataclass
class CalibrationTable:
    cells: dict = field(default_factory=dict)  # (p, xi, r) -> CalibrationCell
    meta: dict = field(default_factory=dict)

    @property
    def ps(self):
        return sorted({k[0] for k in self.cells})

    @property
    def xis(self):
        return sorted({k[1] for k in self.cells})

    @property
    def ranks(self):
        return sorted({k[2] for k in self.cells})

    @property
    def method(self) -> str:
        return self.meta.get("method", "second_order")

    @property
    def M(self) -> int:
        return int(self.meta.get("M", DEFAULT_M))

    def __getitem__(self, key) -> CalibrationCell:
        return self.cells[key]

    def __len__(self):
        return len(self.cells)

    def __eq__(self, other):
        if not isinstance(other, CalibrationTable):
            return NotImplemented
        if self.meta != other.meta or self.cells.keys() != other.cells.keys():
            return False
        for key, a in self.cells.items():
            b = other.cells[key]
            same_dev = a.deviation == b.deviation or (
                math.isnan(a.deviation) and math.isnan(b.deviation)
            )
            if not same_dev or (a.p, a.xi, a.r, a.n_seeds) != (b.p, b.xi, b.r, b.n_seeds):
                return False
        return True

    def truth(self, p, xi) -> float:
        return _truth(self.method, self.M, float(p), float(xi), self.meta.get("r_mode", "uniform"))

    def is_complete(self) -> bool:
        return len(self.cells) == len(self.ps) * len(self.xis) * len(self.ranks)

    def violations(self, floor=-0.05) -> list[str]:
        """Cells breaking the expected shape of a table.

        Reports deviations that grow with ``r`` and deviations below
        ``floor`` (a bound materially under the truth).
        """
        out = []
        for p in self.ps:
            for xi in self.xis:
                prev = None
                for r in self.ranks:
                    cell = self.cells.get((p, xi, r))
                    if cell is None or not cell.feasible:
                        continue
                    if prev is not None and cell.deviation > prev + 1e-12:
                        out.append(f"deviation increases at p={p}, xi={xi}, r={r}")
                    if cell.deviation < floor:
                        out.append(
                            f"deviation {cell.deviation:.4f} below {floor} at p={p}, xi={xi}, r={r}"
                        )
                    prev = cell.deviation
        return out

    def table_id(self) -> str:
        return hashlib.sha256(dumps(self).encode()).hexdigest()[:12]


@lru_cache(maxsize=None)
def _truth(method, M, p, xi, r_mode="uniform"):
    spec = synth.GeneratorSpec(method=method, M=M, p=p, xi=xi, length=1, r_mode=r_mode)
    return synth.true_predictability(spec, ranks=1).top_pi[0]


def _cell_seeds(base_seed, p, xi, n):
    # keyed on the cell's coordinates so sub-grids reproduce full-grid cells
    key = (int(round(p * 1e6)), int(round(xi * 1e6)))
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=key)
    return [int(s) for s in seq.generate_state(n, dtype=np.uint64)]


def _run_pair(args):
    """Median Top-1 bound per rank for one ``(p, xi)`` grid point."""
    method, M, p, xi, ranks, length, seeds, r_mode = args
    try:
        base = synth.GeneratorSpec(method=method, M=M, p=p, xi=xi, length=length, r_mode=r_mode)
    except ValueError:
        return None
    c = fano.zipf_ratios(xi, max(ranks))
    bounds = {r: [] for r in ranks}
    for seed in seeds:
        spec = replace(base, seed=seed)
        seq = synth.generate(spec)
        S = lz_entropy_rate(seq)
        m = seq.vocab_size
        for r in ranks:
            if r <= m - 1:
                bounds[r].append(fano.sf_solve(fano.FanoProblem(S, m, tuple(c[:r]))).pi1)
    return {r: (float(np.median(v)) if v else math.nan, len(v)) for r, v in bounds.items()}


def build_table(
    grid=None,
    method: str = "second_order",
    length: int = DEFAULT_LENGTH,
    seeds: int = DEFAULT_SEEDS,
    M: int = DEFAULT_M,
    base_seed: int = 0,
    r_mode: str = "uniform",
    n_jobs: int = 1,
    strict: bool = False,
) -> CalibrationTable:
    """Sweep the generator over ``grid = (ps, xis, ranks)`` and tabulate bias.

    Each cell runs the same estimate pipeline used on real data: Lempel-Ziv
    entropy, ratios ``i**-xi``, and the Fano solve at rank ``r`` with the
    sequence's own distinct-state count. Per-cell seeds are derived from
    ``base_seed`` and the cell's grid position.

    With ``strict`` the build raises when :meth:`CalibrationTable.violations`
    reports anything; otherwise violations are logged.
    """
    ps, xis, ranks = default_grid() if grid is None else grid
    ps = [float(p) for p in ps]
    xis = [float(x) for x in xis]
    ranks = sorted(int(r) for r in ranks)
    if not ps or not xis or not ranks:
        raise ValueError("calibration grid must be non-empty")
    if length < 2**12:
        logger.warning("sequence length %d is below the recommended 2**12", length)

    jobs = [
        (method, M, p, xi, ranks, length, _cell_seeds(base_seed, p, xi, seeds), r_mode)
        for p in ps
        for xi in xis
    ]
    if n_jobs == 1:
        results = list(map(_run_pair, jobs))
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_run_pair, jobs, chunksize=1))

    table = CalibrationTable(
        meta={
            "format_version": str(FORMAT_VERSION),
            "method": method,
            "M": str(M),
            "length": str(length),
            "seeds": str(seeds),
            "base_seed": str(base_seed),
            "r_mode": r_mode,
            "prng": synth.PRNG,
        }
    )
    for job, res in zip(jobs, results):
        _, _, p, xi, *_ = job
        truth = _truth(method, M, p, xi, r_mode) if res is not None else math.nan
        for r in ranks:
            if res is None or res[r][1] == 0:
                table.cells[(p, xi, r)] = CalibrationCell(p, xi, r, math.nan, 0, length)
            else:
                median, n = res[r]
                table.cells[(p, xi, r)] = CalibrationCell(
                    p, xi, r, (median - truth) / truth, n, length
                )

    problems = table.violations()
    if problems:
        msg = f"{len(problems)} calibration violation(s), first: {problems[0]}"
        if strict:
            raise RuntimeError(msg)
        logger.warning(msg)
    return table


def _nearest(values, x):
    values = np.asarray(values, dtype=float)
    return int(np.argmin(np.abs(values - x)))


def lookup(table: CalibrationTable, pi_estimate: float, xi: float, r: int) -> float:
    """Deviation to apply to a Top-1 bound measured at scaling rank ``r``.

    The cell is found in two steps. First the column ``(xi, r)`` is searched
    for the cell whose expected bound ``truth * (1 + deviation)`` is closest
    to ``pi_estimate``. Then the estimate is corrected with that deviation
    and the cell whose truth is closest to the corrected value gives the
    final deviation. Keys outside the table clamp to its edge and raise a
    :class:`CalibrationWarning`.
    """
    if not table.cells:
        raise TableFormatError("calibration table is empty")
    if r not in table.ranks:
        raise ValueError(f"rank {r} not in table ranks {table.ranks}")
    xis = table.xis
    grid_xi = xis[_nearest(xis, xi)]
    if xi < xis[0] - 1e-9 or xi > xis[-1] + 1e-9:
        warnings.warn(
            f"xi={xi:.4g} outside table range [{xis[0]}, {xis[-1]}], using {grid_xi}",
            CalibrationWarning,
            stacklevel=2,
        )

    column = [
        table.cells[(p, grid_xi, r)]
        for p in table.ps
        if (p, grid_xi, r) in table.cells and table.cells[(p, grid_xi, r)].feasible
    ]
    if not column:
        raise TableFormatError(f"no feasible cell for xi={grid_xi}, r={r}")
    truths = np.array([table.truth(cell.p, grid_xi) for cell in column])
    devs = np.array([cell.deviation for cell in column])
    expected = truths * (1 + devs)

    if len(column) > 1 and np.ptp(expected) < FLAT_SPREAD * np.mean(np.abs(expected)):
        warnings.warn(
            f"tabulated bounds for xi={grid_xi}, r={r} barely depend on p "
            f"(spread {np.ptp(expected):.3g}); the correction is not identifiable",
            CalibrationWarning,
            stacklevel=2,
        )
    if not expected.min() - 1e-9 <= pi_estimate <= expected.max() + 1e-9:
        warnings.warn(
            f"estimate {pi_estimate:.4g} outside tabulated bounds "
            f"[{expected.min():.4g}, {expected.max():.4g}]",
            CalibrationWarning,
            stacklevel=2,
        )
    first = devs[_nearest(expected, pi_estimate)]
    guess = pi_estimate / (1 + first)
    return float(devs[_nearest(truths, guess)])


def correct(bound: fano.BoundResult, table: CalibrationTable, xi: float) -> fano.BoundResult:
    """Apply the tabulated deviation for ``bound``'s rank to its Top-1 value."""
    deviation = lookup(table, bound.pi1, xi, len(bound.c))
    return fano.with_correction(bound, deviation)


def _fmt(x) -> str:
    return repr(float(x))


def dumps(table: CalibrationTable) -> str:
    out = io.StringIO()
    out.write("# top-n predictability calibration table\n")
    meta = {"format_version": str(FORMAT_VERSION), **table.meta}
    for key, value in meta.items():
        out.write(f"# {key}={value}\n")
    out.write("# " + "\t".join(COLUMNS) + "\n")
    for key in sorted(table.cells):
        cell = table.cells[key]
        row = (_fmt(cell.p), _fmt(cell.xi), str(cell.r), _fmt(cell.deviation), str(cell.n_seeds))
        out.write("\t".join(row) + "\n")
    return out.getvalue()


def loads(text: str) -> CalibrationTable:
    meta = {}
    cells = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                meta[key.strip()] = value.strip()
            continue
        parts = line.split("\t")
        if len(parts) != len(COLUMNS):
            raise TableFormatError(f"line {lineno}: expected {len(COLUMNS)} fields, got {len(parts)}")
        try:
            p, xi, dev = float(parts[0]), float(parts[1]), float(parts[3])
            r, n = int(parts[2]), int(parts[4])
        except ValueError as exc:
            raise TableFormatError(f"line {lineno}: {exc}") from None
        cells[(p, xi, r)] = CalibrationCell(p, xi, r, dev, n, int(meta.get("length", 0)))
    version = meta.get("format_version")
    if version is None or int(version) != FORMAT_VERSION:
        raise TableFormatError(f"unsupported or missing format_version {version!r}")
    if not cells:
        raise TableFormatError("table has no cells")
    return CalibrationTable(cells, meta)


def write_table(table: CalibrationTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(table))


def read_table(path) -> CalibrationTable:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
