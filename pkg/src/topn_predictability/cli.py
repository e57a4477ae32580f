"""Command line front end.

Every subcommand writes tab-separated text by default and JSON with
``--json``. Exit codes: 0 success, 1 configuration error, 2 data error,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, calibration, fano, synth
from .entropy import lz_entropy_rate
from .events import ConfigError, EmptyLogError, FormatConfig, build_sequences, parse_events
from .pipeline import AnalyzeConfig, analyze
from .popularity import c_ratios, fit_zipf, rank_frequencies

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    """Bad command line; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _g(x):
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def _rounded(obj):
    if isinstance(obj, float):
        return float(f"{obj:.6g}")
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_rows(args, header, rows, meta=None):
    if args.json:
        payload = {"metadata": meta or {}, "rows": [dict(zip(header, r)) for r in rows]}
        _emit(args, json.dumps(_rounded(payload), indent=2) + "\n")
        return
    lines = [f"# {k}={_g(v)}" for k, v in (meta or {}).items()]
    lines.append("\t".join(header))
    lines += ["\t".join(_g(v) for v in row) for row in rows]
    _emit(args, "\n".join(lines) + "\n")


def _format_config(args) -> FormatConfig:
    delimiter = {"csv": ",", "tsv": "\t"}[args.format]
    return FormatConfig.from_mapping(args.columns, delimiter=delimiter, header=args.header)


def _parse_c(text):
    try:
        c = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--c must be comma-separated numbers, got {text!r}") from None
    return c


# subcommands


def cmd_analyze(args):
    config = AnalyzeConfig(
        format=_format_config(args),
        min_length=args.min_length,
        rank=args.rank,
        xi_override=args.xi_override,
        c_source=args.c_source,
        m_mode=args.m_mode,
        weighting=args.weighting,
    )
    table = calibration.read_table(args.table) if args.table else None
    report = analyze(args.input, config, table)
    _emit(args, report.to_json() if args.json else report.to_tsv())


def cmd_entropy(args):
    log = parse_events(args.input, _format_config(args))
    seqs = build_sequences(log, args.min_length)
    rows = []
    for uid in sorted(seqs.by_user, key=str):
        seq = seqs.by_user[uid]
        rows.append((uid, seq.length, seq.vocab_size, lz_entropy_rate(seq)))
    _emit_rows(args, ("user_id", "n", "M", "S"), rows, {"excluded_users": seqs.excluded_users})


def cmd_popularity(args):
    log = parse_events(args.input, _format_config(args))
    profile = rank_frequencies(log)
    xi = fit_zipf(profile, args.max_rank) if len(profile.freqs) >= 3 else float("nan")
    c = c_ratios(profile, len(profile.freqs))
    top = len(profile.freqs) if args.top is None else min(args.top, len(profile.freqs))
    rows = [
        (k + 1, log.item_ids[profile.items[k]], int(profile.freqs[k]), float(c[k]))
        for k in range(top)
    ]
    _emit_rows(args, ("rank", "item_id", "freq", "c"), rows, {"xi": xi, "items": len(profile.freqs)})


def cmd_solve(args):
    if args.c is not None:
        c = _parse_c(args.c)
    elif args.xi is not None:
        c = tuple(fano.zipf_ratios(args.xi, args.rank))
    else:
        raise UsageError("solve needs --c or --xi")
    res = fano.sf_solve(fano.FanoProblem(args.S, args.M, c))
    meta = {"S": args.S, "M": args.M, "r": len(c), "pi1": res.pi1, "clamped": int(res.clamped)}
    rows = [(k + 1, v) for k, v in enumerate(res.topn)]
    _emit_rows(args, ("k", "bound"), rows, meta)


def cmd_generate(args):
    if not args.out:
        raise UsageError("generate needs --out")
    spec = synth.GeneratorSpec(
        method=args.method,
        M=args.M,
        p=args.p,
        xi=args.xi,
        length=args.length,
        seed=args.seed,
        r_mode=args.r_mode,
    )
    truth = synth.true_predictability(spec, ranks=args.rank)
    meta = spec.metadata()
    meta["ground_truth"] = {
        "top": list(truth.top_pi),
        "cumulative": list(truth.cumulative),
        "source": truth.source,
    }
    out = Path(args.out)
    if args.users:
        # one sequence per user with consecutive seeds, written as user,item,time
        lines = []
        for u in range(args.users):
            seq = synth.generate(replace(spec, seed=args.seed + u))
            lines += [f"u{u:05d},{s},{t}" for t, s in enumerate(seq.symbols)]
        meta["users"] = args.users
    else:
        lines = [str(s) for s in synth.generate(spec).symbols]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    sidecar = out.with_name(out.name + ".json")
    sidecar.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def cmd_calibrate(args):
    if not args.out:
        raise UsageError("calibrate needs --out")
    ps, xis, ranks = calibration.default_grid()
    if args.p:
        ps = [float(v) for v in args.p.split(",")]
    if args.xi:
        xis = [float(v) for v in args.xi.split(",")]
    ranks = list(range(1, args.rank + 1))
    table = calibration.build_table(
        (ps, xis, ranks),
        method=args.method,
        length=args.length,
        seeds=args.seeds,
        M=args.M,
        base_seed=args.seed,
        r_mode=args.r_mode,
        n_jobs=args.jobs,
        strict=args.strict,
    )
    calibration.write_table(table, args.out)


def cmd_correct(args):
    table = calibration.read_table(args.table)
    c = _parse_c(args.c) if args.c else tuple(fano.zipf_ratios(args.xi, args.rank))
    bound = fano.BoundResult(args.pi1, fano.topn_from_pi1(args.pi1, c), False, 0.0, c)
    res = calibration.correct(bound, table, args.xi)
    meta = {
        "pi1": args.pi1,
        "deviation": res.deviation,
        "pi1_corrected": res.pi1,
        "table_id": table.table_id(),
    }
    rows = [(k + 1, bound.topn[k], res.topn[k]) for k in range(len(c))]
    _emit_rows(args, ("k", "bound", "corrected"), rows, meta)


def _add_input(p):
    p.add_argument("--input", required=True, help="interaction log (path)")
    p.add_argument("--format", choices=("csv", "tsv"), default="csv")
    p.add_argument(
        "--columns",
        default="0,1,2",
        help="user,item[,time[+time]] by index or header name; omit time to keep file order",
    )
    p.add_argument("--header", action="store_true", help="first line holds column names")
    p.add_argument("--min-length", type=int, default=50)


def _add_output(p):
    p.add_argument("--out", help="write here instead of stdout")
    p.add_argument("--json", action="store_true", help="JSON instead of tab-separated text")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topn-predictability", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="Top-1..Top-r bounds for a dataset")
    _add_input(p)
    _add_output(p)
    p.add_argument("--rank", type=int, default=10)
    p.add_argument("--xi-override", type=float)
    p.add_argument("--table", help="calibration table used to correct the aggregate")
    p.add_argument("--c-source", choices=("population", "zipf"), default="population")
    p.add_argument("--m-mode", choices=("user", "global"), default="user")
    p.add_argument("--weighting", choices=("user", "event"), default="user")
    p.add_argument("--seed", type=int, default=0, help="accepted for symmetry; analyze is deterministic")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("entropy", help="per-user Lempel-Ziv entropy rates")
    _add_input(p)
    _add_output(p)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("popularity", help="rank-frequency profile and Zipf fit")
    _add_input(p)
    _add_output(p)
    p.add_argument("--top", type=int, help="only the first TOP ranks")
    p.add_argument("--max-rank", type=int, default=1000, help="ranks used by the Zipf fit")
    p.set_defaults(func=cmd_popularity)

    p = sub.add_parser("solve", help="Fano bound for one (S, M, c)")
    _add_output(p)
    p.add_argument("--S", type=float, required=True, help="entropy rate in bits")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--c", help="comma-separated ratios starting with 1")
    p.add_argument("--xi", type=float, help="synthesize c_i = i**-xi")
    p.add_argument("--rank", type=int, default=10)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("generate", help="synthetic sequence with known predictability")
    p.add_argument("--out", help="sequence file; metadata goes to OUT.json")
    p.add_argument("--method", choices=("first_order", "second_order"), default="second_order")
    p.add_argument("--M", type=int, default=1000)
    p.add_argument("--p", type=float, default=0.2)
    p.add_argument("--xi", type=float, default=0.6)
    p.add_argument("--length", type=int, default=2**13)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r-mode", choices=("uniform", "same"), default="uniform")
    p.add_argument("--rank", type=int, default=10, help="ranks of ground truth to record")
    p.add_argument("--users", type=int, default=0, help="emit a user,item,time log of this many users")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("calibrate", help="build a calibration table")
    p.add_argument("--out", help="table file")
    p.add_argument("--method", choices=("first_order", "second_order"), default="second_order")
    p.add_argument("--M", type=int, default=calibration.DEFAULT_M)
    p.add_argument("--p", help="comma-separated p values (default 0.01..0.62)")
    p.add_argument("--xi", help="comma-separated xi values (default 0.53..0.67)")
    p.add_argument("--rank", type=int, default=10)
    p.add_argument("--length", type=int, default=calibration.DEFAULT_LENGTH)
    p.add_argument("--seeds", type=int, default=calibration.DEFAULT_SEEDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r-mode", choices=("uniform", "same"), default="uniform")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--strict", action="store_true", help="fail on table shape violations")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("correct", help="apply a calibration table to a Top-1 bound")
    _add_output(p)
    p.add_argument("--table", required=True)
    p.add_argument("--pi1", type=float, required=True)
    p.add_argument("--xi", type=float, required=True)
    p.add_argument("--rank", type=int, default=10)
    p.add_argument("--c", help="ratios for the Top-k vector (default i**-xi)")
    p.set_defaults(func=cmd_correct)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    logging.captureWarnings(True)
    try:
        args.func(args)
    except (UsageError, ConfigError, calibration.TableFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EmptyLogError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # remaining ValueErrors come from option values outside their domain
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
