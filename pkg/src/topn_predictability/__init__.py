"""Upper bounds on Top-N recommendation accuracy from behaviour sequences."""

__version__ = "0.1.0"

from .calibration import CalibrationTable, build_table, correct, lookup, read_table, write_table
from .entropy import lz_entropy_rate, lz_lambdas
from .events import EventLog, FormatConfig, SymbolSequence, build_sequences, parse_events
from .fano import (
    BoundResult,
    FanoProblem,
    sf_eval,
    sf_solve,
    solve_classic,
    solve_naive_topn,
    zipf_ratios,
)
from .pipeline import AnalyzeConfig, PredictabilityReport, analyze
from .popularity import c_ratios, fit_zipf, rank_frequencies
from .synth import GeneratorSpec, generate, oracle_accuracy, true_predictability
