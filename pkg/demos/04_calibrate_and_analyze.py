# Build a small bias table, then run a full analysis of a synthetic log.
import warnings

from topn_predictability.calibration import build_table
from topn_predictability.events import EventLog
from topn_predictability.pipeline import AnalyzeConfig, analyze
from topn_predictability.synth import GeneratorSpec, generate

ps = [round(0.02 * k, 2) for k in range(1, 17)]
table = build_table((ps, [0.6], range(1, 11)), length=2**13, seeds=5)
print("deviation at p=0.2 by rank:", [round(table[(0.2, 0.6, r)].deviation, 3) for r in range(1, 11)])

records = []
for u in range(20):
    seq = generate(GeneratorSpec(M=1000, p=0.2, xi=0.6, length=2**13, seed=500 + u))
    records += [(f"user{u:02d}", int(s), t) for t, s in enumerate(seq.symbols)]

with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    report = analyze(EventLog.from_records(records), AnalyzeConfig(xi_override=0.6, c_source="zipf"), table)
for w in caught:
    print("warning:", w.message)
print(report.to_tsv().split("\n\n")[1])
