# Sequences with known predictability, and how the bound sees them.
import numpy as np

from topn_predictability.entropy import lz_entropy_rate
from topn_predictability.fano import FanoProblem, sf_solve, zipf_ratios
from topn_predictability.synth import GeneratorSpec, generate, oracle_accuracy, true_predictability

spec = GeneratorSpec(method="second_order", M=1000, p=0.2, xi=0.6, length=2**15, seed=1)
truth = true_predictability(spec, ranks=10)
print("truth Top-1..5:", np.round(truth.cumulative[:5], 4))
print("oracle Top-1:", oracle_accuracy(spec, 1, 2**17))

seq = generate(spec)
S = lz_entropy_rate(seq)
print("entropy estimate:", round(S, 3), "bits,", seq.vocab_size, "distinct states")
for r in (1, 5, 10):
    pi1 = sf_solve(FanoProblem(S, seq.vocab_size, tuple(zipf_ratios(0.6, r)))).pi1
    print(f"r={r:2d} bound {pi1:.4f}  relative gap {(pi1 - truth.top_pi[0]) / truth.top_pi[0]:+.3f}")

# the six-slot chain; its best guess is better than c1 * p
first = GeneratorSpec(method="first_order", M=1000, p=0.2, xi=0.6)
print("first-order Top-1 truth:", round(true_predictability(first).top_pi[0], 4))
