# Top-1 and Top-k bounds from one entropy value.
import numpy as np

from topn_predictability.fano import (
    FanoProblem,
    sf_solve,
    solve_classic,
    solve_naive_topn,
    zipf_ratios,
)

S, M = 5.0, 10_000  # bits per event, distinct items

# classic two-level bound
print("classic Top-1:", round(solve_classic(S, M), 4))

# swapping M for M - N hardly moves anything
for N in (1, 5, 10):
    print(f"naive Top-{N}:", round(solve_naive_topn(S, M, N), 4))

# coupling the ten leading probabilities through Zipf ratios
c = tuple(zipf_ratios(0.6, 10))
res = sf_solve(FanoProblem(S, M, c))
print("scaled pi1:", round(res.pi1, 4))
print("scaled Top-1..10:", np.round(res.topn, 3))

# more coupled ranks -> a tighter Top-1 bound
for r in (1, 2, 5, 10):
    print(f"r={r:2d}", round(sf_solve(FanoProblem(S, M, c[:r])).pi1, 4))
