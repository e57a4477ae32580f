# Lempel-Ziv entropy rate on a few toy sequences.
import math

import numpy as np

from topn_predictability.entropy import lz_entropy_rate, lz_lambdas

print(lz_lambdas("ababa").lambdas)  # shortest unseen substring at each position

rng = np.random.default_rng(0)
for M in (2, 8, 50):
    seq = rng.integers(0, M, size=2**15)
    print(f"iid M={M:3d}: estimate {lz_entropy_rate(seq):.3f}  log2 M {math.log2(M):.3f}")

# order matters, frequencies alone do not
periodic = np.tile(np.arange(8), 2**12)
shuffled = rng.permutation(periodic)
print("periodic:", round(lz_entropy_rate(periodic), 3))
print("same symbols shuffled:", round(lz_entropy_rate(shuffled), 3))
