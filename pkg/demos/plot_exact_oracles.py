"""
Exact scores on tiny inputs
===========================

For Boolean data and for continuous data in at most three dimensions the
score can be computed by enumeration. These routines are slow by design
and serve as ground truth.
"""

# %%
import itertools

import numpy as np

from pidforest.oracle import (
    id_length,
    max_boolean_subcube_sparsity,
    pid_length_boolean,
    pidscore_1d,
    pidscore_bruteforce,
)

# The origin and the unit vectors of {0,1}^4. Naming the origin exactly
# takes all four coordinates, but narrowing it to the 5 points of the
# ball takes none: log2(5) bits.
ball = np.vstack([np.zeros(4, dtype=int), np.eye(4, dtype=int)])
print(id_length(ball[0], ball), pid_length_boolean(ball[0], ball))
print(max_boolean_subcube_sparsity(ball[0], ball))

# %%
# One dimension: the densest-interval scan agrees with enumeration.
pts = np.array([0.1, 0.5, 0.9])
for (fast, iv), x in zip(pidscore_1d(pts), pts):
    slow, _ = pidscore_bruteforce([x], pts[:, None])
    print(f"x={x}: {fast:.4f} on [{iv.lo}, {iv.hi}]  enumeration {slow:.4f}")

# %%
# Two dimensions: a lone point away from a tight pair.
grid = np.array([[0.1, 0.1], [0.12, 0.1], [0.9, 0.8]])
for x in grid:
    score, cube = pidscore_bruteforce(x, grid)
    print(x, round(score, 3), [(iv.lo, iv.hi) for iv in cube.intervals])

# %%
# Brute force over every dataset on {0,1}^2 confirms that the densest
# Boolean subcube through x has sparsity 2^(d - pidLength).
pool = list(itertools.product([0, 1], repeat=2))
worst = 0.0
for r in range(1, 5):
    for data in itertools.combinations(pool, r):
        for x in data:
            pid, _ = pid_length_boolean(x, data)
            worst = max(worst, abs(float(max_boolean_subcube_sparsity(x, data)) - 2 ** (2 - pid)))
print("largest deviation", worst)
