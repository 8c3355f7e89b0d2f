"""
Mixed column types and explanations
===================================

Columns can be continuous, ordered categorical or unordered categorical.
Each score comes with a witness cell, reported in the original units,
which says which few attributes make the row unusual.
"""

# %%
import numpy as np

from pidforest import AttributeSpec, Dataset, HyperParams, deserialize, fit, serialize

rng = np.random.default_rng(0)
n = 2000
cpu = rng.normal(40, 8, n)
os_code = rng.choice(3, n, p=[0.6, 0.39, 0.01])  # linux, mac, rare bsd
tier = rng.integers(0, 4, n)
cpu[:5] = 95.0  # a handful of overloaded machines

columns = (
    AttributeSpec.continuous(cpu.min(), cpu.max(), "cpu"),
    AttributeSpec.categorical(3, ordered=False, name="os", categories=("linux", "mac", "bsd")),
    AttributeSpec.categorical(4, ordered=True, name="tier"),
)
ds = Dataset(columns, np.c_[cpu, os_code, tier])
forest = fit(ds, HyperParams(seed=0))
report = forest.score(ds)

# %%
for i in np.argsort(-report.scores, kind="stable")[:8]:
    print(i, round(float(report.scores[i]), 2), report.witness_ranges(int(i), top=2))

# %%
# Models are plain JSON and round-trip exactly.
text = serialize(forest)
print(len(text), "bytes;", np.array_equal(deserialize(text).score(ds).scores, report.scores))
