# Noisy pooled tests: the outcome depends only on how many defectives are in the pool.
import numpy as np

from gtlab import NoiseModel
from gtlab.rng import stream
from gtlab.noise import sample_outcomes

models = [NoiseModel.parse(s) for s in
          ("noise-free", "addition:q=0.1", "dilution:u=0.5", "add-dilute:q=0.1,u=0.3")]

# P(Y = 1 | k defectives in the pool), k = 0..4
for m in models:
    print(f"{str(m):26s}", np.round(m.positive_table(4), 4))

# empirical check: dilution with two defectives misses 1/4 of the time
y = sample_outcomes(models[2], np.full(10_000, 2), stream(seed=1, trial=0, role=2))
print("dilution miss rate", 1 - y.mean())

# same stream, same bits
a = sample_outcomes(models[3], [0, 1, 2, 3], stream(5, 0, 2))
b = sample_outcomes(models[3], [0, 1, 2, 3], stream(5, 0, 2))
print("replayable:", np.array_equal(a, b))
