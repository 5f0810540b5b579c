# Maximum-likelihood decoding by enumerating every candidate defective set.
import numpy as np

from gtlab import NoiseModel, gen_bernoulli_matrix, ml_decode
from gtlab.decoders import ml_maximizers
from gtlab.noise import sample_outcomes
from gtlab.rng import stream

model = NoiseModel.parse("addition:q=0.2")
n, k, t = 12, 2, 20
x = gen_bernoulli_matrix(n, t, 0.3, stream(4, 0, 1)).inclusion
truth = [3, 9]
y = sample_outcomes(model, x[truth].sum(axis=0), stream(4, 0, 2))

result = ml_decode(model, x, y, n, k)
print("truth", truth, "estimate", result.estimate)
print("log-likelihood", result.log_likelihood, "ties", result.n_ties)

# with too few tests many sets explain the data equally well
few = ml_maximizers(model, x[:, :3], y[:3], n, k)
print(len(few), "maximisers after 3 tests, first few:", few[:4])
