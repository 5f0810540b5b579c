# Test designs: a fixed Bernoulli matrix, staged rounds, and adaptive halving.
import numpy as np

from gtlab import Strategy, gen_bernoulli_matrix
from gtlab.designs import DONE
from gtlab.rng import stream

x = gen_bernoulli_matrix(8, 5, 0.3, stream(0, 0, 1))
print(x.inclusion)          # rows are items, columns are tests
print("density", x.inclusion.mean())

# binary splitting on 16 items, item 11 defective
state = Strategy.parse("binary-split").start(16, None)
history = []
while (pool := state.next_pool(history)) is not DONE:
    y = int(pool[11])
    print("test", np.flatnonzero(pool), "->", y)
    history.append((pool, y))
print("found", state.estimate(), "in", state.tests_used, "tests")

# staged: pools for a whole stage are drawn before any outcome is seen
staged = Strategy.parse("staged:p=0.5,s=3").start(6, 7, stream(0, 0, 1))
print(staged.next_stage([]).shape)  # (items, tests in this stage)
