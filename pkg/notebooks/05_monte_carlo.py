# Monte Carlo error rates against the Fano floor, and a small sweep.
from gtlab import ExperimentConfig, run_experiment, sweep
from gtlab.sim import summaries_to_csv

cfg = ExperimentConfig(n_items=50, k_defects=2, model="dilution:u=0.5",
                       strategy="bernoulli:p=opt", n_tests=20, n_trials=500, seed=1)
s = run_experiment(cfg)
print(s.strategy, "error", s.error_rate, "+-", s.ci_halfwidth, "floor", s.fano_floor)

# adaptive halving stops once it has found everything
s = run_experiment(ExperimentConfig(64, 1, "noise-free", "binary-split", None, 200, seed=1))
print("binary split: error", s.error_rate, "mean tests", s.mean_tests_used)

# more tests, fewer errors; seeds for each point derive from the base seed
rows = sweep(cfg, "T", [5, 15, 30])
print(summaries_to_csv(rows))

# the same from the shell:
#   gtlab sweep --n 50 --k 2 --model dilution:u=0.5 --tests 5 --trials 500 \
#       --axis T --values 5,15,30 --seed 1 --output sweep.csv
