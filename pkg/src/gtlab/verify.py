"""Built-in self-checks: closed-form vs enumerated information, and the
Monte Carlo error rate against the Fano floor on preset experiments."""

from __future__ import annotations

import sys
import time

import numpy as np

from .bounds import MISpec, mi_from_table, mutual_information_bruteforce
from .designs import Strategy
from .noise import NoiseModel
from .sim import ExperimentConfig, run_experiment

MI_MODELS = (
    NoiseModel.noise_free(),
    NoiseModel.addition(0.05),
    NoiseModel.addition(0.2),
    NoiseModel.dilution(0.1),
    NoiseModel.dilution(0.5),
    NoiseModel.add_dilute(0.1, 0.3),
)
MI_P_VALUES = tuple(np.arange(1, 10) / 10)
MI_TOL = 1e-10

FANO_MODELS = (NoiseModel.noise_free(), NoiseModel.addition(0.1), NoiseModel.dilution(0.5))
FANO_STRATEGIES = ("bernoulli:p=opt", "binary-split", "staged:p=opt,s=5")
FANO_TESTS = (5, 10, 15, 20)


def mi_check(model, k, fault=False):
    """Largest closed-form vs enumeration gap over all ell and p for one (model, k)."""
    f = np.asarray(model.positive_table(k), dtype=float)
    if fault and k >= 1:
        f = f.copy()
        f[1] = 1.0 - f[1]
    worst = 0.0
    for ell in range(k):
        for p in MI_P_VALUES:
            closed = mi_from_table(f, k, ell, p)
            brute = mutual_information_bruteforce(MISpec(model, k, ell, p))
            worst = max(worst, abs(closed - brute))
    return worst


def fano_presets(trials, tests):
    for model in FANO_MODELS:
        for strategy in FANO_STRATEGIES:
            for t in tests:
                yield ExperimentConfig(50, 2, model, Strategy.parse(strategy), t, trials,
                                       seed=20120716)


def run_verify(quick=False, inject_fault=False, out=None) -> bool:
    """Run every check, print one line each, return True iff all pass."""
    out = sys.stdout if out is None else out
    start = time.perf_counter()
    ok = True
    kmax = 3 if quick else 6
    for i, model in enumerate(MI_MODELS):
        for k in range(1, kmax + 1):
            gap = mi_check(model, k, fault=inject_fault and i == 2)
            passed = gap <= MI_TOL
            ok &= passed
            print(f"{'PASS' if passed else 'FAIL'} mi-identity model={model} k={k} "
                  f"max_gap={gap:.3e}", file=out)
    trials, tests = (100, (5, 20)) if quick else (2000, FANO_TESTS)
    for cfg in fano_presets(trials, tests):
        s = run_experiment(cfg)
        passed = not s.floor_violated
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} fano-floor model={cfg.model} strategy={s.strategy} "
              f"t={cfg.n_tests} error_rate={s.error_rate:.12g} floor={s.fano_floor:.12g}", file=out)
    print(f"{'ALL PASS' if ok else 'FAILURES'} in {time.perf_counter() - start:.1f}s", file=out)
    return ok
