"""Seeded Monte Carlo experiments: draw a defective set, test, decode, score."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import rng as streams
from .bounds import fano_floor, t_lower, t_upper
from .decoders import MAX_CANDIDATES, CapacityError, ml_decode
from .designs import BINARY_SPLIT, DONE, Strategy, TestMatrix
from .noise import NoiseModel, sample_outcomes

CSV_HEADER = ["n", "k", "model", "strategy", "t", "trials", "seed", "error_rate", "ci",
              "mean_tests", "fano_floor", "floor_violated"]
AXES = ("T", "p", "q", "u", "N")
STRATIFY_LIMIT = 10**4
Z95 = 1.959963984540054


class ConfigError(ValueError):
    pass


def fmt(x):
    """12 significant digits, the precision of every number we print."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


@dataclass(frozen=True)
class ExperimentConfig:
    n_items: int
    k_defects: int
    model: NoiseModel
    strategy: Strategy
    n_tests: int | None
    n_trials: int
    seed: int = 0
    check_fano: bool = True
    check_bounds: bool = False
    stratified: bool = False
    grid_step: float = 0.01

    def __post_init__(self):
        if isinstance(self.model, str):
            object.__setattr__(self, "model", NoiseModel.parse(self.model))
        if isinstance(self.strategy, str):
            object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        if not 1 <= self.k_defects < self.n_items:
            raise ConfigError(f"need 1 <= k < n, got n={self.n_items}, k={self.k_defects}")
        if self.n_trials < 1:
            raise ConfigError("need at least one trial")
        if self.n_tests is None:
            if self.strategy.kind != BINARY_SPLIT:
                raise ConfigError("a test budget is required for Bernoulli strategies")
        elif self.n_tests < 0:
            raise ConfigError("test budget must be nonnegative")
        if self.stratified:
            total = math.comb(self.n_items, self.k_defects)
            if total > STRATIFY_LIMIT or self.n_trials % total:
                raise ConfigError(
                    f"stratified runs need C(n, k) = {total} <= {STRATIFY_LIMIT} "
                    "dividing the number of trials")

    def to_dict(self):
        d = asdict(self)
        d["model"] = str(self.model)
        d["strategy"] = str(self.strategy)
        return d


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    truth: tuple
    estimate: tuple
    error: bool
    tests_used: int
    n_ties: int


@dataclass
class RunSummary:
    config: ExperimentConfig
    strategy: Strategy
    error_rate: float
    std_error: float
    ci_halfwidth: float
    mean_tests_used: float
    fano_floor: float | None
    floor_violated: bool
    n_errors: int
    t_lower: float | None = None
    t_upper: float | None = None
    per_trial: list | None = field(default=None, repr=False)

    def csv_fields(self):
        c = self.config
        return [c.n_items, c.k_defects, str(c.model), str(self.strategy),
                "none" if c.n_tests is None else c.n_tests, c.n_trials, c.seed,
                self.error_rate, self.ci_halfwidth, self.mean_tests_used,
                self.fano_floor, self.floor_violated]

    def to_dict(self):
        d = {name: value for name, value in zip(CSV_HEADER, self.csv_fields())}
        d.update(std_error=self.std_error, n_errors=self.n_errors,
                 t_lower=self.t_lower, t_upper=self.t_upper)
        return d


def resolve_strategy(strategy: Strategy, model, n, k, grid_step=0.01) -> Strategy:
    """Replace ``p=opt`` by the p minimising the converse bound."""
    if strategy.p != "opt":
        return strategy
    _, p_star, _ = t_lower(model, n, k, grid_step)
    return replace(strategy, p=p_star)


def _truth(cfg, trial):
    if cfg.stratified:
        total = math.comb(cfg.n_items, cfg.k_defects)
        return _nth_combination(cfg.n_items, cfg.k_defects, trial % total)
    draw = streams.stream(cfg.seed, trial, streams.DEFECTS)
    return tuple(sorted(int(i) for i in draw.choice(cfg.n_items, cfg.k_defects, replace=False)))


def _nth_combination(n, k, index):
    """``index``-th k-subset of range(n) in lexicographic order."""
    out, start = [], 0
    for slots in range(k, 0, -1):
        for i in range(start, n):
            block = math.comb(n - i - 1, slots - 1)
            if index < block:
                out.append(i)
                start = i + 1
                break
            index -= block
    return tuple(out)


def run_trial(cfg: ExperimentConfig, strategy: Strategy, trial: int) -> TrialRecord:
    n, k = cfg.n_items, cfg.k_defects
    truth = _truth(cfg, trial)
    design_key = trial // math.comb(n, k) if cfg.stratified else trial
    state = strategy.start(n, cfg.n_tests, streams.stream(cfg.seed, design_key, streams.DESIGN), k)
    channel = streams.stream(cfg.seed, trial, streams.CHANNEL)
    members = list(truth)
    history = []
    while True:
        stage = state.next_stage(history)
        if stage is DONE:
            break
        counts = stage[members].sum(axis=0)
        y = sample_outcomes(cfg.model, counts, channel)
        history.extend(zip(stage.T, (int(b) for b in y)))
    if strategy.kind == BINARY_SPLIT:
        estimate, ties = state.estimate(), 1
    else:
        outcomes = [b for _, b in history]
        result = ml_decode(cfg.model, TestMatrix.from_pools(state.pools, n), outcomes, n, k)
        estimate, ties = result.estimate, result.n_ties
    return TrialRecord(trial, truth, estimate, estimate != truth, state.tests_used, ties)


def _run_block(cfg, strategy, start, stop):
    return [run_trial(cfg, strategy, i) for i in range(start, stop)]


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, keep_trials: bool = False) -> RunSummary:
    """Estimate the average error of ``cfg.strategy`` by Monte Carlo.

    The result depends only on ``cfg``: trials draw from streams keyed by
    ``(seed, trial, role)`` and are reduced in trial order, so ``jobs``
    changes speed only.
    """
    strategy = resolve_strategy(cfg.strategy, cfg.model, cfg.n_items, cfg.k_defects, cfg.grid_step)
    if strategy.kind != BINARY_SPLIT and math.comb(cfg.n_items, cfg.k_defects) > MAX_CANDIDATES:
        raise CapacityError(
            f"C({cfg.n_items}, {cfg.k_defects}) candidate sets exceeds the ML decoding limit "
            f"of {MAX_CANDIDATES}")
    if jobs > 1 and cfg.n_trials > 1:
        bounds = np.linspace(0, cfg.n_trials, min(jobs * 4, cfg.n_trials) + 1).astype(int)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_run_block, [cfg] * (len(bounds) - 1), [strategy] * (len(bounds) - 1),
                             bounds[:-1], bounds[1:])
            records = [r for part in parts for r in part]
    else:
        records = _run_block(cfg, strategy, 0, cfg.n_trials)
    return summarize(cfg, strategy, records, keep_trials)


def summarize(cfg, strategy, records, keep_trials=False) -> RunSummary:
    n = len(records)
    errors = sum(r.error for r in records)
    rate = errors / n
    se = math.sqrt(rate * (1 - rate) / n)
    ci = Z95 * se + 0.5 / n
    mean_tests = sum(r.tests_used for r in records) / n
    floor, violated = None, False
    if cfg.check_fano:
        budget = cfg.n_tests if cfg.n_tests is not None else max(r.tests_used for r in records)
        floor = fano_floor(cfg.model, cfg.n_items, cfg.k_defects, budget, grid_step=cfg.grid_step)
        violated = rate + 3 * se < floor
    tl = tu = None
    if cfg.check_bounds:
        tl = t_lower(cfg.model, cfg.n_items, cfg.k_defects, cfg.grid_step)[0]
        tu = t_upper(cfg.model, cfg.n_items, cfg.k_defects, cfg.grid_step)[0]
    return RunSummary(cfg, strategy, rate, se, ci, mean_tests, floor, violated, errors,
                      tl, tu, list(records) if keep_trials else None)


def _with_axis(cfg: ExperimentConfig, axis, value, index):
    seed = streams.derive_seed(cfg.seed, index)
    if axis == "T":
        return replace(cfg, n_tests=int(value), seed=seed)
    if axis == "N":
        return replace(cfg, n_items=int(value), seed=seed)
    if axis == "p":
        if cfg.strategy.kind == BINARY_SPLIT:
            raise ConfigError("axis p needs a Bernoulli strategy")
        return replace(cfg, strategy=replace(cfg.strategy, p=float(value)), seed=seed)
    if axis in ("q", "u"):
        model = cfg.model
        try:
            model = NoiseModel(model.kind, **{"q": model.q, "u": model.u, axis: float(value)})
        except ValueError as exc:
            raise ConfigError(f"axis {axis} does not apply to {cfg.model}: {exc}") from None
        return replace(cfg, model=model, seed=seed)
    raise ConfigError(f"unknown sweep axis {axis!r}; choose from {AXES}")


def sweep(cfg: ExperimentConfig, axis: str, values, jobs: int = 1) -> list[RunSummary]:
    """One :func:`run_experiment` per value, seeds derived from ``(cfg.seed, index)``."""
    configs = [_with_axis(cfg, axis, v, i) for i, v in enumerate(values)]
    return [run_experiment(c, jobs=jobs) for c in configs]


def summaries_to_csv(summaries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in summaries:
        writer.writerow([fmt(x) for x in s.csv_fields()])
    return buf.getvalue()


def sidecar_json(summaries, extra=None) -> str:
    """Provenance record: the full configuration behind every CSV row."""
    runs = []
    for s in summaries:
        run = s.config.to_dict()
        run["resolved_strategy"] = str(s.strategy)
        run["summary"] = {key: (fmt(v) if isinstance(v, float) else v)
                          for key, v in s.to_dict().items()}
        runs.append(run)
    payload = {"runs": runs}
    if extra:
        payload.update(extra)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
