"""Pooling designs: fixed Bernoulli matrices and staged/adaptive strategies.

A strategy is started once per trial and then asked for pools.  Pools are
committed in stages of ``stage_size`` tests: the pools of a stage may not
depend on outcomes from the same stage, and the next stage is only drawn
once every outcome of the current one is known.  ``stage_size == 1`` is
fully adaptive; ``stage_size == budget`` is nonadaptive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BERNOULLI = "bernoulli"
BINARY_SPLIT = "binary-split"
STAGED = "staged"


class StrategySpecError(ValueError):
    pass


class HistoryError(RuntimeError):
    """The history handed to a strategy is not its own pools in order."""


class _Done:
    def __repr__(self):
        return "DONE"


DONE = _Done()


@dataclass(frozen=True)
class TestMatrix:
    """N x T inclusion matrix; ``inclusion[i, t]`` is 1 iff item i is in pool t."""

    inclusion: np.ndarray

    __test__ = False  # not a pytest class

    def __post_init__(self):
        x = np.asarray(self.inclusion)
        if x.ndim != 2:
            raise ValueError("inclusion must be a 2-D array")
        if x.size and not np.isin(x, (0, 1)).all():
            raise ValueError("inclusion entries must be bits")
        object.__setattr__(self, "inclusion", x.astype(np.uint8))

    @property
    def n_items(self):
        return self.inclusion.shape[0]

    @property
    def n_tests(self):
        return self.inclusion.shape[1]

    @classmethod
    def from_pools(cls, pools, n_items):
        """Stack a sequence of length-N pools as columns."""
        pools = [np.asarray(pool) for pool in pools]
        if not pools:
            return cls(np.zeros((n_items, 0), dtype=np.uint8))
        return cls(np.stack(pools, axis=1))


def gen_bernoulli_matrix(n: int, t: int, p: float, rng: np.random.Generator) -> TestMatrix:
    """IID Bernoulli(p) test matrix with ``n`` items and ``t`` tests."""
    if n < 1 or t < 0:
        raise ValueError("need n >= 1 and t >= 0")
    if not 0.0 < p < 1.0:
        raise ValueError(f"inclusion probability must lie in (0, 1), got {p}")
    return TestMatrix(rng.random((n, t)) < p)


def defective_set(members, n_items):
    """Validated sorted tuple of distinct item indices."""
    members = tuple(sorted(int(i) for i in members))
    if len(set(members)) != len(members):
        raise ValueError("defective indices must be distinct")
    if members and not (0 <= members[0] and members[-1] < n_items):
        raise ValueError("defective index out of range")
    return members


@dataclass(frozen=True)
class Strategy:
    """Description of a pooling strategy.

    ``kind`` is ``"bernoulli"`` (nonadaptive, all tests in one stage),
    ``"staged"`` (Bernoulli pools committed ``stage_size`` at a time) or
    ``"binary-split"`` (adaptive halving search, one test per stage).
    ``p`` may be the string ``"opt"`` for Bernoulli kinds; it is resolved
    by the caller (see :func:`gtlab.sim.resolve_strategy`).
    """

    kind: str
    p: float | str | None = None
    stage_size: int | None = None

    def __post_init__(self):
        if self.kind == BINARY_SPLIT:
            if self.p is not None or self.stage_size is not None:
                raise StrategySpecError("binary-split takes no parameters")
            return
        if self.kind not in (BERNOULLI, STAGED):
            raise StrategySpecError(f"unknown strategy {self.kind!r}")
        if self.p != "opt":
            if self.p is None or not 0.0 < float(self.p) < 1.0:
                raise StrategySpecError(f"p must lie in (0, 1), got {self.p}")
            object.__setattr__(self, "p", float(self.p))
        if self.kind == STAGED:
            if self.stage_size is None or int(self.stage_size) < 1:
                raise StrategySpecError("stage size must be a positive integer")
            object.__setattr__(self, "stage_size", int(self.stage_size))
        elif self.stage_size is not None:
            raise StrategySpecError("bernoulli takes no stage size")

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        """Parse ``bernoulli:p=<float|opt>``, ``binary-split`` or
        ``staged:p=<float|opt>,s=<int>``."""
        kind, _, rest = text.strip().partition(":")
        params = {}
        for item in filter(None, rest.split(",")):
            key, eq, value = item.partition("=")
            if not eq or key.strip() in params:
                raise StrategySpecError(f"bad strategy parameter {item!r}")
            params[key.strip()] = value.strip()
        try:
            if kind == BINARY_SPLIT and not params:
                return cls(BINARY_SPLIT)
            p = params.get("p")
            p = p if p in (None, "opt") else float(p)
            if kind == BERNOULLI and set(params) == {"p"}:
                return cls(BERNOULLI, p=p)
            if kind == STAGED and set(params) == {"p", "s"}:
                return cls(STAGED, p=p, stage_size=int(params["s"]))
        except ValueError as exc:
            raise StrategySpecError(f"bad strategy {text!r}: {exc}") from None
        raise StrategySpecError(f"bad strategy {text!r}")

    def __str__(self):
        if self.kind == BINARY_SPLIT:
            return BINARY_SPLIT
        p = self.p if self.p == "opt" else f"{self.p:g}"
        if self.kind == BERNOULLI:
            return f"bernoulli:p={p}"
        return f"staged:p={p},s={self.stage_size}"

    @property
    def adaptive(self):
        return self.kind != BERNOULLI

    def start(self, n_items: int, budget: int | None, rng: np.random.Generator | None = None,
              k_defects: int = 1):
        """Fresh per-trial state.

        ``budget`` caps the number of tests (``None`` means unlimited, only
        allowed for binary splitting).  ``rng`` drives pool randomness.
        """
        if self.kind == BINARY_SPLIT:
            return BinarySplitState(n_items, k_defects, budget)
        if self.p == "opt":
            raise StrategySpecError("p=opt must be resolved before starting a strategy")
        if budget is None:
            raise ValueError("Bernoulli strategies need a test budget")
        stage = budget if self.kind == BERNOULLI else self.stage_size
        return BernoulliState(n_items, budget, self.p, max(stage, 1), rng)


class _StrategyState:
    """Shared bookkeeping: emitted pools and history checks."""

    def __init__(self, n_items, budget):
        self.n_items = n_items
        self.budget = budget
        self.pools: list[np.ndarray] = []
        self.outcomes: list[int] = []
        self._queue: list[np.ndarray] = []

    def _absorb(self, history):
        history = list(history)
        if len(history) > len(self.pools):
            raise HistoryError("history is longer than the pools this strategy emitted")
        if len(history) < len(self.outcomes):
            raise HistoryError("history lost outcomes it reported before")
        for t in range(len(self.outcomes)):
            if history[t][1] != self.outcomes[t]:
                raise HistoryError(f"outcome {t} changed between calls")
        # only entries not seen before need the full pool comparison
        for t in range(len(self.outcomes), len(history)):
            pool, outcome = history[t]
            if not np.array_equal(np.asarray(pool, dtype=np.uint8), self.pools[t]):
                raise HistoryError(f"pool {t} in history does not match the emitted pool")
            if outcome not in (0, 1):
                raise HistoryError(f"outcome {t} is not a bit")
            self.outcomes.append(int(outcome))

    @property
    def tests_used(self):
        return len(self.pools)

    def next_pool(self, history):
        """Next pool as a length-N uint8 vector, or ``DONE``."""
        self._absorb(history)
        if not self._queue:
            if len(self.outcomes) < len(self.pools):
                raise HistoryError("stage outcomes still pending; cannot start a new stage")
            if self.budget is not None and len(self.pools) >= self.budget:
                return DONE
            stage = self._new_stage()
            if stage is None:
                return DONE
            self._queue = list(stage.T)
        pool = self._queue.pop(0)
        self.pools.append(pool)
        return pool

    def next_stage(self, history):
        """All pools of the next stage as an N x s matrix, or ``DONE``.

        Every outcome of the previous stage must be present in ``history``.
        """
        self._absorb(history)
        if self._queue or len(self.outcomes) < len(self.pools):
            raise HistoryError("previous stage is not complete")
        if self.budget is not None and len(self.pools) >= self.budget:
            return DONE
        stage = self._new_stage()
        if stage is None:
            return DONE
        self.pools.extend(stage.T)
        return stage


class BernoulliState(_StrategyState):
    def __init__(self, n_items, budget, p, stage_size, rng):
        super().__init__(n_items, budget)
        self.p = p
        self.stage_size = stage_size
        self.rng = rng

    def _new_stage(self):
        size = min(self.stage_size, self.budget - len(self.pools))
        return gen_bernoulli_matrix(self.n_items, size, self.p, self.rng).inclusion

    def estimate(self):
        return None


class BinarySplitState(_StrategyState):
    """Generalised binary splitting.

    Repeatedly locates one defective by halving a candidate block known (in
    the noise-free model) to contain one: the lower-index half, of size
    ``ceil(n / 2)``, is tested; a positive keeps it, a negative clears it and
    keeps the upper half.  A block of one item is declared defective without
    a further test.  Under noisy models the search still terminates after at
    most ``k * ceil(log2 n)`` tests but its answer carries no guarantee.
    """

    def __init__(self, n_items, k_defects, budget=None):
        super().__init__(n_items, budget)
        if not 1 <= k_defects <= n_items:
            raise ValueError("need 1 <= k <= n")
        self.k = k_defects
        self.found: list[int] = []
        self.cleared = np.zeros(n_items, dtype=bool)
        self.block: np.ndarray | None = None
        self._pending_half: np.ndarray | None = None
        self._stuck = False
        self._settle()

    def _remaining(self):
        taken = self.cleared.copy()
        taken[self.found] = True
        return np.flatnonzero(~taken)

    def _settle(self):
        # advance without tests until a test is needed or the search ends
        while len(self.found) < self.k:
            if self.block is None:
                remaining = self._remaining()
                if len(remaining) <= self.k - len(self.found):
                    # only reachable short of k after noisy outcomes cleared a defective
                    self.found.extend(int(i) for i in remaining)
                    self._stuck = len(self.found) < self.k
                    return
                self.block = remaining
            if len(self.block) == 1:
                self.found.append(int(self.block[0]))
                self.block = None
                continue
            return

    @property
    def finished(self):
        return self._stuck or len(self.found) >= self.k

    def _feed(self, outcome):
        half = self._pending_half
        self._pending_half = None
        if outcome:
            self.block = half
        else:
            self.cleared[half] = True
            self.block = self.block[len(half):]
        self._settle()

    def _absorb(self, history):
        before = len(self.outcomes)
        super()._absorb(history)
        for outcome in self.outcomes[before:]:
            self._feed(outcome)

    def _new_stage(self):
        if self.finished:
            return None
        half = self.block[: math.ceil(len(self.block) / 2)]
        self._pending_half = half
        pool = np.zeros((self.n_items, 1), dtype=np.uint8)
        pool[half, 0] = 1
        return pool

    def estimate(self):
        """Current answer; padded in index order if the budget ran out."""
        if len(self.found) >= self.k:
            return tuple(sorted(self.found[: self.k]))
        guess = list(self.found)
        block = [] if self.block is None else self.block.tolist()
        for i in block + self._remaining().tolist() + list(range(self.n_items)):
            if len(guess) == self.k:
                break
            if i not in guess:
                guess.append(i)
        return tuple(sorted(guess))
