"""Exhaustive maximum-likelihood recovery of the defective set."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .designs import TestMatrix
from .noise import NoiseModel, log_prob_factors

MAX_CANDIDATES = 10**7
_CHUNK = 1 << 13
_CACHE_LIMIT = 1 << 18


class CapacityError(RuntimeError):
    """Exhaustive decoding would enumerate more candidate sets than allowed."""


@dataclass(frozen=True)
class DecodeResult:
    estimate: tuple
    log_likelihood: float
    n_ties: int


def _as_matrix(pools, n_items=None):
    if isinstance(pools, TestMatrix):
        x = pools.inclusion
    else:
        x = np.asarray(pools)
        if x.ndim == 1 and x.size == 0:
            x = np.zeros((n_items or 0, 0))
        if x.ndim != 2:
            raise ValueError("pools must be an N x T matrix")
    if n_items is not None and x.shape[0] != n_items:
        raise ValueError(f"pools cover {x.shape[0]} items, expected {n_items}")
    return x.astype(float)


def _as_outcomes(y, n_tests):
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if y.size != n_tests:
        raise ValueError(f"{y.size} outcomes for {n_tests} tests")
    if y.size and not np.isin(y, (0, 1)).all():
        raise ValueError("outcomes must be bits")
    return y


@lru_cache(maxsize=16)
def _candidate_block(n, k):
    arr = np.array(list(itertools.combinations(range(n), k)), dtype=np.int64).reshape(-1, k)
    arr.flags.writeable = False
    return arr


def candidate_chunks(n, k):
    """Size-k subsets of range(n) in lexicographic order, in array chunks."""
    total = math.comb(n, k)
    if total <= _CACHE_LIMIT:
        block = _candidate_block(n, k)
        for start in range(0, max(total, 1), _CHUNK):
            yield block[start:start + _CHUNK]
        return
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield np.array(block, dtype=np.int64).reshape(-1, k)


def _scores(x, y, cands, values, mult):
    """Log-likelihoods of candidate rows ``cands`` (shape m x k).

    Each score is a sum of integer multiples of ``values`` accumulated in a
    fixed order, so candidates whose outcome probabilities factor the same
    way get bit-identical scores.
    """
    counts = np.zeros((len(cands), x.shape[1]))
    for col in cands.T:
        counts += x[col]
    # multiplicity of each basis value, one count level at a time; float
    # matmul is exact here because every entry is a small integer
    table = mult[y].astype(float)
    basis = np.zeros((len(cands), len(values)))
    for c in range(table.shape[1]):
        basis += (counts == c) @ table[:, c, :]
    total = np.zeros(len(cands))
    impossible = np.zeros(len(cands), dtype=bool)
    for j, v in enumerate(values):
        if np.isneginf(v):
            impossible |= basis[:, j] > 0
        else:
            total += basis[:, j] * v
    total[impossible] = -np.inf
    return total


def log_likelihood(model: NoiseModel, pools, candidate, y) -> float:
    """Natural-log probability of outcomes ``y`` if ``candidate`` were defective.

    Returns ``-inf`` when some outcome is impossible under the candidate.
    """
    x = _as_matrix(pools)
    y = _as_outcomes(y, x.shape[1])
    cand = np.array(sorted(candidate), dtype=np.int64).reshape(1, -1)
    if cand.size and (cand.min() < 0 or cand.max() >= x.shape[0]):
        raise ValueError("candidate index out of range")
    values, mult = log_prob_factors(model, cand.shape[1])
    return float(_scores(x, y, cand, values, mult)[0])


def ml_decode(model: NoiseModel, pools, y, n: int, k: int,
              max_candidates: int = MAX_CANDIDATES) -> DecodeResult:
    """Maximum-likelihood estimate over all size-``k`` subsets of ``n`` items.

    Candidates are scanned in lexicographic order; the first maximiser is
    returned and ``n_ties`` counts every candidate attaining the maximum
    exactly.
    """
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    total = math.comb(n, k)
    if total > max_candidates:
        raise CapacityError(
            f"C({n}, {k}) = {total} candidate sets exceeds the limit of {max_candidates}")
    x = _as_matrix(pools, n)
    y = _as_outcomes(y, x.shape[1])
    values, mult = log_prob_factors(model, k)
    best, best_set, ties = -np.inf, None, 0
    for cands in candidate_chunks(n, k):
        scores = _scores(x, y, cands, values, mult)
        top = scores.max()
        if top > best:
            best, ties = top, 0
            best_set = cands[int(np.argmax(scores))]
        if top == best:
            ties += int(np.count_nonzero(scores == top))
    if best_set is None:
        # every candidate is impossible; fall back to the first one
        best_set = next(candidate_chunks(n, k))[0]
        ties = total
    return DecodeResult(tuple(int(i) for i in best_set), float(best), ties)


def ml_maximizers(model: NoiseModel, pools, y, n: int, k: int,
                  max_candidates: int = MAX_CANDIDATES) -> list[tuple]:
    """Every size-``k`` set attaining the maximal likelihood, in lexicographic order."""
    best = ml_decode(model, pools, y, n, k, max_candidates).log_likelihood
    x = _as_matrix(pools, n)
    y = _as_outcomes(y, x.shape[1])
    values, mult = log_prob_factors(model, k)
    out = []
    for cands in candidate_chunks(n, k):
        scores = _scores(x, y, cands, values, mult)
        out.extend(tuple(int(i) for i in row) for row in cands[scores == best])
    return out
