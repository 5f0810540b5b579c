"""Channel laws for pooled tests where only the number of defectives matters.

Every model here is described by a single function ``f(k) = P(Y = 1 | k)``,
the probability that a pool holding ``k`` defective items tests positive.
Outcomes are binary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NOISE_FREE = "noise-free"
ADDITION = "addition"
DILUTION = "dilution"
ADD_DILUTE = "add-dilute"

KINDS = (NOISE_FREE, ADDITION, DILUTION, ADD_DILUTE)

_USES_Q = {ADDITION, ADD_DILUTE}
_USES_U = {DILUTION, ADD_DILUTE}


class ModelSpecError(ValueError):
    """Raised for an unparseable or invalid noise model description."""


@dataclass(frozen=True)
class NoiseModel:
    """Binary test channel from the "only defects matter" family.

    Parameters
    ----------
    kind : str
        One of ``"noise-free"``, ``"addition"``, ``"dilution"``,
        ``"add-dilute"``.
    q : float
        False-positive rate of a defect-free pool (addition kinds only).
    u : float
        Per-defective dilution rate; a pool with ``k`` defectives is
        missed with probability ``u**k`` (dilution kinds only).

    Notes
    -----
    ``add-dilute`` applies dilution first and then independent addition
    noise, so ``f(k) = 1 - u**k * (1 - q)`` for ``k >= 1`` and ``f(0) = q``.
    """

    kind: str = NOISE_FREE
    q: float = 0.0
    u: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelSpecError(f"unknown model kind {self.kind!r}")
        for name, value, used in (("q", self.q, _USES_Q), ("u", self.u, _USES_U)):
            value = float(value)
            object.__setattr__(self, name, value)
            if self.kind not in used:
                if value != 0.0:
                    raise ModelSpecError(f"{self.kind} takes no parameter {name}")
            elif not 0.0 <= value < 1.0:
                raise ModelSpecError(f"{name} must lie in [0, 1), got {value}")

    @classmethod
    def noise_free(cls):
        return cls(NOISE_FREE)

    @classmethod
    def addition(cls, q):
        return cls(ADDITION, q=q)

    @classmethod
    def dilution(cls, u):
        return cls(DILUTION, u=u)

    @classmethod
    def add_dilute(cls, q, u):
        return cls(ADD_DILUTE, q=q, u=u)

    @classmethod
    def parse(cls, text: str) -> "NoiseModel":
        """Build a model from ``noise-free``, ``addition:q=0.1``,
        ``dilution:u=0.5`` or ``add-dilute:q=0.1,u=0.3``."""
        kind, _, rest = text.strip().partition(":")
        params = {}
        if rest:
            for item in rest.split(","):
                key, eq, value = item.partition("=")
                key = key.strip()
                if not eq or key not in ("q", "u") or key in params:
                    raise ModelSpecError(f"bad model parameter {item!r} in {text!r}")
                try:
                    params[key] = float(value)
                except ValueError:
                    raise ModelSpecError(f"bad value for {key} in {text!r}") from None
        kind = kind.strip()
        if kind not in KINDS:
            raise ModelSpecError(f"unknown model kind {kind!r}")
        needed = ({"q"} if kind in _USES_Q else set()) | ({"u"} if kind in _USES_U else set())
        if set(params) != needed:
            raise ModelSpecError(
                f"{kind} needs parameters {sorted(needed) or 'none'}, got {sorted(params)}")
        return cls(kind, **params)

    def __str__(self):
        if self.kind == NOISE_FREE:
            return NOISE_FREE
        if self.kind == ADDITION:
            return f"addition:q={self.q:g}"
        if self.kind == DILUTION:
            return f"dilution:u={self.u:g}"
        return f"add-dilute:q={self.q:g},u={self.u:g}"

    def positive_prob(self, k):
        """P(Y = 1 | k defectives in the pool); accepts ints or integer arrays."""
        if np.ndim(k) == 0:
            return _positive_prob_scalar(self, int(k))
        k = np.asarray(k)
        if np.any(k < 0):
            raise ValueError("defective count must be nonnegative")
        table = self.positive_table(int(k.max(initial=0)))
        return table[k]

    def positive_table(self, kmax: int) -> np.ndarray:
        """Array ``[f(0), ..., f(kmax)]``."""
        return np.array([_positive_prob_scalar(self, k) for k in range(kmax + 1)])


def _positive_prob_scalar(model, k):
    if k < 0:
        raise ValueError("defective count must be nonnegative")
    if k == 0:
        return model.q
    if model.kind in (NOISE_FREE, ADDITION):
        return 1.0
    return 1.0 - model.u ** k * (1.0 - model.q)


def positive_prob(model: NoiseModel, k):
    return model.positive_prob(k)


def sample_outcome(model: NoiseModel, k: int, rng: np.random.Generator) -> int:
    """Draw one test outcome for a pool with ``k`` defectives.

    Consumes exactly one uniform from ``rng`` so that test ``t`` of a trial
    always uses the ``t``-th draw of the channel stream.
    """
    return int(rng.random() < model.positive_prob(k))


def sample_outcomes(model: NoiseModel, counts, rng: np.random.Generator) -> np.ndarray:
    """Vectorised :func:`sample_outcome`; identical draws to calling it in order."""
    counts = np.asarray(counts, dtype=np.int64)
    return (rng.random(counts.shape) < model.positive_prob(counts)).astype(np.uint8)


def log_prob_factors(model: NoiseModel, kmax: int):
    """Decompose ``log P(Y = y | k)`` into integer multiples of a few log values.

    Returns ``(values, mult)`` where ``values`` is a 1-D array of distinct
    natural-log probabilities (``-inf`` allowed) and ``mult`` has shape
    ``(2, kmax + 1, len(values))`` with nonnegative integer entries such that
    ``log P(Y = y | k) = sum_j mult[y, k, j] * values[j]``.

    Dilution misses are written as ``k * log(u) + log(1 - q)`` rather than
    ``log(u**k * (1 - q))``, so candidate sets with equal likelihood get
    identical multiplicity vectors and therefore bit-identical sums.
    """
    values: list[float] = []
    index: dict[float, int] = {}

    def slot(x):
        v = -math.inf if x == 0.0 else math.log(x)
        if v not in index:
            index[v] = len(values)
            values.append(v)
        return index[v]

    terms = [[{} for _ in range(kmax + 1)] for _ in range(2)]
    for k in range(kmax + 1):
        f = _positive_prob_scalar(model, k)
        if f != 1.0:
            terms[1][k][slot(f)] = 1
        if model.kind in _USES_U:
            miss = terms[0][k]
            if k:
                j = slot(model.u)
                miss[j] = miss.get(j, 0) + k
            if model.q != 0.0:
                j = slot(1.0 - model.q)
                miss[j] = miss.get(j, 0) + 1
        elif f != 0.0:
            terms[0][k][slot(1.0 - f)] = 1
    mult = np.zeros((2, kmax + 1, len(values)), dtype=np.int64)
    for y in range(2):
        for k in range(kmax + 1):
            for j, m in terms[y][k].items():
                mult[y, k, j] = m
    vals = np.array(values, dtype=float)
    keep = vals != 0.0
    return vals[keep], mult[:, :, keep]
