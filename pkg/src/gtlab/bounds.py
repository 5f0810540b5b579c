"""Information quantities and test-count bounds for Bernoulli designs.

All logarithms are base 2, so mutual information is in bits per test and
the numerators ``log2 C(., .)`` are in bits.

Notation used below: ``k`` defectives, of which ``ell`` are revealed to the
decoder by a genie; the remaining ``m = k - ell`` are unknown.  For an IID
Bernoulli(p) design and a channel ``f(j) = P(Y = 1 | j defectives)``, the
information one test carries about the unknown defectives is::

    I = H(Y | X_revealed) - H(Y | X_all)

and both entropies depend on the design only through how many defectives
land in the pool, which is what :func:`mutual_information` exploits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import binom

from .noise import NoiseModel

LOG_BASE = "bits"
AS_PRINTED = "as-printed"
SWAPPED = "swapped"


def binary_entropy(x):
    """h(x) = -x log2 x - (1 - x) log2(1 - x), with h(0) = h(1) = 0."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
        raise ValueError("binary entropy needs arguments in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -x * np.log2(x) - (1 - x) * np.log2(1 - x)
    h = np.where((x == 0) | (x == 1), 0.0, h)
    return float(h) if h.ndim == 0 else h


def log2_binom(n, k):
    """log2 C(n, k): exact for small coefficients, log-gamma otherwise."""
    if not 0 <= k <= n:
        raise ValueError(f"C({n}, {k}) is zero")
    if min(k, n - k) <= 64 and n <= 10**6:
        # the integer is cheap here and log2 of it is correctly rounded
        return math.log2(math.comb(n, k))
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(2)


@dataclass(frozen=True)
class MISpec:
    """Inputs of the per-test information: model, K, revealed size ell, p."""

    model: NoiseModel
    k: int
    ell: int
    p: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        if not 0 <= self.ell < self.k:
            raise ValueError(f"ell must lie in [0, k - 1], got {self.ell}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")


def mi_from_table(f, k, ell, p):
    """Closed-form information for an explicit table ``f[j] = P(Y = 1 | j)``."""
    m = k - ell
    known = binom.pmf(np.arange(ell + 1), ell, p)
    unknown = binom.pmf(np.arange(m + 1), m, p)
    # P(Y = 1 | j revealed defectives in the pool), j = 0..ell
    pos = np.array([unknown @ f[j:j + m + 1] for j in range(ell + 1)])
    pos = np.clip(pos, 0.0, 1.0)
    h_given_revealed = known @ binary_entropy(pos)
    h_given_all = binom.pmf(np.arange(k + 1), k, p) @ binary_entropy(f[: k + 1])
    return max(float(h_given_revealed - h_given_all), 0.0)


def mutual_information(spec: MISpec) -> float:
    """Bits of information per test about the unrevealed defectives.

    Uses count sufficiency: only the number of defectives in the pool
    matters, so the entropies reduce to binomial mixtures of ``h(f(j))``.
    """
    f = np.asarray(spec.model.positive_table(spec.k), dtype=float)
    return mi_from_table(f, spec.k, spec.ell, spec.p)


def mutual_information_bruteforce(spec: MISpec, revealed=None) -> float:
    """Same quantity by enumerating all 2**k inclusion patterns.

    Builds the full joint law of (unknown inclusions, revealed inclusions,
    Y) and evaluates ``I(unknown : revealed, Y)`` directly from it.
    ``revealed`` optionally names which of the ``k`` defectives are revealed
    (default: the first ``ell``).
    """
    k, p = spec.k, spec.p
    if k > 20:
        raise ValueError("brute-force enumeration limited to k <= 20")
    revealed = tuple(range(spec.ell)) if revealed is None else tuple(sorted(revealed))
    if len(revealed) != spec.ell or len(set(revealed)) != spec.ell or \
            any(not 0 <= i < k for i in revealed):
        raise ValueError("revealed must be ell distinct indices below k")
    hidden = tuple(i for i in range(k) if i not in revealed)

    patterns = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.int64)
    weight = np.prod(np.where(patterns == 1, p, 1 - p), axis=1)
    f = np.array([spec.model.positive_prob(int(c)) for c in patterns.sum(axis=1)])

    def code(cols):
        out = np.zeros(len(patterns), dtype=np.int64)
        for c in cols:
            out = 2 * out + patterns[:, c]
        return out

    joint = np.zeros((2 ** len(hidden), 2 ** len(revealed), 2))
    a, b = code(hidden), code(revealed)
    np.add.at(joint, (a, b, 1), weight * f)
    np.add.at(joint, (a, b, 0), weight * (1 - f))

    pa = joint.sum(axis=(1, 2))
    pby = joint.sum(axis=0)
    denom = pa[:, None, None] * pby[None, :, :]
    mask = joint > 0
    return float(np.sum(joint[mask] * np.log2(joint[mask] / denom[mask])))


def p_grid(step=0.01):
    """Interior grid {step, 2 step, ...} strictly inside (0, 1)."""
    if not 0.0 < step < 0.5:
        raise ValueError(f"grid step must lie in (0, 0.5), got {step}")
    m = round(1.0 / step)
    if abs(m * step - 1.0) < 1e-9:
        return np.arange(1, m) / m
    grid = np.arange(1, int(math.ceil(1.0 / step))) * step
    return grid[grid < 1.0]


def mi_table(model, k, grid):
    """Array ``[ell, i] = I(k, ell, grid[i])`` for ell in 0..k-1."""
    f = np.asarray(model.positive_table(k), dtype=float)
    return np.array([[mi_from_table(f, k, ell, p) for p in grid] for ell in range(k)])


@lru_cache(maxsize=256)
def _grid_mi(model, k, grid_step):
    grid = p_grid(grid_step)
    table = mi_table(model, k, grid)
    grid.flags.writeable = table.flags.writeable = False
    return grid, table


def _ratio(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)
    return np.where(num == 0, 0.0, r)


def _check_nk(n, k):
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got n={n}, k={k}")


def _log2_count(count):
    # no competing sets of this shape: the term is vacuous
    return math.log2(count) if count else 0.0


def _upper_rows(model, n, k, grid, mi, orientation):
    """Per-(ell, p) ratios for the achievability bound, rows indexed by the
    revealed size ell = 0..k-1."""
    rows = np.empty((k, len(grid)))
    if orientation == SWAPPED:
        # |L| = j named defectives, information about them given the other k - j
        for ell in range(k):
            j = k - ell
            rows[ell] = _ratio(_log2_count(math.comb(n - k, j) * math.comb(k, j)), mi[ell])
        return rows
    # ell = 0 contributes the full count log2 C(n, k); for k = 1 this is log2 n
    rows[0] = _ratio(log2_binom(n, k), mi[0])
    for ell in range(1, k):
        rows[ell] = _ratio(_log2_count(math.comb(n - k, ell) * math.comb(k, ell)), mi[ell])
    return rows


def _lower_rows(n, k, mi):
    rows = np.empty_like(mi)
    for ell in range(k):
        rows[ell] = _ratio(log2_binom(n - ell, k - ell), mi[ell])
    return rows


def _minimax(rows, grid):
    envelope = rows.max(axis=0)
    i = int(np.argmin(envelope))
    ell = int(np.argmax(rows[:, i]))
    return float(envelope[i]), float(grid[i]), ell


def t_upper(model, n, k, grid_step=0.01, mi_orientation=AS_PRINTED):
    """Achievability bound: ``(value, p_star, ell_star)``.

    min over the p grid of the max of ``log2 C(n, k) / I(ell=0)`` and, for
    ell in 1..k-1, ``log2[C(n-k, ell) C(k, ell)] / I(ell)``.  ``ell = k``
    would divide by zero and is skipped.  With ``mi_orientation="swapped"``
    the term for ``j`` named defectives (j = 1..k) is
    ``log2[C(n-k, j) C(k, j)]`` over the information about them given the
    other ``k - j``; that form is not ordered against :func:`t_lower` at
    finite ``n``.
    """
    _check_nk(n, k)
    grid, mi = _grid_mi(model, k, grid_step)
    return _minimax(_upper_rows(model, n, k, grid, mi, mi_orientation), grid)


def t_lower(model, n, k, grid_step=0.01):
    """Converse bound: ``(value, p_star, ell_star)``.

    min over the p grid of max over ell in 0..k-1 of
    ``log2 C(n-ell, k-ell) / I(k, ell, p)``.
    """
    _check_nk(n, k)
    grid, mi = _grid_mi(model, k, grid_step)
    return _minimax(_lower_rows(n, k, mi), grid)


def _json_number(x):
    if x is None or not math.isfinite(x):
        return None
    return float(f"{x:.12g}")


@dataclass
class BoundsReport:
    t_upper: float
    t_lower: float
    p_star_upper: float
    p_star_lower: float
    ell_star_upper: int
    ell_star_lower: int
    grid_step: float
    table: list = field(default_factory=list)
    log_base: str = LOG_BASE
    mi_orientation: str = AS_PRINTED
    conventions: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "t_upper": _json_number(self.t_upper),
            "t_lower": _json_number(self.t_lower),
            "p_star_upper": _json_number(self.p_star_upper),
            "p_star_lower": _json_number(self.p_star_lower),
            "ell_star_upper": self.ell_star_upper,
            "ell_star_lower": self.ell_star_lower,
            "log_base": self.log_base,
            "grid_step": self.grid_step,
            "mi_orientation": self.mi_orientation,
            "conventions": dict(self.conventions),
            "table": [
                {key: (_json_number(v) if isinstance(v, float) else v) for key, v in row.items()}
                for row in self.table
            ],
        }


def bounds_report(model, n, k, grid_step=0.01, mi_orientation=AS_PRINTED) -> BoundsReport:
    """Both bounds with their optimisers and the full per-(p, ell) table."""
    if mi_orientation not in (AS_PRINTED, SWAPPED):
        raise ValueError(f"unknown mi_orientation {mi_orientation!r}")
    _check_nk(n, k)
    grid, mi = _grid_mi(model, k, grid_step)
    upper = _upper_rows(model, n, k, grid, mi, mi_orientation)
    lower = _lower_rows(n, k, mi)
    tu, pu, lu = _minimax(upper, grid)
    tl, pl, ll = _minimax(lower, grid)
    table = []
    for i, p in enumerate(grid):
        for ell in range(k):
            table.append({"p": float(p), "ell": ell,
                          "ratio_upper": float(upper[ell, i]),
                          "ratio_lower": float(lower[ell, i])})
    conventions = {
        "upper_terms": ("ell=0: log2 C(n,k) / I(0); ell=1..k-1 as printed"
                        if mi_orientation == AS_PRINTED else "j=1..k named, I(named : rest, Y)"),
        "lower_ell_range": "0..k-1",
        "p_optimisation": "grid argmin, smallest p on ties",
    }
    return BoundsReport(tu, tl, pu, pl, lu, ll, grid_step, table,
                        mi_orientation=mi_orientation, conventions=conventions)


def fano_floor_terms(model, n, k, t, p=None, grid_step=0.01):
    """Unclamped error floor for each ell in 0..k-1.

    ``1 - t I / log2 C(n-ell, k-ell) - 1 / log2 C(n-ell, k-ell)``, with I at
    the given ``p`` or, when ``p`` is None, maximised over the p grid (a
    floor that does not depend on the design).
    """
    _check_nk(n, k)
    if t < 0:
        raise ValueError("number of tests must be nonnegative")
    if p is None:
        info = _grid_mi(model, k, grid_step)[1].max(axis=1)
    else:
        info = [mutual_information(MISpec(model, k, ell, p)) for ell in range(k)]
    terms = []
    for ell in range(k):
        log_count = log2_binom(n - ell, k - ell)
        terms.append(1.0 - t * info[ell] / log_count - 1.0 / log_count)
    return np.array(terms)


def fano_floor(model, n, k, t, p=None, grid_step=0.01) -> float:
    """Lower bound on the average error probability after ``t`` tests, in [0, 1]."""
    raw = float(fano_floor_terms(model, n, k, t, p, grid_step).max())
    return min(max(raw, 0.0), 1.0)
