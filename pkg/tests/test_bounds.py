import itertools
import json
import math

import numpy as np
import pytest

from gtlab.bounds import (AS_PRINTED, SWAPPED, MISpec, binary_entropy, bounds_report, fano_floor,
                          fano_floor_terms, log2_binom, mi_table, mutual_information,
                          mutual_information_bruteforce, p_grid, t_lower, t_upper)
from gtlab.noise import NoiseModel

MODELS = [NoiseModel.noise_free(), NoiseModel.addition(0.05), NoiseModel.addition(0.2),
          NoiseModel.dilution(0.1), NoiseModel.dilution(0.5), NoiseModel.add_dilute(0.1, 0.3)]

# reference values evaluated with 30-digit decimal arithmetic
H_QUARTER = 0.811278124459132863909695792039
MI_ADDITION_Q03 = 0.49342260576014469689529233107
FANO_T0_N10_K2 = 0.817912099530061751659710315793


@pytest.mark.parametrize("x, expected", [(0.5, 1.0), (0.0, 0.0), (1.0, 0.0), (0.25, H_QUARTER)])
def test_binary_entropy(x, expected):
    assert float(binary_entropy(x)) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("x", [-0.1, 1.1, math.nan])
def test_binary_entropy_domain(x):
    with pytest.raises(ValueError):
        binary_entropy(x)


def test_log2_binom():
    assert log2_binom(1024, 1) == pytest.approx(10.0, abs=1e-12)
    assert log2_binom(10, 2) == pytest.approx(math.log2(45), abs=1e-12)
    assert log2_binom(5, 0) == 0.0


@pytest.mark.parametrize("spec, expected", [
    (MISpec(NoiseModel.noise_free(), 1, 0, 0.5), 1.0),
    (MISpec(NoiseModel.noise_free(), 2, 1, 0.5), 0.5),
    (MISpec(NoiseModel.addition(0.3), 1, 0, 0.5), MI_ADDITION_Q03),
])
def test_mutual_information_examples(spec, expected):
    assert mutual_information(spec) == pytest.approx(expected, abs=1e-12)
    assert mutual_information_bruteforce(spec) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("kwargs", [dict(k=0, ell=0, p=0.5), dict(k=2, ell=2, p=0.5),
                                    dict(k=2, ell=-1, p=0.5), dict(k=2, ell=0, p=0.0),
                                    dict(k=2, ell=0, p=1.0)])
def test_mispec_validation(kwargs):
    with pytest.raises(ValueError):
        MISpec(NoiseModel.noise_free(), **kwargs)


@pytest.mark.parametrize("model", MODELS, ids=str)
def test_closed_form_matches_enumeration(model):
    for k in range(1, 7):
        for ell in range(k):
            for p in (0.1, 0.3, 0.5, 0.7, 0.9):
                spec = MISpec(model, k, ell, p)
                assert abs(mutual_information(spec) - mutual_information_bruteforce(spec)) <= 1e-10


@pytest.mark.parametrize("model", MODELS, ids=str)
def test_every_revealed_subset_gives_same_information(model):
    # only the size of the revealed set matters
    for k in range(1, 5):
        for ell in range(k):
            spec = MISpec(model, k, ell, 0.37)
            closed = mutual_information(spec)
            for revealed in itertools.combinations(range(k), ell):
                assert abs(mutual_information_bruteforce(spec, revealed) - closed) <= 1e-10


def test_bruteforce_rejects_bad_revealed():
    spec = MISpec(NoiseModel.noise_free(), 3, 1, 0.5)
    with pytest.raises(ValueError):
        mutual_information_bruteforce(spec, (3,))
    with pytest.raises(ValueError):
        mutual_information_bruteforce(MISpec(NoiseModel.noise_free(), 21, 0, 0.5))


@pytest.mark.parametrize("model", MODELS, ids=str)
def test_small_p_information(model):
    # I <= H(X) = h(1e-6), about 2.14e-5 bits; equality when noise-free
    spec = MISpec(model, 1, 0, 1e-6)
    cap = float(binary_entropy(1e-6))
    assert cap < 2.2e-5
    assert mutual_information_bruteforce(spec) <= cap + 1e-15
    assert mutual_information(spec) <= cap + 1e-15


@pytest.mark.parametrize("model", MODELS, ids=str)
def test_information_range(model):
    for k in range(1, 6):
        for ell in range(k):
            for p in (0.05, 0.2, 0.5, 0.8, 0.95):
                info = mutual_information(MISpec(model, k, ell, p))
                assert 0.0 <= info <= min(1.0, (k - ell) * float(binary_entropy(p))) + 1e-12


def test_information_vanishes_as_dilution_saturates():
    values = [mutual_information(MISpec(NoiseModel.dilution(u), 2, 0, 0.5))
              for u in (0.9, 0.99, 0.999)]
    assert values[0] > values[1] > values[2] > 0
    assert values[2] < 1e-3


def test_p_grid():
    grid = p_grid(0.01)
    assert len(grid) == 99 and grid[0] == 0.01 and grid[-1] == 0.99
    assert np.all((grid > 0) & (grid < 1))
    with pytest.raises(ValueError):
        p_grid(0.0)


def test_k1_noise_free_matches_binary_search():
    value, p_star, ell = t_lower(NoiseModel.noise_free(), 1024, 1)
    assert value == pytest.approx(10.0, abs=1e-12) and p_star == 0.5 and ell == 0
    value, p_star, _ = t_upper(NoiseModel.noise_free(), 1024, 1)
    assert value == pytest.approx(10.0, abs=1e-12) and p_star == 0.5


@pytest.mark.parametrize("model", MODELS, ids=str)
@pytest.mark.parametrize("n", [20, 50, 100])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_bound_ordering(model, n, k):
    lower = t_lower(model, n, k)[0]
    assert t_upper(model, n, k)[0] >= lower - 1e-9
    assert lower >= log2_binom(n, k) - 1e-9


@pytest.mark.parametrize("model", MODELS, ids=str)
def test_ell0_term_is_a_lower_bound(model):
    n, k = 60, 3
    info = mi_table(model, k, p_grid())
    assert t_lower(model, n, k)[0] >= log2_binom(n, k) / info[0].max() - 1e-9


def test_dilution_needs_more_tests():
    assert t_lower(NoiseModel.dilution(0.5), 100, 2)[0] > t_lower(NoiseModel.noise_free(), 100, 2)[0]


def test_bounds_increase_with_addition_noise():
    models = [NoiseModel.addition(q) for q in (0.0, 0.05, 0.1, 0.2)]
    upper = [t_upper(m, 100, 2)[0] for m in models]
    lower = [t_lower(m, 100, 2)[0] for m in models]
    assert all(math.isfinite(v) and v > 0 for v in upper)
    assert np.all(np.diff(upper) > 0) and np.all(np.diff(lower) > 0)


def test_optimisers_lie_on_grid():
    grid = p_grid(0.02)
    for fn in (t_lower, t_upper):
        _, p_star, ell = fn(NoiseModel.add_dilute(0.1, 0.3), 40, 3, 0.02)
        assert np.isclose(grid, p_star, rtol=0, atol=0).any() and 0 <= ell < 3


def test_swapped_orientation_is_available():
    a = t_upper(NoiseModel.noise_free(), 50, 3, mi_orientation=SWAPPED)[0]
    b = t_upper(NoiseModel.noise_free(), 50, 3, mi_orientation=AS_PRINTED)[0]
    assert math.isfinite(a) and a > 0 and a != b
    with pytest.raises(ValueError):
        bounds_report(NoiseModel.noise_free(), 50, 2, mi_orientation="sideways")


@pytest.mark.parametrize("n, k", [(5, 5), (5, 0), (3, 7)])
def test_bounds_require_k_below_n(n, k):
    with pytest.raises(ValueError):
        t_lower(NoiseModel.noise_free(), n, k)


def test_report_json_fields():
    report = bounds_report(NoiseModel.dilution(0.5), 30, 2).to_dict()
    for key in ("t_upper", "t_lower", "p_star_upper", "p_star_lower", "ell_star_upper",
                "ell_star_lower", "log_base", "grid_step", "table"):
        assert key in report
    assert report["log_base"] == "bits" and report["grid_step"] == 0.01
    assert len(report["table"]) == 99 * 2
    assert set(report["table"][0]) == {"p", "ell", "ratio_upper", "ratio_lower"}
    assert report["t_lower"] == pytest.approx(t_lower(NoiseModel.dilution(0.5), 30, 2)[0], rel=1e-11)
    json.dumps(report, allow_nan=False)


@pytest.mark.parametrize("model", MODELS, ids=str)
def test_fano_floor_without_tests(model):
    assert fano_floor(model, 10, 2, 0) == pytest.approx(FANO_T0_N10_K2, abs=1e-12)


def test_fano_floor_clamps_negative_terms():
    terms = fano_floor_terms(NoiseModel.noise_free(), 1024, 1, 10, p=0.5)
    assert terms[0] == pytest.approx(-0.1, abs=1e-12)
    assert fano_floor(NoiseModel.noise_free(), 1024, 1, 10) == 0.0


@pytest.mark.parametrize("model", MODELS, ids=str)
def test_fano_floor_non_increasing(model):
    floors = [fano_floor(model, 50, 2, t) for t in range(0, 40)]
    assert all(0.0 <= f <= 1.0 for f in floors)
    assert np.all(np.diff(floors) <= 0)


def test_fixed_p_floor_dominates_agnostic_floor():
    # a fixed p can only carry less information than the best p
    for t in (3, 8, 15):
        assert fano_floor(NoiseModel.addition(0.1), 40, 2, t, p=0.3) >= \
            fano_floor(NoiseModel.addition(0.1), 40, 2, t) - 1e-12


@pytest.mark.parametrize("model", MODELS, ids=str)
@pytest.mark.parametrize("n, k", [(20, 1), (50, 2), (20, 3), (100, 3)])
def test_fano_floor_positive_exactly_below_threshold(model, n, k):
    best = mi_table(model, k, p_grid()).max(axis=1)
    thresholds = [(log2_binom(n - ell, k - ell) - 1) / best[ell] for ell in range(k)]
    for t in range(0, int(max(thresholds)) + 3):
        assert (fano_floor(model, n, k, t) > 0) == any(t < th for th in thresholds)
    top = math.ceil(t_lower(model, n, k)[0])
    assert fano_floor(model, n, k, top) <= 1.0


@pytest.mark.parametrize("model", MODELS, ids=str)
def test_single_defective_floor_binds_below_bound(model):
    n = 64
    value = t_lower(model, n, 1)[0]
    cut = value * (1 - 1 / log2_binom(n, 1))
    for t in range(0, math.ceil(cut)):
        if t < cut - 1e-9:
            assert fano_floor(model, n, 1, t) > 0
    assert fano_floor(model, n, 1, math.ceil(cut + 1e-9)) == 0.0
