import numpy as np
import pytest
from hypothesis import given, strategies as st

from shadowlab.density import (
    IndexSet, arithmetic, boolean_algebra, complement, density, exponential_blocks,
    exponential_cut_points, family_membership, from_closed_form, intersect, intersect_all,
    linear_blocks, linear_cut_points, longest_run, max_gap, minus, sample_grid, scale, shift_add,
    shift_sub, squares, union,
)
from shadowlab.errors import HorizonTooSmall, InvalidParameters


def index_sets(max_horizon=300):
    @st.composite
    def _s(draw):
        n = draw(st.integers(1, max_horizon))
        members = draw(st.sets(st.integers(0, n - 1), max_size=n))
        return IndexSet.from_iterable(members, n)
    return _s()


def random_set(rng, n, p=None):
    p = rng.random() if p is None else p
    return IndexSet.from_mask(rng.random(n) < p)


# ---- exact set operations -------------------------------------------------

def test_shift_and_scale_small_cases():
    a = IndexSet.from_iterable([0, 2, 4], 10)
    assert list(shift_add(a, 1)) == [1, 3, 5]
    assert list(scale(IndexSet.from_iterable([0, 1, 2], 10), 3)) == [0, 3, 6]
    assert list(shift_sub(a, 1)) == [1, 3]


def test_evens_and_odds_disjoint():
    assert len(intersect(arithmetic(2, 100), arithmetic(2, 100, 1))) == 0


def test_complement_of_multiples_of_three():
    assert list(complement(arithmetic(3, 9))) == [1, 2, 4, 5, 7, 8]


@given(index_sets(), st.integers(0, 50))
def test_shift_add_matches_python_sets(a, j):
    want = sorted(i + j for i in a if i + j < a.horizon)
    assert list(shift_add(a, j)) == want


@given(index_sets(), index_sets())
def test_boolean_ops_match_python_sets(a, b):
    n = min(a.horizon, b.horizon)
    sa, sb = {i for i in a if i < n}, {i for i in b if i < n}
    assert set(union(a, b)) == sa | sb
    assert set(intersect(a, b)) == sa & sb
    assert set(minus(a, b)) == sa - sb
    assert set(boolean_algebra(a, None, "complement")) == set(range(a.horizon)) - set(a)


@given(st.lists(index_sets(200), min_size=1, max_size=5), st.integers(0, 30))
def test_intersection_commutes_with_translation(sets, k):
    lhs = intersect_all([shift_add(a, k) for a in sets])
    rhs = shift_add(intersect_all(sets), k)
    assert lhs == rhs


@given(index_sets(), index_sets())
def test_inclusion_exclusion_every_prefix(a, b):
    ca, cb = a.prefix_counts(), b.prefix_counts()
    n = min(a.horizon, b.horizon)
    cu, ci = union(a, b).prefix_counts(), intersect(a, b).prefix_counts()
    assert np.array_equal(ci[: n + 1], ca[: n + 1] + cb[: n + 1] - cu[: n + 1])


def test_json_round_trip():
    a = IndexSet.from_iterable([1, 5, 9], 20)
    assert IndexSet.from_json(a.to_json()) == a
    lb = linear_blocks(1000)
    assert IndexSet.from_json(lb.to_json(members=False)) == lb


def test_invalid_members_rejected():
    with pytest.raises(InvalidParameters):
        IndexSet(5, np.array([3, 1]))
    with pytest.raises(InvalidParameters):
        IndexSet(5, np.array([5]))


# ---- densities -----------------------------------------------------------

def test_evens_have_density_half():
    st_ = density(IndexSet.from_mask(arithmetic(2, 10_000).mask()))
    assert st_.upper == pytest.approx(0.5, abs=1e-3)
    assert st_.lower == pytest.approx(0.5, abs=1e-3)


def test_linear_blocks_density_half():
    a = linear_blocks(100_000)
    st_ = density(a)
    assert st_.empirical_upper == pytest.approx(0.5, abs=0.02)
    assert st_.empirical_lower == pytest.approx(0.5, abs=0.02)
    assert st_.upper == 0.5  # closed-form override


def test_linear_cut_points_prefix():
    assert linear_cut_points(20)[:5] == [2, 4, 7, 11, 16]


def test_exponential_blocks_oscillate():
    cuts = exponential_cut_points(1 << 20)
    assert cuts[:3] == [2, 6, 70]
    st_ = density(exponential_blocks(1 << 20))
    assert st_.empirical_lower < 0.3
    # the high point sits at the end of the block [6, 70), decades before the horizon
    peak = max(r for n, _, r in st_.curve if n >= 10)
    assert peak > 0.9
    assert peak - st_.empirical_lower > 0.4


def test_short_horizon_rejected():
    with pytest.raises(HorizonTooSmall):
        density(arithmetic(2, 50))


@given(index_sets(2_000).filter(lambda a: a.horizon >= 100))
def test_complement_density_duality(a):
    d, dc = density(a), density(complement(a))
    assert dc.empirical_upper == pytest.approx(1 - d.empirical_lower, abs=1e-12)
    assert dc.empirical_lower == pytest.approx(1 - d.empirical_upper, abs=1e-12)


def test_density_matches_brute_force_prefix_scan():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = random_set(rng, 1_000)
        mem = set(a)
        ratios = [sum(1 for i in range(n) if i in mem) / n for n in range(100, 1_001)]
        st_ = density(a)
        assert st_.upper == pytest.approx(max(ratios), abs=1e-12)
        assert st_.lower == pytest.approx(min(ratios), abs=1e-12)


def test_sample_grid_contains_dyadic_points():
    g = set(sample_grid(1000).tolist())
    assert {1000, 500, 250, 125, 62, 31, 15, 7, 3, 1} <= g


# ---- families ------------------------------------------------------------

def test_full_prefix_in_every_lower_family():
    full = IndexSet.full(10_000)
    for alpha in np.arange(0, 1, 0.1):
        assert family_membership(full, "M_alpha", float(alpha)).verdict == "in"


def test_evens_boundary():
    ev = arithmetic(2, 10_000)
    assert family_membership(ev, "M_upper:0.4").verdict == "in"
    assert family_membership(ev, "M_upper:0.5").verdict == "out"
    # without the closed form, equality at alpha cannot be decided from a prefix
    raw = IndexSet.from_mask(ev.mask())
    assert family_membership(raw, "M_upper:0.5").verdict == "inconclusive"


def test_squares_sparse_and_not_syndetic():
    sq = squares(10_000)
    st_ = density(sq)
    assert st_.upper == 0.0
    assert st_.empirical_upper <= 1 / np.sqrt(sq.horizon // 10) + 1e-3  # ~ 1/sqrt(n)
    for k in (2, 5, 10, 50, 100):
        assert family_membership(sq, f"syndetic:{k}").verdict == "out"


def test_gap_and_run_oracles():
    a = IndexSet.from_iterable([2, 3, 4, 9], 12)
    assert max_gap(a) == 5
    assert longest_run(a) == 3
    assert family_membership(a, "thick:3").verdict == "in"
    assert family_membership(a, "thick:4").verdict == "out"
    assert max_gap(IndexSet.empty(10)) is None


def test_family_verdict_implications():
    rng = np.random.default_rng(2)
    alphas = [0.1, 0.3, 0.5, 0.7]
    for _ in range(1_000):
        a = random_set(rng, 400)
        st_ = density(a)
        for i, al in enumerate(alphas):
            lo = family_membership(a, "M_alpha", al, stats=st_).verdict
            up = family_membership(a, "M_upper_alpha", al, stats=st_).verdict
            if lo == "in":
                assert up == "in"
            for beta in alphas[:i]:
                if up == "in":
                    assert family_membership(a, "M_upper_alpha", beta, stats=st_).verdict == "in"


def test_intersection_of_dense_sets_has_positive_lower_density():
    # A in M_a, B in M_b with a + b >= 1  ->  A ∩ B in M_(a+b-1), checked on prefix counts
    rng = np.random.default_rng(3)
    for _ in range(200):
        pa, pb = rng.uniform(0.6, 0.95, size=2)
        a, b = random_set(rng, 2_000, pa), random_set(rng, 2_000, pb)
        la, lb = density(a).lower, density(b).lower
        lab = density(intersect(a, b)).lower
        assert lab >= la + lb - 1 - 1e-12


def test_closed_form_dispatch():
    assert len(from_closed_form({"kind": "full"}, 50)) == 50
    with pytest.raises(InvalidParameters):
        from_closed_form({"kind": "primes"}, 50)
