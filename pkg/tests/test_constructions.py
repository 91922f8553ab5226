import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shadowlab.constructions import (
    BlockSchedule, TwoPointFamily, backward_orbit, concatenate_average_family, ergodic_to_average,
    exponential_schedule, greedy_starts, interleave_backward, interleave_minimal, linear_schedule,
    orbit_family, rotation_adversary, shift_splice, shift_tracer, sparse_indices,
    splice_family, spliced_orbit, syndetic_bound, theorem_5_1_schedule,
)
from shadowlab.density import density
from shadowlab.errors import BlocksTooShort, InvalidParameters, NotErgodicInput, ReturnTimeNotFound
from shadowlab.pseudo_orbits import (
    PseudoOrbit, candidate_statistics, classify, match_profile, step_error_sequence, true_orbit,
)
from conftest import system


# ---- schedules -------------------------------------------------------------

def test_concatenation_schedule_first_terms():
    s = theorem_5_1_schedule(10**5)
    assert s.terms[:2] == (8, 512)  # m_1 = 2^(N_2) with N_k = k + 1
    assert s.cuts[:2] == (9, 522)
    assert s.terms[2] == 2**522
    assert s.to_json()["terms"][2] == "2^522+"


def test_concatenation_schedule_honours_l_values():
    s = theorem_5_1_schedule(10**4, n_values=[1, 2, 3, 4], l_values={2: [1000]})
    assert s.terms[0] == 4 and s.terms[1] == 1000


def test_interleave_cut_points():
    assert linear_schedule(30).cuts[:6] == (2, 4, 7, 11, 16, 22)
    assert exponential_schedule(100).cuts[:3] == (2, 6, 70)


def test_schedules_are_pure():
    assert theorem_5_1_schedule(5_000) == theorem_5_1_schedule(5_000)
    assert linear_schedule(10**5) == linear_schedule(10**5)


def test_schedule_rejects_bad_cuts():
    with pytest.raises(InvalidParameters):
        BlockSchedule("theorem-8.2-linear", (2, 4), (4, 2))


# ---- ergodic -> average -----------------------------------------------------

def test_greedy_starts_spacing():
    assert greedy_starts(np.array([3, 4, 8, 20, 21, 40]), 5).tolist() == [3, 8, 20, 40]


def test_pseudo_orbit_input_is_untouched():
    s = system("rotation:golden")
    xi = true_orbit(s, s.point(0.2), 2_000)
    out = ergodic_to_average(xi, 0.2)
    assert np.array_equal(out.orbit.points, xi.points)
    assert len(out.k_set) == 0


def test_square_mismatches_become_average_pseudo_orbit():
    s = system("rotation:golden")
    n = 100_000
    sq = np.arange(1, math.isqrt(n - 2) + 1) ** 2
    xi = spliced_orbit(s, n, sq[sq < n - 1], seed=1)
    out = ergodic_to_average(xi, 0.2)
    assert classify(out.orbit, "delta-average", 0.2).verdict == "pass"


def test_two_point_block_union_is_sparse():
    fam = TwoPointFamily()
    rng = np.random.default_rng(0)
    idx = sparse_indices(rng, 10_000)
    states = np.zeros(10_000, dtype=np.int64)
    for i in idx:
        states[i + 1 :] ^= 1
    xi = PseudoOrbit(fam.system, states)
    out = ergodic_to_average(xi, 1.9)
    assert density(out.k_set).empirical_upper < 0.05


def test_non_ergodic_input_rejected():
    xi = TwoPointFamily().alternating(1_000)
    with pytest.raises(NotErgodicInput):
        ergodic_to_average(xi, 0.5)


@pytest.mark.parametrize("seed", range(6))
def test_translates_of_start_set_are_disjoint(seed):
    s = system("rotation:golden") if seed % 2 else system("shift:2:10")
    rng = np.random.default_rng(seed)
    xi = spliced_orbit(s, 20_000, sparse_indices(rng, 20_000), seed)
    out = ergodic_to_average(xi, 0.25)
    k = out.starts
    assert np.all(np.diff(k) >= out.n)
    covered = np.concatenate([k + j for j in range(out.n)])
    assert len(np.unique(covered)) == len(covered)


# ---- concatenation -------------------------------------------------------------

def test_same_orbit_blocks_glitch_only_at_cuts():
    s = system("rotation:golden")
    beta = true_orbit(s, s.point(0.1), 3_000)
    sched = theorem_5_1_schedule(3_000)
    xi = concatenate_average_family([beta] * 4, sched, 3_000)
    bad = np.flatnonzero(step_error_sequence(xi) > 0)
    assert set(bad.tolist()) <= {c - 1 for c in sched.cuts}
    assert classify(xi, "asymptotic-average").verdict == "pass"


def test_rotation_orbit_family_is_asymptotic_average():
    s = system("rotation:golden")
    xi = concatenate_average_family(orbit_family(s, 0), theorem_5_1_schedule(10**5), 10**5)
    rep = classify(xi, "asymptotic-average")
    assert rep.verdict == "pass" and rep.statistic < 1e-2


def test_short_blocks_rejected():
    s = system("rotation:golden")
    beta = true_orbit(s, s.point(0.0), 5)
    with pytest.raises(BlocksTooShort):
        concatenate_average_family([beta, beta], theorem_5_1_schedule(100), 100)


def test_splice_family_errors_shrink():
    s = system("shift:2:16")
    fam = splice_family(s, 0)
    for k in (1, 4, 9):
        e = step_error_sequence(fam(k, 500))
        assert e.max() < 1 / k + 1e-12 or k == 1


# ---- interleaves ----------------------------------------------------------------

def test_interleave_of_equal_points_is_true_orbit():
    s = system("rotation:1/5")
    x = s.point(0.2)
    xi = interleave_minimal(x, x, s, "linear", 500)
    assert np.all(step_error_sequence(xi) == 0)


def test_exponential_interleave_has_small_lower_density():
    s = system("identity2")
    xi = interleave_minimal(s.point("a1"), s.point("a2"), s, "exponential", 1 << 20)
    a = match_profile(xi, s.point("a1"), 0.5)
    assert a.match_stats.empirical_lower < 0.3


def test_backward_orbits():
    ident = system("identity2")
    assert backward_orbit(ident, ident.point("a2"), 5).tolist() == [1] * 5
    rot = system("rotation:1/8")
    v = rot.point(0.5)
    back = backward_orbit(rot, v, 5)
    want = [Fraction(1, 2) - Fraction(j, 8) for j in range(5)]
    assert [Fraction(rot.to_json(p)) for p in back] == [w % 1 for w in want]


def test_backward_interleave_on_identity_is_blockwise_constant():
    s = system("identity2")
    xi = interleave_backward(s.point("a1"), s.point("a2"), s, 200)
    cuts = linear_schedule(200).cuts
    edges = [0] + [c for c in cuts if c < 200] + [200]
    for lo, hi in zip(edges, edges[1:]):
        assert len(set(xi.points[lo:hi].tolist())) == 1


def test_backward_interleave_on_shift_is_ergodic():
    s = system("shift:2:10")
    rng = np.random.default_rng(0)
    u, v = s.random_word(rng, s.width), s.random_word(rng, s.width)
    xi = interleave_backward(u, v, s, 100_000, selector=0)
    assert classify(xi, "delta-ergodic", 0.5, tol=0.02).verdict == "pass"


def test_linear_interleave_mismatch_density_decays():
    s = system("identity2")
    xi = interleave_minimal(s.point("a1"), s.point("a2"), s, "linear", 100_000)
    rep = classify(xi, "delta-ergodic", 0.5, tol=0.02)
    assert rep.verdict == "pass"
    # sqrt(2/n) decay: still above the default tolerance at the start of the decade
    assert rep.statistic > 1e-2


# ---- rotation adversary ------------------------------------------------------------

def test_golden_adversary_constants():
    ra = rotation_adversary("golden", 0.0, 0.5, 20_000)
    assert ra.xi == 0.5 and ra.delta == 0.125
    assert ra.k <= 13
    assert ra.returns_ok
    lengths = ra.schedule.block_lengths
    assert all(b >= a for a, b in zip(lengths, lengths[1:]))
    assert ra.schedule.terms[:3] == tuple(2 * n * (n + 1) * ra.k for n in (1, 2, 3))


def test_adversary_return_condition_rechecked():
    ra = rotation_adversary("golden", 0.0, 0.5, 50_000)
    s = ra.orbit.system
    edges = np.diff((0,) + ra.schedule.cuts)
    y, yp = s.point(0.0), s.point(0.5)
    for t in edges:
        assert s.metric(s.orbit(y, int(t) + 1)[-1], yp) < ra.delta


def test_rational_adversary_still_valid():
    ra = rotation_adversary("1/5", 0.0, 0.4, 5_000)
    assert ra.returns_ok
    assert np.all(ra.return_times % 5 == 2)  # 2/5 is reached only at t = 2 mod 5


def test_syndetic_bound_oracle():
    assert syndetic_bound(np.array([0, 3, 5, 12])) == 7
    with pytest.raises(ReturnTimeNotFound):
        syndetic_bound(np.array([0]))


def test_unreachable_target_raises():
    with pytest.raises(ReturnTimeNotFound):
        rotation_adversary("1/4", 0.0, 0.125, 1_000)


# ---- two-point family --------------------------------------------------------------

def test_two_point_match_densities():
    fam = TwoPointFamily()
    s = fam.system
    a1, a2 = s.point("a1"), s.point("a2")
    alt = fam.alternating(10_000)
    st_ = candidate_statistics(alt, [a1, a2], 0.5)
    assert st_.upper == pytest.approx([0.5, 0.5], abs=1e-3)
    const = fam.constant(1_000)
    assert candidate_statistics(const, [a1], 0.5).lower[0] == 1.0


@given(st.integers(0, 10**6))
def test_random_sequence_has_dense_match_set(seed):
    fam = TwoPointFamily()
    s = fam.system
    xi = fam.random(2_000, seed)
    st_ = candidate_statistics(xi, [s.point("a1"), s.point("a2")], 0.5)
    # the two match sets partition the prefix, so one has ratio >= 1/2 at every n
    assert st_.upper.max() >= 0.5


# ---- shift splices -------------------------------------------------------------------

def test_shift_splice_errors_bounded_by_agreement():
    s = system("shift:2:16")
    xi = shift_splice(s, 3_000, 0, agree=(4, 8))
    e = step_error_sequence(xi)
    assert e.max() <= 2.0**-4
    assert np.count_nonzero(e) == len(xi.provenance["splices"]) or np.count_nonzero(e) > 0


def test_shift_tracer_reads_leading_symbols():
    s = system("shift:2:8")
    xi = shift_splice(s, 400, 2)
    z = shift_tracer(xi)
    assert np.array_equal(z[: len(xi)], xi.points[:, 0])
    assert match_profile(xi, z, 0.25).average_error < 0.05
