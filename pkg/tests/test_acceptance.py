"""Acceptance criteria 1-11 at their stated tolerances.

Each test records a one-line PASS/FAIL verdict (printed in the terminal
summary, and immediately with ``pytest -s``) before asserting.
"""

import time

import numpy as np

from shadowlab.constructions import (
    TwoPointFamily, concatenate_average_family, ergodic_to_average, orbit_family, rotation_adversary,
    sparse_indices, splice_suite, spliced_orbit, theorem_5_1_schedule,
)
from shadowlab.density import (
    IndexSet, density, intersect, intersect_all, linear_blocks, linear_cut_points, shift_add, union,
)
from shadowlab.experiment import dumps, execute_suite
from shadowlab.pseudo_orbits import (
    PseudoOrbit, classify, lift_to_iterate, lifted_mismatch_indices, project_to_iterate,
    step_error_sequence,
)
from shadowlab.systems import FullShift, Iterate, make_system, parse_system_spec, two_point_identity
from shadowlab.verifiers import (
    chain_graph, chain_verdict, log_mistakes, mistake_ball_table, orbit_distances,
    verify_average_shadowing, verify_M_shadowing,
)
from conftest import ACCEPTANCE


def sys_(spec):
    return make_system(parse_system_spec(spec))


def report(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE[n] = line
    print(line)
    assert ok, line


def test_01_density_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    n = 10_000
    bad = 0
    for _ in range(1_000):
        sets = [IndexSet.from_mask(rng.random(n) < rng.random()) for _ in range(int(rng.integers(2, 5)))]
        k = int(rng.integers(0, 200))
        if intersect_all([shift_add(a, k) for a in sets]) != shift_add(intersect_all(sets), k):
            bad += 1
        a, b = sets[0], sets[1]
        lhs = intersect(a, b).prefix_counts()
        rhs = a.prefix_counts() + b.prefix_counts() - union(a, b).prefix_counts()
        bad += int(not np.array_equal(lhs, rhs))
    dt = time.perf_counter() - t0
    report(1, bad == 0 and dt < 5, f"1000 tuples at horizon 1e4, {bad} violations, {dt:.2f}s (< 5s)")


def test_02_linear_schedule_density():
    st_ = density(linear_blocks(100_000))
    cuts = linear_cut_points(100_000)[:5]
    ok = abs(st_.empirical_upper - 0.5) <= 0.02 and abs(st_.empirical_lower - 0.5) <= 0.02 and cuts == [2, 4, 7, 11, 16]
    report(2, ok, f"density in [{st_.empirical_lower:.4f}, {st_.empirical_upper:.4f}] at 1e5, cuts {cuts}")


def test_03_two_point_suite():
    fam = TwoPointFamily()
    s = fam.system
    cands = [s.point("a1"), s.point("a2")]
    worst, verdicts = 1.0, set()
    for seed in range(100):
        rep = verify_M_shadowing(fam.random(10_000, seed), 0.5, "M_upper:0.4", candidates=cands)
        worst = min(worst, rep.best_score)
        verdicts.add(rep.verdict)
    alt = verify_M_shadowing(fam.alternating(10_000), 0.5, "M_upper:0.6", candidates=cands).verdict
    chain = chain_verdict(chain_graph(two_point_identity(), 0.5, 0.1))
    ok = worst >= 0.49 and verdicts == {"supports"} and alt == "refutes-at-horizon" and chain == "neither"
    report(3, ok, f"min best upper density {worst:.4f} over 100 seeds, verdicts {sorted(verdicts)}, "
                  f"alternating {alt}, chain {chain}")


def test_04_rotation_adversary():
    t0 = time.perf_counter()
    ra = rotation_adversary("golden", 0.0, 0.5, 100_000)
    net = list(ra.orbit.system.net(1 / 399))
    rep = verify_M_shadowing(ra.orbit, ra.xi / 8, "M_upper:0.6", candidates=net)
    dt = time.perf_counter() - t0
    ok = len(net) == 400 and rep.best_score <= 0.55 and ra.returns_ok and dt < 60
    report(4, ok, f"best upper density {rep.best_score:.4f} over {len(net)} candidates, K={ra.k}, "
                  f"returns exact: {ra.returns_ok}, verdict {rep.verdict}, {dt:.1f}s (< 60s)")


def test_05_ergodic_to_average():
    failures = []
    for seed in range(50):
        s = sys_("rotation:golden") if seed % 2 == 0 else FullShift(2, 12)
        delta = 0.25 if seed % 2 == 0 else 0.5
        rng = np.random.default_rng(seed)
        xi = spliced_orbit(s, 10_000, sparse_indices(rng, 10_000), seed)
        assert classify(xi, "delta-ergodic", delta / 2).verdict == "pass"
        conv = ergodic_to_average(xi, delta)
        k = conv.starts
        translates = np.concatenate([k + j for j in range(conv.n)])
        spaced = bool(np.all(np.diff(k) >= conv.n)) and len(np.unique(translates)) == len(translates)
        # 4 diam / N < delta / 2
        sized = 4 * s.diameter / conv.n < delta / 2
        avg = classify(conv.orbit, "delta-average", delta).verdict
        if not (spaced and sized and avg == "pass"):
            failures.append(seed)
    report(5, not failures, f"50 seeded inputs (rotation + shift), failures: {failures or 'none'}")


def test_06_concatenation():
    s = sys_("rotation:golden")
    xi = concatenate_average_family(orbit_family(s, 0), theorem_5_1_schedule(100_000), 100_000)
    rep = classify(xi, "asymptotic-average")
    e = step_error_sequence(xi)
    run = np.concatenate([[0.0], np.cumsum(e)]) / np.maximum(np.arange(len(e) + 1), 1)
    grid = [10, 100, 1_000, 10_000, len(e)]
    mono = all(run[a] >= run[b] for a, b in zip(grid, grid[1:]))
    ok = rep.verdict == "pass" and rep.statistic < 1e-2 and mono
    report(6, ok, f"asymptotic-average {rep.verdict}, final-decade mean {rep.statistic:.2e} (< 1e-2), "
                  f"decade-grid running mean non-increasing: {mono}")


def test_07_iterate_lifting():
    bad = 0
    for k in (1, 2, 3, 5):
        for seed in range(20):
            rng = np.random.default_rng([k, seed])
            if seed % 2:
                base = FullShift(2, 10)
                sk = Iterate(base, k) if k > 1 else base
                pts = np.stack([base.random_word(rng, sk.width) for _ in range(60)])
                xi_k = PseudoOrbit(sk, pts)
            else:
                base = sys_("rotation:golden")
                sk = Iterate(base, k) if k > 1 else base
                xi_k = spliced_orbit(sk, 60, np.unique(rng.integers(0, 59, size=6)), seed)
            lifted = lift_to_iterate(xi_k, k)
            if not np.array_equal(project_to_iterate(lifted, k).points, xi_k.points):
                bad += 1
            mk = np.flatnonzero(step_error_sequence(xi_k) > 0)
            if not np.array_equal(np.flatnonzero(step_error_sequence(lifted) > 0), lifted_mismatch_indices(mk, k)):
                bad += 1
    report(7, bad == 0, f"k in (1, 2, 3, 5) x 20 inputs: {bad} round-trip or index-law violations")


def test_08_chain_verdicts():
    cases = [("rotation:1/3", 0.05, 0.01, "chain-mixing"), ("identity2", 0.5, 0.1, "neither"),
             ("shift:2:6", 0.25, 2**-6, "chain-mixing")]
    got = []
    for spec, delta, net, want in cases:
        s = sys_(spec)
        v, v2 = chain_verdict(chain_graph(s, delta, net)), chain_verdict(chain_graph(s, delta, net / 2))
        got.append((spec, v, v2, want))
    ok = all(v == v2 == want for _, v, v2, want in got)
    report(8, ok, "; ".join(f"{s}: {v} (half net: {v2})" for s, v, v2, _ in got))


def test_09_mistake_ball_oracle():
    t0 = time.perf_counter()
    s = FullShift(2, 16)
    g = log_mistakes()
    rng = np.random.default_rng(0)
    x = s.random_word(rng, 12 + s.width)
    eps = 1.0  # on the full shift d >= 1 exactly when the leading symbols differ
    checked = bad = 0
    for n in range(1, 13):
        for pattern in range(1 << n):
            y = x.copy()
            flips = [j for j in range(n) if pattern >> j & 1]
            y[flips] ^= 1
            d = orbit_distances(s, x, y, n)
            counting, brute = mistake_ball_table(d, eps, g(n, eps))
            checked += 1
            bad += int(counting != brute)
    dt = time.perf_counter() - t0
    report(9, bad == 0 and dt < 30, f"{checked} (n, subset) cases for n <= 12, {bad} disagreements, {dt:.1f}s (< 30s)")


def test_10_asp_implies_m_alpha():
    s = FullShift(2, 16)
    xis = splice_suite(s, 10_000, seeds=[0, 1, 2])
    pairs = broken = 0
    for xi in xis:
        for alpha in (0.0, 0.25, 0.5, 0.75):
            for eps in (0.25, 0.5):
                asp = verify_average_shadowing(xi, (1 - alpha) * eps)
                if asp.verdict != "supports":
                    continue
                pairs += 1
                witness = [np.asarray(asp_candidate(xi, asp))]  # same witness as the ASP check
                m = verify_M_shadowing(xi, eps, f"M_alpha:{alpha}", candidates=witness)
                broken += int(m.verdict != "supports")
    report(10, pairs > 0 and broken == 0, f"{pairs} supported (xi, alpha, eps) cases, {broken} without M_alpha support")


def asp_candidate(xi, rep):
    from shadowlab.verifiers import candidate_pool

    cands, _ = candidate_pool(xi, rep.thresholds["epsilon"], rep.candidate_source)
    return cands[rep.diagnostics["best_index"]]


def test_11_suite_reproducible():
    a = dumps(execute_suite(seed=0).report)
    b = dumps(execute_suite(seed=0).report)
    report(11, a == b, f"two suite runs with seed 0: report.json {'byte-identical' if a == b else 'DIFFER'} "
                       f"({len(a.encode())} bytes)")
