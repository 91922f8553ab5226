from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shadowlab.errors import InvalidParameters, HorizonExhausted
from shadowlab.systems import (
    FullShift, Iterate, Product, SystemCatalogEntry, equicontinuity_modulus, make_system,
    parse_system_spec, two_point_identity,
)
from conftest import CATALOG, system


def random_points(s, rng, n):
    if isinstance(s, FullShift):
        return np.stack([s.random_word(rng, s.width) for _ in range(n)])
    return s.sample(rng, n)


# ---- oracles ---------------------------------------------------------------

def test_two_point_identity_is_discrete_identity():
    s = two_point_identity()
    a1, a2 = s.point("a1"), s.point("a2")
    assert s.step(a1) == a1 and s.step(a2) == a2
    assert s.metric(a1, a2) == 1.0 and s.metric(a1, a1) == 0.0
    assert list(s.orbit(a1, 5)) == [a1] * 5


def test_rational_rotation_orbit_third():
    s = system("rotation:1/3")
    orb = s.orbit(s.point(0.0), 4)
    assert [Fraction(s.to_json(p)) for p in orb] == [0, Fraction(1, 3), Fraction(2, 3), 0]


def test_shift_metric_against_direct_formula():
    s = FullShift(2, 16)
    x = s.point("0" * 17)
    y = s.point("1" + "0" * 16)
    assert s.metric(x, y) == 1.0

    def direct(a, b):
        for i in range(16):
            if a[i] != b[i]:
                return 2.0 ** -i
        return 0.0

    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b = s.random_word(rng, 17), s.random_word(rng, 17)
        k = int(rng.integers(0, 17))
        b[:k] = a[:k]  # force a shared prefix so small distances are exercised
        assert s.metric(a, b) == direct(a, b)


def test_shift_orbit_is_left_shift():
    s = FullShift(2, 4)
    x = s.point("0101010")
    orb = s.orbit(x, 2)
    assert "".join(map(str, orb[0][:4])) == "0101"
    assert "".join(map(str, orb[1][:4])) == "1010"


def test_shift_refuses_to_invent_symbols():
    s = FullShift(2, 8)
    with pytest.raises(HorizonExhausted):
        s.f(np.zeros((1, 8), dtype=np.uint8))


def test_iterate_one_matches_base():
    base = system("rotation:golden")
    it = Iterate(base, 1)
    x = base.point(0.123)
    assert np.array_equal(it.orbit(x, 50), base.orbit(x, 50))


@pytest.mark.parametrize("spec", ["rotation:1/7", "rotation:golden", "tent", "finite:1,2,0,3,3", "shift:2:10"])
@pytest.mark.parametrize("k", [2, 3, 5])
def test_iterate_orbit_is_every_kth_base_point(spec, k):
    base = system(spec)
    rng = np.random.default_rng(k)
    if isinstance(base, FullShift):
        x = base.random_word(rng, base.horizon + k * 20 + 1)
        it = Iterate(base, k)
        got = it.orbit(x, 20)
        full = base.orbit(x, k * 19 + 1)
        assert np.array_equal(got[:, : base.horizon], full[::k][:, : base.horizon])
    else:
        x = base.sample(rng, 1)[0]
        assert np.array_equal(Iterate(base, k).orbit(x, 20), base.orbit(x, k * 20)[::k])


# ---- metric axioms and nets -----------------------------------------------

@pytest.mark.parametrize("spec", CATALOG)
def test_metric_axioms_on_random_triples(spec):
    s = system(spec)
    rng = np.random.default_rng(7)
    n = 10_000
    x, y, z = (random_points(s, rng, n) for _ in range(3))
    dxy, dyx = s.dist(x, y), s.dist(y, x)
    dxz, dyz = s.dist(x, z), s.dist(y, z)
    assert np.all(s.dist(x, x) == 0)
    assert np.all(dxy >= 0)
    assert np.allclose(dxy, dyx, atol=1e-12, rtol=0)
    assert np.all(dxz <= dxy + dyz + 1e-12)
    assert np.all(dxy <= s.diameter + 1e-12)


@pytest.mark.parametrize("spec,eps", [("identity2", 0.5), ("finite:1,2,0", 0.3), ("rotation:1/3", 0.01),
                                      ("rotation:golden", 0.02), ("tent", 0.05), ("shift:2:8", 0.1),
                                      ("shift:3:6", 0.26)])
def test_net_covers_random_points(spec, eps):
    s = system(spec)
    rng = np.random.default_rng(3)
    net = s.net(eps)
    pts = random_points(s, rng, 2_000 if not s.is_finite else 50)
    tol = 1e-9 if not (s.is_finite or isinstance(s, FullShift)) else 0.0
    for p in pts:
        d = s.dist(net, np.broadcast_to(p, net.shape) if not s.scalar else np.full(len(net), p, dtype=s.dtype))
        assert d.min() <= eps + tol


def test_catalog_round_trip():
    for spec in CATALOG:
        e = parse_system_spec(spec)
        again = SystemCatalogEntry.from_json(e.to_json())
        assert make_system(again).name == make_system(e).name


def test_unknown_kind_rejected():
    with pytest.raises(InvalidParameters):
        make_system({"kind": "torus", "params": {}})
    with pytest.raises(InvalidParameters):
        parse_system_spec("klein-bottle")


def test_product_of_rotations_uses_max_metric():
    p = make_system({"kind": "product", "params": {"factors": [
        {"kind": "circle-rotation", "params": {"angle": "1/3"}},
        {"kind": "circle-rotation", "params": {"angle": "1/4"}}]}})
    assert isinstance(p, Product)
    x = p.point([0.0, 0.0])
    y = p.point([0.1, 0.4])
    assert p.metric(x, y) == pytest.approx(0.4)


# ---- equicontinuity ----------------------------------------------------------

def test_rotation_is_equicontinuous_with_delta_eps():
    s = system("rotation:golden")
    assert equicontinuity_modulus(s, 0.1, 50, samples=200) == pytest.approx(0.1)


def test_shift_has_no_equicontinuity_modulus():
    s = FullShift(2, 10)
    assert equicontinuity_modulus(s, 0.25, 8, samples=200) is None


def test_identity_modulus_is_half():
    assert equicontinuity_modulus(two_point_identity(), 0.5, 10, samples=50) == 0.5


@given(st.fractions(min_value=0, max_value=1).filter(lambda q: q < 1 and q.denominator <= 50),
       st.integers(min_value=1, max_value=40))
def test_rational_rotation_is_exactly_periodic(q, n):
    s = make_system({"kind": "circle-rotation", "params": {"angle": f"{q.numerator}/{q.denominator}"}})
    x = s.point(0.25)
    orb = s.orbit(x, q.denominator + 1)
    assert s.metric(orb[0], orb[-1]) == 0.0
