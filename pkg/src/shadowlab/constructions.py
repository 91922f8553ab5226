"""Deterministic generators for the pseudo-orbits built in the proofs.

Each generator records its parameters (and, for block constructions, the
first terms of its schedule) in the output's provenance so that two runs can
be diffed. Randomness only ever comes from an explicit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .density import IndexSet, block_parts, exponential_cut_points, linear_cut_points
from .errors import BlocksTooShort, InvalidParameters, NotErgodicInput, ReturnTimeNotFound
from .pseudo_orbits import PseudoOrbit, classify, step_error_sequence
from .systems import (
    DynamicalSystem,
    FiniteMap,
    FloatRotation,
    FullShift,
    Iterate,
    RationalRotation,
    SystemCatalogEntry,
    make_system,
    two_point_identity,
)

PROVENANCE_TERMS = 20
RULES = ("theorem-5.1", "theorem-8.2-linear", "theorem-8.2-exponential", "lemma-8.9")


def _jsonint(v: int):
    # schedules grow doubly exponentially; keep JSON numbers sane
    return v if abs(v) < 2**53 else f"2^{v.bit_length() - 1}+"


@dataclass(frozen=True)
class BlockSchedule:
    """Block terms and cut points of one of the proof schedules.

    ``terms`` are the rule's own sequence (m_n for the concatenation and the
    rotation adversary, l_n for the exponential interleave, L_n for the linear
    one); ``cuts`` are the derived boundaries between blocks, strictly
    increasing, generated until the first one at or past ``limit``.
    """

    rule: str
    terms: tuple
    cuts: tuple
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rule not in RULES:
            raise InvalidParameters("rule", f"unknown schedule rule {self.rule!r}")
        if any(t <= 0 for t in self.terms):
            raise InvalidParameters("terms", "block terms must be positive")
        if any(b <= a for a, b in zip(self.cuts, self.cuts[1:])):
            raise InvalidParameters("cuts", "cut points must be strictly increasing")

    @property
    def block_lengths(self) -> tuple:
        edges = (0,) + tuple(self.cuts)
        return tuple(b - a for a, b in zip(edges, edges[1:]))

    def to_json(self, terms: int = PROVENANCE_TERMS) -> dict:
        return {
            "rule": self.rule,
            "terms": [_jsonint(t) for t in self.terms[:terms]],
            "cuts": [_jsonint(c) for c in self.cuts[:terms]],
            "params": self.params,
        }


def default_n(k: int) -> int:
    """N_k for the concatenation schedule when no window lengths are supplied."""
    return k + 1


def theorem_5_1_schedule(limit: int, n_values: Callable[[int], int] | Sequence[int] | None = None,
                         l_values: dict | None = None) -> BlockSchedule:
    """m_1 = 2^(N_2), m_(n+1) = max(2^(N_(n+2)), L-values, 2^(M_n)), M_n = sum (m_i + 1).

    ``n_values`` gives N_k (callable or list indexed from k = 1); ``l_values``
    maps n+1 to its adversarial L-values. Without L-values the 2^(M_n) floor is
    what drives the growth.
    """
    if n_values is None:
        nk = default_n
    elif callable(n_values):
        nk = n_values
    else:
        seq = list(n_values)

        def nk(k):
            if k > len(seq):
                raise InvalidParameters("n_values", f"N_{k} needed but only {len(seq)} values given")
            return seq[k - 1]
    l_values = {int(k): v for k, v in (l_values or {}).items()}
    terms = [2 ** nk(2)]
    cuts = [terms[0] + 1]
    while cuts[-1] < limit:
        n = len(terms)
        cands = [2 ** nk(n + 2), 2 ** cuts[-1] if cuts[-1] < 4096 else 1 << 4096]
        cands += [int(x) for x in l_values.get(n + 1, [])]
        terms.append(max(cands))
        cuts.append(cuts[-1] + terms[-1] + 1)
    params = {"N_from_2": [nk(k) for k in range(2, min(len(terms) + 1, PROVENANCE_TERMS) + 1)],
              "limit": int(limit), "l_values": bool(l_values)}
    return BlockSchedule("theorem-5.1", tuple(terms), tuple(cuts), params)


def linear_schedule(limit: int) -> BlockSchedule:
    cuts = linear_cut_points(limit)
    return BlockSchedule("theorem-8.2-linear", tuple(cuts), tuple(cuts), {"limit": int(limit)})


def exponential_schedule(limit: int) -> BlockSchedule:
    cuts = exponential_cut_points(limit)
    terms = [cuts[0]] + [b - a for a, b in zip(cuts, cuts[1:])]
    return BlockSchedule("theorem-8.2-exponential", tuple(terms), tuple(cuts), {"limit": int(limit)})


def interleave_schedule(variant: str, limit: int) -> BlockSchedule:
    if variant == "linear":
        return linear_schedule(limit)
    if variant == "exponential":
        return exponential_schedule(limit)
    raise InvalidParameters("variant", "expected 'linear' or 'exponential'")


# ---------------------------------------------------------------------------
# helpers


def full_orbit(system: DynamicalSystem, x, n: int) -> np.ndarray:
    """n points of the orbit of x, periodically extending shift words if needed."""
    if system.scalar:
        return system.orbit(x, n)
    k = system.k if isinstance(system, Iterate) else 1
    return system.orbit(system.extend(x, system.width + k * (n - 1)), n)


def _state(system, pts):
    return pts if system.scalar else system.normalize(pts)


# ---------------------------------------------------------------------------
# ergodic -> average


@dataclass
class AverageConversion:
    orbit: PseudoOrbit
    k_set: IndexSet  # the block union, written calligraphic K in the proof
    starts: np.ndarray  # k_1 < k_2 < ...
    n: int

    def to_json(self):
        return {"N": self.n, "starts": self.starts[:PROVENANCE_TERMS].tolist(),
                "block_union": self.k_set.to_json(members=False) | {"count": len(self.k_set)}}


def greedy_starts(mismatch: np.ndarray, n: int) -> np.ndarray:
    """k_1 = first mismatch, k_(j+1) = min{m in mismatch : m >= k_j + n}."""
    out = []
    nxt = -1
    for m in mismatch:
        if m >= nxt:
            out.append(int(m))
            nxt = m + n
    return np.asarray(out, dtype=np.int64)


def ergodic_to_average(xi: PseudoOrbit, delta: float, check: bool = True) -> AverageConversion:
    """Replace the orbit after each greedy mismatch k by N true steps from x_k.

    N = ceil(8 diam / delta) + 1 so that 4 diam / N < delta / 2.
    """
    if not delta > 0:
        raise InvalidParameters("delta", "must be positive")
    s = xi.system
    if check:
        rep = classify(xi, "delta-ergodic", delta / 2)
        if rep.verdict != "pass":
            raise NotErgodicInput(f"input is not delta/2-ergodic at horizon (ratio {rep.statistic:.4g})",
                                  witness=rep.witness)
    e = step_error_sequence(xi)
    n = math.ceil(8 * s.diameter / delta) + 1
    mism = np.flatnonzero(e >= delta / 2)
    starts = greedy_starts(mism, n)
    size = len(xi)
    pts = np.array(xi.points, copy=True)
    mask = np.zeros(size, dtype=bool)
    for k in starts:
        hi = min(k + n, size)
        pts[k:hi] = _state(s, full_orbit(s, xi.points[k], hi - k))
        mask[k:hi] = True
    prov = {"construction": "ergodic-to-average", "delta": delta, "N": n,
            "starts": starts[:PROVENANCE_TERMS].tolist(), "source": xi.provenance}
    out = PseudoOrbit(s, pts, prov)
    return AverageConversion(out, IndexSet.from_mask(mask), starts, n)


# ---------------------------------------------------------------------------
# concatenation of average pseudo-orbits


BetaSource = Sequence[PseudoOrbit] | Callable[[int, int], PseudoOrbit]


def concatenate_average_family(betas: BetaSource, schedule: BlockSchedule, horizon: int) -> PseudoOrbit:
    """xi = beta^(1)_0..m_1  beta^(2)_0..m_2  ...  cut at ``horizon``.

    ``betas`` is a list (beta^(k) at position k-1) or a factory
    ``(k, length) -> PseudoOrbit``.
    """
    if schedule.rule != "theorem-5.1":
        raise InvalidParameters("schedule", "concatenation uses the theorem-5.1 schedule")
    pieces = []
    total = 0
    system = None
    k = 0
    while total < horizon:
        k += 1
        if k > len(schedule.terms):
            raise InvalidParameters("schedule", "schedule ends before the horizon")
        need = min(schedule.terms[k - 1] + 1, horizon - total)
        if callable(betas):
            beta = betas(k, need)
        else:
            if k > len(betas):
                raise BlocksTooShort(f"no beta^({k}) supplied", block=k)
            beta = betas[k - 1]
        if len(beta) < need:
            raise BlocksTooShort(f"beta^({k}) has {len(beta)} points, block needs {need}", block=k, need=need)
        if system is None:
            system = beta.system
        elif beta.system.name != system.name:
            raise InvalidParameters("betas", "all blocks must live in the same system")
        pieces.append(beta.points[:need])
        total += need
    prov = {"construction": "concatenate-average-family", "horizon": int(horizon),
            "blocks": k, "schedule": schedule.to_json()}
    return PseudoOrbit(system, np.concatenate(pieces), prov)


def orbit_family(system: DynamicalSystem, seed: int) -> Callable[[int, int], PseudoOrbit]:
    """beta^(k) = true orbit of the k-th seeded random point."""

    def beta(k: int, length: int) -> PseudoOrbit:
        rng = np.random.default_rng([seed, k])
        x0 = system.sample(rng, 1)[0]
        return PseudoOrbit(system, _state(system, full_orbit(system, x0, length)),
                           {"construction": "orbit", "seed": [seed, k]})

    return beta


def splice_family(system: FullShift, seed: int, gap=(20, 60)) -> Callable[[int, int], PseudoOrbit]:
    """beta^(k) = shift splices with at least log2(k)+1 agreeing symbols at each splice,
    so every step error is below 1/k."""

    def beta(k: int, length: int) -> PseudoOrbit:
        a = max(1, math.floor(math.log2(k)) + 1)
        return shift_splice(system, length, seed=[seed, k], gap=gap, agree=(a, a + 2))

    return beta


# ---------------------------------------------------------------------------
# interleaves


def interleave_minimal(u, v, system: DynamicalSystem, variant: str, horizon: int) -> PseudoOrbit:
    """x_i = f^i(u) on A, f^i(v) on B (absolute time on both)."""
    sched = interleave_schedule(variant, horizon)
    a_mask, _ = block_parts(list(sched.cuts), horizon)
    ou = _state(system, full_orbit(system, u, horizon))
    ov = _state(system, full_orbit(system, v, horizon))
    pts = np.where(a_mask.reshape((-1,) + (1,) * (ou.ndim - 1)), ou, ov)
    prov = {"construction": "interleave-minimal", "variant": variant, "horizon": int(horizon),
            "u": system.to_json(u), "v": system.to_json(v), "schedule": sched.to_json()}
    return PseudoOrbit(system, pts, prov)


def backward_orbit(system: DynamicalSystem, v, n: int, selector=None) -> np.ndarray:
    """[v_0, v_(-1), ..., v_(-(n-1))] with f(v_(-j)) = v_(-j+1)."""
    cur = _state(system, np.asarray(v, dtype=system.dtype)) if not system.scalar else v
    out = [cur]
    for _ in range(n - 1):
        cur = system.preimage(cur, selector)
        if not system.scalar:
            cur = system.normalize(cur)
        out.append(cur)
    return np.asarray(out, dtype=system.dtype)


def interleave_backward(u, v, system: DynamicalSystem, horizon: int, selector=None,
                        variant: str = "linear") -> PseudoOrbit:
    """Forward u-blocks restarted at each A_n, backward v-chains ending at v_(-1)."""
    sched = interleave_schedule(variant, horizon)
    cuts = [c for c in sched.cuts]
    # block list: (lo, hi, kind) with A_0 = [0, L_1)
    blocks = [(0, min(cuts[0], horizon), "A")]
    for i in range(1, len(cuts)):
        lo = cuts[i - 1]
        if lo >= horizon:
            break
        hi = min(cuts[i], horizon)
        blocks.append((lo, hi, "B" if i % 2 == 1 else "A"))
    longest_a = max(hi - lo for lo, hi, t in blocks if t == "A")
    b_blocks = [(lo, hi, i) for i, (lo, hi, t) in enumerate(blocks) if t == "B"]
    ou = _state(system, full_orbit(system, u, longest_a))
    pieces = []
    back = None
    if b_blocks:
        # a B block [L_(2n-1), L_(2n)) holds v_(i - L_(2n)), i.e. indices -len..-1
        need = max(_b_right_end(cuts, i, blocks) - lo for lo, hi, i in b_blocks)
        back = backward_orbit(system, v, need + 1, selector)
    for idx, (lo, hi, t) in enumerate(blocks):
        if t == "A":
            pieces.append(ou[: hi - lo])
        else:
            right = _b_right_end(cuts, idx, blocks)
            # v_(i - right) for i in [lo, hi): backward index right - i
            pieces.append(back[[right - i for i in range(lo, hi)]])
    prov = {"construction": "interleave-backward", "variant": variant, "horizon": int(horizon),
            "selector": selector, "u": system.to_json(u), "v": system.to_json(v),
            "schedule": sched.to_json()}
    return PseudoOrbit(system, np.concatenate(pieces), prov)


def _b_right_end(cuts, idx, blocks):
    # a block cut by the horizon is aligned to the horizon instead of its
    # true right end, which may be astronomically far for the exponential cuts
    return blocks[idx][1]


# ---------------------------------------------------------------------------
# rotation adversary


@dataclass
class RotationAdversary:
    orbit: PseudoOrbit
    schedule: BlockSchedule
    xi: float  # d(y, y')
    delta: float
    k: int
    return_times: np.ndarray
    returns_ok: bool

    def to_json(self):
        return {"xi": self.xi, "delta": self.delta, "K": self.k, "returns_ok": self.returns_ok,
                "schedule": self.schedule.to_json()}


def return_set(system: DynamicalSystem, y, target, radius: float, n: int):
    """Orbit of y (length n) and {t in [0, n) : d(g^t y, target) < radius}."""
    orb = system.orbit(y, n)
    d = system.dist(orb, np.broadcast_to(np.asarray(target, dtype=system.dtype), orb.shape))
    return orb, np.flatnonzero(d < radius)


def syndetic_bound(times: np.ndarray) -> int:
    """Smallest K with (t, t+K] meeting ``times`` for every t >= 0 covered by the scan."""
    if len(times) == 0:
        raise ReturnTimeNotFound("the orbit never entered the target ball within the scan")
    pos = times[times > 0]
    if len(pos) == 0:
        raise ReturnTimeNotFound("no positive return time within the scan")
    gaps = [int(pos[0])]
    if len(pos) > 1:
        gaps.append(int(np.diff(pos).max()))
    return max(gaps)


def rotation_adversary(system_or_angle, y, y_prime, horizon: int, scan_bound: int | None = None) -> RotationAdversary:
    """Blocks A_n = [M_n, M_(n+1)) restarting the orbit of y, with
    m_n = 2n(n+1)K and M_n = M_(n-1) + j for the smallest return time
    j in (m_n - M_(n-1), m_n - M_(n-1) + K].
    """
    if isinstance(system_or_angle, DynamicalSystem):
        system = system_or_angle
    else:
        system = make_system(SystemCatalogEntry("circle-rotation", {"angle": system_or_angle}))
    if not isinstance(system, (RationalRotation, FloatRotation)):
        raise InvalidParameters("system", "the adversary is built on a circle rotation")
    y = system.point(y)
    yp = system.point(y_prime)
    xi = system.metric(y, yp)
    if xi <= 0:
        raise InvalidParameters("y_prime", "y and y' must be distinct")
    delta = xi / 4
    scan = int(scan_bound or horizon)
    orb, rt = return_set(system, y, yp, delta, scan)
    k = max(syndetic_bound(rt), 4)
    is_ret = np.zeros(scan, dtype=bool)
    is_ret[rt] = True

    terms, cuts = [], []
    prev = 0
    n = 0
    while prev < horizon:
        n += 1
        m = 2 * n * (n + 1) * k
        lo = m - prev
        if lo + k >= scan:
            raise ReturnTimeNotFound(f"return window ({lo}, {lo + k}] lies beyond the scan of {scan}",
                                     block=n, scan=scan)
        hits = np.flatnonzero(is_ret[lo + 1 : lo + k + 1])
        if len(hits) == 0:
            raise ReturnTimeNotFound(f"no return time in ({lo}, {lo + k}]; K={k} is too small", block=n)
        j = lo + 1 + int(hits[0])  # smallest qualifying return time
        terms.append(m)
        cuts.append(prev + j)
        prev = prev + j

    edges = [0] + cuts
    pieces = []
    for a, b in zip(edges, edges[1:]):
        if a >= horizon:
            break
        length = min(b, horizon) - a
        if length > len(orb):
            orb = system.orbit(y, length)
        pieces.append(orb[:length])
    pts = np.concatenate(pieces)

    # g^(M_n - M_(n-1))(y) in B(y', delta), re-evaluated independently
    jumps = np.diff(np.asarray(edges))
    landing = np.asarray([system.orbit(y, int(t) + 1)[-1] for t in jumps], dtype=system.dtype)
    dl = system.dist(landing, np.broadcast_to(yp, landing.shape))
    returns_ok = bool(np.all(dl < delta))

    sched = BlockSchedule("lemma-8.9", tuple(terms), tuple(cuts),
                          {"K": k, "xi": xi, "delta": delta, "scan": scan})
    prov = {"construction": "rotation-adversary", "system": system.name, "y": system.to_json(y),
            "y_prime": system.to_json(yp), "horizon": int(horizon), "schedule": sched.to_json()}
    return RotationAdversary(PseudoOrbit(system, pts, prov), sched, xi, delta, k, rt, returns_ok)


# ---------------------------------------------------------------------------
# two-point identity


class TwoPointFamily:
    """Arbitrary {a1, a2}-sequences; each is a pseudo-orbit of the identity."""

    def __init__(self, system: FiniteMap | None = None):
        self.system = system or two_point_identity()

    def _wrap(self, states, **prov):
        return PseudoOrbit(self.system, np.asarray(states, dtype=np.int64), {"construction": "example-4.4", **prov})

    def random(self, n: int, seed: int, p: float = 0.5) -> PseudoOrbit:
        rng = np.random.default_rng(seed)
        return self._wrap((rng.random(n) < p).astype(np.int64), kind="random", seed=seed, p=p)

    def alternating(self, n: int) -> PseudoOrbit:
        return self._wrap(np.arange(n) % 2, kind="alternating")

    def constant(self, n: int, state: int = 0) -> PseudoOrbit:
        return self._wrap(np.full(n, state), kind="constant", state=state)

    def blocks(self, n: int, lengths: Sequence[int]) -> PseudoOrbit:
        """Cycle through runs of the given lengths, alternating the state."""
        out = np.empty(n, dtype=np.int64)
        i, b = 0, 0
        while i < n:
            ln = int(lengths[b % len(lengths)])
            if ln < 1:
                raise InvalidParameters("lengths", "run lengths must be >= 1")
            out[i : i + ln] = b % 2
            i += ln
            b += 1
        return self._wrap(out, kind="blocks", lengths=list(map(int, lengths)))

    def from_cuts(self, cuts: Sequence[int], n: int) -> PseudoOrbit:
        a, _ = block_parts(list(cuts), n)
        return self._wrap((~a).astype(np.int64), kind="cuts")


def example_4_4():
    fam = TwoPointFamily()
    return fam.system, fam


# ---------------------------------------------------------------------------
# shift splices


def shift_splice(system: FullShift, length: int, seed, gap=(20, 60), agree=(4, 8),
                 big_every: int = 0) -> PseudoOrbit:
    """Concatenated true-orbit pieces of random words.

    At each splice the new word agrees with the image of the previous point on
    ``agree`` leading symbols (step error <= 2^-agree); with ``big_every > 0``
    every that-many-th splice keeps no symbol at all.
    """
    if not isinstance(system, FullShift):
        raise InvalidParameters("system", "splices are built on a full shift")
    rng = np.random.default_rng(seed)
    h = system.horizon
    w = system.width
    pts = np.empty((length, w), dtype=np.uint8)
    word = system.random_word(rng, w + gap[1] + 1)
    pos = 0  # index in the current word of the current point
    i = 0
    s_count = 0
    next_splice = int(rng.integers(gap[0], gap[1] + 1))
    splices = []
    while i < length:
        pts[i] = word[pos : pos + w]
        i += 1
        pos += 1
        if i == next_splice and i < length:
            s_count += 1
            a = 0 if big_every and s_count % big_every == 0 else int(rng.integers(agree[0], agree[1] + 1))
            a = min(a, h)
            fresh = system.random_word(rng, w + gap[1] + 1)
            keep = word[pos : pos + a]
            fresh[:a] = keep
            if a < len(fresh) and a < h and a < w:
                # force a genuine mismatch right after the kept symbols
                fresh[a] = (word[pos + a] + 1 + rng.integers(0, system.alphabet - 1)) % system.alphabet
            word, pos = fresh, 0
            splices.append(i - 1)
            next_splice = i + int(rng.integers(gap[0], gap[1] + 1))
    prov = {"construction": "shift-splice", "seed": seed if isinstance(seed, int) else list(seed),
            "gap": list(gap), "agree": list(agree), "big_every": big_every,
            "splices": splices[:PROVENANCE_TERMS]}
    return PseudoOrbit(system, pts, prov)


def shift_tracer(xi: PseudoOrbit) -> np.ndarray:
    """The word x_0[0] x_1[0] ... x_(N-1)[0] followed by the rest of x_(N-1)."""
    s = xi.system
    if not isinstance(s, FullShift):
        raise InvalidParameters("system", "the tracer word is defined on the full shift")
    return np.concatenate([xi.points[:, 0], xi.points[-1, 1:]]).astype(np.uint8)


def splice_suite(system: FullShift, length: int, seeds: Sequence[int]) -> list[PseudoOrbit]:
    """A bank of splice pseudo-orbits of varying roughness."""
    variants = [
        {"gap": (20, 60), "agree": (4, 8), "big_every": 0},
        {"gap": (30, 80), "agree": (3, 6), "big_every": 5},
        {"gap": (50, 150), "agree": (2, 5), "big_every": 2},
    ]
    out = []
    for s in seeds:
        for v in variants:
            out.append(shift_splice(system, length, seed=s, **v))
    return out


# ---------------------------------------------------------------------------
# sparse-mismatch inputs


def sparse_indices(rng: np.random.Generator, length: int, power: float = 3.0, scale=(2.0, 4.0)) -> np.ndarray:
    """{round(s * k^power) + jitter}: a density-zero set with a random scale."""
    s = rng.uniform(*scale)
    kmax = int((length / s) ** (1 / power)) + 2
    idx = np.round(s * np.arange(1, kmax) ** power).astype(np.int64)
    idx = idx + rng.integers(0, 3, size=len(idx))
    return np.unique(idx[(idx >= 0) & (idx < length - 1)])


def spliced_orbit(system: DynamicalSystem, length: int, splice_at: np.ndarray, seed) -> PseudoOrbit:
    """True orbit pieces restarted from fresh random points after each index in ``splice_at``."""
    rng = np.random.default_rng(seed)
    edges = [0] + [int(i) + 1 for i in splice_at] + [length]
    pieces = []
    for a, b in zip(edges, edges[1:]):
        if b <= a:
            continue
        x0 = system.sample(rng, 1)[0]
        pieces.append(_state(system, full_orbit(system, x0, b - a)))
    prov = {"construction": "spliced-orbit", "seed": seed if isinstance(seed, int) else list(seed),
            "splices": [int(i) for i in splice_at[:PROVENANCE_TERMS]]}
    return PseudoOrbit(system, np.concatenate(pieces), prov)
