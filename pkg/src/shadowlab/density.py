"""Finite prefixes of subsets of Z+ with their algebra, densities and families.

An :class:`IndexSet` stores ``A ∩ [0, N)`` exactly. Upper and lower densities
are estimated from the prefix ratio ``|A ∩ [0, n)| / n`` over the final decade
``n in [ceil(N/10), N]``; every ``n`` in that range is used, the stored curve is
only a sample for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HorizonTooSmall, InvalidParameters

MIN_DENSITY_HORIZON = 100
DEFAULT_TOL = 1e-2

FAMILIES = ("M_alpha", "M_upper_alpha", "M_hat_1", "syndetic", "thick")


@dataclass(frozen=True, eq=False)
class IndexSet:
    horizon: int
    members: np.ndarray
    closed_form: dict | None = None

    def __post_init__(self):
        m = np.asarray(self.members, dtype=np.int64)
        if m.ndim != 1:
            raise InvalidParameters("members", "must be one-dimensional")
        if len(m) and (np.any(np.diff(m) <= 0) or m[0] < 0 or m[-1] >= self.horizon):
            raise InvalidParameters("members", f"must be strictly increasing in [0, {self.horizon})")
        m.setflags(write=False)
        object.__setattr__(self, "members", m)

    # constructors ---------------------------------------------------------
    @classmethod
    def from_mask(cls, mask, closed_form=None):
        mask = np.asarray(mask, dtype=bool)
        return cls(len(mask), np.flatnonzero(mask), closed_form)

    @classmethod
    def from_iterable(cls, values, horizon):
        arr = np.unique(np.asarray(list(values), dtype=np.int64))
        arr = arr[(arr >= 0) & (arr < horizon)]
        return cls(horizon, arr)

    @classmethod
    def full(cls, horizon):
        return cls(horizon, np.arange(horizon))

    @classmethod
    def empty(cls, horizon):
        return cls(horizon, np.empty(0, dtype=np.int64))

    # views ------------------------------------------------------------------
    def mask(self) -> np.ndarray:
        out = np.zeros(self.horizon, dtype=bool)
        out[self.members] = True
        return out

    def prefix_counts(self) -> np.ndarray:
        """``c[n] = |A ∩ [0, n)|`` for n = 0..N."""
        c = np.zeros(self.horizon + 1, dtype=np.int64)
        np.cumsum(self.mask(), out=c[1:])
        return c

    def count(self, n: int | None = None) -> int:
        if n is None:
            return len(self.members)
        return int(np.searchsorted(self.members, n))

    def __len__(self):
        return len(self.members)

    def __contains__(self, i):
        j = np.searchsorted(self.members, i)
        return bool(j < len(self.members) and self.members[j] == i)

    def __iter__(self):
        return iter(self.members.tolist())

    def __eq__(self, other):
        return (
            isinstance(other, IndexSet)
            and self.horizon == other.horizon
            and np.array_equal(self.members, other.members)
        )

    def __hash__(self):
        return hash((self.horizon, self.members.tobytes()))

    def __repr__(self):
        head = ", ".join(map(str, self.members[:8].tolist()))
        more = ", ..." if len(self.members) > 8 else ""
        return f"IndexSet(N={self.horizon}, {{{head}{more}}})"

    # algebra --------------------------------------------------------------
    def __and__(self, other):
        return intersect(self, other)

    def __or__(self, other):
        return union(self, other)

    def __sub__(self, other):
        return minus(self, other)

    # serialization ----------------------------------------------------------
    def to_json(self, members=True) -> dict:
        if self.closed_form is not None and not members:
            return {"horizon": self.horizon, "closed_form": dict(self.closed_form)}
        return {"horizon": self.horizon, "members": self.members.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "IndexSet":
        if "horizon" not in data:
            raise InvalidParameters("horizon", "index set needs a horizon")
        n = int(data["horizon"])
        if "members" in data:
            return cls.from_iterable(data["members"], n)
        if "closed_form" in data:
            return from_closed_form(data["closed_form"], n)
        raise InvalidParameters("members", "need 'members' or 'closed_form'")


# ---------------------------------------------------------------------------
# shifts and scaling (images are exact on the stated horizon)


def shift_add(a: IndexSet, j: int) -> IndexSet:
    """A + j, truncated to [0, N)."""
    if j < 0:
        raise InvalidParameters("j", "shift must be >= 0")
    m = a.members + j
    return IndexSet(a.horizon, m[m < a.horizon])


def shift_sub(a: IndexSet, j: int) -> IndexSet:
    """A - j restricted to Z+; known exactly on [0, N - j)."""
    if j < 0:
        raise InvalidParameters("j", "shift must be >= 0")
    n = max(a.horizon - j, 0)
    m = a.members - j
    return IndexSet(n, m[m >= 0])


def scale(a: IndexSet, j: int) -> IndexSet:
    """j * A, truncated to [0, N)."""
    if j < 1:
        raise InvalidParameters("j", "scale factor must be >= 1")
    m = a.members * j
    return IndexSet(a.horizon, m[m < a.horizon])


def _common(a: IndexSet, b: IndexSet):
    n = min(a.horizon, b.horizon)
    return n, a.members[a.members < n], b.members[b.members < n]


def union(a: IndexSet, b: IndexSet) -> IndexSet:
    n, x, y = _common(a, b)
    return IndexSet(n, np.union1d(x, y))


def intersect(a: IndexSet, b: IndexSet) -> IndexSet:
    n, x, y = _common(a, b)
    return IndexSet(n, np.intersect1d(x, y, assume_unique=True))


def minus(a: IndexSet, b: IndexSet) -> IndexSet:
    n, x, y = _common(a, b)
    return IndexSet(n, np.setdiff1d(x, y, assume_unique=True))


def complement(a: IndexSet) -> IndexSet:
    return IndexSet.from_mask(~a.mask())


def boolean_algebra(a: IndexSet, b: IndexSet | None, op: str) -> IndexSet:
    if op == "union":
        return union(a, b)
    if op == "intersect":
        return intersect(a, b)
    if op == "minus":
        return minus(a, b)
    if op in ("complement", "complement-in-prefix"):
        return complement(a)
    raise InvalidParameters("op", f"unknown operation {op!r}")


def intersect_all(sets) -> IndexSet:
    sets = list(sets)
    out = sets[0]
    for s in sets[1:]:
        out = intersect(out, s)
    return out


# ---------------------------------------------------------------------------
# closed forms


def arithmetic(step: int, horizon: int, offset: int = 0) -> IndexSet:
    if step < 1:
        raise InvalidParameters("step", "must be >= 1")
    cf = {"kind": "arithmetic", "step": step, "offset": offset, "density": 1.0 / step}
    return IndexSet(horizon, np.arange(offset % step, horizon, step), cf)


def linear_cut_points(limit: int) -> list[int]:
    """L_1 = 2, L_n = L_(n-1) + n, every L_n < limit plus the first one >= limit."""
    cuts = [2]
    n = 1
    while cuts[-1] < limit:
        n += 1
        cuts.append(cuts[-1] + n)
    return cuts


def exponential_cut_points(limit: int) -> list[int]:
    """l_1 = 2, l_n = 2**(l_1 + ... + l_(n-1)), L_n = l_1 + ... + l_n."""
    cuts = [2]
    while cuts[-1] < limit:
        cuts.append(cuts[-1] + 2 ** cuts[-1])
    return cuts


def block_parts(cuts, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Masks of A = [0, L_1) ∪ ⋃[L_2n, L_2n+1) and B = ⋃[L_2n-1, L_2n)."""
    a = np.zeros(horizon, dtype=bool)
    a[: min(cuts[0], horizon)] = True
    for i in range(1, len(cuts), 2):
        # cuts[i] is L_(i+1), an even-indexed cut point
        lo = cuts[i]
        if lo >= horizon:
            break
        hi = cuts[i + 1] if i + 1 < len(cuts) else horizon
        a[lo : min(hi, horizon)] = True
    return a, ~a


def linear_blocks(horizon: int, part: str = "A") -> IndexSet:
    a, b = block_parts(linear_cut_points(horizon), horizon)
    cf = {"kind": "linear-blocks", "part": part, "density": 0.5}
    return IndexSet.from_mask(a if part == "A" else b, cf)


def exponential_blocks(horizon: int, part: str = "A") -> IndexSet:
    a, b = block_parts(exponential_cut_points(horizon), horizon)
    # lower density 0 and upper density 1 for both parts; no limit exists
    cf = {"kind": "exponential-blocks", "part": part}
    return IndexSet.from_mask(a if part == "A" else b, cf)


def squares(horizon: int) -> IndexSet:
    r = math.isqrt(max(horizon - 1, 0))
    cf = {"kind": "squares", "density": 0.0}
    return IndexSet(horizon, np.arange(r + 1) ** 2, cf)


def from_closed_form(cf: dict, horizon: int) -> IndexSet:
    kind = cf.get("kind")
    if kind == "arithmetic":
        return arithmetic(int(cf["step"]), horizon, int(cf.get("offset", 0)))
    if kind == "linear-blocks":
        return linear_blocks(horizon, cf.get("part", "A"))
    if kind == "exponential-blocks":
        return exponential_blocks(horizon, cf.get("part", "A"))
    if kind == "squares":
        return squares(horizon)
    if kind == "full":
        return IndexSet(horizon, np.arange(horizon), {"kind": "full", "density": 1.0})
    raise InvalidParameters("closed_form", f"unknown closed form {kind!r}")


# ---------------------------------------------------------------------------
# densities


@dataclass
class DensityStats:
    upper: float
    lower: float
    horizon: int
    start: int
    curve: list = field(default_factory=list)  # (n, count, ratio)
    converged: bool = False
    empirical_upper: float | None = None
    empirical_lower: float | None = None
    closed_form: dict | None = None

    @property
    def oscillation(self):
        return self.upper - self.lower

    def to_json(self):
        return {
            "upper": self.upper,
            "lower": self.lower,
            "horizon": self.horizon,
            "start": self.start,
            "converged": self.converged,
            "empirical_upper": self.empirical_upper,
            "empirical_lower": self.empirical_lower,
            "closed_form": self.closed_form,
        }

    def csv_rows(self):
        yield ("n", "count", "ratio")
        for n, c, r in self.curve:
            yield (n, c, r)


def sample_grid(horizon: int, ratio: float = 1.05) -> np.ndarray:
    """n = floor(N / 2**k) together with a geometric grid, all in [1, N]."""
    pts = set()
    n = horizon
    while n >= 1:
        pts.add(n)
        n //= 2
    g = 1.0
    while g <= horizon:
        pts.add(int(g))
        g = max(g * ratio, g + 1)
    pts.add(horizon)
    return np.asarray(sorted(pts), dtype=np.int64)


def decade_start(horizon: int) -> int:
    return max(1, math.ceil(horizon / 10))


def ratio_extremes(counts: np.ndarray, start: int) -> tuple[float, float]:
    """Max and min of counts[..., n] / n over n in [start, N] (last axis)."""
    n = np.arange(start, counts.shape[-1])
    r = counts[..., start:] / n
    return r.max(axis=-1), r.min(axis=-1)


def density(a: IndexSet, start: int | None = None, tol: float = DEFAULT_TOL) -> DensityStats:
    """Upper/lower density estimates of ``a`` at its horizon."""
    n = a.horizon
    if n < MIN_DENSITY_HORIZON:
        raise HorizonTooSmall(f"density needs horizon >= {MIN_DENSITY_HORIZON}, got {n}", horizon=n)
    start = decade_start(n) if start is None else max(1, int(start))
    if start > n:
        raise InvalidParameters("start", "estimation window starts past the horizon")
    c = a.prefix_counts()
    up, lo = ratio_extremes(c, start)
    up, lo = float(up), float(lo)
    grid = sample_grid(n)
    curve = [(int(k), int(c[k]), float(c[k] / k)) for k in grid]
    stats = DensityStats(
        upper=up,
        lower=lo,
        horizon=n,
        start=start,
        curve=curve,
        converged=(up - lo) <= tol,
        empirical_upper=up,
        empirical_lower=lo,
        closed_form=a.closed_form,
    )
    if a.closed_form is not None and "density" in a.closed_form:
        d = float(a.closed_form["density"])
        stats.upper = stats.lower = d
        stats.converged = True
    return stats


# ---------------------------------------------------------------------------
# gaps and families


def max_gap(a: IndexSet) -> int | None:
    """Smallest k with A ∩ [i, i+k) nonempty for every window inside [0, N).

    None when A is empty.
    """
    if len(a) == 0:
        return None
    m = a.members
    gaps = [int(m[0]) + 1]
    if len(m) > 1:
        gaps.append(int(np.diff(m).max()))
    # tail windows [i, i+k) must fit in the prefix, so the tail only matters
    # once it is longer than the interior gaps
    tail = a.horizon - int(m[-1])
    k = max(gaps)
    if tail > k:
        k = tail
    return k


def longest_run(a: IndexSet) -> int:
    if len(a) == 0:
        return 0
    m = a.members
    breaks = np.flatnonzero(np.diff(m) != 1)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [len(m) - 1]])
    return int((ends - starts).max() + 1)


@dataclass(frozen=True)
class FamilyVerdict:
    family: str
    parameter: float | int | None
    verdict: str  # "in" | "out" | "inconclusive"
    estimate: float
    margin: float
    horizon: int
    converged: bool

    def to_json(self):
        return {
            "family": self.family,
            "parameter": self.parameter,
            "verdict": self.verdict,
            "estimate": self.estimate,
            "margin": self.margin,
            "horizon": self.horizon,
            "converged": self.converged,
            "scope": "finite prefix",
        }


def boundary_margin(horizon: int) -> float:
    return 2.0 / math.sqrt(horizon)


def compare(estimate: float, alpha: float, margin: float) -> str:
    """Strict-inequality rule: clear of alpha by the margin either way, else undecided."""
    if estimate > alpha + margin:
        return "in"
    if estimate < alpha - margin:
        return "out"
    return "inconclusive"


def parse_family(spec) -> tuple[str, float | int | None]:
    """``M_alpha:0.3``, ``M_upper:0.6``, ``M_hat_1``, ``syndetic:4``, ``thick:10``."""
    if isinstance(spec, (tuple, list)):
        return spec[0], spec[1] if len(spec) > 1 else None
    name, _, arg = str(spec).partition(":")
    aliases = {"M_upper": "M_upper_alpha", "M_lower": "M_alpha", "M_hat1": "M_hat_1"}
    name = aliases.get(name, name)
    if name not in FAMILIES:
        raise InvalidParameters("family", f"unknown family {spec!r}")
    if name == "M_hat_1":
        return name, None
    if not arg:
        raise InvalidParameters("family", f"{name} needs a parameter")
    val = float(arg) if name.startswith("M_") else int(arg)
    return name, val


def _exact(stats: DensityStats) -> bool:
    return stats.closed_form is not None and "density" in stats.closed_form


def family_membership(a: IndexSet, family, param=None, stats: DensityStats | None = None) -> FamilyVerdict:
    if param is None:
        family, param = parse_family(family)
    n = a.horizon
    margin = boundary_margin(n)
    if family in ("M_alpha", "M_upper_alpha"):
        if param is None or not 0.0 <= param < 1.0:
            raise InvalidParameters("alpha", "alpha must lie in [0, 1)")
        stats = stats or density(a)
        est = stats.lower if family == "M_alpha" else stats.upper
        if _exact(stats):
            # a closed-form density is exact: plain strict inequality, no margin
            return FamilyVerdict(family, param, "in" if est > param else "out", est, 0.0, n, True)
        return FamilyVerdict(family, param, compare(est, param, margin), est, margin, n, stats.converged)
    if family == "M_hat_1":
        stats = stats or density(a)
        verdict = "in" if stats.lower >= 1.0 - margin else "out"
        return FamilyVerdict(family, None, verdict, stats.lower, margin, n, stats.converged)
    if family == "syndetic":
        if param is None or param < 1:
            raise InvalidParameters("k", "syndeticity bound must be >= 1")
        g = max_gap(a)
        verdict = "in" if g is not None and g <= param else "out"
        return FamilyVerdict(family, param, verdict, float("inf") if g is None else float(g), 0.0, n, True)
    if family == "thick":
        if param is None or param < 1:
            raise InvalidParameters("L", "run length must be >= 1")
        run = longest_run(a)
        return FamilyVerdict(family, param, "in" if run >= param else "out", float(run), 0.0, n, True)
    raise InvalidParameters("family", f"unknown family {family!r}")
