"""Pseudo-orbit prefixes, their classification, and match profiles.

Every asymptotic statement is decided at the horizon: limsup/liminf of a
running statistic are read off the final decade ``n in [ceil(M/10), M]`` of
the statistic's index range, and verdicts say "at horizon", nothing more.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .density import (
    MIN_DENSITY_HORIZON,
    DensityStats,
    IndexSet,
    decade_start,
    density,
    ratio_extremes,
    sample_grid,
)
from .errors import HorizonTooSmall, InvalidParameters
from .systems import DynamicalSystem, Iterate, SystemCatalogEntry, make_system

TYPES = (
    "delta-pseudo",
    "delta-ergodic",
    "delta-average",
    "delta-asymptotic-average",
    "asymptotic-average",
)

DENSITY_TOL = 1e-2
BOUNDARY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PseudoOrbit:
    system: DynamicalSystem
    points: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=self.system.dtype)
        if len(pts) < 2:
            raise InvalidParameters("points", "a pseudo-orbit needs at least two points")
        if not self.system.validate(pts):
            raise InvalidParameters("points", f"points are not valid for {self.system.name}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def step_errors(self) -> np.ndarray:
        return step_error_sequence(self)

    def to_json(self) -> dict:
        sysj = self.system.entry.to_json() if self.system.entry is not None else self.system.name
        return {
            "system": sysj,
            "points": [self.system.to_json(p) for p in self.points],
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, data: dict, system: DynamicalSystem | None = None) -> "PseudoOrbit":
        if system is None:
            if not isinstance(data.get("system"), dict):
                raise InvalidParameters("system", "need a catalog entry to rebuild the system")
            system = make_system(SystemCatalogEntry.from_json(data["system"]))
        pts = system.points(data["points"])
        return cls(system, pts, dict(data.get("provenance", {})))


def true_orbit(system: DynamicalSystem, x, n: int, **provenance) -> PseudoOrbit:
    return PseudoOrbit(system, system.orbit(x, n), {"construction": "orbit", **provenance})


def step_error_sequence(xi: PseudoOrbit) -> np.ndarray:
    """e_i = d(f(x_i), x_(i+1)), length N - 1."""
    s = xi.system
    return s.dist(s.f(xi.points[:-1]), xi.points[1:])


# ---------------------------------------------------------------------------
# classification


@dataclass
class ClassificationReport:
    type_tested: str
    delta: float | None
    verdict: str  # pass | fail | inconclusive
    witness: dict | None
    statistic: float
    threshold: float
    horizon: int
    curve: list = field(default_factory=list)  # sampled (n, value)
    converged: bool | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_json(self):
        return {
            "type": self.type_tested,
            "delta": self.delta,
            "verdict": self.verdict,
            "witness": self.witness,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "horizon": self.horizon,
            "converged": self.converged,
            "details": self.details,
        }

    def csv_rows(self):
        yield ("n", "value")
        yield from self.curve


def _sampled(values: np.ndarray) -> list:
    """values[n] for n = 1..M sampled on the standard grid; values[0] unused."""
    m = len(values) - 1
    return [(int(n), float(values[n])) for n in sample_grid(m)]


def max_window_excess(e: np.ndarray, level: float, min_len: int):
    """max over windows [i, j) with j - i >= min_len of sum(e[i:j] - level).

    Returns (value, i, j). Linear time: prefix sums plus a running minimum.
    """
    p = np.concatenate([[0.0], np.cumsum(e - level)])
    m = len(e)
    if min_len > m:
        return -np.inf, 0, 0
    run_min = np.minimum.accumulate(p[: m - min_len + 1])
    vals = p[min_len:] - run_min
    j_rel = int(np.argmax(vals))
    j = j_rel + min_len
    i = int(np.argmin(p[: j - min_len + 1]))
    return float(vals[j_rel]), i, j


def classify(
    xi: PseudoOrbit | np.ndarray,
    type_: str,
    delta: float | None = None,
    tol: float = DENSITY_TOL,
    boundary: float = BOUNDARY_TOL,
) -> ClassificationReport:
    """Test a pseudo-orbit prefix against one of the five pseudo-orbit types.

    ``xi`` may also be a precomputed step-error array.
    """
    if type_ not in TYPES:
        raise InvalidParameters("type", f"unknown pseudo-orbit type {type_!r}")
    if type_ != "asymptotic-average" and not (delta is not None and delta > 0):
        raise InvalidParameters("delta", f"{type_} needs delta > 0")
    e = xi if isinstance(xi, np.ndarray) else step_error_sequence(xi)
    m = len(e)
    if type_ != "delta-pseudo" and m < MIN_DENSITY_HORIZON:
        raise HorizonTooSmall(
            f"{type_} needs at least {MIN_DENSITY_HORIZON} step errors, got {m}", horizon=m, type=type_
        )

    if type_ == "delta-pseudo":
        bad = np.flatnonzero(e >= delta)
        if len(bad):
            i = int(bad[0])
            return ClassificationReport(type_, delta, "fail", {"index": i, "error": float(e[i])},
                                        float(e.max()), delta, m)
        return ClassificationReport(type_, delta, "pass", None, float(e.max()) if m else 0.0, delta, m)

    start = decade_start(m)

    if type_ == "delta-ergodic":
        c = np.concatenate([[0], np.cumsum(e >= delta)])
        up, lo = ratio_extremes(c, start)
        ratio = np.zeros(m + 1)
        ratio[1:] = c[1:] / np.arange(1, m + 1)
        rep = ClassificationReport(type_, delta, "pass", None, float(up), tol, m, _sampled(ratio),
                                   converged=bool(up - lo <= tol),
                                   details={"mismatch_count": int(c[-1]), "lower": float(lo)})
        if up > tol:
            n = start + int(np.argmax(ratio[start:]))
            rep.verdict = "fail"
            rep.witness = {"n": n, "mismatch_ratio": float(ratio[n])}
        return rep

    if type_ == "delta-average":
        limit = start
        tried = []
        n0 = 1
        last = None
        any_undecided = False
        while n0 <= limit:
            strict, i, j = max_window_excess(e, delta - boundary, n0)
            tried.append(n0)
            if strict < 0:
                return ClassificationReport(
                    type_, delta, "pass", None, _window_mean(e, i, j), delta, m,
                    details={"window_length": n0, "tried": tried, "worst_window": [i, j]},
                )
            loose, i2, j2 = max_window_excess(e, delta, n0)
            if loose < 0:
                any_undecided = True
            last = (n0, i2, j2) if loose >= 0 else (n0, i, j)
            n0 *= 2
        n0, i, j = last
        if any_undecided:
            return ClassificationReport(type_, delta, "inconclusive", None, _window_mean(e, i, j), delta, m,
                                        details={"tried": tried})
        return ClassificationReport(
            type_, delta, "fail",
            {"window_length": n0, "window": [i, j], "mean": _window_mean(e, i, j)},
            _window_mean(e, i, j), delta, m, details={"tried": tried},
        )

    # running mean of step errors
    r = np.zeros(m + 1)
    r[1:] = np.cumsum(e) / np.arange(1, m + 1)
    dec = r[start:]
    up = float(dec.max())
    lo = float(dec.min())
    n_star = start + int(np.argmax(dec))
    converged = bool(up - lo <= tol)
    if type_ == "delta-asymptotic-average":
        if up < delta - boundary:
            verdict, witness = "pass", None
        elif up > delta + boundary:
            verdict, witness = "fail", {"n": n_star, "running_mean": float(r[n_star])}
        else:
            verdict, witness = "inconclusive", None
        return ClassificationReport(type_, delta, verdict, witness, up, delta, m, _sampled(r), converged)

    # asymptotic-average: delta ignored
    if up <= tol:
        verdict, witness = "pass", None
    else:
        verdict, witness = "fail", {"n": n_star, "running_mean": float(r[n_star])}
    return ClassificationReport(type_, None, verdict, witness, up, tol, m, _sampled(r), converged)


def _window_mean(e, i, j):
    return float(e[i:j].mean()) if j > i else 0.0


# ---------------------------------------------------------------------------
# match profiles


@dataclass
class MatchProfile:
    candidate: object
    eps: float
    match: IndexSet
    mismatch: IndexSet
    match_stats: DensityStats
    mismatch_stats: DensityStats
    average_error: float  # final-decade max of the running mean tracing error
    average_error_curve: list  # sampled (n, running mean)
    running_error: np.ndarray = field(repr=False, default=None)

    def to_json(self, system: DynamicalSystem):
        return {
            "candidate": system.to_json(self.candidate),
            "eps": self.eps,
            "match_density": self.match_stats.to_json(),
            "mismatch_density": self.mismatch_stats.to_json(),
            "average_error": self.average_error,
        }


def tracing_distances(xi: PseudoOrbit, candidates) -> np.ndarray:
    """d(f^i(z), x_i) for each candidate z, shape (C, N)."""
    s = xi.system
    n = len(xi)
    zs = [s.prepare_candidate(z, n) for z in candidates]
    if s.scalar or not s.width:
        zs = np.asarray(zs, dtype=s.dtype)
    return s.trace_distances(zs, xi.points)


def match_profile(xi: PseudoOrbit, z, eps: float) -> MatchProfile:
    if not eps > 0:
        raise InvalidParameters("eps", "must be positive")
    d = tracing_distances(xi, [z])[0]
    n = len(d)
    lam = IndexSet.from_mask(d < eps)
    lamc = IndexSet.from_mask(d >= eps)
    run = np.zeros(n + 1)
    run[1:] = np.cumsum(d) / np.arange(1, n + 1)
    start = decade_start(n)
    return MatchProfile(
        candidate=z,
        eps=eps,
        match=lam,
        mismatch=lamc,
        match_stats=density(lam),
        mismatch_stats=density(lamc),
        average_error=float(run[start:].max()),
        average_error_curve=_sampled(run),
        running_error=run,
    )


@dataclass
class CandidateStats:
    """Per-candidate summary statistics, arrays of shape (C,).

    ``avg`` is the final-decade max of the running mean tracing error (the
    limsup estimate); ``upper``/``lower`` are the final-decade extremes of the
    match-set ratio. The ``*_half`` arrays repeat the estimates at horizon N//2;
    a refutation is only reported when it already held there.
    """

    avg: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    avg_half: np.ndarray
    upper_half: np.ndarray
    lower_half: np.ndarray
    horizon: int

    @classmethod
    def concat(cls, parts):
        keys = [k for k in cls.__dataclass_fields__ if k != "horizon"]
        return cls(**{k: np.concatenate([getattr(p, k) for p in parts]) for k in keys},
                   horizon=parts[0].horizon)


def _extremes(run, cnt, n):
    # column k holds the statistic at prefix length k + 1
    start = decade_start(n)
    rs, cs = run[:, start - 1 : n], cnt[:, start - 1 : n]
    return rs.max(axis=1), cs.max(axis=1), cs.min(axis=1)


def _stats_from_distances(d: np.ndarray, eps: float) -> CandidateStats:
    n = d.shape[1]
    idx = np.arange(1, n + 1)
    run = np.cumsum(d, axis=1) / idx
    cnt = np.cumsum(d < eps, axis=1) / idx
    avg, up, lo = _extremes(run, cnt, n)
    avg2, up2, lo2 = _extremes(run, cnt, n // 2)
    return CandidateStats(avg, up, lo, avg2, up2, lo2, n)


CHUNK_CELLS = 1 << 23  # candidates x horizon distances held at once


def candidate_statistics(xi: PseudoOrbit, candidates, eps: float, chunk: int | None = None,
                         workers: int = 1) -> CandidateStats:
    """Evaluate many candidates in chunks; order of results follows ``candidates``."""
    if len(xi) < MIN_DENSITY_HORIZON:
        raise HorizonTooSmall(f"tracing statistics need horizon >= {MIN_DENSITY_HORIZON}", horizon=len(xi))
    cands = list(candidates)
    if chunk is None:
        chunk = int(np.clip(CHUNK_CELLS // len(xi), 16, 1024))
    chunks = [cands[i : i + chunk] for i in range(0, len(cands), chunk)]

    def run(part):
        return _stats_from_distances(tracing_distances(xi, part), eps)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(p) for p in chunks]
    return CandidateStats.concat(parts)


# ---------------------------------------------------------------------------
# iterates


def _base_of(system: DynamicalSystem, k: int) -> DynamicalSystem:
    if k == 1 and not isinstance(system, Iterate):
        return system
    if not isinstance(system, Iterate) or system.k != k:
        raise InvalidParameters("system", f"expected a pseudo-orbit of an iterate f^{k}")
    return system.base


def lift_to_iterate(xi_k: PseudoOrbit, k: int) -> PseudoOrbit:
    """x_(ik+j) = f^j(e_i) for a pseudo-orbit {e_i} of f^k; length k * N."""
    if k < 1:
        raise InvalidParameters("k", "must be >= 1")
    base = _base_of(xi_k.system, k)
    cur = xi_k.points
    layers = []
    for j in range(k):
        if j:
            cur = base.f(cur)
        layers.append(base.normalize(cur))
    pts = np.stack(layers, axis=1).reshape((len(xi_k) * k,) + layers[0].shape[1:])
    prov = {"construction": "lift", "k": k, "source": xi_k.provenance}
    return PseudoOrbit(base, pts, prov)


def project_to_iterate(xi: PseudoOrbit, k: int) -> PseudoOrbit:
    """z_i = x_(ik), a pseudo-orbit of f^k."""
    if k < 1:
        raise InvalidParameters("k", "must be >= 1")
    if k == 1:
        return PseudoOrbit(xi.system, xi.points, {"construction": "project", "k": 1, "source": xi.provenance})
    it = Iterate(xi.system, k)
    pts = xi.points[::k]
    base = xi.system
    if not base.scalar and pts.shape[1] < it.width and len(xi) >= k * len(pts):
        # f^k needs k - 1 extra look-ahead symbols; read them off the following
        # points (exact whenever the stretch [ik, ik + k) is a true orbit piece)
        h = pts.shape[1] - 1
        tail = xi.points[: k * len(pts), h].reshape(len(pts), k)[:, 1:]
        pts = np.concatenate([pts, tail], axis=1)
    pts = it.normalize(pts)
    return PseudoOrbit(it, pts, {"construction": "project", "k": k, "source": xi.provenance})


def lifted_mismatch_indices(mismatch_k: np.ndarray, k: int) -> np.ndarray:
    """Image of the f^k mismatch indices under the lift: i -> k*i + (k - 1)."""
    return k * np.asarray(mismatch_k, dtype=np.int64) + (k - 1)
