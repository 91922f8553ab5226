"""Compact metric systems (X, d, f) on which every experiment runs.

Points are numpy encodings. Scalar systems (finite maps, circles, the tent
map) encode a point as a single number and a batch as a 1-D array. The full
shift encodes a point as a word (1-D ``uint8`` array) and a batch as a 2-D
array whose rows share a width. Products stack scalar factors column-wise.

All systems are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .errors import HorizonExhausted, InvalidParameters, NoPreimage

KINDS = ("finite-map", "circle-rotation", "full-shift", "tent-map", "product", "iterate")

# Denominator multiplier for rational rotations: points live on the lattice
# (1/(q * 2**bits)) Z / Z, which is invariant under x -> x + p/q.
DEFAULT_PRECISION_BITS = 20

# Refuse to enumerate nets larger than this.
MAX_NET_SIZE = 1 << 20


@dataclass(frozen=True)
class SystemCatalogEntry:
    kind: str
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": _jsonable(self.params)}

    @classmethod
    def from_json(cls, data: dict) -> "SystemCatalogEntry":
        if not isinstance(data, dict) or "kind" not in data:
            raise InvalidParameters("kind", "catalog entry needs a 'kind' field")
        return cls(kind=data["kind"], params=dict(data.get("params", {})))


def _jsonable(obj):
    if isinstance(obj, SystemCatalogEntry):
        return obj.to_json()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    return obj


class DynamicalSystem:
    """Base class. Subclasses implement the batch map ``f`` and metric ``dist``."""

    kind: str = ""
    name: str = ""
    diameter: float = 1.0
    is_finite: bool = False
    is_exact: bool = False
    scalar: bool = True
    width: int | None = None
    dtype: Any = np.float64
    entry: SystemCatalogEntry | None = None

    # -- core -----------------------------------------------------------
    def f(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dist(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def step(self, x):
        """Map a single point."""
        return self.f(np.asarray([x], dtype=self.dtype))[0]

    def metric(self, x, y) -> float:
        return float(self.dist(np.asarray([x], dtype=self.dtype), np.asarray([y], dtype=self.dtype))[0])

    # -- encoding -------------------------------------------------------
    def point(self, value):
        raise NotImplementedError

    def to_json(self, pt):
        raise NotImplementedError

    def points(self, values) -> np.ndarray:
        return np.asarray([self.point(v) for v in values], dtype=self.dtype)

    def validate(self, pts: np.ndarray) -> bool:
        return True

    def normalize(self, pts: np.ndarray) -> np.ndarray:
        return pts

    def extend(self, x, length: int):
        return x

    def order_key(self, pt):
        return float(pt)

    def prepare_candidate(self, z, n: int):
        """A point whose first ``n`` iterates can be measured."""
        return z

    # -- orbits -----------------------------------------------------------
    def orbit(self, x, n: int) -> np.ndarray:
        """Return ``[x, f(x), ..., f^(n-1)(x)]``."""
        if n < 1:
            raise InvalidParameters("n", "orbit length must be >= 1")
        out = np.empty(n, dtype=self.dtype)
        cur = np.asarray([x], dtype=self.dtype)
        out[0] = cur[0]
        for i in range(1, n):
            cur = self.f(cur)
            out[i] = cur[0]
        return out

    def orbit_stride(self, x, n: int, k: int) -> np.ndarray:
        return self.orbit(x, k * (n - 1) + 1)[::k]

    def trace_distances(self, zs: np.ndarray, xs: np.ndarray) -> np.ndarray:
        """Distances ``d(f^i(z), x_i)`` for each candidate row, shape (C, n)."""
        n = len(xs)
        cur = np.asarray(zs, dtype=self.dtype)
        out = np.empty((len(cur), n))
        for i in range(n):
            if i:
                cur = self.f(cur)
            out[:, i] = self.dist(cur, np.broadcast_to(xs[i], cur.shape))
        return out

    # -- sampling ---------------------------------------------------------
    def net(self, eps: float) -> np.ndarray:
        raise NotImplementedError

    def net_radius(self, eps: float) -> float:
        """Covering radius actually achieved by ``net(eps)`` (0 when the net is exact)."""
        return 0.0 if self.is_finite else float(eps)

    def net_resolves(self, eps: float, threshold: float, k: int = 1) -> bool:
        """Whether ``d(f^k(p), q) < threshold`` is determined by the net points alone."""
        return True

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def sample_near(self, rng: np.random.Generator, x, delta: float, size: int) -> np.ndarray:
        raise NotImplementedError

    def preimage(self, x, selector=None):
        raise NoPreimage(f"{self.name}: no preimage selector")

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


# ---------------------------------------------------------------------------
# finite maps


class FiniteMap(DynamicalSystem):
    kind = "finite-map"
    is_finite = True
    is_exact = True
    dtype = np.int64

    def __init__(self, table, labels=None, name=None):
        table = list(table)
        n = len(table)
        if n < 1:
            raise InvalidParameters("table", "empty state set")
        for i, t in enumerate(table):
            if not isinstance(t, (int, np.integer)) or not 0 <= t < n:
                raise InvalidParameters("table", f"entry {i} -> {t!r} is not a state in [0, {n})")
        if labels is not None:
            labels = [str(s) for s in labels]
            if len(labels) != n or len(set(labels)) != n:
                raise InvalidParameters("labels", "need one distinct label per state")
        self.table = np.asarray(table, dtype=np.int64)
        self.table.setflags(write=False)
        self.labels = labels
        self.n_states = n
        self.diameter = 1.0 if n > 1 else 0.0
        self.name = name or f"finite-map[{','.join(map(str, table))}]"

    def f(self, pts):
        return self.table[np.asarray(pts, dtype=np.int64)]

    def dist(self, a, b):
        return (np.asarray(a) != np.asarray(b)).astype(np.float64)

    def point(self, value):
        if self.labels is not None and isinstance(value, str) and value in self.labels:
            return self.labels.index(value)
        try:
            v = int(value)
        except (TypeError, ValueError):
            raise InvalidParameters("point", f"unknown state {value!r}") from None
        if not 0 <= v < self.n_states:
            raise InvalidParameters("point", f"state {v} outside [0, {self.n_states})")
        return v

    def to_json(self, pt):
        pt = int(pt)
        return self.labels[pt] if self.labels else pt

    def validate(self, pts):
        pts = np.asarray(pts)
        return bool(np.all((pts >= 0) & (pts < self.n_states)))

    def order_key(self, pt):
        return int(pt)

    def orbit(self, x, n):
        if n < 1:
            raise InvalidParameters("n", "orbit length must be >= 1")
        out = np.empty(n, dtype=np.int64)
        t = self.table.tolist()
        s = int(x)
        for i in range(n):
            out[i] = s
            s = t[s]
        return out

    def net(self, eps):
        return np.arange(self.n_states, dtype=np.int64)

    def sample(self, rng, size):
        return rng.integers(0, self.n_states, size=size)

    def sample_near(self, rng, x, delta, size):
        if delta > 1.0:
            return self.sample(rng, size)
        return np.full(size, int(x), dtype=np.int64)

    def preimage(self, x, selector=None):
        pre = np.flatnonzero(self.table == int(x))
        if len(pre) == 0:
            raise NoPreimage(f"state {int(x)} has no preimage", point=int(x))
        if selector is None or selector == "min":
            return int(pre[0])
        if selector == "max":
            return int(pre[-1])
        raise InvalidParameters("selector", f"unknown selector {selector!r}")


# ---------------------------------------------------------------------------
# circle rotations


def parse_angle(angle) -> Fraction | float:
    """``"p/q"``, ``Fraction`` and ints are exact; floats stay floats."""
    if isinstance(angle, Fraction):
        return angle
    if isinstance(angle, (int, np.integer)):
        return Fraction(int(angle))
    if isinstance(angle, str):
        s = angle.strip()
        if s in ("golden", "golden-ratio"):
            return (math.sqrt(5.0) - 1.0) / 2.0
        try:
            if "/" in s or s.lstrip("-").isdigit():
                return Fraction(s)
            return float(s)
        except (ValueError, ZeroDivisionError):
            raise InvalidParameters("angle", f"cannot parse {angle!r}") from None
    if isinstance(angle, float):
        return angle
    raise InvalidParameters("angle", f"cannot parse {angle!r}")


class RationalRotation(DynamicalSystem):
    """x -> x + p/q on the circle of circumference 1, exact lattice arithmetic.

    A point is an integer ``k`` standing for ``k / denom``.
    """

    kind = "circle-rotation"
    is_exact = True
    dtype = np.int64
    diameter = 0.5

    def __init__(self, angle: Fraction, precision_bits: int = DEFAULT_PRECISION_BITS):
        angle = Fraction(angle) % 1
        if precision_bits < 0 or precision_bits > 40:
            raise InvalidParameters("precision_bits", "must be in [0, 40]")
        self.angle = angle
        self.q = angle.denominator
        self.denom = self.q << precision_bits
        self.shift = angle.numerator << precision_bits
        self.name = f"rotation:{angle.numerator}/{angle.denominator}"

    def f(self, pts):
        return (np.asarray(pts, dtype=np.int64) + self.shift) % self.denom

    def dist(self, a, b):
        diff = np.abs(np.asarray(a, dtype=np.int64) - np.asarray(b, dtype=np.int64)) % self.denom
        return np.minimum(diff, self.denom - diff) / self.denom

    def orbit(self, x, n):
        if n < 1:
            raise InvalidParameters("n", "orbit length must be >= 1")
        return (int(x) + self.shift * np.arange(n, dtype=np.int64)) % self.denom

    def trace_distances(self, zs, xs):
        steps = (self.shift * np.arange(len(xs), dtype=np.int64)) % self.denom
        pos = (np.asarray(zs, dtype=np.int64)[:, None] + steps) % self.denom
        return self.dist(pos, np.asarray(xs, dtype=np.int64)[None, :])

    def point(self, value):
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            value = Fraction(int(value))
        elif isinstance(value, str):
            value = Fraction(value.strip())
        elif isinstance(value, float):
            value = Fraction(value)
        elif not isinstance(value, Fraction):
            raise InvalidParameters("point", f"cannot parse circle point {value!r}")
        return int(round(value * self.denom)) % self.denom

    def to_json(self, pt):
        fr = Fraction(int(pt), self.denom)
        return f"{fr.numerator}/{fr.denominator}"

    def as_float(self, pts):
        return np.asarray(pts, dtype=np.float64) / self.denom

    def validate(self, pts):
        pts = np.asarray(pts)
        return bool(np.all((pts >= 0) & (pts < self.denom)))

    def order_key(self, pt):
        return int(pt)

    def net(self, eps):
        n = _grid_size(eps)
        return np.round(np.arange(n) * (self.denom / n)).astype(np.int64) % self.denom

    def sample(self, rng, size):
        return rng.integers(0, self.denom, size=size)

    def sample_near(self, rng, x, delta, size):
        r = int(math.floor(delta * self.denom))
        if r <= 0:
            return np.full(size, int(x), dtype=np.int64)
        off = rng.integers(-r + 1, r, size=size)
        return (int(x) + off) % self.denom

    def preimage(self, x, selector=None):
        return (int(x) - self.shift) % self.denom


class FloatRotation(DynamicalSystem):
    """x -> x + angle mod 1 in double precision."""

    kind = "circle-rotation"
    diameter = 0.5

    def __init__(self, angle: float):
        self.angle = float(angle) % 1.0
        self.name = f"rotation:{self.angle!r}"

    def f(self, pts):
        return (np.asarray(pts, dtype=np.float64) + self.angle) % 1.0

    def dist(self, a, b):
        diff = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)) % 1.0
        return np.minimum(diff, 1.0 - diff)

    def orbit(self, x, n):
        if n < 1:
            raise InvalidParameters("n", "orbit length must be >= 1")
        out = [0.0] * n
        a = self.angle
        s = float(x)
        for i in range(n):
            out[i] = s
            s = (s + a) % 1.0
        return np.asarray(out)

    def point(self, value):
        if isinstance(value, str):
            value = float(Fraction(value.strip())) if "/" in value else float(value)
        return float(value) % 1.0

    def to_json(self, pt):
        return float(pt)

    def as_float(self, pts):
        return np.asarray(pts, dtype=np.float64)

    def validate(self, pts):
        pts = np.asarray(pts)
        return bool(np.all((pts >= 0.0) & (pts < 1.0)))

    def net(self, eps):
        n = _grid_size(eps)
        return np.arange(n) / n

    def sample(self, rng, size):
        return rng.random(size)

    def sample_near(self, rng, x, delta, size):
        r = min(delta, 0.5)
        return (float(x) + rng.uniform(-r, r, size=size)) % 1.0

    def preimage(self, x, selector=None):
        return (float(x) - self.angle) % 1.0


def _grid_size(eps: float) -> int:
    if not eps > 0:
        raise InvalidParameters("eps", "net resolution must be positive")
    n = math.ceil(1.0 / eps) + 1
    if n > MAX_NET_SIZE:
        raise InvalidParameters("eps", f"net of {n} points is too large")
    return n


# ---------------------------------------------------------------------------
# tent map


class TentMap(DynamicalSystem):
    """x -> 2x for x < 1/2, 2 - 2x otherwise, on [0, 1] in double precision.

    Binary floating point collapses every orbit onto 0 within about 55 steps;
    use it for short-horizon diagnostics only.
    """

    kind = "tent-map"
    name = "tent"
    diameter = 1.0

    def f(self, pts):
        p = np.asarray(pts, dtype=np.float64)
        return np.where(p < 0.5, 2.0 * p, 2.0 - 2.0 * p)

    def dist(self, a, b):
        return np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))

    def point(self, value):
        if isinstance(value, str):
            value = float(Fraction(value.strip())) if "/" in value else float(value)
        v = float(value)
        if not 0.0 <= v <= 1.0:
            raise InvalidParameters("point", f"{v} outside [0, 1]")
        return v

    def to_json(self, pt):
        return float(pt)

    def validate(self, pts):
        pts = np.asarray(pts)
        return bool(np.all((pts >= 0.0) & (pts <= 1.0)))

    def net(self, eps):
        n = _grid_size(eps)
        return np.linspace(0.0, 1.0, n)

    def sample(self, rng, size):
        return rng.random(size)

    def sample_near(self, rng, x, delta, size):
        lo, hi = max(0.0, float(x) - delta), min(1.0, float(x) + delta)
        return np.clip(rng.uniform(lo, hi, size=size), 0.0, 1.0)

    def preimage(self, x, selector=None):
        x = float(x)
        if selector in (None, "left"):
            return x / 2.0
        if selector == "right":
            return 1.0 - x / 2.0
        raise InvalidParameters("selector", f"unknown selector {selector!r}")


# ---------------------------------------------------------------------------
# full shift


def _min_period(word: np.ndarray) -> int:
    """Smallest p with word[i] == word[i + p] for all valid i (prefix function)."""
    w = word.tolist()
    n = len(w)
    pi = [0] * n
    k = 0
    for i in range(1, n):
        while k and w[i] != w[k]:
            k = pi[k - 1]
        if w[i] == w[k]:
            k += 1
        pi[i] = k
    return n - pi[-1] if n else 1


class FullShift(DynamicalSystem):
    """One-sided full shift on ``alphabet`` symbols.

    The metric ``d(x, y) = 2**-min{i : x_i != y_i}`` only reads the first
    ``horizon`` symbols (equal prefixes give 0). A stored state carries one
    look-ahead symbol (``width = horizon + 1``) so that ``f`` of a state can
    still be measured. Words too short for an operation raise
    ``HorizonExhausted``; no symbol is ever invented, except by the explicit
    periodic extension rule of :meth:`extend`.
    """

    kind = "full-shift"
    is_exact = True
    scalar = False
    dtype = np.uint8
    diameter = 1.0

    def __init__(self, alphabet: int = 2, horizon: int = 16):
        if alphabet < 2 or alphabet > 255:
            raise InvalidParameters("alphabet", "alphabet size must be in [2, 255]")
        if horizon < 1:
            raise InvalidParameters("horizon", "word horizon must be >= 1")
        self.alphabet = int(alphabet)
        self.horizon = int(horizon)
        self.width = self.horizon + 1
        self.name = f"shift:{self.alphabet}:{self.horizon}"

    def f(self, pts):
        pts = np.asarray(pts, dtype=np.uint8)
        if pts.shape[-1] - 1 < self.horizon:
            raise HorizonExhausted(
                f"word of length {pts.shape[-1]} cannot be shifted at horizon {self.horizon}"
            )
        return pts[..., 1:]

    def dist(self, a, b):
        h = self.horizon
        a = np.asarray(a, dtype=np.uint8)
        b = np.asarray(b, dtype=np.uint8)
        if a.shape[-1] < h or b.shape[-1] < h:
            raise HorizonExhausted("metric needs words of at least `horizon` symbols")
        mism = a[..., :h] != b[..., :h]
        anym = mism.any(axis=-1)
        idx = mism.argmax(axis=-1)
        return np.where(anym, np.ldexp(1.0, -idx), 0.0)

    def step(self, x):
        return self.f(np.asarray(x, dtype=np.uint8))

    def metric(self, x, y):
        return float(self.dist(np.asarray(x)[None, :], np.asarray(y)[None, :])[0])

    def point(self, value):
        if isinstance(value, str):
            s = value.strip()
            if s.startswith("periodic:"):
                # periodic:<word>:<length>
                _, word, length = s.split(":")
                return self.extend(self.point(word), int(length))
            if self.alphabet > 10:
                raise InvalidParameters("point", "use a list of symbols for alphabets above 10")
            try:
                arr = np.asarray([int(c) for c in s], dtype=np.int64)
            except ValueError:
                raise InvalidParameters("point", f"cannot parse word {value!r}") from None
        else:
            arr = np.asarray(value, dtype=np.int64).ravel()
        if arr.size == 0 or arr.min() < 0 or arr.max() >= self.alphabet:
            raise InvalidParameters("point", f"symbols must lie in [0, {self.alphabet})")
        return arr.astype(np.uint8)

    def points(self, values):
        words = [self.point(v) for v in values]
        w = min(len(x) for x in words)
        return np.stack([x[:w] for x in words])

    def to_json(self, pt):
        pt = np.asarray(pt)
        if self.alphabet <= 10:
            return "".join(str(int(c)) for c in pt)
        return [int(c) for c in pt]

    def validate(self, pts):
        pts = np.asarray(pts)
        return pts.shape[-1] >= self.horizon and bool(np.all(pts < self.alphabet))

    def order_key(self, pt):
        return tuple(int(c) for c in np.asarray(pt)[: self.width])

    def extend(self, x, length: int):
        """Periodic extension of ``x`` by its minimal period (or truncation)."""
        x = np.asarray(x, dtype=np.uint8)
        if len(x) >= length:
            return x[:length]
        p = _min_period(x)
        return np.resize(x[:p], length).astype(np.uint8)

    def normalize(self, pts, width=None):
        width = width or self.width
        pts = np.asarray(pts, dtype=np.uint8)
        if pts.ndim == 1:
            return self.extend(pts, width)
        if pts.shape[1] >= width:
            return pts[:, :width]
        return np.stack([self.extend(r, width) for r in pts])

    def orbit(self, x, n, width=None):
        if n < 1:
            raise InvalidParameters("n", "orbit length must be >= 1")
        width = width or self.width
        x = np.asarray(x, dtype=np.uint8)
        if len(x) < width + n - 1:
            raise HorizonExhausted(
                f"word of length {len(x)} supports {max(len(x) - width + 1, 0)} states of "
                f"width {width}, {n} requested",
                needed=width + n - 1,
            )
        return np.lib.stride_tricks.sliding_window_view(x[: width + n - 1], width).copy()

    def orbit_stride(self, x, n, k, width=None):
        return self.orbit(x, k * (n - 1) + 1, width=width)[::k]

    def prepare_candidate(self, z, n):
        return self.extend(z, self.horizon + n - 1)

    def trace_distances(self, zs, xs):
        n = len(xs)
        h = self.horizon
        out = np.empty((len(zs), n))
        for c, z in enumerate(zs):
            win = self.orbit(z, n, width=h)
            out[c] = self.dist(win, xs)
        return out

    def net(self, eps):
        if not eps > 0:
            raise InvalidParameters("eps", "net resolution must be positive")
        length = max(0, math.ceil(math.log2(1.0 / eps))) if eps < 1 else 0
        length = min(length, self.horizon)
        count = self.alphabet**length
        if count > MAX_NET_SIZE:
            raise InvalidParameters("eps", f"net of {count} words is too large")
        if length == 0:
            return np.zeros((1, self.width), dtype=np.uint8)
        digits = np.indices((self.alphabet,) * length).reshape(length, -1).T.astype(np.uint8)
        return np.stack([self.extend(w, self.width) for w in digits])

    def net_radius(self, eps):
        length = max(0, math.ceil(math.log2(1.0 / eps))) if eps < 1 else 0
        # words as long as the metric horizon cover every point at distance 0
        return 0.0 if length >= self.horizon else 2.0**-length

    def net_resolves(self, eps, threshold, k=1):
        # f^k of a net word keeps L - k genuine symbols; d < threshold must not
        # depend on the periodic fill beyond them
        length = max(0, math.ceil(math.log2(1.0 / eps))) if eps < 1 else 0
        length = min(length, self.horizon)
        return threshold > 2.0 ** -(length - k)

    def sample(self, rng, size, width=None):
        width = width or self.width
        return rng.integers(0, self.alphabet, size=(size, width)).astype(np.uint8)

    def sample_near(self, rng, x, delta, size):
        x = np.asarray(x, dtype=np.uint8)
        m = 0 if delta > 1 else math.floor(math.log2(1.0 / delta)) + 1
        m = min(m, len(x))
        out = rng.integers(0, self.alphabet, size=(size, len(x))).astype(np.uint8)
        out[:, :m] = x[:m]
        return out

    def preimage(self, x, selector=None):
        """Prepend a symbol. ``selector`` is the symbol (default 0)."""
        sym = 0 if selector is None else int(selector)
        if not 0 <= sym < self.alphabet:
            raise InvalidParameters("selector", f"symbol {sym} outside the alphabet")
        x = np.asarray(x, dtype=np.uint8)
        return np.concatenate([[sym], x]).astype(np.uint8)

    def random_word(self, rng, length):
        return rng.integers(0, self.alphabet, size=length).astype(np.uint8)


# ---------------------------------------------------------------------------
# derived systems


class Product(DynamicalSystem):
    """Product of scalar systems with the max metric."""

    kind = "product"
    scalar = False

    def __init__(self, factors):
        factors = list(factors)
        if len(factors) < 2:
            raise InvalidParameters("factors", "a product needs at least two factors")
        for i, fac in enumerate(factors):
            if not fac.scalar:
                raise InvalidParameters("factors", f"factor {i} ({fac.name}) is not scalar-encoded")
        self.factors = factors
        self.width = len(factors)
        self.diameter = max(fac.diameter for fac in factors)
        self.is_finite = all(fac.is_finite for fac in factors)
        self.is_exact = all(fac.is_exact for fac in factors)
        self.name = "x".join(fac.name for fac in factors)
        if all(fac.entry is not None for fac in factors):
            self.entry = SystemCatalogEntry("product", {"factors": [fac.entry.to_json() for fac in factors]})

    def _cols(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        return [pts[..., i].astype(fac.dtype) for i, fac in enumerate(self.factors)]

    def f(self, pts):
        cols = [fac.f(c) for fac, c in zip(self.factors, self._cols(pts))]
        return np.stack(cols, axis=-1).astype(np.float64)

    def dist(self, a, b):
        da = self._cols(a)
        db = self._cols(b)
        return np.max(np.stack([fac.dist(x, y) for fac, x, y in zip(self.factors, da, db)]), axis=0)

    def step(self, x):
        return self.f(np.asarray(x, dtype=np.float64)[None, :])[0]

    def metric(self, x, y):
        return float(self.dist(np.asarray(x)[None, :], np.asarray(y)[None, :])[0])

    def orbit(self, x, n):
        cols = [fac.orbit(c, n) for fac, c in zip(self.factors, self._cols(np.asarray(x)))]
        return np.stack(cols, axis=-1).astype(np.float64)

    def point(self, value):
        if len(value) != len(self.factors):
            raise InvalidParameters("point", f"need {len(self.factors)} coordinates")
        return np.asarray([fac.point(v) for fac, v in zip(self.factors, value)], dtype=np.float64)

    def points(self, values):
        return np.stack([self.point(v) for v in values])

    def to_json(self, pt):
        return [fac.to_json(c) for fac, c in zip(self.factors, self._cols(np.asarray(pt)))]

    def validate(self, pts):
        return all(fac.validate(c) for fac, c in zip(self.factors, self._cols(pts)))

    def order_key(self, pt):
        return tuple(float(c) for c in np.asarray(pt))

    def net(self, eps):
        nets = [fac.net(eps).astype(np.float64) for fac in self.factors]
        grids = np.meshgrid(*nets, indexing="ij")
        out = np.stack([g.ravel() for g in grids], axis=-1)
        if len(out) > MAX_NET_SIZE:
            raise InvalidParameters("eps", "product net too large")
        return out

    def sample(self, rng, size):
        return np.stack([fac.sample(rng, size).astype(np.float64) for fac in self.factors], axis=-1)

    def sample_near(self, rng, x, delta, size):
        cols = self._cols(np.asarray(x))
        return np.stack(
            [fac.sample_near(rng, c, delta, size).astype(np.float64) for fac, c in zip(self.factors, cols)],
            axis=-1,
        )

    def preimage(self, x, selector=None):
        cols = self._cols(np.asarray(x))
        sel = selector if isinstance(selector, (list, tuple)) else [selector] * len(self.factors)
        return np.asarray([fac.preimage(c, s) for fac, c, s in zip(self.factors, cols, sel)], dtype=np.float64)


class Iterate(DynamicalSystem):
    """(X, f^k): same space, metric and diameter as the base system."""

    kind = "iterate"

    def __init__(self, base: DynamicalSystem, k: int):
        if k < 1:
            raise InvalidParameters("k", "iterate exponent must be >= 1")
        self.base = base
        self.k = int(k)
        self.diameter = base.diameter
        self.is_finite = base.is_finite
        self.is_exact = base.is_exact
        self.scalar = base.scalar
        self.dtype = base.dtype
        self.width = None if base.width is None else (
            base.width + self.k - 1 if isinstance(base, FullShift) else base.width
        )
        self.name = f"{base.name}^{self.k}"
        if base.entry is not None:
            self.entry = SystemCatalogEntry("iterate", {"base": base.entry.to_json(), "k": self.k})

    def f(self, pts):
        for _ in range(self.k):
            pts = self.base.f(pts)
        return pts

    def dist(self, a, b):
        return self.base.dist(a, b)

    def step(self, x):
        for _ in range(self.k):
            x = self.base.step(x)
        return x

    def metric(self, x, y):
        return self.base.metric(x, y)

    def orbit(self, x, n):
        if isinstance(self.base, FullShift):
            return self.base.orbit_stride(x, n, self.k, width=self.width)
        return self.base.orbit_stride(x, n, self.k)

    def trace_distances(self, zs, xs):
        if isinstance(self.base, FullShift):
            n = len(xs)
            out = np.empty((len(zs), n))
            for c, z in enumerate(zs):
                win = self.base.orbit_stride(z, n, self.k, width=self.base.horizon)
                out[c] = self.base.dist(win, xs)
            return out
        return super().trace_distances(zs, xs)

    def prepare_candidate(self, z, n):
        if isinstance(self.base, FullShift):
            return self.base.extend(z, self.base.horizon + self.k * (n - 1))
        return z

    def point(self, value):
        return self.base.point(value)

    def points(self, values):
        return self.base.points(values)

    def to_json(self, pt):
        return self.base.to_json(pt)

    def validate(self, pts):
        return self.base.validate(pts)

    def order_key(self, pt):
        return self.base.order_key(pt)

    def normalize(self, pts):
        if isinstance(self.base, FullShift):
            return self.base.normalize(pts, self.width)
        return self.base.normalize(pts)

    def extend(self, x, length):
        return self.base.extend(x, length)

    def net(self, eps):
        return self.normalize(self.base.net(eps))

    def net_radius(self, eps):
        return self.base.net_radius(eps)

    def net_resolves(self, eps, threshold, k=1):
        return self.base.net_resolves(eps, threshold, k * self.k)

    def sample(self, rng, size):
        if isinstance(self.base, FullShift):
            return self.base.sample(rng, size, width=self.width)
        return self.base.sample(rng, size)

    def sample_near(self, rng, x, delta, size):
        return self.base.sample_near(rng, x, delta, size)

    def preimage(self, x, selector=None):
        for _ in range(self.k):
            x = self.base.preimage(x, selector)
        return x


# ---------------------------------------------------------------------------
# catalog


def make_system(entry: SystemCatalogEntry | dict) -> DynamicalSystem:
    """Build a system from a catalog entry ``{"kind": ..., "params": {...}}``."""
    if isinstance(entry, dict):
        entry = SystemCatalogEntry.from_json(entry)
    system = _build(entry)
    system.entry = entry
    return system


def _build(entry: SystemCatalogEntry) -> DynamicalSystem:
    kind, p = entry.kind, entry.params
    if kind == "finite-map":
        if "table" not in p:
            raise InvalidParameters("table", "finite-map needs a transition table")
        return FiniteMap(p["table"], labels=p.get("labels"), name=p.get("name"))
    if kind == "circle-rotation":
        if "angle" not in p:
            raise InvalidParameters("angle", "circle-rotation needs an angle")
        angle = parse_angle(p["angle"])
        if isinstance(angle, Fraction):
            return RationalRotation(angle, int(p.get("precision_bits", DEFAULT_PRECISION_BITS)))
        return FloatRotation(angle)
    if kind == "full-shift":
        return FullShift(int(p.get("alphabet", 2)), int(p.get("horizon", 16)))
    if kind == "tent-map":
        return TentMap()
    if kind == "product":
        facs = p.get("factors")
        if not facs:
            raise InvalidParameters("factors", "product needs a list of factor entries")
        return Product([make_system(e) for e in facs])
    if kind == "iterate":
        if "base" not in p:
            raise InvalidParameters("base", "iterate needs a base entry")
        return Iterate(make_system(p["base"]), int(p.get("k", 1)))
    raise InvalidParameters("kind", f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")


def two_point_identity() -> FiniteMap:
    """X = {a1, a2}, discrete metric, f = id."""
    return make_system(parse_system_spec("identity2"))


def parse_system_spec(spec: str) -> SystemCatalogEntry:
    """Shorthand used on the command line.

    ``rotation:1/3``, ``rotation:golden``, ``rotation:0.3``, ``shift:2:16``,
    ``identity2``, ``finite:0,0,1``, ``tent``, ``iterate:<k>:<spec>``.
    """
    s = spec.strip()
    if s.startswith("{"):
        import json

        return SystemCatalogEntry.from_json(json.loads(s))
    head, _, rest = s.partition(":")
    if head == "rotation":
        return SystemCatalogEntry("circle-rotation", {"angle": rest})
    if head == "shift":
        parts = rest.split(":") if rest else []
        alphabet = int(parts[0]) if parts else 2
        horizon = int(parts[1]) if len(parts) > 1 else 16
        return SystemCatalogEntry("full-shift", {"alphabet": alphabet, "horizon": horizon})
    if head == "identity2":
        return SystemCatalogEntry("finite-map", {"table": [0, 1], "labels": ["a1", "a2"], "name": "two-point-identity"})
    if head == "finite":
        return SystemCatalogEntry("finite-map", {"table": [int(t) for t in rest.split(",")]})
    if head == "tent":
        return SystemCatalogEntry("tent-map", {})
    if head == "iterate":
        k, _, base = rest.partition(":")
        return SystemCatalogEntry("iterate", {"base": parse_system_spec(base).to_json(), "k": int(k)})
    raise InvalidParameters("system", f"unknown system shorthand {spec!r}")


def equicontinuity_modulus(
    system: DynamicalSystem,
    eps: float,
    horizon: int,
    samples: int = 1000,
    seed: int = 0,
    grid_steps: int = 8,
) -> float | None:
    """Largest grid value delta in {eps * 2**-j : j < grid_steps} that kept every
    sampled pair with d(x, y) < delta eps-close for ``horizon`` iterates.

    Returns None when no grid value survives. This is sampling evidence, not a
    proof in either direction.
    """
    if not eps > 0:
        raise InvalidParameters("eps", "must be positive")
    rng = np.random.default_rng(seed)
    is_shift = isinstance(system, FullShift) or isinstance(getattr(system, "base", None), FullShift)
    for j in range(grid_steps):
        delta = eps * 2.0**-j
        ok = True
        for _ in range(samples):
            if is_shift:
                shift = system if isinstance(system, FullShift) else system.base
                k = getattr(system, "k", 1)
                x = shift.random_word(rng, shift.horizon + k * (horizon + 1) + 1)
            else:
                x = system.sample(rng, 1)[0]
            y = system.sample_near(rng, x, delta, 1)[0]
            if system.metric(x, y) >= delta:
                continue
            ox = system.orbit(x, horizon + 1)
            oy = system.orbit(y, horizon + 1)
            d = system.dist(ox, oy)
            if np.any(d >= eps):
                ok = False
                break
        if ok:
            return delta
    return None
