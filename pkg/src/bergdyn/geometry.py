"""Spherical domains built by set algebra.

A domain is an expression tree over four primitives (open disc, open
half-plane, the whole sphere, a closed arc of the unit circle) combined
with complement, intersection and union.  Membership is evaluated
symbolically at the point at infinity and vectorised on finite points.

Conventions
-----------
* ``contains`` reports membership of the *open* set; primitive boundaries
  are excluded.
* ``Complement(X)`` is the complement of the closure of ``X`` so that
  complements of discs and arcs are open.
* ``Omega*`` is ``1/(C_inf \\ Omega)`` with ``1/0 = inf`` and ``1/inf = 0``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union as _U

import numpy as np

from .errors import ValidationError

#: relative slack used to exclude primitive boundaries under round-off
EDGE_TOL = 1e-12
TWO_PI = 2.0 * math.pi


class _Infinity:
    """The point at infinity of the Riemann sphere (singleton)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()

ExtendedPoint = _U[complex, _Infinity]


def is_inf(z) -> bool:
    return z is INF


def reciprocal(z: ExtendedPoint) -> ExtendedPoint:
    """``1/z`` on the sphere, exchanging 0 and infinity."""
    if z is INF:
        return 0j
    z = complex(z)
    if z == 0:
        return INF
    try:
        w = 1.0 / z
    except OverflowError:
        return INF
    # reciprocals of subnormal points overflow; they are infinity to us
    return w if cmath.isfinite(w) else INF


def _as_array(z) -> np.ndarray:
    return np.asarray(z, dtype=complex)


# ---------------------------------------------------------------------------
# expression tree


class Node:
    """Base class for set-algebra nodes."""

    def interior(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def closure(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # membership of infinity in the open set / in the closure
    inf_interior: bool = False
    inf_closure: bool = False
    # closure bounded in C; set contains a neighbourhood of infinity
    bounded: bool = True
    nbhd_inf: bool = False

    def expr(self) -> str:
        raise NotImplementedError


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_c(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return _fmt(z.real)
    return f"{_fmt(z.real)}{'+' if z.imag >= 0 else '-'}{_fmt(abs(z.imag))}i"


@dataclass(frozen=True)
class Disc(Node):
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0 or not math.isfinite(self.radius):
            raise ValidationError(f"disc radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", complex(self.center))

    def interior(self, z):
        return np.abs(z - self.center) < self.radius * (1.0 - EDGE_TOL)

    def closure(self, z):
        return np.abs(z - self.center) <= self.radius * (1.0 + EDGE_TOL)

    def expr(self):
        return f"disc({_fmt_c(self.center)}, {_fmt(self.radius)})"


@dataclass(frozen=True)
class HalfPlane(Node):
    """Open half-plane ``{z : Re(z * conj(normal)) < offset}``."""

    normal: complex
    offset: float

    inf_interior = False
    inf_closure = True
    bounded = False
    nbhd_inf = False

    def __post_init__(self):
        n = complex(self.normal)
        if n == 0:
            raise ValidationError("half-plane normal must be nonzero")
        object.__setattr__(self, "normal", n / abs(n))
        object.__setattr__(self, "offset", float(self.offset))

    def _proj(self, z):
        return (z * np.conj(self.normal)).real

    def interior(self, z):
        return self._proj(z) < self.offset - EDGE_TOL * (1.0 + abs(self.offset))

    def closure(self, z):
        return self._proj(z) <= self.offset + EDGE_TOL * (1.0 + abs(self.offset))

    def expr(self):
        return f"halfplane({_fmt_c(self.normal)}, {_fmt(self.offset)})"


@dataclass(frozen=True)
class FullSphere(Node):
    inf_interior = True
    inf_closure = True
    bounded = False
    nbhd_inf = True

    def interior(self, z):
        return np.ones(np.shape(z), dtype=bool)

    closure = interior

    def expr(self):
        return "sphere()"


@dataclass(frozen=True)
class ClosedArc(Node):
    """Closed arc ``{e^{it} : theta1 <= t <= theta2}`` of the unit circle."""

    theta1: float
    theta2: float

    def __post_init__(self):
        t1, t2 = float(self.theta1), float(self.theta2)
        if not (t1 < t2 <= t1 + TWO_PI * (1 + 1e-15)):
            raise ValidationError(f"arc needs theta1 < theta2 <= theta1 + 2pi, got ({t1}, {t2})")
        object.__setattr__(self, "theta1", t1)
        object.__setattr__(self, "theta2", t2)

    def interior(self, z):
        return np.zeros(np.shape(z), dtype=bool)

    def closure(self, z):
        on_circle = np.abs(np.abs(z) - 1.0) <= 1e-12
        t = np.mod(np.angle(z) - self.theta1, TWO_PI)
        span = self.theta2 - self.theta1
        in_range = (t <= span + 1e-12) | (t >= TWO_PI - 1e-12)
        return on_circle & in_range

    def expr(self):
        return f"arc({_fmt(self.theta1)}, {_fmt(self.theta2)})"


@dataclass(frozen=True)
class Complement(Node):
    inner: Node

    def interior(self, z):
        return ~self.inner.closure(z)

    def closure(self, z):
        return ~self.inner.interior(z)

    @property
    def inf_interior(self):
        return not self.inner.inf_closure

    @property
    def inf_closure(self):
        return not self.inner.inf_interior

    @property
    def bounded(self):
        return self.inner.nbhd_inf

    @property
    def nbhd_inf(self):
        return self.inner.bounded

    def expr(self):
        return f"complement({self.inner.expr()})"


@dataclass(frozen=True)
class Intersection(Node):
    parts: tuple

    def __post_init__(self):
        if len(self.parts) < 1:
            raise ValidationError("intersection needs at least one operand")
        object.__setattr__(self, "parts", tuple(self.parts))

    def interior(self, z):
        out = self.parts[0].interior(z)
        for p in self.parts[1:]:
            out = out & p.interior(z)
        return out

    def closure(self, z):
        out = self.parts[0].closure(z)
        for p in self.parts[1:]:
            out = out & p.closure(z)
        return out

    @property
    def inf_interior(self):
        return all(p.inf_interior for p in self.parts)

    @property
    def inf_closure(self):
        return all(p.inf_closure for p in self.parts)

    @property
    def bounded(self):
        return any(p.bounded for p in self.parts)

    @property
    def nbhd_inf(self):
        return all(p.nbhd_inf for p in self.parts)

    def expr(self):
        return "intersection(" + ", ".join(p.expr() for p in self.parts) + ")"


@dataclass(frozen=True)
class Union(Node):
    parts: tuple

    def __post_init__(self):
        if len(self.parts) < 1:
            raise ValidationError("union needs at least one operand")
        object.__setattr__(self, "parts", tuple(self.parts))

    def interior(self, z):
        out = self.parts[0].interior(z)
        for p in self.parts[1:]:
            out = out | p.interior(z)
        return out

    def closure(self, z):
        out = self.parts[0].closure(z)
        for p in self.parts[1:]:
            out = out | p.closure(z)
        return out

    @property
    def inf_interior(self):
        return any(p.inf_interior for p in self.parts)

    @property
    def inf_closure(self):
        return any(p.inf_closure for p in self.parts)

    @property
    def bounded(self):
        return all(p.bounded for p in self.parts)

    @property
    def nbhd_inf(self):
        return any(p.nbhd_inf for p in self.parts)

    def expr(self):
        return "union(" + ", ".join(p.expr() for p in self.parts) + ")"


# ---------------------------------------------------------------------------
# the domain wrapper


@dataclass(frozen=True)
class DomainSpec:
    """An open set of the Riemann sphere with cached structural flags."""

    tree: Node
    contains_zero: bool = field(init=False)
    contains_infinity: bool = field(init=False)
    bounded_in_plane: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "contains_zero", bool(self.tree.interior(np.array([0j]))[0]))
        object.__setattr__(self, "contains_infinity", bool(self.tree.inf_interior))
        object.__setattr__(self, "bounded_in_plane", bool(self.tree.bounded))

    def contains(self, z) -> bool:
        return contains(self, z)

    def contains_array(self, z) -> np.ndarray:
        """Vectorised membership for finite points."""
        return self.tree.interior(_as_array(z))

    def expr(self) -> str:
        return self.tree.expr()

    def __str__(self) -> str:
        return self.expr()


def domain(tree: Node) -> DomainSpec:
    return DomainSpec(tree)


def unit_disc() -> DomainSpec:
    return DomainSpec(Disc(0j, 1.0))


def contains(dom: DomainSpec, z: ExtendedPoint) -> bool:
    """True iff ``z`` lies in the open set ``dom``."""
    if z is INF:
        return dom.contains_infinity
    return bool(dom.tree.interior(np.array([complex(z)]))[0])


def star_contains(dom: DomainSpec, alpha: ExtendedPoint) -> bool:
    """True iff ``alpha`` lies in ``Omega* = 1/(C_inf \\ Omega)``."""
    return not contains(dom, reciprocal(alpha))


def star_contains_array(dom: DomainSpec, alpha) -> np.ndarray:
    """Vectorised :func:`star_contains`; ``alpha == 0`` is handled via infinity."""
    a = _as_array(alpha)
    out = np.empty(a.shape, dtype=bool)
    zero = a == 0
    out[zero] = not dom.contains_infinity
    nz = ~zero
    with np.errstate(over="ignore", divide="ignore"):
        w = 1.0 / a[nz]
    big = ~np.isfinite(w)
    res = np.empty(w.shape, dtype=bool)
    res[big] = not dom.contains_infinity
    res[~big] = ~dom.tree.interior(w[~big])
    out[nz] = res
    return out


# ---------------------------------------------------------------------------
# arcs of Omega* on the unit circle


@dataclass(frozen=True)
class StarArcs:
    """Maximal arcs of ``Omega* ∩ T`` found by scanning.

    ``arcs`` holds ``(theta1, theta2)`` pairs with ``theta1 < theta2``.  An
    empty list means the scan found no point of the set, which is a valid
    result and not a failure.
    """

    arcs: tuple
    resolution: float

    @property
    def empty(self) -> bool:
        return len(self.arcs) == 0

    @property
    def total_length(self) -> float:
        return sum(b - a for a, b in self.arcs)

    def contains_angle(self, theta: float, slack: float = 0.0) -> bool:
        for a, b in self.arcs:
            t = (theta - a) % TWO_PI
            if t <= (b - a) + slack or t >= TWO_PI - slack:
                return True
        return False


def _star_on_circle(dom: DomainSpec, theta) -> np.ndarray:
    # 1/e^{it} = e^{-it}
    return ~dom.tree.interior(np.exp(-1j * np.asarray(theta, dtype=float)))


def _bisect(dom, t_in: float, t_out: float, tol: float) -> float:
    while abs(t_out - t_in) > tol:
        mid = 0.5 * (t_in + t_out)
        if _star_on_circle(dom, mid):
            t_in = mid
        else:
            t_out = mid
    return t_in


def star_arcs(dom: DomainSpec, resolution: float = 1e-3) -> StarArcs:
    """Scan the unit circle for arcs of ``Omega*``.

    Transitions found at the scan ``resolution`` are bisected to
    ``resolution / 2**10`` and each endpoint is placed on the inner side,
    so reported arcs are subsets of the true set up to that tolerance.
    """
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    n = max(8, int(math.ceil(TWO_PI / resolution)))
    theta = -math.pi + TWO_PI * np.arange(n) / n
    inside = _star_on_circle(dom, theta)
    if inside.all():
        return StarArcs(((-math.pi, math.pi),), resolution)
    if not inside.any():
        return StarArcs((), resolution)
    tol = resolution / 1024.0
    step = TWO_PI / n
    # rotate so the scan starts at an outside sample
    start = int(np.argmin(inside))
    arcs = []
    k = 0
    while k < n:
        i = (start + k) % n
        if inside[i]:
            j = k
            while j + 1 < n and inside[(start + j + 1) % n]:
                j += 1
            t_first = theta[start] + k * step
            t_last = theta[start] + j * step
            lo = _bisect(dom, t_first, t_first - step, tol)
            hi = _bisect(dom, t_last, t_last + step, tol)
            arcs.append((lo, hi))
            k = j + 1
        else:
            k += 1
    norm = []
    for lo, hi in arcs:
        shift = TWO_PI * math.floor((lo + math.pi) / TWO_PI)
        norm.append((float(lo - shift), float(hi - shift)))
    norm.sort()
    return StarArcs(tuple(norm), resolution)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    witness: object = None
    detail: str = ""


@dataclass(frozen=True)
class Diagnostics:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            extra = f" (witness {c.witness!r})" if not c.passed and c.witness is not None else ""
            lines.append(f"{status}: {c.name}{extra}{': ' + c.detail if c.detail else ''}")
        return "\n".join(lines)


def validate(dom: DomainSpec) -> Diagnostics:
    """Check the standing hypotheses on a domain."""
    checks = [
        Check("0 in Omega", dom.contains_zero, None if dom.contains_zero else 0j),
    ]
    b, c = dom.bounded_in_plane, dom.contains_infinity
    if b and c:
        checks.append(Check("bounded in C xor contains infinity", False, INF,
                            "inconsistent flags"))
    elif not b and not c:
        # far point in Omega that is not a neighbourhood of infinity
        witness = None
        for r in (1e3, 1e6):
            pts = r * np.exp(1j * np.linspace(0, TWO_PI, 64, endpoint=False))
            hit = dom.contains_array(pts)
            if hit.any():
                witness = complex(pts[np.argmax(hit)])
                break
        checks.append(Check("bounded in C xor contains infinity", False, witness,
                            "unbounded and infinity not in Omega"))
    else:
        checks.append(Check("bounded in C xor contains infinity", True,
                            detail="contains infinity" if c else "bounded"))
    return Diagnostics(tuple(checks))


def require_valid(dom: DomainSpec) -> DomainSpec:
    diag = validate(dom)
    if not diag.ok:
        raise ValidationError("invalid domain " + dom.expr() + "\n" + str(diag))
    return dom


def sphere_sample(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample on the sphere, mapped to C by stereographic projection."""
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    x, y, h = v[:, 0], v[:, 1], v[:, 2]
    # north pole (h = 1) maps to infinity; measure zero
    return (x + 1j * y) / (1.0 - h)


def complement_points(dom: DomainSpec, pts: Iterable) -> list:
    return [p for p in pts if not contains(dom, p)]


def sample_in(dom: DomainSpec, n: int, rng: np.random.Generator, radius: float = 3.0,
              margin: float = 0.0) -> np.ndarray:
    """Rejection-sample ``n`` finite points of ``dom`` within ``|z| < radius``.

    ``margin`` keeps samples that distance away from the boundary (tested on a
    small ring of probe points).
    """
    out: list = []
    tries = 0
    while len(out) < n:
        tries += 1
        if tries > 1000:
            raise ValidationError("could not sample points in domain " + dom.expr())
        r = radius * np.sqrt(rng.random(4 * n))
        z = r * np.exp(TWO_PI * 1j * rng.random(4 * n))
        ok = dom.contains_array(z)
        if margin > 0:
            ring = np.exp(TWO_PI * 1j * np.arange(8) / 8) * margin
            for d in ring:
                ok &= dom.contains_array(z + d)
        out.extend(z[ok].tolist())
    return np.asarray(out[:n], dtype=complex)


def points_on_reciprocal_arc(theta1: float, theta2: float, n: int = 257) -> np.ndarray:
    """Sample of ``{1/e^{it} : theta1 <= t <= theta2}``."""
    t = np.linspace(theta1, theta2, n)
    return np.exp(-1j * t)


def any_in(dom: DomainSpec, pts: Sequence) -> bool:
    finite = [p for p in pts if p is not INF]
    if any(p is INF for p in pts) and dom.contains_infinity:
        return True
    if not finite:
        return False
    return bool(dom.contains_array(np.asarray(finite, dtype=complex)).any())
