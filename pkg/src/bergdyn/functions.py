"""Exact representation of Bergman-space elements and the Taylor shift.

An :class:`AnalyticFn` is

    f(z) = sum_k poly[k] z^k + integral 1/(1 - zeta z) dnu(zeta)

where ``nu`` is a :class:`~bergdyn.measures.Measure` (atoms anywhere,
arc pieces on the unit circle).  The stored ``nu`` is the *conjugate* of
the representing measure in the usual Cauchy-transform notation, so no
conjugation happens at evaluation time and the Taylor shift is exactly
"multiply ``nu`` by ``zeta``".

All operators here (shift, iterates, the right inverses ``S_n``) act on
the representation without floating-point work; only :func:`evaluate`
and the resolvent touch numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import geometry as geo
from .errors import (AmbiguousPiece, CoverViolation, PoleProximityError, SpectrumError,
                     SupportViolation, ValidationError)
from .geometry import INF, DomainSpec
from .kernels import arc_kernel, atom_kernel
from .measures import ArcPiece, Atom, CircleMeasure, Measure, fourier_stieltjes_many, power_shift

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class AnalyticFn:
    poly: tuple = ()
    kernel: Measure = field(default_factory=Measure)

    def __post_init__(self):
        object.__setattr__(self, "poly", tuple(complex(c) for c in self.poly))

    def __call__(self, z):
        return evaluate(self, z)

    def __add__(self, other: "AnalyticFn") -> "AnalyticFn":
        return add(self, other)

    def __sub__(self, other: "AnalyticFn") -> "AnalyticFn":
        return add(self, scale(-1.0, other))

    def __rmul__(self, c) -> "AnalyticFn":
        return scale(c, self)

    @property
    def is_zero(self) -> bool:
        return not any(self.poly) and self.kernel.is_zero

    def canonical(self) -> "AnalyticFn":
        """Normal form for comparing representations: trailing zero
        coefficients dropped, like pieces merged, atom exponents folded."""
        poly = list(self.poly)
        while poly and poly[-1] == 0:
            poly.pop()
        return AnalyticFn(tuple(poly), self.kernel.canonical().simplified())


ZERO = AnalyticFn()


def polynomial(coeffs: Sequence[complex]) -> AnalyticFn:
    return AnalyticFn(tuple(coeffs))


def gamma(alpha: complex, weight: complex = 1.0) -> AnalyticFn:
    """The eigenfunction ``z -> 1/(1 - alpha z)`` (times ``weight``)."""
    return AnalyticFn((), Measure.point(alpha, weight))


# ---------------------------------------------------------------------------
# evaluation


def _eval_finite(f: AnalyticFn, z: np.ndarray, check: bool = True) -> np.ndarray:
    out = np.zeros(z.shape, dtype=complex)
    if f.poly:
        out = out + np.polyval(np.asarray(f.poly[::-1]), z)
    for a in f.kernel.atoms:
        if a.weight != 0:
            out = out + a.weight * atom_kernel(a.position, a.power, z, check)
    for p in f.kernel.arcs:
        if p.weight != 0:
            out = out + p.weight * arc_kernel(p.theta1, p.theta2, p.power, z, check)
    return out


def _eval_infinity(f: AnalyticFn) -> complex:
    if any(c != 0 for c in f.poly[1:]):
        raise ValidationError("nonconstant polynomial part has a pole at infinity")
    val = f.poly[0] if f.poly else 0j
    for a in f.kernel.atoms:
        if a.position == 0:
            val += a.effective_weight
    return complex(val)


def evaluate(f: AnalyticFn, z):
    """Evaluate ``f`` at a point (complex or :data:`~bergdyn.geometry.INF`)
    or at an array of finite points."""
    if z is INF:
        return _eval_infinity(f)
    if np.isscalar(z):
        return complex(_eval_finite(f, np.array([complex(z)]))[0])
    arr = np.asarray(z, dtype=complex)
    return _eval_finite(f, arr.ravel()).reshape(arr.shape)


def evaluator(f: AnalyticFn, check: bool = True):
    """Array-in/array-out callable for quadrature."""
    return lambda z: _eval_finite(f, np.asarray(z, dtype=complex), check)


# ---------------------------------------------------------------------------
# linear plumbing


def add(f: AnalyticFn, g: AnalyticFn) -> AnalyticFn:
    n = max(len(f.poly), len(g.poly))
    pf = list(f.poly) + [0j] * (n - len(f.poly))
    pg = list(g.poly) + [0j] * (n - len(g.poly))
    both_circle = isinstance(f.kernel, CircleMeasure) and isinstance(g.kernel, CircleMeasure)
    kern = (CircleMeasure if both_circle else Measure)(f.kernel.atoms + g.kernel.atoms,
                                                       f.kernel.arcs + g.kernel.arcs)
    return AnalyticFn(tuple(a + b for a, b in zip(pf, pg)), kern.simplified())


def scale(c: complex, f: AnalyticFn) -> AnalyticFn:
    c = complex(c)
    if c == 0:
        return ZERO
    return AnalyticFn(tuple(c * a for a in f.poly), f.kernel.scaled(c))


# ---------------------------------------------------------------------------
# the Taylor shift and relatives


def taylor_shift(f: AnalyticFn) -> AnalyticFn:
    """``(f(z) - f(0))/z``: drops ``a_0`` and multiplies ``nu`` by ``zeta``."""
    return iterate(f, 1)


def iterate(f: AnalyticFn, n: int) -> AnalyticFn:
    """The ``n``-th iterate of the Taylor shift in one pass."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return f
    return AnalyticFn(f.poly[n:], power_shift(f.kernel, n))


def cauchy_transform(nu: Measure, dom: DomainSpec | None = None) -> AnalyticFn:
    """``z -> integral gamma(zeta)(z) dnu(zeta)`` (``nu`` already conjugated)."""
    if dom is not None:
        check_support(nu, dom)
    return AnalyticFn((), nu)


def s_n_transform(nu: Measure, n: int) -> AnalyticFn:
    """Right inverse of ``T^n`` on Cauchy transforms of circle measures."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if not nu.on_circle:
        off = [a.position for a in nu.atoms if abs(abs(a.position) - 1.0) > 1e-12]
        raise SupportViolation(f"S_n needs support in T; atoms off the circle: {off}")
    return AnalyticFn((), power_shift(nu, -n))


def f_arc(arcs: Sequence[tuple], dom: DomainSpec | None = None) -> AnalyticFn:
    """Cauchy transform of normalised arc length restricted to ``arcs``."""
    nu = CircleMeasure(arcs=tuple(ArcPiece(t1, t2, 0, 1.0) for t1, t2 in arcs))
    return cauchy_transform(nu, dom)


def taylor_coefficients(f: AnalyticFn, n: int) -> np.ndarray:
    """``a_0, ..., a_{n-1}`` of the expansion about 0."""
    ks = np.arange(n)
    a = fourier_stieltjes_many(f.kernel, ks)
    m = min(n, len(f.poly))
    a[:m] += np.asarray(f.poly[:m], dtype=complex)
    return a


def partial_sum(f: AnalyticFn, n: int) -> AnalyticFn:
    """Degree-``n`` Taylor polynomial of ``f`` about 0."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return AnalyticFn(tuple(taylor_coefficients(f, n + 1)))


# ---------------------------------------------------------------------------
# domain binding


def _arc_inside_star(dom: DomainSpec, p: ArcPiece, n: int = 257) -> bool:
    t = np.linspace(p.theta1, p.theta2, n)
    return bool(geo.star_contains_array(dom, np.exp(1j * t)).all())


def support_violations(nu: Measure, dom: DomainSpec) -> list:
    bad = []
    for a in nu.atoms:
        if not geo.star_contains(dom, a.position):
            bad.append(a)
    for p in nu.arcs:
        if not _arc_inside_star(dom, p):
            bad.append(p)
    return bad


def check_support(nu: Measure, dom: DomainSpec) -> None:
    bad = support_violations(nu, dom)
    if bad:
        raise SupportViolation("support outside Omega*: " + ", ".join(map(repr, bad)))


def check_bound(f: AnalyticFn, dom: DomainSpec) -> None:
    """Raise unless ``f`` is holomorphic on ``dom`` and vanishes at infinity
    when ``dom`` contains it."""
    check_support(f.kernel, dom)
    if dom.contains_infinity and any(c != 0 for c in f.poly):
        raise ValidationError("polynomial part must vanish when the domain contains infinity")


# ---------------------------------------------------------------------------
# resolvent


class Resolvent:
    """Evaluator of ``S_alpha g``, the inverse of ``T - alpha I`` applied to ``g``.

    ``h(z) = (z g(z) - g(1/alpha)/alpha) / (1 - z alpha)``; near the removable
    point ``1/alpha`` the value is the Richardson combination of the 4-point
    circle means at radii ``rho`` and ``2 rho``.
    """

    def __init__(self, alpha: complex, g, dom: DomainSpec, rho: float = 1e-4,
                 near: float = 1e-6):
        self.alpha = complex(alpha)
        self.g = g
        self.dom = dom
        self.rho = rho
        self.near = near
        self.pole = 1.0 / self.alpha
        self.g_pole = complex(self._g(np.array([self.pole]))[0])

    def _g(self, z):
        return evaluate(self.g, z) if isinstance(self.g, AnalyticFn) else self.g(z)

    def _direct(self, z):
        return (z * self._g(z) - self.g_pole / self.alpha) / (1.0 - z * self.alpha)

    def _circle_mean(self, z, r):
        w = np.exp(0.5j * math.pi * np.arange(4))
        pts = z[:, None] + r * w[None, :]
        return self._direct(pts.ravel()).reshape(pts.shape).mean(axis=1)

    def __call__(self, z):
        scalar = np.isscalar(z)
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty_like(z)
        close = np.abs(z - self.pole) < self.near
        if (~close).any():
            out[~close] = self._direct(z[~close])
        if close.any():
            zc = z[close]
            m1 = self._circle_mean(zc, self.rho)
            m2 = self._circle_mean(zc, 2 * self.rho)
            out[close] = (16.0 * m1 - m2) / 15.0
        return complex(out[0]) if scalar else out


def resolvent_apply(alpha: complex, g, dom: DomainSpec) -> Resolvent:
    """``S_alpha g`` for ``1/alpha`` in ``dom``."""
    alpha = complex(alpha)
    if alpha == 0:
        raise SpectrumError("alpha zero: the resolvent formula divides by alpha")
    if geo.star_contains(dom, alpha):
        raise SpectrumError(f"alpha in spectrum: 1/alpha = {1 / alpha!r} is not in Omega")
    return Resolvent(alpha, g, dom)


def shift_residual(h, g, alpha: complex, z: np.ndarray) -> np.ndarray:
    """``|(T - alpha I) h - g|`` at nonzero points ``z``."""
    z = np.asarray(z, dtype=complex)
    h0 = h(np.array([0j]))[0]
    hz = h(z)
    gz = evaluate(g, z) if isinstance(g, AnalyticFn) else g(z)
    return np.abs((hz - h0) / z - alpha * hz - gz)


# ---------------------------------------------------------------------------
# separation of singularities


def _singular_points(piece) -> list:
    if isinstance(piece, Atom):
        return [geo.reciprocal(piece.position)]
    return list(geo.points_on_reciprocal_arc(piece.theta1, piece.theta2))


def split_singularities(f: AnalyticFn, dom1: DomainSpec, dom2: DomainSpec,
                        samples: int = 10_000, seed: int = 0) -> tuple:
    """Split ``f`` on ``dom1 ∩ dom2`` into ``f1 + f2`` with ``f_i`` holomorphic
    on ``dom_i``.

    The cover condition ``dom1 ∪ dom2 = C_inf`` is checked on a random
    sphere sample of size ``samples`` (probabilistic).
    """
    rng = np.random.default_rng(seed)
    pts = geo.sphere_sample(samples, rng)
    pts = pts[np.isfinite(pts)]
    covered = dom1.contains_array(pts) | dom2.contains_array(pts)
    if not covered.all():
        raise CoverViolation(f"point {complex(pts[np.argmin(covered)])!r} lies in neither domain")
    if not (dom1.contains_infinity or dom2.contains_infinity):
        raise CoverViolation("infinity lies in neither domain")

    parts1: list = []
    parts2: list = []
    for piece in list(f.kernel.atoms) + list(f.kernel.arcs):
        s = _singular_points(piece)
        in1, in2 = geo.any_in(dom1, s), geo.any_in(dom2, s)
        if in1 and in2:
            raise AmbiguousPiece(f"singularity of {piece!r} meets both domains")
        (parts1 if in2 else parts2).append(piece)

    def build(parts):
        atoms = tuple(p for p in parts if isinstance(p, Atom))
        arcs = tuple(p for p in parts if isinstance(p, ArcPiece))
        return Measure(atoms, arcs)

    poly1: tuple = ()
    poly2: tuple = ()
    if any(c != 0 for c in f.poly):
        if dom1.bounded_in_plane or not dom1.contains_infinity:
            poly1 = f.poly
        else:
            poly2 = f.poly
    return AnalyticFn(poly1, build(parts1)), AnalyticFn(poly2, build(parts2))


__all__ = [
    "AnalyticFn", "ZERO", "polynomial", "gamma", "evaluate", "evaluator", "add", "scale",
    "taylor_shift", "iterate", "cauchy_transform", "s_n_transform", "f_arc",
    "taylor_coefficients", "partial_sum", "check_support", "check_bound", "support_violations",
    "Resolvent", "resolvent_apply", "shift_residual", "split_singularities", "PoleProximityError",
]
