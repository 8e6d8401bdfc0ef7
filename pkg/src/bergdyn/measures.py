"""Finite complex measures built from atoms and monomial-density arcs.

A measure is a finite sum of

* atoms ``w * zeta0**m * delta_{zeta0}`` and
* arc pieces ``w * zeta**m dm`` restricted to ``{e^{it}: theta1 <= t <= theta2}``,

where ``dm`` is normalised arc length (the full circle has mass one).  The
integer exponent ``m`` is carried symbolically on both kinds of piece, so
multiplying by ``zeta**j`` is exact index bookkeeping.

:class:`Measure` allows atoms anywhere in the plane (it is used as the
coefficient measure of :class:`~bergdyn.functions.AnalyticFn`);
:class:`CircleMeasure` additionally requires atoms on the unit circle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .errors import ValidationError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Atom:
    position: complex
    weight: complex
    power: int = 0

    def __post_init__(self):
        object.__setattr__(self, "position", complex(self.position))
        object.__setattr__(self, "weight", complex(self.weight))
        object.__setattr__(self, "power", int(self.power))
        if not (math.isfinite(self.position.real) and math.isfinite(self.position.imag)):
            raise ValidationError("atom position must be finite")
        if self.position == 0 and self.power < 0:
            raise ValidationError("negative power on an atom at 0")

    @property
    def effective_weight(self) -> complex:
        """Total mass ``w * position**power`` of the atom."""
        if self.power == 0:
            return self.weight
        return self.weight * self.position ** self.power


@dataclass(frozen=True)
class ArcPiece:
    theta1: float
    theta2: float
    power: int = 0
    weight: complex = 1.0

    def __post_init__(self):
        t1, t2 = float(self.theta1), float(self.theta2)
        if not (t1 < t2 <= t1 + TWO_PI * (1 + 1e-15)):
            raise ValidationError(f"arc needs theta1 < theta2 <= theta1 + 2pi, got ({t1}, {t2})")
        object.__setattr__(self, "theta1", t1)
        object.__setattr__(self, "theta2", t2)
        object.__setattr__(self, "power", int(self.power))
        object.__setattr__(self, "weight", complex(self.weight))

    @property
    def length(self) -> float:
        return self.theta2 - self.theta1

    @property
    def mass(self) -> float:
        """Normalised length ``(theta2 - theta1) / 2pi``."""
        return self.length / TWO_PI

    @property
    def full_circle(self) -> bool:
        return self.length >= TWO_PI * (1 - 1e-15)


def arc_moment(theta1: float, theta2: float, k) -> np.ndarray:
    """``(1/2pi) * integral_{theta1}^{theta2} e^{ik t} dt`` in closed form.

    Vectorised over integer ``k``.
    """
    k = np.asarray(k)
    kf = k.astype(float)
    safe = np.where(k == 0, 1.0, kf)
    val = (np.exp(1j * kf * theta2) - np.exp(1j * kf * theta1)) / (2j * math.pi * safe)
    return np.where(k == 0, (theta2 - theta1) / TWO_PI + 0j, val)


@dataclass(frozen=True)
class Measure:
    """Finite sum of atoms and arc pieces (atoms may lie anywhere)."""

    atoms: tuple = ()
    arcs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "arcs", tuple(self.arcs))

    # -- construction helpers -------------------------------------------------
    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def arc(cls, theta1: float, theta2: float, power: int = 0, weight: complex = 1.0):
        return cls(arcs=(ArcPiece(theta1, theta2, power, weight),))

    @classmethod
    def point(cls, position: complex, weight: complex = 1.0, power: int = 0):
        return cls(atoms=(Atom(position, weight, power),))

    @classmethod
    def uniform(cls):
        return cls.arc(-math.pi, math.pi)

    def __add__(self, other: "Measure") -> "Measure":
        return type(self)(self.atoms + other.atoms, self.arcs + other.arcs)

    def scaled(self, c: complex) -> "Measure":
        c = complex(c)
        return type(self)(tuple(replace(a, weight=a.weight * c) for a in self.atoms),
                          tuple(replace(p, weight=p.weight * c) for p in self.arcs))

    def simplified(self) -> "Measure":
        """Merge pieces with identical support and exponent; drop zero weights."""
        atoms: dict = {}
        for a in self.atoms:
            key = (a.position, a.power)
            atoms[key] = atoms.get(key, 0j) + a.weight
        arcs: dict = {}
        for p in self.arcs:
            key = (p.theta1, p.theta2, p.power)
            arcs[key] = arcs.get(key, 0j) + p.weight
        return type(self)(
            tuple(Atom(pos, w, m) for (pos, m), w in atoms.items() if w != 0),
            tuple(ArcPiece(t1, t2, m, w) for (t1, t2, m), w in arcs.items() if w != 0),
        )

    @property
    def is_zero(self) -> bool:
        return not self.atoms and not self.arcs

    @property
    def on_circle(self) -> bool:
        return all(abs(abs(a.position) - 1.0) <= 1e-12 for a in self.atoms)

    @property
    def has_atoms(self) -> bool:
        return any(a.weight != 0 for a in self.atoms)

    def canonical(self) -> "Measure":
        """Fold exponents of atoms into their weights (for comparisons)."""
        return type(self)(tuple(Atom(a.position, a.effective_weight, 0) for a in self.atoms),
                          self.arcs)


@dataclass(frozen=True)
class CircleMeasure(Measure):
    """Measure supported on the unit circle."""

    def __post_init__(self):
        super().__post_init__()
        for a in self.atoms:
            if abs(abs(a.position) - 1.0) > 1e-12:
                raise ValidationError(f"atom at {a.position} is not on the unit circle")

    @classmethod
    def from_measure(cls, mu: Measure) -> "CircleMeasure":
        return cls(mu.atoms, mu.arcs)


def fourier_stieltjes(nu: Measure, k: int) -> complex:
    """``nu^(k) = integral zeta**k dnu(zeta)``."""
    return complex(fourier_stieltjes_many(nu, np.array([k]))[0])


def fourier_stieltjes_many(nu: Measure, ks) -> np.ndarray:
    ks = np.asarray(ks, dtype=np.int64)
    out = np.zeros(ks.shape, dtype=complex)
    for a in nu.atoms:
        if a.position == 0:
            out = out + a.weight * (ks + a.power == 0)
        else:
            pw = np.array([a.position ** int(e) for e in (ks + a.power).ravel()], dtype=complex)
            out = out + a.weight * pw.reshape(ks.shape)
    for p in nu.arcs:
        out = out + p.weight * arc_moment(p.theta1, p.theta2, ks + p.power)
    return out


def power_shift(nu: Measure, j: int) -> Measure:
    """Multiply the measure by ``zeta**j`` (exact exponent bookkeeping)."""
    j = int(j)
    if j == 0:
        return nu
    return type(nu)(tuple(replace(a, power=a.power + j) for a in nu.atoms),
                    tuple(replace(p, power=p.power + j) for p in nu.arcs))


def total_variation(nu: Measure) -> float:
    """Exact total variation; monomial densities have unit modulus on T."""
    tv = math.fsum(abs(a.effective_weight) for a in nu.atoms)
    return tv + math.fsum(abs(p.weight) * p.mass for p in nu.arcs)


@dataclass(frozen=True)
class RajchmanTable:
    ks: np.ndarray = field(repr=False)
    abs_coeffs: np.ndarray = field(repr=False)
    tail_constant: float
    atom_dominated: bool

    @property
    def rajchman(self) -> bool:
        return not self.atom_dominated

    def rows(self) -> Iterable[tuple]:
        return zip(self.ks.tolist(), self.abs_coeffs.tolist())


def rajchman_decay(nu: Measure, K: int) -> RajchmanTable:
    """Coefficient moduli for ``|k| <= K`` and the least ``C`` with
    ``|nu^(k)| <= C/|k|`` on ``1 <= |k| <= K``.

    Any atom of nonzero mass keeps ``limsup |nu^(k)| > 0``; such measures are
    flagged ``atom_dominated``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    ks = np.arange(-K, K + 1)
    vals = np.abs(fourier_stieltjes_many(nu, ks))
    nz = ks != 0
    C = float(np.max(np.abs(ks[nz]) * vals[nz]))
    return RajchmanTable(ks, vals, C, nu.has_atoms)
