"""Closed-form evaluation of Cauchy-type kernels of arc pieces.

For an arc ``theta1 <= t <= theta2`` and an integer ``m`` we evaluate

    I_m(z) = (1/2pi) * integral e^{imt} / (1 - e^{it} z) dt.

The base case ``I_0`` is a difference of logarithms.  The branch is fixed
analytically: for ``|z| <= 1`` the values ``1 - zeta z`` stay in the closed
right half-plane, for ``|z| > 1`` we factor out ``-zeta z`` and the
remaining ``1 - conj(zeta)/z`` does.  No sub-arc bookkeeping is needed.

Higher exponents follow from the partial-fraction identities

    I_m = z^{-m} (I_0 - sum_{j<m} M_j z^j)                (m >= 1)
    I_m = sum_{i<|m|} M_{m+i} z^i + z^{|m|} I_0           (m <= -1)

with ``M_j`` the arc moments.  Each identity is stable on one side of the
unit circle only; on the other side, once ``|z|**|m|`` drops below
``CLOSED_FORM_FLOOR``, the Taylor (or Laurent) series is summed instead.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import PoleProximityError
from .measures import arc_moment

TWO_PI = 2.0 * math.pi
SERIES_RADIUS = 0.25
SERIES_TOL = 1e-14
CLOSED_FORM_FLOOR = 1e-2
POLE_DISTANCE = 1e-10
ATOM_POLE_TOL = 1e-14


def _horner(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """sum_i coeffs[i] z^i."""
    acc = np.zeros_like(z)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


def distance_to_reciprocal_arc(theta1: float, theta2: float, z: np.ndarray) -> np.ndarray:
    """Distance from ``z`` to ``{e^{-it} : theta1 <= t <= theta2}``."""
    span = theta2 - theta1
    t = np.mod(-np.angle(z) - theta1, TWO_PI)
    radial = np.abs(np.abs(z) - 1.0)
    ends = np.minimum(np.abs(z - np.exp(-1j * theta1)), np.abs(z - np.exp(-1j * theta2)))
    return np.where(t <= span, radial, ends)


def _base(theta1, theta2, z, inside):
    z1, z2 = np.exp(1j * theta1), np.exp(1j * theta2)
    out = np.empty_like(z)
    zi = z[inside]
    out[inside] = (theta2 - theta1) / TWO_PI - (np.log1p(-z2 * zi) - np.log1p(-z1 * zi)) / (2j * math.pi)
    zo = z[~inside]
    out[~inside] = -(np.log1p(-np.conj(z2) / zo) - np.log1p(-np.conj(z1) / zo)) / (2j * math.pi)
    return out


def _n_terms(r: np.ndarray, mass: float) -> int:
    """Series length so that mass * r^N / (1 - r) < SERIES_TOL for all r."""
    r = float(np.max(r)) if r.size else 0.0
    if r == 0.0:
        return 1
    n = math.log(SERIES_TOL * (1.0 - r) / max(mass, 1e-300)) / math.log(r)
    return max(1, int(math.ceil(n)))


def _series_inside(theta1, theta2, m, z):
    mass = (theta2 - theta1) / TWO_PI
    n = _n_terms(np.abs(z), mass)
    coeffs = arc_moment(theta1, theta2, m + np.arange(n))
    return _horner(coeffs, z)


def _series_outside(theta1, theta2, m, z):
    w = 1.0 / z
    mass = (theta2 - theta1) / TWO_PI
    n = _n_terms(np.abs(w), mass)
    coeffs = arc_moment(theta1, theta2, m - 1 - np.arange(n))
    return -w * _horner(coeffs, w)


def arc_kernel(theta1: float, theta2: float, m: int, z, check: bool = True) -> np.ndarray:
    """Evaluate ``I_m`` at finite points ``z`` (vectorised).

    Raises :class:`PoleProximityError` when a point lies within
    ``POLE_DISTANCE`` of the reciprocal arc, where the kernel is singular or
    discontinuous.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    if check and z.size:
        d = distance_to_reciprocal_arc(theta1, theta2, z)
        if np.any(d < POLE_DISTANCE):
            bad = z[np.argmin(d)]
            raise PoleProximityError(
                f"z={bad!r} within {POLE_DISTANCE} of reciprocal arc ({theta1}, {theta2})")
    out = np.empty_like(z)
    a = np.abs(z)
    small = a < SERIES_RADIUS
    if small.any():
        out[small] = _series_inside(theta1, theta2, m, z[small])
    rest = ~small
    if not rest.any():
        return out.reshape(shape)
    zr, ar = z[rest], a[rest]
    inside = ar <= 1.0
    base = _base(theta1, theta2, zr, inside)
    if m == 0:
        res = base
    elif m > 0:
        res = np.empty_like(zr)
        closed = ~inside | (ar ** m >= CLOSED_FORM_FLOOR)
        if closed.any():
            zc = zr[closed]
            poly = _horner(arc_moment(theta1, theta2, np.arange(m)), zc)
            res[closed] = (base[closed] - poly) / zc ** m
        ser = ~closed
        if ser.any():
            res[ser] = _series_inside(theta1, theta2, m, zr[ser])
    else:
        q = -m
        res = np.empty_like(zr)
        closed = inside | (ar ** (-q) >= CLOSED_FORM_FLOOR)
        if closed.any():
            zc = zr[closed]
            poly = _horner(arc_moment(theta1, theta2, m + np.arange(q)), zc)
            res[closed] = poly + zc ** q * base[closed]
        ser = ~closed
        if ser.any():
            res[ser] = _series_outside(theta1, theta2, m, zr[ser])
    out[rest] = res
    return out.reshape(shape)


def atom_kernel(alpha: complex, power: int, z, check: bool = True) -> np.ndarray:
    """``alpha**power / (1 - alpha z)``."""
    z = np.asarray(z, dtype=complex)
    den = 1.0 - alpha * z
    if check and z.size and np.any(np.abs(den) < ATOM_POLE_TOL):
        raise PoleProximityError(f"evaluation at the pole 1/{alpha!r}")
    c = alpha ** power if power else 1.0
    return c / den
