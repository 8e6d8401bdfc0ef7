"""Regenerate the frozen values in ``oracle_values.py``.

Independent of the package: norms of Cauchy transforms of arc measures on
the unit disc come from Taylor coefficients (closed-form arc moments) and
the radial weights ``w_v = integral_0^1 u^v (1+u)^-2 du``, so that
``||sum a_v z^v||^2 = sum |a_v|^2 w_v``.

    python tests/make_oracles.py
"""
import math

import numpy as np
from scipy.special import hyp2f1

N = 400_000
nu = np.arange(N)
W = hyp2f1(2.0, nu + 1.0, nu + 2.0, -1.0) / (nu + 1.0)
# |M_k|^2 averages 2/(2 pi k)^2 and w_k ~ 1/(4k) beyond the cut
TAIL = 1.0 / (16 * math.pi ** 2 * N ** 2)


def moments(t1, t2, k):
    k = np.asarray(k, dtype=float)
    safe = np.where(k == 0, 1.0, k)
    m = (np.exp(1j * k * t2) - np.exp(1j * k * t1)) / (2j * math.pi * safe)
    return np.where(k == 0, (t2 - t1) / (2 * math.pi), m)


def norm(t1, t2, shift):
    """A^2(D) norm of the function with coefficients M_{v + shift}."""
    a = moments(t1, t2, nu + shift)
    return math.sqrt(math.fsum(np.abs(a) ** 2 * W) + TAIL)


if __name__ == "__main__":
    cps = [0, 1, 2, 4, 8, 16, 32, 64, 128]
    print("ORBIT_FB =", {n: norm(0, math.pi, n) for n in cps})
    print("SN_MB =", {n: norm(0, math.pi, -n) for n in cps})
    q = math.pi / 2
    print("WITNESS_SOURCE =", {n: norm(math.pi, 3 * q, -n) for n in (0, 8, 32, 128)})
    print("WITNESS_TARGET =", {n: norm(0, q, n) for n in (0, 8, 32, 128)})
    print("NORM_F_QUARTER =", norm(0, q, 0))
