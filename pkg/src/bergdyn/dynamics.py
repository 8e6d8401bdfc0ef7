"""Numerical experiments on the dynamics of the Taylor shift.

Everything here composes the exact operators of :mod:`bergdyn.functions`
with the quadrature of :mod:`bergdyn.quadrature`: orbits ``T^n f`` and
the right inverses ``S_n``, the Kitai identity ``T^n S_n = C``, the
mixing witness ``u = f + S_n mu_g``, least-squares spanning residuals and
rasters of ``Omega*``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import geometry as geo
from .errors import GramBreakdown, NotInMp, SupportViolation, ValidationError
from .functions import (AnalyticFn, add, cauchy_transform, check_bound, check_support, evaluate,
                        evaluator, f_arc, gamma, iterate, polynomial, resolvent_apply, s_n_transform,
                        scale, shift_residual, taylor_coefficients, taylor_shift)
from .geometry import DomainSpec
from .config import format_function as describe
from .measures import Measure
from .quadrature import NormEstimate, QuadratureConfig, ap_norm, node_rule

GRAM_CUTOFF = 1e-10


def checkpoints(N: int) -> list:
    """``0, 1, 2, 4, ...`` up to ``N``, with ``N`` itself always included."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    out = [0]
    k = 1
    while k <= N:
        out.append(k)
        k *= 2
    if out[-1] != N:
        out.append(N)
    return out


# ---------------------------------------------------------------------------
# the M_p precondition


def _pole_on_boundary(dom: DomainSpec, pole: complex, eps: float = 1e-7) -> bool:
    ring = pole + eps * np.exp(2j * math.pi * np.arange(16) / 16)
    return bool(dom.contains_array(ring).any())


def mp_check(nu: Measure, dom: DomainSpec, p: float) -> None:
    """Raise :class:`NotInMp` unless ``z -> integral |gamma(zeta)(z)| d|nu|``
    is ``p``-integrable on ``dom``.

    Arc pieces have a logarithmic majorant, integrable for every ``p``.  An
    atom at ``alpha`` contributes ``1/|1 - alpha z|``; its pole ``1/alpha``
    is not in ``dom``, and when it sits on the boundary the majorant is
    ``p``-integrable near it exactly for ``p < 2``.
    """
    for a in nu.atoms:
        if a.effective_weight == 0 or a.position == 0:
            continue
        pole = 1.0 / a.position
        if p >= 2 and _pole_on_boundary(dom, pole):
            raise NotInMp(f"atom at {a.position!r}: 1/|1 - alpha z| is not in L^{p:g} "
                          f"near the boundary point {pole!r}")


def _non_rajchman(nu: Measure) -> bool:
    return any(a.effective_weight != 0 and abs(abs(a.position) - 1.0) <= 1e-12 for a in nu.atoms)


# ---------------------------------------------------------------------------
# orbits


@dataclass(frozen=True)
class OrbitRecord:
    entries: tuple
    domain: str
    p: float
    descriptor: str
    non_rajchman: bool = False

    def __post_init__(self):
        ns = [n for n, _ in self.entries]
        if ns and (ns[0] != 0 or any(b <= a for a, b in zip(ns, ns[1:]))):
            raise ValueError("orbit indices must increase strictly from 0")

    @property
    def indices(self) -> list:
        return [n for n, _ in self.entries]

    @property
    def norms(self) -> list:
        return [e.value for _, e in self.entries]

    def rows(self) -> list:
        return [[n, e.value, e.error_estimate] for n, e in self.entries]


ORBIT_HEADER = ["n", "norm", "err"]


def _norm_sequence(make: Callable[[int], AnalyticFn], dom, p, N, cfg, threads):
    return tuple((n, ap_norm(make(n), dom, p, cfg, threads)) for n in checkpoints(N))


def orbit_decay(f: AnalyticFn, dom: DomainSpec, p: float, N: int,
                cfg: QuadratureConfig | None = None, threads: int | None = None) -> OrbitRecord:
    """``||T^n f||_p`` at the checkpoints ``0, 1, 2, 4, ..., N``."""
    check_bound(f, dom)
    mp_check(f.kernel, dom, p)
    entries = _norm_sequence(lambda n: iterate(f, n), dom, p, N, cfg, threads)
    return OrbitRecord(entries, dom.expr(), p, describe(f), _non_rajchman(f.kernel))


def s_n_decay(nu: Measure, dom: DomainSpec, p: float, N: int,
              cfg: QuadratureConfig | None = None, threads: int | None = None) -> OrbitRecord:
    """``||S_n nu||_p`` at the checkpoints."""
    check_support(nu, dom)
    mp_check(nu, dom, p)
    entries = _norm_sequence(lambda n: s_n_transform(nu, n), dom, p, N, cfg, threads)
    return OrbitRecord(entries, dom.expr(), p, describe(cauchy_transform(nu)), _non_rajchman(nu))


# ---------------------------------------------------------------------------
# Kitai identity


@dataclass(frozen=True)
class KitaiReport:
    rows: tuple            # (n, max pointwise deviation)
    representation_ok: tuple

    @property
    def exact(self) -> bool:
        return all(self.representation_ok)

    @property
    def max_deviation(self) -> float:
        return max((d for _, d in self.rows), default=0.0)


KITAI_HEADER = ["n", "max_dev"]


def kitai_samples(n: int = 200, seed: int = 0, r_min: float = 0.95, r_max: float = 0.99) -> np.ndarray:
    """Seeded points of the annulus ``r_min <= |z| < r_max``."""
    rng = np.random.default_rng(seed)
    r = r_min + (r_max - r_min) * rng.random(n)
    return r * np.exp(2j * math.pi * rng.random(n))


def shift_pointwise(h: AnalyticFn, n: int, z: np.ndarray) -> np.ndarray:
    """``(T^n h)(z)`` from values of ``h`` and its Taylor coefficients,
    ``(h(z) - sum_{k<n} h_k z^k) / z^n`` (independent of :func:`iterate`)."""
    z = np.asarray(z, dtype=complex)
    hz = evaluate(h, z)
    if n == 0:
        return hz
    c = taylor_coefficients(h, n)
    return (hz - np.polyval(c[::-1], z)) / z ** n


def kitai_identity_check(nu: Measure, n_max: int, sample_points=None,
                         dom: DomainSpec | None = None) -> KitaiReport:
    """Check ``T^n S_n nu = C nu`` for ``n = 0..n_max``.

    The representation check is exact.  The pointwise check compares ``C nu``
    with ``T^n`` applied to ``S_n nu`` through the Taylor remainder formula;
    the default samples lie in ``0.95 <= |z| < 0.99`` where that formula
    loses few digits.
    """
    if not nu.on_circle:
        raise SupportViolation("Kitai check needs a measure on the unit circle")
    if dom is not None:
        check_support(nu, dom)
    z = kitai_samples() if sample_points is None else np.asarray(sample_points, dtype=complex)
    target = cauchy_transform(nu)
    ref = evaluate(target, z)
    want = target.canonical()
    rows, reps = [], []
    for n in range(n_max + 1):
        h = s_n_transform(nu, n)
        reps.append(iterate(h, n).canonical() == want)
        dev = float(np.max(np.abs(shift_pointwise(h, n, z) - ref))) if z.size else 0.0
        rows.append((n, dev))
    return KitaiReport(tuple(rows), tuple(reps))


def eigen_relation_holds(alpha: complex) -> bool:
    """``T gamma(alpha) == alpha gamma(alpha)`` at representation level."""
    g = gamma(alpha)
    return taylor_shift(g).canonical() == scale(alpha, g).canonical()


# ---------------------------------------------------------------------------
# mixing witness


@dataclass(frozen=True)
class TransitivityWitness:
    n: int
    u: AnalyticFn = field(repr=False)
    dist_to_source: NormEstimate
    dist_after_iteration: NormEstimate

    def row(self) -> list:
        return [self.n, self.dist_to_source.value, self.dist_after_iteration.value]


WITNESS_HEADER = ["n", "dist_source", "dist_target"]


def _require_arc_only(f: AnalyticFn, name: str) -> None:
    if any(c != 0 for c in f.poly) or f.kernel.atoms:
        raise ValidationError(f"{name} must be a combination of arc functions f_B")


def transitivity_witness(f: AnalyticFn, g: AnalyticFn, n: int, dom: DomainSpec, p: float = 2.0,
                         cfg: QuadratureConfig | None = None,
                         threads: int | None = None) -> TransitivityWitness:
    """The point ``u = f + S_n mu_g`` with ``||u - f||`` and ``||T^n u - g||``."""
    _require_arc_only(f, "f")
    _require_arc_only(g, "g")
    for h in (f, g):
        check_bound(h, dom)
        mp_check(h.kernel, dom, p)
    u = add(f, s_n_transform(g.kernel, n))
    src = ap_norm(u - f, dom, p, cfg, threads)
    tgt = ap_norm(iterate(u, n) - g, dom, p, cfg, threads)
    return TransitivityWitness(n, u, src, tgt)


# ---------------------------------------------------------------------------
# spanning residuals


@dataclass(frozen=True)
class SpanResidualCurve:
    node_counts: tuple
    residuals: tuple
    ranks: tuple
    target_norm: float

    def rows(self) -> list:
        return [[k, r] for k, r in zip(self.node_counts, self.residuals)]


SPAN_HEADER = ["nodes", "residual"]


def _basis(node) -> AnalyticFn:
    if isinstance(node, tuple):
        return f_arc([node])
    return gamma(complex(node))


def _check_nodes(nodes, dom: DomainSpec) -> None:
    for node in nodes:
        if isinstance(node, tuple):
            check_support(f_arc([node]).kernel, dom)
        elif not geo.star_contains(dom, complex(node)):
            raise SupportViolation(f"node {node!r} is not in Omega*")


def _values(f, z: np.ndarray) -> np.ndarray:
    if isinstance(f, AnalyticFn):
        return evaluator(f, check=False)(z)
    return np.asarray(f(z), dtype=complex)


CHUNK = 1 << 16


def truncated_solve(G: np.ndarray, b: np.ndarray, cutoff: float = GRAM_CUTOFF):
    """Solve ``G c = b`` keeping eigenvalues of the Hermitian Gram matrix above
    ``cutoff`` times the largest; returns ``(c, rank)``."""
    lam, V = np.linalg.eigh(G)
    top = float(lam.max()) if lam.size else 0.0
    if not top > 0:
        raise GramBreakdown("Gram matrix has no singular value above the cutoff")
    keep = lam > cutoff * top
    c = V[:, keep] @ ((V[:, keep].conj().T @ b) / lam[keep])
    return c, int(keep.sum())


def span_residual(target, node_sets: Sequence, dom: DomainSpec,
                  cfg: QuadratureConfig | None = None,
                  threads: int | None = None) -> SpanResidualCurve:
    """Least-squares distance from ``target`` to the span of each node set.

    Nodes are points ``alpha`` of ``Omega*`` (basis ``gamma(alpha)``) or arcs
    ``(theta1, theta2)`` inside ``Omega* ∩ T`` (basis ``f_B``).  One
    discretised 2-norm serves every node set: the node rule of the adaptive
    quadrature built for ``|target|^2 + mean_j |phi_j|^2`` over all basis
    functions, so nested node sets give nonincreasing residuals.
    """
    node_sets = [list(s) for s in node_sets]
    for s in node_sets:
        _check_nodes(s, dom)
    index: dict = {}
    for s in node_sets:
        for node in s:
            key = node if isinstance(node, tuple) else complex(node)
            index.setdefault(key, len(index))
    basis = [_basis(k) for k in index]

    def driver(z):
        acc = np.abs(_values(target, z)) ** 2
        if basis:
            acc = acc + sum(np.abs(_values(b, z)) ** 2 for b in basis) / len(basis)
        return acc

    pts, w = node_rule(driver, dom, cfg, threads)

    def chunks():
        for i in range(0, pts.size, CHUNK):
            z = pts[i:i + CHUNK]
            Phi = np.stack([_values(b, z) for b in basis], axis=1) if basis else np.zeros((z.size, 0))
            yield w[i:i + CHUNK], _values(target, z), Phi

    K = len(basis)
    G = np.zeros((K, K), dtype=complex)
    bvec = np.zeros(K, dtype=complex)
    tt = []
    for wc, t, Phi in chunks():
        G += Phi.conj().T @ (wc[:, None] * Phi)
        bvec += Phi.conj().T @ (wc * t)
        tt.append(math.fsum(wc * np.abs(t) ** 2))
    tnorm = math.sqrt(math.fsum(tt))

    sols = []
    for s in node_sets:
        idx = [index[node if isinstance(node, tuple) else complex(node)] for node in s]
        c, rank = truncated_solve(G[np.ix_(idx, idx)], bvec[idx])
        sols.append((idx, c, rank))
    # residuals are summed directly rather than through the Gram expansion,
    # which would cancel catastrophically once the fit is good
    acc = [[] for _ in sols]
    for wc, t, Phi in chunks():
        for k, (idx, c, _) in enumerate(sols):
            r = t - Phi[:, idx] @ c
            acc[k].append(math.fsum(wc * np.abs(r) ** 2))
    res = tuple(math.sqrt(math.fsum(a)) for a in acc)
    return SpanResidualCurve(tuple(len(s) for s in node_sets), res,
                             tuple(r for _, _, r in sols), tnorm)


def roots_of_unity(k: int) -> list:
    return [complex(math.cos(2 * math.pi * j / k), math.sin(2 * math.pi * j / k)) for j in range(k)]


# ---------------------------------------------------------------------------
# spectrum raster


@dataclass(frozen=True)
class SpectrumRaster:
    re: np.ndarray = field(repr=False)
    im: np.ndarray = field(repr=False)
    in_star: np.ndarray = field(repr=False)          # [i_re, i_im]
    resolvent_residual: np.ndarray = field(repr=False)
    sampled: int
    eigen_checked: int
    eigen_ok: bool
    notes: tuple = ()

    @property
    def max_residual(self) -> float:
        r = self.resolvent_residual[np.isfinite(self.resolvent_residual)]
        return float(r.max()) if r.size else 0.0

    def rows(self) -> list:
        out = []
        for i, x in enumerate(self.re):
            for j, y in enumerate(self.im):
                out.append([float(x), float(y), int(self.in_star[i, j]),
                            float(self.resolvent_residual[i, j])])
        return out


RASTER_HEADER = ["re", "im", "in_star", "resolvent_residual"]


def default_test_function(dom: DomainSpec) -> AnalyticFn:
    """``f_B`` on the first arc of ``Omega* ∩ T``, or the constant 1."""
    arcs = geo.star_arcs(dom)
    if not arcs.empty:
        t1, t2 = arcs.arcs[0]
        return f_arc([(t1, t2)])
    if dom.contains_infinity:
        raise ValidationError("no default test function: Omega* meets T nowhere and "
                              "constants do not vanish at infinity")
    return polynomial([1.0])


def spectrum_raster(dom: DomainSpec, grid_step: float, p: float = 2.0, probe_count: int = 20,
                    extent: float = 2.0, samples: int = 10, seed: int = 0,
                    g: AnalyticFn | None = None, eigen_samples: int = 10) -> SpectrumRaster:
    """Classify ``alpha`` on a square grid by membership in ``Omega*``.

    For ``samples`` grid points outside ``Omega*`` (chosen with ``seed``)
    the residual ``|(T - alpha) S_alpha g - g|`` is maximised over
    ``probe_count`` points of ``dom``; other grid points carry ``nan``.
    """
    if not grid_step > 0:
        raise ValidationError("grid_step must be positive")
    rng = np.random.default_rng(seed)
    n = int(math.floor(2 * extent / grid_step + 1e-9)) + 1
    axis = -extent + grid_step * np.arange(n)
    A = axis[:, None] + 1j * axis[None, :]
    in_star = geo.star_contains_array(dom, A.ravel()).reshape(A.shape)
    resid = np.full(A.shape, np.nan)
    g = default_test_function(dom) if g is None else g
    check_bound(g, dom)

    outside = np.argwhere(~in_star & (A != 0))
    take = rng.permutation(len(outside))[:samples] if len(outside) else []
    probes = geo.sample_in(dom, probe_count, rng, radius=3.0, margin=1e-3) if len(take) else None
    if probes is not None:
        probes = probes[probes != 0]
    for k in sorted(int(t) for t in take):
        i, j = outside[k]
        alpha = complex(A[i, j])
        h = resolvent_apply(alpha, g, dom)
        resid[i, j] = float(np.max(shift_residual(h, g, alpha, probes)))

    inside = np.argwhere(in_star)
    picks = rng.permutation(len(inside))[:eigen_samples] if len(inside) else []
    eig = [eigen_relation_holds(complex(A[tuple(inside[int(k)])])) for k in picks]
    notes = []
    if p >= 2:
        notes.append("point spectrum on the boundary of Omega* is only claimed for p < 2; "
                     "gamma(alpha) need not be p-integrable there")
    return SpectrumRaster(axis, axis.copy(), in_star, resid, len(take), len(eig), all(eig),
                          tuple(notes))
