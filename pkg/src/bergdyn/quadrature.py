"""Adaptive integration against the normalised spherical measure.

``dm2 = dA / (pi (1 + |z|^2)^2)`` has total mass one and is invariant
under ``z -> 1/z``.  The sphere is covered by two square charts, the plane
chart ``z = p`` and the inverted chart ``z = 1/p``; a smooth partition of
unity in ``|z|`` blends them so that no artificial seam enters the
integrand.  Each chart is integrated by tensor Gauss-Legendre on square
cells refined level by level: a cell is split while its one-level and
two-level estimates disagree by more than its share of the global
tolerance, or while the domain boundary passes through it.  Cells still
cut by the boundary at ``max_depth`` are integrated with a fine masked
midpoint grid and tallied.

Cell contributions are reduced with :func:`math.fsum` in generation order,
and node evaluation is split into fixed-size chunks, so results do not
depend on the number of worker threads.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate as _si

from .errors import BudgetExceeded, NonFiniteSample, ValidationError
from .geometry import DomainSpec

CELL_BUDGET = 10_000_000
CHUNK = 1 << 15
CUT_SEGMENTS = 8
CUT_ORDER = 4
CUT_BISECTIONS = 48


@dataclass(frozen=True)
class QuadratureConfig:
    split_radius: float = 2.0
    max_depth: int = 12
    base_order: int = 8
    rel_tol: float = 1e-7
    min_depth: int = 3

    def __post_init__(self):
        if not self.split_radius > 1:
            raise ValidationError("quad.split_radius must exceed 1")
        if self.max_depth < 1:
            raise ValidationError("quad.max_depth must be >= 1")
        if self.base_order < 2:
            raise ValidationError("quad.order must be >= 2")
        if not self.rel_tol > 0:
            raise ValidationError("quad.rel_tol must be positive")
        if self.min_depth > self.max_depth:
            object.__setattr__(self, "min_depth", self.max_depth)


@dataclass(frozen=True)
class NormEstimate:
    value: float
    error_estimate: float
    cells_used: int
    boundary_cells_discarded: int
    divergent: bool = False

    def csv_row(self) -> list:
        return [self.value, self.error_estimate, self.cells_used, self.boundary_cells_discarded]


CSV_HEADER = ["value", "error", "cells", "boundary_discards"]


def threads_from_env() -> int:
    raw = os.environ.get("BERGDYN_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"BERGDYN_THREADS must be an integer, got {raw!r}")


def density(p: np.ndarray) -> np.ndarray:
    return 1.0 / (math.pi * (1.0 + (p.real ** 2 + p.imag ** 2)) ** 2)


def _psi(x):
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)


def _smooth_step(t):
    """C-infinity step: 1 for t <= 0, 0 for t >= 1."""
    a, b = _psi(1.0 - t), _psi(t)
    return a / (a + b)


@dataclass
class _Charts:
    R: float

    @property
    def r0(self):
        return 0.5 * (1.0 + self.R)

    def half_width(self, chart: int) -> float:
        return self.R if chart == 0 else 1.0 / self.r0

    def phi(self, r):
        return _smooth_step((r - self.r0) / (self.R - self.r0))

    def weight(self, chart: int, p: np.ndarray) -> np.ndarray:
        r = np.abs(p)
        if chart == 0:
            return self.phi(r)
        with np.errstate(divide="ignore"):
            inv = np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), np.inf)
        return 1.0 - np.where(np.isinf(inv), 0.0, self.phi(inv))


class _Integrator:
    def __init__(self, g: Callable, dom: DomainSpec, cfg: QuadratureConfig, threads: int | None):
        self.g = g
        self.dom = dom
        self.cfg = cfg
        self.charts = _Charts(cfg.split_radius)
        x, w = leggauss(cfg.base_order)
        self.x = x
        self.w2 = np.outer(w, w).ravel()
        self.X = np.add.outer(x, 0 * x).ravel()          # x_i varies slowly
        self.Y = np.add.outer(0 * x, x).ravel()
        # perimeter probes: a cell whose nodes all agree can still be cut
        # near its edges, so membership is also tested on the boundary
        e = np.concatenate([[-1.0], x, [1.0]])
        one = np.ones_like(e)
        self.PX = np.concatenate([e, e, -one, one])
        self.PY = np.concatenate([-one, one, e, e])
        self.threads = threads if threads is not None else threads_from_env()
        self.cells_used = 0

    # -- node evaluation ----------------------------------------------------
    def _member(self, chart: int, p: np.ndarray) -> np.ndarray:
        if chart == 0:
            return self.dom.contains_array(p)
        out = np.empty(p.shape, dtype=bool)
        zero = p == 0
        out[zero] = self.dom.contains_infinity
        out[~zero] = self.dom.contains_array(1.0 / p[~zero])
        return out

    def _eval_chunk(self, chart: int, p: np.ndarray):
        member = self._member(chart, p)
        chi = self.charts.weight(chart, p)
        live = member & (chi > 0)
        vals = np.zeros(p.shape, dtype=complex)
        if live.any():
            pl = p[live]
            z = pl if chart == 0 else 1.0 / pl
            gv = np.asarray(self.g(z), dtype=complex)
            if not np.all(np.isfinite(gv)):
                bad = z[~np.isfinite(gv)][0]
                raise NonFiniteSample(f"integrand not finite at z={complex(bad)!r}")
            vals[live] = gv * density(pl) * chi[live]
        return vals, member

    def eval_points(self, chart: int, p: np.ndarray):
        n = p.size
        chunks = [p[i:i + CHUNK] for i in range(0, n, CHUNK)]
        if self.threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(self.threads) as ex:
                res = list(ex.map(lambda c: self._eval_chunk(chart, c), chunks))
        else:
            res = [self._eval_chunk(chart, c) for c in chunks]
        if not res:
            return np.zeros(0, complex), np.zeros(0, bool)
        return np.concatenate([r[0] for r in res]), np.concatenate([r[1] for r in res])

    def gl_cells(self, chart: int, cx: np.ndarray, cy: np.ndarray, hw: float):
        """Masked GL estimates for cells of half-width ``hw``."""
        self.cells_used += cx.size
        if self.cells_used > CELL_BUDGET:
            raise BudgetExceeded(f"quadrature needs more than {CELL_BUDGET} cells")
        px = cx[:, None] + hw * self.X[None, :]
        py = cy[:, None] + hw * self.Y[None, :]
        vals, member = self.eval_points(chart, (px + 1j * py).ravel())
        k = self.X.size
        vals = vals.reshape(cx.size, k)
        member = member.reshape(cx.size, k)
        q = (vals * self.w2[None, :]).sum(axis=1) * hw * hw
        ex = cx[:, None] + hw * self.PX[None, :]
        ey = cy[:, None] + hw * self.PY[None, :]
        edge = self._member(chart, (ex + 1j * ey).ravel()).reshape(cx.size, -1)
        allm = np.concatenate([member, edge], axis=1)
        mixed = allm.any(axis=1) & ~allm.all(axis=1)
        anyin = allm.any(axis=1)
        return q, mixed, anyin, vals

    def _cut_rule(self, chart: int, cx: np.ndarray, cy: np.ndarray, hw: float, cols: int):
        """Points (chart coordinates) and area weights of a cut-cell rule.

        Each cell is swept by ``cols`` Gauss-Legendre columns.  Along a
        column, membership is sampled on ``CUT_SEGMENTS`` intervals; every
        sign change is located by bisection and the inside part of each
        interval gets a ``CUT_ORDER``-point Gauss rule.
        """
        xc, wc = leggauss(cols)
        yq, wq = leggauss(CUT_ORDER)
        M = CUT_SEGMENTS
        yj = np.linspace(-1.0, 1.0, M + 1)
        C = cx.size
        X = np.broadcast_to(cx[:, None, None] + hw * xc[None, :, None], (C, cols, M + 1))
        Y = np.broadcast_to(cy[:, None, None] + hw * yj[None, None, :], (C, cols, M + 1))
        ins = self._member(chart, (X + 1j * Y).ravel()).reshape(C, cols, M + 1)
        ia, ib = ins[..., :-1], ins[..., 1:]
        lo = np.broadcast_to(yj[:-1], ia.shape).copy()
        hi = np.broadcast_to(yj[1:], ia.shape).copy()
        flip = ia != ib
        if flip.any():
            xs = X[..., :-1][flip]
            yin = np.where(ia[flip], lo[flip], hi[flip])
            yout = np.where(ia[flip], hi[flip], lo[flip])
            ycy = np.broadcast_to(cy[:, None, None], ia.shape)[flip]
            for _ in range(CUT_BISECTIONS):
                mid = 0.5 * (yin + yout)
                m = self._member(chart, xs + 1j * (ycy + hw * mid))
                yin = np.where(m, mid, yin)
                yout = np.where(m, yout, mid)
            lo_f, hi_f = lo[flip], hi[flip]
            lo[flip] = np.where(ia[flip], lo_f, yin)
            hi[flip] = np.where(ia[flip], yin, hi_f)
        live = ia | ib
        lo, hi = lo[live], hi[live]
        xcol = (X[..., :-1])[live]
        wcol = np.broadcast_to(wc[None, :, None], ia.shape)[live]
        ycen = np.broadcast_to(cy[:, None, None], ia.shape)[live]
        owner = np.broadcast_to(np.arange(C)[:, None, None], ia.shape)[live]
        half = 0.5 * (hi - lo)
        yy = 0.5 * (hi + lo)[:, None] + half[:, None] * yq[None, :]
        pts = xcol[:, None] + 1j * (ycen[:, None] + hw * yy)
        w = (hw * wcol * hw * half)[:, None] * wq[None, :]
        return pts.ravel(), w.ravel(), np.repeat(owner, CUT_ORDER)

    def boundary_cells(self, chart: int, cx: np.ndarray, cy: np.ndarray, hw: float):
        """Cut-cell estimates for cells crossed by the boundary at max depth."""
        C = cx.size
        out = []
        for cols in (self.cfg.base_order, max(2, self.cfg.base_order // 2)):
            pts, w, owner = self._cut_rule(chart, cx, cy, hw, cols)
            vals, _ = self.eval_points(chart, pts)
            q = np.zeros(C, dtype=complex)
            np.add.at(q, owner, vals * w)
            out.append((q, pts, w))
        (q, pts, w), (q2, _, _) = out
        center_out = ~self._member(chart, cx + 1j * cy)
        return q, np.abs(q - q2), pts, w, center_out

    # -- driver -------------------------------------------------------------
    def run(self, want_rule: bool = False):
        cfg = self.cfg
        contrib: list = []        # complex contributions in generation order
        errs: list = []
        unresolved: list = []     # errors of max-depth cells that failed the test
        boundary_count = 0
        discarded = 0
        rule_pts: list = []
        rule_w: list = []
        # total support area: tolerance is shared out by cell area
        area_total = sum((2 * self.charts.half_width(c)) ** 2 for c in (0, 1))

        level0 = cfg.min_depth
        states = []
        for chart in (0, 1):
            H = self.charts.half_width(chart)
            n = 2 ** level0
            hw = H / n
            c = -H + hw * (2 * np.arange(n) + 1)
            cx, cy = np.meshgrid(c, c, indexing="ij")
            cx, cy = cx.ravel(), cy.ravel()
            near = np.hypot(np.maximum(np.abs(cx) - hw, 0), np.maximum(np.abs(cy) - hw, 0))
            keep = near < H
            cx, cy = cx[keep], cy[keep]
            q, mixed, anyin, _ = self.gl_cells(chart, cx, cy, hw)
            keep = anyin
            states.append((chart, cx[keep], cy[keep], q[keep], mixed[keep], hw))

        level = level0
        est = sum(complex(np.sum(s[3])) for s in states)
        while states:
            next_states = []
            at_max = level + 1 >= cfg.max_depth
            # first pass: children for every active cell
            staged = []
            for chart, cx, cy, q, mixed, hw in states:
                if cx.size == 0:
                    continue
                h2 = hw / 2
                ccx = np.stack([cx - h2, cx - h2, cx + h2, cx + h2], axis=1).ravel()
                ccy = np.stack([cy - h2, cy + h2, cy - h2, cy + h2], axis=1).ravel()
                cq, cmixed, canyin, cvals = self.gl_cells(chart, ccx, ccy, h2)
                qsum = cq.reshape(-1, 4).sum(axis=1)
                staged.append((chart, cx, cy, q, mixed, hw, ccx, ccy, cq, cmixed, canyin, cvals, qsum))
            est_now = sum(complex(np.sum(s[12])) for s in staged) + math.fsum(c.real for c in contrib) \
                + 1j * math.fsum(c.imag for c in contrib)
            if est_now != 0:
                est = est_now
            scale = abs(est)
            for (chart, cx, cy, q, mixed, hw, ccx, ccy, cq, cmixed, canyin, cvals, qsum) in staged:
                h2 = hw / 2
                diff = np.abs(q - qsum)
                straddle = mixed | cmixed.reshape(-1, 4).any(axis=1)
                tol = cfg.rel_tol * scale * (4 * hw * hw) / area_total
                accept = ~straddle & (diff <= tol)
                for i in np.nonzero(accept)[0]:
                    contrib.append(complex(qsum[i]))
                    errs.append(float(diff[i]))
                if want_rule and accept.any():
                    idx = np.nonzero(np.repeat(accept, 4))[0]
                    self._add_rule(rule_pts, rule_w, chart, ccx[idx], ccy[idx], h2)
                refine = ~accept
                if not refine.any():
                    continue
                ridx = np.nonzero(np.repeat(refine, 4))[0]
                rdiff = np.repeat(diff, 4)[ridx]
                kcx, kcy, kq = ccx[ridx], ccy[ridx], cq[ridx]
                kmixed, kany = cmixed[ridx], canyin[ridx]
                keep = kany
                if at_max:
                    # children cannot be refined: finalise them
                    plain = keep & ~kmixed
                    for i in np.nonzero(plain)[0]:
                        contrib.append(complex(kq[i]))
                        e = float(rdiff[i]) / 4.0
                        errs.append(e)
                        unresolved.append(e)
                    if want_rule and plain.any():
                        self._add_rule(rule_pts, rule_w, chart, kcx[plain], kcy[plain], h2)
                    cut = keep & kmixed
                    if cut.any():
                        bq, berr, bpts, bw, center_out = self.boundary_cells(
                            chart, kcx[cut], kcy[cut], h2)
                        boundary_count += int(cut.sum())
                        discarded += int(center_out.sum())
                        contrib.extend(complex(v) for v in bq)
                        errs.extend(float(e) for e in berr)
                        if want_rule:
                            self._add_weighted(rule_pts, rule_w, chart, bpts, bw)
                else:
                    next_states.append((chart, kcx[keep], kcy[keep], kq[keep], kmixed[keep], h2))
            states = next_states
            level += 1

        re = math.fsum(c.real for c in contrib)
        im = math.fsum(c.imag for c in contrib)
        err = math.fsum(errs)
        rule = None
        if want_rule:
            rule = (np.concatenate(rule_pts) if rule_pts else np.zeros(0, complex),
                    np.concatenate(rule_w) if rule_w else np.zeros(0))
        return complex(re, im), err, self.cells_used, boundary_count, discarded, \
            math.fsum(unresolved), rule

    def _add_rule(self, pts, ws, chart, cx, cy, hw):
        px = (cx[:, None] + hw * self.X[None, :]).ravel()
        py = (cy[:, None] + hw * self.Y[None, :]).ravel()
        area = np.tile(self.w2, cx.size) * hw * hw
        self._add_weighted(pts, ws, chart, px + 1j * py, area)

    def _add_weighted(self, pts, ws, chart, p, area):
        member = self._member(chart, p)
        chi = self.charts.weight(chart, p)
        live = member & (chi > 0)
        pl = p[live]
        pts.append(pl if chart == 0 else 1.0 / pl)
        ws.append(area[live] * density(pl) * chi[live])


# ---------------------------------------------------------------------------
# public API


DIVERGENCE_RATIO = 1e-3


def _integrate(g, dom: DomainSpec, cfg: QuadratureConfig | None, threads: int | None = None,
               want_rule: bool = False):
    cfg = cfg or QuadratureConfig()
    return _Integrator(g, dom, cfg, threads).run(want_rule)


def sphere_integral(g: Callable, dom: DomainSpec, cfg: QuadratureConfig | None = None,
                    threads: int | None = None) -> NormEstimate:
    """``integral_Omega g dm2`` for a nonnegative evaluator ``g``."""
    val, err, cells, nb, discarded, unresolved, _ = _integrate(
        lambda z: np.asarray(g(z), dtype=float) + 0j, dom, cfg, threads)
    value = max(val.real, 0.0)
    # cells that never settled at max_depth carry a non-integrable or
    # badly resolved singularity; for a convergent integral their share shrinks
    divergent = value > 0 and unresolved > DIVERGENCE_RATIO * value
    return NormEstimate(value, err, cells, discarded, bool(divergent))


def complex_integral(g: Callable, dom: DomainSpec, cfg: QuadratureConfig | None = None,
                     threads: int | None = None) -> tuple:
    """``(integral_Omega g dm2, error_estimate)`` for a complex evaluator."""
    val, err, *_ = _integrate(g, dom, cfg, threads)
    return val, err


def _as_evaluator(f):
    from .functions import AnalyticFn, evaluator
    if isinstance(f, AnalyticFn):
        # nodes may sit arbitrarily close to a log-singular boundary arc
        return evaluator(f, check=False)
    return f


def ap_norm(f, dom: DomainSpec, p: float = 2.0, cfg: QuadratureConfig | None = None,
            threads: int | None = None) -> NormEstimate:
    """Bergman norm ``(integral_Omega |f|^p dm2)^(1/p)``."""
    if not p >= 1:
        raise ValidationError(f"p must be >= 1, got {p}")
    ev = _as_evaluator(f)
    est = sphere_integral(lambda z: np.abs(ev(z)) ** p, dom, cfg, threads)
    if est.value == 0:
        return NormEstimate(0.0, est.error_estimate ** (1.0 / p), est.cells_used,
                            est.boundary_cells_discarded, est.divergent)
    value = est.value ** (1.0 / p)
    err = value * est.error_estimate / (p * est.value)
    return NormEstimate(value, err, est.cells_used, est.boundary_cells_discarded, est.divergent)


def inner_product(f, g, dom: DomainSpec, cfg: QuadratureConfig | None = None,
                  threads: int | None = None) -> complex:
    """``integral_Omega f conj(g) dm2``."""
    ef, eg = _as_evaluator(f), _as_evaluator(g)
    val, _ = complex_integral(lambda z: ef(z) * np.conj(eg(z)), dom, cfg, threads)
    return val


def node_rule(g, dom: DomainSpec, cfg: QuadratureConfig | None = None,
              threads: int | None = None) -> tuple:
    """Points and weights of the final adaptive rule built for integrand ``g``.

    ``sum(w * G(z))`` then approximates ``integral_Omega G dm2`` for any ``G``
    resolved by the same cells.
    """
    *_, rule = _integrate(lambda z: np.asarray(g(z), dtype=float) + 0j, dom, cfg, threads,
                          want_rule=True)
    return rule


# ---------------------------------------------------------------------------
# one-dimensional checks


def circle_mean_abs_gamma(r: float) -> float:
    """``h(r) = integral_T dm(alpha) / |1 - alpha r|`` by adaptive quadrature."""
    if not 0 <= r < 1:
        raise ValueError("r must lie in [0, 1)")
    f = lambda t: 1.0 / abs(1.0 - r * complex(math.cos(t), math.sin(t)))
    # integrand is even and peaks at t = 0 with width ~ 1 - r
    edges = [0.0]
    w = max(1.0 - r, 1e-16)
    while edges[-1] + w < math.pi:
        edges.append(edges[-1] + w)
        w *= 4.0
    edges.append(math.pi)
    parts = [_si.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=200)[0]
             for a, b in zip(edges[:-1], edges[1:])]
    return math.fsum(parts) / math.pi


@dataclass(frozen=True)
class LogGrowthRow:
    r: float
    h: float
    ratio: float


def log_growth_check(radii, dom: DomainSpec | None = None) -> list:
    """``h(r)`` and ``h(r) / log(1/(1-r))`` for radii in (0, 1)."""
    rows = []
    for r in radii:
        r = float(r)
        if not 0 <= r < 1:
            raise ValueError("radii must lie in [0, 1)")
        h = circle_mean_abs_gamma(r)
        ratio = h / math.log(1.0 / (1.0 - r)) if r > 0 else math.inf
        rows.append(LogGrowthRow(r, h, ratio))
    return rows
