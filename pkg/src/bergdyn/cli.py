"""Command-line front end: ``bergdyn run|validate|version``."""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import __version__
from . import geometry as geo
from .config import ExperimentConfig, format_function, parse_config
from .dynamics import (KITAI_HEADER, ORBIT_HEADER, RASTER_HEADER, SPAN_HEADER, WITNESS_HEADER,
                       kitai_identity_check, kitai_samples, orbit_decay, roots_of_unity, s_n_decay,
                       span_residual, spectrum_raster, transitivity_witness)
from .errors import BergdynError, NumericalError, ValidationError
from .functions import cauchy_transform, check_bound
from .measures import rajchman_decay
from .quadrature import CSV_HEADER, ap_norm, log_growth_check

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2

NON_RAJCHMAN = ("non-Rajchman: the measure has atoms on the unit circle, "
                "so its Fourier-Stieltjes coefficients do not tend to 0")


class Divergent(NumericalError):
    pass


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _csv(header, rows) -> str:
    out = [",".join(header)]
    out.extend(",".join(_cell(v) for v in row) for row in rows)
    return "\n".join(out) + "\n"


def _no_divergence(estimates, what: str) -> None:
    for e in estimates:
        if e.divergent:
            raise Divergent(f"{what}: quadrature did not stabilise near a boundary singularity "
                            f"(value {e.value!r}); the integral is likely divergent")


def _orbit_summary(rec, label: str) -> list:
    lines = [f"{label} checkpoints: {len(rec.entries)}"]
    for n, e in rec.entries:
        lines.append(f"  n = {n}: {e.value!r} (error {e.error_estimate!r})")
    if rec.non_rajchman:
        lines.append(NON_RAJCHMAN)
    return lines


def execute(cfg: ExperimentConfig) -> tuple:
    """Run one experiment; returns ``(csv_text, summary_lines)``."""
    k, dom, p, quad = cfg.kind, cfg.domain, cfg.p, cfg.quad
    summary = [f"experiment: {k}"]
    if dom is not None:
        summary.append(f"domain: {dom.expr()}")
    if k in ("norm", "orbit", "sndecay", "witness"):
        summary.append(f"p: {p!r}")

    if k == "norm":
        f = cfg.function
        check_bound(f, dom)
        est = ap_norm(f, dom, p, quad)
        _no_divergence([est], "norm")
        summary += [f"function: {format_function(f)}", f"value = {est.value!r}",
                    f"error estimate = {est.error_estimate!r}", f"cells = {est.cells_used}",
                    f"boundary cells discarded = {est.boundary_cells_discarded}"]
        return _csv(CSV_HEADER, [est.csv_row()]), summary

    if k == "orbit":
        f = cfg.function if cfg.function is not None else cauchy_transform(cfg.measure)
        rec = orbit_decay(f, dom, p, cfg.N, quad)
        _no_divergence([e for _, e in rec.entries], "orbit")
        summary += [f"function: {rec.descriptor}"] + _orbit_summary(rec, "orbit norm")
        return _csv(ORBIT_HEADER, rec.rows()), summary

    if k == "sndecay":
        rec = s_n_decay(cfg.measure, dom, p, cfg.N, quad)
        _no_divergence([e for _, e in rec.entries], "S_n decay")
        summary += [f"measure: {rec.descriptor}"] + _orbit_summary(rec, "S_n norm")
        return _csv(ORBIT_HEADER, rec.rows()), summary

    if k == "kitai":
        rep = kitai_identity_check(cfg.measure, cfg.N, kitai_samples(seed=cfg.seed), dom)
        summary += [f"measure: {format_function(cauchy_transform(cfg.measure))}",
                    f"n range: 0..{cfg.N}",
                    f"representation identity exact: {'yes' if rep.exact else 'NO'}",
                    f"max pointwise deviation = {rep.max_deviation!r}"]
        if any(a.weight != 0 for a in cfg.measure.atoms):
            summary.append(NON_RAJCHMAN)
        return _csv(KITAI_HEADER, [list(r) for r in rep.rows]), summary

    if k == "witness":
        summary += [f"source: {format_function(cfg.function)}",
                    f"target: {format_function(cfg.target)}"]
        rows = []
        for n in cfg.steps:
            w = transitivity_witness(cfg.function, cfg.target, n, dom, p, quad)
            _no_divergence([w.dist_to_source, w.dist_after_iteration], "witness")
            rows.append(w.row())
            summary.append(f"  n = {n}: |u - f| = {w.dist_to_source.value!r}, "
                           f"|T^n u - g| = {w.dist_after_iteration.value!r}")
        return _csv(WITNESS_HEADER, rows), summary

    if k == "span":
        sets = [roots_of_unity(v) if tag == "roots" else list(v) for tag, v in cfg.nodes]
        curve = span_residual(cfg.function, sets, dom, quad)
        summary += [f"target: {format_function(cfg.function)}",
                    f"target norm (discretised) = {curve.target_norm!r}"]
        for n, r, rank in zip(curve.node_counts, curve.residuals, curve.ranks):
            summary.append(f"  {n} nodes: residual {r!r} (rank {rank})")
        return _csv(SPAN_HEADER, curve.rows()), summary

    if k == "raster":
        r = spectrum_raster(dom, cfg.grid_step, p, cfg.probes, cfg.extent, cfg.samples, cfg.seed)
        rows = r.rows()
        summary += [f"grid: {len(r.re)} x {len(r.im)} points, step {cfg.grid_step!r}",
                    f"points in Omega*: {int(r.in_star.sum())}",
                    f"resolvent checks: {r.sampled}, max residual = {r.max_residual!r}",
                    f"eigen-relation checks: {r.eigen_checked}, "
                    f"all exact: {'yes' if r.eigen_ok else 'NO'}"]
        arcs = geo.star_arcs(dom)
        summary.append("Omega* on the unit circle: " + (
            "none found" if arcs.empty else
            ", ".join(f"[{a!r}, {b!r}]" for a, b in arcs.arcs)))
        summary += [f"note: {n}" for n in r.notes]
        return _csv(RASTER_HEADER, rows), summary

    if k == "rajchman":
        t = rajchman_decay(cfg.measure, cfg.K)
        summary += [f"measure: {format_function(cauchy_transform(cfg.measure))}",
                    f"K = {cfg.K}", f"tail constant C = {t.tail_constant!r}"]
        if t.atom_dominated:
            summary.append(NON_RAJCHMAN)
        return _csv(["k", "abs_coeff"], [list(r) for r in t.rows()]), summary

    if k == "loggrowth":
        rows = log_growth_check(cfg.radii)
        summary += [f"  r = {row.r!r}: h = {row.h!r}, ratio = {row.ratio!r}" for row in rows]
        finite = [row.ratio for row in rows if math.isfinite(row.ratio)]
        if finite:
            summary.append(f"max ratio = {max(finite)!r}")
        return _csv(["r", "h", "ratio"], [[row.r, row.h, row.ratio] for row in rows]), summary

    raise ValidationError(f"unknown experiment {k!r}")


def _prefix(cfg: ExperimentConfig, path: Path) -> Path:
    return Path(cfg.output) if cfg.output else path.with_suffix("")


def _load(path: Path) -> ExperimentConfig:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def run(path: str | os.PathLike, stream=None) -> int:
    stream = stream or sys.stderr
    path = Path(path)
    csv_path = summary_path = None
    try:
        cfg = _load(path)
        prefix = _prefix(cfg, path)
        csv_path = prefix.parent / (prefix.name + ".csv")
        summary_path = prefix.parent / (prefix.name + ".summary.txt")
        csv_text, summary = execute(cfg)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        csv_path.write_text(csv_text)
        summary_path.write_text("\n".join(summary) + "\n")
        return EXIT_OK
    except BergdynError as exc:
        for q in (csv_path, summary_path):
            if q is not None and q.exists():
                q.unlink()
        print(f"error: {exc}", file=stream)
        return EXIT_NUMERIC if isinstance(exc, NumericalError) else EXIT_INVALID


def validate(path: str | os.PathLike, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        cfg = _load(Path(path))
    except ValidationError as exc:
        print(f"error: {exc}", file=stream)
        return EXIT_INVALID
    print(f"ok: {cfg.kind} experiment", file=stream)
    if cfg.domain is not None:
        print(geo.validate(cfg.domain), file=stream)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bergdyn",
                                     description="Taylor shift experiments on Bergman spaces")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_val = sub.add_parser("validate", help="parse and validate a config")
    p_val.add_argument("config")
    sub.add_parser("version", help="print the version")
    args = parser.parse_args(argv)
    if args.command == "version":
        print(f"bergdyn {__version__}")
        return EXIT_OK
    if args.command == "validate":
        return validate(args.config)
    return run(args.config)


if __name__ == "__main__":
    sys.exit(main())
