"""Experiment configuration files.

A config is a list of ``key = value`` lines; ``#`` starts a comment.
Numbers are arithmetic expressions in ``pi`` with an optional imaginary
suffix (``0.5+2i``).  Domains use the constructors of
:mod:`bergdyn.geometry`::

    domain = complement(arc(0, pi))

and functions or measures use the descriptor syntax::

    function = poly[1, 0.5] atoms[(0.5i, 1)] arcs[(0, pi, 0, 1)]

with atoms ``(position, weight[, power])`` and arcs
``(theta1, theta2, power, weight)``.
"""
from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass, field

from . import geometry as geo
from .errors import ValidationError
from .functions import AnalyticFn
from .measures import ArcPiece, Atom, CircleMeasure, Measure
from .quadrature import QuadratureConfig

KINDS = ("norm", "orbit", "sndecay", "kitai", "witness", "span", "raster", "rajchman", "loggrowth")

KEYS = {
    "experiment", "domain", "p", "function", "measure", "target", "N", "K", "n", "nodes",
    "radii", "grid_step", "extent", "probes", "samples", "seed", "output",
    "quad.split_radius", "quad.max_depth", "quad.order", "quad.rel_tol",
}

NEEDS_DOMAIN = {"norm", "orbit", "sndecay", "witness", "span", "raster"}
NEEDS_SEED = {"raster", "kitai"}


class ConfigError(ValidationError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


# ---------------------------------------------------------------------------
# arithmetic


_IMAG = re.compile(r"(?<![\w.])((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)[ij]\b")

_BIN = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow}
_UN = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NAMES = {"pi": math.pi, "i": 1j, "j": 1j}


def _prep(text: str) -> str:
    return _IMAG.sub(r"\1j", text.strip())


def _num(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)) \
            and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BIN:
        return _BIN[type(node.op)](_num(node.left), _num(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UN:
        return _UN[type(node.op)](_num(node.operand))
    if isinstance(node, (ast.Tuple, ast.List)):
        return tuple(_num(e) for e in node.elts)
    raise ValueError(f"unsupported expression {ast.dump(node)}")


def _parse(text: str):
    try:
        return ast.parse(_prep(text), mode="eval").body
    except SyntaxError as exc:
        raise ValueError(f"cannot parse {text!r}: {exc.msg}") from None


def number(text: str):
    """Evaluate an arithmetic expression to an int, float or complex."""
    return _num(_parse(text))


def real(text: str) -> float:
    v = number(text)
    if isinstance(v, complex):
        if v.imag != 0:
            raise ValueError(f"expected a real number, got {text!r}")
        v = v.real
    if isinstance(v, tuple):
        raise ValueError(f"expected a number, got {text!r}")
    return float(v)


def integer(text: str) -> int:
    v = number(text)
    if not isinstance(v, int):
        raise ValueError(f"expected an integer, got {text!r}")
    return v


def _real(v) -> float:
    if isinstance(v, complex):
        if v.imag != 0:
            raise ValueError(f"expected a real number, got {v!r}")
        return v.real
    return float(v)


# ---------------------------------------------------------------------------
# domains


def _domain_node(node) -> geo.Node:
    if not (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)):
        raise ValueError("expected a domain constructor such as disc(0, 1)")
    name, args = node.func.id, node.args
    if node.keywords:
        raise ValueError(f"{name}() takes positional arguments only")

    def nums(k):
        if len(args) != k:
            raise ValueError(f"{name}() takes {k} arguments, got {len(args)}")
        return [_num(a) for a in args]

    if name == "disc":
        c, r = nums(2)
        return geo.Disc(complex(c), _real(r))
    if name == "halfplane":
        n, off = nums(2)
        return geo.HalfPlane(complex(n), _real(off))
    if name == "sphere":
        nums(0)
        return geo.FullSphere()
    if name == "arc":
        t1, t2 = nums(2)
        return geo.ClosedArc(_real(t1), _real(t2))
    if name == "complement":
        if len(args) != 1:
            raise ValueError("complement() takes one argument")
        return geo.Complement(_domain_node(args[0]))
    if name in ("intersection", "union"):
        parts = tuple(_domain_node(a) for a in args)
        return geo.Intersection(parts) if name == "intersection" else geo.Union(parts)
    raise ValueError(f"unknown domain constructor {name!r}")


def parse_domain(text: str) -> geo.DomainSpec:
    return geo.DomainSpec(_domain_node(_parse(text)))


# ---------------------------------------------------------------------------
# descriptors


_SECTION = re.compile(r"\s*(poly|atoms|arcs)\s*\[")


def _sections(text: str) -> dict:
    out: dict = {}
    pos = 0
    while pos < len(text):
        if not text[pos:].strip():
            break
        m = _SECTION.match(text, pos)
        if not m:
            raise ValueError(f"expected poly[...], atoms[...] or arcs[...] at {text[pos:]!r}")
        name = m.group(1)
        if name in out:
            raise ValueError(f"section {name} given twice")
        depth, k = 1, m.end()
        while k < len(text) and depth:
            depth += {"[": 1, "]": -1}.get(text[k], 0)
            k += 1
        if depth:
            raise ValueError(f"unbalanced brackets in {name}[...]")
        out[name] = text[m.end():k - 1]
        pos = k
    return out


def _items(body: str) -> tuple:
    if not body.strip():
        return ()
    v = number("[" + body + "]")
    return v if isinstance(v, tuple) else (v,)


def _atoms(body: str) -> tuple:
    atoms = []
    for item in _items(body):
        if not isinstance(item, tuple) or len(item) not in (2, 3):
            raise ValueError(f"atom must be (position, weight[, power]), got {item!r}")
        power = item[2] if len(item) == 3 else 0
        if not isinstance(power, int):
            raise ValueError(f"atom power must be an integer, got {power!r}")
        atoms.append(Atom(complex(item[0]), complex(item[1]), power))
    return tuple(atoms)


def _arcs(body: str) -> tuple:
    arcs = []
    for item in _items(body):
        if not isinstance(item, tuple) or len(item) != 4:
            raise ValueError(f"arc must be (theta1, theta2, power, weight), got {item!r}")
        t1, t2, m, w = item
        if not isinstance(m, int):
            raise ValueError(f"arc power must be an integer, got {m!r}")
        arcs.append(ArcPiece(_real(t1), _real(t2), m, complex(w)))
    return tuple(arcs)


def parse_function(text: str) -> AnalyticFn:
    sec = _sections(text)
    poly = tuple(complex(c) for c in _items(sec.get("poly", "")))
    kernel = Measure(_atoms(sec.get("atoms", "")), _arcs(sec.get("arcs", "")))
    return AnalyticFn(poly, kernel)


def parse_measure(text: str) -> CircleMeasure:
    sec = _sections(text)
    if "poly" in sec:
        raise ValueError("a measure has no poly[...] section")
    return CircleMeasure(_atoms(sec.get("atoms", "")), _arcs(sec.get("arcs", "")))


def format_function(f: AnalyticFn) -> str:
    """Inverse of :func:`parse_function`."""
    parts = []
    if f.poly:
        parts.append("poly[" + ", ".join(_fmt_num(c) for c in f.poly) + "]")
    if f.kernel.atoms:
        parts.append("atoms[" + ", ".join(
            f"({_fmt_num(a.position)}, {_fmt_num(a.weight)}, {a.power})" for a in f.kernel.atoms) + "]")
    if f.kernel.arcs:
        parts.append("arcs[" + ", ".join(
            f"({q.theta1!r}, {q.theta2!r}, {q.power}, {_fmt_num(q.weight)})"
            for q in f.kernel.arcs) + "]")
    return " ".join(parts)


def _fmt_num(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    sign = "+" if math.copysign(1.0, z.imag) > 0 else "-"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


# ---------------------------------------------------------------------------
# node sets


def parse_nodes(text: str) -> list:
    """``roots(8), roots(16)`` or ``{0, 0.5}, {0, 0.5, 0.25i}``; arcs may be
    given as ``{(0, pi/2), (pi/2, pi)}``."""
    tree = _parse("[" + text.replace("{", "(").replace("}", ",)") + "]")
    sets = []
    for node in tree.elts:
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "roots":
            if len(node.args) != 1:
                raise ValueError("roots() takes one argument")
            k = _num(node.args[0])
            if not isinstance(k, int) or k < 1:
                raise ValueError("roots(k) needs a positive integer k")
            sets.append(("roots", k))
        else:
            items = _num(node)
            if not isinstance(items, tuple):
                items = (items,)
            sets.append(("set", tuple(tuple(_real(x) for x in it) if isinstance(it, tuple)
                                      else complex(it) for it in items)))
    if not sets:
        raise ValueError("no node sets given")
    return sets


# ---------------------------------------------------------------------------
# the config itself


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    domain: geo.DomainSpec | None = None
    p: float = 2.0
    function: AnalyticFn | None = None
    measure: CircleMeasure | None = None
    target: AnalyticFn | None = None
    N: int | None = None
    K: int | None = None
    steps: tuple = ()
    nodes: tuple = ()
    radii: tuple = ()
    grid_step: float = 0.1
    extent: float = 2.0
    probes: int = 20
    samples: int = 10
    seed: int | None = None
    output: str | None = None
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)


def _split_list(text: str) -> list:
    depth, cur, out = 0, [], []
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [s.strip() for s in out if s.strip()]


def parse_config(text: str) -> ExperimentConfig:
    raw: dict = {}
    lines: dict = {}
    for no, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ConfigError(f"expected 'key = value', got {s!r}", no)
        key, value = (part.strip() for part in s.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", no)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r} (first on line {lines[key]})", no)
        if not value:
            raise ConfigError(f"empty value for {key!r}", no)
        raw[key] = value
        lines[key] = no

    def get(key, conv, default=None):
        if key not in raw:
            return default
        try:
            return conv(raw[key])
        except ValidationError as exc:
            raise ConfigError(f"{key}: {exc}", lines[key]) from None
        except (ValueError, TypeError, ZeroDivisionError, OverflowError) as exc:
            raise ConfigError(f"{key}: {exc}", lines[key]) from None

    def need(key):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r} for experiment {kind!r}")

    if "experiment" not in raw:
        raise ConfigError("missing required key 'experiment'")
    kind = raw["experiment"]
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment {kind!r}; expected one of {', '.join(KINDS)}",
                          lines["experiment"])
    if kind in NEEDS_DOMAIN:
        need("domain")
    if kind in NEEDS_SEED:
        need("seed")

    dom = get("domain", parse_domain)
    if dom is not None:
        diag = geo.validate(dom)
        if not diag.ok:
            raise ConfigError(f"domain fails validation:\n{diag}", lines["domain"])

    p = get("p", real, 2.0)
    if not p >= 1:
        raise ConfigError(f"p must be >= 1, got {p}", lines.get("p"))

    quad_kw = {}
    for key, name, conv in (("quad.split_radius", "split_radius", real),
                            ("quad.max_depth", "max_depth", integer),
                            ("quad.order", "base_order", integer),
                            ("quad.rel_tol", "rel_tol", real)):
        v = get(key, conv)
        if v is not None:
            quad_kw[name] = v
    try:
        quad = QuadratureConfig(**quad_kw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None

    cfg = ExperimentConfig(
        kind=kind,
        domain=dom,
        p=p,
        function=get("function", parse_function),
        measure=get("measure", parse_measure),
        target=get("target", parse_function),
        N=get("N", integer),
        K=get("K", integer),
        steps=tuple(get("n", lambda s: [integer(x) for x in _split_list(s)], [])),
        nodes=tuple(get("nodes", parse_nodes, [])),
        radii=tuple(get("radii", lambda s: [real(x) for x in _split_list(s)], [])),
        grid_step=get("grid_step", real, 0.1),
        extent=get("extent", real, 2.0),
        probes=get("probes", integer, 20),
        samples=get("samples", integer, 10),
        seed=get("seed", integer),
        output=raw.get("output"),
        quad=quad,
    )
    _check_kind(cfg, need, lines)
    return cfg


def _check_kind(cfg: ExperimentConfig, need, lines) -> None:
    k = cfg.kind
    if k == "norm":
        need("function")
    elif k == "orbit":
        if cfg.function is None and cfg.measure is None:
            raise ConfigError("missing required key 'function' or 'measure' for experiment 'orbit'")
        need("N")
    elif k in ("sndecay", "kitai"):
        need("measure")
        need("N")
    elif k == "witness":
        need("function")
        need("target")
        need("n")
    elif k == "span":
        need("function")
        need("nodes")
    elif k == "rajchman":
        need("measure")
        need("K")
    elif k == "loggrowth":
        need("radii")
    for key in ("N", "K"):
        v = getattr(cfg, key)
        if v is not None and v < (1 if key == "K" else 0):
            raise ConfigError(f"{key} must be {'positive' if key == 'K' else 'nonnegative'}",
                              lines.get(key))
    if any(n < 0 for n in cfg.steps):
        raise ConfigError("n must be nonnegative", lines.get("n"))
    if any(not 0 <= r < 1 for r in cfg.radii):
        raise ConfigError("radii must lie in [0, 1)", lines.get("radii"))
    if not cfg.grid_step > 0:
        raise ConfigError("grid_step must be positive", lines.get("grid_step"))
