import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bergdyn import functions as fn
from bergdyn.errors import (AmbiguousPiece, CoverViolation, SpectrumError, SupportViolation,
                            ValidationError)
from bergdyn.geometry import INF, Complement, Disc, DomainSpec, FullSphere, sample_in
from bergdyn.measures import ArcPiece, Atom, CircleMeasure, Measure, power_shift

HALF = (0.0, math.pi)


def unit(t):
    return complex(math.cos(t), math.sin(t))


@st.composite
def disc_functions(draw):
    """Functions holomorphic on the unit disc: poly part, atoms in the closed
    disc, arcs anywhere on the circle."""
    w = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)
    poly = tuple(draw(st.lists(w, max_size=4)))
    atoms = []
    for _ in range(draw(st.integers(0, 2))):
        r = draw(st.floats(0, 0.9))
        atoms.append(Atom(r * unit(draw(st.floats(-3.1, 3.1))), draw(w)))
    arcs = []
    for _ in range(draw(st.integers(0, 2))):
        t1 = draw(st.floats(-3.1, 3.1))
        arcs.append(ArcPiece(t1, t1 + draw(st.floats(0.05, 6.2)), draw(st.integers(-4, 4)), draw(w)))
    return fn.AnalyticFn(poly, Measure(tuple(atoms), tuple(arcs)))


def inner_points(rng, n=100, r=0.9):
    return r * np.sqrt(rng.random(n)) * np.exp(2j * math.pi * rng.random(n))


def test_evaluate_examples():
    assert fn.evaluate(fn.gamma(0.5), 1.0) == pytest.approx(2.0)
    assert fn.evaluate(fn.polynomial([1, 2, 3]), 2.0) == pytest.approx(17.0)
    assert fn.evaluate(fn.cauchy_transform(Measure.uniform()), 0.3 + 0.4j) == pytest.approx(1.0)
    assert fn.evaluate(fn.f_arc([HALF]), 0) == pytest.approx(0.5)
    assert fn.evaluate(fn.cauchy_transform(Measure.point(0, 1)), 0.7j) == 1.0
    assert fn.evaluate(fn.gamma(0.5), INF) == 0


def test_shift_examples():
    assert fn.taylor_shift(fn.polynomial([1, 2, 3])).poly == (2, 3)
    g = fn.taylor_shift(fn.gamma(0.5))
    assert g.canonical() == fn.gamma(0.5, 0.5).canonical()
    arc = fn.taylor_shift(fn.f_arc([HALF]))
    assert arc.kernel.arcs == (ArcPiece(0.0, math.pi, 1, 1.0),)
    assert fn.iterate(fn.polynomial([1, 2, 3]), 5).is_zero


@given(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
       st.integers(0, 40))
def test_eigen_relation_exact(alpha, n):
    g = fn.gamma(alpha)
    assert fn.taylor_shift(g).canonical() == fn.scale(alpha, g).canonical()
    assert fn.iterate(g, n).canonical() == fn.AnalyticFn((), Measure.point(alpha, alpha ** n)).canonical()


def test_iterate_matches_repeated_shift(rng):
    f = fn.add(fn.f_arc([(0.2, 2.0)]), fn.gamma(0.4j, 2.0)) + fn.polynomial([1, -1, 0.5])
    z = inner_points(rng)
    a = fn.evaluate(fn.iterate(f, 2), z)
    b = fn.evaluate(fn.taylor_shift(fn.taylor_shift(f)), z)
    assert np.max(np.abs(a - b)) < 1e-12


@given(disc_functions())
def test_shift_definition_consistency(f):
    rng = np.random.default_rng(7)
    z = inner_points(rng)
    z = z[np.abs(z) > 1e-3]
    fz = fn.evaluate(f, z)
    lhs = fn.evaluate(fn.taylor_shift(f), z)
    rhs = (fz - fn.evaluate(f, 0j)) / z
    assert np.all(np.abs(lhs - rhs) < 1e-10 * (1 + np.abs(fz)) / np.minimum(1, np.abs(z)))


@given(disc_functions())
def test_commuting_diagram(f):
    nu = f.kernel
    assert fn.taylor_shift(fn.cauchy_transform(nu)) == fn.cauchy_transform(power_shift(nu, 1))


@given(disc_functions(), disc_functions(),
       st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_shift_is_linear(f, g, c):
    rng = np.random.default_rng(3)
    z = inner_points(rng, 40)
    lhs = fn.evaluate(fn.taylor_shift(fn.add(f, fn.scale(c, g))), z)
    rhs = fn.evaluate(fn.taylor_shift(f), z) + c * fn.evaluate(fn.taylor_shift(g), z)
    scale = 1 + np.abs(lhs)
    assert np.all(np.abs(lhs - rhs) < 1e-12 * scale * 10)


def test_add_and_scale_plumbing(rng):
    f = fn.f_arc([HALF]) + fn.gamma(0.3)
    assert fn.scale(0, f).is_zero
    assert (f - f).is_zero
    z = inner_points(rng)
    assert np.max(np.abs(fn.evaluate(fn.add(f, fn.scale(-1, f)), z))) == 0


def test_s_n_transform():
    nu = CircleMeasure.from_measure(Measure.arc(*HALF))
    assert fn.s_n_transform(nu, 0) == fn.cauchy_transform(nu)
    assert fn.s_n_transform(nu, 3).kernel.arcs == (ArcPiece(0.0, math.pi, -3, 1.0),)
    with pytest.raises(SupportViolation):
        fn.s_n_transform(Measure.point(0.5, 1), 2)


@given(st.integers(0, 64), st.floats(-3, 3), st.floats(0.01, 6.2), st.integers(-3, 3))
def test_kitai_representation(n, t1, length, m):
    t = t1 + 0.3
    nu = CircleMeasure((Atom(unit(t), 0.5 - 1j, m),), (ArcPiece(t1, t1 + length, m, 1 + 2j),))
    assert fn.iterate(fn.s_n_transform(nu, n), n) == fn.cauchy_transform(nu)


def test_partial_sum_examples(rng):
    ps = fn.partial_sum(fn.gamma(0.5), 2)
    assert ps.poly == pytest.approx((1, 0.5, 0.25))
    assert fn.partial_sum(fn.polynomial([1, 2, 3, 4]), 1).poly == (1, 2)

    f = fn.f_arc([HALF])
    ks = np.arange(30)
    coeffs = fn.taylor_coefficients(f, 30)
    exact = np.where(ks == 0, 0.5, ((-1.0) ** ks - 1) / (2j * math.pi * np.where(ks == 0, 1, ks)))
    np.testing.assert_allclose(coeffs, exact, atol=1e-15)
    z = inner_points(rng, 50, 0.5)
    series = fn.evaluate(fn.partial_sum(f, 60), z)
    assert np.max(np.abs(series - fn.evaluate(f, z))) < 1e-12

    n = 4
    z = inner_points(rng, 50, 0.3)
    z = z[np.abs(z) > 0.05]
    rem = (fn.evaluate(f, z) - fn.evaluate(fn.partial_sum(f, n - 1), z)) / z ** n
    assert np.max(np.abs(rem - fn.evaluate(fn.iterate(f, n), z))) < 1e-9


def test_support_checks(disc, slit):
    fn.cauchy_transform(Measure.arc(*HALF), disc)
    with pytest.raises(SupportViolation):
        fn.cauchy_transform(Measure.point(2.0, 1), disc)
    # the slit domain only admits the lower half circle
    fn.f_arc([(-math.pi, 0.0)], slit)
    with pytest.raises(SupportViolation):
        fn.f_arc([HALF], slit)
    with pytest.raises(ValidationError):
        fn.check_bound(fn.polynomial([1.0]), slit)


def test_resolvent_constant(disc, rng):
    h = fn.resolvent_apply(2.0, fn.polynomial([1.0]), disc)
    z = inner_points(rng)
    np.testing.assert_allclose(h(z), -0.5, atol=1e-15)


@pytest.mark.parametrize("alpha", [2.0, -3j, 1.5 + 1.5j, 1.1])
@pytest.mark.parametrize("g", [fn.polynomial([1.0]), fn.f_arc([HALF]), fn.gamma(0.4 + 0.2j)])
def test_resolvent_inverts(disc, rng, alpha, g):
    h = fn.resolvent_apply(alpha, g, disc)
    z = sample_in(disc, 100, rng, margin=1e-3)
    assert np.max(fn.shift_residual(h, g, alpha, z)) < 1e-10


def test_resolvent_at_removable_point(disc):
    g = fn.f_arc([HALF])
    alpha = 2.0
    h = fn.resolvent_apply(alpha, g, disc)
    z0 = 1 / alpha
    near = h(np.array([z0, z0 + 1e-3]))
    assert abs(near[0] - near[1]) < 1e-2
    # the extension agrees with the direct formula just outside the switch radius
    a = h(z0 + 5e-7)
    b = h(z0 + 2e-6)
    assert abs(a - b) < 1e-5


def test_resolvent_errors(disc):
    with pytest.raises(SpectrumError):
        fn.resolvent_apply(0.5, fn.polynomial([1.0]), disc)
    with pytest.raises(SpectrumError):
        fn.resolvent_apply(0, fn.polynomial([1.0]), disc)


def test_split_singularities(rng):
    f = fn.gamma(0.5) + fn.gamma(-2.0)
    # poles at 2 and -1/2; the intersection is the annulus-like region between them
    dom1 = DomainSpec(Disc(0j, 1.5))
    dom2 = DomainSpec(Complement(Disc(0j, 0.75)))
    f1, f2 = fn.split_singularities(f, dom1, dom2)
    assert f1.kernel.atoms == (Atom(0.5, 1),)
    assert f2.kernel.atoms == (Atom(-2.0, 1),)
    z = 1.0 * np.exp(2j * math.pi * rng.random(100))
    total = fn.evaluate(f1, z) + fn.evaluate(f2, z)
    assert np.max(np.abs(total - fn.evaluate(f, z))) < 1e-12

    p1, p2 = fn.split_singularities(fn.polynomial([1, 2]), dom1, dom2)
    assert p1.poly == (1, 2) and p2.is_zero

    with pytest.raises(CoverViolation):
        fn.split_singularities(f, DomainSpec(Disc(0j, 0.5)), dom2)
    with pytest.raises(AmbiguousPiece):
        fn.split_singularities(fn.gamma(1.0), dom1, DomainSpec(FullSphere()))
