import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles as O
from g2kit.alg_point import (KForm, Metric, SPD3, EPS, EpsilonConvention, adjugate, hodge, interior,
                             ncomp, spd_invsqrt, wedge)
from g2kit.exceptions import DegenerateMetric, DegreeOverflow, DimensionMismatch, NotPositiveDefinite

finite = st.floats(-2, 2, allow_nan=False, allow_infinity=False)


def e(n, *idx):
    return KForm.basis_form(n, idx)


@st.composite
def form(draw, n, k):
    return KForm(n, k, draw(arrays(float, ncomp(n, k), elements=finite)))


@st.composite
def dims_degrees(draw, total=3):
    n = draw(st.integers(2, 6))
    ks = [draw(st.integers(0, n)) for _ in range(total)]
    return n, ks


def spd(rng, n):
    X = rng.normal(size=(n, n))
    return X @ X.T + n * np.eye(n)


# -- wedge ------------------------------------------------------------------

def test_wedge_basis_cases():
    assert wedge(e(4, 0), e(4, 1)).terms() == {(0, 1): 1.0}
    assert wedge(e(4, 0, 1), e(4, 0)).terms() == {}
    assert wedge(e(4, 0) + e(4, 1), e(4, 2)).terms() == {(0, 2): 1.0, (1, 2): 1.0}
    assert wedge(e(4, 1), e(4, 0)).terms() == {(0, 1): -1.0}


def test_wedge_errors():
    with pytest.raises(DimensionMismatch):
        wedge(e(4, 0), e(5, 0))
    with pytest.raises(DegreeOverflow):
        wedge(e(3, 0, 1), e(3, 0, 2))


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_wedge_matches_shuffle_oracle(data):
    n = data.draw(st.integers(2, 5))
    k1 = data.draw(st.integers(0, n))
    k2 = data.draw(st.integers(0, n - k1))
    a, b = data.draw(form(n, k1)), data.draw(form(n, k2))
    np.testing.assert_allclose(wedge(a, b).comps, O.wedge(a.comps, k1, b.comps, k2, n), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_wedge_graded_commutative_and_associative(data):
    n = data.draw(st.integers(3, 7))
    k1 = data.draw(st.integers(0, 3))
    k2 = data.draw(st.integers(0, min(3, n - k1)))
    k3 = data.draw(st.integers(0, n - k1 - k2))
    a, b, c = data.draw(form(n, k1)), data.draw(form(n, k2)), data.draw(form(n, k3))
    np.testing.assert_allclose(wedge(a, b).comps, (-1) ** (k1 * k2) * wedge(b, a).comps, atol=1e-12)
    np.testing.assert_allclose(wedge(wedge(a, b), c).comps, wedge(a, wedge(b, c)).comps, atol=1e-10)


# -- interior ---------------------------------------------------------------

def test_interior_basis_cases():
    E = np.eye(4)
    assert interior(E[0], e(4, 0, 1)).terms() == {(1,): 1.0}
    assert interior(E[1], e(4, 0, 1)).terms() == {(0,): -1.0}
    assert interior(E[2], e(4, 0, 1)).terms() == {}
    with pytest.raises(DegreeOverflow):
        interior(E[0], KForm(4, 0, [1.0]))


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_interior_matches_oracle_and_is_nilpotent(data):
    n = data.draw(st.integers(2, 6))
    k = data.draw(st.integers(1, n))
    a = data.draw(form(n, k))
    v = data.draw(arrays(float, n, elements=finite))
    np.testing.assert_allclose(interior(v, a).comps, O.interior(v, a.comps, k, n), atol=1e-12)
    if k >= 2:
        np.testing.assert_allclose(interior(v, interior(v, a)).comps, 0, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_interior_is_antiderivation(data):
    n = data.draw(st.integers(2, 6))
    k1 = data.draw(st.integers(1, n - 1))
    k2 = data.draw(st.integers(1, n - k1))
    a, b = data.draw(form(n, k1)), data.draw(form(n, k2))
    v = data.draw(arrays(float, n, elements=finite))
    lhs = interior(v, wedge(a, b))
    rhs = wedge(interior(v, a), b) + wedge(a, interior(v, b)) * (-1) ** k1
    np.testing.assert_allclose(lhs.comps, rhs.comps, atol=1e-10)


# -- Hodge star -------------------------------------------------------------

def test_euclidean_star_of_e123():
    s = hodge(Metric.euclidean(7), None, e(7, 0, 1, 2))
    assert s.terms() == {(3, 4, 5, 6): 1.0}


def test_star_matches_defining_relation(rng):
    for n in (3, 4, 5, 7):
        g = spd(rng, n)
        for k in range(n + 1):
            a = rng.normal(size=ncomp(n, k))
            for o in (1.0, -1.0):
                got = hodge(Metric(g), KForm.volume(n, o), KForm(n, k, a)).comps
                np.testing.assert_allclose(got, O.star(g, a, k, o), atol=1e-10)


def test_double_star_and_symmetry(rng):
    for n in (4, 7):
        g = Metric(spd(rng, n))
        for k in range(n + 1):
            a, b = KForm(n, k, rng.normal(size=ncomp(n, k))), KForm(n, k, rng.normal(size=ncomp(n, k)))
            ss = hodge(g, None, hodge(g, None, a))
            np.testing.assert_allclose(ss.comps, (-1) ** (k * (n - k)) * a.comps, atol=1e-10)
            np.testing.assert_allclose(wedge(a, hodge(g, None, b)).comps, wedge(b, hodge(g, None, a)).comps,
                                       atol=1e-10)
            vol = g.volume()
            np.testing.assert_allclose(wedge(a, hodge(g, None, b)).comps, g.inner(a, b) * vol.comps, atol=1e-10)


def test_interior_is_adjoint_of_wedge(rng):
    n = 6
    g = Metric(spd(rng, n))
    for k in range(1, n + 1):
        a = KForm(n, k, rng.normal(size=ncomp(n, k)))
        b = KForm(n, k - 1, rng.normal(size=ncomp(n, k - 1)))
        v = rng.normal(size=n)
        lhs = g.inner(interior(v, a), b)
        rhs = g.inner(a, wedge(KForm(n, 1, g.flat(v)), b))
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-10)


def test_degenerate_metric_rejected():
    with pytest.raises(DegenerateMetric):
        Metric(np.diag([1.0, 0.0, 1.0]))


# -- 3x3 helpers ------------------------------------------------------------

def test_spd_invsqrt_examples(rng):
    np.testing.assert_allclose(spd_invsqrt(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(spd_invsqrt(np.diag([4.0, 9.0, 25.0])), np.diag([1 / 2, 1 / 3, 1 / 5]), atol=1e-15)
    A = spd(rng, 3)
    B = spd_invsqrt(SPD3(A)).m
    assert np.all(np.linalg.eigvalsh(B) > 0)
    assert np.max(np.abs(np.linalg.inv(B @ B) - A)) < 1e-12 * np.max(np.abs(A))
    with pytest.raises(NotPositiveDefinite):
        spd_invsqrt(np.diag([1.0, -1.0, 2.0]))


@settings(max_examples=50, deadline=None)
@given(arrays(float, (3, 3), elements=finite))
def test_adjugate_identity(M):
    np.testing.assert_allclose(adjugate(M) @ M, np.linalg.det(M) * np.eye(3), atol=1e-10)


def test_epsilon_convention():
    eps = EpsilonConvention()
    assert eps(0, 1, 2) == 1 and eps(1, 0, 2) == -1 and eps(0, 0, 2) == 0
    assert np.array_equal(EPS, -np.swapaxes(EPS, 0, 1))
    assert np.array_equal(EPS, np.transpose(EPS, (1, 2, 0)))


def test_kform_component_count():
    with pytest.raises(DimensionMismatch):
        KForm(7, 3, np.zeros(34))
    assert KForm(7, 0, 2.0).comps.shape == (1,)
    assert KForm.volume(7).comps.shape == (1,)
