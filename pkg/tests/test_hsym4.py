import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from g2kit.alg_point import EPS, KForm
from g2kit.exceptions import IndefiniteTriple, ZeroVolume
from g2kit.fieldcalc import Domain, FormField
from g2kit.hsym4 import (STANDARD_TRIPLE, HSTriple, classify_triple, definiteness, intersection_matrix,
                         triple_metric)
from g2kit.verify import random_spd

seeds = st.integers(0, 2**32 - 1)


def kf(c):
    return KForm(4, 2, c)


def brute_q(omega, mu=1.0):
    return np.array([[O.wedge(wi, 2, wj, 2, 4)[0] / (2 * mu) for wj in omega] for wi in omega])


def test_standard_triple_is_orthonormal():
    t = HSTriple(STANDARD_TRIPLE)
    np.testing.assert_allclose(intersection_matrix(t), np.eye(3), atol=1e-15)
    g, s = triple_metric(t)
    np.testing.assert_allclose(g, np.eye(4), atol=1e-14)
    assert s == 1


def test_sign_flip_of_one_form():
    w = list(STANDARD_TRIPLE)
    w[2] = -w[2]
    Q = intersection_matrix(HSTriple(w))
    np.testing.assert_allclose(Q, np.eye(3), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_q_matches_brute_force_wedges(seed):
    rng = np.random.default_rng(seed)
    omega = rng.normal(size=(3, 6))
    mu = rng.uniform(0.5, 2.0)
    Q = intersection_matrix(HSTriple([kf(w) for w in omega], KForm(4, 4, [mu])))
    np.testing.assert_allclose(Q, brute_q(omega, mu), atol=1e-12)
    np.testing.assert_allclose(Q, Q.T, atol=0)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_q_covariance(seed):
    rng = np.random.default_rng(seed)
    t = HSTriple([kf(w) for w in rng.normal(size=(3, 6))])
    K = rng.normal(size=(3, 3))
    np.testing.assert_allclose(intersection_matrix(t.transformed(K)), K @ intersection_matrix(t) @ K.T,
                               atol=1e-10)


def test_zero_volume():
    with pytest.raises(ZeroVolume):
        intersection_matrix(HSTriple(STANDARD_TRIPLE, 0.0))


def test_indefinite_triple():
    w = list(STANDARD_TRIPLE)
    w[2] = KForm.from_terms(4, 2, [((0, 3), 1.0), ((1, 2), -1.0)])  # anti-self-dual
    with pytest.raises(IndefiniteTriple):
        triple_metric(HSTriple(w))


def _triple_from_metric(G):
    """Orthonormal triple for the metric G: pull back the standard one by G^(1/2)."""
    w, V = np.linalg.eigh(G)
    P = V @ np.diag(np.sqrt(w)) @ V.T
    return [kf(s.pullback(P).comps) for s in STANDARD_TRIPLE]


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(0.2, 5.0))
def test_metric_scaling_and_defining_relation(seed, lam):
    rng = np.random.default_rng(seed)
    G = random_spd(rng, 4)
    t = HSTriple(_triple_from_metric(G))
    g, s = triple_metric(t)
    np.testing.assert_allclose(g, G, rtol=1e-10, atol=1e-10)
    g2, _ = triple_metric(HSTriple([w * lam**2 for w in t.omega]))
    np.testing.assert_allclose(g2, lam**2 * g, rtol=1e-10, atol=1e-10)
    # g(u, v) dvol_g = 1/6 eps^ijk u⌟w_i ^ v⌟w_j ^ w_k
    u, v = rng.normal(size=(2, 4))
    c = [w.comps for w in t.omega]
    rhs = sum(EPS[i, j, k] * O.wedge(O.wedge(O.interior(u, c[i], 2, 4), 1, O.interior(v, c[j], 2, 4), 1, 4),
                                     2, c[k], 2, 4)[0]
              for i in range(3) for j in range(3) for k in range(3) if EPS[i, j, k]) / 6
    assert abs(u @ g @ v * np.sqrt(np.linalg.det(g)) - rhs) < 1e-9 * max(1, abs(rhs))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_metric_rotation_invariant(seed):
    rng = np.random.default_rng(seed)
    R, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(R) < 0:
        R = -R
    t = HSTriple(STANDARD_TRIPLE)
    np.testing.assert_allclose(triple_metric(t.transformed(R))[0], triple_metric(t)[0], atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_mixed_triple_wedges_to_A(seed):
    rng = np.random.default_rng(seed)
    B = random_spd(rng)
    t = HSTriple(STANDARD_TRIPLE).transformed(np.linalg.inv(B))
    np.testing.assert_allclose(intersection_matrix(t), np.linalg.inv(B @ B), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(-0.9, 0.9))
def test_quotient_triple_metric(seed, a):
    # omega_i = (A_ij e^j ^ e^3 + 1/2 eps_ijk e^jk) / b^2 on R^4 with det A = 1
    rng = np.random.default_rng(seed)
    A = random_spd(rng)
    A /= np.cbrt(np.linalg.det(A))
    b2 = 1 - a * a
    om = []
    for i in range(3):
        terms = [((j, 3), A[i, j] / b2) for j in range(3)]
        terms += [((j, k), 0.5 * EPS[i, j, k] / b2) for j in range(3) for k in range(3) if EPS[i, j, k]]
        om.append(KForm.from_terms(4, 2, terms))
    g, _ = triple_metric(HSTriple(om))
    expect = np.zeros((4, 4))
    expect[:3, :3] = A / b2
    expect[3, 3] = 1 / b2
    np.testing.assert_allclose(g, expect, rtol=1e-10, atol=1e-12)


def test_definiteness_signs():
    assert definiteness(np.eye(3)) == 1
    assert definiteness(-np.eye(3)) == -1
    assert definiteness(np.diag([1.0, -1, 1])) == 0


# -- field classification ---------------------------------------------------

def _field_triple(dom, omega):
    return HSTriple([FormField.from_kform(dom, w) for w in omega])


def test_constant_standard_triple_has_all_flags():
    dom = Domain.torus(4, 8)
    cl = classify_triple(_field_triple(dom, STANDARD_TRIPLE))
    assert cl.closed and cl.hypersymplectic and cl.hyperkahler and cl.torsion_free
    assert max(cl.residuals.values()) < 1e-14


def test_non_closed_perturbation_is_detected():
    dom = Domain.torus(4, 32)
    x = dom.coords()
    bump = 0.01 * np.exp(-((x[0] - np.pi) / 0.4) ** 2)  # defect localised around x0 = pi
    w = list(_field_triple(dom, STANDARD_TRIPLE).omega)
    w[0] = w[0] + FormField(dom, 2, {(2, 3): bump})
    cl = classify_triple(HSTriple(w))
    assert not cl.closed and not cl.hypersymplectic
    assert cl.residuals["d_omega"] > 1e-3
    d = np.broadcast_to(w[0].ext_d().component((0, 2, 3)), dom.shape)
    far = np.abs(x[0].ravel() - np.pi) > 1.5
    assert np.max(np.abs(d[far])) < 1e-3 * np.max(np.abs(d))


def test_classify_needs_fields():
    with pytest.raises(TypeError):
        classify_triple(HSTriple(STANDARD_TRIPLE))
