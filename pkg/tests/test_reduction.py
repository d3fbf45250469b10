import numpy as np
import pytest

from g2kit import models as M
from g2kit.exceptions import DependentGenerators, MixedType, NonFlatLeaf, SingularBasisChange, WrongType
from g2kit.fieldcalc import Domain
from g2kit.g2_point import PHI_O
from g2kit.hsym4 import classify_triple, intersection_matrix
from g2kit.reduction import (change_generators, classify_action, classify_arrays, leaf_change_residual,
                             leaf_triples, orbit_type_of, quotient_triple, quotient_triple_point)

E = np.eye(7)


def test_type_thresholds():
    assert list(orbit_type_of(np.array([0.0, 5e-11, 0.3, 1 - 5e-9, -1.0]))) == [3, 3, 1, 2, 2]


@pytest.mark.parametrize("key,t,a", [("associative", 2, 1.0), ("isotropic", 3, 0.0), ("generic", 1, 2**-0.5)])
def test_flat_quotient_table(key, t, a, rng):
    r = classify_action(M.flat_quotient(M.PI_PRESETS[key]), n=8, rng=rng)
    assert r.orbit_type == t
    assert np.max(np.abs(r.a - a)) < 1e-10
    assert r.residuals["reconstruct_phi"] < 1e-9


@pytest.mark.parametrize("name", M.MODEL_NAMES)
def test_every_model_has_its_expected_type(name, rng):
    m = M.build(name)
    r = classify_action(m, n=12, rng=rng, grid=10 if m.is_invariant else None)
    assert r.orbit_type == m.expected_type
    res = {**r.residuals, **r.field_residuals}
    assert max(res.values()) < 1e-8, res
    s = r.summary()
    assert s["orbit_type"] == m.expected_type and s["samples"] == len(r.points)


def test_type_specific_invariants(rng):
    r = classify_action(M.product_t3(), n=12, rng=rng)
    assert np.allclose(r.a, 1.0, atol=1e-12) and r.residuals["det_B_variation"] < 1e-8
    r = classify_action(M.type1_family(0.3), n=12, rng=rng)
    assert np.allclose(r.a, 0.3, atol=1e-12) and r.residuals["a_variation"] < 1e-8
    r = classify_action(M.flat_s1_c3(), n=12, rng=rng)
    assert r.residuals["phi_U"] < 1e-10


def test_t4_field_residuals(rng):
    r = classify_action(M.t4_diagonal(), n=8, rng=rng, grid=16)
    assert r.field_residuals["d_phi"] < 1e-8
    assert r.field_residuals["beta_alpha_equation"] < 1e-8


def test_mixed_types_are_reported_with_witnesses():
    phi = np.broadcast_to(PHI_O.comps, (2, 35))
    U = np.stack([E[[0, 1, 2]], E[[0, 1, 3]]])
    pts = np.array([[0.0] * 7, [1.0] + [0.0] * 6])
    with pytest.raises(MixedType) as err:
        classify_arrays(phi, U, pts)
    assert sorted(t for t, _ in err.value.witnesses) == [2, 3]


def test_dependent_generators_everywhere():
    with pytest.raises(DependentGenerators):
        classify_arrays(PHI_O.comps[None], np.array([[E[0], E[1], E[0]]]))


def test_stabilizer_samples_are_recorded(rng):
    m = M.flat_s1_c3()
    pts = np.vstack([m.sample(rng, 4), np.zeros((1, 7))])
    r = classify_action(m, points=pts, rng=rng)
    assert len(r.points) == 4
    assert sorted(d for _, d in r.stabilizers) == [0, 0, 0, 0, 2]


# -- quotient triples -------------------------------------------------------

def test_flat_type1_quotient_is_hyperkahler():
    q = quotient_triple(M.type1_family(0.5, A=M.constant_flat_A()), domain=Domain.torus(4, 8))
    cl = classify_triple(q.triple)
    assert cl.hypersymplectic and cl.hyperkahler
    assert q.residuals["wedge"] < 1e-12


def test_t4_quotient_is_hypersymplectic_not_hyperkahler():
    q = quotient_triple(M.t4_diagonal(), domain=Domain.torus(4, 16))
    cl = classify_triple(q.triple)
    assert cl.hypersymplectic and not cl.hyperkahler
    assert cl.residuals["q_variation"] > 1e-3


def test_product_round_trip(rng):
    # product_t3(t) recovers t; the pointwise triple satisfies omega_i ^ omega_j = 2 A_ij mu
    m = M.product_t3()
    q = quotient_triple(m, domain=Domain.torus(4, 8), rng=rng)
    Q = intersection_matrix(q.triple)
    np.testing.assert_allclose(Q.reshape(-1, 3, 3), np.broadcast_to(np.eye(3), Q.reshape(-1, 3, 3).shape),
                               atol=1e-14)
    qp = quotient_triple_point(m, m.sample(rng, 10))
    assert qp.residuals["wedge"] < 1e-12 and qp.residuals["horizontal"] < 1e-12
    assert classify_triple(q.triple).torsion_free


def test_type1_pointwise_triple(rng):
    m = M.flat_quotient(M.PI_PRESETS["generic"])
    q = quotient_triple_point(m, rng.uniform(0, 1, (8, 7)))
    assert q.residuals["wedge"] < 1e-12 and q.residuals["horizontal"] < 1e-12
    # the reference 4-form is nowhere zero and A is positive definite
    assert np.all(np.max(np.abs(q.triple.mu.comps), axis=-1) > 1e-6)
    assert np.all(np.linalg.eigvalsh(q.A) > 0)


def test_quotient_triple_rejects_isotropic():
    with pytest.raises(WrongType):
        quotient_triple(M.flat_s1_c3())


# -- leaves ---------------------------------------------------------------

def test_leaf_of_isotropic_torus_quotient_is_constant_hyperkahler(rng):
    m = M.flat_quotient(M.PI_PRESETS["isotropic"])
    L = leaf_triples(m, m.sample(rng, 1)[0])
    cl = classify_triple(L.triple)
    assert cl.hyperkahler and cl.residuals["q_variation"] == 0.0
    # generators are V / (2 pi): A = I / (4 pi^2), so adj(B^2) = A / det A = (4 pi^2)^2 I
    Q = intersection_matrix(L.triple).reshape(-1, 3, 3)
    np.testing.assert_allclose(Q, np.broadcast_to((2 * np.pi) ** 4 * np.eye(3), Q.shape), rtol=1e-12)


@pytest.mark.parametrize("m", [M.flat_t2_r_c2(), M.flat_s1_c3()], ids=lambda m: m.name)
def test_leaf_triples_of_flat_isotropic_models(m, rng):
    L = leaf_triples(m, m.sample(rng, 1)[0])
    assert L.residuals["d_omega"] < 1e-8
    assert L.residuals["phi_restriction"] < 1e-12
    assert L.residuals["starphi_volume"] < 1e-10
    assert L.residuals["closed_form"] < 1e-10
    A = np.einsum("...ai,...bi->...ab", L.frame[..., :3, :], L.frame[..., :3, :])
    Q = intersection_matrix(L.triple)
    np.testing.assert_allclose(Q, A / np.linalg.det(A)[..., None, None], rtol=1e-9, atol=1e-9)


def test_leaf_errors(rng):
    with pytest.raises(NonFlatLeaf):
        m = M.t4_diagonal()
        leaf_triples(m, m.sample(rng, 1)[0])
    with pytest.raises(WrongType):
        m = M.flat_quotient(M.PI_PRESETS["generic"])
        leaf_triples(m, m.sample(rng, 1)[0])


# -- basis changes ----------------------------------------------------------

def test_identity_change_is_bitwise_neutral(rng):
    bc = change_generators(M.flat_s1_c3(), np.eye(3), rng=rng)
    for f in ("A", "alpha", "beta", "theta", "a"):
        assert np.array_equal(getattr(bc.before, f), getattr(bc.after, f)), f
    assert max(bc.residuals.values()) == 0.0


def test_permutation_change(rng):
    K = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    bc = change_generators(M.flat_t2_r_c2(), K, rng=rng)
    assert max(bc.residuals.values()) < 1e-12
    # det K = 1 for a cyclic permutation: alpha and theta simply permute
    np.testing.assert_allclose(bc.after.alpha, bc.before.alpha[..., [1, 2, 0], :], atol=1e-12)
    np.testing.assert_allclose(bc.after.theta, bc.before.theta[..., [1, 2, 0], :], atol=1e-12)


def test_unimodular_change_keeps_the_leaf_metric(rng):
    m = M.flat_t2_r_c2()
    r = leaf_change_residual(m, m.sample(rng, 1)[0], [[1, 1, 0], [0, 1, 0], [2, 3, 1]])
    assert r["leaf_metric"] < 1e-10 and r["omega_hat"] < 1e-10


def test_singular_change_rejected(rng):
    with pytest.raises(SingularBasisChange):
        change_generators(M.flat_s1_c3(), np.zeros((3, 3)), rng=rng)
