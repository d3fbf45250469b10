import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from g2kit.alg_point import KForm, hodge_arrays, pullback_arrays
from g2kit.exceptions import AssociativeLimit, DependentGenerators, IndefiniteForm, NearAssociative
from g2kit.g2_point import (PHI_O, adapted_frame, coframe_metric, coframe_phi, coframe_starphi, cross,
                            is_positive_3form, metric_from_3form, point_reduce, reconstruct,
                            reconstruct_associative, reconstruct_isotropic, triple_cross)
from g2kit.verify import random_coframe, random_positive_phi, random_spd

E = np.eye(7)
seeds = st.integers(0, 2**32 - 1)


def test_phi_o_components_match_oracle():
    np.testing.assert_array_equal(PHI_O.comps, O.comps_of(O.PHI_O, 7, 3))


def test_metric_of_phi_o_and_scaling():
    gp = metric_from_3form(PHI_O)
    assert np.max(np.abs(gp.g - np.eye(7))) < 1e-12
    assert gp.orientation == 1
    for lam in (0.3, 1.0, 2.5):
        g = metric_from_3form(PHI_O * lam**3).g
        assert np.max(np.abs(g - lam**2 * np.eye(7))) < 1e-12


def test_degenerate_form_is_rejected():
    with pytest.raises(IndefiniteForm):
        metric_from_3form(KForm.from_terms(7, 3, [((0, 1, 2), 1.0), ((3, 4, 5), 1.0)]))
    assert not is_positive_3form(KForm.from_terms(7, 3, [((0, 1, 2), 1.0), ((3, 4, 5), 1.0)]))


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_metric_matches_tensor_oracle(seed):
    rng = np.random.default_rng(seed)
    phi = random_positive_phi(rng, 1)
    gp = metric_from_3form(phi)
    np.testing.assert_allclose(gp.g[0], O.g2_metric(phi.comps[0]), atol=1e-10)
    np.testing.assert_allclose(gp.starphi.comps[0], O.star(gp.g[0], phi.comps[0], 3), atol=1e-9)


def test_defining_relation_of_the_metric(rng):
    phi = random_positive_phi(rng, 1)
    gp = metric_from_3form(phi)
    c = phi.comps[0]
    vol = gp.vol.comps[0, 0]
    for _ in range(5):
        u, v = rng.normal(size=7), rng.normal(size=7)
        w = O.wedge(O.wedge(O.interior(u, c, 3, 7), 2, O.interior(v, c, 3, 7), 2, 7), 4, c, 3, 7)[0]
        assert abs(w - 6 * gp.inner(u, v)[0] * vol) < 1e-9 * max(1.0, abs(w))


def test_negative_orientation_is_reported():
    P = np.diag([-1.0, 1, 1, 1, 1, 1, 1])
    gp = metric_from_3form(PHI_O.pullback(P))
    assert gp.orientation == -1
    np.testing.assert_allclose(gp.g, np.eye(7), atol=1e-12)


def test_cross_products_of_phi_o():
    gp = metric_from_3form(PHI_O)
    np.testing.assert_allclose(cross(gp, E[0], E[1]), E[2], atol=1e-14)
    np.testing.assert_allclose(cross(gp, E[3], E[4]), -E[0], atol=1e-14)
    np.testing.assert_allclose(triple_cross(gp, E[0], E[1], E[2]), 0, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_cross_orthogonal_and_alternating(seed):
    rng = np.random.default_rng(seed)
    gp = metric_from_3form(random_positive_phi(rng, 1))
    gp1 = metric_from_3form(KForm(7, 3, gp.phi.comps[0]))
    u, v, w = rng.normal(size=(3, 7))
    x = cross(gp1, u, v)
    assert abs(gp1.inner(x, u)) < 1e-10 and abs(gp1.inner(x, v)) < 1e-10
    np.testing.assert_allclose(cross(gp1, v, u), -x, atol=1e-12)
    np.testing.assert_allclose(cross(gp1, u, 2 * v + w), 2 * x + cross(gp1, u, w), atol=1e-10)
    y = triple_cross(gp1, u, v, w)
    np.testing.assert_allclose(triple_cross(gp1, v, u, w), -y, atol=1e-12)
    for z in (u, v, w):
        assert abs(gp1.inner(y, z)) < 1e-9


def _frame_check(gp, F):
    # columns of F are the frame: orthonormal, and phi pulled back to it is the model form
    np.testing.assert_allclose(F.T @ gp.g @ F, np.eye(7), atol=1e-10)
    np.testing.assert_allclose(pullback_arrays(F, gp.phi.comps, 3), PHI_O.comps, atol=1e-10)


def test_adapted_frame_isotropic_case():
    gp = metric_from_3form(PHI_O)
    _frame_check(gp, np.asarray(adapted_frame(gp, E[3], E[4], E[5])))


def test_adapted_frame_rejects_associative_planes():
    gp = metric_from_3form(PHI_O)
    with pytest.raises(NearAssociative):
        adapted_frame(gp, E[0], E[1], E[2])


def test_adapted_frame_after_random_rotation(rng):
    Q, _ = np.linalg.qr(rng.normal(size=(7, 7)))
    if np.linalg.det(Q) < 0:
        Q[:, 0] *= -1
    gp = metric_from_3form(PHI_O.pullback(Q))  # still Euclidean metric
    f = rng.normal(size=(3, 7))
    f, _ = np.linalg.qr(f.T)
    F = np.asarray(adapted_frame(gp, *f.T))
    _frame_check(gp, F)


def test_point_reduce_examples():
    gp = metric_from_3form(PHI_O)
    pr = point_reduce(gp, E[[0, 1, 2]])
    np.testing.assert_allclose(pr.A, np.eye(3), atol=1e-14)
    assert abs(pr.a - 1) < 1e-14
    assert abs(point_reduce(gp, E[[0, 1, 3]]).a) < 1e-14
    pr = point_reduce(gp, np.array([E[0], E[1], E[2] + E[3]]))
    np.testing.assert_allclose(pr.A, np.diag([1.0, 1.0, 2.0]), atol=1e-14)
    assert abs(pr.a - 2**-0.5) < 1e-14
    with pytest.raises(DependentGenerators):
        point_reduce(gp, np.array([E[0], E[1], E[0] + E[1]]))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_point_reduction_invariants(seed):
    rng = np.random.default_rng(seed)
    phi = random_positive_phi(rng, 4)
    U = rng.normal(size=(4, 3, 7))
    gp = metric_from_3form(phi)
    pr = point_reduce(gp, U)
    thU = np.einsum("nik,njk->nij", pr.theta, U)
    np.testing.assert_allclose(thU, np.broadcast_to(np.eye(3), thU.shape), atol=1e-10)
    # alpha_i(U_j) = phi(U_1, U_2, U_3) delta_ij; beta kills every generator
    aU = np.einsum("nik,njk->nij", pr.alpha, U)
    np.testing.assert_allclose(aU, pr.phi_U[:, None, None] * np.eye(3), atol=1e-10)
    np.testing.assert_allclose(np.einsum("nk,njk->nj", pr.beta, U), 0, atol=1e-10)
    # theta vanishes on the metric complement of span U
    H = np.linalg.svd(np.einsum("nik,nkl->nil", U, gp.g))[2][:, 3:, :]
    np.testing.assert_allclose(np.einsum("nik,njk->nij", pr.theta, H), 0, atol=1e-10)
    np.testing.assert_allclose(pr.A, np.einsum("nik,nkl,njl->nij", U, gp.g, U), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(pr.a, pr.phi_U * pr.det_B, atol=1e-12)
    assert np.all(np.abs(pr.a) <= 1)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_reconstruction_round_trip(seed):
    rng = np.random.default_rng(seed)
    phi = random_positive_phi(rng, 8)
    U = rng.normal(size=(8, 3, 7))
    gp = metric_from_3form(phi)
    pr = point_reduce(gp, U)
    ph, star, g = reconstruct(pr)
    np.testing.assert_allclose(ph.comps, phi.comps, atol=1e-9)
    np.testing.assert_allclose(star.comps, gp.starphi.comps, atol=1e-9)
    np.testing.assert_allclose(g, gp.g, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_reduction_equivariant_under_generator_change(seed):
    rng = np.random.default_rng(seed)
    gp = metric_from_3form(random_positive_phi(rng, 1))
    U = rng.normal(size=(1, 3, 7))
    K = random_coframe(rng, 3)
    pr, pr2 = point_reduce(gp, U), point_reduce(gp, np.einsum("ij,njk->nik", K, U))
    np.testing.assert_allclose(pr2.A[0], K @ pr.A[0] @ K.T, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(reconstruct(pr2)[0].comps, gp.phi.comps, atol=1e-9)


def test_isotropic_branch_agrees_with_general(rng):
    # isotropic generators: pull back (e1, e2, e4) through a random frame
    P = random_coframe(rng)
    if np.linalg.det(P) < 0:
        P[0] *= -1
    phi = PHI_O.pullback(P)
    U = (np.linalg.inv(P) @ E[[0, 1, 3]].T).T[None]
    gp = metric_from_3form(KForm(7, 3, phi.comps[None]))
    pr = point_reduce(gp, U)
    assert abs(pr.a[0]) < 1e-12
    for x, y in zip(reconstruct_isotropic(pr), reconstruct(pr)):
        xc = x.comps if hasattr(x, "comps") else x
        yc = y.comps if hasattr(y, "comps") else y
        np.testing.assert_allclose(xc, yc, atol=1e-12)
    np.testing.assert_allclose(reconstruct_isotropic(pr)[0].comps, gp.phi.comps, atol=1e-10)


def test_associative_reconstruction(rng):
    P = random_coframe(rng)
    if np.linalg.det(P) < 0:
        P[0] *= -1
    phi = PHI_O.pullback(P)
    K = random_coframe(rng, 3)
    U = (K @ (np.linalg.inv(P) @ E[[0, 1, 2]].T).T)[None]
    gp = metric_from_3form(KForm(7, 3, phi.comps[None]))
    pr = point_reduce(gp, U)
    assert abs(abs(pr.a[0]) - 1) < 1e-10
    with pytest.raises(AssociativeLimit):
        reconstruct(pr)
    ph, star, g = reconstruct_associative(pr)
    np.testing.assert_allclose(ph.comps, gp.phi.comps, atol=1e-10)
    np.testing.assert_allclose(star.comps, gp.starphi.comps, atol=1e-10)
    np.testing.assert_allclose(g, gp.g, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(-0.95, 0.95))
def test_coframe_star_closed_form(seed, a):
    rng = np.random.default_rng(seed)
    B = random_spd(rng)
    B /= np.cbrt(np.linalg.det(B))
    A = np.linalg.inv(B @ B)
    phi = coframe_phi(a, A)
    gp = metric_from_3form(phi)
    np.testing.assert_allclose(gp.g, coframe_metric(a, A), atol=1e-10)
    np.testing.assert_allclose(coframe_starphi(a, A).comps, gp.starphi.comps, atol=1e-10)
    np.testing.assert_allclose(coframe_starphi(a, A).comps,
                               hodge_arrays(coframe_metric(a, A), phi.comps, 3), atol=1e-10)
