"""Orbit types, quotient triples and leaf triples of T^3-actions.

``classify_action`` samples principal orbits of a model and sorts them by
``a = phi(U_1, U_2, U_3) det B``: ``a = 0`` (isotropic, type 3), ``|a| = 1``
(associative, type 2) or anything in between (type 1).  The two quotient
constructions then produce hypersymplectic data in dimension four.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .alg_point import EPS, KForm, evaluate_arrays, interior_arrays, pullback_arrays, wedge_arrays
from .exceptions import (DependentGenerators, MixedType, NonFlatLeaf, SingularBasisChange,
                         WrongType)
from .fieldcalc import Domain, FormField, box, ext_d, periodic
from .g2_point import (metric_from_3form, point_reduce, reconstruct, reconstruct_associative,
                       reconstruct_isotropic, wedge1)
from .hsym4 import PAIRS, HSTriple, classify_triple, intersection_matrix, triple_metric
from .models import quotient_triple_spec
from .moments import alpha_beta

ISOTROPIC_TOL = 1e-10
ASSOCIATIVE_TOL = 1e-8
CONSTANT_TOL = 1e-8


def orbit_type_of(a):
    a = np.abs(np.asarray(a, dtype=float))
    return np.where(a < ISOTROPIC_TOL, 3, np.where(np.abs(1.0 - a) < ASSOCIATIVE_TOL, 2, 1))


@dataclass
class ReductionReport:
    """Pointwise reduction of a model at sampled principal points.

    ``residuals`` collects sup-norms of the checks that apply to the
    detected type; ``stabilizers`` lists ``(point, stabilizer dimension)``
    for every sampled point, principal or not.
    """

    model: str
    orbit_type: int
    points: np.ndarray
    reduction: object
    residuals: dict = field(default_factory=dict)
    stabilizers: list = field(default_factory=list)
    field_residuals: dict = field(default_factory=dict)

    @property
    def a(self):
        return self.reduction.a

    def summary(self):
        pr = self.reduction
        return {
            "model": self.model,
            "orbit_type": int(self.orbit_type),
            "samples": int(len(self.points)),
            "a": [float(pr.a.min()), float(pr.a.max())],
            "phi_U": [float(pr.phi_U.min()), float(pr.phi_U.max())],
            "det_B": [float(pr.det_B.min()), float(pr.det_B.max())],
            "residuals": {k: float(v) for k, v in {**self.residuals, **self.field_residuals}.items()},
            "stabilizer_dims": sorted({int(d) for _, d in self.stabilizers}),
        }


def _invariance_residual(model, points, rng):
    """Max ``|E^* phi(E p) - phi(p)|`` for random group elements ``E``."""
    worst = 0.0
    for p in points:
        lam = rng.uniform(0, 1, 3) * np.array(model.periods)
        E = model._affine(lam)
        q = E[:7, :7] @ p + E[:7, 7]
        pulled = pullback_arrays(E[:7, :7].T, model.phi(q).comps, 3)
        worst = max(worst, float(np.max(np.abs(pulled - model.phi(p).comps))))
    return worst


def _type_and_residuals(phi, U, points):
    """Reduce ``phi`` (comps ``(N, 35)``) along ``U`` and run the type-specific checks."""
    gp = metric_from_3form(KForm(7, 3, phi))
    pr = point_reduce(gp, U)
    types = orbit_type_of(pr.a)
    kinds = sorted(set(int(t) for t in types))
    if len(kinds) > 1:
        witnesses = [(int(t), points[list(types).index(t)]) for t in kinds]
        raise MixedType(f"orbit types {kinds} occur among the sampled points", witnesses)
    otype = kinds[0]
    res = {}
    if otype == 3:
        res["phi_U"] = float(np.max(np.abs(pr.phi_U)))
        phi_r, star_r, g_r = reconstruct_isotropic(pr)
    elif otype == 2:
        res["det_B_variation"] = float(np.ptp(pr.det_B))
        phi_r, star_r, g_r = reconstruct_associative(pr)
    else:
        res["a_variation"] = float(np.ptp(pr.a))
        phi_r, star_r, g_r = reconstruct(pr)
    res["reconstruct_phi"] = float(np.max(np.abs(phi_r.comps - gp.phi.comps)))
    res["reconstruct_starphi"] = float(np.max(np.abs(star_r.comps - gp.starphi.comps)))
    res["reconstruct_metric"] = float(np.max(np.abs(g_r - gp.g)))
    return otype, pr, res


def classify_action(model, n=24, rng=None, points=None, grid=None):
    """Detect the orbit type of ``model`` and check the matching structure equations.

    Raises MixedType when sampled principal orbits fall into different
    types.  ``grid`` (points per base axis) adds field residuals for models
    given by invariant forms over a 4-dimensional base.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    pts = model.sample(rng, n) if points is None else np.atleast_2d(np.asarray(points, dtype=float))
    stabs = [(p, model.stabilizer_dim(p)) for p in pts]
    principal = np.array([p for p, d in stabs if d == 0])
    if len(principal) == 0:
        raise DependentGenerators("no principal orbit among the sampled points")
    otype, pr, res = _type_and_residuals(model.phi(principal).comps, model.U(principal), principal)
    res["bracket"] = model.bracket_residual()
    res["invariance"] = _invariance_residual(model, principal[:6], rng)
    report = ReductionReport(model.name, otype, principal, pr, res, stabs)
    if grid is not None and model.is_invariant:
        report.field_residuals = field_residuals(model, Domain.torus(4, grid), otype)
    return report


def classify_arrays(phi, U, points=None, name="field"):
    """Classification for sampled data: ``phi`` comps ``(..., 35)``, generators ``(..., 3, 7)``."""
    phi = np.asarray(phi, dtype=float).reshape(-1, 35)
    U = np.asarray(U, dtype=float).reshape(-1, 3, 7)
    points = np.zeros((len(phi), 7)) if points is None else np.asarray(points, dtype=float).reshape(-1, 7)
    rank = np.linalg.matrix_rank(U, tol=1e-9)
    keep = rank == 3
    if not np.any(keep):
        raise DependentGenerators("generators are dependent at every sample")
    stabs = [(p, 3 - int(r)) for p, r in zip(points, rank)]
    otype, pr, res = _type_and_residuals(phi[keep], U[keep], points[keep])
    return ReductionReport(name, otype, points[keep], pr, res, stabs)


def _base_forms(model, domain):
    """``(A, ahat, beta)`` as nested arrays / FormFields for a type 1 family."""
    md = model.metadata
    x = domain.coords()
    A = md["A_fn"](x)
    ahat = [FormField(domain, 1, f) for f in md["ahat_fn"](x)]
    beta = FormField(domain, 1, md["beta_fn"](x))
    return A, ahat, beta


def field_residuals(model, domain, otype):
    """Sup-norm residuals of the structure equations on a base grid."""
    phi = model.invariant_phi(domain)
    res = {"d_phi": phi.ext_d().sup()}
    if otype == 1 and "A_fn" in model.metadata:
        A, ahat, beta = _base_forms(model, domain)
        worst = 0.0
        for k in range(3):
            s = FormField.zeros(domain, 3)
            for i in range(3):
                s = s + ext_d(beta * A[i][k]).wedge(ahat[i])
            worst = max(worst, s.sup())
        res["beta_alpha_equation"] = worst
    if otype == 2:
        t = quotient_triple_field(model, domain)
        res["d_omega"] = max(ext_d(w).sup() for w in t.omega)
    return res


# ---------------------------------------------------------------------------
# quotient triples
# ---------------------------------------------------------------------------

@dataclass
class QuotientTriple:
    triple: HSTriple
    A: np.ndarray
    residuals: dict


def _normalize(pr, gp):
    """Rescale the generators so that ``det B = 1``."""
    c = np.cbrt(pr.det_B)
    return point_reduce(gp, pr.U * c[..., None, None])


def quotient_triple_point(model, points):
    """Pointwise quotient triple at principal ``points`` (arrays on R^7).

    Generators are rescaled so that ``det B = 1``.  Type 1 returns
    ``omega_i = (A_ij ahat_j ^ beta + 1/2 eps_ikl ahat_kl) / b^2`` with
    ``mu = ahat_123 ^ beta / b^4``; type 2 returns ``B^{-1} omega`` with
    ``mu = omega_1 ^ omega_1 / 2``.  The residual ``wedge`` is the
    sup of ``|omega_i ^ omega_j - 2 A_ij mu|``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    gp = model.g2(points)
    pr = _normalize(point_reduce(gp, model.U(points)), gp)
    t = orbit_type_of(pr.a)
    if np.any(t != t.flat[0]):
        raise MixedType("points have different orbit types")
    t = int(t.flat[0])
    A = pr.A
    if t == 3:
        raise WrongType("isotropic orbits have no quotient triple; use leaf_triples")
    if t == 1:
        a = pr.a
        b2 = (1.0 - a * a)[..., None]
        ahat = pr.alpha - a[..., None, None] * pr.theta
        be = pr.beta
        om = []
        for i in range(3):
            w = 0.0
            for j in range(3):
                w = w + A[..., i, j, None] * wedge1(ahat[..., j, :], be)
            j, k = (i + 1) % 3, (i + 2) % 3
            w = w + wedge1(ahat[..., j, :], ahat[..., k, :])
            om.append(w / b2)
        om = np.stack(om, axis=-2)
        mu = wedge1(ahat[..., 0, :], ahat[..., 1, :], ahat[..., 2, :], be) / b2**2
    else:
        Binv = np.linalg.inv(pr.B)
        om = np.einsum("...ij,...jk->...ik", Binv, pr.omega)
        mu = 0.5 * wedge_arrays(pr.omega[..., 0, :], 2, pr.omega[..., 0, :], 2, 7)
    worst = 0.0
    for i in range(3):
        for j in range(3):
            w = wedge_arrays(om[..., i, :], 2, om[..., j, :], 2, 7)
            worst = max(worst, float(np.max(np.abs(w - 2 * A[..., i, j, None] * mu))))
    residuals = {"wedge": worst}
    # the triple must be basic: no contraction with the generators
    worst = 0.0
    for i in range(3):
        for j in range(3):
            worst = max(worst, float(np.max(np.abs(interior_arrays(pr.U[..., j, :], om[..., i, :], 2, 7)))))
    residuals["horizontal"] = worst
    return QuotientTriple(HSTriple(tuple(KForm(7, 2, om[..., i, :]) for i in range(3)), KForm(7, 4, mu)),
                          A, residuals)


def quotient_triple_field(model, domain):
    """Quotient triple of an invariant model as FormFields on the base grid."""
    if not model.is_invariant:
        raise WrongType(f"{model.name} is not given over a 4-dimensional base")
    phi = model.invariant_phi(domain)
    c3 = phi.terms.get((0, 1, 2))
    if "A_fn" in model.metadata:
        a = model.metadata["a"]
        A, ahat, beta = _base_forms(model, domain)
        x = domain.coords()
        om, mu = quotient_triple_spec(a, A, model.metadata["ahat_fn"](x), model.metadata["beta_fn"](x))
        return HSTriple(tuple(FormField(domain, 2, w) for w in om), FormField(domain, 4, mu))
    if c3 is None:
        raise WrongType("isotropic model: no quotient triple")
    # phi = c theta^123 + sum_i theta^i ^ X_i + ... with X_i = -omega_i
    om = tuple(-phi.terms[(i,)] for i in range(3))
    return HSTriple(om)


def quotient_triple(model, domain=None, points=None, rng=None):
    """Quotient triple of a type 1 or type 2 model.

    With ``domain`` the triple is returned as FormFields (invariant models
    only), otherwise pointwise at ``points`` (sampled if omitted).
    Raises WrongType for isotropic actions.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if points is None:
        points = model.sample(rng, 8)
    qp = quotient_triple_point(model, points)
    if domain is None:
        return qp
    t = quotient_triple_field(model, domain)
    cl = classify_triple(t)
    res = dict(qp.residuals)
    res.update(cl.residuals)
    Q = intersection_matrix(t)
    return QuotientTriple(t, Q, res)


# ---------------------------------------------------------------------------
# leaves of isotropic actions
# ---------------------------------------------------------------------------

@dataclass
class LeafData:
    """Triple ``(omega_hat_i)`` on a leaf ``N_y`` in coordinates ``(t_1, t_2, t_3, r)``.

    ``t`` are group coordinates, ``r`` the flow parameter of the vector
    field ``m`` dual to ``beta``.
    """

    domain: Domain
    triple: HSTriple
    points: np.ndarray
    frame: np.ndarray
    residuals: dict


def _dual_frame(model, q, K=None):
    """Frame dual to the coframe ``(alpha_1..3, beta, theta^1..3)`` at ``q``."""
    al, be = alpha_beta(model, q, K)
    U = model.U(q)
    if K is not None:
        U = np.einsum("ij,...jk->...ik", np.asarray(K, dtype=float), U)
    gp = model.g2(q)
    gU = np.einsum("...ij,...aj->...ai", gp.g, U)
    A = np.einsum("...ai,...bi->...ab", U, gU)
    th = np.einsum("...ab,...bi->...ai", np.linalg.inv(A), gU)
    C = np.concatenate([al, be[..., None, :], th], axis=-2)  # rows are covectors
    return np.linalg.inv(C)  # columns are the dual vectors


def leaf_triples(model, p0, n_t=8, n_r=16, r_span=0.5, K=None):
    """Triple on the leaf through ``p0`` of an isotropic action.

    Needs a flat model with affine generators (exact flows); raises
    NonFlatLeaf otherwise.  Returns residuals for ``d omega_hat``,
    ``phi|_N = 0``, ``*phi|_N = dvol_N`` and the closed-form expression
    ``omega_hat_i = 1/2 eps_ijk theta^jk - (adj B^2)_ip beta ^ theta^p``.
    """
    if not model.flat:
        raise NonFlatLeaf(f"{model.name} has no exact leaf parametrisation")
    p0 = np.asarray(p0, dtype=float)
    al, _ = alpha_beta(model, p0, K)
    U0 = model.U(p0)
    if abs(evaluate_arrays(model.phi(p0).comps, 3, U0)) > 1e-10:
        raise WrongType("orbits are not isotropic; leaves are only defined for type 3")

    def m_field(_, y):
        return _dual_frame(model, y, K)[:, 3]

    r = np.linspace(-r_span, r_span, n_r)
    sol = solve_ivp(m_field, (0.0, -r_span), p0, method="DOP853", rtol=1e-12, atol=1e-13, dense_output=True)
    sol2 = solve_ivp(m_field, (0.0, r_span), p0, method="DOP853", rtol=1e-12, atol=1e-13, dense_output=True)
    gamma = np.array([sol.sol(s) if s < 0 else sol2.sol(s) for s in r])

    axes = [periodic(n_t, model.periods[i]) for i in range(3)] + [box(n_r, -r_span, r_span)]
    dom = Domain(axes)
    tpts = [ax.points() for ax in axes[:3]]
    shape = dom.shape
    P = np.empty(shape + (7,))
    for idx in np.ndindex(*shape[:3]):
        lam = np.array([tpts[k][idx[k]] for k in range(3)])
        P[idx] = model.act(lam, gamma)
    F = _dual_frame(model, P, K)
    U = model.U(P)
    if K is not None:
        U = np.einsum("ij,...jk->...ik", np.asarray(K, dtype=float), U)
    X = np.concatenate([U, F[..., :, 3][..., None, :]], axis=-2)  # (..., 4, 7) leaf frame
    phi = model.phi(P).comps
    star = model.starphi(P).comps

    om = []
    for i in range(3):
        ni = interior_arrays(F[..., :, i], phi, 3, 7)
        comps = {}
        for (a_, b_) in PAIRS:
            v = interior_arrays(X[..., b_, :], interior_arrays(X[..., a_, :], ni, 2, 7), 1, 7)[..., 0]
            comps[(a_, b_)] = v
        om.append(FormField(dom, 2, comps))
    triple = HSTriple(tuple(om), 1.0, dom)

    res = {"d_omega": max(ext_d(w).sup() for w in om)}
    res["phi_restriction"] = max(float(np.max(np.abs(evaluate_arrays(phi, 3, X[..., list(c), :]))))
                                 for c in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)))
    gp = model.g2(P)
    gram = np.einsum("...ai,...ij,...bj->...ab", X, gp.g, X)
    vol = np.sqrt(np.linalg.det(gram))
    res["starphi_volume"] = float(np.max(np.abs(evaluate_arrays(star, 4, X) - vol)))
    # closed form: adj(B^2) = A / det A with A the Gram matrix of U
    A = gram[..., :3, :3]
    adjB2 = A / np.linalg.det(A)[..., None, None]
    worst = 0.0
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        expect = {}
        expect[tuple(sorted((j, k)))] = 1.0 if j < k else -1.0
        for p in range(3):
            # -(adjB2)_ip dr ^ dt^p = +(adjB2)_ip dt^p ^ dr
            expect[(p, 3)] = expect.get((p, 3), 0.0) + adjB2[..., i, p]
        for P_ in PAIRS:
            worst = max(worst, float(np.max(np.abs(om[i].component(P_) - expect.get(P_, 0.0)))))
    res["closed_form"] = worst
    return LeafData(dom, triple, P, X, res)


# ---------------------------------------------------------------------------
# changes of generator basis
# ---------------------------------------------------------------------------

@dataclass
class BasisChange:
    K: np.ndarray
    before: object
    after: object
    residuals: dict


def change_generators(model, K, points=None, rng=None):
    """Reduced data for the generators ``U'_i = K_ij U_j`` and transformation checks.

    ``alpha' = det K K^{-t} alpha``, ``beta' = det K beta`` and
    ``theta' = K^{-t} theta``; for orthogonal ``K`` also ``B' = K B K^t``.
    Raises SingularBasisChange for non-invertible ``K``.
    """
    K = np.asarray(K, dtype=float)
    if K.shape != (3, 3) or abs(np.linalg.det(K)) < 1e-12:
        raise SingularBasisChange("basis change must be an invertible 3x3 matrix")
    rng = np.random.default_rng(0) if rng is None else rng
    pts = model.sample(rng, 8) if points is None else np.atleast_2d(points)
    gp = model.g2(pts)
    U = model.U(pts)
    pr = point_reduce(gp, U)
    pr2 = point_reduce(gp, np.einsum("ij,...jk->...ik", K, U))
    dK = np.linalg.det(K)
    Kit = np.linalg.inv(K).T
    res = {
        "alpha": float(np.max(np.abs(pr2.alpha - dK * np.einsum("ij,...jk->...ik", Kit, pr.alpha)))),
        "beta": float(np.max(np.abs(pr2.beta - dK * pr.beta))),
        "theta": float(np.max(np.abs(pr2.theta - np.einsum("ij,...jk->...ik", Kit, pr.theta)))),
        "phi_U": float(np.max(np.abs(pr2.phi_U - dK * pr.phi_U))),
    }
    if np.allclose(K @ K.T, np.eye(3), atol=1e-12):
        res["B"] = float(np.max(np.abs(pr2.B - K @ pr.B @ K.T)))
    return BasisChange(K, pr, pr2, res)


def leaf_change_residual(model, p0, K, **kw):
    """Compare leaf triples for ``U`` and ``K U`` on the same leaf.

    Both are evaluated on the common leaf frame of the original basis:
    ``omega_hat' = (det K)^{-1} K omega_hat`` and the leaf metric agrees.
    """
    K = np.asarray(K, dtype=float)
    L = leaf_triples(model, p0, **kw)
    P, X = L.points, L.frame
    F2 = _dual_frame(model, P, K)
    phi = model.phi(P).comps
    dK = np.linalg.det(K)
    worst = 0.0
    for i in range(3):
        ni = interior_arrays(F2[..., :, i], phi, 3, 7)
        for (a_, b_) in PAIRS:
            v = interior_arrays(X[..., b_, :], interior_arrays(X[..., a_, :], ni, 2, 7), 1, 7)[..., 0]
            ref = sum(K[i, j] * L.triple.omega[j].component((a_, b_)) for j in range(3)) / dK
            worst = max(worst, float(np.max(np.abs(v - ref))))
    t2 = L.triple.transformed(K / dK)
    g1, _ = triple_metric(L.triple)
    g2, _ = triple_metric(t2)
    return {"omega_hat": worst, "leaf_metric": float(np.max(np.abs(g1 - g2)))}
