"""Pointwise G2 toolkit.

Positive 3-forms on R^7, their induced metric and dual 4-form, the cross
products, adapted frames, and the algebraic reduction of a 3-form along
three independent vectors ``U_1, U_2, U_3`` (the generators of a torus
action at a point) together with its inverse, the reconstruction of
``phi``, ``*phi`` and ``g_phi`` from the reduced data.

All routines accept batched input: leading axes of component arrays and of
vector arrays are broadcast together.
"""

from dataclasses import dataclass

import numpy as np

from .alg_point import (
    EPS,
    KForm,
    adjugate,
    evaluate_arrays,
    hodge_arrays,
    interior_arrays,
    spd_invsqrt,
    wedge_arrays,
)
from .exceptions import (
    AssociativeLimit,
    DependentGenerators,
    DimensionMismatch,
    IndefiniteForm,
    NearAssociative,
)

NEAR_ASSOCIATIVE_TOL = 1e-8
DEFINITE_RTOL = 1e-10

# phi_o = e123 - e1(e45 + e67) - e2(e46 + e75) - e3(e47 + e56), 0-based indices
PHI_O_TERMS = [
    ((0, 1, 2), 1.0),
    ((0, 3, 4), -1.0),
    ((0, 5, 6), -1.0),
    ((1, 3, 5), -1.0),
    ((1, 6, 4), -1.0),
    ((2, 3, 6), -1.0),
    ((2, 4, 5), -1.0),
]
PHI_O = KForm.from_terms(7, 3, PHI_O_TERMS)


def _e(i, n=7):
    v = np.zeros(n)
    v[i] = 1.0
    return v


def wedge1(*forms, n=7):
    """Wedge of 1-form component arrays (shape (..., n)); returns components."""
    out = np.asarray(forms[0], dtype=float)
    k = 1
    for f in forms[1:]:
        out = wedge_arrays(out, k, f, 1, n)
        k += 1
    return out


def _scal(c):
    return np.asarray(c, dtype=float)[..., None]


# ---------------------------------------------------------------------------
# metric from a 3-form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class G2Point:
    """A definite 3-form with its induced metric, volume form and dual 4-form.

    ``orientation`` is +1 when ``e^{1...7}`` is positively oriented for the
    induced structure and -1 otherwise.
    """

    phi: KForm
    g: np.ndarray
    vol: KForm
    starphi: KForm
    orientation: np.ndarray

    @property
    def ginv(self):
        return np.linalg.inv(self.g)

    def sharp(self, w):
        return np.einsum("...ij,...j->...i", self.ginv, w)

    def inner(self, u, v):
        return np.einsum("...i,...ij,...j->...", u, self.g, v)


def bilinear_from_3form(phi):
    """``B_ij`` with ``(e_i ⌟ phi) ^ (e_j ⌟ phi) ^ phi = B_ij e^{1...7}``."""
    c = phi.comps
    contractions = np.stack([interior_arrays(_e(i), c, 3, 7) for i in range(7)], axis=-2)
    B = np.empty(c.shape[:-1] + (7, 7))
    for i in range(7):
        for j in range(i, 7):
            w = wedge_arrays(contractions[..., i, :], 2, contractions[..., j, :], 2, 7)
            val = wedge_arrays(w, 4, c, 3, 7)[..., 0]
            B[..., i, j] = val
            B[..., j, i] = val
    return B


def metric_from_3form(phi):
    """Induced metric, volume and dual 4-form of a definite 3-form on R^7.

    Solves ``6 g(u, v) vol_g = (u⌟phi) ^ (v⌟phi) ^ phi`` in closed form: with
    ``b = B / 6`` (see :func:`bilinear_from_3form`) and ``s`` the sign of the
    definite form ``b``, ``g = |det b|^{-1/9} s b`` and
    ``vol_g = s sqrt(det g) e^{1...7}``.

    Raises
    ------
    IndefiniteForm
        If ``b`` is not definite at some sample.
    """
    if phi.dim != 7 or phi.degree != 3:
        raise DimensionMismatch(f"expected a 3-form on R^7, got degree {phi.degree} in dim {phi.dim}")
    b = bilinear_from_3form(phi) / 6.0
    eig = np.linalg.eigvalsh(b)
    scale = np.max(np.abs(eig), axis=-1)
    pos = np.all(eig > DEFINITE_RTOL * scale[..., None], axis=-1)
    neg = np.all(eig < -DEFINITE_RTOL * scale[..., None], axis=-1)
    ok = (pos | neg) & (scale > 0)
    if not np.all(ok):
        bad = np.argwhere(~np.atleast_1d(ok))[0]
        raise IndefiniteForm(f"3-form is not definite (first failure at sample {tuple(bad)})")
    s = np.where(pos, 1.0, -1.0)
    sb = s[..., None, None] * b
    g = sb * np.abs(np.linalg.det(sb))[..., None, None] ** (-1.0 / 9.0)
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    vol = KForm(7, 7, (s * np.sqrt(np.linalg.det(g)))[..., None])
    starphi = KForm(7, 4, hodge_arrays(g, phi.comps, 3, s))
    return G2Point(phi=phi, g=g, vol=vol, starphi=starphi, orientation=s)


def is_positive_3form(phi):
    try:
        gp = metric_from_3form(phi)
    except IndefiniteForm:
        return False
    return bool(np.all(gp.orientation > 0))


# ---------------------------------------------------------------------------
# cross products and adapted frames
# ---------------------------------------------------------------------------

def cross(gp, u, v):
    """``u x v = (phi(u, v, .))^sharp``."""
    w = interior_arrays(v, interior_arrays(u, gp.phi.comps, 3, 7), 2, 7)
    return gp.sharp(w)


def triple_cross(gp, u, v, w):
    """``[u, v, w] = (*phi(u, v, w, .))^sharp``."""
    c = interior_arrays(u, gp.starphi.comps, 4, 7)
    c = interior_arrays(v, c, 3, 7)
    c = interior_arrays(w, c, 2, 7)
    return gp.sharp(c)


def adapted_frame(gp, f1, f2, f3, tol=NEAR_ASSOCIATIVE_TOL):
    """Adapted frame built from an orthonormal triple that spans no associative plane.

    Returns a 7x7 array whose columns are
    ``(-e2 x e3, -e3 x e1, -e1 x e2, -[e1, e2, e3], e1, e2, e3)`` where
    ``e1 = f1``, ``e2 = f2`` and ``e3`` is the normalised component of ``f3``
    orthogonal to ``f1 x f2``.  In this frame ``phi`` has the components of
    ``phi_o``.
    """
    f1, f2, f3 = (np.asarray(f, dtype=float) for f in (f1, f2, f3))
    F = np.stack([f1, f2, f3])
    gram = np.einsum("ai,ij,bj->ab", F, gp.g, F)
    if np.max(np.abs(gram - np.eye(3))) > 1e-8:
        raise ValueError("f1, f2, f3 must be orthonormal for the induced metric")
    a = float(evaluate_arrays(gp.phi.comps, 3, F))
    if abs(1.0 - abs(a)) < tol:
        raise NearAssociative(f"phi(f1, f2, f3) = {a:.12f} is within {tol:g} of +-1")
    n12 = cross(gp, f1, f2)
    r = f3 - gp.inner(f3, n12) * n12
    e3 = r / np.sqrt(gp.inner(r, r))
    e1, e2 = f1, f2
    cols = [
        -cross(gp, e2, e3),
        -cross(gp, e3, e1),
        -cross(gp, e1, e2),
        -triple_cross(gp, e1, e2, e3),
        e1,
        e2,
        e3,
    ]
    return np.stack(cols, axis=-1)


# ---------------------------------------------------------------------------
# reduction along three generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointReduction:
    """Reduced data of a G2 3-form along generators ``U`` (rows of a 3x7 array).

    ``alpha[..., i, :]`` is ``(1/2) eps_ijk U_j ^ U_k ⌟ phi``, ``beta`` is
    ``U_1 ^ U_2 ^ U_3 ⌟ *phi``, ``theta`` the connection 1-forms dual to ``U``
    and vanishing on the metric complement of their span.  ``phi_U`` is
    ``phi(U_1, U_2, U_3)`` and ``a = phi_U det B``; ``b = sqrt(1 - a^2)``.
    ``omega`` holds the horizontal triple ``(1/2) eps_ijk e^jk - s e_i ⌟ phi``
    with ``s = sign(a)``, which is what the associative reconstruction uses.
    """

    U: np.ndarray
    A: np.ndarray
    B: np.ndarray
    a: np.ndarray
    b: np.ndarray
    phi_U: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    theta: np.ndarray
    omega: np.ndarray

    @property
    def det_B(self):
        return np.linalg.det(self.B)

    @property
    def coframe(self):
        """Orthonormal coframe ``e^i = (B^{-1})^i_j theta^j``."""
        return np.einsum("...ij,...jk->...ik", np.linalg.inv(self.B), self.theta)


def point_reduce(gp, U, indep_tol=1e-12):
    """Reduce ``gp`` along the three vectors ``U`` (shape (..., 3, 7))."""
    U = np.asarray(U, dtype=float)
    if U.shape[-2:] != (3, 7):
        raise DimensionMismatch(f"generators must have shape (..., 3, 7), got {U.shape}")
    g = gp.g
    gU = np.einsum("...ij,...aj->...ai", g, U)
    A = np.einsum("...ai,...bi->...ab", U, gU)
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    norms = np.prod(np.einsum("...aa->...a", A), axis=-1)
    if np.any(np.linalg.det(A) <= indep_tol * norms):
        raise DependentGenerators("generators are linearly dependent at some sample")
    B = spd_invsqrt(A)
    phi = gp.phi.comps
    phi_U = evaluate_arrays(phi, 3, U)
    a = phi_U * np.linalg.det(B)
    b = np.sqrt(np.clip(1.0 - a * a, 0.0, None))
    U1, U2, U3 = U[..., 0, :], U[..., 1, :], U[..., 2, :]

    def pair(u, v):
        return interior_arrays(v, interior_arrays(u, phi, 3, 7), 2, 7)

    alpha = np.stack([pair(U2, U3), pair(U3, U1), pair(U1, U2)], axis=-2)
    beta = interior_arrays(U3, interior_arrays(U2, interior_arrays(U1, gp.starphi.comps, 4, 7), 3, 7), 2, 7)
    theta = np.einsum("...ab,...bi->...ai", np.linalg.inv(A), gU)

    s = np.where(a < 0, -1.0, 1.0)
    eU = np.einsum("...ij,...jk->...ik", B, U)
    cof = np.einsum("...ij,...jk->...ik", np.linalg.inv(B), theta)
    omega = np.stack(
        [
            wedge1(cof[..., j, :], cof[..., k, :])
            - _scal(s) * interior_arrays(eU[..., i, :], phi, 3, 7)
            for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1))
        ],
        axis=-2,
    )
    return PointReduction(U=U, A=A, B=B, a=a, b=b, phi_U=phi_U, alpha=alpha,
                          beta=beta, theta=theta, omega=omega)


def _cyc():
    return ((0, 1, 2), (1, 2, 0), (2, 0, 1))


def _sym_outer(X, M, Y):
    """Matrix of the symmetric bilinear form ``X^t M Y + Y^t M X`` (all (..., 3, n))."""
    t = np.einsum("...ai,...ab,...bj->...ij", X, M, Y)
    return t + np.swapaxes(t, -1, -2)


def reconstruct(pr, tol=NEAR_ASSOCIATIVE_TOL):
    """Assemble ``phi``, ``*phi`` and ``g_phi`` from reduced data (``|a| != 1``).

    Returns ``(phi, starphi, g)`` with ``phi`` and ``starphi`` as
    :class:`KForm` and ``g`` an (..., 7, 7) array.
    """
    a = np.asarray(pr.a, dtype=float)
    if np.any(np.abs(1.0 - np.abs(a)) < tol):
        raise AssociativeLimit("|a| = 1: use reconstruct_associative")
    al, be, th = pr.alpha, pr.beta, pr.theta
    B = pr.B
    B2 = np.einsum("...ij,...jk->...ik", B, B)
    adjB2 = adjugate(B2)
    dB = np.linalg.det(B)
    b2 = 1.0 - a * a

    phi = -_scal(dB**2 / b2) * wedge1(al[..., 0, :], al[..., 1, :], al[..., 2, :])
    for i in range(3):
        for j in range(3):
            phi = phi + _scal(adjB2[..., i, j] / b2) * wedge1(be, al[..., i, :], th[..., j, :])
    for i, j, k in _cyc():
        phi = phi + _scal(1.0 / b2) * wedge1(al[..., i, :], th[..., j, :], th[..., k, :])
    phi = phi - _scal(2.0 * a / (b2 * dB)) * wedge1(th[..., 0, :], th[..., 1, :], th[..., 2, :])

    b4 = b2 * b2
    th123 = wedge1(th[..., 0, :], th[..., 1, :], th[..., 2, :])
    star = -_scal((b2 - a * a) / b4) * wedge_arrays(be, 1, th123, 3, 7)
    for i, j, k in _cyc():
        star = star + _scal(dB**2 / b4) * wedge1(al[..., i, :], al[..., j, :], be, th[..., k, :])
    for i in range(3):
        for j in range(3):
            for k in range(3):
                if EPS[i, j, k] == 0:
                    continue
                for l in range(3):
                    for m in range(3):
                        for nn in range(3):
                            if EPS[l, m, nn] == 0:
                                continue
                            c = -0.25 / b2 * EPS[i, j, k] * EPS[l, m, nn] * B2[..., nn, k]
                            star = star + _scal(c) * wedge1(al[..., i, :], al[..., j, :], th[..., l, :], th[..., m, :])
    for i, j, k in _cyc():
        star = star + _scal(a * dB / b4) * wedge1(al[..., i, :], be, th[..., j, :], th[..., k, :])
    star = star + _scal(a * dB**3 / b4) * wedge1(al[..., 0, :], al[..., 1, :], al[..., 2, :], be)

    Binv2 = np.linalg.inv(B2)
    g = (
        np.einsum("...ai,...ab,...bj->...ij", th, Binv2, th)
        + (dB**2)[..., None, None] * np.einsum("...ai,...ab,...bj->...ij", al, Binv2, al)
        + (dB**2)[..., None, None] * np.einsum("...i,...j->...ij", be, be)
    ) / b2[..., None, None]
    g = g - (a * dB / b2)[..., None, None] * _sym_outer(th, Binv2, al)
    return KForm(7, 3, phi), KForm(7, 4, star), g


def reconstruct_isotropic(pr):
    """The ``a = 0`` specialisation of :func:`reconstruct` (isotropic orbits)."""
    al, be, th = pr.alpha, pr.beta, pr.theta
    B2 = np.einsum("...ij,...jk->...ik", pr.B, pr.B)
    adjB2 = adjugate(B2)
    d2 = np.linalg.det(pr.B) ** 2

    phi = -_scal(d2) * wedge1(al[..., 0, :], al[..., 1, :], al[..., 2, :])
    for i in range(3):
        for j in range(3):
            phi = phi + _scal(adjB2[..., i, j]) * wedge1(be, al[..., i, :], th[..., j, :])
    for i, j, k in _cyc():
        phi = phi + wedge1(al[..., i, :], th[..., j, :], th[..., k, :])

    star = -wedge1(be, th[..., 0, :], th[..., 1, :], th[..., 2, :])
    for i, j, k in _cyc():
        star = star + _scal(d2) * wedge1(al[..., i, :], al[..., j, :], be, th[..., k, :])
    for i in range(3):
        for j in range(3):
            for k in range(3):
                if EPS[i, j, k] == 0:
                    continue
                for l in range(3):
                    for m in range(3):
                        for nn in range(3):
                            if EPS[l, m, nn] == 0:
                                continue
                            c = -0.25 * EPS[i, j, k] * EPS[l, m, nn] * B2[..., nn, k]
                            star = star + _scal(c) * wedge1(al[..., i, :], al[..., j, :], th[..., l, :], th[..., m, :])

    Binv2 = np.linalg.inv(B2)
    g = (
        np.einsum("...ai,...ab,...bj->...ij", th, Binv2, th)
        + d2[..., None, None] * np.einsum("...ai,...ab,...bj->...ij", al, Binv2, al)
        + d2[..., None, None] * np.einsum("...i,...j->...ij", be, be)
    )
    return KForm(7, 3, phi), KForm(7, 4, star), g


def reconstruct_associative(pr):
    """Reconstruction when ``|a| = 1`` from ``theta``, ``B`` and the horizontal triple.

    ``phi = s det(B)^{-1} theta^123 - s (B^{-1})^i_j theta^j ^ omega_i`` and
    ``*phi = mu - (1/2) eps_ij^k (B^{-1})^i_m (B^{-1})^j_n theta^mn ^ omega_k``
    with ``mu = omega_1 ^ omega_1 / 2`` and ``s = sign(a)``.  The metric is
    ``theta^t A theta`` plus the horizontal metric of the triple.
    """
    th, om = pr.theta, pr.omega
    s = np.where(np.asarray(pr.a) < 0, -1.0, 1.0)
    Binv = np.linalg.inv(pr.B)
    dB = np.linalg.det(pr.B)
    phi = _scal(s / dB) * wedge1(th[..., 0, :], th[..., 1, :], th[..., 2, :])
    for i in range(3):
        for j in range(3):
            phi = phi - _scal(s * Binv[..., i, j]) * wedge_arrays(th[..., j, :], 1, om[..., i, :], 2, 7)

    mu = 0.5 * wedge_arrays(om[..., 0, :], 2, om[..., 0, :], 2, 7)
    e = np.einsum("...ij,...jk->...ik", Binv, th)
    star = mu.copy()
    for i, j, k in _cyc():
        star = star - wedge_arrays(wedge1(e[..., i, :], e[..., j, :]), 2, om[..., k, :], 2, 7)

    G = horizontal_metric(om, mu)
    g = np.einsum("...ai,...ab,...bj->...ij", th, pr.A, th) + G
    return KForm(7, 3, phi), KForm(7, 4, star), g


def triple_bilinear(omega, n):
    """``h`` with ``(1/6) eps^ijk (e_a⌟w_i) ^ (e_b⌟w_j) ^ w_k = h_ab * (top of the triple)``.

    Returned as the raw 4-form components (shape (..., n, n, binom(n, 4))).
    """
    omega = np.asarray(omega, dtype=float)
    contr = np.stack(
        [np.stack([interior_arrays(_e(a, n), omega[..., i, :], 2, n) for a in range(n)], axis=-2) for i in range(3)],
        axis=-3,
    )  # (..., 3, n, n)
    from math import comb

    out = np.zeros(omega.shape[:-2] + (n, n, comb(n, 4)))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                if EPS[i, j, k] == 0:
                    continue
                w = wedge_arrays(contr[..., i, :, None, :], 1, contr[..., j, None, :, :], 1, n)
                out = out + EPS[i, j, k] / 6.0 * wedge_arrays(w, 2, omega[..., k, None, None, :], 2, n)
    return out


def horizontal_metric(omega, mu):
    """Metric on the horizontal space of an orthonormal triple, extended by zero.

    Uses ``G(u, v) mu = (1/6) eps^ijk u⌟w_i ^ v⌟w_j ^ w_k`` in R^7.
    """
    h4 = triple_bilinear(omega, 7)
    pivot = np.argmax(np.abs(mu), axis=-1)
    num = np.take_along_axis(h4, pivot[..., None, None, None], axis=-1)[..., 0]
    den = np.take_along_axis(mu, pivot[..., None], axis=-1)
    return num / den[..., None]


# ---------------------------------------------------------------------------
# closed forms in the quotient coframe (alpha_hat_1..3, beta, theta^1..3)
# ---------------------------------------------------------------------------

AH = (0, 1, 2)  # slots of alpha_hat_i
BE = 3          # slot of beta
TH = (4, 5, 6)  # slots of theta^i


def coframe_phi(a, A):
    """``phi`` of a closed structure with non-isotropic, non-associative orbits.

    Components in the coframe ``(alpha_hat_1..3, beta, theta^1..3)``; ``A``
    is symmetric positive definite with ``det A = 1`` and ``b^2 = 1 - a^2``.
    """
    b2 = 1.0 - a * a
    terms = [((AH[0], AH[1], AH[2]), -1.0 / b2)]
    for i in range(3):
        for j in range(3):
            terms.append(((BE, AH[i], TH[j]), A[i, j] / b2))
    for i, j, k in _cyc():
        terms.append(((AH[i], TH[j], TH[k]), 1.0))
        terms.append(((AH[i], AH[j], TH[k]), -a / b2))
    terms.append(((TH[0], TH[1], TH[2]), a))
    return KForm.from_terms(7, 3, terms)


def coframe_starphi(a, A):
    """Closed form of ``*phi`` matching :func:`coframe_phi`."""
    b2 = 1.0 - a * a
    B2 = np.linalg.inv(A)
    terms = [((BE, TH[0], TH[1], TH[2]), -1.0)]
    for p in range(3):
        for q in range(3):
            for k in range(3):
                for l in range(3):
                    if EPS[p, k, l] == 0:
                        continue
                    for s_ in range(3):
                        for t in range(3):
                            if EPS[q, s_, t] == 0:
                                continue
                            c = -0.25 / b2 * B2[p, q] * EPS[p, k, l] * EPS[q, s_, t]
                            terms.append(((AH[k], AH[l], TH[s_], TH[t]), c))
    for i, j, k in _cyc():
        terms.append(((BE, TH[i], AH[j], AH[k]), 1.0 / b2))
        terms.append(((BE, AH[i], TH[j], TH[k]), a / b2))
    terms.append(((AH[0], AH[1], AH[2], BE), a / (b2 * b2)))
    return KForm.from_terms(7, 4, terms)


def coframe_metric(a, A):
    """``theta^t A theta + (1/b^2) alpha_hat^t A alpha_hat + beta^2 / b^2``."""
    b2 = 1.0 - a * a
    g = np.zeros((7, 7))
    g[np.ix_(AH, AH)] = A / b2
    g[BE, BE] = 1.0 / b2
    g[np.ix_(TH, TH)] = A
    return g


def coframe_star_identities(a, B):
    """Closed-form Hodge stars of every basis form of the six families.

    Returns a list of ``(label, form, star)`` in the coframe
    ``(alpha_hat_1..3, beta, theta^1..3)`` with the metric of
    :func:`coframe_metric` for ``A = B^{-2}`` (``det B = 1``) and the
    orientation ``alpha_hat_123 ^ beta ^ theta^123``.
    """
    b2 = 1.0 - a * a
    b4 = b2 * b2
    B2 = B @ B
    Bm2 = np.linalg.inv(B2)
    out = []

    out.append(("dvol", KForm(7, 0, np.ones(1)), KForm.volume(7, 1.0 / b4)))
    out.append(
        ("alpha123", KForm.from_terms(7, 3, [((0, 1, 2), 1.0)]),
         KForm.from_terms(7, 4, [((BE, 4, 5, 6), b2)]))
    )

    for i, j in ((0, 1), (0, 2), (1, 2)):
        for p in range(3):
            terms = []
            for k in range(3):
                for l in range(3):
                    for r in range(3):
                        for s_ in range(3):
                            for t in range(3):
                                c = -0.5 * EPS[i, j, k] * Bm2[k, l] * B2[p, r] * EPS[r, s_, t]
                                if c:
                                    terms.append(((BE, AH[l], TH[s_], TH[t]), c))
            out.append(
                (f"alpha{i}{j}theta{p}", KForm.from_terms(7, 3, [((AH[i], AH[j], TH[p]), 1.0)]),
                 KForm.from_terms(7, 4, terms))
            )

    for i in range(3):
        for p in range(3):
            terms = []
            for j in range(3):
                for k in range(3):
                    for l in range(3):
                        for r in range(3):
                            for s_ in range(3):
                                for t in range(3):
                                    c = -0.25 * B2[i, j] * B2[p, r] * EPS[j, k, l] * EPS[r, s_, t]
                                    if c:
                                        terms.append(((AH[k], AH[l], TH[s_], TH[t]), c))
            out.append(
                (f"beta alpha{i} theta{p}", KForm.from_terms(7, 3, [((BE, AH[i], TH[p]), 1.0)]),
                 KForm.from_terms(7, 4, terms))
            )

    for i in range(3):
        for p, q in ((0, 1), (0, 2), (1, 2)):
            terms = []
            for j in range(3):
                for k in range(3):
                    for l in range(3):
                        for r in range(3):
                            for s_ in range(3):
                                c = 0.5 / b2 * B2[i, j] * Bm2[r, s_] * EPS[j, k, l] * EPS[p, q, r]
                                if c:
                                    terms.append(((BE, AH[k], AH[l], TH[s_]), c))
            out.append(
                (f"alpha{i} theta{p}{q}", KForm.from_terms(7, 3, [((AH[i], TH[p], TH[q]), 1.0)]),
                 KForm.from_terms(7, 4, terms))
            )

    out.append(
        ("theta123", KForm.from_terms(7, 3, [((4, 5, 6), 1.0)]),
         KForm.from_terms(7, 4, [((0, 1, 2, BE), 1.0 / b4)]))
    )
    return out
