"""Explicit closed G2-structures with T^3-symmetry.

Every model is a :class:`ModelInstance` on R^7 (or a quotient of it) with

* pointwise evaluators for ``phi`` and ``*phi`` (batched over points),
* three commuting affine generators ``U_i`` with exact flows,
* for models that are products over a 4-dimensional base, a builder for
  the :class:`~g2kit.fieldcalc.InvariantForm` of ``phi`` on a base grid.

Invariant models use coordinates ``(base_0..base_3, t_1, t_2, t_3)`` with
``theta^i = dt^i`` and ``U_i = d/dt_i``.  Coefficients are written once as
functions of a list of coordinate arrays, so the same code serves grids
(compact broadcasting) and scattered points.
"""

from dataclasses import dataclass, field
from functools import reduce
from itertools import combinations
from math import gcd

import numpy as np
from scipy.linalg import expm

from .alg_point import EPS, KForm, basis, hodge_arrays, index_of, perm_sign
from .exceptions import DependentGenerators, InvalidModel, NotPositiveDefinite
from .fieldcalc import Domain, FormField, InvariantForm, VectorField, box, periodic
from .g2_point import PHI_O, G2Point, metric_from_3form
from .hsym4 import STANDARD_TRIPLE, HSTriple, definiteness, intersection_matrix

TWO_PI = 2 * np.pi


# ---------------------------------------------------------------------------
# sparse form algebra on coefficient arrays ({multi-index: array})
# ---------------------------------------------------------------------------

def sp_add(*forms):
    out = {}
    for f in forms:
        for I, v in f.items():
            out[I] = out[I] + v if I in out else v
    return out


def sp_scale(f, c):
    return {I: v * c for I, v in f.items()}


def sp_wedge(*forms):
    def w2(a, b):
        out = {}
        for I, u in a.items():
            for J, v in b.items():
                s = perm_sign(I + J)
                if s:
                    K = tuple(sorted(I + J))
                    t = u * v * s
                    out[K] = out[K] + t if K in out else t
        return out
    return reduce(w2, forms)


def sp_one(comps):
    """1-form from a list of coefficients (None or 0 entries skipped)."""
    return {(k,): c for k, c in enumerate(comps) if c is not None and not (np.isscalar(c) and c == 0)}


class InvariantSpec:
    """Coefficients ``{S: {I: array}}`` of an invariant form over a 4-dim base."""

    def __init__(self, degree, terms=None, base_dim=4):
        self.degree = degree
        self.base_dim = base_dim
        self.terms = {}
        for S, f in (terms or {}).items():
            self.add(S, f)

    def add(self, S, form, coeff=1.0):
        s = perm_sign(S)
        if s == 0 or not form:
            return self
        S = tuple(sorted(S))
        f = sp_scale(form, s * coeff)
        self.terms[S] = sp_add(self.terms.get(S, {}), f)
        return self

    def invariant_form(self, domain):
        if domain.dim != self.base_dim:
            raise InvalidModel("base domain has the wrong dimension")
        terms = {}
        for S, f in self.terms.items():
            comps = {}
            for I, v in f.items():
                v = np.asarray(v, dtype=float)
                comps[I] = v.reshape((1,) * (domain.dim - v.ndim) + v.shape) if v.ndim < domain.dim else v
            terms[S] = FormField(domain, self.degree - len(S), comps)
        return InvariantForm(domain, self.degree, terms)

    def at(self, batch_shape):
        """Dense components on ``R^(base+3)`` broadcast to ``batch_shape``."""
        n = self.base_dim + 3
        idx = index_of(n, self.degree)
        out = np.zeros(tuple(batch_shape) + (len(idx),))
        for S, f in self.terms.items():
            for I, v in f.items():
                K = tuple(I) + tuple(self.base_dim + s for s in S)
                out[..., idx[K]] += v
        return out


def _inv3(M):
    """Inverse of a nested 3x3 list of broadcastable arrays."""
    det = (M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
           - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
           + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]))
    adj = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != j]
            c = [k for k in range(3) if k != i]
            minor = M[r[0]][c[0]] * M[r[1]][c[1]] - M[r[0]][c[1]] * M[r[1]][c[0]]
            adj[i][j] = (-1) ** (i + j) * minor
    return [[adj[i][j] / det for j in range(3)] for i in range(3)], det


def _det3(M):
    return _inv3(M)[1]


# ---------------------------------------------------------------------------
# the model container
# ---------------------------------------------------------------------------

@dataclass
class ModelInstance:
    """A closed G2-structure with a T^3-action, as evaluators on R^7."""

    name: str
    generators: list
    phi_fn: object
    starphi_fn: object = None
    expected_type: int = 0
    metadata: dict = field(default_factory=dict)
    periods: tuple = (TWO_PI, TWO_PI, TWO_PI)
    flat: bool = False
    sampler: object = None
    canonical_fn: object = None
    spec_phi: object = None
    spec_starphi: object = None
    singular: dict = field(default_factory=dict)
    chart: object = None

    dim = 7

    def chart_domain(self, n):
        """Sampling grid for field files: the base torus for invariant models, else a 7-dim chart."""
        if self.is_invariant:
            return Domain.torus(4, n)
        if self.chart is not None:
            return Domain(self.chart(n))
        return Domain.cube(7, n)

    def grid_points(self, domain):
        """Points of R^7 for a chart grid (base grids get ``t = 0``)."""
        pts = np.stack(np.meshgrid(*[ax.points() for ax in domain.axes], indexing="ij"), axis=-1)
        if domain.dim < 7:
            pts = np.concatenate([pts, np.zeros(pts.shape[:-1] + (7 - domain.dim,))], axis=-1)
        return pts

    # evaluators ----------------------------------------------------------
    def phi(self, p):
        p = np.asarray(p, dtype=float)
        return KForm(7, 3, self.phi_fn(p))

    def starphi(self, p):
        p = np.asarray(p, dtype=float)
        if self.starphi_fn is not None:
            return KForm(7, 4, self.starphi_fn(p))
        return self.g2(p).starphi

    def g2(self, p, chunk=4096):
        """Induced structure at ``p``; large batches are processed in chunks to bound memory."""
        p = np.asarray(p, dtype=float)
        flat = p.reshape(-1, 7)
        if len(flat) <= chunk:
            return metric_from_3form(self.phi(p))
        parts = [metric_from_3form(self.phi(flat[i:i + chunk])) for i in range(0, len(flat), chunk)]
        shape = p.shape[:-1]

        def cat(xs, tail):
            return np.concatenate(xs).reshape(shape + tail)

        return G2Point(
            phi=KForm(7, 3, cat([q.phi.comps for q in parts], (35,))),
            g=cat([q.g for q in parts], (7, 7)),
            vol=KForm(7, 7, cat([q.vol.comps for q in parts], (1,))),
            starphi=KForm(7, 4, cat([q.starphi.comps for q in parts], (35,))),
            orientation=cat([np.atleast_1d(q.orientation) for q in parts], ()),
        )

    def U(self, p):
        """Generator vectors at ``p``; shape ``(..., 3, 7)``."""
        p = np.asarray(p, dtype=float)
        return np.stack([p @ V.M.T + V.c for V in self.generators], axis=-2)

    def _affine(self, lam):
        lam = np.asarray(lam, dtype=float)
        G = np.zeros((8, 8))
        for l, V in zip(lam, self.generators):
            G[:7, :7] += l * V.M
            G[:7, 7] += l * V.c
        return expm(G)

    def act(self, lam, p):
        """Group element ``lam`` (coordinates on R^3) applied to points ``p``."""
        E = self._affine(lam)
        p = np.asarray(p, dtype=float)
        return p @ E[:7, :7].T + E[:7, 7]

    def canonical(self, p):
        """Representative of ``p`` in the model's fundamental domain."""
        if self.canonical_fn is None:
            return np.asarray(p, dtype=float)
        return self.canonical_fn(np.asarray(p, dtype=float))

    def same_point(self, p, q, tol=1e-9):
        return bool(np.max(np.abs(self.canonical(p) - self.canonical(q))) < tol)

    def sample(self, rng, n):
        if self.sampler is None:
            return rng.uniform(-1.0, 1.0, size=(n, 7))
        return self.sampler(rng, n)

    # invariant-form data --------------------------------------------------
    @property
    def is_invariant(self):
        return self.spec_phi is not None

    def invariant_phi(self, domain):
        if not self.is_invariant:
            raise InvalidModel(f"{self.name} has no invariant-form description")
        return self.spec_phi(domain.coords()).invariant_form(domain)

    def invariant_starphi(self, domain):
        """Dual 4-form over the base; from the closed form when one is attached,
        otherwise the Hodge star at every base grid point (``*phi`` is invariant)."""
        if not self.is_invariant:
            raise InvalidModel(f"{self.name} has no invariant-form description")
        if self.spec_starphi is not None:
            return self.spec_starphi(domain.coords()).invariant_form(domain)
        star = self.g2(self.grid_points(domain)).starphi.comps
        m = domain.dim
        terms = {}
        for p, K in enumerate(basis(7, 4)):
            I = tuple(k for k in K if k < m)
            S = tuple(k - m for k in K if k >= m)
            terms.setdefault(S, {})[I] = star[..., p]
        return InvariantForm(domain, 4, {S: FormField(domain, 4 - len(S), c) for S, c in terms.items()})

    # checks ----------------------------------------------------------------
    def bracket_residual(self):
        """Max entry of ``[U_i, U_j]`` for the affine generators (exact)."""
        r = 0.0
        for i in range(3):
            for j in range(i + 1, 3):
                Vi, Vj = self.generators[i], self.generators[j]
                # [V, W] for V = Mx + c, W = Nx + d is (N M - M N) x + (N c - M d)
                r = max(r, np.max(np.abs(Vj.M @ Vi.M - Vi.M @ Vj.M)),
                        np.max(np.abs(Vj.M @ Vi.c - Vi.M @ Vj.c)))
        return float(r)

    def stabilizer_dim(self, p, tol=1e-9):
        s = np.linalg.svd(self.U(p), compute_uv=False)
        return 3 - int(np.sum(s > tol * max(1.0, s.max())))

    def stabilizer_order(self, p, max_order=6, tol=1e-9):
        """Size of the finite stabilizer among torsion elements of order <= ``max_order``."""
        p = np.asarray(p, dtype=float)
        found = set()
        for N in range(1, max_order + 1):
            for k in np.ndindex(N, N, N):
                frac = tuple(np.array(k) / N)
                key = tuple(np.round(np.array(frac) % 1.0, 12))
                if key in found:
                    continue
                lam = np.array(frac) * np.array(self.periods)
                if self.same_point(self.act(lam, p), p, tol):
                    found.add(key)
        return len(found)


def _const(comps):
    comps = np.asarray(comps, dtype=float)
    return lambda p: np.broadcast_to(comps, np.shape(p)[:-1] + comps.shape).copy()


def _model_type(phi_comps, U):
    gp = metric_from_3form(KForm(7, 3, phi_comps))
    from .g2_point import point_reduce

    pr = point_reduce(gp, U)
    a = float(pr.a)
    if abs(a) < 1e-10:
        return 3, a
    if abs(1 - abs(a)) < 1e-8:
        return 2, a
    return 1, a


# ---------------------------------------------------------------------------
# flat tori R^7 / Z^7
# ---------------------------------------------------------------------------

def is_primitive(vectors):
    """True if the integer vectors extend to a basis of Z^n (gcd of maximal minors is 1)."""
    V = np.asarray(vectors)
    k, n = V.shape
    g = 0
    for cols in combinations(range(n), k):
        m = int(round(np.linalg.det(V[:, cols])))
        g = gcd(g, abs(m))
    return g == 1


def flat_quotient(Pi_basis):
    """``(R^7 / Z^7, phi_o)`` with the translation action along a rational 3-plane.

    ``Pi_basis`` holds three integer vectors; the action is
    ``lam . x = x + sum_i lam_i U_i / (2 pi)``.
    """
    V = np.asarray(Pi_basis)
    if V.shape != (3, 7):
        raise InvalidModel("need three integer vectors in Z^7")
    if not np.all(V == np.round(V)):
        raise InvalidModel("basis vectors must be integral")
    V = V.astype(float)
    if np.linalg.matrix_rank(V) < 3:
        raise DependentGenerators("basis vectors are linearly dependent")
    if not is_primitive(V.astype(int)):
        raise InvalidModel("basis is not primitive in Z^7")
    gens = [VectorField.constant(v / TWO_PI) for v in V]
    t, a = _model_type(PHI_O.comps, V / TWO_PI)
    return ModelInstance(
        name="flat_quotient",
        generators=gens,
        phi_fn=_const(PHI_O.comps),
        starphi_fn=_const(metric_from_3form(PHI_O).starphi.comps),
        expected_type=t,
        metadata={"Pi": V.astype(int).tolist(), "a": a, "lattice": "Z^7"},
        flat=True,
        sampler=lambda rng, n: rng.uniform(0.0, 1.0, size=(n, 7)),
        canonical_fn=lambda p: np.mod(p, 1.0),
        chart=lambda n: [periodic(n, 1.0) for _ in range(7)],
    )


# ---------------------------------------------------------------------------
# isotropic flat models
# ---------------------------------------------------------------------------

def _rot(dim, pairs):
    """Rotation generator ``sum w (x_a d/dx_b - x_b d/dx_a)`` for (a, b, w) in pairs."""
    M = np.zeros((dim, dim))
    for a_, b_, w in pairs:
        M[b_, a_] += w
        M[a_, b_] -= w
    return M


def _s1c3_phi():
    # coordinates (x, x1, y1, x2, y2, x3, y3)
    dx = {(0,): 1.0}
    dzr = [{(1,): 1.0}, {(3,): 1.0}, {(5,): 1.0}]
    dzi = [{(2,): 1.0}, {(4,): 1.0}, {(6,): 1.0}]
    kahler = sp_add(*[sp_wedge(dzr[k], dzi[k]) for k in range(3)])
    re = sp_add(
        sp_wedge(dzr[0], dzr[1], dzr[2]),
        sp_scale(sp_wedge(dzr[0], dzi[1], dzi[2]), -1.0),
        sp_scale(sp_wedge(dzi[0], dzr[1], dzi[2]), -1.0),
        sp_scale(sp_wedge(dzi[0], dzi[1], dzr[2]), -1.0),
    )
    f = sp_add(sp_wedge(dx, kahler), re)
    return KForm.from_terms(7, 3, list(f.items()))


def _t2rc2_phi():
    # coordinates (x, y, u, zr, zi, wr, wi)
    dx, dy, du = {(0,): 1.0}, {(1,): 1.0}, {(2,): 1.0}
    dzr, dzi, dwr, dwi = {(3,): 1.0}, {(4,): 1.0}, {(5,): 1.0}, {(6,): 1.0}
    P = sp_add(sp_wedge(dzr, dwr), sp_scale(sp_wedge(dzi, dwi), -1.0))
    Q = sp_add(sp_wedge(dzr, dwi), sp_wedge(dzi, dwr))
    f = sp_add(
        sp_wedge(du, dx, dy),
        sp_scale(sp_wedge(du, sp_add(sp_wedge(dzr, dzi), sp_wedge(dwr, dwi))), -1.0),
        sp_scale(sp_add(sp_wedge(dx, P), sp_wedge(dy, Q)), -1.0),
    )
    return KForm.from_terms(7, 3, list(f.items()))


def flat_s1_c3():
    """``S^1 x C^3`` with the flat torsion-free ``phi`` and a T^3 of weights (1,0,-1), (0,1,-1).

    Coordinates ``(x, Re z1, Im z1, Re z2, Im z2, Re z3, Im z3)``.  The
    generators are ``d/dx``, the rotation ``(z1, z3) -> (e^{it} z1, e^{-it} z3)``
    and ``(z2, z3) -> (e^{it} z2, e^{-it} z3)``.
    """
    phi = _s1c3_phi()
    U1 = VectorField.constant(np.eye(7)[0])
    U2 = VectorField(M=_rot(7, [(1, 2, 1.0), (5, 6, -1.0)]), kind="rotation")
    U3 = VectorField(M=_rot(7, [(3, 4, 1.0), (5, 6, -1.0)]), kind="rotation")

    def sampler(rng, n):
        p = rng.uniform(-1.0, 1.0, size=(n, 7))
        p[:, 0] = rng.uniform(0, TWO_PI, size=n)
        return p

    def canon(p):
        q = np.array(p, dtype=float)
        q[..., 0] = np.mod(q[..., 0], TWO_PI)
        return q

    def stratum(k):
        # exactly one z_k nonzero: circle stabilizer
        def s(rng, n):
            p = np.zeros((n, 7))
            p[:, 0] = rng.uniform(0, TWO_PI, size=n)
            r = rng.uniform(0.05, 0.8, size=n)
            ang = rng.uniform(0, TWO_PI, size=n)
            p[:, 1 + 2 * k] = r * np.cos(ang)
            p[:, 2 + 2 * k] = r * np.sin(ang)
            return p
        return s

    def origin(rng, n):
        p = np.zeros((n, 7))
        p[:, 0] = rng.uniform(0, TWO_PI, size=n)
        return p

    return ModelInstance(
        name="flat_s1_c3",
        generators=[U1, U2, U3],
        phi_fn=_const(phi.comps),
        starphi_fn=_const(metric_from_3form(phi).starphi.comps),
        expected_type=3,
        metadata={"weights": [[1, 0, -1], [0, 1, -1]], "coords": "x, z1, z2, z3"},
        flat=True,
        sampler=sampler,
        canonical_fn=canon,
        singular={"z1": (stratum(0), 1), "z2": (stratum(1), 1), "z3": (stratum(2), 1), "origin": (origin, 2)},
        chart=lambda n: [periodic(n)] + [box(n, -1.0, 1.0) for _ in range(6)],
    )


def flat_t2_r_c2():
    """``T^2 x R x C^2`` with coordinates ``(x, y, u, Re z, Im z, Re w, Im w)``.

    Generators: ``d/dx``, ``d/dy`` and the rotation ``(z, w) -> (e^{it} z, e^{-it} w)``.
    """
    phi = _t2rc2_phi()
    U1 = VectorField.constant(np.eye(7)[0])
    U2 = VectorField.constant(np.eye(7)[1])
    U3 = VectorField(M=_rot(7, [(3, 4, 1.0), (5, 6, -1.0)]), kind="rotation")

    def sampler(rng, n):
        p = rng.uniform(-1.0, 1.0, size=(n, 7))
        p[:, :2] = rng.uniform(0, TWO_PI, size=(n, 2))
        return p

    def canon(p):
        q = np.array(p, dtype=float)
        q[..., :2] = np.mod(q[..., :2], TWO_PI)
        return q

    def axis(rng, n):
        p = np.zeros((n, 7))
        p[:, :2] = rng.uniform(0, TWO_PI, size=(n, 2))
        p[:, 2] = rng.uniform(-0.8, 0.8, size=n)
        return p

    return ModelInstance(
        name="flat_t2_r_c2",
        generators=[U1, U2, U3],
        phi_fn=_const(phi.comps),
        starphi_fn=_const(metric_from_3form(phi).starphi.comps),
        expected_type=3,
        metadata={"weights": [1, -1], "coords": "x, y, u, z, w"},
        flat=True,
        sampler=sampler,
        canonical_fn=canon,
        singular={"zw=0": (axis, 1)},
        chart=lambda n: [periodic(n), periodic(n)] + [box(n, -1.0, 1.0) for _ in range(5)],
    )


# ---------------------------------------------------------------------------
# products T^3 x X over a hypersymplectic base
# ---------------------------------------------------------------------------

def _triple_callables(omega):
    """Normalise a triple description to ``x -> [dict, dict, dict]``."""
    if callable(omega):
        return omega
    forms = []
    for w in omega:
        if isinstance(w, KForm):
            forms.append({I: float(c) for I, c in zip(basis(4, 2), w.comps) if c != 0})
        else:
            forms.append(dict(w))
    return lambda x: forms


def _product_specs(omega_fn, with_star):
    def phi_spec(x):
        w = omega_fn(x)
        s = InvariantSpec(3)
        s.add((0, 1, 2), {(): 1.0})
        for i in range(3):
            s.add((i,), w[i], -1.0)
        return s

    def star_spec(x):
        w = omega_fn(x)
        s = InvariantSpec(4)
        s.add((), {(0, 1, 2, 3): 1.0})
        s.add((1, 2), w[0], -1.0)
        s.add((2, 0), w[1], -1.0)
        s.add((0, 1), w[2], -1.0)
        return s

    return phi_spec, (star_spec if with_star else None)


def _invariant_model(name, phi_spec, star_spec, expected_type, metadata, base_sampler=None, **kw):
    def phi_fn(p):
        x = [p[..., k] for k in range(4)]
        return phi_spec(x).at(p.shape[:-1])

    starphi_fn = None
    if star_spec is not None:
        def starphi_fn(p):
            x = [p[..., k] for k in range(4)]
            return star_spec(x).at(p.shape[:-1])

    gens = [VectorField.constant(np.eye(7)[4 + i]) for i in range(3)]

    def sampler(rng, n):
        p = rng.uniform(0, TWO_PI, size=(n, 7))
        if base_sampler is not None:
            p[:, :4] = base_sampler(rng, n)
        return p

    return ModelInstance(
        name=name,
        generators=gens,
        phi_fn=phi_fn,
        starphi_fn=starphi_fn,
        expected_type=expected_type,
        metadata=metadata,
        sampler=sampler,
        spec_phi=phi_spec,
        spec_starphi=star_spec,
        **kw,
    )


def product_t3(omega=STANDARD_TRIPLE, hyperkahler=None, name="product_t3"):
    """``T^3 x X`` with ``phi = dt^123 - dt^i ^ omega_i``.

    ``omega`` is three constant 2-forms on R^4 (KForms) or a callable
    ``x -> [ {I: coeff}, ...]`` of coordinate arrays.  The closed-form dual
    ``mu - dt^23 ^ omega_1 - dt^31 ^ omega_2 - dt^12 ^ omega_3`` is attached
    when the triple is orthonormal (``Q = I``); otherwise ``*phi`` is
    computed from the induced metric.
    """
    fn = _triple_callables(omega)
    if hyperkahler is None:
        if callable(omega):
            hyperkahler = False
        else:
            Q = intersection_matrix(HSTriple(tuple(omega)))
            hyperkahler = bool(np.allclose(Q, np.eye(3), atol=1e-14))
    # positivity check at a few base points
    rng = np.random.default_rng(0)
    x = [rng.uniform(0, TWO_PI, size=16) for _ in range(4)]
    w = fn(x)
    comps = [[np.broadcast_to(np.asarray(wi.get(P, 0.0), dtype=float), (16,)) for P in basis(4, 2)] for wi in w]
    Q = intersection_matrix(HSTriple(tuple(np.stack(c, axis=-1) for c in comps)))
    if np.any(definiteness(Q) != 1):
        raise InvalidModel("triple is not positive definite on the sampled base points")
    phi_spec, star_spec = _product_specs(fn, hyperkahler)
    m = _invariant_model(name, phi_spec, star_spec, 2, {"hyperkahler": hyperkahler})
    m.metadata["triple_fn"] = fn
    return m


# ---------------------------------------------------------------------------
# type 1 families
# ---------------------------------------------------------------------------

def type1_phi_spec(a, A, ahat, beta):
    """Invariant 3-form of a closed structure with non-isotropic, non-associative orbits.

    ``A`` is a nested 3x3 list of coefficient arrays (``det A = 1``),
    ``ahat`` three 1-form dicts and ``beta`` a 1-form dict on the base.
    """
    b2 = 1.0 - a * a
    s = InvariantSpec(3)
    s.add((), sp_wedge(ahat[0], ahat[1], ahat[2]), -1.0 / b2)
    for i in range(3):
        for j in range(3):
            s.add((j,), sp_scale(sp_wedge(beta, ahat[i]), A[i][j]), 1.0 / b2)
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        s.add((j, k), ahat[i], 1.0)
        s.add((k,), sp_wedge(ahat[i], ahat[j]), -a / b2)
    s.add((0, 1, 2), {(): 1.0}, a)
    return s


def type1_starphi_spec(a, A, ahat, beta):
    """Dual 4-form matching :func:`type1_phi_spec`."""
    b2 = 1.0 - a * a
    B2, _ = _inv3(A)
    s = InvariantSpec(4)
    s.add((0, 1, 2), beta, -1.0)
    for p in range(3):
        for q in range(3):
            for k in range(3):
                for l in range(3):
                    if not EPS[p, k, l]:
                        continue
                    for s_ in range(3):
                        for t in range(3):
                            if not EPS[q, s_, t]:
                                continue
                            c = -0.25 / b2 * EPS[p, k, l] * EPS[q, s_, t]
                            s.add((s_, t), sp_scale(sp_wedge(ahat[k], ahat[l]), B2[p][q]), c)
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        s.add((i,), sp_wedge(beta, ahat[j], ahat[k]), 1.0 / b2)
        s.add((j, k), sp_wedge(beta, ahat[i]), a / b2)
    s.add((), sp_wedge(ahat[0], ahat[1], ahat[2], beta), a / (b2 * b2))
    return s


def type1_metric(a, A, ahat, beta, shape):
    """``theta^t A theta + (ahat^t A ahat + beta^2) / b^2`` as an array ``shape + (7, 7)``."""
    b2 = 1.0 - a * a
    g = np.zeros(tuple(shape) + (7, 7))
    avec = [[ah.get((k,), 0.0) for k in range(4)] for ah in ahat]
    bvec = [beta.get((k,), 0.0) for k in range(4)]
    for i in range(3):
        for j in range(3):
            g[..., 4 + i, 4 + j] += A[i][j]
            for k in range(4):
                for l in range(4):
                    g[..., k, l] += A[i][j] * avec[i][k] * avec[j][l] / b2
    for k in range(4):
        for l in range(4):
            g[..., k, l] += bvec[k] * bvec[l] / b2
    return g


def type1_family(a, A=None, ahat=None, beta=None, name="type1_family", check_det=True):
    """Closed structure with constant ``a`` from base data.

    ``A``, ``ahat`` and ``beta`` are callables of the base coordinate list
    ``x = [x1, x2, x3, y]`` returning, respectively, a nested 3x3 list, three
    1-form dicts and a 1-form dict; constants are accepted too.  Defaults
    give the flat configuration ``A = I``, ``ahat_i = dx^i``, ``beta = dy``.
    """
    if not 0 < abs(a) < 1:
        raise InvalidModel("a must lie in (-1, 0) or (0, 1)")
    A_fn = _as_fn(A if A is not None else np.eye(3).tolist())
    ah_fn = _as_fn(ahat if ahat is not None else [{(0,): 1.0}, {(1,): 1.0}, {(2,): 1.0}])
    be_fn = _as_fn(beta if beta is not None else {(3,): 1.0})

    def phi_spec(x):
        return type1_phi_spec(a, A_fn(x), ah_fn(x), be_fn(x))

    def star_spec(x):
        return type1_starphi_spec(a, A_fn(x), ah_fn(x), be_fn(x))

    if check_det:
        rng = np.random.default_rng(1)
        x = [rng.uniform(0, TWO_PI, size=32) for _ in range(4)]
        d = _det3(A_fn(x))
        if np.max(np.abs(np.asarray(d) - 1.0)) > 1e-10:
            raise InvalidModel("det A must be identically 1")
        ah = ah_fn(x)
        be = be_fn(x)
        co = sp_wedge(ah[0], ah[1], ah[2], be).get((0, 1, 2, 3), 0.0)
        if np.min(np.abs(co)) < 1e-12:
            raise InvalidModel("ahat_1..3, beta do not form a coframe")

    m = _invariant_model(name, phi_spec, star_spec, 1, {"a": a})
    m.metadata.update({"A_fn": A_fn, "ahat_fn": ah_fn, "beta_fn": be_fn})
    return m


def constant_flat_A():
    """A constant, non-diagonal ``A`` with ``det A = 1`` for flat type 1 examples."""
    R = np.array([[1.0, 0.3, 0.0], [0.3, 1.2, -0.2], [0.0, -0.2, 0.9]])
    return (R / np.cbrt(np.linalg.det(R))).tolist()


def _as_fn(v):
    return v if callable(v) else (lambda x, v=v: v)


def t4_diagonal(f=None, a=0.5, eps=0.1):
    """The diagonal T^4 family with ``f_i = f_i(x^i, y)``.

    Default ``f_i = exp(eps sin(x^i + y))``.  ``f`` may be a callable
    ``(i, xi, y) -> array``.
    """
    if f is None:
        def f(i, xi, y):
            return np.exp(eps * np.sin(xi + y))

    def fs(x):
        return [f(i, x[i], x[3]) for i in range(3)]

    def A(x):
        f1, f2, f3 = fs(x)
        z = 0.0
        return [[f2 * f3 / f1**2, z, z], [z, f1 * f3 / f2**2, z], [z, z, f1 * f2 / f3**2]]

    def ahat(x):
        return [{(0,): 1.0}, {(1,): 1.0}, {(2,): 1.0}]

    def beta(x):
        f1, f2, f3 = fs(x)
        return {(3,): 1.0 / (f1 * f2 * f3)}

    m = type1_family(a, A, ahat, beta, name="t4_diagonal")
    m.metadata["f"] = f
    return m


def quotient_triple_spec(a, A, ahat, beta):
    """``omega_i = (A_ij ahat_j ^ beta + 1/2 eps_ikl ahat_kl) / b^2`` and ``mu = ahat_123 beta / b^4``."""
    b2 = 1.0 - a * a
    out = []
    for i in range(3):
        w = {}
        for j in range(3):
            w = sp_add(w, sp_scale(sp_wedge(ahat[j], beta), A[i][j] / b2))
        for k in range(3):
            for l in range(3):
                if EPS[i, k, l]:
                    w = sp_add(w, sp_scale(sp_wedge(ahat[k], ahat[l]), 0.5 * EPS[i, k, l] / b2))
        out.append(w)
    mu = sp_scale(sp_wedge(ahat[0], ahat[1], ahat[2], beta), 1.0 / (b2 * b2))
    return out, mu


# ---------------------------------------------------------------------------
# the Z2 quotient with an exceptional orbit
# ---------------------------------------------------------------------------

def z2_quotient_example():
    """``R^4 x ([0, 2 pi] x T^2) / ~`` with ``(x, 0, t2, t3) ~ (-x, 2 pi, t2, t3)``.

    Coordinates ``(x1..x4, t1, t2, t3)``; ``phi = dt^123 - dt^i ^ omega_i``
    with the standard triple.  The first circle factor of the acting torus
    has period ``4 pi``.
    """
    fn = _triple_callables(STANDARD_TRIPLE)
    phi_spec, star_spec = _product_specs(fn, True)

    def canon(p):
        q = np.array(p, dtype=float)
        t1 = np.mod(q[..., 4], 2 * TWO_PI)
        flip = t1 >= TWO_PI - 1e-12
        t1 = np.where(flip, t1 - TWO_PI, t1)
        q[..., 4] = np.where(np.abs(t1 - TWO_PI) < 1e-12, 0.0, t1)
        q[..., :4] = np.where(flip[..., None], -q[..., :4], q[..., :4])
        q[..., 5:] = np.mod(q[..., 5:], TWO_PI)
        return q

    def base_sampler(rng, n):
        return rng.uniform(-1.0, 1.0, size=(n, 4))

    m = _invariant_model("z2_quotient", phi_spec, star_spec, 2, {"identification": "(x,0) ~ (-x,2pi)"},
                         base_sampler=base_sampler)
    m.periods = (2 * TWO_PI, TWO_PI, TWO_PI)
    m.canonical_fn = canon
    m.flat = True
    return m


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

PI_PRESETS = {
    "associative": [[1, 0, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0, 0]],
    "isotropic": [[1, 0, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0, 0], [0, 0, 0, 1, 0, 0, 0]],
    "generic": [[1, 0, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0, 0], [0, 0, 1, 1, 0, 0, 0]],
}


def parse_pi(text):
    """``"1,0,0,0,0,0,0;0,1,..."`` or a preset name to a 3x7 integer list."""
    if text in PI_PRESETS:
        return PI_PRESETS[text]
    rows = [r for r in text.replace(" ", "").split(";") if r]
    vecs = [[int(v) for v in r.split(",")] for r in rows]
    if len(vecs) != 3 or any(len(v) != 7 for v in vecs):
        raise ValueError("expected three semicolon-separated vectors of 7 integers")
    return vecs


def build(name, **params):
    """Construct a model by registry name."""
    if name == "flat_quotient":
        return flat_quotient(parse_pi(params.get("pi", "generic")))
    if name == "flat_s1_c3":
        return flat_s1_c3()
    if name == "flat_t2_r_c2":
        return flat_t2_r_c2()
    if name == "product_t3":
        return product_t3()
    if name == "type1_family":
        return type1_family(float(params.get("a", 0.5)))
    if name == "t4_diagonal":
        return t4_diagonal(a=float(params.get("a", 0.5)), eps=float(params.get("eps", 0.1)))
    if name == "z2_quotient":
        return z2_quotient_example()
    raise InvalidModel(f"unknown model {name!r}")


MODEL_NAMES = ("flat_quotient", "flat_s1_c3", "flat_t2_r_c2", "product_t3", "type1_family",
               "t4_diagonal", "z2_quotient")
