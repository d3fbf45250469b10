"""Hypersymplectic triples in dimension four.

A triple is stored as three 2-forms together with a reference volume form
``mu``.  The same functions work pointwise (:class:`KForm` input) and on
grids (:class:`FormField` input); internally everything is reduced to the
six component arrays of each 2-form, which broadcast against each other.
"""

from dataclasses import dataclass, field

import numpy as np

from .alg_point import EPS, KForm, basis
from .exceptions import DimensionMismatch, IndefiniteTriple, ZeroVolume
from .fieldcalc import BOX_MARGIN, FormField, ext_d

PAIRS = basis(4, 2)  # (0,1) (0,2) (0,3) (1,2) (1,3) (2,3)
# e^P ^ e^Q = sign e^{0123} for complementary pairs
_COMPL = {(0, 1): ((2, 3), 1.0), (0, 2): ((1, 3), -1.0), (0, 3): ((1, 2), 1.0),
          (1, 2): ((0, 3), 1.0), (1, 3): ((0, 2), -1.0), (2, 3): ((0, 1), 1.0)}

STANDARD_TRIPLE = (
    KForm.from_terms(4, 2, [((0, 1), 1.0), ((2, 3), 1.0)]),
    KForm.from_terms(4, 2, [((0, 2), 1.0), ((3, 1), 1.0)]),
    KForm.from_terms(4, 2, [((0, 3), 1.0), ((1, 2), 1.0)]),
)


def _comps(w):
    """Six component arrays of a 2-form in dimension 4 (KForm, FormField or array)."""
    if isinstance(w, FormField):
        if w.domain.dim != 4 or w.degree != 2:
            raise DimensionMismatch("expected a 2-form field on a 4-dimensional domain")
        return [w.component(P) for P in PAIRS]
    if isinstance(w, KForm):
        if w.dim != 4 or w.degree != 2:
            raise DimensionMismatch("expected a 2-form in dimension 4")
        c = w.comps
    else:
        c = np.asarray(w, dtype=float)
    if c.shape[-1] != 6:
        raise DimensionMismatch("a 2-form in dimension 4 has 6 components")
    return [c[..., p] for p in range(6)]


def _top(m):
    if isinstance(m, FormField):
        if m.degree != 4:
            raise DimensionMismatch("reference volume must be a 4-form")
        return m.component((0, 1, 2, 3))
    if isinstance(m, KForm):
        return m.comps[..., 0]
    return np.asarray(m, dtype=float)


def _wedge22(u, v):
    """Coefficient of ``e^{0123}`` in ``u ^ v`` for component lists."""
    out = 0.0
    for p, P in enumerate(PAIRS):
        Q, s = _COMPL[P]
        out = out + s * u[p] * v[PAIRS.index(Q)]
    return out


@dataclass
class HSTriple:
    """Three 2-forms on a 4-dimensional domain with a reference volume ``mu``.

    ``mu`` defaults to ``e^{0123}`` (pointwise) or ``dx^{0123}`` (fields).
    """

    omega: tuple
    mu: object = None
    domain: object = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.omega) != 3:
            raise DimensionMismatch("a triple has three 2-forms")
        self.omega = tuple(self.omega)
        if self.domain is None and isinstance(self.omega[0], FormField):
            self.domain = self.omega[0].domain
        if self.mu is None:
            self.mu = 1.0

    @property
    def is_field(self):
        return self.domain is not None

    def comps(self):
        return [_comps(w) for w in self.omega]

    def mu_coeff(self):
        return _top(self.mu)

    def transformed(self, K):
        """Triple ``omega'_i = K_ij omega_j``."""
        K = np.asarray(K, dtype=float)
        new = []
        for i in range(3):
            w = self.omega[0] * K[i, 0] + self.omega[1] * K[i, 1] + self.omega[2] * K[i, 2]
            new.append(w)
        return HSTriple(tuple(new), self.mu, self.domain)


def intersection_matrix(t):
    """``Q_ij = (omega_i ^ omega_j) / (2 mu)``; shape ``(..., 3, 3)``.

    Raises ZeroVolume when ``mu`` vanishes somewhere.
    """
    mu = t.mu_coeff()
    if np.any(mu == 0):
        loc = np.argwhere(np.atleast_1d(mu) == 0)[0]
        raise ZeroVolume("reference volume vanishes", location=tuple(int(i) for i in loc))
    c = t.comps()
    entries = {}
    for i in range(3):
        for j in range(i, 3):
            entries[i, j] = _wedge22(c[i], c[j]) / (2.0 * mu)
    shape = np.broadcast_shapes(*(np.shape(v) for v in entries.values()))
    Q = np.empty(shape + (3, 3))
    for (i, j), v in entries.items():
        Q[..., i, j] = v
        Q[..., j, i] = v
    return Q


def definiteness(Q):
    """+1 where Q is positive definite, -1 where negative definite, 0 otherwise."""
    w = np.linalg.eigvalsh(Q)
    return np.where(np.all(w > 0, axis=-1), 1, np.where(np.all(w < 0, axis=-1), -1, 0))


def _contract(c, a):
    """Components of ``e_a ⌟ w`` (a 1-form) from the six components."""
    out = [0.0] * 4
    for p, (i, j) in enumerate(PAIRS):
        if i == a:
            out[j] = out[j] + c[p]
        elif j == a:
            out[i] = out[i] - c[p]
    return out


def _wedge112(u, v, w):
    """Coefficient of ``e^{0123}`` in ``u ^ v ^ w`` (1-form, 1-form, 2-form)."""
    uv = []
    for (i, j) in PAIRS:
        uv.append(u[i] * v[j] - u[j] * v[i])
    return _wedge22(uv, w)


def triple_bilinear(t):
    """``h_ab`` with ``(1/6) eps^ijk (e_a⌟w_i)^(e_b⌟w_j)^w_k = h_ab e^{0123}``."""
    c = t.comps()
    ctr = [[_contract(c[i], a) for a in range(4)] for i in range(3)]
    ent = {}
    for a in range(4):
        for b in range(a, 4):
            v = 0.0
            for i in range(3):
                for j in range(3):
                    for k in range(3):
                        if EPS[i, j, k]:
                            v = v + EPS[i, j, k] * _wedge112(ctr[i][a], ctr[j][b], c[k])
            ent[a, b] = v / 6.0
    shape = np.broadcast_shapes(*(np.shape(v) for v in ent.values()))
    h = np.empty(shape + (4, 4))
    for (a, b), v in ent.items():
        h[..., a, b] = v
        h[..., b, a] = v
    return h


def triple_metric(t):
    """Metric ``g`` with ``g(u,v) dvol_g = (1/6) eps^ijk u⌟w_i ^ v⌟w_j ^ w_k``.

    Returns ``(g, orientation)`` where ``orientation`` is +1 if ``e^{0123}``
    is positively oriented for ``dvol_g``.  Raises IndefiniteTriple when the
    intersection matrix is not definite.
    """
    Q = intersection_matrix(t)
    sgn = definiteness(Q)
    if np.any(sgn == 0):
        loc = np.argwhere(np.atleast_1d(sgn) == 0)[0]
        raise IndefiniteTriple("intersection matrix is not definite", location=tuple(int(i) for i in loc))
    h = triple_bilinear(t)
    dh = np.linalg.det(h)
    s = np.where(np.all(np.linalg.eigvalsh(h) > 0, axis=-1), 1.0, -1.0)
    g = s[..., None, None] * h / np.abs(dh)[..., None, None] ** (1.0 / 6.0)
    return g, s


def volume_ratio(t):
    """``dvol_g / mu = det(Q)^(1/3)`` (positive for definite Q)."""
    Q = intersection_matrix(t)
    return np.cbrt(np.linalg.det(Q))


def normalized_q(t):
    """Intersection matrix taken against ``dvol_g`` instead of ``mu``."""
    Q = intersection_matrix(t)
    d = np.abs(np.linalg.det(Q)) ** (1.0 / 3.0)
    return Q / d[..., None, None]


@dataclass
class TripleClassification:
    closed: bool
    hypersymplectic: bool
    hyperkahler: bool
    torsion_free: bool
    residuals: dict


def classify_triple(t, tol=1e-8, margin=BOX_MARGIN):
    """Closed / hypersymplectic / hyperkahler / torsion-free flags for a field triple.

    Hyperkahler means the normalised intersection matrix (see
    :func:`normalized_q`) is constant; torsion-free means
    ``d(Qn^{-1}_ij omega_j) = 0`` with the same normalisation.
    """
    if not t.is_field:
        raise TypeError("classify_triple needs a triple of FormFields")
    dom = t.domain
    res = {}
    dw = [ext_d(w).sup(margin) for w in t.omega]
    res["d_omega"] = max(dw)
    closed = res["d_omega"] < tol
    Q = intersection_matrix(t)
    sgn = definiteness(Q)
    if np.any(sgn == 0):
        loc = np.argwhere(np.atleast_1d(sgn) == 0)[0]
        raise IndefiniteTriple("intersection matrix is not definite", location=tuple(int(i) for i in loc))
    if np.any(sgn != sgn.flat[0]):
        raise IndefiniteTriple("intersection matrix changes sign")
    hyper = bool(closed)
    Qn = normalized_q(t)
    inner = dom.interior(Qn, margin)
    flat = inner.reshape(-1, 3, 3)
    res["q_variation"] = float(np.max(flat.max(axis=0) - flat.min(axis=0)))
    hk = hyper and res["q_variation"] < tol
    Qi = np.linalg.inv(Qn)
    tf = 0.0
    for i in range(3):
        form = FormField.zeros(dom, 2)
        for j in range(3):
            form = form + t.omega[j] * Qi[..., i, j]
        tf = max(tf, ext_d(form).sup(margin))
    res["torsion"] = tf
    return TripleClassification(
        closed=bool(closed), hypersymplectic=bool(hyper), hyperkahler=bool(hk),
        torsion_free=bool(tf < tol), residuals=res,
    )
