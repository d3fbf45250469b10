"""Exterior algebra at a point (dimension <= 7).

A k-form in dimension n is stored as a real array whose last axis holds the
``binom(n, k)`` components over strictly increasing multi-indices in
lexicographic order (the order of :func:`itertools.combinations`).  Any
leading axes are batch axes, so every routine here also works on sampled
fields without a Python loop over points.

Indices are 0-based throughout: ``e^{123}`` in the usual notation is the
multi-index ``(0, 1, 2)``.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from math import comb

import numpy as np

from .exceptions import (
    DegenerateMetric,
    DegreeOverflow,
    DimensionMismatch,
    NotPositiveDefinite,
)

MAX_DIM = 7


# ---------------------------------------------------------------------------
# combinatorial tables
# ---------------------------------------------------------------------------

def perm_sign(seq):
    """Parity of the permutation sorting ``seq``; 0 if it has a repeat."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def basis(n, k):
    return tuple(combinations(range(n), k))


@lru_cache(maxsize=None)
def index_of(n, k):
    return {I: pos for pos, I in enumerate(basis(n, k))}


def ncomp(n, k):
    return comb(n, k)


@lru_cache(maxsize=None)
def _wedge_table(n, k1, k2):
    idx = index_of(n, k1 + k2)
    ia, ib, io, sg = [], [], [], []
    for pa, I in enumerate(basis(n, k1)):
        for pb, J in enumerate(basis(n, k2)):
            s = perm_sign(I + J)
            if s == 0:
                continue
            ia.append(pa)
            ib.append(pb)
            io.append(idx[tuple(sorted(I + J))])
            sg.append(s)
    scatter = np.zeros((len(io), comb(n, k1 + k2)))
    scatter[np.arange(len(io)), io] = 1.0
    return np.array(ia, dtype=int), np.array(ib, dtype=int), np.array(sg, float), scatter


@lru_cache(maxsize=None)
def _interior_table(n, k):
    idx = index_of(n, k - 1)
    vi, ai, sg, out = [], [], [], []
    for pa, I in enumerate(basis(n, k)):
        for p, i in enumerate(I):
            vi.append(i)
            ai.append(pa)
            sg.append((-1) ** p)
            out.append(idx[I[:p] + I[p + 1:]])
    scatter = np.zeros((len(out), comb(n, k - 1)))
    scatter[np.arange(len(out)), out] = 1.0
    return np.array(vi, dtype=int), np.array(ai, dtype=int), np.array(sg, float), scatter


@lru_cache(maxsize=None)
def _star_table(n, k):
    """Euclidean star as a matrix: ``*e^I = sign(I, I^c) e^{I^c}``."""
    E = np.zeros((comb(n, n - k), comb(n, k)))
    idx = index_of(n, n - k)
    for pos, I in enumerate(basis(n, k)):
        Ic = tuple(i for i in range(n) if i not in I)
        E[idx[Ic], pos] = perm_sign(I + Ic)
    return E


@lru_cache(maxsize=None)
def _laplace_table(n, k):
    """Index arrays expanding a k-minor along its last row."""
    rows = basis(n, k)
    idx_prev = index_of(n, k - 1)
    r_prev = np.array([idx_prev[I[:-1]] for I in rows], dtype=int)
    r_last = np.array([I[-1] for I in rows], dtype=int)
    c_prev = np.empty((len(rows), k), dtype=int)
    c_pick = np.empty((len(rows), k), dtype=int)
    sg = np.empty(k)
    for q, J in enumerate(rows):
        for p in range(k):
            c_prev[q, p] = idx_prev[J[:p] + J[p + 1:]]
            c_pick[q, p] = J[p]
    for p in range(k):
        sg[p] = (-1) ** (k - 1 + p)
    return r_prev, r_last, c_prev, c_pick, sg


# ---------------------------------------------------------------------------
# component-array kernels
# ---------------------------------------------------------------------------

def wedge_arrays(a, k1, b, k2, n):
    if k1 + k2 > n:
        raise DegreeOverflow(f"degree {k1}+{k2} exceeds dimension {n}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ia, ib, sg, scatter = _wedge_table(n, k1, k2)
    if len(sg) == 0:
        shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        return np.zeros(shape + (comb(n, k1 + k2),))
    terms = a[..., ia] * b[..., ib] * sg
    return terms @ scatter


def interior_arrays(v, a, k, n):
    if k < 1:
        raise DegreeOverflow("cannot contract a 0-form")
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    vi, ai, sg, scatter = _interior_table(n, k)
    terms = v[..., vi] * a[..., ai] * sg
    return terms @ scatter


def compound(M, k):
    """k-th compound matrix: entry ``[I, J]`` is ``det M[I, J]``.

    ``M`` has shape ``(..., n, n)``; computed by Laplace expansion along the
    last row so it stays vectorised over batch axes.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[-1]
    if k == 0:
        return np.ones(M.shape[:-2] + (1, 1))
    C = M
    for j in range(2, k + 1):
        r_prev, r_last, c_prev, c_pick, sg = _laplace_table(n, j)
        sub = C[..., r_prev[:, None, None], c_prev[None, :, :]]
        pick = M[..., r_last[:, None, None], c_pick[None, :, :]]
        C = np.sum(sub * pick * sg, axis=-1)
    return C


def pullback_arrays(P, a, k):
    """Components of ``P^* a``: ``(P^* a)_J = sum_I a_I det P[I, J]``."""
    C = compound(P, k)
    return np.einsum("...ij,...i->...j", C, np.asarray(a, dtype=float))


def evaluate_arrays(a, k, vectors):
    """``a(v_1, ..., v_k)`` for ``vectors`` of shape ``(..., k, n)``."""
    out = np.asarray(a, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    n = vectors.shape[-1]
    for j in range(k):
        out = interior_arrays(vectors[..., j, :], out, k - j, n)
    return out[..., 0]


def hodge_arrays(g, a, k, orientation=1.0):
    """Hodge star of component arrays under the metric ``g`` (shape (..., n, n)).

    ``orientation`` is +1 when ``e^{1...n}`` is positively oriented, -1 when
    it is negatively oriented (may be an array matching the batch shape).
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[-1]
    ginv = np.linalg.inv(g)
    raised = np.einsum("...ij,...j->...i", compound(ginv, k), np.asarray(a, dtype=float))
    scale = np.asarray(orientation, dtype=float) * np.sqrt(np.linalg.det(g))
    return scale[..., None] * (raised @ _star_table(n, k).T)


def inner_arrays(g, a, b, k):
    ginv = np.linalg.inv(np.asarray(g, dtype=float))
    return np.einsum("...i,...ij,...j->...", a, compound(ginv, k), b)


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KForm:
    """An alternating k-form in dimension ``dim``.

    ``comps`` has shape ``(..., binom(dim, degree))``; leading axes batch
    several forms (e.g. samples of a field) of the same degree.
    """

    dim: int
    degree: int
    comps: np.ndarray

    def __post_init__(self):
        if not 0 <= self.dim <= MAX_DIM:
            raise DimensionMismatch(f"dimension {self.dim} outside 0..{MAX_DIM}")
        if not 0 <= self.degree <= self.dim:
            raise DegreeOverflow(f"degree {self.degree} outside 0..{self.dim}")
        c = np.asarray(self.comps, dtype=float)
        if c.ndim == 0:
            c = c.reshape(1)
        if c.shape[-1] != comb(self.dim, self.degree):
            raise DimensionMismatch(
                f"expected {comb(self.dim, self.degree)} components, got {c.shape[-1]}"
            )
        object.__setattr__(self, "comps", c)

    # constructors
    @classmethod
    def zeros(cls, dim, degree, batch=()):
        return cls(dim, degree, np.zeros(tuple(batch) + (comb(dim, degree),)))

    @classmethod
    def basis_form(cls, dim, indices, coeff=1.0):
        """``coeff * e^{i1} ^ ... ^ e^{ik}`` for 0-based ``indices`` in any order."""
        indices = tuple(indices)
        s = perm_sign(indices)
        out = np.zeros(comb(dim, len(indices)))
        if s:
            out[index_of(dim, len(indices))[tuple(sorted(indices))]] = s * coeff
        return cls(dim, len(indices), out)

    @classmethod
    def from_terms(cls, dim, degree, terms):
        """Build from ``{(i, j, ...): coeff}`` or ``[((i, j, ...), coeff), ...]``.

        Index tuples may be in any order; repeated tuples accumulate.
        """
        items = terms.items() if isinstance(terms, dict) else terms
        out = np.zeros(comb(dim, degree))
        idx = index_of(dim, degree)
        for I, c in items:
            s = perm_sign(I)
            if s:
                out[idx[tuple(sorted(I))]] += s * c
        return cls(dim, degree, out)

    @classmethod
    def volume(cls, dim, coeff=1.0):
        return cls(dim, dim, np.array([coeff], dtype=float))

    # algebra
    def _check(self, other):
        if not isinstance(other, KForm):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionMismatch(f"dimension {self.dim} vs {other.dim}")
        if other.degree != self.degree:
            raise DegreeOverflow(f"cannot add degree {self.degree} and {other.degree}")

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return KForm(self.dim, self.degree, self.comps + other.comps)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return KForm(self.dim, self.degree, self.comps - other.comps)

    def __neg__(self):
        return KForm(self.dim, self.degree, -self.comps)

    def __mul__(self, scalar):
        s = np.asarray(scalar, dtype=float)
        if s.ndim:
            s = s[..., None]
        return KForm(self.dim, self.degree, self.comps * s)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / np.asarray(scalar, dtype=float))

    def __xor__(self, other):
        return wedge(self, other)

    def wedge(self, other):
        return wedge(self, other)

    def interior(self, v):
        return interior(v, self)

    def __call__(self, *vectors):
        if len(vectors) != self.degree:
            raise DegreeOverflow(f"{self.degree}-form evaluated on {len(vectors)} vectors")
        if not vectors:
            return self.comps[..., 0]
        return evaluate_arrays(self.comps, self.degree, np.stack(np.broadcast_arrays(*vectors), axis=-2))

    def pullback(self, P):
        return KForm(self.dim, self.degree, pullback_arrays(P, self.comps, self.degree))

    def terms(self, tol=0.0):
        """Nonzero components as ``{multi-index: coeff}`` (unbatched forms only)."""
        return {I: float(c) for I, c in zip(basis(self.dim, self.degree), self.comps) if abs(c) > tol}

    def norm_inf(self):
        return float(np.max(np.abs(self.comps))) if self.comps.size else 0.0


def wedge(a, b):
    """Exterior product of two forms of the same dimension."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimension {a.dim} vs {b.dim}")
    if a.degree + b.degree > a.dim:
        raise DegreeOverflow(f"degree {a.degree}+{b.degree} exceeds dimension {a.dim}")
    return KForm(a.dim, a.degree + b.degree, wedge_arrays(a.comps, a.degree, b.comps, b.degree, a.dim))


def wedge_all(*forms):
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def interior(v, a):
    """Contraction ``v ⌟ a = a(v, ...)``."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != a.dim:
        raise DimensionMismatch(f"vector of length {v.shape[-1]} against {a.dim}-dimensional form")
    if a.degree == 0:
        raise DegreeOverflow("cannot contract a 0-form")
    return KForm(a.dim, a.degree - 1, interior_arrays(v, a.comps, a.degree, a.dim))


def interior_multi(vectors, a):
    """``(v_1 ^ ... ^ v_m) ⌟ a = a(v_1, ..., v_m, ...)``."""
    out = a
    for v in vectors:
        out = interior(v, out)
    return out


def one_form(comps):
    comps = np.asarray(comps, dtype=float)
    return KForm(comps.shape[-1], 1, comps)


@dataclass(frozen=True)
class Metric:
    """Symmetric positive-definite bilinear form, possibly batched."""

    g: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.ndim < 2 or g.shape[-1] != g.shape[-2]:
            raise DimensionMismatch(f"metric must be square, got shape {g.shape}")
        g = 0.5 * (g + np.swapaxes(g, -1, -2))
        eig = np.linalg.eigvalsh(g)
        if np.any(eig <= 0):
            raise DegenerateMetric(f"metric not positive definite (min eigenvalue {eig.min():.3e})")
        object.__setattr__(self, "g", g)

    @property
    def dim(self):
        return self.g.shape[-1]

    def __call__(self, u, v):
        return np.einsum("...i,...ij,...j->...", u, self.g, v)

    def flat(self, v):
        return np.einsum("...ij,...j->...i", self.g, v)

    def sharp(self, w):
        return np.linalg.solve(self.g, np.asarray(w, dtype=float)[..., None])[..., 0]

    def volume(self, orientation=1.0):
        return KForm(self.dim, self.dim, (orientation * np.sqrt(np.linalg.det(self.g)))[..., None])

    def inner(self, a, b):
        return inner_arrays(self.g, a.comps, b.comps, a.degree)

    @classmethod
    def euclidean(cls, n):
        return cls(np.eye(n))


def orientation_sign(orient):
    """Sign of a nonzero top form relative to ``e^{1...n}``."""
    c = np.asarray(orient.comps if isinstance(orient, KForm) else orient, dtype=float)[..., 0]
    if np.any(c == 0):
        raise DegenerateMetric("orientation form vanishes")
    return np.sign(c)


def hodge(g, orient, a):
    """Hodge star of ``a`` for metric ``g`` and the orientation of top form ``orient``.

    ``orient`` may be ``None`` for the standard orientation ``e^{1...n}``.
    """
    if not isinstance(g, Metric):
        g = Metric(g)
    if g.dim != a.dim:
        raise DimensionMismatch(f"metric dimension {g.dim} vs form dimension {a.dim}")
    s = 1.0 if orient is None else orientation_sign(orient)
    return KForm(a.dim, a.dim - a.degree, hodge_arrays(g.g, a.comps, a.degree, s))


# ---------------------------------------------------------------------------
# 3x3 symmetric matrices and Levi-Civita symbols
# ---------------------------------------------------------------------------

def _levi_civita():
    eps = np.zeros((3, 3, 3))
    for p in permutations(range(3)):
        eps[p] = perm_sign(p)
    return eps


EPS = _levi_civita()
EPS.setflags(write=False)


@dataclass(frozen=True)
class EpsilonConvention:
    """Levi-Civita tables with indices moved by the Kronecker metric.

    With a Euclidean index metric all index positions share one table, and
    ``eps[0, 1, 2] == +1``.
    """

    lower: np.ndarray = EPS
    upper: np.ndarray = EPS
    mixed: np.ndarray = EPS

    def __call__(self, i, j, k):
        return self.lower[i, j, k]


def adjugate(M):
    """Adjugate of (batched) 3x3 matrices, valid also for singular input."""
    M = np.asarray(M, dtype=float)
    c0, c1, c2 = M[..., :, 0], M[..., :, 1], M[..., :, 2]
    return np.stack([np.cross(c1, c2), np.cross(c2, c0), np.cross(c0, c1)], axis=-2)


@dataclass(frozen=True)
class SPD3:
    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.shape[-2:] != (3, 3):
            raise DimensionMismatch(f"expected 3x3 matrices, got {m.shape}")
        m = 0.5 * (m + np.swapaxes(m, -1, -2))
        if np.any(np.linalg.eigvalsh(m) <= 0):
            raise NotPositiveDefinite("matrix is not positive definite")
        object.__setattr__(self, "m", m)

    @property
    def det(self):
        return np.linalg.det(self.m)


def spd_invsqrt(A):
    """The SPD matrix ``B`` with ``B^{-2} = A``, via symmetric eigendecomposition."""
    m = A.m if isinstance(A, SPD3) else np.asarray(A, dtype=float)
    m = 0.5 * (m + np.swapaxes(m, -1, -2))
    w, V = np.linalg.eigh(m)
    if np.any(w <= 0):
        raise NotPositiveDefinite(f"input not positive definite (min eigenvalue {w.min():.3e})")
    B = np.einsum("...ij,...j,...kj->...ik", V, 1.0 / np.sqrt(w), V)
    B = 0.5 * (B + np.swapaxes(B, -1, -2))
    return SPD3(B) if isinstance(A, SPD3) else B
