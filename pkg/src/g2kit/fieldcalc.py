"""Differential-form fields on flat tori and boxes.

A :class:`FormField` keeps one array per nonzero component.  Each array has
one axis per domain axis, and an axis of length 1 means the component is
constant in that direction.  Fields built from the coordinate arrays of
:meth:`Domain.coords` by ordinary numpy broadcasting are therefore stored
compactly, and derivatives along constant axes are skipped.  This is what
makes 48^4 grids affordable.

Periodic axes are differentiated spectrally.  Box axes use fourth-order
central differences with fourth-order one-sided stencils in the two
boundary layers, and sup-norms on boxes skip a two-cell margin.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .alg_point import KForm, basis, index_of, perm_sign
from .exceptions import DegreeOverflow, DimensionMismatch, NotPositiveDefinite

BOX_MARGIN = 2


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Axis:
    kind: str  # "periodic" or "box"
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.kind not in ("periodic", "box"):
            raise ValueError(f"unknown axis kind {self.kind!r}")
        if self.n < 8:
            raise ValueError("axes need at least 8 samples")
        if not self.hi > self.lo:
            raise ValueError("empty axis interval")

    @property
    def periodic(self):
        return self.kind == "periodic"

    @property
    def h(self):
        if self.periodic:
            return (self.hi - self.lo) / self.n
        return (self.hi - self.lo) / (self.n - 1)

    def points(self):
        if self.periodic:
            return self.lo + self.h * np.arange(self.n)
        return np.linspace(self.lo, self.hi, self.n)


def periodic(n, period=2 * np.pi, lo=0.0):
    return Axis("periodic", lo, lo + period, n)


def box(n, lo, hi):
    return Axis("box", lo, hi, n)


class Domain:
    """Product of periodic and box axes."""

    def __init__(self, axes):
        self.axes = tuple(axes)

    @classmethod
    def torus(cls, dim, n=64, period=2 * np.pi):
        return cls([periodic(n, period) for _ in range(dim)])

    @classmethod
    def cube(cls, dim, n=48, lo=-1.0, hi=1.0):
        return cls([box(n, lo, hi) for _ in range(dim)])

    @property
    def dim(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(ax.n for ax in self.axes)

    def coords(self):
        """Sparse coordinate arrays, each of length n along its own axis only."""
        out = []
        for j, ax in enumerate(self.axes):
            shp = [1] * self.dim
            shp[j] = ax.n
            out.append(ax.points().reshape(shp))
        return out

    def point(self, index):
        return np.array([ax.points()[i] for ax, i in zip(self.axes, index)])

    def interior(self, arr, margin=BOX_MARGIN):
        """View of ``arr`` without the box margin (grid axes first)."""
        sl = []
        for j, ax in enumerate(self.axes):
            if not ax.periodic and arr.shape[j] > 1:
                sl.append(slice(margin, arr.shape[j] - margin))
            else:
                sl.append(slice(None))
        return arr[tuple(sl)]

    def descriptor(self):
        return [
            {"kind": ax.kind, "lo": ax.lo, "hi": ax.hi, "n": ax.n} for ax in self.axes
        ]

    @classmethod
    def from_descriptor(cls, desc):
        return cls([Axis(d["kind"], float(d["lo"]), float(d["hi"]), int(d["n"])) for d in desc])

    def __eq__(self, other):
        return isinstance(other, Domain) and self.axes == other.axes

    def __hash__(self):
        return hash(self.axes)

    def __repr__(self):
        return f"Domain({list(self.axes)!r})"


def as_compact(x, dim):
    """Promote a scalar or compact array to an array with ``dim`` axes."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape((1,) * dim)
    if x.ndim != dim:
        raise DimensionMismatch(f"field array has {x.ndim} axes, domain has {dim}")
    return x


def compress(x, atol=0.0):
    """Collapse axes along which ``x`` is constant to length 1."""
    x = np.asarray(x, dtype=float)
    for j in range(x.ndim):
        if x.shape[j] > 1:
            first = np.take(x, [0], axis=j)
            if np.all(np.abs(x - first) <= atol):
                x = first
    return x


# ---------------------------------------------------------------------------
# one-dimensional derivatives
# ---------------------------------------------------------------------------

_C_INT = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_C_B0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_C_B1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def _spectral(x, axis, ax):
    n = x.shape[axis]
    k = 2 * np.pi / (ax.hi - ax.lo) * np.arange(n // 2 + 1)
    if n % 2 == 0:
        k[-1] = 0.0
    shp = [1] * x.ndim
    shp[axis] = k.size
    xh = np.fft.rfft(x, axis=axis)
    xh *= 1j * k.reshape(shp)
    return np.fft.irfft(xh, n=n, axis=axis)


def _fd4(x, axis, ax):
    x = np.moveaxis(x, axis, 0)
    n = x.shape[0]
    out = np.empty_like(x)
    out[2:-2] = (x[:-4] * _C_INT[0] + x[1:-3] * _C_INT[1] + x[3:-1] * _C_INT[3] + x[4:] * _C_INT[4])
    out[0] = np.tensordot(_C_B0, x[0:5], axes=1)
    out[1] = np.tensordot(_C_B1, x[0:5], axes=1)
    out[n - 1] = -np.tensordot(_C_B0, x[n - 1:n - 6:-1], axes=1)
    out[n - 2] = -np.tensordot(_C_B1, x[n - 1:n - 6:-1], axes=1)
    out /= ax.h
    return np.moveaxis(out, 0, axis)


def partial(x, axis, domain):
    """``d x / d x^axis``, or None when ``x`` is constant along that axis."""
    if x.shape[axis] == 1:
        return None
    ax = domain.axes[axis]
    if x.shape[axis] != ax.n:
        raise DimensionMismatch("array does not match the domain grid")
    if ax.periodic:
        return _spectral(x, axis, ax)
    return _fd4(x, axis, ax)


# ---------------------------------------------------------------------------
# multi-index bookkeeping
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _merge(I, J):
    """``e^I ^ e^J = sign e^K``; returns (sign, K) or (0, None)."""
    s = perm_sign(I + J)
    if s == 0:
        return 0, None
    return s, tuple(sorted(I + J))


def _remove(I, j):
    p = I.index(j)
    return (-1) ** p, I[:p] + I[p + 1:]


# ---------------------------------------------------------------------------
# form fields
# ---------------------------------------------------------------------------

class FormField:
    """A k-form field on a :class:`Domain` with sparse, compact components.

    ``comps`` maps increasing index tuples to arrays with ``domain.dim``
    axes (length 1 or the grid count).
    """

    __slots__ = ("domain", "degree", "comps")

    def __init__(self, domain, degree, comps=None):
        if not 0 <= degree <= domain.dim:
            raise DegreeOverflow(f"degree {degree} in dimension {domain.dim}")
        self.domain = domain
        self.degree = degree
        self.comps = {}
        for I, v in (comps or {}).items():
            I = tuple(I)
            if len(I) != degree or list(I) != sorted(set(I)) or (I and I[-1] >= domain.dim):
                raise ValueError(f"bad multi-index {I} for a {degree}-form in dim {domain.dim}")
            self.comps[I] = as_compact(v, domain.dim)

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, domain, degree):
        return cls(domain, degree)

    @classmethod
    def scalar(cls, domain, f):
        return cls(domain, 0, {(): f})

    @classmethod
    def from_terms(cls, domain, degree, terms):
        """Sum of ``coeff * e^I`` for ``(I, coeff)`` pairs with any index order."""
        out = cls(domain, degree)
        for I, c in terms:
            s = perm_sign(I)
            if s == 0:
                continue
            out = out + cls(domain, degree, {tuple(sorted(I)): s * np.asarray(c, dtype=float)})
        return out

    @classmethod
    def from_dense(cls, domain, degree, values):
        values = np.asarray(values, dtype=float)
        if values.shape != domain.shape + (comb(domain.dim, degree),):
            raise DimensionMismatch(f"expected values of shape {domain.shape + (comb(domain.dim, degree),)}")
        return cls(domain, degree, {I: compress(values[..., p]) for p, I in enumerate(basis(domain.dim, degree))})

    @classmethod
    def from_kform(cls, domain, form):
        if form.dim != domain.dim:
            raise DimensionMismatch("form and domain dimensions differ")
        c = np.asarray(form.comps, dtype=float)
        if c.ndim == 1:
            return cls(domain, form.degree, {I: c[p] for p, I in enumerate(basis(domain.dim, form.degree)) if c[p] != 0})
        return cls.from_dense(domain, form.degree, c)

    # access -------------------------------------------------------------
    def dense(self):
        """Full array of shape ``grid + (binom(n, k),)``."""
        out = np.zeros(self.domain.shape + (comb(self.domain.dim, self.degree),))
        idx = index_of(self.domain.dim, self.degree)
        for I, v in self.comps.items():
            out[..., idx[I]] = v
        return out

    @property
    def values(self):
        return self.dense()

    def component(self, I):
        I = tuple(I)
        s = perm_sign(I)
        v = self.comps.get(tuple(sorted(I)))
        if v is None or s == 0:
            return np.zeros((1,) * self.domain.dim)
        return s * v

    def at(self, index):
        """Pointwise :class:`KForm` at a grid multi-index."""
        c = np.zeros(comb(self.domain.dim, self.degree))
        idx = index_of(self.domain.dim, self.degree)
        for I, v in self.comps.items():
            c[idx[I]] = v[tuple(0 if v.shape[j] == 1 else i for j, i in enumerate(index))]
        return KForm(self.domain.dim, self.degree, c)

    def sup(self, margin=BOX_MARGIN):
        m = 0.0
        for v in self.comps.values():
            if v.size:
                m = max(m, float(np.max(np.abs(self.domain.interior(v, margin)))))
        return m

    def is_finite(self):
        return all(np.all(np.isfinite(v)) for v in self.comps.values())

    # algebra ------------------------------------------------------------
    def _same(self, other):
        if not isinstance(other, FormField):
            raise TypeError("expected a FormField")
        if other.domain != self.domain:
            raise DimensionMismatch("fields live on different domains")

    def __add__(self, other):
        self._same(other)
        if other.degree != self.degree:
            raise DimensionMismatch("cannot add forms of different degree")
        comps = dict(self.comps)
        for I, v in other.comps.items():
            comps[I] = comps[I] + v if I in comps else v
        return FormField(self.domain, self.degree, comps)

    def __neg__(self):
        return FormField(self.domain, self.degree, {I: -v for I, v in self.comps.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, f):
        """Multiply by a constant or a compact scalar array."""
        f = np.asarray(f, dtype=float)
        if f.ndim:
            f = as_compact(f, self.domain.dim)
        return FormField(self.domain, self.degree, {I: v * f for I, v in self.comps.items()})

    __rmul__ = __mul__

    def __truediv__(self, f):
        return self * (1.0 / np.asarray(f, dtype=float))

    def wedge(self, other):
        self._same(other)
        if self.degree + other.degree > self.domain.dim:
            raise DegreeOverflow("wedge degree exceeds dimension")
        comps = {}
        for I, u in self.comps.items():
            for J, v in other.comps.items():
                s, K = _merge(I, J)
                if s == 0:
                    continue
                t = u * v if s > 0 else -(u * v)
                comps[K] = comps[K] + t if K in comps else t
        return FormField(self.domain, self.degree + other.degree, comps)

    __xor__ = wedge

    def interior_coord(self, j):
        """Contraction with the coordinate vector field ``d/dx^j``."""
        if self.degree == 0:
            raise DegreeOverflow("cannot contract a function")
        comps = {}
        for I, v in self.comps.items():
            if j in I:
                s, K = _remove(I, j)
                t = v if s > 0 else -v
                comps[K] = comps[K] + t if K in comps else t
        return FormField(self.domain, self.degree - 1, comps)

    def ext_d(self):
        return ext_d(self)

    def __repr__(self):
        return f"FormField(degree={self.degree}, ncomps={len(self.comps)}, domain={self.domain!r})"


def coordinate_form(domain, j):
    """``dx^j`` as a field."""
    return FormField(domain, 1, {(j,): 1.0})


def ext_d(f):
    """Exterior derivative of a :class:`FormField` or :class:`InvariantForm`."""
    if isinstance(f, InvariantForm):
        return f.ext_d()
    dom = f.domain
    if f.degree >= dom.dim:
        raise DegreeOverflow("exterior derivative of a top-degree form")
    comps = {}
    for I, v in f.comps.items():
        for j in range(dom.dim):
            if j in I:
                continue
            dv = partial(v, j, dom)
            if dv is None:
                continue
            s, K = _merge((j,), I)
            t = dv if s > 0 else -dv
            comps[K] = comps[K] + t if K in comps else t
    return FormField(dom, f.degree + 1, comps)


# ---------------------------------------------------------------------------
# vector fields, contraction and Lie derivative
# ---------------------------------------------------------------------------

class VectorField:
    """Affine vector field ``V(x) = M x + c`` in domain coordinates.

    ``kind`` is "constant" (``M = 0``), "linear", or "rotation" (``M``
    antisymmetric).  The Jacobian is known exactly, so Lie derivatives do not
    differentiate ``V`` numerically.
    """

    def __init__(self, M=None, c=None, dim=None, kind=None):
        if M is None and c is None:
            raise ValueError("need a matrix or a constant part")
        if dim is None:
            dim = len(c) if c is not None else np.asarray(M).shape[0]
        self.M = np.zeros((dim, dim)) if M is None else np.asarray(M, dtype=float)
        self.c = np.zeros(dim) if c is None else np.asarray(c, dtype=float)
        if self.M.shape != (dim, dim) or self.c.shape != (dim,):
            raise DimensionMismatch("vector field data has inconsistent size")
        if kind is None:
            kind = "constant" if not np.any(self.M) else ("rotation" if np.allclose(self.M, -self.M.T) else "linear")
        self.kind = kind

    @classmethod
    def constant(cls, c):
        return cls(c=c, kind="constant")

    @classmethod
    def linear(cls, M, c=None):
        return cls(M=M, c=c)

    @property
    def dim(self):
        return self.c.size

    def components(self, domain):
        x = domain.coords()
        out = []
        for i in range(self.dim):
            v = np.full((1,) * domain.dim, self.c[i])
            for k in range(self.dim):
                if self.M[i, k]:
                    v = v + self.M[i, k] * x[k]
            out.append(v)
        return out

    def __call__(self, p):
        return self.M @ np.asarray(p, dtype=float) + self.c


def contract_field(f, V):
    """``V ⌟ f``."""
    if f.domain.dim != V.dim:
        raise DimensionMismatch("vector field and domain dimensions differ")
    comps = V.components(f.domain)
    out = FormField(f.domain, f.degree - 1)
    for j in range(V.dim):
        if not np.any(comps[j]):
            continue
        out = out + f.interior_coord(j) * comps[j]
    return out


def lie_derivative(f, V):
    """``L_V f`` computed directly, without Cartan's formula.

    ``(L_V f) = V^j d_j f_I dx^I + sum_i dV^i ^ (d/dx^i ⌟ f)``.
    """
    dom = f.domain
    if dom.dim != V.dim:
        raise DimensionMismatch("vector field and domain dimensions differ")
    Vc = V.components(dom)
    comps = {}
    for I, v in f.comps.items():
        for j in range(dom.dim):
            if not np.any(Vc[j]):
                continue
            dv = partial(v, j, dom)
            if dv is None:
                continue
            t = Vc[j] * dv
            comps[I] = comps[I] + t if I in comps else t
    out = FormField(dom, f.degree, comps)
    if f.degree > 0:
        for i in range(dom.dim):
            if not np.any(V.M[i]):
                continue
            dVi = FormField(dom, 1, {(k,): V.M[i, k] for k in range(dom.dim) if V.M[i, k]})
            out = out + dVi.wedge(f.interior_coord(i))
    return out


# ---------------------------------------------------------------------------
# invariant forms on base x T^3
# ---------------------------------------------------------------------------

NTHETA = 3


class InvariantForm:
    """``sum_S c_S ^ theta^S`` with base coefficients ``c_S`` and ``S ⊆ {0,1,2}``.

    The theta-directions are symbolic and closed (``d theta^i = 0``), so the
    exterior derivative only acts on the coefficients.
    """

    def __init__(self, base, degree, terms=None):
        self.base = base
        self.degree = degree
        self.terms = {}
        for S, c in (terms or {}).items():
            S = tuple(S)
            if list(S) != sorted(set(S)) or any(s >= NTHETA for s in S):
                raise ValueError(f"bad theta index set {S}")
            if c.domain != base:
                raise DimensionMismatch("coefficient lives on another domain")
            if c.degree + len(S) != degree:
                raise DimensionMismatch(f"coefficient of theta^{S} has degree {c.degree}, expected {degree - len(S)}")
            self.terms[S] = c

    @property
    def dim(self):
        return self.base.dim + NTHETA

    @classmethod
    def from_terms(cls, base, degree, items):
        """Build from ``(S, coefficient)`` pairs, accumulating repeated S (any order)."""
        out = cls(base, degree)
        for S, c in items:
            s = perm_sign(S)
            if s == 0:
                continue
            out = out + cls(base, degree, {tuple(sorted(S)): c * s})
        return out

    def __add__(self, other):
        if other.base != self.base or other.degree != self.degree:
            raise DimensionMismatch("incompatible invariant forms")
        terms = dict(self.terms)
        for S, c in other.terms.items():
            terms[S] = terms[S] + c if S in terms else c
        return InvariantForm(self.base, self.degree, terms)

    def __neg__(self):
        return InvariantForm(self.base, self.degree, {S: -c for S, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, f):
        return InvariantForm(self.base, self.degree, {S: c * f for S, c in self.terms.items()})

    __rmul__ = __mul__

    def wedge(self, other):
        """``(c ^ theta^S) ^ (c' ^ theta^T) = (-1)^{|S| deg c'} c ^ c' ^ theta^S ^ theta^T``."""
        if other.base != self.base:
            raise DimensionMismatch("incompatible invariant forms")
        out = InvariantForm(self.base, self.degree + other.degree)
        for S, c in self.terms.items():
            for T, c2 in other.terms.items():
                s, U = _merge(S, T)
                if s == 0:
                    continue
                s *= (-1) ** (len(S) * c2.degree)
                out = out + InvariantForm(self.base, out.degree, {U: c.wedge(c2) * float(s)})
        return out

    __xor__ = wedge

    def interior_theta(self, i):
        """Contraction with the generator dual to ``theta^i``."""
        out = InvariantForm(self.base, self.degree - 1)
        for S, c in self.terms.items():
            if i in S:
                s, T = _remove(S, i)
                s *= (-1) ** c.degree
                out = out + InvariantForm(self.base, out.degree, {T: c * float(s)})
        return out

    def ext_d(self):
        terms = {}
        for S, c in self.terms.items():
            if c.degree >= self.base.dim:
                continue
            terms[S] = ext_d(c)
        return InvariantForm(self.base, self.degree + 1, terms)

    def sup(self, margin=BOX_MARGIN):
        return max((c.sup(margin) for c in self.terms.values()), default=0.0)

    def _full_index(self, I, S):
        m = self.base.dim
        return tuple(I) + tuple(m + s for s in S)

    def at(self, index):
        """Pointwise form on ``R^(m+3)`` (base directions first, then theta)."""
        n = self.dim
        c = np.zeros(comb(n, self.degree))
        idx = index_of(n, self.degree)
        for S, cf in self.terms.items():
            loc = cf.at(index)
            for p, I in enumerate(basis(self.base.dim, cf.degree)):
                c[idx[self._full_index(I, S)]] += loc.comps[p]
        return KForm(n, self.degree, c)

    def expand(self, theta_points=8):
        """Forgetful expansion to a field on ``base x T^3`` (theta^i read as dt^i)."""
        dom = Domain(list(self.base.axes) + [periodic(theta_points) for _ in range(NTHETA)])
        comps = {}
        pad = (1,) * NTHETA
        for S, cf in self.terms.items():
            for I, v in cf.comps.items():
                K = self._full_index(I, S)
                vv = v.reshape(v.shape + pad)
                comps[K] = comps[K] + vv if K in comps else vv
        return FormField(dom, self.degree, comps)


# ---------------------------------------------------------------------------
# curvature and Monge-Ampere
# ---------------------------------------------------------------------------

def _grad_list(x, domain, n):
    """Partial derivatives of a compact array along the first ``n`` coordinates."""
    return [partial(x, j, domain) if j < domain.dim else None for j in range(n)]


def riemann_tensor(g, domain):
    """Covariant Riemann tensor ``R_abcd`` of a metric field.

    ``g`` has shape ``grid + (n, n)`` (grid axes may be compact) with
    ``n >= domain.dim``; coordinates beyond the domain are symmetry directions
    along which nothing depends.  Uses
    ``R_abcd = 1/2 (g_ad,bc + g_bc,ad - g_ac,bd - g_bd,ac)
    + g_ef (G^e_bc G^f_ad - G^e_bd G^f_ac)``.
    """
    g = np.asarray(g, dtype=float)
    m = domain.dim
    n = g.shape[-1]
    if g.ndim != m + 2 or g.shape[-2] != n or n < m:
        raise DimensionMismatch("metric field must have shape grid + (n, n) with n >= domain dim")
    w = np.linalg.eigvalsh(g)
    if np.any(w <= 0):
        raise NotPositiveDefinite("metric field is not positive definite at some sample")
    shp = np.broadcast_shapes(g.shape[:-2], *(g.shape[:-2],))

    def d(x, j):
        # derivative along grid axis j of an array with trailing tensor axes
        if j >= m or x.shape[j] == 1:
            return None
        return partial(x, j, domain)

    dg = []
    for j in range(n):
        dg.append(d(g, j))
    full = shp
    for x in dg:
        if x is not None:
            full = np.broadcast_shapes(full, x.shape[:-2])
    zeros = np.zeros(full + (n, n))
    D = np.stack([zeros + (x if x is not None else 0.0) for x in dg], axis=-3)  # (..., c, a, b) = d_c g_ab
    DD = np.zeros(full + (n, n, n, n))  # (..., c, d, a, b) = d_c d_d g_ab
    for c in range(m):
        for e in range(m):
            if dg[e] is None:
                continue
            x = d(dg[e], c)
            if x is not None:
                DD[..., c, e, :, :] = x
    gb = np.zeros(full + (n, n)) + g
    ginv = np.linalg.inv(gb)
    # Christoffel of the first kind: G_abc = 1/2 (d_b g_ac + d_c g_ab - d_a g_bc)
    G1 = 0.5 * (
        np.einsum("...bac->...abc", D) + np.einsum("...cab->...abc", D) - D
    )
    G2 = np.einsum("...ea,...abc->...ebc", ginv, G1)
    # second derivatives: g_ad,bc = DD[b, c, a, d]
    t1 = np.einsum("...bcad->...abcd", DD)
    t2 = np.einsum("...adbc->...abcd", DD)
    t3 = np.einsum("...bdac->...abcd", DD)
    t4 = np.einsum("...acbd->...abcd", DD)
    R = 0.5 * (t1 + t2 - t3 - t4)
    R += np.einsum("...ef,...ebc,...fad->...abcd", gb, G2, G2)
    R -= np.einsum("...ef,...ebd,...fac->...abcd", gb, G2, G2)
    return R, ginv


def curvature_norm(g, domain, margin=BOX_MARGIN):
    """Sup over the interior of ``|Rm| = sqrt(R_abcd R^abcd)``."""
    R, ginv = riemann_tensor(g, domain)
    Rup = np.einsum("...ai,...bj,...ck,...dl,...ijkl->...abcd", ginv, ginv, ginv, ginv, R, optimize=True)
    sq = np.einsum("...abcd,...abcd->...", R, Rup)
    val = np.sqrt(np.clip(sq, 0.0, None))
    return float(np.max(domain.interior(val, margin)))


def hessian(u, domain):
    """Finite-difference/spectral Hessian, shape ``grid + (m, m)``."""
    u = as_compact(u, domain.dim)
    m = domain.dim
    first = [partial(u, j, domain) for j in range(m)]
    shape = u.shape
    for x in first:
        if x is not None:
            shape = np.broadcast_shapes(shape, x.shape)
    H = np.zeros(shape + (m, m))
    for i in range(m):
        if first[i] is None:
            continue
        for j in range(i, m):
            x = partial(first[i], j, domain)
            if x is not None:
                H[..., i, j] = x
                H[..., j, i] = x
    return H


def monge_ampere_residual(u, domain, margin=BOX_MARGIN):
    """``sup |det(d_i d_j u) - 1|`` over the interior."""
    H = hessian(u, domain)
    r = np.abs(np.linalg.det(H) - 1.0)
    return float(np.max(domain.interior(r, margin)))
