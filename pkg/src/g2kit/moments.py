"""Multi-moment maps for isotropic T^3-actions.

For an isotropic action the 1-forms ``alpha_i = (1/2) eps_ijk U_j ^ U_k ⌟ phi``
are closed and invariant, so locally ``alpha_i = d nu_i``.  A chart fixes a
centre ``p0`` and integrates ``alpha`` along straight segments from ``p0``
(models live on covers of R^7, so straight segments are always available).
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .alg_point import evaluate_arrays, interior_arrays
from .exceptions import AmbiguousOrder, InvalidModel, NonClosedAlpha, SingularBasisChange

ORDER_TOL = 0.15
RADII = np.geomspace(1e-3, 1e-1, 16)


def alpha_beta(model, q, K=None):
    """``(alpha, beta)`` at points ``q`` for the generator basis ``K U``.

    Works at singular points too (no division by the generator Gram matrix).
    """
    q = np.asarray(q, dtype=float)
    U = model.U(q)
    if K is not None:
        U = np.einsum("ij,...jk->...ik", np.asarray(K, dtype=float), U)
    phi = model.phi(q).comps
    star = model.starphi(q).comps
    U1, U2, U3 = U[..., 0, :], U[..., 1, :], U[..., 2, :]

    def pair(u, v):
        return interior_arrays(v, interior_arrays(u, phi, 3, 7), 2, 7)

    alpha = np.stack([pair(U2, U3), pair(U3, U1), pair(U1, U2)], axis=-2)
    beta = interior_arrays(U3, interior_arrays(U2, interior_arrays(U1, star, 4, 7), 3, 7), 2, 7)
    return alpha, beta


def _segment_integral(f, p, q, rtol=1e-13, max_nodes=512):
    """``int_0^1 f(p + s (q - p)) . (q - p) ds`` with Gauss-Legendre order doubling.

    ``f`` maps points ``(..., 7)`` to 1-forms ``(..., m, 7)``; ``p`` and ``q``
    may carry matching batch axes.  Result has shape ``batch + (m,)``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    v = q - p
    prev = None
    n = 8
    while n <= max_nodes:
        x, w = leggauss(n)
        s = 0.5 * (x + 1.0)
        pts = p[..., None, :] + s[:, None] * v[..., None, :]
        vals = f(pts)
        cur = 0.5 * np.einsum("n,...nmi,...i->...m", w, vals, v)
        if prev is not None and np.max(np.abs(cur - prev)) <= rtol * (1.0 + np.max(np.abs(cur))):
            return cur
        prev = cur
        n *= 2
    return prev


@dataclass
class MomentChart:
    """Local multi-moment map ``nu`` centred at ``center`` for the basis ``K U``."""

    model: object
    center: np.ndarray
    K: np.ndarray = field(default_factory=lambda: np.eye(3))
    checks: dict = field(default_factory=dict)

    def alpha(self, q):
        return alpha_beta(self.model, q, self.K)[0]

    def beta(self, q):
        return alpha_beta(self.model, q, self.K)[1]

    def nu(self, q, start=None):
        """Moment coordinates of one point or a batch ``(n, 7)``."""
        q = np.asarray(q, dtype=float)
        p0 = self.center if start is None else np.asarray(start, dtype=float)
        p0 = np.broadcast_to(p0, q.shape)
        return _segment_integral(self.alpha, p0, q)

    def path_integral(self, vertices):
        """Integral of ``alpha`` along the polygon through ``vertices``."""
        total = np.zeros(3)
        for a, b in zip(vertices[:-1], vertices[1:]):
            total += _segment_integral(self.alpha, a, b)
        return total

    # residuals -------------------------------------------------------------
    def loop_residual(self, rng, n_loops=8, size=0.5):
        """Max over random closed rectangles of ``|oint alpha|``."""
        worst = 0.0
        for _ in range(n_loops):
            c = self.center + rng.uniform(-size, size, 7)
            u, v = rng.normal(size=(2, 7)) * size
            loop = [c, c + u, c + u + v, c + v, c]
            worst = max(worst, float(np.max(np.abs(self.path_integral(loop)))))
        return worst

    def d_alpha_residual(self, points, h=1e-4):
        """Sup of ``|d alpha|`` by central differences at ``points``."""
        P = np.atleast_2d(points)
        E = np.eye(7) * h
        J = (self.alpha(P[:, None] + E) - self.alpha(P[:, None] - E)) / (2 * h)  # (N, k, i, l)
        curl = np.einsum("nkil->nikl", J) - np.einsum("nlik->nikl", J)
        return float(np.max(np.abs(curl)))

    def gradient_residual(self, points, h=1e-5):
        """Max ``|d nu - alpha|`` with ``d nu`` by central differences."""
        P = np.atleast_2d(points)
        E = np.eye(7) * h
        base = np.broadcast_to(P[:, None], (len(P), 7, 7))
        fwd = self.nu(P[:, None] + E, start=base)
        bwd = self.nu(P[:, None] - E, start=base)
        grad = np.swapaxes((fwd - bwd) / (2 * h), 1, 2)  # (N, i, k)
        return float(np.max(np.abs(grad - self.alpha(P))))

    def invariance_residual(self, points, rng):
        """Max ``|nu(lam . q) - nu(q)|`` over random group elements."""
        worst = 0.0
        for p in np.atleast_2d(points):
            lam = rng.uniform(0, 1, 3) * np.array(self.model.periods)
            q = self.model.act(lam, p)
            worst = max(worst, float(np.max(np.abs(self.nu(q) - self.nu(p)))))
        return worst


def build_moment_chart(model, center, K=None, rng=None, tol=1e-8):
    """Chart of ``nu`` around ``center``; raises NonClosedAlpha if ``d alpha != 0``.

    Closedness is tested by central differences of ``alpha`` at the centre
    and nearby points and by integrals over small closed loops.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    K = np.eye(3) if K is None else np.asarray(K, dtype=float)
    if abs(np.linalg.det(K)) < 1e-12:
        raise SingularBasisChange("basis change matrix is singular")
    center = np.asarray(center, dtype=float)
    chart = MomentChart(model, center, K)
    pts = center + rng.uniform(-0.3, 0.3, size=(3, 7))
    da = chart.d_alpha_residual(np.vstack([center, pts]))
    loop = chart.loop_residual(rng, n_loops=4, size=0.3)
    chart.checks = {"d_alpha": da, "loop": loop}
    if da > 1e-6 or loop > tol:
        raise NonClosedAlpha(f"alpha is not closed (|d alpha| = {da:.2e}, loop integral = {loop:.2e})")
    return chart


# ---------------------------------------------------------------------------
# vanishing orders
# ---------------------------------------------------------------------------

@dataclass
class VanishingOrders:
    orders: tuple
    slopes: np.ndarray
    names: tuple = ("nu1", "nu2", "nu3", "beta")

    def as_dict(self):
        return dict(zip(self.names, self.orders))


def _slope(r, vals):
    lr, lv = np.log(r), np.log(vals)
    return float(np.polyfit(lr, lv, 1)[0])


def vanishing_orders(chart, p=None, directions=None, rng=None, n_directions=4, radii=RADII, zero_tol=1e-14):
    """Orders of vanishing of ``nu_1..3 - nu(p)`` and ``beta`` at ``p``.

    Slopes of ``log |f(p + r v)|`` against ``log r`` are fitted for every
    direction ``v``; the order is the rounded slope.  A function that is
    numerically zero along all directions gets order ``inf``.  Raises
    AmbiguousOrder when any slope is more than ``ORDER_TOL`` off an integer
    or directions disagree.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    p = chart.center if p is None else np.asarray(p, dtype=float)
    if directions is None:
        directions = rng.normal(size=(n_directions, 7))
    directions = np.atleast_2d(directions)
    directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    vals = np.empty((len(directions), len(radii), 4))
    for a, v in enumerate(directions):
        for b, r in enumerate(radii):
            q = p + r * v
            vals[a, b, :3] = np.abs(_segment_integral(chart.alpha, p, q))
            vals[a, b, 3] = np.linalg.norm(chart.beta(q))
    orders, slopes = [], np.full((len(directions), 4), np.nan)
    for f in range(4):
        if np.all(vals[:, :, f] < zero_tol):
            orders.append(np.inf)
            continue
        for a in range(len(directions)):
            if np.any(vals[a, :, f] < zero_tol):
                continue
            slopes[a, f] = _slope(radii, vals[a, :, f])
        s = slopes[:, f][~np.isnan(slopes[:, f])]
        k = np.round(s)
        if len(s) == 0 or np.any(np.abs(s - k) > ORDER_TOL) or np.any(k != k[0]):
            raise AmbiguousOrder(f"no integer order for {VanishingOrders.names[f]}", slopes=slopes)
        orders.append(int(k[0]))
    return VanishingOrders(tuple(orders), slopes)


# ---------------------------------------------------------------------------
# singular orbits in moment coordinates
# ---------------------------------------------------------------------------

# rays hit by circle-stabilizer orbits near a point with 2-torus stabilizer
T2_RAYS = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, -1.0], [0.0, -1.0, 1.0]]) * np.array([[1], [1], [2 ** -0.5]])


def _ray_distance(nu):
    d = []
    for r in T2_RAYS:
        t = max(0.0, float(nu @ r))
        d.append(np.linalg.norm(nu - t * r))
    k = int(np.argmin(d))
    return d[k], k


@dataclass
class SingularImage:
    """Images of singular orbits under a moment chart.

    ``records`` holds dicts with keys ``stratum``, ``stab_dim``, ``nu`` and
    ``target`` (which model set the point should land on); ``residual`` is
    the largest distance to that set.
    """

    center_stab_dim: int
    records: list
    residual: float
    rays_hit: tuple = ()

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["stratum", "stab_dim", "nu1", "nu2", "nu3", "target", "distance"])
            for r in self.records:
                w.writerow([r["stratum"], r["stab_dim"], *(repr(float(v)) for v in r["nu"]), r["target"],
                            repr(float(r["distance"]))])


def singular_image(chart, rng=None, n=8):
    """Map sampled singular orbits through ``nu`` and measure incidence.

    Around a point with circle stabilizer the circle-stabilizer orbits map
    into the line ``nu_1 = nu_2 = 0``.  Around a point with 2-torus
    stabilizer the circle-stabilizer orbits map onto the three rays
    ``(0, t, 0)``, ``(0, 0, -t)``, ``(0, -t, t)`` (``t > 0``) and the
    2-torus orbits to the origin.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    model = chart.model
    if not model.singular:
        raise InvalidModel(f"{model.name} has no singular strata")
    c_dim = model.stabilizer_dim(chart.center)
    if c_dim not in (1, 2):
        raise InvalidModel("chart centre must lie on a singular orbit")
    records, worst, hit = [], 0.0, set()
    for label, (sampler, sdim) in model.singular.items():
        for q in sampler(rng, n):
            dim = model.stabilizer_dim(q)
            nu = chart.nu(q)
            if c_dim == 1:
                target, dist = "line nu1=nu2=0", float(np.hypot(nu[0], nu[1]))
            elif dim == 2:
                target, dist = "origin", float(np.linalg.norm(nu))
            else:
                dist, k = _ray_distance(nu)
                target = f"ray {k}"
                hit.add(k)
            records.append({"stratum": label, "stab_dim": dim, "expected_dim": sdim, "nu": nu,
                            "target": target, "distance": dist})
            worst = max(worst, dist)
    return SingularImage(c_dim, records, worst, tuple(sorted(hit)))


def transform_nu(nu, K):
    """Moment coordinates for the generator basis ``K U``: ``det K K^{-t} nu``."""
    K = np.asarray(K, dtype=float)
    return np.linalg.det(K) * np.asarray(nu) @ np.linalg.inv(K)
