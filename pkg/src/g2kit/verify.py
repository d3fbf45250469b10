"""Verification suites shared by the command line and the test-suite.

Each check returns :class:`Record` objects; a suite is a list of checks.
Check names follow the acceptance list (``c01`` ... ``c12``) plus a few
model-level invariants.
"""

import time
from dataclasses import asdict, dataclass

import numpy as np

from . import models as M
from .alg_point import KForm, evaluate_arrays, hodge_arrays, pullback_arrays
from .fieldcalc import Domain, box, curvature_norm, monge_ampere_residual
from .g2_point import (PHI_O, coframe_metric, coframe_star_identities, metric_from_3form, point_reduce,
                       reconstruct)
from .hsym4 import classify_triple
from .moments import build_moment_chart, singular_image, vanishing_orders
from .reduction import (change_generators, classify_action, leaf_change_residual, leaf_triples,
                        quotient_triple, quotient_triple_field, quotient_triple_point)


@dataclass
class Record:
    name: str
    anchor: str
    residual: float
    tolerance: float
    compare: str = "lt"

    @property
    def passed(self):
        r = self.residual
        if not np.isfinite(r):
            return False
        return r < self.tolerance if self.compare == "lt" else r > self.tolerance

    def as_dict(self):
        d = asdict(self)
        d["residual"] = float(d["residual"])
        d["pass"] = bool(self.passed)
        return d


def rec(name, anchor, residual, tol, compare="lt"):
    return Record(name, anchor, float(residual), float(tol), compare)


def random_spd(rng, n=3, spread=0.5):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return Q @ np.diag(np.exp(rng.uniform(-spread, spread, n))) @ Q.T


def random_coframe(rng, n=7, spread=0.5):
    """Random basis change with singular values in [e^-spread, e^spread] and random orientation."""
    Q1, _ = np.linalg.qr(rng.normal(size=(n, n)))
    Q2, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return Q1 @ np.diag(np.exp(rng.uniform(-spread, spread, n))) @ Q2


def random_positive_phi(rng, n):
    """Pullbacks of the model form by random well-conditioned matrices."""
    P = np.stack([random_coframe(rng) for _ in range(n)])
    P[np.linalg.det(P) < 0, 0] *= -1
    return KForm(7, 3, pullback_arrays(P, PHI_O.comps, 3))


# ---------------------------------------------------------------------------
# acceptance checks
# ---------------------------------------------------------------------------

def c01_metric(rng):
    gp = metric_from_3form(PHI_O)
    out = [rec("c01.metric_phi_o", "metric induced by the model 3-form is Euclidean",
               np.max(np.abs(gp.g - np.eye(7))), 1e-12)]
    lam = 1.7
    g = metric_from_3form(PHI_O * lam**3).g
    out.append(rec("c01.metric_scaling", "scaling phi by lam^3 scales g by lam^2",
                   np.max(np.abs(g - lam**2 * np.eye(7))), 1e-12))
    return out


def c02_stars(rng, n=200):
    worst = 0.0
    for _ in range(n):
        B = random_spd(rng)
        B = B / np.cbrt(np.linalg.det(B))
        a = rng.uniform(-0.99, 0.99)
        A = np.linalg.inv(B @ B)
        G = coframe_metric(a, A)
        P = random_coframe(rng)
        g = P.T @ G @ P
        o = np.sign(np.linalg.det(P))
        for _, form, star in coframe_star_identities(a, B):
            lhs = hodge_arrays(g, pullback_arrays(P, form.comps, form.degree), form.degree, o)
            rhs = pullback_arrays(P, star.comps, star.degree)
            worst = max(worst, float(np.max(np.abs(lhs - rhs)) / max(1.0, np.max(np.abs(rhs)))))
    return [rec("c02.hodge_identities", "closed-form Hodge stars of the six coframe families", worst, 1e-9)]


def c03_reconstruct(rng, n=500):
    phi = random_positive_phi(rng, 2 * n)
    U = rng.normal(size=(2 * n, 3, 7))
    gp = metric_from_3form(phi)
    pr = point_reduce(gp, U)
    keep = np.abs(pr.a) < 1 - 1e-6
    idx = np.nonzero(keep)[0][:n]
    gp = metric_from_3form(KForm(7, 3, phi.comps[idx]))
    pr = point_reduce(gp, U[idx])
    ph, st, g = reconstruct(pr)
    scale = np.max(np.abs(phi.comps[idx]), axis=-1)
    r = np.max(np.abs(ph.comps - phi.comps[idx]).max(axis=-1) / scale)
    rs = np.max(np.abs(st.comps - gp.starphi.comps))
    rg = np.max(np.abs(g - gp.g))
    # orbits close to associative: U_3 tilted out of an associative plane
    m = 100
    P = np.stack([random_coframe(rng) for _ in range(m)])
    P[np.linalg.det(P) < 0, 0] *= -1
    Pi = np.linalg.inv(P)
    d = np.exp(rng.uniform(np.log(2e-3), np.log(0.1), m))
    E = np.eye(7)
    W = np.stack([np.broadcast_to(E[0], (m, 7)), np.broadcast_to(E[1], (m, 7)), E[2] + d[:, None] * E[3]], axis=1)
    Un = np.einsum("nij,naj->nai", Pi, W)
    phn = KForm(7, 3, pullback_arrays(P, PHI_O.comps, 3))
    prn = point_reduce(metric_from_3form(phn), Un)
    ok = np.abs(prn.a) < 1 - 1e-6
    errn = np.abs(reconstruct(prn)[0].comps - phn.comps).max(axis=-1) / np.abs(phn.comps).max(axis=-1)
    rn = np.max(errn[ok])
    return [
        rec("c03.reconstruct_phi", "phi rebuilt from (alpha, beta, theta, B, a)", r, 1e-9),
        rec("c03.near_associative_phi", "phi rebuilt for 1 - |a| down to 1e-6", rn, 1e-9),
        rec("c03.reconstruct_starphi", "dual 4-form rebuilt from reduced data", rs, 1e-9),
        rec("c03.reconstruct_metric", "metric rebuilt from reduced data", rg, 1e-9),
        rec("c03.samples", "number of admissible random samples", len(idx), n - 0.5, "gt"),
    ]


def c04_t4(rng, n=48):
    m = M.t4_diagonal()
    dom = Domain.torus(4, n)
    dphi = m.invariant_phi(dom).ext_d().sup()
    out = [rec("c04.d_phi", "closedness of the diagonal T^4 family (beta-alpha equation)", dphi, 1e-8)]
    t = quotient_triple_field(m, dom)
    cl = classify_triple(t)
    out.append(rec("c04.hypersymplectic", "quotient triple is hypersymplectic", 0.0 if cl.hypersymplectic else 1.0, 0.5))
    out.append(rec("c04.not_hyperkahler", "quotient triple is not hyperkahler (Q varies)",
                   cl.residuals["q_variation"], 1e-3, "gt"))
    return out


def c05_flat(rng, n=48):
    m = M.type1_family(0.5, A=M.constant_flat_A())
    dom = Domain.torus(4, n)
    x = dom.coords()
    md = m.metadata
    g = M.type1_metric(0.5, md["A_fn"](x), md["ahat_fn"](x), md["beta_fn"](x), (1, 1, 1, 1))
    return [
        rec("c05.curvature", "constant-coefficient type 1 structure is flat", curvature_norm(g, dom), 1e-6),
        rec("c05.d_phi", "closedness of the constant-coefficient structure", m.invariant_phi(dom).ext_d().sup(), 1e-12),
        rec("c05.d_starphi", "coclosedness of the constant-coefficient structure",
            m.invariant_starphi(dom).ext_d().sup(), 1e-12),
    ]


def c06_product(rng, n=16):
    m = M.product_t3()
    dom = Domain.torus(4, n)
    q = quotient_triple(m, domain=dom, rng=rng)
    cl = classify_triple(q.triple)
    return [
        rec("c06.d_phi", "product structure is closed", m.invariant_phi(dom).ext_d().sup(), 1e-12),
        rec("c06.d_starphi", "product structure is coclosed", m.invariant_starphi(dom).ext_d().sup(), 1e-12),
        rec("c06.wedge", "omega~_i ^ omega~_j = 2 A_ij mu", q.residuals["wedge"], 1e-12),
        rec("c06.torsion_free", "quotient triple satisfies the torsion-free condition",
            0.0 if cl.torsion_free else 1.0, 0.5),
    ]


def c07_table(rng):
    out = []
    for key, t, a in (("associative", 2, 1.0), ("isotropic", 3, 0.0), ("generic", 1, 2 ** -0.5)):
        r = classify_action(M.flat_quotient(M.PI_PRESETS[key]), n=8, rng=rng)
        out.append(rec(f"c07.type_{key}", f"flat torus quotient along the {key} plane has type {t}",
                       abs(r.orbit_type - t), 0.5))
        out.append(rec(f"c07.a_{key}", f"a = {a:.10f} for the {key} plane", np.max(np.abs(r.a - a)), 1e-10))
    return out


def _isotropic_charts():
    return [(M.flat_s1_c3(), np.zeros(7)), (M.flat_t2_r_c2(), np.array([0.5, 1.0, 0.2, 0, 0, 0, 0]))]


def c08_moments(rng, n=1000):
    out = []
    for m, c in _isotropic_charts():
        ch = build_moment_chart(m, c, rng=rng)
        P = c + rng.uniform(-0.8, 0.8, size=(n, 7))
        out.append(rec(f"c08.{m.name}.loop", "alpha integrates to zero around closed loops",
                       ch.loop_residual(rng, 20), 1e-10))
        out.append(rec(f"c08.{m.name}.gradient", "d nu = alpha (central differences)",
                       ch.gradient_residual(P), 1e-6))
        out.append(rec(f"c08.{m.name}.invariance", "nu is constant along torus orbits",
                       ch.invariance_residual(P[:40], rng), 1e-8))
    return out


def c09_orders(rng):
    out = []
    expect = {"flat_s1_c3": (3, 2, 2, 2), "flat_t2_r_c2": (2, 2, 1, 1)}
    for m, c in _isotropic_charts():
        ch = build_moment_chart(m, c, rng=rng)
        vo = vanishing_orders(ch, rng=rng)
        dev = np.nanmax(np.abs(vo.slopes - np.round(vo.slopes)))
        out.append(rec(f"c09.{m.name}.orders", f"vanishing orders {expect[m.name]} at the singular point",
                       0.0 if vo.orders == expect[m.name] else 1.0, 0.5))
        out.append(rec(f"c09.{m.name}.slope", "regression slopes within 0.15 of an integer", dev, 0.15))
    return out


def c10_image(rng):
    m, c = _isotropic_charts()[0]
    si = singular_image(build_moment_chart(m, c, rng=rng), rng=rng)
    m2, c2 = _isotropic_charts()[1]
    si2 = singular_image(build_moment_chart(m2, c2, rng=rng), rng=rng)
    return [
        rec("c10.rays", "circle-stabilizer orbits map onto the three rays", si.residual, 1e-8),
        rec("c10.rays_hit", "all three rays are attained", len(si.rays_hit), 2.5, "gt"),
        rec("c10.line", "near a circle-stabilizer point singular orbits map into nu1 = nu2 = 0", si2.residual, 1e-8),
    ]


def c11_leaves(rng):
    out = []
    for m in (M.flat_t2_r_c2(), M.flat_s1_c3()):
        p0 = m.sample(rng, 1)[0]
        L = leaf_triples(m, p0)
        out += [
            rec(f"c11.{m.name}.phi", "phi vanishes on the leaf", L.residuals["phi_restriction"], 1e-12),
            rec(f"c11.{m.name}.starphi", "*phi restricts to the leaf volume", L.residuals["starphi_volume"], 1e-10),
            rec(f"c11.{m.name}.d_omega", "leaf triple is closed", L.residuals["d_omega"], 1e-8),
        ]
    return out


def c12_monge_ampere(rng, n=24):
    dom = Domain([box(n, -1.0, 1.0) for _ in range(3)])
    x, y, z = dom.coords()
    r1 = monge_ampere_residual(0.5 * (x**2 + y**2 + z**2), dom)
    r2 = monge_ampere_residual(0.5 * (4 * x**2 + y**2 / 2 + z**2 / 2), dom)
    r3 = monge_ampere_residual(0.5 * (x**2 + y**2 + z**2) + 0.1 * np.sin(x), dom)
    return [
        rec("c12.quadratic", "unit quadratic potential solves det Hess u = 1", r1, 1e-10),
        rec("c12.quadratic_aniso", "anisotropic quadratic with unit determinant", r2, 1e-10),
        rec("c12.perturbed", "perturbed potential violates the determinant condition", r3, 0.05, "gt"),
    ]


# ---------------------------------------------------------------------------
# further checks
# ---------------------------------------------------------------------------

def model_invariants(rng, n=200):
    out = []
    for name in M.MODEL_NAMES:
        m = M.build(name)
        p = m.sample(rng, n)
        gp = m.g2(p)
        out.append(rec(f"models.{name}.positive", "phi is positive (orientation +1)",
                       np.max(1 - gp.orientation), 0.5))
        out.append(rec(f"models.{name}.starphi", "closed-form *phi agrees with the Hodge star",
                       np.max(np.abs(m.starphi(p).comps - gp.starphi.comps)), 1e-10))
        out.append(rec(f"models.{name}.bracket", "generators commute", m.bracket_residual(), 1e-10))
        if m.flat and not m.is_invariant:
            out.append(rec(f"models.{name}.euclidean", "flat model metric is Euclidean",
                           np.max(np.abs(gp.g - np.eye(7))), 1e-12))
    for m in (M.flat_s1_c3(), M.flat_t2_r_c2()):
        p = m.sample(rng, n)
        out.append(rec(f"models.{m.name}.isotropic", "phi(U1, U2, U3) = 0",
                       np.max(np.abs(evaluate_arrays(m.phi(p).comps, 3, m.U(p)))), 1e-10))
    z = M.z2_quotient_example()
    q = z.sample(rng, 20)
    q[:, 4] = 0.0
    q2 = q.copy()
    q2[:, :4] *= -1
    q2[:, 4] = 2 * np.pi
    out.append(rec("models.z2.gluing", "phi agrees at identified points",
                   np.max(np.abs(z.phi(q).comps - z.phi(q2).comps)), 1e-12))
    out.append(rec("models.z2.exceptional", "orbit through x = 0 has stabilizer of order 2",
                   abs(z.stabilizer_order(np.array([0, 0, 0, 0, 1.0, 2.0, 3.0])) - 2), 0.5))
    out.append(rec("models.z2.principal", "orbit through x != 0 has trivial stabilizer",
                   abs(z.stabilizer_order(np.array([0.3, 0, 0, 0, 1.0, 2.0, 3.0])) - 1), 0.5))
    return out


def reduction_checks(rng):
    out = []
    for name in M.MODEL_NAMES:
        m = M.build(name)
        r = classify_action(m, n=16, rng=rng, grid=12 if m.is_invariant else None)
        out.append(rec(f"reduction.{name}.type", f"detected type {m.expected_type}",
                       abs(r.orbit_type - m.expected_type), 0.5))
        for k, v in {**r.residuals, **r.field_residuals}.items():
            out.append(rec(f"reduction.{name}.{k}", f"structure check {k}", v, 1e-9))
    q = quotient_triple_point(M.flat_quotient(M.PI_PRESETS["generic"]), rng.uniform(0, 1, (8, 7)))
    out.append(rec("reduction.flat_generic.wedge", "type 1 quotient triple: omega_i ^ omega_j = 2 A_ij mu",
                   q.residuals["wedge"], 1e-12))
    bc = change_generators(M.flat_s1_c3(), [[0, 1, 0], [0, 0, 1], [1, 0, 0]], rng=rng)
    for k, v in bc.residuals.items():
        out.append(rec(f"reduction.basis_change.{k}", "transformation law under a generator permutation", v, 1e-12))
    m = M.flat_t2_r_c2()
    lc = leaf_change_residual(m, m.sample(rng, 1)[0], [[1, 1, 0], [0, 1, 0], [2, 3, 1]])
    out.append(rec("reduction.leaf_metric", "leaf metric is unchanged by unimodular basis change",
                   lc["leaf_metric"], 1e-10))
    out.append(rec("reduction.leaf_omega", "leaf triple transforms by (det K)^-1 K", lc["omega_hat"], 1e-10))
    return out


SUITES = {
    "pointwise": (c01_metric, c03_reconstruct),
    "stars": (c02_stars,),
    "models": (model_invariants, c04_t4, c05_flat, c06_product, c12_monge_ampere),
    "reduction": (c07_table, reduction_checks, c11_leaves),
    "moments": (c08_moments, c09_orders, c10_image),
}
SUITES["all"] = tuple(f for k in ("pointwise", "stars", "models", "reduction", "moments") for f in SUITES[k])


def run_suite(name, seed=0, stop_early=False):
    """Run a suite; returns ``(records, timing)``."""
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    rng = np.random.default_rng(seed)
    records, timing = [], {}
    for check in SUITES[name]:
        t = time.perf_counter()
        records += check(rng)
        timing[check.__name__] = round(time.perf_counter() - t, 3)
        if stop_early and not all(r.passed for r in records):
            break
    return records, timing
