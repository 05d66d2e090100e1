"""Acceptance criteria 1-10, one test each, with a PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the lines as
they are produced; they are also collected in the terminal summary).
"""

import math
import time

import numpy as np
from scipy import integrate as spi
from scipy import stats

from fiducial import crnef as C
from fiducial import fiducial1d as F
from fiducial import gfd as G
from fiducial import inference as I
from fiducial import models as M
from fiducial import stepwise as S

TE = M.model("truncated-exponential")


def _normal_logpdf(u):
    return -0.5 * u * u - 0.5 * math.log(2 * math.pi)


def _uniform01_logpdf(u):
    return 0.0 if 0.0 < u < 1.0 else -math.inf


# -- 1 -------------------------------------------------------------------------

# (key, params, n, s, {variant: closed-form reference})
TABLE_ROWS = [
    ("normal-mean", {"sigma2": 2.0}, 4, 3.0, {"right": stats.norm(0.75, math.sqrt(0.5))}),
    ("normal-variance", {}, 5, 7.0, {"right": stats.invgamma(2.5, scale=3.5)}),
    ("gamma-rate", {"alpha": 1.5}, 3, 2.2, {"right": stats.gamma(4.5, scale=1 / 2.2)}),
    ("pareto", {"x0": 1.0}, 3, 1.2, {"right": stats.gamma(3, scale=1 / 1.2)}),
    ("weibull", {"c": 2.0}, 4, 2.5, {"right": stats.gamma(4, scale=1 / 2.5)}),
    (
        "binomial", {"m": 2}, 5, 4,
        {"right": stats.beta(5, 6), "left": stats.beta(4, 7), "geometric": stats.beta(4.5, 6.5)},
    ),
    (
        "poisson", {}, 3, 4,
        {"right": stats.gamma(5, scale=1 / 3), "left": stats.gamma(4, scale=1 / 3), "geometric": stats.gamma(4.5, scale=1 / 3)},
    ),
    (
        "negative-binomial", {"m": 2}, 3, 5,
        {"right": stats.beta(6, 6), "left": stats.beta(6, 5), "geometric": stats.beta(6, 5.5)},
    ),
]


def test_criterion_01_table_closed_forms(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for key, kw, n, s, refs in TABLE_ROWS:
        m = M.model(key, **kw)
        for variant, ref in refs.items():
            fid = F.fiducial(m, n, s, variant)
            g = np.linspace(ref.ppf(1e-6), ref.ppf(1 - 1e-6), 200)
            worst = max(worst, float(np.max(np.abs(np.asarray(fid.numeric.cdf(g)) - ref.cdf(g)))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 5.0
    criterion("1", ok, f"max sup-norm {worst:.2e} over 8 rows, {elapsed:.2f}s")
    assert ok


# -- 2 -------------------------------------------------------------------------


def test_criterion_02_truncated_exponential_intervals(criterion):
    t0 = time.perf_counter()
    h = F.fiducial_right(TE, 2, 1.0).dist
    r = G.gfd_density(TE, [0.5, 0.5])
    hi_h = I.equal_tail_interval(h, 0.95)
    hi_r = I.equal_tail_interval(r.dist, 0.95)
    elapsed = time.perf_counter() - t0
    ok_h = np.allclose(hi_h, (-4.191, 4.191), atol=0.005)
    ok_r = np.allclose(hi_r, (-4.399, 4.399), atol=0.005)
    inside = hi_r[0] < hi_h[0] and hi_h[1] < hi_r[1]
    ok = ok_h and ok_r and inside and elapsed < 10.0
    criterion(
        "2",
        ok,
        f"95% h=({hi_h[0]:.4f}, {hi_h[1]:.4f}) r=({hi_r[0]:.4f}, {hi_r[1]:.4f}) h inside r: {inside}, {elapsed:.2f}s",
    )
    assert ok


def test_criterion_02_reconciled_ninety_percent(criterion):
    # the same targets are reproduced at level 0.90 (r from x = (0.1, 0.9))
    h = F.fiducial_right(TE, 2, 1.0).dist
    r = G.gfd_density(TE, [0.1, 0.9])
    ih = I.equal_tail_interval(h, 0.90)
    ir = I.equal_tail_interval(r.dist, 0.90)
    ok = np.allclose(ih, (-4.191, 4.191), atol=0.005) and np.allclose(ir, (-4.399, 4.399), atol=0.005)
    ok = ok and ir[0] < ih[0] and ih[1] < ir[1]
    criterion("2 (level 0.90, x=(0.1,0.9))", ok, f"h=({ih[0]:.4f}, {ih[1]:.4f}) r=({ir[0]:.4f}, {ir[1]:.4f})")
    assert ok


# -- 3 -------------------------------------------------------------------------


def test_criterion_03_risk_gaps(criterion):
    worst, spread = 0.0, 0.0
    for key in ("binomial", "negative-binomial", "poisson"):
        for n in range(3, 11):
            rep = I.confidence_risk_gap(key, n)
            assert rep.grid.size == 10
            worst = max(worst, rep.max_abs_error)
            spread = max(spread, float(np.ptp(rep.gap)))
    ok = worst < 1e-9 and spread < 1e-9
    criterion("3", ok, f"max |gap - analytic| {worst:.2e}, max spread over mu {spread:.2e}")
    assert ok


# -- 4 -------------------------------------------------------------------------


def _ordering_cases():
    for n in range(1, 13):
        for s in range(1, n):
            yield "binomial", {"m": 1}, n, s
    for s in range(1, 13):
        yield "poisson", {}, 2, s
        yield "negative-binomial", {"m": 1}, 2, s
    yield "logarithmic", {}, 10, 12


def _order_and_crossing(key, kw, n, s):
    m = M.model(key, **kw)
    r = F.fiducial(m, n, s, "right").dist
    l = F.fiducial(m, n, s, "left").dist
    g = F.fiducial(m, n, s, "geometric").dist
    lo, hi = m.param_space
    bot = lo + 1e-6 if math.isfinite(lo) else float(min(r.ppf(1e-9), l.ppf(1e-9)))
    top = hi - 1e-6 if math.isfinite(hi) else float(max(r.ppf(1 - 1e-9), l.ppf(1 - 1e-9)))
    th = np.linspace(bot, top, 2000)
    cr, cl, cg = (np.asarray(d.cdf(th), dtype=float) for d in (r, l, g))
    ca = 0.5 * (cr + cl)
    inner = np.abs(cl - cr) > 1e-12
    lower, upper = (cl, cr) if key == "negative-binomial" else (cr, cl)
    ordered = bool(np.all(lower[inner] < cg[inner]) and np.all(cg[inner] < upper[inner]))
    d = cg - ca
    sg = np.sign(d[np.abs(d) > 1e-12])
    changes = np.flatnonzero(np.diff(sg))
    crossing = len(changes) == 1 and sg[0] == -1 and sg[-1] == 1
    return ordered, crossing


def test_criterion_04_ordering_and_crossing(criterion):
    bad = []
    count = 0
    for key, kw, n, s in _ordering_cases():
        ordered, crossing = _order_and_crossing(key, kw, n, s)
        count += 1
        if not (ordered and crossing):
            bad.append((key, n, s, ordered, crossing))
    ok = not bad
    criterion("4", ok, f"{count} cases, failures: {bad[:5]}")
    assert ok


# -- 5 -------------------------------------------------------------------------


def _criterion5_reports():
    out = {}
    out["gamma"] = I.pit_uniformity(M.model("gamma-rate", alpha=2.0), 5, 1.3, replicates=10**4, seed=501, lengths=False)
    out["normal"] = I.pit_uniformity(M.model("normal-mean", sigma2=1.0), 4, -0.4, replicates=10**4, seed=502, lengths=False)
    out["binomial"] = I.pit_uniformity(M.model("binomial", m=20), 1, 0.3, replicates=10**4, seed=503, levels=[0.95])
    out["poisson"] = I.pit_uniformity(M.model("poisson"), 10, 2.0, replicates=10**4, seed=504, levels=[0.95])
    return out


def test_criterion_05_pit_and_coverage(criterion):
    t0 = time.perf_counter()
    reps = _criterion5_reports()
    elapsed = time.perf_counter() - t0
    band = I.ks_critical_value(10**4)
    ks_ok = reps["gamma"].ks_statistic < band and reps["normal"].ks_statistic < band
    cov = {k: reps[k].coverage_at(0.95) for k in ("binomial", "poisson")}
    cov_ok = all(abs(v - 0.95) <= 0.03 for v in cov.values())
    ok = ks_ok and cov_ok and elapsed < 60.0
    criterion(
        "5",
        ok,
        f"KS gamma {reps['gamma'].ks_statistic:.4f} normal {reps['normal'].ks_statistic:.4f} (band {band:.4f}); "
        f"coverage binomial {cov['binomial']:.4f} poisson {cov['poisson']:.4f}; {elapsed:.1f}s",
    )
    assert ok


# -- 6 -------------------------------------------------------------------------


def test_criterion_06_bayes_equalities(criterion):
    gaps = {}
    # (a) uniform scale, prior 1/theta
    x = [0.3, 1.2, 0.9, 0.4]
    m = M.model("uniform-scale")
    g = np.linspace(1.201, 8.0, 60)
    gaps["a"] = I.fiducial_bayes_gap(F.fiducial_right(m, 4, 1.2).dist, I.uniform_posterior(m, x), g)
    # (b) uniform shift, flat prior
    x = [0.35, 0.9, 0.6, 0.5]
    h = S.location_fiducial(x, _uniform01_logpdf, (0.0, 1.0))
    gaps["b"] = I.fiducial_bayes_gap(h, I.uniform_posterior(M.model("uniform-shift"), x), np.linspace(-0.099, 0.349, 60))
    # (c) normal location-scale, prior 1/sigma: both marginals
    x = np.array([1.2, 0.4, 2.9, 1.7, 0.8])
    ch = S.loc_scale_normal_chain("xbar-s2")
    j = S.build_joint(ch, ch.statistics(x), "right")
    post = I.normal_location_scale_posterior(x)
    gaps["c"] = max(
        I.fiducial_bayes_gap(j.marginal(0), post.sigma, np.linspace(0.3, 3.0, 25)),
        I.fiducial_bayes_gap(j.marginal(1), post.theta, np.linspace(0.0, 2.8, 15)),
    )
    # (d) Neyman-Scott sigma^2
    pairs = np.array([[1.0, 1.6], [2.2, 1.9], [0.3, 1.1], [4.0, 3.2], [2.5, 2.4]])
    w = float(np.sum((pairs[:, 0] - pairs[:, 1]) ** 2))
    ns = S.neyman_scott_chain(5)
    fid = S.build_joint(ns, ns.statistics(pairs), "right").marginal(0)
    g = np.linspace(0.01, 1.5, 60)
    gaps["d"] = max(
        float(np.max(np.abs(np.asarray(fid.cdf(g)) - stats.invgamma.cdf(g, 2.5, scale=w / 4)))),
        I.fiducial_bayes_gap(fid, I.neyman_scott_posterior(pairs), g),
    )
    # (e) discrete geometric fiducials and Jeffreys posteriors
    e = 0.0
    for key, kw, n, s in [("binomial", {"m": 1}, 10, 3), ("poisson", {}, 6, 11), ("negative-binomial", {"m": 2}, 5, 7)]:
        mm = M.model(key, **kw)
        fd = F.fiducial(mm, n, s, "geometric").dist
        pts = np.asarray(fd.ppf(np.linspace(0.001, 0.999, 60)))
        e = max(e, I.fiducial_bayes_gap(fd, I.bayes_posterior(mm, "jeffreys", n=n, s=s), pts))
    gaps["e"] = e
    # (f) trinomial ratio
    jt = S.build_joint(S.trinomial_ratio_chain(15), {"x1": 3, "x2": 5}, "geometric")
    gaps["f"] = I.fiducial_bayes_gap(S.marginal_of_interest(jt), I.trinomial_ratio_reference_posterior(3, 5), np.linspace(0.02, 4.0, 60))
    ok = all(v < 1e-6 for v in gaps.values())
    criterion("6", ok, " ".join(f"({k}) {v:.1e}" for k, v in gaps.items()))
    assert ok


# -- 7 -------------------------------------------------------------------------

C7_N, C7_S = 20, (4, 6, 5)


def _p_log_jacobian(p):
    r = 1.0 - np.cumsum(p)
    r_prev = np.concatenate([[1.0], r[:-1]])
    return float(np.sum(np.log(r_prev) - np.log(p) - np.log(r)))


def _gd_marginal_cdf(a, b, k, t):
    """cdf of p_k = V_k prod_{j<k} (1 - V_j) by one-dimensional quadrature."""
    if k == 0:
        return stats.beta.cdf(t, a[0], b[0])
    # W = prod_{j<k} (1 - V_j), integrated out numerically
    if k == 1:
        f = lambda w: stats.beta.pdf(w, b[0], a[0]) * stats.beta.cdf(min(t / w, 1.0), a[1], b[1])
        return spi.quad(f, 0, 1, epsabs=1e-11, limit=200)[0]
    def w_pdf(w):
        # density of (1 - V_1)(1 - V_2)
        g = lambda u: stats.beta.pdf(u, b[0], a[0]) * stats.beta.pdf(w / u, b[1], a[1]) / u if u > w else 0.0
        return spi.quad(g, w, 1, epsabs=1e-12, limit=200)[0]
    f = lambda w: w_pdf(w) * stats.beta.cdf(min(t / w, 1.0), a[2], b[2])
    return spi.quad(f, 0, 1, epsabs=1e-10, limit=200)[0]


def _criterion7_samples():
    jp = C.multinomial_p_geometric(C7_N, 1, C7_S)
    spec = C.crnef("multinomial", 3, N=C7_N)
    jphi = C.joint_fiducial_phi(spec, 1, C7_S, "geometric")
    return jp, jphi, jp.sample(10**5, 701), jphi.sample(10**5, 702)


def test_criterion_07_crnef_structure(criterion):
    jp, jphi, draws, phis = _criterion7_samples()
    a, b = jp.gd_params
    # density agreement on a lattice inside the simplex
    lat = np.linspace(0.04, 0.6, 9)
    rel = 0.0
    npts = 0
    for p1 in lat:
        for p2 in lat:
            for p3 in lat:
                p = np.array([p1, p2, p3])
                if p.sum() > 0.96:
                    continue
                closed = math.exp(C.generalized_dirichlet_logpdf(p, a, b))
                push = math.exp(jphi.logpdf(C.phi_of_p_multinomial(p)) + _p_log_jacobian(p))
                rel = max(rel, abs(push - closed) / closed)
                npts += 1
    # marginal KS of sequential-beta draws against the exact marginals
    ks = []
    for k in range(3):
        lo, hi = float(draws[:, k].min()), float(draws[:, k].max())
        tg = np.linspace(lo, hi, 120)
        cg = np.array([_gd_marginal_cdf(a, b, k, t) for t in tg])
        cdf = lambda v, tg=tg, cg=cg: np.interp(v, tg, cg)
        ks.append(float(stats.kstest(draws[:, k], cdf).statistic))
    corr = np.corrcoef(phis.T)[np.triu_indices(3, 1)]
    ok = rel < 1e-6 and max(ks) < 0.02 and np.all(np.abs(corr) <= 0.03)
    criterion(
        "7",
        ok,
        f"max rel density gap {rel:.1e} on {npts} points; KS {', '.join(f'{v:.4f}' for v in ks)}; "
        f"phi corr {', '.join(f'{v:+.4f}' for v in corr)}",
    )
    assert ok


# -- 8 -------------------------------------------------------------------------


def test_criterion_08_sufficiency(criterion):
    x = np.array([0.35, 0.9, 0.6, 0.5])
    g = np.linspace(-0.099, 0.349, 200)
    rep = S.sufficiency_check(S.uniform_shift_chain("full"), {"x": x}, S.uniform_shift_chain("sufficient"), {"x": x}, g)
    ra = G.gfd_density(TE, [0.05, 0.95])
    rb = G.gfd_density(TE, [0.5, 0.5])
    th = np.linspace(-12, 12, 481)
    pdf_gap = float(np.max(np.abs(np.asarray(ra.pdf(th)) - np.asarray(rb.pdf(th)))))
    cdf_gap = float(np.max(np.abs(np.asarray(ra.cdf(th)) - np.asarray(rb.cdf(th)))))
    ok = rep.sup_pdf_gap < 1e-12 and rep.sup_cdf_gap < 1e-12 and pdf_gap > 0.01
    criterion(
        "8",
        ok,
        f"uniform shift pdf gap {rep.sup_pdf_gap:.1e} cdf gap {rep.sup_cdf_gap:.1e}; "
        f"truncated exponential r density gap {pdf_gap:.4f} (cdf gap {cdf_gap:.4f})",
    )
    assert ok


# -- 9 -------------------------------------------------------------------------


def test_criterion_09_poisson_rates(criterion):
    n, s1, s2 = 10, 18, 31
    j = S.build_joint(S.poisson_ratio_chain(n), {"s1": s1, "s2": s2}, "geometric")
    jr = S.build_joint(S.poisson_ratio_chain(n, order="sum-first"), {"s1": s1, "s2": s2}, "geometric")
    m1, m2 = j.marginal(0), j.marginal(1)
    pts = [(0.6, 3.0), (1.4, 4.8), (2.2, 6.5), (1.0, 5.0)]
    fact = max(abs(j.logpdf(p) - (m1.logpdf(p[0]) + m2.logpdf(p[1]))) for p in pts)
    g = np.linspace(0.3, 4.0, 60)
    disp = stats.betaprime.pdf(g, s2 + 0.5, s1 + 0.5)
    dgap = float(np.max(np.abs(np.asarray(S.marginal_of_interest(j).pdf(g)) - disp)))
    order = max(abs(j.logpdf(p) - jr.logpdf(p[::-1])) for p in pts)
    ok = fact < 1e-10 and dgap < 1e-10 and order < 1e-10
    criterion("9", ok, f"factorization {fact:.1e}, closed-form marginal {dgap:.1e}, order reversal {order:.1e}")
    assert ok


# -- 10 ------------------------------------------------------------------------


def test_criterion_10_determinism(criterion, tmp_path):
    from fiducial import cli

    a, b = _criterion5_reports(), _criterion5_reports()
    same5 = all(a[k].pit.tobytes() == b[k].pit.tobytes() for k in a)
    s1, s2 = _criterion7_samples(), _criterion7_samples()
    same7 = s1[2].tobytes() == s2[2].tobytes() and s1[3].tobytes() == s2[3].tobytes()
    scen = __import__("pathlib").Path(__file__).resolve().parents[1] / "scenarios"
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        for cmd, name in [("sample", "poisson_ratio"), ("crnef", "crnef_multinomial"), ("coverage", "coverage_binomial")]:
            assert cli.main([cmd, "--scenario", str(scen / f"{name}.toml"), "--out", str(d)]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))})
    same_cli = outs[0] == outs[1] and len(outs[0]) == 3
    ok = same5 and same7 and same_cli
    criterion("10", ok, f"coverage PIT {same5}, sequential-beta draws {same7}, CLI CSV bytes {same_cli}")
    assert ok
