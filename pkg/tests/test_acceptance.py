"""Acceptance suite: twelve criteria, one pass/fail line each.

Run with  pytest tests/test_acceptance.py -v -s  to see the lines as they
complete. Every tolerance is pinned here, none deferred.
"""

import math
import time

import numpy as np

from srcurv import models
from srcurv.bochner import bochner_residuals, cd_slack
from srcurv.calculus import ScalarField, commutator_LZ_residual
from srcurv.cdconstants import (
    _entropy_quadrature,
    certify_bounds,
    derive_constants,
    entropy_diameter_quadrature,
)
from srcurv.curvature import r_form
from srcurv.geodesics import (
    GeodesicState,
    ShootingConfig,
    cc_distance,
    heisenberg_distance,
    integrate_geodesic,
)
from srcurv.heat import (
    DiffusionConfig,
    ball_volume,
    estimate_Ptf,
    harnack_check,
    lambda1_estimate,
    liyau_check,
    simulate_paths,
    volume_growth_fit,
)
from srcurv.polynomials import scaled_random_polynomial

from conftest import MODEL_NAMES, sample_fields

SEED = 31415


def _line(num, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] criterion {num:2d} ({name}): {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


def test_criterion_01_tensoriality():
    t0 = time.time()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for name in MODEL_NAMES:
        md = models.build(name)
        pts = md.sample_points(100, rng)
        qs = r_form(md.structure, pts, route="structural")
        qt = r_form(md.structure, pts, route="tensorial")
        worst = max(worst, float(np.abs(qs - qt).max()))
    dt = time.time() - t0
    _line(1, "tensoriality of R", worst <= 1e-9 and dt < 30.0,
          f"max |structural - tensorial| = {worst:.2e} over 5 models x 100 pts "
          f"in {dt:.1f}s")


def test_criterion_02_horizontal_bochner():
    t0 = time.time()
    rng = np.random.default_rng(SEED + 1)
    worst_exact = 0.0
    for name in MODEL_NAMES:
        md = models.build(name)
        for f in sample_fields(md, 50, rng):
            pts = md.sample_points(20, rng)
            r = bochner_residuals(md.structure, f, pts)
            worst_exact = max(worst_exact, float(np.abs(r.horizontal).max()))
    # FD backend leg: scale-normalized residual on a subsample, away from the
    # polar chart degeneracies where no FD step is uniformly accurate
    worst_fd = 0.0
    from srcurv.bochner import horizontal_bochner_residual
    from srcurv.calculus import Workspace, gamma2_value, word_evaluator

    for name in MODEL_NAMES:
        md = models.build(name)
        box = md.reference_box.copy()
        if name in ("sphere2", "su2"):
            box[0] = [0.5, math.pi - 0.5]
        ctr, hw = box.mean(axis=1), (box[:, 1] - box[:, 0]) / 2
        for _ in range(3):
            poly = scaled_random_polynomial(md.structure.chart_dim, 4, rng, ctr, hw)
            f = ScalarField.from_callable(poly.eval)
            pts = rng.uniform(box[:, 0], box[:, 1], (4, md.structure.chart_dim))
            res = horizontal_bochner_residual(md.structure, f, pts)
            ws = Workspace(md.structure, pts)
            g2 = gamma2_value(ws, word_evaluator(ws, f))
            scale = np.maximum(1.0, np.maximum(np.abs(g2), np.abs(g2 - res)))
            worst_fd = max(worst_fd, float((np.abs(res) / scale).max()))
    dt = time.time() - t0
    _line(2, "horizontal Bochner", worst_exact <= 1e-9 and worst_fd <= 1e-5
          and dt < 120.0,
          f"exact residual {worst_exact:.2e} (5 models x 50 fields x 20 pts), "
          f"FD residual {worst_fd:.2e} (normalized), {dt:.1f}s")


def test_criterion_03_vertical_bochner_and_commutator():
    rng = np.random.default_rng(SEED + 2)
    worst_v = worst_c = 0.0
    for name in MODEL_NAMES:
        md = models.build(name)
        for f in sample_fields(md, 50, rng):
            pts = md.sample_points(20, rng)
            r = bochner_residuals(md.structure, f, pts)
            worst_v = max(worst_v, float(np.abs(r.vertical).max()))
            if md.structure.v:
                c = commutator_LZ_residual(md.structure, f, pts)
                worst_c = max(worst_c, float(np.abs(c).max()))
    _line(3, "vertical Bochner + [L,Z]", worst_v <= 1e-9 and worst_c <= 1e-9,
          f"vertical residual {worst_v:.2e}, commutator residual {worst_c:.2e}")


def test_criterion_04_paper_constants():
    rng = np.random.default_rng(SEED + 3)
    oks, details = [], []
    for name, args, zero_margin in [
        ("heisenberg", (0.0, 0.25, 0.5), True),
        ("free_step2_d3", (0.0, 0.25, 1.0), True),
        ("sphere2", (1.0, None, 0.0), False),
    ]:
        md = models.build(name)
        cert = certify_bounds(md.structure, md.sample_points(100, rng), *args, 1e-9)
        ok = cert.passed
        if zero_margin:
            ok = ok and abs(cert.r_margins.min()) <= 1e-12 \
                and abs(cert.t_margins.max()) <= 1e-12
        oks.append(ok)
        details.append(f"{name}: rmin={cert.r_margins.min():+.1e} "
                       f"tmax={cert.t_margins.max():+.1e}")
    _line(4, "paper constants", all(oks), "; ".join(details))


def test_criterion_05_cd_slack_sampling():
    rng = np.random.default_rng(SEED + 4)
    worst = math.inf
    per_model = {}
    for name in MODEL_NAMES:
        md = models.build(name)
        cdp = md.cdp
        lo = math.inf
        count = 0
        for f in sample_fields(md, 50, rng):
            for _ in range(4):
                pts = md.sample_points(5, rng)
                nu = float(rng.uniform(0.05, 20.0))
                sl = cd_slack(md.structure, f, pts, nu, cdp.rho1, cdp.rho2, cdp.kappa)
                lo = min(lo, float(sl.min()))
                count += len(pts)
        per_model[name] = lo
        worst = min(worst, lo)
        assert count == 1000
    _line(5, "CD inequality sampling", worst >= -1e-9,
          "min slack per model " + ", ".join(f"{k}={v:.2e}" for k, v in per_model.items()))


def test_criterion_06_diameter_quadrature():
    rng = np.random.default_rng(SEED + 5)
    worst = 0.0
    for _ in range(20):
        D = float(rng.uniform(0.5, 20.0))
        alpha = float(rng.uniform(0.5, 20.0))
        _, _, rel = _entropy_quadrature(D, alpha)
        worst = max(worst, rel)
    numeric, closed, rel = entropy_diameter_quadrature(models.build("su2").cdp)
    worst = max(worst, rel)
    ok = worst <= 1e-6 and abs(closed - 26.657297628950197) < 1e-9
    _line(6, "diameter quadrature", ok,
          f"max relative difference {worst:.2e}; su2 closed form {closed:.6f}")


def test_criterion_07_lichnerowicz_sharpness():
    t0 = time.time()
    md = models.build("sphere2")
    est = lambda1_estimate(md, n_grid=48)
    bound = derive_constants(md.cdp).lambda1_bound
    dt = time.time() - t0
    ok = abs(est.value - 2.0) <= 0.04 and est.value >= bound - 0.04 and dt < 120
    _line(7, "Lichnerowicz sharpness on the sphere", ok,
          f"lambda1 = {est.value:.5f} (target 2.00 +- 2%), bound = {bound}, {dt:.1f}s")


def test_criterion_08_stochastic_completeness():
    t0 = time.time()
    md = models.build("heisenberg")
    cfg = DiffusionConfig(n_paths=100000, dt=1e-3, t_max=1.0, seed=SEED,
                          box_halfwidth=50.0)
    ens = simulate_paths(md, np.zeros(3), cfg)
    mass = estimate_Ptf(md, np.zeros(3), lambda p: np.ones(len(p)), 1.0, cfg, ens=ens)
    dt = time.time() - t0
    ok = ens.censored.sum() == 0 and mass.mean == 1.0 and dt < 60.0
    _line(8, "stochastic completeness proxy", ok,
          f"censored = {int(ens.censored.sum())}/100000, mass = {mass.mean}, {dt:.1f}s")


def test_criterion_09_liyau_statistical():
    t0 = time.time()
    md = models.build("heisenberg")
    dc = derive_constants(md.cdp)
    assert dc.liyau.ratio_const == 4.0 and dc.liyau.inv_t == 16.0
    cfg = DiffusionConfig(n_paths=10 ** 6, dt=1e-3, t_max=1.2, seed=SEED + 6)
    pts = np.array([[0.0, 0.0, 0.0], [0.15, 0.0, 0.0], [0.0, 0.2, 0.0],
                    [-0.1, 0.1, 0.05], [0.1, -0.15, -0.05]])

    def bump(p):
        return np.exp(-0.5 * (p ** 2).sum(axis=1))

    rep = liyau_check(md, bump, 1.0, pts, md.cdp, cfg)
    dt = time.time() - t0
    ok = rep.passed and dt < 300.0
    _line(9, "Li-Yau statistical check", ok,
          f"slack in [{rep.slack.min():.3f}, {rep.slack.max():.3f}], "
          f"3*stderr <= {3 * rep.stderr.max():.3f}, bias <= {rep.bias.max():.3f}, "
          f"1e6 paths, {dt:.1f}s")


def test_criterion_10_harnack_kernel():
    md = models.build("heisenberg")
    cfg = DiffusionConfig(n_paths=200000, dt=1e-3, t_max=1.0, seed=SEED + 7,
                          bandwidth=1.2)
    rep = harnack_check(md, np.zeros(3), np.zeros(3), 0.5, 1.0, md.cdp, cfg)
    ok = rep.passed and rep.factor == 16.0
    _line(10, "Harnack kernel check", ok,
          f"p(0,0,0.5) = {rep.lhs.value:.4f} <= 16 p(0,0,1) = "
          f"{rep.factor * rep.rhs.value:.4f} (margin {rep.margin:+.4f}, "
          f"tol {rep.tolerance:.4f})")


def test_criterion_11_volume_growth():
    t0 = time.time()
    md = models.build("heisenberg")
    rng = np.random.default_rng(SEED + 8)
    radii = np.array([1.0, 2.0, 4.0, 8.0])
    vols = []
    for r in radii:
        bv = ball_volume(md, np.zeros(3), r, 200000,
                         lambda x, p: heisenberg_distance(p, base=x), rng)
        vols.append(bv.value)
    slope, _ = volume_growth_fit(radii, np.array(vols))
    D = derive_constants(md.cdp).D
    dt = time.time() - t0
    ok = abs(slope - 4.0) <= 0.3 and slope <= D and np.all(np.diff(vols) > 0) \
        and dt < 300.0
    _line(11, "volume growth", ok,
          f"exponent = {slope:.3f} (target 4.0 +- 0.3, bound D = {D}), {dt:.1f}s")


def test_criterion_12_geodesic_invariants():
    t0 = time.time()
    md = models.build("heisenberg")
    s = md.structure
    tr = integrate_geodesic(s, GeodesicState(np.zeros(3), np.array([0.6, 0.8]),
                                             np.array([1.1])), 10.0, 10000)
    drift_ok = tr.speed_drift <= 1e-10
    cfg = ShootingConfig(starts=16, gn_iters=22, steps=120)
    unit = cc_distance(s, np.zeros(3), np.array([1.0, 0, 0]), cfg,
                       horizontal_coords=slice(0, 2))
    unit_ok = unit.status == "converged" and abs(unit.value - 1.0) <= 1e-6

    rng = np.random.default_rng(SEED + 9)
    sym_worst, tri_worst = 0.0, math.inf
    for _ in range(50):
        pts = rng.uniform(-1.0, 1.0, size=(3, 3))
        d01 = cc_distance(s, pts[0], pts[1], cfg, horizontal_coords=slice(0, 2)).value
        d10 = cc_distance(s, pts[1], pts[0], cfg, horizontal_coords=slice(0, 2)).value
        d12 = cc_distance(s, pts[1], pts[2], cfg, horizontal_coords=slice(0, 2)).value
        d02 = cc_distance(s, pts[0], pts[2], cfg, horizontal_coords=slice(0, 2)).value
        sym_worst = max(sym_worst, abs(d01 - d10))
        tri_worst = min(tri_worst, d01 + d12 - d02)
    dt = time.time() - t0
    ok = drift_ok and unit_ok and sym_worst <= 2e-6 and tri_worst >= -2e-6
    _line(12, "geodesic invariants", ok,
          f"speed drift {tr.speed_drift:.1e}, d(0,e1) = {unit.value:.8f}, "
          f"symmetry gap {sym_worst:.1e}, min triangle slack {tri_worst:+.1e} "
          f"over 50 triples, {dt:.0f}s")
