import math

import numpy as np
import pytest

from srcurv import models
from srcurv.calculus import ScalarField, sublaplacian
from srcurv.cdconstants import CDParameters
from srcurv.heat import (
    DiffusionConfig,
    InsufficientSamplingError,
    NotCompactError,
    ball_volume,
    estimate_kernel,
    estimate_Ptf,
    gaussian_rate_check,
    global_kernel_bound_check,
    group_product,
    harnack_check,
    is_group_model,
    lambda1_estimate,
    liyau_check,
    semigroup_check,
    simulate_paths,
    volume_growth_fit,
)
from srcurv.geodesics import heisenberg_distance
from srcurv.polynomials import scaled_random_polynomial

from conftest import MODEL_NAMES


def bump(p):
    return np.exp(-0.5 * (p ** 2).sum(axis=1))


def test_config_validation():
    with pytest.raises(ValueError):
        DiffusionConfig(n_paths=0, dt=1e-3, t_max=1.0, seed=1)
    with pytest.raises(ValueError):
        DiffusionConfig(n_paths=10, dt=2.0, t_max=1.0, seed=1)
    with pytest.raises(ValueError):
        DiffusionConfig(n_paths=10, dt=1e-3, t_max=1.0, seed=1, scheme="milstein")


def test_determinism_and_thread_independence():
    import numba

    md = models.build("heisenberg")
    cfg = DiffusionConfig(n_paths=4000, dt=1e-3, t_max=0.2, seed=77)
    a = simulate_paths(md, np.zeros(3), cfg).positions
    old = numba.get_num_threads()
    try:
        numba.set_num_threads(1)
        b = simulate_paths(md, np.zeros(3), cfg).positions
    finally:
        numba.set_num_threads(old)
    assert np.abs(a - b).max() == 0.0


def test_euclidean_moments_and_mass():
    md = models.build("euclidean2")
    cfg = DiffusionConfig(n_paths=40000, dt=1e-3, t_max=1.0, seed=5)
    ens = simulate_paths(md, np.zeros(2), cfg)
    pos = ens.at_time(1.0)
    se = pos.var(axis=0) * math.sqrt(2.0 / len(pos))
    assert np.abs(pos.var(axis=0) - 2.0).max() < 3 * se.max() + 0.05
    mass = estimate_Ptf(md, np.zeros(2), lambda p: np.ones(len(p)), 1.0, cfg, ens=ens)
    assert mass.mean == 1.0
    assert mass.censored_fraction == 0.0
    quad = estimate_Ptf(md, np.array([0.7, 0.0]), lambda p: p[:, 0] ** 2, 1.0, cfg)
    assert abs(quad.mean - (0.49 + 2.0)) < 3 * quad.stderr + 0.02


def test_heisenberg_vertical_mean_zero():
    md = models.build("heisenberg")
    cfg = DiffusionConfig(n_paths=40000, dt=1e-3, t_max=1.0, seed=6)
    pos = simulate_paths(md, np.zeros(3), cfg).at_time(1.0)
    se = pos[:, 2].std() / math.sqrt(len(pos))
    assert abs(pos[:, 2].mean()) < 3 * se


def test_heun_scheme_consistent():
    md = models.build("heisenberg")
    cfg = DiffusionConfig(n_paths=30000, dt=1e-3, t_max=0.5, seed=8,
                          scheme="heun-stratonovich")
    pos = simulate_paths(md, np.zeros(3), cfg).at_time(0.5)
    assert abs(pos[:, 0].var() - 1.0) < 0.05
    se = pos[:, 2].std() / math.sqrt(len(pos))
    assert abs(pos[:, 2].mean()) < 3 * se


def test_censoring_counted_never_dropped():
    md = models.build("euclidean2")
    cfg = DiffusionConfig(n_paths=2000, dt=1e-3, t_max=1.0, seed=9,
                          box_halfwidth=0.5)
    ens = simulate_paths(md, np.zeros(2), cfg)
    frac = ens.censored_fraction()
    assert frac > 0.5  # tiny box: most paths leave
    est = estimate_Ptf(md, np.zeros(2), lambda p: np.ones(len(p)), 1.0, cfg, ens=ens)
    assert est.censored_fraction == frac
    assert est.n_paths == int((1 - frac) * cfg.n_paths)


def test_euclidean_kernel_closed_form():
    md = models.build("euclidean2")
    cfg = DiffusionConfig(n_paths=150000, dt=1e-3, t_max=1.0, seed=10)
    k = estimate_kernel(md, np.zeros(2), np.zeros(2), 1.0, cfg)
    truth = 1.0 / (4 * math.pi)
    assert abs(k.value - truth) < 3 * k.stderr + k.bias_proxy + 0.002
    with pytest.raises(ValueError):
        estimate_kernel(md, np.zeros(2), np.zeros(2), 1.0,
                        DiffusionConfig(n_paths=100, dt=1e-3, t_max=1.0, seed=1,
                                        bandwidth=-1.0))


def heisenberg_kernel_oracle(t: float) -> float:
    """Independent quadrature for p(0, 0, t) on the 3-dimensional group:
    (1/(4 pi^2)) int_0^inf s/sinh(s t) ... reduced on the diagonal to
    (1/(4 pi^2 t^2)) int_0^inf u/sinh(u) du = 1/(16 t^2)."""
    from scipy.integrate import quad

    val, _ = quad(lambda lam: lam / math.sinh(lam * t), 0, 60.0 / t)
    return val / (4 * math.pi ** 2)


def test_heisenberg_kernel_vs_quadrature_oracle():
    md = models.build("heisenberg")
    for t, n in ((0.5, 250000), (1.0, 250000)):
        cfg = DiffusionConfig(n_paths=n, dt=1e-3, t_max=t, seed=11, bandwidth=1.2)
        k = estimate_kernel(md, np.zeros(3), np.zeros(3), t, cfg)
        oracle = heisenberg_kernel_oracle(t)
        assert abs(oracle - 1.0 / (16 * t * t)) < 1e-10
        assert abs(k.value - oracle) / oracle < 0.05


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_generator_consistency(name, all_models, rng):
    """(E f(Y_h) - f)/h matches the exact sub-Laplacian within 3 sigma:
    validates every simulation backend against the jet calculus."""
    md = all_models[name]
    s = md.structure
    ctr = md.reference_box.mean(axis=1)
    hw = (md.reference_box[:, 1] - md.reference_box[:, 0]) / 2
    poly = scaled_random_polynomial(s.chart_dim, 3, rng, ctr, hw)
    x = ctr + 0.05
    hstep = 0.004
    cfg = DiffusionConfig(n_paths=250000, dt=hstep / 8, t_max=hstep, seed=12)
    ens = simulate_paths(md, x, cfg)
    vals = poly.eval(ens.at_time(hstep))
    gen = (vals.mean() - poly.eval(x[None])[0]) / hstep
    lf = sublaplacian(s, ScalarField.from_polynomial(poly), x[None])[0]
    se = vals.std() / math.sqrt(len(vals)) / hstep
    assert abs(gen - lf) < 3 * se + 0.1 * max(1.0, abs(lf)) * hstep * 20


def test_group_translation_exact():
    md = models.build("free_step2_d3")
    assert is_group_model(md)
    x0 = np.array([0.2, -0.1, 0.3, 0.05, -0.2, 0.1])
    cfg = DiffusionConfig(n_paths=500, dt=1e-3, t_max=0.2, seed=13)
    direct = simulate_paths(md, x0, cfg).at_time(0.2)
    ident = simulate_paths(md, np.zeros(6), cfg).at_time(0.2)
    assert np.abs(group_product(md, x0, ident) - direct).max() < 1e-12


def test_liyau_check_passes(rng):
    md = models.build("heisenberg")
    cfg = DiffusionConfig(n_paths=120000, dt=1e-3, t_max=1.2, seed=14)
    pts = np.array([[0.0, 0.0, 0.0], [0.2, 0.1, -0.05]])
    rep = liyau_check(md, bump, 1.0, pts, md.cdp, cfg)
    assert rep.passed
    assert (rep.slack > 0).all()


def test_liyau_checker_detects_halved_coefficients():
    """Euclidean Gaussian data saturate the kappa = 0 estimate
    Gamma(ln P_t f) <= LP/P + d/(2t); the same data with the constant term
    halved (d -> d/2) must fail, so the checker cannot be vacuous."""
    md = models.build("euclidean2")
    t = 0.5
    cfg = DiffusionConfig(n_paths=150000, dt=1e-3, t_max=1.2 * t, seed=21)

    def narrow(p):
        return np.exp(-(p ** 2).sum(axis=1) / (2 * 0.09))

    pts = np.array([[1.2, 0.0], [0.0, 1.4], [0.9, -0.9]])
    good = liyau_check(md, narrow, t, pts, md.cdp, cfg)
    assert good.passed
    halved = CDParameters(rho1=0.0, rho2=None, kappa=0.0, d=1, vertical_rank=0)
    bad = liyau_check(md, narrow, t, pts, halved, cfg)
    assert not bad.passed
    assert (bad.slack < 0).any()


def test_liyau_insufficient_sampling():
    md = models.build("heisenberg")
    cfg = DiffusionConfig(n_paths=50, dt=1e-2, t_max=1.2, seed=15)

    def far_bump(p):
        return np.exp(-0.5 * ((p - 40.0) ** 2).sum(axis=1))

    with pytest.raises(InsufficientSamplingError):
        liyau_check(md, far_bump, 1.0, np.zeros((1, 3)), md.cdp, cfg)


def test_harnack_on_diagonal():
    md = models.build("heisenberg")
    cfg = DiffusionConfig(n_paths=120000, dt=1e-3, t_max=1.0, seed=16, bandwidth=1.2)
    rep = harnack_check(md, np.zeros(3), np.zeros(3), 0.5, 1.0, md.cdp, cfg)
    assert rep.factor == 16.0
    assert rep.passed
    with pytest.raises(ValueError):
        harnack_check(md, np.zeros(3), np.zeros(3), 1.0, 0.5, md.cdp, cfg)


def test_euclidean_harnack_closed_form():
    # closed-form Gaussian kernels satisfy the bound with D = d = 2
    p = lambda t: 1.0 / (4 * math.pi * t)
    for (s, t) in ((0.25, 0.5), (0.5, 1.0), (0.2, 2.0)):
        assert p(s) <= p(t) * (t / s) ** 1.0 + 1e-15


def test_ball_volume_euclidean_area(rng):
    md = models.build("euclidean2")
    bv = ball_volume(md, np.zeros(2), 1.5, 200000,
                     lambda x, p: np.linalg.norm(p - x, axis=1), rng)
    assert abs(bv.value - math.pi * 1.5 ** 2) < 5 * bv.stderr + 0.02
    assert bv.indeterminate_fraction == 0.0
    with pytest.raises(ValueError):
        ball_volume(md, np.zeros(2), -1.0, 100,
                    lambda x, p: np.linalg.norm(p - x, axis=1), rng)


def test_ball_volume_brackets_indeterminate(rng):
    md = models.build("euclidean2")

    def flaky(x, p):
        d = np.linalg.norm(p - x, axis=1)
        d[::10] = np.nan
        return d

    bv = ball_volume(md, np.zeros(2), 1.0, 50000, flaky, rng)
    assert bv.indeterminate_fraction > 0.05
    assert bv.lower <= bv.value <= bv.upper + 1e-12


def test_volume_growth_monotone_and_exponent(rng):
    md = models.build("heisenberg")
    radii = np.array([1.0, 2.0, 4.0, 8.0])
    vols = []
    for r in radii:
        bv = ball_volume(md, np.zeros(3), r, 60000,
                         lambda x, p: heisenberg_distance(p, base=x), rng)
        vols.append(bv.value)
    assert np.all(np.diff(vols) > 0)
    slope, _ = volume_growth_fit(radii, np.array(vols))
    assert abs(slope - 4.0) < 0.3


def test_lambda1_sphere_and_su2():
    md = models.build("sphere2")
    est = lambda1_estimate(md, n_grid=32)
    assert abs(est.value - 2.0) < 0.04
    su2 = models.build("su2")
    est2 = lambda1_estimate(su2, n_grid=32)
    assert abs(est2.value - 2.0) < 0.04  # golden value, >= the 1.6 bound
    assert est2.value >= 1.6
    with pytest.raises(NotCompactError):
        lambda1_estimate(models.build("euclidean2"))


def test_semigroup_spotcheck():
    md = models.build("heisenberg")
    cfg = DiffusionConfig(n_paths=80000, dt=1e-3, t_max=1.0, seed=17, bandwidth=1.2)
    rep = semigroup_check(md, np.zeros(3), np.zeros(3), 0.5, 0.5, cfg)
    assert rep.passed


def test_su2_global_kernel_bound(rng):
    md = models.build("su2")
    pairs = [(md.sample_points(1, rng)[0], md.sample_points(1, rng)[0])]
    cfg = DiffusionConfig(n_paths=30000, dt=1e-3, t_max=2.0, seed=18)
    rep = global_kernel_bound_check(md, pairs, [0.5, 1.0, 2.0], md.cdp, cfg)
    assert rep.passed
    assert (rep.values <= rep.bounds * 1.5).all()


def test_gaussian_decay_rate(rng):
    md = models.build("heisenberg")
    t = 0.5
    targets = np.array([[r, 0.0, 0.0] for r in (0.5, 1.0, 1.5, 2.0, 2.5)])
    dists = heisenberg_distance(targets)
    cfg = DiffusionConfig(n_paths=150000, dt=1e-3, t_max=t, seed=19, bandwidth=1.2)
    rep = gaussian_rate_check(md, np.zeros(3), targets, t, cfg, dists)
    assert rep.passed, (rep.slope, rep.threshold)
