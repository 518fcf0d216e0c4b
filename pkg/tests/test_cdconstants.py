import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srcurv import models
from srcurv.cdconstants import (
    CDParameters,
    _entropy_quadrature,
    certify_bounds,
    derive_constants,
    entropy_diameter_quadrature,
    pareto_scan,
)


def test_certify_equality_cases(rng):
    cases = [("heisenberg", 0.0, 0.25, 0.5),
             ("free_step2_d3", 0.0, 0.25, 1.0),
             ("sphere2", 1.0, None, 0.0),
             ("su2", 4.0, 1.0, 2.0)]
    for name, r1, r2, ka in cases:
        md = models.build(name)
        pts = md.sample_points(100, rng)
        cert = certify_bounds(md.structure, pts, r1, r2, ka, 1e-9)
        assert cert.passed, (name, cert.summary())
        # equality directions: zero margin
        assert cert.r_margins.min() > -1e-9
        if md.structure.v:
            assert abs(cert.r_margins.min()) < 1e-9
            assert abs(cert.t_margins.max()) < 1e-9


def test_certify_rejects_overstated_rho1(rng):
    md = models.build("heisenberg")
    cert = certify_bounds(md.structure, md.sample_points(20, rng), 0.1, 0.25, 0.5, 1e-9)
    assert not cert.passed
    assert cert.r_margins.min() <= -0.1 + 1e-9


def test_pareto_scan_examples(rng):
    md = models.build("heisenberg")
    pts = md.sample_points(20, rng)
    out = dict(pareto_scan(md.structure, pts, np.array([0.1, 0.25, 0.3])))
    assert abs(out[0.1]) < 1e-12
    assert abs(out[0.25]) < 1e-12
    assert out[0.3] < 0  # vertical block fails: no rho1 can repair it

    sph = models.build("sphere2")
    out = dict(pareto_scan(sph.structure, sph.sample_points(20, rng),
                           np.array([0.1, 1.0, 5.0])))
    for v in out.values():
        assert abs(v - 1.0) < 1e-9

    su2 = models.build("su2")
    out = dict(pareto_scan(su2.structure, su2.sample_points(20, rng), np.array([1.0])))
    assert abs(out[1.0] - 4.0) < 1e-9

    with pytest.raises(ValueError):
        pareto_scan(md.structure, pts, np.array([]))


def test_derive_constants_heisenberg():
    dc = derive_constants(CDParameters(0.0, 0.25, 0.5, 2, 1))
    assert dc.D == 8.0
    assert dc.liyau.ratio_const == 4.0       # coefficient on LP_t f / P_t f
    assert dc.liyau.inv_t == 16.0            # 16/t constant term
    assert dc.liyau.ratio_t == 0.0 and dc.liyau.const_t == 0.0 and dc.liyau.const_0 == 0.0
    assert dc.diameter_bound == math.inf
    assert dc.harnack_exponent == 4.0
    assert dc.kernel_global_bound is None
    assert "isoperimetric_const" in dc.not_applicable
    assert dc.lambda1_bound == 0.0


def test_derive_constants_su2():
    dc = derive_constants(CDParameters(4.0, 1.0, 2.0, 2, 1))
    assert dc.D == 8.0
    assert abs(dc.diameter_bound - 2 * math.sqrt(3) * math.pi * math.sqrt(6)) < 1e-12
    assert abs(dc.diameter_bound - 26.657297628950197) < 1e-9
    assert abs(dc.lambda1_bound - 1.6) < 1e-15
    assert abs(dc.alpha - 8.0 / 9.0) < 1e-15
    assert dc.kernel_global_bound(1.0) == (1 - math.exp(-8.0 / 9.0)) ** -4.0
    assert abs(dc.isoperimetric_const - 1.5 * 8.0 * math.sqrt(3.0 / 8.0)) < 1e-12
    assert abs(dc.poincare_const - 6.0 * 8.0 * math.sqrt(3.0 / 8.0)) < 1e-12
    assert dc.hausdorff_bound == 8.0


def test_derive_constants_riemannian_limits():
    dc = derive_constants(CDParameters(1.0, None, 0.0, 2, 0))
    assert dc.D == 2.0
    assert abs(dc.lambda1_bound - 2.0) < 1e-15  # Lichnerowicz on the sphere
    assert abs(dc.alpha - 2.0 / 3.0) < 1e-15
    assert abs(dc.diameter_bound - 2 * math.sqrt(3) * math.pi * math.sqrt(2)) < 1e-12


def test_derive_constants_is_pure():
    p = CDParameters(4.0, 1.0, 2.0, 2, 1)
    a, b = derive_constants(p), derive_constants(p)
    assert a.as_dict() == b.as_dict()


def test_entropy_quadrature_su2_and_special_values():
    numeric, closed, rel = entropy_diameter_quadrature(CDParameters(4.0, 1.0, 2.0, 2, 1))
    assert abs(closed - 26.657297628950197) < 1e-9
    assert rel <= 1e-6
    numeric, closed, rel = _entropy_quadrature(1.0, 1.0)
    assert abs(closed - 2 * math.sqrt(2) * math.pi) < 1e-12
    assert rel <= 1e-6
    with pytest.raises(ValueError):
        entropy_diameter_quadrature(CDParameters(0.0, 0.25, 0.5, 2, 1))


def test_entropy_quadrature_alpha_scaling():
    base, _, _ = _entropy_quadrature(3.0, 1.0)
    big, _, _ = _entropy_quadrature(3.0, 100.0)
    assert abs(big - base / 10.0) < 1e-6 * base


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 20.0), st.floats(0.5, 20.0))
def test_entropy_quadrature_matches_closed_form(D, alpha):
    numeric, closed, rel = _entropy_quadrature(D, alpha)
    assert rel <= 1e-6


def test_cd_parameters_validation():
    with pytest.raises(ValueError):
        CDParameters(0.0, -1.0, 0.5, 2, 1)
    with pytest.raises(ValueError):
        CDParameters(0.0, 0.25, 0.0, 2, 1)
    with pytest.raises(ValueError):
        CDParameters(1.0, None, 0.5, 2, 0)  # Riemannian mode needs kappa = 0
    CDParameters(1.0, None, 0.0, 2, 0)


def test_harnack_factor_single_source(rng):
    """The Harnack factor used by the heat checker comes from the same
    DerivedConstants record."""
    dc = derive_constants(CDParameters(0.0, 0.25, 0.5, 2, 1))
    t, s = 1.0, 0.5
    factor = (t / s) ** dc.harnack_exponent
    assert factor == 16.0
    assert dc.harnack_gauss == 4.0  # D/d
