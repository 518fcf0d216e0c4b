import numpy as np
import pytest

from srcurv import models
from srcurv.connection import christoffel, nabla_vertical_on_horizontal, torsion

from conftest import MODEL_NAMES


def test_heisenberg_christoffel_zero(rng):
    md = models.build("heisenberg")
    ch = christoffel(md.structure, md.sample_points(10, rng))
    assert np.abs(ch.gamma_h).max() == 0.0
    assert np.abs(ch.dgamma_h).max() == 0.0


def test_sphere_christoffel_matches_levi_civita(rng):
    md = models.build("sphere2")
    pts = md.sample_points(20, rng)
    th = pts[:, 0]
    ch = christoffel(md.structure, pts)
    cot = np.cos(th) / np.sin(th)
    expected = np.zeros_like(ch.gamma_h)
    expected[:, 1, 1, 0] = -cot   # nabla_{X2} X2 = -cot(theta) X1
    expected[:, 1, 0, 1] = cot    # nabla_{X2} X1 =  cot(theta) X2
    assert np.abs(ch.gamma_h - expected).max() < 1e-12
    # first derivative along X1 = d/dtheta
    assert np.abs(ch.dgamma_h[:, 0, 1, 1, 0] - 1.0 / np.sin(th) ** 2).max() < 1e-12


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_metric_compatibility_and_koszul(name, all_models, rng):
    md = all_models[name]
    s = md.structure
    pts = md.sample_points(100, rng)
    ch = christoffel(s, pts)
    # Gamma^k_ij + Gamma^j_ik = 0
    assert np.abs(ch.gamma_h + ch.gamma_h.transpose(0, 1, 3, 2)).max() < 1e-12
    # Koszul consistency: 2 Gamma^k_ij = omega^k_ij - omega^i_jk + omega^j_ki
    om = s.sf.omega.values(pts)
    koszul = om - om.transpose(0, 3, 1, 2) + om.transpose(0, 2, 3, 1)
    assert np.abs(2.0 * ch.gamma_h - koszul).max() < 1e-12


def test_nabla_vertical_coefficients(rng):
    md = models.build("su2")
    pts = md.sample_points(5, rng)
    nv = nabla_vertical_on_horizontal(md.structure, pts)
    # nabla_{Z} X1 = +2 X2 (delta^2_{1,(12)} = -2, negated)
    assert np.allclose(nv[:, 0, 0, 1], 2.0)
    assert np.allclose(nv[:, 0, 1, 0], -2.0)
    mdh = models.build("heisenberg")
    nvh = nabla_vertical_on_horizontal(mdh.structure, mdh.sample_points(5, rng))
    assert np.abs(nvh).max() == 0.0


def test_torsion_heisenberg(rng):
    md = models.build("heisenberg")
    tor = torsion(md.structure, md.sample_points(5, rng))
    # T(X1, X2) = -Z12
    assert np.allclose(tor.t[:, 0, 1, 0], -1.0)
    assert np.allclose(tor.t[:, 1, 0, 0], 1.0)
    assert np.abs(tor.nabla_t).max() == 0.0


def test_torsion_riemannian_vanishes(rng):
    md = models.build("sphere2")
    tor = torsion(md.structure, md.sample_points(5, rng))
    assert tor.t.shape[-1] == 0


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_torsion_antisymmetry(name, all_models, rng):
    md = all_models[name]
    if md.structure.v == 0:
        pytest.skip("no torsion components")
    tor = torsion(md.structure, md.sample_points(20, rng))
    assert np.abs(tor.t + tor.t.transpose(0, 2, 1, 3)).max() < 1e-12
    assert np.abs(tor.nabla_t + tor.nabla_t.transpose(0, 1, 3, 2, 4)).max() < 1e-12


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_torsion_verticality_from_raw_brackets(name, all_models, rng):
    """Horizontal part of nabla_X Y - nabla_Y X - [X,Y] vanishes: the raw
    bracket's horizontal component must match the Christoffel antisymmetry."""
    from srcurv.structure import frame_brackets

    md = all_models[name]
    s = md.structure
    pts = md.sample_points(20, rng)
    br = frame_brackets(s, pts)
    ch = christoffel(s, pts)
    fh, fv = br["frame_h"], br["frame_v"]
    for a in range(len(pts)):
        basis = np.concatenate([fh[a], fv[a]], axis=0).T
        for i in range(s.d):
            for j in range(s.d):
                comps = np.linalg.solve(basis, br["xx"][a, i, j])
                nabla_part = ch.gamma_h[a, i, j, :] - ch.gamma_h[a, j, i, :]
                assert np.abs(nabla_part - comps[:s.d]).max() < 1e-9
