"""Horizontal/vertical Bochner identity residuals and the curvature-dimension
slack.

The horizontal identity decomposes Gamma_2 into a diagonal Hessian square, an
off-diagonal Hessian square, a gamma-coupled cross term, and R(f,f):

    Gamma_2 = sum_l (f_,ll - sum_i omega^l_il X_i f)^2
            + 2 sum_{l<j} (f_,lj - sum_i (omega^j_il + omega^l_ij)/2 X_i f)^2
            - 2 sum_{ij} sum_mn gamma^mn_ij (X_j Z_mn f)(X_i f) + R(f,f).

The vertical identity is Gamma_2^Z = sum_mn Gamma(Z_mn f). Both residuals
vanish identically for structures satisfying the standing assumptions; they
are evaluated numerically at points, which is the whole verification value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import (
    ScalarField,
    Workspace,
    _lf,
    gamma2_value,
    gamma2z_value,
    word_evaluator,
)
from .curvature import r_form
from .structure import SubRiemannianStructure


@dataclass
class BochnerResidual:
    horizontal: np.ndarray
    vertical: np.ndarray
    point: np.ndarray
    field_name: str


def horizontal_bochner_residual(s: SubRiemannianStructure, f: ScalarField,
                                x: np.ndarray, ws: Workspace | None = None) -> np.ndarray:
    ws = ws or Workspace(s, x)
    ev = word_evaluator(ws, f)
    d, v = s.d, s.v
    omega, gamma = ws.omega, ws.gamma
    g = np.stack([ev.value((("X", i),)) for i in range(d)], axis=-1)  # (N, d)

    hess = np.zeros((ws.n, d, d))
    for i in range(d):
        for j in range(d):
            hess[:, i, j] = 0.5 * (ev.value((("X", i), ("X", j)))
                                   + ev.value((("X", j), ("X", i))))

    rhs = np.zeros(ws.n)
    for l in range(d):
        corr = np.einsum("ni,ni->n", g, omega[:, :, l, l])
        rhs += (hess[:, l, l] - corr) ** 2
    for l in range(d):
        for j in range(l + 1, d):
            corr = np.einsum("ni,ni->n", g, 0.5 * (omega[:, :, l, j] + omega[:, :, j, l]))
            rhs += 2.0 * (hess[:, l, j] - corr) ** 2
    if v:
        xz = np.zeros((ws.n, d, v))
        for j in range(d):
            for p in range(v):
                xz[:, j, p] = ev.value((("X", j), ("Z", p)))
        rhs -= 4.0 * np.einsum("nijp,njp,ni->n", gamma, xz, g)

    Q = r_form(s, x, route="structural", ws=ws)
    if v:
        z = np.stack([ev.value((("Z", p),)) for p in range(v)], axis=-1)
        gz = np.concatenate([g, z], axis=-1)
    else:
        gz = g
    rhs += np.einsum("na,nab,nb->n", gz, Q, gz)

    return gamma2_value(ws, ev) - rhs


def vertical_bochner_residual(s: SubRiemannianStructure, f: ScalarField,
                              x: np.ndarray, ws: Workspace | None = None) -> np.ndarray:
    """Gamma_2^Z - sum_mn Gamma(Z_mn f), with the double sum as 2x ordered."""
    ws = ws or Workspace(s, x)
    ev = word_evaluator(ws, f)
    rhs = np.zeros(ws.n)
    for p in range(s.v):
        for j in range(s.d):
            rhs += 2.0 * ev.value((("X", j), ("Z", p))) ** 2
    return gamma2z_value(ws, ev) - rhs


def bochner_residuals(s: SubRiemannianStructure, f: ScalarField,
                      x: np.ndarray) -> BochnerResidual:
    ws = Workspace(s, x)
    return BochnerResidual(
        horizontal=horizontal_bochner_residual(s, f, x, ws=ws),
        vertical=vertical_bochner_residual(s, f, x, ws=ws),
        point=ws.points,
        field_name=f.name,
    )


def cd_slack(s: SubRiemannianStructure, f: ScalarField, x: np.ndarray, nu: float,
             rho1: float, rho2: float | None, kappa: float,
             ws: Workspace | None = None) -> np.ndarray:
    """Gamma_2 + nu Gamma_2^Z - (1/d)(Lf)^2 - (rho1 - kappa/nu) Gamma
    - rho2 Gamma^Z; nonnegative (up to tolerance) under certified constants.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    ws = ws or Workspace(s, x)
    ev = word_evaluator(ws, f)
    g2 = gamma2_value(ws, ev)
    g2z = gamma2z_value(ws, ev)
    lf = _lf(ws, ev)
    gam = sum(ev.value((("X", i),)) ** 2 for i in range(s.d))
    gamz = (2.0 * sum(ev.value((("Z", p),)) ** 2 for p in range(s.v))
            if s.v else np.zeros(ws.n))
    r2 = rho2 if rho2 is not None else 0.0
    return (g2 + nu * g2z - lf ** 2 / s.d - (rho1 - kappa / nu) * gam - r2 * gamz)
