"""The canonical connection of the frame: Christoffel symbols, vertical
derivatives, torsion, and the covariant derivative of torsion.

With Gamma^k_ij = (omega^k_ij + omega^j_ki - omega^i_jk)/2 the connection is
metric (Gamma^k_ij = -Gamma^j_ik), has horizontal nabla_X Y, kills the
vertical fields (nabla Z = 0), and its torsion on horizontal fields is the
vertical field T(X_l, X_k) = -sum_mn gamma^mn_lk Z_mn. Torsion components are
stored on the ordered vertical basis, so the full double sum appears as the
factor 2 in t[l,k,p] = -2 gamma^(p)_lk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import Workspace
from .structure import SubRiemannianStructure


@dataclass
class ChristoffelData:
    point: np.ndarray
    gamma_h: np.ndarray   # (N, d, d, d): Gamma^k_ij -> [i, j, k]
    dgamma_h: np.ndarray  # (N, d, d, d, d): X_l Gamma^k_ij -> [l, i, j, k]


def _christoffel_from_omega(omega: np.ndarray) -> np.ndarray:
    """Gamma^k_ij = (omega^k_ij + omega^j_ki - omega^i_jk)/2, omega[i,j,l]."""
    return 0.5 * (omega
                  + omega.transpose(0, 2, 3, 1)   # [i,j,k] <- omega[k,i,j] = omega^j_ki
                  - omega.transpose(0, 3, 1, 2))  # [i,j,k] <- omega[j,k,i] = omega^i_jk


def christoffel(s: SubRiemannianStructure, x: np.ndarray,
                ws: Workspace | None = None) -> ChristoffelData:
    """Christoffel symbols and their first frame derivatives.

    dgamma_h differentiates the closed-form omega combination through jets
    (never finite differences on Gamma), as the curvature assembly needs
    X_l Gamma exactly.
    """
    ws = ws or Workspace(s, x, order=2)
    gamma_h = _christoffel_from_omega(ws.omega)
    dom = ws.domega  # (N, l, i, j, k)
    dgamma_h = 0.5 * (dom
                      + dom.transpose(0, 1, 3, 4, 2)
                      - dom.transpose(0, 1, 4, 2, 3))
    return ChristoffelData(point=ws.points, gamma_h=gamma_h, dgamma_h=dgamma_h)


def nabla_vertical_on_horizontal(s: SubRiemannianStructure, x: np.ndarray,
                                 ws: Workspace | None = None) -> np.ndarray:
    """Coefficients of nabla_{Z_p} X_i = -sum_l delta^l_ip X_l, as (N,v,d,d)
    indexed [p, i, l]."""
    ws = ws or Workspace(s, x, order=2)
    return -ws.delta.transpose(0, 2, 1, 3)


@dataclass
class TorsionValue:
    point: np.ndarray
    t: np.ndarray        # (N, d, d, v): T(X_l, X_k) on the ordered Z basis
    nabla_t: np.ndarray  # (N, d, d, d, v): (nabla_{X_l} T)(X_i, X_j)


def torsion(s: SubRiemannianStructure, x: np.ndarray,
            ws: Workspace | None = None) -> TorsionValue:
    """Torsion and its covariant derivative via the three-term Leibniz rule

    (nabla_l T)(X_i,X_j) = X_l(T(X_i,X_j)) - T(nabla_l X_i, X_j)
                                           - T(X_i, nabla_l X_j),
    using nabla Z = 0 so only the coefficient functions are differentiated.
    """
    ws = ws or Workspace(s, x, order=2)
    t = -2.0 * ws.gamma  # (N, i, j, p)
    gam_h = _christoffel_from_omega(ws.omega)
    dt = -2.0 * ws.dgamma  # (N, l, i, j, p) = X_l t[i,j,p]
    nabla_t = (dt
               - np.einsum("nlis,nsjp->nlijp", gam_h, t)
               - np.einsum("nljs,nisp->nlijp", gam_h, t))
    return TorsionValue(point=ws.points, t=t, nabla_t=nabla_t)
