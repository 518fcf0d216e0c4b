"""Ricci tensor, the generalized curvature form R, the coupling form T, and
the skew operators J_p.

R(f,f) depends on f only through the gradient data g_k = X_k f and
z_p = Z_p f (ordered pairs), so it is represented as a symmetric
(d+v) x (d+v) quadratic form Q with

    R(f,f) = g' Q_H g + 2 g' Q_HV z + z' Q_V z.

The vertical double-count convention lives here and only here: Q is scaled so
that z' Q_V z with a single stored copy of each Z_p f reproduces the full
double sums (all structural vertical sums carry an explicit factor 2; the
cross block needs none because the two copies of each unordered pair
contribute equally).

Two independent routes are provided: "structural" assembles Q directly from
omega/gamma/delta and their frame derivatives; "tensorial" assembles it from
the canonical connection's Ricci tensor, torsion, and covariant derivative of
torsion. Their agreement is the strongest correctness check in the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import ScalarField, Workspace, word_evaluator
from .connection import _christoffel_from_omega, christoffel, torsion
from .structure import SubRiemannianStructure


def ricci(s: SubRiemannianStructure, x: np.ndarray, route: str = "formula",
          ws: Workspace | None = None) -> np.ndarray:
    """Ricci tensor Ric(X_k, X_l) of the canonical connection, (N, d, d).

    route "definition": contract the assembled curvature tensor
    R(X_i, X_k) X_l = nabla_i nabla_k X_l - nabla_k nabla_i X_l
    - nabla_[X_i,X_k] X_l. route "formula": the expanded coefficient identity
    in omega/gamma/delta and Christoffel symbols.
    """
    ws = ws or Workspace(s, x, order=2)
    ch = christoffel(s, x, ws=ws)
    gh, dgh = ch.gamma_h, ch.dgamma_h
    omega, gamma, delta = ws.omega, ws.gamma, ws.delta
    if route == "definition":
        # R[n,i,k,l,s]: coefficient of X_s in R(X_i,X_k)X_l
        # nabla_i (nabla_k X_l) = (X_i Gamma^s_kl) X_s + Gamma^t_kl Gamma^s_it X_s
        R = dgh.copy()  # dgh[n,i,k,l,s] = X_i Gamma^s_kl
        R += np.einsum("nklt,nits->nikls", gh, gh)
        # - nabla_k (nabla_i X_l)
        R -= dgh.transpose(0, 2, 1, 3, 4)
        R -= np.einsum("nilt,nkts->nikls", gh, gh)
        # - nabla_{[X_i,X_k]} X_l, horizontal bracket part omega^j_ik nabla_j X_l
        R -= np.einsum("nikj,njls->nikls", omega, gh)
        # vertical bracket part: 2 gamma^(p)_ik nabla_{Z_p} X_l, nabla_{Z_p} X_l = -delta^s_lp X_s
        if s.v:
            R += 2.0 * np.einsum("nikp,nlps->nikls", gamma, delta)
        return np.einsum("nikli->nkl", R)
    if route != "formula":
        raise ValueError(f"unknown ricci route {route!r}")
    out = np.zeros((ws.n, s.d, s.d))
    if s.v:
        out += 2.0 * np.einsum("nkjp,njpl->nkl", gamma, delta)
    out += np.einsum("njklj->nkl", dgh)            # X_j Gamma^j_kl
    out -= np.einsum("nkjlj->nkl", dgh)            # X_k Gamma^j_jl
    out += np.einsum("nklj,niji->nkl", gh, gh)     # Gamma^j_kl Gamma^i_ij
    out -= np.einsum("nilj,nkji->nkl", gh, gh)     # Gamma^j_il Gamma^i_kj
    out -= np.einsum("nikj,njli->nkl", omega, gh)  # omega^j_ik Gamma^i_jl
    return out


def _structural_blocks(ws: Workspace):
    """Blocks of Q from the first-order structural expansion."""
    s = ws.s
    n, d, v = ws.n, s.d, s.v
    omega, gamma = ws.omega, ws.gamma
    domega = ws.domega  # (N, l, i, j, k) = X_l omega^k_ij
    # horizontal coefficient c[n,k,l] of X_k f X_l f (pre-symmetrization)
    c = np.zeros((n, d, d))
    if v:
        c += 2.0 * np.einsum("nkjp,njpl->nkl", gamma, ws.delta)
    c += np.einsum("nlkjj->nkl", domega)   # X_l omega^j_kj
    c -= np.einsum("njljk->nkl", domega)   # X_j omega^k_lj
    c += np.einsum("njii,nkjl->nkl", omega, omega)   # omega^i_ji omega^l_kj
    c -= np.einsum("nkii,nlii->nkl", omega, omega)   # omega^i_ki omega^i_li
    for i in range(d):
        for j in range(i + 1, d):
            w = omega[:, i, j, :]  # omega^._ij over the upper index
            c += 0.5 * np.einsum("nk,nl->nkl", w, w)
            # omega^i_lj + omega^j_li over the free lower index
            fl = omega[:, :, j, i] + omega[:, :, i, j]
            c -= 0.5 * np.einsum("nk,nl->nkl", fl, fl)
    QH = 0.5 * (c + c.transpose(0, 2, 1))
    if v:
        # cross coefficient b[n,k,p] multiplying Z_p f X_k f once on each side
        b = np.einsum("njll,nkjp->nkp", omega, gamma)
        b += 0.5 * np.einsum("nljk,nljp->nkp", omega, gamma)
        b -= np.einsum("njkjp->nkp", ws.dgamma)
        QV = np.einsum("nijp,nijq->npq", gamma, gamma)
    else:
        b = np.zeros((n, d, 0))
        QV = np.zeros((n, 0, 0))
    return QH, b, QV


def _tensorial_blocks(ws: Workspace):
    s = ws.s
    ric = ricci(s, ws.points, route="definition", ws=ws)
    QH = 0.5 * (ric + ric.transpose(0, 2, 1))
    tor = torsion(s, ws.points, ws=ws)
    if s.v:
        b = -0.5 * np.einsum("nllkp->nkp", tor.nabla_t)
        QV = 0.25 * np.einsum("nlkp,nlkq->npq", tor.t, tor.t)
    else:
        b = np.zeros((ws.n, s.d, 0))
        QV = np.zeros((ws.n, 0, 0))
    return QH, b, QV


def _assemble(QH, b, QV) -> np.ndarray:
    n, d = QH.shape[0], QH.shape[1]
    v = QV.shape[1]
    Q = np.zeros((n, d + v, d + v))
    Q[:, :d, :d] = QH
    if v:
        Q[:, :d, d:] = b
        Q[:, d:, :d] = b.transpose(0, 2, 1)
        Q[:, d:, d:] = 0.5 * (QV + QV.transpose(0, 2, 1))
    return Q


def r_form(s: SubRiemannianStructure, x: np.ndarray, route: str = "structural",
           ws: Workspace | None = None) -> np.ndarray:
    """The quadratic form Q of R(f,f) over (g, z), shape (N, d+v, d+v)."""
    ws = ws or Workspace(s, x, order=2)
    if route == "structural":
        return _assemble(*_structural_blocks(ws))
    if route == "tensorial":
        return _assemble(*_tensorial_blocks(ws))
    raise ValueError(f"unknown r_form route {route!r}")


def r_scalar(s: SubRiemannianStructure, f: ScalarField, x: np.ndarray,
             route: str = "structural", ws: Workspace | None = None) -> np.ndarray:
    """R(f,f) evaluated on the gradient data of a concrete field."""
    ws = ws or Workspace(s, x)
    Q = r_form(s, x, route=route, ws=ws)
    ev = word_evaluator(ws, f)
    g = np.stack([ev.value((("X", i),)) for i in range(s.d)], axis=-1)
    if s.v:
        z = np.stack([ev.value((("Z", p),)) for p in range(s.v)], axis=-1)
        gz = np.concatenate([g, z], axis=-1)
    else:
        gz = g
    return np.einsum("na,nab,nb->n", gz, Q, gz)


def t_form(s: SubRiemannianStructure, x: np.ndarray,
           ws: Workspace | None = None) -> np.ndarray:
    """T as a d x d PSD form on the horizontal gradient: 2 sum_p J_p' J_p."""
    ws = ws or Workspace(s, x, order=1)
    if s.v == 0:
        return np.zeros((ws.n, s.d, s.d))
    return 2.0 * np.einsum("nijp,nikp->njk", ws.gamma, ws.gamma)


def j_ops(s: SubRiemannianStructure, x: np.ndarray,
          ws: Workspace | None = None) -> np.ndarray:
    """The skew operators (J_p)_{ik} = gamma^(p)_{ik}, shape (N, v, d, d)."""
    ws = ws or Workspace(s, x, order=1)
    return ws.gamma.transpose(0, 3, 1, 2).copy()


@dataclass
class CurvatureReport:
    point: np.ndarray
    ricci: np.ndarray          # (N, d, d)
    r_structural: np.ndarray   # (N, d+v, d+v)
    r_tensorial: np.ndarray    # (N, d+v, d+v)
    t_form: np.ndarray         # (N, d, d)
    j_ops: np.ndarray          # (N, v, d, d)

    @property
    def tensoriality_gap(self) -> float:
        return float(np.abs(self.r_structural - self.r_tensorial).max())


def curvature_report(s: SubRiemannianStructure, x: np.ndarray) -> CurvatureReport:
    ws = Workspace(s, x, order=2)
    return CurvatureReport(
        point=ws.points,
        ricci=ricci(s, x, route="formula", ws=ws),
        r_structural=r_form(s, x, route="structural", ws=ws),
        r_tensorial=r_form(s, x, route="tensorial", ws=ws),
        t_form=t_form(s, x, ws=ws),
        j_ops=j_ops(s, x, ws=ws),
    )
