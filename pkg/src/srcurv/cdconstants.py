"""Curvature-dimension parameters, their certification, and derived constants.

The hypotheses being certified are the pointwise form inequalities

    R(f,f) >= rho1 Gamma(f,f) + rho2 Gamma^Z(f,f),
    T(f,f) <= kappa Gamma(f,f),

which, because R and T depend on f only through the gradient data
(X_k f, Z_p f), reduce at each point to symmetric eigenvalue problems on the
(d+v)-dimensional quadratic forms produced by the curvature module. Global
constants are infima over sampled points and are reported as such.

Downstream constants (Li-Yau coefficients, effective dimension D, Harnack
factors, diameter / eigenvalue / isoperimetric bounds) are pure arithmetic in
(rho1, rho2, kappa, d). Constants whose formulas divide by rho1 return None
("not applicable") when rho1 <= 0 rather than infinities; the diameter bound
alone reports +inf, matching its geometric meaning.

The Riemannian degenerate mode (vertical_rank = 0) admits kappa = 0 and a
missing rho2; every kappa/rho2 ratio is then 0 and the first-eigenvalue bound
uses the limit rho1 * d / (d - 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad


@dataclass(frozen=True)
class CDParameters:
    rho1: float
    rho2: Optional[float]  # None in the Riemannian degenerate mode
    kappa: float
    d: int
    vertical_rank: int

    def __post_init__(self):
        if self.vertical_rank > 0:
            if self.rho2 is None or self.rho2 <= 0:
                raise ValueError("rho2 must be positive when there is a vertical space")
            if self.kappa <= 0:
                raise ValueError("kappa must be positive when there is a vertical space")
        else:
            if self.kappa != 0:
                raise ValueError("Riemannian degenerate mode requires kappa = 0")

    @property
    def kappa_over_rho2(self) -> float:
        if self.vertical_rank == 0:
            return 0.0
        return self.kappa / self.rho2


def dimension_constant(p: CDParameters) -> float:
    """D = d (1 + 3 kappa / (2 rho2))."""
    return p.d * (1.0 + 1.5 * p.kappa_over_rho2)


def coupling_rate(p: CDParameters) -> float:
    """alpha = 2 rho1 rho2 / (3 (rho2 + kappa)); equals 2 rho1/3 when kappa=0."""
    if p.vertical_rank == 0:
        return 2.0 * p.rho1 / 3.0
    return 2.0 * p.rho1 * p.rho2 / (3.0 * (p.rho2 + p.kappa))


@dataclass(frozen=True)
class LiYauCoefficients:
    """Coefficients of the gradient estimate

    Gamma(ln P_t f) + lhs_z * t * Gamma^Z(ln P_t f)
        <= (ratio_const + ratio_t * t) * L P_t f / P_t f
           + const_t * t + const_0 + inv_t / t
    """

    lhs_z: float
    ratio_const: float
    ratio_t: float
    const_t: float
    const_0: float
    inv_t: float

    def rhs(self, ratio: np.ndarray, t: float) -> np.ndarray:
        return ((self.ratio_const + self.ratio_t * t) * ratio
                + self.const_t * t + self.const_0 + self.inv_t / t)


@dataclass(frozen=True)
class DerivedConstants:
    D: float
    alpha: Optional[float]
    liyau: LiYauCoefficients
    harnack_exponent: float       # D/2
    harnack_gauss: float          # D/d
    kernel_global_bound: Optional[Callable[[float], float]]
    diameter_bound: float         # +inf when rho1 <= 0
    hausdorff_bound: float
    lambda1_bound: float
    isoperimetric_const: Optional[float]
    poincare_const: Optional[float]
    not_applicable: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "D": self.D,
            "alpha": self.alpha,
            "liyau": {
                "lhs_z": self.liyau.lhs_z,
                "ratio_const": self.liyau.ratio_const,
                "ratio_t": self.liyau.ratio_t,
                "const_t": self.liyau.const_t,
                "const_0": self.liyau.const_0,
                "inv_t": self.liyau.inv_t,
            },
            "harnack_exponent": self.harnack_exponent,
            "harnack_gauss": self.harnack_gauss,
            "diameter_bound": self.diameter_bound,
            "hausdorff_bound": self.hausdorff_bound,
            "lambda1_bound": self.lambda1_bound,
            "isoperimetric_const": self.isoperimetric_const,
            "poincare_const": self.poincare_const,
            "not_applicable": list(self.not_applicable),
        }


def derive_constants(p: CDParameters) -> DerivedConstants:
    d = float(p.d)
    kr = p.kappa_over_rho2
    D = dimension_constant(p)
    base = 1.0 + 1.5 * kr  # D/d
    liyau = LiYauCoefficients(
        lhs_z=(2.0 * p.rho2 / 3.0) if p.vertical_rank else 0.0,
        ratio_const=base,
        ratio_t=-2.0 * p.rho1 / 3.0,
        const_t=d * p.rho1 ** 2 / 6.0,
        const_0=-p.rho1 * d / 2.0 * base,
        inv_t=d * base ** 2 / 2.0,
    )
    na: list[str] = []
    if p.rho1 > 0:
        alpha = coupling_rate(p)
        ratio = (p.kappa + p.rho2) / (p.rho1 * p.rho2) if p.vertical_rank else 1.0 / p.rho1
        diameter = 2.0 * math.sqrt(3.0) * math.pi * math.sqrt(ratio * base * d)
        iso = 1.5 * D * math.sqrt(ratio / d)
        poincare = 6.0 * D * math.sqrt(ratio / d)

        def kernel_bound(t: float, _a=alpha, _D=D) -> float:
            return (1.0 - math.exp(-_a * t)) ** (-_D / 2.0)

    else:
        alpha = None
        diameter = math.inf
        iso = poincare = None
        kernel_bound = None
        na += ["alpha", "kernel_global_bound", "isoperimetric_const", "poincare_const"]

    if p.vertical_rank == 0:
        lambda1 = p.rho1 * d / (d - 1.0) if d > 1 else math.inf
    else:
        lambda1 = p.rho1 * p.rho2 / (((d - 1.0) / d) * p.rho2 + p.kappa)

    return DerivedConstants(
        D=D,
        alpha=alpha,
        liyau=liyau,
        harnack_exponent=D / 2.0,
        harnack_gauss=base,
        kernel_global_bound=kernel_bound,
        diameter_bound=diameter,
        hausdorff_bound=D,
        lambda1_bound=lambda1,
        isoperimetric_const=iso,
        poincare_const=poincare,
        not_applicable=tuple(na),
    )


def entropy_diameter_quadrature(p: CDParameters) -> tuple[float, float, float]:
    """Diameter bound two ways: adaptive quadrature of -2 int sqrt(x) Phi''(x) dx
    with Phi''(x) = -2D/(x (2x + alpha D)), against the closed form.

    Returns (numeric, closed_form, relative_difference).
    """
    if p.rho1 <= 0:
        raise ValueError("entropy diameter requires rho1 > 0")
    D = dimension_constant(p)
    alpha = coupling_rate(p)
    return _entropy_quadrature(D, alpha)


def _entropy_quadrature(D: float, alpha: float) -> tuple[float, float, float]:
    def integrand(x: float) -> float:
        return 4.0 * D / (math.sqrt(x) * (2.0 * x + alpha * D))

    num1, _ = quad(integrand, 0.0, alpha * D, limit=200)
    num2, _ = quad(integrand, alpha * D, math.inf, limit=200)
    numeric = num1 + num2
    closed = 2.0 * math.sqrt(2.0) * math.pi * math.sqrt(D / alpha)
    rel = abs(numeric - closed) / closed
    return numeric, closed, rel


# -- certification against the pointwise quadratic forms ---------------------


@dataclass
class CertificateReport:
    points: np.ndarray
    r_margins: np.ndarray   # (N,) min eig of [R-form - rho1 P_H - rho2 P_V]
    t_margins: np.ndarray   # (N,) max eig of [t_form - kappa I]
    tol: float
    passed: bool

    def summary(self) -> str:
        return (
            f"points: {len(self.points)}  "
            f"min R margin: {self.r_margins.min():.3e}  "
            f"max T margin: {self.t_margins.max():.3e}  "
            f"passed: {self.passed}"
        )


def certify_bounds(s, pts: np.ndarray, rho1: float, rho2: Optional[float],
                   kappa: float, tol: float) -> CertificateReport:
    """Check R >= rho1 Gamma + rho2 Gamma^Z and T <= kappa Gamma pointwise.

    P_H and P_V are the projections onto the horizontal/vertical gradient
    blocks in the Gamma / Gamma^Z normalizations (the vertical block of P_V
    is 2 I over ordered pairs). Failure is a verdict, never an exception.
    """
    from .curvature import curvature_report

    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("certify_bounds needs a nonempty point set")
    rep = curvature_report(s, pts)
    d, v = s.d, s.v
    dim = d + v
    pen = np.zeros((dim, dim))
    pen[:d, :d] = rho1 * np.eye(d)
    if v:
        if rho2 is None:
            raise ValueError("rho2 required when the structure has a vertical space")
        pen[d:, d:] = 2.0 * rho2 * np.eye(v)
    shifted = rep.r_structural - pen[None, :, :]
    r_margins = np.linalg.eigvalsh(shifted)[:, 0]
    t_shift = rep.t_form - kappa * np.eye(d)[None, :, :]
    t_margins = np.linalg.eigvalsh(t_shift)[:, -1]
    passed = bool(r_margins.min() >= -tol and t_margins.max() <= tol)
    return CertificateReport(points=pts, r_margins=r_margins, t_margins=t_margins,
                             tol=tol, passed=passed)


def certify_parameters(s, pts: np.ndarray, p: CDParameters, tol: float) -> CertificateReport:
    return certify_bounds(s, pts, p.rho1, p.rho2, p.kappa, tol)


def pareto_scan(s, pts: np.ndarray, rho2_grid: np.ndarray) -> list[tuple[float, float]]:
    """Best rho1 per rho2: Schur-reduce the horizontal block of
    [R-form - rho2 P_V] at each point and take the smallest eigenvalue,
    minimized over points. Reports -inf when the vertical block itself fails
    (no rho1 can repair it, since P_H has no vertical component).
    """
    from .curvature import curvature_report

    rho2_grid = np.atleast_1d(np.asarray(rho2_grid, dtype=float))
    if rho2_grid.size == 0:
        raise ValueError("pareto_scan needs a nonempty rho2 grid")
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    rep = curvature_report(s, pts)
    d, v = s.d, s.v
    out = []
    for rho2 in rho2_grid:
        best = math.inf
        for a in range(pts.shape[0]):
            Q = rep.r_structural[a]
            A = Q[:d, :d]
            if v == 0:
                best = min(best, float(np.linalg.eigvalsh(A)[0]))
                continue
            B = Q[:d, d:]
            C = Q[d:, d:] - 2.0 * rho2 * np.eye(v)
            ceig = np.linalg.eigvalsh(C)
            if ceig[0] < -1e-12:
                best = -math.inf
                break
            # pseudo-inverse Schur complement; require B in range(C)
            Cpinv = np.linalg.pinv(C, rcond=1e-10)
            if np.abs(B - B @ Cpinv @ C).max() > 1e-9:
                best = -math.inf
                break
            S = A - B @ Cpinv @ B.T
            best = min(best, float(np.linalg.eigvalsh(S)[0]))
        out.append((float(rho2), best))
    return out
