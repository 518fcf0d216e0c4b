"""Rank-two sub-Riemannian structures: frame, structure functions, validation.

A structure is a global chart carrying d horizontal fields X_i, v = h(h-1)/2
vertical fields Z_mn (one stored copy per ordered pair m < n, with
Z_nm = -Z_mn by convention), the coefficient functions of the commutation
relations

    [X_i, X_j]  = sum_l omega^l_ij X_l + sum_mn gamma^mn_ij Z_mn
    [X_i, Z_mn] = sum_l delta^l_imn X_l

and a measure density. Sums over unordered vertical pairs are implemented as
twice the ordered-pair sum throughout the package; all tensors store the
single ordered copy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .jets import Jet, coordinate_jets, jet_table


class StructureError(ValueError):
    """Malformed structure data (dimension or shape mismatch)."""


class HormanderError(RuntimeError):
    """The step-two bracket-generating condition failed at a point."""

    def __init__(self, point: np.ndarray, rank: int, needed: int):
        self.point = np.asarray(point)
        super().__init__(
            f"Hormander rank check failed at {self.point.tolist()}: "
            f"span has rank {rank}, chart dimension is {needed}"
        )


def vertical_pairs(h: int) -> list[tuple[int, int]]:
    """Ordered pairs (m, n), 1-based, m < n, in lexicographic order."""
    return [(m, n) for m in range(1, h + 1) for n in range(m + 1, h + 1)]


def vertical_flatten(h: int, m: int, n: int) -> tuple[int, int]:
    """Flat index of the pair (m, n) and the sign encoding Z_nm = -Z_mn."""
    if not (1 <= m <= h and 1 <= n <= h):
        raise StructureError(f"vertical labels ({m},{n}) out of range 1..{h}")
    if m == n:
        raise StructureError(f"vertical pair requires m != n, got ({m},{n})")
    sign = 1 if m < n else -1
    a, b = min(m, n), max(m, n)
    p = vertical_pairs(h).index((a, b))
    return p, sign


def vertical_unflatten(h: int, p: int) -> tuple[int, int]:
    return vertical_pairs(h)[p]


ChartFunction = Callable[[Sequence], object]
"""Callable on a list of per-coordinate arrays (numeric) or jets."""


class CoeffTensor:
    """A tensor-shaped family of chart functions, with a constant fast path."""

    def __init__(self, shape: tuple[int, ...], nvars: int, const: np.ndarray | None = None,
                 fns: np.ndarray | None = None):
        self.shape = tuple(shape)
        self.nvars = nvars
        if const is not None:
            const = np.asarray(const, dtype=float)
            if const.shape != self.shape:
                raise StructureError(f"constant tensor shape {const.shape} != {self.shape}")
        self.const = const
        self.fns = fns  # object ndarray of ChartFunction, or None

    @staticmethod
    def constant(values: np.ndarray, nvars: int) -> "CoeffTensor":
        values = np.asarray(values, dtype=float)
        return CoeffTensor(values.shape, nvars, const=values)

    @staticmethod
    def from_functions(fns, nvars: int) -> "CoeffTensor":
        arr = np.empty(np.shape(fns), dtype=object) if not isinstance(fns, np.ndarray) else fns
        if not isinstance(fns, np.ndarray):
            arr[...] = fns
        return CoeffTensor(arr.shape, nvars, fns=arr)

    @property
    def is_constant(self) -> bool:
        return self.const is not None

    def values(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = points.shape[0]
        if self.const is not None:
            return np.broadcast_to(self.const, (n,) + self.shape).copy()
        coords = [points[:, c] for c in range(self.nvars)]
        out = np.empty((n,) + self.shape)
        for idx in np.ndindex(self.shape):
            out[(slice(None),) + idx] = np.broadcast_to(self.fns[idx](coords), (n,))
        return out

    def jets(self, cjets: Sequence[Jet]) -> Jet:
        table = cjets[0].table
        batch = cjets[0].batch_shape
        if self.const is not None:
            return Jet.constant(table, np.broadcast_to(self.const, batch + self.shape))
        coeffs = np.zeros(batch + self.shape + (table.size,))
        exact = table.order
        for idx in np.ndindex(self.shape):
            j = self.fns[idx](cjets)
            if isinstance(j, Jet):
                coeffs[(Ellipsis,) + idx + (slice(None),)] = j.coeffs
                exact = min(exact, j.exact_to)
            else:  # constant-valued chart function
                coeffs[(Ellipsis,) + idx + (0,)] = j
        return Jet(table, coeffs, exact)


@dataclass(frozen=True)
class StructureFunctions:
    """omega[i,j,l] = omega^l_ij, gamma[i,j,p] = gamma^{(p)}_ij over ordered
    pairs p, delta[i,p,l] = delta^l_{i,(p)}. All indices 0-based."""

    omega: CoeffTensor  # (d, d, d)
    gamma: CoeffTensor  # (d, d, v)
    delta: CoeffTensor  # (d, v, d)


@dataclass(frozen=True)
class SubRiemannianStructure:
    name: str
    d: int
    h: int
    frame: CoeffTensor           # (d, chart_dim) horizontal coefficient functions
    vertical_frame: CoeffTensor  # (v, chart_dim)
    sf: StructureFunctions
    measure_density: ChartFunction
    chart_dim: int = field(default=0)

    def __post_init__(self):
        v = self.h * (self.h - 1) // 2
        cd = self.d + v
        object.__setattr__(self, "chart_dim", cd)
        if self.frame.shape != (self.d, cd):
            raise StructureError(
                f"horizontal frame shape {self.frame.shape} != {(self.d, cd)}"
            )
        if self.vertical_frame.shape != (v, cd):
            raise StructureError(
                f"vertical frame shape {self.vertical_frame.shape} != {(v, cd)}"
            )
        if self.sf.omega.shape != (self.d, self.d, self.d):
            raise StructureError("omega tensor shape mismatch")
        if self.sf.gamma.shape != (self.d, self.d, v):
            raise StructureError("gamma tensor shape mismatch")
        if self.sf.delta.shape != (self.d, v, self.d):
            raise StructureError("delta tensor shape mismatch")

    @property
    def v(self) -> int:
        return self.h * (self.h - 1) // 2

    def pairs(self) -> list[tuple[int, int]]:
        return vertical_pairs(self.h)

    def coord_jets(self, points: np.ndarray, order: int = 4) -> list[Jet]:
        return coordinate_jets(points, jet_table(self.chart_dim, order))

    def frame_values(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(horizontal (N,d,cd), vertical (N,v,cd)) coefficient values."""
        return self.frame.values(points), self.vertical_frame.values(points)

    def measure_values(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        coords = [points[:, c] for c in range(self.chart_dim)]
        return np.broadcast_to(np.asarray(self.measure_density(coords), dtype=float),
                               (points.shape[0],)).copy()


def vertical_flatten_structure(s: SubRiemannianStructure, m: int, n: int) -> tuple[int, int]:
    return vertical_flatten(s.h, m, n)


def _coefficient_jet_partials(jet: Jet, chart_dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Values and first chart-partials of a coefficient jet.

    Returns (vals batch+shape, parts batch+shape+(chart_dim,)); parts[..., b]
    is d/dx_b, read off the degree-one jet coefficients.
    """
    table = jet.table
    vals = jet.coeffs[..., 0]
    idxs = []
    for b in range(chart_dim):
        unit = tuple(1 if c == b else 0 for c in range(chart_dim))
        idxs.append(table.index[unit])
    parts = jet.coeffs[..., idxs]
    return vals, parts


def frame_brackets(s: SubRiemannianStructure, points: np.ndarray,
                   order: int = 2) -> dict[str, np.ndarray]:
    """Raw Lie brackets of the frame from coefficient derivatives.

    Returns chart components of [X_i, X_j] as (N, d, d, cd) and of
    [X_i, Z_p] as (N, d, v, cd).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    cd = s.chart_dim
    cjets = s.coord_jets(points, order=order)
    fh, fh_d = _coefficient_jet_partials(s.frame.jets(cjets), cd)
    fv, fv_d = _coefficient_jet_partials(s.vertical_frame.jets(cjets), cd)
    # [A,B]_a = sum_b A_b dB_a/dx_b - B_b dA_a/dx_b
    xx = np.einsum("nib,njab->nija", fh, fh_d) - np.einsum("njb,niab->nija", fh, fh_d)
    xz = np.einsum("nib,npab->nipa", fh, fv_d) - np.einsum("npb,niab->nipa", fv, fh_d)
    return {"xx": xx, "xz": xz, "frame_h": fh, "frame_v": fv}


@dataclass
class ValidationReport:
    points: np.ndarray
    bracket_xx_residual: np.ndarray   # (N,) max over (i,j) and components
    bracket_xz_residual: np.ndarray   # (N,)
    delta_skew_residual: float
    omega_skew_residual: float
    gamma_skew_residual: float
    min_span_singular_value: np.ndarray  # (N,)
    tol: float
    passed: bool

    def summary(self) -> str:
        lines = [
            f"points checked        : {len(self.points)}",
            f"max |[X,X]| residual  : {self.bracket_xx_residual.max():.3e}",
            f"max |[X,Z]| residual  : {self.bracket_xz_residual.max():.3e}",
            f"delta skew residual   : {self.delta_skew_residual:.3e}",
            f"omega skew residual   : {self.omega_skew_residual:.3e}",
            f"gamma skew residual   : {self.gamma_skew_residual:.3e}",
            f"min span sigma        : {self.min_span_singular_value.min():.3e}",
            f"tolerance             : {self.tol:.1e}",
            f"passed                : {self.passed}",
        ]
        return "\n".join(lines)


def validate_structure(s: SubRiemannianStructure, pts: np.ndarray,
                       tol: float) -> ValidationReport:
    """Check the commutation relations, skew symmetries and the step-two span.

    Bracket residuals are computed from frame coefficient derivatives (jets),
    independently of the structure-function tables they are compared against.
    Raises HormanderError if the frame plus its first brackets fail to span
    the chart tangent space at some point.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[0] == 0:
        raise StructureError("validate_structure needs a nonempty point set")
    if pts.shape[1] != s.chart_dim:
        raise StructureError(
            f"points have dimension {pts.shape[1]}, chart has {s.chart_dim}"
        )
    if tol <= 0:
        raise StructureError("tol must be positive")
    br = frame_brackets(s, pts)
    fh, fv = br["frame_h"], br["frame_v"]
    omega = s.sf.omega.values(pts)
    gamma = s.sf.gamma.values(pts)
    delta = s.sf.delta.values(pts)

    # (a) [X_i,X_j] - sum_l omega^l_ij X_l - 2 sum_p gamma^p_ij Z_p
    model_xx = np.einsum("nijl,nla->nija", omega, fh) \
        + 2.0 * np.einsum("nijp,npa->nija", gamma, fv)
    res_xx = np.abs(br["xx"] - model_xx).max(axis=(1, 2, 3))

    # (b) [X_i,Z_p] - sum_l delta^l_ip X_l
    model_xz = np.einsum("nipl,nla->nipa", delta, fh)
    res_xz = np.abs(br["xz"] - model_xz).max(axis=(1, 2, 3)) if s.v else np.zeros(len(pts))

    # (c) skew symmetries
    delta_skew = float(np.abs(delta + delta.transpose(0, 3, 2, 1)).max()) if s.v else 0.0
    omega_skew = float(np.abs(omega + omega.transpose(0, 2, 1, 3)).max())
    gamma_skew = float(np.abs(gamma + gamma.transpose(0, 2, 1, 3)).max()) if s.v else 0.0

    # (d) step-two span: X_i together with the raw brackets [X_j,X_k]
    n = pts.shape[0]
    min_sigma = np.empty(n)
    for a in range(n):
        rows = [fh[a]]
        rows.append(br["xx"][a].reshape(-1, s.chart_dim))
        mat = np.concatenate(rows, axis=0)
        sig = np.linalg.svd(mat, compute_uv=False)
        min_sigma[a] = sig[s.chart_dim - 1] if len(sig) >= s.chart_dim else 0.0
        if min_sigma[a] <= 1e-12:
            raise HormanderError(pts[a], int((sig > 1e-12).sum()), s.chart_dim)

    passed = bool(
        res_xx.max() <= tol
        and (res_xz.max() if s.v else 0.0) <= tol
        and delta_skew <= tol
        and omega_skew <= tol
        and gamma_skew <= tol
    )
    return ValidationReport(
        points=pts,
        bracket_xx_residual=res_xx,
        bracket_xz_residual=res_xz,
        delta_skew_residual=delta_skew,
        omega_skew_residual=omega_skew,
        gamma_skew_residual=gamma_skew,
        min_span_singular_value=min_sigma,
        tol=tol,
        passed=passed,
    )
