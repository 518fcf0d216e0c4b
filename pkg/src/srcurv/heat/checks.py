"""Statistical checks of the semigroup inequalities and spectral bounds.

Every verdict here is statistical: an inequality passes when its slack is no
worse than minus (3 standard errors + an explicit bias budget). Stencil and
smoothing biases are estimated empirically (h against h/2, delta against
2 delta) rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from ..cdconstants import CDParameters, derive_constants
from ..models import ModelDescriptor
from .estimators import KernelEstimate, estimate_kernel
from .simulate import (
    DiffusionConfig,
    DiffusionEnsemble,
    group_product,
    is_group_model,
    simulate_paths,
)


class InsufficientSamplingError(RuntimeError):
    """A semigroup estimate needed by a log/gradient was not positive."""


class NotCompactError(ValueError):
    """Grid eigenvalue estimation requires a compact model."""


# -- Li-Yau -------------------------------------------------------------------


@dataclass
class LiYauReport:
    points: np.ndarray
    slack: np.ndarray        # (M,)
    stderr: np.ndarray       # (M,)
    bias: np.ndarray         # (M,)
    lhs: np.ndarray
    rhs: np.ndarray
    passed: bool
    h: float
    delta: float

    def summary(self) -> str:
        lines = ["point  slack       3*stderr    bias        verdict"]
        for m in range(len(self.slack)):
            ok = self.slack[m] >= -(3 * self.stderr[m] + self.bias[m])
            lines.append(f"{m:5d}  {self.slack[m]:+.4e}  {3*self.stderr[m]:.4e}  "
                         f"{self.bias[m]:.4e}  {'pass' if ok else 'FAIL'}")
        lines.append(f"overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _stencil_nodes(md: ModelDescriptor, x: np.ndarray, h: float) -> np.ndarray:
    """Center, +/- h X_i, +/- h Z_p, then the same at h/2: (1+4(d+v),) nodes."""
    s = md.structure
    fh, fv = s.frame_values(x[None, :])
    dirs = np.concatenate([fh[0], fv[0]], axis=0)  # (d+v, cd)
    nodes = [x]
    for scale in (h, 0.5 * h):
        for v in dirs:
            nodes.append(x + scale * v)
            nodes.append(x - scale * v)
    return np.array(nodes)


def _log_grad_sq(P: np.ndarray, lo: int, count: int, h: float) -> np.ndarray:
    """Sum over directions of ((ln P+ - ln P-)/(2h))^2; P indexed (..., node)."""
    out = 0.0
    for i in range(count):
        pp = P[..., lo + 2 * i]
        pm = P[..., lo + 2 * i + 1]
        out = out + ((np.log(pp) - np.log(pm)) / (2.0 * h)) ** 2
    return out


def liyau_check(md: ModelDescriptor, f: Callable, t: float, pts: np.ndarray,
                cdp: CDParameters, cfg: DiffusionConfig,
                h: float = 0.1, delta: Optional[float] = None) -> LiYauReport:
    """Check the gradient estimate for ln P_t f at each point.

    Gamma and Gamma^Z of ln P_t f come from central differences of P_t f over
    a frame stencil, L P_t f / P_t f from a central time difference; all
    nodes share increments (common random numbers). For group models one
    ensemble from the identity is left-translated to every node, which makes
    the common random numbers exact and the stencil free.
    """
    s = md.structure
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    dc = derive_constants(cdp)
    if delta is None:
        delta = max(cfg.dt, round(0.05 * t / cfg.dt) * cfg.dt)
    times = [t - 2 * delta, t - delta, t, t + delta, t + 2 * delta]
    nodes = np.concatenate([_stencil_nodes(md, x, h) for x in pts], axis=0)
    n_nodes = 1 + 4 * (s.d + s.v)

    nb = cfg.n_batches
    edges = np.linspace(0, cfg.n_paths, nb + 1).astype(int)
    P = np.full((len(times), len(nodes), nb + 1), np.nan)
    # off-center stencil nodes only enter the spatial gradients at time t
    needed = [(r, j) for r in range(len(times)) for j in range(len(nodes))
              if r == 2 or j % n_nodes == 0]
    if is_group_model(md):
        ident = np.zeros(s.chart_dim)
        ens = simulate_paths(md, ident, cfg, record_times=times)
        if ens.censored.any():
            raise InsufficientSamplingError("censored paths in Li-Yau ensemble")
        for r, j in needed:
            vals = np.asarray(f(group_product(md, nodes[j], ens.positions[r, 0])),
                              dtype=float)
            P[r, j, 0] = vals.mean()
            for b in range(nb):
                P[r, j, b + 1] = vals[edges[b]:edges[b + 1]].mean()
    else:
        ens = simulate_paths(md, nodes[0], cfg, record_times=times, starts=nodes)
        if ens.censored.any():
            raise InsufficientSamplingError("censored paths in Li-Yau ensemble")
        for r, j in needed:
            vals = np.asarray(f(ens.positions[r, j]), dtype=float)
            P[r, j, 0] = vals.mean()
            for b in range(nb):
                P[r, j, b + 1] = vals[edges[b]:edges[b + 1]].mean()
    if (P[~np.isnan(P)] <= 0).any():
        raise InsufficientSamplingError("P_t f estimate <= 0 at a stencil node")

    d, v = s.d, s.v
    lhs_t = dc.liyau.lhs_z * t
    coarse_at, fine_at = 1, 1 + 2 * (d + v)  # node offsets of the two stencils

    def slack_for(rep: int, h_eff: float, block: int, dstep: int):
        """(slack, lhs, rhs) per point from batch replicate rep (0 = full)."""
        sl = np.empty(len(pts))
        lh = np.empty(len(pts))
        rh = np.empty(len(pts))
        for m in range(len(pts)):
            base = m * n_nodes
            block_vals = P[2, base + block: base + block + 2 * (d + v), rep]
            gam = _log_grad_sq(block_vals[None, :], 0, d, h_eff)[0]
            gamz = (2.0 * _log_grad_sq(block_vals[None, :], 2 * d, v, h_eff)[0]
                    if v else 0.0)
            Pc = P[:, base, rep]
            ratio = (Pc[2 + dstep] - Pc[2 - dstep]) / (2.0 * dstep * delta * Pc[2])
            rh[m] = float(dc.liyau.rhs(np.array(ratio), t))
            lh[m] = gam + lhs_t * gamz
            sl[m] = rh[m] - lh[m]
        return sl, lh, rh

    fine, lhs, rhs = slack_for(0, 0.5 * h, fine_at, 1)
    coarse, _, _ = slack_for(0, h, coarse_at, 1)
    wide_t, _, _ = slack_for(0, 0.5 * h, fine_at, 2)
    slack = fine
    bias = np.abs(fine - coarse) / 3.0 + np.abs(wide_t - fine) / 3.0
    reps = np.stack([slack_for(b + 1, 0.5 * h, fine_at, 1)[0] for b in range(nb)])
    stderr = reps.std(axis=0, ddof=1) / math.sqrt(nb)
    passed = bool((slack >= -(3 * stderr + bias)).all())
    return LiYauReport(points=pts, slack=slack, stderr=stderr, bias=bias,
                       lhs=lhs, rhs=rhs, passed=passed, h=0.5 * h, delta=delta)


# -- Harnack ------------------------------------------------------------------


@dataclass
class HarnackReport:
    lhs: KernelEstimate
    rhs: KernelEstimate
    factor: float
    margin: float
    tolerance: float
    passed: bool

    def summary(self) -> str:
        return (f"p_lhs = {self.lhs.value:.5g} (+-{self.lhs.stderr:.2g})  "
                f"factor*p_rhs = {self.factor * self.rhs.value:.5g}  "
                f"margin = {self.margin:+.4g} vs -tol {-self.tolerance:.4g}  "
                f"{'pass' if self.passed else 'FAIL'}")


def harnack_check(md: ModelDescriptor, x: np.ndarray, y: np.ndarray,
                  s_time: float, t_time: float, cdp: CDParameters,
                  cfg: DiffusionConfig, z: Optional[np.ndarray] = None,
                  dist_yz: float = 0.0) -> HarnackReport:
    """Kernel Harnack: p(x,y,s) <= p(x,z,t) (t/s)^(D/2) exp((D/d) d(y,z)^2 /
    (4(t-s))). dist_yz is supplied by the caller (geodesics module or a model
    closed form) when z differs from y.
    """
    if not (0 < s_time < t_time):
        raise ValueError("need 0 < s < t")
    if z is None:
        z = y
    dc = derive_constants(cdp)
    if t_time - s_time < 1e-15 and dist_yz > 0:
        return HarnackReport(None, None, math.inf, math.inf, 0.0, True)
    ens = simulate_paths(md, x, cfg, record_times=[s_time, t_time])
    lhs = estimate_kernel(md, x, np.asarray(y, float), s_time, cfg, ens=_slice(ens, s_time))
    rhs = estimate_kernel(md, x, np.asarray(z, float), t_time, cfg, ens=_slice(ens, t_time))
    factor = (t_time / s_time) ** dc.harnack_exponent * math.exp(
        dc.harnack_gauss * dist_yz ** 2 / (4.0 * (t_time - s_time)))
    margin = factor * rhs.value - lhs.value
    tol = 3.0 * (lhs.stderr + factor * rhs.stderr) + lhs.bias_proxy + factor * rhs.bias_proxy
    return HarnackReport(lhs=lhs, rhs=rhs, factor=factor, margin=margin,
                         tolerance=tol, passed=bool(margin >= -tol))


def _slice(ens: DiffusionEnsemble, t: float) -> DiffusionEnsemble:
    r = int(np.argmin(np.abs(ens.times - t)))
    return DiffusionEnsemble(model=ens.model, times=ens.times[r:r + 1],
                             positions=ens.positions[r:r + 1], censored=ens.censored,
                             starts=ens.starts, config=ens.config)


# -- volume growth ------------------------------------------------------------


@dataclass
class BallVolume:
    value: float
    stderr: float
    lower: float
    upper: float
    indeterminate_fraction: float


def ball_box(md: ModelDescriptor, x: np.ndarray, r: float) -> np.ndarray:
    """Axis-aligned bounding box of the metric ball B(x, r) for the flat and
    group models."""
    s = md.structure
    x = np.asarray(x, dtype=float)
    box = np.stack([x - r, x + r], axis=1)
    if s.v and is_group_model(md):
        gamma = s.sf.gamma.const
        pairs = s.pairs()
        for p, (m, n) in enumerate(pairs):
            im, inn = m - 1, n - 1
            half = r * r / (4.0 * math.pi) + 0.5 * r * (abs(x[im]) + abs(x[inn])) + 1e-9
            # generic gamma scale: with [e_m, e_n] = 2 gamma Z_p, area maps to
            # 2 gamma * (enclosed area)
            half *= max(1.0, 2.0 * abs(gamma[im, inn, p]))
            box[s.d + p, 0] = x[s.d + p] - half
            box[s.d + p, 1] = x[s.d + p] + half
    elif s.v:
        raise ValueError("ball_box only supports flat and group models")
    return box


def ball_volume(md: ModelDescriptor, x: np.ndarray, r: float, n_samples: int,
                distance_fn: Callable, rng: np.random.Generator) -> BallVolume:
    """MC integration of the measure over {d(x, .) <= r} in a bounding box.

    distance_fn(x, pts) -> distances, NaN for indeterminate samples; those are
    bracketed both ways rather than dropped.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    box = ball_box(md, x, r)
    pts = rng.uniform(box[:, 0], box[:, 1], size=(n_samples, len(box)))
    dists = np.asarray(distance_fn(x, pts), dtype=float)
    dens = md.structure.measure_values(pts)
    vol_box = float(np.prod(box[:, 1] - box[:, 0]))
    bad = np.isnan(dists)
    inside = (dists <= r) & ~bad
    w = dens * inside
    value = vol_box * w.mean()
    stderr = vol_box * w.std(ddof=1) / math.sqrt(n_samples)
    w_hi = dens * (inside | bad)
    return BallVolume(value=value, stderr=stderr,
                      lower=value, upper=float(vol_box * w_hi.mean()),
                      indeterminate_fraction=float(bad.mean()))


def volume_growth_fit(radii: np.ndarray, volumes: np.ndarray) -> tuple[float, float]:
    """Log-log least-squares slope and intercept."""
    lr, lv = np.log(np.asarray(radii, float)), np.log(np.asarray(volumes, float))
    A = np.stack([lr, np.ones_like(lr)], axis=1)
    sol, *_ = np.linalg.lstsq(A, lv, rcond=None)
    return float(sol[0]), float(sol[1])


# -- lambda1 ------------------------------------------------------------------


def _sphere2_lambda1(n_theta: int, n_phi: int) -> float:
    h_t = math.pi / n_theta
    h_p = 2.0 * math.pi / n_phi
    theta = (np.arange(n_theta) + 0.5) * h_t
    s_c = np.sin(theta)                       # cell centers
    s_f = np.sin(np.arange(n_theta + 1) * h_t)  # faces; s_f[0] = s_f[-1] = 0
    N = n_theta * n_phi

    def idx(j, k):
        return j * n_phi + (k % n_phi)

    rows, cols, vals = [], [], []
    for j in range(n_theta):
        for k in range(n_phi):
            a = idx(j, k)
            diag = 0.0
            if j + 1 < n_theta:
                c = s_f[j + 1] / h_t ** 2
                rows.append(a); cols.append(idx(j + 1, k)); vals.append(-c)
                diag += c
            if j > 0:
                c = s_f[j] / h_t ** 2
                rows.append(a); cols.append(idx(j - 1, k)); vals.append(-c)
                diag += c
            c = s_c[j] / (s_c[j] ** 2 * h_p ** 2)
            for kk in (k - 1, k + 1):
                rows.append(a); cols.append(idx(j, kk)); vals.append(-c)
            diag += 2 * c
            rows.append(a); cols.append(a); vals.append(diag)
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(N, N))
    W = sparse.diags(np.repeat(s_c, n_phi))
    evals = eigsh(A, k=4, M=W.tocsc(), sigma=0.0, which="LM",
                  return_eigenvectors=False)
    evals = np.sort(evals)
    nonzero = evals[evals > 1e-8]
    return float(nonzero[0])


def _su2_lambda1(n_theta: int) -> float:
    """Minimum over Fourier modes of the 1D theta problems.

    Functions on the group decompose over modes exp(i(m phi + w psi)) with m
    and w both integers or both half-integers; the radial operator is
    -(1/sin)(sin u')' + (m - w cos)^2 / sin^2 u = (lambda/4) u.
    """
    h = math.pi / n_theta
    theta = (np.arange(n_theta) + 0.5) * h
    s_c = np.sin(theta)
    s_f = np.sin(np.arange(n_theta + 1) * h)
    best = math.inf
    modes = [(m, w) for m in (-2, -1, 0, 1, 2) for w in (-2, -1, 0, 1, 2)]
    modes += [(m / 2, w / 2) for m in (-3, -1, 1, 3) for w in (-3, -1, 1, 3)]
    for m, w in modes:
        V = (m - w * np.cos(theta)) ** 2 / s_c ** 2
        main = (s_f[:-1] + s_f[1:]) / (s_c * h * h) + V
        off = -s_f[1:-1] / (np.sqrt(s_c[:-1] * s_c[1:]) * h * h)
        from scipy.linalg import eigh_tridiagonal

        evals = eigh_tridiagonal(main, off, select="i", select_range=(0, 1))[0]
        lam = 4.0 * evals[0]
        if (m, w) == (0, 0):
            lam = 4.0 * evals[1]  # skip the constant
        if lam > 1e-9:
            best = min(best, lam)
    return best


@dataclass
class Lambda1Estimate:
    value: float
    coarse: float
    fine: float
    grid: tuple


def lambda1_estimate(md: ModelDescriptor, n_grid: int = 48,
                     richardson: bool = True) -> Lambda1Estimate:
    """Smallest nonzero eigenvalue of -L on a compact model by grid
    discretization, Richardson-extrapolated over two resolutions."""
    if not md.compact:
        raise NotCompactError(f"model {md.name} is not compact")
    if md.name == "sphere2":
        solver = lambda n: _sphere2_lambda1(n, 2 * n)
    elif md.name == "su2":
        solver = _su2_lambda1
    else:
        raise NotCompactError(f"no grid solver for {md.name}")
    coarse = solver(n_grid)
    fine = solver(2 * n_grid)
    value = (4.0 * fine - coarse) / 3.0 if richardson else fine
    return Lambda1Estimate(value=value, coarse=coarse, fine=fine,
                           grid=(n_grid, 2 * n_grid))


# -- extra semigroup diagnostics ---------------------------------------------


@dataclass
class SemigroupCheck:
    direct: float
    direct_err: float
    convolved: float
    convolved_err: float
    passed: bool


def semigroup_check(md: ModelDescriptor, x: np.ndarray, y: np.ndarray,
                    t: float, s: float, cfg: DiffusionConfig) -> SemigroupCheck:
    """p(x,y,t+s) against int p(x,z,t) p(z,y,s) dmu(z), the latter as the
    path average over Y_t^x of a kernel estimate from y (kernel symmetry)."""
    direct = estimate_kernel(md, x, y, t + s,
                             DiffusionConfig(cfg.n_paths, cfg.dt, t + s, cfg.seed,
                                             cfg.bandwidth))
    ens_a = simulate_paths(md, x, DiffusionConfig(cfg.n_paths, cfg.dt, t, cfg.seed + 1), [t])
    ens_b = simulate_paths(md, y, DiffusionConfig(cfg.n_paths, cfg.dt, s, cfg.seed + 2), [s])
    za = ens_a.positions[0, 0][~ens_a.censored[0]]
    zb = ens_b.positions[0, 0][~ens_b.censored[0]]
    from .estimators import _chart_periods, kde_at

    nb_ = len(zb)
    h = cfg.bandwidth * zb.std(axis=0) * nb_ ** (-1.0 / (zb.shape[1] + 4))
    periods = _chart_periods(md)
    dens_a = md.structure.measure_values(za)
    # subsample the outer average to keep the pair count manageable
    take = min(len(za), 4000)
    sel = np.linspace(0, len(za) - 1, take).astype(int)
    vals = np.array([kde_at(zb, za[i], h, periods).mean() / dens_a[i] for i in sel])
    conv = float(vals.mean())
    conv_err = float(vals.std(ddof=1) / math.sqrt(take)) + 2.0 * direct.bias_proxy
    tol = 3.0 * (direct.stderr + conv_err) + direct.bias_proxy
    passed = bool(abs(direct.value - conv) <= tol + 0.05 * max(direct.value, conv))
    return SemigroupCheck(direct=direct.value, direct_err=direct.stderr,
                          convolved=conv, convolved_err=conv_err, passed=passed)


@dataclass
class GlobalBoundCheck:
    values: np.ndarray
    bounds: np.ndarray
    passed: bool


def global_kernel_bound_check(md: ModelDescriptor, pairs: Sequence, ts: Sequence[float],
                              cdp: CDParameters, cfg: DiffusionConfig) -> GlobalBoundCheck:
    """Estimated p(x,y,t), mass-normalized, against (1 - e^(-alpha t))^(-D/2)."""
    dc = derive_constants(cdp)
    vals, bounds, ok = [], [], True
    for (x, y) in pairs:
        for t in ts:
            est = estimate_kernel(md, x, y, t,
                                  DiffusionConfig(cfg.n_paths, cfg.dt, t, cfg.seed,
                                                  cfg.bandwidth),
                                  normalize_mass=True)
            bound = dc.kernel_global_bound(t)
            vals.append(est.value)
            bounds.append(bound)
            if est.value > bound * (1.0 + 3.0 * est.stderr / max(est.value, 1e-300)) \
                    + 3.0 * est.stderr + est.bias_proxy:
                ok = False
    return GlobalBoundCheck(values=np.array(vals), bounds=np.array(bounds), passed=ok)


@dataclass
class GaussianRateCheck:
    slope: float
    threshold: float
    passed: bool


def gaussian_rate_check(md: ModelDescriptor, x: np.ndarray, targets: np.ndarray,
                        t: float, cfg: DiffusionConfig,
                        dists: np.ndarray) -> GaussianRateCheck:
    """Log-linear decay rate of p(x, y, t) in d(x,y)^2: slope must be at most
    -(1 - 0.15)/((4+eps) t) with eps = 1 (only the rate is falsifiable, the
    off-diagonal constant is not explicit)."""
    ens = simulate_paths(md, x, cfg, record_times=[t])
    logs, d2 = [], []
    for y, dist in zip(targets, dists):
        est = estimate_kernel(md, x, y, t, cfg, ens=ens)
        if est.value > 0:
            logs.append(math.log(est.value))
            d2.append(dist ** 2)
    A = np.stack([np.array(d2), np.ones(len(d2))], axis=1)
    sol, *_ = np.linalg.lstsq(A, np.array(logs), rcond=None)
    slope = float(sol[0])
    threshold = -(1.0 - 0.15) / (5.0 * t)
    return GaussianRateCheck(slope=slope, threshold=threshold,
                             passed=bool(slope <= threshold))
