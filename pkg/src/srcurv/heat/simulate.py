"""Path simulation for the hypoelliptic diffusion Y with generator L.

The SDE is the Stratonovich equation dY = X_0 dt + sqrt(2) sum_i X_i o dB_i.
The default scheme integrates its Ito form with the correction
sum_i (DX_i) X_i computed exactly from the polynomial frame tables; the
correction vanishes for all built-in group models. Compact models step
intrinsically (see _sde).

Per-path randomness is a counter-based stream keyed by (seed, path index):
ensembles are bit-identical for a fixed (seed, config) regardless of thread
count, and runs sharing a seed share increments path-by-path (exact common
random numbers).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..models import ModelDescriptor
from ..polynomials import Polynomial
from . import _sde


@dataclass(frozen=True)
class DiffusionConfig:
    n_paths: int
    dt: float
    t_max: float
    seed: int
    bandwidth: float = 1.0     # multiplier on the per-coordinate Scott rule
    scheme: str = "ito-corrected-euler"  # or "heun-stratonovich"
    box_halfwidth: float = 50.0
    n_batches: int = 32

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if not (0 < self.dt <= self.t_max):
            raise ValueError("need 0 < dt <= t_max")
        if self.scheme not in ("ito-corrected-euler", "heun-stratonovich"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass
class DiffusionEnsemble:
    model: str
    times: np.ndarray           # (R,)
    positions: np.ndarray       # (R, K, n_paths, cd) chart coordinates
    censored: np.ndarray        # (K, n_paths) bool
    starts: np.ndarray          # (K, cd)
    config: DiffusionConfig

    @property
    def n_paths(self) -> int:
        return self.positions.shape[2]

    def at_time(self, t: float, k: int = 0) -> np.ndarray:
        r = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[r] - t) > 0.51 * self.config.dt:
            raise ValueError(f"time {t} was not recorded")
        return self.positions[r, k]

    def censored_fraction(self, k: int = 0) -> float:
        return float(self.censored[k].mean())


def _poly_tables(polys: Sequence[Polynomial], cd: int):
    """Flatten a list of polynomials into (exps, coefs, ptr) arrays."""
    exps, coefs, ptr = [], [], np.zeros((len(polys), 2), dtype=np.int64)
    pos = 0
    for i, p in enumerate(polys):
        ptr[i, 0] = pos
        for e, c in p.terms:
            exps.append(e)
            coefs.append(c)
            pos += 1
        ptr[i, 1] = pos
    if not exps:
        exps = [(0,) * cd]
        coefs = [0.0]
    return (np.array(exps, dtype=np.int64), np.array(coefs, dtype=float), ptr)


def _seed_words(seed: int) -> tuple[np.uint32, np.uint32]:
    s = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    return np.uint32(s & np.uint64(0xFFFFFFFF)), np.uint32(s >> np.uint64(32))


def simulate_paths(md: ModelDescriptor, x0: np.ndarray, cfg: DiffusionConfig,
                   record_times: Optional[Sequence[float]] = None,
                   starts: Optional[np.ndarray] = None) -> DiffusionEnsemble:
    """Simulate cfg.n_paths trajectories from x0 (or from each row of starts,
    sharing increments across starts), recording chart positions at the given
    times (default: t_max only). Paths leaving the censoring box are frozen
    and flagged, never dropped.
    """
    s = md.structure
    cd = s.chart_dim
    if starts is None:
        starts = np.atleast_2d(np.asarray(x0, dtype=float))
    starts = np.ascontiguousarray(np.atleast_2d(starts), dtype=float)
    if record_times is None:
        record_times = [cfg.t_max]
    rec_steps = np.array(sorted({int(round(t / cfg.dt)) for t in record_times}),
                         dtype=np.int64)
    times = rec_steps * cfg.dt
    n_steps = int(rec_steps.max())
    K = starts.shape[0]
    out = np.empty((len(rec_steps), K, cfg.n_paths, cd))
    censored = np.zeros((K, cfg.n_paths), dtype=bool)
    seed0, seed1 = _seed_words(cfg.seed)

    kind = md.sim.kind
    if kind == "chart_poly":
        if cfg.scheme == "heun-stratonovich":
            # Heun integrates the Stratonovich drift X_0 = Ito drift minus the
            # correction sum (DX_i) X_i
            corr = _strat_drift(md)
            rexp, rcoef, rptr = _poly_tables(corr, cd)
            heun = True
        else:
            rexp, rcoef, rptr = _poly_tables(md.sim.drift, cd)
            heun = False
        dexp, dcoef, dptr2 = _poly_tables(
            [p for row in md.sim.diffusion for p in row], cd)
        dptr = dptr2.reshape(s.d, cd, 2)
        box_lo = starts.min(axis=0) - cfg.box_halfwidth
        box_hi = starts.max(axis=0) + cfg.box_halfwidth
        _sde.chart_kernel(starts, cfg.n_paths, n_steps, cfg.dt, seed0, seed1,
                          s.d, dexp, dcoef, dptr, rexp, rcoef, rptr,
                          box_lo, box_hi, rec_steps, out, censored, heun)
    elif kind == "sphere2":
        _sde.sphere_kernel(starts, cfg.n_paths, n_steps, cfg.dt, seed0, seed1,
                           rec_steps, out)
    elif kind == "su2":
        _sde.su2_kernel(starts, cfg.n_paths, n_steps, cfg.dt, seed0, seed1,
                        rec_steps, out)
    else:
        raise ValueError(f"model {md.name} has no simulation backend")
    return DiffusionEnsemble(model=md.name, times=times, positions=out,
                             censored=censored, starts=starts, config=cfg)


def _strat_drift(md: ModelDescriptor) -> list[Polynomial]:
    """Stratonovich drift X_0 = (Ito drift) - sum_i (DX_i) X_i."""
    cd = md.structure.chart_dim
    out = []
    for a in range(cd):
        p = md.sim.drift[a]
        for row in md.sim.diffusion:
            for b in range(cd):
                p = p - row[b] * row[a].diff(b)
        out.append(p)
    return out


def is_group_model(md: ModelDescriptor) -> bool:
    """Step-two group in exponential coordinates: constant gamma, zero
    omega/delta, polynomial frame. Left translation is exact for these."""
    s = md.structure
    return (md.sim.kind == "chart_poly"
            and s.sf.omega.is_constant and np.abs(s.sf.omega.const).max() == 0
            and s.sf.gamma.is_constant
            and (s.v == 0 or (s.sf.delta.is_constant
                              and np.abs(s.sf.delta.const).max() == 0)))


def group_product(md: ModelDescriptor, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """x . y = x + y + [x, y]/2 in exponential coordinates, with the bracket
    read from the constant gamma table. Rows of y are multiplied on the left
    by x."""
    s = md.structure
    x = np.asarray(x, dtype=float)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    out = x[None, :] + y
    if s.v:
        gamma = s.sf.gamma.const  # (d, d, v)
        out[:, s.d:] += np.einsum("ijp,i,nj->np", gamma, x[:s.d], y[:, :s.d])
    return out


def ensemble_to_bytes(ens: DiffusionEnsemble, k: int = 0) -> bytes:
    """Columnar binary export: magic 'SRHE', u16 version, u16 ncols,
    u64 nrows, then little-endian f64 columns (path id, t, coords...)."""
    R, _, n, cd = ens.positions.shape
    ncols = 2 + cd
    nrows = R * n
    header = b"SRHE" + struct.pack("<HHQ", 1, ncols, nrows)
    ids = np.tile(np.arange(n, dtype=float), R)
    ts = np.repeat(ens.times, n)
    cols = [ids, ts]
    for c in range(cd):
        cols.append(ens.positions[:, k, :, c].reshape(-1))
    body = b"".join(np.ascontiguousarray(col, dtype="<f8").tobytes() for col in cols)
    return header + body


def ensemble_from_bytes(data: bytes) -> dict:
    if data[:4] != b"SRHE":
        raise ValueError("not an SRHE ensemble file")
    version, ncols, nrows = struct.unpack("<HHQ", data[4:16])
    if version != 1:
        raise ValueError(f"unsupported SRHE version {version}")
    arr = np.frombuffer(data, dtype="<f8", offset=16)
    if arr.size != ncols * nrows:
        raise ValueError("truncated SRHE payload")
    cols = arr.reshape(ncols, nrows)
    return {
        "version": version,
        "path_id": cols[0],
        "t": cols[1],
        "coords": cols[2:].T.copy(),
    }
