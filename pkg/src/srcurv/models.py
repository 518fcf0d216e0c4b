"""Built-in model spaces with certified constants and sampling metadata.

Five models: euclidean2 (flat plane), heisenberg (the 3-dimensional group,
plus heisenberg<n> variants), free_step2_d3 (free step-two group on three
generators), sphere2 (round 2-sphere in a polar chart; the variable-omega
stress case), and su2 (compact group with brackets [X1,X2]=2Z, [X2,Z]=2X1,
[Z,X1]=2X2, realized in z-y-z Euler angles with psi of period 4*pi).

Certified (rho1, rho2, kappa): heisenberg (0, 1/4, 1/2), free_step2_d3
(0, 1/4, 1), sphere2 (1, -, 0), su2 (4, 1, 2), euclidean (0, -, 0). The su2
constants are the package's own derivation, pinned as golden values by a
regression test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cdconstants import CDParameters
from .jets import jcos, jsin
from .polynomials import Polynomial
from .structure import CoeffTensor, StructureFunctions, SubRiemannianStructure

BUILTIN_NAMES = ("euclidean2", "heisenberg", "free_step2_d3", "sphere2", "su2")


@dataclass(frozen=True)
class SimSpec:
    """How the heat module integrates this structure's diffusion.

    kind "chart_poly": Ito-corrected Euler in chart coordinates with
    polynomial drift/diffusion tables. kind "sphere2"/"su2": intrinsic
    geometric stepping (tangent step on S^2, quaternion step on SU(2)); the
    chart-coordinate SDE has pole singularities these avoid.
    """

    kind: str
    diffusion: Optional[list[list[Polynomial]]] = None  # [field][coord]
    drift: Optional[list[Polynomial]] = None            # X_0 + Ito correction


@dataclass(frozen=True)
class ModelDescriptor:
    name: str
    structure: SubRiemannianStructure
    cdp: CDParameters
    reference_box: np.ndarray       # (chart_dim, 2)
    compact: bool
    total_mass: Optional[float]     # mass of the measure over the chart, compact models
    sim: SimSpec
    notes: str = ""

    def sample_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        lo, hi = self.reference_box[:, 0], self.reference_box[:, 1]
        return rng.uniform(lo, hi, size=(n, len(lo)))


def _const_sf(d: int, v: int, omega=None, gamma=None, delta=None) -> StructureFunctions:
    cd = d + v
    return StructureFunctions(
        omega=CoeffTensor.constant(omega if omega is not None else np.zeros((d, d, d)), cd),
        gamma=CoeffTensor.constant(gamma if gamma is not None else np.zeros((d, d, v)), cd),
        delta=CoeffTensor.constant(delta if delta is not None else np.zeros((d, v, d)), cd),
    )


def _unit_measure(coords):
    return 1.0 + 0.0 * coords[0]


def _poly_frame_tensor(polys: list[list[Polynomial]], cd: int) -> CoeffTensor:
    arr = np.empty((len(polys), cd), dtype=object)
    for i, row in enumerate(polys):
        for a, p in enumerate(row):
            arr[i, a] = p
    return CoeffTensor.from_functions(arr, cd)


def _chart_poly_sim(frame_polys: list[list[Polynomial]],
                    x0_polys: list[Polynomial]) -> SimSpec:
    """Ito drift = X_0 + sum_i (DX_i) X_i from polynomial frame tables."""
    cd = len(frame_polys[0])
    drift = [Polynomial.zero(cd) for _ in range(cd)]
    for a in range(cd):
        drift[a] = drift[a] + x0_polys[a]
        for row in frame_polys:
            for b in range(cd):
                drift[a] = drift[a] + row[b] * row[a].diff(b)
    return SimSpec(kind="chart_poly", diffusion=frame_polys, drift=drift)


# -- the models ---------------------------------------------------------------


def _build_euclidean(d: int) -> ModelDescriptor:
    cd = d
    frame_polys = [[Polynomial.constant(cd, 1.0 if a == i else 0.0) for a in range(cd)]
                   for i in range(d)]
    s = SubRiemannianStructure(
        name=f"euclidean{d}",
        d=d,
        h=1,
        frame=CoeffTensor.constant(np.eye(d), cd),
        vertical_frame=CoeffTensor.constant(np.zeros((0, cd)), cd),
        sf=_const_sf(d, 0),
        measure_density=_unit_measure,
    )
    cdp = CDParameters(rho1=0.0, rho2=None, kappa=0.0, d=d, vertical_rank=0)
    box = np.array([[-2.0, 2.0]] * cd)
    sim = _chart_poly_sim(frame_polys, [Polynomial.zero(cd)] * cd)
    return ModelDescriptor(f"euclidean{d}", s, cdp, box, compact=False,
                           total_mass=None, sim=sim, notes="flat plane, L = Laplacian")


def _build_heisenberg(n: int) -> ModelDescriptor:
    d, v = 2 * n, 1
    cd = d + v
    frame_polys = []
    for i in range(n):  # X_i = d/dx_i - (y_i/2) d/dz
        row = [Polynomial.zero(cd) for _ in range(cd)]
        row[i] = Polynomial.constant(cd, 1.0)
        row[cd - 1] = -0.5 * Polynomial.coordinate(cd, n + i)
        frame_polys.append(row)
    for i in range(n):  # X_{n+i} = d/dy_i + (x_i/2) d/dz
        row = [Polynomial.zero(cd) for _ in range(cd)]
        row[n + i] = Polynomial.constant(cd, 1.0)
        row[cd - 1] = 0.5 * Polynomial.coordinate(cd, i)
        frame_polys.append(row)
    vert = np.zeros((1, cd))
    vert[0, cd - 1] = 1.0
    gamma = np.zeros((d, d, 1))
    for i in range(n):
        gamma[i, n + i, 0] = 0.5
        gamma[n + i, i, 0] = -0.5
    s = SubRiemannianStructure(
        name="heisenberg" if n == 1 else f"heisenberg{n}",
        d=d,
        h=2,
        frame=_poly_frame_tensor(frame_polys, cd),
        vertical_frame=CoeffTensor.constant(vert, cd),
        sf=_const_sf(d, 1, gamma=gamma),
        measure_density=_unit_measure,
    )
    cdp = CDParameters(rho1=0.0, rho2=0.25, kappa=(d - 1) / 2.0, d=d, vertical_rank=1)
    box = np.array([[-2.0, 2.0]] * cd)
    sim = _chart_poly_sim(frame_polys, [Polynomial.zero(cd)] * cd)
    return ModelDescriptor(s.name, s, cdp, box, compact=False, total_mass=None,
                           sim=sim, notes="step-two group; Haar = Lebesgue")


def _build_free_step2_d3() -> ModelDescriptor:
    d, v = 3, 3
    cd = 6
    pairs = [(0, 1), (0, 2), (1, 2)]
    frame_polys = []
    for i in range(d):  # X_i = d/dx_i - sum_{i<n} (x_n/2) d/dz_in + sum_{m<i} (x_m/2) d/dz_mi
        row = [Polynomial.zero(cd) for _ in range(cd)]
        row[i] = Polynomial.constant(cd, 1.0)
        for p, (m, n) in enumerate(pairs):
            if i == m:
                row[3 + p] = -0.5 * Polynomial.coordinate(cd, n)
            elif i == n:
                row[3 + p] = 0.5 * Polynomial.coordinate(cd, m)
        frame_polys.append(row)
    vert = np.zeros((v, cd))
    for p in range(v):
        vert[p, 3 + p] = 1.0
    gamma = np.zeros((d, d, v))
    for p, (m, n) in enumerate(pairs):
        gamma[m, n, p] = 0.5
        gamma[n, m, p] = -0.5
    s = SubRiemannianStructure(
        name="free_step2_d3",
        d=d,
        h=3,
        frame=_poly_frame_tensor(frame_polys, cd),
        vertical_frame=CoeffTensor.constant(vert, cd),
        sf=_const_sf(d, v, gamma=gamma),
        measure_density=_unit_measure,
    )
    cdp = CDParameters(rho1=0.0, rho2=0.25, kappa=1.0, d=3, vertical_rank=3)
    box = np.array([[-2.0, 2.0]] * cd)
    sim = _chart_poly_sim(frame_polys, [Polynomial.zero(cd)] * cd)
    return ModelDescriptor("free_step2_d3", s, cdp, box, compact=False,
                           total_mass=None, sim=sim,
                           notes="free step-two group on three generators")


def _build_sphere2() -> ModelDescriptor:
    d, cd = 2, 2
    frame = np.empty((2, 2), dtype=object)
    frame[0, 0] = lambda c: 1.0 + 0.0 * c[0]
    frame[0, 1] = lambda c: 0.0 * c[0]
    frame[1, 0] = lambda c: 0.0 * c[0]
    frame[1, 1] = lambda c: 1.0 / jsin(c[0])
    omega = np.empty((2, 2, 2), dtype=object)
    zero = lambda c: 0.0 * c[0]
    for idx in np.ndindex(2, 2, 2):
        omega[idx] = zero
    omega[0, 1, 1] = lambda c: -jcos(c[0]) / jsin(c[0])
    omega[1, 0, 1] = lambda c: jcos(c[0]) / jsin(c[0])
    s = SubRiemannianStructure(
        name="sphere2",
        d=2,
        h=1,
        frame=CoeffTensor.from_functions(frame, cd),
        vertical_frame=CoeffTensor.constant(np.zeros((0, cd)), cd),
        sf=StructureFunctions(
            omega=CoeffTensor.from_functions(omega, cd),
            gamma=CoeffTensor.constant(np.zeros((2, 2, 0)), cd),
            delta=CoeffTensor.constant(np.zeros((2, 0, 2)), cd),
        ),
        measure_density=lambda c: jsin(c[0]),
    )
    cdp = CDParameters(rho1=1.0, rho2=None, kappa=0.0, d=2, vertical_rank=0)
    box = np.array([[0.12, math.pi - 0.12], [0.0, 2.0 * math.pi]])
    return ModelDescriptor("sphere2", s, cdp, box, compact=True, total_mass=4.0 * math.pi,
                           sim=SimSpec(kind="sphere2"),
                           notes="chart excludes polar caps theta < 0.1 and theta > pi - 0.1")


def _build_su2() -> ModelDescriptor:
    d, v = 2, 1
    cd = 3
    # chart (theta, phi, psi); left-invariant frame, verified bracket table
    frame = np.empty((2, 3), dtype=object)
    frame[0, 0] = lambda c: 2.0 * jsin(c[2])
    frame[0, 1] = lambda c: -2.0 * jcos(c[2]) / jsin(c[0])
    frame[0, 2] = lambda c: 2.0 * jcos(c[2]) * jcos(c[0]) / jsin(c[0])
    frame[1, 0] = lambda c: 2.0 * jcos(c[2])
    frame[1, 1] = lambda c: 2.0 * jsin(c[2]) / jsin(c[0])
    frame[1, 2] = lambda c: -2.0 * jsin(c[2]) * jcos(c[0]) / jsin(c[0])
    vert = np.zeros((1, 3))
    vert[0, 2] = 2.0
    gamma = np.zeros((2, 2, 1))
    gamma[0, 1, 0] = 1.0   # [X1,X2] = 2Z
    gamma[1, 0, 0] = -1.0
    delta = np.zeros((2, 1, 2))
    delta[0, 0, 1] = -2.0  # [X1,Z] = -2 X2
    delta[1, 0, 0] = 2.0   # [X2,Z] =  2 X1
    s = SubRiemannianStructure(
        name="su2",
        d=2,
        h=2,
        frame=CoeffTensor.from_functions(frame, cd),
        vertical_frame=CoeffTensor.constant(vert, cd),
        sf=_const_sf(2, 1, gamma=gamma, delta=delta),
        measure_density=lambda c: jsin(c[0]),
    )
    cdp = CDParameters(rho1=4.0, rho2=1.0, kappa=2.0, d=2, vertical_rank=1)
    box = np.array([[0.12, math.pi - 0.12], [0.0, 2.0 * math.pi], [0.0, 4.0 * math.pi]])
    return ModelDescriptor("su2", s, cdp, box, compact=True,
                           total_mass=16.0 * math.pi ** 2,
                           sim=SimSpec(kind="su2"),
                           notes="Euler angles, psi period 4*pi; Haar density sin(theta)")


def build(name: str) -> ModelDescriptor:
    """Build a model by name: euclidean<d>, heisenberg[<n>], free_step2_d3,
    sphere2, su2."""
    key = name.strip().lower()
    if key.startswith("euclidean"):
        d = int(key[len("euclidean"):] or 2)
        if d < 2:
            raise ValueError("euclidean model needs d >= 2")
        return _build_euclidean(d)
    if key.startswith("heisenberg"):
        n = int(key[len("heisenberg"):] or 1)
        return _build_heisenberg(n)
    if key == "free_step2_d3":
        return _build_free_step2_d3()
    if key == "sphere2":
        return _build_sphere2()
    if key == "su2":
        return _build_su2()
    raise ValueError(f"unknown model {name!r}; builtins: {BUILTIN_NAMES}")


def all_builtin() -> list[ModelDescriptor]:
    return [build(n) for n in BUILTIN_NAMES]
