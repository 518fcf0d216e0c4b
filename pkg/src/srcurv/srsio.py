"""File formats: structure definitions (srs-v1) and test functions (testfn-v1).

srs-v1 is a JSON document:

    {"version": "srs-v1", "name": ..., "d": ..., "h": ..., "chart_dim": ...,
     "model": "<builtin name>"}                        -- builtin reference, or
     "custom": {"frame": [[poly, ...], ...],           -- d rows of chart_dim polys
                "vertical_frame": [[poly, ...], ...],
                "omega": [[i, j, l, poly], ...],       -- sparse entries, 0-based
                "gamma": [[i, j, p, poly], ...],       -- ordered pairs p
                "delta": [[i, p, l, poly], ...],
                "measure_density": poly}}

Polynomials are lists of [exponent-list, coefficient] pairs. Custom structures
get a chart-polynomial simulation backend (Ito drift assembled exactly from
the frame tables) and must pass validate_structure before use; loading does
not validate.

testfn-v1: {"version": "testfn-v1", "nvars": n, "terms": [[exps, coeff], ...]}.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import models
from .cdconstants import CDParameters
from .models import ModelDescriptor, _chart_poly_sim, _poly_frame_tensor
from .polynomials import Polynomial
from .structure import CoeffTensor, StructureFunctions, SubRiemannianStructure


class FormatError(ValueError):
    """Malformed srs-v1 / testfn-v1 document."""


def structure_to_dict(md: ModelDescriptor) -> dict:
    doc = {
        "version": "srs-v1",
        "name": md.name,
        "d": md.structure.d,
        "h": md.structure.h,
        "chart_dim": md.structure.chart_dim,
    }
    if md.name in models.BUILTIN_NAMES or md.name.startswith(("euclidean", "heisenberg")):
        doc["model"] = md.name
    else:
        doc["custom"] = _custom_dict(md)
    return doc


def _custom_dict(md: ModelDescriptor) -> dict:
    if md.sim.kind != "chart_poly":
        raise FormatError(f"model {md.name} has no polynomial tables to export")
    s = md.structure
    cd = s.chart_dim

    def sparse(tensor: CoeffTensor):
        out = []
        vals = tensor.const
        for idx in np.ndindex(tensor.shape):
            if vals is not None:
                if vals[idx] != 0.0:
                    out.append(list(idx) + [Polynomial.constant(cd, float(vals[idx])).to_list()])
            else:
                fn = tensor.fns[idx]
                if isinstance(fn, Polynomial) and fn.terms:
                    out.append(list(idx) + [fn.to_list()])
        return out

    frame = [[md.sim.diffusion[i][a].to_list() for a in range(cd)] for i in range(s.d)]
    vf = s.vertical_frame.const
    vframe = [[Polynomial.constant(cd, float(vf[p, a])).to_list() for a in range(cd)]
              for p in range(s.v)]
    dens_terms = [[[0] * cd, 1.0]]
    return {
        "frame": frame,
        "vertical_frame": vframe,
        "omega": sparse(s.sf.omega),
        "gamma": sparse(s.sf.gamma),
        "delta": sparse(s.sf.delta),
        "measure_density": dens_terms,
    }


def save_structure(md: ModelDescriptor, path: str | Path) -> None:
    Path(path).write_text(json.dumps(structure_to_dict(md), indent=1, sort_keys=True))


def structure_from_dict(doc: dict) -> ModelDescriptor:
    if doc.get("version") != "srs-v1":
        raise FormatError(f"expected version srs-v1, got {doc.get('version')!r}")
    if "model" in doc:
        md = models.build(doc["model"])
        for key in ("d", "h", "chart_dim"):
            have = {"d": md.structure.d, "h": md.structure.h,
                    "chart_dim": md.structure.chart_dim}[key]
            if key in doc and doc[key] != have:
                raise FormatError(f"field {key}={doc[key]} contradicts builtin "
                                  f"{doc['model']} ({have})")
        return md
    if "custom" not in doc:
        raise FormatError("srs-v1 document needs either 'model' or 'custom'")
    c = doc["custom"]
    d, h = int(doc["d"]), int(doc["h"])
    v = h * (h - 1) // 2
    cd = int(doc.get("chart_dim", d + v))
    if cd != d + v:
        raise FormatError(f"chart_dim {cd} != d + h(h-1)/2 = {d + v}")

    def poly(data) -> Polynomial:
        return Polynomial.from_list(cd, data)

    frame_polys = [[poly(e) for e in row] for row in c["frame"]]
    if len(frame_polys) != d or any(len(r) != cd for r in frame_polys):
        raise FormatError("frame table must be d rows of chart_dim polynomials")
    vframe_polys = [[poly(e) for e in row] for row in c.get("vertical_frame", [])]
    if len(vframe_polys) != v or any(len(r) != cd for r in vframe_polys):
        raise FormatError("vertical_frame table must be v rows of chart_dim polynomials")

    def dense(entries, shape) -> CoeffTensor:
        arr = np.empty(shape, dtype=object)
        for idx in np.ndindex(shape):
            arr[idx] = Polynomial.zero(cd)
        for entry in entries:
            *idx, p = entry
            idx = tuple(int(i) for i in idx)
            if len(idx) != len(shape) or any(i < 0 or i >= s for i, s in zip(idx, shape)):
                raise FormatError(f"index {idx} out of bounds for shape {shape}")
            arr[idx] = poly(p)
        if all(not arr[idx].terms for idx in np.ndindex(shape)):
            return CoeffTensor.constant(np.zeros(shape), cd)
        if all(arr[idx].degree == 0 for idx in np.ndindex(shape)):
            const = np.zeros(shape)
            for idx in np.ndindex(shape):
                const[idx] = arr[idx].eval(np.zeros((1, cd)))[0]
            return CoeffTensor.constant(const, cd)
        return CoeffTensor.from_functions(arr, cd)

    vf_const = np.array([[pv.eval(np.zeros((1, cd)))[0] for pv in row] for row in vframe_polys]) \
        if v else np.zeros((0, cd))
    s = SubRiemannianStructure(
        name=doc.get("name", "custom"),
        d=d,
        h=h,
        frame=_poly_frame_tensor(frame_polys, cd),
        vertical_frame=(CoeffTensor.from_functions(
            np.array(vframe_polys, dtype=object), cd)
            if v and any(pv.degree > 0 for row in vframe_polys for pv in row)
            else CoeffTensor.constant(vf_const, cd)),
        sf=StructureFunctions(
            omega=dense(c.get("omega", []), (d, d, d)),
            gamma=dense(c.get("gamma", []), (d, d, v)),
            delta=dense(c.get("delta", []), (d, v, d)),
        ),
        measure_density=poly(c.get("measure_density", [[[0] * cd, 1.0]])),
    )
    cdp = CDParameters(rho1=0.0, rho2=0.25 if v else None, kappa=0.5 if v else 0.0,
                       d=d, vertical_rank=v)
    box = np.array([[-2.0, 2.0]] * cd)
    sim = _chart_poly_sim(frame_polys, [Polynomial.zero(cd)] * cd)
    return ModelDescriptor(s.name, s, cdp, box, compact=False, total_mass=None,
                           sim=sim, notes="custom structure (constants unverified)")


def load_structure(path: str | Path) -> ModelDescriptor:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"not valid JSON: {e}") from e
    return structure_from_dict(doc)


def save_test_function(poly: Polynomial, path: str | Path) -> None:
    doc = {"version": "testfn-v1", "nvars": poly.nvars, "terms": poly.to_list()}
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def load_test_function(path: str | Path) -> Polynomial:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"not valid JSON: {e}") from e
    if doc.get("version") != "testfn-v1":
        raise FormatError(f"expected version testfn-v1, got {doc.get('version')!r}")
    return Polynomial.from_list(int(doc["nvars"]), doc["terms"])
