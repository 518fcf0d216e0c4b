"""Multivariate polynomials over chart coordinates.

Polynomials are the exact-backend representation for test fields, frame
coefficients of the group models, and everything read from srs-v1 / testfn-v1
files: a list of (exponent-tuple, coefficient) terms. They evaluate on plain
coordinate arrays or on jets, so the same object works as a chart function in
both numeric and jet contexts.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .jets import Jet, JetTable


class Polynomial:
    def __init__(self, nvars: int, terms: Iterable[tuple[Sequence[int], float]]):
        self.nvars = nvars
        merged: dict[tuple[int, ...], float] = {}
        for exps, c in terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise ValueError("exponent tuple length mismatch")
            merged[exps] = merged.get(exps, 0.0) + float(c)
        self.terms = [(e, c) for e, c in sorted(merged.items()) if c != 0.0]
        self.degree = max((sum(e) for e, _ in self.terms), default=0)
        self._exps = np.array([e for e, _ in self.terms], dtype=np.int64).reshape(
            len(self.terms), nvars
        )
        self._coeffs = np.array([c for _, c in self.terms])

    @staticmethod
    def zero(nvars: int) -> "Polynomial":
        return Polynomial(nvars, [])

    @staticmethod
    def constant(nvars: int, c: float) -> "Polynomial":
        return Polynomial(nvars, [((0,) * nvars, c)])

    @staticmethod
    def coordinate(nvars: int, v: int) -> "Polynomial":
        e = [0] * nvars
        e[v] = 1
        return Polynomial(nvars, [(tuple(e), 1.0)])

    def eval(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if not self.terms:
            return np.zeros(points.shape[:-1])
        # (N, nterms) monomial values
        mono = np.prod(points[..., None, :] ** self._exps[None, :, :], axis=-1)
        return mono @ self._coeffs

    def __call__(self, coords: Sequence):
        """Chart-function protocol: coords is a list of arrays or of jets."""
        if coords and isinstance(coords[0], Jet):
            return self._eval_jets(coords)
        pts = np.stack([np.asarray(c, dtype=float) for c in coords], axis=-1)
        return self.eval(pts)

    def _eval_jets(self, coords: Sequence[Jet]) -> Jet:
        table = coords[0].table
        batch = coords[0].batch_shape
        out = Jet.constant(table, np.zeros(batch))
        # cache powers of each coordinate jet
        pows: dict[tuple[int, int], Jet] = {}

        def power(v: int, e: int) -> Jet:
            key = (v, e)
            if key not in pows:
                pows[key] = coords[v] if e == 1 else power(v, e - 1) * coords[v]
            return pows[key]

        for exps, c in self.terms:
            term = None
            for v, e in enumerate(exps):
                if e == 0:
                    continue
                term = power(v, e) if term is None else term * power(v, e)
            out = out + c * term if term is not None else out + c
        return out

    def taylor_jet(self, points: np.ndarray, table: JetTable) -> Jet:
        """Exact jet of the polynomial at a batch of points (Taylor shift)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        coeffs = np.zeros(points.shape[:-1] + (table.size,))
        from math import comb

        for exps, c in self.terms:
            for idx, beta in enumerate(table.monos):
                if any(b > a for a, b in zip(exps, beta)):
                    continue
                binom = 1.0
                for a, b in zip(exps, beta):
                    binom *= comb(a, b)
                resid = np.prod(
                    points ** np.array([a - b for a, b in zip(exps, beta)]), axis=-1
                )
                coeffs[..., idx] += c * binom * resid
        return Jet(table, coeffs, table.order)

    # -- ring helpers (used when assembling SDE drift corrections) ----------

    def diff(self, var: int) -> "Polynomial":
        terms = []
        for exps, c in self.terms:
            if exps[var] == 0:
                continue
            e = list(exps)
            e[var] -= 1
            terms.append((tuple(e), c * exps[var]))
        return Polynomial(self.nvars, terms)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            terms = []
            for e1, c1 in self.terms:
                for e2, c2 in other.terms:
                    terms.append((tuple(a + b for a, b in zip(e1, e2)), c1 * c2))
            return Polynomial(self.nvars, terms)
        return Polynomial(self.nvars, [(e, c * other) for e, c in self.terms])

    __rmul__ = __mul__

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(self.nvars, list(self.terms) + list(other.terms))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-1.0) * other

    def to_list(self) -> list:
        return [[list(e), c] for e, c in self.terms]

    @staticmethod
    def from_list(nvars: int, data: Iterable) -> "Polynomial":
        return Polynomial(nvars, [(tuple(e), float(c)) for e, c in data])

    def __repr__(self) -> str:
        return f"Polynomial(nvars={self.nvars}, nterms={len(self.terms)}, deg={self.degree})"


def random_polynomial(
    nvars: int, degree: int, rng: np.random.Generator, coeff_range: float = 1.0
) -> Polynomial:
    """Random polynomial with coefficients uniform in [-coeff_range, coeff_range]."""
    from .jets import monomials

    terms = []
    for exps in monomials(nvars, degree):
        terms.append((exps, rng.uniform(-coeff_range, coeff_range)))
    return Polynomial(nvars, terms)


def scaled_random_polynomial(
    nvars: int,
    degree: int,
    rng: np.random.Generator,
    centers: np.ndarray,
    halfwidths: np.ndarray,
    coeff_range: float = 1.0,
) -> Polynomial:
    """Random polynomial in box-normalized coordinates u_c = (x_c - center)/halfwidth.

    Coefficients are uniform in [-coeff_range, coeff_range] with respect to u;
    the result is expanded into a plain chart-coordinate polynomial. Sampling
    in normalized coordinates keeps iterated derivatives O(1) on charts whose
    raw coordinates span several units, so identity residuals stay at
    double-precision roundoff rather than being amplified by the chart scale.
    """
    from .jets import monomials

    u = [
        (1.0 / halfwidths[v]) * (Polynomial.coordinate(nvars, v)
                                 - Polynomial.constant(nvars, float(centers[v])))
        for v in range(nvars)
    ]
    out = Polynomial.zero(nvars)
    for exps in monomials(nvars, degree):
        c = rng.uniform(-coeff_range, coeff_range)
        term = Polynomial.constant(nvars, c)
        for v, e in enumerate(exps):
            for _ in range(e):
                term = term * u[v]
        out = out + term
    return out
