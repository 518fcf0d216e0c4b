"""Truncated multivariate Taylor arithmetic (jets).

Everything differential in this package runs through jets: a jet stores the
Taylor coefficients of a function at a batch of base points, truncated at a
fixed total degree. Products, quotients and analytic compositions are exact
on the retained coefficients, so iterated frame derivatives of polynomial
fields and of trigonometric frame coefficients come out at machine precision
instead of finite-difference accuracy.

The `exact_to` attribute tracks how many leading degrees of a jet are still
trustworthy: differentiating drops it by one, multiplying takes the minimum.
Extracting a value from a jet whose `exact_to` is negative is a bug and
raises.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import sparse


@lru_cache(maxsize=None)
def monomials(nvars: int, order: int) -> tuple[tuple[int, ...], ...]:
    """All exponent tuples with total degree <= order, sorted by (degree, lex)."""
    out: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], remaining: int, budget: int) -> None:
        if remaining == 0:
            out.append(prefix)
            return
        for e in range(budget + 1):
            rec(prefix + (e,), remaining - 1, budget - e)

    rec((), nvars, order)
    out.sort(key=lambda a: (sum(a), a))
    return tuple(out)


class JetTable:
    """Precomputed index tables for jet arithmetic at fixed (nvars, order)."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        self.monos = monomials(nvars, order)
        self.size = len(self.monos)
        self.index = {m: i for i, m in enumerate(self.monos)}
        self.degrees = np.array([sum(m) for m in self.monos])
        self._build_product()
        self._build_diff()

    def _build_product(self) -> None:
        pairs_i, pairs_j, pairs_k = [], [], []
        for i, a in enumerate(self.monos):
            for j, b in enumerate(self.monos):
                if sum(a) + sum(b) > self.order:
                    continue
                k = self.index[tuple(x + y for x, y in zip(a, b))]
                pairs_i.append(i)
                pairs_j.append(j)
                pairs_k.append(k)
        self.prod_i = np.array(pairs_i)
        self.prod_j = np.array(pairs_j)
        n = len(pairs_i)
        # (npairs, size) scatter matrix: out = contrib @ scatter
        self.prod_scatter = sparse.csr_matrix(
            (np.ones(n), (np.arange(n), np.array(pairs_k))), shape=(n, self.size)
        )

    def _build_diff(self) -> None:
        # diff_maps[v] = (src indices, dst indices, factors)
        self.diff_maps = []
        for v in range(self.nvars):
            src, dst, fac = [], [], []
            for i, a in enumerate(self.monos):
                if a[v] == 0:
                    continue
                b = list(a)
                b[v] -= 1
                src.append(i)
                dst.append(self.index[tuple(b)])
                fac.append(a[v])
            self.diff_maps.append((np.array(src), np.array(dst), np.array(fac, dtype=float)))


@lru_cache(maxsize=None)
def jet_table(nvars: int, order: int) -> JetTable:
    return JetTable(nvars, order)


class Jet:
    """Batched truncated Taylor expansion.

    coeffs has shape batch_shape + (table.size,); the last axis indexes
    monomials of the displacement from the base point.
    """

    __slots__ = ("table", "coeffs", "exact_to")
    __array_priority__ = 100  # make ndarray * Jet defer to Jet.__rmul__

    def __init__(self, table: JetTable, coeffs: np.ndarray, exact_to: int):
        self.table = table
        self.coeffs = coeffs
        self.exact_to = exact_to

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    def value(self) -> np.ndarray:
        if self.exact_to < 0:
            raise UnsupportedOrderError(
                "jet no longer carries an exact value (too many derivatives taken)"
            )
        return self.coeffs[..., 0]

    def copy(self) -> "Jet":
        return Jet(self.table, self.coeffs.copy(), self.exact_to)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(
                self.table,
                self.coeffs + other.coeffs,
                min(self.exact_to, other.exact_to),
            )
        return self._add_scalar(other)

    __radd__ = __add__

    def _add_scalar(self, c) -> "Jet":
        out = self.coeffs.copy()
        out[..., 0] += c
        return Jet(self.table, out, self.exact_to)

    def __neg__(self) -> "Jet":
        return Jet(self.table, -self.coeffs, self.exact_to)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            t = self.table
            contrib = self.coeffs[..., t.prod_i] * other.coeffs[..., t.prod_j]
            flat = contrib.reshape(-1, contrib.shape[-1])
            out = (flat @ t.prod_scatter).reshape(self.batch_shape + (t.size,))
            return Jet(t, np.ascontiguousarray(out), min(self.exact_to, other.exact_to))
        return Jet(self.table, self.coeffs * np.asarray(other)[..., None], self.exact_to)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * jrecip(other)
        return self * (1.0 / np.asarray(other))

    def __rtruediv__(self, other):
        return jrecip(self) * other

    def diff(self, var: int) -> "Jet":
        src, dst, fac = self.table.diff_maps[var]
        out = np.zeros_like(self.coeffs)
        out[..., dst] = self.coeffs[..., src] * fac
        return Jet(self.table, out, self.exact_to - 1)

    def __getitem__(self, idx) -> "Jet":
        """Index into the batch axes (the monomial axis is preserved)."""
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.table, self.coeffs[idx], self.exact_to)

    # -- constructors --------------------------------------------------------

    @staticmethod
    def constant(table: JetTable, values: np.ndarray) -> "Jet":
        values = np.asarray(values, dtype=float)
        out = np.zeros(values.shape + (table.size,))
        out[..., 0] = values
        return Jet(table, out, table.order)

    @staticmethod
    def stack(jets: Sequence["Jet"], axis: int = 0) -> "Jet":
        table = jets[0].table
        coeffs = np.stack([j.coeffs for j in jets], axis=axis)
        return Jet(table, coeffs, min(j.exact_to for j in jets))


class UnsupportedOrderError(RuntimeError):
    """A derivative word exceeded the order a field/jet can supply."""


def coordinate_jets(points: np.ndarray, table: JetTable) -> list[Jet]:
    """Jets of the chart coordinate functions at a batch of points.

    points: (..., nvars). Returns one Jet per coordinate, batch shape (...).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[-1] != table.nvars:
        raise ValueError(f"points have {points.shape[-1]} coords, table expects {table.nvars}")
    out = []
    for v in range(table.nvars):
        coeffs = np.zeros(points.shape[:-1] + (table.size,))
        coeffs[..., 0] = points[..., v]
        unit = tuple(1 if c == v else 0 for c in range(table.nvars))
        coeffs[..., table.index[unit]] = 1.0
        out.append(Jet(table, coeffs, table.order))
    return out


def _compose(u: Jet, derivs_at_u0: list[np.ndarray]) -> Jet:
    """g(u) for analytic g given g^(k)(u0)/k! in derivs_at_u0[k]."""
    t = u.table
    w = u.copy()
    w.coeffs[..., 0] = 0.0  # displacement u - u0
    out = Jet.constant(t, derivs_at_u0[0])
    out.exact_to = u.exact_to
    p = None
    for k in range(1, t.order + 1):
        p = w if p is None else p * w
        out = out + p * derivs_at_u0[k]
    out.exact_to = u.exact_to
    return out


def _dispatch(fn_jet: Callable[[Jet], Jet], fn_num: Callable, x):
    return fn_jet(x) if isinstance(x, Jet) else fn_num(x)


def jsin(x):
    def on_jet(u: Jet) -> Jet:
        u0 = u.coeffs[..., 0]
        cycle = [np.sin(u0), np.cos(u0), -np.sin(u0), -np.cos(u0)]
        derivs = [cycle[k % 4] / math.factorial(k) for k in range(u.table.order + 1)]
        return _compose(u, derivs)

    return _dispatch(on_jet, np.sin, x)


def jcos(x):
    def on_jet(u: Jet) -> Jet:
        u0 = u.coeffs[..., 0]
        cycle = [np.cos(u0), -np.sin(u0), -np.cos(u0), np.sin(u0)]
        derivs = [cycle[k % 4] / math.factorial(k) for k in range(u.table.order + 1)]
        return _compose(u, derivs)

    return _dispatch(on_jet, np.cos, x)


def jexp(x):
    def on_jet(u: Jet) -> Jet:
        e = np.exp(u.coeffs[..., 0])
        derivs = [e / math.factorial(k) for k in range(u.table.order + 1)]
        return _compose(u, derivs)

    return _dispatch(on_jet, np.exp, x)


def jrecip(x):
    def on_jet(u: Jet) -> Jet:
        u0 = u.coeffs[..., 0]
        derivs = [(-1.0) ** k / u0 ** (k + 1) for k in range(u.table.order + 1)]
        return _compose(u, derivs)

    return _dispatch(on_jet, lambda v: 1.0 / v, x)
