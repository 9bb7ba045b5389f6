"""Truncated multivariate Taylor arithmetic.

A jet is a polynomial truncated at a fixed total degree, used to carry a
function value together with its partial derivatives at a base point.
All jets attached to one :class:`JetContext` share the monomial basis and
the precomputed sparse multiplication table, so products and derivatives
are plain indexed numpy operations.

Every jet tracks the highest total degree up to which its coefficients
are trustworthy.  Multiplication keeps the smaller of the two orders,
differentiation lowers the order by one, and reading a coefficient past
the trusted order raises :class:`JetOrderError` instead of returning
garbage.
"""

from __future__ import annotations

import math
from itertools import combinations_with_replacement

import numpy as np


class JetOrderError(Exception):
    """Requested data of higher degree than the jet can certify."""


def _monomials(nvars: int, order: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(order + 1):
        for combo in combinations_with_replacement(range(nvars), deg):
            exps = [0] * nvars
            for v in combo:
                exps[v] += 1
            out.append(tuple(exps))
    return out


class JetContext:
    """Shared basis and operation tables for jets in ``nvars`` variables."""

    def __init__(self, nvars: int, order: int):
        if nvars < 1 or order < 0:
            raise ValueError("need nvars >= 1 and order >= 0")
        self.nvars = nvars
        self.order = order
        self.monomials = _monomials(nvars, order)
        self.nmono = len(self.monomials)
        self.index = {m: i for i, m in enumerate(self.monomials)}
        self.degrees = np.array([sum(m) for m in self.monomials], dtype=np.intp)

        # Sparse multiplication table: products of basis monomials that
        # survive truncation, as parallel index arrays.
        mi, mj, mk = [], [], []
        for i, ei in enumerate(self.monomials):
            di = sum(ei)
            for j, ej in enumerate(self.monomials):
                if di + sum(ej) > order:
                    continue
                mi.append(i)
                mj.append(j)
                mk.append(self.index[tuple(a + b for a, b in zip(ei, ej))])
        self._mul_i = np.array(mi, dtype=np.intp)
        self._mul_j = np.array(mj, dtype=np.intp)
        self._mul_k = np.array(mk, dtype=np.intp)

        # Per-variable differentiation maps: src monomial -> dst monomial
        # with integer factor (the exponent being lowered).
        self._dsrc, self._ddst, self._dfac = [], [], []
        for v in range(nvars):
            src, dst, fac = [], [], []
            for i, e in enumerate(self.monomials):
                if e[v] == 0:
                    continue
                lowered = list(e)
                lowered[v] -= 1
                src.append(i)
                dst.append(self.index[tuple(lowered)])
                fac.append(e[v])
            self._dsrc.append(np.array(src, dtype=np.intp))
            self._ddst.append(np.array(dst, dtype=np.intp))
            self._dfac.append(np.array(fac, dtype=float))

    # -- raw array kernels (last axis = monomial coefficients) -------------

    def mask(self, coeffs: np.ndarray, valid: int) -> np.ndarray:
        """Zero out coefficients above the trusted degree."""
        if valid >= self.order:
            return coeffs
        out = coeffs.copy()
        out[..., self.degrees > max(valid, -1)] = 0.0
        return out

    def mul_arrays(self, c1: np.ndarray, c2: np.ndarray) -> np.ndarray:
        shape = np.broadcast_shapes(c1.shape[:-1], c2.shape[:-1])
        out = np.zeros(shape + (self.nmono,))
        vals = c1[..., self._mul_i] * c2[..., self._mul_j]
        np.add.at(out, (..., self._mul_k), vals)
        return out

    def matmul_arrays(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Matrix product of jet matrices, shapes (n,k,nmono) x (k,m,nmono)."""
        vals = np.einsum("ikt,kjt->ijt", a[:, :, self._mul_i], b[:, :, self._mul_j])
        out = np.zeros((a.shape[0], b.shape[1], self.nmono))
        np.add.at(out, (slice(None), slice(None), self._mul_k), vals)
        return out

    def diff_arrays(self, c: np.ndarray, var: int) -> np.ndarray:
        out = np.zeros_like(c)
        out[..., self._ddst[var]] = c[..., self._dsrc[var]] * self._dfac[var]
        return out

    # -- constructors -------------------------------------------------------

    def constant(self, value: float) -> "Jet":
        c = np.zeros(self.nmono)
        c[0] = value
        return Jet(self, c, self.order)

    def variable(self, var: int, value: float) -> "Jet":
        if not 0 <= var < self.nvars:
            raise ValueError("variable index out of range")
        c = np.zeros(self.nmono)
        c[0] = value
        if self.order >= 1:
            exps = tuple(1 if i == var else 0 for i in range(self.nvars))
            c[self.index[exps]] = 1.0
        return Jet(self, c, self.order)

    def variables(self, values) -> list["Jet"]:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.nvars,):
            raise ValueError("need one value per variable")
        return [self.variable(v, values[v]) for v in range(self.nvars)]


class Jet:
    """Scalar truncated Taylor expansion with a trusted-order marker."""

    __slots__ = ("ctx", "c", "valid")

    def __init__(self, ctx: JetContext, coeffs: np.ndarray, valid: int):
        self.ctx = ctx
        self.valid = min(valid, ctx.order)
        self.c = ctx.mask(np.asarray(coeffs, dtype=float), self.valid)

    # -- extraction ---------------------------------------------------------

    def value(self) -> float:
        if self.valid < 0:
            raise JetOrderError("jet carries no trusted coefficients")
        return float(self.c[0])

    def coefficient(self, exps: tuple[int, ...]) -> float:
        deg = sum(exps)
        if deg > self.valid:
            raise JetOrderError(
                f"degree {deg} coefficient requested, trusted only to {self.valid}"
            )
        return float(self.c[self.ctx.index[tuple(exps)]])

    def derivative_value(self, *vars_: int) -> float:
        """Value of the mixed partial derivative (with factorial factors)."""
        j = self
        for v in vars_:
            j = j.diff(v)
        return j.value()

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.ctx is not self.ctx:
                raise ValueError("jets from different contexts")
            return other
        return self.ctx.constant(float(other))

    def __add__(self, other):
        o = self._coerce(other)
        return Jet(self.ctx, self.c + o.c, min(self.valid, o.valid))

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.ctx, -self.c, self.valid)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Jet(self.ctx, self.c * other, self.valid)
        o = self._coerce(other)
        return Jet(self.ctx, self.ctx.mul_arrays(self.c, o.c), min(self.valid, o.valid))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return Jet(self.ctx, self.c / other, self.valid)
        return self * self._coerce(other).inv()

    def __rtruediv__(self, other):
        return self.inv() * other

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers")
        out = self.ctx.constant(1.0)
        for _ in range(n):
            out = out * self
        return out

    def diff(self, var: int) -> "Jet":
        return Jet(self.ctx, self.ctx.diff_arrays(self.c, var), self.valid - 1)

    def inv(self) -> "Jet":
        u0 = self.c[0]
        if u0 == 0.0:
            raise ZeroDivisionError("jet with zero value part")
        # u = u0 (1 - t) with t nilpotent, so 1/u = (1/u0) sum t^k.
        t = Jet(self.ctx, (self.ctx.constant(u0).c - self.c) / u0, self.valid)
        out = self.ctx.constant(1.0)
        term = self.ctx.constant(1.0)
        for _ in range(self.ctx.order):
            term = term * t
            out = out + term
        return Jet(self.ctx, out.c / u0, self.valid)

    # -- analytic functions ---------------------------------------------------

    def _nilpotent_series(self, coeff_fn) -> "Jet":
        h = Jet(self.ctx, self.c - self.ctx.constant(self.c[0]).c, self.valid)
        out = self.ctx.constant(coeff_fn(0))
        term = self.ctx.constant(1.0)
        for k in range(1, self.ctx.order + 1):
            term = term * h
            out = out + coeff_fn(k) * term
        return out

    def sin(self) -> "Jet":
        u0 = float(self.c[0])
        s = self._nilpotent_series(
            lambda k: 0.0 if k % 2 == 0 else (-1) ** (k // 2) / math.factorial(k)
        )
        c = self._nilpotent_series(
            lambda k: (-1) ** (k // 2) / math.factorial(k) if k % 2 == 0 else 0.0
        )
        return math.sin(u0) * c + math.cos(u0) * s

    def cos(self) -> "Jet":
        u0 = float(self.c[0])
        s = self._nilpotent_series(
            lambda k: 0.0 if k % 2 == 0 else (-1) ** (k // 2) / math.factorial(k)
        )
        c = self._nilpotent_series(
            lambda k: (-1) ** (k // 2) / math.factorial(k) if k % 2 == 0 else 0.0
        )
        return math.cos(u0) * c - math.sin(u0) * s

    def exp(self) -> "Jet":
        u0 = float(self.c[0])
        e = self._nilpotent_series(lambda k: 1.0 / math.factorial(k))
        return math.exp(u0) * e


class JetMatrix:
    """Matrix whose entries are jets sharing one context and trusted order."""

    __slots__ = ("ctx", "c", "valid")

    def __init__(self, ctx: JetContext, coeffs: np.ndarray, valid: int):
        self.ctx = ctx
        self.valid = min(valid, ctx.order)
        self.c = ctx.mask(np.asarray(coeffs, dtype=float), self.valid)

    @property
    def shape(self) -> tuple[int, int]:
        return self.c.shape[0], self.c.shape[1]

    @staticmethod
    def from_entries(entries) -> "JetMatrix":
        rows = [list(r) for r in entries]
        ctx = rows[0][0].ctx
        valid = min(j.valid for r in rows for j in r)
        c = np.stack([np.stack([j.c for j in r]) for r in rows])
        return JetMatrix(ctx, c, valid)

    @staticmethod
    def constant(ctx: JetContext, mat: np.ndarray) -> "JetMatrix":
        mat = np.asarray(mat, dtype=float)
        c = np.zeros(mat.shape + (ctx.nmono,))
        c[..., 0] = mat
        return JetMatrix(ctx, c, ctx.order)

    def entry(self, i: int, j: int) -> Jet:
        return Jet(self.ctx, self.c[i, j], self.valid)

    def value(self) -> np.ndarray:
        if self.valid < 0:
            raise JetOrderError("matrix carries no trusted coefficients")
        return self.c[..., 0].copy()

    def __add__(self, other: "JetMatrix") -> "JetMatrix":
        return JetMatrix(self.ctx, self.c + other.c, min(self.valid, other.valid))

    def __sub__(self, other: "JetMatrix") -> "JetMatrix":
        return JetMatrix(self.ctx, self.c - other.c, min(self.valid, other.valid))

    def __matmul__(self, other: "JetMatrix") -> "JetMatrix":
        return JetMatrix(
            self.ctx,
            self.ctx.matmul_arrays(self.c, other.c),
            min(self.valid, other.valid),
        )

    def diff(self, var: int) -> "JetMatrix":
        return JetMatrix(self.ctx, self.ctx.diff_arrays(self.c, var), self.valid - 1)

    def transpose(self) -> "JetMatrix":
        return JetMatrix(self.ctx, np.swapaxes(self.c, 0, 1), self.valid)

    def inv(self) -> "JetMatrix":
        n, m = self.shape
        if n != m:
            raise ValueError("square matrices only")
        a0 = self.c[..., 0]
        a0inv = np.linalg.inv(a0)
        # A = A0 + H with H valueless, so A^-1 = sum (-A0^-1 H)^k A0^-1.
        h = self.c.copy()
        h[..., 0] = 0.0
        ninv = JetMatrix(self.ctx, -np.einsum("ik,kjt->ijt", a0inv, h), self.valid)
        eye = JetMatrix.constant(self.ctx, np.eye(n))
        out = eye
        term = eye
        for _ in range(self.ctx.order):
            term = ninv @ term
            out = out + term
        return JetMatrix(
            self.ctx, np.einsum("ikt,kj->ijt", out.c, a0inv), self.valid
        )
