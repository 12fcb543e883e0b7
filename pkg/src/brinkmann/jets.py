"""Truncated multivariate Taylor-jet arithmetic.

A jet stores the Taylor coefficients of a smooth function about a base
point, up to a fixed total degree ``order``:

    coeff[alpha] = d^alpha f / alpha!        (|alpha| <= order)

so the degree-0 coefficient is the function value and ``partial`` recovers
raw partial derivatives.  Addition, multiplication (truncated Cauchy
product) and composition with analytic functions propagate all partial
derivatives exactly, to machine precision, which is what the curvature
formulas downstream rely on.

Coefficients are stored densely over the simplex {|alpha| <= order} in
graded lexicographic order.  Because the ordering is graded, the
coefficient vector of a lower order is a prefix of a higher one, so
truncation is a slice.  Multiplication tables are precomputed once per
(num_vars, order) pair and cached.

A ``Jet`` may carry a leading batch shape: ``data`` has shape
``(*batch, ncoeffs)``.  Scalar jets have ``batch == ()``.  All arithmetic
broadcasts over the batch axes, which is how whole tensor fields of jets
are handled without Python-level loops.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "Jet",
    "JetContext",
    "JetDomainError",
    "JetShapeError",
    "context",
    "seed",
    "const",
    "zeros",
    "sin",
    "cos",
    "exp",
    "sqrt",
    "pow_int",
    "jet_einsum",
]


class JetDomainError(ValueError):
    """Elementary function applied outside its domain (e.g. sqrt at <= 0)."""


class JetShapeError(ValueError):
    """Operands live in incompatible jet contexts."""


def _compositions(total: int, nvars: int):
    """Yield exponent tuples summing to ``total``, lexicographically."""
    if nvars == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, nvars - 1):
            yield (head,) + rest


class JetContext:
    """Shared coefficient layout and operation tables for (num_vars, order)."""

    def __init__(self, nvars: int, order: int):
        if nvars < 1:
            raise JetShapeError("need at least one variable")
        if order < 0:
            raise JetShapeError("order must be non-negative")
        self.nvars = nvars
        self.order = order
        exps: list[tuple[int, ...]] = []
        self.ncoeffs_by_order = []
        for deg in range(order + 1):
            exps.extend(_compositions(deg, nvars))
            self.ncoeffs_by_order.append(len(exps))
        self.exps = np.array(exps, dtype=np.int64)
        self.degrees = self.exps.sum(axis=1)
        self.ncoeffs = len(exps)
        self._index = {tuple(e): i for i, e in enumerate(exps)}
        self._mul_groups: list[tuple[np.ndarray, np.ndarray]] | None = None
        self._mul_flat: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self._diff_tables: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def index(self, alpha: Sequence[int]) -> int:
        key = tuple(int(a) for a in alpha)
        if key not in self._index:
            raise JetShapeError(f"multi-index {key} not representable at order {self.order}")
        return self._index[key]

    def _build_mul(self) -> None:
        groups: list[list[list[int]]] = [[[], []] for _ in range(self.ncoeffs)]
        for ia in range(self.ncoeffs):
            da = int(self.degrees[ia])
            ea = self.exps[ia]
            for ib in range(self.ncoeffs_by_order[self.order - da]):
                ko = self._index[tuple(ea + self.exps[ib])]
                groups[ko][0].append(ia)
                groups[ko][1].append(ib)
        self._mul_groups = [
            (np.array(g[0], dtype=np.intp), np.array(g[1], dtype=np.intp)) for g in groups
        ]
        ka = np.concatenate([g[0] for g in self._mul_groups])
        kb = np.concatenate([g[1] for g in self._mul_groups])
        ko = np.concatenate(
            [np.full(len(g[0]), i, dtype=np.intp) for i, g in enumerate(self._mul_groups)]
        )
        self._mul_flat = (ka, kb, ko)

    def mul_groups(self) -> list[tuple[np.ndarray, np.ndarray]]:
        if self._mul_groups is None:
            self._build_mul()
        return self._mul_groups

    def mul_flat(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._mul_flat is None:
            self._build_mul()
        return self._mul_flat

    def diff_table(self, var: int) -> tuple[np.ndarray, np.ndarray]:
        """Map child-context coefficients to (source index, factor) pairs."""
        if var not in self._diff_tables:
            child = context(self.nvars, self.order - 1)
            src = np.empty(child.ncoeffs, dtype=np.intp)
            fac = np.empty(child.ncoeffs)
            for i in range(child.ncoeffs):
                beta = child.exps[i].copy()
                beta[var] += 1
                src[i] = self._index[tuple(beta)]
                fac[i] = beta[var]
            self._diff_tables[var] = (src, fac)
        return self._diff_tables[var]

    def factorials(self) -> np.ndarray:
        return np.array(
            [math.prod(math.factorial(int(e)) for e in row) for row in self.exps]
        )


@lru_cache(maxsize=None)
def context(nvars: int, order: int) -> JetContext:
    return JetContext(nvars, order)


def _mul_data(ctx: JetContext, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated Cauchy product on coefficient arrays (batch-broadcasting)."""
    batch = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    if batch == ():
        ka, kb, ko = ctx.mul_flat()
        return np.bincount(ko, weights=a[ka] * b[kb], minlength=ctx.ncoeffs)
    out = np.empty(batch + (ctx.ncoeffs,))
    for ko, (ka, kb) in enumerate(ctx.mul_groups()):
        out[..., ko] = (a[..., ka] * b[..., kb]).sum(axis=-1)
    return out


class Jet:
    """A (possibly batched) truncated Taylor expansion."""

    __slots__ = ("ctx", "data")

    def __init__(self, ctx: JetContext, data: np.ndarray):
        self.ctx = ctx
        self.data = np.asarray(data, dtype=float)
        if self.data.shape[-1:] != (ctx.ncoeffs,):
            raise JetShapeError("coefficient axis does not match context")

    # -- basic introspection -------------------------------------------------

    @property
    def num_vars(self) -> int:
        return self.ctx.nvars

    @property
    def order(self) -> int:
        return self.ctx.order

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape[:-1]

    def value(self):
        v = self.data[..., 0]
        return float(v) if v.ndim == 0 else v.copy()

    def coeff(self, alpha: Sequence[int]):
        v = self.data[..., self.ctx.index(alpha)]
        return float(v) if v.ndim == 0 else v.copy()

    def partial(self, alpha: Sequence[int]):
        """Raw partial derivative d^alpha f = alpha! * coeff[alpha]."""
        fac = math.prod(math.factorial(int(a)) for a in alpha)
        v = self.data[..., self.ctx.index(alpha)] * fac
        return float(v) if v.ndim == 0 else v

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.ctx, self.data[key + (slice(None),)])

    def __repr__(self) -> str:
        return f"Jet(nvars={self.num_vars}, order={self.order}, shape={self.shape})"

    # -- order management ----------------------------------------------------

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetShapeError("cannot raise jet order by truncation")
        if order == self.order:
            return self
        ctx = context(self.num_vars, order)
        return Jet(ctx, self.data[..., : ctx.ncoeffs])

    def _align(self, other: "Jet") -> tuple["Jet", "Jet"]:
        if self.num_vars != other.num_vars:
            raise JetShapeError("jets over different variable sets")
        k = min(self.order, other.order)
        return self.truncate(k), other.truncate(k)

    # -- ring operations -----------------------------------------------------

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        arr = np.asarray(other, dtype=float)
        data = np.zeros(arr.shape + (self.ctx.ncoeffs,))
        data[..., 0] = arr
        return Jet(self.ctx, data)

    def __add__(self, other) -> "Jet":
        other = other if isinstance(other, Jet) else self._coerce(other)
        a, b = self._align(other)
        return Jet(a.ctx, a.data + b.data)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(self.ctx, -self.data)

    def __sub__(self, other) -> "Jet":
        return self.__add__(-self._coerce(other) if not isinstance(other, Jet) else -other)

    def __rsub__(self, other) -> "Jet":
        return (-self).__add__(other)

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            arr = np.asarray(other, dtype=float)
            return Jet(self.ctx, self.data * arr[..., None])
        a, b = self._align(other)
        return Jet(a.ctx, _mul_data(a.ctx, a.data, b.data))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other, dtype=float))
        a, b = self._align(other)
        return a * b.reciprocal()

    def __rtruediv__(self, other) -> "Jet":
        return self._coerce(other) / self

    def __pow__(self, n: int) -> "Jet":
        return pow_int(self, n)

    def reciprocal(self) -> "Jet":
        c0 = self.data[..., 0]
        if np.any(c0 == 0.0):
            raise JetDomainError("division by a jet with zero constant term")
        coefs = [(-1.0) ** k / c0 ** (k + 1) for k in range(self.order + 1)]
        return self._compose(coefs)

    # -- calculus ------------------------------------------------------------

    def diff(self, var: int) -> "Jet":
        """Partial derivative with respect to variable ``var`` (order drops by one)."""
        if self.order == 0:
            raise JetShapeError("cannot differentiate an order-0 jet")
        if not 0 <= var < self.num_vars:
            raise JetShapeError(f"variable index {var} out of range")
        src, fac = self.ctx.diff_table(var)
        child = context(self.num_vars, self.order - 1)
        return Jet(child, self.data[..., src] * fac)

    def du(self) -> "Jet":
        """Derivative along the first variable (u by convention)."""
        return self.diff(0)

    # -- composition with univariate analytic functions -----------------------

    def _compose(self, coefs: list) -> "Jet":
        """Evaluate sum_k coefs[k] * (self - value)^k by Horner's rule."""
        delta = Jet(self.ctx, self.data.copy())
        delta.data[..., 0] = 0.0
        batch = self.data.shape[:-1]
        acc = const(coefs[-1], self.num_vars, self.order, shape=batch)
        for k in range(len(coefs) - 2, -1, -1):
            acc = acc * delta + self._coerce(coefs[k])
        return acc


# -- constructors --------------------------------------------------------------


def seed(var_index: int, value, num_vars: int, order: int) -> Jet:
    """Jet of the coordinate function x_var about the point where it equals ``value``."""
    if not 0 <= var_index < num_vars:
        raise JetShapeError(f"var_index {var_index} out of range for {num_vars} variables")
    ctx = context(num_vars, order)
    arr = np.asarray(value, dtype=float)
    data = np.zeros(arr.shape + (ctx.ncoeffs,))
    data[..., 0] = arr
    if order >= 1:
        e = [0] * num_vars
        e[var_index] = 1
        data[..., ctx.index(e)] = 1.0
    return Jet(ctx, data)


def const(value, num_vars: int, order: int, shape: tuple[int, ...] = ()) -> Jet:
    ctx = context(num_vars, order)
    arr = np.broadcast_to(np.asarray(value, dtype=float), shape) if shape else np.asarray(value, dtype=float)
    data = np.zeros(arr.shape + (ctx.ncoeffs,))
    data[..., 0] = arr
    return Jet(ctx, data)


def zeros(shape: tuple[int, ...], num_vars: int, order: int) -> Jet:
    ctx = context(num_vars, order)
    return Jet(ctx, np.zeros(shape + (ctx.ncoeffs,)))


# -- elementary functions -------------------------------------------------------


def sin(a: Jet) -> Jet:
    c0 = a.data[..., 0]
    cycle = [np.sin(c0), np.cos(c0), -np.sin(c0), -np.cos(c0)]
    coefs = [cycle[k % 4] / math.factorial(k) for k in range(a.order + 1)]
    return a._compose(coefs)


def cos(a: Jet) -> Jet:
    c0 = a.data[..., 0]
    cycle = [np.cos(c0), -np.sin(c0), -np.cos(c0), np.sin(c0)]
    coefs = [cycle[k % 4] / math.factorial(k) for k in range(a.order + 1)]
    return a._compose(coefs)


def exp(a: Jet) -> Jet:
    e0 = np.exp(a.data[..., 0])
    coefs = [e0 / math.factorial(k) for k in range(a.order + 1)]
    return a._compose(coefs)


def sqrt(a: Jet) -> Jet:
    c0 = a.data[..., 0]
    if np.any(c0 <= 0.0):
        raise JetDomainError("sqrt of a jet with non-positive constant term")
    coefs = []
    binom = 1.0
    for k in range(a.order + 1):
        coefs.append(binom * c0 ** (0.5 - k))
        binom *= (0.5 - k) / (k + 1)
    return a._compose(coefs)


def pow_int(a: Jet, n: int) -> Jet:
    if not isinstance(n, (int, np.integer)):
        raise JetDomainError("pow_int exponent must be an integer")
    n = int(n)
    if n < 0:
        return pow_int(a.reciprocal(), -n)
    result = const(1.0, a.num_vars, a.order, shape=a.data.shape[:-1])
    base = a
    while n:
        if n & 1:
            result = result * base
        base = base * base if n > 1 else base
        n >>= 1
    return result


# -- two-operand einsum over batch axes ------------------------------------------


def jet_einsum(subscripts: str, a: Jet, b: Jet) -> Jet:
    """einsum-style contraction of two batched jets, e.g. ``'ir,rjk->ijk'``.

    Repeated letters are contracted by summation; the coefficient axis is
    convolved (truncated product).  Only the two-operand form is supported.
    """
    lhs, out = subscripts.replace(" ", "").split("->")
    s1, s2 = lhs.split(",")
    if len(s1) != len(a.shape) or len(s2) != len(b.shape):
        raise JetShapeError(f"subscripts {subscripts!r} do not match operand shapes")
    a, b = a._align(b)
    contracted = sorted((set(s1) | set(s2)) - set(out))
    axes = list(out) + contracted
    dims = {}
    for letters, op in ((s1, a), (s2, b)):
        for letter, dim in zip(letters, op.shape):
            if dims.setdefault(letter, dim) != dim:
                raise JetShapeError(f"dimension mismatch for index {letter!r}")

    def expand(op: Jet, letters: str) -> np.ndarray:
        perm = [letters.index(ax) for ax in axes if ax in letters]
        arr = np.transpose(op.data, perm + [len(letters)])
        shape = [dims[ax] if ax in letters else 1 for ax in axes] + [op.ctx.ncoeffs]
        return arr.reshape(shape)

    prod = _mul_data(a.ctx, expand(a, s1), expand(b, s2))
    if contracted:
        prod = prod.sum(axis=tuple(range(len(out), len(axes))))
    return Jet(a.ctx, prod)
