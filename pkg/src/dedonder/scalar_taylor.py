"""Generic scalars: plain floats and truncated multivariate Taylor series.

Every geometric formula in this package is written once against
:class:`AlgArray`, an array whose entries live in a finite-dimensional
commutative algebra ``R + N`` with ``N`` nilpotent.  Choosing the algebra
picks what the formula computes:

* :data:`REALS` -- plain values;
* :func:`taylor_algebra` ``(n, K)`` -- Taylor coefficients through total
  degree ``K`` in ``n`` expansion variables (``n=1, K=1`` is a dual number);
* :func:`tensor` ``(A, B)`` -- nested expansions, e.g. a gradient algebra
  tensored with a directional dual gives mixed second derivatives.

Products use sparse structure constants: the list of coefficient pairs
``(i, j)`` whose product lands on ``k``.  A product of two arrays is then a
gather, an elementwise multiply and a segmented sum, all vectorized over the
array shape.  Contractions (:func:`einsum`) carry the pair axis as a batch
axis, so a tensor contraction costs one numpy ``einsum`` call regardless of
the algebra.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

ZERO_TOL = 1e-13


class ScalarDomainError(ArithmeticError):
    """Division by, or sqrt/log of, a value whose constant part is invalid."""


class Algebra:
    """Truncated commutative algebra given by its sparse structure constants.

    ``order`` is the nilpotency bound: any product of ``order + 1`` elements
    with zero constant part vanishes.  Coefficient 0 is the unit.
    """

    def __init__(self, dim: int, order: int, pi, pj, pk, name: str = ""):
        self.dim = int(dim)
        self.order = int(order)
        self.name = name
        pi, pj, pk = (np.asarray(v, dtype=np.intp) for v in (pi, pj, pk))
        perm = np.argsort(pk, kind="stable")
        self.pi, self.pj, self.pk = pi[perm], pj[perm], pk[perm]
        targets, starts = np.unique(self.pk, return_index=True)
        self._targets = targets
        self._starts = starts
        self._dense_targets = len(targets) == self.dim

    @property
    def npairs(self) -> int:
        return len(self.pk)

    def __repr__(self) -> str:
        return f"Algebra({self.name or self.dim}, order={self.order})"

    def _reduce(self, prod: np.ndarray) -> np.ndarray:
        summed = np.add.reduceat(prod, self._starts, axis=-1)
        if self._dense_targets:
            return summed
        out = np.zeros(prod.shape[:-1] + (self.dim,))
        out[..., self._targets] = summed
        return out

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self._reduce(a[..., self.pi] * b[..., self.pj])

    def contract(self, subscripts: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        lhs, out = subscripts.replace(" ", "").split("->")
        sa, sb = lhs.split(",")
        batched = f"{sa}Z,{sb}Z->{out}Z"
        prod = np.einsum(batched, a[..., self.pi], b[..., self.pj], optimize=False)
        return self._reduce(prod)


REALS = Algebra(1, 0, [0], [0], [0], name="reals")


def _multi_indices(n: int, order: int) -> list[tuple[int, ...]]:
    """Exponent vectors of total degree <= order in graded-lex order."""
    out = []
    for d in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(n), d):
            m = [0] * n
            for v in combo:
                m[v] += 1
            out.append(tuple(m))
    return out


class TaylorAlgebra(Algebra):
    """Taylor coefficients ``f^(m)(base)/m!`` for ``|m| <= order`` in ``n`` variables."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.monomials = _multi_indices(nvars, order)
        self.index = {m: r for r, m in enumerate(self.monomials)}
        dim = len(self.monomials)
        if order == 0:
            pi, pj, pk = [0], [0], [0]
        elif order == 1:
            r = np.arange(1, dim)
            pi = np.concatenate([[0], np.zeros_like(r), r])
            pj = np.concatenate([[0], r, np.zeros_like(r)])
            pk = np.concatenate([[0], r, r])
        else:
            pi, pj, pk = [], [], []
            degs = [sum(m) for m in self.monomials]
            for i, a in enumerate(self.monomials):
                for j, b in enumerate(self.monomials):
                    if degs[i] + degs[j] <= order:
                        pi.append(i)
                        pj.append(j)
                        pk.append(self.index[tuple(x + y for x, y in zip(a, b))])
        super().__init__(dim, order, pi, pj, pk, name=f"taylor({nvars},{order})")

    def rank(self, m: Sequence[int]) -> int:
        m = tuple(int(v) for v in m)
        if len(m) != self.nvars or sum(m) > self.order or min(m) < 0:
            raise ValueError(f"multi-index {m} outside taylor({self.nvars},{self.order})")
        return self.index[m]

    def unit(self, var: int) -> tuple[int, ...]:
        m = [0] * self.nvars
        m[var] = 1
        return tuple(m)

    def variables(self, base) -> "AlgArray":
        """Seed ``x_i = base_i + d_i``; ``base`` may be numeric or an AlgArray."""
        base = np.asarray(base, dtype=float)
        c = np.zeros(base.shape + (self.dim,))
        c[..., 0] = base
        if self.order >= 1:
            for i in range(self.nvars):
                c[..., i, self.index[self.unit(i)]] = 1.0
        return AlgArray(self, c)

    def diff(self, arr: "AlgArray", var: int) -> "AlgArray":
        """Series of ``d f / d x_var``, truncated to order - 1."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 series")
        low = taylor_algebra(self.nvars, self.order - 1)
        idx, scale = [], []
        for m in low.monomials:
            up = list(m)
            up[var] += 1
            idx.append(self.index[tuple(up)])
            scale.append(up[var])
        return AlgArray(low, arr.c[..., idx] * np.asarray(scale, dtype=float))

    def truncate(self, arr: "AlgArray", order: int) -> "AlgArray":
        low = taylor_algebra(self.nvars, order)
        idx = [self.index[m] for m in low.monomials]
        return AlgArray(low, arr.c[..., idx])


@lru_cache(maxsize=None)
def taylor_algebra(nvars: int, order: int) -> TaylorAlgebra:
    if order < 0:
        raise ValueError("order must be non-negative")
    return TaylorAlgebra(nvars, order)


def dual_algebra() -> TaylorAlgebra:
    return taylor_algebra(1, 1)


class TensorAlgebra(Algebra):
    """``A (x) B``; coefficient ``(i, j)`` is stored at ``i * B.dim + j``."""

    def __init__(self, left: Algebra, right: Algebra):
        self.left, self.right = left, right
        db = right.dim
        pi = (left.pi[:, None] * db + right.pi[None, :]).ravel()
        pj = (left.pj[:, None] * db + right.pj[None, :]).ravel()
        pk = (left.pk[:, None] * db + right.pk[None, :]).ravel()
        super().__init__(left.dim * db, left.order + right.order, pi, pj, pk,
                         name=f"{left.name}*{right.name}")
        # first-order seeds on the left allow a cheaper product rule
        self._first_order = isinstance(left, TaylorAlgebra) and left.order == 1

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if not self._first_order:
            return super().mul(a, b)
        R = self.right
        a = a.reshape(a.shape[:-1] + (self.left.dim, R.dim))
        b = b.reshape(b.shape[:-1] + (self.left.dim, R.dim))
        a0 = a[..., :1, R.pi]
        full = a0 * b[..., R.pj]
        full[..., 1:, :] += a[..., 1:, R.pi] * b[..., :1, R.pj]
        res = R._reduce(full)
        return res.reshape(res.shape[:-2] + (self.dim,))

    def contract(self, subscripts: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Product rule ``(a0 + a_i e_i)(b0 + b_i e_i) = a0 b0 + (a0 b_i + a_i b0) e_i``."""
        if not self._first_order:
            return super().contract(subscripts, a, b)
        R = self.right
        lhs, out = subscripts.replace(" ", "").split("->")
        sa, sb = lhs.split(",") if lhs else ("", "")
        dl, dr = self.left.dim, R.dim
        a = a.reshape(a.shape[:-1] + (dl, dr))
        b = b.reshape(b.shape[:-1] + (dl, dr))
        a0 = a[..., 0, R.pi]
        b0 = b[..., 0, R.pj]
        full = np.einsum(f"{sa}Z,{sb}YZ->{out}YZ", a0, b[..., R.pj], optimize=False)
        full[..., 1:, :] += np.einsum(f"{sa}YZ,{sb}Z->{out}YZ", a[..., 1:, R.pi], b0,
                                      optimize=False)
        res = R._reduce(full)
        return res.reshape(res.shape[:-2] + (self.dim,))

    def embed_left(self, arr: "AlgArray") -> "AlgArray":
        c = np.zeros(arr.shape + (self.left.dim, self.right.dim))
        c[..., 0] = _coeffs_in(arr, self.left)
        return AlgArray(self, c.reshape(arr.shape + (self.dim,)))

    def embed_right(self, arr: "AlgArray") -> "AlgArray":
        c = np.zeros(arr.shape + (self.left.dim, self.right.dim))
        c[..., 0, :] = _coeffs_in(arr, self.right)
        return AlgArray(self, c.reshape(arr.shape + (self.dim,)))

    def split(self, arr: "AlgArray") -> np.ndarray:
        return arr.c.reshape(arr.shape + (self.left.dim, self.right.dim))

    def right_coeff(self, arr: "AlgArray", j: int) -> "AlgArray":
        """Coefficient of right-basis element ``j`` as an element of the left algebra."""
        return AlgArray(self.left, np.ascontiguousarray(self.split(arr)[..., j]))

    def left_coeff(self, arr: "AlgArray", i: int) -> "AlgArray":
        return AlgArray(self.right, np.ascontiguousarray(self.split(arr)[..., i, :]))


@lru_cache(maxsize=None)
def tensor(left: Algebra, right: Algebra) -> TensorAlgebra:
    return TensorAlgebra(left, right)


def _coeffs_in(arr, alg: Algebra) -> np.ndarray:
    if isinstance(arr, AlgArray):
        if arr.alg is alg:
            return arr.c
        if arr.alg is REALS:
            c = np.zeros(arr.shape + (alg.dim,))
            c[..., 0] = arr.c[..., 0]
            return c
        raise TypeError(f"cannot mix {arr.alg!r} with {alg!r}")
    val = np.asarray(arr, dtype=float)
    c = np.zeros(val.shape + (alg.dim,))
    c[..., 0] = val
    return c


def _pick(a, b) -> Algebra:
    aa = a.alg if isinstance(a, AlgArray) else REALS
    ab = b.alg if isinstance(b, AlgArray) else REALS
    if aa is ab or ab is REALS:
        return aa
    if aa is REALS:
        return ab
    raise TypeError(f"cannot mix {aa!r} with {ab!r}")


class AlgArray:
    """Array of algebra elements: ``c`` has shape ``shape + (alg.dim,)``.

    Immutable by convention; every operation returns a new array.
    """

    __slots__ = ("alg", "c")
    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, alg: Algebra, c: np.ndarray):
        self.alg = alg
        self.c = c

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, value, alg: Algebra = REALS) -> "AlgArray":
        return cls(alg, _coeffs_in(value, alg))

    def embed(self, alg: Algebra) -> "AlgArray":
        return AlgArray(alg, _coeffs_in(self, alg))

    # -- views ----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.c.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.c.ndim - 1

    @property
    def const(self) -> np.ndarray:
        return self.c[..., 0]

    def nilpotent(self) -> "AlgArray":
        c = self.c.copy()
        c[..., 0] = 0.0
        return AlgArray(self.alg, c)

    def __getitem__(self, key) -> "AlgArray":
        if not isinstance(key, tuple):
            key = (key,)
        return AlgArray(self.alg, self.c[key + (slice(None),)])

    def __len__(self) -> int:
        return self.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def transpose(self, *axes) -> "AlgArray":
        axes = tuple(axes) if axes else tuple(reversed(range(self.ndim)))
        return AlgArray(self.alg, self.c.transpose(axes + (self.ndim,)))

    def reshape(self, *shape) -> "AlgArray":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return AlgArray(self.alg, self.c.reshape(tuple(shape) + (self.alg.dim,)))

    def sum(self, axis=None) -> "AlgArray":
        if axis is None:
            axis = tuple(range(self.ndim))
        axis = axis if isinstance(axis, tuple) else (axis,)
        axis = tuple(a % self.ndim for a in axis)
        return AlgArray(self.alg, self.c.sum(axis=axis))

    def __repr__(self) -> str:
        return f"AlgArray({self.alg!r}, shape={self.shape})"

    # -- arithmetic -----------------------------------------------------
    def __neg__(self) -> "AlgArray":
        return AlgArray(self.alg, -self.c)

    def __pos__(self) -> "AlgArray":
        return self

    def __add__(self, other) -> "AlgArray":
        alg = _pick(self, other)
        return AlgArray(alg, _coeffs_in(self, alg) + _coeffs_in(other, alg))

    __radd__ = __add__

    def __sub__(self, other) -> "AlgArray":
        alg = _pick(self, other)
        return AlgArray(alg, _coeffs_in(self, alg) - _coeffs_in(other, alg))

    def __rsub__(self, other) -> "AlgArray":
        return (-self).__add__(other)

    def __mul__(self, other) -> "AlgArray":
        if not isinstance(other, AlgArray):
            return AlgArray(self.alg, self.c * np.asarray(other, dtype=float)[..., None])
        if other.alg is REALS and self.alg is not REALS:
            return AlgArray(self.alg, self.c * other.c)
        if self.alg is REALS and other.alg is not REALS:
            return AlgArray(other.alg, other.c * self.c)
        alg = _pick(self, other)
        return AlgArray(alg, alg.mul(self.c, other.c))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "AlgArray":
        if not isinstance(other, AlgArray):
            other = np.asarray(other, dtype=float)
            if np.any(np.abs(other) < ZERO_TOL):
                raise ScalarDomainError("division by a value with zero constant part")
            return AlgArray(self.alg, self.c / other[..., None])
        if other.alg.order == 0 and self.alg.order == 0:
            _guard_nonzero(other.const)
            return AlgArray(self.alg, self.c / other.c)
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "AlgArray":
        return self.reciprocal() * other

    def __pow__(self, n) -> "AlgArray":
        return ipow(self, n)

    # -- comparisons on the constant part (scalars only) -----------------
    def _scalar_const(self) -> float:
        if self.shape != ():
            raise TypeError("comparison is defined for scalar elements only")
        return float(self.c[0])

    def __float__(self) -> float:
        return self._scalar_const()

    def __lt__(self, other):
        return self._scalar_const() < float(other)

    def __le__(self, other):
        return self._scalar_const() <= float(other)

    def __gt__(self, other):
        return self._scalar_const() > float(other)

    def __ge__(self, other):
        return self._scalar_const() >= float(other)

    # -- analytic functions ---------------------------------------------
    def _compose(self, derivs: Sequence[np.ndarray]) -> "AlgArray":
        """``sum_k derivs[k] * n**k`` where ``self = const + n``.

        ``derivs[k]`` must already hold ``f^(k)(const) / k!``.
        """
        out = np.zeros_like(self.c)
        out[..., 0] = derivs[0]
        if self.alg.order == 0:
            return AlgArray(self.alg, out)
        n = self.nilpotent().c
        power = n
        for k in range(1, self.alg.order + 1):
            out += derivs[k][..., None] * power
            if k < self.alg.order:
                power = self.alg.mul(power, n)
        return AlgArray(self.alg, out)

    def reciprocal(self) -> "AlgArray":
        c0 = self.const
        _guard_nonzero(c0)
        inv = 1.0 / c0
        derivs = [inv]
        for _ in range(self.alg.order):
            derivs.append(-derivs[-1] * inv)
        return self._compose(derivs)

    def sqrt(self) -> "AlgArray":
        c0 = self.const
        if np.any(c0 <= ZERO_TOL):
            raise ScalarDomainError("sqrt of a value with nonpositive constant part")
        root = np.sqrt(c0)
        derivs = [root]
        for k in range(1, self.alg.order + 1):
            derivs.append(_binom(0.5, k) * root * c0 ** (-k))
        return self._compose(derivs)

    def exp(self) -> "AlgArray":
        e = np.exp(self.const)
        return self._compose([e / math.factorial(k) for k in range(self.alg.order + 1)])

    def log(self) -> "AlgArray":
        c0 = self.const
        if np.any(c0 <= ZERO_TOL):
            raise ScalarDomainError("log of a value with nonpositive constant part")
        derivs = [np.log(c0)]
        for k in range(1, self.alg.order + 1):
            derivs.append((-1.0) ** (k - 1) / k * c0 ** (-k))
        return self._compose(derivs)

    def sin(self) -> "AlgArray":
        s, co = np.sin(self.const), np.cos(self.const)
        cycle = [s, co, -s, -co]
        return self._compose([cycle[k % 4] / math.factorial(k)
                              for k in range(self.alg.order + 1)])

    def cos(self) -> "AlgArray":
        s, co = np.sin(self.const), np.cos(self.const)
        cycle = [co, -s, -co, s]
        return self._compose([cycle[k % 4] / math.factorial(k)
                              for k in range(self.alg.order + 1)])


def _binom(a: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= (a - i) / (i + 1)
    return out


def _guard_nonzero(c0) -> None:
    if np.any(np.abs(c0) < ZERO_TOL):
        raise ScalarDomainError("division by a value with zero constant part")


# -- scalar-contract dispatch: works for floats and AlgArrays alike ---------

def sqrt(x):
    if isinstance(x, AlgArray):
        return x.sqrt()
    if x <= ZERO_TOL:
        raise ScalarDomainError("sqrt of a nonpositive value")
    return float(np.sqrt(x))


def exp(x):
    return x.exp() if isinstance(x, AlgArray) else float(np.exp(x))


def log(x):
    if isinstance(x, AlgArray):
        return x.log()
    if x <= ZERO_TOL:
        raise ScalarDomainError("log of a nonpositive value")
    return float(np.log(x))


def sin(x):
    return x.sin() if isinstance(x, AlgArray) else float(np.sin(x))


def cos(x):
    return x.cos() if isinstance(x, AlgArray) else float(np.cos(x))


def div(a, b):
    if isinstance(a, AlgArray) or isinstance(b, AlgArray):
        if not isinstance(a, AlgArray):
            return AlgArray.constant(a, b.alg) / b
        return a / b
    if abs(b) < ZERO_TOL:
        raise ScalarDomainError("division by a value with zero constant part")
    return a / b


def ipow(x, n: int):
    """Integer power by left-to-right repeated multiplication."""
    if int(n) != n:
        raise ValueError("only integer exponents are supported")
    n = int(n)
    if n == 0:
        return x * 0.0 + 1.0
    if n < 0:
        return div(1.0, ipow(x, -n))
    out = x
    for _ in range(n - 1):
        out = out * x
    return out


# -- tensor helpers ------------------------------------------------------------

def asalg(x, alg: Algebra | None = None) -> AlgArray:
    if isinstance(x, AlgArray):
        return x if alg is None or x.alg is alg else x.embed(alg)
    return AlgArray.constant(x, alg or REALS)


def einsum(subscripts: str, a, b=None):
    """Contraction of one or two operands; numeric operands act as constants."""
    if b is None:
        lhs, out = subscripts.replace(" ", "").split("->")
        return AlgArray(a.alg, np.einsum(f"{lhs}Z->{out}Z", a.c))
    a_alg, b_alg = isinstance(a, AlgArray), isinstance(b, AlgArray)
    lhs, out = subscripts.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    if a_alg and b_alg and a.alg is not REALS and b.alg is not REALS:
        alg = _pick(a, b)
        return AlgArray(alg, alg.contract(subscripts, a.c, b.c))
    if a_alg and (not b_alg or b.alg is REALS):
        bv = b.const if b_alg else np.asarray(b, dtype=float)
        return AlgArray(a.alg, np.einsum(f"{sa}Z,{sb}->{out}Z", a.c, bv))
    if b_alg:
        av = a.const if a_alg else np.asarray(a, dtype=float)
        return AlgArray(b.alg, np.einsum(f"{sa},{sb}Z->{out}Z", av, b.c))
    return np.einsum(subscripts, a, b)


def stack(items: Sequence, axis: int = 0, alg: Algebra | None = None) -> AlgArray:
    if alg is None:
        alg = REALS
        for it in items:
            if isinstance(it, AlgArray) and it.alg is not REALS:
                alg = it.alg
                break
    cs = [_coeffs_in(it, alg) for it in items]
    nd = np.ndim(cs[0]) - 1
    return AlgArray(alg, np.stack(cs, axis=axis % (nd + 1)))


def inverse_matrix(m: AlgArray) -> AlgArray:
    """Inverse of a square algebra-valued matrix by a terminating Neumann series."""
    m0 = np.asarray(m.const, dtype=float)
    det0 = np.linalg.det(m0)
    if abs(det0) < ZERO_TOL:
        raise ScalarDomainError(f"singular matrix (det={det0:.3e})")
    a0 = np.linalg.inv(m0)
    out = AlgArray.constant(a0, m.alg)
    if m.alg.order == 0:
        return out
    n = m.nilpotent()
    term = out
    for _ in range(m.alg.order):
        term = -einsum("ij,jk->ik", a0, einsum("ij,jk->ik", n, term))
        out = out + term
    return out


_PERMS4 = list(itertools.permutations(range(4)))
_PERM_SIGNS4 = np.array([
    (-1) ** sum(1 for i in range(4) for j in range(i + 1, 4) if p[i] > p[j])
    for p in _PERMS4
], dtype=float)


def det4(m: AlgArray) -> AlgArray:
    """Leibniz expansion of a 4x4 determinant (24 signed products)."""
    rows = np.array(_PERMS4)  # (24, 4)
    cols = np.broadcast_to(np.arange(4), rows.shape)
    factors = m[rows, cols]  # (24, 4)
    prod = factors[:, 0] * factors[:, 1]
    prod = prod * factors[:, 2]
    prod = prod * factors[:, 3]
    return (prod * _PERM_SIGNS4).sum(axis=0)


# -- operations on scalar functions -----------------------------------------

def taylor_lift(f: Callable, base, order: int) -> AlgArray:
    """Taylor-expand ``f`` around ``base`` through total degree ``order``.

    ``f`` receives an AlgArray of shape ``(n,)`` holding the seeded variables.
    """
    base = np.asarray(base, dtype=float)
    if order > 4:
        raise ValueError("taylor_lift supports order <= 4")
    alg = taylor_algebra(len(base), order)
    return asalg(f(alg.variables(base)), alg)


def extract_partial(t: AlgArray, m: Sequence[int]) -> np.ndarray | float:
    """Raw partial derivative ``d^m f`` (i.e. ``m! * coeff(m)``)."""
    alg = t.alg
    if not isinstance(alg, TaylorAlgebra):
        raise TypeError("extract_partial needs a Taylor series")
    m = tuple(int(v) for v in m)
    if sum(m) > alg.order:
        raise ValueError(f"|m|={sum(m)} exceeds the truncation order {alg.order}")
    fact = math.prod(math.factorial(v) for v in m)
    out = fact * t.c[..., alg.rank(m)]
    return float(out) if np.ndim(out) == 0 else out


def dual_eval(f: Callable, point, direction) -> tuple:
    """Value and directional derivative of ``f`` at ``point`` along ``direction``."""
    point = np.asarray(point, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if point.shape != direction.shape:
        raise ValueError("direction and point must have the same shape")
    alg = dual_algebra()
    c = np.zeros(point.shape + (2,))
    c[..., 0] = point
    c[..., 1] = direction
    res = asalg(f(AlgArray(alg, c)), alg)
    val, der = res.c[..., 0], res.c[..., 1]
    if np.ndim(val) == 0:
        return float(val), float(der)
    return val, der


def derivative_tensors(t: AlgArray) -> list[np.ndarray]:
    """All partial derivatives of a Taylor-lifted array, as symmetric full tensors.

    Returns ``[f, df, d2f, ...]`` where ``df[..., a]``, ``d2f[..., a, b]`` etc.
    """
    alg = t.alg
    n, order = alg.nvars, alg.order
    out = [np.array(t.c[..., 0])]
    for k in range(1, order + 1):
        arr = np.zeros(t.shape + (n,) * k)
        for idx in itertools.product(range(n), repeat=k):
            m = [0] * n
            for v in idx:
                m[v] += 1
            fact = math.prod(math.factorial(v) for v in m)
            arr[(Ellipsis,) + idx] = fact * t.c[..., alg.index[tuple(m)]]
        out.append(arr)
    return out
