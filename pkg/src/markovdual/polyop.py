"""Exact multivariate polynomials, differential operators and exp kernels."""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .statespace import SiteGraph


class VariableMismatch(ValueError):
    pass


class Poly:
    """Polynomial in ``nvars`` variables as ``{exponent tuple: coefficient}``.

    Coefficients may be any exact ring element (``Fraction``, ``GaussRat``,
    ``QuadExt``).  Zero coefficients are never stored.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Optional[dict] = None):
        self.nvars = nvars
        self.terms = {}
        for exps, c in (terms or {}).items():
            exps = tuple(exps)
            if len(exps) != nvars:
                raise VariableMismatch(f"exponent {exps} for {nvars} variables")
            if c != 0:
                self.terms[exps] = self.terms.get(exps, 0) + c
                if self.terms[exps] == 0:
                    del self.terms[exps]

    @classmethod
    def const(cls, nvars: int, c=1) -> "Poly":
        return cls(nvars, {(0,) * nvars: Fraction(c) if isinstance(c, int) else c})

    @classmethod
    def var(cls, nvars: int, i: int) -> "Poly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): Fraction(1)})

    @classmethod
    def monomial(cls, exps: Sequence[int], c=1) -> "Poly":
        return cls(len(exps), {tuple(exps): Fraction(c) if isinstance(c, int) else c})

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls(nvars)

    def _check(self, other: "Poly"):
        if other.nvars != self.nvars:
            raise VariableMismatch(f"{self.nvars} vs {other.nvars} variables")

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def coefficient(self, exps) -> object:
        return self.terms.get(tuple(exps), Fraction(0))

    def __add__(self, other):
        if isinstance(other, Poly):
            self._check(other)
            out = dict(self.terms)
            for e, c in other.terms.items():
                s = out.get(e, 0) + c
                if s != 0:
                    out[e] = s
                else:
                    out.pop(e, None)
            return Poly._raw(self.nvars, out)
        return self + Poly.const(self.nvars, other)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Poly):
            self._check(other)
            out: dict = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    out[e] = out.get(e, 0) + c1 * c2
            return Poly._raw(self.nvars, {e: c for e, c in out.items() if c != 0})
        if isinstance(other, ExpKernelElem):
            return NotImplemented
        return Poly._raw(self.nvars, {e: c * other for e, c in self.terms.items() if c * other != 0})

    def __rmul__(self, other):
        return self * other

    def __pow__(self, k: int):
        out = Poly.const(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self.terms == other.terms
        if other == 0:
            return self.is_zero()
        return NotImplemented

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    @classmethod
    def _raw(cls, nvars, terms):
        p = cls.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        return p

    def derivative(self, var: int, order: int = 1) -> "Poly":
        out: dict = {}
        for e, c in self.terms.items():
            k = e[var]
            if k < order:
                continue
            falling = 1
            for m in range(order):
                falling *= k - m
            ne = list(e)
            ne[var] = k - order
            out[tuple(ne)] = c * falling
        return Poly._raw(self.nvars, out)

    def partial(self, orders: Sequence[int]) -> "Poly":
        p = self
        for var, k in enumerate(orders):
            if k:
                p = p.derivative(var, k)
        return p

    def truncate(self, max_degree: int) -> "Poly":
        return Poly._raw(self.nvars, {e: c for e, c in self.terms.items() if sum(e) <= max_degree})

    def embed(self, nvars: int, positions: Sequence[int]) -> "Poly":
        """Rename variable ``k`` to ``positions[k]`` in a ``nvars`` ring."""
        out = {}
        for e, c in self.terms.items():
            ne = [0] * nvars
            for k, p in enumerate(positions):
                ne[p] += e[k]
            out[tuple(ne)] = out.get(tuple(ne), 0) + c
        return Poly(nvars, out)

    def map_coefficients(self, fn) -> "Poly":
        return Poly(self.nvars, {e: fn(c) for e, c in self.terms.items()})

    def evaluate(self, point: Sequence) -> object:
        total = 0
        for e, c in self.terms.items():
            t = c
            for x, k in zip(point, e):
                t = t * x ** k
            total = total + t
        return total

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms):
            mono = "*".join(f"x{i}^{k}" if k > 1 else f"x{i}" for i, k in enumerate(e) if k)
            parts.append(f"({self.terms[e]})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def all_monomials(nvars: int, max_degree: int) -> list:
    out = []
    for exps in itertools.product(range(max_degree + 1), repeat=nvars):
        if sum(exps) <= max_degree:
            out.append(Poly.monomial(exps))
    return out


class ExpKernelElem:
    """``p(x, y) * exp(-s x y)`` with polynomial ``p`` in two variables."""

    __slots__ = ("p", "s")

    def __init__(self, p: Poly, s):
        if p.nvars != 2:
            raise VariableMismatch("ExpKernelElem needs a polynomial in (x, y)")
        self.p = p
        self.s = Fraction(s)

    @classmethod
    def kernel(cls, s) -> "ExpKernelElem":
        return cls(Poly.const(2, 1), s)

    def _check(self, other):
        if not isinstance(other, ExpKernelElem) or other.s != self.s:
            raise VariableMismatch("ExpKernelElem values must share s")

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        self._check(other)
        return ExpKernelElem(self.p + other.p, self.s)

    __radd__ = __add__

    def __neg__(self):
        return ExpKernelElem(-self.p, self.s)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Poly):
            return ExpKernelElem(self.p * other, self.s)
        return ExpKernelElem(self.p * other, self.s)

    __rmul__ = __mul__

    def derivative(self, var: int, order: int = 1) -> "ExpKernelElem":
        p = self.p
        other = Poly.var(2, 1 - var)
        for _ in range(order):
            p = p.derivative(var) - other * p * self.s
        return ExpKernelElem(p, self.s)

    def partial(self, orders: Sequence[int]) -> "ExpKernelElem":
        out = self
        for var, k in enumerate(orders):
            if k:
                out = out.derivative(var, k)
        return out

    def is_zero(self) -> bool:
        return self.p.is_zero()

    def __eq__(self, other):
        if isinstance(other, ExpKernelElem):
            return self.s == other.s and self.p == other.p
        return NotImplemented

    def __repr__(self):
        return f"({self.p}) * exp(-{self.s} x y)"


class DiffOp:
    """Finite sum of ``coefficient(x) * d^orders``.

    ``terms`` is a list of ``(Poly, orders)`` pairs, all in ``nvars``
    variables.
    """

    def __init__(self, nvars: int, terms: Iterable = ()):
        self.nvars = nvars
        merged: dict = {}
        for coef, orders in terms:
            orders = tuple(orders)
            if coef.nvars != nvars or len(orders) != nvars:
                raise VariableMismatch("term does not match operator arity")
            merged[orders] = merged[orders] + coef if orders in merged else coef
        self.terms = [(c, o) for o, c in sorted(merged.items()) if not c.is_zero()]

    @classmethod
    def multiply_by(cls, p: Poly) -> "DiffOp":
        return cls(p.nvars, [(p, (0,) * p.nvars)])

    @classmethod
    def d(cls, nvars: int, var: int, order: int = 1) -> "DiffOp":
        o = [0] * nvars
        o[var] = order
        return cls(nvars, [(Poly.const(nvars, 1), tuple(o))])

    def __add__(self, other: "DiffOp") -> "DiffOp":
        if other.nvars != self.nvars:
            raise VariableMismatch("operator arity mismatch")
        return DiffOp(self.nvars, self.terms + other.terms)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "DiffOp":
        return DiffOp(self.nvars, [(p * c, o) for p, o in self.terms])

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def degree_shift(self) -> int:
        """Largest increase of polynomial degree this operator can cause."""
        return max((p.degree() - sum(o) for p, o in self.terms), default=0)

    def safe_output_degree(self, input_degree: int) -> int:
        return input_degree + self.degree_shift()

    def apply(self, f):
        if isinstance(f, Poly):
            if f.nvars != self.nvars:
                raise VariableMismatch(f"operator on {self.nvars} vars, input has {f.nvars}")
            out = Poly.zero(self.nvars)
            for coef, orders in self.terms:
                out = out + coef * f.partial(orders)
            return out
        if isinstance(f, ExpKernelElem):
            if self.nvars != 2:
                raise VariableMismatch("exp-kernel inputs need a two-variable operator")
            out = ExpKernelElem(Poly.zero(2), f.s)
            for coef, orders in self.terms:
                out = out + f.partial(orders) * coef
            return out
        raise TypeError(f"cannot apply a DiffOp to {type(f).__name__}")

    __call__ = apply

    def lift(self, nvars: int, positions: Sequence[int]) -> "DiffOp":
        """Act on variables ``positions`` of a ``nvars``-variable space."""
        terms = []
        for coef, orders in self.terms:
            no = [0] * nvars
            for k, p in enumerate(positions):
                no[p] += orders[k]
            terms.append((coef.embed(nvars, positions), tuple(no)))
        return DiffOp(nvars, terms)

    def __repr__(self):
        return " + ".join(f"[{p}]*d{o}" for p, o in self.terms) or "0"


def apply(op: DiffOp, f):
    return op.apply(f)


def wf_generator(s) -> DiffOp:
    """Wright-Fisher generator ``x(1-x) f'' + s x(1-x) f'`` in one variable."""
    s = Fraction(s)
    x = Poly.var(1, 0)
    a = x * (1 - x)
    return DiffOp(1, [(a, (2,)), (a * s, (1,))])


def bep_generator(graph: SiteGraph, alpha: Sequence) -> DiffOp:
    """Brownian energy process generator on ``graph.n`` variables.

    ``1/2 sum_{i,j} q(i,j) [(a_j z_i - a_i z_j)(d_j - d_i) + z_i z_j (d_j - d_i)^2]``.
    """
    n = graph.n
    alpha = [Fraction(a) for a in alpha]
    if len(alpha) != n:
        raise ValueError("need one alpha per site")
    if any(a <= 0 for a in alpha):
        raise ValueError("alpha must be positive")
    z = [Poly.var(n, i) for i in range(n)]
    terms = []

    def order(**kw):
        o = [0] * n
        for k, v in kw.items():
            o[int(k[1:])] += v
        return tuple(o)

    half = Fraction(1, 2)
    for i, j, q in graph.ordered_pairs():
        drift = (z[i] * alpha[j] - z[j] * alpha[i]) * (q * half)
        terms.append((drift, order(**{f"v{j}": 1})))
        terms.append((-drift, order(**{f"v{i}": 1})))
        diff = z[i] * z[j] * (q * half)
        # (d_j - d_i)^2 = d_j^2 - 2 d_i d_j + d_i^2
        terms.append((diff, order(**{f"v{j}": 2})))
        terms.append((diff, order(**{f"v{i}": 2})))
        terms.append((diff * -2, order(**{f"v{i}": 1, f"v{j}": 1})))
    return DiffOp(n, terms)


class CappedOp:
    """Linear map on polynomials of degree at most ``cap``.

    Output terms above the cap are dropped, which is the polynomial analogue
    of truncating a matrix to a finite basis.
    """

    def __init__(self, op: DiffOp, cap: int):
        self.op = op
        self.cap = cap

    def apply(self, f: Poly) -> Poly:
        if f.degree() > self.cap:
            raise ValueError(f"input degree {f.degree()} exceeds cap {self.cap}")
        return self.op.apply(f).truncate(self.cap)

    __call__ = apply


def heisenberg_blocks(cap: int):
    """``(A-, A+) = (d/dx, multiplication by x)`` on degree <= ``cap``."""
    if cap < 1:
        raise ValueError("degree cap must be >= 1")
    lower = CappedOp(DiffOp.d(1, 0), cap)
    raise_ = CappedOp(DiffOp.multiply_by(Poly.var(1, 0)), cap)
    return lower, raise_


def gamma_kernel(x: Sequence[int], alpha: Sequence) -> Poly:
    """Product kernel ``prod_i z_i^{x_i} Gamma(alpha_i) / Gamma(alpha_i + x_i)``.

    This normalization is the one fixed by ``z Q(z, x) = (alpha + x) Q(z, x + 1)``
    with ``Q(z, 0) = 1``; the rising-factorial numerator form fails it.
    """
    coef = Fraction(1)
    for xi, a in zip(x, alpha):
        for k in range(xi):
            coef /= Fraction(a) + k
    return Poly.monomial(tuple(x), coef)
