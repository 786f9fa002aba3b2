"""Expression trees of named building blocks.

Products are stored left to right as written, so ``Product((A, B))`` is the
operator ``AB``: ``B`` acts first on a function, ``A`` last.  This is the
ordinary matrix product convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Tuple


class OpExpr:
    def __add__(self, other):
        return Sum((self, _wrap(other)))

    def __radd__(self, other):
        return Sum((_wrap(other), self))

    def __sub__(self, other):
        return Sum((self, Scale(-1, _wrap(other))))

    def __rsub__(self, other):
        return Sum((_wrap(other), Scale(-1, self)))

    def __neg__(self):
        return Scale(-1, self)

    def __mul__(self, other):
        if isinstance(other, OpExpr):
            return Product((self, other))
        return Scale(other, self)

    def __rmul__(self, other):
        return Scale(other, self)


@dataclass(frozen=True)
class Atom(OpExpr):
    name: str


@dataclass(frozen=True)
class Identity(OpExpr):
    pass


@dataclass(frozen=True)
class Scale(OpExpr):
    scalar: object
    expr: OpExpr


@dataclass(frozen=True)
class Sum(OpExpr):
    terms: Tuple[OpExpr, ...]


@dataclass(frozen=True)
class Product(OpExpr):
    factors: Tuple[OpExpr, ...]


def _wrap(x) -> OpExpr:
    if isinstance(x, OpExpr):
        return x
    return Scale(x, Identity())


def prod(*factors) -> Product:
    return Product(tuple(_wrap(f) for f in factors))


class UnboundNameError(KeyError):
    pass


def derive_dual_expr(e: OpExpr, name_map: Mapping[str, str]) -> OpExpr:
    """Rename atoms through ``name_map`` and reverse every product.

    If each block ``A`` satisfies ``A D = D B^dagger`` then the result is the
    operator dual to ``e`` with respect to the same ``D``.
    """
    if isinstance(e, Atom):
        if e.name not in name_map:
            raise UnboundNameError(e.name)
        return Atom(name_map[e.name])
    if isinstance(e, Identity):
        return e
    if isinstance(e, Scale):
        return Scale(e.scalar, derive_dual_expr(e.expr, name_map))
    if isinstance(e, Sum):
        return Sum(tuple(derive_dual_expr(t, name_map) for t in e.terms))
    if isinstance(e, Product):
        return Product(tuple(derive_dual_expr(f, name_map) for f in reversed(e.factors)))
    raise TypeError(f"not an OpExpr: {e!r}")


def atoms(e: OpExpr) -> set:
    if isinstance(e, Atom):
        return {e.name}
    if isinstance(e, Scale):
        return atoms(e.expr)
    if isinstance(e, (Sum, Product)):
        parts = e.terms if isinstance(e, Sum) else e.factors
        out = set()
        for p in parts:
            out |= atoms(p)
        return out
    return set()


def evaluate(e: OpExpr, env: Mapping, identity):
    """Evaluate to a concrete operator (anything supporting ``@ + scale``)."""
    if isinstance(e, Atom):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundNameError(e.name) from None
    if isinstance(e, Identity):
        return identity
    if isinstance(e, Scale):
        return evaluate(e.expr, env, identity).scale(e.scalar)
    if isinstance(e, Sum):
        parts = [evaluate(t, env, identity) for t in e.terms]
        out = parts[0]
        for p in parts[1:]:
            out = out + p
        return out
    if isinstance(e, Product):
        out = evaluate(e.factors[0], env, identity)
        for f in e.factors[1:]:
            out = out @ evaluate(f, env, identity)
        return out
    raise TypeError(f"not an OpExpr: {e!r}")


def apply_expr(e: OpExpr, env: Mapping[str, Callable], f):
    """Apply ``e`` to a function-like value ``f`` (supports ``+`` and ``*``).

    Atoms are bound to callables ``g -> g'``.  The rightmost factor of a
    product is applied first.
    """
    if isinstance(e, Atom):
        try:
            op = env[e.name]
        except KeyError:
            raise UnboundNameError(e.name) from None
        return op(f)
    if isinstance(e, Identity):
        return f
    if isinstance(e, Scale):
        return apply_expr(e.expr, env, f) * e.scalar
    if isinstance(e, Sum):
        parts = [apply_expr(t, env, f) for t in e.terms]
        out = parts[0]
        for p in parts[1:]:
            out = out + p
        return out
    if isinstance(e, Product):
        for factor in reversed(e.factors):
            f = apply_expr(factor, env, f)
        return f
    raise TypeError(f"not an OpExpr: {e!r}")


def render(e: OpExpr) -> str:
    if isinstance(e, Atom):
        return e.name
    if isinstance(e, Identity):
        return "I"
    if isinstance(e, Scale):
        return f"{e.scalar}*{render(e.expr)}"
    if isinstance(e, Sum):
        return "(" + " + ".join(render(t) for t in e.terms) + ")"
    if isinstance(e, Product):
        return " ".join(render(f) for f in e.factors)
    raise TypeError(f"not an OpExpr: {e!r}")
