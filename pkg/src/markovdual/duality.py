"""Duality, intertwining and symmetry checks.

A duality function ``D`` between generators ``L`` and ``L_hat`` satisfies
``L D = D L_hat^dagger``; an intertwining kernel ``K`` satisfies
``L K = K L_hat``.  All checks here build the residual matrix and report it;
exact operators pass only when the residual is identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .exactnum import rat_str
from .linop import (EXACT, SparseOp, adjoint, commutator, compose,
                    kron_all, left_null_space, null_space_rows, rank, transpose)
from .models import LSParams, ParameterError, sip_generator, wf_moment_dual
from .opexpr import Atom, Identity, Product, Scale, Sum, apply_expr, derive_dual_expr, evaluate
from .polyop import DiffOp, ExpKernelElem, Poly, bep_generator, gamma_kernel, wf_generator
from .statespace import BudgetError, ConfigSpace, SiteGraph

WITNESS_CAP = 10


class KernelError(ValueError):
    pass


class NotASymmetryError(ValueError):
    pass


class NotInvariantError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return rat_str(v)
    return str(v)


@dataclass
class DualityReport:
    kind: str
    backend: str
    residual: SparseOp
    passed: bool
    rows: list
    max_abs: float
    tol: Optional[float] = None
    warnings: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def witnesses(self, limit: int = WITNESS_CAP) -> list:
        keep = set(self.rows)
        out = []
        for (i, j), v in self.residual.items():
            if i in keep:
                out.append({"row": i, "col": j, "value": _fmt(v)})
                if len(out) >= limit:
                    break
        return out

    def summary(self) -> dict:
        if self.backend == EXACT:
            residual = "exact-zero" if self.passed else {"max-abs": self.max_abs}
        else:
            residual = {"max-abs": self.max_abs}
        return {
            "kind": self.kind, "backend": self.backend, "passed": self.passed,
            "residual": residual, "tol": self.tol, "rows_checked": len(self.rows),
            "warnings": self.warnings, "witnesses": self.witnesses(), **self.extra,
        }


def _judge(residual: SparseOp, tol: Optional[float]):
    rows = residual.safe_rows()
    restricted = residual.restrict_rows(rows)
    size = restricted.max_abs()
    if residual.field == EXACT:
        return restricted.is_zero(), rows, size
    return size <= (1e-12 if tol is None else tol), rows, size


def _rank_warnings(D: SparseOp) -> list:
    if D.is_zero():
        return ["rank-0: duality function is identically zero (vacuous)"]
    if D.field == EXACT and D.shape[0] * D.shape[1] <= 1 << 16:
        r = rank(D)
        if r < min(D.shape):
            return [f"rank-deficient: rank {r} < {min(D.shape)}"]
    return []


def check_duality(L: SparseOp, L_hat: SparseOp, D: SparseOp,
                  tol: Optional[float] = None) -> DualityReport:
    """Residual of ``L D - D L_hat^dagger``; the transposed statement
    ``L_hat D^dagger = D^dagger L^dagger`` is recorded alongside."""
    if L.shape[1] != D.shape[0] or L_hat.shape[0] != D.shape[1]:
        raise ValueError(f"incompatible shapes L{L.shape} D{D.shape} L_hat{L_hat.shape}")
    residual = compose(L, D) - compose(D, adjoint(L_hat))
    passed, rows, size = _judge(residual, tol)
    extra = {}
    if not L.boundary_rows and not L_hat.boundary_rows:
        sym = compose(L_hat, adjoint(D)) - compose(adjoint(D), adjoint(L))
        extra["symmetric_passed"] = _judge(sym, tol)[0]
    return DualityReport("duality", residual.field, residual, passed, rows, size,
                         tol, _rank_warnings(D), extra)


def is_probability_kernel(K: SparseOp) -> bool:
    for (_, _), v in K.items():
        if v < 0:
            return False
    one = Fraction(1) if K.field == EXACT else 1.0
    if K.field == EXACT:
        return all(s == one for s in K.row_sums())
    return all(abs(s - 1.0) <= 1e-12 for s in K.row_sums())


def check_intertwining(L: SparseOp, L_hat: SparseOp, K: SparseOp,
                       tol: Optional[float] = None, waive_kernel: bool = False) -> DualityReport:
    """Residual of ``L K - K L_hat`` for a probability kernel ``K``."""
    if not waive_kernel and not is_probability_kernel(K):
        raise KernelError("K is not a probability kernel (pass waive_kernel=True to override)")
    residual = compose(L, K) - compose(K, L_hat)
    passed, rows, size = _judge(residual, tol)
    return DualityReport("intertwining", residual.field, residual, passed, rows, size, tol)


# -- Lloyd-Sudbury q-duality and thinning ----------------------------------------


def q_dual_params(p: LSParams, q) -> LSParams:
    """Parameters of the ``D_q`` dual; may be negative (no generator then)."""
    q = Fraction(q)
    if q == 1:
        raise ValueError("q = 1 gives a degenerate duality function")
    g = (p.a + p.c - p.d + q * p.b) / (1 - q)
    return LSParams(p.a + 2 * q * g, p.b + g, p.c - (1 + q) * g, p.d + g, p.e - g)


def q_gamma(p: LSParams, q) -> Fraction:
    q = Fraction(q)
    return (p.a + p.c - p.d + q * p.b) / (1 - q)


def _binary_sites(space: ConfigSpace) -> int:
    if space.local != 2 or space.total is not None:
        raise ValueError("product-form functions need the full space {0,1}^S")
    return space.sites


def single_site_q(q) -> SparseOp:
    q = Fraction(q)
    return SparseOp.from_dense([[1, 1], [1, q]])


def single_site_q_inverse(q) -> SparseOp:
    q = Fraction(q)
    if q == 1:
        raise ValueError("Q_q is singular at q = 1")
    c = 1 / (1 - q)
    return SparseOp.from_dense([[-q * c, c], [c, -c]])


def single_site_thinning(p) -> SparseOp:
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError("thinning probability must lie in [0, 1]")
    return SparseOp.from_dense([[1, 0], [1 - p, p]])


def dq_matrix(space: ConfigSpace, q) -> SparseOp:
    """``D_q(x, y) = q^(sum_i x_i y_i)`` as a Kronecker product."""
    n = _binary_sites(space)
    return kron_all([single_site_q(q)] * n)


def dq_inverse(space: ConfigSpace, q) -> SparseOp:
    n = _binary_sites(space)
    return kron_all([single_site_q_inverse(q)] * n)


def thinning_kernel(space: ConfigSpace, p) -> SparseOp:
    """``K_p``: keep each particle independently with probability ``p``."""
    n = _binary_sites(space)
    return kron_all([single_site_thinning(p)] * n)


def indicator_product(space: ConfigSpace, relation: str) -> SparseOp:
    """``prod_i 1{x_i R y_i}`` for ``R`` in ``neq``, ``geq``, ``eq``, ``disjoint``."""
    n = _binary_sites(space)
    local = {
        "neq": [[0, 1], [1, 0]],
        "geq": [[1, 0], [1, 1]],
        "eq": [[1, 0], [0, 1]],
        "disjoint": [[1, 1], [1, 0]],
    }
    try:
        m = SparseOp.from_dense(local[relation])
    except KeyError:
        raise ValueError(f"unknown indicator relation {relation!r}") from None
    return kron_all([m] * n)


def product_bernoulli(space: ConfigSpace, p) -> list:
    p = Fraction(p)
    out = []
    for x in space:
        w = Fraction(1)
        for xi in x:
            w *= p if xi else 1 - p
        out.append(w)
    return out


# -- time reversal, invariant measures, symmetries ---------------------------------


def invariant_measures(L: SparseOp) -> list:
    """Basis of ``{mu : mu L = 0}``."""
    if L.field != EXACT:
        raise TypeError("invariant_measures needs an exact operator")
    return left_null_space(L)


def reversal(L: SparseOp, mu: Sequence):
    """Time reversal ``L~(x,y) = mu(y) L(y,x) / mu(x)`` and ``R = diag(1/mu)``."""
    mu = [Fraction(m) for m in mu]
    if len(mu) != L.shape[0]:
        raise ValueError("measure length mismatch")
    if any(m <= 0 for m in mu):
        raise ValueError("measure must be strictly positive")
    if any(v != 0 for v in L.lapply(mu)):
        raise NotInvariantError("mu L != 0")
    entries = {(j, i): mu[i] * v / mu[j] for (i, j), v in L.items()}
    L_tilde = SparseOp(L.shape, entries, EXACT)
    R = SparseOp.diag([1 / m for m in mu])
    return L_tilde, R


def commutant(L: SparseOp, budget: int = 4096) -> list:
    """Exact basis of ``{S : S L = L S}`` from the vectorized linear system."""
    n = L.shape[0]
    if L.field != EXACT:
        raise TypeError("commutant needs an exact operator")
    if n * n > budget:
        raise BudgetError(f"commutant needs {n * n} unknowns, budget {budget}")
    LT = transpose(L)
    equations = []
    for x in range(n):
        for z in range(n):
            row: dict = {}
            # (S L)[x, z] = sum_y S[x, y] L[y, z]
            for y, v in LT.rows.get(z, {}).items():
                row[x * n + y] = row.get(x * n + y, 0) + v
            # (L S)[x, z] = sum_y L[x, y] S[y, z]
            for y, v in L.rows.get(x, {}).items():
                row[y * n + z] = row.get(y * n + z, 0) - v
            row = {k: v for k, v in row.items() if v != 0}
            if row:
                equations.append(row)
    basis = null_space_rows(equations, n * n)
    return [SparseOp((n, n), {(k // n, k % n): v for k, v in enumerate(vec) if v != 0}, EXACT)
            for vec in basis]


def check_symmetry_duality(L: SparseOp, Q: SparseOp, S: SparseOp) -> DualityReport:
    """Given a self-duality ``Q`` of ``L`` and a symmetry ``S``, check ``S Q``."""
    if not commutator(S, L).is_zero():
        raise NotASymmetryError("S does not commute with L")
    base = check_duality(L, L, Q)
    if not base.passed:
        raise ValueError("Q is not a self-duality function of L")
    report = check_duality(L, L, compose(S, Q))
    report.extra["base_passed"] = base.passed
    return report


symmetry_dualities = check_symmetry_duality


# -- pathwise map duality ----------------------------------------------------------


@dataclass
class MapDualityReport:
    passed: bool
    pairs_checked: int
    witnesses: list

    def summary(self) -> dict:
        return {"kind": "map-duality", "backend": EXACT, "passed": self.passed,
                "residual": "exact-zero" if self.passed else {"violations": len(self.witnesses)},
                "pairs_checked": self.pairs_checked, "witnesses": self.witnesses[:WITNESS_CAP]}


def check_map_duality(m: Callable, m_hat: Callable, D: Callable,
                      space: ConfigSpace, dual_space: Optional[ConfigSpace] = None) -> MapDualityReport:
    """Exhaustive check of ``D(m(x), y) = D(x, m_hat(y))``."""
    dual_space = space if dual_space is None else dual_space
    witnesses = []
    count = 0
    for x in space:
        mx = tuple(m(x))
        for y in dual_space:
            count += 1
            lhs = D(mx, y)
            rhs = D(x, tuple(m_hat(y)))
            if lhs != rhs:
                witnesses.append({"x": list(x), "y": list(y), "lhs": _fmt(lhs), "rhs": _fmt(rhs)})
    return MapDualityReport(not witnesses, count, witnesses)


def d0_function(x, y) -> Fraction:
    return Fraction(int(sum(a * b for a, b in zip(x, y)) == 0))


def matrix_function(D: SparseOp, space: ConfigSpace, dual_space: Optional[ConfigSpace] = None):
    dual_space = space if dual_space is None else dual_space
    return lambda x, y: D[space.index(x), dual_space.index(y)]


# -- SIP / BEP -----------------------------------------------------------------------


@dataclass
class PolyIdentityReport:
    kind: str
    passed: bool
    checked: int
    failures: list
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"kind": self.kind, "backend": EXACT, "passed": self.passed,
                "residual": "exact-zero" if self.passed else {"failing-cases": len(self.failures)},
                "cases_checked": self.checked, "witnesses": self.failures[:WITNESS_CAP],
                **self.extra}


def check_sip_bep_duality(graph: SiteGraph, alpha: Sequence, max_total: int) -> PolyIdentityReport:
    """For every ``x`` with ``sum(x) <= max_total``:
    ``L_BEP Q(., x) == sum_x' L_SIP(x, x') Q(., x')`` as exact polynomials."""
    alpha = [Fraction(a) for a in alpha]
    if any(a <= 0 for a in alpha):
        raise ParameterError("alpha must be positive")
    bep = bep_generator(graph, alpha)
    n = graph.n
    failures = []
    checked = 0
    for total in range(max_total + 1):
        bundle = sip_generator(graph, alpha, cap=max(total, 1), total=total)
        space, L = bundle.space, bundle.L
        for x in space:
            lhs = bep.apply(gamma_kernel(x, alpha))
            rhs = Poly.zero(n)
            for j, v in L.rows.get(space.index(x), {}).items():
                rhs = rhs + gamma_kernel(space.config(j), alpha) * v
            checked += 1
            diff = lhs - rhs
            if not diff.is_zero():
                failures.append({"x": list(x), "difference": repr(diff)})
    return PolyIdentityReport("sip-bep-duality", not failures, checked, failures,
                              {"alpha": [rat_str(a) for a in alpha], "max_total": max_total})


def bep_block_expr(graph: SiteGraph, alpha: Sequence):
    """BEP generator as an expression in the differential su(1,1) blocks."""
    half = Fraction(1, 2)
    terms = []
    for i, j, q in graph.ordered_pairs():
        terms.append(Scale(half * q, Sum((
            Product((Atom(f"k+_{i}"), Atom(f"k-_{j}"))),
            Product((Atom(f"k-_{i}"), Atom(f"k+_{j}"))),
            Scale(-2, Product((Atom(f"k0_{i}"), Atom(f"k0_{j}")))),
            Scale(half * Fraction(alpha[i]) * Fraction(alpha[j]), Identity()),
        ))))
    return Sum(tuple(terms))


def bep_block_env(graph: SiteGraph, alpha: Sequence) -> dict:
    from .liealg import su11_differential_blocks

    env = {}
    for i in range(graph.n):
        for name, op in su11_differential_blocks(alpha[i]).items():
            env[f"{name}_{i}"] = op.lift(graph.n, [i])
    return env


# -- Wright-Fisher -------------------------------------------------------------------


def wf_building_blocks(s):
    """Expression and one-variable blocks ``A- = (1-x)``, ``A+ = d/dx``."""
    s = Fraction(s)
    expr = Product((Atom("A-"), Sum((Identity(), Scale(-1, Atom("A-")))),
                    Atom("A+"), Sum((Scale(s, Identity()), Atom("A+")))))
    x = Poly.var(1, 0)
    env = {"A-": DiffOp.multiply_by(1 - x), "A+": DiffOp.d(1, 0)}
    return expr, env


def wf_sqrt_blocks(s):
    """``-A+ (sqrt(s) - A+) A- (sqrt(s) - A-)`` over ``Q(sqrt(s))`` with
    ``A- = -d/dx / sqrt(s)`` and ``A+ = sqrt(s) x``."""
    from .exactnum import QuadExt

    s = Fraction(s)
    if s <= 0:
        raise ValueError("the symmetric form needs s > 0")
    root = QuadExt.sqrt(s)
    x = Poly.var(1, 0)
    expr = Scale(-1, Product((Atom("A+"), Sum((Scale(root, Identity()), Scale(-1, Atom("A+")))),
                              Atom("A-"), Sum((Scale(root, Identity()), Scale(-1, Atom("A-")))))))
    env = {"A-": DiffOp.d(1, 0).scale(-1 / root), "A+": DiffOp.multiply_by(x * root)}
    return expr, env


def _moment_kernel(n: int) -> Poly:
    x = Poly.var(1, 0)
    return (1 - x) ** n


def check_wf_dualities(s, cap: int) -> PolyIdentityReport:
    """Moment duality, block dualities and ``exp(-sxy)`` self-duality of
    Wright-Fisher with selection ``s``."""
    from .liealg import _single_site

    s = Fraction(s)
    if s < 0:
        raise ParameterError("s must be >= 0")
    failures = []
    checked = 0
    x = Poly.var(1, 0)
    A = {"A-": DiffOp.multiply_by(1 - x), "A+": DiffOp.d(1, 0)}
    B = _single_site("wf-moment", cap + 1)
    D_row = [_moment_kernel(m) for m in range(cap + 1)]

    # block duality A D(., n) = B D(x, .)(n) on rows untouched by the cap
    for a_name, b_name in (("A-", "b-"), ("A+", "b+")):
        Bop = B[b_name]
        for n in Bop.safe_rows():
            lhs = A[a_name].apply(D_row[n])
            rhs = Poly.zero(1)
            for m, v in Bop.rows.get(n, {}).items():
                rhs = rhs + D_row[m] * v
            checked += 1
            if lhs != rhs:
                failures.append({"case": f"{a_name} block", "n": n})

    # row identity L D(., n) = sum_m L_hat(n, m) D(., m)
    L = wf_generator(s)
    L_hat = wf_moment_dual(s, cap).L
    for n in range(cap):
        lhs = L.apply(D_row[n])
        rhs = Poly.zero(1)
        for m, v in L_hat.rows.get(n, {}).items():
            rhs = rhs + D_row[m] * v
        checked += 1
        if lhs != rhs:
            failures.append({"case": "moment row", "n": n, "difference": repr(lhs - rhs)})

    # the dual expression with B blocks reproduces the moment-dual chain
    expr, _ = wf_building_blocks(s)
    dual_expr = derive_dual_expr(expr, {"A-": "b-", "A+": "b+"})
    built = evaluate(dual_expr, B, SparseOp.identity(cap + 1))
    diff = built - L_hat
    safe = [n for n in range(cap + 1) if n not in built.boundary_rows and n not in L_hat.boundary_rows]
    checked += 1
    if not diff.restrict_rows(safe).is_zero():
        failures.append({"case": "dual expression", "rows": safe})

    # self-duality with exp(-s x y)
    kernel = ExpKernelElem.kernel(s)
    in_x = L.lift(2, [0]).apply(kernel)
    in_y = L.lift(2, [1]).apply(kernel)
    checked += 1
    if not (in_x - in_y).is_zero():
        failures.append({"case": "exp self-duality", "difference": repr(in_x - in_y)})

    return PolyIdentityReport("wf-dualities", not failures, checked, failures,
                              {"s": rat_str(s), "cap": cap})


def wf_expression_agrees(s, max_degree: int = 8, sqrt_form: bool = False) -> tuple:
    """Compare the block expression with the generator on monomials.

    Returns ``(agree, sqrt_free)``; ``sqrt_free`` reports that every
    coefficient of the block result lies in the rational subfield.
    """
    from .exactnum import QuadExt

    expr, env = wf_sqrt_blocks(s) if sqrt_form else wf_building_blocks(s)
    L = wf_generator(s)
    agree = True
    sqrt_free = True
    for k in range(max_degree + 1):
        f = Poly.monomial((k,))
        got = apply_expr(expr, env, f)
        for c in got.terms.values():
            if isinstance(c, QuadExt) and not c.is_base():
                sqrt_free = False
        if got != L.apply(f):
            agree = False
    return agree, sqrt_free
