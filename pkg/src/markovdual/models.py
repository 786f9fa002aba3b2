"""Markov generators of the interacting particle systems and chains used here."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .linop import EXACT, SparseOp
from .opexpr import Atom, Identity, Product, Scale, Sum, evaluate
from .statespace import ConfigSpace, SiteGraph


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class LSParams:
    """Rates of the Lloyd-Sudbury family: annihilation, branching,
    coalescence, death and exclusion."""

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)
    c: Fraction = Fraction(0)
    d: Fraction = Fraction(0)
    e: Fraction = Fraction(0)

    def __post_init__(self):
        for name in "abcde":
            object.__setattr__(self, name, Fraction(getattr(self, name)))

    def astuple(self) -> tuple:
        return (self.a, self.b, self.c, self.d, self.e)

    def nonnegative(self) -> bool:
        return all(v >= 0 for v in self.astuple())

    def __add__(self, other: "LSParams") -> "LSParams":
        return LSParams(*(x + y for x, y in zip(self.astuple(), other.astuple())))


VOTER = LSParams(0, 1, 0, 1, 0)
EXCLUSION = LSParams(0, 0, 0, 0, 1)


def contact_params(lam) -> LSParams:
    return LSParams(0, lam, 1, 1, 0)


def biased_voter_params(s) -> LSParams:
    return LSParams(0, 1 + Fraction(s), 0, 1, 0)


def braco_params(s) -> LSParams:
    return LSParams(0, s, 1, 0, 1)


@dataclass
class GeneratorBundle:
    space: ConfigSpace
    L: SparseOp
    label: str
    params: dict = field(default_factory=dict)


@dataclass
class GeneratorReport:
    valid: bool
    violations: list

    def witnesses(self, limit: int = 10) -> list:
        return self.violations[:limit]


def validate_generator(L: SparseOp, tol: float = 0.0) -> GeneratorReport:
    """Check nonnegative off-diagonal entries and zero row sums.

    Exact operators are checked exactly; ``tol`` only applies to float ones.
    """
    if L.shape[0] != L.shape[1]:
        raise ValueError("generator must be square")
    exact = L.field == EXACT
    violations = []
    for i in range(L.shape[0]):
        row = L.rows.get(i, {})
        total = 0
        for j, v in sorted(row.items()):
            if j != i:
                if isinstance(v, complex) or getattr(v, "im", 0):
                    violations.append({"kind": "complex-rate", "row": i, "col": j, "value": v})
                elif (v < 0) if exact else (v < -tol):
                    violations.append({"kind": "negative-rate", "row": i, "col": j, "value": v})
            total = total + v
        if (total != 0) if exact else (abs(total) > tol):
            violations.append({"kind": "nonzero-row-sum", "row": i, "col": None, "value": total})
    return GeneratorReport(not violations, violations)


def _assemble(space: ConfigSpace, rates: dict, boundary=()) -> SparseOp:
    entries = {}
    diag: dict = {}
    for (i, j), r in rates.items():
        if i == j or r == 0:
            continue
        entries[(i, j)] = entries.get((i, j), 0) + r
        diag[i] = diag.get(i, 0) - r
    for i, v in diag.items():
        entries[(i, i)] = v
    n = len(space)
    return SparseOp((n, n), entries, EXACT, boundary_rows=boundary,
                    row_space=space, col_space=space)


def lloyd_sudbury(params: LSParams, graph: SiteGraph, strict: bool = True) -> GeneratorBundle:
    """Matrix of ``L(a, b, c, d, e)`` on ``{0,1}^S``.

    With ``strict=False`` signed parameters are allowed; the result is then
    the same linear operator but not necessarily a Markov generator.
    """
    if strict and not params.nonnegative():
        raise ParameterError(f"negative rate in {params}")
    space = ConfigSpace.binary(graph.n)
    half = Fraction(1, 2)
    rates: dict = {}

    def add(x, y, r):
        if r:
            key = (space.index(x), space.index(y))
            rates[key] = rates.get(key, 0) + r

    for x in space:
        for i, j, q in graph.ordered_pairs():
            xi, xj = x[i], x[j]
            if (xi, xj) == (1, 1):
                y = list(x)
                y[i] = y[j] = 0
                add(x, y, half * params.a * q)
                y = list(x)
                y[i] = 0
                add(x, y, params.c * q)
            elif (xi, xj) == (0, 1):
                y = list(x)
                y[i] = 1
                add(x, y, params.b * q)
                y = list(x)
                y[j] = 0
                add(x, y, params.d * q)
                y = list(x)
                y[i], y[j] = 1, 0
                add(x, y, params.e * q)
    L = _assemble(space, rates)
    label = "lloyd-sudbury({})".format(",".join(str(v) for v in params.astuple()))
    return GeneratorBundle(space, L, label, {"params": params, "graph": graph})


def voter(graph: SiteGraph) -> GeneratorBundle:
    return lloyd_sudbury(VOTER, graph)


def contact_process(lam, graph: SiteGraph) -> GeneratorBundle:
    return lloyd_sudbury(contact_params(lam), graph)


def biased_voter(s, graph: SiteGraph) -> GeneratorBundle:
    if Fraction(s) < 0:
        raise ParameterError("selection s must be >= 0")
    return lloyd_sudbury(biased_voter_params(s), graph)


def braco(s, graph: SiteGraph) -> GeneratorBundle:
    if Fraction(s) < 0:
        raise ParameterError("branching s must be >= 0")
    return lloyd_sudbury(braco_params(s), graph)


def sep_generator(graph: SiteGraph) -> GeneratorBundle:
    """Symmetric exclusion: a particle at ``i`` jumps to empty ``j`` at ``q(i,j)``."""
    space = ConfigSpace.binary(graph.n)
    rates: dict = {}
    for x in space:
        for i, j, q in graph.ordered_pairs():
            if x[i] == 1 and x[j] == 0:
                y = list(x)
                y[i], y[j] = 0, 1
                rates[(space.index(x), space.index(y))] = q
    return GeneratorBundle(space, _assemble(space, rates), "sep", {"graph": graph})


def _check_alpha(alpha, n):
    alpha = [Fraction(a) for a in alpha]
    if len(alpha) != n:
        raise ParameterError("need one alpha per site")
    if any(a <= 0 for a in alpha):
        raise ParameterError("alpha must be positive")
    return alpha


def sip_generator(graph: SiteGraph, alpha: Sequence, cap: int,
                  total: Optional[int] = None) -> GeneratorBundle:
    """Symmetric inclusion process on ``{0..cap}^S`` (or one sector of it).

    A particle at ``i`` jumps to ``j`` at rate ``q(i,j)(alpha_j x_i + x_i x_j)``.
    Jumps that would exceed ``cap`` are dropped and their rows flagged as
    boundary rows; inside a sector with ``total <= cap`` none are dropped.
    """
    alpha = _check_alpha(alpha, graph.n)
    space = ConfigSpace.capped(graph.n, cap, total)
    rates: dict = {}
    boundary = set()
    for x in space:
        xi_idx = space.index(x)
        for i, j, q in graph.ordered_pairs():
            if x[i] == 0:
                continue
            y = list(x)
            y[i] -= 1
            y[j] += 1
            r = q * (alpha[j] * x[i] + x[i] * x[j])
            if y[j] > cap:
                boundary.add(xi_idx)
                continue
            rates[(xi_idx, space.index(y))] = rates.get((xi_idx, space.index(y)), 0) + r
    return GeneratorBundle(space, _assemble(space, rates, boundary), "sip",
                           {"graph": graph, "alpha": alpha, "cap": cap})


def wf_moment_dual(s, cap: int, strict: bool = True) -> GeneratorBundle:
    """Block-counting dual of Wright-Fisher: ``n -> n-1`` at ``n(n-1)``,
    ``n -> n+1`` at ``s n``, truncated at ``cap`` (row ``cap`` is a boundary
    row)."""
    s = Fraction(s)
    if strict and s < 0:
        raise ParameterError("s must be >= 0 for the moment dual to be a generator")
    if cap < 1:
        raise ParameterError("cap must be >= 1")
    space = ConfigSpace.capped(1, cap)
    entries = {}
    for n in range(cap + 1):
        down = Fraction(n * (n - 1))
        up = s * n
        if down:
            entries[(n, n - 1)] = down
        diag = -down
        if n < cap:
            if up:
                entries[(n, n + 1)] = up
            diag -= up
        if diag:
            entries[(n, n)] = diag
    L = SparseOp((cap + 1, cap + 1), entries, EXACT, boundary_rows=[cap] if s else [],
                 row_space=space, col_space=space)
    return GeneratorBundle(space, L, "wf-moment-dual", {"s": s, "cap": cap})


def sep_from_blocks(graph: SiteGraph) -> GeneratorBundle:
    """SEP assembled as ``sum_{i<j} r [J-_i J+_j + J-_j J+_i + 2 J0_i J0_j - I/2]``."""
    from .liealg import site_operators

    space = ConfigSpace.binary(graph.n)
    env = {}
    for i in range(graph.n):
        ops = site_operators("su2-sep", space, i)
        for name, op in ops.items():
            env[f"{name}_{i}"] = op
    terms = []
    for i, j, r in graph.edges():
        terms.append(Scale(r, Sum((
            Product((Atom(f"j-_{i}"), Atom(f"j+_{j}"))),
            Product((Atom(f"j-_{j}"), Atom(f"j+_{i}"))),
            Scale(2, Product((Atom(f"j0_{i}"), Atom(f"j0_{j}")))),
            Scale(Fraction(-1, 2), Identity()),
        ))))
    ident = SparseOp.identity(len(space), space=space)
    L = evaluate(Sum(tuple(terms)), env, ident) if terms else SparseOp.zero(len(space))
    return GeneratorBundle(space, L, "sep-from-blocks", {"graph": graph})


def sip_from_blocks(graph: SiteGraph, alpha: Sequence, cap: int) -> GeneratorBundle:
    """SIP assembled from the discrete su(1,1) blocks on ``{0..cap}^S``.

    ``1/2 sum_{i,j} q(i,j) [K-_j K+_i + K+_j K-_i - 2 K0_j K0_i + a_j a_i / 2]``.
    Rows touching the cap carry boundary flags from the raising operators.
    """
    from .liealg import site_operators

    alpha = _check_alpha(alpha, graph.n)
    space = ConfigSpace.capped(graph.n, cap)
    env = {}
    for i in range(graph.n):
        for name, op in site_operators("su11-sip", space, i, alpha=alpha[i]).items():
            env[f"{name}_{i}"] = op
    half = Fraction(1, 2)
    terms = []
    for i, j, q in graph.ordered_pairs():
        terms.append(Scale(half * q, Sum((
            Product((Atom(f"k-_{j}"), Atom(f"k+_{i}"))),
            Product((Atom(f"k+_{j}"), Atom(f"k-_{i}"))),
            Scale(-2, Product((Atom(f"k0_{j}"), Atom(f"k0_{i}")))),
            Scale(half * alpha[j] * alpha[i], Identity()),
        ))))
    ident = SparseOp.identity(len(space), space=space)
    L = evaluate(Sum(tuple(terms)), env, ident) if terms else SparseOp.zero(len(space))
    return GeneratorBundle(space, L, "sip-from-blocks", {"graph": graph, "alpha": alpha, "cap": cap})


# -- maps and pathwise construction ---------------------------------------------


Map = Callable[[tuple], tuple]


def identity_map(x: tuple) -> tuple:
    return tuple(x)


def copy_map(src: int, dst: int) -> Map:
    """Site ``dst`` adopts the value at ``src``."""
    def m(x):
        y = list(x)
        y[dst] = x[src]
        return tuple(y)
    m.__name__ = f"copy({src}->{dst})"
    return m


def coalesce_map(src: int, dst: int) -> Map:
    """A particle at ``src`` jumps to ``dst`` and merges with any particle there."""
    def m(x):
        y = list(x)
        if x[src]:
            y[dst] = 1
            y[src] = 0
        return tuple(y)
    m.__name__ = f"coalesce({src}->{dst})"
    return m


def flip_map(site: int) -> Map:
    def m(x):
        y = list(x)
        y[site] = 1 - y[site]
        return tuple(y)
    m.__name__ = f"flip({site})"
    return m


def voter_maps(graph: SiteGraph) -> list:
    """Voter dynamics as maps: ``i`` copies ``j`` at rate ``q(i,j)``."""
    return [(copy_map(j, i), q) for i, j, q in graph.ordered_pairs()]


def coalescing_maps(graph: SiteGraph) -> list:
    """Coalescing random walks: dual of :func:`voter_maps` under ``D_0``."""
    return [(coalesce_map(i, j), q) for i, j, q in graph.ordered_pairs()]


def pathwise_generator(space: ConfigSpace, maps: Iterable) -> GeneratorBundle:
    """``L f(x) = sum_m r_m (f(m(x)) - f(x))`` as a matrix."""
    rates: dict = {}
    for m, r in maps:
        r = Fraction(r)
        if r < 0:
            raise ParameterError("map rates must be nonnegative")
        for x in space:
            y = tuple(m(x))
            if y == tuple(x):
                continue
            key = (space.index(x), space.index(y))
            rates[key] = rates.get(key, 0) + r
    return GeneratorBundle(space, _assemble(space, rates), "pathwise")


def sector_closed(L: SparseOp, space: ConfigSpace) -> bool:
    """True when ``L`` never connects configurations with different totals."""
    for (i, j), _ in L.items():
        if sum(space.config(i)) != sum(space.config(j)):
            return False
    return True
