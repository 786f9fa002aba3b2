"""Concrete representations of su(2), su(1,1) and the Heisenberg algebra.

Representations are dictionaries of :class:`SparseOp` keyed by basis name.
Matrices act on coefficient vectors, so a raising operator that sends basis
vector ``phi(k)`` to ``c * phi(k+1)`` has its entry at row ``k+1``,
column ``k``.  The particle-system operators act on functions of the
configuration instead, so ``J+ f(x) = 1{x_i = 1} f(x - delta_i)`` has its
entry at row ``x``, column ``x - delta_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Sequence

from .exactnum import GaussRat, to_complex
from .linop import EXACT, FLOAT, SparseOp, adjoint, commutator, compose, kron_all
from .statespace import ConfigSpace

TWO_I = GaussRat(0, 2)
MINUS_TWO_I = GaussRat(0, -2)


@dataclass(frozen=True)
class StructureTable:
    """Commutators ``[x_i, x_j] = sum_k c_ijk x_k`` listed for ``i < j``.

    Pairs that are absent commute.  ``adjoints`` optionally maps a basis name
    to ``{name: coefficient}`` describing ``x_i^* = sum_j d_ij x_j``.
    """

    name: str
    basis: tuple
    brackets: dict
    adjoints: dict = field(default_factory=dict)

    def __post_init__(self):
        for (a, b) in self.brackets:
            if a not in self.basis or b not in self.basis:
                raise ValueError(f"bracket ({a}, {b}) uses names outside the basis")
            if self.basis.index(a) >= self.basis.index(b):
                raise ValueError(f"bracket ({a}, {b}) must be listed with i < j")

    def bracket(self, a: str, b: str) -> dict:
        """Structure constants of ``[a, b]``, using antisymmetry when needed."""
        if a == b:
            return {}
        if (a, b) in self.brackets:
            return self.brackets[(a, b)]
        if (b, a) in self.brackets:
            return {k: -v for k, v in self.brackets[(b, a)].items()}
        return {}

    def negated(self, name: str) -> "StructureTable":
        """The conjugate algebra: every structure constant changes sign."""
        return StructureTable(name, self.basis,
                              {k: {n: -c for n, c in v.items()} for k, v in self.brackets.items()},
                              {})


SU2_XYZ = StructureTable(
    "su2", ("x", "y", "z"),
    {("x", "y"): {"z": TWO_I}, ("y", "z"): {"x": TWO_I}, ("x", "z"): {"y": MINUS_TWO_I}},
    {"x": {"x": 1}, "y": {"y": 1}, "z": {"z": 1}},
)

SU11_XYZ = StructureTable(
    "su11", ("x", "y", "z"),
    {("x", "y"): {"z": TWO_I}, ("y", "z"): {"x": MINUS_TWO_I}, ("x", "z"): {"y": MINUS_TWO_I}},
    {"x": {"x": 1}, "y": {"y": 1}, "z": {"z": 1}},
)

# lowering / raising / diagonal bases
SU2_PM0 = StructureTable(
    "su2-pm0", ("j-", "j+", "j0"),
    {("j-", "j+"): {"j0": -2}, ("j-", "j0"): {"j-": 1}, ("j+", "j0"): {"j+": -1}},
    {"j-": {"j+": 1}, "j+": {"j-": 1}, "j0": {"j0": 1}},
)

SU11_PM0 = StructureTable(
    "su11-pm0", ("k-", "k+", "k0"),
    {("k-", "k+"): {"k0": 2}, ("k-", "k0"): {"k-": 1}, ("k+", "k0"): {"k+": -1}},
    {"k-": {"k+": 1}, "k+": {"k-": 1}, "k0": {"k0": 1}},
)

# conjugate algebras: brackets with the order inside reversed
SU11_CONJ = SU11_PM0.negated("su11-conjugate")
SU2_CONJ = StructureTable(
    "su2-conjugate", ("j-", "j+", "j0"),
    {k: {n: -c for n, c in v.items()} for k, v in SU2_PM0.brackets.items()},
)

HEISENBERG = StructureTable(
    "heisenberg", ("a-", "a+", "a0"),
    {("a-", "a+"): {"a0": 1}},
    {},
)

TABLES = {t.name: t for t in (SU2_XYZ, SU11_XYZ, SU2_PM0, SU11_PM0, SU11_CONJ, SU2_CONJ, HEISENBERG)}


def abelian_table(names: Sequence[str]) -> StructureTable:
    return StructureTable("abelian", tuple(names), {})


@dataclass
class Representation:
    ops: Dict[str, SparseOp]
    backend: str
    label: str = ""

    @property
    def dim(self) -> int:
        return next(iter(self.ops.values())).shape[0]

    def __getitem__(self, name: str) -> SparseOp:
        return self.ops[name]

    def __post_init__(self):
        shapes = {op.shape for op in self.ops.values()}
        if len(shapes) != 1 or any(a != b for a, b in shapes):
            raise ValueError("representation operators must be square and equal-sized")


@dataclass
class RepReport:
    table: str
    backend: str
    commutation: dict
    adjoint: dict
    tol: Optional[float]
    passed: bool
    failures: list

    def as_dict(self) -> dict:
        return {
            "table": self.table, "backend": self.backend, "tol": self.tol,
            "passed": self.passed, "failures": self.failures,
            "commutation": {f"[{a},{b}]": v for (a, b), v in self.commutation.items()},
            "adjoint": self.adjoint,
        }


class UnboundBasisError(KeyError):
    pass


def _combination(rep: Representation, coeffs: dict) -> SparseOp:
    n = rep.dim
    out = SparseOp.zero(n, field=rep.backend)
    for name, c in coeffs.items():
        if name not in rep.ops:
            raise UnboundBasisError(name)
        if rep.backend == FLOAT and isinstance(c, GaussRat):
            c = to_complex(c)
        out = out + rep.ops[name].scale(c)
    return out


def _residual_size(res: SparseOp, exact: bool):
    rows = res.safe_rows()
    if exact:
        return 0 if res.restrict_rows(rows).is_zero() else res.restrict_rows(rows).max_abs()
    return res.max_abs(rows)


def check_representation(rep: Representation, table: StructureTable,
                         tol: Optional[float] = None, check_adjoints: bool = True) -> RepReport:
    """Residuals of every commutation (and adjoint) relation of ``table``.

    Exact representations must satisfy the relations identically; float ones
    within ``tol`` (default ``1e-12``).  Only boundary-safe rows count.
    Adjoint relations are skipped for truncated operators.
    """
    for name in table.basis:
        if name not in rep.ops:
            raise UnboundBasisError(name)
    exact = rep.backend == EXACT
    if not exact and tol is None:
        tol = 1e-12
    failures = []
    comm = {}
    basis = table.basis
    for ia, a in enumerate(basis):
        for b in basis[ia + 1:]:
            res = commutator(rep.ops[a], rep.ops[b]) - _combination(rep, table.bracket(a, b))
            size = _residual_size(res, exact)
            ok = size == 0 if exact else size <= tol
            comm[(a, b)] = {"residual": float(size), "passed": ok}
            if not ok:
                failures.append(f"[{a},{b}]")
    adj = {}
    if check_adjoints and table.adjoints:
        truncated = any(op.boundary_rows for op in rep.ops.values())
        if truncated:
            adj = {"skipped": "truncated operators"}
        else:
            for a, coeffs in table.adjoints.items():
                res = adjoint(rep.ops[a]) - _combination(rep, coeffs)
                size = _residual_size(res, exact)
                ok = size == 0 if exact else size <= tol
                adj[a] = {"residual": float(size), "passed": ok}
                if not ok:
                    failures.append(f"{a}*")
    return RepReport(table.name, rep.backend, comm, adj, tol, not failures, failures)


# -- concrete representations -------------------------------------------------


def pauli_rep() -> Representation:
    i = GaussRat(0, 1)
    return Representation({
        "x": SparseOp.from_dense([[0, 1], [1, 0]]),
        "y": SparseOp.from_dense([[0, -i], [i, 0]]),
        "z": SparseOp.from_dense([[1, 0], [0, -1]]),
    }, EXACT, "pauli")


def pseudo_pauli_rep(labels: str = "xz") -> Representation:
    """Two-dimensional non-unitary su(1,1) representation.

    The matrices ``diag(1,-1)``, ``[[0,i],[i,0]]``, ``[[0,1],[-1,0]]`` satisfy
    the su(1,1) brackets when labelled ``x, y, z`` in that order (the default).
    ``labels="zx"`` swaps the ``x`` and ``z`` labels; that labelling breaks
    ``[z, x] = 2i y`` by a sign and is kept only to demonstrate the failure.
    """
    i = GaussRat(0, 1)
    diag = SparseOp.from_dense([[1, 0], [0, -1]])
    rot = SparseOp.from_dense([[0, 1], [-1, 0]])
    if labels == "xz":
        x, z = diag, rot
    elif labels == "zx":
        x, z = rot, diag
    else:
        raise ValueError("labels must be 'xz' or 'zx'")
    return Representation({"x": x, "y": SparseOp.from_dense([[0, i], [i, 0]]), "z": z},
                          EXACT, f"pseudo-pauli-{labels}")


def su2_spin_rep(n: int) -> Representation:
    """Irreducible su(2) representation of index ``n`` (dimension ``n+1``).

    Basis ``phi(k)``, ``k = -n/2 .. n/2``, stored at position ``k + n/2``.
    """
    if n < 1:
        raise ValueError("index n must be >= 1")
    h = n / 2
    lower, raise_, diag = {}, {}, {}
    for m in range(n + 1):
        k = m - h
        diag[(m, m)] = k
        if m > 0:
            lower[(m - 1, m)] = math.sqrt((h - k + 1) * (h + k))
        if m < n:
            raise_[(m + 1, m)] = math.sqrt((h - k) * (h + k + 1))
    dim = (n + 1, n + 1)
    return Representation({
        "j-": SparseOp(dim, lower, FLOAT),
        "j+": SparseOp(dim, raise_, FLOAT),
        "j0": SparseOp(dim, diag, FLOAT),
    }, FLOAT, f"spin-{n}")


def su11_bargmann_rep(r, cap: int) -> Representation:
    """Discrete-series su(1,1) representation with Bargmann index ``r``,
    truncated to ``phi(0) .. phi(cap)``."""
    r = float(Fraction(r))
    if r <= 0:
        raise ValueError("Bargmann index must be positive")
    if cap < 3:
        raise ValueError("cap must be >= 3")
    lower, raise_, diag = {}, {}, {}
    for k in range(cap + 1):
        diag[(k, k)] = k + r
        if k >= 1:
            lower[(k - 1, k)] = math.sqrt(k * (k - 1 + 2 * r))
        if k < cap:
            raise_[(k + 1, k)] = math.sqrt((k + 1) * (k + 2 * r))
    dim = (cap + 1, cap + 1)
    # row cap of K- would need phi(cap+1)
    return Representation({
        "k-": SparseOp(dim, lower, FLOAT, boundary_rows=[cap]),
        "k+": SparseOp(dim, raise_, FLOAT),
        "k0": SparseOp(dim, diag, FLOAT),
    }, FLOAT, f"bargmann-{r}")


def _su11_number_ops(alpha: Fraction, cap: int) -> dict:
    lower, raise_, diag = {}, {}, {}
    for x in range(cap + 1):
        diag[(x, x)] = alpha / 2 + x
        if x >= 1:
            lower[(x, x - 1)] = Fraction(x)
        if x < cap:
            raise_[(x, x + 1)] = alpha + x
    dim = (cap + 1, cap + 1)
    return {
        "k-": SparseOp(dim, lower, EXACT),
        "k+": SparseOp(dim, raise_, EXACT, boundary_rows=[cap]),
        "k0": SparseOp(dim, diag, EXACT),
    }


def su11_conjugate_rep(alpha, cap: int) -> Representation:
    """``K- f(x) = x f(x-1)``, ``K+ f(x) = (alpha+x) f(x+1)``,
    ``K0 f(x) = (alpha/2 + x) f(x)`` on ``{0..cap}``; a representation of the
    conjugate of su(1,1)."""
    alpha = Fraction(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if cap < 3:
        raise ValueError("cap must be >= 3")
    return Representation(_su11_number_ops(alpha, cap), EXACT, f"su11-conjugate-{alpha}")


def heisenberg_number_rep(cap: int) -> Representation:
    """``a- f(n) = f(n+1)``, ``a+ f(n) = n f(n-1)``, ``a0 = I`` on ``{0..cap}``."""
    dim = (cap + 1, cap + 1)
    lower = {(n, n + 1): 1 for n in range(cap)}
    raise_ = {(n, n - 1): n for n in range(1, cap + 1)}
    return Representation({
        "a-": SparseOp(dim, lower, EXACT, boundary_rows=[cap]),
        "a+": SparseOp(dim, raise_, EXACT),
        "a0": SparseOp.identity(cap + 1),
    }, EXACT, "heisenberg-number")


def _single_site(kind: str, local: int, **params) -> dict:
    if kind == "su2-sep":
        if local != 2:
            raise ValueError("su2-sep operators live on {0,1}")
        half = Fraction(1, 2)
        return {
            "j-": SparseOp.from_dense([[0, 1], [0, 0]]),
            "j+": SparseOp.from_dense([[0, 0], [1, 0]]),
            "j0": SparseOp.diag([-half, half]),
        }
    if kind == "su11-sip":
        return _su11_number_ops(Fraction(params["alpha"]), local - 1)
    if kind == "heisenberg":
        return heisenberg_number_rep(local - 1).ops
    if kind == "wf-moment":
        # B- f(n) = f(n+1), B+ f(n) = -n f(n-1)
        cap = local - 1
        dim = (local, local)
        return {
            "b-": SparseOp(dim, {(n, n + 1): 1 for n in range(cap)}, EXACT, boundary_rows=[cap]),
            "b+": SparseOp(dim, {(n, n - 1): -n for n in range(1, cap + 1)}, EXACT),
        }
    raise ValueError(f"unknown site operator kind {kind!r}")


def site_operators(kind: str, space: ConfigSpace, site: int, **params) -> dict:
    """Single-site operators of ``kind`` lifted to site ``site`` of ``space``."""
    if not 0 <= site < space.sites:
        raise ValueError(f"site {site} outside 0..{space.sites - 1}")
    if space.total is not None:
        raise ValueError("site operators need the full product space, not a sector")
    local_ops = _single_site(kind, space.local, **params)
    ident = SparseOp.identity(space.local)
    out = {}
    for name, op in local_ops.items():
        factors = [ident] * space.sites
        factors[site] = op
        lifted = kron_all(factors)
        lifted.row_space = lifted.col_space = space
        out[name] = lifted
    return out


def collective_operator(symbol: str, space: ConfigSpace) -> SparseOp:
    """``K^a = sum_k J^a_k`` for ``symbol`` in ``-``, ``+``, ``0``."""
    name = {"-": "j-", "+": "j+", "0": "j0"}[symbol]
    out = SparseOp.zero(len(space))
    for k in range(space.sites):
        out = out + site_operators("su2-sep", space, k)[name]
    return out


def collective_rep(space: ConfigSpace) -> Representation:
    return Representation({f"j{s}": collective_operator(s, space) for s in "-+0"},
                          EXACT, "sep-collective")


# -- Casimir operators --------------------------------------------------------


def _sq(a: SparseOp) -> SparseOp:
    return compose(a, a)


def _xyz_from_su2(rep: Representation) -> tuple:
    if all(k in rep.ops for k in ("x", "y", "z")):
        return rep["x"], rep["y"], rep["z"]
    if all(k in rep.ops for k in ("j-", "j+", "j0")):
        jm, jp, j0 = rep["j-"], rep["j+"], rep["j0"]
        minus_i = complex(0, -1) if rep.backend == FLOAT else GaussRat(0, -1)
        # s_x = j+ + j-, s_y = -i (j+ - j-), s_z = 2 j0
        return jp + jm, (jp - jm).scale(minus_i), j0.scale(2)
    raise UnboundBasisError("su(2) representation needs x/y/z or j-/j+/j0")


def _xyz_from_su11(rep: Representation) -> tuple:
    if all(k in rep.ops for k in ("x", "y", "z")):
        return rep["x"], rep["y"], rep["z"]
    if all(k in rep.ops for k in ("k-", "k+", "k0")):
        km, kp, k0 = rep["k-"], rep["k+"], rep["k0"]
        minus_i = complex(0, -1) if rep.backend == FLOAT else GaussRat(0, -1)
        # t_x = 2 k0, t_y = k+ + k-, t_z = -i (k+ - k-)
        return k0.scale(2), kp + km, (kp - km).scale(minus_i)
    raise UnboundBasisError("su(1,1) representation needs x/y/z or k-/k+/k0")


def su2_casimir(rep: Representation) -> SparseOp:
    sx, sy, sz = _xyz_from_su2(rep)
    return _sq(sx) + _sq(sy) + _sq(sz)


def su11_casimir(rep: Representation) -> SparseOp:
    tx, ty, tz = _xyz_from_su11(rep)
    q = Fraction(1, 4) if rep.backend == EXACT else 0.25
    return (_sq(tx) - _sq(ty) - _sq(tz)).scale(q)


def scalar_residual(C: SparseOp, value) -> float:
    """Max deviation of ``C`` from ``value * I`` on boundary-safe rows."""
    n = C.shape[0]
    if C.field == FLOAT:
        value = float(value)
    ident = SparseOp.identity(n, C.field).scale(value)
    res = C - ident
    return res.max_abs(res.safe_rows())


def su11_differential_blocks(alpha) -> dict:
    """Differential su(1,1) blocks on polynomials in one variable ``z``:
    ``K- = z d^2 + alpha d``, ``K+ = z``, ``K0 = z d + alpha/2``."""
    from .polyop import DiffOp, Poly

    alpha = Fraction(alpha)
    z = Poly.var(1, 0)
    one = Poly.const(1, 1)
    return {
        "k-": DiffOp(1, [(z, (2,)), (one * alpha, (1,))]),
        "k+": DiffOp.multiply_by(z),
        "k0": DiffOp(1, [(z, (1,)), (one * (alpha / 2), (0,))]),
    }
