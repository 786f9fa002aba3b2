"""Sparse matrices over exact scalars or float64.

Every operator carries a field tag (``"exact"`` or ``"float"``) and a set of
*boundary rows*: rows that, because of a state-space cap, miss entries the
untruncated operator would have.  Products propagate boundary rows so that
identities can be checked on the rows that truncation leaves intact.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .exactnum import GaussRat, QuadExt, conj, to_complex

EXACT = "exact"
FLOAT = "float"


class DimensionError(ValueError):
    pass


class FieldError(TypeError):
    pass


class NotNilpotentError(ValueError):
    pass


class SingularError(ValueError):
    pass


def _field_of(v) -> str:
    if isinstance(v, (float, complex, np.floating, np.complexfloating)):
        return FLOAT
    if isinstance(v, (int, Fraction, GaussRat, QuadExt, np.integer)):
        return EXACT
    raise FieldError(f"unsupported scalar {v!r}")


def _normalize(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return Fraction(int(v))
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.complexfloating):
        return complex(v)
    return v


class SparseOp:
    """Sparse ``nrows x ncols`` matrix stored as ``{row: {col: value}}``."""

    __slots__ = ("shape", "rows", "field", "boundary_rows", "row_space", "col_space")

    def __init__(self, shape, entries=None, field: Optional[str] = None,
                 boundary_rows: Iterable[int] = (), row_space=None, col_space=None):
        nr, nc = shape
        self.shape = (int(nr), int(nc))
        self.rows: dict = {}
        seen = set()
        items = entries.items() if isinstance(entries, dict) else (entries or ())
        for (i, j), v in items:
            if not (0 <= i < nr and 0 <= j < nc):
                raise DimensionError(f"entry ({i}, {j}) outside shape {self.shape}")
            v = _normalize(v)
            seen.add(_field_of(v))
            if v == 0:
                continue
            row = self.rows.setdefault(i, {})
            if j in row:
                v = row[j] + v
                if v == 0:
                    del row[j]
                    if not row:
                        del self.rows[i]
                    continue
            row[j] = v
        if field is None:
            if len(seen) > 1:
                raise FieldError("mixed exact and float entries; promote explicitly")
            field = seen.pop() if seen else EXACT
        elif field == EXACT and FLOAT in seen:
            raise FieldError("float entry in an exact operator")
        if field not in (EXACT, FLOAT):
            raise ValueError(f"unknown field {field!r}")
        self.field = field
        self.boundary_rows = frozenset(boundary_rows)
        self.row_space = row_space
        self.col_space = col_space

    # -- construction -------------------------------------------------------

    @classmethod
    def _raw(cls, shape, rows, field, boundary_rows=frozenset(), row_space=None, col_space=None):
        op = cls.__new__(cls)
        op.shape = shape
        op.rows = rows
        op.field = field
        op.boundary_rows = frozenset(boundary_rows)
        op.row_space = row_space
        op.col_space = col_space
        return op

    @classmethod
    def identity(cls, n: int, field: str = EXACT, space=None) -> "SparseOp":
        one = Fraction(1) if field == EXACT else 1.0
        return cls._raw((n, n), {i: {i: one} for i in range(n)}, field,
                        row_space=space, col_space=space)

    @classmethod
    def zero(cls, nrows: int, ncols: Optional[int] = None, field: str = EXACT) -> "SparseOp":
        return cls._raw((nrows, nrows if ncols is None else ncols), {}, field)

    @classmethod
    def from_dense(cls, rows, field: Optional[str] = None, **kw) -> "SparseOp":
        rows = [list(r) for r in rows]
        nc = len(rows[0]) if rows else 0
        entries = {(i, j): v for i, r in enumerate(rows) for j, v in enumerate(r) if v != 0}
        if field is None:
            fields = {_field_of(_normalize(v)) for r in rows for v in r}
            if len(fields) > 1:
                raise FieldError("mixed exact and float entries; promote explicitly")
            field = fields.pop() if fields else EXACT
        return cls((len(rows), nc), entries, field, **kw)

    @classmethod
    def diag(cls, values, field: Optional[str] = None, **kw) -> "SparseOp":
        values = list(values)
        return cls((len(values), len(values)), {(i, i): v for i, v in enumerate(values)}, field, **kw)

    @classmethod
    def from_numpy(cls, a, **kw) -> "SparseOp":
        a = np.asarray(a)
        nz = np.argwhere(a != 0)
        return cls(a.shape, {(int(i), int(j)): a[i, j].item() for i, j in nz}, FLOAT, **kw)

    def with_boundary(self, rows: Iterable[int]) -> "SparseOp":
        return SparseOp._raw(self.shape, self.rows, self.field,
                             self.boundary_rows | frozenset(rows), self.row_space, self.col_space)

    # -- access -------------------------------------------------------------

    def __getitem__(self, ij):
        i, j = ij
        return self.rows.get(i, {}).get(j, Fraction(0) if self.field == EXACT else 0.0)

    def items(self):
        for i in sorted(self.rows):
            row = self.rows[i]
            for j in sorted(row):
                yield (i, j), row[j]

    @property
    def nnz(self) -> int:
        return sum(len(r) for r in self.rows.values())

    def is_zero(self) -> bool:
        return not self.rows

    def to_dense(self) -> list:
        nr, nc = self.shape
        z = Fraction(0) if self.field == EXACT else 0.0
        out = [[z] * nc for _ in range(nr)]
        for (i, j), v in self.items():
            out[i][j] = v
        return out

    def to_numpy(self) -> np.ndarray:
        complex_ = any(isinstance(v, (complex, GaussRat, QuadExt)) for _, v in self.items())
        a = np.zeros(self.shape, dtype=complex if complex_ else float)
        for (i, j), v in self.items():
            a[i, j] = to_complex(v) if complex_ else float(v)
        return a

    def to_float(self) -> "SparseOp":
        if self.field == FLOAT:
            return self
        rows = {}
        for i, row in self.rows.items():
            rows[i] = {j: (to_complex(v) if isinstance(v, (GaussRat, QuadExt)) else float(v))
                       for j, v in row.items()}
        return SparseOp._raw(self.shape, rows, FLOAT, self.boundary_rows, self.row_space, self.col_space)

    def max_abs(self, rows: Optional[Iterable[int]] = None) -> float:
        keep = None if rows is None else set(rows)
        best = 0.0
        for i, row in self.rows.items():
            if keep is not None and i not in keep:
                continue
            for v in row.values():
                best = max(best, abs(to_complex(v)))
        return best

    def safe_rows(self) -> list:
        return [i for i in range(self.shape[0]) if i not in self.boundary_rows]

    def restrict_rows(self, rows: Iterable[int]) -> "SparseOp":
        """Zero every row outside ``rows`` (shape unchanged)."""
        keep = set(rows)
        return SparseOp._raw(self.shape, {i: dict(r) for i, r in self.rows.items() if i in keep},
                             self.field, self.boundary_rows & keep, self.row_space, self.col_space)

    def submatrix(self, row_idx, col_idx=None) -> "SparseOp":
        """Principal (or general) submatrix with re-indexed rows and columns."""
        col_idx = row_idx if col_idx is None else col_idx
        rmap = {old: new for new, old in enumerate(row_idx)}
        cmap = {old: new for new, old in enumerate(col_idx)}
        rows = {}
        for old_i, row in self.rows.items():
            if old_i not in rmap:
                continue
            new_row = {cmap[j]: v for j, v in row.items() if j in cmap}
            if new_row:
                rows[rmap[old_i]] = new_row
        bnd = {rmap[i] for i in self.boundary_rows if i in rmap}
        return SparseOp._raw((len(row_idx), len(col_idx)), rows, self.field, bnd)

    def row_sums(self) -> list:
        z = Fraction(0) if self.field == EXACT else 0.0
        return [sum(self.rows.get(i, {}).values(), z) for i in range(self.shape[0])]

    def apply(self, vec) -> list:
        """Matrix-vector product ``(A f)(x) = sum_y A(x, y) f(y)``."""
        if len(vec) != self.shape[1]:
            raise DimensionError("vector length mismatch")
        z = Fraction(0) if self.field == EXACT else 0.0
        return [sum((v * vec[j] for j, v in self.rows.get(i, {}).items()), z)
                for i in range(self.shape[0])]

    def lapply(self, vec) -> list:
        """Row-vector product ``(mu A)(y) = sum_x mu(x) A(x, y)``."""
        if len(vec) != self.shape[0]:
            raise DimensionError("vector length mismatch")
        z = Fraction(0) if self.field == EXACT else 0.0
        out = [z] * self.shape[1]
        for i, row in self.rows.items():
            for j, v in row.items():
                out[j] = out[j] + vec[i] * v
        return out

    # -- algebra ------------------------------------------------------------

    def _check_field(self, other: "SparseOp"):
        if self.field != other.field:
            raise FieldError(f"cannot combine {self.field} and {other.field} operators")

    def __add__(self, other):
        if not isinstance(other, SparseOp):
            return NotImplemented
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")
        self._check_field(other)
        rows = {i: dict(r) for i, r in self.rows.items()}
        for i, orow in other.rows.items():
            row = rows.setdefault(i, {})
            for j, v in orow.items():
                s = row.get(j, 0) + v
                if s == 0:
                    row.pop(j, None)
                else:
                    row[j] = s
            if not row:
                del rows[i]
        return SparseOp._raw(self.shape, rows, self.field,
                             self.boundary_rows | other.boundary_rows,
                             self.row_space, self.col_space)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        if not isinstance(other, SparseOp):
            return NotImplemented
        return self + (-other)

    def scale(self, c) -> "SparseOp":
        c = _normalize(c)
        if self.field == EXACT and _field_of(c) == FLOAT:
            raise FieldError("float scalar applied to an exact operator")
        if c == 0:
            return SparseOp._raw(self.shape, {}, self.field, self.boundary_rows,
                                 self.row_space, self.col_space)
        rows = {i: {j: c * v for j, v in r.items()} for i, r in self.rows.items()}
        return SparseOp._raw(self.shape, rows, self.field, self.boundary_rows,
                             self.row_space, self.col_space)

    def __mul__(self, c):
        if isinstance(c, SparseOp):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if not isinstance(other, SparseOp):
            return NotImplemented
        return compose(self, other)

    def __eq__(self, other):
        if not isinstance(other, SparseOp):
            return NotImplemented
        return self.shape == other.shape and self.rows == other.rows

    def __hash__(self):
        return id(self)

    def adjoint(self) -> "SparseOp":
        return adjoint(self)

    def transpose(self) -> "SparseOp":
        return transpose(self)

    @property
    def T(self):
        return transpose(self)

    def __repr__(self):
        return f"SparseOp(shape={self.shape}, nnz={self.nnz}, field={self.field})"


def compose(a: SparseOp, b: SparseOp) -> SparseOp:
    """Ordinary matrix product ``a @ b`` (``b`` acts first on a vector)."""
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot compose {a.shape} with {b.shape}")
    a._check_field(b)
    rows = {}
    for i, arow in a.rows.items():
        acc: dict = {}
        for k, av in arow.items():
            brow = b.rows.get(k)
            if not brow:
                continue
            for j, bv in brow.items():
                acc[j] = acc.get(j, 0) + av * bv
        acc = {j: v for j, v in acc.items() if v != 0}
        if acc:
            rows[i] = acc
    bnd = set(a.boundary_rows)
    if b.boundary_rows:
        for i, arow in a.rows.items():
            if any(k in b.boundary_rows for k in arow):
                bnd.add(i)
    return SparseOp._raw((a.shape[0], b.shape[1]), rows, a.field, bnd, a.row_space, b.col_space)


def add(a: SparseOp, b: SparseOp) -> SparseOp:
    return a + b


def scale(c, a: SparseOp) -> SparseOp:
    return a.scale(c)


def transpose(a: SparseOp) -> SparseOp:
    if a.boundary_rows:
        raise ValueError("transpose of a truncated operator is not boundary-safe")
    rows: dict = {}
    for i, row in a.rows.items():
        for j, v in row.items():
            rows.setdefault(j, {})[i] = v
    return SparseOp._raw((a.shape[1], a.shape[0]), rows, a.field,
                         row_space=a.col_space, col_space=a.row_space)


def adjoint(a: SparseOp) -> SparseOp:
    """Conjugate transpose ``A^dagger(x, y) = conj(A(y, x))``."""
    t = transpose(a)
    for row in t.rows.values():
        for j in row:
            row[j] = conj(row[j])
    return t


def commutator(a: SparseOp, b: SparseOp) -> SparseOp:
    return compose(a, b) - compose(b, a)


def kron(a: SparseOp, b: SparseOp) -> SparseOp:
    """Kronecker product; row ``(i, k)`` maps to ``i * b.rows + k``."""
    a._check_field(b)
    nb_r, nb_c = b.shape
    rows = {}
    for i, arow in a.rows.items():
        for k, brow in b.rows.items():
            rows[i * nb_r + k] = {j * nb_c + l: av * bv
                                  for j, av in arow.items() for l, bv in brow.items()}
    bnd = set()
    for i in a.boundary_rows:
        bnd.update(i * nb_r + k for k in range(nb_r))
    for k in b.boundary_rows:
        bnd.update(i * nb_r + k for i in range(a.shape[0]))
    return SparseOp._raw((a.shape[0] * nb_r, a.shape[1] * nb_c), rows, a.field, bnd)


def kron_all(ops) -> SparseOp:
    ops = list(ops)
    out = ops[0]
    for op in ops[1:]:
        out = kron(out, op)
    return out


def matrix_power(a: SparseOp, k: int) -> SparseOp:
    out = SparseOp.identity(a.shape[0], a.field)
    for _ in range(k):
        out = compose(out, a)
    return out


def exp_nilpotent(a: SparseOp) -> SparseOp:
    """``sum_n a^n / n!`` for nilpotent ``a`` (exact finite sum)."""
    n = a.shape[0]
    if a.shape[0] != a.shape[1]:
        raise DimensionError("exp_nilpotent needs a square operator")
    out = SparseOp.identity(n, a.field)
    power = SparseOp.identity(n, a.field)
    for k in range(1, n + 1):
        power = compose(power, a)
        if power.is_zero():
            return out
        coef = Fraction(1, math.factorial(k)) if a.field == EXACT else 1.0 / math.factorial(k)
        out = out + power.scale(coef)
    raise NotNilpotentError(f"a^{n} is nonzero; operator is not nilpotent")


def uniformized_semigroup(L: SparseOp, t: float, tol: float = 1e-12) -> SparseOp:
    """Float ``exp(tL)`` for a Markov generator by uniformization.

    ``P_t = sum_n Pois(n; lam t) (I + L/lam)^n``, truncated once the Poisson
    tail mass drops below ``tol``.  Long horizons are split into pieces with
    ``lam * piece <= 50`` and the pieces multiplied together.
    """
    from .models import validate_generator

    if t < 0:
        raise ValueError("t must be nonnegative")
    report = validate_generator(L, tol=0.0 if L.field == EXACT else 1e-12)
    if not report.valid:
        raise ValueError(f"not a Markov generator: {report.violations[:3]}")
    n = L.shape[0]
    A = L.to_float().to_numpy().real
    lam = float(max((-A[i, i] for i in range(n)), default=0.0))
    if t == 0 or lam == 0:
        return SparseOp.from_numpy(np.eye(n))
    pieces = max(1, math.ceil(lam * t / 50.0))
    h = t / pieces
    piece_tol = tol / pieces
    P = np.eye(n) + A / lam
    mu = lam * h
    weight = math.exp(-mu)
    term = np.eye(n)
    acc = weight * term
    mass = weight
    k = 0
    while 1.0 - mass > piece_tol and k < 10_000:
        k += 1
        term = term @ P
        weight *= mu / k
        acc += weight * term
        mass += weight
    out = np.linalg.matrix_power(acc, pieces)
    return SparseOp.from_numpy(out)


# -- exact elimination ----------------------------------------------------------


def _integer_rows(rows):
    """Scale rational sparse rows to primitive integer rows."""
    out = []
    for row in rows:
        row = {j: Fraction(v) for j, v in row.items() if v != 0}
        if not row:
            continue
        den = 1
        for v in row.values():
            den = den * v.denominator // math.gcd(den, v.denominator)
        irow = {j: int(v * den) for j, v in row.items()}
        out.append(_primitive(irow))
    return out


def _primitive(row: dict) -> dict:
    g = 0
    for v in row.values():
        g = math.gcd(g, v)
    if g > 1:
        row = {j: v // g for j, v in row.items()}
    return row


def _rref_integer(rows) -> dict:
    """Fraction-free Gauss-Jordan over the integers; returns ``{pivot_col: row}``."""
    pivots: dict = {}
    for row in _integer_rows(rows):
        for c in sorted(c for c in row if c in pivots):
            if c not in row:
                continue
            prow = pivots[c]
            a, p = row[c], prow[c]
            new = {j: p * v for j, v in row.items()}
            for j, v in prow.items():
                s = new.get(j, 0) - a * v
                if s:
                    new[j] = s
                else:
                    new.pop(j, None)
            row = _primitive(new) if new else new
            if not row:
                break
        if not row:
            continue
        c = min(row)
        if row[c] < 0:
            row = {j: -v for j, v in row.items()}
        for pc, prow in list(pivots.items()):
            if c in prow:
                a, p = prow[c], row[c]
                new = {j: p * v for j, v in prow.items()}
                for j, v in row.items():
                    s = new.get(j, 0) - a * v
                    if s:
                        new[j] = s
                    else:
                        new.pop(j, None)
                new = _primitive(new)
                if new[pc] < 0:
                    new = {j: -v for j, v in new.items()}
                pivots[pc] = new
        pivots[c] = row
    return pivots


def _rref_field(rows) -> dict:
    """Gauss-Jordan over a general exact field (Gaussian rationals)."""
    pivots: dict = {}
    for row in rows:
        row = {j: v for j, v in row.items() if v != 0}
        for c in sorted(c for c in row if c in pivots):
            if c not in row:
                continue
            a = row[c]
            for j, v in pivots[c].items():
                s = row.get(j, 0) - a * v
                if s != 0:
                    row[j] = s
                else:
                    row.pop(j, None)
        if not row:
            continue
        c = min(row)
        inv = row[c]
        row = {j: v / inv for j, v in row.items()}
        for pc, prow in pivots.items():
            if c in prow:
                a = prow[c]
                for j, v in row.items():
                    s = prow.get(j, 0) - a * v
                    if s != 0:
                        prow[j] = s
                    else:
                        prow.pop(j, None)
        pivots[c] = row
    return pivots


def null_space_rows(rows, ncols: int) -> list:
    """Exact basis of ``{v : row . v = 0 for every row}``."""
    rows = list(rows)
    rational = all(isinstance(v, (int, Fraction)) for r in rows for v in r.values())
    pivots = _rref_integer(rows) if rational else _rref_field(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for c, prow in pivots.items():
            if f in prow:
                v[c] = -Fraction(prow[f]) / Fraction(prow[c]) if rational else -prow[f] / prow[c]
        basis.append(v)
    return basis


def rank(a: SparseOp) -> int:
    if a.field != EXACT:
        return int(np.linalg.matrix_rank(a.to_numpy()))
    return a.shape[1] - len(null_space(a))


def null_space(a: SparseOp) -> list:
    """Exact basis of the right null space ``{v : a v = 0}``."""
    if a.field != EXACT:
        raise FieldError("null_space needs an exact operator")
    return null_space_rows((a.rows[i] for i in sorted(a.rows)), a.shape[1])


def left_null_space(a: SparseOp) -> list:
    return null_space(transpose(a))


def inverse(a: SparseOp) -> SparseOp:
    """Exact inverse by Gauss-Jordan on ``[a | I]``."""
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError("inverse needs a square operator")
    if a.field != EXACT:
        return SparseOp.from_numpy(np.linalg.inv(a.to_numpy()))
    rows = []
    for i in range(n):
        row = {j: Fraction(v) if not isinstance(v, GaussRat) else v
               for j, v in a.rows.get(i, {}).items()}
        row[n + i] = Fraction(1)
        rows.append(row)
    pivots = _rref_field(rows)
    if any(c not in pivots for c in range(n)):
        raise SingularError("operator is singular")
    entries = {}
    for c in range(n):
        for j, v in pivots[c].items():
            if j >= n:
                entries[(c, j - n)] = v
    return SparseOp((n, n), entries, EXACT)
