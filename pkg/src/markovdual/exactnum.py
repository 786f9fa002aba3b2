"""Exact scalars: rationals, Gaussian rationals and a quadratic extension.

Rationals are plain :class:`fractions.Fraction` values.  ``GaussRat`` adds an
imaginary unit and ``QuadExt`` adjoins a single square root ``sqrt(radicand)``
on top of the Gaussian rationals.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational

Rat = Fraction

_FRACTION_RE = re.compile(r"^\s*(-?\d+)(?:/(\d+))?\s*$")
_DECIMAL_RE = re.compile(r"^\s*(-?)(\d+)\.(\d+)\s*$")


class ParseError(ValueError):
    pass


def rat_parse(text: str) -> Fraction:
    """Parse ``"p"``, ``"p/q"`` or ``"p.ddd"`` into an exact rational.

    Decimals are read digit by digit (denominator ``10**k``); binary floats
    are never involved.
    """
    if not isinstance(text, str):
        raise ParseError(f"expected a string, got {type(text).__name__}")
    m = _FRACTION_RE.match(text)
    if m:
        num, den = m.groups()
        if den is not None and int(den) == 0:
            raise ParseError(f"zero denominator in {text!r}")
        return Fraction(int(num), int(den) if den is not None else 1)
    m = _DECIMAL_RE.match(text)
    if m:
        sign, whole, frac = m.groups()
        value = Fraction(int(whole + frac), 10 ** len(frac))
        return -value if sign else value
    raise ParseError(f"malformed rational {text!r}")


def rat_str(x) -> str:
    """Canonical rendering ``p/q`` (``q`` omitted when 1)."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def _as_rat(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


class GaussRat:
    """Rational complex number ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _as_rat(re)
        self.im = _as_rat(im)

    @classmethod
    def coerce(cls, x) -> "GaussRat":
        if isinstance(x, GaussRat):
            return x
        return cls(x, 0)

    def conjugate(self) -> "GaussRat":
        return GaussRat(self.re, -self.im)

    def norm(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __add__(self, other):
        if isinstance(other, QuadExt):
            return NotImplemented
        try:
            o = GaussRat.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussRat(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __sub__(self, other):
        if isinstance(other, QuadExt):
            return NotImplemented
        try:
            o = GaussRat.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussRat(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, QuadExt):
            return NotImplemented
        try:
            o = GaussRat.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussRat(self.re * o.re - self.im * o.im,
                        self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, QuadExt):
            return NotImplemented
        o = GaussRat.coerce(other)
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("GaussRat division by zero")
        p = self * o.conjugate()
        return GaussRat(p.re / n, p.im / n)

    def __rtruediv__(self, other):
        return GaussRat.coerce(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return GaussRat(1) / self ** (-k)
        out = GaussRat(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, QuadExt):
            return other == self
        try:
            o = GaussRat.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussRat({rat_str(self.re)}, {rat_str(self.im)})"

    def __str__(self):
        if self.im == 0:
            return rat_str(self.re)
        if self.re == 0:
            return f"{rat_str(self.im)}i"
        sign = "+" if self.im > 0 else "-"
        return f"{rat_str(self.re)}{sign}{rat_str(abs(self.im))}i"


I = GaussRat(0, 1)


class QuadExt:
    """``a + b*sqrt(radicand)`` with Gaussian-rational ``a``, ``b``."""

    __slots__ = ("a", "b", "radicand")

    def __init__(self, a=0, b=0, radicand=0):
        self.a = GaussRat.coerce(a)
        self.b = GaussRat.coerce(b)
        self.radicand = _as_rat(radicand)
        if self.radicand < 0:
            raise ValueError("radicand must be nonnegative")

    @classmethod
    def sqrt(cls, radicand) -> "QuadExt":
        return cls(0, 1, radicand)

    def _lift(self, other) -> "QuadExt":
        if isinstance(other, QuadExt):
            if other.radicand != self.radicand:
                raise ValueError(
                    f"mismatched radicands {self.radicand} and {other.radicand}")
            return other
        return QuadExt(GaussRat.coerce(other), 0, self.radicand)

    def is_base(self) -> bool:
        """True when the value lies in the Gaussian rationals (b == 0)."""
        return not self.b

    def __add__(self, other):
        o = self._lift(other)
        return QuadExt(self.a + o.a, self.b + o.b, self.radicand)

    __radd__ = __add__

    def __neg__(self):
        return QuadExt(-self.a, -self.b, self.radicand)

    def __sub__(self, other):
        o = self._lift(other)
        return QuadExt(self.a - o.a, self.b - o.b, self.radicand)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        r = self.radicand
        return QuadExt(self.a * o.a + self.b * o.b * r,
                       self.a * o.b + self.b * o.a, r)

    __rmul__ = __mul__

    def norm(self) -> GaussRat:
        return self.a * self.a - self.b * self.b * self.radicand

    def __truediv__(self, other):
        o = self._lift(other)
        n = o.norm()
        if not n:
            raise ZeroDivisionError("QuadExt division by zero-norm element")
        conj = QuadExt(o.a, -o.b, self.radicand)
        p = self * conj
        return QuadExt(p.a / n, p.b / n, self.radicand)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __eq__(self, other):
        if isinstance(other, QuadExt):
            if other.radicand != self.radicand:
                raise ValueError("mismatched radicands")
            return self.a == other.a and self.b == other.b
        try:
            o = GaussRat.coerce(other)
        except TypeError:
            return NotImplemented
        return not self.b and self.a == o

    def __hash__(self):
        if not self.b:
            return hash(self.a)
        return hash((self.a, self.b, self.radicand))

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __repr__(self):
        return f"QuadExt({self.a}, {self.b}, sqrt={rat_str(self.radicand)})"


def quadext_mul(x: QuadExt, y: QuadExt) -> QuadExt:
    return x * y


def conj(x):
    """Complex conjugate for any supported scalar (identity on reals)."""
    if isinstance(x, (GaussRat, complex)):
        return x.conjugate()
    if isinstance(x, QuadExt):
        return QuadExt(x.a.conjugate(), x.b.conjugate(), x.radicand)
    return x


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, GaussRat, QuadExt))


def to_complex(x) -> complex:
    if isinstance(x, QuadExt):
        root = float(x.radicand) ** 0.5
        return complex(x.a) + complex(x.b) * root
    return complex(x)
