"""Scalar fields used throughout the package.

Two arithmetic modes exist. EXACT works over the Gaussian rationals Q(i)
via :class:`Gauss`; FLOAT works over Python/NumPy ``complex``. A pipeline
runs in one mode and mixing the two raises :class:`ModeError`.
"""
from __future__ import annotations

import enum
import math
import numbers
from fractions import Fraction

import numpy as np

DEFAULT_TOL = 1e-9


class ModeError(TypeError):
    """Raised when exact and floating scalars meet in one computation."""


class Mode(str, enum.Enum):
    EXACT = "exact"
    FLOAT = "float"


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool) or not isinstance(x, (numbers.Rational, str)):
        raise ModeError(f"cannot use {type(x).__name__} {x!r} as an exact rational")
    return Fraction(x)


class Gauss:
    """Gaussian rational ``real + imag*i`` with Fraction parts."""

    __slots__ = ("real", "imag")

    def __init__(self, real=0, imag=0):
        self.real = _frac(real)
        self.imag = _frac(imag)

    @classmethod
    def _make(cls, re: Fraction, im: Fraction) -> "Gauss":
        z = object.__new__(cls)
        z.real = re
        z.imag = im
        return z

    @staticmethod
    def coerce(x) -> "Gauss":
        if isinstance(x, Gauss):
            return x
        if isinstance(x, numbers.Rational) and not isinstance(x, bool):
            return Gauss._make(Fraction(x), Fraction(0))
        raise ModeError(f"cannot mix exact scalars with {type(x).__name__} {x!r}")

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        o = Gauss.coerce(other)
        return Gauss._make(self.real + o.real, self.imag + o.imag)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        o = Gauss.coerce(other)
        return Gauss._make(self.real - o.real, self.imag - o.imag)

    def __rsub__(self, other):
        return Gauss.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        o = Gauss.coerce(other)
        a, b, c, d = self.real, self.imag, o.real, o.imag
        if not b and not d:
            return Gauss._make(a * c, b)
        return Gauss._make(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        o = Gauss.coerce(other)
        n = o.norm2()
        if not n:
            raise ZeroDivisionError("division by exact zero")
        c, d = o.real / n, -o.imag / n
        a, b = self.real, self.imag
        return Gauss._make(a * c - b * d, a * d + b * c)

    def __rtruediv__(self, other):
        return Gauss.coerce(other) / self

    def __neg__(self):
        return Gauss._make(-self.real, -self.imag)

    def __pos__(self):
        return self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers")
        if n < 0:
            return Gauss._make(Fraction(1), Fraction(0)) / (self ** -n)
        out = Gauss._make(Fraction(1), Fraction(0))
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self) -> "Gauss":
        return Gauss._make(self.real, -self.imag)

    def norm2(self) -> Fraction:
        return self.real * self.real + self.imag * self.imag

    # comparisons ------------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Gauss):
            return self.real == other.real and self.imag == other.imag
        if isinstance(other, numbers.Rational):
            return self.imag == 0 and self.real == other
        return NotImplemented

    def __hash__(self):
        if not self.imag:
            return hash(self.real)
        return hash((self.real, self.imag))

    def __bool__(self):
        return bool(self.real) or bool(self.imag)

    def __complex__(self):
        return complex(float(self.real), float(self.imag))

    def sort_key(self):
        return (self.real, self.imag)

    def __repr__(self):
        return f"Gauss({self.real!s}, {self.imag!s})"

    def __str__(self):
        re, im = self.real, self.imag
        if not im:
            return str(re)
        ims = "i" if im == 1 else "-i" if im == -1 else f"{im}i"
        if not re:
            return ims
        sign = "" if ims.startswith("-") else "+"
        return f"({re}{sign}{ims})"


ZERO = Gauss._make(Fraction(0), Fraction(0))
ONE = Gauss._make(Fraction(1), Fraction(0))
I_UNIT = Gauss._make(Fraction(0), Fraction(1))


# helpers ------------------------------------------------------------------

def mode_of(x) -> Mode:
    """Mode of a scalar or array."""
    if isinstance(x, np.ndarray):
        if x.dtype == object:
            return Mode.EXACT
        return Mode.FLOAT
    if isinstance(x, Gauss):
        return Mode.EXACT
    if isinstance(x, (float, complex, np.floating, np.complexfloating)):
        return Mode.FLOAT
    if isinstance(x, numbers.Rational):
        return Mode.EXACT
    raise TypeError(f"not a scalar: {x!r}")


def is_zero(x, tol: float = DEFAULT_TOL) -> bool:
    if isinstance(x, Gauss):
        return not x
    if isinstance(x, numbers.Rational):
        return x == 0
    return abs(x) <= tol


def to_complex_array(a) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype == object:
        return np.vectorize(complex, otypes=[complex])(a) if a.size else a.astype(complex)
    return a.astype(complex)


def to_exact_array(a) -> np.ndarray:
    """Object array of Gauss; floats are rejected (mode mixing)."""
    a = np.asarray(a, dtype=object)
    out = np.empty(a.shape, dtype=object)
    for idx, v in np.ndenumerate(a):
        out[idx] = Gauss.coerce(v)
    return out


def rational_sqrt(q: Fraction) -> Fraction | None:
    """Exact square root of a nonnegative rational, or None."""
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def gauss_sqrt(z: Gauss) -> Gauss | None:
    """A square root of ``z`` in Q(i), or None when it is irrational."""
    a, b = z.real, z.imag
    if not b:
        if a >= 0:
            r = rational_sqrt(a)
            return None if r is None else Gauss._make(r, Fraction(0))
        r = rational_sqrt(-a)
        return None if r is None else Gauss._make(Fraction(0), r)
    mod = rational_sqrt(a * a + b * b)
    if mod is None:
        return None
    x = rational_sqrt((a + mod) / 2)
    if x is None or not x:
        return None
    return Gauss._make(x, b / (2 * x))


def split_sqrt(q: Fraction) -> tuple[Fraction, int]:
    """Write sqrt(q) as ``c * sqrt(k)`` with rational c and integer k.

    Square factors below 10^4 are pulled out of k; k == 1 means exact.
    """
    if q < 0:
        raise ValueError("negative radicand")
    n = q.numerator * q.denominator
    c = Fraction(1, q.denominator)
    r = math.isqrt(n)
    if r * r == n:
        return c * r, 1
    p = 2
    while p * p <= n and p < 10_000:
        while n % (p * p) == 0:
            n //= p * p
            c *= p
        p += 1
    return c, n


def rationalize(z: complex, max_den: int = 10**6, tol: float = 1e-12) -> Gauss | None:
    """Nearest Gaussian rational with bounded denominators, if it is close."""
    re = Fraction(z.real).limit_denominator(max_den)
    im = Fraction(z.imag).limit_denominator(max_den)
    if abs(complex(float(re), float(im)) - z) > tol * max(1.0, abs(z)):
        return None
    return Gauss._make(re, im)


def parse_exact(token) -> Fraction:
    """Parse a JSON scalar part: int, decimal-looking float, or 'p/q' string."""
    if isinstance(token, bool):
        raise ValueError(f"boolean is not a scalar: {token!r}")
    if isinstance(token, int):
        return Fraction(token)
    if isinstance(token, float):
        return Fraction(repr(token))
    if isinstance(token, str):
        f = Fraction(token.strip())
        return f
    raise ValueError(f"not a scalar token: {token!r}")


def parse_float(token) -> float:
    if isinstance(token, bool):
        raise ValueError(f"boolean is not a scalar: {token!r}")
    if isinstance(token, (int, float)):
        return float(token)
    if isinstance(token, str):
        return float(Fraction(token.strip()))
    raise ValueError(f"not a scalar token: {token!r}")


def fmt_float(x: float) -> str:
    return format(x, ".12g")


def scalar_str(c) -> str:
    if isinstance(c, Gauss):
        return str(c)
    if isinstance(c, numbers.Rational):
        return str(c)
    c = complex(c)
    if c.imag == 0:
        return fmt_float(c.real)
    if c.real == 0:
        return f"{fmt_float(c.imag)}i"
    sign = "+" if c.imag >= 0 or math.isnan(c.imag) else "-"
    return f"({fmt_float(c.real)}{sign}{fmt_float(abs(c.imag))}i)"


def parse_scalar_str(s: str, mode: Mode):
    """Inverse of :func:`scalar_str` for either mode."""
    s = s.strip()
    if s.startswith("(") and s.endswith(")"):
        s = s[1:-1]
    if not s.endswith("i"):
        if mode is Mode.EXACT:
            return Gauss(Fraction(s))
        return complex(float(s))
    body = s[:-1]
    # split at the last sign that is not an exponent sign or leading sign
    cut = None
    for k in range(len(body) - 1, 0, -1):
        if body[k] in "+-" and body[k - 1] not in "eE":
            cut = k
            break
    if cut is None:
        re_s, im_s = "0", body
    else:
        re_s, im_s = body[:cut], body[cut:]
    if im_s in ("", "+"):
        im_s = "1"
    elif im_s == "-":
        im_s = "-1"
    if mode is Mode.EXACT:
        return Gauss(Fraction(re_s), Fraction(im_s))
    return complex(float(re_s), float(im_s))
