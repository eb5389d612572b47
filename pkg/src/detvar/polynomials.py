"""Sparse multihomogeneous polynomials over Q(i) or complex floats.

Variables come in groups, one group per projective factor. Group ``g``
(numbered from 1 in text) owns variables ``r{g}_0 .. r{g}_{d-1}``.
Exponent vectors are flat tuples over all variables, groups concatenated.

Besides ring arithmetic the module provides the factorization tools the
linearity test relies on: group separation (rank-one coefficient tensors),
binary-form splitting, numeric linear-factor deflation for larger groups,
and extraction of bilinear factors on CP^1 x CP^1.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .scalars import (
    DEFAULT_TOL,
    ONE,
    ZERO,
    Gauss,
    Mode,
    ModeError,
    gauss_sqrt,
    parse_scalar_str,
    rationalize,
    scalar_str,
)


class PolynomialError(ValueError):
    pass


def _coerce_coef(c):
    if isinstance(c, Gauss):
        return c
    if isinstance(c, (int, Fraction)) and not isinstance(c, bool):
        return Gauss(c)
    if isinstance(c, (float, complex, np.number)):
        return complex(c)
    raise ModeError(f"unsupported coefficient {c!r}")


def _nonzero(c) -> bool:
    return bool(c) if isinstance(c, Gauss) else c != 0


class MultiPoly:
    """Immutable sparse polynomial; ``terms`` maps exponent tuples to coefficients."""

    __slots__ = ("groups", "terms")

    def __init__(self, groups: Sequence[int], terms: dict | None = None):
        self.groups = tuple(int(d) for d in groups)
        n = sum(self.groups)
        clean = {}
        for e, c in (terms or {}).items():
            e = tuple(e)
            if len(e) != n:
                raise PolynomialError(f"exponent vector {e} has wrong length (expected {n})")
            c = _coerce_coef(c)
            if _nonzero(c):
                clean[e] = c
        self.terms = clean

    @classmethod
    def _raw(cls, groups, terms):
        p = object.__new__(cls)
        p.groups = groups
        p.terms = terms
        return p

    # constructors -------------------------------------------------------------
    @classmethod
    def zero(cls, groups) -> "MultiPoly":
        return cls(groups)

    @classmethod
    def constant(cls, groups, c) -> "MultiPoly":
        return cls(groups, {(0,) * sum(groups): c})

    @classmethod
    def var(cls, groups, g: int, i: int, coef=ONE) -> "MultiPoly":
        """Variable ``r{g+1}_{i}`` (``g`` is 0-based here)."""
        groups = tuple(groups)
        e = [0] * sum(groups)
        e[sum(groups[:g]) + i] = 1
        return cls(groups, {tuple(e): coef})

    @property
    def nvars(self) -> int:
        return sum(self.groups)

    def offsets(self) -> list[int]:
        out, acc = [], 0
        for d in self.groups:
            out.append(acc)
            acc += d
        return out

    @property
    def mode(self) -> Mode | None:
        for c in self.terms.values():
            return Mode.EXACT if isinstance(c, Gauss) else Mode.FLOAT
        return None

    def is_zero(self) -> bool:
        return not self.terms

    def _check(self, other: "MultiPoly"):
        if self.groups != other.groups:
            raise PolynomialError(f"group signature mismatch: {self.groups} vs {other.groups}")

    # arithmetic ---------------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(self.groups, other)
        self._check(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            if e in t:
                v = t[e] + c
                if _nonzero(v):
                    t[e] = v
                else:
                    del t[e]
            else:
                t[e] = c
        return MultiPoly._raw(self.groups, t)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._raw(self.groups, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(self.groups, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "MultiPoly":
        c = _coerce_coef(c)
        if not _nonzero(c):
            return MultiPoly.zero(self.groups)
        return MultiPoly._raw(self.groups, {e: v * c for e, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            return self.scale(other)
        self._check(other)
        t: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = c1 * c2
                if e in t:
                    t[e] = t[e] + v
                else:
                    t[e] = v
        return MultiPoly._raw(self.groups, {e: c for e, c in t.items() if _nonzero(c)})

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, n: int):
        if n < 0:
            raise PolynomialError("negative power")
        out = MultiPoly.constant(self.groups, self._one())
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def _one(self):
        return 1.0 + 0j if self.mode is Mode.FLOAT else ONE

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.groups == other.groups and self.terms == other.terms

    __hash__ = None

    def allclose(self, other: "MultiPoly", tol: float = DEFAULT_TOL) -> bool:
        """Coefficientwise equality within ``tol`` relative to the larger norm."""
        self._check(other)
        scale = max(self.max_abs(), other.max_abs(), 1e-300)
        keys = set(self.terms) | set(other.terms)
        for e in keys:
            a = complex(self.terms.get(e, 0))
            b = complex(other.terms.get(e, 0))
            if abs(a - b) > tol * scale:
                return False
        return True

    # inspection ---------------------------------------------------------------
    def max_abs(self) -> float:
        return max((abs(complex(c)) for c in self.terms.values()), default=0.0)

    def sorted_terms(self, reverse: bool = True):
        return sorted(self.terms.items(), key=lambda kv: kv[0], reverse=reverse)

    def split_exps(self, e) -> tuple[tuple[int, ...], ...]:
        out, acc = [], 0
        for d in self.groups:
            out.append(tuple(e[acc : acc + d]))
            acc += d
        return tuple(out)

    def multidegree(self) -> tuple[int, ...] | None:
        """Per-group degrees if multihomogeneous (None for zero or mixed)."""
        degs = None
        for e in self.terms:
            d = tuple(sum(part) for part in self.split_exps(e))
            if degs is None:
                degs = d
            elif d != degs:
                return None
        return degs

    def is_multihomogeneous(self) -> bool:
        return self.is_zero() or self.multidegree() is not None

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def leading_term(self):
        e = max(self.terms)
        return e, self.terms[e]

    def pivot_term(self):
        """Lexicographically smallest exponent vector with its coefficient."""
        e = min(self.terms)
        return e, self.terms[e]

    def normalized(self) -> "MultiPoly":
        """Scaled so the pivot coefficient is 1 (canonical up to a scalar)."""
        if self.is_zero():
            return self
        _, c = self.pivot_term()
        one = ONE if isinstance(c, Gauss) else 1.0
        return self.scale(one / c)

    def variables_used(self) -> set[int]:
        used = set()
        for e in self.terms:
            used.update(i for i, x in enumerate(e) if x)
        return used

    # conversions ----------------------------------------------------------------
    def to_float(self) -> "MultiPoly":
        return MultiPoly._raw(self.groups, {e: complex(c) for e, c in self.terms.items()})

    def chop(self, tol: float = DEFAULT_TOL) -> "MultiPoly":
        """Drop float coefficients below ``tol`` times the largest one."""
        if self.mode is not Mode.FLOAT:
            return self
        cut = tol * self.max_abs()
        return MultiPoly._raw(self.groups, {e: c for e, c in self.terms.items() if abs(c) > cut})

    def permute(self, perm: Sequence[int]) -> "MultiPoly":
        """Rename variable ``perm[i]`` to position ``i``."""
        return MultiPoly._raw(
            self.groups, {tuple(e[p] for p in perm): c for e, c in self.terms.items()}
        )

    # calculus / evaluation ---------------------------------------------------------
    def evaluate(self, point):
        """Evaluate at a flat coordinate vector or a list of per-group vectors."""
        flat = _flatten_point(point, self.groups)
        acc = 0
        for e, c in self.terms.items():
            v = c
            for x, k in zip(flat, e):
                if k:
                    v = v * x**k
            acc = acc + v
        if isinstance(acc, int) and self.mode is Mode.EXACT:
            return ZERO
        return acc

    def derivative(self, var: int) -> "MultiPoly":
        t = {}
        for e, c in self.terms.items():
            k = e[var]
            if k:
                e2 = list(e)
                e2[var] -= 1
                t[tuple(e2)] = c * k
        return MultiPoly._raw(self.groups, t)

    def directional_derivative(self, direction: Sequence) -> "MultiPoly":
        out = MultiPoly.zero(self.groups)
        for i, w in enumerate(direction):
            if w != 0:
                out = out + self.derivative(i).scale(w)
        return out

    def gradient_at(self, point) -> list:
        return [self.derivative(i).evaluate(point) for i in range(self.nvars)]

    def substitute(self, mats: Sequence) -> "MultiPoly":
        """Linear change of variables per group: ``r^g -> M_g r^g``.

        ``mats[g]`` is a d_g x d_g array (or None for identity); variable
        ``r{g}_i`` is replaced by ``sum_j M_g[i, j] r{g}_j``.
        """
        images = []
        for g, d in enumerate(self.groups):
            M = mats[g]
            for i in range(d):
                if M is None:
                    images.append(MultiPoly.var(self.groups, g, i, self._one()))
                    continue
                img = MultiPoly.zero(self.groups)
                for j in range(d):
                    if M[i][j] != 0:
                        img = img + MultiPoly.var(self.groups, g, j, M[i][j])
                images.append(img)
        cache: dict = {}

        def power(i, k):
            key = (i, k)
            if key not in cache:
                cache[key] = images[i] ** k
            return cache[key]

        out = MultiPoly.zero(self.groups)
        for e, c in self.terms.items():
            term = MultiPoly.constant(self.groups, c)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            out = out + term
        return out

    # text ---------------------------------------------------------------------------
    def var_name(self, i: int) -> str:
        for g, off in enumerate(self.offsets()):
            if off <= i < off + self.groups[g]:
                return f"r{g + 1}_{i - off}"
        raise IndexError(i)

    def render(self) -> str:
        """Deterministic text: ``c * r1_0^2 * r2_1 + ...`` (lex-descending terms)."""
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            factors = [scalar_str(c)]
            for i, k in enumerate(e):
                if k:
                    factors.append(self.var_name(i) + (f"^{k}" if k > 1 else ""))
            parts.append(" * ".join(factors))
        return " + ".join(parts)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"MultiPoly({self.groups}, {self.render()!r})"

    @classmethod
    def parse(cls, text: str, groups: Sequence[int], mode: Mode = Mode.EXACT) -> "MultiPoly":
        """Inverse of :meth:`render`."""
        groups = tuple(groups)
        offs = list(itertools.accumulate((0,) + groups[:-1]))
        text = text.strip()
        if text == "0":
            return cls(groups)
        terms: dict = {}
        for part in text.split(" + "):
            toks = part.split(" * ")
            c = parse_scalar_str(toks[0], mode)
            e = [0] * sum(groups)
            for tok in toks[1:]:
                name, _, k = tok.partition("^")
                if not name.startswith("r") or "_" not in name:
                    raise PolynomialError(f"bad variable token {tok!r}")
                g_s, i_s = name[1:].split("_")
                g, i = int(g_s) - 1, int(i_s)
                if not (0 <= g < len(groups) and 0 <= i < groups[g]):
                    raise PolynomialError(f"variable {name} outside signature {groups}")
                e[offs[g] + i] += int(k) if k else 1
            e = tuple(e)
            terms[e] = terms[e] + c if e in terms else c
        return cls(groups, terms)


def _flatten_point(point, groups) -> list:
    if len(point) == len(groups) and all(np.ndim(p) == 1 for p in point):
        flat = []
        for p, d in zip(point, groups):
            if len(p) != d:
                raise PolynomialError("point group has wrong length")
            flat.extend(p)
        return flat
    flat = list(point)
    if len(flat) != sum(groups):
        raise PolynomialError("point has wrong length")
    return flat


def poly_from_linear(groups, g: int, coeffs: Sequence) -> MultiPoly:
    out = MultiPoly.zero(groups)
    for i, c in enumerate(coeffs):
        if _nonzero(_coerce_coef(c)):
            out = out + MultiPoly.var(groups, g, i, c)
    return out


# determinants ------------------------------------------------------------------

def poly_minors(M: Sequence[Sequence[MultiPoly]], t: int):
    """All t x t minors of a matrix of polynomials.

    Returns ``(rows, cols, poly)`` triples ordered by row subset then column
    subset. Laplace expansion along rows, memoized on column subsets.
    """
    nr = len(M)
    nc = len(M[0]) if nr else 0
    if not 1 <= t <= min(nr, nc):
        raise PolynomialError(f"minor size {t} out of range for a {nr}x{nc} matrix")
    groups = M[0][0].groups
    mode = next((m.mode for row in M for m in row if m.mode is not None), Mode.EXACT)
    one = MultiPoly.constant(groups, ONE if mode is Mode.EXACT else 1.0 + 0j)
    out = []
    for R in itertools.combinations(range(nr), t):
        memo: dict = {}

        def minor(k, cols):
            if k == t:
                return one
            key = (k, cols)
            hit = memo.get(key)
            if hit is not None:
                return hit
            acc = MultiPoly.zero(groups)
            for idx, c in enumerate(cols):
                entry = M[R[k]][c]
                if entry.is_zero():
                    continue
                sub = minor(k + 1, cols[:idx] + cols[idx + 1 :])
                if sub.is_zero():
                    continue
                term = entry * sub
                acc = acc + term if idx % 2 == 0 else acc - term
            memo[key] = acc
            return acc

        for C in itertools.combinations(range(nc), t):
            out.append((R, C, minor(0, C)))
    return out


def poly_det(M: Sequence[Sequence[MultiPoly]]) -> MultiPoly:
    n = len(M)
    if any(len(row) != n for row in M):
        raise PolynomialError("determinant needs a square matrix")
    return poly_minors(M, n)[0][2]


# division ------------------------------------------------------------------------

def divide_with_residual(p: MultiPoly, q: MultiPoly, tol: float = DEFAULT_TOL):
    """Long division in lex order; returns ``(quotient or None, residual)``.

    Exact coefficients: quotient only when the remainder is exactly zero.
    Float coefficients: remainder terms below ``tol * |p|`` are discarded and
    accumulated into the relative residual.
    """
    p._check(q)
    if q.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    exact = p.mode is not Mode.FLOAT and q.mode is not Mode.FLOAT
    lt_e, lt_c = q.leading_term()
    rem = dict(p.terms)
    quot: dict = {}
    scale = p.max_abs() or 1.0
    cut = 0.0 if exact else 1e-3 * tol * scale
    residual = 0.0
    while rem:
        e = max(rem)
        c = rem.pop(e)
        if any(a < b for a, b in zip(e, lt_e)):
            if exact or abs(c) > tol * scale:
                return None, math.inf if exact else abs(c) / scale
            residual = max(residual, abs(c) / scale)
            continue
        m = tuple(a - b for a, b in zip(e, lt_e))
        f = c / lt_c
        quot[m] = f
        for qe, qc in q.terms.items():
            if qe == lt_e:
                continue
            k = tuple(a + b for a, b in zip(m, qe))
            v = rem.get(k, 0) - f * qc
            if exact:
                if v:
                    rem[k] = v
                else:
                    rem.pop(k, None)
            elif abs(v) > cut:
                rem[k] = v
            else:
                rem.pop(k, None)
    return MultiPoly(p.groups, quot), residual


def divide_exact(p: MultiPoly, q: MultiPoly, tol: float = DEFAULT_TOL) -> MultiPoly | None:
    """``s`` with ``p == q*s`` (exact, or residual < tol for floats), else None."""
    s, res = divide_with_residual(p, q, tol)
    if s is None or res >= tol:
        return None
    return s


@dataclass(frozen=True)
class LinearForm:
    """``sum_i coeffs[i] * r{group+1}_i``; normalized so the first nonzero is 1."""

    group: int
    coeffs: tuple

    @classmethod
    def make(cls, group: int, coeffs: Sequence) -> "LinearForm":
        coeffs = [_coerce_coef(c) for c in coeffs]
        if any(isinstance(c, complex) for c in coeffs):
            big = max(abs(c) for c in coeffs)
            coeffs = [0j if abs(c) <= 1e-12 * big else c for c in coeffs]
        lead = next((c for c in coeffs if _nonzero(c)), None)
        if lead is None:
            raise PolynomialError("linear form with all coefficients zero")
        return cls(group, tuple(c / lead for c in coeffs))

    def to_poly(self, groups) -> MultiPoly:
        return poly_from_linear(groups, self.group, self.coeffs)

    def sort_key(self):
        return tuple(_sort_key(c) for c in self.coeffs)

    def render(self) -> str:
        return LinearForm.to_poly(self, [0] * self.group + [len(self.coeffs)]).render()

    def to_float(self) -> "LinearForm":
        return LinearForm(self.group, tuple(complex(c) for c in self.coeffs))


def _sort_key(c):
    if isinstance(c, Gauss):
        return (float(c.real), float(c.imag))
    c = complex(c)
    return (round(c.real, 9), round(c.imag, 9))


def divide_by_linear(p: MultiPoly, form: LinearForm):
    """Synthetic division by a linear form; returns ``(quotient, remainder)``."""
    groups = p.groups
    off = p.offsets()[form.group]
    coeffs = list(form.coeffs)
    if p.mode is Mode.FLOAT:
        coeffs = [complex(c) for c in coeffs]
        j = int(np.argmax([abs(c) for c in coeffs]))
    else:
        j = next(i for i, c in enumerate(coeffs) if _nonzero(c))
    var = off + j
    lead = coeffs[j]
    rest = poly_from_linear(groups, form.group, [0 if i == j else c for i, c in enumerate(coeffs)])
    if p.mode is Mode.FLOAT:
        rest = rest.to_float()
    slices: dict[int, dict] = {}
    for e, c in p.terms.items():
        k = e[var]
        e2 = list(e)
        e2[var] = 0
        slices.setdefault(k, {})[tuple(e2)] = c
    if not slices:
        return MultiPoly.zero(groups), MultiPoly.zero(groups)
    n = max(slices)
    P = {k: MultiPoly._raw(groups, slices.get(k, {})) for k in range(n + 1)}
    Q = {}
    cur = P[n].scale(1 / lead) if n > 0 else None
    for k in range(n, 0, -1):
        Q[k - 1] = P[k].scale(1 / lead) if k == n else (P[k] - rest * Q[k]).scale(1 / lead)
    remainder = P[0] - rest * Q[0] if n > 0 else P[0]
    quot = MultiPoly.zero(groups)
    xv = [0] * p.nvars
    for k, qk in Q.items():
        for e, c in qk.terms.items():
            e2 = list(e)
            e2[var] += k
            quot = quot + MultiPoly._raw(groups, {tuple(e2): c})
    del cur, xv
    return quot, remainder


# group separation ----------------------------------------------------------------

@dataclass
class Separation:
    """Outcome of :func:`group_separable_factor`.

    When ``separable``: ``p == constant * prod(factors)`` with ``factors[g]``
    involving only group ``g``. Otherwise ``certificate`` records a
    nonvanishing 2x2 minor of a flattening of the coefficient tensor.
    """

    separable: bool
    constant: object = None
    factors: list = field(default_factory=list)
    certificate: dict | None = None


def group_separable_factor(p: MultiPoly, tol: float = DEFAULT_TOL) -> Separation:
    if p.is_zero():
        raise PolynomialError("cannot separate the zero polynomial")
    if not p.is_multihomogeneous():
        raise PolynomialError("polynomial is not multihomogeneous")
    G = len(p.groups)
    exact = p.mode is Mode.EXACT
    scale = p.max_abs()
    pivot_e, c0 = p.pivot_term()
    parts = {e: p.split_exps(e) for e in p.terms}
    pivot_parts = p.split_exps(pivot_e)

    def coef(part_tuple):
        e = tuple(x for part in part_tuple for x in part)
        return p.terms.get(e, 0)

    for g in range(G):
        rows = sorted({pp[g] for pp in parts.values()})
        cols = sorted({pp[:g] + pp[g + 1 :] for pp in parts.values()})
        a0 = pivot_parts[g]
        b0 = pivot_parts[:g] + pivot_parts[g + 1 :]
        for a in rows:
            for b in cols:
                full = b[:g] + (a,) + b[g:]
                full_ab0 = b0[:g] + (a,) + b0[g:]
                full_a0b = b[:g] + (a0,) + b[g:]
                m = coef(full) * c0 - coef(full_ab0) * coef(full_a0b)
                nz = _nonzero(m) if exact else abs(m) > tol * scale * scale
                if nz:
                    return Separation(
                        False,
                        certificate={
                            "group": g + 1,
                            "rows": [list(a0), list(a)],
                            "cols": [[list(x) for x in b0], [list(x) for x in b]],
                            "minor": m,
                        },
                    )
    factors = []
    offs = p.offsets()
    for g in range(G):
        t = {}
        for e, pp in parts.items():
            if pp[:g] + pp[g + 1 :] == pivot_parts[:g] + pivot_parts[g + 1 :]:
                ee = [0] * p.nvars
                ee[offs[g] : offs[g] + p.groups[g]] = pp[g]
                t[tuple(ee)] = p.terms[e]
        factors.append(MultiPoly(p.groups, t))
    const = (ONE if exact else 1.0 + 0j) / (c0 ** (G - 1))
    recon = MultiPoly.constant(p.groups, const)
    for f in factors:
        recon = recon * f
    ok = recon == p if exact else recon.allclose(p, tol)
    if not ok:  # pragma: no cover - guarded by the rank test above
        raise PolynomialError("separation failed to reconstruct the polynomial")
    return Separation(True, const, factors)


# binary forms --------------------------------------------------------------------

def _uni_eval(coeffs, x):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _uni_deflate(coeffs, root):
    """Divide sum c_k t^k by (t - root); returns (quotient, remainder)."""
    n = len(coeffs) - 1
    q = [0] * n
    acc = coeffs[n]
    for k in range(n - 1, -1, -1):
        q[k] = acc
        acc = coeffs[k] + acc * root
    return q, acc


def _cluster(values: Sequence[complex], radius: float):
    """Group nearby complex numbers; returns [(centroid, count)] in input order."""
    clusters: list[list[complex]] = []
    for v in values:
        for cl in clusters:
            if abs(cl[0] - v) <= radius * max(1.0, abs(v)):
                cl.append(v)
                break
        else:
            clusters.append([v])
    return [(complex(np.mean(cl)), len(cl)) for cl in clusters]


@dataclass
class BinaryFactors:
    group: int
    constant: object
    forms: list  # [(LinearForm, multiplicity)]
    exact: bool
    residual: float = 0.0

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.forms)


def _single_group(f: MultiPoly, g: int):
    offs = f.offsets()
    lo, hi = offs[g], offs[g] + f.groups[g]
    for e in f.terms:
        if any(e[i] for i in range(len(e)) if not lo <= i < hi):
            raise PolynomialError(f"polynomial involves variables outside group {g + 1}")
    return lo, hi


def binary_linear_factors(f: MultiPoly, g: int, tol: float = DEFAULT_TOL) -> BinaryFactors:
    """Split a binary form in group ``g`` (0-based, two variables) into linear forms."""
    if f.is_zero():
        raise PolynomialError("cannot factor the zero polynomial")
    if f.groups[g] != 2:
        raise PolynomialError("binary factoring needs a two-variable group")
    lo, _ = _single_group(f, g)
    degs = {e[lo] + e[lo + 1] for e in f.terms}
    if len(degs) != 1:
        raise PolynomialError("binary form is not homogeneous")
    n = degs.pop()
    exact = f.mode is Mode.EXACT
    c = [ZERO if exact else 0j] * (n + 1)
    for e, v in f.terms.items():
        c[e[lo]] = v
    nz = [k for k in range(n + 1) if _nonzero(c[k])]
    kmin, kmax = nz[0], nz[-1]
    q = c[kmin : kmax + 1]
    lead = q[-1]
    x_form = LinearForm.make(g, [1, 0] if exact else [1.0, 0.0])
    y_form = LinearForm.make(g, [0, 1] if exact else [0.0, 1.0])
    roots: list = []
    numeric_roots: list = []
    if exact:
        q = list(q)
        while len(q) > 1:
            deg = len(q) - 1
            if deg <= 2:
                sol = _exact_small_roots(q)
                if sol is not None:
                    roots.extend(sol)
                    q = [q[-1]]
                    break
            r = _find_rational_root(q)
            if r is None:
                numeric_roots = list(np.roots([complex(x) for x in reversed(q)]))
                break
            q, _ = _uni_deflate(q, r)
            roots.append(r)
    else:
        if len(q) > 1:
            numeric_roots = list(np.roots([complex(x) for x in reversed(q)]))
    forms: dict = {}

    def add(form, m=1):
        forms[form] = forms.get(form, 0) + m

    if kmin:
        add(x_form, kmin)
    if n - kmax:
        add(y_form, n - kmax)
    for r in roots:
        add(LinearForm.make(g, [ONE, -r]))
    for r, m in _cluster(numeric_roots, 1e-6):
        add(LinearForm.make(g, [1.0 + 0j, -r]), m)
    is_exact = exact and not numeric_roots
    items = sorted(forms.items(), key=lambda kv: kv[0].sort_key())
    out = BinaryFactors(g, lead, items, is_exact)
    recon = MultiPoly.constant(f.groups, lead if is_exact else complex(lead))
    for form, m in items:
        lp = form.to_poly(f.groups)
        recon = recon * (lp if is_exact else lp.to_float()) ** m
    if is_exact:
        if recon != f:  # pragma: no cover - exact roots always reconstruct
            raise PolynomialError("exact binary factorization failed to reconstruct")
    else:
        diff = recon - f.to_float()
        out.residual = diff.max_abs() / f.max_abs()
    return out


def _exact_small_roots(q):
    if len(q) == 2:
        return [-q[0] / q[1]]
    c0, c1, c2 = q
    s = gauss_sqrt(c1 * c1 - 4 * c2 * c0)
    if s is None:
        return None
    return [(-c1 + s) / (2 * c2), (-c1 - s) / (2 * c2)]


def _find_rational_root(q):
    """A root in Q(i): numeric candidates, verified exactly."""
    cands = np.roots([complex(x) for x in reversed(q)])
    for z in cands:
        for den in (1, 10, 100, 10**3, 10**4, 10**6):
            r = rationalize(complex(z), den, 1e-6)
            if r is not None and not _uni_eval(q, r):
                return r
    return None


# linear-form deflation for groups with more than two variables ----------------------

@dataclass
class LinearFormsResult:
    status: str  # PRODUCT_OF_LINEAR_FORMS | NOT | UNDECIDED
    forms: list = field(default_factory=list)  # [(LinearForm, multiplicity)]
    constant: object = None
    residual: float = 0.0
    exact: bool = False
    reason: str = ""


def _local_terms(f: MultiPoly, g: int):
    lo, hi = _single_group(f, g)
    E = np.array([e[lo:hi] for e in f.terms], dtype=int)
    C = np.array([complex(c) for c in f.terms.values()])
    return E, C


def _eval_local(E, C, Z):
    Z = np.atleast_2d(Z)
    return (np.prod(Z[:, None, :] ** E[None, :, :], axis=2) @ C)


def _restrict_local(f: MultiPoly, g: int) -> MultiPoly:
    lo, hi = _single_group(f, g)
    d = hi - lo
    return MultiPoly((d,), {e[lo:hi]: c for e, c in f.terms.items()}).to_float()


def _refine_form(h: MultiPoly, L: np.ndarray, rng, iters: int = 12) -> np.ndarray:
    """Gauss-Newton so that h vanishes on {L = 0} (L simple factor of h)."""
    d = len(L)
    j = int(np.argmax(np.abs(L)))
    L = L / L[j]
    E, C = _local_terms(h, 0)
    dj = h.derivative(j)
    Ej, Cj = _local_terms(dj, 0) if not dj.is_zero() else (None, None)
    if Ej is None:
        return L
    npts = 3 * d + 2 * max(h.total_degree(), 1)
    Y = rng.standard_normal((npts, d)) + 1j * rng.standard_normal((npts, d))
    others = [i for i in range(d) if i != j]
    for _ in range(iters):
        proj = Y - np.outer(Y @ L, np.eye(d)[j])
        r = _eval_local(E, C, proj)
        J = -Y[:, others] * _eval_local(Ej, Cj, proj)[:, None]
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        L[others] += step
        if np.linalg.norm(step) < 1e-15 * (1 + np.linalg.norm(L)):
            break
    return L


def linear_forms_test(
    f: MultiPoly, g: int, tol: float = DEFAULT_TOL, seed: int = 0, lines: int = 3
) -> LinearFormsResult:
    """Decide whether a form in one group is a product of linear forms.

    Numeric tangent-hyperplane deflation: intersect the hypersurface with a
    random line, take the gradient of a suitable derivative at a root as the
    candidate factor, refine, divide, repeat.
    """
    if f.is_zero():
        raise PolynomialError("cannot test the zero polynomial")
    local = _restrict_local(f, g)
    d = local.groups[0]
    md = local.multidegree()
    if md is None:
        raise PolynomialError("form is not homogeneous")
    rng = np.random.default_rng(seed)
    rem = local
    found: list[np.ndarray] = []
    best_fail = math.inf
    while rem.total_degree() > 0:
        if rem.total_degree() == 1:
            coeffs = np.zeros(d, dtype=complex)
            for e, c in rem.terms.items():
                coeffs[e.index(1)] = c
            found.append(coeffs)
            big = np.max(np.abs(coeffs))
            j = int(np.argmax(np.abs(coeffs) > 1e-12 * big))
            rem = MultiPoly.constant((d,), coeffs[j])
            break
        step_ok = False
        n = rem.total_degree()
        E, C = _local_terms(rem, 0)
        for _ in range(lines):
            P = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            Q = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            w = np.exp(2j * np.pi * np.arange(n + 1) / (n + 1))
            vals = _eval_local(E, C, P[None, :] + w[:, None] * Q[None, :])
            coeffs = np.fft.fft(vals) / (n + 1)  # c_j = (1/N) sum_k v_k w^{-jk}
            coeffs = coeffs[: n + 1]
            big = np.max(np.abs(coeffs))
            cs = coeffs.copy()
            while len(cs) > 1 and abs(cs[-1]) <= 1e-12 * big:
                cs = cs[:-1]
            roots = np.roots(cs[::-1]) if len(cs) > 1 else []
            clusters = sorted(_cluster(list(roots), 1e-4), key=lambda rc: rc[1])
            for s, m in clusters:
                z = P + s * Q
                h = rem
                for _k in range(m - 1):
                    h = h.directional_derivative(Q)
                grad = np.array(h.gradient_at(list(z)), dtype=complex)
                if np.linalg.norm(grad) <= 1e-300:
                    continue
                L = _refine_form(h, grad / np.max(np.abs(grad)), rng)
                form = LinearForm.make(0, list(L))
                quot, remainder = divide_by_linear(rem, form)
                res = remainder.max_abs() / max(rem.max_abs(), 1e-300)
                if res < tol:
                    found.append(np.array(form.coeffs, dtype=complex))
                    rem = quot.chop(1e-14)
                    step_ok = True
                    break
                best_fail = min(best_fail, res)
            if step_ok:
                break
        if not step_ok:
            status = "NOT" if best_fail > math.sqrt(tol) else "UNDECIDED"
            return LinearFormsResult(
                status,
                residual=best_fail,
                reason=f"no linear factor divides; best relative residual {best_fail:.3g}",
            )
    const = complex(next(iter(rem.terms.values()))) if rem.terms else 0j
    # merge, normalize, and optionally certify exactly
    forms: dict = {}
    for L in found:
        fm = LinearForm.make(g, list(L))
        match = next((k for k in forms if np.allclose(np.array(k.coeffs, dtype=complex), fm.coeffs, atol=1e-7)), None)
        if match is None:
            forms[fm] = 1
        else:
            forms[match] += 1
    groups = f.groups
    recon = MultiPoly.constant(groups, const)
    for fm, m in forms.items():
        recon = recon * fm.to_poly(groups).to_float() ** m
    residual = (recon - f.to_float()).max_abs() / f.max_abs()
    result = LinearFormsResult(
        "PRODUCT_OF_LINEAR_FORMS" if residual < math.sqrt(tol) else "UNDECIDED",
        sorted(forms.items(), key=lambda kv: kv[0].sort_key()),
        const,
        residual,
    )
    if result.status == "UNDECIDED":
        result.reason = f"reconstruction residual {residual:.3g}"
        return result
    if f.mode is Mode.EXACT:
        _certify_exact(f, result)
    return result


def _certify_exact(f: MultiPoly, result: LinearFormsResult):
    rem = f
    exact_forms = []
    for fm, m in result.forms:
        coeffs = [rationalize(complex(c), 10**6, 1e-9) for c in fm.coeffs]
        if any(c is None for c in coeffs):
            return
        ef = LinearForm.make(fm.group, coeffs)
        for _ in range(m):
            q, r = divide_by_linear(rem, ef)
            if not r.is_zero():
                return
            rem = q
        exact_forms.append((ef, m))
    if rem.total_degree() != 0:
        return
    result.forms = sorted(exact_forms, key=lambda kv: kv[0].sort_key())
    result.constant = next(iter(rem.terms.values()))
    result.exact = True
    result.residual = 0.0


# bilinear factors on CP^1 x CP^1 ------------------------------------------------------

@dataclass
class BilinearFactor:
    matrix: np.ndarray  # 2x2, row index = group-1 variable, column = group-2 variable
    multiplicity: int
    exact: bool

    @property
    def det(self):
        m = self.matrix
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]

    def to_poly(self, groups=(2, 2)) -> MultiPoly:
        t = {}
        for i in range(2):
            for j in range(2):
                e = [0, 0, 0, 0]
                e[i] = 1
                e[2 + j] = 1
                t[tuple(e)] = self.matrix[i, j]
        return MultiPoly(groups, t)


@dataclass
class BilinearFactorization:
    factors: list  # [BilinearFactor]
    quotient: MultiPoly | None
    residual: float

    @property
    def count(self) -> int:
        return sum(f.multiplicity for f in self.factors)


def _binary_roots_p1(coeffs: np.ndarray, tol: float = 1e-12):
    """Roots in CP^1 of sum_j c_j u^j v^(n-j); returns normalized 2-vectors."""
    n = len(coeffs) - 1
    big = np.max(np.abs(coeffs)) if len(coeffs) else 0.0
    cs = np.array(coeffs, dtype=complex)
    while len(cs) > 1 and abs(cs[-1]) <= tol * big:
        cs = cs[:-1]
    deg = len(cs) - 1
    pts = []
    for t in (np.roots(cs[::-1]) if deg > 0 else []):
        v = np.array([t, 1.0], dtype=complex)
        pts.append(v / np.linalg.norm(v))
    pts.extend([np.array([1.0, 0.0], dtype=complex)] * (n - deg))
    return pts


def _chordal(p, q) -> float:
    return float(np.sqrt(max(0.0, 1 - abs(np.vdot(p, q)) ** 2)))


def _cluster_p1(pts, radius=1e-4):
    clusters: list[list] = []
    for p in pts:
        for cl in clusters:
            if _chordal(cl[0], p) < radius:
                cl.append(p)
                break
        else:
            clusters.append([p])
    out = []
    for cl in clusters:
        ref = cl[0]
        # align phases before averaging
        acc = sum(p * (np.vdot(p, ref) / abs(np.vdot(p, ref))) for p in cl)
        out.append((acc / np.linalg.norm(acc), len(cl)))
    return out


def _normalize_matrix(C: np.ndarray) -> np.ndarray:
    flat = C.reshape(-1)
    k = next(i for i, c in enumerate(flat) if abs(c) > 1e-12 * np.max(np.abs(flat)))
    return C / flat[k]


def bilinear_factors(F: MultiPoly, tol: float = DEFAULT_TOL, seed: int = 0, samples: int = 7) -> BilinearFactorization:
    """Extract the nondegenerate (1,1)-form factors of a form on CP^1 x CP^1.

    Each factor ``r1^T C r2`` with det C != 0 makes the zero of F in the second
    factor a Moebius function of the first; candidates come from root
    triples at sample points, are validated at the remaining samples and
    confirmed by polynomial division (exact when F is exact and C is
    rational).
    """
    if F.groups != (2, 2):
        raise PolynomialError("bilinear factors need signature (2, 2)")
    md = F.multidegree()
    if md is None:
        raise PolynomialError("polynomial is not bihomogeneous")
    n1, n2 = md
    rng = np.random.default_rng(seed)
    Ff = F.to_float()
    R1 = [v / np.linalg.norm(v) for v in (rng.standard_normal((samples, 2)) + 1j * rng.standard_normal((samples, 2)))]
    root_sets = []
    for r1 in R1:
        coeffs = np.zeros(n2 + 1, dtype=complex)
        for e, c in Ff.terms.items():
            coeffs[e[2]] += c * r1[0] ** e[0] * r1[1] ** e[1]
        root_sets.append(_cluster_p1(_binary_roots_p1(coeffs)))
    cands: list[tuple[np.ndarray, int]] = []
    if n2 > 0 and all(root_sets[:3]):
        for (p0, m0), (p1, _), (p2, _) in itertools.product(*root_sets[:3]):
            A = np.array([np.kron(R1[k], p) for k, p in ((0, p0), (1, p1), (2, p2))])
            _, sv, vh = np.linalg.svd(A)
            C = vh[-1].conj().reshape(2, 2)
            if abs(np.linalg.det(C)) < 1e-6 * np.linalg.norm(C) ** 2:
                continue
            ok = True
            for r1, roots in zip(R1[3:], root_sets[3:]):
                w = C.T @ r1
                pred = np.array([-w[1], w[0]])
                pred = pred / np.linalg.norm(pred)
                if not any(_chordal(pred, p) < 1e-6 for p, _ in roots):
                    ok = False
                    break
            if not ok:
                continue
            C = _normalize_matrix(C)
            if any(np.allclose(C, D, atol=1e-7) for D, _ in cands):
                continue
            cands.append((C, m0))
    exact = F.mode is Mode.EXACT
    factors: list[BilinearFactor] = []
    rem = F if exact else Ff
    residual = 0.0
    for C, m in cands:
        ex_C = None
        if exact:
            ent = [rationalize(complex(c), 10**6, 1e-8) for c in C.reshape(-1)]
            if all(e is not None for e in ent):
                ex_C = np.array(ent, dtype=object).reshape(2, 2)
        if ex_C is not None:
            L = BilinearFactor(ex_C, 1, True).to_poly()
            mult = 0
            while True:
                q = divide_exact(rem, L)
                if q is None:
                    break
                rem, mult = q, mult + 1
            if mult:
                factors.append(BilinearFactor(ex_C, mult, True))
                continue
        # numeric factor
        if exact:
            rem = rem.to_float()
            exact = False
            for fct in factors:
                fct.exact = fct.exact  # already divided out exactly
        L = BilinearFactor(C, 1, False).to_poly()
        perm = _stable_perm(C)
        Lp = L.permute(perm)
        mult = 0
        for _ in range(m):
            q, res = divide_with_residual(rem.permute(perm), Lp, tol)
            if q is None or res >= tol:
                break
            rem = q.permute(_inverse(perm)).chop(1e-13)
            residual = max(residual, res)
            mult += 1
        if mult:
            factors.append(BilinearFactor(C, mult, False))
    factors.sort(key=lambda f: tuple(_sort_key(c) for c in f.matrix.reshape(-1)))
    return BilinearFactorization(factors, rem, residual)


def _stable_perm(C: np.ndarray) -> list[int]:
    i, j = np.unravel_index(int(np.argmax(np.abs(C))), C.shape)
    g1 = [0, 1] if i == 0 else [1, 0]
    g2 = [2, 3] if j == 0 else [3, 2]
    return g1 + g2


def _inverse(perm: Sequence[int]) -> list[int]:
    inv = [0] * len(perm)
    for i, p in enumerate(perm):
        inv[p] = i
    return inv


def bilinear_form_matrix(F: MultiPoly) -> np.ndarray:
    """Coefficient matrix of a (1,1)-form on CP^1 x CP^1."""
    if F.groups != (2, 2) or F.multidegree() != (1, 1):
        raise PolynomialError("not a (1,1)-form on CP^1 x CP^1")
    exact = F.mode is Mode.EXACT
    M = np.empty((2, 2), dtype=object if exact else complex)
    M.fill(ZERO if exact else 0)
    for e, c in F.terms.items():
        M[e.index(1), e[2:].index(1)] = c
    return M
