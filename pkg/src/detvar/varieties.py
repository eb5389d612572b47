"""Linear pencils of a state under a cut and their determinantal loci.

A cut ``A:B|CD`` splits the parties into ordered row groups (one projective
factor each) and a column side. Blocking the representation matrix T along
the row-side basis gives blocks ``B_I`` (D_Q x g) and the pencil
``S(r) = sum_I r_I B_I`` with ``r_I`` the product of one coordinate per group.
Since ``S(r) S(r)^dagger`` equals the conjugated block sum of rho, the rank
drop locus of S is the invariant variety; its defining polynomials are the
minors of S.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .polynomials import MultiPoly, poly_minors
from .scalars import (
    DEFAULT_TOL,
    ONE,
    ZERO,
    Gauss,
    Mode,
    mode_of,
    split_sqrt,
    to_complex_array,
    to_exact_array,
)
from .states import (
    DensityMatrix,
    Ensemble,
    StateError,
    density_from_ensemble,
    party_index,
    party_letter,
)

WHOLE_SPACE = "WHOLE_SPACE"


class CutError(ValueError):
    pass


@dataclass(frozen=True)
class CutSpec:
    """Ordered row groups (party index tuples) and the column-side parties."""

    dims: tuple[int, ...]
    row_groups: tuple[tuple[int, ...], ...]
    col_parties: tuple[int, ...]

    def __post_init__(self):
        k = len(self.dims)
        seen = [p for grp in self.row_groups for p in grp] + list(self.col_parties)
        if not self.row_groups or any(not grp for grp in self.row_groups):
            raise CutError("row side must contain at least one nonempty group")
        if not self.col_parties:
            raise CutError("column side must be nonempty")
        if sorted(seen) != list(range(k)):
            raise CutError(f"cut must partition the {k} parties exactly once")

    @property
    def group_dims(self) -> tuple[int, ...]:
        return tuple(int(np.prod([self.dims[p] for p in grp])) for grp in self.row_groups)

    @property
    def D_P(self) -> int:
        return int(np.prod(self.group_dims))

    @property
    def D_Q(self) -> int:
        return int(np.prod([self.dims[p] for p in self.col_parties]))

    @property
    def text(self) -> str:
        rows = ":".join("".join(party_letter(p) for p in grp) for grp in self.row_groups)
        return rows + "|" + "".join(party_letter(p) for p in self.col_parties)

    def __str__(self):
        return self.text

    def _radix(self, digits, parties) -> int:
        n = 0
        for p in parties:
            n = n * self.dims[p] + digits[p]
        return n

    def split_index(self, n: int) -> tuple[tuple[int, ...], int]:
        """Basis index -> (per-group row indices I, column index q)."""
        digits = []
        for d in reversed(self.dims):
            digits.append(n % d)
            n //= d
        digits = digits[::-1]
        I = tuple(self._radix(digits, grp) for grp in self.row_groups)
        return I, self._radix(digits, self.col_parties)

    def index_map(self) -> list[tuple[tuple[int, ...], int]]:
        return [self.split_index(n) for n in range(int(np.prod(self.dims)))]


_CUT_RE = re.compile(r"^[A-Za-z]+(:[A-Za-z]+)*(\|[A-Za-z]+)?$")


def parse_cut(text: str, dims: Sequence[int]) -> CutSpec:
    """Parse ``GROUP(:GROUP)*[|COLS]``; a missing column side is the complement."""
    dims = tuple(int(d) for d in dims)
    text = text.replace(" ", "")
    if not _CUT_RE.match(text):
        raise CutError(f"malformed cut {text!r}; expected e.g. 'A:B|CD'")
    rows_txt, _, cols_txt = text.partition("|")
    k = len(dims)
    try:
        groups = tuple(tuple(party_index(c, k) for c in grp) for grp in rows_txt.split(":"))
        if cols_txt:
            cols = tuple(party_index(c, k) for c in cols_txt)
        else:
            used = {p for grp in groups for p in grp}
            cols = tuple(p for p in range(k) if p not in used)
    except StateError as exc:
        raise CutError(str(exc)) from exc
    flat = [p for grp in groups for p in grp] + list(cols)
    if len(set(flat)) != len(flat):
        raise CutError(f"party repeated in cut {text!r}")
    return CutSpec(dims, groups, cols)


# representation matrix and pencil -------------------------------------------------

@dataclass(frozen=True)
class RepresentationMatrix:
    """Columns of T are the ensemble vectors.

    FLOAT: columns carry sqrt(weight) so that T T^dagger = rho. EXACT: columns
    are the stored rational vectors and ``col_weights`` hold the weights, so
    that T diag(w) T^dagger = rho.
    """

    entries: np.ndarray
    col_weights: tuple | None

    @property
    def mode(self) -> Mode:
        return mode_of(self.entries)

    def scaled_float(self) -> np.ndarray:
        T = to_complex_array(self.entries)
        if self.col_weights is None:
            return T
        return T * np.sqrt(np.array([float(w) for w in self.col_weights]))[None, :]


def representation_matrix(e: Ensemble) -> RepresentationMatrix:
    if e.mode is Mode.EXACT:
        return RepresentationMatrix(e.vectors.T.copy(), tuple(e.weights))
    return RepresentationMatrix(e.vectors.T * np.sqrt(np.array(e.weights))[None, :], None)


@dataclass(frozen=True)
class LinearPencil:
    cut: CutSpec
    blocks: dict  # I -> D_Q x g array
    col_weights: tuple | None
    g: int

    @property
    def mode(self) -> Mode:
        return mode_of(next(iter(self.blocks.values())))

    @property
    def groups(self) -> tuple[int, ...]:
        return self.cut.group_dims

    @property
    def D_Q(self) -> int:
        return self.cut.D_Q

    @property
    def D_P(self) -> int:
        return self.cut.D_P

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.D_P, self.D_Q, self.g)

    def monomial(self, I) -> tuple[int, ...]:
        e = [0] * sum(self.groups)
        off = 0
        for gi, d in zip(I, self.groups):
            e[off + gi] = 1
            off += d
        return tuple(e)

    def poly_matrix(self) -> list[list[MultiPoly]]:
        """S(r) as a D_Q x g matrix of multilinear forms."""
        terms = [[{} for _ in range(self.g)] for _ in range(self.D_Q)]
        for I, B in self.blocks.items():
            mono = self.monomial(I)
            for q in range(self.D_Q):
                for f in range(self.g):
                    if B[q, f] != 0:
                        terms[q][f][mono] = B[q, f]
        return [[MultiPoly(self.groups, t) for t in row] for row in terms]

    def stacked(self) -> np.ndarray:
        """Blocks stacked in lexicographic I order (a row permutation of T)."""
        return np.vstack([self.blocks[I] for I in sorted(self.blocks)])


def build_pencil(e: Ensemble, cut: CutSpec) -> LinearPencil:
    if tuple(e.dims) != tuple(cut.dims):
        raise CutError(f"ensemble dims {e.dims} do not match cut dims {cut.dims}")
    rep = representation_matrix(e)
    T = rep.entries
    g = T.shape[1]
    exact = rep.mode is Mode.EXACT
    blocks = {}
    for I in itertools.product(*(range(d) for d in cut.group_dims)):
        B = np.empty((cut.D_Q, g), dtype=object if exact else complex)
        B.fill(ZERO if exact else 0)
        blocks[I] = B
    for n, (I, q) in enumerate(cut.index_map()):
        blocks[I][q, :] = T[n, :]
    return LinearPencil(cut, blocks, rep.col_weights, g)


# minors ---------------------------------------------------------------------------

@dataclass
class Minor:
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    poly: MultiPoly
    radicand: int = 1  # the true minor is poly * sqrt(radicand)

    def render(self) -> str:
        body = self.poly.render()
        return body if self.radicand == 1 else f"sqrt({self.radicand}) * ({body})"


@dataclass
class VarietyPolynomials:
    t: int | None
    flag: str | None
    minors: list = field(default_factory=list)
    groups: tuple = ()

    def polys(self) -> list[MultiPoly]:
        return [m.poly for m in self.minors]

    def nonzero(self) -> list[Minor]:
        return [m for m in self.minors if not m.poly.is_zero()]


def variety_polynomials(p: LinearPencil, rank_threshold: int | None = None, tol: float = DEFAULT_TOL) -> VarietyPolynomials:
    """All t x t minors of S(r).

    Without a threshold, t = D_Q (the square-determinant reading); when the
    ensemble has fewer than D_Q vectors that determinant vanishes identically
    and the result carries the WHOLE_SPACE flag with no minors. An explicit
    threshold t <= min(D_Q, g) gives the rank < t locus.
    """
    D_Q, g = p.D_Q, p.g
    if rank_threshold is None:
        if g < D_Q:
            return VarietyPolynomials(None, WHOLE_SPACE, [], p.groups)
        t = D_Q
    else:
        t = int(rank_threshold)
        if not 1 <= t <= min(D_Q, g):
            raise ValueError(f"rank threshold {t} out of range 1..{min(D_Q, g)}")
    M = p.poly_matrix()
    out = []
    exact = p.mode is Mode.EXACT
    for rows, cols, poly in poly_minors(M, t):
        if exact:
            w = Fraction(1)
            for f in cols:
                w *= p.col_weights[f]
            c, k = split_sqrt(w)
            out.append(Minor(rows, cols, poly.scale(Gauss(c)), k))
        else:
            out.append(Minor(rows, cols, poly.chop(tol)))
    return VarietyPolynomials(t, None, out, p.groups)


# evaluation -----------------------------------------------------------------------

def _flat_point(point, groups):
    if len(point) != len(groups):
        raise ValueError(f"point needs {len(groups)} group vectors")
    out = []
    for vec, d in zip(point, groups):
        vec = list(vec)
        if len(vec) != d:
            raise ValueError(f"group vector must have {d} entries")
        if all((not x) if isinstance(x, Gauss) else abs(complex(x)) == 0 for x in vec):
            raise ValueError("group vector is zero (not a projective point)")
        out.append(vec)
    return out


def exact_rank(M: np.ndarray) -> int:
    A = [[Gauss.coerce(x) for x in row] for row in M]
    rank, nr = 0, len(A)
    nc = len(A[0]) if nr else 0
    for c in range(nc):
        piv = next((r for r in range(rank, nr) if A[r][c]), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        for r in range(rank + 1, nr):
            if A[r][c]:
                f = A[r][c] / A[rank][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[rank])]
        rank += 1
    return rank


def numeric_rank(M: np.ndarray, tol: float = DEFAULT_TOL) -> int:
    M = to_complex_array(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def evaluate_pencil(p: LinearPencil, point, tol: float = DEFAULT_TOL):
    """S at a grouped point; returns ``(matrix, rank)``.

    EXACT pencils evaluated at exact points give the unweighted matrix and an
    exact rank; otherwise the weighted float matrix and a numerical rank.
    """
    vecs = _flat_point(point, p.groups)
    exact = p.mode is Mode.EXACT and all(isinstance(x, (Gauss, int, Fraction)) for v in vecs for x in v)
    if exact:
        vecs = [[Gauss.coerce(x) for x in v] for v in vecs]
        S = np.empty((p.D_Q, p.g), dtype=object)
        S.fill(ZERO)
        for I, B in p.blocks.items():
            rI = ONE
            for gi, v in zip(I, vecs):
                rI = rI * v[gi]
            if rI:
                S = S + rI * B
        return S, exact_rank(S)
    vecs = [np.array([complex(x) for x in v]) for v in vecs]
    S = np.zeros((p.D_Q, p.g), dtype=complex)
    for I, B in p.blocks.items():
        rI = np.prod([v[gi] for gi, v in zip(I, vecs)])
        S += rI * to_complex_array(B)
    if p.col_weights is not None:
        S = S * np.sqrt(np.array([float(w) for w in p.col_weights]))[None, :]
    return S, numeric_rank(S, tol)


def conjugated_block_sum(rho: DensityMatrix, cut: CutSpec, point) -> np.ndarray:
    """M(r) = sum_{I,I'} r_I conj(r_I') rho_{(I,.),(I',.)} as a D_Q x D_Q matrix."""
    vecs = [np.array([complex(x) for x in v]) for v in _flat_point(point, cut.group_dims)]
    R = to_complex_array(rho.matrix)
    idx = cut.index_map()
    coef = np.array([np.prod([v[gi] for gi, v in zip(I, vecs)]) for I, _ in idx])
    qs = np.array([q for _, q in idx])
    M = np.zeros((cut.D_Q, cut.D_Q), dtype=complex)
    W = coef[:, None] * np.conj(coef)[None, :] * R
    np.add.at(M, (qs[:, None], qs[None, :]), W)
    return M


def gram_identity_residual(e: Ensemble, cut: CutSpec, point) -> float:
    """max |S S^dagger - M(r)| at one point."""
    p = build_pencil(e, cut)
    S, _ = evaluate_pencil(p, [[complex(x) for x in v] for v in point])
    M = conjugated_block_sum(density_from_ensemble(e), cut, point)
    return float(np.max(np.abs(S @ S.conj().T - M)))


def random_point(groups, rng) -> list[np.ndarray]:
    return [rng.standard_normal(d) + 1j * rng.standard_normal(d) for d in groups]


# local transforms -----------------------------------------------------------------

def _check_mats(mats, dims, mode):
    if len(mats) != len(dims):
        raise ValueError(f"need {len(dims)} local matrices, got {len(mats)}")
    out = []
    for U, d in zip(mats, dims):
        U = to_exact_array(U) if mode is Mode.EXACT else to_complex_array(U)
        if U.shape != (d, d):
            raise ValueError(f"local matrix must be {d}x{d}, got {U.shape}")
        singular = exact_rank(U) < d if mode is Mode.EXACT else numeric_rank(U, 1e-12) < d
        if singular:
            raise ValueError("local matrix is singular")
        out.append(U)
    return out


def _kron_all(mats):
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def apply_local_transform(e: Ensemble, mats: Sequence) -> Ensemble:
    """Map every vector through U_1 (x) ... (x) U_k, keeping weights.

    Weights are kept on the vectors as given, so T' = (x)U T. For non-unitary
    matrices the trace changes; the result is the normalized state, i.e. T'
    is rescaled by a global constant (irrelevant for varieties).
    """
    mats = _check_mats(mats, e.dims, e.mode)
    U = _kron_all(mats)
    V = (U @ e.vectors.T).T
    if e.mode is Mode.EXACT:
        norms = [sum((x * x.conjugate()).real for x in v) for v in V]
        raw = [w * n for w, n in zip(e.weights, norms)]
        Z = sum(raw)
        return Ensemble(e.dims, tuple(x / Z for x in raw), V, e.tol)
    norms = np.linalg.norm(V, axis=1) ** 2
    raw = np.array(e.weights) * norms
    return Ensemble(e.dims, tuple((raw / raw.sum()).tolist()), V, e.tol)


def group_matrices(cut: CutSpec, mats: Sequence) -> tuple[list[np.ndarray], np.ndarray]:
    """Per-row-group Kronecker products and the column-side product."""
    U_groups = [_kron_all([mats[p] for p in grp]) for grp in cut.row_groups]
    return U_groups, _kron_all([mats[p] for p in cut.col_parties])


@dataclass
class TransformationCheck:
    passed: bool
    constant: complex | None
    drift: float
    trials: int
    rank_mismatches: int = 0


def verify_transformation_law(
    e: Ensemble,
    cut: CutSpec,
    mats: Sequence,
    trials: int = 100,
    seed: int = 0,
    tol: float = 1e-8,
) -> TransformationCheck:
    """Check S_{Te}(r) = c U_Q S_e(U^tau r) at seeded random points.

    Square pencils: the ratio det S_{Te}(r) / det S_e(r'') must be one
    constant across trials (relative drift < tol). Otherwise ranks must agree.
    """
    mats_c = [to_complex_array(m) for m in mats]
    Te = apply_local_transform(e, mats)
    p0, p1 = build_pencil(e, cut), build_pencil(Te, cut)
    U_groups, _ = group_matrices(cut, mats_c)
    rng = np.random.default_rng(seed)
    square = p0.D_Q == p0.g
    ratios, mismatches = [], 0
    for _ in range(trials):
        r = random_point(cut.group_dims, rng)
        r2 = [U.T @ v for U, v in zip(U_groups, r)]
        S1, k1 = evaluate_pencil(p1, r)
        S0, k0 = evaluate_pencil(p0, r2)
        if square:
            d0 = np.linalg.det(S0)
            if abs(d0) == 0:
                mismatches += 1
                continue
            ratios.append(np.linalg.det(S1) / d0)
        elif k0 != k1:
            mismatches += 1
    if square:
        if not ratios:
            return TransformationCheck(False, None, math.inf, trials, mismatches)
        c = ratios[0]
        drift = max(abs(x - c) for x in ratios) / abs(c)
        return TransformationCheck(drift < tol and not mismatches, complex(c), float(drift), trials, mismatches)
    return TransformationCheck(mismatches == 0, None, 0.0, trials, mismatches)


def substituted_polynomial(poly: MultiPoly, cut: CutSpec, mats: Sequence) -> MultiPoly:
    """poly(U^tau r) for the per-group products of ``mats``."""
    conv = to_exact_array if poly.mode is Mode.EXACT else to_complex_array
    U_groups, _ = group_matrices(cut, [conv(m) for m in mats])
    return poly.substitute([U.T for U in U_groups])
