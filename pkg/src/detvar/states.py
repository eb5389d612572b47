"""Multipartite density matrices, ensembles and the named example states.

Basis states are ordered lexicographically as ``|i_1 i_2 ... i_k>`` with
party 1 (``A``) most significant. Parties are addressed either by 0-based
index or by letter (``"A"`` is party 0).

Matrices are NumPy arrays: ``dtype=object`` holding :class:`Gauss` entries in
EXACT mode, ``complex`` in FLOAT mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .scalars import (
    DEFAULT_TOL,
    ONE,
    ZERO,
    Gauss,
    Mode,
    ModeError,
    is_zero,
    mode_of,
    to_complex_array,
    to_exact_array,
)


class StateError(ValueError):
    """Invalid state data (dimensions, normalization, parameters)."""


class UnsupportedExactDecomposition(StateError):
    pass


def party_index(p, k: int) -> int:
    if isinstance(p, str):
        if len(p) != 1 or not p.isalpha():
            raise StateError(f"bad party label {p!r}")
        i = ord(p.upper()) - ord("A")
    else:
        i = int(p)
    if not 0 <= i < k:
        raise StateError(f"party {p!r} out of range for {k} parties")
    return i


def party_letter(i: int) -> str:
    return chr(ord("A") + i)


def _as_array(x, mode: Mode | None = None) -> np.ndarray:
    a = np.asarray(x)
    if mode is None:
        mode = mode_of(a) if a.dtype != object else Mode.EXACT
        if a.dtype.kind in "iu":
            mode = Mode.EXACT
    if mode is Mode.EXACT:
        return to_exact_array(a)
    if a.dtype == object:
        for v in a.flat:
            if isinstance(v, Gauss):
                raise ModeError("exact entries in a FLOAT array")
    return to_complex_array(a)


def _dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def _zeros(shape, mode: Mode) -> np.ndarray:
    if mode is Mode.EXACT:
        out = np.empty(shape, dtype=object)
        out.fill(ZERO)
        return out
    return np.zeros(shape, dtype=complex)


def _close(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    if a.dtype == object and b.dtype == object:
        return bool(np.all(a == b))
    return bool(np.allclose(to_complex_array(a), to_complex_array(b), atol=tol, rtol=0))


def _check_dims(dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 2 for d in dims):
        raise StateError(f"local dimensions must all be >= 2, got {dims}")
    return dims


@dataclass(frozen=True)
class DensityMatrix:
    dims: tuple[int, ...]
    matrix: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        dims = _check_dims(self.dims)
        object.__setattr__(self, "dims", dims)
        m = _as_array(self.matrix)
        D = int(np.prod(dims))
        if m.shape != (D, D):
            raise StateError(f"density matrix must be {D}x{D} for dims {dims}, got {m.shape}")
        object.__setattr__(self, "matrix", m)
        if not _close(m, _dagger(m), self.tol):
            raise StateError("density matrix is not Hermitian")
        tr = sum(m[i, i] for i in range(D))
        if not is_zero(tr - 1, self.tol * D):
            raise StateError(f"trace is {tr}, expected 1")

    @property
    def mode(self) -> Mode:
        return mode_of(self.matrix)

    @property
    def D(self) -> int:
        return self.matrix.shape[0]

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return self.dims == other.dims and self.matrix.shape == other.matrix.shape and _close(
            self.matrix, other.matrix, max(self.tol, other.tol)
        )

    __hash__ = None

    def to_float(self) -> "DensityMatrix":
        return DensityMatrix(self.dims, to_complex_array(self.matrix), self.tol)


@dataclass(frozen=True)
class Ensemble:
    """Weighted pure states ``rho = sum_f probs[f] * P(vectors[f])``.

    In EXACT mode vectors may be unnormalized; their squared norms are folded
    into :attr:`weights` so that ``rho = sum_f weights[f] v_f v_f^dagger``.
    FLOAT vectors are normalized on construction.
    """

    dims: tuple[int, ...]
    probs: tuple
    vectors: np.ndarray  # g x D
    tol: float = DEFAULT_TOL
    weights: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        dims = _check_dims(self.dims)
        object.__setattr__(self, "dims", dims)
        D = int(np.prod(dims))
        vecs = _as_array(self.vectors)
        if vecs.ndim == 1:
            vecs = vecs.reshape(1, -1)
        if vecs.ndim != 2 or vecs.shape[1] != D:
            raise StateError(f"vectors must have length {D} for dims {dims}, got shape {vecs.shape}")
        if len(self.probs) != vecs.shape[0]:
            raise StateError("number of weights does not match number of vectors")
        mode = mode_of(vecs)
        if mode is Mode.EXACT:
            probs = tuple(Fraction(p) if not isinstance(p, Gauss) else _real_part(p) for p in self.probs)
            if any(p <= 0 for p in probs):
                raise StateError("weights must be positive")
            if sum(probs) != 1:
                raise StateError(f"weights sum to {sum(probs)}, expected 1")
            weights = []
            for p, v in zip(probs, vecs):
                n2 = sum((x * x.conjugate()).real for x in v)
                if not n2:
                    raise StateError("zero vector in ensemble")
                weights.append(p / n2)
        else:
            probs = tuple(float(p) for p in self.probs)
            if any(p <= 0 for p in probs):
                raise StateError("weights must be positive")
            if abs(sum(probs) - 1) > self.tol * max(D, len(probs)):
                raise StateError(f"weights sum to {sum(probs)}, expected 1")
            norms = np.linalg.norm(vecs, axis=1)
            if np.any(norms <= self.tol):
                raise StateError("zero vector in ensemble")
            vecs = vecs / norms[:, None]
            weights = list(probs)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "weights", tuple(weights))

    @property
    def mode(self) -> Mode:
        return mode_of(self.vectors)

    @property
    def g(self) -> int:
        return self.vectors.shape[0]

    def to_float(self) -> "Ensemble":
        if self.mode is Mode.FLOAT:
            return self
        return Ensemble(self.dims, tuple(float(p) for p in self.probs), to_complex_array(self.vectors), self.tol)


def _real_part(z: Gauss) -> Fraction:
    if z.imag:
        raise StateError("ensemble weights must be real")
    return z.real


# ---------------------------------------------------------------------------

def density_from_ensemble(e: Ensemble) -> DensityMatrix:
    D = e.vectors.shape[1]
    rho = _zeros((D, D), e.mode)
    for w, v in zip(e.weights, e.vectors):
        if e.mode is Mode.EXACT:
            w = Gauss(w)
        rho = rho + w * np.outer(v, np.conj(v))
    return DensityMatrix(e.dims, rho, e.tol)


def numerical_rank_cutoff(rho: DensityMatrix) -> float:
    m = to_complex_array(rho.matrix)
    return rho.tol * rho.D * float(np.max(np.abs(m)))


def ensemble_from_density(rho: DensityMatrix) -> Ensemble:
    """Eigen-ensemble of ``rho`` (EXACT mode: diagonal matrices only)."""
    m = rho.matrix
    if rho.mode is Mode.EXACT:
        D = rho.D
        if any(m[i, j] for i in range(D) for j in range(D) if i != j):
            raise UnsupportedExactDecomposition(
                "exact decomposition needs a diagonal density matrix; use FLOAT mode"
            )
        probs, vecs = [], []
        for i in range(D):
            if m[i, i]:
                probs.append(_real_part(m[i, i]))
                v = _zeros(D, Mode.EXACT)
                v[i] = ONE
                vecs.append(v)
        return Ensemble(rho.dims, tuple(probs), np.array(vecs, dtype=object), rho.tol)
    vals, vecs = np.linalg.eigh(m)
    keep = vals > numerical_rank_cutoff(rho)
    vals, vecs = vals[keep][::-1], vecs[:, keep][:, ::-1].T
    for k, v in enumerate(vecs):
        j = int(np.argmax(np.abs(v)))
        vecs[k] = v * (abs(v[j]) / v[j])
    return Ensemble(rho.dims, tuple(vals.tolist()), vecs, rho.tol * rho.D)


def partial_transpose(rho: DensityMatrix | np.ndarray, parties: Iterable, dims: Sequence[int] | None = None):
    """Transpose the tensor indices of ``parties``.

    Accepts a :class:`DensityMatrix` (returns one) or a raw square array with
    explicit ``dims`` (returns an array).
    """
    if isinstance(rho, DensityMatrix):
        m, dims = rho.matrix, rho.dims
    else:
        m = np.asarray(rho)
        if dims is None:
            raise StateError("dims required for a raw matrix")
    k = len(dims)
    idx = sorted({party_index(p, k) for p in parties})
    t = m.reshape(tuple(dims) + tuple(dims))
    axes = list(range(2 * k))
    for i in idx:
        axes[i], axes[i + k] = axes[i + k], axes[i]
    out = t.transpose(axes).reshape(m.shape)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(rho.dims, out, rho.tol)
    return out


# positive semidefiniteness ------------------------------------------------

@dataclass
class PSDCertificate:
    psd: bool
    pivots: list  # (index, pivot value) in elimination order
    witness: np.ndarray | None = None  # x with x^dagger M x < 0 when not PSD
    value: object = None  # x^dagger M x for the witness


def _exact_psd(m: np.ndarray) -> PSDCertificate:
    n = m.shape[0]
    S = m.copy()
    active = list(range(n))
    steps = []  # (pivot index, pivot value, row of S restricted to later actives)
    pivots = []

    def lift(y: dict) -> np.ndarray:
        x = dict(y)
        for p, piv, row in reversed(steps):
            acc = ZERO
            for j, sj in row.items():
                if j in x:
                    acc = acc + sj * x[j]
            x[p] = -acc / piv
        out = _zeros(n, Mode.EXACT)
        for j, v in x.items():
            out[j] = v
        return out

    while active:
        pos = [i for i in active if S[i, i].real > 0]
        if not pos:
            neg = [i for i in active if S[i, i].real < 0]
            if neg:
                x = lift({neg[0]: ONE})
                return PSDCertificate(False, pivots, x, _quad(m, x))
            for a in active:
                for b in active:
                    if a != b and S[a, b]:
                        y = {a: ONE, b: -S[a, b].conjugate()}
                        x = lift(y)
                        return PSDCertificate(False, pivots, x, _quad(m, x))
            return PSDCertificate(True, pivots)
        p = pos[0]
        piv = S[p, p]
        pivots.append((p, piv.real))
        active.remove(p)
        row = {j: S[p, j] for j in active if S[p, j]}
        steps.append((p, piv, row))
        for a in active:
            if not S[a, p]:
                continue
            f = S[a, p] / piv
            for b, s_pb in row.items():
                S[a, b] = S[a, b] - f * s_pb
    return PSDCertificate(True, pivots)


def _quad(m, x):
    return (np.conj(x) @ m @ x)


def _is_hermitian(m: np.ndarray, tol: float) -> bool:
    return _close(m, _dagger(m), tol)


def psd_certificate(M, tol: float = DEFAULT_TOL) -> PSDCertificate:
    m = M.matrix if isinstance(M, DensityMatrix) else np.asarray(M)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StateError("PSD test needs a square matrix")
    if not _is_hermitian(m, tol):
        raise StateError("PSD test needs a Hermitian matrix")
    if m.dtype == object:
        return _exact_psd(to_exact_array(m))
    vals, vecs = np.linalg.eigh(m)
    ok = bool(vals[0] >= -tol)
    return PSDCertificate(ok, [], None if ok else vecs[:, 0], float(vals[0]))


def is_positive_semidefinite(M, tol: float = DEFAULT_TOL) -> bool:
    """EXACT: pivoted symmetric elimination over Q(i). FLOAT: min eigenvalue >= -tol."""
    return psd_certificate(M, tol).psd


@dataclass
class PPTResult:
    ppt: bool
    transposed: tuple[int, ...]
    min_eigenvalue: float
    certificate: PSDCertificate
    equals_rho: bool

    @property
    def label(self) -> str:
        return "PPT" if self.ppt else "NPT"


def ppt_check(rho: DensityMatrix, bipartition) -> PPTResult:
    """Peres test for a bipartition ``(side1, side2)``; side1 is transposed."""
    k = len(rho.dims)
    try:
        s1, s2 = bipartition
    except (TypeError, ValueError):
        raise StateError("bipartition must be a pair of party sets") from None
    s1 = {party_index(p, k) for p in s1}
    s2 = {party_index(p, k) for p in s2}
    if not s1 or not s2 or s1 & s2 or (s1 | s2) != set(range(k)):
        raise StateError("bipartition sides must be nonempty, disjoint and cover all parties")
    pt = partial_transpose(rho, s1)
    cert = psd_certificate(pt.matrix, rho.tol)
    min_eig = float(np.linalg.eigvalsh(to_complex_array(pt.matrix))[0])
    return PPTResult(cert.psd, tuple(sorted(s1)), min_eig, cert, pt == rho)


# named states ---------------------------------------------------------------

def _bell_vectors():
    """Unnormalized Bell vectors phi+, phi-, psi+, psi- on two qubits."""
    return [
        np.array([1, 0, 0, 1]),
        np.array([1, 0, 0, -1]),
        np.array([0, 1, 1, 0]),
        np.array([0, 1, -1, 0]),
    ]


def smolin_state(mode: Mode = Mode.EXACT) -> Ensemble:
    """Four-qubit Smolin state: uniform mixture of |B>_AB |B>_CD over Bell states."""
    half = Fraction(1, 2)
    vecs = [np.kron(b, b) for b in _bell_vectors()]
    if mode is Mode.EXACT:
        arr = np.array([[Gauss(half * int(x)) for x in v] for v in vecs], dtype=object)
        return Ensemble((2, 2, 2, 2), (Fraction(1, 4),) * 4, arr)
    arr = np.array(vecs, dtype=complex) / 2
    return Ensemble((2, 2, 2, 2), (0.25,) * 4, arr)


# rows of T holding a_k * h_j: basis index -> (a index, h index), 0-based
FAMILY_LAYOUT = {
    0b0000: (0, 0),
    0b0011: (1, 1),
    0b0101: (2, 2),
    0b0110: (3, 3),
    0b1001: (4, 2),
    0b1010: (5, 3),
    0b1100: (6, 0),
    0b1111: (7, 1),
}


@dataclass(frozen=True)
class FamilyParams:
    """Four orthogonal vectors ``h`` (rows, equal norms) and eight amplitudes ``a``."""

    h: np.ndarray
    a: tuple
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        h = _as_array(self.h)
        if h.shape != (4, 4):
            raise StateError(f"h must be 4x4 (four row vectors), got {h.shape}")
        mode = mode_of(h)
        a = _as_array(list(self.a), mode)
        if a.shape != (8,):
            raise StateError("a must have 8 entries")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "a", tuple(a.tolist()))
        for k, ak in enumerate(self.a):
            if is_zero(ak, self.tol):
                raise StateError(f"a_{k + 1} must be nonzero")
        gram = h @ _dagger(h)
        n0 = gram[0, 0]
        if is_zero(n0, self.tol):
            raise StateError("h vectors must be nonzero")
        for i in range(4):
            for j in range(4):
                target = n0 if i == j else 0
                if not is_zero(gram[i, j] - target, self.tol * max(1.0, abs(complex(n0)))):
                    raise StateError("h vectors must be mutually orthogonal with equal norms")

    @property
    def mode(self) -> Mode:
        return mode_of(self.h)

    def representation(self) -> np.ndarray:
        """The 16x4 matrix T, rows indexed by |abcd>."""
        T = _zeros((16, 4), self.mode)
        for row, (ai, hi) in FAMILY_LAYOUT.items():
            T[row] = self.a[ai] * self.h[hi]
        return T


def family_state(p: FamilyParams) -> Ensemble:
    """Uniform mixture of the normalized columns of the family matrix T."""
    T = p.representation()
    if p.mode is Mode.EXACT:
        return Ensemble((2, 2, 2, 2), (Fraction(1, 4),) * 4, T.T.copy(), p.tol)
    return Ensemble((2, 2, 2, 2), (0.25,) * 4, T.T.copy(), p.tol)


def bell_family_params(mode: Mode = Mode.EXACT) -> FamilyParams:
    """The Bell-type preset h = (1,1,0,0), (1,-1,0,0), (0,0,1,1), (0,0,1,-1), all a = 1."""
    h = np.array([[1, 1, 0, 0], [1, -1, 0, 0], [0, 0, 1, 1], [0, 0, 1, -1]])
    if mode is Mode.EXACT:
        return FamilyParams(to_exact_array(h), (1,) * 8)
    return FamilyParams(h.astype(complex) / np.sqrt(2), (1.0,) * 8)


def identity_family_params(a: Sequence, mode: Mode = Mode.EXACT) -> FamilyParams:
    h = np.eye(4, dtype=int)
    if mode is Mode.EXACT:
        return FamilyParams(to_exact_array(h), tuple(a))
    return FamilyParams(h.astype(complex), tuple(complex(x) for x in a))


def product_vector(*factors) -> np.ndarray:
    out = np.asarray(factors[0])
    for f in factors[1:]:
        out = np.kron(out, np.asarray(f))
    return out
