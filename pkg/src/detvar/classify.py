"""Verdicts from variety polynomials.

A separable state has a variety that is a finite union of products of
linear subspaces. For a hypersurface this means the defining polynomial is
a product of linear forms, each living in a single group. Failing that is a
certificate of entanglement at the cut. Also here: detection of the
two-row Segre locus, and invariants of the four-curve family of states on
CP^1 x CP^1 together with the equivalence search between two members.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .polynomials import (
    BilinearFactor,
    LinearForm,
    MultiPoly,
    bilinear_factors,
    binary_linear_factors,
    group_separable_factor,
    linear_forms_test,
)
from .scalars import DEFAULT_TOL, ONE, ZERO, Gauss, Mode, gauss_sqrt, to_complex_array, to_exact_array
from .states import Ensemble, FamilyParams, StateError
from .varieties import (
    WHOLE_SPACE,
    CutSpec,
    LinearPencil,
    VarietyPolynomials,
    build_pencil,
    exact_rank,
    numeric_rank,
    variety_polynomials,
)

LINEAR = "LINEAR"
NONLINEAR = "NONLINEAR"
DEGENERATE = "DEGENERATE"
UNDECIDED = "UNDECIDED"

ENTANGLED_AT_CUT = "ENTANGLED_AT_CUT"
CONSISTENT_WITH_SEPARABLE = "CONSISTENT_WITH_SEPARABLE"

EQUIVALENT = "EQUIVALENT"
INEQUIVALENT = "INEQUIVALENT"
UNKNOWN = "UNKNOWN"


@dataclass
class SegreResult:
    found: bool
    dims: tuple[int, int] | None = None
    supports: tuple = ()
    spans: tuple = ()
    common_span: int = 0
    reason: str = ""
    linear: bool = False  # disjoint supports with common span <= 1: union of linear subspaces

    @property
    def label(self) -> str:
        return f"SEGRE({self.dims[0]},{self.dims[1]})" if self.found else "NO_STRUCTURE"


@dataclass
class LinearityVerdict:
    kind: str
    factors: list = field(default_factory=list)  # per group: [(LinearForm, multiplicity)]
    constant: object = None
    certificate: dict | None = None
    reason: str = ""
    bilinear: list = field(default_factory=list)  # [BilinearFactor]
    segre: SegreResult | None = None
    numeric: bool = False


def _proportional(p: MultiPoly, q: MultiPoly, tol: float) -> bool:
    a, b = p.normalized(), q.normalized()
    if p.mode is Mode.EXACT and q.mode is Mode.EXACT:
        return a == b
    return a.to_float().allclose(b.to_float(), tol)


def _empty_by_monomials(polys: Sequence[MultiPoly]) -> bool:
    """True when pure powers of single variables kill every point of some group."""
    killed = set()
    for p in polys:
        if len(p.terms) == 1:
            used = p.variables_used()
            if len(used) == 1:
                killed |= used
    if not polys:
        return False
    off = 0
    for d in polys[0].groups:
        if all(off + i in killed for i in range(d)):
            return True
        off += d
    return False


def segre_detect(p: LinearPencil, tol: float = DEFAULT_TOL) -> SegreResult:
    """Two-row pencils whose rows use disjoint variables.

    If row j maps onto the subspace W_j of C^g and the supports are disjoint,
    the rank <= 1 locus contains the cone over P^1 x P(W_0 n W_1), an
    irreducible non-linear component once dim(W_0 n W_1) >= 2.
    """
    if p.D_Q != 2:
        raise ValueError(f"Segre detection needs a pencil with 2 rows, got {p.D_Q}")
    if p.g < 2:
        return SegreResult(False, reason="fewer than two columns")
    exact = p.mode is Mode.EXACT
    supports, rows = [], []
    for j in range(2):
        supp = sorted(I for I, B in p.blocks.items() if any(x != 0 for x in B[j]))
        supports.append(tuple(supp))
        K = np.array([p.blocks[I][j] for I in supp], dtype=object if exact else complex)
        rows.append(K)
    if not supports[0] or not supports[1]:
        return SegreResult(False, supports=tuple(supports), reason="a row vanishes identically")
    if set(supports[0]) & set(supports[1]):
        return SegreResult(False, supports=tuple(supports), reason="row supports overlap")
    rank = exact_rank if exact else (lambda M: numeric_rank(M, tol))
    d0, d1 = rank(rows[0]), rank(rows[1])
    k = d0 + d1 - rank(np.vstack(rows))
    spans = (d0, d1)
    if k < 2:
        # parallel rows force both into a line or one row to vanish: all linear pieces
        return SegreResult(False, None, tuple(supports), spans, k,
                           "row images meet in dimension <= 1; locus is a union of linear subspaces", True)
    return SegreResult(True, (1, k - 1), tuple(supports), spans, k)


def is_linear_variety(
    vp: VarietyPolynomials,
    pencil: LinearPencil | None = None,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> LinearityVerdict:
    if vp.flag == WHOLE_SPACE:
        return LinearityVerdict(DEGENERATE, reason="pencil has fewer columns than rows; every point is on the locus")
    if not vp.minors:
        raise ValueError("no minors to classify")
    nz = [m.poly for m in vp.nonzero()]
    if not nz:
        return LinearityVerdict(DEGENERATE, reason="all minors vanish identically")
    f = nz[0]
    if all(_proportional(f, q, tol) for q in nz[1:]):
        return _hypersurface(f, tol, seed)
    if _empty_by_monomials(nz):
        return LinearityVerdict(LINEAR, reason="empty locus (monomial minors cover a whole group)")
    if pencil is not None and pencil.D_Q == 2 and len(pencil.groups) == 1:
        seg = segre_detect(pencil, tol)
        if seg.found:
            return LinearityVerdict(
                NONLINEAR,
                certificate={"type": "segre", "label": seg.label, "spans": list(seg.spans),
                             "common_span": seg.common_span},
                segre=seg,
            )
        if seg.linear:
            return LinearityVerdict(LINEAR, reason=seg.reason, segre=seg)
        return LinearityVerdict(UNDECIDED, reason=f"non-hypersurface locus; {seg.reason}", segre=seg)
    return LinearityVerdict(UNDECIDED, reason="non-hypersurface locus outside the decidable cases")


def _hypersurface(f: MultiPoly, tol: float, seed: int) -> LinearityVerdict:
    sep = group_separable_factor(f, tol)
    if not sep.separable:
        v = LinearityVerdict(NONLINEAR, certificate=dict(sep.certificate, type="coefficient_minor"))
        if f.groups == (2, 2):
            bf = bilinear_factors(f, tol, seed)
            v.bilinear = [b for b in bf.factors]
            v.numeric = any(not b.exact for b in bf.factors)
        return v
    factors, numeric = [], False
    const = sep.constant
    for g, piece in enumerate(sep.factors):
        if piece.total_degree() <= 0:
            const = const * next(iter(piece.terms.values()))
            factors.append([])
            continue
        if piece.groups[g] == 1:
            c = next(iter(piece.terms.values()))
            factors.append([(LinearForm.make(g, [ONE if isinstance(c, Gauss) else 1.0]), piece.total_degree())])
            const = const * c
            continue
        if piece.groups[g] == 2:
            bf = binary_linear_factors(piece, g, tol)
            numeric |= not bf.exact
            if not bf.exact and bf.residual > math.sqrt(tol):
                return LinearityVerdict(UNDECIDED, reason=f"binary factorization residual {bf.residual:.3g}")
            factors.append(bf.forms)
            const = const * bf.constant
            continue
        res = linear_forms_test(piece, g, tol, seed)
        if res.status == "NOT":
            return LinearityVerdict(
                NONLINEAR,
                certificate={"type": "no_linear_factor", "group": g + 1, "residual": res.residual},
                reason=res.reason,
            )
        if res.status != "PRODUCT_OF_LINEAR_FORMS":
            return LinearityVerdict(UNDECIDED, reason=res.reason)
        numeric |= not res.exact
        factors.append(res.forms)
        const = const * res.constant if res.exact or not isinstance(const, Gauss) else complex(const) * res.constant
    return LinearityVerdict(LINEAR, factors, const, numeric=numeric)


def verify_linear_factors(f: MultiPoly, v: LinearityVerdict, tol: float = DEFAULT_TOL) -> bool:
    """Re-multiply a LINEAR verdict's factors and compare with ``f``."""
    out = MultiPoly.constant(f.groups, v.constant)
    for forms in v.factors:
        for form, m in forms:
            lp = form.to_poly(f.groups)
            if out.mode is Mode.FLOAT:
                lp = lp.to_float()
            out = out * lp**m
    if out.mode is Mode.EXACT and f.mode is Mode.EXACT:
        return out == f
    return out.to_float().allclose(f.to_float(), math.sqrt(tol))


# separability verdict ----------------------------------------------------------------

@dataclass
class VarietyReport:
    cut: CutSpec
    mode: Mode
    shape: tuple[int, int, int]
    variety: VarietyPolynomials
    linearity: LinearityVerdict
    verdict: str
    note: str = ""
    seed: int = 0


def separability_verdict(
    e: Ensemble,
    cut: CutSpec,
    rank_threshold: int | None = None,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> VarietyReport:
    p = build_pencil(e, cut)
    vp = variety_polynomials(p, rank_threshold, tol)
    lin = is_linear_variety(vp, p, tol, seed)
    verdict, note = {
        NONLINEAR: (ENTANGLED_AT_CUT, "variety is not a union of linear products"),
        LINEAR: (CONSISTENT_WITH_SEPARABLE, "necessary condition only"),
        DEGENERATE: (DEGENERATE, lin.reason),
        UNDECIDED: (UNDECIDED, lin.reason),
    }[lin.kind]
    return VarietyReport(cut, e.mode, p.shape, vp, lin, verdict, note, seed)


# the four-curve family ------------------------------------------------------------------

@dataclass
class FamilyInvariants:
    lambdas: tuple
    matrices: tuple  # four 2x2 arrays, row = first group variable
    mode: Mode

    @property
    def exact(self) -> bool:
        return self.mode is Mode.EXACT


def _family_matrices(a, mode):
    z = ZERO if mode is Mode.EXACT else 0j
    dt = object if mode is Mode.EXACT else complex
    a1, a2, a3, a4, a5, a6, a7, a8 = a
    return (
        np.array([[a1, z], [z, a7]], dtype=dt),
        np.array([[z, a3], [a5, z]], dtype=dt),
        np.array([[z, a4], [a6, z]], dtype=dt),
        np.array([[a2, z], [z, a8]], dtype=dt),
    )


def family_lambda(p: FamilyParams) -> FamilyInvariants:
    a = p.a
    if any((not x) if isinstance(x, Gauss) else abs(x) <= p.tol for x in a):
        raise StateError("all a_i must be nonzero")
    a1, a2, a3, a4, a5, a6, a7, a8 = a
    lams = (-a1 / a7, -a3 / a5, -a4 / a6, -a2 / a8)
    return FamilyInvariants(lams, _family_matrices(a, p.mode), p.mode)


def invariants_from_lambda(lams: Sequence, mode: Mode = Mode.EXACT) -> FamilyInvariants:
    """Invariants of the member with a_5 = a_6 = a_7 = a_8 = 1."""
    if mode is Mode.EXACT:
        lams = tuple(Gauss.coerce(x) if not isinstance(x, Gauss) else x for x in lams)
        one = ONE
    else:
        lams = tuple(complex(x) for x in lams)
        one = 1.0 + 0j
    if any(x == 0 for x in lams):
        raise StateError("lambda values must be nonzero")
    l1, l2, l3, l4 = lams
    a = (-l1, -l4, -l2, -l3, one, one, one, one)
    return FamilyInvariants(lams, _family_matrices(a, mode), mode)


def family_forms(inv: FamilyInvariants) -> list[MultiPoly]:
    return [BilinearFactor(C, 1, inv.exact).to_poly() for C in inv.matrices]


def family_identity_check(p: FamilyParams, tol: float = DEFAULT_TOL) -> tuple[bool, object]:
    """Is the A:B|CD determinant a scalar times the product of the four forms?"""
    from .states import family_state
    from .varieties import parse_cut

    e = family_state(p)
    vp = variety_polynomials(build_pencil(e, parse_cut("A:B|CD", e.dims)))
    det = vp.minors[0].poly
    prod = MultiPoly.constant((2, 2), ONE if p.mode is Mode.EXACT else 1.0)
    for f in family_forms(family_lambda(p)):
        prod = prod * f
    if det.is_zero():
        return False, None
    e0, c0 = prod.pivot_term()
    scale = det.terms.get(e0)
    if scale is None:
        return False, None
    if p.mode is Mode.EXACT:
        return det == prod.scale(scale / c0), scale / c0
    return det.allclose(prod.scale(scale / c0), tol), scale / c0


@dataclass
class EquivalenceResult:
    status: str
    sigma: tuple | None = None
    T1: np.ndarray | None = None
    T2: np.ndarray | None = None
    label: str = ""
    refuted: int = 0
    unresolved: list = field(default_factory=list)


def _inv2(M):
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    det = a * d - b * c
    return np.array([[d / det, -b / det], [-c / det, a / det]], dtype=M.dtype)


def _det2(M):
    return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]


def _is_zero(x, exact, tol):
    return (not x) if exact else abs(complex(x)) <= tol


def _pair_invariant(N, exact, tol):
    """(is_scalar, tr^2/det) of a 2x2 matrix, both unchanged by similarity and scaling."""
    scalar = _is_zero(N[0, 1], exact, tol) and _is_zero(N[1, 0], exact, tol) and _is_zero(N[0, 0] - N[1, 1], exact, tol)
    tr = N[0, 0] + N[1, 1]
    return scalar, tr * tr / _det2(N)


def _proportional_mat(A, B, exact, tol):
    """Is A = mu B for a nonzero mu?"""
    fa, fb = A.reshape(-1), B.reshape(-1)
    k = max(range(4), key=lambda i: abs(complex(fb[i])))
    if _is_zero(fb[k], exact, tol):
        return False
    mu = fa[k] / fb[k]
    if _is_zero(mu, exact, tol):
        return False
    scale = max(abs(complex(x)) for x in fa)
    return all(_is_zero(x - mu * y, exact, tol * max(1.0, scale)) for x, y in zip(fa, fb))


def _nullspace(A, exact, tol):
    """Basis of the right nullspace (list of vectors)."""
    if not exact:
        A = np.asarray(A, dtype=complex)
        _, s, vh = np.linalg.svd(A)
        r = int(np.sum(s > tol * max(1.0, s[0] if len(s) else 0)))
        return [vh[i].conj() for i in range(r, vh.shape[0])]
    A = [[Gauss.coerce(x) for x in row] for row in A]
    n = len(A[0])
    piv_cols, r = [], 0
    for c in range(n):
        piv = next((i for i in range(r, len(A)) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = ONE / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        piv_cols.append(c)
        r += 1
    basis = []
    for free in (c for c in range(n) if c not in piv_cols):
        v = [ZERO] * n
        v[free] = ONE
        for i, c in enumerate(piv_cols):
            v[c] = -A[i][free]
        basis.append(np.array(v, dtype=object))
    return basis


def _commutation_rows(N, Np, c):
    """Rows of the linear system N Q - c Q Np = 0 in the entries of Q (row-major)."""
    rows = []
    for i in range(2):
        for j in range(2):
            row = [0] * 4
            for k in range(2):
                row[k * 2 + j] = row[k * 2 + j] + N[i, k]
                row[i * 2 + k] = row[i * 2 + k] - c * Np[k, j]
            rows.append(row)
    return rows


def _witness_for(Cs, Cps, exact, tol, rng):
    """Try to build T1, T2 with T1^tau C_i T2 proportional to Cps[i]."""
    N = [_inv2(Cs[0]) @ Cs[i] for i in range(1, 4)]
    Np = [_inv2(Cps[0]) @ Cps[i] for i in range(1, 4)]
    choices = []
    for Ni, Npi in zip(N, Np):
        tr, trp = Ni[0, 0] + Ni[1, 1], Npi[0, 0] + Npi[1, 1]
        if not _is_zero(trp, exact, tol):
            choices.append([tr / trp])
            continue
        ratio = _det2(Ni) / _det2(Npi)
        if exact:
            s = gauss_sqrt(ratio)
            if s is None:
                return None
            choices.append([s, -s])
        else:
            s = np.sqrt(complex(ratio))
            choices.append([s, -s])
    for cs in itertools.product(*choices):
        rows = []
        for Ni, Npi, c in zip(N, Np, cs):
            rows.extend(_commutation_rows(Ni, Npi, c))
        basis = _nullspace(rows, exact, tol)
        if not basis:
            continue
        cands = [basis[0]] if len(basis) == 1 else list(basis)
        if len(basis) > 1:
            combo = sum((int(k) + 1) * b for k, b in zip(rng.integers(0, 7, len(basis)), basis))
            cands.append(combo)
        for q in cands:
            T2 = np.array(q, dtype=object if exact else complex).reshape(2, 2)
            if _is_zero(_det2(T2), exact, tol):
                continue
            T1t = Cps[0] @ _inv2(T2) @ _inv2(Cs[0])
            if all(_proportional_mat(T1t @ Cs[i] @ T2, Cps[i], exact, math.sqrt(tol) if not exact else tol) for i in range(4)):
                return T1t.T.copy(), T2
    return None


def family_equivalence(inv: FamilyInvariants, inv2: FamilyInvariants, tol: float = 1e-9, seed: int = 0) -> EquivalenceResult:
    """Search invertible T1, T2 and a matching sigma with T1^tau C_i T2 ~ C'_sigma(i).

    A permutation is refuted when some pair (i, j) has similarity-and-scale
    invariants of C_j^-1 C_i that differ from those of the matched pair.
    """
    exact = inv.exact and inv2.exact
    if exact:
        Cs = [to_exact_array(C) for C in inv.matrices]
        Cps = [to_exact_array(C) for C in inv2.matrices]
    else:
        Cs = [to_complex_array(C) for C in inv.matrices]
        Cps = [to_complex_array(C) for C in inv2.matrices]
    for C in Cs + Cps:
        if _is_zero(_det2(C), exact, tol):
            raise ValueError("singular factor matrix")
    if all(_proportional_mat(C, Cp, exact, tol) for C, Cp in zip(Cs, Cps)):
        eye = np.array([[ONE, ZERO], [ZERO, ONE]], dtype=object) if exact else np.eye(2, dtype=complex)
        return EquivalenceResult(EQUIVALENT, (1, 2, 3, 4), eye, eye.copy(), "variety-level")
    rng = np.random.default_rng(seed)
    inv_pairs = {}
    for i, j in itertools.permutations(range(4), 2):
        inv_pairs[(i, j)] = _pair_invariant(_inv2(Cs[j]) @ Cs[i], exact, tol)
    refuted, unresolved = 0, []
    for sigma in itertools.permutations(range(4)):
        ok = True
        for (i, j), (sc, kappa) in inv_pairs.items():
            sc2, kappa2 = _pair_invariant(_inv2(Cps[sigma[j]]) @ Cps[sigma[i]], exact, tol)
            if sc != sc2 or not _is_zero(kappa - kappa2, exact, tol * max(1.0, abs(complex(kappa)))):
                ok = False
                break
        if not ok:
            refuted += 1
            continue
        w = _witness_for(Cs, [Cps[s] for s in sigma], exact, tol, rng)
        if w is not None:
            T1, T2 = w
            return EquivalenceResult(EQUIVALENT, tuple(s + 1 for s in sigma), T1, T2, "variety-level", refuted, unresolved)
        unresolved.append(tuple(s + 1 for s in sigma))
    if refuted == 24:
        return EquivalenceResult(INEQUIVALENT, refuted=refuted)
    return EquivalenceResult(UNKNOWN, refuted=refuted, unresolved=unresolved)


# fingerprints ----------------------------------------------------------------------

def _kappa(C1, C2):
    N = np.linalg.solve(to_complex_array(C2), to_complex_array(C1))
    return complex(np.trace(N) ** 2 / np.linalg.det(N))


def fingerprint(report: VarietyReport, tol: float = 1e-6) -> dict:
    """Necessary invariants of a variety under local transformations."""
    vp, lin = report.variety, report.linearity
    nz = vp.nonzero()
    md = sorted({m.poly.multidegree() for m in nz if m.poly.multidegree() is not None})
    fp = {
        "shape": list(report.shape),
        "flag": vp.flag,
        "threshold": vp.t,
        "nonzero_minors": len(nz),
        "multidegrees": [list(d) for d in md],
        "linearity": lin.kind,
    }
    if lin.bilinear:
        fp["bilinear"] = sorted([[int(numeric_rank(to_complex_array(b.matrix), 1e-9)), b.multiplicity] for b in lin.bilinear])
        ks = []
        for b1, b2 in itertools.permutations(lin.bilinear, 2):
            ks.append(_kappa(b1.matrix, b2.matrix))
        fp["kappa"] = sorted(ks, key=lambda z: (round(z.real, 6), round(z.imag, 6)))
    if lin.factors:
        fp["linear_factors"] = [sorted(m for _, m in forms) for forms in lin.factors]
    if lin.segre is not None and lin.segre.found:
        fp["segre"] = list(lin.segre.dims)
    return fp


def compare_fingerprints(f1: dict, f2: dict, tol: float = 1e-6) -> bool:
    if set(f1) != set(f2):
        return False
    for k in f1:
        if k == "kappa":
            a, b = f1[k], f2[k]
            if len(a) != len(b):
                return False
            rest = list(b)
            for z in a:
                j = next((i for i, w in enumerate(rest) if abs(z - w) <= tol * max(1.0, abs(z))), None)
                if j is None:
                    return False
                rest.pop(j)
        elif f1[k] != f2[k]:
            return False
    return True
