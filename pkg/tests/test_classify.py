from fractions import Fraction

import numpy as np
import pytest

from _helpers import random_product_ensemble
from detvar.classify import (
    CONSISTENT_WITH_SEPARABLE,
    DEGENERATE,
    ENTANGLED_AT_CUT,
    EQUIVALENT,
    INEQUIVALENT,
    LINEAR,
    NONLINEAR,
    FamilyInvariants,
    compare_fingerprints,
    family_equivalence,
    family_identity_check,
    family_lambda,
    fingerprint,
    invariants_from_lambda,
    is_linear_variety,
    segre_detect,
    separability_verdict,
    verify_linear_factors,
)
from detvar.polynomials import bilinear_factors
from detvar.scalars import Gauss, Mode, to_complex_array, to_exact_array
from detvar.states import (
    Ensemble,
    StateError,
    family_state,
    identity_family_params,
    smolin_state,
)
from detvar.varieties import (
    apply_local_transform,
    build_pencil,
    parse_cut,
    variety_polynomials,
)

Q4 = (2, 2, 2, 2)
half = Fraction(1, 2)


def basis_ensemble(dims, pairs):
    D = int(np.prod(dims))
    V = np.zeros((len(pairs), D), dtype=int)
    for k, (_, i) in enumerate(pairs):
        V[k, i] = 1
    return Ensemble(dims, tuple(p for p, _ in pairs), to_exact_array(V))


def random_unitary(rng, d):
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))[None, :]


def rand_a(rng):
    out = []
    while len(out) < 8:
        x = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 6)))
        if x:
            out.append(x)
    return out


# linearity and verdicts -------------------------------------------------------------

def test_smolin_nonlinear_with_certificates():
    rep = separability_verdict(smolin_state(), parse_cut("A:B|CD", Q4))
    lin = rep.linearity
    assert rep.verdict == ENTANGLED_AT_CUT and lin.kind == NONLINEAR
    assert lin.certificate["type"] == "coefficient_minor" and lin.certificate["minor"] != 0
    assert len(lin.bilinear) == 4
    identity_like = {((1, 0), (0, 1)), ((1, 0), (0, -1)), ((0, 1), (1, 0)), ((0, 1), (-1, 0))}
    seen = set()
    for b in lin.bilinear:
        assert b.exact and abs(complex(b.det)) == 1
        M = to_complex_array(b.matrix)
        M = M / M.flat[np.flatnonzero(M)[0]]
        seen.add(tuple(tuple(int(x.real) for x in row) for row in M))
    assert seen == identity_like


def test_diagonal_product_mixture_linear():
    e = basis_ensemble((2, 2, 2), [(half, 0), (half, 7)])
    rep = separability_verdict(e, parse_cut("A:B|C", (2, 2, 2)))
    assert rep.verdict == CONSISTENT_WITH_SEPARABLE and rep.note == "necessary condition only"
    lin = rep.linearity
    forms = sorted((f.group, f.to_poly((2, 2)).render(), m) for forms in lin.factors for f, m in forms)
    assert forms == [(0, "1 * r1_0", 1), (0, "1 * r1_1", 1), (1, "1 * r2_0", 1), (1, "1 * r2_1", 1)]
    assert lin.constant == half
    assert verify_linear_factors(rep.variety.minors[0].poly, lin)


def test_whole_space_is_degenerate():
    e = basis_ensemble((2, 2, 2), [(1, 0)])
    rep = separability_verdict(e, parse_cut("A|BC", (2, 2, 2)))
    assert rep.verdict == DEGENERATE and rep.linearity.kind == DEGENERATE


def test_maximally_mixed_empty_locus_linear():
    e = basis_ensemble((2, 2, 2), [(Fraction(1, 8), i) for i in range(8)])
    rep = separability_verdict(e, parse_cut("A|BC", (2, 2, 2)))
    assert rep.linearity.kind == LINEAR and rep.verdict == CONSISTENT_WITH_SEPARABLE


def test_no_minors_without_flag_is_error():
    p = build_pencil(smolin_state(), parse_cut("A:B|CD", Q4))
    vp = variety_polynomials(p)
    vp.minors = []
    with pytest.raises(ValueError):
        is_linear_variety(vp)


@pytest.mark.parametrize("seed", range(5))
def test_product_ensembles_linear(seed):
    rng = np.random.default_rng(seed)
    e, _ = random_product_ensemble(rng, dims=(2, 2, 2, 2), g=4)
    rep = separability_verdict(e, parse_cut("A:B|CD", Q4))
    assert rep.linearity.kind == LINEAR
    assert sum(m for forms in rep.linearity.factors for _, m in forms) == 8
    assert verify_linear_factors(rep.variety.minors[0].poly, rep.linearity)


def test_qutrit_group_uses_linear_forms():
    rng = np.random.default_rng(8)
    e, _ = random_product_ensemble(rng, dims=(3, 3), g=3)
    rep = separability_verdict(e, parse_cut("A|B", (3, 3)))
    assert rep.linearity.kind == LINEAR
    (forms,) = rep.linearity.factors
    assert sum(m for _, m in forms) == 3


# Segre detection --------------------------------------------------------------------

def test_family_segre():
    a = [Fraction(k) for k in range(1, 9)]
    p = build_pencil(family_state(identity_family_params(a)), parse_cut("BCD|A", Q4))
    seg = segre_detect(p)
    assert seg.found and seg.label == "SEGRE(1,3)" and seg.spans == (4, 4)
    lab = lambda I: format(I[0], "03b")
    assert [lab(I) for I in seg.supports[0]] == ["000", "011", "101", "110"]
    assert [lab(I) for I in seg.supports[1]] == ["001", "010", "100", "111"]


def test_segre_vanishing_row():
    e = basis_ensemble((2, 2), [(half, 0), (half, 2)])  # |00>, |10>: row B=1 is zero
    p = build_pencil(e, parse_cut("A|B", (2, 2)))
    seg = segre_detect(p)
    assert not seg.found and seg.label == "NO_STRUCTURE"


def test_segre_single_variable_rows():
    e = basis_ensemble((2, 2), [(half, 0), (half, 3)])
    seg = segre_detect(build_pencil(e, parse_cut("A|B", (2, 2))))
    assert not seg.found and seg.spans == (1, 1)


def test_segre_wrong_shape():
    with pytest.raises(ValueError):
        segre_detect(build_pencil(smolin_state(), parse_cut("A:B|CD", Q4)))


@pytest.mark.parametrize("cut", ["BCD|A", "ACD|B", "ABD|C", "ABC|D"])
def test_smolin_isolating_cuts_segre(cut):
    rep = separability_verdict(smolin_state(), parse_cut(cut, Q4))
    assert rep.verdict == ENTANGLED_AT_CUT and rep.linearity.segre.label == "SEGRE(1,3)"


# family invariants ------------------------------------------------------------------

def test_lambda_examples():
    inv = family_lambda(identity_family_params([1] * 8))
    assert inv.lambdas == (-1, -1, -1, -1)
    inv = family_lambda(identity_family_params([1, 1, 1, 1, 1, 1, 1, 2]))
    assert inv.lambdas[0] == -1 and inv.lambdas[3] == Fraction(-1, 2)


def test_zero_amplitude_rejected():
    with pytest.raises(StateError):
        identity_family_params([1, 1, 1, 1, 1, 1, 0, 1])


def test_invariants_from_lambda_round_trip():
    lams = (Fraction(-2), Fraction(3, 5), Fraction(-1, 7), Fraction(4))
    inv = invariants_from_lambda(lams)
    a = [-lams[0], -lams[3], -lams[1], -lams[2], 1, 1, 1, 1]
    assert family_lambda(identity_family_params(a)).lambdas == tuple(Gauss(x) for x in lams)
    assert all(to_exact_array(M).shape == (2, 2) for M in inv.matrices)


@pytest.mark.parametrize("seed", range(5))
def test_family_determinant_identity(seed):
    ok, scale = family_identity_check(identity_family_params(rand_a(np.random.default_rng(seed))))
    assert ok and scale != 0


# equivalence ------------------------------------------------------------------------

def verify_witness(inv, inv2, res):
    Cs = [to_complex_array(C) for C in inv.matrices]
    Cps = [to_complex_array(C) for C in inv2.matrices]
    T1, T2 = to_complex_array(res.T1), to_complex_array(res.T2)
    for i, s in enumerate(res.sigma):
        L = T1.T @ Cs[i] @ T2
        R = Cps[s - 1]
        k = np.argmax(np.abs(R))
        assert np.allclose(L, L.flat[k] / R.flat[k] * R, atol=1e-8)


def test_reflexive_identity_witness():
    inv = invariants_from_lambda((-1, -1, -1, -1))
    res = family_equivalence(inv, inv)
    assert res.status == EQUIVALENT and res.sigma == (1, 2, 3, 4) and res.label == "variety-level"
    verify_witness(inv, inv, res)


def test_relation_and_full_sweep():
    l, lp = (-1, -1, -1, -1), (-2, -1, -1, -1)
    # identity assignment relation: l1 * l3' * l4' vs l1' * l2' * l4
    assert l[0] * lp[2] * lp[3] != lp[0] * lp[1] * l[3]
    res = family_equivalence(invariants_from_lambda(l), invariants_from_lambda(lp))
    assert res.status == INEQUIVALENT and res.refuted == 24


@pytest.mark.parametrize("seed", range(4))
def test_random_lambdas_inequivalent(seed):
    rng = np.random.default_rng(100 + seed)
    draw = lambda: tuple(Fraction(int(rng.integers(1, 40)), int(rng.integers(1, 40))) * (-1) ** int(rng.integers(0, 2)) for _ in range(4))
    l1, l2 = draw(), draw()
    res = family_equivalence(invariants_from_lambda(l1), invariants_from_lambda(l2))
    assert res.status == INEQUIVALENT


def test_symmetric_on_found_witness():
    l = (Fraction(-2), Fraction(3), Fraction(5, 2), Fraction(-7))
    inv = invariants_from_lambda(l)
    inv2 = invariants_from_lambda(tuple(1 / x for x in l))
    r12, r21 = family_equivalence(inv, inv2), family_equivalence(inv2, inv)
    assert r12.status == r21.status == EQUIVALENT
    verify_witness(inv, inv2, r12)
    verify_witness(inv2, inv, r21)


def test_local_unitary_image_equivalent():
    rng = np.random.default_rng(3)
    a = [float(x) for x in rand_a(rng)]
    p = identity_family_params(a, Mode.FLOAT)
    e = family_state(p)
    mats = [random_unitary(rng, 2) for _ in range(4)]
    cut = parse_cut("A:B|CD", Q4)
    det = variety_polynomials(build_pencil(apply_local_transform(e, mats), cut)).minors[0].poly
    bf = bilinear_factors(det)
    assert len(bf.factors) == 4
    image = FamilyInvariants(None, tuple(to_complex_array(b.matrix) for b in bf.factors), Mode.FLOAT)
    res = family_equivalence(family_lambda(p), image, tol=1e-6)
    assert res.status == EQUIVALENT
    verify_witness(family_lambda(p), image, res)


def test_singular_matrix_rejected():
    inv = invariants_from_lambda((-1, -1, -1, -1))
    bad = FamilyInvariants(None, (to_exact_array([[1, 0], [0, 0]]),) + inv.matrices[1:], Mode.EXACT)
    with pytest.raises(ValueError):
        family_equivalence(inv, bad)


# fingerprints -----------------------------------------------------------------------

def test_fingerprint_match_under_local_unitaries():
    rng = np.random.default_rng(9)
    cut = parse_cut("A:B|CD", Q4)
    p = identity_family_params([float(x) for x in rand_a(rng)], Mode.FLOAT)
    e = family_state(p)
    img = apply_local_transform(e, [random_unitary(rng, 2) for _ in range(4)])
    f1 = fingerprint(separability_verdict(e, cut))
    f2 = fingerprint(separability_verdict(img, cut))
    assert compare_fingerprints(f1, f2, 1e-6)
    assert f1["bilinear"] == [[2, 1]] * 4 and len(f1["kappa"]) == 12


def test_fingerprint_mismatch():
    cut = parse_cut("A:B|CD", Q4)
    f1 = fingerprint(separability_verdict(smolin_state(), cut))
    f2 = fingerprint(separability_verdict(family_state(identity_family_params([1, 2, 3, 4, 5, 6, 7, 8])), cut))
    assert not compare_fingerprints(f1, f2)
    assert compare_fingerprints(f1, f1)


@pytest.mark.parametrize("cut,col", [("ABD|C", 2), ("ABC|D", 3)])
def test_family_is_product_across_c_and_d_isolating_cuts(cut, col):
    # every family vector has one fixed value of the isolated party, so the
    # state is a mixture of products there and the locus must be linear
    e = family_state(identity_family_params([Fraction(k) for k in range(1, 9)]))
    for v in to_complex_array(e.vectors):
        t = np.moveaxis(v.reshape(Q4), col, -1).reshape(8, 2)
        assert np.linalg.matrix_rank(t) == 1
    assert separability_verdict(e, parse_cut(cut, Q4)).verdict == CONSISTENT_WITH_SEPARABLE
