import itertools
from fractions import Fraction
from math import comb

import numpy as np
import pytest
import sympy as sp

from _helpers import to_sympy
from detvar.polynomials import MultiPoly, bilinear_factors
from detvar.scalars import Gauss, Mode, to_complex_array, to_exact_array
from detvar.states import (
    Ensemble,
    density_from_ensemble,
    family_state,
    identity_family_params,
    smolin_state,
)
from detvar.varieties import (
    WHOLE_SPACE,
    CutError,
    apply_local_transform,
    build_pencil,
    conjugated_block_sum,
    evaluate_pencil,
    gram_identity_residual,
    parse_cut,
    random_point,
    representation_matrix,
    substituted_polynomial,
    variety_polynomials,
    verify_transformation_law,
)

Q4 = (2, 2, 2, 2)
half = Fraction(1, 2)


def basis_ensemble(dims, pairs, mode=Mode.EXACT):
    D = int(np.prod(dims))
    V = np.zeros((len(pairs), D), dtype=int)
    for k, (_, i) in enumerate(pairs):
        V[k, i] = 1
    if mode is Mode.EXACT:
        return Ensemble(dims, tuple(p for p, _ in pairs), to_exact_array(V))
    return Ensemble(dims, tuple(float(p) for p, _ in pairs), V.astype(complex))


def ghz_mixture(mode=Mode.EXACT):
    return basis_ensemble((2, 2, 2), [(half, 0), (half, 7)], mode)


def maximally_mixed(dims=(2, 2, 2)):
    D = int(np.prod(dims))
    return basis_ensemble(dims, [(Fraction(1, D), i) for i in range(D)])


def random_float_ensemble(rng, dims, g):
    D = int(np.prod(dims))
    V = rng.standard_normal((g, D)) + 1j * rng.standard_normal((g, D))
    V /= np.linalg.norm(V, axis=1)[:, None]
    w = rng.random(g)
    return Ensemble(dims, tuple((w / w.sum()).tolist()), V)


# cut parsing ----------------------------------------------------------------------

def test_parse_two_groups():
    c = parse_cut("A:B|CD", Q4)
    assert c.row_groups == ((0,), (1,)) and c.col_parties == (2, 3)
    assert (c.D_P, c.D_Q, c.group_dims) == (4, 4, (2, 2))


def test_parse_coarse_group():
    c = parse_cut("AB|CD", Q4)
    assert c.row_groups == ((0, 1),) and c.group_dims == (4,)


def test_parse_isolating_cut():
    c = parse_cut("BCD|A", Q4)
    assert c.row_groups == ((1, 2, 3),) and c.col_parties == (0,) and c.D_Q == 2


def test_parse_complement_inferred_sorted():
    c = parse_cut("D:B", Q4)
    assert c.row_groups == ((3,), (1,)) and c.col_parties == (0, 2)
    assert c.text == "D:B|AC"


@pytest.mark.parametrize("bad", ["A:B|CE", "A:A|CD", "AB|BCD", "ABCD", "|ABCD", "A::B|CD", "A:B|C", "A-B|CD"])
def test_parse_rejects(bad):
    with pytest.raises(CutError):
        parse_cut(bad, Q4)


# pencil ---------------------------------------------------------------------------

def test_pencil_diagonal_example():
    p = build_pencil(ghz_mixture(), parse_cut("A:B|C", (2, 2, 2)))
    M = p.poly_matrix()
    G = (2, 2)
    assert M[0][0] == MultiPoly.var(G, 0, 0) * MultiPoly.var(G, 1, 0)
    assert M[1][1] == MultiPoly.var(G, 0, 1) * MultiPoly.var(G, 1, 1)
    assert M[0][1].is_zero() and M[1][0].is_zero()
    assert p.col_weights == (half, half)
    S, rank = evaluate_pencil(build_pencil(ghz_mixture(Mode.FLOAT), p.cut), [[1, 0], [1, 0]])
    assert np.allclose(S, [[2 ** -0.5, 0], [0, 0]]) and rank == 1


def test_pencil_smolin_blocks():
    p = build_pencil(smolin_state(), parse_cut("AB|CD", Q4))
    assert len(p.blocks) == 4 and all(B.shape == (4, 4) for B in p.blocks.values())


def test_pencil_basis_point_returns_block():
    p = build_pencil(smolin_state(), parse_cut("A:B|CD", Q4))
    for i, j in itertools.product(range(2), repeat=2):
        pt = [[int(k == i) for k in range(2)], [int(k == j) for k in range(2)]]
        S, _ = evaluate_pencil(p, pt)
        assert (S == p.blocks[(i, j)]).all()


def test_pencil_family_isolating_rows():
    a = [Fraction(k) for k in range(1, 9)]
    p = build_pencil(family_state(identity_family_params(a)), parse_cut("BCD|A", Q4))
    rows = [[x.render() for x in row] for row in p.poly_matrix()]
    # row A=0 uses BCD in {000, 011, 101, 110}; row A=1 uses {100, 111, 001, 010}
    assert rows[0] == ["1 * r1_0", "2 * r1_3", "3 * r1_5", "4 * r1_6"]
    assert rows[1] == ["7 * r1_4", "8 * r1_7", "5 * r1_1", "6 * r1_2"]


def test_pencil_reconstruction_and_gram():
    for e, cut in [(smolin_state(), "A:B|CD"), (maximally_mixed(), "A|BC"), (ghz_mixture(), "B:C|A")]:
        c = parse_cut(cut, e.dims)
        p = build_pencil(e, c)
        T = representation_matrix(e).entries
        order = sorted(range(T.shape[0]), key=lambda n: c.split_index(n))
        assert (p.stacked() == T[order]).all()
        Tf = representation_matrix(e).scaled_float()
        assert np.allclose(Tf @ Tf.conj().T, to_complex_array(density_from_ensemble(e).matrix), atol=1e-12)


def test_dims_mismatch():
    with pytest.raises(CutError):
        build_pencil(ghz_mixture(), parse_cut("A:B|CD", Q4))


# minors ---------------------------------------------------------------------------

def smolin_product(G=(2, 2)):
    x0, x1, y0, y1 = (MultiPoly.var(G, g, i) for g in range(2) for i in range(2))
    return (x0 * y0 + x1 * y1) * (x0 * y0 - x1 * y1) * (x0 * y1 + x1 * y0) * (x0 * y1 - x1 * y0)


def test_smolin_determinant_matches_product_and_oracle():
    p = build_pencil(smolin_state(), parse_cut("A:B|CD", Q4))
    vp = variety_polynomials(p)
    assert vp.t == 4 and vp.flag is None and len(vp.minors) == 1
    det = vp.minors[0].poly
    assert det.normalized() == smolin_product().normalized()
    # independent oracle: sympy determinant of the symbolic pencil, times the column weights
    S = sp.Matrix([[to_sympy(x) for x in row] for row in p.poly_matrix()])
    w = sp.Integer(1)
    for c in p.col_weights:
        w *= sp.Rational(c.numerator, c.denominator)
    assert vp.minors[0].radicand == 1
    assert sp.expand(to_sympy(det) ** 2 - w * sp.expand(S.det()) ** 2) == 0


def test_maximally_mixed_monomials():
    vp = variety_polynomials(build_pencil(maximally_mixed(), parse_cut("A|BC", (2, 2, 2))))
    assert len(vp.minors) == comb(4, 4) * comb(8, 4) == 70
    G = (2,)
    polys = [m.poly for m in vp.minors]
    for k in range(2):
        target = (MultiPoly.var(G, 0, k) ** 4).scale(Gauss(Fraction(1, 64)))
        assert target in polys
    assert all(m.radicand == 1 for m in vp.minors)


def test_pure_state_whole_space():
    e = basis_ensemble((2, 2, 2), [(1, 0)])
    vp = variety_polynomials(build_pencil(e, parse_cut("A|BC", (2, 2, 2))))
    assert vp.flag == WHOLE_SPACE and vp.minors == []


@pytest.mark.parametrize("t", [1, 2, 3, 4])
def test_minor_count_and_multidegree(t):
    rng = np.random.default_rng(t)
    e = random_float_ensemble(rng, (2, 2, 2, 2), 5)
    p = build_pencil(e, parse_cut("A:B|CD", Q4))
    vp = variety_polynomials(p, rank_threshold=t)
    assert len(vp.minors) == comb(4, t) * comb(5, t)
    for m in vp.nonzero():
        md = m.poly.multidegree()
        assert md is not None and md == (t, t)


def test_threshold_out_of_range():
    p = build_pencil(ghz_mixture(), parse_cut("A:B|C", (2, 2, 2)))
    for t in (0, 3):
        with pytest.raises(ValueError):
            variety_polynomials(p, rank_threshold=t)


def test_refined_rank_locus_for_short_ensemble():
    e = basis_ensemble((2, 2, 2), [(1, 0)])
    vp = variety_polynomials(build_pencil(e, parse_cut("A|BC", (2, 2, 2))), rank_threshold=1)
    assert [m.poly.render() for m in vp.nonzero()] == ["1 * r1_0"]


def test_irrational_weight_product_is_split():
    e = basis_ensemble((2, 2), [(Fraction(1, 3), 0), (Fraction(2, 3), 3)])
    vp = variety_polynomials(build_pencil(e, parse_cut("A|B", (2, 2))))
    (m,) = vp.minors
    assert m.radicand == 2 and m.poly.render() == "1/3 * r1_0 * r1_1"


# evaluation -----------------------------------------------------------------------

def test_evaluation_consistent_with_factors():
    p = build_pencil(smolin_state(), parse_cut("A:B|CD", Q4))
    F = smolin_product()
    rng = np.random.default_rng(5)
    pts = [[[1, 1j], [1, 0]]]
    pts += [[list(rng.integers(-2, 3, 2) + 1j * rng.integers(-2, 3, 2)) for _ in range(2)] for _ in range(40)]
    pts = [pt for pt in pts if all(any(x != 0 for x in v) for v in pt)]
    for pt in pts:
        exact_pt = [[Gauss(int(z.real), int(z.imag)) for z in map(complex, v)] for v in pt]
        S, rank = evaluate_pencil(p, exact_pt)
        on = F.evaluate([x for v in exact_pt for x in v]) == 0
        assert (rank < 4) == on


def test_family_curve_point_is_rank_deficient():
    a = [Fraction(k) for k in (2, 3, 5, 7, 11, 13, 17, 19)]
    p = build_pencil(family_state(identity_family_params(a)), parse_cut("A:B|CD", Q4))
    # a1 r0^1 r0^2 + a7 r1^1 r1^2 = 0 at r^1 = (1, 1), r^2 = (a7, -a1)
    _, rank = evaluate_pencil(p, [[1, 1], [a[6], -a[0]]])
    assert rank < 4
    _, rank = evaluate_pencil(p, [[1, 1], [1, 1]])
    assert rank == 4


def test_zero_group_vector_rejected():
    p = build_pencil(smolin_state(), parse_cut("A:B|CD", Q4))
    with pytest.raises(ValueError):
        evaluate_pencil(p, [[0, 0], [1, 0]])


@pytest.mark.parametrize("which", ["smolin", "family", "mixed", "random"])
def test_gram_identity_hundred_points(which):
    rng = np.random.default_rng(17)
    if which == "smolin":
        e, cut = smolin_state(), "A:B|CD"
    elif which == "family":
        e, cut = family_state(identity_family_params([Fraction(k) for k in range(1, 9)])), "BCD|A"
    elif which == "mixed":
        e, cut = maximally_mixed(), "A|BC"
    else:
        e, cut = random_float_ensemble(rng, (2, 3, 2), 4), "A:C|B"
    c = parse_cut(cut, e.dims)
    worst = max(gram_identity_residual(e, c, random_point(c.group_dims, rng)) for _ in range(100))
    assert worst < 1e-10


def test_square_gram_determinant():
    e = smolin_state()
    c = parse_cut("A:B|CD", Q4)
    r = random_point(c.group_dims, np.random.default_rng(3))
    S, _ = evaluate_pencil(build_pencil(e, c), r)
    M = conjugated_block_sum(density_from_ensemble(e), c, r)
    assert abs(np.linalg.det(M) - abs(np.linalg.det(S)) ** 2) < 1e-12


# local transforms -----------------------------------------------------------------

def test_identity_transform():
    e = smolin_state()
    I2 = [[1, 0], [0, 1]]
    t = apply_local_transform(e, [I2] * 4)
    assert (t.vectors == e.vectors).all() and t.weights == e.weights
    chk = verify_transformation_law(e, parse_cut("A:B|CD", Q4), [I2] * 4, trials=10)
    assert chk.passed and abs(chk.constant - 1) < 1e-12


def test_phase_flip_preserves_smolin():
    e = smolin_state()
    Z = [[1, 0], [0, -1]]
    t = apply_local_transform(e, [Z] * 4)
    assert (density_from_ensemble(t).matrix == density_from_ensemble(e).matrix).all()


def test_transform_rejects_bad_matrices():
    e = smolin_state()
    with pytest.raises(ValueError):
        apply_local_transform(e, [[[1, 0], [0, 1]]] * 3)
    with pytest.raises(ValueError):
        apply_local_transform(e, [[[1, 1], [1, 1]]] + [[[1, 0], [0, 1]]] * 3)


def random_unitary(rng, d):
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))[None, :]


def test_transformation_law_random_unitaries():
    rng = np.random.default_rng(0)
    e = smolin_state(Mode.FLOAT)
    mats = [random_unitary(rng, 2) for _ in range(4)]
    chk = verify_transformation_law(e, parse_cut("A:B|CD", Q4), mats, trials=100, seed=1)
    assert chk.passed and chk.drift < 1e-8 and chk.trials == 100


def test_transformation_law_non_square():
    rng = np.random.default_rng(4)
    e = random_float_ensemble(rng, (2, 2, 2), 3)
    mats = [random_unitary(rng, 2) for _ in range(3)]
    chk = verify_transformation_law(e, parse_cut("A|BC", (2, 2, 2)), mats, trials=50)
    assert chk.passed and chk.rank_mismatches == 0


def factor_set(poly):
    bf = bilinear_factors(poly)
    return sorted((f.to_poly(poly.groups).normalized().render(), f.multiplicity) for f in bf.factors)


@pytest.mark.parametrize("kind", ["signed_permutation", "rational"])
def test_exact_factor_sets_after_substitution(kind):
    e = smolin_state()
    cut = parse_cut("A:B|CD", Q4)
    if kind == "signed_permutation":
        mats = [[[0, 1], [1, 0]], [[1, 0], [0, -1]], [[0, -1], [1, 0]], [[1, 0], [0, 1]]]
    else:
        mats = [[[1, 2], [0, 1]], [[3, 1], [1, 1]], [[1, 0], [Fraction(1, 2), 1]], [[2, 1], [1, 3]]]
    before = variety_polynomials(build_pencil(e, cut)).minors[0].poly
    after = variety_polynomials(build_pencil(apply_local_transform(e, mats), cut)).minors[0].poly
    sub = substituted_polynomial(before, cut, mats)
    assert after.normalized() == sub.normalized()
    assert factor_set(after) == factor_set(sub)
    if kind == "signed_permutation":
        assert factor_set(after) == factor_set(before)
