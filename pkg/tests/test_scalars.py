from fractions import Fraction

import numpy as np
import pytest

from detvar.scalars import (
    I_UNIT,
    ONE,
    Gauss,
    Mode,
    ModeError,
    gauss_sqrt,
    parse_exact,
    parse_scalar_str,
    rationalize,
    scalar_str,
    split_sqrt,
)


def test_field_operations():
    z = Gauss(Fraction(1, 2), 3)
    w = Gauss(-2, Fraction(1, 3))
    assert (z * w) / w == z
    assert z - z == 0
    assert I_UNIT * I_UNIT == -1
    assert (z * z.conjugate()).imag == 0
    assert z**-2 * z**2 == ONE


def test_mixing_modes_raises():
    with pytest.raises(ModeError):
        Gauss(1) + 0.5
    with pytest.raises(ModeError):
        1j * Gauss(1)
    with pytest.raises(ModeError):
        Gauss(0.5)


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        Gauss(1) / Gauss(0)


@pytest.mark.parametrize(
    "z, text",
    [(Gauss(Fraction(1, 2)), "1/2"), (Gauss(0, 1), "i"), (Gauss(0, -1), "-i"), (Gauss(Fraction(1, 2), -3), "(1/2-3i)")],
)
def test_exact_text_round_trip(z, text):
    assert scalar_str(z) == text
    assert parse_scalar_str(text, Mode.EXACT) == z


@pytest.mark.parametrize("z", [0.25 + 0j, -1.5e-7 + 2j, 3j, complex(1, -1e20)])
def test_float_text_round_trip(z):
    assert parse_scalar_str(scalar_str(z), Mode.FLOAT) == pytest.approx(z, rel=1e-11)


def test_gauss_sqrt():
    assert gauss_sqrt(Gauss(-4)) == Gauss(0, 2)
    s = gauss_sqrt(Gauss(3, 4))
    assert s * s == Gauss(3, 4)
    assert gauss_sqrt(Gauss(2)) is None
    assert gauss_sqrt(Gauss(0, 2)) == Gauss(1, 1)


def test_split_sqrt():
    assert split_sqrt(Fraction(1, 4096)) == (Fraction(1, 64), 1)
    c, k = split_sqrt(Fraction(8, 9))
    assert c * c * k == Fraction(8, 9) and k == 2


def test_rationalize_and_parse():
    assert rationalize(0.5 - 0.25j) == Gauss(Fraction(1, 2), Fraction(-1, 4))
    assert rationalize(np.pi, max_den=100) is None
    assert parse_exact("3/6") == Fraction(1, 2)
    assert parse_exact(0.1) == Fraction(1, 10)
    with pytest.raises(ZeroDivisionError):
        parse_exact("1/0")
