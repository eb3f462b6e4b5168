import random
from pathlib import Path

import numpy as np
import pytest

import qsteiner.constants as const
from qsteiner.errors import FieldTooLarge, InvalidFieldSpec, NonPrimeParameter, NonPrimitivePolynomial
from qsteiner.finite_field import (
    ZERO, FieldSpec, add, build_cosets, build_field, cyclic_shift, format_poly, frobenius, from_vector,
    reference_field, prime_factors, read_field_spec, reciprocal_poly, spec_from_header, split_header, to_vector,
    write_field_spec)

TEST_DATA = Path(__file__).parent / 'test_data'


@pytest.fixture(scope='module')
def gf8():
    return build_field(FieldSpec(p=2, n=3, poly=(1, 1, 0, 1)))


@pytest.fixture(scope='module')
def gf128():
    return build_field(read_field_spec(const.DATA_FOLDER / 'gf2_7.field'))


def test_reference_field_order():
    tables = reference_field()
    assert tables.order == 8191
    assert tables.spec.poly == const.REFERENCE_POLY


def test_reference_field_file_matches_constant():
    assert read_field_spec(const.REFERENCE_FIELD_FILE) == FieldSpec(p=2, n=13, poly=const.REFERENCE_POLY)


def test_gf8_antilog_sequence(gf8):
    # 1, x, x^2, x+1, x^2+x, x^2+x+1, x^2+1
    assert gf8.antilog.tolist() == [1, 2, 4, 3, 6, 7, 5]


def test_log_inverts_antilog():
    tables = reference_field()
    assert (tables.log[tables.antilog] == np.arange(tables.order)).all()
    assert tables.log[0] == -1


def test_gf9_tables():
    tables = build_field(read_field_spec(TEST_DATA / 'gf3_2.field'))
    assert tables.order == 8
    assert tables.antilog.tolist() == [1, 3, 7, 8, 2, 6, 5, 4]


@pytest.mark.parametrize("spec, error", [
    (FieldSpec(p=2, n=3, poly=(1, 1, 1, 1)), NonPrimitivePolynomial),
    (FieldSpec(p=2, n=3, poly=(1, 0, 0, 1)), NonPrimitivePolynomial),
    (FieldSpec(p=3, n=2, poly=(1, 0, 1)), NonPrimitivePolynomial),
    (FieldSpec(p=4, n=3, poly=(1, 1, 0, 1)), NonPrimeParameter),
    (FieldSpec(p=2, n=4, poly=(1, 1, 0, 0, 1)), NonPrimeParameter),
    (FieldSpec(p=2, n=3, poly=(1, 1, 1)), InvalidFieldSpec),
    (FieldSpec(p=2, n=3, poly=(1, 1, 2, 1)), InvalidFieldSpec),
    (FieldSpec(p=2, n=37, poly=(1,) * 38), FieldTooLarge),
])
def test_build_field_rejects(spec, error):
    with pytest.raises(error):
        build_field(spec)


def test_reducible_field_file():
    with pytest.raises(NonPrimitivePolynomial):
        build_field(read_field_spec(TEST_DATA / 'reducible.field'))


def test_missing_key_in_field_file(tmp_path):
    path = tmp_path / 'broken.field'
    path.write_text('p = 2\nn = 3\n')
    with pytest.raises(InvalidFieldSpec):
        read_field_spec(path)


def test_field_file_written_and_read(tmp_path):
    path = tmp_path / 'gf8.field'
    spec = FieldSpec(p=2, n=3, poly=(1, 1, 0, 1))
    write_field_spec(spec, path)
    assert read_field_spec(path) == spec
    assert 'x^3 + x + 1' in path.read_text()


def test_format_poly():
    assert format_poly(const.REFERENCE_POLY) == 'x^13 + x^12 + x^10 + x^9 + 1'
    assert format_poly((2, 1, 1)) == 'x^2 + x + 2'


def test_reference_poly_is_reciprocal_of_the_named_pentanomial():
    assert format_poly(reciprocal_poly(const.REFERENCE_POLY)) == 'x^13 + x^4 + x^3 + x + 1'
    assert reciprocal_poly(reciprocal_poly(const.REFERENCE_POLY)) == const.REFERENCE_POLY


def test_reference_structure_lives_in_the_reference_field():
    header, _ = split_header(const.REFERENCE_STRUCTURE_FILE.read_text().splitlines())
    assert spec_from_header(header) == read_field_spec(const.REFERENCE_FIELD_FILE)


def test_reciprocal_field_inverts_exponents():
    tables = reference_field()
    inverse = build_field(FieldSpec(p=2, n=13, poly=reciprocal_poly(const.REFERENCE_POLY)))
    # 1 + alpha = alpha^7258, so 1 + 1/alpha = alpha^7257 = (1/alpha)^934
    assert add(tables, 0, 1) == 7258
    assert add(inverse, 0, 1) == 934
    assert add(inverse, 0, 1) != add(tables, 0, 1)


def _poly_powers(poly):
    '''Coefficient vectors of x^0 .. x^(2^n - 2) modulo poly over GF(2)'''
    n = len(poly) - 1
    current = [1] + [0] * (n - 1)
    powers = []
    for _ in range(2 ** n - 1):
        powers.append(tuple(current))
        carry = current[-1]
        current = [0] + current[:-1]
        if carry:
            current = [(c + r) % 2 for c, r in zip(current, poly[:n])]
    return powers


def test_gf8_addition_table_matches_polynomial_arithmetic(gf8):
    powers = _poly_powers((1, 1, 0, 1))
    assert len(set(powers)) == 7
    exponent_of = {v: e for e, v in enumerate(powers)}
    for i in range(7):
        for j in range(7):
            total = tuple((a + b) % 2 for a, b in zip(powers[i], powers[j]))
            expected = exponent_of.get(total, ZERO)
            assert add(gf8, i, j) == expected
        assert add(gf8, i, ZERO) == i
    assert add(gf8, ZERO, ZERO) is ZERO


def test_prime_factors():
    assert prime_factors(8190) == [2, 3, 5, 7, 13]
    assert prime_factors(8191) == [8191]


def test_addition(gf8):
    assert add(gf8, 4, ZERO) == 4
    assert add(gf8, ZERO, 4) == 4
    assert add(gf8, 4, 4) is ZERO
    assert add(gf8, 0, 1) == 3


def test_addition_over_gf9():
    tables = build_field(read_field_spec(TEST_DATA / 'gf3_2.field'))
    # 1 + 1 = 2 = alpha^4, and alpha^4 + alpha^0 = 0
    assert add(tables, 0, 0) == 4
    assert add(tables, 4, 0) is ZERO


def test_vector_conversion(gf8):
    assert to_vector(gf8, ZERO) == 0
    assert from_vector(gf8, 0) is ZERO
    assert [from_vector(gf8, to_vector(gf8, e)) for e in range(7)] == list(range(7))


def test_frobenius_examples():
    tables = reference_field()
    assert frobenius(tables, 5000, 1) == 1809
    assert frobenius(tables, 5000, 0) == 5000
    assert frobenius(tables, ZERO, 3) is ZERO


def test_frobenius_is_a_field_automorphism(gf128):
    for x in range(gf128.order):
        for y in range(0, gf128.order, 11):
            image = add(gf128, frobenius(gf128, x, 1), frobenius(gf128, y, 1))
            assert frobenius(gf128, add(gf128, x, y), 1) == image


def test_cyclic_shift_examples():
    tables = reference_field()
    assert cyclic_shift(tables, 0, 8190) == 8190
    assert cyclic_shift(tables, 17, 0) == 17
    assert cyclic_shift(tables, ZERO, 5) is ZERO


def test_inverse_laws():
    tables = reference_field()
    n, order = tables.n, tables.order
    rng = random.Random(2024)
    for _ in range(10_000):
        x = rng.randrange(order)
        ell = rng.randrange(n)
        j = rng.randrange(order)
        assert frobenius(tables, frobenius(tables, x, ell), n - ell) == x
        assert cyclic_shift(tables, cyclic_shift(tables, x, j), order - j) == x


def _commutes(tables, x, ell, j):
    lhs = frobenius(tables, cyclic_shift(tables, x, j), ell)
    rhs = cyclic_shift(tables, frobenius(tables, x, ell), j * pow(tables.p, ell, tables.order))
    return lhs == rhs


def test_commutation_exhaustive_gf128(gf128):
    assert all(_commutes(gf128, x, ell, j)
               for x in range(gf128.order) for ell in range(gf128.n) for j in range(gf128.order))


def test_commutation_sampled_reference_field():
    tables = reference_field()
    rng = random.Random(7)
    for ell in range(tables.n):
        for _ in range(200):
            assert _commutes(tables, rng.randrange(tables.order), ell, rng.randrange(tables.order))


def test_reference_cosets():
    cosets = build_cosets(reference_field())
    assert len(cosets.size_n_representatives()) == 630
    assert cosets.sizes.count(1) == 1
    assert cosets.rho(2) == 1
    assert cosets.rho(8190) == 4095


def test_gf128_cosets(gf128):
    cosets = build_cosets(gf128)
    assert len(cosets.size_n_representatives()) == 18
    assert cosets.cosets[1] == (1, 2, 4, 8, 16, 32, 64)
