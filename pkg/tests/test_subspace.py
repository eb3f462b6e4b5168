from collections import Counter
from itertools import combinations
from pathlib import Path

import pytest

import qsteiner.constants as const
from qsteiner.errors import InvalidSubspace, UnsupportedParameters
from qsteiner.finite_field import ZERO, FieldSpec, build_field, reference_field, read_field_spec
from qsteiner.steiner import read_structure_file
from qsteiner.subspace import (
    Subspace, canonical_form, closure_from_generators, coset_difference_set, difference_set,
    format_subspace, gaussian_binomial, is_complete, is_coset_complete, is_disjoint_complete,
    is_disjoint_coset_complete, map_subspace, orbit, orbit_array, parse_subspace, subspace_from_exponents,
    two_subspace_positions, two_subspaces)

TEST_DATA = Path(__file__).parent / 'test_data'


@pytest.fixture(scope='module')
def reference_reps():
    tables, _, reps, _ = read_structure_file(const.REFERENCE_STRUCTURE_FILE)
    return tables, reps


@pytest.fixture(scope='module')
def gf8():
    return build_field(FieldSpec(p=2, n=3, poly=(1, 1, 0, 1)))


ROW_1 = (0, 1, 1249, 5040, 7258, 7978, 8105)


@pytest.mark.parametrize("n, k, q, expected", [
    (13, 2, 2, 11_180_715),
    (7, 3, 2, 11_811),
    (7, 2, 2, 2_667),
    (3, 3, 2, 1),
    (4, 5, 2, 0),
    (2, 1, 3, 4),
])
def test_gaussian_binomial(n, k, q, expected):
    assert gaussian_binomial(n, k, q) == expected


def test_reference_rows_are_subspaces(reference_reps):
    _, reps = reference_reps
    assert len(reps) == 15
    assert reps[0].elements == ROW_1
    assert all(X.dim == 3 and len(X.elements) == 7 for X in reps)


def test_closure_of_row_1():
    tables = reference_field()
    sum_of_first_two = int(tables.log[1 ^ 2])
    third = next(e for e in ROW_1[2:] if e != sum_of_first_two)
    X = closure_from_generators(tables, [0, 1, third])
    assert X.dim == 3
    assert X.elements == ROW_1


def test_closure_small_cases(gf8):
    assert closure_from_generators(reference_field(), [0]).elements == (0,)
    X = closure_from_generators(gf8, [0, 1])
    assert (X.dim, X.elements) == (2, (0, 1, 3))


def test_closure_reports_rank():
    tables = reference_field()
    X = closure_from_generators(tables, [0, 1, int(tables.log[1 ^ 2])])
    assert X.dim == 2
    assert len(X.elements) == 3


@pytest.mark.parametrize("gens", [[], [0, ZERO]])
def test_closure_rejects(gens):
    with pytest.raises(ValueError):
        closure_from_generators(reference_field(), gens)


def test_subspace_from_exponents_rejects_non_subspace():
    with pytest.raises(InvalidSubspace):
        subspace_from_exponents(reference_field(), [0, 1, 2])


@pytest.mark.parametrize("text", ["0,1,x", ""])
def test_parse_subspace_rejects(text):
    with pytest.raises(InvalidSubspace):
        parse_subspace(reference_field(), text)


def test_parse_and_format(reference_reps):
    tables, reps = reference_reps
    assert parse_subspace(tables, format_subspace(reps[3])) == reps[3]
    assert format_subspace(reps[0]) == '0,1,1249,5040,7258,7978,8105'


def test_map_subspace(reference_reps):
    _, reps = reference_reps
    X = reps[0]
    assert map_subspace(X, 0, 0) == X
    assert map_subspace(X, 0, 1).elements == (1, 2, 1250, 5041, 7259, 7979, 8106)


def test_map_subspace_inverse(reference_reps):
    tables, reps = reference_reps
    n, order = tables.n, tables.order
    for X in reps[:3]:
        for ell, j in [(0, 5), (1, 17), (5, 4000), (12, 8190)]:
            back = (order - j * pow(2, n - ell, order)) % order
            assert map_subspace(map_subspace(X, ell, j), n - ell, back) == X


def test_map_subspace_keeps_subspace(reference_reps):
    tables, reps = reference_reps
    image = map_subspace(reps[6], 4, 321)
    assert subspace_from_exponents(tables, image.elements) == image


def test_difference_sets(reference_reps):
    tables, reps = reference_reps
    X = reps[0]
    assert len(difference_set(X)) == 42
    assert len(coset_difference_set(X)) == 42
    assert difference_set(map_subspace(X, 0, 1234)) == difference_set(X)
    line = closure_from_generators(tables, [0, 1])
    assert len(difference_set(line)) == 6


def test_differences_are_closed_under_negation(reference_reps):
    tables, reps = reference_reps
    residues = difference_set(reps[2]).residues
    assert all((-d) % tables.order in residues for d in residues)


def test_reference_completeness(reference_reps):
    _, reps = reference_reps
    assert is_coset_complete(reps[4])
    assert all(is_complete(X) and is_coset_complete(X) for X in reps)


def test_completeness_by_direct_count():
    X = closure_from_generators(reference_field(), [0, 1, 2])
    assert is_complete(X) == (len(difference_set(X)) == 42)
    assert is_coset_complete(X) == (len(coset_difference_set(X)) == 42)


def test_pairwise_relations(reference_reps):
    _, reps = reference_reps
    assert is_disjoint_coset_complete(reps[0], reps[1])
    assert is_disjoint_complete(reps[0], reps[1])
    shifted = map_subspace(reps[0], 1, 5)
    assert not is_disjoint_coset_complete(reps[0], shifted)
    assert not is_disjoint_complete(reps[0], map_subspace(reps[0], 0, 5))


def test_canonical_form(reference_reps):
    _, reps = reference_reps
    X = reps[7]
    canon = canonical_form(X)
    assert canonical_form(canon) == canon
    assert canon.elements[0] == 0
    assert canonical_form(map_subspace(X, 0, 999)) == canon
    assert canonical_form(map_subspace(X, 3, 17)) == canon
    assert canonical_form(reps[8]) != canon


def test_orbit_sizes(reference_reps):
    _, reps = reference_reps
    for X in reps:
        assert len(orbit_array(X)) == 13 * 8191


def test_shift_suborbit(reference_reps):
    _, reps = reference_reps
    shifts = orbit(reps[0], frobenius=False)
    assert len(shifts) == 8191
    assert reps[0] in shifts


def test_orbit_of_full_space(gf8):
    X = subspace_from_exponents(gf8, range(7))
    assert X.dim == 3
    assert orbit(X) == [X]


def test_two_subspaces(reference_reps):
    tables, reps = reference_reps
    lines = two_subspaces(reps[0])
    assert len(lines) == 7
    for a, b, c in lines:
        assert int(tables.antilog[a]) ^ int(tables.antilog[b]) == int(tables.antilog[c])
    # every pair of elements lies on exactly one line
    pairs = Counter(pair for line in two_subspace_positions(reps[0]) for pair in combinations(line, 2))
    assert len(pairs) == 21
    assert set(pairs.values()) == {1}


def test_two_subspaces_needs_binary_field():
    tables = build_field(read_field_spec(TEST_DATA / 'gf3_2.field'))
    X = Subspace(tables=tables, dim=1, elements=(0, 4))
    with pytest.raises(UnsupportedParameters):
        two_subspace_positions(X)


@pytest.mark.parametrize("exponents", [[0, 1, 8191], [-1, 0, 1], [0, 1, 7258, 16383]])
def test_subspace_from_exponents_rejects_out_of_range(exponents):
    with pytest.raises(InvalidSubspace):
        subspace_from_exponents(reference_field(), exponents)


def test_parse_subspace_rejects_unreduced_exponents():
    # 8191 would reduce to 0 and 15449 to 7258
    with pytest.raises(InvalidSubspace):
        parse_subspace(reference_field(), '8191,1,15449')


def test_shift_only_canonical_form(reference_reps):
    _, reps = reference_reps
    X = reps[7]
    canon = canonical_form(X, frobenius=False)
    assert canon.elements[0] == 0
    assert canonical_form(map_subspace(X, 0, 4321), frobenius=False) == canon
    assert canonical_form(map_subspace(X, 3, 17), frobenius=False) != canon
    assert canonical_form(map_subspace(X, 3, 17)) == canonical_form(X)


def _full_space(n, poly):
    tables = build_field(FieldSpec(p=2, n=n, poly=poly))
    return subspace_from_exponents(tables, range(2 ** n - 1))


@pytest.mark.parametrize("X_of, k", [
    (lambda: subspace_from_exponents(reference_field(), (0, 1, 7258)), 2),
    (lambda: _full_space(3, (1, 1, 0, 1)), 3),
    (lambda: _full_space(4, (1, 1, 0, 0, 1)), 4),
])
def test_two_subspace_count(X_of, k):
    X = X_of()
    assert X.dim == k
    assert len(two_subspaces(X)) == (2 ** k - 1) * (2 ** (k - 1) - 1) // 3


def test_coset_completeness_is_invariant_under_all_maps():
    tables = build_field(read_field_spec(const.DATA_FOLDER / 'gf2_7.field'))
    subspaces = [closure_from_generators(tables, [0, e]) for e in range(1, 12)]
    subspaces.append(closure_from_generators(tables, [0, 1, 2]))
    for X in subspaces:
        expected = is_coset_complete(X)
        assert all(is_coset_complete(map_subspace(X, ell, j)) == expected
                   for ell in range(tables.n) for j in range(tables.order))


def test_reference_coset_completeness_survives_sampled_maps(reference_reps):
    _, reps = reference_reps
    for X in reps[:2]:
        assert all(is_coset_complete(map_subspace(X, ell, j))
                   for ell in range(13) for j in range(0, 8191, 257))
