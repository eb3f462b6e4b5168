import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

import numpy as np

from qsteiner.errors import InvalidSubspace, UnsupportedParameters
from qsteiner.finite_field import (
    Element, FieldTables, ZERO, build_cosets, to_vector, vector_add, vector_scale)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Subspace:
    '''A subspace of F_p^n, kept as the sorted exponents of its nonzero elements'''
    tables: FieldTables = field(repr=False, compare=False)
    dim: int
    elements: tuple[int, ...]

    @property
    def vectors(self) -> list[int]:
        return [int(self.tables.antilog[e]) for e in self.elements]


@dataclass(frozen=True)
class DifferenceSet:
    residues: frozenset[int]

    def __len__(self) -> int:
        return len(self.residues)


@dataclass(frozen=True)
class CosetDifferenceSet:
    reps: frozenset[int]

    def __len__(self) -> int:
        return len(self.reps)


def gaussian_binomial(n: int, k: int, q: int) -> int:
    '''Number of k-dimensional subspaces of F_q^n'''
    if k < 0 or k > n:
        return 0
    num = 1
    den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def span_vectors(tables: FieldTables, vectors: Iterable[int]) -> tuple[set[int], int]:
    '''Span of the vectors (including 0) and its dimension'''
    p, n = tables.p, tables.n
    span = {0}
    dim = 0
    for g in vectors:
        if g in span:
            continue
        dim += 1
        if p == 2:
            span |= {s ^ g for s in span}
        else:
            multiples = [vector_scale(c, g, p, n) for c in range(1, p)]
            span |= {vector_add(s, m, p, n) for s in span for m in multiples}
    return span, dim


def _from_span(tables: FieldTables, span: set[int], dim: int) -> Subspace:
    elements = tuple(sorted(int(tables.log[v]) for v in span if v))
    return Subspace(tables=tables, dim=dim, elements=elements)


def closure_from_generators(tables: FieldTables, gens: list[Element]) -> Subspace:
    '''The span of the generators; `dim` reports the rank, so callers can
       filter rank deficient generator sets.
    '''
    if not gens or any(g is ZERO for g in gens):
        raise ValueError('generators must be a nonempty list of nonzero elements')
    span, dim = span_vectors(tables, [to_vector(tables, g) for g in gens])
    return _from_span(tables, span, dim)


def subspace_from_exponents(tables: FieldTables, exponents: Iterable[int]) -> Subspace:
    '''Validate that the nonzero elements listed form a subspace'''
    listed = set(exponents)
    outside = sorted(e for e in listed if not 0 <= e < tables.order)
    if outside:
        raise InvalidSubspace(f'exponents {format_exponents(outside)} outside 0..{tables.order - 1}')
    if not listed:
        raise InvalidSubspace('a subspace needs at least one nonzero element')
    span, dim = span_vectors(tables, [int(tables.antilog[e]) for e in sorted(listed)])
    if len(span) - 1 != len(listed):
        raise InvalidSubspace(f'{format_exponents(sorted(listed))} is not closed under addition '
                              f'(span has {len(span) - 1} nonzero elements)')
    return _from_span(tables, span, dim)


def format_exponents(exponents: Iterable[int]) -> str:
    return ','.join(str(e) for e in exponents)


def format_subspace(X: Subspace) -> str:
    return format_exponents(X.elements)


def parse_subspace(tables: FieldTables, text: str) -> Subspace:
    try:
        exponents = [int(e) for e in text.replace(' ', '').split(',') if e]
    except ValueError:
        raise InvalidSubspace(f'cannot read exponent list "{text}"')
    return subspace_from_exponents(tables, exponents)


def map_subspace(X: Subspace, ell: int, j: int) -> Subspace:
    '''Phi_j(Upsilon_ell(X)), elementwise i -> i * p^ell + j'''
    order = X.tables.order
    f = pow(X.tables.p, ell, order)
    elements = tuple(sorted((e * f + j) % order for e in X.elements))
    return Subspace(tables=X.tables, dim=X.dim, elements=elements)


def difference_set(X: Subspace) -> DifferenceSet:
    order = X.tables.order
    return DifferenceSet(frozenset((a - b) % order for a in X.elements for b in X.elements if a != b))


def coset_difference_set(X: Subspace) -> CosetDifferenceSet:
    rep = build_cosets(X.tables).representative
    return CosetDifferenceSet(frozenset(int(rep[d]) for d in difference_set(X).residues))


def max_differences(p: int, k: int) -> int:
    '''(p^k - 1)(p^k - 2): ordered pairs of distinct nonzero elements'''
    return (p ** k - 1) * (p ** k - 2)


def is_complete(X: Subspace) -> bool:
    return len(difference_set(X)) == max_differences(X.tables.p, X.dim)


def is_coset_complete(X: Subspace) -> bool:
    return len(coset_difference_set(X)) == max_differences(X.tables.p, X.dim)


def is_disjoint_complete(X: Subspace, Y: Subspace) -> bool:
    return (is_complete(X) and is_complete(Y)
            and not difference_set(X).residues & difference_set(Y).residues)


def is_disjoint_coset_complete(X: Subspace, Y: Subspace) -> bool:
    return (is_coset_complete(X) and is_coset_complete(Y)
            and not coset_difference_set(X).reps & coset_difference_set(Y).reps)


def canonical_exponents(elements: Iterable[int], p: int, n: int, order: int,
                        frobenius: bool = True) -> tuple[int, ...]:
    '''Lexicographically smallest sorted exponent list among the images
       Phi_j(Upsilon_ell(X)) that contain exponent 0. Without frobenius
       only ell = 0 is used.
    '''
    elements = list(elements)
    best = None
    for ell in range(n if frobenius else 1):
        f = pow(p, ell, order)
        image = [(e * f) % order for e in elements]
        for e0 in image:
            cand = sorted((e - e0) % order for e in image)
            if best is None or cand < best:
                best = cand
    return tuple(best)


def canonical_form(X: Subspace, frobenius: bool = True) -> Subspace:
    t = X.tables
    return Subspace(tables=t, dim=X.dim, elements=canonical_exponents(X.elements, t.p, t.n, t.order, frobenius))


def orbit_array(X: Subspace, frobenius: bool = True) -> np.ndarray:
    '''Distinct images of X as rows of sorted exponents'''
    t = X.tables
    shifts = np.arange(t.order, dtype=np.int64)
    images = []
    for ell in range(t.n if frobenius else 1):
        f = pow(t.p, ell, t.order)
        base = np.array([(e * f) % t.order for e in X.elements], dtype=np.int64)
        images.append(np.sort((base[None, :] + shifts[:, None]) % t.order, axis=1))
    rows = np.unique(np.concatenate(images), axis=0)
    log.debug(f'Orbit of {format_subspace(X)}: {len(rows)} subspaces')
    return rows


def orbit(X: Subspace, frobenius: bool = True) -> list[Subspace]:
    return [Subspace(tables=X.tables, dim=X.dim, elements=tuple(row))
            for row in orbit_array(X, frobenius).tolist()]


def two_subspace_positions(X: Subspace) -> list[tuple[int, int, int]]:
    '''Index triples into X.elements, one per 2-dimensional subspace of X'''
    if X.tables.p != 2:
        raise UnsupportedParameters('2-subspace enumeration is implemented for p = 2')
    vectors = X.vectors
    position = {v: i for i, v in enumerate(vectors)}
    lines = set()
    for a, b in combinations(range(len(vectors)), 2):
        c = position[vectors[a] ^ vectors[b]]
        lines.add(tuple(sorted((a, b, c))))
    return sorted(lines)


def two_subspaces(X: Subspace) -> list[tuple[int, int, int]]:
    '''The 2-dimensional subspaces of X, each as a sorted exponent triple'''
    return sorted(tuple(sorted(X.elements[i] for i in line)) for line in two_subspace_positions(X))
