import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, repeat
from pathlib import Path
from typing import Callable, Iterator

import numpy as np
from scipy import sparse

from qsteiner.errors import (
    DegenerateGroup, GroupCollision, NotComplete, NotCosetComplete, UnsupportedParameters)
from qsteiner.finite_field import CosetTable, FieldTables, build_cosets, split_header
from qsteiner.subspace import (
    Subspace, canonical_exponents, format_exponents, is_complete, is_coset_complete, subspace_from_exponents)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CosetGroupTable:
    '''Partition of the size-n cyclotomic cosets into groups of six.
       `bases[g]` is a 2-subspace {0, 1, alpha^a, alpha^b} as (0, a, b) whose
       differences fall in group g; `residue_group[d]` is the group of rho(d),
       -1 for residues outside the size-n cosets.

       Without frobenius the groups partition the nonzero residues themselves
       and `residue_group[d]` is the group of d.
    '''
    groups: tuple[tuple[int, ...], ...]
    group_of: dict[int, int]
    bases: tuple[tuple[int, int, int], ...]
    residue_group: tuple[int, ...]
    frobenius: bool = True

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def member_kind(self) -> str:
        return 'cosets' if self.frobenius else 'residues'


@dataclass(frozen=True)
class CandidateOrbit:
    rep: Subspace
    signature: tuple[int, ...]


def expected_group_count(n: int, frobenius: bool = True) -> int:
    return (2 ** n - 2) // (6 * n if frobenius else 6)


def signature_size(k: int) -> int:
    '''Number of 2-subspaces in a k-subspace over F_2'''
    return (2 ** k - 1) * (2 ** (k - 1) - 1) // 3


def build_groups(tables: FieldTables, cosets: CosetTable, frobenius: bool = True) -> CosetGroupTable:
    '''Each 2-subspace {0, 1, alpha^a, alpha^b} with 1 + alpha^a + alpha^b = 0
       puts rho(+-a), rho(+-b), rho(+-(a-b)) into one group. Without frobenius
       rho is the identity, so a group is the six differences of one shift orbit
       of 2-subspaces.
    '''
    if tables.p != 2:
        raise UnsupportedParameters(f'coset grouping is implemented for p = 2, not p = {tables.p}')

    order = tables.order
    rep = cosets.representative if frobenius else np.arange(order)
    members = cosets.size_n_representatives() if frobenius else range(1, order)
    kind = 'cosets' if frobenius else 'residues'
    antilog = tables.antilog.tolist()
    logs = tables.log.tolist()

    owner: dict[int, frozenset] = {}
    found: dict[frozenset, tuple[int, int, int]] = {}
    for a in range(1, order):
        b = logs[1 ^ antilog[a]]
        if b < a:
            continue
        six = frozenset(int(rep[d % order]) for d in (a, -a, b, -b, a - b, b - a))
        if six in found:
            continue
        if len(six) < 6:
            raise DegenerateGroup(f'2-subspace {{0, 0, {a}, {b}}} gives only {len(six)} distinct {kind}')
        clash = sorted(r for r in six if r in owner)
        if clash:
            raise GroupCollision(f'2-subspace {{0, 0, {a}, {b}}} overlaps an earlier group in {kind} {clash}')
        for r in six:
            owner[r] = six
        found[six] = (0, a, b)

    uncovered = set(members).difference(owner)
    if uncovered:
        raise DegenerateGroup(f'{len(uncovered)} {kind} belong to no group')

    ordered = sorted(found, key=min)
    groups = tuple(tuple(sorted(s)) for s in ordered)
    group_of = {r: gi for gi, six in enumerate(groups) for r in six}
    residue_group = tuple(group_of.get(r, -1) for r in rep.tolist())
    log.info(f'{len(owner)} {kind}, {len(groups)} groups')

    return CosetGroupTable(groups=groups, group_of=group_of,
                           bases=tuple(found[s] for s in ordered),
                           residue_group=residue_group, frobenius=frobenius)


@lru_cache(maxsize=8)
def group_table(tables: FieldTables, frobenius: bool = True) -> CosetGroupTable:
    return build_groups(tables, build_cosets(tables), frobenius)


def signature(X: Subspace, groups: CosetGroupTable) -> tuple[int, ...]:
    '''Group indices covering rho(Delta(X)), or Delta(X) without frobenius'''
    if groups.frobenius and not is_coset_complete(X):
        raise NotCosetComplete(f'{format_exponents(X.elements)} is not coset complete')
    if not groups.frobenius and not is_complete(X):
        raise NotComplete(f'{format_exponents(X.elements)} is not complete')
    order = X.tables.order
    return tuple(sorted({groups.residue_group[(b - a) % order] for a, b in combinations(X.elements, 2)}))


def _extensions(span: list[int], levels: int, n: int,
                accept: Callable[[list[int]], bool]) -> Iterator[list[int]]:
    '''All subspaces `levels` dimensions larger than span (vectors including 0)'''
    if levels == 0:
        yield span
        return
    members = set(span)
    for v in range(1, 1 << n):
        if v in members:
            continue
        # one v per coset v + span
        if any((v ^ s) < v for s in span):
            continue
        extended = span + [v ^ s for s in span]
        if accept(extended):
            yield from _extensions(extended, levels - 1, n, accept)


def _orbits_from_bases(tables: FieldTables, groups: CosetGroupTable, base_indices: list[int],
                       k: int, complete_only: bool) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    antilog = tables.antilog.tolist()
    logs = tables.log.tolist()
    residue_group = groups.residue_group
    n, order = tables.n, tables.order

    def pair_groups_ok(span: list[int]) -> bool:
        # a 2-subspace contributes 3 unordered pairs, all in its own group
        counts: dict[int, int] = {}
        exps = [logs[v] for v in span if v]
        for a, b in combinations(exps, 2):
            g = residue_group[(b - a) % order]
            counts[g] = counts.get(g, 0) + 1
            if counts[g] > 3:
                return False
        return True

    accept = pair_groups_ok if complete_only else (lambda span: True)
    found: dict[tuple[int, ...], tuple[int, ...]] = {}
    for gi in base_indices:
        base = [0] + [antilog[e] for e in groups.bases[gi]]
        for span in _extensions(base, k - 2, n, accept):
            exps = [logs[v] for v in span if v]
            sig = tuple(sorted({residue_group[(b - a) % order] for a, b in combinations(exps, 2)}))
            # a candidate orbit meets every base of its signature; keep the smallest
            if complete_only and sig[0] != gi:
                continue
            canon = canonical_exponents(exps, 2, n, order, groups.frobenius)
            found.setdefault(canon, sig)
    return list(found.items())


def _enumerate(tables: FieldTables, groups: CosetGroupTable, k: int, workers: int,
               allow_large_k: bool, complete_only: bool) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    if tables.p != 2:
        raise UnsupportedParameters(f'candidate enumeration is implemented for p = 2, not p = {tables.p}')
    if k < 2 or k > tables.n:
        raise UnsupportedParameters(f'k = {k} must lie in [2, {tables.n}]')
    if k > 3 and not allow_large_k:
        raise UnsupportedParameters(f'k = {k} > 3 is expensive; enable it explicitly')

    start = time.perf_counter()
    chunks = [list(range(w, len(groups), workers)) for w in range(max(workers, 1))]
    merged: dict[tuple[int, ...], tuple[int, ...]] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = executor.map(_orbits_from_bases, repeat(tables), repeat(groups), chunks,
                                   repeat(k), repeat(complete_only))
            for partial in results:
                merged.update(partial)
    else:
        for chunk in chunks:
            merged.update(_orbits_from_bases(tables, groups, chunk, k, complete_only))
    orbits = 'Frobenius and shift' if groups.frobenius else 'shift'
    log.info(f'Enumerated {len(merged)} {orbits} orbits of {k}-subspaces '
             f'(candidates only: {complete_only}) in {time.perf_counter() - start:.1f}s')

    return sorted(merged.items())


def enumerate_candidates(tables: FieldTables, groups: CosetGroupTable, k: int,
                         workers: int = 1, allow_large_k: bool = False) -> list[CandidateOrbit]:
    '''One canonical representative per coset complete k-subspace orbit,
       sorted by representative; the list index is the candidate id. With
       shift-only groups the orbits are shift orbits of complete subspaces.
    '''
    found = _enumerate(tables, groups, k, workers, allow_large_k, complete_only=True)
    return [CandidateOrbit(rep=Subspace(tables=tables, dim=k, elements=canon), signature=sig)
            for canon, sig in found]


def enumerate_orbit_representatives(tables: FieldTables, groups: CosetGroupTable, k: int,
                                    workers: int = 1, allow_large_k: bool = False) -> list[Subspace]:
    '''Canonical representatives of all k-subspace orbits'''
    found = _enumerate(tables, groups, k, workers, allow_large_k, complete_only=False)
    return [Subspace(tables=tables, dim=k, elements=canon) for canon, _ in found]


def export_instance(candidates: list[CandidateOrbit], groups: CosetGroupTable, path: Path) -> None:
    lines = [f'universe {len(groups)}']
    lines += [f'{i} {" ".join(str(g) for g in c.signature)}' for i, c in enumerate(candidates)]
    Path(path).write_text('\n'.join(lines) + '\n', encoding='utf-8')
    log.info(f'Wrote exact cover instance with {len(candidates)} sets to "{path}"')


def write_representatives(reps: list[Subspace], path: Path) -> None:
    lines = [f'{i} {format_exponents(X.elements)}' for i, X in enumerate(reps)]
    Path(path).write_text(''.join(line + '\n' for line in lines), encoding='utf-8')


def write_candidate_list(candidates: list[CandidateOrbit], path: Path) -> None:
    write_representatives([c.rep for c in candidates], path)


def read_candidate_list(tables: FieldTables, groups: CosetGroupTable, path: Path) -> list[CandidateOrbit]:
    _, body = split_header(Path(path).read_text(encoding='utf-8').splitlines())
    candidates = []
    for line in body:
        _, exps = line.split(maxsplit=1)
        rep = subspace_from_exponents(tables, (int(e) for e in exps.split(',')))
        candidates.append(CandidateOrbit(rep=rep, signature=signature(rep, groups)))
    return candidates


def write_group_table(groups: CosetGroupTable, path: Path) -> None:
    members = sum(len(g) for g in groups.groups)
    lines = [f'# groups {len(groups)} {groups.member_kind} {members}']
    lines += [f'{gi} {" ".join(str(r) for r in six)}' for gi, six in enumerate(groups.groups)]
    Path(path).write_text('\n'.join(lines) + '\n', encoding='utf-8')


def read_group_table(path: Path) -> list[tuple[int, ...]]:
    _, body = split_header(Path(path).read_text(encoding='utf-8').splitlines())
    return [tuple(int(r) for r in line.split()[1:]) for line in body]


def incidence_matrix(candidates: list[CandidateOrbit], universe: int) -> sparse.csr_matrix:
    rows = np.repeat(np.arange(len(candidates)), [len(c.signature) for c in candidates])
    cols = np.array([g for c in candidates for g in c.signature], dtype=np.int64)
    return sparse.csr_matrix((np.ones(len(cols), dtype=np.int32), (rows, cols)),
                             shape=(len(candidates), universe))


def _disjoint_pairs(incidence: sparse.csr_matrix, chunk: int) -> Iterator[tuple[int, np.ndarray]]:
    '''For every vertex u, the vertices v > u whose signatures miss u's'''
    transposed = incidence.T.tocsr()
    total = incidence.shape[0]
    for start in range(0, total, chunk):
        overlap = (incidence[start:start + chunk] @ transposed).toarray()
        for offset, row in enumerate(overlap):
            u = start + offset
            yield u, np.flatnonzero(row[u + 1:] == 0) + u + 1


def export_conflict_graph(candidates: list[CandidateOrbit], path: Path, chunk: int = 512) -> int:
    '''DIMACS edge list: vertices are candidates (1-based, id order), edges join
       candidates with disjoint signatures. Returns the edge count.
    '''
    universe = 1 + max((g for c in candidates for g in c.signature), default=-1)
    incidence = incidence_matrix(candidates, universe)
    edges = sum(len(vs) for _, vs in _disjoint_pairs(incidence, chunk))
    with open(path, 'w', encoding='utf-8') as out:
        out.write(f'p edge {len(candidates)} {edges}\n')
        for u, vs in _disjoint_pairs(incidence, chunk):
            out.writelines(f'e {u + 1} {v + 1}\n' for v in vs.tolist())
    log.info(f'Wrote conflict graph with {len(candidates)} vertices and {edges} edges to "{path}"')
    return edges
