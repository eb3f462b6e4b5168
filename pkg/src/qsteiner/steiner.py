import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import repeat
from pathlib import Path
from typing import Iterator

import numpy as np

import qsteiner.constants as const
from qsteiner.candidates import CandidateOrbit, group_table, signature
from qsteiner.cover import SearchStats
from qsteiner.errors import (
    ConditionViolated, InvalidFieldSpec, MemoryBudgetExceeded, PointsNotDistinct,
    UnsupportedParameters, ValidationFailed)
from qsteiner.finite_field import (
    FieldTables, build_field, format_spec_header, spec_from_header, split_header)
from qsteiner.subspace import (
    Subspace, format_subspace, gaussian_binomial, is_complete, is_coset_complete,
    orbit_array, parse_subspace, two_subspaces)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SteinerStructure:
    '''Orbit representatives; blocks are their images under the Frobenius map
       and the cyclic shift, or under the shift alone when frobenius is False.
    '''
    tables: FieldTables
    k: int
    reps: tuple[Subspace, ...]
    provenance: dict = field(default_factory=dict)
    frobenius: bool = True


@dataclass(frozen=True)
class CoverageReport:
    total_blocks: int
    total_two_subspaces: int
    covered_distinct: int
    multiply_covered: int
    uncovered: int
    witness: tuple[int, int, int] | None
    witness_count: int | None
    passes: int

    @property
    def violations(self) -> int:
        return self.multiply_covered + self.uncovered

    @property
    def certified(self) -> bool:
        return self.violations == 0


@dataclass(frozen=True)
class DifferenceFamily:
    v: int
    w: int
    lam: int
    base_blocks: tuple[tuple[int, ...], ...]


def expected_rep_count(n: int, k: int, frobenius: bool = True) -> int:
    '''Orbit representatives needed for an S_2[2,k,n]; with frobenius=False
       the count for the shift-only (cyclic) construction.
    '''
    count = (2 ** n - 2) // ((2 ** k - 1) * (2 ** k - 2))
    return count // n if frobenius else count


def check_orbit_condition(tables: FieldTables, k: int, reps: tuple[Subspace, ...], frobenius: bool = True) -> None:
    '''Coset complete (complete when shift-only), pairwise disjoint signatures
       covering every group once
    '''
    groups = group_table(tables, frobenius)
    complete, kind = (is_coset_complete, 'coset complete') if frobenius else (is_complete, 'complete')
    owner: dict[int, int] = {}
    for i, X in enumerate(reps):
        if X.dim != k:
            raise ConditionViolated(f'representative {i} has dimension {X.dim}, expected {k}')
        if not complete(X):
            raise ConditionViolated(f'representative {i} ({format_subspace(X)}) is not {kind}')
        for g in signature(X, groups):
            if g in owner:
                raise ConditionViolated(f'representatives {owner[g]} and {i} share group {g}', pair=(owner[g], i))
            owner[g] = i

    uncovered = tuple(g for g in range(len(groups)) if g not in owner)
    if uncovered:
        raise ConditionViolated(f'{len(uncovered)} groups uncovered, first {uncovered[0]}', uncovered=uncovered)
    expected = expected_rep_count(tables.n, k, frobenius)
    if len(reps) != expected:
        raise ConditionViolated(f'{len(reps)} representatives, expected {expected}')


def assemble(tables: FieldTables, reps: list[Subspace], k: int | None = None,
             provenance: dict | None = None, check: bool = True, frobenius: bool = True) -> SteinerStructure:
    if tables.p != 2:
        raise UnsupportedParameters(f'Steiner structures are assembled for p = 2, not p = {tables.p}')
    reps = tuple(reps)
    if k is None:
        if not reps:
            raise ConditionViolated('no representatives and no dimension given')
        k = reps[0].dim
    if check:
        check_orbit_condition(tables, k, reps, frobenius)
    provenance = dict(provenance or {})
    log.info(f'Assembled {orbit_kind(frobenius)} structure with {len(reps)} representatives of dimension {k}'
             f' ({"checked" if check else "unchecked"}), source: {provenance.get("source", "unknown")}')
    return SteinerStructure(tables=tables, k=k, reps=reps, provenance=provenance, frobenius=frobenius)


def structure_from_solution(tables: FieldTables, k: int, candidates: list[CandidateOrbit],
                            chosen: list[int], stats: SearchStats | None = None,
                            frobenius: bool = True) -> SteinerStructure:
    provenance = {'source': 'exact cover search', 'candidates': len(candidates)}
    if stats is not None:
        provenance.update(nodes=stats.nodes, max_depth=stats.max_depth, seconds=round(stats.seconds, 3))
    return assemble(tables, [candidates[i].rep for i in chosen], k=k, provenance=provenance, frobenius=frobenius)


def orbit_kind(frobenius: bool) -> str:
    return const.ORBITS_FROBENIUS_SHIFT if frobenius else const.ORBITS_SHIFT


def block_array(S: SteinerStructure) -> np.ndarray:
    '''The blocks of every listed representative as rows of sorted exponents.
       A representative listed twice, or two of the same orbit, repeat their blocks.
    '''
    orbits = [orbit_array(X, S.frobenius) for X in S.reps]
    if not orbits:
        return np.empty((0, 2 ** S.k - 1), dtype=np.int64)
    return np.concatenate(orbits)


def expand_blocks(S: SteinerStructure) -> Iterator[Subspace]:
    for X in S.reps:
        for row in orbit_array(X, S.frobenius).tolist():
            yield Subspace(tables=S.tables, dim=S.k, elements=tuple(row))


def block_count(S: SteinerStructure) -> int:
    return sum(len(orbit_array(X, S.frobenius)) for X in S.reps)


def _two_subspace_keys(tables: FieldTables, blocks: np.ndarray, lo: int, hi: int) -> np.ndarray:
    '''One key e1 * order + e2 per 2-subspace of every block, e1 < e2 < e3 its
       sorted exponents; only keys with lo <= e1 < hi.
    '''
    order = tables.order
    vectors = tables.antilog[blocks]
    width = blocks.shape[1]
    keys = []
    for a in range(width):
        for b in range(a + 1, width):
            third = tables.log[vectors[:, a] ^ vectors[:, b]]
            # rows are sorted, so (a, b) are the two smallest of the triple when third > e_b
            mask = (third > blocks[:, b]) & (blocks[:, a] >= lo) & (blocks[:, a] < hi)
            keys.append(blocks[mask, a] * order + blocks[mask, b])
    return np.concatenate(keys) if keys else np.empty(0, dtype=np.int64)


def _count_bucket(tables: FieldTables, blocks: np.ndarray | None, rep_elements: list[tuple[int, ...]],
                  k: int, frobenius: bool, lo: int, hi: int) -> tuple[int, int, int | None, int | None, np.ndarray]:
    if blocks is None:
        reps = tuple(Subspace(tables=tables, dim=k, elements=e) for e in rep_elements)
        blocks = block_array(SteinerStructure(tables=tables, k=k, reps=reps, frobenius=frobenius))
    keys, counts = np.unique(_two_subspace_keys(tables, blocks, lo, hi), return_counts=True)
    repeated = np.flatnonzero(counts > 1)
    first_key = int(keys[repeated[0]]) if len(repeated) else None
    first_count = int(counts[repeated[0]]) if len(repeated) else None
    # 2-subspaces through alpha^0 have key 0 * order + a = a
    through_one = keys[keys < tables.order] if lo == 0 else np.empty(0, dtype=np.int64)
    return len(keys), len(repeated), first_key, first_count, through_one


def _key_triple(tables: FieldTables, key: int) -> tuple[int, int, int]:
    e1, e2 = divmod(key, tables.order)
    e3 = int(tables.log[int(tables.antilog[e1]) ^ int(tables.antilog[e2])])
    return tuple(sorted((e1, e2, e3)))


def certify(S: SteinerStructure, mem_gib: float = const.DEFAULT_MEM_GIB, workers: int = 1) -> CoverageReport:
    '''Count, over all blocks, how often each 2-subspace is covered'''
    t = S.tables
    if t.p != 2:
        raise UnsupportedParameters('certification is implemented for p = 2')
    start = time.perf_counter()

    blocks = block_array(S)
    lines = (2 ** S.k - 1) * (2 ** (S.k - 1) - 1) // 3
    total_two = gaussian_binomial(t.n, 2, 2)
    budget = mem_gib * 2 ** 30
    # keys, sorted copy, counts and per-pair temporaries
    key_bytes = len(blocks) * lines * 8 * 4
    if budget <= blocks.nbytes * 3:
        raise MemoryBudgetExceeded(f'{mem_gib} GiB cannot hold the {len(blocks)} blocks')
    passes = max(math.ceil(key_bytes / (budget - blocks.nbytes * 3)), workers, 1)
    if passes > t.order:
        raise MemoryBudgetExceeded(f'{mem_gib} GiB needs {passes} passes, more than {t.order}')
    bounds = np.linspace(0, t.order, passes + 1).astype(np.int64).tolist()
    log.info(f'Certifying {len(blocks)} blocks against {total_two} 2-subspaces in {passes} pass(es)')

    if workers > 1:
        rep_elements = [X.elements for X in S.reps]
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_count_bucket, repeat(t), repeat(None), repeat(rep_elements),
                                        repeat(S.k), repeat(S.frobenius), bounds[:-1], bounds[1:]))
    else:
        results = [_count_bucket(t, blocks, [], S.k, S.frobenius, lo, hi)
                   for lo, hi in zip(bounds[:-1], bounds[1:])]

    covered = sum(r[0] for r in results)
    multiply = sum(r[1] for r in results)
    uncovered = total_two - covered
    witness = witness_count = None
    dup = next((r for r in results if r[2] is not None), None)
    if dup is not None:
        witness, witness_count = _key_triple(t, dup[2]), dup[3]
    elif uncovered:
        # blocks are closed under shifts, so some 2-subspace through alpha^0 is uncovered too
        through_one = set(results[0][4].tolist())
        a = next(a for a in range(1, t.order) if a < int(t.log[1 ^ int(t.antilog[a])]) and a not in through_one)
        witness, witness_count = _key_triple(t, a), 0

    report = CoverageReport(total_blocks=len(blocks), total_two_subspaces=total_two, covered_distinct=covered,
                            multiply_covered=multiply, uncovered=uncovered, witness=witness,
                            witness_count=witness_count, passes=passes)
    log.info(f'Coverage: {report.violations} violation(s), certified {report.certified}, '
             f'{time.perf_counter() - start:.1f}s')
    return report


def difference_counts(v: int, blocks: tuple[tuple[int, ...], ...]) -> np.ndarray:
    '''How often each residue of Z_v occurs as a difference of distinct members of a block'''
    counts = np.zeros(v, dtype=np.int64)
    for block in blocks:
        b = np.array(block, dtype=np.int64)
        diffs = (b[:, None] - b[None, :]) % v
        counts += np.bincount(diffs[~np.eye(len(b), dtype=bool)], minlength=v)
    return counts


def validate_difference_family(family: DifferenceFamily) -> None:
    counts = difference_counts(family.v, family.base_blocks)
    wrong = np.flatnonzero(counts[1:] != family.lam) + 1
    if len(wrong):
        d = int(wrong[0])
        raise ValidationFailed(f'residue {d} occurs {counts[d]} times, expected {family.lam} '
                               f'({len(wrong)} residues wrong)')
    if any(len(b) != family.w for b in family.base_blocks):
        raise ValidationFailed(f'base blocks must have {family.w} elements')


def derive_difference_family(S: SteinerStructure) -> DifferenceFamily:
    '''The n Frobenius images of every representative are the base blocks of a
       (2^n - 1, 2^k - 1, 1) difference family over Z_{2^n - 1}. A shift-only
       structure already lists one base block per representative.
    '''
    t = S.tables
    blocks = []
    for X in S.reps:
        for ell in range(t.n if S.frobenius else 1):
            f = pow(2, ell, t.order)
            blocks.append(tuple(sorted((e * f) % t.order for e in X.elements)))
    family = DifferenceFamily(v=t.order, w=2 ** S.k - 1, lam=1, base_blocks=tuple(blocks))
    validate_difference_family(family)
    log.info(f'Derived ({family.v}, {family.w}, {family.lam}) difference family with {len(blocks)} base blocks')
    return family


@lru_cache(maxsize=8)
def block_index(S: SteinerStructure) -> dict[int, list[tuple[int, tuple[int, int, int]]]]:
    '''Group index -> (representative index, 2-subspace of that representative in the group)'''
    groups = group_table(S.tables, S.frobenius)
    order = S.tables.order
    index: dict[int, list[tuple[int, tuple[int, int, int]]]] = {}
    for i, X in enumerate(S.reps):
        for line in two_subspaces(X):
            g = groups.residue_group[(line[1] - line[0]) % order]
            index.setdefault(g, []).append((i, line))
    return index


def _locate(local: tuple[int, int, int], target: list[int], n: int, order: int,
            frobenius: bool = True) -> tuple[int, int] | None:
    '''(ell, j) with Phi_j(Upsilon_ell(local)) = target'''
    for ell in range(n if frobenius else 1):
        f = pow(2, ell, order)
        image = [(e * f) % order for e in local]
        for m in image:
            j = (target[0] - m) % order
            if sorted((e + j) % order for e in image) == target:
                return ell, j
    return None


def block_containing(S: SteinerStructure, points: tuple[int, int, int]) -> tuple[int, ...]:
    '''The block x + B of the derived S(3, 2^k, 2^n) through three distinct
       points of F_2^n, B the structure subspace containing {0, y+x, z+x, y+z}.
    '''
    t = S.tables
    x, y, z = points
    if len({x, y, z}) != 3:
        raise PointsNotDistinct(f'points {points} are not distinct')
    if any(pt < 0 or pt >= 1 << t.n for pt in points):
        raise ValueError(f'points must be vectors of F_2^{t.n}')

    u, w = y ^ x, z ^ x
    target = sorted(int(t.log[v]) for v in (u, w, u ^ w))
    g = group_table(t, S.frobenius).residue_group[(target[1] - target[0]) % t.order]
    for i, local in block_index(S).get(g, []):
        located = _locate(local, target, t.n, t.order, S.frobenius)
        if located is None:
            continue
        ell, j = located
        f = pow(2, ell, t.order)
        block = [int(t.antilog[(e * f + j) % t.order]) for e in S.reps[i].elements]
        return tuple(sorted([x] + [x ^ v for v in block]))
    raise ConditionViolated(f'no block of the structure contains the points {points}')


def read_structure_file(path: Path) -> tuple[FieldTables, int, list[Subspace], dict[str, str]]:
    header, body = split_header(Path(path).read_text(encoding='utf-8').splitlines())
    tables = build_field(spec_from_header(header))
    if 'k' not in header:
        raise InvalidFieldSpec(f'"{path}" has no k = <dimension> line')
    reps = [parse_subspace(tables, line) for line in body]
    return tables, int(header['k']), reps, header


def structure_frobenius(header: dict[str, str], path: Path) -> bool:
    '''The `orbits` key of a structure file; Frobenius and shift when absent'''
    orbits = header.get('orbits', const.ORBITS_FROBENIUS_SHIFT)
    if orbits not in (const.ORBITS_FROBENIUS_SHIFT, const.ORBITS_SHIFT):
        raise InvalidFieldSpec(f'"{path}": orbits = {orbits}, expected {const.ORBITS_FROBENIUS_SHIFT} '
                               f'or {const.ORBITS_SHIFT}')
    return orbits == const.ORBITS_FROBENIUS_SHIFT


def load_structure(path: Path, check: bool = True) -> SteinerStructure:
    tables, k, reps, header = read_structure_file(path)
    return assemble(tables, reps, k=k, provenance={'source': header.get('source', str(path))}, check=check,
                    frobenius=structure_frobenius(header, path))


def write_structure(S: SteinerStructure, path: Path) -> None:
    lines = [f'# {len(S.reps)} orbit representatives of {S.k}-subspaces']
    lines += format_spec_header(S.tables.spec)
    lines.append(f'k = {S.k}')
    if not S.frobenius:
        lines.append(f'orbits = {const.ORBITS_SHIFT}')
    if 'source' in S.provenance:
        lines.append(f'source = {S.provenance["source"]}')
    lines += [format_subspace(X) for X in S.reps]
    Path(path).write_text('\n'.join(lines) + '\n', encoding='utf-8')


def write_difference_family(family: DifferenceFamily, path: Path) -> None:
    lines = [f'v = {family.v}', f'w = {family.w}', f'lambda = {family.lam}']
    lines += [','.join(str(e) for e in block) for block in family.base_blocks]
    Path(path).write_text('\n'.join(lines) + '\n', encoding='utf-8')


def read_difference_family(path: Path) -> DifferenceFamily:
    header, body = split_header(Path(path).read_text(encoding='utf-8').splitlines())
    blocks = tuple(tuple(int(e) for e in line.split(',')) for line in body)
    return DifferenceFamily(v=int(header['v']), w=int(header['w']), lam=int(header['lambda']), base_blocks=blocks)
