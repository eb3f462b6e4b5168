import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import qsteiner.constants as const
from qsteiner.candidates import (
    enumerate_candidates, enumerate_orbit_representatives, export_conflict_graph, export_instance,
    group_table, read_candidate_list, write_candidate_list, write_group_table, write_representatives)
from qsteiner.cover import (
    SearchBudget, SearchMode, SolveOutcome, SolveStatus, read_instance, solve_portfolio, write_solution)
from qsteiner.errors import ConditionViolated, QSteinerError
from qsteiner.finite_field import (
    FieldSpec, FieldTables, build_cosets, build_field, format_poly, parse_poly, read_field_spec,
    reciprocal_poly)
from qsteiner.report import write_report
from qsteiner.steiner import (
    CoverageReport, block_containing, certify, check_orbit_condition, derive_difference_family,
    expand_blocks, load_structure, structure_from_solution, write_difference_family, write_structure)
from qsteiner.subspace import format_exponents

log = logging.getLogger(__name__)

# flag -> (type, default); each can be set with QSTEINER_<FLAG>
ENV_FLAGS = {
    'field': (Path, None),
    'k': (int, const.DEFAULT_K),
    'budget_nodes': (int, None),
    'budget_secs': (float, None),
    'seed': (int, const.DEFAULT_SEED),
    'workers': (int, const.DEFAULT_WORKERS),
    'mem_gib': (float, const.DEFAULT_MEM_GIB),
    'out': (Path, None),
}

STATUS_EXIT = {
    SolveStatus.SOLUTION: const.EXIT_OK,
    SolveStatus.EXHAUSTED: const.EXIT_EXHAUSTED,
    SolveStatus.BUDGET_EXCEEDED: const.EXIT_BUDGET_EXCEEDED,
    SolveStatus.CANCELLED: const.EXIT_BUDGET_EXCEEDED,
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    field: Path | None = None
    p: int | None = None
    poly: str | None = None
    k: int = const.DEFAULT_K
    budget_nodes: int | None = None
    budget_secs: float | None = None
    seed: int = const.DEFAULT_SEED
    workers: int = const.DEFAULT_WORKERS
    mem_gib: float = const.DEFAULT_MEM_GIB
    out: Path | None = None
    xlsx: Path | None = None
    overwrite: bool = False
    mode: SearchMode = SearchMode.FIRST
    max_solutions: int | None = None
    source: Path | None = None
    structure_out: Path | None = None
    points: tuple[int, ...] = ()
    all_orbits: bool = False
    large_k: bool = False
    frobenius: bool = True


def get_parser() -> argparse.ArgumentParser:
    '''Setup a command line parser'''
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '--field',
        type=Path,
        help='Field file with p, n and poly (default = GF(2^13), x^13+x^12+x^10+x^9+1)')
    common.add_argument(
        '--p',
        type=int,
        help='Characteristic for an inline --poly (default = 2)')
    common.add_argument(
        '--poly',
        help='Inline primitive polynomial, comma separated coefficients, constant term first')
    common.add_argument('--k', type=int, help=f'Subspace dimension (default = {const.DEFAULT_K})')
    common.add_argument('--budget-nodes', type=int, help='Search node limit (default = unlimited)')
    common.add_argument('--budget-secs', type=float, help='Search time limit in seconds (default = unlimited)')
    common.add_argument('--seed', type=int, help=f'Search seed (default = {const.DEFAULT_SEED})')
    common.add_argument('--workers', type=int, help=f'Worker processes (default = {const.DEFAULT_WORKERS})')
    common.add_argument('--mem-gib', type=float,
                        help=f'Memory budget of the coverage count (default = {const.DEFAULT_MEM_GIB})')
    common.add_argument('--out', type=Path, help='Output file (folder for repro-s2-3-13)')
    common.add_argument('--xlsx', type=Path, help='Also write an Excel report')
    common.add_argument(
        '--shift-only',
        action='store_true',
        default=False,
        help='Orbits of the cyclic shift alone, complete instead of coset complete subspaces '
             '(default = No; structure files carry their own orbits key)')
    common.add_argument(
        '-o', '--overwrite',
        action='store_true',
        default=False,
        help='Overwrite existing outputs (default = No)')

    parser = argparse.ArgumentParser(
        prog='qsteiner',
        description='''Search for and certify q-Steiner structures S_2[2,k,n] built from
         orbits of the Frobenius and cyclic shift maps, and derive the related
         difference families and Steiner systems S(3, 2^k, 2^n).
         Environment variables QSTEINER_<FLAG> override the defaults.
        ''')
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('field-info', parents=[common], help='Field order, polynomial and coset counts')
    sub.add_parser('groups', parents=[common], help='Group the size-n cyclotomic cosets')

    cand = sub.add_parser('candidates', parents=[common], help='Enumerate coset complete orbit candidates')
    cand.add_argument('--all-orbits', action='store_true', default=False,
                      help='List every k-subspace orbit, coset complete or not')
    cand.add_argument('--large-k', action='store_true', default=False, help='Allow k > 3')

    solve = sub.add_parser('solve', parents=[common], help='Solve an exact cover instance')
    solve.add_argument('instance', type=Path, help='Instance file written by "candidates"')
    solve.add_argument('--mode', choices=[m.value for m in SearchMode], default=SearchMode.FIRST.value,
                       help='first solution, count all or enumerate (default = first)')
    solve.add_argument('--max-solutions', type=int, help='Stop enumerating after this many solutions')
    solve.add_argument('--structure', type=Path,
                       help='Write the structure of the first solution (needs the .reps listing)')

    for name, text in (('verify', 'Certify a structure by exhaustive 2-subspace counting'),
                       ('derive-df', 'Derive the difference family of a structure'),
                       ('expand', 'Count or list all blocks of a structure')):
        cmd = sub.add_parser(name, parents=[common], help=text)
        cmd.add_argument('structure', type=Path, nargs='?', default=const.REFERENCE_STRUCTURE_FILE,
                         help='Structure file (default = the shipped reference structure)')

    query = sub.add_parser('query-block', parents=[common], help='Block of S(3, 2^k, 2^n) through three points')
    query.add_argument('points', type=int, nargs=3, help='Three distinct vectors of F_2^n as integers')
    query.add_argument('--structure', type=Path, default=const.REFERENCE_STRUCTURE_FILE,
                       help='Structure file (default = the shipped reference structure)')

    graph = sub.add_parser('export-graph', parents=[common], help='DIMACS graph of disjoint candidates')
    graph.add_argument('reps', type=Path, help=f'Candidate listing ({const.CANDIDATE_LIST_SUFFIX})')

    sub.add_parser('repro-s2-3-13', parents=[common], help='groups, candidates, solve and verify for GF(2^13)')

    return parser


def _usage_error(message: str):
    log.error(message)
    sys.exit(const.EXIT_USAGE)


def _setting(args, name: str):
    '''Flag, then environment, then default'''
    kind, default = ENV_FLAGS[name]
    value = getattr(args, name, None)
    if value is not None:
        return value
    env_name = f'{const.ENV_PREFIX}{name.upper()}'
    raw = os.environ.get(env_name)
    if raw is None:
        return default
    try:
        return kind(raw)
    except ValueError:
        _usage_error(f'{env_name}={raw} is not a valid {kind.__name__}')


def remove_previous_results(files: list[Path], do_overwrite: bool, which_output: str) -> bool:
    if not files:
        return True

    prev = [Path(p).name for p in files]
    if do_overwrite:
        log.info(f'Removing previous {which_output} results: {prev}')
        for f in files:
            os.remove(f)
        return True

    log.error(f'Output of {which_output} already exists: {prev}\n'
              'Use --overwrite to force removal and recalculation')

    return False


def planned_outputs(config: RunConfig) -> list[Path]:
    if config.command == 'repro-s2-3-13':
        folder = config.out or Path(config.command)
        names = ['instance.txt', 'instance' + const.CANDIDATE_LIST_SUFFIX, 'solution.txt', 'groups.txt',
                 'structure.structure']
        outputs = [folder / name for name in names]
    else:
        outputs = [config.out, config.structure_out]
        if config.command == 'candidates' and config.out is not None:
            outputs.append(config.out.with_suffix(const.CANDIDATE_LIST_SUFFIX))
    outputs.append(config.xlsx)
    return [p for p in outputs if p is not None]


def validate_input(args) -> RunConfig:
    settings = {name: _setting(args, name) for name in ENV_FLAGS}
    if settings['k'] < 2:
        _usage_error(f'--k = {settings["k"]} must be at least 2')
    if settings['workers'] < 1:
        _usage_error(f'--workers = {settings["workers"]} must be at least 1')
    for name in ('budget_nodes', 'budget_secs', 'mem_gib'):
        if settings[name] is not None and settings[name] <= 0:
            _usage_error(f'--{name.replace("_", "-")} must be positive, got {settings[name]}')
    if getattr(args, 'max_solutions', None) is not None and args.max_solutions <= 0:
        _usage_error(f'--max-solutions must be positive, got {args.max_solutions}')
    if settings['field'] is not None and not settings['field'].exists():
        _usage_error(f'--field {settings["field"]} does not exist')
    if args.command == 'export-graph' and settings['out'] is None:
        _usage_error('export-graph needs --out <path>')
    if args.command == 'repro-s2-3-13' and args.shift_only:
        _usage_error('repro-s2-3-13 reproduces the Frobenius and shift structure, drop --shift-only')

    source = getattr(args, 'instance', None) or getattr(args, 'reps', None)
    structure = getattr(args, 'structure', None)
    structure_out = None
    if args.command == 'solve':
        structure_out = structure
    elif structure is not None:
        source = structure
    if source is not None and not source.exists():
        _usage_error(f'{source} does not exist')

    config = RunConfig(
        command=args.command,
        p=args.p,
        poly=args.poly,
        xlsx=args.xlsx,
        overwrite=args.overwrite,
        mode=SearchMode(getattr(args, 'mode', SearchMode.FIRST.value)),
        max_solutions=getattr(args, 'max_solutions', None),
        source=source,
        structure_out=structure_out,
        points=tuple(getattr(args, 'points', None) or ()),
        all_orbits=getattr(args, 'all_orbits', False),
        large_k=getattr(args, 'large_k', False),
        frobenius=not args.shift_only,
        **settings)

    existing = [p for p in planned_outputs(config) if p.exists()]
    if not remove_previous_results(existing, do_overwrite=config.overwrite, which_output=config.command):
        sys.exit(const.EXIT_FAILURE)
    return config


def load_field(config: RunConfig) -> FieldTables:
    if config.poly is not None:
        poly = parse_poly(config.poly)
        spec = FieldSpec(p=config.p or 2, n=len(poly) - 1, poly=poly)
    elif config.field is not None:
        spec = read_field_spec(config.field)
    else:
        spec = read_field_spec(const.REFERENCE_FIELD_FILE)
    return build_field(spec)


def run_field_info(config: RunConfig) -> int:
    tables = load_field(config)
    cosets = build_cosets(tables)
    full = len(cosets.size_n_representatives())
    print(f'GF({tables.p}^{tables.n}), alpha root of {format_poly(tables.spec.poly)}')
    print(f'1/alpha root of {format_poly(reciprocal_poly(tables.spec.poly))}')
    print(f'order {tables.order}, {len(cosets.cosets)} cyclotomic cosets, {full} of size {tables.n}')
    return const.EXIT_OK


def run_groups(config: RunConfig) -> int:
    tables = load_field(config)
    groups = group_table(tables, config.frobenius)
    print(f'{sum(len(g) for g in groups.groups)} {groups.member_kind}, {len(groups)} groups')
    if config.out is not None:
        write_group_table(groups, config.out)
    if config.xlsx is not None:
        write_report(config.xlsx, groups=groups)
    return const.EXIT_OK


def run_candidates(config: RunConfig) -> int:
    tables = load_field(config)
    groups = group_table(tables, config.frobenius)
    if config.all_orbits:
        reps = enumerate_orbit_representatives(tables, groups, config.k, config.workers, config.large_k)
        print(f'{len(reps)} orbits of {config.k}-subspaces')
        if config.out is not None:
            write_representatives(reps, config.out)
        return const.EXIT_OK

    candidates = enumerate_candidates(tables, groups, config.k, config.workers, config.large_k)
    print(f'{len(candidates)} {"coset complete" if config.frobenius else "complete"} candidates')
    if config.out is not None:
        export_instance(candidates, groups, config.out)
        write_candidate_list(candidates, config.out.with_suffix(const.CANDIDATE_LIST_SUFFIX))
    if config.xlsx is not None:
        write_report(config.xlsx, groups=groups, candidates=candidates)
    return const.EXIT_OK


def _budget(config: RunConfig) -> SearchBudget:
    return SearchBudget(node_limit=config.budget_nodes, wall_limit=config.budget_secs, seed=config.seed,
                        mode=config.mode, max_solutions=config.max_solutions)


def _print_outcome(outcome: SolveOutcome) -> None:
    print(f'status: {outcome.status.value}')
    print(f'solutions: {outcome.stats.solutions}')
    for solution in outcome.solutions:
        print(' '.join(str(i) for i in solution.chosen))


def run_solve(config: RunConfig) -> int:
    instance = read_instance(config.source)
    outcome = solve_portfolio(instance, _budget(config), config.workers)
    _print_outcome(outcome)
    if config.out is not None:
        write_solution(outcome, config.out)

    S = None
    if config.structure_out is not None and outcome.solutions:
        listing = config.source.with_suffix(const.CANDIDATE_LIST_SUFFIX)
        if not listing.exists():
            log.error(f'Candidate listing "{listing}" not found, cannot write the structure')
            return const.EXIT_FAILURE
        tables = load_field(config)
        candidates = read_candidate_list(tables, group_table(tables, config.frobenius), listing)
        S = structure_from_solution(tables, config.k, candidates, list(outcome.solutions[0].chosen), outcome.stats,
                                    frobenius=config.frobenius)
        write_structure(S, config.structure_out)
    if config.xlsx is not None:
        write_report(config.xlsx, S=S, outcome=outcome)
    return STATUS_EXIT[outcome.status]


def _print_coverage(report: CoverageReport) -> None:
    print(f'blocks: {report.total_blocks}')
    print(f'2-subspaces: {report.total_two_subspaces}')
    print(f'covered: {report.covered_distinct}')
    print(f'multiply covered: {report.multiply_covered}')
    print(f'uncovered: {report.uncovered}')
    if report.witness is not None:
        print(f'witness: {format_exponents(report.witness)} covered {report.witness_count} times')
    print(f'certified: {"yes" if report.certified else "no"}')


def run_verify(config: RunConfig) -> int:
    S = load_structure(config.source, check=False)
    try:
        check_orbit_condition(S.tables, S.k, S.reps, S.frobenius)
        log.info('Representatives are pairwise disjoint and cover every group')
    except ConditionViolated as e:
        log.warning(f'Orbit condition does not hold: {e}')
    report = certify(S, mem_gib=config.mem_gib, workers=config.workers)
    _print_coverage(report)
    if config.xlsx is not None:
        write_report(config.xlsx, S=S, coverage=report)
    return const.EXIT_OK if report.certified else const.EXIT_FAILURE


def run_derive_df(config: RunConfig) -> int:
    S = load_structure(config.source)
    family = derive_difference_family(S)
    print(f'({family.v}, {family.w}, {family.lam}) difference family, {len(family.base_blocks)} base blocks')
    if config.out is not None:
        write_difference_family(family, config.out)
    if config.xlsx is not None:
        write_report(config.xlsx, S=S, family=family)
    return const.EXIT_OK


def run_query_block(config: RunConfig) -> int:
    S = load_structure(config.source)
    block = block_containing(S, config.points)
    print(' '.join(str(v) for v in block))
    return const.EXIT_OK


def run_expand(config: RunConfig) -> int:
    S = load_structure(config.source, check=False)
    count = 0
    if config.out is not None:
        with open(config.out, 'w', encoding='utf-8') as out:
            for B in expand_blocks(S):
                out.write(format_exponents(B.elements) + '\n')
                count += 1
    else:
        count = sum(1 for _ in expand_blocks(S))
    print(f'{count} blocks')
    return const.EXIT_OK


def run_export_graph(config: RunConfig) -> int:
    tables = load_field(config)
    candidates = read_candidate_list(tables, group_table(tables, config.frobenius), config.source)
    edges = export_conflict_graph(candidates, config.out)
    print(f'{len(candidates)} vertices, {edges} edges')
    return const.EXIT_OK


def run_repro(config: RunConfig) -> int:
    '''groups -> candidates -> solve -> verify over the default GF(2^13)'''
    folder = config.out or Path(config.command)
    folder.mkdir(parents=True, exist_ok=True)
    tables = load_field(RunConfig(command=config.command))
    groups = group_table(tables)
    print(f'{sum(len(g) for g in groups.groups)} cosets, {len(groups)} groups')
    write_group_table(groups, folder / 'groups.txt')

    candidates = enumerate_candidates(tables, groups, const.REFERENCE_K, config.workers)
    print(f'{len(candidates)} coset complete candidates')
    instance_file = folder / 'instance.txt'
    export_instance(candidates, groups, instance_file)
    write_candidate_list(candidates, instance_file.with_suffix(const.CANDIDATE_LIST_SUFFIX))

    outcome = solve_portfolio(read_instance(instance_file), _budget(config), config.workers)
    _print_outcome(outcome)
    write_solution(outcome, folder / 'solution.txt')
    if outcome.status != SolveStatus.SOLUTION:
        return STATUS_EXIT[outcome.status]

    S = structure_from_solution(tables, const.REFERENCE_K, candidates, list(outcome.solutions[0].chosen), outcome.stats)
    write_structure(S, folder / 'structure.structure')
    report = certify(S, mem_gib=config.mem_gib, workers=config.workers)
    _print_coverage(report)
    if config.xlsx is not None:
        write_report(config.xlsx, S=S, coverage=report, outcome=outcome, groups=groups)
    return const.EXIT_OK if report.certified else const.EXIT_FAILURE


HANDLERS = {
    'field-info': run_field_info,
    'groups': run_groups,
    'candidates': run_candidates,
    'solve': run_solve,
    'verify': run_verify,
    'derive-df': run_derive_df,
    'query-block': run_query_block,
    'export-graph': run_export_graph,
    'expand': run_expand,
    'repro-s2-3-13': run_repro,
}


def main(argv: list[str] | None = None) -> int:
    args = get_parser().parse_args(argv)
    config = validate_input(args)
    log.info(f'Running {config.command} (seed {config.seed}, workers {config.workers})')

    try:
        return HANDLERS[config.command](config)
    except (QSteinerError, ValueError) as e:
        log.error(f'{type(e).__name__}: {e}')
        return const.EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
