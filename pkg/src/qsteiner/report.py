import logging
from pathlib import Path

import pandas as pd
from openpyxl import load_workbook
from openpyxl.styles import PatternFill

import qsteiner.constants as const
from qsteiner.candidates import CandidateOrbit, CosetGroupTable, group_table, signature
from qsteiner.cover import SolveOutcome
from qsteiner.steiner import CoverageReport, DifferenceFamily, SteinerStructure, difference_counts
from qsteiner.subspace import format_exponents

log = logging.getLogger(__name__)

STATUS_COLUMN = 'status'


def groups_frame(groups: CosetGroupTable) -> pd.DataFrame:
    return pd.DataFrame({
        'group': range(len(groups)),
        groups.member_kind: [' '.join(str(r) for r in six) for six in groups.groups],
        'base': [format_exponents(b) for b in groups.bases],
    })


def candidates_frame(candidates: list[CandidateOrbit]) -> pd.DataFrame:
    return pd.DataFrame({
        'id': range(len(candidates)),
        'representative': [format_exponents(c.rep.elements) for c in candidates],
        'signature': [' '.join(str(g) for g in c.signature) for c in candidates],
    })


def structure_frame(S: SteinerStructure) -> pd.DataFrame:
    '''One row per representative with the groups its differences cover'''
    groups = group_table(S.tables, S.frobenius)
    return pd.DataFrame({
        'representative': [format_exponents(X.elements) for X in S.reps],
        'signature': [' '.join(str(g) for g in signature(X, groups)) for X in S.reps],
    })


def coverage_frame(report: CoverageReport) -> pd.DataFrame:
    row = {
        'blocks': report.total_blocks,
        '2-subspaces': report.total_two_subspaces,
        'covered': report.covered_distinct,
        'multiply covered': report.multiply_covered,
        'uncovered': report.uncovered,
        'witness': '' if report.witness is None else format_exponents(report.witness),
        'witness count': report.witness_count,
        'passes': report.passes,
        STATUS_COLUMN: 'certified' if report.certified else 'not certified',
    }
    return pd.DataFrame([row])


def difference_family_frame(family: DifferenceFamily) -> pd.DataFrame:
    counts = difference_counts(family.v, family.base_blocks)
    return pd.DataFrame([{
        'v': family.v,
        'w': family.w,
        'lambda': family.lam,
        'base blocks': len(family.base_blocks),
        'differences': int(counts.sum()),
        'min count': int(counts[1:].min()),
        'max count': int(counts[1:].max()),
    }])


def solver_frame(outcome: SolveOutcome) -> pd.DataFrame:
    '''Aggregate statistics first, then one row per portfolio worker'''
    rows = [{'worker': 'all', 'status': outcome.status.value, 'seed': outcome.seed,
             'solutions': outcome.stats.solutions, 'nodes': outcome.stats.nodes,
             'max depth': outcome.stats.max_depth, 'seconds': round(outcome.stats.seconds, 3)}]
    for w, stats in enumerate(outcome.workers):
        rows.append({'worker': str(w), 'status': '', 'seed': None, 'solutions': stats.solutions,
                     'nodes': stats.nodes, 'max depth': stats.max_depth, 'seconds': round(stats.seconds, 3)})
    return pd.DataFrame(rows)


def write_to_excel(filename: Path, sheets: list[tuple[pd.DataFrame, str]]) -> None:
    with pd.ExcelWriter(filename, engine='xlsxwriter') as writer:
        for df, sheetname in sheets:
            df.to_excel(writer, sheet_name=sheetname, index=False)


def find_column_index(worksheet, column_name: str) -> int | None:
    for cell in worksheet[1]:
        if cell.value == column_name:
            return cell.col_idx - 1
    return None


def colorize_coverage(excel_file: Path, certified: bool) -> None:
    book = load_workbook(excel_file)
    if const.SHEET_COVERAGE not in book.sheetnames:
        return

    fill_green = PatternFill(start_color="CCFFCC", end_color="CCFFCC", fill_type="solid")
    fill_red = PatternFill(start_color="FFCCCC", end_color="FFCCCC", fill_type="solid")

    ws = book[const.SHEET_COVERAGE]
    idx = find_column_index(ws, STATUS_COLUMN)
    if idx is not None:
        for row in ws.iter_rows(min_row=2, max_row=ws.max_row):
            row[idx].fill = fill_green if certified else fill_red

    book.save(excel_file)


def write_report(filename: Path, S: SteinerStructure | None = None, coverage: CoverageReport | None = None,
                 family: DifferenceFamily | None = None, outcome: SolveOutcome | None = None,
                 groups: CosetGroupTable | None = None,
                 candidates: list[CandidateOrbit] | None = None) -> None:
    '''Workbook with one sheet per table that is available'''
    sheets = []
    if groups is not None:
        sheets.append((groups_frame(groups), const.SHEET_GROUPS))
    if candidates is not None:
        sheets.append((candidates_frame(candidates), const.SHEET_CANDIDATES))
    if S is not None:
        sheets.append((structure_frame(S), const.SHEET_STRUCTURE))
    if coverage is not None:
        sheets.append((coverage_frame(coverage), const.SHEET_COVERAGE))
    if family is not None:
        sheets.append((difference_family_frame(family), const.SHEET_DIFFERENCE_FAMILY))
    if outcome is not None:
        sheets.append((solver_frame(outcome), const.SHEET_SOLVER))
    if not sheets:
        log.info('Nothing to report')
        return

    log.info(f'Writing report to "{filename}"')
    write_to_excel(filename, sheets)
    if coverage is not None:
        colorize_coverage(filename, coverage.certified)
