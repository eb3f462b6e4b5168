import logging
import random
import sys
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from enum import Enum
from multiprocessing import Manager
from pathlib import Path

import qsteiner.constants as const
from qsteiner.errors import MalformedInstance

log = logging.getLogger(__name__)


class SearchMode(Enum):
    FIRST = 'first'
    COUNT = 'count'
    ENUMERATE = 'enumerate'


class SolveStatus(Enum):
    SOLUTION = 'solution'
    EXHAUSTED = 'exhausted'
    BUDGET_EXCEEDED = 'budget-exceeded'
    CANCELLED = 'cancelled'


@dataclass(frozen=True)
class ExactCoverInstance:
    universe_size: int
    sets: tuple[tuple[int, tuple[int, ...]], ...]


@dataclass(frozen=True)
class CoverSolution:
    chosen: tuple[int, ...]


@dataclass(frozen=True)
class SearchBudget:
    '''Limits of one search; None means unlimited. `max_solutions` applies
       to the enumerate mode.
    '''
    node_limit: int | None = None
    wall_limit: float | None = None
    seed: int | None = None
    mode: SearchMode = SearchMode.FIRST
    max_solutions: int | None = None

    def __post_init__(self):
        for name in ('node_limit', 'wall_limit', 'max_solutions'):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f'{name} must be positive or unlimited, got {value}')


@dataclass
class SearchStats:
    nodes: int = 0
    max_depth: int = 0
    seconds: float = 0.0
    solutions: int = 0


@dataclass(frozen=True)
class SolveOutcome:
    status: SolveStatus
    solutions: tuple[CoverSolution, ...]
    stats: SearchStats
    seed: int | None = None
    workers: tuple[SearchStats, ...] = field(default=())


@dataclass(frozen=True)
class CheckReport:
    ok: bool
    duplicated: tuple[int, ...]
    missing: tuple[int, ...]
    unknown_ids: tuple[int, ...]
    message: str


def validate_instance(instance: ExactCoverInstance) -> None:
    if instance.universe_size < 0:
        raise MalformedInstance(f'negative universe size {instance.universe_size}')
    seen = set()
    for set_id, members in instance.sets:
        if set_id in seen:
            raise MalformedInstance(f'set id {set_id} appears twice')
        seen.add(set_id)
        if not members:
            raise MalformedInstance(f'set {set_id} is empty')
        if len(set(members)) != len(members):
            raise MalformedInstance(f'set {set_id} repeats a column')
        bad = [c for c in members if c < 0 or c >= instance.universe_size]
        if bad:
            raise MalformedInstance(f'set {set_id} has column {bad[0]} outside universe {instance.universe_size}')


class DancingLinks:
    '''Toroidal doubly linked node mesh in flat lists. Node 0 is the root,
       nodes 1..universe are the column headers.
    '''

    def __init__(self, instance: ExactCoverInstance, seed: int | None = None):
        cols = instance.universe_size
        total = cols + 1 + sum(len(members) for _, members in instance.sets)
        self.L = [i - 1 for i in range(total)]
        self.R = [i + 1 for i in range(total)]
        self.U = list(range(total))
        self.D = list(range(total))
        self.C = list(range(total))
        self.row = [-1] * total
        self.S = [0] * (cols + 1)
        self.L[0] = cols
        self.R[cols] = 0
        self.ids = [set_id for set_id, _ in instance.sets]

        order = list(range(len(instance.sets)))
        if seed is not None:
            random.Random(seed).shuffle(order)
        node = cols + 1
        for r in order:
            first = node
            for c in instance.sets[r][1]:
                col = c + 1
                self.U[node] = self.U[col]
                self.D[node] = col
                self.D[self.U[col]] = node
                self.U[col] = node
                self.C[node] = col
                self.row[node] = r
                self.S[col] += 1
                node += 1
            self.L[first] = node - 1
            self.R[node - 1] = first

    def cover(self, c: int) -> None:
        L, R, U, D, C, S = self.L, self.R, self.U, self.D, self.C, self.S
        L[R[c]] = L[c]
        R[L[c]] = R[c]
        i = D[c]
        while i != c:
            j = R[i]
            while j != i:
                U[D[j]] = U[j]
                D[U[j]] = D[j]
                S[C[j]] -= 1
                j = R[j]
            i = D[i]

    def uncover(self, c: int) -> None:
        L, R, U, D, C, S = self.L, self.R, self.U, self.D, self.C, self.S
        i = U[c]
        while i != c:
            j = L[i]
            while j != i:
                S[C[j]] += 1
                U[D[j]] = j
                D[U[j]] = j
                j = L[j]
            i = U[i]
        L[R[c]] = c
        R[L[c]] = c

    def choose_column(self) -> int:
        '''Fewest remaining rows, lowest column index on ties'''
        R, S = self.R, self.S
        c = R[0]
        best = c
        while c != 0:
            if S[c] < S[best]:
                best = c
                if S[c] == 0:
                    break
            c = R[c]
        return best


class _Search:
    def __init__(self, links: DancingLinks, budget: SearchBudget, cancel=None):
        self.links = links
        self.budget = budget
        self.cancel = cancel
        self.stats = SearchStats()
        self.partial: list[int] = []
        self.found: list[CoverSolution] = []
        self.halt: SolveStatus | None = None
        self.deadline = None if budget.wall_limit is None else time.monotonic() + budget.wall_limit

    def _out_of_budget(self) -> bool:
        if self.budget.node_limit is not None and self.stats.nodes > self.budget.node_limit:
            self.halt = SolveStatus.BUDGET_EXCEEDED
        elif self.stats.nodes % const.BUDGET_CHECK_INTERVAL == 0:
            if self.deadline is not None and time.monotonic() > self.deadline:
                self.halt = SolveStatus.BUDGET_EXCEEDED
            elif self.cancel is not None and self.cancel.is_set():
                self.halt = SolveStatus.CANCELLED
        return self.halt is not None

    def _record(self) -> bool:
        self.stats.solutions += 1
        mode = self.budget.mode
        if mode != SearchMode.COUNT or not self.found:
            self.found.append(CoverSolution(tuple(sorted(self.links.ids[r] for r in self.partial))))
        if mode == SearchMode.FIRST:
            return True
        return mode == SearchMode.ENUMERATE and self.budget.max_solutions is not None \
            and self.stats.solutions >= self.budget.max_solutions

    def run(self, depth: int = 0) -> bool:
        '''Returns True when the search must stop; the mesh is always restored'''
        links = self.links
        self.stats.nodes += 1
        self.stats.max_depth = max(self.stats.max_depth, depth)
        if self._out_of_budget():
            return True
        if links.R[0] == 0:
            return self._record()

        c = links.choose_column()
        if links.S[c] == 0:
            return False
        R, L, D, C = links.R, links.L, links.D, links.C
        links.cover(c)
        stop = False
        r = D[c]
        while r != c:
            self.partial.append(links.row[r])
            j = R[r]
            while j != r:
                links.cover(C[j])
                j = R[j]
            stop = self.run(depth + 1)
            j = L[r]
            while j != r:
                links.uncover(C[j])
                j = L[j]
            self.partial.pop()
            if stop:
                break
            r = D[r]
        links.uncover(c)
        return stop


def solve(instance: ExactCoverInstance, budget: SearchBudget = SearchBudget(), cancel=None) -> SolveOutcome:
    validate_instance(instance)
    if instance.universe_size + 100 > sys.getrecursionlimit():
        sys.setrecursionlimit(instance.universe_size + 1000)

    start = time.perf_counter()
    search = _Search(DancingLinks(instance, budget.seed), budget, cancel)
    search.run()
    search.stats.seconds = time.perf_counter() - start

    if search.halt is not None:
        status = search.halt
    elif search.stats.solutions:
        status = SolveStatus.SOLUTION
    else:
        status = SolveStatus.EXHAUSTED
    stats = search.stats
    log.info(f'Exact cover search ({budget.mode.value}, seed {budget.seed}): {status.value}, '
             f'{stats.solutions} solution(s), {stats.nodes} nodes, depth {stats.max_depth}, {stats.seconds:.2f}s')

    return SolveOutcome(status=status, solutions=tuple(search.found), stats=stats, seed=budget.seed)


def _portfolio_worker(instance: ExactCoverInstance, budget: SearchBudget, cancel) -> SolveOutcome:
    outcome = solve(instance, budget, cancel)
    if outcome.status in (SolveStatus.SOLUTION, SolveStatus.EXHAUSTED):
        cancel.set()
    return outcome


def solve_portfolio(instance: ExactCoverInstance, budget: SearchBudget, workers: int) -> SolveOutcome:
    '''Independent searches with seeds seed, seed+1, ... ; the first to finish
       cancels the others. Only the first-solution mode runs as a portfolio.
    '''
    if workers <= 1 or budget.mode != SearchMode.FIRST:
        return solve(instance, budget)
    validate_instance(instance)

    base = budget.seed if budget.seed is not None else const.DEFAULT_SEED
    seeds = [budget.seed] + [base + w for w in range(1, workers)]
    outcomes: dict[int, SolveOutcome] = {}
    with Manager() as manager:
        cancel = manager.Event()
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(_portfolio_worker, instance, replace(budget, seed=s), cancel): w
                       for w, s in enumerate(seeds)}
            for future in as_completed(futures):
                outcomes[futures[future]] = future.result()

    ordered = [outcomes[w] for w in range(workers)]
    stats = SearchStats(nodes=sum(o.stats.nodes for o in ordered),
                        max_depth=max(o.stats.max_depth for o in ordered),
                        seconds=max(o.stats.seconds for o in ordered))
    winners = [o for o in ordered if o.status == SolveStatus.SOLUTION]
    if winners:
        status, solutions, seed = SolveStatus.SOLUTION, winners[0].solutions, winners[0].seed
    elif any(o.status == SolveStatus.EXHAUSTED for o in ordered):
        status, solutions, seed = SolveStatus.EXHAUSTED, (), budget.seed
    else:
        status, solutions, seed = SolveStatus.BUDGET_EXCEEDED, (), budget.seed
    stats.solutions = len(solutions)
    log.info(f'Portfolio of {workers} searches: {status.value}, {stats.nodes} nodes in total')

    return SolveOutcome(status=status, solutions=solutions, stats=stats, seed=seed,
                        workers=tuple(o.stats for o in ordered))


def check_solution(instance: ExactCoverInstance, chosen: list[int]) -> CheckReport:
    members = dict(instance.sets)
    unknown = tuple(i for i in chosen if i not in members)
    counts = Counter(c for i in chosen if i in members for c in members[i])
    duplicated = tuple(sorted(c for c, k in counts.items() if k > 1))
    missing = tuple(sorted(set(range(instance.universe_size)).difference(counts)))

    if unknown:
        message = f'unknown set id {unknown[0]}'
    elif duplicated:
        message = f'column {duplicated[0]} covered more than once'
    elif missing:
        message = f'column {missing[0]} not covered ({len(missing)} uncovered)'
    else:
        message = 'exact cover'
    return CheckReport(ok=not (unknown or duplicated or missing), duplicated=duplicated,
                       missing=missing, unknown_ids=unknown, message=message)


def read_instance(path: Path) -> ExactCoverInstance:
    lines = [line.split() for line in Path(path).read_text(encoding='utf-8').splitlines()
             if line.strip() and not line.startswith('#')]
    if not lines or lines[0][0] != 'universe' or len(lines[0]) != 2:
        raise MalformedInstance(f'"{path}" does not start with a "universe <size>" line')
    try:
        universe = int(lines[0][1])
        sets = tuple((int(words[0]), tuple(int(c) for c in words[1:])) for words in lines[1:])
    except ValueError as e:
        raise MalformedInstance(f'"{path}": {e}')
    instance = ExactCoverInstance(universe_size=universe, sets=sets)
    validate_instance(instance)
    return instance


def write_solution(outcome: SolveOutcome, path: Path) -> None:
    '''Chosen ids one per line, solutions separated by a blank line, then a
       `# key: value` trailer
    '''
    blocks = ['\n'.join(str(i) for i in s.chosen) for s in outcome.solutions]
    trailer = [f'# status: {outcome.status.value}',
               f'# solutions: {outcome.stats.solutions}',
               f'# nodes: {outcome.stats.nodes}',
               f'# max_depth: {outcome.stats.max_depth}',
               f'# seed: {outcome.seed}']
    text = '\n\n'.join(b for b in blocks if b)
    Path(path).write_text((text + '\n' if text else '') + '\n'.join(trailer) + '\n', encoding='utf-8')


def read_solution(path: Path) -> tuple[list[list[int]], dict[str, str]]:
    solutions: list[list[int]] = []
    trailer = {}
    current: list[int] = []
    for line in Path(path).read_text(encoding='utf-8').splitlines():
        if line.startswith('#'):
            key, _, value = line[1:].partition(':')
            trailer[key.strip()] = value.strip()
        elif line.strip():
            current.append(int(line))
        elif current:
            solutions.append(current)
            current = []
    if current:
        solutions.append(current)
    return solutions, trailer
