from pathlib import Path

DATA_FOLDER = Path(__file__).parent / 'data'
REFERENCE_FIELD_FILE = DATA_FOLDER / 'gf2_13.field'
REFERENCE_STRUCTURE_FILE = DATA_FOLDER / 's2_3_13.structure'

# x^13 + x^12 + x^10 + x^9 + 1, constant term first. Its root is the inverse of a root of
# x^13 + x^4 + x^3 + x + 1; the reference exponents are powers of this root.
REFERENCE_POLY = (1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 1, 1)
REFERENCE_P = 2
REFERENCE_N = 13
REFERENCE_K = 3

# orbits = ... in structure files
ORBITS_FROBENIUS_SHIFT = 'frobenius+shift'
ORBITS_SHIFT = 'shift'

# largest supported multiplicative group order p^n - 1
MAX_FIELD_ORDER = 2 ** 32

ENV_PREFIX = 'QSTEINER_'
DEFAULT_K = 3
DEFAULT_SEED = 0
DEFAULT_WORKERS = 1
DEFAULT_MEM_GIB = 4

# check budget and cancellation every this many search nodes
BUDGET_CHECK_INTERVAL = 1024

CANDIDATE_LIST_SUFFIX = '.reps'

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_EXHAUSTED = 3
EXIT_BUDGET_EXCEEDED = 4

# sheet names of the report workbooks
SHEET_GROUPS = 'Groups'
SHEET_CANDIDATES = 'Candidates'
SHEET_STRUCTURE = 'Structure'
SHEET_COVERAGE = 'Coverage'
SHEET_DIFFERENCE_FAMILY = 'Difference family'
SHEET_SOLVER = 'Solver'
