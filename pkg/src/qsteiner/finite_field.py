import logging
import time
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

import qsteiner.constants as const
from qsteiner.errors import (
    FieldTooLarge, InvalidFieldSpec, NonPrimeParameter, NonPrimitivePolynomial)

log = logging.getLogger(__name__)

# An element of GF(p^n) is ZERO or the exponent i of alpha^i
Element = Optional[int]
ZERO: Element = None


@dataclass(frozen=True)
class FieldSpec:
    p: int
    n: int
    poly: tuple[int, ...]

    @property
    def order(self) -> int:
        return self.p ** self.n - 1


@dataclass(frozen=True, eq=False)
class FieldTables:
    '''Log/antilog tables of GF(p^n). A vector of F_p^n is stored as the
       integer sum(c_i * p^i), c_i the coefficient of x^i.
    '''
    spec: FieldSpec
    antilog: np.ndarray
    log: np.ndarray
    order: int

    @property
    def p(self) -> int:
        return self.spec.p

    @property
    def n(self) -> int:
        return self.spec.n


@dataclass(frozen=True, eq=False)
class CosetTable:
    representative: np.ndarray
    cosets: tuple[tuple[int, ...], ...]
    sizes: tuple[int, ...]
    n: int

    def rho(self, s: int) -> int:
        return int(self.representative[s % len(self.representative)])

    def size_n_representatives(self) -> list[int]:
        return [c[0] for c, size in zip(self.cosets, self.sizes) if size == self.n]


def is_prime(m: int) -> bool:
    if m < 2:
        return False
    d = 2
    while d * d <= m:
        if m % d == 0:
            return False
        d += 1
    return True


def prime_factors(m: int) -> list[int]:
    '''Distinct prime factors of m, by trial division'''
    factors = []
    d = 2
    while d * d <= m:
        if m % d == 0:
            factors.append(d)
            while m % d == 0:
                m //= d
        d += 1
    if m > 1:
        factors.append(m)
    return factors


def format_poly(poly: Iterable[int]) -> str:
    terms = []
    for i, c in reversed(list(enumerate(poly))):
        if c == 0:
            continue
        if i == 0:
            terms.append(str(c))
            continue
        base = 'x' if i == 1 else f'x^{i}'
        terms.append(base if c == 1 else f'{c}{base}')
    return ' + '.join(terms) if terms else '0'


def reciprocal_poly(poly: Iterable[int]) -> tuple[int, ...]:
    '''x^deg * f(1/x); its roots are the inverses of the roots of f'''
    return tuple(reversed(tuple(poly)))


def _monic(spec: FieldSpec) -> list[int]:
    p = spec.p
    inv = pow(spec.poly[-1], p - 2, p)
    return [(c * inv) % p for c in spec.poly]


def _poly_mulmod(a: list[int], b: list[int], mod: list[int], p: int) -> list[int]:
    n = len(mod) - 1
    prod = [0] * (2 * n - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                if bj:
                    prod[i + j] = (prod[i + j] + ai * bj) % p
    for d in range(len(prod) - 1, n - 1, -1):
        c = prod[d]
        if c:
            for i in range(n + 1):
                prod[d - n + i] = (prod[d - n + i] - c * mod[i]) % p
    return prod[:n]


def _x_power_mod(e: int, mod: list[int], p: int) -> list[int]:
    n = len(mod) - 1
    result = [1] + [0] * (n - 1)
    base = [0, 1] + [0] * (n - 2)
    while e:
        if e & 1:
            result = _poly_mulmod(result, base, mod, p)
        base = _poly_mulmod(base, base, mod, p)
        e >>= 1
    return result


def validate_spec(spec: FieldSpec) -> None:
    if not is_prime(spec.p):
        raise NonPrimeParameter(f'p = {spec.p} is not prime')
    if not is_prime(spec.n):
        raise NonPrimeParameter(f'n = {spec.n} is not prime')
    if len(spec.poly) != spec.n + 1:
        raise InvalidFieldSpec(f'poly has {len(spec.poly)} coefficients, expected {spec.n + 1} for degree {spec.n}')
    if any(c < 0 or c >= spec.p for c in spec.poly):
        raise InvalidFieldSpec(f'poly coefficients must lie in [0, {spec.p - 1}]')
    if spec.poly[-1] == 0:
        raise InvalidFieldSpec(f'poly does not have degree {spec.n}')
    if spec.order > const.MAX_FIELD_ORDER:
        raise FieldTooLarge(f'p^n - 1 = {spec.order} exceeds the table limit of {const.MAX_FIELD_ORDER}')


def check_primitive(spec: FieldSpec) -> None:
    '''Confirm x has multiplicative order exactly p^n - 1 modulo poly:
       x^(p^n-1) = 1 and x^((p^n-1)/q) != 1 for every prime q dividing p^n - 1.
    '''
    order = spec.order
    mod = _monic(spec)
    one = [1] + [0] * (spec.n - 1)
    if spec.poly[0] == 0 or _x_power_mod(order, mod, spec.p) != one:
        raise NonPrimitivePolynomial(f'{format_poly(spec.poly)} is not primitive over F_{spec.p}')
    for q in prime_factors(order):
        if _x_power_mod(order // q, mod, spec.p) == one:
            raise NonPrimitivePolynomial(
                f'{format_poly(spec.poly)} is not primitive: order of x divides {order // q}')


def _antilog_binary(spec: FieldSpec) -> list[int]:
    poly_int = sum(c << i for i, c in enumerate(spec.poly))
    top = 1 << spec.n
    words = []
    v = 1
    for _ in range(spec.order):
        words.append(v)
        v <<= 1
        if v & top:
            v ^= poly_int
    return words


def _antilog_general(spec: FieldSpec) -> list[int]:
    p, n = spec.p, spec.n
    mod = _monic(spec)
    weights = [p ** i for i in range(n)]
    digits = [1] + [0] * (n - 1)
    words = []
    for _ in range(spec.order):
        words.append(sum(d * w for d, w in zip(digits, weights)))
        t = digits[-1]
        digits = [(prev - t * m) % p for prev, m in zip([0] + digits[:-1], mod)]
    return words


def build_field(spec: FieldSpec) -> FieldTables:
    validate_spec(spec)
    check_primitive(spec)

    start = time.perf_counter()
    words = _antilog_binary(spec) if spec.p == 2 else _antilog_general(spec)
    antilog = np.array(words, dtype=np.int64)
    logs = np.full(spec.order + 1, -1, dtype=np.int64)
    logs[antilog] = np.arange(spec.order, dtype=np.int64)
    if np.count_nonzero(logs[1:] < 0):
        raise NonPrimitivePolynomial(f'{format_poly(spec.poly)} does not generate every nonzero vector')
    log.info(f'Built GF({spec.p}^{spec.n}) tables, order {spec.order}, '
             f'in {time.perf_counter() - start:.3f}s')

    return FieldTables(spec=spec, antilog=antilog, log=logs, order=spec.order)


def to_vector(tables: FieldTables, x: Element) -> int:
    if x is ZERO:
        return 0
    return int(tables.antilog[x % tables.order])


def from_vector(tables: FieldTables, v: int) -> Element:
    if v == 0:
        return ZERO
    return int(tables.log[v])


def vector_add(u: int, v: int, p: int, n: int) -> int:
    if p == 2:
        return u ^ v
    total = 0
    weight = 1
    for _ in range(n):
        total += ((u % p + v % p) % p) * weight
        u //= p
        v //= p
        weight *= p
    return total


def vector_scale(c: int, v: int, p: int, n: int) -> int:
    total = 0
    weight = 1
    for _ in range(n):
        total += ((c * (v % p)) % p) * weight
        v //= p
        weight *= p
    return total


def add(tables: FieldTables, x: Element, y: Element) -> Element:
    s = vector_add(to_vector(tables, x), to_vector(tables, y), tables.p, tables.n)
    return from_vector(tables, s)


def frobenius(tables: FieldTables, x: Element, ell: int) -> Element:
    '''x -> x^(p^ell); ZERO is fixed'''
    if x is ZERO:
        return ZERO
    return (x * pow(tables.p, ell, tables.order)) % tables.order


def cyclic_shift(tables: FieldTables, x: Element, j: int) -> Element:
    '''alpha^i -> alpha^(i+j); ZERO is fixed'''
    if x is ZERO:
        return ZERO
    return (x + j) % tables.order


@lru_cache(maxsize=8)
def build_cosets(tables: FieldTables) -> CosetTable:
    order, p, n = tables.order, tables.p, tables.n
    residues = np.arange(order, dtype=np.int64)
    rep = residues.copy()
    cur = residues.copy()
    for _ in range(n - 1):
        cur = (cur * p) % order
        np.minimum(rep, cur, out=rep)

    by_rep = np.argsort(rep, kind='stable')
    reps_sorted = rep[by_rep]
    bounds = np.flatnonzero(np.diff(reps_sorted)) + 1
    cosets = tuple(tuple(chunk.tolist()) for chunk in np.split(by_rep, bounds))
    sizes = tuple(len(c) for c in cosets)
    log.info(f'{sum(1 for s in sizes if s == n)} cyclotomic cosets of size {n}, '
             f'{sum(1 for s in sizes if s == 1)} of size 1')

    return CosetTable(representative=rep, cosets=cosets, sizes=sizes, n=n)


def parse_poly(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(c) for c in text.replace(' ', '').split(','))
    except ValueError:
        raise InvalidFieldSpec(f'cannot read polynomial coefficients from "{text}"')


def split_header(lines: Iterable[str]) -> tuple[dict[str, str], list[str]]:
    '''Separate `key = value` lines from the other non-comment lines'''
    header = {}
    body = []
    for line in lines:
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        if '=' in line:
            key, value = line.split('=', 1)
            header[key.strip()] = value.strip()
        else:
            body.append(line)
    return header, body


def spec_from_header(header: dict[str, str]) -> FieldSpec:
    missing = [key for key in ('p', 'n', 'poly') if key not in header]
    if missing:
        raise InvalidFieldSpec(f'missing field keys: {", ".join(missing)}')
    try:
        p, n = int(header['p']), int(header['n'])
    except ValueError:
        raise InvalidFieldSpec(f'p and n must be integers, got p={header["p"]} n={header["n"]}')
    return FieldSpec(p=p, n=n, poly=parse_poly(header['poly']))


def format_spec_header(spec: FieldSpec) -> list[str]:
    return [f'p = {spec.p}', f'n = {spec.n}', f'poly = {",".join(str(c) for c in spec.poly)}']


def read_field_spec(path: Path) -> FieldSpec:
    header, _ = split_header(Path(path).read_text(encoding='utf-8').splitlines())
    return spec_from_header(header)


def write_field_spec(spec: FieldSpec, path: Path) -> None:
    lines = [f'# GF({spec.p}^{spec.n}), alpha is a root of {format_poly(spec.poly)}', *format_spec_header(spec)]
    Path(path).write_text('\n'.join(lines) + '\n', encoding='utf-8')


@lru_cache(maxsize=1)
def reference_field() -> FieldTables:
    return build_field(FieldSpec(p=const.REFERENCE_P, n=const.REFERENCE_N, poly=const.REFERENCE_POLY))
