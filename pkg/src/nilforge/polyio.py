"""Text formats: POLY blocks, Z/4 blocks, pseudo-quintic files and CSV tables.

    POLY n=<n> d=<d> level=<r> [ring=Z4]
    CONST <num>/2^<r>
    TERM <i1>,<i2>,...,<ik> <c>

Terms are written in lexicographic order of their index tuples.  Lines that
are blank or start with '#' are ignored when reading.
"""
import re
from typing import List, Tuple

import numpy as np

from .dyadic import DyadicTorus
from .poly import FuncTable, PolyRep, Z4Poly, indices_of, mask_of
from .util.errors import ParseError

_HEADER = re.compile(r'^POLY\s+n=(\d+)\s+d=(-?\d+)\s+level=(\d+)(?:\s+ring=(\w+))?\s*$')
_CONST = re.compile(r'^CONST\s+(-?\d+)/2\^(\d+)\s*$')
_TERM = re.compile(r'^TERM\s+(\d+(?:,\d+)*)\s+(\d+)\s*$')
_PQ = re.compile(r'^PSEUDOQUINTIC\s+n=(\d+)\s+r=(\d+)\s*$')


def _term_lines(coeffs) -> List[str]:
    items = sorted((indices_of(S), c) for S, c in coeffs.items() if S)
    return [f"TERM {','.join(map(str, idx))} {c}" for idx, c in items]


def format_poly(P: PolyRep) -> str:
    lines = [f'POLY n={P.n} d={P.d} level={P.level}',
             f'CONST {P.alpha.at_level(P.level)}/2^{P.level}']
    lines += _term_lines(P.coeffs)
    return '\n'.join(lines) + '\n'


def format_z4(R: Z4Poly) -> str:
    lines = [f'POLY n={R.n} d=3 level=2 ring=Z4',
             f'CONST {R.coeffs.get(0, 0)}/2^2']
    lines += _term_lines(R.coeffs)
    return '\n'.join(lines) + '\n'


class _Lines:
    """Numbered, comment-free lines of a document."""

    def __init__(self, text: str, filename: str):
        self.filename = filename
        self.items = [(no, line.strip()) for no, line in enumerate(text.splitlines(), 1)
                      if line.strip() and not line.strip().startswith('#')]
        self.pos = 0

    def peek(self):
        return self.items[self.pos] if self.pos < len(self.items) else (None, None)

    def next(self, what: str) -> Tuple[int, str]:
        if self.pos >= len(self.items):
            last = self.items[-1][0] if self.items else 0
            raise ParseError(f'unexpected end of input, expected {what}', self.filename, last)
        item = self.items[self.pos]
        self.pos += 1
        return item

    def error(self, message: str, line: int):
        return ParseError(message, self.filename, line)


def _read_block(lines: _Lines):
    no, text = lines.next('POLY header')
    m = _HEADER.match(text)
    if not m:
        raise lines.error(f'bad POLY header: {text!r}', no)
    n, d, level, ring = int(m.group(1)), int(m.group(2)), int(m.group(3)), m.group(4)
    if ring not in (None, 'Z4'):
        raise lines.error(f'unknown ring {ring!r}', no)
    no, text = lines.next('CONST line')
    m = _CONST.match(text)
    if not m:
        raise lines.error(f'bad CONST line: {text!r}', no)
    if int(m.group(2)) != level:
        raise lines.error(f'CONST level {m.group(2)} differs from header level {level}', no)
    const = int(m.group(1))
    coeffs = {}
    last = no
    while True:
        no, text = lines.peek()
        if text is None or not text.startswith('TERM'):
            break
        last, _ = lines.next('TERM')
        m = _TERM.match(text)
        if not m:
            raise lines.error(f'bad TERM line: {text!r}', no)
        idx = tuple(int(i) for i in m.group(1).split(','))
        if list(idx) != sorted(set(idx)) or idx[0] < 1 or idx[-1] > n:
            raise lines.error(f'bad index set {idx} for n={n}', no)
        S = mask_of(idx)
        if S in coeffs:
            raise lines.error(f'duplicate term {idx}', no)
        coeffs[S] = int(m.group(2))
    try:
        if ring == 'Z4':
            if d != 3 or level != 2:
                raise ValueError('a Z4 block must declare d=3 level=2')
            if const:
                coeffs[0] = const
            return Z4Poly(n, coeffs)
        return PolyRep(n, d, level, DyadicTorus(const, level), coeffs)
    except ValueError as e:
        raise lines.error(str(e), last) from None


def parse_poly(text: str, filename: str = '<input>') -> PolyRep:
    lines = _Lines(text, filename)
    P = _read_block(lines)
    if isinstance(P, Z4Poly):
        raise ParseError('expected a torus polynomial, found ring=Z4', filename, 1)
    no, rest = lines.peek()
    if rest is not None:
        raise lines.error(f'trailing input: {rest!r}', no)
    return P


def parse_z4(text: str, filename: str = '<input>') -> Z4Poly:
    lines = _Lines(text, filename)
    R = _read_block(lines)
    if not isinstance(R, Z4Poly):
        raise ParseError('expected ring=Z4', filename, 1)
    return R


def format_pq(pq) -> str:
    return (f'PSEUDOQUINTIC n={pq.n} r={pq.r}\n'
            + format_z4(pq.R) + format_poly(pq.q2) + format_poly(pq.P))


def parse_pq(text: str, filename: str = '<input>'):
    from .x5r import PseudoQuintic

    lines = _Lines(text, filename)
    no, head = lines.next('PSEUDOQUINTIC header')
    m = _PQ.match(head)
    if not m:
        raise lines.error(f'bad PSEUDOQUINTIC header: {head!r}', no)
    n, r = int(m.group(1)), int(m.group(2))
    R = _read_block(lines)
    q2 = _read_block(lines)
    P = _read_block(lines)
    if not isinstance(R, Z4Poly) or isinstance(q2, Z4Poly) or isinstance(P, Z4Poly):
        raise lines.error('blocks must be R (ring=Z4), Q2 and P', no)
    if R.n != n or q2.n != n or P.n != n:
        raise lines.error('block dimensions differ from the header', no)
    return PseudoQuintic(R, q2, P, r)


def format_table(T: FuncTable) -> str:
    rows = []
    for x in range(1 << T.n):
        bits = ''.join(str(x >> i & 1) for i in range(T.n))
        rows.append(f'{bits},{int(T.values[x])},{T.level}')
    return '\n'.join(rows) + '\n'


def parse_table(text: str, filename: str = '<input>') -> FuncTable:
    lines = _Lines(text, filename)
    entries = {}
    n = None
    level = 0
    for no, line in lines.items:
        parts = line.split(',')
        if len(parts) != 3 or set(parts[0]) - {'0', '1'}:
            raise lines.error(f'bad table row: {line!r}', no)
        bits, num, lev = parts[0], parts[1], parts[2]
        if n is None:
            n = len(bits)
        elif len(bits) != n:
            raise lines.error(f'bitstring of length {len(bits)}, expected {n}', no)
        try:
            value = DyadicTorus(int(num), int(lev))
        except ValueError as e:
            raise lines.error(str(e), no) from None
        x = sum(1 << i for i, b in enumerate(bits) if b == '1')
        if x in entries:
            raise lines.error(f'duplicate point {bits}', no)
        entries[x] = value
        level = max(level, value.level)
    if n is None or len(entries) != 1 << n:
        raise ParseError(f'table needs {1 << (n or 0)} rows, found {len(entries)}', filename, 0)
    return FuncTable(n, level, np.array([entries[x].at_level(level) for x in range(1 << n)]))


def read_any(path: str):
    """Load a POLY file, a pseudo-quintic file or a CSV table by its first line."""
    with open(path) as f:
        text = f.read()
    first = next((line.strip() for line in text.splitlines()
                  if line.strip() and not line.strip().startswith('#')), '')
    if first.startswith('PSEUDOQUINTIC'):
        return parse_pq(text, path)
    if first.startswith('POLY'):
        if 'ring=Z4' in first:
            return parse_z4(text, path)
        return parse_poly(text, path)
    return parse_table(text, path)
