"""The coboundary problem as a linear system.

Every cube c contributes the equation sum_omega (-1)^{m-|omega|} F(c_omega) = rho(c)
in the unknowns F(p), one per point p.  Over the torus the system is decided
by integer row reduction: it is solvable iff every integer relation among the
rows kills the right-hand side mod 1.  Over (1/2^r)Z/Z it is decided by a
Smith-style elimination modulo 2^r.  A NO answer carries a vector v with
v.M = 0 (mod the modulus) and v.rho not in Z, which `verify_certificate`
re-checks without touching the solvers.
"""
from __future__ import annotations

import logging
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Union

import numpy as np

from ..cubes import enumerate_params, param_space_size, params_to_vertices, sample_params
from ..dyadic import DyadicTorus, check_level
from ..poly import FuncTable
from ..util.errors import BudgetExceeded
from .handle import CocycleHandle, cube_signs

log = logging.getLogger(__name__)


@dataclass
class EquationSystem:
    """Deduplicated rows M, right-hand sides (numerators over 2^level) and one
    representative cube per row."""

    rows: np.ndarray
    rhs: np.ndarray
    level: int
    cubes: np.ndarray
    exhaustive: bool
    cubes_seen: int

    @property
    def shape(self):
        return self.rows.shape


def assemble_equations(V: np.ndarray, values: np.ndarray, level: int, points: int,
                       exhaustive: bool) -> EquationSystem:
    V = np.asarray(V, dtype=np.int64)
    m = V.shape[1].bit_length() - 1
    signs = cube_signs(m)
    M = np.zeros((len(V), points), dtype=np.int64)
    rows = np.repeat(np.arange(len(V)), V.shape[1])
    np.add.at(M, (rows, V.ravel()), np.tile(signs, len(V)))
    rhs = np.asarray(values, dtype=np.int64) % (1 << level)
    both = np.concatenate([M, rhs[:, None]], axis=1)
    uniq, first = np.unique(both, axis=0, return_index=True)
    order = np.argsort(first)
    uniq, first = uniq[order], first[order]
    return EquationSystem(uniq[:, :-1], uniq[:, -1], level, V[first], exhaustive, len(V))


def equations_for(rho: CocycleHandle, samples: int, rng, exhaustive_limit: int) -> EquationSystem:
    """Every cube when the parameter space is small, else the handle's own
    equation source or uniformly sampled cubes."""
    G, m = rho.space, rho.k + 1
    if param_space_size(G, m) <= exhaustive_limit:
        V = params_to_vertices(G, enumerate_params(G, m, exhaustive_limit))
        exhaustive = True
    elif rho.equations is not None:
        V = rho.equations(rng, samples)
        exhaustive = False
    else:
        V = params_to_vertices(G, sample_params(G, m, rng, samples))
        exhaustive = False
    return assemble_equations(V, rho.evaluate(V), rho.level, G.size, exhaustive)


def py_xgcd(a, b):
    # Maintain the invariants:
    #          x * a +      y * b ==      g
    #     next_x * a + next_y * b == next_g
    x, next_x = 1, 0
    y, next_y = 0, 1
    g, next_g = a, b
    while next_g:
        q = g // next_g
        x, next_x = next_x, x - q * next_x
        y, next_y = next_y, y - q * next_y
        g, next_g = next_g, g - q * next_g
    return x, y, g


def _combine(ca: Dict[int, int], cb: Dict[int, int], x: int, y: int) -> Dict[int, int]:
    """x*ca + y*cb for sparse integer vectors."""
    out = {}
    for key in ca.keys() | cb.keys():
        v = x * ca.get(key, 0) + y * cb.get(key, 0)
        if v:
            out[key] = v
    return out


class _Row:
    __slots__ = ('vec', 'rhs', 'combo')

    def __init__(self, vec: List[int], rhs: int, combo: Dict[int, int]):
        self.vec = vec
        self.rhs = rhs
        self.combo = combo


class IntegerEchelon:
    """Integer row echelon basis grown one row at a time.

    Each basis row remembers its right-hand side (mod 2^level) and the integer
    combination of input rows it came from.  A row that reduces to zero is a
    relation; it is returned so the caller can test its right-hand side.
    """

    def __init__(self, N: int, level: int):
        self.N = N
        self.level = level
        self.mod = 1 << level
        self.basis: List[_Row] = []
        self.pivot_location_in_column: List[Optional[int]] = [None] * N
        self.pivot_location_in_row: List[int] = []

    def add_vector(self, vec0, rhs: int, index: int) -> Optional[_Row]:
        col_piv = self.pivot_location_in_column
        row_piv = self.pivot_location_in_row
        N, mod = self.N, self.mod
        cur = _Row([int(v) for v in vec0], int(rhs) % mod, {index: 1})
        vec = cur.vec
        for j in range(N):
            if not vec[j]:
                continue
            p = col_piv[j]
            if p is None:
                where = bisect_left(row_piv, j)
                self.basis.insert(where, cur)
                row_piv.insert(where, j)
                col_piv[j] = where
                for ii in range(where + 1, len(self.basis)):
                    col_piv[row_piv[ii]] = ii
                return None
            row = self.basis[p]
            a = row.vec[j]
            b = vec[j]
            if b % a == 0:
                q = b // a
                for jj in range(j, N):
                    vec[jj] -= q * row.vec[jj]
                cur.rhs = (cur.rhs - q * row.rhs) % mod
                cur.combo = _combine(cur.combo, row.combo, 1, -q)
            elif a % b == 0:
                # the incoming row becomes the pivot row
                self.basis[p], cur = cur, row
                row, vec = self.basis[p], cur.vec
                q = a // b
                for jj in range(j, N):
                    vec[jj] -= q * row.vec[jj]
                cur.rhs = (cur.rhs - q * row.rhs) % mod
                cur.combo = _combine(cur.combo, row.combo, 1, -q)
            else:
                x, y, g = py_xgcd(a, b)
                ag = a // g
                mbg = -b // g
                for jj in range(j, N):
                    aa = row.vec[jj]
                    bb = vec[jj]
                    row.vec[jj] = x * aa + y * bb
                    vec[jj] = mbg * aa + ag * bb
                ra, rb = row.rhs, cur.rhs
                row.rhs = (x * ra + y * rb) % mod
                cur.rhs = (mbg * ra + ag * rb) % mod
                ca, cb = row.combo, cur.combo
                row.combo = _combine(ca, cb, x, y)
                cur.combo = _combine(ca, cb, mbg, ag)
        return cur


def torus_divide(t: DyadicTorus, p: int) -> DyadicTorus:
    """Some y in the dyadic torus with p*y = t."""
    if p == 0:
        raise ZeroDivisionError('division by zero in the torus')
    sign = -1 if p < 0 else 1
    p = abs(p)
    a = (p & -p).bit_length() - 1
    q = p >> a
    level = check_level(t.level + a)
    mod = 1 << level
    return DyadicTorus(sign * t.numerator * pow(q, -1, mod), level)


@dataclass
class CoboundaryVerdict:
    decision: str
    target: str
    exhaustive: bool
    equations_used: int
    cubes_seen: int
    witness: Optional[FuncTable] = None
    kernel_vector: Optional[Dict[int, int]] = None
    modulus: int = 0
    pairing: Optional[DyadicTorus] = None
    certificate_rows: Optional[List[List[int]]] = None
    certificate_rhs: Optional[List[str]] = None
    certificate_cubes: Optional[List[List[int]]] = None
    notes: List[str] = field(default_factory=list)

    @property
    def is_coboundary(self) -> Optional[bool]:
        return {'yes': True, 'no': False}.get(self.decision)

    def to_json(self) -> dict:
        out = {
            'decision': self.decision,
            'target': self.target,
            'exhaustive': self.exhaustive,
            'equations_used': self.equations_used,
            'cubes_seen': self.cubes_seen,
        }
        if self.witness is not None:
            out['witness'] = {'level': self.witness.level,
                              'values': [int(v) for v in self.witness.values]}
        if self.kernel_vector is not None:
            out['kernel_vector'] = {str(k): v for k, v in sorted(self.kernel_vector.items())}
            out['modulus'] = self.modulus
            out['pairing'] = str(self.pairing)
            out['certificate_rows'] = self.certificate_rows
            out['certificate_rhs'] = self.certificate_rhs
            out['certificate_cubes'] = self.certificate_cubes
        if self.notes:
            out['notes'] = self.notes
        return out


def verify_certificate(rows, rhs, vector: Dict[int, int], modulus: int = 0) -> Optional[Fraction]:
    """Re-check a NO certificate with plain integer arithmetic.

    `rows` are lists of integers, `rhs` values as Fractions or strings
    like '1/2'.  Returns v.rho mod 1 when v.M vanishes (mod `modulus`, or
    exactly when it is 0) and v.rho is not an integer, else None.
    """
    width = len(rows[0]) if rows else 0
    total = [0] * width
    pairing = Fraction(0)
    for i, coeff in vector.items():
        for j in range(width):
            total[j] += coeff * int(rows[i][j])
        pairing += coeff * Fraction(rhs[i])
    for t in total:
        if (t % modulus if modulus else t) != 0:
            return None
    pairing -= pairing.numerator // pairing.denominator
    return pairing if pairing else None


def _certificate(system: EquationSystem, vector: Dict[int, int], modulus: int, target: str,
                 pairing: DyadicTorus) -> CoboundaryVerdict:
    keys = sorted(vector)
    local = {pos: vector[k] for pos, k in enumerate(keys)}
    rows = [[int(v) for v in system.rows[k]] for k in keys]
    rhs = [str(DyadicTorus(int(system.rhs[k]), system.level)) for k in keys]
    return CoboundaryVerdict(
        'no', target, system.exhaustive, len(system.rows), system.cubes_seen,
        kernel_vector=local, modulus=modulus, pairing=pairing,
        certificate_rows=rows, certificate_rhs=rhs,
        certificate_cubes=[[int(v) for v in system.cubes[k]] for k in keys],
    )


def _pairing(system: EquationSystem, vector: Dict[int, int]) -> DyadicTorus:
    return DyadicTorus(sum(c * int(system.rhs[i]) for i, c in vector.items()), system.level)


def _check_witness(system: EquationSystem, F: FuncTable) -> bool:
    level = max(F.level, system.level)
    f = F.with_level(level).values
    lhs = (system.rows @ f) % (1 << level)
    rhs = (system.rhs << (level - system.level)) % (1 << level)
    return bool(np.array_equal(lhs, rhs))


def solve_torus(system: EquationSystem) -> CoboundaryVerdict:
    N = system.rows.shape[1]
    ech = IntegerEchelon(N, system.level)
    for i, (row, b) in enumerate(zip(system.rows, system.rhs)):
        rel = ech.add_vector(row, b, i)
        if rel is not None and rel.rhs % ech.mod:
            log.info('inconsistent relation after %d rows', i + 1)
            return _certificate(system, rel.combo, 0, 'torus', _pairing(system, rel.combo))
    F: List[DyadicTorus] = [DyadicTorus.zero()] * N
    for p in range(len(ech.basis) - 1, -1, -1):
        row = ech.basis[p]
        j = ech.pivot_location_in_row[p]
        t = DyadicTorus(row.rhs, system.level)
        for jj in range(j + 1, N):
            if row.vec[jj]:
                t = t - F[jj] * row.vec[jj]
        F[j] = torus_divide(t, row.vec[j])
    level = max([f.level for f in F] + [0])
    witness = FuncTable(int(N).bit_length() - 1, level, [f.at_level(level) for f in F])
    return _yes(system, witness, 'torus')


def _yes(system: EquationSystem, witness: FuncTable, target: str) -> CoboundaryVerdict:
    if not _check_witness(system, witness):
        raise AssertionError('solver produced a witness that fails its own equations')
    decision = 'yes' if system.exhaustive else 'inconclusive'
    verdict = CoboundaryVerdict(decision, target, system.exhaustive, len(system.rows),
                                system.cubes_seen, witness=witness)
    if not system.exhaustive:
        verdict.notes.append('solvable on sampled equations only')
    return verdict


def _val2(v: int, r: int) -> int:
    v %= 1 << r
    return r if v == 0 else (v & -v).bit_length() - 1


def solve_mod(system: EquationSystem, r: int, max_rows: int = 2048) -> CoboundaryVerdict:
    """Decide M F = rho with F valued in (1/2^r)Z/Z, by diagonalizing M modulo 2^r."""
    mod = 1 << r
    L = system.level
    target = f'level {r}'
    if L > r:
        # a right-hand side outside level r already obstructs
        bad = np.flatnonzero(system.rhs % (1 << (L - r)))
        if len(bad):
            i = int(bad[0])
            vec = {i: mod}
            return _certificate(system, vec, mod, target, _pairing(system, vec))
        b = system.rhs >> (L - r)
    else:
        b = system.rhs << (r - L)
    A = system.rows % mod
    both = np.concatenate([A, b[:, None] % mod], axis=1)
    _, keep = np.unique(both, axis=0, return_index=True)
    keep = np.sort(keep)
    if len(keep) > max_rows:
        raise BudgetExceeded(f'{len(keep)} distinct rows modulo 2^{r}', len(keep))
    A = A[keep].copy()
    b = b[keep] % mod
    R, C = A.shape
    U = np.eye(R, dtype=np.int64)
    V = np.eye(C, dtype=np.int64)
    diag = []
    for t in range(min(R, C)):
        sub = A[t:, t:]
        if not np.any(sub):
            break
        vals = np.vectorize(lambda v: _val2(int(v), r))(sub)
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        i, j = i + t, j + t
        A[[t, i]] = A[[i, t]]
        U[[t, i]] = U[[i, t]]
        A[:, [t, j]] = A[:, [j, t]]
        V[:, [t, j]] = V[:, [j, t]]
        a = _val2(int(A[t, t]), r)
        u_inv = pow(int(A[t, t]) >> a, -1, mod)
        for ii in range(t + 1, R):
            if A[ii, t]:
                q = ((int(A[ii, t]) >> a) * u_inv) % mod
                A[ii] = (A[ii] - q * A[t]) % mod
                U[ii] = (U[ii] - q * U[t]) % mod
        for jj in range(t + 1, C):
            if A[t, jj]:
                q = ((int(A[t, jj]) >> a) * u_inv) % mod
                A[:, jj] = (A[:, jj] - q * A[:, t]) % mod
                V[:, jj] = (V[:, jj] - q * V[:, t]) % mod
        diag.append(a)
    Ub = (U @ b) % mod
    y = np.zeros(C, dtype=np.int64)
    for i in range(R):
        a = diag[i] if i < len(diag) else r
        if Ub[i] % (1 << a):
            local = {int(keep[k]): int(v) * (1 << (r - a)) % mod
                     for k, v in enumerate(U[i]) if v}
            return _certificate(system, local, mod, target, _pairing(system, local))
        if i < len(diag):
            u = int(A[i, i]) >> a
            y[i] = ((int(Ub[i]) >> a) * pow(u, -1, mod)) % (1 << (r - a))
    F = (V @ y) % mod
    return _yes(system, FuncTable(int(C).bit_length() - 1, r, F), target)


def decide_coboundary(rho: CocycleHandle, target: Union[str, int] = 'torus', samples: int = 100000,
                      rng=None, exhaustive_limit: int = 1 << 24,
                      system: Optional[EquationSystem] = None) -> CoboundaryVerdict:
    """Is rho = d^{k+1}F for F into the torus (target 'torus') or into (1/2^r)Z/Z (target r)?"""
    rng = np.random.default_rng(rng)
    if system is None:
        system = equations_for(rho, samples, rng, exhaustive_limit)
    log.info('%s: %d distinct equations from %d cubes (%s)', rho.name, len(system.rows),
             system.cubes_seen, 'exhaustive' if system.exhaustive else 'sampled')
    if target == 'torus':
        verdict = solve_torus(system)
    else:
        verdict = solve_mod(system, int(target))
    if verdict.decision == 'no':
        rows = verdict.certificate_rows
        check = verify_certificate(rows, [Fraction(s) for s in verdict.certificate_rhs],
                                   verdict.kernel_vector, verdict.modulus)
        if check is None or Fraction(check) != verdict.pairing.to_fraction():
            raise AssertionError('certificate failed independent verification')
    return verdict
