"""Constructive potentials for cocycles on D^1(F_2^n).

A 2-homogeneous k-cocycle rho is written as d^{k+1}F by a double induction:
on k, fixing the first direction h and solving the (k-1)-cocycle rho_h; then
on n, gluing the family F_h into a single F along the top coordinate.  Every
answer is re-checked against rho on all cubes before it is returned.
"""
from __future__ import annotations

import logging
from typing import List

import numpy as np

from ..cubes import FilteredGroup, TorusTarget, morphism_check
from ..poly import FuncTable, PolyRep, invert_one_plus_shift
from ..util.errors import (BudgetExceeded, DegreeViolation, DimensionMismatch,
                           PreconditionViolation, VerificationFailure)
from .handle import CocycleHandle, cube_signs, direction_cubes

log = logging.getLogger(__name__)


def _require_cube_coordinates(rho: CocycleHandle) -> int:
    G = rho.space
    if not G.xor or G.degree != 1:
        raise DimensionMismatch(f'{G.name} is not D^1(F_2^n)')
    return G.nbits


def direction_grid(n: int, k: int, limit: int):
    """All (h_1, ..., h_{k+1}, x) with their cube vertices, h_1 varying slowest."""
    m = k + 1
    total = (1 << (n * (m + 1))) << m
    if total > limit:
        raise BudgetExceeded(f'{total} vertex evaluations exceed the limit {limit}', total)
    grid = np.indices((1 << n,) * (m + 1)).reshape(m + 1, -1).T
    return grid, direction_cubes(grid[:, m], grid[:, :m])


def _bounded(A: FuncTable, d: int, n: int, k: int) -> PolyRep:
    try:
        return PolyRep.from_table(A, d)
    except DegreeViolation as exc:
        raise PreconditionViolation(
            f'unsolvable step at n={n}, k={k}: (1+T^e)F_e has degree above {d}',
            diagnostic={'n': n, 'k': k, 'index_set': exc.index_set, 'value': str(exc.value)},
        ) from None


def solve_phi(family: List[FuncTable], n: int, k: int) -> FuncTable:
    """phi with F_h - ∂_h phi of degree at most k-1 for every h in the family.

    `family[h]` must be given for 0 <= h <= 2^(n-1).
    """
    if n == 0:
        return FuncTable.zeros(0)
    e = 1 << (n - 1)
    Fe = family[e]
    A = Fe + Fe.shift(e)
    if k == 1:
        # F_e is only fixed up to a constant c, and c moves A by 2c
        Fe = Fe - _bounded(A, 0, n, k).exact_root().to_table()
        A = Fe + Fe.shift(e)
    Ap = _bounded(A, k - 2, n, k)
    Fpe = invert_one_plus_shift(Ap, e).to_table()
    D = Fe - Fpe
    level = D.level
    phi = np.zeros(1 << n, dtype=np.int64)
    phi[e:] = D.values[:e]
    phi = FuncTable(n, level, phi)
    if n > 1:
        # on x_n = 0 the residual family agrees with its e-invariant part
        rest = [family[h] - Fpe - phi.derivative(h) for h in range((e >> 1) + 1)]
        sub = [FuncTable(n - 1, t.level, t.values[:e]) for t in rest]
        inner = solve_phi(sub, n - 1, k)
        lifted = FuncTable(n, inner.level, np.concatenate([inner.values, inner.values]))
        return phi + lifted
    return phi


def _potential(R: np.ndarray, level: int, n: int, k: int) -> FuncTable:
    if k == 0:
        return FuncTable(n, level, R[:, 0])
    count = (1 << (n - 1)) + 1 if n else 1
    family = [_potential(R[h], level, n, k - 1) for h in range(count)]
    return solve_phi(family, n, k)


def potential_finder(rho: CocycleHandle, limit: int = 1 << 24) -> FuncTable:
    """F with d^{k+1}F = rho for a 2-homogeneous k-cocycle rho on D^1(F_2^n)."""
    n = _require_cube_coordinates(rho)
    k = rho.k
    grid, V = direction_grid(n, k, limit)
    values = rho.evaluate(V)
    R = values.reshape((1 << n,) * (k + 2))
    F = _potential(R, rho.level, n, k).normalized()
    bad = _mismatch(F, V, values, rho.level, k)
    if bad is not None:
        raise PreconditionViolation(
            'potential does not reproduce the cocycle; input is not a 2-homogeneous cocycle',
            diagnostic={'x': int(grid[bad, -1]), 'h': grid[bad, :-1].tolist()},
        )
    log.info('%s: potential at level %d (input level %d)', rho.name, F.level, rho.level)
    return F


def _mismatch(F: FuncTable, V: np.ndarray, values: np.ndarray, level: int, k: int):
    L = max(F.level, level)
    f = F.with_level(L).values
    lhs = (f[V] * cube_signs(k + 1)).sum(axis=1) % (1 << L)
    rhs = (values << (L - level)) % (1 << L)
    bad = np.flatnonzero(lhs != rhs)
    return int(bad[0]) if len(bad) else None


def edge_derivative(psi: FuncTable, V: np.ndarray, k: int) -> np.ndarray:
    """d^k psi on the cubes V of D^1(F_2^n), each read as a k-cube of edges along its top coordinate.

    Points of C^1 are x + (h << n) for the edge (x, x + h).
    """
    n = psi.n // 2
    half = 1 << k
    x = V[:, :half]
    h = V[:, half:] ^ x
    return (psi.values[x | (h << n)] * cube_signs(k)).sum(axis=1) % (1 << psi.level)


def strong_potential_finder(rho: CocycleHandle, psi: FuncTable, limit: int = 1 << 24) -> FuncTable:
    """F valued in (1/2)Z/Z with d^{k+1}F = rho, given rho = d^k psi and 2 psi of degree k-2 on C^1."""
    n = _require_cube_coordinates(rho)
    k = rho.k
    if k < 3:
        raise PreconditionViolation(f'strong 2-homogeneity needs k >= 3, got k={k}')
    if rho.level > 1:
        raise PreconditionViolation(f'cocycle takes values at level {rho.level}, expected 1/2 Z/Z')
    if psi.n != 2 * n:
        raise DimensionMismatch(f'edge function on {psi.n} bits, expected {2 * n}')
    grid, V = direction_grid(n, k, limit)
    values = rho.evaluate(V)
    L = max(psi.level, rho.level)
    dpsi = edge_derivative(psi.with_level(L), V, k)
    bad = np.flatnonzero(dpsi != (values << (L - rho.level)) % (1 << L))
    if len(bad):
        i = int(bad[0])
        raise PreconditionViolation('rho differs from d^k psi',
                                    diagnostic={'x': int(grid[i, -1]), 'h': grid[i, :-1].tolist()})
    edges = FilteredGroup.cube_coordinates(n).edge_group()
    twice = (2 * psi.values) % (1 << psi.level)
    if not morphism_check(twice, edges, TorusTarget(k - 2, psi.level)):
        raise PreconditionViolation(f'2 psi is not a polynomial of degree {k - 2} on C^1')

    F = potential_finder(rho, limit)
    try:
        twoF = PolyRep.from_table(F * 2, k - 1)
    except DegreeViolation as exc:
        raise VerificationFailure(f'2F is not of degree {k - 1}', witness=exc.index_set) from None
    out = (F - twoF.exact_root().to_table()).normalized()
    if out.level > 1:
        raise VerificationFailure(f'corrected potential still at level {out.level}', witness=out)
    if _mismatch(out, V, values, rho.level, k) is not None:
        raise VerificationFailure('corrected potential does not reproduce the cocycle', witness=out)
    return out
