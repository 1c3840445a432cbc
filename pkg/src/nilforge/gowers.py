"""Gowers uniformity norms of phases e(f) on F_2^n.

For a phase f into (1/2^L)Z/Z the product over a cube with alternating
conjugation is e(±d^{k+1} f), so

    ||e(f)||_{U^{k+1}}^{2^{k+1}} = E_{x, h_1..h_{k+1}} e(d^{k+1} f(x; h)).

The naive engine counts the numerators of d^{k+1} f exactly and takes cosines
once at the end; the recursive engine uses ||f||_{U^m}^{2^m} = E_h ||Δ_h f||_{U^{m-1}}^{2^{m-1}}
down to |E e(g)|^2.  The two share no code past the phase table.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from .dyadic import e_phase_array
from .poly import FuncTable, PolyRep, degree_test
from .util.errors import BudgetExceeded, DimensionMismatch
from .util.parallel import parallel_map

NAIVE_LIMIT_BITS = 30
RECURSIVE_LIMIT_BITS = 34
GRID_LIMIT_BITS = 24


def as_phase(f) -> FuncTable:
    """The table of a phase given as a FuncTable, PolyRep or PseudoQuintic."""
    if isinstance(f, FuncTable):
        return f
    if isinstance(f, PolyRep):
        return f.to_table()
    if hasattr(f, 'func_table'):
        return f.func_table()
    raise TypeError(f'cannot read {type(f).__name__} as a phase')


def _directions(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


def gowers_norm_naive(f, k: int) -> float:
    """||e(f)||_{U^{k+1}} by enumerating every (x, h_1, ..., h_{k+1})."""
    f = as_phase(f)
    n, L = f.n, f.level
    if k < 0:
        raise ValueError(f'U^{k + 1} is not a norm')
    if (k + 2) * n > NAIVE_LIMIT_BITS:
        raise BudgetExceeded(f'2^{(k + 2) * n} tuples exceed 2^{NAIVE_LIMIT_BITS}', 1 << ((k + 2) * n))
    mod = 1 << L
    if k == 0:
        return abs(complex(e_phase_array(f.values, L).mean()))
    idx = _directions(n)
    # the last two directions on one grid for small n, otherwise a in a loop over an (x, b) grid
    outer = [0] if 3 * n <= GRID_LIMIT_BITS else list(range(1 << n))
    if outer == [0]:
        x, a, b = idx[:, None, None], idx[None, :, None], idx[None, None, :]
    else:
        x, a, b = idx[:, None], 0, idx[None, :]
    xa, xb, xab = x ^ a, x ^ b, x ^ a ^ b
    hist = np.zeros(mod, dtype=np.int64)

    def leaf(g):
        for c in outer:
            d2 = (g[xab ^ c] - g[xa ^ c] - g[xb] + g[x]) % mod
            hist[:] += np.bincount(d2.ravel(), minlength=mod)

    def dfs(g, depth):
        if depth == k - 1:
            leaf(g)
            return
        for h in range(1 << n):
            dfs((g[idx ^ h] - g) % mod, depth + 1)

    dfs(f.values % mod, 0)
    total = int(hist.sum())
    mean = math.fsum(int(c) * math.cos(2 * math.pi * v / mod) for v, c in enumerate(hist) if c) / total
    return max(mean, 0.0) ** (1.0 / (1 << (k + 1)))


def _power_recursive(g: np.ndarray, m: int, n: int, mod: int) -> float:
    """||e(g)||_{U^m}^{2^m}."""
    idx = _directions(n)
    if m == 1:
        return abs(complex(e_phase_array(g, mod.bit_length() - 1).mean())) ** 2
    if m == 2:
        level = mod.bit_length() - 1
        if n <= 10:
            D = (g[idx[None, :] ^ idx[:, None]] - g[None, :]) % mod
            inner = e_phase_array(D, level).mean(axis=1)
        else:
            inner = np.array([complex(e_phase_array((g[idx ^ h] - g) % mod, level).mean())
                              for h in range(1 << n)])
        return float(np.mean(np.abs(inner) ** 2))
    return math.fsum(_power_recursive((g[idx ^ h] - g) % mod, m - 1, n, mod)
                     for h in range(1 << n)) / (1 << n)


def gowers_norm_recursive(f, k: int, threads: int = 1) -> float:
    """||e(f)||_{U^{k+1}} by recursion on the number of directions, parallel over the first."""
    f = as_phase(f)
    n, L = f.n, f.level
    if k < 0:
        raise ValueError(f'U^{k + 1} is not a norm')
    if (k + 1) * n > RECURSIVE_LIMIT_BITS:
        raise BudgetExceeded(f'about 2^{(k + 1) * n} steps exceed 2^{RECURSIVE_LIMIT_BITS}',
                             1 << ((k + 1) * n))
    mod = 1 << L
    g = f.values % mod
    if k == 0:
        return abs(complex(e_phase_array(g, L).mean()))
    m = k + 1
    if m == 2:
        value = _power_recursive(g, 2, n, mod)
    else:
        idx = _directions(n)
        parts = parallel_map(lambda h: _power_recursive((g[idx ^ h] - g) % mod, m - 1, n, mod),
                             range(1 << n), threads)
        value = math.fsum(parts) / (1 << n)
    return max(value, 0.0) ** (1.0 / (1 << m))


def gowers_norm(f, k: int, engine: str = 'naive', threads: int = 1) -> float:
    if engine == 'naive':
        return gowers_norm_naive(f, k)
    if engine == 'recursive':
        return gowers_norm_recursive(f, k, threads)
    raise ValueError(f'unknown engine {engine!r}')


def poly_norm_one_certificate(P: PolyRep, k: int) -> bool:
    """||e(P)||_{U^{k+1}} = 1 exactly when d^{k+1} P = 0."""
    return degree_test(P, k)


def _difference(f, P) -> FuncTable:
    f, p = as_phase(f), as_phase(P)
    if f.n != p.n:
        raise DimensionMismatch(f'phase on F_2^{f.n} against a polynomial on F_2^{p.n}')
    return f - p


def correlation(f, P) -> float:
    """|E_x e(f(x) - P(x))|."""
    d = _difference(f, P)
    return abs(complex(d.e_phase().mean()))


def correlation_exact(f, P) -> Optional[Fraction]:
    """The same value as a rational when f - P takes values in (1/2)Z/Z, else None."""
    d = _difference(f, P).normalized()
    if d.level > 1:
        return None
    ones = int(d.values.sum())
    return abs(Fraction((1 << d.n) - 2 * ones, 1 << d.n))


def limiting_constant(terms: Optional[np.ndarray] = None) -> Tuple[Fraction, float]:
    """E e(rho) over uniform pair parameters, and its 64th root.

    Averaging over the second coordinates leaves the probability, over the
    first coordinates of the 15 pair parameters, that for every pair s the
    sum of h_p h_q over the terms reading s in the second coordinate is even.
    """
    if terms is None:
        from .rho import default
        terms = default().terms
    H = (np.arange(1 << 15, dtype=np.int64)[:, None] >> np.arange(15)) & 1
    C = np.zeros_like(H)
    for p, q, s in terms:
        C[:, s] += H[:, p] * H[:, q]
    good = int(np.all(C % 2 == 0, axis=1).sum())
    mean = Fraction(good, 1 << 15)
    return mean, float(mean) ** (1.0 / 64)


def translate(f, a: int) -> FuncTable:
    return as_phase(f).shift(a)


def norms_of_samples(n: int, count: int, rng, k: int = 5, r: int = 5) -> list:
    """U^{k+1} norms of e(S) for sampled n-cubes (Q, S) of X_{5,r}."""
    from .x5r import sample_ncube

    rng = np.random.default_rng(rng)
    out = []
    for _ in range(count):
        _, S = sample_ncube(n, r, rng)
        out.append(gowers_norm_recursive(S, k))
    return out