"""Finite nilspaces given by their cubes.

A cube of dimension m over a space X is a tuple of 2^m points indexed by the
vertices omega of {0,1}^m, written as bitmasks (bit i-1 of omega is the i-th
coordinate).  Points of a filtered abelian 2-group are machine integers: the
factor Z/2^{r_j} occupies its own run of r_j bits.
"""
from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .util.errors import BudgetExceeded, DimensionMismatch, NotCompletable, PreconditionViolation


def weight(omega: int) -> int:
    return bin(omega).count('1')


class CubeSpace(ABC):
    """A finite space whose structure is its set of cubes."""

    nbits: int

    @property
    def size(self) -> int:
        return 1 << self.nbits

    @abstractmethod
    def is_cube(self, t: Sequence[int]) -> bool:
        ...

    @abstractmethod
    def corner_complete(self, partial: Sequence[int]) -> np.ndarray:
        """Fill in the vertex 1^m of a tuple given on every other vertex."""

    @staticmethod
    def dimension_of(count: int) -> int:
        m = count.bit_length() - 1
        if count <= 0 or count != 1 << m:
            raise DimensionMismatch(f'{count} vertices do not form a cube')
        return m


class FilteredGroup(CubeSpace):
    """A product of cyclic 2-groups Z/2^{r_j} with a filtration by subgroups.

    `levels[i][j] = e` means that G_i meets the j-th factor in 2^e Z/2^{r_j};
    G_i is trivial for every i past the last listed level.
    """

    def __init__(self, factors: Sequence[int], levels: Sequence[Sequence[int]], name: str = ''):
        self.factors = tuple(int(r) for r in factors)
        self.offsets = tuple(itertools.accumulate((0,) + self.factors[:-1]))
        self.nbits = sum(self.factors)
        levels = [tuple(int(e) for e in lv) for lv in levels]
        for lv in levels:
            if len(lv) != len(self.factors):
                raise DimensionMismatch(f'level {lv} for {len(self.factors)} factors')
            if any(not 0 <= e <= r for e, r in zip(lv, self.factors)):
                raise ValueError(f'level {lv} outside factors {self.factors}')
        for lo, hi in zip(levels, levels[1:]):
            if any(a > b for a, b in zip(lo, hi)):
                raise ValueError('filtration is not descending')
        while levels and all(e == r for e, r in zip(levels[-1], self.factors)):
            levels.pop()
        self.levels = levels
        self.xor = all(r == 1 for r in self.factors)
        self.name = name or f'G{self.factors}'
        self._masks = [((1 << r) - 1) << off for r, off in zip(self.factors, self.offsets)]
        self._low = [self._lowmask(i) for i in range(len(levels) + 1)]

    @classmethod
    def degree_filtration(cls, factors: Sequence[int], d: int, name: str = '') -> FilteredGroup:
        """D^d(G): G_i = G for i <= d and trivial afterwards."""
        return cls(factors, [(0,) * len(factors)] * (d + 1), name or f'D^{d}{tuple(factors)}')

    @classmethod
    def klein(cls) -> FilteredGroup:
        """X_2 = D^2(F_2^2), with the point (b1, b2) encoded as b1 + 2 b2."""
        return cls.degree_filtration((1, 1), 2, 'X2')

    @classmethod
    def cube_coordinates(cls, n: int) -> FilteredGroup:
        """D^1(F_2^n)."""
        return cls.degree_filtration((1,) * n, 1, f'D^1(F_2^{n})')

    def edge_group(self) -> FilteredGroup:
        """C^1(G) in the coordinates (x, h) with the edge (x, x+h).

        The i-th level is G_i x G_{i+1}; the point (x, h) is x + h << nbits.
        """
        full = tuple(self.factors)
        lv = [self.level(i) + self.level(i + 1) for i in range(self.degree + 1)]
        return FilteredGroup(full + full, lv, f'C1({self.name})')

    @property
    def degree(self) -> int:
        return len(self.levels) - 1

    def level(self, i: int) -> Tuple[int, ...]:
        if i < len(self.levels):
            return self.levels[i]
        return self.factors

    def _lowmask(self, i: int) -> int:
        return sum(((1 << e) - 1) << off for e, off in zip(self.level(i), self.offsets))

    def lowmask(self, i: int) -> int:
        return self._low[i] if i < len(self._low) else (1 << self.nbits) - 1

    def contains(self, i: int, a) -> np.ndarray:
        return (np.asarray(a) & self.lowmask(i)) == 0

    def contains_all(self, i: int, a) -> bool:
        return bool(np.all(self.contains(i, a)))

    def add(self, a, b):
        if self.xor:
            return a ^ b
        out = 0
        for mask in self._masks:
            out = out | (((a & mask) + (b & mask)) & mask)
        return out

    def sub(self, a, b):
        if self.xor:
            return a ^ b
        out = 0
        for mask in self._masks:
            out = out | (((a & mask) - (b & mask)) & mask)
        return out

    def neg(self, a):
        return self.sub(0, a)

    def generators(self, i: int) -> List[int]:
        """Generators of G_i: 2^{e_ij} in each factor where G_i is nontrivial."""
        return [1 << (off + e) for e, r, off in zip(self.level(i), self.factors, self.offsets) if e < r]

    def order(self, i: int) -> int:
        return 1 << sum(r - e for e, r in zip(self.level(i), self.factors))

    def elements(self, i: int = 0) -> np.ndarray:
        parts = [np.arange(0, 1 << r, 1 << e, dtype=np.int64) << off
                 for e, r, off in zip(self.level(i), self.factors, self.offsets)]
        out = np.zeros(1, dtype=np.int64)
        for p in parts:
            out = (out[:, None] | p[None, :]).ravel()
        return out

    def random(self, i: int, rng, size=None) -> np.ndarray:
        out = np.zeros(() if size is None else size, dtype=np.int64)
        for e, r, off in zip(self.level(i), self.factors, self.offsets):
            if e < r:
                out = out | (rng.integers(0, 1 << (r - e), size=size, dtype=np.int64) << (off + e))
        return out

    def double(self, a):
        return self.add(a, a)

    def is_cube(self, t) -> bool:
        return hk_cube_check(t, self) is not None

    def corner_complete(self, partial) -> np.ndarray:
        return corner_complete(partial, self)

    def __repr__(self) -> str:
        return f'FilteredGroup({self.name}, factors={self.factors}, levels={self.levels})'


@dataclass(frozen=True)
class HKParam:
    """Host-Kra parameters of an m-cube: vertex omega is the sum of h[alpha] over alpha in omega."""

    m: int
    group: FilteredGroup
    h: Tuple[int, ...]

    def __getitem__(self, alpha: int) -> int:
        return self.h[alpha]

    def vertices(self) -> np.ndarray:
        return params_to_vertices(self.group, np.array(self.h, dtype=np.int64))

    def is_valid(self) -> bool:
        return all(self.group.contains(weight(a), v) for a, v in enumerate(self.h))


def _sweep(G: FilteredGroup, V: np.ndarray, inverse: bool) -> np.ndarray:
    """Zeta (or Moebius) transform along the last axis with the group law of G."""
    V = np.array(V, dtype=np.int64)
    m = CubeSpace.dimension_of(V.shape[-1])
    lead = V.shape[:-1]
    for i in range(m):
        step = 1 << i
        W = V.reshape(lead + (-1, 2, step))
        lo = W[..., 0, :]
        hi = W[..., 1, :]
        W[..., 1, :] = G.sub(hi, lo) if inverse else G.add(hi, lo)
        V = W.reshape(lead + (-1,))
    return V


def params_to_vertices(G: FilteredGroup, H) -> np.ndarray:
    return _sweep(G, H, inverse=False)


def vertices_to_params(G: FilteredGroup, V) -> np.ndarray:
    return _sweep(G, V, inverse=True)


def hk_cube_check(t, G: FilteredGroup) -> Optional[HKParam]:
    """The Host-Kra parameters of `t` when it is a cube of G, else None."""
    t = np.asarray(t, dtype=np.int64)
    m = CubeSpace.dimension_of(len(t))
    h = vertices_to_params(G, t)
    for alpha in range(1 << m):
        if not G.contains(weight(alpha), h[alpha]):
            return None
    return HKParam(m, G, tuple(int(v) for v in h))


def cube_mask(G: FilteredGroup, V: np.ndarray) -> np.ndarray:
    """Row-wise cube membership for a (N, 2^m) array of vertex tuples."""
    H = vertices_to_params(G, V)
    m = CubeSpace.dimension_of(H.shape[-1])
    lows = np.array([G.lowmask(weight(a)) for a in range(1 << m)], dtype=np.int64)
    return np.all((H & lows) == 0, axis=-1)


def corner_complete(partial, G: FilteredGroup) -> np.ndarray:
    """Complete an m-corner with the canonical choice h_{1^m} = 0."""
    partial = np.asarray(partial, dtype=np.int64)
    m = CubeSpace.dimension_of(len(partial) + 1)
    padded = np.append(partial, 0)
    h = vertices_to_params(G, padded)
    top = (1 << m) - 1
    for alpha in range(top):
        if not G.contains(weight(alpha), h[alpha]):
            raise NotCompletable(f'face through 0 at {alpha:0{m}b} is not a cube')
    h[top] = 0
    return params_to_vertices(G, h)


def param_space_size(G: FilteredGroup, m: int) -> int:
    return math.prod(G.order(weight(a)) for a in range(1 << m))


def enumerate_levels(G: FilteredGroup, levels: Sequence[int], limit: int = 1 << 24) -> np.ndarray:
    """All rows whose j-th entry lies in G_{levels[j]}, as a (N, len(levels)) array."""
    total = math.prod(G.order(i) for i in levels)
    if total > limit:
        raise BudgetExceeded(f'{total} parameterizations exceed the limit {limit}', total)
    out = np.zeros((1, len(levels)), dtype=np.int64)
    for j, i in enumerate(levels):
        elems = G.elements(i)
        rep = np.repeat(out, len(elems), axis=0)
        rep[:, j] = np.tile(elems, len(out))
        out = rep
    return out


def sample_levels(G: FilteredGroup, levels: Sequence[int], rng, size: int) -> np.ndarray:
    H = np.zeros((size, len(levels)), dtype=np.int64)
    for j, i in enumerate(levels):
        H[:, j] = G.random(i, rng, size)
    return H


def enumerate_params(G: FilteredGroup, m: int, limit: int = 1 << 24) -> np.ndarray:
    """Every HK parameter vector of an m-cube, as rows of a (N, 2^m) array."""
    return enumerate_levels(G, [weight(a) for a in range(1 << m)], limit)


def sample_params(G: FilteredGroup, m: int, rng, size: int) -> np.ndarray:
    return sample_levels(G, [weight(a) for a in range(1 << m)], rng, size)


class TorusTarget:
    """D^degree((1/2^level)Z/Z) as a morphism target; values are numerators."""

    def __init__(self, degree: int, level: int):
        self.degree = degree
        self.level = level

    def sub(self, a, b):
        return (a - b) % (1 << self.level)

    def contains_all(self, i: int, a) -> bool:
        return i <= self.degree or not np.any(a)


def morphism_check(f, G: FilteredGroup, H) -> bool:
    """True iff f: G -> H preserves cubes.

    `f` is an array of H-values indexed by the encoding of G.  Iterated
    derivatives along generators of G_{i_1}, ..., G_{i_m} must land in
    H_{i_1 + ... + i_m}; derivatives along G_0 add nothing and are skipped.
    """
    f = np.asarray(getattr(f, 'values', f), dtype=np.int64)
    if f.shape != (G.size,):
        raise DimensionMismatch(f'map of shape {f.shape} on a group of order {G.size}')
    idx = np.arange(G.size, dtype=np.int64)
    gens = [(i, g) for i in range(1, G.degree + 1) for g in G.generators(i)]
    shifts = [G.add(idx, g) for _, g in gens]

    def dfs(table, start, s):
        if not H.contains_all(s, table):
            return False
        if s > H.degree:
            return True
        for pos in range(start, len(gens)):
            nxt = H.sub(table[shifts[pos]], table)
            if not dfs(nxt, pos, s + gens[pos][0]):
                return False
        return True

    return dfs(f, 0, 0)


def phom_check(G: FilteredGroup) -> bool:
    """True iff 2 G_i <= G_{i+1} for every i >= 1."""
    if G.levels and any(G.level(1)):
        raise PreconditionViolation(f'{G.name} is not ergodic (G_1 != G_0)')
    for i in range(1, G.degree + 1):
        if not all(G.contains(i + 1, G.double(g)) for g in G.generators(i)):
            return False
    return True


class ProductSpace(CubeSpace):
    """X x Y with the product cube structure; (x, y) is encoded x + y << X.nbits."""

    def __init__(self, left: CubeSpace, right: CubeSpace):
        self.left = left
        self.right = right
        self.nbits = left.nbits + right.nbits

    def split(self, t):
        t = np.asarray(t, dtype=np.int64)
        return t & ((1 << self.left.nbits) - 1), t >> self.left.nbits

    def join(self, a, b):
        return np.asarray(a, dtype=np.int64) | (np.asarray(b, dtype=np.int64) << self.left.nbits)

    def is_cube(self, t) -> bool:
        a, b = self.split(t)
        return self.left.is_cube(a) and self.right.is_cube(b)

    def corner_complete(self, partial) -> np.ndarray:
        a, b = self.split(partial)
        return self.join(self.left.corner_complete(a), self.right.corner_complete(b))


def faces(m: int, dim: int):
    """Every dim-dimensional face of {0,1}^m, as the list of its vertices in face order."""
    for free in itertools.combinations(range(m), dim):
        rest = [i for i in range(m) if i not in free]
        for fixed in range(1 << len(rest)):
            base = sum(1 << rest[j] for j in range(len(rest)) if fixed >> j & 1)
            yield [base | sum(1 << free[j] for j in range(dim) if w >> j & 1) for w in range(1 << dim)]


class SkewSpace(CubeSpace):
    """The skew product of `base` with (1/2^fiber_level)Z/Z twisted by a k-cocycle.

    A point (x, z) is encoded x + z << base.nbits, z a numerator over
    2^fiber_level.  A tuple is a cube when its base is a cube and on every
    (k+1)-face the alternating sum of z equals the cocycle of the base face.
    """

    def __init__(self, base: CubeSpace, fiber_level: int, cocycle, k: int):
        if cocycle.k != k:
            raise DimensionMismatch(f'cocycle of order {cocycle.k} for a {k}-step extension')
        self.base = base
        self.fiber_level = fiber_level
        self.cocycle = cocycle
        self.k = k
        self.nbits = base.nbits + fiber_level

    def split(self, t):
        t = np.asarray(t, dtype=np.int64)
        return t & ((1 << self.base.nbits) - 1), t >> self.base.nbits

    def join(self, x, z):
        return (np.asarray(x, dtype=np.int64)
                | ((np.asarray(z, dtype=np.int64) % (1 << self.fiber_level)) << self.base.nbits))

    def face_defect(self, x, z, face) -> int:
        """Alternating sum of z over the face minus the cocycle, as a numerator."""
        L = self.fiber_level
        total = 0
        for w, omega in enumerate(face):
            sign = -1 if (self.k + 1 - weight(w)) & 1 else 1
            total += sign * int(z[omega])
        value = self.cocycle(tuple(int(x[omega]) for omega in face))
        return (total - value.at_level(L)) % (1 << L)

    def is_cube(self, t) -> bool:
        return skew_cube_check(t, self)

    def corner_complete(self, partial) -> np.ndarray:
        x, z = self.split(partial)
        m = CubeSpace.dimension_of(len(partial) + 1)
        xs = self.base.corner_complete(x)
        zs = np.append(z, 0)
        top = (1 << m) - 1
        if m >= self.k + 1:
            face = _solving_face(top, self.k)
            zs[top] = 0
            zs[top] = (-self.face_defect(xs, zs, face)) % (1 << self.fiber_level)
        out = self.join(xs, zs)
        if not self.is_cube(out):
            raise NotCompletable('corner does not extend to a cube of the skew product')
        return out


def _solving_face(omega: int, k: int) -> List[int]:
    """The (k+1)-face topped by omega: its lowest k+1 coordinates free, the rest fixed at 1."""
    support = [i for i in range(omega.bit_length()) if omega >> i & 1]
    free, fixed = support[:k + 1], support[k + 1:]
    base = sum(1 << i for i in fixed)
    return [base | sum(1 << free[j] for j in range(k + 1) if w >> j & 1) for w in range(1 << (k + 1))]


def skew_cube_check(t, S: SkewSpace) -> bool:
    x, z = S.split(t)
    m = CubeSpace.dimension_of(len(x))
    if not S.base.is_cube(x):
        return False
    for face in faces(m, S.k + 1):
        if S.face_defect(x, z, face):
            return False
    return True


def skew_lift(base_cube, S: SkewSpace) -> np.ndarray:
    """Lift a cube of the base to the skew product, solving face by face in weight order."""
    x = np.asarray(base_cube, dtype=np.int64)
    m = CubeSpace.dimension_of(len(x))
    if not S.base.is_cube(x):
        raise PreconditionViolation('base tuple is not a cube')
    z = np.zeros(1 << m, dtype=np.int64)
    for omega in sorted(range(1 << m), key=lambda w: (weight(w), w)):
        if weight(omega) < S.k + 1:
            continue
        face = _solving_face(omega, S.k)
        z[omega] = (-S.face_defect(x, z, face)) % (1 << S.fiber_level)
    return S.join(x, z)
