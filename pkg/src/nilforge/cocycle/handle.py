"""Cocycles on the cubes of a filtered group, and checks of the cocycle axioms."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from ..cubes import (FilteredGroup, enumerate_levels, enumerate_params, param_space_size,
                     params_to_vertices, sample_levels, sample_params, vertices_to_params, weight)
from ..dyadic import DyadicTorus
from ..util.errors import DimensionMismatch
from ..util.text import format_limited


def cube_signs(m: int) -> np.ndarray:
    """(-1)^(m - |omega|) for every vertex of {0,1}^m."""
    return np.array([-1 if (m - weight(w)) & 1 else 1 for w in range(1 << m)], dtype=np.int64)


def permutation_index(m: int, perm) -> np.ndarray:
    """Vertex map of the coordinate permutation sending coordinate i to perm[i]."""
    out = np.zeros(1 << m, dtype=np.int64)
    for w in range(1 << m):
        out[w] = sum(1 << perm[i] for i in range(m) if w >> i & 1)
    return out


@dataclass
class CocycleHandle:
    """A function on the (k+1)-cubes of `space` with values in (1/2^level)Z/Z.

    `evaluator` takes a vertex tuple.  `batch`, when given, maps a (N, 2^(k+1))
    array of vertex tuples to numerators over 2^level.  `equations`, when
    given, supplies cubes for the coboundary solver in place of uniform
    sampling: it is called as equations(rng, samples) and returns vertex rows.
    """

    space: FilteredGroup
    k: int
    evaluator: Callable[[Tuple[int, ...]], DyadicTorus]
    level: int
    name: str = 'rho'
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    equations: Optional[Callable] = None

    def __call__(self, t) -> DyadicTorus:
        return self.evaluator(tuple(int(v) for v in t))

    def evaluate(self, V: np.ndarray) -> np.ndarray:
        """Numerators over 2^level for every row of V."""
        V = np.asarray(V, dtype=np.int64)
        if V.shape[-1] != 1 << (self.k + 1):
            raise DimensionMismatch(f'{V.shape[-1]} vertices for a {self.k}-cocycle')
        if self.batch is not None:
            return np.asarray(self.batch(V), dtype=np.int64) % (1 << self.level)
        return np.array([self(row).at_level(self.level) for row in V], dtype=np.int64)

    @classmethod
    def from_coboundary(cls, space: FilteredGroup, F, k: int, name: str = 'dF') -> CocycleHandle:
        """d^{k+1}F for a table F of numerators indexed by the points of `space`."""
        level = F.level
        values = np.asarray(F.values, dtype=np.int64)
        signs = cube_signs(k + 1)

        def batch(V):
            return (values[V] * signs).sum(axis=-1) % (1 << level)

        def evaluator(t):
            return DyadicTorus(int(batch(np.array(t, dtype=np.int64))), level)

        return cls(space, k, evaluator, level, name, batch)

    @classmethod
    def zero(cls, space: FilteredGroup, k: int) -> CocycleHandle:
        return cls(space, k, lambda t: DyadicTorus.zero(), 0, '0',
                   lambda V: np.zeros(len(V), dtype=np.int64))

    def plus(self, other: CocycleHandle) -> CocycleHandle:
        if other.k != self.k or other.space is not self.space:
            raise DimensionMismatch('cocycles on different cube spaces')
        level = max(self.level, other.level)

        def batch(V):
            a = self.evaluate(V) << (level - self.level)
            b = other.evaluate(V) << (level - other.level)
            return (a + b) % (1 << level)

        return CocycleHandle(self.space, self.k, lambda t: self(t) + other(t), level,
                             f'{self.name}+{other.name}', batch, self.equations)

    def perturbed(self, cube, delta: DyadicTorus) -> CocycleHandle:
        """This cocycle with `delta` added on exactly one vertex tuple."""
        target = tuple(int(v) for v in cube)
        level = max(self.level, delta.level)
        num = delta.at_level(level)

        def evaluator(t):
            value = self(t)
            return value + delta if tuple(t) == target else value

        def batch(V):
            out = self.evaluate(V) << (level - self.level)
            hit = np.all(np.asarray(V) == np.array(target), axis=-1)
            return (out + hit * num) % (1 << level)

        return CocycleHandle(self.space, self.k, evaluator, level, f'{self.name}~', batch,
                             self.equations)


@dataclass
class AxiomReport:
    ok: bool
    exhaustive: bool
    symmetry_checked: int = 0
    concatenation_checked: int = 0
    violation: Optional[dict] = None

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {
            'ok': self.ok,
            'exhaustive': self.exhaustive,
            'symmetry_checked': self.symmetry_checked,
            'concatenation_checked': self.concatenation_checked,
            'violation': self.violation,
        }


def _permutations(m: int, rng):
    """All coordinate permutations when there are at most 120, else the adjacent
    transpositions together with one random permutation."""
    if math.factorial(m) <= 120:
        return [p for p in itertools.permutations(range(m)) if list(p) != list(range(m))]
    perms = []
    for i in range(m - 1):
        p = list(range(m))
        p[i], p[i + 1] = p[i + 1], p[i]
        perms.append(tuple(p))
    perms.append(tuple(int(v) for v in rng.permutation(m)))
    return perms


def _first_mismatch(a: np.ndarray, b: np.ndarray) -> Optional[int]:
    bad = np.flatnonzero(a != b)
    return int(bad[0]) if len(bad) else None


def check_cocycle_axioms(rho: CocycleHandle, samples: int = 100000, rng=None,
                         exhaustive_limit: int = 1 << 24) -> AxiomReport:
    """Check symmetry under coordinate permutations and the concatenation identity
    rho(x, z) = rho(x, y) + rho(y, z)."""
    rng = np.random.default_rng(rng)
    G, k = rho.space, rho.k
    m = k + 1

    exhaustive = param_space_size(G, m) <= exhaustive_limit
    H = enumerate_params(G, m, exhaustive_limit) if exhaustive else sample_params(G, m, rng, samples)
    V = params_to_vertices(G, H)
    base = rho.evaluate(V)
    report = AxiomReport(True, exhaustive)
    for perm in _permutations(m, rng):
        idx = permutation_index(m, perm)
        bad = _first_mismatch(base, rho.evaluate(V[:, idx]))
        report.symmetry_checked += len(V)
        if bad is not None:
            report.ok = False
            report.violation = {
                'kind': 'symmetry',
                'cube': format_limited(V[bad].tolist(), limit=64),
                'permutation': list(perm),
            }
            return report

    # (x, y) is an (k+1)-cube split along its last coordinate; (y, z) extends y
    half = 1 << k
    new_levels = [weight(b) + 1 for b in range(half)]
    total = param_space_size(G, m) * math.prod(G.order(i) for i in new_levels)
    concat_exhaustive = total <= exhaustive_limit
    if concat_exhaustive:
        E = enumerate_levels(G, new_levels, exhaustive_limit)
        Hxy = np.repeat(enumerate_params(G, m, exhaustive_limit), len(E), axis=0)
        E = np.tile(E, (len(Hxy) // len(E), 1))
    else:
        Hxy = sample_params(G, m, rng, samples)
        E = sample_levels(G, new_levels, rng, samples)
    report.concatenation_checked = len(Hxy)
    report.exhaustive = report.exhaustive and concat_exhaustive
    report.violation = concatenation_violation(rho, Hxy, E)
    report.ok = report.violation is None
    return report


def concatenation_violation(rho: CocycleHandle, Hxy: np.ndarray, E: np.ndarray) -> Optional[dict]:
    """First failure of rho(x, z) = rho(x, y) + rho(y, z).

    Rows of `Hxy` parameterize (k+1)-cubes (x, y) split along the last
    coordinate; rows of `E` hold the new parameters of the cube (y, z).
    """
    G, k = rho.space, rho.k
    half = 1 << k
    Vxy = params_to_vertices(G, Hxy)
    x, y = Vxy[:, :half], Vxy[:, half:]
    hy = vertices_to_params(G, y)
    z = params_to_vertices(G, np.concatenate([hy, E], axis=1))[:, half:]
    Vyz = np.concatenate([y, z], axis=1)
    Vxz = np.concatenate([x, z], axis=1)
    lhs = rho.evaluate(Vxz)
    rhs = (rho.evaluate(Vxy) + rho.evaluate(Vyz)) % (1 << rho.level)
    bad = _first_mismatch(lhs, rhs)
    if bad is None:
        return None
    return {
        'kind': 'concatenation',
        'x': x[bad].tolist(),
        'y': y[bad].tolist(),
        'z': z[bad].tolist(),
    }


@dataclass
class HomogeneityReport:
    ok: bool
    exhaustive: bool
    checked: int = 0
    violation: Optional[dict] = field(default=None)

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {'ok': self.ok, 'exhaustive': self.exhaustive, 'checked': self.checked,
                'violation': self.violation}


def direction_cubes(x: np.ndarray, hs: np.ndarray) -> np.ndarray:
    """Vertices x + omega.h of D^1(F_2^n) cubes; hs has one column per direction."""
    m = hs.shape[1]
    V = np.zeros((len(x), 1 << m), dtype=np.int64)
    for w in range(1 << m):
        acc = np.array(x, dtype=np.int64)
        for i in range(m):
            if w >> i & 1:
                acc = acc ^ hs[:, i]
        V[:, w] = acc
    return V


def check_2homog(rho: CocycleHandle, samples: int = 100000, rng=None,
                 exhaustive_limit: int = 1 << 24) -> HomogeneityReport:
    """rho(x; h1, h1, h2, h3, ...) == rho(x; h2, h2, h1, h3, ...) on D^1(F_2^n)."""
    k = rho.k
    if k < 2:
        return HomogeneityReport(True, True)
    G = rho.space
    if not G.xor or G.degree != 1:
        raise DimensionMismatch(f'{G.name} is not D^1(F_2^n)')
    n = G.nbits
    rng = np.random.default_rng(rng)
    exhaustive = n * (k + 1) <= exhaustive_limit.bit_length() - 1
    if exhaustive:
        grid = np.indices((1 << n,) * (k + 1)).reshape(k + 1, -1).T
    else:
        grid = rng.integers(0, 1 << n, size=(samples, k + 1))
    x, h1, h2, rest = grid[:, 0], grid[:, 1:2], grid[:, 2:3], grid[:, 3:]
    a = rho.evaluate(direction_cubes(x, np.concatenate([h1, h1, h2, rest], axis=1)))
    b = rho.evaluate(direction_cubes(x, np.concatenate([h2, h2, h1, rest], axis=1)))
    bad = _first_mismatch(a, b)
    report = HomogeneityReport(bad is None, exhaustive, len(grid))
    if bad is not None:
        report.violation = {
            'x': int(x[bad]),
            'h': grid[bad, 1:].tolist(),
            'values': [str(DyadicTorus(int(a[bad]), rho.level)), str(DyadicTorus(int(b[bad]), rho.level))],
        }
    return report
