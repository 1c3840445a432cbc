"""The nilspaces X_{5,r} = X2 x (1/2^r)Z/Z.

An n-cube of X_{5,r} is a pair (Q, S) of maps on F_2^n: Q = (Q1, Q2) a pair of
classical quadratics, read as a map into the Klein nilspace, and S into
(1/2^r)Z/Z with d^6 S = Q*rho.  Every such S lies in the coset

    S = binom2(R) Q2 / 2 + P,   P of degree at most 5,

where R: F_2^n -> Z/4Z is a cubic with R = Q1 mod 2.  PseudoQuintic stores
S in that structural form.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import rho as rho_mod
from .cocycle.handle import cube_signs, direction_cubes
from .cubes import SkewSpace, corner_complete, skew_cube_check
from .dyadic import DyadicTorus, binom2_array, check_level
from .poly import FuncTable, PolyRep, Z4Poly, degree_test, popcounts, random_poly
from .util.errors import DegreeViolation, DimensionMismatch, NotCompletable, PreconditionViolation

MAX_R = 5
SAMPLED_TUPLES = 10000


def _classical_quadratic(q: PolyRep, name: str) -> PolyRep:
    if not q.is_classical():
        raise PreconditionViolation(f'{name} takes values at level {q.level}, expected F_2')
    if not degree_test(q, 2):
        raise PreconditionViolation(f'{name} is not quadratic')
    return q if q.d == 2 else PolyRep.from_table(q.to_table().with_level(1), 2)


@dataclass(frozen=True)
class X5Point:
    q: int
    s: DyadicTorus


@dataclass(frozen=True)
class QuadPair:
    """Q = (Q1, Q2), a map F_2^n -> X2 with x -> Q1(x) + 2 Q2(x)."""

    q1: PolyRep
    q2: PolyRep

    def __post_init__(self):
        if self.q1.n != self.q2.n:
            raise DimensionMismatch(f'quadratics on F_2^{self.q1.n} and F_2^{self.q2.n}')
        object.__setattr__(self, 'q1', _classical_quadratic(self.q1, 'Q1'))
        object.__setattr__(self, 'q2', _classical_quadratic(self.q2, 'Q2'))

    @property
    def n(self) -> int:
        return self.q1.n

    def table(self) -> np.ndarray:
        a = self.q1.to_table().with_level(1).values
        b = self.q2.to_table().with_level(1).values
        return a | (b << 1)

    @classmethod
    def from_table(cls, n: int, values) -> QuadPair:
        values = np.asarray(values, dtype=np.int64)
        q1 = PolyRep.from_table(FuncTable(n, 1, values & 1), 2)
        q2 = PolyRep.from_table(FuncTable(n, 1, values >> 1 & 1), 2)
        return cls(q1, q2)

    @classmethod
    def random(cls, n: int, rng) -> QuadPair:
        return cls(random_poly(n, 2, 1, rng), random_poly(n, 2, 1, rng))


class PseudoQuintic:
    """S = binom2(R) Q2 / 2 + P into (1/2^r)Z/Z."""

    def __init__(self, R: Z4Poly, q2: PolyRep, P: PolyRep, r: int):
        if not 1 <= r <= MAX_R:
            raise DimensionMismatch(f'r={r} outside 1..{MAX_R}')
        if not (R.n == q2.n == P.n):
            raise DimensionMismatch('R, Q2 and P live on different dimensions')
        if P.level > r:
            raise DimensionMismatch(f'quintic part at level {P.level} exceeds r={r}')
        if not degree_test(P, 5):
            raise PreconditionViolation('P is not of degree at most 5')
        self.R = R
        self.q2 = _classical_quadratic(q2, 'Q2')
        self.P = P
        self.r = r
        self._table: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.R.n

    @property
    def quad_pair(self) -> QuadPair:
        return QuadPair(PolyRep.from_table(FuncTable(self.n, 1, self.R.table() & 1), 2), self.q2)

    def structural_table(self) -> np.ndarray:
        """binom2(R) Q2 / 2 as numerators over 2^r."""
        q2 = self.q2.to_table().with_level(1).values
        return (self.R.binom2_table() * q2) << (self.r - 1)

    def table(self) -> np.ndarray:
        if self._table is None:
            self._table = (self.structural_table()
                           + self.P.to_table().with_level(self.r).values) % (1 << self.r)
        return self._table

    def func_table(self) -> FuncTable:
        return FuncTable(self.n, self.r, self.table())

    def eval(self, x: int) -> DyadicTorus:
        if not 0 <= x < (1 << self.n):
            raise DimensionMismatch(f'point {x} outside F_2^{self.n}')
        q2 = self.q2.eval(x).at_level(1)
        top = ((self.R.eval(x) >> 1) & 1) * q2
        return DyadicTorus(top, 1) + self.P.eval(x)

    __call__ = eval

    def vertex(self, x: int) -> X5Point:
        q = (self.R.eval(x) & 1) | (self.q2.eval(x).at_level(1) << 1)
        return X5Point(q, self.eval(x))

    def with_quintic(self, P: PolyRep) -> PseudoQuintic:
        return PseudoQuintic(self.R, self.q2, P, self.r)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PseudoQuintic):
            return NotImplemented
        return (self.n, self.r) == (other.n, other.r) and np.array_equal(self.table(), other.table())

    __hash__ = None

    def __repr__(self) -> str:
        return f'PseudoQuintic(n={self.n}, r={self.r})'


@dataclass
class CubeCheck:
    ok: bool
    exhaustive: bool
    checked: int = 0
    violation: Optional[dict] = field(default=None)

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {'ok': self.ok, 'exhaustive': self.exhaustive, 'checked': self.checked,
                'violation': self.violation}


def _s_table(S, r: int, n: int) -> np.ndarray:
    if isinstance(S, PseudoQuintic):
        if S.r != r:
            raise DimensionMismatch(f'S at r={S.r}, expected r={r}')
        values = S.table()
    elif isinstance(S, FuncTable):
        if S.level > r:
            raise DimensionMismatch(f'S at level {S.level} exceeds r={r}')
        values = S.with_level(r).values
    else:
        values = np.asarray(S, dtype=np.int64) % (1 << r)
    if values.shape != (1 << n,):
        raise DimensionMismatch(f'S of shape {values.shape} for n={n}')
    return values


def pullback_defect(qtable: np.ndarray, stable: np.ndarray, r: int, grid: np.ndarray,
                    cx: Optional[rho_mod.Counterexample] = None) -> np.ndarray:
    """d^6 S - Q*rho on the 6-cubes (x, h_1..h_6) given by the rows of `grid`."""
    cx = cx or rho_mod.default()
    V = direction_cubes(grid[:, 0], grid[:, 1:])
    lhs = (stable[V] * cube_signs(6)).sum(axis=1) % (1 << r)
    rhs = cx.batch(qtable[V]) << (r - 1)
    return (lhs - rhs) % (1 << r)


def x5_cube_check(Q: QuadPair, S, r: int = MAX_R, samples: int = SAMPLED_TUPLES, rng=None,
                  cx: Optional[rho_mod.Counterexample] = None) -> CubeCheck:
    """Is (Q, S) an n-cube of X_{5,r}?  Every (x, h_1..h_6) is tried for n <= 2."""
    check_level(r)
    n = Q.n
    stable = _s_table(S, r, n)
    if not (degree_test(Q.q1, 2) and degree_test(Q.q2, 2)):
        return CubeCheck(False, True, 0, {'kind': 'Q not quadratic'})
    exhaustive = 7 * n <= 14
    if exhaustive:
        grid = np.indices((1 << n,) * 7).reshape(7, -1).T
    else:
        rng = np.random.default_rng(rng)
        grid = rng.integers(0, 1 << n, size=(samples, 7))
    defect = pullback_defect(Q.table(), stable, r, grid, cx)
    bad = np.flatnonzero(defect)
    report = CubeCheck(len(bad) == 0, exhaustive, len(grid))
    if len(bad):
        i = int(bad[0])
        report.violation = {'x': int(grid[i, 0]), 'h': grid[i, 1:].tolist(),
                            'defect': str(DyadicTorus(int(defect[i]), r))}
    return report


def build_R(q1: PolyRep) -> Z4Poly:
    """A cubic R: F_2^n -> Z/4Z with R = Q1 mod 2.

    The coefficientwise lift is cubic: x_i x_j / 4 has degree 3 and x_i / 4 degree 2.
    """
    q1 = _classical_quadratic(q1, 'Q1')
    R = Z4Poly.lift_classical(q1)
    R.certify_cubic()
    return R


def lift(Q: QuadPair, r: int = MAX_R) -> PseudoQuintic:
    """The canonical S0 = binom2(R) Q2 / 2 with zero quintic part."""
    return PseudoQuintic(build_R(Q.q1), Q.q2, PolyRep.zero(Q.n, 5, r), r)


def sample_ncube(n: int, r: int = MAX_R, rng=None, method: str = 'structural') -> Tuple[QuadPair, PseudoQuintic]:
    """A uniformly random n-cube of X_{5,r}."""
    rng = np.random.default_rng(rng)
    if method == 'structural':
        Q = QuadPair.random(n, rng)
        R = build_R(Q.q1)
    elif method == 'alternate':
        Rp = random_poly(n, 3, 2, rng)
        R = Z4Poly.from_values(n, Rp.to_table().with_level(2).values)
        Q = QuadPair(PolyRep.from_table(FuncTable(n, 1, R.table() & 1), 2), random_poly(n, 2, 1, rng))
    else:
        raise ValueError(f'unknown sampling method {method!r}')
    P = random_poly(n, 5, r, rng)
    return Q, PseudoQuintic(R, Q.q2, P, r)


def quintic_completion(values: np.ndarray, n: int, r: int) -> np.ndarray:
    """Fill the top vertex of a function on {0,1}^n so its top Moebius coefficient vanishes,
    then check the result has degree at most 5."""
    mod = 1 << r
    full = np.append(np.asarray(values, dtype=np.int64) % mod, 0)
    top = (1 << n) - 1
    signs = np.where((n - popcounts(n)) & 1, -1, 1)
    full[top] = (-(signs[:top] * full[:top]).sum()) % mod
    try:
        PolyRep.from_table(FuncTable(n, r, full), 5)
    except DegreeViolation as exc:
        raise NotCompletable(f'quintic correction has a term on {exc.index_set}') from None
    return full


def x5_corner_complete(q_partial, s_partial, r: int = MAX_R) -> Tuple[QuadPair, PseudoQuintic, np.ndarray]:
    """Complete an n-corner of X_{5,r} given as Klein values and numerators over 2^r on
    every vertex but the top one.

    Returns the completed Q, the lift S0 of Q and the full table of S.
    """
    q_partial = np.asarray(q_partial, dtype=np.int64)
    s_partial = np.asarray(s_partial, dtype=np.int64)
    if len(q_partial) != len(s_partial):
        raise DimensionMismatch('Q and S corners of different sizes')
    n = (len(q_partial) + 1).bit_length() - 1
    if len(q_partial) + 1 != 1 << n:
        raise DimensionMismatch(f'{len(q_partial)} vertices do not form a corner')
    q = corner_complete(q_partial, rho_mod.X2)
    Q = QuadPair.from_table(n, q)
    S0 = lift(Q, r)
    base = S0.table()
    D = quintic_completion(s_partial - base[:-1], n, r)
    return Q, S0, (base + D) % (1 << r)


@dataclass
class SkewReport:
    ok: bool
    cubes: int
    perturbed: int
    disagreements: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {'ok': self.ok, 'cubes': self.cubes, 'perturbed': self.perturbed,
                'disagreements': self.disagreements}


def skew_identification_check(n: int = 6, samples: int = 4, rng=None) -> SkewReport:
    """For r = 1, membership in X_{5,1} agrees with membership in the skew product
    X2 x_rho (1/2)Z/Z, on sampled cubes and on single-vertex perturbations of them."""
    if n < 6:
        raise PreconditionViolation(f'the face condition needs n >= 6, got n={n}')
    rng = np.random.default_rng(rng)
    space = SkewSpace(rho_mod.X2, 1, rho_mod.rho_handle(), 5)
    report = SkewReport(True, 0, 0)
    for _ in range(samples):
        Q, S = sample_ncube(n, 1, rng)
        q, s = Q.table(), S.table()
        bad_s = s.copy()
        vertex = int(rng.integers(0, 1 << n))
        bad_s[vertex] ^= 1
        for values, label in ((s, 'cube'), (bad_s, 'perturbed')):
            skew = skew_cube_check(space.join(q, values), space)
            direct = bool(x5_cube_check(Q, FuncTable(n, 1, values), 1, rng=rng))
            if label == 'cube':
                report.cubes += 1
            else:
                report.perturbed += 1
            if skew != direct or skew != (label == 'cube'):
                report.ok = False
                report.disagreements.append({'kind': label, 'skew': skew, 'direct': direct,
                                             'vertex': vertex})
    return report


def leibniz_check(q1: PolyRep, samples: int = 1000, rng=None) -> bool:
    """d^4 binom2(R) = Sym^2(d^2 Q1) on sampled (x, h_1..h_4), both read mod 2."""
    rng = np.random.default_rng(rng)
    n = q1.n
    R = build_R(q1)
    b = binom2_array(R.table())
    qt = q1.to_table().with_level(1).values
    grid = rng.integers(0, 1 << n, size=(samples, 5))
    V = direction_cubes(grid[:, 0], grid[:, 1:])
    lhs = b[V].sum(axis=1) & 1

    def bilinear(h, k):
        return (qt[h ^ k] ^ qt[h] ^ qt[k] ^ qt[0]) & 1

    hs = [grid[:, i] for i in range(1, 5)]
    rhs = np.zeros(samples, dtype=np.int64)
    for (a, c), (d, e) in (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))):
        rhs ^= bilinear(hs[a], hs[c]) & bilinear(hs[d], hs[e])
    return bool(np.array_equal(lhs, rhs))


def coset_difference(S, T) -> PolyRep:
    """S - T as a polynomial of degree at most 5; raises DegreeViolation otherwise."""
    if S.n != T.n or S.r != T.r:
        raise DimensionMismatch('pseudo-quintics on different spaces')
    return PolyRep.from_table(FuncTable(S.n, S.r, S.table() - T.table()), 5)


def restrict(S: PseudoQuintic, Q: QuadPair, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """The corner (Q, S)(a, 0^{n-m}) for a in F_2^m, as Klein values and numerators."""
    idx = np.arange(1 << m, dtype=np.int64)
    return Q.table()[idx], S.table()[idx]


def affine_pullback(Q: QuadPair, S: PseudoQuintic, A: np.ndarray, b: int) -> Tuple[np.ndarray, np.ndarray]:
    """(Q, S) composed with the affine map y -> A y + b from F_2^m into F_2^n.

    Column j of A is the image of e_{j+1}.
    """
    m = len(A)
    idx = np.full(1 << m, b, dtype=np.int64)
    for j, col in enumerate(A):
        idx ^= ((np.arange(1 << m) >> j) & 1) * int(col)
    return Q.table()[idx], S.table()[idx]
