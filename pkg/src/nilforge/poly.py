"""Non-classical polynomials on F_2^n.

A point x of F_2^n is a machine integer whose bit i-1 is the coordinate x_i.
A set of coordinates {i_1 < ... < i_k} is likewise a bitmask.  A polynomial of
degree at most d into (1/2^r)Z/Z is stored in its canonical form

    P(x) = alpha + sum_S c_S |x_S| / 2^(d+1-|S|)

with 1 <= |S| <= min(d, n) and 0 < c_S < 2^(d+1-|S|).  Dense tables of values
are a derived form, converted with zeta and Moebius sweeps.
"""
from __future__ import annotations

import itertools
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from .dyadic import DyadicTorus, check_level, e_phase_array
from .util.errors import DegreeViolation, DimensionMismatch, PreconditionViolation

MAX_DIM = 30


def indices_of(mask: int) -> Tuple[int, ...]:
    """1-based coordinates in `mask`."""
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def mask_of(indices) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << (i - 1)
    return mask


def popcounts(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    pc = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        pc += (idx >> i) & 1
    return pc


def zeta(values: np.ndarray, n: int, modulus: int) -> np.ndarray:
    """out[x] = sum of values[S] over S contained in x, mod `modulus`."""
    v = np.array(values, dtype=np.int64) % modulus
    for i in range(n):
        step = 1 << i
        w = v.reshape(-1, 2, step)
        w[:, 1, :] = (w[:, 1, :] + w[:, 0, :]) % modulus
    return v


def moebius(values: np.ndarray, n: int, modulus: int) -> np.ndarray:
    """Inverse of `zeta`: out[S] is the iterated difference along S at 0."""
    v = np.array(values, dtype=np.int64) % modulus
    for i in range(n):
        step = 1 << i
        w = v.reshape(-1, 2, step)
        w[:, 1, :] = (w[:, 1, :] - w[:, 0, :]) % modulus
    return v


def _check_dim(n: int) -> None:
    if n < 0 or n > MAX_DIM:
        raise DimensionMismatch(f'dimension {n} outside 0..{MAX_DIM}')


def _mod(level: int) -> int:
    return 1 << level


class FuncTable:
    """Dense table of a function on 2^n points into (1/2^level)Z/Z.

    `values` holds the numerators over 2^level.  The table is treated as
    immutable; operations return new tables.
    """

    __slots__ = ('n', 'level', 'values')

    def __init__(self, n: int, level: int, values) -> None:
        _check_dim(n)
        check_level(level)
        values = np.asarray(values, dtype=np.int64)
        if values.shape != (1 << n,):
            raise DimensionMismatch(f'table of shape {values.shape} for n={n}')
        self.n = n
        self.level = level
        self.values = values % _mod(level)

    @classmethod
    def zeros(cls, n: int, level: int = 0) -> FuncTable:
        return cls(n, level, np.zeros(1 << n, dtype=np.int64))

    @classmethod
    def from_function(cls, n: int, level: int, fn) -> FuncTable:
        """Tabulate `fn(x) -> DyadicTorus` over every point."""
        return cls(n, level, [fn(x).at_level(level) for x in range(1 << n)])

    @classmethod
    def constant(cls, n: int, value: DyadicTorus) -> FuncTable:
        return cls(n, value.level, np.full(1 << n, value.numerator, dtype=np.int64))

    def __len__(self) -> int:
        return 1 << self.n

    def __getitem__(self, x: int) -> DyadicTorus:
        if not 0 <= x < (1 << self.n):
            raise DimensionMismatch(f'point {x} outside F_2^{self.n}')
        return DyadicTorus(int(self.values[x]), self.level)

    def __iter__(self) -> Iterator[DyadicTorus]:
        for x in range(1 << self.n):
            yield self[x]

    def with_level(self, level: int) -> FuncTable:
        if level < self.level:
            if np.any(self.values % (1 << (self.level - level))):
                raise ValueError(f'table does not lie in level {level}')
            return FuncTable(self.n, level, self.values >> (self.level - level))
        return FuncTable(self.n, level, self.values << (level - self.level))

    def min_level(self) -> int:
        level = self.level
        while level > 0 and not np.any(self.values % (1 << (self.level - level + 1))):
            level -= 1
        return level

    def normalized(self) -> FuncTable:
        return self.with_level(self.min_level())

    def _aligned(self, other: FuncTable) -> Tuple[np.ndarray, np.ndarray, int]:
        if not isinstance(other, FuncTable):
            raise TypeError(f'expected FuncTable, got {type(other).__name__}')
        if other.n != self.n:
            raise DimensionMismatch(f'tables on F_2^{self.n} and F_2^{other.n}')
        level = max(self.level, other.level)
        return self.with_level(level).values, other.with_level(level).values, level

    def __add__(self, other: FuncTable) -> FuncTable:
        a, b, level = self._aligned(other)
        return FuncTable(self.n, level, a + b)

    def __sub__(self, other: FuncTable) -> FuncTable:
        a, b, level = self._aligned(other)
        return FuncTable(self.n, level, a - b)

    def __neg__(self) -> FuncTable:
        return FuncTable(self.n, self.level, -self.values)

    def __mul__(self, m: int) -> FuncTable:
        if not isinstance(m, (int, np.integer)):
            return NotImplemented
        return FuncTable(self.n, self.level, self.values * int(m))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, FuncTable):
            return NotImplemented
        if other.n != self.n:
            return False
        a, b, _ = self._aligned(other)
        return bool(np.array_equal(a, b))

    __hash__ = None

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def shift(self, h: int) -> FuncTable:
        """T^h F, the function x -> F(x + h)."""
        idx = np.arange(1 << self.n, dtype=np.int64)
        return FuncTable(self.n, self.level, self.values[idx ^ h])

    def derivative(self, h: int) -> FuncTable:
        if not 0 <= h < (1 << self.n):
            raise DimensionMismatch(f'direction {h} outside F_2^{self.n}')
        return self.shift(h) - self

    def e_phase(self) -> np.ndarray:
        return e_phase_array(self.values, self.level)

    def __repr__(self) -> str:
        return f'FuncTable(n={self.n}, level={self.level})'


class PolyRep:
    """A polynomial of degree at most `d` from F_2^n into (1/2^level)Z/Z."""

    __slots__ = ('n', 'd', 'level', 'alpha', 'coeffs')

    def __init__(self, n: int, d: int, level: int, alpha: DyadicTorus = None,
                 coeffs: Optional[Dict[int, int]] = None) -> None:
        _check_dim(n)
        check_level(level)
        if d < -1:
            raise ValueError(f'degree bound {d} below -1')
        alpha = DyadicTorus.zero() if alpha is None else alpha
        if alpha.level > level:
            raise ValueError(f'constant {alpha} does not lie in level {level}')
        if d == -1 and alpha:
            raise ValueError('degree -1 is the zero function')
        clean = {}
        for mask, c in (coeffs or {}).items():
            k = bin(mask).count('1')
            if mask >= (1 << n) or k == 0 or k > min(d, n):
                raise ValueError(f'monomial {indices_of(mask)} not allowed for n={n}, d={d}')
            c = int(c) % (1 << (d + 1 - k))
            if c == 0:
                continue
            if c % (1 << max(0, d + 1 - k - level)):
                raise ValueError(f'coefficient {c} on {indices_of(mask)} leaves level {level}')
            clean[mask] = c
        self.n = n
        self.d = d
        self.level = level
        self.alpha = alpha
        self.coeffs = clean

    @classmethod
    def zero(cls, n: int, d: int = -1, level: int = 0) -> PolyRep:
        return cls(n, d, level)

    @classmethod
    def constant(cls, n: int, alpha: DyadicTorus) -> PolyRep:
        return cls(n, 0, alpha.level, alpha)

    @classmethod
    def classical(cls, n: int, anf: Dict[int, int], d: int) -> PolyRep:
        """The F_2-polynomial with algebraic normal form `anf`, valued in {0, 1/2}."""
        alpha = DyadicTorus(anf.get(0, 0) & 1, 1)
        coeffs = {S: 1 << (d - bin(S).count('1')) for S, a in anf.items() if S and a & 1}
        return cls(n, d, 1, alpha, coeffs)

    def anf(self) -> Dict[int, int]:
        """Algebraic normal form of a classical polynomial."""
        if self.level > 1:
            raise PreconditionViolation(f'polynomial at level {self.level} is not classical')
        out = {S: 1 for S, c in self.coeffs.items()}
        if self.alpha:
            out[0] = 1
        return out

    def is_classical(self) -> bool:
        return self.level <= 1

    def term(self, mask: int) -> DyadicTorus:
        """c_S / 2^(d+1-|S|)."""
        k = bin(mask).count('1')
        return DyadicTorus(self.coeffs.get(mask, 0), self.d + 1 - k)

    def eval(self, x: int) -> DyadicTorus:
        if not 0 <= x < (1 << self.n):
            raise DimensionMismatch(f'point {x} outside F_2^{self.n}')
        if self.d < 0:
            return DyadicTorus.zero()
        num = sum(c << bin(S).count('1') for S, c in self.coeffs.items() if S & x == S)
        return self.alpha + DyadicTorus(num, self.d + 1)

    __call__ = eval

    def to_table(self) -> FuncTable:
        n, r = self.n, self.level
        if self.d < 0:
            return FuncTable.zeros(n, r)
        top = self.d + 1
        a = np.zeros(1 << n, dtype=np.int64)
        for S, c in self.coeffs.items():
            a[S] = (c << bin(S).count('1')) % (1 << top)
        vals = zeta(a, n, 1 << top)
        if top >= r:
            vals = vals >> (top - r)
        else:
            vals = vals << (r - top)
        return FuncTable(n, r, vals + self.alpha.at_level(r))

    @classmethod
    def from_table(cls, table: FuncTable, d: int) -> PolyRep:
        """Recover the canonical form of a table of degree at most `d`.

        Raises DegreeViolation naming the first offending coordinate set.
        """
        n, r = table.n, table.level
        m = moebius(table.values, n, 1 << r)
        if d < 0:
            bad = np.flatnonzero(m)
            if len(bad):
                S = int(bad[0])
                raise DegreeViolation(f'nonzero function has no degree {d}',
                                      indices_of(S), DyadicTorus(int(m[S]), r))
            return cls(n, -1, r)
        pc = popcounts(n)
        # required 2-divisibility of the Moebius coefficient on S
        shift = np.maximum(0, r - (d + 1 - pc))
        bad = (m != 0) & ((pc > d) | (m % (np.int64(1) << shift) != 0))
        bad[0] = False
        if np.any(bad):
            cand = np.flatnonzero(bad)
            S = int(min(cand, key=lambda s: (pc[s], indices_of(int(s)))))
            raise DegreeViolation(f'coefficient on {indices_of(S)} exceeds degree {d}',
                                  indices_of(S), DyadicTorus(int(m[S]), r))
        coeffs = {}
        for S in np.flatnonzero(m):
            S = int(S)
            if S == 0:
                continue
            k = int(pc[S])
            e = d + 1 - k
            c = int(m[S]) >> (r - e) if r >= e else int(m[S]) << (e - r)
            coeffs[S] = c
        return cls(n, d, r, DyadicTorus(int(m[0]), r), coeffs)

    def promote(self, d: int) -> PolyRep:
        """The same function represented with the larger degree bound `d`."""
        if d < self.d:
            raise ValueError(f'cannot promote degree {self.d} to {d}')
        if self.d < 0:
            return PolyRep(self.n, d, self.level)
        return PolyRep(self.n, d, self.level, self.alpha,
                       {S: c << (d - self.d) for S, c in self.coeffs.items()})

    def true_degree(self) -> int:
        if not self.coeffs:
            return 0 if self.alpha else -1
        best = 0
        for S, c in self.coeffs.items():
            k = bin(S).count('1')
            tz = (c & -c).bit_length() - 1
            best = max(best, self.d - tz)
            best = max(best, k)
        return best

    def reduced(self) -> PolyRep:
        """Representation with the smallest degree bound."""
        t = self.true_degree()
        if t == self.d:
            return self
        if t < 0:
            return PolyRep(self.n, -1, self.level)
        return PolyRep(self.n, t, self.level, self.alpha,
                       {S: c >> (self.d - t) for S, c in self.coeffs.items()})

    def with_level(self, level: int) -> PolyRep:
        return PolyRep(self.n, self.d, level, self.alpha, self.coeffs)

    def _common(self, other: PolyRep) -> Tuple[PolyRep, PolyRep]:
        if not isinstance(other, PolyRep):
            raise TypeError(f'expected PolyRep, got {type(other).__name__}')
        if other.n != self.n:
            raise DimensionMismatch(f'polynomials on F_2^{self.n} and F_2^{other.n}')
        d = max(self.d, other.d)
        level = max(self.level, other.level)
        return self.promote(d).with_level(level), other.promote(d).with_level(level)

    def __add__(self, other: PolyRep) -> PolyRep:
        a, b = self._common(other)
        coeffs = dict(a.coeffs)
        for S, c in b.coeffs.items():
            coeffs[S] = coeffs.get(S, 0) + c
        return PolyRep(a.n, a.d, a.level, a.alpha + b.alpha, coeffs)

    def __neg__(self) -> PolyRep:
        return PolyRep(self.n, self.d, self.level, -self.alpha,
                       {S: -c for S, c in self.coeffs.items()})

    def __sub__(self, other: PolyRep) -> PolyRep:
        return self + (-other)

    def __mul__(self, m: int) -> PolyRep:
        if not isinstance(m, (int, np.integer)):
            return NotImplemented
        return PolyRep(self.n, self.d, self.level, self.alpha * int(m),
                       {S: c * int(m) for S, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyRep):
            return NotImplemented
        if other.n != self.n:
            return False
        a, b = self._common(other)
        return a.alpha == b.alpha and a.coeffs == b.coeffs

    def __hash__(self) -> int:
        r = self.reduced()
        return hash((r.n, r.alpha, tuple(sorted(r.coeffs.items()))))

    def derivative(self, h: int) -> PolyRep:
        """∂_h P, recomputed in canonical form with the same degree bound."""
        if not 0 <= h < (1 << self.n):
            raise DimensionMismatch(f'direction {h} outside F_2^{self.n}')
        if self.d < 0 or h == 0:
            return PolyRep(self.n, self.d, self.level)
        top = self.d + 1
        mod = 1 << top
        b: Dict[int, int] = {}
        for U, c in self.coeffs.items():
            a_u = c << bin(U).count('1')
            fixed = U & ~h
            flip = U & h
            # |x + h|_U expands over the subsets T of U ∩ h with sign (-1)^|T|
            sub = flip
            while True:
                S = fixed | sub
                sign = -1 if bin(sub).count('1') & 1 else 1
                b[S] = (b.get(S, 0) + sign * a_u) % mod
                if sub == 0:
                    break
                sub = (sub - 1) & flip
            b[U] = (b.get(U, 0) - a_u) % mod
        coeffs = {}
        for S, v in b.items():
            if S == 0 or v == 0:
                continue
            k = bin(S).count('1')
            assert v % (1 << k) == 0, 'derivative left canonical form'
            coeffs[S] = v >> k
        return PolyRep(self.n, self.d, self.level, DyadicTorus(b.get(0, 0), top), coeffs)

    def shift(self, h: int) -> PolyRep:
        return self + self.derivative(h)

    def exact_root(self) -> PolyRep:
        """Q of degree d+1 with 2Q = P, obtained by halving every term."""
        level = check_level(self.level + 1)
        return PolyRep(self.n, self.d + 1, level, self.alpha.halve(), self.coeffs)

    def double(self) -> PolyRep:
        """2P, represented with degree bound d-1."""
        if self.d <= 0:
            return PolyRep(self.n, self.d, max(self.level - 1, 0), self.alpha * 2)
        d = self.d - 1
        coeffs = {S: c for S, c in self.coeffs.items() if bin(S).count('1') <= d}
        return PolyRep(self.n, d, max(self.level - 1, 0), self.alpha * 2, coeffs)

    def __repr__(self) -> str:
        terms = ', '.join(f'{indices_of(S)}:{c}' for S, c in sorted(self.coeffs.items()))
        return f'PolyRep(n={self.n}, d={self.d}, level={self.level}, alpha={self.alpha}, {{{terms}}})'


def degree_test(P, k: int, method: str = 'moebius') -> bool:
    """True iff every (k+1)-fold derivative of P vanishes.

    The default method reads the answer off the Moebius coefficients; the
    'directions' method takes the derivatives along every multiset of k+1
    basis directions.
    """
    if k < -1:
        raise ValueError(f'degree {k} below -1')
    if isinstance(P, PolyRep):
        if method == 'moebius':
            if k >= P.d:
                return True
            if k == -1:
                return not P.alpha and not P.coeffs
            gap = 1 << (P.d - k)
            return all(bin(S).count('1') <= k and c % gap == 0 for S, c in P.coeffs.items())
        P = P.to_table()
    if method == 'moebius':
        try:
            PolyRep.from_table(P, k)
        except DegreeViolation:
            return False
        return True
    if method != 'directions':
        raise ValueError(f'unknown method {method!r}')
    if k + 1 == 0:
        return P.is_zero()
    for dirs in itertools.combinations_with_replacement(range(P.n), k + 1):
        t = P
        for i in dirs:
            t = t.derivative(1 << i)
        if not t.is_zero():
            return False
    return True


def derivative(P, h: int):
    return P.derivative(h)


def d_iterated(P, hs) -> FuncTable:
    """∂_{h_1} ... ∂_{h_m} of a table or polynomial, as a table."""
    t = P.to_table() if isinstance(P, PolyRep) else P
    for h in hs:
        t = t.derivative(h)
    return t


def exact_root(P: PolyRep) -> PolyRep:
    return P.exact_root()


def poly_product(p1: PolyRep, p2: PolyRep) -> PolyRep:
    """Pointwise product of two classical polynomials, of degree d1 + d2."""
    if not (p1.is_classical() and p2.is_classical()):
        raise PreconditionViolation('poly_product needs classical polynomials')
    if p1.n != p2.n:
        raise DimensionMismatch(f'polynomials on F_2^{p1.n} and F_2^{p2.n}')
    a = p1.to_table().with_level(1).values
    b = p2.to_table().with_level(1).values
    d = max(p1.d, 0) + max(p2.d, 0)
    return PolyRep.from_table(FuncTable(p1.n, 1, a & b), d)


def linear_involution(n: int, e: int) -> np.ndarray:
    """Index map of a linear involution A of F_2^n with A(e_j) = e, j the top bit of e."""
    j = e.bit_length() - 1
    idx = np.arange(1 << n, dtype=np.int64)
    return idx ^ (((idx >> j) & 1) * (e ^ (1 << j)))


def invert_one_plus_shift(P: PolyRep, e: int) -> PolyRep:
    """Q of degree at most d+1 with Q + T^e Q = P, for P invariant under e."""
    if e == 0:
        raise PreconditionViolation('direction e must be nonzero')
    if not 0 < e < (1 << P.n):
        raise DimensionMismatch(f'direction {e} outside F_2^{P.n}')
    if P.derivative(e).reduced().d >= 0:
        raise PreconditionViolation(f'polynomial is not invariant under {indices_of(e)}',
                                    diagnostic=indices_of(e))
    if P.d < 0:
        return PolyRep(P.n, 0, P.level)
    j = e.bit_length() - 1
    A = linear_involution(P.n, e)
    table = P.to_table()
    Pj = PolyRep.from_table(FuncTable(P.n, table.level, table.values[A]), P.d)
    Qj = _invert_basis(Pj, j, check_level(P.level + 1))
    qt = Qj.to_table()
    return PolyRep.from_table(FuncTable(P.n, qt.level, qt.values[A]), P.d + 1)


def _invert_basis(P: PolyRep, j: int, level: int) -> PolyRep:
    """Inverse of 1 + T^{e_j} for P free of the coordinate j."""
    coeffs = {S | (1 << j): c for S, c in P.coeffs.items()}
    return PolyRep(P.n, P.d + 1, level, P.alpha.halve(), coeffs)


def random_poly(n: int, d: int, level: int, rng=None) -> PolyRep:
    """Uniform sample of Poly^d(F_2^n -> (1/2^level)Z/Z)."""
    _check_dim(n)
    check_level(level)
    rng = np.random.default_rng(rng)
    alpha = DyadicTorus(int(rng.integers(0, 1 << level)) if level else 0, level)
    if d < 0:
        return PolyRep(n, -1, level)
    coeffs = {}
    for k in range(1, min(d, n) + 1):
        free = min(level, d + 1 - k)
        pad = max(0, d + 1 - k - level)
        combos = list(itertools.combinations(range(n), k))
        draws = rng.integers(0, 1 << free, size=len(combos)) if free else np.zeros(len(combos), dtype=np.int64)
        for combo, u in zip(combos, draws):
            if u:
                coeffs[sum(1 << i for i in combo)] = int(u) << pad
    return PolyRep(n, d, level, alpha, coeffs)


class Z4Poly:
    """A Z/4Z-valued polynomial R(x) = sum_S a_S |x_S| mod 4."""

    __slots__ = ('n', 'coeffs')

    def __init__(self, n: int, coeffs: Optional[Dict[int, int]] = None) -> None:
        _check_dim(n)
        clean = {}
        for S, a in (coeffs or {}).items():
            if S >= (1 << n):
                raise DimensionMismatch(f'monomial {indices_of(S)} outside F_2^{n}')
            if int(a) % 4:
                clean[S] = int(a) % 4
        self.n = n
        self.coeffs = clean

    @classmethod
    def from_values(cls, n: int, values) -> Z4Poly:
        m = moebius(np.asarray(values, dtype=np.int64), n, 4)
        return cls(n, {int(S): int(m[S]) for S in np.flatnonzero(m)})

    @classmethod
    def lift_classical(cls, q: PolyRep) -> Z4Poly:
        """Coefficientwise lift of a classical polynomial through [0]=0, [1]=1."""
        return cls(q.n, q.anf())

    def eval(self, x: int) -> int:
        return sum(a for S, a in self.coeffs.items() if S & x == S) % 4

    __call__ = eval

    def table(self) -> np.ndarray:
        a = np.zeros(1 << self.n, dtype=np.int64)
        for S, v in self.coeffs.items():
            a[S] = v
        return zeta(a, self.n, 4)

    def torus_table(self) -> FuncTable:
        """x -> R(x)/4."""
        return FuncTable(self.n, 2, self.table())

    def mod2(self) -> PolyRep:
        t = self.table() & 1
        return PolyRep.from_table(FuncTable(self.n, 1, t), max(1, self.degree()))

    def binom2_table(self) -> np.ndarray:
        return (self.table() >> 1) & 1

    def degree(self) -> int:
        return max((bin(S).count('1') for S in self.coeffs), default=0)

    def is_cubic(self) -> bool:
        return degree_test(self.torus_table(), 3)

    def certify_cubic(self) -> PolyRep:
        """The torus polynomial R/4 of degree 3; raises DegreeViolation if d^4 R != 0."""
        return PolyRep.from_table(self.torus_table(), 3)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Z4Poly):
            return NotImplemented
        return self.n == other.n and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.n, tuple(sorted(self.coeffs.items()))))

    def __repr__(self) -> str:
        terms = ', '.join(f'{indices_of(S)}:{a}' for S, a in sorted(self.coeffs.items()))
        return f'Z4Poly(n={self.n}, {{{terms}}})'

