"""Sampled restricted cubes of X_{5,r} and the measurability probe.

A frame pins an M-cube (Q0, S0) on the face F_2^M x {0^d}.  Sampling an n-cube
(Q, S) along e_1..e_M and d random directions v_1..v_d gives an (M+d)-cube that
always agrees with the frame; Sigma is the finite set of all such cubes.  It is
enumerated through its fibres over the Q part: each Q extends to one lift, and
the lifts agreeing with S0 form a coset of

    K = {P of degree <= 5 at level r : P vanishes on the face}.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dyadic import e_phase_array
from .gowers import as_phase, correlation
from .poly import FuncTable, PolyRep
from .util.errors import (BudgetExceeded, DegreeViolation, DimensionMismatch,
                          PreconditionViolation)
from .util.parallel import chunk_sizes, parallel_map, spawn_rngs
from .x5r import MAX_R, QuadPair, lift, restrict, sample_ncube

log = logging.getLogger(__name__)

MAX_FRAME_DIM = 2
SAMPLE_CHUNKS = 8
MAX_PROBE_N = 18
OVERFIT_RATIO = 8


@dataclass(frozen=True)
class RestrictionFrame:
    """M pinned directions, d random ones, and the pinned M-cube (Q0, S0)."""

    M: int
    d: int
    q0: Tuple[int, ...]
    s0: Tuple[int, ...]
    r: int = MAX_R
    source: Optional[tuple] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.M < 0 or self.d < 0:
            raise ValueError(f'negative frame dimensions M={self.M}, d={self.d}')
        if len(self.q0) != 1 << self.M or len(self.s0) != 1 << self.M:
            raise DimensionMismatch(f'an M-cube for M={self.M} has {1 << self.M} vertices')

    @property
    def dim(self) -> int:
        return self.M + self.d

    @classmethod
    def zero(cls, M: int, d: int, r: int = MAX_R) -> RestrictionFrame:
        return cls(M, d, (0,) * (1 << M), (0,) * (1 << M), r)

    @classmethod
    def of_cube(cls, Q: QuadPair, S, M: int, d: int) -> RestrictionFrame:
        if M > Q.n:
            raise DimensionMismatch(f'cannot pin {M} directions of F_2^{Q.n}')
        q0, s0 = restrict(S, Q, M)
        return cls(M, d, tuple(int(v) for v in q0), tuple(int(v) for v in s0), S.r, (Q, S))


def pack_keys(q: np.ndarray, s: np.ndarray, r: int) -> np.ndarray:
    """One integer per cube: vertex y holds q | s << 2 in bits y(r+2) and up."""
    q = np.asarray(q, dtype=np.int64)
    s = np.asarray(s, dtype=np.int64)
    width = r + 2
    shifts = np.arange(q.shape[-1], dtype=np.int64) * width
    return ((q | (s << 2)) << shifts).sum(axis=-1)


def vanishing_basis(M: int, d: int, r: int) -> Tuple[np.ndarray, np.ndarray]:
    """Generators of K as level-r tables on F_2^{M+d}, with their orders."""
    m = M + d
    face = (1 << M) - 1
    tables, orders = [], []
    for mask in range(1, 1 << m):
        size = bin(mask).count('1')
        if mask & ~face == 0 or size > 5:
            continue
        term = PolyRep(m, 5, r, coeffs={mask: 1 << max(0, 6 - size - r)})
        tables.append(term.to_table().with_level(r).values)
        orders.append(1 << min(r, 6 - size))
    return np.array(tables, dtype=np.int64).reshape(len(tables), 1 << m), np.array(orders, dtype=np.int64)


def enumerate_vanishing(M: int, d: int, r: int) -> np.ndarray:
    """Every element of K as a row of numerators over 2^r."""
    basis, orders = vanishing_basis(M, d, r)
    if len(orders) == 0:
        return np.zeros((1, 1 << (M + d)), dtype=np.int64)
    coeffs = np.indices(tuple(orders)).reshape(len(orders), -1).T
    return (coeffs @ basis) % (1 << r)


@dataclass
class SigmaSpace:
    """All (M+d)-cubes of X_{5,r} agreeing with a frame, sorted by key."""

    frame: RestrictionFrame
    q: np.ndarray
    s: np.ndarray
    keys: np.ndarray
    fibre: int

    @property
    def size(self) -> int:
        return len(self.keys)

    def __len__(self) -> int:
        return self.size

    def locate(self, keys: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Positions of `keys` in Sigma and a mask of those that belong to it."""
        keys = np.asarray(keys, dtype=np.int64)
        pos = np.searchsorted(self.keys, keys)
        inside = pos < self.size
        inside[inside] = self.keys[pos[inside]] == keys[inside]
        return pos, inside

    def q_marginal(self) -> Tuple[np.ndarray, np.ndarray]:
        """The distinct Q parts and how many elements sit over each."""
        qkeys = pack_keys(self.q, np.zeros_like(self.q), self.frame.r)
        return np.unique(qkeys, return_counts=True)

    def uniform_sample(self, count: int, rng=None) -> np.ndarray:
        rng = np.random.default_rng(rng)
        return self.keys[rng.integers(0, self.size, size=count)]


def _face_correction(frame: RestrictionFrame, s_face: np.ndarray) -> np.ndarray:
    """S0 minus a lift on the face, extended off the face through the projection."""
    r, M = frame.r, frame.M
    diff = (np.asarray(frame.s0, dtype=np.int64) - s_face) % (1 << r)
    if M:
        try:
            PolyRep.from_table(FuncTable(M, r, diff), 5)
        except DegreeViolation as exc:
            raise PreconditionViolation('the pinned (Q0, S0) is not an M-cube of X_{5,r}',
                                        diagnostic={'index_set': exc.index_set}) from None
    points = np.arange(1 << frame.dim, dtype=np.int64)
    return diff[points & ((1 << M) - 1)]


def enumerate_sigma(frame: RestrictionFrame) -> SigmaSpace:
    M, d, r = frame.M, frame.d, frame.r
    m = frame.dim
    if m > MAX_FRAME_DIM:
        raise BudgetExceeded(f'M + d = {m} exceeds {MAX_FRAME_DIM}; Sigma is only enumerated exactly',
                             m)
    q0 = np.asarray(frame.q0, dtype=np.int64)
    if d == 0:
        s0 = np.asarray(frame.s0, dtype=np.int64)
        return SigmaSpace(frame, q0[None, :], s0[None, :], pack_keys(q0, s0, r)[None], 1)

    free = (1 << m) - (1 << M)
    kernel = enumerate_vanishing(M, d, r)
    qs, ss = [], []
    for choice in np.indices((4,) * free).reshape(free, -1).T:
        qtable = np.concatenate([q0, choice])
        try:
            Q = QuadPair.from_table(m, qtable)
        except DegreeViolation:
            continue
        base = lift(Q, r).table()
        base = (base + _face_correction(frame, base[:1 << M])) % (1 << r)
        ss.append((base[None, :] + kernel) % (1 << r))
        qs.append(np.broadcast_to(qtable, kernel.shape))
    q = np.concatenate(qs)
    s = np.concatenate(ss)
    keys = pack_keys(q, s, r)
    order = np.argsort(keys)
    log.info('Sigma for M=%d d=%d: %d Q parts, fibres of %d', M, d, len(qs), len(kernel))
    return SigmaSpace(frame, q[order], s[order], keys[order], len(kernel))


@dataclass
class EmpiricalMeasure:
    """Counts of sampled cubes keyed by their packed form."""

    keys: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_keys(cls, keys) -> EmpiricalMeasure:
        keys, counts = np.unique(np.asarray(keys, dtype=np.int64), return_counts=True)
        return cls(keys, counts.astype(np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def merged(self, other: EmpiricalMeasure) -> EmpiricalMeasure:
        keys = np.concatenate([self.keys, other.keys])
        counts = np.concatenate([self.counts, other.counts])
        uniq, inverse = np.unique(keys, return_inverse=True)
        return EmpiricalMeasure(uniq, np.bincount(inverse, weights=counts).astype(np.int64))

    def tv(self, other: EmpiricalMeasure) -> float:
        keys = np.union1d(self.keys, other.keys)
        p = np.zeros(len(keys))
        q = np.zeros(len(keys))
        p[np.searchsorted(keys, self.keys)] = self.counts / self.total
        q[np.searchsorted(keys, other.keys)] = other.counts / other.total
        return 0.5 * float(np.abs(p - q).sum())

    def tv_to_uniform(self, sigma: SigmaSpace) -> float:
        pos, inside = sigma.locate(self.keys)
        p = np.zeros(sigma.size)
        np.add.at(p, pos[inside], self.counts[inside] / self.total)
        outside = float(self.counts[~inside].sum()) / self.total
        return 0.5 * (float(np.abs(p - 1.0 / sigma.size).sum()) + outside)

    def outside(self, sigma: SigmaSpace) -> int:
        _, inside = sigma.locate(self.keys)
        return int(self.counts[~inside].sum())


def sample_restrictions(Q: QuadPair, S, M: int, d: int, count: int, rng=None) -> np.ndarray:
    """Packed (Q, S)(a e + b v) for `count` draws of v_1..v_d."""
    rng = np.random.default_rng(rng)
    n, m = Q.n, M + d
    vertices = np.arange(1 << m, dtype=np.int64)
    v = rng.integers(0, 1 << n, size=(count, d))
    points = np.broadcast_to(vertices & ((1 << M) - 1), (count, 1 << m)).copy()
    for j in range(d):
        points ^= ((vertices >> (M + j)) & 1)[None, :] * v[:, j:j + 1]
    return pack_keys(Q.table()[points], S.table()[points], S.r)


def empirical_measure(frame: RestrictionFrame, samples: int, seed, threads: int = 1) -> EmpiricalMeasure:
    if samples <= 0:
        raise ValueError(f'need a positive number of samples, got {samples}')
    if frame.source is None:
        raise PreconditionViolation('the frame carries no n-cube to sample from')
    Q, S = frame.source
    rngs = spawn_rngs(seed, SAMPLE_CHUNKS)
    parts = parallel_map(lambda job: EmpiricalMeasure.from_keys(
        sample_restrictions(Q, S, frame.M, frame.d, job[0], job[1])),
        list(zip(chunk_sizes(samples, SAMPLE_CHUNKS), rngs)), threads)
    out = parts[0]
    for part in parts[1:]:
        out = out.merged(part)
    return out


def estimate_tv(n: int, frame: RestrictionFrame, samples: int, seed, threads: int = 1,
                sigma: Optional[SigmaSpace] = None) -> float:
    """Total variation between the sampled restrictions of frame.source and uniform on Sigma."""
    if frame.source is not None and frame.source[0].n != n:
        raise DimensionMismatch(f'frame cube lives on F_2^{frame.source[0].n}, not F_2^{n}')
    sigma = sigma or enumerate_sigma(frame)
    return empirical_measure(frame, samples, seed, threads).tv_to_uniform(sigma)


def calibration_band(sigma: SigmaSpace, samples: int) -> float:
    return 3.0 * float(np.sqrt(sigma.size / samples))


@dataclass
class EquidistributionReport:
    n: int
    M: int
    d: int
    samples: int
    sigma_size: int
    fibre: int
    tv: float
    outside: int
    calibration_tv: float
    band: float

    @property
    def calibrated(self) -> bool:
        return self.calibration_tv <= self.band

    def to_json(self) -> dict:
        return {'n': self.n, 'M': self.M, 'd': self.d, 'samples': self.samples,
                'sigma_size': self.sigma_size, 'fibre': self.fibre, 'tv': self.tv,
                'outside': self.outside, 'calibration_tv': self.calibration_tv,
                'band': self.band, 'calibrated': self.calibrated}


def equidistribution(n: int, M: int, d: int, samples: int, seed, threads: int = 1,
                     r: int = MAX_R) -> EquidistributionReport:
    """Sample an n-cube, then compare its restrictions against uniform on Sigma.

    The cube, the sampling chunks and the calibration draws use separate
    streams spawned from `seed`.
    """
    cube_rng, sample_seed, calib_rng = np.random.SeedSequence(seed).spawn(3)
    Q, S = sample_ncube(n, r, np.random.default_rng(cube_rng))
    frame = RestrictionFrame.of_cube(Q, S, M, d)
    sigma = enumerate_sigma(frame)
    measure = empirical_measure(frame, samples, sample_seed, threads)
    calib = EmpiricalMeasure.from_keys(sigma.uniform_sample(samples, np.random.default_rng(calib_rng)))
    return EquidistributionReport(n, M, d, samples, sigma.size, sigma.fibre,
                                  measure.tv_to_uniform(sigma), measure.outside(sigma),
                                  calib.tv_to_uniform(sigma), calibration_band(sigma, samples))


@dataclass
class CellError:
    """How well the generator tuple determines e(target).

    `error` is the mean absolute value of e(target) minus its cell average;
    `rms_error` is its root mean square, which only shrinks as generators are added.
    """

    error: float
    rms_error: float
    cells: int
    points: int

    @property
    def overfit(self) -> bool:
        return self.cells * OVERFIT_RATIO >= self.points

    def to_json(self) -> dict:
        return {'error': self.error, 'rms_error': self.rms_error, 'cells': self.cells,
                'points': self.points, 'overfit': self.overfit}


def _numerators(f, n: Optional[int]) -> Tuple[np.ndarray, int]:
    table = as_phase(f)
    if n is not None and table.n != n:
        raise DimensionMismatch(f'phase on F_2^{table.n}, expected F_2^{n}')
    return table.values % (1 << table.level), table.level


def conditional_expectation_error(target, generators: Sequence, n: Optional[int] = None) -> CellError:
    t, level = _numerators(target, n)
    points = len(t)
    if generators:
        cols = []
        for g in generators:
            values, _ = _numerators(g, n)
            if len(values) != points:
                raise DimensionMismatch('generators and target on different spaces')
            cols.append(values)
        _, cell = np.unique(np.stack(cols, axis=1), axis=0, return_inverse=True)
        cell = cell.ravel()
    else:
        cell = np.zeros(points, dtype=np.int64)
    cells = int(cell.max()) + 1
    counts = np.bincount(cell, minlength=cells)
    lo = np.full(cells, np.iinfo(np.int64).max)
    hi = np.full(cells, -1)
    np.minimum.at(lo, cell, t)
    np.maximum.at(hi, cell, t)
    # cells on which the target is constant contribute exactly zero
    mixed = (lo != hi)[cell]
    if not mixed.any():
        return CellError(0.0, 0.0, cells, points)
    phase = e_phase_array(t, level)
    avg = (np.bincount(cell, weights=phase.real, minlength=cells)
           + 1j * np.bincount(cell, weights=phase.imag, minlength=cells)) / counts
    dev = np.where(mixed, np.abs(phase - avg[cell]), 0.0)
    return CellError(float(np.mean(dev)), float(np.sqrt(np.mean(dev ** 2))), cells, points)


def translates(S, M: int) -> List[FuncTable]:
    """x -> S(x + (a, 0^{n-M})) for every a in F_2^M."""
    table = as_phase(S)
    return [table.shift(a) for a in range(1 << M)]


def _probe_run(n: int, M: int, r: int, rng) -> dict:
    Q, S = sample_ncube(n, r, rng)
    gens = translates(S, M)
    main = conditional_expectation_error(S.P, gens, n)
    control = conditional_expectation_error(S, gens, n)
    constant = conditional_expectation_error(FuncTable.zeros(n, r), gens, n)
    if main.overfit:
        log.warning('probe at n=%d, M=%d is in the overfit regime (%d cells, %d points)',
                    n, M, main.cells, main.points)
    return {'r': r, 'error': main.to_json(), 'control': control.error,
            'constant_control': constant.error, 'correlation': correlation(S, S.P)}


def measurability_probe(n: int, M: int, r: int = MAX_R, seed=None) -> dict:
    """Approximate e(P), P the quintic part of a sampled S, by functions of M pinned
    translates of S; repeated with r = 1 where S itself is classical."""
    if n > MAX_PROBE_N:
        raise BudgetExceeded(f'n={n} exceeds {MAX_PROBE_N}', 1 << n)
    if not 0 <= M <= n:
        raise DimensionMismatch(f'cannot pin {M} directions of F_2^{n}')
    rngs = spawn_rngs(seed, 2)
    runs = [_probe_run(n, M, r, rngs[0])]
    if r != 1:
        runs.append(_probe_run(n, M, 1, rngs[1]))
    main = runs[0]
    return {'n': n, 'M': M, 'errors': {str(run['r']): run['error']['error'] for run in runs},
            'control': main['control'], 'correlation': main['correlation'],
            'cells': main['error']['cells'], 'points': main['error']['points'], 'runs': runs}
