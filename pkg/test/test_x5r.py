import numpy as np
import pytest

from nilforge.dyadic import DyadicTorus
from nilforge.poly import FuncTable, PolyRep, random_poly
from nilforge.polyio import read_any
from nilforge.util.errors import DimensionMismatch, PreconditionViolation
from nilforge.x5r import (PseudoQuintic, QuadPair, affine_pullback, build_R, coset_difference,
                          leibniz_check, lift, restrict, sample_ncube, skew_identification_check,
                          x5_corner_complete, x5_cube_check)


@pytest.fixture
def example(data_dir):
    q1 = read_any(str(data_dir / 'example_q1.poly'))
    q2 = read_any(str(data_dir / 'example_q2.poly'))
    return QuadPair(q1, q2)


def test_golden_lift(example, data_dir):
    S = lift(example)
    assert S == read_any(str(data_dir / 'example_s.pq'))
    assert S.P == PolyRep.zero(4, 5, 5)


def test_lift_reduces_to_q1(example):
    R = build_R(example.q1)
    assert np.array_equal(R.table() & 1, example.q1.to_table().with_level(1).values)
    R.certify_cubic()


@pytest.mark.parametrize('n', [2, 5, 8])
def test_lift_of_random_quadratics_is_cubic(rng, n):
    for _ in range(10):
        q1 = random_poly(n, 2, 1, rng)
        R = build_R(q1)
        assert R.is_cubic()
        assert np.array_equal(R.table() & 1, q1.to_table().with_level(1).values)


def test_eval_matches_table(rng):
    Q, S = sample_ncube(4, 5, rng)
    for x in range(16):
        assert S.eval(x) == DyadicTorus(int(S.table()[x]), 5)
        assert S.vertex(x).q == Q.table()[x]
    with pytest.raises(DimensionMismatch):
        S.eval(16)


class TestCubeCheck:

    @pytest.mark.parametrize('method', ['structural', 'alternate'])
    @pytest.mark.parametrize('r', [1, 3, 5])
    def test_samples_are_cubes(self, rng, method, r):
        Q, S = sample_ncube(2, r, rng, method)
        report = x5_cube_check(Q, S, r)
        assert report.ok
        assert report.exhaustive
        assert report.checked == 4 ** 7

    def test_lift_is_a_cube(self, example, rng):
        report = x5_cube_check(example, lift(example), samples=2000, rng=rng)
        assert report.ok
        assert not report.exhaustive

    @pytest.mark.parametrize('r, ok', [(1, True), (4, True), (5, False)])
    def test_corner_perturbation(self, rng, r, ok):
        # x1 x2 / 2^r has degree r + 1
        Q, S = sample_ncube(2, r, rng)
        values = S.table().copy()
        values[3] += 1
        report = x5_cube_check(Q, FuncTable(2, r, values), r)
        assert report.ok == ok
        assert (report.violation is None) == ok

    def test_violation_is_reported(self, rng):
        Q, S = sample_ncube(2, 5, rng)
        values = S.table().copy()
        values[3] += 1
        violation = x5_cube_check(Q, FuncTable(2, 5, values), 5).violation
        assert set(violation) == {'x', 'h', 'defect'}
        assert len(violation['h']) == 6

    def test_wrong_level(self, rng):
        Q, S = sample_ncube(2, 3, rng)
        with pytest.raises(DimensionMismatch):
            x5_cube_check(Q, S, 5)


def test_leibniz(rng):
    for _ in range(5):
        assert leibniz_check(random_poly(5, 2, 1, rng), samples=500, rng=rng)


def test_coset_difference(rng):
    Q, S = sample_ncube(4, 5, rng)
    P = random_poly(4, 5, 5, rng)
    T = S.with_quintic(P)
    diff = coset_difference(S, T)
    assert np.array_equal(diff.to_table().with_level(5).values,
                          (S.P.to_table().with_level(5).values - P.to_table().with_level(5).values) % 32)
    _, U = sample_ncube(4, 3, rng)
    with pytest.raises(DimensionMismatch):
        coset_difference(S, U)


class TestCornerCompletion:

    def test_unique_from_six_coordinates(self, rng):
        Q, S = sample_ncube(6, 5, rng)
        Qc, S0, full = x5_corner_complete(Q.table()[:-1], S.table()[:-1])
        assert np.array_equal(Qc.table(), Q.table())
        assert np.array_equal(full, S.table())
        assert coset_difference(S, S0) is not None

    def test_small_corner_gives_some_cube(self, rng):
        Q, S = sample_ncube(3, 5, rng)
        Qc, _, full = x5_corner_complete(Q.table()[:-1], S.table()[:-1])
        assert np.array_equal(full[:-1], S.table()[:-1])
        assert x5_cube_check(Qc, FuncTable(3, 5, full), 5, samples=2000, rng=rng).ok

    def test_bad_shapes(self):
        with pytest.raises(DimensionMismatch):
            x5_corner_complete([0] * 7, [0] * 6)
        with pytest.raises(DimensionMismatch):
            x5_corner_complete([0] * 6, [0] * 6)


class TestPullback:

    def test_identity(self, rng):
        Q, S = sample_ncube(4, 5, rng)
        q, s = affine_pullback(Q, S, np.array([1, 2, 4, 8]), 0)
        assert np.array_equal(q, Q.table())
        assert np.array_equal(s, S.table())

    def test_restriction_is_a_corner_of_faces(self, rng):
        Q, S = sample_ncube(4, 5, rng)
        q, s = restrict(S, Q, 2)
        assert np.array_equal(q, Q.table()[:4])
        assert np.array_equal(s, S.table()[:4])

    def test_pullback_of_a_cube_is_a_cube(self, rng):
        Q, S = sample_ncube(4, 5, rng)
        q, s = affine_pullback(Q, S, np.array([5, 14]), 3)
        assert x5_cube_check(QuadPair.from_table(2, q), FuncTable(2, 5, s), 5).ok


class TestValidation:

    def test_level_range(self, rng):
        Q, S = sample_ncube(3, 5, rng)
        with pytest.raises(DimensionMismatch):
            PseudoQuintic(S.R, S.q2, PolyRep.zero(3, 5, 5), 6)

    def test_quadratics_only(self, rng):
        cubic = PolyRep.from_table(FuncTable(3, 1, [0] * 7 + [1]), 3)
        quarter = PolyRep.from_table(FuncTable(2, 2, [0, 1, 0, 1]), 2)
        with pytest.raises(PreconditionViolation):
            QuadPair(cubic, random_poly(3, 2, 1, rng))
        with pytest.raises(PreconditionViolation):
            QuadPair(random_poly(2, 2, 1, rng), quarter)
        with pytest.raises(DimensionMismatch):
            QuadPair(random_poly(2, 2, 1, rng), random_poly(3, 2, 1, rng))

    def test_unknown_sampler(self):
        with pytest.raises(ValueError):
            sample_ncube(2, 5, 0, 'rejection')

    def test_skew_check_needs_six_coordinates(self):
        with pytest.raises(PreconditionViolation):
            skew_identification_check(4)


@pytest.mark.slow
def test_skew_identification(rng):
    report = skew_identification_check(6, samples=2, rng=rng)
    assert report.ok
    assert report.cubes == report.perturbed == 2
