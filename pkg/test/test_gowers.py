from fractions import Fraction

import numpy as np
import pytest

from nilforge.gowers import (as_phase, correlation, correlation_exact, gowers_norm, gowers_norm_naive,
                             gowers_norm_recursive, limiting_constant, norms_of_samples,
                             poly_norm_one_certificate, translate)
from nilforge.poly import FuncTable, PolyRep, random_poly
from nilforge.util.errors import BudgetExceeded, DimensionMismatch
from nilforge.x5r import sample_ncube

TOL = 1e-9


def random_phase(n, level, rng):
    return FuncTable(n, level, rng.integers(0, 1 << level, size=1 << n))


@pytest.mark.parametrize('n, kmax', [(3, 5), (4, 2)])
def test_engines_agree(rng, n, kmax):
    for _ in range(5):
        f = random_phase(n, 3, rng)
        for k in range(kmax + 1):
            assert gowers_norm_naive(f, k) == pytest.approx(gowers_norm_recursive(f, k), abs=TOL)


def assert_engines_agree_at_u6(n, count, rng):
    for _ in range(count):
        f = random_phase(n, 3, rng)
        assert gowers_norm_naive(f, 5) == pytest.approx(gowers_norm_recursive(f, 5), abs=TOL)


def test_engines_agree_at_u6(rng):
    assert_engines_agree_at_u6(3, 20, rng)


@pytest.mark.slow
def test_engines_agree_at_u6_in_dimension_four(rng):
    assert_engines_agree_at_u6(4, 20, rng)


def test_threads_do_not_change_the_value(rng):
    f = random_phase(3, 4, rng)
    assert gowers_norm_recursive(f, 3, threads=4) == pytest.approx(gowers_norm_recursive(f, 3), abs=TOL)


@pytest.mark.parametrize('engine', ['naive', 'recursive'])
def test_polynomial_phases_have_norm_one(rng, engine):
    for d in (1, 2, 3):
        P = random_poly(4, d, 3, rng)
        assert poly_norm_one_certificate(P, d)
        assert gowers_norm(P, d, engine) == pytest.approx(1.0, abs=TOL)


def test_u1_is_the_mean():
    f = FuncTable(2, 1, [0, 0, 0, 1])
    assert gowers_norm(f, 0) == pytest.approx(0.5)
    assert gowers_norm(FuncTable.zeros(3), 0) == pytest.approx(1.0)


def test_translation_invariance(rng):
    f = random_phase(4, 3, rng)
    for a in (1, 6, 15):
        assert gowers_norm(translate(f, a), 2) == pytest.approx(gowers_norm(f, 2), abs=TOL)


def test_quadratic_phase_invariance(rng):
    f = random_phase(4, 3, rng)
    Q = random_poly(4, 2, 3, rng)
    assert gowers_norm(f + Q.to_table(), 2) == pytest.approx(gowers_norm(f, 2), abs=TOL)


def test_monotone_in_k(rng):
    f = random_phase(4, 2, rng)
    norms = [gowers_norm(f, k, 'recursive') for k in range(4)]
    assert all(a <= b + TOL for a, b in zip(norms, norms[1:]))


def test_validation(rng):
    f = random_phase(3, 2, rng)
    with pytest.raises(ValueError):
        gowers_norm(f, -1)
    with pytest.raises(ValueError):
        gowers_norm(f, 1, 'fft')
    with pytest.raises(TypeError):
        as_phase([0, 1, 0, 1])
    with pytest.raises(BudgetExceeded) as e:
        gowers_norm_naive(FuncTable.zeros(11), 1)
    assert e.value.estimate == 1 << 33
    with pytest.raises(BudgetExceeded):
        gowers_norm_recursive(FuncTable.zeros(12), 2)


class TestCorrelation:

    def test_classical_difference_is_exact(self):
        f = PolyRep.classical(2, {3: 1}, 2)
        assert correlation_exact(f, PolyRep.zero(2)) == Fraction(1, 2)
        assert correlation(f, PolyRep.zero(2)) == pytest.approx(0.5)

    def test_finer_difference_has_no_rational(self):
        quarter = FuncTable(2, 2, [0, 1, 0, 1])
        assert correlation_exact(quarter, PolyRep.zero(2)) is None
        assert correlation(quarter, PolyRep.zero(2)) == pytest.approx(abs(1 + 1j) / 2)

    def test_dimensions(self):
        with pytest.raises(DimensionMismatch):
            correlation(FuncTable.zeros(3), PolyRep.zero(2))

    def test_pseudo_quintic_against_its_quintic_part(self, rng):
        _, S = sample_ncube(6, 5, rng)
        exact = correlation_exact(S, S.P)
        assert exact is not None
        assert float(exact) == pytest.approx(correlation(S, S.P))

    @pytest.mark.slow
    def test_about_half_at_twelve(self, rng):
        values = []
        for _ in range(20):
            _, S = sample_ncube(12, 5, rng)
            values.append(float(correlation_exact(S, S.P)))
        assert 0.35 <= np.mean(values) <= 0.65


def test_limiting_constant():
    mean, root = limiting_constant()
    assert 0 < mean < 1
    assert root == pytest.approx(float(mean) ** (1 / 64))


def test_sampled_cubes_are_not_uniform(rng):
    norms = norms_of_samples(3, 3, rng)
    assert len(norms) == 3
    assert all(0 < v <= 1 + TOL for v in norms)
