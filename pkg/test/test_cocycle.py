from fractions import Fraction

import numpy as np
import pytest

from nilforge import rho
from nilforge.cocycle import (CocycleHandle, check_2homog, check_cocycle_axioms, decide_coboundary,
                              direction_cubes, potential_finder, strong_potential_finder,
                              verify_certificate)
from nilforge.cocycle.potential import direction_grid
from nilforge.cubes import FilteredGroup
from nilforge.dyadic import DyadicTorus
from nilforge.poly import FuncTable, random_poly
from nilforge.util.errors import BudgetExceeded, DimensionMismatch, PreconditionViolation

X2 = FilteredGroup.klein()


def random_table(n, level, rng):
    return FuncTable(n, level, rng.integers(0, 1 << level, size=1 << n))


def same_values(a, b, V):
    """a and b agree on the cubes V once written over a common level."""
    L = max(a.level, b.level)
    return np.array_equal(a.evaluate(V) << (L - a.level), b.evaluate(V) << (L - b.level))


def test_handle_evaluates_coboundaries(rng):
    F = random_table(2, 3, rng)
    d2F = CocycleHandle.from_coboundary(X2, F, 1)
    t = (0, 1, 2, 3)
    expected = F[3] - F[1] - F[2] + F[0]
    assert d2F(t) == expected
    assert d2F.evaluate(np.array([t]))[0] == expected.at_level(3)
    with pytest.raises(DimensionMismatch):
        d2F.evaluate(np.zeros((1, 8), dtype=np.int64))


def test_plus_and_zero(rng):
    F = random_table(2, 2, rng)
    G = random_table(2, 3, rng)
    a = CocycleHandle.from_coboundary(X2, F, 1)
    b = CocycleHandle.from_coboundary(X2, G, 1)
    c = CocycleHandle.from_coboundary(X2, F + G, 1)
    V = rng.integers(0, 4, size=(50, 4))
    assert np.array_equal(a.plus(b).evaluate(V), c.evaluate(V))
    assert np.array_equal(a.plus(CocycleHandle.zero(X2, 1)).evaluate(V), a.evaluate(V))


class TestAxioms:

    def test_coboundary_passes(self, rng):
        F = random_table(2, 4, rng)
        report = check_cocycle_axioms(CocycleHandle.from_coboundary(X2, F, 1), rng=rng)
        assert report.ok and report.exhaustive
        assert report.symmetry_checked == 256
        assert report.concatenation_checked == 256 * 16

    def test_trilinear_form_passes(self):
        report = check_cocycle_axioms(rho.trilinear_cocycle())
        assert report.ok and report.exhaustive

    def test_perturbation_is_caught(self, rng):
        F = random_table(2, 1, rng)
        bent = CocycleHandle.from_coboundary(X2, F, 1).perturbed((0, 1, 2, 3), DyadicTorus.half())
        report = check_cocycle_axioms(bent, rng=rng)
        assert not report.ok
        assert report.violation['kind'] == 'symmetry'

    @pytest.mark.slow
    def test_rho_passes_on_samples(self, cx, rng):
        report = check_cocycle_axioms(cx.handle(), samples=2000, rng=rng)
        assert report.ok
        assert not report.exhaustive


class TestHomogeneity:

    def test_coboundaries_are_2_homogeneous(self, rng):
        G = FilteredGroup.cube_coordinates(3)
        F = random_table(3, 3, rng)
        report = check_2homog(CocycleHandle.from_coboundary(G, F, 2))
        assert report.ok and report.exhaustive
        assert report.checked == 8 ** 3

    def test_trilinear_form_fails(self):
        report = check_2homog(rho.trilinear_cocycle())
        assert not report.ok
        assert report.violation['x'] == 0
        assert report.violation['h'] == [1, 2]
        assert report.violation['values'] == ['1/2', '0']

    def test_low_order_is_trivially_homogeneous(self):
        assert check_2homog(CocycleHandle.zero(X2, 1)).ok

    def test_needs_cube_coordinates(self):
        with pytest.raises(DimensionMismatch):
            check_2homog(CocycleHandle.zero(X2, 2))


class TestDecision:

    @pytest.mark.parametrize('target', ['torus', 3, 5])
    def test_coboundary_is_recognized(self, rng, target):
        F = random_table(2, 3, rng)
        handle = CocycleHandle.from_coboundary(X2, F, 1)
        verdict = decide_coboundary(handle, target, rng=rng)
        assert verdict.decision == 'yes'
        assert verdict.is_coboundary
        assert verdict.exhaustive
        V = rng.integers(0, 4, size=(100, 4))
        assert same_values(CocycleHandle.from_coboundary(X2, verdict.witness, 1), handle, V)

    def test_level_too_small(self):
        # d^2 of a level-3 function is not d^2 of anything at level 1 in general
        F = FuncTable(2, 3, [0, 1, 0, 0])
        verdict = decide_coboundary(CocycleHandle.from_coboundary(X2, F, 1), 1)
        assert verdict.decision == 'no'
        assert verdict.pairing
        assert verdict.modulus == 2

    def test_perturbed_coboundary_has_certificate(self, rng):
        F = random_table(2, 2, rng)
        bent = CocycleHandle.from_coboundary(X2, F, 1).perturbed((0, 1, 2, 3), DyadicTorus.half())
        verdict = decide_coboundary(bent)
        assert verdict.decision == 'no'
        assert verdict.pairing == DyadicTorus.half()
        out = verdict.to_json()
        pairing = verify_certificate(out['certificate_rows'],
                                     [Fraction(s) for s in out['certificate_rhs']],
                                     verdict.kernel_vector, out['modulus'])
        assert pairing == Fraction(1, 2)

    def test_trilinear_form_is_not_a_coboundary(self):
        verdict = decide_coboundary(rho.trilinear_cocycle())
        assert verdict.decision == 'no'
        assert verdict.exhaustive

    def test_sampled_yes_is_inconclusive(self, rng):
        G = FilteredGroup.cube_coordinates(4)
        F = random_table(4, 2, rng)
        verdict = decide_coboundary(CocycleHandle.from_coboundary(G, F, 2), samples=500, rng=rng,
                                    exhaustive_limit=1000)
        assert verdict.decision == 'inconclusive'
        assert verdict.is_coboundary is None
        assert verdict.notes

    def test_rho_descends_to_no(self, cx):
        verdict = decide_coboundary(cx.handle(), system=rho.descended_system(cx))
        assert verdict.decision == 'no'
        assert verdict.pairing == DyadicTorus.half()


    def test_rho_is_not_a_coboundary_on_sampled_rows(self, cx):
        verdict = decide_coboundary(cx.handle(), samples=2000)
        assert verdict.decision == 'no'
        assert not verdict.exhaustive

    def test_adding_a_coboundary_keeps_the_decision(self, cx, rng):
        t = rho.trilinear_cocycle()
        bent = t.plus(CocycleHandle.from_coboundary(t.space, random_table(2, 3, rng), 2))
        assert decide_coboundary(bent).decision == 'no'
        with pytest.raises(PreconditionViolation):
            potential_finder(bent)
        shifted = cx.handle().plus(CocycleHandle.from_coboundary(rho.X2, random_table(2, 3, rng), 5))
        assert decide_coboundary(shifted, samples=2000).decision == 'no'


def test_verify_certificate_rejects_non_kernel_vectors():
    rows = [[1, -1, 0], [1, 0, -1]]
    assert verify_certificate(rows, ['1/2', '0'], {0: 1, 1: -1}) is None
    assert verify_certificate([[1, 1], [1, 1]], ['1/2', '0'], {0: 1, 1: -1}) == Fraction(1, 2)
    assert verify_certificate([[2, 2], [0, 0]], ['1/4', '0'], {0: 2, 1: 0}, 4) == Fraction(1, 2)


def assert_both_solve(n, k, count, rng):
    """potential_finder and decide_coboundary both solve random coboundaries d^{k+1}F."""
    G = FilteredGroup.cube_coordinates(n)
    _, V = direction_grid(n, k, 1 << 24)
    for _ in range(count):
        handle = CocycleHandle.from_coboundary(G, random_table(n, 3, rng), k)
        found = potential_finder(handle)
        assert same_values(CocycleHandle.from_coboundary(G, found, k), handle, V)
        assert decide_coboundary(handle).decision == 'yes'


GRID = [(n, k) for n in (1, 2, 3) for k in range(5)]


class TestPotential:

    def test_absorbs_the_constant_of_integration(self):
        G = FilteredGroup.cube_coordinates(1)
        handle = CocycleHandle.from_coboundary(G, FuncTable(1, 3, [0, 1]), 1)
        assert decide_coboundary(handle).decision == 'yes'
        found = potential_finder(handle)
        _, V = direction_grid(1, 1, 1 << 24)
        assert same_values(CocycleHandle.from_coboundary(G, found, 1), handle, V)

    @pytest.mark.parametrize('n, k', [nk for nk in GRID if nk[0] * (nk[1] + 2) <= 15])
    def test_recovers_a_potential(self, rng, n, k):
        assert_both_solve(n, k, 5, rng)

    @pytest.mark.slow
    @pytest.mark.parametrize('n, k', GRID)
    def test_recovers_fifty_potentials(self, rng, n, k):
        assert_both_solve(n, k, 50, rng)


    def test_rejects_trilinear_form(self):
        with pytest.raises(PreconditionViolation) as e:
            potential_finder(rho.trilinear_cocycle())
        assert e.value.diagnostic is not None

    def test_budget(self):
        G = FilteredGroup.cube_coordinates(4)
        with pytest.raises(BudgetExceeded):
            potential_finder(CocycleHandle.zero(G, 3), limit=1 << 10)


class TestStrongPotential:

    @staticmethod
    def edge_function(F):
        n = F.n
        idx = np.arange(1 << (2 * n))
        x, h = idx & ((1 << n) - 1), idx >> n
        return FuncTable(2 * n, F.level, F.values[x ^ h] - F.values[x])

    @pytest.mark.slow
    def test_classical_potential(self, rng):
        G = FilteredGroup.cube_coordinates(4)
        F = random_table(4, 1, rng)
        handle = CocycleHandle.from_coboundary(G, F, 3)
        out = strong_potential_finder(handle, self.edge_function(F))
        assert out.level <= 1
        _, V = direction_grid(4, 3, 1 << 24)
        assert same_values(CocycleHandle.from_coboundary(G, out, 3), handle, V[::97])

    def test_needs_order_three(self):
        with pytest.raises(PreconditionViolation):
            strong_potential_finder(rho.trilinear_cocycle(), FuncTable.zeros(4, 1))

    def test_needs_level_one(self, rng):
        G = FilteredGroup.cube_coordinates(2)
        handle = CocycleHandle.from_coboundary(G, random_table(2, 3, rng), 3)
        with pytest.raises(PreconditionViolation):
            strong_potential_finder(handle, FuncTable.zeros(4, 1))

    def test_needs_matching_psi(self, rng):
        G = FilteredGroup.cube_coordinates(3)
        F = random_table(3, 1, rng)
        handle = CocycleHandle.from_coboundary(G, F, 3)
        with pytest.raises(DimensionMismatch):
            strong_potential_finder(handle, FuncTable.zeros(4, 1))
        psi = self.edge_function(F).with_level(2)
        values = psi.values.copy()
        values[1 | (2 << 3)] += 1
        with pytest.raises(PreconditionViolation):
            strong_potential_finder(handle, FuncTable(6, 2, values))
