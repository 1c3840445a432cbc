import numpy as np
import pytest

from nilforge import rho
from nilforge.cocycle.linsys import solve_mod, solve_torus
from nilforge.cubes import FilteredGroup, params_to_vertices, sample_params
from nilforge.dyadic import DyadicTorus
from nilforge.poly import FuncTable
from nilforge.util.errors import DimensionMismatch, ParseError, PreconditionViolation

HALF = DyadicTorus.half()


def random_cubes(rng, size):
    return params_to_vertices(rho.X2, sample_params(rho.X2, 6, rng, size))


class TestPartitions:

    def test_shipped_terms_match_generated(self):
        terms = rho.load_partitions()
        assert len(terms) == 45
        assert rho.canonical_terms(terms) == rho.canonical_terms(rho.generate_partitions())

    def test_every_matching_appears_three_times(self):
        terms = rho.generate_partitions()
        matchings = {frozenset(rho.PAIRS[t] for t in row) for row in terms}
        assert len(matchings) == 15

    def test_symmetric(self, cx):
        assert rho.symmetry_check(cx.terms) == (True, 720)

    def test_fault_breaks_symmetry(self, cx):
        ok, _ = rho.symmetry_check(cx.with_fault('partition').terms)
        assert not ok

    def test_bad_partition_file(self, tmp_path):
        path = tmp_path / 'terms.txt'
        path.write_text('# header\n12 34 56\n12 34\n')
        with pytest.raises(ParseError) as e:
            rho.load_partitions(path)
        assert e.value.line == 3

    def test_shapes_are_checked(self, cx):
        with pytest.raises(DimensionMismatch):
            rho.Counterexample(np.zeros((45, 2), dtype=np.int64), cx.psi)
        with pytest.raises(DimensionMismatch):
            rho.Counterexample(cx.terms, FuncTable.zeros(3, 2))


class TestEvaluation:

    @pytest.mark.parametrize('pairs, value', [
        ({}, DyadicTorus.zero()),
        ({(1, 2): 1, (3, 4): 1, (5, 6): 2}, HALF),
        ({(1, 2): 3, (3, 4): 1, (5, 6): 2}, HALF),
        ({(1, 2): 2, (3, 4): 2, (5, 6): 1}, DyadicTorus.zero()),
        ({(1, 2): 1, (3, 4): 1}, DyadicTorus.zero()),
    ])
    def test_examples(self, pairs, value):
        assert rho.rho_from_params(pairs) == value
        assert rho.rho_eval(rho.cube_from_pairs(pairs)) == value

    def test_batch_agrees_with_single(self, cx, rng):
        V = random_cubes(rng, 50)
        values = cx.batch(V)
        for t, v in zip(V, values):
            assert cx.rho_eval(t) == DyadicTorus(int(v), 1)

    def test_quadratic_form_agrees(self, cx, rng):
        for t in random_cubes(rng, 30):
            assert rho.rho_from_quadratics(t) == cx.rho_eval(t)

    def test_linear_in_pairs_through_one(self, cx, rng):
        # every term reads exactly one pair through coordinate 1
        block = [i for i, p in enumerate(rho.PAIRS) if 1 in p]
        for _ in range(20):
            P = rng.integers(0, 4, size=15)
            A, B = P.copy(), P.copy()
            A[block] = rng.integers(0, 4, size=len(block))
            B[block] = rng.integers(0, 4, size=len(block))
            AB = P.copy()
            AB[block] = A[block] ^ B[block]
            assert cx.from_pair_params(AB) == cx.from_pair_params(A) ^ cx.from_pair_params(B)

    def test_rejects_non_cubes(self, cx, rng):
        with pytest.raises(DimensionMismatch):
            cx.rho_eval(np.zeros(32, dtype=np.int64))
        t = np.zeros(64, dtype=np.int64)
        t[7] = 1
        with pytest.raises(PreconditionViolation):
            cx.rho_eval(t)


class TestPsi:

    def test_examples(self):
        assert rho.psi_eval(0, 0) == DyadicTorus.zero()
        assert rho.psi_eval(3, 1) == DyadicTorus(1, 2)
        assert rho.psi_eval(3, 2) == HALF

    def test_table_matches_formula(self, cx):
        for x in range(4):
            for y in range(4):
                assert cx.psi_eval(x, y) == rho.psi_formula(x, y)

    def test_d5_psi_on_example(self, cx):
        cube = rho.cube_from_pairs({(1, 2): 1, (3, 4): 1, (5, 6): 2})
        assert cx.d5_psi(cube[None, :])[0] == 2

    def test_d5_psi_is_twice_rho(self, cx, rng):
        V = random_cubes(rng, 500)
        assert np.array_equal(cx.d5_psi(V), cx.batch(V) << 1)

    def test_zero_cube(self, cx):
        V = np.zeros((1, 64), dtype=np.int64)
        assert cx.d5_psi(V)[0] == 0
        assert cx.batch(V)[0] == 0

    def test_strong_homogeneity(self):
        report = rho.verify_strong_homogeneity(samples=200)
        assert report['ok']
        assert report['two_psi_pointwise']

    def test_psi_fault_is_caught(self, cx, rng):
        report = rho.strong_homogeneity_check(cx.with_fault('psi'), 0, rng)
        assert not report['ok']


class TestForms:

    def test_linear(self):
        assert rho.linear_form(1)(3) == 1
        assert rho.linear_form(2)(1) == 0
        with pytest.raises(DimensionMismatch):
            rho.linear_form(1)(1, 2)

    def test_concatenate_and_square(self):
        L1, L2 = rho.linear_form(1), rho.linear_form(2)
        assert rho.concatenate(L1, L2)(1, 2) == 1
        assert rho.concatenate(L1, L2)(1, 1) == 0
        assert rho.sym_square(L1)(1, 3) == 1
        assert rho.sym_square(L1)(1, 2) == 0

    def test_trilinear_batch_agrees(self, rng):
        handle = rho.trilinear_cocycle()
        G = FilteredGroup.cube_coordinates(2)
        V = params_to_vertices(G, sample_params(G, 3, rng, 100))
        values = handle.evaluate(V)
        for t, v in zip(V, values):
            assert handle(t) == DyadicTorus(int(v), 1)


class TestCertificate:

    def test_two_cubes_separate(self, cx):
        verdict = rho.non_coboundary_certificate(cx)
        assert verdict.decision == 'no'
        assert verdict.pairing == HALF
        assert verdict.certificate_rows[0] == verdict.certificate_rows[1]
        assert verdict.certificate_rhs == ['1/2', '0']

    @pytest.mark.parametrize('r', [1, 2, 3, 8])
    def test_no_modular_potential(self, cx, r):
        assert solve_mod(rho.descended_system(cx), r).decision == 'no'

    def test_no_torus_potential(self, cx):
        assert solve_torus(rho.descended_system(cx)).decision == 'no'


def test_bit_sweep_sizes():
    assert len(rho.bit_sweep(3, 2, 0)) == 1
    assert len(rho.bit_sweep(3, 2, 1)) == 7
    assert len(rho.bit_sweep(22, 2, 3)) == 1 + 44 + 946 + 13244


def test_param_sweep_sizes():
    assert len(rho.param_sweep(4, (1, 2, 3), 1)) == 1 + 12
    assert len(rho.param_sweep(4, (1, 2, 3), 2)) == 1 + 12 + 6 * 9


@pytest.mark.slow
def test_verify_rho():
    report = rho.verify_rho(samples=200)
    assert report['ok']
    assert report['sampled'] and not report['exhaustive']
    assert report['symmetry'] == {'ok': True, 'permutations': 720}
    assert all(v == 'no' for v in report['eliminations'].values())


@pytest.mark.slow
@pytest.mark.parametrize('which', ['partition', 'psi'])
def test_verify_rho_catches_faults(cx, which):
    report = rho.verify_rho(samples=0, cx=cx.with_fault(which))
    assert not report['ok']
    assert not report['sampled']
