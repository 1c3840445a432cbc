import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nilforge.cocycle import CocycleHandle
from nilforge.cubes import (FilteredGroup, ProductSpace, SkewSpace, TorusTarget, cube_mask,
                            enumerate_params, faces, hk_cube_check, morphism_check,
                            param_space_size, params_to_vertices, phom_check, sample_params,
                            skew_cube_check, skew_lift, vertices_to_params)
from nilforge.poly import FuncTable, PolyRep, random_poly
from nilforge.util.errors import DimensionMismatch, NotCompletable, PreconditionViolation

X2 = FilteredGroup.klein()


def test_klein_structure():
    assert X2.degree == 2
    assert X2.order(0) == X2.order(2) == 4
    assert X2.order(3) == 1
    assert sorted(X2.elements(0)) == [0, 1, 2, 3]
    assert param_space_size(X2, 3) == 4 ** 7


def test_params_roundtrip(rng):
    H = sample_params(X2, 4, rng, 50)
    assert np.array_equal(vertices_to_params(X2, params_to_vertices(X2, H)), H)


def test_every_parameter_gives_a_cube():
    V = params_to_vertices(X2, enumerate_params(X2, 3))
    assert len(V) == 4 ** 7
    assert cube_mask(X2, V).all()
    assert len({tuple(row) for row in V}) == len(V)


def test_random_tuples_are_cubes_a_quarter_of_the_time(rng):
    V = rng.integers(0, 4, size=(20000, 8))
    assert abs(cube_mask(X2, V).mean() - 0.25) < 0.02


def test_cube_check_returns_params():
    t = [0, 1, 2, 3]
    p = hk_cube_check(t, X2)
    assert p is not None and p.is_valid()
    assert list(p.vertices()) == t
    assert hk_cube_check([0, 1, 2, 3, 0, 0, 0, 1], X2) is None
    with pytest.raises(DimensionMismatch):
        hk_cube_check([0, 1, 2], X2)


def test_corner_completion_is_unique_past_the_degree(rng):
    V = params_to_vertices(X2, sample_params(X2, 3, rng, 40))
    for row in V:
        assert np.array_equal(X2.corner_complete(row[:-1]), row)


def test_corner_completion_rejects_bad_faces():
    # the 3-face below vertex 0111 has a nonzero top parameter
    partial = [0] * 15
    partial[7] = 1
    with pytest.raises(NotCompletable):
        X2.corner_complete(partial)


def test_cube_coordinates():
    D = FilteredGroup.cube_coordinates(3)
    assert D.is_cube([0, 5, 3, 6])
    assert not D.is_cube([0, 5, 3, 7])


def test_degree_two_on_z4():
    G = FilteredGroup.degree_filtration((2,), 1)
    # 0, 1, 1, 2 is a 2-cube of D^1(Z/4) but 0, 1, 1, 3 is not
    assert G.is_cube([0, 1, 1, 2])
    assert not G.is_cube([0, 1, 1, 3])
    assert G.add(3, 2) == 1 and G.neg(1) == 3


def test_edge_group():
    E = X2.edge_group()
    assert E.nbits == 4
    assert E.order(0) == 16
    assert E.order(2) == 4
    assert E.order(3) == 1


@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(1, 4), st.integers(0, 4),
       st.integers(1, 4))
def test_polynomials_are_morphisms(seed, n, d, level):
    P = random_poly(n, d, level, seed)
    D = FilteredGroup.cube_coordinates(n)
    T = P.to_table()
    assert morphism_check(T, D, TorusTarget(d, T.level))
    true = P.true_degree()
    if true > 0:
        assert not morphism_check(T, D, TorusTarget(true - 1, T.level))


def test_quarter_is_a_quadratic_morphism():
    T = PolyRep(1, 2, 2, coeffs={1: 1}).to_table()
    D = FilteredGroup.cube_coordinates(1)
    assert morphism_check(T, D, TorusTarget(2, 2))
    assert not morphism_check(T, D, TorusTarget(1, 2))


def test_p_homogeneity():
    assert phom_check(X2)
    assert not phom_check(FilteredGroup.degree_filtration((2,), 1))
    assert phom_check(FilteredGroup((2,), [(0,), (0,), (1,)]))
    with pytest.raises(PreconditionViolation):
        phom_check(FilteredGroup((2,), [(0,), (1,)]))


def test_filtration_must_descend():
    with pytest.raises(ValueError):
        FilteredGroup((2,), [(1,), (0,)])


def test_product_space(rng):
    P = ProductSpace(X2, X2)
    a = params_to_vertices(X2, sample_params(X2, 3, rng, 1))[0]
    b = params_to_vertices(X2, sample_params(X2, 3, rng, 1))[0]
    t = P.join(a, b)
    assert P.is_cube(t)
    assert np.array_equal(P.corner_complete(t[:-1]), t)
    assert not P.is_cube(P.join(a, b ^ np.eye(8, dtype=np.int64)[7]))


def test_faces():
    squares = list(faces(3, 2))
    assert len(squares) == 6
    assert [0, 1, 2, 3] in squares
    assert [4, 5, 6, 7] in squares
    assert len(list(faces(4, 1))) == 32


class TestSkewSpace:

    @pytest.fixture
    def skew(self):
        F = FuncTable(2, 2, [0, 1, 3, 2])
        rho = CocycleHandle.from_coboundary(X2, F, 1)
        return SkewSpace(X2, 2, rho, 1), F

    def test_graph_of_potential_is_a_cube(self, skew, rng):
        S, F = skew
        for row in params_to_vertices(X2, sample_params(X2, 3, rng, 20)):
            assert S.is_cube(S.join(row, F.values[row]))

    def test_lift_and_complete(self, skew, rng):
        S, _ = skew
        for row in params_to_vertices(X2, sample_params(X2, 3, rng, 20)):
            t = skew_lift(row, S)
            assert skew_cube_check(t, S)
            assert S.is_cube(S.corner_complete(t[:-1]))

    def test_single_vertex_change_breaks_the_cube(self, skew):
        S, F = skew
        row = np.array([0, 1, 2, 3])
        t = S.join(row, F.values[row])
        x, z = S.split(t)
        z = z.copy()
        z[2] += 1
        assert not S.is_cube(S.join(x, z))

    def test_lift_needs_a_base_cube(self, skew):
        S, _ = skew
        with pytest.raises(PreconditionViolation):
            skew_lift([0, 0, 0, 0, 0, 1, 0, 0], S)

    def test_order_must_match(self):
        rho = CocycleHandle.zero(X2, 2)
        with pytest.raises(DimensionMismatch):
            SkewSpace(X2, 1, rho, 1)
