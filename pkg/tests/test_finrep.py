from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma

from todaquant import finrep, orbit
from todaquant.errors import DimensionMismatch, WitnessNotFound


def test_dimension_counts():
    for n in (2, 3, 4):
        for m in range(4):
            expected = sum(math.comb(d + n - 2, n - 2) for d in range(m + 1))
            assert finrep.FinRepSpace(n, m).dimension == expected
            assert finrep.FinRepSpace(n, m, homogeneous=True).dimension == math.comb(m + n - 2, n - 2)


def test_graded_order_deterministic():
    space = finrep.FinRepSpace(3, 2)
    assert space.exponents == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert space.labels()[0] == "a1^1*a2^1"
    assert space.exponents == finrep.FinRepSpace(3, 2).exponents


def test_space_validation():
    with pytest.raises(DimensionMismatch):
        finrep.FinRepSpace(1, 0)
    with pytest.raises(ValueError):
        finrep.FinRepSpace(2, -1)


def test_identity_gives_identity():
    space = finrep.FinRepSpace(3, 2)
    np.testing.assert_array_equal(finrep.rep_matrix(orbit.identity(3), space).matrix, np.eye(space.dimension))


@pytest.mark.parametrize("d", [0.5, 1.5, 3.0])
def test_two_site_example(d):
    rho = finrep.rep_matrix(orbit.diagonal_element([d, 1 / d]), finrep.FinRepSpace(2, 1)).matrix
    np.testing.assert_allclose(rho, np.diag([d**-2, d**-4]), rtol=1e-14)


def test_matrix_is_pullback_of_monomials(rng):
    # rho(g) u_j = u_j(g^-1 .) evaluated pointwise
    for n in (2, 3, 4):
        space = finrep.FinRepSpace(n, 2)
        g = orbit.random_group_element(n, rng)
        a = np.exp(rng.normal(size=(6, n - 1)))
        moved = space.evaluate(a / g.dilation_ratios())
        np.testing.assert_allclose(space.evaluate(a) * np.diag(finrep.rep_matrix(g, space).matrix), moved,
                                   rtol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 4), st.integers(0, 3), st.integers(0, 2**32 - 1))
def test_homomorphism(n, m, seed):
    rng = np.random.default_rng(seed)
    space = finrep.FinRepSpace(n, m)
    g1, g2 = orbit.random_group_element(n, rng), orbit.random_group_element(n, rng)
    assert finrep.homomorphism_check(g1, g2, space) < 1e-12


def test_identity_pair_and_inverse(rng):
    space = finrep.FinRepSpace(3, 2)
    assert finrep.homomorphism_check(orbit.identity(3), orbit.identity(3), space) == 0.0
    g = orbit.random_group_element(3, rng)
    prod = finrep.rep_matrix(g, space).matrix @ finrep.rep_matrix(g.inverse(), space).matrix
    np.testing.assert_allclose(prod, np.eye(space.dimension), rtol=1e-12)


def test_determinant_identity(rng):
    for n in (2, 3, 4):
        g = orbit.random_group_element(n, rng, bound=1.5, min_diagonal=0.5)
        assert finrep.determinant_identity(g, finrep.FinRepSpace(n, 2)) < 1e-12


def test_invertible(rng):
    g = orbit.random_group_element(4, rng)
    assert np.linalg.det(finrep.rep_matrix(g, finrep.FinRepSpace(4, 1)).matrix) != 0


def test_dimension_mismatch(rng):
    with pytest.raises(DimensionMismatch):
        finrep.rep_matrix(orbit.identity(3), finrep.FinRepSpace(2, 1))


def test_gaussian_gram_against_gamma():
    space = finrep.FinRepSpace(3, 2)
    gram = finrep.gaussian_gram(space)
    powers = np.array(space.exponents) + 1
    for j in range(space.dimension):
        for k in range(space.dimension):
            ref = np.prod([gamma((powers[j, i] + powers[k, i] + 1) / 2) / 2 for i in range(2)])
            assert gram[j, k] == pytest.approx(ref, rel=1e-12)


def test_identity_ratio_is_one():
    assert finrep.identity_ratio(finrep.FinRepSpace(3, 2)) == 1.0


def test_two_site_ratio_example():
    space = finrep.FinRepSpace(2, 0)
    ratio = finrep.gaussian_norm_ratio(orbit.diagonal_element([2.0, 0.5]), space, [1.0])
    assert ratio == pytest.approx(0.25, rel=1e-12)
    assert abs(ratio - 1) > 0.1


def test_witness_found():
    for n, m in ((2, 0), (3, 1), (4, 2)):
        w = finrep.nonunitarity_witness(finrep.FinRepSpace(n, m))
        assert abs(w.ratio - 1.0) > 0.1
        assert np.count_nonzero(w.g.L - np.diag(w.g.diagonal)) == 0


def test_witness_not_found_when_search_is_trivial():
    with pytest.raises(WitnessNotFound):
        finrep.nonunitarity_witness(finrep.FinRepSpace(2, 1), dilations=(1.0,))


def test_ratio_tends_to_one():
    space = finrep.FinRepSpace(3, 1)
    coeffs = np.arange(1.0, space.dimension + 1)
    gaps = [abs(finrep.gaussian_norm_ratio(orbit.diagonal_element([d, 1.0, 1 / d]), space, coeffs) - 1)
            for d in (1.5, 1.1, 1.01, 1.001)]
    assert all(x > y for x, y in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-2
