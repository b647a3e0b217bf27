import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orthoproj.errors import ConfigurationError, DimensionError, NumericError
from orthoproj.linalg import (OrthonormalBasis, angle_between, dot, gram_schmidt,
                              norm, project_complement)


def kahan_dot(a, b):
    """Compensated-summation oracle, independent of the library path."""
    total = 0.0
    comp = 0.0
    for x, y in zip(a, b):
        term = x * y - comp
        t = total + term
        comp = (t - total) - term
        total = t
    return total


class TestDot:
    def test_hand_computed(self):
        assert dot([1, 2, 3], [4, 5, 6]) == 32.0

    def test_zero_vector(self):
        z = np.zeros(5)
        assert dot(z, z) == 0.0

    def test_matches_compensated_sum(self):
        rng = np.random.default_rng(42)
        a = rng.standard_normal(1000)
        b = rng.standard_normal(1000)
        expected = kahan_dot(a, b)
        assert abs(dot(a, b) - expected) <= 1e-9 * abs(expected)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            dot([1, 2], [1, 2, 3])

    def test_non_finite(self):
        with pytest.raises(NumericError):
            dot([1, np.nan], [1, 2])

    def test_deterministic_accumulation(self):
        # same inputs twice must give identical bits
        rng = np.random.default_rng(7)
        a = rng.standard_normal(333)
        b = rng.standard_normal(333)
        assert dot(a, b) == dot(a.copy(), b.copy())


class TestGramSchmidt:
    def test_hand_orthogonalization(self):
        basis = gram_schmidt([[1, 0, 0], [1, 1, 0]], delta=1e-6)
        np.testing.assert_array_equal(basis.vectors, [[1, 0, 0], [0, 1, 0]])

    def test_collinear_pair_discarded(self):
        basis = gram_schmidt([[2, 0], [4, 0]], delta=1e-6)
        assert basis.rank == 1
        np.testing.assert_array_equal(basis.vectors, [[1.0, 0.0]])

    def test_gram_matrix_oracle(self):
        rng = np.random.default_rng(3)
        cands = [rng.standard_normal(100) for _ in range(5)]
        basis = gram_schmidt(cands, delta=1e-8)
        assert basis.rank == 5
        gram = np.empty((5, 5))
        for i in range(5):
            for j in range(5):
                gram[i, j] = kahan_dot(basis.vectors[i], basis.vectors[j])
        assert np.abs(gram - np.eye(5)).max() <= 1e-10

    def test_zero_candidate_discarded_not_normalized(self):
        basis = gram_schmidt([np.zeros(4), [0, 0, 3, 0]], delta=1e-6)
        assert basis.rank == 1
        np.testing.assert_array_equal(basis.vectors, [[0, 0, 1, 0]])

    def test_empty_candidates(self):
        assert gram_schmidt([], delta=1e-6).rank == 0

    def test_span_preservation(self):
        rng = np.random.default_rng(11)
        cands = [rng.standard_normal(30) for _ in range(6)]
        basis = gram_schmidt(cands, delta=1e-8)
        for c in cands:
            recon = sum(dot(c, u) * u for u in basis.vectors)
            assert norm(c - recon) <= 1e-8 * norm(c)

    @pytest.mark.parametrize("true_rank", [1, 2, 3, 4, 5])
    def test_rank_filtering_exact(self, true_rank):
        rng = np.random.default_rng(100 + true_rank)
        span = rng.standard_normal((true_rank, 40))
        cands = rng.standard_normal((8, true_rank)) @ span
        cands /= np.sqrt((cands * cands).sum(axis=1))[:, None]
        assert gram_schmidt(cands, delta=1e-6).rank == true_rank

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            gram_schmidt([[1.0, 0.0]], delta=0.0)
        with pytest.raises(ConfigurationError):
            gram_schmidt([[1.0, 0.0]], delta=1e-6, epsilon=-1.0)
        with pytest.raises(DimensionError):
            gram_schmidt([[1.0, 0.0], [1.0, 0.0, 0.0]], delta=1e-6)
        with pytest.raises(NumericError):
            gram_schmidt([[np.inf, 0.0]], delta=1e-6)

    def test_epsilon_stabilizer_shrinks_norm(self):
        basis = gram_schmidt([[2.0, 0.0]], delta=1e-6, epsilon=1.0)
        # normalization by (norm + epsilon) leaves a deliberately short column
        assert norm(basis.vectors[0]) == pytest.approx(2.0 / 3.0)


class TestProjectComplement:
    def test_axis_projection(self):
        basis = OrthonormalBasis(np.array([[1.0, 0.0]]))
        np.testing.assert_array_equal(project_complement([1.0, 1.0], basis), [0.0, 1.0])

    def test_fully_inside_span(self):
        basis = OrthonormalBasis(np.array([[1.0, 0.0]]))
        np.testing.assert_array_equal(project_complement([3.0, 0.0], basis), [0.0, 0.0])

    def test_empty_basis_returns_copy(self):
        g = np.array([1.0, 2.0, 3.0])
        out = project_complement(g, OrthonormalBasis.empty(3))
        np.testing.assert_array_equal(out, g)
        assert out is not g

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            project_complement([1.0, 2.0], OrthonormalBasis(np.eye(3)))

    def test_reconstruction_oracle(self):
        rng = np.random.default_rng(5)
        g = rng.standard_normal(50)
        basis = gram_schmidt([rng.standard_normal(50) for _ in range(3)], delta=1e-8)
        proj = project_complement(g, basis)
        assert max(abs(dot(proj, u)) for u in basis.vectors) <= 1e-9 * norm(g)
        recon = proj + sum(dot(g, u) * u for u in basis.vectors)
        assert np.abs(recon - g).max() <= 1e-12

    @pytest.mark.parametrize("d", [10, 100, 1000])
    @pytest.mark.parametrize("m", [1, 4, 8])
    def test_idempotence(self, d, m):
        rng = np.random.default_rng(d + m)
        basis = gram_schmidt(rng.standard_normal((m, d)), delta=1e-8)
        g = rng.standard_normal(d)
        once = project_complement(g, basis)
        twice = project_complement(once, basis)
        assert np.abs(twice - once).max() <= 1e-12

    def test_norm_contraction_and_equality(self):
        rng = np.random.default_rng(9)
        basis = gram_schmidt(rng.standard_normal((3, 20)), delta=1e-8)
        g = rng.standard_normal(20)
        assert norm(project_complement(g, basis)) < norm(g)
        # exactly orthogonal input (disjoint support): equality, bitwise
        basis2 = OrthonormalBasis(np.array([[1.0, 0.0, 0.0, 0.0]]))
        g2 = np.array([0.0, 1.0, 2.0, 3.0])
        out = project_complement(g2, basis2)
        assert norm(out) == norm(g2)

    def test_pythagoras(self):
        rng = np.random.default_rng(13)
        basis = gram_schmidt(rng.standard_normal((4, 60)), delta=1e-8)
        g = rng.standard_normal(60)
        proj = project_complement(g, basis)
        coeffs_sq = sum(dot(g, u) ** 2 for u in basis.vectors)
        assert abs(norm(g) ** 2 - (norm(proj) ** 2 + coeffs_sq)) <= 1e-9 * norm(g) ** 2


# hypothesis property checks over small random instances
vectors = st.integers(2, 24).flatmap(
    lambda d: st.lists(
        st.lists(st.floats(-100.0, 100.0, allow_nan=False), min_size=d, max_size=d),
        min_size=1, max_size=5))


@settings(max_examples=60, deadline=None)
@given(vectors)
def test_projection_properties_hypothesis(rows):
    arrays = [np.array(r) for r in rows]
    g = arrays[0]
    cands = arrays[1:]
    norms = [norm(c) for c in cands]
    max_norm = max(norms, default=0.0)
    delta = 1e-6 * max_norm if max_norm > 0 else 1e-6
    basis = gram_schmidt(cands, delta=delta)
    proj = project_complement(g, basis)
    assert norm(proj) <= norm(g) * (1 + 1e-12) + 1e-12
    twice = project_complement(proj, basis)
    assert np.abs(twice - proj).max() <= 1e-12 * max(1.0, norm(g))
    coeffs_sq = sum(dot(g, u) ** 2 for u in basis.vectors)
    assert abs(norm(g) ** 2 - (norm(proj) ** 2 + coeffs_sq)) <= 1e-9 * max(1.0, norm(g) ** 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 16), st.integers(0, 2 ** 32 - 1))
def test_gram_schmidt_orthonormal_hypothesis(d, seed):
    rng = np.random.default_rng(seed)
    basis = gram_schmidt(rng.standard_normal((min(d, 5), d)), delta=1e-8)
    assert basis.orthonormality_defect() <= 1e-10


def test_angle_between_exact_cases():
    assert angle_between([1.0, 0.0], [0.0, 2.0]) == pytest.approx(math.pi / 2, abs=1e-15)
    assert angle_between([1.0, 0.0], [3.0, 0.0]) == 0.0
    with pytest.raises(NumericError):
        angle_between([0.0, 0.0], [1.0, 0.0])
