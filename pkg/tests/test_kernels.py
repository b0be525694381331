import numpy as np
import pytest

from nlcalc.errors import ConfigurationError, DimensionError
from nlcalc.kernels import (AlphaKernel, BetaKernel, GeneralKernel, LambdaAlphaKernel, alpha_embed, beta_embed,
                            check_constant_kernel_condition, check_divergence_kernel,
                            check_lambda_alpha_admissibility, divergence_kernel_residual, lambda_alpha_embed,
                            peridynamic_alpha)

from . import oracles


def _pair_index(grid, i, j):
    return int(np.flatnonzero((grid.pair_i == i) & (grid.pair_j == j))[0])


class TestParityFamilies:
    def test_from_upper_is_exactly_antisymmetric(self, grid4, rng):
        a = AlphaKernel.random(grid4, 3, rng)
        assert a.parity_residual(-1.0) == 0.0
        assert a.is_antisymmetric()

    def test_from_upper_is_exactly_symmetric(self, grid4, rng):
        b = BetaKernel.random(grid4, 2, rng)
        assert b.parity_residual(1.0) == 0.0
        assert b.k == 2

    def test_wrong_pair_count(self, grid4):
        with pytest.raises(DimensionError):
            AlphaKernel(grid4, np.zeros((3, 3)))

    def test_codomain_dimension(self, grid4):
        with pytest.raises(ConfigurationError):
            AlphaKernel(grid4, np.zeros((grid4.n_pairs, 4)))


class TestEmbedEntries:
    def test_zero_unless_a_delta_fires(self, grid3, rng):
        a = AlphaKernel.random(grid3, 3, rng)
        kap = alpha_embed(a).dense()
        i, j, l = 0, 1, 4
        np.testing.assert_array_equal(kap[i, j, l], 0.0)

    def test_single_delta_entry(self, grid3, rng):
        a = AlphaKernel.random(grid3, 3, rng)
        kap = alpha_embed(a).dense()
        i = 4
        j = int(grid3.neighbors(i)[0])
        np.testing.assert_allclose(kap[i, j, i], a.values[_pair_index(grid3, i, j)] / grid3.weights[i])

    @pytest.mark.parametrize("family", ["alpha", "beta"])
    def test_matches_loop_oracle(self, grid3, rng, family):
        cls, embed, sign = (AlphaKernel, alpha_embed, 1.0) if family == "alpha" else (BetaKernel, beta_embed, -1.0)
        phi = cls.random(grid3, 3, rng)
        ref = oracles.embed_two_point(phi.dense().tolist(), grid3.weights.tolist(), sign)
        np.testing.assert_array_equal(embed(phi).dense(), np.array(ref))

    def test_lambda_alpha_matches_loop_oracle(self, grid3, rng):
        kl = LambdaAlphaKernel(rng.uniform(size=(grid3.n, grid3.n)), AlphaKernel.random(grid3, 3, rng))
        ref = oracles.embed_lambda_alpha(kl.lam.tolist(), kl.alpha.dense().tolist())
        np.testing.assert_allclose(lambda_alpha_embed(kl).dense(), np.array(ref), rtol=0, atol=1e-15)

    def test_lambda_delta_reproduces_alpha_embed(self, grid3, rng):
        a = AlphaKernel.random(grid3, 3, rng)
        kl = LambdaAlphaKernel(LambdaAlphaKernel.discrete_delta(grid3), a)
        np.testing.assert_allclose(lambda_alpha_embed(kl).dense(), alpha_embed(a).dense(), rtol=1e-15)

    def test_lambda_zero_is_zero_kernel(self, grid3, rng):
        kl = LambdaAlphaKernel(np.zeros((grid3.n, grid3.n)), AlphaKernel.random(grid3, 3, rng))
        assert not np.any(lambda_alpha_embed(kl).dense())


class TestAdmissibility:
    @pytest.mark.parametrize("seed", range(3))
    def test_antisymmetric_alpha_admissible(self, grid4, seed):
        a = AlphaKernel.random(grid4, 3, np.random.default_rng(seed))
        assert check_divergence_kernel(alpha_embed(a)).max_residual <= 1e-14

    @pytest.mark.parametrize("seed", range(3))
    def test_symmetric_alpha_rejected_with_twice_alpha(self, grid4, seed):
        vals = BetaKernel.random(grid4, 3, np.random.default_rng(seed)).values
        res = check_divergence_kernel(alpha_embed(AlphaKernel(grid4, vals)))
        assert not res.passed
        assert res.max_residual == pytest.approx(np.max(np.linalg.norm(2 * vals, axis=1)), rel=1e-14)

    def test_symmetric_beta_admissible(self, grid4, rng):
        assert check_divergence_kernel(beta_embed(BetaKernel.random(grid4, 3, rng))).max_residual <= 1e-14

    def test_antisymmetric_beta_rejected(self, grid4, rng):
        vals = AlphaKernel.random(grid4, 3, rng).values
        res = check_divergence_kernel(beta_embed(BetaKernel(grid4, vals)))
        assert not res.passed
        assert res.max_residual == pytest.approx(np.max(np.linalg.norm(2 * vals, axis=1)), rel=1e-14)

    def test_zero_kernel(self, grid3):
        z = GeneralKernel.zeros(grid3, 3)
        assert check_divergence_kernel(z).max_residual == 0.0
        assert check_constant_kernel_condition(z).max_residual == 0.0

    def test_random_divergence_projection(self, grid3, rng):
        assert check_divergence_kernel(GeneralKernel.random_divergence(grid3, 2, rng)).passed
        assert not check_divergence_kernel(GeneralKernel.random(grid3, 2, rng)).passed

    def test_residual_brute_force(self, grid3, rng):
        g = GeneralKernel.random(grid3, 2, rng)
        w = grid3.weights
        ref = sum(w[i] * g.values[i] for i in range(grid3.n))
        np.testing.assert_allclose(divergence_kernel_residual(g), ref, atol=1e-14)

    def test_lambda_bump_residual_is_reported(self, grid4, rng):
        a = peridynamic_alpha(grid4)
        kl = LambdaAlphaKernel(LambdaAlphaKernel.gaussian_bump(grid4, grid4.horizon), a)
        dense = lambda_alpha_embed(kl).dense()
        ref = np.max(np.linalg.norm(np.einsum("i,ijlc->jlc", grid4.weights, dense), axis=-1))
        assert check_lambda_alpha_admissibility(kl).max_residual == pytest.approx(ref, rel=1e-12)


class TestConstantCondition:
    def test_peridynamic_alpha_violates(self, grid4):
        assert check_constant_kernel_condition(alpha_embed(peridynamic_alpha(grid4))).max_residual > 1e-3

    def test_beta_satisfies(self, grid4, rng):
        assert check_constant_kernel_condition(beta_embed(BetaKernel.random(grid4, 3, rng))).max_residual <= 1e-14


class TestPeridynamicAlpha:
    def test_line_value(self, line4):
        a = peridynamic_alpha(line4)
        assert a.values[_pair_index(line4, 0, 1), 0] == pytest.approx(4.0, rel=1e-15)
        assert a.values[_pair_index(line4, 1, 0), 0] == pytest.approx(-4.0, rel=1e-15)

    def test_antisymmetric(self, grid4):
        assert peridynamic_alpha(grid4).parity_residual(-1.0) <= 1e-15

    def test_outside_horizon_is_zero(self, line4):
        assert peridynamic_alpha(line4).dense()[0, 2, 0] == 0.0


class TestGeneralKernel:
    def test_rule_and_values_agree(self, grid3, rng):
        g = GeneralKernel.random(grid3, 3, rng)
        lazy = GeneralKernel(grid3, 3, rule=lambda i: g.values[i])
        np.testing.assert_array_equal(lazy.dense(), g.values)
        assert lazy.weighted_norm() == pytest.approx(g.weighted_norm(), rel=1e-14)

    def test_exactly_one_source(self, grid3):
        with pytest.raises(ConfigurationError):
            GeneralKernel(grid3, 3)

    def test_shape_checked(self, grid3):
        with pytest.raises(DimensionError):
            GeneralKernel(grid3, 3, values=np.zeros((2, 2, 2, 3)))
