import math

import numpy as np
import pytest

import oracles
from fields import random_field, sine_z
from detwave.errors import ConfigError, ParameterError
from detwave.spectral import (
    Field,
    TorusGrid,
    curl,
    divergence,
    from_physical,
    gradient_scalar,
    grad_linf,
    inner,
    l2_norm,
    laplacian,
    leray_project,
    lp_norm,
    random_divfree_field,
    to_physical,
)
from detwave.littlewood_paley import decompose


@pytest.fixture(scope="module")
def grid():
    return TorusGrid(2, 32)


class TestGrid:
    @pytest.mark.parametrize("N", [6, 33, 0])
    def test_rejects_bad_sizes(self, N):
        with pytest.raises(ConfigError):
            TorusGrid(2, N)

    def test_rejects_bad_dimension(self):
        with pytest.raises(ConfigError):
            TorusGrid(4, 16)

    def test_non_power_of_two_allowed(self):
        assert TorusGrid(2, 48).q_max == 4
        assert TorusGrid(2, 96).q_max == 5

    def test_q_max_covers_dealiased_band(self):
        for n, N in [(2, 32), (2, 64), (3, 32)]:
            g = TorusGrid(n, N)
            assert g.k_max <= 0.75 * 2.0 ** (g.q_max + 1)
            assert g.k_max > 0.75 * 2.0 ** g.q_max

    def test_dealias_mask_is_strict_two_thirds(self):
        g = TorusGrid(2, 48)
        kept = np.abs(g.k[0][g.dealias_mask])
        assert kept.max() == 15

    def test_wavevector_index_roundtrip(self, grid):
        idx = grid.wavevector_index((-3, 5))
        assert grid.k[0][idx] == -3 and grid.k[1][idx] == 5


class TestTransforms:
    def test_roundtrip_identity(self, grid):
        f = random_field(grid, 1)
        back = from_physical(to_physical(f), grid)
        assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-13

    def test_parseval(self, grid):
        f = random_field(grid, 2)
        mean_sq = float(np.mean(np.sum(to_physical(f) ** 2, axis=0)))
        assert l2_norm(f) ** 2 == pytest.approx(mean_sq, rel=1e-12)

    def test_single_mode_is_real(self, grid):
        f = Field.single_mode(grid, (2, -1), [0.3, 0.6, 1j])
        assert f.hermitian_defect() == 0.0

    def test_rejects_wrong_shape(self, grid):
        with pytest.raises(ConfigError):
            from_physical(np.zeros((3, 8, 8)), grid)


class TestOperators:
    def test_div_curl_vanishes(self, grid):
        f = random_field(grid, 3)
        c = curl(f)
        scale = np.max(np.abs(c.coeffs))
        assert np.max(np.abs(divergence(c))) <= 1e-12 * scale * 2 * math.pi * grid.N

    def test_curl_grad_vanishes(self, grid):
        rng = np.random.default_rng(4)
        phi = np.fft.fftn(rng.standard_normal(grid.shape), norm="forward")
        g = gradient_scalar(phi, grid)
        assert np.max(np.abs(curl(g).coeffs)) <= 1e-12 * np.max(np.abs(g.coeffs)) * grid.N

    def test_curl_curl_identity(self, grid):
        f = random_field(grid, 5)
        lhs = curl(curl(f)) + laplacian(f)
        rhs = gradient_scalar(divergence(f), grid)
        diff = lhs - rhs
        # the identity holds away from the Nyquist planes where derivative symbols are zeroed
        mask = ~grid.nyquist
        scale = np.max(np.abs(laplacian(f).coeffs))
        assert np.max(np.abs(diff.coeffs[:, mask])) <= 1e-12 * scale

    def test_laplacian_symbol(self, grid):
        f = Field.single_mode(grid, (3, 1), [0.0, 0.0, 1.0])
        lap = laplacian(f)
        factor = -4 * math.pi**2 * 10
        assert lap.coefficient((3, 1))[2] == pytest.approx(factor)

    def test_laplacian_of_constant(self, grid):
        c = np.zeros((3,) + grid.shape, dtype=complex)
        c[:, 0, 0] = [1.0, 2.0, 3.0]
        assert np.all(laplacian(Field(grid, c)).coeffs == 0)

    def test_leray_idempotent(self, grid):
        f = leray_project(random_field(grid, 6))
        again = leray_project(f)
        assert np.max(np.abs(again.coeffs - f.coeffs)) <= 1e-13

    def test_leray_kills_gradients(self, grid):
        rng = np.random.default_rng(7)
        phi = np.fft.fftn(rng.standard_normal(grid.shape), norm="forward")
        g = gradient_scalar(phi, grid)
        assert np.max(np.abs(leray_project(g).coeffs)) <= 1e-13 * max(1.0, np.max(np.abs(g.coeffs)))

    def test_leray_orthogonal(self, grid):
        f = random_field(grid, 8)
        p = leray_project(f)
        assert abs(inner(p, f - p)) <= 1e-12 * l2_norm(f) ** 2

    def test_leray_output_solenoidal(self, grid):
        f = random_field(grid, 9)
        p = leray_project(f)
        assert p.divergence_defect() <= 1e-13 * l2_norm(f)

    def test_leray_keeps_mean(self, grid):
        f = random_field(grid, 10)
        assert np.array_equal(leray_project(f).coeffs[:, 0, 0], f.coeffs[:, 0, 0])


class TestNorms:
    def test_sine_l2(self, grid):
        assert lp_norm(sine_z(grid), 2) == pytest.approx(1 / math.sqrt(2), rel=1e-13)

    @pytest.mark.parametrize("r", [4.0, 6.0])
    def test_sine_lr_even_exact(self, grid, r):
        # sin^r is a trigonometric polynomial for even r, so quadrature is exact
        assert lp_norm(sine_z(grid), r) == pytest.approx(oracles.sine_lr_norm(r), rel=1e-13)

    @pytest.mark.parametrize("r", [1.0, 3.0])
    def test_sine_lr_odd_converges(self, r):
        exact = oracles.sine_lr_norm(r)
        # |sin|^r has kinks, so plain quadrature converges at O(N^-2) or better
        errs = [abs(lp_norm(sine_z(TorusGrid(2, N)), r) - exact) for N in (32, 64)]
        assert errs[0] < 3e-3
        assert errs[1] < errs[0] / 3.5

    def test_sine_linf(self):
        g = TorusGrid(2, 64)
        assert abs(lp_norm(sine_z(g), math.inf) - 1.0) <= 1e-3

    def test_linf_sampling_converges(self):
        # with k = 3 the peaks fall between samples at N = 10 but on a sample at N = 12
        coarse = lp_norm(sine_z(TorusGrid(2, 10), 3), math.inf)
        fine = lp_norm(sine_z(TorusGrid(2, 12), 3), math.inf)
        assert coarse < 1.0 and fine == pytest.approx(1.0, abs=1e-15)

    def test_zero_field(self, grid):
        z = Field.zeros(grid)
        for p in (1, 2, 3, math.inf):
            assert lp_norm(z, p) == 0.0

    def test_p_below_one_rejected(self, grid):
        with pytest.raises(ParameterError):
            lp_norm(sine_z(grid), 0.5)

    def test_l2_parseval_vs_quadrature(self, grid):
        f = random_field(grid, 11)
        quad = float(np.sqrt(np.mean(np.sum(to_physical(f) ** 2, axis=0))))
        assert lp_norm(f, 2) == pytest.approx(quad, rel=1e-12)

    def test_grad_linf_matches_oracle(self, grid):
        f = random_divfree_field(grid, 12, (0, 2), 1.0)
        assert grad_linf(f) == pytest.approx(oracles.gradient_sup(f.coeffs, grid), rel=1e-12)

    def test_grad_linf_single_mode(self):
        g = TorusGrid(2, 64)
        # (0, 0, sin 2 pi x): gradient magnitude 2 pi |cos 2 pi x|, maximal on a sample
        assert grad_linf(sine_z(g)) == pytest.approx(2 * math.pi, rel=1e-12)


class TestRandomFields:
    def test_deterministic(self, grid):
        a = random_divfree_field(grid, 3, (0, 2), 1.0)
        b = random_divfree_field(grid, 3, (0, 2), 1.0)
        assert np.array_equal(a.coeffs, b.coeffs)

    def test_amplitude_and_solenoidal(self, grid):
        f = random_divfree_field(grid, 4, (0, 1), 1.0)
        assert l2_norm(f) == pytest.approx(1.0, abs=1e-12)
        assert f.divergence_defect() <= 1e-12
        assert f.hermitian_defect() <= 1e-15

    def test_block_support(self):
        g = TorusGrid(2, 64)
        f = random_divfree_field(g, 5, (0, 1), 1.0)
        blocks = decompose(f)
        for q in range(3, blocks.q_max + 1):
            assert np.max(np.abs(blocks[q].coeffs)) == 0.0

    def test_zero_amplitude(self, grid):
        f = random_divfree_field(grid, 6, (0, 1), 0.0)
        assert np.all(f.coeffs == 0)

    def test_empty_band_rejected(self, grid):
        with pytest.raises(ParameterError):
            random_divfree_field(grid, 0, (3, 1), 1.0)

    def test_band_beyond_grid_rejected(self, grid):
        with pytest.raises(ParameterError):
            random_divfree_field(grid, 0, (0, grid.q_max + 1), 1.0)

    def test_grid_independent(self):
        a = random_divfree_field(TorusGrid(2, 64), 9, (0, 2), 1.0)
        b = random_divfree_field(TorusGrid(2, 96), 9, (0, 2), 1.0)
        for k in [(1, 0), (2, -3), (-4, 1), (5, 5)]:
            assert np.allclose(a.coefficient(k), b.coefficient(k), rtol=0, atol=1e-15)
