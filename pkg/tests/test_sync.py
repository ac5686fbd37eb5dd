import numpy as np
import pytest

from detwave.dynamics import EMHD, HALL, PhysicsParams
from detwave.errors import ConfigError, DegenerateFitError
from detwave.littlewood_paley import partial_sum
from detwave.spectral import Field, TorusGrid, l2_norm, random_divfree_field
from detwave.sync_lab import (
    SYNC_COLUMNS,
    Perturbation,
    SyncConfig,
    SyncRunner,
    admissible_s_interval,
    assimilate_low_modes,
    decay_fit,
    default_s,
    initial_pair,
    run_sync,
    sync_step,
)
from detwave.wavenumbers import WavenumberParams


@pytest.fixture(scope="module")
def grid():
    return TorusGrid(2, 32)


def make_config(grid, **kw):
    defaults = dict(grid=grid, physics=PhysicsParams(), wavenumber=WavenumberParams(n=grid.n))
    defaults.update(kw)
    return SyncConfig(**defaults)


class TestInterval:
    def test_emhd(self):
        lo, hi = admissible_s_interval(EMHD, 2, 3.0)
        assert lo == pytest.approx(-2 / 3) and hi == pytest.approx(-1 / 3)

    def test_hall(self):
        lo, hi = admissible_s_interval(HALL, 2, 3.0, delta=0.5, sigma=0.5)
        assert lo == pytest.approx(-0.5) and hi == pytest.approx(-1 / 3)

    def test_default_midpoint(self):
        assert default_s(EMHD, 2, 3.0) == pytest.approx(-0.5)

    def test_unknown_system(self):
        with pytest.raises(ConfigError):
            admissible_s_interval("mhd", 2, 3.0)

    @pytest.mark.parametrize("s", [-0.7, -1 / 3, 0.0])
    def test_s_outside_interval_rejected(self, grid, s):
        with pytest.raises(ConfigError, match="admissible interval"):
            make_config(grid, s=s)

    def test_hall_needs_regularity(self, grid):
        with pytest.raises(ConfigError, match="1 - n/r"):
            make_config(grid, system=HALL, wavenumber=WavenumberParams(delta=0.1, sigma=0.5))
        make_config(grid, system=HALL, wavenumber=WavenumberParams(delta=0.5, sigma=0.5))


class TestAssimilation:
    def test_low_modes_match_exactly(self, grid):
        ref = random_divfree_field(grid, 1, (-1, grid.q_max), 1.0)
        fol = random_divfree_field(grid, 2, (-1, grid.q_max), 1.0)
        out = assimilate_low_modes(ref, fol, 2)
        low = grid.kmag < 8.0
        assert np.array_equal(out.coeffs[:, low], ref.coeffs[:, low])
        assert np.array_equal(out.coeffs[:, ~low], fol.coeffs[:, ~low])
        assert l2_norm(partial_sum(ref - out, 2)) == 0.0

    def test_idempotent(self, grid):
        ref = random_divfree_field(grid, 3, (-1, grid.q_max), 1.0)
        fol = random_divfree_field(grid, 4, (-1, grid.q_max), 1.0)
        once = assimilate_low_modes(ref, fol, 1)
        twice = assimilate_low_modes(ref, once, 1)
        assert np.array_equal(once.coeffs, twice.coeffs)

    def test_saturated_copies_everything(self, grid):
        ref = random_divfree_field(grid, 5, (-1, grid.q_max), 1.0)
        fol = random_divfree_field(grid, 6, (-1, grid.q_max), 1.0)
        assert np.array_equal(assimilate_low_modes(ref, fol, None).coeffs, ref.coeffs)

    def test_top_index_copies_resolved_band(self, grid):
        ref = random_divfree_field(grid, 7, (-1, grid.q_max), 1.0)
        fol = random_divfree_field(grid, 8, (-1, grid.q_max), 1.0)
        out = assimilate_low_modes(ref, fol, grid.q_max)
        assert l2_norm(out - ref) == 0.0

    def test_grid_mismatch(self, grid):
        with pytest.raises(ConfigError):
            assimilate_low_modes(Field.zeros(grid), Field.zeros(TorusGrid(2, 16)), 1)


class TestRuns:
    def test_identical_states_stay_identical(self, grid):
        cfg = make_config(grid, perturbation=Perturbation(fraction=0.0), t_end=1.0, max_steps=10)
        rec = run_sync(cfg)
        assert np.all(rec.column("hs_norm_h") == 0.0)

    def test_columns(self, grid):
        cfg = make_config(grid, t_end=1.0, max_steps=3)
        rec = run_sync(cfg)
        assert len(rec.rows) == 4
        assert tuple(rec.rows[0]) == SYNC_COLUMNS
        assert np.all(np.isnan(rec.column("hs_norm_w")))

    def test_low_mode_residual_vanishes(self, grid):
        cfg = make_config(grid, amplitude_b=0.01, t_end=1.0, max_steps=10)
        rec = run_sync(cfg)
        assert rec.low_mode_residual and max(rec.low_mode_residual) == 0.0

    def test_saturated_run_synchronizes_immediately(self, grid):
        # unit-amplitude data saturates, so the whole follower is replaced
        cfg = make_config(grid, t_end=1.0, max_steps=5)
        rec = run_sync(cfg)
        assert rec.rows[0]["hs_norm_h"] > 0
        assert rec.saturated_steps == 5
        assert np.all(rec.column("hs_norm_h")[1:] == 0.0)

    def test_control_run_does_not_synchronize(self, grid):
        cfg = make_config(grid, amplitude_b=0.01, assimilate=False, t_end=1.0, max_steps=20)
        rec = run_sync(cfg)
        h = rec.column("hs_norm_h")
        assert np.all(h > 0) and h[-1] > 1e-3 * h[0]
        assert rec.low_mode_residual == []

    def test_hall_run(self, grid):
        cfg = make_config(grid, system=HALL, wavenumber=WavenumberParams(delta=0.5, sigma=0.5),
                          amplitude_b=0.01, amplitude_u=0.01, t_end=1.0, max_steps=5)
        rec = run_sync(cfg)
        assert np.all(np.isfinite(rec.column("hs_norm_w")))
        assert np.all(rec.difference_norm() >= rec.column("hs_norm_h"))

    def test_deterministic(self, grid):
        cfg = make_config(grid, amplitude_b=0.01, t_end=1.0, max_steps=5)
        a, b = run_sync(cfg), run_sync(cfg)
        assert a.rows == b.rows

    def test_single_step_helper(self, grid):
        cfg = make_config(grid, amplitude_b=0.01)
        ref, fol = initial_pair(cfg)
        r1, f1, row = sync_step(ref, fol, cfg, 1e-3)
        r2, f2, row2 = SyncRunner(cfg).sync_step(ref, fol, 1e-3)
        assert row == row2 and r1.t == pytest.approx(1e-3)

    def test_perturbation_size(self, grid):
        cfg = make_config(grid, perturbation=Perturbation(seed=3, band=(2, None), fraction=0.25))
        ref, fol = initial_pair(cfg)
        assert l2_norm(fol.b - ref.b) == pytest.approx(0.25 * l2_norm(ref.b), rel=1e-12)
        assert l2_norm(partial_sum(fol.b - ref.b, 0)) == 0.0

    def test_difference_decays_when_unsaturated(self):
        g = TorusGrid(2, 32)
        cfg = make_config(g, wavenumber=WavenumberParams(c_r=9.0), amplitude_b=0.02,
                          t_end=1.0, max_steps=200)
        rec = run_sync(cfg)
        assert rec.saturated_steps == 0
        h = rec.difference_norm()
        assert np.all(rec.column("Q_B")[1:] < g.q_max)
        assert h[-1] < 1e-3 * h[1]


class TestDecayFit:
    def test_exponential(self):
        t = np.linspace(0, 2, 50)
        rate, r2 = decay_fit(t, 5 * np.exp(-3 * t))
        assert rate == pytest.approx(3.0, rel=1e-12) and r2 == pytest.approx(1.0)

    def test_constant_series(self):
        t = np.linspace(0, 1, 30)
        rate, r2 = decay_fit(t, np.full(30, 2.0))
        assert rate == pytest.approx(0.0, abs=1e-12) and r2 == 1.0

    def test_transient_skipped(self):
        t = np.linspace(0, 2, 60)
        x = np.exp(-2 * t)
        x[:5] = 100.0
        rate, r2 = decay_fit(t, x, skip=5)
        assert rate == pytest.approx(2.0, rel=1e-12)
        rate, _ = decay_fit(t, x, t_start=t[5])
        assert rate == pytest.approx(2.0, rel=1e-12)

    def test_degenerate(self):
        t = np.linspace(0, 1, 30)
        with pytest.raises(DegenerateFitError):
            decay_fit(t, np.zeros(30))
        with pytest.raises(DegenerateFitError):
            decay_fit(t[:10], np.exp(-t[:10]))
