"""Acceptance criteria, each run at its stated tolerance.

Every test prints one ``ACCEPTANCE <n>: PASS|FAIL`` line (also collected in
the terminal summary) before asserting. One supplementary check, labelled
as such, exercises the synchronization mechanism away from saturation.
"""

import math
import time

import numpy as np

import oracles
from conftest import ACCEPTANCE_LINES
from fields import wavenumber_corpus
from detwave import validation
from detwave.cli import main
from detwave.dynamics import (
    EMHD,
    HALL,
    Forcing,
    PhysicsParams,
    forced_equilibrium,
    initial_state,
    measure_whistler,
    simulate_run,
)
from detwave.errors import DegenerateFitError
from detwave.spectral import TorusGrid, random_divfree_field
from detwave.sync_lab import Perturbation, SyncConfig, decay_fit, run_sync
from detwave.wavenumbers import (
    WavenumberParams,
    average_bound_check,
    besov_bound_check,
    lambda_b,
    lambda_u,
    measure_gradient_bernstein,
)


def report(number: int, title: str, passed: bool, detail: str, elapsed: float) -> None:
    line = f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} {title} ({detail}; {elapsed:.1f} s)"
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_01_partition_of_unity():
    t = time.perf_counter()
    res = validation.partition_of_unity(N=128, n=2)
    ok = res.value <= 1e-12
    report(1, "partition of unity", ok, f"max error {res.value:.2e} <= 1e-12", time.perf_counter() - t)
    assert ok


def test_02_reconstruction_and_bony():
    t = time.perf_counter()
    rec = validation.dyadic_reconstruction(count=20, N=64)
    bony = validation.bony_identity(count=20, N=64)
    ok = rec.value <= 1e-12 and bony.value <= 1e-10
    report(2, "dyadic reconstruction and Bony identity", ok,
           f"reconstruction {rec.value:.2e} <= 1e-12, Bony {bony.value:.2e} <= 1e-10",
           time.perf_counter() - t)
    assert ok


def test_03_energy_neutrality():
    t = time.perf_counter()
    emhd = validation.emhd_energy_neutrality(count=20, N=64)
    hall = validation.hall_energy_neutrality(count=20, N=64)
    ok = emhd.value <= 1e-10 and hall.value <= 1e-10
    report(3, "nonlinear energy neutrality", ok,
           f"EMHD {emhd.value:.2e}, Hall-MHD {hall.value:.2e} <= 1e-10", time.perf_counter() - t)
    assert ok


def test_04_exact_diffusion():
    t = time.perf_counter()
    res = validation.exact_diffusion()
    ok = res.value <= 1e-12
    report(4, "exact diffusion", ok, f"decay factor error {res.value:.2e} <= 1e-12",
           time.perf_counter() - t)
    assert ok


def test_05_whistler_dispersion():
    t = time.perf_counter()
    grid = TorusGrid(2, 64)
    k = (2, 1)
    res = measure_whistler(grid, k, b0=1.0, axis=0, eps=1e-4, periods=1.25)
    oracle = oracles.whistler_linear_frequency((2, 1, 0), (1.0, 0.0, 0.0))
    crossing = oracles.zero_crossing_frequency(res["times"], res["signal"])
    err_cross = abs(crossing - oracle) / oracle
    err_fit = abs(res["omega"] - oracle) / oracle
    ok = err_cross <= 1e-2 and err_fit <= 1e-2
    report(5, "whistler dispersion", ok,
           f"oracle {oracle:.6g}, zero-crossing rel err {err_cross:.2e}, fit rel err {err_fit:.2e} <= 1e-2",
           time.perf_counter() - t)
    assert ok


def test_06_energy_inequality():
    t = time.perf_counter()
    grid = TorusGrid(2, 64)
    rec = simulate_run(initial_state(grid, EMHD, 3, (0, 2), math.sqrt(2)), PhysicsParams(mu=0.05),
                       1.0, max_steps=1000)
    ts = np.array([r["t"] for r in rec.series])
    e = np.array([r["energy"] for r in rec.series])
    d = np.array([r["dissipation"] for r in rec.series])
    davg = 0.5 * (d[1:] + d[:-1])
    resid = np.max(np.abs(np.diff(e) / np.diff(ts) + davg) / davg)
    monotone = bool(np.all(np.diff(e) <= 0))
    ok = monotone and resid <= 1e-2 and rec.blowup is None
    report(6, "energy inequality", ok,
           f"{len(ts) - 1} steps, nonincreasing={monotone}, max balance residual {resid:.2e} <= 1e-2",
           time.perf_counter() - t)
    assert ok


def test_07_lambda_oracle_equivalence():
    t = time.perf_counter()
    grid = TorusGrid(2, 32)
    wp = WavenumberParams(n=2, r=3.0, delta=0.1, sigma=0.5, c_r=0.05, mu=0.05, nu=0.05)
    corpus = wavenumber_corpus(grid)
    mismatches = 0
    for f in corpus:
        ob = oracles.brute_lambda_b(f.coeffs, grid, 3.0, 0.1, 0.05, 0.05, q_floor=grid.q_max)
        ou = oracles.brute_lambda_u(f.coeffs, grid, 0.5, 0.05, 0.05, q_floor=grid.q_max)
        mismatches += (lambda_b(f, wp).q != ob) + (lambda_u(f, wp).q != ou)
    ok = mismatches == 0
    report(7, "determining wavenumber oracle equivalence", ok,
           f"{len(corpus)} fields, {mismatches} mismatches", time.perf_counter() - t)
    assert ok


def _sync_pair(config: SyncConfig):
    rec = run_sync(config)
    ctl = run_sync(SyncConfig(**{**config.__dict__, "assimilate": False}))
    return rec, ctl


def test_08_emhd_synchronization():
    t = time.perf_counter()
    grid = TorusGrid(2, 64)
    cfg = SyncConfig(
        grid=grid, physics=PhysicsParams(mu=0.05),
        wavenumber=WavenumberParams(n=2, r=3.0, delta=0.1, c_r=0.05, mu=0.05),
        system=EMHD, s=-0.5, perturbation=Perturbation(seed=1000, band=(2, None), fraction=0.1),
        amplitude_b=math.sqrt(2), t_end=1.0, max_steps=200,
    )
    rec, ctl = _sync_pair(cfg)
    h, hc = rec.difference_norm(), ctl.difference_norm()
    ratio, ratio_ctl = h[-1] / h[0], hc[-1] / hc[0]
    try:
        _, goodness = decay_fit(rec.column("t"), h, skip=1)
        fit = f"fit R^2 {goodness:.4f}"
    except DegenerateFitError as exc:
        goodness = math.nan
        fit = f"fit degenerate: {exc}"
    ok = ratio <= 1e-3 and ratio_ctl >= 10 * ratio and goodness >= 0.95
    report(8, "EMHD synchronization", ok,
           f"ratio {ratio:.2e} <= 1e-3, control {ratio_ctl:.3g}, {fit} (>= 0.95 needed), "
           f"saturated steps {rec.saturated_steps}/{len(rec.rows) - 1}, T_end {rec.rows[-1]['t']:.3g}",
           time.perf_counter() - t)
    assert ok


def test_08_supplementary_unsaturated_mechanism():
    """Not an acceptance criterion: the same protocol where the wavenumber stays below the grid scale.

    A larger threshold constant and smaller data keep the assimilation index
    finite, so the difference above it must decay by dissipation alone.
    """
    t = time.perf_counter()
    grid = TorusGrid(2, 64)
    cfg = SyncConfig(
        grid=grid, physics=PhysicsParams(mu=0.05),
        wavenumber=WavenumberParams(n=2, r=3.0, delta=0.1, c_r=9.0, mu=0.05),
        system=EMHD, s=-0.5, perturbation=Perturbation(seed=1000, band=(2, None), fraction=0.1),
        amplitude_b=0.1, dt_max=1e-2, t_end=100.0, max_steps=600,
    )
    rec, ctl = _sync_pair(cfg)
    h, hc = rec.difference_norm(), ctl.difference_norm()
    ratio, ratio_ctl = h[-1] / h[0], hc[-1] / hc[0]
    rate, goodness = decay_fit(rec.column("t"), h, skip=1)
    ok = (rec.saturated_steps == 0 and ratio <= 1e-3 and ratio_ctl >= 10 * ratio
          and goodness >= 0.95)
    line = (f"SUPPLEMENTARY: {'PASS' if ok else 'FAIL'} unsaturated synchronization mechanism "
            f"(ratio {ratio:.2e}, control {ratio_ctl:.3g}, rate {rate:.4g}, fit R^2 {goodness:.5f}, "
            f"saturated steps 0 required, got {rec.saturated_steps}; {time.perf_counter() - t:.1f} s)")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok


def test_09_hall_synchronization():
    t = time.perf_counter()
    grid = TorusGrid(2, 48)
    cfg = SyncConfig(
        grid=grid, physics=PhysicsParams(nu=0.05, mu=0.05),
        wavenumber=WavenumberParams(n=2, r=3.0, delta=0.5, sigma=0.5, c_r=0.05, mu=0.05, nu=0.05),
        system=HALL, perturbation=Perturbation(seed=1000, band=(2, None), fraction=0.1),
        amplitude_b=1.0, amplitude_u=1.0, t_end=1.0, max_steps=200,
    )
    rec, ctl = _sync_pair(cfg)
    rh = rec.column("hs_norm_h")[-1] / rec.column("hs_norm_h")[0]
    rw = rec.column("hs_norm_w")[-1] / rec.column("hs_norm_w")[0]
    ch = ctl.column("hs_norm_h")[-1] / ctl.column("hs_norm_h")[0]
    cw = ctl.column("hs_norm_w")[-1] / ctl.column("hs_norm_w")[0]
    ok = rh <= 1e-2 and rw <= 1e-2 and ch >= 10 * rh and cw >= 10 * rw
    report(9, "Hall-MHD synchronization", ok,
           f"s={rec.s:.4g}, h ratio {rh:.2e}, w ratio {rw:.2e} <= 1e-2, control h {ch:.3g}, w {cw:.3g}, "
           f"saturated steps {rec.saturated_steps}/{len(rec.rows) - 1}",
           time.perf_counter() - t)
    assert ok


def _forced_report(N: int):
    grid = TorusGrid(2, N)
    physics = PhysicsParams(mu=0.05, forcing=Forcing(amplitude=0.008, band=(0, 1), target="b", seed=7))
    wp = WavenumberParams(n=2, r=3.0, delta=0.1, c_r=0.05, mu=0.05, delta_b=2.5)
    t_end = 2.0
    rec = simulate_run(forced_equilibrium(grid, physics), physics, t_end, dt_max=1e-2,
                       snapshot_dt=t_end / 40)
    snaps = [s for s in rec.snapshots if s.t >= t_end / 4 - 1e-12]
    return average_bound_check([s.t for s in snaps], [s.b for s in snaps], wp)


def test_10_average_consistency():
    t = time.perf_counter()
    r64 = _forced_report(64)
    r96 = _forced_report(96)
    lemma_ok = all(r.saturated_count == 0 and math.isfinite(r.lemma_max_ratio) for r in (r64, r96))
    finite = math.isfinite(r64.quotient) and math.isfinite(r96.quotient)
    drift = abs(r96.quotient / r64.quotient - 1.0) if finite else math.inf
    ok = lemma_ok and finite and drift <= 0.2
    report(10, "time-averaged wavenumber consistency", ok,
           f"quotient N=64 {r64.quotient:.5g}, N=96 {r96.quotient:.5g}, drift {drift:.2%} <= 20%; "
           f"lemma constant {r64.lemma_max_ratio:.4g} / {r96.lemma_max_ratio:.4g}; "
           f"intermittency ratio {r64.intermittency_ratio:.4g} / {r96.intermittency_ratio:.4g}; "
           f"<Lambda> {r64.mean_lambda:.4g} / {r96.mean_lambda:.4g}; "
           f"saturated {r64.saturated_count + r96.saturated_count}",
           time.perf_counter() - t)
    assert ok


def test_11_besov_bound():
    t = time.perf_counter()
    grid = TorusGrid(3, 32)
    wp = WavenumberParams(n=3, r=4.0, delta=1.5)
    rng = np.random.default_rng(11)
    fields = [random_divfree_field(grid, 2000 + i, (-1, grid.q_max), 10 ** rng.uniform(-7, -1))
              for i in range(100)]
    cgrad = measure_gradient_bernstein(fields, 4.0)
    checks = [besov_bound_check(f, wp, cgrad) for f in fields]
    failures = sum(not c.ok for c in checks)
    saturated = sum(c.saturated for c in checks)
    ok = failures == 0
    report(11, "Besov uniform bound", ok,
           f"{len(checks)} fields, {failures} violations, constant {checks[0].constant:.4g}, "
           f"measured gradient Bernstein constant {cgrad:.4g}, {saturated} saturated",
           time.perf_counter() - t)
    assert ok


def test_12_determinism(tmp_path):
    t = time.perf_counter()
    common = ["--set", "grid.N=32", "--set", "run.T_end=0.05", "--set", "run.snapshot_cadence=2",
              "--set", "run.amplitude_b=0.01"]

    def files(d):
        return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}

    outs = []
    for name in ("first", "second"):
        root = tmp_path / name
        codes = [
            main(["simulate", *common, "--out", str(root / "sim")]),
            main(["analyze", str(root / "sim"), "--out", str(root / "ana")]),
            main(["sync", *common, "--out", str(root / "sync")]),
        ]
        assert codes == [0, 0, 0]
        outs.append(files(root))
    # analysis metadata records its source directory, which differs by construction
    for out in outs:
        out.pop("ana/metadata.json")
    same = outs[0] == outs[1]
    report(12, "determinism", same, f"{len(outs[0])} files byte-identical={same}", time.perf_counter() - t)
    assert same
