"""Two-solution synchronization harness.

A reference and a follower solution are advanced side by side. After every
step the follower's modes with ``|k| < 2^(Q+1)`` are overwritten by the
reference's, where ``2^Q`` is the larger of the two determining wavenumbers.
This enforces ``(reference - follower)_{<=Q} = 0`` exactly at step
boundaries; the record tracks the H^s norm of the remaining difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    EMHD,
    HALL,
    PhysicsParams,
    SimState,
    Stepper,
    cfl_dt,
    energy,
    initial_state,
)
from .errors import BlowUpError, ConfigError, DegenerateFitError
from .littlewood_paley import hs_norm, partial_sum
from .spectral import Field, TorusGrid, l2_norm, random_divfree_field
from .wavenumbers import (
    DeterminingWavenumber,
    WavenumberParams,
    lambda_b,
    lambda_pair_max,
    lambda_u,
)

SYNC_COLUMNS = (
    "t", "hs_norm_h", "hs_norm_w", "lambda_b1", "lambda_b2", "lambda_u1",
    "lambda_u2", "Q_B", "Q_U", "saturated", "energy1", "energy2",
)


def admissible_s_interval(system: str, n: int, r: float, delta: float = 0.0,
                          sigma: float = 1.0) -> tuple[float, float]:
    """Open interval of Sobolev indices covered by the synchronization theorems."""
    upper = n / r - 1.0
    if system == EMHD:
        return (-n / r, upper)
    if system == HALL:
        return (-min(n / r, delta, sigma), upper)
    raise ConfigError(f"system must be 'emhd' or 'hall', got {system!r}")


def default_s(system: str, n: int, r: float, delta: float = 0.0, sigma: float = 1.0) -> float:
    lo, hi = admissible_s_interval(system, n, r, delta, sigma)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Perturbation:
    """Follower offset: a seeded divergence-free field in blocks ``band``.

    ``fraction`` scales it relative to the reference field's L2 norm.
    ``band[1] = None`` means the top resolved block.
    """

    seed: int = 1000
    band: tuple = (2, None)
    fraction: float = 0.1


@dataclass(frozen=True)
class SyncConfig:
    grid: TorusGrid
    physics: PhysicsParams
    wavenumber: WavenumberParams
    system: str = EMHD
    s: float | None = None
    perturbation: Perturbation = Perturbation()
    assimilate: bool = True
    seed: int = 0
    init_band: tuple = (0, 1)
    amplitude_b: float = 1.0
    amplitude_u: float = 1.0
    dt_max: float = 1e-2
    c_cfl: float = 0.3
    t_end: float = 0.0
    max_steps: int | None = None

    def __post_init__(self):
        if self.system not in (EMHD, HALL):
            raise ConfigError(f"system must be 'emhd' or 'hall', got {self.system!r}")
        wp = self.wavenumber
        if wp.n != self.grid.n:
            raise ConfigError(f"wavenumber params are for n={wp.n}, grid has n={self.grid.n}")
        if self.system == HALL:
            floor = 1.0 - wp.n / wp.r
            if not (wp.delta > floor and wp.sigma > floor):
                raise ConfigError(
                    f"Hall-MHD synchronization needs delta, sigma > 1 - n/r = {floor:g} "
                    f"(got delta={wp.delta}, sigma={wp.sigma})"
                )
        lo, hi = admissible_s_interval(self.system, wp.n, wp.r, wp.delta, wp.sigma)
        if not lo < self.s_value < hi:
            raise ConfigError(
                f"s={self.s_value} outside the admissible interval ({lo:g}, {hi:g}) "
                f"for {self.system}"
            )

    @property
    def s_value(self) -> float:
        if self.s is not None:
            return self.s
        wp = self.wavenumber
        return default_s(self.system, wp.n, wp.r, wp.delta, wp.sigma)


def assimilate_low_modes(reference: Field, follower: Field, Q: int | None) -> Field:
    """Follower with every mode ``|k| < 2^(Q+1)`` replaced by the reference's.

    ``Q = None`` (saturated wavenumber) replaces the whole field.
    """
    if reference.grid != follower.grid:
        raise ConfigError(f"grid mismatch: {reference.grid} vs {follower.grid}")
    if Q is None:
        return Field(reference.grid, reference.coeffs.copy(), reference.divfree)
    low = reference.grid.kmag < 2.0 ** (Q + 1)
    coeffs = np.where(low[None], reference.coeffs, follower.coeffs)
    return Field(follower.grid, coeffs, reference.divfree and follower.divfree)


@dataclass
class SyncRecord:
    rows: list = field(default_factory=list)
    low_mode_residual: list = field(default_factory=list)
    blowup: BlowUpError | None = None
    system: str = EMHD
    s: float = 0.0
    assimilate: bool = True

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows], dtype=np.float64)

    @property
    def saturated_steps(self) -> int:
        return int(sum(row["saturated"] for row in self.rows[1:]))

    def difference_norm(self) -> np.ndarray:
        """``sqrt(||h||_{H^s}^2 + ||w||_{H^s}^2)`` per row."""
        h = self.column("hs_norm_h")
        w = self.column("hs_norm_w")
        w = np.where(np.isnan(w), 0.0, w)
        return np.sqrt(h**2 + w**2)


def _lambdas(state: SimState, params: WavenumberParams):
    wb = lambda_b(state.b, params)
    wu = lambda_u(state.u, params) if state.u is not None else None
    return wb, wu


def _row(t, s, ref: SimState, fol: SimState, wb1, wb2, wu1, wu2, WB, WU) -> dict:
    h = ref.b - fol.b
    hall = ref.u is not None
    saturated = (not WB.finite) or (hall and not WU.finite)
    return {
        "t": t,
        "hs_norm_h": hs_norm(h, s),
        "hs_norm_w": hs_norm(ref.u - fol.u, s) if hall else math.nan,
        "lambda_b1": wb1.lam,
        "lambda_b2": wb2.lam,
        "lambda_u1": wu1.lam if hall else math.nan,
        "lambda_u2": wu2.lam if hall else math.nan,
        "Q_B": WB.q if WB.finite else -2,
        "Q_U": (WU.q if WU.finite else -2) if hall else -3,
        "saturated": int(saturated),
        "energy1": energy(ref),
        "energy2": energy(fol),
    }


def _assimilate(ref: SimState, fol: SimState, WB: DeterminingWavenumber,
                WU: DeterminingWavenumber | None) -> SimState:
    b = assimilate_low_modes(ref.b, fol.b, WB.q if WB.finite else None)
    u = None
    if fol.u is not None:
        u = assimilate_low_modes(ref.u, fol.u, WU.q if WU.finite else None)
    return SimState(fol.t, b, u)


def _residual(ref: SimState, fol: SimState, WB, WU, s: float) -> float:
    """H^s norm of the difference below the assimilation index (0 after assimilation)."""
    out = 0.0
    qb = WB.q if WB.finite else ref.grid.q_top
    out += hs_norm(partial_sum(ref.b - fol.b, qb), s) ** 2
    if ref.u is not None:
        qu = WU.q if WU.finite else ref.grid.q_top
        out += hs_norm(partial_sum(ref.u - fol.u, qu), s) ** 2
    return math.sqrt(out)


class SyncRunner:
    """Holds the steppers for a synchronization experiment."""

    def __init__(self, config: SyncConfig):
        self.config = config
        self.stepper = Stepper(config.grid, config.physics, config.system)

    def measure(self, ref: SimState, fol: SimState):
        wp = self.config.wavenumber
        wb1, wu1 = _lambdas(ref, wp)
        wb2, wu2 = _lambdas(fol, wp)
        WB = lambda_pair_max(wb1, wb2)
        WU = lambda_pair_max(wu1, wu2) if wu1 is not None else None
        return wb1, wb2, wu1, wu2, WB, WU

    def sync_step(self, ref: SimState, fol: SimState, dt: float, record: SyncRecord | None = None):
        """Advance both solutions, recompute the wavenumbers, assimilate, emit a row."""
        ref_new = self.stepper.step(ref, dt)
        fol_new = self.stepper.step(fol, dt)
        wb1, wb2, wu1, wu2, WB, WU = self.measure(ref_new, fol_new)
        if self.config.assimilate:
            fol_new = _assimilate(ref_new, fol_new, WB, WU)
        row = _row(ref_new.t, self.config.s_value, ref_new, fol_new, wb1, wb2, wu1, wu2, WB, WU)
        if record is not None:
            record.rows.append(row)
            if self.config.assimilate:
                record.low_mode_residual.append(
                    _residual(ref_new, fol_new, WB, WU, self.config.s_value)
                )
        return ref_new, fol_new, row


def sync_step(state1: SimState, state2: SimState, config: SyncConfig, dt: float):
    """One synchronization step; returns ``(state1', state2', row)``."""
    return SyncRunner(config).sync_step(state1, state2, dt)


def initial_pair(config: SyncConfig) -> tuple[SimState, SimState]:
    """Reference initial data and the perturbed follower."""
    grid = config.grid
    ref = initial_state(grid, config.system, config.seed, config.init_band,
                        config.amplitude_b, config.amplitude_u)
    pert = config.perturbation
    band = (pert.band[0], grid.q_max if pert.band[1] is None else pert.band[1])

    def offset(f: Field, seed: int) -> Field:
        if pert.fraction == 0.0:
            return Field.zeros(grid)
        return random_divfree_field(grid, seed, band, pert.fraction * l2_norm(f))

    b2 = ref.b + offset(ref.b, pert.seed)
    u2 = None if ref.u is None else ref.u + offset(ref.u, pert.seed + 1)
    return ref, SimState(0.0, b2, u2)


def run_sync(config: SyncConfig, progress=None) -> SyncRecord:
    """Full synchronization experiment.

    Row 0 holds the initial (un-assimilated) difference; assimilation is then
    applied at t = 0 and after every step. Time steps use the smaller CFL
    step of the two solutions.
    """
    runner = SyncRunner(config)
    ref, fol = initial_pair(config)
    s = config.s_value
    rec = SyncRecord(system=config.system, s=s, assimilate=config.assimilate)
    wb1, wb2, wu1, wu2, WB, WU = runner.measure(ref, fol)
    rec.rows.append(_row(0.0, s, ref, fol, wb1, wb2, wu1, wu2, WB, WU))
    if config.assimilate:
        fol = _assimilate(ref, fol, WB, WU)
    nstep = 0
    while ref.t < config.t_end * (1.0 - 1e-14):
        if config.max_steps is not None and nstep >= config.max_steps:
            break
        dt = min(
            cfl_dt(ref, config.physics, config.dt_max, config.c_cfl),
            cfl_dt(fol, config.physics, config.dt_max, config.c_cfl),
            config.t_end - ref.t,
        )
        try:
            ref, fol, _ = runner.sync_step(ref, fol, dt, rec)
        except BlowUpError as exc:
            exc.partial = rec
            rec.blowup = exc
            return rec
        nstep += 1
        if progress is not None:
            progress(nstep, rec.rows[-1])
    return rec


def decay_fit(times, values, t_start: float | None = None, skip: int = 0):
    """Least-squares fit of ``log X(t) = a - rate t`` on the post-transient samples.

    Returns ``(rate, r_squared)``. Needs at least 20 positive samples after
    the transient (``skip`` leading samples, or ``t < t_start``).
    """
    t = np.asarray(times, dtype=np.float64)
    x = np.asarray(values, dtype=np.float64)
    sel = np.ones_like(t, dtype=bool)
    sel[:skip] = False
    if t_start is not None:
        sel &= t >= t_start
    t, x = t[sel], x[sel]
    pos = x > 0
    if np.count_nonzero(pos) < 20:
        raise DegenerateFitError(
            f"need >= 20 positive post-transient samples, got {int(np.count_nonzero(pos))}"
        )
    t, y = t[pos], np.log(x[pos])
    if np.ptp(y) == 0.0:
        # a constant series is fitted exactly with zero rate
        return 0.0, 1.0
    A = np.vstack([np.ones_like(t), t]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return -float(coef[1]), 1.0 - ss_res / ss_tot
