"""EMHD and Hall-MHD time stepping.

Nonlinear terms are formed pseudo-spectrally with 2/3 dealiasing. Diffusion
is integrated exactly through an integrating factor and the nonlinearity by
classical RK4 in the integrating-factor variables (Lawson RK4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowUpError, ConfigError, ParameterError
from .littlewood_paley import block_l2_norms
from .spectral import (
    TWO_PI,
    Field,
    TorusGrid,
    advect,
    cross_product,
    curl,
    l2_norm,
    leray_project,
    random_divfree_field,
    to_physical,
)

EMHD = "emhd"
HALL = "hall"

BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class Forcing:
    """Constant-in-time divergence-free forcing supported in blocks ``band``."""

    amplitude: float = 0.0
    band: tuple = (0, 1)
    target: str = "b"
    seed: int = 0

    def field(self, grid: TorusGrid) -> Field:
        return random_divfree_field(grid, self.seed, self.band, self.amplitude)


@dataclass(frozen=True)
class PhysicsParams:
    nu: float = 0.05
    mu: float = 0.05
    d_i: float = 1.0
    forcing: Forcing | None = None

    def __post_init__(self):
        if self.nu < 0 or self.mu < 0:
            raise ConfigError(f"diffusivities must be nonnegative (nu={self.nu}, mu={self.mu})")
        if self.d_i < 0:
            raise ConfigError(f"d_i must be nonnegative, got {self.d_i}")
        if self.forcing is not None and self.forcing.target not in ("b", "u"):
            raise ConfigError(f"forcing target must be 'b' or 'u', got {self.forcing.target!r}")


@dataclass(frozen=True)
class SimState:
    t: float
    b: Field
    u: Field | None = None

    @property
    def system(self) -> str:
        return EMHD if self.u is None else HALL

    @property
    def grid(self) -> TorusGrid:
        return self.b.grid


def emhd_nonlinear(b: Field, d_i: float = 1.0) -> Field:
    """``-d_i curl((curl b) x b)`` with the product dealiased."""
    j = curl(b)
    return curl(cross_product(j, b)) * (-d_i)


def hall_mhd_nonlinear(u: Field, b: Field, d_i: float = 1.0):
    """Right-hand sides ``(N_u, N_b)`` of the Hall-MHD system, pressure removed by projection.

    ``N_u = P[-(u.grad)u + (b.grad)b]``,
    ``N_b = -(u.grad)b + (b.grad)u - d_i curl((curl b) x b)``.
    """
    nu_term = leray_project(advect(b, b) - advect(u, u))
    nb_term = advect(b, u) - advect(u, b)
    if d_i != 0.0:
        nb_term = nb_term + emhd_nonlinear(b, d_i)
    return nu_term, leray_project(nb_term)


def energy(state: SimState) -> float:
    e = l2_norm(state.b) ** 2
    if state.u is not None:
        e += l2_norm(state.u) ** 2
    return 0.5 * e


def _grad_sq(f: Field) -> float:
    k2 = f.grid.kmag2 * (TWO_PI / f.grid.period) ** 2
    return float(np.sum(k2 * np.abs(f.coeffs) ** 2))


def dissipation(state: SimState, params: PhysicsParams) -> float:
    """``mu ||grad b||^2 + nu ||grad u||^2``, the energy drain rate."""
    d = params.mu * _grad_sq(state.b)
    if state.u is not None:
        d += params.nu * _grad_sq(state.u)
    return d


def forcing_power(state: SimState, params: PhysicsParams, forcing_field: Field | None) -> float:
    if forcing_field is None:
        return 0.0
    target = state.b if params.forcing.target == "b" else state.u
    return float(np.real(np.vdot(forcing_field.coeffs, target.coeffs)))


def cfl_dt(state: SimState, params: PhysicsParams, dt_max: float = 1e-2, c_cfl: float = 0.3) -> float:
    """``min(dt_max, C / (2 pi k_max ||u||_inf + d_i (2 pi k_max)^2 ||b||_inf))``."""
    kk = TWO_PI * state.grid.k_max / state.grid.period
    b_inf = float(np.max(np.sqrt(np.sum(to_physical(state.b) ** 2, axis=0))))
    rate = params.d_i * kk**2 * b_inf
    if state.u is not None:
        rate += kk * float(np.max(np.sqrt(np.sum(to_physical(state.u) ** 2, axis=0))))
    if rate <= 0.0:
        return dt_max
    return min(dt_max, c_cfl / rate)


class Stepper:
    """Lawson RK4 stepper for one system; caches the forcing and decay symbols."""

    def __init__(self, grid: TorusGrid, params: PhysicsParams, system: str = EMHD):
        if system not in (EMHD, HALL):
            raise ConfigError(f"system must be 'emhd' or 'hall', got {system!r}")
        self.grid = grid
        self.params = params
        self.system = system
        self._k2 = grid.kmag2 * (TWO_PI / grid.period) ** 2
        self.forcing_field = None
        if params.forcing is not None and params.forcing.amplitude != 0.0:
            if system == EMHD and params.forcing.target == "u":
                raise ConfigError("EMHD has no velocity field to force")
            self.forcing_field = params.forcing.field(grid)

    def _rates(self) -> np.ndarray:
        if self.system == EMHD:
            return np.array([self.params.mu])
        return np.array([self.params.nu, self.params.mu])

    def _pack(self, state: SimState) -> np.ndarray:
        if self.system == EMHD:
            return state.b.coeffs[None]
        return np.stack([state.u.coeffs, state.b.coeffs])

    def _unpack(self, arr: np.ndarray, t: float) -> SimState:
        if self.system == EMHD:
            return SimState(t, Field(self.grid, arr[0], True))
        return SimState(t, Field(self.grid, arr[1], True), Field(self.grid, arr[0], True))

    def rhs(self, arr: np.ndarray) -> np.ndarray:
        d_i = self.params.d_i
        if self.system == EMHD:
            out = emhd_nonlinear(Field(self.grid, arr[0], True), d_i).coeffs[None]
        else:
            nu_, nb_ = hall_mhd_nonlinear(
                Field(self.grid, arr[0], True), Field(self.grid, arr[1], True), d_i
            )
            out = np.stack([nu_.coeffs, nb_.coeffs])
        if self.forcing_field is not None:
            idx = 1 if (self.system == HALL and self.params.forcing.target == "b") else 0
            out = out.copy()
            out[idx] = out[idx] + self.forcing_field.coeffs
        return out

    def decay(self, dt: float) -> np.ndarray:
        """Integrating factors ``exp(-diffusivity 4 pi^2 |k|^2 dt)``, one per field."""
        rates = self._rates()
        return np.stack([np.exp(-r * self._k2 * dt) for r in rates])[:, None]

    def step(self, state: SimState, dt: float) -> SimState:
        if dt <= 0:
            raise ParameterError(f"dt must be positive, got {dt}")
        v = self._pack(state)
        e_half = self.decay(0.5 * dt)
        e_full = e_half * e_half
        k1 = self.rhs(v)
        k2 = self.rhs(e_half * (v + 0.5 * dt * k1))
        k3 = self.rhs(e_half * v + 0.5 * dt * k2)
        k4 = self.rhs(e_full * v + dt * (e_half * k3))
        new = e_full * v + (dt / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)
        if not np.all(np.isfinite(new)):
            raise BlowUpError(f"non-finite coefficients at t={state.t + dt:.6g}", last_state=state)
        out = self._unpack(new, state.t + dt)
        # strip round-off drift off the solenoidal subspace
        u = None if out.u is None else leray_project(out.u)
        return SimState(out.t, leray_project(out.b), u)


def step(state: SimState, params: PhysicsParams, dt: float) -> SimState:
    """One Lawson RK4 step of the system matching ``state``."""
    return Stepper(state.grid, params, state.system).step(state, dt)


def field_linf(f: Field) -> float:
    return float(np.max(np.sqrt(np.sum(to_physical(f) ** 2, axis=0))))


def state_linf(state: SimState) -> float:
    m = field_linf(state.b)
    if state.u is not None:
        m = max(m, field_linf(state.u))
    return m


@dataclass
class RunRecord:
    """Output of :func:`simulate_run`.

    ``series`` has one row per step (step 0 is the initial state) with time,
    energy, dissipation, forcing power and the dyadic L2 spectra of each field.
    """

    snapshots: list = field(default_factory=list)
    series: list = field(default_factory=list)
    blowup: BlowUpError | None = None

    @property
    def final(self) -> SimState:
        return self.snapshots[-1]


def _diag_row(state: SimState, params: PhysicsParams, stepper: Stepper) -> dict:
    row = {
        "t": state.t,
        "energy": energy(state),
        "dissipation": dissipation(state, params),
        "forcing_power": forcing_power(state, params, stepper.forcing_field),
        "b_blocks": block_l2_norms(state.b, state.grid.q_max),
    }
    if state.u is not None:
        row["u_blocks"] = block_l2_norms(state.u, state.grid.q_max)
    return row


def initial_state(grid: TorusGrid, system: str, seed: int, band=(0, 1),
                  amplitude_b: float = 1.0, amplitude_u: float = 1.0) -> SimState:
    """Seeded divergence-free initial data; the velocity uses ``seed + 1``."""
    b = random_divfree_field(grid, seed, band, amplitude_b)
    u = None
    if system == HALL:
        u = random_divfree_field(grid, seed + 1, band, amplitude_u)
    return SimState(0.0, b, u)


def forced_equilibrium(grid: TorusGrid, params: PhysicsParams, system: str = EMHD) -> SimState:
    """Steady state of the linear forced problem, ``f / (diffusivity 4 pi^2 |k|^2)``.

    A forced run started here only has to relax the nonlinear correction,
    which keeps the spin-up short.
    """
    fo = params.forcing
    zero = Field.zeros(grid)
    if fo is None or fo.amplitude == 0.0:
        return SimState(0.0, zero, zero if system == HALL else None)
    diff = params.mu if fo.target == "b" else params.nu
    if diff <= 0:
        raise ParameterError("forced equilibrium needs a positive diffusivity")
    k2 = (TWO_PI ** 2) * grid.kmag2
    k2 = np.where(k2 == 0.0, 1.0, k2)
    f = fo.field(grid)
    eq = f.with_coeffs(f.coeffs / (diff * k2))
    if system == EMHD:
        return SimState(0.0, eq)
    if fo.target == "b":
        return SimState(0.0, eq, zero)
    return SimState(0.0, zero, eq)


def simulate_run(initial: SimState, params: PhysicsParams, t_end: float, dt_max: float = 1e-2,
                 c_cfl: float = 0.3, snapshot_every: int = 0, max_steps: int | None = None,
                 callback=None, snapshot_dt: float = 0.0) -> RunRecord:
    """Advance ``initial`` to ``t_end`` with CFL-limited steps.

    Snapshots are kept every ``snapshot_every`` steps, or, when
    ``snapshot_dt > 0``, at the first step reaching each multiple of
    ``snapshot_dt``. With neither set only the first and last state are kept.
    A blow-up stops the run; the record keeps the last valid state and the
    exception in ``blowup``.
    """
    if t_end < 0:
        raise ParameterError(f"t_end must be nonnegative, got {t_end}")
    if snapshot_dt < 0:
        raise ParameterError(f"snapshot_dt must be nonnegative, got {snapshot_dt}")
    sample_index = 1
    grid = initial.grid
    stepper = Stepper(grid, params, initial.system)
    rec = RunRecord()
    state = initial
    rec.snapshots.append(state)
    rec.series.append(_diag_row(state, params, stepper))
    threshold = BLOWUP_FACTOR * max(state_linf(state), 1.0)
    nstep = 0
    while state.t < t_end * (1.0 - 1e-14):
        if max_steps is not None and nstep >= max_steps:
            break
        dt = cfl_dt(state, params, dt_max, c_cfl)
        dt = min(dt, t_end - state.t)
        try:
            new = stepper.step(state, dt)
            if state_linf(new) > threshold:
                raise BlowUpError(
                    f"field L^inf exceeded {BLOWUP_FACTOR:g} x initial at t={new.t:.6g}",
                    last_state=state,
                )
        except BlowUpError as exc:
            exc.partial = rec
            rec.blowup = exc
            if rec.snapshots[-1] is not state:
                rec.snapshots.append(state)
            return rec
        state = new
        nstep += 1
        rec.series.append(_diag_row(state, params, stepper))
        if callback is not None:
            callback(state)
        if snapshot_dt > 0:
            if state.t >= sample_index * snapshot_dt * (1.0 - 1e-12):
                rec.snapshots.append(state)
                while sample_index * snapshot_dt <= state.t * (1.0 + 1e-12):
                    sample_index += 1
        elif snapshot_every and nstep % snapshot_every == 0:
            rec.snapshots.append(state)
    if rec.snapshots[-1] is not state:
        rec.snapshots.append(state)
    return rec


def whistler_frequency(b0: float, k_parallel: float, kmag: float, d_i: float = 1.0, period: float = 1.0) -> float:
    """Linear whistler angular frequency ``d_i B0 (2 pi)^2 |k_par| |k|`` for integer wavevectors."""
    scale = (TWO_PI / period) ** 2
    return d_i * b0 * scale * abs(k_parallel) * kmag


def measure_whistler(grid: TorusGrid, k, b0: float = 1.0, axis: int = 0, eps: float = 1e-4,
                     d_i: float = 1.0, periods: float = 0.75, c_cfl: float = 0.3) -> dict:
    """Oscillation frequency of a small perturbation about a uniform field ``b0 e_axis``.

    The perturbation is a divergence-free mode at wavevector ``k``; ``mu = 0``.
    The frequency is fit to the real part of the mode's coefficient.
    """
    from scipy.optimize import curve_fit

    k = tuple(int(x) for x in k)
    kvec = np.zeros(3)
    kvec[: grid.n] = k
    kmag = float(np.linalg.norm(kvec))
    if kmag == 0:
        raise ParameterError("whistler mode needs k != 0")
    # perturbation polarization: a unit vector orthogonal to k
    trial = np.array([0.3, 0.5, 0.8])
    pol = trial - kvec * (trial @ kvec) / kmag**2
    pol /= np.linalg.norm(pol)
    pert = Field.single_mode(grid, k, 0.5 * eps * pol, divfree=True)
    background = np.zeros((3,) + grid.shape, dtype=np.complex128)
    background[(axis,) + (0,) * grid.n] = b0
    b = Field(grid, background, True) + pert
    params = PhysicsParams(nu=0.0, mu=0.0, d_i=d_i)
    omega_guess = whistler_frequency(b0, kvec[axis], kmag, d_i, grid.period)
    t_end = periods * 2.0 * math.pi / omega_guess
    state = SimState(0.0, b)
    stepper = Stepper(grid, params, EMHD)
    dt = cfl_dt(state, params, dt_max=1.0, c_cfl=c_cfl)
    nsteps = int(math.ceil(t_end / dt))
    dt = t_end / nsteps
    comp = int(np.argmax(np.abs(pol)))
    times = [0.0]
    sig = [state.b.coefficient(k)[comp].real]
    for _ in range(nsteps):
        state = stepper.step(state, dt)
        times.append(state.t)
        sig.append(state.b.coefficient(k)[comp].real)
    times = np.array(times)
    sig = np.array(sig)

    def model(t, a, w, ph):
        return a * np.cos(w * t + ph)

    a0 = float(np.max(np.abs(sig)))
    best = None
    for ph0 in np.linspace(0, 2 * np.pi, 8, endpoint=False):
        try:
            popt, _ = curve_fit(model, times, sig, p0=(a0, omega_guess, ph0), maxfev=20000)
        except RuntimeError:
            continue
        resid = float(np.sum((model(times, *popt) - sig) ** 2))
        if best is None or resid < best[1]:
            best = (popt, resid)
    omega = abs(float(best[0][1]))
    return {"omega": omega, "omega_predicted": omega_guess, "dt": dt, "steps": nsteps,
            "times": times, "signal": sig}


def with_time(state: SimState, t: float) -> SimState:
    return replace(state, t=t)
