"""Run configuration: a JSON key tree with defaults and full validation.

Sections and keys (all optional; defaults shown by :func:`default_config`)::

    grid:       n, N, dealias_fraction
    physics:    nu, mu, d_i, forcing {amplitude, band, target, seed}
    wavenumber: r, delta, sigma, c_r, L, delta_b, delta_u
    run:        system, initial, dt_max, C_cfl, T_end, snapshot_cadence,
                snapshot_dt, max_steps, seed, init_band, amplitude_b, amplitude_u
    sync:       system, s, perturbation {seed, band, fraction}, assimilate
    averaging:  t0, T

``run.initial`` is ``"random"`` (seeded data in ``init_band``) or
``"forced_equilibrium"`` (the linear forced steady state). ``sync.s = null``
selects the midpoint of the admissible interval. ``averaging.T = null`` means
the end of the run.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

from .dynamics import EMHD, HALL, Forcing, PhysicsParams
from .errors import ConfigError
from .spectral import TorusGrid
from .sync_lab import Perturbation, SyncConfig
from .wavenumbers import WavenumberParams

INITIAL_KINDS = ("random", "forced_equilibrium")


def default_config() -> dict:
    return {
        "grid": {"n": 2, "N": 64, "dealias_fraction": 2.0 / 3.0},
        "physics": {
            "nu": 0.05,
            "mu": 0.05,
            "d_i": 1.0,
            "forcing": {"amplitude": 0.0, "band": [0, 1], "target": "b", "seed": 7},
        },
        "wavenumber": {
            "r": 3.0,
            "delta": 0.1,
            "sigma": 0.5,
            "c_r": 0.05,
            "L": 1.0,
            "delta_b": 2.5,
            "delta_u": 2.5,
        },
        "run": {
            "system": EMHD,
            "initial": "random",
            "dt_max": 1e-2,
            "C_cfl": 0.3,
            "T_end": 0.01,
            "snapshot_cadence": 0,
            "snapshot_dt": 0.0,
            "max_steps": None,
            "seed": 0,
            "init_band": [0, 1],
            "amplitude_b": 1.0,
            "amplitude_u": 1.0,
        },
        "sync": {
            "system": EMHD,
            "s": None,
            "perturbation": {"seed": 1000, "band": [2, None], "fraction": 0.1},
            "assimilate": True,
        },
        "averaging": {"t0": 0.0, "T": None},
    }


def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key '{where}' must be a section")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_override(text: str) -> tuple[list[str], object]:
    """Split ``"a.b.c=value"``; the value is JSON if it parses, else a string."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def apply_overrides(tree: dict, overrides) -> dict:
    for text in overrides or ():
        keys, value = parse_override(text)
        update: dict = {}
        node = update
        for k in keys[:-1]:
            node[k] = {}
            node = node[k]
        node[keys[-1]] = value
        tree = _merge(tree, update)
    return tree


@dataclass(frozen=True)
class Config:
    """Validated configuration with the module parameter objects built."""

    tree: dict
    grid: TorusGrid
    physics: PhysicsParams
    wavenumber: WavenumberParams

    @property
    def run(self) -> dict:
        return self.tree["run"]

    @property
    def averaging(self) -> dict:
        return self.tree["averaging"]

    @property
    def seed(self) -> int:
        return int(self.tree["run"]["seed"])

    def sync_config(self, assimilate: bool | None = None) -> SyncConfig:
        return _sync_config(self, assimilate)

    def to_json(self) -> str:
        return json.dumps(self.tree, indent=2, sort_keys=True)


def _band(value, where: str, allow_none_top: bool = False) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"'{where}' must be a two-element list [q_lo, q_hi]")
    lo, hi = value
    if not isinstance(lo, int) or isinstance(lo, bool):
        raise ConfigError(f"'{where}' lower block must be an integer")
    if hi is None and allow_none_top:
        return (lo, None)
    if not isinstance(hi, int) or isinstance(hi, bool) or hi < lo:
        raise ConfigError(f"'{where}' must satisfy integer q_lo <= q_hi")
    return (lo, hi)


def _number(section: dict, key: str, where: str, positive=False, nonneg=False, allow_none=False):
    value = section[key]
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{where}.{key}' must be a number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"'{where}.{key}' must be positive, got {value}")
    if nonneg and value < 0:
        raise ConfigError(f"'{where}.{key}' must be nonnegative, got {value}")
    return value


def _sync_config(cfg: Config, assimilate: bool | None = None) -> SyncConfig:
    tree = cfg.tree
    sy, run = tree["sync"], tree["run"]
    pert = sy["perturbation"]
    try:
        return SyncConfig(
            grid=cfg.grid,
            physics=cfg.physics,
            wavenumber=cfg.wavenumber,
            system=sy["system"],
            s=sy["s"],
            perturbation=Perturbation(
                seed=int(pert["seed"]),
                band=_band(pert["band"], "sync.perturbation.band", allow_none_top=True),
                fraction=float(pert["fraction"]),
            ),
            assimilate=bool(sy["assimilate"] if assimilate is None else assimilate),
            seed=int(run["seed"]),
            init_band=_band(run["init_band"], "run.init_band"),
            amplitude_b=float(run["amplitude_b"]),
            amplitude_u=float(run["amplitude_u"]),
            dt_max=float(run["dt_max"]),
            c_cfl=float(run["C_cfl"]),
            t_end=float(run["T_end"]),
            max_steps=run["max_steps"],
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def build_config(tree: dict) -> Config:
    """Validate a (merged) key tree and build the parameter objects."""
    tree = _merge(default_config(), tree)
    g, ph, wn, run, sy, av = (tree[k] for k in
                              ("grid", "physics", "wavenumber", "run", "sync", "averaging"))
    try:
        grid = TorusGrid(int(g["n"]), int(g["N"]), 1.0, float(g["dealias_fraction"]))
        fo = ph["forcing"]
        forcing = Forcing(
            amplitude=float(_number(fo, "amplitude", "physics.forcing", nonneg=True)),
            band=_band(fo["band"], "physics.forcing.band"),
            target=fo["target"],
            seed=int(fo["seed"]),
        )
        physics = PhysicsParams(
            nu=float(_number(ph, "nu", "physics", nonneg=True)),
            mu=float(_number(ph, "mu", "physics", nonneg=True)),
            d_i=float(_number(ph, "d_i", "physics", nonneg=True)),
            forcing=forcing if forcing.amplitude > 0 else None,
        )
        wavenumber = WavenumberParams(
            n=grid.n,
            r=float(_number(wn, "r", "wavenumber")),
            delta=float(_number(wn, "delta", "wavenumber")),
            sigma=float(_number(wn, "sigma", "wavenumber")),
            c_r=float(_number(wn, "c_r", "wavenumber", positive=True)),
            L=float(_number(wn, "L", "wavenumber", positive=True)),
            mu=physics.mu,
            nu=physics.nu,
            delta_b=float(_number(wn, "delta_b", "wavenumber")),
            delta_u=float(_number(wn, "delta_u", "wavenumber")),
        )
        wavenumber.check_average_ranges("magnetic")
        if run["system"] == HALL:
            wavenumber.check_average_ranges("velocity")
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc

    for system_key in ("run", "sync"):
        if tree[system_key]["system"] not in (EMHD, HALL):
            raise ConfigError(
                f"'{system_key}.system' must be 'emhd' or 'hall', got {tree[system_key]['system']!r}"
            )
    if run["initial"] not in INITIAL_KINDS:
        raise ConfigError(f"'run.initial' must be one of {INITIAL_KINDS}, got {run['initial']!r}")
    _number(run, "dt_max", "run", positive=True)
    _number(run, "C_cfl", "run", positive=True)
    _number(run, "T_end", "run", nonneg=True)
    _number(run, "snapshot_dt", "run", nonneg=True)
    _number(run, "amplitude_b", "run", nonneg=True)
    _number(run, "amplitude_u", "run", nonneg=True)
    for key in ("snapshot_cadence", "seed"):
        if not isinstance(run[key], int) or isinstance(run[key], bool) or run[key] < 0:
            raise ConfigError(f"'run.{key}' must be a nonnegative integer, got {run[key]!r}")
    if run["max_steps"] is not None and (not isinstance(run["max_steps"], int) or run["max_steps"] < 0):
        raise ConfigError("'run.max_steps' must be a nonnegative integer or null")
    _band(run["init_band"], "run.init_band")
    if physics.mu <= 0 or (run["system"] == HALL and physics.nu <= 0):
        raise ConfigError("determining wavenumbers need positive diffusivities (mu, and nu for hall)")
    if sy["s"] is not None:
        _number(sy, "s", "sync")
    if not isinstance(sy["assimilate"], bool):
        raise ConfigError(f"'sync.assimilate' must be true or false, got {sy['assimilate']!r}")
    t0 = _number(av, "t0", "averaging", nonneg=True)
    T = _number(av, "T", "averaging", allow_none=True)
    if T is not None and not T > t0:
        raise ConfigError(f"averaging window needs T > t0 (t0={t0}, T={T})")

    cfg = Config(tree=tree, grid=grid, physics=physics, wavenumber=wavenumber)
    _sync_config(cfg)
    return cfg


def resolve_tree(tree: dict, overrides=None) -> dict:
    """Defaults, then ``tree``, then ``key=value`` overrides."""
    return apply_overrides(_merge(default_config(), tree), overrides)


def load_config(path=None, overrides=None) -> Config:
    """Read a JSON config file (or start from defaults), apply overrides, validate."""
    tree: dict = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            tree = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(tree, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
    return build_config(resolve_tree(tree, overrides))
