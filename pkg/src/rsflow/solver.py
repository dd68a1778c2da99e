"""Barotropic real-Schur-flow time integration in a periodic 3D box.

The horizontal velocity lives on a 2D grid (so the RSF zero pattern
holds exactly by construction) while the third component is fully 3D.
Three modes:

* ``constrained`` -- 2D density, exactly self-consistent horizontal
  barotropic subsystem plus the vertical momentum equation with zero
  vertical pressure gradient.
* ``free`` -- 3D density; the horizontal momentum equation is fed the
  vertical average of the horizontal pressure gradient, and the
  consistency residual is logged each snapshot.
* ``kinematic_tg`` -- steady Taylor-Green horizontal field (an exact
  steady Euler solution) advecting an evolving vertical component; the
  manufactured test bed for the frozen-in checks.

Time integration is classical RK4 with a CFL-limited step; the density
equation is discretized in flux form so total mass is conserved to
rounding on the periodic grid.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import rsff
from .fields import TWO_PI, Grid, ScalarField, VectorField, analytic_registry
from .rsf import check_rsf, zero_pattern

log = logging.getLogger(__name__)

MODES = ("constrained", "free", "kinematic_tg")
RHO_FLOOR = 0.2
U3_GRADIENT_ABORT = 20.0  # max |d3 u3| before self-steepening counts as blown up

CONFIG_KEYS = ("mode", "c", "nu", "cfl", "t_end", "snapshot_stride",
               "seed", "kmax", "amplitude", "dims", "length")


@dataclass(frozen=True)
class SolverConfig:
    mode: str = "constrained"
    c: float = 1.0
    nu: float = 0.0
    cfl: float = 0.4
    t_end: float = 1.0
    snapshot_stride: int = 1
    seed: int = 0
    kmax: int = 2
    amplitude: float = 0.1
    dims: tuple = (64, 64, 64)
    length: tuple = (TWO_PI, TWO_PI, TWO_PI)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.c <= 0:
            raise ValueError("sound speed must be positive")
        if not 0 < self.cfl < 1:
            raise ValueError("cfl must be in (0, 1)")
        if self.nu < 0:
            raise ValueError("viscosity must be >= 0")
        dims = tuple(int(n) for n in np.atleast_1d(np.asarray(self.dims)))
        if len(dims) == 1:
            dims = dims * 3
        if len(dims) != 3:
            raise ValueError("dims must have 3 entries")
        length = tuple(float(x) for x in np.atleast_1d(np.asarray(self.length)))
        if len(length) == 1:
            length = length * 3
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "length", length)


def parse_config(text: str) -> SolverConfig:
    """Flat key=value config; unknown keys are rejected."""
    kw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        if key == "mode":
            kw[key] = val
        elif key in ("snapshot_stride", "seed", "kmax"):
            kw[key] = int(val)
        elif key == "dims":
            kw[key] = tuple(int(x) for x in val.split(","))
        elif key == "length":
            kw[key] = tuple(float(x) for x in val.split(","))
        else:
            kw[key] = float(val)
    return SolverConfig(**kw)


def format_config(cfg: SolverConfig) -> str:
    lines = [f"mode={cfg.mode}", f"c={cfg.c}", f"nu={cfg.nu}", f"cfl={cfg.cfl}",
             f"t_end={cfg.t_end}", f"snapshot_stride={cfg.snapshot_stride}",
             f"seed={cfg.seed}", f"kmax={cfg.kmax}", f"amplitude={cfg.amplitude}",
             "dims=" + ",".join(str(n) for n in cfg.dims),
             "length=" + ",".join(repr(x) for x in cfg.length)]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class FlowState:
    """Solver state; u1/u2/rho2 are 2D arrays, u3 (and rho3 if free) 3D."""

    grid3: Grid
    grid2: Grid
    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray
    rho: np.ndarray  # 2D in constrained/kinematic mode, 3D in free mode
    time: float = 0.0


# ----------------------------------------------------------------------
# array-level periodic derivatives (order 4)
# ----------------------------------------------------------------------

def _dx(v, axis, h):
    return (-np.roll(v, -2, axis) + 8.0 * np.roll(v, -1, axis)
            - 8.0 * np.roll(v, 1, axis) + np.roll(v, 2, axis)) / (12.0 * h)


def _d2x(v, axis, h):
    return (-np.roll(v, -2, axis) + 16.0 * np.roll(v, -1, axis) - 30.0 * v
            + 16.0 * np.roll(v, 1, axis) - np.roll(v, 2, axis)) / (12.0 * h * h)


def _laplacian(v, spacing, axes):
    out = np.zeros_like(v)
    for a in axes:
        out += _d2x(v, a, spacing[a])
    return out


# ----------------------------------------------------------------------
# initial conditions
# ----------------------------------------------------------------------

def _grids(cfg: SolverConfig):
    grid3 = Grid(cfg.dims, cfg.length)
    grid2 = Grid(cfg.dims[:2], cfg.length[:2])
    return grid3, grid2


def init_random(cfg: SolverConfig) -> FlowState:
    """Seeded band-limited random RSF initial data; bit-reproducible."""
    grid3, grid2 = _grids(cfg)
    ax2 = [grid2.axis_coords(a) for a in range(2)]
    ax3 = [grid3.axis_coords(a) for a in range(3)]
    uh = analytic_registry("band_limited_random", seed=cfg.seed, kmax=cfg.kmax, d=2)
    u1 = cfg.amplitude * uh.components[0].sample(ax2)
    u2 = cfg.amplitude * uh.components[1].sample(ax2)
    w3 = analytic_registry("band_limited_random", seed=cfg.seed + 1, kmax=cfg.kmax, d=3)
    u3 = cfg.amplitude * w3.components[0].sample(ax3)
    if cfg.mode == "free":
        pert = analytic_registry("band_limited_random", seed=cfg.seed + 2,
                                 kmax=cfg.kmax, d=3).components[1].sample(ax3)
    else:
        pert = analytic_registry("band_limited_random", seed=cfg.seed + 2,
                                 kmax=cfg.kmax, d=2).components[1].sample(ax2)
    rho = 1.0 + cfg.amplitude * pert
    if np.min(rho) < RHO_FLOOR:
        log.warning("density clipped to floor %.2f (amplitude %.3g too large)",
                    RHO_FLOOR, cfg.amplitude)
        rho = np.maximum(rho, RHO_FLOOR)
    return FlowState(grid3, grid2, u1, u2, u3, rho, 0.0)


def init_kinematic_tg(cfg: SolverConfig) -> FlowState:
    grid3, grid2 = _grids(cfg)
    tg = analytic_registry("taylor_green_2d")
    ax2 = [grid2.axis_coords(a) for a in range(2)]
    ax3 = [grid3.axis_coords(a) for a in range(3)]
    u1 = tg.components[0].sample(ax2)
    u2 = tg.components[1].sample(ax2)
    w3 = analytic_registry("band_limited_random", seed=cfg.seed, kmax=cfg.kmax, d=3)
    u3 = cfg.amplitude * w3.components[0].sample(ax3)
    return FlowState(grid3, grid2, u1, u2, u3, np.ones(grid2.dims), 0.0)


def init_state(cfg: SolverConfig) -> FlowState:
    if cfg.mode == "kinematic_tg":
        return init_kinematic_tg(cfg)
    return init_random(cfg)


# ----------------------------------------------------------------------
# right-hand side
# ----------------------------------------------------------------------

def rhs(state: FlowState, cfg: SolverConfig):
    """Tendencies (du1, du2, du3, drho); None marks a frozen variable."""
    g2 = state.grid2
    g3 = state.grid3
    h2 = g2.spacing
    h3 = g3.spacing
    u1, u2, u3 = state.u1, state.u2, state.u3
    u1b = u1[:, :, None]
    u2b = u2[:, :, None]

    du3_adv = -(u1b * _dx(u3, 0, h3[0]) + u2b * _dx(u3, 1, h3[1])
                + u3 * _dx(u3, 2, h3[2]))

    if cfg.mode == "kinematic_tg":
        return None, None, du3_adv, None

    rho = state.rho
    if np.min(rho) <= 0.0:
        raise RuntimeError(f"density non-positive at t={state.time:.6g}")

    if cfg.mode == "constrained":
        pi = cfg.c ** 2 * np.log(rho)
        gp1, gp2 = _dx(pi, 0, h2[0]), _dx(pi, 1, h2[1])
        du3 = du3_adv
        drho = -(_dx(rho * u1, 0, h2[0]) + _dx(rho * u2, 1, h2[1]))
    else:  # free: 3D density
        pi = cfg.c ** 2 * np.log(rho)
        gp1_3d, gp2_3d = _dx(pi, 0, h3[0]), _dx(pi, 1, h3[1])
        gp1 = gp1_3d.mean(axis=2)
        gp2 = gp2_3d.mean(axis=2)
        du3 = du3_adv - _dx(pi, 2, h3[2])
        drho = -(_dx(rho * u1b, 0, h3[0]) + _dx(rho * u2b, 1, h3[1])
                 + _dx(rho * u3, 2, h3[2]))

    du1 = -(u1 * _dx(u1, 0, h2[0]) + u2 * _dx(u1, 1, h2[1])) - gp1
    du2 = -(u1 * _dx(u2, 0, h2[0]) + u2 * _dx(u2, 1, h2[1])) - gp2
    if cfg.nu > 0:
        du1 += cfg.nu * _laplacian(u1, h2, (0, 1))
        du2 += cfg.nu * _laplacian(u2, h2, (0, 1))
        du3 += cfg.nu * _laplacian(u3, h3, (0, 1, 2))
    return du1, du2, du3, drho


def pressure_consistency_residual(state: FlowState, cfg: SolverConfig) -> float:
    """Free mode: sup deviation of grad_h Pi from its vertical average."""
    if cfg.mode != "free":
        return 0.0
    pi = cfg.c ** 2 * np.log(state.rho)
    h3 = state.grid3.spacing
    worst = 0.0
    for a in (0, 1):
        gp = _dx(pi, a, h3[a])
        worst = max(worst, float(np.max(np.abs(gp - gp.mean(axis=2)[:, :, None]))))
    return worst


# ----------------------------------------------------------------------
# stepping
# ----------------------------------------------------------------------

def cfl_dt(state: FlowState, cfg: SolverConfig) -> float:
    umax = max(np.max(np.abs(state.u1)), np.max(np.abs(state.u2)),
               np.max(np.abs(state.u3)))
    ceff = 0.0 if cfg.mode == "kinematic_tg" else cfg.c
    speed = float(umax) + ceff
    hmin = min(state.grid3.spacing)
    if speed <= 0:
        return cfg.cfl * hmin  # rest state: any step works
    return cfg.cfl * hmin / speed


def _combine(state, tends, dt_each):
    """state + sum_i dt_each[i] * tends[i] (None tendencies leave vars be)."""
    vals = [state.u1, state.u2, state.u3, state.rho]
    new = []
    for j, v in enumerate(vals):
        parts = [w * t[j] for w, t in zip(dt_each, tends) if t[j] is not None]
        new.append(v + sum(parts) if parts else v)
    return replace(state, u1=new[0], u2=new[1], u3=new[2], rho=new[3])


def step_rk4(state: FlowState, cfg: SolverConfig, dt: float) -> FlowState:
    """Classical 4-stage Runge-Kutta step."""
    k1 = rhs(state, cfg)
    k2 = rhs(replace(_combine(state, [k1], [0.5 * dt]), time=state.time + 0.5 * dt), cfg)
    k3 = rhs(replace(_combine(state, [k2], [0.5 * dt]), time=state.time + 0.5 * dt), cfg)
    k4 = rhs(replace(_combine(state, [k3], [dt]), time=state.time + dt), cfg)
    new = _combine(state, [k1, k2, k3, k4],
                   [dt / 6.0, dt / 3.0, dt / 3.0, dt / 6.0])
    new = replace(new, time=state.time + dt)
    for name, arr in (("u1", new.u1), ("u2", new.u2), ("u3", new.u3),
                      ("rho", new.rho)):
        if not np.all(np.isfinite(arr)):
            raise RuntimeError(f"NaN/Inf in {name} after step to t={new.time:.6g}")
    return new


# ----------------------------------------------------------------------
# diagnostics and the run loop
# ----------------------------------------------------------------------

def assemble_velocity_arrays(state: FlowState):
    """3-component 3D velocity; horizontal parts are broadcast views."""
    dims = state.grid3.dims
    return [np.broadcast_to(state.u1[:, :, None], dims),
            np.broadcast_to(state.u2[:, :, None], dims),
            state.u3]


def assemble_velocity(state: FlowState) -> VectorField:
    return VectorField.from_arrays(state.grid3, assemble_velocity_arrays(state))


def rsf_deviation(state: FlowState) -> float:
    return check_rsf(assemble_velocity(state), zero_pattern(3))


DIAG_HEADER = ["time", "energy", "mass", "rho_min", "rho_max", "umax",
               "rsf_dev", "pressure_residual"]


def diagnostics(state: FlowState, cfg: SolverConfig) -> dict:
    g3 = state.grid3
    rho3 = state.rho if state.rho.ndim == 3 else \
        np.broadcast_to(state.rho[:, :, None], g3.dims)
    u1b, u2b, u3 = assemble_velocity_arrays(state)
    dv = g3.cell_volume
    energy = 0.5 * dv * float(np.sum(rho3 * (u1b ** 2 + u2b ** 2 + u3 ** 2)))
    if state.rho.ndim == 2:
        mass = state.grid2.cell_volume * float(np.sum(state.rho))
    else:
        mass = dv * float(np.sum(state.rho))
    umax = float(max(np.max(np.abs(state.u1)), np.max(np.abs(state.u2)),
                     np.max(np.abs(state.u3))))
    return {"time": state.time, "energy": energy, "mass": mass,
            "rho_min": float(np.min(state.rho)),
            "rho_max": float(np.max(state.rho)), "umax": umax,
            "rsf_dev": rsf_deviation(state),
            "pressure_residual": pressure_consistency_residual(state, cfg)}


@dataclass
class SimulationResult:
    config: SolverConfig
    grid3: Grid
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # [u1b, u2b, u3] arrays
    diagnostics: list = field(default_factory=list)
    final_state: FlowState = None


def run_simulation(cfg: SolverConfig, outdir=None,
                   keep_history: bool = True) -> SimulationResult:
    """Integrate to t_end, snapshotting every ``snapshot_stride`` steps.

    The step count is rounded up to a multiple of the stride so snapshot
    times are uniformly spaced (needed by the verification harness).
    """
    state = init_state(cfg)
    dt0 = cfl_dt(state, cfg)
    stride = max(1, cfg.snapshot_stride)
    nsteps = max(stride, int(math.ceil(cfg.t_end / dt0)))
    nsteps = stride * int(math.ceil(nsteps / stride))
    dt = cfg.t_end / nsteps

    result = SimulationResult(cfg, state.grid3)
    out = Path(outdir) if outdir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    prev = None
    index = 0

    def snapshot(st):
        nonlocal prev, index
        comps = assemble_velocity_arrays(st)
        if prev is not None and st.u1 is prev[0]:
            comps[0], comps[1] = prev[1], prev[2]  # keep steady views shared
        prev = (st.u1, comps[0], comps[1])
        result.times.append(st.time)
        if keep_history:
            result.snapshots.append(comps)
        result.diagnostics.append(diagnostics(st, cfg))
        if out is not None:
            rsff.write_field(out / f"snap_{index:04d}.rsff",
                             [ScalarField(st.grid3, c) for c in comps], st.time)
        index += 1

    snapshot(state)
    for step in range(1, nsteps + 1):
        steep = float(np.max(np.abs(_dx(state.u3, 2, state.grid3.spacing[2]))))
        if steep > U3_GRADIENT_ABORT:
            raise RuntimeError(
                f"vertical self-steepening blew up (|d3 u3|={steep:.3g} "
                f"at t={state.time:.6g}, step {step})")
        state = step_rk4(state, cfg, dt)
        if step % stride == 0:
            snapshot(state)
    result.final_state = state

    if out is not None:
        with open(out / "diagnostics.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=DIAG_HEADER)
            writer.writeheader()
            for row in result.diagnostics:
                writer.writerow(row)
    return result
