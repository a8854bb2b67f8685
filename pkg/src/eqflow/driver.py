"""Run orchestration: presets, time loop, diagnostics, and file I/O.

Presets reconstruct the standard benchmark initial data (the exact formulas
and tables live in PRESET_DOCS and are printed by the CLI's print-preset
command, so results stay self-documenting). Each run writes a CSV time
series with a fixed header and binary field snapshots; both formats are
consumed by the plotting frontend.
"""

from __future__ import annotations

import math
import os
import time as _time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .linsolve import ConvergenceError
from .models import ModelSpec, build_model, h_field, modified_energy, original_energy
from .relax import RelaxCoeffs, relax_bdf2, relax_cn
from .spectral import Grid, RealField, inner, make_grid, norm2
from .stepper import State, StepResult, init_state, step_bdf2, step_cn

__all__ = [
    "RunConfig",
    "TimeSeriesRow",
    "RunSummary",
    "preset_seven_disks",
    "preset_mbe",
    "preset_pfc",
    "preset_config",
    "resolve",
    "run",
    "convergence_study",
    "write_timeseries",
    "read_timeseries",
    "write_snapshot",
    "read_snapshot",
    "PRESET_DOCS",
]

CSV_HEADER = "step,time,E_modified,F_original,mass,xi0,dissipation,solver_iters,q_consistency"

SNAPSHOT_MAGIC = "PFIELD v1"
SNAPSHOT_HEADER_LEN = 64

# per-step relative slack for the strict energy-monotonicity abort
STRICT_ENERGY_REL = 1e-10

# seven tanh-profile disks on [0,1]^2: (center_x, center_y, radius).
# Hex-like ring of six around one central disk, radii within [0.04, 0.12],
# spaced so no two interfaces overlap and none touches the boundary.
SEVEN_DISKS: tuple[tuple[float, float, float], ...] = (
    (0.50, 0.50, 0.12),
    (0.80, 0.50, 0.10),
    (0.65, 0.76, 0.08),
    (0.35, 0.76, 0.09),
    (0.20, 0.50, 0.07),
    (0.35, 0.24, 0.11),
    (0.65, 0.24, 0.06),
)

# crystal-patch preset: lattice amplitude from the one-mode triangular
# ansatz minimizer, orientation angles in radians, centers/half-widths as
# fractions of the domain
PFC_BACKGROUND = 0.096
PFC_PATCHES: tuple[tuple[float, float, float, float], ...] = (
    # (center_x_frac, center_y_frac, half_width_frac, angle)
    (0.30, 0.30, 0.12, 0.0),
    (0.70, 0.35, 0.12, 0.3),
    (0.50, 0.70, 0.12, -0.3),
)

DEFAULT_MODEL_PARAMS: dict[str, dict[str, float]] = {
    "ac": {"eps": 0.015},
    "ch": {"eps": 0.015, "mobility": 1.0},
    "mbe": {"eps": 0.1, "mobility": 1.0},
    "pfc": {"a0": 1.0, "b0": 0.025},
}


@dataclass
class RunConfig:
    """Everything a run needs; CLI flags mirror these fields."""

    model: str = "ac"
    params: dict = field(default_factory=dict)
    scheme: str = "cn"
    relaxed: bool = True
    eta: float = 1.0
    dt: float = 0.01
    t_end: float = 1.0
    nx: int = 128
    ny: int = 128
    lx: float = 1.0
    ly: float = 1.0
    preset: str = "custom"
    log_every: int = 1
    snapshot_times: tuple = ()
    output_dir: Optional[str] = None
    solver_tol: float = 1e-12
    solver_max_iter: int = 500
    dealias: bool = False
    strict: bool = False
    init_snapshot: Optional[str] = None
    force_xi: Optional[float] = None  # testing hook: fixed blend weight

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < self.dt:
            raise ValueError(f"t_end ({self.t_end}) must be at least dt ({self.dt})")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.scheme not in ("cn", "bdf2"):
            raise ValueError(f"scheme must be 'cn' or 'bdf2', got {self.scheme!r}")


@dataclass(frozen=True)
class TimeSeriesRow:
    step: int
    time: float
    E_modified: float
    F_original: float
    mass: float
    xi0: float
    dissipation: float
    solver_iters: int
    q_consistency: float


@dataclass
class RunSummary:
    config: RunConfig
    rows: list
    coeffs: list  # RelaxCoeffs per relaxed step (empty for baseline runs)
    final_state: State
    n_steps: int
    xi_min: float
    xi_max: float
    wall_time: float
    solver_iters_max: int
    series_path: Optional[str] = None
    snapshot_paths: list = field(default_factory=list)
    summary_path: Optional[str] = None


# ---------------------------------------------------------------------------
# presets


def preset_seven_disks(grid: Grid, eps: float = 0.015) -> RealField:
    """Seven tanh disks on [0,1]^2 over a phi = -1 background.

    phi0(x) = -1 + sum_i [1 + tanh((r_i - |x - c_i|) / (sqrt(2) eps))]
    with (c_i, r_i) from the SEVEN_DISKS table.
    """
    x, y = grid.coords
    phi = np.full(grid.shape, -1.0)
    w = math.sqrt(2.0) * eps
    for cx, cy, r in SEVEN_DISKS:
        dist = np.sqrt((x - cx) ** 2 + (y - cy) ** 2)
        phi += 1.0 + np.tanh((r - dist) / w)
    return RealField(phi, grid)


def preset_mbe(grid: Grid) -> RealField:
    """Height profile 0.1 (sin 3x sin 2y + sin 5x sin 5y) on [0, 2 pi]^2."""
    x, y = grid.coords
    phi = 0.1 * (np.sin(3 * x) * np.sin(2 * y) + np.sin(5 * x) * np.sin(5 * y))
    return RealField(phi, grid)


def pfc_lattice_amplitude(b0: float, gamma0: float, background: float) -> float:
    """One-mode triangular-lattice amplitude minimizing the bulk density."""
    disc = 15.0 * (b0 + gamma0) - 36.0 * background**2
    if disc <= 0:
        raise ValueError(
            f"background {background} is outside the one-mode lattice window for b0={b0}"
        )
    return 0.8 * (background + math.sqrt(disc) / 3.0)


def preset_pfc(
    grid: Grid,
    a0: float = 1.0,
    b0: float = 0.025,
    gamma0: float = 0.0,
    background: float = PFC_BACKGROUND,
) -> RealField:
    """Constant background with three rotated crystal patches.

    Inside each axis-aligned square patch the field carries the one-mode
    triangular lattice at wavenumber sqrt(a0),

      phi = bg + A [cos(q u) cos(q v / sqrt(3)) - 0.5 cos(2 q v / sqrt(3))],

    with q = sqrt(3 a0)/2, (u, v) the patch-rotated coordinates and A the
    one-mode minimizer from pfc_lattice_amplitude.
    """
    x, y = grid.coords
    phi = np.full(grid.shape, background)
    amp = pfc_lattice_amplitude(b0, gamma0, background)
    q = math.sqrt(3.0 * a0) / 2.0
    for fx, fy, fw, angle in PFC_PATCHES:
        cx, cy = fx * grid.lx, fy * grid.ly
        half_w = fw * min(grid.lx, grid.ly)
        mask = (np.abs(x - cx) <= half_w) & (np.abs(y - cy) <= half_w)
        u = math.cos(angle) * (x - cx) + math.sin(angle) * (y - cy)
        v = -math.sin(angle) * (x - cx) + math.cos(angle) * (y - cy)
        lattice = amp * (
            np.cos(q * u) * np.cos(q * v / math.sqrt(3.0))
            - 0.5 * np.cos(2.0 * q * v / math.sqrt(3.0))
        )
        phi = np.where(mask, background + lattice, phi)
    return RealField(phi, grid)


PRESET_DOCS = {
    "seven_disks": (
        "seven_disks: Allen-Cahn / Cahn-Hilliard initial data on [0,1]^2.\n"
        "  phi0(x) = -1 + sum_i [1 + tanh((r_i - |x - c_i|)/(sqrt(2) eps))]\n"
        "  disks (cx, cy, r): " + ", ".join(f"({c[0]}, {c[1]}, {c[2]})" for c in SEVEN_DISKS) + "\n"
        "  defaults: 128x128, eps = 0.015; dt = 0.75 (ac) or 0.005 (ch), t_end = 60 / 100.\n"
        "  This is a documented reconstruction of the usual multi-disk benchmark."
    ),
    "mbe_benchmark": (
        "mbe_benchmark: slope-selection thin-film data on [0, 2pi]^2.\n"
        "  phi0(x, y) = 0.1 (sin 3x sin 2y + sin 5x sin 5y)\n"
        "  defaults: 128x128, eps = 0.1, M = 1, dt = 0.001, t_end = 5.\n"
        "  Reconstruction of the classical benchmark initial condition."
    ),
    "pfc_blocks": (
        "pfc_blocks: three crystal patches on [0, 32 pi]^2.\n"
        "  background phi = 0.096; inside each square patch\n"
        "  phi = bg + A [cos(q u) cos(q v/sqrt 3) - 0.5 cos(2 q v/sqrt 3)],\n"
        "  q = sqrt(3 a0)/2, A = 0.8 (bg + sqrt(15 b0 - 36 bg^2)/3)\n"
        "  patches (cx_frac, cy_frac, half_width_frac, angle): "
        + ", ".join(str(p) for p in PFC_PATCHES) + "\n"
        "  defaults: 256x256, a0 = 1, b0 = 0.025, dt = 0.5, t_end = 100 (1800 for the long run)."
    ),
    "custom": (
        "custom: supply --model/--params and an initial condition via\n"
        "  --init-snapshot FILE (a .pfield snapshot fixes grid and data)."
    ),
}


def preset_config(preset: str, **overrides) -> RunConfig:
    """Config pre-filled with a preset's domain, model and step defaults."""
    model = overrides.pop("model", None)
    if preset == "seven_disks":
        model = model or "ac"
        base = dict(
            model=model,
            nx=128, ny=128, lx=1.0, ly=1.0,
            dt=0.75 if model == "ac" else 0.005,
            t_end=60.0 if model == "ac" else 100.0,
        )
    elif preset == "mbe_benchmark":
        base = dict(model=model or "mbe", nx=128, ny=128,
                    lx=2 * math.pi, ly=2 * math.pi, dt=1e-3, t_end=5.0)
    elif preset == "pfc_blocks":
        base = dict(model=model or "pfc", nx=256, ny=256,
                    lx=32 * math.pi, ly=32 * math.pi, dt=0.5, t_end=100.0)
    elif preset == "custom":
        base = dict(model=model or "ac")
    else:
        raise ValueError(f"unknown preset {preset!r}; expected one of {sorted(PRESET_DOCS)}")
    base.update(overrides)
    return RunConfig(preset=preset, **base)


def resolve(config: RunConfig) -> tuple[ModelSpec, Grid, RealField]:
    """Build the model, grid and initial condition a config describes."""
    params = dict(DEFAULT_MODEL_PARAMS.get(config.model, {}))
    params.update(config.params)
    spec = build_model(config.model, **params)
    grid = make_grid(config.nx, config.ny, config.lx, config.ly, dealias=config.dealias)

    if config.preset == "seven_disks":
        phi0 = preset_seven_disks(grid, eps=params.get("eps", 0.015))
    elif config.preset == "mbe_benchmark":
        phi0 = preset_mbe(grid)
    elif config.preset == "pfc_blocks":
        phi0 = preset_pfc(
            grid,
            a0=params.get("a0", 1.0),
            b0=params.get("b0", 0.025),
            gamma0=params.get("gamma0", 0.0),
        )
    elif config.preset == "custom":
        if config.init_snapshot is None:
            raise ValueError("custom preset needs init_snapshot")
        phi0, _t = read_snapshot(config.init_snapshot)
        if phi0.grid.shape != grid.shape:
            raise ValueError(
                f"snapshot grid {phi0.grid.shape} does not match config {grid.shape}"
            )
        phi0 = RealField(phi0.values, grid)
    else:
        raise ValueError(f"unknown preset {config.preset!r}")
    return spec, grid, phi0


# ---------------------------------------------------------------------------
# the time loop


def run(config: RunConfig, probe: Optional[Callable] = None) -> RunSummary:
    """Integrate a configured problem and collect the diagnostics series.

    probe, when given, is called after every step as
    probe(step_index, state_before, result, q_new, coeffs) and is meant for
    tests that need the raw per-step fields.
    """
    spec, grid, phi0 = resolve(config)
    state = init_state(spec, phi0)
    step_fn = step_cn if config.scheme == "cn" else step_bdf2
    n_steps = int(round(config.t_end / config.dt))

    out = config.output_dir
    if out is not None:
        os.makedirs(out, exist_ok=True)

    t0 = _time.perf_counter()
    rows = [_make_row(spec, state, xi0=1.0, dissipation=0.0, iters=0)]
    coeffs_log: list[RelaxCoeffs] = []
    snapshot_paths: list[str] = []
    pending = sorted(set(float(t) for t in config.snapshot_times))
    last_snap_time = None
    if pending and pending[0] <= 1e-12:
        if out is not None:
            snapshot_paths.append(_snap(out, state.phi_n, state.time))
        last_snap_time = state.time
        pending = [t for t in pending if t > 1e-12]

    e_prev = rows[0].E_modified
    xi_min, xi_max = math.inf, -math.inf
    iters_max = 0

    for n in range(1, n_steps + 1):
        try:
            result = step_fn(
                spec, state, config.dt,
                tol=config.solver_tol, max_iter=config.solver_max_iter,
            )
            q_new, coeffs, xi_logged = _post_step(spec, state, result, config)
        except (ConvergenceError, ValueError) as exc:
            if out is not None:
                _snap(out, state.phi_n, state.time, name="snap_diagnostic.pfield")
            raise RuntimeError(
                f"run aborted at step {n} (t={state.time + config.dt:g}): {exc}"
            ) from exc

        if probe is not None:
            probe(n, state, result, q_new, coeffs)
        if coeffs is not None:
            coeffs_log.append(coeffs)
        state = state.advance(result.phi_hat, q_new, config.dt)

        xi_min = min(xi_min, xi_logged)
        xi_max = max(xi_max, xi_logged)
        iters_max = max(iters_max, result.solver_iters)

        log_now = (n % config.log_every == 0)
        if log_now or config.strict:
            e_now = modified_energy(spec, state.phi_n, state.q_n)
            if config.strict and e_now > e_prev + STRICT_ENERGY_REL * abs(e_prev) + 1e-14:
                if out is not None:
                    _snap(out, state.phi_n, state.time, name="snap_diagnostic.pfield")
                raise RuntimeError(
                    f"strict mode: quadratic energy increased at step {n}: "
                    f"{e_prev!r} -> {e_now!r}"
                )
            e_prev = e_now
            if log_now:
                rows.append(
                    _make_row(
                        spec, state, xi0=xi_logged,
                        dissipation=result.dissipation, iters=result.solver_iters,
                        energy=e_now,
                    )
                )

        while pending and state.time >= pending[0] - 1e-9:
            pending.pop(0)
            if out is not None:
                snapshot_paths.append(_snap(out, state.phi_n, state.time))
            last_snap_time = state.time

    wall = _time.perf_counter() - t0
    if xi_min is math.inf:
        xi_min = xi_max = 1.0

    summary = RunSummary(
        config=config,
        rows=rows,
        coeffs=coeffs_log,
        final_state=state,
        n_steps=n_steps,
        xi_min=xi_min,
        xi_max=xi_max,
        wall_time=wall,
        solver_iters_max=iters_max,
    )
    if out is not None:
        summary.series_path = os.path.join(out, "series.csv")
        write_timeseries(rows, summary.series_path)
        if last_snap_time is None or abs(last_snap_time - state.time) > 1e-9:
            snapshot_paths.append(_snap(out, state.phi_n, state.time))
        summary.snapshot_paths = snapshot_paths
        summary.summary_path = os.path.join(out, "summary.txt")
        _write_summary(summary)
    return summary


def _post_step(
    spec: ModelSpec, state: State, result: StepResult, config: RunConfig
) -> tuple[RealField, Optional[RelaxCoeffs], float]:
    if not config.relaxed:
        return result.q_hat, None, 1.0
    if config.force_xi is not None:
        xi = float(config.force_xi)
        if xi == 1.0:
            return result.q_hat.copy(), None, xi
        h_new = h_field(spec, result.phi_hat)
        if xi == 0.0:
            return h_new, None, xi
        blended = RealField(
            xi * result.q_hat.values + (1.0 - xi) * h_new.values, result.q_hat.grid
        )
        return blended, None, xi
    if config.scheme == "cn":
        q_new, coeffs = relax_cn(
            spec, result.q_hat, result.phi_hat, result.dissipation, config.dt, config.eta
        )
    else:
        q_new, coeffs = relax_bdf2(
            spec, result.q_hat, result.phi_hat, state.q_n,
            result.dissipation, config.dt, config.eta,
        )
    return q_new, coeffs, coeffs.xi0


def _make_row(
    spec: ModelSpec,
    state: State,
    xi0: float,
    dissipation: float,
    iters: int,
    energy: Optional[float] = None,
) -> TimeSeriesRow:
    phi, q = state.phi_n, state.q_n
    drift = RealField(q.values - h_field(spec, phi).values, phi.grid)
    return TimeSeriesRow(
        step=state.step_index,
        time=state.time,
        E_modified=energy if energy is not None else modified_energy(spec, phi, q),
        F_original=original_energy(spec, phi),
        mass=inner(phi, RealField.full(phi.grid, 1.0)),
        xi0=xi0,
        dissipation=dissipation,
        solver_iters=iters,
        q_consistency=norm2(drift),
    )


def _snap(out: str, phi: RealField, time: float, name: Optional[str] = None) -> str:
    path = os.path.join(out, name if name else f"snap_t{time:g}.pfield")
    write_snapshot(phi, path, time)
    return path


def _write_summary(summary: RunSummary) -> None:
    last = summary.rows[-1]
    lines = [
        f"preset={summary.config.preset}",
        f"model={summary.config.model}",
        f"scheme={summary.config.scheme}",
        f"relaxed={summary.config.relaxed}",
        f"eta={summary.config.eta!r}",
        f"dt={summary.config.dt!r}",
        f"steps={summary.n_steps}",
        f"final_time={summary.final_state.time!r}",
        f"final_E_modified={last.E_modified!r}",
        f"final_F_original={last.F_original!r}",
        f"final_mass={last.mass!r}",
        f"xi0_min={summary.xi_min!r}",
        f"xi0_max={summary.xi_max!r}",
        f"solver_iters_max={summary.solver_iters_max}",
        f"wall_time_s={summary.wall_time:.3f}",
    ]
    with open(summary.summary_path, "w") as f:
        f.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# convergence study


def convergence_study(
    config: RunConfig, dt_list: Sequence[float], ref_dt: Optional[float] = None
) -> list[dict]:
    """Self-convergence against a common finest-step reference run.

    Returns one record per dt with the final-time L2 error against the
    reference and the observed order from successive error ratios.
    """
    if len(dt_list) < 3:
        raise ValueError("need at least 3 time steps for a convergence study")
    dts = sorted((float(d) for d in dt_list), reverse=True)
    if ref_dt is None:
        ref_dt = dts[-1] / 8.0
    ref = run(replace(config, dt=ref_dt, output_dir=None, log_every=10**9))
    phi_ref = ref.final_state.phi_n

    records = []
    prev_err = None
    for dt in dts:
        res = run(replace(config, dt=dt, output_dir=None, log_every=10**9))
        diff = RealField(res.final_state.phi_n.values - phi_ref.values, phi_ref.grid)
        err = norm2(diff)
        order = math.log2(prev_err / err) if prev_err else float("nan")
        records.append({"dt": dt, "error": err, "order": order})
        prev_err = err
    return records


# ---------------------------------------------------------------------------
# file formats


def write_timeseries(rows: Sequence[TimeSeriesRow], path: str) -> None:
    with open(path, "w") as f:
        f.write(CSV_HEADER + "\n")
        for r in rows:
            f.write(
                f"{r.step},{r.time!r},{r.E_modified!r},{r.F_original!r},{r.mass!r},"
                f"{r.xi0!r},{r.dissipation!r},{r.solver_iters},{r.q_consistency!r}\n"
            )


def read_timeseries(path: str) -> list[TimeSeriesRow]:
    with open(path) as f:
        header = f.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected series header: {header!r}")
        rows = []
        for line in f:
            if not line.strip():
                continue
            parts = line.split(",")
            rows.append(
                TimeSeriesRow(
                    step=int(parts[0]),
                    time=float(parts[1]),
                    E_modified=float(parts[2]),
                    F_original=float(parts[3]),
                    mass=float(parts[4]),
                    xi0=float(parts[5]),
                    dissipation=float(parts[6]),
                    solver_iters=int(parts[7]),
                    q_consistency=float(parts[8]),
                )
            )
    return rows


def write_snapshot(field: RealField, path: str, time: float = 0.0) -> None:
    """Binary snapshot: a 64-byte space-padded text header line
    "PFIELD v1 nx ny lx ly time\\n", then nx*ny little-endian float64,
    row-major.
    """
    g = field.grid
    header = f"{SNAPSHOT_MAGIC} {g.nx} {g.ny} {g.lx!r} {g.ly!r} {float(time)!r}"
    if len(header) > SNAPSHOT_HEADER_LEN - 1:
        raise ValueError(f"snapshot header too long ({len(header)} chars): {header}")
    header = header.ljust(SNAPSHOT_HEADER_LEN - 1) + "\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_snapshot(path: str) -> tuple[RealField, float]:
    with open(path, "rb") as f:
        raw = f.read(SNAPSHOT_HEADER_LEN)
        if len(raw) != SNAPSHOT_HEADER_LEN or not raw.endswith(b"\n"):
            raise ValueError(f"{path}: truncated or malformed snapshot header")
        parts = raw.decode("ascii", errors="replace").split()
        if len(parts) != 7 or parts[0] != "PFIELD" or parts[1] != "v1":
            raise ValueError(f"{path}: bad snapshot magic {raw[:16]!r}")
        nx, ny = int(parts[2]), int(parts[3])
        lx, ly, t = float(parts[4]), float(parts[5]), float(parts[6])
        data = f.read(nx * ny * 8)
        if len(data) != nx * ny * 8:
            raise ValueError(f"{path}: snapshot payload truncated")
        values = np.frombuffer(data, dtype="<f8").reshape(nx, ny).copy()
    grid = make_grid(nx, ny, lx, ly)
    return RealField(values, grid), t
