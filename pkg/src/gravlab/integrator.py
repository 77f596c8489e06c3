"""Classic explicit RK4 time stepping with diagnostics and blow-up detection.

A single run is strictly sequential and deterministic; concurrent runs
share nothing.  The scheme applies no filtering or clamping: blow-up ends
a run through the detection threshold, and negative densities are recorded
as a diagnostic, never repaired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, _rhs_core
from .spectral import GridSpec, RealField, _operator_tables, check_finite
from .theory import spectral_decay_rate

DIRECTIONS = ("forward", "backward")


@dataclass(frozen=True)
class SimConfig:
    """Time grid, recording cadence, and termination policy for one run."""

    dt: float
    t_final: float
    record_every: int = 1
    snapshot_times: tuple = ()
    blowup_threshold: float = 1e6
    direction: str = "forward"

    def __post_init__(self):
        if self.dt <= 0.0 or self.t_final <= 0.0:
            raise ValueError("dt and t_final must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")
        if self.blowup_threshold <= 0.0:
            raise ValueError("blowup_threshold must be positive")
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))

    @property
    def n_steps(self) -> int:
        """Number of equispaced steps: the largest J with J*dt <= t_final
        (up to round-off), so J*dt matches t_final within one step and the
        run never overshoots the requested horizon."""
        return max(1, math.floor(self.t_final / self.dt * (1.0 + 1e-12)))


@dataclass
class DiagnosticsRow:
    """One sampled row of the scalar diagnostic series."""

    t: float
    max_rho: float
    argmax: tuple
    min_rho: float
    mass: float
    l2_norm: float
    bkm_integral: float
    decay_rate_sigma: float
    negative_fraction: float


@dataclass
class RunResult:
    """Outcome of a run: status, diagnostic series, field snapshots."""

    status: str  # completed | blowup | nonfinite
    t_end: float
    series: list
    snapshots: list  # (t, RealField) pairs


def _rhs_values(values: np.ndarray, grid: GridSpec, params: ModelParams) -> np.ndarray:
    """rhs on raw arrays, tolerating non-finite states (NaNs propagate)."""
    if np.isfinite(values).all():
        return _rhs_core(RealField(grid, values), params)
    return np.full(grid.shape, np.nan)


def _rk4_stages(values, dt, grid, params, sign):
    """The four classic RK4 stage slopes for d rho / dt = sign * rhs(rho)."""
    k1 = sign * _rhs_values(values, grid, params)
    k2 = sign * _rhs_values(values + 0.5 * dt * k1, grid, params)
    k3 = sign * _rhs_values(values + 0.5 * dt * k2, grid, params)
    k4 = sign * _rhs_values(values + dt * k3, grid, params)
    return k1, k2, k3, k4


def _step_values(values, dt, grid, params, sign):
    k1, k2, k3, k4 = _rk4_stages(values, dt, grid, params, sign)
    return values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_rk4(rho: RealField, dt: float, params: ModelParams,
             direction: str = "forward") -> RealField:
    """One classic RK4 update; backward integrates the sign-flipped equation.

    A non-finite intermediate stage is reported with its stage index.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    check_finite(rho.values, "input to step_rk4")
    sign = 1.0 if direction == "forward" else -1.0
    stages = _rk4_stages(rho.values, dt, rho.grid, params, sign)
    for i, k in enumerate(stages, start=1):
        if not np.isfinite(k).all():
            raise ValueError(f"non-finite RK4 stage k{i} at dt = {dt}")
    k1, k2, k3, k4 = stages
    return RealField(rho.grid, rho.values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def highband_energy_fraction(field: RealField) -> float:
    """Fraction of fluctuation energy carried by modes with |xi| > n/3
    (the top third of the resolved band)."""
    grid = field.grid
    if not np.isfinite(field.values).all():
        return math.nan
    _, kmag, _, _, _ = _operator_tables(grid)
    power = np.abs(np.fft.fftn(field.values) / grid.size) ** 2
    total = float(power[kmag > 0].sum())
    if total == 0.0:
        return 0.0
    return float(power[kmag > grid.n / 3.0].sum()) / total


def detect_blowup(row: DiagnosticsRow, cfg: SimConfig) -> bool:
    """True iff the sampled peak exceeds the threshold or any solution
    quantity is non-finite (the decay-rate fit may be NaN on degenerate
    spectra and is excluded)."""
    solution_quantities = (row.max_rho, row.min_rho, row.mass, row.l2_norm, row.bkm_integral)
    if any(not math.isfinite(q) for q in solution_quantities):
        return True
    return row.max_rho > cfg.blowup_threshold


def _make_row(t, values, grid, bkm):
    finite = bool(np.isfinite(values).all())
    mx = float(values.max())
    mn = float(values.min())
    idx = np.unravel_index(int(np.argmax(values)), grid.shape)
    nodes = grid.nodes()
    argmax = tuple(float(nodes[i]) for i in idx)
    mass = float(values.mean()) * grid.volume
    l2 = math.sqrt(float(np.sum(values**2)) * grid.cell_volume) if finite else math.nan
    sigma = spectral_decay_rate(RealField(grid, values)).sigma if finite else math.nan
    negfrac = float(np.count_nonzero(values < 0.0)) / grid.size
    return DiagnosticsRow(t, mx, argmax, mn, mass, l2, bkm, sigma, negfrac)


def run(rho0: RealField, params: ModelParams, cfg: SimConfig) -> RunResult:
    """Integrate from rho0 until t_final or termination.

    Diagnostic rows are recorded at t = 0, every record_every steps, and at
    termination.  Snapshots are captured at the step nearest each requested
    time (clipped to the span actually reached).  The supremum-norm time
    integral uses the trapezoid rule on the recorded series.
    """
    check_finite(rho0.values, "initial condition")
    if cfg.blowup_threshold <= rho0.max():
        raise ValueError(
            f"blowup_threshold {cfg.blowup_threshold} must exceed the initial "
            f"max density {rho0.max()}"
        )
    grid = rho0.grid
    sign = 1.0 if cfg.direction == "forward" else -1.0
    n_steps = cfg.n_steps
    snap_steps = {}
    for t_req in cfg.snapshot_times:
        s = min(max(0, round(t_req / cfg.dt)), n_steps)
        snap_steps.setdefault(s, t_req)

    values = rho0.values.copy()
    max0 = rho0.max()
    peak_seen = max0
    bkm = 0.0
    series = [_make_row(0.0, values, grid, bkm)]
    snapshots = []
    if 0 in snap_steps:
        snapshots.append((0.0, RealField(grid, values.copy())))

    status = "completed"
    t_end = 0.0
    last_row = series[0]
    for s in range(1, n_steps + 1):
        values = _step_values(values, cfg.dt, grid, params, sign)
        t = s * cfg.dt
        mx = float(values.max())
        mn = float(values.min())
        finite = math.isfinite(mx) and math.isfinite(mn)
        terminal = (not finite) or mx > cfg.blowup_threshold
        if finite:
            peak_seen = max(peak_seen, mx)
        if terminal or s % cfg.record_every == 0 or s == n_steps:
            sup = max(abs(last_row.max_rho), abs(last_row.min_rho))
            sup_now = max(abs(mx), abs(mn)) if finite else math.nan
            bkm += 0.5 * (sup + sup_now) * (t - last_row.t)
            row = _make_row(t, values, grid, bkm)
            series.append(row)
            last_row = row
        if s in snap_steps and finite:
            snapshots.append((t, RealField(grid, values.copy())))
        if terminal:
            t_end = t
            if not finite:
                status = "blowup" if peak_seen > 10.0 * max0 else "nonfinite"
            else:
                status = "blowup"
            # a snapshot requested beyond the reached span clips to the
            # terminal state
            if finite and s not in snap_steps and any(step > s for step in snap_steps):
                snapshots.append((t, RealField(grid, values.copy())))
            break
        t_end = t
    return RunResult(status, t_end, series, snapshots)
