"""Command-line surface: run, sweep, stability, oracle, backward, render.

Exit codes: 0 success, 1 error, 2 blow-up detected (an expected scientific
outcome, distinguished so scripts need not parse logs), 3 backward demo
fell short of its growth criterion.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import artifacts
from .config import ConfigError, RunConfig, format_config, load_config, override
from .integrator import SimConfig, highband_energy_fraction, run, step_rk4
from .model import (
    ModelParams,
    PhysicalParams,
    field_stats,
    initial_condition,
    nondimensionalize,
    renormalize_to_unit_mean,
    rhs,
    rhs_divergence_form,
)
from .spectral import (
    GridSpec,
    RealField,
    fractional_laplacian,
    lattice_kernel_oracle,
    naive_dft_oracle,
    solve_potential,
)
from .theory import (
    build_stability_report,
    check_run_against_bounds,
    format_bound_checks,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOWUP = 2
EXIT_NO_GROWTH = 3


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "set", None):
        cfg = override(cfg, args.set)
    cfg.validate()
    return cfg


def _prepare(cfg: RunConfig):
    grid = GridSpec(cfg.dim, cfg.n)
    rho0 = initial_condition(cfg.preset, grid, amplitude=cfg.amplitude, seed=cfg.seed)
    if cfg.renormalize_mean:
        rho0 = renormalize_to_unit_mean(rho0)
    mean = 1.0 if cfg.reaction_mean == "unit" else rho0.mean()
    params = ModelParams(alpha=cfg.alpha, beta=cfg.beta, dealias=cfg.dealias,
                         reaction_mean=mean)
    sim = SimConfig(dt=cfg.dt, t_final=cfg.t_final, record_every=cfg.record_every,
                    snapshot_times=cfg.snapshot_times,
                    blowup_threshold=cfg.blowup_threshold, direction=cfg.direction)
    return grid, rho0, params, sim


def _write_run_artifacts(out_dir: Path, cfg: RunConfig, rho0, params, result) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.txt").write_text(format_config(cfg), encoding="utf-8")
    artifacts.write_series_csv(out_dir / "series.csv", result.series)
    for i, (t, field) in enumerate(result.snapshots):
        artifacts.write_snapshot(out_dir / f"snapshot_rho_{i:04d}.bin",
                                 field, cfg.alpha, cfg.beta, t)
        if np.isfinite(field.values).all():
            pot = solve_potential(field)
            artifacts.write_snapshot(out_dir / f"snapshot_pot_{i:04d}.bin",
                                     pot, cfg.alpha, cfg.beta, t)
    report = build_stability_report(cfg.alpha, cfg.beta, cfg.dim, max0=rho0.max())
    checks = check_run_against_bounds(result, params, report)
    stats0 = field_stats(rho0)
    head = (
        f"status = {result.status}\n"
        f"t_end = {result.t_end:.17g}\n"
        f"initial max/min/mean = {stats0['max']:.17g} / {stats0['min']:.17g} / {stats0['mean']:.17g}\n"
    )
    (out_dir / "bounds.txt").write_text(head + format_bound_checks(checks), encoding="utf-8")


def cmd_run(args) -> int:
    cfg = _load(args)
    grid, rho0, params, sim = _prepare(cfg)
    stats = field_stats(rho0)
    print(f"preset {cfg.preset}: max = {stats['max']:.6g}, min = {stats['min']:.6g}, "
          f"mean = {stats['mean']:.6g}")
    result = run(rho0, params, sim)
    _write_run_artifacts(Path(cfg.out_dir), cfg, rho0, params, result)
    print(f"status = {result.status}, t_end = {result.t_end:.6g}, "
          f"final max = {result.series[-1].max_rho:.6g}")
    if result.status == "completed":
        return EXIT_OK
    if result.status == "blowup":
        print(f"blow-up detected at t = {result.t_end:.6g}")
        return EXIT_BLOWUP
    print("run left the finite range without a preceding blow-up signature",
          file=sys.stderr)
    return EXIT_ERROR


def _sweep_child(payload):
    cfg, beta = payload
    child_cfg = replace(cfg, beta=beta, out_dir=str(Path(cfg.out_dir) / f"beta_{beta:g}"))
    grid, rho0, params, sim = _prepare(child_cfg)
    result = run(rho0, params, sim)
    _write_run_artifacts(Path(child_cfg.out_dir), child_cfg, rho0, params, result)
    m0 = result.series[0].max_rho
    mf = result.series[-1].max_rho
    if result.status != "completed":
        verdict = "blow-up"
    elif mf < m0:
        verdict = "decay"
    else:
        verdict = "growth"
    return beta, result.status, result.t_end, m0, mf, verdict, result.series


def sweep_workers(n_jobs: int) -> int:
    env = os.environ.get("GRAVLAB_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, min(n_jobs, os.cpu_count() or 1))


def cmd_sweep(args) -> int:
    cfg = _load(args)
    betas = sorted(float(tok) for tok in args.betas.split(",") if tok.strip())
    if not betas:
        print("sweep needs a nonempty beta list", file=sys.stderr)
        return EXIT_ERROR
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, b) for b in betas]
    workers = sweep_workers(len(jobs))
    if workers == 1:
        results = [_sweep_child(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_child, jobs))
    artifacts.write_sweep_csv(out_dir / "sweep.csv", betas, [r[6] for r in results])
    lines = [artifacts.schema_line("verdicts"),
             "beta,status,t_end,initial_max,final_max,verdict"]
    for beta, status, t_end, m0, mf, verdict, _ in results:
        lines.append(f"{beta:.17g},{status},{t_end:.17g},{m0:.17g},{mf:.17g},{verdict}")
        print(f"beta = {beta:g}: {verdict} (status {status}, final max {mf:.6g})")
    (out_dir / "verdicts.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def _parse_physical(path) -> tuple:
    keys = {"sound_speed": None, "gravitational_constant": None,
            "mean_density": None, "box_length": None, "dim": None,
            "alpha": 1.0, "max0": None}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in keys:
            raise ConfigError(f"line {lineno}: unknown physical key {key!r}")
        keys[key] = int(value) if key == "dim" else float(value)
    missing = [k for k in ("sound_speed", "gravitational_constant", "mean_density",
                           "box_length", "dim") if keys[k] is None]
    if missing:
        raise ConfigError(f"physical file is missing keys: {', '.join(missing)}")
    p = PhysicalParams(keys["sound_speed"], keys["gravitational_constant"],
                       keys["mean_density"], keys["box_length"], keys["dim"])
    return p, keys["alpha"], keys["max0"]


def cmd_stability(args) -> int:
    if args.physical:
        p, alpha, max0 = _parse_physical(args.physical)
        nd = nondimensionalize(p)
        report = build_stability_report(alpha, nd.beta, p.dim, max0=max0, physical=p)
        out_dir = Path(args.out_dir or "out")
    else:
        cfg = _load(args)
        grid = GridSpec(cfg.dim, cfg.n)
        rho0 = initial_condition(cfg.preset, grid, amplitude=cfg.amplitude, seed=cfg.seed)
        if cfg.renormalize_mean:
            rho0 = renormalize_to_unit_mean(rho0)
        report = build_stability_report(cfg.alpha, cfg.beta, cfg.dim, max0=rho0.max())
        out_dir = Path(cfg.out_dir)
    text = report.to_text() + "\n" + report.to_kv()
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "stability.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


#: Documented oracle tolerances (see the operator test suite for the
#: convergence studies behind them).
ORACLE_TOLERANCES = {
    "naive-dft": 1e-11,
    "lattice-cos": 5e-2,
    "form-equivalence": 1e-10,
}


def cmd_oracle(args) -> int:
    ok = True

    worst = 0.0
    for dim in (1, 2):
        for n in (16, 32):
            g = GridSpec(dim, n)
            rng = np.random.default_rng(n + dim)
            f = RealField(g, rng.normal(size=g.shape))
            for alpha in (0.5, 1.0, 1.5, 2.0):
                d = np.abs(fractional_laplacian(f, alpha).values
                           - naive_dft_oracle(f, alpha).values).max()
                worst = max(worst, d)
    ok &= worst <= ORACLE_TOLERANCES["naive-dft"]
    print(f"naive-DFT equivalence: max discrepancy {worst:.3e} "
          f"(tolerance {ORACLE_TOLERANCES['naive-dft']:.0e})")

    g = GridSpec(1, 32)
    x = g.nodes()
    f = RealField(g, np.cos(x))
    errs = []
    for trunc in (1, 5, 50):
        r = lattice_kernel_oracle(f, 1.0, trunc)
        errs.append(np.abs(r.field.values - np.cos(x)).max())
    converging = errs[0] > errs[1] > errs[2]
    ok &= converging and errs[2] <= ORACLE_TOLERANCES["lattice-cos"]
    print(f"lattice-kernel oracle: errors {', '.join(f'{e:.3e}' for e in errs)} "
          f"at truncations 1, 5, 50 (final tolerance {ORACLE_TOLERANCES['lattice-cos']:.0e})")

    g = GridSpec(1, 64)
    bump = initial_condition("cosbump", g, amplitude=0.5)
    p = ModelParams(alpha=2.0, beta=1.0)
    d = np.abs(rhs(bump, p).values - rhs_divergence_form(bump, p).values).max()
    ok &= d <= ORACLE_TOLERANCES["form-equivalence"]
    print(f"alpha=2 form equivalence: max discrepancy {d:.3e} "
          f"(tolerance {ORACLE_TOLERANCES['form-equivalence']:.0e})")

    print("oracle checks " + ("passed" if ok else "FAILED"))
    return EXIT_OK if ok else EXIT_ERROR


def cmd_backward(args) -> int:
    cfg = _load(args)
    if cfg.beta <= 0.0:
        print("backward demo needs beta > 0 (smoothing requires pressure)",
              file=sys.stderr)
        return EXIT_ERROR
    grid, rho0, params, _ = _prepare(cfg)
    fwd = run(rho0, params, SimConfig(dt=cfg.dt, t_final=cfg.t_final,
                                      record_every=cfg.record_every,
                                      snapshot_times=(cfg.t_final,),
                                      blowup_threshold=cfg.blowup_threshold))
    if fwd.status != "completed":
        print(f"forward smoothing leg ended with status {fwd.status}", file=sys.stderr)
        return EXIT_ERROR
    state = fwd.snapshots[-1][1]
    frac0 = highband_energy_fraction(state)
    rows = [(cfg.t_final, frac0, state.max())]
    n_steps = max(1, round(cfg.t_final / cfg.dt))
    peak_frac = frac0
    for s in range(1, n_steps + 1):
        try:
            state = step_rk4(state, cfg.dt, params, direction="backward")
        except ValueError as exc:
            print(f"backward leg stopped early: {exc}", file=sys.stderr)
            break
        if s % cfg.record_every == 0 or s == n_steps:
            frac = highband_energy_fraction(state)
            peak_frac = max(peak_frac, frac)
            rows.append((cfg.t_final - s * cfg.dt, frac, state.max()))
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.txt").write_text(format_config(cfg), encoding="utf-8")
    artifacts.write_backward_csv(out_dir / "backward.csv", rows)
    growth = peak_frac / frac0 if frac0 > 0 else math.inf
    print(f"high-band energy fraction grew {growth:.3g}x "
          f"(from {frac0:.3e}) while integrating back to t = 0")
    return EXIT_OK if growth >= 10.0 else EXIT_NO_GROWTH


def cmd_render(args) -> int:
    field, alpha, beta, t = artifacts.read_snapshot(args.snapshot)
    out = Path(args.out) if args.out else Path(args.snapshot).with_suffix(".ppm")
    artifacts.render_ppm(field, out, annotate={"alpha": alpha, "beta": beta, "t": t})
    print(f"wrote {out} and {out}.txt")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gravlab",
        description="Simulate and analyze the nonlocal gravitational collapse model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key")

    p = sub.add_parser("run", help="integrate one configuration")
    add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="one run per beta, combined table")
    add_common(p)
    p.add_argument("--betas", required=True, help="comma-separated beta values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stability", help="evaluate every analytic threshold")
    add_common(p)
    p.add_argument("--physical", help="physical-parameter file (dimensional inputs)")
    p.add_argument("--out-dir", help="output directory when using --physical")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("oracle", help="cross-check operators against slow oracles")
    add_common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("backward", help="ill-posedness demo: smooth, then run backward")
    add_common(p)
    p.set_defaults(func=cmd_backward)

    p = sub.add_parser("render", help="rasterize a snapshot to a pixmap")
    p.add_argument("snapshot")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
