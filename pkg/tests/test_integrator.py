"""Tests for RK4 stepping, diagnostics, and blow-up detection."""

import math

import numpy as np
import pytest

from gravlab.integrator import (
    DiagnosticsRow,
    SimConfig,
    detect_blowup,
    highband_energy_fraction,
    run,
    step_rk4,
)
from gravlab.model import ModelParams, initial_condition
from gravlab.spectral import GridSpec, RealField
from gravlab.theory import check_run_against_bounds, build_stability_report, peak_growth_envelope


def scalar_rk4(c, dt, steps=1):
    """Hand-iterated classic RK4 for the uniform-field ODE r' = r (r - 1)."""
    f = lambda r: r * (r - 1.0)
    for _ in range(steps):
        k1 = f(c)
        k2 = f(c + 0.5 * dt * k1)
        k3 = f(c + 0.5 * dt * k2)
        k4 = f(c + dt * k3)
        c = c + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return c


class TestSimConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SimConfig(dt=-1.0, t_final=1.0)
        with pytest.raises(ValueError):
            SimConfig(dt=0.1, t_final=1.0, record_every=0)
        with pytest.raises(ValueError):
            SimConfig(dt=0.1, t_final=1.0, direction="sideways")

    def test_step_count_matches_t_final(self):
        cfg = SimConfig(dt=1e-3, t_final=1.0)
        assert abs(cfg.n_steps * cfg.dt - cfg.t_final) <= cfg.dt


class TestStepRk4:
    def test_equilibrium_fixed_point(self):
        g = GridSpec(1, 32)
        f = RealField(g, np.ones(32))
        for dt in (1e-3, 0.1, 0.5):
            out = step_rk4(f, dt, ModelParams(1.0, 1.0))
            assert np.abs(out.values - 1.0).max() < 1e-14

    def test_uniform_field_matches_scalar_oracle(self):
        # a spatially uniform state evolves by the reaction ODE alone; one
        # field step must reproduce the scalar tableau exactly
        g = GridSpec(1, 32)
        out = step_rk4(RealField(g, 2.0 * np.ones(32)), 0.01, ModelParams(1.0, 1.0))
        expect = scalar_rk4(2.0, 0.01)
        assert np.abs(out.values - expect).max() < 1e-13

    def test_backward_inverts_forward_for_small_dt(self):
        g = GridSpec(1, 64)
        f = initial_condition("cosbump", g, amplitude=0.3)
        p = ModelParams(1.0, 1.0)
        fwd = step_rk4(f, 1e-3, p)
        back = step_rk4(fwd, 1e-3, p, direction="backward")
        assert np.abs(back.values - f.values).max() < 1e-9

    def test_nonfinite_stage_reported_with_index(self):
        # an absurdly large state overflows the quadratic reaction in the
        # first stage slope
        g = GridSpec(1, 32)
        f = RealField(g, np.full(32, 1e200))
        with pytest.raises(ValueError, match="stage k1"):
            step_rk4(f, 0.1, ModelParams(1.0, 0.0))

    def test_self_convergence_order(self):
        # fourth-order accuracy via a dt, dt/2, dt/4 Richardson triple
        g = GridSpec(1, 64)
        p = ModelParams(1.0, 1.0)
        f0 = initial_condition("cosbump", g, amplitude=0.5)
        t_final = 0.4

        def integrate(dt):
            v = f0
            for _ in range(round(t_final / dt)):
                v = step_rk4(v, dt, p)
            return v.values

        u1, u2, u3 = integrate(0.02), integrate(0.01), integrate(0.005)
        e1 = np.abs(u1 - u2).max()
        e2 = np.abs(u2 - u3).max()
        order = math.log2(e1 / e2)
        assert 3.5 <= order <= 4.5


class TestRun:
    def test_homogeneous_rows_identical(self):
        g = GridSpec(1, 32)
        res = run(RealField(g, np.ones(32)), ModelParams(1.0, 1.0),
                  SimConfig(dt=0.01, t_final=0.1, record_every=2))
        assert res.status == "completed"
        assert all(r.max_rho == pytest.approx(1.0, abs=1e-13) for r in res.series)
        assert all(r.mass == pytest.approx(res.series[0].mass, rel=1e-13) for r in res.series)

    def test_decay_case_marginal_fundamental(self):
        # beta = 1, alpha = 2 leaves the fundamental linearly marginal: the
        # peak rises on a quadratic transient, then decreases toward 1
        g = GridSpec(1, 64)
        rho0 = initial_condition("cosbump", g, amplitude=0.5)
        res = run(rho0, ModelParams(alpha=2.0, beta=1.0),
                  SimConfig(dt=2e-3, t_final=10.0, record_every=500))
        assert res.status == "completed"
        late = [r.max_rho for r in res.series if r.t >= 2.0]
        assert all(a > b for a, b in zip(late, late[1:]))
        assert res.series[-1].max_rho < max(r.max_rho for r in res.series)

    def test_strict_decay_for_even_mode_data(self):
        # |sin|-profile data contains only damped even modes at beta = 1
        g = GridSpec(1, 64)
        rho0 = initial_condition("sinbump", g, amplitude=1.0)
        res = run(rho0, ModelParams(alpha=1.0, beta=1.0),
                  SimConfig(dt=1e-3, t_final=1.0, record_every=100))
        maxes = [r.max_rho for r in res.series]
        assert res.status == "completed"
        assert all(a > b for a, b in zip(maxes, maxes[1:]))

    def test_blowup_run_respects_min_time(self):
        g = GridSpec(1, 256)
        rho0 = initial_condition("cosbump", g, amplitude=1.0)  # peak 2
        cfg = SimConfig(dt=1e-4, t_final=1.0, record_every=10)
        res = run(rho0, ModelParams(alpha=1.0, beta=0.0), cfg)
        assert res.status == "blowup"
        assert res.t_end >= math.log(2.0) - cfg.dt
        # the peak follows the saturating envelope until the pole
        for row in res.series:
            if row.t < 0.6:
                env = peak_growth_envelope(2.0, row.t)
                assert row.max_rho <= env * 1.01

    def test_envelope_violation_shrinks_under_refinement(self):
        p = ModelParams(alpha=1.0, beta=0.0)

        def worst(n, dt):
            g = GridSpec(1, n)
            rho0 = initial_condition("cosbump", g, amplitude=1.0)
            res = run(rho0, p, SimConfig(dt=dt, t_final=0.6, record_every=20))
            return max(
                (r.max_rho - peak_growth_envelope(2.0, r.t)) / peak_growth_envelope(2.0, r.t)
                for r in res.series
            )

        coarse = worst(64, 2e-3)
        fine = worst(128, 5e-4)
        assert fine <= coarse + 1e-12

    def test_mass_conservation_unit_mean(self):
        g = GridSpec(1, 64)
        rho0 = initial_condition("cosbump", g, amplitude=0.5)
        res = run(rho0, ModelParams(alpha=2.0, beta=1.0),
                  SimConfig(dt=1e-3, t_final=1.0, record_every=50))
        m0 = res.series[0].mass
        assert max(abs(r.mass - m0) for r in res.series) / abs(m0) <= 1e-8

    def test_snapshots_at_requested_times(self):
        g = GridSpec(1, 64)
        rho0 = initial_condition("cosbump", g, amplitude=0.3)
        res = run(rho0, ModelParams(1.0, 1.0),
                  SimConfig(dt=0.01, t_final=0.5, record_every=10,
                            snapshot_times=(0.0, 0.25, 0.5)))
        times = [t for t, _ in res.snapshots]
        assert times == pytest.approx([0.0, 0.25, 0.5])
        assert np.array_equal(res.snapshots[0][1].values, rho0.values)

    def test_series_strictly_increasing_and_bkm_monotone(self):
        g = GridSpec(1, 64)
        rho0 = initial_condition("randmodes", g, amplitude=0.4, seed=1)
        res = run(rho0, ModelParams(1.0, 0.5), SimConfig(dt=1e-3, t_final=0.3, record_every=7))
        ts = [r.t for r in res.series]
        assert all(a < b for a, b in zip(ts, ts[1:]))
        bkms = [r.bkm_integral for r in res.series]
        assert all(a <= b for a, b in zip(bkms, bkms[1:]))

    def test_argmax_is_true_grid_argmax(self):
        g = GridSpec(2, 32)
        rho0 = initial_condition("randmodes", g, amplitude=0.4, seed=3)
        res = run(rho0, ModelParams(1.0, 1.0),
                  SimConfig(dt=0.01, t_final=0.1, record_every=5,
                            snapshot_times=(0.0, 0.05, 0.1)))
        snaps = dict((round(t, 9), f) for t, f in res.snapshots)
        for row in res.series:
            key = round(row.t, 9)
            if key in snaps:
                field = snaps[key]
                assert row.max_rho == field.values.max()
                nodes = g.nodes()
                i = np.argmin(np.abs(nodes - row.argmax[0]))
                j = np.argmin(np.abs(nodes - row.argmax[1]))
                assert field.values[i, j] == field.values.max()

    def test_determinism(self):
        g = GridSpec(1, 64)
        rho0 = initial_condition("randmodes", g, amplitude=0.4, seed=5)
        p = ModelParams(1.0, 0.7)
        cfg = SimConfig(dt=1e-3, t_final=0.2, record_every=20)
        a = run(rho0, p, cfg)
        b = run(rho0, p, cfg)
        assert a.status == b.status
        for ra, rb in zip(a.series, b.series):
            assert ra == rb

    def test_threshold_must_exceed_initial_max(self):
        g = GridSpec(1, 32)
        rho0 = initial_condition("cosbump", g, amplitude=0.5)
        with pytest.raises(ValueError, match="must exceed"):
            run(rho0, ModelParams(1.0, 1.0), SimConfig(dt=0.01, t_final=0.1, blowup_threshold=1.0))


class TestDetectBlowup:
    def _row(self, **kw):
        base = dict(t=0.1, max_rho=2.0, argmax=(0.0,), min_rho=0.5, mass=6.28,
                    l2_norm=2.5, bkm_integral=0.2, decay_rate_sigma=0.1,
                    negative_fraction=0.0)
        base.update(kw)
        return DiagnosticsRow(**base)

    def test_threshold_crossing(self):
        cfg = SimConfig(dt=0.1, t_final=1.0, blowup_threshold=1e6)
        assert detect_blowup(self._row(max_rho=1e7), cfg)
        assert not detect_blowup(self._row(max_rho=2.0), cfg)

    def test_nonfinite_quantity(self):
        cfg = SimConfig(dt=0.1, t_final=1.0)
        assert detect_blowup(self._row(l2_norm=math.nan), cfg)
        assert detect_blowup(self._row(mass=math.inf), cfg)

    def test_nan_sigma_is_not_blowup(self):
        # the decay-rate fit is a diagnostic; degenerate spectra yield NaN
        # without implying a failed run
        cfg = SimConfig(dt=0.1, t_final=1.0)
        assert not detect_blowup(self._row(decay_rate_sigma=math.nan), cfg)


class TestBackwardMode:
    def test_highband_fraction_grows_backward(self):
        g = GridSpec(1, 64)
        rho0 = initial_condition("sinbump", g, amplitude=1.0)
        p = ModelParams(1.0, 1.0)
        fwd = run(rho0, p, SimConfig(dt=1e-3, t_final=0.1, record_every=10,
                                     snapshot_times=(0.1,)))
        smoothed = fwd.snapshots[-1][1]
        frac0 = highband_energy_fraction(smoothed)
        bwd = run(smoothed, p, SimConfig(dt=1e-3, t_final=0.1, record_every=10,
                                         direction="backward",
                                         snapshot_times=(0.025, 0.05, 0.075, 0.1)))
        fracs = [frac0] + [highband_energy_fraction(f) for _, f in bwd.snapshots]
        assert all(a < b for a, b in zip(fracs, fracs[1:]))
        assert fracs[-1] / frac0 >= 10.0


class TestBoundChecks:
    def test_blowup_run_verdicts(self):
        g = GridSpec(1, 128)
        rho0 = initial_condition("cosbump", g, amplitude=1.0)
        p = ModelParams(alpha=1.0, beta=0.0)
        cfg = SimConfig(dt=5e-4, t_final=1.0, record_every=20)
        res = run(rho0, p, cfg)
        report = build_stability_report(p.alpha, p.beta, 1, max0=rho0.max())
        checks = {c.name: c for c in check_run_against_bounds(res, p, report)}
        assert checks["peak-growth-envelope"].satisfied
        assert checks["min-blowup-time"].applicable
        assert checks["min-blowup-time"].satisfied
        assert not checks["small-perturbation-decay"].applicable

    def test_global_1d_bound_verdict_on_large_beta_run(self):
        # at beta = 4 pi^2 the unconditional 1D decay envelope applies and
        # the simulated peak must satisfy it within the advertised slack
        g = GridSpec(1, 64)
        x = g.nodes()
        bump = np.exp(-((x / 0.35) ** 2) / 2.0)
        pert = bump - bump.mean()
        rho0 = RealField(g, 1.0 + 2.0 * pert / pert.max())  # peak 3, mean 1
        beta = 4.0 * math.pi**2
        p = ModelParams(alpha=1.0, beta=beta)
        res = run(rho0, p, SimConfig(dt=1e-3, t_final=1.0, record_every=20))
        report = build_stability_report(1.0, beta, 1, max0=rho0.max())
        checks = {c.name: c for c in check_run_against_bounds(res, p, report)}
        assert checks["global-1d-decay"].applicable
        assert checks["global-1d-decay"].satisfied
        assert checks["small-perturbation-decay"].applicable
        assert checks["small-perturbation-decay"].satisfied

    def test_homogeneous_run_all_clear(self):
        g = GridSpec(1, 32)
        res = run(RealField(g, np.ones(32)), ModelParams(1.0, 2.0),
                  SimConfig(dt=0.01, t_final=0.2, record_every=4))
        p = ModelParams(1.0, 2.0)
        report = build_stability_report(1.0, 2.0, 1, max0=1.0)
        checks = {c.name: c for c in check_run_against_bounds(res, p, report)}
        assert checks["peak-growth-envelope"].max_violation == pytest.approx(0.0, abs=1e-12)
        assert checks["small-perturbation-decay"].applicable
        assert checks["small-perturbation-decay"].satisfied
