"""Unit tests for the figure scripts against hand-crafted artifacts that
follow the published schemas."""

import math
import struct
from pathlib import Path

import numpy as np
import pytest

from gravlab_figures.io import SchemaError, read_series, read_snapshot, read_sweep
from gravlab_figures.plots import plot_evolution, plot_field_pair, plot_sweep

SERIES_HEADER = (
    "t,max_rho,argmax_coords,min_rho,mass,l2_norm,bkm_integral,"
    "decay_rate_sigma,negative_fraction"
)


def make_series(path, rows):
    lines = ["# gravlab series-csv v1", SERIES_HEADER]
    for t, mx in rows:
        lines.append(f"{t},{mx},0,0.5,6.28,2.5,0,nan,0")
    Path(path).write_text("\n".join(lines) + "\n")


def make_sweep(path, betas, t, cols):
    header = "t," + ",".join(f"max_rho[beta={b:g}]" for b in betas)
    lines = ["# gravlab sweep-csv v1", header]
    for i, tv in enumerate(t):
        cells = [str(tv)] + [str(c[i]) if not math.isnan(c[i]) else "" for c in cols]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def make_snapshot(path, values, dim, n, alpha=1.0, beta=0.5, t=0.0):
    header = struct.pack("<4sIIIddd", b"GVLB", 1, dim, n, alpha, beta, t)
    Path(path).write_bytes(header + np.asarray(values, dtype="<f8").tobytes())


def assert_nonempty_png(path):
    data = Path(path).read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(data) > 4000


class TestReaders:
    def test_series_schema_mismatch_fails_loudly(self, tmp_path):
        p = tmp_path / "series.csv"
        make_series(p, [(0.0, 1.5)])
        text = p.read_text().replace("v1", "v2")
        p.write_text(text)
        with pytest.raises(SchemaError, match="unsupported series"):
            read_series(p)

    def test_sweep_schema_mismatch_fails_loudly(self, tmp_path):
        p = tmp_path / "sweep.csv"
        make_sweep(p, [0.2], [0.0], [[1.0]])
        p.write_text(p.read_text().replace("sweep-csv v1", "sweep-csv v3"))
        with pytest.raises(SchemaError, match="unsupported sweep"):
            read_sweep(p)

    def test_snapshot_version_mismatch(self, tmp_path):
        p = tmp_path / "snap.bin"
        header = struct.pack("<4sIIIddd", b"GVLB", 7, 1, 16, 1.0, 0.5, 0.0)
        p.write_bytes(header + np.zeros(16, dtype="<f8").tobytes())
        with pytest.raises(SchemaError, match="version 7"):
            read_snapshot(p)

    def test_empty_sweep_rejected(self, tmp_path):
        p = tmp_path / "sweep.csv"
        p.write_text("")
        with pytest.raises(SchemaError, match="empty"):
            read_sweep(p)

    def test_snapshot_roundtrip_values(self, tmp_path):
        p = tmp_path / "snap.bin"
        vals = np.linspace(0.0, 1.0, 16)
        make_snapshot(p, vals, dim=1, n=16, t=0.25)
        snap = read_snapshot(p)
        assert snap.t == 0.25
        assert np.array_equal(snap.values, vals)


class TestPlotSweep:
    def test_two_beta_curves(self, tmp_path):
        p = tmp_path / "sweep.csv"
        t = [0.0, 0.5, 1.0]
        make_sweep(p, [0.2, 0.8], t, [[2.0, 2.5, 3.0], [2.0, 1.5, 1.2]])
        out = plot_sweep(p, tmp_path / "sweep.png")
        assert_nonempty_png(out)

    def test_nan_padded_curve(self, tmp_path):
        p = tmp_path / "sweep.csv"
        make_sweep(p, [0.2, 0.8], [0.0, 0.5, 1.0],
                   [[2.0, 8.0, math.nan], [2.0, 1.5, 1.2]])
        out = plot_sweep(p, tmp_path / "sweep.png", log_scale=True)
        assert_nonempty_png(out)

    def test_empty_file_clean_error(self, tmp_path):
        p = tmp_path / "sweep.csv"
        p.write_text("# gravlab sweep-csv v1\nt,max_rho[beta=0.2]\n")
        with pytest.raises(SchemaError, match="no data rows"):
            plot_sweep(p, tmp_path / "sweep.png")


class TestPlotEvolution:
    def test_two_snapshot_overlay(self, tmp_path):
        series = tmp_path / "series.csv"
        make_series(series, [(0.0, 2.0), (0.5, 1.5)])
        x = 2 * math.pi * np.arange(32) / 32 - math.pi
        s0 = tmp_path / "rho0.bin"
        s1 = tmp_path / "rho1.bin"
        make_snapshot(s0, 1 + np.cos(x), 1, 32, t=0.0)
        make_snapshot(s1, 1 + 0.5 * np.cos(x), 1, 32, t=0.5)
        out = plot_evolution(series, [s1, s0], tmp_path / "evol.png")
        assert_nonempty_png(out)

    def test_2d_snapshot_rejected(self, tmp_path):
        series = tmp_path / "series.csv"
        make_series(series, [(0.0, 2.0)])
        snap = tmp_path / "rho.bin"
        make_snapshot(snap, np.ones((16, 16)), 2, 16)
        with pytest.raises(ValueError, match="1D"):
            plot_evolution(series, [snap], tmp_path / "evol.png")


class TestPlotFieldPair:
    def test_2d_pair(self, tmp_path):
        n = 24
        x = 2 * math.pi * np.arange(n) / n - math.pi
        X, Y = np.meshgrid(x, x, indexing="ij")
        rho = tmp_path / "rho.bin"
        pot = tmp_path / "pot.bin"
        make_snapshot(rho, np.abs(np.sin(X)) + np.abs(np.sin(Y)), 2, n, t=0.0)
        make_snapshot(pot, -np.cos(X) - np.cos(Y), 2, n, t=0.0)
        out = plot_field_pair(rho, pot, tmp_path / "pair.png")
        assert_nonempty_png(out)

    def test_constant_field_flat_panels(self, tmp_path):
        rho = tmp_path / "rho.bin"
        pot = tmp_path / "pot.bin"
        make_snapshot(rho, np.ones((16, 16)), 2, 16)
        make_snapshot(pot, np.zeros((16, 16)), 2, 16)
        out = plot_field_pair(rho, pot, tmp_path / "pair.png")
        assert_nonempty_png(out)

    def test_mismatched_grids_clean_error(self, tmp_path):
        rho = tmp_path / "rho.bin"
        pot = tmp_path / "pot.bin"
        make_snapshot(rho, np.ones((16, 16)), 2, 16)
        make_snapshot(pot, np.zeros(32), 1, 32)
        with pytest.raises(ValueError, match="mismatched grids"):
            plot_field_pair(rho, pot, tmp_path / "pair.png")
