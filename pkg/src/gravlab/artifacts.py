"""On-disk run artifacts: delimited diagnostic series, binary field
snapshots, and dependency-free raster rendering.

All delimited files begin with a schema comment line
``# gravlab <kind>-csv v<version>`` so downstream consumers can refuse
files they do not understand.  Floats are printed with 17 significant
digits, which round-trips IEEE-754 doubles exactly.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path

import numpy as np

from .integrator import DiagnosticsRow
from .spectral import GridSpec, RealField

SCHEMA_VERSION = 1
SNAPSHOT_MAGIC = b"GVLB"
SNAPSHOT_VERSION = 1
_HEADER_FMT = "<4sIIIddd"  # magic, version, dim, n, alpha, beta, t

SERIES_COLUMNS = (
    "t,max_rho,argmax_coords,min_rho,mass,l2_norm,bkm_integral,"
    "decay_rate_sigma,negative_fraction"
)


def _g17(x: float) -> str:
    return f"{x:.17g}"


def schema_line(kind: str) -> str:
    return f"# gravlab {kind}-csv v{SCHEMA_VERSION}"


def check_schema_line(line: str, kind: str) -> None:
    if line.strip() != schema_line(kind):
        raise ValueError(
            f"schema mismatch: expected {schema_line(kind)!r}, found {line.strip()!r}"
        )


def write_series_csv(path, series) -> None:
    lines = [schema_line("series"), SERIES_COLUMNS]
    for r in series:
        coords = ";".join(_g17(c) for c in r.argmax)
        lines.append(",".join([
            _g17(r.t), _g17(r.max_rho), coords, _g17(r.min_rho), _g17(r.mass),
            _g17(r.l2_norm), _g17(r.bkm_integral), _g17(r.decay_rate_sigma),
            _g17(r.negative_fraction),
        ]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_series_csv(path) -> list:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    check_schema_line(lines[0], "series")
    if lines[1] != SERIES_COLUMNS:
        raise ValueError(f"unexpected series header: {lines[1]!r}")
    out = []
    for line in lines[2:]:
        if not line.strip():
            continue
        f = line.split(",")
        out.append(DiagnosticsRow(
            t=float(f[0]), max_rho=float(f[1]),
            argmax=tuple(float(c) for c in f[2].split(";")),
            min_rho=float(f[3]), mass=float(f[4]), l2_norm=float(f[5]),
            bkm_integral=float(f[6]), decay_rate_sigma=float(f[7]),
            negative_fraction=float(f[8]),
        ))
    return out


def write_sweep_csv(path, betas, series_by_beta) -> None:
    """Combined sweep table: one t column, one max_rho column per beta.

    Runs that terminated early leave trailing cells empty.
    """
    longest = max(series_by_beta, key=len)
    times = [r.t for r in longest]
    header = "t," + ",".join(f"max_rho[beta={_g17(b)}]" for b in betas)
    lines = [schema_line("sweep"), header]
    for i, t in enumerate(times):
        cells = [_g17(t)]
        for series in series_by_beta:
            cells.append(_g17(series[i].max_rho) if i < len(series) else "")
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_sweep_csv(path):
    """Returns (betas, times, columns) with NaN padding for early ends."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    check_schema_line(lines[0], "sweep")
    header = lines[1].split(",")
    if header[0] != "t" or not all(h.startswith("max_rho[beta=") for h in header[1:]):
        raise ValueError(f"unexpected sweep header: {lines[1]!r}")
    betas = [float(h[len("max_rho[beta="):-1]) for h in header[1:]]
    times, cols = [], [[] for _ in betas]
    for line in lines[2:]:
        if not line.strip():
            continue
        cells = line.split(",")
        times.append(float(cells[0]))
        for j, cell in enumerate(cells[1:]):
            cols[j].append(float(cell) if cell else math.nan)
    return betas, np.asarray(times), [np.asarray(c) for c in cols]


def write_backward_csv(path, rows) -> None:
    """Backward-demo series: (t, highband_fraction, max_rho) triples."""
    lines = [schema_line("backward"), "t,highband_fraction,max_rho"]
    for t, frac, mx in rows:
        lines.append(",".join([_g17(t), _g17(frac), _g17(mx)]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_backward_csv(path):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    check_schema_line(lines[0], "backward")
    out = []
    for line in lines[2:]:
        if line.strip():
            t, frac, mx = (float(c) for c in line.split(","))
            out.append((t, frac, mx))
    return out


def write_snapshot(path, field: RealField, alpha: float, beta: float, t: float) -> None:
    """Binary snapshot: GVLB magic, version, dim, n, alpha, beta, t, then
    n^dim little-endian float64 nodal values, row-major."""
    header = struct.pack(_HEADER_FMT, SNAPSHOT_MAGIC, SNAPSHOT_VERSION,
                         field.grid.dim, field.grid.n, alpha, beta, t)
    data = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + data)


def read_snapshot(path):
    """Returns (field, alpha, beta, t); bit-identical round trip."""
    raw = Path(path).read_bytes()
    hsize = struct.calcsize(_HEADER_FMT)
    magic, version, dim, n, alpha, beta, t = struct.unpack(_HEADER_FMT, raw[:hsize])
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"not a gravlab snapshot: bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    grid = GridSpec(dim, n)
    expected = hsize + 8 * grid.size
    if len(raw) != expected:
        raise ValueError(f"snapshot payload is {len(raw) - hsize} bytes, expected {8 * grid.size}")
    values = np.frombuffer(raw[hsize:], dtype="<f8").reshape(grid.shape).copy()
    return RealField(grid, values), alpha, beta, t


def render_ppm(field: RealField, path, annotate: dict | None = None) -> None:
    """Linear grayscale raster of a snapshot, plus a sidecar text file
    carrying the value range.

    2D fields render as n-by-n heatmaps; 1D fields as a polyline raster.
    """
    vals = field.values
    vmin, vmax = float(np.nanmin(vals)), float(np.nanmax(vals))
    span = vmax - vmin if vmax > vmin else 1.0
    if field.grid.dim == 2:
        gray = np.clip((vals - vmin) / span, 0.0, 1.0)
        img = np.repeat((255 * gray).astype(np.uint8)[:, :, None], 3, axis=2)
    else:
        n = field.grid.n
        height = 200
        img = np.full((height, n, 3), 255, dtype=np.uint8)
        rows = ((1.0 - np.clip((vals - vmin) / span, 0.0, 1.0)) * (height - 1)).astype(int)
        for j in range(n):
            j2 = (j + 1) % n
            lo, hi = sorted((rows[j], rows[j2]))
            img[lo:hi + 1, j] = 0
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())
    side = {"min": vmin, "max": vmax}
    if annotate:
        side.update(annotate)
    sidecar = "\n".join(f"{k} = {_fmt_side(v)}" for k, v in side.items()) + "\n"
    path.with_suffix(path.suffix + ".txt").write_text(sidecar, encoding="utf-8")


def _fmt_side(v):
    return _g17(v) if isinstance(v, float) else str(v)
