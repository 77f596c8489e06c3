"""Readers for the published gravlab artifact formats.

These parse the delimited and binary files exactly as documented by the
simulator; they never recompute physics.  Any file whose schema comment or
snapshot header does not match the supported version is refused loudly.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
SNAPSHOT_MAGIC = b"GVLB"
SNAPSHOT_VERSION = 1
_HEADER_FMT = "<4sIIIddd"

SERIES_COLUMNS = (
    "t,max_rho,argmax_coords,min_rho,mass,l2_norm,bkm_integral,"
    "decay_rate_sigma,negative_fraction"
)


class SchemaError(ValueError):
    pass


def _check_schema(line: str, kind: str) -> None:
    expected = f"# gravlab {kind}-csv v{SCHEMA_VERSION}"
    if line.strip() != expected:
        raise SchemaError(
            f"unsupported {kind} file: expected header {expected!r}, found {line.strip()!r}"
        )


@dataclass
class Series:
    """Scalar diagnostics of one run, keyed by recorded time."""

    t: np.ndarray
    max_rho: np.ndarray
    min_rho: np.ndarray


def read_series(path) -> Series:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file")
    _check_schema(lines[0], "series")
    if len(lines) < 2 or lines[1] != SERIES_COLUMNS:
        raise SchemaError(f"{path}: unexpected series columns")
    rows = [line.split(",") for line in lines[2:] if line.strip()]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return Series(
        t=np.array([float(r[0]) for r in rows]),
        max_rho=np.array([float(r[1]) for r in rows]),
        min_rho=np.array([float(r[3]) for r in rows]),
    )


@dataclass
class Sweep:
    """Peak-density curves of a beta sweep, one column per beta."""

    betas: list
    t: np.ndarray
    max_rho: list  # one array per beta, NaN-padded after early termination


def read_sweep(path) -> Sweep:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file")
    _check_schema(lines[0], "sweep")
    header = lines[1].split(",") if len(lines) > 1 else []
    if not header or header[0] != "t" or not all(
        h.startswith("max_rho[beta=") and h.endswith("]") for h in header[1:]
    ):
        raise SchemaError(f"{path}: unexpected sweep columns")
    betas = [float(h[len("max_rho[beta="):-1]) for h in header[1:]]
    if not betas:
        raise SchemaError(f"{path}: sweep has no beta columns")
    rows = [line.split(",") for line in lines[2:] if line.strip()]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    t = np.array([float(r[0]) for r in rows])
    cols = [
        np.array([float(r[j + 1]) if r[j + 1] else math.nan for r in rows])
        for j in range(len(betas))
    ]
    return Sweep(betas=betas, t=t, max_rho=cols)


@dataclass
class Snapshot:
    """One binary field snapshot."""

    dim: int
    n: int
    alpha: float
    beta: float
    t: float
    values: np.ndarray


def read_snapshot(path) -> Snapshot:
    raw = Path(path).read_bytes()
    hsize = struct.calcsize(_HEADER_FMT)
    if len(raw) < hsize:
        raise SchemaError(f"{path}: truncated snapshot header")
    magic, version, dim, n, alpha, beta, t = struct.unpack(_HEADER_FMT, raw[:hsize])
    if magic != SNAPSHOT_MAGIC:
        raise SchemaError(f"{path}: not a gravlab snapshot (magic {magic!r})")
    if version != SNAPSHOT_VERSION:
        raise SchemaError(f"{path}: unsupported snapshot version {version}")
    count = n**dim
    if len(raw) != hsize + 8 * count:
        raise SchemaError(f"{path}: payload size mismatch")
    values = np.frombuffer(raw[hsize:], dtype="<f8").reshape((n,) * dim)
    return Snapshot(dim=dim, n=n, alpha=alpha, beta=beta, t=t, values=values)


def grid_nodes(n: int) -> np.ndarray:
    """Collocation nodes x_k = 2 pi k / n - pi (the published grid layout)."""
    return 2.0 * math.pi * np.arange(n) / n - math.pi
