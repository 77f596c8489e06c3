"""Flat key = value run configuration with canonical echo.

Unknown keys are rejected by name; every key has a documented default and
the canonical echo of a parsed config parses back to the same config.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .model import PRESETS


class ConfigError(ValueError):
    pass


def _parse_bool(s: str) -> bool:
    if s == "true":
        return True
    if s == "false":
        return False
    raise ConfigError(f"expected 'true' or 'false', got {s!r}")


def _parse_times(s: str) -> tuple:
    s = s.strip()
    if not s:
        return ()
    return tuple(float(tok) for tok in s.split(","))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, tuple):
        return ",".join(f"{x:.17g}" for x in v)
    return str(v)


@dataclass(frozen=True)
class RunConfig:
    """One simulation's worth of settings (defaults reproduce a short 1D run)."""

    dim: int = 1
    n: int = 128
    alpha: float = 1.0
    beta: float = 1.0
    dealias: bool = False
    preset: str = "cosbump"
    amplitude: float = 0.5
    seed: int = 0
    dt: float = 1e-3
    t_final: float = 1.0
    record_every: int = 10
    snapshot_times: tuple = ()
    blowup_threshold: float = 1e6
    direction: str = "forward"
    out_dir: str = "out"
    renormalize_mean: bool = False
    reaction_mean: str = "unit"  # "unit" (the nondimensional 1) or "initial"

    def validate(self) -> None:
        if self.dim not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 8 or self.n % 2:
            raise ConfigError(f"n must be even and >= 8, got {self.n}")
        if not 0.0 < self.alpha <= 2.0:
            raise ConfigError(f"alpha must lie in (0, 2], got {self.alpha}")
        if self.beta < 0.0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}")
        if self.dt <= 0.0 or self.t_final <= 0.0:
            raise ConfigError("dt and t_final must be positive")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if self.direction not in ("forward", "backward"):
            raise ConfigError(f"direction must be forward or backward, got {self.direction!r}")
        if self.reaction_mean not in ("unit", "initial"):
            raise ConfigError(f"reaction_mean must be 'unit' or 'initial', got {self.reaction_mean!r}")
        if self.blowup_threshold <= 0.0:
            raise ConfigError("blowup_threshold must be positive")


_PARSERS = {
    "dim": int,
    "n": int,
    "alpha": float,
    "beta": float,
    "dealias": _parse_bool,
    "preset": str,
    "amplitude": float,
    "seed": int,
    "dt": float,
    "t_final": float,
    "record_every": int,
    "snapshot_times": _parse_times,
    "blowup_threshold": float,
    "direction": str,
    "out_dir": str,
    "renormalize_mean": _parse_bool,
    "reaction_mean": str,
}


def parse_config(text: str) -> RunConfig:
    """Parse key = value lines; '#' starts a comment, blank lines ignored."""
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            seen[key] = _PARSERS[key](value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    cfg = RunConfig(**seen)
    cfg.validate()
    return cfg


def format_config(cfg: RunConfig) -> str:
    """Canonical echo: all keys in schema order, one per line."""
    lines = [f"{f.name} = {_fmt(getattr(cfg, f.name))}" for f in fields(cfg)]
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def override(cfg: RunConfig, assignments) -> RunConfig:
    """Apply 'key=value' command-line overrides on top of a config."""
    updates = {}
    for item in assignments:
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}")
        updates[key] = _PARSERS[key](value.strip())
    out = replace(cfg, **updates)
    out.validate()
    return out
