"""Right-hand side of the density evolution equation, parameters, and
initial-condition presets.

The evolution law combines nonlocal pressure, self-attraction, and
transport by the induced potential flow:

    d rho / dt = -beta * Lambda^alpha rho + rho (rho - 1) + grad rho . grad T(rho)

with T the zero-mean inverse Laplacian.  The reaction constant 1 is the
nondimensional background density; initial data whose mean differs from 1
therefore drift in total mass (the mean obeys m' = m (m - 1)), which is
why presets build unit-mean fields unless they reproduce literal
published data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .spectral import (
    GridSpec,
    RealField,
    TWO_PI,
    _operator_tables,
    check_finite,
    dealias_mask,
)

SPHERE_SURFACE = {1: 2.0, 2: TWO_PI, 3: 4.0 * math.pi}


@dataclass(frozen=True)
class ModelParams:
    """Equation parameters: diffusion order alpha, pressure strength beta.

    reaction_mean is the background density subtracted in the reaction
    term.  The nondimensional equation fixes it at 1; setting it to the
    initial data's own mean instead recovers the pre-normalized form
    (reaction rho (rho - <rho0>)), which conserves mass for any data and
    is related to the unit-mean system by the exact rescaling
    rho = m sigma, t = s / m, beta -> beta / m.
    """

    alpha: float
    beta: float
    dealias: bool = False
    reaction_mean: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.reaction_mean <= 0.0:
            raise ValueError(f"reaction_mean must be positive, got {self.reaction_mean}")


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional inputs: sound speed, gravity, mean density, box size."""

    sound_speed: float
    gravitational_constant: float
    mean_density: float
    box_length: float
    dim: int
    sphere_surface: float | None = None

    def __post_init__(self):
        for name in ("sound_speed", "gravitational_constant", "mean_density", "box_length"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2, or 3, got {self.dim}")
        expected = SPHERE_SURFACE[self.dim]
        if self.sphere_surface is None:
            object.__setattr__(self, "sphere_surface", expected)
        elif not math.isclose(self.sphere_surface, expected, rel_tol=1e-12):
            raise ValueError(
                f"sphere_surface {self.sphere_surface} does not match the unit-sphere "
                f"surface {expected} in {self.dim}D"
            )


class Nondimensional(NamedTuple):
    beta: float
    tau: float


def nondimensionalize(p: PhysicalParams) -> Nondimensional:
    """Pressure-to-gravity ratio beta = 4 pi^2 c_s^2 / (S_d G <rho> L^2) and
    the characteristic dynamical time tau = 1 / sqrt(S_d G <rho>)."""
    sgr = p.sphere_surface * p.gravitational_constant * p.mean_density
    beta = 4.0 * math.pi**2 * p.sound_speed**2 / (sgr * p.box_length**2)
    return Nondimensional(beta=beta, tau=1.0 / math.sqrt(sgr))


def _spectral_pieces(rho: RealField, use_dealias: bool):
    """FFT workspace shared by both right-hand-side forms."""
    grid = rho.grid
    _, kmag, ksq, deriv_axes, _ = _operator_tables(grid)
    rhat = np.fft.fftn(rho.values)
    mask = dealias_mask(grid) if use_dealias else None
    base = rhat if mask is None else mask * rhat
    uhat = np.zeros_like(base)
    np.divide(-base, ksq, out=uhat, where=ksq > 0)
    return grid, kmag, deriv_axes, rhat, base, uhat, mask


def _rhs_core(rho: RealField, params: ModelParams) -> np.ndarray:
    """Right-hand-side arithmetic with no finiteness policing; overflow
    and NaN propagate into the result (the integrator's stepping loop
    relies on that to classify failed states instead of crashing)."""
    with np.errstate(over="ignore", invalid="ignore"):
        grid, kmag, deriv_axes, rhat, base, uhat, mask = _spectral_pieces(rho, params.dealias)
        diffusion = -params.beta * np.fft.ifftn(kmag**params.alpha * rhat).real
        rho_q = rho.values if mask is None else np.fft.ifftn(base).real
        reaction = rho_q * (rho_q - params.reaction_mean)
        transport = np.zeros(grid.shape)
        for dk in deriv_axes:
            transport += np.fft.ifftn(dk * base).real * np.fft.ifftn(dk * uhat).real
        if mask is not None:
            reaction = np.fft.ifftn(mask * np.fft.fftn(reaction)).real
            transport = np.fft.ifftn(mask * np.fft.fftn(transport)).real
        return diffusion + reaction + transport


def rhs(rho: RealField, params: ModelParams) -> RealField:
    """Evolution right-hand side evaluated pointwise on the grid.

    With dealiasing enabled, both quadratic products (reaction and
    transport) are formed from 2/3-truncated fields and re-truncated.
    A non-finite result is flagged, never silently returned.
    """
    check_finite(rho.values, "input to rhs")
    out = _rhs_core(rho, params)
    if not np.isfinite(out).all():
        check_finite(out, "rhs output")
    return RealField(rho.grid, out)


def rhs_divergence_form(rho: RealField, params: ModelParams) -> RealField:
    """Conservative form beta * Lap rho + div(rho grad U), valid at alpha = 2.

    Consistency oracle for :func:`rhs`: the two forms agree (up to aliasing)
    for unit-mean fields, since div(rho grad U) = grad rho . grad U
    + rho (rho - <rho>) discretely.
    """
    if params.alpha != 2.0:
        raise ValueError(f"divergence form requires alpha = 2, got {params.alpha}")
    check_finite(rho.values, "input to rhs_divergence_form")
    grid, _, deriv_axes, rhat, base, uhat, mask = _spectral_pieces(rho, params.dealias)
    _, _, ksq, _, _ = _operator_tables(grid)
    diffusion = params.beta * np.fft.ifftn(-ksq * rhat).real
    rho_q = rho.values if mask is None else np.fft.ifftn(base).real
    div_hat = np.zeros(grid.shape, dtype=complex)
    for dk in deriv_axes:
        flux = rho_q * np.fft.ifftn(dk * uhat).real
        div_hat += dk * np.fft.fftn(flux)
    if mask is not None:
        div_hat *= mask
    return RealField(grid, diffusion + np.fft.ifftn(div_hat).real)


def random_low_mode_perturbation(grid: GridSpec, seed: int) -> np.ndarray:
    """Zero-mean random field with modes |xi| <= 4, max-normalized to 1.

    Coefficients get independent uniform phases and unit magnitudes,
    Hermitian-symmetrized so the field is real; smooth, analytic data.
    """
    rng = np.random.default_rng(seed)
    _, kmag, _, _, _ = _operator_tables(grid)
    amp = np.zeros(grid.shape, dtype=complex)
    live = (kmag > 0) & (kmag <= 4.0)
    phases = rng.uniform(0.0, TWO_PI, size=grid.shape)
    amp[live] = np.exp(1j * phases[live])
    vals = np.fft.ifftn(amp).real * grid.size
    peak = np.abs(vals).max()
    if peak == 0.0:
        raise ValueError("degenerate random perturbation")
    vals /= peak
    return vals - vals.mean()


def _periodized_gaussian(grid: GridSpec, width: float) -> np.ndarray:
    """Unit-peak periodized Gaussian bump centred at the origin."""
    images = np.arange(-3, 4) * TWO_PI
    x = grid.nodes()
    bump1 = np.exp(-((x[:, None] - images[None, :]) ** 2) / (2.0 * width**2)).sum(axis=1)
    if grid.dim == 1:
        g = bump1
    else:
        g = bump1[:, None] * bump1[None, :]
    return g / g.max()


PRESETS = ("paper2d", "paper1d", "cosbump", "gauss", "randmodes", "sinbump")


def initial_condition(
    preset: str,
    grid: GridSpec,
    amplitude: float = 0.5,
    seed: int = 0,
    width: float = 0.5,
) -> RealField:
    """Build a named initial-density preset.

    paper2d    |sin x| + |sin y|          (2D, literal published data, mean 4/pi)
    paper1d    |sin x|                    (1D analogue, mean 2/pi)
    cosbump    1 + a cos x [cos y]        (unit mean)
    gauss      1 + a * zero-mean unit-peak periodized Gaussian of given width
    randmodes  1 + a * seeded random low-mode perturbation (zero mean)
    sinbump    1 + a (|sin x| - 2/pi)     (1D, unit mean, kinked profile)

    Densities must be nonnegative; a preset whose minimum dips below zero
    is rejected with the offending value.
    """
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose one of {', '.join(PRESETS)}")
    coords = grid.coords()
    if preset == "paper2d":
        if grid.dim != 2:
            raise ValueError("preset 'paper2d' requires a 2D grid")
        vals = np.abs(np.sin(coords[0])) + np.abs(np.sin(coords[1]))
    elif preset == "paper1d":
        if grid.dim != 1:
            raise ValueError("preset 'paper1d' requires a 1D grid")
        vals = np.abs(np.sin(coords[0]))
    elif preset == "cosbump":
        bump = np.cos(coords[0])
        for c in coords[1:]:
            bump = bump * np.cos(c)
        vals = 1.0 + amplitude * bump
    elif preset == "gauss":
        if width <= 0.0:
            raise ValueError("gauss preset needs width > 0")
        g = _periodized_gaussian(grid, width)
        g = g - g.mean()
        vals = 1.0 + amplitude * g / g.max()
    elif preset == "randmodes":
        vals = 1.0 + amplitude * random_low_mode_perturbation(grid, seed)
    else:  # sinbump
        if grid.dim != 1:
            raise ValueError("preset 'sinbump' requires a 1D grid")
        p = np.abs(np.sin(coords[0]))
        vals = 1.0 + amplitude * (p - p.mean())
    field = RealField(grid, vals)
    if field.min() < 0.0:
        raise ValueError(
            f"preset {preset!r} produced a negative density (min = {field.min():.6g}); "
            "densities must be nonnegative"
        )
    return field


def renormalize_to_unit_mean(field: RealField) -> RealField:
    """Rescale a positive field so its discrete mean is exactly 1."""
    m = field.mean()
    if m <= 0.0:
        raise ValueError(f"cannot renormalize a field with mean {m}")
    return RealField(field.grid, field.values / m)


def field_stats(field: RealField) -> dict:
    """Reported preset statistics: max, min, mean."""
    return {"max": field.max(), "min": field.min(), "mean": field.mean()}
