"""Periodic grids, Fourier transforms, and the nonlocal spectral operators.

Everything lives on the torus [-pi, pi)^d, so integer wavevectors coincide
with physical wavenumbers and the fractional diffusion symbol |xi|^alpha
needs no box-size scaling.  Transforms are normalized so that the zero
coefficient equals the discrete mean of the field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GridSpec:
    """Equispaced collocation grid on the torus, nodes x_k = 2*pi*k/n - pi."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 8, got {self.n}")

    @property
    def length(self) -> float:
        """Domain length per axis (fixed at 2*pi)."""
        return TWO_PI

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def cell_volume(self) -> float:
        return (TWO_PI / self.n) ** self.dim

    @property
    def volume(self) -> float:
        return TWO_PI**self.dim

    def nodes(self) -> np.ndarray:
        """1D node coordinates along one axis."""
        return TWO_PI * np.arange(self.n) / self.n - math.pi

    def coords(self) -> tuple:
        """Meshgrid of node coordinates, one array per axis (ij indexing)."""
        x = self.nodes()
        if self.dim == 1:
            return (x,)
        return tuple(np.meshgrid(x, x, indexing="ij"))


@dataclass
class RealField:
    """Nodal values of a real field on a GridSpec, row-major."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())

    def mean(self) -> float:
        return float(self.values.mean())


@dataclass
class SpectralField:
    """Fourier coefficients c(xi) with f(x) = sum_xi c(xi) exp(i xi.x).

    Stored in numpy FFT layout; each wavevector component runs over
    {-n/2, ..., n/2 - 1}.  Use :func:`coeff` to index by integer wavevector.
    """

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coeffs shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    def coeff(self, xi) -> complex:
        """Coefficient of the integer wavevector xi (scalar in 1D, pair in 2D)."""
        if np.isscalar(xi):
            xi = (int(xi),)
        idx = tuple(int(c) % self.grid.n for c in xi)
        if len(idx) != self.grid.dim:
            raise ValueError(f"wavevector {xi} has wrong length for dim {self.grid.dim}")
        return complex(self.coeffs[idx])


def check_finite(values: np.ndarray, what: str = "field") -> None:
    """Reject non-finite nodal values, naming the first offending node."""
    if np.isfinite(values).all():
        return
    bad = np.argwhere(~np.isfinite(values))[0]
    raise ValueError(
        f"non-finite {what}: value {values[tuple(bad)]!r} at node index {tuple(int(i) for i in bad)}"
    )


@lru_cache(maxsize=32)
def _axis_wavenumbers(n: int) -> np.ndarray:
    """Integer wavenumbers in FFT layout: 0, 1, ..., n/2-1, -n/2, ..., -1."""
    return np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)


@lru_cache(maxsize=32)
def _operator_tables(grid: GridSpec):
    """Per-grid arrays used by every spectral operator.

    Returns (k_axes, kmag, ksq, deriv_axes, phase) where deriv_axes carry
    i*k with the Nyquist mode zeroed (odd-derivative convention) and phase
    is the per-mode (-1)^(sum xi) factor relating numpy FFT output on the
    shifted grid to coefficients in the exp(i xi.x) basis.
    """
    n, d = grid.n, grid.dim
    k1 = _axis_wavenumbers(n).astype(np.float64)
    nyq = _axis_wavenumbers(n) == -(n // 2)
    k_axes, deriv_axes = [], []
    for ax in range(d):
        shape = [1] * d
        shape[ax] = n
        k_axes.append(k1.reshape(shape))
        dk = 1j * k1
        dk[nyq] = 0.0
        deriv_axes.append(dk.reshape(shape))
    ksq = sum(k * k for k in k_axes)
    kmag = np.sqrt(ksq)
    sign1 = np.where(_axis_wavenumbers(n) % 2 == 0, 1.0, -1.0)
    phase = sign1.reshape(k_axes[0].shape)
    for ax in range(1, d):
        shape = [1] * d
        shape[ax] = n
        phase = phase * sign1.reshape(shape)
    return k_axes, kmag, ksq, deriv_axes, phase


def forward_transform(f: RealField) -> SpectralField:
    """Collocation Fourier coefficients of f; coeff(0) equals the mean of f."""
    check_finite(f.values, "input to forward_transform")
    _, _, _, _, phase = _operator_tables(f.grid)
    coeffs = np.fft.fftn(f.values) * phase / f.grid.size
    return SpectralField(f.grid, coeffs)


def inverse_transform(sf: SpectralField) -> RealField:
    """Nodal reconstruction of a spectral field (real part of the interpolant)."""
    _, _, _, _, phase = _operator_tables(sf.grid)
    values = np.fft.ifftn(sf.coeffs * phase * sf.grid.size).real
    check_finite(values, "inverse_transform output")
    return RealField(sf.grid, values)


def fractional_laplacian(f: RealField, alpha: float) -> RealField:
    """Apply the fractional Laplacian with Fourier symbol |xi|^alpha.

    alpha = 2 is the classical (negative) Laplacian; the zero mode is
    annihilated for every alpha.
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    check_finite(f.values, "input to fractional_laplacian")
    _, kmag, _, _, _ = _operator_tables(f.grid)
    fhat = np.fft.fftn(f.values)
    out = np.fft.ifftn(kmag**alpha * fhat).real
    return RealField(f.grid, out)


def solve_potential(f: RealField) -> RealField:
    """Zero-mean solution U of the discrete Poisson problem Lap U = f - <f>."""
    check_finite(f.values, "input to solve_potential")
    _, _, ksq, _, _ = _operator_tables(f.grid)
    fhat = np.fft.fftn(f.values)
    uhat = np.zeros_like(fhat)
    np.divide(-fhat, ksq, out=uhat, where=ksq > 0)
    return RealField(f.grid, np.fft.ifftn(uhat).real)


def gradient(f: RealField) -> tuple:
    """Spectral gradient, one RealField per axis (Nyquist mode dropped)."""
    check_finite(f.values, "input to gradient")
    _, _, _, deriv_axes, _ = _operator_tables(f.grid)
    fhat = np.fft.fftn(f.values)
    return tuple(RealField(f.grid, np.fft.ifftn(dk * fhat).real) for dk in deriv_axes)


def laplacian(f: RealField) -> RealField:
    """Classical Laplacian via the -|xi|^2 symbol."""
    _, _, ksq, _, _ = _operator_tables(f.grid)
    return RealField(f.grid, np.fft.ifftn(-ksq * np.fft.fftn(f.values)).real)


def dealias_mask(grid: GridSpec) -> np.ndarray:
    """2/3-rule mask: keep |xi_axis| < n/3 on every axis.

    Strict inequality keeps quadratic products of retained modes from
    aliasing back into the retained band.
    """
    k_axes, _, _, _, _ = _operator_tables(grid)
    cutoff = math.ceil(grid.n / 3.0) - 1
    mask = np.ones(grid.shape, dtype=bool)
    for k in k_axes:
        mask &= np.abs(k) <= cutoff
    return mask


def quadratic_form(f: RealField, alpha: float) -> float:
    """Discrete integral of f * Lambda^alpha f; nonnegative for all fields."""
    lam = fractional_laplacian(f, alpha)
    return float(np.sum(f.values * lam.values) * f.grid.cell_volume)


def _dft_matrix(grid: GridSpec) -> np.ndarray:
    """Direct-summation DFT matrix  W[k, j] = exp(-i xi_k x_j) / n."""
    x = grid.nodes()
    k = _axis_wavenumbers(grid.n).astype(np.float64)
    return np.exp(-1j * np.outer(k, x)) / grid.n


def naive_dft_oracle(f: RealField, alpha: float) -> RealField:
    """Fractional Laplacian by direct O(n^2)-per-axis summation, no FFT.

    Independent check of the fast-transform path; grids are capped at
    n = 64 to keep the quadratic cost in bounds.
    """
    if f.grid.n > 64:
        raise ValueError(f"naive DFT oracle limited to n <= 64, got n = {f.grid.n}")
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    check_finite(f.values, "input to naive_dft_oracle")
    grid = f.grid
    w = _dft_matrix(grid)
    k1 = _axis_wavenumbers(grid.n).astype(np.float64)
    if grid.dim == 1:
        coeffs = w @ f.values
        sym = np.abs(k1) ** alpha
        out = (w.conj().T * grid.n) @ (sym * coeffs)
    else:
        coeffs = w @ f.values @ w.T
        kx = k1[:, None]
        ky = k1[None, :]
        sym = (kx**2 + ky**2) ** (alpha / 2.0)
        winv = w.conj().T * grid.n
        out = winv @ (sym * coeffs) @ winv.T
    return RealField(grid, out.real)


def kernel_normalization(alpha: float, dim: int) -> float:
    """Constant C making the singular-integral fractional Laplacian on R^d
    match the Fourier symbol |xi|^alpha:

        C = 2^alpha * Gamma((d + alpha)/2) / (pi^(d/2) * |Gamma(-alpha/2)|).
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"kernel representation requires alpha in (0, 2), got {alpha}")
    return (
        2.0**alpha
        * math.gamma((dim + alpha) / 2.0)
        / (math.pi ** (dim / 2.0) * abs(math.gamma(-alpha / 2.0)))
    )


@dataclass
class LatticeOracleResult:
    """Lattice-sum fractional Laplacian plus crude accuracy estimates."""

    field: RealField
    truncation: int
    truncation_tail_estimate: float
    singular_cell_estimate: float


def lattice_kernel_oracle(f: RealField, alpha: float, truncation: int) -> LatticeOracleResult:
    """Truncated principal-value lattice-sum representation of Lambda^alpha.

    Evaluates C * sum_nu integral (f(x) - f(y)) / |x - y - 2*pi*nu|^(d+alpha) dy
    by midpoint quadrature on the collocation cells, excluding the singular
    cell y = x symmetrically (principal value).  Slowly convergent; meant as
    a diagnostic oracle, not a production operator.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"lattice representation requires alpha in (0, 2), got {alpha}")
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    if f.grid.n > 64:
        raise ValueError(f"lattice oracle limited to n <= 64, got n = {f.grid.n}")
    check_finite(f.values, "input to lattice_kernel_oracle")
    grid = f.grid
    n, d = grid.n, grid.dim
    c = kernel_normalization(alpha, d)
    h = TWO_PI / n
    # Kernel table on the difference grid z = x - y, folded to the minimum
    # image in [-pi, pi) so the truncated image window is exactly symmetric.
    z1 = TWO_PI * np.arange(n) / n
    z1 = np.mod(z1 + math.pi, TWO_PI) - math.pi
    nu = np.arange(-truncation, truncation + 1) * TWO_PI
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    vals = f.values
    with np.errstate(divide="ignore"):
        if d == 1:
            kern = np.abs(z1[:, None] - nu[None, :]) ** -(1.0 + alpha)
            kern[0, truncation] = 0.0  # singular cell excluded (PV)
            ktab = kern.sum(axis=1)
            conv = ktab[idx] @ vals
            out = c * h * (vals * float(ktab.sum()) - conv)
        else:
            dz = z1[:, None] - nu[None, :]  # (n, 2V+1)
            r2 = dz[:, None, :, None] ** 2 + dz[None, :, None, :] ** 2
            kern = r2 ** (-(2.0 + alpha) / 2.0)
            kern[0, 0, truncation, truncation] = 0.0
            ktab = kern.sum(axis=(2, 3))
            kmat = ktab[idx[:, None, :, None], idx[None, :, None, :]]
            conv = np.einsum("ikjl,jl->ik", kmat, vals)
            out = c * h**d * (vals * float(ktab.sum()) - conv)
    # Tail of the image sum decays like R^-alpha; the excluded cell carries
    # an O(h^(2-alpha)) PV remainder proportional to the field's curvature.
    frange = float(f.values.max() - f.values.min())
    surface = {1: 2.0, 2: TWO_PI}[d]
    tail = c * frange * surface * (TWO_PI * truncation) ** (-alpha) / alpha
    curv = float(np.abs(laplacian(f).values).max())
    singular = c * curv * surface * h ** (2.0 - alpha) / max(2.0 - alpha, 1e-12)
    return LatticeOracleResult(RealField(grid, out), truncation, tail, singular)
