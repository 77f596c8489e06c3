"""Closed-form stability thresholds, blow-up bounds, decay envelopes, and
spectral diagnostics, plus mechanical run-versus-bound verdicts.

Everything here is a pure evaluator: no simulation state, no I/O.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import PhysicalParams, nondimensionalize
from .spectral import RealField, _operator_tables, kernel_normalization

#: Advertised numerical slack used when a simulated series is compared
#: against an analytic envelope (see check_run_against_bounds).
ENVELOPE_TOLERANCES = {
    "peak_growth": 0.01,       # relative, cf. the minimum-blow-up-time bound
    "small_pert": 1e-3,  # absolute, small-perturbation decay envelope
    "global_1d": 1e-2,   # absolute, large-beta global decay envelope
}


def dispersion(k: float, sound_speed: float, gravitational_constant: float,
               rho0: float, sphere_surface: float) -> float:
    """Squared oscillation frequency omega^2 = k^2 c_s^2 - S_d G rho0.

    Negative values mean the mode is exponentially amplified.
    """
    if k < 0:
        raise ValueError("wavenumber must be >= 0")
    for name, v in (("sound_speed", sound_speed),
                    ("gravitational_constant", gravitational_constant),
                    ("rho0", rho0), ("sphere_surface", sphere_surface)):
        if v <= 0:
            raise ValueError(f"{name} must be positive, got {v}")
    return k**2 * sound_speed**2 - sphere_surface * gravitational_constant * rho0


def jeans_length(sound_speed: float, gravitational_constant: float,
                 rho0: float, sphere_surface: float) -> float:
    """Wavelength separating acoustic oscillation from gravitational growth:
    lambda_J = 2 pi c_s / sqrt(S_d G rho0)."""
    for name, v in (("sound_speed", sound_speed),
                    ("gravitational_constant", gravitational_constant),
                    ("rho0", rho0), ("sphere_surface", sphere_surface)):
        if v <= 0:
            raise ValueError(f"{name} must be positive, got {v}")
    return 2.0 * math.pi * sound_speed / math.sqrt(
        sphere_surface * gravitational_constant * rho0
    )


def linear_mode_rate(k_int, alpha: float, beta: float) -> float:
    """Exponential growth rate 1 - beta |k|^alpha of a single linearized
    perturbation mode on the torus.  k = 0 is the conserved mean, not a
    perturbation mode, and is rejected."""
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    if beta < 0.0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    kmag = float(np.linalg.norm(np.atleast_1d(np.asarray(k_int, dtype=float))))
    if kmag == 0.0:
        raise ValueError("k = 0 is the conserved mean, not a perturbation mode")
    return 1.0 - beta * kmag**alpha


def min_blowup_time(max0: float) -> float:
    """Earliest time a smooth nonnegative solution with initial peak max0
    can blow up: log(max0 / (max0 - 1)); +inf when max0 <= 1."""
    if max0 <= 0.0:
        raise ValueError(f"max0 must be positive, got {max0}")
    if max0 <= 1.0:
        return math.inf
    return math.log(max0 / (max0 - 1.0))


def peak_growth_envelope(max0: float, t: float) -> float:
    """Universal upper bound max0 / (max0 + (1 - max0) e^t) on the peak
    density, valid until its own pole at min_blowup_time(max0)."""
    if max0 <= 0.0:
        raise ValueError(f"max0 must be positive, got {max0}")
    if t >= min_blowup_time(max0):
        raise ValueError(
            f"t = {t} is beyond the envelope pole at {min_blowup_time(max0):.6g}"
        )
    return max0 / (max0 + (1.0 - max0) * math.exp(t))


@dataclass(frozen=True)
class StabilityConstant:
    """Constant c with decay guaranteed for max0 <= c * beta, plus which
    derivation produced it."""

    value: float
    branch: str  # "sharp-d1-alpha1" or "proof-chain"


def stability_constant(alpha: float, dim: int, branch: str = "auto") -> StabilityConstant:
    """Small-perturbation stability constant c(alpha, d).

    The (alpha, d) = (1, 1) case has the sharp value 1.  Every other case
    uses the chain-of-inequalities constant
    C(alpha, d) * (2 pi)^d * (pi sqrt(d))^(-(d + alpha)), with C the kernel
    normalization; it is a valid but generally far-from-sharp bound.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"kernel representation requires alpha in (0, 2), got {alpha}")
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2, or 3, got {dim}")
    if branch not in ("auto", "generic"):
        raise ValueError(f"branch must be 'auto' or 'generic', got {branch!r}")
    if branch == "auto" and alpha == 1.0 and dim == 1:
        return StabilityConstant(1.0, "sharp-d1-alpha1")
    c = (
        kernel_normalization(alpha, dim)
        * (2.0 * math.pi) ** dim
        * (math.pi * math.sqrt(dim)) ** (-(dim + alpha))
    )
    return StabilityConstant(c, "proof-chain")


@dataclass(frozen=True)
class EnvelopeVerdict:
    """Outcome of evaluating a conditional decay envelope."""

    applicable: bool
    value: float | None = None
    rate: float | None = None
    reason: str = ""


def small_perturbation_envelope(max0: float, alpha: float, dim: int,
                                beta: float, t: float) -> EnvelopeVerdict:
    """Decay envelope 1 + (max0 - 1) exp(-(c beta - max0) t), applicable
    when max0 <= c(alpha, d) * beta; otherwise a not-applicable verdict.
    Inapplicability (including alpha = 2, where the kernel constant is
    undefined) is a verdict, not an error."""
    if max0 <= 0.0:
        raise ValueError(f"max0 must be positive, got {max0}")
    if alpha >= 2.0:
        return EnvelopeVerdict(False, reason="stability constant undefined at alpha = 2")
    c = stability_constant(alpha, dim)
    threshold = c.value * beta
    if max0 > threshold:
        return EnvelopeVerdict(
            False,
            reason=f"initial peak {max0:.6g} exceeds c*beta = {threshold:.6g} "
            f"(c = {c.value:.6g}, {c.branch})",
        )
    rate = threshold - max0
    return EnvelopeVerdict(True, 1.0 + (max0 - 1.0) * math.exp(-rate * t), rate)


def global_1d_envelope(max0: float, t: float, *, alpha: float, beta: float,
                       dim: int) -> EnvelopeVerdict:
    """Large-pressure decay envelope 1 + (max0 - 1) e^(-t), applicable for
    d = 1, alpha = 1, beta >= 4 pi^2 regardless of the initial amplitude."""
    if max0 <= 0.0:
        raise ValueError(f"max0 must be positive, got {max0}")
    if dim != 1 or alpha != 1.0:
        return EnvelopeVerdict(False, reason=f"requires d = 1, alpha = 1 (got d = {dim}, alpha = {alpha})")
    if beta < 4.0 * math.pi**2:
        return EnvelopeVerdict(False, reason=f"requires beta >= 4 pi^2 ~ {4 * math.pi ** 2:.4f}, got {beta}")
    return EnvelopeVerdict(True, 1.0 + (max0 - 1.0) * math.exp(-t), 1.0)


@dataclass
class DecayFit:
    """Least-squares exponential decay rate of the Fourier tail."""

    computable: bool
    sigma: float = math.nan
    n_modes: int = 0
    band: tuple = ()
    reason: str = ""


def spectral_decay_rate(rho: RealField) -> DecayFit:
    """Fit log |rho_hat(xi)| ~ -sigma |xi| over the resolved band.

    The fit uses modes with n/8 <= |xi| <= n/3 and |rho_hat| > 1e-13,
    excluding both the energy-containing low band and the round-off tail.
    sigma is clamped at 0; growing tails report 0.  A proxy for the width
    of the analyticity strip (exponential Fourier decay).
    """
    grid = rho.grid
    if not np.isfinite(rho.values).all():
        return DecayFit(False, reason="field is not finite")
    _, kmag, _, _, _ = _operator_tables(grid)
    coeffs = np.fft.fftn(rho.values) / grid.size
    lo, hi = grid.n / 8.0, grid.n / 3.0
    sel = (kmag >= lo) & (kmag <= hi) & (np.abs(coeffs) > 1e-13)
    n_usable = int(sel.sum())
    if n_usable < 3:
        return DecayFit(False, n_modes=n_usable, band=(lo, hi),
                        reason=f"only {n_usable} usable modes in the fit band")
    k = kmag[sel].ravel()
    logamp = np.log(np.abs(coeffs[sel]).ravel())
    kvar = float(np.var(k))
    if kvar == 0.0:
        return DecayFit(False, n_modes=n_usable, band=(lo, hi),
                        reason="usable modes share a single |xi| shell")
    slope = float(np.mean((k - k.mean()) * (logamp - logamp.mean()))) / kvar
    return DecayFit(True, sigma=max(0.0, -slope), n_modes=n_usable, band=(lo, hi))


@dataclass
class StabilityReport:
    """Every closed-form threshold and bound, evaluated for given inputs."""

    alpha: float
    beta: float
    dim: int
    linear_verdict: str
    small_perturbation_threshold: float
    stability_constant_value: float
    stability_constant_branch: str
    global_1d_applicable: bool
    global_1d_note: str
    supercritical_1d_bounded: bool
    l1_remark_threshold: float
    critical_mass_2d: float
    max0: float | None = None
    min_blowup_time_value: float | None = None
    jeans_length_value: float | None = None
    tau: float | None = None

    def to_kv(self) -> str:
        """Machine-readable key = value block (config-file syntax)."""
        lines = [
            f"alpha = {self.alpha:.17g}",
            f"beta = {self.beta:.17g}",
            f"dim = {self.dim}",
            f"linear_verdict = {self.linear_verdict}",
            f"small_perturbation_threshold = {self.small_perturbation_threshold:.17g}",
            f"stability_constant = {self.stability_constant_value:.17g}",
            f"stability_constant_branch = {self.stability_constant_branch}",
            f"global_1d_applicable = {'true' if self.global_1d_applicable else 'false'}",
            f"supercritical_1d_bounded = {'true' if self.supercritical_1d_bounded else 'false'}",
            f"l1_remark_threshold = {self.l1_remark_threshold:.17g}",
            f"critical_mass_2d = {self.critical_mass_2d:.17g}",
        ]
        if self.max0 is not None:
            lines.append(f"max0 = {self.max0:.17g}")
            lines.append(f"min_blowup_time = {self.min_blowup_time_value:.17g}")
        if self.jeans_length_value is not None:
            lines.append(f"jeans_length = {self.jeans_length_value:.17g}")
            lines.append(f"tau = {self.tau:.17g}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        """Human-readable report."""
        branch = self.stability_constant_branch
        if branch == "proof-chain":
            branch += "; proof constant, not sharp"
        out = [
            "stability report",
            "----------------",
            f"alpha = {self.alpha}, beta = {self.beta}, dim = {self.dim}",
            f"linearized homogeneous state: {self.linear_verdict}",
            f"small perturbations decay when initial peak <= {self.small_perturbation_threshold:.6g}"
            f"  (c = {self.stability_constant_value:.6g}, {branch})",
            f"global 1D decay (beta >= 4 pi^2): "
            + ("applies" if self.global_1d_applicable else f"not applicable ({self.global_1d_note})"),
            "1D supercritical diffusion (1 < alpha < 2): peak uniformly bounded "
            + ("(applies; no explicit envelope)" if self.supercritical_1d_bounded else "(not applicable)"),
            f"reported 1D L1 smallness threshold: {self.l1_remark_threshold:.6g}",
            f"reported 2D critical mass (whole plane): {self.critical_mass_2d:.6g}",
        ]
        if self.max0 is not None:
            tb = self.min_blowup_time_value
            out.append(
                f"initial peak {self.max0:.6g}: minimum blow-up time "
                + ("+inf (no blow-up possible)" if math.isinf(tb) else f"{tb:.6g}")
            )
        if self.jeans_length_value is not None:
            out.append(f"Jeans length = {self.jeans_length_value:.6g}, dynamical time tau = {self.tau:.6g}")
        return "\n".join(out) + "\n"


def build_stability_report(alpha: float, beta: float, dim: int,
                           max0: float | None = None,
                           physical: PhysicalParams | None = None) -> StabilityReport:
    """Assemble the full report; beta and dim must agree with `physical`
    when both are supplied."""
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    if beta < 0.0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if alpha < 2.0:
        c = stability_constant(alpha, dim)
    else:
        # the kernel representation breaks down at alpha = 2
        c = StabilityConstant(math.nan, "not-defined-at-alpha-2")
    g1d = global_1d_envelope(2.0, 0.0, alpha=alpha, beta=beta, dim=dim)
    report = StabilityReport(
        alpha=alpha,
        beta=beta,
        dim=dim,
        linear_verdict="unstable" if beta <= 1.0 else "damped",
        small_perturbation_threshold=c.value * beta,
        stability_constant_value=c.value,
        stability_constant_branch=c.branch,
        global_1d_applicable=g1d.applicable,
        global_1d_note=g1d.reason,
        supercritical_1d_bounded=(dim == 1 and 1.0 < alpha < 2.0),
        l1_remark_threshold=1.0 / (2.0 * math.pi),
        critical_mass_2d=8.0 * math.pi,
    )
    if max0 is not None:
        report.max0 = max0
        report.min_blowup_time_value = min_blowup_time(max0)
    if physical is not None:
        nd = nondimensionalize(physical)
        report.jeans_length_value = jeans_length(
            physical.sound_speed, physical.gravitational_constant,
            physical.mean_density, physical.sphere_surface,
        )
        report.tau = nd.tau
    return report


@dataclass
class BoundCheck:
    """Verdict for one analytic bound measured against a run's series."""

    name: str
    applicable: bool
    satisfied: bool | None = None
    max_violation: float | None = None
    tolerance: float | None = None
    note: str = ""


def check_run_against_bounds(result, params, report: StabilityReport) -> list:
    """Compare a run's recorded peak-density series against every envelope
    whose hypotheses hold, and the blow-up time against its lower bound.

    `result` is an integrator RunResult; violations are the largest excess
    of max_rho over the envelope across recorded rows.
    """
    rows = result.series
    if len(rows) < 2:
        raise ValueError("need at least 2 diagnostic rows to check bounds")
    max0 = rows[0].max_rho
    checks = []

    # Universal peak-growth envelope; compare only below its pole.
    tstar = min_blowup_time(max0)
    viol = 0.0
    for row in rows:
        if row.t < tstar * (1.0 - 1e-9) and math.isfinite(row.max_rho):
            env = peak_growth_envelope(max0, row.t)
            viol = max(viol, (row.max_rho - env) / env)
    tol = ENVELOPE_TOLERANCES["peak_growth"]
    checks.append(BoundCheck("peak-growth-envelope", True, viol <= tol, viol, tol,
                             note="relative excess over max0/(max0+(1-max0)e^t)"))

    # Conditional decay envelopes.
    sp = small_perturbation_envelope(max0, params.alpha, report.dim, params.beta, 0.0)
    if sp.applicable:
        viol = max(
            ((row.max_rho - small_perturbation_envelope(
                max0, params.alpha, report.dim, params.beta, row.t).value)
             for row in rows if math.isfinite(row.max_rho)),
            default=0.0,
        )
        tol = ENVELOPE_TOLERANCES["small_pert"]
        checks.append(BoundCheck("small-perturbation-decay", True, viol <= tol, viol, tol))
    else:
        checks.append(BoundCheck("small-perturbation-decay", False, note=sp.reason))

    g1 = global_1d_envelope(max0, 0.0, alpha=params.alpha, beta=params.beta, dim=report.dim)
    if g1.applicable:
        viol = max(
            ((row.max_rho - global_1d_envelope(
                max0, row.t, alpha=params.alpha, beta=params.beta, dim=report.dim).value)
             for row in rows if math.isfinite(row.max_rho)),
            default=0.0,
        )
        tol = ENVELOPE_TOLERANCES["global_1d"]
        checks.append(BoundCheck("global-1d-decay", True, viol <= tol, viol, tol))
    else:
        checks.append(BoundCheck("global-1d-decay", False, note=g1.reason))

    # Detected blow-up must respect the minimum blow-up time.
    if result.status == "blowup":
        dt = rows[1].t - rows[0].t if len(rows) > 1 else 0.0
        ok = result.t_end >= tstar - dt
        checks.append(BoundCheck(
            "min-blowup-time", True, ok, max(0.0, tstar - result.t_end), dt,
            note=f"detected at t = {result.t_end:.6g}, bound t* = {tstar:.6g}"))
    else:
        checks.append(BoundCheck("min-blowup-time", False,
                                 note=f"run status {result.status!r}, no blow-up detected"))
    return checks


def format_bound_checks(checks) -> str:
    lines = []
    for c in checks:
        if not c.applicable:
            lines.append(f"{c.name}: not applicable ({c.note})")
        else:
            verdict = "ok" if c.satisfied else "VIOLATED"
            lines.append(
                f"{c.name}: {verdict} (max violation {c.max_violation:.3e}, "
                f"tolerance {c.tolerance:.3e}){' - ' + c.note if c.note else ''}"
            )
    return "\n".join(lines) + "\n"
