"""Physical model layer: drive synthesis, drift/diffusion assembly, regime checks.

The system is one cavity mode (decay rate kappa) coupled to N mechanical
resonators.  Each switching step drives both sidebands of every resonator;
red amplitudes are proportional to the magnitudes of one row of the graph
unitary and blue amplitudes are a fixed fraction r of the red ones, so the
cavity dissipation cools one collective mode into a squeezed vacuum.

Everything dynamical is expressed through the quadratic-Hamiltonian /
linear-dissipator reduction: with H = R^T G R / 2 and dissipator rows
L = C R over R = (q_1..q_N, q_cav, p_1..p_N, p_cav), the covariance obeys
dV/dt = A V + V A^T + B with A = Sigma (G + Im C^dag C) and
B = Sigma Re(C^dag C) Sigma^T.  The cavity decay contributes the row
sqrt(kappa/2) (0.., 1, 0.., i); optional thermal contact of resonator j
appends the amplitude-damping row sqrt(gamma_j (nbar_j + 1)) b_j and the
heating row sqrt(gamma_j nbar_j) b_j^dag.

Rates are unit-agnostic: feed angular frequencies in rad/s and times come
out in seconds, or normalise kappa = 1 and work in cavity-decay units.
Mechanical frequencies never enter the (rotating-frame) dynamics; they
matter only for bath occupations and validity checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import hbar as HBAR
from scipy.constants import k as K_B

from .gaussian import SqueezingSpec, symplectic_form
from .numerics import eigenvalues

TWO_PI = 2.0 * math.pi


def thermal_occupation(omega: float, temperature: float) -> float:
    """Planck mean occupation 1/(exp(hbar*omega/kB*T) - 1).

    omega is angular (rad/s), temperature in kelvin; T = 0 gives 0.
    """
    if omega <= 0:
        raise ValueError(f"angular frequency must be positive, got {omega}")
    if temperature < 0:
        raise ValueError(f"temperature must be nonnegative, got {temperature}")
    if temperature == 0.0:
        return 0.0
    x = HBAR * omega / (K_B * temperature)
    if x > 700.0:  # exp would overflow; the occupation is zero to double precision
        return 0.0
    return float(1.0 / np.expm1(x))


def beta_optimal(kappa: float, r: float, *, r_max: float = 0.9999) -> float:
    """Collective coupling kappa/(4*sqrt(1 - r^2)) giving critical damping.

    With this choice the two relaxation rates of a switching step coincide
    at kappa/4, so each step reaches its steady state in the shortest time
    4/kappa.  Diverges as r -> 1; values above r_max are rejected.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if not 0.0 <= r <= r_max:
        raise ValueError(f"squeeze ratio r must lie in [0, {r_max}], got {r}")
    return kappa / (4.0 * math.sqrt(1.0 - r * r))


@dataclass(frozen=True)
class SystemParams:
    """Physical rates of the cavity + N resonators system.

    kappa, gamma_j, beta share one rate unit; omega_j are angular
    frequencies in rad/s (used only for occupations and regime checks);
    occupations are the bath mean phonon numbers; r is the blue/red drive
    ratio; g_j are single-photon couplings used solely to convert the
    dimensionless drive amplitudes to lab values.
    """

    kappa: float
    omega: tuple[float, ...]
    gamma: tuple[float, ...]
    occupations: tuple[float, ...]
    beta: float
    r: float
    g: tuple[float, ...]

    def __post_init__(self):
        omega = tuple(float(w) for w in self.omega)
        gamma = tuple(float(x) for x in self.gamma)
        occupations = tuple(float(x) for x in self.occupations)
        g = tuple(float(x) for x in self.g)
        n = len(omega)
        if n < 1:
            raise ValueError("need at least one mechanical mode")
        if not len(gamma) == len(occupations) == len(g) == n:
            raise ValueError(
                "per-mode lists must share one length: "
                f"omega {n}, gamma {len(gamma)}, occupations {len(occupations)}, g {len(g)}"
            )
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if any(w <= 0 for w in omega):
            raise ValueError(f"mechanical frequencies must be positive, got {omega}")
        if len(set(omega)) != n:
            raise ValueError(f"mechanical frequencies must be pairwise distinct, got {omega}")
        if any(x < 0 for x in gamma):
            raise ValueError(f"damping rates must be nonnegative, got {gamma}")
        if any(x < 0 for x in occupations):
            raise ValueError(f"occupations must be nonnegative, got {occupations}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0.0 <= self.r < 1.0:
            raise ValueError(f"squeeze ratio r must lie in [0, 1), got {self.r}")
        if any(x <= 0 for x in g):
            raise ValueError(f"couplings g must be positive, got {g}")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "occupations", occupations)
        object.__setattr__(self, "g", g)

    @property
    def n_modes(self) -> int:
        return len(self.omega)

    @classmethod
    def build(
        cls,
        n_modes: int,
        *,
        kappa: float = 1.0,
        squeezing: SqueezingSpec | None = None,
        omega=None,
        gamma=None,
        temperatures=None,
        occupations=None,
        beta: float | str = "optimal",
        g=None,
    ) -> "SystemParams":
        """Convenience constructor with sensible desk-scale defaults.

        Frequencies default to omega_j = 2*pi*j MHz; damping and
        occupations default to zero; beta defaults to the critically
        damped value for the given squeezing.  `temperatures` (kelvin)
        and `occupations` are mutually exclusive.
        """
        squeezing = squeezing or SqueezingSpec.from_r(0.0)
        if omega is None:
            omega = tuple(TWO_PI * 1.0e6 * (j + 1) for j in range(n_modes))
        else:
            omega = tuple(float(w) for w in omega)
        if gamma is None:
            gamma = (0.0,) * n_modes
        if temperatures is not None and occupations is not None:
            raise ValueError("give either temperatures or occupations, not both")
        if temperatures is not None:
            occupations = tuple(
                thermal_occupation(w, float(t)) for w, t in zip(omega, temperatures)
            )
        elif occupations is None:
            occupations = (0.0,) * n_modes
        if beta == "optimal":
            beta = beta_optimal(kappa, squeezing.r)
        return cls(
            kappa=float(kappa),
            omega=omega,
            gamma=tuple(float(x) for x in gamma),
            occupations=tuple(float(x) for x in occupations),
            beta=float(beta),
            r=squeezing.r,
            g=(1.0,) * n_modes if g is None else tuple(float(x) for x in g),
        )


@dataclass(frozen=True)
class DriveStep:
    """Sideband drive settings (amplitudes and phases) for one switching step.

    Construction normalises the parameterisation: negative amplitudes are
    folded into the phase (amp, phi) -> (|amp|, phi + pi) and phases are
    reduced to [0, 2*pi).
    """

    alpha_minus: tuple[float, ...]
    alpha_plus: tuple[float, ...]
    phi_minus: tuple[float, ...]
    phi_plus: tuple[float, ...]

    def __post_init__(self):
        folded = []
        for amps, phis in ((self.alpha_minus, self.phi_minus), (self.alpha_plus, self.phi_plus)):
            amps = tuple(float(a) for a in amps)
            phis = tuple(float(p) for p in phis)
            if len(amps) != len(phis):
                raise ValueError("amplitude and phase lists must share one length")
            out_a, out_p = [], []
            for a, p in zip(amps, phis):
                if a < 0:
                    a, p = -a, p + math.pi
                out_a.append(a)
                out_p.append(p % TWO_PI)
            folded.append((tuple(out_a), tuple(out_p)))
        if len(folded[0][0]) != len(folded[1][0]):
            raise ValueError("red and blue sideband lists must share one length")
        object.__setattr__(self, "alpha_minus", folded[0][0])
        object.__setattr__(self, "phi_minus", folded[0][1])
        object.__setattr__(self, "alpha_plus", folded[1][0])
        object.__setattr__(self, "phi_plus", folded[1][1])

    @property
    def n_modes(self) -> int:
        return len(self.alpha_minus)

    @classmethod
    def off(cls, n_modes: int) -> "DriveStep":
        zeros = (0.0,) * n_modes
        return cls(zeros, zeros, zeros, zeros)


@dataclass(frozen=True)
class DriveSchedule:
    """Ordered switching steps; step k targets the k-th collective mode."""

    steps: tuple[DriveStep, ...]

    def __post_init__(self):
        steps = tuple(self.steps)
        if not steps:
            raise ValueError("schedule must contain at least one step")
        if len({s.n_modes for s in steps}) != 1:
            raise ValueError("all steps must address the same number of modes")
        object.__setattr__(self, "steps", steps)

    @property
    def n_steps(self) -> int:
        return len(self.steps)


_PHASE_ZERO_CUTOFF = 1e-12


def drive_schedule(unitary, params: SystemParams) -> DriveSchedule:
    """Per-step laser settings realising the collective modes of `unitary`.

    Step k sets, for resonator j, the red-sideband amplitude
    alpha_j^- = (beta/g_j) |U_kj| with phase phi_j^- = arg U_kj, and the
    blue sideband at alpha_j^+ = r alpha_j^- with opposite phase.  Entries
    with vanishing magnitude get phase 0 by convention (that drive is off).
    """
    u = np.asarray(unitary, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"unitary must be square, got shape {u.shape}")
    if u.shape[0] != params.n_modes:
        raise ValueError(
            f"unitary is {u.shape[0]}x{u.shape[0]} but params describe {params.n_modes} modes"
        )
    steps = []
    for row in u:
        mags = np.abs(row)
        phases = np.where(mags > _PHASE_ZERO_CUTOFF, np.angle(row) % TWO_PI, 0.0)
        alpha_minus = tuple(params.beta / g * m for g, m in zip(params.g, mags))
        alpha_plus = tuple(params.r * a for a in alpha_minus)
        phi_minus = tuple(float(p) for p in phases)
        phi_plus = tuple((-p) % TWO_PI for p in phases)
        steps.append(DriveStep(alpha_minus, alpha_plus, phi_minus, phi_plus))
    return DriveSchedule(tuple(steps))


@dataclass(frozen=True)
class DriftDiffusion:
    """Drift A and diffusion B of dV/dt = A V + V A^T + B.

    Quadrature ordering: (q_1..q_N, q_cav, p_1..p_N, p_cav).
    """

    drift: np.ndarray
    diffusion: np.ndarray
    n_mech: int

    def __post_init__(self):
        self.drift.setflags(write=False)
        self.diffusion.setflags(write=False)


def _assemble(kappa, ga_minus, ga_plus, phi_minus, phi_plus, gamma=None, occupations=None):
    """(G, C) -> (A, B) map for N resonators + cavity.

    ga_minus/ga_plus are the products g_j * alpha_j^{-/+} (rate units).
    Thermal rows are appended when gamma/occupations are given.
    """
    n = len(ga_minus)
    n_modes = n + 1
    dim = 2 * n_modes
    iq_cav, ip_cav = n, 2 * n + 1

    cos_p, cos_m = np.cos(phi_plus), np.cos(phi_minus)
    sin_p, sin_m = np.sin(phi_plus), np.sin(phi_minus)
    coef_qq = ga_plus * cos_p + ga_minus * cos_m
    coef_pp = -ga_plus * cos_p + ga_minus * cos_m
    coef_qp = ga_plus * sin_p + ga_minus * sin_m
    coef_pq = ga_plus * sin_p - ga_minus * sin_m

    g_mat = np.zeros((dim, dim))
    for j in range(n):
        jq, jp = j, n + 1 + j
        g_mat[jq, iq_cav] = g_mat[iq_cav, jq] = coef_qq[j]
        g_mat[jq, ip_cav] = g_mat[ip_cav, jq] = coef_qp[j]
        g_mat[jp, ip_cav] = g_mat[ip_cav, jp] = coef_pp[j]
        g_mat[jp, iq_cav] = g_mat[iq_cav, jp] = coef_pq[j]

    eye = np.eye(dim)
    rows = [np.sqrt(kappa / 2.0) * (eye[iq_cav] + 1j * eye[ip_cav])]
    if gamma is not None:
        for j in range(n):
            rate_down = gamma[j] * (occupations[j] + 1.0)
            rate_up = gamma[j] * occupations[j]
            jq, jp = eye[j], eye[n + 1 + j]
            if rate_down > 0:
                rows.append(np.sqrt(rate_down / 2.0) * (jq + 1j * jp))
            if rate_up > 0:
                rows.append(np.sqrt(rate_up / 2.0) * (jq - 1j * jp))
    c_mat = np.array(rows)

    sigma = symplectic_form(n_modes)
    cdc = c_mat.conj().T @ c_mat
    drift = sigma @ (g_mat + cdc.imag)
    diffusion = sigma @ cdc.real @ sigma.T
    return drift, (diffusion + diffusion.T) / 2


def build_drift_diffusion(
    step: DriveStep | None,
    params: SystemParams,
    include_mechanical_noise: bool = False,
) -> DriftDiffusion:
    """Drift/diffusion matrices for one switching step of the full system.

    `step = None` means all drives off (cavity decay, and thermal channels
    if requested, only).
    """
    n = params.n_modes
    if step is None:
        step = DriveStep.off(n)
    if step.n_modes != n:
        raise ValueError(f"step addresses {step.n_modes} modes, params describe {n}")
    g = np.asarray(params.g)
    drift, diffusion = _assemble(
        params.kappa,
        g * np.asarray(step.alpha_minus),
        g * np.asarray(step.alpha_plus),
        np.asarray(step.phi_minus),
        np.asarray(step.phi_plus),
        gamma=params.gamma if include_mechanical_noise else None,
        occupations=params.occupations if include_mechanical_noise else None,
    )
    return DriftDiffusion(drift=drift, diffusion=diffusion, n_mech=n)


def collective_step_system(kappa: float, beta: float, r: float) -> DriftDiffusion:
    """Reduced one-collective-mode + cavity system of a single switching step.

    In the frame of the targeted collective mode every step looks the same:
    a red drive of strength beta and a blue drive of strength r*beta, both
    with zero phase.  The 4x4 system is the workhorse for per-step steady
    states and time scales.
    """
    if kappa <= 0 or beta <= 0:
        raise ValueError(f"kappa and beta must be positive, got {kappa}, {beta}")
    if not 0.0 <= r < 1.0:
        raise ValueError(f"squeeze ratio r must lie in [0, 1), got {r}")
    drift, diffusion = _assemble(
        kappa,
        np.array([beta]),
        np.array([r * beta]),
        np.zeros(1),
        np.zeros(1),
    )
    return DriftDiffusion(drift=drift, diffusion=diffusion, n_mech=1)


def drive_coupling_coefficients(step: DriveStep, params: SystemParams):
    """The four mech-cavity coupling vectors entering the step Hamiltonian.

    Returned in the order (qq, pp, qp, pq): couplings of mechanical q to
    cavity q, mech p to cavity p, mech q to cavity p and mech p to cavity q.
    """
    g = np.asarray(params.g)
    gam = g * np.asarray(step.alpha_minus)
    gap = g * np.asarray(step.alpha_plus)
    cos_p, cos_m = np.cos(step.phi_plus), np.cos(step.phi_minus)
    sin_p, sin_m = np.sin(step.phi_plus), np.sin(step.phi_minus)
    return (
        gap * cos_p + gam * cos_m,
        -gap * cos_p + gam * cos_m,
        gap * sin_p + gam * sin_m,
        gap * sin_p - gam * sin_m,
    )


def step_nonzero_eigenvalues(step: DriveStep, params: SystemParams) -> tuple[complex, complex]:
    """Closed-form nonzero drift eigenvalues -kappa/4 +- sqrt((kappa/4)^2 - qq.pp + pq.qp).

    Each is doubly degenerate; the remaining 2(N-1) eigenvalues vanish.
    Valid for drives with alpha^+ = r alpha^- and phi^+ = -phi^-.
    """
    qq, pp, qp, pq = drive_coupling_coefficients(step, params)
    disc = (params.kappa / 4.0) ** 2 - float(qq @ pp) + float(pq @ qp)
    root = np.sqrt(complex(disc))
    lam = -params.kappa / 4.0
    return complex(lam + root), complex(lam - root)


@dataclass(frozen=True)
class StepSpectrum:
    """Relaxation spectrum of a switching step's driven subsystem."""

    lambda_plus: complex
    lambda_minus: complex
    tau: float
    tau_min: float
    critically_coupled: bool  # beta >= kappa/(4 sqrt(1 - r^2))


# Discriminants within a few ulps of zero are rounding residue of the
# critically-coupled parameter choice; treat them as exactly critical.
_DISC_CLAMP = 64.0 * np.finfo(float).eps


def step_drift_spectrum(params: SystemParams) -> StepSpectrum:
    """Relaxation rates lambda+-, time scale tau, and the floor tau_min = 4/kappa.

    lambda+- = -kappa/4 +- sqrt((kappa/4)^2 - beta^2 (1 - r^2)) governs the
    approach of each step to its steady state; tau = 1/|Re lambda+|.
    """
    quarter = params.kappa / 4.0
    coupling = params.beta**2 * (1.0 - params.r**2)
    disc = quarter**2 - coupling
    if abs(disc) <= _DISC_CLAMP * max(quarter**2, coupling):
        disc = 0.0
    root = np.sqrt(complex(disc))
    lam_plus = complex(-quarter + root)
    lam_minus = complex(-quarter - root)
    tau = math.inf if lam_plus.real >= 0 else 1.0 / abs(lam_plus.real)
    return StepSpectrum(
        lambda_plus=lam_plus,
        lambda_minus=lam_minus,
        tau=tau,
        tau_min=4.0 / params.kappa,
        critically_coupled=params.beta >= beta_optimal(params.kappa, params.r),
    )


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    ratio: float
    threshold: float
    passed: bool
    detail: str


@dataclass(frozen=True)
class RegimeReport:
    checks: tuple[RegimeCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary_lines(self) -> list[str]:
        lines = []
        for c in self.checks:
            verdict = "pass" if c.passed else "WARN"
            lines.append(f"[{verdict}] {c.name}: ratio {c.ratio:.3e} vs threshold {c.threshold:g} ({c.detail})")
        return lines


def validate_regime(
    params: SystemParams,
    schedule: DriveSchedule | None = None,
    *,
    epsilon: float = 0.1,
) -> RegimeReport:
    """Check the operating-regime conditions, reporting pass/warn per item.

    "Much smaller than" is interpreted as a ratio <= epsilon.  Checked:
    weak coupling (alpha_j g_j << Omega_j per step), the resolved-sideband
    bound kappa << 4 sqrt(1-r^2) min_j Omega_j / max-drive, and pairwise
    mechanical-frequency separation against kappa.  Advisory only; nothing
    is enforced here.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    omega = np.asarray(params.omega)
    checks = []

    if schedule is not None:
        drive = np.zeros(params.n_modes)
        for step in schedule.steps:
            drive = np.maximum(drive, np.asarray(params.g) * np.asarray(step.alpha_minus))
    else:
        # Largest drive any unitary row can request: beta * |U| <= beta.
        drive = np.full(params.n_modes, params.beta)
    ratio_weak = float((drive / omega).max())
    j_weak = int((drive / omega).argmax())
    checks.append(
        RegimeCheck(
            name="weak-coupling (drive << Omega)",
            ratio=ratio_weak,
            threshold=epsilon,
            passed=ratio_weak <= epsilon,
            detail=f"worst mode {j_weak + 1}: g*alpha = {drive[j_weak]:.6g}, Omega = {omega[j_weak]:.6g}",
        )
    )

    sideband_scale = 4.0 * math.sqrt(1.0 - params.r**2)
    if schedule is not None:
        mags = drive / params.beta  # recover |U_kj| envelope
    else:
        mags = np.ones(params.n_modes)
    with np.errstate(divide="ignore"):
        bound = sideband_scale * np.min(np.where(mags > 0, omega / np.maximum(mags, 1e-300), np.inf))
    ratio_sb = float(params.kappa / bound)
    checks.append(
        RegimeCheck(
            name="resolved sideband (kappa << 4 sqrt(1-r^2) Omega/|U|)",
            ratio=ratio_sb,
            threshold=epsilon,
            passed=ratio_sb <= epsilon,
            detail=f"kappa = {params.kappa:.6g}, bound = {bound:.6g}",
        )
    )

    if params.n_modes > 1:
        seps = [
            abs(omega[i] - omega[j])
            for i in range(params.n_modes)
            for j in range(i + 1, params.n_modes)
        ]
        min_sep = min(seps)
        ratio_sep = math.inf if min_sep == 0 else float(params.kappa / min_sep)
        detail = f"min |Omega_i - Omega_j| = {min_sep:.6g}"
    else:
        ratio_sep, detail = 0.0, "single mechanical mode"
    checks.append(
        RegimeCheck(
            name="frequency separation (kappa << |Omega_i - Omega_j|)",
            ratio=ratio_sep,
            threshold=epsilon,
            passed=ratio_sep <= epsilon,
            detail=detail,
        )
    )
    return RegimeReport(checks=tuple(checks))


def step_hurwitz_report(step: DriveStep, params: SystemParams, include_mechanical_noise=False):
    """Numeric eigenvalues of a step's full drift plus a Hurwitz verdict.

    Returns (eigenvalues, n_zero, hurwitz) where n_zero counts eigenvalues
    with |lambda| below 1e-9 * kappa.
    """
    dd = build_drift_diffusion(step, params, include_mechanical_noise)
    ev = eigenvalues(dd.drift)
    n_zero = int(np.sum(np.abs(ev) < 1e-9 * params.kappa))
    hurwitz = bool(np.all(ev.real < -1e-12 * params.kappa))
    return ev, n_zero, hurwitz
