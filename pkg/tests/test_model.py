import math

import numpy as np
import pytest
from scipy.constants import hbar, k as k_B

from mechgraph.gaussian import SqueezingSpec
from mechgraph.graphs import builtin_graph, graph_unitary
from mechgraph.model import (
    DriveStep,
    SystemParams,
    beta_optimal,
    build_drift_diffusion,
    collective_step_system,
    drive_schedule,
    step_drift_spectrum,
    step_hurwitz_report,
    step_nonzero_eigenvalues,
    thermal_occupation,
    validate_regime,
)
from mechgraph.numerics import eigenvalues, propagate_lyapunov, solve_lyapunov

from golden_tables import (
    PATH4_AMPLITUDES,
    PATH4_PHASES,
    RING4_PHASES,
    RING4_SIGNED_AMPLITUDES,
    fold_signed_amplitudes,
    phase_distance,
)

TWO_PI = 2.0 * math.pi


def unit_params(n, *, r=0.0, kappa=1.0, beta=None, gamma=0.0, occupations=0.0, g=1.0):
    spec = SqueezingSpec.from_r(r)
    return SystemParams(
        kappa=kappa,
        omega=tuple(TWO_PI * 1.0e6 * (j + 1) for j in range(n)),
        gamma=(gamma,) * n if np.isscalar(gamma) else tuple(gamma),
        occupations=(occupations,) * n if np.isscalar(occupations) else tuple(occupations),
        beta=beta if beta is not None else beta_optimal(kappa, spec.r),
        r=spec.r,
        g=(g,) * n if np.isscalar(g) else tuple(g),
    )


def sorted_eigs(values):
    return sorted(values, key=lambda z: (round(z.real, 9), round(z.imag, 9)))


class TestThermalOccupation:
    def test_zero_temperature(self):
        assert thermal_occupation(TWO_PI * 1e6, 0.0) == 0.0

    def test_ln2_crossover_gives_unit_occupation(self):
        omega = TWO_PI * 5e6
        temperature = hbar * omega / (k_B * math.log(2.0))
        assert thermal_occupation(omega, temperature) == pytest.approx(1.0, rel=1e-12)

    def test_megahertz_at_fifteen_millikelvin(self):
        omega = TWO_PI * 1.0e6
        n = thermal_occupation(omega, 15e-3)
        x = hbar * omega / (k_B * 15e-3)
        assert n == pytest.approx(1.0 / math.expm1(x), rel=1e-12)
        assert n == pytest.approx(312.0, abs=0.5)

    def test_huge_gap_underflows_to_zero(self):
        assert thermal_occupation(TWO_PI * 1e15, 1e-6) == 0.0

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            thermal_occupation(-1.0, 1.0)
        with pytest.raises(ValueError):
            thermal_occupation(1.0, -1.0)


class TestBetaOptimal:
    def test_no_squeezing(self):
        assert beta_optimal(2.0, 0.0) == pytest.approx(0.5, abs=1e-15)

    def test_five_db(self):
        spec = SqueezingSpec.from_db(5.0)
        # kappa/(4 sqrt(1-r^2)) = kappa cosh(xi)/4
        assert beta_optimal(1.0, spec.r) == pytest.approx(math.cosh(spec.xi) / 4.0, rel=1e-14)
        assert beta_optimal(1.0, spec.r) == pytest.approx(0.2926, abs=2e-4)

    def test_diverging_ratio_guarded(self):
        with pytest.raises(ValueError, match="0.9999"):
            beta_optimal(1.0, 0.99995)

    def test_critical_choice_closes_the_discriminant(self):
        for r in (0.0, 0.52, 0.9):
            beta = beta_optimal(1.0, r)
            assert beta * beta * (1 - r * r) == pytest.approx(1.0 / 16.0, rel=1e-12)


class TestSystemParams:
    def test_build_defaults(self):
        params = SystemParams.build(3, squeezing=SqueezingSpec.from_db(5.0))
        assert params.n_modes == 3
        assert params.gamma == (0.0,) * 3
        assert params.occupations == (0.0,) * 3
        assert params.beta == pytest.approx(beta_optimal(1.0, params.r))

    def test_build_from_temperatures(self):
        params = SystemParams.build(
            2, omega=(TWO_PI * 1e6, TWO_PI * 2e6), temperatures=(15e-3, 15e-3)
        )
        assert params.occupations[0] == pytest.approx(312.0, abs=0.5)
        assert params.occupations[1] < params.occupations[0]

    def test_validation(self):
        with pytest.raises(ValueError, match="distinct"):
            unit_params(2).__class__(
                kappa=1.0, omega=(1.0, 1.0), gamma=(0, 0), occupations=(0, 0),
                beta=0.25, r=0.0, g=(1, 1),
            )
        with pytest.raises(ValueError, match="kappa"):
            SystemParams(kappa=0.0, omega=(1.0,), gamma=(0.0,), occupations=(0.0,),
                         beta=0.25, r=0.0, g=(1.0,))
        with pytest.raises(ValueError, match=r"r must lie"):
            SystemParams(kappa=1.0, omega=(1.0,), gamma=(0.0,), occupations=(0.0,),
                         beta=0.25, r=1.0, g=(1.0,))
        with pytest.raises(ValueError, match="either temperatures or occupations"):
            SystemParams.build(1, temperatures=(0.1,), occupations=(1.0,))


class TestDriveStep:
    def test_negative_amplitude_folds_into_phase(self):
        step = DriveStep((-0.3,), (0.0,), (np.pi / 2,), (0.0,))
        assert step.alpha_minus == (0.3,)
        assert step.phi_minus[0] == pytest.approx(3 * np.pi / 2)

    def test_phases_reduced_mod_two_pi(self):
        step = DriveStep((1.0,), (0.5,), (5 * np.pi,), (-np.pi / 2,))
        assert step.phi_minus[0] == pytest.approx(np.pi)
        assert step.phi_plus[0] == pytest.approx(3 * np.pi / 2)

    def test_off_step(self):
        step = DriveStep.off(3)
        assert step.alpha_minus == (0.0,) * 3


class TestDriveSchedule:
    def test_path4_closed_form_table(self):
        params = unit_params(4, r=0.5, beta=1.0)
        schedule = drive_schedule(graph_unitary(builtin_graph("linear", 4)), params)
        amps = np.array([s.alpha_minus for s in schedule.steps])
        phases = np.array([s.phi_minus for s in schedule.steps])
        assert np.abs(amps - PATH4_AMPLITUDES).max() < 1e-10
        assert phase_distance(phases, PATH4_PHASES).max() < 1e-10

    def test_ring4_closed_form_table(self):
        params = unit_params(4, r=0.5, beta=1.0)
        schedule = drive_schedule(graph_unitary(builtin_graph("square", 4)), params)
        amps = np.array([s.alpha_minus for s in schedule.steps])
        phases = np.array([s.phi_minus for s in schedule.steps])
        want_amps, want_phases = fold_signed_amplitudes(RING4_SIGNED_AMPLITUDES, RING4_PHASES)
        assert np.abs(amps - want_amps).max() < 1e-10
        assert phase_distance(phases, want_phases).max() < 1e-10

    def test_edgeless_targets_one_oscillator_per_step(self):
        params = unit_params(3, r=0.3, beta=0.7, g=2.0)
        schedule = drive_schedule(graph_unitary(np.zeros((3, 3))), params)
        for k, step in enumerate(schedule.steps):
            amps = np.array(step.alpha_minus)
            assert amps[k] == pytest.approx(0.7 / 2.0, abs=1e-14)
            assert np.delete(amps, k).max() < 1e-14
            assert step.phi_minus[k] == pytest.approx(3 * np.pi / 2, abs=1e-12)
            # phase convention: silent drives get phase zero
            assert np.delete(np.array(step.phi_minus), k).max() == 0.0

    def test_sideband_relations(self):
        params = unit_params(4, r=0.37, beta=1.3)
        schedule = drive_schedule(graph_unitary(builtin_graph("linear", 4)), params)
        for step in schedule.steps:
            assert np.allclose(step.alpha_plus, 0.37 * np.asarray(step.alpha_minus), atol=1e-14)
            mags = np.asarray(step.alpha_minus)
            phm, php = np.asarray(step.phi_minus), np.asarray(step.phi_plus)
            nonzero = mags > 1e-12
            assert phase_distance(php[nonzero], (-phm[nonzero]) % (2 * np.pi)).max() < 1e-12

    def test_amplitude_unit_is_beta_over_g(self):
        params_a = unit_params(2, r=0.0, beta=2.0, g=1.0)
        params_b = unit_params(2, r=0.0, beta=2.0, g=4.0)
        u = graph_unitary(builtin_graph("linear", 2))
        amp_a = drive_schedule(u, params_a).steps[0].alpha_minus[0]
        amp_b = drive_schedule(u, params_b).steps[0].alpha_minus[0]
        assert amp_a == pytest.approx(4.0 * amp_b, rel=1e-14)


class TestBuildDriftDiffusion:
    def test_no_drive_no_noise_structure(self):
        params = unit_params(2, kappa=1.7)
        dd = build_drift_diffusion(None, params, include_mechanical_noise=False)
        n = 2
        iq, ip = n, 2 * n + 1
        expected_drift = np.zeros((6, 6))
        expected_drift[iq, iq] = expected_drift[ip, ip] = -1.7 / 2
        assert np.allclose(dd.drift, expected_drift, atol=1e-14)
        expected_diff = np.zeros((6, 6))
        expected_diff[iq, iq] = expected_diff[ip, ip] = 1.7 / 2
        assert np.allclose(dd.diffusion, expected_diff, atol=1e-14)

    def test_thermal_steady_state_blocks(self):
        # no drives, thermal contact on: detailed balance fixes the
        # mechanical blocks at (nbar + 1/2) I and the cavity at vacuum
        occ = (0.5, 10.0, 312.0)
        params = unit_params(3, gamma=(1e-3, 2e-3, 5e-4), occupations=occ)
        dd = build_drift_diffusion(None, params, include_mechanical_noise=True)
        steady = solve_lyapunov(dd.drift, dd.diffusion)
        expected = np.diag(
            [o + 0.5 for o in occ] + [0.5] + [o + 0.5 for o in occ] + [0.5]
        )
        assert np.abs(steady - expected).max() < 1e-8

    def test_thermal_steady_state_matches_long_propagation(self):
        occ = (2.0,)
        params = unit_params(1, gamma=(0.05,), occupations=occ)
        dd = build_drift_diffusion(None, params, include_mechanical_noise=True)
        steady = solve_lyapunov(dd.drift, dd.diffusion)
        v0 = 0.5 * np.eye(4)
        vt = propagate_lyapunov(v0, dd.drift, dd.diffusion, 800.0)
        assert np.abs(vt - steady).max() < 1e-9

    def test_vacuum_relaxation_rate_law(self):
        # cold bath: variance deviation from steady decays exactly as e^(-gamma t)
        gamma, occ = 0.01, 3.0
        params = unit_params(1, gamma=(gamma,), occupations=(occ,))
        dd = build_drift_diffusion(None, params, include_mechanical_noise=True)
        v0 = 0.5 * np.eye(4)
        for t in (10.0, 100.0, 400.0):
            vt = propagate_lyapunov(v0, dd.drift, dd.diffusion, t)
            expected = (occ + 0.5) + math.exp(-gamma * t) * (0.5 - (occ + 0.5))
            assert vt[0, 0] == pytest.approx(expected, rel=1e-9)

    def test_diffusion_positive_semidefinite_random(self):
        rng = np.random.default_rng(101)
        for _ in range(100):
            n = int(rng.integers(1, 5))
            params = unit_params(
                n,
                r=float(rng.uniform(0, 0.95)),
                kappa=float(rng.uniform(0.2, 5.0)),
                beta=float(rng.uniform(0.05, 2.0)),
                gamma=tuple(rng.uniform(0, 0.1, n)),
                occupations=tuple(rng.uniform(0, 50, n)),
            )
            step = DriveStep(
                tuple(rng.uniform(0, 2, n)),
                tuple(params.r * rng.uniform(0, 2, n)),
                tuple(rng.uniform(0, TWO_PI, n)),
                tuple(rng.uniform(0, TWO_PI, n)),
            )
            dd = build_drift_diffusion(step, params, include_mechanical_noise=True)
            assert np.linalg.eigvalsh(dd.diffusion).min() >= -1e-12

    def test_single_step_steady_state_squeezes_collective_mode(self):
        spec = SqueezingSpec.from_db(5.0)
        params = unit_params(1, r=spec.r)
        schedule = drive_schedule(graph_unitary(np.zeros((1, 1))), params)
        dd = build_drift_diffusion(schedule.steps[0], params)
        steady = solve_lyapunov(dd.drift, dd.diffusion)
        # the collective mode here is c_1 = -i b_1, so collective q is the
        # physical p; ordering is (q_1, q_cav, p_1, p_cav)
        assert steady[2, 2] == pytest.approx(math.exp(-2 * spec.xi) / 2, rel=1e-10)
        assert steady[0, 0] == pytest.approx(math.exp(2 * spec.xi) / 2, rel=1e-10)
        assert steady[1, 1] == pytest.approx(0.5, rel=1e-10)
        assert steady[3, 3] == pytest.approx(0.5, rel=1e-10)
        # and in the collective frame q is the squeezed quadrature
        frame = np.diag([0.0, 1.0, 0.0, 1.0])
        frame[0, 2], frame[2, 0] = 1.0, -1.0  # (q, p) -> (p, -q)
        coll = frame @ steady @ frame.T
        assert coll[0, 0] == pytest.approx(math.exp(-2 * spec.xi) / 2, rel=1e-10)

    def test_collective_step_system_matches_single_mode_build(self):
        spec = SqueezingSpec.from_db(5.0)
        params = unit_params(1, r=spec.r)
        schedule = drive_schedule(graph_unitary(np.zeros((1, 1))), params)
        dd_full = build_drift_diffusion(schedule.steps[0], params)
        pair = collective_step_system(params.kappa, params.beta, params.r)
        # the edgeless one-mode step drives c_1 = -i b_1: same spectrum,
        # same steady-state variances up to the quadrature rotation
        ev_a = sorted_eigs(eigenvalues(dd_full.drift))
        ev_b = sorted_eigs(eigenvalues(pair.drift))
        assert max(abs(a - b) for a, b in zip(ev_a, ev_b)) < 1e-12


class TestEigenvalueFormula:
    def test_matches_numerics_on_random_protocol_drives(self):
        rng = np.random.default_rng(202)
        for _ in range(50):
            n = 3
            r = float(rng.uniform(0, 0.95))
            params = unit_params(
                n,
                r=r,
                kappa=float(rng.uniform(0.5, 4.0)),
                beta=float(rng.uniform(0.05, 2.0)),
                g=tuple(rng.uniform(0.5, 2.0, n)),
            )
            alpha_minus = tuple(rng.uniform(0, 3.0, n))
            phi_minus = tuple(rng.uniform(0, TWO_PI, n))
            step = DriveStep(
                alpha_minus,
                tuple(r * a for a in alpha_minus),
                phi_minus,
                tuple((-p) % TWO_PI for p in phi_minus),
            )
            dd = build_drift_diffusion(step, params)
            lam_p, lam_m = step_nonzero_eigenvalues(step, params)
            expected = sorted_eigs([lam_p, lam_p, lam_m, lam_m] + [0.0] * (2 * (n - 1)))
            got = sorted_eigs(eigenvalues(dd.drift))
            assert max(abs(a - b) for a, b in zip(expected, got)) < 1e-8

    def test_schedule_steps_reduce_to_collective_spectrum(self):
        # for rows of a unitary, qq.pp - pq.qp collapses to beta^2 (1 - r^2);
        # at the critically coupled default the double root amplifies ulp
        # noise as sqrt(eps), hence the 1e-8 comparison scale
        spec = SqueezingSpec.from_db(5.0)
        params = unit_params(4, r=spec.r)
        schedule = drive_schedule(graph_unitary(builtin_graph("linear", 4)), params)
        reference = step_drift_spectrum(params)
        for step in schedule.steps:
            lam_p, lam_m = step_nonzero_eigenvalues(step, params)
            assert abs(lam_p - reference.lambda_plus) < 2e-8
            assert abs(lam_m - reference.lambda_minus) < 2e-8


class TestStepDriftSpectrum:
    @pytest.mark.parametrize("r", [0.0, 0.52, 0.9])
    def test_critical_coupling_degenerates_at_quarter_kappa(self, r):
        params = unit_params(1, r=r, beta=beta_optimal(1.0, r))
        spec = step_drift_spectrum(params)
        assert abs(spec.lambda_plus - (-0.25)) < 1e-10
        assert abs(spec.lambda_minus - (-0.25)) < 1e-10
        assert spec.tau == pytest.approx(4.0, abs=1e-10)
        assert spec.tau_min == pytest.approx(4.0, abs=1e-15)
        assert spec.critically_coupled

    def test_weak_coupling_is_slow(self):
        params = unit_params(1, r=0.0, beta=1e-6)
        spec = step_drift_spectrum(params)
        assert spec.lambda_plus.real < 0
        assert spec.tau > 1e9
        assert not spec.critically_coupled

    def test_explicit_double_root(self):
        params = unit_params(1, r=0.0, kappa=4.0, beta=1.0)
        spec = step_drift_spectrum(params)
        assert spec.lambda_plus == pytest.approx(-1.0)
        assert spec.lambda_minus == pytest.approx(-1.0)

    def test_overcritical_rates_are_complex(self):
        params = unit_params(1, r=0.0, kappa=1.0, beta=2.0)
        spec = step_drift_spectrum(params)
        assert spec.lambda_plus.imag != 0.0
        assert spec.lambda_plus.real == pytest.approx(-0.25)
        assert spec.critically_coupled


class TestRegime:
    def test_resolved_sideband_setup_passes(self):
        spec = SqueezingSpec.from_db(5.0)
        kappa = TWO_PI * 1.0e4
        params = SystemParams.build(
            4,
            kappa=kappa,
            squeezing=spec,
            omega=tuple(TWO_PI * 1e6 * j for j in (1, 2, 3, 4)),
        )
        schedule = drive_schedule(graph_unitary(builtin_graph("linear", 4)), params)
        report = validate_regime(params, schedule, epsilon=0.1)
        assert report.passed
        assert len(report.checks) == 3

    def test_near_unit_ratio_breaks_sideband_condition(self):
        spec = SqueezingSpec.from_r(0.99995)
        kappa = TWO_PI * 1.0e4
        params = SystemParams.build(
            2,
            kappa=kappa,
            squeezing=spec,
            omega=(TWO_PI * 1e6, TWO_PI * 2e6),
            beta=kappa,
        )
        schedule = drive_schedule(graph_unitary(builtin_graph("linear", 2)), params)
        report = validate_regime(params, schedule, epsilon=0.1)
        names = {c.name: c for c in report.checks}
        assert not names["resolved sideband (kappa << 4 sqrt(1-r^2) Omega/|U|)"].passed

    def test_overlapping_frequencies_warn(self):
        params = SystemParams.build(
            2, kappa=1e3, omega=(1e6, 1e6 + 1.0), squeezing=SqueezingSpec.from_r(0.0)
        )
        report = validate_regime(params, epsilon=0.1)
        names = {c.name: c for c in report.checks}
        assert not names["frequency separation (kappa << |Omega_i - Omega_j|)"].passed
        assert report.passed is False

    def test_report_is_advisory_only(self):
        # a failing report never raises; it just carries verdicts
        params = SystemParams.build(1, kappa=1e9, squeezing=SqueezingSpec.from_r(0.0))
        report = validate_regime(params, epsilon=0.1)
        assert isinstance(report.passed, bool)
        assert all(line.startswith("[") for line in report.summary_lines())


class TestStepHurwitzReport:
    def test_two_mode_single_step_has_two_zero_modes(self):
        spec = SqueezingSpec.from_db(5.0)
        params = unit_params(2, r=spec.r)
        schedule = drive_schedule(graph_unitary(builtin_graph("linear", 2)), params)
        ev, n_zero, hurwitz = step_hurwitz_report(schedule.steps[0], params)
        assert not hurwitz
        assert n_zero == 2
        assert len(ev) == 6

    def test_single_mode_step_is_hurwitz(self):
        spec = SqueezingSpec.from_db(5.0)
        params = unit_params(1, r=spec.r)
        schedule = drive_schedule(graph_unitary(np.zeros((1, 1))), params)
        _, n_zero, hurwitz = step_hurwitz_report(schedule.steps[0], params)
        assert hurwitz
        assert n_zero == 0
