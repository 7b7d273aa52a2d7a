"""Switching protocol runs, fidelity trajectories, and parameter sweeps.

A run starts from the configured mechanical state (vacuum, or thermal at
the bath occupations) with the cavity in vacuum, then applies the N drive
steps in order.  Within a step the dynamics is the exact linear covariance
flow; the cavity is never reset between steps, only the drive parameters
switch.  Fidelity is always measured between the cavity-reduced mechanical
state and the pure graph target.

With t_switch = "steady" each step is taken to its exact steady state: in
the noiseless case the targeted collective mode relaxes to a squeezed
vacuum while the untouched collective modes are frozen, so the limit is
computed algebraically in the collective frame; with mechanical noise the
full drift is Hurwitz and the per-step steady state is a Lyapunov solve.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .gaussian import (
    GaussianState,
    SqueezingSpec,
    fidelity_from_covariances,
    physicality_deficit,
    thermal,
    vacuum,
)
from .graphs import GraphTarget, builtin_graph, mech_labels
from .model import (
    SystemParams,
    build_drift_diffusion,
    collective_step_system,
    drive_schedule,
    thermal_occupation,
)
from .numerics import propagate_lyapunov, solve_lyapunov, transition_kernel

INITIAL_STATE_POLICIES = ("vacuum", "thermal")

DEFAULT_T_LOWER = 4.0      # units of 1/kappa; per-step relaxation floor
DEFAULT_T_CAP = 1.0e4      # units of 1/kappa; noiseless fallback upper bound


@dataclass(frozen=True)
class ProtocolConfig:
    """How to run the switching sequence.

    t_switch: per-step duration in units of 1/kappa, or "steady" for the
    exact per-step steady state.  sample_dt (same units) controls the
    trajectory sampling interval and defaults to t_switch/50.
    initial_state selects the mechanical start: "vacuum" or "thermal"
    (at the bath occupations).
    """

    t_switch: float | str = "steady"
    sample_dt: float | None = None
    initial_state: str = "vacuum"
    include_mechanical_noise: bool = False

    def __post_init__(self):
        if isinstance(self.t_switch, str):
            if self.t_switch != "steady":
                raise ValueError(f"t_switch must be a positive number or 'steady', got {self.t_switch!r}")
        elif self.t_switch <= 0:
            raise ValueError(f"t_switch must be positive, got {self.t_switch}")
        if self.sample_dt is not None and self.sample_dt <= 0:
            raise ValueError(f"sample_dt must be positive, got {self.sample_dt}")
        if self.initial_state not in INITIAL_STATE_POLICIES:
            raise ValueError(
                f"initial_state must be one of {INITIAL_STATE_POLICIES}, got {self.initial_state!r}"
            )


@dataclass(frozen=True)
class Trajectory:
    """Sampled fidelity-versus-time record of one protocol run.

    times are in units of 1/kappa (step ordinals when t_switch="steady");
    step_boundaries holds the sample indices at which each step ended;
    min_physicality is the worst min-eig(V + i Sigma/2) over all sampled
    mechanical states.
    """

    times: np.ndarray
    fidelities: np.ndarray
    step_boundaries: tuple[int, ...]
    final_state: GaussianState
    min_physicality: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        fids = np.asarray(self.fidelities, dtype=float)
        if times.shape != fids.shape:
            raise ValueError("times and fidelities must have equal length")
        if np.any(np.diff(times) < 0):
            raise ValueError("times must be monotonically nondecreasing")
        if np.any(fids > 1.0 + 1e-9) or np.any(fids < -1e-9):
            raise ValueError("fidelity left [0, 1] beyond numerical tolerance")
        fids = np.clip(fids, 0.0, 1.0)
        times.setflags(write=False)
        fids.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "fidelities", fids)
        object.__setattr__(self, "step_boundaries", tuple(self.step_boundaries))

    def step_index_of_sample(self, i: int) -> int:
        """1-based index of the step that produced sample i (0 = initial state)."""
        for k, boundary in enumerate(self.step_boundaries):
            if i <= boundary:
                return 0 if i == 0 else k + 1
        return len(self.step_boundaries)


def _check_consistency(target: GraphTarget, params: SystemParams):
    if target.n_nodes != params.n_modes:
        raise ValueError(
            f"target has {target.n_nodes} nodes but params describe {params.n_modes} modes"
        )
    if abs(target.squeezing.r - params.r) > 1e-12:
        raise ValueError(
            f"drive ratio mismatch: target squeezing implies r = {target.squeezing.r}, "
            f"params carry r = {params.r}"
        )


def _initial_covariance(params: SystemParams, config: ProtocolConfig) -> np.ndarray:
    n = params.n_modes
    if config.initial_state == "thermal":
        mech = thermal(params.occupations).cov
    else:
        mech = vacuum(n).cov
    dim = 2 * (n + 1)
    cov = 0.5 * np.eye(dim)
    mech_rows = list(range(n)) + list(range(n + 1, 2 * n + 1))
    cov[np.ix_(mech_rows, mech_rows)] = mech
    return cov


def _mech_rows(n: int) -> list[int]:
    return list(range(n)) + list(range(n + 1, 2 * n + 1))


def _extended_frame(target: GraphTarget) -> np.ndarray:
    """Collective-mode change of frame on mech quadratures, identity on the cavity."""
    n = target.n_nodes
    x, y = target.unitary.real, target.unitary.imag
    m = n + 1
    frame = np.zeros((2 * m, 2 * m))
    frame[:n, :n] = x
    frame[:n, m : m + n] = -y
    frame[m : m + n, :n] = y
    frame[m : m + n, m : m + n] = x
    frame[n, n] = 1.0
    frame[2 * m - 1, 2 * m - 1] = 1.0
    return frame


def _mech_state(cov_full: np.ndarray, n: int) -> GaussianState:
    rows = _mech_rows(n)
    mech_cov = cov_full[np.ix_(rows, rows)]
    return GaussianState(mech_labels(n), np.zeros(2 * n), mech_cov)


class _Recorder:
    """Accumulates trajectory samples and validates every recorded state."""

    def __init__(self, target_cov: np.ndarray, n_mech: int):
        self.target_cov = target_cov
        self.n_mech = n_mech
        self.times: list[float] = []
        self.fidelities: list[float] = []
        self.min_physicality = math.inf

    def add(self, t: float, cov_full: np.ndarray):
        state = _mech_state(cov_full, self.n_mech)  # construction validates
        self.min_physicality = min(self.min_physicality, physicality_deficit(state.cov))
        self.times.append(float(t))
        # unclipped: the Trajectory constructor asserts the 1 + 1e-9 bound
        self.fidelities.append(
            fidelity_from_covariances(self.target_cov, state.cov, clip=False)
        )

    @property
    def last_index(self) -> int:
        return len(self.times) - 1


def run_switching(
    target: GraphTarget,
    params: SystemParams,
    config: ProtocolConfig,
) -> Trajectory:
    """Run the N-step switching protocol, sampling fidelity to the target."""
    _check_consistency(target, params)
    n = target.n_nodes
    schedule = drive_schedule(target.unitary, params)

    cov = _initial_covariance(params, config)
    rec = _Recorder(target.covariance, n)
    rec.add(0.0, cov)
    boundaries: list[int] = []

    if config.t_switch == "steady":
        cov = _run_steady(target, params, schedule, config, cov, rec, boundaries)
    else:
        cov = _run_timed(params, schedule, config, cov, rec, boundaries)

    return Trajectory(
        times=np.array(rec.times),
        fidelities=np.array(rec.fidelities),
        step_boundaries=tuple(boundaries),
        final_state=_mech_state(cov, n),
        min_physicality=rec.min_physicality,
    )


def _run_steady(target, params, schedule, config, cov, rec, boundaries):
    n = target.n_nodes
    if config.include_mechanical_noise and any(g > 0 for g in params.gamma):
        # Thermal contact makes the full drift Hurwitz: each step has a
        # unique steady state, found directly.
        for k, step in enumerate(schedule.steps):
            dd = build_drift_diffusion(step, params, include_mechanical_noise=True)
            cov = solve_lyapunov(dd.drift, dd.diffusion)
            rec.add(float(k + 1), cov)
            boundaries.append(rec.last_index)
        return cov

    # Noiseless: the step leaves untouched collective modes frozen and
    # erases their correlations with the driven pair, so the exact t->inf
    # limit is assembled in the collective frame from the 4x4 steady state.
    frame = _extended_frame(target)
    pair = collective_step_system(params.kappa, params.beta, params.r)
    pair_steady = solve_lyapunov(pair.drift, pair.diffusion)
    m = n + 1
    cov_coll = frame @ cov @ frame.T
    for k in range(n):
        rows = [k, n, m + k, 2 * m - 1]  # q_ck, q_cav, p_ck, p_cav
        others = [i for i in range(2 * m) if i not in rows]
        cov_coll[np.ix_(rows, others)] = 0.0
        cov_coll[np.ix_(others, rows)] = 0.0
        cov_coll[np.ix_(rows, rows)] = pair_steady
        rec.add(float(k + 1), frame.T @ cov_coll @ frame)
        boundaries.append(rec.last_index)
    return frame.T @ cov_coll @ frame


def _run_timed(params, schedule, config, cov, rec, boundaries):
    t_step = float(config.t_switch)
    dt = config.sample_dt if config.sample_dt is not None else t_step / 50.0
    dt = min(dt, t_step)
    n_full = int(math.floor(t_step / dt + 1e-9))
    remainder = t_step - n_full * dt
    if remainder < 1e-9 * t_step:
        remainder = 0.0

    t_now = 0.0
    for step in schedule.steps:
        dd = build_drift_diffusion(step, params, config.include_mechanical_noise)
        # times are in 1/kappa units; rates carry the physical unit
        prop, inhom = transition_kernel(dd.drift, dd.diffusion, dt / params.kappa)
        for _ in range(n_full):
            cov = prop @ cov @ prop.T + inhom
            cov = (cov + cov.T) / 2
            t_now += dt
            rec.add(t_now, cov)
        if remainder:
            cov = propagate_lyapunov(cov, dd.drift, dd.diffusion, remainder / params.kappa)
            t_now += remainder
            rec.add(t_now, cov)
        boundaries.append(rec.last_index)
    return cov


def final_mechanical_covariance(
    target: GraphTarget,
    params: SystemParams,
    t_switch: float,
    *,
    include_mechanical_noise: bool = False,
    initial_state: str = "vacuum",
) -> np.ndarray:
    """Mechanical covariance after all steps, without trajectory sampling."""
    _check_consistency(target, params)
    config = ProtocolConfig(
        t_switch=t_switch,
        initial_state=initial_state,
        include_mechanical_noise=include_mechanical_noise,
    )
    n = target.n_nodes
    cov = _initial_covariance(params, config)
    schedule = drive_schedule(target.unitary, params)
    for step in schedule.steps:
        dd = build_drift_diffusion(step, params, include_mechanical_noise)
        cov = propagate_lyapunov(cov, dd.drift, dd.diffusion, t_switch / params.kappa)
    rows = _mech_rows(n)
    return cov[np.ix_(rows, rows)]


def final_fidelity(
    target: GraphTarget,
    params: SystemParams,
    t_switch: float,
    *,
    include_mechanical_noise: bool = False,
    initial_state: str = "vacuum",
) -> float:
    """Fidelity of the post-protocol mechanical state against the target."""
    cov = final_mechanical_covariance(
        target,
        params,
        t_switch,
        include_mechanical_noise=include_mechanical_noise,
        initial_state=initial_state,
    )
    # state construction enforces symmetry and physicality of the endpoint
    GaussianState(mech_labels(target.n_nodes), np.zeros(2 * target.n_nodes), cov)
    return fidelity_from_covariances(target.covariance, cov)


def final_fidelity_vs_switchtime(
    target: GraphTarget,
    params: SystemParams,
    t_grid,
    *,
    include_mechanical_noise: bool = False,
    initial_state: str = "vacuum",
) -> np.ndarray:
    """Final fidelity for each per-step duration in `t_grid` (units of 1/kappa)."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("switch-time grid must be a nonempty 1-d sequence")
    if np.any(t_grid <= 0) or np.any(np.diff(t_grid) <= 0):
        raise ValueError("switch-time grid must be positive and strictly ascending")
    return np.array(
        [
            final_fidelity(
                target,
                params,
                float(t),
                include_mechanical_noise=include_mechanical_noise,
                initial_state=initial_state,
            )
            for t in t_grid
        ]
    )


@dataclass(frozen=True)
class OptimizeResult:
    t_opt: float          # units of 1/kappa
    fidelity: float
    n_evaluations: int


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def default_time_bounds(params: SystemParams, n_steps: int) -> tuple[float, float]:
    """Default search bracket for the per-step evolution time (1/kappa units).

    Lower bound: the per-step relaxation floor 4/kappa.  Upper bound: the
    thermal-decoherence horizon min_j N * ln(1 + 1/nbar_j) * kappa/gamma_j
    when finite, capped at 1e4/kappa; plain 1e4/kappa when noiseless.
    """
    lo = DEFAULT_T_LOWER
    hi = DEFAULT_T_CAP
    for gam, occ in zip(params.gamma, params.occupations):
        if gam > 0 and occ > 0:
            horizon = n_steps * math.log1p(1.0 / occ) * params.kappa / gam
            hi = min(hi, horizon)
    hi = min(max(hi, 1.5 * lo), DEFAULT_T_CAP)
    return lo, hi


def optimize_evolution_time(
    target: GraphTarget,
    params: SystemParams,
    bounds: tuple[float, float] | None = None,
    *,
    include_mechanical_noise: bool = True,
    initial_state: str = "thermal",
    coarse_points: int = 32,
    rel_width: float = 1e-3,
) -> OptimizeResult:
    """Maximise the final fidelity over the per-step duration.

    Deterministic: a coarse logarithmic grid brackets the optimum, then a
    golden-section refinement shrinks the bracket to the requested relative
    width.  Returns the best evaluated point.
    """
    _check_consistency(target, params)
    if bounds is None:
        lo, hi = default_time_bounds(params, target.n_nodes)
    else:
        lo, hi = float(bounds[0]), float(bounds[1])
        if lo <= 0 or hi < lo:
            raise ValueError(f"invalid time bounds ({lo}, {hi})")

    evaluations = 0

    def objective(t: float) -> float:
        nonlocal evaluations
        evaluations += 1
        return final_fidelity(
            target,
            params,
            t,
            include_mechanical_noise=include_mechanical_noise,
            initial_state=initial_state,
        )

    if hi == lo:
        return OptimizeResult(t_opt=lo, fidelity=objective(lo), n_evaluations=evaluations)

    grid = np.geomspace(lo, hi, coarse_points)
    values = [objective(t) for t in grid]
    best = int(np.argmax(values))
    best_t, best_f = float(grid[best]), values[best]

    a = float(grid[max(best - 1, 0)])
    b = float(grid[min(best + 1, coarse_points - 1)])
    # Golden-section refinement (maximisation) on [a, b].
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = objective(c), objective(d)
    while (b - a) > rel_width * b:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = objective(d)
    for t, f in ((c, fc), (d, fd)):
        if f > best_f:
            best_t, best_f = float(t), float(f)
    return OptimizeResult(t_opt=best_t, fidelity=best_f, n_evaluations=evaluations)


@dataclass(frozen=True)
class NoiseSweepResult:
    gamma_over_kappa: np.ndarray
    temperatures_mK: np.ndarray
    fidelity: np.ndarray   # shape (len(gamma), len(T))
    t_opt: np.ndarray      # same shape, units of 1/kappa


def noise_sweep(
    target: GraphTarget,
    params: SystemParams,
    gamma_over_kappa,
    temperatures_mK,
    *,
    threads: int = 1,
    bounds: tuple[float, float] | None = None,
) -> NoiseSweepResult:
    """Optimised fidelity over a (damping, bath temperature) grid.

    Each grid point sets every resonator's damping to ratio*kappa and its
    occupation from the Planck law at the given temperature, then searches
    the optimal evolution time.  Points are independent; `threads` > 1
    evaluates them concurrently with a deterministic assembly order.
    """
    _check_consistency(target, params)
    gammas = np.asarray(gamma_over_kappa, dtype=float)
    temps = np.asarray(temperatures_mK, dtype=float)
    if np.any(gammas < 0) or np.any(temps < 0):
        raise ValueError("grid values must be nonnegative")

    points = [(i, j) for i in range(gammas.size) for j in range(temps.size)]

    def solve(point):
        i, j = point
        occ = tuple(
            thermal_occupation(w, temps[j] * 1e-3) if temps[j] > 0 else 0.0
            for w in params.omega
        )
        local = replace(
            params,
            gamma=(float(gammas[i] * params.kappa),) * params.n_modes,
            occupations=occ,
        )
        noisy = gammas[i] > 0
        result = optimize_evolution_time(
            target,
            local,
            bounds,
            include_mechanical_noise=noisy,
            initial_state="thermal" if noisy else "vacuum",
        )
        return result.fidelity, result.t_opt

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            solved = list(pool.map(solve, points))
    else:
        solved = [solve(p) for p in points]

    fid = np.empty((gammas.size, temps.size))
    topt = np.empty_like(fid)
    for (i, j), (f, t) in zip(points, solved):
        fid[i, j] = f
        topt[i, j] = t
    return NoiseSweepResult(
        gamma_over_kappa=gammas, temperatures_mK=temps, fidelity=fid, t_opt=topt
    )


@dataclass(frozen=True)
class SqueezingSweepResult:
    n_nodes: tuple[int, ...]
    db_grid: np.ndarray
    fidelity: np.ndarray   # shape (len(n_nodes), len(db_grid))
    t_opt: np.ndarray


def squeezing_sweep(
    n_nodes_list,
    db_grid,
    params_factory,
    *,
    threads: int = 1,
    bounds: tuple[float, float] | None = None,
) -> SqueezingSweepResult:
    """Optimised fidelity of linear graph states versus target squeezing.

    `params_factory(n, squeezing)` must return the SystemParams for an
    n-node run at that squeezing (this fixes kappa, frequencies, damping
    and bath occupations).
    """
    n_list = tuple(int(n) for n in n_nodes_list)
    dbs = np.asarray(db_grid, dtype=float)
    if not n_list or dbs.size == 0:
        raise ValueError("node list and dB grid must be nonempty")

    points = [(i, j) for i in range(len(n_list)) for j in range(dbs.size)]

    def solve(point):
        i, j = point
        squeezing = SqueezingSpec.from_db(float(dbs[j]))
        target = GraphTarget.build(builtin_graph("linear", n_list[i]), squeezing)
        params = params_factory(n_list[i], squeezing)
        noisy = any(g > 0 for g in params.gamma)
        result = optimize_evolution_time(
            target,
            params,
            bounds,
            include_mechanical_noise=noisy,
            initial_state="thermal" if noisy else "vacuum",
        )
        return result.fidelity, result.t_opt

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            solved = list(pool.map(solve, points))
    else:
        solved = [solve(p) for p in points]

    fid = np.empty((len(n_list), dbs.size))
    topt = np.empty_like(fid)
    for (i, j), (f, t) in zip(points, solved):
        fid[i, j] = f
        topt[i, j] = t
    return SqueezingSweepResult(n_nodes=n_list, db_grid=dbs, fidelity=fid, t_opt=topt)
