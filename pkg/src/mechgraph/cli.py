"""Command-line interface: config ingestion, workflows, CSV/JSON/figure export.

Subcommands: target | drives | simulate | sweep | analyze.  Every run
writes its results as CSV (17-significant-digit numbers, frozen headers)
plus a JSON manifest holding the fully resolved configuration and derived
quantities; simulate and sweep additionally render figures unless
--no-figures is given.  Exit codes: 0 success, 1 runtime or validation
failure, 2 malformed input.

Config files are JSON.  Frequencies and rates (kappa, omegas, gammas,
beta, g) are given in Hz and multiplied by 2*pi internally; temperatures
are in mK; protocol times are in units of 1/kappa.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .gaussian import SqueezingSpec, physicality_deficit, purity
from .graphs import GraphTarget, builtin_graph, load_adjacency
from .model import (
    SystemParams,
    beta_optimal,
    drive_schedule,
    step_drift_spectrum,
    step_hurwitz_report,
    thermal_occupation,
    validate_regime,
)
from .protocol import (
    ProtocolConfig,
    final_fidelity_vs_switchtime,
    noise_sweep,
    run_switching,
    squeezing_sweep,
)

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """Malformed input file or missing/ill-typed configuration keys."""


# ---------------------------------------------------------------------------
# config parsing

def _load_config(path: Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    return config


def _require(config: dict, key: str, where: str = "config"):
    if key not in config:
        raise ConfigError(f"{where} is missing required key {key!r}")
    return config[key]


def _parse_squeezing(config: dict) -> SqueezingSpec:
    spec = _require(config, "squeezing")
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError('squeezing must be an object with exactly one of "db", "r", "xi"')
    key, value = next(iter(spec.items()))
    if key not in ("db", "r", "xi"):
        raise ConfigError(f"unknown squeezing key {key!r}")
    value = float(value)
    if key == "db":
        return SqueezingSpec.from_db(value)
    if key == "xi":
        return SqueezingSpec.from_xi(value)
    return SqueezingSpec.from_r(value)


def _parse_graph(config: dict) -> np.ndarray:
    graph = _require(config, "graph")
    if not isinstance(graph, dict):
        raise ConfigError("graph must be an object")
    if "file" in graph:
        try:
            return load_adjacency(graph["file"])
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
    name = _require(graph, "name", "graph")
    n_nodes = int(_require(graph, "n_nodes", "graph"))
    try:
        return builtin_graph(name, n_nodes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _per_mode(values, n: int, key: str) -> tuple[float, ...]:
    if isinstance(values, (int, float)):
        return (float(values),) * n
    out = tuple(float(v) for v in values)
    if len(out) != n:
        raise ConfigError(f"{key} must have {n} entries, got {len(out)}")
    return out


def _parse_params(config: dict, n_modes: int, squeezing: SqueezingSpec) -> SystemParams:
    raw = config.get("params", {})
    if not isinstance(raw, dict):
        raise ConfigError("params must be an object")
    kappa = TWO_PI * float(raw.get("kappa", 1.0 / TWO_PI))
    if "omegas" in raw:
        omega = tuple(TWO_PI * v for v in _per_mode(raw["omegas"], n_modes, "omegas"))
    else:
        omega = tuple(TWO_PI * 1.0e6 * (j + 1) for j in range(n_modes))
    gamma = tuple(TWO_PI * v for v in _per_mode(raw.get("gammas", 0.0), n_modes, "gammas"))
    if "temperatures_mK" in raw and "occupations" in raw:
        raise ConfigError("give either temperatures_mK or occupations, not both")
    if "occupations" in raw:
        occupations = _per_mode(raw["occupations"], n_modes, "occupations")
    elif "temperatures_mK" in raw:
        temps = _per_mode(raw["temperatures_mK"], n_modes, "temperatures_mK")
        occupations = tuple(
            thermal_occupation(w, t * 1e-3) if t > 0 else 0.0
            for w, t in zip(omega, temps)
        )
    else:
        occupations = (0.0,) * n_modes
    beta = raw.get("beta", "optimal")
    if beta == "optimal":
        beta_value = beta_optimal(kappa, squeezing.r)
    else:
        beta_value = TWO_PI * float(beta)
    g = _per_mode(raw["g"], n_modes, "g") if "g" in raw else (1.0,) * n_modes
    return SystemParams(
        kappa=kappa,
        omega=omega,
        gamma=gamma,
        occupations=occupations,
        beta=beta_value,
        r=squeezing.r,
        g=g,
    )


def _parse_protocol(config: dict) -> ProtocolConfig:
    raw = config.get("protocol", {})
    if not isinstance(raw, dict):
        raise ConfigError("protocol must be an object")
    t_switch = raw.get("t_switch", "steady")
    if isinstance(t_switch, str) and t_switch != "steady":
        raise ConfigError(f't_switch must be a number or "steady", got {t_switch!r}')
    noise = bool(raw.get("include_mechanical_noise", False))
    initial = raw.get("initial_state", "thermal" if noise else "vacuum")
    return ProtocolConfig(
        t_switch=t_switch if t_switch == "steady" else float(t_switch),
        sample_dt=float(raw["sample_dt"]) if "sample_dt" in raw else None,
        initial_state=initial,
        include_mechanical_noise=noise,
    )


# ---------------------------------------------------------------------------
# output helpers

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def _write_csv(path: Path, header: list[str], rows) -> Path:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_ready(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _write_manifest(outdir: Path, command: str, config: dict, derived: dict, outputs: list[str], args) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "config": _json_ready(config),
        "derived": _json_ready(derived),
        "outputs": outputs,
        "flags": {
            "strict": args.strict,
            "threads": args.threads,
            "seed": args.seed,  # reserved; the dynamics is deterministic
            "figures": not args.no_figures,
        },
    }
    path = outdir / f"{command}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _regime_payload(report) -> dict:
    return {
        "passed": report.passed,
        "checks": [
            {
                "name": c.name,
                "ratio": c.ratio,
                "threshold": c.threshold,
                "passed": c.passed,
                "detail": c.detail,
            }
            for c in report.checks
        ],
    }


def _check_strict(report, strict: bool):
    for line in report.summary_lines():
        print(line)
    if strict and not report.passed:
        raise RuntimeError("regime check failed (--strict): see report above")


# ---------------------------------------------------------------------------
# subcommands

def cmd_target(config: dict, outdir: Path, args):
    squeezing = _parse_squeezing(config)
    adjacency = _parse_graph(config)
    target = GraphTarget.build(adjacency, squeezing)
    n = target.n_nodes

    outputs = []
    outputs.append(_write_csv(
        outdir / "adjacency.csv",
        ["row", "col", "weight"],
        [(i, j, adjacency[i, j]) for i in range(n) for j in range(n)],
    ))
    outputs.append(_write_csv(
        outdir / "unitary.csv",
        ["row", "col", "magnitude", "phase"],
        [
            (i, j, abs(target.unitary[i, j]), float(np.angle(target.unitary[i, j]) % TWO_PI))
            for i in range(n)
            for j in range(n)
        ],
    ))
    outputs.append(_write_csv(
        outdir / "target_covariance.csv",
        ["row", "col", "value"],
        [(i, j, target.covariance[i, j]) for i in range(2 * n) for j in range(2 * n)],
    ))
    spectrum = target.nullifier_spectrum()
    outputs.append(_write_csv(
        outdir / "nullifier_spectrum.csv",
        ["index", "variance"],
        list(enumerate(spectrum)),
    ))
    state = target.state()
    summary = {
        "n_nodes": n,
        "squeezing": {"r": squeezing.r, "xi": squeezing.xi, "db": squeezing.db},
        "purity": purity(state),
        "physicality_deficit": physicality_deficit(target.covariance),
        "max_nullifier_variance": float(spectrum.max()),
    }
    path = outdir / "target_summary.json"
    path.write_text(json.dumps(_json_ready(summary), indent=2, sort_keys=True) + "\n")
    outputs.append(path)
    print(f"target: {n}-node graph at {squeezing.db:g} dB, purity {summary['purity']:.12f}")
    return [p.name for p in outputs], {"summary": summary}


def cmd_drives(config: dict, outdir: Path, args):
    squeezing = _parse_squeezing(config)
    adjacency = _parse_graph(config)
    target = GraphTarget.build(adjacency, squeezing)
    n = target.n_nodes
    # beta = g = kappa = 1: amplitudes come out in units of beta/g
    params = SystemParams(
        kappa=1.0,
        omega=tuple(TWO_PI * 1.0e6 * (j + 1) for j in range(n)),
        gamma=(0.0,) * n,
        occupations=(0.0,) * n,
        beta=1.0,
        r=squeezing.r,
        g=(1.0,) * n,
    )
    schedule = drive_schedule(target.unitary, params)
    rows = []
    for k, step in enumerate(schedule.steps, start=1):
        for j in range(n):
            rows.append(
                (k, j + 1, step.alpha_minus[j], step.alpha_plus[j],
                 step.phi_minus[j], step.phi_plus[j])
            )
    path = _write_csv(
        outdir / "schedule.csv",
        ["step", "j", "alpha_minus", "alpha_plus", "phi_minus", "phi_plus"],
        rows,
    )
    print(f"drives: {n}-step schedule written (amplitudes in units of beta/g)")
    return [path.name], {"amplitude_unit": "beta/g", "phase_unit": "rad"}


def cmd_simulate(config: dict, outdir: Path, args):
    squeezing = _parse_squeezing(config)
    adjacency = _parse_graph(config)
    target = GraphTarget.build(adjacency, squeezing)
    params = _parse_params(config, target.n_nodes, squeezing)
    protocol = _parse_protocol(config)
    epsilon = float(config.get("params", {}).get("epsilon_regime", 0.1))

    schedule = drive_schedule(target.unitary, params)
    report = validate_regime(params, schedule, epsilon=epsilon)
    _check_strict(report, args.strict)

    traj = run_switching(target, params, protocol)
    steady = protocol.t_switch == "steady"
    rows = []
    for i, (t, f) in enumerate(zip(traj.times, traj.fidelities)):
        seconds = t if steady else t / params.kappa
        rows.append((seconds, t, traj.step_index_of_sample(i), f))
    path = _write_csv(
        outdir / "trajectory.csv",
        ["time", "kappa_units", "step_index", "fidelity"],
        rows,
    )
    outputs = [path.name]
    if not args.no_figures:
        from . import plotting

        fig = plotting.trajectory_figure(traj, outdir / "trajectory.png", steady=steady)
        outputs.append(fig.name)
    derived = {
        "beta": params.beta,
        "beta_over_kappa": params.beta / params.kappa,
        "occupations": params.occupations,
        "regime": _regime_payload(report),
        "final_fidelity": float(traj.fidelities[-1]),
        "min_physicality": traj.min_physicality,
        "time_unit": "step ordinal (t_switch='steady')" if steady else "s",
    }
    print(f"simulate: final fidelity {traj.fidelities[-1]:.9f}")
    return outputs, derived


def cmd_sweep(config: dict, outdir: Path, args):
    sweep = _require(config, "sweep")
    if not isinstance(sweep, dict):
        raise ConfigError("sweep must be an object")
    kind = _require(sweep, "kind", "sweep")
    if kind == "noise":
        return _sweep_noise(config, sweep, outdir, args)
    if kind == "squeezing":
        return _sweep_squeezing(config, sweep, outdir, args)
    if kind == "switch_time":
        return _sweep_switch_time(config, sweep, outdir, args)
    raise ConfigError(f"unknown sweep kind {kind!r}; expected noise, squeezing or switch_time")


def _sweep_noise(config, sweep, outdir, args):
    squeezing = _parse_squeezing(config)
    adjacency = _parse_graph(config)
    target = GraphTarget.build(adjacency, squeezing)
    params = _parse_params(config, target.n_nodes, squeezing)
    gammas = [float(v) for v in _require(sweep, "gamma_over_kappa", "sweep")]
    temps = [float(v) for v in _require(sweep, "temperatures_mK", "sweep")]
    result = noise_sweep(target, params, gammas, temps, threads=args.threads)
    rows = [
        (result.gamma_over_kappa[i], result.temperatures_mK[j],
         result.fidelity[i, j], result.t_opt[i, j])
        for i in range(len(gammas))
        for j in range(len(temps))
    ]
    path = _write_csv(outdir / "sweep.csv", ["gamma", "T_mK", "fidelity", "t_opt"], rows)
    outputs = [path.name]
    if not args.no_figures:
        from . import plotting

        fig = plotting.noise_sweep_figure(result, outdir / "sweep.png")
        outputs.append(fig.name)
    derived = {
        "kind": "noise",
        "beta_over_kappa": params.beta / params.kappa,
        "fidelity_range": [float(result.fidelity.min()), float(result.fidelity.max())],
        "t_opt_unit": "1/kappa",
        "gamma_unit": "gamma/kappa",
    }
    print(f"sweep(noise): fidelity in [{result.fidelity.min():.6f}, {result.fidelity.max():.6f}]")
    return outputs, derived


def _sweep_squeezing(config, sweep, outdir, args):
    n_nodes = [int(v) for v in _require(sweep, "n_nodes", "sweep")]
    db_grid = [float(v) for v in _require(sweep, "db_grid", "sweep")]
    raw = config.get("params", {})
    kappa_hz = float(raw.get("kappa", 0.2e6))
    omega_base_hz = float(sweep.get("omega_base_hz", 1.1e7))
    gammas_raw = raw.get("gammas", 32.0)
    if isinstance(gammas_raw, list):
        raise ConfigError("squeezing sweep expects a scalar gammas entry")
    gamma_hz = float(gammas_raw)
    temp_mk = float(sweep.get("temperature_mK", 15.0))

    def params_factory(n, squeezing):
        omega = tuple(TWO_PI * omega_base_hz * (j + 1) for j in range(n))
        return SystemParams(
            kappa=TWO_PI * kappa_hz,
            omega=omega,
            gamma=(TWO_PI * gamma_hz,) * n,
            occupations=tuple(thermal_occupation(w, temp_mk * 1e-3) for w in omega),
            beta=beta_optimal(TWO_PI * kappa_hz, squeezing.r),
            r=squeezing.r,
            g=(1.0,) * n,
        )

    result = squeezing_sweep(n_nodes, db_grid, params_factory, threads=args.threads)
    rows = [
        (result.n_nodes[i], result.db_grid[j], result.fidelity[i, j], result.t_opt[i, j])
        for i in range(len(n_nodes))
        for j in range(len(db_grid))
    ]
    path = _write_csv(outdir / "sweep.csv", ["n_nodes", "dB", "fidelity", "t_opt"], rows)
    outputs = [path.name]
    if not args.no_figures:
        from . import plotting

        fig = plotting.squeezing_sweep_figure(result, outdir / "sweep.png")
        outputs.append(fig.name)
    derived = {
        "kind": "squeezing",
        "kappa_hz": kappa_hz,
        "omega_base_hz": omega_base_hz,
        "gamma_hz": gamma_hz,
        "temperature_mK": temp_mk,
        "t_opt_unit": "1/kappa",
    }
    print(f"sweep(squeezing): {len(n_nodes)} curves over {len(db_grid)} dB points")
    return outputs, derived


def _sweep_switch_time(config, sweep, outdir, args):
    squeezing = _parse_squeezing(config)
    adjacency = _parse_graph(config)
    target = GraphTarget.build(adjacency, squeezing)
    params = _parse_params(config, target.n_nodes, squeezing)
    protocol = _parse_protocol(config)
    t_grid = [float(v) for v in _require(sweep, "t_grid", "sweep")]
    fids = final_fidelity_vs_switchtime(
        target,
        params,
        t_grid,
        include_mechanical_noise=protocol.include_mechanical_noise,
        initial_state=protocol.initial_state,
    )
    path = _write_csv(outdir / "sweep.csv", ["t_s", "fidelity"], list(zip(t_grid, fids)))
    outputs = [path.name]
    if not args.no_figures:
        from . import plotting

        fig = plotting.switchtime_figure(t_grid, fids, outdir / "sweep.png")
        outputs.append(fig.name)
    derived = {"kind": "switch_time", "t_s_unit": "1/kappa", "final_fidelities": list(fids)}
    print(f"sweep(switch_time): fidelity {fids[0]:.6f} -> {fids[-1]:.6f}")
    return outputs, derived


def cmd_analyze(config: dict, outdir: Path, args):
    squeezing = _parse_squeezing(config)
    adjacency = _parse_graph(config)
    target = GraphTarget.build(adjacency, squeezing)
    params = _parse_params(config, target.n_nodes, squeezing)
    epsilon = float(config.get("params", {}).get("epsilon_regime", 0.1))
    schedule = drive_schedule(target.unitary, params)

    spectrum = step_drift_spectrum(params)
    lines = [
        f"beta/kappa = {params.beta / params.kappa:.9g} "
        f"(critically coupled: {spectrum.critically_coupled})",
        f"lambda_plus  = {spectrum.lambda_plus / params.kappa:.9g} kappa",
        f"lambda_minus = {spectrum.lambda_minus / params.kappa:.9g} kappa",
        f"tau = {spectrum.tau * params.kappa:.9g} / kappa   (tau_min = 4/kappa)",
    ]
    steps_payload = []
    for k, step in enumerate(schedule.steps, start=1):
        ev, n_zero, hurwitz = step_hurwitz_report(step, params)
        verdict = "Hurwitz" if hurwitz else f"not Hurwitz, {n_zero} zero eigenvalues"
        lines.append(f"step {k}: {verdict}")
        steps_payload.append({
            "step": k,
            "hurwitz": hurwitz,
            "zero_eigenvalues": n_zero,
            "eigenvalues_over_kappa": [
                {"re": z.real / params.kappa, "im": z.imag / params.kappa} for z in ev
            ],
        })
    report = validate_regime(params, schedule, epsilon=epsilon)
    for line in lines:
        print(line)
    _check_strict(report, args.strict)

    payload = {
        "beta_over_kappa": params.beta / params.kappa,
        "critically_coupled": spectrum.critically_coupled,
        "lambda_plus_over_kappa": {"re": spectrum.lambda_plus.real / params.kappa,
                                   "im": spectrum.lambda_plus.imag / params.kappa},
        "lambda_minus_over_kappa": {"re": spectrum.lambda_minus.real / params.kappa,
                                    "im": spectrum.lambda_minus.imag / params.kappa},
        "tau_kappa_units": spectrum.tau * params.kappa,
        "tau_min_kappa_units": 4.0,
        "steps": steps_payload,
        "regime": _regime_payload(report),
        "occupations": params.occupations,
    }
    path = outdir / "analyze.json"
    path.write_text(json.dumps(_json_ready(payload), indent=2, sort_keys=True) + "\n")
    return [path.name], payload


# ---------------------------------------------------------------------------
# entry point

_COMMANDS = {
    "target": cmd_target,
    "drives": cmd_drives,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True, help="JSON config file")
    common.add_argument("--out", type=Path, default=Path("mechgraph_out"),
                        help="output directory (created if needed)")
    common.add_argument("--strict", action="store_true",
                        help="fail (exit 1) when a regime check does not pass")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for sweep grids")
    common.add_argument("--seed", type=int, default=None,
                        help="reserved; the dynamics is deterministic")
    common.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering")

    parser = argparse.ArgumentParser(
        prog="mechgraph",
        description="Dissipative preparation of mechanical graph states: "
                    "drive tables, covariance dynamics, and noise sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("target", parents=[common], help="emit the target state artefacts")
    sub.add_parser("drives", parents=[common], help="emit the switching drive schedule")
    sub.add_parser("simulate", parents=[common], help="run the protocol, emit the fidelity trajectory")
    sub.add_parser("sweep", parents=[common], help="noise / squeezing / switch-time sweeps")
    sub.add_parser("analyze", parents=[common], help="relaxation spectrum and regime report")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        outputs, derived = _COMMANDS[args.command](config, outdir, args)
        manifest = _write_manifest(outdir, args.command, config, derived, outputs, args)
        print(f"wrote {', '.join(outputs)} + {manifest.name} in {outdir}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
