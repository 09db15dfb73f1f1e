"""Command-line front end.

Subcommands: ``simulate`` (one trajectory to CSV), ``ensemble`` (mean
observables to CSV plus a JSON summary), ``analyze`` (statistics of a
stored or freshly run trajectory to JSON), ``validate`` (invariant suite).
Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 validation failure.  Failures also emit a machine-readable JSON error
record on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .algebra import build_spin_system, eigenstate_projector
from .analysis import VicinitySpec, summarize
from .config import (
    ConfigError,
    RunConfig,
    parse_config,
    preset_text,
    render_config,
    resolve_initial_state,
)
from .engine import (
    NumericalError,
    euler_maruyama_step,
    kraus_step,
    lindblad_integrate,
    qsd_matrix_step,
    run_ensemble,
    run_trajectory,
)
from .models import hamiltonian, make_ito_system, measurement_operator
from .noise import wiener_path
from .storage import (
    read_trajectory,
    summary_payload,
    write_ensemble,
    write_summary,
    write_trajectory,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VALIDATION = 3


def _error_record(kind, message, **fields):
    record = {"error": {"type": kind, "message": str(message), **fields}}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="qsdspin",
        description="Stochastic trajectories of continuously measured spins.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", metavar="PATH",
                       required=needs_config,
                       help="config file path, or a preset name "
                            "(fig2 .. fig9)")
        p.add_argument("--set", metavar="KEY=VALUE", action="append",
                       default=[], dest="overrides",
                       help="override a config key (repeatable)")
        p.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (default: from config)")
        p.add_argument("--seed", metavar="N", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--threads", metavar="N", type=int, default=0,
                       help="worker threads for ensembles (0 = auto)")

    common(sub.add_parser("simulate", help="run one trajectory, write CSV"))
    common(sub.add_parser("ensemble",
                          help="run an ensemble, write mean-observable CSV "
                               "and JSON summary"))
    analyze = sub.add_parser("analyze",
                             help="compute statistics from a stored "
                                  "trajectory CSV (or run a config first)")
    common(analyze, needs_config=False)
    analyze.add_argument("--input", metavar="CSV", default=None,
                         help="stored trajectory to analyze (otherwise the "
                              "config is simulated in memory)")
    validate = sub.add_parser("validate",
                              help="run the invariant suite and report "
                                   "pass/fail per check")
    validate.add_argument("--threads", metavar="N", type=int, default=0)
    return parser


def _load_config(args):
    text = None
    if args.config is not None:
        if os.path.exists(args.config):
            with open(args.config) as fh:
                text = fh.read()
        else:
            text = preset_text(args.config)
    elif args.overrides:
        text = ""
    else:
        raise ConfigError("no configuration given; pass --config or --set")
    config = parse_config(text, overrides=args.overrides)
    if args.seed is not None:
        config = config.with_overrides(seed=args.seed)
    if args.out is not None:
        config = config.with_overrides(out=args.out)
    return config


def _materialize_initial(config, n_traj):
    mode, value = resolve_initial_state(config)
    if mode == "fixed":
        return value, None
    return value(0), [value(i) for i in range(n_traj)]


def _out_path(config, name):
    os.makedirs(config.out, exist_ok=True)
    return os.path.join(config.out, name)


def _cmd_simulate(args):
    config = _load_config(args)
    initial, _ = _materialize_initial(config, 1)
    record = run_trajectory(config.model_kind, config.to_model_params(),
                            initial, config.stride, record_states=True)
    path = _out_path(config, "trajectory.csv")
    write_trajectory(path, record, config)
    print(path)
    return EXIT_OK


def _cmd_ensemble(args):
    config = _load_config(args)
    initial, per_traj = _materialize_initial(config, config.n_traj)
    result = run_ensemble(config.model_kind, config.to_model_params(),
                          initial, config.n_traj, config.stride,
                          threads=args.threads, initial_states=per_traj)
    csv_path = _out_path(config, "ensemble.csv")
    write_ensemble(csv_path, result, config)
    payload = {
        "version": __version__,
        "config": render_config(config),
        "n_trajectories": result.n_trajectories,
        "final_time": float(result.times[-1]),
        "final_mean": {
            "sx": float(result.mean_sx[-1]),
            "sy": float(result.mean_sy[-1]),
            "sz": float(result.mean_sz[-1]),
            "purity": float(result.mean_purity[-1]),
        },
        "final_sem": {
            "sx": float(result.sem_sx[-1]),
            "sy": float(result.sem_sy[-1]),
            "sz": float(result.sem_sz[-1]),
            "purity": float(result.sem_purity[-1]),
        },
    }
    json_path = _out_path(config, "ensemble.json")
    write_summary(json_path, payload)
    print(csv_path)
    print(json_path)
    return EXIT_OK


def _cmd_analyze(args):
    if args.input is not None:
        record = read_trajectory(args.input)
        config = _reconstruct_config_for(record, args)
    elif args.config is not None or args.overrides:
        config = _load_config(args)
        initial, _ = _materialize_initial(config, 1)
        record = run_trajectory(config.model_kind, config.to_model_params(),
                                initial, config.stride, record_states=True)
    else:
        raise ConfigError("analyze needs --input or --config")
    spec = VicinitySpec.for_spin(record.spin)
    summary = summarize(record, spec)
    payload = summary_payload(summary, config)
    path = _out_path(config, "summary.json")
    write_summary(path, payload)
    print(path)
    return EXIT_OK


def _reconstruct_config_for(record, args):
    config = RunConfig(
        spin=record.spin,
        model_kind=record.model_kind,
        alpha=record.params.alpha,
        epsilon=record.params.epsilon,
        dt=record.params.dt,
        duration=record.params.duration,
        seed=record.params.seed,
        stride=record.stride,
    )
    if args.out is not None:
        config = config.with_overrides(out=args.out)
    return config


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def _check_fixed_points():
    """With no drive, every measurement eigenprojector must be stationary
    under the matrix, Kraus, and coherence-vector steppers."""
    from .models import ModelParams
    worst = 0.0
    n_steps = 50
    dt = 1e-3
    for spin in (0.5, 1.0, 1.5):
        sys = build_spin_system(spin)
        h = hamiltonian(spin, 0.0)
        l_set = [measurement_operator(spin, 1.0)]
        params = ModelParams(alpha=1.0, epsilon=0.0, dt=dt, duration=n_steps * dt)
        system = make_ito_system(spin, "coherence", params)
        dws = wiener_path(0, 0, n_steps, 1, dt).increments[:, 0]
        for label_idx in range(sys.dim):
            rho0 = _projector_for(sys, label_idx)
            rho = rho0.copy()
            for k in range(n_steps):
                new = qsd_matrix_step(rho, h, l_set, dt, dws[k])
                worst = max(worst, float(np.abs(new - rho).max()))
                rho = new
            rho = rho0.copy()
            for k in range(n_steps):
                new, _branch = kraus_step(rho, h, l_set, dt, 0.5 + 0.25 * (k % 2))
                worst = max(worst, float(np.abs(new - rho).max()))
                rho = new
            x = system.initial_state(rho0)
            for k in range(n_steps):
                new_x = euler_maruyama_step(system, x, dt, dws[k])
                worst = max(worst, float(np.abs(new_x - x).max()))
                x = new_x
    return worst <= 1e-12, f"max per-step change {worst:.3e} (bound 1e-12)"


def _projector_for(sys, index):
    proj = np.zeros((sys.dim, sys.dim), dtype=complex)
    proj[index, index] = 1.0
    return proj


def _check_pathwise():
    """Matrix and coherence-vector steppers driven by shared noise must
    agree pathwise on the measured observable."""
    from .models import ModelParams
    params = ModelParams(alpha=1.0, epsilon=1.0, dt=1e-3, duration=2.0, seed=7)
    noise = wiener_path(params.seed, 0, params.n_steps, 1, params.dt)
    rho0 = eigenstate_projector(1.0, "-1")
    rec_m = run_trajectory("matrix", params, rho0, stride=1, noise=noise)
    rec_c = run_trajectory("coherence", params, rho0, stride=1, noise=noise)
    gap = float(np.abs(rec_m.sz - rec_c.sz).max())
    return gap <= 0.05, f"sup <Sz> gap {gap:.3e} (bound 0.05)"


def _check_oracle(threads):
    """A modest ensemble mean must track the deterministic mean-state
    integration."""
    from .models import ModelParams
    params = ModelParams(alpha=1.0, epsilon=1.0, dt=1e-3, duration=2.0, seed=11)
    rho0 = eigenstate_projector(0.5, "+1/2")
    ens = run_ensemble("coherence", params, rho0, 400, stride=10,
                       threads=threads)
    oracle = lindblad_integrate(rho0, hamiltonian(0.5, params.epsilon),
                                [measurement_operator(0.5, params.alpha)],
                                params.dt, params.duration, stride=10)
    gap = max(float(np.abs(ens.mean_sz - oracle.sz).max()),
              float(np.abs(ens.mean_sx - oracle.sx).max()))
    return gap <= 0.05, f"sup mean-observable gap {gap:.3e} (bound 0.05)"


def _cmd_validate(args):
    checks = [
        ("fixed-points", _check_fixed_points),
        ("pathwise-equivalence", _check_pathwise),
        ("lindblad-oracle", lambda: _check_oracle(args.threads)),
    ]
    all_ok = True
    failures = []
    for name, fn in checks:
        try:
            ok, detail = fn()
        except NumericalError as err:
            ok, detail = False, f"numerical failure: {err}"
        status = "PASS" if ok else "FAIL"
        print(f"{status} {name}: {detail}")
        if not ok:
            all_ok = False
            failures.append({"check": name, "detail": detail})
    if all_ok:
        return EXIT_OK
    _error_record("validation", "invariant suite failed", checks=failures)
    return EXIT_VALIDATION


_COMMANDS = {
    "simulate": _cmd_simulate,
    "ensemble": _cmd_ensemble,
    "analyze": _cmd_analyze,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; that code is reserved for
        # numerical failures here
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as err:
        _error_record("config", err, key=err.key, line=err.line)
        return EXIT_CONFIG
    except (OSError, ValueError) as err:
        _error_record("config", err)
        return EXIT_CONFIG
    except NumericalError as err:
        _error_record("numerical", err, step=err.step)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
