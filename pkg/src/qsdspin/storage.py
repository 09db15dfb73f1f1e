"""Deterministic on-disk formats for trajectories, ensembles, summaries.

Trajectory and ensemble files are plain CSV with a ``#``-prefixed header
embedding the fully resolved configuration and the code version, so every
artifact is self-describing and reruns are byte-identical.  Values carry 17
significant digits (enough to round-trip doubles).  Summaries are sorted
JSON documents.
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import __version__
from .algebra import COMPONENT_NAMES, canonical_model, density_to_coherence
from .analysis import AnalysisSummary
from .config import RunConfig, parse_config, render_config
from .engine import TrajectoryRecord
from .models import COMPONENT_STATE_NAMES

__all__ = [
    "state_column_names",
    "write_trajectory",
    "read_trajectory",
    "write_ensemble",
    "summary_payload",
    "write_summary",
]

_FMT = "%.17g"


def state_column_names(model_kind, spin):
    """CSV state columns for a model kind: the model's own parameters for
    vector models, the canonical coherence parameters (a lossless encoding
    of the density matrix) for matrix models."""
    if model_kind == "rabi-angle":
        return ("phi",)
    if model_kind == "components":
        return COMPONENT_STATE_NAMES[spin]
    return COMPONENT_NAMES[canonical_model(spin)]


def _header_lines(kind, config: RunConfig, extra=()):
    lines = [f"# qsdspin {kind}", f"# version = {__version__}"]
    lines += [f"# {line}" for line in render_config(config).splitlines()]
    lines += [f"# {line}" for line in extra]
    return lines


def _state_rows(record: TrajectoryRecord):
    """Per-record state parameters as a float matrix."""
    if record.states is None:
        raise ValueError("trajectory was recorded without states; rerun "
                         "with state recording to serialize it")
    if record.model_kind in ("matrix", "kraus"):
        model = canonical_model(record.spin)
        return np.stack([
            density_to_coherence(rho, model).values for rho in record.states
        ])
    if record.model_kind == "rabi-angle":
        return np.asarray(record.states, dtype=float).reshape(-1, 1)
    return np.asarray(record.states, dtype=float)


def write_trajectory(path, record: TrajectoryRecord, config: RunConfig):
    """Write one trajectory as CSV: t, state parameters, sx, sy, sz, purity."""
    names = state_column_names(record.model_kind, record.spin)
    states = _state_rows(record)
    if states.shape[1] != len(names):
        raise ValueError("state width does not match the model's parameters")
    table = np.column_stack([record.times, states, record.sx, record.sy,
                             record.sz, record.purity])
    header = _header_lines("trajectory", config,
                           extra=[f"stream_index = {record.stream_index}"])
    column_row = ",".join(("t",) + tuple(names) + ("sx", "sy", "sz", "purity"))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(header) + "\n")
        fh.write(column_row + "\n")
        np.savetxt(fh, table, fmt=_FMT, delimiter=",", newline="\n")


def read_trajectory(path) -> TrajectoryRecord:
    """Rebuild a TrajectoryRecord from a trajectory CSV.

    The dynamical metadata comes from the embedded config; the state
    columns are restored into ``states`` (canonical coherence parameters
    for matrix-model files).
    """
    meta_lines = []
    stream_index = 0
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                columns = line.strip().split(",")
                break
            body = line[1:].strip()
            if body.startswith("stream_index"):
                stream_index = int(body.split("=", 1)[1])
            elif "=" in body:
                meta_lines.append(body)
        else:
            raise ValueError(f"{path}: no column header found")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    config_text = "\n".join(line for line in meta_lines
                            if not line.startswith("version"))
    config = parse_config(config_text)
    params = config.to_model_params()
    n_state = len(columns) - 5
    if n_state < 1 or columns[0] != "t" or columns[-1] != "purity":
        raise ValueError(f"{path}: unexpected column layout {columns}")
    times = data[:, 0]
    states = data[:, 1:1 + n_state]
    return TrajectoryRecord(
        model_kind=config.model_kind,
        spin=config.spin,
        params=params,
        stream_index=stream_index,
        stride=config.stride,
        n_steps=params.n_steps,
        dt=params.dt,
        times=times,
        sx=data[:, -4],
        sy=data[:, -3],
        sz=data[:, -2],
        purity=data[:, -1],
        states=states,
        final_state=states[-1],
    )


def write_ensemble(path, result, config: RunConfig):
    """Write per-time ensemble means and standard errors as CSV."""
    table = np.column_stack([
        result.times,
        result.mean_sx, result.sem_sx,
        result.mean_sy, result.sem_sy,
        result.mean_sz, result.sem_sz,
        result.mean_purity, result.sem_purity,
    ])
    header = _header_lines("ensemble", config,
                           extra=[f"n_traj = {result.n_trajectories}"])
    columns = ("t,mean_sx,sem_sx,mean_sy,sem_sy,mean_sz,sem_sz,"
               "mean_purity,sem_purity")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(header) + "\n")
        fh.write(columns + "\n")
        np.savetxt(fh, table, fmt=_FMT, delimiter=",", newline="\n")


def _scrub(value):
    """JSON-compatible copy with NaN encoded as null."""
    if isinstance(value, dict):
        return {str(k): _scrub(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_scrub(v) for v in value]
    if isinstance(value, np.ndarray):
        return _scrub(value.tolist())
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return None if math.isnan(f) else f
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def summary_payload(summary: AnalysisSummary, config: RunConfig) -> dict:
    """JSON-compatible tree for an analysis summary."""
    payload = {
        "version": __version__,
        "config": render_config(config),
        "residence": {f"{m:g}": p for m, p in summary.residence.items()},
        "return_times": {
            f"{m:g}": {"mean": st.mean, "count": st.count,
                       "stderr": st.stderr}
            for m, st in summary.return_times.items()
        },
    }
    if summary.angle is not None:
        payload["angle_pdf"] = {
            "edges": summary.angle.edges,
            "density": summary.angle.density,
            "counts": summary.angle.counts,
            "reference": summary.angle.reference,
            "n_samples": summary.angle.n_samples,
        }
    if summary.occupancy is not None:
        payload["occupancy"] = {
            "counts": summary.occupancy.counts,
            "sy_edges": summary.occupancy.sy_edges,
            "sz_edges": summary.occupancy.sz_edges,
        }
    if summary.rabi_rate is not None:
        rate, err = summary.rabi_rate
        payload["mean_rabi_rate"] = {"rate": rate, "stderr": err}
    return _scrub(payload)


def write_summary(path, payload: dict):
    """Write a JSON document with sorted keys (diffable, deterministic)."""
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
