"""CSV/JSON serialization: self-describing headers and exact round trips."""

import json
import math

import numpy as np
import pytest

from qsdspin.algebra import (
    COMPONENT_NAMES,
    canonical_model,
    density_to_coherence,
)
from qsdspin.analysis import AnalysisSummary, ReturnTimeStats, summarize
from qsdspin.config import parse_config, resolve_initial_state
from qsdspin.engine import run_ensemble, run_trajectory
from qsdspin.models import COMPONENT_STATE_NAMES
from qsdspin.storage import (
    read_trajectory,
    state_column_names,
    summary_payload,
    write_ensemble,
    write_summary,
    write_trajectory,
)

CONFIG_TEXTS = {
    "rabi-angle": "spin = 1/2\nmodel = rabi-angle\nalpha = 1\nduration = 0.2\n",
    "coherence": "spin = 1\nmodel = coherence\nalpha = 1\nduration = 0.2\n",
    "components": "spin = 1\nmodel = components\nalpha = 1\nduration = 0.2\n",
    "matrix": "spin = 3/2\nmodel = matrix\nalpha = 1\nduration = 0.2\n",
    "kraus": "spin = 3/2\nmodel = kraus\nalpha = 1\nduration = 0.2\n",
}


def run_from_text(text, **kwargs):
    cfg = parse_config(text)
    _, state = resolve_initial_state(cfg)
    record = run_trajectory(cfg.model_kind, cfg.to_model_params(), state,
                            stride=cfg.stride, **kwargs)
    return cfg, record


def test_state_column_names_follow_the_model():
    assert state_column_names("rabi-angle", 0.5) == ("phi",)
    assert state_column_names("components", 1.0) == COMPONENT_STATE_NAMES[1.0]
    assert state_column_names("matrix", 0.5) == COMPONENT_NAMES["bloch3"]
    assert state_column_names("kraus", 1.5) == COMPONENT_NAMES["su15"]
    assert state_column_names("coherence", 1.0) == COMPONENT_NAMES["gm8"]


@pytest.mark.parametrize("kind", sorted(CONFIG_TEXTS))
def test_trajectory_round_trip_is_exact(kind, tmp_path):
    cfg, record = run_from_text(CONFIG_TEXTS[kind], record_states=True,
                                stream_index=2)
    path = tmp_path / "traj.csv"
    write_trajectory(path, record, cfg)
    back = read_trajectory(path)

    assert back.model_kind == kind
    assert back.spin == cfg.spin
    assert back.stride == cfg.stride
    assert back.stream_index == 2
    assert back.params == cfg.to_model_params()
    assert back.n_steps == record.n_steps
    for name in ("times", "sx", "sy", "sz", "purity"):
        np.testing.assert_array_equal(getattr(back, name),
                                      getattr(record, name))

    if kind in ("matrix", "kraus"):
        model = canonical_model(cfg.spin)
        original = np.stack([density_to_coherence(rho, model).values
                             for rho in record.states])
    elif kind == "rabi-angle":
        original = np.asarray(record.states).reshape(-1, 1)
    else:
        original = np.asarray(record.states)
    np.testing.assert_array_equal(back.states, original)
    np.testing.assert_array_equal(back.final_state, original[-1])


def test_write_requires_recorded_states(tmp_path):
    cfg, record = run_from_text(CONFIG_TEXTS["coherence"])
    with pytest.raises(ValueError, match="without states"):
        write_trajectory(tmp_path / "traj.csv", record, cfg)


def test_trajectory_header_is_self_describing(tmp_path):
    cfg, record = run_from_text(CONFIG_TEXTS["components"],
                                record_states=True, stream_index=5)
    path = tmp_path / "traj.csv"
    write_trajectory(path, record, cfg)
    lines = path.read_text().splitlines()
    assert lines[0] == "# qsdspin trajectory"
    assert lines[1].startswith("# version = ")

    meta = []
    for line in lines[1:]:
        if not line.startswith("#"):
            columns = line
            break
        meta.append(line[2:])
    assert "stream_index = 5" in meta
    config_text = "\n".join(m for m in meta
                            if not m.startswith(("version", "stream_index")))
    assert parse_config(config_text) == cfg
    names = ",".join(COMPONENT_STATE_NAMES[1.0])
    assert columns == f"t,{names},sx,sy,sz,purity"


def test_rewrite_is_byte_identical(tmp_path):
    cfg, record = run_from_text(CONFIG_TEXTS["matrix"], record_states=True)
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    write_trajectory(first, record, cfg)
    write_trajectory(second, record, cfg)
    assert first.read_bytes() == second.read_bytes()


def test_malformed_file_rejected(tmp_path):
    path = tmp_path / "broken.csv"
    path.write_text("# qsdspin trajectory\n# spin = 1/2\n")
    with pytest.raises(ValueError, match="no column header"):
        read_trajectory(path)


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

def test_ensemble_file_matches_result(tmp_path):
    cfg = parse_config(CONFIG_TEXTS["coherence"] + "n_traj = 3\n")
    _, state = resolve_initial_state(cfg)
    result = run_ensemble(cfg.model_kind, cfg.to_model_params(), state,
                          cfg.n_traj, stride=cfg.stride)
    path = tmp_path / "ensemble.csv"
    write_ensemble(path, result, cfg)

    lines = path.read_text().splitlines()
    assert lines[0] == "# qsdspin ensemble"
    assert "# n_traj = 3" in lines
    n_header = sum(1 for line in lines if line.startswith("#")) + 1
    assert lines[n_header - 1] == ("t,mean_sx,sem_sx,mean_sy,sem_sy,"
                                   "mean_sz,sem_sz,mean_purity,sem_purity")
    data = np.loadtxt(path, delimiter=",", skiprows=n_header, ndmin=2)
    expected = np.column_stack([
        result.times,
        result.mean_sx, result.sem_sx,
        result.mean_sy, result.sem_sy,
        result.mean_sz, result.sem_sz,
        result.mean_purity, result.sem_purity,
    ])
    np.testing.assert_array_equal(data, expected)


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------

def test_summary_payload_encodes_nan_as_null():
    summary = AnalysisSummary(
        residence={0.5: 0.75, -0.5: 0.25},
        return_times={
            0.5: ReturnTimeStats(mean=1.25, count=4, stderr=float("nan")),
            -0.5: ReturnTimeStats(mean=float("nan"), count=0,
                                  stderr=float("nan")),
        },
    )
    cfg = parse_config(CONFIG_TEXTS["rabi-angle"])
    payload = summary_payload(summary, cfg)
    assert payload["residence"] == {"0.5": 0.75, "-0.5": 0.25}
    assert payload["return_times"]["0.5"]["stderr"] is None
    assert payload["return_times"]["-0.5"]["mean"] is None
    assert payload["return_times"]["0.5"]["count"] == 4
    # the whole tree must be strictly JSON-compatible
    json.dumps(payload, allow_nan=False)


def test_summary_payload_from_real_run():
    cfg, record = run_from_text(
        "spin = 1/2\nmodel = rabi-angle\nalpha = 0\nduration = 10\n"
        "stride = 1\n", record_states=True)
    payload = summary_payload(summarize(record), cfg)
    assert payload["version"]
    assert parse_config(payload["config"]) == cfg
    assert math.isclose(payload["mean_rabi_rate"]["rate"], 1.0,
                        abs_tol=1e-9)
    angle = payload["angle_pdf"]
    assert len(angle["edges"]) == len(angle["density"]) + 1
    assert all(isinstance(c, int) for c in angle["counts"])
    occ = payload["occupancy"]
    assert len(occ["counts"]) == len(occ["sy_edges"]) - 1


def test_write_summary_round_trip(tmp_path):
    summary = AnalysisSummary(
        residence={1.0: 1.0},
        return_times={1.0: ReturnTimeStats(mean=float("nan"), count=0,
                                           stderr=float("nan"))},
    )
    cfg = parse_config(CONFIG_TEXTS["coherence"])
    payload = summary_payload(summary, cfg)
    path = tmp_path / "summary.json"
    write_summary(path, payload)
    assert json.loads(path.read_text()) == payload
    again = tmp_path / "again.json"
    write_summary(again, payload)
    assert path.read_bytes() == again.read_bytes()
