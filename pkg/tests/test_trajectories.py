"""Full-trajectory driver and deterministic ensemble reduction."""

import math

import numpy as np
import pytest

from qsdspin.algebra import (
    CoherenceVector,
    eigenstate_projector,
    maximally_mixed,
)
from qsdspin.engine import (
    NumericalError,
    run_ensemble,
    run_trajectory,
)
from qsdspin.models import ModelParams
from qsdspin.noise import NoisePath, wiener_path

UP = eigenstate_projector(0.5, "+1/2")


def params(**kwargs):
    base = dict(alpha=1.0, epsilon=1.0, dt=1e-3, duration=1.0, seed=0)
    base.update(kwargs)
    return ModelParams(**base)


# ---------------------------------------------------------------------------
# single trajectories
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kind,state", [
    ("rabi-angle", UP),
    ("coherence", UP),
    ("components", UP),
    ("matrix", UP),
    ("kraus", UP),
])
def test_trajectory_is_bit_reproducible(kind, state):
    p = params(duration=0.5, seed=7)
    a = run_trajectory(kind, p, state, record_states=True)
    b = run_trajectory(kind, p, state, record_states=True)
    for name in ("times", "sx", "sy", "sz", "purity", "states"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    np.testing.assert_array_equal(a.final_state, b.final_state)


def test_trajectory_seed_and_stream_change_the_path():
    p = params(duration=0.5)
    base = run_trajectory("coherence", p, UP)
    other_stream = run_trajectory("coherence", p, UP, stream_index=1)
    other_seed = run_trajectory("coherence", params(duration=0.5, seed=1), UP)
    assert np.abs(base.sz - other_stream.sz).max() > 1e-3
    assert np.abs(base.sz - other_seed.sz).max() > 1e-3


def test_explicit_noise_path_matches_streamed_noise():
    """A pre-drawn Wiener path from the same stream reproduces the streamed
    run bit for bit, so chunked and monolithic noise supplies agree."""
    p = params(duration=2.0, seed=3)
    path = wiener_path(p.seed, 0, p.n_steps, 1, p.dt)
    for kind in ("rabi-angle", "coherence", "components", "matrix"):
        streamed = run_trajectory(kind, p, UP)
        explicit = run_trajectory(kind, p, UP, noise=path)
        np.testing.assert_array_equal(streamed.sz, explicit.sz)


def test_record_convention_and_stride():
    p = params(duration=0.0105, dt=1e-3)
    rec = run_trajectory("coherence", p, UP, stride=2, record_states=True)
    assert rec.n_steps == 10
    assert rec.n_records == 6
    np.testing.assert_allclose(rec.times, 2e-3 * np.arange(6), atol=1e-15)
    # row k holds the pre-step state of step k*stride; row 0 is the start
    np.testing.assert_allclose(rec.states[0], [0.0, 0.0, 1.0], atol=1e-15)
    assert rec.sz[0] == pytest.approx(0.5)
    # final row is the state after the last full step
    np.testing.assert_array_equal(rec.states[-1], rec.final_state)


def test_stride_one_supersamples_stride_ten():
    p = params(duration=1.0)
    fine = run_trajectory("components", p, UP, stride=1)
    coarse = run_trajectory("components", p, UP, stride=10)
    np.testing.assert_array_equal(fine.sz[::10], coarse.sz)
    np.testing.assert_array_equal(fine.times[::10], coarse.times)


def test_uneven_stride_drops_partial_tail_row():
    p = params(duration=0.0105, dt=1e-3)  # 10 steps
    rec = run_trajectory("coherence", p, UP, stride=3)
    # rows at steps 0, 3, 6, 9; no row for the partial tail after step 10
    assert rec.n_records == 4
    assert rec.times[-1] == pytest.approx(9e-3)


def test_zero_duration_records_initial_state_only():
    p = params(duration=0.0)
    for kind in ("coherence", "matrix", "kraus"):
        rec = run_trajectory(kind, p, UP, record_states=True)
        assert rec.n_steps == 0
        assert rec.n_records == 1
        assert rec.sz[0] == pytest.approx(0.5)
        assert rec.purity[0] == pytest.approx(1.0)


def test_initial_state_forms_are_equivalent():
    p = params(duration=0.5, seed=5)
    by_matrix = run_trajectory("coherence", p, UP)
    by_vector = run_trajectory("coherence", p,
                               CoherenceVector("bloch3", np.array([0.0, 0.0, 1.0])))
    by_raw = run_trajectory("coherence", p, np.array([0.0, 0.0, 1.0]))
    np.testing.assert_array_equal(by_matrix.sz, by_vector.sz)
    np.testing.assert_array_equal(by_matrix.sz, by_raw.sz)


def test_initial_state_validation():
    p = params()
    unphysical = np.diag([1.2, -0.2]).astype(complex)
    with pytest.raises(ValueError):
        run_trajectory("matrix", p, unphysical)
    with pytest.raises(ValueError):
        run_trajectory("coherence", p, np.zeros(5))  # no model of length 5
    with pytest.raises(ValueError):
        run_trajectory("bogus", p, UP)
    with pytest.raises(ValueError):
        run_trajectory("coherence", p, UP, stride=0)


def test_noise_override_validation():
    p = params(duration=0.1)
    short = wiener_path(0, 0, 10, 1, p.dt)
    with pytest.raises(ValueError):
        run_trajectory("coherence", p, UP, noise=short)
    wrong_dt = wiener_path(0, 0, p.n_steps, 1, 2e-3)
    with pytest.raises(ValueError):
        run_trajectory("coherence", p, UP, noise=wrong_dt)
    two_channel = NoisePath(increments=np.zeros((p.n_steps, 2)), dt=p.dt,
                            seed=0, stream_index=0)
    with pytest.raises(ValueError):
        run_trajectory("coherence", p, UP, noise=two_channel)
    with pytest.raises(ValueError):
        run_trajectory("kraus", p, UP,
                       noise=wiener_path(0, 0, p.n_steps, 1, p.dt))


def test_longer_noise_path_is_accepted():
    p = params(duration=0.1)
    long_path = wiener_path(p.seed, 0, p.n_steps + 50, 1, p.dt)
    streamed = run_trajectory("coherence", p, UP)
    explicit = run_trajectory("coherence", p, UP, noise=long_path)
    np.testing.assert_array_equal(streamed.sz, explicit.sz)


def test_numerical_error_reports_step_and_state():
    p = params(alpha=2.0, duration=5.0)
    with pytest.raises(NumericalError) as info:
        run_trajectory("matrix", p, UP, eig_floor=-1e-12,
                       check_positivity_every_step=True)
    assert info.value.step is not None and info.value.step >= 0
    assert info.value.state is not None and info.value.state.shape == (2, 2)


def test_matrix_run_health_counters():
    p = params(alpha=2.0, duration=2.0)
    rec = run_trajectory("matrix", p, UP)
    assert rec.renorm_count == 0
    assert rec.trace_dev_max <= 1e-12
    # the Euler stepper transiently dips below zero by O(sqrt(dt))
    assert -5e-2 <= rec.min_eigenvalue <= 1e-12


def test_kraus_run_stays_strictly_positive():
    p = params(alpha=2.0, duration=2.0)
    rec = run_trajectory("kraus", p, maximally_mixed(0.5),
                         check_positivity_every_step=True)
    assert rec.min_eigenvalue >= -1e-8
    assert rec.purity[-1] > rec.purity[0]


# ---------------------------------------------------------------------------
# physics spot checks
# ---------------------------------------------------------------------------

def test_measurement_only_collapse_to_eigenstates():
    """With measurement alone the qubit collapses onto an eigenstate and
    both outcomes occur across seeds, roughly evenly from the equator."""
    up_count = 0
    for seed in range(50):
        p = ModelParams(alpha=3.0, epsilon=0.0, dt=1e-3, duration=5.0,
                        seed=seed)
        rec = run_trajectory("components", p,
                             np.array([0.0, 0.0, -0.5]))  # (sz, sx, sy)
        final = rec.sz[-1]
        assert min(abs(final - 0.5), abs(final + 0.5)) <= 0.01
        up_count += final > 0.0
    assert 10 <= up_count <= 40


def test_free_precession_spin_one():
    p = ModelParams(alpha=0.0, epsilon=1.0, dt=1e-4, duration=5.0)
    rec = run_trajectory("coherence", p, eigenstate_projector(1.0, "-1"))
    assert np.abs(rec.sz + np.cos(rec.times)).max() <= 1e-3


def test_transverse_component_stays_exactly_zero():
    """Both spin-1/2 vector models keep ``<Sx> = 0`` exactly on the
    measurement circle (its drift and noise are proportional to itself)."""
    p = params(duration=2.0, seed=4)
    for kind in ("components", "rabi-angle"):
        rec = run_trajectory(kind, p, UP)
        np.testing.assert_array_equal(rec.sx, 0.0)


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

def test_single_trajectory_ensemble_reduces_to_the_trajectory():
    p = params(duration=0.5, seed=11)
    single = run_trajectory("coherence", p, UP)
    ens = run_ensemble("coherence", p, UP, 1)
    np.testing.assert_array_equal(ens.mean_sz, single.sz)
    np.testing.assert_array_equal(ens.sem_sz, 0.0)
    assert ens.n_trajectories == 1


def test_ensemble_statistics_match_manual_reduction():
    p = params(duration=0.5)
    runs = [run_trajectory("coherence", p, UP, stream_index=i)
            for i in range(3)]
    stack = np.stack([r.sz for r in runs])
    ens = run_ensemble("coherence", p, UP, 3)
    np.testing.assert_allclose(ens.mean_sz, stack.mean(axis=0), atol=1e-15)
    # the one-pass variance cancels to sqrt(eps) when paths barely differ
    np.testing.assert_allclose(
        ens.sem_sz, stack.std(axis=0, ddof=1) / math.sqrt(3), atol=1e-8)


def test_ensemble_is_thread_count_invariant():
    p = params(duration=0.2)
    lone = run_ensemble("rabi-angle", p, UP, 40, threads=1)
    pooled = run_ensemble("rabi-angle", p, UP, 40, threads=4)
    for name in ("mean_sx", "mean_sy", "mean_sz", "mean_purity",
                 "sem_sz", "mean_rho"):
        np.testing.assert_array_equal(getattr(lone, name),
                                      getattr(pooled, name))


def test_ensemble_mean_rho_consistent_with_mean_observables():
    from qsdspin.algebra import build_spin_system
    sz_op = build_spin_system(0.5).sz
    p = params(duration=0.3)
    for kind in ("rabi-angle", "coherence", "matrix"):
        ens = run_ensemble(kind, p, UP, 5)
        traces = np.einsum("kij,ji->k", ens.mean_rho, sz_op).real
        np.testing.assert_allclose(traces, ens.mean_sz, atol=1e-12)
        np.testing.assert_allclose(
            np.einsum("kii->k", ens.mean_rho).real, 1.0, atol=1e-12)


def test_ensemble_per_trajectory_initial_states():
    p = params(duration=0.0)
    angles = [0.0, math.pi / 2.0, math.pi]
    starts = [np.array([phi]) for phi in angles]
    ens = run_ensemble("rabi-angle", p, None, 3, initial_states=starts)
    want = np.mean([0.5 * math.cos(phi) for phi in angles])
    assert ens.mean_sz[0] == pytest.approx(want, abs=1e-15)


def test_ensemble_input_validation():
    p = params(duration=0.1)
    with pytest.raises(ValueError):
        run_ensemble("coherence", p, UP, 0)
    with pytest.raises(ValueError):
        run_ensemble("coherence", p, UP, 3, initial_states=[UP, UP])


def test_ensemble_wraps_numerical_failure_with_block_info():
    # a step far too coarse for the measurement strength blows past the
    # Euler stepper's negativity allowance almost immediately
    p = params(alpha=30.0, duration=1.0, dt=1e-2)
    with pytest.raises(NumericalError) as info:
        run_ensemble("matrix", p, UP, 2)
    assert "block 0..1" in str(info.value)


def test_ensemble_mean_toward_lindblad():
    """The trajectory mean approaches the deterministic mean evolution."""
    from qsdspin.engine import lindblad_integrate
    from qsdspin.models import hamiltonian, measurement_operator
    p = params(alpha=1.0, epsilon=1.0, duration=2.0)
    ens = run_ensemble("coherence", p, UP, 128)
    oracle = lindblad_integrate(UP, hamiltonian(0.5, p.epsilon),
                                measurement_operator(0.5, p.alpha),
                                p.dt, p.duration, stride=10)
    assert np.abs(ens.mean_sz - oracle.sz).max() <= 0.06


def test_ensemble_purity_grows_from_mixed_start():
    p = params(alpha=2.0, epsilon=1.0, duration=1.0)
    ens = run_ensemble("kraus", p, maximally_mixed(0.5), 20)
    assert ens.mean_purity[0] == pytest.approx(0.5, abs=1e-12)
    assert ens.mean_purity[-1] > 0.9
    # monotone within twice the standard error
    drops = np.diff(ens.mean_purity) + 2.0 * ens.sem_purity[1:]
    assert drops.min() >= 0.0
