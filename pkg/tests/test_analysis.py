"""Trajectory statistics: residence, return times, angle distribution."""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from qsdspin.algebra import eigenstate_projector
from qsdspin.analysis import (
    VicinitySpec,
    angle_pdf,
    angle_reference_density,
    angle_series,
    angle_stationarity_pvalue,
    mean_rabi_rate,
    mean_return_times,
    occupancy_2d,
    residence_probabilities,
    summarize,
)
from qsdspin.engine import run_trajectory
from qsdspin.models import ModelParams

TWO_PI = 2.0 * math.pi


def fake_record(sz, times=None, spin=1.0, sy=None):
    sz = np.asarray(sz, dtype=float)
    return SimpleNamespace(
        sz=sz,
        sy=np.zeros_like(sz) if sy is None else np.asarray(sy, dtype=float),
        times=np.arange(sz.size, dtype=float) if times is None else np.asarray(times),
        spin=spin,
        model_kind="matrix",
        states=None,
        params=None,
    )


@pytest.fixture(scope="module")
def circle_run():
    """Deterministic spin-1 rotation: ``<Sz>(t) = -cos t`` for 50 time units."""
    p = ModelParams(alpha=0.0, epsilon=1.0, dt=1e-4, duration=50.0)
    return run_trajectory("coherence", p, eigenstate_projector(1.0, "-1"),
                          stride=10)


# ---------------------------------------------------------------------------
# vicinity specification
# ---------------------------------------------------------------------------

def test_vicinity_for_spin_uses_measurement_eigenvalues():
    assert set(VicinitySpec.for_spin(1.0).eigenvalues) == {1.0, 0.0, -1.0}
    assert set(VicinitySpec.for_spin(1.5).eigenvalues) == {1.5, 0.5, -0.5, -1.5}


@pytest.mark.parametrize("kwargs", [
    dict(eigenvalues=()),
    dict(eigenvalues=(0.0, 0.0)),
    dict(eigenvalues=(0.0, 1.0), half_width=0.0),
    dict(eigenvalues=(0.0, 1.0), half_width=0.5),
    dict(eigenvalues=(0.0, 1.0), half_width=-0.1),
])
def test_vicinity_validation(kwargs):
    with pytest.raises(ValueError):
        VicinitySpec(**kwargs)


def test_vicinity_single_eigenvalue_allows_any_width():
    spec = VicinitySpec((0.0,), half_width=5.0)
    np.testing.assert_array_equal(spec.classify([4.9, -5.0, 5.1]), [0, 0, -1])


def test_vicinity_classify_boundaries_inclusive():
    spec = VicinitySpec((1.0, 0.0, -1.0), half_width=0.1)
    got = spec.classify([1.05, 0.9, 0.89, 0.1, -0.95, 0.5])
    np.testing.assert_array_equal(got, [0, 0, -1, 1, 2, -1])


# ---------------------------------------------------------------------------
# residence and return times
# ---------------------------------------------------------------------------

def test_residence_constant_series():
    spec = VicinitySpec.for_spin(1.0)
    rec = fake_record(np.ones(40))
    assert residence_probabilities(rec, spec) == {1.0: 1.0, 0.0: 0.0, -1.0: 0.0}


def test_residence_counts_sample_fractions():
    spec = VicinitySpec.for_spin(1.0)
    rec = fake_record([1.0, 0.95, 0.0, -1.0, 0.5, 0.5, 0.5, -0.98])
    got = residence_probabilities(rec, spec)
    assert got[1.0] == pytest.approx(2 / 8)
    assert got[0.0] == pytest.approx(1 / 8)
    assert got[-1.0] == pytest.approx(2 / 8)


def test_return_times_square_wave_hand_trace():
    spec = VicinitySpec.for_spin(1.0)
    rec = fake_record([1, 1, 0, 0, 1, 1, 0, 0, 1])
    got = mean_return_times(rec, spec)
    assert got[1.0].count == 2 and got[1.0].mean == pytest.approx(2.0)
    assert got[1.0].stderr == pytest.approx(0.0)
    # the opening stretch inside the 0-vicinity never exited, so only one
    # completed episode exists for it
    assert got[0.0].count == 1 and got[0.0].mean == pytest.approx(2.0)
    assert math.isnan(got[0.0].stderr)
    assert got[-1.0].count == 0 and math.isnan(got[-1.0].mean)


def test_return_requires_visiting_another_vicinity():
    """Exits that wander outside every vicinity and come straight back do
    not count as returns."""
    spec = VicinitySpec.for_spin(1.0)
    rec = fake_record([1.0, 0.5, 1.0, 0.5, 1.0])
    got = mean_return_times(rec, spec)
    assert got[1.0].count == 0


def test_return_time_episode_interrupted_by_record_end():
    spec = VicinitySpec.for_spin(1.0)
    rec = fake_record([1.0, 0.0, 0.0, 0.0])  # armed but never returns
    assert mean_return_times(rec, spec)[1.0].count == 0


def test_return_times_rejects_mismatched_series():
    spec = VicinitySpec.for_spin(1.0)
    rec = fake_record([1.0, 0.0, 1.0], times=np.arange(5, dtype=float))
    with pytest.raises(ValueError):
        mean_return_times(rec, spec)


def _exact_windows(level, half_width, duration):
    """Intervals where ``-cos t`` lies within ``half_width`` of ``level``,
    as (entry, exit) pairs inside [0, duration], by direct root arithmetic."""
    out = []
    if level == 1.0:
        enter, leave = math.acos(-(1.0 - half_width)), TWO_PI - math.acos(-(1.0 - half_width))
        starts = [enter + TWO_PI * k for k in range(20)]
        width = TWO_PI - 2.0 * enter
        out = [(s, s + width) for s in starts]
        out = [(a, b) for a, b in out if a < duration]
    elif level == -1.0:
        half = math.acos(1.0 - half_width)
        out = [(TWO_PI * k - half, TWO_PI * k + half) for k in range(20)]
        out = [(max(a, 0.0), min(b, duration)) for a, b in out
               if b > 0.0 and a < duration]
    else:
        half = math.asin(half_width)
        centers = [math.pi / 2.0 + math.pi * k for k in range(40)]
        out = [(c - half, c + half) for c in centers if c - half < duration]
    return [(a, min(b, duration)) for a, b in out]


def test_residence_on_deterministic_circle(circle_run):
    spec = VicinitySpec.for_spin(1.0)
    got = residence_probabilities(circle_run, spec)
    for level in (1.0, 0.0, -1.0):
        want = sum(b - a for a, b in
                   _exact_windows(level, spec.half_width, 50.0)) / 50.0
        # discretization plus the slow radius inflation of the explicit
        # Euler rotation shift the crossings slightly
        assert got[level] == pytest.approx(want, abs=4e-3)


def test_return_times_on_deterministic_circle(circle_run):
    spec = VicinitySpec.for_spin(1.0)
    got = mean_return_times(circle_run, spec)
    windows = _exact_windows(1.0, spec.half_width, 50.0)
    waits = [b[0] - a[1] for a, b in zip(windows, windows[1:])]
    assert got[1.0].count == len(waits)
    assert got[1.0].mean == pytest.approx(float(np.mean(waits)), abs=0.025)
    # the zero crossing is visited twice per turn, so its wait alternates;
    # the mean sits between the two exact gaps
    zero_windows = _exact_windows(0.0, spec.half_width, 50.0)
    zero_waits = [b[0] - a[1] for a, b in zip(zero_windows, zero_windows[1:])]
    assert got[0.0].count == len(zero_waits)
    assert got[0.0].mean == pytest.approx(float(np.mean(zero_waits)), abs=0.025)


# ---------------------------------------------------------------------------
# angle statistics
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def uniform_angle_run():
    """Angle model with no measurement: the angle advances uniformly.

    The duration covers eight full turns so histogram tests are free of
    partial-sweep aliasing."""
    p = ModelParams(alpha=0.0, epsilon=1.0, dt=1e-3, duration=8.0 * TWO_PI)
    return run_trajectory("rabi-angle", p, eigenstate_projector(0.5, "+1/2"),
                          stride=1, record_states=True)


def test_angle_series_prefers_recorded_angle(uniform_angle_run):
    phi = angle_series(uniform_angle_run)
    np.testing.assert_allclose(phi, uniform_angle_run.times, atol=1e-9)


def test_angle_series_unwraps_observables(uniform_angle_run):
    rec = SimpleNamespace(
        model_kind="rabi-angle", states=None, params=None,
        sy=uniform_angle_run.sy, sz=uniform_angle_run.sz,
        times=uniform_angle_run.times, spin=0.5)
    np.testing.assert_allclose(angle_series(rec), angle_series(uniform_angle_run),
                               atol=1e-9)


def test_angle_pdf_uniform_case(uniform_angle_run):
    dist = angle_pdf(uniform_angle_run, n_bins=100, burn_in=0.0)
    assert abs(dist.density.sum() * dist.bin_width - 1.0) <= 1e-9
    uniform = 1.0 / TWO_PI
    assert np.abs(dist.density - uniform).max() <= 0.02 * uniform
    np.testing.assert_allclose(dist.reference, uniform, atol=1e-15)
    assert dist.n_samples == uniform_angle_run.n_records


def test_angle_pdf_pools_multiple_records(uniform_angle_run):
    one = angle_pdf(uniform_angle_run, burn_in=0.0)
    two = angle_pdf([uniform_angle_run, uniform_angle_run], burn_in=0.0)
    assert two.n_samples == 2 * one.n_samples
    np.testing.assert_allclose(two.density, one.density, atol=1e-12)


def test_angle_pdf_validation(uniform_angle_run):
    with pytest.raises(ValueError):
        angle_pdf(uniform_angle_run, n_bins=7)
    with pytest.raises(ValueError):
        angle_pdf(uniform_angle_run, burn_in=1.0)
    with pytest.raises(ValueError):
        angle_pdf([])


def test_angle_reference_density_shape():
    phi = np.linspace(0.0, TWO_PI, 9)
    ref = angle_reference_density(phi, 0.5, 1.0)
    # integrates to one and is maximal where sin(2 phi) peaks
    assert np.trapezoid(ref, phi) == pytest.approx(1.0, abs=1e-12)
    assert ref.argmax() == 1  # phi = pi/4
    with pytest.raises(ValueError):
        angle_reference_density(phi, 0.5, 0.0)


def test_angle_stationarity_on_stationary_series(uniform_angle_run):
    # zero burn-in: each half then spans whole turns and the two halves
    # sample the circle identically
    assert angle_stationarity_pvalue(uniform_angle_run, burn_in=0.0) >= 0.9


def test_angle_stationarity_needs_enough_samples():
    rec = SimpleNamespace(model_kind="rabi-angle",
                          states=np.zeros((10, 1)), params=None,
                          times=np.arange(10.0), spin=0.5,
                          sy=np.zeros(10), sz=np.ones(10))
    with pytest.raises(ValueError):
        angle_stationarity_pvalue(rec, n_bins=20)


# ---------------------------------------------------------------------------
# occupancy and precession rate
# ---------------------------------------------------------------------------

def test_occupancy_single_sample():
    rec = fake_record([-1.0], times=np.zeros(1))
    occ = occupancy_2d(rec, n_bins=11)
    assert occ.counts.sum() == 1
    # the sample sits at (sy, sz) = (0, -1): middle column, bottom row
    assert occ.counts[5, 0] == 1


def test_occupancy_confined_to_unit_ring(circle_run):
    occ = occupancy_2d(circle_run, n_bins=51)
    # the slow Euler radius inflation pushes a few late samples just past
    # the physical range, and those fall outside the grid
    assert 0.9 * circle_run.n_records <= occ.n_samples <= circle_run.n_records
    centers_y = 0.5 * (occ.sy_edges[:-1] + occ.sy_edges[1:])
    centers_z = 0.5 * (occ.sz_edges[:-1] + occ.sz_edges[1:])
    ry, rz = np.meshgrid(centers_y, centers_z, indexing="ij")
    inner = np.hypot(ry, rz) < 0.9
    assert occ.counts[inner].sum() == 0


def test_occupancy_validation(circle_run):
    with pytest.raises(ValueError):
        occupancy_2d(circle_run, n_bins=0)


def test_rabi_rate_uniform_rotation_is_exact(uniform_angle_run):
    rate, err = mean_rabi_rate(uniform_angle_run)
    assert rate == pytest.approx(1.0, abs=1e-12)
    # blocks differ in length by one sample when the split is uneven, so
    # the bootstrap spread is tiny but not zero even for a uniform rotation
    assert err <= 1e-4


def test_rabi_rate_bootstrap_is_reproducible():
    p = ModelParams(alpha=1.0, epsilon=1.0, dt=1e-3, duration=20.0, seed=3)
    rec = run_trajectory("rabi-angle", p, eigenstate_projector(0.5, "+1/2"),
                         record_states=True)
    a = mean_rabi_rate(rec)
    b = mean_rabi_rate(rec)
    assert a == b
    assert 0.0 < a[0] < 1.0  # measurement slows the precession
    assert a[1] > 0.0


def test_rabi_rate_rejects_zero_span():
    p = ModelParams(alpha=1.0, epsilon=1.0, dt=1e-3, duration=0.0)
    rec = run_trajectory("rabi-angle", p, eigenstate_projector(0.5, "+1/2"),
                         record_states=True)
    with pytest.raises(ValueError):
        mean_rabi_rate(rec)


# ---------------------------------------------------------------------------
# summary bundle
# ---------------------------------------------------------------------------

def test_summarize_spin_one(circle_run):
    out = summarize(circle_run)
    assert set(out.residence) == {1.0, 0.0, -1.0}
    assert set(out.return_times) == {1.0, 0.0, -1.0}
    assert out.angle is None and out.rabi_rate is None
    assert out.occupancy.n_samples >= 0.9 * circle_run.n_records


def test_summarize_spin_half(uniform_angle_run):
    out = summarize(uniform_angle_run)
    assert set(out.residence) == {0.5, -0.5}
    assert out.angle is not None
    assert out.rabi_rate[0] == pytest.approx(1.0, abs=1e-12)
