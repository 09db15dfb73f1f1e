"""Statistics extracted from trajectory records.

Everything here is a pure function of recorded series, so any quantity can
be recomputed offline from saved output.  The measurement-axis statistics
(residence probabilities, mean return times) are defined on the recorded
``<Sz>`` series against a set of disjoint eigenvalue vicinities; the angle
statistics (stationary distribution, mean precession rate) are defined on
the Rabi angle, either recorded directly or recovered from ``(<Sy>, <Sz>)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _scipy_stats

from .algebra import build_spin_system

__all__ = [
    "VicinitySpec",
    "ReturnTimeStats",
    "AngleDistribution",
    "Occupancy2D",
    "AnalysisSummary",
    "residence_probabilities",
    "mean_return_times",
    "angle_pdf",
    "angle_reference_density",
    "angle_series",
    "angle_stationarity_pvalue",
    "occupancy_2d",
    "mean_rabi_rate",
    "summarize",
]


@dataclass(frozen=True)
class VicinitySpec:
    """Disjoint intervals ``[m - half_width, m + half_width]`` around
    measurement-operator eigenvalues."""

    eigenvalues: tuple
    half_width: float = 0.1

    def __post_init__(self):
        eigs = tuple(float(m) for m in self.eigenvalues)
        object.__setattr__(self, "eigenvalues", eigs)
        if len(eigs) < 1:
            raise ValueError("need at least one eigenvalue")
        if len(set(eigs)) != len(eigs):
            raise ValueError("eigenvalues must be distinct")
        hw = float(self.half_width)
        object.__setattr__(self, "half_width", hw)
        if len(eigs) > 1:
            ordered = sorted(eigs)
            min_gap = min(b - a for a, b in zip(ordered, ordered[1:]))
        else:
            min_gap = math.inf
        if not 0.0 < hw < 0.5 * min_gap:
            raise ValueError(
                f"half_width must lie in (0, {0.5 * min_gap}) so vicinities "
                f"are disjoint; got {hw}"
            )

    @classmethod
    def for_spin(cls, spin, half_width=0.1):
        return cls(tuple(build_spin_system(spin).sz_eigenvalues), half_width)

    def classify(self, values):
        """Vicinity index per sample, or -1 where outside every vicinity."""
        values = np.asarray(values, dtype=float)
        out = np.full(values.shape, -1, dtype=np.intp)
        for i, m in enumerate(self.eigenvalues):
            out[np.abs(values - m) <= self.half_width] = i
        return out


@dataclass(frozen=True)
class ReturnTimeStats:
    """Completed exit-to-reentry episodes for one eigenvalue vicinity."""

    mean: float
    count: int
    stderr: float


@dataclass(frozen=True)
class AngleDistribution:
    """Pooled histogram of the Rabi angle modulo 2*pi.

    ``density`` is normalized so ``sum(density) * bin_width == 1``;
    ``reference`` is the analytic small-measurement stationary density
    evaluated on ``centers``.
    """

    edges: np.ndarray
    centers: np.ndarray
    density: np.ndarray
    counts: np.ndarray
    reference: np.ndarray
    n_samples: int

    @property
    def bin_width(self) -> float:
        return float(self.edges[1] - self.edges[0])


@dataclass(frozen=True)
class Occupancy2D:
    """Sample counts over an (<Sy>, <Sz>) grid spanning [-spin, spin]^2."""

    counts: np.ndarray
    sy_edges: np.ndarray
    sz_edges: np.ndarray

    @property
    def n_samples(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class AnalysisSummary:
    """Bundle of the measurement-axis and angle statistics of one record."""

    residence: dict
    return_times: dict
    angle: object = None
    occupancy: object = None
    rabi_rate: object = None


def _sz_series(traj):
    sz = np.asarray(traj.sz, dtype=float)
    if sz.size == 0:
        raise ValueError("trajectory record holds no samples")
    return sz


def residence_probabilities(traj, spec: VicinitySpec) -> dict:
    """Fraction of recorded samples inside each eigenvalue vicinity."""
    sz = _sz_series(traj)
    idx = spec.classify(sz)
    n = sz.size
    return {m: float(np.count_nonzero(idx == i)) / n
            for i, m in enumerate(spec.eigenvalues)}


def mean_return_times(traj, spec: VicinitySpec) -> dict:
    """Mean duration of completed return episodes per eigenvalue.

    An episode for eigenvalue ``m`` starts when the trajectory exits the
    vicinity of ``m``, arms when it enters any *other* eigenvalue's
    vicinity, and completes (contributing exit-to-reentry duration) when it
    re-enters the vicinity of ``m``.  Episodes still open at the end of the
    record, and episodes that never armed, contribute nothing.  Eigenvalues
    with no completed episode get ``count=0`` and NaN statistics.
    """
    sz = _sz_series(traj)
    times = np.asarray(traj.times, dtype=float)
    if times.shape != sz.shape:
        raise ValueError("times and <Sz> series lengths differ")
    idx = spec.classify(sz)
    n_vic = len(spec.eigenvalues)
    inside = [bool(idx[0] == i) for i in range(n_vic)]
    exit_time = [math.nan] * n_vic
    armed = [False] * n_vic
    durations = [[] for _ in range(n_vic)]
    for k in range(1, sz.size):
        here = idx[k]
        t = times[k]
        for i in range(n_vic):
            if inside[i]:
                if here != i:
                    inside[i] = False
                    exit_time[i] = t
                    armed[i] = here >= 0
            else:
                if here == i:
                    inside[i] = True
                    if armed[i] and not math.isnan(exit_time[i]):
                        durations[i].append(t - exit_time[i])
                    armed[i] = False
                    exit_time[i] = math.nan
                elif here >= 0:
                    armed[i] = True
    out = {}
    for i, m in enumerate(spec.eigenvalues):
        d = np.asarray(durations[i], dtype=float)
        if d.size == 0:
            out[m] = ReturnTimeStats(mean=math.nan, count=0, stderr=math.nan)
        else:
            err = float(d.std(ddof=1) / math.sqrt(d.size)) if d.size > 1 else math.nan
            out[m] = ReturnTimeStats(mean=float(d.mean()), count=int(d.size),
                                     stderr=err)
    return out


# ---------------------------------------------------------------------------
# Rabi-angle statistics
# ---------------------------------------------------------------------------

def angle_series(traj):
    """Unwrapped Rabi-angle series of one record.

    Uses the recorded angle state when present (angle-model records with
    state recording); otherwise recovers ``atan2(-<Sy>, <Sz>)`` from the
    observable series and unwraps it.
    """
    states = getattr(traj, "states", None)
    if getattr(traj, "model_kind", None) == "rabi-angle" and states is not None:
        return np.asarray(states, dtype=float)[:, 0]
    sy = np.asarray(traj.sy, dtype=float)
    sz = np.asarray(traj.sz, dtype=float)
    return np.unwrap(np.arctan2(-sy, sz))


def angle_reference_density(phi, alpha, epsilon):
    """Analytic small-measurement stationary density of the Rabi angle,
    ``(1 + (3 alpha^2 / 4 epsilon) sin 2 phi) / (2 pi)``."""
    phi = np.asarray(phi, dtype=float)
    if epsilon <= 0.0:
        raise ValueError("the analytic reference requires a positive drive")
    return (1.0 + (3.0 * alpha ** 2 / (4.0 * epsilon)) * np.sin(2.0 * phi)) \
        / (2.0 * math.pi)


def _pooled_angles(trajectories, burn_in):
    if hasattr(trajectories, "times"):
        trajectories = [trajectories]
    trajectories = list(trajectories)
    if not trajectories:
        raise ValueError("no trajectories supplied")
    if not 0.0 <= burn_in < 1.0:
        raise ValueError("burn_in must lie in [0, 1)")
    chunks = []
    for traj in trajectories:
        phi = angle_series(traj)
        skip = int(math.floor(burn_in * phi.size))
        chunk = np.mod(phi[skip:], 2.0 * math.pi)
        if chunk.size:
            chunks.append(chunk)
    if not chunks:
        raise ValueError("burn-in removed every sample")
    return trajectories, np.concatenate(chunks)


def angle_pdf(trajectories, n_bins=100, burn_in=0.1) -> AngleDistribution:
    """Pooled stationary histogram of the angle modulo 2*pi.

    The leading ``burn_in`` fraction of each record is discarded before
    pooling.  The analytic reference is evaluated with the parameters of
    the first record (all pooled records are expected to share them).
    """
    n_bins = int(n_bins)
    if n_bins < 8:
        raise ValueError("need at least 8 bins")
    trajectories, pooled = _pooled_angles(trajectories, burn_in)
    edges = np.linspace(0.0, 2.0 * math.pi, n_bins + 1)
    counts, _ = np.histogram(pooled, bins=edges)
    width = edges[1] - edges[0]
    density = counts / (counts.sum() * width)
    centers = 0.5 * (edges[:-1] + edges[1:])
    params = getattr(trajectories[0], "params", None)
    if params is not None and params.epsilon > 0.0:
        reference = angle_reference_density(centers, params.alpha, params.epsilon)
    else:
        reference = np.full(n_bins, 1.0 / (2.0 * math.pi))
    return AngleDistribution(edges=edges, centers=centers, density=density,
                             counts=counts, reference=reference,
                             n_samples=int(counts.sum()))


def angle_stationarity_pvalue(trajectories, n_bins=20, burn_in=0.1):
    """Chi-squared homogeneity p-value between the first and second halves
    of the pooled post-burn-in angle samples (stationarity check)."""
    _, pooled = _pooled_angles(trajectories, burn_in)
    half = pooled.size // 2
    if half < n_bins:
        raise ValueError("too few samples for a stationarity check")
    edges = np.linspace(0.0, 2.0 * math.pi, int(n_bins) + 1)
    first, _ = np.histogram(pooled[:half], bins=edges)
    second, _ = np.histogram(pooled[half:2 * half], bins=edges)
    table = np.stack([first, second])
    keep = table.sum(axis=0) > 0
    result = _scipy_stats.chi2_contingency(table[:, keep])
    return float(result.pvalue)


def occupancy_2d(traj, n_bins=51) -> Occupancy2D:
    """Sample counts over an (<Sy>, <Sz>) grid spanning [-spin, spin]^2."""
    n_bins = int(n_bins)
    if n_bins < 1:
        raise ValueError("need at least one bin")
    s = float(traj.spin)
    sy = np.asarray(traj.sy, dtype=float)
    sz = np.asarray(traj.sz, dtype=float)
    counts, sy_edges, sz_edges = np.histogram2d(
        sy, sz, bins=n_bins, range=[[-s, s], [-s, s]])
    return Occupancy2D(counts=counts, sy_edges=sy_edges, sz_edges=sz_edges)


def mean_rabi_rate(traj, n_blocks=50, n_replicates=200, bootstrap_seed=0):
    """Mean precession rate ``(phi(T) - phi(0)) / T`` with a block-bootstrap
    standard error.

    The recorded angle increments are cut into ``n_blocks`` contiguous
    blocks; replicates resample blocks with replacement.  The bootstrap RNG
    is seeded, so repeated calls agree.
    """
    phi = angle_series(traj)
    times = np.asarray(traj.times, dtype=float)
    if phi.size < 2 or times[-1] <= times[0]:
        raise ValueError("need a record spanning positive duration")
    total_time = times[-1] - times[0]
    rate = (phi[-1] - phi[0]) / total_time
    increments = np.diff(phi)
    n_blocks = max(1, min(int(n_blocks), increments.size))
    block_sums = np.array([b.sum() for b in np.array_split(increments, n_blocks)])
    rng = np.random.default_rng(bootstrap_seed)
    picks = rng.integers(0, n_blocks, size=(int(n_replicates), n_blocks))
    replicate_rates = block_sums[picks].sum(axis=1) / total_time
    return float(rate), float(replicate_rates.std(ddof=1))


def summarize(traj, spec=None, n_bins=100, occupancy_bins=51,
              burn_in=0.1) -> AnalysisSummary:
    """Compute every statistic applicable to one trajectory record."""
    if spec is None:
        spec = VicinitySpec.for_spin(traj.spin)
    residence = residence_probabilities(traj, spec)
    returns = mean_return_times(traj, spec)
    angle = None
    rate = None
    if traj.spin == 0.5:
        angle = angle_pdf(traj, n_bins=n_bins, burn_in=burn_in)
        try:
            rate = mean_rabi_rate(traj)
        except ValueError:
            rate = None
    occupancy = occupancy_2d(traj, n_bins=occupancy_bins)
    return AnalysisSummary(residence=residence, return_times=returns,
                           angle=angle, occupancy=occupancy, rabi_rate=rate)
