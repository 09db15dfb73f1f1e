"""Steppers and drivers for stochastic and deterministic evolution.

The same physical model can be advanced four ways:

* ``qsd_matrix_step`` -- Euler-Maruyama directly on the density matrix
  (state-diffusion unravelling).  The increment is traceless in exact
  arithmetic; the stepper renormalizes only when the per-step trace
  deviation exceeds a tolerance, and counts how often.  It may produce
  slightly negative eigenvalues transiently; those are tolerated down to a
  hard floor.
* ``kraus_step`` -- a two-branch-per-channel Kraus map (branch operators
  ``(I + A)/sqrt(N)`` with ``A = -iH dt - L'L dt / 2 +- L sqrt(dt)``),
  positivity-preserving by construction; the stepper of reference for
  physicality-critical runs.
* Euler-Maruyama on a closed real parametrization (:mod:`.models`).
* ``lindblad_integrate`` -- deterministic classical 4th-order integration
  of the ensemble-averaged equation of motion; the oracle that stochastic
  ensemble means must reproduce.

``run_trajectory`` and ``run_ensemble`` wrap these in reproducible,
chunked drivers: trajectory ``i`` of an ensemble always consumes stream
``i``, and ensemble reduction is performed in trajectory order so results
do not depend on worker scheduling.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .algebra import (
    CoherenceVector,
    build_spin_system,
    check_physical,
    coherence_to_density,
    model_spin,
)
from .models import (
    ItoSystem,
    ModelParams,
    component_gram_pinv,
    hamiltonian,
    make_ito_system,
    measurement_operator,
)
from .noise import GaussianStream, NoisePath, UniformStream

__all__ = [
    "NumericalError",
    "TrajectoryRecord",
    "EnsembleResult",
    "euler_maruyama_step",
    "qsd_matrix_step",
    "kraus_step",
    "kraus_operators",
    "kraus_completeness_residual",
    "lindblad_rhs",
    "lindblad_integrate",
    "run_trajectory",
    "run_ensemble",
]

#: steps advanced per kernel call; bounds the noise buffer to ~8 MB
CHUNK_STEPS = 1 << 20

#: The Euler matrix stepper dips below the physical cone by O(sqrt(dt))
#: near pure states (measured: -2e-2 at dt=1e-3, -4e-3 at dt=1e-4 for
#: spin 1, alpha=epsilon=1).  Policy: tolerate and report via the record's
#: ``min_eigenvalue``; the default floor only catches qualitative blowups.
#: Pass a tighter ``eig_floor`` to enforce a strict bound.
MATRIX_EIG_FLOOR = -5e-2

#: The Kraus map is positivity-preserving by construction, so its floor is
#: strict: anything below rounding scale is a genuine failure.
KRAUS_EIG_FLOOR = -1e-8

_DIM_TO_SPIN = {2: 0.5, 3: 1.0, 4: 1.5}


class NumericalError(RuntimeError):
    """Evolution left the numerically valid regime.

    Carries the failing global step index and a snapshot of the state.
    """

    def __init__(self, message, step=None, state=None):
        super().__init__(message)
        self.step = step
        self.state = state


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------

def euler_maruyama_step(system: ItoSystem, x, dt, dw):
    """One explicit step ``x + A(x) dt + B(x) dW`` of a generic Ito system."""
    x = np.asarray(x, dtype=float)
    drift, diffusion = system.evaluate(x)
    if not (np.all(np.isfinite(drift)) and np.all(np.isfinite(diffusion))):
        raise NumericalError(
            f"non-finite coefficients at state {x!r}: drift {drift!r}, "
            f"diffusion {diffusion!r}",
            state=x.copy(),
        )
    return x + drift * float(dt) + diffusion @ np.atleast_1d(np.asarray(dw, dtype=float))


def _hermitize(rho):
    return 0.5 * (rho + rho.conj().T)


def _as_operator_set(l_set):
    if isinstance(l_set, np.ndarray) and l_set.ndim == 2:
        return [l_set]
    return list(l_set)


def qsd_matrix_step(rho, h, l_set, dt, dw, renorm_tol=1e-12, counters=None):
    """Euler-Maruyama step of the diffusion-unravelled master equation.

    ``dw`` holds one Wiener increment per operator in ``l_set``.  The
    increment has zero trace in exact arithmetic; if rounding pushes
    ``|Tr rho' - 1|`` beyond ``renorm_tol`` the state is renormalized and
    ``counters['renormalizations']`` incremented.
    """
    rho = np.asarray(rho, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if np.abs(h - h.conj().T).max() > 1e-12:
        raise ValueError("Hamiltonian must be Hermitian")
    ls = _as_operator_set(l_set)
    dws = np.atleast_1d(np.asarray(dw, dtype=float))
    if len(dws) != len(ls):
        raise ValueError("need one Wiener increment per operator")
    new = rho - 1j * (h @ rho - rho @ h) * dt
    for L, w in zip(ls, dws):
        L = np.asarray(L, dtype=complex)
        lr = L @ rho
        ldl = L.conj().T @ L
        new = new + (lr @ L.conj().T - 0.5 * (ldl @ rho + rho @ ldl)) * dt
        mtr = 2.0 * np.trace(lr).real
        new = new + (lr + lr.conj().T - mtr * rho) * w
    if not np.all(np.isfinite(new)):
        raise NumericalError("non-finite density matrix entries", state=rho)
    new = _hermitize(new)
    dev = abs(np.trace(new).real - 1.0)
    if dev > renorm_tol:
        new = new / np.trace(new).real
        if counters is not None:
            counters["renormalizations"] = counters.get("renormalizations", 0) + 1
    return new


def kraus_operators(h, l_set, dt):
    """Branch operators ``(I + A_{+-k}) / sqrt(N)``, ordered (+k, -k) per
    channel, with ``A_{+-k} = -iH dt - L_k'L_k dt / 2 +- L_k sqrt(dt)``."""
    h = np.asarray(h, dtype=complex)
    ls = _as_operator_set(l_set)
    n_branches = 2 * len(ls)
    c = 1.0 / math.sqrt(n_branches)
    eye = np.eye(h.shape[0], dtype=complex)
    out = []
    for L in ls:
        L = np.asarray(L, dtype=complex)
        a = -1j * h * dt - 0.5 * (L.conj().T @ L) * dt
        f = L * math.sqrt(dt)
        out.append(c * (eye + a + f))
        out.append(c * (eye + a - f))
    return out


def kraus_completeness_residual(h, l_set, dt):
    """Spectral norm of ``sum(M'M) - I`` for the branch operators."""
    ms = kraus_operators(h, l_set, dt)
    total = sum(m.conj().T @ m for m in ms)
    return float(np.linalg.norm(total - np.eye(total.shape[0]), 2))


def kraus_step(rho, h, l_set, dt, uniform_random):
    """One Kraus-map step: sample a branch, apply it, renormalize.

    Returns ``(rho', branch_index)``.  Branch probabilities are
    ``Tr(M rho M')`` renormalized by their sum (which is ``1 + O(dt^1.5)``).
    """
    rho = np.asarray(rho, dtype=complex)
    ms = kraus_operators(h, l_set, dt)
    weights = [m @ rho @ m.conj().T for m in ms]
    probs = np.array([np.trace(w).real for w in weights])
    total = probs.sum()
    if total <= 0.0:
        raise NumericalError("all Kraus branch probabilities non-positive",
                             state=rho)
    threshold = float(uniform_random) * total
    acc = 0.0
    branch = len(probs) - 1
    for i, p in enumerate(probs):
        acc += p
        if threshold < acc:
            branch = i
            break
    return _hermitize(weights[branch] / probs[branch]), branch


# ---------------------------------------------------------------------------
# Lindblad oracle
# ---------------------------------------------------------------------------

def lindblad_rhs(rho, h, l_set):
    """Right-hand side of the ensemble-averaged (noise-free) evolution."""
    out = -1j * (h @ rho - rho @ h)
    for L in _as_operator_set(l_set):
        ldl = L.conj().T @ L
        out = out + L @ rho @ L.conj().T - 0.5 * (ldl @ rho + rho @ ldl)
    return out


def lindblad_integrate(rho0, h, l_set, dt, duration, stride=1,
                       record_states=False):
    """Deterministic classical 4th-order integration of the mean state.

    A step whose trace deviation exceeds 1e-8 is rejected and retried with
    internally halved sub-steps; the total trace deviation is kept within
    1e-10 by counting renormalizations (in practice the right-hand side is
    traceless to rounding and neither path triggers).
    """
    rho = _hermitize(np.asarray(rho0, dtype=complex))
    h = np.asarray(h, dtype=complex)
    ls = [np.asarray(L, dtype=complex) for L in _as_operator_set(l_set)]
    dt = float(dt)
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    spin = _DIM_TO_SPIN[rho.shape[0]]
    n_steps = int(math.floor(float(duration) / dt))
    stride = int(stride)
    n_rec = n_steps // stride + 1
    obs = np.empty((n_rec, 4))
    states = np.empty((n_rec,) + rho.shape, dtype=complex) if record_states else None
    sys = build_spin_system(spin)
    renorms = 0
    halvings = 0
    trace_dev_max = 0.0

    def rk4(state, step):
        k1 = lindblad_rhs(state, h, ls)
        k2 = lindblad_rhs(state + 0.5 * step * k1, h, ls)
        k3 = lindblad_rhs(state + 0.5 * step * k2, h, ls)
        k4 = lindblad_rhs(state + step * k3, h, ls)
        return state + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def record(row, state):
        obs[row, 0] = np.trace(state @ sys.sx).real
        obs[row, 1] = np.trace(state @ sys.sy).real
        obs[row, 2] = np.trace(state @ sys.sz).real
        obs[row, 3] = np.sum(np.abs(state) ** 2)
        if record_states:
            states[row] = state

    for g in range(n_steps):
        if g % stride == 0:
            record(g // stride, rho)
        for attempt in range(21):
            sub = dt / (1 << attempt)
            cand = rho
            ok = True
            for _ in range(1 << attempt):
                cand = rk4(cand, sub)
                if abs(np.trace(cand).real - 1.0) > 1e-8:
                    ok = False
                    break
            if ok:
                if attempt:
                    halvings += 1
                break
        else:
            raise NumericalError("trace drift persists at minimal sub-step",
                                 step=g, state=rho)
        rho = _hermitize(cand)
        dev = abs(np.trace(rho).real - 1.0)
        trace_dev_max = max(trace_dev_max, dev)
        if dev > 1e-10:
            rho = rho / np.trace(rho).real
            renorms += 1
    if n_steps % stride == 0:
        record(n_rec - 1, rho)
    return TrajectoryRecord(
        model_kind="lindblad",
        spin=spin,
        params=None,
        stream_index=0,
        stride=stride,
        n_steps=n_steps,
        dt=dt,
        times=np.arange(n_rec) * (stride * dt),
        sx=obs[:, 0].copy(),
        sy=obs[:, 1].copy(),
        sz=obs[:, 2].copy(),
        purity=obs[:, 3].copy(),
        states=states,
        final_state=rho,
        renorm_count=renorms,
        trace_dev_max=trace_dev_max,
        min_eigenvalue=float(np.linalg.eigvalsh(rho).min()),
        extra={"halved_steps": halvings},
    )


# ---------------------------------------------------------------------------
# trajectory records
# ---------------------------------------------------------------------------

@dataclass
class TrajectoryRecord:
    """Recorded samples of one trajectory (or of the deterministic mean).

    Records exist at every step index that is a multiple of ``stride``
    (including step 0), so ``times[i] = i * stride * dt``.  ``states`` is
    ``None`` unless state recording was requested: a ``(n_rec, dim)`` float
    array for vector models or ``(n_rec, d, d)`` complex for matrix models.
    ``final_state`` is the state after the last step regardless of stride.
    """

    model_kind: str
    spin: float
    params: object
    stream_index: int
    stride: int
    n_steps: int
    dt: float
    times: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    purity: np.ndarray
    states: object
    final_state: object
    renorm_count: int = 0
    trace_dev_max: float = 0.0
    min_eigenvalue: float = math.nan
    extra: dict = field(default_factory=dict)

    @property
    def n_records(self) -> int:
        return len(self.times)

    @property
    def final_time(self) -> float:
        return self.n_steps * self.dt


@dataclass
class EnsembleResult:
    """Per-time ensemble means and standard errors over trajectories."""

    model_kind: str
    spin: float
    params: object
    n_trajectories: int
    stride: int
    times: np.ndarray
    mean_sx: np.ndarray
    sem_sx: np.ndarray
    mean_sy: np.ndarray
    sem_sy: np.ndarray
    mean_sz: np.ndarray
    sem_sz: np.ndarray
    mean_purity: np.ndarray
    sem_purity: np.ndarray
    mean_rho: np.ndarray


# ---------------------------------------------------------------------------
# trajectory driver
# ---------------------------------------------------------------------------

def _resolve_matrix_initial(initial_state):
    if isinstance(initial_state, CoherenceVector):
        rho = coherence_to_density(initial_state)
    else:
        rho = np.asarray(initial_state, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in _DIM_TO_SPIN:
        raise ValueError(f"not a supported density matrix shape: {rho.shape}")
    report = check_physical(rho)
    if not report.is_physical:
        raise ValueError(
            f"initial state is not physical (trace dev {report.trace_deviation:.2e}, "
            f"min eigenvalue {report.min_eigenvalue:.2e})"
        )
    return np.ascontiguousarray(rho)


_VECTOR_SPINS = {
    "rabi-angle": {1: 0.5},
    "coherence": {3: 0.5, 8: 1.0, 15: 1.5},
    "components": {3: 0.5, 9: 1.0},
}


def _resolve_vector_initial(model_kind, initial_state, params):
    if isinstance(initial_state, CoherenceVector):
        system = make_ito_system(model_spin(initial_state.model), model_kind, params)
        if initial_state.model == system.model:
            state = initial_state.values.astype(float).copy()
        else:
            state = system.initial_state(coherence_to_density(initial_state))
        return system, state
    arr = np.asarray(initial_state)
    if arr.ndim == 2:
        rho = _resolve_matrix_initial(arr)
        system = make_ito_system(_DIM_TO_SPIN[rho.shape[0]], model_kind, params)
        return system, system.initial_state(rho)
    arr = np.atleast_1d(arr).astype(float)
    table = _VECTOR_SPINS[model_kind]
    if arr.shape[0] not in table:
        raise ValueError(
            f"cannot infer spin for model {model_kind!r} from a state of "
            f"length {arr.shape[0]}; expected one of {sorted(table)}"
        )
    system = make_ito_system(table[arr.shape[0]], model_kind, params)
    return system, arr.copy()


def _noise_chunks(params, stream_index, n_steps, noise):
    """Yield per-chunk Wiener increment arrays (already scaled by sqrt(dt))."""
    if noise is not None:
        if noise.n_steps < n_steps or noise.n_channels != 1:
            raise ValueError("provided noise path does not cover the run")
        if not math.isclose(noise.dt, params.dt, rel_tol=0.0, abs_tol=0.0):
            raise ValueError("noise path dt differs from params.dt")
        for start in range(0, n_steps, CHUNK_STEPS):
            yield np.ascontiguousarray(
                noise.increments[start:min(start + CHUNK_STEPS, n_steps), 0]
            )
        return
    stream = GaussianStream(params.seed, stream_index)
    root = math.sqrt(params.dt)
    done = 0
    while done < n_steps:
        m = min(CHUNK_STEPS, n_steps - done)
        yield stream.normals(m) * root
        done += m


def run_trajectory(model_kind, params: ModelParams, initial_state, stride=10,
                   *, stream_index=0, record_states=False, noise=None,
                   renorm_tol=1e-12, check_positivity_every_step=False,
                   eig_floor=None):
    """Advance ``floor(duration / dt)`` steps of the chosen model.

    ``model_kind`` is one of ``matrix``, ``kraus``, ``coherence``,
    ``components``, ``rabi-angle``; the spin is inferred from the initial
    state.  Noise comes from stream ``(params.seed, stream_index)`` unless
    an explicit ``noise`` path is supplied (shared-noise comparisons).
    ``check_positivity_every_step`` extends the matrix/Kraus eigenvalue
    monitor from record steps to every step; ``eig_floor=None`` selects the
    per-stepper default (loose for the Euler matrix stepper, strict for the
    positivity-preserving Kraus map).
    """
    stride = int(stride)
    if stride < 1:
        raise ValueError("stride must be at least 1")
    n_steps = params.n_steps
    n_rec = n_steps // stride + 1
    times = np.arange(n_rec) * (stride * params.dt)
    obs = np.empty((n_rec, 4))

    if model_kind in ("matrix", "kraus"):
        return _run_matrix_kind(model_kind, params, initial_state, stride,
                                stream_index, record_states, noise,
                                renorm_tol, check_positivity_every_step,
                                eig_floor, n_steps, n_rec, times, obs)
    if model_kind in ("coherence", "components", "rabi-angle"):
        return _run_vector_kind(model_kind, params, initial_state, stride,
                                stream_index, record_states, noise,
                                n_steps, n_rec, times, obs)
    raise ValueError(f"unknown model kind {model_kind!r}")


def _run_vector_kind(model_kind, params, initial_state, stride, stream_index,
                     record_states, noise, n_steps, n_rec, times, obs):
    system, state = _resolve_vector_initial(model_kind, initial_state, params)
    states = np.empty((n_rec, system.dim)) if record_states else np.empty((1, system.dim))
    alpha, epsilon, dt = params.alpha, params.epsilon, params.dt
    done = 0
    for dw in _noise_chunks(params, stream_index, n_steps, noise):
        if system.model == "rabi-angle":
            _kernels.rabi_chunk(state, dw, alpha, epsilon, dt, done, stride,
                                obs, states, record_states)
        elif system.model == "bloch3":
            _kernels.bloch_chunk(state, dw, alpha, epsilon, dt, done, stride,
                                 obs, states, record_states)
        elif system.model == "gm8":
            _kernels.gm8_chunk(state, dw, alpha, epsilon, dt, done, stride,
                               obs, states, record_states)
        elif system.model == "su15":
            _kernels.su15_chunk(state, dw, alpha, epsilon, dt, done, stride,
                                obs, states, record_states)
        elif system.spin == 0.5:
            _kernels.spin_half_components_chunk(state, dw, alpha, epsilon, dt,
                                                done, stride, obs, states,
                                                record_states)
        else:
            _kernels.spin1_components_chunk(state, dw, alpha, epsilon, dt,
                                            done, stride,
                                            component_gram_pinv(1.0),
                                            obs, states, record_states)
        done += dw.shape[0]
        if not np.all(np.isfinite(state)):
            raise NumericalError(
                f"state left the finite regime within steps "
                f"{done - dw.shape[0]}..{done}",
                step=done, state=state.copy(),
            )
    if n_steps % stride == 0:
        sx, sy, sz = system.observables(state)
        obs[n_rec - 1] = (sx, sy, sz, system.purity(state))
        if record_states:
            states[n_rec - 1] = state
    return TrajectoryRecord(
        model_kind=model_kind,
        spin=system.spin,
        params=params,
        stream_index=stream_index,
        stride=stride,
        n_steps=n_steps,
        dt=params.dt,
        times=times,
        sx=obs[:, 0].copy(),
        sy=obs[:, 1].copy(),
        sz=obs[:, 2].copy(),
        purity=obs[:, 3].copy(),
        states=states if record_states else None,
        final_state=state.copy(),
    )


def _run_matrix_kind(model_kind, params, initial_state, stride, stream_index,
                     record_states, noise, renorm_tol, eig_every, eig_floor,
                     n_steps, n_rec, times, obs):
    if eig_floor is None:
        eig_floor = MATRIX_EIG_FLOOR if model_kind == "matrix" else KRAUS_EIG_FLOOR
    rho = _resolve_matrix_initial(initial_state).copy()
    d = rho.shape[0]
    spin = _DIM_TO_SPIN[d]
    sys = build_spin_system(spin)
    sx = np.ascontiguousarray(sys.sx)
    sy = np.ascontiguousarray(sys.sy)
    sz = np.ascontiguousarray(sys.sz)
    states = (np.empty((n_rec, d, d), dtype=complex) if record_states
              else np.empty((1, d, d), dtype=complex))
    stats = np.array([0.0, 0.0, np.inf, -1.0])
    if model_kind == "matrix":
        h = np.ascontiguousarray(hamiltonian(spin, params.epsilon))
        l = np.ascontiguousarray(measurement_operator(spin, params.alpha))
        ldag = np.ascontiguousarray(l.conj().T)
        ldl = np.ascontiguousarray(ldag @ l)
        done = 0
        for dw in _noise_chunks(params, stream_index, n_steps, noise):
            _kernels.matrix_chunk(rho, h, l, ldag, ldl, sx, sy, sz, dw,
                                  params.dt, done, stride, renorm_tol,
                                  eig_floor, eig_every, obs, states,
                                  record_states, stats)
            done += dw.shape[0]
            _raise_on_failure(stats, rho, "matrix")
    else:
        if noise is not None:
            raise ValueError("the Kraus stepper draws branch uniforms, not "
                             "Wiener noise; noise override is not supported")
        ms = kraus_operators(hamiltonian(spin, params.epsilon),
                             [measurement_operator(spin, params.alpha)],
                             params.dt)
        m_plus, m_minus = (np.ascontiguousarray(m) for m in ms)
        md_plus = np.ascontiguousarray(m_plus.conj().T)
        md_minus = np.ascontiguousarray(m_minus.conj().T)
        stream = UniformStream(params.seed, stream_index)
        done = 0
        while done < n_steps:
            m = min(CHUNK_STEPS, n_steps - done)
            us = stream.uniforms(m)
            _kernels.kraus_chunk(rho, m_plus, m_minus, md_plus, md_minus,
                                 sx, sy, sz, us, params.dt, done, stride,
                                 eig_floor, eig_every, obs, states,
                                 record_states, stats)
            done += m
            _raise_on_failure(stats, rho, "kraus")
    wmin = float(np.linalg.eigvalsh(rho).min())
    stats[2] = min(stats[2], wmin)
    if wmin < eig_floor:
        raise NumericalError(
            f"kraus stepper positivity failure at final step {n_steps}: "
            f"min eigenvalue {wmin:.3e}" if model_kind == "kraus" else
            f"matrix stepper positivity failure at final step {n_steps}: "
            f"min eigenvalue {wmin:.3e}",
            step=n_steps, state=rho.copy(),
        )
    if n_steps % stride == 0:
        _kernels._record_matrix(rho, sx, sy, sz, n_rec - 1, obs, states,
                                record_states)
    return TrajectoryRecord(
        model_kind=model_kind,
        spin=spin,
        params=params,
        stream_index=stream_index,
        stride=stride,
        n_steps=n_steps,
        dt=params.dt,
        times=times,
        sx=obs[:, 0].copy(),
        sy=obs[:, 1].copy(),
        sz=obs[:, 2].copy(),
        purity=obs[:, 3].copy(),
        states=states if record_states else None,
        final_state=rho.copy(),
        renorm_count=int(stats[0]),
        trace_dev_max=float(stats[1]),
        min_eigenvalue=float(stats[2]) if np.isfinite(stats[2]) else wmin,
    )


def _raise_on_failure(stats, rho, kind):
    if stats[3] >= 0:
        raise NumericalError(
            f"{kind} stepper physicality failure at step {int(stats[3])}: "
            f"min eigenvalue {stats[2]:.3e}",
            step=int(stats[3]), state=rho.copy(),
        )


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

def _trajectory_to_rho_series(record):
    """Per-record density matrices of a trajectory, as an (n_rec, d, d) array."""
    if record.model_kind in ("matrix", "kraus"):
        return record.states
    if record.model_kind == "rabi-angle":
        phi = record.states[:, 0]
        n = phi.shape[0]
        rho = np.empty((n, 2, 2), dtype=complex)
        c, s = np.cos(phi), np.sin(phi)
        rho[:, 0, 0] = 0.5 * (1.0 + c)
        rho[:, 1, 1] = 0.5 * (1.0 - c)
        rho[:, 0, 1] = 0.5j * s
        rho[:, 1, 0] = -0.5j * s
        return rho
    return None  # linear models: reconstruct once from the mean state


def _ensemble_block(model_kind, params, initial_state, initial_states,
                    indices, stride):
    """Run a block of trajectories and return deterministic partial sums."""
    sum_obs = None
    sumsq_obs = None
    sum_rho = None
    sum_state = None
    for i in indices:
        start = initial_states[i] if initial_states is not None else initial_state
        rec = run_trajectory(model_kind, params, start, stride,
                             stream_index=i, record_states=True)
        block_obs = np.stack([rec.sx, rec.sy, rec.sz, rec.purity], axis=1)
        if sum_obs is None:
            sum_obs = np.zeros_like(block_obs)
            sumsq_obs = np.zeros_like(block_obs)
        sum_obs += block_obs
        sumsq_obs += block_obs ** 2
        rhos = _trajectory_to_rho_series(rec)
        if rhos is not None:
            if sum_rho is None:
                sum_rho = np.zeros_like(rhos)
            sum_rho += rhos
        else:
            if sum_state is None:
                sum_state = np.zeros_like(rec.states)
            sum_state += rec.states
    return sum_obs, sumsq_obs, sum_rho, sum_state


def run_ensemble(model_kind, params: ModelParams, initial_state, n_traj,
                 stride=10, *, threads=0, initial_states=None):
    """Run ``n_traj`` independent trajectories and reduce deterministically.

    Trajectory ``i`` uses noise stream ``i`` and, when ``initial_states``
    (a length-``n_traj`` sequence) is given, its own initial state.  Blocks
    of trajectories may run on worker threads (the compiled steppers
    release the GIL), but the reduction is performed in trajectory-index
    order, so the result is independent of scheduling.  ``threads=0``
    selects the CPU count.
    """
    n_traj = int(n_traj)
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    if initial_states is not None and len(initial_states) != n_traj:
        raise ValueError("initial_states must provide one state per trajectory")
    block_size = 32
    blocks = [range(start, min(start + block_size, n_traj))
              for start in range(0, n_traj, block_size)]
    workers = threads if threads and threads > 0 else (os.cpu_count() or 1)
    workers = max(1, min(int(workers), len(blocks)))

    # resolve once so shape/spin errors surface before any work is spawned
    first = initial_states[0] if initial_states is not None else initial_state
    if model_kind in ("matrix", "kraus"):
        spin = _DIM_TO_SPIN[_resolve_matrix_initial(first).shape[0]]
    else:
        spin = _resolve_vector_initial(model_kind, first, params)[0].spin

    def job(block):
        try:
            return _ensemble_block(model_kind, params, initial_state,
                                   initial_states, block, stride)
        except NumericalError as err:
            raise NumericalError(
                f"trajectory block {block.start}..{block.stop - 1}: {err}",
                step=err.step, state=err.state,
            ) from err

    if workers == 1:
        partials = [job(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(job, blocks))

    sum_obs = sum(p[0] for p in partials)
    sumsq_obs = sum(p[1] for p in partials)
    n = float(n_traj)
    mean_obs = sum_obs / n
    if n_traj > 1:
        var = np.maximum(sumsq_obs - n * mean_obs ** 2, 0.0) / (n - 1.0)
        sem = np.sqrt(var / n)
    else:
        sem = np.zeros_like(mean_obs)

    if partials[0][2] is not None:
        mean_rho = sum(p[2] for p in partials) / n
    else:
        mean_state = sum(p[3] for p in partials) / n
        system = make_ito_system(spin, model_kind, params)
        mean_rho = np.stack([system.to_density(row) for row in mean_state])

    n_steps = params.n_steps
    n_rec = n_steps // int(stride) + 1
    times = np.arange(n_rec) * (int(stride) * params.dt)
    return EnsembleResult(
        model_kind=model_kind,
        spin=spin,
        params=params,
        n_trajectories=n_traj,
        stride=int(stride),
        times=times,
        mean_sx=mean_obs[:, 0],
        sem_sx=sem[:, 0],
        mean_sy=mean_obs[:, 1],
        sem_sy=sem[:, 1],
        mean_sz=mean_obs[:, 2],
        sem_sz=sem[:, 2],
        mean_purity=mean_obs[:, 3],
        sem_purity=sem[:, 3],
        mean_rho=mean_rho,
    )
