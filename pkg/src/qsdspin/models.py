"""Drift and diffusion coefficients of the monitored-spin trajectory models.

All models describe the same physical situation: a spin driven coherently
around the x axis at rate ``epsilon`` (Hamiltonian ``epsilon * Sx``) while
its z component is monitored continuously with strength ``alpha``
(measurement operator ``alpha * Sz``).  The diffusion unravelling turns the
ensemble-level dissipative evolution into a nonlinear Ito equation per
trajectory, driven by a single real Wiener process.

Besides the density-matrix form (handled in :mod:`.engine`), the state can
be propagated through closed real-valued systems:

``rabi-angle`` (spin 1/2)
    One angle on the pure-state circle in the (y, z) plane,
    ``d phi = (epsilon - alpha^2 sin(2 phi) / 4) dt - alpha sin(phi) dW``.
``bloch3`` / ``components`` (spin 1/2)
    The Bloch vector, or equivalently the three spin expectations.
``gm8`` (spin 1)
    Eight Gell-Mann coherence components ``(s, m, u, v, k, x, y, z)``.
``components`` (spin 1)
    Nine reals: the moments ``(<Sz>, <Sx>, <Sy>, <Sy^2>, <Sz^2>,
    <{Sy,Sz}>, <{Sz,Sx}>)`` plus the complex ``<SxSySz>`` stored as a real
    pair.  ``SxSySz`` is anti-Hermitian for spin 1, so the real part is
    identically zero on physical states; it is still propagated.
``su15`` (spin 3/2)
    Fifteen components over the su(2) x su(2) product basis.

Every coefficient function takes the state and a :class:`ModelParams` and
returns ``(drift, diffusion)`` of the same shape as the state, for a single
noise channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import (
    COMPONENT_NAMES,
    CoherenceVector,
    build_spin_system,
    coherence_to_density,
    density_to_coherence,
    purity,
    spin_components,
)

__all__ = [
    "ModelParams",
    "ItoSystem",
    "COMPONENT_STATE_NAMES",
    "MODEL_KINDS",
    "hamiltonian",
    "measurement_operator",
    "rabi_angle_coefficients",
    "spin_half_bloch_coefficients",
    "spin_half_component_coefficients",
    "spin1_coherence_coefficients",
    "spin1_component_coefficients",
    "spin32_coherence_coefficients",
    "spin_half_purity_increment",
    "component_operators",
    "density_to_component_state",
    "component_state_to_density",
    "make_ito_system",
]

_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)

#: run-model kinds accepted by the trajectory drivers
MODEL_KINDS = ("matrix", "kraus", "coherence", "components", "rabi-angle")

#: spin -> component-model state labels, in serialization order
COMPONENT_STATE_NAMES = {
    0.5: ("sz", "sx", "sy"),
    1.0: ("sz", "sx", "sy", "syy", "szz", "syz", "szx", "cxyz_re", "cxyz_im"),
}


@dataclass(frozen=True)
class ModelParams:
    """Physical and numerical parameters of a run.

    Attributes
    ----------
    alpha : float
        Measurement strength (Lindblad operator ``alpha * Sz``).
    epsilon : float
        Coherent drive rate (Hamiltonian ``epsilon * Sx``).  May be zero
        only in measurement-only runs (``alpha > 0``).
    dt : float
        Integration time step.
    duration : float
        Total integration time; the number of steps is
        ``floor(duration / dt)``.  A zero duration yields a record holding
        only the initial state.
    seed : int
        Base seed (64-bit unsigned) for the per-trajectory noise streams.
    """

    alpha: float
    epsilon: float
    dt: float = 1e-3
    duration: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0.0:
            raise ValueError("alpha must be non-negative")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be non-negative")
        if self.epsilon == 0.0 and self.alpha == 0.0:
            raise ValueError("epsilon may be zero only in measurement-only "
                             "runs (alpha > 0)")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.duration < 0.0:
            raise ValueError("duration must be non-negative")
        if self.duration > 0.0 and self.dt > self.duration:
            raise ValueError("dt must not exceed duration")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.duration / self.dt))


def hamiltonian(spin, epsilon) -> np.ndarray:
    """Coherent drive ``epsilon * Sx``."""
    return float(epsilon) * build_spin_system(spin).sx


def measurement_operator(spin, alpha) -> np.ndarray:
    """Monitoring operator ``alpha * Sz``."""
    return float(alpha) * build_spin_system(spin).sz


# ---------------------------------------------------------------------------
# spin 1/2
# ---------------------------------------------------------------------------

def rabi_angle_coefficients(phi, params):
    """Scalar drift/diffusion of the Rabi angle.

    The angle parametrizes the pure-state circle
    ``(<Sy>, <Sz>) = (-sin(phi), cos(phi)) / 2``; measurement noise
    vanishes at the eigenstates ``phi = 0, pi``.
    """
    alpha, epsilon = params.alpha, params.epsilon
    drift = epsilon - 0.25 * alpha * alpha * math.sin(2.0 * phi)
    diffusion = -alpha * math.sin(phi)
    return drift, diffusion


def spin_half_bloch_coefficients(r, params):
    """Bloch vector ``(x, y, z)`` with ``r_i = Tr(rho sigma_i)``."""
    x, y, z = r
    alpha, epsilon = params.alpha, params.epsilon
    a2 = alpha * alpha
    drift = np.array([-0.5 * a2 * x, -epsilon * z - 0.5 * a2 * y, epsilon * y])
    diffusion = np.array([-alpha * z * x, -alpha * z * y, alpha * (1.0 - z * z)])
    return drift, diffusion


def spin_half_component_coefficients(state, params):
    """Spin expectations ordered ``(<Sz>, <Sx>, <Sy>)``."""
    sz, sx, sy = state
    alpha, epsilon = params.alpha, params.epsilon
    a2 = alpha * alpha
    drift = np.array([epsilon * sy, -0.5 * a2 * sx, -epsilon * sz - 0.5 * a2 * sy])
    diffusion = np.array(
        [
            2.0 * alpha * (0.25 - sz * sz),
            -2.0 * alpha * sz * sx,
            -2.0 * alpha * sz * sy,
        ]
    )
    return drift, diffusion


def spin_half_purity_increment(r, purity_value, params, dw):
    """Ito increment of ``Tr(rho^2)`` for monitored spin 1/2.

    With ``r_z`` the z Bloch component, the purity obeys
    ``dP = alpha^2 (1 - r_z^2)(1 - P) dt + 2 alpha r_z (1 - P) dW``:
    non-decreasing on average, frozen exactly at ``P = 1``.
    """
    rz = r[2]
    alpha = params.alpha
    gap = 1.0 - purity_value
    return (alpha * alpha * (1.0 - rz * rz) * gap * params.dt
            + 2.0 * alpha * rz * gap * dw)


# ---------------------------------------------------------------------------
# spin 1
# ---------------------------------------------------------------------------

def spin1_coherence_coefficients(R, params):
    """Gell-Mann coherence components ``(s, m, u, v, k, x, y, z)``."""
    s, m, u, v, k, x, y, z = R
    alpha, e = params.alpha, params.epsilon
    a2 = alpha * alpha
    drift = np.array(
        [
            e * k / _SQRT2 - 0.5 * a2 * s,
            -e * (2.0 * u + v) / _SQRT2 - 0.5 * a2 * m,
            e * (2.0 * m - y) / _SQRT2,
            e * (m - y) / _SQRT2 - 2.0 * a2 * v,
            e * (-s + x) / _SQRT2 - 2.0 * a2 * k,
            -e * k / _SQRT2 - 0.5 * a2 * x,
            e * (u + v - _SQRT3 * z) / _SQRT2 - 0.5 * a2 * y,
            e * math.sqrt(1.5) * y,
        ]
    )
    minus = -3.0 + 2.0 * _SQRT3 * u + 6.0 * z
    plus = 3.0 + 2.0 * _SQRT3 * u + 6.0 * z
    inner = _SQRT3 * u + 3.0 * z
    diffusion = np.array(
        [
            -alpha * (s / 3.0) * minus,
            -alpha * (m / 3.0) * minus,
            alpha / _SQRT3 * (1.0 - 2.0 * u * u + _SQRT3 * u * (1.0 - 2.0 * z) + z),
            -(2.0 / 3.0) * alpha * v * inner,
            -(2.0 / 3.0) * alpha * k * inner,
            -alpha * (x / 3.0) * plus,
            -alpha * (y / 3.0) * plus,
            -(alpha / 3.0) * (-1.0 + 2.0 * z) * (3.0 + inner),
        ]
    )
    return drift, diffusion


def spin1_component_coefficients(state, params):
    """Spin-1 moment system, nine reals.

    State order: ``<Sz>, <Sx>, <Sy>, <Sy^2>, <Sz^2>, <{Sy,Sz}>, <{Sz,Sx}>,
    Re<SxSySz>, Im<SxSySz>``.  The complex ``<SxSySz>`` equation is split
    into its real pair; since the operator is anti-Hermitian for spin 1,
    the real part is zero on physical states and stays zero (both its
    drift and diffusion are proportional to it), while the imaginary part
    feeds the ``<Sy^2>`` drift.

    The one second moment absent from the state is ``<{Sx,Sy}>/2``.  Every
    equation except the ``<{Sz,Sx}>`` drift is an exact linear image of the
    density-matrix flow for arbitrary states; that one omits the drive
    coupling ``2 epsilon <{Sx,Sy}>/2``.  The omitted moment vanishes
    identically on the mirror-symmetric sector (states invariant under
    conjugation by ``diag(-1, 1, -1)`` composed with complex conjugation)
    that contains every z eigenstate and is preserved pathwise by the
    dynamics, so the system is closed on its intended domain.
    """
    sz, sx, sy, syy, szz, syz, szx, cr, ci = state
    alpha, e = params.alpha, params.epsilon
    a2 = alpha * alpha
    drift = np.array(
        [
            e * sy,
            -0.5 * a2 * sx,
            -e * sz - 0.5 * a2 * sy,
            -e * syz - a2 * (-ci + szz + syy - 1.0),
            e * syz,
            2.0 * e * (syy - szz) - 0.5 * a2 * syz,
            -0.5 * a2 * szx,
            -2.0 * a2 * cr,
            e * syz + a2 * (szz - 2.0 * ci),
        ]
    )
    diffusion = np.array(
        [
            2.0 * alpha * (szz - sz * sz),
            alpha * (szx - 2.0 * sz * sx),
            alpha * (syz - 2.0 * sz * sy),
            alpha * sz * (1.0 - 2.0 * syy),
            2.0 * alpha * sz * (1.0 - szz),
            alpha * (sy - 2.0 * sz * syz),
            alpha * (sx - 2.0 * sz * szx),
            -2.0 * alpha * sz * cr,
            alpha * sz * (1.0 - 2.0 * ci),
        ]
    )
    return drift, diffusion


# ---------------------------------------------------------------------------
# spin 3/2
# ---------------------------------------------------------------------------

def spin32_coherence_coefficients(s15, params):
    """Product-basis components ``(v, e, f, g, h, j, k, l, m, n, o, p, q, s, u)``.

    As usually printed, the drive terms of this system carry the opposite
    sign (the image of the dynamics under a pi rotation about z, which
    mirrors ``<Sx>`` and ``<Sy>`` but leaves z-axis observables and purity
    unchanged).  The sign of the drive is flipped here so that shared-noise
    runs agree with the density-matrix unravelling in every observable, not
    just along z.
    """
    v, e, f, g, h, j, k, l, m, n, o, p, q, s, u = s15
    alpha, ep = params.alpha, -params.epsilon
    a2 = alpha * alpha
    fp = f + 2.0 * p
    drift = np.array(
        [
            -ep * o - 0.5 * a2 * v,
            ep * (_SQRT3 * f + k) - 0.5 * a2 * e,
            -ep * (_SQRT3 * e + j - m),
            -ep * s - 2.0 * a2 * g,
            -0.5 * a2 * (5.0 * h - 4.0 * n),
            ep * (f + _SQRT3 * k - p) - 0.5 * a2 * (5.0 * j + 4.0 * m),
            -ep * (e + _SQRT3 * j) - 2.0 * a2 * k,
            ep * q - 2.0 * a2 * l,
            ep * (-f + p) - 0.5 * a2 * (4.0 * j + 5.0 * m),
            ep * _SQRT3 * o + a2 * (2.0 * h - 2.5 * n),
            ep * (-_SQRT3 * n + v) - 2.0 * a2 * o,
            ep * (j - m),
            -ep * l - 0.5 * a2 * q,
            ep * (g + _SQRT3 * u) - 0.5 * a2 * s,
            -ep * _SQRT3 * s,
        ]
    )
    diffusion = np.array(
        [
            alpha * (2.0 * q - v * fp),
            alpha * (2.0 * s - e * fp),
            -alpha * (-1.0 + f * f + 2.0 * f * p - 2.0 * u),
            alpha * (k - g * fp),
            -alpha * h * fp,
            -alpha * j * fp,
            alpha * (g - k * fp),
            alpha * (o - l * fp),
            -alpha * m * fp,
            -alpha * n * fp,
            alpha * (l - o * fp),
            alpha * (2.0 - p * fp + u),
            -alpha * (f * q + 2.0 * p * q - 2.0 * v),
            alpha * (2.0 * e - s * fp),
            alpha * (2.0 * f + p - u * fp),
        ]
    )
    return drift, diffusion


# ---------------------------------------------------------------------------
# component-state conversions
# ---------------------------------------------------------------------------

_COMPONENT_CACHE: dict = {}


def _component_tables(spin):
    spin = float(spin)
    if spin in _COMPONENT_CACHE:
        return _COMPONENT_CACHE[spin]
    sys = build_spin_system(spin)
    sx, sy, sz = sys.sx, sys.sy, sys.sz
    if spin == 0.5:
        ops = (sz, sx, sy)
    elif spin == 1.0:
        xyz = sx @ sy @ sz
        ops = (
            sz,
            sx,
            sy,
            sy @ sy,
            sz @ sz,
            sy @ sz + sz @ sy,
            sz @ sx + sx @ sz,
            (xyz + xyz.conj().T) / 2,
            (xyz - xyz.conj().T) / 2j,
        )
    else:
        raise ValueError(f"no component model for spin {spin}")
    basis = [np.eye(sys.dim, dtype=complex)] + [np.asarray(o) for o in ops]
    n = len(basis)
    gram = np.empty((n, n))
    for i, a in enumerate(basis):
        for j, b in enumerate(basis):
            gram[i, j] = np.trace(a @ b).real
    # SxSySz is anti-Hermitian for spin 1, so its Hermitian part is the zero
    # operator and the gram matrix is singular; the pseudo-inverse recovers
    # the unique reconstruction on consistent moment vectors.
    tables = (ops, basis, np.linalg.pinv(gram))
    _COMPONENT_CACHE[spin] = tables
    return tables


def component_operators(spin):
    """Hermitian operators whose expectations form the component state."""
    return _component_tables(spin)[0]


def component_gram_pinv(spin) -> np.ndarray:
    """Pseudo-inverse of the Gram matrix of ``(identity, component ops)``.

    With ``t = (1, state)`` the reconstructed purity is the quadratic form
    ``t . pinv(G) . t``.
    """
    return _component_tables(spin)[2]


def density_to_component_state(rho, spin) -> np.ndarray:
    """Moments of the component model evaluated on a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    return np.array([np.trace(rho @ o).real for o in component_operators(spin)])


def component_state_to_density(state, spin) -> np.ndarray:
    """Reconstruct the density matrix with the given component moments.

    For spin 1/2 the identity plus the component operators span the
    Hermitian matrices, so the reconstruction is exact for any state.  The
    spin-1 set leaves exactly one direction uncovered, the ``{Sx,Sy}/2``
    moment, which is zero on the mirror-symmetric sector the model is
    defined on; there the reconstruction is again exact.
    """
    _, basis, gram_pinv = _component_tables(spin)
    target = np.concatenate(([1.0], np.asarray(state, dtype=float)))
    coeffs = gram_pinv @ target
    rho = np.zeros_like(basis[0])
    for c, b in zip(coeffs, basis):
        rho = rho + c * b
    return rho


# ---------------------------------------------------------------------------
# assembled Ito systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ItoSystem:
    """A closed real-valued Ito system equivalent to one trajectory model.

    Attributes
    ----------
    kind : str
        ``rabi-angle``, ``coherence`` or ``components``.
    model : str
        Concrete parametrization (``rabi-angle``, ``bloch3``, ``gm8``,
        ``su15``, ``components``).
    spin : float
        Spin magnitude.
    state_names : tuple of str
        Component labels in state-vector order.
    params : ModelParams
        Bound physical parameters.
    n_channels : int
        Number of independent Wiener channels (1 for all shipped models).
    """

    kind: str
    model: str
    spin: float
    state_names: tuple
    params: ModelParams
    n_channels: int = 1

    @property
    def dim(self) -> int:
        return len(self.state_names)

    def coefficients(self, state):
        """``(drift, diffusion)`` of the bound model, both shape ``(dim,)``."""
        if self.model == "rabi-angle":
            a, b = rabi_angle_coefficients(state[0], self.params)
            return np.array([a]), np.array([b])
        if self.model == "bloch3":
            return spin_half_bloch_coefficients(state, self.params)
        if self.model == "gm8":
            return spin1_coherence_coefficients(state, self.params)
        if self.model == "su15":
            return spin32_coherence_coefficients(state, self.params)
        if self.spin == 0.5:
            return spin_half_component_coefficients(state, self.params)
        return spin1_component_coefficients(state, self.params)

    def evaluate(self, state):
        """Coefficients in generic multi-channel form ``(A, B)``,
        with ``B`` of shape ``(dim, n_channels)``."""
        drift, diffusion = self.coefficients(np.asarray(state, dtype=float))
        return drift, diffusion.reshape(self.dim, self.n_channels)

    def initial_state(self, rho) -> np.ndarray:
        """Project a density matrix onto this parametrization.

        The angle parametrization covers only pure states on the y-z great
        circle; anything else is rejected rather than silently projected.
        """
        rho = np.asarray(rho, dtype=complex)
        if self.model == "components":
            return density_to_component_state(rho, self.spin)
        if self.model == "rabi-angle":
            purity_value = float(np.sum(np.abs(rho) ** 2).real)
            rx = float(np.trace(rho @ build_spin_system(self.spin).sx).real)
            if purity_value < 1.0 - 1e-9 or abs(rx) > 1e-9:
                raise ValueError(
                    "the rabi-angle model represents pure states with "
                    f"<Sx> = 0 only; got purity {purity_value:.6f}, "
                    f"<Sx> {rx:.3e}"
                )
        return density_to_coherence(rho, self.model).values

    def to_density(self, state) -> np.ndarray:
        if self.model == "components":
            return component_state_to_density(state, self.spin)
        return coherence_to_density(CoherenceVector(self.model, np.asarray(state, dtype=float)))

    def observables(self, state):
        """``(<Sx>, <Sy>, <Sz>)`` as closed linear/trigonometric forms."""
        if self.model == "components":
            return float(state[1]), float(state[2]), float(state[0])
        return tuple(spin_components(CoherenceVector(self.model, np.asarray(state, dtype=float))))

    def purity(self, state) -> float:
        if self.model == "components":
            t = np.concatenate(([1.0], np.asarray(state, dtype=float)))
            return float(t @ component_gram_pinv(self.spin) @ t)
        return purity(CoherenceVector(self.model, np.asarray(state, dtype=float)))


def make_ito_system(spin, kind: str, params: ModelParams) -> ItoSystem:
    """Build the Ito system for ``kind`` in {rabi-angle, coherence, components}."""
    spin = float(spin)
    if kind == "rabi-angle":
        if spin != 0.5:
            raise ValueError("the rabi-angle model requires spin 1/2")
        return ItoSystem(kind, "rabi-angle", 0.5, COMPONENT_NAMES["rabi-angle"], params)
    if kind == "coherence":
        model = {0.5: "bloch3", 1.0: "gm8", 1.5: "su15"}[spin]
        return ItoSystem(kind, model, spin, COMPONENT_NAMES[model], params)
    if kind == "components":
        if spin not in COMPONENT_STATE_NAMES:
            raise ValueError(f"no component model for spin {spin}")
        return ItoSystem(kind, "components", spin, COMPONENT_STATE_NAMES[spin], params)
    raise ValueError(f"unknown Ito model kind {kind!r}")
