"""Spin algebra, generator bases and coherence-vector parametrizations.

A spin-``j`` system (``j`` in ``{1/2, 1, 3/2}``) lives in a Hilbert space of
dimension ``d = 2j + 1``.  Density matrices can be expanded over a basis of
Hermitian, traceless, trace-orthogonal generators; the real expansion
coefficients form a *coherence vector* that evolves under real-valued
stochastic differential equations.  Three generator bases are supported:

``pauli``
    The three Pauli matrices (``d = 2``), normalised as ``Tr(s_i s_j) = 2 d_ij``.
``gell-mann``
    The eight Gell-Mann matrices (``d = 3``), same normalisation.
``su2xsu2``
    The fifteen tensor products ``sigma_a x sigma_b`` (``d = 4``) excluding the
    identity, normalised as ``Tr(S_i S_j) = 4 d_ij``.

The corresponding coherence-vector models are:

``rabi-angle``
    Single angle ``phi`` for a pure spin-1/2 state confined to the (y, z)
    great circle: ``rho = (I + cos(phi) s_z - sin(phi) s_y) / 2``.
``bloch3``
    Bloch vector ``r_i = Tr(rho s_i)``; ``rho = (I + r . s) / 2``.
``gm8``
    Components ``(s, m, u, v, k, x, y, z)``, with ``R_i = (sqrt(3)/2)
    Tr(rho l_i)`` and ``rho = (I + sqrt(3) R . l) / 3``.
``su15``
    Components ``(v, e, f, g, h, j, k, l, m, n, o, p, q, s, u)`` with
    ``s_k = Tr(rho S_k)`` and ``rho = (I + s . S) / 4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpinSystem",
    "GeneratorBasis",
    "CoherenceVector",
    "SpinComponents",
    "PhysicalityReport",
    "SUPPORTED_SPINS",
    "COHERENCE_MODELS",
    "COMPONENT_NAMES",
    "build_spin_system",
    "generator_basis",
    "canonical_model",
    "model_spin",
    "coherence_to_density",
    "density_to_coherence",
    "spin_components",
    "purity",
    "check_physical",
    "eigenstate_projector",
    "eigenstate_coherence",
    "eigenstate_labels",
    "maximally_mixed",
]

SUPPORTED_SPINS = (0.5, 1.0, 1.5)

#: coherence-vector model -> spin it parametrizes
COHERENCE_MODELS = {"rabi-angle": 0.5, "bloch3": 0.5, "gm8": 1.0, "su15": 1.5}

#: component labels, in the order used for serialization
COMPONENT_NAMES = {
    "rabi-angle": ("phi",),
    "bloch3": ("x", "y", "z"),
    "gm8": ("s", "m", "u", "v", "k", "x", "y", "z"),
    "su15": ("v", "e", "f", "g", "h", "j", "k", "l", "m", "n", "o", "p", "q", "s", "u"),
}

_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class SpinSystem:
    """Spin operators for a single spin of magnitude ``spin``.

    Attributes
    ----------
    spin : float
        Spin magnitude, one of 1/2, 1, 3/2.
    dim : int
        Hilbert-space dimension ``2 * spin + 1``.
    sx, sy, sz : ndarray
        Spin operators in the eigenbasis of ``sz`` ordered by descending
        magnetic quantum number, so ``sz = diag(spin, spin - 1, ..., -spin)``.
    sz_eigenvalues : ndarray
        Descending eigenvalues of ``sz``.
    """

    spin: float
    dim: int
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    sz_eigenvalues: np.ndarray


@dataclass(frozen=True)
class GeneratorBasis:
    """Hermitian traceless operator basis with ``Tr(G_i G_j) = c d_ij``."""

    kind: str
    dim: int
    matrices: tuple
    normalization: float


@dataclass
class CoherenceVector:
    """Real coherence-vector state of one of the supported models."""

    model: str
    values: np.ndarray

    def __post_init__(self):
        if self.model not in COHERENCE_MODELS:
            raise ValueError(f"unknown coherence model {self.model!r}")
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        expected = len(COMPONENT_NAMES[self.model])
        if self.values.shape != (expected,):
            raise ValueError(
                f"model {self.model!r} expects {expected} components, "
                f"got shape {self.values.shape}"
            )

    @property
    def spin(self) -> float:
        return COHERENCE_MODELS[self.model]


class SpinComponents(tuple):
    """Expectation values ``(sx, sy, sz)`` of the three spin operators."""

    __slots__ = ()

    def __new__(cls, sx, sy, sz):
        return tuple.__new__(cls, (float(sx), float(sy), float(sz)))

    @property
    def sx(self):
        return self[0]

    @property
    def sy(self):
        return self[1]

    @property
    def sz(self):
        return self[2]


@dataclass(frozen=True)
class PhysicalityReport:
    """Diagnostics of how close a matrix is to a valid density matrix.

    ``log_determinant`` is ``-inf`` whenever the determinant is not strictly
    positive; it tracks the approach to the boundary of state space (a pure
    state has determinant zero).  ``check_physical`` never raises.
    """

    trace_deviation: float
    hermiticity_deviation: float
    eigenvalues: np.ndarray
    min_eigenvalue: float
    determinant: float
    log_determinant: float
    is_physical: bool


_SPIN_CACHE: dict = {}
_BASIS_CACHE: dict = {}


def build_spin_system(spin) -> SpinSystem:
    """Construct the spin operators for ``spin`` in {1/2, 1, 3/2}.

    Uses the standard ladder construction: ``<m'|S+|m> =
    sqrt(s(s+1) - m(m+1))`` for ``m' = m + 1``, with the basis ordered by
    descending ``m``.
    """
    spin = float(spin)
    if spin not in SUPPORTED_SPINS:
        raise ValueError(f"unsupported spin {spin}; expected one of {SUPPORTED_SPINS}")
    if spin in _SPIN_CACHE:
        return _SPIN_CACHE[spin]
    d = int(round(2 * spin + 1))
    m = spin - np.arange(d)
    sz = np.diag(m).astype(complex)
    sp = np.zeros((d, d), dtype=complex)
    for i in range(d - 1):
        sp[i, i + 1] = math.sqrt(spin * (spin + 1) - m[i + 1] * (m[i + 1] + 1))
    sx = (sp + sp.conj().T) / 2
    sy = (sp - sp.conj().T) / 2j
    for a in (sx, sy, sz):
        a.setflags(write=False)
    m.setflags(write=False)
    sys = SpinSystem(spin=spin, dim=d, sx=sx, sy=sy, sz=sz, sz_eigenvalues=m)
    _SPIN_CACHE[spin] = sys
    return sys


def _pauli():
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return sx, sy, sz


def _gell_mann():
    g = np.zeros((8, 3, 3), dtype=complex)
    g[0, 0, 1] = g[0, 1, 0] = 1
    g[1, 0, 1] = -1j
    g[1, 1, 0] = 1j
    g[2, 0, 0] = 1
    g[2, 1, 1] = -1
    g[3, 0, 2] = g[3, 2, 0] = 1
    g[4, 0, 2] = -1j
    g[4, 2, 0] = 1j
    g[5, 1, 2] = g[5, 2, 1] = 1
    g[6, 1, 2] = -1j
    g[6, 2, 1] = 1j
    g[7] = np.diag([1, 1, -2]) / _SQRT3
    return tuple(g)


def _su2xsu2():
    sx, sy, sz = _pauli()
    eye = np.eye(2, dtype=complex)
    out = [np.kron(eye, p) for p in (sx, sy, sz)]
    for left in (sx, sy, sz):
        out.append(np.kron(left, eye))
        for right in (sx, sy, sz):
            out.append(np.kron(left, right))
    return tuple(out)


def generator_basis(kind: str) -> GeneratorBasis:
    """Return the generator basis ``kind`` in {pauli, gell-mann, su2xsu2}."""
    if kind in _BASIS_CACHE:
        return _BASIS_CACHE[kind]
    if kind == "pauli":
        mats, dim, c = _pauli(), 2, 2.0
    elif kind == "gell-mann":
        mats, dim, c = _gell_mann(), 3, 2.0
    elif kind == "su2xsu2":
        mats, dim, c = _su2xsu2(), 4, 4.0
    else:
        raise ValueError(f"unknown generator basis {kind!r}")
    mats = tuple(np.ascontiguousarray(m) for m in mats)
    for m in mats:
        m.setflags(write=False)
    basis = GeneratorBasis(kind=kind, dim=dim, matrices=mats, normalization=c)
    _BASIS_CACHE[kind] = basis
    return basis


def canonical_model(spin) -> str:
    """Full coherence-vector model for ``spin`` (bloch3 / gm8 / su15)."""
    spin = float(spin)
    return {0.5: "bloch3", 1.0: "gm8", 1.5: "su15"}[spin]


def model_spin(model: str) -> float:
    """Spin magnitude parametrized by coherence model ``model``."""
    try:
        return COHERENCE_MODELS[model]
    except KeyError:
        raise ValueError(f"unknown coherence model {model!r}") from None


def coherence_to_density(cv: CoherenceVector, sys: SpinSystem = None) -> np.ndarray:
    """Reconstruct the density matrix described by a coherence vector.

    ``sys`` is optional; when given, its dimension must match the model.
    """
    if sys is not None and sys.spin != COHERENCE_MODELS[cv.model]:
        raise ValueError(
            f"model {cv.model!r} parametrizes spin {COHERENCE_MODELS[cv.model]}, "
            f"not spin {sys.spin}"
        )
    vals = cv.values
    if cv.model == "rabi-angle":
        phi = vals[0]
        c, s = math.cos(phi), math.sin(phi)
        return 0.5 * np.array([[1 + c, 1j * s], [-1j * s, 1 - c]], dtype=complex)
    if cv.model == "bloch3":
        x, y, z = vals
        return 0.5 * np.array(
            [[1 + z, x - 1j * y], [x + 1j * y, 1 - z]], dtype=complex
        )
    if cv.model == "gm8":
        rho = np.eye(3, dtype=complex)
        for r, g in zip(vals, generator_basis("gell-mann").matrices):
            rho = rho + (_SQRT3 * r) * g
        return rho / 3
    # su15
    rho = np.eye(4, dtype=complex)
    for r, g in zip(vals, generator_basis("su2xsu2").matrices):
        rho = rho + r * g
    return rho / 4


def density_to_coherence(rho: np.ndarray, model: str) -> CoherenceVector:
    """Project a density matrix onto the coherence vector of ``model``.

    For ``rabi-angle`` the projection assumes the state lies on (or near)
    the pure-state circle in the (y, z) plane and returns
    ``phi = atan2(-<s_y>, <s_z>)``.
    """
    rho = np.asarray(rho, dtype=complex)
    dims = {"rabi-angle": 2, "bloch3": 2, "gm8": 3, "su15": 4}
    if model not in dims:
        raise ValueError(f"unknown coherence model {model!r}")
    dim = dims[model]
    if rho.shape != (dim, dim):
        raise ValueError(f"model {model!r} expects a {dim}x{dim} matrix")
    herm_dev = float(np.abs(rho - rho.conj().T).max())
    if herm_dev > 1e-10:
        raise ValueError(
            f"density matrix is not Hermitian (deviation {herm_dev:.3e}); "
            "a coherence vector only represents Hermitian states"
        )
    if model == "rabi-angle":
        sx, sy, sz = generator_basis("pauli").matrices
        y = np.trace(rho @ sy).real
        z = np.trace(rho @ sz).real
        return CoherenceVector("rabi-angle", np.array([math.atan2(-y, z)]))
    if model == "bloch3":
        vals = [np.trace(rho @ g).real for g in generator_basis("pauli").matrices]
    elif model == "gm8":
        vals = [
            (_SQRT3 / 2) * np.trace(rho @ g).real
            for g in generator_basis("gell-mann").matrices
        ]
    else:
        vals = [np.trace(rho @ g).real for g in generator_basis("su2xsu2").matrices]
    return CoherenceVector(model, np.array(vals))


def _components_from_matrix(rho: np.ndarray) -> SpinComponents:
    d = rho.shape[0]
    sys = build_spin_system({2: 0.5, 3: 1.0, 4: 1.5}[d])
    return SpinComponents(
        np.trace(rho @ sys.sx).real,
        np.trace(rho @ sys.sy).real,
        np.trace(rho @ sys.sz).real,
    )


def spin_components(state, sys: SpinSystem = None) -> SpinComponents:
    """Expectation values of (sx, sy, sz) for a state.

    Accepts either a density matrix or a :class:`CoherenceVector`; the latter
    uses closed forms linear in the components.  ``sys`` is optional and
    only validates that the state belongs to the expected spin.
    """
    if sys is not None:
        state_spin = (COHERENCE_MODELS[state.model]
                      if isinstance(state, CoherenceVector)
                      else (np.asarray(state).shape[0] - 1) / 2)
        if state_spin != sys.spin:
            raise ValueError(f"state is spin {state_spin}, expected {sys.spin}")
    if isinstance(state, CoherenceVector):
        vals = state.values
        if state.model == "rabi-angle":
            phi = vals[0]
            return SpinComponents(0.0, -0.5 * math.sin(phi), 0.5 * math.cos(phi))
        if state.model == "bloch3":
            x, y, z = vals
            return SpinComponents(0.5 * x, 0.5 * y, 0.5 * z)
        if state.model == "gm8":
            s, m, u, v, k, x, y, z = vals
            c = math.sqrt(2.0 / 3.0)
            return SpinComponents(c * (x + s), c * (m + y), u / _SQRT3 + z)
        v, e, f, g, h, j, k, l, m, n, o, p, q, s, u = vals
        return SpinComponents(
            0.5 * (h + n + _SQRT3 * v),
            0.5 * (_SQRT3 * e - j + m),
            0.5 * f + p,
        )
    return _components_from_matrix(np.asarray(state, dtype=complex))


def purity(state, sys: SpinSystem = None) -> float:
    """``Tr(rho^2)``, from the closed form when given a coherence vector."""
    del sys  # accepted for signature parity; spin is implied by the state
    if isinstance(state, CoherenceVector):
        vals = state.values
        if state.model == "rabi-angle":
            return 1.0
        if state.model == "bloch3":
            return 0.5 * (1.0 + float(vals @ vals))
        if state.model == "gm8":
            return (2.0 / 3.0) * float(vals @ vals) + 1.0 / 3.0
        return 0.25 * (1.0 + float(vals @ vals))
    rho = np.asarray(state, dtype=complex)
    return float(np.sum(np.abs(rho) ** 2))


def check_physical(
    rho: np.ndarray,
    tol: float = 1e-8,
    trace_tol: float = 1e-10,
    herm_tol: float = 1e-12,
) -> PhysicalityReport:
    """Diagnose trace, Hermiticity and positivity of a candidate state.

    Reports the trace deviation, the largest elementwise Hermiticity
    deviation, the eigenvalue spectrum, the determinant and its logarithm
    (``-inf`` if the determinant is not positive).  ``is_physical`` is true
    when the trace deviation is within ``trace_tol``, the Hermiticity
    deviation within ``herm_tol`` and all eigenvalues are at least ``-tol``.
    This function never raises on unphysical input.
    """
    eig_tol = tol
    rho = np.asarray(rho, dtype=complex)
    trace_dev = abs(np.trace(rho) - 1.0)
    herm_dev = float(np.abs(rho - rho.conj().T).max())
    eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    det = float(np.prod(eigs))
    log_det = math.log(det) if det > 0.0 else -math.inf
    ok = (
        trace_dev <= trace_tol
        and herm_dev <= herm_tol
        and float(eigs.min()) >= -eig_tol
    )
    return PhysicalityReport(
        trace_deviation=float(trace_dev),
        hermiticity_deviation=herm_dev,
        eigenvalues=eigs,
        min_eigenvalue=float(eigs.min()),
        determinant=det,
        log_determinant=log_det,
        is_physical=ok,
    )


def eigenstate_labels(spin) -> tuple:
    """Labels of the sz eigenstates in descending order, e.g. ``('+1', '0', '-1')``."""
    sys = build_spin_system(spin)
    out = []
    for m in sys.sz_eigenvalues:
        num = int(round(2 * m))
        if num % 2 == 0:
            out.append(f"{num // 2:+d}" if num else "0")
        else:
            out.append(f"{num:+d}/2")
    return tuple(out)


def _eigenstate_index(spin, label: str) -> int:
    labels = eigenstate_labels(spin)
    norm = label.strip().replace(" ", "")
    candidates = {lab: i for i, lab in enumerate(labels)}
    # accept both "+1" and "1", "+3/2" and "3/2"
    for lab, i in list(candidates.items()):
        candidates.setdefault(lab.lstrip("+"), i)
    if norm not in candidates:
        raise ValueError(
            f"unknown eigenstate {label!r} for spin {spin}; expected one of {labels}"
        )
    return candidates[norm]


def eigenstate_projector(spin, label: str) -> np.ndarray:
    """Projector ``|m><m|`` onto the named sz eigenstate."""
    sys = build_spin_system(spin)
    idx = _eigenstate_index(spin, label)
    rho = np.zeros((sys.dim, sys.dim), dtype=complex)
    rho[idx, idx] = 1.0
    return rho


def eigenstate_coherence(model: str, label: str) -> CoherenceVector:
    """Coherence vector of the named sz eigenstate in ``model``."""
    spin = model_spin(model)
    if model == "rabi-angle":
        idx = _eigenstate_index(spin, label)
        return CoherenceVector("rabi-angle", np.array([0.0 if idx == 0 else math.pi]))
    return density_to_coherence(eigenstate_projector(spin, label), model)


def maximally_mixed(spin) -> np.ndarray:
    """The maximally mixed state ``I / d``."""
    d = build_spin_system(spin).dim
    return np.eye(d, dtype=complex) / d
