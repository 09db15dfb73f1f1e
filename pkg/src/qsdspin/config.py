"""Experiment configuration: flat key/value documents and shipped presets.

A configuration is a plain-text document of ``key = value`` lines (``#``
starts a comment).  ``parse_config`` validates types and cross-field
compatibility and reports errors with the offending key and line number.
Presets covering the standard demonstration runs ship as named documents.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .algebra import (
    SUPPORTED_SPINS,
    CoherenceVector,
    canonical_model,
    eigenstate_labels,
    eigenstate_projector,
    maximally_mixed,
)
from .models import MODEL_KINDS, ModelParams
from .noise import initial_state_rng

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "render_config",
    "resolve_initial_state",
    "PRESETS",
    "preset_text",
]


class ConfigError(ValueError):
    """Configuration rejected; carries the offending key and line."""

    def __init__(self, message, key=None, line=None):
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"key {key!r}: "
        super().__init__(prefix + message)
        self.key = key
        self.line = line


_SPIN_ALIASES = {"1/2": 0.5, "0.5": 0.5, "1": 1.0, "1.0": 1.0,
                 "3/2": 1.5, "1.5": 1.5}

_DEFAULT_INITIAL = {0.5: "+1/2", 1.0: "-1", 1.5: "-3/2"}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved experiment description."""

    spin: float
    model_kind: str
    alpha: float
    epsilon: float = 1.0
    dt: float = 1e-3
    duration: float = 1.0
    seed: int = 0
    n_traj: int = 1
    stride: int = 10
    initial_state: str = ""
    out: str = "."

    def __post_init__(self):
        if self.spin not in SUPPORTED_SPINS:
            raise ConfigError(f"unsupported spin {self.spin}", key="spin")
        if self.model_kind not in MODEL_KINDS:
            raise ConfigError(
                f"unknown model {self.model_kind!r}; choose from "
                f"{', '.join(MODEL_KINDS)}", key="model")
        if self.model_kind == "rabi-angle" and self.spin != 0.5:
            raise ConfigError(
                "the rabi-angle model describes spin 1/2 only", key="model")
        if self.model_kind == "components" and self.spin == 1.5:
            raise ConfigError(
                "no closed component system is available for spin 3/2; "
                "use the coherence, matrix, or kraus model", key="model")
        if self.n_traj < 1:
            raise ConfigError("n_traj must be at least 1", key="n_traj")
        if self.stride < 1:
            raise ConfigError("stride must be at least 1", key="stride")
        if not self.initial_state:
            object.__setattr__(self, "initial_state",
                               _DEFAULT_INITIAL[self.spin])
        try:
            self.to_model_params()
        except ValueError as err:
            raise ConfigError(str(err)) from err
        resolve_initial_state(self)  # validate the state spec eagerly

    def to_model_params(self) -> ModelParams:
        return ModelParams(alpha=self.alpha, epsilon=self.epsilon, dt=self.dt,
                           duration=self.duration, seed=self.seed)

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)


_FIELD_PARSERS = {
    "spin": ("spin", None),
    "model": ("model_kind", None),
    "alpha": ("alpha", float),
    "epsilon": ("epsilon", float),
    "dt": ("dt", float),
    "duration": ("duration", float),
    "seed": ("seed", int),
    "n_traj": ("n_traj", int),
    "stride": ("stride", int),
    "initial_state": ("initial_state", str),
    "out": ("out", str),
}

_REQUIRED_KEYS = ("spin", "alpha", "model")


def _parse_spin(raw, line):
    value = _SPIN_ALIASES.get(raw.strip())
    if value is None:
        raise ConfigError(f"expected one of 1/2, 1, 3/2; got {raw!r}",
                          key="spin", line=line)
    return value


def parse_config(text, overrides=()) -> RunConfig:
    """Parse a flat key/value document into a validated :class:`RunConfig`.

    ``overrides`` is an optional sequence of ``key=value`` strings applied
    after the document (command-line ``--set`` flags).
    """
    fields = {}
    seen_lines = {}

    def assign(key, raw, line):
        key = key.strip()
        raw = raw.strip()
        if key not in _FIELD_PARSERS:
            raise ConfigError(f"unknown key; valid keys are "
                              f"{', '.join(sorted(_FIELD_PARSERS))}",
                              key=key, line=line)
        field_name, caster = _FIELD_PARSERS[key]
        if key == "spin":
            fields[field_name] = _parse_spin(raw, line)
        elif caster is str or caster is None:
            fields[field_name] = raw
        else:
            try:
                fields[field_name] = caster(raw)
            except ValueError:
                kind = "integer" if caster is int else "real number"
                raise ConfigError(f"expected a {kind}, got {raw!r}",
                                  key=key, line=line) from None
        seen_lines[key] = line

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        stripped = raw_line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, raw = stripped.split("=", 1)
        assign(key, raw, lineno)

    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form "
                              f"key=value")
        key, raw = item.split("=", 1)
        assign(key, raw, None)

    missing = [k for k in _REQUIRED_KEYS
               if _FIELD_PARSERS[k][0] not in fields]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    return RunConfig(**fields)


def render_config(config: RunConfig) -> str:
    """Serialize a resolved config back into the document format."""
    spin_repr = {0.5: "1/2", 1.0: "1", 1.5: "3/2"}[config.spin]
    lines = [
        f"spin = {spin_repr}",
        f"model = {config.model_kind}",
        f"alpha = {config.alpha!r}",
        f"epsilon = {config.epsilon!r}",
        f"dt = {config.dt!r}",
        f"duration = {config.duration!r}",
        f"seed = {config.seed}",
        f"n_traj = {config.n_traj}",
        f"stride = {config.stride}",
        f"initial_state = {config.initial_state}",
        f"out = {config.out}",
    ]
    return "\n".join(lines) + "\n"


def resolve_initial_state(config: RunConfig):
    """Turn the textual initial-state spec into concrete state objects.

    Returns ``("fixed", state)`` for a shared initial state, or
    ``("per-trajectory", factory)`` where ``factory(i)`` builds trajectory
    ``i``'s state (the uniform-angle draw, seeded from the dedicated
    initial-state stream so it never perturbs the dynamical noise).
    """
    spec = config.initial_state.strip()
    spin = config.spin
    if spec == "uniform-angle":
        if config.model_kind != "rabi-angle":
            raise ConfigError("uniform-angle initial states require the "
                              "rabi-angle model", key="initial_state")
        seed = config.seed

        def factory(i):
            u = initial_state_rng(seed, i).random()
            return np.array([2.0 * np.pi * u])

        return "per-trajectory", factory
    if spec == "mixed":
        if config.model_kind == "rabi-angle":
            raise ConfigError("the rabi-angle model describes pure states; "
                              "a mixed initial state cannot be represented",
                              key="initial_state")
        return "fixed", maximally_mixed(spin)
    if "," in spec:
        try:
            values = np.array([float(x) for x in spec.split(",")])
        except ValueError:
            raise ConfigError(f"could not parse coherence vector {spec!r}",
                              key="initial_state") from None
        try:
            return "fixed", CoherenceVector(canonical_model(spin), values)
        except ValueError as err:
            raise ConfigError(str(err), key="initial_state") from err
    labels = eigenstate_labels(spin)
    try:
        return "fixed", eigenstate_projector(spin, spec)
    except ValueError:
        raise ConfigError(
            f"unknown initial state {spec!r}; expected an eigenstate label "
            f"({', '.join(labels)}), 'mixed', 'uniform-angle', or a "
            f"comma-separated coherence vector", key="initial_state",
        ) from None


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

PRESETS = {
    # Rabi retardation: one long angle trajectory per measurement strength.
    "fig2": """\
spin = 1/2
model = rabi-angle
alpha = 1
epsilon = 1
dt = 0.0005
duration = 300
initial_state = +1/2
stride = 10
""",
    # Stationary angle distributions: ensemble with uniform initial angles.
    "fig3": """\
spin = 1/2
model = rabi-angle
alpha = 0.5
epsilon = 1
dt = 0.0005
duration = 300
initial_state = uniform-angle
n_traj = 16
stride = 10
""",
    # Phase-plane occupancy of a strongly measured spin 1/2.
    "fig4": """\
spin = 1/2
model = rabi-angle
alpha = 2
epsilon = 1
dt = 0.0001
duration = 100
initial_state = +1/2
stride = 10
""",
    # Spin-1 trajectory in the coherence parametrization.
    "fig5": """\
spin = 1
model = coherence
alpha = 0
epsilon = 1
dt = 0.0001
duration = 50
initial_state = -1
stride = 10
""",
    # Spin-1 residence / return-time statistics run.
    "fig6": """\
spin = 1
model = coherence
alpha = 8
epsilon = 1
dt = 0.0001
duration = 5000
initial_state = -1
stride = 100
""",
    # Spin-3/2 trajectory in the coherence parametrization.
    "fig7": """\
spin = 3/2
model = coherence
alpha = 0
epsilon = 1
dt = 0.0001
duration = 50
initial_state = -3/2
stride = 10
""",
    # Spin-3/2 residence / return-time statistics run.
    "fig8": """\
spin = 3/2
model = coherence
alpha = 8
epsilon = 1
dt = 0.0001
duration = 5000
initial_state = -3/2
stride = 100
""",
    # Purification of a maximally mixed spin 3/2 under the Kraus stepper.
    "fig9": """\
spin = 3/2
model = kraus
alpha = 3
epsilon = 1
dt = 0.0001
duration = 0.5
initial_state = mixed
stride = 10
""",
}


def preset_text(name: str) -> str:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: "
                          f"{', '.join(sorted(PRESETS))}") from None
