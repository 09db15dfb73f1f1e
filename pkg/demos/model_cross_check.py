"""Cross-checking the model formulations against each other.

The package implements the same stochastic dynamics several ways: the
density-matrix diffusion step, the positivity-preserving two-branch Kraus
map, closed Ito systems for the coherence vector, and (for spin 1/2 and
spin 1) reduced component systems.  Driven by the same Wiener path they
must tell the same story, and their ensemble mean must follow the
deterministic master equation.  This script runs the comparisons and
prints the observed gaps.

Run with ``python demos/model_cross_check.py``.
"""

import numpy as np

from qsdspin.algebra import eigenstate_projector
from qsdspin.engine import lindblad_integrate, run_ensemble, run_trajectory
from qsdspin.models import ModelParams, hamiltonian, measurement_operator
from qsdspin.noise import wiener_path


def pathwise():
    print("pathwise, shared noise (sup |<Sz>| gap to the matrix stepper):")
    for spin, label, kinds in ((0.5, "+1/2", ("coherence", "components",
                                              "rabi-angle")),
                               (1.0, "-1", ("coherence", "components")),
                               (1.5, "-3/2", ("coherence",))):
        params = ModelParams(alpha=1.0, epsilon=1.0, dt=1e-4, duration=5.0,
                             seed=2)
        noise = wiener_path(params.seed, 0, params.n_steps, 1, params.dt)
        rho0 = eigenstate_projector(spin, label)
        reference = run_trajectory("matrix", params, rho0, stride=10,
                                   noise=noise)
        for kind in kinds:
            other = run_trajectory(kind, params, rho0, stride=10,
                                   noise=noise)
            gap = np.abs(reference.sz - other.sz).max()
            print(f"  spin {spin:3g}  {kind:10s}  {gap:.2e}")
    print()


def mean_vs_master_equation():
    print("ensemble mean vs deterministic master equation (n = 600):")
    params = ModelParams(alpha=1.0, epsilon=1.0, dt=1e-3, duration=3.0,
                         seed=0)
    rho0 = eigenstate_projector(0.5, "+1/2")
    ensemble = run_ensemble("coherence", params, rho0, 600, stride=10)
    oracle = lindblad_integrate(rho0, hamiltonian(0.5, params.epsilon),
                                [measurement_operator(0.5, params.alpha)],
                                params.dt, params.duration, stride=10)
    for name in ("sx", "sy", "sz"):
        gap = np.abs(getattr(ensemble, f"mean_{name}")
                     - getattr(oracle, name)).max()
        print(f"  sup |mean <{name[0].upper()}{name[1]}> - oracle|: "
              f"{gap:.4f}")
    print()
    print("vector models reparametrize the matrix flow exactly (gaps at")
    print("rounding level); the angle model is a genuinely different")
    print("discretization, so its gap is small but finite and shrinks")
    print("with dt; noise-averaging recovers the master equation")


def main():
    pathwise()
    mean_vs_master_equation()


if __name__ == "__main__":
    main()
