"""Family-independent auxiliary draws.

Compiled samplers always work with a length-2 natural parameter
``phi = (phi1, phi2)``; a one-statistic model simply has ``phi2 = 0``.  Both
statistics are always returned so that model-choice code can compare the
full vector.
"""
from __future__ import annotations

import numba
import numpy as np

from .core import KIND_ISING, ModelSpec
from .ergm import graph_draws
from .ising import lattice_draws
from .rng import as_generator


@numba.njit(cache=True)
def draw_stats(kind, dims, phi, n_sweeps, s, thin, rng):
    if kind == KIND_ISING:
        return lattice_draws(dims[0], dims[1], phi[0], phi[1], n_sweeps, s, thin, rng)
    return graph_draws(dims[0], phi[0], phi[1], n_sweeps, s, thin, rng)


def pad_phi(phi) -> np.ndarray:
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    out = np.zeros(2)
    out[: len(phi)] = phi
    return out


def simulate_stats(spec: ModelSpec, phi, n_sweeps: int, rng, s: int = 1, thin: int = 1,
                   full: bool = False) -> np.ndarray:
    """Statistics of ``s`` approximate draws from f(.|phi), shape ``(s, m)``.

    With ``full=True`` both statistics are returned even for a one-statistic
    model.
    """
    if n_sweeps < 1 or s < 1 or thin < 1:
        raise ValueError("n_sweeps, s and thin must be positive")
    phi = spec.check_theta(phi)
    out = draw_stats(spec.kind, spec.kernel_dims(), pad_phi(phi), n_sweeps, s, thin, as_generator(rng))
    return out if full else out[:, : spec.statistic_count]
