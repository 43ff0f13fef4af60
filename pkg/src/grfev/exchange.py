"""Single-chain exchange sampler and an exact-z Metropolis-Hastings baseline."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import GaussianPrior, ModelSpec, log_prior_density
from .rng import as_generator
from .simulate import draw_stats


class ProposalKind(str, enum.Enum):
    RANDOM_WALK = "random_walk"
    NEIGHBOR_MEAN = "neighbor_mean"


@dataclass(frozen=True)
class ProposalSpec:
    scale: tuple = (0.2,)
    kind: ProposalKind = ProposalKind.RANDOM_WALK

    def __post_init__(self):
        scale = tuple(float(x) for x in np.atleast_1d(self.scale))
        if not all(s > 0 for s in scale):
            raise ValueError("proposal scale must be positive")
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "kind", ProposalKind(self.kind))

    def scale_for(self, dim: int) -> np.ndarray:
        if len(self.scale) == 1:
            return np.full(dim, self.scale[0])
        if len(self.scale) != dim:
            raise ValueError(f"proposal has {len(self.scale)} scales for {dim} parameters")
        return np.array(self.scale)


@dataclass
class ExchangeState:
    theta: np.ndarray
    theta_aux: np.ndarray
    aux_stats: np.ndarray


@dataclass
class ExchangeTrace:
    theta: np.ndarray  # (n_iter, m)
    aux_stats: np.ndarray  # (n_iter, m)
    accepted: np.ndarray  # (n_iter,) bool
    final: ExchangeState = field(repr=False)

    @property
    def acceptance_rate(self) -> float:
        return float(self.accepted.mean())


def exchange_log_accept(stats_y, theta_cur, theta_prop, stats_yprime, prior: GaussianPrior | None) -> float:
    """log acceptance probability of a symmetric exchange move.

    No partition function appears: the auxiliary draw's q-ratio stands in for
    z(theta)/z(theta').  ``prior=None`` means a flat prior.
    """
    stats_y = np.asarray(stats_y, dtype=float)
    stats_yprime = np.asarray(stats_yprime, dtype=float)
    d = np.asarray(theta_prop, dtype=float) - np.asarray(theta_cur, dtype=float)
    log_r = d @ stats_y - d @ stats_yprime
    if prior is not None:
        log_r += log_prior_density(theta_prop, prior) - log_prior_density(theta_cur, prior)
    return min(0.0, float(log_r))


@numba.njit(cache=True)
def _log_normal_sum(x, mean, sd):
    out = 0.0
    for k in range(x.shape[0]):
        z = (x[k] - mean[k]) / sd[k]
        out -= 0.5 * z * z
    return out


@numba.njit(cache=True)
def _exchange_chain(theta, aux, y_stats, kind, dims, prior_mean, prior_sd, sigma,
                    aux_sweeps, n_iter, rng):
    m = theta.shape[0]
    thetas = np.empty((n_iter, m))
    auxs = np.empty((n_iter, m))
    accepted = np.zeros(n_iter, dtype=np.bool_)
    cur = theta.copy()
    cur_aux = aux.copy()
    prev = theta.copy()
    phi = np.zeros(2)
    prop = np.empty(m)
    for it in range(n_iter):
        for k in range(m):
            prop[k] = cur[k] + sigma[k] * rng.standard_normal()
            phi[k] = prop[k]
        draw = draw_stats(kind, dims, phi, aux_sweeps, 1, 1, rng)
        log_r = _log_normal_sum(prop, prior_mean, prior_sd) - _log_normal_sum(cur, prior_mean, prior_sd)
        for k in range(m):
            log_r += (prop[k] - cur[k]) * (y_stats[k] - draw[0, k])
        if math.log(rng.random()) < log_r:
            prev[:] = cur
            cur[:] = prop
            for k in range(m):
                cur_aux[k] = draw[0, k]
            accepted[it] = True
        thetas[it] = cur
        auxs[it] = cur_aux
    return thetas, auxs, accepted, prev


def _prior_arrays(prior: GaussianPrior | None, m: int):
    if prior is None:
        return np.zeros(m), np.full(m, np.inf)
    if prior.dim != m:
        raise ValueError("prior dimension does not match the model")
    return prior.mean_array, prior.sd_array


def run_exchange(y_stats, spec: ModelSpec, prior: GaussianPrior | None, prop: ProposalSpec,
                 aux_sweeps: int, n_iter: int, rng, state: ExchangeState | None = None) -> ExchangeTrace:
    """Run ``n_iter`` exchange iterations with random-walk proposals."""
    if prop.kind != ProposalKind.RANDOM_WALK:
        raise ValueError("the single-chain sampler uses random-walk proposals")
    m = spec.statistic_count
    y_stats = np.asarray(y_stats, dtype=float)
    if y_stats.shape != (m,):
        raise ValueError(f"expected {m} observed statistics")
    if state is None:
        start = np.zeros(m) if prior is None else prior.mean_array
        state = ExchangeState(start.copy(), start.copy(), y_stats.copy())
    pm, ps = _prior_arrays(prior, m)
    thetas, auxs, acc, prev = _exchange_chain(
        spec.check_theta(state.theta), np.asarray(state.aux_stats, dtype=float), y_stats,
        spec.kind, spec.kernel_dims(), pm, ps, prop.scale_for(m), int(aux_sweeps), int(n_iter),
        as_generator(rng),
    )
    if acc.any():
        final = ExchangeState(thetas[-1].copy(), prev, auxs[-1].copy())
    else:
        final = ExchangeState(state.theta.copy(), state.theta_aux.copy(), state.aux_stats.copy())
    return ExchangeTrace(thetas, auxs, acc, final)


def exchange_step(state: ExchangeState, y_stats, spec: ModelSpec, prior: GaussianPrior | None,
                  prop: ProposalSpec, aux_sweeps: int, rng) -> ExchangeState:
    """One exchange iteration; on rejection the state is returned unchanged."""
    return run_exchange(y_stats, spec, prior, prop, aux_sweeps, 1, rng, state).final


def exact_mh_step(theta, y_stats, spec: ModelSpec, prior: GaussianPrior | None, prop: ProposalSpec,
                  z_oracle, rng) -> np.ndarray:
    """Metropolis-Hastings with the true likelihood; ``z_oracle(theta)`` returns log z."""
    gen = as_generator(rng)
    theta = spec.check_theta(theta)
    y_stats = np.asarray(y_stats, dtype=float)
    new = theta + prop.scale_for(len(theta)) * gen.standard_normal(len(theta))
    log_r = (new - theta) @ y_stats - z_oracle(new) + z_oracle(theta)
    if prior is not None:
        log_r += log_prior_density(new, prior) - log_prior_density(theta, prior)
    return new if math.log(gen.random()) < log_r else theta


def run_exact_mh(theta0, y_stats, spec: ModelSpec, prior: GaussianPrior | None, prop: ProposalSpec,
                 z_oracle, n_iter: int, rng) -> np.ndarray:
    gen = as_generator(rng)
    out = np.empty((n_iter, spec.statistic_count))
    theta = spec.check_theta(theta0)
    for it in range(n_iter):
        theta = exact_mh_step(theta, y_stats, spec, prior, prop, z_oracle, gen)
        out[it] = theta
    return out
