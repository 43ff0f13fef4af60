"""Population exchange: tempered exchange chains that also estimate z(theta).

Chain ``j`` targets ``f(y|theta)^{t_j} pi(theta)``.  Each chain keeps the
statistics of ``s`` auxiliary draws made at its current (tempered) parameter;
successive chains' draws give importance-sampling estimates of the ratios
``z(t_{j+1} theta_{j+1}) / z(t_j theta_j)``, whose product telescopes to
``z(theta_n) / z(0)``.

The same machinery runs the nested-model bridge used for Bayes factors: only
the map from a chain's parameters to the natural parameter of its auxiliary
law changes.  That map is stored per chain as a multiplier vector ``scales``
(``t_j`` on every component for evidence, ``(1, t_j)`` for the bridge).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numba
import numpy as np

from .config import RunConfig
from .core import GaussianPrior, ModelSpec, log_prior_density, logmeanexp
from .rng import RandomStream, as_generator
from .simulate import draw_stats

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class TemperatureLadder:
    temps: tuple
    power: float

    def __post_init__(self):
        t = np.asarray(self.temps, dtype=float)
        if len(t) < 2 or t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0):
            raise ValueError("ladder must increase strictly from 0 to 1")
        object.__setattr__(self, "temps", tuple(t.tolist()))

    @property
    def n(self) -> int:
        return len(self.temps) - 1

    @property
    def array(self) -> np.ndarray:
        return np.array(self.temps)


def make_ladder(n: int, p: float = 5.0) -> TemperatureLadder:
    """t_i = (i/n)^p for i = 0..n."""
    if n < 1 or p <= 0:
        raise ValueError("need n >= 1 and p > 0")
    t = (np.arange(n + 1) / n) ** p
    t[-1] = 1.0
    return TemperatureLadder(tuple(t), float(p))


@dataclass
class ChainState:
    theta: np.ndarray
    aux_stats: np.ndarray  # (s, m)


@dataclass
class PopulationState:
    theta: np.ndarray  # (n+1, m)
    aux_stats: np.ndarray  # (n+1, s, m) statistics of draws at scales[j] * theta[j]
    scales: np.ndarray  # (n+1, m)
    iteration: int = 0

    @property
    def n_chains(self) -> int:
        return self.theta.shape[0]

    @property
    def chains(self) -> list[ChainState]:
        return [ChainState(self.theta[j], self.aux_stats[j]) for j in range(self.n_chains)]

    def natural(self, j: int) -> np.ndarray:
        return self.scales[j] * self.theta[j]

    def copy(self) -> "PopulationState":
        return PopulationState(self.theta.copy(), self.aux_stats.copy(), self.scales.copy(), self.iteration)


def evidence_scales(ladder: TemperatureLadder, m: int) -> np.ndarray:
    return np.repeat(ladder.array[:, None], m, axis=1)


def bridge_scales(ladder: TemperatureLadder) -> np.ndarray:
    return np.stack([np.ones(ladder.n + 1), ladder.array], axis=1)


def init_population(spec: ModelSpec, prior, scales: np.ndarray, s: int,
                    aux_sweeps: int, rng, thin: int = 1) -> PopulationState:
    """All chains start at their prior mean with fresh auxiliary draws."""
    gen = as_generator(rng)
    n1, m = scales.shape
    pm, _ = chain_prior_arrays(prior, n1)
    if m != spec.statistic_count or pm.shape[1] != m:
        raise ValueError("scales, prior and model disagree on the parameter dimension")
    theta = pm.copy()
    aux = np.empty((n1, s, m))
    phi = np.zeros(2)
    for j in range(n1):
        phi[:m] = scales[j] * theta[j]
        aux[j] = draw_stats(spec.kind, spec.kernel_dims(), phi, aux_sweeps, s, thin, gen)[:, :m]
    return PopulationState(theta, aux, np.ascontiguousarray(scales, dtype=float))


def proposal_mean(j: int, pop: PopulationState) -> np.ndarray:
    """Centre of the interacting proposal: midpoint of chain j-1 (already updated
    this sweep) and chain j; chain 0 uses a plain random walk."""
    if j == 0:
        return pop.theta[0].copy()
    return 0.5 * (pop.theta[j - 1] + pop.theta[j])


def propose_interacting(j: int, pop: PopulationState, sigma, rng) -> np.ndarray:
    gen = as_generator(rng)
    mean = proposal_mean(j, pop)
    return mean + np.asarray(sigma, dtype=float) * gen.standard_normal(len(mean))


def popx_log_accept(j: int, lower, cur, prop, scale, y_stats, yprime_stats, prior: GaussianPrior,
                    sigma) -> float:
    """Unclipped log acceptance ratio of chain j's move (reference for the compiled sweep).

    ``lower`` is chain j-1's parameter (ignored for j = 0, which uses a
    symmetric random walk); ``scale`` maps parameters to the natural
    parameter of the chain's auxiliary law; ``yprime_stats`` are the
    statistics of the first auxiliary draw made at ``scale * prop``.
    """
    cur, prop = np.asarray(cur, dtype=float), np.asarray(prop, dtype=float)
    scale, sigma = np.asarray(scale, dtype=float), np.asarray(sigma, dtype=float)
    d = scale * (prop - cur)
    log_r = d @ (np.asarray(y_stats, dtype=float) - np.asarray(yprime_stats, dtype=float))
    log_r += log_prior_density(prop, prior) - log_prior_density(cur, prior)
    if j > 0:
        lower = np.asarray(lower, dtype=float)
        fwd = (prop - 0.5 * (lower + cur)) / sigma
        rev = (cur - 0.5 * (lower + prop)) / sigma
        log_r += 0.5 * np.sum(fwd * fwd - rev * rev)
    return float(log_r)


@numba.njit(cache=True)
def _popx_sweep(theta, aux, scales, y_stats, prior_mean, prior_sd, sigma,
                kind, dims, aux_sweeps, thin, rng, accepted):
    n1, s, m = aux.shape
    phi = np.zeros(2)
    prop = np.empty(m)
    cur_phi = np.empty(m)
    for j in range(n1):
        cur = theta[j]
        log_h = 0.0
        if j == 0:
            for k in range(m):
                prop[k] = cur[k] + sigma[0, k] * rng.standard_normal()
        else:
            for k in range(m):
                fwd = 0.5 * (theta[j - 1, k] + cur[k])
                prop[k] = fwd + sigma[j, k] * rng.standard_normal()
                rev = 0.5 * (theta[j - 1, k] + prop[k])
                zf = (prop[k] - fwd) / sigma[j, k]
                zr = (cur[k] - rev) / sigma[j, k]
                log_h += 0.5 * (zf * zf - zr * zr)
        for k in range(m):
            phi[k] = scales[j, k] * prop[k]
            cur_phi[k] = scales[j, k] * cur[k]
        draws = draw_stats(kind, dims, phi, aux_sweeps, s, thin, rng)
        log_r = log_h
        for k in range(m):
            zp = (prop[k] - prior_mean[j, k]) / prior_sd[j, k]
            zc = (cur[k] - prior_mean[j, k]) / prior_sd[j, k]
            log_r += 0.5 * (zc * zc - zp * zp)
            # tempered likelihood ratio at y and the swapped ratio at y'_1
            log_r += (phi[k] - cur_phi[k]) * (y_stats[k] - draws[0, k])
        if math.log(rng.random()) < log_r:
            for k in range(m):
                theta[j, k] = prop[k]
            for b in range(s):
                for k in range(m):
                    aux[j, b, k] = draws[b, k]
            accepted[j] = True
        else:
            accepted[j] = False


@numba.njit(cache=True)
def _log_ratio_path(theta, aux, scales, first):
    n1, s, m = aux.shape
    total = 0.0
    terms = np.empty(s - first)
    for j in range(n1 - 1):
        mx = -np.inf
        for b in range(first, s):
            v = 0.0
            for k in range(m):
                v += (scales[j + 1, k] * theta[j + 1, k] - scales[j, k] * theta[j, k]) * aux[j, b, k]
            terms[b - first] = v
            if v > mx:
                mx = v
        acc = 0.0
        for i in range(s - first):
            acc += math.exp(terms[i] - mx)
        total += mx + math.log(acc / (s - first))
    return total


def chain_prior_arrays(prior, n_chains: int):
    """Stack a shared prior, or one Gaussian prior per chain, into (n+1, m) arrays."""
    priors = [prior] * n_chains if isinstance(prior, GaussianPrior) else list(prior)
    if len(priors) != n_chains or len({p.dim for p in priors}) != 1:
        raise ValueError("need one prior per chain, all of the same dimension")
    return (np.array([p.mean_array for p in priors]), np.array([p.sd_array for p in priors]))


def chain_sigmas(sigma, n_chains: int, m: int, sigma0=None) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    out = np.array(np.broadcast_to(sigma if sigma.ndim == 2 else sigma.reshape(-1), (n_chains, m)))
    if sigma0 is not None:
        out[0] = np.broadcast_to(np.asarray(sigma0, dtype=float), (m,))
    if not np.all(out > 0):
        raise ValueError("proposal scales must be positive")
    return out


def tempered_sigmas(sigma, prior, temps) -> np.ndarray:
    """Per-chain scales shrinking from the prior sd at t=0 to ``sigma`` at t=1.

    Chain j sees the likelihood at t_j * theta, so a likelihood of width
    ``sigma`` at t=1 has width sigma/t_j in theta; combined with the prior:
    sigma_j = (1/sd_prior^2 + t_j^2/sigma^2)^(-1/2).
    ``temps`` may be a ladder (one temperature per chain) or an ``(n+1, m)``
    array of per-component multipliers such as ``PopulationState.scales``.
    """
    sigma = np.asarray(sigma, dtype=float).reshape(1, -1)
    t = np.asarray(temps, dtype=float)
    t = t.reshape(-1, 1) if t.ndim == 1 else t
    _, sd = chain_prior_arrays(prior, t.shape[0])
    return 1.0 / np.sqrt(1.0 / sd**2 + t**2 / sigma**2)


def popx_sweep(pop: PopulationState, y_stats, spec: ModelSpec, prior, aux_sweeps: int,
               rng, sigma, sigma0=None, thin: int = 1) -> np.ndarray:
    """Update every chain once, in order j = 0..n, in place.

    The number of auxiliary draws is fixed by ``pop.aux_stats``.  Acceptance
    uses the first draw only; on acceptance the chain's parameter and all its
    stored draws change together, on rejection both stay.  Returns the
    per-chain acceptance flags.
    """
    sig = chain_sigmas(sigma, pop.n_chains, spec.statistic_count, sigma0)
    pm, ps = chain_prior_arrays(prior, pop.n_chains)
    accepted = np.zeros(pop.n_chains, dtype=np.bool_)
    _popx_sweep(pop.theta, pop.aux_stats, pop.scales, np.asarray(y_stats, dtype=float),
                pm, ps, sig, spec.kind, spec.kernel_dims(),
                int(aux_sweeps), int(thin), as_generator(rng), accepted)
    pop.iteration += 1
    return accepted


def log_z_ratio_path(pop: PopulationState, exclude_first: bool = False) -> float:
    """log of the telescoped estimate of z(natural(n)) / z(natural(0))."""
    s = pop.aux_stats.shape[1]
    if s < 1 or (exclude_first and s < 2):
        raise ValueError("not enough auxiliary draws")
    return float(_log_ratio_path(pop.theta, pop.aux_stats, pop.scales, 1 if exclude_first else 0))


def log_z_hat_path(pop: PopulationState, ladder: TemperatureLadder, spec: ModelSpec,
                   exclude_first: bool = False) -> float:
    """log z-hat(theta_n): the telescoped ratio times the closed-form z(0)."""
    if pop.n_chains != ladder.n + 1:
        raise ValueError("population and ladder sizes differ")
    if not np.allclose(pop.scales[0], 0.0):
        raise ValueError("chain 0 must sit at temperature zero")
    return log_z_ratio_path(pop, exclude_first) + spec.log_z0


# ---------------------------------------------------------------- density estimation

class DegenerateSampleError(ValueError):
    pass


def silverman_bandwidth(samples) -> np.ndarray:
    samples = np.atleast_2d(np.asarray(samples, dtype=float).T).T
    n, d = samples.shape
    if n < 2:
        raise DegenerateSampleError("kernel density estimation needs at least two samples")
    sd = samples.std(axis=0, ddof=1)
    if np.any(sd <= 0):
        raise DegenerateSampleError("a sample dimension has zero variance")
    return sd * (4.0 / ((d + 2) * n)) ** (1.0 / (d + 4))


def kde_log_density(samples, point) -> np.ndarray | float:
    """Gaussian product-kernel density estimate with Silverman bandwidths.

    ``samples`` is ``(n, d)`` (or 1-D for d = 1); ``point`` is one point or a
    ``(k, d)`` batch.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float).T).T
    n, d = samples.shape
    if d > 3:
        raise ValueError("kernel density estimation is limited to three dimensions")
    h = silverman_bandwidth(samples)
    point = np.asarray(point, dtype=float)
    single = point.ndim <= 1 and point.size == d
    pts = point.reshape(-1, d)
    out = np.empty(len(pts))
    norm = -np.sum(np.log(h)) - 0.5 * d * LOG_2PI
    for lo in range(0, len(pts), 256):
        z = (pts[lo:lo + 256, None, :] - samples[None, :, :]) / h
        out[lo:lo + 256] = logmeanexp(-0.5 * np.sum(z * z, axis=2), axis=1) + norm
    return float(out[0]) if single else out


def log_evidence_chib(theta_star, y_stats, prior: GaussianPrior, log_z_hat: float, log_post_hat: float) -> float:
    """log q(y|theta*) + log prior(theta*) - log z(theta*) - log posterior(theta*)."""
    theta_star = np.asarray(theta_star, dtype=float)
    return float(theta_star @ np.asarray(y_stats, dtype=float) + log_prior_density(theta_star, prior)
                 - log_z_hat - log_post_hat)


def closest_indices(draws, r: int, centre=None) -> np.ndarray:
    """Indices of the r draws nearest (Euclidean) to ``centre`` (default: their mean).

    Ties keep the earliest draws.
    """
    draws = np.atleast_2d(np.asarray(draws, dtype=float).T).T
    if r > len(draws):
        raise ValueError(f"asked for {r} draws but only {len(draws)} were retained")
    centre = draws.mean(axis=0) if centre is None else np.asarray(centre, dtype=float)
    dist = np.sqrt(np.sum((draws - centre) ** 2, axis=1))
    return np.argsort(dist, kind="stable")[:r]


# ---------------------------------------------------------------- full runs

@dataclass
class PopxTrace:
    theta: np.ndarray  # (I, n+1, m)
    log_ratio: np.ndarray  # (I,) log z(natural_n)/z(natural_0) per sweep
    accepted: np.ndarray  # (I, n+1)
    seconds: float
    sigma: np.ndarray | None = None  # (n+1, m) proposal scales after any adaptation

    @property
    def acceptance_rates(self) -> np.ndarray:
        return self.accepted.mean(axis=0)


def proposal_sigmas(config: RunConfig, prior, scales: np.ndarray, m: int) -> np.ndarray:
    """Per-chain proposal scales from the config's schedule."""
    n1 = scales.shape[0]
    if config.sigma_schedule in ("tempered", "adaptive"):
        sig = tempered_sigmas(np.broadcast_to(config.sigma, (m,)), prior, scales)
    else:
        sig = np.broadcast_to(np.asarray(config.sigma, dtype=float), (n1, m)).copy()
    return chain_sigmas(sig, n1, m, config.sigma0)


ADAPT_WINDOW = 50


def adapt_sigmas(window: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Refit per-chain scales to a window of sweeps, shape ``(w, n+1, m)``.

    The neighbour-mean move u' = u/2 + sigma*e on u = theta_j - theta_{j-1}
    is reversible for N(0, 4 sigma^2 / 3), so it behaves like an independence
    proposal centred on the lower chain; it works best when that law matches
    the spread of u, i.e. sigma^2 = 3/4 E[u^2].  Chain 0 is a random walk and
    gets 2.4 times its sd.  Each update is limited to a factor of 4 either way.
    """
    new = np.empty_like(sigma)
    new[0] = 2.4 * window[:, 0].std(axis=0)
    gaps = np.diff(window, axis=1)
    new[1:] = np.sqrt(0.75 * np.mean(gaps**2, axis=0))
    return np.clip(new, sigma / 4.0, sigma * 4.0)


def run_population(spec: ModelSpec, y_stats, prior, scales: np.ndarray,
                   config: RunConfig, rng, trace_callback=None) -> PopxTrace:
    """Initialise and run ``config.iterations`` sweeps, recording every sweep."""
    gen = as_generator(rng)
    m = spec.statistic_count
    y_stats = np.asarray(y_stats, dtype=float)
    if y_stats.shape != (m,):
        raise ValueError(f"expected {m} observed statistics")
    sigma = proposal_sigmas(config, prior, scales, m)
    start = time.perf_counter()
    pop = init_population(spec, prior, scales, config.n_aux_draws, config.aux_sweeps, gen, config.aux_thin)
    n_iter = config.iterations
    thetas = np.empty((n_iter, pop.n_chains, m))
    log_ratio = np.empty(n_iter)
    accepted = np.empty((n_iter, pop.n_chains), dtype=bool)
    n_adapt = int(math.floor(config.burn_in * n_iter)) if config.sigma_schedule == "adaptive" else 0
    pm, ps = chain_prior_arrays(prior, pop.n_chains)
    kind, dims = spec.kind, spec.kernel_dims()
    first = 1 if config.exclude_first_draw else 0
    if config.n_aux_draws < 1 + first:
        raise ValueError("not enough auxiliary draws")
    for i in range(n_iter):
        acc = np.zeros(pop.n_chains, dtype=np.bool_)
        _popx_sweep(pop.theta, pop.aux_stats, pop.scales, y_stats, pm, ps, sigma, kind, dims,
                    config.aux_sweeps, config.aux_thin, gen, acc)
        pop.iteration += 1
        accepted[i] = acc
        thetas[i] = pop.theta
        if i < n_adapt and (i + 1) % ADAPT_WINDOW == 0:
            sigma = adapt_sigmas(thetas[i + 1 - ADAPT_WINDOW : i + 1], sigma)
        log_ratio[i] = _log_ratio_path(pop.theta, pop.aux_stats, pop.scales, first)
        if trace_callback is not None:
            trace_callback(i, pop, accepted[i], log_ratio[i])
    return PopxTrace(thetas, log_ratio, accepted, time.perf_counter() - start, sigma)


@dataclass
class EvidenceEstimate:
    log_evidence: float
    theta_b: np.ndarray  # (r, m) draws used
    log_estimates: np.ndarray  # (r,) per-draw log evidence estimates
    posterior_mean: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    posterior_draws: np.ndarray | None = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "log_evidence": self.log_evidence,
            "posterior_mean": self.posterior_mean.tolist(),
            "per_theta": [
                {"theta": t.tolist(), "log_evidence": float(v)} for t, v in zip(self.theta_b, self.log_estimates)
            ],
            "diagnostics": self.diagnostics,
        }


def retained(config: RunConfig, n_iter: int) -> slice:
    return slice(int(math.floor(config.burn_in * n_iter)), n_iter)


def evidence_from_draws(draws, log_z_hat, y_stats, prior: GaussianPrior, r: int):
    """Average the single-point estimates over the r draws nearest the posterior mean."""
    draws = np.atleast_2d(np.asarray(draws, dtype=float).T).T
    idx = closest_indices(draws, r)
    theta_b = draws[idx]
    log_post = kde_log_density(draws, theta_b)
    y_stats = np.asarray(y_stats, dtype=float)
    per = theta_b @ y_stats + log_prior_density(theta_b, prior) - np.asarray(log_z_hat)[idx] - log_post
    return logmeanexp(per), theta_b, per, draws.mean(axis=0)


def run_popx_evidence(config: RunConfig, y_stats, spec: ModelSpec | None = None, rng=None,
                      trace_callback=None) -> EvidenceEstimate:
    """Evidence of ``spec`` (default ``config.spec``) for observed statistics ``y_stats``."""
    spec = spec or config.spec
    m = spec.statistic_count
    prior = config.prior(m)
    ladder = make_ladder(config.n_temps, config.ladder_power)
    gen = as_generator(rng if rng is not None else RandomStream(config.seed).child("popx", spec.family.value))
    trace = run_population(spec, y_stats, prior, evidence_scales(ladder, m), config, gen, trace_callback)
    keep = retained(config, config.iterations)
    draws = trace.theta[keep, -1, :]
    log_z_hat = trace.log_ratio[keep] + spec.log_z0
    log_ev, theta_b, per, mean = evidence_from_draws(draws, log_z_hat, y_stats, prior, config.r)
    diag = {
        "acceptance_rates": trace.acceptance_rates.tolist(),
        "log_z_hat_mean": float(np.mean(log_z_hat)),
        "log_z_hat_sd": float(np.std(log_z_hat)),
        "per_theta_sd": float(np.std(per)),
        "n_retained": int(len(draws)),
        "seconds": trace.seconds,
        "temperatures": list(ladder.temps),
    }
    return EvidenceEstimate(log_ev, theta_b, per, mean, diag, draws)
