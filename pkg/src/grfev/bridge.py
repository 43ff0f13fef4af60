"""Direct Bayes factors between nested models by tempering the extra parameter.

Model m2 has statistics (s1, s2) and m1 is m2 with theta2 = 0.  Chain j of
the population targets

    q(y|theta1, t_j theta2) pi(theta1|m1)^(1-t_j) pi(theta1, theta2|m2)^t_j pi(theta2)^(1-t_j) / z(theta1, t_j theta2)

so chain 0 samples pi(theta1|y, m1) (with theta2 following its prior, an
inert anchor that keeps the target proper) and chain n samples the m2
posterior.  The telescoped auxiliary draws estimate
z(theta1_n, theta2_n) / z(theta1_0, 0) and

    log BF_12 = [log q(y|theta1*) + log pi(theta1*) - log pi(theta1*|y)]
              - [log q(y|theta+) + log pi(theta+) - log pi(theta+|y)]
              + log z(theta+) / z(theta1*)

holds for any theta1* and theta+ = (theta1+, theta2+).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .core import GaussianPrior, ModelSpec, log_prior_density, logmeanexp
from .population import (
    bridge_scales,
    closest_indices,
    kde_log_density,
    make_ladder,
    retained,
    run_population,
)
from .rng import RandomStream, as_generator


def bridged_log_q(y_stats, theta1: float, theta2: float, t: float) -> float:
    """theta1 s1(y) + t theta2 s2(y)."""
    y_stats = np.asarray(y_stats, dtype=float)
    if y_stats.shape != (2,):
        raise ValueError("the bridge needs both statistics (s1, s2)")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"temperature {t} outside [0, 1]")
    return float(theta1 * y_stats[0] + t * theta2 * y_stats[1])


def bridged_log_prior(theta1: float, theta2: float, t: float, prior1: GaussianPrior,
                      prior2: GaussianPrior) -> float:
    """(1-t) log pi(theta1|m1) + t log pi(theta1, theta2|m2), without the theta2 anchor."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"temperature {t} outside [0, 1]")
    lp1 = log_prior_density([theta1], prior1)
    lp2 = log_prior_density([theta1, theta2], prior2)
    return float((1.0 - t) * lp1 + t * lp2)


def anchored_log_prior(theta1: float, theta2: float, t: float, prior1: GaussianPrior,
                       prior2: GaussianPrior) -> float:
    """The sampler's prior: the bridged prior plus (1-t) log pi(theta2|m2)."""
    anchor = log_prior_density([theta2], prior2.marginal(1))
    return bridged_log_prior(theta1, theta2, t, prior1, prior2) + (1.0 - t) * float(anchor)


def bridge_chain_priors(prior1: GaussianPrior, prior2: GaussianPrior, temps) -> list[GaussianPrior]:
    """Per-chain Gaussian priors equal (up to constants) to the anchored prior.

    With independent normal components the geometric mix of the two theta1
    priors is again normal, and the anchor makes theta2's factor exactly its
    m2 prior at every temperature.
    """
    if prior1.dim != 1 or prior2.dim != 2:
        raise ValueError("the bridge links a one-parameter and a two-parameter model")
    m1, s1 = prior1.mean[0], prior1.sd[0]
    m2, s2 = prior2.mean[0], prior2.sd[0]
    out = []
    for t in temps:
        prec = (1.0 - t) / s1**2 + t / s2**2
        mean = ((1.0 - t) * m1 / s1**2 + t * m2 / s2**2) / prec
        out.append(GaussianPrior((mean, prior2.mean[1]), (prec**-0.5, prior2.sd[1])))
    return out


def bridged_log_accept(y_stats, cur, prop, yprime_stats, t: float, prior1: GaussianPrior,
                       prior2: GaussianPrior) -> float:
    """Exchange log acceptance on the bridged target at temperature t
    (symmetric proposal, auxiliary draw at (prop1, t prop2))."""
    cur = np.asarray(cur, dtype=float)
    prop = np.asarray(prop, dtype=float)
    y_stats = np.asarray(y_stats, dtype=float)
    yprime_stats = np.asarray(yprime_stats, dtype=float)
    log_r = (bridged_log_q(y_stats, *prop, t) - bridged_log_q(y_stats, *cur, t)
             + bridged_log_q(yprime_stats, *cur, t) - bridged_log_q(yprime_stats, *prop, t)
             + anchored_log_prior(*prop, t, prior1, prior2) - anchored_log_prior(*cur, t, prior1, prior2))
    return min(0.0, float(log_r))


def assemble_log_bf(theta1_star, theta_dagger, y_stats, prior1: GaussianPrior, prior2: GaussianPrior,
                    log_z_ratio, log_post1, log_post2):
    """log BF_12 from its pieces; vectorised over leading axes.

    ``log_z_ratio`` is log z(theta+)/z(theta1*); ``log_post1`` and
    ``log_post2`` are the log posterior densities at theta1* and theta+.
    """
    y_stats = np.asarray(y_stats, dtype=float)
    t1 = np.asarray(theta1_star, dtype=float).reshape(-1, 1)
    td = np.asarray(theta_dagger, dtype=float).reshape(-1, 2)
    a = t1[:, 0] * y_stats[0] + log_prior_density(t1, prior1) - np.asarray(log_post1)
    b = td @ y_stats + log_prior_density(td, prior2) - np.asarray(log_post2)
    out = a - b + np.asarray(log_z_ratio)
    return float(out[0]) if out.size == 1 else out


@dataclass
class BayesFactorEstimate:
    log_bf_12: float
    theta1_star: np.ndarray  # (r,) m1 draws used
    theta_dagger: np.ndarray  # (r, 2) m2 draws used
    log_estimates: np.ndarray  # (r,) per-sweep log BF_12
    log_z_ratio: np.ndarray  # retained per-sweep log z(theta+)/z(theta1*)
    diagnostics: dict = field(default_factory=dict)
    m1_draws: np.ndarray | None = field(default=None, repr=False)
    m2_draws: np.ndarray | None = field(default=None, repr=False)

    @property
    def bf_12(self) -> float:
        return float(np.exp(self.log_bf_12))

    def summary(self) -> dict:
        return {
            "log_bf_12": self.log_bf_12,
            "bf_12": self.bf_12,
            "theta1_star": self.theta1_star.tolist(),
            "theta_dagger": self.theta_dagger.tolist(),
            "log_estimates": self.log_estimates.tolist(),
            "diagnostics": self.diagnostics,
        }


def bf_from_draws(draws1, draws2, log_z_ratio, y_stats, prior1: GaussianPrior, prior2: GaussianPrior, r: int):
    """Average the per-sweep BF identity over r sweeps.

    A sweep's m1 and m2 draws share one z-ratio estimate, so sweeps are
    chosen jointly: the r with the smallest sum of the two Euclidean
    distances to the respective posterior means.
    """
    draws1 = np.asarray(draws1, dtype=float).reshape(-1, 1)
    draws2 = np.asarray(draws2, dtype=float).reshape(-1, 2)
    if len(draws1) != len(draws2) or len(draws1) != len(log_z_ratio):
        raise ValueError("draw and ratio traces differ in length")
    if r > len(draws1):
        raise ValueError(f"r={r} exceeds the {len(draws1)} retained sweeps")
    dist = (np.linalg.norm(draws1 - draws1.mean(axis=0), axis=1)
            + np.linalg.norm(draws2 - draws2.mean(axis=0), axis=1))
    idx = closest_indices(dist[:, None], r, centre=np.zeros(1))
    lp1 = kde_log_density(draws1, draws1[idx])
    lp2 = kde_log_density(draws2, draws2[idx])
    per = assemble_log_bf(draws1[idx, 0], draws2[idx], y_stats, prior1, prior2,
                          np.asarray(log_z_ratio)[idx], lp1, lp2)
    per = np.atleast_1d(per)
    return logmeanexp(per), draws1[idx, 0], draws2[idx], per


def run_popx_bf(config: RunConfig, y_stats, spec: ModelSpec | None = None, rng=None,
                trace_callback=None) -> BayesFactorEstimate:
    """Estimate BF_12 for m1 = (s1) against m2 = (s1, s2) from one bridged population run.

    ``y_stats`` holds both observed statistics.
    """
    spec2 = (spec or config.spec).full()
    y_stats = np.asarray(y_stats, dtype=float)
    if y_stats.shape != (2,):
        raise ValueError("the bridge needs both observed statistics (s1, s2)")
    prior1, prior2 = config.prior(1), config.prior(2)
    ladder = make_ladder(config.n_temps, config.ladder_power)
    priors = bridge_chain_priors(prior1, prior2, ladder.temps)
    gen = as_generator(rng if rng is not None else RandomStream(config.seed).child("bridge", spec2.family.value))
    trace = run_population(spec2, y_stats, priors, bridge_scales(ladder), config, gen, trace_callback)
    keep = retained(config, config.iterations)
    draws1 = trace.theta[keep, 0, 0]
    draws2 = trace.theta[keep, -1, :]
    ratio = trace.log_ratio[keep]
    log_bf, t1, td, per = bf_from_draws(draws1, draws2, ratio, y_stats, prior1, prior2, config.r)
    diag = {
        "acceptance_rates": trace.acceptance_rates.tolist(),
        "log_z_ratio_mean": float(np.mean(ratio)),
        "log_z_ratio_sd": float(np.std(ratio)),
        "per_sweep_sd": float(np.std(per)),
        "m1_posterior_mean": float(draws1.mean()),
        "m2_posterior_mean": draws2.mean(axis=0).tolist(),
        "n_retained": int(len(draws1)),
        "seconds": trace.seconds,
        "temperatures": list(ladder.temps),
    }
    return BayesFactorEstimate(log_bf, t1, td, per, ratio, diag, draws1, draws2)
