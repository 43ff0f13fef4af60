"""ABC model choice by rejection over (model, parameter, pseudo-data).

All competing models live on the same state space and their statistics are
nested, so the concatenated statistic vector is the full two-statistic
vector.  One reference table can be reused for every observed dataset; only
the distances change.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import GaussianPrior, ModelSpec
from .rng import as_generator
from .simulate import draw_stats


@dataclass(frozen=True)
class AbcDraw:
    model: int
    theta: np.ndarray
    pseudo_stats: np.ndarray
    distance: float


@dataclass
class ReferenceTable:
    models: np.ndarray  # (n,) model index
    thetas: np.ndarray  # (n, 2), nan where a model has fewer parameters
    stats: np.ndarray  # (n, 2) concatenated pseudo-statistics

    def __len__(self) -> int:
        return len(self.models)

    @property
    def scale(self) -> np.ndarray:
        """Per-coordinate sd of the pseudo-statistics (1 where constant)."""
        sd = self.stats.std(axis=0)
        return np.where(sd > 0, sd, 1.0)

    def distances(self, y_stats) -> np.ndarray:
        return abc_distance(self.stats, y_stats, self.scale)

    def draws(self, y_stats) -> list[AbcDraw]:
        d = self.distances(y_stats)
        return [AbcDraw(int(m), t[~np.isnan(t)], s, float(x))
                for m, t, s, x in zip(self.models, self.thetas, self.stats, d)]

    def to_csv(self, path, y_stats=None) -> None:
        d = self.distances(y_stats) if y_stats is not None else np.full(len(self), np.nan)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["model", "theta1", "theta2", "s1", "s2", "distance"])
            for m, t, s, x in zip(self.models, self.thetas, self.stats, d):
                w.writerow([int(m), *("" if np.isnan(v) else repr(float(v)) for v in t),
                            *(repr(float(v)) for v in s), "" if np.isnan(x) else repr(float(x))])

    @classmethod
    def from_csv(cls, path) -> "ReferenceTable":
        models, thetas, stats = [], [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                models.append(int(row["model"]))
                thetas.append([float(row[k]) if row[k] else np.nan for k in ("theta1", "theta2")])
                stats.append([float(row["s1"]), float(row["s2"])])
        return cls(np.array(models, dtype=np.int64), np.array(thetas).reshape(-1, 2),
                   np.array(stats).reshape(-1, 2))


@dataclass
class AbcResult:
    quantile: float
    tolerance: float
    accepted: np.ndarray  # indices into the reference table
    probabilities: np.ndarray  # (n_models,)

    @property
    def n_accepted(self) -> int:
        return len(self.accepted)

    def summary(self) -> dict:
        return {"quantile": self.quantile, "tolerance": self.tolerance, "n_accepted": self.n_accepted,
                "probabilities": self.probabilities.tolist()}


def abc_distance(stats, y_stats, scale) -> np.ndarray | float:
    """Euclidean distance between statistic vectors after dividing by ``scale``."""
    z = (np.asarray(stats, dtype=float) - np.asarray(y_stats, dtype=float)) / np.asarray(scale, dtype=float)
    d = np.sqrt(np.sum(z * z, axis=-1))
    return float(d) if np.ndim(d) == 0 else d


@numba.njit(cache=True)
def _reference_loop(kind, dims, n_params, prior_mean, prior_sd, n_draws, aux_sweeps, rng):
    n_models = n_params.shape[0]
    models = np.empty(n_draws, dtype=np.int64)
    thetas = np.full((n_draws, 2), np.nan)
    stats = np.empty((n_draws, 2))
    phi = np.zeros(2)
    for i in range(n_draws):
        m = int(rng.random() * n_models)
        if m == n_models:
            m -= 1
        models[i] = m
        phi[0] = 0.0
        phi[1] = 0.0
        for k in range(n_params[m]):
            phi[k] = prior_mean[m, k] + prior_sd[m, k] * rng.standard_normal()
            thetas[i, k] = phi[k]
        out = draw_stats(kind, dims, phi, aux_sweeps, 1, 1, rng)
        stats[i, 0] = out[0, 0]
        stats[i, 1] = out[0, 1]
    return models, thetas, stats


def abc_reference_table(models: list[ModelSpec], priors: list[GaussianPrior], n_draws: int,
                        aux_sweeps: int, rng) -> ReferenceTable:
    """Simulate ``n_draws`` (model, theta, statistics) triples under a uniform model prior.

    Models must share the state space and nest their statistics (the first
    k statistics of the largest model).
    """
    if n_draws < 1 or aux_sweeps < 1:
        raise ValueError("n_draws and aux_sweeps must be positive")
    if len(models) != len(priors) or not models:
        raise ValueError("need one prior per model")
    kinds = {(m.kind, m.dims) for m in models}
    if len(kinds) != 1:
        raise ValueError("models must share one state space")
    n_params = np.array([m.statistic_count for m in models], dtype=np.int64)
    pm = np.zeros((len(models), 2))
    ps = np.ones((len(models), 2))
    for i, (m, p) in enumerate(zip(models, priors)):
        if p.dim != m.statistic_count:
            raise ValueError(f"prior {i} has the wrong dimension")
        pm[i, : p.dim] = p.mean_array
        ps[i, : p.dim] = p.sd_array
    spec = models[0]
    mods, thetas, stats = _reference_loop(spec.kind, spec.kernel_dims(), n_params, pm, ps, int(n_draws),
                                          int(aux_sweeps), as_generator(rng))
    return ReferenceTable(mods, thetas, stats)


def select_tolerance(distances, quantile: float) -> float:
    """The ceil(quantile * n)-th smallest distance."""
    d = np.asarray(distances, dtype=float).ravel()
    if d.size == 0:
        raise ValueError("no distances")
    if not 0.0 < quantile <= 1.0:
        raise ValueError("quantile must lie in (0, 1]")
    k = max(1, math.ceil(quantile * d.size - 1e-9))
    return float(np.partition(d, k - 1)[k - 1])


def posterior_model_prob(models, distances, epsilon: float, n_models: int = 2) -> np.ndarray:
    """Share of each model among draws with distance <= epsilon."""
    models = np.asarray(models)
    keep = np.asarray(distances) <= epsilon
    if not keep.any():
        raise ValueError("no draws accepted at this tolerance")
    return np.bincount(models[keep], minlength=n_models)[:n_models] / keep.sum()


def abc_model_choice(table: ReferenceTable, y_stats, quantiles=(0.001, 0.005),
                     n_models: int = 2) -> dict[float, AbcResult]:
    """Model probabilities for one dataset at each tolerance quantile.

    Each level accepts the ceil(q n) nearest draws, all within the tolerance
    ``select_tolerance(d, q)``; draws tied at the tolerance are taken in
    table order, which is random because the table rows are independent.
    """
    d = table.distances(y_stats)
    order = np.argsort(d, kind="stable")
    out = {}
    for q in quantiles:
        eps = select_tolerance(d, q)
        # discrete statistics tie often; keep exactly k draws, ties at eps in table order
        acc = np.sort(order[: max(1, math.ceil(q * len(d) - 1e-9))])
        probs = np.bincount(table.models[acc], minlength=n_models)[:n_models] / len(acc)
        out[q] = AbcResult(float(q), eps, acc, probs)
    return out
