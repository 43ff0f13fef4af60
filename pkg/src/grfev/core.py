"""Exponential-family Gibbs random fields: model descriptors, densities, priors.

A model has unnormalised likelihood ``q(y|theta) = exp(theta . s(y))`` where
``s`` is a short vector of sufficient statistics.  Everything is kept in the
log domain.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .rng import as_generator

LOG_2PI = math.log(2.0 * math.pi)

# kernel codes shared with the compiled samplers
KIND_ISING = 0
KIND_ERGM = 1


class Family(str, enum.Enum):
    ISING_FIRST = "ising1"
    ISING_SECOND = "ising2"
    ERGM_EDGES = "ergm1"
    ERGM_EDGES_TWOSTARS = "ergm2"


_STAT_COUNT = {
    Family.ISING_FIRST: 1,
    Family.ISING_SECOND: 2,
    Family.ERGM_EDGES: 1,
    Family.ERGM_EDGES_TWOSTARS: 2,
}


@dataclass(frozen=True)
class ModelSpec:
    """A Gibbs random field family on a fixed state space.

    ``dims`` is ``(rows, cols)`` for lattices and ``(n_nodes,)`` for graphs.
    """

    family: Family
    dims: tuple

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        want = 2 if self.is_ising else 1
        if len(dims) != want or min(dims) < 1:
            raise ValueError(f"bad dims {dims} for {self.family.value}")
        if not self.is_ising and dims[0] < 2:
            raise ValueError("a graph needs at least two nodes")

    @classmethod
    def ising(cls, rows: int, cols: int, order: int = 1) -> "ModelSpec":
        if order not in (1, 2):
            raise ValueError("neighbourhood order must be 1 or 2")
        fam = Family.ISING_FIRST if order == 1 else Family.ISING_SECOND
        return cls(fam, (rows, cols))

    @classmethod
    def ergm(cls, n: int, two_stars: bool = True) -> "ModelSpec":
        fam = Family.ERGM_EDGES_TWOSTARS if two_stars else Family.ERGM_EDGES
        return cls(fam, (n,))

    @property
    def is_ising(self) -> bool:
        return self.family in (Family.ISING_FIRST, Family.ISING_SECOND)

    @property
    def kind(self) -> int:
        return KIND_ISING if self.is_ising else KIND_ERGM

    @property
    def statistic_count(self) -> int:
        return _STAT_COUNT[self.family]

    @property
    def n_variables(self) -> int:
        """Number of binary variables: lattice sites or dyads."""
        if self.is_ising:
            return self.dims[0] * self.dims[1]
        n = self.dims[0]
        return n * (n - 1) // 2

    @property
    def log_z0(self) -> float:
        """log z(0): every configuration has weight one."""
        return self.n_variables * math.log(2.0)

    def reduced(self) -> "ModelSpec":
        """The nested one-statistic model (second statistic fixed at zero)."""
        fam = Family.ISING_FIRST if self.is_ising else Family.ERGM_EDGES
        return ModelSpec(fam, self.dims)

    def full(self) -> "ModelSpec":
        fam = Family.ISING_SECOND if self.is_ising else Family.ERGM_EDGES_TWOSTARS
        return ModelSpec(fam, self.dims)

    def kernel_dims(self) -> np.ndarray:
        return np.asarray(self.dims, dtype=np.int64)

    def check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.statistic_count,):
            raise ValueError(
                f"{self.family.value} takes {self.statistic_count} parameters, got shape {theta.shape}"
            )
        if not np.all(np.isfinite(theta)):
            raise ValueError("parameters must be finite")
        return theta


@dataclass(frozen=True)
class GaussianPrior:
    """Independent normal prior on each parameter component."""

    mean: tuple
    sd: tuple

    def __post_init__(self):
        mean = tuple(float(x) for x in np.atleast_1d(self.mean))
        sd = tuple(float(x) for x in np.atleast_1d(self.sd))
        if len(mean) != len(sd):
            raise ValueError("prior mean and sd differ in length")
        if not all(s > 0 and math.isfinite(s) for s in sd):
            raise ValueError("prior standard deviations must be positive and finite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sd", sd)

    @classmethod
    def isotropic(cls, dim: int, sd: float = 5.0, mean: float = 0.0) -> "GaussianPrior":
        return cls((mean,) * dim, (sd,) * dim)

    @property
    def dim(self) -> int:
        return len(self.mean)

    @property
    def mean_array(self) -> np.ndarray:
        return np.array(self.mean)

    @property
    def sd_array(self) -> np.ndarray:
        return np.array(self.sd)

    def marginal(self, idx) -> "GaussianPrior":
        idx = np.atleast_1d(idx)
        return GaussianPrior(self.mean_array[idx], self.sd_array[idx])


def log_q(stats, theta) -> float:
    """log q(y|theta) = theta . s(y)."""
    stats = np.asarray(stats, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if stats.shape[-1] != theta.shape[-1]:
        raise ValueError(f"statistic dimension {stats.shape[-1]} != parameter dimension {theta.shape[-1]}")
    return stats @ theta


def temper(theta, t: float) -> np.ndarray:
    """Scale parameters by an inverse temperature: f(y|theta)^t = f(y|t*theta)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"temperature {t} outside [0, 1]")
    return t * np.asarray(theta, dtype=float)


def log_prior_density(theta, prior: GaussianPrior) -> float:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != prior.dim:
        raise ValueError(f"prior has dimension {prior.dim}, theta has {theta.shape[-1]}")
    z = (theta - prior.mean_array) / prior.sd_array
    return np.sum(-0.5 * z * z - np.log(prior.sd_array) - 0.5 * LOG_2PI, axis=-1)


def sample_prior(prior: GaussianPrior, rng, size=None) -> np.ndarray:
    gen = as_generator(rng)
    shape = (prior.dim,) if size is None else (size, prior.dim)
    return prior.mean_array + prior.sd_array * gen.standard_normal(shape)


def logmeanexp(x, axis=None):
    x = np.asarray(x, dtype=float)
    mx = np.max(x, axis=axis, keepdims=True)
    out = mx + np.log(np.mean(np.exp(x - mx), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis) if axis is not None else float(out.squeeze())
