"""Evidence and Bayes factor estimation for Gibbs random fields."""
from .core import Family, GaussianPrior, ModelSpec, log_prior_density, log_q, logmeanexp, sample_prior, temper
from .config import RunConfig, load_config
from .rng import RandomStream

__all__ = [
    "Family",
    "GaussianPrior",
    "ModelSpec",
    "RandomStream",
    "RunConfig",
    "load_config",
    "log_prior_density",
    "log_q",
    "logmeanexp",
    "sample_prior",
    "temper",
]

__version__ = "0.1.0"
