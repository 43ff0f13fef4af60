"""Run configuration: one flat record with every tunable, loadable from TOML."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import tomli

from .core import GaussianPrior, ModelSpec


@dataclass
class RunConfig:
    seed: int
    model: str = "ising1"  # ising1 | ising2 | ergm1 | ergm2
    rows: int = 6
    cols: int = 6
    nodes: int = 16
    prior_mean: float = 0.0
    prior_sd: float = 5.0
    # population exchange
    n_temps: int = 10  # chains are indexed 0..n_temps
    ladder_power: float = 5.0
    iterations: int = 5000
    burn_in: float = 0.1
    aux_sweeps: int = 200
    aux_thin: int = 5  # sweeps between stored auxiliary draws
    n_aux_draws: int = 200
    r: int = 100
    sigma: list = field(default_factory=lambda: [0.2])
    sigma0: list | None = None
    sigma_schedule: str = "adaptive"  # adaptive | tempered | constant
    exclude_first_draw: bool = False
    # single-chain exchange
    exchange_iterations: int = 20000
    # ABC model choice
    abc_draws: int = 500_000
    abc_quantiles: list = field(default_factory=lambda: [0.001, 0.005])
    abc_aux_sweeps: int = 200
    # simulated datasets
    n_datasets_m1: int = 10
    n_datasets_m2: int = 10
    true_theta_m1: list = field(default_factory=lambda: [0.3])
    true_theta_m2: list = field(default_factory=lambda: [0.25, 0.15])
    sim_sweeps: int = 1000
    # exact grid oracle
    grid_nodes: int = 501
    grid_sd: float = 6.0
    # I/O
    data: str | None = None
    out: str = "out"
    threads: int = 1

    def __post_init__(self):
        if self.seed is None or int(self.seed) < 0:
            raise ValueError("a non-negative seed is required")
        self.seed = int(self.seed)
        ModelSpec(self.model, self.dims)  # validates family and dims
        counts = ("n_temps", "iterations", "aux_sweeps", "aux_thin", "n_aux_draws", "r",
                  "abc_draws", "abc_aux_sweeps", "sim_sweeps", "grid_nodes", "threads",
                  "exchange_iterations")
        for name in counts:
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_datasets_m1 < 0 or self.n_datasets_m2 < 0:
            raise ValueError("dataset counts must be non-negative")
        if not 0.0 <= self.burn_in < 1.0:
            raise ValueError("burn_in is a fraction in [0, 1)")
        if not all(0.0 < q < 1.0 for q in self.abc_quantiles):
            raise ValueError("ABC quantiles must lie in (0, 1)")
        if self.ladder_power <= 0 or self.prior_sd <= 0:
            raise ValueError("ladder_power and prior_sd must be positive")
        self.sigma = [float(x) for x in _as_list(self.sigma)]
        if self.sigma0 is not None:
            self.sigma0 = [float(x) for x in _as_list(self.sigma0)]
        if min(self.sigma + (self.sigma0 or [1.0])) <= 0:
            raise ValueError("proposal scales must be positive")
        if self.sigma_schedule not in ("constant", "tempered", "adaptive"):
            raise ValueError("sigma_schedule is 'constant', 'tempered' or 'adaptive'")
        if self.exclude_first_draw and self.n_aux_draws < 2:
            raise ValueError("excluding the first auxiliary draw needs n_aux_draws >= 2")

    @property
    def dims(self) -> tuple:
        return (self.rows, self.cols) if self.model.startswith("ising") else (self.nodes,)

    @property
    def spec(self) -> ModelSpec:
        return ModelSpec(self.model, self.dims)

    def prior(self, dim: int | None = None) -> GaussianPrior:
        return GaussianPrior.isotropic(dim or self.spec.statistic_count, self.prior_sd, self.prior_mean)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        """Hash of every field that can change results (not ``out`` or ``threads``)."""
        d = {k: v for k, v in self.to_dict().items() if k not in ("out", "threads")}
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def study_ising(cls, seed: int, **kw) -> "RunConfig":
        """Ising study settings: 10x10 lattices, 5 chains, 20000 sweeps, 200+200 auxiliary."""
        base = dict(model="ising2", rows=10, cols=10, n_temps=4, iterations=20000, aux_sweeps=200,
                    n_aux_draws=200, r=100, n_datasets_m1=20, n_datasets_m2=20, abc_draws=500_000,
                    abc_aux_sweeps=200)
        base.update(kw)
        return cls(seed=seed, **base)

    @classmethod
    def study_ergm(cls, seed: int, **kw) -> "RunConfig":
        """Network study settings: 10 chains, 10000 sweeps, 1000 auxiliary sweeps, 200 draws."""
        base = dict(model="ergm2", nodes=16, n_temps=9, iterations=10000, aux_sweeps=1000, aux_thin=1,
                    n_aux_draws=200, r=100)
        base.update(kw)
        return cls(seed=seed, **base)


def _as_list(x) -> list:
    return list(x) if isinstance(x, (list, tuple)) else [x]


def load_config(path, section: str | None = None, **overrides) -> RunConfig:
    """Read a TOML file: top-level keys, then keys from ``[section]`` on top."""
    with open(path, "rb") as fh:
        doc = tomli.load(fh)
    values = {k: v for k, v in doc.items() if not isinstance(v, dict)}
    if section and isinstance(doc.get(section), dict):
        values.update(doc[section])
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "seed" not in values:
        raise ValueError("config must set a seed")
    return RunConfig(**values)
