"""Ising lattices with free boundaries.

Sites are addressed column-major (top to bottom within a column, columns left
to right).  Each unordered neighbour pair is counted once in the statistics:
``s1`` sums ``y_i y_j`` over horizontal and vertical pairs and ``s2`` over
diagonal pairs.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import logsumexp

from .core import Family, GaussianPrior, ModelSpec, log_prior_density
from .rng import as_generator

MAX_BRUTE_SITES = 20
MAX_TRANSFER_ROWS = 14


@dataclass
class LatticeConfig:
    spins: np.ndarray  # (rows, cols), entries in {-1, +1}

    def __post_init__(self):
        sp = np.asarray(self.spins)
        if sp.ndim != 2 or sp.size == 0:
            raise ValueError("spins must be a non-empty 2-D array")
        if not np.all((sp == 1) | (sp == -1)):
            raise ValueError("spins must be -1 or +1")
        self.spins = np.ascontiguousarray(sp, dtype=np.int8)

    @classmethod
    def from_flat(cls, values, rows: int, cols: int) -> "LatticeConfig":
        """Build from a column-major vector of length rows*cols."""
        values = np.asarray(values)
        if values.size != rows * cols:
            raise ValueError(f"expected {rows * cols} spins, got {values.size}")
        return cls(values.reshape((rows, cols), order="F"))

    @property
    def rows(self) -> int:
        return self.spins.shape[0]

    @property
    def cols(self) -> int:
        return self.spins.shape[1]

    @property
    def flat(self) -> np.ndarray:
        return self.spins.ravel(order="F")

    def __eq__(self, other):
        return isinstance(other, LatticeConfig) and np.array_equal(self.spins, other.spins)


def pair_counts(rows: int, cols: int) -> tuple[int, int]:
    """(first-order pairs, diagonal pairs) on a free-boundary lattice."""
    return 2 * rows * cols - rows - cols, 2 * (rows - 1) * (cols - 1)


def lattice_pairs(rows: int, cols: int):
    """Column-major flat index pairs: (first-order pairs, diagonal pairs)."""
    idx = np.arange(rows * cols).reshape((rows, cols), order="F")
    first = np.concatenate([
        np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], axis=1),
        np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], axis=1),
    ])
    diag = np.concatenate([
        np.stack([idx[:-1, :-1].ravel(), idx[1:, 1:].ravel()], axis=1),
        np.stack([idx[1:, :-1].ravel(), idx[:-1, 1:].ravel()], axis=1),
    ])
    return first, diag


# ---------------------------------------------------------------- kernels

@numba.njit(cache=True)
def _lattice_stats(sp):
    rows, cols = sp.shape
    s1 = 0
    s2 = 0
    for c in range(cols):
        for r in range(rows):
            v = sp[r, c]
            if r + 1 < rows:
                s1 += v * sp[r + 1, c]
            if c + 1 < cols:
                s1 += v * sp[r, c + 1]
                if r + 1 < rows:
                    s2 += v * sp[r + 1, c + 1] + sp[r + 1, c] * sp[r, c + 1]
    return s1, s2


@numba.njit(cache=True)
def _heat_bath_table(phi1, phi2):
    # P(y_i = +1 | first-order field h1, diagonal field h2), h in [-4, 4]
    table = np.empty((9, 9))
    for a in range(9):
        for b in range(9):
            table[a, b] = 1.0 / (1.0 + math.exp(-2.0 * (phi1 * (a - 4) + phi2 * (b - 4))))
    return table


@numba.njit(cache=True)
def _gibbs_sweeps(sp, table, diagonal, n_sweeps, rng):
    rows, cols = sp.shape
    for _ in range(n_sweeps):
        for c in range(cols):
            for r in range(rows):
                h1 = 0
                if r > 0:
                    h1 += sp[r - 1, c]
                if r + 1 < rows:
                    h1 += sp[r + 1, c]
                if c > 0:
                    h1 += sp[r, c - 1]
                if c + 1 < cols:
                    h1 += sp[r, c + 1]
                h2 = 0
                if diagonal:
                    if c > 0:
                        if r > 0:
                            h2 += sp[r - 1, c - 1]
                        if r + 1 < rows:
                            h2 += sp[r + 1, c - 1]
                    if c + 1 < cols:
                        if r > 0:
                            h2 += sp[r - 1, c + 1]
                        if r + 1 < rows:
                            h2 += sp[r + 1, c + 1]
                if rng.random() < table[h1 + 4, h2 + 4]:
                    sp[r, c] = 1
                else:
                    sp[r, c] = -1


@numba.njit(cache=True)
def _random_spins(rows, cols, rng):
    sp = np.empty((rows, cols), dtype=np.int8)
    for c in range(cols):
        for r in range(rows):
            sp[r, c] = 1 if rng.random() < 0.5 else -1
    return sp


@numba.njit(cache=True)
def lattice_draws(rows, cols, phi1, phi2, n_sweeps, s, thin, rng):
    """Statistics of ``s`` successive states of one heat-bath chain.

    The chain starts from uniform random spins; the first state is taken after
    ``n_sweeps`` sweeps and each later one after ``thin`` further sweeps.
    Returns an ``(s, 2)`` array of (first-order, diagonal) statistics.
    """
    sp = _random_spins(rows, cols, rng)
    table = _heat_bath_table(phi1, phi2)
    diagonal = phi2 != 0.0
    out = np.empty((s, 2))
    _gibbs_sweeps(sp, table, diagonal, n_sweeps, rng)
    a, b = _lattice_stats(sp)
    out[0, 0] = a
    out[0, 1] = b
    for k in range(1, s):
        _gibbs_sweeps(sp, table, diagonal, thin, rng)
        a, b = _lattice_stats(sp)
        out[k, 0] = a
        out[k, 1] = b
    return out


# ---------------------------------------------------------------- public ops

def _order_of(spec_or_order) -> int:
    if isinstance(spec_or_order, ModelSpec):
        return 1 if spec_or_order.family == Family.ISING_FIRST else 2
    if spec_or_order not in (1, 2):
        raise ValueError("neighbourhood order must be 1 or 2")
    return int(spec_or_order)


def suff_stats(y: LatticeConfig, order=1) -> np.ndarray:
    s1, s2 = _lattice_stats(y.spins)
    return np.array([s1, s2][: _order_of(order)], dtype=float)


def _padded(theta, order) -> tuple[float, float]:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (order,):
        raise ValueError(f"order-{order} lattice takes {order} parameters, got {theta.shape}")
    return float(theta[0]), float(theta[1]) if order == 2 else 0.0


def gibbs_sweep(y: LatticeConfig, theta, order, rng) -> LatticeConfig:
    """One raster-order pass of single-site heat-bath updates (returns a copy)."""
    order = _order_of(order)
    phi1, phi2 = _padded(theta, order)
    sp = y.spins.copy()
    _gibbs_sweeps(sp, _heat_bath_table(phi1, phi2), order == 2, 1, as_generator(rng))
    return LatticeConfig(sp)


def sample_approx(theta, spec: ModelSpec, n_sweeps: int, rng) -> LatticeConfig:
    """Approximate draw from f(.|theta): n_sweeps sweeps from uniform spins."""
    if n_sweeps < 1:
        raise ValueError("n_sweeps must be at least 1")
    order = _order_of(spec)
    phi1, phi2 = _padded(theta, order)
    gen = as_generator(rng)
    rows, cols = spec.dims
    sp = _random_spins(rows, cols, gen)
    _gibbs_sweeps(sp, _heat_bath_table(phi1, phi2), order == 2, n_sweeps, gen)
    return LatticeConfig(sp)


@numba.njit(cache=True)
def _state_code_chain(sp, table, diagonal, n_sweeps, rng):
    rows, cols = sp.shape
    out = np.empty(n_sweeps, dtype=np.int64)
    for it in range(n_sweeps):
        _gibbs_sweeps(sp, table, diagonal, 1, rng)
        code = 0
        for c in range(cols):
            for r in range(rows):
                if sp[r, c] == 1:
                    code |= 1 << (c * rows + r)
        out[it] = code
    return out


def gibbs_state_codes(theta, spec: ModelSpec, n_sweeps: int, rng, start: LatticeConfig | None = None) -> np.ndarray:
    """Integer code of the lattice after each of ``n_sweeps`` Gibbs sweeps.

    Bit k of a code is 1 when column-major site k is +1, matching the state
    order of :func:`enumerate_stats`.
    """
    order = _order_of(spec)
    phi1, phi2 = _padded(theta, order)
    gen = as_generator(rng)
    rows, cols = spec.dims
    if rows * cols > 62:
        raise ValueError("state codes need at most 62 sites")
    sp = _random_spins(rows, cols, gen) if start is None else start.spins.copy()
    return _state_code_chain(sp, _heat_bath_table(phi1, phi2), order == 2, int(n_sweeps), gen)


def state_code(y: LatticeConfig) -> int:
    return int(np.sum((y.flat == 1).astype(np.int64) << np.arange(y.flat.size, dtype=np.int64)))


@functools.lru_cache(maxsize=16)
def enumerate_stats(rows: int, cols: int) -> np.ndarray:
    """(s1, s2) for all 2**N configurations, indexed by the bits of the state id."""
    n = rows * cols
    if n > MAX_BRUTE_SITES:
        raise ValueError(f"{n} sites is too many to enumerate (max {MAX_BRUTE_SITES})")
    ids = np.arange(2 ** n, dtype=np.int64)
    spins = ((ids[:, None] >> np.arange(n)) & 1).astype(np.int8) * 2 - 1
    first, diag = lattice_pairs(rows, cols)
    s1 = np.sum(spins[:, first[:, 0]] * spins[:, first[:, 1]], axis=1, dtype=np.int64)
    s2 = np.sum(spins[:, diag[:, 0]] * spins[:, diag[:, 1]], axis=1, dtype=np.int64)
    out = np.stack([s1, s2], axis=1).astype(float)
    out.setflags(write=False)
    return out


def z_brute(theta, spec: ModelSpec) -> float:
    """log z(theta) by summing over every spin configuration."""
    theta = spec.check_theta(theta)
    stats = enumerate_stats(*spec.dims)[:, : spec.statistic_count]
    return float(logsumexp(stats @ theta))


# ---------------------------------------------------------------- transfer recursion
#
# Sites are added one at a time in column-major order.  The state is the window
# of the last w spins (w = rows for first order, rows + 1 with diagonals), with
# bit j of the window index holding site k - w + j.  A new site interacts only
# with sites inside the window; positions before site 0 are padding that never
# interacts.

def _window_fields(rows: int, cols: int, w: int):
    """For every site k: arrays over window states of the first-order and
    diagonal fields exerted by already-placed neighbours."""
    states = np.arange(2 ** w)
    bit_spin = ((states[:, None] >> np.arange(w)) & 1) * 2 - 1  # (2**w, w)
    fields = []
    for k in range(rows * cols):
        r, c = k % rows, k // rows
        h1 = np.zeros(2 ** w, dtype=np.int64)
        h2 = np.zeros(2 ** w, dtype=np.int64)
        if r > 0:
            h1 += bit_spin[:, w - 1]
        if c > 0:
            h1 += bit_spin[:, w - rows]
        if w > rows and c > 0:
            if r > 0:
                h2 += bit_spin[:, w - rows - 1]
            if r + 1 < rows:
                h2 += bit_spin[:, w - rows + 1]
        fields.append((h1, h2))
    return fields


def _check_transfer(spec: ModelSpec):
    if not spec.is_ising:
        raise ValueError("transfer recursion applies to lattices only")
    if spec.dims[0] > MAX_TRANSFER_ROWS:
        raise ValueError(f"column height {spec.dims[0]} exceeds {MAX_TRANSFER_ROWS}")


def z_transfer(theta, spec: ModelSpec) -> np.ndarray | float:
    """Exact log z(theta) by the site-by-site transfer recursion.

    ``theta`` may be one parameter vector or a ``(K, m)`` batch.
    """
    _check_transfer(spec)
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    theta = np.atleast_2d(theta)
    m = spec.statistic_count
    if theta.shape[1] != m:
        raise ValueError(f"expected {m} parameters per row")
    rows, cols = spec.dims
    w = rows if m == 1 else rows + 1
    fields = _window_fields(rows, cols, w)
    phi1 = theta[:, :1]
    phi2 = theta[:, 1:2] if m == 2 else np.zeros_like(phi1)
    half = 2 ** (w - 1)
    out = np.empty(len(theta))
    for lo in range(0, len(theta), 2048):
        p1, p2 = phi1[lo:lo + 2048], phi2[lo:lo + 2048]
        v = np.zeros((len(p1), 2 ** w))
        v[:, 0] = 1.0
        log_scale = np.zeros(len(p1))
        for h1, h2 in fields:
            field = p1 * h1 + p2 * h2
            new = np.empty_like(v)
            new[:, :half] = (v * np.exp(-field)).reshape(len(v), half, 2).sum(axis=2)
            new[:, half:] = (v * np.exp(field)).reshape(len(v), half, 2).sum(axis=2)
            mx = new.max(axis=1, keepdims=True)
            v = new / mx
            log_scale += np.log(mx[:, 0])
        out[lo:lo + 2048] = log_scale + np.log(v.sum(axis=1))
    return float(out[0]) if single else out


@numba.njit(cache=True)
def _dos_step(v, h1, h2, half, new):
    # v, new: (2**w, S1, S2) counts; shift by +-h along each statistic axis
    new[:] = 0
    n_states, n1, n2 = v.shape
    for idx in range(n_states):
        dst_lo = idx >> 1
        for sgn in (-1, 1):
            dst = dst_lo + (half if sgn == 1 else 0)
            d1 = sgn * h1[idx]
            d2 = sgn * h2[idx]
            for a in range(max(0, -d1), min(n1, n1 - d1)):
                for b in range(max(0, -d2), min(n2, n2 - d2)):
                    new[dst, a + d1, b + d2] += v[idx, a, b]


@dataclass(frozen=True)
class DensityOfStates:
    """Number of configurations g(s) for every statistic value s.

    ``log_counts`` has one axis per statistic; entries with no configuration
    are ``-inf``.
    """

    values: tuple  # per-statistic arrays of attainable-range values
    log_counts: np.ndarray

    def log_z(self, theta) -> np.ndarray | float:
        theta = np.asarray(theta, dtype=float)
        single = theta.ndim == 1
        theta = np.atleast_2d(theta)
        if len(self.values) == 1:
            expo = theta[:, :1] * self.values[0][None, :] + self.log_counts[None, :]
            out = logsumexp(expo, axis=1)
        else:
            out = np.array([
                logsumexp(self.log_counts + t[0] * self.values[0][:, None] + t[1] * self.values[1][None, :])
                for t in theta
            ])
        return float(out[0]) if single else out

    def log_z_grid(self, axis1, axis2=None) -> np.ndarray:
        """log z on the tensor grid axis1 x axis2 (axis2 only for two statistics)."""
        axis1 = np.asarray(axis1, dtype=float)
        if len(self.values) == 1:
            if axis2 is not None:
                raise ValueError("one-statistic model takes a single axis")
            return self.log_z(axis1[:, None])
        axis2 = np.asarray(axis2, dtype=float)
        v1, v2 = self.values
        a = axis1[:, None] * v1[None, :]
        b = axis2[:, None] * v2[None, :]
        amax = a.max(axis=1, keepdims=True)
        bmax = b.max(axis=1, keepdims=True)
        gmax = np.max(self.log_counts)
        g = np.exp(self.log_counts - gmax)
        z = np.exp(a - amax) @ g @ np.exp(b - bmax).T
        with np.errstate(divide="ignore"):
            out = np.log(z) + amax + bmax.T + gmax
        # the separable shift can underflow every term at extreme corners; redo those exactly
        bad = np.argwhere(~(z > 1e-280))
        if len(bad):
            out[bad[:, 0], bad[:, 1]] = self.log_z(np.column_stack([axis1[bad[:, 0]], axis2[bad[:, 1]]]))
        return out


@functools.lru_cache(maxsize=16)
def density_of_states(spec: ModelSpec) -> DensityOfStates:
    """Exact configuration counts per statistic value via the transfer recursion."""
    _check_transfer(spec)
    rows, cols = spec.dims
    m = spec.statistic_count
    w = rows if m == 1 else rows + 1
    p, d = pair_counts(rows, cols)
    n1, n2 = 2 * p + 1, (2 * d + 1 if m == 2 else 1)
    work = (2 ** w) * n1 * n2 * rows * cols
    if work > 5e10:
        raise ValueError("density of states too expensive for this lattice; use z_transfer")
    exact_ints = rows * cols <= 62
    dtype = np.int64 if exact_ints else np.float64
    v = np.zeros((2 ** w, n1, n2), dtype=dtype)
    v[0, p, d if m == 2 else 0] = 1
    new = np.empty_like(v)
    half = 2 ** (w - 1)
    for h1, h2 in _window_fields(rows, cols, w):
        if m == 1:
            h2 = np.zeros_like(h2)
        _dos_step(v, h1, h2, half, new)
        v, new = new, v
    counts = v.sum(axis=0).astype(float)
    with np.errstate(divide="ignore"):
        log_counts = np.log(counts)
    v1 = np.arange(-p, p + 1, dtype=float)
    if m == 1:
        return DensityOfStates((v1,), log_counts[:, 0])
    return DensityOfStates((v1, np.arange(-d, d + 1, dtype=float)), log_counts)


# ---------------------------------------------------------------- grid oracle

@dataclass(frozen=True)
class GridSpec:
    lower: tuple
    upper: tuple
    step: tuple

    def __post_init__(self):
        lo, hi, st = (tuple(float(x) for x in np.atleast_1d(v)) for v in (self.lower, self.upper, self.step))
        if not len(lo) == len(hi) == len(st):
            raise ValueError("grid bounds and steps differ in dimension")
        if any(a >= b for a, b in zip(lo, hi)) or any(s <= 0 for s in st):
            raise ValueError("grid needs lower < upper and step > 0")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "step", st)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def axes(self) -> list[np.ndarray]:
        out = []
        for lo, hi, st in zip(self.lower, self.upper, self.step):
            n = int(round((hi - lo) / st))
            out.append(lo + st * np.arange(n + 1))
        return out

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.lower, self.upper, tuple(s / factor for s in self.step))


class GridCoverageError(ValueError):
    pass


@dataclass
class GridPosterior:
    axes: list
    log_unnorm: np.ndarray  # log q(y|theta) + log prior - log z on the grid
    log_evidence: float
    log_unnorm_at: object = None  # exact log q + log prior - log z at any theta

    @property
    def density(self) -> np.ndarray:
        return np.exp(self.log_unnorm - self.log_evidence)

    def marginal(self, axis: int = 0) -> np.ndarray:
        dens = self.density
        for other in reversed(range(dens.ndim)):
            if other != axis:
                dens = np.trapezoid(dens, self.axes[other], axis=other)
        return dens

    def mean(self) -> np.ndarray:
        return np.array([np.trapezoid(self.axes[k] * self.marginal(k), self.axes[k]) for k in range(len(self.axes))])

    def sd(self) -> np.ndarray:
        mu = self.mean()
        return np.array([
            math.sqrt(np.trapezoid((self.axes[k] - mu[k]) ** 2 * self.marginal(k), self.axes[k]))
            for k in range(len(self.axes))
        ])

    def log_density_at(self, theta) -> float:
        """Normalised log posterior density at theta.

        Exact up to the grid's evidence when the oracle function is known,
        otherwise linear interpolation between grid nodes.
        """
        if self.log_unnorm_at is not None:
            return float(self.log_unnorm_at(np.asarray(theta, dtype=float)) - self.log_evidence)
        f = RegularGridInterpolator(self.axes, self.log_unnorm - self.log_evidence)
        return float(f(np.atleast_2d(theta))[0])


def _log_trapezoid(log_f, axes) -> float:
    mx = np.max(log_f)
    val = np.exp(log_f - mx)
    for k in reversed(range(val.ndim)):
        val = np.trapezoid(val, axes[k], axis=k)
    return float(mx + math.log(val))


def log_z_on_grid(spec: ModelSpec, axes) -> np.ndarray:
    """Exact log z over a tensor grid, by density of states when affordable."""
    try:
        dos = density_of_states(spec)
    except ValueError:
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
        return z_transfer(mesh, spec).reshape([len(a) for a in axes])
    return dos.log_z_grid(*axes)


def exact_posterior_grid(y_stats, spec: ModelSpec, prior: GaussianPrior, grid: GridSpec,
                         check_coverage: bool = True) -> GridPosterior:
    """Exact unnormalised posterior on a grid, with trapezoidal evidence.

    ``y_stats`` may be a LatticeConfig or its statistic vector.
    """
    if isinstance(y_stats, LatticeConfig):
        y_stats = suff_stats(y_stats, spec)
    y_stats = np.asarray(y_stats, dtype=float)
    m = spec.statistic_count
    if grid.dim != m or y_stats.shape != (m,) or prior.dim != m:
        raise ValueError("grid, statistics and prior must match the model dimension")
    axes = grid.axes()
    mesh = np.meshgrid(*axes, indexing="ij")
    log_lik = sum(y_stats[k] * mesh[k] for k in range(m)) - log_z_on_grid(spec, axes)
    log_pri = log_prior_density(np.stack(mesh, axis=-1), prior)
    log_unnorm = log_lik + log_pri
    if check_coverage:
        peak = np.max(log_unnorm)
        edge = -np.inf
        for k in range(m):
            edge = max(edge, np.max(np.take(log_unnorm, 0, axis=k)), np.max(np.take(log_unnorm, -1, axis=k)))
        if edge - peak > math.log(1e-8):
            raise GridCoverageError(
                f"posterior at the grid boundary is exp({edge - peak:.1f}) of the peak; widen the grid"
            )
    def exact_at(theta):
        return float(theta @ y_stats + log_prior_density(theta, prior) - z_transfer(theta, spec))

    return GridPosterior(axes, log_unnorm, _log_trapezoid(log_unnorm, axes), exact_at)


def auto_grid(y_stats, spec: ModelSpec, prior: GaussianPrior, n_sd: float = 6.0,
              nodes: int = 501) -> GridSpec:
    """Grid spanning the posterior mode +- n_sd posterior sds with >= ``nodes`` per axis.

    The mode and spread come from exact coarse passes, the first over the
    prior's +-8 sd box.  Any side whose boundary still carries more than 1e-10
    of the peak density is pushed outwards until it does not.
    """
    if isinstance(y_stats, LatticeConfig):
        y_stats = suff_stats(y_stats, spec)
    m = spec.statistic_count
    pm, ps = prior.mean_array, prior.sd_array
    grid = GridSpec(pm - 8 * ps, pm + 8 * ps, 16 * ps / (2000 if m == 1 else 800))
    for _ in range(2):
        post = exact_posterior_grid(y_stats, spec, prior, grid, check_coverage=False)
        mode_idx = np.unravel_index(np.argmax(post.log_unnorm), post.log_unnorm.shape)
        mode = np.array([post.axes[k][mode_idx[k]] for k in range(m)])
        sd = np.maximum(post.sd(), 1e-3)
        lo, hi = mode - n_sd * sd, mode + n_sd * sd
        grid = GridSpec(lo, hi, (hi - lo) / (nodes - 1))
    for _ in range(20):
        post = exact_posterior_grid(y_stats, spec, prior, grid, check_coverage=False)
        peak = np.max(post.log_unnorm)
        lo, hi = np.array(grid.lower), np.array(grid.upper)
        width = hi - lo
        moved = False
        for k in range(m):
            if np.max(np.take(post.log_unnorm, 0, axis=k)) - peak > math.log(1e-10):
                lo[k] -= 0.5 * width[k]
                moved = True
            if np.max(np.take(post.log_unnorm, -1, axis=k)) - peak > math.log(1e-10):
                hi[k] += 0.5 * width[k]
                moved = True
        if not moved:
            return grid
        grid = GridSpec(lo, hi, (hi - lo) / (nodes - 1))
    raise GridCoverageError("could not find a grid covering the posterior")


# ---------------------------------------------------------------- file format

def write_lattice(y: LatticeConfig, path) -> None:
    lines = [f"{y.rows} {y.cols}"] + [" ".join(str(int(v)) for v in row) for row in y.spins]
    Path(path).write_text("\n".join(lines) + "\n")


def read_lattice(path) -> LatticeConfig:
    text = [ln for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        rows, cols = (int(x) for x in text[0].split())
        spins = np.array([[int(v) for v in ln.split()] for ln in text[1:]])
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: malformed lattice file") from exc
    if spins.shape != (rows, cols):
        raise ValueError(f"{path}: header says {rows}x{cols}, body is {spins.shape}")
    return LatticeConfig(spins)
