"""Acceptance criteria 1-9, one test each.

Each test records a PASS/FAIL line (printed in the terminal summary) before
asserting.  Criteria 5 to 8 are statistical runs at the stated settings and
take minutes each.
"""
import math
import time

import numpy as np
import pytest

from grfev import ergm, ising
from grfev.abc import abc_model_choice, abc_reference_table
from grfev.bridge import assemble_log_bf, run_popx_bf
from grfev.config import RunConfig
from grfev.core import GaussianPrior, ModelSpec
from grfev.diagnostics import batch_means_se, binned_tv, sd_se
from grfev.exchange import ProposalSpec, run_exchange
from grfev.population import (
    PopulationState,
    evidence_scales,
    log_evidence_chib,
    log_z_hat_path,
    make_ladder,
    run_popx_evidence,
)
from grfev.rng import RandomStream
from grfev.simulate import simulate_stats

PRIOR1 = GaussianPrior.isotropic(1, 5.0)
PRIOR2 = GaussianPrior.isotropic(2, 5.0)
GRID = (-0.4, -0.1, 0.0, 0.1, 0.4)


def exact_pair(y, rows, cols):
    """Grid-oracle posteriors of the first- and second-order models for statistics y = (s1, s2)."""
    s1, s2 = ModelSpec.ising(rows, cols, 1), ModelSpec.ising(rows, cols, 2)
    y = np.asarray(y, dtype=float)
    g1 = ising.exact_posterior_grid(y[:1], s1, PRIOR1, ising.auto_grid(y[:1], s1, PRIOR1))
    g2 = ising.exact_posterior_grid(y, s2, PRIOR2, ising.auto_grid(y, s2, PRIOR2))
    return g1, g2


def p_m1(log_bf):
    return 1.0 / (1.0 + math.exp(-log_bf))


def test_criterion_1_oracle_agreement(verdict):
    ising.z_transfer([0.1], ModelSpec.ising(2, 2))  # compile outside the timed region
    ising.z_brute([0.1], ModelSpec.ising(2, 2))
    t0 = time.perf_counter()
    worst = 0.0
    for side in (2, 3, 4):
        for order in (1, 2):
            spec = ModelSpec.ising(side, side, order)
            thetas = [[a] for a in GRID] if order == 1 else [[a, b] for a in GRID for b in GRID]
            for th in thetas:
                brute = ising.z_brute(th, spec)
                worst = max(worst, abs(ising.z_transfer(th, spec) - brute) / abs(brute))
    secs = time.perf_counter() - t0
    ok = worst < 1e-10 and secs < 5.0
    assert verdict(1, ok, f"max rel err {worst:.1e}, {secs:.2f}s"), (worst, secs)


def test_criterion_2_closed_forms(verdict):
    worst = 0.0
    for rows, cols in [(2, 2), (3, 3), (4, 5), (10, 10), (12, 12)]:
        for order in (1, 2):
            spec = ModelSpec.ising(rows, cols, order)
            want = rows * cols * math.log(2)
            th = [0.0] * order
            assert spec.log_z0 == want
            worst = max(worst, abs(ising.z_transfer(th, spec) - want) / want)
    for n in (3, 4, 5, 6):
        spec = ModelSpec.ergm(n, two_stars=False)
        for t in (-2.0, -0.5, 0.0, 0.7, 3.0):
            want = n * (n - 1) / 2 * math.log1p(math.exp(t))
            worst = max(worst, abs(ergm.z_graph_brute([t], spec) - want) / abs(want))
    ok = worst < 1e-12
    assert verdict(2, ok, f"max rel err {worst:.1e}"), worst


def test_criterion_3_exchange_2x2(verdict):
    spec = ModelSpec.ising(2, 2)
    y = ising.suff_stats(ising.sample_approx([0.5], spec, 200, 0), spec)
    post = ising.exact_posterior_grid(y, spec, PRIOR1, ising.auto_grid(y, spec, PRIOR1))
    tr = run_exchange(y, spec, PRIOR1, ProposalSpec((1.0,)), 50, 1_000_000, 11)
    th = tr.theta[10_000:, 0]
    dm = th.mean() - post.mean()[0]
    ds = th.std() - post.sd()[0]
    se_m, se_s = batch_means_se(th), sd_se(th)
    tv = binned_tv(th, post.axes[0], post.density)
    ok = abs(dm) < 3 * se_m and abs(ds) < 3 * se_s and tv <= 0.03
    detail = f"mean err {dm:+.4f} (se {se_m:.4f}), sd err {ds:+.4f} (se {se_s:.4f}), TV {tv:.4f}"
    assert verdict(3, ok, detail), detail


def test_criterion_4_path_estimator_unbiased(verdict):
    spec = ModelSpec.ising(2, 2)
    lad = make_ladder(10)
    theta = 0.5  # every chain sits at theta, so chain j's natural parameter is t_j theta
    phi = lad.array * theta
    s = 500
    gen = np.random.default_rng(2024)
    z_hat = []
    for _ in range(100):
        pop = PopulationState(np.full((11, 1), theta), np.zeros((11, s, 1)), evidence_scales(lad, 1))
        for j in range(11):
            # decoupled: fresh, independent draws that take no part in any acceptance step
            pop.aux_stats[j, :, 0] = simulate_stats(spec, [phi[j]], 20, gen, s=s, thin=5)[:, 0]
        z_hat.append(math.exp(log_z_hat_path(pop, lad, spec)))
    z_hat = np.array(z_hat)
    z = math.exp(ising.z_brute([theta], spec))
    rel = z_hat.mean() / z - 1
    se = z_hat.std(ddof=1) / math.sqrt(len(z_hat)) / z
    ok = abs(rel) < 0.05
    assert verdict(4, ok, f"mean z-hat / z - 1 = {rel:+.4f} (se {se:.4f})"), (rel, se)


@pytest.mark.slow
def test_criterion_5_evidence_6x6(verdict):
    spec = ModelSpec.ising(6, 6)
    lines, ok = [], True
    for k, theta in enumerate((0.3, 0.15)):
        y = ising.suff_stats(ising.sample_approx([theta], spec, 1000, 500 + k), spec)
        post = ising.exact_posterior_grid(y, spec, PRIOR1, ising.auto_grid(y, spec, PRIOR1))
        t0 = time.perf_counter()
        errs = np.array([run_popx_evidence(RunConfig(seed=seed), y).log_evidence - post.log_evidence
                         for seed in range(10)])
        secs = time.perf_counter() - t0
        hits = int(np.sum(np.abs(errs) < 0.1))
        ok &= hits >= 9 and secs / 10 <= 15 * 60
        lines.append(f"y={y.tolist()}: {hits}/10 within 0.1, errors {np.round(errs, 2).tolist()}, "
                     f"{secs / 10:.0f}s/run")
    assert verdict(5, ok, "; ".join(lines)), lines


@pytest.fixture(scope="module")
def sim_6x6_datasets():
    cfg = RunConfig(seed=1)
    m1, m2 = ModelSpec.ising(6, 6, 1), ModelSpec.ising(6, 6, 2)
    root = RandomStream(cfg.seed).child("simulate")
    out = []
    for label, spec, theta, n in [("m1", m1, cfg.true_theta_m1, cfg.n_datasets_m1),
                                  ("m2", m2, cfg.true_theta_m2, cfg.n_datasets_m2)]:
        for k in range(n):
            y = ising.sample_approx(theta, spec, cfg.sim_sweeps, root.child(label, k))
            stats = ising.suff_stats(y, 2)
            g1, g2 = exact_pair(stats, 6, 6)
            out.append((f"{label}_{k:03d}", stats, p_m1(g1.log_evidence - g2.log_evidence)))
    return cfg, out


@pytest.mark.slow
def test_criterion_6_popx_beats_abc(verdict, sim_6x6_datasets):
    cfg, datasets = sim_6x6_datasets
    m1, m2 = ModelSpec.ising(6, 6, 1), ModelSpec.ising(6, 6, 2)
    popx_err = []
    for ds_id, y, exact in datasets:
        e1 = run_popx_evidence(cfg, y[:1], m1, rng=RandomStream(cfg.seed).child("popx", ds_id, "m1")).log_evidence
        e2 = run_popx_evidence(cfg, y, m2, rng=RandomStream(cfg.seed).child("popx", ds_id, "m2")).log_evidence
        popx_err.append(abs(p_m1(e1 - e2) - exact))
    table = abc_reference_table([m1, m2], [PRIOR1, PRIOR2], cfg.abc_draws, cfg.abc_aux_sweeps,
                                RandomStream(cfg.seed).child("abc"))
    abc_err = {q: [] for q in cfg.abc_quantiles}
    for ds_id, y, exact in datasets:
        for q, res in abc_model_choice(table, y, cfg.abc_quantiles).items():
            abc_err[q].append(abs(res.probabilities[0] - exact))
    mp, a1, a5 = np.mean(popx_err), np.mean(abc_err[0.001]), np.mean(abc_err[0.005])
    ok = mp < a1 and a1 <= a5
    detail = f"mean |p err|: popx {mp:.4f}, abc 0.1% {a1:.4f}, abc 0.5% {a5:.4f}"
    assert verdict(6, ok, detail), detail


BF_SEEDS = 5


@pytest.mark.slow
def test_criterion_7_bf_cross_consistency(verdict):
    s1, s2 = ModelSpec.ising(4, 4, 1), ModelSpec.ising(4, 4, 2)
    cfg = RunConfig(seed=0, model="ising2", rows=4, cols=4)
    gen_specs = [([0.3], s1), ([0.25, 0.15], s2), ([0.1], s1), ([0.3, -0.1], s2), ([0.0, 0.2], s2)]
    lines, ok = [], True
    for k, (theta, spec) in enumerate(gen_specs):
        y = ising.suff_stats(ising.sample_approx(theta, spec, 1000, 700 + k), s2)
        bf = np.array([run_popx_bf(cfg.replace(seed=seed), y).log_bf_12 for seed in range(BF_SEEDS)])
        ev = np.array([run_popx_evidence(cfg.replace(seed=seed), y[:1], s1).log_evidence
                       - run_popx_evidence(cfg.replace(seed=seed), y, s2).log_evidence
                       for seed in range(BF_SEEDS)])
        se = math.hypot(bf.std(ddof=1), ev.std(ddof=1)) / math.sqrt(BF_SEEDS)
        diff = bf.mean() - ev.mean()
        ok &= abs(diff) <= 3 * se
        lines.append(f"y={y.tolist()}: bf {bf.mean():.3f} vs ev {ev.mean():.3f} (3se {3 * se:.3f})")
    assert verdict(7, ok, "; ".join(lines)), lines


@pytest.mark.slow
def test_criterion_8_gamaneg(verdict):
    g = ergm.load_gamaneg()
    y = ergm.graph_stats(g).astype(float)
    log10_bf, iqr_ok = [], []
    for seed in range(5):
        cfg = RunConfig.study_ergm(seed)
        est = run_popx_bf(cfg, y)
        q25, q75 = np.quantile(est.m2_draws[:, 1], [0.25, 0.75])
        log10_bf.append(est.log_bf_12 / math.log(10))
        iqr_ok.append(q25 <= 0.0 <= q75)
    log10_bf = np.array(log10_bf)
    ok = bool(np.all(log10_bf > math.log10(3)) and all(iqr_ok)
              and np.all((log10_bf >= 0.6) & (log10_bf <= 2.6)))
    detail = (f"log10 BF_12 {np.round(log10_bf, 2).tolist()} (reference log10 37.499 = 1.57), "
              f"theta2 IQR contains 0: {iqr_ok}")
    assert verdict(8, ok, detail), detail


def test_criterion_9_identities(verdict):
    spec = ModelSpec.ising(3, 3)
    y = np.array([4.0])
    post = ising.exact_posterior_grid(y, spec, PRIOR1, ising.auto_grid(y, spec, PRIOR1))
    rng = np.random.default_rng(9)
    lo, hi = post.axes[0][20], post.axes[0][-20]
    chib = max(abs(log_evidence_chib([t], y, PRIOR1, ising.z_transfer([t], spec), post.log_density_at([t]))
                   - post.log_evidence) for t in rng.uniform(lo, hi, 20))
    s1, s2 = ModelSpec.ising(3, 3, 1), ModelSpec.ising(3, 3, 2)
    yy = np.array([4.0, 2.0])
    g1, g2 = exact_pair(yy, 3, 3)
    bridge = 0.0
    for _ in range(20):
        t1 = rng.uniform(g1.axes[0][20], g1.axes[0][-20])
        td = np.array([rng.uniform(ax[20], ax[-20]) for ax in g2.axes])
        ratio = ising.z_transfer(td, s2) - ising.z_transfer([t1], s1)
        val = assemble_log_bf(t1, td, yy, PRIOR1, PRIOR2, ratio, g1.log_density_at([t1]), g2.log_density_at(td))
        bridge = max(bridge, abs(val - (g1.log_evidence - g2.log_evidence)))
    ok = chib < 1e-5 and bridge < 1e-4
    assert verdict(9, ok, f"Chib max err {chib:.1e}, bridged BF max err {bridge:.1e}"), (chib, bridge)
