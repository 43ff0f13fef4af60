"""Command-line experiment runner.

    grfev simulate        write datasets and a manifest
    grfev exact-evidence  grid-oracle evidences for both models (lattices only)
    grfev exchange        single-chain exchange posterior samples
    grfev popx-evidence   population-exchange evidences and model probabilities
    grfev popx-bf         bridged Bayes factors
    grfev abc             ABC model choice at each tolerance quantile

Every run writes ``summary.json`` files, JSON-lines traces and CSV tables
under ``--out``; each row carries the dataset id, method, seed, config hash
and wall time.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import tomli

from . import ergm, ising
from .abc import abc_model_choice, abc_reference_table
from .bridge import run_popx_bf
from .config import RunConfig, load_config
from .core import ModelSpec
from .exchange import ProposalSpec, run_exchange
from .population import run_popx_evidence
from .rng import RandomStream

MANIFEST = "manifest.json"

FIGURE_NOTES = """\
# Output tables

popx_evidence.csv, abc.csv and popx_bf.csv share the columns

  dataset, true_model, method, seed, config_hash, seconds,
  p_m1_exact, p_m1_est, log_bf_exact, log_bf_est, bf_ratio

* Model-probability scatter: plot p_m1_est against p_m1_exact, one panel per
  method (popx, abc_q0.001, abc_q0.005).
* Bayes-factor ratio: bf_ratio = exp(log_bf_exact - log_bf_est) per dataset and
  method; 1 is perfect.  Empty when no exact value is available.
* posterior_draws_<dataset>.csv (popx-bf): columns m1_theta1, m2_theta1,
  m2_theta2, one row per retained sweep; kernel-smooth each column for the
  three posterior density panels of a network fit.
* exact_evidence.csv: log_ev_m1, log_ev_m2, p_m1, log_bf_12 per dataset.
"""


# ---------------------------------------------------------------- datasets

def model_pair(cfg: RunConfig) -> tuple[ModelSpec, ModelSpec]:
    spec = cfg.spec
    return spec.reduced(), spec.full()


def _stats_of_file(path: Path, spec: ModelSpec) -> np.ndarray:
    if spec.is_ising:
        return ising.suff_stats(ising.read_lattice(path), 2)
    return ergm.graph_stats(ergm.load_edge_list(path))


def load_datasets(cfg: RunConfig) -> list[dict]:
    """Datasets from ``cfg.data`` (a file or a directory with a manifest),
    else the manifest under ``cfg.out``, else Gamaneg for network models."""
    _, full = model_pair(cfg)
    if cfg.data:
        path = Path(cfg.data)
        if path.is_dir():
            return _read_manifest(path)
        return [{"id": path.stem, "true_model": "", "theta": [], "file": str(path),
                 "stats": _stats_of_file(path, full).tolist()}]
    if (Path(cfg.out) / MANIFEST).exists():
        return _read_manifest(Path(cfg.out))
    if not full.is_ising:
        g = ergm.load_gamaneg()
        if g.n != full.dims[0]:
            raise SystemExit(f"the shipped network has {g.n} nodes, config says {full.dims[0]}")
        return [{"id": "gamaneg", "true_model": "", "theta": [], "file": str(ergm.gamaneg_path()),
                 "stats": ergm.graph_stats(g).tolist()}]
    raise SystemExit("no datasets: run `simulate` first or set data")


def _read_manifest(folder: Path) -> list[dict]:
    with open(folder / MANIFEST) as fh:
        return json.load(fh)["datasets"]


# ---------------------------------------------------------------- output helpers

def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_jsonable)
        fh.write("\n")


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return str(x)


def _write_csv(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = list(dict.fromkeys(k for r in rows for k in r))
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)


class TraceWriter:
    """JSON-lines trace of population sweeps."""

    def __init__(self, path: Path):
        path.parent.mkdir(parents=True, exist_ok=True)
        self.fh = open(path, "w")

    def __call__(self, i, pop, accepted, log_ratio):
        rec = {"iteration": i, "theta": pop.theta.tolist(), "accepted": accepted.tolist(),
               "log_z_ratio": float(log_ratio)}
        self.fh.write(json.dumps(rec) + "\n")

    def close(self):
        self.fh.close()


def _exact_table(out: Path) -> dict:
    path = out / "exact_evidence.csv"
    if not path.exists():
        return {}
    with open(path, newline="") as fh:
        return {r["dataset"]: r for r in csv.DictReader(fh)}


def _compare(row: dict, exact: dict, p_est: float, log_bf_est: float) -> dict:
    ex = exact.get(row["dataset"])
    row["p_m1_est"] = p_est
    row["log_bf_est"] = log_bf_est
    row["p_m1_exact"] = float(ex["p_m1"]) if ex else ""
    row["log_bf_exact"] = float(ex["log_bf_12"]) if ex else ""
    row["bf_ratio"] = (math.exp(float(ex["log_bf_12"]) - log_bf_est)
                       if ex and math.isfinite(log_bf_est) else "")
    return row


def _provenance(cfg: RunConfig, ds: dict, method: str, seconds: float) -> dict:
    return {"dataset": ds["id"], "true_model": ds.get("true_model", ""), "method": method,
            "seed": cfg.seed, "config_hash": cfg.config_hash(), "seconds": round(seconds, 3)}


def _pmap(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def p_m1_from_log_bf(log_bf: float) -> float:
    """pi(m1|y) under equal model priors."""
    return float(1.0 / (1.0 + math.exp(-log_bf))) if log_bf > -700 else 0.0


# ---------------------------------------------------------------- commands

def cmd_simulate(cfg: RunConfig) -> dict:
    out = Path(cfg.out)
    m1, m2 = model_pair(cfg)
    root = RandomStream(cfg.seed).child("simulate")
    data_dir = out / "datasets"
    data_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    plan = [("m1", m1, cfg.true_theta_m1, k) for k in range(cfg.n_datasets_m1)]
    plan += [("m2", m2, cfg.true_theta_m2, k) for k in range(cfg.n_datasets_m2)]
    for label, spec, theta, k in plan:
        ds_id = f"{label}_{k:03d}"
        rng = root.child(label, k)
        if spec.is_ising:
            y = ising.sample_approx(theta, spec, cfg.sim_sweeps, rng)
            path = data_dir / f"{ds_id}.txt"
            ising.write_lattice(y, path)
            stats = ising.suff_stats(y, 2)
        else:
            g = ergm.graph_sample_approx(theta, spec, cfg.sim_sweeps, rng)
            path = data_dir / f"{ds_id}.txt"
            ergm.write_edge_list(g, path, header=f"simulated from {spec.family.value} at {list(theta)}")
            stats = ergm.graph_stats(g)
        entries.append({"id": ds_id, "true_model": label, "theta": list(theta),
                        "file": str(path.relative_to(out)), "stats": stats.tolist()})
    manifest = {"config_hash": cfg.config_hash(), "seed": cfg.seed, "model_pair": [m1.family.value, m2.family.value],
                "dims": list(m1.dims), "datasets": entries}
    _write_json(out / MANIFEST, manifest)
    return manifest


def _exact_one(args):
    cfg, ds = args
    m1, m2 = model_pair(cfg)
    stats = np.asarray(ds["stats"], dtype=float)
    t0 = time.perf_counter()
    logs = []
    for spec in (m1, m2):
        prior = cfg.prior(spec.statistic_count)
        y = stats[: spec.statistic_count]
        grid = ising.auto_grid(y, spec, prior, n_sd=cfg.grid_sd, nodes=cfg.grid_nodes)
        logs.append(ising.exact_posterior_grid(y, spec, prior, grid).log_evidence)
    row = _provenance(cfg, ds, "exact", time.perf_counter() - t0)
    row.update(log_ev_m1=logs[0], log_ev_m2=logs[1], log_bf_12=logs[0] - logs[1],
               p_m1=p_m1_from_log_bf(logs[0] - logs[1]))
    return row


def cmd_exact_evidence(cfg: RunConfig) -> list[dict]:
    if not cfg.spec.is_ising:
        raise SystemExit("exact evidence is only available for lattice models")
    datasets = load_datasets(cfg)
    rows = _pmap(_exact_one, [(cfg, ds) for ds in datasets], cfg.threads)
    out = Path(cfg.out)
    _write_csv(out / "exact_evidence.csv", rows)
    _write_json(out / "exact_evidence.json", {"config": cfg.to_dict(), "config_hash": cfg.config_hash(), "rows": rows})
    return rows


def cmd_exchange(cfg: RunConfig) -> list[dict]:
    spec = cfg.spec
    m = spec.statistic_count
    out = Path(cfg.out)
    rows = []
    for ds in load_datasets(cfg):
        rng = RandomStream(cfg.seed).child("exchange", ds["id"])
        t0 = time.perf_counter()
        tr = run_exchange(np.asarray(ds["stats"][:m]), spec, cfg.prior(m), ProposalSpec(tuple(cfg.sigma)),
                          cfg.aux_sweeps, cfg.exchange_iterations, rng)
        keep = tr.theta[int(cfg.burn_in * len(tr.theta)):]
        row = _provenance(cfg, ds, "exchange", time.perf_counter() - t0)
        row.update(posterior_mean=keep.mean(axis=0).tolist(), posterior_sd=keep.std(axis=0).tolist(),
                   acceptance_rate=tr.acceptance_rate)
        rows.append(row)
        with open(_trace_path(out, "exchange", ds["id"]), "w") as fh:
            for i, (th, acc) in enumerate(zip(tr.theta, tr.accepted)):
                fh.write(json.dumps({"iteration": i, "theta": th.tolist(), "accepted": bool(acc)}) + "\n")
    _write_json(out / "exchange_summary.json", {"config": cfg.to_dict(), "config_hash": cfg.config_hash(), "rows": rows})
    return rows


def _trace_path(out: Path, method: str, ds_id: str, suffix: str = "") -> Path:
    path = out / "traces" / f"{method}_{ds_id}{suffix}.jsonl"
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _popx_one(args):
    cfg, ds = args
    out = Path(cfg.out)
    stats = np.asarray(ds["stats"], dtype=float)
    t0 = time.perf_counter()
    summaries = {}
    for label, spec in zip(("m1", "m2"), model_pair(cfg)):
        writer = TraceWriter(_trace_path(out, "popx", ds["id"], "_" + label))
        try:
            est = run_popx_evidence(cfg, stats[: spec.statistic_count], spec,
                                    rng=RandomStream(cfg.seed).child("popx", ds["id"], label),
                                    trace_callback=writer)
        finally:
            writer.close()
        summaries[label] = est.summary()
    log_bf = summaries["m1"]["log_evidence"] - summaries["m2"]["log_evidence"]
    row = _provenance(cfg, ds, "popx", time.perf_counter() - t0)
    row.update(log_ev_m1=summaries["m1"]["log_evidence"], log_ev_m2=summaries["m2"]["log_evidence"])
    return row, log_bf, summaries


def cmd_popx_evidence(cfg: RunConfig) -> list[dict]:
    out = Path(cfg.out)
    exact = _exact_table(out)
    results = _pmap(_popx_one, [(cfg, ds) for ds in load_datasets(cfg)], cfg.threads)
    rows = []
    for row, log_bf, summaries in results:
        rows.append(_compare(row, exact, p_m1_from_log_bf(log_bf), log_bf))
        _write_json(out / "summaries" / f"popx_{row['dataset']}.json",
                    {"config_hash": cfg.config_hash(), "seed": cfg.seed, **summaries})
    _write_csv(out / "popx_evidence.csv", rows)
    _write_figure_notes(out)
    return rows


def _bf_one(args):
    cfg, ds = args
    out = Path(cfg.out)
    t0 = time.perf_counter()
    writer = TraceWriter(_trace_path(out, "popx_bf", ds["id"]))
    try:
        est = run_popx_bf(cfg, np.asarray(ds["stats"], dtype=float),
                          rng=RandomStream(cfg.seed).child("bridge", ds["id"]), trace_callback=writer)
    finally:
        writer.close()
    row = _provenance(cfg, ds, "popx_bf", time.perf_counter() - t0)
    draws = np.column_stack([est.m1_draws, est.m2_draws])
    return row, est.log_bf_12, est.summary(), draws


def cmd_popx_bf(cfg: RunConfig) -> list[dict]:
    out = Path(cfg.out)
    exact = _exact_table(out)
    results = _pmap(_bf_one, [(cfg, ds) for ds in load_datasets(cfg)], cfg.threads)
    rows = []
    for row, log_bf, summary, draws in results:
        row["bf_12"] = math.exp(log_bf) if log_bf < 700 else float("inf")
        rows.append(_compare(row, exact, p_m1_from_log_bf(log_bf), log_bf))
        _write_json(out / "summaries" / f"popx_bf_{row['dataset']}.json",
                    {"config_hash": cfg.config_hash(), "seed": cfg.seed, **summary})
        _write_csv(out / f"posterior_draws_{row['dataset']}.csv",
                   [{"m1_theta1": a, "m2_theta1": b, "m2_theta2": c} for a, b, c in draws])
    _write_csv(out / "popx_bf.csv", rows)
    _write_figure_notes(out)
    return rows


def cmd_abc(cfg: RunConfig) -> list[dict]:
    out = Path(cfg.out)
    m1, m2 = model_pair(cfg)
    datasets = load_datasets(cfg)
    t0 = time.perf_counter()
    table = abc_reference_table([m1, m2], [cfg.prior(1), cfg.prior(2)], cfg.abc_draws, cfg.abc_aux_sweeps,
                                RandomStream(cfg.seed).child("abc"))
    build = time.perf_counter() - t0
    table.to_csv(out / "abc_reference_table.csv")
    exact = _exact_table(out)
    rows = []
    for ds in datasets:
        t1 = time.perf_counter()
        res = abc_model_choice(table, ds["stats"], cfg.abc_quantiles)
        for q, r in res.items():
            p1, p2 = (float(v) for v in r.probabilities)
            log_bf = math.log(p1 / p2) if p1 > 0 and p2 > 0 else (math.inf if p1 > 0 else -math.inf)
            row = _provenance(cfg, ds, f"abc_q{q:g}", build + time.perf_counter() - t1)
            row.update(tolerance=r.tolerance, n_accepted=r.n_accepted)
            rows.append(_compare(row, exact, p1, log_bf))
    _write_csv(out / "abc.csv", rows)
    _write_json(out / "abc_summary.json", {"config": cfg.to_dict(), "config_hash": cfg.config_hash(),
                                           "table_seconds": build, "rows": rows})
    _write_figure_notes(out)
    return rows


def _write_figure_notes(out: Path) -> None:
    (out / "FIGURES.md").write_text(FIGURE_NOTES)


COMMANDS = {
    "simulate": cmd_simulate,
    "exact-evidence": cmd_exact_evidence,
    "exchange": cmd_exchange,
    "popx-evidence": cmd_popx_evidence,
    "popx-bf": cmd_popx_bf,
    "abc": cmd_abc,
}


def _parse_value(text: str):
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def build_config(args) -> RunConfig:
    overrides = dict(_parse_set(s) for s in args.set or [])
    for key in ("seed", "threads", "out"):
        val = getattr(args, key)
        if val is not None:
            overrides[key] = val
    if args.config:
        return load_config(args.config, args.command, **overrides)
    if "seed" not in overrides:
        raise SystemExit("a seed is required: pass --seed or a config file that sets one")
    return RunConfig(**overrides)


def _parse_set(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise SystemExit(f"--set expects key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), _parse_value(value.strip())


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grfev", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML file; top-level keys plus a [<command>] section")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--threads", type=int, help="dataset-level worker processes")
        p.add_argument("--out", help="output directory")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config field")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
    except (TypeError, ValueError) as exc:
        print(f"grfev: invalid configuration: {exc}", file=sys.stderr)
        return 2
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    COMMANDS[args.command](cfg)
    _write_json(Path(cfg.out) / f"run_{args.command}.json",
                {"command": args.command, "config": cfg.to_dict(), "config_hash": cfg.config_hash(),
                 "seconds": time.perf_counter() - t0})
    print(f"{args.command}: done in {time.perf_counter() - t0:.1f}s, outputs in {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
