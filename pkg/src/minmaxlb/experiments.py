"""
Single runs and parameter sweeps over scaled instances.

Every replica gets its own seed derived from ``SeedSequence([seed, cell,
replica])``; the same value keys the Bernoulli stream of the stochastic
oracle and the algorithm RNG.  Results are collected in task order, so the
output is identical for any worker count.

CSV columns are ``kappa, eps, sigma, p, n, T, budget,
first_discovery_complete, first_eps_stationary, replica, seed``.  Empty
``first_*`` cells mean the event did not happen within ``budget`` calls
(censored).
"""

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .algorithms import make_algorithm, run_zero_respecting
from .config import spec_from_params
from .instances import RegimeError, build_scaled
from .oracles import DeterministicOracle, StochasticOracle, StochasticOracleConfig

__all__ = ["CSV_COLUMNS", "Task", "replica_seed", "run_task", "run_cell", "run_experiment", "run_sweep", "fit_slope"]

CSV_COLUMNS = (
    "kappa", "eps", "sigma", "p", "n", "T", "budget",
    "first_discovery_complete", "first_eps_stationary", "replica", "seed",
)


def replica_seed(seed, cell, replica):
    return int(np.random.SeedSequence([int(seed), int(cell), int(replica)]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Task:
    params: dict
    algorithm: str
    algorithm_params: dict
    budget: int
    p: float
    cell: int
    replica: int
    seed: int
    track_stationarity: bool = True
    trajectory: bool = False


def default_budget(instance, p):
    """Lower-bound horizon: n(T-1) deterministic, the half-probability
    horizon of the discovery process otherwise (at least one call)."""
    if p >= 1.0 and not instance.spec.stochastic:
        return instance.witness_budget()
    return max(1, math.ceil(instance.stochastic_horizon(p)))


def run_task(task):
    """Run one replica; returns (csv row, trajectory jsonl text or None)."""
    spec = spec_from_params(task.params)
    inst = build_scaled(spec)
    if spec.stochastic or task.p < 1.0:
        oracle = StochasticOracle(inst, StochasticOracleConfig(task.p, task.seed))
    else:
        oracle = DeterministicOracle(inst)
    alg = make_algorithm(task.algorithm, **task.algorithm_params)
    rec = run_zero_respecting(
        alg, inst, oracle, task.budget, seed=task.seed, track_stationarity=task.track_stationarity
    )
    row = {
        "kappa": spec.kappa,
        "eps": spec.eps,
        "sigma": spec.sigma,
        "p": task.p,
        "n": spec.n,
        "T": spec.T,
        "budget": task.budget,
        "first_discovery_complete": rec.first_discovery_complete,
        "first_eps_stationary": rec.first_eps_stationary,
        "replica": task.replica,
        "seed": task.seed,
    }
    text = None
    if task.trajectory:
        buf = io.StringIO()
        rec.to_jsonl(buf, cell=task.cell, replica=task.replica)
        text = buf.getvalue()
    return row, text


def _map(tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _cell_tasks(cfg, params, cell, trajectory):
    spec = spec_from_params(params)
    inst = build_scaled(spec)
    p = cfg.p if cfg.p is not None else spec.p
    budget = cfg.budget or default_budget(inst, p)
    tasks = [
        Task(
            params=params,
            algorithm=cfg.algorithm,
            algorithm_params=dict(cfg.algorithm_params),
            budget=budget,
            p=p,
            cell=cell,
            replica=r,
            seed=replica_seed(cfg.seed, cell, r),
            trajectory=trajectory,
        )
        for r in range(cfg.replicas)
    ]
    return spec, inst, p, tasks


def _cell_summary(spec, inst, p, rows):
    witness = inst.witness_budget()
    horizon = inst.stochastic_horizon(p) if p < 1.0 or spec.stochastic else witness
    stat = [r["first_eps_stationary"] for r in rows]
    done = [r["first_discovery_complete"] for r in rows]
    return {
        "kappa": spec.kappa,
        "eps": spec.eps,
        "sigma": spec.sigma,
        "p": p,
        "n": spec.n,
        "T": spec.T,
        "witness_budget": witness,
        "horizon": horizon,
        "replicas": len(rows),
        "censored_stationary": sum(s is None for s in stat),
        "censored_discovery": sum(d is None for d in done),
        # no run may be eps-stationary at or before n(T-1) calls
        "bound_violations": sum(s is not None and s <= witness for s in stat),
        "fraction_unfinished_at_horizon": float(np.mean([d is None or d > horizon for d in done])),
    }


def _write_outputs(prefix, rows, texts, meta):
    if prefix is None:
        return
    d = os.path.dirname(prefix)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(prefix + ".csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: "" if r[k] is None else r[k] for k in CSV_COLUMNS})
    with open(prefix + ".jsonl", "w") as fh:
        for t in texts:
            if t:
                fh.write(t)
    with open(prefix + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def run_cell(cfg, params, cell=0, trajectory=True):
    spec, inst, p, tasks = _cell_tasks(cfg, params, cell, trajectory)
    results = _map(tasks, cfg.workers)
    rows = [r for r, _ in results]
    return spec, inst, p, rows, [t for _, t in results]


def run_experiment(cfg, trajectory=True):
    """Run the single cell described by ``cfg.instance``."""
    spec, inst, p, rows, texts = run_cell(cfg, cfg.instance, 0, trajectory)
    summary = _cell_summary(spec, inst, p, rows)
    meta = {"instance": spec.metadata(), "algorithm": cfg.algorithm, "summary": summary}
    _write_outputs(cfg.output, rows, texts, meta)
    return rows, meta


def fit_slope(xs, ys):
    """Least-squares slope of log(ys) against log(xs); None with < 2 distinct xs."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    if np.unique(xs).size < 2:
        return None
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def _grid(cfg):
    sw = cfg.sweep or {}
    base = cfg.instance
    kappas = sw.get("kappa") or [base["L"] / base["mu"]]
    epss = sw.get("eps") or [base["eps"]]
    sigmas = sw.get("sigma") or [base.get("sigma")]
    return [(k, e, s) for k in kappas for e in epss for s in sigmas]


def _slopes(cells, stochastic):
    """Fitted exponents of the witness budget against kappa and eps.

    Fits are taken within groups sharing the other grid coordinates and
    averaged.  Theory: kappa^(1/2), eps^(-2) deterministic; kappa^(1/3) and,
    once the noise term dominates, eps^(-4) stochastic (through 1/p).
    """
    out = {}
    for var, other in (("kappa", ("eps", "sigma")), ("eps", ("kappa", "sigma"))):
        groups = {}
        for c in cells:
            groups.setdefault(tuple(c[o] for o in other), []).append(c)
        fits = []
        for g in groups.values():
            y = [c["horizon"] for c in g]
            s = fit_slope([c[var] for c in g], y)
            if s is not None:
                fits.append(s)
        out[var] = float(np.mean(fits)) if fits else None
    out["theory"] = {"kappa": 1.0 / 3.0, "eps": -4.0} if stochastic else {"kappa": 0.5, "eps": -2.0}
    return out


def run_sweep(cfg, trajectory=True):
    """Run every (kappa, eps, sigma) cell of the grid.

    Cells outside the valid regime are reported as skipped (never silently
    dropped).  Returns (rows, meta).
    """
    L = cfg.instance["L"]
    all_tasks, cells, skipped, specs = [], [], [], []
    for idx, (kappa, eps, sigma) in enumerate(_grid(cfg)):
        params = {**cfg.instance, "mu": L / kappa, "eps": eps, "sigma": sigma}
        try:
            spec, inst, p, tasks = _cell_tasks(cfg, params, idx, trajectory)
        except RegimeError as exc:
            skipped.append({"kappa": kappa, "eps": eps, "sigma": sigma, "reason": str(exc)})
            continue
        specs.append((idx, spec, inst, p, len(all_tasks), len(tasks)))
        all_tasks.extend(tasks)
    results = _map(all_tasks, cfg.workers)
    rows = [r for r, _ in results]
    texts = [t for _, t in results]
    stochastic = False
    for idx, spec, inst, p, start, count in specs:
        c = _cell_summary(spec, inst, p, rows[start:start + count])
        c["cell"] = idx
        cells.append(c)
        stochastic |= spec.stochastic or p < 1.0
    meta = {
        "algorithm": cfg.algorithm,
        "base_instance": {k: v for k, v in cfg.instance.items()},
        "cells": cells,
        "skipped": skipped,
        "slopes": _slopes(cells, stochastic) if cells else None,
        "bound_violations": sum(c["bound_violations"] for c in cells),
        "instances": [spec.metadata() for _, spec, *_ in specs],
    }
    _write_outputs(cfg.output, rows, texts, meta)
    return rows, meta
