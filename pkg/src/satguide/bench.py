"""Experiment harnesses: capped solve rates, head-to-head step counts, and the
attention ablation, plus the replica filter used before aggregating.

All instance streams are derived from recorded seeds, so every table can be
regenerated exactly.  CSV is the normative output; SVG charts are derived
from the same rows.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import statistics
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np

from .dataset import gen_eval_instances, gen_labeled_pairs, write_dataset
from .heuristics import HybridHeuristic, RandomHeuristic, jw_os
from .solvers import SOLVERS, Verdict

log = logging.getLogger(__name__)

EXP1_FIELDS = ["heuristic", "n", "instances", "solved", "solve_rate", "cap", "seed"]
EXP2_FIELDS = ["n", "solver", "instances", "wins", "draws", "losses", "win_pct", "draw_pct", "loss_pct", "seed"]
EXP3_FIELDS = ["n", "iterations", "mode", "replicas", "retained", "policy_error_mean", "policy_error_std",
               "loss_std", "flagged", "eval_seed", "eval_hash"]


def instance_seed(seed: int, n: int) -> int:
    """Seed of the SR(n) evaluation stream for a run seeded with ``seed``."""
    return seed * 1000 + n


# A heuristic factory builds a fresh heuristic for instance ``index``; stateful
# heuristics (random) must not leak state between instances.
HeuristicFactory = Callable[[int], Callable]


def constant_factory(heuristic) -> HeuristicFactory:
    return lambda index: heuristic


def random_factory(seed: int) -> HeuristicFactory:
    return lambda index: RandomHeuristic(seed * 100_003 + index)


def hybrid_factory(model, threshold: float = 0.3) -> HeuristicFactory:
    return lambda index: HybridHeuristic(model, threshold)


# ---------------------------------------------------------------------------
# Experiment 1: solve rate within a decision cap


def experiment1(heuristics: dict[str, HeuristicFactory], sizes: Iterable[int], count: int = 100,
                cap: int = 1000, seed: int = 0, solver: str = "dpll", instances=None) -> list[dict]:
    """Fraction of satisfiable SR(n) instances solved within ``cap`` decisions.

    ``instances`` optionally maps n to a pre-built instance list (otherwise
    fresh satisfiable instances are drawn from ``instance_seed(seed, n)``).
    """
    if not heuristics:
        raise ValueError("at least one heuristic is required")
    solve = SOLVERS[solver]
    rows = []
    for n in sizes:
        formulas = instances[n] if instances else gen_eval_instances(n, count, instance_seed(seed, n))
        for name, factory in heuristics.items():
            solved = 0
            for i, f in enumerate(formulas):
                r = solve(f, factory(i), cap=cap)
                if r.verdict is Verdict.SAT:
                    solved += 1
                elif r.verdict is Verdict.STEP_LIMIT:
                    if r.decisions > cap:
                        raise AssertionError("decision cap exceeded")
                else:
                    raise AssertionError(f"satisfiable instance {i} of SR({n}) reported unsat")
            rows.append({
                "heuristic": name, "n": n, "instances": len(formulas), "solved": solved,
                "solve_rate": solved / len(formulas) if formulas else 0.0, "cap": cap,
                "seed": instance_seed(seed, n),
            })
            log.info("exp1 %s SR(%d): %d/%d", name, n, solved, len(formulas))
    return rows


# ---------------------------------------------------------------------------
# Experiment 2: win/draw/loss on decision counts


@dataclass
class HeadToHead:
    wins: int = 0
    draws: int = 0
    losses: int = 0

    @property
    def total(self) -> int:
        return self.wins + self.draws + self.losses

    def percentages(self) -> tuple[float, float, float]:
        t = self.total or 1
        return 100.0 * self.wins / t, 100.0 * self.draws / t, 100.0 * self.losses / t


def compare_decisions(formulas, challenger: HeuristicFactory, baseline: HeuristicFactory,
                      solver: str = "dpll") -> tuple[HeadToHead, list[tuple[int, int]]]:
    """Uncapped runs of both heuristics; fewer decisions wins."""
    solve = SOLVERS[solver]
    score = HeadToHead()
    counts = []
    for i, f in enumerate(formulas):
        a = solve(f, challenger(i))
        b = solve(f, baseline(i))
        if a.verdict is not b.verdict:
            raise AssertionError(f"verdict disagreement on instance {i}")
        counts.append((a.decisions, b.decisions))
        if a.decisions < b.decisions:
            score.wins += 1
        elif a.decisions == b.decisions:
            score.draws += 1
        else:
            score.losses += 1
    return score, counts


def experiment2(challenger: HeuristicFactory, sizes: Iterable[int], count: int = 100,
                solver: str = "dpll", seed: int = 0, baseline: HeuristicFactory | None = None,
                instances=None) -> list[dict]:
    baseline = baseline or constant_factory(jw_os)
    rows = []
    for n in sizes:
        formulas = instances[n] if instances else gen_eval_instances(n, count, instance_seed(seed, n))
        score, _ = compare_decisions(formulas, challenger, baseline, solver)
        win, draw, loss = score.percentages()
        rows.append({
            "n": n, "solver": solver, "instances": score.total, "wins": score.wins,
            "draws": score.draws, "losses": score.losses, "win_pct": win, "draw_pct": draw,
            "loss_pct": loss, "seed": instance_seed(seed, n),
        })
    return rows


# ---------------------------------------------------------------------------
# Replica filter and Experiment 3


@dataclass(frozen=True)
class ReplicaFilter:
    retained: tuple[int, ...]
    std: float
    exceeds: bool


def sample_std(values) -> float:
    values = list(values)
    return statistics.stdev(values) if len(values) > 1 else 0.0


def filter_replicas(losses, threshold: float = 1.0, max_drop: int = 2) -> ReplicaFilter:
    """Greedily drop the replica whose removal lowers the loss std the most,
    until std <= threshold, ``max_drop`` replicas are gone, or one remains."""
    losses = list(losses)
    if not losses:
        raise ValueError("at least one replica is required")
    keep = list(range(len(losses)))
    dropped = 0
    std = sample_std(losses)
    while std > threshold and dropped < max_drop and len(keep) > 1:
        best = None
        for j in keep:
            s = sample_std(losses[k] for k in keep if k != j)
            if best is None or s < best[0]:
                best = (s, j)
        std, j = best
        keep.remove(j)
        dropped += 1
    return ReplicaFilter(tuple(keep), std, std > threshold)


def dataset_hash(samples) -> str:
    return hashlib.sha256(write_dataset(samples).encode()).hexdigest()[:16]


def experiment3(sizes: Iterable[int], iterations: Iterable[int] = (20, 40), replicas: int = 3,
                train_config=None, train_pairs: int = 500, eval_pairs: int = 100, seed: int = 0,
                modes=("attention", "mean")) -> list[dict]:
    """Attention ablation: policy error (mean and sample std over retained
    replicas) for every (n, T, mode) on one shared evaluation set per n."""
    from .graphnet import TrainConfig, evaluate, train

    base = train_config or TrainConfig(train_steps=2000)
    rows = []
    for n in sizes:
        train_set = gen_labeled_pairs(n, train_pairs, instance_seed(seed, n))
        eval_seed = instance_seed(seed, n) + 500
        eval_set = gen_labeled_pairs(n, eval_pairs, eval_seed)
        eval_hash = dataset_hash(eval_set)
        for T in iterations:
            for mode in modes:
                results = []
                for r in range(replicas):
                    cfg = replace(base, iterations=T, attention=(mode == "attention"), seed=base.seed + r)
                    params, _ = train(train_set, cfg)
                    results.append(evaluate(params, eval_set))
                kept = filter_replicas([m["loss"] for m in results])
                errs = [results[k]["policy_error"] for k in kept.retained]
                flagged = kept.exceeds or len(kept.retained) < 3
                if flagged:
                    log.warning("SR(%d) T=%d %s: %d replicas retained, loss std %.3f",
                                n, T, mode, len(kept.retained), kept.std)
                rows.append({
                    "n": n, "iterations": T, "mode": mode, "replicas": replicas,
                    "retained": len(kept.retained), "policy_error_mean": float(np.mean(errs)),
                    "policy_error_std": sample_std(errs), "loss_std": kept.std, "flagged": int(flagged),
                    "eval_seed": eval_seed, "eval_hash": eval_hash,
                })
    return rows


# ---------------------------------------------------------------------------
# Output


def rows_to_csv(rows: list[dict], fields: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def bar_chart_svg(labels: list[str], values: list[float], title: str, vmax: float | None = None) -> str:
    """Minimal horizontal bar chart."""
    vmax = vmax or max(values + [1e-12])
    bar_h, gap, left, width = 18, 6, 180, 360
    height = 40 + len(values) * (bar_h + gap)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{left + width + 80}" height="{height}">',
        f'<text x="10" y="20" font-family="sans-serif" font-size="14">{title}</text>',
    ]
    for i, (label, v) in enumerate(zip(labels, values)):
        y = 32 + i * (bar_h + gap)
        w = width * (v / vmax if vmax else 0.0)
        parts.append(f'<text x="10" y="{y + 13}" font-family="sans-serif" font-size="12">{label}</text>')
        parts.append(f'<rect x="{left}" y="{y}" width="{w:.1f}" height="{bar_h}" fill="#4878a8"/>')
        parts.append(f'<text x="{left + w + 4:.1f}" y="{y + 13}" font-family="sans-serif" '
                     f'font-size="12">{v:.3g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def svg_from_csv(text: str, experiment: int) -> str:
    rows = list(csv.DictReader(io.StringIO(text)))
    if experiment == 1:
        labels = [f"{r['heuristic']} SR({r['n']})" for r in rows]
        return bar_chart_svg(labels, [100 * float(r["solve_rate"]) for r in rows], "% solved within cap", 100)
    if experiment == 2:
        labels, values = [], []
        for r in rows:
            for key in ("win_pct", "draw_pct", "loss_pct"):
                labels.append(f"SR({r['n']}) {r['solver']} {key[:-4]}")
                values.append(float(r[key]))
        return bar_chart_svg(labels, values, "hybrid vs JW-OS (% of instances)", 100)
    labels = [f"SR({r['n']}) T={r['iterations']} {r['mode']}" for r in rows]
    return bar_chart_svg(labels, [float(r["policy_error_mean"]) for r in rows], "policy error")
