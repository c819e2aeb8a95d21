"""Quick built-in checks: solver/oracle agreement and gradient correctness."""

from __future__ import annotations

import numpy as np

from .cnf import CnfFormula
from .dataset import gen_sr_pair, pair_rng
from .graphnet import build_graph
from .graphnet.gradcheck import check_gradients, perturbed_params
from .heuristics import dlis, jw_os
from .solvers import Verdict, brute_force, cdcl, dpll

GRAD_TOLERANCE = 1e-3


def oracle_equivalence(instances: int, seed: int = 0) -> tuple[int, int]:
    """Returns (checked runs, disagreements) over SR(5..12) pairs."""
    checked = bad = 0
    for i in range(instances):
        n = 5 + i % 8
        for f in gen_sr_pair(n, pair_rng(seed, i)):
            truth = brute_force(f).verdict
            for solve in (dpll, cdcl):
                for h in (jw_os, dlis):
                    r = solve(f, h)
                    checked += 1
                    if r.verdict is not truth or (r.verdict is Verdict.SAT and not f.satisfied_by(r.witness)):
                        bad += 1
    return checked, bad


def gradient_report(attention: bool) -> dict[str, float]:
    formula = CnfFormula.from_dimacs_clauses(3, [[1, -3, 2], [-2, 3]])
    graph = build_graph(formula)
    params = perturbed_params(6, 3, attention, seed=7)
    labels = np.array([1, 0, 1, 1, 0, 1], dtype=float)
    return check_gradients(graph, params, 1, labels)


def run_selftest(instances: int = 200, seed: int = 0, out=print) -> bool:
    ok = True
    checked, bad = oracle_equivalence(instances, seed)
    passed = bad == 0
    ok &= passed
    out(f"{'PASS' if passed else 'FAIL'} oracle equivalence: {bad} disagreements in {checked} runs")
    for attention in (False, True):
        report = gradient_report(attention)
        worst = max(report.values())
        passed = worst < GRAD_TOLERANCE
        ok &= passed
        mode = "attention" if attention else "mean"
        out(f"{'PASS' if passed else 'FAIL'} gradient check ({mode}): max relative error {worst:.2e}")
    return ok
