"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
The desk-scale model used by criteria 7 and 8 is trained once per session.
"""

import math
import sys
import time

import numpy as np
import pytest

from conftest import fig2_formula
from test_graphnet import check_invariances

from satguide import bench
from satguide.cnf import CnfFormula, condition, simplified_view
from satguide.dataset import gen_eval_instances, gen_labeled_pairs, gen_sr_pair, label_policy, pair_rng
from satguide.graphnet import ModelParams, TrainConfig, build_graph, evaluate, predict, train
from satguide.graphnet.gradcheck import perturbed_params
from satguide.graphnet.model import Prediction, aggregate_attention, iteration_losses, loss
from satguide.heuristics import NeuralHeuristic, RandomHeuristic, dlis, jw_os, neural_choice
from satguide.selftest import gradient_report
from satguide.solvers import Verdict, brute_force, cdcl, dpll

# pinned tolerances
SOUNDNESS_INSTANCES = 1000
SOUNDNESS_SECONDS = 120.0
INVARIANCE_TOL = 1e-6
GRADIENT_TOL = 1e-3
ATTENTION_TOL = 1e-9
POLICY_ERROR_MAX = 0.30
SAT_ACCURACY_MIN = 0.65
MAX_TRAIN_STEPS = 20_000
CAP = 1000
LABEL_SAMPLES = 200

# desk-scale training run (criteria 7 and 8)
DESK_CONFIG = TrainConfig(batch_size=32, learning_rate=1e-3, train_steps=3000, attention=True, iterations=16,
                          dim=32, seed=0, clip_norm=0.65, eval_every=3000)
DESK_TRAIN_PAIRS = 4000
DESK_EVAL_PAIRS = 200


def _line(number, passed, detail):
    return f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"


# ---------------------------------------------------------------------------


def criterion_1():
    start = time.perf_counter()
    runs = bad = instances = 0
    i = 0
    while instances < SOUNDNESS_INSTANCES:
        n = 5 + i % 8
        for f in gen_sr_pair(n, pair_rng(31337, i)):
            instances += 1
            truth = brute_force(f).verdict
            for solve in (dpll, cdcl):
                for h in (jw_os, dlis, RandomHeuristic(i)):
                    r = solve(f, h)
                    runs += 1
                    if r.verdict is not truth or (r.is_sat and not f.satisfied_by(r.witness)):
                        bad += 1
        i += 1
    elapsed = time.perf_counter() - start
    return bad == 0 and elapsed < SOUNDNESS_SECONDS, (
        f"{bad} disagreements over {instances} instances ({runs} solver runs), {elapsed:.1f}s "
        f"(limit {SOUNDNESS_SECONDS:.0f}s)")


def criterion_2():
    f = fig2_formula()
    view = simplified_view(f)
    got = (jw_os(view), dlis(view))
    ok = got == (3, 0)
    rng = np.random.default_rng(0)
    for _ in range(20):
        perm = CnfFormula(3, [tuple(rng.permutation(c).tolist()) for c in f.clauses[::rng.choice([1, -1])]])
        v = simplified_view(perm)
        ok &= (jw_os(v), dlis(v)) == got
    ok &= dlis(simplified_view(CnfFormula.from_dimacs_clauses(3, [[1, 2], [1, 3]]))) == 0
    return ok, f"jw_os -> code {got[0]} (want 3, not-B), dlis -> code {got[1]} (want 0, A); stable under 20 permutations"


def criterion_3():
    worst = {m: check_invariances(m, formulas=100, transforms=10) for m in (False, True)}
    ok = all(v < INVARIANCE_TOL for v in worst.values())
    return ok, (f"max deviation mean={worst[False]:.2e} attention={worst[True]:.2e} "
                f"over 100 SR(8) x 10 transforms (tol {INVARIANCE_TOL:g})")


def criterion_4():
    reports = {m: gradient_report(m) for m in (False, True)}
    worst = {m: max(r.values()) for m, r in reports.items()}
    ok = all(w < GRADIENT_TOL for w in worst.values()) and len(reports[True]) == 8 and len(reports[False]) == 7
    return ok, f"max relative error mean={worst[False]:.2e} attention={worst[True]:.2e} (tol {GRADIENT_TOL:g})"


def criterion_5():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(200):
        k, d = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        V, K, Q = rng.normal(size=(k, d)), rng.normal(size=(k, d)), rng.normal(size=d)
        want = [sum(V[i][j] / (1 + math.exp(-sum(K[i][m] * Q[m] for m in range(d)))) for i in range(k))
                for j in range(d)]
        worst = max(worst, float(np.abs(aggregate_attention(V, K, Q) - want).max()))
    return worst < ATTENTION_TOL, f"max |gated sum - scalar evaluation| = {worst:.1e} (tol {ATTENTION_TOL:g})"


def criterion_6():
    ok = True
    g1 = build_graph(CnfFormula.from_dimacs_clauses(1, [[1]]))
    half = Prediction(np.full(20, 0.5), np.full((20, 2), 0.5))
    ok &= abs(loss(half, g1, 0) - 20 * math.log(2)) < 1e-12
    worst_prefix = 0.0
    for attention in (False, True):
        for i in range(10):
            f = gen_sr_pair(8, np.random.default_rng(40 + i))[i % 2]
            g = build_graph(f)
            params = perturbed_params(6, 6, attention, seed=i)
            labels = np.random.default_rng(i).integers(0, 2, g.num_literal_nodes)
            sat = 1 - i % 2
            per_t = iteration_losses(predict(g, params), g, sat, labels)
            if sat == 0:
                ok &= bool(np.all(per_t[:, 1] == 0))
                ok &= loss(predict(g, params), g, 0, labels) == loss(predict(g, params), g, 0)
            totals = per_t.sum(axis=1)
            for k in range(1, 7):
                short = loss(predict(g, params.with_iterations(k)), g, sat, labels)
                worst_prefix = max(worst_prefix, abs(short - totals[:k].sum()) / max(abs(short), 1.0))
    ok &= worst_prefix < 1e-12
    return ok, f"unsat policy term zero; T=k loss vs summed prefix losses, max rel diff {worst_prefix:.1e}"


_desk = {}


def desk_model():
    if not _desk:
        start = time.perf_counter()
        train_set = gen_labeled_pairs(10, DESK_TRAIN_PAIRS, seed=1)
        eval_set = gen_labeled_pairs(10, DESK_EVAL_PAIRS, seed=999)
        params, _ = train(train_set, DESK_CONFIG)
        _desk.update(params=params, eval_set=eval_set, metrics=evaluate(params, eval_set),
                     baseline=evaluate(ModelParams.init(DESK_CONFIG.dim, DESK_CONFIG.iterations, DESK_CONFIG.attention,
                                                       seed=DESK_CONFIG.seed), eval_set),
                     seconds=time.perf_counter() - start)
    return _desk


def criterion_7():
    d = desk_model()
    m, b = d["metrics"], d["baseline"]
    ok = (m["policy_error"] < POLICY_ERROR_MAX and m["sat_accuracy"] > SAT_ACCURACY_MIN
          and DESK_CONFIG.train_steps <= MAX_TRAIN_STEPS)
    return ok, (f"SR(10) eval: policy error {m['policy_error']:.3f} (< {POLICY_ERROR_MAX}), sat accuracy "
                f"{m['sat_accuracy']:.3f} (> {SAT_ACCURACY_MIN}); untrained {b['policy_error']:.3f}/"
                f"{b['sat_accuracy']:.3f}; {DESK_CONFIG.train_steps} steps, {d['seconds'] / 60:.1f} min")


def criterion_8():
    params = desk_model()["params"]
    sizes = [10]
    instances = {10: gen_eval_instances(10, 200, bench.instance_seed(0, 10))}
    rows = bench.experiment1({"neural": bench.constant_factory(NeuralHeuristic(params)),
                              "random": bench.random_factory(0)}, sizes, cap=CAP, instances=instances)
    solved = {r["heuristic"]: r["solved"] for r in rows}
    ok = solved["neural"] >= solved["random"]
    parts = []
    for solver in ("dpll", "cdcl"):
        row = bench.experiment2(bench.hybrid_factory(params), sizes, solver=solver, instances=instances)[0]
        ok &= row["wins"] + row["draws"] + row["losses"] == row["instances"] == 200
        ok &= abs(row["win_pct"] + row["draw_pct"] + row["loss_pct"] - 100.0) < 1e-9
        parts.append(f"{solver} hybrid vs JW-OS {row['wins']}/{row['draws']}/{row['losses']}")
    # policy quality at the decision point: chosen literal has policy label 1
    hits = {"neural": 0, "random": 0}
    labeled = [s for s in desk_model()["eval_set"] if s.sat == 1]
    rng = np.random.default_rng(0)
    for s in labeled:
        view = simplified_view(s.formula)
        hits["neural"] += s.policy[neural_choice(view, params)]
        lits = view.literals()
        hits["random"] += s.policy[lits[int(rng.integers(len(lits)))]]
    return ok, (f"capped solves neural {solved['neural']}/200 vs random {solved['random']}/200; "
                + "; ".join(parts) + f"; label-1 choices neural {hits['neural']} vs random {hits['random']}"
                f" of {len(labeled)}")


def criterion_9():
    ok = True
    # cap enforced exactly on an instance no heuristic finishes within 1000 decisions
    php = _pigeonhole(10, 9)
    for solve in (dpll, cdcl):
        r = solve(php, jw_os, cap=CAP)
        ok &= r.verdict is Verdict.STEP_LIMIT and r.decisions == CAP
    f1 = bench.filter_replicas([28.1, 28.3, 27.9])
    f2 = bench.filter_replicas([28, 28, 28, 28, 40])
    f3 = bench.filter_replicas([10, 20, 30, 40, 50])
    ok &= f1.retained == (0, 1, 2) and not f1.exceeds
    ok &= f2.retained == (0, 1, 2, 3) and f2.std == 0.0
    ok &= len(f3.retained) == 3 and f3.exceeds

    def replay():
        e1 = bench.experiment1({"jw": bench.constant_factory(jw_os), "random": bench.random_factory(0)},
                               [8, 10], count=20, cap=CAP, seed=0)
        model = perturbed_params(8, 4, True, seed=0).astype(np.float32)
        e2 = bench.experiment2(bench.hybrid_factory(model), [8], count=20, solver="cdcl", seed=0)
        cfg = TrainConfig(batch_size=4, learning_rate=1e-3, train_steps=5, dim=6, eval_every=5)
        e3 = bench.experiment3([6], iterations=[2], replicas=3, train_config=cfg, train_pairs=6, eval_pairs=4)
        return (bench.rows_to_csv(e1, bench.EXP1_FIELDS) + bench.rows_to_csv(e2, bench.EXP2_FIELDS)
                + bench.rows_to_csv(e3, bench.EXP3_FIELDS))

    ok &= replay() == replay()
    return ok, "cap stops at exactly 1000 decisions; filter examples reproduced; experiments 1-3 replay identically"


def _pigeonhole(pigeons, holes):
    v = lambda i, j: i * holes + j + 1
    clauses = [[v(i, j) for j in range(holes)] for i in range(pigeons)]
    for j in range(holes):
        for i in range(pigeons):
            for k in range(i + 1, pigeons):
                clauses.append([-v(i, j), -v(k, j)])
    return CnfFormula.from_dimacs_clauses(pigeons * holes, clauses)


def criterion_10():
    bad_pairs = 0
    for i in range(100):
        unsat, sat = gen_sr_pair(4 + i % 9, pair_rng(2718, i))
        bad_pairs += brute_force(unsat).verdict is not Verdict.UNSAT or brute_force(sat).verdict is not Verdict.SAT
    mismatches = checked = 0
    i = 0
    while checked < LABEL_SAMPLES:
        for f in gen_sr_pair(4 + i % 9, pair_rng(1618, i)):
            checked += 1
            s = label_policy(f)
            truth = brute_force(f).verdict is Verdict.SAT
            if truth != (s.sat == 1):
                mismatches += 1
            elif truth:
                want = tuple(int(brute_force(condition(f, c)).verdict is Verdict.SAT)
                             for c in range(2 * f.num_vars))
                mismatches += want != s.policy
        i += 1
    return bad_pairs == 0 and mismatches == 0, (
        f"{bad_pairs} unsound pairs of 100; {mismatches} label mismatches over {checked} SR(4..12) samples")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1))
def test_criterion(number, capsys):
    passed, detail = CRITERIA[number - 1]()
    with capsys.disabled():
        print("\n" + _line(number, passed, detail))
    assert passed, detail


if __name__ == "__main__":
    results = []
    for k, fn in enumerate(CRITERIA, start=1):
        passed, detail = fn()
        results.append(passed)
        print(_line(k, passed, detail), flush=True)
    sys.exit(0 if all(results) else 1)
