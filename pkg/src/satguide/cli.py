"""Command-line interface: ``satguide <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .cnf import DimacsError, parse_dimacs, to_dimacs
from .dataset import DatasetError, LabeledSample, gen_pairs, label_policy, read_dataset, write_dataset
from .graphnet import CheckpointError, TrainConfig, read_checkpoint, train, write_checkpoint
from .heuristics import HybridHeuristic, NeuralHeuristic, RandomHeuristic, dlis, jw_os
from .solvers import SOLVERS, Verdict

log = logging.getLogger("satguide")


class UsageError(Exception):
    pass


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write_text(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()] if text.strip() else []


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args):
    samples = []
    for unsat, sat in gen_pairs(args.n, args.count, args.seed):
        samples.append(LabeledSample(unsat, 0))
        samples.append(label_policy(sat) if args.label else LabeledSample(sat, 1))
    _write_text(args.out, write_dataset(samples))


def cmd_label(args):
    samples = read_dataset(_read_text(args.input))
    _write_text(args.out, write_dataset(label_policy(s.formula) for s in samples))


def cmd_train(args):
    samples = read_dataset(_read_text(args.dataset))
    if not samples:
        raise UsageError("training dataset is empty")
    if not all(s.labeled for s in samples):
        raise UsageError("training dataset has unlabeled samples; run 'label' first")
    eval_samples = read_dataset(_read_text(args.eval)) if args.eval else None
    config = TrainConfig(batch_size=args.batch, learning_rate=args.lr, train_steps=args.steps,
                         attention=args.attention, iterations=args.iters, dim=args.dim, seed=args.seed,
                         clip_norm=args.clip if args.clip > 0 else None, eval_every=args.eval_every)
    params, metric_log = train(samples, config, eval_samples)
    write_checkpoint(params, args.out)
    if args.log:
        _write_text(args.log, "".join(json.dumps(e, sort_keys=True) + "\n" for e in metric_log))
    final = metric_log[-1] if metric_log else {}
    print(" ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}" for k, v in final.items()))


def _heuristic(name: str, model_path: str | None, seed: int, threshold: float):
    if name == "jw":
        return jw_os
    if name == "dlis":
        return dlis
    if name == "random":
        return RandomHeuristic(seed)
    if name in ("neural", "hybrid"):
        if not model_path:
            raise UsageError(f"--heuristic {name} requires --model")
        model = read_checkpoint(model_path)
        return NeuralHeuristic(model) if name == "neural" else HybridHeuristic(model, threshold)
    raise UsageError(f"unknown heuristic {name!r}")


def cmd_solve(args):
    heuristic = _heuristic(args.heuristic, args.model, args.seed, args.threshold)
    formula = parse_dimacs(_read_text(args.file))
    result = SOLVERS[args.solver](formula, heuristic, cap=args.cap)
    print({Verdict.SAT: "SAT", Verdict.UNSAT: "UNSAT", Verdict.STEP_LIMIT: "STEP-LIMIT"}[result.verdict])
    print(f"decisions {result.decisions}")
    if result.is_sat:
        lits = [to_dimacs(2 * v + (0 if val else 1)) for v, val in enumerate(result.witness)]
        print("v " + " ".join(map(str, lits)) + " 0")


def _model_specs(specs):
    """``--model PATH`` or ``--model NAME=PATH``."""
    models = {}
    for spec in specs or []:
        name, _, path = spec.rpartition("=")
        name = name or Path(path).stem
        models[name] = read_checkpoint(path)
    return models


def _emit(rows, fields, args, experiment):
    text = bench.rows_to_csv(rows, fields)
    _write_text(args.out, text)
    if args.svg:
        Path(args.svg).write_text(bench.svg_from_csv(text, experiment), encoding="utf-8")


def cmd_bench1(args):
    factories = {}
    for name in args.heuristics:
        if name == "jw":
            factories["jw"] = bench.constant_factory(jw_os)
        elif name == "dlis":
            factories["dlis"] = bench.constant_factory(dlis)
        elif name == "random":
            factories["random"] = bench.random_factory(args.seed)
        else:
            raise UsageError(f"unknown heuristic {name!r}")
    for name, model in _model_specs(args.model).items():
        factories[f"neural:{name}"] = bench.constant_factory(NeuralHeuristic(model))
        if args.hybrid:
            factories[f"hybrid:{name}"] = bench.hybrid_factory(model, args.threshold)
    if not factories:
        raise UsageError("no heuristics selected")
    rows = bench.experiment1(factories, args.sizes, args.count, args.cap, args.seed, args.solver)
    _emit(rows, bench.EXP1_FIELDS, args, 1)


def cmd_bench2(args):
    model = read_checkpoint(args.model)
    rows = []
    for solver in args.solver:
        rows += bench.experiment2(bench.hybrid_factory(model, args.threshold), args.sizes, args.count,
                                  solver, args.seed)
    _emit(rows, bench.EXP2_FIELDS, args, 2)


def cmd_bench3(args):
    base = TrainConfig(batch_size=args.batch, learning_rate=args.lr, train_steps=args.steps, dim=args.dim,
                       seed=args.seed, clip_norm=args.clip if args.clip > 0 else None)
    rows = bench.experiment3(args.sizes, args.iters, args.replicas, base, args.train_pairs,
                             args.eval_pairs, args.seed)
    _emit(rows, bench.EXP3_FIELDS, args, 3)


def cmd_selftest(args):
    from .selftest import run_selftest

    ok = run_selftest(instances=args.instances, seed=args.seed)
    if not ok:
        raise UsageError("selftest failed")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="satguide", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen", help="generate SR(n) pairs")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--count", type=int, required=True, help="number of (unsat, sat) pairs")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--label", action="store_true", help="also compute policy labels")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("label", help="(re)compute sat and policy labels")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_label)

    s = sub.add_parser("train", help="train a guidance network")
    s.add_argument("--dataset", required=True)
    s.add_argument("--eval", default=None)
    s.add_argument("--dim", type=int, default=32)
    s.add_argument("--iters", type=int, default=16)
    s.add_argument("--batch", type=int, default=32)
    s.add_argument("--steps", type=int, default=20_000)
    s.add_argument("--lr", type=float, default=1e-4)
    s.add_argument("--clip", type=float, default=0.0, help="gradient-norm clip (0 = off)")
    s.add_argument("--attention", type=_on_off, default=True, metavar="on|off")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--eval-every", type=int, default=1000)
    s.add_argument("--out", required=True, help="checkpoint path")
    s.add_argument("--log", default=None, help="metric log (JSON lines)")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("solve", help="solve a DIMACS file")
    s.add_argument("file")
    s.add_argument("--heuristic", choices=["jw", "dlis", "random", "neural", "hybrid"], default="jw")
    s.add_argument("--model", default=None)
    s.add_argument("--cap", type=int, default=None)
    s.add_argument("--solver", choices=sorted(SOLVERS), default="dpll")
    s.add_argument("--threshold", type=float, default=0.3)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_solve)

    def common(s, count=100):
        s.add_argument("--sizes", type=_int_list, default=[10])
        s.add_argument("--count", type=int, default=count)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--out", default=None)
        s.add_argument("--svg", default=None)

    s = sub.add_parser("bench1", help="solve rate within a decision cap")
    common(s)
    s.add_argument("--heuristics", nargs="*", default=["jw", "dlis", "random"])
    s.add_argument("--model", action="append", help="[NAME=]PATH, repeatable")
    s.add_argument("--hybrid", action="store_true", help="also run hybrid guidance per model")
    s.add_argument("--threshold", type=float, default=0.3)
    s.add_argument("--cap", type=int, default=1000)
    s.add_argument("--solver", choices=sorted(SOLVERS), default="dpll")
    s.set_defaults(func=cmd_bench1)

    s = sub.add_parser("bench2", help="hybrid vs JW-OS win/draw/loss")
    common(s)
    s.add_argument("--model", required=True)
    s.add_argument("--threshold", type=float, default=0.3)
    s.add_argument("--solver", choices=sorted(SOLVERS), nargs="+", default=["dpll", "cdcl"])
    s.set_defaults(func=cmd_bench2)

    s = sub.add_parser("bench3", help="attention ablation")
    s.add_argument("--sizes", type=_int_list, default=[10])
    s.add_argument("--iters", type=_int_list, default=[20, 40])
    s.add_argument("--replicas", type=int, default=3)
    s.add_argument("--steps", type=int, default=2000)
    s.add_argument("--dim", type=int, default=32)
    s.add_argument("--batch", type=int, default=32)
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--clip", type=float, default=0.65)
    s.add_argument("--train-pairs", type=int, default=500)
    s.add_argument("--eval-pairs", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=None)
    s.add_argument("--svg", default=None)
    s.set_defaults(func=cmd_bench3)

    s = sub.add_parser("selftest", help="oracle-equivalence and gradient checks")
    s.add_argument("--instances", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (UsageError, OSError, DimacsError, DatasetError, CheckpointError, ValueError) as e:
        print(f"satguide {args.command}: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
