"""Mini-batch Adam training and evaluation metrics."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..dataset import LabeledSample, balanced_batches, pair_up
from .graph import batch_graphs, build_graph
from .model import ModelParams, backward, forward, iteration_losses

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 1e-4
    train_steps: int = 20_000
    attention: bool = True
    iterations: int = 16
    dim: int = 32
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = None
    eval_every: int = 1000

    def __post_init__(self):
        for name in ("batch_size", "train_steps", "iterations", "dim", "eval_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")

    def to_dict(self):
        return asdict(self)


@dataclass
class Prepared:
    """A sample with its graph and node-aligned policy labels."""

    graph: object
    sat: int
    policy: np.ndarray


def prepare(sample: LabeledSample) -> Prepared:
    if not sample.labeled:
        raise ValueError("training and evaluation need labeled samples")
    graph = build_graph(sample.formula)
    if sample.sat:
        policy = np.asarray(sample.policy, dtype=float)[graph.literal_codes]
    else:
        policy = np.zeros(graph.num_literal_nodes)
    return Prepared(graph, sample.sat, policy)


def collate(items: list[Prepared]):
    graph = batch_graphs([it.graph for it in items])
    sat = np.array([it.sat for it in items], dtype=float)
    policy = np.concatenate([it.policy for it in items])
    return graph, sat, policy


def evaluate(params: ModelParams, samples, batch_size: int = 128) -> dict:
    """Mean per-sample loss, sat error, policy error (sat samples only) and
    sat accuracy at threshold 0.5, all read from the final iteration."""
    items = [s if isinstance(s, Prepared) else prepare(s) for s in samples]
    total_loss = 0.0
    sat_abs, sat_hits = [], []
    pol_abs = []
    for start in range(0, len(items), batch_size):
        chunk = items[start:start + batch_size]
        graph, sat, policy = collate(chunk)
        pred, _ = forward(graph, params)
        total_loss += float(iteration_losses(pred, graph, sat, policy).sum())
        final_sat = np.asarray(pred.sat_prob).reshape(pred.sat_prob.shape[0], -1)[-1]
        sat_abs.append(np.abs(final_sat - sat))
        sat_hits.append((final_sat > 0.5) == (sat == 1))
        mask = sat[graph.literal_graph] == 1
        pol_abs.append(np.abs(pred.policy[-1] - policy)[mask])
    pol = np.concatenate(pol_abs) if pol_abs else np.zeros(0)
    return {
        "loss": total_loss / max(len(items), 1),
        "sat_error": float(np.concatenate(sat_abs).mean()),
        "policy_error": float(pol.mean()) if pol.size else float("nan"),
        "sat_accuracy": float(np.concatenate(sat_hits).mean()),
    }


class Adam:
    def __init__(self, params: ModelParams, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = params.zeros_like()
        self.v = params.zeros_like()
        self.t = 0

    def step(self, params: ModelParams, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        lr_t = self.lr * np.sqrt(1 - b2 ** self.t) / (1 - b1 ** self.t)
        for name, g in grads.items():
            m, v = self.m[name], self.v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p = params.tensors[name]
            p -= (lr_t * m / (np.sqrt(v) + self.eps)).astype(p.dtype)


def _batches(items, samples, config, rng):
    try:
        pairs = pair_up(samples)
    except ValueError:
        pairs = None
    if pairs is not None and config.batch_size % 2 == 0 and config.batch_size // 2 <= len(pairs):
        index = {id(s): i for i, s in enumerate(samples)}
        for batch in balanced_batches(pairs, config.batch_size, rng):
            yield [items[index[id(s)]] for s in batch]
        return
    while True:
        order = rng.permutation(len(items))
        if config.batch_size > len(items):
            yield [items[i] for i in order]
            continue
        for start in range(0, len(order) - config.batch_size + 1, config.batch_size):
            yield [items[i] for i in order[start:start + config.batch_size]]


def train(samples: list[LabeledSample], config: TrainConfig, eval_samples=None,
          params: ModelParams | None = None, callback=None):
    """Train from scratch (or from ``params``); returns ``(params, metric_log)``.

    Each metric-log entry holds the step, the running mean training loss
    since the previous entry, and :func:`evaluate` metrics on
    ``eval_samples`` (when given).
    """
    if not samples:
        raise ValueError("empty training set")
    if params is None:
        params = ModelParams.init(config.dim, config.iterations, config.attention, seed=config.seed)
    else:
        params = params.astype(params.dtype)  # copy; the caller's params stay untouched
    rng = np.random.default_rng([config.seed, 1])
    items = [prepare(s) for s in samples]
    eval_items = [prepare(s) for s in eval_samples] if eval_samples else None
    opt = Adam(params, config.learning_rate, config.beta1, config.beta2, config.eps)
    metric_log = []
    running, count = 0.0, 0
    batches = _batches(items, samples, config, rng)
    for step in range(1, config.train_steps + 1):
        batch = next(batches)
        graph, sat, policy = collate(batch)
        pred, cache = forward(graph, params)
        running += float(iteration_losses(pred, graph, sat, policy).sum()) / len(batch)
        count += 1
        grads = backward(pred, cache, sat, policy)
        scale = 1.0 / len(batch)
        if config.clip_norm is not None:
            norm = scale * np.sqrt(sum(float((g.astype(np.float64) ** 2).sum()) for g in grads.values()))
            if norm > config.clip_norm:
                scale *= config.clip_norm / norm
        for g in grads.values():
            g *= scale
        opt.step(params, grads)
        if step % config.eval_every == 0 or step == config.train_steps:
            entry = {"step": step, "train_loss": running / count}
            if eval_items:
                entry.update(evaluate(params, eval_items))
            metric_log.append(entry)
            log.info("step %d %s", step, entry)
            if callback is not None:
                callback(entry, params)
            running, count = 0.0, 0
    return params, metric_log
