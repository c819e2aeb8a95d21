"""Branching heuristics (``choose-literal`` implementations).

Every heuristic accepts ``(view, assignment=None)`` and returns a literal code
that occurs in the residual view.  Ties go to the smallest literal code.
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from .cnf import ResidualView, condition
from .solvers import Verdict, brute_force


def _argmax_smallest(scores: dict[int, float]) -> int:
    # max score, then smallest code
    return min(scores, key=lambda code: (-scores[code], code))


def jw_scores(view: ResidualView) -> dict[int, float]:
    scores: dict[int, float] = defaultdict(float)
    for c in view.clauses:
        w = 2.0 ** -len(c)
        for x in c:
            scores[x] += w
    return dict(scores)


def jw_os(view: ResidualView, assignment=None) -> int:
    """One-sided Jeroslow-Wang: argmax of sum of 2^-|c| over clauses containing l."""
    return _argmax_smallest(jw_scores(view))


def dlis_scores(view: ResidualView) -> dict[int, int]:
    scores: dict[int, int] = defaultdict(int)
    for c in view.clauses:
        for x in c:
            scores[x] += 1
    return dict(scores)


def dlis(view: ResidualView, assignment=None) -> int:
    """Dynamic largest individual sum: most frequent literal in unresolved clauses."""
    return _argmax_smallest(dlis_scores(view))


def random_choice(view: ResidualView, rng: np.random.Generator) -> int:
    lits = view.literals()
    return lits[int(rng.integers(len(lits)))]


class RandomHeuristic:
    """Uniform choice among the view's literals; reseeded per instance."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def reset(self):
        self.rng = np.random.default_rng(self.seed)

    def __call__(self, view, assignment=None):
        return random_choice(view, self.rng)


# ---------------------------------------------------------------------------
# Learned guidance


def _policy_argmax(graph, policy: np.ndarray) -> int:
    present = graph.present_literals()
    best = present[np.argmax(policy[present])]  # first max == smallest node id
    return int(graph.literal_codes[best])


def network_readout(view: ResidualView, model) -> tuple[float, int]:
    """One network evaluation: final-iteration sat probability and policy argmax."""
    from .graphnet import build_graph, predict

    graph = build_graph(view)
    pred = predict(graph, model)
    return float(pred.sat_prob[-1]), _policy_argmax(graph, pred.policy[-1])


def neural_choice(view: ResidualView, model, assignment=None) -> int:
    return network_readout(view, model)[1]


def hybrid_choice(view: ResidualView, model, threshold: float = 0.3, assignment=None) -> int:
    sat_prob, code = network_readout(view, model)
    if sat_prob < threshold:
        return jw_os(view)
    return code


class NeuralHeuristic:
    def __init__(self, model):
        self.model = model

    def __call__(self, view, assignment=None):
        return neural_choice(view, self.model)


class HybridHeuristic:
    """Neural policy, falling back to JW-OS whenever predicted sat < threshold.

    The switch is re-evaluated at every decision; ``fallbacks`` counts how
    often JW-OS was used.
    """

    def __init__(self, model, threshold: float = 0.3):
        self.model = model
        self.threshold = threshold
        self.fallbacks = 0

    def __call__(self, view, assignment=None):
        sat_prob, code = network_readout(view, self.model)
        if sat_prob < self.threshold:
            self.fallbacks += 1
            return jw_os(view)
        return code


# ---------------------------------------------------------------------------
# Exhaustive reference heuristics (benchmark sanity checks only)


def _extends_to_model(view: ResidualView, code: int) -> bool:
    return brute_force(condition(view.as_formula(), code)).verdict is Verdict.SAT


class OracleHeuristic:
    """Picks the smallest literal that keeps the residual formula satisfiable."""

    def __call__(self, view, assignment=None):
        lits = view.literals()
        for code in lits:
            if _extends_to_model(view, code):
                return code
        return lits[0]


class AntiOracleHeuristic:
    """Picks the smallest literal whose assertion makes the residual unsatisfiable."""

    def __call__(self, view, assignment=None):
        lits = view.literals()
        for code in lits:
            if not _extends_to_model(view, code):
                return code
        return lits[0]


HEURISTICS = {"jw": jw_os, "dlis": dlis}

__all__ = [
    "jw_os", "dlis", "random_choice", "neural_choice", "hybrid_choice", "jw_scores", "dlis_scores",
    "RandomHeuristic", "NeuralHeuristic", "HybridHeuristic", "OracleHeuristic", "AntiOracleHeuristic",
    "network_readout",
]
