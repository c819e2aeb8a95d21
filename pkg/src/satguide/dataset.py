"""SR(n) instance pairs, sat/policy labels, and the line-oriented dataset format.

Record format, one per line, single-space separated::

    n <clause> ... <clause> <sat> <policy>

Each clause is DIMACS-style signed integers terminated by ``0``.  ``sat`` is
``0``/``1`` (or ``?`` if unknown) and ``policy`` is a ``0``/``1`` string over
literal codes ``0 .. 2n-1`` for satisfiable samples, ``-`` for unsatisfiable
ones and ``?`` if unlabeled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .cnf import CnfFormula, condition, lit, neg, var_of
from .solvers import Verdict, cdcl

P_BERNOULLI = 0.7
P_GEOMETRIC = 0.4


class DatasetError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class LabeledSample:
    formula: CnfFormula
    sat: int | None = None
    policy: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.sat not in (None, 0, 1):
            raise ValueError("sat label must be 0, 1 or None")
        if self.policy is not None:
            if self.sat != 1:
                raise ValueError("policy labels are only defined for satisfiable samples")
            if len(self.policy) != 2 * self.formula.num_vars:
                raise ValueError("policy needs one bit per literal code")

    @property
    def labeled(self) -> bool:
        return self.sat == 0 or (self.sat == 1 and self.policy is not None)


def _first_literal(view, assignment=None):
    return view.clauses[0][0]


def oracle_solve(formula: CnfFormula):
    """The labeling oracle: uncapped CDCL with a trivial branching rule."""
    return cdcl(formula, _first_literal)


def _satisfies(values, clause) -> bool:
    return any(values[var_of(x)] != bool(x & 1) for x in clause)


def sample_clause(n: int, rng: np.random.Generator, p_bernoulli=P_BERNOULLI, p_geo=P_GEOMETRIC) -> list[int]:
    k = 1 + int(rng.binomial(1, p_bernoulli)) + int(rng.geometric(p_geo))
    k = min(k, n)
    variables = rng.choice(n, size=k, replace=False)
    return [lit(int(v), rng.random() >= 0.5) for v in variables]


def gen_sr_pair(n: int, rng: np.random.Generator, p_bernoulli=P_BERNOULLI,
                p_geo=P_GEOMETRIC) -> tuple[CnfFormula, CnfFormula]:
    """Add random clauses until unsatisfiable; return (unsat, sat twin).

    The satisfiable twin negates the first literal of the final clause.
    """
    if n < 2:
        raise ValueError("SR(n) needs n >= 2")
    clauses: list[list[int]] = []
    model = None
    while True:
        clause = sample_clause(n, rng, p_bernoulli, p_geo)
        clauses.append(clause)
        # a model of the prefix that already satisfies the new clause proves sat
        if model is not None and _satisfies(model, clause):
            continue
        result = oracle_solve(CnfFormula(n, tuple(map(tuple, clauses))))
        if result.verdict is Verdict.SAT:
            model = result.witness
            continue
        break
    last = clauses[-1]
    twin = clauses[:-1] + [[neg(last[0])] + last[1:]]
    return CnfFormula(n, tuple(map(tuple, clauses))), CnfFormula(n, tuple(map(tuple, twin)))


def pair_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def gen_pairs(n: int, count: int, seed: int) -> Iterator[tuple[CnfFormula, CnfFormula]]:
    """Deterministic pair stream; pair ``i`` depends only on ``(seed, i)``."""
    for i in range(count):
        yield gen_sr_pair(n, pair_rng(seed, i))


def label_policy(formula: CnfFormula) -> LabeledSample:
    result = oracle_solve(formula)
    if result.verdict is not Verdict.SAT:
        return LabeledSample(formula, 0)
    policy = [0] * (2 * formula.num_vars)

    def mark(values):
        for v, val in enumerate(values):
            policy[lit(v, val)] = 1

    mark(result.witness)
    for code in range(2 * formula.num_vars):
        if policy[code]:
            continue
        r = oracle_solve(condition(formula, code))
        if r.verdict is Verdict.SAT:
            mark(r.witness)
    return LabeledSample(formula, 1, tuple(policy))


def gen_labeled_pairs(n: int, count: int, seed: int) -> list[LabeledSample]:
    """``2 * count`` labeled samples, each pair as (unsat, sat)."""
    out = []
    for unsat, sat in gen_pairs(n, count, seed):
        out.append(LabeledSample(unsat, 0))
        out.append(label_policy(sat))
    return out


def gen_eval_instances(n: int, count: int, seed: int) -> list[CnfFormula]:
    """Satisfiable members of fresh pairs."""
    return [sat for _, sat in gen_pairs(n, count, seed)]


# ---------------------------------------------------------------------------
# Serialization


def format_sample(sample: LabeledSample) -> str:
    f = sample.formula
    toks = [str(f.num_vars)]
    for c in f.dimacs_clauses():
        toks.extend(map(str, c))
        toks.append("0")
    toks.append("?" if sample.sat is None else str(sample.sat))
    if sample.sat == 0:
        toks.append("-")
    elif sample.policy is None:
        toks.append("?")
    else:
        toks.append("".join(map(str, sample.policy)))
    return " ".join(toks)


def parse_sample(line: str, lineno: int | None = None) -> LabeledSample:
    toks = line.split(" ")
    if len(toks) < 3:
        raise DatasetError("too few fields", lineno)
    try:
        n = int(toks[0])
        body = [int(t) for t in toks[1:-2]]
    except ValueError as e:
        raise DatasetError(f"bad integer ({e})", lineno) from None
    sat_tok, pol_tok = toks[-2], toks[-1]
    if body and body[-1] != 0:
        raise DatasetError("clause list must end with 0", lineno)
    clauses, cur = [], []
    for x in body:
        if x == 0:
            clauses.append(cur)
            cur = []
        else:
            cur.append(x)
    try:
        formula = CnfFormula.from_dimacs_clauses(n, clauses)
    except ValueError as e:
        raise DatasetError(str(e), lineno) from None
    if sat_tok not in ("0", "1", "?"):
        raise DatasetError(f"bad sat field {sat_tok!r}", lineno)
    sat = None if sat_tok == "?" else int(sat_tok)
    policy = None
    if sat == 0:
        if pol_tok != "-":
            raise DatasetError("unsatisfiable sample must have policy '-'", lineno)
    elif pol_tok != "?":
        if sat is None or len(pol_tok) != 2 * n or set(pol_tok) - {"0", "1"}:
            raise DatasetError(f"bad policy field {pol_tok!r}", lineno)
        policy = tuple(int(ch) for ch in pol_tok)
    try:
        return LabeledSample(formula, sat, policy)
    except ValueError as e:
        raise DatasetError(str(e), lineno) from None


def write_dataset(samples: Iterable[LabeledSample]) -> str:
    return "".join(format_sample(s) + "\n" for s in samples)


def read_dataset(lines) -> list[LabeledSample]:
    if isinstance(lines, str):
        lines = lines.splitlines()
    out = []
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        out.append(parse_sample(line, lineno))
    return out


# ---------------------------------------------------------------------------
# Batching


def pair_up(samples: list[LabeledSample]) -> list[tuple[LabeledSample, LabeledSample]]:
    """Group an (unsat, sat, unsat, sat, ...) stream into pairs."""
    if len(samples) % 2:
        raise ValueError("paired stream needs an even number of samples")
    pairs = list(zip(samples[::2], samples[1::2]))
    for a, b in pairs:
        if {a.sat, b.sat} != {0, 1}:
            raise ValueError("stream is not made of (unsat, sat) pairs")
    return pairs


def balanced_batches(pairs, batch_size: int, rng: np.random.Generator) -> Iterator[list]:
    """Endless stream of batches, each holding ``batch_size // 2`` whole pairs."""
    if batch_size < 2 or batch_size % 2:
        raise ValueError("balanced batches need an even batch size")
    per = batch_size // 2
    if per > len(pairs):
        raise ValueError("batch larger than dataset")
    while True:
        order = rng.permutation(len(pairs))
        for start in range(0, len(order) - per + 1, per):
            batch = []
            for i in order[start:start + per]:
                batch.extend(pairs[i])
            yield batch
