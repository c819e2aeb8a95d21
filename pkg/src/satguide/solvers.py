"""DPLL and CDCL search driven by a pluggable branching heuristic.

A heuristic is any callable ``heuristic(view, assignment) -> literal`` where
``view`` is the :class:`~satguide.cnf.ResidualView` of the original clauses.
One heuristic call is one decision; propagated literals are free.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .cnf import Assignment, CnfFormula, neg, simplified_view, unit_propagate, var_of

MAX_BRUTE_FORCE_VARS = 26


class Verdict(str, enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    STEP_LIMIT = "step-limit"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SolveResult:
    verdict: Verdict
    decisions: int = 0
    witness: tuple[bool, ...] | None = None

    @property
    def is_sat(self) -> bool:
        return self.verdict is Verdict.SAT


class HeuristicError(RuntimeError):
    pass


def _checked_choice(heuristic, view, assignment) -> int:
    code = heuristic(view, assignment)
    code = int(code)
    if assignment.values[var_of(code)] is not None:
        raise HeuristicError(f"heuristic chose literal {code} of an assigned variable")
    if not any(var_of(x) == var_of(code) for c in view.clauses for x in c):
        raise HeuristicError(f"heuristic chose literal {code} absent from the residual formula")
    return code


def dpll(formula: CnfFormula, heuristic, cap: int | None = None) -> SolveResult:
    """Chronological backtracking search with unit propagation.

    Equivalent to the recursive formulation: after simplification return sat
    on an empty residual formula, fail on an empty clause, otherwise try the
    chosen literal and then its negation.  Runs on an explicit stack so deep
    instances do not hit the recursion limit.
    """
    if cap is not None and cap < 1:
        raise ValueError("cap must be positive")
    a = Assignment(formula.num_vars)
    decisions = 0
    # frames: [trail size before the decision, decision literal, negation tried]
    stack: list[list] = []
    prop = unit_propagate(formula, a)
    while True:
        if prop.ok:
            view = simplified_view(formula, a)
            if view.is_empty:
                return SolveResult(Verdict.SAT, decisions, a.full_values())
            if cap is not None and decisions >= cap:
                return SolveResult(Verdict.STEP_LIMIT, decisions)
            code = _checked_choice(heuristic, view, a)
            decisions += 1
            stack.append([len(a.trail), code, False])
            a.assign(code)
        else:
            while stack and stack[-1][2]:
                stack.pop()
            if not stack:
                return SolveResult(Verdict.UNSAT, decisions)
            frame = stack[-1]
            frame[2] = True
            a.undo_to(frame[0])
            a.assign(neg(frame[1]))
        prop = unit_propagate(formula, a, start=len(a.trail) - 1)


class CDCLSolver:
    """Conflict-driven clause learning, first-UIP, no restarts or deletion.

    Propagation uses two watched literals over original plus learned clauses.
    The heuristic only ever sees the residual view of the original clauses.
    Learned clauses are kept in ``self.learned`` for inspection.
    """

    def __init__(self, formula: CnfFormula, heuristic, cap: int | None = None):
        if cap is not None and cap < 1:
            raise ValueError("cap must be positive")
        self.formula = formula
        self.heuristic = heuristic
        self.cap = cap
        n = formula.num_vars
        self.clauses: list[list[int]] = [list(c) for c in formula.clauses]
        self.watches: list[list[int]] = [[] for _ in range(2 * n)]
        self.assignment = Assignment(n)
        self.level = [0] * n
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.decisions = 0
        self.learned: list[tuple[int, ...]] = []

    # -- helpers -----------------------------------------------------------

    def _value(self, code):
        return self.assignment.value(code)

    def _enqueue(self, code, reason):
        self.assignment.assign(code, reason)
        self.level[var_of(code)] = len(self.trail_lim)

    def _watch(self, ci):
        c = self.clauses[ci]
        self.watches[c[0]].append(ci)
        self.watches[c[1]].append(ci)

    def _backjump(self, level):
        if len(self.trail_lim) > level:
            self.assignment.undo_to(self.trail_lim[level])
            del self.trail_lim[level:]
            self.qhead = len(self.assignment.trail)

    # -- core --------------------------------------------------------------

    def _propagate(self):
        """Returns the index of a conflicting clause or None."""
        trail = self.assignment.trail
        while self.qhead < len(trail):
            p = trail[self.qhead][0]
            self.qhead += 1
            false_lit = neg(p)
            ws = self.watches[false_lit]
            i = 0
            while i < len(ws):
                ci = ws[i]
                c = self.clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                if self._value(c[0]) is True:
                    i += 1
                    continue
                for k in range(2, len(c)):
                    if self._value(c[k]) is not False:
                        c[1], c[k] = c[k], c[1]
                        self.watches[c[1]].append(ci)
                        ws[i] = ws[-1]
                        ws.pop()
                        break
                else:
                    if self._value(c[0]) is False:
                        self.qhead = len(trail)
                        return ci
                    self._enqueue(c[0], ci)
                    i += 1
        return None

    def _analyze(self, confl):
        """First-UIP learned clause (asserting literal first) and backjump level."""
        trail = self.assignment.trail
        current = len(self.trail_lim)
        seen = set()
        learnt = [None]
        counter = 0
        p = None
        idx = len(trail) - 1
        ci = confl
        while True:
            for q in self.clauses[ci]:
                v = var_of(q)
                if p is not None and v == var_of(p):
                    continue
                if v in seen or self.level[v] == 0:
                    continue
                seen.add(v)
                if self.level[v] == current:
                    counter += 1
                else:
                    learnt.append(q)
            while var_of(trail[idx][0]) not in seen:
                idx -= 1
            p = trail[idx][0]
            ci = trail[idx][1]
            idx -= 1
            counter -= 1
            if counter == 0:
                break
        learnt[0] = neg(p)
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda j: self.level[var_of(learnt[j])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[var_of(learnt[1])]

    def solve(self) -> SolveResult:
        a = self.assignment
        for ci, c in enumerate(self.clauses):
            if not c:
                return SolveResult(Verdict.UNSAT, 0)
            if len(c) == 1:
                val = self._value(c[0])
                if val is False:
                    return SolveResult(Verdict.UNSAT, 0)
                if val is None:
                    self._enqueue(c[0], ci)
            else:
                self._watch(ci)
        while True:
            confl = self._propagate()
            if confl is not None:
                if not self.trail_lim:
                    return SolveResult(Verdict.UNSAT, self.decisions)
                learnt, bj = self._analyze(confl)
                self._backjump(bj)
                self.clauses.append(learnt)
                self.learned.append(tuple(learnt))
                ci = len(self.clauses) - 1
                if len(learnt) > 1:
                    self._watch(ci)
                self._enqueue(learnt[0], ci)
                continue
            view = simplified_view(self.formula, a)
            if view.is_empty:
                return SolveResult(Verdict.SAT, self.decisions, a.full_values())
            if self.cap is not None and self.decisions >= self.cap:
                return SolveResult(Verdict.STEP_LIMIT, self.decisions)
            code = _checked_choice(self.heuristic, view, a)
            self.decisions += 1
            self.trail_lim.append(len(a.trail))
            self._enqueue(code, None)


def cdcl(formula: CnfFormula, heuristic, cap: int | None = None) -> SolveResult:
    return CDCLSolver(formula, heuristic, cap).solve()


SOLVERS = {"dpll": dpll, "cdcl": cdcl}


# ---------------------------------------------------------------------------
# Exhaustive oracle


def _chunks(n, size=1 << 15):
    total = 1 << n
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, size):
        idx = np.arange(start, min(total, start + size), dtype=np.int64)
        yield ((idx[:, None] >> shifts) & 1).astype(bool)


def _satisfied_rows(formula, vals):
    ok = np.ones(len(vals), dtype=bool)
    for c in formula.clauses:
        vs = np.fromiter((var_of(x) for x in c), dtype=np.int64, count=len(c))
        pos = np.fromiter((not (x & 1) for x in c), dtype=bool, count=len(c))
        ok &= (vals[:, vs] == pos).any(axis=1)
    return ok


def brute_force(formula: CnfFormula) -> SolveResult:
    """Enumerate assignments in lexicographic order (x1 most significant,
    false before true) and return the first model."""
    if formula.num_vars > MAX_BRUTE_FORCE_VARS:
        raise ValueError(f"brute force refuses {formula.num_vars} > {MAX_BRUTE_FORCE_VARS} variables")
    for vals in _chunks(formula.num_vars):
        ok = _satisfied_rows(formula, vals)
        hits = np.flatnonzero(ok)
        if hits.size:
            return SolveResult(Verdict.SAT, 0, tuple(bool(x) for x in vals[hits[0]]))
    return SolveResult(Verdict.UNSAT, 0)


def all_models(formula: CnfFormula) -> np.ndarray:
    """Boolean matrix of every model, one row each (small formulas only)."""
    if formula.num_vars > 20:
        raise ValueError("all_models is limited to 20 variables")
    rows = [vals[_satisfied_rows(formula, vals)] for vals in _chunks(formula.num_vars)]
    return np.concatenate(rows) if rows else np.zeros((0, formula.num_vars), dtype=bool)
