"""CNF formulas, DIMACS I/O, partial assignments and unit propagation.

Literals are integer codes: variable ``v`` positive is ``2*v``, negative is
``2*v + 1``.  Negation is therefore ``code ^ 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence


class DimacsError(ValueError):
    """Raised on malformed DIMACS input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TautologyError(ValueError):
    pass


def lit(var: int, positive: bool = True) -> int:
    return 2 * var + (0 if positive else 1)


def neg(code: int) -> int:
    return code ^ 1


def var_of(code: int) -> int:
    return code >> 1


def is_negative(code: int) -> bool:
    return bool(code & 1)


def from_dimacs(x: int) -> int:
    """Signed DIMACS literal (1-based) to literal code."""
    if x == 0:
        raise ValueError("0 is not a literal")
    return lit(abs(x) - 1, x > 0)


def to_dimacs(code: int) -> int:
    v = var_of(code) + 1
    return -v if is_negative(code) else v


def make_clause(literals: Iterable[int]) -> tuple[int, ...]:
    """Validate a clause; rejects duplicate literals and tautologies."""
    clause = tuple(literals)
    seen = set()
    for code in clause:
        if code < 0:
            raise ValueError(f"negative literal code {code}")
        if code in seen:
            raise ValueError(f"duplicate literal {to_dimacs(code)} in clause")
        if neg(code) in seen:
            raise TautologyError(f"tautological clause contains {to_dimacs(code)} and its negation")
        seen.add(code)
    return clause


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...] = ()
    comments: tuple[str, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if self.num_vars < 1:
            raise ValueError("num_vars must be positive")
        clauses = tuple(make_clause(c) for c in self.clauses)
        for c in clauses:
            for code in c:
                if var_of(code) >= self.num_vars:
                    raise ValueError(f"literal {to_dimacs(code)} exceeds num_vars={self.num_vars}")
        object.__setattr__(self, "clauses", clauses)

    @classmethod
    def from_dimacs_clauses(cls, num_vars: int, clauses: Iterable[Iterable[int]]) -> CnfFormula:
        return cls(num_vars, tuple(tuple(from_dimacs(x) for x in c) for c in clauses))

    def dimacs_clauses(self) -> list[list[int]]:
        return [[to_dimacs(code) for code in c] for c in self.clauses]

    @cached_property
    def occurrences(self) -> list[list[int]]:
        """Clause indices per literal code."""
        occ: list[list[int]] = [[] for _ in range(2 * self.num_vars)]
        for i, c in enumerate(self.clauses):
            for code in c:
                occ[code].append(i)
        return occ

    def __len__(self):
        return len(self.clauses)

    def satisfied_by(self, values: Sequence[bool]) -> bool:
        return all(any(values[var_of(x)] != is_negative(x) for x in c) for c in self.clauses)


def condition(formula: CnfFormula, literal: int) -> CnfFormula:
    """The formula conjoined with the unit clause ``(literal)``."""
    return CnfFormula(formula.num_vars, formula.clauses + ((literal,),))


# ---------------------------------------------------------------------------
# DIMACS


def parse_dimacs(text: str) -> CnfFormula:
    num_vars = num_clauses = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    current_start = 0
    comments = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            comments.append(line[1:].strip())
            continue
        if line.startswith("%"):
            # some benchmark archives end with "%\n0"
            break
        if line.startswith("p"):
            parts = line.split()
            if num_vars is not None:
                raise DimacsError("duplicate header", lineno)
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"malformed header {line!r}", lineno)
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"malformed header {line!r}", lineno) from None
            if num_vars < 1 or num_clauses < 0:
                raise DimacsError(f"malformed header {line!r}", lineno)
            continue
        if num_vars is None:
            raise DimacsError("clause before header", lineno)
        for tok in line.split():
            try:
                x = int(tok)
            except ValueError:
                raise DimacsError(f"bad literal {tok!r}", lineno) from None
            if not current:
                current_start = lineno
            if x == 0:
                try:
                    clauses.append(make_clause(current))
                except ValueError as e:
                    raise DimacsError(str(e), current_start) from None
                current = []
                continue
            if abs(x) > num_vars:
                raise DimacsError(f"literal {x} exceeds declared {num_vars} variables", lineno)
            current.append(from_dimacs(x))
    if num_vars is None:
        raise DimacsError("missing 'p cnf' header")
    if current:
        raise DimacsError("clause missing terminating 0", current_start)
    if len(clauses) != num_clauses:
        raise DimacsError(f"header declares {num_clauses} clauses, found {len(clauses)}")
    return CnfFormula(num_vars, tuple(clauses), tuple(comments))


def write_dimacs(formula: CnfFormula) -> str:
    lines = [f"p cnf {formula.num_vars} {len(formula.clauses)}"]
    for c in formula.dimacs_clauses():
        lines.append(" ".join(map(str, c + [0])))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Assignments and propagation


@dataclass
class Assignment:
    """Tri-state per-variable values plus the trail that produced them.

    Trail entries are ``(literal, reason)`` where reason is a clause index for
    implied literals and ``None`` for decisions or externally forced ones.
    """

    num_vars: int
    values: list = field(default=None)
    trail: list = field(default_factory=list)

    def __post_init__(self):
        if self.values is None:
            self.values = [None] * self.num_vars

    def value(self, code: int):
        """True/False if the literal is decided, None otherwise."""
        v = self.values[code >> 1]
        if v is None:
            return None
        return v != bool(code & 1)

    def assign(self, code: int, reason=None):
        v = code >> 1
        if self.values[v] is not None:
            raise ValueError(f"variable {v + 1} already assigned")
        self.values[v] = not (code & 1)
        self.trail.append((code, reason))

    def undo_to(self, size: int):
        while len(self.trail) > size:
            code, _ = self.trail.pop()
            self.values[code >> 1] = None

    def copy(self) -> Assignment:
        return Assignment(self.num_vars, list(self.values), list(self.trail))

    def full_values(self, default: bool = False) -> tuple[bool, ...]:
        return tuple(default if v is None else v for v in self.values)


@dataclass(frozen=True)
class Propagation:
    conflict: int | None = None

    @property
    def ok(self) -> bool:
        return self.conflict is None


def unit_propagate(formula: CnfFormula, assignment: Assignment, start: int = 0) -> Propagation:
    """Run the unit rule to fixpoint, extending ``assignment`` in place.

    Every trail entry from position ``start`` on is treated as freshly
    assigned; with ``start=0`` all clauses are scanned first so that input
    unit clauses fire.  On conflict the propagated literals stay on the trail
    and the index of a falsified clause is returned.
    """
    occ = formula.occurrences
    clauses = formula.clauses

    def check(ci):
        free = None
        for x in clauses[ci]:
            val = assignment.value(x)
            if val is True:
                return None
            if val is None:
                if free is not None:
                    return None
                free = x
        if free is None:
            return "conflict"
        assignment.assign(free, ci)
        return None

    if start == 0:
        for ci in range(len(clauses)):
            if check(ci) == "conflict":
                return Propagation(ci)
    head = start
    while head < len(assignment.trail):
        code, _ = assignment.trail[head]
        head += 1
        for ci in occ[neg(code)]:
            if check(ci) == "conflict":
                return Propagation(ci)
    return Propagation()


@dataclass(frozen=True)
class ResidualView:
    """Unresolved clauses under an assignment, with false literals removed.

    Clauses keep their original relative order and literal codes.  An empty
    tuple among ``clauses`` marks a conflict.
    """

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    @property
    def is_empty(self) -> bool:
        return not self.clauses

    @property
    def has_empty_clause(self) -> bool:
        return any(len(c) == 0 for c in self.clauses)

    def literals(self) -> list[int]:
        """Sorted distinct literal codes occurring in the view."""
        return sorted({x for c in self.clauses for x in c})

    def variables(self) -> list[int]:
        return sorted({var_of(x) for c in self.clauses for x in c})

    def as_formula(self) -> CnfFormula:
        return CnfFormula(self.num_vars, self.clauses)


def simplified_view(formula: CnfFormula, assignment: Assignment | None = None,
                    clauses: Sequence[Sequence[int]] | None = None) -> ResidualView:
    if clauses is None:
        clauses = formula.clauses
    if assignment is None:
        return ResidualView(formula.num_vars, tuple(tuple(c) for c in clauses))
    out = []
    for c in clauses:
        rest = []
        for x in c:
            val = assignment.value(x)
            if val is True:
                break
            if val is None:
                rest.append(x)
        else:
            out.append(tuple(rest))
    return ResidualView(formula.num_vars, tuple(out))
