import itertools

import numpy as np
import pytest

from satguide.cnf import CnfFormula


def fig2_formula():
    """(A or not C or B) and (not B or C) with A, B, C = variables 1, 2, 3."""
    return CnfFormula.from_dimacs_clauses(3, [[1, -3, 2], [-2, 3]])


def enumerate_models(formula):
    """Independent oracle: every satisfying assignment as a tuple of bools."""
    out = []
    for values in itertools.product([False, True], repeat=formula.num_vars):
        if all(any(values[abs(x) - 1] == (x > 0) for x in c) for c in formula.dimacs_clauses()):
            out.append(values)
    return out


@pytest.fixture
def fig2():
    return fig2_formula()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
