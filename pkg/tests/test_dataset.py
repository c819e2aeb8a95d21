import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from satguide.cnf import CnfFormula, condition
from satguide.dataset import (DatasetError, LabeledSample, balanced_batches, gen_labeled_pairs, gen_pairs,
                              gen_sr_pair, label_policy, pair_up, read_dataset, sample_clause, write_dataset)
from satguide.solvers import Verdict, brute_force

from conftest import enumerate_models


def brute_labels(f):
    if brute_force(f).verdict is not Verdict.SAT:
        return None
    return tuple(int(brute_force(condition(f, c)).verdict is Verdict.SAT) for c in range(2 * f.num_vars))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_pair_properties(n, seed):
    unsat, sat = gen_sr_pair(n, np.random.default_rng(seed))
    assert brute_force(unsat).verdict is Verdict.UNSAT
    assert brute_force(sat).verdict is Verdict.SAT
    assert unsat.clauses[:-1] == sat.clauses[:-1]
    a, b = unsat.clauses[-1], sat.clauses[-1]
    assert len(a) == len(b) and sum(x != y for x, y in zip(a, b)) == 1
    assert all(x == y or x == y ^ 1 for x, y in zip(a, b))
    prefix = CnfFormula(n, unsat.clauses[:-1])
    assert brute_force(prefix).verdict is Verdict.SAT


def test_clause_sizes(rng):
    sizes = [len(sample_clause(10, rng)) for _ in range(5000)]
    assert min(sizes) >= 2 and max(sizes) <= 10
    # mean of 1 + Bernoulli(0.7) + Geometric(0.4) is 4.2 (the cap at 10 trims a little)
    assert 3.9 < np.mean(sizes) < 4.3
    assert max(len(sample_clause(3, rng)) for _ in range(200)) == 3


def test_clause_distinct_variables(rng):
    for _ in range(500):
        c = sample_clause(6, rng)
        assert len({x >> 1 for x in c}) == len(c)


def test_generation_deterministic():
    a = write_dataset(s for p in gen_pairs(9, 5, 42) for s in map(LabeledSample, p))
    b = write_dataset(s for p in gen_pairs(9, 5, 42) for s in map(LabeledSample, p))
    assert a == b
    # pair i depends only on (seed, i)
    assert list(gen_pairs(9, 5, 42))[3] == list(gen_pairs(9, 4, 42))[3]


class TestLabels:
    def test_example(self):
        s = label_policy(CnfFormula.from_dimacs_clauses(2, [[1], [-1, 2]]))
        assert s.sat == 1 and s.policy == (1, 0, 1, 0)

    def test_unsat_example(self):
        s = label_policy(CnfFormula.from_dimacs_clauses(1, [[1], [-1]]))
        assert s.sat == 0 and s.policy is None

    def test_against_brute_force(self):
        mismatches = 0
        for i in range(60):
            for f in gen_sr_pair(4 + i % 9, np.random.default_rng(777 + i)):
                s = label_policy(f)
                want = brute_labels(f)
                mismatches += (s.sat == 1) != (want is not None) or (want is not None and s.policy != want)
        assert mismatches == 0

    def test_invariants_and_idempotence(self):
        for s in gen_labeled_pairs(8, 10, 5):
            if s.sat == 1:
                assert all(s.policy[2 * v] or s.policy[2 * v + 1] for v in range(s.formula.num_vars))
                models = enumerate_models(s.formula)
                assert sum(s.policy) >= s.formula.num_vars and models
            assert label_policy(s.formula) == s


class TestSerialization:
    def test_round_trip(self):
        samples = gen_labeled_pairs(10, 50, 1)
        text = write_dataset(samples)
        assert read_dataset(text) == samples
        assert text.endswith("\n") and "\r" not in text

    def test_line_format(self):
        f = CnfFormula.from_dimacs_clauses(2, [[1, -2], [2]])
        assert write_dataset([LabeledSample(f, 1, (1, 0, 1, 0))]) == "2 1 -2 0 2 0 1 1010\n"
        assert write_dataset([LabeledSample(f, 0)]) == "2 1 -2 0 2 0 0 -\n"
        assert write_dataset([LabeledSample(f)]) == "2 1 -2 0 2 0 ? ?\n"
        assert write_dataset([LabeledSample(CnfFormula(3), 1, (1,) * 6)]) == "3 1 111111\n"

    def test_empty(self):
        assert read_dataset("") == []
        assert read_dataset("\n\n") == []

    @pytest.mark.parametrize("line", [
        "2 1 -2 0 2 1 1010",     # clause list not terminated
        "2 1 -3 0 1 1010",       # variable out of range
        "2 1 -1 0 1 1010",       # tautology
        "2 1 0 1 101",           # policy too short
        "2 1 0 0 1010",          # unsat with policy
        "2 1 0 x 1010",          # bad sat field
        "2 1 0",                 # too few fields
    ])
    def test_malformed_reports_line(self, line):
        with pytest.raises(DatasetError, match="line 2"):
            read_dataset("2 1 0 1 1010\n" + line + "\n")


class TestBatches:
    def test_pair_up(self):
        samples = gen_labeled_pairs(5, 3, 0)
        assert len(pair_up(samples)) == 3
        with pytest.raises(ValueError):
            pair_up(samples[1:])
        with pytest.raises(ValueError):
            pair_up([samples[0], samples[2]])

    def test_exactly_half_sat(self):
        pairs = pair_up(gen_labeled_pairs(5, 6, 0))
        stream = balanced_batches(pairs, 4, np.random.default_rng(0))
        for _ in range(20):
            batch = next(stream)
            assert len(batch) == 4 and sum(s.sat for s in batch) == 2

    def test_bad_sizes(self):
        pairs = pair_up(gen_labeled_pairs(5, 2, 0))
        with pytest.raises(ValueError):
            next(balanced_batches(pairs, 3, np.random.default_rng(0)))
        with pytest.raises(ValueError):
            next(balanced_batches(pairs, 8, np.random.default_rng(0)))
