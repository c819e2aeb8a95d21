"""Literal/clause graph encoding of a CNF formula.

Only variables that occur in the formula get nodes; each contributes two
literal nodes (``2*i`` positive, ``2*i + 1`` negative, ``i`` the compacted
index).  The negation partner of literal node ``j`` is ``j ^ 1``.  Several
graphs can be merged into one block-diagonal batch with :func:`batch_graphs`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ..cnf import CnfFormula, ResidualView


@dataclass(frozen=True, eq=False)
class FormulaGraph:
    num_vars: int
    num_clauses: int
    edge_clause: np.ndarray
    edge_literal: np.ndarray
    var_ids: np.ndarray
    literal_graph: np.ndarray
    clause_graph: np.ndarray
    num_graphs: int = 1

    @property
    def num_literal_nodes(self) -> int:
        return 2 * self.num_vars

    @property
    def num_clause_nodes(self) -> int:
        return self.num_clauses

    @property
    def num_edges(self) -> int:
        return len(self.edge_clause)

    @cached_property
    def negation(self) -> np.ndarray:
        return np.arange(self.num_literal_nodes) ^ 1

    @cached_property
    def literal_codes(self) -> np.ndarray:
        """Original literal code of every literal node."""
        nodes = np.arange(self.num_literal_nodes)
        return 2 * self.var_ids[nodes >> 1] + (nodes & 1)

    def present_literals(self) -> np.ndarray:
        """Literal nodes with at least one clause occurrence."""
        return np.unique(self.edge_literal)

    @cached_property
    def literals_per_graph(self) -> np.ndarray:
        return np.bincount(self.literal_graph, minlength=self.num_graphs)

    # Aggregation structure.  Edges are stored sorted by (clause, literal), so
    # the clause-major CSR shares edge order and ``csr.data`` can be swapped
    # for per-edge weights.

    @cached_property
    def _clause_indptr(self):
        counts = np.bincount(self.edge_clause, minlength=self.num_clauses)
        return np.concatenate([[0], np.cumsum(counts)])

    @cached_property
    def _literal_order(self):
        return np.lexsort((self.edge_clause, self.edge_literal))

    @cached_property
    def _literal_indptr(self):
        counts = np.bincount(self.edge_literal, minlength=self.num_literal_nodes)
        return np.concatenate([[0], np.cumsum(counts)])

    def clause_matrix(self, weights: np.ndarray) -> sp.csr_matrix:
        """Clauses x literals matrix holding one weight per edge."""
        return sp.csr_matrix((weights, self.edge_literal, self._clause_indptr),
                             shape=(self.num_clauses, self.num_literal_nodes))

    def literal_matrix(self, weights: np.ndarray) -> sp.csr_matrix:
        """Literals x clauses matrix holding one weight per edge (edge order)."""
        order = self._literal_order
        return sp.csr_matrix((weights[order], self.edge_clause[order], self._literal_indptr),
                             shape=(self.num_literal_nodes, self.num_clauses))

    @cached_property
    def clause_degree(self) -> np.ndarray:
        return np.diff(self._clause_indptr)

    @cached_property
    def literal_degree(self) -> np.ndarray:
        return np.diff(self._literal_indptr)

    def summary(self) -> dict:
        return {
            "literal_nodes": self.num_literal_nodes,
            "clause_nodes": self.num_clauses,
            "ccl_entries": self.num_edges,
            "negation_pairs": self.num_vars,
        }


def build_graph(source) -> FormulaGraph:
    """Graph of a :class:`ResidualView` or :class:`CnfFormula`."""
    if isinstance(source, CnfFormula):
        source = ResidualView(source.num_vars, source.clauses)
    if not isinstance(source, ResidualView):
        raise TypeError(f"cannot build a graph from {type(source).__name__}")
    if source.is_empty:
        raise ValueError("cannot build a graph of an empty formula")
    var_ids = np.asarray(source.variables(), dtype=np.int64)
    local = np.full(source.num_vars, -1, dtype=np.int64)
    local[var_ids] = np.arange(len(var_ids))
    ec, el = [], []
    for ci, clause in enumerate(source.clauses):
        for code in clause:
            ec.append(ci)
            el.append(2 * local[code >> 1] + (code & 1))
    ec = np.asarray(ec, dtype=np.int64)
    el = np.asarray(el, dtype=np.int64)
    order = np.lexsort((el, ec))
    return FormulaGraph(
        num_vars=len(var_ids),
        num_clauses=len(source.clauses),
        edge_clause=ec[order],
        edge_literal=el[order],
        var_ids=var_ids,
        literal_graph=np.zeros(2 * len(var_ids), dtype=np.int64),
        clause_graph=np.zeros(len(source.clauses), dtype=np.int64),
    )


def batch_graphs(graphs) -> FormulaGraph:
    """Disjoint union.  ``var_ids`` of the result are graph-local and only
    meaningful together with ``literal_graph``."""
    graphs = list(graphs)
    if len(graphs) == 1:
        return graphs[0]
    ec, el, vids, lg, cg = [], [], [], [], []
    lit_off = clause_off = 0
    for g_id, g in enumerate(graphs):
        ec.append(g.edge_clause + clause_off)
        el.append(g.edge_literal + lit_off)
        vids.append(g.var_ids)
        lg.append(np.full(g.num_literal_nodes, g_id, dtype=np.int64))
        cg.append(np.full(g.num_clauses, g_id, dtype=np.int64))
        lit_off += g.num_literal_nodes
        clause_off += g.num_clauses
    return FormulaGraph(
        num_vars=lit_off // 2,
        num_clauses=clause_off,
        edge_clause=np.concatenate(ec),
        edge_literal=np.concatenate(el),
        var_ids=np.concatenate(vids),
        literal_graph=np.concatenate(lg),
        clause_graph=np.concatenate(cg),
        num_graphs=len(graphs),
    )
