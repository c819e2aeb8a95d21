"""SAT search with classical and learned branching heuristics."""

__version__ = "0.1.0"
