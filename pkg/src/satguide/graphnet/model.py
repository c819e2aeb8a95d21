"""Message-passing network: parameters, forward pass, loss and gradients.

Per iteration, with literal embeddings ``L`` and clause embeddings ``C``
from the previous iteration:

* clauses receive ``L2C(L)`` from their literals,
* literals receive ``C2L(C)`` from their clauses and ``L2L(L)`` from their
  negation (one sender, passed through without aggregation),
* ``C <- updC(C | aggC)`` and ``L <- updL(L | aggL | negmsg)``.

Aggregation is either the mean of the incoming ``V`` vectors or the gated sum
``sum_i V_i * sigmoid(K_i . Q)`` where the message MLP emits ``V|K`` and the
receiver's query is ``Q = C Wq + bq`` (resp. ``L Wq + bq``).

Heads run after every iteration: ``policy = sigmoid(L w_p + b_p)`` per
literal and ``sat = sigmoid(sum_l (L w_s + b_s))`` per graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .graph import FormulaGraph

LEAKY_SLOPE = 0.1
PROB_CLAMP = 1e-7

MESSAGE_MLPS = ("L2C", "C2L", "L2L")
UPDATE_MLPS = ("updC", "updL")
MLP_NAMES = MESSAGE_MLPS + UPDATE_MLPS

PARAM_GROUPS = {
    "init": ("init_L", "init_C"),
    **{name: tuple(f"{name}.{p}" for p in ("W1", "b1", "W2", "b2", "W3", "b3")) for name in MLP_NAMES},
    "query": ("qL.W", "qL.b", "qC.W", "qC.b"),
    "heads": ("policy.w", "policy.b", "sat.w", "sat.b"),
}


def param_shapes(dim: int, attention: bool) -> dict[str, tuple[int, ...]]:
    """Shapes of every tensor, in checkpoint order."""
    msg_out = 2 * dim if attention else dim
    mlp_io = {
        "L2C": (dim, msg_out),
        "C2L": (dim, msg_out),
        "L2L": (dim, dim),
        "updC": (2 * dim, dim),
        "updL": (3 * dim, dim),
    }
    shapes: dict[str, tuple[int, ...]] = {"init_L": (dim,), "init_C": (dim,)}
    for name in MLP_NAMES:
        fan_in, fan_out = mlp_io[name]
        shapes.update({
            f"{name}.W1": (fan_in, dim), f"{name}.b1": (dim,),
            f"{name}.W2": (dim, dim), f"{name}.b2": (dim,),
            f"{name}.W3": (dim, fan_out), f"{name}.b3": (fan_out,),
        })
    if attention:
        shapes.update({"qL.W": (dim, dim), "qL.b": (dim,), "qC.W": (dim, dim), "qC.b": (dim,)})
    shapes.update({"policy.w": (dim,), "policy.b": (), "sat.w": (dim,), "sat.b": ()})
    return shapes


@dataclass
class ModelParams:
    dim: int
    iterations: int
    attention: bool
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1 or self.iterations < 1:
            raise ValueError("dim and iterations must be positive")
        expected = param_shapes(self.dim, self.attention)
        if set(self.tensors) != set(expected):
            missing = sorted(set(expected) - set(self.tensors))
            extra = sorted(set(self.tensors) - set(expected))
            raise ValueError(f"parameter set mismatch (missing {missing}, unexpected {extra})")
        for name, shape in expected.items():
            if self.tensors[name].shape != shape:
                raise ValueError(f"{name}: expected shape {shape}, got {self.tensors[name].shape}")
        # fixed order, independent of how the dict was built
        self.tensors = {name: self.tensors[name] for name in expected}

    @classmethod
    def init(cls, dim: int, iterations: int, attention: bool = True, seed: int = 0,
             dtype=np.float32) -> ModelParams:
        """Fan-in scaled uniform weights: +-sqrt(6/fan_in) for hidden layers,
        +-1/sqrt(fan_in) for output layers.  Biases, query maps and the sat
        head start at zero, so initial gates are 0.5 and the initial sat
        prediction is 0.5.  Initial embeddings are uniform(-1, 1)."""
        rng = np.random.default_rng(seed)
        tensors = {}
        for name, shape in param_shapes(dim, attention).items():
            if name.startswith("init_"):
                t = rng.uniform(-1.0, 1.0, size=shape)
            elif name.startswith(("qL.", "qC.", "sat.")) or len(shape) < 2 and name != "policy.w":
                t = np.zeros(shape)
            elif name.endswith(("W1", "W2")):
                bound = np.sqrt(6.0 / shape[0])
                t = rng.uniform(-bound, bound, size=shape)
            else:
                bound = 1.0 / np.sqrt(shape[0])
                t = rng.uniform(-bound, bound, size=shape)
            tensors[name] = np.asarray(t, dtype=dtype)
        return cls(dim, iterations, attention, tensors)

    @property
    def dtype(self):
        return self.tensors["init_L"].dtype

    @property
    def mode(self) -> str:
        return "attention" if self.attention else "mean"

    def astype(self, dtype) -> ModelParams:
        return ModelParams(self.dim, self.iterations, self.attention,
                           {k: v.astype(dtype) for k, v in self.tensors.items()})

    def with_iterations(self, iterations: int) -> ModelParams:
        return ModelParams(self.dim, iterations, self.attention, self.tensors)

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.tensors.items()}

    def __getitem__(self, name):
        return self.tensors[name]

    def num_parameters(self) -> int:
        return sum(v.size for v in self.tensors.values())


# ---------------------------------------------------------------------------
# Building blocks


def leaky_relu(x):
    return np.maximum(x, LEAKY_SLOPE * x)  # valid for slope < 1


def sigmoid(x):
    return expit(x)


def mlp_forward(tensors, name, x, final="linear"):
    """Three affine layers, LeakyReLU after the first two.

    ``final`` is ``"linear"`` for message MLPs or ``"sigmoid"`` for update
    MLPs.  Returns ``(out, cache)``.
    """
    W1, b1 = tensors[f"{name}.W1"], tensors[f"{name}.b1"]
    W2, b2 = tensors[f"{name}.W2"], tensors[f"{name}.b2"]
    W3, b3 = tensors[f"{name}.W3"], tensors[f"{name}.b3"]
    if x.shape[-1] != W1.shape[0]:
        raise ValueError(f"{name}: input width {x.shape[-1]} != {W1.shape[0]}")
    z1 = x @ W1 + b1
    h1 = leaky_relu(z1)
    z2 = h1 @ W2 + b2
    h2 = leaky_relu(z2)
    out = h2 @ W3 + b3
    if final == "sigmoid":
        out = sigmoid(out)
    return out, (x, z1, h1, z2, h2, out, final)


def mlp_backward(tensors, name, cache, dout, grads):
    """Accumulates weight gradients into ``grads``; returns d(loss)/d(input)."""
    x, z1, h1, z2, h2, out, final = cache
    if final == "sigmoid":
        dout = dout * out * (1.0 - out)
    grads[f"{name}.W3"] += h2.T @ dout
    grads[f"{name}.b3"] += dout.sum(axis=0)
    dh2 = dout @ tensors[f"{name}.W3"].T
    dz2 = np.where(z2 > 0, dh2, LEAKY_SLOPE * dh2)
    grads[f"{name}.W2"] += h1.T @ dz2
    grads[f"{name}.b2"] += dz2.sum(axis=0)
    dh1 = dz2 @ tensors[f"{name}.W2"].T
    dz1 = np.where(z1 > 0, dh1, LEAKY_SLOPE * dh1)
    grads[f"{name}.W1"] += x.T @ dz1
    grads[f"{name}.b1"] += dz1.sum(axis=0)
    return dz1 @ tensors[f"{name}.W1"].T


def aggregate_mean(messages) -> np.ndarray:
    """Componentwise mean of a stack of message vectors (zero if none)."""
    messages = np.asarray(messages, dtype=float)
    if messages.shape[0] == 0:
        return np.zeros(messages.shape[1:] if messages.ndim > 1 else 0)
    return messages.mean(axis=0)


def aggregate_attention(values, keys, query) -> np.ndarray:
    """Gated sum ``sum_i V_i * sigmoid(K_i . Q)``; each gate is independent."""
    values = np.asarray(values, dtype=float)
    keys = np.asarray(keys, dtype=float)
    query = np.asarray(query, dtype=float)
    if values.shape[0] == 0:
        return np.zeros(query.shape)
    gates = sigmoid(keys @ query)
    return gates @ values


def _rowdot(a, b):
    return np.einsum("ij,ij->i", a, b)


class _Aggregator:
    """Edge-level aggregation from senders to receivers, with its backward.

    ``fwd_matrix(w)`` builds the receivers x senders matrix carrying one
    weight per edge; ``recv_idx``/``send_idx`` give each edge's endpoints.
    """

    def __init__(self, fwd_matrix, recv_idx, send_idx, recv_degree, attention, dtype):
        self.fwd_matrix = fwd_matrix
        self.recv_idx = recv_idx
        self.send_idx = send_idx
        self.attention = attention
        self.dim = None
        if not attention:
            inv = np.zeros(len(recv_degree), dtype=dtype)
            nz = recv_degree > 0
            inv[nz] = 1.0 / recv_degree[nz]
            self.inv_degree = inv
            self.weights = inv[recv_idx]
            self.matrix = fwd_matrix(self.weights)

    def forward(self, msg, query=None):
        if not self.attention:
            return self.matrix @ msg, None
        d = msg.shape[1] // 2
        V, K = msg[:, :d], msg[:, d:]
        gates = sigmoid(_rowdot(K[self.send_idx], query[self.recv_idx]))
        agg = self.fwd_matrix(gates) @ V
        return agg, (V, K, query, gates)

    def backward(self, dagg, cache):
        """Returns (d msg, d query)."""
        if not self.attention:
            return self.matrix.T @ dagg, None
        V, K, query, gates = cache
        dV = self.fwd_matrix(gates).T @ dagg
        dgate = _rowdot(dagg[self.recv_idx], V[self.send_idx])
        ds = dgate * gates * (1.0 - gates)
        m = self.fwd_matrix(ds)
        dK = m.T @ query
        dQ = m @ K
        return np.concatenate([dV, dK], axis=1), dQ


# ---------------------------------------------------------------------------
# Forward / loss / backward


@dataclass
class Prediction:
    """``sat_prob`` is (T,) for a single graph or (T, G) for a batch;
    ``policy`` is (T, literal nodes)."""

    sat_prob: np.ndarray
    policy: np.ndarray
    sat_logit: np.ndarray | None = None
    policy_logit: np.ndarray | None = None


@dataclass
class ForwardCache:
    graph: FormulaGraph
    params: ModelParams
    L: list
    C: list
    steps: list
    agg_C: _Aggregator
    agg_L: _Aggregator


def _aggregators(graph: FormulaGraph, attention: bool, dtype):
    ec, el = graph.edge_clause, graph.edge_literal
    to_clauses = _Aggregator(graph.clause_matrix, ec, el, graph.clause_degree, attention, dtype)
    to_literals = _Aggregator(graph.literal_matrix, el, ec, graph.literal_degree, attention, dtype)
    return to_clauses, to_literals


def forward(graph: FormulaGraph, params: ModelParams, iterations: int | None = None):
    """Run the network; returns ``(Prediction, ForwardCache)``."""
    T = params.iterations if iterations is None else iterations
    p = params.tensors
    dtype = params.dtype
    nL, nC = graph.num_literal_nodes, graph.num_clause_nodes
    L = np.broadcast_to(p["init_L"], (nL, params.dim)).astype(dtype)
    C = np.broadcast_to(p["init_C"], (nC, params.dim)).astype(dtype)
    agg_C, agg_L = _aggregators(graph, params.attention, dtype)
    neg_idx = graph.negation
    Ls, Cs, steps = [L], [C], []
    pol_logits, sat_logits = [], []
    for _ in range(T):
        mL, cache_mL = mlp_forward(p, "L2C", L)
        mC, cache_mC = mlp_forward(p, "C2L", C)
        mN, cache_mN = mlp_forward(p, "L2L", L)
        qC = qL = None
        if params.attention:
            qC = C @ p["qC.W"] + p["qC.b"]
            qL = L @ p["qL.W"] + p["qL.b"]
        aggC, cache_aC = agg_C.forward(mL, qC)
        aggL, cache_aL = agg_L.forward(mC, qL)
        C_new, cache_uC = mlp_forward(p, "updC", np.concatenate([C, aggC], axis=1), "sigmoid")
        L_new, cache_uL = mlp_forward(p, "updL", np.concatenate([L, aggL, mN[neg_idx]], axis=1), "sigmoid")
        steps.append((cache_mL, cache_mC, cache_mN, cache_aC, cache_aL, cache_uC, cache_uL))
        L, C = L_new, C_new
        Ls.append(L)
        Cs.append(C)
        pol_logits.append(L @ p["policy.w"] + p["policy.b"])
        per_lit = L @ p["sat.w"] + p["sat.b"]
        sat_logits.append(np.bincount(graph.literal_graph, weights=per_lit, minlength=graph.num_graphs))
    pol_logit = np.asarray(pol_logits).reshape(T, nL)
    sat_logit = np.asarray(sat_logits).reshape(T, graph.num_graphs)
    if graph.num_graphs == 1:
        sat_logit = sat_logit[:, 0]
    pred = Prediction(sigmoid(sat_logit), sigmoid(pol_logit), sat_logit, pol_logit)
    return pred, ForwardCache(graph, params, Ls, Cs, steps, agg_C, agg_L)


def predict(graph: FormulaGraph, params: ModelParams, iterations: int | None = None) -> Prediction:
    return forward(graph, params, iterations)[0]


def _ce(p, y):
    p = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))


def _ce_grad_logit(p, y):
    """d CE(clamp(sigmoid(z)), y) / dz; zero where the clamp is active."""
    active = (p > PROB_CLAMP) & (p < 1.0 - PROB_CLAMP)
    return np.where(active, p - y, 0.0)


def _as_batch(pred: Prediction, graph: FormulaGraph, sat_label, policy_labels):
    sat = np.asarray(pred.sat_prob).reshape(pred.sat_prob.shape[0], -1)
    y_sat = np.asarray(sat_label, dtype=float).reshape(-1)
    if y_sat.shape[0] != graph.num_graphs:
        raise ValueError("one sat label per graph required")
    if policy_labels is None:
        if np.any(y_sat == 1):
            raise ValueError("policy labels are required for satisfiable samples")
        policy_labels = np.zeros(graph.num_literal_nodes)
    y_pol = np.asarray(policy_labels, dtype=float).reshape(-1)
    if y_pol.shape[0] != graph.num_literal_nodes:
        raise ValueError("one policy label per literal node required")
    # per-literal weight: 1/|literals of its graph| for satisfiable graphs, else 0
    w = (y_sat / np.maximum(graph.literals_per_graph, 1))[graph.literal_graph]
    return sat, y_sat, y_pol, w


def iteration_losses(pred: Prediction, graph: FormulaGraph, sat_label, policy_labels=None) -> np.ndarray:
    """(T, 2) array of summed-over-graphs (sat loss, policy loss) per iteration."""
    sat, y_sat, y_pol, w = _as_batch(pred, graph, sat_label, policy_labels)
    sat_loss = _ce(sat, y_sat).sum(axis=1)
    pol_loss = (_ce(pred.policy, y_pol) * w).sum(axis=1)
    return np.stack([sat_loss, pol_loss], axis=1)


def loss(pred: Prediction, graph: FormulaGraph, sat_label, policy_labels=None) -> float:
    """Sum over iterations (and over graphs of a batch) of sat CE plus mean
    policy CE; the policy term is zero for unsatisfiable graphs."""
    return float(iteration_losses(pred, graph, sat_label, policy_labels).sum())


def backward(pred: Prediction, cache: ForwardCache, sat_label, policy_labels=None) -> dict[str, np.ndarray]:
    """Exact gradient of :func:`loss` with respect to every parameter."""
    graph, params = cache.graph, cache.params
    p = params.tensors
    grads = params.zeros_like()
    sat, y_sat, y_pol, w = _as_batch(pred, graph, sat_label, policy_labels)
    dtype = params.dtype
    dz_sat = _ce_grad_logit(sat, y_sat).astype(dtype)  # (T, G)
    dz_pol = (_ce_grad_logit(pred.policy, y_pol) * w).astype(dtype)  # (T, nL)
    T = len(cache.steps)
    d = params.dim
    neg_idx = graph.negation
    dL = np.zeros_like(cache.L[0])
    dC = np.zeros_like(cache.C[0])
    for t in range(T - 1, -1, -1):
        L_t = cache.L[t + 1]
        # heads
        grads["policy.w"] += L_t.T @ dz_pol[t]
        grads["policy.b"] += dz_pol[t].sum()
        dsat_lit = dz_sat[t][graph.literal_graph]
        grads["sat.w"] += L_t.T @ dsat_lit
        grads["sat.b"] += dsat_lit.sum()
        dL = dL + np.outer(dz_pol[t], p["policy.w"]) + np.outer(dsat_lit, p["sat.w"])

        cache_mL, cache_mC, cache_mN, cache_aC, cache_aL, cache_uC, cache_uL = cache.steps[t]
        L_prev, C_prev = cache.L[t], cache.C[t]
        dX_L = mlp_backward(p, "updL", cache_uL, dL, grads)
        dX_C = mlp_backward(p, "updC", cache_uC, dC, grads)
        dL = dX_L[:, :d].copy()
        dC = dX_C[:, :d].copy()
        d_aggL = dX_L[:, d:2 * d]
        d_negmsg = dX_L[:, 2 * d:]
        d_aggC = dX_C[:, d:]

        dL += mlp_backward(p, "L2L", cache_mN, d_negmsg[neg_idx], grads)
        d_mL, dqC = cache.agg_C.backward(d_aggC, cache_aC)
        d_mC, dqL = cache.agg_L.backward(d_aggL, cache_aL)
        if params.attention:
            grads["qC.W"] += C_prev.T @ dqC
            grads["qC.b"] += dqC.sum(axis=0)
            dC += dqC @ p["qC.W"].T
            grads["qL.W"] += L_prev.T @ dqL
            grads["qL.b"] += dqL.sum(axis=0)
            dL += dqL @ p["qL.W"].T
        dL += mlp_backward(p, "L2C", cache_mL, d_mL, grads)
        dC += mlp_backward(p, "C2L", cache_mC, d_mC, grads)
    grads["init_L"] += dL.sum(axis=0)
    grads["init_C"] += dC.sum(axis=0)
    return grads


def loss_and_grad(graph: FormulaGraph, params: ModelParams, sat_label, policy_labels=None):
    pred, cache = forward(graph, params)
    return loss(pred, graph, sat_label, policy_labels), backward(pred, cache, sat_label, policy_labels), pred
