"""Central finite-difference check of :func:`backward`."""

from __future__ import annotations

import numpy as np

from .model import PARAM_GROUPS, ModelParams, backward, forward, loss, predict


def relative_error(analytic, numeric, floor: float = 1e-7) -> np.ndarray:
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    return np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), floor)


def numeric_gradient(graph, params: ModelParams, name: str, sat_label, policy_labels=None, h=1e-4):
    t = params.tensors[name]
    out = np.zeros_like(t)
    for idx in np.ndindex(t.shape):
        orig = t[idx]
        t[idx] = orig + h
        up = loss(predict(graph, params), graph, sat_label, policy_labels)
        t[idx] = orig - h
        down = loss(predict(graph, params), graph, sat_label, policy_labels)
        t[idx] = orig
        out[idx] = (up - down) / (2 * h)
    return out


def check_gradients(graph, params: ModelParams, sat_label, policy_labels=None, h=1e-4) -> dict[str, float]:
    """Max elementwise relative error per parameter group (float64 required)."""
    if params.dtype != np.float64:
        raise ValueError("gradient checks need float64 parameters")
    pred, cache = forward(graph, params)
    grads = backward(pred, cache, sat_label, policy_labels)
    report = {}
    for group, names in PARAM_GROUPS.items():
        names = [n for n in names if n in params.tensors]
        if not names:
            continue
        worst = 0.0
        for name in names:
            num = numeric_gradient(graph, params, name, sat_label, policy_labels, h)
            worst = max(worst, float(relative_error(grads[name], num).max()))
        report[group] = worst
    return report


def perturbed_params(dim: int, iterations: int, attention: bool, seed: int = 0, scale: float = 0.3) -> ModelParams:
    """Float64 parameters with nonzero biases, for gradient checks."""
    params = ModelParams.init(dim, iterations, attention, seed=seed, dtype=np.float64)
    rng = np.random.default_rng(seed + 1)
    for t in params.tensors.values():
        t += rng.normal(0.0, scale, t.shape)
    return params
