"""
Adam optimizer.
"""

from typing import Dict, Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from petrecon.network.unet import NetworkWeights


class AdamState(BaseModel):
    """
    Moment accumulators and hyper-parameters of Adam.

    Attributes:
        learning_rate: Step size
        beta1: Decay of the first moment
        beta2: Decay of the second moment
        eps: Denominator offset
        step: Number of updates taken
        m: First moments per parameter
        v: Second moments per parameter
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    learning_rate: float = Field(1e-3, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    eps: float = Field(1e-8, gt=0)
    step: int = 0
    m: Dict[str, np.ndarray] = Field(default_factory=dict)
    v: Dict[str, np.ndarray] = Field(default_factory=dict)


def adam_step(state: AdamState, weights: NetworkWeights, grads: Mapping[str, np.ndarray]):
    """
    Apply one bias-corrected Adam update to every parameter that has a gradient.

    Args:
        state: Optimizer state, updated in place
        weights: Network weights, updated in place
        grads: Gradient per parameter name

    Returns:
        tuple: ``(weights, state)``
    """
    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t
    for name in weights.parameter_names:
        if name not in grads:
            continue
        g = np.asarray(grads[name], dtype=np.float64)
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(g)
            v = np.zeros_like(g)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name] = m
        state.v[name] = v
        m_hat = m / correction1
        v_hat = v / correction2
        weights[name] = weights[name] - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return weights, state
