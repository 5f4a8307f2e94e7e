"""
Functional Adam optimizer
"""
from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

import torch

from ..utils.errors import InvalidArgumentError

Params = Dict[str, torch.Tensor]


@dataclass(frozen=True)
class AdamState:
    """First/second moments and step counter"""
    step: int
    exp_avg: Params
    exp_avg_sq: Params

    @classmethod
    def zeros_like(cls, params: Mapping[str, torch.Tensor]) -> "AdamState":
        return cls(
            step=0,
            exp_avg={name: torch.zeros_like(p) for name, p in params.items()},
            exp_avg_sq={name: torch.zeros_like(p) for name, p in params.items()},
        )


def adam_update(
    state: AdamState,
    params: Mapping[str, torch.Tensor],
    grads: Mapping[str, torch.Tensor],
    lr: float,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> Tuple[AdamState, Params]:
    """
    One bias-corrected Adam step
    Returns: (new_state, new_params); inputs are left untouched
    """
    if set(grads) != set(params) or set(state.exp_avg) != set(params):
        raise InvalidArgumentError("parameter, gradient and state names differ")

    beta1, beta2 = betas
    step = state.step + 1
    correction1 = 1.0 - beta1 ** step
    correction2 = 1.0 - beta2 ** step

    exp_avg: Params = {}
    exp_avg_sq: Params = {}
    new_params: Params = {}
    for name, param in params.items():
        grad = grads[name]
        if grad.shape != param.shape:
            raise InvalidArgumentError(
                f"gradient shape {tuple(grad.shape)} does not match parameter '{name}' {tuple(param.shape)}"
            )
        grad = grad.detach()
        m = beta1 * state.exp_avg[name] + (1.0 - beta1) * grad
        v = beta2 * state.exp_avg_sq[name] + (1.0 - beta2) * grad * grad
        denom = (v / correction2).sqrt() + eps
        new_params[name] = param.detach() - lr * (m / correction1) / denom
        exp_avg[name] = m
        exp_avg_sq[name] = v

    return AdamState(step=step, exp_avg=exp_avg, exp_avg_sq=exp_avg_sq), new_params
