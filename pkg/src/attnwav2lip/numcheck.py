"""Central finite-difference gradient checking for scalar-valued functions.

Used by the verification suite to compare autograd gradients against an
independent numeric estimate at double precision.
"""

from __future__ import annotations

from typing import Callable, Sequence

import torch


def central_difference_grad(fn: Callable[[], torch.Tensor], tensor: torch.Tensor,
                            eps: float = 1e-5) -> torch.Tensor:
    """Numeric gradient of fn() w.r.t. every element of `tensor`.

    fn must be a deterministic closure over `tensor`; elements are perturbed
    in place and restored.
    """
    grad = torch.zeros_like(tensor, dtype=torch.float64)
    flat = tensor.reshape(-1)
    gflat = grad.reshape(-1)
    with torch.no_grad():
        for i in range(flat.numel()):
            orig = flat[i].item()
            flat[i] = orig + eps
            f_plus = float(fn())
            flat[i] = orig - eps
            f_minus = float(fn())
            flat[i] = orig
            gflat[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def max_relative_error(analytic: torch.Tensor, numeric: torch.Tensor,
                       floor: float = 1e-6) -> float:
    """max |a - n| / max(|a|, |n|, floor); the floor keeps near-zero gradients
    from dividing by ~0."""
    a = analytic.detach().double()
    n = numeric.double()
    denom = torch.maximum(torch.maximum(a.abs(), n.abs()),
                          torch.full_like(a, floor))
    return float(((a - n).abs() / denom).max())


def check_gradients(fn: Callable[[], torch.Tensor],
                    tensors: Sequence[tuple[str, torch.Tensor]],
                    eps: float = 1e-5, floor: float = 1e-6) -> dict[str, float]:
    """Autograd vs central differences for each named tensor.

    Every tensor must be a float64 leaf with requires_grad=True, and fn()
    must return a scalar built from them. Returns the max relative error per
    tensor name.
    """
    for _, t in tensors:
        if t.dtype != torch.float64:
            raise ValueError("gradient checks must run at double precision")
        if t.grad is not None:
            t.grad = None
    value = fn()
    value.backward()
    errors = {}
    for name, t in tensors:
        analytic = t.grad if t.grad is not None else torch.zeros_like(t)
        numeric = central_difference_grad(fn, t, eps=eps)
        errors[name] = max_relative_error(analytic, numeric, floor=floor)
    return errors
