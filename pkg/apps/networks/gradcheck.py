"""Central finite-difference check of parameter gradients."""

import inspect
import logging
from typing import Callable, Optional

import numpy as np
import torch

logger = logging.getLogger(__name__)

MIN_SAMPLES = 200
EPSILON_RANGE = (1e-6, 1e-3)
ONE_SIDED_FALLBACK = 1e-4

LossFn = Callable[[torch.nn.Module, torch.Tensor, torch.Generator], torch.Tensor]


def projection_loss(seed: int = 0) -> LossFn:
    """Scalar loss ``sum(output * P)`` with a fixed random projection P.

    Tuple outputs (reconstruction, rate, ...) contribute their first
    element projected plus the second element when it is a scalar.
    """
    projections: dict[tuple, torch.Tensor] = {}

    def loss(model, x, generator):
        if "generator" in inspect.signature(model.forward).parameters:
            output = model(x, generator=generator)
        else:
            output = model(x)
        extra = 0.0
        if isinstance(output, tuple):
            if len(output) > 1 and torch.is_tensor(output[1]) and output[1].dim() == 0:
                extra = output[1]
            output = output[0]
        shape = tuple(output.shape)
        if shape not in projections:
            g = torch.Generator().manual_seed(seed)
            projections[shape] = torch.randn(shape, generator=g, dtype=torch.float64)
        return (output * projections[shape].to(output.dtype)).sum() + extra

    return loss


def grad_check(
    model: torch.nn.Module,
    x: torch.Tensor,
    epsilon: float = 1e-6,
    loss_fn: Optional[LossFn] = None,
    samples: int = MIN_SAMPLES,
    seed: int = 0,
) -> float:
    """Max relative error between autograd and central differences.

    ``samples`` parameter coordinates (at least 200, or all of them) are
    drawn at random. Every loss evaluation gets a generator re-seeded
    with ``seed``, so stochastic layers see the same noise each time.
    Relative error is ``|a - n| / max(|a|, |n|, 1e-6)``. Coordinates whose
    central difference disagrees are retried with one-sided differences.
    """
    if not EPSILON_RANGE[0] <= epsilon <= EPSILON_RANGE[1]:
        raise ValueError(f"epsilon must lie in {EPSILON_RANGE}, got {epsilon}")
    model = model.double()
    x = x.double()
    loss_fn = loss_fn or projection_loss(seed)

    def evaluate():
        return loss_fn(model, x, torch.Generator().manual_seed(seed))

    params = [p for p in model.parameters() if p.requires_grad]
    model.zero_grad()
    evaluate().backward()
    analytic = torch.cat(
        [
            (p.grad if p.grad is not None else torch.zeros_like(p)).reshape(-1)
            for p in params
        ]
    ).detach().numpy()

    sizes = np.array([p.numel() for p in params])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    rng = np.random.default_rng(seed)
    count = min(total, max(samples, MIN_SAMPLES))
    chosen = np.sort(rng.choice(total, size=count, replace=False))

    def relative_error(a, n):
        return abs(a - n) / max(abs(a), abs(n), 1e-6)

    worst = 0.0
    with torch.no_grad():
        center = evaluate().item()
        for flat_index in chosen:
            which = int(np.searchsorted(offsets, flat_index, side="right") - 1)
            values = params[which].view(-1)
            local = int(flat_index - offsets[which])
            original = values[local].item()
            values[local] = original + epsilon
            plus = evaluate().item()
            values[local] = original - epsilon
            minus = evaluate().item()
            values[local] = original
            a = float(analytic[flat_index])
            error = relative_error(a, (plus - minus) / (2 * epsilon))
            if error > ONE_SIDED_FALLBACK:
                # an activation kink inside one half of the step
                error = min(
                    error,
                    relative_error(a, (plus - center) / epsilon),
                    relative_error(a, (center - minus) / epsilon),
                )
            worst = max(worst, error)
    logger.debug("grad_check: %d coordinates, max relative error %.3e", count, worst)
    return worst
