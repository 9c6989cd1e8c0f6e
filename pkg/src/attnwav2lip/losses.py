"""Scalar training objectives and the per-step loss record.

The generator objective is the weighted sum

    total = (1 - alpha - beta) * l1 + alpha * l_sync + beta * l_gen

with the discriminator ascending l_disc = mean log D(real) + l_gen. Scores
are clamped away from {0, 1} before logs so every loss stays finite.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass

import torch

from .errors import ConfigurationError, DataError, NumericGuardError

SCORE_EPS = 1e-7
BREAKDOWN_TOL = 1e-10


@dataclass(frozen=True)
class LossWeights:
    """Sync weight alpha and adversarial weight beta; the l1 weight is the rest."""

    alpha: float = 0.03
    beta: float = 0.07

    def __post_init__(self):
        if not (0.0 <= self.alpha < 1.0 and 0.0 <= self.beta < 1.0):
            raise ConfigurationError(f"alpha and beta must lie in [0, 1): {self}")
        if self.alpha + self.beta >= 1.0:
            raise ConfigurationError(f"alpha + beta must be < 1: {self}")


def reconstruction_l1(generated: torch.Tensor, truth: torch.Tensor) -> torch.Tensor:
    """Mean absolute error over all elements."""
    if generated.shape != truth.shape:
        raise DataError(f"shape mismatch: {tuple(generated.shape)} vs {tuple(truth.shape)}")
    return (generated - truth).abs().mean()


def _clamped_scores(scores: torch.Tensor, name: str) -> torch.Tensor:
    if scores.numel() == 0:
        raise DataError(f"empty {name} score batch")
    if bool((scores < 0).any()) or bool((scores > 1).any()):
        raise NumericGuardError(f"{name} scores outside [0, 1]")
    return scores.clamp(SCORE_EPS, 1.0 - SCORE_EPS)


def generator_adversarial_loss(d_fake: torch.Tensor) -> torch.Tensor:
    """mean log(1 - D(fake)); the generator minimizes this, pushing D(fake) up."""
    fake = _clamped_scores(d_fake, "fake")
    return torch.log1p(-fake).mean()


def adversarial_losses(d_real: torch.Tensor,
                       d_fake: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """(l_gen, l_disc): the discriminator ascends l_disc, the generator's
    share of l_gen enters the weighted total."""
    real = _clamped_scores(d_real, "real")
    l_gen = generator_adversarial_loss(d_fake)
    l_disc = torch.log(real).mean() + l_gen
    return l_gen, l_disc


def total_generator_loss(l1, l_sync, l_gen, weights: LossWeights):
    """Weighted sum; works on tensors during training and floats for records."""
    if not isinstance(weights, LossWeights):
        weights = LossWeights(*weights)
    return (1.0 - weights.alpha - weights.beta) * l1 \
        + weights.alpha * l_sync + weights.beta * l_gen


@dataclass(frozen=True)
class LossBreakdown:
    """One logged training step. `total` is recomputed from the parts in
    float64 so the breakdown identity holds to 1e-10 regardless of the
    network's compute precision."""

    step: int
    l1: float
    l_sync: float
    l_gen: float
    l_disc: float
    alpha: float
    beta: float
    total: float

    @classmethod
    def make(cls, step, l1, l_sync, l_gen, l_disc, weights: LossWeights) -> "LossBreakdown":
        total = float(total_generator_loss(float(l1), float(l_sync), float(l_gen), weights))
        return cls(step=int(step), l1=float(l1), l_sync=float(l_sync), l_gen=float(l_gen),
                   l_disc=float(l_disc), alpha=weights.alpha, beta=weights.beta, total=total)

    def check(self) -> None:
        expected = (1.0 - self.alpha - self.beta) * self.l1 \
            + self.alpha * self.l_sync + self.beta * self.l_gen
        if not math.isclose(self.total, expected, rel_tol=0.0, abs_tol=BREAKDOWN_TOL):
            from .errors import InvariantViolation
            raise InvariantViolation(
                f"loss breakdown identity violated at step {self.step}: "
                f"total={self.total!r} expected={expected!r}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "LossBreakdown":
        return cls(**json.loads(line))


class LossLogWriter:
    """Append-only line-delimited record of loss breakdowns."""

    def __init__(self, path):
        self.path = os.fspath(path)
        os.makedirs(os.path.dirname(self.path) or ".", exist_ok=True)

    def append(self, breakdown: LossBreakdown) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(breakdown.to_json() + "\n")


def read_loss_log(path) -> list[LossBreakdown]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(LossBreakdown.from_json(line))
    return records
