"""Residual channel/spatial attention used inside every generator block.

The channel module (CAM) weighs feature channels from spatially pooled
statistics; the spatial module (SAM) weighs positions from channel-pooled
statistics. Both use avg and max pooling on their respective axes. The
composed block applies channel attention first, then spatial attention,
each with a residual connection:

    F'  = F  + F  * CAM(F)
    F'' = F' + F' * SAM(F')

`scale_by_attention` exposes the plain (non-residual) multiplicative form.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .errors import ConfigurationError


def pick_sam_kernel(height: int, width: int) -> int:
    """7x7 when the map is large enough for it, otherwise 3x3."""
    return 7 if min(height, width) >= 7 else 3


def scale_by_attention(features: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    """Plain attention application: elementwise product, broadcasting weights."""
    return features * weights


def fan_in_uniform_(conv: nn.Module) -> None:
    """Kernels from a fan-in-scaled uniform distribution, biases zero."""
    fan_in = conv.weight.shape[1] * math.prod(conv.weight.shape[2:])
    bound = 1.0 / math.sqrt(fan_in)
    nn.init.uniform_(conv.weight, -bound, bound)
    if conv.bias is not None:
        nn.init.zeros_(conv.bias)


class SpatialAttention(nn.Module):
    """Per-position sigmoid weights from channel-pooled avg/max planes."""

    def __init__(self, kernel_size: int = 7):
        super().__init__()
        if kernel_size % 2 != 1:
            raise ConfigurationError(f"SAM kernel size must be odd, got {kernel_size}")
        self.kernel_size = kernel_size
        self.conv = nn.Conv2d(2, 1, kernel_size, padding=kernel_size // 2)
        fan_in_uniform_(self.conv)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        avg_plane = features.mean(dim=1, keepdim=True)
        max_plane = features.amax(dim=1, keepdim=True)
        pooled = torch.cat([avg_plane, max_plane], dim=1)
        return torch.sigmoid(self.conv(pooled))


class ChannelAttention(nn.Module):
    """Per-channel sigmoid weights from a shared bottleneck MLP applied to
    spatially avg- and max-pooled vectors, summed before the sigmoid."""

    def __init__(self, channels: int, reduction: int = 16):
        super().__init__()
        if reduction < 1:
            raise ConfigurationError(f"reduction must be >= 1, got {reduction}")
        # Clamp so the bottleneck keeps at least one channel; an r that still
        # fails to divide the channel count is a configuration error.
        reduction = min(reduction, channels)
        if channels % reduction != 0:
            raise ConfigurationError(
                f"channels ({channels}) not divisible by reduction ratio ({reduction})")
        self.channels = channels
        self.reduction = reduction
        hidden = channels // reduction
        self.mlp = nn.Sequential(
            nn.Conv2d(channels, hidden, 1),
            nn.ReLU(inplace=True),
            nn.Conv2d(hidden, channels, 1),
        )
        fan_in_uniform_(self.mlp[0])
        fan_in_uniform_(self.mlp[2])

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        if features.shape[1] != self.channels:
            raise ConfigurationError(
                f"expected {self.channels} channels, got {features.shape[1]}")
        avg_vec = features.mean(dim=(2, 3), keepdim=True)
        max_vec = features.amax(dim=(2, 3), keepdim=True)
        return torch.sigmoid(self.mlp(avg_vec) + self.mlp(max_vec))


class ResidualAttention(nn.Module):
    """Channel-then-spatial attention, each stage residual.

    With both stages disabled this is the identity, which is what the
    attention-free baseline arm relies on.
    """

    def __init__(self, channels: int, use_channel: bool = True, use_spatial: bool = True,
                 reduction: int = 16, sam_kernel: int = 7):
        super().__init__()
        self.channel = ChannelAttention(channels, reduction) if use_channel else None
        self.spatial = SpatialAttention(sam_kernel) if use_spatial else None

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        if self.channel is not None:
            features = features + features * self.channel(features)
        if self.spatial is not None:
            features = features + features * self.spatial(features)
        return features


def make_attention(channels: int, attn: str, reduction: int, sam_kernel: int):
    """Residual attention for one block, or None when the arm disables it."""
    if attn == "none":
        return None
    return ResidualAttention(
        channels,
        use_channel=attn in ("cam", "both"),
        use_spatial=attn in ("sam", "both"),
        reduction=reduction,
        sam_kernel=sam_kernel,
    )
