"""Speech encoder, face encoder/decoder with skip connections and per-block
residual attention, and the visual-quality discriminator.

The generator folds the frame axis into the batch: a window batch
[B, T, 6, H, W] becomes [B*T, 6, H, W], and the speech embedding (one per
window) is repeated across the T frames it conditions.
"""

from __future__ import annotations

import torch
from torch import nn

from .attention import fan_in_uniform_, make_attention, pick_sam_kernel
from .config import (MASK_ROW, BlockSpec, DiscriminatorConfig, GeneratorConfig,
                     trace_shapes)
from .errors import DataError, InvariantViolation


class SkipStack:
    """LIFO stack of encoder feature maps, consumed one per decoder block."""

    def __init__(self):
        self._maps: list[torch.Tensor] = []

    def push(self, fmap: torch.Tensor) -> None:
        self._maps.append(fmap)

    def pop(self) -> torch.Tensor:
        if not self._maps:
            raise InvariantViolation("skip stack underflow: decoder popped more maps than encoded")
        return self._maps.pop()

    def __len__(self) -> int:
        return len(self._maps)

    def shapes(self) -> list[tuple[int, ...]]:
        return [tuple(m.shape) for m in self._maps]


class ConvUnit(nn.Module):
    """Conv (or transpose conv) + batch norm + ReLU, optionally residual."""

    def __init__(self, cin, cout, kernel, stride=1, padding=0, output_padding=0,
                 transpose=False, residual=False):
        super().__init__()
        if transpose:
            self.conv = nn.ConvTranspose2d(cin, cout, kernel, stride, padding,
                                           output_padding=output_padding)
        else:
            self.conv = nn.Conv2d(cin, cout, kernel, stride, padding)
        fan_in_uniform_(self.conv)
        self.norm = nn.BatchNorm2d(cout)
        self.act = nn.ReLU(inplace=True)
        self.residual = residual

    def forward(self, x):
        out = self.norm(self.conv(x))
        if self.residual:
            out = out + x
        return self.act(out)


class ConvBlock(nn.Module):
    """One table entry: main conv plus `extra_convs` residual 3x3 refinements."""

    def __init__(self, cin: int, spec: BlockSpec):
        super().__init__()
        units = [ConvUnit(cin, spec.out_channels, spec.kernel, spec.stride, spec.padding,
                          output_padding=spec.output_padding, transpose=spec.transpose)]
        for _ in range(spec.extra_convs):
            units.append(ConvUnit(spec.out_channels, spec.out_channels, 3, 1, 1, residual=True))
        self.units = nn.Sequential(*units)

    def forward(self, x):
        return self.units(x)


def _build_blocks(in_channels: int, specs) -> nn.ModuleList:
    blocks = []
    cin = in_channels
    for spec in specs:
        blocks.append(ConvBlock(cin, spec))
        cin = spec.out_channels
    return nn.ModuleList(blocks)


def _build_attention(cfg: GeneratorConfig, specs, sizes) -> nn.ModuleList:
    mods = []
    for spec, (h, w) in zip(specs, sizes):
        kernel = cfg.sam_kernel if cfg.sam_kernel is not None else pick_sam_kernel(h, w)
        attn = make_attention(spec.out_channels, cfg.attn, cfg.cam_reduction, kernel)
        mods.append(attn if attn is not None else nn.Identity())
    return nn.ModuleList(mods)


class SpeechEncoder(nn.Module):
    """Stack of strided convs mapping a [B, 1, 80, 16] mel chunk to [B, D, 1, 1]."""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.mel_shape = cfg.mel_shape
        self.blocks = _build_blocks(1, cfg.audio_encoder)

    def forward(self, mel: torch.Tensor) -> torch.Tensor:
        if mel.dim() != 4 or mel.shape[1] != 1 or tuple(mel.shape[2:]) != self.mel_shape:
            raise DataError(
                f"expected mel of shape [b, 1, {self.mel_shape[0]}, {self.mel_shape[1]}], "
                f"got {tuple(mel.shape)}")
        x = mel
        for block in self.blocks:
            x = block(x)
        return x


class Generator(nn.Module):
    """Audio-conditioned face inpainter with per-block residual attention.

    Encoder blocks push their post-attention maps onto a skip stack; each
    decoder block concatenates the running map with the top skip, convolves,
    applies attention, and pops. The output head maps to [0, 1] pixels.
    """

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.cfg = cfg
        self.speech_encoder = SpeechEncoder(cfg)
        self.encoder_blocks = _build_blocks(cfg.in_channels, cfg.encoder)
        self.encoder_attn = _build_attention(cfg, cfg.encoder, cfg.encoder_sizes())

        dec_in = []
        cin = cfg.embed_dim
        skip_channels = [spec.out_channels for spec in cfg.encoder][::-1]
        for spec, skip_c in zip(cfg.decoder, skip_channels):
            dec_in.append(cin + skip_c)
            cin = spec.out_channels
        self._decoder_in_channels = dec_in
        self.decoder_blocks = nn.ModuleList(
            [ConvBlock(c, spec) for c, spec in zip(dec_in, cfg.decoder)])
        self.decoder_attn = _build_attention(cfg, cfg.decoder, cfg.decoder_sizes())

        self.output_conv = nn.Conv2d(cfg.decoder[-1].out_channels, 3, 1)
        fan_in_uniform_(self.output_conv)

    def encode_speech(self, mel: torch.Tensor) -> torch.Tensor:
        return self.speech_encoder(mel)

    def encode_faces(self, faces: torch.Tensor) -> tuple[torch.Tensor, SkipStack]:
        if faces.dim() != 4 or faces.shape[1] != self.cfg.in_channels:
            raise DataError(
                f"expected faces of shape [n, {self.cfg.in_channels}, h, w], "
                f"got {tuple(faces.shape)}")
        skips = SkipStack()
        x = faces
        for block, attn in zip(self.encoder_blocks, self.encoder_attn):
            x = block(x)
            x = attn(x)
            skips.push(x)
        return x, skips

    def decode_faces(self, audio_emb: torch.Tensor, skips: SkipStack) -> torch.Tensor:
        x = audio_emb
        for block, attn in zip(self.decoder_blocks, self.decoder_attn):
            x = torch.cat([x, skips.pop()], dim=1)
            x = block(x)
            x = attn(x)
        return torch.sigmoid(self.output_conv(x))

    def forward(self, mel: torch.Tensor, faces: torch.Tensor) -> torch.Tensor:
        windowed = faces.dim() == 5
        if windowed:
            b, t, c, h, w = faces.shape
            faces = faces.reshape(b * t, c, h, w)
        audio_emb = self.encode_speech(mel)
        n = faces.shape[0]
        if n % audio_emb.shape[0] != 0:
            raise DataError(
                f"face count {n} is not a multiple of the mel batch {audio_emb.shape[0]}")
        frames_per_chunk = n // audio_emb.shape[0]
        audio_emb = audio_emb.repeat_interleave(frames_per_chunk, dim=0)

        _, skips = self.encode_faces(faces)
        out = self.decode_faces(audio_emb, skips)
        if len(skips) != 0:
            raise InvariantViolation(f"skip stack not empty after decode: {len(skips)} left")
        if windowed:
            out = out.reshape(b, t, 3, out.shape[2], out.shape[3])
        return out


def plain_generator_forward(gen: Generator, mel: torch.Tensor,
                            faces: torch.Tensor) -> torch.Tensor:
    """Attention-free control arm: runs the generator's conv blocks and skip
    wiring while never touching the attention modules."""
    windowed = faces.dim() == 5
    if windowed:
        b, t, c, h, w = faces.shape
        faces = faces.reshape(b * t, c, h, w)
    audio_emb = gen.speech_encoder(mel)
    audio_emb = audio_emb.repeat_interleave(faces.shape[0] // audio_emb.shape[0], dim=0)
    feats = []
    x = faces
    for block in gen.encoder_blocks:
        x = block(x)
        feats.append(x)
    x = audio_emb
    for block in gen.decoder_blocks:
        x = torch.cat([x, feats.pop()], dim=1)
        x = block(x)
    out = torch.sigmoid(gen.output_conv(x))
    if windowed:
        out = out.reshape(b, t, 3, out.shape[2], out.shape[3])
    return out


class QualityDiscriminator(nn.Module):
    """Realness score in (0, 1) per frame, judged from the lower half only."""

    def __init__(self, cfg: DiscriminatorConfig):
        super().__init__()
        self.cfg = cfg
        self.blocks = _build_blocks(3, cfg.blocks)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.head = nn.Conv2d(cfg.blocks[-1].out_channels, 1, 1)
        fan_in_uniform_(self.head)

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        if frames.dim() != 4 or frames.shape[1] != 3 or frames.shape[2] != self.cfg.img_size \
                or frames.shape[3] != self.cfg.img_size:
            raise DataError(
                f"expected frames of shape [n, 3, {self.cfg.img_size}, {self.cfg.img_size}], "
                f"got {tuple(frames.shape)}")
        x = frames[:, :, MASK_ROW:, :]
        for block in self.blocks:
            x = block(x)
        score = torch.sigmoid(self.head(self.pool(x)))
        return score.reshape(-1)


def lower_half(frames: torch.Tensor) -> torch.Tensor:
    """Rows below the midline (the mouth region) of [..., 3, H, W] frames."""
    return frames[..., MASK_ROW:, :]
