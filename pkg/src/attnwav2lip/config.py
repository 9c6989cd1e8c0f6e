"""Architecture configuration: block tables for the generator, discriminator,
and sync expert, plus the fixed data geometry shared across the package.

All spatial bookkeeping lives here so tests can derive expected shapes from
pure arithmetic instead of running the networks.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional

from .errors import ConfigurationError

# Fixed data geometry: 25 fps video of 96x96 RGB crops, 16 kHz mono audio,
# 80-band log-mel with 12.5 ms hop so one 5-frame window spans 16 mel steps.
IMG_SIZE = 96
FRAMES_PER_WINDOW = 5
MASK_ROW = IMG_SIZE // 2
FPS = 25
SAMPLE_RATE = 16000
MEL_BANDS = 80
MEL_STEPS_PER_WINDOW = 16
MEL_HOP = 200    # samples, 12.5 ms
MEL_WIN = 800    # samples, 50 ms
MEL_STEPS_PER_FRAME = (SAMPLE_RATE / FPS) / MEL_HOP  # 3.2

ATTN_CHOICES = ("none", "sam", "cam", "both")


@dataclass(frozen=True)
class BlockSpec:
    """One convolution block: main (transpose-)conv plus optional residual convs."""

    out_channels: int
    kernel: tuple[int, int]
    stride: tuple[int, int] = (1, 1)
    padding: tuple[int, int] = (0, 0)
    transpose: bool = False
    output_padding: tuple[int, int] = (0, 0)
    extra_convs: int = 0

    @staticmethod
    def conv(out_channels, kernel, stride=1, padding=0, extra_convs=0):
        return BlockSpec(out_channels, _pair(kernel), _pair(stride), _pair(padding),
                         extra_convs=extra_convs)

    @staticmethod
    def up(out_channels, kernel, stride=1, padding=0, output_padding=0, extra_convs=0):
        return BlockSpec(out_channels, _pair(kernel), _pair(stride), _pair(padding),
                         transpose=True, output_padding=_pair(output_padding),
                         extra_convs=extra_convs)

    def out_size(self, size: tuple[int, int]) -> tuple[int, int]:
        h, w = size
        (kh, kw), (sh, sw), (ph, pw) = self.kernel, self.stride, self.padding
        if self.transpose:
            oh, ow = self.output_padding
            return ((h - 1) * sh - 2 * ph + kh + oh, (w - 1) * sw - 2 * pw + kw + ow)
        return ((h + 2 * ph - kh) // sh + 1, (w + 2 * pw - kw) // sw + 1)


def _pair(v):
    if isinstance(v, (tuple, list)):
        return (int(v[0]), int(v[1]))
    return (int(v), int(v))


def trace_shapes(blocks, in_size):
    """Spatial size after each block, computed from conv arithmetic alone."""
    sizes = []
    size = in_size
    for spec in blocks:
        size = spec.out_size(size)
        sizes.append(size)
    return sizes


@dataclass(frozen=True)
class GeneratorConfig:
    """Face encoder/decoder with skip connections plus the speech encoder.

    The decoder consumes skips LIFO: each decoder block first concatenates the
    running feature map with the top skip (the two must share spatial size),
    then convolves or upsamples, then applies residual attention per `attn`.
    """

    encoder: tuple[BlockSpec, ...]
    decoder: tuple[BlockSpec, ...]
    audio_encoder: tuple[BlockSpec, ...]
    embed_dim: int
    attn: str = "both"
    cam_reduction: int = 16
    sam_kernel: Optional[int] = None   # None picks 7 when min(h,w) >= 7, else 3
    in_channels: int = 6
    img_size: int = IMG_SIZE
    mel_shape: tuple[int, int] = (MEL_BANDS, MEL_STEPS_PER_WINDOW)

    def __post_init__(self):
        if self.attn not in ATTN_CHOICES:
            raise ConfigurationError(f"attn must be one of {ATTN_CHOICES}, got {self.attn!r}")
        if len(self.encoder) != len(self.decoder):
            raise ConfigurationError("encoder and decoder must have the same block count")
        enc_sizes = self.encoder_sizes()
        if enc_sizes[-1] != (1, 1):
            raise ConfigurationError(
                f"encoder must reduce {self.img_size}x{self.img_size} to 1x1, got {enc_sizes[-1]}")
        audio_sizes = trace_shapes(self.audio_encoder, self.mel_shape)
        if audio_sizes[-1] != (1, 1):
            raise ConfigurationError(f"speech encoder must end at 1x1, got {audio_sizes[-1]}")
        if self.audio_encoder[-1].out_channels != self.embed_dim:
            raise ConfigurationError("speech encoder output width must equal embed_dim")
        # Decoder spatial path must revisit the encoder sizes in reverse so each
        # concat pairs maps of equal size and the final block ends at full resolution.
        dec_sizes = self.decoder_sizes()
        expected = list(reversed(enc_sizes[:-1])) + [(self.img_size, self.img_size)]
        if dec_sizes != expected:
            raise ConfigurationError(
                f"decoder sizes {dec_sizes} do not mirror encoder sizes (expected {expected})")

    @property
    def n_blocks(self) -> int:
        return len(self.encoder)

    def encoder_sizes(self):
        return trace_shapes(self.encoder, (self.img_size, self.img_size))

    def decoder_sizes(self):
        return trace_shapes(self.decoder, (1, 1))

    def shape_table(self, batch: int = 1):
        """Documented per-block shape table: (stage, out_shape) tuples."""
        rows = []
        c = self.in_channels
        size = (self.img_size, self.img_size)
        for i, (spec, out) in enumerate(zip(self.encoder, self.encoder_sizes())):
            rows.append((f"encoder.{i}", (batch, spec.out_channels) + out))
            size = out
        rows.append(("speech", (batch, self.embed_dim, 1, 1)))
        for i, (spec, out) in enumerate(zip(self.decoder, self.decoder_sizes())):
            rows.append((f"decoder.{i}", (batch, spec.out_channels) + out))
        rows.append(("output", (batch, 3, self.img_size, self.img_size)))
        return rows

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DiscriminatorConfig:
    """Visual-quality discriminator over the lower half of 96x96 frames."""

    blocks: tuple[BlockSpec, ...]
    img_size: int = IMG_SIZE

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ExpertConfig:
    """Two-tower sync expert: video tower over stacked lower-half windows,
    audio tower over mel chunks, both ending in an embed_dim vector."""

    video_blocks: tuple[BlockSpec, ...]
    audio_blocks: tuple[BlockSpec, ...]
    embed_dim: int = 512

    def __post_init__(self):
        vsize = trace_shapes(self.video_blocks, (MASK_ROW, IMG_SIZE))
        asize = trace_shapes(self.audio_blocks, (MEL_BANDS, MEL_STEPS_PER_WINDOW))
        if vsize[-1] != (1, 1) or asize[-1] != (1, 1):
            raise ConfigurationError(f"expert towers must end at 1x1, got {vsize[-1]} / {asize[-1]}")

    def to_dict(self) -> dict:
        return asdict(self)


def _generator_config(widths, audio_widths, embed_dim, attn, cam_reduction,
                      extra_convs=0, sam_kernel=None):
    w = widths
    enc = (
        BlockSpec.conv(w[0], 7, 1, 3),
        BlockSpec.conv(w[1], 3, 2, 1, extra_convs=extra_convs),   # 96 -> 48
        BlockSpec.conv(w[2], 3, 2, 1, extra_convs=extra_convs),   # 48 -> 24
        BlockSpec.conv(w[3], 3, 2, 1, extra_convs=extra_convs),   # 24 -> 12
        BlockSpec.conv(w[4], 3, 2, 1, extra_convs=extra_convs),   # 12 -> 6
        BlockSpec.conv(w[5], 3, 2, 1, extra_convs=extra_convs),   # 6 -> 3
        BlockSpec.conv(w[6], 3, 1, 0),                            # 3 -> 1
    )
    d = tuple(reversed(w))
    dec = (
        BlockSpec.up(d[0], 3, 1, 0),                              # 1 -> 3
        BlockSpec.up(d[1], 4, 2, 1, extra_convs=extra_convs),     # 3 -> 6
        BlockSpec.up(d[2], 4, 2, 1, extra_convs=extra_convs),     # 6 -> 12
        BlockSpec.up(d[3], 4, 2, 1, extra_convs=extra_convs),     # 12 -> 24
        BlockSpec.up(d[4], 4, 2, 1, extra_convs=extra_convs),     # 24 -> 48
        BlockSpec.up(d[5], 4, 2, 1, extra_convs=extra_convs),     # 48 -> 96
        BlockSpec.conv(d[6], 3, 1, 1),                            # 96 -> 96
    )
    aw = audio_widths
    audio = (
        BlockSpec.conv(aw[0], 3, 1, 1),
        BlockSpec.conv(aw[1], 3, (3, 1), 1),   # 80x16 -> 27x16
        BlockSpec.conv(aw[2], 3, 3, 1),        # 27x16 -> 9x6
        BlockSpec.conv(aw[3], 3, (3, 2), 1),   # 9x6 -> 3x3
        BlockSpec.conv(embed_dim, 3, 1, 0),    # 3x3 -> 1x1
        BlockSpec.conv(embed_dim, 1, 1, 0),
    )
    return GeneratorConfig(encoder=enc, decoder=dec, audio_encoder=audio,
                           embed_dim=embed_dim, attn=attn,
                           cam_reduction=cam_reduction, sam_kernel=sam_kernel)


def full_generator_config(attn="both"):
    """Paper-scale widths; intended for real corpora, not for desk-scale tests."""
    return _generator_config(
        widths=(16, 32, 64, 128, 256, 512, 512),
        audio_widths=(32, 64, 128, 256),
        embed_dim=512, attn=attn, cam_reduction=16, extra_convs=2)


def tiny_generator_config(attn="both"):
    """Desk-scale widths small enough to train on one CPU core in minutes."""
    return _generator_config(
        widths=(8, 16, 24, 32, 48, 64, 64),
        audio_widths=(8, 16, 32, 48),
        embed_dim=64, attn=attn, cam_reduction=4)


def micro_generator_config(attn="both", img_size=12, width=8):
    """Three-block 12x12 variant used for end-to-end finite-difference checks."""
    enc = (
        BlockSpec.conv(width, 3, 2, 1),        # 12 -> 6
        BlockSpec.conv(width, 3, 2, 1),        # 6 -> 3
        BlockSpec.conv(width, 3, 1, 0),        # 3 -> 1
    )
    dec = (
        BlockSpec.up(width, 3, 1, 0),          # 1 -> 3
        BlockSpec.up(width, 4, 2, 1),          # 3 -> 6
        BlockSpec.up(width, 4, 2, 1),          # 6 -> 12
    )
    audio = (
        BlockSpec.conv(width, 3, (3, 1), 1),   # 80x16 -> 27x16
        BlockSpec.conv(width, 3, 3, 1),        # 27x16 -> 9x6
        BlockSpec.conv(width, 3, (3, 2), 1),   # 9x6 -> 3x3
        BlockSpec.conv(width, 3, 1, 0),        # 3x3 -> 1x1
    )
    return GeneratorConfig(encoder=enc, decoder=dec, audio_encoder=audio,
                           embed_dim=width, attn=attn, cam_reduction=max(1, width // 2),
                           img_size=img_size)


def full_discriminator_config():
    return DiscriminatorConfig(blocks=(
        BlockSpec.conv(32, 3, 1, 1),
        BlockSpec.conv(64, 3, 2, 1),
        BlockSpec.conv(128, 3, 2, 1),
        BlockSpec.conv(256, 3, 2, 1),
        BlockSpec.conv(512, 3, 2, 1),
    ))


def tiny_discriminator_config():
    return DiscriminatorConfig(blocks=(
        BlockSpec.conv(8, 3, 1, 1),
        BlockSpec.conv(16, 3, 2, 1),
        BlockSpec.conv(32, 3, 2, 1),
        BlockSpec.conv(48, 3, 2, 1),
    ))


def _expert_config(widths, audio_widths, embed_dim):
    w = widths
    video = (
        BlockSpec.conv(w[0], 7, 1, 3),         # 48x96
        BlockSpec.conv(w[1], 3, 2, 1),         # 24x48
        BlockSpec.conv(w[2], 3, 2, 1),         # 12x24
        BlockSpec.conv(w[3], 3, 2, 1),         # 6x12
        BlockSpec.conv(w[3], 3, 2, 1),         # 3x6
        BlockSpec.conv(embed_dim, (3, 6), 1, 0),  # 1x1
        BlockSpec.conv(embed_dim, 1, 1, 0),
    )
    aw = audio_widths
    audio = (
        BlockSpec.conv(aw[0], 3, 1, 1),
        BlockSpec.conv(aw[1], 3, (3, 1), 1),   # 27x16
        BlockSpec.conv(aw[2], 3, 3, 1),        # 9x6
        BlockSpec.conv(aw[3], 3, (3, 2), 1),   # 3x3
        BlockSpec.conv(embed_dim, 3, 1, 0),    # 1x1
        BlockSpec.conv(embed_dim, 1, 1, 0),
    )
    return ExpertConfig(video_blocks=video, audio_blocks=audio, embed_dim=embed_dim)


def full_expert_config():
    return _expert_config((32, 64, 128, 256), (32, 64, 128, 256), embed_dim=512)


def tiny_expert_config():
    return _expert_config((16, 32, 48, 64), (16, 32, 48, 64), embed_dim=64)


def _blockspec_from_dict(d: dict) -> BlockSpec:
    return BlockSpec(
        out_channels=int(d["out_channels"]),
        kernel=_pair(d["kernel"]),
        stride=_pair(d["stride"]),
        padding=_pair(d["padding"]),
        transpose=bool(d["transpose"]),
        output_padding=_pair(d["output_padding"]),
        extra_convs=int(d["extra_convs"]),
    )


def generator_config_from_dict(d: dict) -> GeneratorConfig:
    return GeneratorConfig(
        encoder=tuple(_blockspec_from_dict(b) for b in d["encoder"]),
        decoder=tuple(_blockspec_from_dict(b) for b in d["decoder"]),
        audio_encoder=tuple(_blockspec_from_dict(b) for b in d["audio_encoder"]),
        embed_dim=int(d["embed_dim"]),
        attn=d["attn"],
        cam_reduction=int(d["cam_reduction"]),
        sam_kernel=None if d.get("sam_kernel") is None else int(d["sam_kernel"]),
        in_channels=int(d["in_channels"]),
        img_size=int(d["img_size"]),
        mel_shape=_pair(d["mel_shape"]),
    )


def discriminator_config_from_dict(d: dict) -> DiscriminatorConfig:
    return DiscriminatorConfig(
        blocks=tuple(_blockspec_from_dict(b) for b in d["blocks"]),
        img_size=int(d["img_size"]),
    )


def expert_config_from_dict(d: dict) -> ExpertConfig:
    return ExpertConfig(
        video_blocks=tuple(_blockspec_from_dict(b) for b in d["video_blocks"]),
        audio_blocks=tuple(_blockspec_from_dict(b) for b in d["audio_blocks"]),
        embed_dim=int(d["embed_dim"]),
    )


_GENERATOR_PRESETS = {"full": full_generator_config, "tiny": tiny_generator_config,
                      "micro": micro_generator_config}
_DISCRIMINATOR_PRESETS = {"full": full_discriminator_config, "tiny": tiny_discriminator_config}
_EXPERT_PRESETS = {"full": full_expert_config, "tiny": tiny_expert_config}


def generator_preset(name: str, attn: str = "both") -> GeneratorConfig:
    try:
        return _GENERATOR_PRESETS[name](attn=attn)
    except KeyError:
        raise ConfigurationError(f"unknown generator preset {name!r}") from None


def discriminator_preset(name: str) -> DiscriminatorConfig:
    try:
        return _DISCRIMINATOR_PRESETS[name]()
    except KeyError:
        raise ConfigurationError(f"unknown discriminator preset {name!r}") from None


def expert_preset(name: str) -> ExpertConfig:
    try:
        return _EXPERT_PRESETS[name]()
    except KeyError:
        raise ConfigurationError(f"unknown expert preset {name!r}") from None
