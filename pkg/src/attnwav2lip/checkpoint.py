"""Checkpoint archives: a zip holding manifest.json plus one little-endian
.npy per named parameter/buffer array.

Archives are written with fixed zip metadata (stored, epoch timestamp) so the
same state always produces the same bytes. Loading rebuilds the model from
the manifest's architecture config and fails loudly on any name, shape, or
kind mismatch.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import zipfile

import numpy as np
import torch

from . import config as cfgmod
from .errors import ConfigurationError, DataError
from .networks import Generator, QualityDiscriminator

FORMAT_VERSION = 1
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)

VARIANT_LABELS = {"none": "baseline", "sam": "sam-only", "cam": "cam-only", "both": "full-attention"}


def _to_little_endian(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    if arr.dtype.byteorder == ">":
        arr = arr.astype(arr.dtype.newbyteorder("<"))
    return arr


def save_archive(path, manifest: dict, arrays: dict[str, np.ndarray]) -> None:
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    manifest = dict(manifest)
    manifest.setdefault("format_version", FORMAT_VERSION)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        info = zipfile.ZipInfo("manifest.json", date_time=_ZIP_DATE)
        zf.writestr(info, json.dumps(manifest, sort_keys=True, indent=1))
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.save(buf, _to_little_endian(arrays[name]))
            info = zipfile.ZipInfo(f"arrays/{name}.npy", date_time=_ZIP_DATE)
            zf.writestr(info, buf.getvalue())


def load_archive(path) -> tuple[dict, dict[str, np.ndarray]]:
    path = os.fspath(path)
    if not os.path.exists(path):
        raise DataError(f"checkpoint not found: {path}")
    try:
        with zipfile.ZipFile(path) as zf:
            manifest = json.loads(zf.read("manifest.json"))
            arrays = {}
            for entry in zf.namelist():
                if entry.startswith("arrays/") and entry.endswith(".npy"):
                    name = entry[len("arrays/"):-len(".npy")]
                    arrays[name] = np.load(io.BytesIO(zf.read(entry)), allow_pickle=False)
    except (zipfile.BadZipFile, KeyError, ValueError) as exc:
        raise DataError(f"unreadable checkpoint {path}: {exc}") from exc
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigurationError(f"unsupported checkpoint format_version {version!r}")
    return manifest, arrays


def state_arrays(module: torch.nn.Module) -> dict[str, np.ndarray]:
    return {name: tensor.detach().cpu().numpy().copy()
            for name, tensor in module.state_dict().items()}


def load_state_arrays(module: torch.nn.Module, arrays: dict[str, np.ndarray],
                      context: str = "checkpoint") -> None:
    expected = module.state_dict()
    missing = sorted(set(expected) - set(arrays))
    unexpected = sorted(set(arrays) - set(expected))
    if missing or unexpected:
        raise ConfigurationError(
            f"{context}: parameter names do not match model "
            f"(missing={missing[:5]}, unexpected={unexpected[:5]})")
    state = {}
    for name, tensor in expected.items():
        arr = arrays[name]
        if tuple(arr.shape) != tuple(tensor.shape):
            raise ConfigurationError(
                f"{context}: shape mismatch for {name}: "
                f"{tuple(arr.shape)} vs {tuple(tensor.shape)}")
        state[name] = torch.from_numpy(np.ascontiguousarray(arr)).to(tensor.dtype)
    module.load_state_dict(state)


def params_digest(module: torch.nn.Module) -> str:
    """sha256 over the module's named state arrays; order-independent of dict order."""
    h = hashlib.sha256()
    for name, tensor in sorted(module.state_dict().items()):
        h.update(name.encode())
        h.update(tensor.detach().cpu().numpy().tobytes())
    return h.hexdigest()


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def save_generator(path, gen: Generator, *, seed: int, step: int,
                   extra: dict | None = None) -> None:
    manifest = {
        "kind": "generator",
        "config": gen.cfg.to_dict(),
        "attn": gen.cfg.attn,
        "variant": VARIANT_LABELS[gen.cfg.attn],
        "seed": int(seed),
        "step": int(step),
    }
    if extra:
        manifest.update(extra)
    save_archive(path, manifest, state_arrays(gen))


def load_generator(path) -> tuple[Generator, dict]:
    manifest, arrays = load_archive(path)
    if manifest.get("kind") != "generator":
        raise ConfigurationError(f"expected a generator checkpoint, got kind "
                                 f"{manifest.get('kind')!r}")
    gen = Generator(cfgmod.generator_config_from_dict(manifest["config"]))
    load_state_arrays(gen, arrays, context=f"generator checkpoint {path}")
    return gen, manifest


def save_discriminator(path, disc: QualityDiscriminator, *, seed: int, step: int) -> None:
    manifest = {
        "kind": "discriminator",
        "config": disc.cfg.to_dict(),
        "seed": int(seed),
        "step": int(step),
    }
    save_archive(path, manifest, state_arrays(disc))


def load_discriminator(path) -> tuple[QualityDiscriminator, dict]:
    manifest, arrays = load_archive(path)
    if manifest.get("kind") != "discriminator":
        raise ConfigurationError(f"expected a discriminator checkpoint, got kind "
                                 f"{manifest.get('kind')!r}")
    disc = QualityDiscriminator(cfgmod.discriminator_config_from_dict(manifest["config"]))
    load_state_arrays(disc, arrays, context=f"discriminator checkpoint {path}")
    return disc, manifest
