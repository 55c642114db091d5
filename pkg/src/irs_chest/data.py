"""Training-set generation and the binary dataset file format.

Each example is a (noisy LS channel estimate, true channel) pair mapped to
2-channel real tensors. Examples cycle through the configured users so a
multi-user config contributes every user's statistics. The stored
generation metadata (config, SNR, count, seed) regenerates the tensors
bit-exactly.

File layout (little-endian): magic "CEDS", format version u32, metadata
JSON (u32 length prefix), then count/height/width/channels u32s followed
by the input and target tensors as f32.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import SystemConfig, sample_channels
from .cdrn.network import to_real_input
from .estimators import ls_estimate
from .linalg import SeededRng
from .pilots import DFT, direct_observation, make_book

MAGIC = b"CEDS"
FORMAT_VERSION = 1

# substream purpose for dataset example draws
_STREAM_EXAMPLE = 2


class DatasetFormatError(ValueError):
    """Raised on bad magic, version, or truncation; names the byte offset."""


@dataclass(frozen=True)
class TrainingSet:
    """Paired tensors plus the metadata that regenerates them."""

    inputs: np.ndarray   # (count, M, N+1, 2) float
    targets: np.ndarray  # same shape
    config: SystemConfig
    snr_db: float
    seed: int

    @property
    def count(self) -> int:
        return self.inputs.shape[0]


def noise_var_for_snr(tx_power: float, snr_db: float) -> float:
    """Transmit-SNR convention: sigma_z^2 = power / 10^(SNR/10)."""
    return tx_power / (10.0 ** (snr_db / 10.0))


def generate_dataset(cfg: SystemConfig, snr_db: float, count: int, seed: int) -> TrainingSet:
    """Sample channels, observe through the DFT book, LS-estimate, tensorize."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    book = make_book(cfg, DFT)
    sigma_z_sq = noise_var_for_snr(cfg.tx_power, snr_db)
    master = SeededRng(seed)
    inputs = np.empty((count, cfg.bs_antennas, cfg.composite_cols, 2))
    targets = np.empty_like(inputs)
    for i in range(count):
        rng = master.substream(_STREAM_EXAMPLE, i)
        chan = sample_channels(cfg, rng)
        truth = chan.composite[i % cfg.num_users]
        obs = direct_observation(truth, book.patterns, sigma_z_sq, rng)
        coarse = ls_estimate(obs.received, book.patterns)
        inputs[i] = to_real_input(coarse)[0]
        targets[i] = to_real_input(truth)[0]
    return TrainingSet(inputs=inputs, targets=targets, config=cfg,
                       snr_db=float(snr_db), seed=seed)


def _config_to_dict(cfg: SystemConfig) -> dict:
    raw = dataclasses.asdict(cfg)
    for key in ("dist_user_bs", "dist_user_irs"):
        if isinstance(raw[key], tuple):
            raw[key] = list(raw[key])
    return raw


def save_dataset(dataset: TrainingSet, path: str | Path) -> None:
    meta = {
        "config": _config_to_dict(dataset.config),
        "snr_db": dataset.snr_db,
        "seed": dataset.seed,
        "count": dataset.count,
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    count, height, width, channels = dataset.inputs.shape
    parts = [
        MAGIC,
        struct.pack("<I", FORMAT_VERSION),
        struct.pack("<I", len(meta_bytes)),
        meta_bytes,
        struct.pack("<4I", count, height, width, channels),
        np.ascontiguousarray(dataset.inputs, dtype="<f4").tobytes(),
        np.ascontiguousarray(dataset.targets, dtype="<f4").tobytes(),
    ]
    Path(path).write_bytes(b"".join(parts))


def load_dataset(path: str | Path) -> TrainingSet:
    data = Path(path).read_bytes()
    offset = 0

    def take(count: int, what: str) -> bytes:
        nonlocal offset
        if offset + count > len(data):
            raise DatasetFormatError(
                f"truncated dataset file: needed {count} bytes for {what} at "
                f"byte offset {offset}, file has {len(data)}"
            )
        chunk = data[offset:offset + count]
        offset += count
        return chunk

    magic = take(4, "magic")
    if magic != MAGIC:
        raise DatasetFormatError(f"bad magic {magic!r} at byte offset 0")
    (version,) = struct.unpack("<I", take(4, "format version"))
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported format version {version} at byte offset 4")
    (meta_len,) = struct.unpack("<I", take(4, "metadata length"))
    meta = json.loads(take(meta_len, "metadata").decode("utf-8"))
    count, height, width, channels = struct.unpack("<4I", take(16, "tensor shape"))
    size = count * height * width * channels
    inputs = np.frombuffer(take(4 * size, "input tensors"), dtype="<f4")
    targets = np.frombuffer(take(4 * size, "target tensors"), dtype="<f4")
    if offset != len(data):
        raise DatasetFormatError(f"trailing data after tensors at byte offset {offset}")
    shape = (count, height, width, channels)
    cfg_raw = dict(meta["config"])
    for key in ("dist_user_bs", "dist_user_irs"):
        if isinstance(cfg_raw.get(key), list):
            cfg_raw[key] = tuple(cfg_raw[key])
    return TrainingSet(
        inputs=inputs.reshape(shape).astype(float),
        targets=targets.reshape(shape).astype(float),
        config=SystemConfig(**cfg_raw),
        snr_db=float(meta["snr_db"]),
        seed=int(meta["seed"]),
    )
