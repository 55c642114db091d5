"""Binary model persistence.

Layout (little-endian):
  magic "CDRN", format version u32,
  config u32s: num_blocks, layers_per_block, filters, kernel_size, in_channels,
  input_scale f64, trained_snr_db f64,
  then per block, per layer: the kernel bank as f32 in
  (out_channel, row, col, in_channel) order, followed for batch-normalized
  layers by the f32 per-channel scale, shift, running mean, running
  variance arrays.

Parameters are stored in single precision; loading promotes back to
float64 for computation.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .layers import BatchNormParams
from .network import CdrnConfig, CdrnModel, DenoisingBlock

MAGIC = b"CDRN"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised on bad magic, version, or truncation; names the byte offset."""


def save_model(model: CdrnModel, path: str | Path) -> None:
    cfg = model.config
    parts = [MAGIC]
    parts.append(struct.pack("<I", FORMAT_VERSION))
    parts.append(struct.pack("<5I", cfg.num_blocks, cfg.layers_per_block,
                             cfg.filters, cfg.kernel_size, cfg.in_channels))
    parts.append(struct.pack("<2d", model.input_scale, model.trained_snr_db))
    for block in model.blocks:
        for l_idx, kernels in enumerate(block.kernels):
            parts.append(np.ascontiguousarray(kernels, dtype="<f4").tobytes())
            norm = block.norms[l_idx]
            if norm is not None:
                for arr in (norm.scale, norm.shift, norm.running_mean, norm.running_var):
                    parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, count: int, what: str) -> bytes:
        if self.offset + count > len(self.data):
            raise ModelFormatError(
                f"truncated model file: needed {count} bytes for {what} at "
                f"byte offset {self.offset}, file has {len(self.data)}"
            )
        chunk = self.data[self.offset:self.offset + count]
        self.offset += count
        return chunk

    def f32_array(self, shape: tuple[int, ...], what: str) -> np.ndarray:
        count = int(np.prod(shape))
        raw = self.take(4 * count, what)
        return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(float)


def load_model(path: str | Path) -> CdrnModel:
    reader = _Reader(Path(path).read_bytes())
    magic = reader.take(4, "magic")
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic {magic!r} at byte offset 0")
    (version,) = struct.unpack("<I", reader.take(4, "format version"))
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported format version {version} at byte offset 4"
        )
    fields = struct.unpack("<5I", reader.take(20, "config"))
    cfg = CdrnConfig(num_blocks=fields[0], layers_per_block=fields[1],
                     filters=fields[2], kernel_size=fields[3], in_channels=fields[4])
    input_scale, trained_snr_db = struct.unpack("<2d", reader.take(16, "metadata"))

    k = cfg.kernel_size
    blocks = []
    for _ in range(cfg.num_blocks):
        kernels: list[np.ndarray] = []
        norms: list[BatchNormParams | None] = []
        for layer in range(cfg.layers_per_block):
            cin = cfg.in_channels if layer == 0 else cfg.filters
            cout = cfg.in_channels if layer == cfg.layers_per_block - 1 else cfg.filters
            kernels.append(reader.f32_array((cout, k, k, cin), f"layer {layer} kernels"))
            if layer == cfg.layers_per_block - 1:
                norms.append(None)
            else:
                norms.append(BatchNormParams(
                    scale=reader.f32_array((cout,), "bn scale"),
                    shift=reader.f32_array((cout,), "bn shift"),
                    running_mean=reader.f32_array((cout,), "bn running mean"),
                    running_var=reader.f32_array((cout,), "bn running variance"),
                ))
        blocks.append(DenoisingBlock(kernels=kernels, norms=norms))
    if reader.offset != len(reader.data):
        raise ModelFormatError(
            f"trailing data after model at byte offset {reader.offset}"
        )
    return CdrnModel(config=cfg, blocks=blocks, input_scale=input_scale,
                     trained_snr_db=trained_snr_db)
