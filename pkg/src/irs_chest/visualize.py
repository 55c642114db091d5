"""Grayscale snapshots of the denoising pipeline.

Writes the magnitude of the network input and of every block output as
portable graymap (P5) images, each min-max normalized to [0, 1] before
8-bit quantization.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .cdrn.network import CdrnModel, cdrn_forward_trace, from_real_output, to_real_input


def normalize_unit(image: np.ndarray) -> np.ndarray:
    """Min-max normalize to [0, 1]; constant images map to zeros."""
    image = np.asarray(image, dtype=float)
    low = image.min()
    span = image.max() - low
    if span == 0:
        return np.zeros_like(image)
    return (image - low) / span


def write_pgm(image: np.ndarray, path: str | Path) -> None:
    """Write a [0, 1] image as an 8-bit binary PGM."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {image.shape}")
    if image.min() < 0 or image.max() > 1:
        raise ValueError("image values must lie in [0, 1]")
    pixels = np.round(image * 255).astype(np.uint8)
    height, width = pixels.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pixels.tobytes())


def denoising_stages(model: CdrnModel, observed_ls: np.ndarray) -> list[np.ndarray]:
    """Complex matrices at every stage: the input and each block output.

    Stages are reported in the untouched input units (the model's internal
    input scaling is undone), so they are directly comparable to the true
    channel.
    """
    scaled = model.input_scale * to_real_input(observed_ls)
    _, block_outputs, _ = cdrn_forward_trace(scaled, model)
    stages = [np.asarray(observed_ls)]
    for out in block_outputs:
        stages.append(from_real_output(out) / model.input_scale)
    return stages


def block_error_trajectory(model: CdrnModel, observed_ls: np.ndarray,
                           truth: np.ndarray) -> list[float]:
    """Frobenius error of each stage against the true channel."""
    truth = np.asarray(truth)
    return [float(np.linalg.norm(stage - truth)) for stage in denoising_stages(model, observed_ls)]


def visualize_denoising(model: CdrnModel, observed_ls: np.ndarray,
                        out_dir: str | Path) -> list[Path]:
    """Emit one input image plus one image per denoising block."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stages = denoising_stages(model, observed_ls)
    paths = []
    for idx, stage in enumerate(stages):
        name = "input.pgm" if idx == 0 else f"block_{idx:02d}.pgm"
        path = out_dir / name
        write_pgm(normalize_unit(np.abs(stage)), path)
        paths.append(path)
    return paths
