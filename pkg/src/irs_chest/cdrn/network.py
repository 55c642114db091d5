"""Denoising-block network: residual subtraction stacks of Conv+BN+ReLU.

Each block feeds its input through N_l - 1 Conv+BN+ReLU layers and one
final plain convolution back to 2 channels, then subtracts that residual
from the block input. Stacking D blocks gives output = input - sum of the
per-block residuals, so the whole network can never lose the identity map
(zero the final kernels and it passes inputs through untouched).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..linalg import SeededRng
from .layers import (
    INFER,
    TRAIN,
    BatchNormParams,
    batchnorm_backward,
    batchnorm_forward,
    conv2d_backward,
    conv2d_forward,
    relu,
    relu_backward,
)


@dataclass(frozen=True)
class CdrnConfig:
    """Architecture hyperparameters.

    num_blocks denoising blocks, layers_per_block conv layers each (the
    last one plain), a fixed square kernel, and 2 input channels carrying
    the real and imaginary parts.
    """

    num_blocks: int = 3
    layers_per_block: int = 4
    filters: int = 64
    kernel_size: int = 3
    in_channels: int = 2

    def __post_init__(self):
        if self.num_blocks < 1:
            raise ValueError("num_blocks must be >= 1")
        if self.layers_per_block < 2:
            raise ValueError("layers_per_block must be >= 2")
        if self.filters < 1:
            raise ValueError("filters must be >= 1")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be a positive odd integer")


@dataclass
class DenoisingBlock:
    """Kernel banks and batch-norm parameters for one residual subnetwork."""

    kernels: list[np.ndarray]
    norms: list[BatchNormParams | None]

    def copy(self) -> "DenoisingBlock":
        return DenoisingBlock(
            kernels=[k.copy() for k in self.kernels],
            norms=[None if n is None else n.copy() for n in self.norms],
        )

    def astype(self, dtype) -> "DenoisingBlock":
        return DenoisingBlock(
            kernels=[k.astype(dtype) for k in self.kernels],
            norms=[None if n is None else n.astype(dtype) for n in self.norms],
        )


@dataclass
class CdrnModel:
    """Trainable parameters plus the input-conditioning metadata."""

    config: CdrnConfig
    blocks: list[DenoisingBlock]
    input_scale: float = 1.0
    trained_snr_db: float = float("nan")

    def copy(self) -> "CdrnModel":
        return CdrnModel(
            config=self.config,
            blocks=[b.copy() for b in self.blocks],
            input_scale=self.input_scale,
            trained_snr_db=self.trained_snr_db,
        )

    def astype(self, dtype) -> "CdrnModel":
        return CdrnModel(
            config=self.config,
            blocks=[b.astype(dtype) for b in self.blocks],
            input_scale=self.input_scale,
            trained_snr_db=self.trained_snr_db,
        )


def init_model(cfg: CdrnConfig, rng: SeededRng) -> CdrnModel:
    """He-initialized hidden kernels, identity batch norms, zero final convs.

    Zeroing each block's final convolution makes the whole network start
    as the identity map, so training grows the per-block residuals
    incrementally. That keeps the block stack progressively denoising
    (later blocks refine, never undo, earlier ones), which an all-random
    initialization does not deliver.
    """
    gen = rng.generator
    k = cfg.kernel_size
    blocks = []
    for _ in range(cfg.num_blocks):
        kernels: list[np.ndarray] = []
        norms: list[BatchNormParams | None] = []
        for layer in range(cfg.layers_per_block):
            cin = cfg.in_channels if layer == 0 else cfg.filters
            cout = cfg.in_channels if layer == cfg.layers_per_block - 1 else cfg.filters
            if layer == cfg.layers_per_block - 1:
                kernels.append(np.zeros((cout, k, k, cin)))
                norms.append(None)
            else:
                std = np.sqrt(2.0 / (k * k * cin))
                kernels.append(std * gen.standard_normal((cout, k, k, cin)))
                norms.append(BatchNormParams.identity(cout))
        blocks.append(DenoisingBlock(kernels=kernels, norms=norms))
    return CdrnModel(config=cfg, blocks=blocks)


def to_real_input(matrix: np.ndarray) -> np.ndarray:
    """Map a complex matrix (or a batch of them) to the 2-channel tensor.

    Channel 0 carries the real part, channel 1 the imaginary part. A
    single M x W matrix becomes a batch of one.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim == 2:
        matrix = matrix[np.newaxis]
    if matrix.ndim != 3:
        raise ValueError(f"expected a matrix or batch of matrices, got shape {matrix.shape}")
    return np.stack([matrix.real.astype(float), matrix.imag.astype(float)], axis=-1)


def from_real_output(tensor: np.ndarray) -> np.ndarray:
    """Inverse of to_real_input; drops the batch axis for a batch of one."""
    tensor = np.asarray(tensor)
    if tensor.ndim != 4 or tensor.shape[3] != 2:
        raise ValueError(f"expected a (batch, h, w, 2) tensor, got shape {tensor.shape}")
    out = tensor[..., 0] + 1j * tensor[..., 1]
    return out[0] if out.shape[0] == 1 else out


def _residual_forward(x: np.ndarray, block: DenoisingBlock, mode: str,
                      keep_cache: bool) -> tuple[np.ndarray, list | None]:
    """Run one residual subnetwork; optionally keep per-layer caches."""
    caches: list | None = [] if keep_cache else None
    out = x
    last = len(block.kernels) - 1
    for idx, kernels in enumerate(block.kernels):
        conv_in = out
        out, cols = conv2d_forward(out, kernels)
        if idx == last:
            if keep_cache:
                caches.append({"conv_in": conv_in, "cols": cols})
            break
        bn_out, bn_cache = batchnorm_forward(out, block.norms[idx], mode)
        if keep_cache:
            caches.append({"conv_in": conv_in, "cols": cols, "bn": bn_cache,
                           "pre_relu": bn_out})
        out = relu(bn_out)
    return out, caches


def denoising_block_forward(x: np.ndarray, block: DenoisingBlock,
                            mode: str = INFER) -> tuple[np.ndarray, np.ndarray]:
    """One block: subtract the learned residual from the block input."""
    residual, _ = _residual_forward(x, block, mode, keep_cache=False)
    return x - residual, residual


def cdrn_forward(x: np.ndarray, model: CdrnModel, mode: str = INFER) -> np.ndarray:
    """Sequential application of every denoising block."""
    out = x
    for block in model.blocks:
        out, _ = denoising_block_forward(out, block, mode)
    return out


def cdrn_forward_trace(x: np.ndarray, model: CdrnModel,
                       mode: str = INFER) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Forward pass that also returns every block output and residual."""
    out = x
    block_outputs = []
    residuals = []
    for block in model.blocks:
        out, residual = denoising_block_forward(out, block, mode)
        block_outputs.append(out)
        residuals.append(residual)
    return out, block_outputs, residuals


def loss_mse(pred: np.ndarray, target: np.ndarray) -> float:
    """Empirical MSE cost: sum of squared errors over 2 * batch size."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return float(np.sum((pred - target) ** 2) / (2.0 * pred.shape[0]))


@dataclass
class Gradients:
    """Per-block, per-layer gradients mirroring the model layout."""

    kernels: list[list[np.ndarray]]
    scales: list[list[np.ndarray | None]]
    shifts: list[list[np.ndarray | None]]
    batch_stats: list[list[tuple[np.ndarray, np.ndarray] | None]] = field(repr=False, default=None)


def _forward_with_cache(x: np.ndarray, model: CdrnModel,
                        mode: str) -> tuple[np.ndarray, list]:
    out = x
    block_caches = []
    for block in model.blocks:
        residual, caches = _residual_forward(out, block, mode, keep_cache=True)
        block_caches.append({"block_in": out, "layers": caches})
        out = out - residual
    return out, block_caches


def backward(model: CdrnModel, x: np.ndarray, target: np.ndarray,
             mode: str = TRAIN) -> tuple[float, np.ndarray, Gradients]:
    """Loss, prediction, and exact gradients for every trainable parameter.

    Also surfaces the per-layer batch statistics so the trainer can update
    running means/variances; nothing in the model is mutated here.
    """
    pred, block_caches = _forward_with_cache(x, model, mode)
    loss = loss_mse(pred, target)
    grad_out = (pred - target) / x.shape[0]

    grad_kernels = [[None] * len(b.kernels) for b in model.blocks]
    grad_scales = [[None] * len(b.kernels) for b in model.blocks]
    grad_shifts = [[None] * len(b.kernels) for b in model.blocks]
    stats = [[None] * len(b.kernels) for b in model.blocks]

    for b_idx in range(len(model.blocks) - 1, -1, -1):
        block = model.blocks[b_idx]
        caches = block_caches[b_idx]["layers"]
        # block output = block input - residual
        grad_residual = -grad_out
        last = len(block.kernels) - 1
        grad_layer = grad_residual
        for l_idx in range(last, -1, -1):
            cache = caches[l_idx]
            if l_idx != last:
                grad_layer = relu_backward(grad_layer, cache["pre_relu"])
                grad_layer, g_scale, g_shift = batchnorm_backward(grad_layer, cache["bn"])
                grad_scales[b_idx][l_idx] = g_scale
                grad_shifts[b_idx][l_idx] = g_shift
                stats[b_idx][l_idx] = (cache["bn"]["batch_mean"], cache["bn"]["batch_var"])
            grad_layer, g_kernels = conv2d_backward(
                cache["conv_in"], block.kernels[l_idx], grad_layer, cols=cache["cols"])
            grad_kernels[b_idx][l_idx] = g_kernels
        # gradient w.r.t. the block input: identity path plus residual path
        grad_out = grad_out + grad_layer

    grads = Gradients(kernels=grad_kernels, scales=grad_scales,
                      shifts=grad_shifts, batch_stats=stats)
    return loss, pred, grads


def cdrn_estimate(model: CdrnModel, observed_ls: np.ndarray) -> np.ndarray:
    """Denoise one LS-based observation (complex M x W in, same shape out)."""
    scaled = model.input_scale * to_real_input(observed_ls)
    out = cdrn_forward(scaled, model, INFER)
    return from_real_output(out) / model.input_scale


def cdrn_estimate_batch(model: CdrnModel, observed_ls: np.ndarray,
                        chunk: int = 256) -> np.ndarray:
    """Batched denoising for Monte Carlo evaluation, chunked for memory."""
    observed_ls = np.asarray(observed_ls)
    if observed_ls.ndim != 3:
        raise ValueError(f"expected a batch of matrices, got shape {observed_ls.shape}")
    outputs = []
    for start in range(0, observed_ls.shape[0], chunk):
        part = observed_ls[start:start + chunk]
        scaled = model.input_scale * to_real_input(part)
        out = cdrn_forward(scaled, model, INFER)
        outputs.append((out[..., 0] + 1j * out[..., 1]) / model.input_scale)
    return np.concatenate(outputs, axis=0)


def linear_block_estimate(h_ls: np.ndarray,
                          weights: list[np.ndarray]) -> np.ndarray:
    """Block recursion with BN/ReLU bypassed and convs idealized as
    right-multiplications: A_d = A_{d-1} - A_{d-1} W_d.

    Test-only bridge between the network recursion and the closed-form
    linear residual estimators; not part of the user-facing estimator.
    """
    out = np.asarray(h_ls)
    for weight in weights:
        out = out - out @ np.asarray(weight)
    return out


def combined_linear_weight(weights: list[np.ndarray]) -> np.ndarray:
    """Collapse per-block weights: W = sum_d (prod_{i<d} (I - W_i)) W_d."""
    size = np.asarray(weights[0]).shape[0]
    eye = np.eye(size)
    total = np.zeros((size, size), dtype=complex)
    prefix = eye.astype(complex)
    for weight in weights:
        weight = np.asarray(weight)
        total = total + prefix @ weight
        prefix = prefix @ (eye - weight)
    return total
