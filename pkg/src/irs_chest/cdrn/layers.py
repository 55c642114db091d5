"""Convolution, batch normalization, and ReLU with exact backward passes.

Tensors are (batch, height, width, channels) throughout. The convolution
is direct (im2col + one matmul) with stride 1 and zero "same" padding, so
spatial shape is always preserved. Kernel banks are stored as
(out_channels, kernel_h, kernel_w, in_channels).

Every function is dtype-generic: computation follows the input dtype, so
the gradient checks run in float64 while the trainer can run the same
code in float32.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BN_EPS = 1e-5
BN_MOMENTUM = 0.9

TRAIN = "train"
INFER = "infer"


@dataclass
class BatchNormParams:
    """Per-channel scale/shift plus running statistics for inference."""

    scale: np.ndarray
    shift: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray

    @classmethod
    def identity(cls, channels: int) -> "BatchNormParams":
        return cls(
            scale=np.ones(channels),
            shift=np.zeros(channels),
            running_mean=np.zeros(channels),
            running_var=np.ones(channels),
        )

    def copy(self) -> "BatchNormParams":
        return BatchNormParams(self.scale.copy(), self.shift.copy(),
                               self.running_mean.copy(), self.running_var.copy())

    def astype(self, dtype) -> "BatchNormParams":
        return BatchNormParams(self.scale.astype(dtype), self.shift.astype(dtype),
                               self.running_mean.astype(dtype),
                               self.running_var.astype(dtype))


def _check_tensor(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 4:
        raise ValueError(f"expected a (batch, h, w, channels) tensor, got shape {x.shape}")
    return x


def _im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """Extract all same-padded kh x kw patches as rows of a matrix."""
    b, h, w, cin = x.shape
    ph, pw = kh // 2, kw // 2
    padded = np.zeros((b, h + 2 * ph, w + 2 * pw, cin), dtype=x.dtype)
    padded[:, ph:ph + h, pw:pw + w, :] = x
    patches = np.empty((b, h, w, kh, kw, cin), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            patches[:, :, :, i, j, :] = padded[:, i:i + h, j:j + w, :]
    return patches.reshape(b * h * w, kh * kw * cin)


def _weight_matrix(kernels: np.ndarray) -> np.ndarray:
    cout, kh, kw, cin = kernels.shape
    return kernels.transpose(1, 2, 3, 0).reshape(kh * kw * cin, cout)


def conv2d_forward(x: np.ndarray, kernels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Same-padded stride-1 convolution; also returns the patch matrix.

    The patch matrix can be fed back to conv2d_backward to avoid
    re-extracting patches during training.
    """
    x = _check_tensor(x)
    kernels = np.asarray(kernels)
    if kernels.ndim != 4:
        raise ValueError(f"kernels must be (out, kh, kw, in), got shape {kernels.shape}")
    cout, kh, kw, cin = kernels.shape
    if cin != x.shape[3]:
        raise ValueError(
            f"kernel input channels {cin} do not match tensor channels {x.shape[3]}"
        )
    b, h, w, _ = x.shape
    cols = _im2col(x, kh, kw)
    out = (cols @ _weight_matrix(kernels)).reshape(b, h, w, cout)
    return out, cols


def conv2d(x: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    out, _ = conv2d_forward(x, kernels)
    return out


def conv2d_backward(x: np.ndarray, kernels: np.ndarray, grad_out: np.ndarray,
                    cols: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of conv2d w.r.t. its input and kernel bank."""
    x = _check_tensor(x)
    grad_out = _check_tensor(grad_out)
    kernels = np.asarray(kernels)
    cout, kh, kw, cin = kernels.shape
    b, h, w, _ = x.shape
    if cols is None:
        cols = _im2col(x, kh, kw)
    grad_mat = grad_out.reshape(b * h * w, cout)

    grad_weight = cols.T @ grad_mat  # (kh*kw*cin, cout)
    grad_kernels = grad_weight.reshape(kh, kw, cin, cout).transpose(3, 0, 1, 2)
    grad_kernels = np.ascontiguousarray(grad_kernels)

    grad_cols = (grad_mat @ _weight_matrix(kernels).T).reshape(b, h, w, kh, kw, cin)
    ph, pw = kh // 2, kw // 2
    grad_padded = np.zeros((b, h + 2 * ph, w + 2 * pw, cin), dtype=grad_out.dtype)
    for i in range(kh):
        for j in range(kw):
            grad_padded[:, i:i + h, j:j + w, :] += grad_cols[:, :, :, i, j, :]
    grad_x = grad_padded[:, ph:ph + h, pw:pw + w, :]
    return grad_x, grad_kernels


def batchnorm_forward(x: np.ndarray, params: BatchNormParams,
                      mode: str) -> tuple[np.ndarray, dict]:
    """Normalize per channel; train mode uses batch statistics.

    Returns the output and a cache for the backward pass. The cache also
    carries the batch statistics so the trainer can update running
    statistics explicitly (this function never mutates params).
    """
    x = _check_tensor(x)
    if x.shape[3] != params.scale.shape[0]:
        raise ValueError(
            f"tensor has {x.shape[3]} channels but params have {params.scale.shape[0]}"
        )
    if mode == TRAIN:
        mean = x.mean(axis=(0, 1, 2))
        var = x.var(axis=(0, 1, 2))
    elif mode == INFER:
        mean = params.running_mean
        var = params.running_var
    else:
        raise ValueError(f"mode must be {TRAIN!r} or {INFER!r}, got {mode!r}")
    inv_std = 1.0 / np.sqrt(var + np.asarray(BN_EPS, dtype=x.dtype))
    # fused affine: out = x * a + b with a, b per channel
    a = params.scale * inv_std
    out = x * a + (params.shift - mean * a)
    cache = {"x": x, "mean": mean, "inv_std": inv_std, "scale": params.scale,
             "mode": mode, "batch_mean": mean, "batch_var": var}
    return out, cache


def batchnorm(x: np.ndarray, params: BatchNormParams, mode: str) -> np.ndarray:
    out, _ = batchnorm_forward(x, params, mode)
    return out


def batchnorm_backward(grad_out: np.ndarray,
                       cache: dict) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients w.r.t. the input, scale, and shift.

    In train mode the batch mean and variance depend on the input, so the
    backward pass routes through them; in infer mode the statistics are
    constants and the layer is a plain affine map.
    """
    inv_std = cache["inv_std"]
    scale = cache["scale"]
    normed = (cache["x"] - cache["mean"]) * inv_std
    grad_scale = np.einsum("bhwc,bhwc->c", grad_out, normed)
    grad_shift = grad_out.sum(axis=(0, 1, 2))
    if cache["mode"] == INFER:
        return grad_out * (scale * inv_std), grad_scale, grad_shift
    count = grad_out.shape[0] * grad_out.shape[1] * grad_out.shape[2]
    coeff = scale * inv_std / count
    grad_x = coeff * (count * grad_out - grad_shift - normed * grad_scale)
    return grad_x, grad_scale, grad_shift


def updated_running_stats(params: BatchNormParams, batch_mean: np.ndarray,
                          batch_var: np.ndarray,
                          momentum: float = BN_MOMENTUM) -> tuple[np.ndarray, np.ndarray]:
    """Exponential-moving-average update used after each training step."""
    new_mean = momentum * params.running_mean + (1.0 - momentum) * batch_mean
    new_var = momentum * params.running_var + (1.0 - momentum) * batch_var
    return new_mean.astype(params.running_mean.dtype), new_var.astype(params.running_var.dtype)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(grad_out: np.ndarray, pre_activation: np.ndarray) -> np.ndarray:
    return grad_out * (pre_activation > 0.0)
