"""Mini-batch Adam training of the denoising network.

Training minimizes the empirical MSE cost over (noisy LS estimate, true
channel) pairs. Inputs are conditioned by a stored scale factor (the
reciprocal RMS of the training inputs) so batch norm and ReLU see O(1)
activations regardless of path loss. The returned model carries the
parameters from the epoch with the best validation loss.

The optimizer runs in single precision, matching the precision the model
file stores; everything outside the trainer (estimators, gradient checks,
inference on loaded models) stays double.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..linalg import SeededRng
from .layers import INFER, updated_running_stats
from .network import (
    CdrnConfig,
    CdrnModel,
    backward,
    cdrn_forward,
    init_model,
)

# substream purposes within the training seed
_STREAM_INIT = 0
_STREAM_SHUFFLE = 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 20
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    val_fraction: float = 0.1

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("moment decays must be in [0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be > 0")


@dataclass
class TrainResult:
    model: CdrnModel
    initial_loss: float
    train_losses: list[float]
    val_losses: list[float]
    best_epoch: int


class _Adam:
    """Adam state over an explicit list of parameter arrays."""

    def __init__(self, params: list[np.ndarray], cfg: TrainConfig):
        self.cfg = cfg
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        cfg = self.cfg
        self.t += 1
        correction1 = 1.0 - cfg.beta1 ** self.t
        correction2 = 1.0 - cfg.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * g * g
            p -= cfg.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + cfg.eps)


def _trainable_params(model: CdrnModel) -> list[np.ndarray]:
    params = []
    for block in model.blocks:
        for kernels in block.kernels:
            params.append(kernels)
        for norm in block.norms:
            if norm is not None:
                params.append(norm.scale)
                params.append(norm.shift)
    return params


def _flatten_grads(model: CdrnModel, grads) -> list[np.ndarray]:
    flat = []
    for b_idx, block in enumerate(model.blocks):
        for l_idx in range(len(block.kernels)):
            flat.append(grads.kernels[b_idx][l_idx])
        for l_idx, norm in enumerate(block.norms):
            if norm is not None:
                flat.append(grads.scales[b_idx][l_idx])
                flat.append(grads.shifts[b_idx][l_idx])
    return flat


def _apply_running_stats(model: CdrnModel, grads) -> None:
    for b_idx, block in enumerate(model.blocks):
        for l_idx, norm in enumerate(block.norms):
            if norm is None:
                continue
            mean, var = grads.batch_stats[b_idx][l_idx]
            norm.running_mean, norm.running_var = updated_running_stats(norm, mean, var)


def _epoch_loss(model: CdrnModel, inputs: np.ndarray, targets: np.ndarray,
                chunk: int = 512) -> float:
    """Infer-mode loss over a whole array, computed in memory-bounded chunks."""
    total = 0.0
    for start in range(0, inputs.shape[0], chunk):
        pred = cdrn_forward(inputs[start:start + chunk], model, INFER)
        diff = pred - targets[start:start + chunk]
        total += float(np.sum(diff * diff))
    return total / (2.0 * inputs.shape[0])


def input_scale_for(inputs: np.ndarray) -> float:
    """Reciprocal RMS entry magnitude of the training inputs."""
    rms = float(np.sqrt(np.mean(np.asarray(inputs) ** 2)))
    return 1.0 / rms if rms > 0 else 1.0


def train(dataset, net_cfg: CdrnConfig, train_cfg: TrainConfig) -> TrainResult:
    """Run the offline training loop and return the best checkpoint.

    dataset must expose float tensors `inputs` and `targets` of shape
    (count, M, N+1, 2) plus `snr_db` metadata (see irs_chest.data).
    """
    inputs = np.asarray(dataset.inputs, dtype=np.float32)
    targets = np.asarray(dataset.targets, dtype=np.float32)
    if inputs.shape != targets.shape or inputs.ndim != 4:
        raise ValueError(
            f"dataset tensors must share a (count, h, w, 2) shape, got "
            f"{inputs.shape} and {targets.shape}"
        )
    count = inputs.shape[0]
    if count == 0:
        raise ValueError("dataset is empty")

    scale = input_scale_for(inputs)
    inputs = np.float32(scale) * inputs
    targets = np.float32(scale) * targets

    rng = SeededRng(train_cfg.seed)
    model = init_model(net_cfg, rng.substream(_STREAM_INIT)).astype(np.float32)
    model.input_scale = scale
    model.trained_snr_db = float(getattr(dataset, "snr_db", float("nan")))

    val_count = int(round(train_cfg.val_fraction * count))
    val_count = min(val_count, count - 1)
    split_gen = rng.substream(_STREAM_SHUFFLE).generator
    order = split_gen.permutation(count)
    val_idx, train_idx = order[:val_count], order[val_count:]
    train_in, train_tg = inputs[train_idx], targets[train_idx]
    val_in, val_tg = inputs[val_idx], targets[val_idx]

    params = _trainable_params(model)
    adam = _Adam(params, train_cfg)

    initial_loss = _epoch_loss(model, train_in, train_tg)
    train_losses: list[float] = []
    val_losses: list[float] = []
    best_val = np.inf
    best_epoch = -1
    best_model = model.copy()

    n_train = train_in.shape[0]
    for epoch in range(train_cfg.epochs):
        perm = split_gen.permutation(n_train)
        epoch_loss = 0.0
        for start in range(0, n_train, train_cfg.batch_size):
            batch = perm[start:start + train_cfg.batch_size]
            loss, _, grads = backward(model, train_in[batch], train_tg[batch])
            adam.step(params, _flatten_grads(model, grads))
            _apply_running_stats(model, grads)
            epoch_loss += loss * len(batch)
        train_losses.append(epoch_loss / n_train)

        if val_in.shape[0] > 0:
            val_loss = _epoch_loss(model, val_in, val_tg)
        else:
            val_loss = train_losses[-1]
        val_losses.append(val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_model = model.copy()

    return TrainResult(model=best_model, initial_loss=initial_loss,
                       train_losses=train_losses, val_losses=val_losses,
                       best_epoch=best_epoch)
