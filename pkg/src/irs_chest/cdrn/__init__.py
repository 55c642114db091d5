"""Convolutional deep-residual denoiser: layers, network, training, files."""

from .layers import (
    BN_EPS,
    BN_MOMENTUM,
    INFER,
    TRAIN,
    BatchNormParams,
    batchnorm,
    batchnorm_backward,
    batchnorm_forward,
    conv2d,
    conv2d_backward,
    relu,
    relu_backward,
    updated_running_stats,
)
from .network import (
    CdrnConfig,
    CdrnModel,
    DenoisingBlock,
    Gradients,
    backward,
    cdrn_estimate,
    cdrn_estimate_batch,
    cdrn_forward,
    cdrn_forward_trace,
    combined_linear_weight,
    denoising_block_forward,
    from_real_output,
    init_model,
    linear_block_estimate,
    loss_mse,
    to_real_input,
)
from .serialize import FORMAT_VERSION, ModelFormatError, load_model, save_model
from .training import TrainConfig, TrainResult, input_scale_for, train

__all__ = [
    "BN_EPS",
    "BN_MOMENTUM",
    "INFER",
    "TRAIN",
    "BatchNormParams",
    "CdrnConfig",
    "CdrnModel",
    "DenoisingBlock",
    "FORMAT_VERSION",
    "Gradients",
    "ModelFormatError",
    "TrainConfig",
    "TrainResult",
    "backward",
    "batchnorm",
    "batchnorm_backward",
    "batchnorm_forward",
    "cdrn_estimate",
    "cdrn_estimate_batch",
    "cdrn_forward",
    "cdrn_forward_trace",
    "combined_linear_weight",
    "conv2d",
    "conv2d_backward",
    "denoising_block_forward",
    "from_real_output",
    "init_model",
    "input_scale_for",
    "linear_block_estimate",
    "load_model",
    "loss_mse",
    "relu",
    "relu_backward",
    "save_model",
    "to_real_input",
    "train",
    "updated_running_stats",
]
