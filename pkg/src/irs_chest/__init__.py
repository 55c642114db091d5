"""Channel-estimation workbench for IRS-assisted multi-user uplinks.

Synthesizes cascaded Rician channels, runs DFT/binary pilot protocols,
estimates channels with LS / LMMSE / B-LMMSE and a trained convolutional
residual denoiser, and benchmarks everything by Monte Carlo NMSE.
"""

from . import bench, cdrn, channel, config, data, estimators, linalg, pilots, visualize

__version__ = "0.1.0"

__all__ = [
    "bench",
    "cdrn",
    "channel",
    "config",
    "data",
    "estimators",
    "linalg",
    "pilots",
    "visualize",
    "__version__",
]
