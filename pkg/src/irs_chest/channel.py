"""Large-scale path loss, Rician small-scale fading, and composite channels.

The per-user composite channel stacks the direct user->BS column with the
cascaded user->IRS->BS block: H_k = [d_k, G diag(f_k)]. Only the cascade is
physically estimable, so everything downstream works on H_k directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import SeededRng, sample_cscg


def _per_user(value, num_users: int, name: str) -> tuple[float, ...]:
    """Expand a scalar or per-user sequence to a length-K tuple."""
    if np.isscalar(value):
        return (float(value),) * num_users
    values = tuple(float(v) for v in value)
    if len(values) != num_users:
        raise ValueError(
            f"{name} must be a scalar or length-{num_users} sequence, got {len(values)} values"
        )
    return values


@dataclass(frozen=True)
class SystemConfig:
    """System dimensions, powers, and link geometry.

    Defaults are the desk-scale dimensions with the long-range reference
    geometry (distances 100/90/16 m, exponents 3.6/2.3/2.0, Rician factors
    0/10/0, -15 dB reference loss at 10 m). The user-side distances accept
    per-user sequences; all other geometry is shared.
    """

    bs_antennas: int = 4
    irs_elements: int = 8
    num_users: int = 2
    num_patterns: int = 9
    pilot_len: int = 2
    tx_power: float = 1.0
    noise_var: float = 0.1
    dist_user_bs: float | Sequence[float] = 100.0
    dist_irs_bs: float = 90.0
    dist_user_irs: float | Sequence[float] = 16.0
    exp_user_bs: float = 3.6
    exp_irs_bs: float = 2.3
    exp_user_irs: float = 2.0
    ref_dist: float = 10.0
    ref_loss: float = 10.0 ** -1.5
    rice_user_bs: float = 0.0
    rice_irs_bs: float = 10.0
    rice_user_irs: float = 0.0

    def __post_init__(self):
        if min(self.bs_antennas, self.irs_elements, self.num_users) < 1:
            raise ValueError("all dimensions must be >= 1")
        if self.num_patterns < self.irs_elements + 1:
            raise ValueError(
                f"need num_patterns >= irs_elements + 1, got {self.num_patterns} < "
                f"{self.irs_elements + 1}"
            )
        if self.pilot_len < self.num_users:
            raise ValueError(
                f"need pilot_len >= num_users, got {self.pilot_len} < {self.num_users}"
            )
        if self.tx_power <= 0 or self.noise_var <= 0:
            raise ValueError("tx_power and noise_var must be > 0")
        if self.ref_dist <= 0 or self.ref_loss <= 0:
            raise ValueError("ref_dist and ref_loss must be > 0")
        for name in ("dist_user_bs", "dist_user_irs"):
            if any(d <= 0 for d in _per_user(getattr(self, name), self.num_users, name)):
                raise ValueError(f"{name} must be > 0")
        if self.dist_irs_bs <= 0:
            raise ValueError("dist_irs_bs must be > 0")
        if min(self.rice_user_bs, self.rice_irs_bs, self.rice_user_irs) < 0:
            raise ValueError("Rician factors must be >= 0")

    @property
    def composite_cols(self) -> int:
        return self.irs_elements + 1

    def user_bs_dists(self) -> tuple[float, ...]:
        return _per_user(self.dist_user_bs, self.num_users, "dist_user_bs")

    def user_irs_dists(self) -> tuple[float, ...]:
        return _per_user(self.dist_user_irs, self.num_users, "dist_user_irs")

    def gain_user_bs(self, k: int) -> float:
        return path_loss(self.user_bs_dists()[k], self.exp_user_bs, self.ref_loss, self.ref_dist)

    def gain_user_irs(self, k: int) -> float:
        return path_loss(self.user_irs_dists()[k], self.exp_user_irs, self.ref_loss, self.ref_dist)

    def gain_irs_bs(self) -> float:
        return path_loss(self.dist_irs_bs, self.exp_irs_bs, self.ref_loss, self.ref_dist)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of every link plus the assembled composite channels."""

    irs_bs: np.ndarray                 # M x N
    user_irs: list[np.ndarray] = field(repr=False)  # K vectors, N x 1
    user_bs: list[np.ndarray] = field(repr=False)   # K vectors, M x 1
    composite: list[np.ndarray] = field(repr=False)  # K matrices, M x (N+1)


def path_loss(distance: float, exponent: float, ref_loss: float, ref_dist: float) -> float:
    """Distance-power-law gain: ref_loss * (distance / ref_dist) ** -exponent."""
    if distance <= 0:
        raise ValueError(f"distance must be > 0, got {distance}")
    if ref_dist <= 0:
        raise ValueError(f"ref_dist must be > 0, got {ref_dist}")
    return float(ref_loss * (distance / ref_dist) ** (-exponent))


def los_component(rows: int, cols: int, rng: SeededRng) -> np.ndarray:
    """Rank-1 line-of-sight matrix from two random ULA steering vectors.

    Half-wavelength element spacing, departure/arrival angles uniform in
    [0, 2pi) per realization. Every entry has unit modulus.
    """
    gen = rng.generator
    theta_rx = gen.uniform(0.0, 2.0 * np.pi)
    theta_tx = gen.uniform(0.0, 2.0 * np.pi)
    a_rx = np.exp(1j * np.pi * np.arange(rows) * np.sin(theta_rx))
    a_tx = np.exp(1j * np.pi * np.arange(cols) * np.sin(theta_tx))
    return np.outer(a_rx, a_tx.conj())


def sample_rician(rows: int, cols: int, rice_factor: float, los: np.ndarray,
                  rng: SeededRng) -> np.ndarray:
    """Rician fading draw: sqrt(b/(b+1)) * los + sqrt(1/(b+1)) * CSCG(0, 1).

    Per-entry second moment is 1 for any rice_factor b >= 0 as long as the
    LOS matrix has unit-modulus entries (validated here). The scattered
    part is always drawn so stream layout does not depend on b.
    """
    if rice_factor < 0:
        raise ValueError(f"rice_factor must be >= 0, got {rice_factor}")
    los = np.asarray(los)
    if los.shape != (rows, cols):
        raise ValueError(f"los shape {los.shape} does not match ({rows}, {cols})")
    if not np.allclose(np.abs(los), 1.0, atol=1e-9):
        raise ValueError("los entries must have unit modulus")
    scattered = sample_cscg(rows, cols, 1.0, rng)
    w_los = np.sqrt(rice_factor / (rice_factor + 1.0))
    w_nlos = np.sqrt(1.0 / (rice_factor + 1.0))
    return w_los * los + w_nlos * scattered


def cascade(irs_bs: np.ndarray, user_irs: np.ndarray) -> np.ndarray:
    """Cascaded block G diag(f): column n of G scaled by f[n]."""
    irs_bs = np.asarray(irs_bs)
    user_irs = np.asarray(user_irs)
    if irs_bs.ndim != 2 or user_irs.shape != (irs_bs.shape[1], 1):
        raise ValueError(
            f"shape mismatch for cascade: G {irs_bs.shape}, f {user_irs.shape}"
        )
    return irs_bs * user_irs[:, 0][np.newaxis, :]


def sample_channels(cfg: SystemConfig, rng: SeededRng) -> ChannelRealization:
    """Draw one full channel realization.

    Draw order is fixed and part of the determinism contract: the IRS-BS
    link first (LOS angles then scattered part), then per user k the
    user-IRS link followed by the user-BS link.
    """
    m, n = cfg.bs_antennas, cfg.irs_elements
    g_los = los_component(m, n, rng)
    irs_bs = np.sqrt(cfg.gain_irs_bs()) * sample_rician(m, n, cfg.rice_irs_bs, g_los, rng)

    user_irs, user_bs, composite = [], [], []
    for k in range(cfg.num_users):
        f_los = los_component(n, 1, rng)
        f_k = np.sqrt(cfg.gain_user_irs(k)) * sample_rician(n, 1, cfg.rice_user_irs, f_los, rng)
        d_los = los_component(m, 1, rng)
        d_k = np.sqrt(cfg.gain_user_bs(k)) * sample_rician(m, 1, cfg.rice_user_bs, d_los, rng)
        user_irs.append(f_k)
        user_bs.append(d_k)
        composite.append(np.concatenate([d_k, cascade(irs_bs, f_k)], axis=1))
    return ChannelRealization(irs_bs=irs_bs, user_irs=user_irs, user_bs=user_bs,
                              composite=composite)


def empirical_correlation(samples: Sequence[np.ndarray]) -> np.ndarray:
    """Monte Carlo channel correlation matrix: mean of H^H H over samples."""
    if len(samples) == 0:
        raise ValueError("empirical_correlation needs at least one sample")
    stack = np.stack([np.asarray(s) for s in samples])
    if stack.ndim != 3:
        raise ValueError("samples must all be matrices of identical shape")
    return np.einsum("sij,sik->jk", stack.conj(), stack) / len(samples)


def analytic_correlation(cfg: SystemConfig) -> np.ndarray:
    """Closed-form E[H^H H] for zero-mean user-side links.

    Valid when the user-BS and user-IRS Rician factors are both zero (the
    user-side links are then zero mean and mutually uncorrelated, so the
    correlation matrix is diagonal regardless of the IRS-BS fading). The
    result is M * diag(user-BS gain, cascaded gain, ..., cascaded gain),
    averaged over users when per-user distances differ.
    """
    if cfg.rice_user_bs != 0 or cfg.rice_user_irs != 0:
        raise ValueError(
            "analytic_correlation requires zero user-side Rician factors; "
            "use empirical_correlation instead"
        )
    m, n, k_users = cfg.bs_antennas, cfg.irs_elements, cfg.num_users
    gain_direct = np.mean([cfg.gain_user_bs(k) for k in range(k_users)])
    gain_casc = cfg.gain_irs_bs() * np.mean([cfg.gain_user_irs(k) for k in range(k_users)])
    diag = np.full(n + 1, m * gain_casc, dtype=complex)
    diag[0] = m * gain_direct
    return np.diag(diag)
