"""Reflection-pattern books, orthogonal pilot sequences, and observations.

A pattern book is the (N+1) x C matrix P whose column c is [1, r_c]: the
leading 1 is the always-on direct-link slot and r_c is the IRS reflection
state during sub-frame c. Users are separated by orthogonal pilot
sequences, leaving the per-user observation X_k = H_k P + Z_k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, SystemConfig
from .linalg import SeededRng, sample_cscg

DFT = "dft"
BINARY = "binary"


@dataclass(frozen=True)
class PilotBook:
    """Reflection patterns plus per-user pilot sequences.

    patterns:   (N+1) x C, columns [1, r_c]
    pilot_seqs: L x K, orthogonal columns with u_k^H u_k = power * L
    kind:       "dft" or "binary"
    """

    patterns: np.ndarray
    pilot_seqs: np.ndarray
    kind: str

    @property
    def num_patterns(self) -> int:
        return self.patterns.shape[1]

    @property
    def pilot_energy(self) -> float:
        """u_k^H u_k, identical for every column by construction."""
        return float(np.real(np.vdot(self.pilot_seqs[:, 0], self.pilot_seqs[:, 0])))


@dataclass(frozen=True)
class UserObservation:
    """Per-user stacked observation X = H P + Z with its noise level."""

    received: np.ndarray  # M x C
    user_index: int
    noise_var: float


def build_dft_patterns(irs_elements: int, num_patterns: int) -> np.ndarray:
    """DFT pattern book: entry (n, c) = exp(2j pi n c / C).

    Rows are orthogonal, so P P^H = C I; every entry has unit modulus and
    row 0 (the direct-link slot) is all ones.
    """
    n, c = irs_elements, num_patterns
    if c < n + 1:
        raise ValueError(f"DFT book needs num_patterns >= irs_elements + 1, got {c} < {n + 1}")
    rows = np.arange(n + 1)[:, np.newaxis]
    cols = np.arange(c)[np.newaxis, :]
    return np.exp(2j * np.pi * rows * cols / c)


def build_binary_patterns(irs_elements: int) -> np.ndarray:
    """One-element-at-a-time book: (N+1) x (N+1).

    Column 0 switches every IRS element off; column c (1 <= c <= N)
    switches on only element c with zero phase. The direct-link row is all
    ones and the book has full rank.
    """
    n = irs_elements
    patterns = np.zeros((n + 1, n + 1), dtype=complex)
    patterns[0, :] = 1.0
    patterns[1:, 1:] = np.eye(n)
    return patterns


def build_pilot_sequences(num_users: int, pilot_len: int, power: float) -> np.ndarray:
    """First K columns of the L-point DFT matrix scaled by sqrt(power)."""
    if power <= 0:
        raise ValueError(f"power must be > 0, got {power}")
    if pilot_len < num_users:
        raise ValueError(
            f"need pilot_len >= num_users, got {pilot_len} < {num_users}"
        )
    rows = np.arange(pilot_len)[:, np.newaxis]
    cols = np.arange(num_users)[np.newaxis, :]
    return np.sqrt(power) * np.exp(2j * np.pi * rows * cols / pilot_len)


def make_book(cfg: SystemConfig, kind: str = DFT) -> PilotBook:
    """Build the pattern book and pilot sequences for a system config."""
    if kind == DFT:
        patterns = build_dft_patterns(cfg.irs_elements, cfg.num_patterns)
    elif kind == BINARY:
        patterns = build_binary_patterns(cfg.irs_elements)
    else:
        raise ValueError(f"unknown pilot book kind: {kind!r}")
    seqs = build_pilot_sequences(cfg.num_users, cfg.pilot_len, cfg.tx_power)
    return PilotBook(patterns=patterns, pilot_seqs=seqs, kind=kind)


def synthesize_rx(chan: ChannelRealization, book: PilotBook, sigma_v_sq: float,
                  rng: SeededRng) -> list[np.ndarray]:
    """Raw received pilot frames, one M x L matrix per sub-frame.

    S_c = sum_k H_k p_c u_k^H + V_c with i.i.d. CSCG sampling noise of
    per-entry variance sigma_v_sq. Noise is drawn per sub-frame in index
    order after the signal part (determinism contract).
    """
    if sigma_v_sq < 0:
        raise ValueError(f"sigma_v_sq must be >= 0, got {sigma_v_sq}")
    num_users = len(chan.composite)
    if book.pilot_seqs.shape[1] != num_users:
        raise ValueError(
            f"book has {book.pilot_seqs.shape[1]} pilot sequences for {num_users} users"
        )
    m = chan.irs_bs.shape[0]
    pilots_conj = book.pilot_seqs.conj()  # L x K
    # column c of H_k @ patterns is H_k p_c
    responses = [h @ book.patterns for h in chan.composite]  # each M x C
    frames = []
    for c in range(book.num_patterns):
        signal = np.zeros((m, book.pilot_seqs.shape[0]), dtype=complex)
        for k in range(num_users):
            signal += np.outer(responses[k][:, c], pilots_conj[:, k])
        frames.append(signal + sample_cscg(m, book.pilot_seqs.shape[0], sigma_v_sq, rng))
    return frames


def separate_user(frames: list[np.ndarray], book: PilotBook, user_index: int,
                  sigma_v_sq: float = 0.0) -> UserObservation:
    """Project the frames onto one user's pilot sequence.

    x_c = S_c u_k / (u_k^H u_k); stacking over sub-frames gives
    X = H_k P + Z with per-entry noise variance sigma_v_sq / (power * L).
    """
    if not 0 <= user_index < book.pilot_seqs.shape[1]:
        raise ValueError(
            f"user_index {user_index} out of range for {book.pilot_seqs.shape[1]} users"
        )
    energy = book.pilot_energy
    seq = book.pilot_seqs[:, user_index]
    columns = [frame @ seq / energy for frame in frames]
    return UserObservation(
        received=np.stack(columns, axis=1),
        user_index=user_index,
        noise_var=sigma_v_sq / energy,
    )


def direct_observation(composite: np.ndarray, patterns: np.ndarray, sigma_z_sq: float,
                       rng: SeededRng, user_index: int = 0) -> UserObservation:
    """Sample X = H P + Z directly at the separated-observation level.

    Statistically equivalent to synthesize_rx followed by separate_user at
    matched sigma_z_sq = sigma_v_sq / (power * L), and much cheaper for
    Monte Carlo sweeps.
    """
    if sigma_z_sq < 0:
        raise ValueError(f"sigma_z_sq must be >= 0, got {sigma_z_sq}")
    composite = np.asarray(composite)
    patterns = np.asarray(patterns)
    if composite.shape[1] != patterns.shape[0]:
        raise ValueError(
            f"shape mismatch: H {composite.shape} vs P {patterns.shape}"
        )
    noise = sample_cscg(composite.shape[0], patterns.shape[1], sigma_z_sq, rng)
    return UserObservation(
        received=composite @ patterns + noise,
        user_index=user_index,
        noise_var=sigma_z_sq,
    )
