"""Monte Carlo NMSE sweeps over SNR, IRS size, antenna count, or pilots.

Every trial draws its random streams from (master seed, purpose, point
index, trial index), so results are bit-identical regardless of worker
count or scheduling. Estimators within a trial share the same channel and
observation draws, which makes their comparison paired and low-variance.

Set IRS_CHEST_THREADS to cap evaluation parallelism (default 1).
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .channel import SystemConfig, analytic_correlation, empirical_correlation, sample_channels
from .cdrn.network import CdrnModel, cdrn_estimate_batch
from .data import noise_var_for_snr
from .linalg import SeededRng, sample_cscg, solve_hermitian
from .pilots import BINARY, DFT, make_book

SWEEP_KINDS = ("snr_db", "n_elements", "m_antennas", "c_pilots")
KIND_ALIASES = {"snr": "snr_db", "n": "n_elements", "m": "m_antennas", "c": "c_pilots"}

LS = "LS"
ELMMSE = "ELMMSE"
BLMMSE = "BLMMSE"
CDRN = "CDRN"
MMSE_GAUSSIAN = "MMSE_GAUSSIAN"
ESTIMATORS = (LS, ELMMSE, BLMMSE, CDRN, MMSE_GAUSSIAN)

CSV_HEADER = "swept_var,value,estimator,nmse_linear,nmse_db,nmse_direct_db,nmse_cascaded_db,trials,seed"

# substream purposes; trial streams are (purpose, point index, trial index)
_STREAM_CHANNEL = 0
_STREAM_NOISE_DFT = 1
_STREAM_NOISE_BINARY = 2
_STREAM_CORR = 3


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: the variable, its values, and the evaluation budget."""

    swept: str
    values: Sequence[float]
    estimators: Sequence[str]
    trials: int
    base: SystemConfig
    master_seed: int
    elmmse_samples: int = 100_000

    def __post_init__(self):
        if self.swept not in SWEEP_KINDS:
            raise ValueError(f"swept must be one of {SWEEP_KINDS}, got {self.swept!r}")
        if len(self.values) == 0:
            raise ValueError("values must be non-empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ValueError(f"unknown estimators: {sorted(unknown)}")
        if self.elmmse_samples < 1:
            raise ValueError("elmmse_samples must be >= 1")


@dataclass(frozen=True)
class ResultRow:
    swept_var: str
    value: float
    estimator: str
    nmse_linear: float
    nmse_db: float
    nmse_direct_db: float
    nmse_cascaded_db: float
    trials: int
    seed: int


@dataclass(frozen=True)
class PointStats:
    """Full/per-block NMSE plus the Monte Carlo standard error of the full NMSE."""

    nmse: float
    nmse_se: float
    nmse_direct: float
    nmse_cascaded: float


def worker_count() -> int:
    """Evaluation parallelism, capped by the IRS_CHEST_THREADS env var."""
    raw = os.environ.get("IRS_CHEST_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"IRS_CHEST_THREADS must be an integer, got {raw!r}") from None
    return max(1, value)


def config_for_point(base: SystemConfig, swept: str, value: float) -> SystemConfig:
    """Apply one swept value to the base config."""
    if swept == "snr_db":
        return dataclasses.replace(
            base, noise_var=noise_var_for_snr(base.tx_power, float(value)))
    if swept == "n_elements":
        n = int(value)
        # the pattern budget tracks the IRS size (C = N + 1) on this axis
        return dataclasses.replace(base, irs_elements=n, num_patterns=n + 1)
    if swept == "m_antennas":
        return dataclasses.replace(base, bs_antennas=int(value))
    if swept == "c_pilots":
        return dataclasses.replace(base, num_patterns=int(value))
    raise ValueError(f"unknown swept variable {swept!r}")


def point_snr_db(cfg: SystemConfig) -> float:
    return 10.0 * np.log10(cfg.tx_power / cfg.noise_var)


def lookup_model(models: Mapping[float, CdrnModel] | None, snr_db: float) -> CdrnModel:
    if models:
        for key, model in models.items():
            if abs(float(key) - snr_db) < 1e-9:
                return model
    available = sorted(float(k) for k in models) if models else []
    raise ValueError(
        f"no CDRN model for SNR {snr_db:g} dB (available: {available})"
    )


def _shrink_matrix(corr: np.ndarray, patterns: np.ndarray, bs_antennas: int,
                   noise_var: float, dft: bool) -> np.ndarray:
    """Matrix S with estimate = (X or H_ls) @ S, precomputed once per point."""
    if dft:
        c = patterns.shape[1]
        reg = corr + (bs_antennas * noise_var / c) * np.eye(corr.shape[0])
        return solve_hermitian(reg, corr)
    p_h = patterns.conj().T
    gram = p_h @ corr @ patterns + (bs_antennas * noise_var) * np.eye(patterns.shape[1])
    return solve_hermitian(gram, p_h @ corr)


def _block_sums(diff: np.ndarray) -> tuple[float, float, float]:
    """(full, direct-column, cascaded-columns) squared Frobenius sums."""
    sq = np.abs(diff) ** 2
    direct = float(np.sum(sq[:, 0]))
    total = float(np.sum(sq))
    return total, direct, total - direct


def evaluate_point(cfg: SystemConfig, estimators: Sequence[str], trials: int,
                   master_seed: int, point_index: int,
                   models: Mapping[float, CdrnModel] | None = None,
                   elmmse_samples: int = 100_000) -> dict[str, PointStats]:
    """Monte Carlo NMSE of the requested estimators at one sweep point."""
    estimators = list(estimators)
    master = SeededRng(master_seed)
    num_users = cfg.num_users
    m, cols = cfg.bs_antennas, cfg.composite_cols
    sigma = cfg.noise_var

    need_dft = any(e in estimators for e in (LS, ELMMSE, CDRN, MMSE_GAUSSIAN))
    need_corr = any(e in estimators for e in (ELMMSE, BLMMSE))

    book_dft = make_book(cfg, DFT) if need_dft else None
    book_bin = make_book(cfg, BINARY) if BLMMSE in estimators else None
    pinv_dft = None
    if book_dft is not None:
        p = book_dft.patterns
        pinv_dft = solve_hermitian(p @ p.conj().T, p).conj().T

    corr_emp = None
    if need_corr:
        rng = master.substream(_STREAM_CORR, point_index)
        corr_sum = np.zeros((cols, cols), dtype=complex)
        drawn = 0
        chunk_size = 512
        while drawn < elmmse_samples:
            chunk = min(chunk_size, elmmse_samples - drawn)
            draws = []
            for _ in range(chunk):
                draws.extend(sample_channels(cfg, rng).composite)
            corr_sum += len(draws) * empirical_correlation(draws)
            drawn += chunk
        corr_emp = corr_sum / (elmmse_samples * num_users)

    shrink = {}
    if ELMMSE in estimators:
        shrink[ELMMSE] = _shrink_matrix(corr_emp, book_dft.patterns, m, sigma, dft=True)
    if MMSE_GAUSSIAN in estimators:
        corr_true = analytic_correlation(cfg)
        shrink[MMSE_GAUSSIAN] = _shrink_matrix(corr_true, book_dft.patterns, m, sigma, dft=True)
    if BLMMSE in estimators:
        shrink[BLMMSE] = _shrink_matrix(corr_emp, book_bin.patterns, m, sigma, dft=False)

    model = lookup_model(models, point_snr_db(cfg)) if CDRN in estimators else None

    err = {e: np.zeros((trials, 3)) for e in estimators}
    sig = np.zeros((trials, 3))
    truths = np.empty((trials, num_users, m, cols), dtype=complex) if CDRN in estimators else None
    ls_inputs = np.empty((trials, num_users, m, cols), dtype=complex) if CDRN in estimators else None

    def run_trial(t: int) -> None:
        rng_chan = master.substream(_STREAM_CHANNEL, point_index, t)
        rng_dft = master.substream(_STREAM_NOISE_DFT, point_index, t)
        rng_bin = master.substream(_STREAM_NOISE_BINARY, point_index, t)
        chan = sample_channels(cfg, rng_chan)
        for k in range(num_users):
            truth = chan.composite[k]
            sig[t] += _block_sums(truth)
            if need_dft:
                observed = truth @ book_dft.patterns + sample_cscg(
                    m, book_dft.patterns.shape[1], sigma, rng_dft)
                h_ls = observed @ pinv_dft
                if LS in estimators:
                    err[LS][t] += _block_sums(h_ls - truth)
                for label in (ELMMSE, MMSE_GAUSSIAN):
                    if label in estimators:
                        err[label][t] += _block_sums(h_ls @ shrink[label] - truth)
                if CDRN in estimators:
                    truths[t, k] = truth
                    ls_inputs[t, k] = h_ls
            if BLMMSE in estimators:
                observed_bin = truth @ book_bin.patterns + sample_cscg(
                    m, book_bin.patterns.shape[1], sigma, rng_bin)
                err[BLMMSE][t] += _block_sums(observed_bin @ shrink[BLMMSE] - truth)

    workers = worker_count()
    if workers == 1:
        for t in range(trials):
            run_trial(t)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_trial, range(trials)))

    if CDRN in estimators:
        flat = ls_inputs.reshape(trials * num_users, m, cols)
        ests = cdrn_estimate_batch(model, flat).reshape(trials, num_users, m, cols)
        diff = ests - truths
        sq = np.abs(diff) ** 2
        err[CDRN][:, 1] = sq[:, :, :, 0].sum(axis=(1, 2))
        err[CDRN][:, 0] = sq.sum(axis=(1, 2, 3))
        err[CDRN][:, 2] = err[CDRN][:, 0] - err[CDRN][:, 1]

    stats = {}
    for label in estimators:
        totals = err[label].sum(axis=0)
        sig_totals = sig.sum(axis=0)
        nmse = totals[0] / sig_totals[0]
        # ratio-estimator linearization for the standard error
        if trials > 1:
            resid = err[label][:, 0] - nmse * sig[:, 0]
            se = float(np.std(resid, ddof=1) / (np.sqrt(trials) * np.mean(sig[:, 0])))
        else:
            se = float("nan")
        stats[label] = PointStats(
            nmse=float(nmse),
            nmse_se=se,
            nmse_direct=float(totals[1] / sig_totals[1]),
            nmse_cascaded=float(totals[2] / sig_totals[2]),
        )
    return stats


def _to_db(value: float) -> float:
    return float(10.0 * np.log10(value)) if value > 0 else float("-inf")


def run_sweep_detailed(
    spec: SweepSpec,
    models: Mapping[float, CdrnModel] | None = None,
) -> tuple[list[ResultRow], dict[tuple[float, str], PointStats]]:
    """Run the sweep and keep the per-point statistics for assertions."""
    # fail fast on missing models, before any Monte Carlo work
    if CDRN in spec.estimators:
        for value in spec.values:
            cfg = config_for_point(spec.base, spec.swept, value)
            lookup_model(models, point_snr_db(cfg))

    rows: list[ResultRow] = []
    details: dict[tuple[float, str], PointStats] = {}
    for point_index, value in enumerate(spec.values):
        cfg = config_for_point(spec.base, spec.swept, value)
        stats = evaluate_point(cfg, spec.estimators, spec.trials, spec.master_seed,
                               point_index, models, spec.elmmse_samples)
        for label in spec.estimators:
            stat = stats[label]
            details[(float(value), label)] = stat
            rows.append(ResultRow(
                swept_var=spec.swept,
                value=float(value),
                estimator=label,
                nmse_linear=stat.nmse,
                nmse_db=_to_db(stat.nmse),
                nmse_direct_db=_to_db(stat.nmse_direct),
                nmse_cascaded_db=_to_db(stat.nmse_cascaded),
                trials=spec.trials,
                seed=spec.master_seed,
            ))
    return rows, details


def run_sweep(spec: SweepSpec,
              models: Mapping[float, CdrnModel] | None = None) -> list[ResultRow]:
    rows, _ = run_sweep_detailed(spec, models)
    return rows


def format_rows(rows: Sequence[ResultRow]) -> str:
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(
            f"{row.swept_var},{row.value!r},{row.estimator},{row.nmse_linear!r},"
            f"{row.nmse_db!r},{row.nmse_direct_db!r},{row.nmse_cascaded_db!r},"
            f"{row.trials},{row.seed}"
        )
    return "\n".join(lines) + "\n"


def write_csv(rows: Sequence[ResultRow], path: str | Path) -> None:
    Path(path).write_text(format_rows(rows), encoding="utf-8")
