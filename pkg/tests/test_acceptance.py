"""Acceptance suite: one test per criterion, each printing a verdict line.

Desk scale means M=4, N=8, C=9, K=2, L=2. Criteria that only probe the
protocol algebra or the LS error run on the default long-range geometry;
criteria that need the SNR to move the Bayesian and learned estimators
decisively (5, 7, 8a, 10) run with every link at the 10 m reference
distance, where the channel power sits in the estimators' shrinkage
regime at the swept SNRs.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdict lines.
Criterion 7 trains two full models and dominates the runtime (~15 min).
"""

import dataclasses

import numpy as np
import pytest

from irs_chest.bench import (
    BLMMSE,
    CDRN,
    ELMMSE,
    LS,
    MMSE_GAUSSIAN,
    SweepSpec,
    run_sweep_detailed,
    write_csv,
)
from irs_chest.cdrn import (
    TRAIN,
    CdrnConfig,
    TrainConfig,
    cdrn_forward,
    combined_linear_weight,
    init_model,
    linear_block_estimate,
    load_model,
    loss_mse,
    save_model,
    train,
)
from irs_chest.cdrn.training import _flatten_grads, _trainable_params
from irs_chest.cdrn.network import backward
from irs_chest.channel import SystemConfig, sample_channels
from irs_chest.data import generate_dataset, noise_var_for_snr
from irs_chest.estimators import (
    LmmseContext,
    linear_residual_estimate,
    lmmse_estimate_dft,
    lmmse_estimate_general,
    lmmse_residual_weight,
    ls_estimate,
)
from irs_chest.linalg import SeededRng, sample_cscg
from irs_chest.pilots import (
    DFT,
    build_binary_patterns,
    build_dft_patterns,
    direct_observation,
    make_book,
    separate_user,
    synthesize_rx,
)
from irs_chest.visualize import block_error_trajectory, denoising_stages, normalize_unit

TRAIN_SNRS = (5.0, 10.0)
TRAIN_SEED = 77
DATA_SEED = 2024
TRAIN_COUNT = 10_000


def close_range_config(**overrides):
    """Desk dimensions with every link at the reference distance."""
    params = dict(dist_user_bs=10.0, dist_irs_bs=10.0, dist_user_irs=10.0)
    params.update(overrides)
    return dataclasses.replace(SystemConfig(), **params)


def verdict(number, message):
    print(f"\nACCEPTANCE {number:>3}: PASS - {message}")


@pytest.fixture(scope="session")
def trained_models(tmp_path_factory):
    """Per-SNR models for criteria 7, 8a, 10, trained at spec defaults."""
    out_dir = tmp_path_factory.mktemp("models")
    cfg = close_range_config()
    results = {}
    for snr_db in TRAIN_SNRS:
        dataset = generate_dataset(cfg, snr_db, TRAIN_COUNT, DATA_SEED)
        result = train(dataset, CdrnConfig(), TrainConfig(epochs=20, seed=TRAIN_SEED))
        path = out_dir / f"cdrn_{snr_db:g}db.cdrn"
        save_model(result.model, path)
        results[snr_db] = {"result": result, "path": path, "model": result.model}
    return results


@pytest.fixture(scope="session")
def snr_sweep(trained_models):
    """Shared SNR sweep over the trained points for criteria 7 and 8a."""
    spec = SweepSpec(
        swept="snr_db",
        values=list(TRAIN_SNRS),
        estimators=[LS, ELMMSE, BLMMSE, CDRN],
        trials=10_000,
        base=close_range_config(),
        master_seed=31337,
        elmmse_samples=20_000,
    )
    models = {snr: info["model"] for snr, info in trained_models.items()}
    rows, details = run_sweep_detailed(spec, models)
    return {"spec": spec, "rows": rows, "details": details, "models": models}


def test_criterion_01_dft_book_unitarity():
    worst = 0.0
    for n, c in [(8, 9), (16, 17), (32, 33), (8, 16)]:
        patterns = build_dft_patterns(n, c)
        gram = patterns @ patterns.conj().T
        worst = max(worst, np.linalg.norm(gram - c * np.eye(n + 1)))
    assert worst < 1e-9
    verdict(1, f"DFT books satisfy P P^H = C I (worst deviation {worst:.2e})")


def test_criterion_02_ls_analytic_error():
    cfg = SystemConfig()
    sigma = 0.1
    trials = 100_000
    m = cfg.bs_antennas
    books = {
        "dft": build_dft_patterns(cfg.irs_elements, cfg.num_patterns),
        "binary": build_binary_patterns(cfg.irs_elements),
    }
    pinvs = {kind: p.conj().T @ np.linalg.inv(p @ p.conj().T)
             for kind, p in books.items()}
    totals = {kind: 0.0 for kind in books}
    master = SeededRng(4242)
    for t in range(trials):
        chan = sample_channels(cfg, master.substream(0, t))
        truth = chan.composite[0]
        noise_rng = master.substream(1, t)
        for kind, patterns in books.items():
            observed = truth @ patterns + sample_cscg(
                m, patterns.shape[1], sigma, noise_rng)
            estimate = observed @ pinvs[kind]
            totals[kind] += np.sum(np.abs(estimate - truth) ** 2)
    report = []
    for kind, patterns in books.items():
        expected = m * sigma * np.trace(
            np.linalg.inv(patterns @ patterns.conj().T)).real
        measured = totals[kind] / trials
        assert measured == pytest.approx(expected, rel=0.02), kind
        report.append(f"{kind} {measured:.5f} vs {expected:.5f}")
    verdict(2, "LS error matches M sigma^2 tr[(P P^H)^-1] within 2% "
               f"({'; '.join(report)})")


def test_criterion_03_lmmse_form_equivalence():
    rng = SeededRng(99)
    m, n, c = 4, 8, 9
    patterns = build_dft_patterns(n, c)
    worst = 0.0
    for _ in range(100):
        base = sample_cscg(n + 1, n + 1, 1.0, rng)
        corr = base.conj().T @ base + np.eye(n + 1)
        sigma = 10 ** rng.generator.uniform(-2.0, 1.0)
        ctx = LmmseContext(corr, m, sigma, c)
        observed = sample_cscg(m, c, 1.0, rng)
        small_form = lmmse_estimate_dft(observed, patterns, ctx)
        large_form = lmmse_estimate_general(observed, patterns, ctx)
        worst = max(worst, np.linalg.norm(small_form - large_form))
    assert worst < 1e-8
    verdict(3, f"both LMMSE forms agree on 100 DFT instances (worst {worst:.2e})")


def test_criterion_04_linear_residual_bridge():
    rng = SeededRng(100)
    m, n, c = 4, 8, 9
    patterns = build_dft_patterns(n, c)
    worst_weight = 0.0
    for _ in range(100):
        base = sample_cscg(n + 1, n + 1, 1.0, rng)
        corr = base.conj().T @ base + np.eye(n + 1)
        sigma = 10 ** rng.generator.uniform(-2.0, 1.0)
        ctx = LmmseContext(corr, m, sigma, c)
        observed = sample_cscg(m, c, 1.0, rng)
        h_ls = observed @ patterns.conj().T / c
        weight = lmmse_residual_weight(corr, m, sigma, c)
        via_weight = linear_residual_estimate(h_ls, weight)
        via_lmmse = lmmse_estimate_dft(observed, patterns, ctx)
        worst_weight = max(worst_weight, np.linalg.norm(via_weight - via_lmmse))
    assert worst_weight < 1e-8

    worst_blocks = 0.0
    for _ in range(100):
        h_ls = sample_cscg(m, n + 1, 1.0, rng)
        weights = [0.4 * sample_cscg(n + 1, n + 1, 1.0, rng) for _ in range(3)]
        via_blocks = linear_block_estimate(h_ls, weights)
        closed = linear_residual_estimate(h_ls, combined_linear_weight(weights))
        worst_blocks = max(worst_blocks, np.linalg.norm(via_blocks - closed))
    assert worst_blocks < 1e-8
    verdict(4, "optimal residual weight reproduces LMMSE and the bypassed "
               f"block recursion collapses exactly ({worst_weight:.2e}, {worst_blocks:.2e})")


def test_criterion_05_gaussian_prior_optimality():
    cfg = close_range_config(rice_user_bs=0.0, rice_irs_bs=0.0, rice_user_irs=0.0)
    spec = SweepSpec(
        swept="snr_db",
        values=[0.0, 5.0, 10.0],
        estimators=[LS, ELMMSE, MMSE_GAUSSIAN],
        trials=10_000,
        base=cfg,
        master_seed=555,
        elmmse_samples=20_000,
    )
    _, details = run_sweep_detailed(spec)
    report = []
    for snr in spec.values:
        ls_nmse = details[(snr, LS)].nmse
        lmmse_nmse = details[(snr, ELMMSE)].nmse
        mmse_nmse = details[(snr, MMSE_GAUSSIAN)].nmse
        assert lmmse_nmse < ls_nmse, f"LMMSE not better at {snr} dB"
        assert mmse_nmse == pytest.approx(lmmse_nmse, rel=0.02), snr
        report.append(f"{snr:g}dB: {lmmse_nmse:.3f}<{ls_nmse:.3f}")
    verdict(5, "LMMSE strictly beats LS and matches the Gaussian MMSE row "
               f"({'; '.join(report)})")


def test_criterion_06_gradient_check():
    cfg = CdrnConfig(num_blocks=1, layers_per_block=2, filters=4)
    rng = SeededRng(44)
    model = init_model(cfg, rng)
    gen = rng.substream(1).generator
    for block in model.blocks:
        final = block.kernels[-1]
        final[:] = 0.3 * gen.standard_normal(final.shape)
    x = gen.standard_normal((2, 4, 5, 2))
    target = gen.standard_normal((2, 4, 5, 2))

    # central differences are only valid away from ReLU kinks: this draw
    # keeps every pre-activation two orders of magnitude beyond the step
    from irs_chest.cdrn.network import _forward_with_cache
    _, caches = _forward_with_cache(x, model, TRAIN)
    margin = min(np.min(np.abs(c["pre_relu"]))
                 for c in caches[0]["layers"] if "pre_relu" in c)
    assert margin > 1e-2

    _, _, grads = backward(model, x, target)
    params = _trainable_params(model)
    flat = _flatten_grads(model, grads)
    step = 1e-4
    worst = 0.0
    checked = 0
    for param, grad in zip(params, flat):
        it = np.nditer(param, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = param[idx]
            param[idx] = orig + step
            up = loss_mse(cdrn_forward(x, model, TRAIN), target)
            param[idx] = orig - step
            down = loss_mse(cdrn_forward(x, model, TRAIN), target)
            param[idx] = orig
            fd = (up - down) / (2 * step)
            denom = max(abs(fd), abs(grad[idx]), 1e-8)
            worst = max(worst, abs(fd - grad[idx]) / denom)
            checked += 1
    assert worst < 1e-4
    verdict(6, f"{checked} parameter gradients match finite differences "
               f"(max relative error {worst:.2e})")


def test_criterion_07_cdrn_beats_ls(trained_models, snr_sweep):
    details = snr_sweep["details"]
    report = []
    for snr in TRAIN_SNRS:
        cdrn_nmse = details[(snr, CDRN)].nmse
        ls_nmse = details[(snr, LS)].nmse
        assert cdrn_nmse <= 0.5 * ls_nmse, f"insufficient gain at {snr} dB"
        gain_db = 10 * np.log10(ls_nmse / cdrn_nmse)
        report.append(f"{snr:g}dB: {gain_db:.1f} dB gain")
    result = trained_models[10.0]["result"]
    assert result.train_losses[-1] < result.initial_loss
    verdict(7, f"trained denoiser beats LS by >= 3 dB on held-out data "
               f"({'; '.join(report)})")


def test_criterion_08a_snr_trend(snr_sweep):
    details = snr_sweep["details"]
    low, high = TRAIN_SNRS
    report = []
    for label in (LS, ELMMSE, BLMMSE, CDRN):
        at_low = details[(low, label)]
        at_high = details[(high, label)]
        tolerance = at_low.nmse_se
        assert at_high.nmse <= at_low.nmse + tolerance, label
        report.append(f"{label} {at_low.nmse:.3g}->{at_high.nmse:.3g}")
    verdict("8a", f"NMSE non-increasing in SNR ({'; '.join(report)})")


def test_criterion_08b_irs_size_trend():
    spec = SweepSpec(
        swept="n_elements",
        values=[8, 16, 32],
        estimators=[LS, BLMMSE],
        trials=10_000,
        base=dataclasses.replace(
            SystemConfig(), noise_var=noise_var_for_snr(1.0, 5.0)),
        master_seed=808,
        elmmse_samples=20_000,
    )
    _, details = run_sweep_detailed(spec)
    blmmse_db = [10 * np.log10(details[(float(n), BLMMSE)].nmse) for n in spec.values]
    ls_db = [10 * np.log10(details[(float(n), LS)].nmse) for n in spec.values]
    spread = max(blmmse_db) - min(blmmse_db)
    assert spread < 3.0, f"B-LMMSE varies by {spread:.2f} dB"
    assert ls_db[0] > ls_db[1] > ls_db[2], "LS does not improve with IRS size"
    verdict("8b", f"B-LMMSE flat over N (spread {spread:.2f} dB) while LS improves "
                  f"{ls_db[0] - ls_db[2]:.1f} dB")


def test_criterion_08c_pilot_budget_trend():
    n = 8
    values = [n + 1, 2 * (n + 1), 4 * (n + 1)]
    spec = SweepSpec(
        swept="c_pilots",
        values=values,
        estimators=[LS],
        trials=10_000,
        base=dataclasses.replace(
            SystemConfig(), noise_var=noise_var_for_snr(1.0, 5.0)),
        master_seed=909,
    )
    _, details = run_sweep_detailed(spec)
    report = []
    for lo, hi in [(values[0], values[1]), (values[1], values[2])]:
        drop = (10 * np.log10(details[(float(lo), LS)].nmse)
                - 10 * np.log10(details[(float(hi), LS)].nmse))
        expected = 10 * np.log10(hi / lo)
        assert drop == pytest.approx(expected, abs=1.0)
        report.append(f"C {lo}->{hi}: {drop:.2f} dB")
    verdict("8c", f"LS NMSE follows the pilot budget ({'; '.join(report)})")


def test_criterion_09_two_path_equivalence():
    cfg = SystemConfig()
    sigma_z = 0.1
    sigma_v = sigma_z * cfg.tx_power * cfg.pilot_len
    book = make_book(cfg, DFT)
    trials = 10_000
    master = SeededRng(1212)
    err_direct, err_full, sig = 0.0, 0.0, 0.0
    for t in range(trials):
        chan = sample_channels(cfg, master.substream(0, t))
        truth = chan.composite[0]
        obs_direct = direct_observation(truth, book.patterns, sigma_z,
                                        master.substream(1, t))
        frames = synthesize_rx(chan, book, sigma_v, master.substream(2, t))
        obs_full = separate_user(frames, book, 0, sigma_v_sq=sigma_v)
        assert obs_full.noise_var == pytest.approx(sigma_z)
        err_direct += np.sum(np.abs(ls_estimate(obs_direct.received, book.patterns)
                                    - truth) ** 2)
        err_full += np.sum(np.abs(ls_estimate(obs_full.received, book.patterns)
                                  - truth) ** 2)
        sig += np.sum(np.abs(truth) ** 2)
    nmse_direct = err_direct / sig
    nmse_full = err_full / sig
    assert nmse_full == pytest.approx(nmse_direct, rel=0.02)
    verdict(9, f"direct and full pilot paths agree: NMSE {nmse_direct:.1f} "
               f"vs {nmse_full:.1f}")


def test_criterion_10_denoising_visualization(trained_models, tmp_path):
    cfg = close_range_config(noise_var=noise_var_for_snr(1.0, 10.0))
    model = trained_models[10.0]["model"]
    book = make_book(cfg, DFT)
    master = SeededRng(4321)

    from irs_chest.visualize import visualize_denoising

    chan = sample_channels(cfg, master.substream(0, 0))
    sample_obs = direct_observation(chan.composite[0], book.patterns, cfg.noise_var,
                                    master.substream(1, 0))
    sample_ls = ls_estimate(sample_obs.received, book.patterns)
    paths = visualize_denoising(model, sample_ls, tmp_path / "viz")
    assert len(paths) == model.config.num_blocks + 1
    for stage in denoising_stages(model, sample_ls):
        image = normalize_unit(np.abs(stage))
        assert image.min() >= 0.0 and image.max() <= 1.0

    monotone = 0
    total = 100
    for t in range(total):
        chan = sample_channels(cfg, master.substream(0, t))
        truth = chan.composite[0]
        obs = direct_observation(truth, book.patterns, cfg.noise_var,
                                 master.substream(1, t))
        coarse = ls_estimate(obs.received, book.patterns)
        trajectory = block_error_trajectory(model, coarse, truth)
        if all(trajectory[i + 1] <= trajectory[i] + 1e-12
               for i in range(len(trajectory) - 1)):
            monotone += 1
    assert monotone >= 80
    verdict(10, f"images normalized to [0,1]; per-block error non-increasing on "
                f"{monotone}/100 inputs")


def test_criterion_11_determinism(trained_models, tmp_path):
    # sweeps: identical CSV bytes on a re-run with the same master seed
    spec = SweepSpec(
        swept="snr_db",
        values=[5.0, 10.0],
        estimators=[LS, ELMMSE],
        trials=2000,
        base=close_range_config(),
        master_seed=31337,
        elmmse_samples=2000,
    )
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        rows, _ = run_sweep_detailed(spec)
        write_csv(rows, path)
    assert paths[0].read_bytes() == paths[1].read_bytes()

    # training: identical model files on a re-run with the same seeds
    # (representative small run; the criterion-7 training takes the same
    # seeded path and its saved artifact is checked for stability below)
    cfg = close_range_config()
    dataset = generate_dataset(cfg, 10.0, 256, DATA_SEED)
    net_cfg = CdrnConfig(num_blocks=1, layers_per_block=2, filters=8)
    train_cfg = TrainConfig(epochs=2, seed=TRAIN_SEED)
    model_paths = [tmp_path / "a.cdrn", tmp_path / "b.cdrn"]
    for path in model_paths:
        save_model(train(dataset, net_cfg, train_cfg).model, path)
    assert model_paths[0].read_bytes() == model_paths[1].read_bytes()

    # saved criterion-7 artifact reloads to an identical file
    stored = trained_models[10.0]["path"]
    reload_path = tmp_path / "reload.cdrn"
    save_model(load_model(stored), reload_path)
    assert stored.read_bytes() == reload_path.read_bytes()
    verdict(11, "sweep CSVs and model files are byte-identical across re-runs")
