"""Cross-modal transfer benchmark tests."""

import numpy as np
import pytest

from gaplab.bench import (
    LatentSpec,
    classify,
    evaluate_crossmodal,
    fit_one_vs_rest,
    gap_shift_sweep,
    in_modality_metric,
    make_toy_task,
    run_ablation,
    train_decoder,
)

STANDARD = dict(n=5000, d=64, gap_norm=0.83, sigma_align=0.05, span_dim=16)


def gradient_descent_ridge(x, t, lam, steps=60_000, lr=None):
    """Iterative oracle for the ridge solution on centered data."""
    xm = x.mean(axis=0)
    tm = t.mean(axis=0)
    xc = x - xm
    tc = t - tm
    w = np.zeros((x.shape[1], t.shape[1]))
    h = xc.T @ xc + lam * np.eye(x.shape[1])
    if lr is None:
        lr = 1.0 / np.linalg.eigvalsh(h).max()
    g_target = xc.T @ tc
    for _ in range(steps):
        w -= lr * (h @ w - g_target)
    return w, tm - xm @ w


class TestToyTask:
    def test_deterministic(self):
        a = make_toy_task(seed=3, **STANDARD)
        b = make_toy_task(seed=3, **STANDARD)
        np.testing.assert_array_equal(a.pairs.x.values, b.pairs.x.values)
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.train_idx, b.train_idx)

    def test_zero_gap_zero_noise_identical_modalities(self):
        t = make_toy_task(n=200, d=32, gap_norm=0.0, sigma_align=0.0, seed=0, span_dim=16)
        np.testing.assert_array_equal(t.pairs.x.values, t.pairs.y.values)

    def test_split_disjoint(self):
        t = make_toy_task(seed=1, **STANDARD)
        assert len(np.intersect1d(t.train_idx, t.test_idx)) == 0
        assert len(t.train_idx) + len(t.test_idx) == t.pairs.n

    def test_classes_linearly_separable_in_modality(self):
        for seed in range(3):
            assert in_modality_metric(make_toy_task(seed=seed, **STANDARD)) >= 0.99

    def test_latent_recoverable_without_noise(self):
        t = make_toy_task(n=1000, d=32, gap_norm=0.0, sigma_align=0.0, seed=2,
                          span_dim=16, latent=LatentSpec("regression", 4))
        x = t.pairs.y.values[t.train_idx]
        dec = train_decoder(x, t.targets[t.train_idx], lam=1e-8)
        pred = dec.predict(t.pairs.y.values[t.test_idx])
        assert ((pred - t.targets[t.test_idx]) ** 2).mean() < 1e-6

    def test_gap_needs_orthogonal_room(self):
        with pytest.raises(ValueError, match="span_dim"):
            make_toy_task(n=100, d=16, span_dim=16, gap_norm=0.5, sigma_align=0.0)

    def test_gap_geometry(self):
        t = make_toy_task(seed=4, **STANDARD)
        # gap direction orthogonal to the span, gap present in the mean difference
        np.testing.assert_allclose(t.span_basis.T @ t.gap_direction, 0.0, atol=1e-10)
        diff = t.pairs.x.values.mean(axis=0) - t.pairs.y.values.mean(axis=0)
        assert diff @ t.gap_direction == pytest.approx(0.83, abs=0.01)


class TestRidgeDecoder:
    def test_exact_linear_targets(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((300, 10))
        w_true = rng.standard_normal((10, 3))
        t = x @ w_true + rng.standard_normal(3)
        dec = train_decoder(x, t, lam=1e-8)
        assert ((dec.predict(x) - t) ** 2).mean() < 1e-6

    def test_matches_gradient_descent_oracle(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((80, 6))
        t = rng.standard_normal((80, 2))
        dec = train_decoder(x, t, lam=0.5)
        w, b = gradient_descent_ridge(x, t, lam=0.5)
        assert np.abs(dec.weights - w).max() < 1e-4
        assert np.abs(dec.bias - b).max() < 1e-4

    def test_row_permutation_invariant(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((50, 5))
        t = rng.standard_normal((50, 2))
        perm = rng.permutation(50)
        a = train_decoder(x, t, lam=0.1)
        b = train_decoder(x[perm], t[perm], lam=0.1)
        np.testing.assert_allclose(a.weights, b.weights, atol=1e-10)
        np.testing.assert_allclose(a.bias, b.bias, atol=1e-10)

    def test_zero_penalty_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            train_decoder(np.ones((3, 2)), np.ones((3, 1)), lam=0.0)

    def test_one_vs_rest_classifier(self):
        rng = np.random.default_rng(8)
        centers = np.eye(4) * 3
        labels = rng.integers(0, 4, size=400)
        x = centers[labels] + 0.3 * rng.standard_normal((400, 4))
        dec = fit_one_vs_rest(x, labels, n_classes=4, lam=1e-3)
        assert (classify(dec, x) == labels).mean() > 0.98


class TestEvaluate:
    def test_clean_task_all_variants_equal(self):
        t = make_toy_task(n=2000, d=64, gap_norm=0.0, sigma_align=0.0, seed=0, span_dim=16)
        vals = [evaluate_crossmodal(t, v, train_sigma=0.01, noise_seed=3)
                for v in ("c1", "c21", "c22", "c22_span", "c3")]
        assert max(vals) - min(vals) <= 0.01

    def test_unknown_variant_rejected(self):
        t = make_toy_task(n=200, d=32, gap_norm=0.0, sigma_align=0.0, seed=0, span_dim=16)
        with pytest.raises(ValueError, match="variant"):
            evaluate_crossmodal(t, "c4")

    def test_deterministic(self):
        t = make_toy_task(seed=5, **STANDARD)
        a = evaluate_crossmodal(t, "c3", 0.05, noise_seed=11)
        b = evaluate_crossmodal(t, "c3", 0.05, noise_seed=11)
        assert a == b

    def test_no_transfer_beats_in_modality(self):
        for seed in range(5):
            t = make_toy_task(seed=seed, **STANDARD)
            own = in_modality_metric(t)
            for variant in ("c1", "c21", "c22", "c22_span", "c3"):
                assert own >= evaluate_crossmodal(t, variant, 0.05, noise_seed=100 + seed)

    def test_regression_pipeline_blind_to_orthogonal_gap(self):
        # a fully linear decode path provably ignores constant shifts
        # orthogonal to its training span, so the raw variant already wins
        gapped = make_toy_task(n=1000, d=32, gap_norm=0.3, sigma_align=0.05, seed=6,
                               span_dim=16, latent=LatentSpec("regression", 4))
        clean = make_toy_task(n=1000, d=32, gap_norm=0.0, sigma_align=0.05, seed=6,
                              span_dim=16, latent=LatentSpec("regression", 4))
        mse_gapped = evaluate_crossmodal(gapped, "c1", 0.0)
        mse_clean = evaluate_crossmodal(clean, "c1", 0.0)
        assert mse_gapped == pytest.approx(mse_clean, rel=0.05)
        assert mse_gapped < 0.05


class TestAblation:
    def test_ordering_and_sigma_sweep(self):
        rows = run_ablation(task_kwargs=STANDARD, seeds=(0, 1, 2))
        by = {r.variant: r for r in rows}
        assert by["c3"].mean >= by["c21"].mean
        assert by["c3"].mean >= by["c22"].mean >= by["c1"].mean
        assert by["c3"].mean - by["c1"].mean >= 0.1
        assert by["c1"].train_sigma == 0.0  # sweep only touches corrupting variants
        assert by["c22"].train_sigma in (0.01, 0.05, 0.1, 0.2)

    def test_regression_sweep_minimizes(self):
        kwargs = dict(n=1000, d=32, gap_norm=0.3, sigma_align=0.05, span_dim=16,
                      latent=LatentSpec("regression", 4))
        rows = run_ablation(task_kwargs=kwargs, seeds=(0, 1), sigma_grid=(0.01, 0.1))
        by = {r.variant: r for r in rows}
        assert all(r.mean > 0 for r in rows)
        # training noise only costs a linear pipeline accuracy, so the sweep
        # settles on the smallest grid entry for every corrupting variant
        assert by["c22"].train_sigma == 0.01
        assert by["c3"].train_sigma == 0.01


class TestShiftSweep:
    def test_zero_shift_matches_plain_evaluation(self):
        t = make_toy_task(n=2000, d=64, gap_norm=0.0, sigma_align=0.05, seed=7, span_dim=16)
        curve = gap_shift_sweep(t, [0.0])
        direct = evaluate_crossmodal(t, "c1", 0.0)
        assert abs(curve[0][1] - direct) <= 1e-10

    def test_monotone_degradation(self):
        t = make_toy_task(n=4000, d=64, gap_norm=0.0, sigma_align=0.05, seed=8, span_dim=16)
        curve = gap_shift_sweep(t, [0.0, 0.5, 1.0, 1.5, 2.0, 5.0])
        vals = [m for _, m in curve]
        assert all(b <= a + 0.01 for a, b in zip(vals, vals[1:]))
        assert vals[-1] <= 0.2  # chance is 0.1 for ten classes

    def test_unsorted_shifts_rejected(self):
        t = make_toy_task(n=200, d=32, gap_norm=0.0, sigma_align=0.0, seed=0, span_dim=16)
        with pytest.raises(ValueError, match="sorted"):
            gap_shift_sweep(t, [1.0, 0.5])

    def test_full_span_task_has_no_orthogonal_direction(self):
        t = make_toy_task(n=200, d=16, span_dim=16, gap_norm=0.0, sigma_align=0.0, seed=0)
        with pytest.raises(ValueError, match="orthogonal"):
            gap_shift_sweep(t, [0.0, 1.0])

    def test_in_span_mode_runs(self):
        t = make_toy_task(n=1000, d=32, gap_norm=0.0, sigma_align=0.05, seed=9, span_dim=16)
        curve = gap_shift_sweep(t, [0.0, 1.0], shift_mode="in_span")
        assert len(curve) == 2
