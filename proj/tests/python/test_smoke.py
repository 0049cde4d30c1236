"""Smoke tests for the python bindings.

Runs under pytest, or standalone: python3 tests/python/test_smoke.py
"""

import os
import sys
import tempfile

import numpy as np

import lwssim


def test_identity_scores():
    x = lwssim.synthesize("noise", height=16, width=16, seed=7)
    assert x.shape == (16, 16)
    assert x.dtype == np.float64
    assert 1.0 - 1e-12 <= lwssim.ssim(x, x) <= 1.0
    assert 2.0 - 1e-12 <= lwssim.lwssim(x, x) <= 2.0
    assert 0.0 <= lwssim.lwssim_loss(x, x) <= 1e-12
    assert lwssim.mse(x, x) == 0.0
    assert lwssim.mae(x, x) == 0.0


def test_flat_pair_known_value():
    x = lwssim.synthesize("constant", value=0.0, height=12, width=12)
    y = lwssim.synthesize("constant", value=0.5, height=12, width=12)
    expected_l = 1e-4 / (0.25 + 1e-4)
    assert abs(lwssim.ssim(x, y, xi=3) - expected_l) < 1e-12
    assert abs(lwssim.lwssim(x, y) - (expected_l + 1.0)) < 1e-12


def test_multichannel_shapes():
    x = lwssim.synthesize("noise", channels=3, height=12, width=12, seed=1)
    y = lwssim.synthesize("noise", channels=3, height=12, width=12, seed=2)
    assert x.shape == (3, 12, 12)
    report = lwssim.compute_report(x, y)
    assert len(report["channels"]) == 3
    assert len(report["levels"]) == 3
    assert abs(report["lwssim_loss"] - (1.0 - report["lwssim"] / 2.0)) < 1e-12
    g = lwssim.grad_lwssim_loss(x, y)
    assert g.shape == x.shape


def test_image_roundtrip():
    x = lwssim.synthesize("noise", channels=3, height=10, width=10, seed=3)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "img.png")
        lwssim.save_image(x, path)
        back = lwssim.load_image(path)
    assert back.shape == x.shape
    assert np.max(np.abs(back - x)) <= 1.0 / 510.0


def test_score_map():
    x = lwssim.synthesize("noise", height=16, width=16, seed=4)
    m = lwssim.score_map(x, x, "ssim")
    assert m.shape == (10, 10)
    # identical inputs score 1 up to rounding in the contrast term
    assert m.min() >= 1.0 - 1e-12 and m.max() <= 1.0
    s = lwssim.score_map(x, x, "s", xi=3)
    assert s.shape == (14, 14)


def test_gradient_matches_finite_differences():
    x = lwssim.synthesize("noise", height=12, width=12, seed=5)
    y = lwssim.synthesize("noise", height=12, width=12, seed=6)
    g = lwssim.grad_lwssim_loss(x, y)
    h = 1e-5
    rng = np.random.default_rng(0)
    for _ in range(10):
        r, c = rng.integers(0, 12, size=2)
        plus = y.copy()
        plus[r, c] += h
        minus = y.copy()
        minus[r, c] -= h
        fd = (lwssim.lwssim_loss(x, plus) - lwssim.lwssim_loss(x, minus)) / (2 * h)
        assert abs(g[r, c] - fd) <= max(1e-7, 1e-4 * abs(fd))


def test_optimize_pixels():
    target = lwssim.synthesize("gradient", height=12, width=12)
    init = lwssim.synthesize("noise", height=12, width=12, seed=8)
    out = lwssim.optimize_pixels(target, init, loss="mse", steps=100)
    assert out["loss"].shape == (101,)
    assert out["loss"][-1] < 1e-2
    assert out["final"].shape == (12, 12)
    assert out["report"]["mse"] < 1e-2


def test_optimize_bottleneck():
    target = lwssim.synthesize("gradient", height=12, width=12)
    out = lwssim.optimize_bottleneck(target, rank=1, loss="mse", steps=150)
    assert out["loss"][-1] < out["loss"][0]
    assert out["final"].shape == (12, 12)
    assert 0.0 <= out["final"].min() and out["final"].max() <= 1.0


def test_compare_losses():
    target = lwssim.synthesize("gradient", height=12, width=12)
    rows = lwssim.compare_losses(target, losses=["mse", "lwssim"], rank=2, steps=20, seeds=2)
    assert [row["loss"] for row in rows] == ["mse", "lwssim"]
    for row in rows:
        assert np.isfinite(row["ssim_mean"])
        assert row["mse_sd"] >= 0.0


def test_error_mapping():
    x = lwssim.synthesize("noise", height=12, width=12, seed=9)
    y = lwssim.synthesize("noise", height=12, width=13, seed=9)
    try:
        lwssim.ssim(x, y)
        raise AssertionError("shape mismatch not rejected")
    except ValueError:
        pass
    try:
        lwssim.grad_ssim(x, x, alpha=2.0)
        raise AssertionError("non-unit exponent not rejected")
    except lwssim.UnsupportedConfigError:
        pass
    try:
        lwssim.load_image("/no/such/file.png")
        raise AssertionError("missing file not rejected")
    except lwssim.IoError:
        pass


def main():
    failures = 0
    for name, fn in sorted(globals().items()):
        if not name.startswith("test_") or not callable(fn):
            continue
        try:
            fn()
            print(f"[PASS] {name}")
        except Exception as exc:  # noqa: BLE001 - report and keep going
            failures += 1
            print(f"[FAIL] {name}: {exc!r}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
