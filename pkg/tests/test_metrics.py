import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st
from hypothesis.extra.numpy import arrays

from src.core.errors import ShapeError
from src.schemas.metrics import MetricConfig, MetricMode
from src.services.metrics import SSIM_SIGMA, SSIM_WINDOW, psnr, rgb_to_y, shave, ssim


def test_psnr_identity_is_infinite(rng):
	img = rng.random((3, 8, 8))
	assert psnr(img, img) == math.inf


def test_psnr_uniform_error_is_twenty_db():
	gt = np.full((3, 10, 10), 0.5)
	assert abs(psnr(gt + 0.1, gt) - 20.0) < 1e-9


def test_psnr_matches_formula(rng):
	pred, gt = rng.random((3, 16, 12)), rng.random((3, 16, 12))
	mse = np.mean((pred - gt) ** 2)
	assert abs(psnr(pred, gt) - 10 * np.log10(1.0 / mse)) < 1e-9


def test_psnr_y_with_shave(rng):
	pred, gt = rng.random((3, 16, 16)), rng.random((3, 16, 16))
	cfg = MetricConfig.for_scale(MetricMode.y_channel, 2.5)
	assert cfg.border_shave == 3
	yp, yg = rgb_to_y(pred)[3:-3, 3:-3], rgb_to_y(gt)[3:-3, 3:-3]
	expected = 10 * np.log10(1.0 / np.mean((yp - yg) ** 2))
	assert abs(psnr(pred, gt, cfg) - expected) < 1e-9
	assert MetricConfig.for_scale(MetricMode.rgb, 2.5).border_shave == 0


def test_psnr_falls_as_noise_grows(rng):
	gt = rng.random((3, 24, 24))
	noise = rng.normal(size=gt.shape)
	scores = [psnr(gt + sigma * noise, gt) for sigma in (0.01, 0.02, 0.05, 0.1, 0.2)]
	assert all(a > b for a, b in zip(scores, scores[1:]))


def test_psnr_shape_mismatch():
	with pytest.raises(ShapeError):
		psnr(np.zeros((3, 4, 4)), np.zeros((3, 4, 5)))


def test_rgb_to_y_levels(rng):
	assert np.allclose(rgb_to_y(np.zeros((3, 2, 2))), 16 / 255, atol=1e-12)
	assert np.allclose(rgb_to_y(np.ones((3, 2, 2))), 235 / 255, atol=1e-9)
	px = rng.random((3, 1, 1))
	expected = (65.481 * px[0] + 128.553 * px[1] + 24.966 * px[2] + 16.0) / 255.0
	assert abs(rgb_to_y(px)[0, 0] - expected[0, 0]) < 1e-9


def test_shave_too_large():
	with pytest.raises(ShapeError):
		shave(np.zeros((4, 4)), 2)


def gaussian_window() -> np.ndarray:
	ax = np.arange(SSIM_WINDOW, dtype=np.float64) - (SSIM_WINDOW - 1) / 2.0
	g = np.exp(-(ax**2) / (2.0 * SSIM_SIGMA**2))
	g /= g.sum()
	return np.outer(g, g)


def test_ssim_identity_and_anticorrelation(rng):
	img = rng.random((1, 24, 24))
	assert abs(ssim(img, img) - 1.0) < 1e-9
	binary = (rng.random((24, 24)) > 0.5).astype(np.float64)
	assert ssim(binary, 1.0 - binary) < 0


def ssim_oracle(x: np.ndarray, y: np.ndarray) -> float:
	window = gaussian_window()
	c1, c2 = 0.01**2, 0.03**2
	n = SSIM_WINDOW
	values = []
	for i in range(x.shape[0] - n + 1):
		for j in range(x.shape[1] - n + 1):
			a, b = x[i : i + n, j : j + n], y[i : i + n, j : j + n]
			mx, my = np.sum(window * a), np.sum(window * b)
			vx = np.sum(window * a * a) - mx * mx
			vy = np.sum(window * b * b) - my * my
			cov = np.sum(window * a * b) - mx * my
			values.append(((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2)))
	return float(np.mean(values))


def test_ssim_matches_sliding_window_oracle(rng):
	x, y = rng.random((32, 32)), rng.random((32, 32))
	assert abs(ssim(x, y) - ssim_oracle(x, y)) < 1e-6
	rgb_x, rgb_y = rng.random((3, 20, 20)), rng.random((3, 20, 20))
	assert abs(ssim(rgb_x, rgb_y) - ssim_oracle(rgb_to_y(rgb_x), rgb_to_y(rgb_y))) < 1e-6


def test_ssim_too_small():
	with pytest.raises(ShapeError):
		ssim(np.zeros((8, 8)), np.zeros((8, 8)))


@hyp_settings(max_examples=30, deadline=None)
@given(
	arrays(np.float64, (3, 12, 12), elements=st.floats(0, 1)),
	arrays(np.float64, (3, 12, 12), elements=st.floats(0, 1)),
)
def test_metrics_are_symmetric(a, b):
	assert psnr(a, b) == psnr(b, a)
	assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)
	assert -1.0 - 1e-9 <= ssim(a, b) <= 1.0 + 1e-9
