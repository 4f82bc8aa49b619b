import numpy as np
import pytest

from src.core.config import settings
from src.core.errors import ShapeError
from src.engine.random import make_rng
from src.engine.tensor import Tensor, no_grad
from src.models.nonlocal_attention import (
	NonLocalAttention,
	nonlocal_features,
	nonlocal_or_tiled,
	tiled_nonlocal,
	usable_scales,
)
from src.schemas.model import NonLocalConfig


def branch(scale_set, channels=4, in_channels=3, seed=0) -> NonLocalAttention:
	cfg = NonLocalConfig(channels=channels, scale_set=scale_set)
	return NonLocalAttention(in_channels, cfg, make_rng(seed)).astype(np.float64)


def project(conv, x: np.ndarray) -> np.ndarray:
	"""1×1 convolution on a C×H×W array."""
	return np.einsum("oc,chw->ohw", conv.weight.data[:, :, 0, 0], x) + conv.bias.data[:, None, None]


def pool(x: np.ndarray, s: int) -> np.ndarray:
	c, h, w = x.shape
	hs, ws = h // s, w // s
	return x[:, : hs * s, : ws * s].reshape(c, hs, s, ws, s).mean(axis=(2, 4))


def loop_nonlocal(feat: np.ndarray, params: NonLocalAttention) -> np.ndarray:
	f = feat[0]
	_, h, w = f.shape
	q = project(params.proj_q, f)
	keys, vals = [], []
	for s in params.cfg.scale_set:
		k = project(params.proj_k, pool(f, s))
		v = pool(project(params.proj_v, f), s)
		for i in range(k.shape[1]):
			for j in range(k.shape[2]):
				keys.append(k[:, i, j])
				vals.append(v[:, i, j])
	out = np.zeros((params.out_channels, h, w))
	for y in range(h):
		for x in range(w):
			logits = np.array([q[:, y, x] @ k for k in keys])
			a = np.exp(logits - logits.max())
			a /= a.sum()
			out[:, y, x] = a @ np.array(vals)
	return out


def test_matches_double_loop_oracle(rng):
	params = branch([2, 4])
	feat = rng.normal(size=(1, 3, 8, 8))
	with no_grad():
		g = nonlocal_features(Tensor(feat), params).data
	assert g.shape == (1, 4, 8, 8)
	assert np.allclose(g[0], loop_nonlocal(feat, params), atol=1e-5)


def test_constant_input_gives_projected_constant():
	params = branch([2, 3, 4])
	feat = np.full((1, 3, 8, 8), 0.7)
	with no_grad():
		g = nonlocal_features(Tensor(feat), params).data
	expected = project(params.proj_v, feat[0])
	assert np.allclose(g[0], expected, atol=1e-12)


def test_single_token_is_copied_everywhere(rng):
	params = branch([2])
	feat = rng.normal(size=(1, 3, 2, 2))
	with no_grad():
		g = nonlocal_features(Tensor(feat), params).data
	token = pool(project(params.proj_v, feat[0]), 2)[:, 0, 0]
	assert np.allclose(g[0], token[:, None, None], atol=1e-12)


def test_scales_larger_than_map_are_skipped():
	assert usable_scales([2, 3, 4], 3, 9) == [2, 3]
	assert usable_scales([2], 1, 5) == []


def test_tiny_map_falls_back_to_full_resolution_tokens(rng):
	params = branch([2])
	feat = rng.normal(size=(1, 3, 1, 4))
	with no_grad():
		g = nonlocal_features(Tensor(feat), params).data
	assert g.shape == (1, 4, 1, 4)
	assert np.all(np.isfinite(g))


def test_cap_is_enforced(rng):
	params = branch([2])
	with pytest.raises(ShapeError):
		nonlocal_features(Tensor(rng.normal(size=(1, 3, 8, 8))), params, max_pixels=32)
	with pytest.raises(ShapeError):
		nonlocal_features(Tensor(rng.normal(size=(1, 2, 8, 8))), params)


def test_tiling_small_input_is_untiled(rng):
	params = branch([2, 4])
	feat = Tensor(rng.normal(size=(1, 3, 6, 7)))
	with no_grad():
		assert np.array_equal(tiled_nonlocal(feat, params, 8).data, nonlocal_features(feat, params).data)


def test_tiles_equal_per_block_recomputation(rng):
	params = branch([2, 4])
	feat = rng.normal(size=(1, 3, 16, 16))
	with no_grad():
		g = tiled_nonlocal(Tensor(feat), params, 8).data
		for top in (0, 8):
			for left in (0, 8):
				block = feat[:, :, top : top + 8, left : left + 8]
				expected = nonlocal_features(Tensor(block), params).data
				assert np.allclose(g[:, :, top : top + 8, left : left + 8], expected, atol=1e-6)


def test_constant_input_constant_regardless_of_tiling():
	params = branch([2, 4])
	feat = Tensor(np.full((1, 3, 16, 12), -0.4))
	with no_grad():
		g = tiled_nonlocal(feat, params, 8).data
	assert np.allclose(g, g[:, :, :1, :1], atol=1e-12)


def test_large_maps_are_tiled_automatically(rng, monkeypatch):
	monkeypatch.setattr(settings, "NONLOCAL_MAX_PIXELS", 64)
	monkeypatch.setattr(settings, "NONLOCAL_TILE", 8)
	params = branch([2])
	feat = Tensor(rng.normal(size=(1, 3, 12, 10)))
	with no_grad():
		g = nonlocal_or_tiled(feat, params).data
	assert g.shape == (1, 4, 12, 10)


def test_tile_smaller_than_scale_raises(rng):
	params = branch([2, 4])
	with pytest.raises(ShapeError):
		tiled_nonlocal(Tensor(rng.normal(size=(1, 3, 16, 16))), params, 3)


def test_scale_order_does_not_matter(rng):
	feat = Tensor(rng.normal(size=(1, 3, 8, 8)))
	with no_grad():
		a = nonlocal_features(feat, branch([2, 4], seed=3)).data
		b = nonlocal_features(feat, branch([4, 2], seed=3)).data
	assert np.allclose(a, b, atol=1e-12)
