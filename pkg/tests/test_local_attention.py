import numpy as np
import pytest

from src.core.config import settings
from src.core.errors import ShapeError
from src.engine.random import make_rng
from src.engine.tensor import Tensor, no_grad
from src.models import local_attention
from src.models.layers import MLP
from src.models.local_attention import (
	CiaoSRHead,
	LIIFHead,
	NeighborhoodPlan,
	QueryBatch,
	grid_queries,
	plan_neighborhood,
	render,
	render_liif_baseline,
	render_mlp_weight_ablation,
)
from src.schemas.model import HeadConfig
from src.services.coordinates import area_weights, local_region, make_coord_grid, nearest_index, rel_offset

C, CG = 3, 2


def head_config(**overrides) -> HeadConfig:
	base = dict(query_hidden=[12, 12], kv_hidden=[12], value_dim=10, weight_hidden=[8], baseline_hidden=[12])
	base.update(overrides)
	return HeadConfig(**base)


def mlp_np(mlp: MLP, x: np.ndarray) -> np.ndarray:
	for i, layer in enumerate(mlp.layers):
		x = x @ layer.weight.data + layer.bias.data
		if i < len(mlp.layers) - 1:
			x = np.maximum(x, 0.0)
	return x


def unfold_np(feat: np.ndarray) -> np.ndarray:
	"""C×H×W → (9C)×H×W, channel-major with edge replication."""
	c, h, w = feat.shape
	padded = np.pad(feat, ((0, 0), (1, 1), (1, 1)), mode="edge")
	out = np.empty((c, 3, 3, h, w))
	for di in range(3):
		for dj in range(3):
			out[:, di, dj] = padded[:, di : di + h, dj : dj + w]
	return out.reshape(9 * c, h, w)


def loop_render(feat, g, h_out, w_out, head: CiaoSRHead) -> np.ndarray:
	"""One query at a time, straight from the definitions."""
	_, _, h, w = feat.shape
	grid = make_coord_grid(h, w)
	out_grid = make_coord_grid(h_out, w_out)
	unf = unfold_np(feat[0])
	s = np.array([h_out / h, w_out / w])
	image = np.zeros((3, h_out, w_out))
	for y in range(h_out):
		for x in range(w_out):
			q = out_grid.coords[y, x]
			ni, nj = nearest_index(q, grid)
			region = local_region(q, grid, head.cfg.local_size)
			logits, values = [], []
			for i, j, kc in zip(region.rows, region.cols, region.coords):
				r = rel_offset(q, kc, grid)
				f = unf[:, i, j]
				if head.ensemble == "attention":
					key = mlp_np(head.phi_k, np.concatenate([f, r, s]))
					logits.append(unf[:, ni, nj] @ key)
				else:
					logits.append(mlp_np(head.weight_net, np.concatenate([r, s]))[0])
				values.append(mlp_np(head.phi_v, np.concatenate([f, g[0, :, i, j], r, s])))
			logits = np.array(logits)
			wts = np.exp(logits - logits.max())
			wts /= wts.sum()
			image[:, y, x] = mlp_np(head.phi_q, wts @ np.array(values))
	return image


def loop_liif(feat, h_out, w_out, head: LIIFHead) -> np.ndarray:
	_, _, h, w = feat.shape
	grid = make_coord_grid(h, w)
	out_grid = make_coord_grid(h_out, w_out)
	unf = unfold_np(feat[0])
	s = np.array([h_out / h, w_out / w])
	image = np.zeros((3, h_out, w_out))
	for y in range(h_out):
		for x in range(w_out):
			q = out_grid.coords[y, x]
			region = local_region(q, grid, 2)
			weights = area_weights(q, region)
			preds = [
				mlp_np(head.f, np.concatenate([unf[:, i, j], rel_offset(q, kc, grid), s]))
				for i, j, kc in zip(region.rows, region.cols, region.coords)
			]
			image[:, y, x] = weights @ np.array(preds)
	return image


@pytest.fixture
def maps(rng):
	feat = rng.normal(size=(1, C, 6, 6))
	g = rng.normal(size=(1, CG, 6, 6))
	return feat, g


def test_render_matches_loop_oracle(maps):
	feat, g = maps
	head = CiaoSRHead(C, CG, head_config(), make_rng(1)).astype(np.float64)
	with no_grad():
		out = render(Tensor(feat), Tensor(g), 16, 16, head).data
	assert out.shape == (1, 3, 16, 16)
	assert np.allclose(out[0], loop_render(feat, g, 16, 16, head), atol=1e-5)


def test_render_local3_matches_loop_oracle(maps):
	feat, g = maps
	head = CiaoSRHead(C, CG, head_config(local_size=3), make_rng(2)).astype(np.float64)
	with no_grad():
		out = render(Tensor(feat), Tensor(g), 11, 9, head).data
	assert np.allclose(out[0], loop_render(feat, g, 11, 9, head), atol=1e-5)


def test_mlp_weight_ablation_matches_loop_oracle(maps):
	feat, g = maps
	head = CiaoSRHead(C, CG, head_config(), make_rng(3), ensemble="mlp").astype(np.float64)
	with no_grad():
		out = render_mlp_weight_ablation(Tensor(feat), 16, 16, head, Tensor(g)).data
	assert np.allclose(out[0], loop_render(feat, g, 16, 16, head), atol=1e-5)


def test_liif_baseline_matches_direct_sum(maps):
	feat, _ = maps
	head = LIIFHead(C, head_config(), make_rng(4)).astype(np.float64)
	with no_grad():
		out = render_liif_baseline(Tensor(feat), 16, 16, head).data
	assert np.allclose(out[0], loop_liif(feat, 16, 16, head), atol=1e-6)


def test_liif_constant_decoder_gives_constant_image(maps):
	feat, _ = maps
	head = LIIFHead(C, head_config(), make_rng(4)).astype(np.float64)
	last = head.f.layers[-1]
	last.weight.data[...] = 0.0
	last.bias.data[...] = [0.2, 0.4, 0.6]
	with no_grad():
		out = render_liif_baseline(Tensor(feat), 13, 7, head).data
	assert np.allclose(out[0].reshape(3, -1), np.array([[0.2], [0.4], [0.6]]), atol=1e-12)


def test_mlp_weights_with_zero_final_layer_are_uniform(maps):
	feat, g = maps
	head = CiaoSRHead(C, CG, head_config(), make_rng(5), ensemble="mlp").astype(np.float64)
	head.weight_net.layers[-1].weight.data[...] = 0.0
	head.weight_net.layers[-1].bias.data[...] = 0.0
	coords, scale = grid_queries(1, 6, 6, 12, 12)
	with no_grad():
		_, weights = head.attend(Tensor(feat), Tensor(g), QueryBatch(coords[None], scale))
	assert np.allclose(weights.data, 0.25)


def test_ensemble_weights_sum_to_one(rng, maps):
	feat, g = maps
	queries = QueryBatch(rng.uniform(-1, 1, size=(1, 10000, 2)), np.array([[3.3, 1.7]]))
	heads = [
		CiaoSRHead(C, CG, head_config(), make_rng(6)),
		CiaoSRHead(C, CG, head_config(local_size=3), make_rng(7)),
		CiaoSRHead(C, CG, head_config(), make_rng(8), ensemble="mlp"),
		LIIFHead(C, head_config(), make_rng(9)),
	]
	for head in heads:
		head.astype(np.float64)
		with no_grad():
			_, weights = head.attend(Tensor(feat), Tensor(g), queries)
		assert np.allclose(weights.data.sum(axis=-1), 1.0, atol=1e-6)
		assert np.all(weights.data >= 0)


def test_identity_scale_keeps_shape_and_own_cell(maps):
	feat, g = maps
	head = CiaoSRHead(C, CG, head_config(), make_rng(1))
	with no_grad():
		out = render(Tensor(feat), Tensor(g), 6, 6, head)
	assert out.shape == (1, 3, 6, 6)
	grid = make_coord_grid(6, 6)
	region = local_region(grid.coords, grid, 2)
	own = np.arange(6)
	assert np.all(region.rows[..., 0] == own[:, None])
	assert np.all(region.cols[..., 0] == own[None, :])


def test_chunking_and_threads_do_not_change_output(maps, monkeypatch):
	feat, g = maps
	head = CiaoSRHead(C, CG, head_config(), make_rng(1))
	with no_grad():
		whole = render(Tensor(feat), Tensor(g), 15, 14, head).data
		chunked = render(Tensor(feat), Tensor(g), 15, 14, head, chunk_size=17).data
		monkeypatch.setattr(settings, "THREADS", 3)
		threaded = render(Tensor(feat), Tensor(g), 15, 14, head, chunk_size=17).data
	assert np.allclose(whole, chunked, atol=1e-6)
	assert np.array_equal(chunked, threaded)


def test_missing_g_counts_as_zeros(maps):
	feat, _ = maps
	head = CiaoSRHead(C, CG, head_config(), make_rng(1))
	with no_grad():
		a = render(Tensor(feat), None, 9, 9, head).data
		b = render(Tensor(feat), Tensor(np.zeros((1, CG, 6, 6))), 9, 9, head).data
	assert np.array_equal(a, b)


def test_shape_errors(maps):
	feat, g = maps
	head = CiaoSRHead(C, CG, head_config(), make_rng(1))
	with pytest.raises(ShapeError):
		head(Tensor(feat[:, :2]), Tensor(g), QueryBatch(np.zeros((1, 1, 2)), np.ones((1, 2))))
	with pytest.raises(ShapeError):
		QueryBatch(np.zeros((1, 0, 2)), np.ones((1, 2)))
	with pytest.raises(ShapeError):
		render_mlp_weight_ablation(Tensor(feat), 4, 4, head, Tensor(g))
	with pytest.raises(ShapeError):
		grid_queries(1, 6, 6, 0, 4)


def zero_offset_and_scale_rows(mlp: MLP) -> None:
	"""Make an MLP whose input ends in [r, s] ignore those four entries."""
	mlp.layers[0].weight.data[-4:] = 0.0


def test_constant_maps_give_uniform_weights_once_keys_ignore_offsets(rng):
	feat = np.full((1, C, 6, 6), 0.7)
	g = np.full((1, CG, 6, 6), -0.3)
	coords, scale = grid_queries(1, 6, 6, 12, 12)
	queries = QueryBatch(coords[None], scale)
	head = CiaoSRHead(C, CG, head_config(), make_rng(11)).astype(np.float64)

	# Keys see r_k and s, so even a constant map is weighted unevenly.
	with no_grad():
		_, weights = head.attend(Tensor(feat), Tensor(g), queries)
	assert weights.data.std() > 1e-3

	zero_offset_and_scale_rows(head.phi_k)
	with no_grad():
		_, weights = head.attend(Tensor(feat), Tensor(g), queries)
	assert np.allclose(weights.data, 0.25, atol=1e-12)

	zero_offset_and_scale_rows(head.phi_v)
	with no_grad():
		out = render(Tensor(feat), Tensor(g), 12, 12, head).data[0].reshape(3, -1)
	assert np.allclose(out, out[:, :1], atol=1e-12)


def test_shifting_every_logit_leaves_the_render_unchanged(maps):
	feat, g = maps
	head = CiaoSRHead(C, CG, head_config(), make_rng(12)).astype(np.float64)
	with no_grad():
		before = render(Tensor(feat), Tensor(g), 10, 10, head).data
		# A key bias b moves every logit of a query by the same q·b.
		head.phi_k.layers[-1].bias.data += 5.0
		after = render(Tensor(feat), Tensor(g), 10, 10, head).data
	assert np.allclose(before, after, atol=1e-9)


@pytest.mark.parametrize("local_size", [2, 3])
def test_neighbour_order_does_not_matter(maps, monkeypatch, local_size):
	feat, g = maps
	head = CiaoSRHead(C, CG, head_config(local_size=local_size), make_rng(13)).astype(np.float64)
	with no_grad():
		expected = render(Tensor(feat), Tensor(g), 13, 11, head).data

	order = make_rng(14).permutation(local_size * local_size)

	def shuffled(*args, **kwargs) -> NeighborhoodPlan:
		plan = plan_neighborhood(*args, **kwargs)
		return NeighborhoodPlan(
			nearest=plan.nearest,
			neighbors=plan.neighbors[..., order],
			rel=plan.rel[..., order, :],
		)

	monkeypatch.setattr(local_attention, "plan_neighborhood", shuffled)
	with no_grad():
		permuted = render(Tensor(feat), Tensor(g), 13, 11, head).data
	assert np.allclose(permuted, expected, atol=1e-12)
