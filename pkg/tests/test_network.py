import math

import numpy as np
import pytest

from src.core.errors import ConfigError, ShapeError
from src.engine import functional as F
from src.engine.tensor import Tensor, no_grad
from src.models.network import SuperResolutionModel
from src.schemas.evaluation import AblationRow
from src.schemas.model import ModelConfig, Variant
from src.services.ablation_service import ablation_plan, nonlocal_wiring_check, parse_variants, report_ordering, variant_config
from src.services.rendering_service import chain_render, chain_sizes, output_size, super_resolve


def variant_model(tiny_config, variant: Variant, seed: int = 0) -> SuperResolutionModel:
	return SuperResolutionModel(variant_config(tiny_config, variant, 2).model, seed=seed)


def test_output_size_rules():
	assert output_size(40, 60, scale=(2.7, 2.7)) == (108, 162)
	assert output_size(3, 3, scale=(1.5, 1.5)) == (5, 5)
	assert output_size(40, 60, scale=(2.0, 2.0), size=(7, 9)) == (7, 9)
	with pytest.raises(ShapeError):
		output_size(4, 4, scale=(0.5, 0.5))
	with pytest.raises(ShapeError):
		output_size(4, 4)


def test_random_real_scales_give_exact_finite_outputs(tiny_config, rng):
	model = SuperResolutionModel(tiny_config.model)
	lr = rng.random((3, 5, 4)).astype(np.float32)
	for s_h, s_w in rng.uniform(1.0, 30.0, size=(50, 2)):
		h_out, w_out = output_size(5, 4, scale=(s_h, s_w))
		assert (h_out, w_out) == (math.floor(s_h * 5 + 0.5), math.floor(s_w * 4 + 0.5))
		out = super_resolve(model, lr, h_out, w_out)
		assert out.shape == (3, h_out, w_out)
		assert np.all(np.isfinite(out))


def test_identity_size_returns_input(tiny_config, rng):
	model = SuperResolutionModel(tiny_config.model)
	lr = rng.random((3, 6, 6)).astype(np.float32)
	assert np.array_equal(super_resolve(model, lr, 6, 6), lr)


def test_single_step_chain_is_plain_render(tiny_config, rng):
	model = SuperResolutionModel(tiny_config.model)
	lr = rng.random((3, 6, 5)).astype(np.float32)
	assert np.array_equal(chain_render(lr, [2.5], model), super_resolve(model, lr, 15, 13))


def test_chain_shapes_match_one_step(tiny_config, rng):
	model = SuperResolutionModel(tiny_config.model)
	lr = rng.random((3, 5, 7)).astype(np.float32)
	one = chain_render(lr, [12.0], model)
	two = chain_render(lr, [2.0, 6.0], model)
	assert one.shape == two.shape == (3, 60, 84)
	assert chain_sizes(10, 10, [1.1, 1.1], (12, 12)) == [(11, 11), (12, 12)]
	with pytest.raises(ShapeError):
		chain_sizes(10, 10, [1.0, 2.0], (20, 20))


def test_variants_share_encoder_weights(tiny_config):
	full = variant_model(tiny_config, Variant.full)
	liif = variant_model(tiny_config, Variant.liif)
	plain = variant_model(tiny_config, Variant.no_nonlocal)
	for name, value in full.encoder.state_dict().items():
		assert np.array_equal(value, liif.encoder.state_dict()[name])
	assert full.nonlocal_branch is not None and plain.nonlocal_branch is None
	assert liif.head_parameters() < full.head_parameters()
	assert plain.num_parameters() == full.num_parameters() - full.nonlocal_branch.num_parameters()


def test_zeroed_nonlocal_output_matches_no_nonlocal(tiny_config, rng):
	assert nonlocal_wiring_check(tiny_config, rng.random((3, 9, 8)).astype(np.float32), 14, 13)


def test_features_by_variant(tiny_config, rng):
	lr = Tensor(rng.random((2, 3, 6, 6)))
	with no_grad():
		_, g = variant_model(tiny_config, Variant.no_nonlocal).features(lr)
		assert np.array_equal(g.data, np.zeros((2, 4, 6, 6)))
		_, g = variant_model(tiny_config, Variant.liif).features(lr)
		assert g is None
	with pytest.raises(ShapeError):
		variant_model(tiny_config, Variant.full).features(Tensor(np.zeros((1, 1, 6, 6))))


def test_query_path_shapes(tiny_config, rng):
	model = SuperResolutionModel(tiny_config.model)
	out = model.query(Tensor(rng.random((2, 3, 8, 8))), rng.uniform(-1, 1, size=(2, 5, 2)), np.full((2, 2), 1.5))
	assert out.shape == (2, 5, 3)
	assert out.requires_grad


def test_variant_parsing_and_liif_local_size(tiny_config):
	assert parse_variants(["full", "liif"]) == [Variant.full, Variant.liif]
	with pytest.raises(ConfigError):
		parse_variants(["full", "bogus"])
	with pytest.raises(ValueError):
		ModelConfig(variant=Variant.liif, head=tiny_config.model.head.model_copy(update={"local_size": 3}))
	assert variant_config(tiny_config, Variant.full, 3).model.head.local_size == 3


def test_variant_config_validates_local_size(tiny_config):
	for size in (0, 4, 7):
		with pytest.raises(ConfigError, match="local size"):
			variant_config(tiny_config, Variant.full, size)
	with pytest.raises(ConfigError):
		variant_config(tiny_config, Variant.liif, 3)
	with pytest.raises(ConfigError):
		ablation_plan(tiny_config, [Variant.full, Variant.no_nonlocal], [2, 7])
	runs = ablation_plan(tiny_config, [Variant.full, Variant.liif], [1, 2])
	assert [(v, s) for v, s, _ in runs] == [(Variant.full, 1), (Variant.full, 2), (Variant.liif, 2)]
	assert runs[0][2].model.head.local_size == 1


def test_one_backward_reaches_every_encoder_and_nonlocal_parameter(tiny_config, rng):
	model = SuperResolutionModel(tiny_config.model, seed=0).astype(np.float64)
	coords = rng.uniform(-1, 1, size=(1, 64, 2))
	pred = model.query(Tensor(rng.random((1, 3, 12, 12))), coords, np.array([[2.0, 2.0]]))
	loss = F.l1_loss(pred, Tensor(rng.random((1, 64, 3))))
	model.zero_grad()
	loss.backward()
	for module in (model.encoder, model.nonlocal_branch):
		for name, p in module.named_parameters():
			assert p.grad is not None, name
			assert np.any(p.grad != 0), name


def test_ordering_report_never_raises():
	row = lambda v, p: AblationRow(variant=v, local_size=2, parameters=1, final_loss=0.1, psnr_x2=p, psnr_x3=p, psnr_x4=p)
	assert report_ordering([row("full", 30.0), row("mlp_weights", 29.0), row("liif", 28.0)])
	assert not report_ordering([row("full", 27.0), row("liif", 28.0)])
