"""
Finite-difference verification of every backward rule.

Each case builds a scalar loss from float64 leaves. The analytic gradient from
the tape is compared with central differences on up to `MAX_COORDS` sampled
coordinates per leaf, using the norm-wise relative error

    max|a − n| / max(max|a|, max|n|, 1e-8).

End-to-end cases contain ReLU and L1 kinks. A coordinate whose one-sided
differences disagree by enough to move the result past the threshold is
skipped rather than scored.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence

import numpy as np

from src.core.errors import ConfigError
from src.core.logging import get_logger
from src.engine import functional as F
from src.engine.random import make_rng
from src.engine.tensor import Tensor, no_grad
from src.models.layers import Conv2d
from src.models.local_attention import CiaoSRHead, LIIFHead, render, render_liif_baseline, render_mlp_weight_ablation
from src.models.network import SuperResolutionModel
from src.models.nonlocal_attention import NonLocalAttention, nonlocal_features
from src.schemas.evaluation import GradcheckRow
from src.schemas.model import EncoderConfig, HeadConfig, ModelConfig, NonLocalConfig

logger = get_logger(__name__)

OP_THRESHOLD = 1e-4
END_TO_END_THRESHOLD = 1e-3
MAX_COORDS = 32
SUITES = ("tensor", "nonlocal", "head")

LossFn = Callable[[], Tensor]


@dataclass
class GradCase:
    suite: str
    op: str
    loss: LossFn
    leaves: List[Tensor]
    threshold: float = OP_THRESHOLD
    skip_kinks: bool = False


def _leaf(data: np.ndarray) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True)


def _uniform(rng: np.random.Generator, shape, low: float = -1.0, high: float = 1.0) -> Tensor:
    return _leaf(rng.uniform(low, high, size=shape))


def _away_from_zero(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.uniform(0.2, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)


def _projected(fn: Callable[[], Tensor], rng: np.random.Generator, shape) -> LossFn:
    """Scalar loss Σ fn()·R with a fixed random R, so every output element matters."""
    weights = Tensor(rng.uniform(-1.0, 1.0, size=shape), dtype=np.float64)
    return lambda: F.sum(fn() * weights)


def tensor_cases(seed: int = 0) -> List[GradCase]:
    rng = make_rng(seed, 101)
    cases: List[GradCase] = []

    def add(op: str, fn: Callable[..., Tensor], leaves: Sequence[Tensor], out_shape) -> None:
        cases.append(GradCase("tensor", op, _projected(lambda: fn(*leaves), rng, out_shape), list(leaves)))

    a, b = _uniform(rng, (3, 4)), _uniform(rng, (4,))
    add("add", F.add, [a, b], (3, 4))
    a, b = _uniform(rng, (3, 4)), _uniform(rng, (3, 1))
    add("sub", F.sub, [a, b], (3, 4))
    a, b = _uniform(rng, (2, 3, 4)), _uniform(rng, (3, 4))
    add("mul", F.mul, [a, b], (2, 3, 4))
    a, b = _uniform(rng, (3, 4)), _uniform(rng, (3, 4), 0.5, 1.5)
    add("div", F.div, [a, b], (3, 4))
    add("neg", F.neg, [_uniform(rng, (5,))], (5,))
    add("exp", F.exp, [_uniform(rng, (3, 4))], (3, 4))
    add("log", F.log, [_uniform(rng, (3, 4), 0.5, 2.0)], (3, 4))
    add("abs", F.abs, [_leaf(_away_from_zero(rng, (3, 4)))], (3, 4))
    add("relu", F.relu, [_leaf(_away_from_zero(rng, (3, 4)))], (3, 4))
    add("square", F.square, [_uniform(rng, (3, 4))], (3, 4))
    add("sum", lambda x: F.sum(x, axis=1), [_uniform(rng, (2, 3, 4))], (2, 4))
    add("mean", lambda x: F.mean(x, axis=(0, 2)), [_uniform(rng, (2, 3, 4))], (3,))
    add("reshape", lambda x: F.reshape(x, (4, 6)), [_uniform(rng, (2, 3, 4))], (4, 6))
    add("transpose", lambda x: F.transpose(x, (2, 0, 1)), [_uniform(rng, (2, 3, 4))], (4, 2, 3))
    add("getitem", lambda x: x[np.array([0, 2, 2]), 1:], [_uniform(rng, (3, 4))], (3, 3))
    idx = np.array([[0, 3], [3, 1], [2, 2]])
    add("take", lambda x: F.take(x, idx, axis=1), [_uniform(rng, (2, 4, 3))], (2, 3, 2, 3))
    a, b = _uniform(rng, (2, 3)), _uniform(rng, (2, 2))
    add("concat", lambda x, y: F.concat([x, y], axis=1), [a, b], (2, 5))
    a, b = _uniform(rng, (3, 4)), _uniform(rng, (4, 2))
    add("matmul", F.matmul, [a, b], (3, 2))
    a, b = _uniform(rng, (2, 3, 4)), _uniform(rng, (4, 5))
    add("matmul_batched", F.matmul, [a, b], (2, 3, 5))
    a, b = _uniform(rng, (2, 3, 4)), _uniform(rng, (2, 4, 2))
    add("matmul_bmm", F.matmul, [a, b], (2, 3, 2))
    x, w, bias = _uniform(rng, (2, 2, 5, 4)), _uniform(rng, (3, 2, 3, 3)), _uniform(rng, (3,))
    add("conv2d", lambda x, w, b: F.conv2d(x, w, b, padding=1), [x, w, bias], (2, 3, 5, 4))
    x, w, bias = _uniform(rng, (1, 3, 4, 4)), _uniform(rng, (2, 3, 1, 1)), _uniform(rng, (2,))
    add("conv2d_1x1", F.conv2d, [x, w, bias], (1, 2, 4, 4))
    add("softmax", lambda x: F.softmax(x, axis=-1), [_uniform(rng, (3, 5), -2.0, 2.0)], (3, 5))
    add("unfold", lambda x: F.unfold(x, 3), [_uniform(rng, (1, 2, 4, 5))], (1, 18, 4, 5))
    add("avg_downsample", lambda x: F.avg_downsample(x, 2), [_uniform(rng, (1, 2, 5, 6))], (1, 2, 2, 3))

    pred = _uniform(rng, (4, 3))
    target = Tensor(pred.data - _away_from_zero(rng, (4, 3)))
    cases.append(GradCase("tensor", "l1_loss", lambda: F.l1_loss(pred, target), [pred]))
    return cases


def nonlocal_cases(seed: int = 0) -> List[GradCase]:
    rng = make_rng(seed, 102)
    params = NonLocalAttention(3, NonLocalConfig(channels=4, scale_set=[2, 3]), rng).astype(np.float64)
    feat = _uniform(rng, (1, 3, 6, 6))
    loss = _projected(lambda: nonlocal_features(feat, params), rng, (1, 4, 6, 6))
    scaled = NonLocalAttention(3, NonLocalConfig(channels=4, scale_set=[2], scale_logits=True), rng).astype(np.float64)
    feat2 = _uniform(rng, (2, 3, 4, 5))
    loss2 = _projected(lambda: nonlocal_features(feat2, scaled), rng, (2, 4, 4, 5))
    proj = Conv2d(3, 4, 3, rng).astype(np.float64)
    feat3 = _uniform(rng, (1, 3, 4, 4))
    loss3 = _projected(lambda: proj(feat3), rng, (1, 4, 4, 4))
    return [
        GradCase("nonlocal", "nonlocal_features", loss, [feat, *params.parameters()]),
        GradCase("nonlocal", "nonlocal_features_scaled", loss2, [feat2, *scaled.parameters()]),
        GradCase("nonlocal", "conv_layer", loss3, [feat3, *proj.parameters()]),
    ]


def _small_head_config(**overrides) -> HeadConfig:
    base = dict(
        query_hidden=[8, 8],
        kv_hidden=[8],
        value_dim=8,
        weight_hidden=[8],
        baseline_hidden=[8, 8],
    )
    base.update(overrides)
    return HeadConfig(**base)


def head_cases(seed: int = 0) -> List[GradCase]:
    """End-to-end L1 loss through the renderers on a 4×4 feature map."""
    rng = make_rng(seed, 103)
    c, cg, h_out, w_out = 2, 2, 7, 6
    feat = Tensor(rng.uniform(-1.0, 1.0, size=(1, c, 4, 4)), dtype=np.float64)
    g = Tensor(rng.uniform(-1.0, 1.0, size=(1, cg, 4, 4)), dtype=np.float64)
    target = Tensor(rng.uniform(0.0, 1.0, size=(1, 3, h_out, w_out)), dtype=np.float64)

    head = CiaoSRHead(c, cg, _small_head_config(), rng).astype(np.float64)
    mlp_head = CiaoSRHead(c, cg, _small_head_config(), rng, ensemble="mlp").astype(np.float64)
    liif = LIIFHead(c, _small_head_config(), rng).astype(np.float64)
    wide = CiaoSRHead(c, cg, _small_head_config(local_size=3, scale_logits=True), rng).astype(np.float64)

    model_cfg = ModelConfig(
        encoder=EncoderConfig(n_resblocks=1, n_feats=2),
        head=_small_head_config(),
        nonlocal_attention=NonLocalConfig(channels=2, scale_set=[2]),
    )
    model = SuperResolutionModel(model_cfg, seed=seed).astype(np.float64)
    lr = Tensor(rng.uniform(0.0, 1.0, size=(1, 3, 4, 4)), dtype=np.float64)

    def case(op: str, fn: Callable[[], Tensor], leaves: List[Tensor]) -> GradCase:
        return GradCase(
            "head",
            op,
            lambda: F.l1_loss(fn(), target),
            leaves,
            threshold=END_TO_END_THRESHOLD,
            skip_kinks=True,
        )

    return [
        case("render", lambda: render(feat, g, h_out, w_out, head), head.parameters()),
        case("render_local3", lambda: render(feat, g, h_out, w_out, wide), wide.parameters()),
        case(
            "render_mlp_weights",
            lambda: render_mlp_weight_ablation(feat, h_out, w_out, mlp_head, g),
            mlp_head.parameters(),
        ),
        case("render_liif_baseline", lambda: render_liif_baseline(feat, h_out, w_out, liif), liif.parameters()),
        case("network", lambda: model(lr, h_out, w_out), model.parameters()),
    ]


SUITE_BUILDERS: Dict[str, Callable[[int], List[GradCase]]] = {
    "tensor": tensor_cases,
    "nonlocal": nonlocal_cases,
    "head": head_cases,
}


def _evaluate(loss: LossFn) -> float:
    with no_grad():
        return loss().item()


def check_case(case: GradCase, eps: float, seed: int = 0) -> float:
    """Max norm-wise relative error of the analytic gradient on sampled coordinates."""
    for leaf in case.leaves:
        leaf.grad = None
    case.loss().backward()
    analytic_all = [np.zeros_like(leaf.data) if leaf.grad is None else leaf.grad.copy() for leaf in case.leaves]
    scale = max((float(np.max(np.abs(a))) for a in analytic_all if a.size), default=0.0)

    rng = make_rng(seed, 199)
    analytic: List[float] = []
    numeric: List[float] = []
    skipped = 0
    base = _evaluate(case.loss) if case.skip_kinks else 0.0
    for leaf, grad in zip(case.leaves, analytic_all):
        flat = leaf.data.reshape(-1)
        picks = rng.choice(flat.size, size=min(flat.size, MAX_COORDS), replace=False)
        for i in picks:
            original = flat[i]
            flat[i] = original + eps
            plus = _evaluate(case.loss)
            flat[i] = original - eps
            minus = _evaluate(case.loss)
            flat[i] = original
            if case.skip_kinks:
                right = (plus - base) / eps
                left = (base - minus) / eps
                if abs(right - left) > 0.5 * case.threshold * max(scale, 1e-8):
                    skipped += 1
                    continue
            numeric.append((plus - minus) / (2.0 * eps))
            analytic.append(float(grad.reshape(-1)[i]))

    if skipped:
        logger.debug("Skipped kink coordinates", suite=case.suite, op=case.op, skipped=skipped)
    if not analytic:
        return 0.0
    a = np.asarray(analytic)
    n = np.asarray(numeric)
    denom = max(float(np.max(np.abs(a))), float(np.max(np.abs(n))), 1e-8)
    return float(np.max(np.abs(a - n)) / denom)


def run_gradcheck(module: str = "all", eps_values: Sequence[float] = (1e-3,), seed: int = 0) -> List[GradcheckRow]:
    if module == "all":
        suites = list(SUITES)
    elif module in SUITE_BUILDERS:
        suites = [module]
    else:
        raise ConfigError(f"unknown gradcheck module '{module}' (choose all, {', '.join(SUITES)})")

    rows: List[GradcheckRow] = []
    for eps in eps_values:
        for suite in suites:
            for case in SUITE_BUILDERS[suite](seed):
                err = check_case(case, eps, seed)
                passed = bool(np.isfinite(err) and err < case.threshold)
                rows.append(
                    GradcheckRow(
                        suite=suite,
                        op=case.op,
                        eps=eps,
                        max_rel_error=err,
                        threshold=case.threshold,
                        passed=passed,
                    )
                )
                log = logger.info if passed else logger.warning
                log("Gradient check", suite=suite, op=case.op, eps=eps, max_rel_error=f"{err:.3e}", passed=passed)
    return rows
