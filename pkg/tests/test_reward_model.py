from __future__ import annotations

import numpy as np
import pytest
import torch

from fusionrl.reward import (
    EncoderConfig,
    RewardModel,
    RewardTrainConfig,
    TriEncoding,
    cosine_lr,
    reward_loss,
    train_reward,
)

from util import finite_difference_gradients, max_relative_error

TOY = EncoderConfig(image_size=32, patch_size=4, embed_dim=32, depth=2, heads=4, frozen=True)


def toy_model(cfg: EncoderConfig = TOY, seed: int = 0) -> RewardModel:
    torch.manual_seed(seed)
    return RewardModel(cfg)


def rand_batch(cfg: EncoderConfig, b: int = 1, seed: int = 1):
    g = torch.Generator().manual_seed(seed)
    shape = (b, 3, cfg.image_size, cfg.image_size)
    return (torch.rand(shape, generator=g) for _ in range(3))


# ---- encoder ---------------------------------------------------------------


def test_encoder_config_validation():
    with pytest.raises(ValueError):
        EncoderConfig(image_size=30, patch_size=4)
    with pytest.raises(ValueError):
        EncoderConfig(embed_dim=30, heads=4)


def test_encode_shapes():
    model = toy_model()
    vis, ir, fus = rand_batch(TOY)
    enc = model.encode_triplet(vis, ir, fus)
    assert enc.f_ir.shape == (1, 64, 32)  # (32/4)^2 = 64 patch tokens
    assert enc.f_vi.shape == enc.f_fused.shape == enc.f_ir.shape


def test_weight_sharing_identical_inputs():
    model = toy_model()
    vis, _, fus = rand_batch(TOY)
    enc = model.encode_triplet(vis, vis.clone(), fus)
    assert torch.equal(enc.f_ir, enc.f_vi)


def test_patch_permutation_equivariance():
    cfg = EncoderConfig(image_size=16, patch_size=4, embed_dim=16, depth=2, heads=2)
    model = toy_model(cfg, seed=3)
    with torch.no_grad():
        model.backbone.pos_embedding.zero_()
    image = torch.rand(1, 3, 16, 16, generator=torch.Generator().manual_seed(4))
    swapped = image.clone()
    # swap patch (0,0) with patch (1,2): tokens 0 and 6 on the 4x4 grid
    swapped[:, :, 0:4, 0:4] = image[:, :, 4:8, 8:12]
    swapped[:, :, 4:8, 8:12] = image[:, :, 0:4, 0:4]
    base = model.encode(image)[0]
    perm = model.encode(swapped)[0]
    assert torch.allclose(perm[0], base[6], atol=1e-6)
    assert torch.allclose(perm[6], base[0], atol=1e-6)
    untouched = [t for t in range(16) if t not in (0, 6)]
    assert torch.allclose(perm[untouched], base[untouched], atol=1e-6)


def test_dimension_mismatch_rejected():
    model = toy_model()
    with pytest.raises(ValueError):
        model.encode(torch.rand(1, 3, 16, 16))


# ---- feature fusion ----------------------------------------------------------


def test_fuse_features_shapes():
    model = toy_model()
    vis, ir, fus = rand_batch(TOY)
    fmap = model.fuse_features(model.encode_triplet(vis, ir, fus))
    assert fmap.shape == (1, 32, 8, 8)


def test_zero_encoding_zero_projection():
    model = toy_model()
    with torch.no_grad():
        model.projection.bias.zero_()
    zero = torch.zeros(1, 64, 32)
    out = model.projection(torch.cat([zero, zero, zero], dim=-1))
    assert torch.equal(out, torch.zeros_like(out))


def test_reshape_index_identity():
    model = toy_model()
    vis, ir, fus = rand_batch(TOY, seed=7)
    enc = model.encode_triplet(vis, ir, fus)
    tokens = model.fusion(model.projection(torch.cat([enc.f_ir, enc.f_vi, enc.f_fused], dim=-1)))
    fmap = model.fuse_features(enc)
    side = TOY.grid_size
    for d in (0, 5, 31):
        for r in (0, 3, 7):
            for c in (0, 4, 7):
                assert fmap[0, d, r, c] == tokens[0, r * side + c, d]


def test_tri_encoding_shape_validation():
    with pytest.raises(ValueError):
        TriEncoding(torch.zeros(1, 4, 8), torch.zeros(1, 4, 8), torch.zeros(1, 5, 8))


# ---- heads -------------------------------------------------------------------


def test_heatmap_restores_input_resolution():
    model = toy_model()
    fmap = torch.rand(2, 32, 8, 8)
    heat = model.predict_heatmap(fmap)
    assert heat.shape == (2, 1, 32, 32)  # 8 * 2^2 with patch 4


def test_outputs_strictly_inside_unit_interval():
    model = toy_model()
    vis, ir, fus = rand_batch(TOY, b=2, seed=9)
    scores, heat = model(vis, ir, fus)
    for t in (scores, heat):
        assert (t > 0).all() and (t < 1).all()


def test_zeroed_final_layers_give_half():
    model = toy_model()
    with torch.no_grad():
        model.heatmap_head.out.weight.zero_()
        model.heatmap_head.out.bias.zero_()
        model.score_head.mlp[-1].weight.zero_()
        model.score_head.mlp[-1].bias.zero_()
    vis, ir, fus = rand_batch(TOY, seed=2)
    scores, heat = model(vis, ir, fus)
    assert torch.equal(scores, torch.full_like(scores, 0.5))
    assert torch.equal(heat, torch.full_like(heat, 0.5))


def test_different_inputs_different_scores():
    model = toy_model(seed=5)
    vis1, ir1, fus1 = rand_batch(TOY, seed=11)
    vis2, ir2, fus2 = rand_batch(TOY, seed=12)
    s1, _ = model(vis1, ir1, fus1)
    s2, _ = model(vis2, ir2, fus2)
    assert not torch.allclose(s1, s2)


# ---- loss --------------------------------------------------------------------


def cfg_unit() -> RewardTrainConfig:
    return RewardTrainConfig(lambda_score=1.0, lambda_heatmap=1.0)


def test_loss_zero_on_exact_prediction():
    scores = torch.rand(2, 5)
    heat = torch.rand(2, 1, 8, 8)
    total, s, h = reward_loss(scores, heat, scores.clone(), heat.clone(), cfg_unit())
    assert float(total) == float(s) == float(h) == 0.0


def test_loss_single_score_offset():
    target = torch.full((1, 5), 0.5)
    pred = target.clone()
    pred[0, 2] += 0.2
    heat = torch.rand(1, 1, 8, 8)
    total, s, h = reward_loss(pred, heat, target, heat.clone(), cfg_unit())
    assert float(h) == 0.0
    assert float(total) == pytest.approx(0.04, abs=1e-7)


def test_loss_uniform_half_heatmap():
    scores = torch.rand(1, 5)
    pred_heat = torch.full((1, 1, 16, 16), 0.5)
    target_heat = torch.zeros_like(pred_heat)
    total, s, h = reward_loss(scores, pred_heat, scores.clone(), target_heat, cfg_unit())
    assert float(h) == pytest.approx(0.25)
    assert float(total) == pytest.approx(0.25)


def test_loss_shape_mismatch():
    with pytest.raises(ValueError):
        reward_loss(torch.rand(1, 5), torch.rand(1, 1, 8, 8), torch.rand(2, 5), torch.rand(1, 1, 8, 8), cfg_unit())


def test_loss_weights():
    cfg = RewardTrainConfig(lambda_score=2.0, lambda_heatmap=0.5)
    pred_s = torch.zeros(1, 5)
    tgt_s = torch.full((1, 5), 0.1)
    pred_h = torch.zeros(1, 1, 4, 4)
    tgt_h = torch.full((1, 1, 4, 4), 0.2)
    total, s, h = reward_loss(pred_s, pred_h, tgt_s, tgt_h, cfg)
    assert float(s) == pytest.approx(5 * 0.01)
    assert float(h) == pytest.approx(0.04)
    assert float(total) == pytest.approx(2.0 * 0.05 + 0.5 * 0.04)


def test_loss_nonnegative_random():
    g = torch.Generator().manual_seed(0)
    for _ in range(20):
        total, _, _ = reward_loss(
            torch.rand(3, 5, generator=g),
            torch.rand(3, 1, 4, 4, generator=g),
            torch.rand(3, 5, generator=g),
            torch.rand(3, 1, 4, 4, generator=g),
            cfg_unit(),
        )
        assert float(total) >= 0.0


# ---- schedule ----------------------------------------------------------------


def test_cosine_endpoints():
    assert cosine_lr(0, 10, 2e-5, 1e-5) == pytest.approx(2e-5, abs=1e-12)
    assert cosine_lr(9, 10, 2e-5, 1e-5) == pytest.approx(1e-5, abs=1e-12)
    values = [cosine_lr(t, 10, 2e-5, 1e-5) for t in range(10)]
    assert values == sorted(values, reverse=True)


# ---- training ----------------------------------------------------------------


def test_train_reward_smoke(toy_dataset):
    cfg = RewardTrainConfig(epochs=2, batch_size=4, seed=21)
    model, history = train_reward(toy_dataset.manifest, toy_dataset.annotations_dir, cfg, encoder_cfg=TOY)
    assert history[0]["epoch"] == 0 and history[-1]["epoch"] == 2
    assert history[2]["total_loss"] < history[0]["total_loss"]
    assert history[1]["lr"] <= cfg.lr_max
    assert history[-1]["lr"] == pytest.approx(cfg.lr_min, abs=1e-9)


def test_frozen_backbone_exact(toy_dataset):
    cfg = RewardTrainConfig(epochs=2, batch_size=4, seed=22)
    torch.manual_seed(cfg.seed)
    model = RewardModel(TOY)
    before = {k: v.clone() for k, v in model.backbone.state_dict().items()}
    model, _ = train_reward(toy_dataset.manifest, toy_dataset.annotations_dir, cfg, model=model)
    after = model.backbone.state_dict()
    for key, tensor in before.items():
        assert torch.equal(tensor, after[key]), key


def test_missing_annotation_lists_ids(toy_dataset):
    cfg = RewardTrainConfig(epochs=1, batch_size=4)
    partial = dict(list(__import__("fusionrl.reward.training", fromlist=["load_annotations"]).load_annotations(
        toy_dataset.annotations_dir, toy_dataset.manifest).items())[:-2])
    with pytest.raises(ValueError, match="pair07__toyfuse"):
        train_reward(toy_dataset.manifest, partial, cfg, encoder_cfg=TOY)


def test_training_determinism(toy_dataset):
    cfg = RewardTrainConfig(epochs=1, batch_size=4, seed=33)
    m1, h1 = train_reward(toy_dataset.manifest, toy_dataset.annotations_dir, cfg, encoder_cfg=TOY)
    m2, h2 = train_reward(toy_dataset.manifest, toy_dataset.annotations_dir, cfg, encoder_cfg=TOY)
    assert h1 == h2
    for k, v in m1.state_dict().items():
        assert torch.equal(v, m2.state_dict()[k]), k


# ---- gradient check ------------------------------------------------------------

GRADCHECK_CFG = EncoderConfig(image_size=16, patch_size=4, embed_dim=8, depth=1, heads=2, frozen=True)


def test_head_gradient_check_against_finite_differences():
    torch.manual_seed(42)
    model = RewardModel(GRADCHECK_CFG).double()
    g = torch.Generator().manual_seed(43)
    shape = (1, 3, 16, 16)
    vis, ir, fus = (torch.rand(shape, generator=g, dtype=torch.float64) for _ in range(3))
    target_scores = torch.rand(1, 5, generator=g, dtype=torch.float64)
    target_heat = torch.rand(1, 1, 16, 16, generator=g, dtype=torch.float64)
    cfg = RewardTrainConfig(lambda_score=1.0, lambda_heatmap=1.0)

    def loss_fn():
        scores, heat = model(vis, ir, fus)
        total, _, _ = reward_loss(scores, heat, target_scores, target_heat, cfg)
        return total

    params = list(model.head_parameters())
    model.zero_grad()
    loss_fn().backward()
    analytic = [p.grad.clone() for p in params]
    numeric = finite_difference_gradients(loss_fn, params, step=1e-5)
    assert max_relative_error(analytic, numeric, floor=1e-8) < 1e-4
