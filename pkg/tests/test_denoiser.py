"""Denoiser tests: attention algebra, batch fusion, cost model, sampling."""

import numpy as np
import pytest
import torch

from stickmotion import diffusion as D
from stickmotion.corpus import FeatureStats, MOTION_DIM, Vocabulary
from stickmotion.denoiser import (ConditionBatch, ConditionCombination,
                                  ConditionEmbedder, ConditionFusionDenoiser,
                                  ConditionRow, DenoiserConfig, NUM_SLOTS,
                                  SelfAttentionDenoiser, UnsortedBatchError,
                                  baseline_forward_macs, fusion_forward_macs,
                                  sort_rows)
from stickmotion.encoders import StickmanEncoder, TextEncoder
from stickmotion.layers import EfficientAttention
from stickmotion.sga import NUM_STROKES, POINTS_PER_STROKE

C = ConditionCombination


def _small_cfg():
    return DenoiserConfig(dim=32, heads=4, mcm_blocks=2, decoder_depth=1,
                          latent_depth=1, max_len=64)


def _towers(dim=32):
    torch.manual_seed(0)
    vocab = Vocabulary()
    text = TextEncoder(len(vocab), dim=dim, heads=4, depth=1)
    stick = StickmanEncoder(dim=dim, heads=4, depth=1)
    return vocab, text, stick


def _strokes(seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.1, 0.9, size=(NUM_STROKES, POINTS_PER_STROKE, 2))


def _rows(vocab, shuffled_seed=None):
    enc = vocab.encode
    rows = [
        ConditionRow(C.TEXT_ONLY, tokens=enc("a person walks forward")),
        ConditionRow(C.TEXT_ONLY, tokens=enc("someone waves hello with the left arm")),
        ConditionRow(C.TEXT_AND_STICK, tokens=enc("a person squats down"),
                     stickmen={0: _strokes(1), 2: _strokes(2)}),
        ConditionRow(C.TEXT_AND_STICK, tokens=enc("a person jumps high straight up"),
                     stickmen={1: _strokes(3)}),
        ConditionRow(C.STICK_ONLY, stickmen={0: _strokes(4)}),
        ConditionRow(C.NONE),
    ]
    if shuffled_seed is not None:
        order = np.random.default_rng(shuffled_seed).permutation(len(rows))
        rows = [rows[i] for i in order]
    return rows


# ---------------------------------------------------------------------------
# efficient attention algebra


def test_implied_weights_rows_sum_to_one():
    torch.manual_seed(1)
    attn = EfficientAttention(32, 4)
    q = torch.randn(2, 7, 32)
    k = torch.randn(2, 5, 32)
    mask = torch.tensor([[1, 1, 1, 0, 0], [1, 1, 1, 1, 1]], dtype=torch.bool)
    w = attn.implied_weights(q, k, key_mask=mask)
    assert w.shape == (2, 4, 7, 5)
    assert torch.allclose(w.sum(dim=-1), torch.ones(2, 4, 7), atol=1e-6)
    assert w.min() >= 0.0


def test_masked_keys_get_zero_weight():
    torch.manual_seed(2)
    attn = EfficientAttention(32, 4)
    q = torch.randn(1, 6, 32)
    k = torch.randn(1, 5, 32)
    mask = torch.tensor([[1, 1, 0, 1, 0]], dtype=torch.bool)
    w = attn.implied_weights(q, k, key_mask=mask)
    assert w[..., 2].abs().max() == 0.0
    assert w[..., 4].abs().max() == 0.0


def test_linear_path_matches_materialized_weights():
    # (softmax_q Q)(softmax_k K)^T V computed factored vs materialized
    torch.manual_seed(3)
    attn = EfficientAttention(32, 4)
    q = torch.randn(2, 9, 32)
    kv = torch.randn(2, 6, 32)
    mask = torch.ones(2, 6, dtype=torch.bool)
    mask[0, 4:] = False
    out = attn(q, kv, kv, key_mask=mask)
    w = attn.implied_weights(q, kv, key_mask=mask)
    v = attn._split(attn.v_proj(kv))
    direct = torch.einsum("bhql,bhld->bhqd", w, v)
    direct = direct.transpose(1, 2).reshape(2, 9, 32)
    assert torch.allclose(out, attn.out_proj(direct), atol=1e-6)


def test_masked_output_independent_of_padded_values():
    torch.manual_seed(4)
    attn = EfficientAttention(32, 4)
    q = torch.randn(1, 5, 32)
    k = torch.randn(1, 6, 32)
    mask = torch.tensor([[1, 1, 1, 1, 0, 0]], dtype=torch.bool)
    out1 = attn(q, k, k, key_mask=mask)
    k2 = k.clone()
    k2[0, 4:] = 999.0
    out2 = attn(q, k2, k2, key_mask=mask)
    assert torch.allclose(out1, out2, atol=1e-5)


# ---------------------------------------------------------------------------
# condition rows and batching


def test_condition_row_validation():
    with pytest.raises(ValueError):
        ConditionRow(C.TEXT_ONLY)                               # missing text
    with pytest.raises(ValueError):
        ConditionRow(C.NONE, tokens=np.array([1, 2]))           # stray text
    with pytest.raises(ValueError):
        ConditionRow(C.STICK_ONLY)                              # missing stickman
    with pytest.raises(ValueError):
        ConditionRow(C.TEXT_ONLY, tokens=np.array([1]),
                     stickmen={0: _strokes()})                  # stray stickman
    with pytest.raises(ValueError):
        ConditionRow(C.STICK_ONLY, stickmen={5: _strokes()})    # bad slot


def test_sort_rows_inverse_permutation():
    vocab, _, _ = _towers()
    rows = _rows(vocab, shuffled_seed=9)
    sorted_rows, inverse = sort_rows(rows)
    combos = [int(r.combo) for r in sorted_rows]
    assert combos == sorted(combos)
    for i, row in enumerate(rows):
        assert sorted_rows[inverse[i]] is row


def test_embedder_rejects_unsorted_rows():
    vocab, text, stick = _towers()
    embedder = ConditionEmbedder(text, stick)
    rows = [ConditionRow(C.NONE),
            ConditionRow(C.TEXT_ONLY, tokens=vocab.encode("a person walks forward"))]
    with pytest.raises(UnsortedBatchError):
        embedder(rows)


def test_embedder_segments_and_masks():
    vocab, text, stick = _towers()
    embedder = ConditionEmbedder(text, stick)
    rows, _ = sort_rows(_rows(vocab))
    batch = embedder(rows)
    assert batch.segments == (2, 2, 1, 1)
    assert batch.row_slice(C.TEXT_ONLY, C.TEXT_AND_STICK) == slice(0, 4)
    assert batch.row_slice(C.TEXT_AND_STICK, C.STICK_ONLY) == slice(2, 5)
    # text masks only on text rows, slots only where stickmen were given
    assert batch.text_mask[0].any() and not batch.text_mask[4].any()
    assert batch.slot_mask.tolist() == [
        [False] * 3, [False] * 3,
        [True, False, True], [False, True, False],
        [True, False, False], [False] * 3]


def test_condition_towers_stay_frozen():
    vocab, text, stick = _towers()
    ConditionEmbedder(text, stick)
    assert all(not p.requires_grad for p in text.parameters())
    assert all(not p.requires_grad for p in stick.parameters())


# ---------------------------------------------------------------------------
# fused forward equals per-row forward


def test_fused_batch_matches_single_row_passes():
    torch.manual_seed(5)
    cfg = _small_cfg()
    vocab, text, stick = _towers(cfg.dim)
    embedder = ConditionEmbedder(text, stick)
    model = ConditionFusionDenoiser(cfg)
    model.eval()

    L = 24
    for trial in range(4):
        rows = _rows(vocab, shuffled_seed=trial)
        sorted_rows, _ = sort_rows(rows)
        batch = embedder(sorted_rows)
        x = torch.randn(len(rows), L, MOTION_DIM)
        t = torch.full((len(rows),), 17, dtype=torch.long)
        with torch.no_grad():
            fused = model(x, t, batch)
            for i, row in enumerate(sorted_rows):
                single = embedder([row])
                out = model(x[i : i + 1], t[i : i + 1], single)
                assert torch.allclose(fused.eps[i], out.eps[0], atol=1e-5), \
                    f"row {i} ({row.combo.name}) diverges"
                assert torch.allclose(fused.index_logits[i], out.index_logits[0],
                                      atol=1e-5)


def test_unconditioned_row_sees_no_conditions():
    # a NONE row inside a mixed batch must equal a pure unconditioned pass
    torch.manual_seed(6)
    cfg = _small_cfg()
    vocab, text, stick = _towers(cfg.dim)
    embedder = ConditionEmbedder(text, stick)
    model = ConditionFusionDenoiser(cfg)
    model.eval()
    rows, _ = sort_rows(_rows(vocab))
    batch = embedder(rows)
    x = torch.randn(len(rows), 20, MOTION_DIM)
    t = torch.full((len(rows),), 3, dtype=torch.long)
    with torch.no_grad():
        fused = model(x, t, batch)
        alone = model(x[-1:], t[-1:], embedder([ConditionRow(C.NONE)]))
    assert torch.allclose(fused.eps[-1], alone.eps[0], atol=1e-5)


def test_output_shapes_and_time_dependence():
    torch.manual_seed(7)
    cfg = _small_cfg()
    vocab, text, stick = _towers(cfg.dim)
    embedder = ConditionEmbedder(text, stick)
    model = ConditionFusionDenoiser(cfg)
    rows, _ = sort_rows(_rows(vocab))
    batch = embedder(rows)
    x = torch.randn(len(rows), 30, MOTION_DIM)
    out1 = model(x, torch.full((len(rows),), 1, dtype=torch.long), batch)
    out2 = model(x, torch.full((len(rows),), 180, dtype=torch.long), batch)
    assert out1.eps.shape == (len(rows), 30, MOTION_DIM)
    assert out1.index_logits.shape == (len(rows), 30, NUM_SLOTS)
    assert not torch.allclose(out1.eps, out2.eps, atol=1e-4)


def test_denoiser_invariant_to_stroke_order():
    torch.manual_seed(8)
    cfg = _small_cfg()
    vocab, text, stick = _towers(cfg.dim)
    embedder = ConditionEmbedder(text, stick)
    model = ConditionFusionDenoiser(cfg)
    model.eval()
    strokes = _strokes(11)
    perm = np.random.default_rng(0).permutation(NUM_STROKES)
    row_a = [ConditionRow(C.STICK_ONLY, stickmen={1: strokes})]
    row_b = [ConditionRow(C.STICK_ONLY, stickmen={1: strokes[perm]})]
    x = torch.randn(1, 16, MOTION_DIM)
    t = torch.ones(1, dtype=torch.long)
    with torch.no_grad():
        out_a = model(x, t, embedder(row_a))
        out_b = model(x, t, embedder(row_b))
    assert torch.allclose(out_a.eps, out_b.eps, atol=1e-5)


def test_stickman_encoder_pooled_permutation_invariance():
    _, _, stick = _towers()
    strokes = torch.as_tensor(_strokes(3), dtype=torch.float32)[None]
    perm = torch.randperm(NUM_STROKES)
    with torch.no_grad():
        _, pooled_a = stick(strokes)
        _, pooled_b = stick(strokes[:, perm])
    assert torch.allclose(pooled_a, pooled_b, atol=1e-5)


# ---------------------------------------------------------------------------
# baseline


def test_baseline_masks_absent_conditions():
    torch.manual_seed(9)
    cfg = _small_cfg()
    vocab, text, stick = _towers(cfg.dim)
    embedder = ConditionEmbedder(text, stick)
    model = SelfAttentionDenoiser(cfg)
    model.eval()
    rows, _ = sort_rows(_rows(vocab))
    batch = embedder(rows)
    L = 12
    x = torch.randn(len(rows), L, MOTION_DIM)
    t = torch.ones(len(rows), dtype=torch.long)
    with torch.no_grad():
        out, maps = model(x, t, batch, need_weights=True)
    assert out.eps.shape == (len(rows), L, MOTION_DIM)
    # the fully unconditioned row may only attend to its own frames
    for weights in maps:
        beyond_frames = weights[-1, :L, L:]
        assert beyond_frames.abs().max() < 1e-7


# ---------------------------------------------------------------------------
# analytic cost model


def test_fusion_cheaper_than_baseline_at_reference_scale():
    cfg = DenoiserConfig()  # dim 128, 2 MCM blocks
    segments = (256, 256, 256, 256)
    fused = fusion_forward_macs(cfg, segments, L=80)
    std = baseline_forward_macs(cfg, segments, L=80)
    assert fused < std
    assert std / fused > 1.3


def test_cost_model_scales_with_rows():
    cfg = DenoiserConfig()
    small = fusion_forward_macs(cfg, (1, 1, 1, 1), L=80)
    big = fusion_forward_macs(cfg, (2, 2, 2, 2), L=80)
    assert big == 2 * small
    # unconditioned rows only pay for the latent encoder
    none_only = fusion_forward_macs(cfg, (0, 0, 0, 4), L=80)
    both_only = fusion_forward_macs(cfg, (0, 4, 0, 0), L=80)
    assert none_only < both_only


# ---------------------------------------------------------------------------
# sampling loop


def _sampler_fixture():
    torch.manual_seed(10)
    cfg = _small_cfg()
    vocab, text, stick = _towers(cfg.dim)
    embedder = ConditionEmbedder(text, stick)
    model = ConditionFusionDenoiser(cfg)
    sched = D.make_schedule(12)
    stats = FeatureStats(np.zeros(MOTION_DIM), np.ones(MOTION_DIM))
    return vocab, embedder, model, sched, stats


def test_generate_is_seed_deterministic():
    vocab, embedder, model, sched, stats = _sampler_fixture()
    req = D.GenerationRequest(length=40, tokens=vocab.encode("a person walks forward"),
                              stickmen={0: _strokes(0)})
    mix = D.MixtureConfig()
    a = D.generate(model, embedder, sched, stats, req, mix, seed=5)
    b = D.generate(model, embedder, sched, stats, req, mix, seed=5)
    c = D.generate(model, embedder, sched, stats, req, mix, seed=6)
    assert np.array_equal(a.features, b.features)
    assert not np.array_equal(a.features, c.features)
    assert a.features.shape == (40, MOTION_DIM)


def test_generate_reports_slot_argmax_only_with_stickmen():
    vocab, embedder, model, sched, stats = _sampler_fixture()
    mix = D.MixtureConfig()
    with_stick = D.generate(
        model, embedder, sched, stats,
        D.GenerationRequest(length=40, tokens=vocab.encode("a person squats"),
                            stickmen={0: _strokes(1), 2: _strokes(2)}),
        mix, seed=0)
    assert set(with_stick.slot_argmax) == {0, 2}
    assert with_stick.index_logits.shape == (40, NUM_SLOTS)
    assert all(0 <= v < 40 for v in with_stick.slot_argmax.values())
    text_only = D.generate(
        model, embedder, sched, stats,
        D.GenerationRequest(length=40, tokens=vocab.encode("a person squats")),
        mix, seed=0)
    assert text_only.index_logits is None and text_only.slot_argmax == {}


def test_generate_trace_covers_every_step():
    vocab, embedder, model, sched, stats = _sampler_fixture()
    req = D.GenerationRequest(length=40, tokens=vocab.encode("a person walks forward"))
    res = D.generate(model, embedder, sched, stats, req, D.MixtureConfig(),
                     seed=1, trace=True)
    assert len(res.weight_trace) == sched.T
    # trace runs from t = T down to 1; the tail must be the fixed weights
    for weights in res.weight_trace[-D.stage2_threshold(sched.T):]:
        assert tuple(weights) == (1.0, 0.0, 0.0, 0.0)
    for weights in res.weight_trace:
        assert weights.left_sum() == 1.0


def test_generate_batch_requires_equal_lengths():
    vocab, embedder, model, sched, stats = _sampler_fixture()
    reqs = [D.GenerationRequest(length=40), D.GenerationRequest(length=44)]
    with pytest.raises(ValueError):
        D.generate_batch(model, embedder, sched, stats, reqs,
                         D.MixtureConfig(), seed=0)


def test_generate_batch_mixed_conditions():
    vocab, embedder, model, sched, stats = _sampler_fixture()
    reqs = [
        D.GenerationRequest(length=40, tokens=vocab.encode("a person walks forward")),
        D.GenerationRequest(length=40, stickmen={1: _strokes(5)}),
        D.GenerationRequest(length=40),
    ]
    out = D.generate_batch(model, embedder, sched, stats, reqs,
                           D.MixtureConfig(), seed=3)
    assert len(out) == 3
    assert out[0].index_logits is None
    assert set(out[1].slot_argmax) == {1}
    assert out[2].index_logits is None
    assert not np.array_equal(out[0].features, out[2].features)
