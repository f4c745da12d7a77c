import numpy as np
import pytest
import torch

from creative_morph.texture_style import (
    FEAT_H,
    FEAT_W,
    TEXTURE_H,
    TEXTURE_W,
    StylizerConfig,
    TextureDecoder,
    TextureEncoder,
    downsample_mask,
    ehm_sort_match,
    masked_moments,
    part_one_hot,
    sadain,
    sefdm,
    sefdm_cross_mask,
    slst,
    stylize_uv,
    validate_mask,
)


def full_mask(label=1):
    return np.full((TEXTURE_H, TEXTURE_W), label, dtype=np.int64)


def banded_mask_ds():
    """Feature-resolution mask with four vertical bands, one per part."""
    m = np.zeros((FEAT_H, FEAT_W), dtype=np.int64)
    for i in range(4):
        m[:, i * FEAT_W // 4 : (i + 1) * FEAT_W // 4] = i + 1
    return m


# --- mask plumbing ---


def test_validate_mask_bad_shape():
    with pytest.raises(ValueError):
        validate_mask(np.ones((10, 10), dtype=np.int64))


def test_validate_mask_bad_label():
    m = full_mask()
    m[0, 0] = 7
    with pytest.raises(ValueError):
        validate_mask(m)


def test_downsample_mode_majority():
    m = full_mask(5)
    # one 2x2 block with 3 votes for part 2
    m[0, 0] = m[0, 1] = m[1, 0] = 2
    ds = downsample_mask(m)
    assert ds[0, 0] == 2
    assert (ds.reshape(-1)[1:] == 5).all()


def test_downsample_tie_prefers_smaller_label():
    m = full_mask(5)
    m[0, 0] = m[1, 1] = 3  # 2 votes part 3, 2 votes part 5
    assert downsample_mask(m)[0, 0] == 3


def test_downsample_oracle_random():
    rng = np.random.default_rng(0)
    m = rng.integers(1, 6, size=(TEXTURE_H, TEXTURE_W))
    ds = downsample_mask(m)
    for _ in range(50):
        r = int(rng.integers(0, FEAT_H))
        c = int(rng.integers(0, FEAT_W))
        block = m[2 * r : 2 * r + 2, 2 * c : 2 * c + 2].reshape(-1)
        counts = [(block == lab).sum() for lab in range(1, 6)]
        assert ds[r, c] == 1 + int(np.argmax(counts))


def test_part_one_hot_partition():
    rng = np.random.default_rng(1)
    m = rng.integers(1, 6, size=(FEAT_H, FEAT_W))
    total = sum(part_one_hot(m, i) for i in range(1, 6))
    assert (total == 1.0).all()


def test_part_one_hot_bad_index():
    with pytest.raises(ValueError):
        part_one_hot(np.ones((4, 4)), 0)


# --- masked moments ---


def test_masked_moments_oracle():
    rng = np.random.default_rng(2)
    v = torch.from_numpy(rng.normal(size=(3, 8, 8)))
    part = torch.from_numpy((rng.random((8, 8)) < 0.4).astype(np.float64))
    eps = 1e-5
    mu, sig = masked_moments(v, part, eps)
    sel = part.numpy().astype(bool)
    for c in range(3):
        vals = v[c].numpy()[sel]
        assert mu[c].item() == pytest.approx(vals.mean(), abs=1e-9)
        assert sig[c].item() == pytest.approx(np.sqrt(vals.var() + eps), abs=1e-9)


def test_masked_moments_empty():
    from creative_morph.texture_style import EmptyPart

    with pytest.raises(EmptyPart):
        masked_moments(torch.zeros(3, 4, 4), torch.zeros(4, 4), 1e-5)


# --- SAdaIN ---


def test_sadain_imposes_target_stats():
    rng = np.random.default_rng(3)
    v_s = torch.from_numpy(rng.normal(0.0, 1.0, size=(4, FEAT_H, FEAT_W)))
    v_t = torch.from_numpy(rng.normal(2.0, 3.0, size=(4, FEAT_H, FEAT_W)))
    mask = banded_mask_ds()
    cfg = StylizerConfig(method="sadain", epsilon=1e-12)
    out = sadain(v_s, v_t, mask, cfg)
    for i in range(1, 5):
        sel = mask == i
        for c in range(4):
            got = out[c].numpy()[sel]
            want = v_t[c].numpy()[sel]
            assert got.mean() == pytest.approx(want.mean(), abs=1e-5)
            assert got.std() == pytest.approx(want.std(), rel=1e-4)


def test_sadain_identity_on_self():
    rng = np.random.default_rng(4)
    v = torch.from_numpy(rng.normal(size=(2, FEAT_H, FEAT_W)))
    out = sadain(v, v, banded_mask_ds(), StylizerConfig(epsilon=1e-12))
    assert torch.allclose(out, v, atol=1e-9)


def test_sadain_part5_passthrough():
    rng = np.random.default_rng(5)
    v_s = torch.from_numpy(rng.normal(size=(2, FEAT_H, FEAT_W)))
    v_t = torch.from_numpy(rng.normal(3.0, 2.0, size=(2, FEAT_H, FEAT_W)))
    mask = banded_mask_ds()
    mask[:, : FEAT_W // 4] = 5
    out = sadain(v_s, v_t, mask, StylizerConfig())
    sel = torch.from_numpy(mask == 5)
    assert torch.equal(out[:, sel], v_s[:, sel])


def test_sadain_switch_gate_reverses_direction():
    rng = np.random.default_rng(6)
    v_s = torch.from_numpy(rng.normal(0.0, 1.0, size=(2, FEAT_H, FEAT_W)))
    v_t = torch.from_numpy(rng.normal(5.0, 2.0, size=(2, FEAT_H, FEAT_W)))
    mask = np.ones((FEAT_H, FEAT_W), dtype=np.int64)
    out = sadain(v_s, v_t, mask, StylizerConfig(switch_gates=(True, False, False, False)))
    # gate on: target stylized by source stats -> mean near source mean
    assert out.mean().item() == pytest.approx(v_s.mean().item(), abs=0.05)


def test_stochastic_gates_seeded():
    a = StylizerConfig(stochastic_gates=True, seed=9).resolved_gates()
    b = StylizerConfig(stochastic_gates=True, seed=9).resolved_gates()
    c = StylizerConfig(stochastic_gates=True, seed=10).resolved_gates()
    assert a == b
    assert len(a) == 4
    assert any(StylizerConfig(stochastic_gates=True, seed=s).resolved_gates() != a for s in range(20)) or a != c


def test_empty_part_reported_not_fatal():
    rng = np.random.default_rng(7)
    v = torch.from_numpy(rng.normal(size=(2, FEAT_H, FEAT_W)))
    mask = np.full((FEAT_H, FEAT_W), 5, dtype=np.int64)  # parts 1..4 all empty
    cfg = StylizerConfig()
    out = sadain(v, v + 1, mask, cfg)
    assert torch.equal(out, v)
    assert len(cfg.passthrough_report) == 4


# --- SLST ---


def test_slst_wct_matches_target_covariance():
    rng = np.random.default_rng(8)
    c = 3
    v_s = torch.from_numpy(rng.normal(size=(c, FEAT_H, FEAT_W)))
    A = rng.normal(size=(c, c))
    v_t = torch.from_numpy(
        (A @ rng.normal(size=(c, FEAT_H * FEAT_W))).reshape(c, FEAT_H, FEAT_W) + 1.0
    )
    mask = np.ones((FEAT_H, FEAT_W), dtype=np.int64)
    out = slst(v_s, v_t, mask, StylizerConfig(method="slst", epsilon=1e-10))

    def cov(x):
        flat = x.reshape(c, -1).numpy()
        centered = flat - flat.mean(axis=1, keepdims=True)
        return centered @ centered.T / flat.shape[1]

    assert np.abs(cov(out) - cov(v_t)).max() < 1e-4
    flat = out.reshape(c, -1)
    assert np.abs(flat.mean(dim=1).numpy() - v_t.reshape(c, -1).mean(dim=1).numpy()).max() < 1e-6


def test_slst_wct_single_channel_reduces_to_adain():
    rng = np.random.default_rng(9)
    v_s = torch.from_numpy(rng.normal(size=(1, FEAT_H, FEAT_W)))
    v_t = torch.from_numpy(rng.normal(2.0, 3.0, size=(1, FEAT_H, FEAT_W)))
    mask = banded_mask_ds()
    eps = 1e-12
    a = slst(v_s, v_t, mask, StylizerConfig(method="slst", epsilon=eps))
    b = sadain(v_s, v_t, mask, StylizerConfig(epsilon=eps))
    assert torch.allclose(a, b, atol=1e-6)


def test_slst_literal_oracle():
    rng = np.random.default_rng(10)
    c = 2
    v_s = torch.from_numpy(rng.normal(size=(c, FEAT_H, FEAT_W)))
    v_t = torch.from_numpy(rng.normal(size=(c, FEAT_H, FEAT_W)))
    mask = np.ones((FEAT_H, FEAT_W), dtype=np.int64)
    eps = 1e-5
    out = slst(v_s, v_t, mask, StylizerConfig(method="slst", slst_mode="literal", epsilon=eps))

    def cov_np(x):
        flat = x.reshape(c, -1).numpy()
        centered = flat - flat.mean(axis=1, keepdims=True)
        return centered @ centered.T / flat.shape[1] + eps * np.eye(c)

    want = cov_np(v_s) @ cov_np(v_t) @ v_s.reshape(c, -1).numpy()
    assert np.abs(out.reshape(c, -1).numpy() - want).max() < 1e-8


def test_slst_restricted_to_part():
    rng = np.random.default_rng(11)
    v_s = torch.from_numpy(rng.normal(size=(2, FEAT_H, FEAT_W)))
    v_t = torch.from_numpy(rng.normal(4.0, 2.0, size=(2, FEAT_H, FEAT_W)))
    mask = np.full((FEAT_H, FEAT_W), 5, dtype=np.int64)
    mask[:, : FEAT_W // 2] = 1
    out = slst(v_s, v_t, mask, StylizerConfig(method="slst"))
    sel = torch.from_numpy(mask == 5)
    assert torch.equal(out[:, sel], v_s[:, sel])
    assert not torch.allclose(out[:, ~sel], v_s[:, ~sel])


# --- SEFDM / exact histogram matching ---


def test_ehm_hand_example():
    src = torch.tensor([0.3, 0.1, 0.9, 0.5])
    tgt = torch.tensor([10.0, 20.0, 30.0, 40.0])
    out = ehm_sort_match(src, tgt)
    # ranks of src: 0.1->0, 0.3->1, 0.5->2, 0.9->3
    assert torch.equal(out, torch.tensor([20.0, 10.0, 40.0, 30.0]))


def test_ehm_is_permutation_of_target():
    rng = np.random.default_rng(12)
    src = torch.from_numpy(rng.normal(size=200))
    tgt = torch.from_numpy(rng.normal(size=200))
    out = ehm_sort_match(src, tgt)
    assert torch.equal(torch.sort(out).values, torch.sort(tgt).values)


def test_ehm_ties_stable():
    src = torch.tensor([1.0, 1.0, 0.0])
    tgt = torch.tensor([5.0, 6.0, 7.0])
    out = ehm_sort_match(src, tgt)
    # equal src values keep original order: index 0 before index 1
    assert torch.equal(out, torch.tensor([6.0, 7.0, 5.0]))


def test_ehm_rank_correlation_preserved():
    rng = np.random.default_rng(13)
    src = torch.from_numpy(rng.normal(size=100))
    tgt = torch.from_numpy(rng.normal(size=100))
    out = ehm_sort_match(src, tgt)
    assert torch.equal(torch.argsort(out, stable=True), torch.argsort(src, stable=True))


def test_ehm_shape_mismatch():
    with pytest.raises(ValueError):
        ehm_sort_match(torch.zeros(3), torch.zeros(4))


def test_sefdm_value_multiset():
    rng = np.random.default_rng(14)
    v_s = torch.from_numpy(rng.normal(size=(2, FEAT_H, FEAT_W)))
    v_t = torch.from_numpy(rng.normal(1.0, 2.0, size=(2, FEAT_H, FEAT_W)))
    mask = banded_mask_ds()
    out = sefdm(v_s, v_t, mask, StylizerConfig(method="sefdm"))
    for i in range(1, 5):
        sel = mask == i
        for c in range(2):
            got = np.sort(out[c].numpy()[sel])
            want = np.sort(v_t[c].numpy()[sel])
            assert np.abs(got - want).max() < 1e-12


def test_sefdm_straight_through_gradient():
    rng = np.random.default_rng(15)
    v_s = torch.from_numpy(rng.normal(size=(1, FEAT_H, FEAT_W))).requires_grad_(True)
    v_t = torch.from_numpy(rng.normal(size=(1, FEAT_H, FEAT_W)))
    mask = np.ones((FEAT_H, FEAT_W), dtype=np.int64)
    out = sefdm(v_s, v_t, mask, StylizerConfig(method="sefdm"))
    out.sum().backward()
    # straight-through: d out / d src is the identity on every cell
    assert torch.allclose(v_s.grad, torch.ones_like(v_s))


def test_sefdm_cross_mask_unequal_counts():
    rng = np.random.default_rng(16)
    v_s = torch.from_numpy(rng.normal(size=(2, FEAT_H, FEAT_W)))
    v_t = torch.from_numpy(rng.normal(size=(2, FEAT_H, FEAT_W)))
    mask_s = np.full((FEAT_H, FEAT_W), 5, dtype=np.int64)
    mask_s[:, :30] = 1
    mask_t = np.full((FEAT_H, FEAT_W), 5, dtype=np.int64)
    mask_t[:, :50] = 1
    cfg = StylizerConfig(method="sefdm")
    out = sefdm_cross_mask(v_s, v_t, mask_s, mask_t, cfg)
    assert out.shape == v_s.shape
    assert ("head", "resampled") in cfg.passthrough_report
    sel = torch.from_numpy(mask_s == 5)
    assert torch.equal(out[:, sel], v_s[:, sel])


# --- encoder / decoder / end to end ---


def test_encoder_frozen_and_seeded():
    a = TextureEncoder(8)
    b = TextureEncoder(8)
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert torch.equal(pa, pb)
        assert not pa.requires_grad


def test_encoder_output_shape():
    enc = TextureEncoder(8)
    out = enc(torch.rand(TEXTURE_H, TEXTURE_W, 3))
    assert out.shape == (8, FEAT_H, FEAT_W)


def test_encoder_rejects_bad_shape():
    with pytest.raises(ValueError):
        TextureEncoder(8)(torch.rand(64, 64, 3))


def test_decoder_output_shape_and_range():
    torch.manual_seed(17)
    dec = TextureDecoder(8)
    with torch.no_grad():
        out = dec(torch.randn(8, FEAT_H, FEAT_W))
    assert out.shape == (TEXTURE_H, TEXTURE_W, 3)
    assert float(out.min()) >= 0.0 and float(out.max()) <= 1.0


def test_stylize_uv_contract():
    torch.manual_seed(18)
    enc = TextureEncoder(8)
    dec = TextureDecoder(8)
    u_s = torch.rand(TEXTURE_H, TEXTURE_W, 3)
    u_t = torch.rand(TEXTURE_H, TEXTURE_W, 3)
    mask = full_mask(1)
    mask[:, :40] = 5
    out = stylize_uv(u_s, u_t, mask, StylizerConfig(), enc, dec)
    assert out.shape == (TEXTURE_H, TEXTURE_W, 3)
    sel = torch.from_numpy(mask == 5)
    assert torch.equal(out[sel], u_s[sel])


def test_stylizer_config_validation():
    with pytest.raises(ValueError):
        StylizerConfig(method="vgg")
    with pytest.raises(ValueError):
        StylizerConfig(slst_mode="affine")
    with pytest.raises(ValueError):
        StylizerConfig(epsilon=0.0)
