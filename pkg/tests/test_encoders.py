"""Token encoder, mention/pair features, and the linear heads."""
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from eventenergy.encoders import (
    OOV_TOKEN,
    PAD_TOKEN,
    EncoderConfig,
    LinearLabelHead,
    TokenContextEncoder,
    build_encoder,
    build_vocab,
    encode_mention,
    encode_pair,
    mentions_to_ids,
)
from helpers import make_document, make_mention

DTYPE = torch.float64


def small_config(seed=0, d=8, layers=2, extra_tokens=("alpha", "beta", "gamma", "delta", "eps", "zeta")):
    vocab = {PAD_TOKEN: 0, OOV_TOKEN: 1}
    for t in extra_tokens:
        vocab[t] = len(vocab)
    return EncoderConfig(embed_dim=d, vocab=vocab, seed=seed, mixer_layers=layers)


class TestConfigAndVocab:
    def test_vocab_includes_specials_and_is_sorted(self):
        doc = make_document("d", [(("zz", "aa"), 1, 0), (("mm",), 1, 0)])
        vocab = build_vocab([doc])
        assert vocab[PAD_TOKEN] == 0 and vocab[OOV_TOKEN] == 1
        assert list(vocab) == [PAD_TOKEN, OOV_TOKEN, "aa", "mm", "zz"]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            EncoderConfig(embed_dim=1, vocab={PAD_TOKEN: 0, OOV_TOKEN: 1})
        with pytest.raises(ValueError):
            EncoderConfig(embed_dim=4, vocab={"x": 0})

    def test_unknown_backbone_lists_registry(self):
        cfg = small_config()
        cfg.backbone = "pluggable-pretrained"
        with pytest.raises(ValueError, match="register_backbone"):
            build_encoder(cfg)


class TestTokenContextEncoder:
    def test_all_padding_rows_equal_padding_image(self):
        enc = TokenContextEncoder(small_config())
        ids = torch.zeros(1, 7, dtype=torch.long)  # all PAD
        out = enc(ids)[0]
        image = enc.padding_image()
        assert torch.allclose(out, image.expand_as(out))
        # same through every row, including the edges
        assert torch.allclose(out[0], out[3])

    def test_same_seed_same_output(self):
        m = make_mention(("alpha", "beta", "gamma"), 2, 0)
        a = TokenContextEncoder(small_config(seed=5)).encode_mention(m)
        b = TokenContextEncoder(small_config(seed=5)).encode_mention(m)
        assert torch.equal(a, b)

    def test_different_seed_differs(self):
        m = make_mention(("alpha", "beta"), 1, 0)
        a = TokenContextEncoder(small_config(seed=1)).encode_mention(m)
        b = TokenContextEncoder(small_config(seed=2)).encode_mention(m)
        assert not torch.allclose(a, b)

    def test_permuting_distant_tokens_changes_mixed_rows_only(self):
        enc = TokenContextEncoder(small_config(layers=2))
        base = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "alpha", "beta", "gamma", "delta", "eps", "zeta"]
        swapped = list(base)
        i, j = 1, 10  # farther apart than twice the receptive radius
        swapped[i], swapped[j] = swapped[j], swapped[i]
        a = enc.encode_mention(make_mention(base, 1, 0))
        b = enc.encode_mention(make_mention(swapped, 1, 0))
        radius = enc.receptive_radius
        for pos in range(len(base)):
            near_swap = min(abs(pos - i), abs(pos - j)) <= radius
            if near_swap and pos in (i, j):
                assert not torch.allclose(a[pos], b[pos])
            if not near_swap:
                assert torch.allclose(a[pos], b[pos])

    def test_context_mixing_actually_mixes(self):
        # neighbouring-token information must reach the trigger row
        enc = TokenContextEncoder(small_config(layers=1))
        a = enc.encode_mention(make_mention(("alpha", "beta", "gamma"), 2, 0))
        b = enc.encode_mention(make_mention(("delta", "beta", "gamma"), 2, 0))
        assert not torch.allclose(a[1], b[1])

    def test_rejects_non_batched_input(self):
        enc = TokenContextEncoder(small_config())
        with pytest.raises(ValueError):
            enc(torch.zeros(5, dtype=torch.long))


class TestMentionAndPairFeatures:
    def test_trigger_one_selects_first_row(self):
        feats = torch.randn(4, 6, dtype=DTYPE)
        assert torch.equal(encode_mention(feats, 1), feats[0])

    def test_identity_stub_gives_unit_basis_row(self):
        eye = torch.eye(5, dtype=DTYPE)
        row = encode_mention(eye, 3)
        expected = torch.zeros(5, dtype=DTYPE)
        expected[2] = 1.0
        assert torch.equal(row, expected)

    def test_matches_fresh_encoding(self):
        enc = TokenContextEncoder(small_config())
        m = make_mention(("alpha", "beta", "gamma", "delta"), 3, 0)
        feats = enc.encode_mention(m)
        assert torch.equal(encode_mention(feats, m.trigger_index), enc.encode_mention(m)[2])

    def test_out_of_range_trigger(self):
        feats = torch.randn(4, 6, dtype=DTYPE)
        with pytest.raises(ValueError):
            encode_mention(feats, 0)
        with pytest.raises(ValueError):
            encode_mention(feats, 5)

    def test_pair_zero_first_argument(self):
        gen = torch.Generator().manual_seed(0)
        fj = torch.randn(6, generator=gen, dtype=DTYPE)
        out = encode_pair(torch.zeros(6, dtype=DTYPE), fj)
        assert torch.equal(out[:6], torch.zeros(6, dtype=DTYPE))
        assert torch.equal(out[6:12], fj)
        assert torch.equal(out[12:], torch.zeros(6, dtype=DTYPE))

    def test_swap_keeps_product_block(self):
        gen = torch.Generator().manual_seed(1)
        fi = torch.randn(5, generator=gen, dtype=DTYPE)
        fj = torch.randn(5, generator=gen, dtype=DTYPE)
        assert torch.equal(encode_pair(fi, fj)[10:], encode_pair(fj, fi)[10:])

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), d=st.integers(2, 12))
    def test_blocks_match_independent_recomputation(self, seed, d):
        gen = torch.Generator().manual_seed(seed)
        fi = torch.randn(d, generator=gen, dtype=DTYPE)
        fj = torch.randn(d, generator=gen, dtype=DTYPE)
        out = encode_pair(fi, fj)
        assert out.shape == (3 * d,)
        for k in range(d):
            assert float(out[k]) == float(fi[k])
            assert float(out[d + k]) == float(fj[k])
            assert float(out[2 * d + k]) == float(fi[k]) * float(fj[k])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            encode_pair(torch.zeros(3, dtype=DTYPE), torch.zeros(4, dtype=DTYPE))


class TestLinearHeads:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_rows_on_simplex(self, seed):
        gen = torch.Generator().manual_seed(seed)
        head = LinearLabelHead(6, 5, gen)
        feats = torch.randn(7, 6, generator=gen, dtype=DTYPE)
        probs = head(feats)
        assert torch.all(probs >= 0)
        assert torch.allclose(probs.sum(-1), torch.ones(7, dtype=DTYPE), atol=1e-6)

    def test_zero_weights_give_uniform(self):
        gen = torch.Generator().manual_seed(0)
        head = LinearLabelHead(4, 3, gen)
        with torch.no_grad():
            head.weight.zero_()
            head.bias.zero_()
        probs = head(torch.randn(5, 4, generator=gen, dtype=DTYPE))
        assert torch.allclose(probs, torch.full((5, 3), 1 / 3, dtype=DTYPE))


class TestPaddingBatches:
    def test_mentions_padded_to_batch_length(self):
        vocab = small_config().vocab
        ms = [make_mention(("alpha",), 1, 0), make_mention(("beta", "gamma", "delta"), 2, 0)]
        ids = mentions_to_ids(ms, vocab)
        assert ids.shape == (2, 3)
        assert ids[0, 1] == vocab[PAD_TOKEN] and ids[0, 2] == vocab[PAD_TOKEN]

    def test_oov_maps_to_oov_id(self):
        vocab = small_config().vocab
        ids = mentions_to_ids([make_mention(("nope",), 1, 0)], vocab)
        assert ids[0, 0] == vocab[OOV_TOKEN]
