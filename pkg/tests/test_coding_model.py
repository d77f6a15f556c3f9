"""Chunked encoding, label cross-attention and the coding network."""

import numpy as np
import pytest
import torch

from src.config import ModelConfig
from src.data.tokenizer import WordTokenizer
from src.model.coding_model import (
    IcdCodingModel,
    ModelError,
    build_model,
    classify,
    init_code_queries,
    label_cross_attention,
    pad_batch,
)
from src.model.encoder import TinyTransformerEncoder, encode_chunked

CHUNK = 8


class BagOfWordsEncoder(torch.nn.Module):
    """Position-free encoder: every token is just its embedding."""

    pad_id = 0

    def __init__(self, vocab_size, hidden_dim):
        super().__init__()
        self.hidden_dim = hidden_dim
        self.embedding = torch.nn.Embedding(vocab_size, hidden_dim)

    def forward(self, token_ids, attention_mask):
        return self.embedding(token_ids)


@pytest.fixture
def encoder():
    torch.manual_seed(0)
    module = TinyTransformerEncoder(
        vocab_size=50, hidden_dim=16, max_positions=CHUNK, layers=1, heads=2, ffn_dim=32, dropout=0.0
    )
    # train mode keeps the reference math path; dropout is zero
    return module.double().train()


def _per_chunk(encoder, ids):
    parts = []
    for start in range(0, ids.shape[0], CHUNK):
        piece = ids[start : start + CHUNK][None]
        parts.append(encoder(piece, torch.ones_like(piece, dtype=torch.bool))[0])
    return torch.cat(parts)


class TestEncodeChunked:
    @pytest.mark.parametrize("length", [1, CHUNK - 1, CHUNK, CHUNK + 1, 3 * CHUNK + 7])
    def test_matches_chunk_by_chunk_encoding(self, encoder, length):
        ids = torch.randint(2, 50, (length,), generator=torch.Generator().manual_seed(length))
        hidden = encode_chunked(ids, encoder, CHUNK)
        assert hidden.shape == (length, 16)
        torch.testing.assert_close(hidden, _per_chunk(encoder, ids))

    def test_batched_rows_match_unbatched(self, encoder):
        long_ids = torch.randint(2, 50, (3 * CHUNK,), generator=torch.Generator().manual_seed(1))
        short_ids = long_ids[:5]
        ids, mask = pad_batch([long_ids.tolist(), short_ids.tolist()])
        hidden = encode_chunked(ids, encoder, CHUNK, mask)
        assert hidden.shape == (2, 3 * CHUNK, 16)
        torch.testing.assert_close(hidden[0], encode_chunked(long_ids, encoder, CHUNK))
        torch.testing.assert_close(hidden[1, :5], encode_chunked(short_ids, encoder, CHUNK))
        # chunks made only of padding are left as zeros
        assert torch.count_nonzero(hidden[1, CHUNK:]) == 0


class TestLabelCrossAttention:
    def test_against_direct_formula(self):
        rng = np.random.default_rng(42)
        n, c, d = 6, 3, 4
        hidden, queries, w_k, w_v = (rng.normal(size=shape) for shape in [(n, d), (c, d), (d, d), (d, d)])

        evidence, attention = label_cross_attention(*(torch.from_numpy(x) for x in (hidden, queries, w_k, w_v)))

        scores = queries @ (hidden @ w_k).T
        expected_attention = np.exp(scores - scores.max(axis=1, keepdims=True))
        expected_attention /= expected_attention.sum(axis=1, keepdims=True)
        gathered = expected_attention @ (hidden @ w_v)
        mean = gathered.mean(axis=1, keepdims=True)
        var = gathered.var(axis=1, keepdims=True)
        expected_evidence = (gathered - mean) / np.sqrt(var + 1e-5)

        np.testing.assert_allclose(attention.numpy(), expected_attention, rtol=1e-10)
        np.testing.assert_allclose(evidence.numpy(), expected_evidence, rtol=1e-8, atol=1e-10)

    def test_rows_are_distributions_and_padding_gets_no_weight(self):
        torch.manual_seed(3)
        hidden = torch.randn(2, 5, 4, dtype=torch.double)
        mask = torch.tensor([[True] * 5, [True, True, False, False, False]])
        _, attention = label_cross_attention(
            hidden, torch.randn(3, 4, dtype=torch.double), torch.eye(4, dtype=torch.double),
            torch.eye(4, dtype=torch.double), attention_mask=mask,
        )
        torch.testing.assert_close(attention.sum(dim=-1), torch.ones(2, 3, dtype=torch.double))
        assert torch.all(attention >= 0)
        assert torch.count_nonzero(attention[1, :, 2:]) == 0

    def test_single_token_gets_all_the_weight(self):
        torch.manual_seed(11)
        inputs = (torch.randn(shape, dtype=torch.double) for shape in [(1, 8), (3, 8), (8, 8), (8, 8)])
        _, attention = label_cross_attention(*inputs)
        torch.testing.assert_close(attention, torch.ones(3, 1, dtype=torch.double))

    def test_identical_tokens_share_weight(self):
        torch.manual_seed(12)
        hidden = torch.randn(5, 8, dtype=torch.double)
        hidden[3] = hidden[1]
        _, attention = label_cross_attention(
            hidden, *(torch.randn(shape, dtype=torch.double) for shape in [(4, 8), (8, 8), (8, 8)])
        )
        torch.testing.assert_close(attention[:, 1], attention[:, 3])

    def test_gradients_match_finite_differences(self):
        torch.manual_seed(7)
        n, c, d = 6, 3, 8
        inputs = tuple(
            torch.randn(shape, dtype=torch.double, requires_grad=True)
            for shape in [(n, d), (c, d), (d, d), (d, d), (c, d)]
        )

        def scores(hidden, queries, w_k, w_v, weights):
            evidence, _ = label_cross_attention(hidden, queries, w_k, w_v)
            return classify(evidence, weights)

        assert torch.autograd.gradcheck(scores, inputs, eps=1e-6, atol=1e-6, rtol=1e-4)


class TestClassify:
    def test_sigmoid_of_dot_product(self):
        evidence = torch.tensor([[1.0, 2.0], [0.5, -1.0]])
        weights = torch.tensor([[0.5, 0.25], [2.0, 1.0]])
        torch.testing.assert_close(classify(evidence, weights), torch.sigmoid(torch.tensor([1.0, 0.0])))

    def test_zero_weights_give_half(self):
        probs = classify(torch.randn(4, 3, 5), torch.zeros(3, 5))
        torch.testing.assert_close(probs, torch.full((4, 3), 0.5))

    def test_codes_are_independent(self):
        torch.manual_seed(13)
        evidence, weights = torch.randn(5, 4, dtype=torch.double), torch.randn(5, 4, dtype=torch.double)
        before = classify(evidence, weights)
        weights[2] += 0.5
        after = classify(evidence, weights)
        changed = torch.nonzero(before != after).flatten().tolist()
        assert changed == [2]

    def test_monotone_in_the_dot_product(self):
        evidence = torch.tensor([[0.3, -1.2, 0.8]], dtype=torch.double)
        probs = torch.stack([classify(evidence, scale * evidence)[0] for scale in torch.linspace(-3, 3, 25)])
        assert torch.all(probs[1:] > probs[:-1])


class TestCodingModel:
    def test_forward_shapes(self, tiny_model_config):
        torch.manual_seed(0)
        model = build_model(tiny_model_config, vocab_size=30, num_codes=5).double()
        ids, mask = pad_batch([list(range(2, 22)), [3, 4, 5]])
        output = model(ids, mask)
        assert output.probs.shape == (2, 5)
        assert output.evidence.shape == (2, 5, 16)
        assert output.attention.shape == (2, 5, 20)
        assert torch.all((output.probs > 0) & (output.probs < 1))
        assert torch.count_nonzero(output.attention[1, :, 3:]) == 0

    def test_untrained_attention_is_near_uniform(self, tiny_model_config):
        torch.manual_seed(0)
        model = build_model(tiny_model_config, vocab_size=30, num_codes=5).eval()
        ids, mask = pad_batch([torch.randint(2, 30, (40,)).tolist(), torch.randint(2, 30, (13,)).tolist()])
        with torch.no_grad():
            attention = model(ids, mask).attention
        assert attention[0].max() <= 3 / 40
        assert attention[1, :, :13].max() <= 3 / 13

    def test_attention_follows_token_permutation_without_positions(self):
        torch.manual_seed(14)
        model = IcdCodingModel(BagOfWordsEncoder(vocab_size=20, hidden_dim=8), num_codes=3, chunk_size=16, dropout=0.0)
        model = model.double().eval()
        with torch.no_grad():
            model.w_k.normal_()
        ids = torch.tensor([[4, 9, 2, 17, 5, 11, 8]])
        mask = torch.ones_like(ids, dtype=torch.bool)
        permutation = torch.tensor([3, 0, 6, 1, 5, 2, 4])

        with torch.no_grad():
            original = model(ids, mask)
            permuted = model(ids[:, permutation], mask)
        torch.testing.assert_close(permuted.attention, original.attention[:, :, permutation])
        torch.testing.assert_close(permuted.probs, original.probs)

    def test_empty_label_space(self, tiny_model_config):
        with pytest.raises(ModelError):
            build_model(tiny_model_config, vocab_size=30, num_codes=0)

    def test_heads_must_divide_hidden(self):
        with pytest.raises(ValueError):
            ModelConfig(hidden_dim=10, heads=4)

    def test_init_code_queries_max_pools_descriptions(self, tiny_model_config, toy_kb):
        torch.manual_seed(0)
        tokenizer = WordTokenizer.fit(toy_kb.knowledge_texts())
        model = build_model(tiny_model_config, tokenizer.vocab_size, len(toy_kb))
        queries = init_code_queries(toy_kb, model.encoder, tokenizer, tiny_model_config.chunk_size)
        assert queries.shape == (len(toy_kb), 16)
        assert model.encoder.training

        description = toy_kb.descriptions()[3]
        model.encoder.eval()
        with torch.no_grad():
            hidden = encode_chunked(torch.tensor(tokenizer.encode(description)), model.encoder, tiny_model_config.chunk_size)
        torch.testing.assert_close(queries[3], hidden.max(dim=0).values)

        model.set_queries(queries)
        torch.testing.assert_close(model.queries.detach(), queries)
        assert model.queries.requires_grad

    def test_set_queries_shape_checked(self, tiny_model_config):
        model = build_model(tiny_model_config, vocab_size=30, num_codes=5)
        with pytest.raises(ModelError):
            model.set_queries(torch.zeros(4, 16))


class TestPadBatch:
    def test_right_padding(self):
        ids, mask = pad_batch([[5, 6, 7], [8]], pad_id=0)
        assert ids.tolist() == [[5, 6, 7], [8, 0, 0]]
        assert mask.tolist() == [[True, True, True], [True, False, False]]
        assert ids.dtype == torch.long

    def test_empty_batch(self):
        with pytest.raises(ModelError):
            pad_batch([])
