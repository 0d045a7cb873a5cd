import numpy as np
import pytest

from scelmo.errors import TrainingError
from scelmo.gradcheck import grad_check
from scelmo.lm import (CollapseWeights, LmConfig, LmModel, _chunk_loss_and_grads,
                       chunk_stream, collapse, layer_states, load_lm, perplexity,
                       save_lm, token_streams, train_lm)
from scelmo.tokens import Corpus, FileRecord, Token


def corpus_of(streams, split="train") -> Corpus:
    files = []
    for i, texts in enumerate(streams):
        toks = [Token("identifier", t, j) for j, t in enumerate(texts)]
        files.append(FileRecord(i, f"f{i}.js", toks, split=split))
    return Corpus(files=files)


def tiny_model(layers=1, hidden=4, seed=11) -> LmModel:
    cfg = LmConfig(layers=layers, hidden=hidden, seq_len=10, lm_vocab=10, max_chars=12)
    return LmModel.init(cfg, ["<unk>", "aa", "bb", "cc", "dd", "ee"], seed=seed)


# ---------------------------------------------------------------------------
# collapse (weighted layer mixing)
# ---------------------------------------------------------------------------

def _random_states(layers=2, width=6, seed=0):
    rng = np.random.default_rng(seed)
    from scelmo.lm import LayerStates
    return LayerStates(stack=rng.normal(size=(layers + 1, width)))


def test_collapse_equal_weights_is_arithmetic_mean():
    states = _random_states(layers=2)
    out = collapse(states, CollapseWeights.equal(2))
    mean = states.stack.mean(axis=0)
    assert np.max(np.abs(out - mean)) < 1e-12


def test_collapse_top_layer_one_hot_is_exact():
    states = _random_states(layers=2)
    out = collapse(states, CollapseWeights.top_layer(2))
    assert np.array_equal(out, states.stack[-1])


def test_collapse_gamma_scaling_is_exactly_linear():
    states = _random_states(layers=2, seed=3)
    w1 = CollapseWeights.equal(2, gamma=1.0)
    w2 = CollapseWeights.equal(2, gamma=2.0)
    assert np.array_equal(collapse(states, w2), 2.0 * collapse(states, w1))


def test_collapse_linear_in_states():
    from scelmo.lm import LayerStates
    a = _random_states(seed=1)
    b = _random_states(seed=2)
    w = CollapseWeights.from_raw([0.3, -1.0, 2.0], gamma=1.3)
    combined = LayerStates(stack=a.stack + b.stack)
    assert np.allclose(collapse(combined, w),
                       collapse(a, w) + collapse(b, w), atol=1e-12)


def test_collapse_weight_length_mismatch_errors():
    states = _random_states(layers=2)
    with pytest.raises(TrainingError):
        collapse(states, CollapseWeights.equal(3))


def test_collapse_from_raw_normalizes():
    w = CollapseWeights.from_raw([0.0, 0.0, 0.0])
    assert np.allclose(w.s, [1 / 3] * 3)
    assert abs(sum(w.s) - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# layer states
# ---------------------------------------------------------------------------

def test_layer_states_shapes_and_count():
    model = tiny_model(layers=2)
    states = layer_states(model, ["aa", "bb", "cc"])
    assert len(states) == 3
    for st in states:
        assert st.stack.shape == (3, 8)  # L+1 entries of width 2H
        assert np.all(np.isfinite(st.stack))


def test_layer_states_single_token():
    model = tiny_model()
    (st,) = layer_states(model, ["aa"])
    assert st.stack.shape == (2, 8)


def test_layer_states_input_layer_is_context_free():
    model = tiny_model()
    s1 = layer_states(model, ["aa", "bb", "cc"])
    s2 = layer_states(model, ["dd", "bb", "ee"])
    # same token "bb" in both sequences: identical input layer,
    # generally different layer-1 states
    assert np.array_equal(s1[1].stack[0], s2[1].stack[0])
    assert not np.allclose(s1[1].stack[1], s2[1].stack[1])


def test_layer_states_oov_token_defined():
    model = tiny_model()
    states = layer_states(model, ["neverSeenBefore123"])
    assert np.all(np.isfinite(states[0].stack))


def test_chunk_stream():
    assert chunk_stream(list("abcdefg"), 3) == [["a", "b", "c"], ["d", "e", "f"], ["g"]]


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def test_train_repeated_token_low_perplexity():
    corpus = corpus_of([["tok"] * 400])
    cfg = LmConfig(layers=1, hidden=8, seq_len=25, batch=4, epochs=12, lr=0.05,
                   lm_vocab=10)
    model = train_lm(corpus, cfg, seed=3)
    assert perplexity(model, token_streams(corpus, "train")) < 1.1
    assert model.epoch_losses[-1] < model.epoch_losses[0]


def test_train_uniform_tokens_perplexity_near_k():
    rng = np.random.default_rng(0)
    syms = [f"s{i}" for i in range(16)]
    stream = [syms[i] for i in rng.integers(0, 16, size=4000)]
    corpus = corpus_of([stream])
    cfg = LmConfig(layers=1, hidden=8, seq_len=50, batch=8, epochs=3, lr=0.01,
                   lm_vocab=20)
    model = train_lm(corpus, cfg, seed=4)
    ppl = perplexity(model, token_streams(corpus, "train"))
    assert abs(ppl - 16.0) / 16.0 < 0.10


def test_train_deterministic_same_seed():
    corpus = corpus_of([["a", "b", "c", "a", "b", "c"] * 20])
    cfg = LmConfig(layers=1, hidden=4, seq_len=12, batch=2, epochs=2, lr=0.01,
                   lm_vocab=8)
    m1 = train_lm(corpus, cfg, seed=5)
    m2 = train_lm(corpus, cfg, seed=5)
    assert m1.epoch_losses == m2.epoch_losses
    for name, p in m1.params().items():
        assert np.array_equal(p, m2.params()[name]), name


def test_train_empty_split_errors():
    corpus = corpus_of([["a", "b"]], split="valid")
    with pytest.raises(TrainingError):
        train_lm(corpus, LmConfig(layers=1, hidden=4), seed=1, split="train")


def test_lm_vocab_includes_unk_and_ranks_by_frequency():
    corpus = corpus_of([["b", "b", "a", "c", "b", "a"]])
    cfg = LmConfig(layers=1, hidden=4, seq_len=6, epochs=1, lm_vocab=2, lr=0.001)
    model = train_lm(corpus, cfg, seed=1)
    assert model.vocab == ["<unk>", "b", "a"]
    assert model.token_id("zz") == 0


# ---------------------------------------------------------------------------
# gradient check (toy bidirectional LM, L=1, H=4)
# ---------------------------------------------------------------------------

def test_lm_gradient_check_toy_model():
    model = tiny_model(layers=1, hidden=4)
    texts = ["aa", "cc", "bb", "aa", "ee", "dd"]
    params = model.params()

    def loss_fn():
        return _chunk_loss_and_grads(model, texts, None)[0]

    grads = model.zero_grads()
    _chunk_loss_and_grads(model, texts, grads)
    report = grad_check(loss_fn, params, grads, eps=1e-5, tol=1e-4,
                        max_coords=200, seed=0)
    assert report.passed, report.per_param


def test_lm_single_token_chunk_has_no_targets():
    model = tiny_model()
    loss, n = _chunk_loss_and_grads(model, ["aa"], None)
    assert (loss, n) == (0.0, 0)


# ---------------------------------------------------------------------------
# container round-trip
# ---------------------------------------------------------------------------

def test_lm_container_roundtrip(tmp_path):
    corpus = corpus_of([["a", "b", "c"] * 30])
    cfg = LmConfig(layers=2, hidden=4, seq_len=15, batch=2, epochs=1, lr=0.01,
                   lm_vocab=8)
    model = train_lm(corpus, cfg, seed=6)
    path = tmp_path / "lm.sclm"
    save_lm(path, model, {"cmd": "train-lm"}, seed=6)
    loaded, header = load_lm(path)
    assert header["seed"] == 6
    assert loaded.config.layers == 2 and loaded.config.hidden == 4
    assert loaded.vocab == model.vocab
    s1 = layer_states(model, ["a", "b"])
    s2 = layer_states(loaded, ["a", "b"])
    # storage is float32, so states agree to float32 precision
    assert np.allclose(s1[0].stack, s2[0].stack, atol=1e-5)
