"""Bidirectional LSTM language model over source-token streams.

Per-token inputs come from a character convolution (so any surface text,
in-vocabulary or not, gets a well-defined representation) projected to twice
the per-direction hidden size. Each direction owns its LSTM stack; the
character encoder and the output softmax are shared by both directions. The
softmax ranges over the most frequent token texts plus UNK.

After training, every token yields a stack of L+1 equal-width vectors: the
context-free input representation plus, per layer, the concatenated
forward/backward hidden states. A weighted collapse of the stack produces the
final embedding.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import TrainingError
from .nn import (CharConvParams, LstmParams, char_conv_backward, char_conv_encode,
                 cross_entropy_logits, lstm_seq_backward, lstm_seq_forward, RmsProp)
from .serialization import MAGIC_LM, read_container, write_container
from .tokens import Corpus

UNK_TOKEN = "<unk>"


@dataclass
class LmConfig:
    layers: int = 2
    hidden: int = 100          # per direction; stack entries have width 2*hidden
    seq_len: int = 100
    batch: int = 16
    epochs: int = 5
    lr: float = 0.001
    lm_vocab: int = 50000      # most-frequent tokens in the softmax, plus UNK
    max_chars: int = 50

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in
                ("layers", "hidden", "seq_len", "batch", "epochs", "lr",
                 "lm_vocab", "max_chars")}

    @classmethod
    def from_json(cls, d: dict) -> "LmConfig":
        return cls(**{k: d[k] for k in cls().to_json() if k in d})


@dataclass
class LayerStates:
    """Per-token state stack: row 0 is the input representation, rows 1..L
    are concatenated [forward; backward] layer states. Shape (L+1, 2H)."""

    stack: np.ndarray


@dataclass
class CollapseWeights:
    """Per-layer mixing weights plus a global scale."""

    s: tuple
    gamma: float = 1.0

    @classmethod
    def equal(cls, layers: int, gamma: float = 1.0) -> "CollapseWeights":
        n = layers + 1
        return cls(s=tuple(1.0 / n for _ in range(n)), gamma=gamma)

    @classmethod
    def top_layer(cls, layers: int, gamma: float = 1.0) -> "CollapseWeights":
        s = [0.0] * (layers + 1)
        s[-1] = 1.0
        return cls(s=tuple(s), gamma=gamma)

    @classmethod
    def from_raw(cls, raw, gamma: float = 1.0) -> "CollapseWeights":
        raw = np.asarray(raw, dtype=np.float64)
        e = np.exp(raw - raw.max())
        return cls(s=tuple(e / e.sum()), gamma=gamma)


def collapse(states: LayerStates, w: CollapseWeights) -> np.ndarray:
    """Weighted sum over the state stack, scaled by gamma."""
    stack = states.stack
    if len(w.s) != stack.shape[0]:
        raise TrainingError(
            f"collapse weights have {len(w.s)} entries for {stack.shape[0]} layers")
    return w.gamma * (np.asarray(w.s) @ stack)


class LmModel:
    """Trained bidirectional LM; immutable after training, safe to share."""

    def __init__(self, config: LmConfig, vocab: list[str], char: CharConvParams,
                 fwd: list[LstmParams], bwd: list[LstmParams],
                 w_out: np.ndarray, b_out: np.ndarray):
        self.config = config
        self.vocab = vocab
        self.char = char
        self.fwd = fwd
        self.bwd = bwd
        self.w_out = w_out
        self.b_out = b_out
        self.epoch_losses: list[float] = []
        self._ids = {text: i for i, text in enumerate(vocab)}
        self._char_cache: dict[str, np.ndarray] = {}

    @property
    def state_dim(self) -> int:
        return 2 * self.config.hidden

    def token_id(self, text: str) -> int:
        return self._ids.get(text, 0)

    def params(self) -> dict[str, np.ndarray]:
        out = self.char.param_dict("char")
        for j, layer in enumerate(self.fwd):
            out.update({f"fwd{j}.wx": layer.wx, f"fwd{j}.wh": layer.wh, f"fwd{j}.b": layer.b})
        for j, layer in enumerate(self.bwd):
            out.update({f"bwd{j}.wx": layer.wx, f"bwd{j}.wh": layer.wh, f"bwd{j}.b": layer.b})
        out["out.w"] = self.w_out
        out["out.b"] = self.b_out
        return out

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(p) for name, p in self.params().items()}

    def input_vector(self, text: str) -> np.ndarray:
        vec = self._char_cache.get(text)
        if vec is None:
            vec = char_conv_encode(self.char, text)
            self._char_cache[text] = vec
        return vec

    @classmethod
    def init(cls, config: LmConfig, vocab: list[str], seed: int) -> "LmModel":
        rng = np.random.default_rng(seed)
        width = 2 * config.hidden
        char = CharConvParams.init(rng, out_dim=width, max_chars=config.max_chars)
        fwd, bwd = [], []
        for j in range(config.layers):
            din = width if j == 0 else config.hidden
            fwd.append(LstmParams.init(rng, din, config.hidden))
        for j in range(config.layers):
            din = width if j == 0 else config.hidden
            bwd.append(LstmParams.init(rng, din, config.hidden))
        from .nn import glorot
        w_out = glorot(rng, config.hidden, len(vocab), (len(vocab), config.hidden))
        b_out = np.zeros(len(vocab))
        return cls(config, vocab, char, fwd, bwd, w_out, b_out)


def build_lm_vocab(streams: list[list[str]], lm_vocab: int) -> list[str]:
    counts: Counter = Counter()
    for stream in streams:
        counts.update(stream)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [UNK_TOKEN] + [text for text, _ in ranked[:lm_vocab]]


def token_streams(corpus: Corpus, split: str | None) -> list[list[str]]:
    return [rec.token_texts() for rec in corpus.split_files(split) if rec.tokens]


def chunk_stream(stream: list[str], seq_len: int) -> list[list[str]]:
    return [stream[i:i + seq_len] for i in range(0, len(stream), seq_len)]


def _chunk_loss_and_grads(model: LmModel, texts: list[str],
                          grads: dict[str, np.ndarray] | None):
    """Joint forward+backward NLL of one chunk; optionally accumulates grads.

    Both directions reuse one code path: the backward LM is a forward LM over
    the reversed chunk. Returns (loss_sum, n_targets).
    """
    T = len(texts)
    ids = np.array([model.token_id(t) for t in texts], dtype=np.int64)
    char_caches = {}
    for text in texts:
        if text not in char_caches:
            char_caches[text] = char_conv_encode(model.char, text, want_cache=True)
    X = np.stack([char_caches[t][0] for t in texts])

    def run_direction(layers, inp):
        hs_list, cache_list = [], []
        for layer in layers:
            hs, cache = lstm_seq_forward(layer, inp)
            hs_list.append(hs)
            cache_list.append(cache)
            inp = hs
        return hs_list, cache_list

    hs_f, cache_f = run_direction(model.fwd, X)
    hs_b, cache_b = run_direction(model.bwd, X[::-1])

    loss = 0.0
    n_targets = 0
    dtop_f = np.zeros_like(hs_f[-1])
    dtop_b = np.zeros_like(hs_b[-1])
    rev_ids = ids[::-1]
    if T >= 2:
        logits_f = hs_f[-1][:-1] @ model.w_out.T + model.b_out
        loss_f, dlog_f = cross_entropy_logits(logits_f, ids[1:])
        logits_b = hs_b[-1][:-1] @ model.w_out.T + model.b_out
        loss_b, dlog_b = cross_entropy_logits(logits_b, rev_ids[1:])
        loss = loss_f + loss_b
        n_targets = 2 * (T - 1)
        if grads is not None:
            grads["out.w"] += dlog_f.T @ hs_f[-1][:-1] + dlog_b.T @ hs_b[-1][:-1]
            grads["out.b"] += dlog_f.sum(axis=0) + dlog_b.sum(axis=0)
            dtop_f[:-1] = dlog_f @ model.w_out
            dtop_b[:-1] = dlog_b @ model.w_out

    if grads is None or n_targets == 0:
        return loss, n_targets

    def back_direction(prefix, layers, hs_list, cache_list, dtop):
        d = dtop
        for j in range(len(layers) - 1, -1, -1):
            dxs, g = lstm_seq_backward(layers[j], cache_list[j], hs_list[j], d)
            grads[f"{prefix}{j}.wx"] += g["wx"]
            grads[f"{prefix}{j}.wh"] += g["wh"]
            grads[f"{prefix}{j}.b"] += g["b"]
            d = dxs
        return d

    dX = back_direction("fwd", model.fwd, hs_f, cache_f, dtop_f)
    dXr = back_direction("bwd", model.bwd, hs_b, cache_b, dtop_b)
    dX = dX + dXr[::-1]

    acc: dict[str, np.ndarray] = {}
    for t, text in enumerate(texts):
        if text in acc:
            acc[text] += dX[t]
        else:
            acc[text] = dX[t].copy()
    for text, dvec in acc.items():
        char_conv_backward(model.char, char_caches[text][1], dvec, grads)
    return loss, n_targets


def train_lm(corpus: Corpus, config: LmConfig, seed: int,
             split: str | None = "train") -> LmModel:
    """Train the bidirectional LM; per-epoch mean NLL is kept on the model."""
    streams = token_streams(corpus, split)
    if not streams:
        raise TrainingError(f"no token streams in split {split!r}")
    vocab = build_lm_vocab(streams, config.lm_vocab)
    if len(vocab) < 2:
        raise TrainingError("LM vocabulary must have at least 2 entries")
    model = LmModel.init(config, vocab, seed)

    chunks = []
    for stream in streams:
        chunks.extend(c for c in chunk_stream(stream, config.seq_len) if len(c) >= 2)
    if not chunks:
        raise TrainingError("no trainable chunks (all files shorter than 2 tokens)")

    params = model.params()
    opt = RmsProp(params, lr=config.lr)
    order_rng = np.random.default_rng(seed + 1)
    for epoch in range(config.epochs):
        order = order_rng.permutation(len(chunks))
        epoch_loss = 0.0
        epoch_targets = 0
        for start in range(0, len(order), config.batch):
            batch = order[start:start + config.batch]
            grads = model.zero_grads()
            batch_loss = 0.0
            batch_targets = 0
            for ci in batch:
                loss, n = _chunk_loss_and_grads(model, chunks[ci], grads)
                batch_loss += loss
                batch_targets += n
            if batch_targets == 0:
                continue
            for g in grads.values():
                g /= batch_targets
            opt.step(params, grads)
            epoch_loss += batch_loss
            epoch_targets += batch_targets
        mean_nll = epoch_loss / max(epoch_targets, 1)
        if not np.isfinite(mean_nll):
            raise TrainingError(f"LM training diverged at epoch {epoch + 1}")
        model.epoch_losses.append(float(mean_nll))
    model._char_cache.clear()
    return model


def perplexity(model: LmModel, streams: list[list[str]]) -> float:
    """Joint two-direction per-token perplexity over chunked streams."""
    total, targets = 0.0, 0
    for stream in streams:
        for chunk in chunk_stream(stream, model.config.seq_len):
            if len(chunk) < 2:
                continue
            loss, n = _chunk_loss_and_grads(model, chunk, None)
            total += loss
            targets += n
    if targets == 0:
        raise TrainingError("no evaluable targets for perplexity")
    return float(np.exp(total / targets))


def layer_states(model: LmModel, texts: list[str]) -> list[LayerStates]:
    """State stacks for every token of a sequence (forward pass only)."""
    if not texts:
        return []
    X = np.stack([model.input_vector(t) for t in texts])
    inp = X
    hs_f = []
    for layer in model.fwd:
        hs, _ = lstm_seq_forward(layer, inp)
        hs_f.append(hs)
        inp = hs
    inp = X[::-1]
    hs_b = []
    for layer in model.bwd:
        hs, _ = lstm_seq_forward(layer, inp)
        hs_b.append(hs)
        inp = hs
    T = len(texts)
    L = model.config.layers
    out = []
    for t in range(T):
        stack = np.empty((L + 1, model.state_dim))
        stack[0] = X[t]
        for j in range(L):
            stack[j + 1] = np.concatenate([hs_f[j][t], hs_b[j][T - 1 - t]])
        out.append(LayerStates(stack=stack))
    return out


def save_lm(path, model: LmModel, cli_config: dict, seed: int | None) -> None:
    header = {
        "seed": seed,
        "config": cli_config,
        "lm_config": model.config.to_json(),
        "vocab": model.vocab,
        "epoch_losses": model.epoch_losses,
    }
    write_container(path, MAGIC_LM, header, model.params())


def load_lm(path) -> tuple[LmModel, dict]:
    header, arrays = read_container(path, MAGIC_LM)
    config = LmConfig.from_json(header["lm_config"])
    model = LmModel.init(config, list(header["vocab"]), seed=0)
    for name, p in model.params().items():
        np.copyto(p, arrays[name])
    model.epoch_losses = list(header.get("epoch_losses", []))
    return model, header
