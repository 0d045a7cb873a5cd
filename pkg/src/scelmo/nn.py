"""Minimal numerical substrate: LSTM cell, character convolution encoder,
softmax cross-entropy, dropout, and RMSProp.

Everything is plain numpy (float64) with handwritten backward passes; all
randomized pieces (init, dropout masks) consume explicit seeded generators.
Matrices are dense 2-D arrays throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TrainingError


def assert_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise TrainingError(f"non-finite values in {name}")


def sigmoid(x):
    # Clip keeps exp() in range; sigmoid saturates long before +-40 anyway.
    return 1.0 / (1.0 + np.exp(-np.clip(x, -40.0, 40.0)))


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int,
           shape: tuple[int, ...]) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


# ---------------------------------------------------------------------------
# Softmax cross-entropy
# ---------------------------------------------------------------------------

def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_logits(logits: np.ndarray, targets: np.ndarray):
    """Summed NLL of target rows plus the gradient wrt logits.

    logits: (N, V); targets: (N,) int ids. Computed via log-sum-exp, so the
    loss of a uniform softmax over V classes is exactly log(V) per row.
    """
    logits = np.atleast_2d(logits)
    targets = np.atleast_1d(targets)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=-1))
    rows = np.arange(logits.shape[0])
    loss = float(np.sum(logz - shifted[rows, targets]))
    dlogits = softmax(logits)
    dlogits[rows, targets] -= 1.0
    assert_finite("cross_entropy", np.asarray(loss))
    return loss, dlogits


# ---------------------------------------------------------------------------
# Dropout (inverted scaling; identity at rate 0 and at eval time)
# ---------------------------------------------------------------------------

def dropout_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    if rate < 0.0 or rate >= 1.0:
        raise TrainingError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(shape)
    return (rng.random(shape) >= rate) / (1.0 - rate)


def apply_dropout(x: np.ndarray, rate: float, rng: np.random.Generator | None,
                  train: bool) -> np.ndarray:
    if not train or rate == 0.0 or rng is None:
        return x
    return x * dropout_mask(rng, x.shape, rate)


# ---------------------------------------------------------------------------
# RMSProp
# ---------------------------------------------------------------------------

def rmsprop_update(param: np.ndarray, grad: np.ndarray, cache: np.ndarray,
                   lr: float = 0.001, decay: float = 0.9, eps: float = 1e-8) -> np.ndarray:
    """In-place update: cache = decay*cache + (1-decay)*g^2; p -= lr*g/(sqrt(cache)+eps)."""
    cache *= decay
    cache += (1.0 - decay) * grad * grad
    param -= lr * grad / (np.sqrt(cache) + eps)
    return param


class RmsProp:
    """Per-tensor cache state over a named parameter dict."""

    def __init__(self, params: dict[str, np.ndarray], lr: float = 0.001,
                 decay: float = 0.9, eps: float = 1e-8):
        self.lr, self.decay, self.eps = lr, decay, eps
        self.caches = {name: np.zeros_like(p) for name, p in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, p in params.items():
            g = grads[name]
            assert_finite(f"grad[{name}]", g)
            rmsprop_update(p, g, self.caches[name], self.lr, self.decay, self.eps)


# ---------------------------------------------------------------------------
# LSTM
# ---------------------------------------------------------------------------

@dataclass
class LstmParams:
    """Gate blocks packed row-wise as [input; forget; candidate; output]."""

    wx: np.ndarray  # (4H, Din)
    wh: np.ndarray  # (4H, H)
    b: np.ndarray   # (4H,)

    @property
    def hidden(self) -> int:
        return self.wh.shape[1]

    @classmethod
    def init(cls, rng: np.random.Generator, input_dim: int, hidden: int) -> "LstmParams":
        wx = glorot(rng, input_dim, hidden, (4 * hidden, input_dim))
        wh = glorot(rng, hidden, hidden, (4 * hidden, hidden))
        b = np.zeros(4 * hidden)
        b[hidden:2 * hidden] = 1.0  # forget-gate bias starts open
        return cls(wx=wx, wh=wh, b=b)


def _gates(p: LstmParams, pre: np.ndarray):
    h = p.hidden
    i = sigmoid(pre[0:h])
    f = sigmoid(pre[h:2 * h])
    g = np.tanh(pre[2 * h:3 * h])
    o = sigmoid(pre[3 * h:4 * h])
    return i, f, g, o


def lstm_step(p: LstmParams, x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray):
    """One recurrence step; returns (h, c)."""
    if x.shape[-1] != p.wx.shape[1] or h_prev.shape[-1] != p.hidden:
        raise TrainingError(
            f"lstm_step shape mismatch: x{x.shape} wx{p.wx.shape} h{h_prev.shape}")
    pre = p.wx @ x + p.wh @ h_prev + p.b
    i, f, g, o = _gates(p, pre)
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c


def lstm_seq_forward(p: LstmParams, xs: np.ndarray):
    """Run a (T, Din) sequence from zero state; returns (hs, cache)."""
    T = xs.shape[0]
    H = p.hidden
    ax = xs @ p.wx.T  # input projections for every step at once
    hs = np.zeros((T, H))
    cache = {"xs": xs, "i": np.zeros((T, H)), "f": np.zeros((T, H)),
             "g": np.zeros((T, H)), "o": np.zeros((T, H)),
             "c": np.zeros((T, H)), "tc": np.zeros((T, H))}
    h = np.zeros(H)
    c = np.zeros(H)
    for t in range(T):
        pre = ax[t] + p.wh @ h + p.b
        i, f, g, o = _gates(p, pre)
        c_prev = c
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        cache["i"][t], cache["f"][t], cache["g"][t], cache["o"][t] = i, f, g, o
        cache["c"][t], cache["tc"][t] = c, tc
        hs[t] = h
    return hs, cache


def lstm_seq_backward(p: LstmParams, cache: dict, hs: np.ndarray, dhs: np.ndarray):
    """Backprop through time. Returns (dxs, grads dict with wx/wh/b)."""
    xs = cache["xs"]
    T, H = dhs.shape
    dwx = np.zeros_like(p.wx)
    dwh = np.zeros_like(p.wh)
    db = np.zeros_like(p.b)
    dxs = np.zeros_like(xs)
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    for t in range(T - 1, -1, -1):
        i, f, g, o = cache["i"][t], cache["f"][t], cache["g"][t], cache["o"][t]
        tc = cache["tc"][t]
        c_prev = cache["c"][t - 1] if t > 0 else np.zeros(H)
        h_prev = hs[t - 1] if t > 0 else np.zeros(H)
        dh = dhs[t] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dc_next = dc * f
        dpre = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g * g),
            do * o * (1.0 - o),
        ])
        dwx += np.outer(dpre, xs[t])
        dwh += np.outer(dpre, h_prev)
        db += dpre
        dxs[t] = p.wx.T @ dpre
        dh_next = p.wh.T @ dpre
    return dxs, {"wx": dwx, "wh": dwh, "b": db}


# ---------------------------------------------------------------------------
# Character convolution encoder
# ---------------------------------------------------------------------------

CHAR_BOW = 256
CHAR_EOW = 257
CHAR_PAD = 258
N_CHARS = 259

CONV_WIDTHS = (1, 2, 3, 4)
CONV_FILTERS = (16, 16, 32, 32)
CHAR_EMB_DIM = 16
MAX_CHARS = 50


@dataclass
class CharConvParams:
    """Byte embeddings, per-width conv filters, and a projection to the output dim.

    Per-token pipeline: embed chars, convolve at widths 1..4, max-pool over
    positions, tanh, project. Context-free by construction: equal token texts
    always produce equal vectors.
    """

    emb: np.ndarray                 # (N_CHARS, CHAR_EMB_DIM)
    filters: list[np.ndarray]       # per width: (w * CHAR_EMB_DIM, F_w)
    biases: list[np.ndarray]        # per width: (F_w,)
    proj_w: np.ndarray              # (sum F_w, out_dim)
    proj_b: np.ndarray              # (out_dim,)
    max_chars: int = MAX_CHARS

    @property
    def out_dim(self) -> int:
        return self.proj_w.shape[1]

    @classmethod
    def init(cls, rng: np.random.Generator, out_dim: int,
             max_chars: int = MAX_CHARS) -> "CharConvParams":
        emb = rng.uniform(-0.1, 0.1, size=(N_CHARS, CHAR_EMB_DIM))
        filters, biases = [], []
        for w, f in zip(CONV_WIDTHS, CONV_FILTERS):
            filters.append(glorot(rng, w * CHAR_EMB_DIM, f, (w * CHAR_EMB_DIM, f)))
            biases.append(np.zeros(f))
        total = sum(CONV_FILTERS)
        proj_w = glorot(rng, total, out_dim, (total, out_dim))
        proj_b = np.zeros(out_dim)
        return cls(emb=emb, filters=filters, biases=biases,
                   proj_w=proj_w, proj_b=proj_b, max_chars=max_chars)

    def param_dict(self, prefix: str = "char") -> dict[str, np.ndarray]:
        out = {f"{prefix}.emb": self.emb, f"{prefix}.proj_w": self.proj_w,
               f"{prefix}.proj_b": self.proj_b}
        for k, (w, b) in enumerate(zip(self.filters, self.biases)):
            out[f"{prefix}.w{k}"] = w
            out[f"{prefix}.b{k}"] = b
        return out


def char_ids(text: str, max_chars: int) -> np.ndarray:
    body = list(text.encode("utf-8"))[:max_chars - 2]
    ids = [CHAR_BOW] + body + [CHAR_EOW]
    while len(ids) < max(CONV_WIDTHS):  # widest filter needs one valid position
        ids.append(CHAR_PAD)
    return np.array(ids, dtype=np.int64)


def char_conv_encode(p: CharConvParams, text: str, want_cache: bool = False):
    """Encode one token text to a vector; optionally return the backward cache."""
    if not text:
        raise TrainingError("char_conv_encode requires nonempty token text")
    ids = char_ids(text, p.max_chars)
    E = p.emb[ids]  # (T, C)
    T = E.shape[0]
    pooled_parts = []
    cache_parts = []
    for w, filt, bias in zip(CONV_WIDTHS, p.filters, p.biases):
        P = T - w + 1
        windows = np.lib.stride_tricks.sliding_window_view(E, (w, E.shape[1]))
        windows = windows.reshape(P, w * E.shape[1])
        scores = windows @ filt + bias  # (P, F)
        arg = scores.argmax(axis=0)
        pooled = scores[arg, np.arange(scores.shape[1])]
        pooled_parts.append(pooled)
        cache_parts.append((windows, arg))
    feat = np.concatenate(pooled_parts)
    act = np.tanh(feat)
    vec = act @ p.proj_w + p.proj_b
    if not want_cache:
        return vec
    return vec, {"ids": ids, "T": T, "act": act, "parts": cache_parts}


def char_conv_backward(p: CharConvParams, cache: dict, dvec: np.ndarray,
                       grads: dict[str, np.ndarray], prefix: str = "char") -> None:
    """Accumulate parameter gradients for one encoded token."""
    ids, T, act = cache["ids"], cache["T"], cache["act"]
    grads[f"{prefix}.proj_w"] += np.outer(act, dvec)
    grads[f"{prefix}.proj_b"] += dvec
    dact = p.proj_w @ dvec
    dfeat = dact * (1.0 - act * act)
    dE = np.zeros((T, CHAR_EMB_DIM))
    offset = 0
    for k, (w, filt) in enumerate(zip(CONV_WIDTHS, p.filters)):
        F = filt.shape[1]
        dpooled = dfeat[offset:offset + F]
        offset += F
        windows, arg = cache["parts"][k]
        P = windows.shape[0]
        dscores = np.zeros((P, F))
        dscores[arg, np.arange(F)] = dpooled
        grads[f"{prefix}.w{k}"] += windows.T @ dscores
        grads[f"{prefix}.b{k}"] += dscores.sum(axis=0)
        dwin = (dscores @ filt.T).reshape(P, w, CHAR_EMB_DIM)
        for off in range(w):
            dE[off:off + P] += dwin[:, off, :]
    np.add.at(grads[f"{prefix}.emb"], ids, dE)
