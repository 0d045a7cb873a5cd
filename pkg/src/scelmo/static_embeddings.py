"""Static embedding providers: frozen random, CBOW, and subword (trigram) tables.

CBOW and the subword variant train with negative sampling over per-file
streams of identifier/literal names; the noise distribution is the unigram
distribution raised to 0.75. Training is single-threaded and deterministic
under a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingError
from .serialization import MAGIC_EMBEDDINGS, read_container, write_container
from .tokens import Corpus
from .vocab import MISSING_ID, RESERVED_ROWS, UNK_ID, Vocabulary

BOUNDARY_START = "<"
BOUNDARY_END = ">"


def word_trigrams(word: str) -> list[str]:
    """Character trigrams of a word wrapped in boundary markers."""
    padded = BOUNDARY_START + word + BOUNDARY_END
    return [padded[i:i + 3] for i in range(len(padded) - 2)]


@dataclass
class SubwordIndex:
    """Trigram -> row mapping with a trainable trigram matrix."""

    trigrams: list[str]
    matrix: np.ndarray
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index = {t: i for i, t in enumerate(self.trigrams)}

    def ids_of(self, word: str) -> list[int]:
        return [self._index[t] for t in word_trigrams(word) if t in self._index]

    def compose(self, word: str) -> np.ndarray:
        """Sum of known trigram vectors; defined (possibly zero) for any word."""
        ids = self.ids_of(word)
        if not ids:
            return np.zeros(self.matrix.shape[1])
        return self.matrix[ids].sum(axis=0)


@dataclass
class EmbeddingTable:
    """Per-word vectors for a vocabulary, plus an optional subword index."""

    vocab: Vocabulary
    matrix: np.ndarray  # rows = RESERVED_ROWS + len(vocab.entries)
    method: str
    dim: int
    subwords: SubwordIndex | None = None
    epoch_losses: list[float] = field(default_factory=list)

    def vector(self, name: str) -> np.ndarray:
        """Embed one element name (OOV -> UNK row, or trigram composition)."""
        if self.method == "fasttext":
            vec = self.subwords.compose(name)
            if name in self.vocab:
                vec = vec + self.matrix[self.vocab.id_of(name)]
            return vec
        return self.matrix[self.vocab.id_of(name)]

    def missing_vector(self) -> np.ndarray:
        return self.matrix[MISSING_ID]


def embed_element(table: EmbeddingTable, element: str, missing: bool = False) -> np.ndarray:
    """Feature vector for an instance element; the missing flag wins over text."""
    if missing:
        return table.missing_vector()
    return table.vector(element)


def _init_matrix(rng: np.random.Generator, rows: int, dim: int) -> np.ndarray:
    return rng.uniform(-0.5 / dim, 0.5 / dim, size=(rows, dim))


def random_provider(vocab: Vocabulary, dim: int = 200, seed: int = 7) -> EmbeddingTable:
    """Frozen i.i.d. uniform embeddings in [-0.5/dim, 0.5/dim]."""
    rng = np.random.default_rng(seed)
    return EmbeddingTable(vocab=vocab, matrix=_init_matrix(rng, vocab.rows, dim),
                          method="random", dim=dim)


def _name_streams(corpus: Corpus, split: str | None) -> list[list[str]]:
    streams = []
    for rec in corpus.split_files(split):
        names = [t.name() for t in rec.tokens if t.kind in ("identifier", "literal")]
        if len(names) >= 2:
            streams.append(names)
    return streams


def _noise_table(vocab: Vocabulary) -> np.ndarray:
    freqs = np.array([freq for _, freq in vocab.entries], dtype=np.float64)
    probs = freqs ** 0.75
    return np.cumsum(probs / probs.sum())


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def cbow_pair_loss_grads(w_in, w_out, context_rows, center_id, negative_ids):
    """Negative-sampling CBOW loss and sparse gradients for one training pair.

    ``context_rows`` are the input-side vectors of the context (already
    composed for the subword variant). Returns (loss, d_context, d_out_rows)
    where d_out_rows maps output row id -> gradient.
    """
    vbar = context_rows.mean(axis=0)
    loss = 0.0
    dvbar = np.zeros_like(vbar)
    d_out: dict[int, np.ndarray] = {}
    for wid, label in [(center_id, 1.0)] + [(n, 0.0) for n in negative_ids]:
        score = _sigmoid(w_out[wid] @ vbar)
        loss -= np.log(max(score if label else 1.0 - score, 1e-12))
        g = score - label
        d_out[wid] = d_out.get(wid, 0.0) + g * vbar
        dvbar += g * w_out[wid]
    return loss, dvbar / len(context_rows), d_out


def _draw_negatives(rng: np.random.Generator, cumdist: np.ndarray,
                    count: int, center_id: int) -> list[int]:
    draws = np.searchsorted(cumdist, rng.random(count)) + RESERVED_ROWS
    out = []
    for d in draws:
        if d == center_id:  # one redraw, then give up (bias is negligible)
            d = int(np.searchsorted(cumdist, rng.random()) + RESERVED_ROWS)
        if d != center_id:
            out.append(int(d))
    return out


def _train_ns(corpus: Corpus, vocab: Vocabulary, dim: int, window: int, epochs: int,
              lr: float, negatives: int, seed: int, split: str | None,
              subword: bool) -> EmbeddingTable:
    if window < 1:
        raise TrainingError(f"window must be >= 1, got {window}")
    if epochs < 1 or negatives < 1 or dim < 1:
        raise TrainingError("epochs, negatives, and dim must all be >= 1")
    streams = _name_streams(corpus, split)
    if not streams:
        raise TrainingError(f"no trainable token streams in split {split!r}")

    rng = np.random.default_rng(seed)
    w_in = _init_matrix(rng, vocab.rows, dim)
    w_out = np.zeros((vocab.rows, dim))
    cumdist = _noise_table(vocab)

    index: SubwordIndex | None = None
    if subword:
        trigram_set: set[str] = set()
        for stream in streams:
            for name in stream:
                trigram_set.update(word_trigrams(name))
        trigrams = sorted(trigram_set)
        index = SubwordIndex(trigrams=trigrams, matrix=_init_matrix(rng, len(trigrams), dim))

    total_centers = sum(len(s) for s in streams) * epochs
    step = 0
    losses = []
    for epoch in range(epochs):
        epoch_loss = 0.0
        epoch_pairs = 0
        for stream in streams:
            ids = [vocab.id_of(name) for name in stream]
            trig_ids = [index.ids_of(name) for name in stream] if subword else None
            for pos, center_id in enumerate(ids):
                step += 1
                if center_id == UNK_ID:
                    continue  # centers must be in-vocab; contexts may be UNK
                lo, hi = max(0, pos - window), min(len(ids), pos + window + 1)
                ctx = [j for j in range(lo, hi) if j != pos]
                if not ctx:
                    continue
                if subword:
                    rows = np.stack([
                        (w_in[ids[j]] if ids[j] != UNK_ID else 0.0) + index.matrix[trig_ids[j]].sum(axis=0)
                        if trig_ids[j] else
                        (w_in[ids[j]] if ids[j] != UNK_ID else np.zeros(dim))
                        for j in ctx])
                else:
                    rows = w_in[[ids[j] for j in ctx]]
                negs = _draw_negatives(rng, cumdist, negatives, center_id)
                loss, d_ctx, d_out = cbow_pair_loss_grads(w_in, w_out, rows, center_id, negs)
                cur_lr = lr * max(1e-4, 1.0 - step / total_centers)
                for wid, grad in d_out.items():
                    w_out[wid] -= cur_lr * grad
                for j in ctx:
                    if subword:
                        if ids[j] != UNK_ID:
                            w_in[ids[j]] -= cur_lr * d_ctx
                        if trig_ids[j]:
                            index.matrix[trig_ids[j]] -= cur_lr * d_ctx
                    else:
                        w_in[ids[j]] -= cur_lr * d_ctx
                epoch_loss += loss
                epoch_pairs += 1
        mean_loss = epoch_loss / max(epoch_pairs, 1)
        if not np.isfinite(mean_loss):
            raise TrainingError(f"embedding training diverged at epoch {epoch + 1}: "
                                f"mean loss {mean_loss}")
        losses.append(float(mean_loss))
    method = "fasttext" if subword else "cbow"
    return EmbeddingTable(vocab=vocab, matrix=w_in, method=method, dim=dim,
                          subwords=index, epoch_losses=losses)


def train_cbow(corpus: Corpus, vocab: Vocabulary, dim: int = 200, window: int = 5,
               epochs: int = 5, lr: float = 0.05, negatives: int = 5, seed: int = 7,
               split: str | None = "train") -> EmbeddingTable:
    return _train_ns(corpus, vocab, dim, window, epochs, lr, negatives, seed, split,
                     subword=False)


def train_fasttext(corpus: Corpus, vocab: Vocabulary, dim: int = 200, window: int = 5,
                   epochs: int = 5, lr: float = 0.05, negatives: int = 5, seed: int = 7,
                   split: str | None = "train") -> EmbeddingTable:
    """CBOW with character-trigram subwords: word vector + trigram sum."""
    return _train_ns(corpus, vocab, dim, window, epochs, lr, negatives, seed, split,
                     subword=True)


def save_embeddings(path, table: EmbeddingTable, config: dict, seed: int | None) -> None:
    header = {
        "seed": seed, "config": config, "method": table.method, "dim": table.dim,
        "vocab": table.vocab.to_json(), "epoch_losses": table.epoch_losses,
    }
    arrays = {"matrix": table.matrix}
    if table.subwords is not None:
        header["trigrams"] = table.subwords.trigrams
        arrays["trigram_matrix"] = table.subwords.matrix
    write_container(path, MAGIC_EMBEDDINGS, header, arrays)


def load_embeddings(path) -> tuple[EmbeddingTable, dict]:
    header, arrays = read_container(path, MAGIC_EMBEDDINGS)
    vocab = Vocabulary.from_json(header["vocab"])
    subwords = None
    if "trigrams" in header:
        subwords = SubwordIndex(trigrams=list(header["trigrams"]),
                                matrix=arrays["trigram_matrix"])
    table = EmbeddingTable(vocab=vocab, matrix=arrays["matrix"], method=header["method"],
                           dim=int(header["dim"]), subwords=subwords,
                           epoch_losses=list(header.get("epoch_losses", [])))
    return table, header
