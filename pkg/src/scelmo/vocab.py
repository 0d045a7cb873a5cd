"""Fixed-size vocabulary over identifier and literal tokens."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import CorpusError
from .tokens import Corpus

UNK_ID = 0
MISSING_ID = 1
RESERVED_ROWS = 2  # UNK and MISSING are never evicted


@dataclass
class Vocabulary:
    """Most-frequent token names, descending frequency, lexicographic tie-break.

    Row ids are dense: 0 = UNK, 1 = MISSING, entries start at 2.
    """

    entries: list[tuple[str, int]]
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index = {text: RESERVED_ROWS + i for i, (text, _) in enumerate(self.entries)}

    @property
    def rows(self) -> int:
        return RESERVED_ROWS + len(self.entries)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def id_of(self, name: str) -> int:
        return self._index.get(name, UNK_ID)

    def to_json(self) -> list[list]:
        return [[text, freq] for text, freq in self.entries]

    @classmethod
    def from_json(cls, data) -> "Vocabulary":
        return cls(entries=[(text, int(freq)) for text, freq in data])


def name_counts(corpus: Corpus, split: str | None = "train") -> Counter:
    counts: Counter = Counter()
    for rec in corpus.split_files(split):
        for tok in rec.tokens:
            if tok.kind in ("identifier", "literal"):
                counts[tok.name()] += 1
    return counts


def build_vocabulary(corpus: Corpus, v_max: int = 10000,
                     split: str | None = "train") -> Vocabulary:
    """Top ``v_max`` identifier/literal names counted over one split."""
    counts = name_counts(corpus, split)
    if not counts:
        raise CorpusError(f"no identifier/literal tokens in split {split!r}")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(entries=ranked[:v_max])
