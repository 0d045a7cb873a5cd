import pytest

from scelmo import synth
from scelmo.ingest import load_corpus
from scelmo.tokens import Corpus


@pytest.fixture
def corpus_from_records(tmp_path):
    """Write exporter-shaped records to disk and load them back as a Corpus."""

    def build(records, name="corpus.jsonl") -> Corpus:
        path = tmp_path / name
        synth.write_corpus(records, path)
        return load_corpus(path)

    return build


def simple_file(path: str, texts: list[str]) -> dict:
    """Exporter record with identifier tokens only and no AST (LM/vocab tests)."""
    tokens = []
    pos = 0
    for t in texts:
        tokens.append({"kind": "Identifier", "text": t, "start": pos, "end": pos + len(t)})
        pos += len(t) + 1
    return {"path": path, "tokens": tokens, "ast": None, "parse_ok": False}
