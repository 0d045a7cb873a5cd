"""Corpus loading, exact-duplicate removal, and deterministic splits."""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

from .errors import CorpusError, FormatError
from .serialization import FORMAT_VERSION, MAGIC_STORE, iter_jsonl
from .tokens import Corpus, FileRecord, Token, normalize_kind


def _record_to_file(obj: dict, file_id: int) -> FileRecord | None:
    path = obj.get("path")
    raw_tokens = obj.get("tokens")
    if not isinstance(path, str) or not isinstance(raw_tokens, list):
        return None
    tokens = []
    for i, t in enumerate(raw_tokens):
        if isinstance(t, dict):
            kind, text = t.get("kind", t.get("type")), t.get("text", t.get("value"))
            start, end = t.get("start", -1), t.get("end", -1)
        elif isinstance(t, (list, tuple)) and len(t) >= 2:
            kind, text = t[0], t[1]
            start = t[2] if len(t) > 2 else -1
            end = t[3] if len(t) > 3 else -1
        else:
            return None
        if not isinstance(text, str) or not text:
            return None
        tokens.append(Token(kind=normalize_kind(kind), text=text, index=i,
                            start=int(start), end=int(end)))
    ast = obj.get("ast")
    if not isinstance(ast, dict):
        ast = None
    parse_ok = bool(obj.get("parse_ok", ast is not None))
    return FileRecord(file_id=file_id, path=path, tokens=tokens, ast=ast,
                      parse_ok=parse_ok, split=obj.get("split", "unassigned"))


def load_corpus(path) -> Corpus:
    """Load an exporter JSONL corpus; malformed lines are counted, not fatal."""
    corpus = Corpus()
    for _, obj in iter_jsonl(path):
        if obj is None or "magic" in obj:
            if obj is None:
                corpus.skipped_lines += 1
            continue
        rec = _record_to_file(obj, len(corpus.files))
        if rec is None:
            corpus.skipped_lines += 1
            continue
        corpus.files.append(rec)
    if not corpus.files:
        raise CorpusError(f"empty corpus: no parseable records in {path}")
    return corpus


def _dedup_key(rec: FileRecord) -> str:
    h = hashlib.sha256()
    for tok in rec.tokens:
        h.update(tok.text.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


def deduplicate(corpus: Corpus) -> Corpus:
    """Keep one file per identical token-text sequence (lexicographically-first path).

    Survivors keep their original relative order; ids are reassigned densely.
    Idempotent by construction.
    """
    survivor_path: dict[str, str] = {}
    for rec in corpus.files:
        key = _dedup_key(rec)
        if key not in survivor_path or rec.path < survivor_path[key]:
            survivor_path[key] = rec.path
    out = Corpus(skipped_lines=corpus.skipped_lines)
    seen: set[str] = set()
    for rec in corpus.files:
        key = _dedup_key(rec)
        if key in seen or rec.path != survivor_path[key]:
            continue
        seen.add(key)
        out.files.append(rec)
    out.reindex()
    return out


def _rank_digest(seed: int, text: str) -> bytes:
    return hashlib.sha256(f"{seed}\x00{text}".encode("utf-8")).digest()


def split_corpus(corpus: Corpus, train_frac: float, seed: int,
                 by_project: bool = False) -> Corpus:
    """Assign train/valid tags; deterministic in (seed, file paths).

    Files are ranked by a seeded hash of their path and the first
    round(n * train_frac) become training files, so the realized fraction is
    exact. With ``by_project`` whole path-prefix groups move together.
    """
    if not 0.0 < train_frac < 1.0:
        raise CorpusError(f"train_frac must be in (0, 1), got {train_frac}")
    n = len(corpus.files)
    if n < 2:
        raise CorpusError("cannot split a corpus with fewer than 2 files")
    target = int(n * train_frac + 0.5)
    target = min(max(target, 1), n - 1)

    if by_project:
        projects: dict[str, list[FileRecord]] = {}
        for rec in corpus.files:
            projects.setdefault(rec.path.split("/", 1)[0], []).append(rec)
        if len(projects) < 2:
            raise CorpusError("--by-project needs at least 2 distinct path prefixes")
        ranked = sorted(projects, key=lambda p: (_rank_digest(seed, p), p))
        assigned = 0
        train_projects = set()
        for proj in ranked:
            if assigned >= target:
                break
            train_projects.add(proj)
            assigned += len(projects[proj])
        if assigned == n:  # keep validation nonempty
            train_projects.discard(ranked[len(train_projects) - 1])
        for rec in corpus.files:
            rec.split = "train" if rec.path.split("/", 1)[0] in train_projects else "valid"
        return corpus

    ranked = sorted(corpus.files, key=lambda r: (_rank_digest(seed, r.path), r.path))
    train_set = {r.path for r in ranked[:target]}
    for rec in corpus.files:
        rec.split = "train" if rec.path in train_set else "valid"
    return corpus


def tag_all(corpus: Corpus, split: str) -> Corpus:
    for rec in corpus.files:
        rec.split = split
    return corpus


# ---------------------------------------------------------------------------
# Corpus store ("SCBD"): magic, version, header, then length-prefixed records.
# ---------------------------------------------------------------------------

def _file_record_json(rec: FileRecord) -> dict:
    return {
        "file_id": rec.file_id,
        "path": rec.path,
        "split": rec.split,
        "parse_ok": rec.parse_ok,
        "tokens": [[t.kind, t.text, t.start, t.end] for t in rec.tokens],
        "ast": rec.ast,
    }


def write_store(path, corpus: Corpus, config: dict, seed: int | None) -> None:
    header = {
        "magic": MAGIC_STORE,
        "version": FORMAT_VERSION,
        "seed": seed,
        "config": config,
        "files": len(corpus.files),
        "skipped_lines": corpus.skipped_lines,
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":"),
                        ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC_STORE.encode("ascii"))
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(hbytes)))
        fh.write(hbytes)
        for rec in corpus.files:
            blob = json.dumps(_file_record_json(rec), sort_keys=True,
                              separators=(",", ":"), ensure_ascii=False).encode("utf-8")
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)


def read_store(path) -> tuple[Corpus, dict]:
    path = Path(path)
    with open(path, "rb") as fh:
        got = fh.read(4)
        if got != MAGIC_STORE.encode("ascii"):
            raise FormatError(f"{path}: expected magic {MAGIC_STORE!r}, found {got!r}")
        version = struct.unpack("<I", fh.read(4))[0]
        if version > FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported store version {version}")
        hlen = struct.unpack("<Q", fh.read(8))[0]
        header = json.loads(fh.read(hlen).decode("utf-8"))
        corpus = Corpus(skipped_lines=header.get("skipped_lines", 0))
        while True:
            raw = fh.read(4)
            if not raw:
                break
            (rlen,) = struct.unpack("<I", raw)
            obj = json.loads(fh.read(rlen).decode("utf-8"))
            tokens = [Token(kind=k, text=t, index=i, start=s, end=e)
                      for i, (k, t, s, e) in enumerate(obj["tokens"])]
            corpus.files.append(FileRecord(
                file_id=obj["file_id"], path=obj["path"], tokens=tokens,
                ast=obj.get("ast"), parse_ok=obj.get("parse_ok", True),
                split=obj.get("split", "unassigned")))
    return corpus, header
