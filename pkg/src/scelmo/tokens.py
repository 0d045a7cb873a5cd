"""Token and file-record containers shared by every pipeline stage.

Token streams arrive from the exporter shim as esprima-style records; here
they are normalized to five coarse lexical categories and literal texts are
canonicalized so that token-level counts and AST-level element names share
one string space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

TOKEN_KINDS = ("identifier", "literal", "keyword", "punctuator", "other")

# esprima token type tags -> coarse category; lookup is case-insensitive so
# already-normalized streams pass through unchanged.
_KIND_MAP = {
    "identifier": "identifier",
    "keyword": "keyword",
    "punctuator": "punctuator",
    "string": "literal",
    "numeric": "literal",
    "boolean": "literal",
    "null": "literal",
    "regularexpression": "literal",
    "template": "literal",
    "literal": "literal",
    "other": "other",
}

_STRING_ESCAPES = {
    "n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f",
    "v": "\v", "0": "\0", "'": "'", '"': '"', "\\": "\\", "`": "`",
}


def normalize_kind(raw: str) -> str:
    return _KIND_MAP.get(str(raw).lower(), "other")


def canonical_number(value) -> str:
    """Shortest round-trip decimal; integral values below 1e16 print as ints."""
    if isinstance(value, bool):  # bool is an int subclass; guard first
        return "true" if value else "false"
    if isinstance(value, int):
        if abs(value) < 10 ** 16:
            return str(value)
        value = float(value)
    if float(value).is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


def unescape_js_string(body: str) -> str:
    """Approximate JS string-escape semantics (enough for \\n, \\uXXXX, \\x41...)."""
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch != "\\" or i + 1 >= len(body):
            out.append(ch)
            i += 1
            continue
        esc = body[i + 1]
        if esc in _STRING_ESCAPES:
            out.append(_STRING_ESCAPES[esc])
            i += 2
        elif esc == "x" and i + 3 < len(body) + 1:
            try:
                out.append(chr(int(body[i + 2:i + 4], 16)))
                i += 4
            except ValueError:
                out.append(esc)
                i += 2
        elif esc == "u":
            if i + 2 < len(body) and body[i + 2] == "{":
                close = body.find("}", i + 3)
                if close > 0:
                    try:
                        out.append(chr(int(body[i + 3:close], 16)))
                        i = close + 1
                        continue
                    except ValueError:
                        pass
                out.append(esc)
                i += 2
            else:
                try:
                    out.append(chr(int(body[i + 2:i + 6], 16)))
                    i += 6
                except ValueError:
                    out.append(esc)
                    i += 2
        elif esc in "\n\r":  # line continuation
            i += 2
        else:
            out.append(esc)
            i += 2
    return "".join(out)


def literal_token_name(text: str) -> str:
    """Canonical name for a literal token, matching the AST-side stringification.

    String literals drop their quotes and resolve escapes, numbers go through
    ``canonical_number``, and everything else (regex, templates) keeps its raw
    surface text.
    """
    if not text:
        return text
    first = text[0]
    if first in "'\"":
        return unescape_js_string(text[1:-1]) if len(text) >= 2 else text
    if text in ("true", "false", "null"):
        return text
    if first == "/" or first == "`":
        return text
    cleaned = text.replace("_", "")
    try:
        return canonical_number(int(cleaned, 0))
    except ValueError:
        pass
    try:
        return canonical_number(float(cleaned))
    except ValueError:
        return text


@dataclass
class Token:
    """One lexical token: coarse kind, surface text, and position in its file."""

    kind: str
    text: str
    index: int
    start: int = -1
    end: int = -1

    def name(self) -> str:
        """Vocabulary-space name: literals canonicalized, others raw text."""
        if self.kind == "literal":
            return literal_token_name(self.text)
        return self.text


@dataclass
class FileRecord:
    file_id: int
    path: str
    tokens: list[Token]
    ast: dict | None = None
    parse_ok: bool = True
    split: str = "unassigned"

    def token_texts(self) -> list[str]:
        return [t.text for t in self.tokens]


@dataclass
class Corpus:
    """An ordered collection of files; ids are dense 0..n-1."""

    files: list[FileRecord] = field(default_factory=list)
    skipped_lines: int = 0

    def __len__(self) -> int:
        return len(self.files)

    def by_id(self, file_id: int) -> FileRecord:
        return self.files[file_id]

    def split_files(self, split: str | None) -> list[FileRecord]:
        if split is None or split == "all":
            return list(self.files)
        return [f for f in self.files if f.split == split]

    def reindex(self) -> None:
        for i, f in enumerate(self.files):
            f.file_id = i
