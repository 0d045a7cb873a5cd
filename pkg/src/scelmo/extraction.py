"""Name heuristic over ESTree expression nodes and candidate-instance extraction.

Candidate instances are function calls with exactly two arguments (the
swapped-argument pattern) and binary/logical expressions (the wrong-operator
and wrong-operand patterns). Each instance records the names of its elements,
the token positions used by contextual feature providers, and coarse operand
types.
"""

from __future__ import annotations

import random
from bisect import bisect_left
from dataclasses import dataclass, field, asdict

from .errors import ScelmoError
from .tokens import FileRecord, canonical_number

PATTERNS = ("swapped_args", "wrong_operator", "wrong_operand")
CALL_SLOTS = ("base", "callee", "arg1", "arg2")
BINOP_SLOTS = ("left", "op", "right")
MISSING_NAME = ""  # reserved placeholder for an absent base object

CALL_PATTERNS = {"swapped_args"}
BINOP_PATTERNS = {"wrong_operator", "wrong_operand"}

# Node tags treated as two-operand expressions for instance extraction.
# Logical &&/|| participate alongside arithmetic/relational operators: the
# wrong-operator pattern explicitly covers e.g. && written instead of ||.
BINARY_NODE_TYPES = ("BinaryExpression", "LogicalExpression")
CALL_NODE_TYPES = ("CallExpression", "NewExpression")


@dataclass
class CodeInstance:
    """One extracted call or binary expression with names, positions, and label."""

    pattern: str
    elements: dict[str, str]
    positions: dict[str, int | None]
    file_id: int
    path: str
    span: tuple[int, int]
    label: str = "correct"
    operand_types: dict[str, str] | None = None
    missing: dict[str, bool] = field(default_factory=dict)
    replacement_source: int | None = None

    @property
    def slots(self) -> tuple[str, ...]:
        return CALL_SLOTS if self.pattern in CALL_PATTERNS else BINOP_SLOTS

    def to_json(self) -> dict:
        d = asdict(self)
        d["span"] = list(self.span)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "CodeInstance":
        return cls(
            pattern=d["pattern"], elements=dict(d["elements"]),
            positions={k: v for k, v in d["positions"].items()},
            file_id=int(d["file_id"]), path=d.get("path", ""),
            span=tuple(d.get("span", (0, 0))), label=d.get("label", "correct"),
            operand_types=d.get("operand_types"),
            missing={k: bool(v) for k, v in d.get("missing", {}).items()},
            replacement_source=d.get("replacement_source"),
        )


def node_range(node: dict) -> tuple[int, int] | None:
    if "range" in node and isinstance(node["range"], (list, tuple)):
        return int(node["range"][0]), int(node["range"][1])
    if "start" in node and "end" in node:
        return int(node["start"]), int(node["end"])
    return None


def _is_node(value) -> bool:
    return isinstance(value, dict) and isinstance(value.get("type"), str)


def child_nodes(node: dict) -> list[dict]:
    """Direct child nodes in source order (falling back to key order)."""
    children = []
    for key, value in node.items():
        if key in ("loc", "range", "regex"):
            continue
        if _is_node(value):
            children.append((key, value))
        elif isinstance(value, list):
            for item in value:
                if _is_node(item):
                    children.append((key, item))

    def sort_key(pair):
        rng = node_range(pair[1])
        return (rng[0] if rng else 0, pair[0])

    children.sort(key=sort_key)
    return [c for _, c in children]


def iter_nodes(root: dict):
    """Pre-order traversal, children visited in source order."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(child_nodes(node)))


# ---------------------------------------------------------------------------
# Name heuristic
# ---------------------------------------------------------------------------

def _literal_name(node: dict) -> str | None:
    if "regex" in node:
        raw = node.get("raw")
        if raw:
            return raw
        rx = node["regex"] or {}
        return "/%s/%s" % (rx.get("pattern", ""), rx.get("flags", ""))
    if "bigint" in node and node.get("bigint"):
        return str(node["bigint"])
    value = node.get("value")
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return canonical_number(value)
    return str(value)


def _pick(rng: random.Random, names: list[str]) -> str:
    if len(names) == 1:
        return names[0]
    return names[rng.randrange(len(names))]


def name_of(node: dict | None, rng: random.Random) -> str | None:
    """Extract a representative name for an expression node.

    Returns None for node types outside the rule table. Rules with a random
    choice draw uniformly from ``rng``; nested names are always resolved
    left-to-right before the draw, so results are deterministic per seed.
    """
    if not _is_node(node):
        return None
    t = node["type"]

    if t == "Identifier":
        return node.get("name")
    if t == "Literal":
        return _literal_name(node)
    if t == "ThisExpression":
        return "this"
    if t in ("UpdateExpression", "UnaryExpression"):
        return name_of(node.get("argument"), rng)
    if t == "MemberExpression":
        if node.get("computed"):
            return name_of(node.get("object"), rng)
        return name_of(node.get("property"), rng)
    if t == "CallExpression":
        return name_of(node.get("callee"), rng)
    if t == "NewExpression":
        return name_of(node.get("callee"), rng)
    if t == "Property":
        key_name = name_of(node.get("key"), rng) if node.get("key") is not None else None
        value_name = name_of(node.get("value"), rng)
        if key_name is None:
            return value_name
        if value_name is None:
            return key_name
        return _pick(rng, [value_name, key_name])
    if t in ("BinaryExpression", "LogicalExpression", "AssignmentExpression"):
        left = name_of(node.get("left"), rng)
        right = name_of(node.get("right"), rng)
        if left is None:
            return right
        if right is None:
            return left
        return _pick(rng, [left, right])
    if t == "ArrayExpression":
        names = [n for n in (name_of(el, rng) for el in node.get("elements") or [])
                 if n is not None]
        if not names:
            return None
        return _pick(rng, names)
    if t == "ConditionalExpression":
        names = [n for n in (name_of(node.get(k), rng) for k in ("test", "consequent", "alternate"))
                 if n is not None]
        if not names:
            return None
        return _pick(rng, names)
    if t == "FunctionExpression":
        return "function"
    if t == "ObjectExpression":
        return "{"
    return None


# ---------------------------------------------------------------------------
# Instance extraction
# ---------------------------------------------------------------------------

class TokenIndex:
    """Maps character spans to token indices for one file."""

    def __init__(self, file: FileRecord):
        self.tokens = file.tokens
        self._starts = [t.start for t in file.tokens]

    def first_in(self, node: dict) -> int | None:
        rng = node_range(node)
        if rng is None:
            return None
        i = bisect_left(self._starts, rng[0])
        if i < len(self.tokens) and self.tokens[i].start < rng[1]:
            return i
        return None

    def operator_between(self, op: str, left: dict, right: dict) -> int | None:
        lr, rr = node_range(left), node_range(right)
        if lr is None or rr is None:
            return None
        i = bisect_left(self._starts, lr[1])
        while i < len(self.tokens) and self.tokens[i].start < rr[0]:
            if self.tokens[i].text == op:
                return i
            i += 1
        return None

    def count_in(self, node: dict) -> int:
        rng = node_range(node)
        if rng is None:
            return 0
        i = bisect_left(self._starts, rng[0])
        n = 0
        while i < len(self.tokens) and self.tokens[i].start < rng[1]:
            n += 1
            i += 1
        return n


def _element_size(node: dict, tindex: TokenIndex, unit: str) -> int:
    if unit == "tokens":
        return tindex.count_in(node)
    rng = node_range(node)
    return (rng[1] - rng[0]) if rng else 0


def _operand_type(node: dict) -> str:
    t = node.get("type")
    if t == "Identifier":
        return "identifier"
    if t == "Literal":
        return "literal"
    if t == "ThisExpression":
        return "this"
    return "unknown"


def derive_file_seed(seed: int, file_id: int) -> int:
    # Independent per-file streams so extraction parallelizes deterministically.
    return seed ^ file_id


def extract_call_instances(file: FileRecord, rng: random.Random,
                           max_elem: int = 1000, unit: str = "chars") -> list[CodeInstance]:
    """One instance per call/new expression with exactly two arguments.

    Instances are skipped when a required element cannot be named or when any
    element's source text exceeds ``max_elem`` (chars by default, tokens via
    ``unit``). The base element comes from the callee's object expression when
    present and is otherwise marked missing.
    """
    if file.ast is None:
        return []
    tindex = TokenIndex(file)
    out = []
    for node in iter_nodes(file.ast):
        if node.get("type") not in CALL_NODE_TYPES:
            continue
        args = node.get("arguments")
        if not isinstance(args, list) or len(args) != 2:
            continue
        callee = node.get("callee")
        if not _is_node(callee) or not all(_is_node(a) for a in args):
            continue

        base_node = None
        if callee.get("type") == "MemberExpression" and _is_node(callee.get("object")):
            base_node = callee["object"]

        sized = [callee, args[0], args[1]] + ([base_node] if base_node is not None else [])
        if any(_element_size(n, tindex, unit) > max_elem for n in sized):
            continue

        # empty names (e.g. the value of a "" literal) are unusable as elements
        base_name = (name_of(base_node, rng) or None) if base_node is not None else None
        callee_name = name_of(callee, rng) or None
        arg1_name = name_of(args[0], rng) or None
        arg2_name = name_of(args[1], rng) or None
        if callee_name is None or arg1_name is None or arg2_name is None:
            continue

        if callee.get("type") == "MemberExpression":
            if callee.get("computed"):
                name_pos = tindex.first_in(callee["object"])
            else:
                name_pos = tindex.first_in(callee.get("property") or {})
        else:
            name_pos = tindex.first_in(callee)
        base_pos = tindex.first_in(base_node) if base_node is not None else None
        positions = {
            "base": base_pos if base_name is not None else None,
            "callee": name_pos,
            "arg1": tindex.first_in(args[0]),
            "arg2": tindex.first_in(args[1]),
        }
        if positions["callee"] is None or positions["arg1"] is None or positions["arg2"] is None:
            continue

        missing_base = base_name is None
        out.append(CodeInstance(
            pattern="swapped_args",
            elements={"base": MISSING_NAME if missing_base else base_name,
                      "callee": callee_name, "arg1": arg1_name, "arg2": arg2_name},
            positions=positions,
            operand_types=None,
            missing={"base": missing_base},
            file_id=file.file_id, path=file.path,
            span=node_range(node) or (0, 0),
        ))
    return out


def extract_binop_instances(file: FileRecord, rng: random.Random,
                            max_elem: int = 1000, unit: str = "chars",
                            pattern: str = "wrong_operator") -> list[CodeInstance]:
    """One instance per binary/logical expression, with coarse operand types."""
    if pattern not in BINOP_PATTERNS:
        raise ScelmoError(f"not a binary-expression pattern: {pattern}")
    if file.ast is None:
        return []
    tindex = TokenIndex(file)
    out = []
    for node in iter_nodes(file.ast):
        if node.get("type") not in BINARY_NODE_TYPES:
            continue
        left, right, op = node.get("left"), node.get("right"), node.get("operator")
        if not _is_node(left) or not _is_node(right) or not isinstance(op, str):
            continue
        if (_element_size(left, tindex, unit) > max_elem
                or _element_size(right, tindex, unit) > max_elem):
            continue
        left_name = name_of(left, rng) or None
        right_name = name_of(right, rng) or None
        if left_name is None or right_name is None:
            continue
        positions = {
            "left": tindex.first_in(left),
            "op": tindex.operator_between(op, left, right),
            "right": tindex.first_in(right),
        }
        if any(v is None for v in positions.values()):
            continue
        out.append(CodeInstance(
            pattern=pattern,
            elements={"left": left_name, "op": op, "right": right_name},
            positions=positions,
            operand_types={"left": _operand_type(left), "right": _operand_type(right)},
            missing={},
            file_id=file.file_id, path=file.path,
            span=node_range(node) or (0, 0),
        ))
    return out


def extract_instances(file: FileRecord, pattern: str, seed: int,
                      max_elem: int = 1000, unit: str = "chars") -> list[CodeInstance]:
    """Extract all instances of one pattern from a file, with a per-file rng."""
    if pattern not in PATTERNS:
        raise ScelmoError(f"unknown pattern: {pattern}")
    rng = random.Random(derive_file_seed(seed, file.file_id))
    if pattern in CALL_PATTERNS:
        return extract_call_instances(file, rng, max_elem=max_elem, unit=unit)
    return extract_binop_instances(file, rng, max_elem=max_elem, unit=unit, pattern=pattern)


def feature_token_positions(instance: CodeInstance) -> list[int | None]:
    """Slot-ordered feature token positions; a missing base yields None."""
    return [instance.positions.get(slot) for slot in instance.slots]
