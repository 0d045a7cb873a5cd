"""Seeded synthetic corpora in the exporter's JSONL shape.

``SourceBuilder`` constructs one file's token stream and ESTree tree with
consistent character ranges, which keeps hand-made fixtures cheap. The corpus
generator emits JS-like files where the binary operator is a deterministic
function of the left operand's name family (count_* compares with <, flag_*
combines with &&, ...); most identifiers are rare variants that fall outside
a small vocabulary, while their family root stays visible to character-level
models. That gives contextual providers a learnable, name-driven signal.
"""

from __future__ import annotations

import json
import random

from .tokens import canonical_number

LOGICAL_OPS = ("&&", "||")


class SourceBuilder:
    """Builds tokens and AST nodes together, in source order."""

    def __init__(self, path: str = "synthetic.js"):
        self.path = path
        self._parts: list[str] = []
        self._pos = 0
        self.tokens: list[dict] = []
        self._body: list[dict] = []

    # -- low-level emission -------------------------------------------------
    def _emit(self, kind: str, text: str) -> tuple[int, int]:
        start = self._pos
        self._parts.append(text)
        self._pos += len(text)
        self.tokens.append({"kind": kind, "text": text, "start": start, "end": self._pos})
        return start, self._pos

    def space(self, text: str = " ") -> None:
        self._parts.append(text)
        self._pos += len(text)

    def punct(self, text: str) -> None:
        self._emit("Punctuator", text)

    def keyword(self, text: str) -> None:
        self._emit("Keyword", text)

    # -- expressions ---------------------------------------------------------
    def identifier(self, name: str) -> dict:
        s, e = self._emit("Identifier", name)
        return {"type": "Identifier", "name": name, "range": [s, e]}

    def literal(self, value) -> dict:
        if isinstance(value, bool):
            kind, raw = "Boolean", "true" if value else "false"
        elif value is None:
            kind, raw = "Null", "null"
        elif isinstance(value, str):
            kind, raw = "String", json.dumps(value)
        else:
            kind, raw = "Numeric", canonical_number(value)
        s, e = self._emit(kind, raw)
        return {"type": "Literal", "value": value, "raw": raw, "range": [s, e]}

    def this_expr(self) -> dict:
        s, e = self._emit("Keyword", "this")
        return {"type": "ThisExpression", "range": [s, e]}

    def binop(self, left_fn, op: str, right_fn) -> dict:
        start = self._pos
        left = left_fn()
        self.space()
        self.punct(op)
        self.space()
        right = right_fn()
        node_type = "LogicalExpression" if op in LOGICAL_OPS else "BinaryExpression"
        return {"type": node_type, "operator": op, "left": left, "right": right,
                "range": [start, self._pos]}

    def member(self, object_fn, prop_name: str) -> dict:
        start = self._pos
        obj = object_fn()
        self.punct(".")
        prop = self.identifier(prop_name)
        return {"type": "MemberExpression", "object": obj, "property": prop,
                "computed": False, "range": [start, self._pos]}

    def member_computed(self, object_fn, prop_fn) -> dict:
        start = self._pos
        obj = object_fn()
        self.punct("[")
        prop = prop_fn()
        self.punct("]")
        return {"type": "MemberExpression", "object": obj, "property": prop,
                "computed": True, "range": [start, self._pos]}

    def function_expr(self, body_fns=()) -> dict:
        start = self._pos
        self.keyword("function")
        self.punct("(")
        self.punct(")")
        self.space()
        block_start = self._pos
        self.punct("{")
        self.space()
        body = []
        for fn in body_fns:
            inner_start = self._pos
            expr = fn()
            self.punct(";")
            body.append({"type": "ExpressionStatement", "expression": expr,
                         "range": [inner_start, self._pos]})
            self.space()
        self.punct("}")
        block = {"type": "BlockStatement", "body": body, "range": [block_start, self._pos]}
        return {"type": "FunctionExpression", "id": None, "params": [], "body": block,
                "range": [start, self._pos]}

    def call(self, callee_fn, arg_fns, new: bool = False) -> dict:
        start = self._pos
        if new:
            self.keyword("new")
            self.space()
        callee = callee_fn()
        self.punct("(")
        args = []
        for i, fn in enumerate(arg_fns):
            if i:
                self.punct(",")
                self.space()
            args.append(fn())
        self.punct(")")
        node_type = "NewExpression" if new else "CallExpression"
        return {"type": node_type, "callee": callee, "arguments": args,
                "range": [start, self._pos]}

    def assignment(self, target_name: str, expr_fn) -> dict:
        start = self._pos
        target = self.identifier(target_name)
        self.space()
        self.punct("=")
        self.space()
        value = expr_fn()
        return {"type": "AssignmentExpression", "operator": "=", "left": target,
                "right": value, "range": [start, self._pos]}

    # -- statements ----------------------------------------------------------
    def stmt_var(self, name: str, init_fn) -> None:
        start = self._pos
        self.keyword("var")
        self.space()
        ident = self.identifier(name)
        self.space()
        self.punct("=")
        self.space()
        init = init_fn()
        decl = {"type": "VariableDeclarator", "id": ident, "init": init,
                "range": [ident["range"][0], self._pos]}
        self.punct(";")
        self._body.append({"type": "VariableDeclaration", "kind": "var",
                           "declarations": [decl], "range": [start, self._pos]})
        self.space("\n")

    def stmt_expr(self, expr_fn) -> None:
        start = self._pos
        expr = expr_fn()
        self.punct(";")
        self._body.append({"type": "ExpressionStatement", "expression": expr,
                           "range": [start, self._pos]})
        self.space("\n")

    def stmt_if(self, test_fn, body_fns) -> None:
        start = self._pos
        self.keyword("if")
        self.space()
        self.punct("(")
        test = test_fn()
        self.punct(")")
        self.space()
        block_start = self._pos
        self.punct("{")
        self.space("\n")
        body = []
        for fn in body_fns:
            inner_start = self._pos
            expr = fn()
            self.punct(";")
            body.append({"type": "ExpressionStatement", "expression": expr,
                         "range": [inner_start, self._pos]})
            self.space("\n")
        self.punct("}")
        block = {"type": "BlockStatement", "body": body, "range": [block_start, self._pos]}
        self._body.append({"type": "IfStatement", "test": test, "consequent": block,
                           "alternate": None, "range": [start, self._pos]})
        self.space("\n")

    # -- output ----------------------------------------------------------------
    def source(self) -> str:
        return "".join(self._parts)

    def record(self) -> dict:
        ast = {"type": "Program", "body": self._body, "sourceType": "script",
               "range": [0, self._pos]}
        return {"path": self.path, "tokens": self.tokens, "ast": ast, "parse_ok": True}


# ---------------------------------------------------------------------------
# Corpus generator
# ---------------------------------------------------------------------------

# (left-name family root, the operator that family uses, right-operand kind)
FAMILIES = [
    ("count", "<", "num"), ("size", "<=", "num"), ("idx", ">", "num"),
    ("len", ">=", "num"), ("name", "===", "str"), ("key", "!==", "str"),
    ("txt", "+", "str"), ("flag", "&&", "bool"), ("ok", "||", "bool"),
    ("num", "-", "num"),
]
FAMILY_OF = {root: (op, kind) for root, op, kind in FAMILIES}
COMMON_SUFFIXES = ("a", "b", "c", "d")
STRING_POOL = ("red", "blue", "left", "top", "on", "off")
CALL_SHAPES = [("timer", "schedule"), ("list", "insert"), ("map", "assign"),
               ("log", "write")]


def _ident(rng: random.Random, root: str, common_frac: float) -> str:
    if rng.random() < common_frac:
        return f"{root}_{rng.choice(COMMON_SUFFIXES)}"
    tail = "".join(rng.choice("xyzpqrstuvw") for _ in range(2))
    return f"{root}_{tail}{rng.randrange(100)}"


def _right_operand(b: SourceBuilder, rng: random.Random, root: str, kind: str,
                   common_frac: float):
    if kind == "bool" or rng.random() < 0.5:
        return lambda: b.identifier(_ident(rng, root, common_frac))
    if kind == "num":
        value = rng.randrange(100)
        return lambda: b.literal(value)
    value = rng.choice(STRING_POOL)
    return lambda: b.literal(value)


def generate_file(path: str, rng: random.Random, n_stmts: int,
                  common_frac: float = 0.25) -> dict:
    b = SourceBuilder(path)
    for root, _, kind in rng.sample(FAMILIES, 3):
        init = ({"num": lambda: b.literal(rng.randrange(10)),
                 "str": lambda: b.literal(rng.choice(STRING_POOL)),
                 "bool": lambda: b.literal(rng.random() < 0.5)}[kind])
        b.stmt_var(_ident(rng, root, common_frac), init)

    for _ in range(n_stmts):
        root, op, kind = rng.choice(FAMILIES)
        left_name = _ident(rng, root, common_frac)
        test = lambda: b.binop(lambda: b.identifier(left_name), op,
                               _right_operand(b, rng, root, kind, common_frac))
        roll = rng.random()
        if roll < 0.5:
            t_root, t_op, t_kind = rng.choice(FAMILIES)
            target = _ident(rng, t_root, common_frac)
            body = lambda: b.assignment(
                target, lambda: b.binop(lambda: b.identifier(_ident(rng, t_root, common_frac)),
                                        t_op, _right_operand(b, rng, t_root, t_kind, common_frac)))
            b.stmt_if(test, [body])
        elif roll < 0.8:
            target = _ident(rng, root, common_frac)
            b.stmt_expr(lambda: b.assignment(target, test))
        else:
            base_root, method = rng.choice(CALL_SHAPES)
            base = f"{base_root}{rng.randrange(4)}"
            num_arg = _ident(rng, rng.choice(["count", "size", "idx", "len"]), common_frac)
            str_arg = rng.choice(STRING_POOL)
            b.stmt_expr(lambda: b.call(
                lambda: b.member(lambda: b.identifier(base), method),
                [lambda: b.identifier(num_arg), lambda: b.literal(str_arg)]))
    return b.record()


def generate_corpus(n_files: int = 200, seed: int = 7, common_frac: float = 0.25,
                    stmts: tuple[int, int] = (7, 12), projects: int = 10) -> list[dict]:
    rng = random.Random(seed)
    records = []
    for i in range(n_files):
        path = f"proj{i % projects}/file{i:04d}.js"
        n_stmts = rng.randint(*stmts)
        records.append(generate_file(path, rng, n_stmts, common_frac))
    return records


def write_corpus(records: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":"),
                                ensure_ascii=False) + "\n")
