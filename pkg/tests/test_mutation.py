import random

import pytest

from scelmo.errors import MutationError
from scelmo.extraction import CodeInstance
from scelmo.mutation import (OperandOccurrence, build_dataset, mutate_operand,
                             mutate_operator, operand_pools, operator_pool,
                             swap_arguments)


def call_inst(arg1="delay", arg2="function", file_id=0):
    return CodeInstance(
        pattern="swapped_args",
        elements={"base": "", "callee": "setTimeout", "arg1": arg1, "arg2": arg2},
        positions={"base": None, "callee": 0, "arg1": 2, "arg2": 4},
        missing={"base": True}, file_id=file_id, path="f.js", span=(0, 20))


def binop_inst(left="index", op="<", right="matrix", pattern="wrong_operator",
               file_id=0, positions=(5, 6, 7)):
    return CodeInstance(
        pattern=pattern,
        elements={"left": left, "op": op, "right": right},
        positions={"left": positions[0], "op": positions[1], "right": positions[2]},
        operand_types={"left": "identifier", "right": "identifier"},
        file_id=file_id, path="f.js", span=(0, 20))


def test_swap_arguments_swaps_elements_and_positions():
    inst = call_inst()
    out = swap_arguments(inst)
    assert out.label == "buggy"
    assert (out.elements["arg1"], out.elements["arg2"]) == ("function", "delay")
    assert (out.positions["arg1"], out.positions["arg2"]) == (4, 2)
    assert out.elements["callee"] == inst.elements["callee"]
    assert inst.elements["arg1"] == "delay"  # original untouched


def test_swap_is_involution():
    inst = call_inst()
    twice = swap_arguments(swap_arguments(inst))
    assert twice.elements == inst.elements
    assert twice.positions == inst.positions


def test_swap_equal_args_degenerate():
    inst = call_inst(arg1="x", arg2="x")
    out = swap_arguments(inst)
    assert out.elements == inst.elements
    inst2 = call_inst(arg1="x", arg2="x")
    inst2.positions["arg1"], inst2.positions["arg2"] = 2, 4
    out2 = swap_arguments(inst2)
    assert (out2.positions["arg1"], out2.positions["arg2"]) == (4, 2)


def test_mutate_operator_never_returns_original():
    inst = binop_inst(op="||")
    pool = ["||", "&&", "+", "<"]
    seen = set()
    for seed in range(200):
        out = mutate_operator(inst, pool, random.Random(seed))
        assert out.elements["op"] != "||"
        seen.add(out.elements["op"])
    assert "&&" in seen  # the Listing-2 style outcome is reachable


def test_mutate_operator_forced_alternative():
    inst = binop_inst(op="+")
    out = mutate_operator(inst, ["+", "-"], random.Random(0))
    assert out.elements["op"] == "-"


def test_mutate_operator_no_alternative_errors():
    inst = binop_inst(op="+")
    with pytest.raises(MutationError, match="no alternative operator"):
        mutate_operator(inst, ["+"], random.Random(0))


def test_mutate_operator_uniform_frequencies():
    inst = binop_inst(op="+")
    pool = ["+", "-", "*", "/"]
    rng = random.Random(99)
    counts = {"-": 0, "*": 0, "/": 0}
    n = 10000
    for _ in range(n):
        counts[mutate_operator(inst, pool, rng).elements["op"]] += 1
    for op in counts:
        assert abs(counts[op] / n - 1 / 3) < 0.02


def test_mutate_operand_draws_from_pool_and_copies_metadata():
    inst = binop_inst(left="index", right="matrix.length".split(".")[0],
                      pattern="wrong_operand")
    pool = [OperandOccurrence("index", "identifier", 5),
            OperandOccurrence("matrix", "identifier", 7),
            OperandOccurrence("42", "literal", 11)]
    rng = random.Random(4)
    out = mutate_operand(inst, pool, rng)
    assert out is not None
    changed = [s for s in ("left", "right") if out.elements[s] != inst.elements[s]]
    assert len(changed) == 1
    slot = changed[0]
    src = pool[out.replacement_source]
    assert out.elements[slot] == src.name
    assert out.operand_types[slot] == src.operand_type
    assert out.positions[slot] == src.position


def test_mutate_operand_empty_pool_skips():
    inst = binop_inst(left="x", right="x", pattern="wrong_operand")
    pool = [OperandOccurrence("x", "identifier", 5)]
    assert mutate_operand(inst, pool, random.Random(0)) is None


def test_mutate_operand_slot_coin_is_fair():
    pool = [OperandOccurrence(n, "identifier", i) for i, n in
            enumerate(["a", "b", "c", "d"])]
    rng = random.Random(7)
    left = 0
    n = 10000
    for _ in range(n):
        inst = binop_inst(left="x", right="y", pattern="wrong_operand")
        out = mutate_operand(inst, pool, rng)
        if out.elements["left"] != "x":
            left += 1
    assert abs(left / n - 0.5) < 0.02


def test_build_dataset_is_exactly_balanced():
    instances = [binop_inst(op=op, file_id=i % 3)
                 for i, op in enumerate(["<", ">", "+", "-", "&&"] * 20)]
    dataset, stats = build_dataset(instances, seed=3)
    assert len(dataset) == 200
    assert stats.pairs == 100 and stats.skipped == 0
    buggy = sum(1 for inst in dataset if inst.label == "buggy")
    assert buggy == 100


def test_build_dataset_empty_input():
    dataset, stats = build_dataset([], seed=1)
    assert dataset == [] and stats.pairs == 0


def test_build_dataset_skips_drop_both_members():
    # one file has a single distinct operand name -> its instances are skipped
    good = binop_inst(left="a", right="b", pattern="wrong_operand", file_id=0)
    degenerate = binop_inst(left="x", right="x", pattern="wrong_operand", file_id=1)
    dataset, stats = build_dataset([good, degenerate], seed=5)
    assert stats.skipped == 1
    assert len(dataset) == 2
    assert all(inst.file_id == 0 for inst in dataset)
    labels = sorted(inst.label for inst in dataset)
    assert labels == ["buggy", "correct"]


def test_build_dataset_deterministic():
    instances = [binop_inst(op=op, file_id=i % 2)
                 for i, op in enumerate(["<", ">", "+", "-"] * 10)]
    a, _ = build_dataset(instances, seed=9)
    b, _ = build_dataset(instances, seed=9)
    assert [i.to_json() for i in a] == [i.to_json() for i in b]


def test_build_dataset_rejects_mixed_patterns():
    with pytest.raises(MutationError):
        build_dataset([call_inst(), binop_inst()], seed=1)


def test_build_dataset_rejects_buggy_input():
    bad = call_inst()
    bad.label = "buggy"
    with pytest.raises(MutationError):
        build_dataset([bad], seed=1)


def test_operator_pool_and_operand_pools():
    instances = [binop_inst(op="<"), binop_inst(op="&&"), binop_inst(op="<")]
    assert operator_pool(instances) == ["&&", "<"]
    pools = operand_pools([binop_inst(left="a", right="b", pattern="wrong_operand")])
    assert [occ.name for occ in pools[0]] == ["a", "b"]
