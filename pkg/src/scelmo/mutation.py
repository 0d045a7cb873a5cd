"""Instance-level bug injection: one buggy counterpart per correct instance.

Mutations act on extracted instances, never on source text, so a mutated
operator that could not re-parse is deliberately allowed. Each instance gets
its own seeded random stream, keyed by (seed, file, ordinal), so results do
not depend on processing order.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .errors import MutationError
from .extraction import BINOP_PATTERNS, CodeInstance


@dataclass
class OperandOccurrence:
    """One binary-expression operand observed in a file."""

    name: str
    operand_type: str
    position: int | None


@dataclass
class MutationRecord:
    original: CodeInstance
    mutated: CodeInstance | None  # None when the operand pool was empty
    kind: str
    replacement_source: int | None = None


@dataclass
class DatasetStats:
    pairs: int = 0
    skipped: int = 0


def _buggy_copy(inst: CodeInstance) -> CodeInstance:
    return replace(inst, label="buggy",
                   elements=dict(inst.elements),
                   positions=dict(inst.positions),
                   operand_types=dict(inst.operand_types) if inst.operand_types else None,
                   missing=dict(inst.missing))


def swap_arguments(inst: CodeInstance) -> CodeInstance:
    """Exchange the two argument elements and their feature positions."""
    if inst.pattern != "swapped_args":
        raise MutationError(f"swap_arguments applied to pattern {inst.pattern}")
    out = _buggy_copy(inst)
    out.elements["arg1"], out.elements["arg2"] = inst.elements["arg2"], inst.elements["arg1"]
    out.positions["arg1"], out.positions["arg2"] = inst.positions["arg2"], inst.positions["arg1"]
    return out


def mutate_operator(inst: CodeInstance, op_pool, rng: random.Random) -> CodeInstance:
    """Replace the operator with a uniform draw from the pool minus the original."""
    if inst.pattern != "wrong_operator":
        raise MutationError(f"mutate_operator applied to pattern {inst.pattern}")
    alternatives = [op for op in op_pool if op != inst.elements["op"]]
    if not alternatives:
        raise MutationError("no alternative operator")
    out = _buggy_copy(inst)
    out.elements["op"] = alternatives[rng.randrange(len(alternatives))]
    return out


def mutate_operand(inst: CodeInstance, file_pool: list[OperandOccurrence],
                   rng: random.Random) -> CodeInstance | None:
    """Replace the left or right operand with another operand from the same file.

    The slot is a fair coin flip; the replacement is uniform over pool
    occurrences whose name differs from the current slot's element, and brings
    its own operand type and feature position. Returns None (skip) when no
    candidate exists.
    """
    if inst.pattern != "wrong_operand":
        raise MutationError(f"mutate_operand applied to pattern {inst.pattern}")
    slot = "left" if rng.random() < 0.5 else "right"
    current = inst.elements[slot]
    candidates = [(i, occ) for i, occ in enumerate(file_pool) if occ.name != current]
    if not candidates:
        return None
    idx, occ = candidates[rng.randrange(len(candidates))]
    out = _buggy_copy(inst)
    out.elements[slot] = occ.name
    out.positions[slot] = occ.position
    if out.operand_types is not None:
        out.operand_types[slot] = occ.operand_type
    out.replacement_source = idx
    return out


def operator_pool(instances) -> list[str]:
    """Distinct operators observed across instances, sorted for determinism."""
    return sorted({inst.elements["op"] for inst in instances
                   if inst.pattern in BINOP_PATTERNS})


def operand_pools(instances) -> dict[int, list[OperandOccurrence]]:
    """Per-file operand occurrence lists, in instance order (left then right)."""
    pools: dict[int, list[OperandOccurrence]] = {}
    for inst in instances:
        if inst.pattern not in BINOP_PATTERNS:
            continue
        pool = pools.setdefault(inst.file_id, [])
        types = inst.operand_types or {}
        for slot in ("left", "right"):
            pool.append(OperandOccurrence(name=inst.elements[slot],
                                          operand_type=types.get(slot, "unknown"),
                                          position=inst.positions.get(slot)))
    return pools


def instance_rng(seed: int, inst: CodeInstance, ordinal: int) -> random.Random:
    return random.Random(f"{seed}\x00{inst.file_id}\x00{ordinal}")


def mutate_instance(inst: CodeInstance, seed: int, ordinal: int,
                    op_pool=None, pools=None) -> MutationRecord:
    rng = instance_rng(seed, inst, ordinal)
    if inst.pattern == "swapped_args":
        return MutationRecord(inst, swap_arguments(inst), inst.pattern)
    if inst.pattern == "wrong_operator":
        return MutationRecord(inst, mutate_operator(inst, op_pool or [], rng), inst.pattern)
    pool = (pools or {}).get(inst.file_id, [])
    mutated = mutate_operand(inst, pool, rng)
    return MutationRecord(inst, mutated, inst.pattern,
                          replacement_source=mutated.replacement_source if mutated else None)


def build_dataset(instances: list[CodeInstance], seed: int,
                  op_pool=None, pools=None) -> tuple[list[CodeInstance], DatasetStats]:
    """Pair every correct instance with exactly one buggy mutation (50/50).

    Wrong-operand instances whose candidate pool is empty are skipped and drop
    both members of the pair. The combined list is shuffled deterministically.
    """
    if any(inst.label != "correct" for inst in instances):
        raise MutationError("build_dataset expects correct-labeled instances only")
    patterns = {inst.pattern for inst in instances}
    if len(patterns) > 1:
        raise MutationError(f"mixed patterns in dataset input: {sorted(patterns)}")
    if patterns == {"wrong_operator"} and op_pool is None:
        op_pool = operator_pool(instances)
    if patterns == {"wrong_operand"} and pools is None:
        pools = operand_pools(instances)

    stats = DatasetStats()
    out: list[CodeInstance] = []
    for ordinal, inst in enumerate(instances):
        record = mutate_instance(inst, seed, ordinal, op_pool=op_pool, pools=pools)
        if record.mutated is None:
            stats.skipped += 1
            continue
        out.append(record.original)
        out.append(record.mutated)
        stats.pairs += 1
    random.Random(f"{seed}\x00shuffle").shuffle(out)
    return out, stats
