"""Corpus statistics: out-of-vocabulary rates of instance elements.

Two tables, one over two-argument calls and one over binary expressions. An
element is OOV when its extracted name is absent from the baseline
vocabulary; a "base OOV" condition also counts calls with no base object at
all. Percentages use the instance count of the table as denominator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ScelmoError
from .extraction import BINOP_PATTERNS, CALL_PATTERNS, CodeInstance
from .vocab import Vocabulary

CALL_STATS = (
    ("calls_missing_base", "Calls with no base object"),
    ("base_missing_or_oov", "Base object absent or OOV"),
    ("callee_oov", "Function name OOV"),
    ("arg1_oov", "First argument OOV"),
    ("arg2_oov", "Second argument OOV"),
    ("both_args_oov", "Both arguments OOV"),
    ("base_and_callee_oov", "Base and function name OOV"),
    ("base_and_args_oov", "Base and both arguments OOV"),
    ("callee_and_args_oov", "Function name and both arguments OOV"),
    ("all_elements_oov", "Every element absent or OOV"),
)

BINOP_STATS = (
    ("left_oov", "Left operand OOV"),
    ("right_oov", "Right operand OOV"),
    ("both_operands_oov", "Both operands OOV"),
    ("unknown_left_type", "Left operand of unknown type"),
    ("unknown_right_type", "Right operand of unknown type"),
    ("both_types_unknown", "Both operand types unknown"),
    ("all_oov_or_unknown", "Operands OOV and types unknown"),
)


@dataclass
class OovReport:
    call_total: int = 0
    binop_total: int = 0
    call_counts: dict[str, int] = field(default_factory=dict)
    binop_counts: dict[str, int] = field(default_factory=dict)

    def percent(self, table: str, key: str) -> float:
        if table == "call":
            total, counts = self.call_total, self.call_counts
        else:
            total, counts = self.binop_total, self.binop_counts
        return 100.0 * counts.get(key, 0) / total if total else 0.0


def oov_stats(instances: list[CodeInstance], vocab: Vocabulary) -> OovReport:
    """Exact counts over extracted instances against the baseline vocabulary."""
    report = OovReport(
        call_counts={k: 0 for k, _ in CALL_STATS},
        binop_counts={k: 0 for k, _ in BINOP_STATS},
    )
    for inst in instances:
        e = inst.elements
        if inst.pattern in CALL_PATTERNS:
            report.call_total += 1
            c = report.call_counts
            base_missing = inst.missing.get("base", False)
            base_bad = base_missing or e["base"] not in vocab
            callee_oov = e["callee"] not in vocab
            arg1_oov = e["arg1"] not in vocab
            arg2_oov = e["arg2"] not in vocab
            c["calls_missing_base"] += base_missing
            c["base_missing_or_oov"] += base_bad
            c["callee_oov"] += callee_oov
            c["arg1_oov"] += arg1_oov
            c["arg2_oov"] += arg2_oov
            c["both_args_oov"] += arg1_oov and arg2_oov
            c["base_and_callee_oov"] += base_bad and callee_oov
            c["base_and_args_oov"] += base_bad and arg1_oov and arg2_oov
            c["callee_and_args_oov"] += callee_oov and arg1_oov and arg2_oov
            c["all_elements_oov"] += base_bad and callee_oov and arg1_oov and arg2_oov
        elif inst.pattern in BINOP_PATTERNS:
            report.binop_total += 1
            c = report.binop_counts
            types = inst.operand_types or {}
            left_oov = e["left"] not in vocab
            right_oov = e["right"] not in vocab
            left_unknown = types.get("left", "unknown") == "unknown"
            right_unknown = types.get("right", "unknown") == "unknown"
            c["left_oov"] += left_oov
            c["right_oov"] += right_oov
            c["both_operands_oov"] += left_oov and right_oov
            c["unknown_left_type"] += left_unknown
            c["unknown_right_type"] += right_unknown
            c["both_types_unknown"] += left_unknown and right_unknown
            c["all_oov_or_unknown"] += (left_oov and right_oov
                                        and left_unknown and right_unknown)
        else:
            raise ScelmoError(f"unknown pattern in stats input: {inst.pattern}")
    return report


def merge_reports(a: OovReport, b: OovReport) -> OovReport:
    out = OovReport(
        call_total=a.call_total + b.call_total,
        binop_total=a.binop_total + b.binop_total,
        call_counts={k: a.call_counts.get(k, 0) + b.call_counts.get(k, 0)
                     for k, _ in CALL_STATS},
        binop_counts={k: a.binop_counts.get(k, 0) + b.binop_counts.get(k, 0)
                      for k, _ in BINOP_STATS},
    )
    return out


def _table(title: str, total_label: str, stats, totals, counts, labels, fmt: str) -> list[str]:
    header = [title] + labels
    rows = [[total_label] + [str(t) for t in totals]]
    for key, text in stats:
        row = [text]
        for total, c in zip(totals, counts):
            pct = 100.0 * c.get(key, 0) / total if total else 0.0
            row.append(f"{pct:.2f}")
        rows.append(row)
    lines = []
    if fmt == "tsv":
        lines.append("\t".join(header))
        for row in rows:
            lines.append("\t".join(row))
    else:  # markdown
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "|".join("---" for _ in header) + "|")
        for row in rows:
            lines.append("| " + " | ".join(row) + " |")
    return lines


def render_report(reports: dict[str, OovReport], fmt: str = "md") -> str:
    """Deterministic text rendering (markdown or tsv), percentages to 2 decimals."""
    if fmt not in ("md", "markdown", "tsv"):
        raise ScelmoError(f"unknown report format: {fmt}")
    fmt = "tsv" if fmt == "tsv" else "md"
    labels = list(reports.keys())
    call_counts = [reports[l].call_counts for l in labels]
    binop_counts = [reports[l].binop_counts for l in labels]
    lines = _table("Calls with two arguments", "Instances",
                   CALL_STATS, [reports[l].call_total for l in labels],
                   call_counts, labels, fmt)
    lines.append("")
    lines += _table("Binary expressions", "Instances",
                    BINOP_STATS, [reports[l].binop_total for l in labels],
                    binop_counts, labels, fmt)
    return "\n".join(lines) + "\n"
