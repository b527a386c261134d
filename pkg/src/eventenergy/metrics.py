"""Micro precision/recall/F1 and ERE regime bookkeeping.

Scoring convention: a prediction is a TP when it equals a non-excluded gold
label; a non-excluded wrong prediction is an FP; a missed non-excluded gold
is an FN.  Excluded labels (non-trigger/padding for triggers, None for event
classes, NA for relations) never enter the pooled counts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

TRIGGER_TASK = "trigger"
EVENT_TASK = "event"
ERE_TASK = "ere"

PLUS_JOINT = "+joint"
ALL_JOINT = "all-joint"

# Family membership for the standard multi-faceted relation inventories.
_TEMPORAL = {"BEFORE", "OVERLAP", "CONTAINS", "SIMULTANEOUS", "BEGINS-ON", "ENDS-ON", "AFTER", "EQUAL"}
_CAUSAL = {"CAUSE", "PRECONDITION", "CAUSEDBY"}
_SUBEVENT = {"subevent_relations", "SUBEVENT"}


@dataclass
class MetricsReport:
    task: str
    precision: float = 0.0  # percent
    recall: float = 0.0
    f1: float = 0.0
    tp: int = 0
    fp: int = 0
    fn: int = 0
    support: int = 0
    excluded: tuple[str, ...] = ()
    zero_division: bool = False

    def as_dict(self) -> dict:
        return {
            "task": self.task,
            "precision": round(self.precision, 4),
            "recall": round(self.recall, 4),
            "f1": round(self.f1, 4),
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "support": self.support,
            "excluded": list(self.excluded),
            "zero_division": self.zero_division,
        }


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of two percentages; 0 when both are 0."""
    if precision + recall <= 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def micro_prf(
    pred: Sequence[int],
    gold: Sequence[int],
    excluded: Iterable[int] = (),
    *,
    task: str = "",
    label_names: Sequence[str] | None = None,
) -> MetricsReport:
    """Micro P/R/F1 pooled over all non-excluded labels.

    ``pred`` and ``gold`` are aligned label-id sequences; ``excluded`` holds
    the label ids dropped from the pooled counts.  Zero denominators yield 0
    and set the ``zero_division`` flag.
    """
    if len(pred) != len(gold):
        raise ValueError(f"pred and gold lengths differ: {len(pred)} vs {len(gold)}")
    excluded_set = set(excluded)
    tp = fp = fn = support = 0
    for p, g in zip(pred, gold):
        if g not in excluded_set:
            support += 1
            if p == g:
                tp += 1
            else:
                fn += 1
        if p != g and p not in excluded_set:
            fp += 1
    zero_division = (tp + fp == 0) or (tp + fn == 0)
    precision = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    recall = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    names = tuple(label_names[i] for i in sorted(excluded_set)) if label_names else tuple(
        str(i) for i in sorted(excluded_set)
    )
    return MetricsReport(
        task=task,
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        tp=tp, fp=fp, fn=fn,
        support=support,
        excluded=names,
        zero_division=zero_division,
    )


def relation_families(relations: Sequence[str], na: str = "NA") -> dict[str, list[str]]:
    """Partition the non-NA relation labels into families, each label once.

    Known temporal/causal/subevent names are routed to their family; anything
    else lands in "other" (synthetic inventories, custom schemas).
    """
    families: dict[str, list[str]] = {}
    for name in relations:
        if name == na:
            continue
        if name in _TEMPORAL:
            key = "temporal"
        elif name in _CAUSAL:
            key = "causal"
        elif name in _SUBEVENT:
            key = "subevent"
        else:
            key = "other"
        families.setdefault(key, []).append(name)
    return families


def ere_regime_eval(
    pred: Sequence[int],
    gold: Sequence[int],
    relations: Sequence[str],
    regime: str,
    na_index: int = 0,
    families: dict[str, list[str]] | None = None,
) -> list[MetricsReport]:
    """Relation scoring under the joint-training regimes.

    "all-joint" pools every non-NA relation into one report; "+joint" emits
    one report per relation family, restricting both sides of the counts to
    that family's labels.
    """
    if regime == ALL_JOINT:
        return [micro_prf(pred, gold, {na_index}, task=f"{ERE_TASK}/{ALL_JOINT}", label_names=relations)]
    if regime != PLUS_JOINT:
        raise ValueError(f"unknown ERE regime {regime!r}; expected {PLUS_JOINT!r} or {ALL_JOINT!r}")
    if families is None:
        families = relation_families(relations, na=relations[na_index])
    name_to_index = {name: i for i, name in enumerate(relations)}
    reports = []
    for family in sorted(families):
        members = {name_to_index[name] for name in families[family]}
        excluded = set(range(len(relations))) - members
        reports.append(
            micro_prf(pred, gold, excluded, task=f"{ERE_TASK}/{family}", label_names=relations)
        )
    return reports


def reports_to_json(reports: Iterable[MetricsReport]) -> str:
    return json.dumps([r.as_dict() for r in reports], indent=2)


def format_table(reports: Iterable[MetricsReport]) -> str:
    """Aligned text table, one row per report."""
    rows = [("task", "P", "R", "F1", "support")]
    for r in reports:
        rows.append((r.task, f"{r.precision:.2f}", f"{r.recall:.2f}", f"{r.f1:.2f}", str(r.support)))
    widths = [max(len(row[k]) for row in rows) for k in range(5)]
    lines = ["  ".join(cell.ljust(widths[k]) for k, cell in enumerate(row)) for row in rows]
    return "\n".join(lines)
