"""Maximal dependency subsets satisfied by the canonical database of a sound
chase result (Max-Bag- and Max-Bag-Set-Sigma-Subset)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .chase import (
    StepBudget,
    is_assignment_fixing,
    sound_chase,
    tgd_applicable_homs,
)
from .constraints import regularize_set
from .model import Dependency, Query, Schema

REASON_UNSOUND = "unsound-tgd"
REASON_NOT_SET = "not-set-valued"
REASON_NOT_FIXING = "not-assignment-fixing"


@dataclass
class SigmaMaxReport:
    semantics: str
    kept: list[str]
    removed: list[tuple[str, str]]  # (dependency id, reason)
    chase_result: Query
    dependencies: list[Dependency] = field(default_factory=list)

    def kept_dependencies(self) -> list[Dependency]:
        keep = set(self.kept)
        return [d for d in self.dependencies if d.id in keep]

    def render(self, machine: bool = False) -> str:
        lines = []
        for dep_id in self.kept:
            lines.append(f"keep {dep_id}")
        for dep_id, reason in self.removed:
            lines.append(f"drop {dep_id} {reason}")
        if machine:
            return "\n".join(lines)
        from .textio import print_query

        return "\n".join([f"sound chase result: {print_query(self.chase_result)}"]
                         + lines)


def _max_subset(semantics: str, q: Query, deps: Sequence[Dependency],
                schema: Schema, budget: Optional[StepBudget]) -> SigmaMaxReport:
    budget = budget if budget is not None else StepBudget()
    regular = regularize_set(deps)
    outcome = sound_chase(semantics, q, regular, schema, budget)
    terminal = outcome.result
    kept: list[str] = []
    removed: list[tuple[str, str]] = []
    for dep in regular:
        if dep.kind == "egd":
            kept.append(dep.id)  # no egd is applicable to a sound-chase fixpoint
            continue
        homs = list(tgd_applicable_homs(terminal, dep))
        if not homs:
            kept.append(dep.id)
            continue
        fixing = any(is_assignment_fixing(terminal, dep, h, regular, schema, budget)
                     for h in homs)
        set_ok = semantics != "B" or all(
            schema.is_set_enforced(a.pred) for a in dep.conclusion)
        if fixing and set_ok:
            kept.append(dep.id)  # soundly applicable: cannot happen at a fixpoint
            continue
        if not fixing and not set_ok:
            reason = REASON_UNSOUND
        elif not fixing:
            reason = REASON_NOT_FIXING
        else:
            reason = REASON_NOT_SET
        removed.append((dep.id, reason))
    return SigmaMaxReport(semantics, kept, removed, terminal, regular)


def max_bag_sigma_subset(q: Query, deps: Sequence[Dependency], schema: Schema,
                         budget: Optional[StepBudget] = None) -> SigmaMaxReport:
    """The unique maximal subset of the (regularized) dependencies satisfied
    by the canonical database of the bag sound-chase result: drop exactly the
    dependencies whose bag-chase step on that result would be unsound."""
    return _max_subset("B", q, deps, schema, budget)


def max_bag_set_sigma_subset(q: Query, deps: Sequence[Dependency], schema: Schema,
                             budget: Optional[StepBudget] = None) -> SigmaMaxReport:
    """Bag-set analog of max_bag_sigma_subset."""
    return _max_subset("BS", q, deps, schema, budget)
