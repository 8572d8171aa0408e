"""Chase & Backchase reformulation for all three semantics, plus the
aggregate wrappers and the Def-3.1 minimality test.

The chase phase produces the universal plan; the backchase enumerates its
nonempty body subsets in increasing size, keeps those whose own chase is
equivalent to the plan under the matching dependency-free test, prunes
supersets of accepted subsets, and finally filters with the full minimality
test (which also considers variable replacement, so it is stronger than
subset minimality).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional, Sequence

from .chase import StepBudget, chase_set, sound_chase
from .errors import ResourceBound
from .mappings import (
    bag_equivalent_with_set_relations,
    bag_set_equivalent,
    isomorphic,
    set_equivalent,
)
from .model import (
    AggregateQuery,
    Dependency,
    Query,
    Schema,
    Term,
    rename_query,
)
from .textio import print_query

MAX_PLAN_ATOMS = 16
MAX_MINIMALITY_VARS = 10


@dataclass
class ReformulationSet:
    input_query: Query
    semantics: str
    universal_plan: Query
    outputs: list[Query] = field(default_factory=list)
    # accepted backchase candidates before the minimality filter (an antichain
    # under body-subset ordering); superset of outputs up to isomorphism
    accepted: list[Query] = field(default_factory=list)

    def render(self, machine: bool = False, emit_all: bool = False) -> str:
        emitted = self.accepted if emit_all else self.outputs
        if machine:
            return "\n".join(print_query(q) for q in emitted)
        lines = [f"universal plan: {print_query(self.universal_plan)}"]
        lines += [f"  {print_query(q)}" for q in emitted]
        return "\n".join(lines)


def _chaser(semantics: str) -> Callable:
    if semantics == "S":
        return lambda q, deps, schema, budget: chase_set(q, deps, schema, budget).result
    return lambda q, deps, schema, budget: sound_chase(semantics, q, deps, schema, budget).result


def _free_test(semantics: str, schema: Schema) -> Callable[[Query, Query], bool]:
    if semantics == "S":
        return set_equivalent
    if semantics == "BS":
        return bag_set_equivalent
    return lambda a, b: bag_equivalent_with_set_relations(a, b, schema)


def _candb(semantics: str, q: Query, deps: Sequence[Dependency], schema: Schema,
           budget: Optional[StepBudget], jobs: int = 1,
           max_plan_atoms: int = MAX_PLAN_ATOMS) -> ReformulationSet:
    budget = budget if budget is not None else StepBudget()
    chase = _chaser(semantics)
    test = _free_test(semantics, schema)
    plan = chase(q, deps, schema, budget)
    if len(plan.body) > max_plan_atoms:
        raise ResourceBound(
            f"universal plan has {len(plan.body)} atoms; backchase is capped at "
            f"{max_plan_atoms}")
    indices = range(len(plan.body))
    accepted: list[frozenset[int]] = []
    accepted_queries: list[Query] = []

    def candidate(subset: tuple[int, ...]) -> Optional[Query]:
        body = tuple(plan.body[i] for i in subset)
        body_vars = {t for a in body for t in a.variables()}
        if any(t.is_var and t not in body_vars for t in plan.head.args):
            return None
        return Query(plan.head, body)

    def evaluate(cand: Query) -> bool:
        return test(chase(cand, deps, schema, budget), plan)

    pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for size in range(1, len(plan.body) + 1):
            level = []
            for subset in combinations(indices, size):
                key = frozenset(subset)
                if any(acc <= key for acc in accepted):
                    continue
                cand = candidate(subset)
                if cand is not None:
                    level.append((key, cand))
            if not level:
                continue
            if pool is not None:
                verdicts = list(pool.map(lambda kc: evaluate(kc[1]), level))
            else:
                verdicts = [evaluate(cand) for _, cand in level]
            for (key, cand), ok in zip(level, verdicts):
                if ok:
                    accepted.append(key)
                    accepted_queries.append(cand)
    finally:
        if pool is not None:
            pool.shutdown()

    outputs: list[Query] = []
    for cand in accepted_queries:
        if not is_sigma_minimal(cand, deps, schema, semantics, budget):
            continue
        if any(isomorphic(cand, kept) for kept in outputs):
            continue
        outputs.append(cand)
    outputs.sort(key=lambda out: (len(out.body), print_query(out)))
    accepted_queries.sort(key=lambda out: (len(out.body), print_query(out)))
    return ReformulationSet(q, semantics, plan, outputs, accepted_queries)


def candb_set(q: Query, deps: Sequence[Dependency], schema: Schema,
              budget: Optional[StepBudget] = None, jobs: int = 1) -> ReformulationSet:
    """All Sigma-minimal set-semantics reformulations; with no dependencies
    this is classical conjunctive-query minimization."""
    return _candb("S", q, deps, schema, budget, jobs)


def candb_bag(q: Query, deps: Sequence[Dependency], schema: Schema,
              budget: Optional[StepBudget] = None, jobs: int = 1) -> ReformulationSet:
    return _candb("B", q, deps, schema, budget, jobs)


def candb_bag_set(q: Query, deps: Sequence[Dependency], schema: Schema,
                  budget: Optional[StepBudget] = None, jobs: int = 1) -> ReformulationSet:
    return _candb("BS", q, deps, schema, budget, jobs)


@dataclass
class AggregateReformulationSet:
    input_query: AggregateQuery
    semantics: str
    universal_plan: Query
    outputs: list[AggregateQuery] = field(default_factory=list)

    def render(self, machine: bool = False) -> str:
        if machine:
            return "\n".join(print_query(q) for q in self.outputs)
        lines = [f"universal plan: {print_query(self.universal_plan)}"]
        lines += [f"  {print_query(q)}" for q in self.outputs]
        return "\n".join(lines)


def candb_aggregate(aq: AggregateQuery, deps: Sequence[Dependency], schema: Schema,
                    budget: Optional[StepBudget] = None, jobs: int = 1,
                    ) -> AggregateReformulationSet:
    """max/min run the set C&B on the core, sum/count the bag-set C&B; each
    output core is re-wrapped with the input's aggregate head."""
    if aq.agg_fn in ("max", "min"):
        inner = candb_set(aq.core, deps, schema, budget, jobs)
    else:
        inner = candb_bag_set(aq.core, deps, schema, budget, jobs)
    outputs = [AggregateQuery(aq.grouping, aq.agg_fn, aq.agg_arg, out)
               for out in inner.outputs]
    return AggregateReformulationSet(aq, "AGG", inner.universal_plan, outputs)


def _partitions(items: list) -> list[list[list]]:
    if not items:
        return [[]]
    first, rest = items[0], items[1:]
    out = []
    for part in _partitions(rest):
        for i in range(len(part)):
            out.append(part[:i] + [[first] + part[i]] + part[i + 1:])
        out.append([[first]] + part)
    return out


def is_sigma_minimal(q: Query, deps: Sequence[Dependency], schema: Schema,
                     semantics: str, budget: Optional[StepBudget] = None) -> bool:
    """False iff replacing zero or more variables of q with other variables of
    q and then dropping at least one atom leaves a query still equivalent to q
    under the dependencies and semantics.

    Variable replacement is searched as variable partitions (maps into q's own
    variable set reduce to merges up to renaming; fresh targets are vacuous).
    """
    budget = budget if budget is not None else StepBudget()
    chase = _chaser(semantics)
    test = _free_test(semantics, schema)
    variables = q.variables()
    if len(variables) > MAX_MINIMALITY_VARS:
        raise ResourceBound(
            f"{len(variables)} variables; minimality search is capped at "
            f"{MAX_MINIMALITY_VARS}")
    chased_q = chase(q, deps, schema, budget)
    chase_cache: dict[str, Query] = {}

    def equivalent_to_q(cand: Query) -> bool:
        key = str(cand)
        got = chase_cache.get(key)
        if got is None:
            got = chase(cand, deps, schema, budget)
            chase_cache[key] = got
        return test(got, chased_q)

    for blocks in _partitions(variables):
        mapping: dict[Term, Term] = {}
        for block in blocks:
            rep = block[0]
            for v in block[1:]:
                mapping[v] = rep
        merged = rename_query(q, mapping) if mapping else q
        if mapping and not equivalent_to_q(merged):
            continue
        n = len(merged.body)
        for size in range(n - 1, 0, -1):
            for subset in combinations(range(n), size):
                body = tuple(merged.body[i] for i in subset)
                body_vars = {t for a in body for t in a.variables()}
                if any(t.is_var and t not in body_vars for t in merged.head.args):
                    continue
                if equivalent_to_q(Query(merged.head, body)):
                    return False
    return True
