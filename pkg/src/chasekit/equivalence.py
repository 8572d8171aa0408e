"""Dependency-aware equivalence deciders and counterexample construction.

The deciders reduce equivalence under dependencies to a dependency-free check
on chase results: set chase + containment mappings for set semantics, sound
bag chase + isomorphism modulo set-enforced duplicates for bag semantics,
sound bag-set chase + canonical-representation isomorphism for bag-set
semantics, and the core reductions for aggregates. Counterexample search is a
cross-check for negative verdicts, never an input to them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .chase import StepBudget, chase_set, sound_chase
from .errors import HypothesesNotMet, IncompatibleAggregates, ResourceBound
from .evaluator import (
    canonical_database,
    enumerate_databases,
    eval_bag,
    eval_bag_set,
    eval_set,
    satisfies,
)
from .mappings import (
    bag_equivalent_with_set_relations,
    bag_set_equivalent,
    set_equivalent,
)
from .model import (
    AggregateQuery,
    BagDatabase,
    Dependency,
    Query,
    Schema,
    canonical_representation,
    dedup_set_enforced,
)


@dataclass
class EquivVerdict:
    equivalent: bool
    semantics: str  # S | B | BS | AGG
    chase_pair: Optional[tuple[Query, Query]] = None
    counterexample: Optional[BagDatabase] = None

    def render(self, machine: bool = False, witness_path: Optional[str] = None) -> str:
        if machine:
            line = f"EQUIV {self.semantics} {'yes' if self.equivalent else 'no'}"
            if witness_path:
                line += f" witness={witness_path}"
            return line
        return ("equivalent" if self.equivalent else "not equivalent") + \
            f" under {self.semantics} semantics"


def equiv_set_under_sigma(q1: Query, q2: Query, deps: Sequence[Dependency],
                          schema: Schema, budget: Optional[StepBudget] = None,
                          ) -> EquivVerdict:
    budget = budget if budget is not None else StepBudget()
    r1 = chase_set(q1, deps, schema, budget).result
    r2 = chase_set(q2, deps, schema, budget).result
    return EquivVerdict(set_equivalent(r1, r2), "S", (r1, r2))


def equiv_bag_under_sigma(q1: Query, q2: Query, deps: Sequence[Dependency],
                          schema: Schema, budget: Optional[StepBudget] = None,
                          ) -> EquivVerdict:
    budget = budget if budget is not None else StepBudget()
    r1 = sound_chase("B", q1, deps, schema, budget).result
    r2 = sound_chase("B", q2, deps, schema, budget).result
    return EquivVerdict(bag_equivalent_with_set_relations(r1, r2, schema), "B", (r1, r2))


def equiv_bag_set_under_sigma(q1: Query, q2: Query, deps: Sequence[Dependency],
                              schema: Schema, budget: Optional[StepBudget] = None,
                              ) -> EquivVerdict:
    budget = budget if budget is not None else StepBudget()
    r1 = sound_chase("BS", q1, deps, schema, budget).result
    r2 = sound_chase("BS", q2, deps, schema, budget).result
    return EquivVerdict(bag_set_equivalent(r1, r2), "BS", (r1, r2))


def equiv_aggregate_under_sigma(a1: AggregateQuery, a2: AggregateQuery,
                                deps: Sequence[Dependency], schema: Schema,
                                budget: Optional[StepBudget] = None) -> EquivVerdict:
    """max/min reduce to set equivalence of the cores, sum/count to bag-set
    equivalence of the cores."""
    if a1.agg_fn != a2.agg_fn or len(a1.grouping) != len(a2.grouping) \
            or (a1.agg_arg is None) != (a2.agg_arg is None):
        raise IncompatibleAggregates(
            f"{a1.agg_fn}/{len(a1.grouping)} vs {a2.agg_fn}/{len(a2.grouping)}")
    if a1.agg_fn in ("max", "min"):
        inner = equiv_set_under_sigma(a1.core, a2.core, deps, schema, budget)
    else:
        inner = equiv_bag_set_under_sigma(a1.core, a2.core, deps, schema, budget)
    return EquivVerdict(inner.equivalent, "AGG", inner.chase_pair, inner.counterexample)


# -- counterexample search ----------------------------------------------


@dataclass
class SearchBounds:
    domain: int = 6
    mult: int = 2
    exhaustive_cap: int = 200_000
    max_tuples: int = 6


def _answers_differ(q1: Query, q2: Query, semantics: str, d: BagDatabase) -> bool:
    if semantics == "S":
        return eval_set(q1, d) != eval_set(q2, d)
    if semantics == "BS":
        return eval_bag_set(q1, d) != eval_bag_set(q2, d)
    return eval_bag(q1, d) != eval_bag(q2, d)


def _admissible(d: BagDatabase, semantics: str, deps, schema: Schema,
                bounds: SearchBounds) -> bool:
    if len(d.constants()) > bounds.domain:
        return False
    if any(m > bounds.mult for ts in d.relations.values() for m in ts.values()):
        return False
    if semantics in ("S", "BS") and not d.is_set_valued():
        return False
    return satisfies(d, deps, schema)


def _targeted_candidates(q1: Query, q2: Query, semantics: str,
                         deps: Sequence[Dependency], schema: Schema,
                         bounds: SearchBounds) -> Iterator[BagDatabase]:
    """Candidate databases derived from canonical databases of the queries and
    their chase results: the base instance, single-tuple duplications of
    non-set relations (bag semantics), and single fresh-variant tuples. This
    mirrors how the counterexamples in the literature are built."""
    from .errors import ChasekitError

    seeds: list[Query] = [q1, q2]
    try:
        if semantics == "S":
            seeds += [chase_set(q, deps, schema).result for q in (q1, q2)]
        else:
            seeds += [sound_chase(semantics, q, deps, schema).result for q in (q1, q2)]
    except ChasekitError:
        pass  # non-terminating or failing chase: fall back to the raw queries
    seen: set[BagDatabase] = set()
    bases = []
    for seed in seeds:
        base = canonical_database(canonical_representation(seed))
        if base not in seen:
            seen.add(base)
            bases.append(base)

    def emit(db: BagDatabase) -> Iterator[BagDatabase]:
        if db not in seen:
            seen.add(db)
            yield db

    for base in sorted(bases, key=BagDatabase.total_tuples):
        yield from emit(base)
        ints = sorted(c for c in base.constants() if isinstance(c, int))
        fresh = max(ints, default=0) + 1
        for rel in sorted(base.relations):
            set_enforced = rel in schema.relations and schema.is_set_enforced(rel)
            for tup in sorted(base.relations[rel], key=str):
                if semantics == "B" and not set_enforced and bounds.mult >= 2:
                    rels = {r: dict(ts) for r, ts in base.relations.items()}
                    rels[rel][tup] = 2
                    yield from emit(BagDatabase(rels))
                for pos in range(len(tup)):
                    for value in ints + [fresh]:
                        variant = tup[:pos] + (value,) + tup[pos + 1:]
                        if variant == tup:
                            continue
                        rels = {r: dict(ts) for r, ts in base.relations.items()}
                        rels[rel][variant] = 1
                        yield from emit(BagDatabase(rels))


def search_counterexample(q1: Query, q2: Query, semantics: str,
                          deps: Sequence[Dependency], schema: Schema,
                          bounds: Optional[SearchBounds] = None,
                          ) -> Optional[BagDatabase]:
    """A database satisfying the dependencies on which the two queries answer
    differently under the given semantics, or None within bounds.

    Small schemas are searched exhaustively in increasing total-tuple-count
    order (minimal witnesses); larger spaces fall back to targeted candidates
    derived from canonical databases.
    """
    bounds = bounds or SearchBounds()
    if len(q1.head.args) != len(q2.head.args):
        raise ResourceBound("queries with different head arities never compare")
    mult = 1 if semantics in ("S", "BS") else bounds.mult
    estimate = 1
    for rel, info in schema.relations.items():
        cap = 1 if schema.is_set_enforced(rel) else mult
        estimate *= (cap + 1) ** (bounds.domain ** info.arity)
        if estimate > bounds.exhaustive_cap:
            break
    if estimate <= bounds.exhaustive_cap:
        for d in enumerate_databases(schema, bounds.domain, mult, deps,
                                     max_tuples=bounds.max_tuples):
            if _answers_differ(q1, q2, semantics, d):
                return d
        return None
    best: Optional[BagDatabase] = None
    for d in _targeted_candidates(q1, q2, semantics, deps, schema, bounds):
        if not _admissible(d, semantics, deps, schema, bounds):
            continue
        if _answers_differ(q1, q2, semantics, d):
            if best is None or d.total_tuples() < best.total_tuples():
                best = d
    return best


def build_bag_counterexample(q1: Query, q2: Query, schema: Schema,
                             ) -> Optional[BagDatabase]:
    """Bag-nonequivalence witness for two bag-set-equivalent queries whose
    per-predicate subgoal counts differ on some non-set-enforced relation.

    The construction freezes the shared canonical representation into its
    canonical database and replicates every tuple of the discriminating
    relation m* = 1 + n1^(2 n2) * n4^(n3 - n2) times (the second factor is
    dropped when the smaller query only has subgoals of that relation).
    """
    d1 = dedup_set_enforced(q1, schema)
    d2 = dedup_set_enforced(q2, schema)
    if not bag_set_equivalent(q1, q2):
        raise HypothesesNotMet("queries are not bag-set equivalent")

    def counts(q: Query) -> dict[str, int]:
        out: dict[str, int] = {}
        for a in q.body:
            out[a.pred] = out.get(a.pred, 0) + 1
        return out

    c1, c2 = counts(d1), counts(d2)
    pick = None
    for rel in sorted(set(c1) | set(c2)):
        if rel in schema.relations and schema.is_set_enforced(rel):
            continue
        a, b = c1.get(rel, 0), c2.get(rel, 0)
        if a != b:
            pick = (rel, (q1, d1, a), (q2, d2, b)) if a > b else (rel, (q2, d2, b), (q1, d1, a))
            break
    if pick is None:
        raise HypothesesNotMet("equal per-predicate subgoal counts on every bag relation")
    rel, (big, big_dedup, n1), (small, small_dedup, n2) = pick
    if n2 == 0:
        raise HypothesesNotMet(
            f"{rel} is absent from one query; the queries are not even set-equivalent")
    n3 = len(small.body)
    n4 = sum(1 for a in big.body if a.pred != rel)
    if n3 > n2:
        m_star = 1 + n1 ** (2 * n2) * n4 ** (n3 - n2)
    else:
        m_star = 1 + n1 ** (2 * n2)
    base = canonical_database(canonical_representation(big_dedup))
    rels = {r: dict(ts) for r, ts in base.relations.items()}
    rels[rel] = {t: m_star for t in rels.get(rel, {})}
    return BagDatabase(rels)


def verify_verdict(q1: Query, q2: Query, verdict: EquivVerdict,
                   deps: Sequence[Dependency], schema: Schema,
                   bounds: Optional[SearchBounds] = None) -> Optional[BagDatabase]:
    """Cross-check: for a negative verdict return a witness database if one is
    found within bounds; for a positive verdict return None (and any found
    witness would indicate a bug)."""
    semantics = verdict.semantics if verdict.semantics != "AGG" else None
    if semantics is None:
        return None
    return search_counterexample(q1, q2, semantics, deps, schema, bounds)
