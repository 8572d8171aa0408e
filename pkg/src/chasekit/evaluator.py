"""Ground-truth query evaluation on concrete databases.

This module is the oracle the rest of the package is checked against:
set/bag/bag-set evaluation by exhaustive assignment search, dependency
satisfaction, canonical databases, and small-database enumeration. Assignment
search backtracks over body atoms in the given order with per-predicate
candidate lists; there is deliberately no join optimizer.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Iterator, Optional, Sequence, Union

from .errors import ChasekitError, NonSetDatabase, ResourceBound
from .model import (
    Atom,
    BagDatabase,
    Dependency,
    AggregateQuery,
    Query,
    Schema,
    Term,
    Value,
)

AnswerBag = Counter

# Compiled atom: (pred, ((is_var, key), ...)) where key is a variable name or
# a constant value.
_Compiled = tuple[str, tuple[tuple[bool, object], ...]]


def _compile_atoms(atoms: Sequence[Atom]) -> list[_Compiled]:
    out = []
    for a in atoms:
        spec = tuple((t.is_var, t.value) for t in a.args)
        out.append((a.pred, spec))
    return out


def _match_assignments(compiled: list[_Compiled], core: dict[str, list[tuple]],
                       binding: Optional[dict[str, Value]] = None,
                       ) -> Iterator[tuple[dict[str, Value], list[tuple]]]:
    """All assignments satisfying every atom; yields (binding, matched tuples)."""
    binding = dict(binding or {})
    matched: list[Optional[tuple]] = [None] * len(compiled)

    def walk(i: int) -> Iterator[tuple[dict[str, Value], list[tuple]]]:
        if i == len(compiled):
            yield dict(binding), list(matched)  # type: ignore[arg-type]
            return
        pred, spec = compiled[i]
        for tup in core.get(pred, ()):
            bound: list[str] = []
            ok = True
            for (is_var, key), val in zip(spec, tup):
                if is_var:
                    cur = binding.get(key)
                    if cur is None:
                        binding[key] = val
                        bound.append(key)
                    elif cur != val:
                        ok = False
                        break
                elif key != val:
                    ok = False
                    break
            if ok:
                matched[i] = tup
                yield from walk(i + 1)
            for key in bound:
                del binding[key]
        return

    yield from walk(0)


def _core_index(d: BagDatabase) -> dict[str, list[tuple]]:
    return {rel: list(ts) for rel, ts in d.relations.items()}


def eval_set(q: Query, d: BagDatabase) -> set[tuple]:
    """Set-semantics answer; duplicates in d are ignored via core-set projection."""
    compiled = _compile_atoms(q.body)
    core = _core_index(d)
    out: set[tuple] = set()
    head = [(t.is_var, t.value) for t in q.head.args]
    for binding, _ in _match_assignments(compiled, core):
        out.add(tuple(binding[k] if is_var else k for is_var, k in head))
    return out


def eval_bag_set(q: Query, d: BagDatabase) -> AnswerBag:
    """Bag-set-semantics answer: one tuple per satisfying assignment."""
    if not d.is_set_valued():
        raise NonSetDatabase("bag-set semantics requires a set-valued database")
    compiled = _compile_atoms(q.body)
    core = _core_index(d)
    out: AnswerBag = Counter()
    head = [(t.is_var, t.value) for t in q.head.args]
    for binding, _ in _match_assignments(compiled, core):
        out[tuple(binding[k] if is_var else k for is_var, k in head)] += 1
    return out


def eval_bag(q: Query, d: BagDatabase) -> AnswerBag:
    """Bag-semantics answer: each assignment contributes the product of the
    multiplicities of the tuples its subgoals match."""
    compiled = _compile_atoms(q.body)
    core = _core_index(d)
    out: AnswerBag = Counter()
    head = [(t.is_var, t.value) for t in q.head.args]
    for binding, matched in _match_assignments(compiled, core):
        copies = 1
        for (pred, _), tup in zip(compiled, matched):
            copies *= d.relations[pred][tup]
        out[tuple(binding[k] if is_var else k for is_var, k in head)] += copies
    return out


def _holds(d: BagDatabase, dep: Dependency, core: dict[str, list[tuple]]) -> bool:
    premise = _compile_atoms(dep.premise)
    if dep.kind == "egd":
        lhs, rhs = dep.equated
        for binding, _ in _match_assignments(premise, core):
            a = binding[lhs.value] if lhs.is_var else lhs.value
            b = binding[rhs.value] if rhs.is_var else rhs.value
            if a != b:
                return False
        return True
    conclusion = _compile_atoms(dep.conclusion)
    for binding, _ in _match_assignments(premise, core):
        witness = {k: v for k, v in binding.items()
                   if not any(k == ex.value for ex in dep.existentials)}
        if next(_match_assignments(conclusion, core, witness), None) is None:
            return False
    return True


def satisfies(d: BagDatabase, sigma: Union[Dependency, Iterable[Dependency]],
              schema: Schema) -> bool:
    """D |= sigma. Set-enforced relations must additionally be duplicate-free;
    a violation makes the check false rather than erroring, so counterexample
    search can discard such databases uniformly."""
    for rel in d.relations:
        if rel in schema.relations and schema.is_set_enforced(rel) and not d.is_set_valued(rel):
            return False
    deps = [sigma] if isinstance(sigma, Dependency) else list(sigma)
    core = _core_index(d)
    return all(_holds(d, dep, core) for dep in deps)


def canonical_database(q: Query) -> BagDatabase:
    """Freeze the body: a distinct fresh integer constant per variable, query
    constants kept, one tuple per distinct body atom."""
    ints = [t.value for a in q.body for t in a.args if t.is_const and isinstance(t.value, int)]
    ints += [t.value for t in q.head.args if t.is_const and isinstance(t.value, int)]
    next_const = max(ints, default=0) + 1
    mapping: dict[Term, int] = {}
    rels: dict[str, dict[tuple, int]] = {}
    for a in q.body:
        row = []
        for t in a.args:
            if t.is_const:
                row.append(t.value)
            else:
                if t not in mapping:
                    mapping[t] = next_const
                    next_const += 1
                row.append(mapping[t])
        rels.setdefault(a.pred, {})[tuple(row)] = 1
    return BagDatabase(rels)


def enumerate_databases(schema: Schema, domain_size: int, max_mult: int,
                        required_sat: Iterable[Dependency] = (),
                        max_tuples: Optional[int] = None,
                        estimate_cap: int = 2_000_000) -> Iterator[BagDatabase]:
    """Every database over constants {1..domain_size} with per-tuple
    multiplicity <= max_mult (forced 1 on set-enforced relations), filtered by
    satisfaction of required_sat, in increasing total-tuple-count order.

    max_tuples bounds the total tuple count; without it the full space must
    fit under estimate_cap or ResourceBound is raised.
    """
    if domain_size < 1 or max_mult < 1:
        raise ChasekitError("domain_size and max_mult must be >= 1")
    deps = list(required_sat)
    slots: list[tuple[str, tuple, int]] = []
    for rel in sorted(schema.relations):
        info = schema.relations[rel]
        cap = 1 if schema.is_set_enforced(rel) else max_mult
        for tup in _all_tuples(domain_size, info.arity):
            slots.append((rel, tup, cap))
    if max_tuples is None:
        estimate = 1
        for _, _, cap in slots:
            estimate *= cap + 1
            if estimate > estimate_cap:
                raise ResourceBound(
                    f"database space exceeds {estimate_cap} candidates; "
                    "pass max_tuples to bound the enumeration")
        limit = sum(cap for _, _, cap in slots)
    else:
        limit = max_tuples

    def fill(i: int, remaining: int, current: dict[str, dict[tuple, int]]):
        if remaining == 0:
            yield BagDatabase({r: dict(ts) for r, ts in current.items() if ts})
            return
        if i == len(slots):
            return
        # skip this slot, or use it with multiplicity 1..cap
        yield from fill(i + 1, remaining, current)
        rel, tup, cap = slots[i]
        for mult in range(1, min(cap, remaining) + 1):
            current.setdefault(rel, {})[tup] = mult
            yield from fill(i + 1, remaining - mult, current)
        current[rel].pop(tup, None)

    for total in range(0, limit + 1):
        for db in fill(0, total, {}):
            if not deps or satisfies(db, deps, schema):
                yield db


def _all_tuples(domain_size: int, arity: int) -> list[tuple]:
    out: list[tuple] = [()]
    for _ in range(arity):
        out = [t + (c,) for t in out for c in range(1, domain_size + 1)]
    return out


def eval_aggregate(aq: AggregateQuery, d: BagDatabase) -> set[tuple]:
    """Three steps: core bag under bag-set semantics, grouping on the grouping
    arguments, then aggregation per group."""
    bag = eval_bag_set(aq.core, d)
    k = len(aq.grouping)
    groups: dict[tuple, list] = {}
    for row, mult in bag.items():
        groups.setdefault(row[:k], []).extend([row[k:]] * mult)
    out: set[tuple] = set()
    for key, rows in groups.items():
        if aq.agg_fn == "count":
            value: Value = len(rows)
        else:
            values = [r[0] for r in rows]
            if aq.agg_fn == "sum":
                if not all(isinstance(v, int) for v in values):
                    raise ChasekitError("sum requires integer constants")
                value = sum(values)
            else:
                kinds = {type(v) for v in values}
                if len(kinds) > 1:
                    raise ChasekitError("max/min over mixed constant types")
                value = max(values) if aq.agg_fn == "max" else min(values)
        out.add(key + (value,))
    return out
