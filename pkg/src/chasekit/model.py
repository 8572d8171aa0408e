"""Core immutable values: terms, atoms, queries, dependencies, schemas, databases.

Queries are safe conjunctive queries; a query head uses a distinguished answer
predicate that is not part of the schema. Dependencies are tgds or egds.
Databases are bags: each relation maps constant tuples to multiplicities.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from .errors import ChasekitError, NoTupleId, UnknownRelation

Value = Union[int, str]

FRESH_PREFIX = "_v"

_fresh_counter = itertools.count(1)
_fresh_lock = threading.Lock()


@dataclass(frozen=True)
class Term:
    """A variable (named) or a constant (int or string literal)."""

    kind: str  # "var" | "const"
    value: Value
    hint: Optional[str] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("var", "const"):
            raise ChasekitError(f"bad term kind {self.kind!r}")
        if self.kind == "var" and not isinstance(self.value, str):
            raise ChasekitError("variable names must be strings")

    @property
    def is_var(self) -> bool:
        return self.kind == "var"

    @property
    def is_const(self) -> bool:
        return self.kind == "const"

    def __str__(self):
        if self.is_const and isinstance(self.value, str):
            return '"%s"' % self.value.replace("\\", "\\\\").replace('"', '\\"')
        return str(self.value)


def Var(name: str) -> Term:
    return Term("var", name)


def Const(value: Value) -> Term:
    return Term("const", value)


def fresh_var(hint: str = "") -> Term:
    """A variable named `_v<n>` that no previous call in this process returned.

    The counter is global and atomic; the hint is kept for display only.
    """
    with _fresh_lock:
        n = next(_fresh_counter)
    return Term("var", f"{FRESH_PREFIX}{n}", hint=hint or None)


def is_fresh_name(name: str) -> bool:
    return name.startswith(FRESH_PREFIX)


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    def variables(self) -> list[Term]:
        return [t for t in self.args if t.is_var]

    def __str__(self):
        return "%s(%s)" % (self.pred, ", ".join(str(a) for a in self.args))


@dataclass(frozen=True)
class Query:
    """head :- body. The head predicate is an answer name outside the schema."""

    head: Atom
    body: tuple[Atom, ...]

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        if not self.body:
            raise ChasekitError("query body must be nonempty")
        body_vars = {t for a in self.body for t in a.variables()}
        for t in self.head.args:
            if t.is_var and t not in body_vars:
                raise ChasekitError(f"unsafe head variable {t}")

    def variables(self) -> list[Term]:
        seen: dict[Term, None] = {}
        for t in self.head.args:
            if t.is_var:
                seen.setdefault(t)
        for a in self.body:
            for t in a.variables():
                seen.setdefault(t)
        return list(seen)

    def __str__(self):
        return "%s :- %s." % (self.head, ", ".join(str(a) for a in self.body))


@dataclass(frozen=True)
class AggregateQuery:
    """A CQ core wrapped with grouping and one aggregate (sum/count/max/min).

    The core's head lists the grouping terms followed by the aggregated
    variable (omitted for argument-less count).
    """

    grouping: tuple[Term, ...]
    agg_fn: str  # sum | count | max | min
    agg_arg: Optional[Term]
    core: Query

    def __post_init__(self):
        object.__setattr__(self, "grouping", tuple(self.grouping))
        if self.agg_fn not in ("sum", "count", "max", "min"):
            raise ChasekitError(f"unknown aggregate function {self.agg_fn!r}")
        if self.agg_fn in ("sum", "max", "min") and self.agg_arg is None:
            raise ChasekitError(f"{self.agg_fn} requires an aggregated variable")
        if self.agg_arg is not None:
            if not self.agg_arg.is_var:
                raise ChasekitError("aggregated argument must be a variable")
            if self.agg_arg in self.grouping:
                raise ChasekitError("aggregated variable may not appear in the grouping")
        expected = self.grouping + ((self.agg_arg,) if self.agg_arg is not None else ())
        if self.core.head.args != expected:
            raise ChasekitError("core head must list grouping terms then the aggregated variable")

    def __str__(self):
        agg = self.agg_fn if self.agg_arg is None else f"{self.agg_fn}({self.agg_arg})"
        args = [str(t) for t in self.grouping] + [agg]
        return "%s(%s) :- %s." % (self.core.head.pred, ", ".join(args),
                                  ", ".join(str(a) for a in self.core.body))


@dataclass(frozen=True)
class Dependency:
    """A tgd `premise -> exists Z: conclusion` or an egd `premise -> a = b`."""

    id: str
    kind: str  # "tgd" | "egd"
    premise: tuple[Atom, ...]
    conclusion: tuple[Atom, ...] = ()
    existentials: tuple[Term, ...] = ()
    equated: Optional[tuple[Term, Term]] = None

    def __post_init__(self):
        object.__setattr__(self, "premise", tuple(self.premise))
        object.__setattr__(self, "conclusion", tuple(self.conclusion))
        object.__setattr__(self, "existentials", tuple(self.existentials))
        if not self.premise:
            raise ChasekitError("dependency premise must be nonempty")
        premise_vars = {t for a in self.premise for t in a.variables()}
        if self.kind == "tgd":
            if not self.conclusion:
                raise ChasekitError("tgd conclusion must be nonempty")
            if self.equated is not None:
                raise ChasekitError("tgd cannot equate terms")
            exvars = set(self.existentials)
            for v in exvars:
                if not v.is_var:
                    raise ChasekitError("existentials must be variables")
                if v in premise_vars:
                    raise ChasekitError(f"existential {v} also occurs in the premise")
            for a in self.conclusion:
                for t in a.variables():
                    if t not in premise_vars and t not in exvars:
                        raise ChasekitError(
                            f"conclusion variable {t} neither premise-bound nor existential")
        elif self.kind == "egd":
            if self.conclusion or self.existentials:
                raise ChasekitError("egd carries only an equality")
            if self.equated is None:
                raise ChasekitError("egd needs a pair of terms to equate")
            lhs, rhs = self.equated
            for t in (lhs, rhs):
                if t.is_var and t not in premise_vars:
                    raise ChasekitError(f"equated term {t} does not occur in the premise")
        else:
            raise ChasekitError(f"bad dependency kind {self.kind!r}")

    def __str__(self):
        prem = " & ".join(str(a) for a in self.premise)
        if self.kind == "egd":
            lhs, rhs = self.equated
            return f"{self.id}: {prem} -> {lhs} = {rhs}."
        concl = " & ".join(str(a) for a in self.conclusion)
        if self.existentials:
            ex = ", ".join(str(v) for v in self.existentials)
            return f"{self.id}: {prem} -> exists {ex} : {concl}."
        return f"{self.id}: {prem} -> {concl}."


@dataclass(frozen=True)
class FunctionalDependency:
    relation: str
    determinants: frozenset[int]  # 1-based positions
    dependent: int

    def __post_init__(self):
        object.__setattr__(self, "determinants", frozenset(self.determinants))


@dataclass(frozen=True)
class RelationInfo:
    arity: int
    set_enforced: bool = False
    tuple_id_position: Optional[int] = None

    def __post_init__(self):
        if self.arity < 1:
            raise ChasekitError("relation arity must be >= 1")
        if self.tuple_id_position is not None and not (1 <= self.tuple_id_position <= self.arity):
            raise ChasekitError("tupleid position out of range")


class Schema:
    """Relation symbols with arities, set-enforced flags, and declared fds.

    A relation carrying a tuple-ID position is treated as set-enforced: the
    tuple-ID egd forces its value projection to be duplicate-free.
    """

    def __init__(self, relations: Mapping[str, RelationInfo],
                 fds: Iterable[FunctionalDependency] = ()):
        self.relations = dict(relations)
        self.fds = tuple(fds)
        for fd in self.fds:
            info = self.relations.get(fd.relation)
            if info is None:
                raise UnknownRelation(fd.relation)
            positions = set(fd.determinants) | {fd.dependent}
            if not all(1 <= p <= info.arity for p in positions):
                raise ChasekitError(f"fd positions out of range for {fd.relation}")

    def arity(self, rel: str) -> int:
        try:
            return self.relations[rel].arity
        except KeyError:
            raise UnknownRelation(rel) from None

    def is_set_enforced(self, rel: str) -> bool:
        info = self.relations.get(rel)
        if info is None:
            raise UnknownRelation(rel)
        return info.set_enforced or info.tuple_id_position is not None

    def tuple_id_position(self, rel: str) -> int:
        info = self.relations.get(rel)
        if info is None:
            raise UnknownRelation(rel)
        if info.tuple_id_position is None:
            raise NoTupleId(rel)
        return info.tuple_id_position

    def __eq__(self, other):
        return (isinstance(other, Schema) and self.relations == other.relations
                and set(self.fds) == set(other.fds))

    def __repr__(self):
        return f"Schema({self.relations!r}, fds={self.fds!r})"


class BagDatabase:
    """Finite relations as multisets of constant tuples.

    `relations` maps a relation symbol to {tuple: multiplicity}. Treat
    instances as immutable after construction.
    """

    def __init__(self, relations: Mapping[str, Mapping[tuple, int]] = ()):
        rels: dict[str, dict[tuple, int]] = {}
        for name, tuples in dict(relations).items():
            counted: dict[tuple, int] = {}
            for t, mult in dict(tuples).items():
                if mult < 1:
                    raise ChasekitError("multiplicities must be >= 1")
                counted[tuple(t)] = counted.get(tuple(t), 0) + mult
            if counted:
                rels[name] = counted
        self.relations = rels

    @classmethod
    def from_tuples(cls, tuples_by_rel: Mapping[str, Iterable[tuple]]) -> "BagDatabase":
        rels: dict[str, dict[tuple, int]] = {}
        for name, tuples in tuples_by_rel.items():
            counted: dict[tuple, int] = {}
            for t in tuples:
                counted[tuple(t)] = counted.get(tuple(t), 0) + 1
            rels[name] = counted
        return cls(rels)

    def tuples(self, rel: str) -> dict[tuple, int]:
        return self.relations.get(rel, {})

    def is_set_valued(self, rel: Optional[str] = None) -> bool:
        if rel is not None:
            return all(m == 1 for m in self.tuples(rel).values())
        return all(self.is_set_valued(r) for r in self.relations)

    def core_set(self) -> "BagDatabase":
        return BagDatabase({r: {t: 1 for t in ts} for r, ts in self.relations.items()})

    def total_tuples(self) -> int:
        return sum(m for ts in self.relations.values() for m in ts.values())

    def constants(self) -> set[Value]:
        return {c for ts in self.relations.values() for t in ts for c in t}

    def validate(self, schema: Schema) -> None:
        for rel, ts in self.relations.items():
            arity = schema.arity(rel)
            for t in ts:
                if len(t) != arity:
                    raise ChasekitError(f"tuple {t} does not match arity {arity} of {rel}")

    def __eq__(self, other):
        return isinstance(other, BagDatabase) and self.relations == other.relations

    def __hash__(self):
        return hash(frozenset((r, frozenset(ts.items())) for r, ts in self.relations.items()))

    def __repr__(self):
        parts = []
        for rel in sorted(self.relations):
            ts = self.relations[rel]
            inner = "; ".join(f"{t}x{m}" if m > 1 else f"{t}" for t, m in sorted(ts.items(), key=str))
            parts.append(f"{rel}:{{{inner}}}")
        return "BagDatabase(%s)" % ", ".join(parts)


def canonical_representation(q: Query) -> Query:
    """Drop duplicate body atoms, keeping the first occurrence of each."""
    seen: dict[Atom, None] = {}
    for a in q.body:
        seen.setdefault(a)
    return Query(q.head, tuple(seen))


def dedup_set_enforced(q: Query, schema: Schema) -> Query:
    """Drop duplicate body atoms only for set-enforced relations."""
    out: list[Atom] = []
    seen: set[Atom] = set()
    for a in q.body:
        if a.pred in schema.relations and schema.is_set_enforced(a.pred):
            if a in seen:
                continue
            seen.add(a)
        out.append(a)
    return Query(q.head, tuple(out))


def validate_query(q: Query, schema: Schema) -> None:
    """Arity-check every body atom against the schema (head is schema-free)."""
    for a in q.body:
        if len(a.args) != schema.arity(a.pred):
            raise ChasekitError(
                f"atom {a} does not match declared arity {schema.arity(a.pred)}")


def rename_query(q: Query, mapping: Mapping[Term, Term]) -> Query:
    def sub(t: Term) -> Term:
        return mapping.get(t, t)

    head = Atom(q.head.pred, tuple(sub(t) for t in q.head.args))
    body = tuple(Atom(a.pred, tuple(sub(t) for t in a.args)) for a in q.body)
    return Query(head, body)


def normal_form(q: Query) -> tuple[str, dict[Term, Term]]:
    """Canonical printed form with variables renamed by first occurrence.

    Returns the string and the renaming that produced it; used as a memo key
    and for duplicate detection.
    """
    renaming: dict[Term, Term] = {}

    def norm(t: Term) -> str:
        if not t.is_var:
            return str(t)
        got = renaming.get(t)
        if got is None:
            got = Term("var", f"V{len(renaming) + 1}")
            renaming[t] = got
        return str(got.value)

    parts = [q.head.pred, "(", ",".join(norm(t) for t in q.head.args), "):-"]
    for a in q.body:
        parts += [a.pred, "(", ",".join(norm(t) for t in a.args), ");"]
    return "".join(parts), renaming
