"""Set-semantics chase and sound chase under bag and bag-set semantics.

A tgd step appends the whole conclusion under the matched homomorphism with
fresh variables for the existentials; it never fires when the homomorphism
extends to the conclusion. An egd step substitutes one term for another
everywhere; duplicate atoms created by the substitution are dropped under
set and bag-set semantics but, under bag semantics, only for set-enforced
relations.

Sound chase admits a tgd step only when the tgd is assignment-fixing w.r.t.
the current query and homomorphism (and, under bag semantics, when every
added atom's relation is set-enforced). The assignment-fixing test chases the
associated test query - the query with two renamed copies of the conclusion
appended - to its set-chase fixpoint and checks that no existential survives
in both copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from .constraints import is_superkey, regularize_set
from .errors import BudgetExceeded, ChaseFailure, NotApplicable
from .mappings import Homomorphism, find_homomorphisms
from .model import (
    Atom,
    Dependency,
    Query,
    Schema,
    Term,
    canonical_representation,
    dedup_set_enforced,
    fresh_var,
    normal_form,
)

SEMANTICS = ("S", "B", "BS")

# dependency states on the terminal query (Appendix-style ledger)
PRE_APPLICABLE = "pre-applicable"
POST_APPLICABLE = "post-applicable"
SOUNDLY_APPLICABLE = "soundly-applicable"
UNSOUNDLY_APPLICABLE = "unsoundly-applicable"


@dataclass
class StepBudget:
    """Caps on chase work. Counters are shared by sub-chases (the
    assignment-fixing tests), so one budget bounds a whole top-level run."""

    max_steps: int = 10_000
    max_atoms: int = 100_000
    steps_used: int = 0
    atoms_added: int = 0

    def charge_step(self, atoms: int = 0):
        self.steps_used += 1
        self.atoms_added += atoms
        if self.steps_used > self.max_steps or self.atoms_added > self.max_atoms:
            raise BudgetExceeded(
                f"chase budget exhausted ({self.steps_used} steps, "
                f"{self.atoms_added} atoms)")


@dataclass(frozen=True)
class ChaseStep:
    index: int
    dep_id: str
    mapping: tuple[tuple[Term, Term], ...]
    added: tuple[Atom, ...] = ()
    substitution: Optional[tuple[Term, Term]] = None  # (dropped, kept)

    def render(self) -> str:
        hom = ", ".join(f"{a}->{b}" for a, b in self.mapping)
        if self.substitution is not None:
            dropped, kept = self.substitution
            action = f"substitute {dropped} := {kept}"
        else:
            action = "add " + ", ".join(str(a) for a in self.added)
        return f"[{self.index}] {self.dep_id} {{{hom}}} {action}"


@dataclass
class ChaseOutcome:
    result: Query
    trace: list[ChaseStep]
    semantics: str
    ledger: dict[str, str] = field(default_factory=dict)

    def render_trace(self) -> str:
        return "\n".join(step.render() for step in self.trace)


def _check_premise_match(q: Query, dep: Dependency, h: Homomorphism) -> None:
    body = set(q.body)
    for a in dep.premise:
        if h.apply_atom(a) not in body:
            raise NotApplicable(f"premise of {dep.id} does not match under the homomorphism")


def _extendable(q: Query, dep: Dependency, h: Homomorphism) -> bool:
    return next(find_homomorphisms(dep.conclusion, q.body, anchor=h.mapping), None) is not None


def tgd_applicable_homs(q: Query, dep: Dependency) -> Iterator[Homomorphism]:
    """Premise homomorphisms that do not extend to the conclusion, in
    lexicographic atom-image order."""
    seen: set[tuple] = set()
    for h in find_homomorphisms(dep.premise, q.body):
        sig = tuple(sorted((str(k), str(v)) for k, v in h.mapping.items()))
        if sig in seen:
            continue
        seen.add(sig)
        if not _extendable(q, dep, h):
            yield h


def egd_applicable_homs(q: Query, dep: Dependency) -> Iterator[Homomorphism]:
    lhs, rhs = dep.equated
    seen: set[tuple] = set()
    for h in find_homomorphisms(dep.premise, q.body):
        sig = tuple(sorted((str(k), str(v)) for k, v in h.mapping.items()))
        if sig in seen:
            continue
        seen.add(sig)
        if h.apply(lhs) != h.apply(rhs):
            yield h


def tgd_step(q: Query, dep: Dependency, h: Homomorphism) -> Query:
    """Append the conclusion under h, replacing existentials by fresh
    variables. Raises NotApplicable when h extends to the conclusion."""
    if dep.kind != "tgd":
        raise NotApplicable(f"{dep.id} is not a tgd")
    _check_premise_match(q, dep, h)
    if _extendable(q, dep, h):
        raise NotApplicable(f"conclusion of {dep.id} is already witnessed")
    added = conclusion_instance(dep, h)
    return Query(q.head, q.body + added)


def conclusion_instance(dep: Dependency, h: Homomorphism) -> tuple[Atom, ...]:
    fresh = {ex: fresh_var(hint=str(ex.value)) for ex in dep.existentials}

    def sub(t: Term) -> Term:
        if t in fresh:
            return fresh[t]
        return h.apply(t)

    return tuple(Atom(a.pred, tuple(sub(t) for t in a.args)) for a in dep.conclusion)


def _substitute(q: Query, dropped: Term, kept: Term) -> Query:
    def sub(t: Term) -> Term:
        return kept if t == dropped else t

    head = Atom(q.head.pred, tuple(sub(t) for t in q.head.args))
    body = tuple(Atom(a.pred, tuple(sub(t) for t in a.args)) for a in q.body)
    return Query(head, body)


def egd_step(q: Query, dep: Dependency, h: Homomorphism,
             schema: Optional[Schema] = None, semantics: str = "S") -> Query:
    """Substitute one equated image for the other. Under B semantics the
    substitution may only drop duplicates of set-enforced atoms."""
    if dep.kind != "egd":
        raise NotApplicable(f"{dep.id} is not an egd")
    _check_premise_match(q, dep, h)
    dropped, kept = _egd_choice(q, h.apply(dep.equated[0]), h.apply(dep.equated[1]))
    out = _substitute(q, dropped, kept)
    if semantics == "B":
        if schema is None:
            raise ChaseFailure("bag-semantics egd step needs the schema")
        return dedup_set_enforced(out, schema)
    return canonical_representation(out)


def _egd_choice(q: Query, a: Term, b: Term) -> tuple[Term, Term]:
    """Pick (dropped, kept): constants survive; else head variables; else the
    variable occurring first."""
    if a == b:
        raise NotApplicable("equated terms already identical")
    if a.is_const and b.is_const:
        raise ChaseFailure(f"egd equates distinct constants {a} and {b}")
    if a.is_const:
        return b, a
    if b.is_const:
        return a, b
    head_vars = {t for t in q.head.args if t.is_var}
    if a in head_vars and b not in head_vars:
        return b, a
    if b in head_vars and a not in head_vars:
        return a, b
    order: dict[Term, int] = {}
    for t in list(q.head.args) + [t for atom in q.body for t in atom.args]:
        if t.is_var and t not in order:
            order[t] = len(order)
    return (b, a) if order.get(a, 1 << 30) <= order.get(b, 1 << 30) else (a, b)


# -- assignment-fixing machinery ----------------------------------------

_AF_CACHE: dict[tuple, bool] = {}


def associated_test_query(q: Query, dep: Dependency, h: Homomorphism,
                          ) -> tuple[Query, dict[Term, Term]]:
    """The query with two copies of the conclusion appended: one with fresh
    existentials, one with their theta-renamings. Returns the query and the
    map from first-copy to second-copy variables. With no existentials this
    degenerates to the plain chase step with duplicates removed."""
    if dep.kind != "tgd":
        raise NotApplicable(f"{dep.id} is not a tgd")
    _check_premise_match(q, dep, h)
    if _extendable(q, dep, h):
        raise NotApplicable(f"conclusion of {dep.id} is already witnessed")
    if not dep.existentials:
        added = conclusion_instance(dep, h)
        return canonical_representation(Query(q.head, q.body + added)), {}
    first = {ex: fresh_var(hint=str(ex.value)) for ex in dep.existentials}
    second = {ex: fresh_var(hint=f"{ex.value}'") for ex in dep.existentials}

    def instance(sub_map):
        def sub(t: Term) -> Term:
            return sub_map[t] if t in sub_map else h.apply(t)
        return tuple(Atom(a.pred, tuple(sub(t) for t in a.args)) for a in dep.conclusion)

    body = q.body + instance(first) + instance(second)
    theta = {first[ex]: second[ex] for ex in dep.existentials}
    return Query(q.head, body), theta


def is_assignment_fixing(q: Query, dep: Dependency, h: Homomorphism,
                         deps: Sequence[Dependency], schema: Schema,
                         budget: Optional[StepBudget] = None) -> bool:
    """Chase the associated test query to its set-chase fixpoint; the tgd is
    assignment-fixing iff no existential's two copies both survive."""
    if dep.kind != "tgd":
        raise NotApplicable(f"{dep.id} is not a tgd")
    if not dep.existentials:
        _check_premise_match(q, dep, h)
        return True
    # memo key: the query's canonical form, the dependency, the homomorphism
    # image normalized through the same renaming, and the dependency set
    nf, renaming = normal_form(q)
    key = (nf, str(dep),
           tuple(sorted((str(k), str(renaming.get(v, v)))
                        for k, v in h.mapping.items())),
           tuple(str(d) for d in deps))
    cached = _AF_CACHE.get(key)
    if cached is not None:
        return cached
    test_query, theta = associated_test_query(q, dep, h)
    outcome = chase_set(test_query, deps, schema, budget)
    alive = {t for a in outcome.result.body for t in a.variables()}
    verdict = all(not (z1 in alive and z2 in alive) for z1, z2 in theta.items())
    _AF_CACHE[key] = verdict
    return verdict


def sound_chase_step_allowed(q: Query, dep: Dependency, h: Homomorphism,
                             semantics: str, deps: Sequence[Dependency],
                             schema: Schema,
                             budget: Optional[StepBudget] = None) -> bool:
    """Egd steps are always allowed. A tgd step must be assignment-fixing;
    under bag semantics every atom it adds must live in a set-enforced
    relation."""
    if semantics not in ("B", "BS"):
        raise ChaseFailure(f"sound chase semantics must be B or BS, not {semantics!r}")
    if dep.kind == "egd":
        return True
    if semantics == "B":
        if not all(schema.is_set_enforced(a.pred) for a in dep.conclusion):
            return False
    return is_assignment_fixing(q, dep, h, deps, schema, budget)


# -- chase loops ---------------------------------------------------------


def chase_set(q: Query, deps: Sequence[Dependency], schema: Schema,
              budget: Optional[StepBudget] = None) -> ChaseOutcome:
    """Set-semantics chase to fixpoint; dependencies are auto-regularized and
    scanned in declaration order."""
    return _chase(q, deps, schema, "S", budget)


def sound_chase(semantics: str, q: Query, deps: Sequence[Dependency],
                schema: Schema, budget: Optional[StepBudget] = None) -> ChaseOutcome:
    """Sound chase under bag (B) or bag-set (BS) semantics."""
    if semantics not in ("B", "BS"):
        raise ChaseFailure(f"sound chase semantics must be B or BS, not {semantics!r}")
    return _chase(q, deps, schema, semantics, budget)


def _chase(q: Query, deps: Sequence[Dependency], schema: Schema,
           semantics: str, budget: Optional[StepBudget]) -> ChaseOutcome:
    budget = budget if budget is not None else StepBudget()
    regular = regularize_set(deps)
    current = q
    trace: list[ChaseStep] = []

    def fail_partial(exc: BudgetExceeded):
        exc.partial = ChaseOutcome(current, trace, semantics)
        return exc

    progressed = True
    while progressed:
        progressed = False
        for dep in regular:
            if dep.kind == "egd":
                h = next(egd_applicable_homs(current, dep), None)
                if h is None:
                    continue
                try:
                    budget.charge_step()
                except BudgetExceeded as exc:
                    raise fail_partial(exc)
                a, b = dep.equated
                dropped, kept = _egd_choice(current, h.apply(a), h.apply(b))
                current = egd_step(current, dep, h, schema, semantics)
                trace.append(ChaseStep(len(trace), dep.id,
                                       tuple(sorted(h.mapping.items(), key=str)),
                                       substitution=(dropped, kept)))
                progressed = True
                break
            chosen = None
            for h in tgd_applicable_homs(current, dep):
                if semantics == "S" or sound_chase_step_allowed(
                        current, dep, h, semantics, regular, schema, budget):
                    chosen = h
                    break
            if chosen is None:
                continue
            try:
                budget.charge_step(atoms=len(dep.conclusion))
            except BudgetExceeded as exc:
                raise fail_partial(exc)
            before = len(current.body)
            current = tgd_step(current, dep, chosen)
            trace.append(ChaseStep(len(trace), dep.id,
                                   tuple(sorted(chosen.mapping.items(), key=str)),
                                   added=current.body[before:]))
            progressed = True
            break

    ledger = _terminal_ledger(current, regular, schema, semantics, trace, budget)
    return ChaseOutcome(current, trace, semantics, ledger)


def _terminal_ledger(q: Query, deps: Sequence[Dependency], schema: Schema,
                     semantics: str, trace: list[ChaseStep],
                     budget: StepBudget) -> dict[str, str]:
    used = {step.dep_id for step in trace}
    ledger: dict[str, str] = {}
    for dep in deps:
        if dep.kind == "egd":
            homs = list(find_homomorphisms(dep.premise, q.body))
            if any(h.apply(dep.equated[0]) != h.apply(dep.equated[1]) for h in homs):
                ledger[dep.id] = SOUNDLY_APPLICABLE  # never true at a fixpoint
            elif homs or dep.id in used:
                ledger[dep.id] = POST_APPLICABLE
            else:
                ledger[dep.id] = PRE_APPLICABLE
            continue
        applicable = list(tgd_applicable_homs(q, dep))
        if applicable:
            if semantics == "S" or any(
                    sound_chase_step_allowed(q, dep, h, semantics, deps, schema, budget)
                    for h in applicable):
                ledger[dep.id] = SOUNDLY_APPLICABLE
            else:
                ledger[dep.id] = UNSOUNDLY_APPLICABLE
        elif dep.id in used or next(find_homomorphisms(dep.premise, q.body), None) is not None:
            ledger[dep.id] = POST_APPLICABLE
        else:
            ledger[dep.id] = PRE_APPLICABLE
    return ledger


def is_key_based_tgd(dep: Dependency, schema: Schema) -> bool:
    """Every conclusion atom's premise-bound argument positions form a
    superkey of its (set-enforced) relation."""
    if dep.kind != "tgd":
        return False
    exvars = set(dep.existentials)
    for a in dep.conclusion:
        if a.pred not in schema.relations or not schema.is_set_enforced(a.pred):
            return False
        bound = {pos for pos, t in enumerate(a.args, start=1)
                 if t.is_const or (t.is_var and t not in exvars)}
        if not bound or not is_superkey(schema, a.pred, bound):
            return False
    return True


def appendix_h_family(m: int) -> tuple[Query, list[Dependency], Schema]:
    """The exponential chase family: binary relations p1..pm, and for each
    consecutive pair a left- and a right-extension tgd. The terminal set-chase
    result of Q(X,Y) :- p1(X,Y) has 2^k-1 subgoals at k relations, doubling
    per level."""
    from .model import RelationInfo, Var

    relations = {f"p{i}": RelationInfo(2) for i in range(1, m + 1)}
    schema = Schema(relations)
    x, y, z, w = Var("X"), Var("Y"), Var("Z"), Var("W")
    deps: list[Dependency] = []
    for i in range(1, m):
        j = i + 1
        deps.append(Dependency(f"left{i}_{j}", "tgd", (Atom(f"p{i}", (x, y)),),
                               (Atom(f"p{j}", (z, x)),), (z,)))
        deps.append(Dependency(f"right{i}_{j}", "tgd", (Atom(f"p{i}", (x, y)),),
                               (Atom(f"p{j}", (y, w)),), (w,)))
    query = Query(Atom("Q", (x, y)), (Atom("p1", (x, y)),))
    return query, deps, schema
