"""Homomorphisms, containment mappings, isomorphism, and the dependency-free
equivalence tests built from them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence

from .errors import HeadArityMismatch
from .model import (
    Atom,
    Query,
    Schema,
    Term,
    canonical_representation,
    dedup_set_enforced,
)


@dataclass(frozen=True)
class Homomorphism:
    """Variable mapping plus the atom-level image it was found with.

    Constants map to themselves and are not stored. atom_image[i] is the index
    of the target atom that source atom i landed on.
    """

    mapping: Mapping[Term, Term]
    atom_image: tuple[int, ...]

    def apply(self, t: Term) -> Term:
        if t.is_const:
            return t
        return self.mapping.get(t, t)

    def apply_atom(self, a: Atom) -> Atom:
        return Atom(a.pred, tuple(self.apply(t) for t in a.args))


def find_homomorphisms(src: Sequence[Atom], dst: Sequence[Atom],
                       anchor: Optional[Mapping[Term, Term]] = None,
                       ) -> Iterator[Homomorphism]:
    """All homomorphisms from src to dst extending anchor, in lexicographic
    atom-image order."""
    mapping: dict[Term, Term] = dict(anchor or {})
    image: list[int] = []
    by_pred: dict[str, list[int]] = {}
    for i, a in enumerate(dst):
        by_pred.setdefault(a.pred, []).append(i)

    def walk(i: int) -> Iterator[Homomorphism]:
        if i == len(src):
            yield Homomorphism(dict(mapping), tuple(image))
            return
        atom = src[i]
        for j in by_pred.get(atom.pred, ()):
            target = dst[j]
            if len(target.args) != len(atom.args):
                continue
            bound: list[Term] = []
            ok = True
            for s, t in zip(atom.args, target.args):
                if s.is_const:
                    if s != t:
                        ok = False
                        break
                else:
                    cur = mapping.get(s)
                    if cur is None:
                        mapping[s] = t
                        bound.append(s)
                    elif cur != t:
                        ok = False
                        break
            if ok:
                image.append(j)
                yield from walk(i + 1)
                image.pop()
            for s in bound:
                del mapping[s]
        return

    yield from walk(0)


def containment_mapping(q2: Query, q1: Query) -> Optional[Homomorphism]:
    """A homomorphism body(q2) -> body(q1) with h(head2) = head1, or None.

    Its existence is equivalent to q1 being set-contained in q2.
    """
    if len(q2.head.args) != len(q1.head.args):
        raise HeadArityMismatch(f"{len(q2.head.args)} vs {len(q1.head.args)}")
    anchor: dict[Term, Term] = {}
    for s, t in zip(q2.head.args, q1.head.args):
        if s.is_const:
            if s != t:
                return None
        else:
            cur = anchor.get(s)
            if cur is None:
                anchor[s] = t
            elif cur != t:
                return None
    return next(find_homomorphisms(q2.body, q1.body, anchor), None)


def set_equivalent(q1: Query, q2: Query) -> bool:
    """Containment mappings in both directions."""
    return (containment_mapping(q1, q2) is not None
            and containment_mapping(q2, q1) is not None)


def _signature(q: Query) -> tuple:
    preds = sorted((a.pred, len(a.args)) for a in q.body)
    # per-variable occurrence profile, order-insensitive
    profile: dict[Term, list[tuple]] = {}
    for a in q.body:
        for pos, t in enumerate(a.args):
            if t.is_var:
                profile.setdefault(t, []).append((a.pred, pos))
    var_profiles = sorted(tuple(sorted(v)) for v in profile.values())
    consts = sorted(str(t) for a in q.body for t in a.args if t.is_const)
    return (len(q.body), tuple(preds), tuple(var_profiles), tuple(consts))


def isomorphic(q1: Query, q2: Query) -> bool:
    """A bijective variable renaming maps q1 onto q2: bodies correspond as
    multisets of atoms and heads match positionally."""
    if len(q1.head.args) != len(q2.head.args):
        raise HeadArityMismatch(f"{len(q1.head.args)} vs {len(q2.head.args)}")
    if len(q1.body) != len(q2.body):
        return False
    if _signature(q1) != _signature(q2):
        return False

    fwd: dict[Term, Term] = {}
    rev: dict[Term, Term] = {}

    def bind(s: Term, t: Term) -> Optional[list[Term]]:
        if s.is_const or t.is_const:
            return [] if s == t else None
        cur = fwd.get(s)
        if cur is not None:
            return [] if cur == t else None
        if t in rev:
            return None
        fwd[s] = t
        rev[t] = s
        return [s]

    def unbind(keys: list[Term]):
        for s in keys:
            t = fwd.pop(s)
            del rev[t]

    head_bound: list[Term] = []
    for s, t in zip(q1.head.args, q2.head.args):
        got = bind(s, t)
        if got is None:
            unbind(head_bound)
            return False
        head_bound.extend(got)

    used = [False] * len(q2.body)

    def walk(i: int) -> bool:
        if i == len(q1.body):
            return True
        a = q1.body[i]
        for j, b in enumerate(q2.body):
            if used[j] or b.pred != a.pred or len(b.args) != len(a.args):
                continue
            bound: list[Term] = []
            ok = True
            for s, t in zip(a.args, b.args):
                got = bind(s, t)
                if got is None:
                    ok = False
                    break
                bound.extend(got)
            if ok:
                used[j] = True
                if walk(i + 1):
                    return True
                used[j] = False
            unbind(bound)
        return False

    result = walk(0)
    unbind(head_bound)
    return result


def bag_equivalent(q1: Query, q2: Query) -> bool:
    """Bag equivalence without dependencies: isomorphism."""
    return isomorphic(q1, q2)


def bag_set_equivalent(q1: Query, q2: Query) -> bool:
    """Bag-set equivalence: canonical representations isomorphic."""
    return isomorphic(canonical_representation(q1), canonical_representation(q2))


def bag_equivalent_with_set_relations(q1: Query, q2: Query, schema: Schema) -> bool:
    """Bag equivalence when the schema's set-enforced relations are the only
    constraints in force: isomorphism after dropping duplicate subgoals of
    set-enforced relations."""
    return isomorphic(dedup_set_enforced(q1, schema), dedup_set_enforced(q2, schema))
