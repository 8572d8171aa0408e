"""Functional-dependency reasoning, tuple-ID set-enforcing egds, weak
acyclicity, and tgd regularization."""

from __future__ import annotations

from itertools import combinations
from typing import Iterable

from .errors import ChasekitError, UnknownRelation
from .model import Atom, Dependency, Schema, Term, Var


def fd_closure(schema: Schema, rel: str, attrs: Iterable[int]) -> frozenset[int]:
    """Attribute closure of attrs under the schema's fds for rel."""
    if rel not in schema.relations:
        raise UnknownRelation(rel)
    closure = set(attrs)
    fds = [fd for fd in schema.fds if fd.relation == rel]
    changed = True
    while changed:
        changed = False
        for fd in fds:
            if fd.dependent not in closure and fd.determinants <= closure:
                closure.add(fd.dependent)
                changed = True
    return frozenset(closure)


def is_superkey(schema: Schema, rel: str, attrs: Iterable[int]) -> bool:
    attrs = set(attrs)
    if not attrs:
        return False
    arity = schema.arity(rel)
    if not all(1 <= p <= arity for p in attrs):
        raise ChasekitError(f"attribute positions out of range for {rel}")
    return fd_closure(schema, rel, attrs) == frozenset(range(1, arity + 1))


def keys(schema: Schema, rel: str) -> set[frozenset[int]]:
    """All minimal superkeys of rel."""
    arity = schema.arity(rel)
    positions = list(range(1, arity + 1))
    found: set[frozenset[int]] = set()
    for size in range(1, arity + 1):
        for combo in combinations(positions, size):
            cand = frozenset(combo)
            if any(k <= cand for k in found):
                continue
            if is_superkey(schema, rel, cand):
                found.add(cand)
    return found


def set_enforcing_egd(schema: Schema, rel: str) -> Dependency:
    """The tuple-ID egd for rel: two tuples agreeing on every non-ID position
    must agree on the tuple ID."""
    pos = schema.tuple_id_position(rel)  # raises NoTupleId when absent
    arity = schema.arity(rel)
    left = tuple(Var(f"X{i}") if i != pos else Var("U") for i in range(1, arity + 1))
    right = tuple(Var(f"X{i}") if i != pos else Var("W") for i in range(1, arity + 1))
    return Dependency(f"{rel}_tid", "egd", (Atom(rel, left), Atom(rel, right)),
                      equated=(Var("U"), Var("W")))


def dependency_graph(deps: Iterable[Dependency], schema: Schema,
                     ) -> tuple[set[tuple], set[tuple], set[tuple]]:
    """Nodes (rel, position) plus ordinary and special edge sets, built from
    the tgds only."""
    nodes = {(rel, pos) for rel, info in schema.relations.items()
             for pos in range(1, info.arity + 1)}
    ordinary: set[tuple] = set()
    special: set[tuple] = set()
    for dep in deps:
        if dep.kind != "tgd":
            continue
        exvars = set(dep.existentials)
        concl_positions: dict[Term, list[tuple]] = {}
        for a in dep.conclusion:
            for pos, t in enumerate(a.args, start=1):
                if t.is_var:
                    concl_positions.setdefault(t, []).append((a.pred, pos))
        for a in dep.premise:
            for pos, t in enumerate(a.args, start=1):
                if not t.is_var or t in exvars:
                    continue
                src = (a.pred, pos)
                if t not in concl_positions:
                    continue
                for dst in concl_positions[t]:
                    ordinary.add((src, dst))
                for ex in exvars:
                    for dst in concl_positions.get(ex, ()):
                        special.add((src, dst))
    return nodes, ordinary, special


def is_weakly_acyclic(deps: Iterable[Dependency], schema: Schema) -> bool:
    """No cycle in the dependency graph goes through a special edge."""
    _, ordinary, special = dependency_graph(deps, schema)
    adjacency: dict[tuple, set[tuple]] = {}
    for u, v in ordinary | special:
        adjacency.setdefault(u, set()).add(v)

    def reaches(start: tuple, goal: tuple) -> bool:
        stack, seen = [start], {start}
        while stack:
            node = stack.pop()
            if node == goal:
                return True
            for nxt in adjacency.get(node, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    return not any(reaches(v, u) for u, v in special)


def regularize(dep: Dependency) -> list[Dependency]:
    """Split a tgd's conclusion into components connected by shared
    existential variables; one tgd per component, same premise. Egds and
    single-component tgds pass through unchanged.

    Output ids are `<id>.<k>` numbered by first atom of each component in
    conclusion order.
    """
    if dep.kind != "tgd" or len(dep.conclusion) <= 1:
        return [dep]
    exvars = set(dep.existentials)
    parent = list(range(len(dep.conclusion)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int):
        parent[find(i)] = find(j)

    by_exvar: dict[Term, int] = {}
    for idx, a in enumerate(dep.conclusion):
        for t in a.variables():
            if t in exvars:
                if t in by_exvar:
                    union(idx, by_exvar[t])
                else:
                    by_exvar[t] = idx
    groups: dict[int, list[int]] = {}
    for idx in range(len(dep.conclusion)):
        groups.setdefault(find(idx), []).append(idx)
    components = sorted(groups.values(), key=lambda idxs: idxs[0])
    if len(components) == 1:
        return [dep]
    out = []
    for k, idxs in enumerate(components, start=1):
        atoms = tuple(dep.conclusion[i] for i in idxs)
        used = {t for a in atoms for t in a.variables()}
        ex = tuple(v for v in dep.existentials if v in used)
        out.append(Dependency(f"{dep.id}.{k}", "tgd", dep.premise, atoms, ex))
    return out


def regularize_set(deps: Iterable[Dependency]) -> list[Dependency]:
    out: list[Dependency] = []
    for dep in deps:
        out.extend(regularize(dep))
    return out
