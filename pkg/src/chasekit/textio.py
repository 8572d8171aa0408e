"""Parsing and printing of the `.cqd` text formats.

A document holds any number of sections:

    schema { relation p/2; relation s/2 set; key s(1); fd t(1,2 -> 3); }
    dependencies { s2: p(X,Y) -> exists W : t(X,Y,W). }
    query Q4 { Q4(X) :- p(X,Y). }
    database D { P {(1,2);} U {(1,5);(1,6);} }

Arguments are variables (uppercase-initial identifiers), integers, or quoted
strings. Database sections repeat tuples to encode multiplicity; their
relation names are matched case-insensitively against the schema, following
the usual convention of writing relation P for predicate p. Parse errors
render as `file:line:col: message`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import ChasekitError, ParseError
from .model import (
    AggregateQuery,
    Atom,
    BagDatabase,
    Const,
    Dependency,
    FunctionalDependency,
    Query,
    RelationInfo,
    Schema,
    Term,
    Var,
    is_fresh_name,
    validate_query,
)

AGG_FUNCTIONS = ("sum", "count", "max", "min")


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    offset: int
    filename: Optional[str] = None

    def __str__(self):
        name = self.filename or "<input>"
        return f"{name}:{self.line}:{self.column}"


@dataclass
class Token:
    kind: str  # ident | int | string | punct | eof
    text: str
    value: object
    span: SourceSpan


_PUNCT2 = ("->", ":-")
_PUNCT1 = "(){},;:.=/&"


def _tokenize(text: str, filename: Optional[str] = None) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def span():
        return SourceSpan(line, col, i, filename)

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start = span()
        two = text[i:i + 2]
        if two in _PUNCT2:
            tokens.append(Token("punct", two, two, start))
            i += 2
            col += 2
            continue
        if c == '"':
            j = i + 1
            out = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    out.append(text[j + 1])
                    j += 2
                else:
                    out.append(text[j])
                    j += 1
            if j >= n:
                raise ParseError("unterminated string literal", start)
            tokens.append(Token("string", text[i:j + 1], "".join(out), start))
            col += j + 1 - i
            i = j + 1
            continue
        if c.isdigit() or (c == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], int(text[i:j]), start))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            tokens.append(Token("ident", word, word, start))
            col += j - i
            i = j
            continue
        if c in _PUNCT1:
            tokens.append(Token("punct", c, c, start))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {c!r}", start)
    tokens.append(Token("eof", "", None, span()))
    return tokens


class _Parser:
    def __init__(self, text: str, filename: Optional[str] = None):
        self.tokens = _tokenize(text, filename)
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {tok.text or 'end of input'!r}", tok.span)
        return self.next()

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def at_eof(self) -> bool:
        return self.peek().kind == "eof"

    # -- shared pieces -------------------------------------------------

    def term(self) -> Term:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return Const(tok.value)
        if tok.kind == "string":
            self.next()
            return Const(tok.value)
        if tok.kind == "ident":
            self.next()
            name = tok.text
            if is_fresh_name(name):
                raise ParseError(f"variable name {name!r} uses the reserved prefix", tok.span)
            if name[0].isupper():
                return Var(name)
            raise ParseError(
                f"bare identifier {name!r}; variables start uppercase, constants are "
                "integers or quoted strings", tok.span)
        raise ParseError(f"expected a term, found {tok.text!r}", tok.span)

    def atom(self, schema: Optional[Schema], check_arity: bool = True) -> Atom:
        tok = self.expect("ident")
        pred = tok.text
        self.expect("punct", "(")
        args: list[Term] = []
        if not self.at("punct", ")"):
            args.append(self.term())
            while self.at("punct", ","):
                self.next()
                args.append(self.term())
        self.expect("punct", ")")
        if check_arity and schema is not None:
            if pred not in schema.relations:
                raise ParseError(f"unknown relation {pred!r}", tok.span)
            if len(args) != schema.arity(pred):
                raise ParseError(
                    f"{pred!r} expects {schema.arity(pred)} arguments, found {len(args)}",
                    tok.span)
        return Atom(pred, tuple(args))

    def query(self, schema: Schema) -> Query | AggregateQuery:
        head_tok = self.expect("ident")
        head_pred = head_tok.text
        self.expect("punct", "(")
        head_args: list[Term] = []
        agg: Optional[tuple[str, Optional[Term]]] = None
        while not self.at("punct", ")"):
            if head_args or agg:
                self.expect("punct", ",")
            tok = self.peek()
            if tok.kind == "ident" and tok.text in AGG_FUNCTIONS:
                if agg is not None:
                    raise ParseError("at most one aggregate term per head", tok.span)
                self.next()
                arg = None
                if self.at("punct", "("):
                    self.next()
                    if not self.at("punct", ")"):
                        arg = self.term()
                    self.expect("punct", ")")
                if tok.text != "count" and arg is None:
                    raise ParseError(f"{tok.text} requires an argument", tok.span)
                agg = (tok.text, arg)
            else:
                if agg is not None:
                    raise ParseError("aggregate term must come last in the head", tok.span)
                head_args.append(self.term())
        self.expect("punct", ")")
        self.expect("punct", ":-")
        if self.at("punct", "."):
            raise ParseError("query body must be nonempty", self.peek().span)
        body = [self.atom(schema)]
        while self.at("punct", ","):
            self.next()
            body.append(self.atom(schema))
        dot = self.expect("punct", ".")
        try:
            if agg is None:
                q = Query(Atom(head_pred, tuple(head_args)), tuple(body))
            else:
                fn, arg = agg
                core_args = tuple(head_args) + ((arg,) if arg is not None else ())
                core = Query(Atom(head_pred, core_args), tuple(body))
                return AggregateQuery(tuple(head_args), fn, arg, core)
        except ChasekitError as exc:
            raise ParseError(str(exc), dot.span) from None
        return q

    def dependency(self, schema: Schema, default_id: str) -> Dependency:
        dep_id = default_id
        if self.peek().kind == "ident" and self.peek(1).kind == "punct" and self.peek(1).text == ":":
            dep_id = self.next().text
            self.next()
        first = self.peek()
        premise = [self.atom(schema)]
        while self.at("punct", "&"):
            self.next()
            premise.append(self.atom(schema))
        self.expect("punct", "->")
        if self.at("ident", "exists"):
            self.next()
            exvars = [self.term()]
            while self.at("punct", ","):
                self.next()
                exvars.append(self.term())
            self.expect("punct", ":")
            conclusion = [self.atom(schema)]
            while self.at("punct", "&"):
                self.next()
                conclusion.append(self.atom(schema))
            self.expect("punct", ".")
            return self._build_dep(dep_id, "tgd", premise, conclusion, exvars, None, first.span)
        # either an egd `X = Y` or a full tgd conclusion
        if self.peek(1).kind == "punct" and self.peek(1).text == "(":
            conclusion = [self.atom(schema)]
            while self.at("punct", "&"):
                self.next()
                conclusion.append(self.atom(schema))
            self.expect("punct", ".")
            return self._build_dep(dep_id, "tgd", premise, conclusion, [], None, first.span)
        lhs = self.term()
        self.expect("punct", "=")
        rhs = self.term()
        self.expect("punct", ".")
        return self._build_dep(dep_id, "egd", premise, [], [], (lhs, rhs), first.span)

    def _build_dep(self, dep_id, kind, premise, conclusion, exvars, equated, span):
        try:
            return Dependency(dep_id, kind, tuple(premise), tuple(conclusion),
                              tuple(exvars), equated)
        except ChasekitError as exc:
            raise ParseError(str(exc), span) from None

    def schema(self) -> Schema:
        relations: dict[str, RelationInfo] = {}
        fds: list[FunctionalDependency] = []
        while self.peek().kind == "ident" and self.peek().text in ("relation", "key", "fd"):
            tok = self.next()
            if tok.text == "relation":
                name_tok = self.expect("ident")
                self.expect("punct", "/")
                arity_tok = self.expect("int")
                set_enforced = False
                tupleid = None
                if self.at("ident", "set"):
                    self.next()
                    set_enforced = True
                if self.at("ident", "tupleid"):
                    self.next()
                    tupleid = self.expect("int").value
                self.expect("punct", ";")
                if name_tok.text in relations:
                    raise ParseError(f"duplicate relation {name_tok.text!r}", name_tok.span)
                try:
                    relations[name_tok.text] = RelationInfo(arity_tok.value, set_enforced, tupleid)
                except ChasekitError as exc:
                    raise ParseError(str(exc), arity_tok.span) from None
            elif tok.text == "key":
                rel_tok = self.expect("ident")
                self.expect("punct", "(")
                positions = [self.expect("int").value]
                while self.at("punct", ","):
                    self.next()
                    positions.append(self.expect("int").value)
                self.expect("punct", ")")
                self.expect("punct", ";")
                info = relations.get(rel_tok.text)
                if info is None:
                    raise ParseError(f"key on undeclared relation {rel_tok.text!r}", rel_tok.span)
                if not all(1 <= p <= info.arity for p in positions):
                    raise ParseError("key position out of range", rel_tok.span)
                for dep_pos in range(1, info.arity + 1):
                    if dep_pos not in positions:
                        fds.append(FunctionalDependency(rel_tok.text, frozenset(positions), dep_pos))
            else:  # fd
                rel_tok = self.expect("ident")
                self.expect("punct", "(")
                dets = [self.expect("int").value]
                while self.at("punct", ","):
                    self.next()
                    dets.append(self.expect("int").value)
                self.expect("punct", "->")
                dep_tok = self.expect("int")
                self.expect("punct", ")")
                self.expect("punct", ";")
                info = relations.get(rel_tok.text)
                if info is None:
                    raise ParseError(f"fd on undeclared relation {rel_tok.text!r}", rel_tok.span)
                if not all(1 <= p <= info.arity for p in dets + [dep_tok.value]):
                    raise ParseError("fd position out of range", rel_tok.span)
                fds.append(FunctionalDependency(rel_tok.text, frozenset(dets), dep_tok.value))
        return Schema(relations, fds)

    def database(self, schema: Schema) -> BagDatabase:
        rels: dict[str, dict[tuple, int]] = {}
        lowered = {name.lower(): name for name in schema.relations}
        while self.peek().kind == "ident" and not self.at("ident", "schema") \
                and not self.at("ident", "dependencies") and not self.at("ident", "query") \
                and not self.at("ident", "database"):
            rel_tok = self.next()
            rel = lowered.get(rel_tok.text.lower())
            if rel is None:
                raise ParseError(f"unknown relation {rel_tok.text!r}", rel_tok.span)
            self.expect("punct", "{")
            counted = rels.setdefault(rel, {})
            while self.at("punct", "("):
                open_tok = self.next()
                values: list = []
                if not self.at("punct", ")"):
                    values.append(self._const_value())
                    while self.at("punct", ","):
                        self.next()
                        values.append(self._const_value())
                self.expect("punct", ")")
                self.expect("punct", ";")
                if len(values) != schema.arity(rel):
                    raise ParseError(
                        f"tuple of width {len(values)} for {rel!r}/{schema.arity(rel)}",
                        open_tok.span)
                key = tuple(values)
                counted[key] = counted.get(key, 0) + 1
            self.expect("punct", "}")
        return BagDatabase(rels)

    def _const_value(self):
        tok = self.peek()
        if tok.kind in ("int", "string"):
            self.next()
            return tok.value
        raise ParseError("database tuples hold integers or quoted strings", tok.span)


@dataclass
class Document:
    schema: Optional[Schema] = None
    dependencies: list[Dependency] = field(default_factory=list)
    queries: dict[str, Query | AggregateQuery] = field(default_factory=dict)
    databases: dict[str, BagDatabase] = field(default_factory=dict)


def parse_schema(text: str, filename: Optional[str] = None) -> Schema:
    p = _Parser(text, filename)
    s = p.schema()
    if not p.at_eof():
        raise ParseError(f"unexpected trailing input {p.peek().text!r}", p.peek().span)
    return s


def parse_query(text: str, schema: Schema, filename: Optional[str] = None) -> Query:
    q = parse_query_or_aggregate(text, schema, filename)
    if isinstance(q, AggregateQuery):
        raise ParseError("aggregate head not allowed here")
    return q


def parse_query_or_aggregate(text: str, schema: Schema,
                             filename: Optional[str] = None) -> Query | AggregateQuery:
    p = _Parser(text, filename)
    q = p.query(schema)
    if not p.at_eof():
        raise ParseError(f"unexpected trailing input {p.peek().text!r}", p.peek().span)
    core = q.core if isinstance(q, AggregateQuery) else q
    try:
        validate_query(core, schema)
    except ChasekitError as exc:
        raise ParseError(str(exc)) from None
    return q


def parse_dependency(text: str, schema: Schema, filename: Optional[str] = None,
                     default_id: str = "d1") -> Dependency:
    p = _Parser(text, filename)
    d = p.dependency(schema, default_id)
    if not p.at_eof():
        raise ParseError(f"unexpected trailing input {p.peek().text!r}", p.peek().span)
    return d


def parse_database(text: str, schema: Schema, filename: Optional[str] = None) -> BagDatabase:
    p = _Parser(text, filename)
    db = p.database(schema)
    if not p.at_eof():
        raise ParseError(f"unexpected trailing input {p.peek().text!r}", p.peek().span)
    db.validate(schema)
    return db


def parse_document(text: str, filename: Optional[str] = None) -> Document:
    p = _Parser(text, filename)
    doc = Document()
    dep_count = 0
    while not p.at_eof():
        tok = p.expect("ident")
        if tok.text == "schema":
            p.expect("punct", "{")
            doc.schema = p.schema()
            p.expect("punct", "}")
        elif tok.text == "dependencies":
            if doc.schema is None:
                raise ParseError("dependencies section before schema", tok.span)
            p.expect("punct", "{")
            while not p.at("punct", "}"):
                dep_count += 1
                doc.dependencies.append(p.dependency(doc.schema, f"d{dep_count}"))
            p.expect("punct", "}")
        elif tok.text == "query":
            if doc.schema is None:
                raise ParseError("query section before schema", tok.span)
            name = p.expect("ident").text
            if name in doc.queries:
                raise ParseError(f"duplicate query name {name!r}", tok.span)
            p.expect("punct", "{")
            q = p.query(doc.schema)
            core = q.core if isinstance(q, AggregateQuery) else q
            try:
                validate_query(core, doc.schema)
            except ChasekitError as exc:
                raise ParseError(str(exc), tok.span) from None
            p.expect("punct", "}")
            doc.queries[name] = q
        elif tok.text == "database":
            if doc.schema is None:
                raise ParseError("database section before schema", tok.span)
            name = p.expect("ident").text
            if name in doc.databases:
                raise ParseError(f"duplicate database name {name!r}", tok.span)
            p.expect("punct", "{")
            db = p.database(doc.schema)
            p.expect("punct", "}")
            db.validate(doc.schema)
            doc.databases[name] = db
        else:
            raise ParseError(f"unknown section {tok.text!r}", tok.span)
    return doc


# -- printing ----------------------------------------------------------


def _display_renaming(terms) -> dict[Term, Term]:
    """Rename internal `_v` variables to parseable F<n> names."""
    taken = {t.value for t in terms if t.is_var}
    renaming: dict[Term, Term] = {}
    n = 0
    for t in terms:
        if t.is_var and is_fresh_name(str(t.value)) and t not in renaming:
            n += 1
            while f"F{n}" in taken:
                n += 1
            renaming[t] = Var(f"F{n}")
            taken.add(f"F{n}")
    return renaming


def _atom_terms(atoms):
    for a in atoms:
        yield from a.args


def print_query(q: Query | AggregateQuery) -> str:
    core = q.core if isinstance(q, AggregateQuery) else q
    renaming = _display_renaming(list(core.head.args) + list(_atom_terms(core.body)))
    if not renaming:
        return str(q)
    if isinstance(q, AggregateQuery):
        from .model import rename_query
        core = rename_query(core, renaming)
        arg = renaming.get(q.agg_arg, q.agg_arg) if q.agg_arg is not None else None
        grouping = tuple(renaming.get(t, t) for t in q.grouping)
        return str(AggregateQuery(grouping, q.agg_fn, arg, core))
    from .model import rename_query
    return str(rename_query(q, renaming))


def print_dependency(d: Dependency) -> str:
    terms = list(_atom_terms(d.premise)) + list(_atom_terms(d.conclusion))
    if d.equated:
        terms += list(d.equated)
    renaming = _display_renaming(terms)
    if not renaming:
        return str(d)

    def sub_atoms(atoms):
        return tuple(Atom(a.pred, tuple(renaming.get(t, t) for t in a.args)) for a in atoms)

    equated = None
    if d.equated:
        equated = (renaming.get(d.equated[0], d.equated[0]),
                   renaming.get(d.equated[1], d.equated[1]))
    return str(Dependency(d.id, d.kind, sub_atoms(d.premise), sub_atoms(d.conclusion),
                          tuple(renaming.get(v, v) for v in d.existentials), equated))


def print_database(db: BagDatabase) -> str:
    parts = []
    for rel in sorted(db.relations):
        rows = []
        for t, mult in sorted(db.relations[rel].items(), key=lambda kv: (str(kv[0]),)):
            rendered = "(%s);" % ",".join(str(Const(v)) for v in t)
            rows.extend([rendered] * mult)
        parts.append("%s {%s}" % (rel, "".join(rows)))
    return " ".join(parts)


def print_schema(s: Schema) -> str:
    lines = []
    for name in sorted(s.relations):
        info = s.relations[name]
        decl = f"relation {name}/{info.arity}"
        if info.set_enforced:
            decl += " set"
        if info.tuple_id_position is not None:
            decl += f" tupleid {info.tuple_id_position}"
        lines.append(decl + ";")
    for fd in s.fds:
        dets = ",".join(str(p) for p in sorted(fd.determinants))
        lines.append(f"fd {fd.relation}({dets} -> {fd.dependent});")
    return "\n".join(lines)
