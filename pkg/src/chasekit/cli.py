"""Command-line frontend.

Subcommands: chase, equiv, reformulate, sigma-max, check. Exit codes: 0 on
success (equiv: equivalent), 1 on parse/validation errors, 2 on exhausted
budgets, 3 on a not-equivalent verdict.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

from .chase import StepBudget, chase_set, sound_chase
from .constraints import is_weakly_acyclic, keys, regularize_set
from .equivalence import (
    SearchBounds,
    equiv_aggregate_under_sigma,
    equiv_bag_set_under_sigma,
    equiv_bag_under_sigma,
    equiv_set_under_sigma,
    search_counterexample,
)
from .errors import BudgetExceeded, ChasekitError, ParseError
from .model import AggregateQuery, Query
from .reformulate import candb_aggregate, candb_bag, candb_bag_set, candb_set
from .sigmamax import max_bag_set_sigma_subset, max_bag_sigma_subset
from .textio import Document, parse_document, print_database, print_dependency, print_query

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BUDGET = 2
EXIT_NOT_EQUIVALENT = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chasekit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, query2=False):
        p.add_argument("file", help="input .cqd document")
        p.add_argument("--sem", choices=["S", "B", "BS"], default=None)
        p.add_argument("--query", default=None, help="query name in the document")
        if query2:
            p.add_argument("--query2", default=None)
            p.add_argument("--agg", choices=["sum", "count", "max", "min"], default=None)
        p.add_argument("--budget-steps", type=int, default=None)
        p.add_argument("--budget-atoms", type=int, default=None)
        p.add_argument("--domain", type=int, default=None)
        p.add_argument("--mult", type=int, default=None)
        p.add_argument("--machine", action="store_true")
        p.add_argument("--force", action="store_true",
                       help="chase even when the dependencies are not weakly acyclic")
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--config", default=None, help="key=value file merged under flags")

    p_chase = sub.add_parser("chase", help="chase a query to its terminal result")
    common(p_chase)
    p_chase.add_argument("--trace", action="store_true")
    p_chase.add_argument("--ledger", action="store_true")

    p_equiv = sub.add_parser("equiv", help="decide equivalence of two queries")
    common(p_equiv, query2=True)
    p_equiv.add_argument("--verify", action="store_true",
                         help="cross-check a negative verdict with counterexample search")

    p_ref = sub.add_parser("reformulate", help="enumerate Sigma-minimal reformulations")
    common(p_ref)
    group = p_ref.add_mutually_exclusive_group()
    group.add_argument("--emit-minimal", dest="emit_all", action="store_false",
                       help="print only Sigma-minimal reformulations (default)")
    group.add_argument("--emit-all", dest="emit_all", action="store_true",
                       help="print every accepted backchase candidate")
    p_ref.set_defaults(emit_all=False)

    p_max = sub.add_parser("sigma-max", help="maximal satisfiable dependency subset")
    common(p_max)

    p_check = sub.add_parser("check", help="weak acyclicity, regularization, key inference")
    p_check.add_argument("file")
    p_check.add_argument("--machine", action="store_true")
    p_check.add_argument("--config", default=None)
    return parser


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    out = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _setting(args, config: dict, name: str, default, cast=None):
    value = getattr(args, name, None)
    if value is None:
        value = config.get(name)
        if value is not None and cast is not None:
            value = cast(value)
    if value is None:
        value = default
    return value


def _budget(args, config) -> StepBudget:
    steps = _setting(args, config, "budget_steps", None, int)
    if steps is None:
        steps = int(os.environ.get("CHASEKIT_BUDGET_STEPS", 10_000))
    atoms = _setting(args, config, "budget_atoms", 100_000, int)
    if steps < 1 or atoms < 1:
        raise ChasekitError("budgets must be positive")
    return StepBudget(max_steps=steps, max_atoms=atoms)


def _named_query(doc: Document, name: Optional[str], flag: str):
    if name is None:
        raise ChasekitError(f"missing {flag}")
    try:
        return doc.queries[name]
    except KeyError:
        raise ChasekitError(f"no query named {name!r} in the document") from None


def _require_plain(q, name: str) -> Query:
    if isinstance(q, AggregateQuery):
        raise ChasekitError(f"query {name!r} is an aggregate query; this command "
                            "works on its core only via --agg")
    return q


def _as_aggregate(q, fn: str) -> AggregateQuery:
    if isinstance(q, AggregateQuery):
        if q.agg_fn != fn:
            raise ChasekitError(f"query declares {q.agg_fn}, --agg says {fn}")
        return q
    head = q.head.args
    if fn != "count" and not head:
        raise ChasekitError("aggregate wrapping needs at least one head argument")
    arg = head[-1] if head else None
    if fn == "count" and arg is None:
        return AggregateQuery((), "count", None, q)
    if arg is None or not arg.is_var:
        raise ChasekitError("the last head argument (the aggregated one) must be a variable")
    return AggregateQuery(tuple(head[:-1]), fn, arg, q)


def _gate_acyclicity(doc: Document, force: bool) -> None:
    if force:
        return
    if not is_weakly_acyclic(doc.dependencies, doc.schema):
        raise ChasekitError(
            "dependencies are not weakly acyclic; the chase may not terminate "
            "(pass --force to try anyway)")


def _load(args) -> tuple[Document, dict]:
    config = _load_config(getattr(args, "config", None))
    with open(args.file, encoding="utf-8") as handle:
        text = handle.read()
    doc = parse_document(text, filename=args.file)
    if doc.schema is None:
        raise ChasekitError("document has no schema section")
    return doc, config


def cmd_chase(args) -> int:
    doc, config = _load(args)
    sem = _setting(args, config, "sem", "S")
    q = _require_plain(_named_query(doc, _setting(args, config, "query", None), "--query"),
                       args.query)
    _gate_acyclicity(doc, args.force)
    budget = _budget(args, config)
    if sem == "S":
        outcome = chase_set(q, doc.dependencies, doc.schema, budget)
    else:
        outcome = sound_chase(sem, q, doc.dependencies, doc.schema, budget)
    print(print_query(outcome.result))
    if args.trace:
        print(outcome.render_trace())
    if args.ledger:
        for dep_id in sorted(outcome.ledger):
            print(f"{dep_id}: {outcome.ledger[dep_id]}")
    return EXIT_OK


def cmd_equiv(args) -> int:
    doc, config = _load(args)
    sem = _setting(args, config, "sem", "S")
    name1 = _setting(args, config, "query", None)
    name2 = _setting(args, config, "query2", None)
    q1 = _named_query(doc, name1, "--query")
    q2 = _named_query(doc, name2, "--query2")
    _gate_acyclicity(doc, args.force)
    budget = _budget(args, config)
    agg = _setting(args, config, "agg", None)
    aggregates = None
    if agg is not None or isinstance(q1, AggregateQuery) or isinstance(q2, AggregateQuery):
        fn = agg or (q1.agg_fn if isinstance(q1, AggregateQuery) else q2.agg_fn)
        a1, a2 = _as_aggregate(q1, fn), _as_aggregate(q2, fn)
        aggregates = (a1, a2)
        verdict = equiv_aggregate_under_sigma(a1, a2, doc.dependencies, doc.schema, budget)
        core1, core2 = a1.core, a2.core
        verify_sem = "S" if fn in ("max", "min") else "BS"
    else:
        q1, q2 = _require_plain(q1, name1), _require_plain(q2, name2)
        decider = {"S": equiv_set_under_sigma, "B": equiv_bag_under_sigma,
                   "BS": equiv_bag_set_under_sigma}[sem]
        verdict = decider(q1, q2, doc.dependencies, doc.schema, budget)
        core1, core2, verify_sem = q1, q2, sem
    witness_path = None
    witness = None
    if args.verify and not verdict.equivalent:
        bounds = SearchBounds(domain=_setting(args, config, "domain", 6, int),
                              mult=_setting(args, config, "mult", 2, int))
        witness = search_counterexample(core1, core2, verify_sem,
                                        doc.dependencies, doc.schema, bounds)
        if witness is not None:
            witness_path = args.file + ".witness"
            with open(witness_path, "w", encoding="utf-8") as handle:
                handle.write("database witness { %s }\n" % print_database(witness))
    print(verdict.render(machine=args.machine, witness_path=witness_path))
    if not args.machine and witness_path:
        print(f"witness written to {witness_path}")
        if aggregates is not None:
            from .evaluator import eval_aggregate

            left = sorted(eval_aggregate(aggregates[0], witness))
            right = sorted(eval_aggregate(aggregates[1], witness))
            if left != right:
                print(f"aggregate answers on the witness: {left} vs {right}")
            else:
                print("witness separates the cores; aggregate answers coincide on it")
    return EXIT_OK if verdict.equivalent else EXIT_NOT_EQUIVALENT


def cmd_reformulate(args) -> int:
    doc, config = _load(args)
    sem = _setting(args, config, "sem", "S")
    name = _setting(args, config, "query", None)
    q = _named_query(doc, name, "--query")
    _gate_acyclicity(doc, args.force)
    budget = _budget(args, config)
    jobs = _setting(args, config, "jobs", 1, int)
    if isinstance(q, AggregateQuery):
        result = candb_aggregate(q, doc.dependencies, doc.schema, budget, jobs)
        print(result.render(machine=args.machine))
    else:
        runner = {"S": candb_set, "B": candb_bag, "BS": candb_bag_set}[sem]
        result = runner(q, doc.dependencies, doc.schema, budget, jobs)
        print(result.render(machine=args.machine, emit_all=args.emit_all))
    return EXIT_OK


def cmd_sigma_max(args) -> int:
    doc, config = _load(args)
    sem = _setting(args, config, "sem", "B")
    if sem == "S":
        raise ChasekitError("sigma-max is defined for B and BS semantics")
    name = _setting(args, config, "query", None)
    q = _require_plain(_named_query(doc, name, "--query"), name)
    _gate_acyclicity(doc, args.force)
    budget = _budget(args, config)
    runner = max_bag_sigma_subset if sem == "B" else max_bag_set_sigma_subset
    report = runner(q, doc.dependencies, doc.schema, budget)
    print(report.render(machine=args.machine))
    return EXIT_OK


def cmd_check(args) -> int:
    doc, _ = _load(args)
    acyclic = is_weakly_acyclic(doc.dependencies, doc.schema)
    print(f"weakly acyclic: {'yes' if acyclic else 'no'}")
    print("regularized dependencies:")
    for dep in regularize_set(doc.dependencies):
        print(f"  {print_dependency(dep)}")
    print("keys:")
    for rel in sorted(doc.schema.relations):
        inferred = keys(doc.schema, rel)
        rendered = ", ".join("(" + ",".join(str(p) for p in sorted(k)) + ")"
                             for k in sorted(inferred, key=sorted))
        print(f"  {rel}: {rendered}")
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"chase": cmd_chase, "equiv": cmd_equiv, "reformulate": cmd_reformulate,
                "sigma-max": cmd_sigma_max, "check": cmd_check}
    try:
        return handlers[args.command](args)
    except ParseError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ERROR
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        if exc.partial is not None:
            print("partial result: " + print_query(exc.partial.result), file=sys.stderr)
        return EXIT_BUDGET
    except ChasekitError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
