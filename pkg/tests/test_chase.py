import pytest

from chasekit.chase import (
    StepBudget,
    appendix_h_family,
    associated_test_query,
    chase_set,
    egd_applicable_homs,
    egd_step,
    is_assignment_fixing,
    is_key_based_tgd,
    sound_chase,
    sound_chase_step_allowed,
    tgd_applicable_homs,
    tgd_step,
)
from chasekit.errors import BudgetExceeded, ChaseFailure, NotApplicable
from chasekit.evaluator import canonical_database, satisfies
from chasekit.mappings import (
    bag_equivalent_with_set_relations,
    bag_set_equivalent,
    containment_mapping,
    isomorphic,
)
from chasekit.model import (
    Atom,
    Const,
    Dependency,
    Query,
    RelationInfo,
    Schema,
    Var,
    canonical_representation,
    dedup_set_enforced,
)

X, Y, Z, W = Var("X"), Var("Y"), Var("Z"), Var("W")


def _first_hom(q, dep):
    return next(tgd_applicable_homs(q, dep))


def test_tgd_step_adds_whole_conclusion(ex47):
    h = _first_hom(ex47.q, ex47.n1)
    stepped = tgd_step(ex47.q, ex47.n1, h)
    assert isomorphic(stepped, ex47.q_full)
    assert not isomorphic(stepped, ex47.q_partial)


def test_tgd_step_on_witnessed_conclusion_raises(ex41):
    h = _first_hom(ex41.q4, ex41.s2)
    stepped = tgd_step(ex41.q4, ex41.s2, h)
    with pytest.raises(NotApplicable):
        tgd_step(stepped, ex41.s2, h)
    assert list(tgd_applicable_homs(stepped, ex41.s2)) == []


def test_tgd_step_example41(ex41):
    stepped = tgd_step(ex41.q4, ex41.s2, _first_hom(ex41.q4, ex41.s2))
    assert len(stepped.body) == 2
    t_atom = stepped.body[1]
    assert t_atom.pred == "t"
    assert t_atom.args[:2] == (X, Y)
    assert t_atom.args[2].is_var and str(t_atom.args[2].value).startswith("_v")


def test_egd_step_merges_key_violation(ex41):
    q = Query(Atom("Q", (X,)),
              (Atom("t", (X, Y, Z)), Atom("t", (X, Y, W))))
    h = next(egd_applicable_homs(q, ex41.s8))
    merged = egd_step(q, ex41.s8, h, ex41.schema, "S")
    assert len(merged.body) == 1
    assert merged.body[0].args[:2] == (X, Y)


def test_egd_step_constant_failure():
    schema = Schema({"t": RelationInfo(2)})
    egd = Dependency("k", "egd", (Atom("t", (X, Y)), Atom("t", (X, Z))), equated=(Y, Z))
    q = Query(Atom("Q", (X,)), (Atom("t", (X, Const(1))), Atom("t", (X, Const(2)))))
    h = next(egd_applicable_homs(q, egd))
    with pytest.raises(ChaseFailure):
        egd_step(q, egd, h, schema, "S")
    # no premise match at all -> not applicable
    lone = Query(Atom("Q", (X,)), (Atom("t", (X, Const(1))),))
    assert list(egd_applicable_homs(lone, egd)) == []
    with pytest.raises(NotApplicable):
        egd_step(lone, egd, h, schema, "S")


def test_egd_step_bag_semantics_keeps_nonset_duplicates():
    schema = Schema({"r": RelationInfo(2), "s": RelationInfo(2, set_enforced=True)})
    egd = Dependency("k", "egd", (Atom("r", (X, Y)), Atom("r", (X, Z))), equated=(Y, Z))
    q = Query(Atom("Q", (X,)),
              (Atom("r", (X, Y)), Atom("r", (X, Z)), Atom("s", (X, Y)), Atom("s", (X, Z))))
    h = next(egd_applicable_homs(q, egd))
    under_bag = egd_step(q, egd, h, schema, "B")
    # both r-copies remain, the s-duplicate is dropped
    assert sum(1 for a in under_bag.body if a.pred == "r") == 2
    assert sum(1 for a in under_bag.body if a.pred == "s") == 1
    under_set = egd_step(q, egd, h, schema, "S")
    assert sum(1 for a in under_set.body if a.pred == "r") == 1


def test_chase_set_example41(ex41):
    outcome = chase_set(ex41.q4, ex41.deps, ex41.schema)
    assert isomorphic(outcome.result, ex41.q1)
    assert outcome.semantics == "S"
    assert outcome.trace  # four tgd steps
    # chasing a terminal query is a no-op
    again = chase_set(outcome.result, ex41.deps, ex41.schema)
    assert again.result == outcome.result
    assert chase_set(ex41.q4, [], ex41.schema).result == ex41.q4


def test_chase_terminal_canonical_database_satisfies_sigma(ex41):
    outcome = chase_set(ex41.q4, ex41.deps, ex41.schema)
    assert satisfies(canonical_database(outcome.result), ex41.deps, ex41.schema)


def test_chase_set_budget():
    q, deps, schema = appendix_h_family(5)
    with pytest.raises(BudgetExceeded) as info:
        chase_set(q, deps, schema, StepBudget(max_steps=3))
    assert info.value.partial is not None
    assert len(info.value.partial.trace) == 3


def test_associated_test_query_example44(ex44):
    h = _first_hom(ex44.q, ex44.s1)
    tq, theta = associated_test_query(ex44.q, ex44.s1, h)
    # body: p(X,Y), r(X,Z), s(Z,W), r(X,Z1), s(Z1,W1)
    assert len(tq.body) == 5
    assert [a.pred for a in tq.body] == ["p", "r", "s", "r", "s"]
    assert len(theta) == 2
    expected = Query(Atom("Q", (X,)),
                     (Atom("p", (X, Y)), Atom("r", (X, Z)), Atom("s", (Z, W)),
                      Atom("r", (X, Var("Z1"))), Atom("s", (Var("Z1"), Var("W1")))))
    assert isomorphic(tq, expected)


def test_associated_test_query_example45(ex45):
    h = _first_hom(ex45.q, ex45.s4)
    tq, theta = associated_test_query(ex45.q, ex45.s4, h)
    assert [a.pred for a in tq.body] == ["p", "r", "s", "s", "r", "s", "s"]
    expected = Query(Atom("Q", (X,)),
                     (Atom("p", (X, Y)), Atom("r", (X, Z)), Atom("s", (Z, W)),
                      Atom("s", (X, Var("T"))), Atom("r", (X, Var("Z1"))),
                      Atom("s", (Var("Z1"), Var("W1"))), Atom("s", (X, Var("T1")))))
    assert isomorphic(tq, expected)


def test_associated_test_query_full_tgd_equals_step(ex41):
    h = _first_hom(ex41.q4, ex41.s3)
    tq, theta = associated_test_query(ex41.q4, ex41.s3, h)
    assert theta == {}
    assert tq == canonical_representation(tgd_step(ex41.q4, ex41.s3, h))


def test_assignment_fixing_example44(ex44):
    h = _first_hom(ex44.q, ex44.s1)
    assert is_assignment_fixing(ex44.q, ex44.s1, h, ex44.deps, ex44.schema)
    tq, _ = associated_test_query(ex44.q, ex44.s1, h)
    terminal = chase_set(tq, ex44.deps, ex44.schema).result
    assert isomorphic(terminal, ex44.expected_terminal)


def test_assignment_fixing_example45_erratum(ex45):
    """The printed claim is that s4 is not assignment-fixing and that the test
    query's terminal keeps both copies. Under the chase-step definitions the
    s5 egd also matches across the two copies (r(X,Z), s(Z,W), s(X,W1) force
    W = W1), so the printed terminal is not a fixpoint, the collapsed terminal
    witnesses assignment fixing, and the printed counterexample database
    violates s5. See the acceptance criterion 3 notes."""
    h = _first_hom(ex45.q, ex45.s4)
    tq, theta = associated_test_query(ex45.q, ex45.s4, h)
    terminal = chase_set(tq, ex45.deps, ex45.schema).result
    # the printed "terminal" is strictly larger than the real fixpoint
    assert len(terminal.body) < len(ex45.printed_terminal.body)
    collapsed = Query(Atom("Q", (X,)),
                      (Atom("p", (X, Y)), Atom("r", (X, Z)), Atom("s", (Z, W)),
                       Atom("s", (X, W))))
    assert isomorphic(terminal, collapsed)
    assert is_assignment_fixing(ex45.q, ex45.s4, h, ex45.deps, ex45.schema)
    # the printed counterexample database does not satisfy the dependencies
    assert not satisfies(ex45.printed_counterexample, ex45.deps, ex45.schema)
    assert not satisfies(ex45.printed_counterexample,
                         [ex45.s2, ex45.s4, ex45.s5], ex45.schema)


def test_assignment_fixing_is_query_dependent(ex45):
    """Dropping the value-equating egds leaves s4 genuinely non-fixing, and
    the verdict flips with the query shape."""
    deps = [ex45.s2, ex45.s4]
    h = _first_hom(ex45.q, ex45.s4)
    assert not is_assignment_fixing(ex45.q, ex45.s4, h, deps, ex45.schema)
    with_egds = ex45.deps
    assert is_assignment_fixing(ex45.q, ex45.s4, h, with_egds, ex45.schema)


def test_full_tgds_always_assignment_fixing(ex41):
    h = _first_hom(ex41.q4, ex41.s3)
    assert is_assignment_fixing(ex41.q4, ex41.s3, h, ex41.deps, ex41.schema)


def test_sound_step_allowed(ex41, ex47):
    # s3 adds r, not set-enforced: banned under B, fine under BS
    h3 = _first_hom(ex41.q3, ex41.s3)
    assert not sound_chase_step_allowed(ex41.q3, ex41.s3, h3, "B",
                                        ex41.deps, ex41.schema)
    h4 = _first_hom(ex41.q4, ex41.s3)
    assert sound_chase_step_allowed(ex41.q4, ex41.s3, h4, "BS",
                                    ex41.deps, ex41.schema)
    # nu1 of the shared-existential example is allowed under both semantics
    h1 = _first_hom(ex47.q, ex47.n1)
    for sem in ("B", "BS"):
        assert sound_chase_step_allowed(ex47.q, ex47.n1, h1, sem,
                                        ex47.deps, ex47.schema)
    # egds are always allowed
    egd_q = Query(Atom("Q", (X,)), (Atom("s", (X, Y)), Atom("s", (X, Z))))
    h7 = next(egd_applicable_homs(egd_q, ex41.s7))
    assert sound_chase_step_allowed(egd_q, ex41.s7, h7, "B", ex41.deps, ex41.schema)


def test_sound_chase_example41(ex41):
    b = sound_chase("B", ex41.q4, ex41.deps, ex41.schema)
    assert isomorphic(b.result, ex41.q3)
    bs = sound_chase("BS", ex41.q4, ex41.deps, ex41.schema)
    assert isomorphic(bs.result, ex41.q2)
    assert sound_chase("B", ex41.q3, ex41.deps, ex41.schema).result == ex41.q3
    assert sound_chase("B", ex41.q4, [], ex41.schema).result == ex41.q4


def test_sound_chase_example47_never_partial(ex47):
    outcome = sound_chase("B", ex47.q, ex47.deps, ex47.schema)
    assert isomorphic(outcome.result, ex47.q_full)
    assert not isomorphic(outcome.result, ex47.q_partial)
    for step in outcome.trace:
        if step.added:
            # every tgd step added the whole conclusion of n1
            assert sorted(a.pred for a in step.added) == ["s", "t"]


def test_terminal_ledger_states(ex41):
    b = sound_chase("B", ex41.q4, ex41.deps, ex41.schema)
    assert b.ledger["s3"] == "unsoundly-applicable"
    assert b.ledger["s4.1"] == "unsoundly-applicable"
    assert b.ledger["s2"] == "post-applicable"
    assert "soundly-applicable" not in b.ledger.values()
    bs = sound_chase("BS", ex41.q4, ex41.deps, ex41.schema)
    assert bs.ledger["s3"] == "post-applicable"
    assert bs.ledger["s4.1"] == "unsoundly-applicable"
    assert "soundly-applicable" not in bs.ledger.values()
    s = chase_set(ex41.q4, ex41.deps, ex41.schema)
    assert "soundly-applicable" not in s.ledger.values()
    assert s.ledger["s4.1"] == "post-applicable"
    # a dependency whose premise never matches stays pre-applicable; a matched
    # but witnessed one is post-applicable
    lone = Dependency("lone", "tgd", (Atom("u", (X, X)),), (Atom("r", (X,)),))
    out = chase_set(ex41.q4, ex41.deps + [lone], ex41.schema)
    assert out.ledger["lone"] == "pre-applicable"
    witnessed = Dependency("wit", "tgd", (Atom("u", (X, Y)),), (Atom("r", (X,)),))
    out2 = chase_set(ex41.q4, ex41.deps + [witnessed], ex41.schema)
    assert out2.ledger["wit"] == "post-applicable"


def test_uniqueness_under_reversed_order(ex41):
    fwd_b = sound_chase("B", ex41.q4, ex41.deps, ex41.schema).result
    rev_b = sound_chase("B", ex41.q4, list(reversed(ex41.deps)), ex41.schema).result
    assert isomorphic(dedup_set_enforced(fwd_b, ex41.schema),
                      dedup_set_enforced(rev_b, ex41.schema))
    fwd_bs = sound_chase("BS", ex41.q4, ex41.deps, ex41.schema).result
    rev_bs = sound_chase("BS", ex41.q4, list(reversed(ex41.deps)), ex41.schema).result
    assert bag_set_equivalent(fwd_bs, rev_bs)


def test_containment_chain(ex41):
    """(Q)_{S} set-contained in (Q)_{BS} set-contained in (Q)_{B} set-contained in Q."""
    qs = chase_set(ex41.q4, ex41.deps, ex41.schema).result
    qbs = sound_chase("BS", ex41.q4, ex41.deps, ex41.schema).result
    qb = sound_chase("B", ex41.q4, ex41.deps, ex41.schema).result
    for smaller, larger in [(qs, qbs), (qbs, qb), (qb, ex41.q4)]:
        assert containment_mapping(larger, smaller) is not None


def test_is_key_based_tgd(ex41, ex47):
    assert is_key_based_tgd(ex41.s2, ex41.schema)
    assert not is_key_based_tgd(ex47.n1, ex47.schema)  # the s-atom lacks a key
    assert not is_key_based_tgd(ex41.s3, ex41.schema)  # r is not set-enforced
    assert not is_key_based_tgd(ex41.s7, ex41.schema)  # egd


def test_key_based_steps_are_assignment_fixing(ex41):
    for q in (ex41.q4, ex41.q3):
        for h in tgd_applicable_homs(q, ex41.s2):
            assert is_assignment_fixing(q, ex41.s2, h, ex41.deps, ex41.schema)


def test_appendix_h_family_counts_and_acyclicity():
    from chasekit.constraints import is_weakly_acyclic

    for m in range(2, 6):
        q, deps, schema = appendix_h_family(m)
        assert is_weakly_acyclic(deps, schema)
        outcome = chase_set(q, deps, schema)
        assert len(outcome.result.body) == 2 ** m - 1


def test_trace_render(ex41):
    outcome = chase_set(ex41.q4, ex41.deps, ex41.schema)
    text = outcome.render_trace()
    assert "s2" in text and "add" in text
