import pytest

from chasekit.errors import ChasekitError
from chasekit.model import (
    Atom,
    BagDatabase,
    Const,
    Dependency,
    Query,
    Var,
    canonical_representation,
    dedup_set_enforced,
    fresh_var,
    normal_form,
)

X, Y, Z, W = Var("X"), Var("Y"), Var("Z"), Var("W")


def test_term_equality():
    assert Var("X") == Var("X")
    assert Var("X") != Const("X")
    assert Const(1) == Const(1)
    assert Const(1) != Const("1")


def test_fresh_variables_unique_and_reserved():
    a = fresh_var("Z")
    b = fresh_var("Z")
    assert a != b
    assert a.value.startswith("_v") and b.value.startswith("_v")


def test_fresh_var_hint_not_compared():
    a = fresh_var("hint")
    same = type(a)("var", a.value, hint="other")
    assert a == same


def test_query_safety_enforced():
    with pytest.raises(ChasekitError):
        Query(Atom("Q", (Z,)), (Atom("p", (X, Y)),))
    with pytest.raises(ChasekitError):
        Query(Atom("Q", (X,)), ())


def test_dependency_validation():
    with pytest.raises(ChasekitError):
        # conclusion variable neither premise-bound nor existential
        Dependency("d", "tgd", (Atom("p", (X, Y)),), (Atom("q", (X, Z)),))
    with pytest.raises(ChasekitError):
        # equated term missing from the premise
        Dependency("d", "egd", (Atom("p", (X, Y)),), equated=(X, Z))
    d = Dependency("d", "tgd", (Atom("p", (X, Y)),), (Atom("q", (X, Z)),), (Z,))
    assert d.existentials == (Z,)


def test_canonical_representation(ex41):
    got = canonical_representation(ex41.q5)
    assert got.body == ex41.q3.body
    assert got.head == ex41.q5.head
    # idempotent, identity on duplicate-free queries
    assert canonical_representation(got).body == got.body
    assert canonical_representation(ex41.q4) == ex41.q4
    assert canonical_representation(ex41.q7).body == ex41.q8.body


def test_dedup_set_enforced(ex41):
    # s is set-enforced: the duplicate s-atom of Q5 collapses
    assert dedup_set_enforced(ex41.q5, ex41.schema).body == ex41.q3.body
    # r is not: Q7 keeps both copies
    assert dedup_set_enforced(ex41.q7, ex41.schema) == ex41.q7
    assert dedup_set_enforced(ex41.q3, ex41.schema) == ex41.q3


def test_dedup_matches_canonical_when_all_enforced(ex41):
    from chasekit.model import RelationInfo, Schema

    all_set = Schema({name: RelationInfo(info.arity, set_enforced=True)
                      for name, info in ex41.schema.relations.items()})
    assert dedup_set_enforced(ex41.q5, all_set).body == \
        canonical_representation(ex41.q5).body
    assert dedup_set_enforced(ex41.q7, all_set).body == \
        canonical_representation(ex41.q7).body


def test_bag_database_basics():
    db = BagDatabase({"p": {(1, 2): 2, (3, 4): 1}})
    assert db.total_tuples() == 3
    assert not db.is_set_valued("p")
    assert db.core_set().is_set_valued()
    assert db.constants() == {1, 2, 3, 4}
    assert BagDatabase({"p": {(1, 2): 2}}) == BagDatabase({"p": {(1, 2): 2}})
    assert BagDatabase({"p": {(1, 2): 2}}) != BagDatabase({"p": {(1, 2): 1}})


def test_normal_form_renaming_invariant():
    q = Query(Atom("Q", (X,)), (Atom("p", (X, Y)),))
    r = Query(Atom("Q", (W,)), (Atom("p", (W, Z)),))
    assert normal_form(q)[0] == normal_form(r)[0]
