import os
from dataclasses import dataclass, field

import pytest

from chasekit.model import (
    Atom,
    BagDatabase,
    Dependency,
    FunctionalDependency,
    Query,
    RelationInfo,
    Schema,
    Var,
)

HERE = os.path.dirname(__file__)
EX41_PATH = os.path.join(HERE, os.pardir, "docs", "ex41.cqd")

X, Y, Z, W, U, V, T, A = (Var(n) for n in ("X", "Y", "Z", "W", "U", "V", "T", "A"))
W1, W2 = Var("W1"), Var("W2")


@dataclass
class Ex41:
    """The running example: schema {p,r,s,t,u}, tgds s1..s4, key egds s7/s8,
    set-enforced s and t, queries Q1..Q4 (plus the duplicate-subgoal variants
    Q5, Q7, Q8) and the counterexample database D."""

    schema: Schema = field(default_factory=lambda: Schema(
        {
            "p": RelationInfo(2),
            "r": RelationInfo(1),
            "s": RelationInfo(2, set_enforced=True),
            "t": RelationInfo(3, set_enforced=True),
            "u": RelationInfo(2),
        },
        fds=[FunctionalDependency("s", frozenset({1}), 2),
             FunctionalDependency("t", frozenset({1, 2}), 3)],
    ))

    def __post_init__(self):
        self.s1 = Dependency("s1", "tgd", (Atom("p", (X, Y)),),
                             (Atom("s", (X, Z)), Atom("t", (X, V, W))), (Z, V, W))
        self.s2 = Dependency("s2", "tgd", (Atom("p", (X, Y)),),
                             (Atom("t", (X, Y, W)),), (W,))
        self.s3 = Dependency("s3", "tgd", (Atom("p", (X, Y)),), (Atom("r", (X,)),))
        self.s4 = Dependency("s4", "tgd", (Atom("p", (X, Y)),),
                             (Atom("u", (X, Z)), Atom("t", (X, Y, W))), (Z, W))
        self.s7 = Dependency("s7", "egd", (Atom("s", (X, Y)), Atom("s", (X, Z))),
                             equated=(Y, Z))
        self.s8 = Dependency("s8", "egd", (Atom("t", (X, Y, W1)), Atom("t", (X, Y, W2))),
                             equated=(W1, W2))
        # s2 first: its t-atom then witnesses s1's t-conjunct in the set chase
        self.deps = [self.s2, self.s1, self.s3, self.s4, self.s7, self.s8]
        self.q1 = Query(Atom("Q1", (X,)), (Atom("p", (X, Y)), Atom("t", (X, Y, W)),
                                           Atom("s", (X, Z)), Atom("r", (X,)),
                                           Atom("u", (X, U))))
        self.q2 = Query(Atom("Q2", (X,)), (Atom("p", (X, Y)), Atom("t", (X, Y, W)),
                                           Atom("s", (X, Z)), Atom("r", (X,))))
        self.q3 = Query(Atom("Q3", (X,)), (Atom("p", (X, Y)), Atom("t", (X, Y, W)),
                                           Atom("s", (X, Z))))
        self.q4 = Query(Atom("Q4", (X,)), (Atom("p", (X, Y)),))
        self.q5 = Query(Atom("Q5", (X,)), (Atom("p", (X, Y)), Atom("t", (X, Y, W)),
                                           Atom("s", (X, Z)), Atom("s", (X, Z))))
        self.q7 = Query(Atom("Q7", (X,)), (Atom("p", (X, Y)), Atom("r", (X,)),
                                           Atom("r", (X,))))
        self.q8 = Query(Atom("Q8", (X,)), (Atom("p", (X, Y)), Atom("r", (X,))))
        self.db = BagDatabase({
            "p": {(1, 2): 1},
            "r": {(1,): 1},
            "s": {(1, 3): 1},
            "t": {(1, 2, 4): 1},
            "u": {(1, 5): 1, (1, 6): 1},
        })
        # bag-valued database of the duplicate-subgoal example: S at multiplicity 2
        self.db_dup_s = BagDatabase({
            "p": {(1, 2): 1},
            "s": {(1, 3): 2},
            "t": {(1, 2, 5): 1},
        })


@dataclass
class Ex44:
    """Assignment-fixing positive example: p -> r(X,Z) & s(Z,W) with the first
    attribute of r a key and the chained egd equating the s-values."""

    schema: Schema = field(default_factory=lambda: Schema(
        {"p": RelationInfo(2), "r": RelationInfo(2), "s": RelationInfo(2)}))

    def __post_init__(self):
        self.s1 = Dependency("s1", "tgd", (Atom("p", (X, Y)),),
                             (Atom("r", (X, Z)), Atom("s", (Z, W))), (Z, W))
        self.s2 = Dependency("s2", "egd", (Atom("r", (X, Y)), Atom("r", (X, Z))),
                             equated=(Y, Z))
        self.s3 = Dependency("s3", "egd",
                             (Atom("r", (X, Y)), Atom("s", (Y, T)),
                              Atom("r", (X, Z)), Atom("s", (Z, W))),
                             equated=(T, W))
        self.deps = [self.s1, self.s2, self.s3]
        self.q = Query(Atom("Q", (X,)), (Atom("p", (X, Y)),))
        self.expected_terminal = Query(Atom("Q", (X,)),
                                       (Atom("p", (X, Y)), Atom("r", (X, Z)),
                                        Atom("s", (Z, W))))


@dataclass
class Ex45:
    """The negative assignment-fixing example as printed: tgd s4 with three
    conclusion atoms, egds s2/s5/s6."""

    schema: Schema = field(default_factory=lambda: Schema(
        {"p": RelationInfo(2), "r": RelationInfo(2), "s": RelationInfo(2)}))

    def __post_init__(self):
        self.s2 = Dependency("s2", "egd", (Atom("r", (X, Y)), Atom("r", (X, Z))),
                             equated=(Y, Z))
        self.s4 = Dependency("s4", "tgd", (Atom("p", (X, Y)),),
                             (Atom("r", (X, Z)), Atom("s", (Z, W)), Atom("s", (X, T))),
                             (Z, W, T))
        self.s5 = Dependency("s5", "egd",
                             (Atom("r", (X, Z)), Atom("s", (Z, W)), Atom("s", (X, T))),
                             equated=(W, T))
        self.s6 = Dependency("s6", "egd",
                             (Atom("p", (X, Y)), Atom("r", (A, X)), Atom("s", (X, T))),
                             equated=(X, T))
        self.deps = [self.s2, self.s4, self.s5, self.s6]
        self.q = Query(Atom("Q", (X,)), (Atom("p", (X, Y)),))
        # the terminal body as printed in the source example (not a fixpoint
        # of the standard chase; see tests referencing it)
        self.printed_terminal = Query(
            Atom("Q", (X,)),
            (Atom("p", (X, Y)), Atom("r", (X, Z)), Atom("s", (Z, W)),
             Atom("s", (X, W)), Atom("s", (Z, W1)), Atom("s", (X, W1))))
        self.printed_counterexample = BagDatabase({
            "p": {(1, 2): 1},
            "r": {(1, 3): 1},
            "s": {(1, 4): 1, (1, 5): 1, (3, 4): 1, (3, 5): 1},
        })


@dataclass
class Ex47:
    """Sound application of a regularized, assignment-fixing tgd whose
    conclusion shares the existential: p -> s(X,Z) & t(Z,Y), with the second
    attribute of t a key and both s and t set-enforced."""

    schema: Schema = field(default_factory=lambda: Schema(
        {
            "p": RelationInfo(2),
            "s": RelationInfo(2, set_enforced=True),
            "t": RelationInfo(2, set_enforced=True),
        },
        fds=[FunctionalDependency("t", frozenset({2}), 1)],
    ))

    def __post_init__(self):
        self.n1 = Dependency("n1", "tgd", (Atom("p", (X, Y)),),
                             (Atom("s", (X, Z)), Atom("t", (Z, Y))), (Z,))
        self.n2 = Dependency("n2", "egd", (Atom("t", (X, Y)), Atom("t", (Z, Y))),
                             equated=(X, Z))
        self.deps = [self.n1, self.n2]
        self.q = Query(Atom("Q", (X,)), (Atom("p", (X, Y)), Atom("s", (X, Z))))
        # correct full application of n1
        self.q_full = Query(Atom("Q", (X,)),
                            (Atom("p", (X, Y)), Atom("s", (X, Z)),
                             Atom("s", (X, W)), Atom("t", (W, Y))))
        # the erroneous partial application that adds only the t-atom
        self.q_partial = Query(Atom("Q", (X,)),
                               (Atom("p", (X, Y)), Atom("s", (X, Z)),
                                Atom("t", (Z, Y))))
        self.db = BagDatabase({
            "p": {(1, 2): 1},
            "s": {(1, 1): 1, (1, 3): 1},
            "t": {(3, 2): 1},
        })


@pytest.fixture(scope="session")
def ex41():
    return Ex41()


@pytest.fixture(scope="session")
def ex44():
    return Ex44()


@pytest.fixture(scope="session")
def ex45():
    return Ex45()


@pytest.fixture(scope="session")
def ex47():
    return Ex47()


@pytest.fixture(scope="session")
def ex41_path():
    return os.path.abspath(EX41_PATH)
