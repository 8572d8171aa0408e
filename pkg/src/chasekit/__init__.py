"""chasekit: equivalence of conjunctive queries (plain and aggregate) under
embedded dependencies for set, bag, and bag-set semantics, with sound chase,
C&B reformulation, and a brute-force evaluation oracle."""

from .chase import (
    ChaseOutcome,
    ChaseStep,
    StepBudget,
    appendix_h_family,
    associated_test_query,
    chase_set,
    egd_step,
    is_assignment_fixing,
    is_key_based_tgd,
    sound_chase,
    sound_chase_step_allowed,
    tgd_step,
)
from .constraints import (
    fd_closure,
    is_superkey,
    is_weakly_acyclic,
    keys,
    regularize,
    regularize_set,
    set_enforcing_egd,
)
from .equivalence import (
    EquivVerdict,
    SearchBounds,
    build_bag_counterexample,
    equiv_aggregate_under_sigma,
    equiv_bag_set_under_sigma,
    equiv_bag_under_sigma,
    equiv_set_under_sigma,
    search_counterexample,
)
from .errors import (
    BudgetExceeded,
    ChaseFailure,
    ChasekitError,
    HeadArityMismatch,
    HypothesesNotMet,
    IncompatibleAggregates,
    NonSetDatabase,
    NoTupleId,
    NotApplicable,
    ParseError,
    ResourceBound,
    UnknownRelation,
)
from .evaluator import (
    canonical_database,
    enumerate_databases,
    eval_aggregate,
    eval_bag,
    eval_bag_set,
    eval_set,
    satisfies,
)
from .mappings import (
    Homomorphism,
    bag_equivalent,
    bag_equivalent_with_set_relations,
    bag_set_equivalent,
    containment_mapping,
    find_homomorphisms,
    isomorphic,
    set_equivalent,
)
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
    canonical_representation,
    dedup_set_enforced,
    fresh_var,
)
from .reformulate import (
    AggregateReformulationSet,
    ReformulationSet,
    candb_aggregate,
    candb_bag,
    candb_bag_set,
    candb_set,
    is_sigma_minimal,
)
from .sigmamax import SigmaMaxReport, max_bag_set_sigma_subset, max_bag_sigma_subset
from .textio import (
    Document,
    SourceSpan,
    parse_database,
    parse_dependency,
    parse_document,
    parse_query,
    parse_query_or_aggregate,
    parse_schema,
    print_database,
    print_dependency,
    print_query,
    print_schema,
)

__version__ = "0.1.0"
