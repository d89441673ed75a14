"""Nested pooled-testing plans: optimizer, executors, oracles, simulator,
and a live session service."""

from .structure import (
    PHI,
    Node,
    NotationError,
    Structure,
    StructureError,
    ValueBreakdown,
    canonicalize,
    notation,
    parse,
    structure_value,
    test_value,
)
from .executor import (
    ExecutionTrace,
    KnowledgeState,
    Mode,
    NoPendingTest,
    SampleStatus,
    StepEngine,
    TestStatus,
    exact_expected,
    execute_fixed,
    outcome_test_counts,
    step_begin,
)
from .optimizer import (
    DivisionRow,
    PlanRow,
    PlanTable,
    PopulationEstimate,
    best_group_size,
    build_table,
    division_csv,
    division_table,
    n_max,
    optimize,
    plan_structure,
    population_expected,
)
from .oracle import (
    BruteResult,
    brute_optimal,
    enumerate_structures,
    nonnested_optimal,
    threshold_bisect,
)
from .fibonacci import (
    ConjectureReport,
    SplitRuleError,
    check_conjecture,
    conjectured_split,
    fib_plan,
    fib_table,
    fibs_upto,
    is_fibonacci,
)
from .simulator import (
    PopulationPlan,
    TrialStats,
    count_trial,
    run_fixed_mc,
    run_restructuring_mc,
    splitmix64,
)

__version__ = "0.1.0"
