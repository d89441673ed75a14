"""Plan execution against concrete outcomes, batch and stepwise.

Execution walks a plan preorder (each test before its children, children
left to right, leaves acting as singleton tests) and performs a test only
when its outcome is not already implied. The deduction closure used
throughout:

  R1  a test resolved negative clears every descendant test and sample;
  R2  a node known positive whose children are all clear except one makes
      that remaining child deduced positive;
  R3  a node whose samples are all known negative is deduced negative;
  R4  a leaf deduced positive identifies its sample without a test.

A node deduced positive is not tested but its children are still visited;
a node deduced negative prunes its whole subtree.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .structure import Node, Structure

Span = tuple[int, int]


class SampleStatus(enum.Enum):
    UNKNOWN = "unknown"
    NEGATIVE = "negative"
    POSITIVE = "positive"


class TestStatus(enum.Enum):
    __test__ = False  # keep pytest from collecting this as a test class

    PENDING = "pending"
    PERFORMED_POSITIVE = "performed_positive"
    PERFORMED_NEGATIVE = "performed_negative"
    DEDUCED_POSITIVE = "deduced_positive"
    DEDUCED_NEGATIVE = "deduced_negative"


_POSITIVE = (TestStatus.PERFORMED_POSITIVE, TestStatus.DEDUCED_POSITIVE)
_NEGATIVE = (TestStatus.PERFORMED_NEGATIVE, TestStatus.DEDUCED_NEGATIVE)


class Mode(enum.Enum):
    FIXED = "fixed"
    RESTRUCTURING = "restructuring"


class NoPendingTest(RuntimeError):
    """An outcome was applied while no test is awaiting one."""


@dataclass
class KnowledgeState:
    """Per-sample and per-node deduction status during execution."""

    sample_status: list[SampleStatus]
    test_status: dict[Span, TestStatus]

    @classmethod
    def initial(cls, units: Iterable[Node], n: int) -> "KnowledgeState":
        status: dict[Span, TestStatus] = {}
        for unit in units:
            for node in unit.iter_nodes():
                status[node.span] = TestStatus.PENDING
        return cls([SampleStatus.UNKNOWN] * n, status)

    def positives(self) -> list[int]:
        return [
            i
            for i, st in enumerate(self.sample_status)
            if st is SampleStatus.POSITIVE
        ]

    def resolved(self) -> bool:
        return all(st is not SampleStatus.UNKNOWN for st in self.sample_status)


@dataclass(frozen=True)
class PerformedTest:
    span: Span
    positive: bool
    deduced: tuple[str, ...] = ()

    def line(self) -> str:
        outcome = "POS" if self.positive else "NEG"
        inner = ", ".join(self.deduced)
        return f"span=[{self.span[0]},{self.span[1]}) outcome={outcome} deduced=({inner})"


@dataclass
class ExecutionTrace:
    """Ordered performed tests plus the final knowledge they produced."""

    performed: list[PerformedTest]
    final: KnowledgeState

    @property
    def test_count(self) -> int:
        return len(self.performed)

    def lines(self) -> list[str]:
        return [rec.line() for rec in self.performed]


def execute_fixed(s: Structure, outcomes: Sequence[bool]) -> ExecutionTrace:
    """Run the whole plan against an outcome vector (True = positive).

    Returns the performed tests in order plus the final knowledge state,
    which classifies every sample.
    """
    if len(outcomes) != s.n:
        raise ValueError(f"outcome vector has {len(outcomes)} entries, plan covers {s.n}")
    run = _FixedRun(s, outcomes)
    return run.run()


class _FixedRun:
    def __init__(self, s: Structure, outcomes: Sequence[bool]):
        self.s = s
        self.outcomes = outcomes
        self.state = KnowledgeState.initial(s.roots, s.n)
        self.performed: list[PerformedTest] = []
        self._notes: list[str] = []

    def run(self) -> ExecutionTrace:
        for root in self.s.roots:
            self._visit(root, deduced_positive=False)
        return ExecutionTrace(self.performed, self.state)

    def _truth(self, node: Node) -> bool:
        return any(self.outcomes[i] for i in range(node.start, node.end))

    def _note(self, text: str) -> None:
        # Deductions attach to the test whose result triggered them.
        if self.performed:
            last = self.performed[-1]
            self.performed[-1] = PerformedTest(
                last.span, last.positive, last.deduced + (text,)
            )

    def _set_sample(self, i: int, status: SampleStatus, noted: bool) -> None:
        self.state.sample_status[i] = status
        if noted:
            self._note(f"sample {i}={status.value}")

    def _visit(self, node: Node, deduced_positive: bool) -> None:
        span = node.span
        if deduced_positive:
            self.state.test_status[span] = TestStatus.DEDUCED_POSITIVE
            if node.is_leaf:
                # R4: identified without a test.
                self.state.sample_status[node.start] = SampleStatus.POSITIVE
                self._note(f"sample {node.start}=positive (untested)")
            else:
                self._note(f"test[{span[0]},{span[1]})=deduced_positive")
                self._walk_children(node)
            return

        positive = self._truth(node)
        self.performed.append(PerformedTest(span, positive))
        self.state.test_status[span] = (
            TestStatus.PERFORMED_POSITIVE if positive else TestStatus.PERFORMED_NEGATIVE
        )
        if node.is_leaf:
            self._set_sample(
                node.start,
                SampleStatus.POSITIVE if positive else SampleStatus.NEGATIVE,
                noted=False,
            )
        elif not positive:
            # R1: the whole subtree is clear.
            for i in range(node.start, node.end):
                self._set_sample(i, SampleStatus.NEGATIVE, noted=True)
            for desc in node.iter_nodes():
                if desc is node:
                    continue
                self.state.test_status[desc.span] = TestStatus.DEDUCED_NEGATIVE
        else:
            self._walk_children(node)

    def _walk_children(self, parent: Node) -> None:
        kids = parent.children
        prior_all_negative = True
        for idx, child in enumerate(kids):
            if idx == len(kids) - 1 and prior_all_negative:
                # R2: everything else in a positive pool is clear.
                self._visit(child, deduced_positive=True)
            else:
                self._visit(child, deduced_positive=False)
                if self._truth(child):
                    prior_all_negative = False


def outcome_test_counts(s: Structure, cap: int = 20):
    """Performed-test counts for all 2**n outcome vectors, as an array
    indexed by outcome; outcome o marks sample i positive iff bit i is set.

    One pass over the tree evaluates every outcome lane at once, and the
    counts are q-free, so expectation sweeps over several q reuse them.
    """
    import numpy as np

    n = s.n
    if n > cap:
        raise ValueError(f"n={n} exceeds enumeration cap {cap}")
    size = 1 << n
    outcomes = np.arange(size, dtype=np.int64)
    counts = np.zeros(size, dtype=np.int64)

    def span_positive(start: int, end: int):
        mask = ((1 << end) - 1) ^ ((1 << start) - 1)
        return (outcomes & mask) != 0

    def visit(node: Node, visit_mask, known_pos):
        counts[...] += visit_mask & ~known_pos  # tests performed here
        if node.is_leaf:
            return
        go = visit_mask & span_positive(node.start, node.end)
        if not go.any():
            return
        prior_all_negative = go.copy()
        kids = node.children
        for i, child in enumerate(kids):
            if i == len(kids) - 1:
                visit(child, go, go & prior_all_negative)
            else:
                visit(child, go, np.zeros(size, dtype=bool))
                prior_all_negative &= ~span_positive(child.start, child.end)

    ones = np.ones(size, dtype=bool)
    zeros = np.zeros(size, dtype=bool)
    for root in s.roots:
        visit(root, ones, zeros)
    return counts


def exact_expected(s: Structure, q, cap: int = 16):
    """Exact expected test count by enumerating all 2**n outcome vectors.

    Independent of the incremental value formula; used to cross-check it.
    Accepts Fraction q. Cost is 2**n, so n is capped (default 16).
    """
    n = s.n
    if n > cap:
        raise ValueError(f"n={n} exceeds enumeration cap {cap}")
    p = 1 - q
    counts = outcome_test_counts(s, cap)
    total = 0 * q
    for o, count in enumerate(counts):
        ones = o.bit_count()
        total += q ** (n - ones) * p ** ones * int(count)
    return total


@dataclass(frozen=True)
class ReplanEvent:
    position: int
    plan: Structure


class StepEngine:
    """Single-owner state machine executing a plan one test at a time.

    ``step_next`` returns the span of the next test to physically perform
    (or None when every sample is resolved) without changing state;
    ``step_apply`` records the outcome and runs the deduction closure.

    In restructuring mode, a performed POSITIVE test that sits inside a
    known-positive parent leaves everything to its right uninformed: the
    engine discards all planned nodes over that suffix and installs a
    fresh optimal plan for it (hence q is retained). Fixed mode never
    replans.
    """

    def __init__(
        self,
        structure: Structure,
        mode: Mode = Mode.FIXED,
        q: Optional[float] = None,
        replanner: Optional[Callable[[int], Structure]] = None,
    ):
        if isinstance(mode, str):
            mode = Mode(mode)
        if mode is Mode.RESTRUCTURING and q is None:
            raise ValueError("restructuring mode needs q to rebuild plans")
        self.mode = mode
        self.q = q
        self.n = structure.n
        self.original = structure
        self.units: list[Node] = list(structure.roots)
        self.state = KnowledgeState.initial(self.units, self.n)
        self.performed: list[PerformedTest] = []
        self.replans: list[ReplanEvent] = []
        self._parent: dict[Span, Span] = {}
        self._reindex_parents()
        self._replanner = replanner

    @property
    def performed_count(self) -> int:
        return len(self.performed)

    def _reindex_parents(self) -> None:
        self._parent = {}
        for unit in self.units:
            for node in unit.iter_nodes():
                for child in node.children:
                    self._parent[child.span] = node.span

    def _scan(self) -> Optional[Node]:
        def search(node: Node) -> Optional[Node]:
            status = self.state.test_status[node.span]
            if status in _NEGATIVE:
                return None
            if status is TestStatus.PENDING:
                return node
            for child in node.children:
                found = search(child)
                if found is not None:
                    return found
            return None

        for unit in self.units:
            found = search(unit)
            if found is not None:
                return found
        return None

    def step_next(self) -> Optional[Span]:
        """Next span to test, or None when done. Idempotent."""
        node = self._scan()
        return None if node is None else node.span

    @property
    def done(self) -> bool:
        return self._scan() is None

    def positives(self) -> list[int]:
        return self.state.positives()

    def step_apply(self, positive: bool) -> "StepEngine":
        node = self._scan()
        if node is None:
            raise NoPendingTest("no pending test to apply an outcome to")
        deductions: list[str] = []
        self.state.test_status[node.span] = (
            TestStatus.PERFORMED_POSITIVE if positive else TestStatus.PERFORMED_NEGATIVE
        )
        if node.is_leaf:
            self.state.sample_status[node.start] = (
                SampleStatus.POSITIVE if positive else SampleStatus.NEGATIVE
            )
        self._closure(deductions)
        self.performed.append(PerformedTest(node.span, positive, tuple(deductions)))
        if (
            self.mode is Mode.RESTRUCTURING
            and positive
            and node.span in self._parent
            and node.end < self.n
        ):
            self._replan(node.end, deductions)
        return self

    # -- deduction closure -------------------------------------------------

    def _closure(self, deductions: list[str]) -> None:
        samples = self.state.sample_status
        status = self.state.test_status

        def mark_sample(i: int, st: SampleStatus) -> None:
            if samples[i] is not st:
                samples[i] = st
                deductions.append(f"sample {i}={st.value}")

        changed = True
        while changed:
            changed = False
            neg_prefix = [0] * (self.n + 1)
            for i in range(self.n):
                neg_prefix[i + 1] = neg_prefix[i] + (
                    1 if samples[i] is SampleStatus.NEGATIVE else 0
                )

            def all_clear(node: Node) -> bool:
                return neg_prefix[node.end] - neg_prefix[node.start] == node.size

            for unit in self.units:
                for node in unit.iter_nodes():
                    st = status[node.span]
                    if st in _NEGATIVE:
                        # R1
                        for i in range(node.start, node.end):
                            if samples[i] is not SampleStatus.NEGATIVE:
                                mark_sample(i, SampleStatus.NEGATIVE)
                                changed = True
                        for desc in node.iter_nodes():
                            if desc is node:
                                continue
                            if status[desc.span] is TestStatus.PENDING:
                                status[desc.span] = TestStatus.DEDUCED_NEGATIVE
                                deductions.append(
                                    f"test[{desc.start},{desc.end})=deduced_negative"
                                )
                                changed = True
                    elif st is TestStatus.PENDING and all_clear(node):
                        # R3
                        status[node.span] = TestStatus.DEDUCED_NEGATIVE
                        deductions.append(
                            f"test[{node.start},{node.end})=deduced_negative"
                        )
                        changed = True
                    if status[node.span] in _POSITIVE:
                        if node.is_leaf:
                            if samples[node.start] is not SampleStatus.POSITIVE:
                                # R4 (or a performed positive leaf)
                                mark_sample(node.start, SampleStatus.POSITIVE)
                                changed = True
                        else:
                            unclear = [c for c in node.children if not all_clear(c)]
                            if len(unclear) == 1:
                                child = unclear[0]
                                if status[child.span] is TestStatus.PENDING:
                                    # R2
                                    status[child.span] = TestStatus.DEDUCED_POSITIVE
                                    deductions.append(
                                        f"test[{child.start},{child.end})=deduced_positive"
                                    )
                                    changed = True

    # -- restructuring -----------------------------------------------------

    def _default_replanner(self, m: int) -> Structure:
        from .optimizer import plan_structure

        return plan_structure(m, self.q)

    def _replan(self, position: int, deductions: list[str]) -> None:
        replanner = self._replanner or self._default_replanner
        fresh = replanner(self.n - position)
        if fresh.n != self.n - position:
            raise ValueError("replacement plan does not cover the suffix")
        shifted = [_shift(root, position) for root in fresh.roots]

        kept: list[Node] = []
        dropped: list[Node] = []

        def keep(node: Node) -> list[Node]:
            if node.end <= position:
                return [node]
            if node.start >= position:
                dropped.append(node)
                return []
            out: list[Node] = []
            for child in node.children:
                out.extend(keep(child))
            # The straddling node itself leaves the plan shape; its
            # performed status stays in the log.
            return out

        for unit in self.units:
            kept.extend(keep(unit))

        for node in dropped:
            for desc in node.iter_nodes():
                self.state.test_status.pop(desc.span, None)
        for root in shifted:
            for desc in root.iter_nodes():
                self.state.test_status[desc.span] = TestStatus.PENDING

        self.units = kept + shifted
        self._reindex_parents()
        self.replans.append(ReplanEvent(position, fresh))
        deductions.append(f"replan from {position}")

    # -- views ---------------------------------------------------------------

    def current_plan(self) -> Structure:
        return Structure(tuple(self.units))

    def audit(self) -> bool:
        """Replay performed outcomes through a fresh engine; compare states."""
        twin = StepEngine(self.original, self.mode, self.q, self._replanner)
        for rec in self.performed:
            span = twin.step_next()
            if span != rec.span:
                return False
            twin.step_apply(rec.positive)
        return (
            twin.state.sample_status == self.state.sample_status
            and twin.state.test_status == self.state.test_status
        )


def _shift(node: Node, offset: int) -> Node:
    return Node(
        node.start + offset,
        node.end + offset,
        tuple(_shift(c, offset) for c in node.children),
    )


def step_begin(
    s: Structure,
    mode: Mode = Mode.FIXED,
    q: Optional[float] = None,
    replanner: Optional[Callable[[int], Structure]] = None,
) -> StepEngine:
    """Start a stepwise execution positioned at the first pending test."""
    return StepEngine(s, mode, q, replanner)
