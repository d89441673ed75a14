"""Fibonacci splitting rule: fast plan constructor and conjecture checker.

Observed pattern in optimal plans: a pooled group of Fibonacci size F_k
splits into F_{k-2} and F_{k-1}; a non-Fibonacci group of size n splits
into the unique pair (m, n-m) with at least one Fibonacci member and
exactly one Fibonacci number strictly between m and n-m. The pattern is
unproven, so violations are reported, never raised mid-check.

For betweenness counting the sequence is taken as 1, 2, 3, 5, 8, ... (a
duplicate leading 1 would double-count); Fibonacci n itself is handled by
the F_{k-2}/F_{k-1} rule before the betweenness rule applies.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Optional

from .structure import PHI, Structure
from .optimizer import PlanTable, build_table

_FIBS: list[int] = [1, 2]


def fibs_upto(limit: int) -> list[int]:
    """Distinct Fibonacci numbers 1, 2, 3, 5, ... up to limit inclusive."""
    while _FIBS[-1] <= limit:
        _FIBS.append(_FIBS[-1] + _FIBS[-2])
    k = bisect.bisect_right(_FIBS, limit)
    return _FIBS[:k]


def is_fibonacci(n: int) -> bool:
    if n < 1:
        return False
    seq = fibs_upto(n)
    return bool(seq) and seq[-1] == n


class SplitRuleError(ValueError):
    """The splitting rule did not produce exactly one qualifying pair."""

    def __init__(self, n: int, pairs: list[tuple[int, int]]):
        self.n = n
        self.pairs = pairs
        what = "no qualifying pair" if not pairs else f"{len(pairs)} qualifying pairs {pairs}"
        super().__init__(f"size {n}: {what}")


def qualifying_pairs(n: int) -> list[tuple[int, int]]:
    """All pairs (m, n-m), m <= n-m, with a Fibonacci member and exactly
    one Fibonacci number strictly between them. Betweenness rule only;
    callers handle Fibonacci n separately."""
    seq = fibs_upto(n)
    fibset = set(seq)
    found = set()
    for idx, f in enumerate(seq):
        if not f < n:
            continue
        prev_f = seq[idx - 1] if idx > 0 else 0
        next_f = seq[idx + 1] if idx + 1 < len(seq) else n + f + 1
        # m < f < n-m with no other Fibonacci inside (m, n-m)
        lo = max(prev_f, n - next_f, 1)
        hi = min(f - 1, n - f - 1, n // 2)
        if lo > hi:
            continue
        for m in seq:
            if lo <= m <= hi:
                found.add((m, n - m))
        for g in seq:
            m = n - g
            if lo <= m <= hi:
                found.add((m, n - m))
    return sorted(found)


def conjectured_split(n: int) -> tuple[int, int]:
    """The conjectured division of a pooled group of size n.

    Fibonacci n = F_k gives (F_{k-2}, F_{k-1}); otherwise the unique
    betweenness pair. Raises SplitRuleError when the pair is not unique.
    """
    if n < 2:
        raise ValueError("a split needs n >= 2")
    if n == 2:
        return (1, 1)
    if is_fibonacci(n):
        seq = fibs_upto(n)
        i = len(seq) - 1
        return (seq[i - 2], seq[i - 1])
    pairs = qualifying_pairs(n)
    if len(pairs) != 1:
        raise SplitRuleError(n, pairs)
    return pairs[0]


def fib_table(n: int, q: float) -> PlanTable:
    """Plan table whose pooled-test splits come from conjectured_split
    instead of a scan; forest partitioning stays a full search."""
    return build_table(n, q, split_rule=lambda size: conjectured_split(size)[0])


def fib_plan(n: int, q: float) -> Structure:
    """Fast plan constructor: pool a group only when its conjectured
    split's increment 1 - q**m - q**g is negative, recursing by the rule."""
    table = fib_table(n, q)
    return table.structure(n)


@dataclass
class ConjectureReport:
    """Per-size verdicts from checking optimizer output against the rule."""

    q: float
    n_hi: int
    verdicts: dict[int, str] = field(default_factory=dict)
    pairs: dict[int, tuple[int, int]] = field(default_factory=dict)
    counterexamples: list[str] = field(default_factory=list)

    @property
    def conforms(self) -> bool:
        return all(v == "conforms" for v in self.verdicts.values())

    def to_lines(self) -> list[str]:
        lines = [f"q={self.q} n<={self.n_hi}: checked {len(self.verdicts)} pooled sizes"]
        for n in sorted(self.verdicts):
            a, b = self.pairs[n]
            lines.append(f"n={n} split=({a},{b}) verdict={self.verdicts[n]}")
        for note in self.counterexamples:
            lines.append(f"counterexample: {note}")
        return lines

    def to_csv(self) -> str:
        out = ["n,split_left,split_right,verdict"]
        for n in sorted(self.verdicts):
            a, b = self.pairs[n]
            out.append(f"{n},{a},{b},{self.verdicts[n]}")
        return "\n".join(out) + "\n"


def check_conjecture(
    q: float,
    n_hi: int,
    table: Optional[PlanTable] = None,
) -> ConjectureReport:
    """Check every pooled split reachable from optimal rows 2..n_hi.

    Verdicts: conforms / violates / ambiguous_tie (the chosen split
    differs from the conjectured one but ties it within tolerance in the
    tables). Violations are reported with details, never raised.
    """
    if not q > PHI:
        raise ValueError(f"conjecture applies above the pairing threshold, got q={q}")
    if table is None or table.q != q or table.size < n_hi:
        table = build_table(n_hi, q)
    report = ConjectureReport(q, n_hi)

    # Reachable pooled sizes: from each row's structure, every test node.
    seen_rows: set[int] = set()
    tree_sizes: set[int] = set()
    stack = list(range(2, n_hi + 1))
    while stack:
        r = stack.pop()
        if r in seen_rows or r == 1:
            continue
        seen_rows.add(r)
        if table.inclusive[r]:
            _collect_tree(table, r, tree_sizes)
        else:
            a = int(table.forest_split[r])
            stack.append(a)
            stack.append(r - a)

    for g in sorted(tree_sizes):
        chosen_left = int(table.tree_split[g])
        chosen = (chosen_left, g - chosen_left)
        report.pairs[g] = chosen
        try:
            expected = conjectured_split(g)
        except SplitRuleError as err:
            report.verdicts[g] = "violates"
            report.counterexamples.append(str(err))
            continue
        if chosen == expected:
            report.verdicts[g] = "conforms"
        else:
            tied = {(m, True) for m, flag in table.tree_ties.get(g, ()) if flag}
            tied |= {(m, True) for m, flag in table.row_ties.get(g, ()) if flag}
            if (expected[0], True) in tied:
                report.verdicts[g] = "ambiguous_tie"
            else:
                report.verdicts[g] = "violates"
                report.counterexamples.append(
                    f"size {g}: optimizer split {chosen}, conjectured {expected}"
                )
    return report


def _collect_tree(table: PlanTable, g: int, acc: set[int]) -> None:
    stack = [g]
    while stack:
        size = stack.pop()
        if size == 1 or size in acc:
            continue
        acc.add(size)
        a = int(table.tree_split[size])
        stack.append(a)
        stack.append(size - a)
