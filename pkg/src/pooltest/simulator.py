"""Monte Carlo estimation of test counts at population scale.

Trials draw sparse positive sets (binomial count, then distinct
positions), so a million-sample trial costs O(positives * depth + groups)
rather than O(N). The counting walker reproduces the execution engines'
semantics exactly (verified test-for-test on small instances) without
materializing node objects, reading splits straight from the plan table.

Determinism: trial i uses splitmix64(seed XOR i) as its generator seed,
and trials accumulate in index order, so results are bit-identical for a
given (N, q, trials, seed) regardless of how work is scheduled.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .optimizer import PlanTable, best_group_size, build_table
from .structure import check_probability

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """Standard splitmix64 finalizer; derives per-trial sub-seeds."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class TrialStats:
    """Aggregates of one Monte Carlo run."""

    trials: int
    mean_tests: float
    std_dev: float
    ci95_half_width: float
    seed: int
    mode: str
    n: int
    q: float

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "mean_tests": self.mean_tests,
            "std_dev": self.std_dev,
            "ci95_half_width": self.ci95_half_width,
            "seed": self.seed,
            "mode": self.mode,
            "n": self.n,
            "q": self.q,
        }

    def to_csv(self) -> str:
        head = "trials,mean_tests,std_dev,ci95_half_width,seed,mode,n,q"
        row = (
            f"{self.trials},{self.mean_tests!r},{self.std_dev!r},"
            f"{self.ci95_half_width!r},{self.seed},{self.mode},{self.n},{self.q}"
        )
        return head + "\n" + row + "\n"


class PopulationPlan:
    """Plan tables plus the group layout for a population of n samples.

    The population is partitioned into independent groups of the best
    per-sample size with the remainder rightmost; each group runs its own
    plan (and, in restructuring mode, its own suffix replans, which never
    cross group boundaries).
    """

    def __init__(self, n: int, q: float, table: Optional[PlanTable] = None):
        if n < 1:
            raise ValueError("population size must be >= 1")
        check_probability(q)
        self.n = n
        self.q = q
        self.flat = q >= 1.0
        if self.flat:
            self.g_star = n
            self.table = None
        else:
            self.g_star = best_group_size(q)[0]
            need = min(n, max(self.g_star, 2))
            if table is not None and table.q == q and table.size >= need:
                self.table = table
            else:
                self.table = build_table(need, q)
        self._unit_cache: dict[int, tuple[int, ...]] = {}

    def unit_sizes(self, m: int) -> tuple[int, ...]:
        got = self._unit_cache.get(m)
        if got is None:
            got = tuple(self.table.unit_sizes(m))
            self._unit_cache[m] = got
        return got


def _walk_unit(plan, size, off, pos, lo, hi, restructure):
    """Tests performed executing one top-level unit against the positives
    pos[lo:hi] inside its span. Returns (tests, replan_point_or_None)."""
    tsplit = plan.table.tree_split
    trig = None

    def rec(s, o, a_lo, a_hi, known, root):
        nonlocal trig
        tests = 0
        has_pos = a_lo < a_hi
        if not known:
            tests += 1
            if not has_pos:
                return tests  # negative pool clears the subtree
            if restructure and not root:
                trig = o + s  # positive inside a known-positive parent
        if s == 1:
            return tests
        a = int(tsplit[s])
        mid = o + a
        cut = bisect.bisect_left(pos, mid, a_lo, a_hi)
        if a_lo == cut:
            tests += 1  # left part tested once, comes back clear
            tests += rec(s - a, mid, cut, a_hi, True, False)  # right deduced positive
        else:
            tests += rec(a, o, a_lo, cut, False, False)
            if trig is not None and mid >= trig:
                return tests  # right part discarded by a replan
            if cut == a_hi:
                tests += 1  # right part tested once, clear
            else:
                tests += rec(s - a, mid, cut, a_hi, False, False)
        return tests

    total = rec(size, off, lo, hi, False, True)
    return total, trig


def count_segment(plan: PopulationPlan, size: int, off: int, pos, lo, hi,
                  restructure: bool) -> int:
    """Tests to resolve one independent group of ``size`` samples at
    offset ``off`` against positives pos[lo:hi]. Replans stay inside the
    group: a positive pool inside a known-positive parent discards the
    plan for the rest of the group and re-plans it from the table."""
    end = off + size
    total = 0
    start = off
    i = lo
    count = hi
    while start < end:
        trig = None
        cursor = start
        for s in plan.unit_sizes(end - start):
            unit_end = cursor + s
            if i < count and pos[i] < unit_end:
                j = bisect.bisect_left(pos, unit_end, i, count)
                tests, trig = _walk_unit(plan, s, cursor, pos, i, j, restructure)
                total += tests
                i = j
                if trig is not None and trig < end:
                    break
                trig = None
            else:
                total += 1
            cursor = unit_end
        if trig is None:
            return total
        start = trig
        i = bisect.bisect_left(pos, start, lo, hi)
    return total


def count_trial(plan: PopulationPlan, positives, restructure: bool) -> int:
    """Tests to resolve one concrete trial (sorted positive indices)."""
    if plan.flat:
        return 1
    pos = list(positives)
    count = len(pos)
    n = plan.n
    g = plan.g_star
    if g == 1:
        return n  # individual testing throughout
    full, rem = divmod(n, g)
    tiles_end = full * g
    clear_cost = len(plan.unit_sizes(g)) if full else 0
    total = 0
    i = 0
    done = 0
    while i < count and pos[i] < tiles_end:
        t = pos[i] // g
        total += (t - done) * clear_cost
        j = bisect.bisect_left(pos, (t + 1) * g, i, count)
        total += count_segment(plan, g, t * g, pos, i, j, restructure)
        i = j
        done = t + 1
    total += (full - done) * clear_cost
    if rem:
        if i < count:
            total += count_segment(plan, rem, tiles_end, pos, i, count, restructure)
        else:
            total += len(plan.unit_sizes(rem))
    return total


def _draw_positives(rng, n: int, p: float) -> list[int]:
    k = int(rng.binomial(n, p))
    if k == 0:
        return []
    if k * 8 >= n:
        return sorted(int(v) for v in rng.permutation(n)[:k])
    chosen: set[int] = set()
    while len(chosen) < k:
        draw = rng.integers(0, n, size=k - len(chosen))
        chosen.update(int(v) for v in draw)
    return sorted(chosen)


def _run_mc(n, q, trials, seed, mode: str, table: Optional[PlanTable]) -> TrialStats:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    plan = PopulationPlan(n, q, table)
    restructure = mode == "restructuring"
    p = 1.0 - q
    base = int(seed) & _MASK64

    mean = 0.0
    m2 = 0.0
    for t in range(trials):
        rng = np.random.Generator(np.random.PCG64(splitmix64(base ^ t)))
        positives = _draw_positives(rng, n, p)
        x = float(count_trial(plan, positives, restructure))
        delta = x - mean
        mean += delta / (t + 1)
        m2 += delta * (x - mean)
    std = math.sqrt(m2 / (trials - 1)) if trials > 1 else 0.0
    ci = 1.96 * std / math.sqrt(trials)
    return TrialStats(trials, mean, std, ci, int(seed), mode, n, q)


def run_fixed_mc(n: int, q: float, trials: int, seed: int,
                 table: Optional[PlanTable] = None) -> TrialStats:
    """Monte Carlo mean tests for the predetermined plan."""
    return _run_mc(n, q, trials, seed, "fixed", table)


def run_restructuring_mc(n: int, q: float, trials: int, seed: int,
                         table: Optional[PlanTable] = None) -> TrialStats:
    """Monte Carlo mean tests with suffix replanning after every positive
    pool found inside a known-positive parent. Each group plan runs its
    own engine, so replans stay inside the group that triggered them."""
    return _run_mc(n, q, trials, seed, "restructuring", table)
