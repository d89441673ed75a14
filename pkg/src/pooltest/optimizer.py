"""Optimal plan construction by recursive split search.

For r samples the best plan is found by scanning split points n' in
[1, r//2]: either place the two optimal sub-plans side by side (a forest),
or additionally pool all r samples under one test, which changes the
expected cost by 1 - q**n' - q**r. Two tables are kept:

  tree[r]    best plan on r samples that is headed by a pool over all r,
             with both parts themselves headed (a leaf counts as headed);
  values[r]  best plan overall (forest of headed units).

Pool tests whose increment is >= 0 are pruned: an immediately
disadvantageous test never becomes worthwhile later, so the search only
ever pays for strictly advantageous pools. The widest span any
advantageous pool can cover is n_max(q) = floor(log(1-q)/log(q)), which
also bounds the inner split scan.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .structure import Node, Structure, check_probability

TIE_EPS = 1e-12
TIE_CAP = 64

# Beyond this row count the quadratic split scan stops being worth it and
# callers fall back to the per-sample rate estimate.
EXACT_DP_CAP = 100_000
GROUP_SCAN_CAP = 200_000


def n_max(q: float) -> int:
    """Largest span an advantageous pool test can cover.

    floor(log(1-q)/log(q)), confirmed by the sign of 1 - q - q**n at the
    boundary. Returns 0 when no pool of any size pays (q <= 1/2 region).
    """
    if not 0 < q < 1:
        raise ValueError(f"n_max needs 0 < q < 1, got {q!r}")
    m = max(int(math.log(1.0 - q) / math.log(q)), 1)
    while 1.0 - q - q ** (m + 1) <= 0.0:
        m += 1
    while m >= 1 and 1.0 - q - q**m > 0.0:
        m -= 1
    return m


@dataclass(frozen=True)
class PlanRow:
    """One table row: optimal value, chosen split, and near-ties."""

    n: int
    value: float
    split: Optional[int]
    inclusive: bool
    tie_list: tuple[tuple[int, bool], ...]

    @property
    def expected_tests(self) -> float:
        return self.n + self.value


@dataclass(frozen=True)
class DivisionRow:
    """Table-style row: group size, expected tests, and the subgroups
    tested when the pool comes back positive (None for unpooled rows)."""

    n: int
    expected_tests: float
    split: Optional[tuple[int, int]]


class PlanTable:
    """Memoized optimal values and splits for every size up to ``size``.

    Immutable once built; safe to share across threads.
    """

    SCHEMA_VERSION = 1

    def __init__(self, q, size, values, tree_values, forest_split, tree_split,
                 inclusive, row_ties, tree_ties):
        self.q = q
        self.size = size
        self.values = values
        self.tree_values = tree_values
        self.forest_split = forest_split
        self.tree_split = tree_split
        self.inclusive = inclusive
        self.row_ties = row_ties
        self.tree_ties = tree_ties

    def value(self, n: int) -> float:
        return float(self.values[n])

    def expected_tests(self, n: int) -> float:
        return n + float(self.values[n])

    def row(self, n: int) -> PlanRow:
        if n < 1 or n > self.size:
            raise IndexError(f"row {n} outside table (1..{self.size})")
        if n == 1:
            return PlanRow(1, 0.0, None, False, ())
        inclusive = bool(self.inclusive[n])
        split = int(self.tree_split[n]) if inclusive else int(self.forest_split[n])
        ties = tuple(self.row_ties.get(n, ()))
        return PlanRow(n, float(self.values[n]), split, inclusive, ties)

    def structure(self, n: int) -> Structure:
        """Materialize the optimal plan for n samples from the tables."""
        if n < 1 or n > self.size:
            raise IndexError(f"row {n} outside table (1..{self.size})")
        units: list[Node] = []
        offset = 0
        for size in self.unit_sizes(n):
            units.append(self._tree_node(size, offset))
            offset += size
        return Structure(tuple(units))

    def unit_sizes(self, n: int) -> list[int]:
        """Sizes of the top-level units (headed trees or leaves) of row n."""
        out: list[int] = []
        stack = [n]
        while stack:
            k = stack.pop()
            if k == 1 or self.inclusive[k]:
                out.append(k)
            else:
                a = int(self.forest_split[k])
                stack.append(k - a)
                stack.append(a)
        return out

    def _tree_node(self, size: int, offset: int) -> Node:
        if size == 1:
            return Node(offset, offset + 1)
        limit = size + 100
        if sys.getrecursionlimit() < limit:
            sys.setrecursionlimit(limit)
        a = int(self.tree_split[size])
        if a < 1 or not math.isfinite(self.tree_values[size]):
            raise ValueError(f"no advantageous pool recorded for size {size}")
        left = self._tree_node(a, offset)
        right = self._tree_node(size - a, offset + a)
        return Node(offset, offset + size, (left, right))

    # -- persistence -------------------------------------------------------

    def save(self, path) -> None:
        np.savez_compressed(
            path,
            schema=np.int64(self.SCHEMA_VERSION),
            q=np.float64(self.q),
            size=np.int64(self.size),
            values=self.values,
            tree_values=self.tree_values,
            forest_split=self.forest_split,
            tree_split=self.tree_split,
            inclusive=self.inclusive,
            row_ties=json.dumps({k: list(map(list, v)) for k, v in self.row_ties.items()}),
            tree_ties=json.dumps({k: list(map(list, v)) for k, v in self.tree_ties.items()}),
        )

    @classmethod
    def load(cls, path) -> "PlanTable":
        with np.load(path, allow_pickle=False) as blob:
            if int(blob["schema"]) != cls.SCHEMA_VERSION:
                raise ValueError(f"unsupported plan-table schema {int(blob['schema'])}")
            row_ties = {
                int(k): [(int(a), bool(b)) for a, b in v]
                for k, v in json.loads(str(blob["row_ties"])).items()
            }
            tree_ties = {
                int(k): [(int(a), bool(b)) for a, b in v]
                for k, v in json.loads(str(blob["tree_ties"])).items()
            }
            return cls(
                float(blob["q"]),
                int(blob["size"]),
                blob["values"].copy(),
                blob["tree_values"].copy(),
                blob["forest_split"].copy(),
                blob["tree_split"].copy(),
                blob["inclusive"].copy(),
                row_ties,
                tree_ties,
            )


def _advantage_cap(qp: np.ndarray, r: int, half: int) -> int:
    """Largest n' <= half with 1 - q**n' - q**r strictly negative."""
    rhs = 1.0 - qp[r]
    if qp[1] <= rhs:
        return 0
    if rhs <= 0.0:
        return half
    c = max(0, min(int(math.log(rhs) / math.log(qp[1])) + 1, half))
    while c < half and qp[c + 1] > rhs:
        c += 1
    while c >= 1 and qp[c] <= rhs:
        c -= 1
    return c


def build_table(
    n: int,
    q: float,
    split_rule: Optional[Callable[[int], int]] = None,
) -> PlanTable:
    """Fill the value/split tables for sizes 1..n at probability q.

    ``split_rule``, when given, replaces the pooled-branch split scan with
    a single prescribed left-part size per row (used by the fast
    Fibonacci constructor); the forest branch is always a full scan.
    """
    check_probability(q)
    if q >= 1.0:
        raise ValueError("build_table needs q < 1")
    if n < 1:
        raise ValueError("n must be >= 1")

    size = n
    if 0.0 < q < 1.0:
        qp = np.exp(np.arange(size + 1, dtype=np.float64) * math.log(q))
        qp[0] = 1.0
        qp[1] = q
    else:  # q == 0: no pool is ever advantageous
        qp = np.zeros(size + 1)
        qp[0] = 1.0

    values = np.zeros(size + 1)
    tree_values = np.full(size + 1, np.inf)
    headed = np.full(size + 1, np.inf)  # tree value, except 0 for a leaf
    if size >= 1:
        headed[1] = 0.0
    forest_split = np.zeros(size + 1, dtype=np.int64)
    tree_split = np.zeros(size + 1, dtype=np.int64)
    inclusive = np.zeros(size + 1, dtype=bool)
    row_ties: dict[int, list[tuple[int, bool]]] = {}
    tree_ties: dict[int, list[tuple[int, bool]]] = {}

    for r in range(2, size + 1):
        half = r >> 1
        tree_best = math.inf
        tree_arg = 0
        tc = None
        if q > 0.0:
            if split_rule is None:
                cap = _advantage_cap(qp, r, half)
                if cap >= 1:
                    tc = (
                        headed[1 : cap + 1]
                        + headed[r - 1 : r - cap - 1 : -1]
                        + ((1.0 - qp[r]) - qp[1 : cap + 1])
                    )
                    j = int(np.argmin(tc))
                    tree_best = float(tc[j])
                    tree_arg = j + 1
            else:
                m = int(split_rule(r))
                if not 1 <= m <= half:
                    raise ValueError(f"split rule produced {m} for size {r}")
                term = (1.0 - qp[r]) - qp[m]
                if term < 0.0:
                    cand = float(headed[m] + headed[r - m] + term)
                    if math.isfinite(cand):
                        tree_best = cand
                        tree_arg = m
        tree_values[r] = tree_best
        tree_split[r] = tree_arg
        headed[r] = tree_best

        fc = values[1 : half + 1] + values[r - 1 : r - half - 1 : -1]
        i = int(np.argmin(fc))
        forest_best = float(fc[i])

        if tree_best < forest_best:
            values[r] = tree_best
            inclusive[r] = True
        else:
            values[r] = forest_best
            forest_split[r] = i + 1

        best = values[r]
        if best < 0.0:
            tol = TIE_EPS * (-best)
            ties: list[tuple[int, bool]] = []
            for idx in np.nonzero(fc <= best + tol)[0]:
                pair = (int(idx) + 1, False)
                if inclusive[r] or pair[0] != forest_split[r]:
                    ties.append(pair)
            if tc is not None:
                for idx in np.nonzero(tc <= best + tol)[0]:
                    pair = (int(idx) + 1, True)
                    if not inclusive[r] or pair[0] != tree_split[r]:
                        ties.append(pair)
            elif split_rule is not None and tree_best <= best + tol and not inclusive[r]:
                ties.append((tree_arg, True))
            if ties:
                row_ties[r] = ties[:TIE_CAP]
        if tc is not None and math.isfinite(tree_best) and tree_best < 0.0:
            tol = TIE_EPS * (-tree_best)
            alt = [
                (int(idx) + 1, True)
                for idx in np.nonzero(tc <= tree_best + tol)[0]
                if int(idx) + 1 != tree_arg
            ]
            if alt:
                tree_ties[r] = alt[:TIE_CAP]

    return PlanTable(
        q, size, values, tree_values, forest_split, tree_split,
        inclusive, row_ties, tree_ties,
    )


def optimize(n: int, q: float) -> tuple[PlanTable, Structure]:
    """Optimal plan for n samples: the filled table plus the materialized
    structure for row n."""
    table = build_table(n, q)
    return table, table.structure(n)


def division_table(
    n_lo: int,
    n_hi: int,
    q: float,
    table: Optional[PlanTable] = None,
) -> list[DivisionRow]:
    """Rows (size, expected tests, positive-pool division) for a size range."""
    if not 1 <= n_lo <= n_hi:
        raise ValueError("need 1 <= n_lo <= n_hi")
    if table is None or table.size < n_hi or table.q != q:
        table = build_table(n_hi, q)
    rows = []
    for n in range(n_lo, n_hi + 1):
        row = table.row(n)
        split = (row.split, n - row.split) if row.inclusive else None
        rows.append(DivisionRow(n, row.expected_tests, split))
    return rows


def division_csv(rows: list[DivisionRow], precision: int = 9) -> str:
    lines = ["n,expected_tests,split_left,split_right"]
    for row in rows:
        left = str(row.split[0]) if row.split else ""
        right = str(row.split[1]) if row.split else ""
        lines.append(f"{row.n},{row.expected_tests:.{precision}f},{left},{right}")
    return "\n".join(lines) + "\n"


# -- population-scale estimates ---------------------------------------------


def _tree_scan(q: float, limit: int) -> np.ndarray:
    """Tree-table values only, up to ``limit`` rows.

    The advantage cap shrinks the inner scan sharply for large rows, so
    this reaches n_max cheaply even when the full table would not.
    """
    qp = np.exp(np.arange(limit + 1, dtype=np.float64) * math.log(q))
    qp[0] = 1.0
    qp[1] = q
    headed = np.full(limit + 1, np.inf)
    headed[1] = 0.0
    for r in range(2, limit + 1):
        half = r >> 1
        cap = _advantage_cap(qp, r, half)
        if cap >= 1:
            tc = (
                headed[1 : cap + 1]
                + headed[r - 1 : r - cap - 1 : -1]
                + ((1.0 - qp[r]) - qp[1 : cap + 1])
            )
            headed[r] = float(np.min(tc))
    return headed


def best_group_size(q: float, scan_cap: int = GROUP_SCAN_CAP) -> tuple[int, float]:
    """Group size minimizing expected tests per sample, with that rate.

    Scans headed trees up to n_max(q) (forests can never beat their best
    component tree on rate). Ties go to the smallest size; if no pool
    pays, the answer is individual testing: (1, 1.0).
    """
    check_probability(q)
    if q <= 0.0 or 1.0 - q - q * q >= 0.0:
        return 1, 1.0
    limit = min(n_max(q), scan_cap)
    tree = _tree_scan(q, limit)
    sizes = np.arange(limit + 1, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        rates = (sizes + tree) / np.maximum(sizes, 1.0)
    rates[0] = np.inf
    rates[1] = 1.0
    g = int(np.argmin(rates))
    return g, float(rates[g])


@dataclass(frozen=True)
class PopulationEstimate:
    """Expected tests for a whole population of size n.

    ``ratio_estimate`` extrapolates the best per-sample rate (population
    partitioned into groups of ``group_size``); ``exact`` is the full
    table value n + V(n) and is None beyond the exact-table cap.
    """

    n: int
    q: float
    ratio_estimate: float
    exact: Optional[float]
    group_size: int
    per_sample_rate: float


def population_expected(
    n: int,
    q: float,
    exact_cap: int = EXACT_DP_CAP,
    table: Optional[PlanTable] = None,
) -> PopulationEstimate:
    """Expected test count for a population of n samples at probability q."""
    if n < 1:
        raise ValueError("population size must be >= 1")
    check_probability(q)
    if q >= 1.0:
        # Certain all-negative world: one pool clears everything.
        return PopulationEstimate(n, q, 1.0, 1.0 if n == 1 else None, n, 1.0 / n)
    g_star, rate = best_group_size(q)
    exact = None
    if n <= exact_cap:
        if table is None or table.size < n or table.q != q:
            table = build_table(n, q)
        exact = table.expected_tests(n)
    return PopulationEstimate(n, q, n * rate, exact, g_star, rate)


def plan_structure(
    m: int,
    q: float,
    table: Optional[PlanTable] = None,
    group_size: Optional[int] = None,
) -> Structure:
    """Plan for m fresh samples: exact table row when available, otherwise
    a tiling by best-rate groups with the remainder rightmost."""
    if m < 1:
        raise ValueError("plan needs at least one sample")
    if table is not None and table.q == q and table.size >= m:
        return table.structure(m)
    if group_size is None:
        group_size = best_group_size(q)[0]
    need = min(m, max(group_size, 1))
    if table is None or table.q != q or table.size < need:
        table = build_table(need, q)
    sizes = tiling_sizes(m, group_size)
    units: list[Node] = []
    offset = 0
    for size in sizes:
        for unit_size in table.unit_sizes(size):
            units.append(table._tree_node(unit_size, offset))
            offset += unit_size
    return Structure(tuple(units))


def tiling_sizes(m: int, group_size: int) -> list[int]:
    """Partition m into full best-rate groups plus a rightmost remainder."""
    full, rem = divmod(m, group_size)
    out = [group_size] * full
    if rem:
        out.append(rem)
    return out
