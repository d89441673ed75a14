"""Brute-force ground truth for small instances.

Exhaustive enumeration of every valid plan shape, exact optimal values by
direct minimization, the optimal unrestricted (non-nested, adaptive)
strategy for tiny n by value iteration over information states, and
threshold localization by bisection. Everything here is deliberately
independent of the optimizer's recursion so the two can check each other.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

from .structure import Node, Structure, check_probability, structure_value

ENUM_CAP = 8
NONNESTED_CAP = 3


@lru_cache(maxsize=None)
def _unit_shapes(n: int) -> tuple:
    """All headed shapes on n samples: 1 for a leaf, or a tuple of >= 2
    sub-shapes pooled under one test."""
    if n == 1:
        return (1,)
    shapes = []
    for parts in _compositions(n, minimum_parts=2):
        for combo in itertools.product(*(_unit_shapes(p) for p in parts)):
            shapes.append(tuple(combo))
    return tuple(shapes)


def _compositions(n: int, minimum_parts: int) -> list[tuple[int, ...]]:
    out = []

    def rec(remaining: int, acc: tuple[int, ...]) -> None:
        if remaining == 0:
            if len(acc) >= minimum_parts:
                out.append(acc)
            return
        for part in range(1, remaining + 1):
            rec(remaining - part, acc + (part,))

    rec(n, ())
    return out


def _materialize(shape, offset: int) -> Node:
    if shape == 1:
        return Node(offset, offset + 1)
    children = []
    cursor = offset
    for part in shape:
        child = _materialize(part, cursor)
        cursor = child.end
        children.append(child)
    return Node(offset, cursor, tuple(children))


def enumerate_structures(n: int, cap: int = ENUM_CAP) -> list[Structure]:
    """Every valid plan on n samples: ordered forests, tests pooling >= 2
    groups, contiguous spans. Grows like 2, 6, 22, 90, 394, ..."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > cap:
        raise ValueError(f"n={n} exceeds enumeration cap {cap}")
    structures = []
    for parts in _compositions(n, minimum_parts=1):
        for combo in itertools.product(*(_unit_shapes(p) for p in parts)):
            roots = []
            cursor = 0
            for shape in combo:
                node = _materialize(shape, cursor)
                cursor = node.end
                roots.append(node)
            structures.append(Structure(tuple(roots)))
    return structures


@dataclass(frozen=True)
class BruteResult:
    structure: Structure
    value: float
    ties: tuple[Structure, ...]


def brute_optimal(n: int, q, cap: int = ENUM_CAP, tie_eps: float = 1e-12) -> BruteResult:
    """Arg-min of structure_value over every enumerated plan.

    Returns the first minimizer in enumeration order plus any other plans
    whose value ties within tie_eps relative.
    """
    check_probability(q)
    best = None
    best_value = None
    scored = []
    for s in enumerate_structures(n, cap):
        value = structure_value(s, q).total_value
        scored.append((value, s))
        if best_value is None or value < best_value:
            best, best_value = s, value
    tol = tie_eps * max(1.0, abs(best_value))
    ties = tuple(
        s for value, s in scored if s is not best and abs(value - best_value) <= tol
    )
    return BruteResult(best, best_value, ties)


def nonnested_optimal(n: int, q: float, cap: int = NONNESTED_CAP) -> float:
    """Optimal expected tests with NO nesting restriction, tiny n only.

    Value iteration over information states. A state is the set of outcome
    vectors still consistent with results seen so far (vector o has bit i
    set when sample i is positive); the strategy may test any subset of
    samples whose pooled outcome is not already determined. Probabilities
    are renormalized from the product prior.
    """
    check_probability(q)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > cap:
        raise ValueError(f"n={n} exceeds the non-nested cap {cap} (state space 2**2**n)")
    p = 1.0 - q
    vectors = list(range(1 << n))
    prior = [q ** (n - o.bit_count()) * p ** o.bit_count() for o in vectors]
    subsets = list(range(1, 1 << n))

    def resolved(state: tuple[int, ...]) -> bool:
        for i in range(n):
            bit = state[0] >> i & 1
            if any(o >> i & 1 != bit for o in state[1:]):
                return False
        return True

    @lru_cache(maxsize=None)
    def cost(state: tuple[int, ...]) -> float:
        if resolved(state):
            return 0.0
        total = sum(prior[o] for o in state)
        best = float("inf")
        for pool in subsets:
            pos = tuple(o for o in state if o & pool)
            neg = tuple(o for o in state if not o & pool)
            if not pos or not neg:
                continue  # outcome already determined
            w_pos = sum(prior[o] for o in pos) / total
            candidate = 1.0 + w_pos * cost(pos) + (1.0 - w_pos) * cost(neg)
            if candidate < best:
                best = candidate
        return best

    initial = tuple(o for o in vectors if prior[o] > 0.0)
    return cost(initial)


def threshold_bisect(
    f_low: float,
    f_high: float,
    predicate: Callable[[float], bool],
    tol: float = 1e-6,
) -> float:
    """Locate the switch point of a monotone predicate on [f_low, f_high].

    The predicate must be False at f_low and True at f_high; bisection
    narrows to absolute width tol and returns the midpoint.
    """
    if f_low >= f_high:
        raise ValueError("need f_low < f_high")
    if predicate(f_low) or not predicate(f_high):
        raise ValueError("predicate must be False at f_low and True at f_high")
    lo, hi = f_low, f_high
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2.0
