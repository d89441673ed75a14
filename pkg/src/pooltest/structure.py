"""Pooled-testing plan structures.

A plan is an ordered forest over sample indices 0..n-1. An internal node is
a pooled test of every sample in its contiguous span; a leaf is a single
sample tested on its own. The compact text form writes one "x" per sample
and wraps a pooled test in square brackets, e.g. "[x[xx]]" pools samples
0..2, then (if needed) tests sample 0 alone and samples 1..2 together.

All types here are immutable after construction and every operation is a
pure function, so values can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

from fractions import Fraction

Number = Union[float, Fraction]

# Pooling a pair only pays above the reciprocal golden ratio.
PHI = (math.sqrt(5.0) - 1.0) / 2.0


class NotationError(ValueError):
    """Text does not conform to the plan grammar."""


class StructureError(ValueError):
    """A node or forest violates the plan-shape invariants."""


def check_probability(q: Number) -> None:
    """Reject negative-sample probabilities outside [0, 1]."""
    if not 0 <= q <= 1:
        raise ValueError(f"q must lie in [0, 1], got {q!r}")


@dataclass(frozen=True)
class Node:
    """One plan node covering the half-open sample span [start, end).

    A leaf covers exactly one sample and has no children. A test node has
    at least two children whose spans partition its own span in order;
    single-child tests are rejected outright because they add no
    information over the child itself.
    """

    start: int
    end: int
    children: tuple["Node", ...] = ()

    def __post_init__(self) -> None:
        if self.end - self.start < 1:
            raise StructureError(f"empty span [{self.start}, {self.end})")
        if self.children:
            if len(self.children) < 2:
                raise StructureError(
                    f"single-child test over [{self.start}, {self.end})"
                )
            cursor = self.start
            for child in self.children:
                if child.start != cursor:
                    raise StructureError(
                        f"children do not partition [{self.start}, {self.end})"
                    )
                cursor = child.end
            if cursor != self.end:
                raise StructureError(
                    f"children do not partition [{self.start}, {self.end})"
                )
        elif self.end - self.start != 1:
            raise StructureError(
                f"leaf must cover exactly one sample, got [{self.start}, {self.end})"
            )

    @property
    def size(self) -> int:
        return self.end - self.start

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def is_test(self) -> bool:
        return bool(self.children)

    def iter_nodes(self) -> Iterator["Node"]:
        """Yield this node and all descendants in preorder."""
        yield self
        for child in self.children:
            yield from child.iter_nodes()


@dataclass(frozen=True)
class Structure:
    """An ordered forest of plan nodes whose spans tile [0, n)."""

    roots: tuple[Node, ...]

    def __post_init__(self) -> None:
        cursor = 0
        for root in self.roots:
            if root.start != cursor:
                raise StructureError("root spans must tile [0, n) in order")
            cursor = root.end

    @property
    def n(self) -> int:
        return self.roots[-1].end if self.roots else 0

    def iter_nodes(self) -> Iterator[Node]:
        for root in self.roots:
            yield from root.iter_nodes()

    def test_nodes(self) -> Iterator[Node]:
        for node in self.iter_nodes():
            if node.is_test:
                yield node

    def __str__(self) -> str:
        return notation(self)


def parse(text: str) -> Structure:
    """Parse the bracket notation into a Structure.

    Grammar: structure := unit+ ; unit := "x" | "[" unit unit+ "]".
    Whitespace is insignificant. Leaf order is left-to-right text order.
    """
    i = 0
    length = len(text)

    def skip_ws(j: int) -> int:
        while j < length and text[j].isspace():
            j += 1
        return j

    def parse_unit(j: int, offset: int) -> tuple[Node, int, int]:
        ch = text[j]
        if ch == "x":
            return Node(offset, offset + 1), j + 1, offset + 1
        if ch == "[":
            j += 1
            start = offset
            kids: list[Node] = []
            while True:
                j = skip_ws(j)
                if j >= length:
                    raise NotationError("unbalanced bracket: missing ']'")
                if text[j] == "]":
                    j += 1
                    break
                node, j, offset = parse_unit(j, offset)
                kids.append(node)
            if len(kids) < 2:
                raise NotationError(
                    "a bracket must pool at least two units (single-child test)"
                )
            return Node(start, offset, tuple(kids)), j, offset
        raise NotationError(f"unexpected character {ch!r} at position {j}")

    roots: list[Node] = []
    offset = 0
    i = skip_ws(i)
    while i < length:
        if text[i] == "]":
            raise NotationError(f"unbalanced bracket: stray ']' at position {i}")
        node, i, offset = parse_unit(i, offset)
        roots.append(node)
        i = skip_ws(i)
    if not roots:
        raise NotationError("empty input")
    return Structure(tuple(roots))


def notation(s: Structure) -> str:
    """Render a Structure in the compact single-line text form."""

    def render(node: Node) -> str:
        if node.is_leaf:
            return "x"
        return "[" + "".join(render(c) for c in node.children) + "]"

    return "".join(render(root) for root in s.roots)


def test_value(n: int, child_sizes: Sequence[int], q: Number) -> Number:
    """Expected-cost increment of pooling k groups under one extra test.

    Adding an all-inclusive test over k groups (ordered sizes summing to n,
    last size n_k) changes the plan's expected test count by

        1 - q**(n - n_k) - (k - 1) * q**n

    which depends only on the group sizes, not on their substructures.
    Negative means the test is advantageous.
    """
    check_probability(q)
    sizes = list(child_sizes)
    if len(sizes) < 2:
        raise StructureError("a test must pool at least two groups")
    if any(size < 1 for size in sizes):
        raise StructureError("group sizes must be positive")
    if sum(sizes) != n:
        raise StructureError(f"group sizes {sizes} do not sum to {n}")
    last = sizes[-1]
    return 1 - q ** (n - last) - (len(sizes) - 1) * q**n


@dataclass(frozen=True)
class ValueBreakdown:
    """Per-test cost increments plus their total for a structure.

    ``per_test_value`` lists (span, increment) in bottom-up order: every
    test appears after all tests nested inside it, which is the reverse of
    physical execution order. ``expected_tests`` equals the sample count
    plus ``total_value``.
    """

    per_test_value: tuple[tuple[tuple[int, int], Number], ...]
    total_value: Number
    expected_tests: Number


def structure_value(s: Structure, q: Number) -> ValueBreakdown:
    """Expected test count of a plan, accumulated test by test.

    Starts from n individual tests (value zero) and adds each pooled
    test's increment from the least inclusive up. Accepts Fraction q for
    exact arithmetic.
    """
    check_probability(q)
    per_test: list[tuple[tuple[int, int], Number]] = []

    def visit(node: Node) -> None:
        for child in node.children:
            visit(child)
        if node.is_test:
            sizes = [c.size for c in node.children]
            per_test.append((node.span, test_value(node.size, sizes, q)))

    for root in s.roots:
        visit(root)

    zero: Number = q - q  # stays Fraction in exact mode
    total = sum((v for _, v in per_test), zero)
    return ValueBreakdown(tuple(per_test), total, s.n + total)


def canonicalize(s: Structure) -> Structure:
    """Reorder every test's children so the largest group sits rightmost.

    Stable for equal sizes (the last-occurring largest child stays last,
    everything else keeps its relative order). Sample spans are relabeled
    to remain contiguous. Never increases the structure's total value.
    """

    def shape(node: Node):
        if node.is_leaf:
            return 1
        kids = [shape(c) for c in node.children]
        sizes = [_shape_size(k) for k in kids]
        biggest = max(sizes)
        j = len(sizes) - 1 - sizes[::-1].index(biggest)
        return kids[:j] + kids[j + 1 :] + [kids[j]]

    def build(shp, offset: int) -> Node:
        if shp == 1:
            return Node(offset, offset + 1)
        children = []
        cursor = offset
        for part in shp:
            child = build(part, cursor)
            cursor = child.end
            children.append(child)
        return Node(offset, cursor, tuple(children))

    roots = []
    cursor = 0
    for root in s.roots:
        node = build(shape(root), cursor)
        cursor = node.end
        roots.append(node)
    return Structure(tuple(roots))


def _shape_size(shp) -> int:
    if shp == 1:
        return 1
    return sum(_shape_size(part) for part in shp)
