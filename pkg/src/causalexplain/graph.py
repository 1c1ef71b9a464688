"""Directed acyclic graphs, d-separation and structural comparison."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .errors import (CycleError, DuplicateError, NodeMismatchError, OverlapError,
                     UnknownNodeError)


def _topological_order(nodes, edges):
    # Kahn's algorithm, ties broken by declaration order
    index = {n: i for i, n in enumerate(nodes)}
    indeg = {n: 0 for n in nodes}
    children = {n: [] for n in nodes}
    for a, b in edges:
        indeg[b] += 1
        children[a].append(b)
    ready = sorted((n for n in nodes if indeg[n] == 0), key=index.get)
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for c in sorted(children[n], key=index.get):
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
        ready.sort(key=index.get)
    if len(order) != len(nodes):
        raise CycleError(n for n in nodes if indeg[n] > 0)
    return tuple(order)


@dataclass(frozen=True)
class Dag:
    """A validated DAG. Build with :func:`build_dag`.

    ``nodes`` keeps declaration order, which is the canonical order used to
    sort every set-valued output.
    """

    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]
    _parents: dict = field(repr=False, compare=False, hash=False)
    _children: dict = field(repr=False, compare=False, hash=False)
    _order: tuple = field(repr=False, compare=False, hash=False)
    _index: dict = field(repr=False, compare=False, hash=False)

    def index(self, node):
        try:
            return self._index[node]
        except KeyError:
            raise UnknownNodeError(f"unknown node {node!r}") from None

    def sort(self, names: Iterable[str]) -> tuple[str, ...]:
        idx = self._index
        return tuple(sorted(names, key=idx.__getitem__))

    def parents(self, node) -> tuple[str, ...]:
        self._check(node)
        return self._parents[node]

    def children(self, node) -> tuple[str, ...]:
        self._check(node)
        return self._children[node]

    def topological_order(self) -> tuple[str, ...]:
        return self._order

    def is_adjacent(self, a, b) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def sorted_edges(self) -> list[tuple[str, str]]:
        idx = self._index
        return sorted(self.edges, key=lambda e: (idx[e[0]], idx[e[1]]))

    def _check(self, node):
        if node not in self._parents:
            raise UnknownNodeError(f"unknown node {node!r}")


def build_dag(nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> Dag:
    """Validate ``nodes`` and ``edges`` and return a :class:`Dag`.

    Raises DuplicateError for repeated nodes or edges, UnknownNodeError when an
    edge names an undeclared node and CycleError when no topological order
    exists (self-loops included).
    """
    nodes = tuple(nodes)
    if len(set(nodes)) != len(nodes):
        dup = sorted({n for n in nodes if nodes.count(n) > 1})
        raise DuplicateError(f"duplicate nodes: {dup}")
    declared = set(nodes)
    edge_list = [tuple(e) for e in edges]
    seen = set()
    for a, b in edge_list:
        for n in (a, b):
            if n not in declared:
                raise UnknownNodeError(f"edge ({a!r}, {b!r}) names undeclared node {n!r}")
        if (a, b) in seen:
            raise DuplicateError(f"duplicate edge ({a!r}, {b!r})")
        if a == b:
            raise CycleError((a,))
        seen.add((a, b))
    order = _topological_order(nodes, edge_list)
    idx = {n: i for i, n in enumerate(nodes)}
    parents = {n: [] for n in nodes}
    children = {n: [] for n in nodes}
    for a, b in edge_list:
        parents[b].append(a)
        children[a].append(b)
    parents = {n: tuple(sorted(p, key=idx.get)) for n, p in parents.items()}
    children = {n: tuple(sorted(c, key=idx.get)) for n, c in children.items()}
    return Dag(nodes, frozenset(seen), parents, children, order, idx)


def _closure(start, step):
    seen = set()
    stack = list(step(start))
    while stack:
        n = stack.pop()
        if n not in seen:
            seen.add(n)
            stack.extend(step(n))
    return seen


def relatives(dag: Dag, node: str, kind: str) -> tuple[str, ...]:
    """Parents, children, ancestors or descendants of ``node`` in canonical order."""
    dag._check(node)
    if kind == "parents":
        out = dag._parents[node]
    elif kind == "children":
        out = dag._children[node]
    elif kind == "ancestors":
        out = _closure(node, dag._parents.__getitem__)
    elif kind == "descendants":
        out = _closure(node, dag._children.__getitem__)
    else:
        raise ValueError(f"unknown relative kind {kind!r}")
    out = set(out)
    out.discard(node)
    return dag.sort(out)


def _as_set(dag, names):
    if isinstance(names, str):
        names = (names,)
    names = set(names)
    for n in names:
        dag._check(n)
    return names


def d_separated(dag: Dag, a, b, s=()) -> bool:
    """True iff every path between node sets ``a`` and ``b`` is blocked by ``s``.

    Reachability over (node, direction) states: a trail may pass a non-collider
    only if it is unobserved and a collider only if it is an ancestor of ``s``
    (or in ``s``). Linear in the number of edges.
    """
    a, b, s = _as_set(dag, a), _as_set(dag, b), _as_set(dag, s)
    if a & b or a & s or b & s:
        raise OverlapError("a, b and s must be pairwise disjoint")
    if not a or not b:
        return True

    # s together with its ancestors: colliders here are open
    anc_s = set(s)
    stack = list(s)
    while stack:
        for p in dag._parents[stack.pop()]:
            if p not in anc_s:
                anc_s.add(p)
                stack.append(p)

    # "up": arrived from a child (or the start); "down": arrived from a parent
    queue = deque((n, "up") for n in a)
    visited = set()
    while queue:
        node, direction = queue.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node not in s and node in b:
            return False
        if direction == "up":
            if node not in s:
                queue.extend((p, "up") for p in dag._parents[node])
                queue.extend((c, "down") for c in dag._children[node])
        else:
            if node not in s:
                queue.extend((c, "down") for c in dag._children[node])
            if node in anc_s:
                queue.extend((p, "up") for p in dag._parents[node])
    return True


def implied_independencies(dag: Dag, max_cond: int) -> list[tuple[str, str, tuple[str, ...]]]:
    """Every (a, b, s) with a before b, |s| <= max_cond and a, b d-separated by s.

    Conditioning sets are drawn from the remaining nodes in lexicographic
    canonical order, smallest sets first.
    """
    if max_cond < 0:
        raise ValueError("max_cond must be >= 0")
    out = []
    for i, a in enumerate(dag.nodes):
        for b in dag.nodes[i + 1:]:
            rest = [n for n in dag.nodes if n not in (a, b)]
            for size in range(min(max_cond, len(rest)) + 1):
                for cond in itertools.combinations(rest, size):
                    if d_separated(dag, {a}, {b}, cond):
                        out.append((a, b, cond))
    return out


@dataclass(frozen=True)
class Cpdag:
    """Partially directed graph: the output of structure learning.

    ``undirected`` holds frozenset pairs; ``directed`` ordered (tail, head) pairs.
    """

    nodes: tuple[str, ...]
    directed: frozenset = frozenset()
    undirected: frozenset = frozenset()

    def __post_init__(self):
        declared = set(self.nodes)
        if len(declared) != len(self.nodes):
            raise DuplicateError("duplicate nodes")
        object.__setattr__(self, "directed", frozenset(tuple(e) for e in self.directed))
        object.__setattr__(self, "undirected", frozenset(frozenset(e) for e in self.undirected))
        pairs = set()
        for a, b in self.directed:
            if a == b:
                raise CycleError((a,))
            pairs.add(frozenset((a, b)))
        for e in self.undirected:
            if len(e) != 2:
                raise ValueError("undirected edges need two distinct endpoints")
        if len(pairs) != len(self.directed) or pairs & self.undirected:
            raise DuplicateError("an unordered pair carries more than one edge mark")
        for e in pairs | self.undirected:
            for n in e:
                if n not in declared:
                    raise UnknownNodeError(f"edge names undeclared node {n!r}")

    @classmethod
    def from_dag(cls, dag: Dag) -> "Cpdag":
        """The fully directed graph of ``dag`` (not its equivalence class)."""
        return cls(dag.nodes, dag.edges, frozenset())

    def edge_mark(self, a, b):
        """'->' if a->b, '<-' if b->a, '--' if undirected, None if nonadjacent."""
        if (a, b) in self.directed:
            return "->"
        if (b, a) in self.directed:
            return "<-"
        if frozenset((a, b)) in self.undirected:
            return "--"
        return None

    def adjacent(self, a, b) -> bool:
        return self.edge_mark(a, b) is not None

    def skeleton(self) -> frozenset:
        return frozenset(frozenset(e) for e in self.directed) | self.undirected

    def lines(self) -> list[str]:
        """Edge list in the ``A -> B`` / ``A -- B`` text format, canonical order."""
        idx = {n: i for i, n in enumerate(self.nodes)}
        rows = []
        for a, b in self.directed:
            rows.append(((idx[a], idx[b]), f"{a} -> {b}"))
        for e in self.undirected:
            a, b = sorted(e, key=idx.get)
            rows.append(((idx[a], idx[b]), f"{a} -- {b}"))
        return [text for _, text in sorted(rows)]

    def to_text(self) -> str:
        return "".join(line + "\n" for line in self.lines())


def parse_cpdag(text: str, nodes: Iterable[str] | None = None) -> Cpdag:
    """Inverse of :meth:`Cpdag.to_text`; nodes default to order of appearance."""
    directed, undirected, seen = set(), set(), []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        for mark in ("->", "--"):
            if f" {mark} " in line:
                a, b = (t.strip() for t in line.split(f" {mark} "))
                break
        else:
            raise ValueError(f"cannot parse edge line {raw!r}")
        for n in (a, b):
            if n not in seen:
                seen.append(n)
        if mark == "->":
            directed.add((a, b))
        else:
            undirected.add(frozenset((a, b)))
    return Cpdag(tuple(nodes) if nodes is not None else tuple(seen), directed, undirected)


def shd(g1: Cpdag, g2: Cpdag) -> int:
    """Structural Hamming distance: unordered pairs whose edge marks differ."""
    if set(g1.nodes) != set(g2.nodes):
        raise NodeMismatchError("graphs are over different node sets")
    pairs = g1.skeleton() | g2.skeleton()
    count = 0
    for pair in pairs:
        a, b = tuple(pair)
        if g1.edge_mark(a, b) != g2.edge_mark(a, b):
            count += 1
    return count
