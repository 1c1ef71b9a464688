"""PC structure learning: skeleton search, v-structures and Meek propagation.

A CI test is any callable ``test(ds, x, y, cond, alpha) -> CiTestResult``;
see :class:`causalexplain.independence.FisherZ`, ``CmiKnn`` and
:class:`OracleCiTest` below. All loops run in canonical node order with
lexicographic conditioning sets, so results are deterministic.
"""

from __future__ import annotations

import itertools
import logging
from typing import Iterable, Sequence

from .data import Dataset
from .errors import ValidationError
from .graph import Cpdag, Dag, d_separated
from .independence import decide

log = logging.getLogger(__name__)


class SepsetTable:
    """Unordered node pair -> the conditioning set that separated it."""

    def __init__(self):
        self._sets: dict[frozenset, tuple[str, ...]] = {}

    def record(self, a, b, cond):
        self._sets[frozenset((a, b))] = tuple(cond)

    def get(self, a, b):
        return self._sets.get(frozenset((a, b)))

    def __contains__(self, pair):
        return frozenset(pair) in self._sets

    def __len__(self):
        return len(self._sets)

    def items(self):
        return self._sets.items()


class OracleCiTest:
    """Answers CI queries from d-separation in a known graph (p is 1 or 0)."""

    name = "oracle"

    def __init__(self, dag: Dag):
        self.dag = dag
        self.calls = 0

    def __call__(self, ds, x, y, cond, alpha):
        self.calls += 1
        sep = d_separated(self.dag, {x}, {y}, set(cond))
        return decide(float(sep), 1.0 if sep else 0.0, alpha)


def _node_list(ds, nodes):
    if nodes is not None:
        return tuple(nodes)
    if ds is None:
        raise ValidationError("either a dataset or a node list is required")
    return tuple(ds.columns)


def pc_skeleton(ds: Dataset | None, test, alpha: float, max_cond: int = 3,
                nodes: Sequence[str] | None = None) -> tuple[Cpdag, SepsetTable]:
    """Remove edges of the complete graph by conditional independence.

    At level l every still-present edge (x, y) is tested against subsets of
    size l of adj(x) - {y}, then of adj(y) - {x}; the first independent result
    deletes the edge and its conditioning set is recorded.
    """
    nodes = _node_list(ds, nodes)
    if len(nodes) < 2:
        raise ValidationError("pc needs at least two variables")
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    if max_cond < 0:
        raise ValidationError("max_cond must be >= 0")
    order = {n: i for i, n in enumerate(nodes)}
    adj = {n: set(nodes) - {n} for n in nodes}
    sepsets = SepsetTable()
    for level in range(max_cond + 1):
        if all(len(adj[n]) - 1 < level for n in nodes):
            break
        for i, x in enumerate(nodes):
            for y in nodes[i + 1:]:
                if y not in adj[x]:
                    continue
                tried = set()
                for a, b in ((x, y), (y, x)):
                    pool = sorted(adj[a] - {b}, key=order.get)
                    for cond in itertools.combinations(pool, level):
                        if cond in tried:
                            continue
                        tried.add(cond)
                        if test(ds, x, y, cond, alpha).independent:
                            adj[x].discard(y)
                            adj[y].discard(x)
                            sepsets.record(x, y, cond)
                            break
                    if y not in adj[x]:
                        break
    edges = {frozenset((a, b)) for a in nodes for b in adj[a]}
    return Cpdag(nodes, frozenset(), frozenset(edges)), sepsets


def orient_v_structures(skeleton: Cpdag, sepsets: SepsetTable,
                        conflicts: list | None = None) -> Cpdag:
    """Orient x -> z <- y for each unshielded x - z - y with z outside sepset(x, y).

    When two v-structures demand opposite directions on one edge, that edge
    stays undirected; the pair is logged and appended to ``conflicts``.
    """
    nodes = skeleton.nodes
    adj = {n: set() for n in nodes}
    for e in skeleton.skeleton():
        a, b = tuple(e)
        adj[a].add(b)
        adj[b].add(a)
    wanted = set()
    for z in nodes:
        nbrs = [n for n in nodes if n in adj[z]]
        for x, y in itertools.combinations(nbrs, 2):
            if y in adj[x]:
                continue
            sep = sepsets.get(x, y)
            if sep is None:
                raise ValidationError(f"nonadjacent pair ({x}, {y}) has no recorded sepset")
            if z not in sep:
                wanted.add((x, z))
                wanted.add((y, z))
    directed = set(skeleton.directed)
    undirected = set(skeleton.undirected)
    for a, b in sorted(wanted):
        if (b, a) in wanted:
            if a < b:
                log.warning("conflicting v-structure orientations on %s - %s; left undirected", a, b)
                if conflicts is not None:
                    conflicts.append((a, b))
            continue
        e = frozenset((a, b))
        if e in undirected:
            undirected.discard(e)
            directed.add((a, b))
    return Cpdag(nodes, frozenset(directed), frozenset(undirected))


def _reaches(directed_out, start, goal):
    stack, seen = [start], {start}
    while stack:
        n = stack.pop()
        if n == goal:
            return True
        for m in directed_out.get(n, ()):
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return False


def meek_rules(pdag: Cpdag) -> Cpdag:
    """Apply Meek's rules R1-R4 until nothing changes.

    An orientation that would close a directed cycle (possible only on an
    inconsistent input) is skipped and logged.
    """
    nodes = pdag.nodes
    directed = set(pdag.directed)
    undirected = set(pdag.undirected)

    def adjacent(a, b):
        return (a, b) in directed or (b, a) in directed or frozenset((a, b)) in undirected

    def und(a, b):
        return frozenset((a, b)) in undirected

    def fires(a, b):
        # would some rule orient a - b as a -> b?
        for c in nodes:
            # R1: c -> a - b, c and b nonadjacent
            if (c, a) in directed and c != b and not adjacent(c, b):
                return True
            # R2: a -> c -> b
            if (a, c) in directed and (c, b) in directed:
                return True
        # R3: a - c -> b and a - d -> b with c, d nonadjacent
        cands = [c for c in nodes if und(a, c) and (c, b) in directed]
        for c, d in itertools.combinations(cands, 2):
            if not adjacent(c, d):
                return True
        # R4: a - c -> d -> b with a adjacent to d, c and b nonadjacent
        for c in nodes:
            if not und(a, c) or adjacent(c, b):
                continue
            for d in nodes:
                if (c, d) in directed and (d, b) in directed and adjacent(a, d):
                    return True
        return False

    changed = True
    while changed:
        changed = False
        for e in sorted(undirected, key=lambda p: sorted(p)):
            x, y = sorted(e, key=nodes.index)
            for a, b in ((x, y), (y, x)):
                if not fires(a, b):
                    continue
                out = {}
                for t, h in directed:
                    out.setdefault(t, set()).add(h)
                if _reaches(out, b, a):
                    log.warning("orienting %s -> %s would create a cycle; skipped", a, b)
                    continue
                undirected.discard(e)
                directed.add((a, b))
                changed = True
                break
    return Cpdag(nodes, frozenset(directed), frozenset(undirected))


def pc(ds: Dataset | None, test, alpha: float, max_cond: int = 3,
       nodes: Sequence[str] | None = None, conflicts: list | None = None) -> Cpdag:
    """Skeleton search, v-structure orientation, then Meek closure."""
    skeleton, sepsets = pc_skeleton(ds, test, alpha, max_cond, nodes)
    return meek_rules(orient_v_structures(skeleton, sepsets, conflicts))


def true_cpdag(dag: Dag) -> Cpdag:
    """Equivalence-class representative of ``dag``: its skeleton with the
    v-structures directed, closed under Meek's rules."""
    keep = set()
    for z in dag.nodes:
        parents = dag.parents(z)
        for x, y in itertools.combinations(parents, 2):
            if not dag.is_adjacent(x, y):
                keep.add((x, z))
                keep.add((y, z))
    undirected = {frozenset(e) for e in dag.edges if e not in keep}
    return meek_rules(Cpdag(dag.nodes, frozenset(keep), frozenset(undirected)))


def skeleton_shd(g1: Cpdag, g2: Cpdag) -> int:
    """Number of unordered pairs adjacent in exactly one of the two graphs."""
    return len(g1.skeleton() ^ g2.skeleton())


def alpha_sweep(ds: Dataset, test, alphas: Iterable[float], max_cond: int = 3) -> dict:
    return {a: pc(ds, test, a, max_cond) for a in alphas}
