import itertools

import numpy as np
import pytest

from causalexplain import scm as scm_mod
from causalexplain.data import Dataset, standardize
from causalexplain.graph import build_dag
from causalexplain.harness.experiment import MASTER_SEED, ExperimentConfig


@pytest.fixture(scope="session")
def complex_data():
    cfg = ExperimentConfig(seed=MASTER_SEED)
    return scm_mod.sample(scm_mod.builtin("complex"), 10_000, cfg.seed_for("sample"))


@pytest.fixture(scope="session")
def complex_std(complex_data):
    return standardize(complex_data)[0]


def gaussian_columns(names, n, seed, rho=None):
    """Independent N(0,1) columns, or a correlated pair when ``rho`` is given."""
    gen = np.random.default_rng(seed)
    z = gen.standard_normal((n, len(names)))
    if rho is not None:
        z[:, 1] = rho * z[:, 0] + np.sqrt(1 - rho * rho) * z[:, 1]
    return Dataset(names, z)


def random_dag(n_nodes, p, gen, prefix="V"):
    nodes = [f"{prefix}{i}" for i in range(n_nodes)]
    perm = gen.permutation(n_nodes)
    edges = [(nodes[perm[i]], nodes[perm[j]])
             for i in range(n_nodes) for j in range(i + 1, n_nodes) if gen.random() < p]
    return build_dag(nodes, edges)


def brute_force_d_separated(dag, a, b, s):
    """Enumerate every simple undirected path between a and b and test blocking."""
    s = set(s)
    desc = {}
    for n in dag.nodes:
        seen, stack = set(), [n]
        while stack:
            for c in dag.children(stack.pop()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        desc[n] = seen
    nbrs = {n: set(dag.parents(n)) | set(dag.children(n)) for n in dag.nodes}

    def blocked(path):
        for i in range(1, len(path) - 1):
            prev, mid, nxt = path[i - 1], path[i], path[i + 1]
            collider = (prev, mid) in dag.edges and (nxt, mid) in dag.edges
            if collider:
                if mid not in s and not (desc[mid] & s):
                    return True
            elif mid in s:
                return True
        return False

    def paths(cur, target, visited):
        if cur == target:
            yield list(visited)
            return
        for m in sorted(nbrs[cur]):
            if m not in visited:
                visited.append(m)
                yield from paths(m, target, visited)
                visited.pop()

    for x in a:
        for y in b:
            for path in paths(x, y, [x]):
                if not blocked(path):
                    return False
    return True


def mec_cpdag(dag):
    """CPDAG by brute force: intersect all orientations of the skeleton that are
    acyclic and share the v-structures of ``dag``."""
    from causalexplain.errors import CycleError
    from causalexplain.graph import Cpdag
    nodes = dag.nodes

    def vstructs(edges):
        par = {n: set() for n in nodes}
        for a, b in edges:
            par[b].add(a)
        adj = {frozenset(e) for e in edges}
        return {(x, y, z) for z in nodes for x, y in itertools.combinations(sorted(par[z]), 2)
                if frozenset((x, y)) not in adj}

    skel = sorted(dag.edges)
    target = vstructs(dag.edges)
    members = []
    for bits in itertools.product((0, 1), repeat=len(skel)):
        edges = [e if t == 0 else (e[1], e[0]) for e, t in zip(skel, bits)]
        try:
            build_dag(nodes, edges)
        except CycleError:
            continue
        if vstructs(edges) == target:
            members.append(set(edges))
    common = set.intersection(*members)
    undirected = {frozenset(e) for e in skel if e not in common and (e[1], e[0]) not in common}
    return Cpdag(nodes, frozenset(common), frozenset(undirected))
