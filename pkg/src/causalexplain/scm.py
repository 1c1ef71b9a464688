"""Linear-Gaussian structural causal models.

Each node is ``X_j := sum_i beta_ij * X_i + U_j`` with ``U_j ~ N(0, sigma_j)``,
sigma a standard deviation. Models serialize to a small JSON format::

    {"nodes": [{"name": "C", "noise_std": 1.0, "parents": {}},
               {"name": "X", "noise_std": 0.2, "parents": {"A": -2.0, "C": 1.0}}, ...]}
"""

from __future__ import annotations

import json
import math
import os
import re
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from . import _rng
from .data import Dataset
from .errors import (CycleError, DuplicateError, InconsistentParentsError, SchemaError,
                     SpecSyntaxError, UnknownNodeError, ValidationError)
from .graph import Dag, build_dag

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_NODE_KEYS = {"name", "parents", "noise_std"}


@dataclass(frozen=True)
class NodeAssignment:
    node: str
    parent_coefficients: Mapping[str, float]
    noise_std: float

    def __post_init__(self):
        if not (self.noise_std >= 0.0 and math.isfinite(self.noise_std)):
            raise SchemaError(f"noise_std of {self.node!r} must be finite and >= 0")
        coefs = dict(self.parent_coefficients)
        for p, b in coefs.items():
            if not math.isfinite(b):
                raise SchemaError(f"coefficient {p}->{self.node} must be finite")
        object.__setattr__(self, "parent_coefficients", MappingProxyType(coefs))
        object.__setattr__(self, "noise_std", float(self.noise_std))

    def __eq__(self, other):
        return (isinstance(other, NodeAssignment) and self.node == other.node
                and dict(self.parent_coefficients) == dict(other.parent_coefficients)
                and self.noise_std == other.noise_std)

    def __hash__(self):
        return hash((self.node, tuple(sorted(self.parent_coefficients.items())), self.noise_std))


@dataclass(frozen=True, eq=True)
class Scm:
    dag: Dag
    assignments: tuple[NodeAssignment, ...]

    def __post_init__(self):
        names = [a.node for a in self.assignments]
        if sorted(names) != sorted(self.dag.nodes) or len(set(names)) != len(names):
            raise InconsistentParentsError("every DAG node must be assigned exactly once")
        order = {n: i for i, n in enumerate(self.dag.nodes)}
        assignments = tuple(sorted(self.assignments, key=lambda a: order[a.node]))
        object.__setattr__(self, "assignments", assignments)
        for a in assignments:
            if set(a.parent_coefficients) != set(self.dag.parents(a.node)):
                raise InconsistentParentsError(
                    f"{a.node!r} lists parents {sorted(a.parent_coefficients)} but the DAG "
                    f"has {list(self.dag.parents(a.node))}")

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.dag.nodes

    def assignment(self, node: str) -> NodeAssignment:
        for a in self.assignments:
            if a.node == node:
                return a
        raise UnknownNodeError(f"unknown node {node!r}")

    def coefficient(self, parent: str, child: str) -> float:
        return self.assignment(child).parent_coefficients.get(parent, 0.0)


def make_scm(equations: Mapping[str, tuple[Mapping[str, float], float]]) -> Scm:
    """Build from ``{name: (parent_coefficients, noise_std)}`` in declaration order."""
    nodes = list(equations)
    edges = [(p, n) for n, (parents, _) in equations.items() for p in parents]
    for n, (parents, _) in equations.items():
        for p in parents:
            if p not in equations:
                raise InconsistentParentsError(f"{n!r} lists undeclared parent {p!r}")
    dag = build_dag(nodes, edges)
    return Scm(dag, tuple(NodeAssignment(n, dict(c), s) for n, (c, s) in equations.items()))


def _number(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{what} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise SchemaError(f"{what} must be finite")
    return value


def parse_scm(text: str) -> Scm:
    """Parse and validate the JSON SCM format."""
    try:
        doc = json.loads(text, parse_constant=lambda c: float(c))
    except json.JSONDecodeError as exc:
        raise SpecSyntaxError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or set(doc) != {"nodes"}:
        raise SchemaError('top level must be an object with exactly the key "nodes"')
    entries = doc["nodes"]
    if not isinstance(entries, list) or not entries:
        raise SchemaError('"nodes" must be a nonempty array')
    equations = {}
    for entry in entries:
        if not isinstance(entry, dict):
            raise SchemaError("each node must be an object")
        unknown = set(entry) - _NODE_KEYS
        if unknown:
            raise SchemaError(f"unknown node keys {sorted(unknown)}")
        if "name" not in entry or "noise_std" not in entry:
            raise SchemaError('each node needs "name" and "noise_std"')
        name = entry["name"]
        if not isinstance(name, str) or not NAME_RE.match(name):
            raise SchemaError(f"invalid node name {name!r}")
        if name in equations:
            raise SchemaError(f"node {name!r} declared twice")
        parents = entry.get("parents", {})
        if not isinstance(parents, dict):
            raise SchemaError(f'"parents" of {name!r} must be an object')
        coefs = {}
        for p, b in parents.items():
            if not NAME_RE.match(p):
                raise SchemaError(f"invalid parent name {p!r}")
            coefs[p] = _number(b, f"coefficient {p}->{name}")
        noise = _number(entry["noise_std"], f"noise_std of {name!r}")
        if noise < 0:
            raise SchemaError(f"noise_std of {name!r} must be >= 0")
        equations[name] = (coefs, noise)
    try:
        return make_scm(equations)
    except (CycleError, InconsistentParentsError):
        raise
    except DuplicateError as exc:
        raise SchemaError(str(exc)) from None


def serialize_scm(scm: Scm) -> str:
    """Canonical JSON: declaration order, sorted keys, shortest round-trip floats."""
    order = {n: i for i, n in enumerate(scm.nodes)}
    nodes = []
    for a in scm.assignments:
        parents = {p: float(a.parent_coefficients[p])
                   for p in sorted(a.parent_coefficients, key=order.get)}
        nodes.append({"name": a.node, "noise_std": a.noise_std, "parents": parents})
    return json.dumps({"nodes": nodes}, sort_keys=True, indent=2) + "\n"


def sample(scm: Scm, n: int, seed: int) -> Dataset:
    """Ancestral sampling of ``n`` rows.

    Node ``j`` (declaration index) draws its noise from its own substream of
    ``seed``, so editing one node's equation never changes another node's noise.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    index = {name: j for j, name in enumerate(scm.nodes)}
    cols = {}
    for name in scm.dag.topological_order():
        a = scm.assignment(name)
        noise = _rng.standard_normal(_rng.generator(seed, index[name]), n)
        value = a.noise_std * noise
        for p, b in a.parent_coefficients.items():
            value = value + b * cols[p]
        cols[name] = value
    return Dataset(scm.nodes, np.column_stack([cols[c] for c in scm.nodes]))


def total_causal_effect(scm: Scm, cause: str, effect: str) -> float:
    """Sum over directed paths ``cause -> ... -> effect`` of coefficient products."""
    scm.dag.index(cause)
    scm.dag.index(effect)
    acc = {cause: 1.0}
    for node in scm.dag.topological_order():
        if node == cause:
            continue
        total = 0.0
        for p, b in scm.assignment(node).parent_coefficients.items():
            total += b * acc.get(p, 0.0)
        acc[node] = total
    return acc.get(effect, 0.0)


PREDICTOR_NAMES = ("X", "D", "A", "K", "C", "F", "G", "H")


def builtin(which: str) -> Scm:
    """The two built-in datasets.

    ``simple``: eight independent N(0, 1) predictors, each entering Y with
    coefficient 1, Y-noise N(0, 1). ``complex``::

        C ~ N(0, 1)       A ~ N(0, 0.8)
        K = A + U_K       U_K ~ N(0, 0.1)
        X = C - 2A + U_X  U_X ~ N(0, 0.2)
        F = 3X + U_F      U_F ~ N(0, 0.8)
        D = -2X + U_D     U_D ~ N(0, 0.5)
        G = D + U_G       U_G ~ N(0, 0.5)
        Y = 2K - D + U_Y  U_Y ~ N(0, 0.2)
        H = 0.5Y + U_H    U_H ~ N(0, 0.1)
    """
    if which == "simple":
        equations = {p: ({}, 1.0) for p in PREDICTOR_NAMES}
        equations["Y"] = ({p: 1.0 for p in PREDICTOR_NAMES}, 1.0)
        return make_scm(equations)
    if which == "complex":
        return make_scm({
            "X": ({"C": 1.0, "A": -2.0}, 0.2),
            "D": ({"X": -2.0}, 0.5),
            "A": ({}, 0.8),
            "K": ({"A": 1.0}, 0.1),
            "C": ({}, 1.0),
            "F": ({"X": 3.0}, 0.8),
            "G": ({"D": 1.0}, 0.5),
            "H": ({"Y": 0.5}, 0.1),
            "Y": ({"K": 2.0, "D": -1.0}, 0.2),
        })
    raise ValidationError(f"unknown builtin SCM {which!r} (expected 'simple' or 'complex')")


def load_scm(source: str) -> Scm:
    """A builtin name or a path to a JSON SCM file."""
    if source in ("simple", "complex"):
        return builtin(source)
    if not os.path.isfile(source):
        raise ValidationError(f"{source!r} is neither a builtin SCM nor an existing file")
    with open(source, encoding="utf-8") as fh:
        return parse_scm(fh.read())
