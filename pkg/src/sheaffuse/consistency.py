"""Assignments, the sup pseudometric, and the consistency radius."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spaces as sp
from .errors import SheafMismatch, SpaceMismatch
from .sheaf import Sheaf
from .topology import OpenSet, comparable_pairs

EPS_SLACK = 1e-12


class Assignment:
    """Partial mapping from open sets to observations in their stalks."""

    def __init__(self, sheaf: Sheaf, values: dict | None = None):
        self.sheaf = sheaf
        self.values: dict[int, sp.Point] = {}
        for key, point in (values or {}).items():
            self.set(key, point)

    def set(self, u, point: sp.Point):
        oid = u.id if isinstance(u, OpenSet) else int(u)
        space = self.sheaf.stalk(oid)
        if point.space != space:
            raise SpaceMismatch(
                f"value for {self.sheaf.topology.opens[oid]} lies in "
                f"{point.space.describe()}, stalk is {space.describe()}"
            )
        self.values[oid] = point

    def get(self, u) -> sp.Point | None:
        oid = u.id if isinstance(u, OpenSet) else int(u)
        return self.values.get(oid)

    def defined_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class EdgeError:
    """Discrepancy along one inclusion, in the smaller stalk's metric."""

    smaller: OpenSet
    larger: OpenSet
    error: float

    def __str__(self):
        return f"{self.smaller} within {self.larger}: {self.error:.6g}"


@dataclass
class RadiusResult:
    radius: float
    edges: list[EdgeError] = field(default_factory=list)

    def dominant(self, count: int = 2) -> list[EdgeError]:
        return self.edges[:count]


def assignment_distance(a: Assignment, b: Assignment) -> float:
    """Sup over commonly defined opens of the stalk distance; 0 if none."""
    if a.sheaf is not b.sheaf:
        raise SheafMismatch("assignments belong to different sheaves")
    best = 0.0
    for oid, pa in a.values.items():
        pb = b.values.get(oid)
        if pb is None:
            continue
        d = sp.distance(a.sheaf.stalk(oid), pa, pb)
        if d > best:
            best = d
    return best


def consistency_radius(a: Assignment) -> RadiusResult:
    """Largest discrepancy d_V(a(V), a(U)|_V) over defined pairs V < U.

    The sup runs over all comparable pairs with both endpoints defined,
    using composed restrictions; pairs with an undefined endpoint are
    skipped.  Edges come back sorted by decreasing error.
    """
    sh = a.sheaf
    edges = []
    for small, large in comparable_pairs(sh.topology):
        pv = a.values.get(small.id)
        pu = a.values.get(large.id)
        if pv is None or pu is None:
            continue
        restricted = sh.restrict(large, small, pu)
        err = sp.distance(sh.stalk(small.id), pv, restricted)
        edges.append(EdgeError(small, large, err))
    edges.sort(key=lambda e: (-e.error, e.larger.id, e.smaller.id))
    radius = edges[0].error if edges else 0.0
    return RadiusResult(radius, edges)


def is_epsilon_approximate(a: Assignment, eps: float) -> bool:
    if eps < 0:
        raise ValueError("epsilon must be nonnegative")
    return consistency_radius(a).radius <= eps + EPS_SLACK


def pullback_global(sh: Sheaf, s_top: sp.Point) -> Assignment:
    """Total assignment obtained by restricting a global section everywhere."""
    top = sh.topology.full
    if s_top.space != sh.stalk(top.id):
        raise SpaceMismatch("section does not lie in the stalk over X")
    a = Assignment(sh)
    for u in sh.topology.opens:
        if u.mask == 0:
            continue
        if u.id == top.id:
            a.values[u.id] = s_top
        else:
            a.values[u.id] = sh.restrict(top, u, s_top)
    return a


def lipschitz_bound(sh: Sheaf) -> float:
    """Largest operator 2-norm over all composed linear restrictions."""
    sh.require_linear("lipschitz_bound")
    worst = 0.0
    for small, large in comparable_pairs(sh.topology):
        m = sh.restriction_matrix(large.id, small.id)
        if m.size:
            worst = max(worst, float(np.linalg.norm(m, 2)))
    return worst
