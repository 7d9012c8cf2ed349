"""Sheaf structure on a finite topology.

A sheaf is built by giving value spaces (stalks) to the generating
opens (the basis: subbase members and their intersections) and
restriction maps between comparable basis opens.  ``complete_unions``
then equips every remaining open with the pullback of its maximal basis
parts: tuples of part observations that agree on overlaps, with
projection restrictions.  For linear sheaves the pullback subspaces are
realized explicitly through orthonormal kernel bases.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from . import spaces as sp
from ._linalg import nullspace
from .errors import (
    MissingIntersectionStalk,
    NonlinearSheaf,
    NotComparable,
    SpaceMismatch,
)
from .topology import OpenSet, Topology

PULLBACK_TOL = 1e-6


# ---------------------------------------------------------------------------
# restriction map bodies

class Identity:
    def __call__(self, coords):
        return tuple(coords)

    def matrix(self, in_dim):
        return np.eye(in_dim)

    def describe(self):
        return "id"


class Projection:
    """Keep the listed coordinate positions, in order."""

    def __init__(self, indices):
        self.indices = tuple(int(i) for i in indices)

    def __call__(self, coords):
        return tuple(coords[i] for i in self.indices)

    def matrix(self, in_dim):
        m = np.zeros((len(self.indices), in_dim))
        for row, i in enumerate(self.indices):
            m[row, i] = 1.0
        return m

    def describe(self):
        return f"pr{list(self.indices)}"


class Linear:
    def __init__(self, matrix):
        self.mat = np.asarray(matrix, dtype=float)
        if self.mat.ndim != 2:
            raise ValueError("linear restriction needs a 2-d matrix")

    def __call__(self, coords):
        return tuple(self.mat @ np.asarray(coords, dtype=float))

    def matrix(self, in_dim):
        if self.mat.shape[1] != in_dim:
            raise SpaceMismatch(
                f"matrix expects dim {self.mat.shape[1]}, stalk has {in_dim}"
            )
        return self.mat

    def describe(self):
        return f"linear{self.mat.shape}"


class Affine:
    def __init__(self, matrix, offset):
        self.mat = np.asarray(matrix, dtype=float)
        self.offset = np.asarray(offset, dtype=float)

    def __call__(self, coords):
        return tuple(self.mat @ np.asarray(coords, dtype=float) + self.offset)

    def matrix(self, in_dim):
        return None

    def describe(self):
        return f"affine{self.mat.shape}"


class Builtin:
    """Named map from the registered catalog (e.g. scenario geometry)."""

    def __init__(self, name, fn, params=None):
        self.name = name
        self.fn = fn
        self.params = dict(params or {})

    def __call__(self, coords):
        return tuple(self.fn(coords))

    def matrix(self, in_dim):
        return None

    def describe(self):
        return self.name


class Chain:
    """Composite body; entries apply left to right."""

    def __init__(self, bodies):
        self.bodies = tuple(bodies)

    def __call__(self, coords):
        for b in self.bodies:
            coords = b(coords)
        return coords

    def matrix(self, in_dim):
        m = np.eye(in_dim)
        for b in self.bodies:
            step = b.matrix(m.shape[0])
            if step is None:
                return None
            m = step @ m
        return m

    def describe(self):
        return " ; ".join(b.describe() for b in self.bodies) or "id"


BUILTIN_CATALOG: dict = {}


def register_builtin(name, factory):
    """Register a factory(params) -> callable for JSON-spec restrictions."""
    BUILTIN_CATALOG[name] = factory


def resolve_builtin(name, params=None) -> Builtin:
    try:
        factory = BUILTIN_CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown builtin restriction {name!r}") from None
    return Builtin(name, factory(dict(params or {})), params)


@dataclass(frozen=True)
class RestrictionMap:
    source: OpenSet  # larger open
    target: OpenSet  # smaller open
    body: object

    def __call__(self, coords):
        return self.body(coords)


@dataclass(frozen=True)
class Pullback:
    """Decomposition of a union open into maximal basis parts."""

    parts: tuple[int, ...]
    offsets: tuple[int, ...]            # coordinate offset of each part
    dims: tuple[int, ...]
    constraints: tuple[tuple[int, int, int], ...]  # (part_a, part_b, inter_id)


class Sheaf:
    """Stalks plus restrictions; may be partial until complete_unions.

    Immutable once built; the internal memo caches only ever gain
    idempotent entries, so concurrent readers are safe.
    """

    def __init__(self, topology: Topology, stalks: dict, restrictions):
        """`stalks` maps OpenSet (or id) -> ValueSpace on basis opens;
        `restrictions` is an iterable of RestrictionMap between comparable
        basis opens (at least the covering pairs of the basis poset)."""
        self.topology = topology
        self.stalks: dict[int, sp.ValueSpace] = {}
        for key, space in stalks.items():
            oid = key.id if isinstance(key, OpenSet) else int(key)
            self.stalks[oid] = space
        self.edges: dict[tuple[int, int], RestrictionMap] = {}
        for rm in restrictions:
            if rm.target.mask & rm.source.mask != rm.target.mask:
                raise NotComparable(
                    f"restriction {rm.source}->{rm.target}: target is not "
                    f"a subset of source"
                )
            self.edges[(rm.source.id, rm.target.id)] = rm
        self.pullbacks: dict[int, Pullback] = {}
        self.complete = False
        self._basis_chain_cache: dict[tuple[int, int], Chain] = {}
        self._restrict_cache: dict[tuple[int, int], object] = {}
        self._kernel_cache: dict[int, np.ndarray] = {}
        self._matrix_cache: dict[tuple[int, int], np.ndarray] = {}

    # -- basic accessors ----------------------------------------------------

    def stalk(self, u) -> sp.ValueSpace:
        oid = u.id if isinstance(u, OpenSet) else int(u)
        try:
            return self.stalks[oid]
        except KeyError:
            raise MissingIntersectionStalk(
                f"no stalk on {self.topology.opens[oid]}"
            ) from None

    @property
    def basis_ids(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.topology.basis)

    def is_linear(self) -> bool:
        """All stalks vector-space valued and all restrictions linear maps."""
        for oid in self.basis_ids:
            space = self.stalks.get(oid)
            if space is None or not space.is_linear:
                return False
        for (src, _), rm in self.edges.items():
            if rm.body.matrix(self.stalks[src].dim) is None:
                return False
        return True

    def require_linear(self, what: str):
        if not self.is_linear():
            raise NonlinearSheaf(f"{what} requires a linear sheaf")

    # -- composition through the basis poset --------------------------------

    def _basis_chain(self, src: int, dst: int) -> Chain:
        """Composite restriction between comparable basis opens, found by
        breadth-first search through the provided restriction edges."""
        if src == dst:
            return Chain(())
        key = (src, dst)
        cached = self._basis_chain_cache.get(key)
        if cached is not None:
            return cached
        frontier = [(src, ())]
        seen = {src}
        while frontier:
            nxt = []
            for node, bodies in frontier:
                for (a, b), rm in self.edges.items():
                    if a != node or b in seen:
                        continue
                    chain = bodies + (rm.body,)
                    if b == dst:
                        result = Chain(chain)
                        self._basis_chain_cache[key] = result
                        return result
                    # only continue through opens that still contain dst
                    if self.topology.opens[dst].mask & self.topology.opens[b].mask \
                            == self.topology.opens[dst].mask:
                        seen.add(b)
                        nxt.append((b, chain))
            frontier = nxt
        raise NotComparable(
            f"no restriction path from {self.topology.opens[src]} to "
            f"{self.topology.opens[dst]}; check the sheaf specification"
        )

    # -- pullback layout -----------------------------------------------------

    def parts_of(self, oid: int) -> tuple[int, ...]:
        pb = self.pullbacks.get(oid)
        if pb is not None:
            return pb.parts
        return (oid,)

    def _layout(self, oid: int):
        """(parts, offsets, dims) of an open's coordinate tuple."""
        pb = self.pullbacks.get(oid)
        if pb is not None:
            return pb.parts, pb.offsets, pb.dims
        dim = self.stalk(oid).dim
        return (oid,), (0,), (dim,)

    # -- point-level restriction ---------------------------------------------

    def restrict_coords(self, src: int, dst: int, coords):
        if src == dst:
            return tuple(coords)
        key = (src, dst)
        plan = self._restrict_cache.get(key)
        if plan is None:
            plan = self._restrict_plan(src, dst)
            self._restrict_cache[key] = plan
        return plan(coords)

    def _restrict_plan(self, src: int, dst: int):
        t = self.topology
        small, big = t.opens[dst], t.opens[src]
        if small.mask & big.mask != small.mask:
            raise NotComparable(f"{small} is not contained in {big}")
        src_parts, src_offs, src_dims = self._layout(src)
        dst_parts, _, _ = self._layout(dst)
        steps = []
        for b_id in dst_parts:
            b_mask = t.opens[b_id].mask
            for part_id, off, dim in zip(src_parts, src_offs, src_dims):
                if b_mask & t.opens[part_id].mask == b_mask:
                    chain = self._basis_chain(part_id, b_id)
                    steps.append((off, off + dim, chain))
                    break
            else:
                raise NotComparable(
                    f"no part of {big} carries {t.opens[b_id]}"
                )

        def apply(coords, _steps=tuple(steps)):
            out = []
            for lo, hi, chain in _steps:
                out.extend(chain(coords[lo:hi]))
            return tuple(out)

        return apply

    def restrict(self, u, v, value: sp.Point) -> sp.Point:
        """Restrict an observation on U to the open subset V."""
        u_id = u.id if isinstance(u, OpenSet) else int(u)
        v_id = v.id if isinstance(v, OpenSet) else int(v)
        if value.space != self.stalk(u_id):
            raise SpaceMismatch("value does not lie in the stalk over U")
        coords = self.restrict_coords(u_id, v_id, value.coords)
        return sp.make_point(self.stalk(v_id), coords)

    def check_point(self, oid: int, point: sp.Point,
                    tol: float = PULLBACK_TOL) -> float:
        """Agreement residual of a pullback-stalk point (0 for basis opens)."""
        pb = self.pullbacks.get(oid)
        if pb is None:
            return 0.0
        worst = 0.0
        for a, b, inter in pb.constraints:
            ia = pb.parts.index(a)
            ib = pb.parts.index(b)
            pa = point.coords[pb.offsets[ia]:pb.offsets[ia] + pb.dims[ia]]
            xb = point.coords[pb.offsets[ib]:pb.offsets[ib] + pb.dims[ib]]
            ra = self._basis_chain(a, inter)(pa)
            rb = self._basis_chain(b, inter)(xb)
            space = self.stalk(inter)
            d = sp.distance(space, sp.make_point(space, ra),
                            sp.make_point(space, rb))
            worst = max(worst, d)
        if worst > tol:
            raise SpaceMismatch(
                f"pullback point on {self.topology.opens[oid]} violates "
                f"overlap agreement by {worst:g}"
            )
        return worst

    # -- linear representation ----------------------------------------------

    def kernel_basis(self, oid: int) -> np.ndarray:
        """Orthonormal basis of the stalk subspace in ambient coordinates."""
        cached = self._kernel_cache.get(oid)
        if cached is not None:
            return cached
        pb = self.pullbacks.get(oid)
        if pb is None:
            k = np.eye(self.stalk(oid).dim)
        else:
            amb = sum(pb.dims)
            rows = []
            for a, b, inter in pb.constraints:
                ia, ib = pb.parts.index(a), pb.parts.index(b)
                ma = self._basis_chain(a, inter).matrix(pb.dims[ia])
                mb = self._basis_chain(b, inter).matrix(pb.dims[ib])
                if ma is None or mb is None:
                    raise NonlinearSheaf(
                        "kernel basis requires linear restrictions"
                    )
                row = np.zeros((ma.shape[0], amb))
                row[:, pb.offsets[ia]:pb.offsets[ia] + pb.dims[ia]] = ma
                row[:, pb.offsets[ib]:pb.offsets[ib] + pb.dims[ib]] -= mb
                rows.append(row)
            if rows:
                k = nullspace(np.vstack(rows))
            else:
                k = np.eye(amb)
        self._kernel_cache[oid] = k
        return k

    def dim(self, oid: int) -> int:
        """Linear dimension of a stalk (pullbacks: subspace dimension)."""
        if oid in self.pullbacks:
            return self.kernel_basis(oid).shape[1]
        return self.stalk(oid).dim

    def ambient_matrix(self, src: int, dst: int) -> np.ndarray:
        """Restriction as a matrix between ambient coordinate tuples."""
        t = self.topology
        src_parts, src_offs, src_dims = self._layout(src)
        dst_parts, dst_offs, dst_dims = self._layout(dst)
        amb_src = sum(src_dims)
        amb_dst = sum(dst_dims)
        m = np.zeros((amb_dst, amb_src))
        for b_id, b_off, b_dim in zip(dst_parts, dst_offs, dst_dims):
            b_mask = t.opens[b_id].mask
            for part_id, off, dim in zip(src_parts, src_offs, src_dims):
                if b_mask & t.opens[part_id].mask == b_mask:
                    block = self._basis_chain(part_id, b_id).matrix(dim)
                    if block is None:
                        raise NonlinearSheaf(
                            "matrix restriction requires linear maps"
                        )
                    m[b_off:b_off + b_dim, off:off + dim] = block
                    break
            else:
                raise NotComparable(
                    f"no part of {t.opens[src]} carries {t.opens[b_id]}"
                )
        return m

    def restriction_matrix(self, src: int, dst: int) -> np.ndarray:
        """Restriction in subspace coordinates (kernel bases on both ends)."""
        key = (src, dst)
        cached = self._matrix_cache.get(key)
        if cached is None:
            amb = self.ambient_matrix(src, dst)
            cached = self.kernel_basis(dst).T @ amb @ self.kernel_basis(src)
            self._matrix_cache[key] = cached
        return cached

    # -- sampling -------------------------------------------------------------

    def sample_stalk(self, oid: int, rng) -> sp.Point | None:
        """Random valid point of a stalk, or None when not supported."""
        if oid not in self.pullbacks:
            return sp.sample_point(self.stalk(oid), rng)
        pb = self.pullbacks[oid]
        if not pb.constraints:
            return sp.sample_point(self.stalk(oid), rng)
        try:
            k = self.kernel_basis(oid)
        except NonlinearSheaf:
            top = self.topology.full.id
            if top != oid and top not in self.pullbacks:
                p = sp.sample_point(self.stalk(top), rng)
                coords = self.restrict_coords(top, oid, p.coords)
                return sp.make_point(self.stalk(oid), coords)
            return None
        z = np.array([rng.gauss(0.0, 10.0) for _ in range(k.shape[1])])
        return sp.make_point(self.stalk(oid), tuple(k @ z))


def complete_unions(sh: Sheaf) -> Sheaf:
    """Equip every non-basis open with the pullback of its maximal basis
    parts and return the completed sheaf.

    Single-part unions reuse the part's stalk directly; disjoint parts
    yield a plain product; overlapping parts record agreement
    constraints on their pairwise intersections.
    """
    t = sh.topology
    basis_set = set(b.id for b in t.basis)
    missing = [
        t.opens[oid] for oid in sorted(basis_set) if oid not in sh.stalks
    ]
    if missing:
        raise MissingIntersectionStalk(
            "no stalk on basis opens: " + ", ".join(map(str, missing))
        )

    out = Sheaf(t, {}, [])
    out.stalks = dict(sh.stalks)
    out.edges = dict(sh.edges)
    out.stalks.setdefault(t.empty.id, sp.euclidean(0))

    basis_masks = [(b.id, b.mask) for b in t.basis]
    for u in t.opens:
        if u.id in basis_set or u.mask == 0:
            continue
        inside = [(oid, m) for oid, m in basis_masks if m & u.mask == m]
        parts = [
            oid for oid, m in inside
            if not any(m != m2 and m & m2 == m for _, m2 in inside)
        ]
        parts.sort()
        if u.id in sh.stalks:
            # user supplied an explicit stalk for this union; keep it native
            continue
        dims = tuple(sh.stalks[p].dim for p in parts)
        offsets = tuple(int(x) for x in np.cumsum((0,) + dims[:-1]))
        constraints = []
        for i, a in enumerate(parts):
            for b in parts[i + 1:]:
                inter_mask = t.opens[a].mask & t.opens[b].mask
                if inter_mask:
                    inter = t.find(inter_mask)
                    if inter is None or inter.id not in sh.stalks:
                        raise MissingIntersectionStalk(
                            f"intersection of {t.opens[a]} and {t.opens[b]} "
                            f"has no stalk"
                        )
                    constraints.append((a, b, inter.id))
        if len(parts) == 1:
            out.stalks[u.id] = sh.stalks[parts[0]]
            out.pullbacks[u.id] = Pullback(tuple(parts), (0,), dims, ())
        else:
            out.stalks[u.id] = sp.product([sh.stalks[p] for p in parts])
            out.pullbacks[u.id] = Pullback(
                tuple(parts), offsets, dims, tuple(constraints)
            )
    out.complete = True
    return out


# ---------------------------------------------------------------------------
# axiom checkers

@dataclass
class FunctorialityReport:
    ok: bool
    max_discrepancy: float
    checked_pairs: int
    witnesses: list = field(default_factory=list)

    def __str__(self):
        status = "ok" if self.ok else "FAILED"
        lines = [
            f"functoriality: {status} "
            f"(max path discrepancy {self.max_discrepancy:.3g} over "
            f"{self.checked_pairs} diamond pairs)"
        ]
        for w in self.witnesses[:8]:
            lines.append(f"  - {w}")
        return "\n".join(lines)


def _hasse_paths(t: Topology, src: int, dst: int, cap: int):
    """Up to `cap` distinct Hasse-edge paths from src down to dst."""
    paths = []

    def walk(node, acc):
        if len(paths) >= cap:
            return
        if node == dst:
            paths.append(tuple(acc))
            return
        for child in t.hasse_children[node]:
            cm = t.opens[child].mask
            if cm & t.opens[dst].mask == t.opens[dst].mask:
                walk(child, acc + [child])

    walk(src, [])
    return paths


def verify_functoriality(sh: Sheaf, samples: int = 64, rng=None,
                         tol: float = 1e-9,
                         max_paths: int = 6) -> FunctorialityReport:
    """Sample-based path-independence check over every diamond.

    For each comparable pair with at least two Hasse paths, random valid
    points are pushed along each path; the report carries the worst
    stalk-metric discrepancy and a witness per failing pair.
    """
    rng = rng or random.Random(2024)
    t = sh.topology
    worst = 0.0
    checked = 0
    witnesses = []
    for u in t.opens:
        if u.mask == 0:
            continue
        for v_id in t.descendants[u.id]:
            if t.opens[v_id].mask == 0:
                continue
            paths = _hasse_paths(t, u.id, v_id, max_paths)
            if len(paths) < 2:
                continue
            checked += 1
            pair_worst = 0.0
            for _ in range(samples):
                start = sh.sample_stalk(u.id, rng)
                if start is None:
                    break
                results = []
                for path in paths:
                    coords = start.coords
                    node = u.id
                    for step in path:
                        coords = sh.restrict_coords(node, step, coords)
                        node = step
                    results.append(coords)
                space = sh.stalk(v_id)
                base = sp.make_point(space, results[0])
                for other in results[1:]:
                    d = sp.distance(space, base, sp.make_point(space, other))
                    pair_worst = max(pair_worst, d)
            worst = max(worst, pair_worst)
            if pair_worst > tol:
                witnesses.append(
                    f"paths {t.opens[u.id]} -> {t.opens[v_id]} disagree "
                    f"by {pair_worst:.3g}"
                )
    return FunctorialityReport(worst <= tol, worst, checked, witnesses)


@dataclass
class GluingReport:
    ok: bool
    failures: list = field(default_factory=list)
    checked_pairs: int = 0

    def __str__(self):
        if self.ok:
            return f"gluing: ok ({self.checked_pairs} pairs)"
        lines = [f"gluing: FAILED ({len(self.failures)} of "
                 f"{self.checked_pairs} pairs)"]
        lines += [f"  - {f}" for f in self.failures[:8]]
        return "\n".join(lines)


def verify_gluing(sh: Sheaf) -> GluingReport:
    """Rank-based existence and uniqueness check for linear sheaves.

    For every pair of nonempty opens U, V the joint restriction out of
    S(U v V) must surject onto the subspace of (x, y) agreeing on
    U ^ V (existence) and be injective (uniqueness).
    """
    from ._linalg import numeric_rank

    sh.require_linear("verify_gluing")
    t = sh.topology
    failures = []
    checked = 0
    nonempty = [o for o in t.opens if o.mask]
    for i, u in enumerate(nonempty):
        for v in nonempty[i + 1:]:
            w = t.find(u.mask | v.mask)
            inter = t.find(u.mask & v.mask)
            if w is None:
                continue
            checked += 1
            ru = sh.restriction_matrix(w.id, u.id)
            rv = sh.restriction_matrix(w.id, v.id)
            joint = np.vstack([ru, rv])
            du, dv, dw = sh.dim(u.id), sh.dim(v.id), sh.dim(w.id)
            if inter is not None and inter.mask:
                a = sh.restriction_matrix(u.id, inter.id)
                b = sh.restriction_matrix(v.id, inter.id)
                agree_dim = du + dv - numeric_rank(np.hstack([a, -b]))
            else:
                agree_dim = du + dv
            rank_joint = numeric_rank(joint)
            if rank_joint < agree_dim:
                failures.append(
                    f"existence fails for {u} and {v}: joint image has "
                    f"dimension {rank_joint}, agreement space {agree_dim}"
                )
            if rank_joint < dw:
                failures.append(
                    f"uniqueness fails for {u} and {v}: restriction out of "
                    f"{w} has kernel of dimension {dw - rank_joint}"
                )
    return GluingReport(not failures, failures, checked)
