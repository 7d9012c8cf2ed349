"""Cech cochain complexes, Betti numbers, Leray cover verification,
and stochastic lifting of nonlinear maps into column-stochastic ones."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import spaces as sp
from ._linalg import numeric_rank, nullspace
from .errors import IntersectionNotOpen, UnmappedBin
from .sheaf import Linear, RestrictionMap, Sheaf, complete_unions
from .topology import OpenSet, Topology

DD_TOL = 1e-10


@dataclass(frozen=True)
class Cover:
    """An ordered family of opens from one topology whose union is the
    relevant total space."""

    sets: tuple[OpenSet, ...]

    def __post_init__(self):
        if not self.sets:
            raise ValueError("cover must be nonempty")

    def union_mask(self) -> int:
        m = 0
        for o in self.sets:
            m |= o.mask
        return m


def full_cover(t: Topology) -> Cover:
    """Every nonempty open, the canonical cover of the whole topology."""
    return Cover(tuple(o for o in t.opens if o.mask))


@dataclass
class CochainComplex:
    degrees: list[list[tuple[tuple[int, ...], int, int]]]
    # per degree: (index tuple, open id of the intersection, stalk dim)
    coboundaries: list[np.ndarray]   # d^k : C^k -> C^(k+1)

    def dim(self, k: int) -> int:
        if k < 0 or k >= len(self.degrees):
            return 0
        return sum(d for _, _, d in self.degrees[k])


@dataclass
class BettiTable:
    dims: list[int]
    ranks: list[int]
    betti: list[int]

    def __str__(self):
        rows = ["k   dim C^k   rank d^k   betti_k"]
        for k, (c, r, b) in enumerate(zip(self.dims, self.ranks, self.betti)):
            rows.append(f"{k:<4}{c:<10}{r:<11}{b}")
        return "\n".join(rows)

    def as_dict(self):
        return {"dims": self.dims, "ranks": self.ranks, "betti": self.betti}


def _intersection_open(sh: Sheaf, cover: Cover, idx: tuple[int, ...]):
    mask = cover.sets[idx[0]].mask
    for i in idx[1:]:
        mask &= cover.sets[i].mask
    if mask == 0:
        return None
    u = sh.topology.find(mask)
    if u is None:
        names = ", ".join(str(cover.sets[i]) for i in idx)
        raise IntersectionNotOpen(
            f"intersection of {names} is not an open set"
        )
    return u


def build_complex(sh: Sheaf, cover: Cover, max_degree: int) -> CochainComplex:
    """Cochain spaces over (k+1)-fold cover intersections and the signed
    block coboundary matrices between them."""
    sh.require_linear("build_complex")
    n = len(cover.sets)
    degrees = []
    for k in range(max_degree + 2):
        layer = []
        for idx in itertools.combinations(range(n), k + 1):
            u = _intersection_open(sh, cover, idx)
            if u is None:
                continue
            layer.append((idx, u.id, sh.dim(u.id)))
        degrees.append(layer)

    offsets = []
    for layer in degrees:
        offs = {}
        pos = 0
        for idx, oid, d in layer:
            offs[idx] = (pos, oid, d)
            pos += d
        offsets.append((offs, pos))

    coboundaries = []
    for k in range(max_degree + 1):
        src_offs, src_dim = offsets[k]
        dst_offs, dst_dim = offsets[k + 1]
        d = np.zeros((dst_dim, src_dim))
        for idx, (dst_pos, dst_oid, dst_d) in dst_offs.items():
            for j in range(len(idx)):
                sub = idx[:j] + idx[j + 1:]
                if sub not in src_offs:
                    continue
                src_pos, src_oid, src_d = src_offs[sub]
                block = sh.restriction_matrix(src_oid, dst_oid)
                sign = -1.0 if j % 2 else 1.0
                d[dst_pos:dst_pos + dst_d, src_pos:src_pos + src_d] = \
                    sign * block
        coboundaries.append(d)
    return CochainComplex(degrees[:max_degree + 2], coboundaries)


def betti(sh: Sheaf, cover: Cover, max_degree: int) -> BettiTable:
    """Betti numbers dim ker d^k - rank d^(k-1) up to max_degree."""
    cx = build_complex(sh, cover, max_degree)
    dims = [cx.dim(k) for k in range(max_degree + 1)]
    ranks = [numeric_rank(cx.coboundaries[k]) for k in range(max_degree + 1)]
    out = []
    for k in range(max_degree + 1):
        prev = ranks[k - 1] if k > 0 else 0
        out.append(dims[k] - ranks[k] - prev)
    return BettiTable(dims, ranks, out)


def global_sections_via_h0(sh: Sheaf) -> np.ndarray:
    """Basis of the space of global sections as kernel of d^0 over the
    full-topology cover; columns are cochain coordinate vectors."""
    sh.require_linear("global_sections_via_h0")
    cx = build_complex(sh, full_cover(sh.topology), 0)
    return nullspace(cx.coboundaries[0])


def _minimal_open_poset(sh: Sheaf):
    """Distinct minimal open neighborhoods of the entities, the
    specialization poset of the finite space."""
    t = sh.topology
    nodes = []
    seen = set()
    for i in range(len(t.universe)):
        bit = 1 << i
        mask = None
        for o in t.opens:
            if o.mask & bit:
                mask = o.mask if mask is None else mask & o.mask
        if mask is None:
            continue
        u = t.find(mask)
        if u is None:
            raise IntersectionNotOpen(
                "minimal neighborhoods must be open; the topology is not "
                "intersection-closed"
            )
        if u.id not in seen:
            seen.add(u.id)
            nodes.append(u.id)
    nodes.sort(key=lambda oid: (-t.opens[oid].size, oid))
    return nodes


def topology_betti(sh: Sheaf, max_degree: int) -> BettiTable:
    """Betti numbers of the whole finite space.

    Computed as derived limits of the stalk diagram over the
    specialization poset (chains of strictly nested minimal open
    neighborhoods), which agrees with cover-level tables exactly when a
    cover satisfies the acyclicity hypothesis of the nerve theorem.
    """
    sh.require_linear("topology_betti")
    t = sh.topology
    nodes = _minimal_open_poset(sh)
    below = {
        n: [m for m in nodes
            if m != n and t.opens[m].mask & t.opens[n].mask == t.opens[m].mask]
        for n in nodes
    }
    chains: list[list[tuple[int, ...]]] = [[(n,) for n in nodes]]
    for _ in range(max_degree + 1):
        layer = []
        for ch in chains[-1]:
            for m in below[ch[-1]]:
                layer.append(ch + (m,))
        chains.append(layer)

    def layout(layer):
        offs = {}
        pos = 0
        for ch in layer:
            d = sh.dim(ch[-1])
            offs[ch] = (pos, d)
            pos += d
        return offs, pos

    layouts = [layout(layer) for layer in chains]
    dims = [total for _, total in layouts[:max_degree + 1]]
    ranks = []
    for n in range(max_degree + 1):
        src_offs, src_dim = layouts[n]
        dst_offs, dst_dim = layouts[n + 1]
        d = np.zeros((dst_dim, src_dim))
        for ch, (pos, dim) in dst_offs.items():
            for i in range(len(ch) - 1):
                sub = ch[:i] + ch[i + 1:]
                spos, sdim = src_offs[sub]
                sign = -1.0 if i % 2 else 1.0
                d[pos:pos + dim, spos:spos + sdim] += sign * np.eye(dim)
            sub = ch[:-1]
            spos, sdim = src_offs[sub]
            block = sh.restriction_matrix(ch[-2], ch[-1])
            sign = -1.0 if (len(ch) - 1) % 2 else 1.0
            d[pos:pos + dim, spos:spos + sdim] += sign * block
        ranks.append(numeric_rank(d))
    out = []
    for k in range(max_degree + 1):
        prev = ranks[k - 1] if k > 0 else 0
        out.append(dims[k] - ranks[k] - prev)
    return BettiTable(dims, ranks, out)


@dataclass
class LerayReport:
    acyclic: dict = field(default_factory=dict)   # intersection key -> bool
    verdict: bool = False
    cover_betti: BettiTable | None = None
    topology_betti: BettiTable | None = None
    tables_equal: bool | None = None
    witnesses: list = field(default_factory=list)

    def __str__(self):
        lines = []
        for key, ok in self.acyclic.items():
            lines.append(f"  {key}: {'acyclic' if ok else 'NOT acyclic'}")
        lines.append(f"verdict: {'pass' if self.verdict else 'fail'}")
        if self.verdict and self.cover_betti and self.topology_betti:
            lines.append(
                f"cover betti {self.cover_betti.betti} == "
                f"topology betti {self.topology_betti.betti}: "
                f"{self.tables_equal}"
            )
        for w in self.witnesses[:6]:
            lines.append(f"  witness: {w}")
        return "\n".join(lines)


def restrict_sheaf(sh: Sheaf, top_mask: int) -> Sheaf:
    """The sheaf induced on the subtopology of opens inside ``top_mask``.

    The subtopology lives on a universe containing only the entities of
    ``top_mask``, so its whole space is the restricted set itself.
    """
    from .topology import EntityUniverse

    t = sh.topology
    sub_universe = EntityUniverse(t.universe.names_of(top_mask))

    def translate(mask: int) -> int:
        return sub_universe.mask_of(t.universe.names_of(mask))

    masks = [translate(o.mask) for o in t.opens
             if o.mask & top_mask == o.mask]
    basis_masks = [translate(b.mask) for b in t.basis
                   if b.mask & top_mask == b.mask]
    sub = Topology(sub_universe, masks, basis_masks)
    back = {translate(o.mask): o.id for o in t.opens
            if o.mask & top_mask == o.mask}
    stalks = {b.id: sh.stalk(back[b.mask]) for b in sub.basis}
    edges = []
    for (src, dst), rm in sh.edges.items():
        sm, dm = t.opens[src].mask, t.opens[dst].mask
        if sm & top_mask == sm and dm & top_mask == dm:
            edges.append(RestrictionMap(
                sub.find(translate(sm)), sub.find(translate(dm)), rm.body
            ))
    return complete_unions(Sheaf(sub, stalks, edges))


def leray_check(sh: Sheaf, cover: Cover, max_degree: int) -> LerayReport:
    """Check the acyclicity hypothesis on every nonempty intersection of
    cover elements; when it holds, certify that cover-level and
    topology-level Betti tables agree."""
    sh.require_linear("leray_check")
    t = sh.topology
    report = LerayReport()
    n = len(cover.sets)
    seen_masks = set()
    all_ok = True
    for r in range(1, n + 1):
        for idx in itertools.combinations(range(n), r):
            mask = cover.sets[idx[0]].mask
            for i in idx[1:]:
                mask &= cover.sets[i].mask
            if mask == 0 or mask in seen_masks:
                continue
            seen_masks.add(mask)
            u = t.find(mask)
            if u is None:
                raise IntersectionNotOpen(
                    "cover intersections must be open for the Leray check"
                )
            sub_sheaf = restrict_sheaf(sh, mask)
            table = topology_betti(sub_sheaf, max_degree)
            ok = all(b == 0 for b in table.betti[1:])
            key = str(u)
            report.acyclic[key] = ok
            if not ok:
                all_ok = False
                bad = [k for k in range(1, len(table.betti))
                       if table.betti[k] != 0]
                report.witnesses.append(
                    f"{key} has nonzero betti at degrees {bad}: "
                    f"{table.betti}"
                )
    report.verdict = all_ok
    if all_ok:
        report.cover_betti = betti(sh, cover, max_degree)
        report.topology_betti = topology_betti(sh, max_degree)
        report.tables_equal = (
            report.cover_betti.betti == report.topology_betti.betti
        )
    return report


# ---------------------------------------------------------------------------
# stochastic lifts

@dataclass(frozen=True)
class BinGrid:
    """Axis-aligned binning of a box in R^d."""

    edges: tuple[tuple[float, ...], ...]   # per axis, length bins+1

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(e) - 1 for e in self.edges)

    @property
    def size(self) -> int:
        n = 1
        for s in self.shape:
            n *= s
        return n

    def centers(self, subdivisions: int = 1):
        """Representative points per cell: the midpoints of a regular
        subdivision, yielding (cell_index, point) pairs."""
        axes = []
        for edge in self.edges:
            pts = []
            for i in range(len(edge) - 1):
                lo, hi = edge[i], edge[i + 1]
                step = (hi - lo) / subdivisions
                pts.append([lo + (j + 0.5) * step
                            for j in range(subdivisions)])
            axes.append(pts)
        shape = self.shape
        for cell in itertools.product(*(range(s) for s in shape)):
            for combo in itertools.product(
                *(axes[ax][cell[ax]] for ax in range(len(shape)))
            ):
                yield cell, combo

    def locate(self, point) -> tuple[int, ...] | None:
        cell = []
        for ax, edge in enumerate(self.edges):
            v = point[ax]
            if v < edge[0] or v > edge[-1]:
                return None
            # rightmost bin is closed on both sides
            i = int(np.searchsorted(edge, v, side="right")) - 1
            cell.append(min(max(i, 0), len(edge) - 2))
        return tuple(cell)

    def flat(self, cell: tuple[int, ...]) -> int:
        idx = 0
        for c, s in zip(cell, self.shape):
            idx = idx * s + c
        return idx


def uniform_grid(lows, highs, bins: int) -> BinGrid:
    edges = []
    for lo, hi in zip(lows, highs):
        step = (hi - lo) / bins
        edges.append(tuple(lo + i * step for i in range(bins + 1)))
    return BinGrid(tuple(edges))


def stochastic_lift(f, bins_domain, bins_codomain,
                    subdivisions: int = 3) -> np.ndarray:
    """Column-stochastic matrix of a map between binned spaces.

    ``bins_domain``/``bins_codomain`` are either integers (f maps bin
    indices to bin indices) or BinGrid instances (f maps points to
    points; each domain cell is subdivided and the image mass
    histogrammed).  Column i holds the mass fractions of domain bin i
    landing in each codomain bin.
    """
    if isinstance(bins_domain, int) and isinstance(bins_codomain, int):
        m = np.zeros((bins_codomain, bins_domain))
        for i in range(bins_domain):
            j = f(i)
            if not isinstance(j, (int, np.integer)) or not \
                    0 <= j < bins_codomain:
                raise UnmappedBin(f"bin {i} maps outside the codomain: {j!r}")
            m[j, i] = 1.0
        return m
    if not isinstance(bins_domain, BinGrid) or \
            not isinstance(bins_codomain, BinGrid):
        raise TypeError("bins must both be ints or both BinGrid")
    m = np.zeros((bins_codomain.size, bins_domain.size))
    counts = np.zeros(bins_domain.size)
    for cell, point in bins_domain.centers(subdivisions):
        i = bins_domain.flat(cell)
        image = f(point)
        out_cell = bins_codomain.locate(image)
        if out_cell is None:
            raise UnmappedBin(
                f"image {tuple(image)} of sample in domain bin {cell} lies "
                f"outside the codomain grid"
            )
        m[bins_codomain.flat(out_cell), i] += 1.0
        counts[i] += 1.0
    return m / counts


def lift_sheaf(sh: Sheaf, grids: dict, subdivisions: int = 3,
               max_stalk_bins: int = 20000) -> Sheaf:
    """Linearize a sheaf by replacing each basis stalk with probability
    distributions over a grid and each restriction with its stochastic
    lift.

    ``grids`` maps basis open ids to BinGrid instances matching the
    stalk dimensions.
    """
    t = sh.topology
    stalks = {}
    for b in t.basis:
        grid = grids.get(b.id)
        if grid is None:
            raise UnmappedBin(f"no bin grid given for basis open {b}")
        if len(grid.shape) != sh.stalk(b.id).dim:
            raise UnmappedBin(
                f"grid for {b} has {len(grid.shape)} axes, stalk has "
                f"dimension {sh.stalk(b.id).dim}"
            )
        if grid.size > max_stalk_bins:
            raise UnmappedBin(
                f"lift of {b} needs {grid.size} bins "
                f"(cap {max_stalk_bins}); use fewer bins per axis"
            )
        stalks[b.id] = sp.simplex(grid.size)
    edges = []
    for (src, dst), rm in sh.edges.items():
        matrix = stochastic_lift(
            rm.body, grids[src], grids[dst], subdivisions
        )
        edges.append(RestrictionMap(t.opens[src], t.opens[dst],
                                    Linear(matrix)))
    return complete_unions(Sheaf(t, stalks, edges))
