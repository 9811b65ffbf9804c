"""Corner-to-corner segment enumeration by beam tracing through unfoldings.

Each corner of the table (or of a surface presentation) spawns a beam that
covers its interior angle.  The beam is pushed through the copy it sits in;
corners strictly inside the beam are recorded as hits, and the beam splits
at those corners into one sub-beam per exit edge.  Crossing an edge reflects
the copy (billiards) or jumps to the glued copy by a translation (surfaces).
All beams that share a root are processed level by level with numpy, one
level per crossed edge.

Beam boundaries are corner directions, so a corner sitting exactly on a
boundary ray is a corner passage and is never a hit.  The root beam is
half-open: its counterclockwise-first ray runs along a side and the far end
of that side is reported as a zero-crossing boundary item, which makes each
direction at a cone point belong to exactly one root.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .errors import DegeneracyUnresolved, EmptySample, ExplosionGuard, InvalidPolygon
from .geometry import DEFAULT_PRECISION, Isometry, PlanarVec, PrecisionConfig, wedge
from .polygons import PolygonSpec, SurfaceSpec

DEFAULT_NODE_BUDGET = 10**8
ITEM_SCHEMA_VERSION = "ngon-billiards/items/1"


# ---------------------------------------------------------------------------
# public record types


@dataclass(frozen=True)
class DiagonalConventions:
    """How generalized diagonals are counted.

    ``oriented``: a diagonal and its reverse are two items.
    ``include_boundary``: the sides themselves count, once each, with
    combinatorial length 0.
    ``count_links``: an interior diagonal with b bounces has combinatorial
    length b + 1 (its number of straight links) instead of b.
    Segments through a corner are never counted.
    """

    oriented: bool = True
    include_boundary: bool = True
    count_links: bool = True

    def to_dict(self) -> dict:
        return {
            "oriented": self.oriented,
            "include_boundary": self.include_boundary,
            "count_links": self.count_links,
        }

    def length_of(self, bounce_count: int, is_boundary: bool) -> int:
        if is_boundary:
            return 0
        return bounce_count + (1 if self.count_links else 0)


CALIBRATED_CONVENTIONS = DiagonalConventions(True, True, True)


@dataclass(frozen=True)
class UnfoldNode:
    isometry: Isometry
    parent_edge: int | None
    depth: int


@dataclass(frozen=True)
class GeneralizedDiagonal:
    start_corner: int
    end_corner_image: tuple[UnfoldNode, int]
    bounce_word: tuple[str, ...]
    bounce_count: int
    holonomy: PlanarVec
    geometric_length: float
    is_boundary: bool = False

    @property
    def end_corner(self) -> int:
        return self.end_corner_image[1]

    def key(self) -> tuple:
        return (self.start_corner, self.bounce_word, self.end_corner)

    def reverse_key(self) -> tuple:
        return (self.end_corner, tuple(reversed(self.bounce_word)), self.start_corner)


@dataclass(frozen=True)
class SaddleConnection:
    holonomy: PlanarVec
    crossings_per_class: tuple[int, ...]
    length_geometric: float
    length_combinatorial: int
    length_regularized: float
    start: tuple[int, int]
    end: tuple[int, int]
    start_point: int
    end_point: int
    crossing_word: tuple[int, ...] = ()
    is_side: bool = False


@dataclass
class EnumerationStats:
    nodes: int = 0
    escalations: int = 0
    degenerate: int = 0
    roots: int = 0

    def merge(self, other: EnumerationStats) -> None:
        self.nodes += other.nodes
        self.escalations += other.escalations
        self.degenerate += other.degenerate
        self.roots += other.roots

    def to_dict(self) -> dict:
        return {"nodes": self.nodes, "escalations": self.escalations, "degenerate": self.degenerate, "roots": self.roots}


# ---------------------------------------------------------------------------
# the unfolding table


@dataclass(frozen=True)
class _Table:
    base: np.ndarray  # (copies, n, 2)
    translate: bool
    partner_copy: np.ndarray  # (copies, n)
    partner_edge: np.ndarray
    polygons: tuple[PolygonSpec, ...]

    @property
    def n(self) -> int:
        return self.base.shape[1]


def _billiard_table(P: PolygonSpec) -> _Table:
    if not P.is_strictly_convex():
        raise InvalidPolygon("the billiard enumerator handles strictly convex tables only")
    base = np.array([[p.as_tuple() for p in P.vertices]], dtype=float)
    idx = np.arange(P.n)[None, :]
    return _Table(base, False, np.zeros_like(idx), idx.copy(), (P,))


def _surface_table(S: SurfaceSpec) -> _Table:
    sizes = {P.n for P in S.copies}
    if len(sizes) != 1:
        raise InvalidPolygon("surface copies must have the same number of sides")
    for P in S.copies:
        if not P.is_strictly_convex():
            raise InvalidPolygon("surface copies must be strictly convex")
    n = sizes.pop()
    base = np.array([[p.as_tuple() for p in P.vertices] for P in S.copies], dtype=float)
    pc = np.zeros((len(S.copies), n), dtype=np.int64)
    pe = np.zeros((len(S.copies), n), dtype=np.int64)
    for c in range(len(S.copies)):
        for e in range(n):
            pc[c, e], pe[c, e] = S.partner(c, e)
    return _Table(base, True, pc, pe, S.copies)


# ---------------------------------------------------------------------------
# per-root tracing


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _norm(a: np.ndarray) -> np.ndarray:
    return np.sqrt(a[..., 0] ** 2 + a[..., 1] ** 2)


@dataclass
class _RootResult:
    copy: int
    corner: int
    hits_per_depth: np.ndarray
    boundary: np.ndarray | None  # holonomy of the side item, if within range
    # per hit: depth, end copy, end vertex, holonomy x, holonomy y
    depth: np.ndarray | None = None
    end_copy: np.ndarray | None = None
    end_vertex: np.ndarray | None = None
    hol: np.ndarray | None = None
    words: list[np.ndarray] | None = None  # words[i] are the exit edges of hit i
    stats: EnumerationStats = field(default_factory=EnumerationStats)


class _Tracer:
    """State and helpers for the beams of one root corner."""

    def __init__(self, table: _Table, copy: int, corner: int, config: PrecisionConfig):
        self.table = table
        self.copy = copy
        self.corner = corner
        self.config = config
        self.parents: list[np.ndarray] = []
        self.edges: list[np.ndarray] = []
        self.stats = EnumerationStats(roots=1)
        self._mp_base = None

    # -- precision escalation ------------------------------------------------

    def _mp_copies(self):
        if self._mp_base is None:
            digits = self.config.working_digits
            self._mp_base = [P.vertices_mp(digits) for P in self.table.polygons]
        return self._mp_base

    def _path(self, level: int, index: int, extra_edge: int | None = None) -> list[int]:
        out = []
        for d in range(level, 0, -1):
            out.append(int(self.edges[d - 1][index]))
            index = int(self.parents[d - 1][index])
        out.reverse()
        if extra_edge is not None:
            out.append(extra_edge)
        return out

    def _replay(self, path: list[int]):
        """Re-run the beam along ``path`` at working precision."""
        table = self.table
        n = table.n
        with mpmath.workdps(self.config.working_digits):
            base = self._mp_copies()
            copy = self.copy
            apex = base[copy][self.corner]
            V = [(x - apex[0], y - apex[1]) for x, y in base[copy]]
            lo, hi = V[(self.corner + 1) % n], V[(self.corner - 1) % n]
            entry, sign = None, 1

            def cr(a, b):
                return a[0] * b[1] - a[1] * b[0]

            for step, e in enumerate(path):
                a, b = V[e], V[(e + 1) % n]
                u, w = (a, b) if cr(a, b) > 0 else (b, a)
                if step == 0:
                    lo, hi = u, w
                else:
                    lo = u if cr(lo, u) > 0 else lo
                    hi = w if cr(w, hi) > 0 else hi
                if table.translate:
                    c2, e2 = int(table.partner_copy[copy, e]), int(table.partner_edge[copy, e])
                    tx, ty = b[0] - base[c2][e2][0], b[1] - base[c2][e2][1]
                    V = [(x + tx, y + ty) for x, y in base[c2]]
                    copy, entry = c2, e2
                else:
                    dx, dy = b[0] - a[0], b[1] - a[1]
                    length2 = dx * dx + dy * dy
                    out = []
                    for x, y in V:
                        rx, ry = x - a[0], y - a[1]
                        t = 2 * (rx * dx + ry * dy) / length2
                        out.append((a[0] + t * dx - rx, a[1] + t * dy - ry))
                    V = out
                    entry, sign = e, -sign
            return V, lo, hi, entry

    def _settle(self, margins_fn, path: list[int], float_margin: float) -> bool:
        """Decide a gray-band predicate by replay; True means strictly positive."""
        if not self.config.escalate:
            raise DegeneracyUnresolved(
                f"margin {float_margin:.3e} is inside the uncertainty band", margin=float_margin, path=tuple(path)
            )
        self.stats.escalations += 1
        with mpmath.workdps(self.config.working_digits):
            value = margins_fn(*self._replay(path))
            cutoff = mpmath.mpf(10) ** (-(self.config.working_digits * 3 // 5))
            if value > cutoff:
                return True
        self.stats.degenerate += 1
        return False

    # -- vectorized predicates -----------------------------------------------

    def _classify(self, rel: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split relative margins into (surely positive, needs escalation)."""
        eps_inc, eps_zero = self.config.epsilon_incidence, self.config.epsilon_zero
        return rel >= eps_inc, (rel >= eps_zero) & (rel < eps_inc)

    def run(self, max_depth: int | None, max_length: float, collect: int, node_budget: int) -> _RootResult:
        table, config = self.table, self.config
        n = table.n
        c, k = self.copy, self.corner
        depth_cap = max_depth if max_depth is not None else 10**9
        R = max_length

        V0 = table.base[c] - table.base[c, k]
        dist0 = _norm(V0)

        hits_per_depth = []
        items_depth, items_copy, items_vertex, items_hol, items_node = [], [], [], [], []

        boundary = V0[(k + 1) % n].copy() if dist0[(k + 1) % n] <= R else None

        others = np.array([j for j in range(n) if j not in (k, (k + 1) % n, (k - 1) % n)], dtype=np.int64)
        inside0 = others[dist0[others] <= R]
        hits_per_depth.append(len(inside0))
        if collect and len(inside0):
            items_depth.append(np.zeros(len(inside0), dtype=np.int64))
            items_copy.append(np.full(len(inside0), c, dtype=np.int64))
            items_vertex.append(inside0)
            items_hol.append(V0[inside0])
            items_node.append(np.zeros(len(inside0), dtype=np.int64))

        # root children: every edge not touching the apex
        child_edges = np.array([j for j in range(n) if j not in ((k - 1) % n, k)], dtype=np.int64)
        a, b = V0[child_edges], V0[(child_edges + 1) % n]
        keep = _segment_distance(a, b) <= R
        child_edges = child_edges[keep]
        F = len(child_edges)
        parent = np.zeros(F, dtype=np.int64)
        LO, HI = V0[child_edges], V0[(child_edges + 1) % n]
        Vp = np.broadcast_to(V0, (1, n, 2))
        CP = np.full(1, c, dtype=np.int64)
        S = np.ones(1)
        depth = 0
        idx = np.arange(n)[None, :]

        while F and depth < depth_cap:
            depth += 1
            # compact copies; only needed for replays and word reconstruction
            self.parents.append(parent.astype(np.int32))
            self.edges.append(child_edges.astype(np.int16))
            self.stats.nodes += F
            if self.stats.nodes > node_budget:
                raise ExplosionGuard(
                    f"node budget {node_budget} exceeded at depth {depth}",
                    partial=np.array(hits_per_depth),
                    nodes=self.stats.nodes,
                )
            V, E, CP, S = self._advance(Vp, CP, S, parent, child_edges)

            # hits
            nv = _norm(V)
            nlo, nhi = _norm(LO), _norm(HI)
            with np.errstate(invalid="ignore", divide="ignore"):
                rel_lo = _cross(LO[:, None, :], V) / (nlo[:, None] * nv)
                rel_hi = _cross(V, HI[:, None, :]) / (nv * nhi[:, None])
            on_entry = (idx == E[:, None]) | (idx == ((E[:, None] + 1) % n))
            eligible = ~on_entry & (nv <= R)
            sure_lo, gray_lo = self._classify(rel_lo)
            sure_hi, gray_hi = self._classify(rel_hi)
            inside = eligible & sure_lo & sure_hi
            gray = eligible & (sure_lo | gray_lo) & (sure_hi | gray_hi) & ~inside
            if gray.any():
                for node, vert in zip(*np.nonzero(gray)):
                    path = self._path(depth, int(node))
                    inside[node, vert] = self._settle(
                        _hit_margin(int(vert)), path, float(min(rel_lo[node, vert], rel_hi[node, vert]))
                    )
            hit_nodes, hit_verts = np.nonzero(inside)
            hits_per_depth.append(len(hit_nodes))
            if collect and len(hit_nodes):
                items_depth.append(np.full(len(hit_nodes), depth, dtype=np.int64))
                items_copy.append(CP[hit_nodes])
                items_vertex.append(hit_verts)
                items_hol.append(V[hit_nodes, hit_verts])
                items_node.append(hit_nodes)

            if depth >= depth_cap:
                break

            # children
            A = V
            B = np.roll(V, -1, axis=1)
            with np.errstate(invalid="ignore", divide="ignore"):
                facing = S[:, None] * _cross(B - A, -A) / (_norm(B - A) * nv)
            ok = (facing > config.epsilon_zero) & (idx != E[:, None])
            ok &= _segment_distance(A, B) <= R
            orient = _cross(A, B) > 0
            U = np.where(orient[..., None], A, B)
            W = np.where(orient[..., None], B, A)
            Lb = np.broadcast_to(LO[:, None, :], U.shape)
            Hb = np.broadcast_to(HI[:, None, :], U.shape)
            new_lo = np.where((_cross(Lb, U) > 0)[..., None], U, Lb)
            new_hi = np.where((_cross(W, Hb) > 0)[..., None], W, Hb)
            with np.errstate(invalid="ignore", divide="ignore"):
                width = _cross(new_lo, new_hi) / (_norm(new_lo) * _norm(new_hi))
            sure_w, gray_w = self._classify(width)
            grow = ok & sure_w
            gray = ok & gray_w
            if gray.any():
                for node, edge in zip(*np.nonzero(gray)):
                    path = self._path(depth, int(node), int(edge))
                    grow[node, edge] = self._settle(_width_margin, path, float(width[node, edge]))
            parent, child_edges = np.nonzero(grow)
            LO, HI = new_lo[parent, child_edges], new_hi[parent, child_edges]
            Vp = V
            F = len(parent)

        result = _RootResult(c, k, np.array(hits_per_depth, dtype=np.int64), boundary, stats=self.stats)
        if collect:
            if items_depth:
                result.depth = np.concatenate(items_depth)
                result.end_copy = np.concatenate(items_copy)
                result.end_vertex = np.concatenate(items_vertex)
                result.hol = np.concatenate(items_hol)
                nodes = np.concatenate(items_node)
            else:
                result.depth = np.zeros(0, dtype=np.int64)
                result.end_copy = np.zeros(0, dtype=np.int64)
                result.end_vertex = np.zeros(0, dtype=np.int64)
                result.hol = np.zeros((0, 2))
                nodes = np.zeros(0, dtype=np.int64)
            if collect >= 2:
                result.words = self._words(result.depth, nodes)
        return result

    def _advance(self, Vp, CP, S, parent, edges):
        table = self.table
        n = table.n
        rows = np.arange(len(parent))
        Vparent = Vp[parent]
        a = Vparent[rows, edges]
        b = Vparent[rows, (edges + 1) % n]
        if table.translate:
            cp = CP[parent]
            c2 = table.partner_copy[cp, edges]
            e2 = table.partner_edge[cp, edges]
            shift = b - table.base[c2, e2]
            V = table.base[c2] + shift[:, None, :]
            return V, e2, c2, np.ones(len(parent))
        d = b - a
        d = d / _norm(d)[:, None]
        rel = Vparent - a[:, None, :]
        proj = (rel * d[:, None, :]).sum(axis=2)
        V = a[:, None, :] + 2 * proj[..., None] * d[:, None, :] - rel
        return V, edges, CP[parent], -S[parent]

    def _words(self, depths: np.ndarray, nodes: np.ndarray) -> list[np.ndarray]:
        words: list[np.ndarray] = [None] * len(depths)  # type: ignore[list-item]
        for d in np.unique(depths):
            sel = np.nonzero(depths == d)[0]
            cols = np.zeros((len(sel), d), dtype=np.int64)
            cur = nodes[sel]
            for level in range(d, 0, -1):
                cols[:, level - 1] = self.edges[level - 1][cur]
                cur = self.parents[level - 1][cur]
            for i, row in zip(sel, cols):
                words[i] = row
        return words


def _hit_margin(vert: int):
    def margin(V, lo, hi, entry):
        v = V[vert]

        def rel(a, b):
            return (a[0] * b[1] - a[1] * b[0]) / (mpmath.sqrt(a[0] ** 2 + a[1] ** 2) * mpmath.sqrt(b[0] ** 2 + b[1] ** 2))

        return min(rel(lo, v), rel(v, hi))

    return margin


def _width_margin(V, lo, hi, entry):
    return (lo[0] * hi[1] - lo[1] * hi[0]) / (mpmath.sqrt(lo[0] ** 2 + lo[1] ** 2) * mpmath.sqrt(hi[0] ** 2 + hi[1] ** 2))


def _segment_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from the origin to each segment [a, b]."""
    d = b - a
    dd = (d * d).sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.clip(-(a * d).sum(axis=-1) / dd, 0.0, 1.0)
    closest = a + t[..., None] * d
    return _norm(closest)


def _trace_job(args) -> _RootResult:
    table, copy, corner, max_depth, max_length, config, collect, budget = args
    return _Tracer(table, copy, corner, config).run(max_depth, max_length, collect, budget)


def _run_roots(
    table: _Table,
    roots: Sequence[tuple[int, int]],
    max_depth: int | None,
    max_length: float,
    config: PrecisionConfig,
    collect: int,
    workers: int,
    node_budget: int,
) -> list[_RootResult]:
    jobs = [(table, c, k, max_depth, max_length, config, collect, node_budget) for c, k in roots]
    if workers <= 1 or len(jobs) <= 1:
        results = [_trace_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_trace_job, jobs))
    total = sum(r.stats.nodes for r in results)
    if total > node_budget:
        raise ExplosionGuard(f"node budget {node_budget} exceeded", nodes=total)
    return results


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))


# ---------------------------------------------------------------------------
# billiards


def _diagonal_results(P, max_bounces, config, collect, workers, node_budget):
    if max_bounces < 0:
        raise ValueError("max_bounces must be non-negative")
    table = _billiard_table(P)
    roots = [(0, k) for k in range(P.n)]
    return _run_roots(table, roots, max_bounces, math.inf, config, collect, workers, node_budget)


def diagonal_counts_by_bounces(
    P: PolygonSpec,
    max_bounces: int,
    config: PrecisionConfig = DEFAULT_PRECISION,
    workers: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> tuple[np.ndarray, int, EnumerationStats]:
    """Oriented interior generalized diagonals per bounce count (index 0..max)
    plus the number of sides; the fast path behind the counting functions."""
    results = _diagonal_results(P, max_bounces, config, 0, workers, node_budget)
    counts = np.zeros(max_bounces + 1, dtype=np.int64)
    stats = EnumerationStats()
    for r in results:
        counts[: len(r.hits_per_depth)] += r.hits_per_depth
        stats.merge(r.stats)
    return counts, P.n, stats


def _isometry_for_word(P: PolygonSpec, word: Sequence[int]) -> Isometry:
    iso = Isometry.identity()
    for e in word:
        a, b = P.vertices[e], P.vertices[(e + 1) % P.n]
        iso = iso.compose(Isometry.reflection(a, b))
    return iso


def enumerate_diagonals(
    P: PolygonSpec,
    max_bounces: int,
    conventions: DiagonalConventions = CALIBRATED_CONVENTIONS,
    config: PrecisionConfig = DEFAULT_PRECISION,
    workers: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> list[GeneralizedDiagonal]:
    """Every generalized diagonal with at most ``max_bounces`` bounces.

    Ordered by (bounce count, bounce word, start corner, end corner).  In
    unoriented mode a diagonal is kept in whichever of its two directions
    has the smaller (start, word, end) key.
    """
    results = _diagonal_results(P, max_bounces, config, 2, workers, node_budget)
    labels = P.side_labels
    n = P.n
    out: list[GeneralizedDiagonal] = []
    for r in results:
        k = r.corner
        if conventions.include_boundary and r.boundary is not None:
            hol = PlanarVec(*map(float, r.boundary))
            node = UnfoldNode(Isometry.identity(), None, 0)
            out.append(GeneralizedDiagonal(k, (node, (k + 1) % n), (), 0, hol, hol.norm(), True))
        for i in range(len(r.depth)):
            word = tuple(int(e) for e in r.words[i])
            hol = PlanarVec(float(r.hol[i, 0]), float(r.hol[i, 1]))
            iso = _isometry_for_word(P, word)
            node = UnfoldNode(iso, word[-1] if word else None, len(word))
            out.append(
                GeneralizedDiagonal(
                    k, (node, int(r.end_vertex[i])), tuple(labels[e] for e in word), len(word), hol, hol.norm()
                )
            )
    if not conventions.oriented:
        # sides are only ever produced in their counterclockwise direction
        out = [d for d in out if d.is_boundary or d.key() <= d.reverse_key()]
    out.sort(key=lambda d: (d.bounce_count, d.bounce_word, d.start_corner, d.end_corner))
    return out


# ---------------------------------------------------------------------------
# surfaces


def _surface_roots(S: SurfaceSpec) -> list[tuple[int, int]]:
    return [(c, k) for c, P in enumerate(S.copies) for k in range(P.n)]


def three_lengths(
    holonomy: PlanarVec, crossings_per_class: Sequence[int], S: SurfaceSpec
) -> tuple[float, int, float]:
    """(geometric, combinatorial, regularized) length at area one."""
    root_area = math.sqrt(S.area)
    geometric = holonomy.norm() / root_area
    combinatorial = int(sum(crossings_per_class))
    regularized = sum(abs(wedge(holonomy, cls.holonomy)) for cls in S.filling_system) / S.area
    return geometric, combinatorial, regularized


def _regularized_array(hol: np.ndarray, S: SurfaceSpec) -> np.ndarray:
    Z = np.array([cls.holonomy.as_tuple() for cls in S.filling_system])
    return np.abs(hol[:, None, 0] * Z[None, :, 1] - hol[:, None, 1] * Z[None, :, 0]).sum(axis=1) / S.area


def _surface_results(S, max_length, max_crossings, config, collect, workers, node_budget):
    table = _surface_table(S)
    native = math.inf if max_length is None else max_length * math.sqrt(S.area)
    return _run_roots(table, _surface_roots(S), max_crossings, native, config, collect, workers, node_budget)


def _upper_half(hol: PlanarVec, tol: float = 1e-9) -> bool:
    """Orientation representative: the direction in [0, π)."""
    if hol.y > tol * hol.norm():
        return True
    return abs(hol.y) <= tol * hol.norm() and hol.x > 0


def _build_connections(
    S: SurfaceSpec, results: list[_RootResult], include_sides: bool, oriented: bool
) -> list[SaddleConnection]:
    m = len(S.filling_system)
    out: list[SaddleConnection] = []
    for r in results:
        c, k = r.copy, r.corner
        start_point = S.point_of(c, k)
        n = S.copies[c].n
        if include_sides and r.boundary is not None:
            hol = PlanarVec(float(r.boundary[0]), float(r.boundary[1]))
            counts = (0,) * m
            g, comb, reg = three_lengths(hol, counts, S)
            end = (c, (k + 1) % n)
            out.append(SaddleConnection(hol, counts, g, comb, reg, (c, k), end, start_point, S.point_of(*end), (), True))
        for i in range(len(r.depth)):
            classes = []
            cur = c
            for e in r.words[i]:
                e = int(e)
                classes.append(S.class_of(cur, e))
                cur = S.partner(cur, e)[0]
            counts = [0] * m
            for cls in classes:
                counts[cls] += 1
            hol = PlanarVec(float(r.hol[i, 0]), float(r.hol[i, 1]))
            g, comb, reg = three_lengths(hol, counts, S)
            end = (int(r.end_copy[i]), int(r.end_vertex[i]))
            out.append(
                SaddleConnection(hol, tuple(counts), g, comb, reg, (c, k), end, start_point, S.point_of(*end), tuple(classes))
            )
    if not oriented:
        out = [sc for sc in out if _upper_half(sc.holonomy)]
    out.sort(key=lambda s: (s.length_combinatorial, s.start, s.crossing_word, s.end))
    return out


def enumerate_saddle_connections(
    S: SurfaceSpec,
    max_geometric_length: float,
    config: PrecisionConfig = DEFAULT_PRECISION,
    workers: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
    include_sides: bool = True,
    max_crossings: int | None = None,
    oriented: bool = False,
) -> list[SaddleConnection]:
    """Saddle connections with area-one length at most
    ``max_geometric_length`` (and at most ``max_crossings`` edge crossings,
    if given).

    Each saddle connection is reported once, in the orientation whose
    holonomy points into the upper half-plane (or along the positive x-axis);
    ``oriented=True`` reports both orientations.  ``include_sides`` controls
    whether the edges of the presentation themselves are reported.
    """
    if not max_geometric_length > 0:
        raise ValueError("max_geometric_length must be positive")
    results = _surface_results(S, max_geometric_length, max_crossings, config, 2, workers, node_budget)
    return _build_connections(S, results, include_sides, oriented)


def enumerate_saddle_connections_by_crossings(
    S: SurfaceSpec,
    max_crossings: int,
    config: PrecisionConfig = DEFAULT_PRECISION,
    workers: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
    include_sides: bool = True,
    oriented: bool = False,
) -> list[SaddleConnection]:
    if max_crossings < 0:
        raise ValueError("max_crossings must be non-negative")
    results = _surface_results(S, None, max_crossings, config, 2, workers, node_budget)
    return _build_connections(S, results, include_sides, oriented)


def surface_counts_by_crossings(
    S: SurfaceSpec,
    max_crossings: int,
    config: PrecisionConfig = DEFAULT_PRECISION,
    workers: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
    include_sides: bool = True,
    oriented: bool = False,
) -> tuple[np.ndarray, EnumerationStats]:
    """Saddle connections per exact combinatorial length 0..max_crossings."""
    results = _surface_results(S, None, max_crossings, config, 0, workers, node_budget)
    counts = np.zeros(max_crossings + 1, dtype=np.int64)
    stats = EnumerationStats()
    for r in results:
        counts[: len(r.hits_per_depth)] += r.hits_per_depth
        if include_sides and r.boundary is not None:
            counts[0] += 1
        stats.merge(r.stats)
    if not oriented:
        # reversal keeps the crossing count, so every length class pairs up
        if (counts % 2).any():
            raise AssertionError("oriented saddle connection counts must be even")
        counts //= 2
    return counts, stats


def surface_holonomies(
    S: SurfaceSpec,
    max_geometric_length: float,
    config: PrecisionConfig = DEFAULT_PRECISION,
    workers: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
    include_sides: bool = True,
    oriented: bool = False,
) -> tuple[np.ndarray, np.ndarray, EnumerationStats]:
    """Native holonomies and crossing counts of all saddle connections up to
    an area-one length, without building per-item records."""
    results = _surface_results(S, max_geometric_length, None, config, 1, workers, node_budget)
    hols, depths = [], []
    stats = EnumerationStats()
    for r in results:
        stats.merge(r.stats)
        if include_sides and r.boundary is not None:
            hols.append(r.boundary[None, :])
            depths.append(np.zeros(1, dtype=np.int64))
        hols.append(r.hol)
        depths.append(r.depth)
    hol, depth = np.concatenate(hols), np.concatenate(depths)
    if not oriented:
        length = _norm(hol)
        tol = 1e-9 * length
        keep = (hol[:, 1] > tol) | ((np.abs(hol[:, 1]) <= tol) & (hol[:, 0] > 0))
        hol, depth = hol[keep], depth[keep]
    return hol, depth, stats


def coarse_bound_K(sample: Iterable[SaddleConnection]) -> float:
    """Smallest K with ℓ_G/K ≤ ℓ_C, ℓ_R ≤ K·ℓ_G and the mirrored pair over the
    sample.  Items with ℓ_C = 0 (the edges and the chords inside one copy)
    cannot satisfy a lower bound on ℓ_C and are left out."""
    K = 1.0
    seen = False
    for sc in sample:
        if sc.length_combinatorial == 0:
            continue
        seen = True
        g, comb, reg = sc.length_geometric, sc.length_combinatorial, sc.length_regularized
        K = max(K, comb / g, reg / g, g / comb, g / reg)
    if not seen:
        raise EmptySample("coarse bound needs at least one saddle connection that crosses an edge")
    return K


def coarse_bound_ratios(g: float, comb: float, reg: float) -> float:
    return max(comb / g, reg / g, g / comb, g / reg)


# ---------------------------------------------------------------------------
# streaming output

DIAGONAL_FIELDS = (
    "start_corner",
    "end_corner",
    "bounce_count",
    "bounce_word",
    "holonomy_x",
    "holonomy_y",
    "geometric_length",
    "is_boundary",
)
SADDLE_FIELDS = (
    "start_copy",
    "start_corner",
    "end_copy",
    "end_corner",
    "start_point",
    "end_point",
    "holonomy_x",
    "holonomy_y",
    "length_geometric",
    "length_combinatorial",
    "length_regularized",
    "crossings_per_class",
    "crossing_word",
    "is_side",
)


def diagonal_record(d: GeneralizedDiagonal) -> dict:
    return {
        "start_corner": d.start_corner,
        "end_corner": d.end_corner,
        "bounce_count": d.bounce_count,
        "bounce_word": "".join(d.bounce_word) if all(len(s) == 1 for s in d.bounce_word) else " ".join(d.bounce_word),
        "holonomy_x": repr(d.holonomy.x),
        "holonomy_y": repr(d.holonomy.y),
        "geometric_length": repr(d.geometric_length),
        "is_boundary": d.is_boundary,
    }


def saddle_record(s: SaddleConnection) -> dict:
    return {
        "start_copy": s.start[0],
        "start_corner": s.start[1],
        "end_copy": s.end[0],
        "end_corner": s.end[1],
        "start_point": s.start_point,
        "end_point": s.end_point,
        "holonomy_x": repr(s.holonomy.x),
        "holonomy_y": repr(s.holonomy.y),
        "length_geometric": repr(s.length_geometric),
        "length_combinatorial": s.length_combinatorial,
        "length_regularized": repr(s.length_regularized),
        "crossings_per_class": " ".join(map(str, s.crossings_per_class)),
        "crossing_word": " ".join(map(str, s.crossing_word)),
        "is_side": s.is_side,
    }
