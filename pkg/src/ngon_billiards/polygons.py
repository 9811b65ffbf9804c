"""Labeled rational polygons, regular N-gons and the translation surfaces S_N.

Vertex coordinates are carried twice: as doubles for the fast paths and as
source expressions (``"cos(2*pi*3/8)"``) that can be re-evaluated at any
precision with mpmath when the enumerator needs to settle a near-degenerate
predicate.
"""

from __future__ import annotations

import ast
import json
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import lcm
from pathlib import Path

import mpmath

from .errors import InvalidN, InvalidPolygon, InvalidSurface, IrrationalAngle
from .geometry import PlanarVec, segment_crossing, wedge, CrossingKind

POLYGON_SCHEMA_VERSION = "ngon-billiards/polygon/1"

# ---------------------------------------------------------------------------
# exact-ish coordinate expressions

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = {
    "cos": mpmath.cos,
    "sin": mpmath.sin,
    "tan": mpmath.tan,
    "sqrt": mpmath.sqrt,
    "cospi": mpmath.cospi,
    "sinpi": mpmath.sinpi,
}


def _eval_node(node: ast.AST):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        # decimal literals are read from their text so "0.1" means one tenth
        return mpmath.mpf(repr(node.value)) if isinstance(node.value, float) else mpmath.mpf(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return +mpmath.pi
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        value = _eval_node(node.operand)
        return -value if isinstance(node.op, ast.USub) else value
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCS
        and len(node.args) == 1
        and not node.keywords
    ):
        return _FUNCS[node.func.id](_eval_node(node.args[0]))
    raise InvalidPolygon(f"unsupported expression element: {ast.dump(node)}")


def evaluate_expression(text: str, digits: int = 50) -> mpmath.mpf:
    """Evaluate a coordinate expression built from numbers, ``pi``, + - * / **,
    and cos/sin/tan/sqrt, at ``digits`` decimal digits."""
    try:
        tree = ast.parse(str(text), mode="eval")
    except SyntaxError as exc:
        raise InvalidPolygon(f"cannot parse coordinate expression {text!r}") from exc
    with mpmath.workdps(digits):
        return +_eval_node(tree)


@lru_cache(maxsize=4096)
def _expression_float(text: str) -> float:
    return float(evaluate_expression(text, 30))


# ---------------------------------------------------------------------------
# polygons


def _shoelace(points: list[PlanarVec]) -> float:
    n = len(points)
    return 0.5 * sum(wedge(points[i], points[(i + 1) % n]) for i in range(n))


@dataclass(frozen=True)
class PolygonSpec:
    vertices: tuple[PlanarVec, ...]
    side_labels: tuple[str, ...]
    angle_fractions: tuple[Fraction, ...] | None = None
    vertex_exprs: tuple[tuple[str, str], ...] | None = None
    name: str = "polygon"

    def __post_init__(self) -> None:
        n = len(self.vertices)
        if n < 3:
            raise InvalidPolygon("a polygon needs at least three vertices")
        if len(self.side_labels) != n or len(set(self.side_labels)) != n:
            raise InvalidPolygon("need one distinct label per side")
        if self.vertex_exprs is not None and len(self.vertex_exprs) != n:
            raise InvalidPolygon("vertex expressions do not match the vertex count")
        if _shoelace(list(self.vertices)) <= 0:
            raise InvalidPolygon("vertices must be listed counterclockwise")
        self._check_simple()
        if self.angle_fractions is not None:
            self._check_angles()

    def _check_simple(self) -> None:
        n = self.n
        edges = self.edges()
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if segment_crossing(edges[i], edges[j]) is not CrossingKind.NO_CROSS:
                    raise InvalidPolygon(f"sides {i} and {j} intersect")

    def _check_angles(self) -> None:
        fractions = self.angle_fractions
        if len(fractions) != self.n:
            raise InvalidPolygon("need one angle fraction per vertex")
        for f in fractions:
            if not (0 < f < 2):
                raise InvalidPolygon(f"angle fraction {f} outside (0, 2)")
        if sum(fractions) != self.n - 2:
            raise InvalidPolygon("angle fractions must sum to n - 2")
        for measured, declared in zip(self.interior_angles(), fractions):
            if abs(measured - math.pi * float(declared)) > 1e-7:
                raise InvalidPolygon(f"declared angle {declared}π disagrees with the vertex geometry")

    @property
    def n(self) -> int:
        return len(self.vertices)

    def edges(self) -> list[tuple[PlanarVec, PlanarVec]]:
        v = self.vertices
        return [(v[i], v[(i + 1) % self.n]) for i in range(self.n)]

    def side_vectors(self) -> list[PlanarVec]:
        return [b - a for a, b in self.edges()]

    @property
    def area(self) -> float:
        return _shoelace(list(self.vertices))

    def interior_angles(self) -> list[float]:
        out = []
        v = self.vertices
        for i in range(self.n):
            into = v[i] - v[i - 1]
            out_of = v[(i + 1) % self.n] - v[i]
            turn = math.atan2(wedge(into, out_of), into.dot(out_of))
            out.append(math.pi - turn)
        return out

    def is_strictly_convex(self) -> bool:
        sides = self.side_vectors()
        return all(wedge(sides[i - 1], sides[i]) > 0 for i in range(self.n))

    def vertices_mp(self, digits: int) -> list[tuple[mpmath.mpf, mpmath.mpf]]:
        """Vertex coordinates at ``digits`` decimal digits."""
        if self.vertex_exprs is None:
            with mpmath.workdps(digits):
                return [(mpmath.mpf(p.x), mpmath.mpf(p.y)) for p in self.vertices]
        return [(evaluate_expression(x, digits), evaluate_expression(y, digits)) for x, y in self.vertex_exprs]

    def to_json_dict(self) -> dict:
        exprs = self.vertex_exprs or tuple((repr(p.x), repr(p.y)) for p in self.vertices)
        record = {
            "schema": POLYGON_SCHEMA_VERSION,
            "name": self.name,
            "vertices": [list(e) for e in exprs],
            "side_labels": list(self.side_labels),
        }
        if self.angle_fractions is not None:
            record["angle_fractions"] = [str(f) for f in self.angle_fractions]
        return record


def polygon_from_json_dict(record: dict) -> PolygonSpec:
    schema = record.get("schema", POLYGON_SCHEMA_VERSION)
    if schema != POLYGON_SCHEMA_VERSION:
        raise InvalidPolygon(f"unsupported polygon schema {schema!r}")
    try:
        raw_vertices = record["vertices"]
    except KeyError as exc:
        raise InvalidPolygon("polygon record has no 'vertices'") from exc
    exprs = tuple((str(x), str(y)) for x, y in raw_vertices)
    vertices = tuple(PlanarVec(_expression_float(x), _expression_float(y)) for x, y in exprs)
    labels = record.get("side_labels") or [chr(ord("a") + i) if i < 26 else f"s{i}" for i in range(len(exprs))]
    fractions = record.get("angle_fractions")
    return PolygonSpec(
        vertices=vertices,
        side_labels=tuple(str(s) for s in labels),
        angle_fractions=None if fractions is None else tuple(Fraction(str(f)) for f in fractions),
        vertex_exprs=exprs,
        name=str(record.get("name", "polygon")),
    )


def load_polygon(path: str | Path) -> PolygonSpec:
    with open(path, encoding="utf-8") as fh:
        return polygon_from_json_dict(json.load(fh))


def _polygon_from_exprs(exprs, fractions, name, labels=None) -> PolygonSpec:
    exprs = tuple((str(x), str(y)) for x, y in exprs)
    vertices = tuple(PlanarVec(_expression_float(x), _expression_float(y)) for x, y in exprs)
    labels = labels or tuple(chr(ord("a") + i) if i < 26 else f"s{i}" for i in range(len(exprs)))
    return PolygonSpec(vertices, tuple(labels), tuple(fractions), exprs, name)


def unit_square() -> PolygonSpec:
    return _polygon_from_exprs(
        [("0", "0"), ("1", "0"), ("1", "1"), ("0", "1")], [Fraction(1, 2)] * 4, "square"
    )


def equilateral_triangle() -> PolygonSpec:
    return _polygon_from_exprs(
        [("0", "0"), ("1", "0"), ("1/2", "sqrt(3)/2")], [Fraction(1, 3)] * 3, "triangle"
    )


def regular_ngon(N: int) -> PolygonSpec:
    """The regular N-gon inscribed in the unit circle, vertex j at angle 2πj/N."""
    if not isinstance(N, int) or N < 3:
        raise InvalidN(f"N must be an integer >= 3, got {N!r}")
    exprs = [(f"cos(2*pi*{j}/{N})", f"sin(2*pi*{j}/{N})") for j in range(N)]
    return _polygon_from_exprs(exprs, [Fraction(N - 2, N)] * N, f"ngon:{N}")


def polygon_alias(name: str) -> PolygonSpec:
    """Resolve ``square``, ``triangle`` or ``ngon:N``."""
    if name == "square":
        return unit_square()
    if name == "triangle":
        return equilateral_triangle()
    if name.startswith("ngon:"):
        try:
            N = int(name.split(":", 1)[1])
        except ValueError as exc:
            raise InvalidN(f"bad N-gon alias {name!r}") from exc
        return regular_ngon(N)
    raise InvalidPolygon(f"unknown polygon alias {name!r}")


def _dihedral_closure(generators: list[tuple[int, Fraction]]) -> int:
    # elements are (det, angle/π mod 2); a reflection across the line at
    # angle φ is stored with angle 2φ
    def mul(g, h):
        (dg, ag), (dh, ah) = g, h
        angle = ag + ah if dg == 1 else ag - ah
        return (dg * dh, angle % 2)

    seen = {(1, Fraction(0))}
    frontier = list(seen)
    while frontier:
        nxt = []
        for g in frontier:
            for s in generators:
                h = mul(g, s)
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
        frontier = nxt
    return len(seen)


def rationality_check(P: PolygonSpec) -> int:
    """Order of the group generated by the linear parts of the side reflections."""
    if P.angle_fractions is None:
        raise IrrationalAngle(f"{P.name} carries no angle fractions")
    # side direction of side j relative to side 0, in units of π
    directions = [Fraction(0)]
    for f in P.angle_fractions[1:]:
        directions.append(directions[-1] + 1 - f)
    rotations = [(2 * d) % 2 for d in directions]
    m = lcm(*[(r / 2).denominator for r in rotations])
    order = 2 * m
    closure = _dihedral_closure([(-1, r) for r in rotations])
    if closure != order:
        raise AssertionError(f"group order mismatch: formula {order}, closure {closure}")
    return order


# ---------------------------------------------------------------------------
# N-gon parameters and surfaces


@dataclass(frozen=True)
class NGonParams:
    N: int
    parity_class: str
    k: int

    def __post_init__(self) -> None:
        N, k = self.N, self.k
        expected = {"4k": 4 * k, "4k+2": 4 * k + 2, "odd": 2 * k + 1}.get(self.parity_class)
        if N < 3 or expected != N:
            raise InvalidN(f"inconsistent N-gon parameters {self}")

    @classmethod
    def of(cls, N: int) -> NGonParams:
        if not isinstance(N, int) or N < 3:
            raise InvalidN(f"N must be an integer >= 3, got {N!r}")
        if N % 4 == 0:
            return cls(N, "4k", N // 4)
        if N % 2 == 0:
            return cls(N, "4k+2", (N - 2) // 4)
        return cls(N, "odd", (N - 1) // 2)

    @property
    def is_even(self) -> bool:
        return self.N % 2 == 0


@dataclass(frozen=True)
class FillingClass:
    label: str
    edges: tuple[tuple[int, int], ...]
    holonomy: PlanarVec


@dataclass(frozen=True)
class SingularPoint:
    corners: tuple[tuple[int, int], ...]
    cone_angle: float

    @property
    def is_marked(self) -> bool:
        return abs(self.cone_angle - 2 * math.pi) < 1e-9


@dataclass(frozen=True)
class SurfaceSpec:
    copies: tuple[PolygonSpec, ...]
    gluings: tuple[tuple[tuple[int, int], tuple[int, int]], ...]
    filling_system: tuple[FillingClass, ...]
    area: float
    singular_points: tuple[SingularPoint, ...] = ()
    name: str = "surface"
    special_case: str | None = None
    _partner: dict = field(default_factory=dict, repr=False, compare=False)
    _class_of: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 1 <= len(self.copies) <= 2:
            raise InvalidSurface("surfaces are presented by one or two polygon copies")
        all_edges = {(c, e) for c, P in enumerate(self.copies) for e in range(P.n)}
        partner: dict[tuple[int, int], tuple[int, int]] = {}
        for left, right in self.gluings:
            for x in (left, right):
                if x not in all_edges:
                    raise InvalidSurface(f"gluing references unknown edge {x}")
                if x in partner:
                    raise InvalidSurface(f"edge {x} is glued twice")
            partner[left], partner[right] = right, left
        if set(partner) != all_edges:
            raise InvalidSurface("every edge must belong to exactly one gluing pair")
        for left, right in self.gluings:
            zl, zr = self.edge_vector(*left), self.edge_vector(*right)
            scale = max(zl.norm(), 1.0)
            if (zl + zr).norm() > 1e-9 * scale:
                raise InvalidSurface(f"edges {left} and {right} are not translation-glued")
        if abs(self.area - sum(P.area for P in self.copies)) > 1e-9 * self.area:
            raise InvalidSurface("area must equal the total area of the copies")
        class_of = {}
        for idx, cls in enumerate(self.filling_system):
            for edge in cls.edges:
                if edge in class_of:
                    raise InvalidSurface(f"edge {edge} sits in two filling classes")
                class_of[edge] = idx
        # the complement of the filling system is the union of the open copies
        # exactly when every edge is covered
        if set(class_of) != all_edges:
            raise InvalidSurface("filling system must cover every edge")
        for cls in self.filling_system:
            for edge in cls.edges:
                z = self.edge_vector(*edge)
                if abs(wedge(z, cls.holonomy)) > 1e-9 * max(z.norm(), 1.0) ** 2:
                    raise InvalidSurface(f"edge {edge} is not parallel to its class holonomy")
        object.__setattr__(self, "_partner", partner)
        object.__setattr__(self, "_class_of", class_of)
        if not self.singular_points:
            object.__setattr__(self, "singular_points", self._chase_vertices())

    def edge_vector(self, copy: int, edge: int) -> PlanarVec:
        P = self.copies[copy]
        return P.vertices[(edge + 1) % P.n] - P.vertices[edge]

    def partner(self, copy: int, edge: int) -> tuple[int, int]:
        return self._partner[(copy, edge)]

    def class_of(self, copy: int, edge: int) -> int:
        return self._class_of[(copy, edge)]

    def _chase_vertices(self) -> tuple[SingularPoint, ...]:
        parent: dict[tuple[int, int], tuple[int, int]] = {}

        def find(x):
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

        for (c, e), (c2, e2) in self._partner.items():
            n, n2 = self.copies[c].n, self.copies[c2].n
            # the start of one edge is glued to the end of its partner
            union((c, e), (c2, (e2 + 1) % n2))
            union((c, (e + 1) % n), (c2, e2))
        groups: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for c, P in enumerate(self.copies):
            for v in range(P.n):
                groups.setdefault(find((c, v)), []).append((c, v))
        points = []
        for members in sorted(groups.values()):
            angle = sum(self.copies[c].interior_angles()[v] for c, v in members)
            points.append(SingularPoint(tuple(members), angle))
        return tuple(points)

    def point_of(self, copy: int, corner: int) -> int:
        for idx, sp in enumerate(self.singular_points):
            if (copy, corner) in sp.corners:
                return idx
        raise KeyError((copy, corner))

    def scaled(self, factor: float) -> SurfaceSpec:
        """Copy of the surface with every length multiplied by ``factor``."""
        copies = tuple(
            PolygonSpec(
                tuple(p * factor for p in P.vertices),
                P.side_labels,
                P.angle_fractions,
                None if P.vertex_exprs is None else tuple((f"({factor!r})*({x})", f"({factor!r})*({y})") for x, y in P.vertex_exprs),
                P.name,
            )
            for P in self.copies
        )
        classes = tuple(FillingClass(c.label, c.edges, c.holonomy * factor) for c in self.filling_system)
        return SurfaceSpec(copies, self.gluings, classes, self.area * factor * factor, name=self.name, special_case=self.special_case)


def _reflect_exprs_vertical(exprs, x0_expr: str):
    return [(f"2*({x0_expr})-({x})", y) for x, y in exprs]


def ngon_surface(N: int, allow_special: bool = False) -> SurfaceSpec:
    """S_N: opposite sides of P_N glued (N even) or the doubled N-gon (N odd).

    For odd N the second copy is the mirror image of P_N across its vertical
    side, the one joining vertices k and k+1.  N = 3, 4 are genus-one special
    cases and need ``allow_special``.
    """
    params = NGonParams.of(N)
    if N < 5 and not allow_special:
        raise InvalidN(f"S_{N} is a special case; pass allow_special=True")
    special = None
    if N < 5:
        special = "index-2: the Veech group of this torus differs from the Hecke-group pattern"
    base = regular_ngon(N)
    if params.is_even:
        half = N // 2
        gluings = tuple(((0, j), (0, j + half)) for j in range(half))
        classes = tuple(
            FillingClass(f"c{j}", ((0, j), (0, j + half)), base.side_vectors()[j]) for j in range(half)
        )
        return SurfaceSpec((base,), gluings, classes, base.area, name=f"S_{N}", special_case=special)

    k = params.k
    x0 = f"cos(2*pi*{k}/{N})"
    mirrored = _reflect_exprs_vertical(base.vertex_exprs, x0)
    # mirroring reverses orientation; list the copy counterclockwise again
    order = [(k - i) % N for i in range(N)]
    exprs = [mirrored[i] for i in order]
    labels = tuple(f"{base.side_labels[i]}'" for i in range(N))
    second = _polygon_from_exprs(exprs, base.angle_fractions, f"ngon:{N}'", labels)
    sides_a = base.side_vectors()
    sides_b = second.side_vectors()
    gluings = []
    classes = []
    for j, z in enumerate(sides_a):
        matches = [i for i, w in enumerate(sides_b) if (z + w).norm() < 1e-9]
        if len(matches) != 1:
            raise InvalidSurface(f"no unique partner for side {j} of the doubled {N}-gon")
        gluings.append(((0, j), (1, matches[0])))
        classes.append(FillingClass(f"c{j}", ((0, j), (1, matches[0])), z))
    return SurfaceSpec(
        (base, second), tuple(gluings), tuple(classes), 2 * base.area, name=f"S_{N}", special_case=special
    )


def surface_alias(name: str) -> SurfaceSpec:
    if name.startswith("ngon:"):
        try:
            N = int(name.split(":", 1)[1])
        except ValueError as exc:
            raise InvalidN(f"bad surface alias {name!r}") from exc
        return ngon_surface(N, allow_special=N in (3, 4))
    raise InvalidSurface(f"unknown surface alias {name!r}")
