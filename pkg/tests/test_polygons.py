import json
import math
from fractions import Fraction

import pytest

from ngon_billiards import (
    NGonParams,
    PlanarVec,
    PolygonSpec,
    equilateral_triangle,
    ngon_surface,
    rationality_check,
    regular_ngon,
    unit_square,
)
from ngon_billiards.errors import IrrationalAngle, InvalidN, InvalidPolygon, InvalidSurface
from ngon_billiards.polygons import (
    evaluate_expression,
    load_polygon,
    polygon_alias,
    polygon_from_json_dict,
    surface_alias,
)


@pytest.mark.parametrize(
    "factory, order",
    [(unit_square, 4), (equilateral_triangle, 6), (lambda: regular_ngon(5), 10), (lambda: regular_ngon(8), 8)],
)
def test_rationality_check_orders(factory, order):
    assert rationality_check(factory()) == order


def test_rationality_check_needs_angle_fractions():
    P = PolygonSpec((PlanarVec(0, 0), PlanarVec(1, 0), PlanarVec(0, 1)), ("a", "b", "c"))
    with pytest.raises(IrrationalAngle):
        rationality_check(P)


def test_clockwise_polygon_is_rejected():
    with pytest.raises(InvalidPolygon):
        PolygonSpec((PlanarVec(0, 0), PlanarVec(0, 1), PlanarVec(1, 0)), ("a", "b", "c"))


def test_self_intersecting_polygon_is_rejected():
    bowtie = (PlanarVec(0, 0), PlanarVec(2, 0), PlanarVec(0, 2), PlanarVec(2, 2), PlanarVec(1, -5))
    with pytest.raises(InvalidPolygon):
        PolygonSpec(bowtie, tuple("abcde"))


def test_declared_angles_must_match_geometry():
    square = unit_square()
    with pytest.raises(InvalidPolygon):
        PolygonSpec(square.vertices, square.side_labels, (Fraction(1, 3), Fraction(2, 3), Fraction(1, 2), Fraction(1, 2)))


def test_regular_ngon_geometry():
    P = regular_ngon(7)
    assert P.is_strictly_convex()
    assert P.area == pytest.approx(7 / 2 * math.sin(2 * math.pi / 7), rel=1e-14)
    for angle in P.interior_angles():
        assert angle == pytest.approx(5 * math.pi / 7, rel=1e-12)


@pytest.mark.parametrize("bad", [2, 0, -5, 4.0, "8"])
def test_invalid_n(bad):
    with pytest.raises(InvalidN):
        NGonParams.of(bad)


@pytest.mark.parametrize("N, parity_class, k", [(8, "4k", 2), (10, "4k+2", 2), (7, "odd", 3), (3, "odd", 1), (4, "4k", 1)])
def test_ngon_params(N, parity_class, k):
    params = NGonParams.of(N)
    assert (params.parity_class, params.k) == (parity_class, k)


def test_expression_evaluator():
    assert evaluate_expression("sqrt(3)/2", 30) == pytest.approx(math.sqrt(3) / 2, rel=1e-15)
    assert evaluate_expression("cospi(1/3) + 2**-1", 30) == pytest.approx(1.0, rel=1e-15)
    for hostile in ("__import__('os')", "x", "open('f')", "(1).real"):
        with pytest.raises(InvalidPolygon):
            evaluate_expression(hostile, 30)


def test_polygon_json_round_trip(tmp_path):
    P = regular_ngon(5)
    path = tmp_path / "pentagon.json"
    path.write_text(json.dumps(P.to_json_dict()))
    loaded = load_polygon(path)
    assert loaded.vertex_exprs == P.vertex_exprs
    assert loaded.angle_fractions == P.angle_fractions
    assert all((a - b).norm() == 0 for a, b in zip(loaded.vertices, P.vertices))


def test_polygon_json_schema_is_checked():
    with pytest.raises(InvalidPolygon):
        polygon_from_json_dict({"schema": "something/else", "vertices": [["0", "0"]]})
    with pytest.raises(InvalidPolygon):
        polygon_from_json_dict({"name": "empty"})


def test_high_precision_vertices():
    x, y = regular_ngon(7).vertices_mp(60)[3]
    assert abs(x * x + y * y - 1) < 1e-55


def test_aliases():
    assert polygon_alias("square").n == 4
    assert polygon_alias("ngon:9").n == 9
    with pytest.raises(InvalidPolygon):
        polygon_alias("hexagram")
    assert surface_alias("ngon:5").name == "S_5"


@pytest.mark.parametrize("N", [5, 6, 7, 8, 9, 10, 12])
def test_surface_structure(N):
    S = ngon_surface(N)
    copies = 1 if N % 2 == 0 else 2
    assert len(S.copies) == copies
    assert len(S.filling_system) == (N // 2 if N % 2 == 0 else N)
    assert S.area == pytest.approx(copies * regular_ngon(N).area, rel=1e-14)
    # glued edges have opposite holonomy
    for left, right in S.gluings:
        assert (S.edge_vector(*left) + S.edge_vector(*right)).norm() < 1e-12
    # Gauss-Bonnet: Σ (cone angle − 2π) = 4π(g − 1), and the genus of S_N is k
    excess = sum(p.cone_angle - 2 * math.pi for p in S.singular_points)
    assert excess / (4 * math.pi) + 1 == pytest.approx(NGonParams.of(N).k)


@pytest.mark.parametrize(
    "N, cone_angles",
    [
        (5, [6 * math.pi]),
        (7, [10 * math.pi]),
        (8, [6 * math.pi]),
        (12, [10 * math.pi]),
        (6, [2 * math.pi, 2 * math.pi]),
        (10, [4 * math.pi, 4 * math.pi]),
    ],
)
def test_singular_points(N, cone_angles):
    S = ngon_surface(N)
    assert sorted(p.cone_angle for p in S.singular_points) == pytest.approx(cone_angles)


def test_hexagon_points_are_marked():
    assert all(p.is_marked for p in ngon_surface(6).singular_points)


def test_special_surfaces_need_opt_in():
    with pytest.raises(InvalidN):
        ngon_surface(4)
    S = ngon_surface(4, allow_special=True)
    assert S.special_case


def test_scaled_surface():
    S = ngon_surface(8)
    T = S.scaled(3.0)
    assert T.area == pytest.approx(9 * S.area)
    assert T.singular_points == S.singular_points


def test_bad_gluing_is_rejected():
    S = ngon_surface(8)
    bad = ((S.gluings[0][0], S.gluings[1][1]), (S.gluings[1][0], S.gluings[0][1])) + S.gluings[2:]
    with pytest.raises(InvalidSurface):
        type(S)(S.copies, bad, S.filling_system, S.area)
