import itertools
import math
from collections import Counter

import numpy as np
import pytest

from ngon_billiards import (
    CALIBRATED_CONVENTIONS,
    CrossingKind,
    DiagonalConventions,
    Isometry,
    PrecisionConfig,
    coarse_bound_K,
    enumerate_diagonals,
    enumerate_saddle_connections,
    equilateral_triangle,
    ngon_surface,
    regular_ngon,
    segment_crossing,
    three_lengths,
    unit_square,
    wedge,
)
from ngon_billiards.constants import cusp_representatives
from ngon_billiards.errors import DegeneracyUnresolved, EmptySample, ExplosionGuard, InvalidPolygon
from ngon_billiards.polygons import PolygonSpec
from ngon_billiards.unfolding import (
    coarse_bound_ratios,
    diagonal_counts_by_bounces,
    enumerate_saddle_connections_by_crossings,
    surface_counts_by_crossings,
)

WIDE_BAND = PrecisionConfig(epsilon_incidence=5e-7, epsilon_zero=1e-15)


def _crossing_parameter(start, end, a, b):
    d, e = end - start, b - a
    return wedge(a - start, e) / wedge(d, e)


def brute_force_diagonals(P, max_bounces):
    """Oriented interior diagonals per bounce count, by trying every bounce
    word: unfold along the word with explicit reflections and keep the
    straight segment from a corner to an unfolded corner when it crosses the
    unfolded sides in word order, each in its interior."""
    n = P.n
    counts = [0] * (max_bounces + 1)
    reflections = [Isometry.reflection(P.vertices[e], P.vertices[(e + 1) % n]) for e in range(n)]
    for bounces in range(max_bounces + 1):
        for word in itertools.product(range(n), repeat=bounces):
            if any(x == y for x, y in zip(word, word[1:])):
                continue
            isos, iso = [], Isometry.identity()
            for e in word:
                iso = iso.compose(reflections[e])
                isos.append(iso)
            # side e of the copy before bounce i is the image of side e under isos[i-1]
            sides = []
            before = Isometry.identity()
            for i, e in enumerate(word):
                sides.append((before.apply(P.vertices[e]), before.apply(P.vertices[(e + 1) % n])))
                before = isos[i]
            for start_corner in range(n):
                start = P.vertices[start_corner]
                for end_corner in range(n):
                    end = before.apply(P.vertices[end_corner])
                    if (end - start).norm() < 1e-9:
                        continue
                    if bounces == 0 and (end_corner - start_corner) % n in (0, 1, n - 1):
                        continue
                    if bounces and end_corner in (word[-1], (word[-1] + 1) % n):
                        continue
                    ok, last = True, 0.0
                    for a, b in sides:
                        if segment_crossing((start, end), (a, b)) is not CrossingKind.INTERIOR_TRANSVERSAL:
                            ok = False
                            break
                        t = _crossing_parameter(start, end, a, b)
                        if t <= last:
                            ok = False
                            break
                        last = t
                    if ok and bounces == 0:
                        # the chord must leave the start corner into the polygon
                        ok = P.is_strictly_convex()
                    if ok:
                        counts[bounces] += 1
    return counts


@pytest.mark.parametrize(
    "factory, depth",
    [(unit_square, 5), (equilateral_triangle, 6), (lambda: regular_ngon(5), 4), (lambda: regular_ngon(6), 3)],
)
def test_beam_tracer_matches_brute_force(factory, depth):
    P = factory()
    counts, sides, _ = diagonal_counts_by_bounces(P, depth)
    assert sides == P.n
    assert counts.tolist() == brute_force_diagonals(P, depth)


def test_known_small_counts():
    square, _, _ = diagonal_counts_by_bounces(unit_square(), 6)
    triangle, _, _ = diagonal_counts_by_bounces(equilateral_triangle(), 6)
    assert square.tolist() == [4, 8, 8, 16, 8, 24, 16]
    assert triangle.tolist() == [0, 3, 0, 6, 0, 6, 0]


def test_square_depth_zero():
    oriented = enumerate_diagonals(unit_square(), 0)
    assert sum(d.is_boundary for d in oriented) == 4
    interior = [d for d in oriented if not d.is_boundary]
    assert len(interior) == 4
    assert all(d.geometric_length == pytest.approx(math.sqrt(2)) for d in interior)
    unoriented = enumerate_diagonals(unit_square(), 0, DiagonalConventions(False, True, True))
    assert len(unoriented) == 6


def test_triangle_single_bounce():
    items = [d for d in enumerate_diagonals(equilateral_triangle(), 1) if not d.is_boundary]
    # from each corner, once off the opposite side back to ... the reflected corner
    assert len(items) == 3
    for d in items:
        assert d.bounce_count == 1
        assert d.geometric_length == pytest.approx(math.sqrt(3))


def test_oriented_set_is_closed_under_reversal():
    items = [d for d in enumerate_diagonals(regular_ngon(5), 6) if not d.is_boundary]
    keys = {d.key() for d in items}
    assert all(d.reverse_key() in keys for d in items)
    # a perpendicular bounce retraces the path, giving a diagonal equal to its reverse
    self_reverse = [d for d in items if d.key() == d.reverse_key()]
    assert self_reverse
    assert all(len(d.bounce_word) % 2 == 1 for d in self_reverse)
    unoriented = enumerate_diagonals(regular_ngon(5), 6, DiagonalConventions(False, False, True))
    assert 2 * len(unoriented) == len(items) + len(self_reverse)


def test_rotation_symmetry_of_regular_polygon():
    items = [d for d in enumerate_diagonals(regular_ngon(7), 5) if not d.is_boundary]
    per_corner = Counter(d.start_corner for d in items)
    assert len(set(per_corner.values())) == 1


def test_holonomy_matches_unfolded_corner():
    P = regular_ngon(5)
    for d in enumerate_diagonals(P, 4):
        if d.is_boundary:
            continue
        node, corner = d.end_corner_image
        end = node.isometry.apply(P.vertices[corner])
        assert (end - P.vertices[d.start_corner] - d.holonomy).norm() < 1e-12


def test_non_convex_billiard_table_is_rejected():
    from ngon_billiards import PlanarVec

    dart = PolygonSpec((PlanarVec(0, 0), PlanarVec(2, 1), PlanarVec(0, 2), PlanarVec(0.5, 1)), tuple("abcd"))
    with pytest.raises(InvalidPolygon):
        diagonal_counts_by_bounces(dart, 3)


def test_wide_band_escalation_gives_the_same_counts():
    for P in (regular_ngon(5), equilateral_triangle(), regular_ngon(6)):
        base, _, _ = diagonal_counts_by_bounces(P, 10)
        wide, _, stats = diagonal_counts_by_bounces(P, 10, WIDE_BAND)
        assert stats.escalations > 0
        assert stats.degenerate <= stats.escalations
        assert wide.tolist() == base.tolist()


def test_unresolved_degeneracy_raises_without_escalation():
    strict = PrecisionConfig(epsilon_incidence=5e-7, epsilon_zero=1e-15, escalate=False)
    with pytest.raises(DegeneracyUnresolved) as info:
        diagonal_counts_by_bounces(regular_ngon(5), 10, strict)
    assert info.value.margin is not None
    assert len(info.value.path) > 0


def test_explosion_guard():
    with pytest.raises(ExplosionGuard) as info:
        diagonal_counts_by_bounces(unit_square(), 60, node_budget=1000)
    assert info.value.nodes > 1000
    assert info.value.partial is not None


def test_worker_count_does_not_change_items():
    P = regular_ngon(5)
    one = [d.key() for d in enumerate_diagonals(P, 7, workers=1)]
    two = [d.key() for d in enumerate_diagonals(P, 7, workers=2)]
    assert one == two


# ---------------------------------------------------------------------------
# surfaces


def _native(S, sc):
    return sc.length_geometric * math.sqrt(S.area)


def test_shortest_saddle_connection_of_s8_is_a_side():
    S = ngon_surface(8)
    items = enumerate_saddle_connections(S, 1.0)
    shortest = min(_native(S, sc) for sc in items)
    assert shortest == pytest.approx(2 * math.sin(math.pi / 8), rel=1e-12)


def test_center_horizontal_of_s8():
    S = ngon_surface(8)
    items = enumerate_saddle_connections(S, 2.1 / math.sqrt(S.area))
    center = [sc for sc in items if sc.start == (0, 4) and sc.end == (0, 0) or sc.start == (0, 0) and sc.end == (0, 4)]
    assert len(center) == 1
    sc = center[0]
    assert _native(S, sc) == pytest.approx(2.0, rel=1e-12)
    assert sc.length_combinatorial == 0
    assert abs(sc.holonomy.y) < 1e-12


def _lengths_in_direction(S, theta, reach):
    u = (math.cos(theta), math.sin(theta))
    items = enumerate_saddle_connections(S, reach / math.sqrt(S.area))
    out = []
    for sc in items:
        h = sc.holonomy
        if abs(h.x * u[1] - h.y * u[0]) <= 1e-9 * h.norm():
            out.append(_native(S, sc))
    return sorted(out)


@pytest.mark.parametrize("N", [8, 10, 12])
def test_cusp_representatives_match_enumeration(N):
    S = ngon_surface(N)
    reps = cusp_representatives(N)
    for name, theta in (("horizontal", 0.0), ("pi_over_N", math.pi / N)):
        expected = sorted(float(x) for x in reps[name])
        found = _lengths_in_direction(S, theta, 2.5 * max(expected))
        assert found == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("N", [5, 7, 9])
def test_vertical_cusp_of_odd_surfaces(N):
    S = ngon_surface(N)
    expected = sorted(float(x) for x in cusp_representatives(N)["vertical"])
    found = _lengths_in_direction(S, math.pi / 2, 2.5 * max(expected))
    assert found == pytest.approx(expected, rel=1e-12)


def test_three_lengths_of_a_side():
    S = ngon_surface(8)
    side = S.edge_vector(0, 0)
    g, comb, reg = three_lengths(side, (0,) * 4, S)
    assert g == pytest.approx(side.norm() / math.sqrt(S.area))
    assert comb == 0
    expected = sum(abs(wedge(side, cls.holonomy)) for cls in S.filling_system) / S.area
    assert reg == pytest.approx(expected)


def test_crossing_counts_agree_with_crossing_words():
    S = ngon_surface(7)
    for sc in enumerate_saddle_connections_by_crossings(S, 4):
        assert sc.length_combinatorial == len(sc.crossing_word) == sum(sc.crossings_per_class)
        g, comb, reg = three_lengths(sc.holonomy, sc.crossings_per_class, S)
        assert (g, comb) == (pytest.approx(sc.length_geometric), sc.length_combinatorial)
        assert reg == pytest.approx(sc.length_regularized)


@pytest.fixture(scope="module")
def s8_sample():
    return enumerate_saddle_connections(ngon_surface(8), 20.0)


def test_coarse_bound_holds_on_sample(s8_sample):
    K = coarse_bound_K(s8_sample)
    assert 1.0 <= K < 10.0
    crossing = [sc for sc in s8_sample if sc.length_combinatorial > 0]
    assert len(crossing) > 1000
    for sc in crossing:
        g, comb, reg = sc.length_geometric, sc.length_combinatorial, sc.length_regularized
        assert g / K <= comb <= K * g
        assert g / K <= reg <= K * g
    assert max(coarse_bound_ratios(sc.length_geometric, sc.length_combinatorial, sc.length_regularized) for sc in crossing) == K


def test_coarse_bound_needs_crossing_items(s8_sample):
    with pytest.raises(EmptySample):
        coarse_bound_K([sc for sc in s8_sample if sc.length_combinatorial == 0])


def test_unoriented_counts_halve_oriented_counts():
    S = ngon_surface(8)
    oriented, _ = surface_counts_by_crossings(S, 10, oriented=True)
    unoriented, _ = surface_counts_by_crossings(S, 10)
    assert (oriented == 2 * unoriented).all()
    items = enumerate_saddle_connections_by_crossings(S, 10)
    assert np.bincount([sc.length_combinatorial for sc in items], minlength=11).tolist() == unoriented.tolist()


@pytest.mark.parametrize("factor", [0.1, 1.0, 7.3])
def test_combinatorial_counts_are_scale_invariant(factor):
    S = ngon_surface(9)
    base, _ = surface_counts_by_crossings(S, 8)
    scaled, _ = surface_counts_by_crossings(S.scaled(factor), 8)
    assert scaled.tolist() == base.tolist()


def test_geometric_lengths_are_area_normalized():
    S = ngon_surface(8)
    a = sorted(sc.length_geometric for sc in enumerate_saddle_connections(S, 3.0))
    b = sorted(sc.length_geometric for sc in enumerate_saddle_connections(S.scaled(2.5), 3.0))
    assert a == pytest.approx(b, rel=1e-12)


def test_calibrated_conventions_constant():
    assert CALIBRATED_CONVENTIONS == DiagonalConventions(oriented=True, include_boundary=True, count_links=True)
    assert CALIBRATED_CONVENTIONS.length_of(3, False) == 4
    assert CALIBRATED_CONVENTIONS.length_of(0, True) == 0
