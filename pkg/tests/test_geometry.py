import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ngon_billiards import CrossingKind, Isometry, PlanarVec, PrecisionConfig, reflect_across_edge, segment_crossing, wedge
from ngon_billiards.errors import DegenerateEdge

coords = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
vectors = st.builds(PlanarVec, coords, coords)


def test_wedge_examples():
    assert wedge(PlanarVec(1, 0), PlanarVec(0, 1)) == 1
    assert wedge(PlanarVec(0, 1), PlanarVec(1, 0)) == -1
    assert wedge(PlanarVec(2, 3), PlanarVec(4, 6)) == 0


@given(vectors, vectors, vectors, coords)
def test_wedge_is_bilinear_and_antisymmetric(u, v, w, s):
    scale = 1 + abs(u.norm() * (v.norm() + w.norm())) * (1 + abs(s))
    assert wedge(u, v) == -wedge(v, u)
    assert math.isclose(wedge(u + w, v), wedge(u, v) + wedge(w, v), abs_tol=1e-9 * scale)
    assert math.isclose(wedge(u * s, v), s * wedge(u, v), abs_tol=1e-9 * scale)


def test_planar_vec_rejects_non_finite():
    with pytest.raises(ValueError):
        PlanarVec(math.nan, 0.0)


def test_reflection_examples():
    a, b = PlanarVec(0, 0), PlanarVec(1, 0)
    assert reflect_across_edge(PlanarVec(0.3, 2.0), a, b) == PlanarVec(0.3, -2.0)
    iso = Isometry.reflection(PlanarVec(0, 0), PlanarVec(1, 1))
    image = iso.apply(PlanarVec(1, 0))
    assert image.x == pytest.approx(0) and image.y == pytest.approx(1)
    assert iso.det == pytest.approx(-1)


def test_degenerate_edge_raises():
    with pytest.raises(DegenerateEdge):
        reflect_across_edge(PlanarVec(1, 1), PlanarVec(2, 2), PlanarVec(2, 2))


def test_reflection_is_an_involution_over_random_pairs():
    rng = random.Random(20240607)
    worst = 0.0
    for _ in range(10_000):
        a = PlanarVec(rng.uniform(-10, 10), rng.uniform(-10, 10))
        b = PlanarVec(rng.uniform(-10, 10), rng.uniform(-10, 10))
        if (b - a).norm() < 1e-3:
            continue
        p = PlanarVec(rng.uniform(-10, 10), rng.uniform(-10, 10))
        back = reflect_across_edge(reflect_across_edge(p, a, b), a, b)
        worst = max(worst, (back - p).norm() / max(1.0, p.norm()))
    assert worst < 1e-12


@given(vectors, vectors, vectors)
def test_isometry_compose_and_inverse(a, b, p):
    if (b - a).norm() < 1e-3:
        return
    iso = Isometry.reflection(a, b).compose(Isometry.translation_by(PlanarVec(1.5, -2.0)))
    back = iso.inverse().apply(iso.apply(p))
    assert (back - p).norm() <= 1e-9 * (1 + p.norm() + a.norm() + b.norm())


def test_reflection_preserves_distances():
    iso = Isometry.reflection(PlanarVec(0.2, 0.1), PlanarVec(-1.0, 3.0))
    p, q = PlanarVec(3, 4), PlanarVec(-2, 7)
    assert (iso.apply(p) - iso.apply(q)).norm() == pytest.approx((p - q).norm(), rel=1e-14)


def _seg(ax, ay, bx, by):
    return PlanarVec(ax, ay), PlanarVec(bx, by)


@pytest.mark.parametrize(
    "first, second, expected",
    [
        (_seg(0, 0, 2, 2), _seg(0, 2, 2, 0), CrossingKind.INTERIOR_TRANSVERSAL),
        (_seg(0, 0, 1, 1), _seg(1, 1, 2, 0), CrossingKind.ENDPOINT_TOUCH),
        (_seg(0, 0, 2, 0), _seg(1, 0, 1, 1), CrossingKind.ENDPOINT_TOUCH),
        (_seg(0, 0, 2, 0), _seg(1, 0, 3, 0), CrossingKind.COLLINEAR_OVERLAP),
        (_seg(0, 0, 1, 0), _seg(1, 0, 2, 0), CrossingKind.ENDPOINT_TOUCH),
        (_seg(0, 0, 1, 0), _seg(2, 0, 3, 0), CrossingKind.NO_CROSS),
        (_seg(0, 0, 1, 0), _seg(0, 1, 1, 1), CrossingKind.NO_CROSS),
    ],
)
def test_segment_crossing_examples(first, second, expected):
    assert segment_crossing(first, second) is expected
    assert segment_crossing(second, first) is expected


@given(vectors, vectors, vectors, vectors)
def test_segment_crossing_is_symmetric(a, b, c, d):
    if a == b or c == d:
        return
    assert segment_crossing((a, b), (c, d)) is segment_crossing((c, d), (a, b))
    assert segment_crossing((a, b), (c, d)) is segment_crossing((b, a), (d, c))


def test_near_touch_within_tolerance_is_a_touch():
    eps = PrecisionConfig().epsilon_incidence
    result = segment_crossing(_seg(0, 0, 1, 0), _seg(0.5, 0.1 * eps, 0.5, 1))
    assert result is CrossingKind.ENDPOINT_TOUCH


def test_precision_config_validation(monkeypatch):
    with pytest.raises(ValueError):
        PrecisionConfig(epsilon_incidence=0.0)
    with pytest.raises(ValueError):
        PrecisionConfig(epsilon_incidence=1e-9, epsilon_zero=1e-6)
    monkeypatch.setenv("NGON_WORKING_DIGITS", "80")
    assert PrecisionConfig.from_env().working_digits == 80
    assert PrecisionConfig.from_env(working_digits=60).working_digits == 60
