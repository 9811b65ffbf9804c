import math

import mpmath
import pytest

from ngon_billiards import (
    PlanarVec,
    c_comb_pipeline,
    c_N,
    constants_report,
    cusp_constant,
    cusp_representatives,
    fundamental_identity,
    omega_area_closed,
    omega_polygon,
    trig_sums,
)
from ngon_billiards.constants import (
    CSV_COLUMNS,
    asymptotic_limit,
    c_comb_closed,
    c_N_closed,
    covolume,
    native_filling_holonomies,
)
from ngon_billiards.errors import InvalidN, ParallelHolonomies, ZeroLengthRep


@pytest.mark.parametrize("m, value", [(2, 1), (3, 8 / 3), (4, 5), (7, 16)])
def test_fundamental_identity_examples(m, value):
    lhs, rhs = fundamental_identity(m)
    assert float(rhs) == pytest.approx(value, rel=1e-15)
    assert float(lhs) == pytest.approx(value, rel=1e-15)


def test_trig_sums_by_hand():
    record = trig_sums(1)
    # Σ**_{π/2}(1) = 1/sin²(2π/3) = 4/3
    assert record.values["sigma_pi2_starstar"][0] == pytest.approx(4 / 3, rel=1e-15)
    assert record.values["sigma_pi_N"] == (pytest.approx(2.0), 2.0)
    assert trig_sums(3, "4k").relevant == ("sigma0", "sigma_pi_N")
    with pytest.raises(ValueError):
        trig_sums(0)


def test_trig_sums_against_mpmath():
    k = 17
    with mpmath.workdps(40):
        direct = mpmath.fsum(1 / mpmath.cos((2 * j - 1) * mpmath.pi / (4 * k + 2)) ** 2 for j in range(1, k + 1))
    assert trig_sums(k).values["sigma_pi_N_star"][0] == pytest.approx(float(direct), rel=1e-15)


def _omega_area_by_polar_integration(holonomies):
    """½∮ r(θ)² dθ with r(θ) = 1/Σ|u(θ) ∧ z_j|, split at the kinks."""
    breaks = sorted({math.atan2(z.y, z.x) % math.pi for z in holonomies} | {0.0, math.pi})

    def r_squared(theta):
        u = (mpmath.cos(theta), mpmath.sin(theta))
        return 1 / mpmath.fsum(abs(u[0] * z.y - u[1] * z.x) for z in holonomies) ** 2

    with mpmath.workdps(30):
        half = mpmath.quad(r_squared, breaks)
    return float(half)  # central symmetry: ½∫ over 2π equals ∫ over π


@pytest.mark.parametrize("N", [5, 6, 8, 9, 12, 17])
def test_omega_area_three_routes(N):
    Z = native_filling_holonomies(N)
    constructed = omega_polygon(Z).area
    assert constructed == pytest.approx(omega_area_closed(N), rel=1e-12)
    assert _omega_area_by_polar_integration(Z) == pytest.approx(constructed, rel=1e-12)


def test_omega_of_the_square_lattice():
    omega = omega_polygon([PlanarVec(1, 0), PlanarVec(0, 1)])
    # |x| + |y| ≤ 1
    assert omega.area == pytest.approx(2.0)
    assert omega.certificate() < 1e-15


def test_omega_rejects_parallel_holonomies():
    with pytest.raises(ParallelHolonomies):
        omega_polygon([PlanarVec(1, 0), PlanarVec(-2, 0), PlanarVec(0, 1)])


def test_omega_parity_class_must_match():
    with pytest.raises(InvalidN):
        omega_area_closed(8, "odd")


def test_cusp_representatives_sizes():
    assert len(cusp_representatives(8)["horizontal"]) == 3
    assert len(cusp_representatives(10)["pi_over_N"]) == 4
    assert list(cusp_representatives(7)) == ["vertical"]
    with pytest.raises(InvalidN):
        cusp_representatives(4)


def test_cusp_constant_rejects_bad_input():
    with pytest.raises(ZeroLengthRep):
        cusp_constant([], 8, covolume(8))
    with pytest.raises(ZeroLengthRep):
        cusp_constant([1.0, 0.0], 8, covolume(8))


@pytest.mark.parametrize("N", [5, 8, 11])
def test_pipeline_does_not_depend_on_area(N):
    reference = c_comb_pipeline(N).c_comb
    for area in (1.0, 7.3, 0.02):
        assert c_comb_pipeline(N, scale_area=area).c_comb == pytest.approx(reference, rel=1e-12)
    assert reference == pytest.approx(float(c_comb_closed(N)), rel=1e-12)


def _c_n_mpmath(N):
    pi, sin, cos = mpmath.pi, mpmath.sin, mpmath.cos
    sigma = 1 if N % 2 == 0 else 4 * cos(pi / N) / (1 + cos(pi / N)) ** 2
    bracket = mpmath.mpf(N * N) / 12 - 1 / (4 * sin(pi / N) ** 2) - mpmath.mpf(1) / 12
    return sigma * N**4 * sin(2 * pi / N) ** 2 / (48 * pi**2 * (N - 2)) * bracket


@pytest.mark.parametrize("N", [5, 6, 7, 8, 10, 33, 64])
def test_c_n_against_mpmath(N):
    with mpmath.workdps(40):
        expected = float(_c_n_mpmath(N))
    assert c_N(N)["value"] == pytest.approx(expected, rel=1e-14)


def test_special_cases():
    for N, value in ((3, 3 / (4 * math.pi**2)), (4, 4 / math.pi**2)):
        result = c_N(N)
        assert result["value"] == pytest.approx(value)
        assert result["pipeline"] is None
        assert "index-2" in result["flag"]
        assert float(c_N_closed(N)) == pytest.approx(value / 2)


@pytest.mark.parametrize("bad", [2, 0, 5.0])
def test_c_n_rejects_bad_n(bad):
    with pytest.raises(InvalidN):
        c_N(bad)


def test_c_n_is_close_to_the_limit_for_large_n():
    ratio = c_N(1000)["value"] / 1000**3
    assert abs(ratio - asymptotic_limit()) / asymptotic_limit() < 0.01


def test_report_fields():
    report = constants_report(12)
    record = report.to_dict()
    assert record["dual_route_ok"] is True
    assert set(CSV_COLUMNS) <= set(record)
    assert record["parity_class"] == "4k"
    assert constants_report(4).flags
