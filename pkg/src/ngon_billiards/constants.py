"""Closed-form constants for regular N-gon billiards and the S_N surfaces.

Two routes to the cubic complexity constant c_N are computed and compared:

* the closed formula
  c_N = σ_N N⁴ sin²(2π/N) / (48π²(N−2)) · (N²/12 − 1/(4 sin²(π/N)) − 1/12);
* a step-by-step pipeline: cusp representative lengths → Veech cusp
  constants → geometric constant c_G → area of the Ω-region built from the
  filling-system holonomies → c_comb = a²·c_G·|Ω̂| → c_comb/3 (N even) or
  c_comb/6 (N odd).

High-precision arithmetic goes through gmpy2 (MPFR); reports are rounded to
doubles at the end.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .errors import InvalidM, InvalidN, ParallelHolonomies, ZeroLengthRep
from .geometry import PlanarVec, wedge
from .polygons import NGonParams, ngon_surface

DEFAULT_DIGITS = 50
REPORT_SCHEMA_VERSION = "ngon-billiards/constants/1"
DUAL_ROUTE_TOLERANCE = 1e-9


def _bits(digits: int) -> int:
    return int(math.ceil(digits * math.log2(10))) + 8


@contextmanager
def working_precision(digits: int = DEFAULT_DIGITS):
    with gmpy2.context(gmpy2.get_context(), precision=_bits(digits)):
        yield


def _rel_err(direct, closed) -> float:
    if closed == 0:
        return float(abs(direct))
    return float(abs(direct - closed) / abs(closed))


# ---------------------------------------------------------------------------
# identities


def fundamental_identity(m: int, digits: int = 30) -> tuple[mpfr, mpfr]:
    """Direct value of Σ_{j=1}^{m−1} 1/sin²(πj/m) and its closed form (m²−1)/3."""
    if not isinstance(m, int) or m < 2:
        raise InvalidM(f"m must be an integer >= 2, got {m!r}")
    with working_precision(digits):
        pi = gmpy2.const_pi()
        lhs = gmpy2.fsum(1 / gmpy2.sin(pi * j / m) ** 2 for j in range(1, m))
        rhs = mpfr(m * m - 1) / 3
        return +lhs, +rhs


SUM_NAMES = ("sigma0", "sigma_pi_N", "sigma0_star", "sigma_pi_N_star", "sigma_pi2_starstar")
RELEVANT_SUMS = {
    "4k": ("sigma0", "sigma_pi_N"),
    "4k+2": ("sigma0_star", "sigma_pi_N_star"),
    "odd": ("sigma_pi2_starstar",),
}


@dataclass(frozen=True)
class TrigSumRecord:
    k: int
    values: dict  # name -> (direct, closed) as doubles
    errors: dict  # name -> relative error, taken before rounding
    relevant: tuple[str, ...]
    # the vertical-cusp sum is also compared with ((2k+1)² − 3)/6, an
    # algebra slip that appears when the fundamental identity is applied
    # with "−3" instead of "−1"; direct summation rejects it for every k
    slip_value: float = 0.0
    slip_rejected: bool = True

    def max_relative_error(self, names=SUM_NAMES) -> float:
        return max(self.errors[name] for name in names)


def trig_sums(k: int, parity_class: str | None = None, digits: int = 30) -> TrigSumRecord:
    """Direct and closed values of the five cosine/sine sums at index k.

    Σ₀(k)   = Σ_{j=1}^{k−1} 1/cos²(jπ/2k)               = (2/3)(k²−1)
    Σ_{π/N} = Σ_{j=1}^{k} 1/cos²((2j−1)π/4k)             = 2k²
    Σ₀*     = Σ_{j=1}^{k} 1/cos²(jπ/(2k+1))              = 2(k²+k)
    Σ*_{π/N}= Σ_{j=1}^{k} 1/cos²((2j−1)π/(4k+2))         = (2/3)(k²+k)
    Σ**_{π/2}= Σ_{j=1}^{k} 1/sin²(2πj/(2k+1))            = (2/3)(k²+k)
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    with working_precision(digits):
        pi = gmpy2.const_pi()
        cos, sin, fsum = gmpy2.cos, gmpy2.sin, gmpy2.fsum
        raw = {
            "sigma0": (
                fsum(1 / cos(j * pi / (2 * k)) ** 2 for j in range(1, k)) if k > 1 else mpfr(0),
                mpfr(2 * (k * k - 1)) / 3,
            ),
            "sigma_pi_N": (fsum(1 / cos((2 * j - 1) * pi / (4 * k)) ** 2 for j in range(1, k + 1)), mpfr(2 * k * k)),
            "sigma0_star": (fsum(1 / cos(j * pi / (2 * k + 1)) ** 2 for j in range(1, k + 1)), mpfr(2 * (k * k + k))),
            "sigma_pi_N_star": (
                fsum(1 / cos((2 * j - 1) * pi / (4 * k + 2)) ** 2 for j in range(1, k + 1)),
                mpfr(2 * (k * k + k)) / 3,
            ),
            "sigma_pi2_starstar": (
                fsum(1 / sin(2 * pi * j / (2 * k + 1)) ** 2 for j in range(1, k + 1)),
                mpfr(2 * (k * k + k)) / 3,
            ),
        }
        slip = mpfr((2 * k + 1) ** 2 - 3) / 6
        direct_ss = raw["sigma_pi2_starstar"][0]
        slip_rejected = _rel_err(direct_ss, slip) > DUAL_ROUTE_TOLERANCE
        values = {name: (float(d), float(c)) for name, (d, c) in raw.items()}
        errors = {name: _rel_err(d, c) for name, (d, c) in raw.items()}
    relevant = RELEVANT_SUMS[parity_class] if parity_class else SUM_NAMES
    return TrigSumRecord(k, values, errors, relevant, float(slip), slip_rejected)


# ---------------------------------------------------------------------------
# Ω-region


@dataclass(frozen=True)
class OmegaPolygon:
    defining_holonomies: tuple[PlanarVec, ...]
    vertices: tuple[PlanarVec, ...]
    tau: tuple[float, ...]
    area: float

    def certificate(self) -> float:
        """Largest |Σ_i |v ∧ z_i| − 1| over the vertices."""
        return max(
            abs(sum(abs(wedge(v, z)) for z in self.defining_holonomies) - 1.0) for v in self.vertices
        )

    def is_convex(self) -> bool:
        V = self.vertices
        m = len(V)
        turns = [wedge(V[i] - V[i - 1], V[(i + 1) % m] - V[i]) for i in range(m)]
        return all(t > 0 for t in turns) or all(t < 0 for t in turns)


def omega_polygon(holonomies, parallel_tol: float = 1e-12) -> OmegaPolygon:
    """The region {z : Σ_j |z ∧ z_j| ≤ 1}: vertices ±τ_j z_j with
    τ_j = 1/Σ_{i≠j}|z_j ∧ z_i|, listed by angle, area by the shoelace formula."""
    Z = [h if isinstance(h, PlanarVec) else PlanarVec(*h) for h in holonomies]
    m = len(Z)
    if m < 2:
        raise ValueError("need at least two holonomies")
    W = np.array([[abs(wedge(a, b)) for b in Z] for a in Z])
    for i in range(m):
        for j in range(i + 1, m):
            if W[i, j] <= parallel_tol * Z[i].norm() * Z[j].norm():
                raise ParallelHolonomies(f"holonomies {i} and {j} are parallel")
    tau = [1.0 / math.fsum(W[j, i] for i in range(m) if i != j) for j in range(m)]
    points = [Z[j] * tau[j] for j in range(m)] + [Z[j] * (-tau[j]) for j in range(m)]
    points.sort(key=lambda p: (p.angle() % (2 * math.pi)))
    area = 0.5 * math.fsum(wedge(points[i], points[(i + 1) % len(points)]) for i in range(len(points)))
    return OmegaPolygon(tuple(Z), tuple(points), tuple(tau), area)


def omega_area_closed(N: int, parity_class: str | None = None, digits: int = DEFAULT_DIGITS) -> float:
    """|Ω̂| of the native filling system of S_N.

    Even N: a regular N-gon of area (N/4)tan(π/N).  Odd N: a regular 2N-gon
    of circumradius ρ_N = 1/(2(1+cos(π/N))), area ρ_N²·N·sin(π/N).
    """
    params = NGonParams.of(N)
    if parity_class is not None and parity_class != params.parity_class:
        raise InvalidN(f"parity class {parity_class} does not match N={N}")
    with working_precision(digits):
        pi = gmpy2.const_pi()
        if params.is_even:
            return float(mpfr(N) / 4 * gmpy2.tan(pi / N))
        # 1 − cos(2πk/(2k+1)) = 1 + cos(π/N)
        radius = 1 / (2 * (1 - gmpy2.cos(2 * pi * params.k / N)))
        return float(radius**2 * N * gmpy2.sin(pi / N))


def native_filling_holonomies(N: int) -> list[PlanarVec]:
    S = ngon_surface(N, allow_special=N in (3, 4))
    return [cls.holonomy for cls in S.filling_system]


# ---------------------------------------------------------------------------
# Veech cusp data


def polygon_area(N: int) -> mpfr:
    pi = gmpy2.const_pi()
    return mpfr(N) / 2 * gmpy2.sin(2 * pi / N)


def side_length(N: int) -> mpfr:
    pi = gmpy2.const_pi()
    return gmpy2.sqrt(2 * (1 - gmpy2.cos(2 * pi / N)))


def covolume(N: int) -> mpfr:
    """Covolume of the Veech group of S_N: 2π(N−2)/N (even), π(N−2)/N (odd)."""
    pi = gmpy2.const_pi()
    factor = 2 if N % 2 == 0 else 1
    return factor * pi * (N - 2) / N


def cusp_representatives(N: int, digits: int = DEFAULT_DIGITS) -> dict[str, list]:
    """Native lengths of the saddle connections in each cusp direction,
    listed with multiplicity."""
    params = NGonParams.of(N)
    if N < 5:
        raise InvalidN("cusp representatives are tabulated for N >= 5")
    k = params.k
    with working_precision(digits):
        pi = gmpy2.const_pi()
        cos, sin = gmpy2.cos, gmpy2.sin
        two = mpfr(2)
        if params.parity_class == "4k":
            horizontal = [two]
            for j in range(1, k):
                horizontal += [2 * cos(j * pi / (2 * k))] * 2
            slanted = [2 * cos((2 * k - 1) * pi / (4 * k))]
            for j in range(1, k):
                slanted += [2 * cos((2 * j - 1) * pi / (4 * k))] * 2
            return {"horizontal": horizontal, "pi_over_N": slanted}
        if params.parity_class == "4k+2":
            horizontal = [two, 2 * cos(k * pi / (2 * k + 1))]
            for j in range(1, k):
                horizontal += [2 * cos(j * pi / (2 * k + 1))] * 2
            slanted = []
            for j in range(1, k + 1):
                slanted += [2 * cos((2 * j - 1) * pi / N)] * 2
            return {"horizontal": horizontal, "pi_over_N": slanted}
        vertical = [2 * sin(2 * pi * k / N)]
        for j in range(1, k):
            vertical += [2 * sin(2 * pi * j / N)] * 2
        return {"vertical": vertical}


def cusp_constant(reps, N: int, covol, digits: int = DEFAULT_DIGITS) -> mpfr:
    """(1/π)(1/covol)·2cot(π/N)·Σ 1/|z|² over one cusp's representatives."""
    if len(reps) == 0:
        raise ZeroLengthRep("a cusp needs at least one representative")
    with working_precision(digits):
        total = mpfr(0)
        for length in reps:
            length = mpfr(length)
            if length == 0:
                raise ZeroLengthRep("zero-length cusp representative")
            total += 1 / length**2
        pi = gmpy2.const_pi()
        return 2 * gmpy2.cot(pi / N) * total / (pi * mpfr(covol))


# ---------------------------------------------------------------------------
# assembled constants


def sigma_factor(N: int, digits: int = DEFAULT_DIGITS) -> mpfr:
    with working_precision(digits):
        if N % 2 == 0:
            return mpfr(1)
        c = gmpy2.cos(gmpy2.const_pi() / N)
        return 4 * c / (1 + c) ** 2


def c_N_closed(N: int, digits: int = DEFAULT_DIGITS) -> mpfr:
    """σ_N N⁴ sin²(2π/N) / (48π²(N−2)) · (N²/12 − 1/(4 sin²(π/N)) − 1/12)."""
    if N < 3:
        raise InvalidN("N must be >= 3")
    with working_precision(digits):
        pi = gmpy2.const_pi()
        sin = gmpy2.sin
        bracket = mpfr(N * N) / 12 - 1 / (4 * sin(pi / N) ** 2) - mpfr(1) / 12
        prefactor = mpfr(N) ** 4 * sin(2 * pi / N) ** 2 / (48 * pi**2 * (N - 2))
        return sigma_factor(N, digits) * prefactor * bracket


@dataclass(frozen=True)
class CombinatorialAssembly:
    native_area: float  # area of the presentation the cusp lengths refer to
    cusp_constants: dict
    c_geometric: float
    omega_area: float
    c_comb: float


def c_comb_pipeline(N: int, scale_area: float | None = None, digits: int = DEFAULT_DIGITS) -> CombinatorialAssembly:
    """a²·c_G^(a)·|Ω̂^(a)| with every ingredient rebuilt at surface area a.

    Without ``scale_area`` the native presentation is used (area a_N for even
    N, 2a_N for odd N).  The product does not depend on a.
    """
    params = NGonParams.of(N)
    if N < 5:
        raise InvalidN("the pipeline covers N >= 5; N = 3, 4 are special cases")
    with working_precision(digits):
        native = polygon_area(N) * (1 if params.is_even else 2)
        a = native if scale_area is None else mpfr(scale_area)
        stretch = gmpy2.sqrt(a / native)
        covol = covolume(N)
        cusps = {
            name: cusp_constant([length * stretch for length in reps], N, covol, digits)
            for name, reps in cusp_representatives(N, digits).items()
        }
        c_geo = gmpy2.fsum(cusps.values())
    s = float(stretch)
    omega = omega_polygon([z * s for z in native_filling_holonomies(N)])
    with working_precision(digits):
        c_comb = a**2 * c_geo * mpfr(omega.area)
    return CombinatorialAssembly(float(a), {k: float(v) for k, v in cusps.items()}, float(c_geo), omega.area, float(c_comb))


def c_comb_closed(N: int, digits: int = DEFAULT_DIGITS) -> mpfr:
    """c_N from the closed formula, multiplied back by the lift degree."""
    return c_N_closed(N, digits) * (3 if N % 2 == 0 else 6)


SPECIAL_VALUES = {3: ("3/(4π²)", lambda pi: 3 / (4 * pi**2)), 4: ("4/π²", lambda pi: 4 / pi**2)}
SPECIAL_FLAG = "index-2 special case: the closed formula gives half of the established value"


def c_N(N: int, digits: int = DEFAULT_DIGITS) -> dict:
    """Both routes to c_N.  For N = 3, 4 the established values are returned
    together with the (halved) closed-formula value and a flag."""
    if not isinstance(N, int) or N < 3:
        raise InvalidN(f"N must be an integer >= 3, got {N!r}")
    closed = float(c_N_closed(N, digits))
    if N in SPECIAL_VALUES:
        with working_precision(digits):
            label, fn = SPECIAL_VALUES[N]
            value = float(fn(gmpy2.const_pi()))
        return {"N": N, "value": value, "closed": closed, "pipeline": None, "special": label, "flag": SPECIAL_FLAG}
    pipeline = c_comb_pipeline(N, digits=digits).c_comb / (3 if N % 2 == 0 else 6)
    return {"N": N, "value": closed, "closed": closed, "pipeline": pipeline, "special": None, "flag": None}


def asymptotic_limit() -> float:
    return (1 / 48) * (1 / 3 - 1 / math.pi**2)


def asymptotic_limit_check(N_max: int, N_values=None, digits: int = 30) -> dict:
    """c_N/N³ along N = 5..N_max (or the given N values) and the relative
    distance of each term to (1/48)(1/3 − 1/π²)."""
    if N_max < 100:
        raise ValueError("N_max must be at least 100")
    limit = asymptotic_limit()
    Ns = list(N_values) if N_values is not None else list(range(5, N_max + 1))
    rows = []
    for N in Ns:
        ratio = float(c_N_closed(N, digits) / mpfr(N) ** 3)
        rows.append((N, ratio, abs(ratio - limit) / limit))
    return {"limit": limit, "rows": rows, "final_distance": rows[-1][2] if rows else None}


# ---------------------------------------------------------------------------
# reports


@dataclass
class ConstantsReport:
    N: int
    k: int
    parity_class: str
    a_N: float
    r_N: float
    covol: float
    cusp_constants: dict
    c_geometric: float | None
    omega_hat_area: float
    omega_hat_area_closed: float
    c_comb: float | None
    c_comb_closed: float
    sigma_N: float
    c_N_pipeline: float | None
    c_N_closed: float
    c_N: float
    limit_ratio: float
    special_case: str | None = None
    flags: list = field(default_factory=list)
    relative_gap: float | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def dual_route_ok(self) -> bool:
        if self.c_N_pipeline is None:
            return True
        return self.relative_gap is not None and self.relative_gap < DUAL_ROUTE_TOLERANCE

    def to_dict(self) -> dict:
        out = asdict(self)
        out["schema"] = REPORT_SCHEMA_VERSION
        out["dual_route_ok"] = self.dual_route_ok
        return out


CSV_COLUMNS = (
    "N",
    "k",
    "parity_class",
    "a_N",
    "r_N",
    "covol",
    "c_geometric",
    "omega_hat_area",
    "omega_hat_area_closed",
    "c_comb",
    "c_comb_closed",
    "sigma_N",
    "c_N_pipeline",
    "c_N_closed",
    "c_N",
    "limit_ratio",
    "relative_gap",
    "special_case",
)


def constants_report(N: int, digits: int = DEFAULT_DIGITS) -> ConstantsReport:
    params = NGonParams.of(N)
    with working_precision(digits):
        a_N = float(polygon_area(N))
        r_N = float(side_length(N))
        covol = float(covolume(N))
        sigma = float(sigma_factor(N, digits))
    closed = c_N_closed(N, digits)
    result = c_N(N, digits)
    omega = omega_polygon(native_filling_holonomies(N))
    omega_closed = omega_area_closed(N, digits=digits)
    lift = 3 if params.is_even else 6
    flags = []
    if N >= 5:
        assembly = c_comb_pipeline(N, digits=digits)
        cusp, c_geo, c_comb_value = assembly.cusp_constants, assembly.c_geometric, assembly.c_comb
        pipeline = result["pipeline"]
        gap = abs(pipeline - float(closed)) / float(closed)
        if gap >= DUAL_ROUTE_TOLERANCE:
            flags.append("dual-route mismatch")
    else:
        cusp, c_geo, c_comb_value, pipeline, gap = {}, None, None, None, None
        flags.append(SPECIAL_FLAG)
    if abs(omega.area - omega_closed) > 1e-9 * omega_closed:
        flags.append("omega-area mismatch")
    return ConstantsReport(
        N=N,
        k=params.k,
        parity_class=params.parity_class,
        a_N=a_N,
        r_N=r_N,
        covol=covol,
        cusp_constants=cusp,
        c_geometric=c_geo,
        omega_hat_area=omega.area,
        omega_hat_area_closed=omega_closed,
        c_comb=c_comb_value,
        c_comb_closed=float(closed * lift),
        sigma_N=sigma,
        c_N_pipeline=pipeline,
        c_N_closed=float(closed),
        c_N=result["value"],
        limit_ratio=result["value"] / N**3,
        special_case=result["special"],
        flags=flags,
        relative_gap=gap,
        provenance={
            "closed_route": "sigma_N * N^4 sin^2(2pi/N) / (48 pi^2 (N-2)) * (N^2/12 - 1/(4 sin^2(pi/N)) - 1/12)",
            "pipeline_route": "cusp lengths -> Veech cusp constants -> c_G * a^2 * |Omega| -> divide by lift degree",
            "lift_degree": lift,
            "working_digits": digits,
            "arithmetic": "MPFR via gmpy2, rounded to double",
        },
    )
