"""Counting functions built on the enumerator, plus the word-sampling oracle.

Under the calibrated conventions the counting function of generalized
diagonals is

    N(m) = (number of sides) + #{oriented interior diagonals with ≤ m−1 bounces}

and the complexity of the billiard language is ρ(t) = Σ_{m=0}^{t−1} N(m).
The conventions are not assumed: :func:`calibrate_conventions` recovers them
by comparing against word counts from simulated trajectories.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CalibrationFailed
from .geometry import DEFAULT_PRECISION, PrecisionConfig
from .polygons import PolygonSpec, SurfaceSpec
from .unfolding import (
    CALIBRATED_CONVENTIONS,
    DEFAULT_NODE_BUDGET,
    DiagonalConventions,
    _regularized_array,
    diagonal_counts_by_bounces,
    enumerate_diagonals,
    surface_counts_by_crossings,
    surface_holonomies,
)

SERIES_KINDS = (
    "diagonals-by-bounce",
    "complexity-by-word-length",
    "sc-by-geometric",
    "sc-by-combinatorial",
    "sc-by-regularized",
)
GRID_RATIO = 2 ** 0.25


@dataclass
class CountSeries:
    kind: str
    rows: list[tuple[float, int, float]]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in SERIES_KINDS:
            raise ValueError(f"unknown series kind {self.kind!r}")
        counts = [r[1] for r in self.rows]
        if any(b < a for a, b in zip(counts, counts[1:])):
            raise ValueError("counts must be non-decreasing in the threshold")

    @property
    def exponent(self) -> int:
        return 3 if self.kind == "complexity-by-word-length" else 2

    @property
    def scale(self) -> float:
        return math.pi if self.kind == "sc-by-geometric" else 1.0

    def normalize(self, threshold: float, count: int) -> float:
        if threshold <= 0:
            return math.nan
        return count / (self.scale * threshold**self.exponent)

    def thresholds(self) -> list[float]:
        return [r[0] for r in self.rows]

    def counts(self) -> list[int]:
        return [r[1] for r in self.rows]

    def normalized(self) -> list[float]:
        return [r[2] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# kind: {self.kind}\n")
        buf.write(f"# metadata: {json.dumps(self.metadata, sort_keys=True)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["threshold", "count", "normalized"])
        for threshold, count, norm in self.rows:
            writer.writerow([_fmt(threshold), count, _fmt(norm)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> CountSeries:
        kind, metadata, rows = None, {}, []
        lines = text.splitlines()
        body = []
        for line in lines:
            if line.startswith("# kind: "):
                kind = line[len("# kind: ") :]
            elif line.startswith("# metadata: "):
                metadata = json.loads(line[len("# metadata: ") :])
            elif not line.startswith("#"):
                body.append(line)
        reader = csv.reader(body)
        next(reader)
        for threshold, count, norm in reader:
            t = float(threshold)
            rows.append((int(t) if t.is_integer() and kind != "sc-by-geometric" and kind != "sc-by-regularized" else t, int(count), float(norm)))
        return cls(kind, rows, metadata)


def _fmt(x: float) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def polygon_hash(P: PolygonSpec) -> str:
    return hashlib.sha256(json.dumps(P.to_json_dict(), sort_keys=True).encode()).hexdigest()[:16]


def surface_hash(S: SurfaceSpec) -> str:
    record = {
        "copies": [P.to_json_dict() for P in S.copies],
        "gluings": [list(map(list, g)) for g in S.gluings],
    }
    return hashlib.sha256(json.dumps(record, sort_keys=True).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# billiard counts


def _interior_counts_by_length(
    P: PolygonSpec, max_length: int, conventions: DiagonalConventions, config, workers, node_budget
) -> np.ndarray:
    """Interior diagonals per combinatorial length 0..max_length."""
    shift = 1 if conventions.count_links else 0
    out = np.zeros(max_length + 1, dtype=np.int64)
    max_bounces = max_length - shift
    if max_bounces < 0:
        return out
    if conventions.oriented:
        counts, _, _ = diagonal_counts_by_bounces(P, max_bounces, config, workers, node_budget)
        out[shift:] = counts
        return out
    interior = DiagonalConventions(False, False, conventions.count_links)
    for d in enumerate_diagonals(P, max_bounces, interior, config, workers, node_budget):
        out[d.bounce_count + shift] += 1
    return out


def diagonal_count_table(
    P: PolygonSpec,
    n_max: int,
    conventions: DiagonalConventions = CALIBRATED_CONVENTIONS,
    config: PrecisionConfig = DEFAULT_PRECISION,
    workers: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> np.ndarray:
    """N(0), ..., N(n_max) under the given conventions."""
    per_length = _interior_counts_by_length(P, n_max, conventions, config, workers, node_budget)
    cumulative = np.cumsum(per_length)
    if conventions.include_boundary:
        cumulative += P.n
    return cumulative


def count_diagonals(
    P: PolygonSpec,
    n: int,
    conventions: DiagonalConventions = CALIBRATED_CONVENTIONS,
    config: PrecisionConfig = DEFAULT_PRECISION,
    workers: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> int:
    """Generalized diagonals of combinatorial length at most ``n``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return int(diagonal_count_table(P, n, conventions, config, workers, node_budget)[n])


def rho_from_counts(table: Sequence[int], t: int) -> int:
    """Σ_{m=0}^{t−1} N(m)."""
    return int(sum(int(x) for x in table[:t]))


def complexity_rho(
    P: PolygonSpec,
    t: int,
    conventions: DiagonalConventions = CALIBRATED_CONVENTIONS,
    config: PrecisionConfig = DEFAULT_PRECISION,
    workers: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> int:
    """Number of length-t words of the billiard language, via
    ρ(t) = Σ_{m=0}^{t−1} N(m)."""
    if t < 1:
        raise ValueError("t must be >= 1")
    table = diagonal_count_table(P, t - 1, conventions, config, workers, node_budget)
    return rho_from_counts(table, t)


def _metadata(P_or_S, conventions=None, config=DEFAULT_PRECISION, **extra) -> dict:
    meta = {"config": config.to_dict()}
    if isinstance(P_or_S, PolygonSpec):
        meta["polygon"] = P_or_S.name
        meta["spec_hash"] = polygon_hash(P_or_S)
    else:
        meta["surface"] = P_or_S.name
        meta["spec_hash"] = surface_hash(P_or_S)
    if conventions is not None:
        meta["conventions"] = conventions.to_dict()
    meta.update(extra)
    return meta


def diagonal_series(
    P: PolygonSpec,
    n_max: int,
    conventions: DiagonalConventions = CALIBRATED_CONVENTIONS,
    config: PrecisionConfig = DEFAULT_PRECISION,
    workers: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> CountSeries:
    table = diagonal_count_table(P, n_max, conventions, config, workers, node_budget)
    series = CountSeries("diagonals-by-bounce", [], _metadata(P, conventions, config, n_max=n_max))
    series.rows = [(n, int(table[n]), series.normalize(n, int(table[n]))) for n in range(n_max + 1)]
    return series


def complexity_series(
    P: PolygonSpec,
    t_max: int,
    conventions: DiagonalConventions = CALIBRATED_CONVENTIONS,
    config: PrecisionConfig = DEFAULT_PRECISION,
    workers: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> CountSeries:
    table = diagonal_count_table(P, t_max - 1, conventions, config, workers, node_budget)
    rho = np.cumsum(table)
    series = CountSeries("complexity-by-word-length", [], _metadata(P, conventions, config, t_max=t_max))
    series.rows = [(t, int(rho[t - 1]), series.normalize(t, int(rho[t - 1]))) for t in range(1, t_max + 1)]
    return series


# ---------------------------------------------------------------------------
# sampling oracle

SAMPLE_GRID = 64  # per side and batch: SAMPLE_GRID × SAMPLE_GRID jittered cells


@dataclass(frozen=True)
class WordSample:
    word: tuple[str, ...]
    witness: tuple[int, tuple[float, float], tuple[float, float]]  # (side, point, direction)


def _simulate(P: PolygonSpec, side: np.ndarray, point: np.ndarray, direction: np.ndarray, t: int) -> np.ndarray:
    """Side indices of the first t hits, starting with the launch side."""
    verts = np.array([p.as_tuple() for p in P.vertices])
    n = P.n
    A = verts
    E = np.roll(verts, -1, axis=0) - verts
    count = len(side)
    words = np.empty((count, t), dtype=np.int64)
    words[:, 0] = side
    cur = side.copy()
    pos, dirn = point.copy(), direction.copy()
    for step in range(1, t):
        best = np.full(count, np.inf)
        best_side = np.full(count, -1, dtype=np.int64)
        for j in range(n):
            e = E[j]
            denom = dirn[:, 0] * e[1] - dirn[:, 1] * e[0]
            rel = A[j] - pos
            with np.errstate(divide="ignore", invalid="ignore"):
                s_ray = (rel[:, 0] * e[1] - rel[:, 1] * e[0]) / denom
                s_seg = (rel[:, 0] * dirn[:, 1] - rel[:, 1] * dirn[:, 0]) / denom
            good = (cur != j) & (s_ray > 0) & (s_seg >= 0) & (s_seg <= 1) & (denom != 0)
            better = good & (s_ray < best)
            best = np.where(better, s_ray, best)
            best_side = np.where(better, j, best_side)
        pos = pos + best[:, None] * dirn
        e = E[best_side]
        e = e / np.linalg.norm(e, axis=1)[:, None]
        dirn = 2 * (dirn * e).sum(axis=1)[:, None] * e - dirn
        cur = best_side
        words[:, step] = best_side
    return words


def _launch(P: PolygonSpec, side: int, u: np.ndarray, phi: np.ndarray):
    a, b = P.vertices[side], P.vertices[(side + 1) % P.n]
    d = np.array([b.x - a.x, b.y - a.y])
    length = np.hypot(*d)
    d = d / length
    inward = np.array([-d[1], d[0]])
    point = np.array([a.x, a.y]) + (u * length)[:, None] * d
    direction = np.cos(phi)[:, None] * d + np.sin(phi)[:, None] * inward
    return point, direction


def _batch(P: PolygonSpec, t: int, seed_seq: np.random.SeedSequence):
    rng = np.random.default_rng(seed_seq)
    g = SAMPLE_GRID
    cells = np.arange(g)
    sides, points, dirs = [], [], []
    for s in range(P.n):
        jitter = rng.random((2, g, g))
        u = ((cells[:, None] + jitter[0]) / g).ravel()
        phi = ((cells[None, :] + jitter[1]) / g * math.pi).ravel()
        point, direction = _launch(P, s, u, phi)
        sides.append(np.full(len(u), s, dtype=np.int64))
        points.append(point)
        dirs.append(direction)
    side = np.concatenate(sides)
    point = np.concatenate(points)
    direction = np.concatenate(dirs)
    return side, point, direction


def sampled_word_count(
    P: PolygonSpec, t: int, num_samples: int = 10**6, rng_seed: int = 0
) -> tuple[int, list[WordSample]]:
    """Distinct length-t bounce words among ``num_samples`` launches.

    Launches come in batches; each batch puts a jittered position × angle
    grid on every side, with jitter drawn from a per-batch child of the
    master seed.  The first ``num_samples`` launches of this fixed sequence
    are used, so a larger budget always sees a superset of launches and the
    count is non-decreasing in ``num_samples``.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    per_batch = SAMPLE_GRID * SAMPLE_GRID * P.n
    batches = max(1, math.ceil(num_samples / per_batch))
    seeds = np.random.SeedSequence(rng_seed).spawn(batches)
    remaining = num_samples
    found: dict[tuple[int, ...], WordSample] = {}
    for seq in seeds:
        side, point, direction = _batch(P, t, seq)
        take = min(remaining, len(side))
        side, point, direction = side[:take], point[:take], direction[:take]
        remaining -= take
        words = _simulate(P, side, point, direction, t)
        _, first = np.unique(words, axis=0, return_index=True)
        for i in np.sort(first):
            key = tuple(int(x) for x in words[i])
            if key not in found:
                witness = (int(side[i]), (float(point[i, 0]), float(point[i, 1])), (float(direction[i, 0]), float(direction[i, 1])))
                found[key] = WordSample(tuple(P.side_labels[x] for x in key), witness)
        if remaining <= 0:
            break
    samples = sorted(found.values(), key=lambda w: w.word)
    return len(samples), samples


def replay_word(P: PolygonSpec, witness, t: int) -> tuple[str, ...]:
    side, point, direction = witness
    words = _simulate(P, np.array([side]), np.array([point], dtype=float), np.array([direction], dtype=float), t)
    return tuple(P.side_labels[x] for x in words[0])


def saturated_word_count(
    P: PolygonSpec, t: int, rng_seed: int = 0, start: int = 10**5, max_samples: int = 4 * 10**6
) -> int:
    """Double the sample budget until the word count repeats twice."""
    budget, history = start, []
    while True:
        count, _ = sampled_word_count(P, t, budget, rng_seed)
        history.append(count)
        if len(history) >= 3 and history[-1] == history[-2] == history[-3]:
            return count
        if budget >= max_samples:
            return count
        budget *= 2


# ---------------------------------------------------------------------------
# calibration


ALL_CONVENTIONS = tuple(DiagonalConventions(o, b, s) for o, b, s in itertools.product((True, False), repeat=3))


@dataclass
class CalibrationResult:
    conventions: DiagonalConventions
    admissible: list[DiagonalConventions]
    table: list[dict]

    def to_dict(self) -> dict:
        return {
            "conventions": self.conventions.to_dict(),
            "admissible": [c.to_dict() for c in self.admissible],
            "table": self.table,
        }


def calibrate_conventions(
    polygons: Sequence[PolygonSpec],
    t_max: int = 6,
    rng_seed: int = 0,
    config: PrecisionConfig = DEFAULT_PRECISION,
    sampled: dict | None = None,
) -> CalibrationResult:
    """Find the counting conventions under which Σ_{m<t} N(m) reproduces the
    saturated sampled word count for every t ≤ t_max and every polygon.

    ``sampled`` may carry precomputed saturated counts keyed by
    (polygon name, t).
    """
    if not polygons:
        raise CalibrationFailed("calibration needs at least one polygon", table=[])
    targets = {}
    for P in polygons:
        for t in range(1, t_max + 1):
            key = (P.name, t)
            targets[key] = sampled[key] if sampled and key in sampled else saturated_word_count(P, t, rng_seed)
    table, admissible = [], []
    for conv in ALL_CONVENTIONS:
        ok = True
        for P in polygons:
            counts = diagonal_count_table(P, t_max - 1, conv, config)
            for t in range(1, t_max + 1):
                predicted = rho_from_counts(counts, t)
                target = targets[(P.name, t)]
                table.append({"conventions": conv.to_dict(), "polygon": P.name, "t": t, "predicted": predicted, "sampled": target})
                ok &= predicted == target
        if ok:
            admissible.append(conv)
    if not admissible:
        raise CalibrationFailed("no convention reproduces the sampled word counts", table=table)
    return CalibrationResult(admissible[0], admissible, table)


# ---------------------------------------------------------------------------
# surface series


def threshold_grid(L_max: float, L_min: float, integer: bool = False) -> list[float]:
    """Thresholds L_max·2^(−i/4) down to L_min, ascending."""
    out = []
    i = 0
    while True:
        value = L_max * GRID_RATIO ** (-i)
        if value < L_min * (1 - 1e-12):
            break
        out.append(value)
        i += 1
    if integer:
        out = sorted({int(math.floor(v + 1e-9)) for v in out if v >= 1})
        return out
    return sorted(out)


def regularized_floor(S: SurfaceSpec) -> float:
    """min over unit vectors u of Σ_j |u ∧ z_j| / area; attained along a z_j."""
    Z = np.array([cls.holonomy.as_tuple() for cls in S.filling_system])
    unit = Z / np.hypot(Z[:, 0], Z[:, 1])[:, None]
    values = np.abs(unit[:, None, 0] * Z[None, :, 1] - unit[:, None, 1] * Z[None, :, 0]).sum(axis=1)
    return float(values.min()) / math.sqrt(S.area)


def sc_count_series(
    S: SurfaceSpec,
    L_max: float,
    length_kind: str = "combinatorial",
    L_min: float | None = None,
    config: PrecisionConfig = DEFAULT_PRECISION,
    workers: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
    oriented: bool = False,
    include_sides: bool = True,
) -> CountSeries:
    """Saddle-connection counts at geometrically spaced thresholds.

    ``length_kind`` is one of combinatorial, geometric, regularized; lengths
    are taken at area one.  Combinatorial counts are normalized by L², the
    geometric ones by πL², the regularized ones by L².
    """
    if not L_max > 0:
        raise ValueError("L_max must be positive")
    meta = _metadata(S, None, config, length_kind=length_kind, L_max=L_max, oriented=oriented, include_sides=include_sides)
    if length_kind == "combinatorial":
        top = int(math.floor(L_max + 1e-9))
        grid = threshold_grid(L_max, L_min if L_min is not None else max(1.0, L_max / 16), integer=True)
        counts, stats = surface_counts_by_crossings(S, top, config, workers, node_budget, include_sides, oriented)
        cumulative = np.cumsum(counts)
        series = CountSeries("sc-by-combinatorial", [], meta)
        series.rows = [(L, int(cumulative[L]), series.normalize(L, int(cumulative[L]))) for L in grid]
    elif length_kind in ("geometric", "regularized"):
        grid = threshold_grid(L_max, L_min if L_min is not None else L_max / 16)
        if length_kind == "geometric":
            hol, _, stats = surface_holonomies(S, L_max, config, workers, node_budget, include_sides, oriented)
            lengths = np.hypot(hol[:, 0], hol[:, 1]) / math.sqrt(S.area)
            kind = "sc-by-geometric"
        else:
            reach = L_max / regularized_floor(S)
            hol, _, stats = surface_holonomies(S, reach, config, workers, node_budget, include_sides, oriented)
            lengths = _regularized_array(hol, S)
            kind = "sc-by-regularized"
        lengths = np.sort(lengths)
        series = CountSeries(kind, [], meta)
        series.rows = []
        for L in grid:
            c = int(np.searchsorted(lengths, L, side="right"))
            series.rows.append((L, c, series.normalize(L, c)))
    else:
        raise ValueError(f"unknown length kind {length_kind!r}")
    series.metadata["enumeration"] = stats.to_dict()
    return series
