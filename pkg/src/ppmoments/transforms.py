"""Hull-conditioned random transformation of planar configurations.

The transformation is parameterized by the extremal vertices of the convex
hull of the configuration restricted to the closed unit disk. Points outside
the open hull interior (including the extremal vertices themselves and
everything outside the disk) are left fixed; interior points are moved by an
area-preserving star rotation about the vertex centroid.

The star rotation works in cumulative-sector-area coordinates. Writing a
point as anchor + rho * u(phi), with R(phi) the distance from the anchor to
the hull boundary along angle phi and Acum(phi) the area swept from a fixed
reference angle, the map sends

    Acum(phi') = (Acum(phi) + offset * T) mod T,   rho' = rho * R(phi')/R(phi)

with T the hull area. In the coordinates (s, t) = (Acum(phi), (rho/R(phi))^2)
the Lebesgue area element is exactly ds dt, and the map is a translation in
s, so it preserves area on the hull interior. Because the hull boundary is
polygonal every sector area is a triangle area, so both Acum and its
inverse are closed-form per edge.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as _iter_product
from typing import Sequence

import numpy as np
from scipy import stats as _scipy_stats

from .difference_ops import cover_condition_holds
from .montecarlo import Window

Configuration = frozenset

_TWO_PI = 2.0 * math.pi
_ORIENT_FILTER = 1e-12
MAX_CONDITION_TUPLE = 3


@dataclass(frozen=True)
class TransformSpec:
    """Fraction of the total hull area by which interior points rotate."""

    rotation_offset: float

    def __post_init__(self):
        if not 0.0 <= self.rotation_offset < 1.0:
            raise ValueError("rotation_offset must lie in [0, 1)")


# -- robust planar primitives --------------------------------------------------


def orientation(a, b, c) -> int:
    """Sign of the cross product (b - a) x (c - a).

    +1 for a counterclockwise turn, -1 for clockwise, 0 for collinear.
    A float filter handles the generic case; near-degenerate inputs fall
    back to exact rational arithmetic (float -> Fraction is lossless).
    """
    t1 = (b[0] - a[0]) * (c[1] - a[1])
    t2 = (b[1] - a[1]) * (c[0] - a[0])
    det = t1 - t2
    magnitude = abs(t1) + abs(t2)
    if abs(det) > _ORIENT_FILTER * magnitude:
        return 1 if det > 0.0 else -1
    if magnitude == 0.0:
        return 0
    bax = Fraction(b[0]) - Fraction(a[0])
    bay = Fraction(b[1]) - Fraction(a[1])
    cax = Fraction(c[0]) - Fraction(a[0])
    cay = Fraction(c[1]) - Fraction(a[1])
    exact = bax * cay - bay * cax
    if exact > 0:
        return 1
    if exact < 0:
        return -1
    return 0


def convex_hull(points) -> list:
    """Extreme points of the convex hull, counterclockwise.

    Monotone chain with strict turns: collinear boundary points are dropped,
    so only true extreme points survive. Starts at the lexicographically
    smallest vertex. Returns fewer than 3 points for degenerate input.
    """
    pts = sorted(set(points))
    if len(pts) < 3:
        return pts
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and orientation(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and orientation(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


# -- hull frame ---------------------------------------------------------------


class HullFrame:
    """Geometry of one hull: extremal vertices, anchor, sector-area tables."""

    def __init__(self, extremal_vertices: tuple):
        if len(extremal_vertices) < 3:
            raise ValueError("a hull frame needs at least 3 vertices")
        self.extremal_vertices = tuple(extremal_vertices)
        n = len(self.extremal_vertices)
        ax = sum(p[0] for p in self.extremal_vertices) / n
        ay = sum(p[1] for p in self.extremal_vertices) / n
        self.anchor = (ax, ay)
        self._rel = [(p[0] - ax, p[1] - ay) for p in self.extremal_vertices]
        theta0 = math.atan2(self._rel[0][1], self._rel[0][0])
        self._theta0 = theta0
        deltas = [0.0]
        for rx, ry in self._rel[1:]:
            deltas.append((math.atan2(ry, rx) - theta0) % _TWO_PI)
        self._deltas = deltas
        tri = []
        for i in range(n):
            a = self._rel[i]
            b = self._rel[(i + 1) % n]
            value = 0.5 * (a[0] * b[1] - a[1] * b[0])
            if not value > 0.0:
                raise ValueError("degenerate hull sector")
            tri.append(value)
        self._tri = tri
        cum = [0.0]
        for value in tri:
            cum.append(cum[-1] + value)
        self._cum = cum
        self.total_area = cum[-1]

    @property
    def n_vertices(self) -> int:
        return len(self.extremal_vertices)

    def _locate(self, phi: float):
        """Edge index and boundary point for the ray at angle phi."""
        delta = (phi - self._theta0) % _TWO_PI
        i = bisect_right(self._deltas, delta) - 1
        if i >= len(self._rel):
            i = len(self._rel) - 1
        a = self._rel[i]
        b = self._rel[(i + 1) % len(self._rel)]
        ex = b[0] - a[0]
        ey = b[1] - a[1]
        ux = math.cos(phi)
        uy = math.sin(phi)
        denom = ux * ey - uy * ex
        t = (a[0] * ey - a[1] * ex) / denom
        return i, (t * ux, t * uy)

    def boundary_radius(self, phi: float) -> float:
        """Distance from the anchor to the hull boundary along angle phi."""
        _, (bx, by) = self._locate(phi)
        return math.hypot(bx, by)

    def sector_area(self, phi: float) -> float:
        """Area swept counterclockwise from the reference vertex to phi."""
        i, (bx, by) = self._locate(phi)
        a = self._rel[i]
        return self._cum[i] + 0.5 * (a[0] * by - a[1] * bx)

    def _boundary_from_area(self, s: float):
        """Boundary point whose cumulative sector area equals s."""
        j = bisect_right(self._cum, s) - 1
        if j >= len(self._tri):
            j = len(self._tri) - 1
        a = self._rel[j]
        b = self._rel[(j + 1) % len(self._rel)]
        frac = (s - self._cum[j]) / self._tri[j]
        return (a[0] + frac * (b[0] - a[0]), a[1] + frac * (b[1] - a[1]))

    def contains_interior(self, point) -> bool:
        """Strict interior test; boundary points (vertices included) are out."""
        verts = self.extremal_vertices
        n = len(verts)
        px, py = point
        for i in range(n):
            ax, ay = verts[i]
            bx, by = verts[(i + 1) % n]
            if (bx - ax) * (py - ay) - (by - ay) * (px - ax) <= 0.0:
                return False
        return True


def hull_frame(config) -> HullFrame | None:
    """Hull frame of the configuration restricted to the closed unit disk.

    Returns None when fewer than 3 extreme points exist (the transformation
    is then the identity everywhere).
    """
    candidates = [p for p in config if p[0] * p[0] + p[1] * p[1] <= 1.0]
    if len(candidates) < 3:
        return None
    hull = convex_hull(candidates)
    if len(hull) < 3:
        return None
    return HullFrame(tuple(hull))


# -- the transformation ---------------------------------------------------------


def _apply_in_frame(frame: HullFrame, offset: float, point):
    if offset == 0.0 or frame is None:
        return point
    if not frame.contains_interior(point):
        return point
    ax, ay = frame.anchor
    rx = point[0] - ax
    ry = point[1] - ay
    rho = math.hypot(rx, ry)
    if rho == 0.0:
        return point
    phi = math.atan2(ry, rx)
    i, (bx, by) = frame._locate(phi)
    radius = math.hypot(bx, by)
    a = frame._rel[i]
    s = frame._cum[i] + 0.5 * (a[0] * by - a[1] * bx)
    total = frame.total_area
    target = (s + offset * total) % total
    if target >= total:
        target -= total
    nbx, nby = frame._boundary_from_area(target)
    scale = rho / radius
    return (ax + scale * nbx, ay + scale * nby)


def apply_tau(spec: TransformSpec, point, config) -> tuple:
    """Transform one point given the configuration.

    Identity when the hull frame is empty or the point is not strictly
    inside the hull; otherwise the area-preserving star rotation. The result
    depends on the configuration only through its extremal vertices.
    """
    if spec.rotation_offset == 0.0:
        return point
    return _apply_in_frame(hull_frame(config), spec.rotation_offset, point)


def _transform_points(spec: TransformSpec, points: Sequence) -> list:
    """Map a whole configuration with a single hull extraction."""
    if spec.rotation_offset == 0.0:
        return list(points)
    frame = hull_frame(points)
    if frame is None:
        return list(points)
    offset = spec.rotation_offset
    return [_apply_in_frame(frame, offset, p) for p in points]


def push_forward(spec: TransformSpec, config) -> Configuration:
    """Image configuration {tau(x, omega) : x in omega}.

    The star rotation is injective on the hull interior and everything else
    is fixed, so cardinality is preserved; a collision among images (which
    has probability zero in continuous data) raises an error.
    """
    images = _transform_points(spec, list(config))
    result = frozenset(images)
    if len(result) != len(images):
        raise ValueError("push-forward produced coinciding image points")
    return result


# -- condition checker ----------------------------------------------------------


_TEST_BOXES = (
    (-0.6, 0.0, -0.6, 0.0),
    (0.0, 0.6, 0.0, 0.6),
    (-0.3, 0.3, -0.3, 0.3),
)


def verify_transform_condition(
    spec: TransformSpec, config, points: Sequence, tol: float = 1e-9
) -> bool:
    """Check the vanishing-cover condition for the hull transformation.

    Runs cover_condition_holds over kernel families built from tau: both
    coordinate projections of tau(x, omega) in every combination across the
    tuple slots, and indicator compositions 1_B(tau(x, omega)) for a fixed
    family of test boxes. True iff every family passes at tolerance tol.
    """
    pts = tuple(points)
    m = len(pts)
    if not (1 <= m <= MAX_CONDITION_TUPLE):
        raise ValueError(f"tuple length must satisfy 1 <= m <= {MAX_CONDITION_TUPLE}")

    frames: dict = {}
    values: dict = {}

    def tau_value(x, cfg):
        key = (x, cfg)
        out = values.get(key)
        if out is None:
            frame = frames.get(cfg)
            if cfg not in frames:
                frame = hull_frame(cfg)
                frames[cfg] = frame
            if frame is None:
                out = x
            else:
                out = _apply_in_frame(frame, spec.rotation_offset, x)
            values[key] = out
        return out

    def coordinate_kernel(axis):
        def kernel(x, cfg):
            return tau_value(x, cfg)[axis]

        return kernel

    def box_kernel(box):
        x_min, x_max, y_min, y_max = box

        def kernel(x, cfg):
            tx, ty = tau_value(x, cfg)
            return 1.0 if x_min <= tx <= x_max and y_min <= ty <= y_max else 0.0

        return kernel

    coordinate_kernels = (coordinate_kernel(0), coordinate_kernel(1))
    box_kernels = tuple(box_kernel(box) for box in _TEST_BOXES)

    for assignment in _iter_product(coordinate_kernels, repeat=m):
        if not cover_condition_holds(list(assignment), pts, config, tol):
            return False
    for assignment in _iter_product(box_kernels, repeat=m):
        if not cover_condition_holds(list(assignment), pts, config, tol):
            return False
    return True


# -- fixed planar regions --------------------------------------------------------


@dataclass(frozen=True)
class Box:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("box must have positive extent")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def contains(self, point) -> bool:
        x, y = point
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def max_norm(self) -> float:
        return max(
            math.hypot(x, y)
            for x in (self.x_min, self.x_max)
            for y in (self.y_min, self.y_max)
        )


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("disk radius must be positive")

    @property
    def area(self) -> float:
        return math.pi * self.radius * self.radius

    def contains(self, point) -> bool:
        dx = point[0] - self.cx
        dy = point[1] - self.cy
        return dx * dx + dy * dy <= self.radius * self.radius

    def max_norm(self) -> float:
        return math.hypot(self.cx, self.cy) + self.radius


Region = Box | Disk


def region_from_config(config: dict) -> Region:
    """Parse {"type": "box", ...} or {"type": "disk", ...} region entries."""
    kind = config.get("type")
    if kind == "box":
        return Box(
            float(config["x_min"]),
            float(config["x_max"]),
            float(config["y_min"]),
            float(config["y_max"]),
        )
    if kind == "disk":
        return Disk(float(config["cx"]), float(config["cy"]), float(config["radius"]))
    raise ValueError(f"unknown region type {kind!r}")


def regions_disjoint(a: Region, b: Region) -> bool:
    if isinstance(a, Box) and isinstance(b, Box):
        return (
            a.x_max <= b.x_min
            or b.x_max <= a.x_min
            or a.y_max <= b.y_min
            or b.y_max <= a.y_min
        )
    if isinstance(a, Disk) and isinstance(b, Disk):
        return math.hypot(a.cx - b.cx, a.cy - b.cy) >= a.radius + b.radius
    if isinstance(a, Disk):
        a, b = b, a
    # a is a box, b a disk: compare the disk center's distance to the box
    nx = min(max(b.cx, a.x_min), a.x_max)
    ny = min(max(b.cy, a.y_min), a.y_max)
    return math.hypot(b.cx - nx, b.cy - ny) >= b.radius


# -- statistical reports ----------------------------------------------------------


@dataclass
class InvarianceReport:
    """Counts of the transformed process against the Poisson prediction."""

    offset: float
    intensity: float
    n_replicates: int
    seed: int
    gof: list = field(default_factory=list)
    covariances: list = field(default_factory=list)
    moments: list = field(default_factory=list)

    def passed(self, p_min: float = 1e-3, z_max: float = 4.0) -> bool:
        return (
            all(row["p_value"] >= p_min for row in self.gof)
            and all(abs(row["z"]) <= z_max for row in self.covariances)
            and all(abs(row["z"]) <= z_max for row in self.moments)
        )

    def to_dict(self) -> dict:
        return {
            "offset": self.offset,
            "intensity": self.intensity,
            "n_replicates": self.n_replicates,
            "seed": self.seed,
            "gof": self.gof,
            "covariances": self.covariances,
            "moments": self.moments,
        }


def poisson_count_gof(counts: np.ndarray, mean: float) -> tuple[float, int, float]:
    """Chi-square goodness of fit of integer counts to a Poisson law.

    Cells with expected count below 5 are pooled into their left neighbor,
    starting from the upper tail. Returns (statistic, dof, p_value).
    """
    n = counts.size
    top = int(counts.max())
    observed = np.bincount(counts, minlength=top + 2).astype(float)
    probs = np.array(
        [_scipy_stats.poisson.pmf(k, mean) for k in range(top + 1)]
        + [float(_scipy_stats.poisson.sf(top, mean))]
    )
    expected = n * probs
    obs_cells: list[float] = []
    exp_cells: list[float] = []
    for o, e in zip(observed, expected):
        obs_cells.append(o)
        exp_cells.append(e)
    # pool from the right until every cell expects at least 5
    i = len(exp_cells) - 1
    while i > 0:
        if exp_cells[i] < 5.0:
            exp_cells[i - 1] += exp_cells[i]
            obs_cells[i - 1] += obs_cells[i]
            del exp_cells[i], obs_cells[i]
        i -= 1
    if len(exp_cells) < 2:
        return 0.0, 0, 1.0
    stat = float(
        sum((o - e) ** 2 / e for o, e in zip(obs_cells, exp_cells) if e > 0.0)
    )
    dof = len(exp_cells) - 1
    p = float(_scipy_stats.chi2.sf(stat, dof))
    return stat, dof, p


def invariance_suite(
    spec: TransformSpec,
    window: Window,
    intensity: float,
    regions: Sequence[Region],
    n_replicates: int,
    seed: int,
) -> InvarianceReport:
    """Distribution test of the transformed Poisson process on fixed regions.

    Samples omega ~ Poisson(intensity) on the window, pushes it through the
    transformation and counts points in each region. Reports a chi-square
    goodness-of-fit of every region's count against Poisson(intensity *
    area), all pairwise count covariances with standard errors, and the
    factorial moments of orders 1..3 against (intensity * area)^n.
    """
    _validate_geometry(window, regions)
    counts = _transformed_counts(spec, window, intensity, regions, n_replicates, seed)
    report = InvarianceReport(
        spec.rotation_offset, intensity, n_replicates, seed
    )
    for index, region in enumerate(regions):
        mean = intensity * region.area
        stat, dof, p = poisson_count_gof(counts[:, index], mean)
        report.gof.append(
            {
                "region": index,
                "area": region.area,
                "target_mean": mean,
                "sample_mean": float(counts[:, index].mean()),
                "chi2": stat,
                "dof": dof,
                "p_value": p,
            }
        )
    centered = counts - counts.mean(axis=0, keepdims=True)
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            products = centered[:, i] * centered[:, j]
            cov = float(products.sum() / (n_replicates - 1))
            se = float(products.std(ddof=1) / math.sqrt(n_replicates))
            report.covariances.append(
                {"regions": [i, j], "covariance": cov, "se": se,
                 "z": cov / se if se > 0.0 else 0.0}
            )
    for index, region in enumerate(regions):
        mean = intensity * region.area
        for order in (1, 2, 3):
            values = _falling_values(counts[:, index], order)
            est = float(values.mean())
            se = float(values.std(ddof=1) / math.sqrt(n_replicates))
            target = mean**order
            report.moments.append(
                {
                    "region": index,
                    "order": order,
                    "estimate": est,
                    "se": se,
                    "target": target,
                    "z": (est - target) / se if se > 0.0 else 0.0,
                }
            )
    return report


@dataclass
class RhoTauReport:
    """First and second factorial moment measures of the transformed process
    on a grid of boxes, against the constant-correlation prediction."""

    offset: float
    intensity: float
    n_replicates: int
    seed: int
    first_moments: list = field(default_factory=list)
    second_moments: list = field(default_factory=list)

    def passed(self, z_max: float = 4.0) -> bool:
        return all(
            abs(row["z"]) <= z_max
            for row in self.first_moments + self.second_moments
        )

    def to_dict(self) -> dict:
        return {
            "offset": self.offset,
            "intensity": self.intensity,
            "n_replicates": self.n_replicates,
            "seed": self.seed,
            "first_moments": self.first_moments,
            "second_moments": self.second_moments,
        }


def rho_tau_check(
    spec: TransformSpec,
    window: Window,
    intensity: float,
    n_replicates: int,
    seed: int,
    grid_size: int = 3,
    grid_extent: float = 0.7,
) -> RhoTauReport:
    """Check that the transformed Poisson process keeps constant correlation.

    For a Poisson base process the transformed process has correlation
    function identically 1: mean counts of disjoint boxes must match
    intensity * area and product moments of box pairs must match the product
    of intensities. Boxes form a grid_size x grid_size grid inside the disk.
    """
    if grid_size < 1:
        raise ValueError("grid_size must be positive")
    if not 0.0 < grid_extent * math.sqrt(2.0) <= 1.0:
        raise ValueError("grid must stay inside the unit disk")
    step = 2.0 * grid_extent / grid_size
    boxes = [
        Box(
            -grid_extent + i * step,
            -grid_extent + (i + 1) * step,
            -grid_extent + j * step,
            -grid_extent + (j + 1) * step,
        )
        for i in range(grid_size)
        for j in range(grid_size)
    ]
    _validate_geometry(window, boxes)
    counts = _transformed_counts(spec, window, intensity, boxes, n_replicates, seed)
    report = RhoTauReport(spec.rotation_offset, intensity, n_replicates, seed)
    for index, box in enumerate(boxes):
        target = intensity * box.area
        values = counts[:, index].astype(float)
        est = float(values.mean())
        se = float(values.std(ddof=1) / math.sqrt(n_replicates))
        report.first_moments.append(
            {"box": index, "estimate": est, "target": target,
             "se": se, "z": (est - target) / se if se > 0.0 else 0.0}
        )
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            products = counts[:, i].astype(float) * counts[:, j].astype(float)
            target = intensity**2 * boxes[i].area * boxes[j].area
            est = float(products.mean())
            se = float(products.std(ddof=1) / math.sqrt(n_replicates))
            report.second_moments.append(
                {"boxes": [i, j], "estimate": est, "target": target,
                 "se": se, "z": (est - target) / se if se > 0.0 else 0.0}
            )
    return report


def _validate_geometry(window: Window, regions: Sequence[Region]):
    if not (
        window.x_min <= -1.0
        and window.x_max >= 1.0
        and window.y_min <= -1.0
        and window.y_max >= 1.0
    ):
        raise ValueError("window must contain the unit disk")
    for region in regions:
        if region.max_norm() > 1.0 + 1e-12:
            raise ValueError("regions must lie inside the unit disk")
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            if not regions_disjoint(regions[i], regions[j]):
                raise ValueError(f"regions {i} and {j} overlap")


def _transformed_counts(spec, window, intensity, regions, n_replicates, seed):
    """Counts of the pushed-forward Poisson sample in each region."""
    mean = intensity * window.area
    if not mean < 1e6:
        raise ValueError("intensity * area too large")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    width = window.x_max - window.x_min
    height = window.y_max - window.y_min
    counts = np.zeros((n_replicates, len(regions)), dtype=np.int64)
    for rep in range(n_replicates):
        n = int(rng.poisson(mean))
        coords = rng.random((n, 2))
        points = [
            (window.x_min + width * float(cx), window.y_min + height * float(cy))
            for cx, cy in coords
        ]
        images = _transform_points(spec, points)
        for index, region in enumerate(regions):
            counts[rep, index] = sum(1 for p in images if region.contains(p))
    return counts


def _falling_values(counts: np.ndarray, order: int) -> np.ndarray:
    values = np.ones(counts.shape, dtype=float)
    for k in range(order):
        values *= counts - k
    return values
