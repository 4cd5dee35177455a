# -*- coding: utf-8 -*-
# (c) 2024 The asp-toolbox authors
# License: GNU Affero General Public License, Version 3
"""
Illumination surface bodies.

For a convex body K, a positive density f on its boundary and s >= 0, the
illumination surface body K^{f,s} collects the points x whose illuminated
boundary part, the portion of ∂K visible from x, has f-weighted measure at
most s. This module evaluates those measures, locates the boundary of K^{f,s}
along rays and estimates the volume difference |K^{f,s}| - |K| together with
its normalized limit for s -> 0.
"""
import abc
import logging
import math
from collections import OrderedDict
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize

from asp_toolbox.bodies import BodyModel, Ball, Polygon2D, angles_of, as_directions, normalize_rows, unit_vectors
from asp_toolbox.functionals import log_fp, parse_exponent
from asp_toolbox.model import (
    ConvergenceRecord,
    ConvergenceStudy,
    Direction,
    FunctionalValue,
    IlluminationSample,
    InputError,
    Membership,
    MembershipRow,
    NonconvexityCertificate,
    Unbounded,
    UnboundedBodyError,
    UnsupportedDimensionError,
    UnsupportedKindError,
)
from asp_toolbox.quadrature import (
    DEFAULT_ARC_ORDER,
    DEFAULT_CIRCLE_SIZE,
    DEFAULT_SEED,
    QuadratureRule,
    ball_volume,
    integrate,
    rule_arcs,
    rule_circle,
    rule_sphere3,
)

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi

# Ray search: the excess t - t0 starts at BRACKET_START * t0 and doubles up to BRACKET_CAP * t0.
BRACKET_START = 1e-3
BRACKET_CAP = 1e6
RELATIVE_TOLERANCE = 1e-12
MAX_BISECTIONS = 200

# Bisection steps locating the endpoints of the visible normal arc.
ENDPOINT_STEPS = 60

# Cumulative boundary measure table: uniform cells plus body and weight breakpoints.
MEASURE_CELLS = 64
MEASURE_ORDER = 32

DEFAULT_RAYS_2D = 128
DEFAULT_RAY_LEVEL_3D = 6
RHS_LEVEL_3D = 32
DEFAULT_SAMPLES = 200_000

DEFAULT_S_LIST = tuple(0.1 * 2.0**-k for k in range(7))

CHUNK_SIZE = 64

# Plausible range of the fitted order in the extrapolation to s -> 0.
MIN_ORDER = 0.1
MAX_ORDER = 20.0


class WeightField(abc.ABC):
    """
    A positive density f on the boundary of a body, addressed through outer normals.
    """

    kind = "weight"
    lower_bound: Optional[float] = None

    @abc.abstractmethod
    def density(self, K: BodyModel, U: np.ndarray) -> np.ndarray:
        """
        Evaluate f at the boundary points of K with outer normals U.
        """

    def discontinuities(self, K: BodyModel) -> Tuple[float, ...]:
        """
        Normal angles where the density jumps (planar bodies only).
        """
        return ()

    def edge_masses(self, K: Polygon2D) -> np.ndarray:
        """
        μ_f of every polygon edge.
        """
        return self.density(K, K.normals) * K.lengths

    def describe(self) -> OrderedDict:
        return OrderedDict(kind=self.kind)

    def __repr__(self):
        parameters = ", ".join(f"{key}={value!r}" for key, value in self.describe().items() if key != "kind")
        return f"{self.__class__.__name__}({parameters})"


class Constant(WeightField):
    kind = "constant"

    def __init__(self, c: float = 1.0):
        if not c > 0:
            raise InputError(f"Constant weight must be positive, got {c!r}")
        self.c = float(c)
        self.lower_bound = self.c

    def density(self, K, U):
        return np.full(len(U), self.c)

    def describe(self):
        return OrderedDict(kind=self.kind, c=self.c)


class PiecewiseEdge(WeightField):
    """
    Constant densities per polygon edge, keyed by the outer edge normal.
    """

    kind = "edges"

    def __init__(self, densities: Sequence[Tuple[Sequence[float], float]]):
        self.normals = []
        self.values = []
        for normal, value in densities:
            if not value > 0:
                raise InputError(f"Edge density must be positive, got {value!r}")
            self.normals.append(Direction.of(normal))
            self.values.append(float(value))
        if not self.values:
            raise InputError("Edge weights need at least one edge")
        self.lower_bound = min(self.values)

    def _lookup(self, normal: np.ndarray) -> float:
        for candidate, value in zip(self.normals, self.values):
            if np.allclose(candidate.vector, normal, atol=1e-9):
                return value
        raise InputError(f"No edge density given for the edge with normal {normal.tolist()}")

    def density(self, K, U):
        if not isinstance(K, Polygon2D):
            raise UnsupportedKindError(f"Edge weights need a polygon, got a {K.kind} body")
        return np.array([self._lookup(u) for u in U])

    def describe(self):
        return OrderedDict(
            kind=self.kind,
            weights=[[*normal.coords, value] for normal, value in zip(self.normals, self.values)],
        )


class QuadrantDisk(WeightField):
    """
    Density constant on each quadrant of the plane, the quadrant being the one
    of the boundary point. Values are given counterclockwise from the first quadrant.
    """

    kind = "quadrant"

    def __init__(self, values: Sequence[float]):
        values = [float(value) for value in values]
        if len(values) != 4 or not all(value > 0 for value in values):
            raise InputError(f"Quadrant weights need four positive values, got {values}")
        self.values = values
        self.lower_bound = min(values)

    def density(self, K, U):
        if K.dimension != 2:
            raise UnsupportedDimensionError("Quadrant weights are only available in the plane")
        X = K.boundary_points(U)
        quadrant = np.floor(np.mod(angles_of(X), TWO_PI) / (math.pi / 2)).astype(int) % 4
        return np.asarray(self.values)[quadrant]

    def discontinuities(self, K):
        axes = unit_vectors(np.arange(4) * math.pi / 2)
        return tuple(np.mod(angles_of(K.normal_at(axes)), TWO_PI).tolist())

    def describe(self):
        return OrderedDict(kind=self.kind, values=list(self.values))


class GpWeight(WeightField):
    """
    g_p = κ^{(n+2p-np)/(2(n+p))} ⟨x, N(x)⟩^{n(n-1)(p-1)/(2(n+p))}, the density
    whose volume limit is the L_p affine surface area.
    """

    kind = "gp"

    def __init__(self, p):
        p = parse_exponent(p)
        if not math.isfinite(p):
            raise InputError(f"GpWeight needs a finite exponent, got {p!r}")
        self.p = p

    def density(self, K, U):
        n, p = K.dimension, self.p
        if abs(n + p) < 1e-12:
            raise InputError(f"GpWeight is not defined for p = -n = {p!r}")
        kappa_exponent = (n + 2 * p - n * p) / (2 * (n + p))
        support_exponent = n * (n - 1) * (p - 1) / (2 * (n + p))
        log_kappa = -np.log(K.curvature_function(U))
        return np.exp(kappa_exponent * log_kappa + support_exponent * np.log(K.support(U)))

    def discontinuities(self, K):
        return tuple(K.breakpoints())

    def describe(self):
        return OrderedDict(kind=self.kind, p=self.p)


class SqrtKappa(WeightField):
    kind = "sqrt-kappa"

    def density(self, K, U):
        return 1.0 / np.sqrt(K.curvature_function(U))

    def discontinuities(self, K):
        return tuple(K.breakpoints())


class MixedWeight(WeightField):
    """
    f̃ = f_K^{(n-2)/2} [Π f_p(K_i, u)]^{(1-n)/(2(n+p))}, the density whose volume
    limit is the mixed p-affine surface area of `bodies`.
    """

    kind = "mixed"

    def __init__(self, bodies: Sequence[BodyModel], p):
        p = parse_exponent(p)
        if not bodies:
            raise InputError("MixedWeight needs bodies")
        n = bodies[0].dimension
        if len(bodies) != n or any(body.dimension != n for body in bodies):
            raise InputError(f"MixedWeight needs {n} bodies of dimension {n}")
        if not math.isfinite(p) or abs(n + p) < 1e-12:
            raise InputError(f"MixedWeight needs a finite exponent different from -n, got {p!r}")
        self.bodies = list(bodies)
        self.p = p

    def density(self, K, U):
        n, p = K.dimension, self.p
        log_product = sum(log_fp(body, p, U) for body in self.bodies)
        return np.exp((n - 2) / 2 * np.log(K.curvature_function(U)) + (1 - n) / (2 * (n + p)) * log_product)

    def discontinuities(self, K):
        breaks = set(K.breakpoints())
        for body in self.bodies:
            breaks.update(body.breakpoints())
        return tuple(sorted(breaks))

    def describe(self):
        return OrderedDict(kind=self.kind, p=self.p, bodies=[body.describe() for body in self.bodies])


def example_weights() -> PiecewiseEdge:
    """
    Densities on the boundary of the square [-1, 1]²: 1/12 on the top and
    right edges, 1/6 on the left and bottom edges.
    """
    return PiecewiseEdge([((0, 1), 1 / 12), ((1, 0), 1 / 12), ((-1, 0), 1 / 6), ((0, -1), 1 / 6)])


def quadrant_disk() -> QuadrantDisk:
    """
    Quadrant densities on the unit circle with total mass 1, producing a non-convex
    illumination surface body at s = 1/64.
    """
    return QuadrantDisk([1 / (4 * math.pi), 23 / (16 * math.pi), 1 / (4 * math.pi), 1 / (16 * math.pi)])


EXAMPLE_POINTS = [
    (0, 5), (0, -5), (5, 0), (-5, 0), (5, 5), (-2, 2),
    (-2, -2), (-2, 0.5), (2, 0.5), (0.5, 0.5), (2, 2), (-5, -5),
]  # fmt: skip

EXAMPLE_S_VALUES = [0.1, 0.2, 0.4, 0.55, 0.7]


class BoundaryMeasure:
    """
    Cumulative weighted boundary measure Φ(θ) = ∫_0^θ f f_K dθ of a planar body
    over the normal angle, unwrapped beyond [0, 2π).
    """

    def __init__(self, K: BodyModel, weight: WeightField):
        self.K = K
        self.weight = weight
        breaks = set(np.linspace(0.0, TWO_PI, MEASURE_CELLS, endpoint=False).tolist())
        breaks.update(np.mod(K.breakpoints(), TWO_PI).tolist())
        breaks.update(np.mod(weight.discontinuities(K), TWO_PI).tolist())
        edges = np.array(sorted(breaks))
        edges = edges[np.concatenate([[True], np.diff(edges) > 1e-14]) & (edges < TWO_PI - 1e-14)]
        self.edges = np.append(edges, TWO_PI)
        self.nodes, self.weights = leggauss(MEASURE_ORDER)
        cells = self._partial(self.edges[:-1], self.edges[1:])
        self.cumulative = np.concatenate([[0.0], np.cumsum(cells)])
        self.total = float(self.cumulative[-1])

    def integrand(self, theta: np.ndarray) -> np.ndarray:
        U = unit_vectors(theta)
        return self.weight.density(self.K, U) * self.K.curvature_function(U)

    def _partial(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        half = 0.5 * (b - a)
        theta = (a + half)[:, None] + half[:, None] * self.nodes[None, :]
        values = self.integrand(theta.ravel()).reshape(theta.shape)
        return half * (values @ self.weights)

    def __call__(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        turns = np.floor(theta / TWO_PI)
        reduced = theta - TWO_PI * turns
        cell = np.clip(np.searchsorted(self.edges, reduced, side="right") - 1, 0, len(self.edges) - 2)
        start = self.edges[cell]
        return turns * self.total + self.cumulative[cell] + self._partial(start, reduced)

    def arc(self, a, b) -> np.ndarray:
        return self(b) - self(a)


def _bisect_sign(g: Callable, negative: np.ndarray, positive: np.ndarray, steps: int = ENDPOINT_STEPS):
    """
    Locate the sign change of `g` between the arrays `negative` and `positive`.
    """
    for _ in range(steps):
        middle = 0.5 * (negative + positive)
        above = g(middle) > 0
        positive = np.where(above, middle, positive)
        negative = np.where(above, negative, middle)
    return 0.5 * (negative + positive)


class PlanarMeasure(abc.ABC):
    """
    Illuminated measure of a planar body, vectorized over points outside the body.
    """

    descriptor = ""

    @abc.abstractmethod
    def __call__(self, Z: np.ndarray) -> np.ndarray:
        pass


class EdgeMeasure(PlanarMeasure):
    """
    Polygons: an edge is illuminated from z iff ⟨z, n_e⟩ > h_e. Vertices carry no mass.
    """

    descriptor = "edges"

    def __init__(self, K: Polygon2D, weight: WeightField):
        self.normals = K.normals
        self.supports = K.supports
        self.masses = weight.edge_masses(K)

    def __call__(self, Z):
        visible = (Z @ self.normals.T) > self.supports
        return visible.astype(float) @ self.masses


class ArcMeasure(PlanarMeasure):
    """
    Smooth and piecewise smooth planar bodies: the illuminated normals form one
    arc around the normal at the boundary point in direction z; its endpoints
    are the tangent normals, ⟨z, u⟩ = h_K(u).
    """

    def __init__(self, K: BodyModel, weight: WeightField):
        self.K = K
        self.phi = BoundaryMeasure(K, weight)
        self.descriptor = f"arcs(cells={len(self.phi.edges) - 1},order={MEASURE_ORDER})"

    def endpoints(self, Z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        theta0 = angles_of(self.K.normal_at(normalize_rows(Z)))

        def excess(theta):
            U = unit_vectors(theta)
            return np.einsum("ij,ij->i", Z, U) - self.K.support(U)

        start = _bisect_sign(excess, theta0 - math.pi, theta0.copy())
        end = _bisect_sign(excess, theta0 + math.pi, theta0.copy())
        return start, end

    def __call__(self, Z):
        start, end = self.endpoints(Z)
        return self.phi.arc(start, end)


def planar_measure(K: BodyModel, weight: WeightField) -> PlanarMeasure:
    if K.dimension != 2:
        raise UnsupportedDimensionError(f"Planar illuminated measure needs n = 2, got {K.dimension}")
    if isinstance(K, Polygon2D):
        return EdgeMeasure(K, weight)
    return ArcMeasure(K, weight)


def _check_dimension(K: BodyModel):
    if K.dimension not in (2, 3):
        raise UnsupportedDimensionError(f"Illumination is implemented for n = 2 and n = 3, got n = {K.dimension}")


def _check_s(s: float) -> float:
    s = float(s)
    if not s >= 0:
        raise InputError(f"Illumination parameter s must be non-negative, got {s!r}")
    return s


class CapSampler:
    """
    Seeded Monte Carlo over a spherical cap around a ray in R³.

    For a point t·x̂ with t <= t_cover every illuminated normal u satisfies
    ⟨x̂, u⟩ > h_K(u) / t >= r_min / t_cover, so the cap with that opening
    holds the whole illuminated part. A sample u is illuminated from t·x̂
    exactly when t > τ(u) = h_K(u) / ⟨x̂, u⟩.
    """

    def __init__(self, K: BodyModel, weight: WeightField, samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED):
        if samples < 1000:
            raise InputError(f"Cap sampling needs at least 1000 samples, got {samples}")
        self.K = K
        self.weight = weight
        self.samples = int(samples)
        self.seed = int(seed)
        self.r_min = 0.999 * minimal_support(K)

    def draw(self, direction: np.ndarray, t_cover: float, key: Sequence[int]):
        """
        Return thresholds τ sorted ascending, the matching weights, and the cap area.
        """
        rng = np.random.default_rng([self.seed, *key])
        c = self.r_min / t_cover
        z = c + (1 - c) * rng.random(self.samples)
        phi = TWO_PI * rng.random(self.samples)
        e1, e2 = _orthonormal_complement(direction)
        radial = np.sqrt(np.clip(1 - z**2, 0.0, None))
        U = z[:, None] * direction + radial[:, None] * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2)
        area = TWO_PI * (1 - c)
        masses = self.weight.density(self.K, U) * self.K.curvature_function(U) * (area / self.samples)
        tau = self.K.support(U) / z
        order = np.argsort(tau, kind="stable")
        return tau[order], masses[order], area

    def measure(self, z: np.ndarray) -> FunctionalValue:
        norm = float(np.linalg.norm(z))
        direction = z / norm
        tau, masses, area = self.draw(direction, norm, (0,))
        values = np.where(tau < norm, masses, 0.0)
        error = float(np.std(values, ddof=1)) * math.sqrt(self.samples)
        return FunctionalValue(math.fsum(values), error, f"cap-mc(N={self.samples},seed={self.seed})")

    def solve(self, direction: np.ndarray, t0: float, s: float, ray: int = 0):
        """
        Boundary scale along one ray, with the scales of the two half samples.

        Returns (t_s, t_a, t_b, measure) or None when the bracket cap is reached.
        """
        excess = BRACKET_START * t0
        attempt = 0
        while excess <= BRACKET_CAP * t0:
            t_cover = t0 + excess
            tau, masses, _ = self.draw(direction, t_cover, (ray, attempt))
            covered = tau < t_cover
            if math.fsum(masses[covered]) > s:
                t_s, measure = _quantile(tau, masses, s)
                t_a, _ = _quantile(tau[0::2], 2 * masses[0::2], s, fallback=t_cover)
                t_b, _ = _quantile(tau[1::2], 2 * masses[1::2], s, fallback=t_cover)
                t_a, t_b = min(t_a, t_cover), min(t_b, t_cover)
                return max(t_s, t0), max(t_a, t0), max(t_b, t0), measure
            excess *= 2
            attempt += 1
        return None


def minimal_support(K: BodyModel) -> float:
    """
    min h_K over S², scanned on a product grid and polished with Nelder-Mead.
    """
    nodes = rule_sphere3(16).nodes
    values = K.support(nodes)
    best = int(np.argmin(values))

    def support(x):
        return float(K.support(x / np.linalg.norm(x)))

    result = minimize(support, nodes[best], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
    return min(float(result.fun), float(values[best]))


def _orthonormal_complement(direction: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    axis = np.eye(3)[int(np.argmin(np.abs(direction)))]
    e1 = np.cross(direction, axis)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(direction, e1)


def _quantile(tau: np.ndarray, masses: np.ndarray, s: float, fallback: float = math.nan):
    """
    The smallest threshold whose cumulative mass exceeds s, and the mass below it.
    """
    cumulative = np.cumsum(masses)
    index = int(np.searchsorted(cumulative, s, side="right"))
    if index >= len(tau):
        return fallback, float(cumulative[-1])
    below = float(cumulative[index - 1]) if index > 0 else 0.0
    return float(tau[index]), below


def solve_planar_rays(measure: PlanarMeasure, t0: np.ndarray, directions: np.ndarray, s: float):
    """
    Solve h_x̂(t) = s on many planar rays at once.

    The excess e = t - t0 is bracketed by doubling from BRACKET_START·t0 until
    the measure exceeds s, then bisected to relative RELATIVE_TOLERANCE.
    Returns the excess below the boundary (measure <= s there) and a mask of
    bounded rays.
    """
    count = len(t0)
    lower = np.zeros(count)
    upper = BRACKET_START * t0
    cap = BRACKET_CAP * t0
    bounded = np.ones(count, dtype=bool)
    if s == 0:
        return lower, bounded

    pending = np.arange(count)
    while pending.size:
        values = measure((t0[pending] + upper[pending])[:, None] * directions[pending])
        low = pending[values <= s]
        lower[low] = upper[low]
        upper[low] *= 2
        exhausted = upper[low] > cap[low]
        bounded[low[exhausted]] = False
        pending = low[~exhausted]

    active = np.flatnonzero(bounded)
    for _ in range(MAX_BISECTIONS):
        active = active[(upper[active] - lower[active]) > RELATIVE_TOLERANCE * upper[active]]
        if not active.size:
            break
        middle = 0.5 * (lower[active] + upper[active])
        values = measure((t0[active] + middle)[:, None] * directions[active])
        below = values <= s
        lower[active[below]] = middle[below]
        upper[active[~below]] = middle[~below]
    return lower, bounded


def _as_point(K: BodyModel, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (K.dimension,):
        raise InputError(f"Point dimension mismatch: expected {K.dimension}, got shape {z.shape}")
    return z


def illuminated_measure(
    K: BodyModel, weight: WeightField, z, samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED
) -> FunctionalValue:
    """
    μ_f of the part of ∂K illuminated from the point z outside K.
    """
    _check_dimension(K)
    z = _as_point(K, z)
    if K.contains(z):
        raise InputError(f"Point {z.tolist()} lies in the body, the illuminated measure is undefined")
    if K.dimension == 3:
        return CapSampler(K, weight, samples, seed).measure(z)
    measure = planar_measure(K, weight)
    value = float(measure(z[None, :])[0])
    return FunctionalValue(value, 64 * np.finfo(float).eps * max(value, 1.0), measure.descriptor)


def membership(
    K: BodyModel, weight: WeightField, s: float, x, samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED
) -> Membership:
    s = _check_s(s)
    x = _as_point(K, x)
    if K.contains(x):
        return Membership.INSIDE
    measure = illuminated_measure(K, weight, x, samples, seed).value
    return Membership.INSIDE if measure <= s else Membership.OUTSIDE


def membership_table(
    K: BodyModel, weight: WeightField, points: Sequence, s_values: Sequence[float]
) -> List[MembershipRow]:
    """
    Membership of every point for every s, ordered by s, then by point.
    """
    if K.dimension != 2:
        raise UnsupportedDimensionError("Membership tables are produced for planar bodies")
    measures = []
    for point in points:
        point = _as_point(K, point)
        measures.append(0.0 if K.contains(point) else illuminated_measure(K, weight, point).value)
    rows = []
    for s in s_values:
        s = _check_s(s)
        for point, measure in zip(points, measures):
            inside = measure <= s
            rows.append(
                MembershipRow(
                    x=float(point[0]),
                    y=float(point[1]),
                    s=s,
                    measure=measure,
                    membership=Membership.INSIDE if inside else Membership.OUTSIDE,
                )
            )
    return rows


def _directions(K: BodyModel, directions) -> np.ndarray:
    """
    Unit row vectors from Directions or vectors, or from a sequence of angles in the plane.
    """
    holds_directions = isinstance(directions, (list, tuple)) and bool(directions)
    holds_directions = holds_directions and isinstance(directions[0], Direction)
    if K.dimension == 2 and not holds_directions and not isinstance(directions, Direction):
        array = np.asarray(directions, dtype=float)
        if array.ndim <= 1:
            return unit_vectors(array)
    U, _ = as_directions(directions, K.dimension)
    return normalize_rows(U)


def _direction(K: BodyModel, direction) -> np.ndarray:
    """
    One unit vector from a Direction, a vector or a planar angle.
    """
    if isinstance(direction, Direction):
        return _directions(K, [direction])[0]
    array = np.asarray(direction, dtype=float)
    if array.ndim == 0:
        return _directions(K, [float(array)])[0]
    return _directions(K, array[None, :])[0]


def boundary_trace(
    K: BodyModel,
    weight: WeightField,
    s: float,
    directions,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    mapper: Callable = map,
) -> List[IlluminationSample]:
    """
    Locate the boundary of K^{f,s} along every ray in `directions` (unit
    vectors, or angles in the plane).
    """
    _check_dimension(K)
    s = _check_s(s)
    U = _directions(K, directions)
    t0 = K.radial(U)
    normals = _normals_or_none(K, U)
    if K.dimension == 2:
        measure = planar_measure(K, weight)
        excess, bounded = _solve_chunked(measure, t0, U, s, mapper)
        t_s = t0 + excess
        measures = np.zeros(len(U))
        if s > 0 and np.any(bounded):
            measures[bounded] = measure(t_s[bounded, None] * U[bounded])
        results = [
            (float(t_s[k]), float(measures[k])) if bounded[k] else None for k in range(len(U))
        ]
    else:
        sampler = CapSampler(K, weight, samples, seed)

        def solve(k):
            if s == 0:
                return float(t0[k]), 0.0
            solution = sampler.solve(U[k], float(t0[k]), s, ray=k)
            return None if solution is None else (solution[0], solution[3])

        results = list(mapper(solve, range(len(U))))

    samples_out = []
    for k, result in enumerate(results):
        direction = Direction.of(U[k])
        if result is None:
            samples_out.append(IlluminationSample(direction=direction, t0=float(t0[k]), t_s=Unbounded))
            continue
        t_s_k, measure_k = result
        delta = None
        if normals is not None:
            delta = (t_s_k - t0[k]) * float(U[k] @ normals[k])
        samples_out.append(
            IlluminationSample(direction=direction, t0=float(t0[k]), t_s=t_s_k, delta=delta, measure=measure_k)
        )
    return samples_out


def boundary_scale(
    K: BodyModel, weight: WeightField, s: float, direction, samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED
) -> IlluminationSample:
    """
    The scale t_s with t_s·x̂ on the boundary of K^{f,s}, or `Unbounded` when
    the ray never leaves K^{f,s} before the bracket cap.
    """
    x = _direction(K, direction)
    return boundary_trace(K, weight, s, x[None, :], samples=samples, seed=seed)[0]


def _normals_or_none(K: BodyModel, U: np.ndarray) -> Optional[np.ndarray]:
    try:
        return K.normal_at(U)
    except UnsupportedKindError:
        return None


def _solve_chunked(measure: PlanarMeasure, t0: np.ndarray, U: np.ndarray, s: float, mapper: Callable):
    chunks = [slice(start, start + CHUNK_SIZE) for start in range(0, len(t0), CHUNK_SIZE)]
    results = list(mapper(lambda chunk: solve_planar_rays(measure, t0[chunk], U[chunk], s), chunks))
    excess = np.concatenate([result[0] for result in results])
    bounded = np.concatenate([result[1] for result in results])
    return excess, bounded


def profile(
    K: BodyModel,
    weight: WeightField,
    direction,
    ts: Sequence[float],
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> np.ndarray:
    """
    The illuminated measure h_x̂(t) of the points t·x̂, zero inside K.
    """
    _check_dimension(K)
    x = _direction(K, direction)
    t0 = K.radial(x)
    values = []
    for t in ts:
        if t <= t0 * (1 + 1e-12):
            values.append(0.0)
        else:
            values.append(illuminated_measure(K, weight, t * x, samples, seed).value)
    return np.asarray(values)


def _power_excess(t0: np.ndarray, excess: np.ndarray, n: int) -> np.ndarray:
    """
    (t_s / t0)^n - 1 without cancellation for tiny excess.
    """
    return np.expm1(n * np.log1p(excess / t0))


def default_ray_rule(K: BodyModel, weight: WeightField) -> QuadratureRule:
    if K.dimension == 3:
        return rule_sphere3(DEFAULT_RAY_LEVEL_3D)
    breaks = set(K.breakpoints())
    breaks.update(weight.discontinuities(K) if not isinstance(K, Polygon2D) else ())
    if breaks:
        return rule_arcs(sorted(breaks), DEFAULT_ARC_ORDER)
    return rule_circle(DEFAULT_RAYS_2D)


def volume_difference(
    K: BodyModel,
    weight: WeightField,
    s: float,
    rule: Optional[QuadratureRule] = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    mapper: Callable = map,
    estimate_error: bool = True,
) -> FunctionalValue:
    """
    |K^{f,s}| - |K| by the radial formula.

    Smooth planar bodies integrate (1/n) h f_K [(t_s/t0)^n - 1] over normals,
    polygons and bodies in R³ integrate (1/n) t0^n [(t_s/t0)^n - 1] over ray
    directions. Raises UnboundedBodyError if any ray is unbounded.
    """
    _check_dimension(K)
    s = _check_s(s)
    rule = rule or default_ray_rule(K, weight)
    if rule.dimension != K.dimension:
        raise InputError(f"Rule dimension {rule.dimension} does not match body dimension {K.dimension}")
    if s == 0:
        return FunctionalValue(0.0, 0.0, rule.descriptor)
    if K.dimension == 3:
        return _spatial_volume_difference(K, weight, s, rule, samples, seed, mapper)
    if isinstance(K, Polygon2D):
        arms = unbounded_directions(K, weight, s)
        if len(arms):
            raise UnboundedBodyError(
                f"Illumination surface body is unbounded at s={s!r} along {arms.tolist()}", offending=[s]
            )

    measure = planar_measure(K, weight)
    value = _planar_volume_difference(K, measure, s, rule, mapper)
    error = RELATIVE_TOLERANCE * 10 * abs(value)
    if estimate_error and rule.deterministic:
        refined = _planar_volume_difference(K, measure, s, rule.refine(), mapper)
        error += abs(refined - value)
    return FunctionalValue(value, error, rule.descriptor)


def _planar_volume_difference(K: BodyModel, measure: PlanarMeasure, s: float, rule: QuadratureRule, mapper) -> float:
    n = 2
    U = rule.nodes
    if isinstance(measure, EdgeMeasure):
        t0 = K.radial(U)
        excess, bounded = _solve_chunked(measure, t0, U, s, mapper)
        _raise_unbounded(bounded, s)
        terms = t0**n * _power_excess(t0, excess, n) / n
    else:
        X = K.boundary_points(U)
        t0 = np.linalg.norm(X, axis=1)
        excess, bounded = _solve_chunked(measure, t0, X / t0[:, None], s, mapper)
        _raise_unbounded(bounded, s)
        terms = K.support(U) * K.curvature_function(U) * _power_excess(t0, excess, n) / n
    return math.fsum(rule.weights * terms)


def unbounded_directions(K: Polygon2D, weight: WeightField, s: float) -> np.ndarray:
    """
    Directions along which the illumination surface body of a polygon is unbounded.

    Far out along x̂ the visible edges are those with ⟨x̂, n_e⟩ > 0, and every
    nearer point sees a subset of them. That set is smallest on directions
    perpendicular to an edge normal, so only those and the normals are tested.
    """
    normals = K.normals
    perpendicular = normals[:, ::-1] * np.array([1.0, -1.0])
    candidates = np.vstack([normals, perpendicular, -perpendicular])
    asymptotic = (candidates @ normals.T > 1e-12).astype(float) @ weight.edge_masses(K)
    return candidates[asymptotic <= s]


def _raise_unbounded(bounded: np.ndarray, s: float):
    if not np.all(bounded):
        missing = int(np.count_nonzero(~bounded))
        raise UnboundedBodyError(
            f"Illumination surface body is unbounded at s={s!r}: {missing} rays never leave it",
            offending=[s],
        )


def _spatial_volume_difference(K, weight, s, rule, samples, seed, mapper) -> FunctionalValue:
    n = 3
    U = rule.nodes
    t0 = K.radial(U)
    sampler = CapSampler(K, weight, samples, seed)
    solutions = list(mapper(lambda k: sampler.solve(U[k], float(t0[k]), s, ray=k), range(len(U))))
    if any(solution is None for solution in solutions):
        _raise_unbounded(np.array([solution is not None for solution in solutions]), s)
    scales = np.array([solution[:3] for solution in solutions])

    def total(t_s):
        return math.fsum(rule.weights * t0**n * _power_excess(t0, t_s - t0, n) / n)

    value = total(scales[:, 0])
    error = 0.5 * abs(total(scales[:, 1]) - total(scales[:, 2]))
    return FunctionalValue(value, error, f"{rule.descriptor}+cap-mc(N={samples},seed={seed})")


def rhs_functional(K: BodyModel, weight: WeightField, rule: Optional[QuadratureRule] = None) -> FunctionalValue:
    """
    ∫ f_K^{(n-2)/(n-1)} f^{-2/(n-1)} dσ, the limit of c_n (|K^{f,s}| - |K|) / s^{2/(n-1)}.
    """
    _check_dimension(K)
    n = K.dimension
    if weight.lower_bound is not None and not weight.lower_bound > 0:
        raise InputError(f"Weight {weight!r} is not bounded below by a positive constant")
    if rule is None and n == 2:
        breaks = set(K.breakpoints()) | set(weight.discontinuities(K))
        rule = rule_arcs(sorted(breaks), DEFAULT_ARC_ORDER) if breaks else rule_circle(DEFAULT_CIRCLE_SIZE)
    elif rule is None:
        rule = rule_sphere3(RHS_LEVEL_3D)

    def integrand(U):
        density = weight.density(K, U)
        if not np.all(density > 0):
            raise InputError(f"Weight {weight!r} is not bounded below by a positive constant")
        return np.exp((n - 2) / (n - 1) * np.log(K.curvature_function(U)) - 2 / (n - 1) * np.log(density))

    return integrate(rule, integrand)


def limit_constant(n: int) -> float:
    """
    c_n = 2 |B^{n-1}|^{2/(n-1)}.

        >>> limit_constant(2)
        8.0
        >>> round(limit_constant(3) / math.pi, 12)
        2.0
    """
    return 2 * ball_volume(n - 1) ** (2 / (n - 1))


def richardson(records: Sequence[ConvergenceRecord]) -> Tuple[float, Optional[float], bool]:
    """
    Extrapolate the scaled ratios of the last three records to s -> 0,
    assuming R(s) = L + A s^q with a fitted order q.

    Returns (limit, order, extrapolated). Without a plausible order the
    smallest-s ratio is returned unchanged.
    """
    if len(records) < 3:
        return records[-1].scaled_ratio, None, False
    r1, r2, r3 = records[-3:]
    d1 = r1.scaled_ratio - r2.scaled_ratio
    d2 = r2.scaled_ratio - r3.scaled_ratio
    if not d1 * d2 > 0:
        return r3.scaled_ratio, None, False
    order = math.log(d1 / d2) / math.log(r1.s / r2.s)
    if not MIN_ORDER <= order <= MAX_ORDER:
        return r3.scaled_ratio, order, False
    limit = r3.scaled_ratio - d2 / ((r2.s / r3.s) ** order - 1)
    if not math.isfinite(limit):
        return r3.scaled_ratio, order, False
    return limit, order, True


def convergence_study(
    K: BodyModel,
    weight: WeightField,
    s_list: Sequence[float] = DEFAULT_S_LIST,
    rule: Optional[QuadratureRule] = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    mapper: Callable = map,
) -> ConvergenceStudy:
    """
    Scaled volume differences c_n (|K^{f,s}| - |K|) / s^{2/(n-1)} along a
    decreasing sequence of s, their extrapolated limit, and the limit functional.
    """
    _check_dimension(K)
    n = K.dimension
    s_list = [float(s) for s in s_list]
    if not s_list or any(s <= 0 for s in s_list) or any(b >= a for a, b in zip(s_list, s_list[1:])):
        raise InputError(f"Convergence study needs a decreasing list of positive s values, got {s_list}")
    c_n = limit_constant(n)
    differences = []
    offending = []
    for s in s_list:
        try:
            difference = volume_difference(K, weight, s, rule, samples=samples, seed=seed, mapper=mapper)
        except UnboundedBodyError:
            offending.append(s)
            continue
        differences.append((s, difference))
        log.debug(f"s={s!r}: volume difference {difference.value!r} ± {difference.abs_error:.3g}")
    if offending:
        raise UnboundedBodyError(
            f"Illumination surface body is unbounded for s in {offending}", offending=offending
        )

    rhs = rhs_functional(K, weight)
    records = []
    for s, difference in differences:
        scale = s ** (2 / (n - 1))
        records.append(
            ConvergenceRecord(
                s=s,
                volume_diff=difference.value,
                scaled_ratio=c_n * difference.value / scale,
                c_n=c_n,
                abs_error=c_n * difference.abs_error / scale,
                rhs=rhs.value,
            )
        )
    limit, order, extrapolated = richardson(records)
    flag = "" if extrapolated else "raw smallest-s ratio, fitted order implausible"
    return ConvergenceStudy(
        records=records, limit_estimate=limit, rhs=rhs, fitted_order=order, extrapolated=extrapolated, flag=flag
    )


def nonconvexity_certificate(s: float = 1 / 64) -> NonconvexityCertificate:
    """
    Exhibit two points of K^{f,s} for the unit disk with quadrant weights and
    a point on the segment between them outside K^{f,s}.

    Along directions with angle in [π/32, π/2 - π/32] the illuminated arc stays
    inside the first quadrant, so the boundary there is a circular arc of
    radius t_arc. The point Q on the positive axis lies beyond the tangent from
    that arc, hence the segment from an arc point A towards Q leaves the body.
    """
    K = Ball(1.0)
    weight = quadrant_disk()
    t_axis = boundary_scale(K, weight, s, (1.0, 0.0)).t_s
    t_diagonal = boundary_scale(K, weight, s, unit_vectors(math.pi / 4)[0]).t_s
    arc_angle = math.pi / 32
    t_arc = boundary_scale(K, weight, s, unit_vectors(arc_angle)[0]).t_s
    tangent_intercept = t_arc / math.cos(arc_angle)

    point_q = np.array([t_axis, 0.0])
    tangent_angle = math.acos(min(1.0, t_arc / t_axis))
    a_angle = 0.5 * (arc_angle + tangent_angle)
    point_a = boundary_scale(K, weight, s, unit_vectors(a_angle)[0]).t_s * unit_vectors(a_angle)[0]

    witness, fraction, witness_measure = point_a, math.nan, 0.0
    for fraction in np.round(np.arange(1, 11) * 0.05, 2):
        candidate = point_a + fraction * (point_q - point_a)
        witness_measure = illuminated_measure(K, weight, candidate).value
        witness = candidate
        if witness_measure > s:
            break

    chord_start = np.array([1.0, math.tan(arc_angle)])
    midpoint = 0.5 * (chord_start + np.array([t_axis, 0.0]))
    midpoint_measure = illuminated_measure(K, weight, midpoint).value
    certificate = NonconvexityCertificate(
        s=s,
        t_axis=t_axis,
        t_diagonal=t_diagonal,
        t_arc_start=t_arc,
        tangent_intercept=tangent_intercept,
        point_a=tuple(point_a.tolist()),
        point_q=tuple(point_q.tolist()),
        witness=tuple(witness.tolist()),
        witness_fraction=float(fraction),
        witness_measure=witness_measure,
        midpoint=tuple(midpoint.tolist()),
        midpoint_measure=midpoint_measure,
        midpoint_inside=midpoint_measure <= s,
    )
    log.info(f"Non-convexity certificate: certified={certificate.certified}")
    return certificate
