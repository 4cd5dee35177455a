# -*- coding: utf-8 -*-
# (c) 2024 The asp-toolbox authors
# License: GNU Affero General Public License, Version 3
import dataclasses
import logging
import math
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gamma

from asp_toolbox.model import Direction, EvaluationError, FunctionalValue, InputError

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi

DEFAULT_CIRCLE_SIZE = 512
DEFAULT_SPHERE3_LEVEL = 64
DEFAULT_MC_SIZE = 200_000
DEFAULT_ARC_ORDER = 32
DEFAULT_SEED = 7


def sphere_area(n: int) -> float:
    """
    Surface area of the unit sphere S^{n-1} in R^n.

        >>> round(sphere_area(3) / math.pi, 12)
        4.0
    """
    return float(2 * math.pi ** (n / 2) / gamma(n / 2))


def ball_volume(n: int) -> float:
    """
    Volume of the Euclidean unit ball in R^n.

        >>> ball_volume(1)
        2.0
        >>> round(ball_volume(2) / math.pi, 12)
        1.0
    """
    return float(math.pi ** (n / 2) / gamma(n / 2 + 1))


@dataclasses.dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    Nodes and positive weights on the unit sphere, weights summing to its area.
    """

    dimension: int
    nodes: np.ndarray
    weights: np.ndarray
    family: str
    size: int
    seed: Optional[int] = None
    breaks: Tuple[float, ...] = ()
    exactness_degree: Optional[int] = None

    def __post_init__(self):
        if self.nodes.ndim != 2 or self.nodes.shape[1] != self.dimension:
            raise InputError(f"Quadrature nodes have shape {self.nodes.shape}, expected (m, {self.dimension})")
        if len(self.weights) != len(self.nodes):
            raise InputError("Quadrature rule needs one weight per node")
        if not np.all(self.weights > 0):
            raise InputError("Quadrature weights must be positive")
        area = sphere_area(self.dimension)
        total = math.fsum(self.weights)
        if abs(total - area) > 1e-12 * area:
            raise InputError(f"Quadrature weights sum to {total!r}, expected {area!r}")

    @property
    def descriptor(self) -> str:
        if self.family == "circle":
            return f"circle(m={self.size})"
        if self.family == "sphere3":
            return f"sphere3(level={self.size})"
        if self.family == "arcs":
            return f"arcs(breaks={len(self.breaks)},order={self.size})"
        return f"mc(n={self.dimension},N={self.size},seed={self.seed})"

    @property
    def deterministic(self) -> bool:
        return self.family != "mc"

    def refine(self) -> "QuadratureRule":
        if self.family == "circle":
            return rule_circle(2 * self.size)
        if self.family == "sphere3":
            return rule_sphere3(2 * self.size)
        if self.family == "arcs":
            return rule_arcs(self.breaks, 2 * self.size)
        raise InputError("Monte Carlo rules do not refine")

    def directions(self) -> List[Direction]:
        return [Direction(tuple(node)) for node in self.nodes]

    def __len__(self):
        return len(self.nodes)

    def __repr__(self):
        return f"QuadratureRule({self.descriptor})"


def rule_circle(m: int) -> QuadratureRule:
    """
    Equally spaced angles on the circle, exact for trigonometric polynomials of degree m - 1.
    """
    m = int(m)
    if m < 4:
        raise InputError(f"Circle rule needs m >= 4 nodes, got {m}")
    theta = TWO_PI * np.arange(m) / m
    nodes = np.column_stack([np.cos(theta), np.sin(theta)])
    weights = np.full(m, TWO_PI / m)
    return QuadratureRule(2, nodes, weights, family="circle", size=m, exactness_degree=m - 1)


def rule_sphere3(level: int) -> QuadratureRule:
    """
    Product rule on S²: Gauss-Legendre in the cosine of the polar angle times
    2·level uniform azimuths. Exact for spherical polynomials of degree 2·level - 1.
    """
    level = int(level)
    if level < 4:
        raise InputError(f"Sphere rule needs level >= 4, got {level}")
    z, wz = leggauss(level)
    azimuths = 2 * level
    phi = TWO_PI * np.arange(azimuths) / azimuths
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    rr = np.sqrt(1.0 - zz**2)
    nodes = np.column_stack([(rr * np.cos(pp)).ravel(), (rr * np.sin(pp)).ravel(), zz.ravel()])
    weights = np.repeat(wz * TWO_PI / azimuths, azimuths)
    return QuadratureRule(3, nodes, weights, family="sphere3", size=level, exactness_degree=2 * level - 1)


def rule_mc(n: int, N: int, seed: int = DEFAULT_SEED) -> QuadratureRule:
    """
    Seeded Monte Carlo rule: normalized Gaussian directions with equal weights.
    """
    n, N = int(n), int(N)
    if n < 2:
        raise InputError(f"Monte Carlo rule needs dimension n >= 2, got {n}")
    if N < 1000:
        raise InputError(f"Monte Carlo rule needs N >= 1000 samples, got {N}")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((N, n))
    nodes = X / np.linalg.norm(X, axis=1)[:, None]
    weights = np.full(N, sphere_area(n) / N)
    return QuadratureRule(n, nodes, weights, family="mc", size=N, seed=seed)


def _normalize_breaks(breaks: Iterable[float]) -> Tuple[float, ...]:
    points = sorted({round(float(b) % TWO_PI, 15) for b in breaks})
    unique: List[float] = []
    for point in points:
        if not unique or point - unique[-1] > 1e-14:
            unique.append(point)
    if len(unique) > 1 and unique[0] + TWO_PI - unique[-1] <= 1e-14:
        unique.pop()
    return tuple(unique)


def rule_arcs(breaks: Sequence[float], order: int = DEFAULT_ARC_ORDER) -> QuadratureRule:
    """
    Piecewise Gauss-Legendre rule on the circle with `order` nodes on every arc
    between consecutive break angles.
    """
    order = int(order)
    if order < 2:
        raise InputError(f"Arc rule needs order >= 2, got {order}")
    points = _normalize_breaks(breaks)
    if not points:
        points = (0.0,)
    edges = np.array(points + (points[0] + TWO_PI,))
    x, w = leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    theta = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    nodes = np.column_stack([np.cos(theta), np.sin(theta)])
    return QuadratureRule(2, nodes, weights, family="arcs", size=order, breaks=points, exactness_degree=None)


def default_rule(n: int, size: Optional[int] = None, seed: int = DEFAULT_SEED) -> QuadratureRule:
    if n == 2:
        return rule_circle(size or DEFAULT_CIRCLE_SIZE)
    if n == 3:
        return rule_sphere3(size or DEFAULT_SPHERE3_LEVEL)
    return rule_mc(n, size or DEFAULT_MC_SIZE, seed)


def rule_for(bodies: Sequence, size: Optional[int] = None, seed: int = DEFAULT_SEED) -> QuadratureRule:
    """
    Pick the rule for integrands built from `bodies`: a piecewise arc rule when
    any of them has breakpoints, the default rule otherwise.
    """
    n = bodies[0].dimension
    points: List[float] = []
    for body in bodies:
        points.extend(body.breakpoints())
    if n == 2 and points:
        breaks = _normalize_breaks(points)
        order = DEFAULT_ARC_ORDER if size is None else max(16, int(size) // len(breaks))
        return rule_arcs(breaks, order)
    return default_rule(n, size, seed)


def _evaluate(rule: QuadratureRule, g: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    values = np.asarray(g(rule.nodes), dtype=float)
    if values.shape != (len(rule),):
        raise EvaluationError(f"Integrand returned shape {values.shape}, expected ({len(rule)},)")
    finite = np.isfinite(values)
    if not np.all(finite):
        index = int(np.argmin(finite))
        node = rule.nodes[index]
        raise EvaluationError(
            f"Integrand is not finite at node {node.tolist()}: {values[index]!r}", node=node
        )
    return values


def integrate(
    rule: QuadratureRule, g: Callable[[np.ndarray], np.ndarray], estimate_error: bool = True
) -> FunctionalValue:
    """
    Integrate the vectorized integrand `g` over the sphere.

    `g` receives the (m, n) array of nodes and returns m values. Deterministic
    rules estimate the error by comparing against the next finer rule, Monte
    Carlo rules report the sample standard error.
    """
    values = _evaluate(rule, g)
    terms = rule.weights * values
    total = math.fsum(terms)
    error = 64 * np.finfo(float).eps * math.fsum(np.abs(terms))
    if estimate_error:
        if rule.deterministic:
            finer = rule.refine()
            refined = math.fsum(finer.weights * _evaluate(finer, g))
            error += abs(refined - total)
        else:
            area = sphere_area(rule.dimension)
            error += area * float(np.std(values, ddof=1)) / math.sqrt(len(values))
    return FunctionalValue(total, error, rule.descriptor)
