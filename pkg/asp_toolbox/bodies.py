# -*- coding: utf-8 -*-
# (c) 2024 The asp-toolbox authors
# License: GNU Affero General Public License, Version 3
"""
Convex bodies represented through evaluable geometric oracles.

All oracles are vectorized: they accept a single direction (a `Direction` or a
vector of length n) and return a float, or an array of shape (m, n) holding m
unit directions row-wise and return an array of length m.
"""
import abc
import functools
import logging
import math
from collections import OrderedDict
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull

from asp_toolbox.model import (
    AdmissibilityError,
    ApproximationError,
    BoundaryPoint,
    Direction,
    InputError,
    UnsupportedKindError,
)

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi


def as_directions(u, n: int) -> Tuple[np.ndarray, bool]:
    """
    Coerce input into an (m, n) array of directions.

    Returns the array and a flag telling whether a single direction was given.
    """
    if isinstance(u, Direction):
        array = u.vector
    elif isinstance(u, (list, tuple)) and u and isinstance(u[0], Direction):
        array = np.array([item.coords for item in u])
    else:
        array = np.asarray(u, dtype=float)
    single = array.ndim == 1
    array = np.atleast_2d(array)
    if array.ndim != 2 or array.shape[1] != n:
        raise InputError(f"Direction dimension mismatch: expected {n}, got shape {array.shape}")
    return array, single


def normalize_rows(X: np.ndarray) -> np.ndarray:
    return X / np.linalg.norm(X, axis=1)[:, None]


def angles_of(U: np.ndarray) -> np.ndarray:
    return np.arctan2(U[:, 1], U[:, 0])


def unit_vectors(theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return np.column_stack([np.cos(theta), np.sin(theta)])


def _check_matrix(T, n: Optional[int] = None) -> np.ndarray:
    T = np.array(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise InputError(f"Linear map must be a square matrix, got shape {T.shape}")
    if n is not None and T.shape[0] != n:
        raise InputError(f"Linear map of size {T.shape[0]} does not act on dimension {n}")
    det = np.linalg.det(T)
    if not np.isfinite(det) or abs(det) < 1e-12 * max(1.0, np.abs(T).max()) ** T.shape[0]:
        raise InputError(f"Linear map is singular (det={det!r})")
    return T


class BodyModel(abc.ABC):
    """
    A convex body with the origin in its interior, given by its oracles.
    """

    kind: str = "body"
    smooth: bool = True
    piecewise: bool = False

    def __init__(self, dimension: int):
        if dimension < 2:
            raise InputError(f"Bodies need dimension n >= 2, got {dimension}")
        self.dimension = dimension

    # Private vectorized oracles, operating on (m, n) arrays of unit vectors.

    @abc.abstractmethod
    def _support(self, U: np.ndarray) -> np.ndarray:
        pass

    @abc.abstractmethod
    def _radial(self, U: np.ndarray) -> np.ndarray:
        pass

    def _curvature(self, U: np.ndarray) -> np.ndarray:
        raise UnsupportedKindError(f"Curvature function is not defined for {self.kind} bodies")

    def _boundary(self, U: np.ndarray) -> np.ndarray:
        raise UnsupportedKindError(f"Boundary points by normal are not defined for {self.kind} bodies")

    def _normals(self, U: np.ndarray) -> np.ndarray:
        """
        Outer unit normals at the boundary points in directions U.
        """
        raise UnsupportedKindError(f"Normals are not available for {self.kind} bodies")

    # Public oracles.

    def support(self, u):
        U, single = as_directions(u, self.dimension)
        values = self._support(U)
        return float(values[0]) if single else values

    def curvature_function(self, u):
        U, single = as_directions(u, self.dimension)
        values = self._curvature(U)
        if not np.all(values > 0):
            index = int(np.argmin(values))
            raise AdmissibilityError(
                f"Curvature function of {self.kind} body is not positive at "
                f"u={U[index].tolist()}: {values[index]!r}"
            )
        return float(values[0]) if single else values

    def boundary_point(self, u) -> BoundaryPoint:
        U, single = as_directions(u, self.dimension)
        if not single:
            raise InputError("boundary_point expects a single direction, use boundary_points")
        x = self._boundary(U)[0]
        return BoundaryPoint(x=tuple(x), normal=Direction.of(U[0]), support_value=float(self._support(U)[0]))

    def boundary_points(self, U) -> np.ndarray:
        U, _ = as_directions(U, self.dimension)
        return self._boundary(U)

    def radial(self, u):
        U, single = as_directions(u, self.dimension)
        values = self._radial(U)
        return float(values[0]) if single else values

    def polar_support(self, u):
        return 1.0 / self.radial(u)

    def normal_at(self, u):
        U, single = as_directions(u, self.dimension)
        normals = self._normals(U)
        return Direction.of(normals[0]) if single else normals

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        norm = float(np.linalg.norm(x))
        if norm == 0.0:
            return True
        return norm <= self.radial(x / norm) * (1 + 1e-12)

    # Constructions.

    def polar_body(self) -> "BodyModel":
        raise UnsupportedKindError(f"Polar body is not available for {self.kind} bodies")

    def linear_image(self, T) -> "BodyModel":
        return LinearImage(self, T)

    def scaled(self, factor: float) -> "BodyModel":
        if not factor > 0:
            raise InputError(f"Scale factor must be positive, got {factor!r}")
        return self.linear_image(factor * np.eye(self.dimension))

    def breakpoints(self) -> Tuple[float, ...]:
        """
        Normal angles in [0, 2π) where the curvature function jumps (planar bodies only).
        """
        return ()

    def describe(self) -> OrderedDict:
        return OrderedDict(kind=self.kind, dimension=self.dimension)

    def __repr__(self):
        parameters = ", ".join(f"{key}={value!r}" for key, value in self.describe().items() if key != "kind")
        return f"{self.__class__.__name__}({parameters})"


class Ball(BodyModel):
    kind = "ball"

    def __init__(self, radius: float = 1.0, dimension: int = 2):
        super().__init__(dimension)
        if not radius > 0:
            raise InputError(f"Ball radius must be positive, got {radius!r}")
        self.radius = float(radius)

    def _support(self, U):
        return np.full(len(U), self.radius)

    def _curvature(self, U):
        return np.full(len(U), self.radius ** (self.dimension - 1))

    def _boundary(self, U):
        return self.radius * U

    def _radial(self, U):
        return np.full(len(U), self.radius)

    def _normals(self, U):
        return U.copy()

    def polar_body(self):
        return Ball(1.0 / self.radius, self.dimension)

    def linear_image(self, T):
        T = _check_matrix(T, self.dimension)
        return Ellipsoid(self.radius * T)

    def scaled(self, factor):
        if not factor > 0:
            raise InputError(f"Scale factor must be positive, got {factor!r}")
        return Ball(self.radius * factor, self.dimension)

    def describe(self):
        return OrderedDict(kind=self.kind, dimension=self.dimension, radius=self.radius)


class Ellipsoid(BodyModel):
    """
    The ellipsoid T·B, the image of the Euclidean unit ball under an invertible matrix T.
    """

    kind = "ellipsoid"

    def __init__(self, matrix):
        T = _check_matrix(matrix)
        super().__init__(T.shape[0])
        self.matrix = T
        self.inverse = np.linalg.inv(T)
        self.det = float(abs(np.linalg.det(T)))

    @classmethod
    def diag(cls, *axes: float) -> "Ellipsoid":
        if len(axes) == 1 and isinstance(axes[0], (list, tuple, np.ndarray)):
            axes = tuple(axes[0])
        return cls(np.diag([float(a) for a in axes]))

    def _support(self, U):
        return np.linalg.norm(U @ self.matrix, axis=1)

    def _curvature(self, U):
        return self.det**2 / np.linalg.norm(U @ self.matrix, axis=1) ** (self.dimension + 1)

    def _boundary(self, U):
        W = U @ self.matrix
        return (W @ self.matrix.T) / np.linalg.norm(W, axis=1)[:, None]

    def _radial(self, U):
        return 1.0 / np.linalg.norm(U @ self.inverse.T, axis=1)

    def _normals(self, U):
        return normalize_rows((U @ self.inverse.T) @ self.inverse)

    def polar_body(self):
        return Ellipsoid(self.inverse.T)

    def linear_image(self, T):
        T = _check_matrix(T, self.dimension)
        return Ellipsoid(T @ self.matrix)

    def scaled(self, factor):
        if not factor > 0:
            raise InputError(f"Scale factor must be positive, got {factor!r}")
        return Ellipsoid(factor * self.matrix)

    def describe(self):
        return OrderedDict(kind=self.kind, dimension=self.dimension, matrix=self.matrix.tolist())


class PlanarBody(BodyModel):
    """
    A planar body given by its support function h(θ) over the normal angle.

    Subclasses provide `_derivatives(theta)` returning (h, h', h'').
    """

    # Size of the lookup table used to invert the normal angle -> direction angle map.
    table_size = 4096

    def __init__(self):
        super().__init__(2)

    @abc.abstractmethod
    def _derivatives(self, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        pass

    def support_at(self, theta):
        return self._derivatives(np.atleast_1d(theta))[0]

    def curvature_at(self, theta):
        h, _, ddh = self._derivatives(np.atleast_1d(theta))
        return h + ddh

    def point_at(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        h, dh, _ = self._derivatives(theta)
        c, s = np.cos(theta), np.sin(theta)
        return np.column_stack([h * c - dh * s, h * s + dh * c])

    def _support(self, U):
        return self.support_at(angles_of(U))

    def _curvature(self, U):
        return self.curvature_at(angles_of(U))

    def _boundary(self, U):
        return self.point_at(angles_of(U))

    @functools.cached_property
    def _direction_table(self) -> Tuple[np.ndarray, np.ndarray]:
        theta = np.linspace(0.0, TWO_PI, self.table_size + 1)
        X = self.point_at(theta)
        phi = np.unwrap(np.arctan2(X[:, 1], X[:, 0]))
        if not np.all(np.diff(phi) > 0):
            raise AdmissibilityError(f"Direction map of {self.kind} body is not monotone")
        return theta, phi

    def normal_angles(self, psi) -> np.ndarray:
        """
        Invert the map from normal angle θ to the direction angle of the boundary point x(θ).

        The table lookup gives a bracket, a safeguarded Newton iteration polishes the root.
        """
        psi = np.atleast_1d(np.asarray(psi, dtype=float))
        table_theta, table_phi = self._direction_table
        start = table_phi[0]
        target = start + np.mod(psi - start, TWO_PI)
        index = np.clip(np.searchsorted(table_phi, target, side="right") - 1, 0, self.table_size - 1)
        lo = table_theta[index].copy()
        hi = table_theta[index + 1].copy()
        theta = np.interp(target, table_phi, table_theta)

        for _ in range(100):
            h, dh, ddh = self._derivatives(theta)
            c, s = np.cos(theta), np.sin(theta)
            x = h * c - dh * s
            y = h * s + dh * c
            mismatch = np.mod(np.arctan2(y, x) - target + math.pi, TWO_PI) - math.pi
            converged = np.abs(mismatch) <= 1e-14
            if np.all(converged):
                break
            lo = np.where(mismatch < 0, theta, lo)
            hi = np.where(mismatch > 0, theta, hi)
            rate = (h + ddh) * h / (x * x + y * y)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = theta - mismatch / rate
            fallback = ~np.isfinite(step) | (step <= lo) | (step >= hi)
            step = np.where(fallback, 0.5 * (lo + hi), step)
            theta = np.where(converged, theta, step)
            if np.all(hi - lo <= 1e-15):
                break
        return theta

    def _radial(self, U):
        theta = self.normal_angles(angles_of(U))
        return np.linalg.norm(self.point_at(theta), axis=1)

    def _normals(self, U):
        return unit_vectors(self.normal_angles(angles_of(U)))

    def area(self, size: int = 4096) -> float:
        theta = np.linspace(0.0, TWO_PI, size, endpoint=False)
        h, _, ddh = self._derivatives(theta)
        return float(0.5 * np.mean(h * (h + ddh)) * TWO_PI)


class TrigSupport2D(PlanarBody):
    """
    Planar body with trigonometric-polynomial support function

        h(θ) = a0 + Σ_k a_k cos(kθ) + b_k sin(kθ),  k = 1..d.

    With `centered=True` the body is translated so that its centroid is the origin.
    """

    kind = "trig"

    # Angles used for centering and the admissibility check.
    check_size = 4096

    # Candidate degrees for the polar refit; each is sampled at `refit_oversampling` times its degree.
    refit_degrees = (8, 16, 32, 64, 128, 256, 512, 1024, 2048)
    refit_oversampling = 4
    refit_tolerance = 1e-8

    def __init__(self, a0: float = 1.0, a: Sequence[float] = (), b: Sequence[float] = (), centered: bool = True):
        super().__init__()
        a = [float(v) for v in a]
        b = [float(v) for v in b]
        degree = max(len(a), len(b))
        a += [0.0] * (degree - len(a))
        b += [0.0] * (degree - len(b))
        self.a0 = float(a0)
        self.a = np.array(a)
        self.b = np.array(b)
        self.k = np.arange(1, degree + 1, dtype=float)
        if centered and degree:
            cx, cy = self._centroid()
            self.a[0] -= cx
            self.b[0] -= cy
        self._check_admissible()

    @property
    def degree(self) -> int:
        return len(self.a)

    def _derivatives(self, theta):
        theta = np.asarray(theta, dtype=float)
        h = np.full(theta.shape, self.a0)
        dh = np.zeros(theta.shape)
        ddh = np.zeros(theta.shape)
        if self.degree:
            kt = np.multiply.outer(theta, self.k)
            cos, sin = np.cos(kt), np.sin(kt)
            h = h + cos @ self.a + sin @ self.b
            dh = (cos * self.k) @ self.b - (sin * self.k) @ self.a
            ddh = -(cos * self.k**2) @ self.a - (sin * self.k**2) @ self.b
        return h, dh, ddh

    def _centroid(self) -> Tuple[float, float]:
        theta = np.linspace(0.0, TWO_PI, self.check_size, endpoint=False)
        h, dh, ddh = self._derivatives(theta)
        f = h + ddh
        X = self.point_at(theta)
        area = 0.5 * np.mean(h * f)
        centroid = np.mean(X * (h * f)[:, None], axis=0) / (3 * area)
        return float(centroid[0]), float(centroid[1])

    def _check_admissible(self):
        theta = np.linspace(0.0, TWO_PI, self.check_size, endpoint=False)
        h, _, ddh = self._derivatives(theta)
        if not np.all(h > 0):
            index = int(np.argmin(h))
            raise AdmissibilityError(
                f"Origin is not interior: support h({theta[index]!r}) = {h[index]!r} <= 0"
            )
        f = h + ddh
        if not np.all(f > 0):
            index = int(np.argmin(f))
            raise AdmissibilityError(
                f"Body is not C²₊: h + h'' at θ={theta[index]!r} is {f[index]!r} <= 0"
            )

    def polar_body(self) -> "TrigSupport2D":
        residual = math.inf
        for degree in self.refit_degrees:
            size = self.refit_oversampling * degree
            theta = np.linspace(0.0, TWO_PI, size, endpoint=False)
            samples = 1.0 / self._radial(unit_vectors(theta))
            spectrum = np.fft.rfft(samples) / size
            a = 2 * spectrum[1 : degree + 1].real
            b = -2 * spectrum[1 : degree + 1].imag
            midpoints = theta + math.pi / size
            reference = 1.0 / self._radial(unit_vectors(midpoints))
            try:
                candidate = TrigSupport2D(spectrum[0].real, a, b, centered=False)
            except AdmissibilityError:
                continue
            approx = candidate.support_at(midpoints)
            residual = float(np.max(np.abs(approx - reference) / reference))
            if residual <= self.refit_tolerance:
                log.debug(f"Polar body refit with degree {degree}, residual {residual:.3g}")
                return candidate
        raise ApproximationError(
            f"Polar body refit did not reach relative accuracy {self.refit_tolerance}", residual=residual
        )

    def scaled(self, factor):
        if not factor > 0:
            raise InputError(f"Scale factor must be positive, got {factor!r}")
        return TrigSupport2D(factor * self.a0, factor * self.a, factor * self.b, centered=False)

    def describe(self):
        return OrderedDict(kind=self.kind, dimension=2, a0=self.a0, a=self.a.tolist(), b=self.b.tolist())


class RoundedSquare2D(PlanarBody):
    """
    The body K(R, ε): the intersection of the four disks of radius R centered at
    (±(R−1), 0) and (0, ±(R−1)), with its four corners rounded by ε-arcs.

    Realized as the parallel body at distance ε of the intersection of the
    shrunken disks of radius R − ε. The curvature function is R on the big arcs
    and ε on the corner arcs.
    """

    kind = "rounded-square"
    smooth = False
    piecewise = True

    def __init__(self, R: float, eps: float):
        super().__init__()
        if not R > 1:
            raise InputError(f"Rounded square needs R > 1, got {R!r}")
        if not 0 < eps < 1:
            raise InputError(f"Rounded square needs 0 < eps < 1, got {eps!r}")
        self.R = float(R)
        self.eps = float(eps)
        shift = self.R - 1
        inner = self.R - self.eps
        # Corner (a, a) of the shrunken disk intersection.
        self.corner = 0.5 * (-shift + math.sqrt(2 * inner**2 - shift**2))
        self.alpha = math.atan2(self.corner, self.corner + shift)

    def _derivatives(self, theta):
        theta = np.asarray(theta, dtype=float)
        quarter = 0.5 * math.pi
        psi = np.mod(theta + 0.25 * math.pi, quarter) - 0.25 * math.pi
        c, s = np.cos(psi), np.sin(psi)
        big = np.abs(psi) <= self.alpha
        sign = np.where(psi >= 0, 1.0, -1.0)
        shift = self.R - 1
        h = np.where(big, self.R - shift * c, self.corner * (c + sign * s) + self.eps)
        dh = np.where(big, shift * s, self.corner * (sign * c - s))
        ddh = np.where(big, shift * c, -self.corner * (c + sign * s))
        return h, dh, ddh

    def breakpoints(self):
        points = []
        for k in range(4):
            center = k * 0.5 * math.pi
            points.extend([(center - self.alpha) % TWO_PI, (center + self.alpha) % TWO_PI])
        return tuple(sorted(points))

    def describe(self):
        return OrderedDict(kind=self.kind, dimension=2, R=self.R, eps=self.eps)


class PolygonEdge(NamedTuple):
    start: Tuple[float, float]
    end: Tuple[float, float]
    normal: Direction
    support: float
    length: float


class Polygon2D(BodyModel):
    """
    Convex polygon given by its vertices. Curvature based oracles are not defined.
    """

    kind = "polygon"
    smooth = False

    def __init__(self, vertices, centered: bool = True):
        super().__init__(2)
        points = np.array(vertices, dtype=float)
        if points.ndim != 2 or points.shape[1] != 2 or len(points) < 3:
            raise InputError(f"Polygon needs at least three planar vertices, got shape {points.shape}")
        try:
            hull = ConvexHull(points)
        except (RuntimeError, ValueError) as ex:
            raise InputError(f"Polygon vertices are degenerate: {ex}") from ex
        if len(hull.vertices) != len(points):
            raise InputError("Polygon vertices are not in convex position")
        # ConvexHull reports planar vertices counterclockwise.
        points = points[hull.vertices]
        if centered:
            points = points - self._centroid(points)
        self.vertices = points
        following = np.roll(points, -1, axis=0)
        edges = following - points
        self.lengths = np.linalg.norm(edges, axis=1)
        self.normals = np.column_stack([edges[:, 1], -edges[:, 0]]) / self.lengths[:, None]
        self.supports = np.einsum("ij,ij->i", points, self.normals)
        if not np.all(self.supports > 0):
            raise InputError("Origin is not strictly inside the polygon")

    @staticmethod
    def _centroid(points: np.ndarray) -> np.ndarray:
        x, y = points[:, 0], points[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area = 0.5 * cross.sum()
        cx = ((x + xn) * cross).sum() / (6 * area)
        cy = ((y + yn) * cross).sum() / (6 * area)
        return np.array([cx, cy])

    def _support(self, U):
        return np.max(U @ self.vertices.T, axis=1)

    def _edge_ratios(self, U):
        D = U @ self.normals.T
        with np.errstate(divide="ignore"):
            return np.where(D > 1e-300, self.supports / np.where(D > 1e-300, D, 1.0), np.inf)

    def _radial(self, U):
        return np.min(self._edge_ratios(U), axis=1)

    def _normals(self, U):
        return self.normals[np.argmin(self._edge_ratios(U), axis=1)]

    def area(self) -> float:
        return float(0.5 * np.sum(self.supports * self.lengths))

    def edges(self) -> List[PolygonEdge]:
        following = np.roll(self.vertices, -1, axis=0)
        return [
            PolygonEdge(
                start=tuple(self.vertices[i]),
                end=tuple(following[i]),
                normal=Direction.of(self.normals[i]),
                support=float(self.supports[i]),
                length=float(self.lengths[i]),
            )
            for i in range(len(self.vertices))
        ]

    def polar_body(self):
        return Polygon2D(self.normals / self.supports[:, None], centered=False)

    def linear_image(self, T):
        T = _check_matrix(T, 2)
        return Polygon2D(self.vertices @ T.T, centered=False)

    def scaled(self, factor):
        if not factor > 0:
            raise InputError(f"Scale factor must be positive, got {factor!r}")
        return Polygon2D(factor * self.vertices, centered=False)

    def breakpoints(self):
        return tuple(sorted(np.mod(angles_of(self.vertices), TWO_PI).tolist()))

    def describe(self):
        return OrderedDict(kind=self.kind, dimension=2, vertices=self.vertices.tolist())


class LinearImage(BodyModel):
    """
    The image T·K of a body under an invertible linear map.

    Curvature follows the transformation identity
    f_{TK}(u) = f_K(w) det(T)² / ‖Tᵗu‖^{n+1} with w = Tᵗu / ‖Tᵗu‖.
    """

    kind = "linear-image"

    def __init__(self, base: BodyModel, matrix):
        T = _check_matrix(matrix, base.dimension)
        super().__init__(base.dimension)
        self.base = base
        self.matrix = T
        self.inverse = np.linalg.inv(T)
        self.det = float(abs(np.linalg.det(T)))
        self.smooth = base.smooth
        self.piecewise = base.piecewise

    def _pullback(self, U):
        W = U @ self.matrix
        norms = np.linalg.norm(W, axis=1)
        return W / norms[:, None], norms

    def _support(self, U):
        W, norms = self._pullback(U)
        return norms * self.base._support(W)

    def _curvature(self, U):
        W, norms = self._pullback(U)
        return self.base._curvature(W) * self.det**2 / norms ** (self.dimension + 1)

    def _boundary(self, U):
        W, _ = self._pullback(U)
        return self.base._boundary(W) @ self.matrix.T

    def _radial(self, U):
        V = U @ self.inverse.T
        norms = np.linalg.norm(V, axis=1)
        return self.base._radial(V / norms[:, None]) / norms

    def _normals(self, U):
        V = normalize_rows(U @ self.inverse.T)
        return normalize_rows(self.base._normals(V) @ self.inverse)

    def polar_body(self):
        return LinearImage(self.base.polar_body(), self.inverse.T)

    def linear_image(self, T):
        T = _check_matrix(T, self.dimension)
        return LinearImage(self.base, T @ self.matrix)

    def breakpoints(self):
        base_points = self.base.breakpoints()
        if not base_points:
            return ()
        mapped = unit_vectors(base_points) @ self.inverse
        return tuple(sorted(np.mod(angles_of(mapped), TWO_PI).tolist()))

    def describe(self):
        return OrderedDict(
            kind=self.kind, dimension=self.dimension, matrix=self.matrix.tolist(), base=self.base.describe()
        )


def support(K: BodyModel, u):
    return K.support(u)


def curvature_function(K: BodyModel, u):
    return K.curvature_function(u)


def boundary_point(K: BodyModel, u) -> BoundaryPoint:
    return K.boundary_point(u)


def radial(K: BodyModel, u):
    return K.radial(u)


def polar_support(K: BodyModel, u):
    return K.polar_support(u)


def polar_body(K: BodyModel) -> BodyModel:
    return K.polar_body()


def linear_image(K: BodyModel, T) -> BodyModel:
    return K.linear_image(T)


def normal_at(K: BodyModel, u):
    return K.normal_at(u)


def scaled(K: BodyModel, factor: float) -> BodyModel:
    return K.scaled(factor)


def breakpoints(K: BodyModel) -> Tuple[float, ...]:
    return K.breakpoints()


def describe(K: BodyModel) -> OrderedDict:
    return K.describe()


def unit_square() -> Polygon2D:
    """
    The square [-1, 1]², unit ball of the maximum norm.
    """
    return Polygon2D([(-1, -1), (1, -1), (1, 1), (-1, 1)])


def curvature_by_differences(K: BodyModel, theta: float) -> float:
    """
    Finite-difference estimate of h + h'' for a planar body. Lower accuracy than the closed forms.
    """
    if K.dimension != 2:
        raise InputError("Finite-difference curvature is only available for planar bodies")
    step = np.finfo(float).eps ** (1 / 3) * max(1.0, abs(theta))
    angles = np.array([theta - step, theta, theta + step])
    h = K.support(unit_vectors(angles))
    return float(h[1] + (h[0] - 2 * h[1] + h[2]) / step**2)


def random_trig_body(rng: np.random.Generator, degree: int = 4, max_tries: int = 100) -> TrigSupport2D:
    """
    Draw a C²₊ trigonometric body with coefficients bounded by 0.3/k³.
    """
    k = np.arange(1, degree + 1, dtype=float)
    bound = 0.3 / k**3
    for _ in range(max_tries):
        a = rng.uniform(-1, 1, degree) * bound
        b = rng.uniform(-1, 1, degree) * bound
        try:
            return TrigSupport2D(1.0, a, b)
        except AdmissibilityError:
            continue
    raise AdmissibilityError(f"No admissible trigonometric body found within {max_tries} tries")


def random_rotation(rng: np.random.Generator, n: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def random_ellipsoid(rng: np.random.Generator, n: int) -> Ellipsoid:
    axes = rng.uniform(0.5, 2.0, n)
    return Ellipsoid(random_rotation(rng, n) @ np.diag(axes))


def random_linear_map(rng: np.random.Generator, n: int, volume_preserving: bool = False) -> np.ndarray:
    singular = rng.uniform(0.5, 2.0, n)
    T = random_rotation(rng, n) @ np.diag(singular) @ random_rotation(rng, n)
    if volume_preserving:
        T = T / abs(np.linalg.det(T)) ** (1 / n)
    return T
