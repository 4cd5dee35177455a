# -*- coding: utf-8 -*-
# (c) 2024 The asp-toolbox authors
# License: GNU Affero General Public License, Version 3
"""
Scalar functionals of convex bodies: mixed p-affine surface areas, their
i-th mixed variants, dual mixed volumes, volume and surface area.

Integrands are assembled in log-space and exponentiated at the very end, so
large negative or positive exponents do not overflow intermediate products.
"""
import logging
import math
from typing import Callable, Sequence, Union

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from asp_toolbox.bodies import BodyModel, as_directions, unit_vectors
from asp_toolbox.model import (
    Direction,
    FpEvaluation,
    FunctionalValue,
    InputError,
    RoutedElsewhereError,
    UnsupportedDimensionError,
)
from asp_toolbox.quadrature import QuadratureRule, integrate

log = logging.getLogger(__name__)

Exponent = Union[float, str]

# Bodies closer than this to the pole p = -n are rejected.
POLE_GUARD = 1e-6

# Grid size of the scan preceding the local refinement of maximizers.
SCAN_SIZE = 4096


def parse_exponent(value: Exponent) -> float:
    """
    Accept a number or one of the strings "inf", "+inf", "-inf".

        >>> parse_exponent("inf"), parse_exponent("-inf"), parse_exponent("2.5")
        (inf, -inf, 2.5)
    """
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity", "+infinity"):
            return math.inf
        if text in ("-inf", "-infinity"):
            return -math.inf
        try:
            return float(text)
        except ValueError as ex:
            raise InputError(f"Invalid exponent: {value!r}") from ex
    try:
        result = float(value)
    except (TypeError, ValueError) as ex:
        raise InputError(f"Invalid exponent: {value!r}") from ex
    if math.isnan(result):
        raise InputError("Exponent must not be NaN")
    return result


def affine_exponent(p: Exponent, n: int) -> float:
    """
    The exponent (n - p) / (n + p), with limit -1 for p = ±∞.

        >>> affine_exponent(0, 2), affine_exponent("inf", 3)
        (1.0, -1.0)
    """
    p = parse_exponent(p)
    if math.isinf(p):
        return -1.0
    return (n - p) / (n + p)


def _check_pole(p: float, n: int):
    if not math.isinf(p) and abs(n + p) < POLE_GUARD:
        raise RoutedElsewhereError(
            f"Exponent p={p!r} is at the pole p=-n={-n}; use mixed_minus_n / ith_mixed_minus_n instead"
        )


def _check_bodies(bodies: Sequence[BodyModel], rule: QuadratureRule = None, count: bool = True) -> int:
    if not bodies:
        raise InputError("At least one body is required")
    n = bodies[0].dimension
    if any(body.dimension != n for body in bodies):
        raise InputError(f"Bodies have mixed dimensions: {[body.dimension for body in bodies]}")
    if count and len(bodies) != n:
        raise InputError(f"Expected n={n} bodies, got {len(bodies)}")
    if rule is not None and rule.dimension != n:
        raise InputError(f"Quadrature rule of dimension {rule.dimension} does not match bodies of dimension {n}")
    return n


def log_fp(K: BodyModel, p: float, U: np.ndarray) -> np.ndarray:
    """
    log f_p(K, u) = (1 - p) log h_K(u) + log f_K(u), vectorized.
    """
    return (1 - p) * np.log(K.support(U)) + np.log(K.curvature_function(U))


def fp_evaluation(K: BodyModel, p: Exponent, u) -> FpEvaluation:
    p = parse_exponent(p)
    U, _ = as_directions(u, K.dimension)
    return FpEvaluation(body=K, p=p, direction=Direction.of(U[0]), log_value=float(log_fp(K, p, U[:1])[0]))


def _integrate_log(rule: QuadratureRule, log_integrand: Callable, factor: float = 1.0, estimate_error=True):
    result = integrate(rule, lambda U: np.exp(log_integrand(U)), estimate_error=estimate_error)
    if factor != 1.0:
        result = result * factor
    return result


def mixed_p_affine(bodies: Sequence[BodyModel], p: Exponent, rule: QuadratureRule) -> FunctionalValue:
    """
    Mixed p-affine surface area as_p(K_1, ..., K_n) = ∫ [Π f_p(K_i, u)]^{1/(n+p)} dσ(u).

    For p = ±∞ the limit integrand Π 1/h_{K_i} is used, which equals n times
    the dual mixed volume of the polar bodies.
    """
    p = parse_exponent(p)
    n = _check_bodies(bodies, rule)
    if math.isinf(p):
        return _integrate_log(rule, lambda U: -sum(np.log(K.support(U)) for K in bodies))
    _check_pole(p, n)
    return _integrate_log(rule, lambda U: sum(log_fp(K, p, U) for K in bodies) / (n + p))


def lp_affine(K: BodyModel, p: Exponent, rule: QuadratureRule) -> FunctionalValue:
    """
    L_p affine surface area as_p(K) = ∫ f_K^{n/(n+p)} h_K^{-n(p-1)/(n+p)} dσ.
    """
    p = parse_exponent(p)
    n = _check_bodies([K], rule, count=False)
    if math.isinf(p):
        return _integrate_log(rule, lambda U: -n * np.log(K.support(U)))
    _check_pole(p, n)
    return _integrate_log(rule, lambda U: n * log_fp(K, p, U) / (n + p))


def _maximize(log_objective: Callable[[np.ndarray], np.ndarray], n: int, seed: int = 7):
    """
    Maximize a log-objective over the sphere: grid scan plus local refinement.

    Returns the maximum of the objective and the maximizing direction.
    """
    if n == 2:
        step = 2 * math.pi / SCAN_SIZE
        theta = step * np.arange(SCAN_SIZE)
        values = log_objective(unit_vectors(theta))
        best = int(np.argmax(values))
        result = minimize_scalar(
            lambda t: -float(log_objective(unit_vectors(t))[0]),
            bounds=(theta[best] - step, theta[best] + step),
            method="bounded",
            options={"xatol": 1e-12},
        )
        if result.success and -result.fun >= values[best]:
            return math.exp(-result.fun), unit_vectors(result.x)[0]
        return math.exp(values[best]), unit_vectors(theta[best])[0]

    rng = np.random.default_rng(seed)
    X = rng.standard_normal((SCAN_SIZE, n))
    X /= np.linalg.norm(X, axis=1)[:, None]
    values = log_objective(X)
    best = int(np.argmax(values))

    def negative(x):
        norm = np.linalg.norm(x)
        return -float(log_objective((x / norm)[None, :])[0])

    result = minimize(negative, X[best], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
    if -result.fun >= values[best]:
        return math.exp(-result.fun), result.x / np.linalg.norm(result.x)
    return math.exp(values[best]), X[best]


def _maximum_value(log_objective, n: int, label: str) -> FunctionalValue:
    value, direction = _maximize(log_objective, n)
    coords = ", ".join(f"{c:.6f}" for c in direction)
    return FunctionalValue(value, 1e-8 * value, f"{label}(scan={SCAN_SIZE}, u=[{coords}])")


def _log_minus_n(K: BodyModel, n: int, U: np.ndarray) -> np.ndarray:
    return (np.log(K.curvature_function(U)) + (n + 1) * np.log(K.support(U))) / (2 * n)


def mixed_minus_n(bodies: Sequence[BodyModel]) -> FunctionalValue:
    """
    Mixed (-n)-affine surface area: max over u of Π f_{K_i}^{1/2n} h_{K_i}^{(n+1)/2n}.
    """
    n = _check_bodies(bodies)
    return _maximum_value(lambda U: sum(_log_minus_n(K, n, U) for K in bodies), n, "max")


def ith_mixed(K: BodyModel, L: BodyModel, p: Exponent, i: float, rule: QuadratureRule) -> FunctionalValue:
    """
    i-th mixed p-affine surface area as_{p,i}(K, L) = ∫ f_p(K)^{(n-i)/(n+p)} f_p(L)^{i/(n+p)} dσ.
    """
    p = parse_exponent(p)
    i = float(i)
    n = _check_bodies([K, L], rule, count=False)

    if math.isinf(p):

        def log_integrand(U):
            total = np.zeros(len(U))
            if i != n:
                total -= (n - i) * np.log(K.support(U))
            if i != 0:
                total -= i * np.log(L.support(U))
            return total

    else:
        _check_pole(p, n)

        def log_integrand(U):
            total = np.zeros(len(U))
            if i != n:
                total += (n - i) * log_fp(K, p, U)
            if i != 0:
                total += i * log_fp(L, p, U)
            return total / (n + p)

    return _integrate_log(rule, log_integrand)


def ith_mixed_minus_n(K: BodyModel, L: BodyModel, i: float) -> FunctionalValue:
    """
    i-th mixed (-n)-affine surface area:
    max over u of [f_K h_K^{n+1}]^{(n-i)/2n} [f_L h_L^{n+1}]^{i/2n}.
    """
    i = float(i)
    n = _check_bodies([K, L], count=False)

    def log_objective(U):
        total = np.zeros(len(U))
        if i != n:
            total += (n - i) * _log_minus_n(K, n, U)
        if i != 0:
            total += i * _log_minus_n(L, n, U)
        return total

    return _maximum_value(log_objective, n, "max")


def dual_mixed_volume(bodies: Sequence[BodyModel], rule: QuadratureRule) -> FunctionalValue:
    """
    Dual mixed volume Ṽ(L_1, ..., L_n) = (1/n) ∫ Π ρ_{L_i} dσ.
    """
    n = _check_bodies(bodies, rule)
    return _integrate_log(rule, lambda U: sum(np.log(L.radial(U)) for L in bodies), factor=1.0 / n)


def dual_mixed_volume_of_polars(bodies: Sequence[BodyModel], rule: QuadratureRule) -> FunctionalValue:
    """
    Ṽ(K_1°, ..., K_n°) = (1/n) ∫ Π 1/h_{K_i} dσ, computed from the original bodies.
    """
    n = _check_bodies(bodies, rule)
    return _integrate_log(rule, lambda U: -sum(np.log(K.support(U)) for K in bodies), factor=1.0 / n)


def dual_mixed_volume_i(K: BodyModel, L: BodyModel, i: float, rule: QuadratureRule) -> FunctionalValue:
    """
    Ṽ_i(K°, L°) = (1/n) ∫ h_K^{-(n-i)} h_L^{-i} dσ, taking the original bodies K and L.
    """
    i = float(i)
    n = _check_bodies([K, L], rule, count=False)

    def log_integrand(U):
        total = np.zeros(len(U))
        if i != n:
            total -= (n - i) * np.log(K.support(U))
        if i != 0:
            total -= i * np.log(L.support(U))
        return total

    return _integrate_log(rule, log_integrand, factor=1.0 / n)


def mixed_volume_2d(K: BodyModel, L: BodyModel, rule: QuadratureRule) -> FunctionalValue:
    """
    Planar mixed volume V(K, L) = (1/2) ∫ h_K f_L dσ.
    """
    n = _check_bodies([K, L], rule, count=False)
    if n != 2:
        raise UnsupportedDimensionError(
            f"Mixed volumes of distinct bodies are only available in the plane, got n={n}"
        )
    return integrate(rule, lambda U: K.support(U) * L.curvature_function(U)) * 0.5


def volume(K: BodyModel, rule: QuadratureRule, method: str = "auto") -> FunctionalValue:
    """
    Volume |K|, either (1/n) ∫ h_K f_K dσ ("support") or (1/n) ∫ ρ_K^n dσ ("radial").

    With "auto", bodies without a curvature function are integrated radially.
    """
    n = _check_bodies([K], rule, count=False)
    if method == "auto":
        method = "support" if (K.smooth or K.piecewise) else "radial"
    if method == "support":
        return integrate(rule, lambda U: K.support(U) * K.curvature_function(U)) * (1.0 / n)
    if method == "radial":
        return _integrate_log(rule, lambda U: n * np.log(K.radial(U)), factor=1.0 / n)
    raise InputError(f"Unknown volume method: {method!r}")


def surface_area(K: BodyModel, rule: QuadratureRule) -> FunctionalValue:
    """
    Surface area ∫ f_K dσ.
    """
    _check_bodies([K], rule, count=False)
    return integrate(rule, K.curvature_function)


def polar_volume(K: BodyModel, rule: QuadratureRule) -> FunctionalValue:
    """
    Volume of the polar body |K°| = (1/n) ∫ h_K^{-n} dσ.
    """
    n = _check_bodies([K], rule, count=False)
    return _integrate_log(rule, lambda U: -n * np.log(K.support(U)), factor=1.0 / n)


FUNCTIONALS = {
    "lp_affine": lp_affine,
    "mixed_p_affine": mixed_p_affine,
    "mixed_minus_n": mixed_minus_n,
    "ith_mixed": ith_mixed,
    "ith_mixed_minus_n": ith_mixed_minus_n,
    "dual_mixed_volume": dual_mixed_volume,
    "dual_mixed_volume_i": dual_mixed_volume_i,
    "mixed_volume_2d": mixed_volume_2d,
    "volume": volume,
    "polar_volume": polar_volume,
    "surface_area": surface_area,
}
