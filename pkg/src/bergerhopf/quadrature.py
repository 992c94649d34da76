"""Integration on S^{2m+1} and the unit ball B^{2m+2}.

Three routes, used to cross-check each other throughout the package:

  * exact monomial moments via the Gamma-function formula (rational
    multiples of pi^{m+1}), the default for polynomial integrands;
  * a Hopf-coordinate product rule on S^3 that integrates polynomials
    exactly once the node counts exceed the degree;
  * seeded Monte Carlo with a standard-error estimate.

Rules integrate against the round measure; ``integrate_sphere`` applies the
Berger volume factor sqrt|mu|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .geometry import BergerContext
from .polynomials import PolyField

PI = math.pi


def sphere_volume_exact(m: int) -> Fraction:
    """vol(S^{2m+1}) as the rational coefficient of pi^{m+1}."""
    return Fraction(2, math.factorial(m))


def sphere_volume(m: int) -> float:
    return float(sphere_volume_exact(m)) * PI ** (m + 1)


def _half_gamma_ratio(a: int) -> Fraction:
    """Gamma(a + 1/2) / sqrt(pi) = (2a)! / (4^a a!)."""
    return Fraction(math.factorial(2 * a), 4**a * math.factorial(a))


def sphere_moment_exact(exponents, m: int) -> Fraction:
    """Moment of a monomial over S^{2m+1} as the coefficient of pi^{m+1}.

    Odd exponents integrate to zero by symmetry; for even exponents
    alpha = 2a the value is 2 * prod Gamma((alpha_i+1)/2) / Gamma(m+1+|a|).
    """
    exponents = tuple(int(e) for e in exponents)
    if len(exponents) != 2 * m + 2:
        raise ValueError("need exactly 2m+2 exponents")
    if any(e < 0 for e in exponents):
        raise ValueError("exponents must be nonnegative")
    if any(e % 2 for e in exponents):
        return Fraction(0)
    halves = [e // 2 for e in exponents]
    num = Fraction(2)
    for a in halves:
        num *= _half_gamma_ratio(a)
    return num / math.factorial(m + sum(halves))


def sphere_moment(exponents, m: int) -> float:
    return float(sphere_moment_exact(exponents, m)) * PI ** (m + 1)


def ball_moment_exact(exponents, m: int) -> Fraction:
    """Moment over the unit ball B^{2m+2}: sphere moment / (2m+2+|alpha|)."""
    s = sphere_moment_exact(exponents, m)
    return s / (2 * m + 2 + sum(int(e) for e in exponents))


def ball_moment(exponents, m: int) -> float:
    return float(ball_moment_exact(exponents, m)) * PI ** (m + 1)


def integrate_poly_exact(f: PolyField, m: int) -> Fraction:
    """Exact round-metric integral of a polynomial over S^{2m+1}.

    Returned as the rational coefficient of pi^{m+1}.
    """
    if f.nvars != 2 * m + 2:
        raise ValueError("polynomial variable count does not match the sphere")
    total = Fraction(0)
    for exps, coeff in f.iter_terms():
        if any(e % 2 for e in exps):
            continue
        total += coeff * sphere_moment_exact(exps, m)
    return total


def integrate_poly(f: PolyField, m: int) -> float:
    return float(integrate_poly_exact(f, m)) * PI ** (m + 1)


# -- quadrature rules ---------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive round-measure weights on S^{2m+1}."""

    kind: str  # "exact-moments" | "hopf-product-s3" | "monte-carlo"
    m: int
    points: Optional[np.ndarray]
    weights: Optional[np.ndarray]
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.weights is not None and np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    def describe(self) -> dict:
        out = {"rule": self.kind, "m": self.m}
        out.update(self.params)
        return out


def exact_rule(m: int) -> QuadratureRule:
    """Marker rule: integrate PolyField inputs by exact monomial moments."""
    return QuadratureRule("exact-moments", m, None, None)


def hopf_product_rule(n_radial: int = 12, n_angle: int = 16) -> QuadratureRule:
    """Product rule on S^3 in Hopf coordinates.

    z1 = cos(eta) e^{i xi1}, z2 = sin(eta) e^{i xi2} with the round measure
    sin(eta) cos(eta) d(eta) d(xi1) d(xi2).  Substituting u = sin^2(eta) makes
    the radial factor polynomial, so Gauss-Legendre nodes in u combined with
    uniform angular grids integrate every monomial of degree
    <= min(4*n_radial - 2, n_angle - 1) exactly.
    """
    if n_radial < 1 or n_angle < 1:
        raise ValueError("node counts must be positive")
    u, wu = np.polynomial.legendre.leggauss(n_radial)
    u = 0.5 * (u + 1.0)  # map to (0, 1)
    wu = 0.5 * wu * 0.5  # du weight, times the 1/2 Jacobian of u = sin^2 eta
    xi = 2.0 * PI * np.arange(n_angle) / n_angle
    wxi = 2.0 * PI / n_angle
    ceta = np.sqrt(1.0 - u)
    seta = np.sqrt(u)
    # coordinates: z1 = x0 + i x2, z2 = x1 + i x3
    pts = np.empty((n_radial, n_angle, n_angle, 4))
    pts[..., 0] = ceta[:, None, None] * np.cos(xi)[None, :, None]
    pts[..., 2] = ceta[:, None, None] * np.sin(xi)[None, :, None]
    pts[..., 1] = seta[:, None, None] * np.cos(xi)[None, None, :]
    pts[..., 3] = seta[:, None, None] * np.sin(xi)[None, None, :]
    w = np.broadcast_to(
        (wu * wxi * wxi)[:, None, None], (n_radial, n_angle, n_angle)
    )
    return QuadratureRule(
        "hopf-product-s3",
        1,
        pts.reshape(-1, 4),
        np.ascontiguousarray(w.reshape(-1)),
        {"n_radial": n_radial, "n_angle": n_angle},
    )


def monte_carlo_rule(n: int, seed: int, m: int) -> QuadratureRule:
    """Uniform Monte Carlo nodes from normalized Gaussian vectors."""
    if n < 1:
        raise ValueError("sample count must be positive")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 2 * m + 2))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    w = np.full(n, sphere_volume(m) / n)
    return QuadratureRule("monte-carlo", m, x, w, {"n": n, "seed": seed})


def rule_from_config(config: dict, m: int, max_degree: int = 24) -> QuadratureRule:
    """Build a rule from a ``{"rule": ..., "n": ..., "seed": ...}`` descriptor."""
    kind = config.get("rule", "exact")
    if kind in ("exact", "exact-moments"):
        return exact_rule(m)
    if kind in ("hopf", "hopf-product-s3"):
        if m != 1:
            raise ValueError("hopf-product rule is only defined on S^3")
        n = int(config.get("n", 0))
        n_radial = max(n, (max_degree + 2 + 3) // 4)
        n_angle = max(n, max_degree + 1)
        return hopf_product_rule(n_radial, n_angle)
    if kind in ("mc", "monte-carlo"):
        return monte_carlo_rule(int(config.get("n", 100_000)), int(config.get("seed", 0)), m)
    raise ValueError(f"unknown quadrature rule {kind!r}")


# -- integration --------------------------------------------------------------


@dataclass(frozen=True)
class IntegralResult:
    value: float
    stderr: Optional[float]  # None when the route is exact for the input
    rule: str

    def __float__(self) -> float:
        return self.value


def integrate_sphere(
    f, rule: QuadratureRule, ctx: BergerContext
) -> IntegralResult:
    """Integral of f over (S^{2m+1}, g_mu), i.e. sqrt|mu| times the round one.

    ``f`` is a PolyField (required on the exact-moments route) or a callable
    mapping an (n, 2m+2) array of points to values.
    """
    if rule.m != ctx.m:
        raise ValueError("rule dimension does not match context")
    scale = ctx.sqrt_abs_mu
    if rule.kind == "exact-moments":
        if not isinstance(f, PolyField):
            raise TypeError("exact-moments integration requires a PolyField")
        return IntegralResult(scale * integrate_poly(f, ctx.m), None, rule.kind)
    values = f(rule.points) if callable(f) else np.asarray(f, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (rule.points.shape[0],):
        raise ValueError("integrand returned wrong shape")
    # pairwise summation (numpy default) keeps accumulation order-stable
    total = float(np.sum(values * rule.weights))
    if rule.kind == "monte-carlo":
        n = values.shape[0]
        vol = sphere_volume(ctx.m)
        stderr = vol * float(np.std(values, ddof=1)) / math.sqrt(n)
        return IntegralResult(scale * total, scale * stderr, rule.kind)
    return IntegralResult(scale * total, None, rule.kind)
