"""Simultaneous eigenfunctions of the Berger and vertical Laplacians.

The workhorse family is ``f2s``: the degree-2s harmonic polynomial
Re((x + i y)^{2s}) in one complex coordinate pair.  Its restriction to the
sphere lies in the top Tanno component, so the Berger Laplacian acts by
2m(2s) + (2s)^2/mu and the vertical Laplacian by (2s)^2/mu.  All structural
identities here are exact over the rationals; floating point enters only in
the pointwise frame checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .geometry import BergerContext, frame_batch, hopf_flow, sample_sphere
from .polynomials import PolyField


@dataclass(frozen=True)
class EigenRecord:
    """Eigenvalue bookkeeping: Laplacian level k, vertical level l."""

    k: int
    l: int

    def __post_init__(self):
        if self.l < 0 or self.k < self.l:
            raise ValueError("need k >= l >= 0")
        if (self.k - self.l) % 2:
            raise ValueError("k - l must be even")

    def lambda_k(self, m: int) -> int:
        return self.k * (self.k + 2 * m)

    @property
    def phi_l(self) -> int:
        return self.l**2

    def mu_eigenvalue(self, mu, m: int) -> float:
        return mixed_eigenvalue(self.k, self.l, mu, m)


def mixed_eigenvalue(k: int, l: int, mu, m: int) -> float:
    """Eigenvalue k(k+2m) - l^2 + l^2/mu of the Berger Laplacian."""
    if l < 0 or k < l:
        raise ValueError("need k >= l >= 0")
    mu = Fraction(repr(mu)) if isinstance(mu, float) else Fraction(mu)
    return float(k * (k + 2 * m) - l**2 + Fraction(l**2) / mu)


def hopf_derivative(f: PolyField, m: int) -> PolyField:
    """V(f) where V(p) = Jp: the symbolic derivative df_p(Jp)."""
    d = 2 * m + 2
    if f.nvars != d:
        raise ValueError("variable count does not match the sphere")
    out = PolyField.zero(d)
    for j in range(m + 1):
        xj = PolyField.variable(j, d)
        yj = PolyField.variable(j + m + 1, d)
        out = out + xj * f.diff(j + m + 1) - yj * f.diff(j)
    return out


def f2s(s: int, axis: int, m: int) -> PolyField:
    """Degree-2s harmonic polynomial sum_i (-1)^i C(2s,2i) x^{2(s-i)} y^{2i}.

    Here x = x_axis and y = x_{axis+m+1} (axis is 1-based, 1 <= axis <= m+1);
    the polynomial equals Re((x + i y)^{2s}).
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    if not 1 <= axis <= m + 1:
        raise ValueError("axis out of range 1..m+1")
    d = 2 * m + 2
    ix, iy = axis - 1, axis + m
    terms = {}
    for i in range(s + 1):
        exps = [0] * d
        exps[ix] = 2 * (s - i)
        exps[iy] = 2 * i
        terms[tuple(exps)] = (-1) ** i * math.comb(2 * s, 2 * i)
    return PolyField.from_terms(terms, d)


def hess_j_commutator(f: PolyField, m: int) -> list:
    """Polynomial matrix (Hess f) J + J (Hess f); zero iff f is J-compatible."""
    d = 2 * m + 2
    h = f.hessian()

    def hj(i, k):  # (H J)_{ik}
        return h[i][k + m + 1] if k <= m else -h[i][k - m - 1]

    def jh(i, k):  # (J H)_{ik}
        return -h[i + m + 1][k] if i <= m else h[i - m - 1][k]

    return [[hj(i, k) + jh(i, k) for k in range(d)] for i in range(d)]


def check_jhess(f: PolyField, m: int) -> bool:
    """True iff Hess f(u, Jv) = Hess f(Ju, v) identically (Hess anti-commutes with J)."""
    return all(entry.is_zero() for row in hess_j_commutator(f, m) for entry in row)


def in_hypothesis_class(f: PolyField, m: int) -> bool:
    return (
        f.is_homogeneous()
        and f.euclidean_laplacian().is_zero()
        and check_jhess(f, m)
    )


@dataclass(frozen=True)
class ProportionalityReport:
    """Result of testing an operator output for proportionality to the input."""

    constant: float
    max_residual: float
    n_points: int
    exact_constant: Optional[Fraction] = None


def laplacian_berger(
    f: PolyField,
    ctx: BergerContext,
    points: Optional[np.ndarray] = None,
    n_points: int = 200,
    seed: int = 7,
) -> ProportionalityReport:
    """Berger Laplacian of f, evaluated pointwise as -tr of the g_mu-Hessian.

    The trace runs over an adapted frame with the eps_mu sign on the vertical
    slot.  Reports the least-squares proportionality constant c and the
    maximum residual |Delta^mu f - c f| over the sample points.
    """
    if not in_hypothesis_class(f, ctx.m):
        raise ValueError("f must be homogeneous, harmonic and J-compatible")
    d = 2 * ctx.m + 2
    if points is None:
        points = sample_sphere(ctx.m, n_points, seed=seed)
    p = np.asarray(points, dtype=np.float64)
    n = p.shape[0]
    hess = np.empty((n, d, d))
    hpoly = f.hessian()
    for i in range(d):
        for j in range(i, d):
            hij = hpoly[i][j](p)
            hess[:, i, j] = hij
            hess[:, j, i] = hij
    nf = f.radial_derivative()(p)
    frames = frame_batch(p, ctx)
    # horizontal slots: Hess^mu(E,E) = Hessbar(E,E) - N(f); corrections vanish
    e = frames[:, 1:]
    horiz = np.einsum("nad,ndc,nac->na", e, hess, e)
    total = -(horiz.sum(axis=1) - 2 * ctx.m * nf)
    # vertical slot: Hess^mu(Vmu,Vmu) = Hessbar(Vmu,Vmu) - N(f)/|mu|
    v = frames[:, 0]
    vert = np.einsum("nd,ndc,nc->n", v, hess, v) - nf / abs(ctx.mu)
    total -= ctx.eps_mu * vert
    fv = f(p)
    c = float(total @ fv / (fv @ fv))
    resid = float(np.max(np.abs(total - c * fv)))
    return ProportionalityReport(c, resid, n)


def vertical_laplacian(f: PolyField, ctx: BergerContext) -> ProportionalityReport:
    """Vertical Berger Laplacian -(1/mu) V(V(f)), computed symbolically.

    For f in the top Tanno component of degree k this equals (k^2/mu) f; the
    report carries the exact rational constant and the residual of the
    symbolic proportionality (zero when f is a genuine eigenfunction).
    """
    vvf = hopf_derivative(hopf_derivative(f, ctx.m), ctx.m)
    result = vvf * Fraction(-1, 1) * (1 / ctx.mu_exact)
    if f.is_zero():
        raise ValueError("zero polynomial has no eigenvalue")
    key = next(iter(f.terms))
    c = Fraction(result.terms.get(key, 0), result.den) / Fraction(f.terms[key], f.den)
    residual_poly = result - f * c
    if residual_poly.is_zero():
        resid = 0.0
    else:
        resid = max(abs(float(co)) for _, co in residual_poly.iter_terms())
    return ProportionalityReport(float(c), resid, 0, exact_constant=c)


class TannoComponent:
    """One vertical Fourier mode of a polynomial along the Hopf circles.

    Evaluates f_l(p) as the cos(l t) Fourier coefficient of t -> f(phi_t(p)),
    where phi_t is the Hopf flow; 4*(deg f + 1) equispaced samples resolve the
    trigonometric polynomial exactly.
    """

    def __init__(self, f: PolyField, l: int, m: int):
        deg = max(f.degree(), 0)
        if l < 0 or l > deg:
            raise ValueError("component index out of range")
        if (deg - l) % 2:
            raise ValueError("component index has the wrong parity")
        self.f = f
        self.l = l
        self.m = m
        self.n_samples = 4 * (deg + 1)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        single = points.ndim == 1
        if single:
            points = points[None, :]
        n = self.n_samples
        t = 2.0 * np.pi * np.arange(n) / n
        samples = np.empty((points.shape[0], n))
        for k in range(n):
            samples[:, k] = self.f(hopf_flow(points, t[k], self.m))
        if self.l == 0:
            vals = samples.mean(axis=1)
        else:
            vals = (2.0 / n) * samples @ np.cos(self.l * t)
        return vals[0] if single else vals


def tanno_project(f: PolyField, l: int, m: int) -> TannoComponent:
    return TannoComponent(f, l, m)


def tanno_components(f: PolyField, m: int) -> list:
    """All admissible components (l matching deg f mod 2); they sum to f."""
    deg = max(f.degree(), 0)
    return [TannoComponent(f, l, m) for l in range(deg % 2, deg + 1, 2)]


# -- displayed auxiliary fields for the f2s integral reductions ---------------


def f2s_divergence_free_field(s: int, axis: int, m: int) -> tuple:
    """The pair (Y_x, Y_y) with f^2 = <f Y, N> and div Y = 0 for f = f2s.

    Y = sum_i (-1)^i C(2s-1, 2i)   x^{2(s-i)-1} y^{2i}   d/dx
      + sum_i (-1)^i C(2s-1, 2i-1) x^{2(s-i)}   y^{2i-1} d/dy
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    d = 2 * m + 2
    ix, iy = axis - 1, axis + m
    yx_terms = {}
    for i in range(s):
        exps = [0] * d
        exps[ix] = 2 * (s - i) - 1
        exps[iy] = 2 * i
        yx_terms[tuple(exps)] = (-1) ** i * math.comb(2 * s - 1, 2 * i)
    yy_terms = {}
    for i in range(1, s + 1):
        exps = [0] * d
        exps[ix] = 2 * (s - i)
        exps[iy] = 2 * i - 1
        yy_terms[tuple(exps)] = (-1) ** i * math.comb(2 * s - 1, 2 * i - 1)
    return PolyField.from_terms(yx_terms, d), PolyField.from_terms(yy_terms, d)
