"""Variation directions: the tangent fields the Hessians are evaluated on.

Three families, each carried with exact polynomial ambient components and
pointwise evaluators:

  * ``field_Aa``:  A_a = a - <a,V>V - <a,N>N, the projection of a constant
    vector onto the complement of the Hopf direction and the normal;
  * ``field_C2s``: C_2s = grad_mu f_2s - eps_mu V_mu(f_2s) V_mu built from
    the degree-2s eigenfunctions;
  * ``field_s3``:  A = a1 E1 + a2 E2 on S^3, weighting the quaternionic
    frame by an eigenfunction pair.

Every construction is g_mu-orthogonal to V_mu pointwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .geometry import BergerContext, s3_frame_matrices
from .harmonics import hopf_derivative
from .polynomials import PolyField


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def jp_components(m: int) -> list:
    """Polynomial components of the round Hopf field V(p) = Jp."""
    d = 2 * m + 2
    comps = []
    for i in range(d):
        if i <= m:
            comps.append(-PolyField.variable(i + m + 1, d))
        else:
            comps.append(PolyField.variable(i - m - 1, d))
    return comps


def position_components(m: int) -> list:
    d = 2 * m + 2
    return [PolyField.variable(i, d) for i in range(d)]


class TangentField:
    """Tangent vector field with exact polynomial ambient components."""

    def __init__(self, name: str, params: dict, m: int, components: Sequence[PolyField]):
        d = 2 * m + 2
        if len(components) != d:
            raise ValueError("component count must be 2m+2")
        self.name = name
        self.params = dict(params)
        self.m = m
        self.components = tuple(components)
        self._jac_polys = None

    @property
    def key(self) -> tuple:
        items = tuple(
            (k, tuple(v) if isinstance(v, list) else v)
            for k, v in sorted(self.params.items())
        )
        return (self.name, self.m, items)

    def describe(self) -> dict:
        return {"family": self.name, "m": self.m, **self.params}

    def degree(self) -> int:
        return max(c.degree() for c in self.components)

    def value(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        single = points.ndim == 1
        if single:
            points = points[None, :]
        out = np.stack([c(points) for c in self.components], axis=-1)
        return out[0] if single else out

    def jacobian(self, points: np.ndarray) -> np.ndarray:
        """d(component_i)/dx_j of the ambient extension, shape (..., d, d)."""
        if self._jac_polys is None:
            self._jac_polys = [
                [c.diff(j) for j in range(len(self.components))]
                for c in self.components
            ]
        points = np.asarray(points, dtype=np.float64)
        single = points.ndim == 1
        if single:
            points = points[None, :]
        n, d = points.shape
        out = np.empty((n, d, d))
        for i in range(d):
            for j in range(d):
                out[:, i, j] = self._jac_polys[i][j](points)
        return out[0] if single else out

    def squared_norm_poly(self) -> PolyField:
        """<A, A> as an exact polynomial (the round norm; A is horizontal)."""
        d = 2 * self.m + 2
        out = PolyField.zero(d)
        for c in self.components:
            out = out + c * c
        return out

    def __repr__(self) -> str:
        return f"TangentField({self.describe()})"


def hopf_round_field(m: int) -> TangentField:
    """The round-unit Hopf field V(p) = Jp as a TangentField."""
    return TangentField("hopf", {}, m, jp_components(m))


def field_Aa(a, ctx: BergerContext) -> TangentField:
    """A_a = a - <a,V>V - <a,N>N for a nonzero constant vector a."""
    d = ctx.dim
    a_fr = [_as_fraction(x) for x in a]
    if len(a_fr) != d:
        raise ValueError("vector must have 2m+2 entries")
    if all(x == 0 for x in a_fr):
        raise ValueError("a must be nonzero")
    jp = jp_components(ctx.m)
    pos = position_components(ctx.m)
    a_dot_v = PolyField.zero(d)
    a_dot_n = PolyField.zero(d)
    for i in range(d):
        a_dot_v = a_dot_v + jp[i] * a_fr[i]
        a_dot_n = a_dot_n + pos[i] * a_fr[i]
    comps = [
        PolyField.constant(a_fr[i], d) - a_dot_v * jp[i] - a_dot_n * pos[i]
        for i in range(d)
    ]
    return TangentField(
        "Aa", {"a": [str(x) for x in a_fr]}, ctx.m, comps
    )


def gradient_mu_components(f: PolyField, ctx: BergerContext) -> list:
    """g_mu-gradient of f: round tangent gradient with the vertical
    coefficient scaled by 1/mu."""
    d = ctx.dim
    jp = jp_components(ctx.m)
    pos = position_components(ctx.m)
    nf = f.radial_derivative()  # N(f): df_p(p) at sphere points
    vf = hopf_derivative(f, ctx.m)
    grad = f.gradient()
    scale = Fraction(1) / ctx.mu_exact - 1
    return [
        grad[i] - nf * pos[i] + vf * jp[i] * scale
        for i in range(d)
    ]


def field_C2s(s: int, ctx: BergerContext, axis: int = 1, f: PolyField | None = None) -> TangentField:
    """C_2s = grad_mu f_2s - eps_mu V_mu(f_2s) V_mu.

    The vertical parts cancel exactly, leaving the horizontal round gradient;
    the construction is carried out literally and the cancellation happens in
    exact arithmetic.  Passing ``f`` substitutes another eigenfunction of the
    same kind (degree-s homogeneous harmonic with J-compatible Hessian).
    """
    from .harmonics import f2s, in_hypothesis_class  # local import: cheap module load

    if f is None:
        if s < 1:
            raise ValueError("s must be >= 1")
        f = f2s(s, axis, ctx.m)
        name = "C2s"
        params = {"s": s, "axis": axis, "degree": 2 * s}
    else:
        if not in_hypothesis_class(f, ctx.m):
            raise ValueError(
                "custom eigenfunction must be homogeneous, harmonic and J-compatible"
            )
        # distinct family name: no closed coefficient formula is attached and
        # the moment cache cannot collide with the standard construction
        name = "C-custom"
        params = {"degree": f.degree(), "terms": hash(f)}
    d = ctx.dim
    jp = jp_components(ctx.m)
    grad_mu = gradient_mu_components(f, ctx)
    vf = hopf_derivative(f, ctx.m)
    # eps_mu * V_mu(f) V_mu = (1/mu) V(f) V
    scale = Fraction(1) / ctx.mu_exact
    comps = [grad_mu[i] - vf * jp[i] * scale for i in range(d)]
    return TangentField(name, params, ctx.m, comps)


@dataclass(frozen=True)
class S3EigenPair:
    """Eigenfunction pair (a1, a2) on S^3 weighting the quaternionic frame."""

    a1: PolyField
    a2: PolyField
    level: int
    axis: int = 1

    def __post_init__(self):
        if self.level not in (1, 2):
            raise ValueError("level must be 1 or 2")
        v_a1 = hopf_derivative(self.a1, 1)
        vv_a1 = hopf_derivative(v_a1, 1)
        lam_v = self.level**2
        if not (vv_a1 + self.a1 * lam_v).is_zero():
            raise ValueError("a1 is not a vertical eigenfunction of the right level")
        expected_a2 = v_a1 if self.level == 1 else v_a1 * Fraction(1, 2)
        if not (self.a2 - expected_a2).is_zero():
            raise ValueError("a2 must equal V(a1) (level 1) or V(a1)/2 (level 2)")
        if not self.a1.euclidean_laplacian().is_zero():
            raise ValueError("a1 must be harmonic")


def s3_eigenpair(level: int, axis: int = 1) -> S3EigenPair:
    """Standard pair: level 1 takes a1 = x_axis; level 2 takes a1 = Re(z_axis^2)."""
    if level not in (1, 2):
        raise ValueError("level must be 1 or 2")
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2 on S^3")
    d = 4
    ix, iy = axis - 1, axis + 1
    if level == 1:
        a1 = PolyField.variable(ix, d)
        a2 = hopf_derivative(a1, 1)
    else:
        x, y = PolyField.variable(ix, d), PolyField.variable(iy, d)
        a1 = x * x - y * y
        a2 = hopf_derivative(a1, 1) * Fraction(1, 2)
    return S3EigenPair(a1, a2, level, axis)


def field_s3(pair: S3EigenPair, ctx: BergerContext) -> TangentField:
    """A = a1 E1 + a2 E2 on S^3 with the quaternionic frame E1 = jN, E2 = kN."""
    if ctx.m != 1:
        raise ValueError("the quaternionic construction requires m = 1")
    m1, m2 = s3_frame_matrices()
    d = 4
    pos = position_components(1)
    comps = []
    for i in range(d):
        e1_i = PolyField.zero(d)
        e2_i = PolyField.zero(d)
        for j in range(d):
            if m1[i, j]:
                e1_i = e1_i + pos[j] * int(m1[i, j])
            if m2[i, j]:
                e2_i = e2_i + pos[j] * int(m2[i, j])
        comps.append(pair.a1 * e1_i + pair.a2 * e2_i)
    return TangentField("s3", {"level": pair.level, "axis": pair.axis}, 1, comps)
