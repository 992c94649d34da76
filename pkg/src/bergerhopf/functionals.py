"""Energy, volume and generalized energy at Hopf fields, with their Hessians.

Four independent routes to every second-variation value, cross-checked
against each other throughout the tests:

  1. ``hess_hopf_closed``: the closed quadratic-form integrand in the
     direction field (norms of the field and its covariant derivatives),
     integrated by exact monomial moments;
  2. ``hess_c2s_coefficients`` / ``hess_aa_closed`` / ``hess_s3_dbarC``:
     per-family scalar coefficient formulas;
  3. ``hess_general_forms``: pointwise assembly of the variational operators
     (one-form omega via finite-difference divergence of the K tensor,
     L_V, K_V, P and the sigma_2 term) contracted in adapted frames and
     integrated by quadrature;
  4. ``second_variation_fd``: Richardson-extrapolated second derivative of
     the functional along the normalized curve (V_mu + t A)/|V_mu + t A|.

Sign conventions: ``|T|^2`` of an operator or vector means the g_mu trace
over an adapted frame carrying the eps_mu weight on the vertical slot, so
norms can be negative on Lorentzian spheres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .fields import TangentField, jp_components, position_components
from .geometry import BergerContext, complex_structure, frame_batch, frame_signs
from .polynomials import PolyField
from .quadrature import (
    PI,
    QuadratureRule,
    integrate_poly_exact,
    sphere_volume,
)

__all__ = [
    "FunctionalId",
    "GammaMinusError",
    "HopfUnitField",
    "HopfVariationCurve",
    "DirectionMoments",
    "direction_moments",
    "evaluate_functional",
    "hess_hopf_closed",
    "hess_c2s_coefficients",
    "hess_aa_closed",
    "hess_s3_dbarC",
    "hess_general_forms",
    "second_variation_fd",
    "omega_form",
    "operator_pack",
    "sigma2",
    "HessianReport",
    "hessian_report",
]


class GammaMinusError(RuntimeError):
    """The volume functional left its domain: det L_W is not positive."""


class FunctionalId:
    """Energy, Volume, or GeneralizedEnergy(lambda)."""

    __slots__ = ("tag", "lam", "lam_exact", "eps_lam")

    def __init__(self, tag: str, lam=None):
        if tag not in ("energy", "volume", "generalized-energy"):
            raise ValueError(f"unknown functional tag {tag!r}")
        if tag == "generalized-energy":
            if lam is None:
                raise ValueError("generalized energy needs a lambda")
            lam_exact = (
                Fraction(repr(lam)) if isinstance(lam, float) else Fraction(lam)
            )
            if lam_exact == 0:
                raise ValueError("lambda must be nonzero")
            self.lam_exact = lam_exact
            self.lam = float(lam_exact)
            self.eps_lam = 1 if lam_exact > 0 else -1
        else:
            if lam is not None:
                raise ValueError(f"{tag} takes no lambda")
            self.lam = None
            self.lam_exact = None
            self.eps_lam = None
        self.tag = tag

    @classmethod
    def energy(cls) -> "FunctionalId":
        return cls("energy")

    @classmethod
    def volume(cls) -> "FunctionalId":
        return cls("volume")

    @classmethod
    def generalized(cls, lam) -> "FunctionalId":
        return cls("generalized-energy", lam)

    def label(self) -> str:
        if self.tag == "generalized-energy":
            return f"egl({self.lam:g})"
        return self.tag

    def __repr__(self) -> str:
        return f"FunctionalId({self.label()})"

    def __eq__(self, other):
        return (
            isinstance(other, FunctionalId)
            and self.tag == other.tag
            and self.lam_exact == other.lam_exact
        )

    def __hash__(self):
        return hash((self.tag, self.lam_exact))


# -- unit fields --------------------------------------------------------------


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def tangent_cov_columns(
    points: np.ndarray,
    directions: np.ndarray,
    value: np.ndarray,
    jac: np.ndarray,
    ctx: BergerContext,
) -> np.ndarray:
    """nabla^mu of a tangent field along frame directions, batched.

    ``directions`` has shape (n, k, d); the return value matches.  Uses the
    vertical/horizontal decomposition of the Berger connection relative to
    the round one.
    """
    p = points
    jp = complex_structure(p, ctx.m)
    der = np.einsum("nij,naj->nai", jac, directions)
    der -= np.einsum("nai,ni->na", der, p)[..., None] * p[:, None, :]
    a_x = np.einsum("naj,nj->na", directions, jp)
    b = np.einsum("ni,ni->n", value, jp)
    x_h = directions - a_x[..., None] * jp[:, None, :]
    y_h = value - b[:, None] * jp
    corr = (ctx.mu - 1.0) * (
        b[:, None, None] * complex_structure(x_h, ctx.m)
        + a_x[..., None] * complex_structure(y_h, ctx.m)[:, None, :]
    )
    return der + corr


class HopfUnitField:
    """The g_mu-unit Hopf field V_mu = Jp / sqrt|mu| with exact derivatives."""

    def __init__(self, ctx: BergerContext):
        self.ctx = ctx

    def value(self, points: np.ndarray) -> np.ndarray:
        return complex_structure(points, self.ctx.m) / self.ctx.sqrt_abs_mu

    def cov_columns(self, points: np.ndarray, directions: np.ndarray) -> np.ndarray:
        # nabla^mu_X V_mu = eps_mu sqrt|mu| J(X_horizontal)
        ctx = self.ctx
        jp = complex_structure(points, ctx.m)
        a_x = np.einsum("naj,nj->na", directions, jp)
        x_h = directions - a_x[..., None] * jp[:, None, :]
        return ctx.eps_mu * ctx.sqrt_abs_mu * complex_structure(x_h, ctx.m)


class HopfVariationCurve:
    """The normalized curve W_t = (V_mu + t A) / |V_mu + t A|_{g_mu}.

    A is g_mu-orthogonal to V_mu, so |V_mu + tA|^2 = eps_mu + t^2 |A|^2 and
    the normalizer is sqrt(1 + eps_mu t^2 |A|^2); for timelike V_mu the
    curve stays a unit timelike field while t^2 |A|^2 < 1.  Field values and
    derivatives of A at the evaluation points are cached so that a finite
    difference in t costs only array arithmetic.
    """

    def __init__(self, ctx: BergerContext, direction: TangentField, points: np.ndarray):
        self.ctx = ctx
        self.direction = direction
        self.points = np.asarray(points, dtype=np.float64)
        self.a_val = direction.value(self.points)
        self.a_jac = direction.jacobian(self.points)
        self.q = np.einsum("ni,ni->n", self.a_val, self.a_val)
        self.grad_q = 2.0 * np.einsum("ni,nij->nj", self.a_val, self.a_jac)
        self.jp = complex_structure(self.points, ctx.m)

    def max_direction_norm(self) -> float:
        return float(np.sqrt(self.q.max()))

    def field_at(self, t: float) -> "_CurveField":
        if self.ctx.eps_mu < 0 and t * t * self.q.max() >= 1.0:
            raise ValueError("t too large: variation leaves the timelike cone")
        return _CurveField(self, t)


class _CurveField:
    def __init__(self, curve: HopfVariationCurve, t: float):
        self.curve = curve
        self.t = t

    def _check_points(self, points):
        if points is not self.curve.points:
            raise ValueError("curve fields evaluate only at their cached points")

    def value(self, points: np.ndarray) -> np.ndarray:
        self._check_points(points)
        c = self.curve
        ctx = c.ctx
        t = self.t
        w = c.jp / ctx.sqrt_abs_mu + t * c.a_val
        n = np.sqrt(1.0 + ctx.eps_mu * t * t * c.q)
        return w / n[:, None]

    def cov_columns(self, points: np.ndarray, directions: np.ndarray) -> np.ndarray:
        self._check_points(points)
        c = self.curve
        ctx = c.ctx
        t = self.t
        w = c.jp / ctx.sqrt_abs_mu + t * c.a_val
        n = np.sqrt(1.0 + ctx.eps_mu * t * t * c.q)
        cov_a = tangent_cov_columns(c.points, directions, c.a_val, c.a_jac, ctx)
        a_x = np.einsum("naj,nj->na", directions, c.jp)
        x_h = directions - a_x[..., None] * c.jp[:, None, :]
        cov_w = (
            ctx.eps_mu * ctx.sqrt_abs_mu * complex_structure(x_h, ctx.m)
            + t * cov_a
        )
        xq = np.einsum("nj,naj->na", c.grad_q, directions)
        xn = ctx.eps_mu * t * t * xq / (2.0 * n[:, None])
        return cov_w / n[:, None, None] - (xn / (n * n)[:, None])[..., None] * w[
            :, None, :
        ]


# -- functional evaluation -----------------------------------------------------


def _gmu_components(
    cov: np.ndarray, frames: np.ndarray, jp: np.ndarray, mu: float
) -> np.ndarray:
    """g_mu(cov_b, F_a) as an (n, k, k) array indexed [n, a, b]."""
    plain = np.einsum("nad,nbd->nab", frames, cov)
    corr = (mu - 1.0) * np.einsum(
        "nad,nd,nbe,ne->nab", frames, jp, cov, jp, optimize=True
    )
    return plain + corr


def _g_transpose(mat: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Transpose of an operator matrix with respect to the signed frame."""
    return signs[None, :, None] * signs[None, None, :] * np.swapaxes(mat, -1, -2)


def _operator_matrix(
    cov: np.ndarray, frames: np.ndarray, jp: np.ndarray, ctx: BergerContext
) -> np.ndarray:
    """Frame-coefficient matrix of an operator from its columns cov_b."""
    signs = frame_signs(ctx)
    return signs[None, :, None] * _gmu_components(cov, frames, jp, ctx.mu)


def evaluate_functional(
    field, fid: FunctionalId, ctx: BergerContext, rule: QuadratureRule
) -> float:
    """Value of the functional on a g_mu-unit field.

    ``field`` must expose ``value(points)`` and ``cov_columns(points,
    directions)``; see HopfUnitField and HopfVariationCurve.field_at.
    """
    if rule.kind == "exact-moments":
        raise TypeError("functional evaluation needs a node-based rule")
    p = rule.points
    w = rule.weights
    values = field.value(p)
    jp = complex_structure(p, ctx.m)
    norms = np.einsum("ni,ni->n", values, values) + (ctx.mu - 1.0) * np.einsum(
        "ni,ni->n", values, jp
    ) ** 2
    if np.max(np.abs(norms - ctx.eps_mu)) > 1e-8:
        raise ValueError("field is not g_mu-unit")
    frames = frame_batch(p, ctx)
    if fid.tag == "volume":
        signs = frame_signs(ctx)
        cov = field.cov_columns(p, frames)
        mat = _operator_matrix(cov, frames, jp, ctx)
        l_mat = np.eye(mat.shape[1])[None] + np.einsum(
            "nab,nbc->nac", _g_transpose(mat, signs), mat
        )
        det = np.linalg.det(l_mat)
        if det.min() <= 0.0:
            raise GammaMinusError("det L_W <= 0 somewhere: volume undefined")
        return ctx.sqrt_abs_mu * float(np.sum(w * np.sqrt(det)))
    # energy and generalized energy share the trace form; energy is lambda=mu
    lam = ctx.mu if fid.tag == "energy" else fid.lam
    eps_lam = ctx.eps_mu if fid.tag == "energy" else fid.eps_lam
    sqrt_abs_lam = abs(lam) ** 0.5
    tilde = frames.copy()
    tilde[:, 0] = jp / sqrt_abs_lam
    cov = field.cov_columns(p, tilde)
    gnorm = np.einsum("nai,nai->na", cov, cov) + (ctx.mu - 1.0) * np.einsum(
        "nai,ni->na", cov, jp
    ) ** 2
    signs_lam = np.ones(tilde.shape[1])
    signs_lam[0] = eps_lam
    g_ff = np.ones(tilde.shape[1])[None] * np.ones_like(gnorm)
    g_ff[:, 0] = ctx.mu / abs(lam)
    tr = np.einsum("a,na->n", signs_lam, g_ff + gnorm)
    return 0.5 * sqrt_abs_lam * float(np.sum(w * tr))


# -- closed Hessian integrand via exact moments --------------------------------


@dataclass(frozen=True)
class DirectionMoments:
    """Exact round-sphere moments of a direction field A (g_mu data).

    All entries are rational coefficients of pi^{m+1}:
      * ``i_a``        : integral of |A|^2;
      * ``i_grad``     : integral of the signed |nabla^mu A|^2;
      * ``i_vert_raw`` : integral of |nabla_V A + (mu-1) J A|^2, which is
                         |mu| times |nabla^mu_{V_mu} A|^2;
      * ``cross_raw``  : integral of <nabla_V A + (mu-1) J A, J A>, which is
                         sqrt|mu| times <nabla^mu_{V_mu} A, J A>.
    """

    i_a: Fraction
    i_grad: Fraction
    i_vert_raw: Fraction
    cross_raw: Fraction
    m: int
    mu: Fraction

    def i_vert(self) -> Fraction:
        return self.i_vert_raw / abs(self.mu)


_MOMENT_CACHE: dict = {}


def _apply_j(comps: Sequence[PolyField], m: int) -> list:
    return [-comps[i + m + 1] for i in range(m + 1)] + [
        comps[i] for i in range(m + 1)
    ]


def _dot(a: Sequence[PolyField], b: Sequence[PolyField]) -> PolyField:
    out = PolyField.zero(a[0].nvars)
    for x, y in zip(a, b):
        out = out + x * y
    return out


def direction_moments(A: TangentField, ctx: BergerContext) -> DirectionMoments:
    """Exact moments feeding every closed Hessian form for direction A.

    The signed trace |nabla^mu A|^2 is computed frame-free as

        sum_alpha g_mu(T(P e_alpha), T(P e_alpha)) + (1/mu - 1) g_mu(T(V), T(V))

    with T(X) = nabla^mu_X A, P the tangent projection and the sum over the
    ambient basis; this equals the adapted-frame trace with the eps_mu
    vertical weight.
    """
    cache_key = (A.key, ctx.m, ctx.mu_exact)
    hit = _MOMENT_CACHE.get(cache_key)
    if hit is not None:
        return hit
    m, d = ctx.m, ctx.dim
    mu = ctx.mu_exact
    comps = list(A.components)
    jac = [[c.diff(j) for j in range(d)] for c in comps]
    pos = position_components(m)
    jp = jp_components(m)
    ja = _apply_j(comps, m)

    def cov_along(x_polys, a_of_x):
        """T(X) = proj(DA . X) + (mu-1) <X,V> J A, componentwise."""
        der = []
        for i in range(d):
            acc = PolyField.zero(d)
            for j in range(d):
                acc = acc + jac[i][j] * x_polys[j]
            der.append(acc)
        radial = _dot(der, pos)
        scale = mu - 1
        return [
            der[i] - radial * pos[i] + a_of_x * ja[i] * scale for i in range(d)
        ]

    one = PolyField.constant(1, d)
    d_tilde = cov_along(jp, one)  # sqrt|mu| * nabla^mu_{V_mu} A

    i_a = integrate_poly_exact(_dot(comps, comps), m)
    i_vert_raw = integrate_poly_exact(_dot(d_tilde, d_tilde), m)
    cross_raw = integrate_poly_exact(_dot(d_tilde, ja), m)

    i_grad = (Fraction(1) / mu - 1) * i_vert_raw
    for alpha in range(d):
        x_polys = [
            (one if i == alpha else PolyField.zero(d)) - pos[alpha] * pos[i]
            for i in range(d)
        ]
        a_of_x = _dot(x_polys, jp)
        t_alpha = cov_along(x_polys, a_of_x)
        q = _dot(t_alpha, t_alpha)
        vert_part = _dot(t_alpha, jp)
        q = q + vert_part * vert_part * (mu - 1)
        i_grad += integrate_poly_exact(q, m)

    result = DirectionMoments(i_a, i_grad, i_vert_raw, cross_raw, m, mu)
    _MOMENT_CACHE[cache_key] = result
    return result


def hess_hopf_closed(
    A: TangentField,
    fid: FunctionalId,
    ctx: BergerContext,
    rule: Optional[QuadratureRule] = None,
) -> float:
    """Hessian at V_mu in direction A via the closed quadratic-form integrand.

    Generalized energy:
        -2m eps_mu sqrt|lam mu| |A|^2 + sqrt|lam/mu| |nabla^mu A|^2
        + (eps_lam sqrt|mu/lam| - eps_mu sqrt|lam/mu|) |nabla^mu_{V_mu} A|^2
    Energy:   -2m mu |A|^2 + |nabla^mu A|^2
    Volume:   (1+|mu|)^{m-2} ( |nabla^mu A|^2
                + mu |nabla^mu_{V_mu} A + eps_mu sqrt|mu| J A|^2
                + mu(-2m - 2m|mu| + 2 eps_mu + 2 eps_mu (m - mu)) |A|^2 )
    all integrated against dv_mu.  With no rule (or the exact-moments rule)
    the integrals are exact monomial moments; a node rule evaluates the same
    densities pointwise in adapted frames.
    """
    if rule is not None and rule.kind != "exact-moments":
        return _hess_hopf_nodes(A, fid, ctx, rule)
    mom = direction_moments(A, ctx)
    pi_pow = PI ** (ctx.m + 1)
    i_a = float(mom.i_a) * pi_pow
    i_grad = float(mom.i_grad) * pi_pow
    i_vert = float(mom.i_vert()) * pi_pow
    cross = float(mom.cross_raw) * pi_pow  # sqrt|mu| * integral of <D, JA>
    return _hess_hopf_assemble(fid, ctx, i_a, i_grad, i_vert, cross)


def _hess_hopf_assemble(fid, ctx, i_a, i_grad, i_vert, cross_raw):
    """Combine the four integrand moments into the Hessian value."""
    m = ctx.m
    mu = ctx.mu
    meas = ctx.sqrt_abs_mu
    if fid.tag == "energy":
        return meas * (-2.0 * m * mu * i_a + i_grad)
    if fid.tag == "generalized-energy":
        lam = fid.lam
        c0 = -2.0 * m * ctx.eps_mu * math.sqrt(abs(lam * mu))
        c1 = math.sqrt(abs(lam / mu))
        c2 = fid.eps_lam * math.sqrt(abs(mu / lam)) - ctx.eps_mu * c1
        return meas * (c0 * i_a + c1 * i_grad + c2 * i_vert)
    middle = mu * (i_vert + 2.0 * ctx.eps_mu * cross_raw + abs(mu) * i_a)
    c_a = mu * (
        -2.0 * m - 2.0 * m * abs(mu) + 2.0 * ctx.eps_mu + 2.0 * ctx.eps_mu * (m - mu)
    )
    return meas * (1.0 + abs(mu)) ** (m - 2) * (i_grad + middle + c_a * i_a)


def _hess_hopf_nodes(A, fid, ctx, rule):
    """Node-rule version: the same densities through adapted frames."""
    p = rule.points
    w = rule.weights
    jp = complex_structure(p, ctx.m)
    frames = frame_batch(p, ctx)
    signs = frame_signs(ctx)
    a_val = A.value(p)
    cov = tangent_cov_columns(p, frames, a_val, A.jacobian(p), ctx)
    gnorm = np.einsum("nai,nai->na", cov, cov) + (ctx.mu - 1.0) * np.einsum(
        "nai,ni->na", cov, jp
    ) ** 2
    i_a = float(np.sum(w * np.einsum("ni,ni->n", a_val, a_val)))
    i_grad = float(np.sum(w * np.einsum("a,na->n", signs, gnorm)))
    i_vert = float(np.sum(w * gnorm[:, 0]))
    ja = complex_structure(a_val, ctx.m)
    cross = np.einsum("ni,ni->n", cov[:, 0], ja) + (ctx.mu - 1.0) * np.einsum(
        "ni,ni->n", cov[:, 0], jp
    ) * np.einsum("ni,ni->n", ja, jp)
    # cross_raw in the moment route carries a sqrt|mu| factor
    cross_raw = float(np.sum(w * cross)) * ctx.sqrt_abs_mu
    return _hess_hopf_assemble(fid, ctx, i_a, i_grad, i_vert, cross_raw)


# -- per-family coefficient formulas -------------------------------------------


@dataclass(frozen=True)
class C2sCoefficients:
    """Scalar Hessian coefficients for the C_2s family (exact rationals).

    The Hessians are these coefficients times int |C_2s|^2 dv_mu, with the
    prefactor sqrt(|lam|/|mu|) on the generalized-energy one.
    """

    e_lambda: Optional[Fraction]
    energy: Fraction
    f_vol: Fraction
    volume: Fraction  # (2/mu)(1+|mu|)^{m-2} f_vol

    def as_floats(self) -> tuple:
        el = None if self.e_lambda is None else float(self.e_lambda)
        return el, float(self.energy), float(self.volume)


def hess_c2s_coefficients(s: int, m: int, mu, lam=None) -> C2sCoefficients:
    if s < 1:
        raise ValueError("s must be >= 1")
    mu = Fraction(repr(mu)) if isinstance(mu, float) else Fraction(mu)
    if mu == 0:
        raise ValueError("mu must be nonzero")
    eps = 1 if mu > 0 else -1
    e_lambda = None
    if lam is not None:
        lam = Fraction(repr(lam)) if isinstance(lam, float) else Fraction(lam)
        if lam == 0:
            raise ValueError("lambda must be nonzero")
        e_lambda = (
            mu * (1 - 2 * m)
            + (2 * s - mu) ** 2 / lam
            + 2 * (2 * s - 1) * (m + 1)
            + 4 * s
        )
    energy = Fraction(2) / mu * (
        mu**2 * (1 - m) + mu * (2 * s - 1) * (m + 1) + 2 * s**2
    )
    f_vol = (
        mu**2 * (1 - m) * (1 + abs(mu))
        + mu * abs(mu) * (1 + m - 4 * s)
        + mu * ((2 * s - 1) * (m + 1) + 2 * eps * s**2)
        + 2 * s**2
    )
    volume = Fraction(2) / mu * (1 + abs(mu)) ** (m - 2) * f_vol
    return C2sCoefficients(e_lambda, energy, f_vol, volume)


def hess_eigenfunction_forms(
    f: PolyField, fid: FunctionalId, ctx: BergerContext
) -> float:
    """Hessians on C = grad_mu f - eps_mu V_mu(f) V_mu via the f-integrals.

    For a degree-s homogeneous harmonic f with J-compatible Hessian the
    Hessian values reduce to combinations of int f^2 and int |Hess f|^2:

      generalized: sqrt(|lam|/|mu|) int ((2ms((1-2m)mu + (s-mu)^2/lam
                     - 4(s-1)^2 + 2s) - 4s^2(s-1)^2) f^2 + |Hess f|^2) dv_mu
      energy:      same with (2-2m)mu + s^2/mu - 4(s-1)^2 inside
      volume:      (1+|mu|)^{m-2} with
                   h = mu((2-2m)(1+|mu|) + 2 eps_mu (1+m-2s))
                       + s^2/mu - 4(s-1)^2 + eps_mu s^2.

    Valid for any such f, in particular the degree-1 case where C is the
    projected constant field A_a.
    """
    from .harmonics import in_hypothesis_class

    if not in_hypothesis_class(f, ctx.m):
        raise ValueError("f must be homogeneous, harmonic and J-compatible")
    s = f.degree()
    if s < 1:
        raise ValueError("constant f gives the zero direction")
    m = ctx.m
    mu = ctx.mu
    eps = ctx.eps_mu
    d = ctx.dim
    pi_pow = PI ** (m + 1)
    i_f2 = float(integrate_poly_exact(f * f, m)) * pi_pow
    hess = f.hessian()
    frob = PolyField.zero(d)
    for i in range(d):
        for j in range(d):
            frob = frob + hess[i][j] * hess[i][j]
    i_h = float(integrate_poly_exact(frob, m)) * pi_pow
    tail = 4.0 * s * s * (s - 1) ** 2
    if fid.tag == "energy":
        c = 2 * m * s * ((2 - 2 * m) * mu + s * s / mu - 4 * (s - 1) ** 2) - tail
        return ctx.sqrt_abs_mu * (c * i_f2 + i_h)
    if fid.tag == "generalized-energy":
        lam = fid.lam
        c = (
            2 * m * s
            * ((1 - 2 * m) * mu + (s - mu) ** 2 / lam - 4 * (s - 1) ** 2 + 2 * s)
            - tail
        )
        return math.sqrt(abs(lam)) * (c * i_f2 + i_h)
    h = (
        mu * ((2 - 2 * m) * (1 + abs(mu)) + 2 * eps * (1 + m - 2 * s))
        + s * s / mu
        - 4 * (s - 1) ** 2
        + eps * s * s
    )
    c = 2 * m * s * h - tail
    return ctx.sqrt_abs_mu * (1 + abs(mu)) ** (m - 2) * (c * i_f2 + i_h)


def c2s_norm_integral(s: int, ctx: BergerContext, axis: int = 1) -> float:
    """int |C_2s|^2 dv_mu via the eigenfunction reduction 2m(2s) int f^2 dv_mu."""
    from .harmonics import f2s

    f = f2s(s, axis, ctx.m)
    i_f2 = float(integrate_poly_exact(f * f, ctx.m)) * PI ** (ctx.m + 1)
    return 2.0 * ctx.m * (2 * s) * ctx.sqrt_abs_mu * i_f2


def hess_aa_closed(a, fid: FunctionalId, ctx: BergerContext) -> float:
    """Closed Hessian values for the A_a family on Lorentzian spheres.

    Energy: (sqrt(-mu) m/(m+1)) |a|^2 ((1-2m)mu + 2 + (mu-1)^2/mu) vol
    Volume: (1-mu)^{m-2} times the same prefactor with
            f(m,mu) = (2m-1)mu^2 + (1-4m)mu + 2 + (1-mu)(mu-1)^2/mu.
    """
    if ctx.mu >= 0:
        raise ValueError("these closed forms hold for mu < 0")
    m = ctx.m
    mu = ctx.mu
    a = np.asarray(a, dtype=np.float64)
    norm2 = float(a @ a)
    pref = math.sqrt(-mu) * m / (m + 1) * norm2 * sphere_volume(m)
    if fid.tag == "energy":
        return pref * ((1 - 2 * m) * mu + 2 + (mu - 1) ** 2 / mu)
    if fid.tag == "volume":
        f = (2 * m - 1) * mu**2 + (1 - 4 * m) * mu + 2 + (1 - mu) * (mu - 1) ** 2 / mu
        return (1 - mu) ** (m - 2) * pref * f
    raise ValueError("closed A_a values exist for energy and volume only")


@dataclass(frozen=True)
class S3DbarReport:
    """Hessian of the generalized energy on an S^3 frame-weighted direction.

    ``dbar_energy`` is the integral of (1/2)|Dbar^C A|^2 over the round
    sphere, expanded as sum_b_sq - 2*cross; the eigenfunction pairs make it
    vanish identically.
    """

    hessian: float
    dbar_energy: Fraction
    sum_b_sq: Fraction
    cross: Fraction
    i_a: Fraction


def hess_s3_dbarC(pair, mu, lam) -> S3DbarReport:
    """Generalized-energy Hessian on A = a1 E1 + a2 E2 via the Dbar^C form.

    sqrt(lam/mu) int ((2L - mu + (mu - 2 - L)^2/lam)|A|^2
                      + (1/2)|Dbar^C A|^2) dv_mu,  L = level,
    with (1/2)|Dbar^C A|^2 integrating to
    int sum_{ij} (E_i(a_j))^2 - 2 int (B_2^1 B_1^2 - B_2^2 B_1^1).
    Valid on Riemannian Berger 3-spheres (mu > 0) for lam != 0.
    """
    from .geometry import s3_frame_matrices

    mu_f = float(mu)
    lam_f = float(lam)
    if mu_f <= 0:
        raise ValueError("the Dbar^C form is used on Riemannian spheres (mu > 0)")
    if lam_f == 0:
        raise ValueError("lambda must be nonzero")
    level = pair.level
    m1, m2 = s3_frame_matrices()
    pos = position_components(1)
    e1 = [
        sum(
            (pos[j] * int(m1[i, j]) for j in range(4) if m1[i, j]),
            PolyField.zero(4),
        )
        for i in range(4)
    ]
    e2 = [
        sum(
            (pos[j] * int(m2[i, j]) for j in range(4) if m2[i, j]),
            PolyField.zero(4),
        )
        for i in range(4)
    ]

    def e_deriv(field_comps, f):
        grad = f.gradient()
        return _dot(grad, field_comps)

    b11 = e_deriv(e1, pair.a1)
    b12 = e_deriv(e1, pair.a2)
    b21 = e_deriv(e2, pair.a1)
    b22 = e_deriv(e2, pair.a2)
    sum_b_sq = integrate_poly_exact(b11 * b11 + b12 * b12 + b21 * b21 + b22 * b22, 1)
    cross = integrate_poly_exact(b21 * b12 - b22 * b11, 1)
    dbar = sum_b_sq - 2 * cross
    i_a = integrate_poly_exact(pair.a1 * pair.a1 + pair.a2 * pair.a2, 1)
    coeff = 2 * level - mu_f + (mu_f - 2 - level) ** 2 / lam_f
    pi2 = PI**2
    hessian = math.sqrt(abs(lam_f) / mu_f) * (
        coeff * math.sqrt(mu_f) * float(i_a) * pi2
        + math.sqrt(mu_f) * float(dbar) * pi2
    )
    return S3DbarReport(hessian, dbar, sum_b_sq, cross, i_a)


# -- general variational forms -------------------------------------------------


def sigma2(mat: np.ndarray) -> np.ndarray:
    """(tr M)^2 - tr(M^2), batched over leading axes."""
    tr = np.trace(mat, axis1=-2, axis2=-1)
    tr_sq = np.trace(mat @ mat, axis1=-2, axis2=-1)
    return tr * tr - tr_sq


def _det_factor(fid: FunctionalId, ctx: BergerContext) -> float:
    """sqrt|det P| for the metric pair (g_mu, g_tilde) of the functional."""
    if fid.tag == "energy":
        return 1.0
    if fid.tag == "generalized-energy":
        return math.sqrt(abs(fid.lam / ctx.mu))
    return (1.0 + abs(ctx.mu)) ** (ctx.m - 1)  # volume: uses L_V in place of P


def _k_apply(
    points: np.ndarray, vecs: np.ndarray, ctx: BergerContext, c_det: float
) -> np.ndarray:
    """K(w) = -eps_mu sqrt|mu| c_det J(w_horizontal) at each point."""
    jp = complex_structure(points, ctx.m)
    w_h = vecs - np.einsum("...i,...i->...", vecs, jp)[..., None] * jp
    return -ctx.eps_mu * ctx.sqrt_abs_mu * c_det * complex_structure(w_h, ctx.m)


def omega_form(
    points: np.ndarray,
    ctx: BergerContext,
    fid: FunctionalId,
    direction: Optional[np.ndarray] = None,
    step: float = 1e-5,
) -> np.ndarray:
    """The criticality one-form omega_{(V_mu, g_tilde)} evaluated on a field.

    omega(Y) = sum_a eps_a g_mu((nabla^mu_{F_a} K) Y, F_a), with the K tensor
    differentiated by central differences along sphere curves (the tensor
    derivative is nabla(K(Y)) - K(nabla Y) for an extension of Y).

    ``direction=None`` takes Y = V_mu (the global field); otherwise
    ``direction`` is an (n, d) array of horizontal tangent vectors at
    ``points``, extended by projecting the constant vector.
    """
    p = np.asarray(points, dtype=np.float64)
    n, d = p.shape
    c_det = _det_factor(fid, ctx)
    jp = complex_structure(p, ctx.m)
    frames = frame_batch(p, ctx)
    signs = frame_signs(ctx)
    mu = ctx.mu

    if direction is None:

        def y_field(q):
            return complex_structure(q, ctx.m) / ctx.sqrt_abs_mu

        def cov_y(fa, fa_h):
            return ctx.eps_mu * ctx.sqrt_abs_mu * complex_structure(fa_h, ctx.m)

    else:
        y0 = np.asarray(direction, dtype=np.float64)

        def y_field(q):
            jq = complex_structure(q, ctx.m)
            return (
                y0
                - np.einsum("ni,ni->n", y0, q)[:, None] * q
                - np.einsum("ni,ni->n", y0, jq)[:, None] * jq
            )

        def cov_y(fa, fa_h):
            # exact jacobian of the projected-constant extension
            jq = complex_structure(p, ctx.m)
            jfa = complex_structure(fa, ctx.m)
            der = (
                -np.einsum("ni,ni->n", y0, fa)[:, None] * p
                - np.einsum("ni,ni->n", y0, p)[:, None] * fa
                - np.einsum("ni,ni->n", y0, jfa)[:, None] * jq
                - np.einsum("ni,ni->n", y0, jq)[:, None] * jfa
            )
            der -= np.einsum("ni,ni->n", der, p)[:, None] * p
            yv = y_field(p)
            b = np.einsum("ni,ni->n", yv, jq)
            a = np.einsum("ni,ni->n", fa, jq)
            y_h = yv - b[:, None] * jq
            return der + (mu - 1.0) * (
                b[:, None] * complex_structure(fa_h, ctx.m)
                + a[:, None] * complex_structure(y_h, ctx.m)
            )

    ky_p = _k_apply(p, y_field(p), ctx, c_det)
    b_k = np.einsum("ni,ni->n", ky_p, jp)
    ky_h = ky_p - b_k[:, None] * jp
    omega = np.zeros(n)
    for a in range(2 * ctx.m + 1):
        fa = frames[:, a]
        a_f = np.einsum("ni,ni->n", fa, jp)
        fa_h = fa - a_f[:, None] * jp
        qp = _normalize_rows(p + step * fa)
        qm = _normalize_rows(p - step * fa)
        d1 = (_k_apply(qp, y_field(qp), ctx, c_det) - _k_apply(qm, y_field(qm), ctx, c_det)) / (
            2.0 * step
        )
        d1 -= np.einsum("ni,ni->n", d1, p)[:, None] * p
        d1 += (mu - 1.0) * (
            b_k[:, None] * complex_structure(fa_h, ctx.m)
            + a_f[:, None] * complex_structure(ky_h, ctx.m)
        )
        diff = d1 - _k_apply(p, cov_y(fa, fa_h), ctx, c_det)
        g_val = np.einsum("ni,ni->n", diff, fa) + (mu - 1.0) * np.einsum(
            "ni,ni->n", diff, jp
        ) * a_f
        omega += signs[a] * g_val
    return omega


@dataclass(frozen=True)
class OperatorPack:
    """Frame matrices of the pointwise variational operators at one point.

    ``nabla_v`` is the operator X -> nabla^mu_X V_mu, ``l_v`` is
    Id + (nabla V)^t nabla V, ``p_tilde`` the metric comparison operator and
    ``k_v`` = sqrt(det L) L^{-1} (nabla V)^t.
    """

    nabla_v: np.ndarray
    l_v: np.ndarray
    p_tilde: np.ndarray
    k_v: np.ndarray
    det_l: float


def operator_pack(point: np.ndarray, ctx: BergerContext, fid: FunctionalId) -> OperatorPack:
    p = np.asarray(point, dtype=np.float64)[None, :]
    frames = frame_batch(p, ctx)
    signs = frame_signs(ctx)
    jp = complex_structure(p, ctx.m)
    hopf = HopfUnitField(ctx)
    cov = hopf.cov_columns(p, frames)
    mv = _operator_matrix(cov, frames, jp, ctx)[0]
    l_v = np.eye(mv.shape[0]) + _g_transpose(mv[None], signs)[0] @ mv
    det_l = float(np.linalg.det(l_v))
    if det_l <= 0:
        raise GammaMinusError("det L_V <= 0: not in the volume domain")
    k_v = math.sqrt(det_l) * np.linalg.solve(l_v, _g_transpose(mv[None], signs)[0])
    k = mv.shape[0]
    p_tilde = np.eye(k)
    if fid.tag == "generalized-energy":
        p_tilde[0, 0] = fid.lam / ctx.mu
    elif fid.tag == "volume":
        p_tilde = l_v.copy()
    return OperatorPack(mv, l_v, p_tilde, k_v, det_l)


def hess_general_forms(
    A: TangentField, fid: FunctionalId, ctx: BergerContext, rule: QuadratureRule
) -> float:
    """Hessian from the general variational formulas, assembled pointwise.

    Riemannian and Lorentzian branches differ only in the sign of the omega
    term.  The sigma2 contribution of the volume Hessian enters as
    sigma2(K_V nabla A)/sqrt(det L_V) with sigma2 = (tr)^2 - tr(square).
    """
    if rule.kind == "exact-moments":
        raise TypeError("the general forms need a node-based rule")
    p = rule.points
    w = rule.weights
    jp = complex_structure(p, ctx.m)
    frames = frame_batch(p, ctx)
    signs = frame_signs(ctx)
    a_val = A.value(p)
    cov_a = tangent_cov_columns(p, frames, a_val, A.jacobian(p), ctx)
    ma = _operator_matrix(cov_a, frames, jp, ctx)
    norm_a = np.einsum("ni,ni->n", a_val, a_val)
    omega = omega_form(p, ctx, fid)
    density = ctx.eps_mu * omega * norm_a
    ma_t = _g_transpose(ma, signs)
    if fid.tag == "volume":
        hopf = HopfUnitField(ctx)
        mv = _operator_matrix(hopf.cov_columns(p, frames), frames, jp, ctx)
        l_mat = np.eye(mv.shape[1])[None] + _g_transpose(mv, signs) @ mv
        det_l = np.linalg.det(l_mat)
        if det_l.min() <= 0:
            raise GammaMinusError("det L_V <= 0: volume Hessian undefined")
        sq = np.sqrt(det_l)
        k_v = sq[:, None, None] * np.linalg.solve(l_mat, _g_transpose(mv, signs))
        km = k_v @ ma
        density += sigma2(km) / sq
        inner = ma_t @ mv @ km
        density -= np.trace(np.linalg.solve(l_mat, inner), axis1=-2, axis2=-1)
        density += sq * np.trace(
            np.linalg.solve(l_mat, ma_t @ ma), axis1=-2, axis2=-1
        )
    else:
        lam = ctx.mu if fid.tag == "energy" else fid.lam
        pinv_diag = np.ones(ma.shape[1])
        pinv_diag[0] = ctx.mu / lam
        prod = ma_t @ ma
        tr = np.einsum("naa,a->n", prod, pinv_diag)
        density += math.sqrt(abs(lam / ctx.mu)) * tr
    return ctx.sqrt_abs_mu * float(np.sum(w * density))


# -- finite-difference second variation ----------------------------------------


@dataclass(frozen=True)
class FDVariation:
    """Five-point finite-difference variation of a functional along the curve.

    ``stencil_gap`` compares the fourth-order second derivative against the
    plain three-point one; a large gap flags an unsuitable step.
    """

    second: float
    first: float
    step: float
    value_at_zero: float
    stencil_gap: float


def second_variation_fd(
    A: TangentField,
    fid: FunctionalId,
    ctx: BergerContext,
    rule: QuadratureRule,
    step: Optional[float] = None,
) -> FDVariation:
    """d^2/dt^2 of the functional along W_t = (V_mu + tA)/|V_mu + tA|.

    Evaluates at t in {0, +-h, +-2h} and returns the fourth-order central
    second derivative together with the first derivative (which must vanish:
    V_mu is critical).  The default step keeps 2h |A| below 0.1 so Lorentzian
    curves stay timelike.
    """
    curve = HopfVariationCurve(ctx, A, rule.points)
    if step is None:
        step = min(5e-3, 0.05 / max(1.0, curve.max_direction_norm()))
    h = step
    phi = {}
    for k in (-2, -1, 0, 1, 2):
        phi[k] = evaluate_functional(curve.field_at(k * h), fid, ctx, rule)
    first = (phi[-2] - 8 * phi[-1] + 8 * phi[1] - phi[2]) / (12 * h)
    second = (-phi[2] + 16 * phi[1] - 30 * phi[0] + 16 * phi[-1] - phi[-2]) / (
        12 * h * h
    )
    second3 = (phi[1] - 2 * phi[0] + phi[-1]) / (h * h)
    return FDVariation(second, first, h, phi[0], abs(second - second3))


# -- reports --------------------------------------------------------------------


@dataclass(frozen=True)
class HessianReport:
    functional: str
    lam: Optional[float]
    m: int
    mu: float
    direction: dict
    closed_form: float
    oracles: tuple  # of (label, value, stderr-or-None)
    max_discrepancy: float
    verdict: str

    def oracle(self, label: str) -> Optional[float]:
        for name, value, _ in self.oracles:
            if name == label:
                return value
        return None

    def to_json(self) -> dict:
        return {
            "functional": self.functional,
            "lambda": self.lam,
            "m": self.m,
            "mu": self.mu,
            "direction": self.direction,
            "closed_form": self.closed_form,
            "oracles": [
                {"label": l, "value": v, "stderr": s} for l, v, s in self.oracles
            ],
            "max_discrepancy": self.max_discrepancy,
            "verdict": self.verdict,
        }


def _relative_gap(a: float, b: float, scale: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-9 * max(scale, 1.0))


def closed_family_value(
    A: TangentField, fid: FunctionalId, ctx: BergerContext
) -> Optional[float]:
    """Per-family coefficient-formula value, when one is quoted."""
    if A.name == "C2s":
        s = A.params["s"]
        coeffs = hess_c2s_coefficients(s, ctx.m, ctx.mu_exact, fid.lam_exact)
        norm = c2s_norm_integral(s, ctx, axis=A.params.get("axis", 1))
        if fid.tag == "energy":
            return float(coeffs.energy) * norm
        if fid.tag == "volume":
            return float(coeffs.volume) * norm
        pref = math.sqrt(abs(fid.lam) / abs(ctx.mu))
        return pref * float(coeffs.e_lambda) * norm
    if A.name == "Aa" and ctx.mu < 0 and fid.tag in ("energy", "volume"):
        a = [Fraction(x) for x in A.params["a"]]
        return hess_aa_closed([float(x) for x in a], fid, ctx)
    if A.name == "s3" and fid.tag == "generalized-energy" and ctx.mu > 0:
        from .fields import s3_eigenpair

        pair = s3_eigenpair(A.params["level"], A.params.get("axis", 1))
        return hess_s3_dbarC(pair, ctx.mu, fid.lam).hessian
    return None


def hessian_report(
    A: TangentField,
    fid: FunctionalId,
    ctx: BergerContext,
    rule: Optional[QuadratureRule] = None,
    include_fd: bool = True,
    zero_tol: float = 1e-6,
) -> HessianReport:
    """Closed-form value with oracle columns and a sign verdict."""
    exact_val = hess_hopf_closed(A, fid, ctx)
    formula = closed_family_value(A, fid, ctx)
    closed = formula if formula is not None else exact_val
    oracles = [("exact-moment", exact_val, None)]
    scale = (
        float(direction_moments(A, ctx).i_a) * PI ** (ctx.m + 1) * ctx.sqrt_abs_mu
    )
    if include_fd and rule is not None and rule.kind != "exact-moments":
        fd = second_variation_fd(A, fid, ctx, rule)
        oracles.append(("finite-difference", fd.second, None))
    gaps = [_relative_gap(closed, v, scale) for _, v, _ in oracles]
    max_gap = max(gaps) if gaps else 0.0
    values = [closed] + [v for _, v, _ in oracles]
    tol = zero_tol * max(scale, 1.0)
    if all(v < -tol for v in values):
        verdict = "negative"
    elif all(v > tol for v in values):
        verdict = "positive"
    elif all(abs(v) <= tol for v in values):
        verdict = "zero"
    else:
        verdict = "mixed"
    return HessianReport(
        fid.tag,
        fid.lam,
        ctx.m,
        ctx.mu,
        A.describe(),
        closed,
        tuple(oracles),
        max_gap,
        verdict,
    )
