"""Embedded geometry of the sphere S^{2m+1} in R^{2m+2}.

Complex structure J, Berger metrics g_mu (round metric with the Hopf
direction rescaled by mu), both Levi-Civita connections, adapted frames and
the quaternionic frame on S^3.  Points and tangent vectors are plain numpy
vectors wrapped in thin validating types; batched internals operate on raw
(n, d) arrays.

Conventions, fixed once for the whole package:
  * coordinates pair as z_j = x_j + i*x_{m+1+j} for j = 0..m (0-based), so
    J e_j = e_{m+1+j} and J e_{m+1+j} = -e_j;
  * the round Hopf field is V(p) = Jp and the g_mu-unit field is
    V_mu = V / sqrt|mu| (timelike when mu < 0);
  * on S^3 the quaternion identification is q = z_1 + z_2 j, so that
    V = iN, E1 = jN, E2 = kN.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import numpy as np

TANGENCY_TOL = 1e-10
UNIT_TOL = 1e-12
_GS_SEED_TOL = 1e-8


def _exact_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        # repr round-trips; "2.6" becomes 13/5 rather than the binary float
        return Fraction(repr(value))
    raise TypeError(f"unsupported mu type {type(value)!r}")


class BergerContext:
    """The pair (m, mu): sphere S^{2m+1} with the Berger metric g_mu."""

    __slots__ = ("m", "mu", "mu_exact", "eps_mu")

    def __init__(self, m: int, mu):
        if m < 1:
            raise ValueError("m must be a positive integer")
        mu_exact = _exact_fraction(mu)
        if mu_exact == 0:
            raise ValueError("mu must be nonzero")
        self.m = int(m)
        self.mu_exact = mu_exact
        self.mu = float(mu_exact)
        self.eps_mu = 1 if mu_exact > 0 else -1

    @property
    def dim(self) -> int:
        """Ambient dimension 2m+2."""
        return 2 * self.m + 2

    @property
    def sqrt_abs_mu(self) -> float:
        return abs(self.mu) ** 0.5

    @property
    def is_lorentzian(self) -> bool:
        return self.eps_mu < 0

    def __repr__(self) -> str:
        return f"BergerContext(m={self.m}, mu={self.mu_exact})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BergerContext)
            and self.m == other.m
            and self.mu_exact == other.mu_exact
        )

    def __hash__(self):
        return hash((self.m, self.mu_exact))


@dataclass(frozen=True)
class SpherePoint:
    position: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.position, dtype=np.float64)
        object.__setattr__(self, "position", p)
        if abs(p @ p - 1.0) > UNIT_TOL:
            raise ValueError("point is not on the unit sphere")


@dataclass(frozen=True)
class TangentVector:
    base: SpherePoint
    vec: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vec, dtype=np.float64)
        object.__setattr__(self, "vec", v)
        p = self.base.position
        if v.shape != p.shape:
            raise ValueError("dimension mismatch with base point")
        if abs(v @ p) > TANGENCY_TOL * max(1.0, float(np.linalg.norm(v))):
            raise ValueError("vector is not tangent to the sphere")


@dataclass(frozen=True)
class AdaptedFrame:
    base: SpherePoint
    vertical: TangentVector
    horizontal: tuple

    def vectors(self) -> np.ndarray:
        return np.vstack(
            [self.vertical.vec] + [h.vec for h in self.horizontal]
        )

    def gram_matrix(self, ctx: BergerContext) -> np.ndarray:
        vecs = self.vectors()
        p = self.base.position
        return _gram_mu(vecs, p, ctx)


# -- complex structure ------------------------------------------------------


def complex_structure(u: np.ndarray, m: int) -> np.ndarray:
    """Apply J to ambient vectors; accepts (..., 2m+2) batches."""
    u = np.asarray(u, dtype=np.float64)
    d = 2 * m + 2
    if u.shape[-1] != d:
        raise ValueError(f"expected last dimension {d}, got {u.shape[-1]}")
    out = np.empty_like(u)
    out[..., : m + 1] = -u[..., m + 1 :]
    out[..., m + 1 :] = u[..., : m + 1]
    return out


def j_matrix(m: int) -> np.ndarray:
    d = 2 * m + 2
    return complex_structure(np.eye(d), m).T


# -- points, fields and metrics ---------------------------------------------


def sample_sphere(m: int, n: int, seed: int = 0) -> np.ndarray:
    """n reproducible uniform points on S^{2m+1}, as an (n, 2m+2) array."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 2 * m + 2))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def hopf_flow(points: np.ndarray, t: float, m: int) -> np.ndarray:
    """Flow of the round Hopf field: rotation p -> cos(t) p + sin(t) Jp."""
    points = np.asarray(points, dtype=np.float64)
    return np.cos(t) * points + np.sin(t) * complex_structure(points, m)


def hopf_field(p: SpherePoint, ctx: BergerContext) -> TangentVector:
    """g_mu-unit Hopf vector V_mu(p) = Jp / sqrt|mu|."""
    jp = complex_structure(p.position, ctx.m)
    return TangentVector(p, jp / ctx.sqrt_abs_mu)


def project_tangent(p: SpherePoint, u: np.ndarray) -> TangentVector:
    u = np.asarray(u, dtype=np.float64)
    pos = p.position
    return TangentVector(p, u - (u @ pos) * pos)


def _gmu_pair(x: np.ndarray, y: np.ndarray, jp: np.ndarray, mu: float) -> float:
    return float(x @ y + (mu - 1.0) * (x @ jp) * (y @ jp))


def g_mu(x: TangentVector, y: TangentVector, ctx: BergerContext) -> float:
    """Berger metric: round metric with the vertical direction scaled by mu."""
    if not np.array_equal(x.base.position, y.base.position):
        raise ValueError("tangent vectors based at different points")
    jp = complex_structure(x.base.position, ctx.m)
    return _gmu_pair(x.vec, y.vec, jp, ctx.mu)


def _gram_mu(vecs: np.ndarray, p: np.ndarray, ctx: BergerContext) -> np.ndarray:
    jp = complex_structure(p, ctx.m)
    a = vecs @ vecs.T
    b = vecs @ jp
    return a + (ctx.mu - 1.0) * np.outer(b, b)


# -- covariant derivatives --------------------------------------------------


def _field_directional(field, p: np.ndarray, x: np.ndarray, step: float) -> np.ndarray:
    """Ambient directional derivative of a field along tangent direction x."""
    jac = getattr(field, "jacobian", None)
    if jac is not None:
        return jac(p) @ x
    # curve on the sphere with velocity x at h=0
    value = getattr(field, "value", None)
    if value is None:
        raise TypeError("field supports neither jacobian nor value evaluation")
    qp = p + step * x
    qm = p - step * x
    qp = qp / np.linalg.norm(qp)
    qm = qm / np.linalg.norm(qm)
    return (value(qp) - value(qm)) / (2.0 * step)


def nabla(x: TangentVector, field, step: float = 1e-5) -> TangentVector:
    """Round-sphere Levi-Civita derivative of a tangent field along x.

    The field must expose ``value(point)`` and preferably ``jacobian(point)``
    for its ambient extension; without a jacobian a central difference with
    the given step is used.
    """
    p = x.base.position
    dv = _field_directional(field, p, x.vec, step)
    return TangentVector(x.base, dv - (dv @ p) * p)


def nabla_mu(
    x: TangentVector, field, ctx: BergerContext, step: float = 1e-5
) -> TangentVector:
    """Berger-metric covariant derivative along x.

    Decomposes arguments into vertical/horizontal parts; reduces to the
    relations nabla^mu_V X = nabla_V X + (mu-1) nabla_X V,
    nabla^mu_X V = mu nabla_X V and nabla^mu_X Y = nabla_X Y for X, Y
    horizontal.
    """
    p = x.base.position
    jp = complex_structure(p, ctx.m)
    base = nabla(x, field, step).vec
    y = np.asarray(field.value(p), dtype=np.float64)
    a = x.vec @ jp
    b = y @ jp
    xh = x.vec - a * jp
    yh = y - b * jp
    corr = (ctx.mu - 1.0) * (
        b * complex_structure(xh, ctx.m) + a * complex_structure(yh, ctx.m)
    )
    return TangentVector(x.base, base + corr)


# -- adapted frames ----------------------------------------------------------


def frame_batch(points: np.ndarray, ctx: BergerContext) -> np.ndarray:
    """g_mu-orthonormal adapted frames at each point.

    Returns an (n, 2m+1, d) array; row 0 is the vertical vector V_mu, rows
    2i+1, 2i+2 are a J-pair (E_i, J E_i) of horizontal vectors.  The seed
    basis is walked cyclically and degenerate seeds (projection below 1e-8)
    are skipped per point, so the construction is deterministic.
    """
    p = np.asarray(points, dtype=np.float64)
    single = p.ndim == 1
    if single:
        p = p[None, :]
    n, d = p.shape
    m = ctx.m
    jp = complex_structure(p, m)
    frames = np.zeros((n, 2 * m + 1, d))
    frames[:, 0] = jp / ctx.sqrt_abs_mu
    count = np.zeros(n, dtype=np.int64)  # accepted J-pairs per point
    for seed in range(d):
        if count.min() >= m:
            break
        v = np.zeros((n, d))
        v[:, seed] = 1.0
        for _ in range(2):  # Gram-Schmidt, repeated once for stability
            v -= np.sum(v * p, axis=1, keepdims=True) * p
            v -= np.sum(v * jp, axis=1, keepdims=True) * jp
            for slot in range(2 * m):
                e = frames[:, 1 + slot]
                v -= np.sum(v * e, axis=1, keepdims=True) * e
        norms = np.linalg.norm(v, axis=1)
        good = (norms > _GS_SEED_TOL) & (count < m)
        if not np.any(good):
            continue
        rows = np.nonzero(good)[0]
        e = v[rows] / norms[rows, None]
        frames[rows, 1 + 2 * count[rows]] = e
        frames[rows, 2 + 2 * count[rows]] = complex_structure(e, m)
        count[rows] += 1
    if count.min() < m:
        raise RuntimeError("adapted frame construction failed to complete")
    return frames[0] if single else frames


def frame_signs(ctx: BergerContext) -> np.ndarray:
    """Signature of the adapted frame: eps_mu on the vertical slot, +1 else."""
    signs = np.ones(2 * ctx.m + 1)
    signs[0] = ctx.eps_mu
    return signs


def adapted_frame(p: SpherePoint, ctx: BergerContext) -> AdaptedFrame:
    vecs = frame_batch(p.position, ctx)
    vertical = TangentVector(p, vecs[0])
    horizontal = tuple(TangentVector(p, v) for v in vecs[1:])
    return AdaptedFrame(p, vertical, horizontal)


# -- quaternionic frame on S^3 ----------------------------------------------

# E1 = jN and E2 = kN as linear maps, under q = z1 + z2 j with
# z1 = x0 + i x2, z2 = x1 + i x3 (0-based coordinates)
_S3_E1 = np.array(
    [
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)
_S3_E2 = np.array(
    [
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ]
)


def s3_frame_matrices() -> tuple:
    """Matrices of the linear fields E1 = jN, E2 = kN on S^3."""
    return _S3_E1.copy(), _S3_E2.copy()


def s3_quaternion_frame(p: SpherePoint) -> tuple:
    """(E1, E2)(p) with E1 = jp, E2 = kp; requires the S^3 case m = 1."""
    if p.position.shape[0] != 4:
        raise ValueError("quaternion frame exists only on S^3 (m = 1)")
    return (
        TangentVector(p, _S3_E1 @ p.position),
        TangentVector(p, _S3_E2 @ p.position),
    )
