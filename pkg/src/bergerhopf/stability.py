"""Stability classification of Hopf fields and the (mu, lambda) phase diagram.

Stable verdicts are always theorem-backed (a quoted positivity statement);
numerical positivity on finitely many directions never yields Stable.
Unstable verdicts carry, whenever one of the implemented direction families
provides it, a witness whose Hessian coefficient is strictly negative; the
witness is re-validated through the closed Hessian machinery.  Cells that
are unstable by the cited S^3 classification but whose witness direction
lies outside the implemented families are still Unstable, with the witness
field left empty.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fields import field_C2s, field_s3, s3_eigenpair
from .functionals import (
    FunctionalId,
    hess_c2s_coefficients,
    hess_hopf_closed,
)
from .geometry import BergerContext

REGION_STABLE = "Stable"
REGION_UNSTABLE = "Unstable"
REGION_UNKNOWN = "Unknown"

_REGION_CODES = {REGION_STABLE: 0, REGION_UNSTABLE: 1, REGION_UNKNOWN: 2}

# predicate identifiers (stable ones cite positivity statements, unstable
# ones carry witnesses where available)
P_S3_STABLE_A = "s3-stable-low-mu"          # mu <= 8/3, lam <= (mu-2)^2/mu
P_S3_STABLE_B = "s3-stable-mid-mu"          # 8/3 < mu <= 4, lam <= (mu-3)^2/(mu-2)
P_S3_STABLE_C = "s3-stable-high-mu"         # mu > 4, lam <= mu-4
P_S3_UNSTABLE_BASE = "s3-unstable-base"     # lam > (mu-2)^2/mu
P_S3_UNSTABLE_L1 = "s3-unstable-level1"     # mu > 2, lam > (mu-3)^2/(mu-2)
P_S3_UNSTABLE_L2 = "s3-unstable-level2"     # mu > 4, lam > mu-4
P_LORENTZ_UNSTABLE = "lorentzian-unstable"  # mu < 0: energy and volume
P_NEG_LAMBDA = "negative-lambda-unstable"   # lam < 0, any mu != 0
P_LORENTZ_STABLE = "lorentzian-gen-energy-stable"  # mu < 0, lam > 0
P_WITNESS = "c2s-witness"                   # direct witness search succeeded
P_INESTL_ENERGY = "aa-energy-threshold"     # (2m-2) mu^2 < 1
P_INESTL_VOLUME = "aa-volume-threshold"     # (2-2m)mu^3+(4m-4)mu^2+mu < 1
P_OPEN = "open-region"


@dataclass(frozen=True)
class Witness:
    """Direction with a strictly negative Hessian coefficient."""

    family: str
    params: dict
    coefficient: float
    hessian: Optional[float] = None

    def describe(self) -> dict:
        out = {"family": self.family, **self.params,
               "coefficient": self.coefficient}
        if self.hessian is not None:
            out["hessian"] = self.hessian
        return out


@dataclass(frozen=True)
class StabilityClassification:
    region: str
    predicate_id: str
    witness: Optional[Witness] = None
    extra_predicates: tuple = ()

    def __post_init__(self):
        if self.region not in _REGION_CODES:
            raise ValueError(f"unknown region {self.region!r}")


# -- boundary curves of the S^3 diagram ---------------------------------------


def curve_base(mu: float) -> float:
    """lambda = (mu-2)^2/mu."""
    return (mu - 2.0) ** 2 / mu


def curve_mid(mu: float) -> float:
    """lambda = (mu-3)^2/(mu-2), relevant for mu > 2."""
    return (mu - 3.0) ** 2 / (mu - 2.0)


def curve_high(mu: float) -> float:
    """lambda = mu - 4, relevant for mu > 4."""
    return mu - 4.0


def _s3_frame_coefficient(level: int, mu: float, lam: float) -> float:
    """Sign-determining coefficient 2L - mu + (mu-2-L)^2/lam for the S^3 pairs."""
    return 2 * level - mu + (mu - 2 - level) ** 2 / lam


def _witness_s3(level: int, mu: float, lam: float) -> Optional[Witness]:
    coeff = _s3_frame_coefficient(level, mu, lam)
    if coeff < 0:
        return Witness("s3", {"level": level}, coeff)
    return None


def _witness_c2s_gen(m: int, mu, lam, s_max: int) -> Optional[Witness]:
    for s in range(1, s_max + 1):
        coeffs = hess_c2s_coefficients(s, m, mu, lam)
        if coeffs.e_lambda < 0:
            return Witness("C2s", {"s": s}, float(coeffs.e_lambda))
    return None


def classify_s3(mu: float, lam: float) -> StabilityClassification:
    """Complete classification for the generalized energy on S^3 (m = 1).

    Requires mu > 0, lam > 0.  The stability statements are taken with
    non-strict boundary inequalities and the instability statements strictly,
    so the boundary curves themselves classify as Stable and no point is
    claimed by both sides.
    """
    if mu <= 0 or lam <= 0:
        raise ValueError("classify_s3 covers the quadrant mu > 0, lam > 0")
    unstable_l2 = mu > 4 and lam > curve_high(mu)
    unstable_l1 = mu > 2 and lam > curve_mid(mu)
    unstable_base = lam > curve_base(mu)
    if unstable_l2 or unstable_l1 or unstable_base:
        if unstable_l2:
            predicate = P_S3_UNSTABLE_L2
        elif unstable_l1:
            predicate = P_S3_UNSTABLE_L1
        else:
            predicate = P_S3_UNSTABLE_BASE
        witness = None
        order = [2, 1] if unstable_l2 else [1, 2]
        for level in order:
            witness = _witness_s3(level, mu, lam)
            if witness:
                break
        if witness is None:
            witness = _witness_c2s_gen(1, mu, lam, s_max=8)
        return StabilityClassification(REGION_UNSTABLE, predicate, witness)
    if mu <= 8.0 / 3.0 and lam <= curve_base(mu):
        return StabilityClassification(REGION_STABLE, P_S3_STABLE_A)
    if 8.0 / 3.0 < mu <= 4.0 and lam <= curve_mid(mu):
        return StabilityClassification(REGION_STABLE, P_S3_STABLE_B)
    if mu > 4.0 and lam <= curve_high(mu):
        return StabilityClassification(REGION_STABLE, P_S3_STABLE_C)
    return StabilityClassification(REGION_UNKNOWN, P_OPEN)


# -- witness search over the C_2s ladder ---------------------------------------


def instability_witness(
    m: int,
    mu,
    lam,
    functional: FunctionalId,
    s_max: int = 25,
    validate: bool = True,
) -> Optional[Witness]:
    """Smallest s <= s_max whose C_2s Hessian coefficient is negative.

    The coefficient is the exact rational scalar multiplying the (positive)
    norm integral; when ``validate`` is set the witness is re-checked through
    the closed Hessian evaluation.
    """
    if s_max < 1:
        raise ValueError("s_max must be >= 1")
    lam_arg = functional.lam_exact if functional.tag == "generalized-energy" else None
    for s in range(1, s_max + 1):
        coeffs = hess_c2s_coefficients(s, m, mu, lam_arg)
        if functional.tag == "energy":
            coeff = coeffs.energy
        elif functional.tag == "volume":
            coeff = coeffs.volume
        else:
            coeff = coeffs.e_lambda
        if coeff < 0:
            hess = None
            if validate:
                ctx = BergerContext(m, mu)
                hess = hess_hopf_closed(field_C2s(s, ctx), functional, ctx)
                if hess >= 0:
                    raise AssertionError(
                        "witness coefficient negative but Hessian is not"
                    )
            return Witness("C2s", {"s": s}, float(coeff), hess)
    return None


def classify_general(
    m: int, mu, lam, functional: FunctionalId, s_max: int = 25
) -> StabilityClassification:
    """Classification on S^{2m+1} applying the strongest quoted predicate."""
    ctx_mu = float(mu)
    if ctx_mu == 0:
        raise ValueError("mu must be nonzero")
    if functional.tag == "generalized-energy":
        lam_f = functional.lam
        if lam_f < 0:
            witness = instability_witness(m, mu, lam_f, functional, s_max)
            return StabilityClassification(REGION_UNSTABLE, P_NEG_LAMBDA, witness)
        if ctx_mu < 0:
            return StabilityClassification(REGION_STABLE, P_LORENTZ_STABLE)
        if m == 1:
            return classify_s3(ctx_mu, lam_f)
        witness = instability_witness(m, mu, lam_f, functional, s_max)
        if witness:
            return StabilityClassification(REGION_UNSTABLE, P_WITNESS, witness)
        return StabilityClassification(REGION_UNKNOWN, P_OPEN)
    # energy / volume
    if ctx_mu < 0:
        witness = instability_witness(m, mu, lam, functional, s_max)
        extras = []
        if functional.tag == "energy" and (2 * m - 2) * ctx_mu**2 < 1:
            extras.append(P_INESTL_ENERGY)
        if (
            functional.tag == "volume"
            and (2 - 2 * m) * ctx_mu**3 + (4 * m - 4) * ctx_mu**2 + ctx_mu < 1
        ):
            extras.append(P_INESTL_VOLUME)
        return StabilityClassification(
            REGION_UNSTABLE, P_LORENTZ_UNSTABLE, witness, tuple(extras)
        )
    witness = instability_witness(m, mu, lam, functional, s_max)
    if witness:
        return StabilityClassification(REGION_UNSTABLE, P_WITNESS, witness)
    return StabilityClassification(REGION_UNKNOWN, P_OPEN)


# -- phase diagram --------------------------------------------------------------


@dataclass(frozen=True)
class PhaseGrid:
    """Vectorized S^3 classification over a rectangular (mu, lambda) grid."""

    mu_values: np.ndarray
    lam_values: np.ndarray
    region: np.ndarray          # (n_lam, n_mu) codes 0 stable / 1 unstable / 2 unknown
    predicate: np.ndarray       # object array of predicate ids
    witness_family: np.ndarray  # object array ("s3", "C2s" or "")
    witness_param: np.ndarray   # int array (level or s; 0 when absent)
    doubly_classified: int
    unknown_count: int

    def region_name(self, iy: int, ix: int) -> str:
        return [REGION_STABLE, REGION_UNSTABLE, REGION_UNKNOWN][self.region[iy, ix]]


def figure1_grid(
    mu_range=(0.0, 6.0), lam_range=(0.0, 3.0), resolution: int = 400
) -> PhaseGrid:
    """Classify a resolution^2 grid over (mu0, mu1] x (lam0, lam1].

    Grid nodes exclude the zero boundary (left/bottom open interval).  Also
    verifies, cell by cell, that no point is claimed by both a stability and
    an instability predicate.
    """
    mu0, mu1 = mu_range
    lam0, lam1 = lam_range
    if mu1 <= max(mu0, 0) or lam1 <= max(lam0, 0):
        raise ValueError("ranges must be positive and increasing")
    mu = np.linspace(mu0, mu1, resolution + 1)[1:]
    lam = np.linspace(lam0, lam1, resolution + 1)[1:]
    mg, lg = np.meshgrid(mu, lam)
    with np.errstate(divide="ignore"):
        c_base = (mg - 2.0) ** 2 / mg
        c_mid = np.where(mg > 2.0, (mg - 3.0) ** 2 / np.where(mg == 2.0, np.nan, mg - 2.0), np.inf)
        c_high = np.where(mg > 4.0, mg - 4.0, np.inf)
    stable = (
        ((mg <= 8.0 / 3.0) & (lg <= c_base))
        | ((8.0 / 3.0 < mg) & (mg <= 4.0) & (lg <= c_mid))
        | ((mg > 4.0) & (lg <= c_high))
    )
    u_base = lg > c_base
    u_l1 = (mg > 2.0) & (lg > c_mid)
    u_l2 = (mg > 4.0) & (lg > c_high)
    unstable = u_base | u_l1 | u_l2
    double = int(np.count_nonzero(stable & unstable))
    region = np.where(unstable, 1, np.where(stable, 0, 2)).astype(np.int8)
    unknown = int(np.count_nonzero(region == 2))

    predicate = np.empty(region.shape, dtype=object)
    predicate[...] = P_OPEN
    predicate[stable & (mg <= 8.0 / 3.0)] = P_S3_STABLE_A
    predicate[stable & (8.0 / 3.0 < mg) & (mg <= 4.0)] = P_S3_STABLE_B
    predicate[stable & (mg > 4.0)] = P_S3_STABLE_C
    predicate[u_base] = P_S3_UNSTABLE_BASE
    predicate[u_l1] = P_S3_UNSTABLE_L1
    predicate[u_l2] = P_S3_UNSTABLE_L2

    coeff_l1 = 2.0 - mg + (mg - 3.0) ** 2 / lg
    coeff_l2 = 4.0 - mg + (mg - 4.0) ** 2 / lg
    witness_family = np.empty(region.shape, dtype=object)
    witness_family[...] = ""
    witness_param = np.zeros(region.shape, dtype=np.int64)
    # priority mirrors classify_s3: the level matching the strongest predicate
    take_l2 = unstable & u_l2 & (coeff_l2 < 0)
    take_l1 = unstable & ~take_l2 & (coeff_l1 < 0)
    take_l2_fallback = unstable & ~take_l2 & ~take_l1 & (coeff_l2 < 0)
    for mask, level in ((take_l1, 1), (take_l2 | take_l2_fallback, 2)):
        witness_family[mask] = "s3"
        witness_param[mask] = level
    return PhaseGrid(
        mu, lam, region, predicate, witness_family, witness_param, double, unknown
    )


def boundary_curves(mu_max: float, lam_max: float, n: int = 400) -> dict:
    """The three boundary polylines, clipped to the plot window."""
    out = {}
    mu = np.linspace(1e-3, mu_max, n)
    lam = (mu - 2.0) ** 2 / mu
    keep = lam <= lam_max * 1.05
    out["base"] = np.column_stack([mu[keep], lam[keep]])
    mu = np.linspace(2.0 + 1e-6, mu_max, n)
    lam = (mu - 3.0) ** 2 / (mu - 2.0)
    keep = lam <= lam_max * 1.05
    out["mid"] = np.column_stack([mu[keep], lam[keep]])
    if mu_max > 4.0:
        mu = np.linspace(4.0, mu_max, n)
        out["high"] = np.column_stack([mu, mu - 4.0])
    return out


def grid_csv_rows(grid: PhaseGrid):
    """Yield CSV rows: mu, lambda, region, predicate, witness_family, witness_s."""
    names = [REGION_STABLE, REGION_UNSTABLE, REGION_UNKNOWN]
    for iy, lam in enumerate(grid.lam_values):
        for ix, mu in enumerate(grid.mu_values):
            wf = grid.witness_family[iy, ix]
            wp = grid.witness_param[iy, ix]
            yield (
                f"{mu:.12g}",
                f"{lam:.12g}",
                names[grid.region[iy, ix]],
                grid.predicate[iy, ix],
                wf,
                str(wp) if wf else "",
            )


def spot_check_witness(grid: PhaseGrid, rule=None) -> dict:
    """Re-validate one witnessed Unstable cell of the grid (soundness check).

    Returns the cell, its closed Hessian and, when a node rule is supplied,
    the finite-difference second variation; both must be negative.
    """
    from .functionals import second_variation_fd

    cells = np.argwhere((grid.region == 1) & (grid.witness_family != ""))
    if cells.size == 0:
        return {"checked": False}
    iy, ix = cells[len(cells) // 2]
    mu = float(grid.mu_values[ix])
    lam = float(grid.lam_values[iy])
    ctx = BergerContext(1, mu)
    fam = grid.witness_family[iy, ix]
    if fam == "s3":
        a_field = field_s3(s3_eigenpair(int(grid.witness_param[iy, ix])), ctx)
    else:
        a_field = field_C2s(int(grid.witness_param[iy, ix]), ctx)
    fid = FunctionalId.generalized(lam)
    closed = hess_hopf_closed(a_field, fid, ctx)
    out = {
        "checked": True,
        "mu": mu,
        "lambda": lam,
        "family": fam,
        "param": int(grid.witness_param[iy, ix]),
        "closed": closed,
    }
    if rule is not None:
        out["fd"] = second_variation_fd(a_field, fid, ctx, rule).second
    return out


# -- SVG emission ----------------------------------------------------------------


def phase_diagram_svg(grid: PhaseGrid, width: int = 640, height: int = 440) -> str:
    """Hand-assembled SVG: light gray unstable region, dark gray stable region,
    the three boundary curves, axes and the triple-point marker."""
    mu_max = float(grid.mu_values[-1])
    lam_max = float(grid.lam_values[-1])
    ml, mr, mt, mb = 50, 15, 15, 40
    pw, ph = width - ml - mr, height - mt - mb

    def px(mu):
        return ml + pw * mu / mu_max

    def py(lam):
        return mt + ph * (1.0 - lam / lam_max)

    def fmt(v):
        return f"{v:.3f}"

    # stability boundary as seen by the grid: for each mu column, the lambda
    # where the classification flips from Stable to Unstable
    xs, ys = [], []
    for ix, mu in enumerate(grid.mu_values):
        col = grid.region[:, ix]
        stable_rows = np.nonzero(col == 0)[0]
        top = grid.lam_values[stable_rows[-1]] if stable_rows.size else 0.0
        xs.append(px(float(mu)))
        ys.append(py(float(top)))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        # unstable region: everything above the boundary polyline
        '<path d="M '
        + " L ".join(f"{fmt(x)} {fmt(y)}" for x, y in zip(xs, ys))
        + f" L {fmt(px(mu_max))} {fmt(py(lam_max))} L {fmt(px(0))} {fmt(py(lam_max))} Z"
        + '" fill="#d3d3d3" stroke="none"/>',
        # stable region: below the polyline
        '<path d="M '
        + " L ".join(f"{fmt(x)} {fmt(y)}" for x, y in zip(xs, ys))
        + f" L {fmt(px(mu_max))} {fmt(py(0))} L {fmt(px(0))} {fmt(py(0))} Z"
        + '" fill="#696969" stroke="none"/>',
    ]
    styles = {"base": "#1f3a93", "mid": "#8e2800", "high": "#0b6623"}
    for name, pts in boundary_curves(mu_max, lam_max).items():
        inside = pts[:, 1] <= lam_max
        pts = pts[inside]
        if len(pts) < 2:
            continue
        path = " L ".join(f"{fmt(px(x))} {fmt(py(y))}" for x, y in pts)
        parts.append(
            f'<path d="M {path}" fill="none" stroke="{styles[name]}" stroke-width="1.2"/>'
        )
    # triple point where the first two curves meet: (8/3, 1/6)
    parts.append(
        f'<circle cx="{fmt(px(8.0 / 3.0))}" cy="{fmt(py(1.0 / 6.0))}" r="3" '
        f'fill="black"/>'
    )
    # axes
    parts.append(
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" '
        f'stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" '
        f'stroke="black" stroke-width="1"/>'
    )
    for mu_tick in range(0, int(mu_max) + 1):
        x = px(mu_tick)
        parts.append(
            f'<line x1="{fmt(x)}" y1="{mt + ph}" x2="{fmt(x)}" y2="{mt + ph + 5}" '
            f'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{fmt(x)}" y="{mt + ph + 18}" font-size="11" '
            f'text-anchor="middle">{mu_tick}</text>'
        )
    lam_tick = 0.0
    while lam_tick <= lam_max + 1e-9:
        y = py(lam_tick)
        parts.append(
            f'<line x1="{ml - 5}" y1="{fmt(y)}" x2="{ml}" y2="{fmt(y)}" '
            f'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{ml - 8}" y="{fmt(y + 4)}" font-size="11" '
            f'text-anchor="end">{lam_tick:g}</text>'
        )
        lam_tick += 0.5
    parts.append(
        f'<text x="{ml + pw / 2:.1f}" y="{height - 6}" font-size="12" '
        f'text-anchor="middle">mu</text>'
    )
    parts.append(
        f'<text x="14" y="{mt + ph / 2:.1f}" font-size="12" '
        f'text-anchor="middle" transform="rotate(-90 14 {mt + ph / 2:.1f})">lambda</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
