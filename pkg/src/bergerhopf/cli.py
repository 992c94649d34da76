"""Command-line surface: identity verification, Hessian tables, phase diagram.

Exit codes: 0 all checks passed, 1 at least one identity failed, 2 usage or
configuration error.  All commands are deterministic given their flags and
seed; reports embed the resolved configuration.  The BERGER_THREADS
environment variable caps internal worker threads.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .fields import field_Aa, field_C2s, field_s3, s3_eigenpair
from .functionals import (
    FunctionalId,
    GammaMinusError,
    hess_general_forms,
    hess_hopf_closed,
    hess_s3_dbarC,
    hessian_report,
    second_variation_fd,
)
from .geometry import (
    BergerContext,
    SpherePoint,
    TangentVector,
    complex_structure,
    frame_batch,
    frame_signs,
    g_mu,
    nabla,
    nabla_mu,
    s3_quaternion_frame,
    sample_sphere,
)
from .harmonics import (
    f2s,
    hopf_derivative,
    laplacian_berger,
    tanno_components,
    vertical_laplacian,
)
from .polynomials import PolyField
from .quadrature import (
    PI,
    ball_moment_exact,
    hopf_product_rule,
    integrate_poly_exact,
    integrate_sphere,
    monte_carlo_rule,
    rule_from_config,
    sphere_moment_exact,
    sphere_volume,
)
from .stability import (
    curve_base,
    curve_mid,
    figure1_grid,
    grid_csv_rows,
    phase_diagram_svg,
    spot_check_witness,
)

SCHEMA_VERSION = 1


def _max_threads() -> int:
    raw = os.environ.get("BERGER_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        n = min(4, os.cpu_count() or 1)
    return n


# -- identity registry ----------------------------------------------------------


@dataclass(frozen=True)
class IdentityResult:
    identity: str
    params: dict
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def to_json(self) -> dict:
        return {
            "identity": self.identity,
            "params": _plain(self.params),
            "residual": float(self.residual),
            "tolerance": float(self.tolerance),
            "passed": self.passed,
        }


def _plain(obj):
    """Recursively convert numpy scalars for JSON emission."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _check_complex_structure(m_values, mu_values, seed, s_values) -> List[IdentityResult]:
    out = []
    for m in m_values:
        p = sample_sphere(m, 50, seed)
        u = sample_sphere(m, 50, seed + 1)
        ju = complex_structure(u, m)
        r1 = np.abs(complex_structure(ju, m) + u).max()
        r2 = np.abs((ju * ju).sum(1) - (u * u).sum(1)).max()
        r3 = np.abs((complex_structure(p, m) * p).sum(1)).max()
        out.append(
            IdentityResult("complex-structure", {"m": m}, max(r1, r2, r3), 1e-12)
        )
    return out


def _check_metric_compatibility(m_values, mu_values, seed, s_values) -> List[IdentityResult]:
    """X g_mu(Y, Z) = g_mu(nabla^mu_X Y, Z) + g_mu(Y, nabla^mu_X Z) by FD."""
    out = []
    h = 1e-5
    for m in m_values:
        for mu in mu_values:
            ctx = BergerContext(m, mu)
            y = field_Aa([0, 1] + [0] * (2 * m), ctx)
            z = field_C2s(1, ctx)
            pts = sample_sphere(m, 20, seed + 2)
            jp = complex_structure(pts, ctx.m)

            def gmu_vals(q):
                yv, zv = y.value(q), z.value(q)
                jq = complex_structure(q, ctx.m)
                return (yv * zv).sum(1) + (ctx.mu - 1.0) * (yv * jq).sum(1) * (
                    zv * jq
                ).sum(1)

            worst = 0.0
            frames = frame_batch(pts, ctx)
            for a in range(2 * m + 1):
                x = frames[:, a]
                qp = pts + h * x
                qp /= np.linalg.norm(qp, axis=1, keepdims=True)
                qm = pts - h * x
                qm /= np.linalg.norm(qm, axis=1, keepdims=True)
                lhs = (gmu_vals(qp) - gmu_vals(qm)) / (2 * h)
                rhs = np.empty_like(lhs)
                for i in range(pts.shape[0]):
                    pt = SpherePoint(pts[i])
                    xv = TangentVector(pt, x[i])
                    ny = nabla_mu(xv, y, ctx)
                    nz = nabla_mu(xv, z, ctx)
                    yv = TangentVector(pt, y.value(pts[i]))
                    zv = TangentVector(pt, z.value(pts[i]))
                    rhs[i] = g_mu(ny, zv, ctx) + g_mu(yv, nz, ctx)
                worst = max(worst, float(np.abs(lhs - rhs).max()))
            out.append(
                IdentityResult(
                    "metric-compatibility", {"m": m, "mu": mu}, worst, 1e-8
                )
            )
    return out


def _check_frames(m_values, mu_values, seed, s_values) -> List[IdentityResult]:
    out = []
    for m in m_values:
        for mu in mu_values:
            ctx = BergerContext(m, mu)
            pts = sample_sphere(m, 100, seed + 3)
            frames = frame_batch(pts, ctx)
            jp = complex_structure(pts, ctx.m)
            a = np.einsum("nad,nbd->nab", frames, frames)
            b = np.einsum("nad,nd->na", frames, jp)
            gram = a + (ctx.mu - 1.0) * np.einsum("na,nb->nab", b, b)
            target = np.diag(frame_signs(ctx))
            resid = float(np.abs(gram - target[None]).max())
            out.append(
                IdentityResult("frame-orthonormality", {"m": m, "mu": mu}, resid, 1e-12)
            )
    return out


class _LinearField:
    """Tangent field q -> M q for a fixed matrix M."""

    def __init__(self, mat):
        self.mat = mat

    def value(self, q):
        return self.mat @ q

    def jacobian(self, q):
        return self.mat


def _check_quaternion_frame(m_values, mu_values, seed, s_values) -> List[IdentityResult]:
    from .geometry import s3_frame_matrices

    pts = sample_sphere(1, 100, seed + 4)
    m1, m2 = s3_frame_matrices()
    f1, f2 = _LinearField(m1), _LinearField(m2)
    worst = 0.0
    for i in range(pts.shape[0]):
        p = SpherePoint(pts[i])
        e1, e2 = s3_quaternion_frame(p)
        vp = TangentVector(p, complex_structure(pts[i], 1))
        d1 = nabla(vp, f1).vec + e2.vec
        d2 = nabla(vp, f2).vec - e1.vec
        worst = max(worst, float(np.abs(d1).max()), float(np.abs(d2).max()))
    return [IdentityResult("quaternion-frame-relations", {"m": 1}, worst, 1e-10)]


def _check_eigenfunctions(m_values, mu_values, seed, s_values) -> List[IdentityResult]:
    out = []
    for m in m_values:
        for mu in mu_values:
            ctx = BergerContext(m, mu)
            for s in s_values:
                f = f2s(s, 1, m)
                rep = laplacian_berger(f, ctx, n_points=100, seed=seed)
                expected = 2 * m * (2 * s) + (2 * s) ** 2 / ctx.mu
                resid = max(rep.max_residual, abs(rep.constant - expected))
                out.append(
                    IdentityResult(
                        "berger-laplacian-eigenvalue",
                        {"m": m, "mu": mu, "s": s},
                        resid,
                        1e-9,
                    )
                )
                vrep = vertical_laplacian(f, ctx)
                vexp = Fraction((2 * s) ** 2) / ctx.mu_exact
                vres = abs(float(vrep.exact_constant - vexp)) + vrep.max_residual
                out.append(
                    IdentityResult(
                        "vertical-laplacian-eigenvalue",
                        {"m": m, "mu": mu, "s": s},
                        vres,
                        1e-12,
                    )
                )
    return out


def _check_hess_ratio(m_values, mu_values, seed, s_values) -> List[IdentityResult]:
    out = []
    for m in m_values:
        for s in s_values:
            f = f2s(s, 1, m)
            h = f.hessian()
            d = 2 * m + 2
            frob = PolyField.zero(d)
            for i in range(d):
                for j in range(d):
                    frob = frob + h[i][j] * h[i][j]
            ratio = integrate_poly_exact(frob, m) / integrate_poly_exact(f * f, m)
            expected = Fraction(8 * s * (2 * s - 1) * (m + 2 * s - 1) * (m + 2 * s))
            resid = 0.0 if ratio == expected else float(abs(ratio - expected))
            out.append(
                IdentityResult("hessian-norm-ratio", {"m": m, "s": s}, resid, 0.0)
            )
    return out


def _check_tanno(m_values, mu_values, seed, s_values) -> List[IdentityResult]:
    out = []
    for m in m_values:
        d = 2 * m + 2
        f = PolyField.variable(0, d) * PolyField.variable(1, d) + PolyField.variable(
            m + 1, d
        ) * PolyField.variable(m + 2, d)
        comps = tanno_components(f, m)
        pts = sample_sphere(m, 100, seed + 5)
        recon = sum(c(pts) for c in comps)
        resid = float(np.abs(recon - f(pts)).max())
        out.append(IdentityResult("tanno-reconstruction", {"m": m}, resid, 1e-10))
    return out


def _check_c2s_structure(m_values, mu_values, seed, s_values) -> List[IdentityResult]:
    out = []
    for m in m_values:
        for mu in mu_values:
            ctx = BergerContext(m, mu)
            for s in s_values:
                c_field = field_C2s(s, ctx)
                pts = sample_sphere(m, 200, seed + 6)
                jp = complex_structure(pts, ctx.m)
                vals = c_field.value(pts)
                jac = c_field.jacobian(pts)
                der = np.einsum("nij,nj->ni", jac, jp)
                der -= np.einsum("ni,ni->n", der, pts)[:, None] * pts
                d_tilde = der + (ctx.mu - 1.0) * complex_structure(vals, ctx.m)
                rhs = (ctx.mu - 2 * s) * complex_structure(vals, ctx.m)
                resid = float(np.abs(d_tilde - rhs).max())
                out.append(
                    IdentityResult(
                        "c2s-vertical-derivative",
                        {"m": m, "mu": mu, "s": s},
                        resid,
                        1e-8,
                    )
                )
                orth = float(
                    np.abs(np.einsum("ni,ni->n", vals, jp)).max()
                    + np.abs(np.einsum("ni,ni->n", vals, pts)).max()
                )
                out.append(
                    IdentityResult(
                        "field-orthogonality", {"m": m, "mu": mu, "s": s}, orth, 1e-10
                    )
                )
    return out


def _check_norm_reductions(m_values, mu_values, seed, s_values) -> List[IdentityResult]:
    out = []
    for m in m_values:
        for s in s_values:
            ctx = BergerContext(m, 1)
            f = f2s(s, 1, m)
            c_field = field_C2s(s, ctx)
            i_c = integrate_poly_exact(c_field.squared_norm_poly(), m)
            i_f = integrate_poly_exact(f * f, m)
            resid = float(abs(i_c - 2 * m * (2 * s) * i_f))
            out.append(
                IdentityResult("c2s-norm-reduction", {"m": m, "s": s}, resid, 0.0)
            )
            vf = hopf_derivative(f, m)
            resid = float(abs(integrate_poly_exact(vf * vf, m) - (2 * s) ** 2 * i_f))
            out.append(
                IdentityResult("vertical-derivative-norm", {"m": m, "s": s}, resid, 0.0)
            )
    return out


def _check_moments(m_values, mu_values, seed, s_values) -> List[IdentityResult]:
    out = []
    rng = np.random.default_rng(seed + 7)
    for m in m_values:
        d = 2 * m + 2
        worst = Fraction(0)
        for _ in range(50):
            alpha = tuple(int(2 * a) for a in rng.integers(0, 4, size=d))
            lhs = ball_moment_exact(alpha, m)
            rhs = sphere_moment_exact(alpha, m) / (d + sum(alpha))
            worst = max(worst, abs(lhs - rhs))
        out.append(
            IdentityResult("ball-sphere-moment", {"m": m}, float(worst), 0.0)
        )
    rule = hopf_product_rule(8, 12)
    worst = 0.0
    for alpha in [(8, 0, 0, 0), (4, 2, 2, 0), (2, 2, 2, 2), (3, 1, 2, 2), (6, 2, 0, 0)]:
        f = PolyField.from_terms({alpha: 1}, 4)
        approx = float(np.sum(f(rule.points) * rule.weights))
        exact = float(sphere_moment_exact(alpha, 1)) * PI**2
        worst = max(worst, abs(approx - exact))
    out.append(IdentityResult("hopf-rule-exactness", {"m": 1}, worst, 1e-12))
    for m in m_values:
        for mu in mu_values:
            ctx = BergerContext(m, mu)
            one = PolyField.constant(1, 2 * m + 2)
            vol = integrate_sphere(one, rule_from_config({"rule": "exact"}, m), ctx)
            expected = ctx.sqrt_abs_mu * sphere_volume(m)
            out.append(
                IdentityResult(
                    "berger-volume-scaling",
                    {"m": m, "mu": mu},
                    abs(vol.value - expected) / expected,
                    1e-12,
                )
            )
    return out


def _check_hessian_routes(m_values, mu_values, seed, s_values) -> List[IdentityResult]:
    out = []
    rule = hopf_product_rule(12, 24)
    ctx_list = [BergerContext(1, mu) for mu in mu_values]
    for ctx in ctx_list:
        fields = [field_Aa([0, 1, 0, 0], ctx), field_C2s(1, ctx)]
        fids = [FunctionalId.energy(), FunctionalId.volume(), FunctionalId.generalized(0.5)]
        for a_field in fields:
            for fid in fids:
                closed = hess_hopf_closed(a_field, fid, ctx)
                general = hess_general_forms(a_field, fid, ctx, rule)
                fd = second_variation_fd(a_field, fid, ctx, rule)
                scale = max(abs(closed), 1.0)
                params = {
                    "m": ctx.m,
                    "mu": ctx.mu,
                    "family": a_field.name,
                    "functional": fid.label(),
                }
                out.append(
                    IdentityResult(
                        "hessian-assembly-agreement",
                        params,
                        abs(general - closed) / scale,
                        1e-8,
                    )
                )
                out.append(
                    IdentityResult(
                        "hessian-fd-agreement",
                        params,
                        abs(fd.second - closed) / scale,
                        1e-3,
                    )
                )
                out.append(
                    IdentityResult(
                        "first-variation-vanishes",
                        params,
                        abs(fd.first) / max(1.0, abs(fd.value_at_zero)),
                        1e-6,
                    )
                )
    return out


def _check_eigenfunction_forms(m_values, mu_values, seed, s_values) -> List[IdentityResult]:
    """Hessians from the f-integral reduction against the integrand route."""
    from .functionals import hess_eigenfunction_forms

    out = []
    for m in m_values:
        d = 2 * m + 2
        for mu in mu_values:
            ctx = BergerContext(m, mu)
            cases = [(PolyField.variable(1, d), field_Aa([0, 1] + [0] * (d - 2), ctx))]
            for s in s_values:
                cases.append((f2s(s, 1, m), field_C2s(s, ctx)))
            for f, a_field in cases:
                worst = 0.0
                for fid in (
                    FunctionalId.energy(),
                    FunctionalId.volume(),
                    FunctionalId.generalized(-0.5),
                ):
                    a = hess_eigenfunction_forms(f, fid, ctx)
                    b = hess_hopf_closed(a_field, fid, ctx)
                    worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1.0))
                out.append(
                    IdentityResult(
                        "eigenfunction-hessian-forms",
                        {"m": m, "mu": mu, "degree": f.degree()},
                        worst,
                        1e-10,
                    )
                )
    return out


def _check_dbar(m_values, mu_values, seed, s_values) -> List[IdentityResult]:
    out = []
    for level in (1, 2):
        rep = hess_s3_dbarC(s3_eigenpair(level), 1.0, 1.0)
        expected_sum = (2 if level == 1 else 4) * rep.i_a
        resid = float(abs(rep.dbar_energy)) + float(abs(rep.sum_b_sq - expected_sum))
        out.append(
            IdentityResult("dbar-cancellation", {"level": level}, resid, 1e-12)
        )
    return out


def _check_partition(m_values, mu_values, seed, s_values) -> List[IdentityResult]:
    grid = figure1_grid(resolution=200)
    meet = abs(curve_base(8.0 / 3.0) - curve_mid(8.0 / 3.0))
    results = [
        IdentityResult(
            "s3-partition",
            {"resolution": 200},
            float(grid.doubly_classified),
            0.0,
        ),
        IdentityResult("boundary-curves-meet", {"mu": 8.0 / 3.0}, meet, 1e-12),
    ]
    chk = spot_check_witness(grid, hopf_product_rule(10, 20))
    resid = 0.0 if chk["checked"] and chk["closed"] < 0 and chk["fd"] < 0 else 1.0
    results.append(IdentityResult("witness-soundness", chk, resid, 0.0))
    return results


IDENTITY_SUITES: dict = {
    "complex-structure": _check_complex_structure,
    "metric-compatibility": _check_metric_compatibility,
    "frame-orthonormality": _check_frames,
    "quaternion-frame": _check_quaternion_frame,
    "eigenfunctions": _check_eigenfunctions,
    "hess-ratio": _check_hess_ratio,
    "tanno": _check_tanno,
    "c2s-structure": _check_c2s_structure,
    "norm-reductions": _check_norm_reductions,
    "moments": _check_moments,
    "hessian-routes": _check_hessian_routes,
    "eigenfunction-forms": _check_eigenfunction_forms,
    "dbar": _check_dbar,
    "partition": _check_partition,
}


# -- configuration ----------------------------------------------------------------


def _parse_range(text: str, cast=int) -> list:
    """'1..3' -> [1, 2, 3]; '2' -> [2]."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo_i, hi_i = int(lo), int(hi)
        if hi_i < lo_i:
            raise ValueError(f"empty range {text!r}")
        return [cast(v) for v in range(lo_i, hi_i + 1)]
    return [cast(text)]


def _parse_span(text: str) -> tuple:
    """'0.05..6' -> (0.05, 6.0)."""
    lo, hi = text.split("..", 1)
    return float(lo), float(hi)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="berger-hopf",
        description="Second-variation checks for Hopf fields on Berger spheres",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--m", default="1", help="sphere index m or range, e.g. 1..3")
    common.add_argument("--mu", nargs="+", default=["1"], help="Berger parameters")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None, help="override tolerance")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument(
        "--format", choices=("json", "csv", "svg"), default=None, dest="fmt"
    )
    common.add_argument(
        "--rule", choices=("exact", "hopf", "mc"), default="hopf", help="quadrature"
    )
    common.add_argument("--n", type=int, default=None, help="rule size parameter")

    p_verify = sub.add_parser("verify", parents=[common], help="run identity suites")
    p_verify.add_argument(
        "--identity", nargs="+", default=None, help="subset of identity suites"
    )
    p_verify.add_argument("--s", default="1..2", help="eigenfunction index range")

    p_hess = sub.add_parser("hessian", parents=[common], help="Hessian tables")
    p_hess.add_argument("--family", choices=("Aa", "C2s", "s3"), required=True)
    p_hess.add_argument("--s", default="1", help="C2s index or range")
    p_hess.add_argument("--level", type=int, default=1, choices=(1, 2))
    p_hess.add_argument(
        "--functional",
        nargs="+",
        choices=("energy", "volume", "egl"),
        default=["energy"],
    )
    p_hess.add_argument("--lambda", dest="lam", nargs="+", default=["1"])
    p_hess.add_argument("--no-fd", action="store_true", help="skip the FD oracle")

    p_region = sub.add_parser("region", parents=[common], help="phase diagram")
    p_region.add_argument("--lambda", dest="lam", default="0.05..3", help="span a..b")
    p_region.add_argument("--res", type=int, default=300)
    return parser


def _open_out(path: Optional[str]):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _report_header(args, command: str) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "bergerhopf",
        "version": __version__,
        "command": command,
        "config": config,
    }


# -- commands ----------------------------------------------------------------------


def cmd_verify(args) -> int:
    try:
        m_values = _parse_range(args.m)
        mu_values = [float(Fraction(v)) for v in args.mu]
    except (ValueError, ZeroDivisionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    names = args.identity or sorted(IDENTITY_SUITES)
    unknown = [n for n in names if n not in IDENTITY_SUITES]
    if unknown:
        print(f"config error: unknown identities {unknown}", file=sys.stderr)
        return 2
    s_values = _parse_range(getattr(args, "s", "1..2"))
    results: List[IdentityResult] = []
    for name in names:
        results.extend(IDENTITY_SUITES[name](m_values, mu_values, args.seed, s_values))
    if args.tol is not None:
        # override residual thresholds; exact (zero-tolerance) checks keep theirs
        results = [
            dataclasses.replace(r, tolerance=args.tol) if r.tolerance > 0 else r
            for r in results
        ]
    report = _report_header(args, "verify")
    report["results"] = [r.to_json() for r in results]
    report["passed"] = all(r.passed for r in results)
    stream, close = _open_out(args.out)
    try:
        json.dump(report, stream, indent=2, sort_keys=True)
        stream.write("\n")
    finally:
        if close:
            stream.close()
    if not report["passed"]:
        for r in results:
            if not r.passed:
                print(
                    f"FAIL {r.identity} {r.params}: residual {r.residual:.3e} "
                    f"> {r.tolerance:.1e}",
                    file=sys.stderr,
                )
        return 1
    return 0


def _hessian_rows(args, m_values, mu_values, lam_values) -> list:
    tasks = []
    for m in m_values:
        for mu in mu_values:
            ctx = BergerContext(m, mu)
            if args.family == "Aa":
                fields = [field_Aa([0, 1] + [0] * (2 * m), ctx)]
            elif args.family == "C2s":
                fields = [field_C2s(s, ctx) for s in _parse_range(args.s)]
            else:
                if m != 1:
                    raise ValueError("family s3 requires m = 1")
                fields = [field_s3(s3_eigenpair(args.level), ctx)]
            for fid_name in args.functional:
                if fid_name == "egl":
                    fids = [FunctionalId.generalized(float(Fraction(l))) for l in lam_values]
                else:
                    fids = [FunctionalId(fid_name)]
                for fid in fids:
                    for a_field in fields:
                        tasks.append((a_field, fid, ctx))
    max_deg = max(t[0].degree() for t in tasks)
    include_fd = not args.no_fd and args.rule != "exact"
    rule_by_m = {}
    if include_fd:
        for m in {t[2].m for t in tasks}:
            if args.rule == "mc" or m != 1:
                rule_by_m[m] = monte_carlo_rule(args.n or 200_000, args.seed, m)
            else:
                n_radial = args.n or max(10, (2 * max_deg + 8) // 4)
                n_angle = args.n or max(24, 2 * max_deg + 6)
                rule_by_m[m] = hopf_product_rule(n_radial, n_angle)
    zero_tol = args.tol if args.tol is not None else 1e-6
    rows = [None] * len(tasks)

    def run(idx):
        a_field, fid, ctx = tasks[idx]
        rule = rule_by_m.get(ctx.m)
        try:
            rep = hessian_report(
                a_field, fid, ctx, rule, include_fd=include_fd, zero_tol=zero_tol
            )
        except GammaMinusError as exc:
            return (idx, None, str(exc))
        return (idx, rep, None)

    with ThreadPoolExecutor(max_workers=_max_threads()) as pool:
        for idx, rep, err in pool.map(run, range(len(tasks))):
            rows[idx] = (tasks[idx], rep, err)
    return rows


def cmd_hessian(args) -> int:
    try:
        m_values = _parse_range(args.m)
        mu_values = [float(Fraction(v)) for v in args.mu]
        lam_values = list(args.lam)
        rows = _hessian_rows(args, m_values, mu_values, lam_values)
    except (ValueError, ZeroDivisionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    fmt = args.fmt or "csv"
    stream, close = _open_out(args.out)
    try:
        if fmt == "json":
            report = _report_header(args, "hessian")
            report["rows"] = [
                (rep.to_json() if rep else {"error": err})
                for (_, rep, err) in rows
            ]
            json.dump(report, stream, indent=2, sort_keys=True)
            stream.write("\n")
        else:
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(
                [
                    "functional", "m", "mu", "lambda", "direction",
                    "closed_form", "fd", "exact", "rel_err", "verdict",
                ]
            )
            for (task, rep, err) in rows:
                a_field, fid, ctx = task
                if rep is None:
                    writer.writerow(
                        [fid.label(), ctx.m, f"{ctx.mu:.12g}", fid.lam, a_field.name,
                         "", "", "", "", f"error:{err}"]
                    )
                    continue
                fd_val = rep.oracle("finite-difference")
                writer.writerow(
                    [
                        rep.functional,
                        rep.m,
                        f"{rep.mu:.12g}",
                        "" if rep.lam is None else f"{rep.lam:.12g}",
                        json.dumps(rep.direction, sort_keys=True),
                        f"{rep.closed_form:.12e}",
                        "" if fd_val is None else f"{fd_val:.12e}",
                        f"{rep.oracle('exact-moment'):.12e}",
                        f"{rep.max_discrepancy:.3e}",
                        rep.verdict,
                    ]
                )
    finally:
        if close:
            stream.close()
    return 0


def cmd_region(args) -> int:
    try:
        m_values = _parse_range(args.m)
        if len(m_values) != 1:
            raise ValueError("region takes a single m")
        m = m_values[0]
        mu_arg = args.mu[0] if len(args.mu) == 1 else ""
        if ".." in mu_arg:
            mu_span = _parse_span(mu_arg)
        elif mu_arg == "1":  # untouched default: use the full diagram window
            mu_span = (0.05, 6.0)
        else:
            raise ValueError("region --mu takes a span like 0.05..6")
        lam_span = _parse_span(args.lam)
        if args.res < 2:
            raise ValueError("resolution must be at least 2")
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    fmt = args.fmt or "csv"
    if m == 1:
        grid = figure1_grid(mu_span, lam_span, args.res)
        if fmt == "svg":
            payload = phase_diagram_svg(grid)
        elif fmt == "json":
            report = _report_header(args, "region")
            report["doubly_classified"] = grid.doubly_classified
            report["unknown_cells"] = grid.unknown_count
            report["witness_spot_check"] = spot_check_witness(
                grid, hopf_product_rule(10, 20)
            )
            payload = json.dumps(report, indent=2, sort_keys=True) + "\n"
        else:
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(
                ["mu", "lambda", "region", "predicate", "witness_family", "witness_s"]
            )
            for row in grid_csv_rows(grid):
                writer.writerow(row)
            payload = buf.getvalue()
    else:
        # m > 1: witness search per cell for the generalized energy
        mu = np.linspace(mu_span[0], mu_span[1], args.res)
        lam = np.linspace(lam_span[0], lam_span[1], args.res)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["mu", "lambda", "region", "predicate", "witness_family", "witness_s"]
        )
        unknown = 0
        mg, lg = np.meshgrid(mu, lam)
        best_s = np.zeros(mg.shape, dtype=np.int64)
        for s in range(1, 9):
            coeff = (
                mg * (1 - 2 * m)
                + (2 * s - mg) ** 2 / lg
                + 2 * (2 * s - 1) * (m + 1)
                + 4 * s
            )
            hit = (coeff < 0) & (best_s == 0)
            best_s[hit] = s
        for iy in range(args.res):
            for ix in range(args.res):
                s = int(best_s[iy, ix])
                if s:
                    writer.writerow(
                        [f"{mu[ix]:.12g}", f"{lam[iy]:.12g}", "Unstable",
                         "c2s-witness", "C2s", s]
                    )
                else:
                    unknown += 1
                    writer.writerow(
                        [f"{mu[ix]:.12g}", f"{lam[iy]:.12g}", "Unknown",
                         "open-region", "", ""]
                    )
        if fmt == "json":
            report = _report_header(args, "region")
            report["unknown_cells"] = unknown
            payload = json.dumps(report, indent=2, sort_keys=True) + "\n"
        elif fmt == "svg":
            print("config error: svg output requires m = 1", file=sys.stderr)
            return 2
        else:
            payload = buf.getvalue()
    stream, close = _open_out(args.out)
    try:
        stream.write(payload)
    finally:
        if close:
            stream.close()
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0,) else 0
    if args.command == "verify":
        return cmd_verify(args)
    if args.command == "hessian":
        return cmd_hessian(args)
    if args.command == "region":
        return cmd_region(args)
    print(f"config error: unknown command {args.command}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
