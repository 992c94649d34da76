"""Functionals and Hessians: cross-checks between all four routes."""

import math
from fractions import Fraction

import numpy as np
import pytest

from bergerhopf.fields import field_Aa, field_C2s, field_s3, s3_eigenpair
from bergerhopf.functionals import (
    FunctionalId,
    GammaMinusError,
    HopfUnitField,
    HopfVariationCurve,
    c2s_norm_integral,
    closed_family_value,
    direction_moments,
    evaluate_functional,
    hess_aa_closed,
    hess_c2s_coefficients,
    hess_general_forms,
    hess_hopf_closed,
    hess_s3_dbarC,
    hessian_report,
    omega_form,
    operator_pack,
    second_variation_fd,
    sigma2,
)
from bergerhopf.geometry import BergerContext, complex_structure, frame_batch, sample_sphere
from bergerhopf.polynomials import PolyField
from bergerhopf.quadrature import PI, hopf_product_rule, sphere_volume

RULE = hopf_product_rule(12, 24)


def rel_gap(a, b, floor=1.0):
    return abs(a - b) / max(abs(a), abs(b), floor)


class TestFunctionalId:
    def test_validation(self):
        with pytest.raises(ValueError):
            FunctionalId("generalized-energy")
        with pytest.raises(ValueError):
            FunctionalId.generalized(0)
        with pytest.raises(ValueError):
            FunctionalId("energy", lam=1)
        assert FunctionalId.generalized(-2).eps_lam == -1
        assert FunctionalId.energy().label() == "energy"


class TestEvaluateFunctional:
    def test_energy_round_sphere(self):
        # E(V) = (n/2) vol + (1/2) int |nabla V|^2 = 5 pi^2 on the round S^3
        ctx = BergerContext(1, 1)
        val = evaluate_functional(HopfUnitField(ctx), FunctionalId.energy(), ctx, RULE)
        assert val == pytest.approx(5 * PI**2, rel=1e-12)

    @pytest.mark.parametrize("mu", [1, 4, -1, "2.6"])
    def test_energy_closed_value(self, mu):
        # trace form gives (1/2)(1 + 2m + 2m|mu|) sqrt|mu| vol
        ctx = BergerContext(1, mu)
        expected = (
            0.5 * (1 + 2 + 2 * abs(ctx.mu)) * ctx.sqrt_abs_mu * sphere_volume(1)
        )
        val = evaluate_functional(HopfUnitField(ctx), FunctionalId.energy(), ctx, RULE)
        assert val == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("mu", [1, 4, -2])
    def test_volume_closed_value(self, mu):
        # det L_V = (1+|mu|)^{2m}; F = (1+|mu|)^m sqrt|mu| vol
        ctx = BergerContext(1, mu)
        expected = (1 + abs(ctx.mu)) * ctx.sqrt_abs_mu * sphere_volume(1)
        val = evaluate_functional(HopfUnitField(ctx), FunctionalId.volume(), ctx, RULE)
        assert val == pytest.approx(expected, rel=1e-12)

    def test_generalized_at_lambda_mu_equals_energy(self):
        ctx = BergerContext(1, "2.6")
        hopf = HopfUnitField(ctx)
        e1 = evaluate_functional(hopf, FunctionalId.energy(), ctx, RULE)
        e2 = evaluate_functional(hopf, FunctionalId.generalized("2.6"), ctx, RULE)
        assert e1 == pytest.approx(e2, rel=1e-14)

    def test_requires_unit_field(self):
        ctx = BergerContext(1, 1)

        class Doubled(HopfUnitField):
            def value(self, points):
                return 2.0 * super().value(points)

        with pytest.raises(ValueError):
            evaluate_functional(Doubled(ctx), FunctionalId.energy(), ctx, RULE)

    def test_exact_rule_rejected(self):
        from bergerhopf.quadrature import exact_rule

        ctx = BergerContext(1, 1)
        with pytest.raises(TypeError):
            evaluate_functional(
                HopfUnitField(ctx), FunctionalId.energy(), ctx, exact_rule(1)
            )

    def test_pullback_metric_identity(self):
        # (V_mu)^* g^S = (1+|mu|) g_lam with lam = mu/(1+|mu|), as bilinear
        # forms on random tangent vectors
        for mu in (2.0, -1.5):
            ctx = BergerContext(1, mu)
            lam = ctx.mu / (1 + abs(ctx.mu))
            hopf = HopfUnitField(ctx)
            pts = sample_sphere(1, 30, seed=31)
            frames = frame_batch(pts, ctx)
            cov = hopf.cov_columns(pts, frames)
            jp = complex_structure(pts, 1)

            def gmu(u, v):
                return np.einsum("...i,...i->...", u, v) + (
                    ctx.mu - 1.0
                ) * np.einsum("...i,...i->...", u, jp[:, None, :]) * np.einsum(
                    "...i,...i->...", v, jp[:, None, :]
                )

            lhs = gmu(frames, frames) + gmu(cov, cov)
            g_lam = np.einsum("nai,nai->na", frames, frames) + (
                lam - 1.0
            ) * np.einsum("nai,ni->na", frames, jp) ** 2
            rhs = (1 + abs(ctx.mu)) * g_lam
            assert np.abs(lhs - rhs).max() < 1e-10

    def test_volume_energy_consistency(self):
        # F(V_mu) = (2/n) E_{(V_mu)^* gS}(V_mu)
        #         = (2/n) (1+|mu|)^{n/2-1} E_{g_lam}(V_mu), lam = mu/(1+|mu|)
        n = 3
        for mu in (1.0, 4.0, -2.0):
            ctx = BergerContext(1, mu)
            hopf = HopfUnitField(ctx)
            lam = ctx.mu / (1 + abs(ctx.mu))
            f_val = evaluate_functional(hopf, FunctionalId.volume(), ctx, RULE)
            e_val = evaluate_functional(hopf, FunctionalId.generalized(lam), ctx, RULE)
            assert f_val == pytest.approx(
                (2 / n) * (1 + abs(ctx.mu)) ** (n / 2 - 1) * e_val, rel=1e-12
            )


class TestDirectionMoments:
    def test_aa_norm_integral(self):
        # int |A_a|^2 dv = |a|^2 vol m/(m+1), exactly
        for m in (1, 2):
            ctx = BergerContext(m, 1)
            a_field = field_Aa([0, 1] + [0] * (2 * m), ctx)
            mom = direction_moments(a_field, ctx)
            assert mom.i_a == Fraction(2, math.factorial(m)) * Fraction(m, m + 1)

    def test_cache_hits(self):
        ctx = BergerContext(1, "2.6")
        a_field = field_C2s(1, ctx)
        m1 = direction_moments(a_field, ctx)
        m2 = direction_moments(field_C2s(1, ctx), ctx)
        assert m1 is m2

    def test_hessian_is_quadratic_in_the_direction(self):
        # Hess(cA) = c^2 Hess(A) through the whole moment machinery
        from bergerhopf.fields import TangentField
        from fractions import Fraction

        ctx = BergerContext(1, "-2")
        base = field_C2s(2, ctx)
        scaled = TangentField(
            "scaled", {"c": "3/2"}, 1, [c * Fraction(3, 2) for c in base.components]
        )
        for fid in (
            FunctionalId.energy(),
            FunctionalId.volume(),
            FunctionalId.generalized(0.5),
        ):
            h1 = hess_hopf_closed(base, fid, ctx)
            h2 = hess_hopf_closed(scaled, fid, ctx)
            assert h2 == pytest.approx(2.25 * h1, rel=1e-12)

    def test_frame_free_trace_identity_pointwise(self):
        # the moment route computes |nabla^mu A|^2 without frames as
        #   sum_alpha g(T(P e_alpha), T(P e_alpha)) + (1/mu - 1) g(T(V), T(V));
        # check against the adapted-frame signed trace at random points
        from bergerhopf.functionals import tangent_cov_columns
        from bergerhopf.geometry import frame_batch, frame_signs

        for mu in ("2.6", -2):
            ctx = BergerContext(1, mu)
            a_field = field_C2s(2, ctx)
            pts = sample_sphere(1, 40, seed=44)
            jp = complex_structure(pts, 1)
            frames = frame_batch(pts, ctx)
            signs = frame_signs(ctx)
            cov = tangent_cov_columns(
                pts, frames, a_field.value(pts), a_field.jacobian(pts), ctx
            )
            gnorm = np.einsum("nai,nai->na", cov, cov) + (
                ctx.mu - 1.0
            ) * np.einsum("nai,ni->na", cov, jp) ** 2
            frame_trace = np.einsum("a,na->n", signs, gnorm)
            # ambient-basis version with directions P e_alpha and V
            d = 4
            dirs = np.broadcast_to(np.eye(d), (40, d, d)).copy()
            dirs -= pts[:, :, None] * pts[:, None, :]
            dirs = np.concatenate([dirs, jp[:, None, :]], axis=1)
            cov2 = tangent_cov_columns(
                pts, dirs, a_field.value(pts), a_field.jacobian(pts), ctx
            )
            g2 = np.einsum("nai,nai->na", cov2, cov2) + (
                ctx.mu - 1.0
            ) * np.einsum("nai,ni->na", cov2, jp) ** 2
            ambient_trace = g2[:, :d].sum(axis=1) + (1.0 / ctx.mu - 1.0) * g2[:, d]
            np.testing.assert_allclose(ambient_trace, frame_trace, rtol=1e-10)


class TestClosedVsCoefficients:
    @pytest.mark.parametrize("mu", [-3, -1, "-0.25", "0.25", 1, "2.6", 3, 5])
    @pytest.mark.parametrize("s", [1, 2])
    def test_c2s_lemma_matches_integrand(self, s, mu):
        ctx = BergerContext(1, mu)
        c_field = field_C2s(s, ctx)
        for fid in (
            FunctionalId.energy(),
            FunctionalId.volume(),
            FunctionalId.generalized("0.5"),
            FunctionalId.generalized(-2),
        ):
            lemma = closed_family_value(c_field, fid, ctx)
            exact = hess_hopf_closed(c_field, fid, ctx)
            assert rel_gap(lemma, exact) < 1e-12

    def test_c2s_coefficient_examples(self):
        assert hess_c2s_coefficients(2, 1, -1).energy == -4
        assert hess_c2s_coefficients(1, 1, -1).energy == 0
        assert hess_c2s_coefficients(1, 1, 1, 1).e_lambda == 8
        assert hess_c2s_coefficients(1, 1, -1).f_vol == 4

    def test_energy_zero_crossing(self):
        # C_2 at mu = -1: coefficient vanishes, so does the Hessian
        ctx = BergerContext(1, -1)
        c_field = field_C2s(1, ctx)
        val = hess_hopf_closed(c_field, FunctionalId.energy(), ctx)
        assert abs(val) < 1e-12

    @pytest.mark.parametrize("m", [1, 2])
    @pytest.mark.parametrize("mu", [-3, -1, "-0.25"])
    def test_aa_closed_forms(self, m, mu):
        ctx = BergerContext(m, mu)
        a = [0, 1] + [0] * (2 * m)
        a_field = field_Aa(a, ctx)
        for fid in (FunctionalId.energy(), FunctionalId.volume()):
            closed = hess_aa_closed(a, fid, ctx)
            exact = hess_hopf_closed(a_field, fid, ctx)
            assert rel_gap(closed, exact) < 1e-12

    def test_aa_example_value(self):
        # m=1, mu=-1: coefficient (1/2)(1+2-4) = -1/2 times vol gives -pi^2
        ctx = BergerContext(1, -1)
        val = hess_aa_closed([0, 1, 0, 0], FunctionalId.energy(), ctx)
        assert val == pytest.approx(-(PI**2), rel=1e-14)

    def test_aa_scales_with_norm_squared(self):
        ctx = BergerContext(1, -2)
        v1 = hess_aa_closed([0, 1, 0, 0], FunctionalId.energy(), ctx)
        v2 = hess_aa_closed([0, 3, 0, 0], FunctionalId.energy(), ctx)
        assert v2 == pytest.approx(9 * v1, rel=1e-14)

    def test_aa_closed_rejects_riemannian(self):
        with pytest.raises(ValueError):
            hess_aa_closed([0, 1, 0, 0], FunctionalId.energy(), BergerContext(1, 1))


class TestEigenfunctionForms:
    """The f-integral route: Hessians from int f^2 and int |Hess f|^2 alone."""

    def test_degree_one_recovers_projected_constant_family(self):
        # f = <a, x> builds A_a through the gradient construction, so the
        # degree-s forms must reproduce the A_a Hessians with s = 1
        from bergerhopf.functionals import hess_eigenfunction_forms

        for m in (1, 2):
            d = 2 * m + 2
            f1 = PolyField.variable(1, d)
            for mu in (-3, "0.25", "2.6"):
                ctx = BergerContext(m, mu)
                a_field = field_Aa([0, 1] + [0] * (d - 2), ctx)
                for fid in (
                    FunctionalId.energy(),
                    FunctionalId.volume(),
                    FunctionalId.generalized(-0.5),
                ):
                    via_forms = hess_eigenfunction_forms(f1, fid, ctx)
                    via_integrand = hess_hopf_closed(a_field, fid, ctx)
                    assert rel_gap(via_forms, via_integrand) < 1e-12

    @pytest.mark.parametrize("m", [1, 2])
    @pytest.mark.parametrize("s", [1, 2])
    def test_even_degrees_match_integrand_route(self, m, s):
        from bergerhopf.functionals import hess_eigenfunction_forms
        from bergerhopf.harmonics import f2s

        f = f2s(s, 1, m)
        for mu in (-1, "2.6"):
            ctx = BergerContext(m, mu)
            c_field = field_C2s(s, ctx)
            for fid in (
                FunctionalId.energy(),
                FunctionalId.volume(),
                FunctionalId.generalized(-2),
            ):
                via_forms = hess_eigenfunction_forms(f, fid, ctx)
                via_integrand = hess_hopf_closed(c_field, fid, ctx)
                assert rel_gap(via_forms, via_integrand) < 1e-12

    def test_rejects_non_eigenfunctions(self):
        from bergerhopf.functionals import hess_eigenfunction_forms

        ctx = BergerContext(1, 1)
        bad = PolyField.from_terms({(2, 0, 0, 0): 1}, 4)
        with pytest.raises(ValueError):
            hess_eigenfunction_forms(bad, FunctionalId.energy(), ctx)
        with pytest.raises(ValueError):
            hess_eigenfunction_forms(
                PolyField.constant(1, 4), FunctionalId.energy(), ctx
            )


class TestS3Dbar:
    def test_cancelation_exact(self):
        for level in (1, 2):
            rep = hess_s3_dbarC(s3_eigenpair(level), 2.0, 1.0)
            assert rep.dbar_energy == 0

    def test_component_identities(self):
        rep1 = hess_s3_dbarC(s3_eigenpair(1), 1.0, 1.0)
        assert rep1.sum_b_sq == 2 * rep1.i_a
        assert rep1.cross == rep1.i_a
        rep2 = hess_s3_dbarC(s3_eigenpair(2), 1.0, 1.0)
        assert rep2.sum_b_sq == 4 * rep2.i_a
        assert rep2.cross == 2 * rep2.i_a

    def test_matches_quadratic_form_route(self):
        # covers negative lambda too: the displayed 1/lam coefficient carries
        # the sign, the prefactor carries |lam|
        for level in (1, 2):
            pair = s3_eigenpair(level)
            for mu in (0.5, 1.0, 3.0, 5.0):
                ctx = BergerContext(1, mu)
                a_field = field_s3(pair, ctx)
                for lam in (0.5, 1.0, 2.0, -0.5, -2.0):
                    direct = hess_s3_dbarC(pair, mu, lam).hessian
                    via_integrand = hess_hopf_closed(
                        a_field, FunctionalId.generalized(lam), ctx
                    )
                    assert rel_gap(direct, via_integrand) < 1e-12

    def test_unstable_example_sign(self):
        # mu = 3, lam = 1: coefficient 2 - mu + 0 < 0
        rep = hess_s3_dbarC(s3_eigenpair(1), 3.0, 1.0)
        assert rep.hessian < 0

    def test_representative_independence(self):
        # any first-eigenspace a1 works; integral quantities agree for the
        # two coordinate choices
        for level in (1, 2):
            for mu, lam in [(2.0, 1.0), (4.5, 0.5)]:
                r1 = hess_s3_dbarC(s3_eigenpair(level, axis=1), mu, lam)
                r2 = hess_s3_dbarC(s3_eigenpair(level, axis=2), mu, lam)
                assert r1.i_a == r2.i_a
                assert r1.dbar_energy == r2.dbar_energy == 0
                assert r1.hessian == pytest.approx(r2.hessian, rel=1e-14)
                ctx = BergerContext(1, mu)
                h1 = hess_hopf_closed(
                    field_s3(s3_eigenpair(level, axis=1), ctx),
                    FunctionalId.generalized(lam),
                    ctx,
                )
                h2 = hess_hopf_closed(
                    field_s3(s3_eigenpair(level, axis=2), ctx),
                    FunctionalId.generalized(lam),
                    ctx,
                )
                assert h1 == pytest.approx(h2, rel=1e-13)

    def test_riemannian_only(self):
        with pytest.raises(ValueError):
            hess_s3_dbarC(s3_eigenpair(1), -1.0, 1.0)


class TestNodeRulePath:
    @pytest.mark.parametrize("mu", [-3, "0.25", "2.6"])
    def test_matches_exact_moments(self, mu):
        # pointwise frame evaluation of the same integrand on the product rule
        ctx = BergerContext(1, mu)
        for a_field in (field_Aa([0, 1, 0, 0], ctx), field_C2s(2, ctx)):
            for fid in (
                FunctionalId.energy(),
                FunctionalId.volume(),
                FunctionalId.generalized(-0.5),
            ):
                exact = hess_hopf_closed(a_field, fid, ctx)
                nodes = hess_hopf_closed(a_field, fid, ctx, RULE)
                assert rel_gap(exact, nodes) < 1e-12


class TestGeneralForms:
    GRID = [
        ("Aa", 1, FunctionalId.energy()),
        ("Aa", -1, FunctionalId.volume()),
        ("Aa", "2.6", FunctionalId.generalized(-2)),
        ("C2s", -3, FunctionalId.generalized("0.5")),
        ("C2s", "0.25", FunctionalId.volume()),
        ("s3", 5, FunctionalId.energy()),
        ("s3", -1, FunctionalId.generalized(1)),
    ]

    @pytest.mark.parametrize("family,mu,fid", GRID)
    def test_agreement_with_closed(self, family, mu, fid):
        ctx = BergerContext(1, mu)
        if family == "Aa":
            a_field = field_Aa([0, 1, 0, 0], ctx)
        elif family == "C2s":
            a_field = field_C2s(2, ctx)
        else:
            a_field = field_s3(s3_eigenpair(1), ctx)
        closed = hess_hopf_closed(a_field, fid, ctx)
        general = hess_general_forms(a_field, fid, ctx, RULE)
        assert rel_gap(general, closed) < 1e-8

    def test_needs_node_rule(self):
        from bergerhopf.quadrature import exact_rule

        ctx = BergerContext(1, 1)
        with pytest.raises(TypeError):
            hess_general_forms(
                field_Aa([0, 1, 0, 0], ctx), FunctionalId.energy(), ctx, exact_rule(1)
            )


class TestHigherDimensions:
    """Route agreement beyond S^3, with Monte Carlo sharing nodes across
    routes so that discretization error cancels in route-vs-route gaps."""

    def test_m2_routes(self):
        from bergerhopf.quadrature import monte_carlo_rule

        ctx = BergerContext(2, -1)
        rule = monte_carlo_rule(60_000, seed=5, m=2)
        a_field = field_Aa([0, 1, 0, 0, 0, 0], ctx)
        for fid in (FunctionalId.energy(), FunctionalId.volume()):
            closed = hess_hopf_closed(a_field, fid, ctx)
            node = hess_hopf_closed(a_field, fid, ctx, rule)
            general = hess_general_forms(a_field, fid, ctx, rule)
            fd = second_variation_fd(a_field, fid, ctx, rule)
            scale = max(1.0, abs(closed))
            # Monte Carlo accuracy against the exact value
            assert abs(node - closed) / scale < 0.02
            # with shared nodes the assemblies track each other much closer
            if fid.tag == "energy":
                assert abs(general - node) / scale < 1e-12
                assert abs(fd.second - node) / scale < 1e-6
            else:
                assert abs(general - node) / scale < 0.02
                assert abs(fd.second - node) / scale < 0.02

    def test_m3_energy_routes(self):
        from bergerhopf.quadrature import monte_carlo_rule

        ctx = BergerContext(3, 2)
        rule = monte_carlo_rule(30_000, seed=7, m=3)
        a_field = field_Aa([0, 1, 0, 0, 0, 0, 0, 0], ctx)
        fid = FunctionalId.energy()
        closed = hess_hopf_closed(a_field, fid, ctx)
        node = hess_hopf_closed(a_field, fid, ctx, rule)
        general = hess_general_forms(a_field, fid, ctx, rule)
        scale = abs(closed)
        assert abs(node - closed) / scale < 0.03
        assert abs(general - node) / scale < 1e-12

    @pytest.mark.parametrize("m", [2, 3])
    def test_c2s_lemma_beyond_s3(self, m):
        for mu in (-1, 2):
            ctx = BergerContext(m, mu)
            for s in (1, 2):
                c_field = field_C2s(s, ctx)
                for fid in (
                    FunctionalId.energy(),
                    FunctionalId.volume(),
                    FunctionalId.generalized(-0.5),
                ):
                    lemma = closed_family_value(c_field, fid, ctx)
                    exact = hess_hopf_closed(c_field, fid, ctx)
                    assert rel_gap(lemma, exact) < 1e-12


class TestOmegaForm:
    def test_constant_on_hopf_direction(self):
        # omega_{(V, g_lam)}(V) = -2m sqrt|lam mu| everywhere
        for mu, lam in [(2.6, 0.5), (-2.6, 0.5), (1.0, 1.0), (-1.0, -2.0)]:
            ctx = BergerContext(1, mu)
            pts = sample_sphere(1, 40, seed=33)
            om = omega_form(pts, ctx, FunctionalId.generalized(lam))
            expected = -2.0 * math.sqrt(abs(lam * mu))
            assert np.abs(om - expected).max() < 1e-9

    def test_lorentzian_riemannian_omega_match(self):
        # the one-form itself is even in the sign of mu; the Hessian branches
        # differ only through the sign in front of the omega term
        pts = sample_sphere(1, 25, seed=34)
        fid = FunctionalId.generalized(0.5)
        om_r = omega_form(pts, BergerContext(1, 2.6), fid)
        om_l = omega_form(pts, BergerContext(1, -2.6), fid)
        assert np.abs(om_r - om_l).max() < 1e-9

    def test_criticality_on_horizontal_directions(self):
        # omega(X) = 0 for horizontal X: V_mu is critical
        ctx = BergerContext(1, "2.6")
        pts = sample_sphere(1, 100, seed=35)
        rng = np.random.default_rng(36)
        x = rng.standard_normal(pts.shape)
        x -= np.einsum("ni,ni->n", x, pts)[:, None] * pts
        jp = complex_structure(pts, 1)
        x -= np.einsum("ni,ni->n", x, jp)[:, None] * jp
        for fid in (FunctionalId.generalized(0.5), FunctionalId.volume()):
            om = omega_form(pts, ctx, fid, direction=x)
            assert np.abs(om).max() < 1e-6


class TestOperatorPack:
    def test_l_v_and_k_v(self):
        ctx = BergerContext(1, -2)
        p = sample_sphere(1, 1, seed=37)[0]
        pack = operator_pack(p, ctx, FunctionalId.volume())
        # L_V is diagonal (1, 1+|mu|, 1+|mu|) in the adapted frame
        np.testing.assert_allclose(pack.l_v, np.diag([1.0, 3.0, 3.0]), atol=1e-12)
        assert pack.det_l == pytest.approx((1 + abs(ctx.mu)) ** 2)
        # K_V annihilates the vertical slot and rotates the horizontal one
        np.testing.assert_allclose(pack.k_v[:, 0], 0.0, atol=1e-12)
        np.testing.assert_allclose(pack.k_v[0, :], 0.0, atol=1e-12)
        block = pack.k_v[1:, 1:]
        c = ctx.eps_mu * ctx.sqrt_abs_mu * (1 + abs(ctx.mu)) ** (ctx.m - 1)
        np.testing.assert_allclose(block @ block.T, c * c * np.eye(2), atol=1e-10)

    def test_p_tilde(self):
        ctx = BergerContext(1, 2)
        p = sample_sphere(1, 1, seed=38)[0]
        pack = operator_pack(p, ctx, FunctionalId.generalized(0.5))
        np.testing.assert_allclose(pack.p_tilde, np.diag([0.25, 1.0, 1.0]), atol=1e-14)


class TestSigma2:
    def test_identity_against_principal_minors(self):
        # sigma2 as implemented equals (tr M)^2 - tr(M^2); compare with twice
        # the second elementary symmetric function computed from 2x2 minors
        rng = np.random.default_rng(39)
        for n in (3, 5):
            m = rng.integers(-5, 6, size=(n, n)).astype(float)
            minors = sum(
                m[i, i] * m[j, j] - m[i, j] * m[j, i]
                for i in range(n)
                for j in range(i + 1, n)
            )
            assert sigma2(m) == pytest.approx(2.0 * minors, rel=1e-13)

    def test_batched(self):
        rng = np.random.default_rng(40)
        ms = rng.standard_normal((4, 3, 3))
        vals = sigma2(ms)
        for k in range(4):
            assert vals[k] == pytest.approx(sigma2(ms[k]))


class TestSecondVariationFD:
    def test_convention_factor_is_one(self):
        # independently derived: Hess E at A = A_{e1} on the round S^3 is
        # exactly pi^2; the normalized-curve second derivative must match
        # with factor 1
        ctx = BergerContext(1, 1)
        a_field = field_Aa([0, 1, 0, 0], ctx)
        fd = second_variation_fd(a_field, FunctionalId.energy(), ctx, RULE)
        assert fd.second == pytest.approx(PI**2, rel=1e-6)
        assert abs(fd.first) < 1e-9
        assert fd.stencil_gap < 1e-4

    @pytest.mark.parametrize("mu", [1, -1, "2.6", -3])
    @pytest.mark.parametrize(
        "fid",
        [FunctionalId.energy(), FunctionalId.volume(), FunctionalId.generalized(-2)],
    )
    def test_first_variation_vanishes(self, mu, fid):
        ctx = BergerContext(1, mu)
        a_field = field_C2s(1, ctx)
        fd = second_variation_fd(a_field, fid, ctx, RULE)
        assert abs(fd.first) / max(1.0, abs(fd.value_at_zero)) < 1e-6

    def test_curve_is_unit(self):
        for mu in (2.0, -2.0):
            ctx = BergerContext(1, mu)
            a_field = field_C2s(1, ctx)
            curve = HopfVariationCurve(ctx, a_field, RULE.points)
            w = curve.field_at(0.05)
            vals = w.value(RULE.points)
            jp = complex_structure(RULE.points, 1)
            norms = np.einsum("ni,ni->n", vals, vals) + (ctx.mu - 1.0) * np.einsum(
                "ni,ni->n", vals, jp
            ) ** 2
            np.testing.assert_allclose(norms, ctx.eps_mu, atol=1e-12)

    def test_timelike_cone_guard(self):
        ctx = BergerContext(1, -1)
        a_field = field_C2s(2, ctx)
        curve = HopfVariationCurve(ctx, a_field, RULE.points)
        with pytest.raises(ValueError):
            curve.field_at(1.0)

    def test_gamma_minus_exit_reported(self):
        # weakly timelike sphere: moderate t already leaves Gamma^-
        ctx = BergerContext(1, "-0.1")
        a_field = field_C2s(1, ctx)
        curve = HopfVariationCurve(ctx, a_field, RULE.points)
        with pytest.raises(GammaMinusError):
            evaluate_functional(curve.field_at(0.3), FunctionalId.volume(), ctx, RULE)


class TestHessianReport:
    def test_negative_verdict(self):
        ctx = BergerContext(1, -1)
        rep = hessian_report(field_C2s(2, ctx), FunctionalId.energy(), ctx, RULE)
        assert rep.verdict == "negative"
        assert rep.closed_form == pytest.approx(-4.0 * c2s_norm_integral(2, ctx), rel=1e-12)
        assert all(v < 0 for _, v, _ in rep.oracles)
        assert rep.max_discrepancy < 1e-3

    def test_zero_verdict(self):
        ctx = BergerContext(1, -1)
        rep = hessian_report(field_C2s(1, ctx), FunctionalId.energy(), ctx, RULE)
        assert rep.verdict == "zero"

    def test_positive_verdict_and_json(self):
        ctx = BergerContext(1, 1)
        rep = hessian_report(field_Aa([0, 1, 0, 0], ctx), FunctionalId.energy(), ctx, RULE)
        assert rep.verdict == "positive"
        js = rep.to_json()
        assert js["functional"] == "energy"
        assert js["direction"]["family"] == "Aa"
        assert {o["label"] for o in js["oracles"]} == {
            "exact-moment",
            "finite-difference",
        }
