import math

import numpy as np
import pytest

from mimicry import (
    GaussianMartingale,
    Polynomial,
    SignFlipMartingale,
    SquaredBesselMartingale,
    StableMartingale,
    SubordinatorSpec,
    TestFunction,
    TimeGrid,
    UnsupportedVariantError,
    build_mimic_generator,
    calibrate,
    closed_form_generator,
    finite_difference_generator_check,
    generate_ensemble,
    laplace_exponent,
    predictable_qv,
    probe_record,
    realized_qv,
)
from mimicry.generator import BochnerGenerator, LampertiGenerator, ScaledGenerator, TimeChangedGenerator

X1 = Polynomial.monomial(1)
X2 = Polynomial.monomial(2)
X3 = Polynomial.monomial(3)

DRIFT_ONLY = SubordinatorSpec("drift-only", beta=1.0)
POISSON_HALF = calibrate(SubordinatorSpec("poisson", 0.0, {"rate": 1.0}), 0.5)
POISSON_ONE = calibrate(SubordinatorSpec("poisson", 0.0, {"rate": 1.0}), 1.0)


def calibrated_for(ref):
    return calibrate(SubordinatorSpec("poisson", 0.0, {"rate": 1.0}), ref.kappa)


class TestPolynomial:
    def test_eval_and_derivatives(self):
        f = Polynomial((1.0, 2.0, 3.0))  # 1 + 2x + 3x^2
        assert f(2.0) == 17.0
        assert f.d1(2.0) == 14.0
        assert f.d2(2.0) == 6.0

    def test_scale_argument(self):
        f = Polynomial((0.0, 0.0, 1.0)).scale_argument(3.0)
        assert f(2.0) == 36.0  # (3*2)^2

    def test_degree_cap(self):
        with pytest.raises(ValueError):
            Polynomial((0.0,) * 5 + (1.0,))


class TestClosedForm:
    def test_brownian_drift_only_is_one(self):
        gen = closed_form_generator(GaussianMartingale(0.0), DRIFT_ONLY)
        for t, x in [(0.5, 0.0), (1.0, 0.7), (3.0, -2.0)]:
            assert gen.apply(t, x, X2) == pytest.approx(1.0, abs=1e-12)

    def test_brownian_poisson_value(self):
        # A_t x^2 at (1, 0.7) = psi(1) + (1 - psi(1)) * 0.49 with the kappa=1/2 spec
        gen = closed_form_generator(GaussianMartingale(0.0), POISSON_HALF)
        psi1 = laplace_exponent(POISSON_HALF, 1.0)
        expected = psi1 + (1.0 - psi1) * 0.49
        assert expected == pytest.approx(0.89966, abs=1e-5)
        assert gen.apply(1.0, 0.7, X2) == pytest.approx(expected, rel=1e-12)

    def test_sign_flip_value(self):
        # calibrated spec: A_t x^2 = 2*kappa*x^2/t
        gen = closed_form_generator(SignFlipMartingale(1.0), POISSON_ONE)
        assert gen.apply(2.0, 3.0, X2) == pytest.approx(9.0, rel=1e-12)

    def test_besq_matches_hand_expansion(self):
        # A_t x^2 = 2*delta*t*psi(2) + 4x(psi(2) - psi(1)) + x^2 (2 - psi(2))/t
        ref = SquaredBesselMartingale(2.0)
        spec = calibrated_for(ref)
        psi1 = laplace_exponent(spec, 1.0)
        psi2 = laplace_exponent(spec, 2.0)
        gen = closed_form_generator(ref, spec)
        t, x = 1.3, 0.4
        expected = 2.0 * ref.delta * t * psi2 + 4.0 * x * (psi2 - psi1) + x ** 2 * (2.0 - psi2) / t
        assert gen.apply(t, x, X2) == pytest.approx(expected, rel=1e-12)

    def test_t_zero_reduces_to_reference_generator(self):
        gen = closed_form_generator(GaussianMartingale(0.0), POISSON_HALF)
        assert gen.apply(0.0, 0.3, X2) == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "ref",
        [GaussianMartingale(0.0), GaussianMartingale(1.0), SquaredBesselMartingale(2.0), SignFlipMartingale(1.0)],
        ids=["gaussian-k0", "gaussian-k1", "besq", "sign-flip"],
    )
    @pytest.mark.parametrize(
        "family,params",
        [
            ("poisson", {"rate": 1.0}),
            ("compound-poisson-exponential", {"rate": 1.0, "theta": 1.0}),
            ("gamma", {"c": 1.0, "theta": 1.0}),
            ("stable-subordinator", {"alpha": 0.5, "c": 1.0}),
        ],
    )
    def test_martingale_nullity_all_calibrated_specs(self, ref, family, params):
        spec = calibrate(SubordinatorSpec(family, 0.0, params), ref.kappa)
        gen = closed_form_generator(ref, spec)
        for t, x in [(1.0, 0.5), (2.0, -1.0)]:
            assert abs(gen.apply(t, x, X1)) < 1e-9

    def test_stable_reference_unsupported(self):
        gen = closed_form_generator(StableMartingale(1.5), POISSON_HALF)
        with pytest.raises(UnsupportedVariantError):
            gen.apply(1.0, 0.5, X2)

    def test_linearity_exact_for_polynomials(self):
        # A(2f + g) == 2 A(f) + A(g)
        gen = closed_form_generator(GaussianMartingale(0.0), POISSON_HALF)
        f = Polynomial((0.0, 2.0, -1.0, 0.5))
        g = Polynomial((1.0, 0.0, 3.0, 0.0))
        combo = Polynomial(tuple(2.0 * a + b for a, b in zip(f.coeffs, g.coeffs)))
        t, x = 1.5, -0.3
        assert gen.apply(t, x, combo) == pytest.approx(
            2.0 * gen.apply(t, x, f) + gen.apply(t, x, g), rel=1e-12
        )


class TestCombinators:
    def test_lamperti_on_brownian(self):
        # L-hat f = f''/2 - x f'/2; at f = x^2, x = 1 this vanishes
        lam = LampertiGenerator(GaussianMartingale(0.0))
        assert lam.apply(1.0, X2) == pytest.approx(0.0, abs=1e-14)
        assert lam.apply(0.5, X2) == pytest.approx(1.0 - 0.5 * 0.5 * 2.0 * 0.5)

    def test_time_change_combinator(self):
        class Dummy:
            def apply(self, t, x, f, rng=None):
                return t * f(x)

        tc = TimeChangedGenerator(Dummy(), c=lambda t: math.log(t), cprime=lambda t: 1.0 / t)
        # c'_t * A_{c_t}: (1/t) * log(t) * f(x)
        assert tc.apply(2.0, 3.0, X2) == pytest.approx(0.5 * math.log(2.0) * 9.0)

    def test_scaling_combinator(self):
        class Dummy:  # time-homogeneous inner generator: A f(x) = f''(x)
            def apply(self, x, f, rng=None):
                return f.d2(x)

        sc = ScaledGenerator(Dummy(), c=lambda t: t ** 2, cprime=lambda t: 2.0 * t)
        # pi-conjugation gives c^2 f''(x) (f=x^2: 2 c^2); correction (c'/c) x f'(x)
        t, x = 1.5, 0.7
        expected = 2.0 * (t ** 2) ** 2 + (2.0 * t / t ** 2) * x * 2.0 * x
        assert sc.apply(t, x, X2) == pytest.approx(expected, rel=1e-12)

    def test_bochner_drift_only_is_plain_lamperti(self):
        lam = LampertiGenerator(GaussianMartingale(0.0))
        boch = BochnerGenerator(lam, DRIFT_ONLY)
        assert boch.apply(0.4, X3) == pytest.approx(lam.apply(0.4, X3), rel=1e-12)


class TestComposedEqualsClosedForm:
    PROBES = [(1.0, 0.5), (2.0, -1.0)]

    @pytest.mark.parametrize(
        "ref",
        [GaussianMartingale(0.0), SignFlipMartingale(1.0), GaussianMartingale(1.0), SquaredBesselMartingale(2.0)],
        ids=["gaussian-k0", "sign-flip", "gaussian-k1", "besq"],
    )
    @pytest.mark.parametrize("f", [X1, X2, X3], ids=["x", "x2", "x3"])
    def test_agreement(self, ref, f):
        spec = calibrated_for(ref)
        closed = closed_form_generator(ref, spec)
        composed = build_mimic_generator(ref, spec)
        for t, x in self.PROBES:
            a = closed.apply(t, x, f)
            b = composed.apply(t, x, f)
            assert abs(a - b) <= 1e-9 * max(abs(a), 1e-12)

    def test_log_anchor_cancels(self):
        ref = GaussianMartingale(0.0)
        g0 = build_mimic_generator(ref, POISSON_HALF, log_anchor=0.0)
        g1 = build_mimic_generator(ref, POISSON_HALF, log_anchor=1.3)
        for t, x in self.PROBES:
            assert g0.apply(t, x, X3) == pytest.approx(g1.apply(t, x, X3), rel=1e-12)


class TestFiniteDifference:
    def test_brownian_drift_only(self):
        rng = np.random.default_rng(0)
        fd = finite_difference_generator_check(
            GaussianMartingale(0.0), DRIFT_ONLY, X2, t=1.0, x=0.0, h=1e-3, n=200_000, rng=rng
        )
        assert abs(fd.estimate - 1.0) <= max(0.05, 3.0 * fd.stderr)

    def test_brownian_poisson(self):
        rng = np.random.default_rng(1)
        closed = closed_form_generator(GaussianMartingale(0.0), POISSON_HALF).apply(1.0, 0.7, X2)
        fd = finite_difference_generator_check(
            GaussianMartingale(0.0), POISSON_HALF, X2, t=1.0, x=0.7, h=1e-3, n=400_000, rng=rng
        )
        assert abs(fd.estimate - closed) <= max(0.05 * abs(closed), 3.0 * fd.stderr)

    def test_sign_flip(self):
        rng = np.random.default_rng(2)
        fd = finite_difference_generator_check(
            SignFlipMartingale(1.0), POISSON_ONE, X2, t=2.0, x=3.0, h=1e-3, n=200_000, rng=rng
        )
        assert abs(fd.estimate - 9.0) <= max(0.05 * 9.0, 3.0 * fd.stderr)

    def test_rng_required(self):
        with pytest.raises(ValueError):
            finite_difference_generator_check(GaussianMartingale(0.0), DRIFT_ONLY, X2, 1.0, 0.0)


class TestFunctionTriples:
    def test_triple_matches_polynomial_route(self):
        triple = TestFunction(f=lambda x: x ** 2, fprime=lambda x: 2.0 * x, fsecond=lambda x: 2.0 + 0.0 * x)
        gen = closed_form_generator(GaussianMartingale(0.0), POISSON_HALF, mc_samples=400_000)
        rng = np.random.default_rng(3)
        exact = gen.apply(1.0, 0.7, X2)
        mc = gen.apply(1.0, 0.7, triple, rng=rng)
        assert mc == pytest.approx(exact, abs=0.02)

    def test_triple_linearity_common_random_numbers(self):
        gen = closed_form_generator(GaussianMartingale(0.0), POISSON_HALF, mc_samples=50_000)
        f = TestFunction(lambda x: np.sin(x), lambda x: np.cos(x), lambda x: -np.sin(x))
        combo = TestFunction(lambda x: 2.0 * np.sin(x), lambda x: 2.0 * np.cos(x), lambda x: -2.0 * np.sin(x))
        a = gen.apply(1.0, 0.4, combo, rng=np.random.default_rng(7))
        b = 2.0 * gen.apply(1.0, 0.4, f, rng=np.random.default_rng(7))
        assert a == pytest.approx(b, rel=1e-12)

    def test_infinite_activity_triple_rejected(self):
        spec = calibrate(SubordinatorSpec("gamma", 0.0, {"c": 1.0, "theta": 1.0}), 0.5)
        gen = closed_form_generator(GaussianMartingale(0.0), spec)
        triple = TestFunction(lambda x: np.sin(x), lambda x: np.cos(x), lambda x: -np.sin(x))
        with pytest.raises(UnsupportedVariantError):
            gen.apply(1.0, 0.0, triple, rng=np.random.default_rng(0))


class TestQuadraticVariation:
    def test_drift_only_brownian_is_t(self):
        ref = GaussianMartingale(0.0)
        grid = TimeGrid.geometric(1e-3, 1.0, 64)
        ens = generate_ensemble(ref, DRIFT_ONLY, grid, 50, seed=4)
        qv = predictable_qv(ens, ref, DRIFT_ONLY)
        assert np.all(np.abs(qv - grid.times) < 1e-12)

    def test_besq_drift_only_collapses(self):
        # psi(2) = 2: qv = 2*delta*t^2 + 4*int X ds, no x^2/s term
        ref = SquaredBesselMartingale(2.0)
        grid = TimeGrid.geometric(1e-3, 1.0, 64)
        ens = generate_ensemble(ref, DRIFT_ONLY, grid, 50, seed=5)
        qv = predictable_qv(ens, ref, DRIFT_ONLY)
        from scipy.integrate import cumulative_trapezoid

        manual = 2.0 * ref.delta * grid.times ** 2 + 4.0 * cumulative_trapezoid(
            ens.values, grid.times, axis=1, initial=0.0
        )
        assert np.allclose(qv, manual, rtol=1e-12, atol=1e-12)

    def test_ensemble_mean_matches_second_moment(self):
        ref = GaussianMartingale(0.0)
        grid = TimeGrid.geometric(1e-3, 1.0, 128)
        ens = generate_ensemble(ref, POISSON_HALF, grid, 4000, seed=6)
        qv_end = predictable_qv(ens, ref, POISSON_HALF)[:, -1]
        assert abs(qv_end.mean() - 1.0) < 0.02

    def test_stable_rejected(self):
        ref = StableMartingale(1.5)
        grid = TimeGrid.geometric(0.5, 1.0, 4)
        ens = generate_ensemble(ref, calibrated_for(ref), grid, 10, seed=7)
        with pytest.raises(UnsupportedVariantError):
            predictable_qv(ens, ref, calibrated_for(ref))

    def test_realized_qv_values(self):
        assert realized_qv([0.0, 0.0, 1.0, 1.0]) == 1.0
        assert realized_qv([2.0, 2.0, 2.0]) == 0.0
        with pytest.raises(ValueError):
            realized_qv([1.0])

    def test_realized_qv_brownian(self):
        rng = np.random.default_rng(8)
        steps = rng.standard_normal((500, 1024)) * math.sqrt(1.0 / 1024)
        paths = np.cumsum(steps, axis=1)
        qvs = np.sum(np.diff(np.column_stack([np.zeros(500), paths]), axis=1) ** 2, axis=1)
        se = qvs.std(ddof=1) / math.sqrt(qvs.size)
        assert abs(qvs.mean() - 1.0) < 3.0 * se


class TestProbeRecord:
    def test_record_fields_and_consistency(self):
        rec = probe_record(GaussianMartingale(0.0), POISSON_HALF, X2, t=1.0, x=0.7, n=50_000, seed=1)
        assert rec["variant"] == "gaussian"
        assert rec["closed_form"] == pytest.approx(rec["composed"], rel=1e-9)
        assert abs(rec["fd_estimate"] - rec["closed_form"]) <= max(
            0.05 * abs(rec["closed_form"]), 3.0 * rec["fd_se"]
        )
