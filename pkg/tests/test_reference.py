import math

import numpy as np
import pytest
from scipy import stats

from mimicry import (
    GaussianMartingale,
    PathEnsemble,
    SignFlipMartingale,
    SquaredBesselMartingale,
    StableMartingale,
    TimeGrid,
    ks_two_sample,
    martingale_slope_test,
    reference_from_config,
)

N = 30_000


def all_variants():
    return [
        GaussianMartingale(0.0),
        GaussianMartingale(1.0),
        SquaredBesselMartingale(2.0),
        StableMartingale(1.5),
        SignFlipMartingale(1.0),
        SignFlipMartingale(0.7, v_law="normal"),
    ]


def two_time_ensemble(ref, s, t, n, seed):
    """Across-path (Z_s, Z_t) samples via one vectorised transition call."""
    rng = np.random.default_rng(seed)
    xs = np.asarray(ref.sample_marginal(s, rng, size=n), dtype=float)
    xt = ref.sample_transition(np.full(n, s), np.full(n, t), xs, rng)
    grid = TimeGrid(np.array([s, t]), log_anchor=-math.log(s) + 2.0)
    return PathEnsemble(grid, np.column_stack([xs, xt]), ref.kappa, seed)


class TestMarginals:
    def test_gaussian_unit_variance(self):
        rng = np.random.default_rng(0)
        z = GaussianMartingale(0.0).sample_marginal(1.0, rng, size=100_000)
        se = (z ** 2).std(ddof=1) / math.sqrt(z.size)
        assert abs(z.var(ddof=1) - 1.0) < 3.0 * se

    def test_gaussian_k1_variance_function(self):
        # Var(Z_t) = t^(2k+1)/(2k+1)
        ref = GaussianMartingale(1.0)
        rng = np.random.default_rng(1)
        z = ref.sample_marginal(2.0, rng, size=100_000)
        target = 2.0 ** 3 / 3.0
        se = (z ** 2).std(ddof=1) / math.sqrt(z.size)
        assert abs(z.var(ddof=1) - target) < 3.0 * se

    @pytest.mark.parametrize("v_law", ["rademacher", "normal"])
    def test_sign_flip_v_law_symmetric(self, v_law):
        # sample skew of V must vanish
        ref = SignFlipMartingale(1.0, v_law=v_law)
        v = ref.sample_marginal(1.0, np.random.default_rng(99), size=100_000)
        third = v ** 3
        se = third.std(ddof=1) / math.sqrt(third.size)
        assert abs(third.mean()) < 3.0 * se + 1e-14

    def test_sign_flip_two_point_law(self):
        ref = SignFlipMartingale(1.0)
        rng = np.random.default_rng(2)
        z = ref.sample_marginal(2.0, rng, size=N)
        assert set(np.unique(z)) == {-2.0, 2.0}
        frac = np.mean(z > 0)
        se = math.sqrt(0.25 / N)
        assert abs(frac - 0.5) < 3.0 * se

    def test_squared_bessel_centred(self):
        rng = np.random.default_rng(3)
        z = SquaredBesselMartingale(2.0).sample_marginal(1.0, rng, size=100_000)
        se = z.std(ddof=1) / math.sqrt(z.size)
        assert abs(z.mean()) < 3.0 * se

    def test_squared_bessel_theta1_oracle(self):
        # brute-force check of E[Z_1^2] = 2*delta before tests rely on it
        ref = SquaredBesselMartingale(2.0)
        rng = np.random.default_rng(4)
        z = ref.sample_marginal(1.0, rng, size=1_000_000)
        z2 = z ** 2
        se = z2.std(ddof=1) / math.sqrt(z2.size)
        assert abs(z2.mean() - ref.theta1) < 3.0 * se

    def test_stable_matches_scipy_sampler(self):
        # cross-check our Chambers-Mallows-Stuck draws against scipy's S1 law
        ref = StableMartingale(1.5, scale=0.8, skew=0.3)
        rng = np.random.default_rng(5)
        ours = ref.sample_marginal(1.0, rng, size=20_000)
        theirs = stats.levy_stable.rvs(1.5, 0.3, loc=0.0, scale=0.8, size=20_000, random_state=rng)
        _, p = ks_two_sample(ours, theirs)
        assert p > 0.01

    def test_stable_from_levy_measure(self):
        sym = StableMartingale.from_levy_measure(1.5, 1.0, 1.0)
        assert sym.skew == 0.0
        tilted = StableMartingale.from_levy_measure(1.5, 2.0, 1.0)
        assert tilted.skew == pytest.approx(1.0 / 3.0)
        assert tilted.scale > sym.scale

    def test_negative_time_rejected(self):
        for ref in all_variants():
            with pytest.raises(ValueError):
                ref.sample_marginal(-1.0, np.random.default_rng(0))


class TestTransitions:
    def test_gaussian_brownian_increment(self):
        ref = GaussianMartingale(0.0)
        rng = np.random.default_rng(10)
        y = ref.sample_transition(np.ones(100_000), np.full(100_000, 2.0), np.ones(100_000), rng)
        se_m = y.std(ddof=1) / math.sqrt(y.size)
        assert abs(y.mean() - 1.0) < 3.0 * se_m
        c = (y - 1.0) ** 2
        se_v = c.std(ddof=1) / math.sqrt(c.size)
        assert abs(y.var(ddof=1) - 1.0) < 3.0 * se_v

    def test_sign_flip_probabilities(self):
        # from x=0.5 at s=1 to t=2 with kappa=1: +1 w.p. 0.75, -1 w.p. 0.25
        ref = SignFlipMartingale(1.0)
        rng = np.random.default_rng(11)
        y = ref.sample_transition(np.ones(N), np.full(N, 2.0), np.full(N, 0.5), rng)
        assert set(np.round(np.unique(y), 12)) == {-1.0, 1.0}
        frac = np.mean(y > 0)
        se = math.sqrt(0.75 * 0.25 / N)
        assert abs(frac - 0.75) < 3.0 * se

    def test_squared_bessel_conditional_mean(self):
        ref = SquaredBesselMartingale(2.0)
        rng = np.random.default_rng(12)
        y = ref.sample_transition(np.ones(100_000), np.full(100_000, 2.0), np.full(100_000, 0.3), rng)
        se = y.std(ddof=1) / math.sqrt(y.size)
        assert abs(y.mean() - 0.3) < 3.0 * se

    def test_time_and_state_domain_errors(self):
        ref = SquaredBesselMartingale(2.0)
        rng = np.random.default_rng(13)
        with pytest.raises(ValueError):
            ref.sample_transition(0.0, 1.0, 0.0, rng)
        with pytest.raises(ValueError):
            ref.sample_transition(2.0, 1.0, 0.0, rng)
        with pytest.raises(ValueError):
            ref.sample_transition(1.0, 2.0, -2.5, rng)  # below -delta*s


class TestPathSampling:
    def test_empty_times(self):
        assert GaussianMartingale(0.0).sample_at_times([], np.random.default_rng(0)).size == 0

    @pytest.mark.parametrize("ref", all_variants(), ids=lambda r: f"{r.variant}")
    def test_equal_times_equal_values(self, ref):
        path = ref.sample_at_times([1.0, 1.0, 2.0], np.random.default_rng(1))
        assert path[0] == path[1]

    def test_non_monotone_rejected(self):
        with pytest.raises(ValueError):
            GaussianMartingale(0.0).sample_at_times([1.0, 0.5], np.random.default_rng(0))

    def test_chaining_reproduces_marginal(self):
        # terminal value of a chained path must have the marginal law
        ref = GaussianMartingale(0.0)
        rng = np.random.default_rng(2)
        times = np.geomspace(0.5, 4.0, 6)
        terminal = np.array([ref.sample_at_times(times, rng)[-1] for _ in range(10_000)])
        fresh = ref.sample_marginal(4.0, rng, size=10_000)
        _, p = ks_two_sample(terminal, fresh)
        assert p > 0.01

    def test_sign_flip_magnitude_exact(self):
        ref = SignFlipMartingale(0.7)
        rng = np.random.default_rng(3)
        times = np.array([0.5, 1.3, 2.0, 2.0, 3.7])
        path = ref.sample_at_times(times, rng)
        assert np.all(np.abs(path) == times ** 0.7)


class TestSelfSimilarityAndMartingale:
    @pytest.mark.parametrize("ref", all_variants(), ids=lambda r: f"{r.variant}-k{r.kappa:.2f}")
    def test_scaling_of_marginals(self, ref):
        rng = np.random.default_rng(20)
        a = np.asarray(ref.sample_marginal(2.0, rng, size=10_000))
        b = 2.0 ** ref.kappa * np.asarray(ref.sample_marginal(1.0, rng, size=10_000))
        _, p = ks_two_sample(a, b)
        assert p > 0.01

    @pytest.mark.parametrize(
        "ref", [GaussianMartingale(0.0), GaussianMartingale(1.0), SquaredBesselMartingale(2.0), SignFlipMartingale(1.0)],
        ids=["gaussian-k0", "gaussian-k1", "besq", "sign-flip"],
    )
    def test_martingale_regression(self, ref):
        report = martingale_slope_test(two_time_ensemble(ref, 1.0, 2.0, 100_000, 21), 0, 1)
        assert report.passed, report.details

    def test_martingale_regression_stable_trimmed(self):
        # infinite variance: trimmed moments instead of plain OLS bands
        ref = StableMartingale(1.5)
        report = martingale_slope_test(two_time_ensemble(ref, 1.0, 2.0, 100_000, 22), 0, 1, trim=1e-3)
        assert report.passed, report.details

    def test_gaussian_covariance_value(self):
        # Cov(Z_t, Z_{t+u}) = t^(2k+1)/(2k+1): variance at the earlier time
        ref = GaussianMartingale(1.0)
        ens = two_time_ensemble(ref, 1.0, 2.0, 100_000, 23)
        prod = ens.values[:, 0] * ens.values[:, 1]
        se = prod.std(ddof=1) / math.sqrt(prod.size)
        assert abs(prod.mean() - 1.0 / 3.0) < 3.0 * se


class TestConfigRoundtrip:
    @pytest.mark.parametrize("ref", all_variants(), ids=lambda r: f"{r.variant}-{r.kappa:.2f}")
    def test_roundtrip(self, ref):
        clone = reference_from_config(ref.to_config())
        assert clone.variant == ref.variant
        assert clone.kappa == ref.kappa

    def test_stable_levy_measure_keys(self):
        ref = reference_from_config({"variant": "stable", "alpha": 1.5, "A": 1.0, "B": 1.0})
        assert ref.skew == 0.0

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            reference_from_config({"variant": "ornstein"})
