"""
Beyond Markov marginals: the Hermite trick and its limit
========================================================

The cubic Hermite martingale H_3(B_t, t) = B_t^3 - 3 t B_t is not Markov, so
it cannot be mimicked directly.  The workaround: mimic Brownian motion itself
with the martingale condition moved to psi(3/2) = 3/2, then apply H_3.  The
transformed process keeps the H_3(B_t, t) marginals and the tilted
calibration makes it a martingale; calibrating at psi(1/2) = 1/2 instead
leaves the marginals intact but the conditional mean scales by
(t/s)**(3/2 - psi(3/2)) and the slope test rejects.

The same trick cannot rescue the exponential martingale exp(B_t - t/2): only
one point of psi can be pinned to the identity, and the exponential needs all
of them at once.  Its mimic has the right marginals but is never a martingale
(unless the subordinator is the trivial drift).
"""

import numpy as np

from mimicry import (
    GaussianMartingale,
    SubordinatorSpec,
    TimeGrid,
    calibrate,
    exp_martingale_transform,
    generate_ensemble,
    hermite_transform,
    ks_two_sample,
    laplace_exponent,
    marginal_match_test,
    martingale_slope_test,
)

ref = GaussianMartingale(0.0)
grid = TimeGrid.geometric(1.0, 2.0, 2)
template = SubordinatorSpec("poisson", params={"rate": 1.0})

###############################################################################
# Hermite n = 3: calibrate at 3/2 -> martingale; calibrate at 1/2 -> not.

for target, label in ((1.5, "psi(3/2) = 3/2"), (0.5, "psi(1/2) = 1/2")):
    spec = calibrate(template, target)
    raw = generate_ensemble(ref, spec, grid, 100_000, seed=21)
    h3 = hermite_transform(raw, 3)
    report = martingale_slope_test(h3, 0, 1)
    predicted = 2.0 ** (1.5 - laplace_exponent(spec, 1.5))
    print(
        f"H3 with {label}: {report.verdict:6s} slope {report.statistic:.4f} "
        f"(theory {predicted:.4f})"
    )

###############################################################################
# Exponential: marginals of exp(B_t - t/2) are reproduced...

spec = calibrate(template, 0.5)
exp_ens = exp_martingale_transform(generate_ensemble(ref, spec, grid, 100_000, seed=22))
marginal = marginal_match_test(
    exp_ens, ref, [1.0, 2.0], seed=23,
    transform=lambda values, t: np.exp(np.asarray(values) - 0.5 * t),
)
print("\nexp(X_t - t/2) marginal match:", marginal.verdict)

###############################################################################
# ... but the martingale property is irrecoverably lost.

report = martingale_slope_test(exp_ens, 0, 1)
print("exp(X_t - t/2) martingale test:", report.verdict, " slope", round(report.statistic, 4))

rng = np.random.default_rng(24)
bench = np.exp(rng.standard_normal(100_000) * np.sqrt(2.0) - 1.0)
d, p = ks_two_sample(exp_ens.column(2.0), bench)
print("KS against fresh exp(B_2 - 1) draws: p =", round(p, 3))
