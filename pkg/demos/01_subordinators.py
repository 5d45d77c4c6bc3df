"""
Subordinators and their scale randomisers
=========================================

Everything in this package is driven by a subordinator: a nondecreasing Levy
process zeta with drift beta and one of four jump families.  This script walks
through the Laplace exponent psi, the martingale calibration psi(kappa) =
kappa, and the multiplicative randomisers R_u = exp(-zeta(ln u)).
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mimicry import SubordinatorSpec, calibrate, ks_two_sample, laplace_exponent, sample_R

OUT = "demos/output"

###############################################################################
# The four jump families (plus pure drift).  Parameters are placeholders; the
# interesting ones come out of calibration below.

templates = {
    "poisson": SubordinatorSpec("poisson", params={"rate": 1.0}),
    "compound-poisson-exponential": SubordinatorSpec(
        "compound-poisson-exponential", params={"rate": 1.0, "theta": 1.0}
    ),
    "gamma": SubordinatorSpec("gamma", params={"c": 1.0, "theta": 1.0}),
    "stable-subordinator": SubordinatorSpec("stable-subordinator", params={"alpha": 0.5, "c": 1.0}),
}

###############################################################################
# Calibration: the mimic of a kappa-self-similar martingale is itself a
# martingale exactly when psi(kappa) = kappa.  One rate/scale parameter is
# solved per family; for the Poisson family the closed form is
# rate = kappa / (1 - exp(-kappa)).

kappa = 0.5
calibrated = {name: calibrate(spec, kappa) for name, spec in templates.items()}
for name, spec in calibrated.items():
    print(f"{name:30s} params={spec.params}  psi(kappa)={laplace_exponent(spec, kappa):.15f}")

###############################################################################
# The calibrated exponents all cross the identity exactly at kappa, and only
# there (psi is strictly concave).

lams = np.linspace(0.0, 3.0, 200)
fig, ax = plt.subplots(figsize=(6, 4))
for name, spec in calibrated.items():
    ax.plot(lams, laplace_exponent(spec, lams), label=name)
ax.plot(lams, lams, "k--", lw=1, label="identity")
ax.scatter([kappa], [kappa], zorder=5, color="k")
ax.set_xlabel("lambda")
ax.set_ylabel("psi(lambda)")
ax.legend(fontsize=8)
fig.savefig(f"{OUT}/01_laplace_exponents.svg")
print(f"wrote {OUT}/01_laplace_exponents.svg")

###############################################################################
# Randomisers: R(u) = exp(-zeta(ln u)) lives in (0, 1] and is multiplicative,
# R(u) * R'(v) ~ R(u v) for independent draws.  A two-sample KS test confirms
# the semigroup property; the calibrated moment E[R(u)^kappa] = u^(-kappa) is
# what makes the mimic a martingale.

rng = np.random.default_rng(1)
for name, spec in calibrated.items():
    prod = sample_R(spec, 2.0, rng, size=10_000) * sample_R(spec, 2.0, rng, size=10_000)
    direct = sample_R(spec, 4.0, rng, size=10_000)
    d, p = ks_two_sample(prod, direct)
    moment = np.mean(sample_R(spec, 2.0, rng, size=100_000) ** kappa)
    print(
        f"{name:30s} KS(R(2)R'(2), R(4)) p={p:.3f}   "
        f"E[R(2)^kappa]={moment:.4f} vs 2^-kappa={2.0**-kappa:.4f}"
    )
