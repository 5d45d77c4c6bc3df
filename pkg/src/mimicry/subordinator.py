"""Subordinators: Laplace exponents, calibration, and increment sampling.

A subordinator ``zeta`` is a nondecreasing Levy process, parameterised here by
a drift ``beta >= 0`` plus one jump family from a small menu.  Its Laplace
exponent

    psi(lam) = beta * lam + integral_0^inf (1 - exp(-lam * u)) nu(du)

determines everything the constructions downstream need: the law of the
increments ``zeta(delta)`` and the multiplicative scale randomisers
``R_u = exp(-zeta(ln u))`` taking values in ``(0, 1]``.

Supported jump families (all parameters strictly positive):

* ``drift-only``                  -- nu = 0, psi(lam) = beta * lam
* ``poisson``                     -- unit jumps at rate ``rate``
* ``compound-poisson-exponential``-- rate ``rate``, Exp(theta) jumps (mean 1/theta)
* ``gamma``                       -- shape rate ``c``, inverse scale ``theta``
* ``stable-subordinator``         -- index ``alpha`` in (0,1), scale ``c``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CalibrationError

DRIFT_ONLY = "drift-only"
POISSON = "poisson"
COMPOUND_POISSON = "compound-poisson-exponential"
GAMMA = "gamma"
STABLE = "stable-subordinator"

FAMILIES = (DRIFT_ONLY, POISSON, COMPOUND_POISSON, GAMMA, STABLE)

PARAM_NAMES = {
    DRIFT_ONLY: (),
    POISSON: ("rate",),
    COMPOUND_POISSON: ("rate", "theta"),
    GAMMA: ("c", "theta"),
    STABLE: ("alpha", "c"),
}

# parameter the exponent is linear in, used as default calibration target
_DEFAULT_FREE = {
    DRIFT_ONLY: "beta",
    POISSON: "rate",
    COMPOUND_POISSON: "rate",
    GAMMA: "c",
    STABLE: "c",
}

CALIBRATION_TOL = 1e-12


@dataclass(frozen=True)
class SubordinatorSpec:
    """Immutable description of a subordinator (drift + jump family).

    ``calibrated_kappa`` records the exponent kappa for which psi(kappa) = kappa
    was solved, if any; it is metadata only and does not affect sampling.
    """

    family: str
    beta: float = 0.0
    params: dict = field(default_factory=dict)
    calibrated_kappa: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown subordinator family {self.family!r}")
        if not (self.beta >= 0.0 and math.isfinite(self.beta)):
            raise ValueError(f"drift beta must be finite and >= 0, got {self.beta}")
        expected = PARAM_NAMES[self.family]
        if set(self.params) != set(expected):
            raise ValueError(
                f"family {self.family!r} takes params {expected}, got {tuple(self.params)}"
            )
        for name, value in self.params.items():
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"param {name!r} must be finite and > 0, got {value}")
        if self.family == STABLE and not 0.0 < self.params["alpha"] < 1.0:
            raise ValueError("stable-subordinator index alpha must lie strictly in (0, 1)")

    def psi(self, lam):
        return laplace_exponent(self, lam)

    def to_config(self) -> dict:
        cfg = {"family": self.family, "beta": self.beta, "params": dict(self.params)}
        if self.calibrated_kappa is not None:
            cfg["calibrated_kappa"] = self.calibrated_kappa
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "SubordinatorSpec":
        spec = cls(
            family=cfg["family"],
            beta=float(cfg.get("beta", 0.0)),
            params={k: float(v) for k, v in cfg.get("params", {}).items()},
        )
        kappa = cfg.get("calibrated_kappa")
        if kappa is not None:
            factor = float(cfg.get("calibration_factor", 1.0))
            spec = calibrate(spec, float(kappa), target=factor * float(kappa))
        return spec


def jump_exponent(spec: SubordinatorSpec, lam):
    """Jump part of the Laplace exponent, integral(1 - exp(-lam*u)) nu(du).

    Vectorised over ``lam``; finite for every supported family, including the
    infinite-activity gamma and stable ones.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0.0):
        raise ValueError("lambda must be >= 0")
    p = spec.params
    if spec.family == DRIFT_ONLY:
        out = np.zeros_like(lam)
    elif spec.family == POISSON:
        out = p["rate"] * -np.expm1(-lam)
    elif spec.family == COMPOUND_POISSON:
        out = p["rate"] * lam / (lam + p["theta"])
    elif spec.family == GAMMA:
        out = p["c"] * np.log1p(lam / p["theta"])
    else:  # STABLE
        out = p["c"] * lam ** p["alpha"]
    return out if out.ndim else float(out)


def laplace_exponent(spec: SubordinatorSpec, lam):
    """Evaluate psi(lam) = beta*lam + jump part.  Requires lam >= 0."""
    lam_arr = np.asarray(lam, dtype=float)
    out = spec.beta * lam_arr + jump_exponent(spec, lam_arr)
    return out if out.ndim else float(out)


def _kanter_positive_stable(alpha: float, size, rng: np.random.Generator):
    """One-sided alpha-stable variates with Laplace transform exp(-lam**alpha).

    Chambers-Mallows-Stuck transformation specialised to skew-1 laws with
    index in (0, 1): exact and rejection-free.
    """
    u = rng.uniform(0.0, np.pi, size)
    np.clip(u, 1e-300, None, out=u)
    e = rng.standard_exponential(size)
    return (
        np.sin(alpha * u)
        / np.sin(u) ** (1.0 / alpha)
        * (np.sin((1.0 - alpha) * u) / e) ** ((1.0 - alpha) / alpha)
    )


def sample_increments(spec: SubordinatorSpec, deltas, rng: np.random.Generator):
    """Draw independent increments zeta(delta_i), one per entry of ``deltas``.

    Each increment is >= beta*delta_i, and an increment over delta = 0 is
    exactly 0.  The entries are mutually independent draws, not a path; the
    cumulative sums form a nondecreasing subordinator path.
    """
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas < 0.0):
        raise ValueError("increment lengths must be >= 0")
    out = spec.beta * deltas
    p = spec.params
    if spec.family == DRIFT_ONLY:
        pass
    elif spec.family == POISSON:
        out = out + rng.poisson(p["rate"] * deltas)
    elif spec.family == COMPOUND_POISSON:
        counts = rng.poisson(p["rate"] * deltas)
        out = out + rng.standard_gamma(counts) / p["theta"]
    elif spec.family == GAMMA:
        out = out + rng.standard_gamma(p["c"] * deltas) / p["theta"]
    else:  # STABLE
        jumps = np.zeros_like(deltas)
        positive = deltas > 0.0
        n_pos = int(np.count_nonzero(positive))
        if n_pos:
            scale = (p["c"] * deltas[positive]) ** (1.0 / p["alpha"])
            jumps[positive] = scale * _kanter_positive_stable(p["alpha"], n_pos, rng)
        out = out + jumps
    return out


def sample_R(spec: SubordinatorSpec, u: float, rng: np.random.Generator, size=None):
    """Draw the scale randomiser R = exp(-zeta(ln u)) in (0, 1] for u >= 1.

    Independent draws R(u), R'(v) satisfy R(u) * R'(v) ~ R(u*v); at u = 1 the
    law is the point mass at 1.  Heavy-tailed increments (stable family) can
    push exp(-zeta) below the float range; such draws are clamped to the
    smallest positive normal so that R stays strictly positive.
    """
    if not u >= 1.0:
        raise ValueError(f"scale ratio u must be >= 1, got {u}")
    n = 1 if size is None else size
    inc = sample_increments(spec, np.full(n, math.log(u)), rng)
    r = np.maximum(np.exp(-inc), np.finfo(float).tiny)
    return float(r[0]) if size is None else r


def calibrate(
    template: SubordinatorSpec,
    kappa: float,
    free_param: str | None = None,
    target: float | None = None,
) -> SubordinatorSpec:
    """Solve psi(kappa) = target (default target = kappa) for one free parameter.

    The rate/scale parameters enter psi linearly and are solved in closed form;
    ``theta`` is solved by bisection on a geometrically widened bracket.  The
    returned spec satisfies |psi(kappa) - target| < 1e-12, else a
    CalibrationError is raised.  A drift beta > 1 (or, with the drift free, a
    required beta outside [0, 1]) makes a martingale calibration infeasible.
    """
    if not kappa > 0.0:
        raise ValueError("kappa must be > 0")
    if target is None:
        target = kappa
    if free_param is None:
        free_param = _DEFAULT_FREE[template.family]

    if free_param == "beta":
        beta = target / kappa
        if template.family != DRIFT_ONLY:
            beta = (target - jump_exponent(template, kappa)) / kappa
        if not 0.0 <= beta <= 1.0:
            raise CalibrationError(
                f"required drift beta {beta:.6g} outside [0, 1]; calibration infeasible"
            )
        solved = replace(template, beta=beta)
    else:
        if template.family == DRIFT_ONLY:
            raise ValueError("drift-only spec has no jump parameter to calibrate")
        if free_param not in PARAM_NAMES[template.family]:
            raise ValueError(
                f"{free_param!r} is not a parameter of family {template.family!r}"
            )
        if template.beta > 1.0:
            raise CalibrationError(
                f"drift beta {template.beta} > 1 forces psi(kappa) > kappa for "
                "every jump parameter; calibration infeasible"
            )
        needed = target - template.beta * kappa
        if needed <= 0.0:
            raise CalibrationError(
                f"drift contribution beta*kappa = {template.beta * kappa:.6g} "
                f"already reaches the target {target:.6g}; no positive jump "
                "parameter can solve the equation"
            )
        if free_param in ("rate", "c"):
            # psi_jump is linear in the rate/scale parameter
            unit = replace(template, params={**template.params, free_param: 1.0})
            value = needed / jump_exponent(unit, kappa)
            solved = replace(template, params={**template.params, free_param: value})
        else:  # theta, monotone but nonlinear: bisection
            def residual(theta):
                trial = replace(template, params={**template.params, "theta": theta})
                return jump_exponent(trial, kappa) - needed

            solved_theta = _bisect_monotone(residual, template.params["theta"])
            solved = replace(template, params={**template.params, "theta": solved_theta})

    achieved = laplace_exponent(solved, kappa)
    if abs(achieved - target) >= CALIBRATION_TOL:
        raise CalibrationError(
            f"calibration residual |psi(kappa) - target| = {abs(achieved - target):.3g} "
            f"exceeds {CALIBRATION_TOL}"
        )
    kappa_meta = kappa if target == kappa else None
    return replace(solved, calibrated_kappa=kappa_meta)


def _bisect_monotone(residual, start, tol=CALIBRATION_TOL, max_iter=400):
    """Root of a continuous monotone function by bracket widening + bisection."""
    lo = hi = start
    f_start = residual(start)
    if f_start == 0.0:
        return start
    # widen geometrically until the sign changes
    for _ in range(200):
        if residual(lo) * f_start < 0.0 or residual(hi) * f_start < 0.0:
            break
        lo /= 2.0
        hi *= 2.0
    else:
        raise CalibrationError("no sign change found while widening the bracket")
    a, b = (lo, start) if residual(lo) * f_start < 0.0 else (start, hi)
    fa = residual(a)
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        fm = residual(mid)
        if abs(fm) < tol:
            return mid
        if fa * fm < 0.0:
            b = mid
        else:
            a, fa = mid, fm
    raise CalibrationError("bisection failed to reach the calibration tolerance")
