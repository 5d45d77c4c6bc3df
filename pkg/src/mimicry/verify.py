"""Statistical pass/fail checks for the mimicking constructions.

All tests operate on across-path samples at fixed grid times (independent by
construction), never on within-path samples, so the asymptotic p-values are
valid.  Marginal comparisons use the two-sample Kolmogorov-Smirnov statistic
with the asymptotic Kolmogorov p-value at effective size n_a*n_b/(n_a+n_b);
the martingale check regresses X_t on X_s across paths with
heteroskedasticity-robust confidence intervals and additionally checks the
orthogonality moments E[g(X_s)(X_t - X_s)] = 0 for g in {1, x, x^2, sign}.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .errors import TestInapplicableError
from .mimic import PathEnsemble
from .reference import ReferenceProcess

PASS = "pass"
REJECT = "reject"


@dataclass
class TestReport:
    """Outcome of one statistical check, JSON-serialisable."""

    test_name: str
    statistic: float
    p_value_or_ci: float | tuple
    n_samples: int | tuple
    verdict: str
    seed: int | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {
            "test_name": self.test_name,
            "statistic": _plain(self.statistic),
            "p_value_or_ci": _plain(self.p_value_or_ci),
            "n_samples": _plain(self.n_samples),
            "verdict": self.verdict,
            "seed": self.seed,
            "details": _plain(self.details),
        }


def _plain(obj):
    """Recursively convert numpy scalars/arrays into builtin types."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def ks_two_sample(a, b, atom_rtol: float = 1e-9) -> tuple[float, float]:
    """Two-sample KS statistic D = sup|F_a - F_b| and its asymptotic p-value.

    The p-value comes from the Kolmogorov distribution at effective size
    n_a*n_b/(n_a+n_b).  Values from the two samples that agree to within
    ``atom_rtol`` relative are treated as ties before the supremum is taken:
    discrete marginals (e.g. the sign-flip variant) reach the comparison with
    atoms that match only up to float rounding, and 1e-9 sits far above that
    noise and far below any genuine atom separation.  Continuous samples are
    unaffected.  Pass atom_rtol=0 for the raw statistic.
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    if atom_rtol > 0.0:
        a, b = _snap_close_values(a, b, atom_rtol)
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    n_eff = a.size * b.size / (a.size + b.size)
    p = float(special.kolmogorov(math.sqrt(n_eff) * d))
    return d, p


def _snap_close_values(a_sorted, b_sorted, rtol):
    """Map values of both samples to shared representatives of rtol-close groups."""
    pooled = np.sort(np.concatenate([a_sorted, b_sorted]))
    gaps = np.diff(pooled)
    tol = rtol * np.maximum(np.abs(pooled[:-1]), np.abs(pooled[1:]))
    starts = np.concatenate([[True], gaps > tol])
    reps = pooled[starts]  # sorted group minima
    snap = lambda x: reps[np.searchsorted(reps, x, side="right") - 1]
    return snap(a_sorted), snap(b_sorted)


def _trimmed(sample: np.ndarray, trim: float) -> np.ndarray:
    if trim <= 0.0:
        return sample
    lo, hi = np.quantile(sample, [trim, 1.0 - trim])
    return sample[(sample >= lo) & (sample <= hi)]


def martingale_slope_test(
    ensemble: PathEnsemble,
    s_index: int,
    t_index: int,
    alpha: float = 0.01,
    trim: float = 0.0,
) -> TestReport:
    """Across-path regression check of E[X_t | X_s] = X_s.

    Passes iff the robust CI for the slope contains 1, the CI for the
    intercept contains 0, and each orthogonality moment
    mean[g(X_s)(X_t - X_s)], g in {1, x, x^2, sign}, is within its normal
    acceptance band at level alpha.  ``trim`` (two-sided tail fraction)
    restricts the regression to paths with central X_s and trims the moment
    products; use it for infinite-variance (stable) marginals where plain OLS
    bands are unreliable.
    """
    if not 0 <= s_index < t_index < len(ensemble.grid):
        raise ValueError("need 0 <= s_index < t_index on the grid")
    xs = ensemble.values[:, s_index]
    xt = ensemble.values[:, t_index]
    if trim > 0.0:
        lo, hi = np.quantile(xs, [trim, 1.0 - trim])
        keep = (xs >= lo) & (xs <= hi)
        xs, xt = xs[keep], xt[keep]
    n = xs.size
    if n < 10:
        raise TestInapplicableError("too few paths for the regression")
    if np.var(xs) == 0.0:
        raise TestInapplicableError("degenerate X_s: zero variance regressor")

    design = np.column_stack([np.ones(n), xs])
    coef, *_ = np.linalg.lstsq(design, xt, rcond=None)
    intercept, slope = float(coef[0]), float(coef[1])
    resid = xt - design @ coef
    xtx_inv = np.linalg.inv(design.T @ design)
    meat = design.T @ (design * resid[:, None] ** 2)
    cov = xtx_inv @ meat @ xtx_inv * (n / (n - 2))  # HC1
    se_intercept, se_slope = np.sqrt(np.diag(cov))
    z_crit = float(stats.norm.ppf(1.0 - alpha / 2.0))
    slope_ci = (slope - z_crit * se_slope, slope + z_crit * se_slope)
    intercept_ci = (intercept - z_crit * se_intercept, intercept + z_crit * se_intercept)

    increments = xt - xs
    moments = {}
    moments_ok = True
    for name, g in (("1", None), ("x", xs), ("x^2", xs ** 2), ("sign", np.sign(xs))):
        prod = increments if g is None else g * increments
        prod = _trimmed(prod, trim)
        se = prod.std(ddof=1) / math.sqrt(prod.size)
        z = prod.mean() / se if se > 0.0 else 0.0
        moments[name] = {"mean": float(prod.mean()), "z": float(z)}
        moments_ok &= abs(z) <= z_crit

    ok = slope_ci[0] <= 1.0 <= slope_ci[1] and intercept_ci[0] <= 0.0 <= intercept_ci[1]
    verdict = PASS if (ok and moments_ok) else REJECT
    return TestReport(
        test_name="martingale-slope",
        statistic=slope,
        p_value_or_ci=slope_ci,
        n_samples=n,
        verdict=verdict,
        seed=ensemble.seed,
        details={
            "slope": slope,
            "slope_se": float(se_slope),
            "intercept": intercept,
            "intercept_ci": intercept_ci,
            "moments": moments,
            "alpha": alpha,
            "trim": trim,
            "s": float(ensemble.grid.times[s_index]),
            "t": float(ensemble.grid.times[t_index]),
        },
    )


def marginal_match_test(
    ensemble: PathEnsemble,
    ref: ReferenceProcess,
    times,
    alpha: float = 0.01,
    seed: int = 0,
    transform=None,
) -> TestReport:
    """Per-time KS of ensemble columns against fresh reference marginal draws.

    Bonferroni: passes iff every per-time p-value exceeds alpha / len(times).
    ``transform(values, t)``, when given, is applied to the fresh reference
    draws, for ensembles that were themselves transformed entrywise.
    """
    times = list(times)
    if not times:
        raise ValueError("at least one time is required")
    per_time = []
    worst_d = 0.0
    ok = True
    threshold = alpha / len(times)
    for j, t in enumerate(times):
        col = ensemble.column(t)  # raises if t is off the grid
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(7001, j))))
        fresh = np.asarray(ref.sample_marginal(t, rng, size=col.size), dtype=float)
        if transform is not None:
            fresh = transform(fresh, t)
        d, p = ks_two_sample(col, fresh)
        per_time.append({"t": float(t), "d": d, "p": p})
        worst_d = max(worst_d, d)
        ok &= p > threshold
    return TestReport(
        test_name="marginal-match",
        statistic=worst_d,
        p_value_or_ci=min(item["p"] for item in per_time),
        n_samples=(ensemble.n_paths, ensemble.n_paths),
        verdict=PASS if ok else REJECT,
        seed=seed,
        details={"per_time": per_time, "alpha": alpha, "bonferroni_threshold": threshold},
    )


def self_similarity_test(values_t, values_ct, c: float, kappa: float, alpha: float = 0.01) -> TestReport:
    """KS check that X_{ct} has the law of c**kappa * X_t.

    Mismatched sample sizes are reconciled by keeping the first n entries of
    the larger sample, n the smaller size.
    """
    values_t = np.asarray(values_t, dtype=float)
    values_ct = np.asarray(values_ct, dtype=float)
    n = min(values_t.size, values_ct.size)
    d, p = ks_two_sample(values_ct[:n], c ** kappa * values_t[:n])
    return TestReport(
        test_name="self-similarity",
        statistic=d,
        p_value_or_ci=p,
        n_samples=(n, n),
        verdict=PASS if p > alpha else REJECT,
        seed=None,
        details={"c": c, "kappa": kappa, "alpha": alpha},
    )


def all_pass(reports) -> bool:
    return all(r.passed for r in reports)


def write_reports_jsonl(reports, path: str):
    """One JSON object per line, key-sorted for byte reproducibility."""
    with open(path, "w") as fh:
        for report in reports:
            fh.write(json.dumps(report.to_dict(), sort_keys=True) + "\n")


def read_reports_jsonl(path: str) -> list[TestReport]:
    reports = []
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            reports.append(
                TestReport(
                    test_name=rec["test_name"],
                    statistic=rec["statistic"],
                    p_value_or_ci=tuple(rec["p_value_or_ci"])
                    if isinstance(rec["p_value_or_ci"], list)
                    else rec["p_value_or_ci"],
                    n_samples=tuple(rec["n_samples"])
                    if isinstance(rec["n_samples"], list)
                    else rec["n_samples"],
                    verdict=rec["verdict"],
                    seed=rec.get("seed"),
                    details=rec.get("details", {}),
                )
            )
    return reports


def reports_to_csv(reports, path: str):
    """Summary table: one row per report."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["test_name", "statistic", "p_value_or_ci", "n_samples", "verdict", "seed"])
        for report in reports:
            rec = report.to_dict()
            writer.writerow(
                [
                    rec["test_name"],
                    repr(rec["statistic"]),
                    json.dumps(rec["p_value_or_ci"]),
                    json.dumps(rec["n_samples"]),
                    rec["verdict"],
                    rec["seed"],
                ]
            )
