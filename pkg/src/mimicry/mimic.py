"""Mimicking constructions: time-change route, randomized-transition route.

Given a reference self-similar Markov martingale Z with exponent kappa and a
subordinator zeta, both routes below produce a process X with the marginal
laws of Z:

* time-change:  X_t = t**kappa * exp(-kappa*zeta_{a + ln t}) * Z(exp(zeta_{a + ln t}))
  for t >= exp(-a), read at finitely many grid times;
* randomized transitions: from (s, x), draw R = exp(-zeta_{ln(t/s)}) and then a
  reference transition from state (t/s)**kappa * R**kappa * x at time R*t to
  time t.

For references with stationary independent increments (Brownian motion,
stable) the one-step representation

    X_t = (t/s)**kappa * (R**kappa * X_s + s**kappa * (1-R)**kappa * xi),  xi ~ Z_1

is available as ``markov_step``.  X is a martingale iff psi(kappa) = kappa.

X_0 = 0 is a limit, not a stored sample: grids start at t_0 > 0 and the
log-anchor a defaults to -ln(t_0) + 2 so that exp(-a) < t_0.  Values at times
below exp(-a) are not produced.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import UnsupportedVariantError
from .reference import GaussianMartingale, ReferenceProcess, StableMartingale
from .subordinator import SubordinatorSpec, sample_R, sample_increments

ROUTES = ("timechange", "markov", "randomized-transition")

_BLOCK = 512  # rows per work unit; fixed so output never depends on thread count


def default_log_anchor(t_min: float) -> float:
    return -math.log(t_min) + 2.0


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing positive times plus the time-change log-anchor a."""

    times: np.ndarray
    log_anchor: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("grid needs at least one time")
        if times[0] <= 0.0 or np.any(np.diff(times) <= 0.0):
            raise ValueError("grid times must be strictly increasing and positive")
        if math.exp(-self.log_anchor) > times[0]:
            raise ValueError("log anchor too small: exp(-a) must not exceed the first grid time")

    def __len__(self):
        return self.times.size

    @classmethod
    def geometric(cls, t_min: float, t_max: float, points: int, log_anchor=None) -> "TimeGrid":
        """Grid uniform in log-time (equal subordinator increments per step)."""
        if log_anchor is None:
            log_anchor = default_log_anchor(t_min)
        return cls(np.geomspace(t_min, t_max, points), float(log_anchor))

    @classmethod
    def linear(cls, t_min: float, t_max: float, points: int, log_anchor=None) -> "TimeGrid":
        if log_anchor is None:
            log_anchor = default_log_anchor(t_min)
        return cls(np.linspace(t_min, t_max, points), float(log_anchor))

    def index_of(self, t: float) -> int:
        hits = np.flatnonzero(np.isclose(self.times, t, rtol=1e-12, atol=0.0))
        if hits.size == 0:
            raise ValueError(f"time {t} is not on the grid")
        return int(hits[0])


@dataclass(frozen=True)
class PathEnsemble:
    """N paths sampled on a common grid, with the seed that produced them."""

    grid: TimeGrid
    values: np.ndarray
    kappa: float
    seed: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[0] < 1:
            raise ValueError("values must be a 2-d array with at least one path")
        if values.shape[1] != len(self.grid):
            raise ValueError("column count must equal the grid length")
        if not np.all(np.isfinite(values)):
            raise ValueError("ensemble values must be finite")

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    def column(self, t: float) -> np.ndarray:
        """All path values at grid time t."""
        return self.values[:, self.grid.index_of(t)]


@dataclass(frozen=True)
class TimechangePath:
    """One time-change path with its internals, for structural checks."""

    x: np.ndarray        # mimic values on the grid
    zeta: np.ndarray     # subordinator values at a + ln(t_i)
    z_times: np.ndarray  # exp(zeta), the times the reference is read at
    z_values: np.ndarray


def timechange_path_parts(
    ref: ReferenceProcess, spec: SubordinatorSpec, grid: TimeGrid, rng: np.random.Generator
) -> TimechangePath:
    if spec.beta > 1.0:
        raise ValueError("time-change construction requires drift beta <= 1")
    log_times = grid.log_anchor + np.log(grid.times)
    zeta = np.cumsum(sample_increments(spec, np.diff(log_times, prepend=0.0), rng))
    # evaluate t**kappa * exp(-kappa*zeta) * Z(exp(zeta)) through the Lamperti
    # coordinate W = exp(-kappa*l) Z(exp(l)): same joint law, but the chain
    # only touches exp of *differences* of zeta, so heavy-tailed subordinator
    # excursions cannot overflow the way exp(zeta) itself can
    w = ref.sample_lamperti_chain(np.diff(zeta), rng)
    x = grid.times ** ref.kappa * w
    with np.errstate(over="ignore"):
        z_times = np.exp(zeta)  # diagnostics only; may overflow to inf
        z_values = np.exp(ref.kappa * zeta) * w
    return TimechangePath(x=x, zeta=zeta, z_times=z_times, z_values=z_values)


def timechange_path(ref, spec, grid, rng) -> np.ndarray:
    """Sample one mimic path on the grid via the subordinator time change."""
    return timechange_path_parts(ref, spec, grid, rng).x


def _require_independent_increments(ref: ReferenceProcess):
    ok = isinstance(ref, StableMartingale) or (
        isinstance(ref, GaussianMartingale) and ref.k == 0.0
    )
    if not ok:
        raise UnsupportedVariantError(
            "the one-step representation needs stationary independent increments "
            "(gaussian with k = 0, or stable); use the randomized-transition route instead"
        )


def markov_step(ref, spec, s: float, t: float, x: float, rng) -> float:
    """One step of the explicit Markov representation (gaussian k=0 / stable only)."""
    _require_independent_increments(ref)
    if not 0.0 < s <= t:
        raise ValueError("need 0 < s <= t")
    r = sample_R(spec, t / s, rng)
    xi = ref.sample_marginal(1.0, rng)
    kap = ref.kappa
    return (t / s) ** kap * (r ** kap * x + s ** kap * (1.0 - r) ** kap * xi)


def randomized_transition_sample(ref, spec, s: float, t: float, x: float, rng, size=None):
    """Draw from the randomized transition kernel started at (s, x).

    Draws R = exp(-zeta_{ln(t/s)}) and then a reference transition from state
    (t/s)**kappa * R**kappa * x at time R*t to time t.  Works for every
    reference variant.  With ``size`` set, returns that many independent draws.
    """
    if not 0.0 < s <= t:
        raise ValueError("need 0 < s <= t")
    r = sample_R(spec, t / s, rng, size=size)
    kap = ref.kappa
    x_start = (t / s) ** kap * np.asarray(r) ** kap * x
    out = ref.sample_transition(np.asarray(r) * t, t, x_start, rng)
    return out if size is not None else float(out)


def _path_markov(ref, spec, grid, rng):
    _require_independent_increments(ref)
    times = grid.times
    kap = ref.kappa
    rs = np.exp(-sample_increments(spec, np.diff(np.log(times)), rng))
    xis = np.atleast_1d(ref.sample_marginal(1.0, rng, size=max(times.size - 1, 1)))
    x = np.empty(times.size)
    x[0] = ref.sample_marginal(times[0], rng)
    for i in range(times.size - 1):
        ratio = times[i + 1] / times[i]
        x[i + 1] = ratio ** kap * (
            rs[i] ** kap * x[i] + times[i] ** kap * (1.0 - rs[i]) ** kap * xis[i]
        )
    return x


def _path_randomized(ref, spec, grid, rng):
    times = grid.times
    kap = ref.kappa
    rs = np.exp(-sample_increments(spec, np.diff(np.log(times)), rng))
    x = np.empty(times.size)
    x[0] = ref.sample_marginal(times[0], rng)
    for i in range(times.size - 1):
        ratio = times[i + 1] / times[i]
        start = ratio ** kap * rs[i] ** kap * x[i]
        x[i + 1] = ref.sample_transition(rs[i] * times[i + 1], times[i + 1], start, rng)
    return x


_PATH_FUNCS = {
    "timechange": timechange_path,
    "markov": _path_markov,
    "randomized-transition": _path_randomized,
}


def resolve_threads(threads=None) -> int:
    if threads is None:
        threads = int(os.environ.get("MIMICRY_THREADS", "1"))
    return max(1, int(threads))


def generate_ensemble(
    ref: ReferenceProcess,
    spec: SubordinatorSpec,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    route: str = "timechange",
    threads=None,
) -> PathEnsemble:
    """Sample an ensemble of mimic paths, bit-identical for fixed (seed, config).

    Path i draws from its own generator seeded by (seed, i), so the result does
    not depend on the thread count or on scheduling order.
    """
    if route not in ROUTES:
        raise ValueError(f"route must be one of {ROUTES}")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    path_func = _PATH_FUNCS[route]
    values = np.empty((n_paths, len(grid)))

    def fill_block(start: int):
        stop = min(start + _BLOCK, n_paths)
        for i in range(start, stop):
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(i,))))
            values[i] = path_func(ref, spec, grid, rng)

    starts = range(0, n_paths, _BLOCK)
    n_threads = resolve_threads(threads)
    if n_threads == 1:
        for start in starts:
            fill_block(start)
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(fill_block, starts))
    return PathEnsemble(grid=grid, values=values, kappa=ref.kappa, seed=seed)


def hermite_transform(ensemble: PathEnsemble, n: int) -> PathEnsemble:
    """Apply H_n(x, t) = t**(n/2) * h_n(x / sqrt(t)) entrywise to a Brownian mimic.

    Uses the two-term recurrence H_{j+1} = x*H_j - j*t*H_{j-1} (H_0 = 1,
    H_1 = x), so H_2 = x**2 - t, H_3 = x**3 - 3*t*x, H_4 = x**4 - 6*t*x**2 + 3*t**2.
    The result is (n/2)-self-similar.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    if abs(ensemble.kappa - 0.5) > 1e-12:
        raise ValueError("hermite transform needs an ensemble with kappa = 1/2 (gaussian k=0 mimic)")
    t = ensemble.grid.times
    x = ensemble.values
    h_prev = np.ones_like(x)
    h = x
    for j in range(1, n):
        h, h_prev = x * h - j * t * h_prev, h
    return replace(ensemble, values=h if n > 1 else x.copy(), kappa=0.5 * n)


def exp_martingale_transform(ensemble: PathEnsemble) -> PathEnsemble:
    """Entrywise exp(x - t/2); shares marginals with exp(B_t - t/2) for a Brownian mimic."""
    values = np.exp(ensemble.values - 0.5 * ensemble.grid.times)
    return replace(ensemble, values=values)


def hermite_value(x, t, n: int):
    """H_n(x, t) for scalars or arrays (same recurrence as hermite_transform)."""
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    h = x.copy()
    for j in range(1, n):
        h, h_prev = x * h - j * t * h_prev, h
    return h if h.ndim else float(h)


# -- persistence ------------------------------------------------------------


def export_csv(ensemble: PathEnsemble, path: str):
    """Write `path_id,t_1,...,t_M` header plus one row per path."""
    m = len(ensemble.grid)
    header = "path_id," + ",".join(f"t_{j + 1}" for j in range(m))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i, row in enumerate(ensemble.values):
            fh.write(str(i) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def export_binary(ensemble: PathEnsemble, basepath: str):
    """Compact dump: <basepath>.npy for the matrix, <basepath>.json sidecar."""
    np.save(basepath + ".npy", ensemble.values)
    sidecar = {
        "grid": {
            "times": [float(t) for t in ensemble.grid.times],
            "log_anchor": ensemble.grid.log_anchor,
        },
        "kappa": ensemble.kappa,
        "seed": ensemble.seed,
        "n_paths": ensemble.n_paths,
    }
    with open(basepath + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_binary(basepath: str) -> PathEnsemble:
    values = np.load(basepath + ".npy")
    with open(basepath + ".json") as fh:
        sidecar = json.load(fh)
    grid = TimeGrid(np.array(sidecar["grid"]["times"]), sidecar["grid"]["log_anchor"])
    return PathEnsemble(grid=grid, values=values, kappa=sidecar["kappa"], seed=sidecar["seed"])
