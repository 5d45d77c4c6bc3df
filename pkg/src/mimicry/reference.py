"""Reference self-similar Markov martingales with exact samplers.

Four variants are provided, each a martingale Z started at 0 that scales as
(Z_{ct}) ~ (c**kappa * Z_t):

* ``GaussianMartingale(k)``      -- Brownian motion run at speed t**(2k),
  i.e. a centred Gaussian process with variance t**(2k+1)/(2k+1); kappa = k + 1/2.
* ``SquaredBesselMartingale(delta)`` -- S_t - delta*t for a squared Bessel
  process S of dimension delta started at 0; kappa = 1.
* ``StableMartingale(alpha, ...)``   -- centred alpha-stable Levy process,
  1 < alpha < 2; kappa = 1/alpha (infinite variance).
* ``SignFlipMartingale(kappa, V)``   -- the two-point transition process whose
  marginal at t is t**kappa * V for a symmetric random variable V.

Every sampler is exact (no time discretisation): marginals, transitions and
consistent path draws on arbitrary nondecreasing positive time lists.  The
``l_apply``/``transition_poly_coeffs`` hooks expose the closed-form generator
action and the transition moments needed by the generator machinery.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import UnsupportedVariantError

_STATE_TOL = 1e-9


def _as_float_arrays(*args):
    arrs = np.broadcast_arrays(*[np.asarray(a, dtype=float) for a in args])
    return arrs


def _check_transition_times(s, t):
    if np.any(s <= 0.0):
        raise ValueError("transition start time s must be > 0")
    if np.any(t < s):
        raise ValueError("transition requires t >= s")


class ReferenceProcess:
    """Common interface: exact samplers plus generator hooks."""

    kappa: float
    theta1: float | None
    variant: str

    # -- sampling ---------------------------------------------------------

    def sample_marginal(self, t: float, rng: np.random.Generator, size=None):
        """Exact draw(s) from the law of Z_t, t >= 0."""
        raise NotImplementedError

    def sample_transition(self, s, t, x, rng: np.random.Generator):
        """Exact draw from P(s, t, x, .); broadcasts over array s, t, x."""
        raise NotImplementedError

    def sample_at_times(self, times, rng: np.random.Generator) -> np.ndarray:
        """One consistent path read at a nondecreasing list of positive times.

        Exactly equal consecutive times yield exactly equal values; the value
        at times[i] has the marginal law of Z at that time.
        """
        times = np.asarray(times, dtype=float)
        if times.size == 0:
            return np.empty(0)
        if np.any(np.diff(times) < 0.0):
            raise ValueError("times must be nondecreasing")
        if times[0] <= 0.0:
            raise ValueError("times must be strictly positive")
        return self._at_times(times, rng)

    def _at_times(self, times, rng):
        # generic sequential chaining; variants override with vectorised code
        out = np.empty(times.size)
        out[0] = self.sample_marginal(times[0], rng)
        for i in range(1, times.size):
            if times[i] == times[i - 1]:
                out[i] = out[i - 1]
            else:
                out[i] = self.sample_transition(times[i - 1], times[i], out[i - 1], rng)
        return out

    def sample_lamperti_chain(self, deltas, rng: np.random.Generator) -> np.ndarray:
        """One path of W_l = exp(-kappa*l) * Z(exp(l)) along log-time increments.

        ``deltas`` holds the nonnegative log-time steps; the returned array has
        one more entry than ``deltas``.  W is time-homogeneous Markov with the
        marginal law of Z_1 at every log-time, and its one-step transitions
        involve only exp(-kappa*dl) and (1 - exp(-dl)) factors, so the chain
        stays inside float range even for arbitrarily large subordinator
        excursions (which exp(zeta) itself does not).  A zero step copies the
        previous value exactly.
        """
        raise NotImplementedError

    # -- generator hooks ---------------------------------------------------

    def l_apply(self, t: float, x: float, f) -> float:
        """Closed-form action of the generator L_t of Z on a test function."""
        raise UnsupportedVariantError(
            f"no closed-form generator action for variant {self.variant!r}"
        )

    def transition_poly_coeffs(self, t: float, x: float, coeffs) -> np.ndarray:
        """Transition moments as a polynomial in z = exp(-kappa*u).

        Returns the coefficients (ascending in z) of E[f(Y_u)] where f is the
        polynomial with the given ascending coefficients and Y_u is drawn from
        the transition P(t*exp(-u), t, x*exp(-kappa*u), dy).  At u = 0 the
        expansion sums to f(x).
        """
        raise UnsupportedVariantError(
            f"no polynomial transition moments for variant {self.variant!r}"
        )

    def to_config(self) -> dict:
        raise NotImplementedError


class GaussianMartingale(ReferenceProcess):
    """Centred Gaussian martingale with variance function t**(2k+1)/(2k+1)."""

    variant = "gaussian"

    def __init__(self, k: float = 0.0):
        if not (k >= 0.0 and math.isfinite(k)):
            raise ValueError("k must be finite and >= 0")
        self.k = float(k)
        self.kappa = k + 0.5
        self.theta1 = 1.0 / (2.0 * k + 1.0)

    def _tau(self, t):
        # variance of Z_t
        return t ** (2.0 * self.k + 1.0) / (2.0 * self.k + 1.0)

    def sample_marginal(self, t, rng, size=None):
        if np.any(np.asarray(t) < 0.0):
            raise ValueError("t must be >= 0")
        return rng.normal(0.0, math.sqrt(self._tau(t)), size)

    def sample_transition(self, s, t, x, rng):
        s, t, x = _as_float_arrays(s, t, x)
        _check_transition_times(s, t)
        sd = np.sqrt(np.maximum(self._tau(t) - self._tau(s), 0.0))
        out = x + sd * rng.standard_normal(s.shape)
        return out if out.ndim else float(out)

    def _at_times(self, times, rng):
        var_steps = np.diff(self._tau(times), prepend=0.0)
        increments = np.sqrt(np.maximum(var_steps, 0.0)) * rng.standard_normal(times.size)
        return np.cumsum(increments)

    def sample_lamperti_chain(self, deltas, rng):
        # exact Ornstein-Uhlenbeck-type recursion
        deltas = np.asarray(deltas, dtype=float)
        kap = self.kappa
        decay = np.exp(-kap * deltas)
        sd = np.sqrt(-np.expm1(-2.0 * kap * deltas) / (2.0 * kap))
        noise = rng.standard_normal(deltas.size)
        out = np.empty(deltas.size + 1)
        w = rng.normal(0.0, math.sqrt(1.0 / (2.0 * kap)))
        out[0] = w
        for i in range(deltas.size):
            w = decay[i] * w + sd[i] * noise[i]
            out[i + 1] = w
        return out

    def l_apply(self, t, x, f):
        return 0.5 * t ** (2.0 * self.k) * f.d2(x)

    def transition_poly_coeffs(self, t, x, coeffs):
        # Y_u ~ Normal(m, v) with m = x*z and v = A*(1 - z**2), z = exp(-kappa*u)
        a = t ** (2.0 * self.kappa) / (2.0 * self.kappa)
        m = np.array([0.0, x])
        v = np.array([a, 0.0, -a])
        return _normal_poly_moments(m, v, coeffs)

    def to_config(self):
        return {"variant": "gaussian", "k": self.k}


class SquaredBesselMartingale(ReferenceProcess):
    """Z_t = S_t - delta*t for a squared Bessel process S of dimension delta, S_0 = 0."""

    variant = "squared-bessel"

    def __init__(self, delta: float):
        if not (delta >= 0.0 and math.isfinite(delta)):
            raise ValueError("delta must be finite and >= 0")
        self.delta = float(delta)
        self.kappa = 1.0
        self.theta1 = 2.0 * delta

    def sample_marginal(self, t, rng, size=None):
        if np.any(np.asarray(t) < 0.0):
            raise ValueError("t must be >= 0")
        # S_t ~ Gamma(delta/2, scale 2t) when started from 0
        return 2.0 * t * rng.standard_gamma(0.5 * self.delta, size) - self.delta * t

    def _noncentral_chi2(self, nonc, rng):
        # Poisson mixture of gammas: exact for integer and non-integer delta
        n = rng.poisson(0.5 * nonc)
        return 2.0 * rng.standard_gamma(0.5 * self.delta + n)

    def sample_transition(self, s, t, x, rng):
        s, t, x = _as_float_arrays(s, t, x)
        _check_transition_times(s, t)
        q = x + self.delta * s  # S_s, must be >= 0
        if np.any(q < -_STATE_TOL * (1.0 + np.abs(x))):
            raise ValueError("state x below -delta*s is outside the state space")
        q = np.maximum(q, 0.0)
        sigma = t - s
        nonc = np.divide(q, sigma, out=np.zeros_like(q), where=sigma > 0.0)
        chi2 = self._noncentral_chi2(nonc, rng)
        out = np.where(sigma > 0.0, sigma * chi2 - self.delta * t, x)
        return out if out.ndim else float(out)

    def sample_lamperti_chain(self, deltas, rng):
        # v = exp(-l) * S(exp(l)) >= 0 satisfies
        # v' | v ~ (1 - w) * chi2'(delta, v * w / (1 - w)),  w = exp(-dl);
        # expm1 keeps 1 - w nonzero for every positive step
        deltas = np.asarray(deltas, dtype=float)
        out = np.empty(deltas.size + 1)
        v = 2.0 * rng.standard_gamma(0.5 * self.delta)
        out[0] = v - self.delta
        for i, d in enumerate(deltas):
            if d > 0.0:
                gone = -math.expm1(-d)  # 1 - exp(-d) > 0
                v = gone * float(self._noncentral_chi2(v * (1.0 - gone) / gone, rng))
            out[i + 1] = v - self.delta
        return out

    def l_apply(self, t, x, f):
        return 2.0 * (x + self.delta * t) * f.d2(x)

    def transition_poly_coeffs(self, t, x, coeffs):
        # S = sigma * chi'2(delta, q/sigma) with sigma = t*(1-z), q = (x+delta*t)*z,
        # z = exp(-u); Y = S - delta*t.  Cumulants of S are polynomial in (sigma, q),
        # hence in z, so every moment of Y is too.
        coeffs = np.asarray(coeffs, dtype=float)
        degree = len(coeffs) - 1
        if degree > 4:
            raise ValueError("transition moments implemented for degree <= 4")
        d = self.delta
        sigma = np.array([t, -t])
        q = np.array([0.0, x + d * t])

        def pp(p, n):
            return npoly.polypow(p, n) if n else np.array([1.0])

        # cumulants of S: kap_n = 2**(n-1) (n-1)! (delta*sigma**n + n*sigma**(n-1)*q)
        kap = [None]
        for n in range(1, degree + 1):
            c = 2.0 ** (n - 1) * math.factorial(n - 1)
            kap.append(c * npoly.polyadd(d * pp(sigma, n), n * npoly.polymul(pp(sigma, n - 1), q)))
        # raw moments of S from cumulants
        ms = [np.array([1.0])]
        if degree >= 1:
            ms.append(kap[1])
        if degree >= 2:
            ms.append(npoly.polyadd(kap[2], npoly.polymul(kap[1], kap[1])))
        if degree >= 3:
            m3 = npoly.polyadd(kap[3], 3.0 * npoly.polymul(kap[2], kap[1]))
            ms.append(npoly.polyadd(m3, pp(kap[1], 3)))
        if degree >= 4:
            m4 = npoly.polyadd(kap[4], 4.0 * npoly.polymul(kap[3], kap[1]))
            m4 = npoly.polyadd(m4, 3.0 * npoly.polymul(kap[2], kap[2]))
            m4 = npoly.polyadd(m4, 6.0 * npoly.polymul(kap[2], pp(kap[1], 2)))
            ms.append(npoly.polyadd(m4, pp(kap[1], 4)))

        shift = -d * t  # Y = S + shift
        out = np.zeros(degree + 1)
        for n, cn in enumerate(coeffs):
            if cn == 0.0:
                continue
            yn = np.zeros(1)
            for j in range(n + 1):
                term = math.comb(n, j) * shift ** (n - j) * ms[j]
                yn = npoly.polyadd(yn, term)
            out = npoly.polyadd(out, cn * yn)
        return _pad_to(out, degree + 1)

    def to_config(self):
        return {"variant": "squared-bessel", "delta": self.delta}


def _cms_stable(alpha: float, skew: float, size, rng: np.random.Generator):
    """Standard alpha-stable variates, S(alpha, skew; scale 1, loc 0) in the S1
    parametrisation, by the Chambers-Mallows-Stuck transformation (alpha != 1).

    For alpha > 1 the mean is 0.
    """
    tan_half = math.tan(0.5 * math.pi * alpha)
    b = math.atan(skew * tan_half) / alpha
    s = (1.0 + (skew * tan_half) ** 2) ** (0.5 / alpha)
    v = rng.uniform(-0.5 * np.pi, 0.5 * np.pi, size)
    w = rng.standard_exponential(size)
    np.clip(w, 1e-300, None, out=w)
    return (
        s
        * np.sin(alpha * (v + b))
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - alpha * (v + b)) / w) ** ((1.0 - alpha) / alpha)
    )


class StableMartingale(ReferenceProcess):
    """Centred strictly alpha-stable Levy process, 1 < alpha < 2.

    Parameterised by the standard (alpha, skew, scale) triple in the S1
    convention, where the characteristic exponent of Z_1 is
    -scale**alpha * |u|**alpha * (1 - i*skew*sign(u)*tan(pi*alpha/2)).
    ``from_levy_measure`` converts from a Levy density
    (A*1_{z>0} + B*1_{z<0}) |z|**-(alpha+1) dz, centred to mean zero, via the
    standard correspondence skew = (A-B)/(A+B),
    scale**alpha = -Gamma(-alpha)*cos(pi*alpha/2)*(A+B).
    """

    variant = "stable"

    def __init__(self, alpha: float, scale: float = 1.0, skew: float = 0.0):
        if not 1.0 < alpha < 2.0:
            raise ValueError("alpha must lie strictly in (1, 2)")
        if not scale > 0.0:
            raise ValueError("scale must be > 0")
        if not -1.0 <= skew <= 1.0:
            raise ValueError("skew must lie in [-1, 1]")
        self.alpha = float(alpha)
        self.scale = float(scale)
        self.skew = float(skew)
        self.kappa = 1.0 / alpha
        self.theta1 = None  # infinite second moment

    @classmethod
    def from_levy_measure(cls, alpha: float, A: float, B: float) -> "StableMartingale":
        if not (A > 0.0 and B > 0.0):
            raise ValueError("Levy density constants A, B must be > 0")
        skew = (A - B) / (A + B)
        scale = (-math.gamma(-alpha) * math.cos(0.5 * math.pi * alpha) * (A + B)) ** (
            1.0 / alpha
        )
        return cls(alpha, scale=scale, skew=skew)

    def sample_marginal(self, t, rng, size=None):
        if np.any(np.asarray(t) < 0.0):
            raise ValueError("t must be >= 0")
        n = 1 if size is None else size
        draw = self.scale * float(t) ** self.kappa * _cms_stable(self.alpha, self.skew, n, rng)
        return draw if size is not None else float(draw[0])

    def sample_transition(self, s, t, x, rng):
        s, t, x = _as_float_arrays(s, t, x)
        _check_transition_times(s, t)
        inc_scale = self.scale * (t - s) ** self.kappa
        out = x + inc_scale * _cms_stable(self.alpha, self.skew, s.shape, rng)
        return out if out.ndim else float(out)

    def _at_times(self, times, rng):
        scales = self.scale * np.diff(times, prepend=0.0) ** self.kappa
        increments = scales * _cms_stable(self.alpha, self.skew, times.size, rng)
        return np.cumsum(increments)

    def sample_lamperti_chain(self, deltas, rng):
        deltas = np.asarray(deltas, dtype=float)
        kap = self.kappa
        decay = np.exp(-kap * deltas)
        inc_scale = self.scale * (-np.expm1(-deltas)) ** kap
        noise = _cms_stable(self.alpha, self.skew, deltas.size + 1, rng)
        out = np.empty(deltas.size + 1)
        w = self.scale * noise[0]
        out[0] = w
        for i in range(deltas.size):
            w = decay[i] * w + inc_scale[i] * noise[i + 1]
            out[i + 1] = w
        return out

    def to_config(self):
        return {
            "variant": "stable",
            "alpha": self.alpha,
            "skew": self.skew,
            "scale": self.scale,
        }


class SignFlipMartingale(ReferenceProcess):
    """Markov martingale whose marginal at t is t**kappa * V, V symmetric.

    From state x at time s the process moves to +(t/s)**kappa * x with
    probability (1 + (s/t)**kappa)/2 and to -(t/s)**kappa * x otherwise, so
    |Z_t| = (t/s)**kappa * |Z_s| deterministically and only the sign is random.
    """

    variant = "sign-flip"

    V_LAWS = ("rademacher", "normal")

    def __init__(self, kappa: float, v_law: str = "rademacher"):
        if not kappa > 0.0:
            raise ValueError("kappa must be > 0")
        if v_law not in self.V_LAWS:
            raise ValueError(f"v_law must be one of {self.V_LAWS}")
        self.kappa = float(kappa)
        self.v_law = v_law
        self.theta1 = 1.0  # E[V^2] for both supported laws

    def _sample_v(self, rng, size=None):
        if self.v_law == "rademacher":
            return 2.0 * rng.integers(0, 2, size) - 1.0
        return rng.standard_normal(size)

    def sample_marginal(self, t, rng, size=None):
        if np.any(np.asarray(t) < 0.0):
            raise ValueError("t must be >= 0")
        return float(t) ** self.kappa * self._sample_v(rng, size)

    def sample_transition(self, s, t, x, rng):
        s, t, x = _as_float_arrays(s, t, x)
        _check_transition_times(s, t)
        p_keep = 0.5 * (1.0 + (s / t) ** self.kappa)
        sign = np.where(rng.uniform(size=s.shape) < p_keep, 1.0, -1.0)
        out = sign * (t / s) ** self.kappa * x
        return out if out.ndim else float(out)

    def _at_times(self, times, rng):
        # keep |value| = t**kappa * |V| exact: track the sign chain, not products
        v = float(self._sample_v(rng))
        p_keep = 0.5 * (1.0 + (times[:-1] / times[1:]) ** self.kappa)
        flips = np.where(rng.uniform(size=times.size - 1) < p_keep, 1.0, -1.0)
        signs = np.concatenate(([1.0], np.cumprod(flips)))
        return signs * times ** self.kappa * v

    def sample_lamperti_chain(self, deltas, rng):
        # w = +-V exactly; only the sign chain is random
        deltas = np.asarray(deltas, dtype=float)
        v = float(self._sample_v(rng))
        p_keep = 0.5 * (1.0 + np.exp(-self.kappa * deltas))
        flips = np.where(rng.uniform(size=deltas.size) < p_keep, 1.0, -1.0)
        signs = np.concatenate(([1.0], np.cumprod(flips)))
        return signs * v

    def l_apply(self, t, x, f):
        if t == 0.0:
            return 0.0
        return (self.kappa / t) * (x * f.d1(x) - 0.5 * f(x) + 0.5 * f(-x))

    def transition_poly_coeffs(self, t, x, coeffs):
        fx = float(npoly.polyval(x, coeffs))
        fmx = float(npoly.polyval(-x, coeffs))
        return np.array([0.5 * (fx + fmx), 0.5 * (fx - fmx)])

    def to_config(self):
        return {"variant": "sign-flip", "kappa": self.kappa, "V": self.v_law}


def _normal_poly_moments(m_poly, v_poly, coeffs) -> np.ndarray:
    """z-polynomial of E[f(Y)] for Y ~ Normal(m(z), v(z)) and polynomial f."""
    coeffs = np.asarray(coeffs, dtype=float)
    degree = len(coeffs) - 1

    def pp(p, n):
        return npoly.polypow(p, n) if n else np.array([1.0])

    out = np.zeros(max(degree + 1, 1))
    for n, cn in enumerate(coeffs):
        if cn == 0.0:
            continue
        acc = np.zeros(1)
        for j in range(0, n + 1, 2):
            dfact = math.prod(range(j - 1, 0, -2)) if j else 1  # (j-1)!!
            term = math.comb(n, j) * dfact * npoly.polymul(pp(m_poly, n - j), pp(v_poly, j // 2))
            acc = npoly.polyadd(acc, term)
        out = npoly.polyadd(out, cn * acc)
    return _pad_to(out, degree + 1)


def _pad_to(poly, n):
    poly = np.asarray(poly, dtype=float)
    if poly.size >= n:
        return poly
    return np.concatenate([poly, np.zeros(n - poly.size)])


def reference_from_config(cfg: dict) -> ReferenceProcess:
    """Build a reference process from its config-file descriptor."""
    variant = cfg.get("variant")
    if variant == "gaussian":
        return GaussianMartingale(float(cfg.get("k", 0.0)))
    if variant == "squared-bessel":
        return SquaredBesselMartingale(float(cfg["delta"]))
    if variant == "stable":
        if "A" in cfg or "B" in cfg:
            return StableMartingale.from_levy_measure(
                float(cfg["alpha"]), float(cfg["A"]), float(cfg["B"])
            )
        return StableMartingale(
            float(cfg["alpha"]),
            scale=float(cfg.get("scale", 1.0)),
            skew=float(cfg.get("skew", 0.0)),
        )
    if variant == "sign-flip":
        return SignFlipMartingale(float(cfg["kappa"]), cfg.get("V", "rademacher"))
    raise ValueError(f"unknown reference variant {variant!r}")
