r"""Closed-form results for the linear (and general) catastrophe process family.

Linear rates lambda_n = n*lambda, mu_n = n*mu make state 0 absorbing; all
formulas below start the process at state 1.  The single computational kernel is
the relaxation function of the clock,

    relax(c, t)  = E_alpha(c t**alpha)            (inverse stable clock)
                 = tempered_relaxation(c, t)      (inverse tempered clock)
                 = exp(c t)                       (identity clock),

together with its resolvent-square partner relax2(c, t) (the inverse transform
with a squared denominator).  Means, variances, extinction and state
probabilities in all three rate regimes are series or integrals over these two
kernels; the lambda = mu cases need the n-th derivative in lambda, taken by a
spectrally convergent Cauchy-circle trapezoid since the bracket is entire in
lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.laguerre import laggauss

from . import markov as _markov
from .errors import DegenerateModelError, NonConvergenceError
from .mlfunc import (
    DEFAULT_CONTROL,
    MLArgs,
    SeriesControl,
    ml3,
    tempered_ml_survival,
    tempered_relaxation,
    tempered_relaxation2,
)

__all__ = [
    "LinearParams",
    "mean_lbdpc",
    "var_lbdpc",
    "extinction_lbdpc",
    "state_prob_lbdpc",
    "tempered_lbdpc",
    "sojourn_survival",
    "catastrophe_time_survival",
    "tempered_first_visit_moments",
    "effective_catastrophe_moments",
]

# Dispatch band for the lambda = mu formulas.  The unequal-rate series need
# O(1/gap) terms as the gap closes (their k-dependence enters only through
# gap*k), so a machine-level band would leave a ring of parameters where
# neither branch is evaluable; within this band the branch difference is
# O(gap) ~ 1e-4, below every closed-form tolerance in use.
_EQUAL_RATE_RTOL = 1e-4
# Cauchy-circle derivative extraction: radius 0.45*lambda with 128 trapezoid
# nodes keeps both the eps/rho**n roundoff amplification and the 128-mode
# aliasing error below the n ~ 16 state probabilities it serves.
_CAUCHY_NODES = 128
_CAUCHY_RADIUS = 0.45  # relative to lambda

_GL64 = laggauss(64)
_GL128 = laggauss(128)


@dataclass(frozen=True)
class LinearParams:
    """Linear-model parameters plus the clock: theta = 0 selects the inverse
    stable clock of index alpha (alpha = 1: classical), theta > 0 the inverse
    tempered one."""

    alpha: float
    theta: float
    lam: float
    mu: float
    nu: float

    def __post_init__(self):
        if self.theta == 0.0:
            if not (0.0 < self.alpha <= 1.0):
                raise ValueError("alpha must lie in (0, 1]")
        else:
            if not (0.0 < self.alpha < 1.0) or self.theta < 0.0:
                raise ValueError("tempered clock needs alpha in (0, 1) and theta > 0")
        if self.lam <= 0.0 or self.mu <= 0.0:
            raise ValueError("lam and mu must be positive")
        if self.nu < 0.0:
            raise ValueError("nu must be nonnegative")

    @property
    def equal_rates(self) -> bool:
        return abs(self.lam - self.mu) <= _EQUAL_RATE_RTOL * max(self.lam, self.mu)


def _relax(p: LinearParams, c, t: float, ctl: SeriesControl):
    if t == 0.0:
        return 1.0 + 0.0 * c if isinstance(c, complex) else 1.0
    if p.theta > 0.0:
        return tempered_relaxation(p.alpha, p.theta, c, t, ctl)
    if p.alpha == 1.0:
        return (math if not isinstance(c, complex) else np).exp(c * t)
    return ml3(MLArgs(p.alpha, 1.0, 1.0, c * t**p.alpha), ctl)


def _relax2(p: LinearParams, c, t: float, ctl: SeriesControl):
    if t == 0.0:
        return 0.0
    if p.theta > 0.0:
        return tempered_relaxation2(p.alpha, p.theta, c, t, ctl)
    if p.alpha == 1.0:
        return t * (math if not isinstance(c, complex) else np).exp(c * t)
    return t**p.alpha * ml3(MLArgs(p.alpha, p.alpha + 1.0, 2.0, c * t**p.alpha), ctl)


def mean_lbdpc(p: LinearParams, t: float, ctl: SeriesControl | None = None) -> float:
    """Mean population at time t started from one individual:
    relax(lambda - mu - nu, t), i.e. E_alpha((lambda-mu-nu) t**alpha) for the
    stable clock."""
    ctl = ctl or DEFAULT_CONTROL
    return float(np.real(_relax(p, p.lam - p.mu - p.nu, t, ctl)))


def var_lbdpc(p: LinearParams, t: float, ctl: SeriesControl | None = None) -> float:
    """Population variance at time t started from one individual.

    For lambda != mu:
        (2 lam/(lam-mu)) relax(2lam-2mu-nu) - ((lam+mu)/(lam-mu)) relax(lam-mu-nu)
        - relax(lam-mu-nu)**2;
    at lambda = mu the factorial moment collapses to 2*lam*relax2(-nu, t).
    """
    ctl = ctl or DEFAULT_CONTROL
    if t == 0.0:
        return 0.0
    mean = mean_lbdpc(p, t, ctl)
    if p.equal_rates:
        u2 = 2.0 * p.lam * float(np.real(_relax2(p, -p.nu, t, ctl)))
        var = u2 + mean - mean**2
    else:
        lam, mu, nu = p.lam, p.mu, p.nu
        e2 = float(np.real(_relax(p, 2.0 * (lam - mu) - nu, t, ctl)))
        var = (2.0 * lam / (lam - mu)) * e2 - ((lam + mu) / (lam - mu)) * mean - mean**2
    if var < -1e-9:
        raise NonConvergenceError(f"variance came out {var:.3e} < 0 beyond slack")
    return max(var, 0.0)


def _laguerre_integral(f, ctl: SeriesControl):
    """int_0^inf e^{-x} f(x) dx by 64-node Gauss-Laguerre with a node-doubling
    convergence check."""
    x64, w64 = _GL64
    x128, w128 = _GL128
    v64 = sum(w * f(x) for x, w in zip(x64, w64))
    v128 = sum(w * f(x) for x, w in zip(x128, w128))
    if abs(v128 - v64) > max(1e-8, 1e-8 * abs(v128)):
        raise NonConvergenceError(
            f"Gauss-Laguerre doubling check failed: {v64!r} vs {v128!r}"
        )
    return v128


def _geometric_series(ratio: float, term_fn, ctl: SeriesControl) -> float:
    """sum_{k>=1} ratio**k * term_fn(k) under the shared truncation policy."""
    total = 0.0
    small = 0
    pw = 1.0
    for k in range(1, ctl.max_terms + 1):
        pw *= ratio
        term = pw * term_fn(k)
        total += term
        if abs(term) <= ctl.rel_tol * max(abs(total), ctl.abs_floor):
            small += 1
            if small >= 5:
                return total
        else:
            small = 0
    raise NonConvergenceError("geometric relaxation series hit max_terms")


def extinction_lbdpc(p: LinearParams, t: float, ctl: SeriesControl | None = None) -> float:
    """Probability of sitting at state 0 at time t, started from state 1.

    Three rate regimes (the catastrophe feeds state 0 from everywhere, so this
    exceeds pure extinction of the birth-death part):

    lambda > mu:  (mu/lam) relax(-nu) - ((lam-mu)/lam) sum_k (mu/lam)^k
                  relax(-(nu+(lam-mu)k)) + [1 - relax(-nu)]
    lambda < mu:  relax(-nu) - ((mu-lam)/lam) sum_k (lam/mu)^k
                  relax(-(nu+(mu-lam)k)) + [1 - relax(-nu)]
    lambda = mu:  1 - int_0^inf e^{-x} relax(-(nu+lam x)) dx

    where [1 - relax(-nu)] is the catastrophe feed-in term nu t^a E_{a,a+1}
    written through the identity nu*ILT[1/(z(denom+nu))] = 1 - relax(-nu).
    """
    ctl = ctl or DEFAULT_CONTROL
    if t == 0.0:
        return 0.0
    lam, mu, nu = p.lam, p.mu, p.nu
    e_nu = float(np.real(_relax(p, -nu, t, ctl)))
    if p.equal_rates:
        val = 1.0 - _laguerre_integral(
            lambda x: float(np.real(_relax(p, -(nu + lam * x), t, ctl))), ctl
        )
    elif lam > mu:
        s = _geometric_series(
            mu / lam,
            lambda k: float(np.real(_relax(p, -(nu + (lam - mu) * k), t, ctl))),
            ctl,
        )
        val = (mu / lam) * e_nu - ((lam - mu) / lam) * s + (1.0 - e_nu)
    else:
        s = _geometric_series(
            lam / mu,
            lambda k: float(np.real(_relax(p, -(nu + (mu - lam) * k), t, ctl))),
            ctl,
        )
        val = e_nu - ((mu - lam) / lam) * s + (1.0 - e_nu)
    if val < -1e-9 or val > 1.0 + 1e-9:
        raise NonConvergenceError(f"extinction probability {val!r} outside [0,1] beyond slack")
    return min(max(val, 0.0), 1.0)


def _state_series_unequal(p: LinearParams, n: int, t: float, ctl: SeriesControl) -> float:
    """Double series for p_{1,n}(t), lambda != mu."""
    lam, mu, nu = p.lam, p.mu, p.nu
    if lam > mu:
        ratio, gap, pref = mu / lam, lam - mu, ((lam - mu) / lam) ** 2
    else:
        ratio, gap = lam / mu, mu - lam
        pref = (lam / mu) ** (n - 1) * ((mu - lam) / mu) ** 2
    binom_r = [math.comb(n - 1, r) * (-1.0) ** r for r in range(n)]
    total = 0.0
    small = 0
    pw = 1.0
    for k in range(ctl.max_terms):
        inner = math.fsum(
            binom_r[r] * float(np.real(_relax(p, -(nu + gap * (k + r + 1)), t, ctl)))
            for r in range(n)
        )
        term = math.comb(k + n, k) * pw * inner
        total += term
        if abs(term) <= ctl.rel_tol * max(abs(total), ctl.abs_floor):
            small += 1
            if small >= 5:
                return pref * total
        else:
            small = 0
        pw *= ratio
    raise NonConvergenceError("state-probability series hit max_terms")


def _equal_rate_bracket(p: LinearParams, w: complex, t: float, ctl: SeriesControl):
    """lambda = mu bracket as a function of the complex rate w:

        w * int_0^inf e^{-x} relax(-(nu + w x), t) dx,

    entire in w; its n-th derivative at w = lambda gives the state probability.

    Stable clock: Gauss-Laguerre over the Mittag-Leffler kernel (the complex
    arguments stay near the negative axis, where the asymptotic branch holds).
    Tempered clock: the Laguerre integral is done in the Laplace domain, where
    it collapses to an exponential integral, int_0^inf e^{-x}/(A + w x) dx =
    (1/w) e^{A/w} E_1(A/w), and one full-contour Talbot inversion returns the
    complex-w bracket directly (the resummed series cancels catastrophically
    at the large Laguerre nodes).
    """
    if p.theta == 0.0:
        x64, w64 = _GL64
        total = sum(
            wt * _relax(p, -(p.nu + w * x), t, ctl) for x, wt in zip(x64, w64)
        )
        return w * total
    from scipy.special import exp1

    from ._talbot import talbot_invert_complex

    theta, alpha, nu = p.theta, p.alpha, p.nu

    def transform(z):
        # w * int e^{-x}/(A + w x) dx = e^{A/w} E_1(A/w): the 1/w of the
        # integral cancels the bracket's w prefactor
        phi = (z + theta) ** alpha - theta**alpha
        zeta = (phi + nu) / w
        return (phi / z) * np.exp(zeta) * exp1(zeta)

    return talbot_invert_complex(transform, t)


@lru_cache(maxsize=256)
def _equal_rate_ring(p: LinearParams, t: float, ctl: SeriesControl):
    """Bracket values on the Cauchy circle, shared across derivative orders."""
    rho = _CAUCHY_RADIUS * p.lam
    phis = 2.0 * np.pi * np.arange(_CAUCHY_NODES) / _CAUCHY_NODES
    ring = p.lam + rho * np.exp(1j * phis)
    vals = np.array([_equal_rate_bracket(p, w, t, ctl) for w in ring])
    return phis, vals


def state_prob_lbdpc(
    p: LinearParams, n: int, t: float, ctl: SeriesControl | None = None
) -> float:
    """Probability of state n >= 1 at time t, started from state 1.

    For lambda != mu: the binomial double series over relax values.  For
    lambda = mu: ((-lam)**(n-1)/n!) d^n/dlam^n of the Laguerre bracket, with
    the derivative taken by the Cauchy integral on a circle of radius
    0.3*lambda (64 trapezoid nodes; spectral accuracy for entire integrands).

    The inner alternating binomial sum loses ~C(n-1, (n-1)//2) * eps absolute
    accuracy, so for lambda > mu the series is reliable up to n ~ 25 and raises
    :class:`NonConvergenceError` once the noise floor breaches the positivity
    slack; use the Markov oracle beyond that.  (For lambda < mu the
    (lam/mu)**(n-1) prefactor damps the noise along with the value.)
    """
    ctl = ctl or DEFAULT_CONTROL
    if n < 1:
        raise ValueError("state probabilities here cover n >= 1; use extinction_lbdpc for n=0")
    if t == 0.0:
        return 1.0 if n == 1 else 0.0
    if not p.equal_rates:
        val = _state_series_unequal(p, n, t, ctl)
        # the alternating binomial sum amplifies the ~1e-10 worst-case noise of
        # near-switch Mittag-Leffler values by the central binomial coefficient
        slack = max(1e-9, 1e-10 * math.comb(n - 1, (n - 1) // 2))
    else:
        rho = _CAUCHY_RADIUS * p.lam
        phis, vals = _equal_rate_ring(p, t, ctl)
        # f^(n)(lam) = n! rho^-n mean_j f(ring_j) e^{-i n phi_j}
        deriv = math.factorial(n) * np.mean(vals * np.exp(-1j * n * phis)) / rho**n
        val = float(np.real((-p.lam) ** (n - 1) / math.factorial(n) * deriv))
        # derivative extraction amplifies the ring values' quadrature error
        # (~ctl.rel_tol scale) by rho^-n
        slack = max(
            1e-9,
            2.0 * ctl.rel_tol * max(1.0, float(np.abs(vals).max())) / min(rho, 1.0) ** n,
        )
    if val < -slack or val > 1.0 + slack:
        raise NonConvergenceError(
            f"state probability {val!r} outside [0,1] beyond the n={n} noise floor {slack:.1e}"
        )
    return min(max(val, 0.0), 1.0)


def tempered_lbdpc(
    p: LinearParams,
    quantity: str,
    t: float,
    n: int | None = None,
    ctl: SeriesControl | None = None,
) -> float:
    """Tempered-clock linear-model quantities behind one dispatcher.

    ``quantity`` is one of ``extinction``, ``state_prob`` (needs n), ``mean``,
    ``variance``.  Requires theta > 0; the formulas collapse to the stable-clock
    ones as theta -> 0 (tested at 1e-5).
    """
    if p.theta <= 0.0:
        raise ValueError("tempered_lbdpc needs theta > 0; use the plain functions otherwise")
    if quantity == "extinction":
        return extinction_lbdpc(p, t, ctl)
    if quantity == "state_prob":
        if n is None:
            raise ValueError("state_prob needs n")
        return state_prob_lbdpc(p, n, t, ctl)
    if quantity == "mean":
        return mean_lbdpc(p, t, ctl)
    if quantity == "variance":
        return var_lbdpc(p, t, ctl)
    raise ValueError(f"unknown quantity {quantity!r}")


def sojourn_survival(
    spec: _markov.ModelSpec,
    tc: _markov.TimeChange,
    n: int,
    t,
    ctl: SeriesControl | None = None,
):
    """Survival function of the sojourn time in state n >= 1.

    The sojourn is Mittag-Leffler with parameters (alpha, lambda_n + mu_n + nu)
    under the stable clock, tempered Mittag-Leffler under the tempered clock,
    exponential under the identity.  Scalar or array ``t``.
    """
    if n < 1:
        raise ValueError("sojourn law applies to states n >= 1")
    rate = float(spec.birth(n) + spec.death(n) + spec.nu)
    return _holding_survival(tc, rate, t, ctl)


def catastrophe_time_survival(
    tc: _markov.TimeChange, nu: float, t, ctl: SeriesControl | None = None
):
    """Survival function of the (inter-)occurrence time of catastrophes."""
    if nu <= 0.0:
        raise ValueError("nu must be positive for a catastrophe time")
    return _holding_survival(tc, nu, t, ctl)


def _holding_survival(tc, rate, t, ctl):
    ctl = ctl or DEFAULT_CONTROL
    tt = np.asarray(t, dtype=float)
    if tc.kind == "inverse_tempered":
        out = tempered_ml_survival(tc.alpha, tc.theta, rate, tt, ctl)
    elif tc.kind == "inverse_stable" and tc.alpha < 1.0:
        out = np.empty(tt.shape)
        for idx, ti in np.ndenumerate(tt):
            out[idx] = float(np.real(ml3(MLArgs(tc.alpha, 1.0, 1.0, -rate * ti**tc.alpha), ctl)))
        out = np.clip(out, 0.0, 1.0)
    else:
        out = np.exp(-rate * tt)
    return float(out) if np.isscalar(t) or tt.ndim == 0 else out


# --- first-passage and effective-catastrophe moments (tempered clock) -----------


def _base_first_visit_lt(spec, m, w, trunc):
    """f(w) = p_{m,0}(w)/p_{0,0}(w) and d/dw f for the zero-absorbing base chain."""
    row = _markov.resolvent_column(spec, m, w, trunc)
    row0 = _markov.resolvent_column(spec, 0, w, trunc)
    drow = _markov.resolvent_derivative(spec, m, w, trunc)
    drow0 = _markov.resolvent_derivative(spec, 0, w, trunc)
    f = row[0] / row0[0]
    df = (drow[0] * row0[0] - row[0] * drow0[0]) / row0[0] ** 2
    return float(np.real(f)), float(np.real(df))


def tempered_first_visit_moments(
    spec: _markov.ModelSpec,
    theta: float,
    alpha: float,
    nu: float,
    m: int,
    trunc: _markov.Truncation = _markov.Truncation(),
) -> tuple[float, float]:
    """Mean and variance of the first visit to state 0 for the tempered clock.

        E[T] = (alpha theta**(alpha-1) / nu) (1 - f(nu))
        Var[T] = alpha(1-alpha) theta**(alpha-2)/nu * (1 - f(nu))
                 + 2 alpha^2 theta**(2alpha-2)/nu * f'(nu)
                 + alpha^2 theta**(2alpha-2)/nu^2 * (1 - f(nu)^2)

    with f the base chain's first-passage transform (zero absorbing; f' < 0, so
    the middle term subtracts).  Moments are finite only because theta > 0; the
    stable-clock first visit has infinite mean.
    """
    if not (0.0 < alpha < 1.0) or theta <= 0.0:
        raise ValueError("tempered moments need alpha in (0,1) and theta > 0")
    if nu <= 0.0:
        raise ValueError("nu must be positive")
    if float(spec.birth(0)) != 0.0:
        raise ValueError("first-visit moments require zero absorbing (lambda_0 = 0)")
    base = _markov.ModelSpec(spec.birth, spec.death, 0.0, spec.linear)
    f, df = _base_first_visit_lt(base, m, nu, trunc)
    mean = alpha * theta ** (alpha - 1.0) / nu * (1.0 - f)
    var = (
        alpha * (1.0 - alpha) * theta ** (alpha - 2.0) / nu * (1.0 - f)
        + 2.0 * alpha**2 * theta ** (2.0 * alpha - 2.0) / nu * df
        + alpha**2 * theta ** (2.0 * alpha - 2.0) / nu**2 * (1.0 - f**2)
    )
    if var < -1e-9:
        raise NonConvergenceError(f"first-visit variance {var:.3e} < 0 beyond slack")
    return mean, max(var, 0.0)


def effective_catastrophe_moments(
    spec: _markov.ModelSpec,
    theta: float,
    alpha: float,
    nu: float,
    m: int,
    trunc: _markov.Truncation = _markov.Truncation(),
) -> tuple[float, float]:
    """Mean and variance of the first effective catastrophe (tempered clock).

        E[K] = alpha theta**(alpha-1) (1/nu + A),   A = p_{m,0}(nu)/(1 - nu p_{0,0}(nu))
        Var[K] = alpha(1-alpha) theta**(alpha-2) (1/nu + A)
                 + alpha^2 theta**(2alpha-2)/nu^2 * (1 - (nu A)^2
                   - 2 nu^2 p'_{m,0}(nu)/(1 - nu p_{0,0}(nu))
                   - 2 nu^3 p_{m,0}(nu) p'_{0,0}(nu)/(1 - nu p_{0,0}(nu))^2)

    with p the catastrophe-free resolvent.  Needs lambda_0 > 0: an absorbing
    zero makes p_{0,0}(nu) = 1/nu and the denominator vanishes.
    """
    if not (0.0 < alpha < 1.0) or theta <= 0.0:
        raise ValueError("tempered moments need alpha in (0,1) and theta > 0")
    if nu <= 0.0:
        raise ValueError("nu must be positive")
    if float(spec.birth(0)) <= 0.0:
        raise DegenerateModelError(
            "effective-catastrophe moments need lambda_0 > 0 "
            "(p00(nu) = 1/nu makes 1 - nu*p00 vanish)"
        )
    base = _markov.ModelSpec(spec.birth, spec.death, 0.0, spec.linear)
    pm = float(np.real(_markov.resolvent_column(base, m, nu, trunc)[0]))
    p0 = float(np.real(_markov.resolvent_column(base, 0, nu, trunc)[0]))
    dpm = float(np.real(_markov.resolvent_derivative(base, m, nu, trunc)[0]))
    dp0 = float(np.real(_markov.resolvent_derivative(base, 0, nu, trunc)[0]))
    denom = 1.0 - nu * p0
    if abs(denom) < 1e-12:
        raise DegenerateModelError("1 - nu*p00(nu) vanished; effective catastrophe degenerate")
    A = pm / denom
    mean = alpha * theta ** (alpha - 1.0) * (1.0 / nu + A)
    bracket = (
        1.0
        - (nu * A) ** 2
        - 2.0 * nu**2 * dpm / denom
        - 2.0 * nu**3 * pm * dp0 / denom**2
    )
    var = (
        alpha * (1.0 - alpha) * theta ** (alpha - 2.0) * (1.0 / nu + A)
        + alpha**2 * theta ** (2.0 * alpha - 2.0) / nu**2 * bracket
    )
    if var < -1e-9:
        raise NonConvergenceError(f"effective-catastrophe variance {var:.3e} < 0 beyond slack")
    return mean, max(var, 0.0)
