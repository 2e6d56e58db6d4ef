"""Spectral matching machinery: the algebraic conditions tying the comb
parameters {g_n, detuning_n} to a constant frequency-resolved delay, their
closed-form solution for the equidistant comb, and a derivative-free
optimizer over the comb parameters.

A symmetric comb realises an ideal delay line exactly when its response
function equals tan(nu T0 / 2); expanding both sides around nu = 0 gives one
algebraic condition per Taylor order m:

    sum_{n>0} g_n / detuning_n^{2m+2}
        = (2^{2m+2} - 1) |B_{2m+2}| / (2m+2)!  *  T0^{2m+1},
    T0 = 4 sum_{n>0} g_n / detuning_n^2,

with B_k the Bernoulli numbers.  The conditions for m = 1..M cannot all be
met by finitely many absorbers, so they are minimised in the least-squares
sense over the free comb parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .config import MemoryConfig, symmetric_config
from .errors import AsymmetricConfig, DomainError, NotConverged, OutOfTable
from . import model

BERNOULLI_MAX = 64
_POLYGAMMA_LIFT = 10.0


def bernoulli(m: int) -> Fraction:
    """Exact Bernoulli number B_m for 0 <= m <= 64 (B_1 = -1/2 convention)."""
    if m < 0 or m > BERNOULLI_MAX:
        raise OutOfTable(f"Bernoulli index {m} outside [0, {BERNOULLI_MAX}]")
    return _bernoulli_all()[m]


@lru_cache(maxsize=1)
def _bernoulli_all():
    table = [Fraction(1)]
    for n in range(1, BERNOULLI_MAX + 1):
        acc = sum(Fraction(math.comb(n + 1, k)) * table[k] for k in range(n))
        table.append(-acc / (n + 1))
    return table


def bernoulli_float(m: int) -> float:
    return float(bernoulli(m))


def matching_coefficient(m: int) -> float:
    """(2^{2m+2} - 1) |B_{2m+2}| / (2m+2)!  -- the tan-series coefficient."""
    if m < 1:
        raise ValueError("order m must be >= 1")
    k = 2 * m + 2
    return float((2 ** k - 1) * abs(bernoulli(k)) / math.factorial(k))


def polygamma(m: int, x: float) -> float:
    """psi^(m)(x) for integer m >= 1, x > 0.

    Uses the downward recurrence to lift x above 10, then the asymptotic
    series with Bernoulli coefficients; relative accuracy ~1e-13 or better.
    """
    if m < 1:
        raise ValueError("order m must be >= 1")
    if not (x > 0):
        raise DomainError(f"polygamma argument must be > 0, got {x}")
    x = float(x)
    acc = 0.0
    sign = (-1) ** (m + 1)
    while x < _POLYGAMMA_LIFT:
        acc += sign * math.factorial(m) / x ** (m + 1)
        x += 1.0
    # psi^(m)(x) ~ (-1)^{m-1} [ (m-1)!/x^m + m!/(2x^{m+1})
    #              + sum_k B_{2k} (2k+m-1)! / ((2k)! x^{2k+m}) ]
    tail = math.factorial(m - 1) / x ** m + math.factorial(m) / (2.0 * x ** (m + 1))
    prev = math.inf
    for k in range(1, BERNOULLI_MAX // 2 + 1):
        term = (bernoulli_float(2 * k) * math.factorial(2 * k + m - 1)
                / math.factorial(2 * k) / x ** (2 * k + m))
        if abs(term) >= abs(prev):
            break
        tail += term
        prev = term
        if abs(term) < 1e-17 * abs(tail):
            break
    return acc + (-1) ** (m - 1) * tail


# ---------------------------------------------------------------------------
# residual system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatchingResiduals:
    """Left-hand sides of the matching conditions for one parameter set."""

    residuals: np.ndarray      # |LHS_m - coeff_m T0^{2m+1}|, m = 1..M
    signed: np.ndarray         # same without the absolute value
    t0: float                  # 4 sum g_n / detuning_n^2
    weights: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))


def default_order_count(n_pairs: int) -> int:
    """Number of matching conditions: one per Taylor order up to 4N-1,
    capped where the Bernoulli table ends (B_64, i.e. order 31)."""
    return min(4 * n_pairs - 1, BERNOULLI_MAX // 2 - 1)


def _positive_arrays(config: MemoryConfig):
    if not config.symmetric or not config.is_mirror_symmetric():
        raise AsymmetricConfig("matching conditions require a symmetric comb")
    pos = config.positive_side()
    d = np.array([a.detuning for a in pos])
    g = np.array([a.g for a in pos])
    return g, d


def residuals(config: MemoryConfig, M: int | None = None,
              weights=None) -> MatchingResiduals:
    """Evaluate the matching conditions m = 1..M for a symmetric comb.

    M defaults to 4N-1 where N is the number of absorber pairs.
    """
    g, d = _positive_arrays(config)
    N = len(g)
    if M is None:
        M = default_order_count(N)
    t0 = 4.0 * float(np.sum(g / d ** 2))
    signed = np.array([float(np.sum(g / d ** (2 * m + 2))
                             - matching_coefficient(m) * t0 ** (2 * m + 1))
                       for m in range(1, M + 1)])
    w = np.ones(M) if weights is None else np.asarray(weights, dtype=float)
    if len(w) != M:
        raise ValueError("weights length must equal M")
    return MatchingResiduals(residuals=np.abs(signed), signed=signed,
                             t0=t0, weights=w)


# ---------------------------------------------------------------------------
# closed forms for the equidistant comb
# ---------------------------------------------------------------------------

def g_critical(n_pairs: int, delta: float = 1.0) -> float:
    """Coupling that zeroes the first matching condition of the equidistant comb.

    Closed form in polygamma functions; the argument N + 1/2 makes the
    truncated sums over n = 1..N exact (verified against direct summation).
    """
    if n_pairs < 1:
        raise ValueError("need at least one absorber pair")
    x = n_pairs + 0.5
    pi2 = math.pi ** 2
    a = 1.0 - polygamma(3, x) / pi2 ** 2
    b = 1.0 - 2.0 * polygamma(1, x) / pi2
    return (delta / math.pi) * math.sqrt(a) * b ** -1.5


def t0_critical(n_pairs: int, delta: float = 1.0) -> float:
    """Recall time of the equidistant comb at its critical coupling."""
    x = n_pairs + 0.5
    b = 1.0 - 2.0 * polygamma(1, x) / math.pi ** 2
    return (2.0 * math.pi / delta) * (math.pi * g_critical(n_pairs, delta) / delta) * b


def g_continuum(delta: float = 1.0) -> float:
    """Large-N limit of the critical coupling, delta/pi."""
    return delta / math.pi


def g_critical_asymptotic(n_pairs: int, delta: float = 1.0) -> float:
    """First-order 1/N expansion (delta/pi)(1 + 3/(pi^2 N))."""
    return (delta / math.pi) * (1.0 + 3.0 / (math.pi ** 2 * n_pairs))


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OptimizationReport:
    initial_config: MemoryConfig
    final_config: MemoryConfig
    residual_history: np.ndarray     # best max-residual after each restart round
    objective_history: np.ndarray    # best objective after each restart round
    band_error: float                # max spectral error over the band, final
    converged: bool
    iterations: int                  # objective evaluations used
    objective: str


def _pack(g, d):
    return np.concatenate([np.log(g), np.log(np.diff(d))])


def _unpack(x, n_pairs, d1):
    g = np.exp(x[:n_pairs])
    d = d1 + np.concatenate([[0.0], np.cumsum(np.exp(x[n_pairs:]))])
    return g, d


def optimize(initial: MemoryConfig, M: int | None = None,
             band=(-0.6, 0.6), objective: str = "residuals",
             max_evals: int = 20000, gtol: float = 1e-10,
             band_points: int = 241, mix: float = 0.5,
             strict: bool = False) -> OptimizationReport:
    """Derivative-free descent over the symmetric comb parameters.

    Free parameters are every positive-side linewidth and every detuning
    except the innermost, which pins the frequency unit (rescaling all
    detunings and linewidths together changes no physics, so an
    unconstrained descent would run off along that direction).  Linewidths
    are optimised through their logarithms and detunings through
    log-spacings, keeping iterates positive and ordered.

    objective:
      'residuals'  - unweighted sum of squared matching conditions, m = 1..M;
      'band_error' - max |S^2 - exp(2 i nu T0)| over `band`, T0 re-derived
                     from the candidate each step;
      'mixed'      - mix * residual-sum + (1 - mix) * band error.

    A feasibility guard rejects candidates whose recall time falls below
    half the initial one (the residual objective is minimised trivially by
    an empty comb, which is not a memory).

    Deterministic: Nelder-Mead from a fixed initial simplex, restarted with
    geometrically shrinking simplexes until no further improvement.
    """
    if objective not in ("residuals", "band_error", "mixed"):
        raise ValueError(f"unknown objective {objective!r}")
    g0, d0 = _positive_arrays(initial)
    n = len(g0)
    if M is None:
        M = default_order_count(n)
    d1 = float(d0[0])
    t0_floor = 2.0 * float(np.sum(g0 / d0 ** 2))  # half of 4*sum = floor at t0/2
    nu_band = np.linspace(band[0], band[1], band_points)

    gammas0 = [a.gamma for a in initial.positive_side()]

    def build(g, d):
        return symmetric_config(d, g, gamma=gammas0, kappa=initial.kappa,
                                delta_unit=initial.delta_unit)

    def evaluate(x):
        g, d = _unpack(x, n, d1)
        t0 = 4.0 * float(np.sum(g / d ** 2))
        if t0 < t0_floor or not np.all(np.isfinite(d)):
            return math.inf
        rsum = 0.0
        if objective in ("residuals", "mixed"):
            for m in range(1, M + 1):
                r = float(np.sum(g / d ** (2 * m + 2))
                          - matching_coefficient(m) * t0 ** (2 * m + 1))
                rsum += r * r
        berr = 0.0
        if objective in ("band_error", "mixed"):
            cfg = build(g, d)
            grid = model.nudge_off_lines(cfg, nu_band)
            berr = float(np.max(model.spectral_error(cfg, grid,
                                                     model.t0_matching(cfg))))
        if objective == "residuals":
            return rsum
        if objective == "band_error":
            return berr
        return mix * rsum + (1.0 - mix) * berr

    x = _pack(g0, d0)
    fx = evaluate(x)
    if n == 1 and objective == "residuals" and M > 1:
        # one free parameter cannot balance several orders; use the exact
        # first-order condition instead of a least-squares compromise
        M = 1
        fx = evaluate(x)
    total = 0
    history_f, history_r = [fx], [residuals(initial, M).max_residual]
    step, decay, per_round = 0.8, 0.7, 4000
    k = 0
    stationary = False
    while total < max_evals:
        simplex = np.vstack([x] + [x + step * decay ** k * e
                                   for e in np.eye(len(x))])
        res = minimize(evaluate, x, method="Nelder-Mead",
                       options=dict(initial_simplex=simplex,
                                    xatol=1e-12, fatol=1e-18,
                                    maxfev=min(per_round, max_evals - total),
                                    maxiter=min(per_round, max_evals - total)))
        total += res.nfev
        # a restart round that gains less than 1e-6 relative means plateau
        improved = res.fun < fx * (1.0 - 1e-6) - 1e-300
        if res.fun <= fx:
            x, fx = res.x, res.fun
        g, d = _unpack(x, n, d1)
        history_f.append(fx)
        history_r.append(residuals(build(g, d), M).max_residual)
        k += 1
        if not improved and k > 1:
            stationary = True
            break
    g, d = _unpack(x, n, d1)
    final = build(g, d)
    berr = float(np.max(model.spectral_error(final,
                                             model.nudge_off_lines(final, nu_band),
                                             model.t0_matching(final))))
    # converged = the restarts plateaued (stationarity), not a budget stop
    converged = bool(np.isfinite(fx) and (stationary or fx < gtol))
    if strict and not converged:
        raise NotConverged(f"objective plateaued at {fx:.3e} after {total} evaluations")
    return OptimizationReport(initial_config=initial, final_config=final,
                              residual_history=np.asarray(history_r),
                              objective_history=np.asarray(history_f),
                              band_error=berr, converged=converged,
                              iterations=total, objective=objective)
