"""Resonance-line spectrum of the transfer function as complex poles.

Poles of S are the roots of 1 - iF(nu) = 0.  Clearing denominators turns
this into a degree 2N+1 polynomial: the 2N absorber-dressed lines plus one
cavity-induced root near -i kappa/2.  Lines are tracked against a swept
coupling and the coupling where the count of distinct line positions drops
(two lines merging on the imaginary axis) is located by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .config import MemoryConfig, symmetric_config
from .errors import (BranchMatchingAmbiguous, DegenerateDetunings,
                     NoTransitionInBracket, RootFindingStalled)

# two interior positions closer than this count as one observed line
MERGE_TOL = 1e-4


def pole_polynomial(config: MemoryConfig) -> np.ndarray:
    """Ascending coefficients of P(nu) = (1 - iF(nu)) prod_n (d_n - nu).

    P has degree 2N+1; its roots away from the bare lines {d_n} are exactly
    the poles of the transfer function.
    """
    d = config.detunings - 1j * config.losses
    if len(np.unique(np.round(d, 12))) != len(d):
        raise DegenerateDetunings("two absorbers share the same complex detuning")
    g = config.linewidths
    A = np.array([1.0 + 0j])
    for dn in d:
        A = np.convolve(A, np.array([dn, -1.0]))      # ascending (d - nu)
    B = np.convolve(A, np.array([0.0, 2.0 / config.kappa]))
    for i in range(len(d)):
        part = np.array([g[i] + 0j])
        for j in range(len(d)):
            if j != i:
                part = np.convolve(part, np.array([d[j], -1.0]))
        B[: len(part)] += part
    out = np.zeros(max(len(A), len(B)), dtype=complex)
    out[: len(A)] += A
    out[: len(B)] -= 1j * B
    return out


def _aberth(coeffs: np.ndarray, guesses: np.ndarray, maxiter: int = 500,
            seed: int = 0) -> np.ndarray:
    """Simultaneous (Aberth-Ehrlich) iteration with Newton polish.

    Restarts from randomly perturbed guesses (deterministic seed) if the
    iteration stalls; raises RootFindingStalled after the retry budget.
    """
    c = np.asarray(coeffs, dtype=complex)
    dc = c[1:] * np.arange(1, len(c))
    rng = np.random.default_rng(seed)
    x = np.asarray(guesses, dtype=complex).copy()
    for attempt in range(4):
        for _ in range(maxiter):
            p = np.polynomial.polynomial.polyval(x, c)
            dp = np.polynomial.polynomial.polyval(x, dc)
            newton = p / dp
            diff = x[:, None] - x[None, :]
            np.fill_diagonal(diff, np.inf)
            rep = np.sum(1.0 / diff, axis=1)
            w = newton / (1.0 - newton * rep)
            x = x - w
            if np.max(np.abs(w)) < 1e-14 * (1.0 + np.max(np.abs(x))):
                break
        # Newton polish
        for _ in range(3):
            p = np.polynomial.polynomial.polyval(x, c)
            dp = np.polynomial.polynomial.polyval(x, dc)
            x = x - p / dp
        p = np.polynomial.polynomial.polyval(x, c)
        dp = np.polynomial.polynomial.polyval(x, dc)
        resid = np.abs(p) / np.maximum(np.abs(dp), 1e-300)
        if np.max(resid) <= 1e-10 * (1.0 + np.max(np.abs(x))):
            return x
        x = np.asarray(guesses, dtype=complex) * (
            1.0 + 0.05 * (rng.standard_normal(len(x))
                          + 1j * rng.standard_normal(len(x))))
    raise RootFindingStalled("root iteration did not reach its residual target")


@dataclass(frozen=True)
class ResonanceLineSet:
    """Complex poles of S with derived positions/widths, for one config."""

    poles: np.ndarray              # all 2N+1 roots, cavity root included
    positions: np.ndarray          # real parts of the interior (non-cavity) poles
    widths: np.ndarray             # -2 Im of the interior poles
    cavity_pole: complex
    config: MemoryConfig

    def distinct_positions(self, tol: float = MERGE_TOL) -> np.ndarray:
        """Interior positions with entries closer than tol collapsed."""
        pos = np.sort(self.positions)
        out = [pos[0]]
        for p in pos[1:]:
            if p - out[-1] > tol:
                out.append(p)
        return np.asarray(out)

    def n_distinct(self, tol: float = MERGE_TOL) -> int:
        return len(self.distinct_positions(tol))


def resonance_lines(config: MemoryConfig, seed: int = 0) -> ResonanceLineSet:
    """Find all poles of S for one config.

    Initial guesses are the decoupled roots (bare lines and -i kappa/2); the
    root with the largest |Im| is classified as the cavity root and excluded
    from the interior line list.
    """
    coeffs = pole_polynomial(config)
    d = config.detunings - 1j * config.losses
    guesses = np.concatenate([d - 0.02j * (1 + np.abs(d)),
                              [-0.5j * config.kappa]])
    roots = _aberth(coeffs, guesses, seed=seed)
    icav = int(np.argmax(-roots.imag))
    interior = np.delete(roots, icav)
    order = np.argsort(interior.real)
    interior = interior[order]
    return ResonanceLineSet(poles=roots, positions=interior.real,
                            widths=-2.0 * interior.imag,
                            cavity_pole=complex(roots[icav]), config=config)


@dataclass(frozen=True)
class LineTrajectory:
    """Interior pole branches tracked along a coupling sweep."""

    g_grid: np.ndarray
    branches: np.ndarray           # (n_branches, len(g_grid)) complex
    merge_events: np.ndarray       # g values where two positions first coincide
    n_distinct: np.ndarray         # distinct-position count per g


def _match_branches(prev: np.ndarray, cur: np.ndarray, g: float) -> np.ndarray:
    """Reorder `cur` to continue the branches in `prev` (optimal assignment).

    Movement beyond half the minimum branch separation marks an ambiguous
    match, except for the closest pair itself: at a line merge those two
    branches approach each other with diverging slope, and which of the two
    continues which is immaterial to every downstream quantity.
    """
    cost = np.abs(prev[:, None] - cur[None, :])
    rows, cols = linear_sum_assignment(cost)
    moved = cost[rows, cols]
    pair_dist = np.abs(prev[:, None] - prev[None, :])
    np.fill_diagonal(pair_dist, np.inf)
    limit = 0.5 * float(pair_dist.min())
    offenders = set(np.nonzero(moved > max(limit, 10 * MERGE_TOL))[0].tolist())
    closest_pair = set(np.unravel_index(int(np.argmin(pair_dist)),
                                        pair_dist.shape))
    if offenders and not offenders.issubset(closest_pair):
        raise BranchMatchingAmbiguous(
            f"poles moved more than half the minimum branch separation at g={g}",
            g=g)
    out = np.empty_like(cur)
    out[rows] = cur[cols]
    return out


def line_trajectories(config_template: MemoryConfig, g_grid,
                      tol_merge: float = MERGE_TOL) -> LineTrajectory:
    """Track interior poles across a sweep that rescales every linewidth.

    The template's linewidth pattern is scaled so that its first
    positive-side absorber has linewidth g for each g in the grid (for an
    equal-g comb this sets every linewidth to g).
    """
    g_grid = np.asarray(g_grid, dtype=float)
    if np.any(np.diff(g_grid) <= 0):
        raise ValueError("g_grid must be strictly increasing")
    ref = config_template.positive_side()[0].g
    slices = []
    for g in g_grid:
        cfg = symmetric_config(
            [a.detuning for a in config_template.positive_side()],
            [a.g * (g / ref) for a in config_template.positive_side()],
            gamma=[a.gamma for a in config_template.positive_side()],
            kappa=config_template.kappa,
            delta_unit=config_template.delta_unit)
        slices.append(resonance_lines(cfg))
    nb = len(slices[0].positions)
    branches = np.empty((nb, len(g_grid)), dtype=complex)
    interior0 = slices[0].positions + 1j * (-0.5) * slices[0].widths
    branches[:, 0] = interior0
    for k in range(1, len(g_grid)):
        cur = slices[k].positions + 1j * (-0.5) * slices[k].widths
        branches[:, k] = _match_branches(branches[:, k - 1], cur, float(g_grid[k]))
    counts = np.array([s.n_distinct(tol_merge) for s in slices])
    events = g_grid[1:][np.diff(counts) < 0]
    return LineTrajectory(g_grid=g_grid, branches=branches,
                          merge_events=np.asarray(events),
                          n_distinct=counts)


def transition_point(config_template: MemoryConfig, bracket,
                     tol: float = 1e-6, tol_merge: float = MERGE_TOL) -> float:
    """Bisect the coupling at which the distinct-line count drops.

    `bracket` is a (g_lo, g_hi) interval whose endpoints must disagree in
    distinct-line count; the template is rescaled exactly as in
    line_trajectories.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    ref = config_template.positive_side()[0].g

    def count(g):
        cfg = symmetric_config(
            [a.detuning for a in config_template.positive_side()],
            [a.g * (g / ref) for a in config_template.positive_side()],
            gamma=[a.gamma for a in config_template.positive_side()],
            kappa=config_template.kappa,
            delta_unit=config_template.delta_unit)
        return resonance_lines(cfg).n_distinct(tol_merge)

    clo, chi = count(lo), count(hi)
    if clo == chi:
        raise NoTransitionInBracket(
            f"distinct-line count is {clo} at both ends of [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if count(mid) == clo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
