"""Frequency-domain model of the absorbers-in-cavity system.

The cavity response function

    F(nu) = 2 nu / kappa + sum_n g_n / (detuning_n - i gamma_n - nu)

and its Cayley transform S(nu) = (1 + iF)/(1 - iF) determine everything
observable here: spectral efficiency |S|^2, frequency-resolved delay,
deviation from an ideal delay line, and the recalled-pulse (echo) intensity.

S is evaluated through the cleared-denominator form

    S = (A + iB) / (A - iB),   A = prod_n (d_n - nu),   B = (2 nu/kappa) A
                                + sum_n g_n prod_{k != n} (d_k - nu)

which stays finite arbitrarily close to lossless absorber lines, where the
naive sum for F overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import InputPulse, MemoryConfig
from .errors import PoleHit, QuadratureNotConverged, UnwrapAmbiguity

# offset used when a requested grid point falls exactly on a lossless line
POLE_OFFSET = 1e-6
# floor applied to the spectral error before taking its decibel rendering
DBS_FLOOR = 1e-300


def _fraction_parts(config: MemoryConfig, nu):
    """Numerator/denominator pair (A, B) with F = B / A."""
    nu = np.asarray(nu, dtype=complex)
    d = config.detunings - 1j * config.losses
    g = config.linewidths
    A = np.ones_like(nu)
    for dn in d:
        A = A * (dn - nu)
    B = (2.0 * nu / config.kappa) * A
    for i in range(len(d)):
        part = np.full_like(nu, g[i])
        for j in range(len(d)):
            if j != i:
                part = part * (d[j] - nu)
        B = B + part
    return A, B


def _check_pole_hit(config: MemoryConfig, nu):
    nu = np.asarray(nu, dtype=float)
    scale = max(1.0, float(np.max(np.abs(config.detunings))))
    eps = 100.0 * np.finfo(float).eps * scale
    for a in config.absorbers:
        if a.gamma == 0.0 and np.any(np.abs(nu - a.detuning) < eps):
            raise PoleHit(f"frequency grid hits lossless line at {a.detuning}")


def response_fn(config: MemoryConfig, nu):
    """F(nu); purely real for lossless configs away from the lines.

    Raises PoleHit when nu lands within machine-epsilon scale of a lossless
    detuning, where F diverges.
    """
    _check_pole_hit(config, np.asarray(nu).real)
    A, B = _fraction_parts(config, nu)
    out = B / A
    return complex(out) if (np.isscalar(nu) or np.asarray(nu).ndim == 0) else out


def transfer_fn(config: MemoryConfig, nu):
    """S(nu) = (1 + iF)/(1 - iF), evaluated in cleared-denominator form."""
    _check_pole_hit(config, np.asarray(nu).real)
    A, B = _fraction_parts(config, nu)
    out = (A + 1j * B) / (A - 1j * B)
    return complex(out) if (np.isscalar(nu) or np.asarray(nu).ndim == 0) else out


def spectral_efficiency(config: MemoryConfig, nu):
    """eta(nu) = |S(nu)|^2."""
    s = transfer_fn(config, nu)
    return np.abs(s) ** 2 if isinstance(s, np.ndarray) else abs(s) ** 2


def spectral_error(config: MemoryConfig, nu, t0: float):
    """|S(nu)^2 - exp(2 i nu t0)|: deviation from an ideal delay line of delay t0."""
    s = transfer_fn(config, nu)
    nu_arr = np.asarray(nu, dtype=float)
    out = np.abs(np.asarray(s) ** 2 - np.exp(2j * nu_arr * t0))
    return float(out) if out.ndim == 0 else out


def dbs(delta_s2, floor: float = DBS_FLOOR):
    """Decibel rendering 10 log10(delta S^2), clamping underflows at `floor`.

    Returns (values, clamped) where `clamped` flags entries that hit the floor.
    """
    arr = np.atleast_1d(np.asarray(delta_s2, dtype=float))
    clamped = arr < floor
    out = 10.0 * np.log10(np.where(clamped, floor, arr))
    if np.ndim(delta_s2) == 0:
        return float(out[0]), bool(clamped[0])
    return out, clamped


def gaussian_spectrum(pulse: InputPulse, nu):
    """Real Gaussian spectral amplitude, unit L2 norm."""
    nu = np.asarray(nu, dtype=float)
    s = pulse.sigma
    out = (2.0 * math.pi * s * s) ** -0.25 * np.exp(-((nu - pulse.center) ** 2)
                                                    / (4.0 * s * s))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# delay
# ---------------------------------------------------------------------------

def t0_analytic(config: MemoryConfig) -> float:
    """Zero-frequency delay from the exact phase slope of S.

    d(arg S)/dnu = Re(2 F' / (1 + F^2)); includes the 4/kappa cavity term.
    """
    d = config.detunings - 1j * config.losses
    g = config.linewidths
    F0 = 2.0 * 0.0 / config.kappa + np.sum(g / d)
    dF0 = 2.0 / config.kappa + np.sum(g / d ** 2)
    return float(np.real(2.0 * dF0 / (1.0 + F0 ** 2)))


def t0_matching(config: MemoryConfig) -> float:
    """Broadband-limit recall time 4 sum_{n>0} g_n / detuning_n^2.

    Drops the 4/kappa cavity contribution; this is the form the matching
    conditions are written in.  `delay_diagnostic` reports the gap to the
    full phase slope.
    """
    pos = config.positive_side()
    return float(4.0 * sum(a.g / a.detuning ** 2 for a in pos))


def delay_diagnostic(config: MemoryConfig) -> dict:
    full = t0_analytic(config)
    trunc = t0_matching(config)
    return {"t0_phase_slope": full, "t0_matching": trunc,
            "cavity_term": full - trunc}


def phase_slope_fd(config: MemoryConfig, h: float = 1e-4) -> float:
    """Zero-frequency delay by Richardson-extrapolated phase differences.

    Independent of the analytic slope formula: built only from
    transfer-function values at +-h and +-h/2.
    """
    def sym(hh):
        s = transfer_fn(config, np.array([-hh, hh]))
        return float((np.angle(s[1]) - np.angle(s[0])) / (2.0 * hh))

    return (4.0 * sym(h / 2) - sym(h)) / 3.0


def unwrap_phase(s_values: np.ndarray) -> np.ndarray:
    """Cumulative phase of S along an ordered grid.

    Steps at or beyond pi alias into the principal branch and cannot be
    unwrapped at all, so the guard trips at half that limit: a grid whose
    folded phase steps reach pi/2 is too coarse to trust.
    """
    raw = np.angle(np.asarray(s_values))
    step = np.mod(np.diff(raw) + np.pi, 2.0 * np.pi) - np.pi
    if np.any(np.abs(step) >= 0.5 * np.pi):
        raise UnwrapAmbiguity("folded phase steps reach pi/2; refine the "
                              "frequency grid")
    return np.unwrap(raw)


def delay_from_values(nu_grid: np.ndarray, s_values: np.ndarray,
                      slope_at_zero: float | None = None) -> np.ndarray:
    """T(nu) = (unwrapped arg S)/nu from sampled transfer-function values.

    The unwrapped phase is re-anchored to vanish at nu = 0 (interpolated when
    0 lies inside the grid but is not a sample).  At nu = 0 itself the limit
    is `slope_at_zero` when supplied, otherwise a symmetric finite difference
    of the unwrapped phase.
    """
    nu_grid = np.asarray(nu_grid, dtype=float)
    if nu_grid.ndim != 1 or len(nu_grid) < 3:
        raise ValueError("need an ordered grid of at least 3 frequencies")
    if np.any(np.diff(nu_grid) <= 0):
        raise ValueError("frequency grid must be strictly increasing")
    phi = unwrap_phase(np.asarray(s_values))
    if nu_grid[0] <= 0.0 <= nu_grid[-1]:
        phi = phi - np.interp(0.0, nu_grid, phi)
    else:
        # grid does not straddle zero: remove whole phase turns only, keeping
        # the nearest-endpoint principal value
        i = 0 if abs(nu_grid[0]) < abs(nu_grid[-1]) else -1
        phi = phi - 2.0 * np.pi * np.round((phi[i] - np.angle(s_values[i]))
                                           / (2.0 * np.pi))
    out = np.empty_like(nu_grid)
    small = np.abs(nu_grid) < 1e-12
    out[~small] = phi[~small] / nu_grid[~small]
    if np.any(small):
        if slope_at_zero is None:
            grad = np.gradient(phi, nu_grid)
            out[small] = grad[small]
        else:
            out[small] = slope_at_zero
    return out


def delay_time(source, nu_grid: np.ndarray | None = None) -> np.ndarray:
    """Frequency-resolved delay on a grid, from a config or a SpectrumSample.

    For a MemoryConfig the transfer function is evaluated on `nu_grid` and
    the nu = 0 limit uses the analytic phase slope; for a SpectrumSample the
    stored values are reused.
    """
    if isinstance(source, SpectrumSample):
        return delay_from_values(source.nu_grid, source.s_values)
    if nu_grid is None:
        raise ValueError("nu_grid is required when passing a config")
    nu_grid = np.asarray(nu_grid, dtype=float)
    return delay_from_values(nu_grid, transfer_fn(source, nu_grid),
                             slope_at_zero=t0_analytic(source))


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def frequency_grid(config: MemoryConfig, band, points: int) -> np.ndarray:
    """Uniform grid over band = (lo, hi), nudged off exact lossless lines."""
    lo, hi = float(band[0]), float(band[1])
    if not hi > lo:
        raise ValueError("band must satisfy hi > lo")
    nu = np.linspace(lo, hi, int(points))
    for a in config.absorbers:
        if a.gamma == 0.0:
            hit = np.abs(nu - a.detuning) < POLE_OFFSET
            nu[hit] = a.detuning + POLE_OFFSET
    return nu


def nudge_off_lines(config: MemoryConfig, grid: np.ndarray) -> np.ndarray:
    """Move grid points sitting exactly on lossless lines by POLE_OFFSET."""
    grid = np.asarray(grid, dtype=float)
    for a in config.absorbers:
        if a.gamma == 0.0:
            hit = np.abs(grid - a.detuning) < POLE_OFFSET
            if np.any(hit):
                grid = grid.copy()
                grid[hit] = a.detuning + POLE_OFFSET
    return np.unique(grid)


def _cluster_grid(config: MemoryConfig, lo: float, hi: float, base: int) -> np.ndarray:
    """Base uniform grid plus geometric refinement around each absorber line."""
    pts = [np.linspace(lo, hi, base)]
    widths = 2.0 * config.linewidths + config.losses + 1e-3
    for d, w in zip(config.detunings, widths):
        if lo < d < hi:
            local = d + np.geomspace(w * 1e-3, 4.0 * w, 24)
            pts.append(local)
            pts.append(2 * d - local)  # mirror below the line
    grid = np.unique(np.concatenate(pts))
    grid = grid[(grid >= lo) & (grid <= hi)]
    return nudge_off_lines(config, grid)


def refining_integral(f, grid: np.ndarray, rtol: float = 1e-6,
                      max_doublings: int = 12, fix_grid=None):
    """Trapezoid integral of a (possibly vector-valued) integrand on a grid,
    refined by interval halving until two passes agree to rtol.

    `f` maps an array of frequencies to values with the frequency axis last;
    `fix_grid` post-processes each refined grid (used to keep points off
    lossless lines).  Raises QuadratureNotConverged when doubling stalls.
    """
    grid = np.asarray(grid, dtype=float)
    prev = None
    for level in range(max_doublings + 1):
        val = np.trapezoid(f(grid), grid, axis=-1)
        if prev is not None:
            scale = np.linalg.norm(np.atleast_1d(val))
            err = np.linalg.norm(np.atleast_1d(val - prev))
            if err <= rtol * max(scale, 1e-30):
                return val
        prev = val
        mid = 0.5 * (grid[:-1] + grid[1:])
        grid = np.sort(np.concatenate([grid, mid]))
        if fix_grid is not None:
            grid = fix_grid(grid)
    raise QuadratureNotConverged(
        f"quadrature did not converge to rtol={rtol} after {max_doublings} doublings")


def echo_intensity(config: MemoryConfig, recall_time: float, pulse: InputPulse,
                   rtol: float = 1e-6) -> float:
    """Normalised recalled intensity  |int e^{-i nu T} S f dnu|^2 / |int f dnu|^2.

    The quadrature band spans +-10 sigma around the pulse centre, widened to
    cover every absorber line, and is refined near the lines.
    """
    half = max(10.0 * pulse.sigma,
               float(np.max(np.abs(config.detunings))) + 6.0 * pulse.sigma)
    lo, hi = pulse.center - half, pulse.center + half
    grid = _cluster_grid(config, lo, hi, base=2049)

    def numerator(nu):
        return (np.exp(-1j * nu * recall_time) * transfer_fn(config, nu)
                * gaussian_spectrum(pulse, nu))

    fix = lambda gr: nudge_off_lines(config, gr)
    num = refining_integral(numerator, grid, rtol=rtol, fix_grid=fix)
    den = refining_integral(lambda nu: gaussian_spectrum(pulse, nu) + 0j,
                            grid, rtol=rtol, fix_grid=fix)
    return float(abs(num) ** 2 / abs(den) ** 2)


# ---------------------------------------------------------------------------
# sampled spectra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumSample:
    """Transfer function and derived scalars sampled on a frequency grid."""

    nu_grid: np.ndarray
    s_values: np.ndarray
    delay: np.ndarray
    efficiency: np.ndarray
    error: np.ndarray
    t0: float

    def __post_init__(self):
        if np.any(np.diff(self.nu_grid) <= 0):
            raise ValueError("nu_grid must be strictly increasing")


def sample_spectrum(config: MemoryConfig, band=(-1.0, 1.0), points: int = 2001,
                    t0: float | None = None) -> SpectrumSample:
    """Evaluate S, delay, efficiency and spectral error on a uniform grid.

    `t0` defaults to the broadband matching value of the config itself.
    """
    nu = frequency_grid(config, band, points)
    s = transfer_fn(config, nu)
    ref = t0_matching(config) if t0 is None else float(t0)
    return SpectrumSample(nu_grid=nu, s_values=s,
                          delay=delay_time(config, nu),
                          efficiency=np.abs(s) ** 2,
                          error=np.abs(s ** 2 - np.exp(2j * nu * ref)),
                          t0=ref)
