"""Time-domain oracle: integrate the coupled absorber/cavity mode equations
driven by the input pulse and produce the output field.

The system is linear with constant coefficients,

    ds_n/dt = -(i detuning_n + gamma_n) s_n - g0_n a
    da/dt   = -kappa/2 a + sum_n g0_n s_n + sqrt(kappa) a_in(t)
    a_out   = sqrt(kappa) a - a_in,

with g0_n = sqrt(g_n kappa / 2).  The default integrator is an adaptive
embedded Runge-Kutta scheme; for kappa far above the comb scale the system
is stiff and an exact eigenmode propagator takes over (the Gaussian drive
admits a closed-form response through the scaled complementary error
function, so no stepping is involved at all).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import wofz

from .config import InputPulse, MemoryConfig
from .errors import QuadratureNotConverged, StepSizeUnderflow
from . import model

# kappa (in comb units) beyond which simulate() switches to the exact propagator
STIFF_KAPPA = 1e3


def pulse_time_profile(pulse: InputPulse, t, t_center: float):
    """Analytic inverse transform of the Gaussian spectrum.

    a_in(t) = (2 sigma^2 / pi)^{1/4} exp(-sigma^2 (t - t_center)^2), carrying
    a phase factor when the spectral profile is off-centre.
    """
    t = np.asarray(t, dtype=float)
    s = pulse.sigma
    env = (2.0 * s * s / math.pi) ** 0.25 * np.exp(-s * s * (t - t_center) ** 2)
    if pulse.center != 0.0:
        env = env * np.exp(-1j * pulse.center * (t - t_center))
    return env


def default_t_center(pulse: InputPulse) -> float:
    """Pulse arrival leaving ~exp(-36) of the leading tail before t = 0."""
    return 6.0 / pulse.sigma


def _system_matrix(config: MemoryConfig) -> np.ndarray:
    d = config.detunings
    gam = config.losses
    g0 = config.bare_couplings()
    n = len(d)
    A = np.zeros((n + 1, n + 1), dtype=complex)
    for i in range(n):
        A[i, i] = -(1j * d[i] + gam[i])
        A[i, n] = -g0[i]
        A[n, i] = g0[i]
    A[n, n] = -config.kappa / 2.0
    return A


@dataclass(frozen=True)
class TimeTrace:
    """Sampled fields from one run: input, cavity, absorber modes, output."""

    t_grid: np.ndarray
    a_in: np.ndarray
    a_cavity: np.ndarray
    s_modes: np.ndarray            # shape (2N, len(t_grid))
    a_out: np.ndarray
    t_center: float
    method: str

    def energy_in(self) -> float:
        return float(np.trapezoid(np.abs(self.a_in) ** 2, self.t_grid))

    def energy_out(self) -> float:
        return float(np.trapezoid(np.abs(self.a_out) ** 2, self.t_grid))

    def stored_energy_end(self) -> float:
        """|a|^2 + sum |s_n|^2 at the final sample (ring-down residual)."""
        return float(np.abs(self.a_cavity[-1]) ** 2
                     + np.sum(np.abs(self.s_modes[:, -1]) ** 2))


def _erfcx(z):
    """Scaled complementary error function for complex arguments."""
    return wofz(1j * np.asarray(z, dtype=complex))


def _gaussian_drive_response(t, lam, sigma, tc):
    """int_0^t exp(lam (t-s)) exp(-sigma^2 (s-tc)^2) ds for Re(lam) <= 0.

    Evaluated through erfcx in a form without overflowing intermediates.
    """
    t = np.asarray(t, dtype=float)[:, None]
    lam = np.asarray(lam, dtype=complex)[None, :]
    z1 = sigma * (t - tc) + lam / (2.0 * sigma)
    z0 = -sigma * tc + lam / (2.0 * sigma)
    gauss = np.exp(-sigma ** 2 * (t - tc) ** 2)
    term1 = np.empty(np.broadcast_shapes(z1.shape, gauss.shape), dtype=complex)
    direct = (-z1).real >= 0.0
    gb = np.broadcast_to(gauss, term1.shape)
    z1b = np.broadcast_to(z1, term1.shape)
    term1[direct] = gb[direct] * _erfcx(-z1b[direct])
    if np.any(~direct):
        # reflection erfcx(-z) = 2 exp(z^2) - erfcx(z); the exponent
        # lam(t-tc) + lam^2/(4 sigma^2) is bounded above in this branch
        C = np.broadcast_to(lam * (t - tc) + lam ** 2 / (4.0 * sigma ** 2),
                            term1.shape)
        term1[~direct] = (2.0 * np.exp(C[~direct])
                          - gb[~direct] * _erfcx(z1b[~direct]))
    term0 = np.exp(lam * t - sigma ** 2 * tc ** 2) * _erfcx(-z0)
    return (math.sqrt(math.pi) / (2.0 * sigma)) * (term1 - term0)


def _simulate_exact(config, pulse, t_grid, t_center, amplitude=1.0):
    A = _system_matrix(config)
    lam, V = np.linalg.eig(A)
    amp = amplitude * (2.0 * pulse.sigma ** 2 / math.pi) ** 0.25
    b = np.zeros(A.shape[0], dtype=complex)
    b[-1] = math.sqrt(config.kappa) * amp
    c = np.linalg.solve(V, b)
    if pulse.center != 0.0:
        # rotating frame at the spectral centre: shift eigenvalues, undo after
        resp = _gaussian_drive_response(t_grid, lam + 1j * pulse.center,
                                        pulse.sigma, t_center)
        states = (resp * c[None, :]) @ V.T
        states = states * np.exp(-1j * pulse.center
                                 * (t_grid - t_center))[:, None]
    else:
        resp = _gaussian_drive_response(t_grid, lam, pulse.sigma, t_center)
        states = (resp * c[None, :]) @ V.T
    return states.T  # (2N+1, nt)


def _simulate_rk(config, pulse, t_grid, t_center, rtol, amplitude=1.0):
    A = _system_matrix(config)
    n = A.shape[0]
    Ar, Ai = A.real, A.imag
    M = np.block([[Ar, -Ai], [Ai, Ar]])
    root_kappa = math.sqrt(config.kappa)

    def rhs(t, y):
        dy = M @ y
        drive = amplitude * root_kappa * pulse_time_profile(pulse, t, t_center)
        dy[n - 1] += np.real(drive)
        dy[2 * n - 1] += np.imag(drive)
        return dy

    sol = solve_ivp(rhs, (float(t_grid[0]), float(t_grid[-1])),
                    np.zeros(2 * n), method="DOP853", rtol=rtol,
                    atol=rtol * 1e-2, t_eval=t_grid)
    if not sol.success:
        raise StepSizeUnderflow(f"integrator failed: {sol.message}")
    return sol.y[:n] + 1j * sol.y[n:]


def simulate(config: MemoryConfig, pulse: InputPulse, t_span=None,
             tol: float = 1e-9, points: int = 2001,
             t_center: float | None = None, method: str | None = None,
             amplitude: float = 1.0) -> TimeTrace:
    """Integrate the driven mode equations from zero initial conditions.

    t_span defaults to (0, t_center + 3 * recall_time + 6/sigma), covering
    the input pulse and the first recalled pulse with ring-down margin.
    method: None picks RK for kappa <= 1e3 and the exact eigenmode
    propagator above that; 'rk' or 'exact' force a choice.  `amplitude`
    scales the (otherwise unit-energy) input field.
    """
    if t_center is None:
        t_center = default_t_center(pulse)
    if t_span is None:
        horizon = max(model.t0_matching(config), 2.0 * math.pi)
        t_span = (0.0, t_center + 3.0 * horizon + 6.0 / pulse.sigma)
    t_grid = np.linspace(float(t_span[0]), float(t_span[1]), int(points))
    if method is None:
        method = "exact" if config.kappa > STIFF_KAPPA else "rk"
    if method == "rk":
        states = _simulate_rk(config, pulse, t_grid, t_center, tol, amplitude)
    elif method == "exact":
        states = _simulate_exact(config, pulse, t_grid, t_center, amplitude)
    else:
        raise ValueError(f"unknown method {method!r}")
    a_in = amplitude * pulse_time_profile(pulse, t_grid, t_center).astype(complex)
    a_cav = states[-1]
    a_out = math.sqrt(config.kappa) * a_cav - a_in
    return TimeTrace(t_grid=t_grid, a_in=a_in, a_cavity=a_cav,
                     s_modes=states[:-1], a_out=a_out,
                     t_center=t_center, method=method)


def output_via_tf(config: MemoryConfig, pulse: InputPulse, t_grid,
                  t_center: float | None = None, rtol: float = 1e-7,
                  max_doublings: int = 8) -> np.ndarray:
    """a_out(t) = (2 pi)^{-1/2} int e^{-i nu t} S(nu) f_nu e^{i nu t_center} dnu.

    Dense refining quadrature, independent of the ODE route; the band covers
    the pulse and every absorber line.
    """
    if t_center is None:
        t_center = default_t_center(pulse)
    t_grid = np.asarray(t_grid, dtype=float)
    half = max(8.0 * pulse.sigma,
               float(np.max(np.abs(config.detunings))) + 8.0 * pulse.sigma)
    lo, hi = pulse.center - half, pulse.center + half
    grid = model._cluster_grid(config, lo, hi, base=2049)

    def transform(grid):
        sf = transfer_times_spectrum(config, pulse, grid)
        vals = np.empty(len(t_grid), dtype=complex)
        for i in range(0, len(t_grid), 128):   # chunked: the phase matrix is large
            tt = t_grid[i:i + 128, None] - t_center
            vals[i:i + 128] = np.trapezoid(np.exp(-1j * tt * grid[None, :])
                                           * sf[None, :], grid, axis=1)
        return vals / math.sqrt(2.0 * math.pi)

    # one Richardson level on top of trapezoid doubling (Romberg step)
    raw_prev, extr_prev = None, None
    for level in range(max_doublings + 1):
        raw = transform(grid)
        if raw_prev is not None:
            extr = raw + (raw - raw_prev) / 3.0
            if extr_prev is not None:
                err = np.linalg.norm(extr - extr_prev)
                if err <= rtol * max(np.linalg.norm(extr), 1e-30):
                    return extr
            extr_prev = extr
        raw_prev = raw
        mid = 0.5 * (grid[:-1] + grid[1:])
        grid = model.nudge_off_lines(config, np.sort(np.concatenate([grid, mid])))
    raise QuadratureNotConverged(
        f"time-domain transform did not converge to rtol={rtol}")


def transfer_times_spectrum(config: MemoryConfig, pulse: InputPulse, nu):
    """S(nu) f_nu, the spectral content of the output field."""
    return model.transfer_fn(config, nu) * model.gaussian_spectrum(pulse, nu)
