"""Device parameter sets: absorbers in a common single-mode cavity.

All frequencies are expressed in units of the comb unit ``delta_unit``
(internally normalised to 1); the configuration records the physical value
so files written in physical units round-trip exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Absorber:
    """One resonant absorber coupled to the common cavity.

    detuning : line position relative to the carrier, units of delta.
    g        : effective linewidth (2|g0|^2 / kappa), units of delta.
    gamma    : intrinsic amplitude loss rate, units of delta.
    """

    detuning: float
    g: float
    gamma: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.detuning) or self.detuning == 0.0:
            raise ConfigError("absorber detuning must be finite and nonzero",
                              field="detuning")
        if not (self.g >= 0.0):
            raise ConfigError("absorber effective linewidth must be >= 0", field="g")
        if not (self.gamma >= 0.0):
            raise ConfigError("absorber loss must be >= 0", field="gamma")


@dataclass(frozen=True)
class MemoryConfig:
    """Full parameter set of the memory device.

    kappa      : cavity-waveguide coupling rate, units of delta.
    absorbers  : ordered tuple of the 2N absorbers (both signs of detuning).
    delta_unit : physical value of the frequency unit (default 1.0).
    symmetric  : declares the mirror symmetry g(-n) = g(n), detuning(-n) = -detuning(n).
    """

    kappa: float
    absorbers: tuple[Absorber, ...]
    delta_unit: float = 1.0
    symmetric: bool = True

    def __post_init__(self):
        if not (self.kappa > 0):
            raise ConfigError("kappa must be > 0", field="kappa")
        if not (self.delta_unit > 0):
            raise ConfigError("delta_unit must be > 0", field="delta_unit")
        object.__setattr__(self, "absorbers", tuple(self.absorbers))
        n = len(self.absorbers)
        if n < 2 or n % 2:
            raise ConfigError("absorber list length must be even and >= 2",
                              field="absorbers")
        if self.symmetric and not self.is_mirror_symmetric():
            raise ConfigError("symmetric flag set but absorbers are not "
                              "mirror-symmetric", field="symmetric")

    def is_mirror_symmetric(self, rtol=1e-9):
        pos = sorted((a for a in self.absorbers if a.detuning > 0),
                     key=lambda a: a.detuning)
        neg = sorted((a for a in self.absorbers if a.detuning < 0),
                     key=lambda a: -a.detuning)
        if len(pos) != len(neg):
            return False
        for p, q in zip(pos, neg):
            if not (math.isclose(p.detuning, -q.detuning, rel_tol=rtol)
                    and math.isclose(p.g, q.g, rel_tol=rtol, abs_tol=1e-300)
                    and math.isclose(p.gamma, q.gamma, rel_tol=rtol, abs_tol=1e-300)):
                return False
        return True

    # -- array views ------------------------------------------------------
    @property
    def detunings(self) -> np.ndarray:
        return np.array([a.detuning for a in self.absorbers], dtype=float)

    @property
    def linewidths(self) -> np.ndarray:
        return np.array([a.g for a in self.absorbers], dtype=float)

    @property
    def losses(self) -> np.ndarray:
        return np.array([a.gamma for a in self.absorbers], dtype=float)

    @property
    def n_pairs(self) -> int:
        return len(self.absorbers) // 2

    def positive_side(self) -> list[Absorber]:
        """Absorbers with positive detuning, sorted inward-out."""
        return sorted((a for a in self.absorbers if a.detuning > 0),
                      key=lambda a: a.detuning)

    def bare_couplings(self) -> np.ndarray:
        """Cavity-absorber couplings g0_n = sqrt(g_n * kappa / 2), taken real."""
        return np.sqrt(self.linewidths * self.kappa / 2.0)

    def is_lossless(self) -> bool:
        return bool(np.all(self.losses == 0.0))

    def with_updates(self, *, kappa=None, gamma=None) -> "MemoryConfig":
        """Copy with kappa and/or every absorber loss replaced."""
        absorbers = self.absorbers
        if gamma is not None:
            absorbers = tuple(replace(a, gamma=float(gamma)) for a in absorbers)
        return MemoryConfig(kappa=self.kappa if kappa is None else float(kappa),
                            absorbers=absorbers, delta_unit=self.delta_unit,
                            symmetric=self.symmetric)

    def broadband_diagnostic(self) -> dict:
        """Report whether N*delta/kappa <= sqrt(gamma_min/delta) << 1 holds.

        Advisory only; nothing is enforced.
        """
        N = self.n_pairs
        lhs = N / self.kappa
        gmin = float(np.min(self.losses))
        rhs = math.sqrt(gmin) if gmin > 0 else 0.0
        return {"n_delta_over_kappa": lhs,
                "sqrt_gamma_over_delta": rhs,
                "satisfied": bool(gmin > 0 and lhs <= rhs and rhs < 0.3)}


@dataclass(frozen=True)
class InputPulse:
    """Gaussian input spectrum: amplitude (2 pi sigma^2)^(-1/4) exp(-(nu-center)^2/(4 sigma^2))."""

    sigma: float
    center: float = 0.0

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ConfigError("pulse sigma must be > 0", field="sigma")


def equidistant_comb(n_pairs: int, g: float, gamma: float = 0.0,
                     kappa: float = 100.0, delta_unit: float = 1.0) -> MemoryConfig:
    """Equidistant symmetric comb: detunings +-(n - 1/2) for n = 1..n_pairs, equal g."""
    absorbers = []
    for n in range(1, n_pairs + 1):
        d = n - 0.5
        absorbers.append(Absorber(d, g, gamma))
        absorbers.append(Absorber(-d, g, gamma))
    return MemoryConfig(kappa=kappa, absorbers=tuple(absorbers),
                        delta_unit=delta_unit, symmetric=True)


def symmetric_config(detunings, linewidths, gamma=0.0, kappa: float = 100.0,
                     delta_unit: float = 1.0) -> MemoryConfig:
    """Build a mirror-symmetric config from the positive-side parameters."""
    detunings = np.atleast_1d(np.asarray(detunings, dtype=float))
    linewidths = np.atleast_1d(np.asarray(linewidths, dtype=float))
    gammas = np.broadcast_to(np.asarray(gamma, dtype=float), detunings.shape)
    absorbers = []
    for d, g, gm in zip(detunings, linewidths, gammas):
        absorbers.append(Absorber(float(d), float(g), float(gm)))
        absorbers.append(Absorber(-float(d), float(g), float(gm)))
    return MemoryConfig(kappa=kappa, absorbers=tuple(absorbers),
                        delta_unit=delta_unit, symmetric=True)


# ---------------------------------------------------------------------------
# JSON round-trip
# ---------------------------------------------------------------------------

def config_to_dict(config: MemoryConfig) -> dict:
    return {
        "kappa": config.kappa,
        "delta_unit": config.delta_unit,
        "symmetric": config.symmetric,
        "absorbers": [{"detuning": a.detuning, "g": a.g, "gamma": a.gamma}
                      for a in config.absorbers],
    }


def config_from_dict(data: dict) -> MemoryConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    try:
        kappa = float(data["kappa"])
    except KeyError:
        raise ConfigError("missing required key", field="kappa") from None
    except (TypeError, ValueError):
        raise ConfigError("kappa must be a number", field="kappa") from None
    delta_unit = float(data.get("delta_unit", 1.0))
    symmetric = bool(data.get("symmetric", True))
    raw = data.get("absorbers")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("absorbers must be a non-empty list", field="absorbers")
    absorbers = []
    for i, entry in enumerate(raw):
        try:
            absorbers.append(Absorber(float(entry["detuning"]), float(entry["g"]),
                                      float(entry.get("gamma", 0.0))))
        except KeyError as exc:
            raise ConfigError(f"absorbers[{i}] missing key {exc}",
                              field=f"absorbers[{i}]") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"absorbers[{i}]: {exc}",
                              field=f"absorbers[{i}]") from None
    # normalise into units of delta_unit
    if delta_unit != 1.0:
        absorbers = [Absorber(a.detuning / delta_unit, a.g / delta_unit,
                              a.gamma / delta_unit) for a in absorbers]
        kappa = kappa / delta_unit
    return MemoryConfig(kappa=kappa, absorbers=tuple(absorbers),
                        delta_unit=delta_unit, symmetric=symmetric)


def save_config(config: MemoryConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(_denormalised(config)), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path) -> MemoryConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: line {exc.lineno} col {exc.colno}: "
                          f"{exc.msg}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return config_from_dict(data)


def _denormalised(config: MemoryConfig) -> MemoryConfig:
    """Express all rates back in physical units for serialisation."""
    u = config.delta_unit
    if u == 1.0:
        return config
    absorbers = tuple(Absorber(a.detuning * u, a.g * u, a.gamma * u)
                      for a in config.absorbers)
    return MemoryConfig(kappa=config.kappa * u, absorbers=absorbers,
                        delta_unit=u, symmetric=config.symmetric)


def config_hash(config: MemoryConfig) -> str:
    """Stable short hash of the canonical JSON rendering."""
    blob = json.dumps(config_to_dict(config), sort_keys=True,
                      separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
