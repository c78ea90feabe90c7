"""System/bath parameter containers, characteristic timescales, regime logic.

Everything here is nondimensional: default hbar = M = 1 and all rates are
quoted in units of a reference frequency.  Temperature enters as an energy
(kT); absolute zero is represented exactly by ``kT == 0`` rather than by a
tiny positive number, so downstream code can switch to zero-temperature
closed forms without epsilon games.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "SystemParams", "BathParams", "Timescales", "RegimeReport",
    "derive_timescales", "coherence_length", "decoherence_time",
    "classify_regime", "default_fit_window",
]

# "much greater / much less" strictness factors.  Loose enough to leave a
# usable fit window at desk scale, tight enough that the oscillatory
# correction Ci(Lambda*t) < 0.1 and frequency corrections stay below fit
# tolerance inside an accepted window.
RELAX_FACTOR = 2.5      # t >> tau_relax   means t >= 2.5 * tau_relax
MEMORY_FACTOR = 10.0    # t >> 1/Lambda    means t >= 10 / Lambda
SYSTEM_FACTOR = 0.2     # t << 1/Omega     means t <= 0.2 / Omega
MARKOV_FACTOR = 0.1     # tau_beta << 1/Lambda means tau_beta <= 0.1 / Lambda


@dataclass(frozen=True)
class SystemParams:
    """Mass, oscillator frequency and hbar for the central particle."""
    mass: float = 1.0
    frequency: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        if self.frequency < 0:
            raise ValueError(f"frequency must be >= 0, got {self.frequency}")
        if self.hbar <= 0:
            raise ValueError(f"hbar must be > 0, got {self.hbar}")


@dataclass(frozen=True)
class BathParams:
    """Ohmic-bath parameters: damping rate, frequency cutoff, temperature.

    ``gamma`` is the damping rate (friction / mass); ``cutoff`` is the upper
    frequency of the bath spectrum; ``kT`` is temperature as an energy,
    with 0 meaning exactly absolute zero.
    """
    gamma: float
    cutoff: float
    kT: float = 0.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.cutoff <= 0:
            raise ValueError(f"cutoff must be > 0, got {self.cutoff}")
        if self.kT < 0:
            raise ValueError(f"kT must be >= 0, got {self.kT}")


@dataclass(frozen=True)
class Timescales:
    """Characteristic times; infinities encode absent scales."""
    tau_relax: float     # 1/gamma
    tau_memory: float    # 1/cutoff
    tau_thermal: float   # hbar/kT, inf at kT = 0
    tau_system: float    # 1/frequency, inf at frequency = 0


@dataclass(frozen=True)
class RegimeReport:
    """Outcome of checking a time window against the regime orderings."""
    window: tuple[float, float]
    satisfied: dict[str, bool]
    label: str  # late_time_zero_T | high_T_markovian | unclassified
    warnings: tuple[str, ...] = field(default=())


def derive_timescales(sys: SystemParams, bath: BathParams) -> Timescales:
    return Timescales(
        tau_relax=1.0 / bath.gamma,
        tau_memory=1.0 / bath.cutoff,
        tau_thermal=(sys.hbar / bath.kT) if bath.kT > 0 else math.inf,
        tau_system=(1.0 / sys.frequency) if sys.frequency > 0 else math.inf,
    )


def coherence_length(sys: SystemParams, bath: BathParams) -> float:
    """Length scale sqrt(hbar / (M gamma)) below which dephasing cannot
    dominate the kinetic term."""
    return math.sqrt(sys.hbar / (sys.mass * bath.gamma))


def decoherence_time(sys: SystemParams, bath: BathParams, dx: float) -> float:
    """High-temperature decoherence time (1/gamma)(lambda_th/dx)^2.

    Thermal de Broglie length convention: lambda_th = hbar/sqrt(2 M kT).
    Only this convention makes rate * decoherence_time = 1 against the
    high-temperature plateau of the diffusion coefficient; verified by the
    acceptance suite.
    """
    if bath.kT <= 0:
        raise ValueError(
            "decoherence time undefined at absolute zero; "
            "use power-law exponent instead")
    if dx <= 0:
        raise ValueError(f"dx must be > 0, got {dx}")
    lam_th = sys.hbar / math.sqrt(2.0 * sys.mass * bath.kT)
    return (1.0 / bath.gamma) * (lam_th / dx) ** 2


def classify_regime(ts: Timescales, window: tuple[float, float]) -> RegimeReport:
    """Check a fit window [t_lo, t_hi] against the decay-regime orderings.

    late_time_zero_T: t_lo >= 2.5 tau_relax, t_lo >= 10 tau_memory,
    t_hi <= 0.2 tau_system, and tau_thermal infinite.
    high_T_markovian: tau_thermal <= 0.1 tau_memory and the window starts
    past the bath transients (t_lo >= 10 tau_memory).
    Anything else: unclassified.
    """
    t_lo, t_hi = window
    if not (0 < t_lo < t_hi):
        raise ValueError(f"malformed window {window}; need 0 < t_lo < t_hi")
    flags = {
        "t_lo_after_relaxation": t_lo >= RELAX_FACTOR * ts.tau_relax,
        "t_lo_after_bath_memory": t_lo >= MEMORY_FACTOR * ts.tau_memory,
        "t_hi_before_system_period": t_hi <= SYSTEM_FACTOR * ts.tau_system,
        "zero_temperature": math.isinf(ts.tau_thermal),
        "thermal_time_below_bath_memory":
            ts.tau_thermal <= MARKOV_FACTOR * ts.tau_memory,
    }
    if (flags["zero_temperature"] and flags["t_lo_after_relaxation"]
            and flags["t_lo_after_bath_memory"]
            and flags["t_hi_before_system_period"]):
        label = "late_time_zero_T"
    elif (flags["thermal_time_below_bath_memory"]
          and flags["t_lo_after_bath_memory"]):
        label = "high_T_markovian"
    else:
        label = "unclassified"
    warnings = []
    if RELAX_FACTOR * ts.tau_relax > SYSTEM_FACTOR * ts.tau_system:
        # the orderings t >> tau_relax and t << tau_system cannot both hold
        warnings.append(
            "no window can satisfy both t >> relaxation time and "
            "t << system period: requires gamma >> frequency")
    return RegimeReport(window=(t_lo, t_hi), satisfied=flags, label=label,
                        warnings=tuple(warnings))


def default_fit_window(ts: Timescales) -> tuple[float, float]:
    """Default window [max(2.5 tau_relax, 10 tau_memory), 0.2 tau_system];
    the upper edge is inf for a free particle (clip to available samples)."""
    t_lo = max(RELAX_FACTOR * ts.tau_relax, MEMORY_FACTOR * ts.tau_memory)
    t_hi = SYSTEM_FACTOR * ts.tau_system
    return t_lo, t_hi
