"""Spectral density models of the environment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import BathParams, SystemParams

__all__ = ["SpectralDensity"]

KINDS = ("ohmic_sharp_cutoff",)


@dataclass(frozen=True)
class SpectralDensity:
    """Ohmic spectral density with a sharp frequency cutoff.

    I(omega) = (2/pi) * friction * omega for omega < cutoff, zero above,
    and half the linear value exactly at the edge (theta(0) = 1/2; a
    measure-zero point, fixed only for determinism).
    """
    friction: float        # mass * gamma
    cutoff: float
    kind: str = "ohmic_sharp_cutoff"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown spectral density kind {self.kind!r}")
        if self.friction <= 0:
            raise ValueError(f"friction must be > 0, got {self.friction}")
        if self.cutoff <= 0:
            raise ValueError(f"cutoff must be > 0, got {self.cutoff}")

    @classmethod
    def ohmic(cls, sys: SystemParams, bath: BathParams) -> "SpectralDensity":
        return cls(friction=sys.mass * bath.gamma, cutoff=bath.cutoff)

    def evaluate(self, omega):
        """Evaluate I(omega); scalar in, scalar out; array in, array out."""
        w = np.asarray(omega, dtype=float)
        if np.any(w < 0):
            raise ValueError("omega must be >= 0")
        slope = 2.0 * self.friction / np.pi
        vals = np.where(w < self.cutoff, slope * w, 0.0)
        vals = np.where(w == self.cutoff, 0.5 * slope * w, vals)
        if np.isscalar(omega) or getattr(omega, "ndim", 0) == 0:
            return float(vals)
        return vals
