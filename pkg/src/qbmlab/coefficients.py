"""Weak-coupling master-equation coefficients.

The diffusion coefficient is

    D(t) = integral_0^t  nu(s) cos(Omega s) ds                         (*)

and its running integral Theta(t) = integral_0^t D(t') dt' is the
decoherence exponent: off-diagonal elements at separation dx carry the
factor exp(-dx^2 Theta(t) / hbar).

At absolute zero with Omega = 0 both collapse to elementary closed forms:

    D(t)     = (2 M gamma / pi) (1 - cos(Lambda t)) / t
    Theta(t) = (2 M gamma / pi) [ln(Lambda t) + gamma_E - Ci(Lambda t)]

The general quadrature path expands nu(s) back into its frequency
integral and performs the time integrals analytically — they are
elementary — leaving one adaptive quadrature over frequency:

    D(t)     = p int_0^Lambda w c(w) (t/2)  [sinc((w+W)t)     + sinc((w-W)t)]     dw
    Theta(t) = p int_0^Lambda w c(w) (t^2/4)[sinc^2((w+W)t/2) + sinc^2((w-W)t/2)] dw

with p = 2 M gamma / pi, W the system frequency, c(w) the thermal
occupation factor coth(hbar w / 2 kT) (exactly 1 at kT = 0) and
sinc(u) = sin(u)/u.  These are exact reorderings (Fubini), not
approximations.  The literal time-domain nestings cost O((Lambda t)^2)
and are unusable at Lambda*t ~ 1e5; they are kept as references for
validation at small t.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import quadrature
from .kernels import coth, noise_kernel_quadrature, noise_kernel_zero_T_closed
from .params import BathParams, SystemParams

__all__ = [
    "EULER_GAMMA", "CoefficientSet", "ExponentTrace", "cosine_integral",
    "diffusion_coefficient", "diffusion_zero_T_free", "decoherence_exponent",
    "exponent_closed_zero_T", "exponent_fubini_reference",
    "exponent_nested_reference", "exponent_trace", "alpha_theory",
]

EULER_GAMMA = 0.5772156649015329

SERIES_CUT = 1e-4                 # Lambda*t below which Taylor forms kick in
_CI_SPLIT = 4.0                   # series below, f sin - g cos above

# Nodes for the auxiliary-function route: Ci(x) = f(x) sin x - g(x) cos x
# with f, g Laplace-type integrals evaluated by Gauss-Laguerre.  A plain
# truncated asymptotic series errs ~1e-2 at x = 4; the integral form of the
# same f, g is accurate to ~1e-13 there.
_LAG_NODES, _LAG_WEIGHTS = np.polynomial.laguerre.laggauss(80)


def cosine_integral(x):
    """Cosine integral Ci(x) for x > 0; scalar or array.

    Series gamma_E + ln x + sum (-1)^k x^(2k) / (2k (2k)!) for x <= 4;
    for x > 4 the oscillatory form f(x) sin x - g(x) cos x with

        f(x) = int_0^inf e^(-x u) / (1 + u^2) du
        g(x) = int_0^inf u e^(-x u) / (1 + u^2) du

    done by Gauss-Laguerre after u -> v/x.
    """
    scalar = np.isscalar(x) or getattr(x, "ndim", 0) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise ValueError("cosine integral requires x > 0")
    out = np.empty_like(x)

    lo = x <= _CI_SPLIT
    if lo.any():
        xs = x[lo]
        total = np.zeros_like(xs)
        term = np.ones_like(xs)
        k = 0
        while True:
            k += 1
            # term_k = (-1)^k x^(2k) / (2k (2k)!) built recursively
            term = term * (-(xs * xs)) / ((2 * k - 1) * (2 * k))
            contrib = term / (2 * k)
            total += contrib
            if np.all(np.abs(contrib) < 1e-17 * (1.0 + np.abs(total))):
                break
        out[lo] = EULER_GAMMA + np.log(xs) + total

    hi = ~lo
    if hi.any():
        xs = x[hi]
        ratio = _LAG_NODES[None, :] / xs[:, None]
        denom = 1.0 + ratio * ratio
        f = (_LAG_WEIGHTS[None, :] / denom).sum(axis=1) / xs
        g = (_LAG_WEIGHTS[None, :] * _LAG_NODES[None, :] / denom).sum(axis=1) \
            / (xs * xs)
        out[hi] = f * np.sin(xs) - g * np.cos(xs)

    return float(out[0]) if scalar else out


def _kernel_times_cos(sys: SystemParams, bath: BathParams,
                      abs_tol: float, rel_tol: float):
    """Vectorized s -> nu(s) cos(Omega s); closed kernel at kT = 0,
    per-sample quadrature otherwise.  Reference/validation path."""
    omega0 = sys.frequency
    if bath.kT == 0:
        def f(s):
            return noise_kernel_zero_T_closed(sys, bath, s) * np.cos(omega0 * s)
    else:
        def f(s):
            nu = np.array([noise_kernel_quadrature(sys, bath, si,
                                                   abs_tol=abs_tol,
                                                   rel_tol=rel_tol)[0]
                           for si in np.atleast_1d(s)])
            return nu * np.cos(omega0 * np.atleast_1d(s))
    return f


def _thermal_weight(sys: SystemParams, bath: BathParams):
    """w -> w * coth(hbar w / 2 kT) (the kT = 0 branch is exactly w)."""
    if bath.kT == 0:
        return lambda w: w
    half_beta_hbar = sys.hbar / (2.0 * bath.kT)
    return lambda w: w * coth(half_beta_hbar * w)


def _sinc(u):
    return np.sinc(u / np.pi)


def diffusion_coefficient(sys: SystemParams, bath: BathParams, t: float, *,
                          abs_tol: float = quadrature.ABS_TOL,
                          rel_tol: float = quadrature.REL_TOL) -> float:
    """D(t), the running cosine transform of the noise kernel; D(0) = 0.

    Evaluated as the exact frequency-domain reordering (module docstring):
    the s-integral of cos(w s) cos(Omega s) is done analytically and the
    remaining w-integral adaptively.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0:
        return 0.0
    pref = 2.0 * sys.mass * bath.gamma / np.pi
    weight = _thermal_weight(sys, bath)
    omega0 = sys.frequency

    def f(w):
        return (pref * 0.5 * t) * weight(w) * (_sinc((w + omega0) * t)
                                               + _sinc((w - omega0) * t))

    value, _ = quadrature.integrate(f, 0.0, bath.cutoff, max_width=np.pi / t,
                                    abs_tol=abs_tol, rel_tol=rel_tol)
    return value


def diffusion_zero_T_free(sys: SystemParams, bath: BathParams, t):
    """Closed form D(t) = (2 M gamma / pi)(1 - cos(Lambda t))/t at kT = 0 in
    the free-particle limit; scalar or array t >= 0."""
    lam = bath.cutoff
    pref = 2.0 * sys.mass * bath.gamma / np.pi
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    u = lam * t_arr
    out = np.empty_like(t_arr)
    small = u < SERIES_CUT
    # (1 - cos u)/t = (lam^2 t / 2)(1 - u^2/12 + ...)
    out[small] = pref * 0.5 * lam * lam * t_arr[small] \
        * (1.0 - u[small]**2 / 12.0)
    out[~small] = pref * (1.0 - np.cos(u[~small])) / t_arr[~small]
    if np.isscalar(t) or getattr(t, "ndim", 0) == 0:
        return float(out)
    return out


def exponent_closed_zero_T(sys: SystemParams, bath: BathParams, t):
    """Theta(t) = (2 M gamma/pi)[ln(Lambda t) + gamma_E - Ci(Lambda t)] at
    kT = 0, Omega = 0; series (2 M gamma/pi)(Lambda t)^2/4 for small t;
    scalar or array t >= 0 (t = 0 returns 0)."""
    lam = bath.cutoff
    pref = 2.0 * sys.mass * bath.gamma / np.pi
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    u = lam * t_arr
    out = np.empty_like(t_arr)
    small = u < SERIES_CUT
    out[small] = pref * u[small] ** 2 / 4.0
    ub = u[~small]
    out[~small] = pref * (np.log(ub) + EULER_GAMMA - cosine_integral(ub))
    if np.isscalar(t) or getattr(t, "ndim", 0) == 0:
        return float(out)
    return out


def decoherence_exponent(sys: SystemParams, bath: BathParams, t: float, *,
                         method: str = "auto",
                         abs_tol: float = quadrature.ABS_TOL,
                         rel_tol: float = quadrature.REL_TOL) -> float:
    """Theta(t) = int_0^t D dt'; closed form at kT = 0, Omega = 0, else the
    exact frequency-domain reordering (module docstring).

    method: auto (dispatch as above), closed_zero_T, or quadrature (forces
    the integral route even where the closed form applies, for
    cross-validation).
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if method not in ("auto", "closed_zero_T", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if t == 0:
        return 0.0
    if method == "auto":
        method = ("closed_zero_T"
                  if bath.kT == 0 and sys.frequency == 0 else "quadrature")
    if method == "closed_zero_T":
        if bath.kT != 0 or sys.frequency != 0:
            raise ValueError(
                "closed_zero_T requires kT = 0 and frequency = 0")
        return exponent_closed_zero_T(sys, bath, t)
    pref = 2.0 * sys.mass * bath.gamma / np.pi
    weight = _thermal_weight(sys, bath)
    omega0 = sys.frequency
    half_t = 0.5 * t

    def f(w):
        return (pref * 0.25 * t * t) * weight(w) * (
            _sinc((w + omega0) * half_t) ** 2
            + _sinc((w - omega0) * half_t) ** 2)

    value, _ = quadrature.integrate(f, 0.0, bath.cutoff, max_width=np.pi / t,
                                    abs_tol=abs_tol, rel_tol=rel_tol)
    return value


def exponent_fubini_reference(sys: SystemParams, bath: BathParams,
                              t: float) -> float:
    """Time-domain reference int_0^t (t - s) nu(s) cos(Omega s) ds with
    nu(s) itself quadratured when kT > 0 (two genuinely nested levels).

    Validation-only: the nesting costs O((Lambda t)^2) at kT > 0.
    """
    if t == 0:
        return 0.0
    inner = _kernel_times_cos(sys, bath, quadrature.ABS_TOL,
                              quadrature.REL_TOL)

    def f(s):
        return (t - s) * inner(s)

    width = np.pi / (bath.cutoff + sys.frequency)
    value, _ = quadrature.integrate(f, 0.0, t, max_width=width)
    return value


def exponent_nested_reference(sys: SystemParams, bath: BathParams,
                              t: float) -> float:
    """Literal nested evaluation int_0^t D(t') dt' with D itself quadratured.

    Validation-only: cost grows like (Lambda t)^2, so keep Lambda*t modest.
    """
    if t == 0:
        return 0.0

    def f(tp):
        return np.array([diffusion_coefficient(sys, bath, x)
                         for x in np.atleast_1d(tp)])

    width = np.pi / (bath.cutoff + sys.frequency)
    value, _ = quadrature.integrate(f, 0.0, t, max_width=width)
    return value


@dataclass(frozen=True)
class ExponentTrace:
    t_grid: np.ndarray
    theta: np.ndarray
    method: str  # closed_zero_T | quadrature

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        th = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "theta", th)
        if self.method not in ("closed_zero_T", "quadrature"):
            raise ValueError(f"unknown method {self.method!r}")
        if t.ndim != 1 or th.shape != t.shape:
            raise ValueError("t_grid and theta must be matching 1-D arrays")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("t_grid must be strictly increasing")
        if not np.all(np.isfinite(th)):
            raise ValueError("theta values must be finite")


def exponent_trace(sys: SystemParams, bath: BathParams, t_grid,
                   method: str = "auto") -> ExponentTrace:
    """Theta(t) on a grid; each sample computes its own integral."""
    t_grid = np.asarray(t_grid, dtype=float)
    if method == "auto":
        method = ("closed_zero_T"
                  if bath.kT == 0 and sys.frequency == 0 else "quadrature")
    if method == "closed_zero_T":
        theta = exponent_closed_zero_T(sys, bath, t_grid)
    elif method == "quadrature":
        theta = np.array([decoherence_exponent(sys, bath, t,
                                               method="quadrature")
                          for t in t_grid])
    else:
        raise ValueError(f"unknown method {method!r}")
    return ExponentTrace(t_grid=t_grid, theta=theta, method=method)


def alpha_theory(sys: SystemParams, bath: BathParams, dx: float) -> float:
    """Power-law exponent (2/(pi hbar)) M gamma dx^2 for the zero-T decay."""
    if dx < 0:
        raise ValueError(f"dx must be >= 0, got {dx}")
    return 2.0 * sys.mass * bath.gamma * dx * dx / (np.pi * sys.hbar)


def _zero(t):
    return np.zeros_like(np.asarray(t, dtype=float)) \
        if not np.isscalar(t) else 0.0


@dataclass(frozen=True)
class CoefficientSet:
    """Evaluable master-equation coefficients.

    Only the diffusion coefficient has a derived form here; dissipation,
    anomalous diffusion and the frequency shift default to zero (their
    explicit forms are never needed for the dephasing problem), but any
    callable of t may be supplied for experimentation.
    """
    diffusion: Callable = field(default=_zero)
    dissipation: Callable = field(default=_zero)
    anomalous: Callable = field(default=_zero)
    freq_shift: Callable = field(default=_zero)   # delta-Omega(t)^2

    @classmethod
    def for_params(cls, sys: SystemParams, bath: BathParams) -> "CoefficientSet":
        """Diffusion via the general quadrature path (any kT, Omega)."""
        return cls(diffusion=lambda t: diffusion_coefficient(sys, bath, t))

    @classmethod
    def zero_T_free(cls, sys: SystemParams, bath: BathParams) -> "CoefficientSet":
        """Diffusion via the kT = 0 free-particle closed form (fast; exact
        for frequency = 0)."""
        return cls(diffusion=lambda t: diffusion_zero_T_free(sys, bath, t))
