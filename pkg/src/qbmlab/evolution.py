"""Reduced-density-matrix evolution on an (x, x') grid.

Two evolution paths:

* ``evolve_dephasing`` — the pure-dephasing closed form: every element is
  multiplied by exp(-(x - x')^2 * Theta(t) / hbar), the exact solution when
  only the position-diffusion term acts.  No grid stepping involved.
* ``evolve_full`` — explicit RK4 method-of-lines for the weak-coupling
  master equation with all five terms::

      drho/dt = (i hbar / 2M)(d^2/dx^2 - d^2/dx'^2) rho
                - (i M / 2 hbar)(Omega^2 + freq_shift(t)) (x^2 - x'^2) rho
                - dissipation(t) (x - x') (d/dx - d/dx') rho
                - (diffusion(t) / hbar) (x - x')^2 rho
                - i anomalous(t) (x - x') (d/dx + d/dx') rho

  with centered second-order differences and Dirichlet-zero boundaries.
  Individual terms can be toggled off (``TermToggles``) to compare limits
  against closed forms.

Grids are endpoint-inclusive: n points spanning ``extent`` with spacing
dx = span/(n-1); the trace is the plain Riemann sum of the diagonal.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .params import SystemParams, BathParams
from .coefficients import CoefficientSet, decoherence_exponent

__all__ = [
    "CatStateSpec", "DensityGrid", "EvolveConfig", "TermToggles",
    "EvolutionResult", "init_cat_state", "dephasing_factor",
    "evolve_dephasing", "evolve_full", "grid_trace", "hermiticity_residual",
    "purity", "min_eigenvalue_estimate", "suggest_timestep",
    "write_snapshot", "read_snapshot", "sample_bilinear",
]

# Grid-resolution contract for initial states: the packet width must span
# at least this many grid points, and the extent must clear the packets'
# tails by this many widths (keeps Dirichlet boundary amplitudes < 1e-10).
MIN_POINTS_PER_WIDTH = 8.0
TAIL_WIDTHS = 12.0
MIN_GRID_POINTS = 64

SCHEMES = ("rk4_method_of_lines",)
BOUNDARIES = ("dirichlet_zero",)

# Explicit RK4 stays stable for a pure-decay rate r while dt*r <= 2.785;
# suggest_timestep keeps a margin below that.
DECAY_STABILITY_MARGIN = 2.5


@dataclass(frozen=True)
class CatStateSpec:
    """Superposition of two width-``width`` Gaussian packets whose centers
    sit ``separation`` apart, symmetric about ``grid_center``."""
    separation: float
    width: float
    grid_center: float = 0.0

    def __post_init__(self):
        if self.separation < 0:
            raise ValueError(f"separation must be >= 0, got {self.separation}")
        if self.width <= 0:
            raise ValueError(f"width must be > 0, got {self.width}")


@dataclass(frozen=True)
class DensityGrid:
    n: int
    extent: tuple[float, float]
    values: np.ndarray          # (n, n) complex, rho[i, j] = rho(x_i, x'_j)
    time: float

    def __post_init__(self):
        if self.n < MIN_GRID_POINTS:
            raise ValueError(f"n must be >= {MIN_GRID_POINTS}, got {self.n}")
        lo, hi = self.extent
        if not lo < hi:
            raise ValueError(f"extent must be an increasing pair, got {self.extent}")
        object.__setattr__(self, "extent", (float(lo), float(hi)))
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.n, self.n):
            raise ValueError(
                f"values must be ({self.n}, {self.n}), got {vals.shape}")
        if not np.isfinite(vals).all():
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def dx(self) -> float:
        return (self.extent[1] - self.extent[0]) / (self.n - 1)

    def axis(self) -> np.ndarray:
        return np.linspace(self.extent[0], self.extent[1], self.n)


@dataclass(frozen=True)
class EvolveConfig:
    dt: float
    t_end: float
    scheme: str = "rk4_method_of_lines"
    record_every: int = 100
    boundary: str = "dirichlet_zero"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.t_end <= 0:
            raise ValueError(f"t_end must be > 0, got {self.t_end}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; options {SCHEMES}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(
                f"unknown boundary {self.boundary!r}; options {BOUNDARIES}")


@dataclass(frozen=True)
class TermToggles:
    """Per-term switches for evolve_full (all on by default); disabling
    kinetic+potential reduces the equation to the pure-dephasing limit."""
    kinetic: bool = True
    potential: bool = True
    dissipation: bool = True
    diffusion: bool = True
    anomalous: bool = True


@dataclass(frozen=True)
class EvolutionResult:
    """Per-step scalar diagnostics plus periodic full-grid snapshots."""
    times: np.ndarray
    trace: np.ndarray
    herm_residual: np.ndarray
    purity: np.ndarray
    visibility: np.ndarray      # NaN when no CatStateSpec was supplied
    snapshots: list
    snapshot_steps: list

    @property
    def final(self) -> DensityGrid:
        return self.snapshots[-1]


def init_cat_state(spec: CatStateSpec, n: int, extent: float) -> DensityGrid:
    """Pure-state density matrix psi(x) psi*(x') for a two-packet
    superposition, unit trace under the grid's Riemann sum (overlap
    cross-term included via the numerical normalization)."""
    length = float(extent)
    needed = spec.separation + TAIL_WIDTHS * spec.width
    if length < needed:
        raise ValueError(
            f"grid extent {length:g} too small: packets need extent >= "
            f"separation + {TAIL_WIDTHS:g}*width = {needed:g}")
    dx = length / (n - 1)
    if spec.width / dx < MIN_POINTS_PER_WIDTH:
        raise ValueError(
            f"packet width under-resolved: width/dx = {spec.width / dx:.3g} "
            f"< {MIN_POINTS_PER_WIDTH:g} points per width")
    x = np.linspace(spec.grid_center - length / 2.0,
                    spec.grid_center + length / 2.0, n)
    half = 0.5 * spec.separation
    g = (np.exp(-((x - spec.grid_center - half) ** 2) / (4.0 * spec.width ** 2))
         + np.exp(-((x - spec.grid_center + half) ** 2) / (4.0 * spec.width ** 2)))
    norm = math.sqrt(float(np.sum(g * g)) * dx)
    psi = g / norm
    values = np.outer(psi, psi).astype(complex)
    return DensityGrid(n=n, extent=(x[0], x[-1]), values=values, time=0.0)


def dephasing_factor(sys: SystemParams, bath: BathParams, dx: float,
                     t: float) -> float:
    """exp(-dx^2 * Theta(t) / hbar); 1 at t = 0 or dx = 0."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if dx == 0.0 or t == 0.0:
        return 1.0
    theta = decoherence_exponent(sys, bath, t)
    return math.exp(-dx * dx * theta / sys.hbar)


def evolve_dephasing(rho0: DensityGrid, sys: SystemParams, bath: BathParams,
                     t: float) -> DensityGrid:
    """Advance by duration t under pure dephasing: elementwise scaling by
    exp(-(x-x')^2 [Theta(t0+t) - Theta(t0)] / hbar).  Exact; the diagonal
    is untouched."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0:
        return rho0
    t0 = rho0.time
    theta = decoherence_exponent(sys, bath, t0 + t)
    if t0 > 0:
        theta -= decoherence_exponent(sys, bath, t0)
    x = rho0.axis()
    q = x[:, None] - x[None, :]
    factor = np.exp(-(q * q) * (theta / sys.hbar))
    return DensityGrid(n=rho0.n, extent=rho0.extent,
                       values=rho0.values * factor, time=t0 + t)


def grid_trace(rho: DensityGrid) -> float:
    return float(np.sum(rho.values.diagonal().real) * rho.dx)


def hermiticity_residual(rho: DensityGrid) -> float:
    return float(np.max(np.abs(rho.values - rho.values.conj().T)))


def purity(rho: DensityGrid) -> float:
    return float(np.sum(np.abs(rho.values) ** 2) * rho.dx * rho.dx)


def min_eigenvalue_estimate(rho: DensityGrid) -> float:
    """Smallest eigenvalue of the (symmetrized) kernel rho(x,x') dx.
    Diagnostic only: transient negativity is expected for this family of
    master equations and is not an error."""
    herm = 0.5 * (rho.values + rho.values.conj().T)
    return float(np.linalg.eigvalsh(herm)[0] * rho.dx)


def sample_bilinear(rho: DensityGrid, xa: float, xb: float) -> complex:
    """Bilinearly interpolated rho(xa, xb); raises if the point is outside
    the grid."""
    lo, hi = rho.extent
    if not (lo <= xa <= hi and lo <= xb <= hi):
        raise ValueError(
            f"sample point ({xa:g}, {xb:g}) outside grid extent [{lo:g}, {hi:g}]")
    dx = rho.dx
    fa = (xa - lo) / dx
    fb = (xb - lo) / dx
    ia = min(int(fa), rho.n - 2)
    ib = min(int(fb), rho.n - 2)
    wa = fa - ia
    wb = fb - ib
    v = rho.values
    return complex((1 - wa) * (1 - wb) * v[ia, ib]
                   + wa * (1 - wb) * v[ia + 1, ib]
                   + (1 - wa) * wb * v[ia, ib + 1]
                   + wa * wb * v[ia + 1, ib + 1])


def _visibility(rho: DensityGrid, spec: CatStateSpec) -> float:
    if spec.separation == 0.0:
        return 1.0   # degenerate cat: both sample points coincide
    xp = spec.grid_center + 0.5 * spec.separation
    xm = spec.grid_center - 0.5 * spec.separation
    off = abs(sample_bilinear(rho, xp, xm))
    dp = sample_bilinear(rho, xp, xp).real
    dm = sample_bilinear(rho, xm, xm).real
    return 2.0 * off / (dp + dm)


def suggest_timestep(sys: SystemParams, grid: DensityGrid,
                     coeffs: CoefficientSet, t_end: float, *,
                     cfl_fraction: float = 0.1, n_probe: int = 512) -> float:
    """Time step satisfying both the kinetic CFL bound (with margin
    ``cfl_fraction``) and RK4 decay stability for the diffusion term at the
    grid's largest |x - x'| over [0, t_end] (coefficient probed on a dense
    grid)."""
    dx = grid.dx
    dt = cfl_fraction * 0.25 * sys.mass * dx * dx / sys.hbar
    q_max = grid.extent[1] - grid.extent[0]
    rate_max = 0.0
    for tq in np.linspace(0.0, t_end, n_probe):
        rate = abs(float(coeffs.diffusion(float(tq)))) * q_max * q_max / sys.hbar
        rate_max = max(rate_max, rate)
    if rate_max > 0:
        dt = min(dt, DECAY_STABILITY_MARGIN / rate_max)
    return dt


def _second_diff(rho: np.ndarray, axis: int, out: np.ndarray) -> None:
    """Centered second difference with Dirichlet-zero ghosts, into out."""
    if axis == 0:
        out[1:-1, :] = rho[2:, :] - 2.0 * rho[1:-1, :] + rho[:-2, :]
        out[0, :] = rho[1, :] - 2.0 * rho[0, :]
        out[-1, :] = rho[-2, :] - 2.0 * rho[-1, :]
    else:
        out[:, 1:-1] = rho[:, 2:] - 2.0 * rho[:, 1:-1] + rho[:, :-2]
        out[:, 0] = rho[:, 1] - 2.0 * rho[:, 0]
        out[:, -1] = rho[:, -2] - 2.0 * rho[:, -1]


def _first_diff(rho: np.ndarray, axis: int, out: np.ndarray) -> None:
    """Centered first difference (unscaled by 1/2dx), Dirichlet-zero ghosts."""
    if axis == 0:
        out[1:-1, :] = rho[2:, :] - rho[:-2, :]
        out[0, :] = rho[1, :]
        out[-1, :] = -rho[-2, :]
    else:
        out[:, 1:-1] = rho[:, 2:] - rho[:, :-2]
        out[:, 0] = rho[:, 1]
        out[:, -1] = -rho[:, -2]


def evolve_full(rho0: DensityGrid, sys: SystemParams, bath: BathParams,
                coeffs: CoefficientSet, cfg: EvolveConfig, *,
                terms: TermToggles | None = None,
                cat_spec: CatStateSpec | None = None) -> EvolutionResult:
    """RK4 method-of-lines run from rho0.time to rho0.time + t_end.

    Scalar diagnostics (trace, hermiticity residual, purity, visibility)
    are appended every step; full grids are kept every ``record_every``
    steps plus the initial and final states.  Raises on the kinetic
    stability violation up front and on non-finite values mid-run (with
    the step index).
    """
    if terms is None:
        terms = TermToggles()
    dx = rho0.dx
    cfl = 0.25 * sys.mass * dx * dx / sys.hbar
    if terms.kinetic and cfg.dt > cfl * (1.0 + 1e-12):
        raise ValueError(
            f"dt = {cfg.dt:g} violates the kinetic stability bound "
            f"0.25*M*dx^2/hbar = {cfl:g}")

    x = rho0.axis()
    q = x[:, None] - x[None, :]
    q2 = q * q
    x2_diff = (x * x)[:, None] - (x * x)[None, :]
    kin_scale = 1j * sys.hbar / (2.0 * sys.mass * dx * dx)
    inv_2dx = 1.0 / (2.0 * dx)
    omega2 = sys.frequency * sys.frequency

    buf_a = np.empty_like(rho0.values)
    buf_b = np.empty_like(rho0.values)

    def rhs(t: float, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho)
        if terms.kinetic:
            _second_diff(rho, 0, buf_a)
            _second_diff(rho, 1, buf_b)
            out += kin_scale * (buf_a - buf_b)
        if terms.potential:
            w2 = omega2 + float(coeffs.freq_shift(t))
            if w2 != 0.0:
                out += (-0.5j * sys.mass * w2 / sys.hbar) * x2_diff * rho
        gam = float(coeffs.dissipation(t)) if terms.dissipation else 0.0
        ano = float(coeffs.anomalous(t)) if terms.anomalous else 0.0
        if gam != 0.0 or ano != 0.0:
            _first_diff(rho, 0, buf_a)
            _first_diff(rho, 1, buf_b)
            if gam != 0.0:
                out += (-gam * inv_2dx) * q * (buf_a - buf_b)
            if ano != 0.0:
                out += (-1j * ano * inv_2dx) * q * (buf_a + buf_b)
        if terms.diffusion:
            dcoef = float(coeffs.diffusion(t))
            if dcoef != 0.0:
                out += (-dcoef / sys.hbar) * q2 * rho
        return out

    t0 = rho0.time
    n_steps = max(1, int(math.ceil(cfg.t_end / cfg.dt - 1e-12)))
    rho = rho0.values.copy()

    times = [t0]
    traces = [float(np.sum(rho.diagonal().real) * dx)]
    residuals = [float(np.max(np.abs(rho - rho.conj().T)))]
    purities = [float(np.sum(np.abs(rho) ** 2) * dx * dx)]
    visibilities = []

    def snap(t: float) -> DensityGrid:
        return DensityGrid(n=rho0.n, extent=rho0.extent, values=rho.copy(),
                           time=t)

    def vis_now(t: float) -> float:
        if cat_spec is None:
            return math.nan
        return _visibility(snap(t), cat_spec)

    visibilities.append(vis_now(t0))
    snapshots = [snap(t0)]
    snapshot_steps = [0]

    elapsed = 0.0
    for k in range(1, n_steps + 1):
        h = min(cfg.dt, cfg.t_end - elapsed)
        t = t0 + elapsed
        k1 = rhs(t, rho)
        k2 = rhs(t + 0.5 * h, rho + (0.5 * h) * k1)
        k3 = rhs(t + 0.5 * h, rho + (0.5 * h) * k2)
        k4 = rhs(t + h, rho + h * k3)
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        elapsed += h
        tk = t0 + elapsed
        if not np.isfinite(rho).all():
            raise RuntimeError(
                f"non-finite values detected at step {k} (t = {tk:.6g}); "
                "reduce dt or check coefficient scales")
        times.append(tk)
        traces.append(float(np.sum(rho.diagonal().real) * dx))
        residuals.append(float(np.max(np.abs(rho - rho.conj().T))))
        purities.append(float(np.sum(np.abs(rho) ** 2) * dx * dx))
        visibilities.append(vis_now(tk))
        if k % cfg.record_every == 0 or k == n_steps:
            snapshots.append(snap(tk))
            snapshot_steps.append(k)

    return EvolutionResult(
        times=np.asarray(times), trace=np.asarray(traces),
        herm_residual=np.asarray(residuals), purity=np.asarray(purities),
        visibility=np.asarray(visibilities), snapshots=snapshots,
        snapshot_steps=snapshot_steps)


# Binary snapshot layout: little-endian header {u32 n, f64 extent_lo,
# f64 extent_hi, f64 time} then n^2 (real, imag) f64 pairs, row-major in x.
_HEADER = struct.Struct("<Iddd")


def write_snapshot(rho: DensityGrid, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(rho.n, rho.extent[0], rho.extent[1], rho.time))
        inter = np.empty((rho.n, rho.n, 2), dtype="<f8")
        inter[:, :, 0] = rho.values.real
        inter[:, :, 1] = rho.values.imag
        inter.tofile(fh)


def read_snapshot(path) -> DensityGrid:
    with open(path, "rb") as fh:
        n, lo, hi, time = _HEADER.unpack(fh.read(_HEADER.size))
        inter = np.fromfile(fh, dtype="<f8", count=2 * n * n)
    if inter.size != 2 * n * n:
        raise ValueError(f"snapshot file truncated: expected {2*n*n} floats, "
                         f"got {inter.size}")
    inter = inter.reshape(n, n, 2)
    values = inter[:, :, 0] + 1j * inter[:, :, 1]
    return DensityGrid(n=n, extent=(lo, hi), values=values, time=time)
