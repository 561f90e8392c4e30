"""The two flows composed by the splitting.

``linear_step`` solves ``v_t = K v`` exactly in Fourier space.
``burgers_step`` integrates the inviscid Burgers flow ``v_t + v v_x = 0``
with classical RK4, spectral derivatives and 2/3 dealiasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BlowupDetected
from .spectral import RealField, bracket
from .symbols import Symbol

__all__ = ["BurgersConfig", "linear_step", "linear_propagator", "burgers_step", "burgers_rhs"]


@dataclass(frozen=True)
class BurgersConfig:
    """Controls for the Burgers substep.

    ``filter_strength``/``filter_order`` enable an exponential spectral filter
    ``exp(-strength * (|m| / m_max) ** order)`` applied once per substep; the
    filter is off unless ``filter_strength > 0``.
    """

    cfl_safety: float = 0.5
    min_internal_steps: int = 4
    dealias_on: bool = True
    blowup_threshold: float = 10.0
    guard_sigma: float = 2.0
    filter_strength: float = 0.0
    filter_order: int = 36

    def __post_init__(self):
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if int(self.min_internal_steps) != self.min_internal_steps or self.min_internal_steps < 1:
            raise ValueError(
                f"min_internal_steps must be an integer >= 1, got {self.min_internal_steps}"
            )
        if not self.blowup_threshold > 1:
            raise ValueError(f"blowup_threshold must exceed 1, got {self.blowup_threshold}")
        if self.filter_strength < 0:
            raise ValueError("filter_strength must be nonnegative")


def linear_propagator(sym: Symbol, xis: np.ndarray, tau: float) -> np.ndarray:
    """``exp(k(xi) tau)`` on a wavenumber lattice."""
    return np.exp(sym(xis) * tau)


def linear_step(u: RealField, sym: Symbol, tau: float) -> RealField:
    """Advance ``v_t = K v`` by ``tau`` exactly.

    Backward flow (``tau < 0``) is only allowed for purely dispersive symbols.
    """
    if not np.isfinite(tau):
        raise ValueError("tau must be finite")
    grid = u.grid
    if tau < 0 and sym.is_dissipative(grid.xis):
        raise ValueError(f"negative tau={tau} with dissipative symbol {sym.label}")
    if tau == 0:
        return u
    c = np.fft.fft(u.samples)
    c *= linear_propagator(sym, grid.xis, tau)
    c[grid.nyquist_index] = 0.0
    return RealField(grid, np.fft.ifft(c).real)


def _hs_norm(samples: np.ndarray, weights: np.ndarray, L: float) -> float:
    n = samples.size
    c = np.fft.fft(samples) / n
    return math.sqrt(L * float(np.sum(weights * (c.real**2 + c.imag**2))))


def burgers_rhs(v: np.ndarray, ik: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    """``-P(v v_x)`` in physical space, ``P`` the dealiasing projection."""
    vx = np.fft.ifft(ik * np.fft.fft(v)).real
    prod = np.fft.fft(v * vx)
    if mask is not None:
        prod *= mask
    return -np.fft.ifft(prod).real


def internal_steps(u: RealField, dt: float, cfg: BurgersConfig) -> int:
    """Internal RK4 step count ``max(min_steps, ceil(dt max|u| xi_max / cfl))``."""
    xi_max = float(np.max(np.abs(u.grid.xis)))
    amp = float(np.max(np.abs(u.samples), initial=0.0))
    cfl_steps = math.ceil(dt * amp * xi_max / cfg.cfl_safety)
    return max(int(cfg.min_internal_steps), cfl_steps)


def burgers_step(
    u: RealField, dt: float, cfg: BurgersConfig | None = None, nsteps: int | None = None
) -> RealField:
    """Advance the inviscid Burgers flow by ``dt``.

    ``nsteps`` overrides the CFL rule for the internal step count; it exists
    for refinement studies.

    Raises
    ------
    BlowupDetected
        If the ``H^guard_sigma`` norm exceeds ``blowup_threshold`` times its
        initial value.
    """
    cfg = cfg or BurgersConfig()
    if not np.isfinite(dt) or dt < 0:
        raise ValueError(f"burgers_step needs a finite dt >= 0, got {dt}")
    if dt == 0:
        return u
    grid = u.grid
    m = internal_steps(u, dt, cfg) if nsteps is None else int(nsteps)
    if m < 1:
        raise ValueError("nsteps must be >= 1")
    h = dt / m

    ik = 1j * grid.xis
    ik[grid.nyquist_index] = 0.0
    mask = grid.dealias_mask.astype(float) if cfg.dealias_on else None
    weights = bracket(grid.xis) ** (2 * cfg.guard_sigma)
    norm0 = _hs_norm(u.samples, weights, grid.L)
    limit = cfg.blowup_threshold * norm0

    v = u.samples.copy()
    for step in range(m):
        k1 = burgers_rhs(v, ik, mask)
        k2 = burgers_rhs(v + 0.5 * h * k1, ik, mask)
        k3 = burgers_rhs(v + 0.5 * h * k2, ik, mask)
        k4 = burgers_rhs(v + h * k3, ik, mask)
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if norm0 > 0:
            norm = _hs_norm(v, weights, grid.L)
            if not math.isfinite(norm) or norm > limit:
                raise BlowupDetected(
                    f"H^{cfg.guard_sigma:g} norm grew from {norm0:.6g} to {norm:.6g} "
                    f"after internal step {step + 1}/{m} of a Burgers substep (dt={dt:g})",
                    norm=norm,
                )

    if cfg.filter_strength > 0:
        mmax = grid.n / 2
        damp = np.exp(-cfg.filter_strength * (np.abs(grid.modes) / mmax) ** cfg.filter_order)
        v = np.fft.ifft(damp * np.fft.fft(v)).real
    return RealField(grid, v)
