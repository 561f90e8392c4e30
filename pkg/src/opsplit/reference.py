"""Unsplit integrating-factor RK4 solver for ``u_t + u u_x - K u = 0``.

With ``w = exp(-k t) u_hat`` the linear part is removed exactly and
``w_t = -exp(-k t) F[P(u u_x)]`` is integrated by classical RK4. The update
is written in the ``u_hat`` frame so only ``exp(+k h/2)`` factors appear;
for dissipative symbols these are bounded by one.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import BlowupDetected
from .spectral import RealField, bracket
from .splitting import step_count
from .symbols import Symbol

__all__ = ["reference_solve", "reference_states"]


def reference_states(
    u0: RealField,
    sym: Symbol,
    nsteps: int,
    dt_ref: float,
    nonlinearity_on: bool = True,
    record_every: int | None = None,
    blowup_threshold: float = 10.0,
    guard_sigma: float = 2.0,
) -> list[RealField]:
    """Take ``nsteps`` steps of size ``dt_ref``.

    Returns the states after every ``record_every`` steps (including the
    initial state), or just ``[u(nsteps * dt_ref)]`` when ``record_every``
    is None.
    """
    if nsteps < 0:
        raise ValueError("nsteps must be nonnegative")
    if not (math.isfinite(dt_ref) and dt_ref > 0):
        raise ValueError(f"dt_ref must be positive, got {dt_ref}")
    grid = u0.grid
    n = grid.n
    xis = grid.xis
    ik = 1j * xis
    ik[grid.nyquist_index] = 0.0
    mask = grid.dealias_mask
    half = np.exp(sym(xis) * (0.5 * dt_ref))
    full = half * half
    h = dt_ref

    def nonlinear(c):
        u = np.fft.ifft(c).real
        ux = np.fft.ifft(ik * c).real
        out = np.fft.fft(u * ux)
        out[~mask] = 0.0
        return -out

    c = np.fft.fft(u0.samples)
    c[grid.nyquist_index] = 0.0
    weights = bracket(xis) ** (2 * guard_sigma)
    norm0 = math.sqrt(float(np.sum(weights * np.abs(c) ** 2)))
    limit = blowup_threshold * norm0

    def to_field(coeffs):
        return RealField(grid, np.fft.ifft(coeffs).real)

    if not nonlinearity_on:
        # closed form; repeated multiplication would accumulate phase roundoff
        k = sym(xis)
        marks = range(0, nsteps + 1, record_every) if record_every else [nsteps]
        return [to_field(np.exp(k * (m * h)) * c) for m in marks]

    recorded = [to_field(c)] if record_every else []
    for step in range(1, nsteps + 1):
        a = nonlinear(c)
        b = nonlinear(half * (c + 0.5 * h * a))
        cc = nonlinear(half * c + 0.5 * h * b)
        d = nonlinear(full * c + h * half * cc)
        c = full * c + (h / 6.0) * (full * a + 2.0 * half * (b + cc) + d)
        c[grid.nyquist_index] = 0.0
        if norm0 > 0:
            norm = math.sqrt(float(np.sum(weights * np.abs(c) ** 2)))
            if not math.isfinite(norm) or norm > limit:
                raise BlowupDetected(
                    f"reference H^{guard_sigma:g} norm grew from {norm0 / n:.6g} "
                    f"to {norm / n:.6g} at step {step}",
                    norm=norm / n,
                    step=step,
                )
        if record_every and step % record_every == 0:
            recorded.append(to_field(c))
    if not record_every:
        recorded.append(to_field(c))
    return recorded


def reference_solve(
    u0: RealField,
    sym: Symbol,
    T: float,
    dt_ref: float,
    nonlinearity_on: bool = True,
    **guard,
) -> RealField:
    """Solve the full equation up to ``T_N = floor(T/dt_ref) * dt_ref``."""
    if not (math.isfinite(T) and T >= 0):
        raise ValueError(f"T must be nonnegative, got {T}")
    if dt_ref > T * (1 + 1e-12) and T > 0:
        raise ValueError(f"dt_ref={dt_ref} exceeds T={T}")
    nsteps = step_count(T, dt_ref) if T > 0 else 0
    return reference_states(u0, sym, nsteps, dt_ref, nonlinearity_on, **guard)[-1]
