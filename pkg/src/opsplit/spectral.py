"""Periodic Fourier substrate: grid, transforms, multipliers, Sobolev norms.

Coefficients are stored in numpy FFT order (``numpy.fft.fftfreq``) and are
normalised so that ``c_m = (1/n) sum_j u(x_j) exp(-i xi_m x_j)``; a trig
polynomial ``u = sum_m c_m exp(i xi_m x)`` therefore has its true Fourier
coefficients. The Nyquist coefficient (m = -n/2) is always held at zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

__all__ = [
    "Grid",
    "RealField",
    "SpectralField",
    "make_grid",
    "forward",
    "inverse",
    "transform",
    "apply_multiplier",
    "sobolev_norm",
    "sobolev_inner",
    "dealias",
    "bracket",
    "imag_residue",
    "write_real_csv",
    "read_real_csv",
    "write_spectral_csv",
    "read_spectral_csv",
]

MIN_POINTS = 8


def bracket(xi):
    """Japanese bracket ``(1 + xi**2) ** 0.5``."""
    return np.sqrt(1.0 + np.square(xi))


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[0, L)`` with ``n`` points."""

    n: int
    L: float = 2 * np.pi

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise ValueError(f"n must be an integer, got {self.n!r}")
        if self.n < MIN_POINTS or self.n % 2:
            raise ValueError(f"n must be even and >= {MIN_POINTS}, got {self.n}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive, got {self.L}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "L", float(self.L))

    @cached_property
    def xs(self) -> np.ndarray:
        return np.arange(self.n) * (self.L / self.n)

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode numbers m in FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)

    @cached_property
    def xis(self) -> np.ndarray:
        """Wavenumbers ``2 pi m / L`` in FFT order."""
        return self.modes * (2 * np.pi / self.L)

    @cached_property
    def nyquist_index(self) -> int:
        return self.n // 2

    @property
    def dxi(self) -> float:
        return 2 * np.pi / self.L

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        return np.abs(self.modes) <= self.n / 3

    def sobolev_weights(self, s: float) -> np.ndarray:
        """``<xi_m>^(2s)`` for every lattice point."""
        return bracket(self.xis) ** (2 * s)

    def zeros(self) -> "RealField":
        return RealField(self, np.zeros(self.n))

    def field(self, func: Callable[[np.ndarray], np.ndarray]) -> "RealField":
        """Sample ``func`` on the grid."""
        return RealField(self, np.asarray(func(self.xs), dtype=float))


def make_grid(n: int, L: float = 2 * np.pi) -> Grid:
    return Grid(n, L)


@dataclass(frozen=True, eq=False)
class RealField:
    """Real samples ``u(x_j)`` on a grid."""

    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.shape != (self.grid.n,):
            raise ValueError(
                f"expected {self.grid.n} samples, got shape {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def _check(self, other: "RealField"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "RealField") -> "RealField":
        self._check(other)
        return RealField(self.grid, self.samples + other.samples)

    def __sub__(self, other: "RealField") -> "RealField":
        self._check(other)
        return RealField(self.grid, self.samples - other.samples)

    def __mul__(self, scalar: float) -> "RealField":
        return RealField(self.grid, self.samples * scalar)

    __rmul__ = __mul__

    def mean(self) -> float:
        """Spatial mean ``(1/L) int u dx``."""
        return float(np.mean(self.samples))

    def integral(self) -> float:
        return float(np.sum(self.samples) * self.grid.L / self.grid.n)

    def shift(self, cells: int) -> "RealField":
        """Translate by whole grid cells: ``u(x - cells*dx)``."""
        return RealField(self.grid, np.roll(self.samples, cells))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients in FFT order with the Nyquist entry pinned to zero."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.shape != (self.grid.n,):
            raise ValueError(
                f"expected {self.grid.n} coefficients, got shape {coeffs.shape}"
            )
        coeffs[self.grid.nyquist_index] = 0.0
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    def coefficient(self, m: int) -> complex:
        """Coefficient of mode ``m`` (``-n/2 <= m < n/2``)."""
        n = self.grid.n
        if not -n // 2 <= m < n // 2:
            raise IndexError(f"mode {m} outside lattice of size {n}")
        return complex(self.coeffs[m % n])

    def hermitian_defect(self) -> float:
        """``max |c_{-m} - conj(c_m)|``."""
        c = self.coeffs
        mirrored = np.roll(c[::-1], 1)
        return float(np.max(np.abs(mirrored - np.conj(c)), initial=0.0))

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return SpectralField(self.grid, self.coeffs - other.coeffs)


def forward(u: RealField) -> SpectralField:
    return SpectralField(u.grid, np.fft.fft(u.samples) / u.grid.n)


def inverse(f: SpectralField) -> RealField:
    """Inverse transform; the (roundoff-level) imaginary part is discarded."""
    return RealField(f.grid, np.fft.ifft(f.coeffs * f.grid.n).real)


def imag_residue(f: SpectralField) -> float:
    """Imaginary part of the inverse transform relative to ``max |c_m|``.

    Measures how far a coefficient set is from representing a real field.
    """
    scale = float(np.max(np.abs(f.coeffs), initial=0.0))
    if scale == 0.0:
        return 0.0
    values = np.fft.ifft(f.coeffs * f.grid.n)
    return float(np.max(np.abs(values.imag)) / scale)


def transform(field, direction: str = "forward"):
    """Dispatching wrapper around :func:`forward` and :func:`inverse`."""
    if direction == "forward":
        if not isinstance(field, RealField):
            raise TypeError("forward transform expects a RealField")
        return forward(field)
    if direction == "inverse":
        if not isinstance(field, SpectralField):
            raise TypeError("inverse transform expects a SpectralField")
        return inverse(field)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def _as_spectral(u) -> SpectralField:
    if isinstance(u, SpectralField):
        return u
    if isinstance(u, RealField):
        return forward(u)
    raise TypeError(f"expected RealField or SpectralField, got {type(u).__name__}")


def apply_multiplier(f: SpectralField, m) -> SpectralField:
    """Multiply coefficients by ``m(xi)``.

    ``m`` is either a callable evaluated on the wavenumber lattice or an
    array of values already in FFT order.
    """
    values = m(f.grid.xis) if callable(m) else m
    values = np.broadcast_to(np.asarray(values, dtype=complex), f.coeffs.shape)
    # Nyquist entry is zeroed anyway, so only the others must be finite.
    finite = np.isfinite(values)
    finite[f.grid.nyquist_index] = True
    if not np.all(finite):
        bad = f.grid.xis[~finite]
        raise ValueError(f"multiplier is not finite at xi = {bad[:5]}")
    out = values * f.coeffs
    out[f.grid.nyquist_index] = 0.0
    return SpectralField(f.grid, out)


def sobolev_norm(u, s: float) -> float:
    """Discrete ``H^s`` norm ``(L sum_m <xi_m>^(2s) |c_m|^2)^(1/2)``."""
    f = _as_spectral(u)
    total = np.sum(f.grid.sobolev_weights(s) * np.abs(f.coeffs) ** 2)
    return float(np.sqrt(f.grid.L * total))


def sobolev_inner(u, v, s: float) -> float:
    """Real part of the discrete ``H^s`` inner product."""
    f, g = _as_spectral(u), _as_spectral(v)
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    total = np.sum(f.grid.sobolev_weights(s) * f.coeffs * np.conj(g.coeffs))
    return float(f.grid.L * total.real)


def dealias(f: SpectralField) -> SpectralField:
    """2/3 rule: zero every mode with ``|m| > n/3``."""
    return SpectralField(f.grid, np.where(f.grid.dealias_mask, f.coeffs, 0.0))


# --- snapshots -----------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_real_csv(u: RealField, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "u"])
        for x, value in zip(u.grid.xs, u.samples):
            writer.writerow([_fmt(x), _fmt(value)])


def read_real_csv(path, L: float | None = None) -> RealField:
    """Load a ``x,u`` snapshot. ``L`` defaults to ``n * dx`` from the file."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(rows[0]) != {"x", "u"}:
        raise ValueError(f"{Path(path).name}: expected header 'x,u'")
    xs = np.array([float(r["x"]) for r in rows])
    samples = np.array([float(r["u"]) for r in rows])
    n = len(samples)
    if L is None:
        L = (xs[1] - xs[0]) * n if n > 1 else 2 * np.pi
    return RealField(Grid(n, L), samples)


def write_spectral_csv(f: SpectralField, path) -> None:
    order = np.argsort(f.grid.modes)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["m", "re", "im"])
        for idx in order:
            c = f.coeffs[idx]
            writer.writerow([int(f.grid.modes[idx]), _fmt(c.real), _fmt(c.imag)])


def read_spectral_csv(path, L: float = 2 * np.pi) -> SpectralField:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(rows[0]) != {"m", "re", "im"}:
        raise ValueError(f"{Path(path).name}: expected header 'm,re,im'")
    grid = Grid(len(rows), L)
    coeffs = np.zeros(grid.n, dtype=complex)
    for r in rows:
        coeffs[int(r["m"]) % grid.n] = complex(float(r["re"]), float(r["im"]))
    return SpectralField(grid, coeffs)
