"""Fourier-multiplier symbols k(xi) and a lattice checker for their hypotheses.

The checked hypotheses are, for all real xi and eta,

* ``Re k(xi) <= 0`` and ``k(-xi) = conj(k(xi))``;
* ``|k(xi)| <= C <xi>^p``;
* ``|(xi+eta) k(xi+eta) - eta k(eta) - xi k(xi)| <= C (|xi| <eta>^p + |eta| <xi>^p)``.

A finite scan cannot prove these; :func:`verify_conditions` reports the
empirical constants so that their boundedness can be judged by refinement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .spectral import bracket

__all__ = [
    "Symbol",
    "ConditionReport",
    "CATALOG",
    "make_symbol",
    "verify_conditions",
    "tanh_ratio",
]

TOL = 1e-12
SERIES_CUTOFF = 1e-8


def tanh_ratio(xi):
    """``tanh(xi)/xi`` with the removable singularity at 0 filled in."""
    xi = np.asarray(xi, dtype=float)
    small = np.abs(xi) < SERIES_CUTOFF
    safe = np.where(small, 1.0, xi)
    return np.where(small, 1.0 - xi**2 / 3.0, np.tanh(safe) / safe)


@dataclass(frozen=True)
class Symbol:
    """A multiplier ``k(xi)`` with its declared growth order ``p``."""

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    p: float
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.asarray(self.func(xi), dtype=complex)

    eval = __call__

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        extra = ",".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))
        return f"{self.name}({extra})"

    def is_dissipative(self, xis) -> bool:
        """True if ``Re k`` is strictly negative somewhere on ``xis``."""
        return bool(np.any(self(xis).real < -TOL))


def _zero(xi):
    return np.zeros_like(xi, dtype=complex)


def _kdv(xi):
    return -1j * xi**3


def _bo(xi):
    return 1j * xi * np.abs(xi)


def _burgers(xi):
    return -(xi**2) + 0j


def _fractional(a):
    def k(xi):
        ax = np.abs(xi)
        if a == 1:
            power = np.ones_like(ax)
        else:
            # |xi|^(a-1) -> 0 as xi -> 0 for a > 1
            power = np.where(ax == 0, 0.0, ax ** (a - 1))
        return -1j * xi * power

    return k


def _whitham(xi):
    return 1j * xi * np.sqrt(tanh_ratio(xi))


def _extended_whitham(beta):
    def k(xi):
        return 1j * xi * np.sqrt(1.0 + beta * xi**2) * np.sqrt(tanh_ratio(xi))

    return k


CATALOG = ("zero", "kdv", "bo", "burgers", "fractional", "whitham", "extended_whitham")


def make_symbol(name: str, **params) -> Symbol:
    """Build a catalog symbol.

    ``fractional`` takes ``a`` in [1, 3] (default 2); ``extended_whitham``
    takes ``beta > 0`` (default 1). Other entries take no parameters.
    """
    name = name.lower().replace("-", "_")
    params = {k: v for k, v in params.items() if v is not None}
    allowed = {"fractional": {"a"}, "extended_whitham": {"beta"}}.get(name, set())
    unknown = set(params) - allowed
    if name not in CATALOG:
        raise ValueError(f"unknown symbol {name!r}; choose from {', '.join(CATALOG)}")
    if unknown:
        raise ValueError(f"symbol {name!r} does not accept parameters {sorted(unknown)}")

    if name == "zero":
        return Symbol("zero", _zero, 0.0)
    if name == "kdv":
        return Symbol("kdv", _kdv, 3.0)
    if name == "bo":
        return Symbol("bo", _bo, 2.0)
    if name == "burgers":
        return Symbol("burgers", _burgers, 2.0)
    if name == "whitham":
        return Symbol("whitham", _whitham, 0.5)
    if name == "fractional":
        a = float(params.get("a", 2.0))
        if not 1.0 <= a <= 3.0:
            raise ValueError(f"fractional exponent a must lie in [1, 3], got {a}")
        return Symbol("fractional", _fractional(a), a, {"a": a})
    beta = float(params.get("beta", 1.0))
    if not (np.isfinite(beta) and beta > 0):
        raise ValueError(f"extended_whitham needs beta > 0, got {beta}")
    return Symbol("extended_whitham", _extended_whitham(beta), 1.5, {"beta": beta})


@dataclass
class ConditionReport:
    symbol: str
    p: float
    ximax: float
    nsamples: int
    dissipativity_ok: bool
    symmetry_ok: bool
    growth_constant: float
    cocycle_constant: float
    max_real_part: float
    max_symmetry_defect: float

    @property
    def ok(self) -> bool:
        return (
            self.dissipativity_ok
            and self.symmetry_ok
            and np.isfinite(self.growth_constant)
            and np.isfinite(self.cocycle_constant)
        )

    def to_text(self) -> str:
        def fmt(v):
            if isinstance(v, (bool, np.bool_)):
                return str(bool(v)).lower()
            if isinstance(v, float):
                return format(v, ".17g")
            return str(v)

        keys = [
            "symbol", "p", "ximax", "nsamples", "dissipativity_ok", "symmetry_ok",
            "growth_constant", "cocycle_constant", "max_real_part",
            "max_symmetry_defect",
        ]
        lines = [f"{k}={fmt(getattr(self, k))}" for k in keys]
        lines.append(f"ok={fmt(self.ok)}")
        return "\n".join(lines) + "\n"


def _cocycle_max(sym: Symbol, xi: np.ndarray, k: np.ndarray, chunk: int = 256) -> float:
    p = sym.p
    xk = xi * k
    weight = bracket(xi) ** p
    best = 0.0
    for start in range(0, len(xi), chunk):
        a = xi[start:start + chunk, None]
        num = np.abs(
            (a + xi[None, :]) * sym(a + xi[None, :])
            - xk[None, :]
            - xk[start:start + chunk, None]
        )
        den = np.abs(a) * weight[None, :] + np.abs(xi)[None, :] * weight[start:start + chunk, None]
        mask = den > 0
        if np.any(mask):
            best = max(best, float(np.max(num[mask] / den[mask])))
    return best


def verify_conditions(
    sym: Symbol, ximax: float = 100.0, nsamples: int = 2048, tol: float = TOL
) -> ConditionReport:
    """Scan a uniform lattice on ``[-ximax, ximax]`` for the symbol hypotheses.

    Single points are used for sign, symmetry and growth; all ordered pairs
    for the cocycle bound, skipping the 0/0 pair.
    """
    if not ximax > 0:
        raise ValueError(f"ximax must be positive, got {ximax}")
    if nsamples < 16:
        raise ValueError(f"nsamples must be >= 16, got {nsamples}")

    xi = np.linspace(-ximax, ximax, int(nsamples))
    k = sym(xi)
    if not np.all(np.isfinite(k)):
        raise ValueError(f"symbol {sym.label} is not finite on the lattice")
    kneg = sym(-xi)
    if not np.all(np.isfinite(kneg)):
        raise ValueError(f"symbol {sym.label} is not finite on the lattice")

    scale = 1.0 + np.abs(k)
    max_re = float(np.max(k.real / scale))
    sym_defect = float(np.max(np.abs(kneg - np.conj(k)) / scale))
    growth = float(np.max(np.abs(k) / bracket(xi) ** sym.p))
    cocycle = _cocycle_max(sym, xi, k)

    return ConditionReport(
        symbol=sym.label,
        p=float(sym.p),
        ximax=float(ximax),
        nsamples=int(nsamples),
        dissipativity_ok=max_re <= tol,
        symmetry_ok=sym_defect <= tol,
        growth_constant=growth,
        cocycle_constant=cocycle,
        max_real_part=max_re,
        max_symmetry_defect=sym_defect,
    )
