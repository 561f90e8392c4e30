"""Convergence-order measurement and numerical checks of the bilinear estimates.

Errors of a split trajectory are measured against :mod:`opsplit.reference`
in discrete ``H^sigma`` norms. ``convergence_study`` records, for every step
size, the error at the final time and the maximum over all ``t_n``; the fit
uses the larger of the two (the max over ``t_n``) unless told otherwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FitUnreliable
from .reference import reference_states
from .spectral import Grid, RealField, bracket, sobolev_norm
from .splitting import SchemeConfig, composite_step, evolve, step_count

__all__ = [
    "ConvergenceReport",
    "LocalOrderReport",
    "InequalityReport",
    "fit_loglog",
    "global_error",
    "convergence_study",
    "local_error_order",
    "commutator_terms",
    "verify_commutator",
    "bilinear_terms",
    "verify_bilinear",
    "random_trig_polynomial",
    "inequality_scan",
    "ADMIT_FACTOR",
    "REF_DIVISOR",
]

ADMIT_FACTOR = 10.0
REF_DIVISOR = 64
ROUNDOFF = 64 * np.finfo(float).eps


def fit_loglog(dts, errors) -> tuple[float, float]:
    """Least-squares slope and r^2 of ``log2(error)`` against ``log2(dt)``."""
    x = np.log2(np.asarray(dts, dtype=float))
    y = np.log2(np.asarray(errors, dtype=float))
    if x.size < 2:
        return float("nan"), float("nan")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def _key(sigma: float) -> str:
    return format(float(sigma), "g")


# --- global error ---------------------------------------------------------


def _reference_run(cfg: SchemeConfig, u0: RealField, dt_ref: float, stride: int, nsteps: int):
    return reference_states(
        u0,
        cfg.symbol,
        nsteps,
        dt_ref,
        nonlinearity_on=not cfg.burgers_identity,
        record_every=stride,
        blowup_threshold=cfg.burgers.blowup_threshold,
        guard_sigma=cfg.burgers.guard_sigma,
    )


def global_error(
    cfg: SchemeConfig,
    u0: RealField,
    sigmas,
    dt_ref: float | None = None,
    over: str = "endpoint",
) -> list[tuple[float, float]]:
    """``[(sigma, error)]`` between the split solution and the reference.

    ``over="endpoint"`` compares at ``T_N = N dt``; ``over="sup"`` takes the
    maximum over every ``t_n``. ``dt_ref`` defaults to ``dt / 64`` and must
    divide ``dt``.
    """
    dt_ref = cfg.dt / REF_DIVISOR if dt_ref is None else dt_ref
    ratio = cfg.dt / dt_ref
    stride = round(ratio)
    if stride < 1 or not math.isclose(ratio, stride, rel_tol=1e-9):
        raise ValueError(f"dt_ref={dt_ref} must divide dt={cfg.dt}")
    traj = evolve(u0, cfg)
    N = len(traj) - 1
    if over == "endpoint":
        refs = _reference_run(cfg, u0, dt_ref, None, N * stride)
        pairs = [(traj.final, refs[-1])]
    elif over == "sup":
        refs = _reference_run(cfg, u0, dt_ref, stride, N * stride)
        pairs = list(zip(traj.states, refs))
    else:
        raise ValueError(f"over must be 'endpoint' or 'sup', got {over!r}")
    return [
        (float(s), max(sobolev_norm(a - b, s) for a, b in pairs)) for s in sigmas
    ]


# --- convergence study ------------------------------------------------------


@dataclass
class ConvergenceReport:
    """Errors per (dt, sigma) with fitted log-log slopes.

    ``endpoint`` and ``sup`` hold the two error measures; ``errors`` is the
    one used for fitting (see ``measure``).
    """

    scheme: str
    order: str
    symbol: str
    sigmas: list
    dts: list
    endpoint: dict
    sup: dict
    measure: str
    reference_floor: dict
    admitted: dict
    slopes: dict = field(default_factory=dict)
    r2: dict = field(default_factory=dict)
    degenerate: bool = False
    max_imag_residue: float = 0.0

    @property
    def errors(self) -> dict:
        return self.sup if self.measure == "sup" else self.endpoint

    def rows(self):
        for i, dt in enumerate(self.dts):
            for s in self.sigmas:
                yield dt, s, self.errors[s][i], self.admitted[s][i]

    def to_csv(self) -> str:
        lines = ["dt,sigma,error,admitted"]
        for dt, s, err, ok in self.rows():
            lines.append(
                f"{dt:.17g},{s:.17g},{err:.17g},{int(bool(ok))}"
            )
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        lines = [
            f"scheme={self.scheme}",
            f"order={self.order}",
            f"symbol={self.symbol}",
            f"measure={self.measure}",
            f"dts={','.join(format(d, '.17g') for d in self.dts)}",
            f"degenerate={str(self.degenerate).lower()}",
        ]
        for s in self.sigmas:
            k = _key(s)
            lines.append(f"slope_{k}={self.slopes.get(s, float('nan')):.17g}")
            lines.append(f"r2_{k}={self.r2.get(s, float('nan')):.17g}")
            lines.append(f"reference_floor_{k}={self.reference_floor[s]:.17g}")
            lines.append(f"admitted_{k}={sum(self.admitted[s])}")
        return "\n".join(lines) + "\n"


def _check_dts(dts) -> list[float]:
    dts = sorted((float(d) for d in dts), reverse=True)
    if len(dts) < 3:
        raise ValueError("need at least 3 step sizes")
    if any(d <= 0 for d in dts) or len(set(dts)) != len(dts):
        raise ValueError("step sizes must be positive and distinct")
    finest = dts[-1]
    for d in dts:
        r = d / finest
        if not math.isclose(r, round(r), rel_tol=1e-9):
            raise ValueError(f"dt={d} is not an integer multiple of the finest dt={finest}")
    return dts


def _split_errors(cfg, u0, refs, stride_of, sigmas):
    traj = evolve(u0, cfg)
    stride = stride_of(cfg.dt)
    end = {}
    sup = {}
    for s in sigmas:
        errs = [
            sobolev_norm(state - refs[i * stride], s)
            for i, state in enumerate(traj.states)
        ]
        end[s] = errs[-1]
        sup[s] = max(errs)
    return end, sup, float(np.max(traj.imag_residue))


def convergence_study(
    base_cfg: SchemeConfig,
    u0: RealField,
    dts,
    sigmas=(0.0,),
    dt_ref: float | None = None,
    measure: str = "sup",
    allow_degenerate: bool = False,
    workers: int | None = None,
) -> ConvergenceReport:
    """Measure global errors over a dyadic family of step sizes and fit orders.

    One reference run at ``dt_ref`` (default ``min(dts) / 64``) provides the
    exact solution at every ``t_n`` of every step size. Its error floor is
    estimated by comparison with a run at ``2 dt_ref`` (RK4, so divided by
    15), bounded below by a roundoff level; points within ``10x`` of the
    floor are excluded from the fit.

    Raises
    ------
    FitUnreliable
        If fewer than three points are admitted for some sigma and
        ``allow_degenerate`` is False.
    """
    if measure not in ("sup", "endpoint"):
        raise ValueError(f"measure must be 'sup' or 'endpoint', got {measure!r}")
    sigmas = [float(s) for s in sigmas]
    dts = _check_dts(dts)
    finest = dts[-1]
    dt_ref = finest / REF_DIVISOR if dt_ref is None else float(dt_ref)
    base_stride = round(finest / dt_ref)
    if not math.isclose(finest / dt_ref, base_stride, rel_tol=1e-9):
        raise ValueError(f"dt_ref={dt_ref} must divide the finest dt={finest}")

    def stride_of(dt):
        return round(dt / finest)

    horizon = max(step_count(base_cfg.T, d) * stride_of(d) for d in dts)
    total = horizon * base_stride
    refs = _reference_run(base_cfg, u0, dt_ref, base_stride, total)

    # Floor estimate: compare with a run at 2*dt_ref over the same horizon.
    if total % 2:
        raise ValueError("reference step count must be even; choose dt_ref = finest dt / even")
    coarse = _reference_run(base_cfg, u0, 2 * dt_ref, None, total // 2)[-1]
    fine_at_same = refs[-1]
    floor = {}
    for s in sigmas:
        richardson = sobolev_norm(fine_at_same - coarse, s) / 15.0
        floor[s] = max(richardson, ROUNDOFF * sobolev_norm(refs[-1], s))

    cfgs = [base_cfg.with_dt(d) for d in dts]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _split_errors(c, u0, refs, stride_of, sigmas), cfgs))
    else:
        results = [_split_errors(c, u0, refs, stride_of, sigmas) for c in cfgs]

    endpoint = {s: [r[0][s] for r in results] for s in sigmas}
    sup = {s: [r[1][s] for r in results] for s in sigmas}
    report = ConvergenceReport(
        scheme=base_cfg.scheme,
        order=base_cfg.order,
        symbol=base_cfg.symbol.label,
        sigmas=sigmas,
        dts=dts,
        endpoint=endpoint,
        sup=sup,
        measure=measure,
        reference_floor=floor,
        admitted={},
        max_imag_residue=max(r[2] for r in results),
    )
    for s in sigmas:
        errs = report.errors[s]
        report.admitted[s] = [bool(e > ADMIT_FACTOR * floor[s]) for e in errs]
        pts = [(d, e) for d, e, ok in zip(dts, errs, report.admitted[s]) if ok]
        if len(pts) < 3:
            report.degenerate = True
            continue
        report.slopes[s], report.r2[s] = fit_loglog(*zip(*pts))
    if report.degenerate and not allow_degenerate:
        raise FitUnreliable(
            f"fewer than 3 admitted points for {base_cfg.scheme}/{base_cfg.symbol.label}; "
            f"errors sit at the reference floor"
        )
    return report


# --- local error ---------------------------------------------------------------


@dataclass
class LocalOrderReport:
    scheme: str
    order: str
    symbol: str
    sigma: float
    dts: list
    errors: list
    slope: float = float("nan")
    r2: float = float("nan")

    def to_csv(self) -> str:
        lines = ["dt,sigma,error,admitted"]
        for dt, e in zip(self.dts, self.errors):
            lines.append(f"{dt:.17g},{self.sigma:.17g},{e:.17g},1")
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        k = _key(self.sigma)
        return (
            f"scheme={self.scheme}\norder={self.order}\nsymbol={self.symbol}\n"
            f"slope_{k}={self.slope:.17g}\nr2_{k}={self.r2:.17g}\n"
        )


def local_error_order(
    base_cfg: SchemeConfig,
    u0: RealField,
    dts,
    sigma: float = 0.0,
    refine: int = 256,
    allow_degenerate: bool = False,
) -> LocalOrderReport:
    """One composite step per ``dt`` against a reference at ``dt / refine``."""
    dts = _check_dts(dts)
    errors = []
    for dt in dts:
        cfg = replace(base_cfg, dt=dt, T=max(base_cfg.T, dt))
        approx = composite_step(u0, cfg)
        exact = _reference_run(cfg, u0, dt / refine, None, refine)[-1]
        errors.append(sobolev_norm(approx - exact, sigma))
    report = LocalOrderReport(
        base_cfg.scheme, base_cfg.order, base_cfg.symbol.label, float(sigma), dts, errors
    )
    scale = max(sobolev_norm(u0, sigma), 1.0)
    usable = [(d, e) for d, e in zip(dts, errors) if e > ADMIT_FACTOR * ROUNDOFF * scale]
    if len(usable) < 3:
        if not allow_degenerate:
            raise FitUnreliable("local errors sit at roundoff; no order can be fitted")
        return report
    report.slope, report.r2 = fit_loglog(*zip(*usable))
    return report


# --- bilinear estimates --------------------------------------------------------


def _padded_coeffs(u: RealField, limit_fraction: float = 0.25) -> tuple[np.ndarray, Grid, int]:
    """Coefficients of ``u`` zero-padded onto a grid twice as fine.

    Products of two such fields are then computed without aliasing. Also
    returns the highest live mode number.
    """
    grid = u.grid
    c = np.fft.fft(u.samples) / grid.n
    c[grid.nyquist_index] = 0.0
    live = np.abs(c) > 1e-13 * max(float(np.max(np.abs(c))), 1e-300)
    top = int(np.max(np.abs(grid.modes[live]), initial=0))
    if top > limit_fraction * grid.n:
        raise ValueError(
            f"field is not band-limited to |m| <= n/4 (n={grid.n}); products would alias"
        )
    c[~live] = 0.0
    fine = Grid(2 * grid.n, grid.L)
    out = np.zeros(fine.n, dtype=complex)
    out[grid.modes % fine.n] = c
    return out, fine, top


def _phys(c: np.ndarray) -> np.ndarray:
    return np.fft.ifft(c * c.size).real


def _spec(v: np.ndarray, grid: Grid, band: int) -> np.ndarray:
    """Forward transform restricted to the exact support ``|m| <= band``."""
    c = np.fft.fft(v) / v.size
    c[np.abs(grid.modes) > band] = 0.0
    return c


def _norm(c: np.ndarray, grid: Grid, s: float) -> float:
    return math.sqrt(grid.L * float(np.sum(bracket(grid.xis) ** (2 * s) * np.abs(c) ** 2)))


def _check_sigma(sigma: float):
    if not sigma > 1.5:
        raise ValueError(f"sigma must exceed 3/2, got {sigma}")


def commutator_terms(f: RealField, g: RealField, s: float, sigma: float = 1.6):
    """LHS and RHS of the commutator estimate for ``D = d/dx <d/dx>^s``.

    LHS = ``||D(fg) - (Df) g - f (Dg)||_{L^2}``;
    RHS = ``||f||_{H^s} ||g||_{H^sigma} + ||f||_{H^sigma} ||g||_{H^s}``.
    """
    _check_sigma(sigma)
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    cf, fine, mf = _padded_coeffs(f)
    cg, _, mg = _padded_coeffs(g)
    band = mf + mg
    D = 1j * fine.xis * bracket(fine.xis) ** s
    fv, gv = _phys(cf), _phys(cg)
    comm = (
        D * _spec(fv * gv, fine, band)
        - _spec(_phys(D * cf) * gv, fine, band)
        - _spec(fv * _phys(D * cg), fine, band)
    )
    lhs = _norm(comm, fine, 0.0)
    rhs = _norm(cf, fine, s) * _norm(cg, fine, sigma) + _norm(cf, fine, sigma) * _norm(cg, fine, s)
    return lhs, rhs


def bilinear_terms(f: RealField, g: RealField | None, s: float, sigma: float = 1.6, variant: str = "A"):
    """LHS and RHS of the ``H^s`` energy estimates for ``(fg)_x`` and ``f f_x``.

    Variant A: ``|<f, (fg)_x>_{H^s}|`` against ``||f||_{H^s}^2 ||g||_{H^{s+1}}``.
    Variant B: ``|<f, f f_x>_{H^s}|`` against ``||f||_{H^s}^2 ||f||_{H^sigma}``
    (``g`` is ignored).
    """
    _check_sigma(sigma)
    cf, fine, mf = _padded_coeffs(f)
    ik = 1j * fine.xis
    weights = bracket(fine.xis) ** (2 * s)
    if variant == "A":
        if g is None:
            raise ValueError("variant A needs g")
        if f.grid != g.grid:
            raise ValueError("fields live on different grids")
        cg, _, mg = _padded_coeffs(g)
        prod = ik * _spec(_phys(cf) * _phys(cg), fine, mf + mg)
        rhs = _norm(cf, fine, s) ** 2 * _norm(cg, fine, s + 1)
    elif variant == "B":
        prod = ik * _spec(_phys(cf) ** 2, fine, 2 * mf)
        rhs = _norm(cf, fine, s) ** 2 * _norm(cf, fine, sigma)
    else:
        raise ValueError(f"variant must be 'A' or 'B', got {variant!r}")
    # <f, h>_{H^s} = L sum <xi>^{2s} f_hat conj(h_hat), with h = (fg)_x or (f^2)_x / 2
    inner = fine.L * float(np.sum(weights * cf * np.conj(prod)).real)
    if variant == "B":
        inner *= 0.5
    return abs(inner), rhs


def _ratio(lhs: float, rhs: float, what: str) -> float:
    if rhs == 0.0:
        if lhs > 0.0:
            raise ValueError(f"{what}: RHS vanishes but LHS = {lhs:g}; numerical setup error")
        return 0.0
    return lhs / rhs


def verify_commutator(f: RealField, g: RealField, s: float, sigma: float = 1.6) -> float:
    return _ratio(*commutator_terms(f, g, s, sigma), "commutator")


def verify_bilinear(
    f: RealField, g: RealField | None, s: float, sigma: float = 1.6, variant: str = "A"
) -> float:
    return _ratio(*bilinear_terms(f, g, s, sigma, variant), f"bilinear {variant}")


def random_trig_polynomial(rng: np.random.Generator, max_mode: int):
    """Random real trig polynomial of degree ``max_mode`` as a callable of x.

    Amplitudes decay like ``(1 + m)^(-q)`` with ``q`` drawn from [0, 3].
    """
    q = rng.uniform(0.0, 3.0)
    m = np.arange(max_mode + 1)
    amp = (1.0 + m) ** (-q)
    a = rng.standard_normal(max_mode + 1) * amp
    b = rng.standard_normal(max_mode + 1) * amp
    b[0] = 0.0

    def func(x):
        x = np.asarray(x)[..., None]
        return np.sum(a * np.cos(m * x) + b * np.sin(m * x), axis=-1)

    return func


@dataclass
class InequalityReport:
    inequality: str
    trials: int
    s: float
    sigma: float
    n: int
    max_ratio: float
    max_ratio_doubled: float
    ratio_stability: float

    def to_text(self) -> str:
        return (
            "inequality,trials,max_ratio,ratio_stability\n"
            f"{self.inequality},{self.trials},{self.max_ratio:.17g},{self.ratio_stability:.17g}\n"
        )


INEQUALITIES = ("commutator", "bilinear_A", "bilinear_B")


def inequality_scan(
    inequality: str,
    trials: int = 200,
    s: float = 2.0,
    sigma: float = 1.6,
    n: int = 64,
    max_mode: int | None = None,
    seed: int = 0,
) -> InequalityReport:
    """Largest LHS/RHS over random trig-polynomial pairs, at ``n`` and ``2n``."""
    if inequality not in INEQUALITIES:
        raise ValueError(f"inequality must be one of {INEQUALITIES}, got {inequality!r}")
    max_mode = max_mode if max_mode is not None else max(1, n // 4 - 1)

    def ratio(fun_f, fun_g, grid):
        f, g = grid.field(fun_f), grid.field(fun_g)
        if inequality == "commutator":
            return verify_commutator(f, g, s, sigma)
        return verify_bilinear(f, g, s, sigma, inequality[-1])

    rng = np.random.default_rng(seed)
    pairs = [
        (random_trig_polynomial(rng, max_mode), random_trig_polynomial(rng, max_mode))
        for _ in range(trials)
    ]
    results = []
    for grid in (Grid(n), Grid(2 * n)):
        results.append(max(ratio(a, b, grid) for a, b in pairs))
    coarse, fine = results
    stability = abs(fine - coarse) / coarse if coarse > 0 else abs(fine - coarse)
    return InequalityReport(inequality, trials, s, sigma, n, coarse, fine, stability)
