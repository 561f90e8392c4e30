"""Command-line driver.

Configuration is resolved as defaults < ``--config`` file < ``OPSPLIT_<KEY>``
environment variables < command-line flags. The config file holds one
``key=value`` pair per line; ``#`` starts a comment.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .analysis import (
    INEQUALITIES,
    convergence_study,
    inequality_scan,
    local_error_order,
    verify_bilinear,
    verify_commutator,
)
from .errors import BlowupDetected, FitUnreliable
from .reference import reference_solve
from .spectral import Grid, RealField, forward, read_real_csv, write_real_csv, write_spectral_csv
from .splitting import ORDERS, SchemeConfig, evolve, write_trajectory_csv
from .substeps import BurgersConfig
from .symbols import CATALOG, make_symbol, verify_conditions

ENV_PREFIX = "OPSPLIT_"
COMMANDS = ("run", "converge", "local-order", "verify-symbol", "verify-lemmas")
RUN_SCHEMES = ("godunov", "strang", "reference")
PRESETS = ("sine", "two_mode")
MEASURES = ("sup", "endpoint")

GLOBAL_ORDER = {"godunov": (1.0, 0.2), "strang": (2.0, 0.25)}
LOCAL_ORDER = {"godunov": (2.0, 0.3), "strang": (3.0, 0.3)}
MIN_R2 = 0.99
STABILITY_LIMIT = 0.05


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple:
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(_number(p) for p in parts)


def _number(text: str) -> float:
    text = str(text).strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    if text.lower() in ("2pi", "2*pi"):
        return 2 * math.pi
    return float(text)


def _bool(text) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


@dataclass(frozen=True)
class RunConfig:
    scheme: str = "godunov"
    order: str = "nonlinear_first"
    symbol: str = "kdv"
    beta: float = 1.0
    a: float = 2.0
    n: int = 256
    L: float = 2 * math.pi
    T: float = 1.0
    dt: float = 0.05
    dts: tuple = (0.1, 0.05, 0.025, 0.0125, 0.00625)
    sigmas: tuple = (0.0, 1.0)
    u0: str = "two_mode"
    out: str = "out"
    seed: int = 0
    cfl_safety: float = 0.5
    min_internal_steps: int = 4
    dealias: bool = True
    blowup_threshold: float = 10.0
    dt_ref: float = 0.0
    measure: str = "sup"
    snapshots: bool = False
    ximax: float = 100.0
    samples: int = 2048
    trials: int = 200
    s: float = 2.0
    sigma: float = 1.6
    scan_n: int = 64

    def make_symbol(self):
        if self.symbol == "fractional":
            return make_symbol("fractional", a=self.a)
        if self.symbol == "extended_whitham":
            return make_symbol("extended_whitham", beta=self.beta)
        return make_symbol(self.symbol)

    def burgers(self) -> BurgersConfig:
        return BurgersConfig(
            cfl_safety=self.cfl_safety,
            min_internal_steps=self.min_internal_steps,
            dealias_on=self.dealias,
            blowup_threshold=self.blowup_threshold,
        )

    def scheme_config(self, scheme: str | None = None, dt: float | None = None) -> SchemeConfig:
        return SchemeConfig(
            scheme=scheme or self.scheme,
            order=self.order,
            dt=self.dt if dt is None else dt,
            T=self.T,
            symbol=self.make_symbol(),
            burgers=self.burgers(),
        )

    def initial(self) -> RealField:
        grid = Grid(self.n, self.L)
        k = 2 * math.pi / self.L
        if self.u0 == "sine":
            return grid.field(lambda x: 0.5 * np.sin(k * x))
        if self.u0 == "two_mode":
            return grid.field(lambda x: 0.5 * np.sin(k * x) + 0.25 * np.cos(2 * k * x))
        u = read_real_csv(self.u0, L=self.L)
        if u.grid.n != self.n:
            raise ConfigError(f"u0 snapshot has {u.grid.n} samples but n={self.n}")
        return u


def _int(text) -> int:
    value = _number(text)
    if not float(value).is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


_PARSERS = {
    int: _int,
    float: _number,
    bool: _bool,
    str: lambda t: str(t).strip(),
    tuple: _floats,
}

_CHOICES = {
    "scheme": RUN_SCHEMES,
    "order": ORDERS,
    "symbol": CATALOG,
    "measure": MEASURES,
}

_TYPES = {f.name: type(f.default) for f in fields(RunConfig)}


def _coerce(key: str, value):
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}; accepted keys: {', '.join(_TYPES)}")
    try:
        out = _PARSERS[_TYPES[key]](value)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad value {value!r} for {key!r}: {exc}") from None
    if key in _CHOICES:
        out = out.lower().replace("-", "_") if key != "scheme" else out.lower()
        if out not in _CHOICES[key]:
            raise ConfigError(
                f"bad value {value!r} for {key!r}; accepted values: {{{', '.join(_CHOICES[key])}}}"
            )
    return out


def read_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        values[key] = _coerce(key, value)
    return values


def _validate(cfg: RunConfig) -> RunConfig:
    try:
        Grid(cfg.n, cfg.L)
        cfg.burgers()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not cfg.T > 0:
        raise ConfigError(f"T must be positive, got {cfg.T}")
    if not cfg.dt > 0:
        raise ConfigError(f"dt must be positive, got {cfg.dt}")
    if cfg.dt > cfg.T:
        raise ConfigError(f"dt={cfg.dt} exceeds T={cfg.T}")
    if not cfg.dts or any(d <= 0 or d > cfg.T for d in cfg.dts):
        raise ConfigError("dts must be a nonempty list of step sizes in (0, T]")
    if cfg.u0 not in PRESETS and not Path(cfg.u0).is_file():
        raise ConfigError(f"u0 must be one of {PRESETS} or a readable snapshot path, got {cfg.u0!r}")
    try:
        cfg.make_symbol()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def parse_config(path=None, overrides: dict | None = None, environ=None) -> RunConfig:
    """Merge defaults, file, environment and explicit overrides into a RunConfig."""
    values = {}
    if path is not None:
        values.update(read_config_text(Path(path).read_text()))
    environ = os.environ if environ is None else environ
    for key in _TYPES:
        env_key = ENV_PREFIX + key.upper()
        if env_key in environ:
            values[key] = _coerce(key, environ[env_key])
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = _coerce(key, value)
    return _validate(RunConfig(**values))


# --- commands ------------------------------------------------------------


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _tag(cfg: RunConfig) -> str:
    return cfg.make_symbol().label.replace("(", "_").replace(")", "").replace("=", "").replace(",", "_")


def cmd_run(cfg: RunConfig, out: Path) -> tuple[bool, list[str]]:
    u0 = cfg.initial()
    sym = cfg.make_symbol()
    if cfg.scheme == "reference":
        dt_ref = cfg.dt_ref or cfg.dt
        final = reference_solve(
            u0, sym, cfg.T, dt_ref, blowup_threshold=cfg.blowup_threshold
        )
        lines = [f"scheme=reference", f"symbol={sym.label}", f"dt_ref={_fmt(dt_ref)}"]
    else:
        traj = evolve(u0, cfg.scheme_config())
        write_trajectory_csv(traj, out / "trajectory.csv")
        if cfg.snapshots:
            snaps = out / "snapshots"
            snaps.mkdir(exist_ok=True)
            for i, state in enumerate(traj.states):
                write_spectral_csv(forward(state), snaps / f"step_{i:06d}.csv")
        final = traj.final
        lines = [
            f"scheme={cfg.scheme}",
            f"order={cfg.order}",
            f"symbol={sym.label}",
            f"steps={len(traj) - 1}",
            f"final_time={_fmt(traj.times[-1])}",
            f"l2_drift={_fmt(abs(traj.l2[-1] - traj.l2[0]) / max(traj.l2[0], 1e-300))}",
            f"mean_drift={_fmt(abs(traj.mean[-1] - traj.mean[0]))}",
            f"max_imag_residue={_fmt(np.max(traj.imag_residue))}",
        ]
    write_real_csv(final, out / "final.csv")
    write_spectral_csv(forward(final), out / "final_spectrum.csv")
    return True, lines


def _plot_script(tag: str, sigmas, order: float) -> str:
    plots = ", \\\n     ".join(
        f"'loglog_{tag}_sigma{format(s, 'g')}.dat' using 1:2 with linespoints title 'sigma={format(s, 'g')}'"
        for s in sigmas
    )
    return (
        "# gnuplot script\n"
        "set logscale xy\n"
        "set xlabel 'dt'\nset ylabel 'error'\n"
        f"set title '{tag}'\n"
        "set key left top\n"
        f"plot {plots}, \\\n     x**{order:g} with lines dashtype 2 title 'slope {order:g}'\n"
    )


def cmd_converge(cfg: RunConfig, out: Path) -> tuple[bool, list[str]]:
    if cfg.scheme == "reference":
        raise ConfigError("converge needs scheme godunov or strang")
    report = convergence_study(
        cfg.scheme_config(dt=max(cfg.dts)),
        cfg.initial(),
        cfg.dts,
        cfg.sigmas,
        dt_ref=cfg.dt_ref or None,
        measure=cfg.measure,
    )
    tag = f"{cfg.scheme}_{_tag(cfg)}"
    (out / f"converge_{tag}.csv").write_text(report.to_csv())
    for s in report.sigmas:
        rows = [
            f"{_fmt(d)} {_fmt(e)}"
            for d, e, ok in zip(report.dts, report.errors[s], report.admitted[s])
            if ok
        ]
        (out / f"loglog_{tag}_sigma{format(s, 'g')}.dat").write_text("\n".join(rows) + "\n")
    expected, tol = GLOBAL_ORDER[cfg.scheme]
    (out / f"plot_{tag}.gp").write_text(_plot_script(tag, report.sigmas, expected))
    ok = all(
        abs(report.slopes[s] - expected) <= tol and report.r2[s] >= MIN_R2
        for s in report.sigmas
    )
    lines = report.summary().splitlines()
    lines.append(f"expected_slope={expected:g}+-{tol:g}")
    lines.append(f"pass={str(ok).lower()}")
    return ok, lines


def cmd_local_order(cfg: RunConfig, out: Path) -> tuple[bool, list[str]]:
    if cfg.scheme == "reference":
        raise ConfigError("local-order needs scheme godunov or strang")
    expected, tol = LOCAL_ORDER[cfg.scheme]
    lines = []
    ok = True
    tag = f"{cfg.scheme}_{_tag(cfg)}"
    csv_rows = ["dt,sigma,error,admitted"]
    for s in cfg.sigmas:
        rep = local_error_order(cfg.scheme_config(dt=max(cfg.dts)), cfg.initial(), cfg.dts, s)
        csv_rows.extend(rep.to_csv().splitlines()[1:])
        lines.extend(
            line for line in rep.summary().splitlines()
            if line.startswith(("slope_", "r2_"))
        )
        ok &= abs(rep.slope - expected) <= tol
    (out / f"local_{tag}.csv").write_text("\n".join(csv_rows) + "\n")
    lines = [f"scheme={cfg.scheme}", f"order={cfg.order}", f"symbol={_tag(cfg)}"] + lines
    lines.append(f"expected_slope={expected:g}+-{tol:g}")
    lines.append(f"pass={str(ok).lower()}")
    return ok, lines


def cmd_verify_symbol(cfg: RunConfig, out: Path) -> tuple[bool, list[str]]:
    report = verify_conditions(cfg.make_symbol(), cfg.ximax, cfg.samples)
    return report.ok, report.to_text().splitlines()


def cmd_verify_lemmas(cfg: RunConfig, out: Path) -> tuple[bool, list[str]]:
    lines = ["inequality,trials,max_ratio,ratio_stability"]
    ok = True
    for name in INEQUALITIES:
        rep = inequality_scan(
            name, trials=cfg.trials, s=cfg.s, sigma=cfg.sigma, n=cfg.scan_n, seed=cfg.seed
        )
        lines.append(f"{name},{rep.trials},{_fmt(rep.max_ratio)},{_fmt(rep.ratio_stability)}")
        ok &= math.isfinite(rep.max_ratio) and rep.ratio_stability < STABILITY_LIMIT
    grid = Grid(cfg.scan_n)
    g = grid.field(lambda x: np.cos(x) + 0.3 * np.sin(3 * x))
    one = grid.field(np.ones_like)
    zero_cases = {
        "zero_commutator_constant_f": verify_commutator(one, g, cfg.s, cfg.sigma),
        "zero_bilinear_B_s0": verify_bilinear(g, None, 0.0, cfg.sigma, "B"),
    }
    for key, value in zero_cases.items():
        lines.append(f"{key}={_fmt(value)}")
        ok &= value <= 1e-12
    lines.append(f"pass={str(ok).lower()}")
    return ok, lines


HANDLERS = {
    "run": cmd_run,
    "converge": cmd_converge,
    "local-order": cmd_local_order,
    "verify-symbol": cmd_verify_symbol,
    "verify-lemmas": cmd_verify_lemmas,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opsplit", description="Operator-splitting experiments for u_t + u u_x - K u = 0"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value config file")
        for key in _TYPES:
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None, metavar=key.upper())
            if key == "symbol":
                p.add_argument("--name", dest="symbol", default=None, help=argparse.SUPPRESS)
            if key == "out":
                p.add_argument("--output", dest="out", default=None, help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    path = args.pop("config")
    try:
        cfg = parse_config(path, args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        ok, lines = HANDLERS[command](cfg, out)
    except ConfigError as exc:
        print(f"error=ConfigError {exc}")
        return 2
    except BlowupDetected as exc:
        print(f"error=BlowupDetected step={exc.step} {exc}")
        return 3
    except FitUnreliable as exc:
        print(f"error=FitUnreliable {exc}")
        return 4
    except (OSError, ValueError) as exc:
        print(f"error={type(exc).__name__} {exc}")
        return 2
    text = "\n".join(lines) + "\n"
    (out / "report.txt").write_text(text)
    sys.stdout.write(text)
    if not ok:
        print("error=AssertionFailed embedded check did not pass")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
