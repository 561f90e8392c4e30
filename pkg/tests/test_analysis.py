import math

import numpy as np
import pytest

from opsplit.analysis import (
    bilinear_terms,
    commutator_terms,
    convergence_study,
    fit_loglog,
    global_error,
    inequality_scan,
    local_error_order,
    random_trig_polynomial,
    verify_bilinear,
    verify_commutator,
)
from opsplit.errors import FitUnreliable
from opsplit.spectral import Grid
from opsplit.splitting import SchemeConfig
from opsplit.symbols import make_symbol

DTS = [1 / 10, 1 / 20, 1 / 40, 1 / 80]


def kdv_cfg(scheme="godunov", **kw):
    return SchemeConfig(scheme, "nonlinear_first", 0.1, 1.0, make_symbol("kdv"), **kw)


def _modes(u, limit):
    c = np.fft.fft(u.samples) / u.grid.n
    return {int(m): c[m % u.grid.n] for m in range(-limit, limit + 1)}


def brute_commutator(f, g, s, limit):
    """Direct convolution sum of the commutator symbol h(a+b) - h(a) - h(b)."""
    h = lambda xi: xi * (1 + xi * xi) ** (s / 2)
    fc, gc = _modes(f, limit), _modes(g, limit)
    out = {}
    for a, fa in fc.items():
        for b, gb in gc.items():
            out[a + b] = out.get(a + b, 0) + 1j * (h(a + b) - h(a) - h(b)) * fa * gb
    return math.sqrt(2 * math.pi * sum(abs(v) ** 2 for v in out.values()))


def brute_bilinear_a(f, g, s, limit):
    fc, gc = _modes(f, limit), _modes(g, limit)
    prod = {}
    for a, fa in fc.items():
        for b, gb in gc.items():
            prod[a + b] = prod.get(a + b, 0) + fa * gb
    total = sum(
        (1 + m * m) ** s * fc[m] * np.conj(1j * m * prod.get(m, 0)) for m in fc
    )
    return abs(2 * math.pi * total.real)


class TestFit:
    def test_exact_power_law(self):
        dts = [0.1, 0.05, 0.025]
        slope, r2 = fit_loglog(dts, [3 * d**2 for d in dts])
        assert slope == pytest.approx(2.0, abs=1e-12)
        assert r2 == pytest.approx(1.0, abs=1e-12)


class TestGlobalError:
    def test_zero_data(self, grid256):
        errs = global_error(kdv_cfg(), grid256.zeros(), [0, 1, 2])
        assert [e for _, e in errs] == [0.0, 0.0, 0.0]

    def test_reference_against_itself(self, two_mode):
        # identity hook: both sides are the exact linear flow
        errs = global_error(kdv_cfg(burgers_identity=True), two_mode, [0.0])
        assert errs[0][1] < 1e-13

    def test_godunov_halving(self, sine):
        cfg = SchemeConfig("godunov", "nonlinear_first", 1 / 32, 1.0, make_symbol("kdv"))
        e1 = global_error(cfg, sine, [0.0], dt_ref=1 / 2048)[0][1]
        e2 = global_error(cfg.with_dt(1 / 64), sine, [0.0], dt_ref=1 / 2048)[0][1]
        assert e1 > 0
        assert e1 / e2 == pytest.approx(2.0, abs=0.3)

    def test_sup_dominates_endpoint(self, two_mode):
        cfg = kdv_cfg().with_dt(1 / 20)
        end = global_error(cfg, two_mode, [0.0], over="endpoint")[0][1]
        sup = global_error(cfg, two_mode, [0.0], over="sup")[0][1]
        assert sup >= end

    def test_dt_ref_must_divide(self, two_mode):
        with pytest.raises(ValueError):
            global_error(kdv_cfg(), two_mode, [0.0], dt_ref=0.03)


class TestConvergenceStudy:
    def test_godunov_kdv_sine(self, sine):
        rep = convergence_study(kdv_cfg(), sine, [1 / 10, 1 / 20, 1 / 40, 1 / 80, 1 / 160], [0.0])
        assert rep.slopes[0.0] == pytest.approx(1.0, abs=0.2)
        assert rep.dts == sorted(rep.dts, reverse=True)
        assert all(rep.admitted[0.0])

    def test_strang_kdv_sine(self, sine):
        rep = convergence_study(kdv_cfg("strang"), sine, [1 / 10, 1 / 20, 1 / 40, 1 / 80, 1 / 160], [0.0])
        assert rep.slopes[0.0] == pytest.approx(2.0, abs=0.25)

    def test_errors_monotone(self, two_mode):
        rep = convergence_study(kdv_cfg(), two_mode, DTS, [0.0, 1.0])
        for s in rep.sigmas:
            errs = rep.errors[s]
            assert all(a > b for a, b in zip(errs, errs[1:]))

    def test_identity_hook_is_degenerate(self, two_mode):
        with pytest.raises(FitUnreliable):
            convergence_study(kdv_cfg(burgers_identity=True), two_mode, DTS, [0.0])
        rep = convergence_study(
            kdv_cfg(burgers_identity=True), two_mode, DTS, [0.0], allow_degenerate=True
        )
        assert rep.degenerate
        assert not any(rep.admitted[0.0])
        assert all(e <= 10 * rep.reference_floor[0.0] for e in rep.errors[0.0])

    def test_csv_and_summary(self, two_mode):
        rep = convergence_study(kdv_cfg(), two_mode, DTS, [0.0, 1.0], measure="endpoint")
        lines = rep.to_csv().splitlines()
        assert lines[0] == "dt,sigma,error,admitted"
        assert len(lines) == 1 + 2 * len(DTS)
        dt, sigma, err, ok = lines[1].split(",")
        assert float(dt) == rep.dts[0] and float(err) == rep.endpoint[0.0][0]
        summary = dict(l.split("=", 1) for l in rep.summary().splitlines())
        assert float(summary["slope_0"]) == rep.slopes[0.0]
        assert "r2_1" in summary

    def test_threaded_matches_serial(self, two_mode):
        a = convergence_study(kdv_cfg(), two_mode, DTS, [0.0])
        b = convergence_study(kdv_cfg(), two_mode, DTS, [0.0], workers=4)
        assert a.to_csv() == b.to_csv()

    def test_rejects_non_dyadic(self, two_mode):
        with pytest.raises(ValueError):
            convergence_study(kdv_cfg(), two_mode, [0.1, 0.07, 0.03], [0.0])
        with pytest.raises(ValueError):
            convergence_study(kdv_cfg(), two_mode, [0.1, 0.05], [0.0])


class TestLocalOrder:
    def test_godunov(self, two_mode):
        rep = local_error_order(kdv_cfg(), two_mode, [1 / 10, 1 / 20, 1 / 40, 1 / 80, 1 / 160])
        assert rep.slope == pytest.approx(2.0, abs=0.3)

    def test_strang(self, two_mode):
        rep = local_error_order(kdv_cfg("strang"), two_mode, [1 / 10, 1 / 20, 1 / 40, 1 / 80, 1 / 160])
        assert rep.slope == pytest.approx(3.0, abs=0.3)

    def test_constant_has_no_error(self, grid256):
        u = grid256.field(lambda x: np.full_like(x, 0.7))
        rep = local_error_order(kdv_cfg(), u, DTS, allow_degenerate=True)
        assert max(rep.errors) < 1e-14
        with pytest.raises(FitUnreliable):
            local_error_order(kdv_cfg(), u, DTS)


class TestCommutator:
    def test_constant_f(self):
        g = Grid(64)
        f = g.field(np.ones_like)
        other = g.field(lambda x: np.sin(x) - 0.2 * np.cos(4 * x))
        assert verify_commutator(f, other, 2.0) <= 1e-12

    def test_cosine_pair_resolution_stable(self):
        r64 = verify_commutator(Grid(64).field(np.cos), Grid(64).field(np.cos), 2.0)
        r128 = verify_commutator(Grid(128).field(np.cos), Grid(128).field(np.cos), 2.0)
        assert 0 < r64 < np.inf
        assert r128 == pytest.approx(r64, rel=1e-10)

    def test_against_convolution_oracle(self, rng):
        g = Grid(64)
        f = g.field(random_trig_polynomial(rng, 8))
        h = g.field(random_trig_polynomial(rng, 8))
        lhs, _ = commutator_terms(f, h, 2.0)
        assert lhs == pytest.approx(brute_commutator(f, h, 2.0, 8), rel=1e-10)

    def test_band_limit_enforced(self):
        g = Grid(32)
        with pytest.raises(ValueError):
            verify_commutator(g.field(lambda x: np.cos(12 * x)), g.field(np.cos), 2.0)

    def test_sigma_must_exceed_three_halves(self):
        g = Grid(32)
        with pytest.raises(ValueError):
            verify_commutator(g.field(np.cos), g.field(np.cos), 2.0, sigma=1.5)


class TestBilinear:
    def test_variant_b_s0_vanishes(self, rng):
        g = Grid(64)
        f = g.field(random_trig_polynomial(rng, 10))
        assert verify_bilinear(f, None, 0.0, variant="B") <= 1e-12

    def test_variant_a_sin_cos(self):
        # sin * cos = sin(2x)/2 is orthogonal to sin after differentiation
        ratios = [
            verify_bilinear(Grid(n).field(np.sin), Grid(n).field(np.cos), 2.0, 1.6, "A")
            for n in (64, 128)
        ]
        assert np.isfinite(ratios[0]) and ratios[0] <= 1e-12
        assert abs(ratios[1] - ratios[0]) <= 1e-12

    def test_variant_a_nonzero_pair(self):
        f = lambda x: np.sin(x) + 0.5 * np.cos(2 * x)
        ratios = [
            verify_bilinear(Grid(n).field(f), Grid(n).field(np.cos), 2.0, 1.6, "A")
            for n in (64, 128)
        ]
        assert 0 < ratios[0] < np.inf
        assert ratios[1] == pytest.approx(ratios[0], rel=1e-10)

    def test_variant_a_against_oracle(self, rng):
        g = Grid(64)
        f = g.field(random_trig_polynomial(rng, 7))
        h = g.field(random_trig_polynomial(rng, 7))
        lhs, _ = bilinear_terms(f, h, 2.0, 1.6, "A")
        assert lhs == pytest.approx(brute_bilinear_a(f, h, 2.0, 7), rel=1e-9)

    def test_variant_b_is_half_of_a_with_g_equal_f(self, rng):
        # <f, f f_x> = <f, (f f)_x> / 2
        g = Grid(64)
        f = g.field(random_trig_polynomial(rng, 9))
        a, _ = bilinear_terms(f, f, 2.0, 1.6, "A")
        b, _ = bilinear_terms(f, None, 2.0, 1.6, "B")
        assert b == pytest.approx(a / 2, rel=1e-10)

    def test_bad_variant(self):
        g = Grid(32)
        with pytest.raises(ValueError):
            verify_bilinear(g.field(np.cos), g.field(np.cos), 2.0, variant="C")


@pytest.mark.parametrize("which", ["commutator", "bilinear_A", "bilinear_B"])
def test_inequality_scan_small(which):
    rep = inequality_scan(which, trials=20, seed=3)
    assert np.isfinite(rep.max_ratio) and rep.max_ratio > 0
    assert rep.ratio_stability < 0.05
    assert rep.to_text().startswith("inequality,trials,max_ratio,ratio_stability\n")


def test_inequality_scan_seeded():
    a = inequality_scan("commutator", trials=10, seed=7)
    b = inequality_scan("commutator", trials=10, seed=7)
    assert a.max_ratio == b.max_ratio
