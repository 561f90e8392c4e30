import numpy as np
import pytest

from opsplit.errors import BlowupDetected
from opsplit.spectral import Grid
from opsplit.splitting import (
    SchemeConfig,
    composite_step,
    evolve,
    godunov_step,
    step_count,
    strang_step,
    write_trajectory_csv,
)
from opsplit.substeps import burgers_step, linear_step
from opsplit.symbols import CATALOG, make_symbol


def cfg(scheme="godunov", order="nonlinear_first", dt=0.05, T=1.0, symbol="kdv", **kw):
    return SchemeConfig(scheme, order, dt, T, make_symbol(symbol), **kw)


def test_step_count():
    assert step_count(1.0, 0.1) == 10
    assert step_count(1.0, 0.3) == 3
    assert step_count(1.0, 1 / 160) == 160


@pytest.mark.parametrize(
    "kwargs", [{"scheme": "lie"}, {"order": "sideways"}, {"dt": 0.0}, {"dt": 2.0}, {"T": -1.0}]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        cfg(**kwargs)


class TestGodunov:
    def test_zero_symbol_is_burgers(self, two_mode):
        c = cfg(symbol="zero")
        diff = godunov_step(two_mode, c).samples - burgers_step(two_mode, c.dt).samples
        assert np.max(np.abs(diff)) < 1e-15

    def test_zero_state(self, grid256):
        assert np.all(godunov_step(grid256.zeros(), cfg()).samples == 0)

    @pytest.mark.parametrize("name", CATALOG)
    @pytest.mark.parametrize("scheme", ["godunov", "strang"])
    def test_constant_fixed(self, grid256, name, scheme):
        u = grid256.field(lambda x: np.full_like(x, -0.3))
        out = composite_step(u, cfg(scheme=scheme, symbol=name))
        assert np.max(np.abs(out.samples + 0.3)) < 1e-15

    def test_orders_compose_differently(self, two_mode):
        a = godunov_step(two_mode, cfg(order="nonlinear_first"))
        b = godunov_step(two_mode, cfg(order="linear_first"))
        sym = make_symbol("kdv")
        assert np.array_equal(b.samples, burgers_step(linear_step(two_mode, sym, 0.05), 0.05).samples)
        assert not np.allclose(a.samples, b.samples, atol=1e-8)


class TestStrang:
    def test_identity_hook_gives_linear_flow(self, two_mode):
        c = cfg(scheme="strang", burgers_identity=True)
        out = strang_step(two_mode, c)
        ref = linear_step(two_mode, c.symbol, c.dt)
        assert np.max(np.abs(out.samples - ref.samples)) < 1e-14

    def test_zero_symbol_linear_first_is_one_burgers_step(self, two_mode):
        c = cfg(scheme="strang", order="linear_first", symbol="zero")
        diff = strang_step(two_mode, c).samples - burgers_step(two_mode, c.dt).samples
        assert np.max(np.abs(diff)) < 1e-15

    def test_nonlinear_first_structure(self, two_mode):
        c = cfg(scheme="strang")
        v = burgers_step(two_mode, 0.025)
        v = linear_step(v, c.symbol, 0.05)
        v = burgers_step(v, 0.025)
        assert np.array_equal(strang_step(two_mode, c).samples, v.samples)


class TestEvolve:
    def test_single_step(self, two_mode):
        c = cfg(dt=0.5, T=0.5)
        tr = evolve(two_mode, c)
        assert len(tr) == 2
        assert tr.states[0] is two_mode
        assert np.array_equal(tr.states[1].samples, godunov_step(two_mode, c).samples)

    def test_zero(self, grid256):
        tr = evolve(grid256.zeros(), cfg(dt=0.1))
        assert all(np.all(s.samples == 0) for s in tr.states)

    def test_truncates_to_whole_steps(self, two_mode):
        tr = evolve(two_mode, cfg(dt=0.3))
        assert len(tr) == 4
        assert tr.times[-1] == pytest.approx(0.9)
        assert np.allclose(np.diff(tr.times), 0.3)

    @pytest.mark.parametrize("scheme", ["godunov", "strang"])
    @pytest.mark.parametrize("name", ["kdv", "bo"])
    def test_dispersive_l2_conserved(self, two_mode, scheme, name):
        tr = evolve(two_mode, cfg(scheme=scheme, symbol=name, dt=0.01))
        assert len(tr) == 101
        assert np.max(np.abs(tr.l2 / tr.l2[0] - 1)) <= 1e-7

    def test_burgers_symbol_l2_monotone(self, two_mode):
        tr = evolve(two_mode, cfg(symbol="burgers", dt=0.01))
        assert np.all(np.diff(tr.l2) <= 1e-12)

    def test_mean_conserved(self, grid256):
        u = grid256.field(lambda x: 0.2 + 0.5 * np.sin(x) + 0.25 * np.cos(2 * x))
        tr = evolve(u, cfg(scheme="strang", dt=0.02))
        assert np.max(np.abs(tr.mean - 0.2)) < 1e-14

    def test_realness(self, two_mode):
        tr = evolve(two_mode, cfg(scheme="strang", symbol="extended_whitham", dt=0.05))
        assert np.max(tr.imag_residue) <= 1e-12

    def test_deterministic(self, two_mode):
        a = evolve(two_mode, cfg(dt=0.05))
        b = evolve(two_mode, cfg(dt=0.05))
        assert all(np.array_equal(x.samples, y.samples) for x, y in zip(a.states, b.states))

    @pytest.mark.parametrize("scheme", ["godunov", "strang"])
    def test_identity_hook_equals_linear_flow(self, two_mode, scheme):
        c = cfg(scheme=scheme, dt=1 / 40, burgers_identity=True)
        tr = evolve(two_mode, c)
        ref = linear_step(two_mode, c.symbol, c.final_time)
        assert np.max(np.abs(tr.final.samples - ref.samples)) < 1e-11

    def test_blowup_reports_step(self, grid256):
        u = grid256.field(lambda x: 2.0 * np.sin(x))
        with pytest.raises(BlowupDetected) as info:
            evolve(u, cfg(symbol="zero", dt=0.1))
        assert info.value.step is not None and info.value.step >= 1

    def test_trajectory_csv(self, tmp_path, two_mode):
        tr = evolve(two_mode, cfg(dt=0.25))
        write_trajectory_csv(tr, tmp_path / "t.csv")
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "t,l2,mean,hs_sigma"
        assert len(lines) == 6
        assert float(lines[1].split(",")[1]) == tr.l2[0]
