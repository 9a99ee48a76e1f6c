import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fenand import cell as C
from fenand import electrostatics as E
from fenand import kinetics as kin
from fenand import nand_string as S


@pytest.fixture(scope="module")
def three(device):
    return S.make_string(device, ["LVT", "HVT", "LVT"], seed=0)


def test_uniform_divider_symmetry_oracle(device):
    s = S.make_string(device, ["LVT"] * 3, seed=0)
    sol = S.solve_string_current(s, 0.05, 0.0, [2.0] * 3)
    c = s.cells[0]
    single = C.drain_current(c.params, c.polarization, 2.0, 0.0, 0.0, 0.05 / 3)
    assert abs(sol.current / single - 1) < 0.02


def test_series_off_switch_dominates(device):
    s = S.make_string(device, ["LVT", "HVT", "LVT"], seed=0)
    p = device.params
    off = C.vth(s.cells[1]) - 10 * p.ss
    sol = S.solve_string_current(s, 0.05, 0.0, [2.0, off, 2.0])
    assert 0 < sol.current < 1e-9 * p.w / p.l


def test_equal_terminals_give_zero_current(three):
    for v in (0.0, 0.7):
        assert S.solve_string_current(three, v, v, [2.0] * 3).current == 0.0


@given(states=st.lists(st.sampled_from(["HVT", "LVT"]), min_size=1, max_size=8),
       v_bl=st.floats(-1.0, 3.0), v_sl=st.floats(-1.0, 3.0), v_wl=st.floats(-1.0, 4.0),
       v_pg=st.floats(0.0, 6.0))
def test_current_continuity(device, states, v_bl, v_sl, v_wl, v_pg):
    s = S.make_string(device, states, seed=1)
    sol = S.solve_string_current(s, v_bl, v_sl, [v_wl] * len(states), v_pg)
    if sol.current != 0.0:
        assert sol.continuity_error < 1e-12
    assert abs(sol.terminal_error) < 1e-9
    assert np.sign(sol.current) == np.sign(v_bl - v_sl) or sol.current == 0.0


def test_select_devices_pass_and_block(device):
    s = S.make_string(device, ["LVT"] * 3, seed=0, ssl_vth=0.5, gsl_vth=0.5)
    on = S.solve_string_current(s, 0.05, 0.0, [2.0] * 3, v_ssl=3.0, v_gsl=3.0)
    off = S.solve_string_current(s, 0.05, 0.0, [2.0] * 3, v_ssl=0.0, v_gsl=3.0)
    assert on.current > 1e4 * off.current
    assert on.continuity_error < 1e-12


def _isolated_vth(device, state, seed):
    cell = device.make_cell(state, seed=seed)
    return C.extract_vth_constant_current(C.id_vg(cell, "front", -1.0, 3.0, 401),
                                          device.params.w, device.params.l)


@pytest.mark.parametrize("target", ["HVT", "LVT"])
def test_sensed_vth_neighbor_independent(device, target):
    sweep = np.linspace(-1.0, 3.0, 401)
    iso = _isolated_vth(device, target, seed=1)
    for top in ("HVT", "LVT"):
        for bottom in ("HVT", "LVT"):
            s = S.make_string(device, [top, target, bottom], seed=0)
            r = S.read_target(s, 1, sweep, 2.0)
            assert not r.under_pass
            assert abs(r.vth_sensed - iso) < 0.02


def test_pg_under_pass_regime(device):
    # wired T1 and T3 read through the PG with T2 erased: low V_PASS starves the string
    s = S.make_string(device, ["LVT", "HVT", "LVT"], seed=0)
    sweep = np.linspace(-4.0, 3.0, 141)
    low = S.read_target(s, (0, 2), sweep, 4.0, "PG")
    high = S.read_target(s, (0, 2), sweep, 15.0, "PG")
    assert low.under_pass and low.vth_sensed is None
    assert not high.under_pass and high.vth_sensed is not None
    assert high.curve.i_d[-1] > 10 * low.curve.i_d[-1]


def test_single_cell_string_read_is_id_vg(device):
    s = S.make_string(device, ["HVT"], seed=4)
    sweep = np.linspace(-1.0, 3.0, 81)
    r = S.read_target(s, 0, sweep, 2.0)
    ref = C.id_vg(s.cells[0], "front", -1.0, 3.0, 81, v_ds=0.05)
    np.testing.assert_allclose(r.curve.i_d, ref.i_d, rtol=1e-9)


def test_read_target_validation(three):
    with pytest.raises(IndexError):
        S.read_target(three, 3, [0.0, 1.0], 2.0)
    with pytest.raises(ValueError):
        S.read_target(three, 1, [0.0, 1.0], 2.0, pass_port="XX")


def test_waveform_validation():
    with pytest.raises(ValueError):
        S.BiasWaveform({"BL": [S.Segment(0, 0, 1e-6)], "SL": [S.Segment(0, 0, 2e-6)]})
    with pytest.raises(ValueError):
        S.Segment(0, 1, 0.0)


def test_waveform_piecewise_linear_values():
    wf = S.BiasWaveform({"WL_0": [S.Segment(0.0, 2.0, 1e-6), S.Segment(2.0, 2.0, 1e-6)]})
    assert wf.value("WL_0", 0.5e-6) == pytest.approx(1.0)
    assert wf.value("WL_0", 1.5e-6) == 2.0
    assert wf.total_duration == pytest.approx(2e-6)


def test_all_zero_waveform_keeps_state(three):
    wf = S.BiasWaveform.constant(1e-3, BL=0.0, SL=0.0, PG=0.0, WL_0=0.0, WL_1=0.0, WL_2=0.0)
    trace, final = S.apply_waveform(three, wf)
    for a, b in zip(three.cells, final.cells):
        assert np.array_equal(a.ensemble.orientation, b.ensemble.orientation)
        assert a.vth_front == b.vth_front
    assert np.all(np.diff(trace.t) > 0)


def test_trace_replay_is_deterministic(device):
    s = S.make_string(device, ["LVT", "HVT", "LVT"], seed=2)
    phases = [(2e-6, {"WL_1": 2.3, "WL_0": 2.3, "WL_2": 2.3}), (1e-6, {"BL": 0.05, "WL_1": 1.0})]
    wf = S.BiasWaveform.from_phases(phases, ["BL", "SL", "PG", "WL_0", "WL_1", "WL_2"])
    trace, _ = S.apply_waveform(s, wf, max_step=0.5e-6)
    replay, _ = S.apply_waveform(s, S.BiasWaveform.from_trace(trace), max_step=0.5e-6)
    assert trace.to_csv() == replay.to_csv()


def test_trace_csv_columns(three):
    wf = S.BiasWaveform.constant(1e-6, BL=0.05, WL_0=2.0, WL_1=2.0, WL_2=2.0)
    trace, _ = S.apply_waveform(three, wf)
    header = io.StringIO(trace.to_csv()).readline().strip().split(",")
    assert header == (["t_s", "I_string_A", "node_0_V", "node_1_V", "node_2_V", "node_3_V"]
                      + [f"vth_cell_{i}_V" for i in range(3)]
                      + [f"efe_cell_{i}_Vpm" for i in range(3)])


@pytest.fixture(scope="module")
def eight_wl(vertical_device):
    n, target = 8, 3
    s = S.make_string(vertical_device, ["LVT", "HVT"] * 4, seed=0)
    wf, windows = S.operation_waveform(n, target)
    return s, wf, windows


def test_eight_wl_erase_program_read(eight_wl):
    s, wf, windows = eight_wl
    trace, final = S.apply_waveform(s, wf, max_step=1e-6)
    low = S.window_current(trace, windows["read_erased"])
    high = S.window_current(trace, windows["read_programmed"])
    assert high >= 10 * low
    # only the programmed WL ends in LVT
    assert final.cells[3].polarization > 0
    assert all(c.polarization < 0 for i, c in enumerate(final.cells) if i != 3)


def test_eight_wl_step_refinement(eight_wl):
    s, wf, _ = eight_wl
    oracle = S.apply_waveform(s, wf, max_step=0.125e-6)[1]
    for step in (1e-6, 0.5e-6):
        final = S.apply_waveform(s, wf, max_step=step)[1]
        diff = max(abs(a.vth_front - b.vth_front) for a, b in zip(final.cells, oracle.cells))
        assert diff < 1e-3


def test_wl_disturb_grid(three):
    g = S.pass_disturb_experiment(three, 1, [0.9, 2.3], [1e-6, 1e-4, 1.0], "WL")
    assert np.all(np.abs(g.dvth[0]) < 0.01)
    mw = three.cells[1].memory_window
    assert g.dvth[1, 1] <= -mw / 2
    assert np.all(np.diff(-g.dvth, axis=1) >= 0)


@pytest.mark.parametrize("state", ["HVT", "LVT"])
def test_pg_disturb_free(three, state):
    g = S.pass_disturb_experiment(three, 1, [2.0, 15.0], [1e-6, 1.0], "PG", victim_state=state)
    assert np.all(np.abs(g.dvth) < 0.01)


def test_pg_waveform_keeps_every_cell_polarization(device):
    # read through the PG with the wired outer cells swept and T2 at 0 V
    s = S.make_string(device, ["LVT", "HVT", "LVT"], seed=0)
    phases = [(1e-3, {"PG": 15.0, "BL": 0.05, "WL_0": 2.0, "WL_2": 2.0}),
              (1e-3, {"PG": 15.0, "BL": 0.05})]
    wf = S.BiasWaveform.from_phases(phases, ["BL", "SL", "PG", "WL_0", "WL_1", "WL_2"])
    _, final = S.apply_waveform(s, wf)
    for a, b in zip(s.cells, final.cells):
        assert abs(a.polarization - b.polarization) <= 1e-3 * a.ensemble.ps


def test_field_report_single_vs_dual(vertical_device):
    states = ["HVT" if i == 6 else "LVT" for i in range(8)]
    s = S.make_string(vertical_device, states, seed=0)
    single = [S.field_report(s, 6, [v] * 8, 0.0).e_fe for v in (1.0, 2.0)]
    assert single[1] > single[0] > 0  # anti-P grows with V_PASS on the WLs
    dual0 = S.field_report(s, 6, [0.0] * 8, 0.0).e_fe
    for v in (1.0, 2.0):
        assert abs(S.field_report(s, 6, [0.0] * 8, v).e_fe) <= abs(dual0)


def test_field_report_zero_bias_is_depolarization(three):
    for i, c in enumerate(three.cells):
        sol = S.field_report(three, i)
        assert sol.e_fe == E.depolarization_field(c.stack, c.polarization, c.channel)
    with pytest.raises(IndexError):
        S.field_report(three, 3)


def test_neighbor_saturation_helper(three):
    # the ideal-pass reference replaces only the non-target cells
    ideal = S._ideal_pass(three, (1,))
    assert ideal.cells[1] is three.cells[1]
    assert kin.aligned_fraction(ideal.cells[0].ensemble, +1) == 1.0
