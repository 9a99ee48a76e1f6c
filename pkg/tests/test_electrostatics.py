import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from fenand import electrostatics as E
from fenand.cell import DEFAULT_CHANNEL, DEFAULT_PS
from fenand.units import EPS0, MV_PER_CM, NM, UC_PER_CM2

FDSOI = E.fdsoi_stack()
VERTICAL = E.vertical_dual_port_stack()


def _stack(front, back, fb_front=0.0, fb_back=0.0):
    """Metal | FE (t, eps) | extra front dielectrics | channel | back dielectrics | metal."""
    layers = [E.Layer("metal")]
    layers += [E.Layer("ferroelectric", *front[0])]
    layers += [E.Layer("dielectric", t, eps) for t, eps in front[1:]]
    layers += [E.Layer("channel", 0.0)]
    layers += [E.Layer("dielectric", t, eps) for t, eps in back]
    layers += [E.Layer("metal")]
    return E.GateStack(tuple(layers), fb_front, fb_back)


def test_null_solution():
    s = _stack([(10 * NM, 30.0), (1 * NM, 3.9)], [(20 * NM, 3.9)])
    sol = E.solve_electrostatics(s, 0.0, 0.0, 0.0, None)
    assert sol.psi_channel == 0.0
    assert np.all(sol.fields == 0.0)
    electron_only = E.ChannelChargeModel(vt=0.02585, psi_on=0.7, psi_acc=None)
    sol = E.solve_electrostatics(s, 0.0, 0.0, 0.0, electron_only)
    assert abs(sol.psi_channel) < 1e-9
    assert np.max(np.abs(sol.fields)) < 1.0  # V/m, vs ~1e8 at operating bias


def test_series_divider_uniform_field():
    # 1 nm and 20 nm of eps 3.9 in series, 2.1 V across: 2.1 V / 21 nm = 1.0 MV/cm
    s = _stack([(1 * NM, 3.9)], [(20 * NM, 3.9)])
    sol = E.solve_electrostatics(s, 2.1, 0.0, 0.0, None)
    assert sol.fields[1] == pytest.approx(1.0 * MV_PER_CM, rel=1e-12)
    assert sol.fields[3] == pytest.approx(1.0 * MV_PER_CM, rel=1e-12)


def _two_cap(p, t_fe, eps_fe, others):
    # shorted series FE + dielectrics: E_FE = -P / (eps0 (eps_fe + t_fe / sum(t/eps)))
    s_o = sum(t / eps for t, eps in others)
    return -p / (EPS0 * (eps_fe + t_fe / s_o))


def test_depolarization_two_capacitor_example():
    # FE 10 nm / 30 over 1 nm / 3.9 with the channel tied to the gate reference:
    # a vanishing back dielectric makes the channel follow the grounded pass gate.
    s = _stack([(10 * NM, 30.0), (1 * NM, 3.9)], [(1e-18, 3.9)])
    e = E.depolarization_field(s, 1 * UC_PER_CM2, None)
    oracle = _two_cap(1 * UC_PER_CM2, 10 * NM, 30.0, [(1 * NM, 3.9)])
    assert e == pytest.approx(oracle, rel=1e-6)
    assert e / MV_PER_CM == pytest.approx(-0.1637, abs=5e-4)


def test_depolarization_default_stack_depleted():
    # default FDSOI stack, P = +10 uC/cm^2, channel held in depletion
    depleted = E.ChannelChargeModel(vt=0.02585, psi_on=50.0, psi_acc=None)
    p = 10 * UC_PER_CM2
    e = E.depolarization_field(FDSOI, p, depleted)
    oracle = _two_cap(p, 10 * NM, 30.0, [(1 * NM, 3.9), (20 * NM, 3.9)])
    assert e < 0
    assert abs(e / oracle - 1) < 0.05


def test_depolarization_symmetry_and_zero():
    sym = E.fdsoi_stack(flatband_front=0.0, flatband_back=0.0)
    assert E.depolarization_field(sym, 0.0, None) == 0.0
    p = 2 * UC_PER_CM2
    assert E.depolarization_field(sym, p, None) == pytest.approx(
        -E.depolarization_field(sym, -p, None), rel=1e-12)


@given(p=st.floats(-2e-2, 2e-2), v_wg=st.floats(-6, 6), v_pg=st.floats(-15, 15),
       vertical=st.booleans())
def test_residual_and_displacement_continuity(p, v_wg, v_pg, vertical):
    stack = VERTICAL if vertical else FDSOI
    sol = E.solve_electrostatics(stack, v_wg, v_pg, p, DEFAULT_CHANNEL)
    assert sol.residual < 1e-9
    d = sol.displacement(stack, p)
    n_front = len(stack.front_layers)
    front, back = d[:n_front], d[n_front:]
    scale = max(np.max(np.abs(d)), 1e-12)
    assert np.max(np.abs(front - front[0])) <= 1e-9 * scale
    assert np.max(np.abs(back - back[0])) <= 1e-9 * scale
    # Gauss: D_back - D_front = Q_channel
    assert abs(back[0] - front[0] - sol.q_channel) <= 1e-9 * max(scale, abs(sol.q_channel))
    assert DEFAULT_CHANNEL.electron_charge(sol.psi_channel) <= 0.0


@given(v1=st.floats(-5, 5), v2=st.floats(-5, 5), shift=st.floats(-3, 3))
def test_superposition_without_charge(v1, v2, shift):
    f = lambda a, b: E.ferroelectric_field(FDSOI, a, b, 0.0, None)  # noqa: E731
    slope = f(1.0, 0.0) - f(0.0, 0.0)
    assert f(v1, v2) == pytest.approx(f(0, 0) + slope * (v1 - v2), abs=1e-6 * abs(slope))
    assert f(v1 + shift, v2 + shift) == pytest.approx(f(v1, v2), abs=1e-6 * abs(slope))


def test_solver_failure_carries_bracket():
    # a 1e4 V write gate pushes the charge-free guess far from the pinned root
    with pytest.raises(E.SolverError) as info:
        E.solve_electrostatics(FDSOI, 1e4, 0.0, 0.0, DEFAULT_CHANNEL)
    lo, hi = info.value.bracket
    assert lo < hi


def test_layer_and_stack_validation():
    with pytest.raises(ValueError):
        E.Layer("dielectric", -1e-9, 3.9)
    with pytest.raises(ValueError):
        E.Layer("dielectric", 1e-9, 0.5)
    with pytest.raises(ValueError):  # two ferroelectrics
        E.GateStack((E.Layer("metal"), E.Layer("ferroelectric", 1e-9, 30),
                     E.Layer("ferroelectric", 1e-9, 30), E.Layer("channel"),
                     E.Layer("dielectric", 1e-9, 3.9), E.Layer("metal")))
    with pytest.raises(ValueError):  # no channel
        E.GateStack((E.Layer("metal"), E.Layer("ferroelectric", 1e-9, 30),
                     E.Layer("dielectric", 1e-9, 3.9), E.Layer("metal")))


def _curve(state, terminal, stack=FDSOI):
    return E.efe_vs_vpass_curve(stack, state, terminal, (0.0, 4.0), 41, DEFAULT_CHANNEL,
                                DEFAULT_PS)


def test_single_port_hvt_field_strictly_increasing():
    c = _curve("HVT", "WG")
    assert np.all(np.diff(c[:, 1]) > 0)


def test_single_port_lvt_depolarization_weakened():
    c = _curve("LVT", "WG")
    assert np.all(np.diff(c[:, 1] * np.sign(DEFAULT_PS)) > 0)


def test_dual_port_hvt_moves_toward_polarization():
    c = _curve("HVT", "PG")
    assert np.all(np.diff(c[:, 1]) < 0)  # toward sign(P) = -1


def test_dual_port_lvt_nearly_flat():
    c = _curve("LVT", "PG")
    assert abs(c[-1, 1] - c[0, 1]) < 0.05 * abs(c[0, 1])


def test_curve_origin_equals_depolarization_field():
    for state, p in (("HVT", -DEFAULT_PS), ("LVT", DEFAULT_PS)):
        for term in ("WG", "PG"):
            c = _curve(state, term)
            assert c[0, 1] == E.depolarization_field(FDSOI, p, DEFAULT_CHANNEL)


def test_screening_deep_depletion_is_unity():
    electron_only = E.ChannelChargeModel(vt=DEFAULT_CHANNEL.vt, psi_on=0.7, psi_acc=None)
    f = E.screening_factor(FDSOI, -DEFAULT_PS, 0.0, electron_only)
    assert f == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("stack", [FDSOI, VERTICAL], ids=["fdsoi", "vertical"])
def test_screening_strong_on_state(stack):
    ch = DEFAULT_CHANNEL
    # V_PG where the electron sheet reaches 10 Cq Vt, found by root search
    v10 = brentq(lambda v: -E.solve_electrostatics(stack, 0, v, DEFAULT_PS, ch).q_channel
                 - 10 * ch.cq * ch.vt, 0.0, 400.0)
    for v in (v10, v10 + 5.0):
        assert E.screening_factor(stack, DEFAULT_PS, v, ch) < 0.05


@pytest.mark.parametrize("stack", [FDSOI, VERTICAL], ids=["fdsoi", "vertical"])
def test_screening_monotone_for_lvt(stack):
    vs = np.linspace(-1.0, 20.0, 85)
    f = np.array([E.screening_factor(stack, DEFAULT_PS, v, DEFAULT_CHANNEL) for v in vs])
    assert np.all(np.diff(f) <= 1e-9)
    assert np.all((f >= 0) & (f <= 1 + 1e-6))
