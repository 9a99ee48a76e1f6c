"""Compact dual-port FeFET: threshold voltages, I-V, and self-consistent pulses.

Threshold voltages are affine in polarization and in the opposite gate bias::

    VTH_front = VTH0_front - gamma_f * P - r_front * V_PG
    VTH_back  = VTH0_back  - gamma_b * P - r_back  * V_WG

The drain current is a symmetric EKV-style expression, exponential below
threshold and quadratic above, monotone in every terminal voltage.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kinetics as kin
from .electrostatics import (
    ChannelChargeModel,
    FieldAtBias,
    GateStack,
    fdsoi_stack,
    solve_electrostatics,
)
from .units import UC_PER_CM2, thermal_voltage

VTH_CURRENT_PER_SQUARE = 1e-7  # A, constant-current criterion I_D = 1e-7 W/L


class ExtractionError(ValueError):
    """No crossing of the constant-current criterion inside the curve."""

    def __init__(self, message, bounds):
        super().__init__(f"{message}; curve spans V in {bounds[0]}, I in {bounds[1]}")
        self.bounds = bounds


@dataclass(frozen=True)
class CellParams:
    w: float = 1e-6
    l: float = 1e-6
    k: float = 1.5e-4
    ss: float = 0.066
    vth0_front: float = 0.3
    vth0_back: float = 2.6
    gamma_f: float = 37.6
    gamma_b: float = 327.0
    r_front: float = 0.115
    r_back: float = 8.7
    vt: float = field(default_factory=thermal_voltage)

    def __post_init__(self):
        if not (self.w > 0 and self.l > 0 and self.k > 0):
            raise ValueError("W, L and k must be positive")
        if self.ss < self.vt * math.log(10) * (1 - 1e-9):
            raise ValueError(f"subthreshold swing {self.ss} V/dec is below the thermal limit")

    @property
    def slope_factor(self):
        return self.ss / (self.vt * math.log(10))

    @property
    def i_spec(self):
        return 2.0 * self.slope_factor * self.k * (self.w / self.l) * self.vt**2

    @classmethod
    def from_stack(cls, stack, channel, q_threshold=5e-4, **overrides):
        """Derive threshold and coupling parameters from the 1-D stack.

        The threshold is the gate bias at which the electron sheet charge
        reaches ``q_threshold`` (C/m^2), so the result is exactly affine in P
        and in the opposite gate bias.
        """
        cf, cb = stack.c_front, stack.c_back
        vt = channel.vt
        x = q_threshold / (channel.cq * vt)
        psi_t = channel.psi_on + vt * math.log(math.expm1(x))
        q_t = channel.charge(psi_t) + channel.fixed_sheet_charge
        # D_back - D_front = Q at psi_t, solved for each gate in turn
        vth0_front = stack.flatband_front + psi_t + (cb * (psi_t + stack.flatband_back) - q_t) / cf
        vth0_back = stack.flatband_back + psi_t + (cf * (psi_t - stack.flatband_front) - q_t) / cb
        g = stack.polarization_lever
        m = (cf + cb) / cf
        values = dict(
            vth0_front=vth0_front,
            vth0_back=vth0_back,
            gamma_f=g,
            gamma_b=g * cf / cb,
            r_front=cb / cf,
            r_back=cf / cb,
            ss=m * vt * math.log(10),
            vt=vt,
        )
        values.update(overrides)
        return cls(**values)


def vth_from_params(params, polarization, port="front", other_port_bias=0.0):
    if port == "front":
        return params.vth0_front - params.gamma_f * polarization - params.r_front * other_port_bias
    if port == "back":
        return params.vth0_back - params.gamma_b * polarization - params.r_back * other_port_bias
    raise ValueError(f"port must be 'front' or 'back', got {port!r}")


def _softplus(x):
    return x + math.log1p(math.exp(-x)) if x > 0 else math.log1p(math.exp(x))


def _softplus_inv(y):
    return y + math.log(-math.expm1(-y)) if y > 1.0 else math.log(math.expm1(y))


def _sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x)) if x >= 0 else math.exp(x) / (1.0 + math.exp(x))


def _ekv_f(v):
    """ln^2(1 + exp(v/2))."""
    s = _softplus(0.5 * v)
    return s * s


def front_overdrive(params, polarization, v_wg, v_pg):
    return v_wg - vth_from_params(params, polarization, "front", v_pg)


def current_from_overdrive(params, overdrive, v_s, v_d):
    """I_D (A) from the front-referred gate overdrive and source/drain potentials."""
    return current_for_vds(params, overdrive, v_s, v_d - v_s)


def current_for_vds(params, overdrive, v_s, v_ds):
    if v_ds < 0:  # source and drain swap roles
        return -current_for_vds(params, overdrive, v_s + v_ds, -v_ds)
    m, vt = params.slope_factor, params.vt
    vp = overdrive / m
    a, b = (vp - v_s) / vt, (vp - v_s - v_ds) / vt
    # F(a) - F(b) = (s_a - s_b)(s_a + s_b) with s = sqrt(F), without cancellation
    ds = math.log1p(_sigmoid(0.5 * b) * math.expm1(0.5 * v_ds / vt))
    return params.i_spec * ds * (_softplus(0.5 * a) + _softplus(0.5 * b))


def drain_current(params, polarization, v_wg, v_pg, v_s, v_d):
    return current_from_overdrive(params, front_overdrive(params, polarization, v_wg, v_pg), v_s, v_d)


def drain_for_current(params, overdrive, v_s, current):
    """Drain potential carrying ``current`` from source ``v_s``; None if unreachable."""
    v_ds = vds_for_current(params, overdrive, v_s, current)
    return None if v_ds is None else v_s + v_ds


def vds_for_current(params, overdrive, v_s, current):
    """Inverse of :func:`current_for_vds` in V_DS; None past saturation."""
    m, vt = params.slope_factor, params.vt
    if current == 0.0:
        return 0.0
    s_a = _softplus(0.5 * (overdrive / m - v_s) / vt)
    frac = current / params.i_spec / (s_a * s_a)
    if frac >= 1.0:
        return None
    ds = -s_a * math.expm1(0.5 * math.log1p(-frac))  # s_a - s_b
    if frac < 0.5 and ds < 1.0:
        # small V_DS: stay with the difference to avoid cancellation
        return -2.0 * vt * math.log1p(math.expm1(-ds) / -math.expm1(-s_a))
    s_b = s_a * math.sqrt(1.0 - frac)
    if s_b == 0.0:  # saturated to within rounding
        return None
    a = (overdrive / m - v_s) / vt
    return vt * (a - 2.0 * _softplus_inv(s_b))


@dataclass(frozen=True, eq=False)
class IVCurve:
    v_g: np.ndarray
    i_d: np.ndarray

    def __len__(self):
        return len(self.v_g)


@dataclass(frozen=True)
class Device:
    """Everything needed to instantiate cells: stack, channel, kinetics, compact params."""

    stack: GateStack
    channel: ChannelChargeModel
    kinetics: kin.SwitchingKinetics
    params: CellParams
    ps: float
    n_grains: int = 2000

    @property
    def memory_window(self):
        return 2.0 * self.params.gamma_f * self.ps

    def make_cell(self, state="HVT", seed=0, fraction_up=None):
        ens = kin.sample_ensemble(self.n_grains, self.kinetics, seed=seed, ps=self.ps)
        if fraction_up is not None:
            ens = kin.with_fraction(ens, fraction_up)
        else:
            ens = kin.saturate(ens, +1 if state.upper() == "LVT" else -1)
        return CellState(ens, self.stack, self.params, self.kinetics, self.channel)


# Calibrated kinetics (see fenand.calibration); geometry and channel are declared defaults.
DEFAULT_KINETICS = kin.SwitchingKinetics(
    tau0=7.389e-9, n=2.8577, beta=2.0, ea_median=2.4165e8, ea_sigma=0.11233)
DEFAULT_PS = 1.6 * UC_PER_CM2
DEFAULT_CHANNEL = ChannelChargeModel(psi_on=0.7, cq=1.0, psi_acc=0.1)


def default_device(stack=None, kinetics=None, channel=None, ps=None, n_grains=2000):
    stack = stack or fdsoi_stack()
    channel = channel or DEFAULT_CHANNEL
    params = CellParams.from_stack(stack, channel)
    return Device(stack, channel, kinetics or DEFAULT_KINETICS, params,
                  DEFAULT_PS if ps is None else ps, n_grains)


@dataclass(frozen=True, eq=False)
class CellState:
    ensemble: kin.GrainEnsemble
    stack: GateStack
    params: CellParams
    kinetics: kin.SwitchingKinetics
    channel: ChannelChargeModel

    def __post_init__(self):
        if not math.isfinite(self.vth_front):
            raise ValueError("derived front threshold is not finite")

    @property
    def polarization(self):
        return kin.net_polarization(self.ensemble)

    @property
    def vth_front(self):
        return vth_from_params(self.params, self.polarization, "front", 0.0)

    @property
    def memory_window(self):
        return 2.0 * self.params.gamma_f * self.ensemble.ps

    def with_ensemble(self, ensemble):
        return replace(self, ensemble=ensemble)

    def solve(self, v_wg=0.0, v_pg=0.0, v_channel=0.0):
        """Stack electrostatics with gate biases referred to the channel potential."""
        return solve_electrostatics(self.stack, v_wg - v_channel, v_pg - v_channel,
                                    self.polarization, self.channel)

    def e_fe(self, v_wg=0.0, v_pg=0.0, v_channel=0.0):
        return self.solve(v_wg, v_pg, v_channel).e_fe


def vth(cell, port="front", other_port_bias=0.0):
    return vth_from_params(cell.params, cell.polarization, port, other_port_bias)


def id_vg(cell, sweep_port="front", v_start=-1.0, v_stop=3.0, n_points=201, v_ds=0.05,
          other_port_bias=0.0):
    """Sweep one gate with the other held at ``other_port_bias``."""
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    v = np.linspace(v_start, v_stop, n_points)
    p, params = cell.polarization, cell.params
    if sweep_port == "front":
        ov = v - vth_from_params(params, p, "front", other_port_bias)
    elif sweep_port == "back":
        ov = (v - vth_from_params(params, p, "back", other_port_bias)) / params.r_back
    else:
        raise ValueError(f"sweep_port must be 'front' or 'back', got {sweep_port!r}")
    i = np.array([current_from_overdrive(params, o, 0.0, v_ds) for o in ov])
    return IVCurve(v, i)


def extract_vth_constant_current(curve, w, l):
    """Gate voltage where I_D = 1e-7 W/L, interpolating log10(I_D) linearly."""
    target = VTH_CURRENT_PER_SQUARE * w / l
    v, i = np.asarray(curve.v_g, float), np.asarray(curve.i_d, float)
    bounds = ((float(v[0]), float(v[-1])), (float(np.min(i)), float(np.max(i))))
    above = i >= target
    if not above.any() or above[0]:
        raise ExtractionError(f"no crossing of I_D = {target:.3g} A", bounds)
    j = int(np.argmax(above))
    li0, li1 = math.log10(max(i[j - 1], 1e-300)), math.log10(i[j])
    lt = math.log10(target)
    return float(v[j - 1] + (v[j] - v[j - 1]) * (lt - li0) / (li1 - li0))


def hold(cell, v_wg, v_pg, duration, v_channel=0.0, record=None, until=None):
    """Hold constant biases for ``duration`` seconds, integrated flip by flip.

    At fixed biases E_FE changes only when a grain flips.  Between flips every
    opposing grain gains reduced time at a constant rate, so the next flip
    time is known in closed form; that grain flips and the stack is
    re-solved.  The result depends on no step size.  When ``record`` is a
    list, (t, P) pairs are appended at the start and after every flip;
    ``until(P)`` returning True ends the hold at that flip.
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    ens = cell.ensemble
    kp = cell.kinetics
    field_of = FieldAtBias(cell.stack, v_wg - v_channel, v_pg - v_channel, cell.channel)
    orientation = ens.orientation.copy()
    progress = ens.progress.copy()
    flips = ens.flips.copy()
    thresholds = kin.flip_thresholds(ens, kp)
    lookahead = kin.flip_thresholds(ens, kp, extra_flips=1)
    fresh = np.ones(orientation.size, dtype=bool)  # lookahead still unused
    # (Ea/|E|)^n = ea_scaled / e_scaled, both relative to the median
    ea_scaled = (ens.activation_field / kp.ea_median) ** kp.n
    n = orientation.size
    n_up = int(np.count_nonzero(orientation == 1))

    def pol():
        return ens.ps * (2 * n_up - n) / n

    t = 0.0
    if record is not None:
        record.append((0.0, pol()))
    sign, active = 0, None
    while duration > 0:
        e = field_of(pol())
        if e == 0.0:
            break
        if (1 if e > 0 else -1) != sign:
            if active is not None:  # field reversed: store progress and regroup
                progress[idx[:active]] = prog[:active]
            sign = 1 if e > 0 else -1
            idx = np.flatnonzero(orientation != sign)
            prog, thr, eas = progress[idx], thresholds[idx], ea_scaled[idx]
            active = idx.size
        if active == 0:
            break
        e_scaled = (abs(e) / kp.ea_median) ** kp.n
        if e_scaled == 0.0:  # field too weak to switch anything
            break
        # per-grain rate in units of 1/tau0; the floor keeps never-switching grains finite
        rate = np.exp(-eas[:active] / e_scaled) + 1e-300
        wait = (thr[:active] - prog[:active]) / rate
        j = int(np.argmin(wait))
        dt = max(float(wait[j]), 0.0) * kp.tau0
        if not t + dt <= duration:
            prog[:active] += (duration - t) / kp.tau0 * rate
            break
        prog[:active] += dt / kp.tau0 * rate
        g = idx[j]
        orientation[g] = sign
        progress[g] = 0.0
        flips[g] += np.uint64(1)
        if fresh[g]:
            thresholds[g] = lookahead[g]
            fresh[g] = False
        else:  # a second flip in one hold needs a fresh draw
            thresholds[g] = kin.flip_thresholds(replace(ens, flips=flips), kp)[g]
        active -= 1
        for arr in (idx, prog, thr, eas):
            arr[j] = arr[active]
        n_up += sign
        t += dt
        if record is not None:
            record.append((t, pol()))
        if until is not None and until(pol()):
            break
    if active:
        progress[idx[:active]] = prog[:active]
    return cell.with_ensemble(replace(ens, orientation=orientation, progress=progress,
                                      flips=flips))


def write_pulse(cell, amplitude, duration, port="front"):
    """Write through the ferroelectric gate with the pass gate grounded."""
    if port != "front":
        raise ValueError("writes go through the ferroelectric (front) port")
    if amplitude == 0 or duration == 0:
        return cell
    return hold(cell, amplitude, 0.0, duration)


def pass_stress(cell, port, v_pass, duration, other_bias=0.0):
    """Apply V_PASS on one port; returns (new_cell, delta VTH_front at zero back bias)."""
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if port == "front":
        new = hold(cell, v_pass, other_bias, duration)
    elif port == "back":
        new = hold(cell, other_bias, v_pass, duration)
    else:
        raise ValueError(f"port must be 'front' or 'back', got {port!r}")
    return new, vth(new) - vth(cell)


def flip_time(cell, v_wg, v_pg, t_max):
    """Time at which the front VTH has moved by half the memory window (inf if never)."""
    rec = []
    start = cell.polarization
    target = start - math.copysign(cell.ensemble.ps, start)  # P = 0 from saturation

    def crossed(p):
        return (p - target) * math.copysign(1.0, start) <= 0

    hold(cell, v_wg, v_pg, t_max, record=rec, until=crossed)
    t, p = rec[-1]
    return t if crossed(p) else math.inf


def program_mlc(cell, amplitude, duration):
    """Partial write; the switched grain fraction sets an intermediate level."""
    return write_pulse(cell, amplitude, duration)


def gds_readout(cell, v_g_read, v_ds=0.05):
    if not 0 < v_ds <= 0.05:
        raise ValueError("conductance readout needs 0 < V_DS <= 50 mV")
    return drain_current(cell.params, cell.polarization, v_g_read, 0.0, 0.0, v_ds) / v_ds


def erase(cell, amplitude=4.0, duration=1e-6):
    return write_pulse(cell, -abs(amplitude), duration)


def program(cell, amplitude=4.0, duration=1e-6):
    return write_pulse(cell, abs(amplitude), duration)
