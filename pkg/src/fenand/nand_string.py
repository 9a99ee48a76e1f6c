"""Series NAND string of FeFETs: DC string current, target read, PWL transients.

Cells are ordered from the bit-line (BL) end to the source-line (SL) end.
Dual-port strings share one pass-gate (PG) node.  The transient engine is
quasi-static: at every step the node potentials are solved for the
instantaneous biases and each cell's grains evolve under its own E_FE.
"""

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import cell as C
from . import kinetics as kin
from .cell import CellParams, ExtractionError, IVCurve


@dataclass(frozen=True, eq=False)
class NandString:
    cells: tuple
    shared_pass_gate: bool = True
    ssl_vth: float | None = None
    gsl_vth: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        if not self.cells:
            raise ValueError("a string needs at least one cell")

    def __len__(self):
        return len(self.cells)

    def with_cells(self, cells):
        return replace(self, cells=tuple(cells))

    def with_cell(self, index, new_cell):
        cells = list(self.cells)
        cells[index] = new_cell
        return self.with_cells(cells)


def make_string(device, states, seed=0, shared_pass_gate=True, ssl_vth=None, gsl_vth=None):
    """String of cells in the given "HVT"/"LVT" states; each cell gets seed+index."""
    cells = [device.make_cell(s, seed=seed + i) for i, s in enumerate(states)]
    return NandString(tuple(cells), shared_pass_gate, ssl_vth, gsl_vth)


def _select_params(params, vth):
    return replace(params, vth0_front=vth, gamma_f=0.0, r_front=0.0)


def _devices(string, wl_biases, v_pg, v_ssl, v_gsl):
    """(params, overdrive) for every series device, BL end first."""
    if len(wl_biases) != len(string.cells):
        raise ValueError(f"expected {len(string.cells)} WL biases, got {len(wl_biases)}")
    devs = []
    ref = string.cells[0].params
    if string.ssl_vth is not None:
        p = _select_params(ref, string.ssl_vth)
        devs.append((p, (v_ssl if v_ssl is not None else 0.0) - string.ssl_vth))
    for c, v in zip(string.cells, wl_biases):
        devs.append((c.params, C.front_overdrive(c.params, c.polarization, v, v_pg)))
    if string.gsl_vth is not None:
        p = _select_params(ref, string.gsl_vth)
        devs.append((p, (v_gsl if v_gsl is not None else 0.0) - string.gsl_vth))
    return devs


@dataclass(frozen=True, eq=False)
class StringSolution:
    current: float  # A, positive from BL to SL
    nodes: np.ndarray  # V, BL first, length n_devices + 1
    v_ds: np.ndarray  # per device, BL first, drain (BL side) minus source
    device_currents: np.ndarray
    terminal_error: float  # V, applied minus summed V_DS
    n_select_top: int = 0

    @property
    def continuity_error(self):
        """Largest per-device current deviation, relative to the string current."""
        if self.current == 0:
            return float(np.max(np.abs(self.device_currents)))
        return float(np.max(np.abs(self.device_currents - self.current)) / abs(self.current))

    def cell_channel_potentials(self, n_cells):
        """Mean of source and drain node potentials for each memory cell."""
        k = self.n_select_top
        return 0.5 * (self.nodes[k : k + n_cells] + self.nodes[k + 1 : k + n_cells + 1])


def _walk(devs, v_low, current):
    """Per-device V_DS walking up from the low end; None if a device saturates."""
    out = []
    v = v_low
    for params, ov in devs:
        d = C.vds_for_current(params, ov, v, current)
        if d is None:
            return None
        out.append(d)
        v += d
    return out


def _saturating_index(devs, v_low, current):
    v = v_low
    for k, (params, ov) in enumerate(devs):
        d = C.vds_for_current(params, ov, v, current)
        if d is None:
            return k
        v += d
    return None


def _vds_below(params, ov, v_d, span, current):
    """V_DS in [0, span] at which the device with drain ``v_d`` carries ``current``."""
    def excess(d):
        return C.current_for_vds(params, ov, v_d - d, d) / current - 1.0

    if excess(span) <= 0:
        return span
    return brentq(excess, 0.0, span, xtol=1e-300, rtol=1e-15, maxiter=2000)


def _solve_chain(devs, v_high, v_low):
    """Current and per-device V_DS (listed from the high end) for v_high >= v_low."""
    up = devs[::-1]
    if v_high == v_low:
        return 0.0, [0.0] * len(devs)
    cap = min(p.i_spec * C._ekv_f((ov / p.slope_factor - v_low) / p.vt) for p, ov in up)
    lo_log, hi_log = math.log(cap) - 120.0, math.log(cap) + 1e-9

    def mismatch(log_i):
        vds = _walk(up, v_low, math.exp(log_i))
        if vds is None:
            return 1e6
        return v_low + math.fsum(vds) - v_high

    while mismatch(lo_log) > 0 and lo_log > -650.0:
        lo_log -= 120.0
    if mismatch(lo_log) > 0:
        log_i = lo_log
    else:
        log_i = brentq(mismatch, lo_log, hi_log, xtol=1e-15, rtol=1e-15, maxiter=500)
    current = math.exp(log_i)
    vds = _walk(up, v_low, current)
    gap = v_high - v_low - math.fsum(vds)
    if abs(gap) > 1e-12 * max(1.0, abs(v_high - v_low)):
        # a device saturated to within rounding: I is set, but the nodes above it
        # must be found walking down from the high end
        k = _saturating_index(up, v_low, current * (1 + 1e-9))
        if k is None:
            k = int(np.argmax(vds))
        v_k = v_low + math.fsum(vds[:k])
        above = []
        for j in range(len(up) - 1, k, -1):
            params, ov = up[j]
            d = _vds_below(params, ov, v_high - math.fsum(above), v_high - v_k - math.fsum(above),
                           current)
            above.append(d)
            vds[j] = d
        vds[k] = v_high - v_k - math.fsum(above)
    return current, vds[::-1]


def solve_string_current(string, v_bl, v_sl, wl_biases, v_pg=0.0, v_ssl=None, v_gsl=None):
    """Current-continuity solve of the series chain.

    Outer bracketing on log(I), inner closed-form V_DS inversion per device.
    An all-off string returns its (tiny) leakage current rather than failing.
    """
    devs = _devices(string, wl_biases, v_pg, v_ssl, v_gsl)
    if v_bl >= v_sl:
        current, vds = _solve_chain(devs, v_bl, v_sl)
    else:
        i_rev, vds_rev = _solve_chain(devs[::-1], v_sl, v_bl)
        current, vds = -i_rev, [-d for d in vds_rev[::-1]]
    vds = np.asarray(vds, dtype=float)
    nodes = np.empty(len(devs) + 1)
    nodes[-1] = v_sl
    for k in range(len(devs) - 1, -1, -1):
        nodes[k] = nodes[k + 1] + vds[k]
    terminal_error = v_bl - nodes[0]
    nodes[0] = v_bl
    dev_i = np.array([C.current_for_vds(p, ov, nodes[k + 1], vds[k])
                      for k, (p, ov) in enumerate(devs)])
    return StringSolution(current, nodes, vds, dev_i, terminal_error,
                          1 if string.ssl_vth is not None else 0)


@dataclass(frozen=True, eq=False)
class ReadResult:
    curve: IVCurve
    vth_sensed: float | None
    under_pass: bool
    pass_ratio: float  # string current / current with LVT pass cells, at the sweep top


def _ideal_pass(string, targets):
    """Same string with every non-target cell fully programmed (LVT)."""
    cells = [c if i in targets else c.with_ensemble(kin.saturate(c.ensemble, +1))
             for i, c in enumerate(string.cells)]
    return string.with_cells(cells)


def read_target(string, target_index, v_sweep, v_pass, pass_port="WL", v_ds=0.05,
                v_unselected=0.0, v_select=None):
    """Sweep the target WL(s) with the rest of the string passing.

    ``pass_port="WL"`` holds unselected WLs at ``v_pass`` with the PG grounded;
    ``pass_port="PG"`` holds unselected WLs at ``v_unselected`` and drives the
    shared PG to ``v_pass``.  ``target_index`` may be a tuple for wired cells.
    When the curve never reaches the constant-current criterion because pass
    cells limit the current, the result is flagged ``under_pass`` instead of
    raising.
    """
    targets = (target_index,) if isinstance(target_index, (int, np.integer)) else tuple(target_index)
    n = len(string)
    for t in targets:
        if not 0 <= t < n:
            raise IndexError(f"target {t} outside string of {n} cells")
    port = pass_port.upper()
    if port not in ("WL", "PG"):
        raise ValueError(f"pass_port must be 'WL' or 'PG', got {pass_port!r}")
    if port == "PG" and not string.shared_pass_gate:
        raise ValueError("PG pass needs a string with a shared pass gate")
    v_pg = v_pass if port == "PG" else 0.0
    v_other = v_pass if port == "WL" else v_unselected
    v_sweep = np.asarray(v_sweep, dtype=float)
    v_sel = v_select if v_select is not None else max(v_pass, 3.0)

    def biases(vg):
        return [vg if i in targets else v_other for i in range(n)]

    i_d = np.array([solve_string_current(string, v_ds, 0.0, biases(vg), v_pg, v_sel, v_sel).current
                    for vg in v_sweep])
    curve = IVCurve(v_sweep, i_d)
    ideal = solve_string_current(_ideal_pass(string, targets), v_ds, 0.0, biases(v_sweep[-1]),
                                 v_pg, v_sel, v_sel).current
    ratio = float(i_d[-1] / ideal) if ideal > 0 else 0.0
    params = string.cells[targets[0]].params
    try:
        vth_sensed = C.extract_vth_constant_current(curve, params.w, params.l)
    except ExtractionError:
        if ratio < 0.5:
            return ReadResult(curve, None, True, ratio)
        raise
    return ReadResult(curve, vth_sensed, ratio < 0.5, ratio)


# --- waveforms --------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    duration: float

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("segment durations must be > 0")


def _terminal_sort_key(name):
    order = {"BL": 0, "SSL": 1, "PG": 3, "GSL": 4, "SL": 5}
    if name.startswith("WL_"):
        return (2, int(name[3:]))
    return (order.get(name, 9), 0)


@dataclass(frozen=True, eq=False)
class BiasWaveform:
    """Piecewise-linear per-terminal schedule (terminals BL, SL, PG, WL_i, SSL, GSL)."""

    segments: dict

    def __post_init__(self):
        segs = {k: tuple(v) for k, v in self.segments.items()}
        object.__setattr__(self, "segments", segs)
        totals = {k: math.fsum(s.duration for s in v) for k, v in segs.items()}
        if not totals:
            raise ValueError("waveform has no terminals")
        ref = max(totals.values())
        for k, tot in totals.items():
            if abs(tot - ref) > 1e-9 * ref:
                raise ValueError(f"terminal {k} covers {tot} s, expected {ref} s")
        for k in segs:
            if not (k in ("BL", "SL", "PG", "SSL", "GSL") or (k.startswith("WL_") and k[3:].isdigit())):
                raise ValueError(f"unknown terminal {k!r}")

    @property
    def total_duration(self):
        return max(math.fsum(s.duration for s in v) for v in self.segments.values())

    @property
    def terminals(self):
        return sorted(self.segments, key=_terminal_sort_key)

    def breakpoints(self):
        pts = {0.0}
        for segs in self.segments.values():
            t = 0.0
            for s in segs:
                t += s.duration
                pts.add(t)
        total = self.total_duration
        out = sorted(p for p in pts if p < total * (1 - 1e-12))
        return out + [total]

    def value(self, terminal, t, side="right"):
        """Bias at time ``t``; at a segment boundary ``side`` picks which segment."""
        segs = self.segments.get(terminal)
        if segs is None:
            return 0.0
        t0 = 0.0
        for i, s in enumerate(segs):
            t1 = t0 + s.duration
            last = i == len(segs) - 1
            inside = t0 <= t < t1 if side == "right" else t0 < t <= t1
            if inside or (last and t >= t1 - 1e-15 * max(t1, 1.0)) or (side == "left" and i == 0 and t <= t0):
                if t <= t0:
                    return s.start
                if t >= t1:
                    return s.end
                return s.start + (s.end - s.start) * (t - t0) / s.duration
            t0 = t1
        return segs[-1].end

    @classmethod
    def constant(cls, duration, **biases):
        return cls({k: [Segment(v, v, duration)] for k, v in biases.items()})

    @classmethod
    def from_phases(cls, phases, terminals):
        """Concatenate phases: each ``(duration, {terminal: value or (start, end)})``."""
        segs = {t: [] for t in terminals}
        for duration, values in phases:
            for t in terminals:
                v = values.get(t, 0.0)
                a, b = v if isinstance(v, tuple) else (v, v)
                segs[t].append(Segment(a, b, duration))
        return cls(segs)

    @classmethod
    def from_trace(cls, trace):
        """Linear interpolation through every recorded sample of a trace."""
        segs = {}
        for name, values in trace.biases.items():
            segs[name] = [Segment(values[i], values[i + 1], trace.t[i + 1] - trace.t[i])
                          for i in range(len(trace.t) - 1)]
        return cls(segs)


@dataclass(frozen=True, eq=False)
class StringTrace:
    t: np.ndarray
    nodes: np.ndarray  # (n_samples, n_nodes)
    current: np.ndarray
    vth: np.ndarray  # (n_samples, n_cells) front VTH at zero back bias
    e_fe: np.ndarray  # (n_samples, n_cells)
    biases: dict = field(default_factory=dict)

    def columns(self):
        n_nodes, n_cells = self.nodes.shape[1], self.vth.shape[1]
        return (["t_s", "I_string_A"]
                + [f"node_{i}_V" for i in range(n_nodes)]
                + [f"vth_cell_{i}_V" for i in range(n_cells)]
                + [f"efe_cell_{i}_Vpm" for i in range(n_cells)])

    def to_csv(self, path_or_buffer=None):
        """Write the trace; returns the CSV text when no target is given."""
        buf = io.StringIO() if path_or_buffer is None else None
        handle = buf if buf is not None else (
            open(path_or_buffer, "w", newline="") if isinstance(path_or_buffer, str)
            or hasattr(path_or_buffer, "__fspath__") else path_or_buffer)
        try:
            w = csv.writer(handle, lineterminator="\n")
            w.writerow(self.columns())
            for k in range(len(self.t)):
                row = [self.t[k], self.current[k], *self.nodes[k], *self.vth[k], *self.e_fe[k]]
                w.writerow([repr(float(x)) for x in row])
        finally:
            if buf is None and handle is not path_or_buffer:
                handle.close()
        return buf.getvalue() if buf is not None else None


def _bias_set(values, n_cells):
    wl = [values.get(f"WL_{i}", 0.0) for i in range(n_cells)]
    return (values.get("BL", 0.0), values.get("SL", 0.0), wl, values.get("PG", 0.0),
            values.get("SSL"), values.get("GSL"))


def _solve_at(string, values):
    v_bl, v_sl, wl, v_pg, v_ssl, v_gsl = _bias_set(values, len(string))
    sol = solve_string_current(string, v_bl, v_sl, wl, v_pg, v_ssl, v_gsl)
    v_ch = sol.cell_channel_potentials(len(string))
    return sol, wl, v_pg, v_ch


def apply_waveform(string, waveform, max_step=None, sample_interval=None):
    """Run ``waveform`` on ``string``; returns (StringTrace, final string).

    Each interval between waveform breakpoints is cut into equal steps no
    longer than ``max_step``.  A step solves the string at the mid-step
    biases, then holds every cell at its gate-to-channel biases for the step.
    Samples are taken at step ends no closer than ``sample_interval``.
    """
    terminals = waveform.terminals
    names = sorted(set(terminals) | {"BL", "SL", "PG"} | {f"WL_{i}" for i in range(len(string))},
                   key=_terminal_sort_key)
    bps = waveform.breakpoints()

    samples = {"t": [], "nodes": [], "current": [], "vth": [], "e_fe": []}
    bias_log = {k: [] for k in names}

    def record(t, values, s):
        sol, wl, v_pg, v_ch = _solve_at(s, values)
        samples["t"].append(t)
        samples["nodes"].append(sol.nodes)
        samples["current"].append(sol.current)
        samples["vth"].append([c.vth_front for c in s.cells])
        samples["e_fe"].append([c.e_fe(wl[i], v_pg, v_ch[i]) for i, c in enumerate(s.cells)])
        for k in names:
            bias_log[k].append(values.get(k, 0.0))

    def values_at(t, side):
        return {k: waveform.value(k, t, side) for k in names}

    record(0.0, values_at(0.0, "right"), string)
    last_sample = 0.0
    for ta, tb in zip(bps, bps[1:]):
        va, vb = values_at(ta, "right"), values_at(tb, "left")
        span = tb - ta
        m = 1 if max_step is None else max(1, math.ceil(span / max_step - 1e-9))
        for j in range(m):
            f0, f1 = j / m, (j + 1) / m
            t0 = ta + span * f0
            t1 = tb if j == m - 1 else ta + span * f1
            v0 = {k: va[k] + (vb[k] - va[k]) * f0 for k in names}
            v1 = {k: vb[k] if j == m - 1 else va[k] + (vb[k] - va[k]) * f1 for k in names}
            mid = {k: 0.5 * (v0[k] + v1[k]) for k in names}
            sol, wl, v_pg, v_ch = _solve_at(string, mid)
            dt = t1 - t0
            cells = [C.hold(c, wl[i], v_pg, dt, v_channel=v_ch[i])
                     for i, c in enumerate(string.cells)]
            string = string.with_cells(cells)
            final = j == m - 1 and tb == bps[-1]
            if final or sample_interval is None or t1 - last_sample >= sample_interval * (1 - 1e-9):
                record(t1, v1, string)
                last_sample = t1

    trace = StringTrace(
        t=np.asarray(samples["t"]),
        nodes=np.asarray(samples["nodes"]),
        current=np.asarray(samples["current"]),
        vth=np.asarray(samples["vth"]),
        e_fe=np.asarray(samples["e_fe"]),
        biases={k: np.asarray(v) for k, v in bias_log.items()},
    )
    return trace, string


def stress_waveform(string, victim_index, v_pass, duration, pass_port="WL", v_wg_bias=0.0,
                    v_other=0.0):
    n = len(string)
    values = {"BL": 0.0, "SL": 0.0, "PG": 0.0}
    for i in range(n):
        values[f"WL_{i}"] = v_other
    if pass_port.upper() == "WL":
        values[f"WL_{victim_index}"] = v_pass
    else:
        values[f"WL_{victim_index}"] = v_wg_bias
        values["PG"] = v_pass
    return BiasWaveform.constant(duration, **values)


@dataclass(frozen=True, eq=False)
class DisturbGrid:
    v_pass: np.ndarray
    dwell: np.ndarray
    dvth: np.ndarray  # (len(v_pass), len(dwell)) victim front VTH shift, V


def pass_disturb_experiment(string, victim_index, v_pass_values, dwell_times, pass_port="WL",
                            v_wg_bias=0.0, v_other=0.0, victim_state="HVT"):
    """Victim VTH shift for every (V_PASS, dwell) pair, re-initializing each run."""
    victim = string.cells[victim_index]
    sign = -1 if victim_state.upper() == "HVT" else +1
    victim = victim.with_ensemble(kin.saturate(victim.ensemble, sign))
    fresh = string.with_cell(victim_index, victim)
    v_pass_values = np.asarray(v_pass_values, float)
    dwell_times = np.asarray(dwell_times, float)
    out = np.zeros((len(v_pass_values), len(dwell_times)))
    for i, vp in enumerate(v_pass_values):
        for j, t in enumerate(dwell_times):
            if t == 0:
                continue
            wf = stress_waveform(fresh, victim_index, vp, t, pass_port, v_wg_bias, v_other)
            _, after = apply_waveform(fresh, wf)
            out[i, j] = after.cells[victim_index].vth_front - victim.vth_front
    return DisturbGrid(v_pass_values, dwell_times, out)


def field_report(string, cell_index, wl_biases=None, v_pg=0.0, v_bl=0.0, v_sl=0.0):
    """Layer fields of one cell at the given string biases."""
    n = len(string)
    if not 0 <= cell_index < n:
        raise IndexError(f"cell {cell_index} outside string of {n} cells")
    wl = [0.0] * n if wl_biases is None else list(wl_biases)
    sol = solve_string_current(string, v_bl, v_sl, wl, v_pg)
    v_ch = sol.cell_channel_potentials(n)
    return string.cells[cell_index].solve(wl[cell_index], v_pg, v_ch[cell_index])


# --- declared default erase / write / read sequence for a dual-port string -----------

@dataclass(frozen=True)
class OperationBiases:
    """Declared bias defaults for the erase, read, program, read sequence."""

    v_erase: float = -4.0
    v_program: float = 4.0
    t_write: float = 1e-6
    v_pg_read: float = 4.0
    v_wl_read: float = -0.3  # selected WL
    v_wl_unselected: float = 0.3
    v_bl_read: float = 0.05
    t_read: float = 10e-6
    t_idle: float = 1e-6


def operation_waveform(n_cells, target_index, biases=None):
    """Erase all, read target via PG, program target, read again (with idle gaps).

    Returns (waveform, {"read_erased": (t0, t1), "read_programmed": (t0, t1)}).
    """
    b = biases or OperationBiases()
    terms = ["BL", "SL", "PG"] + [f"WL_{i}" for i in range(n_cells)]
    erase = {f"WL_{i}": b.v_erase for i in range(n_cells)}
    read = {"BL": b.v_bl_read, "PG": b.v_pg_read,
            **{f"WL_{i}": b.v_wl_unselected for i in range(n_cells)},
            f"WL_{target_index}": b.v_wl_read}
    prog = {f"WL_{target_index}": b.v_program}
    phases = [(b.t_write, erase), (b.t_idle, {}), (b.t_read, read), (b.t_idle, {}),
              (b.t_write, prog), (b.t_idle, {}), (b.t_read, read), (b.t_idle, {})]
    starts = np.cumsum([0.0] + [p[0] for p in phases])
    windows = {"read_erased": (starts[2], starts[3]), "read_programmed": (starts[6], starts[7])}
    return BiasWaveform.from_phases(phases, terms), windows


def window_current(trace, window):
    """Mean string current over the samples strictly inside ``window`` and at its end."""
    t0, t1 = window
    sel = (trace.t > t0 + 1e-15) & (trace.t <= t1 * (1 + 1e-12))
    return float(np.mean(trace.current[sel]))
