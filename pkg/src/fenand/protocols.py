"""Page program with self-boosted inhibit, the pass/program disturb tradeoff,
and Monte Carlo threshold distributions.

Cells are classified by what they see during one program pulse:

* ``programmed``: selected string, selected WL; WG at V_PGM, channel grounded.
* ``pass``: selected string, unselected WLs; single-port cells carry V_PASS
  on the WG, dual-port cells keep WG at 0 and pass through the shared PG.
* ``program``: inhibited string, selected WL; WG at V_PGM over a channel
  boosted to V_boost.
* ``idle``: inhibited string, unselected WLs; WG at V_PASS (single) or 0
  (dual) over the boosted channel.

Disturb classes report the worst |delta VTH| over HVT and LVT starting
states.  In dual mode the global PG sits at V_PASS for every string.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from . import cell as C
from . import kinetics as kin

DISTURB_THRESHOLD = 0.1  # V


@dataclass(frozen=True)
class InhibitScheme:
    v_cc: float = 3.3
    v_pgm: float = 5.5
    pulse_duration: float = 10e-6
    coupling_ratio: float = 0.8
    vth_ssl: float = 0.5
    n_wls: int = 8
    leakage_rate: float = 0.0  # V/s lost by the boosted node during the pulse

    def __post_init__(self):
        if not self.v_pgm > self.v_cc > 0:
            raise ValueError("need V_PGM > V_CC > 0")
        if not 0 < self.coupling_ratio <= 1:
            raise ValueError("coupling ratio must lie in (0, 1]")
        if self.n_wls < 1:
            raise ValueError("n_wls must be >= 1")
        if not self.pulse_duration > 0:
            raise ValueError("pulse duration must be > 0")
        if self.leakage_rate < 0:
            raise ValueError("leakage rate must be >= 0")


def boosted_channel_potential(scheme, v_pass):
    """Precharge through the SSL plus capacitive coupling of the mean WL swing."""
    precharge = max(0.0, scheme.v_cc - scheme.vth_ssl)
    swing = ((scheme.n_wls - 1) * v_pass + scheme.v_pgm) / scheme.n_wls
    return precharge + scheme.coupling_ratio * swing


def _mean_boost(scheme, v_pass):
    v_b = boosted_channel_potential(scheme, v_pass)
    return max(0.0, v_b - 0.5 * scheme.leakage_rate * scheme.pulse_duration)


@dataclass(frozen=True)
class DisturbReport:
    v_pass: float
    port_mode: str
    v_boost: float
    programmed: float  # signed delta VTH of the programmed cell
    pass_disturb: float | None  # worst |delta VTH| per class; None if the class is empty
    program_disturb: float | None
    idle_disturb: float | None

    def as_dict(self):
        return {
            "v_pass": self.v_pass,
            "port_mode": self.port_mode,
            "v_boost_v": self.v_boost,
            "dvth_programmed_v": self.programmed,
            "dvth_pass_v": self.pass_disturb,
            "dvth_prog_v": self.program_disturb,
            "dvth_idle_v": self.idle_disturb,
        }


def _shift(cell, v_wg, v_pg, duration, v_channel):
    new = C.hold(cell, v_wg, v_pg, duration, v_channel=v_channel)
    return new.vth_front - cell.vth_front


def _worst(device, seed, v_wg, v_pg, duration, v_channel):
    shifts = [_shift(device.make_cell(s, seed=seed), v_wg, v_pg, duration, v_channel)
              for s in ("HVT", "LVT")]
    return max(abs(x) for x in shifts)


def program_page(device, selected_wl, bit_pattern, scheme=None, v_pass=2.0, port_mode="single",
                 seed=0):
    """One program pulse on WL ``selected_wl``; ``bit_pattern[j]`` = 1 programs string j."""
    scheme = scheme or InhibitScheme()
    if not 0 <= selected_wl < scheme.n_wls:
        raise IndexError(f"selected WL {selected_wl} outside 0..{scheme.n_wls - 1}")
    mode = port_mode.lower()
    if mode not in ("single", "dual"):
        raise ValueError(f"port_mode must be 'single' or 'dual', got {port_mode!r}")
    bits = [int(b) for b in bit_pattern]
    has_prog, has_inhibit = 1 in bits, 0 in bits
    has_unselected = scheme.n_wls > 1
    t = scheme.pulse_duration
    v_boost = _mean_boost(scheme, v_pass)
    v_wg_pass = v_pass if mode == "single" else 0.0
    v_pg = 0.0 if mode == "single" else v_pass

    programmed = 0.0
    if has_prog:
        hvt = device.make_cell("HVT", seed=seed)
        programmed = _shift(hvt, scheme.v_pgm, v_pg, t, 0.0)
    pass_d = _worst(device, seed, v_wg_pass, v_pg, t, 0.0) if has_prog and has_unselected else None
    prog_d = _worst(device, seed, scheme.v_pgm, v_pg, t, v_boost) if has_inhibit else None
    idle_d = (_worst(device, seed, v_wg_pass, v_pg, t, v_boost)
              if has_inhibit and has_unselected else None)
    return DisturbReport(float(v_pass), mode, v_boost, programmed, pass_d, prog_d, idle_d)


@dataclass(frozen=True)
class TradeoffSweep:
    port_mode: str
    v_pass: np.ndarray
    dvth_pass: np.ndarray
    dvth_prog: np.ndarray
    raw_pass: np.ndarray
    raw_prog: np.ndarray
    threshold: float
    window: tuple | None  # (lo, hi) of V_PASS with both disturbs below threshold

    @property
    def window_width(self):
        return 0.0 if self.window is None else self.window[1] - self.window[0]

    def as_dict(self):
        lo, hi = self.window if self.window is not None else (None, None)
        return {
            "port_mode": self.port_mode,
            "threshold_v": self.threshold,
            "v_pass": [float(v) for v in self.v_pass],
            "dvth_pass_v": [float(v) for v in self.dvth_pass],
            "dvth_prog_v": [float(v) for v in self.dvth_prog],
            "window_lo_v": lo,
            "window_hi_v": hi,
        }

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def disturb_tradeoff_sweep(device, scheme=None, v_pass_range=(1.0, 3.0), n_points=21,
                           port_mode="single", threshold=DISTURB_THRESHOLD, seed=0):
    """Pass and program disturb versus V_PASS, plus the window below ``threshold``.

    The default range starts near the erased-state threshold, below which the
    selected string would not conduct.

    Raw per-point shifts are made monotone with running maxima taken from the
    appropriate end, which removes grain-sampling ripple without moving any
    point by more than that ripple.
    """
    lo, hi = v_pass_range
    if not 0 <= lo < hi:
        raise ValueError("v_pass_range must satisfy 0 <= lo < hi")
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    scheme = scheme or InhibitScheme()
    v = np.linspace(lo, hi, n_points)
    reports = [program_page(device, 0, (1, 0), scheme, float(x), port_mode, seed) for x in v]
    raw_pass = np.array([r.pass_disturb for r in reports])
    raw_prog = np.array([r.program_disturb for r in reports])
    d_pass = np.maximum.accumulate(raw_pass)
    d_prog = np.maximum.accumulate(raw_prog[::-1])[::-1]
    ok = (d_pass < threshold) & (d_prog < threshold)
    window = (float(v[ok].min()), float(v[ok].max())) if ok.any() else None
    return TradeoffSweep(port_mode, v, d_pass, d_prog, raw_pass, raw_prog, threshold, window)


# --- Monte Carlo distributions ------------------------------------------------------

@dataclass(frozen=True)
class Variability:
    sigma_vth0: float = 0.0  # V
    sigma_ea_median: float = 0.0  # relative


@dataclass(frozen=True)
class StressCondition:
    """Bias seen by a population during one disturb event."""

    v_wg: float = 0.0
    v_pg: float = 0.0
    v_channel: float = 0.0
    duration: float = 10e-6
    state: str = "HVT"

    @classmethod
    def pass_disturb(cls, scheme, v_pass, port_mode="dual", state="HVT"):
        if port_mode == "dual":
            return cls(0.0, v_pass, 0.0, scheme.pulse_duration, state)
        return cls(v_pass, 0.0, 0.0, scheme.pulse_duration, state)


_STREAM_VTH0 = 101
_STREAM_EA = 102


@dataclass(frozen=True)
class Distribution:
    vth_pre: np.ndarray  # sorted
    vth_post: np.ndarray  # sorted

    @property
    def quantiles(self):
        n = len(self.vth_pre)
        return (np.arange(n) + 0.5) / n

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantile", "vth_pre_v", "vth_post_v"])
        for q, a, b in zip(self.quantiles, self.vth_pre, self.vth_post):
            w.writerow([repr(float(q)), repr(float(a)), repr(float(b))])
        return buf.getvalue()


def _cell_sample(device, index, variability, condition, seed, n_grains):
    """Pre/post VTH of one Monte Carlo cell; draws depend only on (seed, index).

    Every cell shares one grain realization, so cell-to-cell spread comes only
    from the declared variability and zero variability gives identical cells.
    """
    idx = np.array([index], dtype=np.uint64)
    z_vth = float(_normal(seed, _STREAM_VTH0, idx)[0])
    z_ea = float(_normal(seed, _STREAM_EA, idx)[0])
    k = replace(device.kinetics,
                ea_median=device.kinetics.ea_median * math.exp(variability.sigma_ea_median * z_ea))
    params = replace(device.params,
                     vth0_front=device.params.vth0_front + variability.sigma_vth0 * z_vth)
    dev = replace(device, kinetics=k, params=params, n_grains=n_grains)
    cell = dev.make_cell(condition.state, seed=seed)
    after = C.hold(cell, condition.v_wg, condition.v_pg, condition.duration,
                   v_channel=condition.v_channel)
    return cell.vth_front, after.vth_front


def _normal(seed, stream, index):
    return ndtri(kin.counter_uniform(seed, stream, index))


@dataclass(frozen=True)
class _Samples:
    index: np.ndarray
    pre: np.ndarray
    post: np.ndarray


def sample_cells(device, indices, variability, condition, seed=0, n_grains=None):
    """Unsorted per-cell samples for the given cell indices."""
    n_grains = n_grains or device.n_grains
    out = [_cell_sample(device, int(i), variability, condition, seed, n_grains) for i in indices]
    pre = np.array([a for a, _ in out])
    post = np.array([b for _, b in out])
    return _Samples(np.asarray(indices, dtype=np.int64), pre, post)


def merge_samples(*parts):
    """Combine sample sets in cell-index order into a sorted distribution."""
    idx = np.concatenate([p.index for p in parts])
    order = np.argsort(idx, kind="stable")
    if len(np.unique(idx)) != len(idx):
        raise ValueError("sample sets overlap")
    pre = np.concatenate([p.pre for p in parts])[order]
    post = np.concatenate([p.post for p in parts])[order]
    return Distribution(np.sort(pre), np.sort(post))


def vth_distribution(device, n_cells, variability=None, condition=None, seed=0, n_grains=None):
    """Monte Carlo VTH before and after one disturb event, as sorted samples."""
    if n_cells < 1:
        raise ValueError("n_cells must be >= 1")
    variability = variability or Variability()
    condition = condition or StressCondition()
    return merge_samples(sample_cells(device, range(n_cells), variability, condition, seed,
                                      n_grains))
