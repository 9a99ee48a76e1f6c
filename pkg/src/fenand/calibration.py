"""Coordinate-search calibration of the switching kinetics against disturb anchors.

Anchors (single-port HVT cell, pass bias on the write gate):

* half-window flip at V_PASS = 2.3 V within [33 us, 300 us];
* flip times finite (inside ``horizon``) and decreasing over 1.9 ... 2.5 V;
* under 10 mV of shift after 1 s at V_PASS = 0.9 V;
* +-4 V, 1 us write pulses align at least 95 % of the grains.

The search works on (log Ea median, log sigma, log tau0, log n) and stops as
soon as every anchor holds with the configured margins, so re-running from
a calibrated point makes no moves.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace

from . import cell as C
from . import kinetics as kin

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CalibrationTargets:
    v_anchor: float = 2.3
    t_anchor: float = 1e-4
    t_anchor_band: tuple = (33e-6, 300e-6)
    t_anchor_margin: float = 1.5  # aim inside the band by this factor
    v_ordering: tuple = (1.9, 2.1, 2.3, 2.5)
    horizon: float = 1e3
    v_safe: float = 0.9
    t_safe: float = 1.0
    max_safe_shift: float = 0.005
    write_amplitude: float = 4.0
    write_duration: float = 1e-6
    min_write_fraction: float = 0.97


@dataclass
class AnchorReport:
    flip_times: dict
    safe_shift: float
    program_fraction: float
    erase_fraction: float
    residual: float
    failing: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failing


def evaluate_anchors(device, targets=None, seed=0):
    t = targets or CalibrationTargets()
    hvt = device.make_cell("HVT", seed=seed)
    lvt = device.make_cell("LVT", seed=seed)
    flips = {v: C.flip_time(hvt, v, 0.0, t.horizon) for v in t.v_ordering}
    _, safe = C.pass_stress(hvt, "front", t.v_safe, t.t_safe)
    prog = C.write_pulse(hvt, t.write_amplitude, t.write_duration)
    era = C.write_pulse(lvt, -t.write_amplitude, t.write_duration)
    f_prog = kin.aligned_fraction(prog.ensemble, +1)
    f_era = kin.aligned_fraction(era.ensemble, -1)

    residual, failing = 0.0, []
    lo, hi = t.t_anchor_band
    lo_m, hi_m = lo * t.t_anchor_margin, hi / t.t_anchor_margin
    ta = flips.get(t.v_anchor, math.inf)
    if not math.isfinite(ta):
        residual += 10.0
        failing.append("anchor flip time")
    elif not lo_m <= ta <= hi_m:
        residual += abs(math.log(ta / t.t_anchor))
        if not lo <= ta <= hi:
            failing.append("anchor flip time")
    times = [flips[v] for v in t.v_ordering]
    for v, ti in zip(t.v_ordering, times):
        if not math.isfinite(ti):
            residual += 1.0 + 0.1 * abs(v - t.v_anchor)
            failing.append(f"flip at {v} V beyond horizon")
    if all(math.isfinite(x) for x in times) and any(a <= b for a, b in zip(times, times[1:])):
        residual += 1.0
        failing.append("flip-time ordering")
    if abs(safe) > t.max_safe_shift:
        residual += abs(safe) / t.max_safe_shift
        failing.append(f"shift at {t.v_safe} V")
    for name, frac in (("program", f_prog), ("erase", f_era)):
        if frac < t.min_write_fraction:
            residual += (t.min_write_fraction - frac) * 20.0
            failing.append(f"{name} saturation")
    return AnchorReport(flips, safe, f_prog, f_era, residual, failing)


_COORDS = ("ea_median", "ea_sigma", "tau0", "n")


def _pack(k):
    return [math.log(k.ea_median), math.log(max(k.ea_sigma, 1e-4)), math.log(k.tau0), math.log(k.n)]


def _unpack(k, x):
    return replace(k, ea_median=math.exp(x[0]), ea_sigma=math.exp(x[1]),
                   tau0=math.exp(x[2]), n=max(1.0, math.exp(x[3])))


@dataclass
class CalibrationResult:
    kinetics: kin.SwitchingKinetics
    report: AnchorReport
    moves: int
    evaluations: int

    def as_dict(self):
        out = {"kinetics": asdict(self.kinetics), "moves": self.moves,
               "evaluations": self.evaluations, "residual": self.report.residual,
               "failing": list(self.report.failing),
               "flip_times_s": {str(k): v for k, v in self.report.flip_times.items()}}
        return out


def calibrate(device, targets=None, steps=(0.1, 0.4, 2.0, 0.15), max_evaluations=400,
              min_step=1e-3, seed=0):
    """Adjust (Ea median, sigma, tau0, n) until all anchors hold.

    Returns a :class:`CalibrationResult`; if the budget runs out the result
    carries the best residual and the anchors still failing.
    """
    targets = targets or CalibrationTargets()
    k = device.kinetics
    x = _pack(k)
    steps = list(steps)
    best = evaluate_anchors(replace(device, kinetics=k), targets, seed)
    evals, moves = 1, 0
    while best.residual > 0 and evals < max_evaluations and max(steps) > min_step:
        improved = False
        for i in range(len(x)):
            for direction in (+1, -1):
                trial = list(x)
                trial[i] += direction * steps[i]
                tk = _unpack(k, trial)
                rep = evaluate_anchors(replace(device, kinetics=tk), targets, seed)
                evals += 1
                if rep.residual < best.residual:
                    x, best, improved = trial, rep, True
                    moves += 1
                    log.info("move %s %+g -> residual %.4g", _COORDS[i], direction * steps[i],
                             rep.residual)
                    break
            if best.residual == 0 or evals >= max_evaluations:
                break
        if not improved:
            steps = [s * 0.5 for s in steps]
    # no move: hand back the input untouched rather than exp(log(x)) round-off
    return CalibrationResult(_unpack(k, x) if moves else k, best, moves, evals)
