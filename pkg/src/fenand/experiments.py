"""Figure-level experiments: each id maps a config to a table plus key scalars.

Outputs are deterministic for a given (config, seed, version): no timestamps
or timings go into files, and floats are written with ``repr``.
"""

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import cell as C
from . import electrostatics as E
from . import kinetics as kin
from . import nand_string as S
from . import protocols as P


@dataclass
class Result:
    experiment: str
    columns: list
    rows: list
    summary: dict
    extra: dict = field(default_factory=dict)  # JSON-only payload

    def csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _sweep(cfg, key, default):
    v = cfg.section("sweep")[key]
    return default if v is None else v


DECADES = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0]


# --- cell-level ---------------------------------------------------------------------


def _field_curves(cfg, terminal):
    dev = cfg.device()
    lo = _sweep(cfg, "v_pass_lo", 0.0)
    hi = _sweep(cfg, "v_pass_hi", 4.0)
    n = _sweep(cfg, "n_points", 41)
    curves = {s: E.efe_vs_vpass_curve(dev.stack, s, terminal, (lo, hi), n, dev.channel, dev.ps)
              for s in ("HVT", "LVT")}
    v = curves["HVT"][:, 0]
    return dev, v, curves["HVT"][:, 1], curves["LVT"][:, 1]


def fig2g(cfg):
    """E_FE versus V_PASS on the write gate (single-port read)."""
    _, v, h, l = _field_curves(cfg, "WG")
    slope_h = np.diff(h) / np.diff(v)
    rows = list(zip(v, h, l))
    return Result("fig2g", ["v_pass_v", "efe_hvt_vpm", "efe_lvt_vpm"], rows,
                  {"min_dEfe_dV_hvt": float(slope_h.min()),
                   "efe_hvt_at_max_vpm": float(h[-1]), "efe_lvt_at_max_vpm": float(l[-1])})


def fig2h(cfg):
    """E_FE versus V_PASS on the pass gate, with the LVT screening factor."""
    dev, v, h, l = _field_curves(cfg, "PG")
    scr = [E.screening_factor(dev.stack, dev.ps, x, dev.channel) for x in v]
    rows = list(zip(v, h, l, scr))
    return Result("fig2h", ["v_pass_v", "efe_hvt_vpm", "efe_lvt_vpm", "screening_lvt"], rows,
                  {"hvt_efe_change_vpm": float(h[-1] - h[0]),
                   "lvt_efe_change_vpm": float(l[-1] - l[0]),
                   "lvt_screening_at_max": float(scr[-1])})


def _cell_grid(cfg, port, v_default, states):
    dev = cfg.device()
    v_pass = _sweep(cfg, "v_pass", v_default)
    dwell = _sweep(cfg, "dwell", DECADES)
    rows = []
    worst = 0.0
    for state in states:
        fresh = dev.make_cell(state, seed=cfg.seed)
        for v in v_pass:
            for t in dwell:
                dv = C.pass_stress(fresh, port, v, t)[1] if t > 0 else 0.0
                worst = max(worst, abs(dv))
                rows.append((v, t, state, dv) if len(states) > 1 else (v, t, dv))
    return dev, v_pass, rows, worst


def fig2k(cfg):
    """Single-cell pass disturb on the write gate (HVT victim)."""
    dev, v_pass, rows, _ = _cell_grid(cfg, "front", [0.9, 1.5, 1.9, 2.1, 2.3, 2.5], ("HVT",))
    hvt = dev.make_cell("HVT", seed=cfg.seed)
    flips = {f"{v:g}": C.flip_time(hvt, v, 0.0, 10.0) for v in v_pass}
    return Result("fig2k", ["v_pass_v", "dwell_s", "dvth_v"], rows, {"flip_time_s": flips})


def fig2l(cfg):
    """Single-cell pass stress on the pass gate, both states."""
    _, _, rows, worst = _cell_grid(cfg, "back", [2.0, 5.0, 10.0, 15.0], ("HVT", "LVT"))
    return Result("fig2l", ["v_pass_v", "dwell_s", "state", "dvth_v"], rows,
                  {"max_abs_dvth_v": worst})


# --- three-cell string --------------------------------------------------------------


def fig3b(cfg):
    """Target (T2) read in a three-cell string for every neighbour combination."""
    dev = cfg.device()
    v_pass = _sweep(cfg, "v_pass", [2.0])[0]
    n = _sweep(cfg, "n_points", 201)
    lo = _sweep(cfg, "v_pass_lo", -1.0)
    hi = _sweep(cfg, "v_pass_hi", 3.0)
    sweep = np.linspace(lo, hi, n)
    rows, sensed = [], {}
    for target in ("HVT", "LVT"):
        iso = C.extract_vth_constant_current(C.id_vg(dev.make_cell(target, seed=cfg.seed + 1),
                                                     "front", lo, hi, n), dev.params.w,
                                             dev.params.l)
        sensed[f"{target}_isolated"] = iso
        for top in ("LVT", "HVT"):
            for bottom in ("LVT", "HVT"):
                s = S.make_string(dev, [top, target, bottom], seed=cfg.seed)
                r = S.read_target(s, 1, sweep, v_pass)
                sensed[f"{target}_{top}-{bottom}"] = r.vth_sensed
                rows += [(f"{top}-{bottom}", target, v, i) for v, i in zip(sweep, r.curve.i_d)]
    dev_max = max(abs(sensed[k] - sensed[f"{k.split('_')[0]}_isolated"])
                  for k in sensed if not k.endswith("isolated"))
    return Result("fig3b", ["neighbors", "target_state", "v_wl_v", "i_string_a"], rows,
                  {"vth_sensed_v": sensed, "max_neighbor_deviation_v": dev_max})


def _string_grid(cfg, port, v_default, states):
    dev = cfg.device()
    v_pass = _sweep(cfg, "v_pass", v_default)
    dwell = _sweep(cfg, "dwell", DECADES)
    s = S.make_string(dev, ["LVT", "HVT", "LVT"], seed=cfg.seed)
    rows, worst = [], 0.0
    for state in states:
        g = S.pass_disturb_experiment(s, 1, v_pass, dwell, port, victim_state=state)
        for i, v in enumerate(v_pass):
            for j, t in enumerate(dwell):
                worst = max(worst, abs(g.dvth[i, j]))
                rows.append((v, t, state, g.dvth[i, j]) if len(states) > 1
                            else (v, t, g.dvth[i, j]))
    return dev, s, v_pass, rows, worst


def fig3d(cfg):
    """Pass disturb of T2 (HVT) in a three-cell string, V_PASS on its WL."""
    dev, s, v_pass, rows, _ = _string_grid(cfg, "WL", [0.9, 1.3, 1.7, 1.9, 2.1, 2.3, 2.5],
                                           ("HVT",))
    victim = s.cells[1].with_ensemble(kin.saturate(s.cells[1].ensemble, -1))
    # string ends grounded: the victim channel sits at 0 V, as for a lone cell
    flips = {f"{v:g}": C.flip_time(victim, v, 0.0, 10.0) for v in v_pass}
    return Result("fig3d", ["v_pass_v", "dwell_s", "dvth_v"], rows, {"flip_time_s": flips})


def fig3i(cfg):
    """Pass stress of T2 in a three-cell string through the shared pass gate."""
    _, _, _, rows, worst = _string_grid(cfg, "PG", [2.0, 5.0, 10.0, 15.0], ("HVT", "LVT"))
    return Result("fig3i", ["v_pass_v", "dwell_s", "state", "dvth_v"], rows,
                  {"max_abs_dvth_v": worst})


# --- eight-WL dual-port string ------------------------------------------------------


def fig4c(cfg):
    """Erase, PG-assisted read, program and read of WL3 in an 8-WL dual-port string."""
    dev = cfg.device("vertical")
    n, target = 8, 3
    s = S.make_string(dev, ["LVT", "HVT"] * (n // 2), seed=cfg.seed)
    wf, windows = S.operation_waveform(n, target)
    trace, _ = S.apply_waveform(s, wf, max_step=1e-6)
    i_low = S.window_current(trace, windows["read_erased"])
    i_high = S.window_current(trace, windows["read_programmed"])
    rows = [tuple([trace.t[k], trace.current[k], *trace.nodes[k], *trace.vth[k], *trace.e_fe[k]])
            for k in range(len(trace.t))]
    return Result("fig4c", trace.columns(), rows,
                  {"i_read_erased_a": i_low, "i_read_programmed_a": i_high,
                   "current_ratio": i_high / i_low,
                   "waveform": "operation_waveform default"})


def field_profile(dev, victim=6, n=8, v_pass_values=(0.0, 1.0, 2.0), seed=0):
    """E_FE of every cell with one HVT victim, V_PASS on the WLs or on the PG."""
    states = ["HVT" if i == victim else "LVT" for i in range(n)]
    s = S.make_string(dev, states, seed=seed)
    rows = []
    for mode in ("single", "dual"):
        for v in v_pass_values:
            wl = [v] * n if mode == "single" else [0.0] * n
            v_pg = 0.0 if mode == "single" else v
            for i in range(n):
                sol = S.field_report(s, i, wl, v_pg)
                rows.append((mode, float(v), i, states[i], sol.e_fe, sol.psi_channel))
    return rows


def figS2(cfg):
    """Per-cell ferroelectric field along an 8-WL string with WL6 erased."""
    dev = cfg.device("vertical")
    v_pass = _sweep(cfg, "v_pass", [0.0, 1.0, 2.0])
    rows = field_profile(dev, 6, 8, v_pass, cfg.seed)
    victim = {f"{m}_{v:g}": e for m, v, i, _, e, _ in rows if i == 6}
    return Result("figS2", ["port_mode", "v_pass_v", "cell_index", "state", "efe_vpm",
                            "psi_channel_v"], rows, {"victim_efe_vpm": victim})


# --- array protocols ----------------------------------------------------------------


def fig1f_tradeoff(cfg):
    """Pass versus program disturb across V_PASS for single- and dual-port pages."""
    dev, scheme = cfg.device(), cfg.scheme()
    lo = _sweep(cfg, "v_pass_lo", 1.0)
    hi = _sweep(cfg, "v_pass_hi", 3.0)
    n = _sweep(cfg, "n_points", 21)
    sw = {m: P.disturb_tradeoff_sweep(dev, scheme, (lo, hi), n, m, seed=cfg.seed)
          for m in ("single", "dual")}
    rows = list(zip(sw["single"].v_pass, sw["single"].dvth_pass, sw["single"].dvth_prog,
                    sw["dual"].dvth_pass, sw["dual"].dvth_prog))
    summary = {}
    for m, r in sw.items():
        lo_w, hi_w = r.window if r.window is not None else (None, None)
        summary[f"{m}_window_lo_v"] = lo_w
        summary[f"{m}_window_hi_v"] = hi_w
    return Result("fig1f-tradeoff",
                  ["v_pass_v", "dvth_pass_single_v", "dvth_prog_single_v", "dvth_pass_dual_v",
                   "dvth_prog_dual_v"], rows, summary,
                  {m: r.as_dict() for m, r in sw.items()})


def fig1i_dist(cfg):
    """Monte Carlo VTH before and after a dual-port pass event."""
    dev, scheme = cfg.device(), cfg.scheme()
    n = _sweep(cfg, "n_cells", 500)
    v_pass = _sweep(cfg, "v_pass", [4.0])[0]
    var = P.Variability(sigma_vth0=0.03, sigma_ea_median=0.03)
    cond = P.StressCondition.pass_disturb(scheme, v_pass, "dual")
    dist = P.vth_distribution(dev, n, var, cond, seed=cfg.seed)
    rows = list(zip(dist.quantiles, dist.vth_pre, dist.vth_post))
    shift = float(np.max(np.abs(dist.vth_post - dist.vth_pre)))
    return Result("fig1i-dist", ["quantile", "vth_pre_v", "vth_post_v"], rows,
                  {"max_quantile_shift_v": shift, "n_cells": n})


EXPERIMENTS = {
    "fig1f-tradeoff": fig1f_tradeoff,
    "fig1i-dist": fig1i_dist,
    "fig2g": fig2g,
    "fig2h": fig2h,
    "fig2k": fig2k,
    "fig2l": fig2l,
    "fig3b": fig3b,
    "fig3d": fig3d,
    "fig3i": fig3i,
    "fig4c": fig4c,
    "figS2": figS2,
}


class UnknownExperiment(KeyError):
    def __init__(self, name):
        super().__init__(f"unknown experiment {name!r}; valid ids: {', '.join(EXPERIMENTS)}")


def describe():
    return {k: (f.__doc__ or "").strip().splitlines()[0] for k, f in EXPERIMENTS.items()}


def compute(cfg, experiment_id):
    if experiment_id not in EXPERIMENTS:
        raise UnknownExperiment(experiment_id)
    return EXPERIMENTS[experiment_id](cfg)


def metadata(cfg, result):
    return {"experiment": result.experiment, "version": __version__, "seed": cfg.seed,
            "config_hash": cfg.hash, "columns": result.columns,
            "summary": _jsonable(result.summary)}


def write_result(cfg, result, out_dir, fmt="csv"):
    """Write the artifact files; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    meta = metadata(cfg, result)
    base = os.path.join(out_dir, result.experiment)
    if fmt == "csv":
        paths = [base + ".csv", base + ".meta.json"]
        texts = [result.csv_text(), json.dumps(meta, indent=2, sort_keys=True) + "\n"]
    elif fmt == "json":
        doc = {"meta": meta, "rows": _jsonable([list(r) for r in result.rows]),
               "extra": _jsonable(result.extra)}
        paths, texts = [base + ".json"], [json.dumps(doc, indent=2, sort_keys=True) + "\n"]
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    for path, text in zip(paths, texts):
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return paths


def _scalar(k, v):
    return f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"


def summary_line(result, elapsed):
    parts = []
    for k, v in result.summary.items():
        if isinstance(v, dict):
            # small per-point tables inline; long ones only go to the metadata file
            if len(v) <= 8:
                parts += [_scalar(f"{k}[{sub}]", x) for sub, x in v.items()]
            continue
        parts.append(_scalar(k, v))
    return f"{result.experiment}: {' '.join(parts)} ({elapsed:.2f} s)"


def run_experiment(cfg, experiment_id=None, out_dir=None, fmt=None):
    """Compute and write one experiment; returns (result, paths)."""
    out = cfg.section("output")
    experiment_id = experiment_id or cfg.experiment
    result = compute(cfg, experiment_id)
    paths = write_result(cfg, result, out_dir or out["dir"], fmt or out["format"])
    return result, paths
