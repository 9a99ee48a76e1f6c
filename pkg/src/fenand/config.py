"""TOML experiment configuration with unit-carrying values.

Physical values are strings such as ``"10 nm"`` or ``"2.4 MV/cm"``; plain
numbers are only accepted for dimensionless keys.  Unknown sections or keys
are rejected.  The raw TOML table is kept verbatim so a config round-trips
losslessly, and SI values are derived on access.
"""

import hashlib
import json
from dataclasses import dataclass, field, replace

import pint
import tomli
import tomli_w

from . import cell as C
from . import electrostatics as E
from . import kinetics as kin
from . import protocols as P
from .units import thermal_voltage

ureg = pint.UnitRegistry()


@dataclass(frozen=True)
class Key:
    unit: str | None  # SI unit for physical keys, None for plain values
    default: object
    kind: type = float
    check: object = None  # predicate on the SI value
    rule: str = ""


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


SCHEMA = {
    "": {
        "experiment": Key(None, "", str),
        "seed": Key(None, 0, int, _nonneg, ">= 0"),
    },
    "stack": {
        "kind": Key(None, "fdsoi", str, lambda s: s in ("fdsoi", "vertical"),
                    "'fdsoi' or 'vertical'"),
        "t_fe": Key("m", "10 nm", check=_pos, rule="> 0"),
        "eps_fe": Key(None, 30.0, check=lambda x: x >= 1, rule=">= 1"),
        "t_il": Key("m", "1 nm", check=_pos, rule="> 0"),
        "t_back": Key("m", None, check=_pos, rule="> 0"),  # builder default when unset
        "flatband_front": Key("V", "-0.3 V"),
        "flatband_back": Key("V", "0 V"),
    },
    "channel": {
        "psi_on": Key("V", "0.7 V"),
        "psi_acc": Key("V", "0.1 V"),
        "cq": Key("F/m^2", "1 F/m^2", check=_pos, rule="> 0"),
        "temperature": Key("K", "300 K", check=_pos, rule="> 0"),
    },
    "kinetics": {
        "tau0": Key("s", "7.389 ns", check=_pos, rule="> 0"),
        "n": Key(None, 2.8577, check=lambda x: x >= 1, rule=">= 1"),
        "beta": Key(None, 2.0, check=_pos, rule="> 0"),
        "ea_median": Key("V/m", "2.4165 MV/cm", check=_pos, rule="> 0"),
        "ea_sigma": Key(None, 0.11233, check=_nonneg, rule=">= 0"),
    },
    "cell": {
        "w": Key("m", "1 um", check=_pos, rule="> 0"),
        "l": Key("m", "1 um", check=_pos, rule="> 0"),
        "k": Key("A/V^2", "1.5e-4 A/V^2", check=_pos, rule="> 0"),
        "ps": Key("C/m^2", "1.6 uC/cm^2", check=_pos, rule="> 0"),
        "n_grains": Key(None, 2000, int, lambda x: x >= 1, ">= 1"),
    },
    "scheme": {
        "v_cc": Key("V", "3.3 V", check=_pos, rule="> 0"),
        "v_pgm": Key("V", "5.5 V", check=_pos, rule="> 0"),
        "pulse_duration": Key("s", "10 us", check=_pos, rule="> 0"),
        "coupling_ratio": Key(None, 0.8, check=lambda x: 0 < x <= 1, rule="in (0, 1]"),
        "vth_ssl": Key("V", "0.5 V"),
        "n_wls": Key(None, 8, int, lambda x: x >= 1, ">= 1"),
    },
    "sweep": {
        "v_pass": Key("V", None, list),
        "dwell": Key("s", None, list),
        "n_points": Key(None, None, int, lambda x: x >= 2, ">= 2"),
        "n_cells": Key(None, None, int, lambda x: x >= 1, ">= 1"),
        "v_pass_lo": Key("V", None, check=_nonneg, rule=">= 0"),
        "v_pass_hi": Key("V", None, check=_pos, rule="> 0"),
    },
    "output": {
        "dir": Key(None, "out", str),
        "format": Key(None, "csv", str, lambda s: s in ("csv", "json"), "'csv' or 'json'"),
    },
}


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = diagnostics
        super().__init__("; ".join(f"{d['key']}: {d['message']}" for d in diagnostics))


def _clean(x):
    # unit conversion leaves last-digit noise (10 us -> 9.999...e-06)
    return float(f"{x:.15g}")


def to_si(value, unit):
    """Convert a unit string (or a bare number for dimensionless keys) to SI."""
    if unit is None:
        return value
    if isinstance(value, bool) or not isinstance(value, str):
        raise ValueError(f"needs a unit, e.g. \"{value} {unit}\"")
    q = ureg.Quantity(value)
    return _clean(q.to(unit).magnitude)


def _diag(key, message):
    return {"key": key, "message": message}


def _check_value(name, spec, value):
    if spec.kind is list:
        if not isinstance(value, list) or not value:
            return None, [_diag(name, "must be a non-empty list")]
        out, diags = [], []
        for i, v in enumerate(value):
            try:
                out.append(to_si(v, spec.unit))
            except Exception as exc:  # pint raises several unrelated types
                diags.append(_diag(f"{name}[{i}]", str(exc)))
        return out, diags
    if spec.kind is str:
        if not isinstance(value, str):
            return None, [_diag(name, "must be a string")]
        si = value
    elif spec.unit is None:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return None, [_diag(name, "must be a number")]
        if spec.kind is int and not float(value).is_integer():
            return None, [_diag(name, "must be an integer")]
        si = spec.kind(value)
    else:
        try:
            si = to_si(value, spec.unit)
        except Exception as exc:
            return None, [_diag(name, str(exc))]
    if spec.check is not None and not spec.check(si):
        return None, [_diag(name, f"must be {spec.rule}, got {value!r}")]
    return si, []


def validate(raw):
    """Aggregate diagnostics for a raw config table; an empty list means valid."""
    diags = []
    for key, value in raw.items():
        if isinstance(value, dict):
            if key not in SCHEMA or key == "":
                diags.append(_diag(key, "unknown section"))
                continue
            for sub, v in value.items():
                if sub not in SCHEMA[key]:
                    diags.append(_diag(f"{key}.{sub}", "unknown key"))
                else:
                    diags += _check_value(f"{key}.{sub}", SCHEMA[key][sub], v)[1]
        elif key in SCHEMA[""]:
            diags += _check_value(key, SCHEMA[""][key], value)[1]
        else:
            diags.append(_diag(key, "unknown key"))
    if not diags:
        cfg = ExperimentConfig(raw)
        diags += _physics_checks(cfg)
    return diags


def _physics_checks(cfg):
    diags = []
    s = cfg.section("scheme")
    if not s["v_pgm"] > s["v_cc"]:
        diags.append(_diag("scheme.v_pgm", "must exceed scheme.v_cc"))
    sw = cfg.section("sweep")
    if sw["v_pass_lo"] is not None and sw["v_pass_hi"] is not None \
            and not sw["v_pass_lo"] < sw["v_pass_hi"]:
        diags.append(_diag("sweep.v_pass_hi", "must exceed sweep.v_pass_lo"))
    if sw["dwell"] is not None and any(t < 0 for t in sw["dwell"]):
        diags.append(_diag("sweep.dwell", "dwell times must be >= 0"))
    try:
        cfg.device()
    except ValueError as exc:
        diags.append(_diag("stack", f"device cannot be built: {exc}"))
    return diags


def defaults_table():
    """Full default config as a raw table (what an empty config echoes)."""
    out = {k: v.default for k, v in SCHEMA[""].items()}
    for sec, keys in SCHEMA.items():
        if sec:
            out[sec] = {k: v.default for k, v in keys.items() if v.default is not None}
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_toml(cls, text):
        raw = tomli.loads(text)
        diags = validate(raw)
        if diags:
            raise ConfigError(diags)
        return cls(raw)

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
        return cls.from_toml(text)

    def to_toml(self):
        return tomli_w.dumps(self.raw)

    def merged(self):
        """Defaults overlaid with the raw table (still in unit strings)."""
        out = defaults_table()
        for k, v in self.raw.items():
            if isinstance(v, dict):
                out[k] = {**out.get(k, {}), **v}
            else:
                out[k] = v
        return out

    def section(self, name):
        """SI values for one section; keys without value or default map to None."""
        merged = self.merged()
        table = merged if name == "" else merged.get(name, {})
        out = {}
        for key, spec in SCHEMA[name].items():
            value = table.get(key)
            out[key] = None if value is None else _check_value(key, spec, value)[0]
        return out

    @property
    def seed(self):
        return self.section("")["seed"]

    @property
    def experiment(self):
        return self.section("")["experiment"]

    def with_values(self, **top):
        return replace(self, raw={**self.raw, **top})

    def with_kinetics(self, k):
        table = {"tau0": f"{k.tau0!r} s", "n": k.n, "beta": k.beta,
                 "ea_median": f"{k.ea_median!r} V/m", "ea_sigma": k.ea_sigma}
        return replace(self, raw={**self.raw, "kinetics": table})

    @property
    def hash(self):
        blob = json.dumps(self.merged(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    # --- model objects -----------------------------------------------------------

    def stack(self, kind=None):
        s = self.section("stack")
        build = {"fdsoi": E.fdsoi_stack, "vertical": E.vertical_dual_port_stack}[kind or s["kind"]]
        back = {} if s["t_back"] is None else {
            "t_box" if build is E.fdsoi_stack else "t_pg_ox": s["t_back"]}
        return build(t_fe=s["t_fe"], eps_fe=s["eps_fe"], t_il=s["t_il"],
                     flatband_front=s["flatband_front"], flatband_back=s["flatband_back"], **back)

    def channel(self):
        c = self.section("channel")
        return E.ChannelChargeModel(vt=thermal_voltage(c["temperature"]), psi_on=c["psi_on"],
                                    cq=c["cq"], psi_acc=c["psi_acc"])

    def kinetics(self):
        k = self.section("kinetics")
        return kin.SwitchingKinetics(tau0=k["tau0"], n=k["n"], beta=k["beta"],
                                     ea_median=k["ea_median"], ea_sigma=k["ea_sigma"])

    def device(self, stack_kind=None):
        c = self.section("cell")
        stack, channel = self.stack(stack_kind), self.channel()
        params = C.CellParams.from_stack(stack, channel, w=c["w"], l=c["l"], k=c["k"])
        return C.Device(stack, channel, self.kinetics(), params, c["ps"], c["n_grains"])

    def scheme(self):
        s = self.section("scheme")
        return P.InhibitScheme(v_cc=s["v_cc"], v_pgm=s["v_pgm"],
                               pulse_duration=s["pulse_duration"],
                               coupling_ratio=s["coupling_ratio"], vth_ssl=s["vth_ssl"],
                               n_wls=s["n_wls"])
