"""One-dimensional electrostatics of a WG | insulators | channel | insulators | PG stack.

Sign conventions: a positive field points from the write gate (WG) toward the
pass gate (PG); positive polarization points toward the channel, which is the
low-threshold (LVT) state.  The channel is a single equipotential charge sheet
at potential ``psi`` whose electron charge turns on smoothly above ``psi_on``.

Within each side of the channel the displacement is uniform, so with the
series capacitances ``C_f`` and ``C_b`` the problem reduces to one scalar
charge balance in ``psi``::

    D_front = C_f * (V_WG - Vfb_f - psi + P * t_fe / (eps0 eps_fe))
    D_back  = C_b * (psi - V_PG + Vfb_b)
    D_back - D_front = Q_channel(psi) + Q_fixed

The left side is strictly increasing in ``psi`` and ``Q_channel`` is
decreasing, so the root is unique and a bracketing solver always finds it.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .units import EPS0, NM, thermal_voltage

ROLES = ("metal", "ferroelectric", "dielectric", "channel")


class SolverError(RuntimeError):
    """Charge balance could not be bracketed."""

    def __init__(self, message, bracket):
        super().__init__(f"{message} (last bracket {bracket})")
        self.bracket = bracket


@dataclass(frozen=True)
class Layer:
    role: str
    thickness: float = 0.0
    relative_permittivity: float = 1.0

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown layer role {self.role!r}")
        if self.role in ("ferroelectric", "dielectric") and not self.thickness > 0:
            raise ValueError(f"{self.role} layer thickness must be > 0")
        if self.role == "channel" and self.thickness < 0:
            raise ValueError("channel thickness must be >= 0")
        if self.role != "metal" and not self.relative_permittivity >= 1:
            raise ValueError("relative permittivity must be >= 1")

    @property
    def elastance(self):
        """Series elastance t / (eps0 eps_r) in m^2/F."""
        return self.thickness / (EPS0 * self.relative_permittivity)


@dataclass(frozen=True)
class GateStack:
    layers: tuple
    flatband_front: float = 0.0
    flatband_back: float = 0.0
    front_terminal: str = "WG"
    back_terminal: str = "PG"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        roles = [layer.role for layer in self.layers]
        if len(roles) < 4 or roles[0] != "metal" or roles[-1] != "metal":
            raise ValueError("stack must start and end with a metal gate")
        if "metal" in roles[1:-1]:
            raise ValueError("metals are only allowed at the two ends")
        if roles.count("channel") != 1:
            raise ValueError("stack needs exactly one channel layer")
        if roles.count("ferroelectric") != 1:
            raise ValueError("stack needs exactly one ferroelectric layer")
        ich = roles.index("channel")
        if roles.index("ferroelectric") > ich:
            raise ValueError("the ferroelectric must sit on the write-gate side")
        if ich == len(roles) - 2:
            raise ValueError("at least one insulator is needed between channel and pass gate")

    @property
    def channel_index(self):
        return [layer.role for layer in self.layers].index("channel")

    @property
    def fe_index(self):
        return [layer.role for layer in self.layers].index("ferroelectric")

    @property
    def front_layers(self):
        return self.layers[1 : self.channel_index]

    @property
    def back_layers(self):
        return self.layers[self.channel_index + 1 : -1]

    @property
    def ferroelectric(self):
        return self.layers[self.fe_index]

    @property
    def c_front(self):
        return 1.0 / sum(layer.elastance for layer in self.front_layers)

    @property
    def c_back(self):
        return 1.0 / sum(layer.elastance for layer in self.back_layers)

    @property
    def polarization_lever(self):
        """t_fe / (eps0 eps_fe): volts of gate shift per C/m^2 of polarization."""
        return self.ferroelectric.elastance


def fdsoi_stack(t_fe=10 * NM, eps_fe=30.0, t_il=1 * NM, t_box=20 * NM,
                flatband_front=-0.3, flatband_back=0.0):
    """Planar FDSOI FeFET: WG | HfO2 FE | SiO2 IL | Si channel | BOX | p-well."""
    return GateStack(
        layers=(
            Layer("metal"),
            Layer("ferroelectric", t_fe, eps_fe),
            Layer("dielectric", t_il, 3.9),
            Layer("channel", 6 * NM, 11.7),
            Layer("dielectric", t_box, 3.9),
            Layer("metal"),
        ),
        flatband_front=flatband_front,
        flatband_back=flatband_back,
    )


def vertical_dual_port_stack(t_fe=10 * NM, eps_fe=30.0, t_il=1 * NM, t_pg_ox=8 * NM,
                             flatband_front=-0.3, flatband_back=0.0):
    """Flattened vertical cell: WG | FE | IL | poly channel | PG oxide | core PG."""
    return fdsoi_stack(t_fe, eps_fe, t_il, t_pg_ox, flatband_front, flatband_back)


@dataclass(frozen=True)
class ChannelChargeModel:
    """Smooth sheet charge of the channel.

    Electrons: ``-Cq Vt ln(1 + exp((psi - psi_on)/Vt))``.  When ``psi_acc`` is
    set, holes add ``+Cq Vt ln(1 + exp((psi_acc - psi)/Vt))`` so a strongly
    negative write gate is terminated at the channel (needed for erase).
    """

    vt: float = field(default_factory=thermal_voltage)
    psi_on: float = 0.7
    cq: float = 1.0
    fixed_sheet_charge: float = 0.0
    psi_acc: float | None = -0.2

    def __post_init__(self):
        if not self.vt > 0:
            raise ValueError("thermal voltage must be positive")
        if not self.cq > 0:
            raise ValueError("Cq must be positive")

    def charge(self, psi):
        q = -self.cq * self.vt * _softplus((psi - self.psi_on) / self.vt)
        if self.psi_acc is not None:
            q += self.cq * self.vt * _softplus((self.psi_acc - psi) / self.vt)
        return q

    def electron_charge(self, psi):
        return -self.cq * self.vt * _softplus((psi - self.psi_on) / self.vt)


def _softplus(x):
    if x > 35.0:
        return x
    return math.log1p(math.exp(x))


@dataclass(frozen=True, eq=False)
class ElectrostaticsSolution:
    fields: np.ndarray  # V/m per layer in stack order; 0 in metals and the channel sheet
    psi_channel: float
    q_channel: float
    residual: float
    d_front: float
    d_back: float
    e_fe: float

    def displacement(self, stack, polarization):
        """eps0 eps_r E (+P in the ferroelectric) per insulator layer."""
        out = []
        for i, layer in enumerate(stack.layers):
            if layer.role in ("ferroelectric", "dielectric"):
                d = EPS0 * layer.relative_permittivity * self.fields[i]
                if layer.role == "ferroelectric":
                    d += polarization
                out.append(d)
        return np.array(out)


def solve_electrostatics(stack, v_wg, v_pg, polarization, channel_model=None,
                         xtol=1e-12):
    """Solve the stack at gate biases ``v_wg``/``v_pg`` (V) and polarization (C/m^2).

    ``channel_model=None`` gives a charge-free channel sheet.  Raises
    :class:`SolverError` when the root cannot be bracketed within +-100 V.
    """
    cf, cb = stack.c_front, stack.c_back
    v_pol = polarization * stack.polarization_lever
    a_front = v_wg - stack.flatband_front + v_pol
    a_back = v_pg - stack.flatband_back
    q_fixed = channel_model.fixed_sheet_charge if channel_model is not None else 0.0

    if channel_model is None:
        psi = (cf * a_front + cb * a_back + q_fixed) / (cf + cb)
        q_ch = 0.0
    else:
        def balance(psi):
            return cb * (psi - a_back) - cf * (a_front - psi) - channel_model.charge(psi) - q_fixed

        guess = (cf * a_front + cb * a_back + q_fixed) / (cf + cb)
        lo, hi = guess - 1.0, guess + 1.0
        f_lo, f_hi = balance(lo), balance(hi)
        width = 1.0
        while f_lo > 0 or f_hi < 0:
            width *= 2.0
            if width > 200.0:
                raise SolverError("charge balance not bracketable within +-100 V", (lo, hi))
            if f_lo > 0:
                lo = guess - width
                f_lo = balance(lo)
            if f_hi < 0:
                hi = guess + width
                f_hi = balance(hi)
        if f_lo == 0.0:
            psi = lo
        elif f_hi == 0.0:
            psi = hi
        else:
            psi = brentq(balance, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)
        q_ch = channel_model.charge(psi)

    d_front = cf * (a_front - psi)
    d_back = cb * (psi - a_back)
    fields = np.zeros(len(stack.layers))
    ich = stack.channel_index
    for i, layer in enumerate(stack.layers):
        if layer.role == "ferroelectric":
            fields[i] = (d_front - polarization) / (EPS0 * layer.relative_permittivity)
        elif layer.role == "dielectric":
            d = d_front if i < ich else d_back
            fields[i] = d / (EPS0 * layer.relative_permittivity)

    loop_front = (v_wg - stack.flatband_front - psi) - sum(
        layer.thickness * fields[i] for i, layer in enumerate(stack.layers) if 0 < i < ich)
    loop_back = (v_pg - stack.flatband_back - psi) + sum(
        layer.thickness * fields[i] for i, layer in enumerate(stack.layers)
        if ich < i < len(stack.layers) - 1)
    gauss = (d_back - d_front - q_ch - q_fixed) / (cf + cb)
    residual = max(abs(loop_front), abs(loop_back), abs(gauss))
    return ElectrostaticsSolution(
        fields=fields,
        psi_channel=psi,
        q_channel=q_ch,
        residual=residual,
        d_front=d_front,
        d_back=d_back,
        e_fe=fields[stack.fe_index],
    )


class FieldAtBias:
    """E_FE versus polarization at fixed gate biases, for repeated evaluation.

    Newton iterations on the charge balance, warm-started from the previous
    channel potential; falls back to :func:`solve_electrostatics` when Newton
    does not settle.  Agrees with the full solve to the root tolerance.
    """

    def __init__(self, stack, v_wg, v_pg, channel_model=None, tol=1e-12):
        self.stack, self.v_wg, self.v_pg, self.channel = stack, v_wg, v_pg, channel_model
        self.cf, self.cb = stack.c_front, stack.c_back
        self.lever = stack.polarization_lever
        self.eps_fe = EPS0 * stack.ferroelectric.relative_permittivity
        self.a_back = v_pg - stack.flatband_back
        self.tol = tol
        self.psi = None

    def _newton(self, a_front):
        ch, cf, cb = self.channel, self.cf, self.cb
        q_fixed = ch.fixed_sheet_charge
        psi = self.psi
        if psi is None:
            return None
        for _ in range(40):
            x_on = (psi - ch.psi_on) / ch.vt
            q = -ch.cq * ch.vt * _softplus(x_on)
            dq = -ch.cq * _sigmoid(x_on)
            if ch.psi_acc is not None:
                x_acc = (ch.psi_acc - psi) / ch.vt
                q += ch.cq * ch.vt * _softplus(x_acc)
                dq -= ch.cq * _sigmoid(x_acc)
            f = cb * (psi - self.a_back) - cf * (a_front - psi) - q - q_fixed
            step = f / (cf + cb - dq)
            psi -= step
            if abs(step) < self.tol:
                return psi
        return None

    def __call__(self, polarization):
        a_front = self.v_wg - self.stack.flatband_front + polarization * self.lever
        if self.channel is None:
            psi = (self.cf * a_front + self.cb * self.a_back) / (self.cf + self.cb)
        else:
            psi = self._newton(a_front)
            if psi is None:
                psi = solve_electrostatics(self.stack, self.v_wg, self.v_pg, polarization,
                                           self.channel).psi_channel
        self.psi = psi
        return (self.cf * (a_front - psi) - polarization) / self.eps_fe


def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def ferroelectric_field(stack, v_wg, v_pg, polarization, channel_model=None):
    return solve_electrostatics(stack, v_wg, v_pg, polarization, channel_model).e_fe


def depolarization_field(stack, polarization, channel_model=None):
    """E_FE at zero gate biases."""
    return ferroelectric_field(stack, 0.0, 0.0, polarization, channel_model)


def efe_vs_vpass_curve(stack, state, pass_terminal, v_range=(0.0, 4.0), n_points=41,
                       channel_model=None, remanent_polarization=None, other_bias=0.0):
    """Sample E_FE while V_PASS is swept on the WG or PG at fixed polarization.

    ``state`` is "HVT" (P = -Pr) or "LVT" (P = +Pr).  Returns an (n, 2) array
    of (V_PASS, E_FE).
    """
    if remanent_polarization is None:
        raise ValueError("remanent_polarization is required")
    v0, v1 = v_range
    if not (math.isfinite(v0) and math.isfinite(v1)):
        raise ValueError("v_range must be finite")
    p = {"HVT": -1.0, "LVT": 1.0}[state.upper()] * abs(remanent_polarization)
    out = np.empty((n_points, 2))
    for i, v in enumerate(np.linspace(v0, v1, n_points)):
        if pass_terminal.upper() in ("WG", "FRONT", "WL"):
            e = ferroelectric_field(stack, v, other_bias, p, channel_model)
        elif pass_terminal.upper() in ("PG", "BACK"):
            e = ferroelectric_field(stack, other_bias, v, p, channel_model)
        else:
            raise ValueError(f"unknown pass terminal {pass_terminal!r}")
        out[i] = v, e
    return out


def screening_factor(stack, polarization, v_pg, channel_model, v_wg=0.0, dv=0.01):
    """dE_FE/dV_PG normalised by its carrier-free value (1: no screening)."""
    slope = (ferroelectric_field(stack, v_wg, v_pg + dv, polarization, channel_model)
             - ferroelectric_field(stack, v_wg, v_pg - dv, polarization, channel_model)) / (2 * dv)
    bare = -stack.c_front * stack.c_back / (stack.c_front + stack.c_back) / (
        EPS0 * stack.ferroelectric.relative_permittivity)
    return slope / bare
