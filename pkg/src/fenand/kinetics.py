"""Multi-grain ferroelectric polarization with Merz-type switching kinetics.

Each grain is a binary dipole (+1 points toward the channel) with its own
activation field.  A grain opposing the local field accumulates reduced
time ``x = integral(dt / tau(E))`` and flips once ``x`` reaches a per-grain
threshold ``s`` drawn so that ``P(s <= x) = 1 - exp(-x**beta)``.  For a grain
starting from zero progress this is exactly the stretched-exponential flip
probability ``1 - exp(-(dt/tau)**beta)``, and because progress is carried
between calls the result does not depend on how a pulse is split into steps.

Randomness is counter based: the uniform for grain ``i`` is a hash of
``(seed, stream, i, counter)``, so a grain's draws do not depend on ensemble
size or evaluation order.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from .units import MV_PER_CM, NS, UC_PER_CM2

_STREAM_ACTIVATION = 1
_STREAM_THRESHOLD = 2


def _splitmix(x):
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def counter_uniform(seed, stream, index, counter=0):
    """Uniform draws in (0, 1) keyed by (seed, stream, index, counter)."""
    index = np.asarray(index, dtype=np.uint64)
    counter = np.broadcast_to(np.asarray(counter, dtype=np.uint64), index.shape)
    key = _splitmix(np.full(index.shape, seed & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64))
    key = _splitmix(key ^ np.uint64(stream))
    x = _splitmix(key ^ _splitmix(index))
    x = _splitmix(x ^ _splitmix(counter + np.uint64(0x632BE59BD9B4E019)))
    return ((x >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


@dataclass(frozen=True)
class SwitchingKinetics:
    tau0: float = 1.0 * NS
    n: float = 1.0
    beta: float = 2.0
    ea_median: float = 1.2 * MV_PER_CM
    ea_sigma: float = 0.25

    def __post_init__(self):
        if not self.tau0 > 0:
            raise ValueError("tau0 must be positive")
        if not self.n >= 1:
            raise ValueError("field-law exponent n must be >= 1")
        if not self.beta > 0:
            raise ValueError("stretch exponent beta must be positive")
        if not self.ea_median > 0:
            raise ValueError("activation field median must be positive")
        if not self.ea_sigma >= 0:
            raise ValueError("log-normal sigma must be >= 0")


@dataclass(frozen=True, eq=False)
class GrainEnsemble:
    """Binary grain orientations plus the bookkeeping needed to evolve them.

    ``progress`` is the reduced time accumulated toward the next flip and
    ``flips`` counts completed flips per grain; it selects the threshold draw.
    """

    orientation: np.ndarray
    activation_field: np.ndarray
    ps: float
    seed: int
    progress: np.ndarray
    flips: np.ndarray

    def __post_init__(self):
        if not np.all(np.abs(self.orientation) == 1):
            raise ValueError("grain orientations must be -1 or +1")
        if not np.all(self.activation_field > 0):
            raise ValueError("activation fields must be positive")

    def __len__(self):
        return self.orientation.size

    def __eq__(self, other):
        if not isinstance(other, GrainEnsemble):
            return NotImplemented
        return (
            self.ps == other.ps
            and self.seed == other.seed
            and np.array_equal(self.orientation, other.orientation)
            and np.array_equal(self.activation_field, other.activation_field)
            and np.array_equal(self.progress, other.progress)
            and np.array_equal(self.flips, other.flips)
        )

    __hash__ = None


def sample_ensemble(n_grains, kinetics=None, seed=0, ps=15 * UC_PER_CM2):
    """Draw ``n_grains`` log-normal activation fields; all grains start at +1."""
    if n_grains < 1:
        raise ValueError(f"n_grains must be >= 1, got {n_grains}")
    kinetics = kinetics or SwitchingKinetics()
    idx = np.arange(n_grains, dtype=np.uint64)
    u = counter_uniform(seed, _STREAM_ACTIVATION, idx)
    ea = kinetics.ea_median * np.exp(kinetics.ea_sigma * ndtri(u))
    return GrainEnsemble(
        orientation=np.ones(n_grains, dtype=np.int8),
        activation_field=ea,
        ps=float(ps),
        seed=int(seed),
        progress=np.zeros(n_grains),
        flips=np.zeros(n_grains, dtype=np.uint64),
    )


def switching_time(e_field, activation_field, kinetics=None):
    """Merz-law switching time ``tau0 * exp((Ea/|E|)**n)``; +inf at E = 0."""
    kinetics = kinetics or SwitchingKinetics()
    e = np.abs(np.asarray(e_field, dtype=float))
    with np.errstate(divide="ignore", over="ignore"):
        tau = kinetics.tau0 * np.exp((activation_field / e) ** kinetics.n)
    tau = np.where(e == 0, np.inf, tau)
    return tau if tau.ndim else float(tau)


def switching_rate(e_field, activation_field, kinetics):
    """1/tau, computed without overflow."""
    e = abs(float(e_field))
    if e == 0.0:
        return np.zeros_like(activation_field, dtype=float)
    with np.errstate(over="ignore"):  # tiny |E|: ratio overflows to inf and the rate to 0
        return np.exp(-((activation_field / e) ** kinetics.n)) / kinetics.tau0


def flip_thresholds(ensemble, kinetics, extra_flips=0):
    """Reduced time each grain needs for its next flip.

    ``extra_flips`` looks ahead: 1 gives the thresholds that apply once every
    grain has flipped one more time.
    """
    idx = np.arange(len(ensemble), dtype=np.uint64)
    u = counter_uniform(ensemble.seed, _STREAM_THRESHOLD, idx,
                        ensemble.flips + np.uint64(extra_flips))
    return (-np.log1p(-u)) ** (1.0 / kinetics.beta)


def advance(ensemble, direction, increments, kinetics):
    """Add reduced-time ``increments`` to grains opposing ``direction`` and flip.

    ``increments`` may be scalar or per grain.  Grains already aligned with
    ``direction`` are untouched.
    """
    if direction == 0:
        return ensemble
    sign = 1 if direction > 0 else -1
    opposing = ensemble.orientation != sign
    if not opposing.any():
        return ensemble
    inc = np.broadcast_to(np.asarray(increments, dtype=float), ensemble.orientation.shape)
    progress = ensemble.progress.copy()
    progress[opposing] += inc[opposing]
    flip = opposing & (progress >= flip_thresholds(ensemble, kinetics))
    if not flip.any():
        return replace(ensemble, progress=progress)
    orientation = ensemble.orientation.copy()
    orientation[flip] = sign
    progress[flip] = 0.0
    flips = ensemble.flips.copy()
    flips[flip] += np.uint64(1)
    return replace(ensemble, orientation=orientation, progress=progress, flips=flips)


def evolve(ensemble, e_field, dt, kinetics=None):
    """Hold ``ensemble`` in a constant field ``e_field`` (V/m) for ``dt`` seconds."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    kinetics = kinetics or SwitchingKinetics()
    if dt == 0 or e_field == 0:
        return ensemble
    inc = dt * switching_rate(e_field, ensemble.activation_field, kinetics)
    return advance(ensemble, np.sign(e_field), inc, kinetics)


def net_polarization(ensemble):
    return ensemble.ps * float(np.mean(ensemble.orientation))


def aligned_fraction(ensemble, sign):
    return float(np.mean(ensemble.orientation == (1 if sign > 0 else -1)))


def saturate(ensemble, sign):
    """All grains set to ``sign`` with progress cleared (an ideal full write)."""
    sign = 1 if sign > 0 else -1
    return replace(
        ensemble,
        orientation=np.full(len(ensemble), sign, dtype=np.int8),
        progress=np.zeros(len(ensemble)),
    )


def with_fraction(ensemble, fraction_up):
    """First ``round(fraction_up * N)`` grains at +1, the rest at -1."""
    k = int(round(fraction_up * len(ensemble)))
    orientation = -np.ones(len(ensemble), dtype=np.int8)
    orientation[:k] = 1
    return replace(ensemble, orientation=orientation, progress=np.zeros(len(ensemble)))
