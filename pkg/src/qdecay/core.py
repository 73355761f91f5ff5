"""Shared domain types, state algebra and seeded random-stream derivation.

Time is dimensionless throughout the package: the caller picks a unit and
expresses every rate and angular frequency in the inverse unit, so only
products such as ``gamma * t`` are ever meaningful.  All types defined here
are immutable values, safe to share between threads.

Per-trajectory randomness comes from numpy's counter-based Philox generator
keyed by ``(root_seed, stream_id)``.  Distinct stream ids give statistically
independent substreams, and a fixed key reproduces the same bit stream on
every platform and under any thread schedule, which is what makes full
ensembles byte-reproducible regardless of worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

# Renormalisation is skipped when total weight is already this close to one;
# this short-circuit is what makes normalize() exactly idempotent.
NORM_TOLERANCE = 1e-12

# Below this total weight a state counts as vanished rather than rescalable.
ZERO_WEIGHT = 1e-300

# Upper bound on gamma*dt accepted by step-based engines (accuracy guard).
MAX_GAMMA_DT = 0.1

_U64_MAX = 2**64 - 1


class Model(str, Enum):
    """Decay-dynamics engine selector."""

    QMOP = "qmop"
    SWF = "swf"
    NSM = "nsm"


class EventKind(str, Enum):
    FLUCTUATION_NO_JUMP = "fluctuation_no_jump"
    QUANTUM_JUMP = "quantum_jump"
    PHOTON_DETECTION = "photon_detection"
    STEP = "step"


def _require_finite_complex(name: str, z: complex) -> None:
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"{name} must be finite, got {z!r}")


def _require_finite_real(name: str, x: float) -> None:
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x!r}")


@dataclass(frozen=True)
class QubitState:
    """Two-level amplitudes plus the total weight leaked into the photon continuum.

    ``w_photon`` is a probability weight (not an amplitude): the integrated
    strength of the ground-plus-photon continuum component.  The photon
    spectral shape itself is never tracked; no observable in this package
    depends on it.
    """

    c_excited: complex
    c_ground: complex
    w_photon: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "c_excited", complex(self.c_excited))
        object.__setattr__(self, "c_ground", complex(self.c_ground))
        object.__setattr__(self, "w_photon", float(self.w_photon))
        _require_finite_complex("c_excited", self.c_excited)
        _require_finite_complex("c_ground", self.c_ground)
        _require_finite_real("w_photon", self.w_photon)
        if self.w_photon < 0.0:
            raise ValueError(f"w_photon must be >= 0, got {self.w_photon}")

    @property
    def total_weight(self) -> float:
        e, g = self.c_excited, self.c_ground
        return (e.real * e.real + e.imag * e.imag) + (g.real * g.real + g.imag * g.imag) + self.w_photon

    @classmethod
    def excited(cls) -> "QubitState":
        return cls(1.0 + 0.0j, 0.0j, 0.0)

    @classmethod
    def ground(cls) -> "QubitState":
        return cls(0.0j, 1.0 + 0.0j, 0.0)

    @classmethod
    def superposition(cls, c_excited: complex, c_ground: complex) -> "QubitState":
        """Normalized two-level state with the given (unnormalized) amplitudes."""
        return normalize(cls(c_excited, c_ground, 0.0))


def normalize(state: QubitState) -> QubitState:
    """Rescale a state to unit total weight, preserving component ratios.

    States already normalized within ``NORM_TOLERANCE`` are returned
    unchanged, so the operation is exactly idempotent.

    Raises ``ValueError`` (zero norm) when the total weight is below
    ``ZERO_WEIGHT``.
    """
    total = state.total_weight
    if not math.isfinite(total):
        raise ValueError("total weight overflows; rescale the amplitudes first")
    if total < ZERO_WEIGHT:
        raise ValueError(f"zero norm: total weight {total} cannot be normalized")
    if abs(total - 1.0) <= NORM_TOLERANCE:
        return state
    root = math.sqrt(total)
    return QubitState(state.c_excited / root, state.c_ground / root, state.w_photon / total)


def occupation(state: QubitState) -> float:
    """Excited-state occupation |c_excited|^2 of a normalized state."""
    return abs(state.c_excited) ** 2


def sigma_x_expectation(state: QubitState) -> float:
    """Dipole quadrature 2 Re(c_ground* c_excited) on the two-level subspace.

    The photon component is excluded: the expectation is renormalized to the
    two-level weight.  Raises ``ValueError`` (empty two-level subspace) when
    that weight vanishes.
    """
    two_level = abs(state.c_excited) ** 2 + abs(state.c_ground) ** 2
    if two_level < ZERO_WEIGHT:
        raise ValueError("empty two-level subspace: no dipole is defined")
    return 2.0 * (state.c_ground.conjugate() * state.c_excited).real / two_level


def photon_packet_length(gamma: float, c_light: float) -> float:
    """Spatial extent of the emitted photon wave packet, c_light / gamma."""
    if not gamma > 0.0:
        raise ValueError(f"non-positive rate: gamma must be > 0, got {gamma}")
    if not c_light > 0.0:
        raise ValueError(f"non-positive speed: c_light must be > 0, got {c_light}")
    return c_light / gamma


@dataclass(frozen=True)
class RngStream:
    """Handle for one reproducible substream of the root-seeded generator.

    ``generator()`` builds a fresh ``numpy.random.Generator`` each call, so a
    stream value can be replayed any number of times.
    """

    root_seed: int
    stream_id: int

    def __post_init__(self) -> None:
        if not 0 <= int(self.root_seed) <= _U64_MAX:
            raise ValueError(f"root_seed must fit in 64 bits, got {self.root_seed}")
        if not 0 <= int(self.stream_id) <= _U64_MAX:
            raise ValueError(f"stream_id must fit in 64 bits, got {self.stream_id}")
        object.__setattr__(self, "root_seed", int(self.root_seed))
        object.__setattr__(self, "stream_id", int(self.stream_id))

    def generator(self) -> np.random.Generator:
        key = np.array([self.root_seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def derive_stream(root_seed: int, traj_id: int) -> RngStream:
    """Derive the independent, bit-reproducible substream for one trajectory."""
    return RngStream(root_seed, traj_id)


def as_generator(stream) -> np.random.Generator:
    """Accept an RngStream, a numpy Generator, or a duck-typed test double."""
    if isinstance(stream, np.random.Generator):
        return stream
    if isinstance(stream, RngStream):
        return stream.generator()
    if hasattr(stream, "random"):
        return stream
    raise TypeError(f"cannot interpret {type(stream).__name__} as a random stream")


@dataclass(frozen=True)
class ModelParams:
    """Simulation parameters shared by every engine.

    All rates and angular frequencies are in the inverse of the (arbitrary)
    time unit.  ``beta`` is the vacuum-fluctuation rate and is only consumed
    by the NSM engine; ``omega_rabi`` only by the driven engines.
    """

    gamma: float
    dt: float
    t_max: float
    n_traj: int = 1
    seed: int = 0
    model: Model = Model.QMOP
    beta: float = 0.0
    omega0: float = 0.0
    omega1: float = 0.0
    omega_rabi: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", Model(self.model))
        for name in ("gamma", "dt", "t_max", "beta", "omega0", "omega1", "omega_rabi"):
            _require_finite_real(name, float(getattr(self, name)))
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.omega_rabi < 0.0:
            raise ValueError(f"omega_rabi must be >= 0, got {self.omega_rabi}")
        if not self.dt > 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.t_max > 0.0:
            raise ValueError(f"t_max must be > 0, got {self.t_max}")
        if self.dt > self.t_max:
            raise ValueError(f"dt={self.dt} must not exceed t_max={self.t_max}")
        if self.gamma * self.dt > MAX_GAMMA_DT:
            raise ValueError(
                f"gamma*dt={self.gamma * self.dt:g} exceeds the accuracy guard {MAX_GAMMA_DT}"
            )
        if not 1 <= int(self.n_traj):
            raise ValueError(f"n_traj must be >= 1, got {self.n_traj}")
        if not 0 <= int(self.seed) <= _U64_MAX:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


@dataclass(frozen=True)
class TrajectoryEvent:
    t: float
    kind: EventKind
    occupation_before: float
    occupation_after: float


@dataclass(frozen=True)
class TrajectoryRecord:
    """Ordered event log of a single trajectory.

    ``decay_time`` is the emission time for terminal single-decay runs and
    None for censored or driven trajectories.  ``occupation_series`` holds
    the occupation sampled on the step grid when the caller asked for it
    (kept as an array rather than step events so large runs stay cheap).
    """

    traj_id: int
    events: Tuple[TrajectoryEvent, ...]
    decay_time: Optional[float] = None
    nsm_events: tuple = ()
    occupation_series: Optional[np.ndarray] = None
    flags: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        events = tuple(self.events)
        object.__setattr__(self, "events", events)
        last = -math.inf
        jumped = False
        for ev in events:
            if jumped:
                raise ValueError("events recorded after a quantum jump")
            if not ev.t > last:
                raise ValueError("event times must be strictly increasing")
            last = ev.t
            if ev.kind is EventKind.QUANTUM_JUMP:
                jumped = True


StreamLike = Union[RngStream, np.random.Generator]
