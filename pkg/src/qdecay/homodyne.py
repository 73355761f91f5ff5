"""Homodyne signal synthesis, detection back-action and noise diagnostics.

The measured quantity is the balanced difference current: a local oscillator
of magnitude ``alpha`` amplifies the qubit dipole quadrature.  Each photon
absorption in the detectors kicks both the current and the qubit state; the
dense kick sequence is modelled either as a Wiener increment (``white``) or
as a finite-rate point process of discrete kicks (``nsm_point_process``).
The same increment drives the recorded signal and the state back-action.

Between kicks the qubit follows the deterministic no-jump propagation lifted
to density matrices, which for pure states reduces to the two-level no-jump
map of the decay engines.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import ModelParams, QubitState, RngStream, as_generator, derive_stream

_SQRT2 = math.sqrt(2.0)


class NoiseModel(str, Enum):
    WHITE = "white"
    NSM_POINT_PROCESS = "nsm_point_process"


@dataclass(frozen=True)
class FieldPair:
    """Output fields of a balanced splitter; energy equals the input energy."""

    phi1: complex
    phi2: complex


def beamsplitter_mix(alpha: complex, psi: complex) -> FieldPair:
    """Balanced mixing: phi1 = (alpha+psi)/sqrt(2), phi2 = (alpha-psi)/sqrt(2)."""
    alpha = complex(alpha)
    psi = complex(psi)
    return FieldPair((alpha + psi) / _SQRT2, (alpha - psi) / _SQRT2)


def homodyne_current(state: QubitState, alpha_mag: float, theta: float) -> float:
    """Amplified dipole quadrature |alpha| * 2 Re(e^{i theta} c_ground* c_excited).

    At theta = 0 this is |alpha| times the bare two-level dipole product; the
    overall proportionality constant of the difference current is folded to 1.
    """
    z = state.c_ground.conjugate() * state.c_excited
    return alpha_mag * 2.0 * (complex(math.cos(theta), math.sin(theta)) * z).real


def _amps3(state) -> np.ndarray:
    a = np.asarray(state, dtype=complex)
    if a.shape != (3,):
        raise ValueError("detection state must be three amplitudes (C_e, C_g, C_photon)")
    if not np.isfinite(a.view(float)).all():
        raise ValueError("detection state must be finite")
    return a


def apply_detection_exact(state, alpha_mag: float) -> np.ndarray:
    """Exact single-detection map: add r = C_g/alpha to the ground amplitude,
    then renormalize.  Its first-order expansion in r is the perturbative
    detection map, so the two agree up to O(r^2)."""
    a = _amps3(state)
    if not alpha_mag > 0.0:
        raise ValueError(f"non-positive alpha: need alpha_mag > 0, got {alpha_mag}")
    r = a[1] / alpha_mag
    out = a.copy()
    out[1] = a[1] + r
    return out / np.linalg.norm(out)


def apply_detection_first_order(state, alpha_mag: float) -> np.ndarray:
    """First-order single-detection map, no final renormalization.

    A fraction of order r = C_g/alpha moves onto the ground amplitude while
    the other two components shrink by r C_g* (complex-consistent form; for
    real C_g the subtraction factor is the familiar r C_g).  The output norm
    is 1 + O(r^2) by construction.
    """
    a = _amps3(state)
    if not alpha_mag > 0.0:
        raise ValueError(f"non-positive alpha: need alpha_mag > 0, got {alpha_mag}")
    r = a[1] / alpha_mag
    if abs(r) > 0.1:
        raise ValueError(f"r too large: |C_g/alpha| = {abs(r):g} exceeds 0.1")
    shrink = r * a[1].conjugate()
    out = np.empty(3, dtype=complex)
    out[0] = a[0] - shrink * a[0]
    out[1] = a[1] + r * (1.0 - abs(a[1]) ** 2)
    out[2] = a[2] - shrink * a[2]
    return out


@dataclass(frozen=True)
class DensityMatrix2:
    """2x2 Hermitian unit-trace state of the monitored qubit."""

    rho_ee: float
    rho_gg: float
    rho_eg: complex

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho_ee", float(self.rho_ee))
        object.__setattr__(self, "rho_gg", float(self.rho_gg))
        object.__setattr__(self, "rho_eg", complex(self.rho_eg))
        if not (
            math.isfinite(self.rho_ee)
            and math.isfinite(self.rho_gg)
            and math.isfinite(self.rho_eg.real)
            and math.isfinite(self.rho_eg.imag)
        ):
            raise ValueError("invalid density: entries must be finite")
        if abs(self.rho_ee + self.rho_gg - 1.0) > 1e-9:
            raise ValueError(f"invalid density: trace {self.rho_ee + self.rho_gg} != 1")
        if self.rho_ee < -1e-12 or self.rho_gg < -1e-12:
            raise ValueError("invalid density: negative population")
        if abs(self.rho_eg) ** 2 > self.rho_ee * self.rho_gg + 1e-9:
            raise ValueError("invalid density: coherence exceeds the positivity bound")

    @classmethod
    def excited(cls) -> "DensityMatrix2":
        return cls(1.0, 0.0, 0.0j)

    @classmethod
    def ground(cls) -> "DensityMatrix2":
        return cls(0.0, 1.0, 0.0j)

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix2":
        return cls(0.5, 0.5, 0.0j)

    @classmethod
    def from_state(cls, state: QubitState) -> "DensityMatrix2":
        if state.w_photon != 0.0:
            raise ValueError("invalid density: homodyne channel starts two-level")
        ee = abs(state.c_excited) ** 2
        gg = abs(state.c_ground) ** 2
        total = ee + gg
        return cls(ee / total, gg / total, state.c_excited * state.c_ground.conjugate() / total)

    def as_array(self) -> np.ndarray:
        return np.array(
            [[self.rho_ee, self.rho_eg], [self.rho_eg.conjugate(), self.rho_gg]], dtype=complex
        )

    def sigma_x(self) -> float:
        return 2.0 * self.rho_eg.real


def back_action_increment(rho: DensityMatrix2, dW: float) -> np.ndarray:
    """Traceless state perturbation dW (a rho + rho a^dag - Tr(...) rho)."""
    ee, gg, eg = rho.rho_ee, rho.rho_gg, rho.rho_eg
    tr = 2.0 * eg.real
    d_ee = dW * (-tr * ee)
    d_gg = dW * (2.0 * eg.real - tr * gg)
    d_eg = dW * (ee - tr * eg)
    return np.array([[d_ee, d_eg], [d_eg.conjugate(), d_gg]], dtype=complex)


def _project_physical(ee: float, gg: float, eg: complex) -> Tuple[float, float, complex]:
    """Clip a negative eigenvalue at zero and renormalize the trace."""
    mean = 0.5 * (ee + gg)
    disc = math.sqrt((0.5 * (ee - gg)) ** 2 + abs(eg) ** 2)
    lo = mean - disc
    if lo >= 0.0 and abs(ee + gg - 1.0) <= 1e-12:
        return ee, gg, eg
    if disc == 0.0:
        return 0.5, 0.5, 0.0j
    hi = mean + disc
    if lo < 0.0:
        span = hi - lo
        return (ee - lo) / span, (gg - lo) / span, eg / span
    tr = ee + gg
    return ee / tr, gg / tr, eg / tr


def back_action_step(rho: DensityMatrix2, dW: float) -> DensityMatrix2:
    """Apply one detection kick to the qubit state.

    The increment is traceless by construction; if it pushes the state
    outside the physical set the negative eigenvalue is clipped at zero and
    the trace renormalized.
    """
    if not math.isfinite(dW):
        raise ValueError(f"dW must be finite, got {dW!r}")
    if abs(dW) > 0.1:
        raise ValueError(f"step too large: |dW| = {abs(dW):g} exceeds 0.1")
    delta = back_action_increment(rho, dW)
    ee = rho.rho_ee + delta[0, 0].real
    gg = rho.rho_gg + delta[1, 1].real
    eg = rho.rho_eg + delta[0, 1]
    ee, gg, eg = _project_physical(ee, gg, eg)
    return DensityMatrix2(ee, gg, eg)


# ---------------------------------------------------------------------------
# noise samplers
# ---------------------------------------------------------------------------


def default_kick(beta: float) -> float:
    """Kick size 1/sqrt(beta): matches the white model's lag-0 autocorrelation."""
    if not beta > 0.0:
        raise ValueError(f"non-positive rate: beta must be > 0, got {beta}")
    return 1.0 / math.sqrt(beta)


def white_noise_increments(stream, n: int, dt: float) -> np.ndarray:
    """n Wiener increments, Normal(0, dt)."""
    gen = as_generator(stream)
    return gen.standard_normal(n) * math.sqrt(dt)


def point_process_increments(stream, n: int, dt: float, beta: float, kick: float):
    """n per-step sums of +-kick pulses arriving at Poisson rate beta.

    Returns (increments, kick_counts).  Zero-mean by symmetry; the variance
    per step is kick^2 * beta * dt.
    """
    if beta < 0.0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    gen = as_generator(stream)
    counts = gen.poisson(beta * dt, n)
    heads = gen.binomial(counts, 0.5)
    return kick * (2.0 * heads - counts), counts


# ---------------------------------------------------------------------------
# trajectory runner (lock-step over a block of trajectories)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HomodyneRecord:
    """Sampled difference current and dipole of one monitored trajectory."""

    traj_id: int
    times: np.ndarray
    current: np.ndarray
    sigma_x: np.ndarray
    noise_model: NoiseModel
    kick_counts: Optional[np.ndarray] = None


def _initial_rho(initial_state: Optional[QubitState]) -> DensityMatrix2:
    if initial_state is None:
        return DensityMatrix2.from_state(
            QubitState.superposition(1.0 / _SQRT2, 1.0 / _SQRT2)
        )
    return DensityMatrix2.from_state(initial_state)


def _lockstep_run(params, noise_model, theta, kick, rho0, gens):
    """Advance a block of trajectories in lock step, vectorized across them.

    Every operation is elementwise over the block, so results per trajectory
    are identical however trajectories are grouped into blocks.
    """
    n_steps = params.n_steps
    dt = params.dt
    m = len(gens)
    noise = np.empty((m, n_steps))
    counts = None
    if noise_model is NoiseModel.WHITE:
        for j, gen in enumerate(gens):
            noise[j] = white_noise_increments(gen, n_steps, dt)
    else:
        counts = np.empty((m, n_steps), dtype=np.int64)
        for j, gen in enumerate(gens):
            noise[j], counts[j] = point_process_increments(gen, n_steps, dt, params.beta, kick)

    ee = np.full(m, rho0.rho_ee)
    gg = np.full(m, rho0.rho_gg)
    re = np.full(m, rho0.rho_eg.real)
    im = np.full(m, rho0.rho_eg.imag)

    cur = np.empty((m, n_steps))
    sig = np.empty((m, n_steps))
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    x = math.exp(-0.5 * params.gamma * dt)
    x2 = x * x
    phi = (params.omega0 - params.omega1) * dt
    cos_p, sin_p = math.cos(phi), math.sin(phi)

    for k in range(n_steps):
        dW = noise[:, k]
        sig[:, k] = 2.0 * re
        cur[:, k] = 2.0 * (cos_t * re - sin_t * im) + dW / dt

        # detection back-action: traceless increment from the pre-step state
        tr = 2.0 * re
        ee, gg, re, im = (
            ee - dW * tr * ee,
            gg + dW * (2.0 * re - tr * gg),
            re + dW * (ee - tr * re),
            im - dW * tr * im,
        )

        # positivity clip where the kick overshot the physical set
        mean = 0.5 * (ee + gg)
        disc = np.sqrt((0.5 * (ee - gg)) ** 2 + re * re + im * im)
        lo = mean - disc
        bad = lo < 0.0
        if bad.any():
            span = np.where(bad & (disc > 0.0), 2.0 * disc, 1.0)
            ee = np.where(bad, (ee - lo) / span, ee)
            gg = np.where(bad, (gg - lo) / span, gg)
            re = np.where(bad, re / span, re)
            im = np.where(bad, im / span, im)

        # deterministic no-jump drift, renormalized
        t2 = x2 * ee + gg
        ee = x2 * ee / t2
        gg = gg / t2
        re, im = x * (re * cos_p - im * sin_p) / t2, x * (re * sin_p + im * cos_p) / t2

    return cur, sig, counts


def _resolve_kick(params: ModelParams, noise_model: NoiseModel, kick: Optional[float]) -> float:
    if noise_model is NoiseModel.WHITE:
        return 0.0
    if kick is not None:
        if kick < 0.0:
            raise ValueError(f"kick must be >= 0, got {kick}")
        return float(kick)
    return default_kick(params.beta)


def _warn_long_window(params: ModelParams) -> None:
    if params.gamma * params.t_max > 0.1:
        warnings.warn(
            f"homodyne window gamma*t_max = {params.gamma * params.t_max:g} is not "
            "small; the detection model assumes the window is well inside the lifetime",
            stacklevel=3,
        )


def run_homodyne_trajectory(
    params: ModelParams,
    noise_model: Union[NoiseModel, str],
    stream,
    theta: float = 0.0,
    kick: Optional[float] = None,
    initial_state: Optional[QubitState] = None,
) -> HomodyneRecord:
    """Sample one monitored trajectory.

    Per step of size dt the differential signal gains the dipole drift plus
    the noise increment (``current = sigma_x_quadrature + dW/dt``); the same
    increment then kicks the qubit state, followed by the deterministic
    no-jump drift.  The white model draws dW ~ Normal(0, dt); the point
    process model sums +-kick pulses at rate beta, with kick defaulting to
    1/sqrt(beta) so both models share the same lag-0 autocorrelation.
    """
    noise_model = NoiseModel(noise_model)
    _warn_long_window(params)
    kick_val = _resolve_kick(params, noise_model, kick)
    gen = as_generator(stream)
    rho0 = _initial_rho(initial_state)
    cur, sig, counts = _lockstep_run(params, noise_model, theta, kick_val, rho0, [gen])
    times = np.arange(params.n_steps) * params.dt
    traj_id = stream.stream_id if isinstance(stream, RngStream) else 0
    return HomodyneRecord(
        traj_id=traj_id,
        times=times,
        current=cur[0],
        sigma_x=sig[0],
        noise_model=noise_model,
        kick_counts=None if counts is None else counts[0],
    )


def iter_homodyne_records(
    params: ModelParams,
    noise_model: Union[NoiseModel, str],
    theta: float = 0.0,
    kick: Optional[float] = None,
    initial_state: Optional[QubitState] = None,
    chunk: int = 512,
    threads: int = 1,
) -> Iterator[HomodyneRecord]:
    """Yield ``params.n_traj`` records in trajectory order, blockwise lock-step.

    Trajectory i uses substream (seed, i), so the stream of records is
    byte-identical for any chunk size or thread count.
    """
    noise_model = NoiseModel(noise_model)
    _warn_long_window(params)
    kick_val = _resolve_kick(params, noise_model, kick)
    rho0 = _initial_rho(initial_state)
    times = np.arange(params.n_steps) * params.dt

    def run_block(lo: int, hi: int):
        gens = [derive_stream(params.seed, i).generator() for i in range(lo, hi)]
        return _lockstep_run(params, noise_model, theta, kick_val, rho0, gens)

    blocks = [(lo, min(lo + chunk, params.n_traj)) for lo in range(0, params.n_traj, chunk)]
    if threads > 1 and len(blocks) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(lambda b: run_block(*b), blocks)
            for (lo, hi), (cur, sig, counts) in zip(blocks, results):
                yield from _emit_records(lo, hi, times, cur, sig, counts, noise_model)
    else:
        for lo, hi in blocks:
            cur, sig, counts = run_block(lo, hi)
            yield from _emit_records(lo, hi, times, cur, sig, counts, noise_model)


def _emit_records(lo, hi, times, cur, sig, counts, noise_model):
    for j, i in enumerate(range(lo, hi)):
        yield HomodyneRecord(
            traj_id=i,
            times=times,
            current=cur[j],
            sigma_x=sig[j],
            noise_model=noise_model,
            kick_counts=None if counts is None else counts[j],
        )


def run_homodyne_ensemble(params, noise_model, **kwargs) -> List[HomodyneRecord]:
    """Materialize the full record list (convenience for modest ensembles)."""
    return list(iter_homodyne_records(params, noise_model, **kwargs))


# ---------------------------------------------------------------------------
# autocorrelation of the recorded signal
# ---------------------------------------------------------------------------


def autocorrelation(series: Sequence[float], max_lag: int) -> np.ndarray:
    """Lagged products of the mean-subtracted series, divisor n - k per lag."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n <= max_lag:
        raise ValueError(f"series too short: length {n} must exceed max_lag {max_lag}")
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    d = x - x.mean()
    out = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        out[k] = float(np.dot(d[: n - k], d[k:])) / (n - k)
    return out


def signal_autocorrelation(record, max_lag: int) -> np.ndarray:
    """Autocorrelation of one record's fluctuating current (time-mean removed)."""
    series = record.current if isinstance(record, HomodyneRecord) else record
    return autocorrelation(series, max_lag)


class EnsembleAutocorrelation:
    """Single-pass ensemble estimator of the signal autocorrelation.

    Subtracts the per-time ensemble mean (removing the deterministic drift)
    and averages lagged products over trajectories and time origins.  Partial
    sums accumulate in the order trajectories are added, so a fixed
    trajectory order gives a deterministic merge.
    """

    def __init__(self, n_steps: int, max_lag: int) -> None:
        if n_steps <= max_lag:
            raise ValueError(f"series too short: {n_steps} steps for max_lag {max_lag}")
        self.n_steps = n_steps
        self.max_lag = max_lag
        self._n_traj = 0
        self._time_sum = np.zeros(n_steps)
        self._lag_sum = np.zeros(max_lag + 1)

    def add(self, series) -> None:
        x = np.atleast_2d(np.asarray(series, dtype=float))
        if x.shape[1] != self.n_steps:
            raise ValueError(f"expected series of length {self.n_steps}, got {x.shape[1]}")
        self._n_traj += x.shape[0]
        self._time_sum += x.sum(axis=0)
        n = self.n_steps
        for k in range(self.max_lag + 1):
            self._lag_sum[k] += float(np.einsum("ij,ij->", x[:, : n - k], x[:, k:]))

    def result(self) -> np.ndarray:
        if self._n_traj == 0:
            raise ValueError("no trajectories added")
        m = self._n_traj
        n = self.n_steps
        zeta = np.empty(self.max_lag + 1)
        for k in range(self.max_lag + 1):
            mean_part = float(np.dot(self._time_sum[: n - k], self._time_sum[k:])) / m
            zeta[k] = (self._lag_sum[k] - mean_part) / (m * (n - k))
        return zeta


def ensemble_autocorrelation(records, n_steps: int, max_lag: int) -> np.ndarray:
    """Autocorrelation over an ensemble of records (or raw current arrays)."""
    acc = EnsembleAutocorrelation(n_steps, max_lag)
    for rec in records:
        acc.add(rec.current if isinstance(rec, HomodyneRecord) else rec)
    return acc.result()
