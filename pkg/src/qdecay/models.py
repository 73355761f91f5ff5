"""The three single-decay engines (qmop, swf, nsm) and their analytic laws.

All three engines consume one ``RngStream`` per trajectory and share the same
within-step emission-time attribution: when a jump is drawn inside a step (or
inside a fluctuation gap), the recorded decay time is sampled from the
exponential law restricted to that interval.  This keeps the recorded
decay-time distribution continuous instead of grid-quantized, so ensemble
statistics can be compared to the analytic exponential law at full KS
resolution.

Draw order per trajectory (part of the reproducibility contract):

* qmop / swf: one block of ``n_steps`` uniforms for the per-step jump checks,
  then one extra uniform for the within-step attribution if a jump occurred.
* nsm: alternating uniforms, one for each fluctuation gap and one for each
  reduction outcome; the attribution uniform is recovered from the outcome
  draw by conditioning, so no extra draw is consumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    MAX_GAMMA_DT,
    EventKind,
    Model,
    ModelParams,
    QubitState,
    RngStream,
    TrajectoryEvent,
    TrajectoryRecord,
    as_generator,
    derive_stream,
    normalize,
)

NSM_BETA_ZERO_FLAG = "nsm_beta_zero_no_fluctuations"


class NsmOutcome(str, Enum):
    RESET_TO_EXCITED = "reset_to_excited"
    JUMP_TO_GROUND = "jump_to_ground"


@dataclass(frozen=True)
class NsmEvent:
    """One vacuum-fluctuation reduction: gap since the previous one, the
    occupation drop ``a_before = 1 - exp(-gamma*gap)`` accumulated over that
    gap, and the Born outcome."""

    t: float
    gap: float
    a_before: float
    outcome: NsmOutcome

    def __post_init__(self) -> None:
        if not self.gap > 0.0:
            raise ValueError(f"gap must be > 0, got {self.gap}")
        if not 0.0 <= self.a_before < 1.0:
            raise ValueError(f"a_before must lie in [0, 1), got {self.a_before}")


@dataclass(frozen=True)
class DropMoments:
    """Mean and standard deviation of the occupation drop, with r = beta/gamma."""

    mean_a: float
    std_a: float
    r: float


def survival_probability(gamma: float, t: float) -> float:
    """Probability exp(-gamma*t) that an excited atom has not decayed by t."""
    if t < 0.0:
        raise ValueError(f"negative time: t must be >= 0, got {t}")
    if gamma < 0.0:
        raise ValueError(f"negative rate: gamma must be >= 0, got {gamma}")
    return math.exp(-gamma * t)


def unitary_weights(gamma: float, t: float) -> Tuple[float, float]:
    """(excited, continuum) weights of the unconditioned unitary evolution.

    The weights are complementary by construction and sum to 1.0 exactly.
    """
    excited = survival_probability(gamma, t)
    return excited, 1.0 - excited


def qmop_propagate(state: QubitState, params: ModelParams, t: float) -> QubitState:
    """Deterministic no-jump propagation of a two-level state for duration t.

    The excited amplitude decays at gamma/2 and both amplitudes pick up their
    energy phases; the result is renormalized, which is what conditions the
    evolution on "no jump so far".  A state carrying photon weight is
    rejected: the no-jump branch is strictly two-level.
    """
    if t < 0.0:
        raise ValueError(f"negative time: t must be >= 0, got {t}")
    if state.w_photon != 0.0:
        raise ValueError("photon component present: no-jump propagation needs w_photon == 0")
    c1 = state.c_excited * np.exp(complex(-0.5 * params.gamma * t, -params.omega1 * t))
    c0 = state.c_ground * np.exp(complex(0.0, -params.omega0 * t))
    norm_sq = abs(c0) ** 2 + abs(c1) ** 2
    if norm_sq < 1e-300:
        raise ValueError("zero norm: no-jump branch has vanished")
    n = math.sqrt(norm_sq)
    return QubitState(complex(c1) / n, complex(c0) / n, 0.0)


def jump_probability(state: QubitState, gamma: float, dt: float) -> float:
    """Conditional jump probability |c_excited|^2 * gamma * dt for one step."""
    if gamma < 0.0:
        raise ValueError(f"negative rate: gamma must be >= 0, got {gamma}")
    if dt < 0.0:
        raise ValueError(f"negative time: dt must be >= 0, got {dt}")
    if gamma * dt > MAX_GAMMA_DT:
        raise ValueError(f"step too large: gamma*dt={gamma * dt:g} exceeds {MAX_GAMMA_DT}")
    return abs(state.c_excited) ** 2 * gamma * dt


def swf_detection_probability(state: QubitState, gamma: float, dt: float) -> float:
    """Per-step photon-detection probability |c_excited|^2 * (1 - exp(-gamma*dt)).

    Uses the exact per-step strength of the unitary evolution rather than the
    first-order rate, so that n no-detection steps from a pure excited state
    leave survival weight exp(-gamma*n*dt) exactly.
    """
    if gamma < 0.0:
        raise ValueError(f"negative rate: gamma must be >= 0, got {gamma}")
    if dt < 0.0:
        raise ValueError(f"negative time: dt must be >= 0, got {dt}")
    return abs(state.c_excited) ** 2 * (-math.expm1(-gamma * dt))


def sample_fluctuation_gap(beta: float, stream, size: Optional[int] = None):
    """Draw waiting times between vacuum fluctuations, -ln(u)/beta with u~U(0,1).

    Degenerate draws (u == 0, which would give an infinite gap) are resampled.
    With ``size`` given, returns an ndarray of that many gaps.
    """
    if not beta > 0.0:
        raise ValueError(f"non-positive rate: beta must be > 0, got {beta}")
    gen = as_generator(stream)
    if size is None:
        while True:
            u = gen.random()
            if u > 0.0:
                gap = -math.log(u) / beta
                if gap > 0.0:
                    return gap
    u = np.asarray(gen.random(size))
    bad = u <= 0.0
    while bad.any():
        u[bad] = gen.random(int(bad.sum()))
        bad = u <= 0.0
    return -np.log(u) / beta


def fluctuation_gap_density(beta: float, tau: float) -> float:
    """Density beta*exp(beta*tau) of the (negative) time since the last fluctuation."""
    if not beta > 0.0:
        raise ValueError(f"non-positive rate: beta must be > 0, got {beta}")
    if tau > 0.0:
        raise ValueError(f"positive tau: density is defined for tau <= 0, got {tau}")
    return beta * math.exp(beta * tau)


def occupation_drop_density(r: float, a: float) -> float:
    """Density r*(1-a)^(r-1) of the occupation drop at a fluctuation.

    Accepts a = 0 (density r there); a = 1 is excluded because the density
    diverges for r < 1.
    """
    if r < 0.0:
        raise ValueError(f"r must be >= 0, got {r}")
    if not 0.0 <= a < 1.0:
        raise ValueError(f"a out of range: need 0 <= a < 1, got {a}")
    return r * (1.0 - a) ** (r - 1.0)


def occupation_drop_moments(gamma: float, beta: float) -> DropMoments:
    """Mean 1/(1+r) and spread of the occupation drop, with r = beta/gamma."""
    if not gamma > 0.0:
        raise ValueError(f"non-positive gamma: need gamma > 0, got {gamma}")
    if beta < 0.0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    r = beta / gamma
    mean = 1.0 / (1.0 + r)
    std = mean * math.sqrt(r / (2.0 + r))
    return DropMoments(mean_a=mean, std_a=std, r=r)


# ---------------------------------------------------------------------------
# step-based engines (qmop, swf)
# ---------------------------------------------------------------------------


def _truncated_exponential_time(rate: float, width: float, v: float) -> float:
    """Inverse-CDF sample of Exp(rate) conditioned on (0, width], v in [0, 1)."""
    if rate <= 0.0:
        return (v if v > 0.0 else 0.5) * width
    q = -math.expm1(-rate * width)
    s = -math.log1p(-v * q) / rate
    # guard against rounding at the interval ends
    return min(max(s, math.ulp(0.0)), width)


@dataclass(frozen=True)
class _StepPlan:
    """Deterministic no-jump data shared by every trajectory of an ensemble."""

    n_steps: int
    dt: float
    gamma: float
    occupation: np.ndarray  # occupation at step starts, length n_steps + 1
    jump_prob: np.ndarray  # per-step jump/detection probability, length n_steps


def _step_plan(params: ModelParams, initial: QubitState, model: Model) -> _StepPlan:
    if initial.w_photon != 0.0:
        raise ValueError("photon component present: decay engines start two-level")
    initial = normalize(initial)
    w_e = abs(initial.c_excited) ** 2
    w_g = abs(initial.c_ground) ** 2
    n_steps = params.n_steps
    t = np.arange(n_steps + 1) * params.dt
    if w_g == 0.0:
        # pure excited input: the no-jump normalization keeps occupation at
        # exactly one, independent of elapsed time
        occ = np.ones(n_steps + 1)
    else:
        s = np.exp(-params.gamma * t)
        occ = w_e * s / (w_g + w_e * s)
    if model is Model.SWF:
        per_step = -math.expm1(-params.gamma * params.dt)
    else:
        per_step = params.gamma * params.dt
    return _StepPlan(n_steps, params.dt, params.gamma, occ, occ[:n_steps] * per_step)


def _single_step_decay(plan: _StepPlan, gen) -> Tuple[int, float]:
    """Run one step-based trajectory; returns (jump_step, decay_time).

    ``jump_step`` is -1 when the trajectory survives to t_max (decay_time nan).
    """
    u = np.asarray(gen.random(plan.n_steps))
    hits = u < plan.jump_prob
    if not hits.any():
        return -1, math.nan
    k = int(np.argmax(hits))
    v = float(gen.random())
    s = _truncated_exponential_time(plan.gamma, plan.dt, v)
    return k, k * plan.dt + s


def _step_decay_record(
    params: ModelParams,
    stream,
    model: Model,
    initial_state: Optional[QubitState],
    record_steps: bool,
) -> TrajectoryRecord:
    initial = QubitState.excited() if initial_state is None else initial_state
    plan = _step_plan(params, initial, model)
    gen = as_generator(stream)
    k, t_dec = _single_step_decay(plan, gen)
    traj_id = stream.stream_id if isinstance(stream, RngStream) else 0

    terminal_kind = EventKind.PHOTON_DETECTION if model is Model.SWF else EventKind.QUANTUM_JUMP
    events: List[TrajectoryEvent] = []
    last_step = plan.n_steps if k < 0 else k
    if record_steps:
        for j in range(last_step):
            events.append(
                TrajectoryEvent(
                    (j + 1) * plan.dt,
                    EventKind.STEP,
                    float(plan.occupation[j]),
                    float(plan.occupation[j + 1]),
                )
            )
    if k >= 0:
        events.append(TrajectoryEvent(t_dec, terminal_kind, float(plan.occupation[k]), 0.0))

    series = None
    if record_steps:
        series = plan.occupation.copy()
        if k >= 0:
            series[k + 1 :] = 0.0
    return TrajectoryRecord(
        traj_id=traj_id,
        events=tuple(events),
        decay_time=None if k < 0 else t_dec,
        occupation_series=series,
    )


def run_qmop_trajectory(
    params: ModelParams,
    stream,
    initial_state: Optional[QubitState] = None,
    record_steps: bool = False,
) -> TrajectoryRecord:
    """One trajectory of the open-system engine.

    Each step draws a uniform against the conditional jump probability
    ``occupation * gamma * dt``; the no-jump branch follows the deterministic
    renormalized propagation, under which a pure excited input keeps
    occupation exactly one until the jump.
    """
    return _step_decay_record(params, stream, Model.QMOP, initial_state, record_steps)


def run_swf_trajectory(
    params: ModelParams,
    stream,
    initial_state: Optional[QubitState] = None,
    record_steps: bool = False,
) -> TrajectoryRecord:
    """One trajectory of the finite-step photon-counting engine.

    Per step, a photon is detected with probability
    ``occupation * (1 - exp(-gamma*dt))`` (terminal jump to ground);
    otherwise the state is renormalized onto the no-photon component, which
    coincides with the qmop no-jump propagation over one step.
    """
    return _step_decay_record(params, stream, Model.SWF, initial_state, record_steps)


# ---------------------------------------------------------------------------
# event-driven engine (nsm)
# ---------------------------------------------------------------------------


def _single_nsm(
    params: ModelParams,
    gen,
    w_excited0: float,
    fluctuation_times: Optional[Sequence[float]] = None,
):
    """Run one fluctuation-driven trajectory.

    Returns (decay_time, fluct_times, gaps, occ_before, jumped) where the
    lists cover every fluctuation processed in order; decay_time is NaN when
    the trajectory survives to t_max.
    """
    gamma, beta, t_max = params.gamma, params.beta, params.t_max
    forced = None if fluctuation_times is None else list(fluctuation_times)

    t_prev = 0.0
    w_exc = w_excited0  # excited weight at the last reset
    times: List[float] = []
    gaps: List[float] = []
    occ_before: List[float] = []
    decay_time = math.nan
    jumped = False
    idx = 0
    while True:
        if forced is None:
            if not beta > 0.0:
                break
            while True:
                u = gen.random()
                if u > 0.0:
                    gap = -math.log(u) / beta
                    if gap > 0.0:
                        break
            t_fluct = t_prev + gap
        else:
            if idx >= len(forced):
                break
            t_fluct = float(forced[idx])
            gap = t_fluct - t_prev
            idx += 1
            if gap <= 0.0:
                raise ValueError("fluctuation times must be strictly increasing from 0")
        if t_fluct > t_max:
            break

        survive_w = w_exc * math.exp(-gamma * gap)
        u = gen.random()
        times.append(t_fluct)
        gaps.append(gap)
        occ_before.append(survive_w)
        if u < survive_w:
            # reset to pure excited; relative phase restarts with the state
            t_prev = t_fluct
            w_exc = 1.0
        else:
            # terminal reduction onto the ground(+photon) branch; attribute
            # the emission time inside the gap by the exponential flow of the
            # excited component (exact for pure-excited resets)
            jumped = True
            v = (u - survive_w) / (1.0 - survive_w) if survive_w < 1.0 else gen.random()
            s = _truncated_exponential_time(gamma, gap, v)
            decay_time = (t_fluct - gap) + s
            break
    return decay_time if jumped else math.nan, times, gaps, occ_before, jumped


def run_nsm_trajectory(
    params: ModelParams,
    stream,
    initial_state: Optional[QubitState] = None,
    record_steps: bool = False,
    fluctuation_times: Optional[Sequence[float]] = None,
) -> TrajectoryRecord:
    """One trajectory of the vacuum-fluctuation reduction engine.

    Fluctuations arrive as a rate-``beta`` point process (or at the injected
    ``fluctuation_times``, a deterministic test hook).  Between fluctuations
    the state follows the unconditioned unitary weights, so the occupation of
    a freshly reset atom decays as ``exp(-gamma * (t - t_reset))``.  Each
    fluctuation reduces the state by the Born rule: back to pure excited with
    the surviving weight, else terminally onto ground.  Fluctuation duration
    is treated as zero.

    ``beta == 0`` is the degenerate no-fluctuation limit: nothing ever jumps,
    the occupation decays smoothly, and the record is flagged.
    """
    if params.model is not Model.NSM:
        raise ValueError(f"run_nsm_trajectory needs model=nsm, got {params.model.value}")
    initial = QubitState.excited() if initial_state is None else normalize(initial_state)
    if initial.w_photon != 0.0:
        raise ValueError("photon component present: decay engines start two-level")
    w_exc0 = abs(initial.c_excited) ** 2
    gen = as_generator(stream)
    traj_id = stream.stream_id if isinstance(stream, RngStream) else 0

    if w_exc0 == 0.0:
        # pure ground input: every reduction is trivial, nothing ever jumps
        decay_time, times, gaps, occ_before, jumped = math.nan, [], [], [], False
    else:
        decay_time, times, gaps, occ_before, jumped = _single_nsm(
            params, gen, w_exc0, fluctuation_times
        )

    nsm_events = []
    events: List[TrajectoryEvent] = []
    for i, (t, gap, occ) in enumerate(zip(times, gaps, occ_before)):
        terminal = jumped and i == len(times) - 1
        outcome = NsmOutcome.JUMP_TO_GROUND if terminal else NsmOutcome.RESET_TO_EXCITED
        a = -math.expm1(-params.gamma * gap)
        nsm_events.append(NsmEvent(t=t, gap=gap, a_before=a, outcome=outcome))
        events.append(
            TrajectoryEvent(
                t,
                EventKind.QUANTUM_JUMP if terminal else EventKind.FLUCTUATION_NO_JUMP,
                occ,
                0.0 if terminal else 1.0,
            )
        )

    flags: Tuple[str, ...] = ()
    if params.beta == 0.0 and fluctuation_times is None:
        flags = (NSM_BETA_ZERO_FLAG,)

    series = None
    if record_steps:
        series = _nsm_occupation_series(params, w_exc0, times, gaps, occ_before, jumped)
        step_events = _nsm_step_events(params, series, {ev.t for ev in events})
        if jumped:
            step_events = [ev for ev in step_events if ev.t < times[-1]]
        events = sorted(events + step_events, key=lambda ev: ev.t)

    return TrajectoryRecord(
        traj_id=traj_id,
        events=tuple(events),
        decay_time=None if math.isnan(decay_time) else decay_time,
        nsm_events=tuple(nsm_events),
        occupation_series=series,
        flags=flags,
    )


def _nsm_occupation_series(params, w_exc0, times, gaps, occ_before, jumped) -> np.ndarray:
    """Occupation on the step grid: exponential arcs between resets, 0 after a jump."""
    grid = np.arange(params.n_steps + 1) * params.dt
    reset_times = [0.0]
    reset_weights = [w_exc0]
    for i, t in enumerate(times):
        terminal = jumped and i == len(times) - 1
        if not terminal:
            reset_times.append(t)
            reset_weights.append(1.0)
    seg = np.searchsorted(np.asarray(reset_times), grid, side="right") - 1
    t0 = np.asarray(reset_times)[seg]
    w0 = np.asarray(reset_weights)[seg]
    series = w0 * np.exp(-params.gamma * (grid - t0))
    if jumped:
        series[grid >= times[-1]] = 0.0
    return series


def _nsm_step_events(params, series, taken_times) -> List[TrajectoryEvent]:
    out = []
    for j in range(params.n_steps):
        t = (j + 1) * params.dt
        if t in taken_times:
            continue  # a fluctuation landed exactly on the grid (forced-grid hook)
        out.append(TrajectoryEvent(t, EventKind.STEP, float(series[j]), float(series[j + 1])))
    return out


# ---------------------------------------------------------------------------
# ensemble runner
# ---------------------------------------------------------------------------


@dataclass
class EventTable:
    """Column-oriented event log, cheap to accumulate and to stream to CSV."""

    traj_id: np.ndarray
    t: np.ndarray
    kind: List[str]
    occupation_before: np.ndarray
    occupation_after: np.ndarray

    def __len__(self) -> int:
        return len(self.kind)


@dataclass
class EnsembleSummary:
    """Per-ensemble statistics of a single-decay run.

    ``decay_times`` is NaN-padded where trajectories were censored at t_max.
    Occupation bins are per-trajectory bin means aggregated over the
    ensemble; ``drop_samples`` collects the occupation drop at every
    fluctuation (terminal and non-terminal) of an NSM run.
    """

    model: Model
    n_traj: int
    decay_times: np.ndarray
    n_censored: int
    events: EventTable
    bin_centers: Optional[np.ndarray] = None
    occupation_mean: Optional[np.ndarray] = None
    occupation_var: Optional[np.ndarray] = None
    occupation_se: Optional[np.ndarray] = None
    drop_samples: Optional[np.ndarray] = None
    drop_terminal: Optional[np.ndarray] = None
    flags: Tuple[str, ...] = ()

    @property
    def observed_decay_times(self) -> np.ndarray:
        return self.decay_times[~np.isnan(self.decay_times)]


def _chunk_ranges(n: int, chunks: int) -> List[range]:
    chunks = max(1, min(chunks, n))
    bounds = np.linspace(0, n, chunks + 1).astype(int)
    return [range(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _binned_occupation_step(plan: _StepPlan, jump_steps: np.ndarray, bin_steps: int):
    """Mean/var/se over trajectories of per-bin occupation means.

    Uses the fact that every live trajectory rides the same deterministic
    no-jump curve: the per-trajectory series is the curve truncated at its
    jump step, so binned values follow from prefix sums and the cutoffs.
    """
    n_steps = plan.n_steps
    n_bins = n_steps // bin_steps
    edges = np.arange(n_bins + 1) * bin_steps
    prefix = np.concatenate([[0.0], np.cumsum(plan.occupation[:n_steps])])
    cut = np.where(jump_steps < 0, n_steps, jump_steps + 1)
    lo = np.minimum.outer(cut, edges[:-1])
    hi = np.minimum.outer(cut, edges[1:])
    vals = (prefix[hi] - prefix[lo]) / bin_steps  # (n_traj, n_bins)
    mean = vals.mean(axis=0)
    var = vals.var(axis=0, ddof=1) if vals.shape[0] > 1 else np.zeros(n_bins)
    se = np.sqrt(var / vals.shape[0])
    centers = (edges[:-1] + edges[1:]) / 2.0 * plan.dt
    return centers, mean, var, se


def run_decay_ensemble(
    params: ModelParams,
    initial_state: Optional[QubitState] = None,
    threads: int = 1,
    bin_steps: Optional[int] = None,
) -> EnsembleSummary:
    """Run ``params.n_traj`` trajectories of the selected model.

    Trajectory ``i`` always consumes the substream ``derive_stream(seed, i)``
    and partial results are merged in trajectory order, so the output is
    identical for any ``threads`` value.
    """
    initial = QubitState.excited() if initial_state is None else normalize(initial_state)
    n = params.n_traj
    model = params.model

    if model in (Model.QMOP, Model.SWF):
        plan = _step_plan(params, initial, model)

        def work(ids: range):
            times = np.full(len(ids), math.nan)
            steps = np.full(len(ids), -1, dtype=np.int64)
            for j, i in enumerate(ids):
                gen = derive_stream(params.seed, i).generator()
                k, t_dec = _single_step_decay(plan, gen)
                steps[j] = k
                times[j] = t_dec
            return times, steps

        parts = _run_chunks(work, _chunk_ranges(n, threads), threads)
        decay_times = np.concatenate([p[0] for p in parts])
        jump_steps = np.concatenate([p[1] for p in parts])

        kind = EventKind.PHOTON_DETECTION if model is Model.SWF else EventKind.QUANTUM_JUMP
        decayed = jump_steps >= 0
        table = EventTable(
            traj_id=np.flatnonzero(decayed).astype(np.int64),
            t=decay_times[decayed],
            kind=[kind.value] * int(decayed.sum()),
            occupation_before=plan.occupation[jump_steps[decayed]],
            occupation_after=np.zeros(int(decayed.sum())),
        )
        summary = EnsembleSummary(
            model=model,
            n_traj=n,
            decay_times=decay_times,
            n_censored=int(np.isnan(decay_times).sum()),
            events=table,
        )
        if bin_steps:
            (
                summary.bin_centers,
                summary.occupation_mean,
                summary.occupation_var,
                summary.occupation_se,
            ) = _binned_occupation_step(plan, jump_steps, bin_steps)
        return summary

    if model is not Model.NSM:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unknown model {model}")
    w_exc0 = abs(initial.c_excited) ** 2

    n_bins = (params.n_steps // bin_steps) if bin_steps else 0
    edges = np.arange(n_bins + 1) * (bin_steps or 1)

    def work(ids: range):
        times = np.full(len(ids), math.nan)
        rows: List[tuple] = []
        drops: List[float] = []
        terminal: List[bool] = []
        vals = np.zeros((len(ids), n_bins)) if n_bins else None
        for j, i in enumerate(ids):
            gen = derive_stream(params.seed, i).generator()
            if w_exc0 == 0.0:
                continue
            t_dec, f_times, gaps, occ_before, jumped = _single_nsm(params, gen, w_exc0)
            times[j] = t_dec
            if n_bins:
                series = _nsm_occupation_series(params, w_exc0, f_times, gaps, occ_before, jumped)
                vals[j] = np.add.reduceat(series[: params.n_steps], edges[:-1]) / bin_steps
            for m, (t, gap, occ) in enumerate(zip(f_times, gaps, occ_before)):
                is_term = jumped and m == len(f_times) - 1
                rows.append(
                    (
                        i,
                        t,
                        EventKind.QUANTUM_JUMP.value if is_term else EventKind.FLUCTUATION_NO_JUMP.value,
                        occ,
                        0.0 if is_term else 1.0,
                    )
                )
                drops.append(-math.expm1(-params.gamma * gap))
                terminal.append(is_term)
        return times, rows, drops, terminal, vals

    parts = _run_chunks(work, _chunk_ranges(n, threads), threads)
    decay_times = np.concatenate([p[0] for p in parts])
    rows = [r for p in parts for r in p[1]]
    drops = np.array([d for p in parts for d in p[2]])
    terminal = np.array([b for p in parts for b in p[3]], dtype=bool)
    table = EventTable(
        traj_id=np.array([r[0] for r in rows], dtype=np.int64),
        t=np.array([r[1] for r in rows]),
        kind=[r[2] for r in rows],
        occupation_before=np.array([r[3] for r in rows]),
        occupation_after=np.array([r[4] for r in rows]),
    )
    flags: Tuple[str, ...] = (NSM_BETA_ZERO_FLAG,) if params.beta == 0.0 else ()
    summary = EnsembleSummary(
        model=model,
        n_traj=n,
        decay_times=decay_times,
        n_censored=int(np.isnan(decay_times).sum()),
        events=table,
        drop_samples=drops,
        drop_terminal=terminal,
        flags=flags,
    )
    if n_bins:
        vals = np.vstack([p[4] for p in parts])
        summary.bin_centers = (edges[:-1] + edges[1:]) / 2.0 * params.dt
        summary.occupation_mean = vals.mean(axis=0)
        summary.occupation_var = vals.var(axis=0, ddof=1) if n > 1 else np.zeros(n_bins)
        summary.occupation_se = np.sqrt(summary.occupation_var / n)
    return summary


def _run_chunks(work, ranges: List[range], threads: int):
    if threads <= 1 or len(ranges) == 1:
        return [work(r) for r in ranges]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, ranges))
