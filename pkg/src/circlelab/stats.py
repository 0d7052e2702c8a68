"""Estimators and property checks over trajectories and event logs.

The estimators here turn simulation output into the quantities the rest
of the package reasons about: occupation histograms and total-variation
distances between them, hitting/escape probabilities with Wilson
intervals and the explicit escape bounds, exponential-moment and drift
diagnostics for the interaction coordinate, stochastic-dominance
comparisons, convergence detection toward trap points, and a local
minorization probe over a grid of starts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .angles import TWO_PI, ArcSet, circle_dist, wrap
from .diffusion import (
    EnsembleTrajectories,
    Trajectory,
    run_exit_trials,
    simulate_diffusion_ensemble,
)
from .errors import BinMismatchError, HypothesisWarning
from .landscape import CriticalLandscape, LevelGeometry
from .pdmp import EventLog, PdmpState, segment_u, simulate_pdmp, simulate_pdmp_driven
from .potential import PeriodicPotential
from .seeding import derive_replica_seeds, generator_from_seed

__all__ = [
    "DEFAULT_X_BINS",
    "DEFAULT_U_BINS",
    "DEFAULT_U_RANGE",
    "DOMINANCE_A",
    "DOMINANCE_B",
    "DOMINANCE_BOTH",
    "DOMINANCE_CROSSING",
    "EmpiricalHistogram",
    "EscapeEstimate",
    "HittingEntry",
    "HittingSample",
    "DriftReport",
    "MomentEntry",
    "wilson_interval",
    "dkw_tolerance",
    "occupation_histogram",
    "tv_distance",
    "hitting_time",
    "estimate_escape",
    "escape_bound",
    "exponential_moment_scan",
    "ecdf_dominance",
    "detect_convergence",
    "eta_schedule",
    "fit_rate",
    "lyapunov_drift_check",
    "drift_check_scan",
    "doeblin_probe",
]

DEFAULT_X_BINS = 64
DEFAULT_U_BINS = 40
DEFAULT_U_RANGE = (-12.0, 12.0)

DOMINANCE_A = "A<=B"
DOMINANCE_B = "B<=A"
DOMINANCE_BOTH = "both"
DOMINANCE_CROSSING = "crossing"

_Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int,
                    z: float = _Z95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 0 or successes < 0 or successes > trials:
        raise ValueError("need 0 <= successes <= trials")
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / trials
                                   + z2 / (4.0 * trials * trials))
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


def dkw_tolerance(n: int, alpha: float = 0.05) -> float:
    """One-sample DKW band half-width at confidence 1 - alpha."""
    if n <= 0:
        raise ValueError("n must be positive")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


@dataclass(frozen=True)
class EmpiricalHistogram:
    """Normalized time-occupation histogram on (x, u) with u overflow bins.

    The u axis has n_u interior bins on [u_lo, u_hi] plus an underflow
    column (index 0) and an overflow column (index n_u + 1).  `weight` is
    the total time mass that was binned, so histograms merge by weighted
    average and the merge is associative and mass-preserving.
    """

    x_edges: np.ndarray
    u_edges: np.ndarray
    masses: np.ndarray
    weight: float

    def __post_init__(self):
        xe = np.asarray(self.x_edges, dtype=float)
        ue = np.asarray(self.u_edges, dtype=float)
        m = np.asarray(self.masses, dtype=float)
        if m.shape != (xe.size - 1, ue.size + 1):
            raise ValueError("masses must have shape (n_x, n_u + 2)")
        if np.any(m < -1e-15):
            raise ValueError("masses must be nonnegative")
        for arr in (xe, ue, m):
            arr.flags.writeable = False
        object.__setattr__(self, "x_edges", xe)
        object.__setattr__(self, "u_edges", ue)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def n_x(self) -> int:
        return int(self.x_edges.size - 1)

    @property
    def n_u(self) -> int:
        return int(self.u_edges.size - 1)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def x_marginal(self) -> np.ndarray:
        return self.masses.sum(axis=1)

    def u_marginal(self) -> np.ndarray:
        return self.masses.sum(axis=0)

    def merge(self, other: "EmpiricalHistogram") -> "EmpiricalHistogram":
        """Weighted average of two normalized histograms."""
        _check_same_bins(self, other)
        w = self.weight + other.weight
        if w <= 0.0:
            raise ValueError("cannot merge two zero-weight histograms")
        m = (self.weight * self.masses + other.weight * other.masses) / w
        return EmpiricalHistogram(self.x_edges, self.u_edges, m, w)


def _check_same_bins(h1: EmpiricalHistogram, h2: EmpiricalHistogram):
    if (h1.masses.shape != h2.masses.shape
            or not np.array_equal(h1.x_edges, h2.x_edges)
            or not np.array_equal(h1.u_edges, h2.u_edges)):
        raise BinMismatchError("histograms use different bin structures")


def _histogram_edges(x_bins, u_bins, u_range):
    u_lo, u_hi = float(u_range[0]), float(u_range[1])
    if u_hi <= u_lo:
        raise ValueError("u_range must be increasing")
    x_edges = np.linspace(0.0, TWO_PI, int(x_bins) + 1)
    u_edges = np.linspace(u_lo, u_hi, int(u_bins) + 1)
    return x_edges, u_edges


def _bin_u(u, u_edges):
    """u column index with under/overflow at 0 and n_u + 1."""
    n_u = u_edges.size - 1
    idx = np.searchsorted(u_edges, u, side="right")
    return np.clip(idx, 0, n_u + 1)


def _bin_x(x, n_x):
    idx = np.floor(wrap(np.asarray(x, dtype=float)) / TWO_PI * n_x).astype(int)
    return np.clip(idx, 0, n_x - 1)


def _accumulate(counts, x, u, x_edges, u_edges, weights):
    n_x = x_edges.size - 1
    xi = _bin_x(x, n_x)
    ui = _bin_u(u, u_edges)
    np.add.at(counts, (xi, ui), weights)


def occupation_histogram(path, *, x_bins: int = DEFAULT_X_BINS,
                         u_bins: int = DEFAULT_U_BINS,
                         u_range=DEFAULT_U_RANGE,
                         like: Optional[EmpiricalHistogram] = None,
                         burn_in: float = 0.0,
                         t_max: float = math.inf) -> EmpiricalHistogram:
    """Time-weighted occupation histogram of a path on (x, u).

    Diffusion trajectories contribute their recorded samples with equal
    weights.  Event logs are unit-speed between events, so each segment
    is split exactly at the x-bin boundaries it sweeps; every slice
    carries its exact duration and is binned in u at the slice midpoint
    (for driven logs, at the segment's recorded drive value).  Only the
    time window [burn_in, t_max] contributes.
    """
    if like is not None:
        x_edges, u_edges = like.x_edges, like.u_edges
    else:
        x_edges, u_edges = _histogram_edges(x_bins, u_bins, u_range)
    counts = np.zeros((x_edges.size - 1, u_edges.size + 1))

    if isinstance(path, EnsembleTrajectories):
        keep = (path.times >= burn_in) & (path.times <= t_max)
        if not np.any(keep):
            raise ValueError("no samples in [burn_in, t_max]")
        for i in range(path.n_replicas):
            _accumulate(counts, path.x[i, keep], path.u[i, keep],
                        x_edges, u_edges, 1.0)
    elif isinstance(path, Trajectory):
        keep = (path.times >= burn_in) & (path.times <= t_max)
        if not np.any(keep):
            raise ValueError("no samples in [burn_in, t_max]")
        _accumulate(counts, path.x[keep], path.u[keep], x_edges, u_edges, 1.0)
    elif isinstance(path, EventLog):
        _accumulate_event_log(counts, path, x_edges, u_edges, burn_in, t_max)
    else:
        raise TypeError("path must be a Trajectory, EnsembleTrajectories, "
                        "or EventLog")
    total = counts.sum()
    if total <= 0.0:
        raise ValueError("path contributed no occupation mass")
    return EmpiricalHistogram(x_edges, u_edges, counts / total, float(total))


def _accumulate_event_log(counts, log, x_edges, u_edges, burn_in, t_max):
    n_x = x_edges.size - 1
    bin_width = TWO_PI / n_x
    potential = log.potential
    driven = log.kind != "self"
    for t0, t1, x0, u0, y in log.segments():
        if t1 <= burn_in or t0 >= t_max:
            continue
        if t0 < burn_in:
            # Advance the segment start to the burn-in boundary.
            shift = burn_in - t0
            if not driven:
                u0 = segment_u(potential, x0, y, shift, u0)
            x0 = float(wrap(x0 + y * shift))
            t0 = burn_in
        length = min(t1, t_max) - t0
        if length <= 0.0:
            continue
        # Exact split of the swept arc at the x-bin boundaries it crosses
        # (unit speed, so arc length equals time).  Classifying each slice
        # by its midpoint keeps the allocation robust at the boundaries.
        lo = min(x0, x0 + y * length)
        hi = max(x0, x0 + y * length)
        k_lo = math.ceil(lo / bin_width)
        k_hi = math.floor(hi / bin_width)
        bounds = np.arange(k_lo, k_hi + 1) * bin_width
        s_cross = y * (bounds - x0)
        s_cross = np.sort(s_cross[(s_cross > 1e-14) & (s_cross < length - 1e-14)])
        cuts = np.concatenate(([0.0], s_cross, [length]))
        durations = np.diff(cuts)
        mids = 0.5 * (cuts[:-1] + cuts[1:])
        xi = _bin_x(x0 + y * mids, n_x)
        if driven:
            u_mid = np.full(mids.size, u0)
        else:
            u_mid = u0 + y * (potential.antiderivative(x0 + y * mids)
                              - potential.antiderivative(x0))
        ui = _bin_u(u_mid, u_edges)
        np.add.at(counts, (xi, ui), durations)


def tv_distance(h1: EmpiricalHistogram, h2: EmpiricalHistogram) -> float:
    """Total-variation distance: half the L1 gap on the shared bins."""
    _check_same_bins(h1, h2)
    return 0.5 * float(np.abs(h1.masses - h2.masses).sum())


@dataclass(frozen=True)
class HittingEntry:
    """One hitting-time observation, possibly right-censored at the cap."""

    value: float
    censored: bool


@dataclass(frozen=True)
class HittingSample:
    """A batch of hitting times with censoring flags."""

    values: np.ndarray
    censored: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        c = np.asarray(self.censored, dtype=bool)
        if v.shape != c.shape or v.ndim != 1:
            raise ValueError("values and censored must be matching 1-d arrays")
        if np.any(v < 0.0):
            raise ValueError("hitting times must be nonnegative")
        v.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "censored", c)

    @classmethod
    def from_entries(cls, entries: Sequence[HittingEntry]) -> "HittingSample":
        return cls(np.array([e.value for e in entries], dtype=float),
                   np.array([e.censored for e in entries], dtype=bool))

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def uncensored_fraction(self) -> float:
        if self.values.size == 0:
            return 1.0
        return 1.0 - float(self.censored.mean())


def _first_entry_time_eventlog(log: EventLog, target: ArcSet):
    for t0, t1, x0, _, y in log.segments():
        s = target.first_entry(x0, y, max_travel=t1 - t0)
        if s is not None:
            return t0 + s
    return None


def hitting_time(simulate: Callable, start, target, cap: float) -> HittingEntry:
    """First time the simulated path enters the target, censored at cap.

    `simulate(start, cap)` must return a Trajectory or an EventLog.  The
    target is an ArcSet (position target; resolved exactly on event-log
    segments, at recording resolution on trajectories) or a predicate
    `target(x, u) -> bool` evaluated on recorded rows.
    """
    if cap <= 0.0:
        raise ValueError("cap must be positive")
    path = simulate(start, cap)
    if isinstance(path, EventLog) and isinstance(target, ArcSet):
        if path.hit_time is not None:
            return HittingEntry(float(path.hit_time), False)
        t = _first_entry_time_eventlog(path, target)
        return HittingEntry(cap, True) if t is None else HittingEntry(float(t), False)
    if isinstance(path, (Trajectory, EventLog)):
        x = path.x
        u = path.u
        if isinstance(target, ArcSet):
            hits = target.indicator(x)
        else:
            hits = np.array([bool(target(float(a), float(b)))
                             for a, b in zip(x, u)])
        idx = np.flatnonzero(hits)
        if idx.size == 0:
            return HittingEntry(cap, True)
        return HittingEntry(float(path.times[idx[0]]), False)
    raise TypeError("simulate must return a Trajectory or EventLog")


def escape_bound(process: str, potential: PeriodicPotential, M: float,
                 eta: float, lam: Optional[float] = None) -> float:
    """Explicit escape-probability bound K(M) e^{-c eta M} per process."""
    if process == "diffusion":
        return 8.0 * math.pi * M * potential.sup_abs_derivative() \
            * math.exp(-2.0 * M * eta)
    if process == "pdmp":
        if lam is None:
            raise ValueError("the pdmp bound needs lam")
        return math.exp(2.0 * lam * math.pi) * math.exp(-eta * M)
    raise ValueError("process must be 'diffusion' or 'pdmp'")


@dataclass(frozen=True)
class EscapeEstimate:
    """Escape-probability estimate against the explicit bound."""

    successes: int
    trials: int
    estimate: float
    interval: Tuple[float, float]
    bound: float
    M: float
    eta: float
    process: str
    n_censored: int = 0

    def __post_init__(self):
        if not 0.0 <= self.estimate <= 1.0:
            raise ValueError("estimate must be a probability")
        lo, hi = self.interval
        if not lo <= self.estimate <= hi:
            raise ValueError("interval must contain the point estimate")


def estimate_escape(potential: PeriodicPotential, geometry: LevelGeometry,
                    M: float, eta: float, reps: int, *,
                    process: str = "diffusion", lam: float = 0.25,
                    dt: float = 5e-4, max_time: float = 500.0,
                    root_seed: int = 0) -> EscapeEstimate:
    """Fraction of frozen-drive (g = M) replicas reaching the escape region
    before the floor, started from the mid-level points.

    Each replica picks one mid-level point uniformly (well and side) and
    runs until it first hits the well minimum or the escape-region
    boundary on its side.  The velocity-jump variant starts with the
    velocity pointing away from the minimum.  Censored replicas count as
    non-escapes and are reported.  Warns when the M * eta > 1 hypothesis
    of the bound fails.
    """
    if reps <= 0:
        raise ValueError("reps must be positive")
    if abs(geometry.eta - eta) > 1e-9:
        raise ValueError("geometry was built for a different eta")
    if M * eta <= 1.0:
        warnings.warn("escape bound hypothesis M * eta > 1 fails",
                      HypothesisWarning)

    # Enumerate (well, side) start configurations in lifted coordinates.
    configs = []
    for well in geometry.wells:
        x_star = well.minimum.x
        b_l, b_r = well.mid_points
        c_l, c_r = well.inner_interval
        configs.append(("left", x_star, b_l, c_l))
        configs.append(("right", x_star, b_r, c_r))
    picker = generator_from_seed(root_seed)
    choice = picker.integers(0, len(configs), size=reps)
    seeds = np.asarray(derive_replica_seeds(root_seed, reps), dtype=np.uint64)

    successes = 0
    censored = 0
    if process == "diffusion":
        for ci, (side, x_star, b, c) in enumerate(configs):
            group = seeds[choice == ci]
            if group.size == 0:
                continue
            if side == "right":
                res = run_exit_trials(potential, M, x_star, b, c,
                                      seeds=group, dt=dt, max_time=max_time)
                successes += res.n_upper
            else:
                res = run_exit_trials(potential, M, c, b, x_star,
                                      seeds=group, dt=dt, max_time=max_time)
                successes += res.n_lower
            censored += res.n_censored
    elif process == "pdmp":
        floor_set = geometry.floor_set()
        escape_set = geometry.escape_region()
        for ci, (side, x_star, b, c) in enumerate(configs):
            group = seeds[choice == ci]
            y0 = 1 if side == "right" else -1
            for s in group:
                log = simulate_pdmp_driven(potential, lam, float(M),
                                           float(wrap(b)), y0, max_time,
                                           seed=int(s),
                                           until=[escape_set, floor_set])
                if log.hit_time is None:
                    censored += 1
                elif log.hit_target == 0:
                    successes += 1
    else:
        raise ValueError("process must be 'diffusion' or 'pdmp'")

    estimate = successes / reps
    interval = wilson_interval(successes, reps)
    bound = escape_bound(process, potential, M, eta,
                         lam if process == "pdmp" else None)
    return EscapeEstimate(successes, reps, estimate, interval, bound,
                          float(M), float(eta), process, censored)


@dataclass(frozen=True)
class MomentEntry:
    """One row of an exponential-moment scan."""

    theta: float
    estimate: float
    std_error: float
    tail_flag: bool


def _tail_heavy(exp_values: np.ndarray) -> bool:
    """True when the top 1% of terms carries over half the estimate."""
    n = exp_values.size
    k = max(1, int(math.ceil(0.01 * n)))
    top = np.sort(exp_values)[-k:]
    total = exp_values.sum()
    return bool(total > 0.0 and top.sum() > 0.5 * total)


def exponential_moment_scan(sample: HittingSample,
                            thetas: Sequence[float]) -> List[MomentEntry]:
    """Monte Carlo E[e^{theta Z}] per theta, with heavy-tail flags.

    Censored values enter as recorded (lower bounds), so a sample with
    more than 1% censoring is reported with a warning.
    """
    if len(sample) == 0:
        raise ValueError("sample is empty")
    if sample.uncensored_fraction < 0.99:
        warnings.warn("more than 1% of the sample is censored; moment "
                      "estimates are biased low", HypothesisWarning)
    out = []
    values = sample.values
    n = values.size
    for theta in thetas:
        ev = np.exp(float(theta) * values)
        est = float(ev.mean())
        se = float(ev.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        out.append(MomentEntry(float(theta), est, se, _tail_heavy(ev)))
    return out


def _ecdf_on_grid(sample: np.ndarray, grid: np.ndarray) -> np.ndarray:
    sorted_s = np.sort(sample)
    return np.searchsorted(sorted_s, grid, side="right") / sorted_s.size


def ecdf_dominance(sample_a, sample_b, tol: float = 0.0) -> str:
    """Stochastic-order verdict from empirical CDFs on the pooled grid.

    A is stochastically smaller than B when its CDF dominates pointwise;
    `tol` is the allowed band (pass a DKW width for a noise-aware check).
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("samples must be nonempty")
    grid = np.union1d(a, b)
    fa = _ecdf_on_grid(a, grid)
    fb = _ecdf_on_grid(b, grid)
    a_smaller = bool(np.all(fa - fb >= -tol))
    b_smaller = bool(np.all(fb - fa >= -tol))
    if a_smaller and b_smaller:
        return DOMINANCE_BOTH
    if a_smaller:
        return DOMINANCE_A
    if b_smaller:
        return DOMINANCE_B
    return DOMINANCE_CROSSING


def detect_convergence(path, landscape: CriticalLandscape, window: float,
                       eps: float) -> Optional[float]:
    """Trap point the path is locked onto over its trailing window, if any.

    Returns x* from the trap set when every recorded state in the last
    `window` of time stays within eps of x* and |u| grows monotonically
    in the direction sign(F(x*)); returns None otherwise (always None
    when the trap set is empty).
    """
    traps = landscape.traps
    if not traps:
        return None
    times = path.times
    span = float(times[-1])
    if window <= 0.0 or window > span + 1e-12:
        raise ValueError("window must be positive and within the path span")
    i0 = int(np.searchsorted(times, span - window, side="left"))
    i0 = min(i0, times.size - 1)
    x_win = np.asarray(path.x[i0:], dtype=float)
    u_win = np.asarray(path.u[i0:], dtype=float)
    for trap in traps:
        x_star = trap.x
        if np.max(circle_dist(x_win, x_star)) >= eps:
            continue
        direction = 1.0 if trap.value > 0.0 else -1.0
        signed = direction * u_win
        if signed.size >= 2 and np.all(np.diff(signed) >= -1e-12) \
                and signed[-1] > signed[0]:
            return float(x_star)
    return None


def eta_schedule(j: int, delta: float) -> float:
    """Shrinking level schedule min(4 ln(1+j)/(1+j), delta)."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if j < 0:
        raise ValueError("j must be nonnegative")
    return min(4.0 * math.log(1.0 + j) / (1.0 + j), delta)


def fit_rate(series, n_grid: Sequence[int], floor: float = 1e-9) -> int:
    """Best exponent n for d(t) ~ (ln t / t)^(1/n) by intercept-only fits.

    For each n the slope is fixed at 1/n and only the intercept is free;
    the n with the smallest mean squared residual of log d against
    (1/n) log(ln t / t) wins.  Distances are clipped at `floor`.
    """
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ValueError("series must be an (m, 2) array of (t, d) pairs")
    t = arr[:, 0]
    d = np.maximum(arr[:, 1], floor)
    if np.any(t <= 1.0):
        raise ValueError("fit needs t > 1 (past burn-in)")
    log_d = np.log(d)
    log_rate = np.log(np.log(t) / t)
    best_n, best_res = None, math.inf
    for n in n_grid:
        if n <= 0:
            raise ValueError("n grid must be positive")
        x = log_rate / float(n)
        resid = log_d - x
        resid = resid - resid.mean()
        mse = float(np.mean(resid ** 2))
        if mse < best_res:
            best_res, best_n = mse, int(n)
    return best_n


@dataclass(frozen=True)
class DriftReport:
    """Exponential-moment drift diagnostics per starting u0."""

    kappa: float
    t: float
    u0_grid: np.ndarray
    estimates: np.ndarray
    std_errors: np.ndarray
    ratios: np.ndarray
    tail_flags: np.ndarray
    c_fit: float
    passes: bool

    def __post_init__(self):
        if np.any(~np.isfinite(self.estimates)) or np.any(self.estimates <= 0):
            raise ValueError("estimates must be positive and finite")


def lyapunov_drift_check(potential: PeriodicPotential, kappa: float, t: float,
                         u0_grid: Sequence[float], reps: int, *,
                         landscape: Optional[CriticalLandscape] = None,
                         x0: float = 0.0, dt: float = 1e-3,
                         record_every: Optional[int] = None,
                         root_seed: int = 0) -> DriftReport:
    """Estimate E[e^{kappa |U_t|}] per u0 and compare to e^{kappa |u0|}.

    The report passes when the ratio at the largest |u0| is at most 3/4.
    Warns when the trap set is nonempty (the drift inequality is a
    no-trap statement).
    """
    if kappa <= 0.0 or t <= 0.0 or reps <= 0:
        raise ValueError("kappa, t, and reps must be positive")
    if landscape is not None and landscape.traps:
        warnings.warn("drift check called with a nonempty trap set",
                      HypothesisWarning)
    u0_grid = np.asarray(u0_grid, dtype=float)
    n_steps = int(round(t / dt))
    stride = n_steps if record_every is None else record_every
    estimates = np.empty(u0_grid.size)
    std_errors = np.empty(u0_grid.size)
    tail_flags = np.zeros(u0_grid.size, dtype=bool)
    for i, u0 in enumerate(u0_grid):
        seeds = derive_replica_seeds(derive_replica_seeds(root_seed, i + 1)[-1],
                                     reps)
        ens = simulate_diffusion_ensemble(potential, x0, float(u0), t, dt=dt,
                                          seeds=seeds, record_every=stride)
        ev = np.exp(kappa * np.abs(ens.u[:, -1]))
        estimates[i] = float(ev.mean())
        std_errors[i] = float(ev.std(ddof=1) / math.sqrt(reps))
        tail_flags[i] = _tail_heavy(ev)
    baseline = np.exp(kappa * np.abs(u0_grid))
    ratios = estimates / baseline
    c_fit = float(np.max(estimates - 0.75 * baseline))
    largest = int(np.argmax(np.abs(u0_grid)))
    passes = bool(ratios[largest] <= 0.75)
    return DriftReport(float(kappa), float(t), u0_grid, estimates, std_errors,
                       ratios, tail_flags, c_fit, passes)


def drift_check_scan(potential: PeriodicPotential, kappa: float,
                     u0_grid: Sequence[float], reps: int,
                     ts: Sequence[float] = (50.0, 100.0, 200.0),
                     **kwargs) -> Tuple[List[DriftReport], bool]:
    """Run the drift check over a grid of times; passes if any t passes."""
    reports = [lyapunov_drift_check(potential, kappa, float(t), u0_grid,
                                    reps, **kwargs) for t in ts]
    return reports, any(r.passes for r in reports)


def doeblin_probe(potential: PeriodicPotential, starts, box, t: float,
                  reps: int, *, process: str = "diffusion", lam: float = 1.0,
                  dt: float = 1e-3, root_seed: int = 0):
    """Minimum over starts of P(Z_t in box), with its Wilson interval.

    `starts` is a sequence of (x, u) pairs (diffusion) or PdmpState
    (velocity-jump); `box` is ((x_lo, x_hi), (u_lo, u_hi)) with the x part
    read as a circular arc.  Returns (min_estimate, interval, per_start).
    """
    (x_lo, x_hi), (u_lo, u_hi) = box
    if u_hi <= u_lo:
        raise ValueError("box must have positive u-height")
    arc = ArcSet.from_endpoints([(float(x_lo), float(x_hi))])
    if arc.total_length() <= 0.0:
        raise ValueError("box must have positive arc width")
    if t <= 0.0 or reps <= 0:
        raise ValueError("t and reps must be positive")
    per_start = []
    for i, start in enumerate(starts):
        seeds = derive_replica_seeds(derive_replica_seeds(root_seed, i + 1)[-1],
                                     reps)
        if process == "diffusion":
            x0, u0 = float(start[0]), float(start[1])
            n_steps = int(round(t / dt))
            ens = simulate_diffusion_ensemble(potential, x0, u0, t, dt=dt,
                                              seeds=seeds,
                                              record_every=n_steps)
            in_box = arc.indicator(ens.x[:, -1]) \
                & (ens.u[:, -1] >= u_lo) & (ens.u[:, -1] <= u_hi)
            hits = int(in_box.sum())
        elif process == "pdmp":
            hits = 0
            for s in seeds:
                log = simulate_pdmp(potential, lam, start, t, seed=int(s))
                term = log.terminal_state
                if arc.contains(term.x) and u_lo <= term.u <= u_hi:
                    hits += 1
        else:
            raise ValueError("process must be 'diffusion' or 'pdmp'")
        per_start.append((hits / reps, wilson_interval(hits, reps)))
    estimates = [p for p, _ in per_start]
    k = int(np.argmin(estimates))
    return estimates[k], per_start[k][1], per_start
