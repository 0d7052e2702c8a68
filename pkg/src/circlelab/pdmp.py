"""Exact event-driven simulation of the velocity-jump process on the circle.

The triple (X, U, Y) moves as dX = Y dt (unit speed, Y in {-1, +1}),
dU = F(X) dt, and Y flips sign at rate lambda + (Y * U * F'(X))_+.
Between jumps the flow is deterministic, so paths are represented exactly
by their event skeleton: X advances at unit speed and U follows the
closed-form segment integral of F.  No time discretization appears
anywhere in this module.

Jumps are sampled from two independent clocks, and the cause of each jump
is recorded:

- a constant-rate clock: theta2 = E / lambda with E standard exponential;
- a landscape clock for the inhomogeneous rate r(s) = (Y u(s) F'(X+Ys))_+,
  sampled by windowed thinning.  Over each lookahead window of width h the
  factor Y*u lies in [Y*u0 - h*L_u, Y*u0 + h*L_u] (L_u bounds the growth
  rate of the interaction: max|F|, or the drive's Lipschitz constant) and
  F' lies in a grid-plus-Lipschitz-slack interval over the swept arc; the
  corner maximum of their product is a certified rate bound r_bar.
  Windows where r_bar = 0 are skipped outright, and windows shrink so
  that r_bar * h stays moderate, which keeps the proposal count bounded
  even when |u| is large.

The RNG draw order is fixed: first the theta2 exponential, then per
thinning proposal one exponential followed by one uniform.  A replica's
event log is therefore bit-reproducible from (seed, parameters, horizon).
The two clocks tie only on a null event; ties resolve to constant-rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .angles import TWO_PI, ArcSet, wrap
from .errors import RunawayError
from .potential import PeriodicPotential
from .seeding import generator_from_seed

__all__ = [
    "CAUSE_INIT",
    "CAUSE_LANDSCAPE",
    "CAUSE_CONSTANT",
    "CAUSE_END",
    "CAUSE_HIT",
    "PdmpState",
    "EventLog",
    "local_rate",
    "segment_u",
    "sample_landscape_time",
    "sample_next_event",
    "simulate_pdmp",
    "simulate_pdmp_driven",
    "jump_time_cdf_oracle",
]

CAUSE_INIT = "init"
CAUSE_LANDSCAPE = "landscape"
CAUSE_CONSTANT = "constant-rate"
CAUSE_END = "horizon-end"
CAUSE_HIT = "hit-target"

# Expected thinning proposals per lookahead window stay near this cap.
_WINDOW_PROPOSAL_CAP = 8.0

DriveFn = Union[float, Callable[[float], float]]


@dataclass(frozen=True)
class PdmpState:
    """Position x, accumulated interaction u, and velocity y in {-1, +1}."""

    x: float
    u: float
    y: int

    def __post_init__(self):
        if self.y not in (-1, 1):
            raise ValueError("velocity y must be -1 or +1")


@dataclass(frozen=True)
class EventLog:
    """Event skeleton of one path: one row per event plus boundary rows.

    Row 0 is the initial state (cause "init"); each jump appends the
    post-flip state at the jump time (cause "landscape" or
    "constant-rate"); the final row closes the path at the horizon
    (cause "horizon-end") or at the first entry into a target set
    (cause "hit-target", with hit_time/hit_target filled).  States
    between rows follow the deterministic flow exactly: x at unit speed
    and u via `segment_u`.  For kind "driven" the u column echoes the
    frozen drive at the row times and `u_at` is unavailable.
    """

    times: np.ndarray
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    causes: tuple
    lam: float
    horizon: float
    seed: int
    potential: PeriodicPotential
    kind: str = "self"
    hit_time: Optional[float] = None
    hit_target: Optional[int] = None

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def n_jumps(self) -> int:
        return sum(1 for c in self.causes if c in (CAUSE_LANDSCAPE, CAUSE_CONSTANT))

    @property
    def terminal_state(self) -> PdmpState:
        return PdmpState(float(self.x[-1]), float(self.u[-1]), int(self.y[-1]))

    def segments(self):
        """Yield (t0, t1, x0, u0, y) for each inter-row flow segment."""
        for i in range(len(self) - 1):
            yield (
                float(self.times[i]),
                float(self.times[i + 1]),
                float(self.x[i]),
                float(self.u[i]),
                int(self.y[i]),
            )

    def _row_before(self, t: float) -> int:
        if t < 0.0 or t > float(self.times[-1]) + 1e-12:
            raise ValueError(f"time {t} outside the simulated span")
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(max(i, 0), len(self) - 1)

    def x_at(self, t: float) -> float:
        i = self._row_before(t)
        return float(wrap(self.x[i] + int(self.y[i]) * (t - float(self.times[i]))))

    def u_at(self, t: float) -> float:
        if self.kind != "self":
            raise ValueError("u_at is undefined for driven logs; evaluate the drive")
        i = self._row_before(t)
        return segment_u(self.potential, float(self.x[i]), int(self.y[i]),
                         t - float(self.times[i]), float(self.u[i]))

    def state_at(self, t: float) -> PdmpState:
        return PdmpState(self.x_at(t), self.u_at(t), int(self.y[self._row_before(t)]))


def local_rate(potential: PeriodicPotential, lam: float, state: PdmpState) -> float:
    """Total jump intensity lambda + (y * u * F'(x))_+ at one state."""
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    r = state.y * state.u * potential.derivative_s(state.x)
    return lam + (r if r > 0.0 else 0.0)


def segment_u(potential: PeriodicPotential, x0: float, y: int, s: float,
              u0: float) -> float:
    """u after following the flow for time s from (x0, u0) at velocity y.

    Uses the closed-form antiderivative of F along the lifted line
    x0 + y*s', so the result is exact up to float rounding.
    """
    if y not in (-1, 1):
        raise ValueError("velocity y must be -1 or +1")
    return u0 + y * (potential.antiderivative_s(x0 + y * s)
                     - potential.antiderivative_s(x0))


def _arc_derivative_range(potential: PeriodicPotential, x_from: float,
                          y: int, h: float, lipschitz_fp: float):
    """Certified (min, max) of F' on the arc swept from x_from over h."""
    d0 = potential.derivative_s(x_from)
    d1 = potential.derivative_s(x_from + y * (0.5 * h))
    d2 = potential.derivative_s(x_from + y * h)
    slack = lipschitz_fp * (0.25 * h)
    return min(d0, d1, d2) - slack, max(d0, d1, d2) + slack


def _sample_landscape_time(potential, x0, y, gen, cutoff, value_at, lipschitz_u):
    """First arrival of the thinned landscape clock, or None past cutoff.

    value_at(s) is the interaction value after flow time s (closed-form u
    for the homogeneous process, the drive for the frozen variant);
    lipschitz_u bounds |d value_at / ds|.  The window bound is the corner
    maximum of (y * u) * F' over the certified product of intervals, so
    stretches where the rate is provably zero are skipped without any
    proposals.
    """
    if cutoff <= 0.0:
        return None
    deriv = potential.derivative_s
    lip_fp = potential.coefficient_bound_derivative(2)
    h_base = min(math.pi, 0.5 / potential.coefficient_bound_derivative(1))
    s = 0.0
    while s < cutoff:
        h = h_base
        d_lo, d_hi = _arc_derivative_range(potential, x0 + y * s, y, h, lip_fp)
        w0 = y * value_at(s)
        w_lo = w0 - h * lipschitz_u
        w_hi = w0 + h * lipschitz_u
        r_bar = max(0.0, w_lo * d_lo, w_lo * d_hi, w_hi * d_lo, w_hi * d_hi)
        if r_bar <= 0.0:
            s = min(s + h, cutoff)
            continue
        if r_bar * h > _WINDOW_PROPOSAL_CAP:
            # A shorter window keeps expected proposals bounded; r_bar
            # still dominates the rate on the sub-window.
            h = _WINDOW_PROPOSAL_CAP / r_bar
        hi = min(s + h, cutoff)
        pos = s
        while True:
            pos += gen.standard_exponential() / r_bar
            if pos >= hi:
                break
            r = y * value_at(pos) * deriv(x0 + y * pos)
            if r > 0.0 and gen.random() * r_bar <= r:
                return pos
        s = hi
    return None


def _homogeneous_value_at(potential, x0, y, u0):
    g0 = potential.antiderivative_s(x0)
    anti = potential.antiderivative_s

    def value_at(s):
        return u0 + y * (anti(x0 + y * s) - g0)

    return value_at


def sample_landscape_time(potential: PeriodicPotential, x0: float, y: int,
                          gen: np.random.Generator, cutoff: float, *,
                          u0: Optional[float] = None,
                          g: Optional[DriveFn] = None,
                          g_lipschitz: float = 0.0):
    """Sample the landscape clock alone; returns a time < cutoff or None.

    Exactly one of u0 (homogeneous interaction, evolving by the flow) or
    g (frozen drive: constant, or callable of flow time with Lipschitz
    constant g_lipschitz) must be given.
    """
    if (u0 is None) == (g is None):
        raise ValueError("provide exactly one of u0 or g")
    if y not in (-1, 1):
        raise ValueError("velocity y must be -1 or +1")
    if u0 is not None:
        value_at = _homogeneous_value_at(potential, x0, y, u0)
        lip = abs(potential.a0) + potential.coefficient_bound_derivative(0)
    elif callable(g):
        value_at = g
        lip = float(g_lipschitz)
    else:
        gv = float(g)
        value_at = lambda s: gv
        lip = 0.0
    return _sample_landscape_time(potential, x0, y, gen, cutoff, value_at, lip)


def sample_next_event(potential: PeriodicPotential, lam: float,
                      state: PdmpState, gen: np.random.Generator,
                      s_max: float = math.inf):
    """Time to the next jump from `state` and its cause.

    Draws theta2 = E/lambda from the constant-rate clock first, then runs
    the landscape clock by thinning up to min(theta2, s_max).  Returns
    (theta, cause) with cause "landscape" or "constant-rate", or None if
    no jump occurs within s_max.  Ties resolve to constant-rate.
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    theta2 = gen.standard_exponential() / lam
    cutoff = min(theta2, s_max)
    value_at = _homogeneous_value_at(potential, state.x, state.y, state.u)
    lip = abs(potential.a0) + potential.coefficient_bound_derivative(0)
    theta1 = _sample_landscape_time(potential, state.x, state.y, gen, cutoff,
                                    value_at, lip)
    if theta1 is not None and theta1 < theta2:
        return theta1, CAUSE_LANDSCAPE
    if theta2 < s_max:
        return theta2, CAUSE_CONSTANT
    return None


def _first_target_entry(targets, x, y, max_travel):
    """Earliest unit-speed entry (travel, target index) within max_travel."""
    best = None
    for idx, target in enumerate(targets):
        s = target.first_entry(x, y, max_travel)
        if s is not None and (best is None or s < best[0]):
            best = (s, idx)
    return best


def _simulate_core(potential, lam, x0, y0, horizon, gen, max_events, until,
                   value_for_segment, lipschitz_u, u_row_at, seed, kind):
    """Shared event loop; parameterized over the interaction source.

    value_for_segment(t_seg, x, y, u) -> value_at(s) for the segment that
    starts at absolute time t_seg; u_row_at(t, x, y, u_prev, s) -> the u
    column entry for a row at absolute time t after flow time s.
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    x = float(wrap(x0))
    y = int(y0)
    if y not in (-1, 1):
        raise ValueError("velocity y must be -1 or +1")
    u = u_row_at(0.0, x, y, None, 0.0)
    times = [0.0]
    xs = [x]
    us = [u]
    ys = [y]
    causes = [CAUSE_INIT]
    hit_time = None
    hit_target = None
    t = 0.0
    n_events = 0
    while True:
        s_rem = horizon - t
        value_at = value_for_segment(t, x, y, us[-1])
        theta2 = gen.standard_exponential() / lam
        cutoff = min(theta2, s_rem)
        theta1 = _sample_landscape_time(potential, x, y, gen, cutoff,
                                        value_at, lipschitz_u)
        if theta1 is not None and theta1 < theta2:
            evt = (theta1, CAUSE_LANDSCAPE)
        elif theta2 < s_rem:
            evt = (theta2, CAUSE_CONSTANT)
        else:
            evt = None
        duration = evt[0] if evt is not None else s_rem
        if until is not None:
            hit = _first_target_entry(until, x, y, duration)
            if hit is not None:
                s_hit, hit_target = hit
                hit_time = t + s_hit
                times.append(hit_time)
                xs.append(float(wrap(x + y * s_hit)))
                us.append(u_row_at(hit_time, x, y, us[-1], s_hit))
                ys.append(y)
                causes.append(CAUSE_HIT)
                break
        if evt is None:
            times.append(horizon)
            xs.append(float(wrap(x + y * s_rem)))
            us.append(u_row_at(horizon, x, y, us[-1], s_rem))
            ys.append(y)
            causes.append(CAUSE_END)
            break
        theta, cause = evt
        t += theta
        x_new = float(wrap(x + y * theta))
        u_new = u_row_at(t, x, y, us[-1], theta)
        y = -y
        x = x_new
        times.append(t)
        xs.append(x)
        us.append(u_new)
        ys.append(y)
        causes.append(cause)
        n_events += 1
        if n_events > max_events:
            raise RunawayError(
                f"event count exceeded the cap of {max_events} before the horizon")
    times_a = np.asarray(times)
    x_a = np.asarray(xs)
    u_a = np.asarray(us)
    y_a = np.asarray(ys, dtype=np.int8)
    for arr in (times_a, x_a, u_a, y_a):
        arr.flags.writeable = False
    return EventLog(
        times=times_a, x=x_a, u=u_a, y=y_a, causes=tuple(causes),
        lam=float(lam), horizon=float(horizon), seed=int(seed),
        potential=potential, kind=kind, hit_time=hit_time,
        hit_target=hit_target)


def simulate_pdmp(potential: PeriodicPotential, lam: float, z0: PdmpState,
                  horizon: float, *, seed: int = 0,
                  max_events: int = 10 ** 8,
                  until: Optional[Sequence[ArcSet]] = None) -> EventLog:
    """Simulate the self-interacting velocity-jump process exactly.

    If `until` is given (a sequence of target sets), the run stops at the
    first entry of X into any target, recorded exactly from the unit-speed
    segments; hit_time/hit_target report the entry.  Raises RunawayError
    past max_events.
    """
    gen = generator_from_seed(seed)
    lip = abs(potential.a0) + potential.coefficient_bound_derivative(0)

    def value_for_segment(t_seg, x, y, u):
        return _homogeneous_value_at(potential, x, y, u)

    def u_row_at(t, x, y, u_prev, s):
        if u_prev is None:
            return float(z0.u)
        return segment_u(potential, x, y, s, u_prev)

    return _simulate_core(potential, lam, z0.x, z0.y, horizon, gen,
                          max_events, until, value_for_segment, lip,
                          u_row_at, seed, "self")


def simulate_pdmp_driven(potential: PeriodicPotential, lam: float, g: DriveFn,
                         x0: float, y0: int, horizon: float, *, seed: int = 0,
                         g_lipschitz: Optional[float] = None,
                         max_events: int = 10 ** 8,
                         until: Optional[Sequence[ArcSet]] = None) -> EventLog:
    """Simulate the frozen-drive variant: the rate uses g(t) in place of U.

    g is a constant or a callable of absolute time; a callable requires
    its Lipschitz constant g_lipschitz to certify the thinning bounds.
    The u column of the log echoes the drive at the row times.
    """
    gen = generator_from_seed(seed)
    if callable(g):
        if g_lipschitz is None:
            raise ValueError("a callable drive requires g_lipschitz")
        lip = float(g_lipschitz)

        def value_for_segment(t_seg, x, y, u):
            return lambda s: float(g(t_seg + s))

        def u_row_at(t, x, y, u_prev, s):
            return float(g(t))
    else:
        gv = float(g)
        lip = 0.0

        def value_for_segment(t_seg, x, y, u):
            return lambda s: gv

        def u_row_at(t, x, y, u_prev, s):
            return gv

    return _simulate_core(potential, lam, x0, y0, horizon, gen, max_events,
                          until, value_for_segment, lip, u_row_at, seed,
                          "driven")


def jump_time_cdf_oracle(potential: PeriodicPotential, lam: float, x0: float,
                         y: int, u0: Optional[float], grid, *,
                         g: Optional[DriveFn] = None,
                         subintervals: int = 10_000) -> np.ndarray:
    """Brute-force CDF of the first jump time on the given time grid.

    Integrates the total rate lambda + (y * u(s) * F'(x0 + y s))_+ by
    composite Simpson quadrature with `subintervals` subintervals per grid
    cell and returns 1 - exp(-Lambda) at the grid points.  u(s) is the
    closed-form interaction from u0, or the frozen drive g if given.
    lam = 0 is allowed here (pure landscape clock), unlike the samplers.
    """
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    if y not in (-1, 1):
        raise ValueError("velocity y must be -1 or +1")
    if (u0 is None) == (g is None):
        raise ValueError("provide exactly one of u0 or g")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-d array")
    if grid[0] < 0.0 or np.any(np.diff(grid) <= 0.0):
        raise ValueError("grid must be strictly increasing and nonnegative")
    if subintervals < 2 or subintervals % 2:
        raise ValueError("subintervals must be even and at least 2")

    if g is None:
        g0 = potential.antiderivative_s(x0)

        def interaction(s):
            return u0 + y * (potential.antiderivative(x0 + y * s) - g0)

    elif callable(g):
        def interaction(s):
            return np.asarray([float(g(v)) for v in np.atleast_1d(s)])

    else:
        gv = float(g)

        def interaction(s):
            return np.full(np.shape(s), gv)

    def total_rate(s):
        r = y * np.asarray(interaction(s)) * potential.derivative(x0 + y * s)
        return lam + np.maximum(r, 0.0)

    edges = np.concatenate([[0.0], grid]) if grid[0] > 0.0 else grid
    lam_cum = np.zeros(edges.size)
    for i in range(edges.size - 1):
        a, b = edges[i], edges[i + 1]
        pts = np.linspace(a, b, subintervals + 1)
        vals = total_rate(pts)
        h = (b - a) / subintervals
        integral = (h / 3.0) * (vals[0] + vals[-1]
                                + 4.0 * vals[1:-1:2].sum()
                                + 2.0 * vals[2:-1:2].sum())
        lam_cum[i + 1] = lam_cum[i] + integral
    if grid[0] > 0.0:
        lam_cum = lam_cum[1:]
    return 1.0 - np.exp(-lam_cum)
