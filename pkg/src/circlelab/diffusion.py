"""Euler-Maruyama simulators for the self-interacting diffusion on the circle.

The Markov pair (X, U) follows

    dX_t = dB_t - U_t F'(X_t) dt,        dU_t = F(X_t) dt,

for a trigonometric potential F.  U is the running integral of F along the
path; the drift -U F' pushes X toward minima of F while U > 0 and toward
maxima while U < 0.  The frozen-drive variant replaces U_t by a
deterministic drive g(t), making X alone a time-inhomogeneous diffusion;
it powers the escape-probability experiments whose analytic counterpart
is the scale-function oracle `analytic_escape_probability`.

Conventions shared by every simulator in this module:

- Euler-Maruyama with a left-endpoint update for U.  One step reads
  x' = wrap(x + sqrt(dt) * g - (u * F'(x)) * dt), u' = u + F(x) * dt,
  with F and F' evaluated at the pre-step position.
- One PCG64 stream per replica, derived from that replica's seed and
  consumed only by that replica.  A replica's noise sequence is therefore
  a pure function of its seed, independent of batch grouping.
- Recording keeps step 0, every `record_every`-th step, and the final
  step.  With the default dt = 1e-3 and record_every = 100 a horizon of
  2000 yields 20001 samples per replica.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.integrate import quad

from .angles import TWO_PI, wrap
from .errors import MonotonicityError
from .potential import PeriodicPotential
from .seeding import generators_from_seeds

__all__ = [
    "DiffusionState",
    "Trajectory",
    "EnsembleTrajectories",
    "ExitEnsemble",
    "em_step",
    "simulate_diffusion",
    "simulate_diffusion_ensemble",
    "simulate_diffusion_driven",
    "simulate_driven_ensemble",
    "simulate_terminal_u_coupled",
    "run_exit_trials",
    "analytic_escape_probability",
]

# Ensembles at most this large run the per-replica scalar loop, which is
# much faster than numpy vector ops on tiny arrays.  The noise streams are
# identical either way; only last-bit trig rounding may differ.
_SCALAR_PATH_MAX = 4
_MONOTONE_GRID = 512

Drive = Union[float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class DiffusionState:
    """Position x on the circle and the accumulated interaction u."""

    x: float
    u: float


@dataclass(frozen=True)
class Trajectory:
    """Samples of one path at a uniform stride of ``record_every`` steps.

    For kind "self" the u column is the simulated interaction variable; for
    kind "driven" it echoes the frozen drive g evaluated at the sample
    times.  The x column lies in [0, 2*pi) except that the right endpoint
    can appear as a one-ulp rounding artifact of the modulo; consumers
    that bin angles clip for that case.
    """

    times: np.ndarray
    x: np.ndarray
    u: np.ndarray
    dt: float
    record_every: int
    seed: int
    potential_id: str
    kind: str = "self"

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def initial_state(self) -> DiffusionState:
        return DiffusionState(float(self.x[0]), float(self.u[0]))

    @property
    def terminal_state(self) -> DiffusionState:
        return DiffusionState(float(self.x[-1]), float(self.u[-1]))


@dataclass(frozen=True)
class EnsembleTrajectories:
    """Recorded paths of a replica ensemble; row i belongs to seeds[i]."""

    times: np.ndarray
    x: np.ndarray
    u: np.ndarray
    dt: float
    record_every: int
    seeds: tuple
    potential_id: str
    kind: str = "self"

    @property
    def n_replicas(self) -> int:
        return int(self.x.shape[0])

    def replica(self, i: int) -> Trajectory:
        return Trajectory(
            times=self.times,
            x=self.x[i],
            u=self.u[i],
            dt=self.dt,
            record_every=self.record_every,
            seed=self.seeds[i],
            potential_id=self.potential_id,
            kind=self.kind,
        )

    def index_of_time(self, t: float) -> int:
        """Index of the recorded sample at time t; t must lie on the grid."""
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(float(self.times[i]) - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not on the recording grid")
        return i

    def x_at_time(self, t: float) -> np.ndarray:
        return self.x[:, self.index_of_time(t)]

    def u_at_time(self, t: float) -> np.ndarray:
        return self.u[:, self.index_of_time(t)]


@dataclass(frozen=True)
class ExitEnsemble:
    """First-passage outcomes between two absorbing boundaries.

    exit_side holds +1 for trials absorbed at the upper boundary, -1 for
    the lower boundary, and 0 for trials censored at max_time.
    """

    exit_time: np.ndarray
    exit_side: np.ndarray
    low: float
    high: float
    x_start: float
    drive: float
    dt: float
    max_time: float
    seeds: tuple

    @property
    def n_trials(self) -> int:
        return int(self.exit_side.size)

    @property
    def n_lower(self) -> int:
        return int(np.count_nonzero(self.exit_side == -1))

    @property
    def n_upper(self) -> int:
        return int(np.count_nonzero(self.exit_side == 1))

    @property
    def n_censored(self) -> int:
        return int(np.count_nonzero(self.exit_side == 0))

    @property
    def fraction_upper(self) -> float:
        return self.n_upper / self.n_trials


def em_step(potential: PeriodicPotential, state: DiffusionState, dt: float,
            gaussian: float) -> DiffusionState:
    """One Euler-Maruyama step from ``state`` with a supplied normal draw."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    fp = potential.derivative_s(state.x)
    fv = potential.value_s(state.x)
    x_new = (state.x + (math.sqrt(dt) * gaussian - (state.u * fp) * dt)) % TWO_PI
    if x_new == TWO_PI:
        x_new = 0.0
    return DiffusionState(x_new, state.u + fv * dt)


# ---------------------------------------------------------------------------
# engine internals


class _HarmonicWorkspace:
    """Preallocated buffers for batched evaluation of F and F'."""

    def __init__(self, potential: PeriodicPotential, n: int):
        self.a0 = float(potential.a0)
        self.terms = [(float(k), float(a), float(b)) for k, a, b in potential.harmonics]
        self.ph = np.empty(n)
        self.c = np.empty(n)
        self.s = np.empty(n)
        self.t = np.empty(n)

    def eval(self, x: np.ndarray, fv: np.ndarray, fp: np.ndarray) -> None:
        """Fill fv with F(x) and fp with F'(x)."""
        fv.fill(self.a0)
        fp.fill(0.0)
        for k, a, b in self.terms:
            np.multiply(x, k, out=self.ph)
            np.cos(self.ph, out=self.c)
            np.sin(self.ph, out=self.s)
            if a != 0.0:
                np.multiply(self.c, a, out=self.t)
                fv += self.t
                np.multiply(self.s, k * a, out=self.t)
                fp -= self.t
            if b != 0.0:
                np.multiply(self.s, b, out=self.t)
                fv += self.t
                np.multiply(self.c, k * b, out=self.t)
                fp += self.t

    def eval_derivative(self, x: np.ndarray, fp: np.ndarray) -> None:
        fp.fill(0.0)
        for k, a, b in self.terms:
            np.multiply(x, k, out=self.ph)
            if a != 0.0:
                np.sin(self.ph, out=self.s)
                np.multiply(self.s, k * a, out=self.t)
                fp -= self.t
            if b != 0.0:
                np.cos(self.ph, out=self.c)
                np.multiply(self.c, k * b, out=self.t)
                fp += self.t


def _scalar_terms(potential: PeriodicPotential):
    return float(potential.a0), [(float(k), float(a), float(b))
                                 for k, a, b in potential.harmonics]


def _record_steps(n_steps: int, record_every: int) -> np.ndarray:
    steps = np.arange(0, n_steps + 1, record_every, dtype=np.int64)
    if steps[-1] != n_steps:
        steps = np.append(steps, np.int64(n_steps))
    return steps


def _noise_block_len(n_replicas: int, multiple_of: int = 1) -> int:
    blen = max(256, min(4096, (1 << 23) // max(n_replicas, 1)))
    blen -= blen % multiple_of
    return max(blen, multiple_of)


def _as_replica_array(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} must be a scalar or a length-{n} sequence")
    return arr.copy()


def _validate_grid(horizon: float, dt: float, record_every: int) -> int:
    if not (dt > 0.0):
        raise ValueError("dt must be positive")
    if not (horizon > 0.0):
        raise ValueError("horizon must be positive")
    if dt > horizon:
        raise ValueError("dt must not exceed the horizon")
    if record_every < 1 or int(record_every) != record_every:
        raise ValueError("record_every must be a positive integer")
    n_steps = int(round(horizon / dt))
    if n_steps < 1:
        raise ValueError("horizon shorter than one step")
    return n_steps


def _drive_at(g: Drive, times: np.ndarray) -> np.ndarray:
    """Drive values at the given times; g may be vectorized or scalar-only."""
    if callable(g):
        try:
            vals = np.asarray(g(times), dtype=float)
            if vals.shape != times.shape:
                raise TypeError
        except (TypeError, ValueError):
            vals = np.array([float(g(t)) for t in times])
        return vals
    return np.full(times.size, float(g))


def _drive_values(g: Drive, step0: int, m: int, dt: float) -> np.ndarray:
    """Drive values at the left endpoints of steps step0..step0+m-1."""
    return _drive_at(g, np.arange(step0, step0 + m, dtype=float) * dt)


def _scalar_self(potential, x0, u0, n_steps, dt, gen, record_every, out_x, out_u):
    a0, terms = _scalar_terms(potential)
    sqrt_dt = math.sqrt(dt)
    cos = math.cos
    sin = math.sin
    x = float(x0) % TWO_PI
    if x == TWO_PI:
        x = 0.0
    u = float(u0)
    out_x[0] = x
    out_u[0] = u
    rec = 1
    step = 0
    while step < n_steps:
        m = min(4096, n_steps - step)
        noise = gen.standard_normal(m).tolist()
        for g in noise:
            fv = a0
            fp = 0.0
            for k, a, b in terms:
                ph = k * x
                c = cos(ph)
                s = sin(ph)
                fv += a * c + b * s
                fp += k * (b * c - a * s)
            x = (x + (sqrt_dt * g - (u * fp) * dt)) % TWO_PI
            u = u + fv * dt
            step += 1
            if step % record_every == 0 or step == n_steps:
                out_x[rec] = x
                out_u[rec] = u
                rec += 1


def _scalar_driven(potential, g, x0, n_steps, dt, gen, record_every, out_x):
    a0, terms = _scalar_terms(potential)
    sqrt_dt = math.sqrt(dt)
    cos = math.cos
    sin = math.sin
    x = float(x0) % TWO_PI
    if x == TWO_PI:
        x = 0.0
    out_x[0] = x
    rec = 1
    step = 0
    while step < n_steps:
        m = min(4096, n_steps - step)
        noise = gen.standard_normal(m).tolist()
        drive = _drive_values(g, step, m, dt).tolist()
        for w, gv in zip(noise, drive):
            fp = 0.0
            for k, a, b in terms:
                ph = k * x
                fp += k * (b * cos(ph) - a * sin(ph))
            x = (x + (sqrt_dt * w - (gv * fp) * dt)) % TWO_PI
            step += 1
            if step % record_every == 0 or step == n_steps:
                out_x[rec] = x
                rec += 1


def _fill_noise(block: np.ndarray, gens, m: int) -> None:
    if m == block.shape[1]:
        for j, gen in enumerate(gens):
            gen.standard_normal(out=block[j])
    else:
        for j, gen in enumerate(gens):
            block[j, :m] = gen.standard_normal(m)


def _vector_self(potential, x, u, n_steps, dt, gens, record_every, out_x, out_u):
    n = x.size
    ws = _HarmonicWorkspace(potential, n)
    fv = np.empty(n)
    fp = np.empty(n)
    tmp = np.empty(n)
    sqrt_dt = math.sqrt(dt)
    blen = _noise_block_len(n)
    block = np.empty((n, blen))
    out_x[:, 0] = x
    out_u[:, 0] = u
    rec = 1
    step = 0
    while step < n_steps:
        m = min(blen, n_steps - step)
        _fill_noise(block, gens, m)
        for i in range(m):
            ws.eval(x, fv, fp)
            fp *= u
            fp *= dt
            np.multiply(block[:, i], sqrt_dt, out=tmp)
            tmp -= fp
            x += tmp
            np.remainder(x, TWO_PI, out=x)
            fv *= dt
            u += fv
            step += 1
            if step % record_every == 0 or step == n_steps:
                out_x[:, rec] = x
                out_u[:, rec] = u
                rec += 1


def _vector_driven(potential, g, x, n_steps, dt, gens, record_every, out_x):
    n = x.size
    ws = _HarmonicWorkspace(potential, n)
    fp = np.empty(n)
    tmp = np.empty(n)
    sqrt_dt = math.sqrt(dt)
    blen = _noise_block_len(n)
    block = np.empty((n, blen))
    out_x[:, 0] = x
    rec = 1
    step = 0
    while step < n_steps:
        m = min(blen, n_steps - step)
        _fill_noise(block, gens, m)
        drive = _drive_values(g, step, m, dt)
        for i in range(m):
            ws.eval_derivative(x, fp)
            fp *= drive[i]
            fp *= dt
            np.multiply(block[:, i], sqrt_dt, out=tmp)
            tmp -= fp
            x += tmp
            np.remainder(x, TWO_PI, out=x)
            step += 1
            if step % record_every == 0 or step == n_steps:
                out_x[:, rec] = x
                rec += 1


def _freeze(*arrays):
    for a in arrays:
        a.flags.writeable = False


# ---------------------------------------------------------------------------
# public simulators


def simulate_diffusion_ensemble(potential: PeriodicPotential, x0, u0,
                                horizon: float, *, dt: float = 1e-3,
                                seeds: Sequence[int] = (0,),
                                record_every: int = 100,
                                engine: str = "auto") -> EnsembleTrajectories:
    """Simulate independent replicas of the self-interacting pair (X, U).

    x0 and u0 broadcast over replicas (scalar or length-len(seeds)).
    engine="auto" runs a per-replica scalar loop for up to 4 replicas and
    a replica-vectorized loop otherwise; both consume identical noise
    streams and agree up to last-bit trig rounding.  A given call is
    bit-reproducible for fixed (seeds, parameters, engine).
    """
    if engine not in ("auto", "scalar", "vector"):
        raise ValueError("engine must be 'auto', 'scalar', or 'vector'")
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValueError("seeds must be nonempty")
    n = len(seeds)
    n_steps = _validate_grid(horizon, dt, record_every)
    rec_steps = _record_steps(n_steps, record_every)
    times = rec_steps.astype(float) * dt
    x = _as_replica_array(x0, n, "x0")
    np.remainder(x, TWO_PI, out=x)
    u = _as_replica_array(u0, n, "u0")
    out_x = np.empty((n, rec_steps.size))
    out_u = np.empty((n, rec_steps.size))
    gens = generators_from_seeds(seeds)
    scalar = engine == "scalar" or (engine == "auto" and n <= _SCALAR_PATH_MAX)
    if scalar:
        for j in range(n):
            _scalar_self(potential, x[j], u[j], n_steps, dt, gens[j],
                         record_every, out_x[j], out_u[j])
    else:
        _vector_self(potential, x, u, n_steps, dt, gens, record_every,
                     out_x, out_u)
    _freeze(times, out_x, out_u)
    return EnsembleTrajectories(times=times, x=out_x, u=out_u, dt=dt,
                                record_every=record_every, seeds=seeds,
                                potential_id=potential.potential_id,
                                kind="self")


def simulate_diffusion(potential: PeriodicPotential, z0: DiffusionState,
                       horizon: float, *, dt: float = 1e-3, seed: int = 0,
                       record_every: int = 100) -> Trajectory:
    """Simulate one replica; equivalent to a one-seed ensemble."""
    ens = simulate_diffusion_ensemble(potential, z0.x, z0.u, horizon, dt=dt,
                                      seeds=(seed,), record_every=record_every)
    return ens.replica(0)


def simulate_driven_ensemble(potential: PeriodicPotential, g: Drive, x0,
                             horizon: float, *, dt: float = 1e-3,
                             seeds: Sequence[int] = (0,),
                             record_every: int = 100,
                             engine: str = "auto") -> EnsembleTrajectories:
    """Simulate replicas of the frozen-drive diffusion dX = dB - g(t) F'(X) dt.

    g is a constant or a deterministic function of time (vectorized over a
    numpy array of times, or scalar-callable).  The recorded u column
    echoes g at the sample times, identically across replicas.
    """
    if engine not in ("auto", "scalar", "vector"):
        raise ValueError("engine must be 'auto', 'scalar', or 'vector'")
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValueError("seeds must be nonempty")
    n = len(seeds)
    n_steps = _validate_grid(horizon, dt, record_every)
    rec_steps = _record_steps(n_steps, record_every)
    times = rec_steps.astype(float) * dt
    x = _as_replica_array(x0, n, "x0")
    np.remainder(x, TWO_PI, out=x)
    out_x = np.empty((n, rec_steps.size))
    gens = generators_from_seeds(seeds)
    scalar = engine == "scalar" or (engine == "auto" and n <= _SCALAR_PATH_MAX)
    if scalar:
        for j in range(n):
            _scalar_driven(potential, g, x[j], n_steps, dt, gens[j],
                           record_every, out_x[j])
    else:
        _vector_driven(potential, g, x, n_steps, dt, gens, record_every, out_x)
    out_u = np.tile(_drive_at(g, times), (n, 1))
    _freeze(times, out_x, out_u)
    return EnsembleTrajectories(times=times, x=out_x, u=out_u, dt=dt,
                                record_every=record_every, seeds=seeds,
                                potential_id=potential.potential_id,
                                kind="driven")


def simulate_diffusion_driven(potential: PeriodicPotential, g: Drive,
                              x0: float, horizon: float, *, dt: float = 1e-3,
                              seed: int = 0,
                              record_every: int = 100) -> Trajectory:
    """One frozen-drive replica; the u column echoes the drive."""
    ens = simulate_driven_ensemble(potential, g, x0, horizon, dt=dt,
                                   seeds=(seed,), record_every=record_every)
    return ens.replica(0)


def simulate_terminal_u_coupled(potential: PeriodicPotential, x0, u0,
                                horizon: float, dt_levels: Sequence[float],
                                *, seeds: Sequence[int]) -> dict:
    """Terminal U per step size, driving all levels with one Brownian path.

    Each coarser level must use an integer multiple of the finest dt; its
    Gaussian increments are the block sums of the fine increments (scaled
    by 1/sqrt(factor)), so all levels discretize the same Brownian motion.
    The common path makes the level-to-level differences of E[U_horizon]
    nearly noise-free, which is what a step-size refinement ratio needs.
    Returns {dt: array of terminal u over replicas}.
    """
    seeds = tuple(int(s) for s in seeds)
    n = len(seeds)
    if n == 0:
        raise ValueError("seeds must be nonempty")
    dt_levels = [float(d) for d in dt_levels]
    dt_f = min(dt_levels)
    factors = []
    for d in dt_levels:
        f = int(round(d / dt_f))
        if abs(f * dt_f - d) > 1e-12 * d:
            raise ValueError("each dt level must be an integer multiple of the finest")
        factors.append(f)
    n_steps_f = _validate_grid(horizon, dt_f, 1)
    lcm = math.lcm(*factors)
    if n_steps_f % lcm:
        raise ValueError("horizon must contain a whole number of steps of every level")
    xs = [_as_replica_array(x0, n, "x0") for _ in dt_levels]
    for xl in xs:
        np.remainder(xl, TWO_PI, out=xl)
    us = [_as_replica_array(u0, n, "u0") for _ in dt_levels]
    gens = generators_from_seeds(seeds)
    ws = _HarmonicWorkspace(potential, n)
    fv = np.empty(n)
    fp = np.empty(n)
    tmp = np.empty(n)
    blen = _noise_block_len(n, multiple_of=lcm)
    block = np.empty((n, blen))
    step = 0
    while step < n_steps_f:
        m = min(blen, n_steps_f - step)
        _fill_noise(block, gens, m)
        for lvl, f in enumerate(factors):
            dt = dt_levels[lvl]
            sqrt_dt = math.sqrt(dt)
            if f == 1:
                coarse = block[:, :m]
            else:
                coarse = block[:, :m].reshape(n, m // f, f).sum(axis=2)
                coarse *= 1.0 / math.sqrt(f)
            x = xs[lvl]
            u = us[lvl]
            for i in range(m // f):
                ws.eval(x, fv, fp)
                fp *= u
                fp *= dt
                np.multiply(coarse[:, i], sqrt_dt, out=tmp)
                tmp -= fp
                x += tmp
                np.remainder(x, TWO_PI, out=x)
                fv *= dt
                u += fv
        step += m
    return {dt_levels[lvl]: us[lvl] for lvl in range(len(dt_levels))}


def run_exit_trials(potential: PeriodicPotential, drive: float, low: float,
                    x_start: float, high: float, *, seeds: Sequence[int],
                    dt: float = 1e-3, max_time: float) -> ExitEnsemble:
    """First-passage trials of the frozen-drive diffusion between two points.

    Replicas start at x_start on the positively oriented arc from low to
    high and run dX = dB - drive * F'(X) dt until crossing either boundary
    (detected by sign change at the dt scale) or until max_time, when the
    trial is censored.  Each replica consumes its own noise stream in
    fixed blocks, so a trial's outcome depends only on its seed.
    """
    seeds = tuple(int(s) for s in seeds)
    n = len(seeds)
    if n == 0:
        raise ValueError("seeds must be nonempty")
    if not (dt > 0.0 and max_time > 0.0):
        raise ValueError("dt and max_time must be positive")
    arc = float(wrap(high - low))
    if arc == 0.0:
        raise ValueError("boundaries must be distinct")
    s0 = float(wrap(x_start - low))
    if not 0.0 < s0 < arc:
        raise ValueError("x_start must lie strictly between the boundaries")
    max_steps = int(math.ceil(max_time / dt - 1e-9))
    drv = float(drive)
    sqrt_dt = math.sqrt(dt)
    gens = generators_from_seeds(seeds)
    exit_time = np.full(n, max_steps * dt)
    exit_side = np.zeros(n, dtype=np.int8)
    alive = np.arange(n)
    s = np.full(n, s0)
    blen = 256  # fixed so each replica's stream layout never depends on n
    step = 0
    while step < max_steps and alive.size:
        m = min(blen, max_steps - step)
        na = alive.size
        noise = np.empty((na, m))
        for j in range(na):
            noise[j] = gens[alive[j]].standard_normal(m)
        ws = _HarmonicWorkspace(potential, na)
        fp = np.empty(na)
        tmp = np.empty(na)
        xs = np.empty(na)
        active = np.ones(na, dtype=bool)
        for i in range(m):
            np.add(s, low, out=xs)
            ws.eval_derivative(xs, fp)
            fp *= drv
            fp *= dt
            np.multiply(noise[:, i], sqrt_dt, out=tmp)
            tmp -= fp
            tmp *= active  # finished replicas stop moving
            s += tmp
            hit_lo = (s <= 0.0) & active
            hit_hi = (s >= arc) & active
            if hit_lo.any() or hit_hi.any():
                t_now = (step + i + 1) * dt
                idx = alive[hit_lo]
                exit_time[idx] = t_now
                exit_side[idx] = -1
                idx = alive[hit_hi]
                exit_time[idx] = t_now
                exit_side[idx] = 1
                active &= ~(hit_lo | hit_hi)
        step += m
        if not active.all():
            alive = alive[active]
            s = s[active]
    _freeze(exit_time, exit_side)
    return ExitEnsemble(exit_time=exit_time, exit_side=exit_side,
                        low=float(low), high=float(high),
                        x_start=float(x_start), drive=drv, dt=dt,
                        max_time=max_steps * dt, seeds=seeds)


# ---------------------------------------------------------------------------
# scale-function oracle


def analytic_escape_probability(potential: PeriodicPotential, drive: float,
                                x0: float, x: float, x1: float,
                                orientation: str = "printed") -> float:
    """Exit probability of dX = dB - drive * F'(X) dt between x0 and x1.

    The arc runs from x0 to x1 in the positive direction and F must be
    monotone on it (checked on a grid).  The scale density is
    exp(2 * drive * F); with p the scale function, the "printed"
    orientation returns (p(x1) - p(x)) / (p(x1) - p(x0)), which is the
    probability of reaching x0 before x1 (it is 1 at x = x0 and 0 at
    x = x1).  orientation="escape" returns the complement, the
    probability of reaching x1 first.  Quadrature is adaptive with
    relative tolerance 1e-10 on the integrand shifted by the arc maximum
    of F, so the exponentials never overflow.
    """
    if orientation not in ("printed", "escape"):
        raise ValueError("orientation must be 'printed' or 'escape'")
    if drive < 0.0:
        raise ValueError("drive must be nonnegative")
    arc = float(wrap(x1 - x0))
    if arc == 0.0:
        raise ValueError("x0 and x1 must be distinct")
    sx = float(wrap(x - x0))
    if sx > arc:
        raise ValueError("x must lie on the arc from x0 to x1")
    grid = np.linspace(0.0, arc, _MONOTONE_GRID + 1)
    vals = potential.value(x0 + grid)
    diffs = np.diff(vals)
    tol = 1e-10 * max(1.0, potential.coefficient_bound_derivative(1))
    if not (np.all(diffs >= -tol) or np.all(diffs <= tol)):
        raise MonotonicityError(
            "potential is not monotone on the arc from x0 to x1")
    if sx == 0.0:
        return 1.0 if orientation == "printed" else 0.0
    if sx == arc:
        return 0.0 if orientation == "printed" else 1.0
    shift = float(np.max(vals))
    two_m = 2.0 * float(drive)

    def integrand(s):
        return math.exp(two_m * (potential.value_s(x0 + s) - shift))

    i_low, _ = quad(integrand, 0.0, sx, epsabs=0.0, epsrel=1e-10, limit=200)
    i_high, _ = quad(integrand, sx, arc, epsabs=0.0, epsrel=1e-10, limit=200)
    printed = i_high / (i_low + i_high)
    return printed if orientation == "printed" else 1.0 - printed
