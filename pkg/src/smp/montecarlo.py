"""Ensemble simulation of the discrete and continuous reset processes.

Each trajectory owns the random stream ``(seed, trajectory_index)`` and every
draw is addressed by ``(step, lane)`` within it, so results do not depend on
how trajectories are grouped into chunks or spread over threads. Chunks have
a fixed size and are reduced in index order, which makes the floating-point
reductions reproducible bit for bit for any worker count.

Discrete states are kept as integer levels (uniform process) or as
``y = ln x`` (random process); ``x`` itself is never materialized, so long
bursts cannot overflow.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, is_dataclass
from typing import Optional

import numpy as np
from scipy import integrate as _integrate
from scipy.special import logsumexp

from . import rng
from .analytics import DiscreteRandomSpec, DiscreteUniformSpec, passage_statistics
from .continuum import ContinuousUniformSpec, StateDependentSpec
from .histogram import LogHistogram
from .report import jsonable

DEFAULT_CHUNK = 1 << 16
STEP_CAP = 10 ** 9
DEFAULT_DY = 0.05

LANE_STEP = 0       # reset decision (+ spare)
LANE_MULT = 1       # multiplier draw
LANE_RESET = 2      # reset value draw
LANE_INIT = 3       # initial value
LANE_EVENT = 4      # continuous time: waiting time + thinning
LANE_IID = 5        # i.i.d. stationary draws


class HazardBoundError(RuntimeError):
    """A thinning candidate found ``q(x)`` above the declared bound."""


class StepCapError(RuntimeError):
    """Expected run length exceeds the step cap."""


def default_workers():
    env = os.environ.get("SMP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _chunks(n_traj, chunk_size):
    return [(s, min(s + chunk_size, n_traj)) for s in range(0, n_traj, chunk_size)]


def _map_chunks(fn, n_traj, chunk_size, workers):
    chunks = _chunks(n_traj, chunk_size)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(chunks) == 1:
        return [fn(a, b) for a, b in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: fn(*c), chunks))


def _lse_merge(parts):
    """Combine per-chunk log-sum-exp arrays in chunk order."""
    acc = parts[0]
    for p in parts[1:]:
        acc = np.logaddexp(acc, p)
    return acc


@dataclass
class EmpiricalMoments:
    """Ensemble estimates of ``<x**gamma>`` at the snapshot times."""

    gamma: float
    times: list
    values: list
    log_values: list
    std_errors: list


@dataclass
class PassageSample:
    mean: float
    std_error: float
    ci_low: float
    ci_high: float
    n_used: int
    n_excluded: int
    analytic: float
    quantity: str = "mean_wait"


@dataclass
class EnsembleSummary:
    """Aggregate output of one ensemble run.

    ``workers`` is runtime metadata only; it is left out of :meth:`to_json`
    so that summaries from different worker counts compare byte for byte.
    """

    spec: dict
    snapshots: dict
    moments: list
    time_average: Optional[LogHistogram] = None
    cumulative: Optional[dict] = None
    passage: Optional[PassageSample] = None
    provenance: dict = field(default_factory=dict)
    workers: int = 1

    def to_dict(self, include_runtime=False):
        d = {
            "spec": self.spec,
            "snapshots": {str(t): h.to_dict() for t, h in sorted(self.snapshots.items())},
            "moments": [asdict(m) for m in self.moments],
            "time_average": self.time_average.to_dict() if self.time_average is not None else None,
            "cumulative": self.cumulative,
            "passage": asdict(self.passage) if self.passage is not None else None,
            "provenance": self.provenance,
        }
        if include_runtime:
            d["runtime"] = {"workers": self.workers}
        return jsonable(d)

    def to_json(self, include_runtime=False):
        return json.dumps(self.to_dict(include_runtime), sort_keys=True, ensure_ascii=False)


def _provenance(seed, n_traj, chunk_size):
    return {"algorithm": rng.ALGORITHM, "master_seed": int(seed), "n_traj": int(n_traj),
            "chunk_size": int(chunk_size)}


def _check_common(n_traj, seed):
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    if not 0 <= int(seed) < 2 ** 64:
        raise ValueError("seed must fit in 64 bits")


def spec_to_dict(spec):
    if isinstance(spec, DiscreteUniformSpec):
        return {"model": "discrete_uniform", "mu": spec.mu, "r": spec.r}
    if isinstance(spec, DiscreteRandomSpec):
        return {"model": "discrete_random", "r": spec.r,
                "multiplier_law": spec.multiplier_law.to_dict(),
                "reset_law": spec.reset_law.to_dict(),
                "initial_law": spec.initial_law.to_dict()}
    if isinstance(spec, ContinuousUniformSpec):
        return {"model": "continuous_uniform", "lambda": spec.lam, "q": spec.q}
    if isinstance(spec, StateDependentSpec):
        if spec.is_algebraic:
            lambda0, alpha, q = spec.family
            return {"model": "state_dependent", "lambda0": lambda0, "alpha": alpha, "q": q}
        return {"model": "state_dependent", "family": "custom", "hazard_bound": spec.hazard_bound}
    raise TypeError(f"unsupported spec {type(spec).__name__}")


# --------------------------------------------------------------------------
# discrete time


def _uniform_chunk(spec, seed, t_max, snaps, gammas, time_average, cumulative, start, stop):
    idx = np.arange(start, stop, dtype=np.uint64)
    n = stop - start
    lvl = np.zeros(n, dtype=np.int64)
    L = spec.log_mu
    out = {"snap": {}, "tavg": None, "cum": None}
    tavg = np.zeros(t_max + 1, dtype=np.int64) if time_average else None
    cum = np.empty(t_max + 1) if cumulative else None
    run = np.zeros(n) if cumulative else None  # log of running sum of x
    for t in range(t_max + 1):
        if t:
            u = rng.trajectory_uniforms(seed, t, LANE_STEP, idx)[:, 0]
            lvl = np.where(u < spec.r, 0, lvl + 1)
            if cumulative:
                run = np.logaddexp(run, lvl * L)
        if t in snaps:
            out["snap"][t] = np.bincount(lvl, minlength=t_max + 1)
        if time_average:
            tavg += np.bincount(lvl, minlength=t_max + 1)
        if cumulative:
            cum[t] = logsumexp(run) - math.log(t + 1)
    out["tavg"] = tavg
    out["cum"] = cum
    return out


def _random_chunk(spec, seed, t_max, snaps, gammas, time_average, cumulative, hist_args, start, stop):
    idx = np.arange(start, stop, dtype=np.uint64)
    u0 = rng.trajectory_uniforms(seed, 0, LANE_INIT, idx)
    y = spec.initial_law.log_transform(u0[:, 0], u0[:, 1]).astype(float)
    out = {"snap": {}, "lse": {}, "tavg": None, "cum": None}
    tavg = LogHistogram.spanning(*hist_args) if time_average else None
    cum = np.empty(t_max + 1) if cumulative else None
    run = y.copy() if cumulative else None
    for t in range(t_max + 1):
        if t:
            u = rng.trajectory_uniforms(seed, t, LANE_STEP, idx)[:, 0]
            um = rng.trajectory_uniforms(seed, t, LANE_MULT, idx)
            ur = rng.trajectory_uniforms(seed, t, LANE_RESET, idx)
            grow = y + spec.multiplier_law.log_transform(um[:, 0], um[:, 1])
            reset = spec.reset_law.log_transform(ur[:, 0], ur[:, 1])
            y = np.where(u < spec.r, reset, grow)
            if cumulative:
                run = np.logaddexp(run, y)
        if t in snaps:
            h = LogHistogram.spanning(*hist_args).add(y)
            out["snap"][t] = h
            out["lse"][t] = [(logsumexp(g * y), logsumexp(2 * g * y)) for g in gammas]
        if time_average:
            tavg.add(y)
        if cumulative:
            cum[t] = logsumexp(run) - math.log(t + 1)
    out["tavg"] = tavg
    out["cum"] = cum
    return out


def _moments_from_lse(gammas, times, lse_by_time, n):
    result = []
    for j, g in enumerate(gammas):
        vals, logs, ses = [], [], []
        for t in times:
            l1, l2 = lse_by_time[t][j]
            lm1 = l1 - math.log(n)
            lm2 = l2 - math.log(n)
            m1 = math.exp(lm1) if lm1 < 700 else math.inf
            m2 = math.exp(lm2) if lm2 < 700 else math.inf
            var = max(m2 - m1 * m1, 0.0) if math.isfinite(m2) else math.inf
            logs.append(lm1)
            vals.append(m1)
            ses.append(math.sqrt(var / max(n - 1, 1)) if math.isfinite(var) else math.inf)
        result.append(EmpiricalMoments(float(g), list(times), vals, logs, ses))
    return result


def run_discrete(spec, t_max: int, n_traj: int, snapshot_times=None, gammas=(1.0,), seed: int = 0,
                 time_average: bool = True, cumulative: bool = True, workers=None,
                 chunk_size: int = DEFAULT_CHUNK, hist_range=(-20.0, 40.0), hist_dy=DEFAULT_DY):
    """Simulate ``n_traj`` trajectories of a discrete-time process up to ``t_max``.

    Works for :class:`DiscreteUniformSpec` (integer levels, level-aligned
    bins) and :class:`DiscreteRandomSpec` (log variable, ``hist_dy`` bins on
    ``hist_range``). Returns an :class:`EnsembleSummary` with snapshot and
    time-average histograms, empirical moments at the snapshots, and the
    ensemble mean of the running average ``x_bar_t`` for every ``t``.
    """
    _check_common(n_traj, seed)
    if t_max < 0:
        raise ValueError("t_max must be nonnegative")
    snaps = sorted(set(int(t) for t in (snapshot_times if snapshot_times is not None else [t_max])))
    if snaps and (snaps[0] < 0 or snaps[-1] > t_max):
        raise ValueError("snapshot times must lie in [0, t_max]")
    gammas = [float(g) for g in gammas]
    snapset = set(snaps)

    if isinstance(spec, DiscreteUniformSpec):
        fn = lambda a, b: _uniform_chunk(spec, seed, t_max, snapset, gammas, time_average, cumulative, a, b)
    elif isinstance(spec, DiscreteRandomSpec):
        hist_args = (hist_range[0], hist_range[1], hist_dy)
        fn = lambda a, b: _random_chunk(spec, seed, t_max, snapset, gammas, time_average, cumulative,
                                        hist_args, a, b)
    else:
        raise TypeError(f"run_discrete does not handle {type(spec).__name__}")
    parts = _map_chunks(fn, n_traj, chunk_size, workers)

    snapshots, lse = {}, {}
    tavg_hist = None
    if isinstance(spec, DiscreteUniformSpec):
        L = spec.log_mu
        levels = np.arange(t_max + 1)
        for t in snaps:
            counts = sum(p["snap"][t] for p in parts)
            snapshots[t] = LogHistogram.for_levels(L, t_max).add_level_counts(counts, L)
            nz = counts > 0
            lc = np.log(counts[nz])
            lse[t] = [(float(logsumexp(lc + g * L * levels[nz])), float(logsumexp(lc + 2 * g * L * levels[nz])))
                      for g in gammas]
        if time_average:
            tavg_hist = LogHistogram.for_levels(L, t_max).add_level_counts(sum(p["tavg"] for p in parts), L)
    else:
        for t in snaps:
            h = parts[0]["snap"][t]
            for p in parts[1:]:
                h.merge(p["snap"][t])
            snapshots[t] = h
            lse[t] = [tuple(float(x) for x in _lse_merge([np.asarray(p["lse"][t][j]) for p in parts]))
                      for j in range(len(gammas))]
        if time_average:
            tavg_hist = parts[0]["tavg"]
            for p in parts[1:]:
                tavg_hist.merge(p["tavg"])

    cum = None
    if cumulative:
        log_mean = _lse_merge([p["cum"] for p in parts]) - math.log(n_traj)
        cum = {"times": list(range(t_max + 1)), "log_values": log_mean.tolist(),
               "values": np.exp(np.minimum(log_mean, 709.0)).tolist()}

    return EnsembleSummary(
        spec=spec_to_dict(spec),
        snapshots=snapshots,
        moments=_moments_from_lse(gammas, snaps, lse, n_traj),
        time_average=tavg_hist,
        cumulative=cum,
        provenance=_provenance(seed, n_traj, chunk_size),
        workers=default_workers() if workers is None else int(workers),
    )


def _passage_chunk(spec, seed, M, cap, start, stop):
    idx = np.arange(start, stop, dtype=np.uint64)
    waits = np.full(stop - start, -1, dtype=np.int64)
    if M == 0:
        waits[:] = 0
        return waits
    active = np.arange(stop - start)
    lvl = np.zeros(stop - start, dtype=np.int64)
    t = 0
    while active.size and t < cap:
        t += 1
        u = rng.trajectory_uniforms(seed, t, LANE_STEP, idx[active])[:, 0]
        lvl = np.where(u < spec.r, 0, lvl + 1)
        hit = lvl >= M
        waits[active[hit]] = t
        active, lvl = active[~hit], lvl[~hit]
    return waits


def _summarize(samples, analytic, n_excluded, quantity):
    n = samples.size
    mean = float(np.mean(samples)) if n else math.nan
    se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return PassageSample(mean, se, mean - 1.96 * se, mean + 1.96 * se, int(n), int(n_excluded),
                         float(analytic), quantity)


def run_first_passage(spec: DiscreteUniformSpec, M: int, n_traj: int, seed: int = 0,
                      step_cap: int = STEP_CAP, workers=None, chunk_size: int = DEFAULT_CHUNK) -> PassageSample:
    """First time each trajectory reaches level ``M`` (``x = mu**M``).

    Uses the same per-trajectory streams as :func:`run_discrete`, so the
    passage times belong to the very paths that function would produce.
    """
    _check_common(n_traj, seed)
    stats = passage_statistics(M, spec.r)
    if stats.mean_wait > step_cap:
        raise StepCapError(f"expected wait {stats.mean_wait:.3g} exceeds step cap {step_cap}")
    parts = _map_chunks(lambda a, b: _passage_chunk(spec, seed, M, step_cap, a, b), n_traj, chunk_size, workers)
    waits = np.concatenate(parts)
    ok = waits >= 0
    return _summarize(waits[ok].astype(float), stats.mean_wait, (~ok).sum(), "mean_wait")


def _iid_chunk(spec, seed, M, cap, start, stop):
    idx = np.arange(start, stop, dtype=np.uint64)
    n = stop - start
    counted = np.full(n, -1, dtype=np.int64)
    active = np.arange(n)
    k = 0
    log_keep = math.log1p(-spec.r)
    while active.size and k < cap:
        u = rng.trajectory_uniforms(seed, k, LANE_IID, idx[active])[:, 0]
        k += 1
        # geometric stationary level: P(m >= j) = (1 - r)**j
        m = np.floor(np.log1p(-u) / log_keep).astype(np.int64)
        stop_now = m >= M
        done = active[stop_now]
        counted[done] = np.where(m[stop_now] == M, k, 0)
        active = active[~stop_now]
    return counted


def run_iid_draws(spec: DiscreteUniformSpec, M: int, n_traj: int, seed: int = 0,
                  step_cap: int = STEP_CAP, workers=None, chunk_size: int = DEFAULT_CHUNK) -> PassageSample:
    """Draws from the stationary level law until the first draw ``>= M``.

    A trial scores its number of draws when that draw equals ``M`` and zero
    otherwise; the mean score matches ``r * (1 - r)**-M``.
    """
    _check_common(n_traj, seed)
    stats = passage_statistics(M, spec.r)
    if math.exp(-M * math.log1p(-spec.r)) > step_cap:
        raise StepCapError("expected number of draws exceeds step cap")
    parts = _map_chunks(lambda a, b: _iid_chunk(spec, seed, M, step_cap, a, b), n_traj, chunk_size, workers)
    counts = np.concatenate(parts)
    ok = counts >= 0
    return _summarize(counts[ok].astype(float), stats.mean_draws, (~ok).sum(), "mean_draws")


# --------------------------------------------------------------------------
# continuous time


def _flow_factory(spec):
    """Return ``flow(y, dt)`` advancing ``y = ln x`` along ``dx/dt = lam(x)``."""
    if isinstance(spec, ContinuousUniformSpec):
        lam = spec.lam
        return lambda y, dt: y + lam * dt
    if spec.is_algebraic:
        lambda0, alpha, _ = spec.family
        if alpha == 0:
            return lambda y, dt: y + lambda0 * dt

        def flow(y, dt):
            # x**alpha grows linearly at rate alpha * lambda0
            with np.errstate(divide="ignore"):
                return np.logaddexp(alpha * y, np.log(alpha * lambda0 * dt)) / alpha
        return flow

    def flow(y, dt):
        y = np.asarray(y, dtype=float)
        dt = np.broadcast_to(np.asarray(dt, dtype=float), y.shape)
        if y.size == 0:
            return y.copy()

        def rhs(_s, yy):
            x = np.exp(yy)
            return dt * np.asarray(spec.lam_fn(x), dtype=float) / x

        sol = _integrate.solve_ivp(rhs, (0.0, 1.0), y, method="RK45", rtol=1e-9, atol=1e-12)
        if not sol.success:
            raise RuntimeError(f"flow integration failed: {sol.message}")
        return sol.y[:, -1]
    return flow


def _continuous_chunk(spec, seed, T, snaps, gammas, hist_args, init_ppf, start, stop):
    idx = np.arange(start, stop, dtype=np.uint64)
    n = stop - start
    flow = _flow_factory(spec)
    if isinstance(spec, ContinuousUniformSpec):
        rate, q_fn, thinning = spec.q, None, False
    elif spec.is_algebraic:
        rate, q_fn, thinning = spec.family[2], None, False
    else:
        if spec.hazard_bound is None:
            raise ValueError("non-algebraic state-dependent spec needs hazard_bound for thinning")
        rate, q_fn, thinning = spec.hazard_bound, spec.q_fn, True

    if init_ppf is None:
        y = np.zeros(n)
    else:
        u0 = rng.trajectory_uniforms(seed, 0, LANE_INIT, idx)[:, 0]
        y = np.log(np.asarray(init_ppf(u0), dtype=float))
    now = np.zeros(n)
    events = np.zeros(n, dtype=np.uint64)
    snap_y = {s: np.empty(n) for s in snaps}
    active = np.arange(n)
    while active.size:
        u = rng.trajectory_uniforms(seed, events[active], LANE_EVENT, idx[active])
        wait = -np.log1p(-u[:, 0]) / rate
        t0 = now[active]
        cand = t0 + wait
        ya = y[active]
        for s in snaps:
            hit = (t0 <= s) & (s < cand)
            if hit.any():
                snap_y[s][active[hit]] = flow(ya[hit], s - t0[hit])
        alive = cand <= T
        act, ya, cand, wait, ua = active[alive], ya[alive], cand[alive], wait[alive], u[alive, 1]
        if thinning:
            moved = flow(ya, wait)
            qx = np.asarray(q_fn(np.exp(moved)), dtype=float)
            if np.any(qx > rate * (1 + 1e-12)):
                bad = float(np.exp(moved[qx > rate][0]))
                raise HazardBoundError(f"q({bad:.6g}) exceeds declared hazard bound {rate}")
            accept = ua * rate < qx
            y[act] = np.where(accept, 0.0, moved)
        else:
            y[act] = 0.0
        now[act] = cand
        events[act] += np.uint64(1)
        active = act
    out = {}
    for s in snaps:
        h = LogHistogram.spanning(*hist_args).add(snap_y[s])
        out[s] = (h, [(float(logsumexp(g * snap_y[s])), float(logsumexp(2 * g * snap_y[s]))) for g in gammas])
    return out


def run_continuous(spec, T: float, n_traj: int, snapshot_times=None, gammas=(1.0,), seed: int = 0,
                   initial_ppf="default", workers=None, chunk_size: int = DEFAULT_CHUNK,
                   hist_range=(0.0, 40.0), hist_dy=DEFAULT_DY):
    """Event-driven simulation of the continuous-time models up to time ``T``.

    Waiting times between resets are exponential with rate ``q`` (exact for
    the uniform model and for constant-``q`` algebraic models); other models
    are thinned against ``spec.hazard_bound``. ``initial_ppf`` maps uniforms to
    initial values; the default is the spec's ``f0_ppf`` for the uniform model
    and ``x = 1`` for state-dependent models.
    """
    _check_common(n_traj, seed)
    if not T > 0:
        raise ValueError("T must be positive")
    snaps = sorted(set(float(s) for s in (snapshot_times if snapshot_times is not None else [T])))
    if snaps[0] < 0 or snaps[-1] > T:
        raise ValueError("snapshot times must lie in [0, T]")
    if initial_ppf == "default":
        initial_ppf = spec.f0_ppf if isinstance(spec, ContinuousUniformSpec) else None
        if isinstance(spec, ContinuousUniformSpec) and initial_ppf is None:
            raise ValueError("simulation needs an inverse CDF (f0_ppf) for the initial density")
    gammas = [float(g) for g in gammas]
    hist_args = (hist_range[0], hist_range[1], hist_dy)
    parts = _map_chunks(
        lambda a, b: _continuous_chunk(spec, seed, T, snaps, gammas, hist_args, initial_ppf, a, b),
        n_traj, chunk_size, workers)
    snapshots, lse = {}, {}
    for s in snaps:
        h = parts[0][s][0]
        for p in parts[1:]:
            h.merge(p[s][0])
        snapshots[s] = h
        lse[s] = [tuple(float(x) for x in _lse_merge([np.asarray(p[s][1][j]) for p in parts]))
                  for j in range(len(gammas))]
    return EnsembleSummary(
        spec=spec_to_dict(spec),
        snapshots=snapshots,
        moments=_moments_from_lse(gammas, snaps, lse, n_traj),
        provenance=_provenance(seed, n_traj, chunk_size),
        workers=default_workers() if workers is None else int(workers),
    )


def sample_paths(spec: DiscreteUniformSpec, t_max: int, n_paths: int = 1, seed: int = 0):
    """Levels ``m_t`` for ``t = 0 .. t_max`` of the first ``n_paths`` trajectories."""
    idx = np.arange(n_paths, dtype=np.uint64)
    lvl = np.zeros(n_paths, dtype=np.int64)
    out = np.zeros((t_max + 1, n_paths), dtype=np.int64)
    for t in range(1, t_max + 1):
        u = rng.trajectory_uniforms(seed, t, LANE_STEP, idx)[:, 0]
        lvl = np.where(u < spec.r, 0, lvl + 1)
        out[t] = lvl
    return out


def hill_tail_index(samples, top_fraction: float = 0.01) -> float:
    """Hill estimate of the tail exponent from the top order statistics.

    Diagnostic only: on fat-tailed reset processes it is strongly biased at
    practical sample sizes.
    """
    x = np.sort(np.asarray(samples, dtype=float))[::-1]
    k = max(2, int(len(x) * top_fraction))
    if k >= len(x):
        raise ValueError("not enough samples for the requested fraction")
    logs = np.log(x[:k]) - math.log(x[k])
    return 1.0 / float(np.mean(logs))
