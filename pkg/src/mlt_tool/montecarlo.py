"""
Euler-Maruyama ensemble oracle
==============================

Independent cross-check of the density solver: direct simulation of
the noisy system (jump increments on the membrane potential,
deterministic Euler update of the recovery variable), empirical
densities binned on the solver grid, and empirical transition
fractions.

Paths are embarrassingly parallel; every path owns a counter-based
random stream keyed by (global seed, path index), so any partition of
the ensemble into blocks reproduces identical numbers bit for bit.
Paths leaving a guard box three times the size of the computational
window are frozen where they are and tagged escaped (escape is data,
not an error) to mirror the solver's absorbing exterior.
"""
import logging
from dataclasses import dataclass

import numpy as np

from . import model
from .fp_solver import DensityField, Domain, Grid, rescale
from .model import LimitCycle, MLParams
from .stable_noise import StableSpec, increment, stream

logger = logging.getLogger(__name__)

__all__ = ["PathEnsemble", "em_path", "em_ensemble", "empirical_density",
           "transition_fraction", "guard_box"]


def guard_box(domain: Domain) -> tuple[float, float, float, float]:
    """Freezing box: the window scaled by 3 about its center."""
    cv = 0.5 * (domain.a + domain.b)
    cw = 0.5 * (domain.c + domain.d)
    return (cv - 1.5 * domain.width_v, cv + 1.5 * domain.width_v,
            cw - 1.5 * domain.width_w, cw + 1.5 * domain.width_w)


@dataclass
class PathEnsemble:
    """States of n_paths solution paths at the requested times.

    states[k] holds all paths at times[k]; escaped flags paths frozen
    at the guard box. Deterministic given (seed, n_paths, dt).
    """
    times: np.ndarray      # (m,)
    states: np.ndarray     # (m, n_paths, 2)
    escaped: np.ndarray    # (n_paths,) bool
    seed: int
    dt: float

    @property
    def n_paths(self) -> int:
        return self.states.shape[1]

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]


def _em_block(v, w, spec, dt, n_steps, incs, box, record_at, params):
    """Vectorized EM loop over one block of paths.

    incs[path, step] are the pregenerated noise increments; states are
    recorded after each step index listed in record_at.
    """
    alive = np.ones(len(v), dtype=bool)
    snap = set(record_at)
    recs = []
    for k in range(n_steps):
        # frozen paths keep their state; clipping their inputs to the
        # guard box avoids overflow in the (discarded) drift values
        vc = np.clip(v, box[0], box[1])
        wc = np.clip(w, box[2], box[3])
        dv = model.drift_v(vc, wc, params) * dt + incs[:, k]
        dw = model.drift_w(vc, wc, params) * dt
        v = np.where(alive, v + dv, v)
        w = np.where(alive, w + dw, w)
        alive &= (v > box[0]) & (v < box[1]) & (w > box[2]) & (w < box[3])
        if k + 1 in snap:
            recs.append(np.column_stack([v, w]))
    return v, w, ~alive, recs


def em_path(s0, spec: StableSpec, dt: float, T: float, rng,
            params: MLParams = MLParams(), domain: Domain = Domain()) -> np.ndarray:
    """One path: states at 0, dt, ..., T; shape (n_steps + 1, 2).

    rng is a dedicated stream (see stable_noise.stream); the same
    stream key always reproduces the identical path bit for bit, and
    the path equals the corresponding row of em_ensemble exactly.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_steps = int(round(T / dt))
    incs = np.asarray(increment(spec, dt, rng, size=n_steps))
    box = guard_box(domain)
    out = np.empty((n_steps + 1, 2))
    out[0] = s0
    v, w = float(s0[0]), float(s0[1])
    alive = True
    for k in range(n_steps):
        if alive:
            # same operation order as the vectorized ensemble loop, so
            # path k of em_ensemble reproduces bit for bit
            dv = float(model.drift_v(v, w, params)) * dt + incs[k]
            dw = float(model.drift_w(v, w, params)) * dt
            v, w = v + dv, w + dw
            alive = (box[0] < v < box[1]) and (box[2] < w < box[3])
        out[k + 1] = v, w
    return out


def em_ensemble(s0, spec: StableSpec, dt: float, T: float, n_paths: int,
                seed: int, snapshot_times=(), params: MLParams = MLParams(),
                domain: Domain = Domain(), max_block_values: int = 50_000_000
                ) -> PathEnsemble:
    """Simulate n_paths EM paths from s0; returns states at the
    snapshot times (strictly inside (0, T)) plus the terminal time.

    Per-path streams are keyed (seed, path index); the ensemble is
    processed in blocks sized so pregenerated increments stay within
    max_block_values doubles, without affecting any number.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_steps = int(round(T / dt))
    record_at = sorted({int(round(t / dt)) for t in snapshot_times
                        if 0 < round(t / dt) < n_steps})
    times = np.array([k * dt for k in record_at] + [T])
    box = guard_box(domain)
    block = max(1, min(n_paths, max_block_values // max(1, n_steps)))
    states = np.empty((len(times), n_paths, 2))
    escaped = np.empty(n_paths, dtype=bool)
    for lo in range(0, n_paths, block):
        hi = min(lo + block, n_paths)
        incs = np.empty((hi - lo, n_steps))
        for p in range(lo, hi):
            incs[p - lo] = increment(spec, dt, stream(seed, p), size=n_steps)
        v = np.full(hi - lo, float(s0[0]))
        w = np.full(hi - lo, float(s0[1]))
        v, w, esc, recs = _em_block(v, w, spec, dt, n_steps, incs, box,
                                    record_at, params)
        for slot, rec in enumerate(recs):
            states[slot, lo:hi] = rec
        states[-1, lo:hi] = np.column_stack([v, w])
        escaped[lo:hi] = esc
    logger.debug("ensemble alpha=%g sigma=%g n=%d: %.2f%% escaped",
                 spec.alpha, spec.sigma, n_paths, 100.0 * escaped.mean())
    return PathEnsemble(times, states, escaped, seed, dt)


def empirical_density(ensemble: PathEnsemble, grid: Grid, t: float,
                      domain: Domain = Domain()) -> DensityField:
    """Histogram of ensemble states at time t on the solver grid.

    Normalized so quadrature mass equals the in-domain path fraction;
    the deficit to 1 is the escaped/out-of-domain fraction.
    """
    k = int(np.argmin(np.abs(ensemble.times - t)))
    if abs(ensemble.times[k] - t) > 1e-9:
        raise ValueError(f"ensemble holds no states at t={t}")
    pts = ensemble.states[k]
    r = rescale(domain)
    x, y = r.to_xy(pts[:, 0], pts[:, 1])
    i = np.rint(x / grid.h).astype(int)
    j = np.rint(y / grid.h).astype(int)
    ok = (np.abs(i) <= grid.J - 1) & (np.abs(j) <= grid.J - 1)
    flat = (i[ok] + grid.J - 1) * grid.n + (j[ok] + grid.J - 1)
    counts = np.bincount(flat, minlength=grid.n * grid.n).reshape(grid.n, grid.n)
    values = counts / (ensemble.n_paths * grid.h ** 2)
    return DensityField(values.astype(float), t, grid, domain)


def transition_fraction(ensemble: PathEnsemble, unstable: LimitCycle) -> float:
    """Fraction of paths whose terminal state lies in the resting basin.

    Pure inside/outside ray casting (no ambiguity band): escaping or
    oscillating paths count as not-resting.
    """
    inside = [model.polygon_contains(unstable.polyline, s) and not esc
              for s, esc in zip(ensemble.terminal, ensemble.escaped)]
    return float(np.mean(inside))
