"""
Maximal likely trajectories and phase diagrams
==============================================

The maximal likely trajectory (MLT) is the curve traced by the argmax
of the evolving probability density. This module extracts it from
solver snapshots, classifies whether it crosses from the oscillating
basin into the resting basin before a deadline, and sweeps the
(alpha, sigma) plane into a phase diagram of transition verdicts.

Phase-diagram cells are independent jobs; each owns its solver state,
so cells can run in separate processes and are merged by the caller.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import fp_solver, model
from .fp_solver import DensityField, SolveResult, SolverConfig
from .model import Basin, LimitCycle, State

logger = logging.getLogger(__name__)

__all__ = [
    "DegenerateFieldError", "MLTrajectory", "TransitionVerdict", "Verdict",
    "Mark", "PhaseDiagram", "argmax_density", "extract_mlt",
    "classify_transition", "phase_diagram",
]


class DegenerateFieldError(RuntimeError):
    """Density field without a positive maximum."""


class Verdict(Enum):
    STAY_OSCILLATE = "StayOscillate"
    TO_REST = "ToRest"
    UNDECIDED = "Undecided"


class Mark(Enum):
    """Phase-diagram cell marks: both-stay / both-transition / split."""
    O = "o"
    X = "x"
    PLUS = "+"


@dataclass
class MLTrajectory:
    """Argmax track of a density evolution, in original (v, w) units.

    switches records times where the argmax jumped by more than a
    quarter of the domain diameter (multimodal peak handover); such
    events are legitimate but are never silent.
    """
    times: np.ndarray      # (n,), strictly increasing
    locations: np.ndarray  # (n, 2)
    pmax: np.ndarray       # (n,), positive
    switches: list

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class TransitionVerdict:
    tag: Verdict
    decision_time: float | None = None

    def __post_init__(self):
        if (self.tag is Verdict.TO_REST) != (self.decision_time is not None):
            raise ValueError("decision_time present iff tag is TO_REST")


def argmax_density(field: DensityField) -> tuple[State, float]:
    """Density argmax with sub-cell quadratic refinement.

    Grid ties break toward the lexicographically smallest (i, j) (and
    are logged); a one-cell quadratic fit along each axis then shifts
    the peak by at most half a cell. Returns the location in original
    (v, w) coordinates and the peak density value.

    Raises DegenerateFieldError when no positive value exists.
    """
    P = field.values
    pmax = float(P.max())
    if not pmax > 0.0:
        raise DegenerateFieldError(f"field at t={field.time} has no positive values")
    flat = int(np.argmax(P))
    ties = int(np.count_nonzero(P == pmax))
    if ties > 1:
        logger.info("argmax tie (%d cells) at t=%g; keeping smallest (i, j)", ties, field.time)
    r, s = np.unravel_index(flat, P.shape)
    h = field.grid.h
    x = field.grid.x[r] + _quadratic_offset(P[:, s], r) * h
    y = field.grid.x[s] + _quadratic_offset(P[r, :], s) * h
    v, w = fp_solver.rescale(field.domain).to_vw(x, y)
    return State(float(v), float(w)), pmax


def _quadratic_offset(line: np.ndarray, k: int) -> float:
    """Peak offset in cell units from a 3-point quadratic fit; 0 at edges."""
    if k == 0 or k == len(line) - 1:
        return 0.0
    lo, mid, hi = line[k - 1], line[k], line[k + 1]
    denom = lo - 2.0 * mid + hi
    if denom >= 0.0:
        return 0.0
    return float(np.clip(0.5 * (lo - hi) / denom, -0.5, 0.5))


def extract_mlt(snapshots) -> MLTrajectory:
    """Maximal likely trajectory: one argmax sample per snapshot.

    Accepts a SolveResult or any sequence of DensityField. Argmax
    failures are re-raised with the offending snapshot time attached.
    """
    snaps = snapshots.snapshots if isinstance(snapshots, SolveResult) else list(snapshots)
    if not snaps:
        raise ValueError("empty snapshot sequence")
    times = np.empty(len(snaps))
    locations = np.empty((len(snaps), 2))
    pmax = np.empty(len(snaps))
    for k, field in enumerate(snaps):
        try:
            loc, pm = argmax_density(field)
        except DegenerateFieldError as err:
            raise DegenerateFieldError(f"t={field.time}: {err}") from err
        times[k], locations[k], pmax[k] = field.time, loc, pm
    # flag multimodal peak handovers: jumps above a quarter of the
    # domain diameter between consecutive samples
    dom = snaps[0].domain
    diam = np.hypot(dom.width_v, 50.0 * dom.width_w)
    jump = np.hypot(np.diff(locations[:, 0]), 50.0 * np.diff(locations[:, 1]))
    switches = [float(times[k + 1]) for k in np.flatnonzero(jump > diam / 4.0)]
    for t in switches:
        logger.info("MLT peak handover at t=%g", t)
    return MLTrajectory(times, locations, pmax, switches)


def classify_transition(mlt: MLTrajectory, unstable: LimitCycle,
                        dwell: int = 5, band=None) -> TransitionVerdict:
    """Transition verdict of an MLT against the separatrix.

    TO_REST as soon as the trajectory sits strictly inside the unstable
    cycle for `dwell` consecutive samples (decision time = first sample
    of that run); the dwell window guards against single-snapshot argmax
    flicker across the separatrix. STAY_OSCILLATE if no such run exists
    by the deadline; UNDECIDED only when ambiguous basin calls persist
    to the deadline. Deterministic: identical snapshots always yield
    the identical verdict.
    """
    run_start = None
    run_len = 0
    for t, loc in zip(mlt.times, mlt.locations):
        basin = model.classify_basin(loc, unstable, band=band)
        if basin is Basin.REST:
            if run_len == 0:
                run_start = float(t)
            run_len += 1
            if run_len >= dwell:
                return TransitionVerdict(Verdict.TO_REST, run_start)
        else:
            run_len = 0
    if model.classify_basin(mlt.locations[-1], unstable, band=band) is Basin.AMBIGUOUS:
        return TransitionVerdict(Verdict.UNDECIDED)
    return TransitionVerdict(Verdict.STAY_OSCILLATE)


@dataclass
class PhaseDiagram:
    """Matrix of transition marks over the (alpha, sigma) plane.

    cells[i, j] is the Mark for (alphas[i], sigmas[j]), or None for a
    failed cell; failures lists (alpha, sigma, message) for every None.
    """
    alphas: np.ndarray
    sigmas: np.ndarray
    cells: np.ndarray   # dtype=object of Mark or None
    verdicts: np.ndarray  # dtype=object: pair of TransitionVerdict or None
    failures: list

    def mark(self, alpha: float, sigma: float):
        i = int(np.argmin(np.abs(self.alphas - alpha)))
        j = int(np.argmin(np.abs(self.sigmas - sigma)))
        return self.cells[i, j]


def _mark_of(verdicts) -> Mark | None:
    tags = [v.tag for v in verdicts]
    if any(t is Verdict.UNDECIDED for t in tags):
        return None
    rests = sum(t is Verdict.TO_REST for t in tags)
    return {0: Mark.O, 1: Mark.PLUS, 2: Mark.X}[rests]


def _solve_cell(args):
    alpha, sigma, starts, base, unstable, dwell = args
    config = replace(base, alpha=alpha, sigma=sigma)
    verdicts = []
    for s0 in starts:
        result = fp_solver.solve(config, s0)
        verdicts.append(classify_transition(extract_mlt(result), unstable, dwell=dwell))
    return verdicts


def phase_diagram(alphas, sigmas, start_pair, unstable: LimitCycle,
                  deadline: float = 100.0, base_config: SolverConfig | None = None,
                  dwell: int = 5, jobs: int = 1) -> PhaseDiagram:
    """Sweep transition verdicts over the (alpha, sigma) grid.

    Each cell runs two density evolutions from the paired start states
    (alpha = 2 entries route to the Brownian solver), extracts both
    MLTs and marks the cell O (both stay), X (both transition) or PLUS
    (split). Cell failures are recorded and the sweep continues.
    """
    alphas = np.sort(np.asarray(alphas, dtype=float))
    sigmas = np.sort(np.asarray(sigmas, dtype=float))
    base = base_config if base_config is not None else SolverConfig(alpha=1.0, sigma=0.25)
    base = replace(base, T=deadline)
    cells = np.empty((len(alphas), len(sigmas)), dtype=object)
    verd = np.empty((len(alphas), len(sigmas)), dtype=object)
    failures = []
    tasks = [(float(al), float(sg), tuple(map(tuple, start_pair)), base, unstable, dwell)
             for al in alphas for sg in sigmas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_solve_cell_safe, tasks))
    else:
        results = [_solve_cell_safe(t) for t in tasks]
    for (al, sg, *_), res in zip(tasks, results):
        i = int(np.searchsorted(alphas, al))
        j = int(np.searchsorted(sigmas, sg))
        if isinstance(res, str):
            cells[i, j] = None
            verd[i, j] = None
            failures.append((al, sg, res))
            logger.warning("phase-diagram cell (%g, %g) failed: %s", al, sg, res)
        else:
            cells[i, j] = _mark_of(res)
            verd[i, j] = tuple(res)
            if cells[i, j] is None:
                failures.append((al, sg, "undecided verdict"))
    return PhaseDiagram(alphas, sigmas, cells, verd, failures)


def _solve_cell_safe(args):
    try:
        return _solve_cell(args)
    except Exception as err:  # cell-level isolation: sweep must go on
        return f"{type(err).__name__}: {err}"
