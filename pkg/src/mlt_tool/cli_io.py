"""
Configuration, run drivers and result persistence
=================================================

One YAML configuration format (nested key/value, unknown keys
rejected), five run kinds tying the solver modules into reproducible
artifact directories, a run manifest with per-artifact checksums, and
gnuplot-ready plot-data emission.

CLI::

    mlt-tool <kind> --config cfg.yaml [--seed N] [--out DIR] [--jobs K]
    mlt-tool plot-data --artifact FILE --style {mlt,density,phase-diagram}

Kinds: ``phase-portrait`` (cycles + fixed point), ``density``
(snapshots of one evolution), ``mlt`` (maximal likely trajectory and
its verdict), ``phase-diagram`` ((alpha, sigma) sweep) and ``mc-check``
(solver vs Monte Carlo total variation). The environment variable
``MLT_JOBS`` caps sweep parallelism. All file writes go through the
single run directory; sweep workers never write.
"""
import argparse
import dataclasses
import hashlib
import logging
import os
import sys
import time
from dataclasses import dataclass, replace

import numpy as np
import yaml

from . import __version__, fp_solver, mlt, model, montecarlo
from .fp_solver import Domain, SolverConfig
from .model import MLParams
from .stable_noise import StableSpec

logger = logging.getLogger(__name__)

__all__ = [
    "ParseError", "ValidationError", "UnknownArtifactError", "RunConfig",
    "parse_config", "parse_config_dict", "emit_config", "run",
    "emit_plotdata", "main", "KINDS", "STABLE_STARTS", "BORDERLINE_STARTS",
]

KINDS = ("phase-portrait", "density", "mlt", "phase-diagram", "mc-check")

# bundled reference start states: a pair on the stable cycle and a pair
# on the unstable cycle (the borderline state)
STABLE_STARTS = ((-32.7, 0.4578), (7.459, 0.5004))
BORDERLINE_STARTS = ((-22.73, 0.174), (-31.27, 0.15))


class ParseError(ValueError):
    """Unreadable configuration file."""


class ValidationError(ValueError):
    """Invalid configuration; lists every offending field path."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


class UnknownArtifactError(ValueError):
    """plot-data request for a file that is not a known artifact type."""


@dataclass(frozen=True)
class RunConfig:
    """Complete description of one reproducible run."""
    kind: str
    seed: int = 0
    output: str = "out"
    jobs: int = 1
    params: MLParams = MLParams()
    domain: Domain = Domain()
    alpha: float = 0.5
    sigma: float = 0.25
    alphas: tuple | None = None
    sigmas: tuple | None = None
    J: int = 100
    dt: float | None = None
    T: float = 100.0
    snapshot_dt: float = 0.5
    s0: tuple = STABLE_STARTS[0]
    times: tuple = (1.0, 20.0, 70.0, 100.0)
    start_pair: str = "stable"
    dwell: int = 5
    n_paths: int = 100000
    em_dt: float = 0.005
    t_check: float = 1.0

    def solver_config(self, alpha=None, sigma=None) -> SolverConfig:
        return SolverConfig(
            alpha=self.alpha if alpha is None else alpha,
            sigma=self.sigma if sigma is None else sigma,
            J=self.J, dt=self.dt, T=self.T, snapshot_dt=self.snapshot_dt,
            params=self.params, domain=self.domain)

    @property
    def sweep_cells(self) -> list:
        """Cartesian (alpha, sigma) plan of a phase-diagram run."""
        alphas = self.alphas if self.alphas is not None else (self.alpha,)
        sigmas = self.sigmas if self.sigmas is not None else (self.sigma,)
        return [(a, s) for a in alphas for s in sigmas]

    def start_states(self) -> tuple:
        if self.start_pair == "stable":
            return STABLE_STARTS
        if self.start_pair == "unstable":
            return BORDERLINE_STARTS
        return self.start_pair


def _as_float(value, path, errors, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{path}: expected a number, got {value!r}")
        return None
    return float(value)


def _as_int(value, path, errors):
    if isinstance(value, bool) or not isinstance(value, int):
        errors.append(f"{path}: expected an integer, got {value!r}")
        return 0
    return int(value)


def _as_point(value, path, errors):
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in value)):
        errors.append(f"{path}: expected [v, w]")
        return (0.0, 0.0)
    return (float(value[0]), float(value[1]))


def _check_unknown(block: dict, allowed, path, errors):
    for key in block:
        if key not in allowed:
            errors.append(f"{path}{key}: unknown key")


_MODEL_FIELDS = [f.name for f in dataclasses.fields(MLParams)]
_DOMAIN_FIELDS = [f.name for f in dataclasses.fields(Domain)]


def parse_config_dict(raw: dict) -> RunConfig:
    """Validate a configuration mapping into a RunConfig.

    Every violation is reported with its field path; unknown keys are
    rejected everywhere.
    """
    if not isinstance(raw, dict):
        raise ValidationError(["top level: expected a mapping"])
    errors = []
    _check_unknown(raw, {"kind", "seed", "output", "jobs", "model", "domain",
                         "noise", "solver", "run"}, "", errors)
    kind = raw.get("kind")
    if kind not in KINDS:
        errors.append(f"kind: must be one of {', '.join(KINDS)}; got {kind!r}")
    kw = {}
    if "seed" in raw:
        kw["seed"] = _as_int(raw["seed"], "seed", errors)
    if "output" in raw:
        if not isinstance(raw["output"], str):
            errors.append("output: expected a string")
        else:
            kw["output"] = raw["output"]
    if "jobs" in raw:
        kw["jobs"] = _as_int(raw["jobs"], "jobs", errors)
        if kw["jobs"] < 1:
            errors.append("jobs: must be >= 1")

    block = raw.get("model", {}) or {}
    _check_unknown(block, _MODEL_FIELDS, "model.", errors)
    fields = {k: _as_float(block[k], f"model.{k}", errors)
              for k in block if k in _MODEL_FIELDS}
    try:
        kw["params"] = MLParams(**{k: v for k, v in fields.items() if v is not None})
    except ValueError as err:
        errors.append(f"model: {err}")

    block = raw.get("domain", {}) or {}
    _check_unknown(block, _DOMAIN_FIELDS, "domain.", errors)
    fields = {k: _as_float(block[k], f"domain.{k}", errors)
              for k in block if k in _DOMAIN_FIELDS}
    try:
        kw["domain"] = Domain(**{k: v for k, v in fields.items() if v is not None})
    except ValueError as err:
        errors.append(f"domain: {err}")

    block = raw.get("noise", {}) or {}
    _check_unknown(block, {"alpha", "sigma", "alphas", "sigmas"}, "noise.", errors)
    if "alpha" in block:
        kw["alpha"] = _as_float(block["alpha"], "noise.alpha", errors)
    if "sigma" in block:
        kw["sigma"] = _as_float(block["sigma"], "noise.sigma", errors)
    for name in ("alphas", "sigmas"):
        if name in block and block[name] is not None:
            vals = block[name]
            if not isinstance(vals, (list, tuple)) or not vals:
                errors.append(f"noise.{name}: expected a nonempty list")
            else:
                kw[name] = tuple(_as_float(v, f"noise.{name}[{k}]", errors)
                                 for k, v in enumerate(vals))
    for label, value in [("noise.alpha", kw.get("alpha", 0.5)),
                         *[(f"noise.alphas[{k}]", v)
                           for k, v in enumerate(kw.get("alphas") or [])]]:
        if value is not None and not 0.0 < value <= 2.0:
            errors.append(f"{label}: alpha must be in (0, 2], got {value}")
    for label, value in [("noise.sigma", kw.get("sigma", 0.25)),
                         *[(f"noise.sigmas[{k}]", v)
                           for k, v in enumerate(kw.get("sigmas") or [])]]:
        if value is not None and value < 0:
            errors.append(f"{label}: sigma must be nonnegative, got {value}")

    block = raw.get("solver", {}) or {}
    _check_unknown(block, {"J", "dt", "T", "snapshot_dt"}, "solver.", errors)
    if "J" in block:
        kw["J"] = _as_int(block["J"], "solver.J", errors)
        if kw["J"] < 2:
            errors.append("solver.J: must be >= 2")
    if "dt" in block:
        kw["dt"] = _as_float(block["dt"], "solver.dt", errors, allow_none=True)
        if kw["dt"] is not None and kw["dt"] <= 0:
            errors.append("solver.dt: must be positive")
    if "T" in block:
        kw["T"] = _as_float(block["T"], "solver.T", errors)
    if "snapshot_dt" in block:
        kw["snapshot_dt"] = _as_float(block["snapshot_dt"], "solver.snapshot_dt", errors)
    T = kw.get("T", 100.0)
    sdt = kw.get("snapshot_dt", 0.5)
    if T is not None and sdt is not None and (sdt <= 0 or T < sdt):
        errors.append("solver: require T >= snapshot_dt > 0")

    block = raw.get("run", {}) or {}
    _check_unknown(block, {"s0", "times", "start_pair", "dwell", "n_paths",
                           "em_dt", "t_check"}, "run.", errors)
    if "s0" in block:
        kw["s0"] = _as_point(block["s0"], "run.s0", errors)
    if "times" in block:
        vals = block["times"]
        if not isinstance(vals, (list, tuple)) or not vals:
            errors.append("run.times: expected a nonempty list")
        else:
            kw["times"] = tuple(_as_float(v, f"run.times[{k}]", errors)
                                for k, v in enumerate(vals))
    if "start_pair" in block:
        sp = block["start_pair"]
        if sp in ("stable", "unstable"):
            kw["start_pair"] = sp
        elif isinstance(sp, (list, tuple)) and len(sp) == 2:
            kw["start_pair"] = (_as_point(sp[0], "run.start_pair[0]", errors),
                                _as_point(sp[1], "run.start_pair[1]", errors))
        else:
            errors.append("run.start_pair: expected 'stable', 'unstable' or two [v, w] points")
    if "dwell" in block:
        kw["dwell"] = _as_int(block["dwell"], "run.dwell", errors)
        if kw["dwell"] < 1:
            errors.append("run.dwell: must be >= 1")
    if "n_paths" in block:
        kw["n_paths"] = _as_int(block["n_paths"], "run.n_paths", errors)
        if kw["n_paths"] < 1:
            errors.append("run.n_paths: must be >= 1")
    if "em_dt" in block:
        kw["em_dt"] = _as_float(block["em_dt"], "run.em_dt", errors)
        if kw["em_dt"] is not None and kw["em_dt"] <= 0:
            errors.append("run.em_dt: must be positive")
    if "t_check" in block:
        kw["t_check"] = _as_float(block["t_check"], "run.t_check", errors)

    if errors:
        raise ValidationError(errors)
    return RunConfig(kind=kind, **kw)


def parse_config(path) -> RunConfig:
    """Load and validate a YAML run configuration."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as err:
        raise ParseError(f"cannot read {path}: {err}") from err
    except yaml.YAMLError as err:
        raise ParseError(f"cannot parse {path}: {err}") from err
    return parse_config_dict(raw if raw is not None else {})


def emit_config(config: RunConfig) -> str:
    """Serialize a RunConfig to YAML; parse(emit(c)) == c."""
    d = {
        "kind": config.kind,
        "seed": config.seed,
        "output": config.output,
        "jobs": config.jobs,
        "model": dataclasses.asdict(config.params),
        "domain": dataclasses.asdict(config.domain),
        "noise": {"alpha": config.alpha, "sigma": config.sigma,
                  "alphas": list(config.alphas) if config.alphas else None,
                  "sigmas": list(config.sigmas) if config.sigmas else None},
        "solver": {"J": config.J, "dt": config.dt, "T": config.T,
                   "snapshot_dt": config.snapshot_dt},
        "run": {"s0": list(config.s0), "times": list(config.times),
                "start_pair": (config.start_pair if isinstance(config.start_pair, str)
                               else [list(p) for p in config.start_pair]),
                "dwell": config.dwell, "n_paths": config.n_paths,
                "em_dt": config.em_dt, "t_check": config.t_check},
    }
    d["noise"] = {k: v for k, v in d["noise"].items() if v is not None}
    d["solver"] = {k: v for k, v in d["solver"].items() if v is not None}
    return yaml.safe_dump(d, sort_keys=False)


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class _RunDir:
    """Single writer for one run directory."""

    def __init__(self, root):
        self.root = root
        os.makedirs(root, exist_ok=True)

    def path(self, name) -> str:
        return os.path.join(self.root, name)

    def write_text(self, name, text) -> str:
        p = self.path(name)
        with open(p, "w") as fh:
            fh.write(text)
        return p

    def artifacts(self) -> dict:
        out = {}
        for base, _, names in os.walk(self.root):
            for name in names:
                rel = os.path.relpath(os.path.join(base, name), self.root)
                if rel != "manifest.yaml":
                    out[rel] = _sha256(os.path.join(base, name))
        return dict(sorted(out.items()))


def _fmt(x) -> str:
    return f"{float(x):.10g}"


def _write_cycle_csv(rundir, name, cycle) -> None:
    lines = ["v,w"] + [f"{_fmt(v)},{_fmt(w)}" for v, w in cycle.polyline]
    rundir.write_text(name, "\n".join(lines) + "\n")


def _run_phase_portrait(config: RunConfig, rundir: _RunDir) -> list:
    fp = model.find_fixed_point(params=config.params)
    stable = model.extract_stable_cycle(config.params)
    unstable = model.extract_unstable_cycle(config.params)
    ev = fp.jacobian_eigenvalues
    rundir.write_text("fixed_point.csv",
                      "v,w,eig1_re,eig1_im,eig2_re,eig2_im,stability\n"
                      f"{_fmt(fp.location.v)},{_fmt(fp.location.w)},"
                      f"{_fmt(ev[0].real)},{_fmt(ev[0].imag)},"
                      f"{_fmt(ev[1].real)},{_fmt(ev[1].imag)},{fp.stability}\n")
    _write_cycle_csv(rundir, "stable_cycle.csv", stable)
    _write_cycle_csv(rundir, "unstable_cycle.csv", unstable)
    rundir.write_text("cycles.yaml", yaml.safe_dump({
        "stable_period": float(stable.period),
        "unstable_period": float(unstable.period)}))
    return []


def _run_density(config: RunConfig, rundir: _RunDir) -> list:
    sc = config.solver_config()
    result = fp_solver.solve(sc, config.s0)
    times = result.times
    for t in config.times:
        k = int(np.argmin(np.abs(times - t)))
        if abs(times[k] - t) > sc.snapshot_dt / 2:
            raise ValueError(f"requested snapshot time {t} not on the cadence")
        field = result.snapshots[k]
        stem = f"density_t{times[k]:g}"
        fp_solver.write_snapshot(field, rundir.path(stem + ".bin"),
                                 alpha=config.alpha, sigma=config.sigma)
        fp_solver.write_snapshot_csv(field, rundir.path(stem + ".csv"))
    mass_lines = ["t,mass,clamped_negative"]
    mass_lines += [f"{_fmt(t)},{_fmt(m)},{_fmt(c)}"
                   for t, m, c in zip(times, result.masses, result.clamped)]
    rundir.write_text("mass_history.csv", "\n".join(mass_lines) + "\n")
    return []


def _write_mlt_csv(rundir, name, track) -> None:
    lines = ["t,v,w,pmax"]
    lines += [f"{_fmt(t)},{_fmt(v)},{_fmt(w)},{_fmt(p)}"
              for t, (v, w), p in zip(track.times, track.locations, track.pmax)]
    rundir.write_text(name, "\n".join(lines) + "\n")


def _run_mlt(config: RunConfig, rundir: _RunDir) -> list:
    unstable = model.extract_unstable_cycle(config.params)
    result = fp_solver.solve(config.solver_config(), config.s0)
    track = mlt.extract_mlt(result)
    verdict = mlt.classify_transition(track, unstable, dwell=config.dwell)
    _write_mlt_csv(rundir, "mlt.csv", track)
    rundir.write_text("verdict.yaml", yaml.safe_dump({
        "tag": verdict.tag.value,
        "decision_time": verdict.decision_time,
        "switches": track.switches}))
    return []


def _run_phase_diagram(config: RunConfig, rundir: _RunDir) -> list:
    unstable = model.extract_unstable_cycle(config.params)
    alphas = config.alphas if config.alphas is not None else (config.alpha,)
    sigmas = config.sigmas if config.sigmas is not None else (config.sigma,)
    diagram = mlt.phase_diagram(alphas, sigmas, config.start_states(), unstable,
                                deadline=config.T, base_config=config.solver_config(),
                                dwell=config.dwell, jobs=config.jobs)
    lines = ["alpha,sigma,mark"]
    for i, a in enumerate(diagram.alphas):
        for j, s in enumerate(diagram.sigmas):
            cell = diagram.cells[i, j]
            lines.append(f"{_fmt(a)},{_fmt(s)},{cell.value if cell else 'failed'}")
    rundir.write_text("phase_diagram.csv", "\n".join(lines) + "\n")
    warnings = [{"alpha": a, "sigma": s, "error": msg} for a, s, msg in diagram.failures]
    if warnings:
        rundir.write_text("failures.yaml", yaml.safe_dump(warnings))
    return warnings


def _run_mc_check(config: RunConfig, rundir: _RunDir) -> list:
    sc = replace(config.solver_config(), T=config.t_check)
    result = fp_solver.solve(sc, config.s0)
    spec = StableSpec(config.alpha, config.sigma)
    ensemble = montecarlo.em_ensemble(config.s0, spec, config.em_dt, config.t_check,
                                      config.n_paths, config.seed,
                                      params=config.params, domain=config.domain)
    fp_field = result.snapshots[-1]
    mc_field = montecarlo.empirical_density(ensemble, sc.grid, config.t_check,
                                            domain=config.domain)
    tv = total_variation(fp_field, mc_field)
    fp_solver.write_snapshot(fp_field, rundir.path("fp_density.bin"),
                             alpha=config.alpha, sigma=config.sigma)
    fp_solver.write_snapshot(mc_field, rundir.path("mc_density.bin"),
                             alpha=config.alpha, sigma=config.sigma)
    rundir.write_text("mc_check.csv",
                      "alpha,sigma,t,n_paths,total_variation,fp_mass,mc_mass,escaped\n"
                      f"{_fmt(config.alpha)},{_fmt(config.sigma)},{_fmt(config.t_check)},"
                      f"{config.n_paths},{_fmt(tv)},{_fmt(fp_field.mass())},"
                      f"{_fmt(mc_field.mass())},{_fmt(ensemble.escaped.mean())}\n")
    return []


def total_variation(a: fp_solver.DensityField, b: fp_solver.DensityField) -> float:
    """Total variation distance between two grid densities.

    Cell masses compared cellwise; the missing mass of each field (its
    deficit to 1, i.e. absorbed or out-of-domain) is compared as one
    aggregate exterior state.
    """
    h2 = a.grid.h ** 2
    cells = 0.5 * np.abs(a.values - b.values).sum() * h2
    return float(cells + 0.5 * abs(a.mass() - b.mass()))


_RUNNERS = {
    "phase-portrait": _run_phase_portrait,
    "density": _run_density,
    "mlt": _run_mlt,
    "phase-diagram": _run_phase_diagram,
    "mc-check": _run_mc_check,
}


def run(kind: str, config: RunConfig) -> tuple[int, dict]:
    """Execute one run kind; returns (exit status, manifest).

    Writes all artifacts plus manifest.yaml into the output directory.
    Cell-level sweep failures are recorded as warnings and do not make
    the exit status nonzero; hard errors propagate.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    config = replace(config, kind=kind)
    rundir = _RunDir(config.output)
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    warnings = _RUNNERS[kind](config, rundir)
    manifest = {
        "kind": kind,
        "version": __version__,
        "started": started,
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": yaml.safe_load(emit_config(config)),
        "warnings": warnings,
        "artifacts": rundir.artifacts(),
    }
    rundir.write_text("manifest.yaml", yaml.safe_dump(manifest, sort_keys=False))
    return 0, manifest


_GP_STUBS = {
    "mlt": ("set xlabel 'v (mV)'\nset ylabel 'w'\n"
            "plot '{dat}' using 2:3 with lines title 'maximal likely trajectory'\n"),
    "density": ("set xlabel 'v (mV)'\nset ylabel 'w'\nset view map\n"
                "splot '{dat}' using 1:2:3 with points palette pt 5 title 'density'\n"),
    "phase-diagram": ("set xlabel 'alpha'\nset ylabel 'sigma'\n"
                      "plot '{o}' with points pt 6 lc rgb 'green' title 'both stay', \\\n"
                      "     '{x}' with points pt 2 lc rgb 'red' title 'both transition', \\\n"
                      "     '{plus}' with points pt 1 lc rgb 'blue' title 'split'\n"),
}


def emit_plotdata(artifact, style: str, out_dir=None) -> list:
    """Emit gnuplot-ready columnar data plus a script stub.

    style selects the artifact type: 'mlt' (CSV t,v,w,pmax -> t v w),
    'density' (binary snapshot -> v w p long format) or 'phase-diagram'
    (CSV -> one series per mark). Output ordering is bit-stable.
    """
    if style not in _GP_STUBS:
        raise UnknownArtifactError(f"unknown plot style {style!r}")
    if not os.path.exists(artifact):
        raise UnknownArtifactError(f"artifact not found: {artifact}")
    out_dir = out_dir or os.path.dirname(os.path.abspath(artifact))
    stem = os.path.splitext(os.path.basename(artifact))[0]
    paths = []

    def emit(name, text):
        p = os.path.join(out_dir, name)
        with open(p, "w") as fh:
            fh.write(text)
        paths.append(p)
        return p

    if style == "mlt":
        rows = np.genfromtxt(artifact, delimiter=",", names=True)
        dat = emit(stem + "_plot.dat",
                   "# t v w\n" + "".join(f"{_fmt(t)} {_fmt(v)} {_fmt(w)}\n"
                                         for t, v, w in zip(rows["t"], rows["v"], rows["w"])))
        emit(stem + ".gp", _GP_STUBS["mlt"].format(dat=os.path.basename(dat)))
    elif style == "density":
        try:
            field, _, _ = fp_solver.read_snapshot(artifact)
        except Exception as err:
            raise UnknownArtifactError(f"{artifact} is not a density snapshot: {err}") from err
        V, W = field.node_vw()
        lines = ["# v w p"]
        for r in range(field.grid.n):
            for s in range(field.grid.n):
                lines.append(f"{_fmt(V[r])} {_fmt(W[s])} {_fmt(field.values[r, s])}")
        dat = emit(stem + "_plot.dat", "\n".join(lines) + "\n")
        emit(stem + ".gp", _GP_STUBS["density"].format(dat=os.path.basename(dat)))
    else:
        rows = np.genfromtxt(artifact, delimiter=",", names=True, dtype=None,
                             encoding="utf-8")
        rows = np.atleast_1d(rows)
        series = {"o": [], "x": [], "+": []}
        for row in rows:
            mark = str(row["mark"])
            if mark in series:
                series[mark].append((float(row["alpha"]), float(row["sigma"])))
        names = {}
        for mark, suffix in [("o", "_o.dat"), ("x", "_x.dat"), ("+", "_plus.dat")]:
            names[mark] = emit(stem + suffix,
                               "# alpha sigma\n" + "".join(f"{_fmt(a)} {_fmt(s)}\n"
                                                           for a, s in series[mark]))
        emit(stem + ".gp", _GP_STUBS["phase-diagram"].format(
            o=os.path.basename(names["o"]), x=os.path.basename(names["x"]),
            plus=os.path.basename(names["+"])))
    return paths


def main(argv=None) -> int:
    """Command-line entry point."""
    parser = argparse.ArgumentParser(
        prog="mlt-tool",
        description="Stochastic Morris-Lecar state-transition toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} pipeline")
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--jobs", type=int, default=None, help="parallel sweep workers")
    p = sub.add_parser("plot-data", help="emit gnuplot data for an artifact")
    p.add_argument("--artifact", required=True)
    p.add_argument("--style", required=True, choices=sorted(_GP_STUBS))
    p.add_argument("--out", default=None)
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "plot-data":
        try:
            for path in emit_plotdata(args.artifact, args.style, args.out):
                print(path)
        except UnknownArtifactError as err:
            print(f"error: {err}", file=sys.stderr)
            return 2
        return 0

    try:
        config = parse_config(args.config)
    except (ParseError, ValidationError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    overrides = {"kind": args.command}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output"] = args.out
    jobs = args.jobs if args.jobs is not None else config.jobs
    if os.environ.get("MLT_JOBS"):
        jobs = min(jobs, int(os.environ["MLT_JOBS"]))
    overrides["jobs"] = max(1, jobs)
    config = replace(config, **overrides)
    status, manifest = run(args.command, config)
    n_art = len(manifest["artifacts"])
    print(f"{args.command}: {n_art} artifacts in {config.output}")
    for warning in manifest["warnings"]:
        print(f"warning: {warning}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
