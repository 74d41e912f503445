"""Command-line experiment harness.

Experiments are described by flat ``key = value`` config files with
sections (problem, solver, grid, output, sweep). ``run`` executes one
experiment and writes a trajectory CSV plus a JSON summary; ``sweep``
repeats it over a list of sampling periods and reports the error
scaling and the structured-versus-unstructured pairing; ``list`` prints
the catalog.

Matched per-step budget convention for paired runs: a structured run
with P prediction passes and C correction passes is paired against an
unstructured run with P + C correction passes (an exact model solve
counts as its nominal P).
"""

import argparse
import configparser
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import benchmarks, navigation
from .discrete import (
    SolverConfig,
    reference_trajectory,
    run_prediction_correction,
    run_unstructured,
)
from .exceptions import ConfigError, TvtrackError
from .flows import FlowConfig, integrate_flow
from .metrics import compute_report, compute_sg, improvement_ratio, loglog_slope
from .predictors import HintStream, KalmanModel
from .problems import TimeGrid

PROBLEM_IDS = ("sinusoid_quadratic", "robot_tracking", "power_grid", "robot_nav")

DISCRETE_SOLVER_IDS = ("unstructured", "taylor", "kalman", "hint_zero",
                       "clairvoyant")
FLOW_SOLVER_IDS = ("flow",)
NAV_SOLVER_IDS = ("structured_barrier", "unstructured_barrier")

CSV_NOTE = "trajectory CSV: k,t,err,wall_ns,x_0..x_{n-1}"

_CATALOG = {
    "problems": {
        "sinusoid_quadratic": "quadratic tracking of a sinusoidal target "
                              "(omega, amplitude, dim)",
        "robot_tracking": "l1-regularized tracking of a moving 2-D target "
                          "(lam)",
        "power_grid": "box-constrained power-fleet setpoint tracking "
                      "(N, gamma, box_limit, target_L)",
        "robot_nav": "disk robot chasing a projected goal through 8 "
                     "obstacles (t_final, dt, kappa, c_rate)",
    },
    "solvers": {
        "unstructured": "correction-only running method (C passes per step)",
        "taylor": "prediction-correction with a first-order optimality model "
                  "(P, C, exact_prediction)",
        "kalman": "prediction by parameter filtering plus correction (P, C)",
        "hint_zero": "prediction from an all-zero hint stream (reduces to "
                     "unstructured)",
        "clairvoyant": "prediction with exact knowledge of the next gradient",
        "flow": "continuous-time tracking flow (kappa, dt, integrator)",
        "structured_barrier": "barrier navigation flow with drift "
                              "compensation (robot_nav only)",
        "unstructured_barrier": "barrier navigation flow without drift "
                                "compensation (robot_nav only)",
    },
    "metrics": {
        "ate_max": "max tracking error over the trailing window",
        "ate_mean": "mean tracking error over the trailing window",
        "tr": "mean per-step wall time / sampling period",
        "cr_steps": "steps until the error settles into the ATE band",
        "sg": "structured / unstructured tracking-error ratio",
        "improvement_ratio": "unstructured / structured tracking-error ratio",
        "slope": "log-log slope of ATE against the sampling period",
        "path_length": "total variation of the reference trajectory",
    },
}


@dataclass
class ExperimentConfig:
    """Validated contents of an experiment config file."""

    problem_id: str
    solver_id: str
    problem: dict
    solver: dict
    h: float
    steps: Optional[int]
    t_final: Optional[float]
    t0: float
    out_dir: str
    window: float
    seed: int
    h_values: list = field(default_factory=list)
    pair_unstructured: bool = True

    def grid_for(self, h):
        if self.steps is not None:
            k_max = self.steps
        else:
            k_max = int(round(self.t_final / h))
        return TimeGrid(h=h, k_max=max(k_max, 1), t0=self.t0)


def _section(cp, name):
    return dict(cp[name]) if cp.has_section(name) else {}


def _get(d, key, cast, default=None, required=False):
    if key not in d:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        raw = d[key]
        if cast is bool:
            return str(raw).strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {d[key]!r}") from exc


def load_config(path, out_dir=None, seed=None, window=None):
    """Parse and validate an experiment config file."""
    cp = configparser.ConfigParser()
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if not read:
        raise ConfigError(f"config file not found: {path}")
    problem = _section(cp, "problem")
    solver = _section(cp, "solver")
    grid = _section(cp, "grid")
    output = _section(cp, "output")
    sweep = _section(cp, "sweep")

    problem_id = _get(problem, "id", str, required=True)
    solver_id = _get(solver, "id", str, required=True)
    if problem_id not in PROBLEM_IDS:
        raise ConfigError(f"unknown problem id {problem_id!r}")
    all_solvers = DISCRETE_SOLVER_IDS + FLOW_SOLVER_IDS + NAV_SOLVER_IDS
    if solver_id not in all_solvers:
        raise ConfigError(f"unknown solver id {solver_id!r}")
    if problem_id == "robot_nav" and solver_id not in NAV_SOLVER_IDS:
        raise ConfigError("robot_nav requires a *_barrier solver")
    if problem_id != "robot_nav" and solver_id in NAV_SOLVER_IDS:
        raise ConfigError(f"{solver_id} applies to robot_nav only")
    if solver_id == "flow" and problem_id != "sinusoid_quadratic":
        raise ConfigError("the continuous flow solver needs a smooth "
                          "unconstrained problem (sinusoid_quadratic)")

    h = _get(grid, "h", float, required=True)
    if h <= 0:
        raise ConfigError("grid h must be positive")
    steps = _get(grid, "steps", int)
    t_final = _get(grid, "t_final", float)
    if (steps is None) == (t_final is None):
        raise ConfigError("grid needs exactly one of steps / t_final")

    h_values = []
    if "h_values" in sweep:
        try:
            h_values = [float(v) for v in sweep["h_values"].split()]
        except ValueError as exc:
            raise ConfigError("bad sweep h_values") from exc
        if len(h_values) != len(set(h_values)) or any(v <= 0 for v in h_values):
            raise ConfigError("sweep values must be positive and distinct")

    env_out = os.environ.get("TVTRACK_OUT_DIR")
    resolved_out = out_dir or env_out or _get(output, "out_dir", str,
                                              default="results")
    cfg = ExperimentConfig(
        problem_id=problem_id,
        solver_id=solver_id,
        problem=problem,
        solver=solver,
        h=h,
        steps=steps,
        t_final=t_final,
        t0=_get(grid, "t0", float, default=0.0),
        out_dir=resolved_out,
        window=window if window is not None
        else _get(output, "window", float, default=0.2),
        seed=seed if seed is not None
        else _get(output, "seed", int, default=0),
        h_values=h_values,
        pair_unstructured=_get(sweep, "pair_unstructured", bool, default=True),
    )
    if not (0 < cfg.window <= 1):
        raise ConfigError("window must lie in (0, 1]")
    return cfg


def build_problem(cfg):
    p = cfg.problem
    if cfg.problem_id == "sinusoid_quadratic":
        return benchmarks.make_sinusoid_quadratic(
            omega=_get(p, "omega", float, default=1.0),
            amplitude=_get(p, "amplitude", float, default=1.0),
            dim=_get(p, "dim", int, default=1),
        )
    if cfg.problem_id == "robot_tracking":
        return benchmarks.make_robot_tracking(
            lam=_get(p, "lam", float, default=1.0))
    if cfg.problem_id == "power_grid":
        grid_problem = benchmarks.make_power_grid(
            N=_get(p, "n", int, default=5),
            box_limit=_get(p, "box_limit", float, default=50.0),
            gamma=_get(p, "gamma", float, default=2.0),
            target_L=_get(p, "target_l", float, default=21.0),
            seed=cfg.seed,
        )
        return grid_problem.oracle()
    scene_path = p.get("scene")
    scene = (navigation.RobotScene.from_config(scene_path) if scene_path
             else navigation.default_scene(
                 gain=_get(p, "gain", float, default=2.0)))
    return scene


def _solver_config(cfg, oracle, h, solver_id=None, C=None, P=None):
    s = dict(cfg.solver)
    solver_id = solver_id or cfg.solver_id
    grid = cfg.grid_for(h)
    alpha = _get(s, "alpha", float)
    C = C if C is not None else _get(s, "c", int, default=1)
    P = P if P is not None else _get(s, "p", int, default=1)
    exact = _get(s, "exact_prediction", bool, default=False)
    common = dict(grid=grid, alpha=alpha, C=C)
    if solver_id == "unstructured":
        return SolverConfig(predictor="none", P=0, **common)
    if solver_id == "taylor":
        return SolverConfig(predictor="taylor", P=P,
                            exact_prediction=exact, **common)
    if solver_id == "kalman":
        fam = oracle.family
        if fam is None:
            raise ConfigError("kalman solver needs a parametrized problem")
        l = fam.param_dim
        km = KalmanModel(
            trans=np.eye(l),
            obs=np.eye(l),
            proc_cov=_get(s, "kalman_q", float, default=1e-4) * np.eye(l),
            obs_cov=_get(s, "kalman_r", float, default=1e-4) * np.eye(l),
            state=fam.param_at(grid.t0),
        )
        return SolverConfig(predictor="kalman", P=P, kalman=km, **common)
    if solver_id == "hint_zero":
        return SolverConfig(predictor="hint", P=P,
                            hints=HintStream.zero(oracle.dim), **common)
    if solver_id == "clairvoyant":
        return SolverConfig(predictor="clairvoyant", P=P, **common)
    raise ConfigError(f"unsupported discrete solver {solver_id!r}")


def _run_discrete(cfg, oracle, h, solver_id=None, C=None, P=None):
    sconf = _solver_config(cfg, oracle, h, solver_id=solver_id, C=C, P=P)
    if sconf.predictor == "none":
        traj = run_unstructured(oracle, sconf)
    else:
        traj = run_prediction_correction(oracle, sconf)
    if not traj.has_reference:
        refs = reference_trajectory(oracle, sconf.grid, tol=1e-9)
        traj = traj.with_reference(refs)
    return traj


def _run_flow(cfg, oracle, h):
    s = cfg.solver
    t_final = cfg.t_final if cfg.t_final is not None else cfg.steps * h
    fconf = FlowConfig(
        kappa=_get(s, "kappa", float, default=1.0),
        t_span=(cfg.t0, cfg.t0 + t_final),
        dt=h,
        x0=np.full(oracle.dim, _get(s, "x0", float, default=0.0)),
        integrator=_get(s, "integrator", str, default="rk4"),
    )
    return integrate_flow(oracle, fconf)


def _run_nav(cfg, scene, h):
    s = cfg.solver
    p = cfg.problem
    mode = "structured" if cfg.solver_id == "structured_barrier" else \
        "unstructured"
    t_final = cfg.t_final if cfg.t_final is not None else cfg.steps * h
    return navigation.run_robot_navigation(
        scene,
        mode,
        t_final=t_final,
        dt=h,
        kappa=_get(s, "kappa", float, default=0.1),
        c_rate=_get(p, "c_rate", float, default=0.1),
        ref_stride=_get(p, "ref_stride", int, default=10),
    )


def _fmt(v):
    return repr(float(v))


def _write_atomic(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".",
                               suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(ks, ts, errs, wall, decisions):
    n = decisions.shape[1]
    header = "k,t,err,wall_ns," + ",".join(f"x_{j}" for j in range(n))
    lines = [header]
    for i in range(len(ks)):
        cells = [str(int(ks[i])), _fmt(ts[i]), _fmt(errs[i]),
                 str(int(wall[i]))]
        cells += [_fmt(v) for v in decisions[i]]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _traj_csv(traj):
    ks = np.arange(len(traj))
    errs = traj.errors if traj.errors is not None else np.full(len(traj), np.nan)
    return _csv_text(ks, traj.times, errs, traj.wall_ns, traj.decisions)


def _nav_csv(record):
    # rows at reference sample times; k is the integrator step index
    stride_idx = np.searchsorted(record.times, record.ref_times)
    wall = record.wall_ns[stride_idx]
    decisions = record.estimate_path[stride_idx]
    return _csv_text(stride_idx, record.ref_times, record.errors, wall,
                     decisions)


def _summarize_nav(record, cfg, h):
    from .discrete import TrajectoryRecord

    stride_idx = np.searchsorted(record.times, record.ref_times)
    traj = TrajectoryRecord(
        times=record.ref_times,
        decisions=record.estimate_path[stride_idx],
        wall_ns=record.wall_ns[stride_idx],
    ).with_reference(record.references)
    report = compute_report(traj, h, window_fraction=cfg.window)
    summary = report.summary_dict(cfg.problem_id, cfg.solver_id, h)
    # tr against the integrator step, not the reference stride
    summary["tr"] = float(np.mean(record.wall_ns[1:]) * 1e-9 / h)
    summary["min_clearance"] = record.min_clearance()
    return summary, _nav_csv(record)


def run_experiment(cfg, h=None, tag=""):
    """Execute one experiment; returns (summary dict, csv path, json path)."""
    h = h if h is not None else cfg.h
    built = build_problem(cfg)
    if cfg.problem_id == "robot_nav":
        record = _run_nav(cfg, built, h)
        summary, csv_text = _summarize_nav(record, cfg, h)
    elif cfg.solver_id == "flow":
        traj = _run_flow(cfg, built, h)
        report = compute_report(traj, h, window_fraction=cfg.window)
        summary = report.summary_dict(cfg.problem_id, cfg.solver_id, h)
        csv_text = _traj_csv(traj)
    else:
        traj = _run_discrete(cfg, built, h)
        report = compute_report(traj, h, window_fraction=cfg.window)
        summary = report.summary_dict(cfg.problem_id, cfg.solver_id, h)
        csv_text = _traj_csv(traj)
    summary["seed"] = cfg.seed
    summary["window"] = cfg.window
    stem = f"{cfg.problem_id}_{cfg.solver_id}{tag}_h{h:g}"
    csv_path = os.path.join(cfg.out_dir, stem + ".csv")
    json_path = os.path.join(cfg.out_dir, stem + ".json")
    _write_atomic(csv_path, csv_text)
    _write_atomic(json_path, json.dumps(summary, indent=2, sort_keys=True)
                  + "\n")
    return summary, csv_path, json_path


def _paired_budget(cfg):
    s = cfg.solver
    P = _get(s, "p", int, default=1)
    C = _get(s, "c", int, default=1)
    return P + C


def sweep_h(cfg):
    """Run the experiment across the configured h values.

    Returns (report dict, exit status). Individual run failures are
    recorded and the sweep continues.
    """
    if len(cfg.h_values) < 3:
        raise ConfigError("sweep needs at least 3 h values")
    pair = cfg.pair_unstructured and cfg.solver_id in (
        "taylor", "kalman", "hint_zero", "clairvoyant")
    paired_cfg = _paired_solver_override(cfg) if pair else None
    jobs = []
    with ThreadPoolExecutor(max_workers=os.cpu_count() or 1) as pool:
        for h in cfg.h_values:
            jobs.append((h, cfg.solver_id,
                         pool.submit(run_experiment, cfg, h)))
            if pair:
                jobs.append((
                    h, "unstructured",
                    pool.submit(run_experiment, paired_cfg, h, "_paired"),
                ))
        results, failures = {}, []
        for h, solver_id, fut in jobs:
            try:
                summary, _, _ = fut.result()
                results[(h, solver_id)] = summary
            except Exception as exc:  # noqa: BLE001 - recorded per run
                failures.append({"h": h, "solver": solver_id,
                                 "error": str(exc)})
    report = {"h_values": list(cfg.h_values), "solvers": {}, "pairs": [],
              "failures": failures}
    by_solver = {}
    for (h, solver_id), summary in sorted(results.items()):
        by_solver.setdefault(solver_id, []).append((h, summary["ate_max"]))
    for solver_id, pts in by_solver.items():
        entry = {"ate_by_h": {f"{h:g}": a for h, a in pts}}
        if len(pts) >= 3 and all(a > 0 for _, a in pts):
            entry["slope"] = loglog_slope([h for h, _ in pts],
                                          [a for _, a in pts])
        report["solvers"][solver_id] = entry
    if pair:
        for h in cfg.h_values:
            s = results.get((h, cfg.solver_id))
            u = results.get((h, "unstructured"))
            if s is None or u is None:
                continue
            report["pairs"].append({
                "h": h,
                "ate_structured": s["ate_max"],
                "ate_unstructured": u["ate_max"],
                "sg": compute_sg(s["ate_max"], u["ate_max"]),
                "improvement_ratio": improvement_ratio(s["ate_max"],
                                                       u["ate_max"]),
            })
    path = os.path.join(cfg.out_dir,
                        f"sweep_{cfg.problem_id}_{cfg.solver_id}.json")
    _write_atomic(path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report, (1 if failures else 0)


def list_catalog(stream=None):
    stream = stream or sys.stdout
    for kind in ("problems", "solvers", "metrics"):
        stream.write(f"{kind}:\n")
        for name, desc in _CATALOG[kind].items():
            stream.write(f"  {name:<22} {desc}\n")
    stream.write(CSV_NOTE + "\n")


def _paired_solver_override(cfg):
    """Clone config for the budget-matched unstructured partner run."""
    import copy

    paired = copy.deepcopy(cfg)
    paired.solver_id = "unstructured"
    paired.solver = {"id": "unstructured",
                     "alpha": cfg.solver.get("alpha", ""),
                     "c": str(_paired_budget(cfg))}
    if not paired.solver["alpha"]:
        del paired.solver["alpha"]
    return paired


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="tvtrack",
        description="run and sweep time-varying optimization experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out-dir", default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--window", type=float, default=None)
    sub.add_parser("list")
    args = parser.parse_args(argv)

    if args.command == "list":
        list_catalog()
        return 0
    try:
        cfg = load_config(args.config, out_dir=args.out_dir, seed=args.seed,
                          window=args.window)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "run":
            summary, csv_path, json_path = run_experiment(cfg)
            print(json.dumps(summary, indent=2, sort_keys=True))
            print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
            return 0
        report, status = sweep_h(cfg)
        print(json.dumps(report, indent=2, sort_keys=True))
        return status
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TvtrackError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
