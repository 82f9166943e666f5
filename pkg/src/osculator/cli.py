"""Command-line front end.

    osculator coeffs   --config scenario.json --at "x=0.785,0;y=0,1"
    osculator geodesic --config scenario.json --out-dir runs/
    osculator jacobi   --config scenario.json --oracle --out-dir runs/
    osculator verify   [--suite NAME] [--seed 42] [--out-dir DIR]

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 integration failure.

Scenario files are JSON::

    {
      "model": {"kind": "sphere", "n": 2, "params": {"radius": 1.0}},
      "force": {"kind": "zero", "params": {}},
      "initial": {"x": [1.5707963, 0], "y": [0, 1], "w": [0, 0], "w_dot": [1, 0]},
      "integrator": {"dt": 0.001, "t_end": 1.5707963},
      "diff": {"mode": "analytic"},
      "outputs": {"trajectory_csv": "sphere.csv", "report_json": "sphere.json"}
    }

Only ``model`` is required. Missing sections take the defaults shown by
``ScenarioConfig.to_dict``.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import verify
from .connections import (
    berwald_coefficients,
    curvature_R,
    miron_dual_coefficients,
    our_dual_coefficients,
    spray_coefficients,
    spray_jet,
)
from .dynamics import (
    IntegratorConfig,
    deviation_oracle,
    horizontality_residual,
    integrate_jacobi,
    integrate_trajectory,
    ours_provider,
    sup_interior,
    v2_residual,
)
from .geom_core import (
    DiffStrategy,
    FirstOrderState,
    GeometryError,
    IntegrationError,
    SecondOrderState,
    metric_tensor,
)
from .models import ForceSpec, ModelSpec, build_force, build_model

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_INTEGRATION = 0, 1, 2, 3


class ConfigError(Exception):
    """Invalid scenario, flag or state; maps to exit code 2."""


def _vector(value, n, what):
    try:
        v = [float(a) for a in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a list of {n} numbers") from None
    if len(v) != n:
        raise ConfigError(f"{what} has {len(v)} components, model has n={n}")
    if not all(np.isfinite(v)):
        raise ConfigError(f"{what} must be finite")
    return v


@dataclass
class ScenarioConfig:
    model: ModelSpec
    force: ForceSpec = field(default_factory=ForceSpec)
    initial: dict = field(default_factory=dict)
    integrator: dict = field(default_factory=lambda: {"dt": 1e-3, "t_end": 1.0})
    diff: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("scenario must be a JSON object")
        unknown = set(raw) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
        if "model" not in raw or not isinstance(raw["model"], dict):
            raise ConfigError("scenario needs a 'model' object")
        try:
            model = ModelSpec.from_dict(raw["model"])
            force = ForceSpec.from_dict(raw.get("force") or {})
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        n = model.n

        init = dict(raw.get("initial") or {})
        bad = set(init) - {"x", "y", "w", "w_dot"}
        if bad:
            raise ConfigError(f"unknown initial keys: {', '.join(sorted(bad))}")
        defaults = {"x": [0.0] * n, "y": [1.0] + [0.0] * (n - 1),
                    "w": [0.0] * n, "w_dot": [0.0] * (n - 1) + [1.0]}
        initial = {k: _vector(init.get(k, defaults[k]), n, f"initial.{k}") for k in defaults}

        integ = dict(raw.get("integrator") or {})
        bad = set(integ) - {"dt", "t_end"}
        if bad:
            raise ConfigError(f"unknown integrator keys: {', '.join(sorted(bad))}")
        try:
            integrator = {"dt": float(integ.get("dt", 1e-3)), "t_end": float(integ.get("t_end", 1.0))}
            IntegratorConfig(**integrator)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"integrator: {exc}") from exc

        try:
            diff = asdict(DiffStrategy(**(raw.get("diff") or {})))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"diff: {exc}") from exc

        outputs = dict(raw.get("outputs") or {})
        bad = set(outputs) - {"trajectory_csv", "report_json"}
        if bad:
            raise ConfigError(f"unknown outputs keys: {', '.join(sorted(bad))}")
        return cls(model, force, initial, integrator, diff, {k: str(v) for k, v in outputs.items()})

    def to_dict(self):
        return {"model": self.model.to_dict(), "force": self.force.to_dict(),
                "initial": {k: list(v) for k, v in self.initial.items()},
                "integrator": dict(self.integrator), "diff": dict(self.diff),
                "outputs": dict(self.outputs)}

    # built objects
    def build(self):
        try:
            model = build_model(self.model)
            force = build_force(self.force, self.model.n)
        except (ValueError, TypeError, GeometryError) as exc:
            raise ConfigError(str(exc)) from exc
        if force.n != model.n:
            raise ConfigError(f"force dimension {force.n} does not match model n={model.n}")
        return model, force

    @property
    def diff_strategy(self):
        return DiffStrategy(**self.diff)

    @property
    def integrator_config(self):
        return IntegratorConfig(**self.integrator)


def load_config(path):
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg} at line {exc.lineno}") from exc
    return ScenarioConfig.parse(raw)


def parse_at(text, n):
    """Parse ``"x=a,b;y=c,d;y2=e,f"``; y2 is optional (None if absent)."""
    parts = {}
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        key, sep, val = chunk.partition("=")
        key = key.strip()
        if not sep or key not in ("x", "y", "y2"):
            raise ConfigError(f"--at expects 'x=..;y=..;y2=..', got {chunk!r}")
        try:
            parts[key] = _vector([float(v) for v in val.split(",")], n, f"--at {key}")
        except ValueError:
            raise ConfigError(f"--at {key} must be comma-separated numbers") from None
    if "x" not in parts or "y" not in parts:
        raise ConfigError("--at needs both x and y")
    return parts["x"], parts["y"], parts.get("y2")


# --- output helpers ----------------------------------------------------------

def _jsonable(a):
    return np.asarray(a, dtype=float).tolist()


def _write_csv(path, columns):
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    np.savetxt(path, data, fmt="%.16e", delimiter=",", header=",".join(names), comments="")


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _out_paths(cfg, out_dir, stem):
    out = Path(out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    csv = out / cfg.outputs.get("trajectory_csv", f"{stem}.csv")
    rep = out / cfg.outputs.get("report_json", f"{stem}_summary.json")
    return csv, rep


def _trajectory_columns(traj, res_h1, res_h2):
    cols = {"t": traj.t}
    for label, arr in (("x", traj.x), ("y", traj.y), ("y2", traj.y2)):
        for i in range(traj.n):
            cols[f"{label}_{i + 1}"] = arr[:, i]
    cols["res_h1"], cols["res_h2"] = res_h1, res_h2
    return cols


# --- commands -----------------------------------------------------------------

def cmd_coeffs(cfg, at):
    model, force = cfg.build()
    d = cfg.diff_strategy
    x, y, y2 = parse_at(at, model.n)
    x, y = np.array(x), np.array(y)
    s1 = FirstOrderState(x, y)
    G = spray_coefficients(model, s1, d)
    if y2 is None:
        y2 = -G + 0.5 * force(x, y)
    s2 = SecondOrderState(x, y, np.array(y2))
    ours = our_dual_coefficients(model, force, s2, d)
    miron = miron_dual_coefficients(model, s2, d)
    return {
        "g": _jsonable(metric_tensor(model, s1, d)),
        "G": _jsonable(G),
        "N": _jsonable(spray_jet(model, x, y, d).N),
        "L_berwald": _jsonable(berwald_coefficients(model, s1, d)),
        "R_tor": _jsonable(curvature_R(model, s1, d)),
        "M1_ours": _jsonable(ours.M1),
        "M2_ours": _jsonable(ours.M2),
        "M1_miron": _jsonable(miron.M1),
        "M2_miron": _jsonable(miron.M2),
        "state": {"x": _jsonable(x), "y": _jsonable(y), "y2": _jsonable(y2)},
    }


def _base_run(cfg):
    model, force = cfg.build()
    d = cfg.diff_strategy
    init = FirstOrderState(np.array(cfg.initial["x"]), np.array(cfg.initial["y"]))
    if model.check_domain(init.x):
        raise ConfigError(f"initial point outside the chart: {model.check_domain(init.x)}")
    traj = integrate_trajectory(model, force, init, cfg.integrator_config, d)
    h1, h2 = horizontality_residual(traj, ours_provider(model, force, d))
    return model, force, d, init, traj, h1, h2


def _summary(command, cfg, traj, h1, h2):
    return {
        "command": command,
        "scenario": cfg.to_dict(),
        "nsteps": len(traj) - 1,
        "step": traj.dt,
        "x_final": _jsonable(traj.x[-1]),
        "y_final": _jsonable(traj.y[-1]),
        "sup_res_h1": sup_interior(h1),
        "sup_res_h2": sup_interior(h2),
    }


def cmd_geodesic(cfg, out_dir=None):
    _, _, _, _, traj, h1, h2 = _base_run(cfg)
    csv, rep = _out_paths(cfg, out_dir, "geodesic")
    _write_csv(csv, _trajectory_columns(traj, h1, h2))
    summary = _summary("geodesic", cfg, traj, h1, h2)
    summary["csv"] = csv.name
    _write_json(rep, summary)
    return summary


def cmd_jacobi(cfg, out_dir=None, oracle=False):
    model, force, d, init, traj, h1, h2 = _base_run(cfg)
    w0, w0dot = np.array(cfg.initial["w"]), np.array(cfg.initial["w_dot"])
    jac = integrate_jacobi(model, force, traj, w0, w0dot, d)
    res = v2_residual(jac, ours_provider(model, force, d))
    cols = _trajectory_columns(jac, h1, h2)
    for label, arr in (("w", jac.w), ("w1", jac.w1)):
        for i in range(jac.n):
            cols[f"{label}_{i + 1}"] = arr[:, i]
    cols["res_v2"] = res
    csv, rep = _out_paths(cfg, out_dir, "jacobi")
    _write_csv(csv, cols)
    summary = _summary("jacobi", cfg, jac, h1, h2)
    summary.update(csv=csv.name, sup_res_v2=sup_interior(res), w_final=_jsonable(jac.w[-1]))
    if oracle:
        ref = deviation_oracle(model, force, init, w0, w0dot, cfg.integrator_config, diff=d)
        scale = max(float(np.max(np.abs(ref.w))), 1e-300)
        summary["oracle"] = {"sup_abs_error": float(np.max(np.abs(jac.w - ref.w))),
                             "sup_rel_error": float(np.max(np.abs(jac.w - ref.w))) / scale}
    _write_json(rep, summary)
    return summary


def cmd_verify(suite="all", seed=verify.DEFAULT_SEED, out_dir=None, stream=None):
    stream = stream or sys.stdout
    try:
        report = verify.run_suite(suite, seed)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None
    for r in report.records:
        tol = r.tolerance if not isinstance(r.tolerance, tuple) else list(r.tolerance)
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<34} {r.model:<26} "
              f"{r.sup_residual:.3e} {r.relation} {tol}", file=stream)
    print(f"overall: {'PASS' if report.passed else 'FAIL'} ({len(report.records)} records, seed {seed})",
          file=stream)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "verify_report.json", report.to_dict())
    return report


# --- entry point ---------------------------------------------------------------

def _seed(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="osculator", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coeffs", help="print g, G, N, L, R and both dual coefficient pairs as JSON")
    c.add_argument("--config", required=True)
    c.add_argument("--at", required=True, help='state as "x=..;y=..;y2=.." (y2 defaults to the extension value)')
    c.add_argument("--out-dir")

    for name, helptext in (("geodesic", "integrate a trajectory and its horizontality residuals"),
                           ("jacobi", "integrate a deviation field and its v2 residual")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True)
        s.add_argument("--out-dir")
        if name == "jacobi":
            s.add_argument("--oracle", action="store_true",
                           help="compare against finite-difference of perturbed trajectories")

    v = sub.add_parser("verify", help="run the verification suite")
    v.add_argument("--suite", default="all", help="all or one of: " + ", ".join(sorted(verify.CHECKS)))
    v.add_argument("--seed", type=_seed, default=verify.DEFAULT_SEED)
    v.add_argument("--out-dir")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        if args.command == "verify":
            report = cmd_verify(args.suite, args.seed, args.out_dir)
            return EXIT_OK if report.passed else EXIT_VERIFY
        cfg = load_config(args.config)
        if args.command == "coeffs":
            result = cmd_coeffs(cfg, args.at)
            if args.out_dir:
                out = Path(args.out_dir)
                out.mkdir(parents=True, exist_ok=True)
                _write_json(out / cfg.outputs.get("report_json", "coeffs.json"), result)
        elif args.command == "geodesic":
            result = cmd_geodesic(cfg, args.out_dir)
        else:
            result = cmd_jacobi(cfg, args.out_dir, args.oracle)
        print(json.dumps(result, indent=2, sort_keys=True))
        return EXIT_OK
    except IntegrationError as exc:
        print(f"error: integration failed: {exc}".splitlines()[0], file=sys.stderr)
        return EXIT_INTEGRATION
    except (ConfigError, GeometryError, ValueError) as exc:
        print(f"error: {exc}".splitlines()[0], file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
