"""Command line entry point: ``swlab verify|flow|residuals --config FILE``."""
import argparse
import configparser
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import acs, checks, sw
from .errors import ConfigInvalid, IoError, SwlabError
from .io import load_field, save_field
from .lattice import GaugeField, Lattice4
from .target import TorusAction

SCHEMA_VERSION = 1
OUTPUT_ENV = "SWLAB_OUTPUT_DIR"


class Config:
    """Thin typed accessor over an INI file."""

    def __init__(self, path):
        self.path = Path(path)
        self.parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            with open(self.path) as fh:
                self.parser.read_file(fh)
        except OSError as exc:
            raise IoError(f"cannot read config {self.path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigInvalid(f"{self.path}: {exc}") from exc

    def _raw(self, section, key, default):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key)
        return default

    def _convert(self, section, key, default, conv):
        raw = self._raw(section, key, None)
        if raw is None:
            return default
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigInvalid(f"{self.path}: [{section}] {key} = {raw!r}: {exc}") from exc

    def get(self, section, key, default=None):
        return self._raw(section, key, default)

    def int(self, section, key, default=None):
        return self._convert(section, key, default, int)

    def float(self, section, key, default=None):
        return self._convert(section, key, default, float)

    def list(self, section, key, default=(), conv=str):
        return self._convert(
            section, key, default, lambda s: tuple(conv(t.strip()) for t in s.split(",") if t.strip())
        )

    def matrix(self, section, key, default=None):
        """Rows separated by ';', entries by ','."""
        return self._convert(
            section,
            key,
            default,
            lambda s: [[float(t) for t in row.split(",") if t.strip()] for row in s.split(";") if row.strip()],
        )


def output_dir(cfg):
    out = os.environ.get(OUTPUT_ENV) or cfg.get("run", "output_dir", "swlab-output")
    path = Path(out)
    if not path.is_absolute() and OUTPUT_ENV not in os.environ:
        path = cfg.path.parent / path
    path.mkdir(parents=True, exist_ok=True)
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def write_report(path, report):
    report = {"schema_version": SCHEMA_VERSION, **report}
    path.write_text(json.dumps(_jsonable(report), indent=2))
    return report


def cmd_verify(cfg, suites=None):
    seed = cfg.int("run", "seed", 0)
    names = suites or cfg.list("verify", "suites", checks.DEFAULT_SUITES)
    unknown = [n for n in names if n not in checks.SUITES]
    if unknown:
        raise ConfigInvalid(f"{cfg.path}: [verify] suites: unknown suite(s) {', '.join(unknown)}")
    opts = {
        "grids": cfg.list("verify", "grids", (8, 16), int),
        "samples": cfg.int("verify", "samples", 1000),
        "jets": cfg.int("verify", "jets", 100),
        "flow_steps": cfg.int("verify", "flow_steps", 500),
    }
    results = {}
    for name in names:
        rng = np.random.default_rng([seed, sorted(checks.SUITES).index(name)])
        t0 = time.perf_counter()
        try:
            res = checks.SUITES[name](opts, rng)
        except Exception as exc:  # reported, other suites continue
            res = {"pass": False, "error": f"{type(exc).__name__}: {exc}"}
        res["seconds"] = round(time.perf_counter() - t0, 3)
        results[name] = res
    report = {
        "command": "verify",
        "seed": seed,
        "suites": results,
        "pass": all(r["pass"] for r in results.values()),
    }
    return write_report(output_dir(cfg) / "verify_report.json", report)


def _flow_lattice(cfg):
    N = cfg.int("flow", "grid", 8)
    length = cfg.float("flow", "length", 2 * np.pi)
    if N < 3:
        raise ConfigInvalid(f"{cfg.path}: [flow] grid must be at least 3")
    return Lattice4.cubic(N, length)


def _initial_profile(cfg, lattice):
    profile = cfg.get("flow", "profile", "rotation")
    if profile == "constant":
        return acs.constant_profile(lattice), lattice
    if profile == "rotation":
        wobble = cfg.float("flow", "wobble", 0.3)
        tilt = cfg.float("flow", "tilt", 0.1)
        return acs.rotation_profile(lattice, wobble, tilt), lattice
    if profile == "snapshot":
        path = cfg.get("flow", "snapshot")
        if not path:
            raise ConfigInvalid(f"{cfg.path}: [flow] profile = snapshot needs a snapshot path")
        data, lat, _ = load_field(cfg.path.parent / path)
        return acs.normalize(data), lat
    raise ConfigInvalid(f"{cfg.path}: [flow] profile = {profile!r} is not constant, rotation or snapshot")


def cmd_flow(cfg):
    lattice = _flow_lattice(cfg)
    omega, lattice = _initial_profile(cfg, lattice)
    cd = checks.trig_conformal(lattice) if cfg.get("flow", "conformal", "none") == "trig" else None
    steps = cfg.int("flow", "steps", 500)
    step = cfg.float("flow", "step", lattice.spacing**2 / 8)
    tol = cfg.float("flow", "tol", 0.0)
    out = output_dir(cfg)
    rows = []

    def violations(om):
        return acs.theorem2_residual(om, lattice, cd).violations

    counts = {0: violations(omega)}
    omega, hist = acs.flow(
        omega, lattice, steps, step, cd, tol, callback=lambda k, om, e, g: counts.__setitem__(k, violations(om))
    )
    with open(out / "flow_trajectory.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "energy", "max_grad", "violations"])
        for k, e, g in hist:
            rows.append((k, e, g))
            writer.writerow([k, repr(e), repr(g), counts[k]])
    final_report = acs.theorem2_residual(omega, lattice, cd)
    save_field(out / "flow_final.bin", omega, lattice, "twistor")
    energies = [r[1] for r in rows]
    report = {
        "command": "flow",
        "grid": list(lattice.dims),
        "h": lattice.spacing,
        "steps": len(rows) - 1,
        "initial_energy": energies[0],
        "final_energy": energies[-1],
        "final_max_grad": rows[-1][2],
        "monotone": bool(all(b < a for a, b in zip(energies, energies[1:]))),
        "initial_violations": counts[0],
        "final": final_report.summary(),
    }
    report["pass"] = report["monotone"]
    return write_report(out / "flow_report.json", report)


def _action_from_config(cfg):
    weights = cfg.list("residuals", "weights", (1.0,), float)
    aux = cfg.matrix("residuals", "aux_weights", None)
    try:
        return TorusAction(np.array(weights), None if not aux else np.array(aux))
    except ValueError as exc:
        raise ConfigInvalid(f"{cfg.path}: [residuals] weights/aux_weights: {exc}") from exc


def cmd_residuals(cfg, spinor_path, gauge_path):
    action = _action_from_config(cfg)
    u, lattice, _ = load_field(spinor_path)
    g, glat, _ = load_field(gauge_path)
    if glat.dims != lattice.dims or u.shape[-2] != action.n:
        raise IoError(f"{gauge_path}: lattice or target size does not match {spinor_path}")
    g = g.reshape(lattice.dims + (4, -1))
    b = GaugeField(g[..., 0], g[..., 1:])
    if g.shape[-1] - 1 != action.m:
        raise ConfigInvalid(f"{cfg.path}: gauge file has {g.shape[-1] - 1} auxiliary generators, config {action.m}")
    flags = []
    if action.m:
        res = sw.modified_sw_residual(u, b, action, lattice)
    else:
        res = sw.sw_residual(u, b, action, lattice)
    report = sw.residual_report(lattice, res, flags=flags)
    try:
        om, r = acs.omega_from_spinor(u, action)
        t2 = acs.theorem2_residual(om, lattice)
        report["theorem2"] = t2.summary()
        report["moment_norm"] = {"min": float(r.min()), "max": float(r.max())}
        if r.min() < 1e-4:
            flags.append("near-singular-set")
    except SwlabError as exc:
        flags.append(f"theorem2 skipped: {exc}")
    report["command"] = "residuals"
    report["pass"] = True
    return write_report(output_dir(cfg) / "residuals_report.json", report)


def build_parser():
    p = argparse.ArgumentParser(prog="swlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--config", required=True)
    v.add_argument("--suite", action="append", choices=sorted(checks.SUITES))
    f = sub.add_parser("flow", help="gradient flow of the twistor energy")
    f.add_argument("--config", required=True)
    r = sub.add_parser("residuals", help="residuals of stored fields")
    r.add_argument("--config", required=True)
    r.add_argument("--spinor", required=True)
    r.add_argument("--gauge", required=True)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = Config(args.config)
        if args.command == "verify":
            report = cmd_verify(cfg, args.suite)
        elif args.command == "flow":
            report = cmd_flow(cfg)
        else:
            report = cmd_residuals(cfg, args.spinor, args.gauge)
    except SwlabError as exc:
        print(f"swlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    summary = {k: v for k, v in report.items() if k in ("command", "pass")}
    if "suites" in report:
        summary["suites"] = {k: v["pass"] for k, v in report["suites"].items()}
    print(json.dumps(summary))
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
