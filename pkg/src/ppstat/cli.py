"""Command-line front end: ``ppstat <subcommand> --config <path> --out <path>``.

Configuration files are flat INI sections of ``key = value`` pairs; ``;`` and
``#`` start comments, also after a value. Every key is type-checked before
any computation and unknown sections or keys are rejected. Each output gets a ``.resolved`` sidecar listing all settings with
defaults filled in.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from functools import partial

import numpy as np

from . import estimate as est
from .geometry import Window
from .intensity import Constant, ExponentialGradient, KernelEstimate, default_bandwidth, read_raster
from .moments import j_second_order, lgcp_j_oracle
from .pattern import PatternFormatError, ThinningSpec, read_pattern, write_pattern
from .plot import THEORY_HEADER, emit_plot
from .simulate import ExponentialCorrelation, GaussianFieldSpec, HardCoreSpec, sim_lgcp, sim_poisson, sim_thinned_hardcore

EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 2, 3, 4
MODELS = ("poisson", "lgcp", "hardcore-thinned")
ORACLES = ("poisson", "lgcp", "second-order")


class ConfigError(Exception):
    pass


def _choice(options):
    def parse(v):
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return v
    parse.__name__ = "one of " + "|".join(options)
    return parse


def _optional_float(v):
    return None if v.strip().lower() in ("", "none", "auto") else float(v)


def _bool(v):
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError("must be true or false")


SCHEMA = {
    "window": {"xmin": (float, 0.0), "xmax": (float, 1.0), "ymin": (float, 0.0), "ymax": (float, 1.0)},
    "intensity": {
        "type": (_choice(("exponential", "constant", "raster")), "exponential"),
        "mode": (_choice(("analytic", "estimate")), "analytic"),
        "a": (float, 100.0),
        "b": (float, 1.0),
        "value": (float, 100.0),
        "path": (str, ""),
        "bandwidth": (_optional_float, None),
        "resolution": (int, 256),
    },
    "model": {
        "type": (_choice(MODELS), "poisson"),
        "seed": (int, 1),
        "variance": (float, 1.0),
        "scale": (float, 0.1),
        "n_grid": (int, 128),
        "beta": (float, 200.0),
        "R": (float, 0.05),
        "sweeps": (int, 100_000),
        "retention_b": (float, 1.0),
    },
    "estimator": {
        "grid": (int, 64),
        "t_max": (_optional_float, None),
        "t_step": (float, 0.005),
        "lambda_bar": (_optional_float, None),
    },
    "theory": {"oracle": (_choice(ORACLES), "poisson"), "n_mc": (int, 2000), "k_table": (str, "")},
    "envelope": {"n_sim": (int, 99)},
    "output": {"plot": (_bool, False)},
}


def load_config(path, seed: int | None = None) -> dict:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",), inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError:
        raise
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = {sec: {k: default for k, (_, default) in keys.items()} for sec, keys in SCHEMA.items()}
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}] (valid: {', '.join(SCHEMA)})")
        for key, raw in parser.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {sec}.{key} (valid: {', '.join(SCHEMA[sec])})")
            conv = SCHEMA[sec][key][0]
            try:
                cfg[sec][key] = conv(raw.strip())
            except ValueError as exc:
                raise ConfigError(f"{sec}.{key} = {raw!r}: {exc}") from exc
    if seed is not None:
        cfg["model"]["seed"] = seed
    _validate(cfg)
    w = window(cfg)
    if cfg["estimator"]["t_max"] is None:
        cfg["estimator"]["t_max"] = 0.25 * min(w.width, w.height)
    if cfg["intensity"]["bandwidth"] is None:
        cfg["intensity"]["bandwidth"] = default_bandwidth(w)
    return cfg


def _validate(cfg):
    try:
        window(cfg)
    except ValueError as exc:
        raise ConfigError(f"window: {exc}") from exc
    checks = [
        ("model", "variance", lambda v: v > 0), ("model", "scale", lambda v: v > 0),
        ("model", "n_grid", lambda v: v >= 1), ("model", "beta", lambda v: v > 0),
        ("model", "R", lambda v: v > 0), ("model", "sweeps", lambda v: v >= 0),
        ("estimator", "grid", lambda v: v >= 1), ("estimator", "t_step", lambda v: v > 0),
        ("estimator", "t_max", lambda v: v is None or v >= 0),
        ("estimator", "lambda_bar", lambda v: v is None or v > 0),
        ("intensity", "bandwidth", lambda v: v is None or v > 0),
        ("intensity", "resolution", lambda v: v >= 1),
        ("theory", "n_mc", lambda v: v >= 2), ("envelope", "n_sim", lambda v: v >= 2),
    ]
    for sec, key, ok in checks:
        if not ok(cfg[sec][key]):
            raise ConfigError(f"{sec}.{key} = {cfg[sec][key]!r} is out of range")
    if cfg["intensity"]["type"] == "raster" and not cfg["intensity"]["path"]:
        raise ConfigError("intensity.path is required when intensity.type = raster")


def resolved_text(cfg) -> str:
    lines = []
    for sec, keys in cfg.items():
        lines.append(f"[{sec}]")
        for k, v in keys.items():
            lines.append(f"{k} = {'auto' if v is None else v}")
        lines.append("")
    return "\n".join(lines)


def _write_resolved(cfg, out):
    with open(f"{out}.resolved", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(resolved_text(cfg))


def window(cfg) -> Window:
    w = cfg["window"]
    return Window(w["xmin"], w["xmax"], w["ymin"], w["ymax"])


def analytic_intensity(cfg):
    s = cfg["intensity"]
    if s["type"] == "exponential":
        return ExponentialGradient(s["a"], s["b"])
    if s["type"] == "constant":
        return Constant(s["value"])
    return read_raster(s["path"])


def radii(cfg, w: Window) -> np.ndarray:
    e = cfg["estimator"]
    t_max = 0.25 * min(w.width, w.height) if e["t_max"] is None else e["t_max"]
    n = int(math.floor(t_max / e["t_step"] + 1e-9))
    return np.arange(n + 1) * e["t_step"]


def estimator_config(cfg, w: Window) -> est.EstimatorConfig:
    e = cfg["estimator"]
    return est.EstimatorConfig(grid=e["grid"], radii=tuple(radii(cfg, w)), lambda_bar=e["lambda_bar"])


def _simulate_one(cfg, seed):
    w = window(cfg)
    m = cfg["model"]
    if m["type"] == "poisson":
        return sim_poisson(analytic_intensity(cfg), w, seed)
    if m["type"] == "lgcp":
        spec = GaussianFieldSpec.for_intensity(analytic_intensity(cfg), m["variance"], m["scale"], m["n_grid"])
        return sim_lgcp(spec, w, seed)
    spec = HardCoreSpec(m["beta"], m["R"], m["sweeps"])
    return sim_thinned_hardcore(spec, ThinningSpec.exponential(m["retention_b"]), seed, w)


def _estimation_intensity(cfg, pattern):
    s = cfg["intensity"]
    if s["mode"] == "estimate":
        return KernelEstimate(pattern, s["bandwidth"], s["resolution"]).rasterize()
    return analytic_intensity(cfg)


def _estimation_model(cfg):
    if cfg["intensity"]["mode"] == "estimate":
        return partial(_estimation_intensity, cfg)
    return analytic_intensity(cfg)


def run_simulate(config_path, out, seed=None):
    cfg = load_config(config_path, seed)
    pattern = _simulate_one(cfg, cfg["model"]["seed"])
    write_pattern(pattern, out)
    _write_resolved(cfg, out)
    return pattern


def run_estimate(pattern_path, config_path, out, seed=None):
    cfg = load_config(config_path, seed)
    pattern = read_pattern(pattern_path)
    if pattern.window != window(cfg):
        # the pattern file carries its own window; record it in the resolved config
        w = pattern.window
        cfg["window"].update(xmin=w.xmin, xmax=w.xmax, ymin=w.ymin, ymax=w.ymax)
    if cfg["intensity"]["mode"] == "estimate" and len(pattern) == 0:
        raise ConfigError("intensity.mode = estimate needs a non-empty pattern")
    model = _estimation_intensity(cfg, pattern)
    if cfg["estimator"]["lambda_bar"] is None:
        cfg["estimator"]["lambda_bar"] = model.bounds(pattern.window)[0]
    table = est.j_inhom_hat(pattern, model, estimator_config(cfg, pattern.window))
    est.write_table(table, out)
    _write_resolved(cfg, out)
    if cfg["output"]["plot"]:
        emit_plot([out], f"{out}.svg")
    return table


def run_theory(config_path, out, seed=None):
    cfg = load_config(config_path, seed)
    w = window(cfg)
    t = radii(cfg, w)
    oracle = cfg["theory"]["oracle"]
    model = analytic_intensity(cfg)
    if cfg["estimator"]["lambda_bar"] is None:
        cfg["estimator"]["lambda_bar"] = model.bounds(w)[0]
    lam_bar = cfg["estimator"]["lambda_bar"]
    if oracle == "poisson":
        vals, errs = np.ones_like(t), np.zeros_like(t)
    elif oracle == "second-order":
        if cfg["theory"]["k_table"]:
            table = est.read_table(cfg["theory"]["k_table"])
            if not np.allclose(table.t, t):
                raise ConfigError("theory.k_table radii do not match the estimator radii")
            k = table.k
        else:
            k = np.ma.asarray(math.pi * t**2)
        vals = np.ma.masked_array(j_second_order(k.filled(0.0), lam_bar, t), mask=np.ma.getmaskarray(k))
        errs = np.zeros_like(t)
    else:
        m = cfg["model"]
        spec = GaussianFieldSpec(0.0, m["variance"], ExponentialCorrelation(m["scale"]), m["n_grid"])
        mu_bar = lam_bar * math.exp(-0.5 * m["variance"])
        res = lgcp_j_oracle(spec, t, cfg["theory"]["n_mc"], m["seed"], mu_bar=mu_bar,
                            spacing=min(w.width, w.height) / m["n_grid"])
        vals, errs = res[:, 0], res[:, 1]
    lines = [THEORY_HEADER]
    for ti, v, e in zip(t, np.ma.filled(np.ma.asarray(vals), np.nan), errs):
        lines.append(f"{float(ti)!r},{'NA' if math.isnan(v) else repr(float(v))},{float(e)!r}")
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_resolved(cfg, out)
    if cfg["output"]["plot"]:
        emit_plot([out], f"{out}.svg")


def run_envelope(config_path, out, seed=None, workers=None):
    cfg = load_config(config_path, seed)
    w = window(cfg)
    env = est.envelope(partial(_simulate_one, cfg), _estimation_model(cfg), estimator_config(cfg, w),
                       cfg["envelope"]["n_sim"], cfg["model"]["seed"], workers=workers)
    est.write_envelope(env, out)
    _write_resolved(cfg, out)
    if cfg["output"]["plot"]:
        emit_plot([out], f"{out}.svg")
    return env


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ppstat", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "estimate", "theory", "envelope"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True)
        s.add_argument("--out", required=True)
        s.add_argument("--seed", type=int)
        if name == "estimate":
            s.add_argument("--pattern", required=True)
    s = sub.add_parser("plot")
    s.add_argument("tables", nargs="+")
    s.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            run_simulate(args.config, args.out, args.seed)
        elif args.command == "estimate":
            run_estimate(args.pattern, args.config, args.out, args.seed)
        elif args.command == "theory":
            run_theory(args.config, args.out, args.seed)
        elif args.command == "envelope":
            run_envelope(args.config, args.out, args.seed)
        else:
            try:
                emit_plot(args.tables, args.out)
            except ValueError as exc:
                # unreadable or empty input tables, not a numeric problem
                raise PatternFormatError(str(exc)) from exc
    except ConfigError as exc:
        print(f"ppstat: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PatternFormatError as exc:
        print(f"ppstat: input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"ppstat: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"ppstat: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
