"""Command-line front end.

Every subcommand writes its primary output to ``--out`` (stdout when absent)
and, for file output, a ``<out>.meta.json`` sidecar echoing the resolved
configuration and library versions.  Settings come from built-in defaults,
then an optional flat ``key = value`` config file, then command-line flags.

Exit codes: 0 success, 2 invalid input, 3 no solution, 4 precision limit,
5 integrator failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import platform
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import _kernels
from .elliptic import EllipticModulus
from .errors import (
    DegenerateError,
    DomainError,
    IntegratorError,
    NoSolutionError,
    PrecisionLimitError,
    SingularityError,
)
from .ov_model import OVParams, RingState
from .simulate import (
    IntegratorConfig,
    asymptotic_trajectory,
    compare_metrics,
    initial_from_family,
    integrate_ring,
)
from .steady import family_curves, headway_asymptotic, solve_m

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_SOLUTION = 3
EXIT_PRECISION = 4
EXIT_INTEGRATOR = 5

DEFAULTS = {
    "cars": 100,
    "vmax": 2.0,
    "hc": 4.0,
    "t_start": 0.0,
    "t_end": 100.0,
    "t_step": 0.1,
    "rtol": 1e-8,
    "atol": 1e-10,
    "n_list": "1,2,3",
    "m_grid": "0.05:0.95:19",
    "initial": "family",
    "min_periods": 2.0,
    "self_compare": False,
    "jobs": 1,
    "chunk": 2000,
}

_FLOAT_KEYS = {"h", "a_sens", "vmax", "hc", "t_start", "t_end", "t_step", "rtol", "atol", "min_periods"}
_INT_KEYS = {"n", "cars", "jobs", "chunk"}
_BOOL_KEYS = {"self_compare"}
_STR_KEYS = {"n_list", "m_grid", "initial", "out"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _BOOL_KEYS | _STR_KEYS


class ConfigError(DomainError):
    """Invalid configuration value or file."""


def fmt(x) -> str:
    """17 significant digits for reals, plain text otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.17g}"
    return str(x)


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _INT_KEYS:
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        if key in _BOOL_KEYS:
            if isinstance(value, bool):
                return value
            s = str(value).strip().lower()
            if s in ("1", "true", "yes", "on"):
                return True
            if s in ("0", "false", "no", "off"):
                return False
            raise ValueError
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    return str(value)


def load_config_file(path) -> dict:
    """Read a flat ``key = value`` document (``#`` comments, no sections)."""
    text = Path(path).read_text()
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from None
    if len(cp.sections()) != 1:
        raise ConfigError("config file must be flat (no [sections])")
    out = {}
    for key, value in cp["config"].items():
        k = key.replace("-", "_")
        if k == "config":
            continue
        if k not in KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        out[k] = _coerce(k, value)
    return out


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            cfg.update(load_config_file(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    for key in KNOWN_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = _coerce(key, v)
    cfg["command"] = args.command
    return cfg


def _need(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ConfigError("missing required setting(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def parse_n_list(text: str) -> list[int]:
    try:
        out = [int(s) for s in str(text).split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--n-list must be comma-separated integers, got {text!r}") from None
    if not out or any(n < 1 for n in out):
        raise ConfigError(f"--n-list needs positive integers, got {text!r}")
    return out


def parse_m_grid(text: str) -> list[EllipticModulus]:
    """``lo:hi:count``; spaced evenly in ``ln(1 - m)`` when ``hi > 0.999``."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"--m-grid must look like lo:hi:count, got {text!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"--m-grid must look like lo:hi:count, got {text!r}") from None
    if not (0.0 < lo < 1.0 and 0.0 < hi < 1.0) or count < 1 or (count > 1 and not lo < hi):
        raise ConfigError(f"--m-grid needs 0 < lo < hi < 1 and count >= 1, got {text!r}")
    if hi > 0.999:
        comps = np.geomspace(1.0 - lo, 1.0 - hi, count)
        return [EllipticModulus.from_comp(float(c)) for c in comps]
    return [EllipticModulus.from_m(float(m)) for m in np.linspace(lo, hi, count)]


def validate(cfg: dict) -> None:
    """Reject values that break a precondition before any computation."""
    cmd = cfg["command"]
    if cfg.get("h") is not None and not math.isfinite(cfg["h"]):
        raise ConfigError("--h must be finite")
    if not cfg["vmax"] > 0:
        raise ConfigError("--vmax must be positive")
    if not math.isfinite(cfg["hc"]):
        raise ConfigError("--hc must be finite")
    if cfg["cars"] < 4:
        raise ConfigError("--cars must be at least 4")
    if cfg.get("a_sens") is not None and not cfg["a_sens"] > 0:
        raise ConfigError("--a-sens must be positive")
    if cfg["jobs"] < 1:
        raise ConfigError("--jobs must be at least 1")
    if cmd == "curves":
        _need(cfg, "h")
        for n in parse_n_list(cfg["n_list"]):
            if n > cfg["cars"] // 4:
                raise ConfigError(f"n = {n} exceeds cars/4 = {cfg['cars'] // 4}")
        parse_m_grid(cfg["m_grid"])
        return
    family = cmd in ("family", "profile", "compare") or cfg["initial"] == "family"
    if family:
        _need(cfg, "h", "a_sens", "n")
        if not 1 <= cfg["n"] <= cfg["cars"] // 4:
            raise ConfigError(f"--n must lie in [1, cars/4 = {cfg['cars'] // 4}]")
        if cfg["h"] == cfg["hc"]:
            raise ConfigError("--h equals --hc: the wave amplitude scaling is singular there")
    else:
        _need(cfg, "h", "a_sens")
    if cmd == "simulate" and cfg["initial"] not in ("family", "uniform"):
        raise ConfigError("--initial must be 'family' or 'uniform'")
    if cmd in ("profile", "simulate", "compare"):
        if not cfg["t_step"] > 0:
            raise ConfigError("--t-step must be positive")
        if not cfg["t_end"] >= cfg["t_start"] >= 0:
            raise ConfigError("need 0 <= --t-start <= --t-end")
    if cmd in ("simulate", "compare"):
        if not (cfg["rtol"] > 0 and cfg["atol"] > 0):
            raise ConfigError("--rtol and --atol must be positive")
        if cfg["chunk"] < 1:
            raise ConfigError("--chunk must be at least 1")
    if cmd == "compare" and not cfg["min_periods"] > 0:
        raise ConfigError("--min-periods must be positive")


def _params(cfg, sensitivity=None) -> OVParams:
    return OVParams(h=cfg["h"], N=cfg["cars"], sensitivity=sensitivity, v_max=cfg["vmax"], h_c=cfg["hc"])


def _family(cfg):
    return solve_m(cfg["a_sens"], cfg["n"], cfg["cars"], cfg["h"], _params(cfg))


def _time_grid(cfg) -> np.ndarray:
    return IntegratorConfig.grid(cfg["t_end"], cfg["t_step"], t_start=cfg["t_start"]).t_samples


def versions() -> dict:
    from . import __version__

    return {
        "cnoidal_traffic": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "kernel_backend": _kernels.BACKEND,
    }


class Output:
    """Primary output stream plus the metadata sidecar."""

    def __init__(self, cfg: dict, stdout=None):
        self.cfg = cfg
        self.path = cfg.get("out")
        self._stdout = stdout if stdout is not None else sys.stdout
        self.meta = {"command": cfg["command"], "config": {k: cfg[k] for k in sorted(cfg)}, "versions": versions()}

    def __enter__(self):
        self.fh = open(self.path, "w", newline="") if self.path else self._stdout
        return self

    def __exit__(self, exc_type, exc, tb):
        if self.path:
            self.fh.close()
            if exc_type is None:
                Path(str(self.path) + ".meta.json").write_text(json.dumps(self.meta, indent=2, sort_keys=True) + "\n")
        return False

    def csv_writer(self):
        return csv.writer(self.fh, lineterminator="\n")

    def write_json(self, doc: dict):
        self.fh.write(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def cmd_family(cfg, stdout=None) -> int:
    sol = _family(cfg)
    doc = sol.as_dict()
    doc["roots_m_comp"] = list(sol.roots)
    with Output(cfg, stdout) as out:
        out.meta["result"] = _jsonable(doc)
        out.write_json(doc)
    return EXIT_OK


def _curve_rows(job):
    h, n, grid, N, vmax, hc = job
    rows = family_curves(h, [n], grid, N, OVParams(h=h, N=N, v_max=vmax, h_c=hc))
    return [(r.n, r.m, r.sensitivity, r.wave_speed, r.valid, r.m_comp) for r in rows]


def cmd_curves(cfg, stdout=None) -> int:
    n_list = parse_n_list(cfg["n_list"])
    grid = parse_m_grid(cfg["m_grid"])
    jobs = [(cfg["h"], n, grid, cfg["cars"], cfg["vmax"], cfg["hc"]) for n in n_list]
    if cfg["jobs"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg["jobs"]) as ex:
            blocks = list(ex.map(_curve_rows, jobs))
    else:
        blocks = [_curve_rows(j) for j in jobs]
    with Output(cfg, stdout) as out:
        w = out.csv_writer()
        w.writerow(["n", "m", "a_sens", "wave_speed", "valid", "m_comp"])
        n_valid = 0
        for block in blocks:
            for row in block:
                n_valid += bool(row[4])
                w.writerow([fmt(v) for v in row])
        out.meta["rows"] = sum(len(b) for b in blocks)
        out.meta["valid_rows"] = n_valid
    return EXIT_OK


def cmd_profile(cfg, stdout=None) -> int:
    sol = _family(cfg)
    ts = _time_grid(cfg)
    j = np.arange(sol.N)
    with Output(cfg, stdout) as out:
        w = out.csv_writer()
        w.writerow(["t", "j", "headway_asym"])
        for t in ts:
            x = headway_asymptotic(j, t, sol)
            w.writerows([fmt(t), fmt(int(k)), fmt(v)] for k, v in zip(j, x))
        out.meta["family"] = _jsonable(sol.as_dict())
    return EXIT_OK


def _run(cfg, writer=None):
    if cfg["initial"] == "uniform" and cfg["command"] == "simulate":
        sol = None
        params = _params(cfg, cfg["a_sens"])
        init = RingState.uniform(params)
    else:
        sol = _family(cfg)
        params = sol.ov_params
        init = initial_from_family(sol)
    config = IntegratorConfig(_time_grid(cfg), rtol=cfg["rtol"], atol=cfg["atol"])
    sink = None
    if writer is not None:
        j = [fmt(k) for k in range(params.N)]

        def sink(t, x, v):
            for ti, row in zip(t, x):
                tt = fmt(ti)
                writer.writerows([tt, jj, fmt(val)] for jj, val in zip(j, row))

    traj = integrate_ring(init, params, config, sink=sink, chunk=cfg["chunk"])
    return sol, traj


def cmd_simulate(cfg, stdout=None) -> int:
    with Output(cfg, stdout) as out:
        w = out.csv_writer()
        w.writerow(["t", "j", "headway_num"])
        sol, traj = _run(cfg, w)
        out.meta["stats"] = {
            "n_accepted": traj.stats.n_accepted,
            "n_rejected": traj.stats.n_rejected,
            "n_rhs": traj.stats.n_rhs,
            "rtol": cfg["rtol"],
            "atol": cfg["atol"],
            "backend": traj.backend,
            "final_finite": bool(np.all(np.isfinite(traj.final.headway))),
        }
        if sol is not None:
            out.meta["family"] = _jsonable(sol.as_dict())
    return EXIT_OK


def cmd_compare(cfg, stdout=None) -> int:
    if cfg["self_compare"]:
        sol = _family(cfg)
        traj = asymptotic_trajectory(sol, IntegratorConfig(_time_grid(cfg)))
    else:
        sol, traj = _run(cfg)
    metrics = compare_metrics(traj, sol, min_periods=cfg["min_periods"])
    doc = metrics.as_dict()
    with Output(cfg, stdout) as out:
        out.meta["metrics"] = _jsonable(doc)
        out.meta["family"] = _jsonable(sol.as_dict())
        out.meta["stats"] = {
            "n_accepted": traj.stats.n_accepted,
            "n_rejected": traj.stats.n_rejected,
            "n_rhs": traj.stats.n_rhs,
            "backend": traj.backend,
        }
        out.write_json(doc)
    return EXIT_OK


COMMANDS = {
    "family": cmd_family,
    "curves": cmd_curves,
    "profile": cmd_profile,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--h", type=float, help="mean headway")
    g.add_argument("--a-sens", dest="a_sens", type=float, help="driver sensitivity (inverse delay time)")
    g.add_argument("--n", type=int, help="number of wave periods around the ring")
    g.add_argument("--cars", type=int, help="number of cars N (default 100)")
    g.add_argument("--vmax", type=float, help="maximal velocity (default 2)")
    g.add_argument("--hc", type=float, help="inflection headway of the velocity function (default 4)")
    g.add_argument("--out", help="output file (default stdout)")
    g.add_argument("--config", help="flat key = value file; flags take precedence")

    timing = argparse.ArgumentParser(add_help=False)
    t = timing.add_argument_group("time grid")
    t.add_argument("--t-start", dest="t_start", type=float, help="first sample time (default 0)")
    t.add_argument("--t-end", dest="t_end", type=float, help="last sample time (default 100)")
    t.add_argument("--t-step", dest="t_step", type=float, help="sampling interval (default 0.1)")

    integ = argparse.ArgumentParser(add_help=False)
    i = integ.add_argument_group("integrator")
    i.add_argument("--rtol", type=float, help="relative tolerance (default 1e-8)")
    i.add_argument("--atol", type=float, help="absolute tolerance (default 1e-10)")
    i.add_argument("--chunk", type=int, help="samples per streamed block (default 2000)")

    p = argparse.ArgumentParser(prog="cnoidal-traffic", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("family", parents=[common], help="solve for the family member at a given sensitivity")
    c = sub.add_parser("curves", parents=[common], help="tabulate sensitivity and wave speed against m")
    c.add_argument("--n-list", dest="n_list", help="comma-separated wave counts (default 1,2,3)")
    c.add_argument("--m-grid", dest="m_grid", help="lo:hi:count; log spacing in 1-m when hi > 0.999")
    c.add_argument("--jobs", type=int, help="worker processes (default 1)")
    sub.add_parser("profile", parents=[common, timing], help="sample the asymptotic headway field")
    s = sub.add_parser("simulate", parents=[common, timing, integ], help="integrate the ring numerically")
    s.add_argument("--initial", choices=("family", "uniform"), help="initial state (default family)")
    cm = sub.add_parser("compare", parents=[common, timing, integ], help="simulate and compare with the asymptotic wave")
    cm.add_argument("--min-periods", dest="min_periods", type=float,
                    help="wave periods in the amplitude/phase window (default 2)")
    cm.add_argument("--self", dest="self_compare", action="store_const", const=True,
                    help="compare the asymptotic field with itself")
    return p


def main(argv=None, stdout=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = resolve(args)
        validate(cfg)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                return COMMANDS[cfg["command"]](cfg, stdout)
            finally:
                for w in caught:
                    print(f"cnoidal-traffic: warning: {w.message}", file=sys.stderr)
    except NoSolutionError as exc:
        _err(exc)
        return EXIT_NO_SOLUTION
    except (PrecisionLimitError, SingularityError) as exc:
        _err(exc)
        return EXIT_PRECISION
    except IntegratorError as exc:
        _err(exc)
        return EXIT_INTEGRATOR
    except (DomainError, DegenerateError, ValueError) as exc:
        _err(exc)
        return EXIT_INVALID


def _err(exc):
    print(f"cnoidal-traffic: error: {exc}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
