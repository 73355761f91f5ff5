"""Experiment orchestration: JSON config in, CSV/JSON tables and reports out.

Subcommands: ``decay | homodyne | rabi | analyze``.  A run validates its
whole config before touching the filesystem, spawns trajectory workers up to
``--threads``, merges results in trajectory order, and writes tables with
shortest round-trip float formatting.  Identical (config, seed) therefore
produce byte-identical outputs for any thread count.

Exit codes: 0 ok, 2 config/schema error, 3 I/O error, 4 analysis thresholds
violated under ``--strict``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import models, rabi, stats
from .core import Model, ModelParams, derive_stream
from .homodyne import (
    EnsembleAutocorrelation,
    NoiseModel,
    default_kick,
    iter_homodyne_records,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_ANALYSIS = 4

KS_HEADROOM = 2.5  # acceptance thresholds are 2.5 x the 1.36/sqrt(n) asymptotic
DIP_SIGMA = 5.0

SCHEMAS = {
    "decay_times": ["traj_id", "t_decay"],
    "events": ["traj_id", "t", "kind", "occupation_before", "occupation_after"],
    "signal": ["traj_id", "t", "current", "sigma_x"],
    "fluorescence": ["bin_center", "intensity", "se", "torrey"],
    "drop_histogram": ["a_center", "count", "density_analytic"],
    "autocorrelation": ["lag", "zeta"],
    "spectrum": ["freq", "power"],
}


class ConfigError(ValueError):
    """Invalid or missing configuration; the message names the field."""


class SchemaError(ValueError):
    """An input table does not match its declared schema."""


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

_COMMON_KEYS = {"seed", "out_dir", "threads", "format"}
_ALLOWED_KEYS = {
    "decay": _COMMON_KEYS
    | {"model", "gamma", "beta", "omega0", "omega1", "dt", "t_max", "n_traj", "record_steps"},
    "homodyne": _COMMON_KEYS
    | {
        "gamma",
        "beta",
        "omega0",
        "omega1",
        "dt",
        "t_max",
        "n_traj",
        "alpha_mag",
        "theta",
        "noise",
        "kick",
        "max_lag",
    },
    "rabi": _COMMON_KEYS
    | {
        "model",
        "gamma",
        "beta",
        "omega0",
        "omega1",
        "omega_rabi",
        "dt",
        "t_max",
        "n_traj",
        "bin_width",
        "drop_bins",
    },
}
_REQUIRED_KEYS = {
    "decay": ["model", "gamma", "dt", "t_max", "n_traj"],
    "homodyne": ["gamma", "dt", "t_max", "n_traj", "noise"],
    "rabi": ["model", "gamma", "omega_rabi", "dt", "t_max", "n_traj"],
}
_DEFAULTS = {
    "beta": 0.0,
    "omega0": 0.0,
    "omega1": 0.0,
    "omega_rabi": 0.0,
    "seed": 0,
    "threads": 1,
    "format": "csv",
    "record_steps": False,
    "theta": 0.0,
    "alpha_mag": 1.0,
    "kick": None,
    "max_lag": 100,
    "bin_width": 0.25,
    "drop_bins": 20,
}


def load_config(path: str, command: str, overrides: Dict) -> Dict:
    """Read, merge and validate the JSON config for one subcommand.

    Unknown keys are rejected so typos cannot silently change a run; an
    invalid config never produces any output file.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    allowed = _ALLOWED_KEYS[command]
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys {unknown}; allowed keys are {sorted(allowed)}")

    cfg = dict(raw)
    for key, val in overrides.items():
        if val is not None:
            cfg[key] = val
    for key, val in _DEFAULTS.items():
        if key in allowed:
            cfg.setdefault(key, val)

    missing = [k for k in _REQUIRED_KEYS[command] if k not in cfg]
    if missing:
        raise ConfigError(f"{missing[0]}: required field is missing")

    _check_types(cfg, command)
    return cfg


def _check_types(cfg: Dict, command: str) -> None:
    def num(key, allow_none=False):
        if key not in cfg:
            return
        v = cfg[key]
        if v is None and allow_none:
            return
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{key}: must be a number, got {v!r}")
        if not math.isfinite(float(v)):
            raise ConfigError(f"{key}: must be finite, got {v!r}")

    def integer(key):
        if key not in cfg:
            return
        v = cfg[key]
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{key}: must be an integer, got {v!r}")

    for key in ("gamma", "beta", "omega0", "omega1", "omega_rabi", "dt", "t_max", "theta", "alpha_mag", "bin_width"):
        num(key)
    num("kick", allow_none=True)
    for key in ("n_traj", "seed", "threads", "max_lag", "drop_bins"):
        integer(key)
    if "record_steps" in cfg and not isinstance(cfg["record_steps"], bool):
        raise ConfigError(f"record_steps: must be true or false, got {cfg['record_steps']!r}")
    if "model" in cfg:
        try:
            Model(cfg["model"])
        except ValueError:
            raise ConfigError(f"model: must be one of qmop|swf|nsm, got {cfg['model']!r}") from None
    if "noise" in cfg:
        try:
            NoiseModel(cfg["noise"])
        except ValueError:
            raise ConfigError(
                f"noise: must be one of white|nsm_point_process, got {cfg['noise']!r}"
            ) from None
    if "format" in cfg and cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"format: must be csv or json, got {cfg['format']!r}")
    if cfg.get("threads", 1) < 1:
        raise ConfigError(f"threads: must be >= 1, got {cfg['threads']}")
    if cfg.get("max_lag", 1) < 1:
        raise ConfigError(f"max_lag: must be >= 1, got {cfg['max_lag']}")
    if cfg.get("drop_bins", 1) < 1:
        raise ConfigError(f"drop_bins: must be >= 1, got {cfg['drop_bins']}")
    if command == "rabi" and cfg.get("bin_width", 1.0) <= 0:
        raise ConfigError(f"bin_width: must be > 0, got {cfg['bin_width']}")
    if command == "homodyne" and cfg["noise"] == "nsm_point_process":
        if cfg.get("kick") is None and not cfg.get("beta", 0.0) > 0.0:
            raise ConfigError("beta: must be > 0 for nsm_point_process noise (or give kick)")


def _model_params(cfg: Dict, model: Optional[str] = None) -> ModelParams:
    try:
        return ModelParams(
            gamma=float(cfg["gamma"]),
            dt=float(cfg["dt"]),
            t_max=float(cfg["t_max"]),
            n_traj=int(cfg["n_traj"]),
            seed=int(cfg["seed"]),
            model=Model(model if model is not None else cfg.get("model", "qmop")),
            beta=float(cfg.get("beta", 0.0)),
            omega0=float(cfg.get("omega0", 0.0)),
            omega1=float(cfg.get("omega1", 0.0)),
            omega_rabi=float(cfg.get("omega_rabi", 0.0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _provenance(cfg: Dict, command: str) -> Dict:
    """Config echo for summary.json: the scientific parameters plus the seed.

    Execution details (threads, out_dir, format) are excluded so outputs are
    byte-identical across thread counts and destinations.
    """
    skip = {"threads", "out_dir", "format"}
    out = {k: v for k, v in sorted(cfg.items()) if k not in skip}
    out["command"] = command
    return out


# ---------------------------------------------------------------------------
# table I/O
# ---------------------------------------------------------------------------


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table(out_dir: str, name: str, header: Sequence[str], rows, fmt: str) -> str:
    """Write one table as CSV (or a JSON array of row objects)."""
    if fmt == "json":
        path = os.path.join(out_dir, f"{name}.json")
        parts = []
        for row in rows:
            obj = {
                k: (v.item() if isinstance(v, np.generic) else v) for k, v in zip(header, row)
            }
            parts.append(json.dumps(obj))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("[\n" + ",\n".join(parts) + "\n]\n" if parts else "[]\n")
        return path
    path = os.path.join(out_dir, f"{name}.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")
    return path


def write_summary(out_dir: str, payload: Dict) -> str:
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def read_table(out_dir: str, name: str) -> Optional[Dict[str, list]]:
    """Read a table written by this tool; returns None when absent.

    The header (or JSON keys) must match the declared schema exactly; the
    first offending column is named in the error.
    """
    schema = SCHEMAS[name]
    csv_path = os.path.join(out_dir, f"{name}.csv")
    json_path = os.path.join(out_dir, f"{name}.json")
    if os.path.exists(csv_path):
        with open(csv_path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise SchemaError(f"{name}.csv: empty file, expected header {schema}")
        header = lines[0].split(",")
        _check_schema(name, header, schema)
        cols: Dict[str, list] = {k: [] for k in schema}
        for line in lines[1:]:
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != len(schema):
                raise SchemaError(f"{name}.csv: row has {len(cells)} cells, expected {len(schema)}")
            for k, c in zip(schema, cells):
                cols[k].append(c)
        return cols
    if os.path.exists(json_path):
        with open(json_path, "r", encoding="utf-8") as fh:
            rows = json.load(fh)
        cols = {k: [] for k in schema}
        for row in rows:
            _check_schema(name, list(row.keys()), schema)
            for k in schema:
                cols[k].append(row[k])
        return cols
    return None


def _check_schema(name: str, header: List[str], schema: List[str]) -> None:
    if header == schema:
        return
    for i, want in enumerate(schema):
        got = header[i] if i < len(header) else "<missing>"
        if got != want:
            raise SchemaError(f"{name}: column {i + 1} expected {want!r}, got {got!r}")
    raise SchemaError(f"{name}: unexpected extra columns {header[len(schema):]!r}")


_GNUPLOT = {
    "decay": """# gnuplot convenience script
set datafile separator ','
set key autotitle columnhead
set logscale y
plot 'decay_times.csv' using 2:(1.0) smooth cumulative title 'decay-time ECDF'
pause -1
""",
    "homodyne": """# gnuplot convenience script
set datafile separator ','
set key autotitle columnhead
plot 'autocorrelation.csv' using 1:2 with lines title 'zeta'
pause -1
plot 'spectrum.csv' using 1:2 with lines title 'power'
pause -1
""",
    "rabi": """# gnuplot convenience script
set datafile separator ','
set key autotitle columnhead
plot 'fluorescence.csv' using 1:2 with errorbars title 'intensity', \\
     'fluorescence.csv' using 1:4 with lines title 'damped-oscillation law'
pause -1
""",
}


def _write_gnuplot(out_dir: str, command: str) -> None:
    with open(os.path.join(out_dir, "plots.gp"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_GNUPLOT[command])


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_decay(cfg: Dict) -> int:
    params = _model_params(cfg)
    out_dir = cfg["out_dir"]
    fmt = cfg["format"]
    threads = int(cfg["threads"])

    if cfg.get("record_steps"):
        records = _decay_records_with_steps(params)
        decay_times = np.array(
            [math.nan if r.decay_time is None else r.decay_time for r in records]
        )
        event_rows = [
            (r.traj_id, ev.t, ev.kind.value, ev.occupation_before, ev.occupation_after)
            for r in records
            for ev in r.events
        ]
        drop_samples = np.array([ev.a_before for r in records for ev in r.nsm_events])
        flags = sorted({f for r in records for f in r.flags})
        n_censored = int(np.isnan(decay_times).sum())
    else:
        summary = models.run_decay_ensemble(params, threads=threads)
        decay_times = summary.decay_times
        tbl = summary.events
        event_rows = list(
            zip(tbl.traj_id, tbl.t, tbl.kind, tbl.occupation_before, tbl.occupation_after)
        )
        drop_samples = summary.drop_samples
        flags = sorted(summary.flags)
        n_censored = summary.n_censored

    os.makedirs(out_dir, exist_ok=True)
    observed = ~np.isnan(decay_times)
    write_table(
        out_dir,
        "decay_times",
        SCHEMAS["decay_times"],
        zip(np.flatnonzero(observed), decay_times[observed]),
        fmt,
    )
    write_table(out_dir, "events", SCHEMAS["events"], event_rows, fmt)

    payload = {
        "config": _provenance(cfg, "decay"),
        "n_censored": n_censored,
        "n_observed": int(observed.sum()),
        "n_events": len(event_rows),
        "flags": list(flags),
    }
    if params.model is Model.NSM and drop_samples is not None and drop_samples.size >= 2:
        mean_a, var_a, se_a = stats.mean_var_se(drop_samples)
        analytic = models.occupation_drop_moments(params.gamma, params.beta)
        payload["moments"] = {
            "empirical_mean_a": mean_a,
            "empirical_std_a": math.sqrt(var_a),
            "se_mean_a": se_a,
            "analytic_mean_a": analytic.mean_a,
            "analytic_std_a": analytic.std_a,
            "r": analytic.r,
            "n_drop_samples": int(drop_samples.size),
        }
    write_summary(out_dir, payload)
    _write_gnuplot(out_dir, "decay")
    return EXIT_OK


def _decay_records_with_steps(params: ModelParams):
    run = {
        Model.QMOP: models.run_qmop_trajectory,
        Model.SWF: models.run_swf_trajectory,
        Model.NSM: models.run_nsm_trajectory,
    }[params.model]
    return [
        run(params, derive_stream(params.seed, i), record_steps=True)
        for i in range(params.n_traj)
    ]


def cmd_homodyne(cfg: Dict) -> int:
    params = _model_params(cfg, model="nsm" if cfg["noise"] == "nsm_point_process" else "qmop")
    out_dir = cfg["out_dir"]
    fmt = cfg["format"]
    noise = NoiseModel(cfg["noise"])
    kick = cfg.get("kick")
    max_lag = min(int(cfg["max_lag"]), params.n_steps - 1)

    os.makedirs(out_dir, exist_ok=True)
    acc = EnsembleAutocorrelation(params.n_steps, max_lag)

    def rows():
        for rec in iter_homodyne_records(
            params,
            noise,
            theta=float(cfg["theta"]),
            kick=None if kick is None else float(kick),
            threads=int(cfg["threads"]),
        ):
            acc.add(rec.current)
            for t, cur, sig in zip(rec.times, rec.current, rec.sigma_x):
                yield (rec.traj_id, t, cur, sig)

    write_table(out_dir, "signal", SCHEMAS["signal"], rows(), fmt)
    zeta = acc.result()
    lags = np.arange(max_lag + 1) * params.dt
    write_table(out_dir, "autocorrelation", SCHEMAS["autocorrelation"], zip(lags, zeta), fmt)
    spec = stats.power_spectrum(zeta, params.dt)
    write_table(out_dir, "spectrum", SCHEMAS["spectrum"], zip(spec.frequencies, spec.power), fmt)

    resolved_kick = None
    if noise is NoiseModel.NSM_POINT_PROCESS:
        resolved_kick = float(kick) if kick is not None else default_kick(params.beta)
    write_summary(
        out_dir,
        {
            "config": _provenance(cfg, "homodyne"),
            "n_steps": params.n_steps,
            "max_lag": max_lag,
            "resolved_kick": resolved_kick,
            "zeta0": float(zeta[0]),
        },
    )
    _write_gnuplot(out_dir, "homodyne")
    return EXIT_OK


def cmd_rabi(cfg: Dict) -> int:
    params = _model_params(cfg)
    drive = rabi.DriveParams(omega_rabi=float(cfg["omega_rabi"]))
    out_dir = cfg["out_dir"]
    fmt = cfg["format"]
    bin_width = float(cfg["bin_width"])
    bin_steps = max(1, int(round(bin_width / params.dt)))

    ensemble = rabi.run_driven_ensemble(
        params, drive, bin_steps=bin_steps, threads=int(cfg["threads"])
    )
    series = rabi.fluorescence_from_times(
        ensemble.emission_times, ensemble.n_traj, bin_width, params.t_max
    )
    os.makedirs(out_dir, exist_ok=True)
    torrey = (
        params.gamma * rabi.torrey_occupation(drive.omega_rabi, params.gamma, series.bin_centers)
        if drive.omega_rabi > 0.0
        else np.zeros_like(series.bin_centers)
    )
    write_table(
        out_dir,
        "fluorescence",
        SCHEMAS["fluorescence"],
        zip(series.bin_centers, series.intensity, series.se, torrey),
        fmt,
    )
    payload = {
        "config": _provenance(cfg, "rabi"),
        "n_emissions": int(ensemble.emission_times.size),
        "emission_rate_tail": _tail_rate(series),
    }
    if params.model is Model.NSM:
        hist = rabi.drop_histogram_from_samples(
            ensemble.drop_emission, params.gamma, params.beta, 1.0 / int(cfg["drop_bins"])
        )
        write_table(
            out_dir,
            "drop_histogram",
            SCHEMAS["drop_histogram"],
            zip(hist.a_centers, hist.counts, hist.density_analytic),
            fmt,
        )
        payload["n_drop_samples"] = hist.n_samples
    write_summary(out_dir, payload)
    _write_gnuplot(out_dir, "rabi")
    return EXIT_OK


def _tail_rate(series: rabi.FluorescenceSeries) -> float:
    tail = series.intensity[int(0.8 * series.intensity.size) :]
    return float(tail.mean()) if tail.size else 0.0


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def cmd_analyze(out_dir: str, strict: bool) -> int:
    """Check a run directory against the package's acceptance thresholds.

    Reads whatever tables are present, writes report.json, and under
    ``--strict`` exits nonzero when any threshold check fails.
    """
    summary_path = os.path.join(out_dir, "summary.json")
    if not os.path.exists(summary_path):
        raise SchemaError(f"{summary_path}: missing (not a run directory?)")
    with open(summary_path, "r", encoding="utf-8") as fh:
        summary = json.load(fh)
    cfg = summary.get("config", {})
    checks: Dict[str, Dict] = {}

    table = read_table(out_dir, "decay_times")
    if table is not None and table["t_decay"]:
        gamma = float(cfg["gamma"])
        times = np.array([float(x) for x in table["t_decay"]])
        dist = stats.ks_distance(times, lambda t: -np.expm1(-gamma * t))
        threshold = KS_HEADROOM * 1.36 / math.sqrt(times.size)
        checks["decay_ks"] = {
            "n": int(times.size),
            "distance": float(dist),
            "threshold": threshold,
            "pass": bool(dist < threshold),
        }

    moments = summary.get("moments")
    if moments:
        dev_mean = abs(moments["empirical_mean_a"] - moments["analytic_mean_a"])
        tol = 3.0 * moments["se_mean_a"]
        checks["drop_moments"] = {
            "dev_mean_a": dev_mean,
            "tolerance": tol,
            "pass": bool(dev_mean <= tol),
        }

    table = read_table(out_dir, "autocorrelation")
    if table is not None and summary.get("n_steps"):
        zeta = np.array([float(x) for x in table["zeta"]])
        n_steps = int(summary["n_steps"])
        n_traj = int(cfg.get("n_traj", 1))
        dips = _detect_dips(zeta, n_steps, n_traj)
        checks["autocorrelation"] = {
            "dips_detected": len(dips),
            "dip_lags": dips,
            "zeta0": float(zeta[0]),
        }

    table = read_table(out_dir, "fluorescence")
    if table is not None and table["intensity"]:
        gamma = float(cfg["gamma"])
        intensity = np.array([float(x) for x in table["intensity"]])
        se = np.array([float(x) for x in table["se"]])
        tail = slice(int(0.8 * intensity.size), None)
        n_tail = intensity[tail].size
        if n_tail:
            mean_tail = float(intensity[tail].mean())
            se_tail = float(np.sqrt(np.sum(se[tail] ** 2)) / n_tail)
            dev = abs(mean_tail - gamma / 2.0)
            checks["fluorescence_tail"] = {
                "mean_intensity": mean_tail,
                "target": gamma / 2.0,
                "tolerance": 3.0 * se_tail,
                "pass": bool(dev <= 3.0 * se_tail),
            }

    gated = [c["pass"] for c in checks.values() if "pass" in c]
    report = {"source": out_dir, "checks": checks, "pass": bool(all(gated)) if gated else True}
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if strict and not report["pass"]:
        return EXIT_ANALYSIS
    return EXIT_OK


def _detect_dips(zeta: np.ndarray, n_steps: int, n_traj: int) -> List[int]:
    """Local minima of zeta dipping below the 5-SE white-noise band."""
    if zeta.size < 2 or zeta[0] <= 0.0:
        return []
    lags = np.arange(zeta.size)
    se = zeta[0] / np.sqrt(np.maximum(n_traj * (n_steps - lags), 1))
    dips = []
    for k in range(1, zeta.size):
        if zeta[k] >= -DIP_SIGMA * se[k]:
            continue
        left = zeta[k - 1]
        right = zeta[k + 1] if k + 1 < zeta.size else math.inf
        if zeta[k] <= left and zeta[k] <= right:
            dips.append(int(k))
    return dips


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdecay", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("decay", "homodyne", "rabi"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out-dir", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None, help="trajectory workers")
        p.add_argument("--format", choices=("csv", "json"), default=None)
    p = sub.add_parser("analyze")
    p.add_argument("--out-dir", required=True, help="run directory to analyze")
    p.add_argument("--strict", action="store_true", help="exit 4 when thresholds fail")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG

    try:
        if args.command == "analyze":
            return cmd_analyze(args.out_dir, args.strict)
        overrides = {
            "seed": args.seed,
            "out_dir": args.out_dir,
            "threads": args.threads,
            "format": args.format,
        }
        cfg = load_config(args.config, args.command, overrides)
        if "out_dir" not in cfg or not cfg["out_dir"]:
            raise ConfigError("out_dir: required (config key or --out-dir)")
        return {"decay": cmd_decay, "homodyne": cmd_homodyne, "rabi": cmd_rabi}[args.command](cfg)
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
