"""Batch front-end: config ingestion, sweeps, disorder farming, CSV output.

Configs are TOML documents with a ``spec_version`` field, a ``kind``, a
``[params]`` table and optional ``[[sweep]]`` axes; see docs/schema.md and
the configs/ directory for worked examples.  Every run is reproducible from
the config plus the base seed alone: task seeds derive deterministically
from the base seed, rows are written in task order regardless of worker
completion order, and floats are formatted with a fixed rule, so identical
config + seed yields byte-identical result tables.

Commands:
    sense validate <config>
    sense run <config> [--jobs N] [--seed S] [--out DIR]
    sense fit <csv> --x <col> --y <col>

The SENSE_LOG environment variable sets the log level (DEBUG, INFO, ...).
"""

from __future__ import annotations

import argparse
import csv as _csv
import hashlib
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .model import (
    DIPOLAR_2D_MEANFIELD,
    ISING_1D_NN,
    DisorderSpec,
    SignalSpec,
    SpinEnsembleSpec,
)

log = logging.getLogger("sense")

__all__ = ["ExperimentConfig", "RunManifest", "run", "fit", "validate_config", "main"]

KINDS = (
    "parity-protocol",
    "excitation-protocol",
    "ipr",
    "kz",
    "dispersion",
    "sensitivity",
    "imager",
)

EXPONENT_PRESETS = {"ising_1d_nn": ISING_1D_NN, "dipolar_2d_meanfield": DIPOLAR_2D_MEANFIELD}

#: required / defaulted entries of [params], per experiment kind
KIND_PARAMS = {
    "ipr": {
        "required": ["n", "disorder_w"],
        "defaults": {"j": 1.0, "n_states": 50, "omega": None, "boundary": "periodic"},
    },
    "kz": {
        "required": ["n", "jt_p"],
        "defaults": {"j": 1.0, "omega_start": None, "omega_stop": 0.0, "rtol": 1e-8},
    },
    "dispersion": {
        "required": ["n", "omega"],
        "defaults": {"j": 1.0},
    },
    "parity-protocol": {
        "required": ["n", "b", "omega_s", "t_p", "t_s"],
        "defaults": {
            "j": 1.0,
            "t_r": None,
            "omega_init": 8.0,
            "ramp_shape": "gap-paced",
            "omega_detuned": None,
            "bias_phase": 0.0,
            "w_omega": 0.0,
            "w_j": 0.0,
            "w_theta": 0.0,
            "max_step": 0.01,
            "boundary": "periodic",
        },
    },
    "excitation-protocol": {
        "required": ["n", "b", "omega_s", "t_p", "t_s", "omega_stop", "delta_omega"],
        "defaults": {
            "j": 1.0,
            "t_r": None,
            "omega_init": 40.0,
            "ramp_shape": "gap-paced",
            "omega_detuned": None,
            "w_omega": 0.0,
            "w_j": 0.0,
            "w_theta": 0.0,
            "max_step": 0.01,
            "boundary": "periodic",
        },
    },
    "sensitivity": {
        "required": ["regime", "n", "t", "t2"],
        "defaults": {"j": 1.0, "d": 1, "exponents": "ising_1d_nn", "xi": None, "t_s": None},
    },
    "imager": {
        "required": ["density"],
        "defaults": {"lambda_opt": 500e-9, "t2_single": 3e-3, "j0": None, "total_time": 1.0},
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description."""

    kind: str
    params: dict
    sweep: list
    realizations: int
    seed: int
    out: str
    spec_version: int = 1
    source_text: str = ""

    def config_hash(self) -> str:
        return hashlib.sha256(self.source_text.encode()).hexdigest()[:16]


@dataclass
class RunManifest:
    """Written before results, updated atomically as tasks finish."""

    path: str
    config_hash: str
    kind: str
    tool_version: str = __version__
    tasks: list = field(default_factory=list)
    completed: list = field(default_factory=list)
    failed: list = field(default_factory=list)
    status: str = "running"
    wall_clock_s: float = 0.0

    def write(self):
        payload = {
            "tool_version": self.tool_version,
            "config_hash": self.config_hash,
            "kind": self.kind,
            "status": self.status,
            "tasks": self.tasks,
            "completed": self.completed,
            "failed": self.failed,
            "wall_clock_s": round(self.wall_clock_s, 3),
        }
        tmp = self.path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=1, sort_keys=True)
            f.write("\n")
        os.replace(tmp, self.path)


class ConfigError(Exception):
    """Schema violation with a field-level message."""


def _expect(cond, message):
    if not cond:
        raise ConfigError(message)


def _sweep_values(axis: dict) -> list:
    if "values" in axis:
        vals = axis["values"]
        _expect(isinstance(vals, list) and len(vals) > 0, f"sweep.{axis.get('param')}: 'values' must be a non-empty list")
        return [float(v) for v in vals]
    for key in ("start", "stop", "num"):
        _expect(key in axis, f"sweep.{axis.get('param')}: missing '{key}' (or give explicit 'values')")
    num = axis["num"]
    _expect(isinstance(num, int) and num > 0, f"sweep.{axis.get('param')}: 'num' must be a positive integer")
    scale = axis.get("scale", "linear")
    _expect(scale in ("linear", "log"), f"sweep.{axis.get('param')}: scale must be 'linear' or 'log'")
    if scale == "log":
        _expect(axis["start"] > 0 and axis["stop"] > 0, f"sweep.{axis.get('param')}: log grid needs positive bounds")
        return [float(v) for v in np.geomspace(axis["start"], axis["stop"], num)]
    return [float(v) for v in np.linspace(axis["start"], axis["stop"], num)]


def validate_config(text: str) -> ExperimentConfig:
    """Parse and schema-check a TOML config; raises ConfigError on violation."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML: {exc}") from exc
    _expect("spec_version" in doc, "missing top-level 'spec_version'")
    _expect(doc["spec_version"] == 1, f"unsupported spec_version {doc['spec_version']}")
    _expect("kind" in doc, "missing top-level 'kind'")
    kind = doc["kind"]
    _expect(kind in KINDS, f"kind: unknown experiment {kind!r}; expected one of {KINDS}")
    seed = doc.get("seed", 0)
    _expect(isinstance(seed, int), "seed: must be an integer")
    realizations = doc.get("realizations", 1)
    _expect(isinstance(realizations, int) and realizations >= 1, "realizations: must be an integer >= 1")
    out = doc.get("out", "results")
    _expect(isinstance(out, str) and out, "out: must be a non-empty string")
    params = dict(doc.get("params", {}))
    sweep_raw = doc.get("sweep", [])
    _expect(isinstance(sweep_raw, list), "sweep: must be an array of tables")
    sweep = []
    for axis in sweep_raw:
        _expect("param" in axis, "sweep: each axis needs a 'param' name")
        sweep.append({"param": axis["param"], "values": _sweep_values(axis)})
    schema = KIND_PARAMS[kind]
    swept = {ax["param"] for ax in sweep}
    for req in schema["required"]:
        _expect(
            req in params or req in swept,
            f"params.{req}: required for kind '{kind}' (either in [params] or as a sweep axis)",
        )
    known = set(schema["required"]) | set(schema["defaults"])
    for key in params:
        _expect(key in known, f"params.{key}: unknown parameter for kind '{kind}'")
    for key in swept:
        _expect(key in known, f"sweep.{key}: unknown parameter for kind '{kind}'")
    merged = dict(schema["defaults"])
    merged.update(params)
    if kind == "sensitivity":
        _expect(
            merged["exponents"] in EXPONENT_PRESETS,
            f"params.exponents: unknown preset {merged['exponents']!r}",
        )
    return ExperimentConfig(
        kind=kind,
        params=merged,
        sweep=sweep,
        realizations=realizations,
        seed=seed,
        out=out,
        spec_version=doc["spec_version"],
        source_text=text,
    )


# ---------------------------------------------------------------------------
# experiment row builders: one task = one grid point x one realization


def _rows_ipr(params, task_seed, realization):
    from .freefermion import ipr_realization

    spec = SpinEnsembleSpec(
        n=int(params["n"]),
        j=params["j"],
        boundary=params["boundary"],
        disorder=DisorderSpec(w_omega=params["disorder_w"], w_j=params["disorder_w"], seed=task_seed),
    )
    val = ipr_realization(spec, omega=params["omega"], n_states=int(params["n_states"]))
    return [{"disorder_w": params["disorder_w"], "realization": realization, "ipr": val}]


def _rows_kz(params, task_seed, realization):
    from .freefermion import kz_ramp

    spec = SpinEnsembleSpec(n=int(params["n"]), j=params["j"], boundary="periodic")
    res = kz_ramp(
        spec,
        t_p=params["jt_p"] / params["j"],
        omega_start=params["omega_start"],
        omega_stop=params["omega_stop"],
        rtol=params["rtol"],
    )
    return [{"jt_p": params["jt_p"], "n_ex": res.n_ex, "xi": res.xi}]


def _rows_dispersion(params, task_seed, realization):
    from .freefermion import dispersion

    ks, eps = dispersion(params["omega"], params["j"], int(params["n"]))
    return [{"k": float(k), "eps_k": float(e), "omega": params["omega"]} for k, e in zip(ks, eps)]


def _protocol_spec(params, task_seed):
    return SpinEnsembleSpec(
        n=int(params["n"]),
        j=params["j"],
        boundary=params["boundary"],
        disorder=DisorderSpec(
            w_omega=params["w_omega"], w_j=params["w_j"], w_theta=params["w_theta"], seed=task_seed
        ),
    )


def _rows_parity(params, task_seed, realization):
    from .protocol import parity_schedule, quarter_fringe_bias, run_parity_protocol

    spec = _protocol_spec(params, task_seed)
    signal = SignalSpec(b=params["b"], omega_s=params["omega_s"])
    sched = parity_schedule(
        signal,
        t_p=params["t_p"],
        t_s=params["t_s"],
        t_r=params["t_r"],
        omega_init=params["omega_init"],
        ramp_shape=params["ramp_shape"],
        omega_detuned=params["omega_detuned"],
    )
    bias = params["bias_phase"]
    if bias == "quarter":
        bias = quarter_fringe_bias("parity", spec.n)
    res = run_parity_protocol(spec, sched, signal, bias_phase=float(bias), max_step=params["max_step"])
    return [
        {
            "b": params["b"],
            "t_s": params["t_s"],
            "realization": realization,
            "parity": res.parity,
            "ghz_fidelity": res.ghz_fidelity,
            "excitations": res.excitations,
            "phase": res.phase_estimate,
        }
    ]


def _rows_excitation(params, task_seed, realization):
    from .protocol import excitation_schedule, run_excitation_protocol

    spec = _protocol_spec(params, task_seed)
    signal = SignalSpec(b=params["b"], omega_s=params["omega_s"])
    sched = excitation_schedule(
        signal,
        t_p=params["t_p"],
        t_s=params["t_s"],
        omega_stop=params["omega_stop"],
        delta_omega=params["delta_omega"],
        t_r=params["t_r"],
        omega_init=params["omega_init"],
        omega_detuned=params["omega_detuned"],
    )
    res = run_excitation_protocol(spec, sched, signal, max_step=params["max_step"])
    return [
        {
            "b": params["b"],
            "delta_omega": params["delta_omega"],
            "t_s": params["t_s"],
            "realization": realization,
            "n_ex": res.excitations,
            "n_ex_var": res.excitation_var,
            "parity": res.parity,
        }
    ]


def _rows_sensitivity(params, task_seed, realization):
    from .scaling import sensitivity

    exps = EXPONENT_PRESETS[params["exponents"]]
    val = sensitivity(
        params["regime"],
        params["n"],
        params["t"],
        params["t2"],
        j=params["j"],
        exponents=exps,
        d=int(params["d"]),
        xi=params["xi"],
        t_s=params["t_s"],
    )
    return [
        {
            "regime": params["regime"],
            "n": params["n"],
            "t": params["t"],
            "t2": params["t2"],
            "delta_b_inv": val,
        }
    ]


def _rows_imager(params, task_seed, realization):
    from .scaling import NV_J0, imager_budget

    j0 = params["j0"] if params["j0"] is not None else NV_J0
    pts = imager_budget(
        [params["density"]],
        lambda_opt=params["lambda_opt"],
        t2_single=params["t2_single"],
        j0=j0,
        total_time=params["total_time"],
    )
    p = pts[0]
    return [
        {
            "density": p.density,
            "spacing": p.spacing,
            "n_probe": p.n_probe,
            "j_dd": p.j_dd,
            "chi": p.chi,
            "db_inv_conventional": p.db_inv_conventional,
            "db_inv_protocol": p.db_inv_protocol,
            "regime": p.regime,
        }
    ]


_ROW_BUILDERS = {
    "ipr": _rows_ipr,
    "kz": _rows_kz,
    "dispersion": _rows_dispersion,
    "parity-protocol": _rows_parity,
    "excitation-protocol": _rows_excitation,
    "sensitivity": _rows_sensitivity,
    "imager": _rows_imager,
}

_COLUMNS = {
    "ipr": ["disorder_w", "realization", "ipr"],
    "kz": ["jt_p", "n_ex", "xi"],
    "dispersion": ["k", "eps_k", "omega"],
    "parity-protocol": ["b", "t_s", "realization", "parity", "ghz_fidelity", "excitations", "phase"],
    "excitation-protocol": ["b", "delta_omega", "t_s", "realization", "n_ex", "n_ex_var", "parity"],
    "sensitivity": ["regime", "n", "t", "t2", "delta_b_inv"],
    "imager": [
        "density",
        "spacing",
        "n_probe",
        "j_dd",
        "chi",
        "db_inv_conventional",
        "db_inv_protocol",
        "regime",
    ],
}


def _task_list(config: ExperimentConfig):
    """Cartesian sweep grid x realizations, with deterministic per-task seeds."""
    grids = [(ax["param"], ax["values"]) for ax in config.sweep]
    points = [{}]
    for name, values in grids:
        points = [dict(p, **{name: v}) for v in values for p in points]
    seeds = np.random.SeedSequence(config.seed).spawn(len(points) * config.realizations)
    tasks = []
    tid = 0
    for point in points:
        for r in range(config.realizations):
            params = dict(config.params)
            params.update(point)
            tasks.append(
                {
                    "id": tid,
                    "params": params,
                    "realization": r,
                    "seed": int(seeds[tid].generate_state(1)[0]),
                }
            )
            tid += 1
    return tasks


def _execute_task(payload):
    kind, task = payload
    return task["id"], _ROW_BUILDERS[kind](task["params"], task["seed"], task["realization"])


def _format_value(v) -> str:
    if isinstance(v, float):
        if v != v:  # nan
            return "nan"
        if v == int(v) and abs(v) < 1e15:
            return str(int(v))
        return f"{v:.12g}"
    return str(v)


def _write_csv(path, kind, columns, rows_by_task, config):
    buf = io.StringIO()
    buf.write(f"# floqsense {__version__} results\n")
    buf.write(f"# kind: {kind}\n")
    buf.write(f"# config_hash: {config.config_hash()}\n")
    buf.write(f"# seed: {config.seed}\n")
    buf.write(f"# columns: {', '.join(columns)} (units: see docs/schema.md)\n")
    writer = _csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for tid in sorted(rows_by_task):
        for row in rows_by_task[tid]:
            writer.writerow([_format_value(row[c]) for c in columns])
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        f.write(buf.getvalue())
    os.replace(tmp, path)


def run(config_path: str, jobs: int = None, seed: int = None, out: str = None) -> int:
    """Execute an experiment config; returns a process exit code."""
    try:
        with open(config_path, "rb") as f:
            text = f.read().decode("utf-8")
        config = validate_config(text)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    if seed is not None:
        config = ExperimentConfig(
            kind=config.kind,
            params=config.params,
            sweep=config.sweep,
            realizations=config.realizations,
            seed=seed,
            out=config.out,
            spec_version=config.spec_version,
            source_text=config.source_text,
        )
    out_dir = out or config.out
    os.makedirs(out_dir, exist_ok=True)
    tasks = _task_list(config)
    manifest = RunManifest(
        path=os.path.join(out_dir, "manifest.json"),
        config_hash=config.config_hash(),
        kind=config.kind,
        tasks=[{"id": t["id"], "seed": t["seed"]} for t in tasks],
    )
    manifest.write()
    t0 = time.time()
    jobs = jobs or os.cpu_count() or 1
    payloads = [(config.kind, t) for t in tasks]
    rows_by_task = {}
    log.info("running %d tasks (%s) with %d workers", len(tasks), config.kind, jobs)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            futures = {ex.submit(_execute_task, p): p[1]["id"] for p in payloads}
            for fut, tid in futures.items():
                try:
                    _, rows = fut.result()
                    rows_by_task[tid] = rows
                    manifest.completed.append(tid)
                except Exception as exc:  # noqa: BLE001 - recorded, run continues
                    log.warning("task %d failed: %s", tid, exc)
                    manifest.failed.append({"id": tid, "error": str(exc)})
                manifest.write()
    else:
        for payload in payloads:
            tid = payload[1]["id"]
            try:
                _, rows = _execute_task(payload)
                rows_by_task[tid] = rows
                manifest.completed.append(tid)
            except Exception as exc:  # noqa: BLE001
                log.warning("task %d failed: %s", tid, exc)
                manifest.failed.append({"id": tid, "error": str(exc)})
            manifest.write()
    csv_path = os.path.join(out_dir, f"{config.kind}.csv")
    _write_csv(csv_path, config.kind, _COLUMNS[config.kind], rows_by_task, config)
    manifest.status = "complete" if not manifest.failed else "partial"
    manifest.wall_clock_s = time.time() - t0
    manifest.write()
    print(f"{len(manifest.completed)}/{len(tasks)} tasks ok -> {csv_path}")
    return 0 if not manifest.failed else 1


def read_result_csv(path: str):
    """Read a results CSV (skipping the # header block) into column arrays."""
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    reader = _csv.reader(lines)
    header = next(reader)
    cols = {name: [] for name in header}
    for row in reader:
        for name, val in zip(header, row):
            cols[name].append(val)
    return cols


def fit(results_path: str, x_column: str, y_column: str) -> int:
    """Power-law fit of one results column against another; appends the
    summary to <results>.fit.txt."""
    from .freefermion import fit_power_law

    try:
        cols = read_result_csv(results_path)
    except OSError as exc:
        print(f"error: cannot read results: {exc}", file=sys.stderr)
        return 2
    for name in (x_column, y_column):
        if name not in cols:
            print(f"error: column {name!r} not in {results_path} (have {sorted(cols)})", file=sys.stderr)
            return 2
    try:
        xs = np.array([float(v) for v in cols[x_column]])
        ys = np.array([float(v) for v in cols[y_column]])
        res = fit_power_law(xs, ys)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    line = (
        f"power-law fit {y_column} ~ {x_column}^s: s = {res.exponent:.6g} "
        f"+/- {res.stderr:.3g}, prefactor = {res.prefactor:.6g}, points = {len(xs)}"
    )
    print(line)
    with open(results_path + ".fit.txt", "a", encoding="utf-8") as f:
        f.write(line + "\n")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("SENSE_LOG", "WARNING").upper())
    parser = argparse.ArgumentParser(prog="sense", description="Floquet sensing laboratory batch runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--out", default=None, help="override the output directory")

    p_val = sub.add_parser("validate", help="schema-check a config")
    p_val.add_argument("config")

    p_fit = sub.add_parser("fit", help="power-law fit of a results table")
    p_fit.add_argument("results")
    p_fit.add_argument("--x", required=True, dest="x_column")
    p_fit.add_argument("--y", required=True, dest="y_column")

    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.config, jobs=args.jobs, seed=args.seed, out=args.out)
    if args.command == "validate":
        try:
            with open(args.config, "rb") as f:
                validate_config(f.read().decode("utf-8"))
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
        except ConfigError as exc:
            print(f"error: invalid config: {exc}", file=sys.stderr)
            return 2
        print("config ok")
        return 0
    if args.command == "fit":
        return fit(args.results, args.x_column, args.y_column)
    return 2


if __name__ == "__main__":
    sys.exit(main())
