"""Command-line entry point: run, sweep, and verify pipelines.

Configuration is flat ``key = value`` text with bracketed section headers
([scenario], [params], [run], [sweep]); keys mirror the corresponding field
names and unknown keys are hard errors so a misspelled physics constant can
never silently fall back to a default.  All output files are written to a
temporary name and renamed on completion.
"""

import argparse
import configparser
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .constitutive import GasParameters
from .domain import ScenarioSpec, validate_parameters
from .errors import BlowUpError, ConfigError, WindowOutOfDomain
from .functionals import (
    DiagnosticsRecord,
    representation_check,
    temperature_envelope_check,
    theta_bound_from_Y,
)
from .integrator import run_simulation

__all__ = ["RunConfig", "SweepConfig", "load_run_config", "load_sweep_config",
           "run_command", "sweep_command", "verify_command", "main"]

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_VERIFY = 4

_PARAM_KEYS = {
    "R": "R", "Cv": "Cv", "a": "a", "mu": "mu", "kappa1": "kappa1",
    "kappa2": "kappa2", "b": "b", "d": "d", "lambda": "lam",
    "K_react": "K_react", "A": "A", "beta": "beta",
}
_SCENARIO_KEYS = (
    "family", "amplitude_v", "amplitude_u", "amplitude_theta", "amplitude_z",
    "width", "L", "N", "T_end", "cfl", "picard_tol", "picard_max_iters",
    "floor_v", "floor_theta",
)
_RUN_KEYS = ("output_dir", "sample_cadence", "probes", "emit_snapshots", "snapshot_times")
_SWEEP_KEYS = ("b_values", "beta_values", "max_parallel")


@dataclass
class RunConfig:
    """A scenario plus output and probe settings for one simulation."""

    scenario: ScenarioSpec
    output_dir: str = "out"
    sample_cadence: float = 0.1
    probes: list = field(default_factory=lambda: [2])
    emit_snapshots: bool = False
    snapshot_times: list = field(default_factory=list)

    def __post_init__(self):
        if self.sample_cadence <= 0:
            raise ConfigError("sample_cadence must be > 0")
        for k in self.probes:
            if k < 0:
                raise ConfigError("probe window indices must be >= 0")


@dataclass
class SweepConfig:
    """Grid of conductivity/rate exponents layered over a base run."""

    base: RunConfig
    b_values: list
    beta_values: list
    max_parallel: int = 1

    def __post_init__(self):
        if not self.b_values or not self.beta_values:
            raise ConfigError("sweep value lists must be nonempty")
        if self.max_parallel < 1:
            raise ConfigError("max_parallel must be >= 1")


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_list(text, conv):
    items = [s.strip() for s in text.split(",") if s.strip()]
    return [conv(s) for s in items]


def _read_ini(path):
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, "r") as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path!r}: {exc}") from exc
    return parser


def _check_keys(parser, section, allowed):
    if not parser.has_section(section):
        return
    unknown = set(parser.options(section)) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")


def _build_params(parser) -> GasParameters:
    _check_keys(parser, "params", _PARAM_KEYS)
    kwargs = {}
    if parser.has_section("params"):
        for key, value in parser.items("params"):
            try:
                kwargs[_PARAM_KEYS[key]] = float(value)
            except ValueError as exc:
                raise ConfigError(f"parameter {key} = {value!r} is not a number") from exc
    return GasParameters(**kwargs)


def _build_scenario(parser, params) -> ScenarioSpec:
    _check_keys(parser, "scenario", _SCENARIO_KEYS)
    kwargs = {"params": params}
    if parser.has_section("scenario"):
        for key, value in parser.items("scenario"):
            if key == "family":
                kwargs[key] = value.strip()
            elif key in ("N", "picard_max_iters"):
                try:
                    kwargs[key] = int(value)
                except ValueError as exc:
                    raise ConfigError(f"{key} = {value!r} is not an integer") from exc
            else:
                try:
                    kwargs[key] = float(value)
                except ValueError as exc:
                    raise ConfigError(f"{key} = {value!r} is not a number") from exc
    return ScenarioSpec(**kwargs)


def load_run_config(path) -> RunConfig:
    parser = _read_ini(path)
    for section in parser.sections():
        if section not in ("scenario", "params", "run", "sweep"):
            raise ConfigError(f"unknown section [{section}]")
    params = _build_params(parser)
    scenario = _build_scenario(parser, params)
    _check_keys(parser, "run", _RUN_KEYS)
    kwargs = {}
    if parser.has_section("run"):
        section = dict(parser.items("run"))
        if "output_dir" in section:
            kwargs["output_dir"] = section["output_dir"].strip()
        if "sample_cadence" in section:
            kwargs["sample_cadence"] = float(section["sample_cadence"])
        if "probes" in section:
            kwargs["probes"] = _parse_list(section["probes"], int)
        if "emit_snapshots" in section:
            kwargs["emit_snapshots"] = _parse_bool(section["emit_snapshots"])
        if "snapshot_times" in section:
            kwargs["snapshot_times"] = _parse_list(section["snapshot_times"], float)
    return RunConfig(scenario=scenario, **kwargs)


def _parse_beta_token(token):
    token = token.strip()
    if token.startswith("b+"):
        try:
            offset = float(token[2:])
        except ValueError as exc:
            raise ConfigError(f"bad beta token {token!r}") from exc
        return lambda b: b + offset
    try:
        value = float(token)
    except ValueError as exc:
        raise ConfigError(f"bad beta token {token!r}") from exc
    return lambda b: value


def load_sweep_config(path) -> SweepConfig:
    parser = _read_ini(path)
    base = load_run_config(path)
    _check_keys(parser, "sweep", _SWEEP_KEYS)
    if not parser.has_section("sweep"):
        raise ConfigError("sweep config needs a [sweep] section")
    section = dict(parser.items("sweep"))
    if "b_values" not in section or "beta_values" not in section:
        raise ConfigError("[sweep] needs b_values and beta_values")
    b_values = _parse_list(section["b_values"], float)
    beta_values = [_parse_beta_token(t) for t in section["beta_values"].split(",") if t.strip()]
    max_parallel = int(section.get("max_parallel", "1"))
    return SweepConfig(base=base, b_values=b_values, beta_values=beta_values,
                       max_parallel=max_parallel)


def _atomic_write(path, text):
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w") as handle:
        handle.write(text)
    os.replace(tmp, path)


def _write_diagnostics_csv(path, records):
    lines = [DiagnosticsRecord.csv_header()]
    lines.extend(r.csv_row() for r in records)
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_snapshot(path, result, t_request):
    idx = int(np.argmin(np.abs(result.sample_times - t_request)))
    state = result.states[idx]
    xc = result.grid.cell_centers
    u_c = 0.5 * (state.u[:-1] + state.u[1:])
    lines = [f"# t={state.t:.17g}"]
    for i in range(xc.size):
        lines.append(
            f"{xc[i]:.17g} {state.v[i]:.17g} {u_c[i]:.17g} {state.theta[i]:.17g} {state.z[i]:.17g}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def _report_text(config: RunConfig, result) -> str:
    from .functionals import interval_probe

    spec = config.scenario
    blocks = [validate_parameters(spec.params).summary()]
    final = result.records[-1]
    blocks.append(
        "run summary\n"
        f"  t final = {final.t:.6g}, steps sampled = {len(result.records)}\n"
        f"  mass deviation = {final.mass_dev:.10g} (initial {result.records[0].mass_dev:.10g})\n"
        f"  momentum = {final.momentum:.10g} (initial {result.records[0].momentum:.10g})\n"
        f"  total energy = {final.total_energy:.10g} (initial {result.records[0].total_energy:.10g})\n"
        f"  reactant burned (time-integrated sink) = {result.species_consumed:.10g}"
    )
    run_min_v = min(r.min_v for r in result.records)
    run_max_v = max(r.max_v for r in result.records)
    run_min_th = min(r.min_theta for r in result.records)
    run_max_th = max(r.max_theta for r in result.records)
    ratio = final.max_theta / theta_bound_from_Y(spec.params, final.Y_run)
    blocks.append(
        "bound summary\n"
        f"  v range over run = [{run_min_v:.6g}, {run_max_v:.6g}]\n"
        f"  theta range over run = [{run_min_th:.6g}, {run_max_th:.6g}]\n"
        f"  max_z over run = {max(r.max_z for r in result.records):.6g}\n"
        f"  X final = {final.X_acc:.6g}, Y final = {final.Y_run:.6g}\n"
        f"  max_theta / theta-bound ratio = {ratio:.6g}\n"
        f"  boundary deviation max = {max(r.boundary_deviation for r in result.records):.3e}"
    )
    if result.states is not None and len(result.states) >= 2:
        blocks.append(
            "temperature lower envelope constant = "
            f"{temperature_envelope_check(result.states):.6g}"
        )
    for k in config.probes:
        blocks.append(interval_probe(result.final_state, result.grid, k).block())
        if result.states is not None:
            try:
                probe = representation_check(
                    result.states, result.grid, spec.params, k, result.final_state.t
                )
                blocks.append(probe.block())
            except WindowOutOfDomain as exc:
                blocks.append(f"volume representation k = {k}: skipped ({exc})")
    blocks.append(
        "final deviation norms\n"
        + "\n".join(f"  {k} = {final.norms[k]:.10g}" for k in ("L2", "L4", "Linf", "grad_L2"))
    )
    return "\n\n".join(blocks) + "\n"


def run_command(config_path, output_dir=None) -> int:
    """Execute one simulation and write diagnostics.csv, snapshots, report.txt."""
    try:
        config = load_run_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = output_dir or config.output_dir
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        result = run_simulation(
            config.scenario, sample_cadence=config.sample_cadence, keep_states=True
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        try:
            _atomic_write(os.path.join(out_dir, "report.txt"), f"aborted: {exc}\n")
        except OSError:
            pass
        return EXIT_BLOWUP
    try:
        _write_diagnostics_csv(os.path.join(out_dir, "diagnostics.csv"), result.records)
        if config.emit_snapshots:
            for t_req in config.snapshot_times:
                name = f"snapshot_t{t_req:g}.dat"
                _write_snapshot(os.path.join(out_dir, name), result, t_req)
        _atomic_write(os.path.join(out_dir, "report.txt"), _report_text(config, result))
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _worker_count(requested):
    cap = os.environ.get("RADGAS_THREADS")
    if cap:
        try:
            return max(1, min(requested, int(cap)))
        except ValueError:
            raise ConfigError(f"RADGAS_THREADS = {cap!r} is not an integer")
    return max(1, requested)


def _sweep_cell(base: RunConfig, b: float, beta: float, out_dir: str):
    params = replace(base.scenario.params, b=b, beta=beta)
    spec = replace(base.scenario, params=params)
    admissible = validate_parameters(params).admissible
    row = {
        "b": b, "beta": beta, "admissible": admissible, "status": "completed",
        "final_Linf_dev": math.nan, "X_final": math.nan, "Y_final": math.nan,
        "min_theta": math.nan, "max_theta": math.nan,
    }
    try:
        result = run_simulation(spec, sample_cadence=base.sample_cadence)
    except BlowUpError as exc:
        row["status"] = f"blowup"
        try:
            os.makedirs(out_dir, exist_ok=True)
            _atomic_write(os.path.join(out_dir, "report.txt"), f"aborted: {exc}\n")
        except OSError:
            pass
        return row
    final = result.records[-1]
    row.update(
        final_Linf_dev=final.norms["Linf"],
        X_final=final.X_acc,
        Y_final=final.Y_run,
        min_theta=min(r.min_theta for r in result.records),
        max_theta=max(r.max_theta for r in result.records),
    )
    try:
        os.makedirs(out_dir, exist_ok=True)
        _write_diagnostics_csv(os.path.join(out_dir, "diagnostics.csv"), result.records)
    except OSError:
        row["status"] = "io-error"
    return row


def sweep_command(config_path, output_dir=None) -> int:
    """Run the (b, beta) grid and write sweep_summary.csv."""
    try:
        config = load_sweep_config(config_path)
        workers = _worker_count(config.max_parallel)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_root = output_dir or config.base.output_dir
    try:
        os.makedirs(out_root, exist_ok=True)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    cells = []
    for b in config.b_values:
        for beta_fn in config.beta_values:
            beta = beta_fn(b)
            cells.append((b, beta))
    jobs = [
        (b, beta, os.path.join(out_root, f"cell_b{b:g}_beta{beta:g}"))
        for b, beta in cells
    ]
    if workers == 1:
        rows = [_sweep_cell(config.base, b, beta, d) for b, beta, d in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda j: _sweep_cell(config.base, *j[:2], j[2]), jobs))

    rows.sort(key=lambda r: (r["b"], r["beta"]))
    lines = ["b,beta,admissible,status,final_Linf_dev,X_final,Y_final,min_theta,max_theta"]
    for r in rows:
        lines.append(
            f"{r['b']:.17g},{r['beta']:.17g},{str(r['admissible']).lower()},{r['status']},"
            f"{r['final_Linf_dev']:.17g},{r['X_final']:.17g},{r['Y_final']:.17g},"
            f"{r['min_theta']:.17g},{r['max_theta']:.17g}"
        )
    try:
        _atomic_write(os.path.join(out_root, "sweep_summary.csv"), "\n".join(lines) + "\n")
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    failed_admissible = [r for r in rows if r["admissible"] and r["status"] != "completed"]
    if failed_admissible:
        for r in failed_admissible:
            print(f"admissible cell (b={r['b']:g}, beta={r['beta']:g}) {r['status']}", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK


def verify_command(config_path, output_dir=None) -> int:
    """Run the verification suite and write verify_report.txt."""
    try:
        config = load_run_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = output_dir or config.output_dir
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    from .verify_suite import run_verification

    checks = run_verification(config)
    lines = []
    for name, ok, detail in checks:
        lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    all_ok = all(ok for _, ok, _ in checks)
    lines.append(f"\n{'all checks passed' if all_ok else 'VERIFICATION FAILED'}")
    try:
        _atomic_write(os.path.join(out_dir, "verify_report.txt"), "\n".join(lines) + "\n")
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print("\n".join(lines))
    return EXIT_OK if all_ok else EXIT_VERIFY


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="radgas",
        description="1D Lagrangian viscous radiative reactive gas simulator",
    )
    parser.add_argument("--output-dir", default=None, dest="output_dir_pre",
                        help="override the configured output directory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "integrate one scenario and write diagnostics"),
        ("sweep", "run a (b, beta) parameter grid"),
        ("verify", "run the verification suite"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to the config file")
        p.add_argument("--output-dir", default=None,
                       help="override the configured output directory")
    args = parser.parse_args(argv)
    out_dir = args.output_dir or args.output_dir_pre
    command = {"run": run_command, "sweep": sweep_command, "verify": verify_command}[args.command]
    return command(args.config, output_dir=out_dir)


if __name__ == "__main__":
    sys.exit(main())
