"""Command-line front end: ``phonon-blockade {device,steady,sweep,g2tau,validate}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import yaml

from . import __version__
from . import device as dev
from . import experiments as ex
from .analytic import analytic_g2_resonant, steady_amplitudes
from .dynamics import build_liouvillian, g2_tau
from .model import collapse_operators
from .stats import N_REPORTED

SCHEMA_VERSION = "1"
UNDEFINED = "undefined"

REPORT_COLUMNS = (
    ["n_mean", "g1", "g2", "g3"]
    + [f"P{m}" for m in range(N_REPORTED)]
    + [f"Poisson{m}" for m in range(N_REPORTED)]
    + ["f", "f1", "criterion_i", "criterion_ii", "margin_i", "margin_ii",
       "fidelity", "Pe", "sensitivity"]
)
# the detection probability P2 is the P2 column of the distribution block
RATE_COLUMNS = ["g_eff", "eps_L_eff", "gamma_m_eff"]


# -- config loading --------------------------------------------------------------

def _line_of(node, path: str) -> int | None:
    """1-based line of the YAML node addressed by a dotted path, if present."""
    line = None
    for part in re.findall(r"[^.\[\]]+|\[\d+\]", path):
        if part.startswith("[") and isinstance(node, yaml.SequenceNode):
            idx = int(part[1:-1])
            if idx >= len(node.value):
                break
            node = node.value[idx]
            line = node.start_mark.line + 1
        elif isinstance(node, yaml.MappingNode):
            match = [(k, v) for k, v in node.value if k.value == part]
            if not match:
                break
            key, node = match[0]
            line = key.start_mark.line + 1
        else:
            break
    return line


class ConfigFile:
    def __init__(self, path: str):
        self.path = path
        with open(path, encoding="utf-8") as fh:
            self.text = fh.read()
        try:
            self.data = yaml.safe_load(self.text) or {}
            self.node = yaml.compose(self.text)
        except yaml.MarkedYAMLError as exc:
            mark = exc.problem_mark
            where = f"{path}:{mark.line + 1}" if mark else path
            raise SystemExit(f"config error: {where}: {exc.problem}") from None
        if not isinstance(self.data, dict):
            raise SystemExit(f"config error: {path}:1: top level must be a mapping")

    def diagnostic(self, err: ex.ConfigError) -> str:
        line = _line_of(self.node, err.path) if err.path else None
        where = f"{self.path}:{line}" if line else self.path
        return f"config error: {where}: {err}"


def load_scenario(args) -> tuple[dict, ConfigFile | None]:
    cfg_file = ConfigFile(args.config) if args.config else None
    scenario: dict = {}
    name = args.preset or (cfg_file.data.get("preset") if cfg_file else None)
    if name:
        scenario = ex.preset(name)
        scenario["preset"] = name
    if cfg_file:
        scenario = ex.merge(scenario, cfg_file.data)
    if args.fock_dim is not None:
        scenario.setdefault("model", {})["fock_dim"] = args.fock_dim
    return scenario, cfg_file


# -- formatting ------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return UNDEFINED
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return UNDEFINED if math.isnan(value) else format(float(value), ".17e")
    return str(value)


def _jsonable(value):
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if not math.isfinite(value) else float(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def render(meta: dict, columns: list[str], rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        doc = {"meta": _jsonable(meta), "rows": [_jsonable({c: r.get(c) for c in columns})
                                                 for r in rows]}
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    for key, value in meta.items():
        if isinstance(value, (dict, list)):
            value = json.dumps(_jsonable(value), sort_keys=True)
        else:
            value = _fmt(value)
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) if c != "error" else (r.get(c) or "") for c in columns])
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _device_meta(scenario: dict) -> dict:
    raw = (scenario.get("device") or {}).get("geometry", {})
    geom = ex.resolve_geometry(raw)
    d = dev.derive(geom)
    return {
        "device.omega_m_rad_s": d.omega_m, "device.mass_kg": d.mass, "device.z_zpf_m": d.z_zpf,
        "device.G_T_per_m2": d.G, "device.g_rad_s": d.g, "device.n_th": d.n_th,
    }


def _model_meta(resolved: ex.ResolvedModel) -> dict:
    p = resolved.params
    meta = {
        "model.coupling": resolved.coupling, "model.g_rad_s": p.g, "model.r_p": p.r_p,
        "model.g_eff_rad_s": resolved.g_eff, "model.eps_L_rad_s": p.eps_L,
        "model.eps_L_eff_rad_s": p.eps_L_eff, "model.delta_rad_s": p.delta,
        "model.delta_s_rad_s": p.delta_s, "model.delta_ed_rad_s": p.delta_ed,
        "model.gamma_m_eff_rad_s": p.gamma_m_eff, "model.gamma_z_rad_s": p.gamma_z,
        "model.n_th": p.n_th, "model.fock_dim": p.fock_dim,
    }
    if resolved.Q is not None:
        meta["model.Q"] = resolved.Q
        meta["model.omega_m_rad_s"] = resolved.omega_m
    return meta


def base_meta(command: str, scenario: dict) -> dict:
    meta = {"schema_version": SCHEMA_VERSION, "code_version": __version__, "command": command}
    if "preset" in scenario:
        meta["preset"] = scenario["preset"]
    meta["scenario"] = {k: v for k, v in scenario.items() if k != "preset"}
    return meta


# -- point evaluation (runs in worker processes) -------------------------------

def _axis_column(ax: ex.SweepAxis) -> str:
    return f"{ax.name}[{ax.unit}]" if ax.unit else ax.name


def _evaluate(model: dict) -> dict:
    try:
        resolved = ex.resolve_model(model)
        report = ex.solve_point(resolved)
    except Exception as exc:  # recorded per point; the sweep carries on
        return {"error": f"{type(exc).__name__}: {exc}"}
    row = report.row()
    row.update(g_eff=resolved.g_eff, eps_L_eff=resolved.params.eps_L_eff,
               gamma_m_eff=resolved.params.gamma_m_eff, error="")
    return row


def _map(fn, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


# -- commands ----------------------------------------------------------------------

def cmd_steady(scenario: dict, args) -> tuple[dict, list[str], list[dict]]:
    if scenario.get("sweep"):
        raise ex.ConfigError("sweep", "steady solves a single point; use the sweep command")
    model = scenario.get("model")
    if model is None:
        raise ex.ConfigError("model", "missing")
    resolved = ex.resolve_model(model)
    row = _evaluate(model)
    if row.get("error"):
        raise RuntimeError(f"steady-state solve failed for {_model_meta(resolved)}: {row['error']}")
    meta = {**base_meta("steady", scenario), **_model_meta(resolved), **_device_meta(scenario)}
    return meta, RATE_COLUMNS + REPORT_COLUMNS, [row]


def cmd_sweep(scenario: dict, args):
    model = scenario.get("model")
    if model is None:
        raise ex.ConfigError("model", "missing")
    axes = ex.parse_axes(scenario.get("sweep"))
    if not axes:
        raise ex.ConfigError("sweep", "at least one sweep axis is required")
    resolved = ex.resolve_model(model)
    points = ex.grid_points(axes)
    for i, ax in enumerate(axes):
        # reject unresolvable axes before spending time on the grid
        ex.resolve_model(ex.override(model, axes[i:i + 1], (ax.values[0],)))
    rows = _map(_evaluate, [ex.override(model, axes, pt) for pt in points], args.jobs)
    cols = [_axis_column(ax) for ax in axes]
    for pt, row in zip(points, rows):
        row.update(dict(zip(cols, pt)))
    meta = {**base_meta("sweep", scenario), **_model_meta(resolved), **_device_meta(scenario),
            "grid": [f"{_axis_column(ax)}:{len(ax.values)}" for ax in axes]}
    return meta, cols + RATE_COLUMNS + REPORT_COLUMNS + ["error"], rows


def _g2tau_block(model: dict, taus: np.ndarray) -> list[dict]:
    resolved = ex.resolve_model(model)
    p = resolved.params
    L = build_liouvillian(ex.effective_hamiltonian(resolved), collapse_operators(p))
    rho = ex.solve_steady(resolved)
    values = g2_tau(L, rho, taus / p.gamma_m_eff)
    return [{"r_p": p.r_p, "gamma_tau": t, "g2_tau": v} for t, v in zip(taus, values)]


def cmd_g2tau(scenario: dict, args):
    model = scenario.get("model")
    if model is None:
        raise ex.ConfigError("model", "missing")
    spec = scenario.get("g2tau") or {}
    if not isinstance(spec, dict):
        raise ex.ConfigError("g2tau", "expected a mapping")
    r_values = spec.get("r_p", [model.get("r_p", 0.0)])
    if not isinstance(r_values, list):
        r_values = [r_values]
    r_values = [ex._number(r, "g2tau.r_p") for r in r_values]
    tau_max = ex._number(spec.get("tau_max", 20.0), "g2tau.tau_max")
    count = spec.get("count", 201)
    if isinstance(count, bool) or not isinstance(count, int) or count < 1:
        raise ex.ConfigError("g2tau.count", "expected a positive integer")
    taus = np.linspace(0.0, tau_max, count)
    resolved = ex.resolve_model(model)
    blocks = _map(_g2tau_wrapper, [(dict(model, r_p=r), taus) for r in r_values], args.jobs)
    rows = [row for block in blocks for row in block]
    meta = {**base_meta("g2tau", scenario), **_model_meta(resolved), **_device_meta(scenario)}
    return meta, ["r_p", "gamma_tau", "g2_tau"], rows


def _g2tau_wrapper(item):
    return _g2tau_block(*item)


def cmd_device(scenario: dict, args):
    section = scenario.get("device")
    if section is None:
        raise ex.ConfigError("device", "missing geometry (use --preset nominal-device)")
    if not isinstance(section, dict):
        raise ex.ConfigError("device", "expected a mapping")
    geom = ex.resolve_geometry(section.get("geometry", {}))
    sweep = section.get("sweep")
    if sweep is None:
        geoms = [geom]
        name = None
    else:
        if not isinstance(sweep, dict):
            raise ex.ConfigError("device.sweep", "expected a mapping")
        name = sweep.get("name")
        if name not in ex.GEOMETRY_FIELDS:
            raise ex.ConfigError("device.sweep.name", f"not a geometry field: {name!r}")
        lo = ex._number(sweep.get("min"), "device.sweep.min")
        hi = ex._number(sweep.get("max"), "device.sweep.max")
        count = sweep.get("count")
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ex.ConfigError("device.sweep.count", "expected a positive integer")
        try:
            geoms = [geom.with_(**{name: v}) for v in np.linspace(lo, hi, count)]
        except ValueError as exc:
            raise ex.ConfigError("device.sweep", str(exc)) from None
    rows = []
    for gm in geoms:
        d = dev.derive(gm)
        row = {"B_center_T": dev.axial_field(gm, 0.0), "G_T_per_m2": d.G, "g_rad_s": d.g,
               "g_over_2pi_Hz": d.g / (2 * math.pi), "omega_m_rad_s": d.omega_m,
               "z_zpf_m": d.z_zpf, "n_th": d.n_th}
        if name:
            row[name] = getattr(gm, name)
        rows.append(row)
    meta = {**base_meta("device", scenario), **_device_meta(scenario)}
    cols = ([name] if name else []) + ["B_center_T", "G_T_per_m2", "g_rad_s", "g_over_2pi_Hz",
                                       "omega_m_rad_s", "z_zpf_m", "n_th"]
    return meta, cols, rows


def validation_checks(fock_dim: int | None = None) -> list[dict]:
    """Numeric-versus-analytic oracle suite; each entry has name, value, tol, passed."""
    checks = []

    def model_of(name, **changes):
        m = ex.preset(name)["model"]
        if fock_dim is not None:
            m["fock_dim"] = fock_dim
        m.update(changes)
        return m

    fig5 = ex.resolve_model(model_of("fig5-delta0"))
    rho = ex.solve_steady(fig5)
    report = ex.solve_point(fig5)
    g2_an = analytic_g2_resonant(fig5.params)
    rel = abs(report.g2 - g2_an) / g2_an
    checks.append({"name": "fig5 g2 numeric vs closed form (delta=0)", "value": rel,
                   "tol": 0.1, "passed": rel < 0.1})

    amp = steady_amplitudes(fig5.params)
    pops = np.array([rho.population(1, "D"), rho.population(2, "D")])
    pred = np.array([abs(amp.C1d) ** 2, abs(amp.C2d) ** 2])
    rel = float(np.max(np.abs(pred - pops) / pops))
    checks.append({"name": "fig5 amplitudes vs |1,D>, |2,D> populations", "value": rel,
                   "tol": 0.05, "passed": rel < 0.05})

    b1 = model_of("fig5h", eps_L_eff={"value": 0.5, "unit": "gamma_m_eff"})
    if fock_dim is None:
        b1["fock_dim"] = 10
    out = ex.full_hamiltonian_populations(ex.resolve_model(b1).params)
    diff = float(np.max(np.abs(out["full"] - out["effective"])))
    checks.append({"name": "full vs effective Hamiltonian subspace populations", "value": diff,
                   "tol": 0.05, "passed": diff < 0.05})

    base = model_of("pointA")
    n = base.get("fock_dim", 15)
    g_lo = ex.solve_point(ex.resolve_model(base)).g2
    g_hi = ex.solve_point(ex.resolve_model(dict(base, fock_dim=n + 5))).g2
    rel = abs(g_hi - g_lo) / g_hi
    checks.append({"name": f"pointA truncation N={n} vs N={n + 5}", "value": rel,
                   "tol": 0.01, "passed": rel < 0.01})
    return checks


def cmd_validate(scenario: dict, args):
    checks = validation_checks(args.fock_dim)
    for c in checks:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"{status} {c['name']}: measured={c['value']:.3e} tol={c['tol']:.3e}")
    meta = base_meta("validate", scenario)
    rows = [{"check": c["name"], "measured": c["value"], "tolerance": c["tol"],
             "passed": c["passed"]} for c in checks]
    return meta, ["check", "measured", "tolerance", "passed"], rows


COMMANDS = {"device": cmd_device, "steady": cmd_steady, "sweep": cmd_sweep,
            "g2tau": cmd_g2tau, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phonon-blockade",
        description="Steady states, sweeps and device estimates for two-phonon blockade.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=COMMANDS[name].__name__.removeprefix("cmd_"))
        p.add_argument("--config", help="YAML scenario file")
        p.add_argument("--preset", choices=sorted(ex.PRESETS), help="named figure preset")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--fock-dim", type=int, dest="fock_dim", help="mechanical truncation N")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    cfg_file = None
    try:
        scenario, cfg_file = load_scenario(args)
        meta, columns, rows = COMMANDS[args.command](scenario, args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 2
        raise
    except ex.ConfigError as err:
        msg = cfg_file.diagnostic(err) if cfg_file else f"config error: {err}"
        print(msg, file=sys.stderr)
        return 2
    except (RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.command != "validate" or args.out:
        emit(render(meta, columns, rows, args.format), args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
