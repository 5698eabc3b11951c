"""Scenario resolution, named presets and the point/sweep solvers behind the CLI.

A scenario is a plain nested mapping (what a YAML config file parses to)::

    model:
      coupling: two-phonon          # or single-phonon
      g: {value: 1.1, unit: 2pi_hz}
      r_p: 3
      eps_L: {value: 0.05, unit: g}
      gamma_z: {value: 10, unit: 2pi_hz}
      Q: 8.0e+7                     # or gamma_m_eff: {value: ..., unit: ...}
      n_th: 54
      omega_m: {value: 3.8e+6, unit: 2pi_hz}
    sweep:
      - {name: delta, min: -4, max: 4, count: 161, scale: linear, unit: g_eff}

Every frequency carries an explicit unit tag.  Absolute tags are ``rad_s``
and ``2pi_hz``; relative tags ``g``, ``g_eff`` and ``gamma_m_eff`` scale by
the resolved value of that rate (``g_eff`` is g cosh^2 r_p for two-phonon
coupling and g cosh r_p for single-phonon coupling).
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np

from . import device as dev
from .dynamics import (
    build_liouvillian,
    driven_system,
    quasi_steady_state,
    rotating_frame,
    steady_state,
)
from .model import (
    ModelParams,
    SqueezeTransform,
    build_effective_hamiltonian,
    build_single_phonon_effective_hamiltonian,
    build_squeezed_full_hamiltonian,
    collapse_operators,
    drive_frame_energies,
)
from .qcore import DensityMatrix, fock_state
from .stats import FIDELITY_STATES, BlockadeReport, blockade_report

ABSOLUTE_UNITS = {"rad_s": 1.0, "2pi_hz": 2 * math.pi}
RELATIVE_UNITS = ("g", "g_eff", "gamma_m_eff")
FREQUENCY_FIELDS = ("g", "eps_L", "eps_L_eff", "delta", "delta_s", "delta_ed",
                    "gamma_m_eff", "gamma_z", "omega_m")
SCALAR_FIELDS = ("r_p", "Q", "n_th", "fock_dim")
MODEL_FIELDS = FREQUENCY_FIELDS + SCALAR_FIELDS + ("coupling",)
COUPLINGS = ("two-phonon", "single-phonon")
MAX_SWEEP_AXES = 2


class ConfigError(ValueError):
    """Invalid scenario; ``path`` names the offending field (dotted)."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


# -- unit handling ---------------------------------------------------------------

def _number(raw, path: str) -> float:
    # YAML 1.1 reads "8e7" as a string, so numeric strings are accepted too
    if isinstance(raw, str):
        try:
            raw = float(raw)
        except ValueError:
            raise ConfigError(path, f"expected a number, got {raw!r}") from None
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(path, f"expected a number, got {raw!r}")
    value = float(raw)
    if not math.isfinite(value):
        raise ConfigError(path, f"value must be finite, got {raw!r}")
    return value


def _tagged(raw, path: str) -> tuple[float, str]:
    if not isinstance(raw, dict):
        raise ConfigError(path, "frequency fields need an explicit {value, unit} mapping")
    extra = set(raw) - {"value", "unit"}
    if extra:
        raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown key")
    if "value" not in raw:
        raise ConfigError(f"{path}.value", "missing")
    if "unit" not in raw:
        raise ConfigError(f"{path}.unit", "missing unit tag")
    unit = raw["unit"]
    if unit not in ABSOLUTE_UNITS and unit not in RELATIVE_UNITS:
        raise ConfigError(f"{path}.unit", f"unknown unit {unit!r}; "
                          f"use one of {sorted(ABSOLUTE_UNITS) + list(RELATIVE_UNITS)}")
    return _number(raw["value"], f"{path}.value"), unit


def _convert(value: float, unit: str, refs: dict[str, float], path: str) -> float:
    if unit in ABSOLUTE_UNITS:
        return value * ABSOLUTE_UNITS[unit]
    if unit not in refs:
        raise ConfigError(f"{path}.unit", f"relative unit {unit!r} is not available for this field")
    return value * refs[unit]


# -- model resolution ----------------------------------------------------------

@dataclass(frozen=True)
class ResolvedModel:
    params: ModelParams
    coupling: str = "two-phonon"
    Q: float | None = None
    omega_m: float | None = None

    @property
    def g_eff(self) -> float:
        if self.coupling == "single-phonon":
            return self.params.g_eff_single
        return self.params.g_eff


def resolve_model(model: dict, path: str = "model") -> ResolvedModel:
    """Turn a raw ``model`` mapping into :class:`ModelParams` (angular units)."""
    if not isinstance(model, dict):
        raise ConfigError(path, "expected a mapping")
    for key in model:
        if key not in MODEL_FIELDS:
            raise ConfigError(f"{path}.{key}", "unknown model field")
    coupling = model.get("coupling", "two-phonon")
    if coupling not in COUPLINGS:
        raise ConfigError(f"{path}.coupling", f"expected one of {COUPLINGS}, got {coupling!r}")

    def scalar(name, default=None):
        if name not in model:
            return default
        return _number(model[name], f"{path}.{name}")

    def absolute(name):
        if name not in model:
            return None
        value, unit = _tagged(model[name], f"{path}.{name}")
        return _convert(value, unit, {}, f"{path}.{name}")

    if "g" not in model:
        raise ConfigError(f"{path}.g", "missing")
    g = absolute("g")
    r_p = scalar("r_p", 0.0)
    if r_p < 0:
        raise ConfigError(f"{path}.r_p", "squeezing parameter must be >= 0")
    U = math.cosh(r_p)
    g_eff = g * (U if coupling == "single-phonon" else U ** 2)
    refs = {"g": g, "g_eff": g_eff}

    n_th = scalar("n_th", 0.0)
    omega_m = absolute("omega_m")
    Q = scalar("Q")
    if Q is not None and "gamma_m_eff" in model:
        raise ConfigError(f"{path}.Q", "give either Q or gamma_m_eff, not both")
    if Q is not None:
        if omega_m is None:
            raise ConfigError(f"{path}.omega_m", "required to convert Q into gamma_m_eff")
        if Q <= 0:
            raise ConfigError(f"{path}.Q", "must be > 0")
        gamma_m_eff = dev.q_to_gamma(Q, n_th, omega_m)
    elif "gamma_m_eff" in model:
        value, unit = _tagged(model["gamma_m_eff"], f"{path}.gamma_m_eff")
        gamma_m_eff = _convert(value, unit, refs, f"{path}.gamma_m_eff")
    else:
        raise ConfigError(f"{path}.gamma_m_eff", "missing (or give Q, n_th and omega_m)")
    refs["gamma_m_eff"] = gamma_m_eff

    def rate(name, default=0.0):
        if name not in model:
            return default
        value, unit = _tagged(model[name], f"{path}.{name}")
        return _convert(value, unit, refs, f"{path}.{name}")

    if "eps_L" in model and "eps_L_eff" in model:
        raise ConfigError(f"{path}.eps_L_eff", "give either eps_L or eps_L_eff, not both")
    eps_L = rate("eps_L_eff") / U if "eps_L_eff" in model else rate("eps_L")

    fock_dim = model.get("fock_dim", 15)
    if isinstance(fock_dim, bool) or not isinstance(fock_dim, int):
        raise ConfigError(f"{path}.fock_dim", f"expected an integer, got {fock_dim!r}")
    detunings = {name: rate(name) for name in ("delta", "delta_s", "delta_ed")}
    gamma_z = rate("gamma_z")
    try:
        params = ModelParams(
            g=g, squeeze=SqueezeTransform(r_p), eps_L=eps_L, gamma_m_eff=gamma_m_eff,
            gamma_z=gamma_z, n_th=n_th, fock_dim=fock_dim, **detunings,
        )
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None
    return ResolvedModel(params, coupling, Q, omega_m)


# -- sweeps ----------------------------------------------------------------------

@dataclass(frozen=True)
class SweepAxis:
    name: str
    values: np.ndarray
    unit: str | None = None


def parse_axes(raw, path: str = "sweep") -> list[SweepAxis]:
    if raw is None:
        return []
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list):
        raise ConfigError(path, "expected a list of axes")
    if len(raw) > MAX_SWEEP_AXES:
        raise ConfigError(path, f"at most {MAX_SWEEP_AXES} sweep axes are supported")
    axes = []
    for i, ax in enumerate(raw):
        p = f"{path}[{i}]"
        if not isinstance(ax, dict):
            raise ConfigError(p, "expected a mapping")
        unknown = set(ax) - {"name", "min", "max", "count", "scale", "unit", "values"}
        if unknown:
            raise ConfigError(f"{p}.{sorted(unknown)[0]}", "unknown key")
        name = ax.get("name")
        if name not in FREQUENCY_FIELDS + SCALAR_FIELDS:
            raise ConfigError(f"{p}.name", f"not a sweepable model parameter: {name!r}")
        unit = ax.get("unit")
        if name in FREQUENCY_FIELDS:
            if unit is None:
                raise ConfigError(f"{p}.unit", "missing unit tag")
            if unit not in ABSOLUTE_UNITS and unit not in RELATIVE_UNITS:
                raise ConfigError(f"{p}.unit", f"unknown unit {unit!r}")
        elif unit is not None:
            raise ConfigError(f"{p}.unit", f"{name} is dimensionless")
        if "values" in ax:
            values = np.array([_number(v, f"{p}.values") for v in ax["values"]])
        else:
            lo = _number(ax.get("min"), f"{p}.min")
            hi = _number(ax.get("max"), f"{p}.max")
            count = ax.get("count")
            if isinstance(count, bool) or not isinstance(count, int) or count < 1:
                raise ConfigError(f"{p}.count", "expected a positive integer")
            scale = ax.get("scale", "linear")
            if scale == "linear":
                values = np.linspace(lo, hi, count)
            elif scale == "log":
                if lo <= 0 or hi <= 0:
                    raise ConfigError(f"{p}.min", "log axes need positive bounds")
                values = np.geomspace(lo, hi, count)
            else:
                raise ConfigError(f"{p}.scale", f"expected linear or log, got {scale!r}")
        if name == "fock_dim":
            values = values.astype(int)
        axes.append(SweepAxis(name, values, unit))
    return axes


def grid_points(axes: list[SweepAxis]) -> list[tuple]:
    """Axis-major (first axis slowest) list of coordinate tuples."""
    if not axes:
        return [()]
    mesh = np.meshgrid(*[ax.values for ax in axes], indexing="ij")
    return list(zip(*(m.ravel().tolist() for m in mesh)))


def override(model: dict, axes: list[SweepAxis], point: tuple) -> dict:
    out = copy.deepcopy(model)
    for ax, value in zip(axes, point):
        if ax.name == "Q":
            out.pop("gamma_m_eff", None)
        if ax.name == "gamma_m_eff":
            out.pop("Q", None)
        out[ax.name] = {"value": value, "unit": ax.unit} if ax.unit else value
    return out


# -- solvers -------------------------------------------------------------------

def effective_hamiltonian(resolved: ResolvedModel):
    if resolved.coupling == "single-phonon":
        return build_single_phonon_effective_hamiltonian(resolved.params)
    return build_effective_hamiltonian(resolved.params)


def solve_steady(resolved: ResolvedModel) -> DensityMatrix:
    p = resolved.params
    L = build_liouvillian(effective_hamiltonian(resolved), collapse_operators(p))
    return steady_state(L)


def solve_point(resolved: ResolvedModel) -> BlockadeReport:
    return blockade_report(solve_steady(resolved))


def full_hamiltonian_populations(params: ModelParams, t_end_gamma: float = 20.0,
                                 window: float = 0.1) -> dict[str, np.ndarray]:
    """Quasi-steady populations under the time-dependent squeezed-frame model.

    The run starts in |0,D>, goes to the frame rotating with
    delta_L (a^+ a + 2 sigma_+ sigma_-), where every remaining term is periodic
    in 2 pi / delta_L, and averages over the last ``window`` of
    ``t_end_gamma / gamma_m_eff``.  Returns the four subspace populations for
    both the full and the effective model.
    """
    if params.delta_L <= 0:
        raise ValueError("the full-model comparison needs a positive drive frequency delta_L")
    space = params.space
    collapse = collapse_operators(params)
    lab = driven_system(space, lambda t: build_squeezed_full_hamiltonian(params, t), collapse)
    system = rotating_frame(lab, drive_frame_energies(params))
    period = 2 * math.pi / params.delta_L
    rho_full = quasi_steady_state(system, fock_state(space, 0), t_end_gamma / params.gamma_m_eff,
                                  period, window=window)
    rho_eff = steady_state(build_liouvillian(build_effective_hamiltonian(params), collapse))
    full = np.array([rho_full.population(n, s) for n, s in FIDELITY_STATES])
    eff = np.array([rho_eff.population(n, s) for n, s in FIDELITY_STATES])
    return {"full": full, "effective": eff}


# -- presets ---------------------------------------------------------------------

def _hz(value: float) -> dict:
    return {"value": value, "unit": "2pi_hz"}


def _rel(value: float, unit: str) -> dict:
    return {"value": value, "unit": unit}


_FIG5 = {
    "g": _hz(1.1), "r_p": 2.0, "gamma_z": _hz(10.0), "n_th": 54.0,
    "gamma_m_eff": _rel(2.0, "g"), "eps_L_eff": _rel(1 / 20, "g_eff"),
    "delta": _rel(0.0, "g_eff"),
}
_POINT_A = {
    "g": _hz(1.1), "r_p": 3.0, "gamma_z": _hz(10.0), "n_th": 54.0, "Q": 8e7,
    "omega_m": _hz(3.8e6), "eps_L": _rel(0.05, "g"), "delta": _rel(0.0, "g_eff"),
}

PRESETS: dict[str, dict] = {
    "fig5-delta0": {"model": _FIG5},
    "fig5a": {"model": _FIG5, "sweep": [
        {"name": "delta", "min": -4.0, "max": 4.0, "count": 161, "unit": "g_eff"}]},
    "fig5g": {"model": _FIG5, "sweep": [
        {"name": "eps_L_eff", "min": 0.05, "max": 2.0, "count": 40, "unit": "gamma_m_eff"}]},
    "fig5h": {"model": {**_FIG5, "delta_ed": _rel(1e3, "g_eff"), "delta_s": _rel(500.0, "g_eff"),
                        "fock_dim": 10},
              "sweep": [{"name": "eps_L_eff", "values": [0.1, 0.5, 1.0], "unit": "gamma_m_eff"}]},
    "pointA": {"model": _POINT_A},
    "pointB": {"model": {**_POINT_A, "Q": 2e7, "eps_L": _rel(0.2, "g")}},
    "fig6a": {"model": {**_POINT_A, "eps_L": _rel(0.2, "g")}, "sweep": [
        {"name": "Q", "min": 1e7, "max": 1e8, "count": 41, "scale": "log"},
        {"name": "r_p", "min": 0.0, "max": 3.0, "count": 41}]},
    "fig6cd": {"model": _POINT_A, "sweep": [
        {"name": "Q", "min": 1e7, "max": 1e8, "count": 41, "scale": "log"},
        {"name": "eps_L", "min": 0.005, "max": 0.205, "count": 41, "unit": "g"}]},
    "fig7a": {"model": _POINT_A, "sweep": [
        {"name": "gamma_z", "min": 1.0, "max": 1500.0, "count": 41, "scale": "log",
         "unit": "2pi_hz"}]},
    "fig7b": {"model": _POINT_A, "sweep": [
        {"name": "n_th", "min": 1.0, "max": 200.0, "count": 41, "scale": "log"}]},
    "fig8": {"model": _POINT_A, "sweep": [
        {"name": "eps_L", "min": 1e-3, "max": 1.0, "count": 31, "scale": "log", "unit": "g"}]},
    "figA2": {"model": {**_POINT_A, "coupling": "single-phonon", "g": _hz(2.5e3),
                        "eps_L": _rel(0.01, "g"), "delta": _rel(-1.0, "g_eff")},
              "sweep": [
                  {"name": "Q", "min": 1e7, "max": 1e8, "count": 41, "scale": "log"},
                  {"name": "r_p", "min": 0.0, "max": 1.5, "count": 41}]},
    "figA3": {"model": _POINT_A, "g2tau": {"r_p": [1.0, 2.0, 3.0], "tau_max": 20.0, "count": 201}},
    "nominal-device": {"device": {"geometry": {},
                                "sweep": {"name": "gap", "min": 40e-9, "max": 100e-9,
                                          "count": 13}}},
}


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return copy.deepcopy(PRESETS[name])


def merge(base: dict, extra: dict) -> dict:
    """Recursive dict merge; ``extra`` wins, lists are replaced wholesale."""
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "g2tau":
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


# -- device ----------------------------------------------------------------------

GEOMETRY_FIELDS = tuple(dev.DeviceGeometry.__dataclass_fields__)


def resolve_geometry(raw, path: str = "device.geometry") -> dev.DeviceGeometry:
    """Geometry values are plain SI numbers (m, T, Pa, kg/m^3, K, rad)."""
    if raw is None:
        raise ConfigError(path, "missing")
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a mapping")
    kwargs = {}
    for key, value in raw.items():
        if key not in GEOMETRY_FIELDS:
            raise ConfigError(f"{path}.{key}", "unknown geometry field")
        kwargs[key] = _number(value, f"{path}.{key}")
    try:
        return dev.DeviceGeometry(**kwargs)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None
