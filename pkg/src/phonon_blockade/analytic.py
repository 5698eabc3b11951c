"""Closed-form weak-drive results for the effective two-phonon model."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import (
    ModelParams,
    build_effective_hamiltonian,
    build_single_phonon_effective_hamiltonian,
)
from .qcore import HilbertSpace

# warn when eps_L' / g_eff exceeds this
WEAK_DRIVE_RATIO = 0.1


class WeakDriveWarning(UserWarning):
    pass


def _check_weak_drive(params: ModelParams) -> None:
    if params.g_eff > 0 and params.eps_L_eff / params.g_eff > WEAK_DRIVE_RATIO:
        warnings.warn(
            f"eps_L'/g_eff = {params.eps_L_eff / params.g_eff:.3g} is outside the weak-drive regime",
            WeakDriveWarning, stacklevel=3,
        )


def zeta(params: ModelParams) -> float:
    return (params.gamma_z / 2) ** 2 + params.gamma_m_eff ** 2 - 4 * params.g_eff ** 2


def xi(params: ModelParams) -> float:
    return params.g_eff ** 2 + params.gamma_z * params.gamma_m_eff / 4


@dataclass(frozen=True)
class AmplitudeSolution:
    C0d: complex
    C1d: complex
    C2d: complex
    C0e: complex
    zeta: float
    Xi: float

    @property
    def populations(self) -> dict[str, float]:
        return {"|0,D>": abs(self.C0d) ** 2, "|1,D>": abs(self.C1d) ** 2,
                "|2,D>": abs(self.C2d) ** 2, "|0,E>": abs(self.C0e) ** 2}

    @property
    def g2(self) -> float:
        """2|C2d|^2 / |C1d|^4, the leading weak-drive estimate."""
        return 2 * abs(self.C2d) ** 2 / abs(self.C1d) ** 4


def steady_amplitudes(params: ModelParams) -> AmplitudeSolution:
    """Steady-state amplitudes of the four-state weak-drive ansatz.

    C1d comes from the first amplitude equation with C2d neglected and
    |C0d|^2 + |C1d|^2 = 1; C2d then follows from C1d and C0e from C2d.
    C0d is taken real and positive.
    """
    _check_weak_drive(params)
    d, eps = params.delta, params.eps_L_eff
    gm, gz, ge = params.gamma_m_eff, params.gamma_z, params.g_eff
    z, X = zeta(params), xi(params)
    if eps == 0:
        return AmplitudeSolution(1.0 + 0j, 0j, 0j, 0j, z, X)
    lorentz = d ** 2 + (gm / 2) ** 2
    C0d = math.sqrt(lorentz / (lorentz + eps ** 2))
    C1d = -eps * C0d / (d - 0.5j * gm)
    detuned = (2 * d - 1j * gm) * (2 * d - 0.5j * gz)
    denom = 2 * ge ** 2 - detuned
    if abs(denom) <= 1e-12 * (2 * ge ** 2 + abs(detuned)):
        raise ZeroDivisionError("amplitude equations are degenerate for these parameters")
    C2d = math.sqrt(2) * eps * (2 * d - 0.5j * gz) / denom * C1d
    C0e = -math.sqrt(2) * ge * C2d / (2 * d - 0.5j * gz) if ge else 0j
    return AmplitudeSolution(complex(C0d), complex(C1d), complex(C2d), complex(C0e), z, X)


def analytic_g2(params: ModelParams) -> float:
    """Weak-drive equal-time g2 of the effective model."""
    _check_weak_drive(params)
    d, eps = params.delta, params.eps_L_eff
    gm, gz = params.gamma_m_eff, params.gamma_z
    num = (4 * d ** 2 + (gz / 2) ** 2) * (d ** 2 + eps ** 2 + (gm / 2) ** 2)
    den = 4 * d ** 4 + d ** 2 * zeta(params) + xi(params) ** 2
    return num / den


def analytic_g2_resonant(params: ModelParams) -> float:
    """Minimum of :func:`analytic_g2`, reached at delta = 0."""
    gm, gz, ge, eps = params.gamma_m_eff, params.gamma_z, params.g_eff, params.eps_L_eff
    return gz ** 2 * (gm ** 2 + 4 * eps ** 2) / (gm * gz + 4 * ge ** 2) ** 2


def cooperativity_limit_g2(params: ModelParams) -> float:
    """1 / (1 + 4 C')^2, the resonant value for eps_L' << gamma_m_eff."""
    return 1.0 / (1.0 + 4 * params.cooperativity) ** 2


def enhancement_factors(r_p: float) -> tuple[float, float]:
    """(g_eff/g, C'/C) assuming the engineered decay equals the bare one."""
    if r_p < 0:
        raise ValueError(f"squeezing parameter must be >= 0, got {r_p}")
    c = math.cosh(r_p)
    return c ** 2, c ** 4


def cooperativity_ratio(r_p: float, gamma_m: float, gamma_m_eff: float) -> float:
    return math.cosh(r_p) ** 4 * gamma_m / gamma_m_eff


def anharmonic_splitting(params: ModelParams, model: str = "two-phonon") -> float:
    """Gap of the dressed pair that carries the blockade."""
    if model == "two-phonon":
        return 2 * math.sqrt(2) * params.g_eff
    if model == "single-phonon":
        return 2 * params.g_eff_single
    raise ValueError(f"unknown coupling model {model!r}")


def numeric_splitting(params: ModelParams, model: str = "two-phonon") -> float:
    """Same gap from a dense eigensolve of the undriven, resonant Hamiltonian."""
    p = params.with_(eps_L=0.0, delta=0.0, fock_dim=max(params.fock_dim, 4))
    space = HilbertSpace(p.fock_dim)
    if model == "two-phonon":
        H = build_effective_hamiltonian(p).elements
        block = [space.index(2, "D"), space.index(0, "E")]
    elif model == "single-phonon":
        H = build_single_phonon_effective_hamiltonian(p).elements
        block = [space.index(1, "D"), space.index(0, "E")]
    else:
        raise ValueError(f"unknown coupling model {model!r}")
    evals, evecs = np.linalg.eigh(H)
    weight = np.sum(np.abs(evecs[block, :]) ** 2, axis=0)
    pair = np.sort(evals[weight > 0.5])
    if pair.size != 2:
        raise RuntimeError(f"expected two dressed states in the block, found {pair.size}")
    return float(pair[1] - pair[0])
