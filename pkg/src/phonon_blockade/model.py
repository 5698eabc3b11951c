"""Parameters and Hamiltonian builders for the parametrically amplified
two-phonon spin-mechanical system.

All frequencies are angular (rad/s).  The spin is the effective two-level
system {|D>, |E>} obtained from :func:`dress_spin`; the third dressed state is
never represented.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .qcore import (
    HilbertSpace,
    Operator,
    annihilation,
    excited_projector,
    number,
    spin_lower,
)


@dataclass(frozen=True)
class SpinDressing:
    Delta: float
    Omega: float
    theta: float
    omega_ed: float

    @property
    def omega_eg(self) -> float:
        return math.sqrt(self.Delta ** 2 + 2 * self.Omega ** 2)

    @property
    def omega_dg(self) -> float:
        return 0.5 * (self.Delta + self.omega_eg)

    @property
    def coupling_factor(self) -> float:
        """cos(theta): the factor dropped when the reduction sets it to 1."""
        return math.cos(self.theta)


def dress_spin(Delta: float, Omega: float) -> SpinDressing:
    """Diagonalise the microwave-dressed NV triplet.

    The reduction to {|D>, |E>} is only meaningful for ``Delta >> Omega`` where
    cos(theta) ~ 1; the exact mixing angle and splitting are returned so the
    caller can judge how far from that limit they are.
    """
    if Delta <= 0:
        raise ValueError(f"microwave detuning Delta must be > 0, got {Delta}")
    if Omega < 0:
        raise ValueError(f"Rabi frequency Omega must be >= 0, got {Omega}")
    theta = 0.5 * math.atan2(math.sqrt(2) * Omega, Delta)
    omega_ed = 0.5 * (math.sqrt(Delta ** 2 + 2 * Omega ** 2) - Delta)
    return SpinDressing(Delta=Delta, Omega=Omega, theta=theta, omega_ed=omega_ed)


@dataclass(frozen=True)
class SqueezeTransform:
    r_p: float = 0.0

    def __post_init__(self):
        if self.r_p < 0:
            raise ValueError(f"squeezing parameter must be >= 0, got {self.r_p}")

    @classmethod
    def from_pump(cls, Omega_p: float, delta_m: float) -> SqueezeTransform:
        if abs(Omega_p) >= abs(delta_m):
            raise ValueError(
                f"parametric pump |Omega_p|={abs(Omega_p)} must stay below |delta_m|={abs(delta_m)}"
            )
        return cls(0.5 * math.atanh(Omega_p / delta_m))

    @property
    def U(self) -> float:
        return math.cosh(self.r_p)

    @property
    def V(self) -> float:
        return math.sinh(self.r_p)


@dataclass(frozen=True)
class ModelParams:
    """Squeezed-frame model parameters.

    ``g`` is the bare coupling: two-phonon g for the main model, or the
    single-phonon g0 when used with the single-phonon builders.
    ``delta`` is the drive detuning delta_s - delta_L in the frame rotating at
    the drive frequency.
    """

    g: float
    squeeze: SqueezeTransform = field(default_factory=SqueezeTransform)
    eps_L: float = 0.0
    delta: float = 0.0
    delta_s: float = 0.0
    delta_ed: float = 0.0
    gamma_m_eff: float = 0.0
    gamma_z: float = 0.0
    n_th: float = 0.0
    fock_dim: int = 15

    def __post_init__(self):
        for name in ("g", "eps_L", "gamma_m_eff", "gamma_z", "n_th"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        HilbertSpace(self.fock_dim)

    @classmethod
    def from_lab(cls, *, delta_m: float, Omega_p: float, **kwargs) -> ModelParams:
        """Build from lab-frame pump detuning and amplitude."""
        sq = SqueezeTransform.from_pump(Omega_p, delta_m)
        return cls(squeeze=sq, delta_s=delta_m / math.cosh(2 * sq.r_p), **kwargs)

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace(self.fock_dim)

    @property
    def r_p(self) -> float:
        return self.squeeze.r_p

    @property
    def g_eff(self) -> float:
        return self.g * self.squeeze.U ** 2

    @property
    def g_eff_single(self) -> float:
        return self.g * self.squeeze.U

    @property
    def eps_L_eff(self) -> float:
        return self.eps_L * self.squeeze.U

    @property
    def delta_L(self) -> float:
        return self.delta_s - self.delta

    @property
    def delta_m(self) -> float:
        return self.delta_s * math.cosh(2 * self.r_p)

    @property
    def Omega_p(self) -> float:
        return self.delta_m * math.tanh(2 * self.r_p)

    @property
    def cooperativity(self) -> float:
        return self.g_eff ** 2 / (self.gamma_m_eff * self.gamma_z)

    def with_(self, **changes) -> ModelParams:
        if "r_p" in changes:
            changes["squeeze"] = SqueezeTransform(changes.pop("r_p"))
        return replace(self, **changes)


def _ops(params: ModelParams):
    space = params.space
    a = annihilation(space)
    return space, a, a.dag(), spin_lower(space)


def _drive(a: Operator, ad: Operator, phase: complex) -> Operator:
    # ad * phase + a * conj(phase)
    return phase * ad + np.conj(phase) * a


def build_lab_hamiltonian(params: ModelParams, t: float) -> Operator:
    """Two-phonon JC Hamiltonian with linear and two-phonon drive, pump frame."""
    space, a, ad, sm = _ops(params)
    sp = sm.dag()
    g = params.g
    H = (params.delta_m * number(space)
         + params.delta_ed * excited_projector(space)
         + g * (ad @ ad @ sm + a @ a @ sp)
         + 0.5 * params.Omega_p * (ad @ ad + a @ a)
         + params.eps_L * _drive(a, ad, np.exp(-1j * params.delta_L * t)))
    return H


def build_squeezed_full_hamiltonian(params: ModelParams, t: float) -> Operator:
    """Lab Hamiltonian in the squeezed frame, keeping every counter-rotating term."""
    space, a, ad, sm = _ops(params)
    sp = sm.dag()
    U, V = params.squeeze.U, params.squeeze.V
    g, eps = params.g, params.eps_L
    w = np.exp(-1j * params.delta_L * t)
    H = (params.delta_s * number(space)
         + params.delta_ed * excited_projector(space)
         + g * U ** 2 * (ad @ ad @ sm + a @ a @ sp)
         + g * V ** 2 * (ad @ ad @ sp + a @ a @ sm)
         - g * U * V * (ad @ a + a @ ad) @ (sp + sm)
         + eps * U * _drive(a, ad, w)
         - eps * V * _drive(a, ad, np.conj(w)))
    return H


def build_squeezed_rwa_hamiltonian(params: ModelParams, t: float) -> Operator:
    """Squeezed-frame Hamiltonian after dropping the off-resonant terms."""
    space, a, ad, sm = _ops(params)
    H = (params.delta_s * number(space)
         + params.delta_ed * excited_projector(space)
         + params.g_eff * (ad @ ad @ sm + a @ a @ sm.dag())
         + params.eps_L_eff * _drive(a, ad, np.exp(-1j * params.delta_L * t)))
    return H


def build_effective_hamiltonian(params: ModelParams) -> Operator:
    """Time-independent model in the drive frame with delta_ed = 2 delta_s."""
    space, a, ad, sm = _ops(params)
    H = (params.delta * (number(space) + 2 * excited_projector(space))
         + params.g_eff * (ad @ ad @ sm + a @ a @ sm.dag())
         + params.eps_L_eff * (ad + a))
    return H


def build_nonhermitian_hamiltonian(params: ModelParams) -> Operator:
    space = params.space
    damping = (0.5 * params.gamma_m_eff * number(space)
               + 0.5 * params.gamma_z * excited_projector(space))
    return build_effective_hamiltonian(params) - 1j * damping


def build_single_phonon_hamiltonian(params: ModelParams, t: float, rwa: bool = False) -> Operator:
    """Single-phonon coupling variant in the squeezed frame.

    ``params.g`` is the bare single-phonon coupling g0 and ``params.delta_ed``
    the spin detuning measured from the single pump quantum.  With ``rwa`` the
    counter-rotating coupling and drive terms are dropped and the coupling
    becomes g0 cosh(r_p).
    """
    space, a, ad, sm = _ops(params)
    sp = sm.dag()
    U, V = params.squeeze.U, params.squeeze.V
    g0, eps = params.g, params.eps_L
    w = np.exp(-1j * params.delta_L * t)
    H = (params.delta_s * number(space)
         + params.delta_ed * excited_projector(space)
         + g0 * U * (ad @ sm + a @ sp)
         + eps * U * _drive(a, ad, w))
    if not rwa:
        H = H - g0 * V * (a @ sm + ad @ sp) - eps * V * _drive(a, ad, np.conj(w))
    return H


def build_single_phonon_effective_hamiltonian(params: ModelParams) -> Operator:
    """Drive-frame RWA single-phonon model with delta_ed = delta_s."""
    space, a, ad, sm = _ops(params)
    return (params.delta * (number(space) + excited_projector(space))
            + params.g_eff_single * (ad @ sm + a @ sm.dag())
            + params.eps_L_eff * (ad + a))


def drive_frame_energies(params: ModelParams, spin_quanta: int = 2) -> np.ndarray:
    """Diagonal of H0 = delta_L (a^+ a + k sigma_+ sigma_-) used for the drive frame."""
    space = params.space
    n = np.repeat(np.arange(space.fock_dim), 2).astype(float)
    s = np.tile([0.0, 1.0], space.fock_dim)
    return params.delta_L * (n + spin_quanta * s)


def collapse_operators(params: ModelParams) -> list[tuple[Operator, float]]:
    """Mechanical decay of the squeezed mode and pure spin dephasing."""
    space = params.space
    return [(annihilation(space), params.gamma_m_eff),
            (excited_projector(space), params.gamma_z)]
