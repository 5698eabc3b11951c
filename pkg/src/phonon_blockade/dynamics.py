"""Lindblad dynamics on the dense Liouville space.

Vectorisation is column stacking (Fortran order): ``vec(A X B) = (B^T kron A)
vec(X)``, and every superoperator acts on ``vec(rho)`` from the left.  With
that convention

    L = -i (I kron H - H^T kron I)
        + sum_k gamma_k [conj(c_k) kron c_k
                         - 1/2 (I kron c_k^+ c_k + (c_k^+ c_k)^T kron I)]
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .qcore import DensityMatrix, HilbertSpace, Operator, annihilation, rotate_diagonal

Collapse = Sequence[tuple[Operator, float]]

# time steps per period of the fastest frequency in fixed-step RK4
STEPS_PER_FAST_PERIOD = 40
PROPAGATED_POSITIVITY_TOL = 1e-7


class SteadyStateError(RuntimeError):
    pass


class StepSizeError(RuntimeError):
    pass


def vec(rho) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


@dataclass(frozen=True)
class Liouvillian:
    space: HilbertSpace
    matrix: np.ndarray
    hamiltonian: Operator | None = None
    collapse: tuple = ()

    def apply(self, rho) -> np.ndarray:
        rho = getattr(rho, "elements", rho)
        return unvec(self.matrix @ vec(rho), self.space.dim)

    def norm(self) -> float:
        return float(np.max(np.sum(np.abs(self.matrix), axis=1)))

    def fast_frequency(self) -> float:
        if self.hamiltonian is None:
            # crude bound when only the superoperator is known
            return self.norm()
        return _fast_frequency(self.hamiltonian.elements, self.collapse)


def _hamiltonian_superop(H: np.ndarray) -> np.ndarray:
    eye = np.eye(H.shape[0])
    return -1j * (np.kron(eye, H) - np.kron(H.T, eye))


def _dissipator_superop(c: np.ndarray, rate: float) -> np.ndarray:
    eye = np.eye(c.shape[0])
    cdc = c.conj().T @ c
    return rate * (np.kron(c.conj(), c) - 0.5 * np.kron(eye, cdc) - 0.5 * np.kron(cdc.T, eye))


def _check_collapse(space: HilbertSpace, collapse: Collapse) -> tuple:
    out = []
    for op, rate in collapse:
        if rate < 0:
            raise ValueError(f"collapse rate must be >= 0, got {rate}")
        if op.space != space:
            raise ValueError("collapse operator lives on a different space")
        out.append((op, float(rate)))
    return tuple(out)


def build_liouvillian(H: Operator, collapse: Collapse, hermitian_tol: float = 1e-10) -> Liouvillian:
    if not H.is_hermitian(hermitian_tol * max(1.0, float(np.max(np.abs(H.elements))))):
        raise ValueError("build_liouvillian needs a Hermitian Hamiltonian")
    collapse = _check_collapse(H.space, collapse)
    L = _hamiltonian_superop(H.elements)
    for op, rate in collapse:
        if rate:
            L = L + _dissipator_superop(op.elements, rate)
    L.setflags(write=False)
    return Liouvillian(H.space, L, H, collapse)


def kernel_dimension(L: Liouvillian, rtol: float = 1e-9) -> int:
    s = np.linalg.svd(L.matrix, compute_uv=False)
    return int(np.sum(s <= rtol * s[0]))


def steady_state(L: Liouvillian, residual_rtol: float = 1e-10) -> DensityMatrix:
    """Unique steady state by dense LU with the first population row replaced
    by the trace condition."""
    dim = L.space.dim
    M = np.array(L.matrix)
    M[0, :] = vec(np.eye(dim))
    b = np.zeros(dim * dim, dtype=complex)
    b[0] = 1.0
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            x = sla.solve(M, b)
    except (np.linalg.LinAlgError, sla.LinAlgWarning) as exc:
        k = kernel_dimension(L)
        raise SteadyStateError(
            f"Liouvillian steady state is not unique: kernel dimension {k}"
        ) from exc
    rho = unvec(x, dim)
    residual = float(np.max(np.abs(L.matrix @ x)))
    if not np.isfinite(residual) or residual > residual_rtol * L.norm():
        k = kernel_dimension(L)
        raise SteadyStateError(
            f"steady-state residual {residual:.3e} exceeds {residual_rtol:g}*||L||; "
            f"kernel dimension {k}"
        )
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(L.space, rho)


# -- time-dependent generators -------------------------------------------------

@dataclass(frozen=True)
class DrivenSystem:
    """Time-dependent Hamiltonian plus constant collapse channels."""

    space: HilbertSpace
    hamiltonian: Callable[[float], Operator]
    collapse: tuple = ()
    fast_frequency: float | None = None

    def rhs(self, t: float, rho: np.ndarray) -> np.ndarray:
        return _lindblad_rhs(self.hamiltonian(t).elements, rho, self.collapse)

    def superoperator(self, t: float) -> np.ndarray:
        L = _hamiltonian_superop(self.hamiltonian(t).elements)
        for op, rate in self.collapse:
            if rate:
                L = L + _dissipator_superop(op.elements, rate)
        return L


def driven_system(space: HilbertSpace, hamiltonian: Callable[[float], Operator],
                  collapse: Collapse, fast_frequency: float | None = None) -> DrivenSystem:
    collapse = _check_collapse(space, collapse)
    if fast_frequency is None:
        fast_frequency = _fast_frequency(hamiltonian(0.0).elements, collapse)
    return DrivenSystem(space, hamiltonian, collapse, fast_frequency)


def rotating_frame(system: DrivenSystem, frame_energies) -> DrivenSystem:
    """Move to the interaction picture of a diagonal H0.

    Collapse operators must be eigenoperators of H0 (a single Bohr frequency),
    which leaves their dissipators unchanged.  Populations are unaffected by
    the transformation.
    """
    e = np.asarray(frame_energies, dtype=float)
    bohr = np.subtract.outer(e, e)
    for op, _ in system.collapse:
        freqs = bohr[np.abs(op.elements) > 0]
        if freqs.size and np.ptp(freqs) > 1e-9 * max(1.0, np.max(np.abs(e))):
            raise ValueError("collapse operator is not an eigenoperator of the frame Hamiltonian")
    h0 = Operator(system.space, np.diag(e))

    def hamiltonian(t: float) -> Operator:
        return rotate_diagonal(system.hamiltonian(t) - h0, e, t)

    h_probe = system.hamiltonian(0.0).elements - np.diag(e)
    support = np.abs(h_probe) > 0
    rotation = float(np.max(np.abs(bohr[support]), initial=0.0))
    static = _fast_frequency(h_probe * (np.abs(bohr) < 1e-9), system.collapse)
    return DrivenSystem(system.space, hamiltonian, system.collapse, rotation + static)


def _fast_frequency(H: np.ndarray, collapse) -> float:
    evals = np.linalg.eigvalsh(0.5 * (H + H.conj().T))
    spread = float(evals[-1] - evals[0])
    damping = sum(rate * float(np.linalg.norm(op.elements, 2)) ** 2 for op, rate in collapse)
    return spread + damping


def _lindblad_rhs(H: np.ndarray, rho: np.ndarray, collapse) -> np.ndarray:
    out = -1j * (H @ rho - rho @ H)
    for op, rate in collapse:
        if rate:
            c = op.elements
            cd = c.conj().T
            cdc = cd @ c
            out += rate * (c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc))
    return out


def _rk4(f, t, y, dt):
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _norm_drift(rho: np.ndarray) -> float:
    """Departure from a unit-trace state.

    RK4 keeps the trace of a trace-preserving generator exactly, so an
    unstable step shows up in the trace norm and the anti-Hermitian part
    instead; all three are folded into one number.
    """
    herm = 0.5 * (rho + rho.conj().T)
    if not np.all(np.isfinite(herm)):
        return math.inf
    trace_norm = float(np.sum(np.abs(np.linalg.eigvalsh(herm))))
    return max(abs(np.trace(rho) - 1.0), trace_norm - 1.0,
               float(np.max(np.abs(rho - herm))))


def rk4_step_size(fast_frequency: float) -> float:
    if fast_frequency <= 0:
        return math.inf
    return 2 * math.pi / (STEPS_PER_FAST_PERIOD * fast_frequency)


def propagate(generator, rho0: DensityMatrix, t_grid, max_step: float | None = None,
              drift_tol: float = 1e-8) -> list[DensityMatrix]:
    """Fixed-step RK4 integration of d(rho)/dt = L(t) rho.

    ``generator`` is a :class:`Liouvillian` or a :class:`DrivenSystem`.  The
    step is 1/40 of the period of the fastest frequency (or ``max_step`` if
    smaller).  Drift from a unit-trace state (trace, trace norm and
    Hermiticity) is checked at every grid point against
    ``drift_tol * max(1, gamma_max * t)``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a non-empty 1-D sequence")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    if generator.space != rho0.space:
        raise ValueError("generator and initial state live on different spaces")

    if isinstance(generator, Liouvillian):
        dim = generator.space.dim
        Lm = generator.matrix

        def f(t, y):
            return unvec(Lm @ vec(y), dim)

        fast = generator.fast_frequency()
        rates = [r for _, r in generator.collapse]
    else:
        f = generator.rhs
        fast = generator.fast_frequency
        rates = [r for _, r in generator.collapse]
    dt_max = rk4_step_size(fast)
    if max_step is not None:
        dt_max = min(dt_max, max_step)
    gamma_ref = max(rates, default=0.0)

    rho = np.array(rho0.elements)
    out = [rho0]
    for t0, t1 in zip(t_grid[:-1], t_grid[1:]):
        n = max(1, math.ceil((t1 - t0) / dt_max))
        dt = (t1 - t0) / n
        t = t0
        for _ in range(n):
            rho = _rk4(f, t, rho, dt)
            t += dt
        drift = _norm_drift(rho)
        allowed = drift_tol * max(1.0, gamma_ref * (t1 - t_grid[0]))
        if not np.isfinite(drift) or drift > allowed:
            raise StepSizeError(
                f"trace drift {drift:.3e} at t={t1:.6g} exceeds {allowed:.3e}; refine the step"
            )
        out.append(DensityMatrix(rho0.space, rho, positivity_tol=PROPAGATED_POSITIVITY_TOL))
    return out


@dataclass(frozen=True)
class PeriodMap:
    """One-period RK4 propagator of a periodic generator and its time average."""

    space: HilbertSpace
    period: float
    steps: int
    propagator: np.ndarray
    average: np.ndarray = field(repr=False)


def period_map(system: DrivenSystem, period: float, steps: int | None = None) -> PeriodMap:
    """Compose fixed RK4 steps over one period of a T-periodic DrivenSystem.

    The intra-period average uses the trapezoid rule over the step endpoints,
    which converges spectrally for the periodic orbit.
    """
    if steps is None:
        steps = max(8, math.ceil(period / rk4_step_size(system.fast_frequency)))
    dim2 = system.space.dim ** 2
    dt = period / steps
    X = np.eye(dim2, dtype=complex)
    avg = 0.5 * X
    for k in range(steps):
        t = k * dt
        L0 = system.superoperator(t)
        Lh = system.superoperator(t + 0.5 * dt)
        L1 = system.superoperator(t + dt)
        k1 = L0 @ X
        k2 = Lh @ (X + 0.5 * dt * k1)
        k3 = Lh @ (X + 0.5 * dt * k2)
        k4 = L1 @ (X + dt * k3)
        X = X + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        avg += X if k < steps - 1 else 0.5 * X
    return PeriodMap(system.space, period, steps, X, avg / steps)


def quasi_steady_state(system: DrivenSystem, rho0: DensityMatrix, t_end: float, period: float,
                       window: float = 0.1, steps: int | None = None) -> DensityMatrix:
    """Average of rho(t) over the final ``window`` fraction of [0, t_end].

    The propagation is the same fixed-step RK4 as :func:`propagate`, applied
    stroboscopically through the one-period map so that long runs with fast
    drives stay cheap.
    """
    pm = period_map(system, period, steps)
    n_total = max(1, math.ceil(t_end / period))
    n_window = max(1, round(window * n_total))
    v = np.linalg.matrix_power(pm.propagator, n_total - n_window) @ vec(rho0.elements)
    acc = np.zeros_like(v)
    for _ in range(n_window):
        acc += pm.average @ v
        v = pm.propagator @ v
    rho = unvec(acc / n_window, system.space.dim)
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(system.space, rho, positivity_tol=PROPAGATED_POSITIVITY_TOL)


def g2_tau(L: Liouvillian, rho_ss: DensityMatrix, tau_grid) -> np.ndarray:
    """Delayed second-order correlation by the quantum regression theorem.

    B(0) = a rho_ss a^+ is evolved under L; g2(tau) = tr(a^+ a B(tau)) / <n>^2.
    Propagation uses the exact exponential of L per grid increment.
    """
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or tau.size == 0 or tau[0] < 0 or np.any(np.diff(tau) <= 0):
        raise ValueError("tau_grid must be non-negative and strictly increasing")
    space = L.space
    a = annihilation(space).elements
    n_op = a.conj().T @ a
    rho = rho_ss.elements
    n_ss = float(np.real(np.trace(n_op @ rho)))
    if n_ss <= 0:
        raise ValueError("mean phonon number is zero; g2(tau) is undefined")
    dim = space.dim
    v = vec(a @ rho @ a.conj().T)
    cache: dict[float, np.ndarray] = {}
    if tau[0] > 0:
        v = sla.expm(L.matrix * tau[0]) @ v
    out = [np.real(np.trace(n_op @ unvec(v, dim)))]
    for dtau in np.diff(tau):
        key = float(f"{dtau:.10e}")
        if key not in cache:
            cache[key] = sla.expm(L.matrix * dtau)
        v = cache[key] @ v
        out.append(np.real(np.trace(n_op @ unvec(v, dim))))
    return np.array(out) / n_ss ** 2
