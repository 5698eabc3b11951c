"""Dense operator algebra on the truncated mechanics (x) spin Hilbert space.

Index convention: mechanics is the slow index and spin the fast one, so the
basis vector |n, s> sits at position ``2 * n + s`` with ``s = 0`` for the dark
state |D> and ``s = 1`` for the dressed excited state |E>.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

SPIN_LABELS = ("D", "E")


@dataclass(frozen=True)
class HilbertSpace:
    fock_dim: int
    spin_dim: int = 2

    def __post_init__(self):
        if int(self.fock_dim) != self.fock_dim or self.fock_dim < 2:
            raise ValueError(f"fock_dim must be an integer >= 2, got {self.fock_dim}")
        if self.spin_dim != 2:
            raise ValueError(f"spin_dim must be 2, got {self.spin_dim}")

    @property
    def dim(self) -> int:
        return self.fock_dim * self.spin_dim

    def index(self, n: int, spin: str | int = "D") -> int:
        s = SPIN_LABELS.index(spin) if isinstance(spin, str) else int(spin)
        if not 0 <= n < self.fock_dim:
            raise IndexError(f"Fock level {n} outside truncation N={self.fock_dim}")
        return n * self.spin_dim + s

    def label(self, index: int) -> str:
        n, s = divmod(index, self.spin_dim)
        return f"|{n},{SPIN_LABELS[s]}>"


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    arr.setflags(write=False)
    return arr


class Operator:
    """Immutable dense complex matrix tied to a :class:`HilbertSpace`."""

    __slots__ = ("space", "elements")

    def __init__(self, space: HilbertSpace, elements):
        elements = _frozen(elements)
        if elements.shape != (space.dim, space.dim):
            raise ValueError(
                f"operator shape {elements.shape} does not match space dimension {space.dim}"
            )
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "elements", elements)

    def __setattr__(self, name, value):
        raise AttributeError("Operator is immutable")

    def __repr__(self):
        return f"Operator(fock_dim={self.space.fock_dim}, dim={self.space.dim})"

    def _check(self, other: Operator):
        if not isinstance(other, Operator):
            return NotImplemented
        if other.space != self.space:
            raise ValueError(f"space mismatch: {self.space} vs {other.space}")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Operator(self.space, self.elements + other.elements)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Operator(self.space, self.elements - other.elements)

    def __neg__(self):
        return Operator(self.space, -self.elements)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return Operator(self.space, scalar * self.elements)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.space, self.elements / scalar)

    def __matmul__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Operator(self.space, self.elements @ other.elements)

    def __pow__(self, k: int):
        return Operator(self.space, np.linalg.matrix_power(self.elements, k))

    def dag(self) -> Operator:
        return Operator(self.space, self.elements.conj().T)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.elements - self.elements.conj().T), initial=0.0) <= tol)

    def matrix_element(self, bra: tuple[int, str], ket: tuple[int, str]) -> complex:
        return complex(self.elements[self.space.index(*bra), self.space.index(*ket)])


class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite state on a HilbertSpace.

    Validation is performed at construction; the tolerances are the ones every
    solver in this package promises to meet.
    """

    __slots__ = ("space", "elements")

    HERMITIAN_TOL = 1e-10
    TRACE_TOL = 1e-8
    POSITIVITY_TOL = 1e-8

    def __init__(self, space: HilbertSpace, elements, *, validate: bool = True,
                 positivity_tol: float | None = None):
        elements = _frozen(elements)
        if elements.shape != (space.dim, space.dim):
            raise ValueError(
                f"density matrix shape {elements.shape} does not match dimension {space.dim}"
            )
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "elements", elements)
        if validate:
            self.validate(positivity_tol=positivity_tol)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    def __repr__(self):
        return f"DensityMatrix(fock_dim={self.space.fock_dim})"

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().T)))

    def trace_error(self) -> float:
        return float(abs(np.trace(self.elements) - 1.0))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.elements + self.elements.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def validate(self, positivity_tol: float | None = None) -> None:
        if positivity_tol is None:
            positivity_tol = self.POSITIVITY_TOL
        herr = self.hermiticity_error()
        if herr > self.HERMITIAN_TOL:
            raise ValueError(f"density matrix not Hermitian (max |rho - rho^+| = {herr:.3e})")
        terr = self.trace_error()
        if terr > self.TRACE_TOL:
            raise ValueError(f"density matrix trace deviates from 1 by {terr:.3e}")
        lam = self.min_eigenvalue()
        if lam < -positivity_tol:
            raise ValueError(f"density matrix not positive (min eigenvalue {lam:.3e})")

    def population(self, n: int, spin: str = "D") -> float:
        i = self.space.index(n, spin)
        return float(self.elements[i, i].real)

    def trace_distance(self, other: DensityMatrix) -> float:
        diff = self.elements - other.elements
        return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


# -- factor-level building blocks ---------------------------------------------

def kron(*factors) -> np.ndarray:
    """Kronecker product of any number of factors, left factor slowest."""
    if not factors:
        raise ValueError("kron needs at least one factor")
    return reduce(np.kron, (np.asarray(f) for f in factors))


def destroy(n: int) -> np.ndarray:
    """Truncated single-mode annihilation matrix with <k-1|a|k> = sqrt(k)."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


SIGMA_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)  # |D><E|


def tensor(mech, spin, space: HilbertSpace | None = None) -> Operator:
    """Composite operator ``mech (x) spin`` on the mechanics (x) spin space."""
    mech = np.asarray(mech, dtype=complex)
    spin = np.asarray(spin, dtype=complex)
    if mech.ndim != 2 or mech.shape[0] != mech.shape[1]:
        raise ValueError(f"mechanical factor must be square, got shape {mech.shape}")
    if spin.shape != (2, 2):
        raise ValueError(f"spin factor must be 2x2, got shape {spin.shape}")
    if space is None:
        space = HilbertSpace(mech.shape[0])
    elif space.fock_dim != mech.shape[0]:
        raise ValueError(
            f"mechanical factor dimension {mech.shape[0]} != fock_dim {space.fock_dim}"
        )
    return Operator(space, np.kron(mech, spin))


def identity(space: HilbertSpace) -> Operator:
    return Operator(space, np.eye(space.dim))


def annihilation(space: HilbertSpace) -> Operator:
    return tensor(destroy(space.fock_dim), np.eye(2), space)


def creation(space: HilbertSpace) -> Operator:
    return annihilation(space).dag()


def number(space: HilbertSpace) -> Operator:
    return tensor(np.diag(np.arange(space.fock_dim)), np.eye(2), space)


def spin_lower(space: HilbertSpace) -> Operator:
    return tensor(np.eye(space.fock_dim), SIGMA_LOWER, space)


def spin_raise(space: HilbertSpace) -> Operator:
    return spin_lower(space).dag()


def excited_projector(space: HilbertSpace) -> Operator:
    """|E><E| on the spin factor, i.e. sigma_+ sigma_-."""
    return tensor(np.eye(space.fock_dim), np.diag([0.0, 1.0]), space)


def basis_ket(space: HilbertSpace, n: int, spin: str = "D") -> np.ndarray:
    ket = np.zeros(space.dim, dtype=complex)
    ket[space.index(n, spin)] = 1.0
    return ket


def pure_state(space: HilbertSpace, ket) -> DensityMatrix:
    ket = np.asarray(ket, dtype=complex)
    ket = ket / np.linalg.norm(ket)
    return DensityMatrix(space, np.outer(ket, ket.conj()))


def fock_state(space: HilbertSpace, n: int, spin: str = "D") -> DensityMatrix:
    return pure_state(space, basis_ket(space, n, spin))


def coherent_ket(space: HilbertSpace, alpha: complex, spin: str = "D") -> np.ndarray:
    """Truncated coherent state, built by series and renormalised."""
    n = np.arange(space.fock_dim)
    log_fact = np.cumsum(np.log(np.maximum(n, 1)))
    amps = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * log_fact) * alpha ** n
    spin_vec = np.zeros(2, dtype=complex)
    spin_vec[SPIN_LABELS.index(spin)] = 1.0
    ket = np.kron(amps, spin_vec)
    return ket / np.linalg.norm(ket)


def expectation(rho: DensityMatrix, op: Operator) -> complex:
    if rho.space != op.space:
        raise ValueError(f"space mismatch: {rho.space} vs {op.space}")
    # tr(rho A) without forming the product
    return complex(np.sum(rho.elements.T * op.elements))


def rotate_diagonal(op: Operator, frame_energies, t: float) -> Operator:
    """Return exp(i H0 t) op exp(-i H0 t) for diagonal H0 = diag(frame_energies)."""
    e = np.asarray(frame_energies, dtype=float)
    phase = np.exp(1j * np.subtract.outer(e, e) * t)
    return Operator(op.space, op.elements * phase)
