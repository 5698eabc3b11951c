"""Device-level parameter estimates: cantilever mode, nanomagnet field
curvature, two-phonon coupling rate and thermal occupation.

SI units throughout; frequencies returned as angular frequencies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J / K
# mu_B g_e / h with mu_B / h = 14 GHz/T and g_e = 2
GAMMA_E_HZ_PER_T = 28e9


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class DeviceGeometry:
    """Cantilever + two coaxial cylindrical magnets.

    Defaults describe the diamond cantilever and Dy magnets used throughout:
    4 x 0.1 x 0.02 um beam, 30 nm diameter by 40 nm tall magnets with an
    80 nm gap, 3.7 T saturation field, 10 mK.
    """

    length: float = 4e-6
    width: float = 0.1e-6
    thickness: float = 0.02e-6
    magnet_radius: float = 15e-9
    magnet_height: float = 40e-9
    gap: float = 80e-9
    mu0_Ms: float = 3.7
    youngs_modulus: float = 1.22e12
    density: float = 3.52e3
    temperature: float = 10e-3
    misalignment: float = 0.0

    def __post_init__(self):
        for name in ("length", "width", "thickness", "magnet_radius", "magnet_height",
                     "gap", "mu0_Ms", "youngs_modulus", "density"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")

    def with_(self, **changes) -> DeviceGeometry:
        return replace(self, **changes)


@dataclass(frozen=True)
class DeviceDerived:
    omega_m: float
    mass: float
    z_zpf: float
    G: float
    g: float
    n_th: float


def cantilever_mode(geom: DeviceGeometry) -> tuple[float, float, float]:
    """Fundamental flexural frequency, effective mass and zero-point motion."""
    omega_m = 3.516 * geom.thickness / geom.length ** 2 * math.sqrt(
        geom.youngs_modulus / (12 * geom.density))
    mass = geom.density * geom.length * geom.width * geom.thickness / 4
    z_zpf = math.sqrt(HBAR / (2 * mass * omega_m))
    return omega_m, mass, z_zpf


def _magnet_faces(geom: DeviceGeometry) -> list[tuple[float, float]]:
    """(bottom, top) face positions of the two magnets on the z axis."""
    half, h = geom.gap / 2, geom.magnet_height
    return [(half, half + h), (-half - h, -half)]


def _cylinder_axial(z, bottom: float, top: float, radius: float, mu0_Ms: float):
    u1, u2 = z - bottom, z - top
    return 0.5 * mu0_Ms * (u1 / np.sqrt(u1 ** 2 + radius ** 2) - u2 / np.sqrt(u2 ** 2 + radius ** 2))


def axial_field(geom: DeviceGeometry, z):
    """On-axis B_z of the magnet pair, both magnetised along +z, in tesla."""
    z = np.asarray(z, dtype=float)
    for bottom, top in _magnet_faces(geom):
        if np.any((z > bottom) & (z < top)):
            raise ValueError("axial_field evaluated inside magnet material")
    total = sum(_cylinder_axial(z, b, t, geom.magnet_radius, geom.mu0_Ms)
                for b, t in _magnet_faces(geom))
    return total if total.ndim else float(total)


def richardson_second_derivative(f, x0: float, h0: float, rtol: float = 1e-4,
                                 max_levels: int = 8) -> float:
    """Central second difference refined by Richardson extrapolation.

    Steps are halved until two successive extrapolated estimates agree to
    ``rtol``.
    """
    f0 = f(x0)
    table: list[list[float]] = []
    h = h0
    for level in range(max_levels):
        d = (f(x0 + h) - 2 * f0 + f(x0 - h)) / h ** 2
        row = [d]
        for j in range(1, level + 1):
            row.append(row[j - 1] + (row[j - 1] - table[level - 1][j - 1]) / (4 ** j - 1))
        table.append(row)
        if level >= 1:
            best, prev = row[-1], table[level - 1][-1]
            if abs(best - prev) <= rtol * abs(best):
                return best
        h /= 2
    raise ConvergenceError(
        f"second derivative did not converge to rtol={rtol} after {max_levels} halvings"
    )


def second_order_gradient(geom: DeviceGeometry) -> float:
    """Field curvature d^2 B_z / dz^2 at the midpoint, in T/m^2."""
    return richardson_second_derivative(lambda z: axial_field(geom, z), 0.0, geom.gap / 50)


def two_phonon_coupling(z_zpf: float, G: float) -> float:
    """g = 1/2 mu_B g_e z_zpf^2 G, returned as an angular frequency.

    The Zeeman energy is converted with mu_B g_e / h = 28 GHz/T, which gives
    the coupling in Hz; the result is multiplied by 2 pi.
    """
    return 2 * math.pi * 0.5 * GAMMA_E_HZ_PER_T * z_zpf ** 2 * G


def thermal_occupation(omega_m: float, T: float) -> float:
    if T <= 0 or omega_m <= 0:
        raise ValueError("thermal occupation needs T > 0 and omega_m > 0")
    x = HBAR * omega_m / (K_B * T)
    # exp(-x) / (1 - exp(-x)) stays finite when x is huge
    return math.exp(-x) / -math.expm1(-x)


def q_to_gamma(Q: float, n_th: float, omega_m: float) -> float:
    """Engineered decay from the quality factor, gamma_m_eff = n_th omega_m / Q."""
    if Q <= 0:
        raise ValueError(f"Q must be > 0, got {Q}")
    return n_th * omega_m / Q


def gamma_to_q(gamma_m_eff: float, n_th: float, omega_m: float) -> float:
    return n_th * omega_m / gamma_m_eff


def derive(geom: DeviceGeometry) -> DeviceDerived:
    omega_m, mass, z_zpf = cantilever_mode(geom)
    G = second_order_gradient(geom)
    n_th = thermal_occupation(omega_m, geom.temperature) if geom.temperature > 0 else 0.0
    return DeviceDerived(omega_m, mass, z_zpf, G, two_phonon_coupling(z_zpf, G), n_th)


# -- surface-charge quadrature for arbitrary orientation -----------------------

@dataclass(frozen=True)
class _Disk:
    center: np.ndarray
    normal: np.ndarray
    sign: float


def _rotation_y(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def _charged_faces(geom: DeviceGeometry, theta: float) -> list[_Disk]:
    rot = _rotation_y(theta)
    axis = rot @ np.array([0.0, 0.0, 1.0])
    disks = []
    for bottom, top in _magnet_faces(geom):
        # magnetisation along the axis: +Ms on the top face, -Ms on the bottom
        disks.append(_Disk(rot @ np.array([0, 0, top]), axis, +1.0))
        disks.append(_Disk(rot @ np.array([0, 0, bottom]), axis, -1.0))
    return disks


def _disk_nodes(radius: float, n_r: int, n_phi: int):
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * radius * (x + 1)
    wr = 0.5 * radius * w * r
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    wphi = 2 * np.pi / n_phi
    rr, pp = np.meshgrid(r, phi, indexing="ij")
    weights = np.outer(wr, np.full(n_phi, wphi))
    return rr.ravel(), pp.ravel(), weights.ravel()


def _disk_frame(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    trial = np.array([1.0, 0, 0]) if abs(normal[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = trial - normal * (trial @ normal)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(normal, e1)


def _field_quadrature(geom: DeviceGeometry, theta: float, points: np.ndarray,
                      n_r: int, n_phi: int) -> np.ndarray:
    rr, pp, w = _disk_nodes(geom.magnet_radius, n_r, n_phi)
    B = np.zeros_like(points, dtype=float)
    for disk in _charged_faces(geom, theta):
        e1, e2 = _disk_frame(disk.normal)
        src = (disk.center[None, :] + (rr * np.cos(pp))[:, None] * e1
               + (rr * np.sin(pp))[:, None] * e2)
        sep = points[:, None, :] - src[None, :, :]
        dist3 = np.linalg.norm(sep, axis=2) ** 3
        B += disk.sign * np.einsum("pqk,q->pk", sep / dist3[..., None], w)
    return geom.mu0_Ms / (4 * np.pi) * B


def field_quadrature(geom: DeviceGeometry, points, theta: float = 0.0, rtol: float = 1e-10,
                     n_r: int = 16, n_phi: int = 32, max_refine: int = 4) -> np.ndarray:
    """B field (tesla) of the possibly tilted magnet pair at ``points`` (m).

    Each end face is a uniformly charged disk (density +-Ms); the disk
    integrals use Gauss-Legendre in radius and the periodic trapezoid rule in
    angle, doubling both orders until successive results agree to ``rtol``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    prev = _field_quadrature(geom, theta, pts, n_r, n_phi)
    for _ in range(max_refine):
        n_r, n_phi = 2 * n_r, 2 * n_phi
        cur = _field_quadrature(geom, theta, pts, n_r, n_phi)
        scale = max(float(np.max(np.abs(cur))), 1e-300)
        if np.max(np.abs(cur - prev)) <= rtol * scale:
            return cur
        prev = cur
    raise ConvergenceError(f"surface-charge quadrature did not reach rtol={rtol}")


def gradient_with_tilt(geom: DeviceGeometry, theta: float) -> float:
    """d^2 B_z / dz^2 at the origin along the lab z axis with the pair tilted by theta."""

    def bz(z):
        return field_quadrature(geom, [[0.0, 0.0, z]], theta)[0, 2]

    return richardson_second_derivative(bz, 0.0, geom.gap / 50)


def misalignment_error(geom: DeviceGeometry, theta: float) -> float:
    """Relative coupling change (g_theta - g_0) / g_0 for a rigid tilt of the pair."""
    if abs(theta) > math.radians(15) + 1e-12:
        raise ValueError("misalignment model is limited to |theta| <= 15 degrees")
    if theta == 0:
        return 0.0
    return gradient_with_tilt(geom, theta) / gradient_with_tilt(geom, 0.0) - 1.0
