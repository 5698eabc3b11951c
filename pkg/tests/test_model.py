import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phonon_blockade.analytic import numeric_splitting
from phonon_blockade.model import (
    ModelParams,
    SqueezeTransform,
    build_effective_hamiltonian,
    build_lab_hamiltonian,
    build_nonhermitian_hamiltonian,
    build_single_phonon_effective_hamiltonian,
    build_single_phonon_hamiltonian,
    build_squeezed_full_hamiltonian,
    build_squeezed_rwa_hamiltonian,
    collapse_operators,
    drive_frame_energies,
    dress_spin,
)
from phonon_blockade.qcore import rotate_diagonal

TWO_PI = 2 * math.pi


def params(**kw):
    base = dict(g=TWO_PI * 1.1, squeeze=SqueezeTransform(1.0), eps_L=0.3, delta=0.2,
                delta_s=5.0, delta_ed=9.0, gamma_m_eff=1.0, gamma_z=0.5, fock_dim=6)
    base.update(kw)
    return ModelParams(**base)


# -- dressing ----------------------------------------------------------------------

def test_dressing_without_microwave():
    d = dress_spin(3.0, 0.0)
    assert d.theta == 0.0
    assert d.omega_ed == 0.0


def test_dressing_matches_leading_order():
    d = dress_spin(10.0, 1.0)
    assert d.omega_ed == pytest.approx(1.0 / 20.0, rel=0.01)


def test_dressing_equal_detuning_and_rabi():
    assert dress_spin(2.0, 2.0).theta == 0.5 * math.atan(math.sqrt(2))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 100), st.floats(0, 100))
def test_dressing_invariants(Delta, Omega):
    d = dress_spin(Delta, Omega)
    assert math.tan(2 * d.theta) == pytest.approx(math.sqrt(2) * Omega / Delta, rel=1e-12, abs=1e-15)
    assert d.omega_ed == pytest.approx(d.omega_eg - d.omega_dg, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("Delta,Omega", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.1)])
def test_dressing_rejects_bad_inputs(Delta, Omega):
    with pytest.raises(ValueError):
        dress_spin(Delta, Omega)


# -- squeezing ---------------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(st.floats(0, 5))
def test_bogoliubov_identity(r):
    s = SqueezeTransform(r)
    assert s.U ** 2 - s.V ** 2 == pytest.approx(1.0, abs=1e-12 * s.U ** 2)


def test_squeeze_from_pump():
    s = SqueezeTransform.from_pump(0.5, 1.0)
    assert s.r_p == pytest.approx(0.5 * math.atanh(0.5))
    with pytest.raises(ValueError):
        SqueezeTransform.from_pump(1.0, 1.0)
    with pytest.raises(ValueError):
        SqueezeTransform(-0.1)


def test_from_lab_sets_squeezed_frequency():
    p = ModelParams.from_lab(delta_m=10.0, Omega_p=6.0, g=1.0)
    assert p.delta_s == pytest.approx(10.0 / math.cosh(2 * p.r_p))
    assert p.delta_m == pytest.approx(10.0)
    assert p.Omega_p == pytest.approx(6.0)


def test_effective_rates():
    p = params(squeeze=SqueezeTransform(3.0))
    assert p.g_eff / p.g == pytest.approx(101.4, rel=1e-3)
    assert p.g_eff == pytest.approx(p.g * math.cosh(3.0) ** 2, rel=1e-15)
    assert p.eps_L_eff == pytest.approx(p.eps_L * math.cosh(3.0), rel=1e-15)
    assert p.delta_L == pytest.approx(p.delta_s - p.delta)


def test_params_validation_and_with():
    with pytest.raises(ValueError):
        params(gamma_z=-1.0)
    with pytest.raises(ValueError):
        params(fock_dim=1)
    p = params().with_(r_p=2.0, delta=-0.5)
    assert p.r_p == 2.0 and p.delta == -0.5


# -- Hamiltonians ------------------------------------------------------------------

def test_lab_free_hamiltonian_is_diagonal():
    p = params(g=0.0, eps_L=0.0, squeeze=SqueezeTransform(0.0))
    H = build_lab_hamiltonian(p, 0.7).elements
    n = np.repeat(np.arange(6), 2)
    s = np.tile([0, 1], 6)
    np.testing.assert_allclose(H, np.diag(p.delta_m * n + p.delta_ed * s), atol=1e-14)


@pytest.mark.parametrize("t", [0.0, 0.37, 12.0])
def test_lab_two_phonon_matrix_element(t):
    p = params()
    H = build_lab_hamiltonian(p, t)
    assert H.matrix_element((2, "D"), (0, "E")) == pytest.approx(math.sqrt(2) * p.g)


def test_lab_time_dependence_only_in_drive():
    p = params()
    diff = build_lab_hamiltonian(p, 1.3).elements - build_lab_hamiltonian(p, 0.0).elements
    drive = build_lab_hamiltonian(p.with_(eps_L=1.0, g=0.0), 0.0).elements
    support = np.abs(diff) > 1e-12
    # every changed entry is a one-phonon hop with unchanged spin
    rows, cols = np.nonzero(support)
    assert rows.size > 0
    assert np.all(np.abs(rows - cols) == 2)
    assert np.all(np.abs(drive[support]) > 0)


def test_full_squeezed_reduces_to_lab_without_squeezing():
    p = params(squeeze=SqueezeTransform(0.0))
    for t in (0.0, 0.4, 3.3):
        np.testing.assert_allclose(build_squeezed_full_hamiltonian(p, t).elements,
                                   build_lab_hamiltonian(p, t).elements, atol=1e-14)


def test_full_squeezed_has_no_two_phonon_drive():
    H = build_squeezed_full_hamiltonian(params(), 0.3)
    assert H.matrix_element((2, "D"), (0, "D")) == 0


def test_full_squeezed_counter_rotating_coefficient():
    p = params(squeeze=SqueezeTransform(1.3))
    H = build_squeezed_full_hamiltonian(p, 0.0)
    coeff = H.matrix_element((2, "E"), (0, "D")) / math.sqrt(2)
    assert coeff == pytest.approx(p.g * math.sinh(1.3) ** 2, rel=1e-12)


def test_squeezed_frame_matches_transformed_lab_hamiltonian():
    # independent check: apply the Bogoliubov map to the lab operators in a
    # large truncation and compare low-lying matrix elements
    N = 40
    r = 0.4
    p = params(squeeze=SqueezeTransform(r), fock_dim=N, delta_s=3.0)
    from phonon_blockade.qcore import annihilation, spin_lower

    a = annihilation(p.space).elements
    ad = a.conj().T
    sm = spin_lower(p.space).elements
    sp = sm.conj().T
    U, V = math.cosh(r), math.sinh(r)
    b = U * a - V * ad   # lab mode expressed through the squeezed mode
    bd = b.conj().T
    t = 0.21
    w = np.exp(-1j * p.delta_L * t)
    H_lab = (p.delta_m * bd @ b + p.delta_ed * sp @ sm + p.g * (bd @ bd @ sm + b @ b @ sp)
             + 0.5 * p.Omega_p * (bd @ bd + b @ b) + p.eps_L * (w * bd + np.conj(w) * b))
    H_sq = build_squeezed_full_hamiltonian(p, t).elements
    low = slice(0, 12)
    diff = H_lab - H_sq
    # the transformed free part differs by a constant energy shift only
    shift = diff[0, 0]
    np.testing.assert_allclose((diff - shift * np.eye(2 * N))[low, low], 0, atol=1e-9)


def test_rwa_hamiltonian_drops_counter_rotating_terms():
    p = params()
    H = build_squeezed_rwa_hamiltonian(p, 0.0)
    assert H.matrix_element((2, "E"), (0, "D")) == 0
    assert H.matrix_element((2, "D"), (0, "E")) == pytest.approx(math.sqrt(2) * p.g_eff)


def test_effective_hamiltonian_block_splitting():
    p = params(delta=0.0, eps_L=0.0)
    H = build_effective_hamiltonian(p)
    i, j = p.space.index(2, "D"), p.space.index(0, "E")
    block = H.elements[np.ix_([i, j], [i, j])]
    evals = np.linalg.eigvalsh(block)
    np.testing.assert_allclose(evals, [-math.sqrt(2) * p.g_eff, math.sqrt(2) * p.g_eff], rtol=1e-12)


def test_effective_hamiltonian_is_real():
    H = build_effective_hamiltonian(params())
    assert np.all(H.elements.imag == 0)


@settings(max_examples=25, deadline=None)
@given(g=st.floats(0.01, 10), r=st.floats(0, 2), eps=st.floats(0, 3), delta=st.floats(-5, 5),
       delta_s=st.floats(0.1, 20), t=st.floats(0, 10))
def test_effective_equals_rotated_rwa(g, r, eps, delta, delta_s, t):
    p = ModelParams(g=g, squeeze=SqueezeTransform(r), eps_L=eps, delta=delta, delta_s=delta_s,
                    delta_ed=2 * delta_s, fock_dim=5)
    e0 = drive_frame_energies(p)
    h0 = np.diag(e0)
    H = build_squeezed_rwa_hamiltonian(p, t)
    rotated = rotate_diagonal(H - type(H)(p.space, h0), e0, t)
    np.testing.assert_allclose(rotated.elements, build_effective_hamiltonian(p).elements,
                               atol=1e-9 * max(1.0, delta_s))


@settings(max_examples=25, deadline=None)
@given(g=st.floats(0, 10), r=st.floats(0, 3), eps=st.floats(0, 3), delta=st.floats(-5, 5),
       t=st.floats(0, 100))
def test_every_builder_is_hermitian(g, r, eps, delta, t):
    p = ModelParams(g=g, squeeze=SqueezeTransform(r), eps_L=eps, delta=delta, delta_s=2.0,
                    delta_ed=3.0, fock_dim=5)
    for H in (build_lab_hamiltonian(p, t), build_squeezed_full_hamiltonian(p, t),
              build_squeezed_rwa_hamiltonian(p, t), build_effective_hamiltonian(p),
              build_single_phonon_hamiltonian(p, t), build_single_phonon_hamiltonian(p, t, rwa=True),
              build_single_phonon_effective_hamiltonian(p)):
        scale = max(1.0, float(np.max(np.abs(H.elements))))
        assert H.is_hermitian(1e-12 * scale)


def test_nonhermitian_damping_diagonal():
    p = params()
    Hnh = build_nonhermitian_hamiltonian(p).elements
    H = build_effective_hamiltonian(p).elements
    np.testing.assert_array_equal(0.5 * (Hnh + Hnh.conj().T), H)
    n = np.repeat(np.arange(6), 2)
    s = np.tile([0, 1], 6)
    anti = 0.5 * (Hnh - Hnh.conj().T)
    np.testing.assert_allclose(anti, np.diag(-1j * (0.5 * p.gamma_m_eff * n + 0.5 * p.gamma_z * s)),
                               atol=1e-15)


def test_nonhermitian_without_loss_is_hermitian():
    p = params(gamma_m_eff=0.0, gamma_z=0.0)
    np.testing.assert_array_equal(build_nonhermitian_hamiltonian(p).elements,
                                  build_effective_hamiltonian(p).elements)


def test_nonhermitian_single_phonon_decay_rate():
    p = params(g=0.0, eps_L=0.0)
    evals = np.linalg.eigvals(build_nonhermitian_hamiltonian(p).elements)
    target = p.delta - 0.5j * p.gamma_m_eff
    assert np.min(np.abs(evals - target)) < 1e-12


def test_single_phonon_jaynes_cummings_splitting():
    p = params(squeeze=SqueezeTransform(0.0), g=0.7, delta=0.0, eps_L=0.0)
    assert numeric_splitting(p, "single-phonon") == pytest.approx(2 * 0.7, rel=1e-12)
    p = p.with_(r_p=1.2)
    assert numeric_splitting(p, "single-phonon") == pytest.approx(2 * 0.7 * math.cosh(1.2), rel=1e-12)


def test_single_phonon_full_equals_rwa_without_squeezing():
    p = params(squeeze=SqueezeTransform(0.0))
    for t in (0.0, 1.1, 4.2):
        np.testing.assert_array_equal(build_single_phonon_hamiltonian(p, t).elements,
                                      build_single_phonon_hamiltonian(p, t, rwa=True).elements)


def test_collapse_channels():
    p = params()
    (a, ga), (sz, gz) = collapse_operators(p)
    assert ga == p.gamma_m_eff and gz == p.gamma_z
    assert sz.matrix_element((0, "E"), (0, "E")) == 1
