import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from vibron_qed.errors import ParameterError, TruncationWarning
from vibron_qed.fock import (PhononBasis, bare_initial_state, build_block, build_block_complex,
                             build_block_original, coherent_amplitudes, displacement_matrix,
                             excitation_number_operator, g_branch_projector, rotation_phases,
                             transformed_initial_state)


def test_basis_operators():
    b = PhononBasis(5)
    assert b.dim == 6
    a = b.annihilation()
    assert np.allclose(np.diag(a.T @ a), np.arange(6)[:-1].tolist() + [5])
    assert np.allclose(b.quadrature(), a + a.T)
    assert b.doubled().n_max == 10
    with pytest.raises(ParameterError):
        PhononBasis(0)


@pytest.mark.parametrize("m", [0, 1, 3])
def test_block_shape_symmetry_and_structure(deep, m):
    basis = PhononBasis(30)
    H = build_block(m, deep, basis)
    M = H.matrix
    N = basis.dim
    assert M.shape == (2 * N, 2 * N)
    assert np.max(np.abs(M - M.T)) <= 1e-13
    assert not M.flags.writeable
    assert np.allclose(M[:N, N:], math.sqrt(m + 1) * np.eye(N))
    # diagonal blocks are tridiagonal
    for blk in (M[:N, :N], M[N:, N:]):
        assert np.allclose(np.triu(blk, 2), 0.0)
    assert np.allclose(np.diag(M[:N, :N], 1), (m + 1) * deep.eta * np.sqrt(np.arange(1, N)))
    assert np.allclose(np.diag(M[N:, N:], 1), m * deep.eta * np.sqrt(np.arange(1, N)))


def test_negative_sector_rejected(deep):
    with pytest.raises(ParameterError):
        build_block(-1, deep, PhononBasis(4))


@pytest.mark.parametrize("m", [0, 1, 2])
def test_uncoupled_g_branch_is_bare_ladder(deep, m):
    # the polaron shift cancels the displacement energy exactly
    basis = PhononBasis(80)
    H = build_block(m, deep.replace(g=0.0), basis).matrix
    vals = np.linalg.eigvalsh(H[: basis.dim, : basis.dim])
    assert np.allclose(vals[:10], deep.omega * np.arange(10), atol=1e-10)


def test_resonant_jc_doublet(deep):
    model = deep.replace(eta=0.0, chi=0.0)
    H = build_block(0, model, PhononBasis(4)).matrix
    sub = H[np.ix_([0, 5], [0, 5])]
    assert np.allclose(np.linalg.eigvalsh(sub), [-1.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("m", [0, 1])
def test_complex_frame_isospectral(deep, m):
    basis = PhononBasis(60)
    a = np.linalg.eigvalsh(build_block(m, deep, basis).matrix)
    b = np.linalg.eigvalsh(build_block_complex(m, deep, basis).matrix)
    assert np.max(np.abs(a - b)) <= 1e-10


@pytest.mark.parametrize("m", [0, 1])
def test_untransformed_frame_gives_same_low_spectrum(deep, m):
    basis = PhononBasis(120)
    a = np.linalg.eigvalsh(build_block(m, deep, basis).matrix)
    b = np.linalg.eigvalsh(build_block_original(m, deep, basis).matrix)
    assert np.max(np.abs(a[:20] - b[:20])) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(theta=st.floats(-1.0, 1.0))
def test_displacement_interior_unitarity(theta):
    basis = PhononBasis(60)
    D = displacement_matrix(theta, basis, warn=False).matrix
    k = basis.n_max - 5
    dev = np.max(np.abs((D.conj().T @ D)[:k, :k] - np.eye(k)))
    assert dev <= 1e-10


@settings(max_examples=30, deadline=None)
@given(theta=st.floats(-1.0, 1.0))
def test_displacement_matches_closed_form_coherent_state(theta):
    basis = PhononBasis(60)
    col = displacement_matrix(theta, basis, warn=False).matrix[:, 0]
    ref = coherent_amplitudes(1j * theta, basis)
    assert np.max(np.abs(col[:30] - ref[:30])) <= 1e-12


def test_displacement_against_expm():
    basis = PhononBasis(40)
    X = basis.quadrature()
    D = displacement_matrix(0.3, basis, warn=False).matrix
    assert np.max(np.abs(D - linalg.expm(0.3j * X))) <= 1e-12


def test_displacement_edge_warning():
    with pytest.warns(TruncationWarning):
        displacement_matrix(4.0, PhononBasis(10))


def test_coherent_state_normalised():
    v = coherent_amplitudes(0.7 - 0.2j, PhononBasis(60))
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-14)
    assert np.array_equal(coherent_amplitudes(0, PhononBasis(3)), [1, 0, 0, 0])


def test_rotation_phases():
    assert np.allclose(rotation_phases(PhononBasis(4)), [1, 1j, -1, -1j, 1])


@pytest.mark.parametrize("m", [0, 1, 2])
def test_transformed_initial_state_closed_form(deep, m):
    basis = PhononBasis(40)
    psi = transformed_initial_state(m, basis, deep)
    theta = deep.lamb_dicke * (m + 1)
    ref = [(-theta) ** n * math.exp(-theta ** 2 / 2) / math.sqrt(math.factorial(n)) for n in range(basis.dim)]
    assert psi.dtype == float
    assert np.max(np.abs(psi[: basis.dim] - ref)) <= 1e-14
    assert np.all(psi[basis.dim:] == 0.0)


def test_initial_state_maps_under_transform(deep):
    # rotated-frame state equals rotation * displacement applied to the bare vacuum
    basis = PhononBasis(40)
    m = 1
    D = displacement_matrix(deep.lamb_dicke * (m + 1), basis, warn=False).matrix
    bare = bare_initial_state(m, basis)[: basis.dim]
    expected = rotation_phases(basis) * (D @ bare)
    assert np.allclose(transformed_initial_state(m, basis, deep)[: basis.dim], expected, atol=1e-14)


def test_excitation_number_commutes(deep):
    basis = PhononBasis(10)
    H = build_block(2, deep, basis).matrix
    Nx = excitation_number_operator(basis, 2)
    assert np.allclose(Nx @ H - H @ Nx, 0.0)
    P = g_branch_projector(basis)
    assert np.trace(P) == basis.dim


def test_no_warning_at_reference_truncation(deep):
    with warnings.catch_warnings():
        warnings.simplefilter("error", TruncationWarning)
        transformed_initial_state(1, PhononBasis(60), deep)
