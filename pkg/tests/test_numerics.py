import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from indexbundle.errors import AlignmentGapTooLarge, RankDeficient, SymmetryViolation
from indexbundle.numerics import (
    align_frame,
    check_symmetric,
    eig_sym,
    orthonormal_frame,
    principal_angles,
    real_spectrum,
)
from indexbundle.scenarios import e1, e2, s_theta

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def same_line(u, v, atol=1e-12):
    u, v = np.ravel(u), np.ravel(v)
    return abs(abs(u @ v) - np.linalg.norm(u) * np.linalg.norm(v)) < atol


def random_orthogonal(rng, k):
    Q, R = np.linalg.qr(rng.standard_normal((k, k)))
    return Q * np.sign(np.diag(R))


# eig_sym


def test_eig_sym_diagonal():
    w, V = eig_sym(np.diag([1.0, 3.0, -2.0]))
    np.testing.assert_allclose(w, [3, 1, -2])
    np.testing.assert_allclose(np.abs(V), np.eye(3)[:, [1, 0, 2]])


def test_eig_sym_swap_matrix():
    w, V = eig_sym(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(w, [1, -1])
    assert same_line(V[:, 0], [1, 1])
    assert same_line(V[:, 1], [1, -1])


@pytest.mark.parametrize("theta", np.linspace(-3, 3, 7))
def test_eig_sym_s_theta(theta):
    w, V = eig_sym(s_theta(theta))
    np.testing.assert_allclose(w, [1, -1], atol=1e-14)
    assert same_line(V[:, 0], e2(theta))
    assert same_line(V[:, 1], e1(theta))


def test_eig_sym_rejects_asymmetric():
    with pytest.raises(SymmetryViolation):
        eig_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(SymmetryViolation):
        check_symmetric(np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(arrays(float, (5, 5), elements=finite))
def test_eig_sym_reconstructs(A):
    S = A + A.T
    w, V = eig_sym(S)
    assert np.all(np.diff(w) <= 0)
    assert np.linalg.norm(V @ np.diag(w) @ V.T - S) <= 1e-8 * max(1.0, np.linalg.norm(S))
    np.testing.assert_allclose(V.T @ V, np.eye(5), atol=1e-10)


# real_spectrum


def test_real_spectrum_symplectic():
    spec = dict(real_spectrum(np.array([[0.0, -1.0], [1.0, 0.0]])))
    assert spec == {1j: 1, -1j: 1}


@pytest.mark.parametrize("a", [0.5, 2.0])
def test_real_spectrum_of_minus_s_theta(a):
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    M = J @ (a * J @ s_theta(0.7))
    spec = real_spectrum(M)
    assert sorted(z.real for z, _ in spec) == pytest.approx([-a, a])
    assert all(z.imag == 0 for z, _ in spec)


def test_real_spectrum_jordan_block():
    assert real_spectrum(np.array([[1.0, 1.0], [0.0, 1.0]])) == [(1 + 0j, 2)]


def test_real_spectrum_larger_jordan_block():
    M = 2 * np.eye(3) + np.diag([1.0, 1.0], 1)
    assert real_spectrum(M) == [(2 + 0j, 3)]


@settings(max_examples=50, deadline=None)
@given(arrays(float, (4, 4), elements=finite))
def test_real_spectrum_sums_to_dimension(A):
    assert sum(m for _, m in real_spectrum(A)) == 4
    S = A + A.T
    w, _ = eig_sym(S)
    got = sorted(z.real for z, m in real_spectrum(S) for _ in range(m))
    # clustering can merge near-equal eigenvalues; compare up to that
    np.testing.assert_allclose(got, np.sort(w), atol=1e-6 * max(1.0, np.abs(w).max()))


# orthonormal_frame


def test_orthonormal_frame_examples():
    np.testing.assert_allclose(orthonormal_frame([(2, 0), (0, 3)]), np.eye(2))
    np.testing.assert_allclose(orthonormal_frame([(1, 1)]), np.array([[1], [1]]) / np.sqrt(2))
    with pytest.raises(RankDeficient):
        orthonormal_frame([(1, 0), (2, 0)])


# principal_angles


def test_principal_angles_examples():
    F = np.eye(3)[:, :2]
    np.testing.assert_allclose(principal_angles(F, F), 0.0, atol=1e-7)
    assert principal_angles([[1], [0]], [[0], [1]]) == pytest.approx([np.pi / 2])


@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0, 1.5])
def test_principal_angle_of_rotated_line(alpha):
    got = principal_angles([[1.0], [0.0]], [[np.cos(alpha)], [np.sin(alpha)]])
    assert got == pytest.approx([alpha], abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_principal_angles_symmetric_and_invariant(seed):
    rng = np.random.default_rng(seed)
    F1 = np.linalg.qr(rng.standard_normal((6, 2)))[0]
    F2 = np.linalg.qr(rng.standard_normal((6, 2)))[0]
    a = principal_angles(F1, F2)
    np.testing.assert_allclose(a, principal_angles(F2, F1), atol=1e-9)
    Q = random_orthogonal(rng, 2)
    np.testing.assert_allclose(a, principal_angles(F1 @ Q, F2), atol=1e-9)
    np.testing.assert_allclose(a, principal_angles(F1, F2 @ Q), atol=1e-9)


# align_frame


def test_align_frame_identity_and_flip():
    F = np.array([[1.0], [0.0]])
    A, s = align_frame(F, F)
    np.testing.assert_allclose(A, F)
    assert s == 1
    A, s = align_frame(-F, F)
    np.testing.assert_allclose(A, F)
    assert s == -1


def test_align_frame_swapped_columns():
    F = np.eye(3)[:, :2]
    A, s = align_frame(F[:, ::-1], F)
    assert s == -1
    np.testing.assert_allclose(A, F, atol=1e-12)


def test_align_frame_gap_too_large():
    with pytest.raises(AlignmentGapTooLarge):
        align_frame([[0.0], [1.0]], [[1.0], [0.0]])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_align_sign_multiplicative_along_chain(seed):
    rng = np.random.default_rng(seed)
    F0 = np.linalg.qr(rng.standard_normal((5, 2)))[0]
    # small perturbations keep every gap below pi/4
    F1 = np.linalg.qr(F0 + 0.1 * rng.standard_normal((5, 2)))[0] @ random_orthogonal(rng, 2)
    F2 = np.linalg.qr(F1 + 0.1 * rng.standard_normal((5, 2)))[0] @ random_orthogonal(rng, 2)
    A1, s1 = align_frame(F1, F0)
    _, s2 = align_frame(F2, A1)
    _, s_direct = align_frame(F2, F1)
    _, s02 = align_frame(F2, F0)
    # aligning to an already aligned frame composes the two signs
    assert s2 == s_direct * s1
    # and with small gaps the composite agrees with the direct alignment
    assert s1 * s_direct == s02
