"""Dense linear-algebra kernels.

Frames are plain ``(d, k)`` arrays with orthonormal columns; ``k`` may be zero.
"""

import numpy as np

from .errors import AlignmentGapTooLarge, RankDeficient, SymmetryViolation

SYMMETRY_TOL = 1e-10
RANK_TOL = 1e-10
MULTIPLICITY_TOL = 1e-7


def _as_frame(F):
    F = np.asarray(F, dtype=float)
    if F.ndim == 1:
        F = F.reshape(-1, 1)
    return F


def check_symmetric(S, tol=SYMMETRY_TOL):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise SymmetryViolation(f"expected a square matrix, got shape {S.shape}")
    scale = max(1.0, np.abs(S).max(initial=0.0))
    if np.abs(S - S.T).max(initial=0.0) > tol * scale:
        raise SymmetryViolation("matrix is not symmetric")
    return S


def eig_sym(S):
    """Eigen-decomposition of a symmetric matrix.

    Returns
    -------
    values : ndarray, (d,)
        Eigenvalues in descending order.
    frame : ndarray, (d, d)
        Orthonormal eigenvectors, column ``i`` belonging to ``values[i]``.
    """
    S = check_symmetric(S)
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    return w[::-1].copy(), V[:, ::-1].copy()


def real_spectrum(M, tol=MULTIPLICITY_TOL):
    """Eigenvalues of a real square matrix with algebraic multiplicities.

    Numerically coincident eigenvalues (within ``tol`` relative to the norm of
    ``M``) are merged into one entry; imaginary parts below the same threshold
    are snapped to zero so that a defective real eigenvalue is not reported as
    a spurious conjugate pair.

    Returns
    -------
    list of (complex, int)
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] == 0:
        return []
    ev = np.linalg.eigvals(M)
    thr = tol * max(1.0, np.linalg.norm(M, 2))
    # defective eigenvalues split like eps**(1/k); cluster greedily by distance
    order = np.lexsort((ev.imag, ev.real))
    clusters = []
    for z in ev[order]:
        for c in clusters:
            if abs(z - np.mean(c)) <= max(thr, np.sqrt(thr) * 1e-1):
                c.append(z)
                break
        else:
            clusters.append([z])
    out = []
    for c in clusters:
        z = complex(np.mean(c))
        if abs(z.imag) <= max(thr, np.sqrt(thr) * 1e-1):
            z = complex(z.real, 0.0)
        out.append((z, len(c)))
    return out


def orthonormal_frame(vectors):
    """Orthonormal basis of the span of the given vectors.

    ``vectors`` is a sequence of 1-d vectors (or a ``(k, d)`` array with one
    vector per row).
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    if V.size == 0:
        return np.zeros((V.shape[-1] if V.ndim == 2 else 0, 0))
    A = V.T
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s[-1] < RANK_TOL * s[0]:
        raise RankDeficient(f"vectors are linearly dependent (sigma_min/sigma_max = {s[-1] / s[0]:.2e})")
    # keep the frame close to the input ordering: QR gives e.g. the standard
    # basis back for diagonal input, which SVD would permute
    Q, R = np.linalg.qr(A)
    return Q * np.sign(np.diag(R))


def principal_angles(F1, F2):
    """Principal angles between ``span(F1)`` and ``span(F2)``, nondecreasing."""
    F1, F2 = _as_frame(F1), _as_frame(F2)
    if F1.shape[0] != F2.shape[0]:
        raise ValueError("frames live in different ambient dimensions")
    k = min(F1.shape[1], F2.shape[1])
    if k == 0:
        return np.zeros(0)
    s = np.linalg.svd(F1.T @ F2, compute_uv=False)[:k]
    return np.sort(np.arccos(np.clip(s, -1.0, 1.0)))


def align_frame(F, F_ref, max_angle=np.pi / 4):
    """Re-parametrise ``F`` to be as close as possible to ``F_ref``.

    Solves the orthogonal Procrustes problem ``min_R |F R - F_ref|`` over
    orthogonal ``R``.

    Returns
    -------
    aligned : ndarray
        ``F @ R``; spans the same space as ``F``.
    sign : int
        ``sign(det R)``, the orientation change from ``F`` to ``aligned``.
    """
    F, F_ref = _as_frame(F), _as_frame(F_ref)
    if F.shape != F_ref.shape:
        raise ValueError(f"frame shapes differ: {F.shape} vs {F_ref.shape}")
    if F.shape[1] == 0:
        return F.copy(), 1
    M = F.T @ F_ref
    U, s, Vt = np.linalg.svd(M)
    largest = float(np.arccos(np.clip(s.min(), -1.0, 1.0)))
    if largest >= max_angle:
        raise AlignmentGapTooLarge(f"largest principal angle {largest:.3f} >= {max_angle:.3f}")
    R = U @ Vt
    sign = 1 if np.linalg.det(R) > 0 else -1
    return F @ R, sign
