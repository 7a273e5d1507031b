"""Parity, degree and kernel bundles of finite symmetric operator families.

Finite-dimensional truncations of operators on a Hilbert space with
orthonormal basis ``{e_k}``, ``k in Z``, kept to the window ``-N..N``.  Basis
index ``k`` lives at array position ``k + N``.

In finite dimension every matrix is a compact perturbation of the identity,
so the identity serves as a global parametrix and the Leray-Schauder degree
of an invertible ``T`` reduces to ``(-1)^m`` with ``m`` the algebraic
multiplicity of its negative real spectrum.  As a consequence the parity of
any *closed* finite-dimensional loop is +1 (the endpoint degrees telescope).
The loop built by :func:`tilde_L_loop` has parity -1 on the infinite
dimensional Hilbert space; its truncation necessarily picks up one extra
sign flip in a defect-closing segment, which is where the truncation breaks.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, logm, null_space

from .bundles import bundle_from_frames
from .errors import (
    EndpointSingular,
    LoopNotResolved,
    NoRegularPoint,
    NotInvertible,
    NotTransversal,
    OddWindowUnsupported,
    SamplingTooCoarse,
    SymmetryViolation,
)
from .numerics import SYMMETRY_TOL, orthonormal_frame, real_spectrum

INVERTIBLE_TOL = 1e-12
SINGULAR_TOL = 1e-8
CLOSURE_TOL = 1e-12


@dataclass
class TruncatedOperatorPath:
    """Sampled path (or loop) of symmetric matrices.

    ``segments`` optionally names sub-paths as ``(name, start, stop)`` sample
    index pairs, inclusive of both ends.
    """

    parameters: np.ndarray
    samples: np.ndarray
    closed: bool = False
    window_N: int | None = None
    segments: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.parameters = np.asarray(self.parameters, dtype=float)
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 3 or self.samples.shape[1] != self.samples.shape[2]:
            raise ValueError(f"samples must have shape (K, d, d), got {self.samples.shape}")
        if len(self.parameters) != len(self.samples):
            raise ValueError("one parameter per sample required")
        if len(self.parameters) < 2:
            raise ValueError("a path needs at least two samples")
        if np.any(np.diff(self.parameters) <= 0):
            raise ValueError("parameter grid must be strictly increasing")
        scale = np.maximum(1.0, np.abs(self.samples).max(axis=(1, 2)))
        asym = np.abs(self.samples - self.samples.transpose(0, 2, 1)).max(axis=(1, 2))
        if np.any(asym > SYMMETRY_TOL * scale):
            raise SymmetryViolation(f"sample {int(np.argmax(asym > SYMMETRY_TOL * scale))} is not symmetric")
        if self.window_N is not None and self.dim != 2 * self.window_N + 1:
            raise ValueError(f"window_N={self.window_N} does not match dimension {self.dim}")
        if self.closed and np.abs(self.samples[0] - self.samples[-1]).max() > CLOSURE_TOL:
            raise ValueError("closed path: first and last samples differ")

    @property
    def dim(self):
        return self.samples.shape[1]

    def __len__(self):
        return len(self.samples)

    def sub(self, start, stop):
        """Open sub-path over samples ``start..stop`` inclusive."""
        return TruncatedOperatorPath(self.parameters[start : stop + 1], self.samples[start : stop + 1], window_N=self.window_N)


def scaled_abs_det(T):
    T = np.asarray(T, dtype=float)
    s = np.linalg.svd(T, compute_uv=False)
    if s[0] == 0:
        return 0.0
    return float(np.prod(s / s[0]))


def is_invertible(T, tol=INVERTIBLE_TOL):
    return scaled_abs_det(T) > tol


def leray_schauder_degree(T):
    """Degree of the linear isomorphism ``T``: ``(-1)^m``, ``m`` = total
    algebraic multiplicity of negative real eigenvalues."""
    T = np.asarray(T, dtype=float)
    if not is_invertible(T):
        raise NotInvertible("matrix is singular to working precision")
    m = sum(mult for z, mult in real_spectrum(T) if z.imag == 0 and z.real < 0)
    return -1 if m % 2 else 1


def parity_segment(path, start=0, stop=-1):
    """Parity of the (sub)path between sample indices ``start`` and ``stop``."""
    La, Lb = path.samples[start], path.samples[stop]
    try:
        return leray_schauder_degree(Lb) * leray_schauder_degree(La)
    except NotInvertible as exc:
        raise EndpointSingular("path endpoint is not invertible") from exc


def spectral_flow_mod2(path):
    """Parity of the number of eigenvalue zero-crossings along a symmetric path.

    Eigenvalue branches are followed in sorted order and sign changes are
    counted step by step.  The sampling must resolve the path: every step's
    eigenvalue displacement has to stay below half the spectral gap of the
    endpoints (the distance from 0 to the nearest endpoint eigenvalue).
    """
    ev = np.linalg.eigvalsh(path.samples)
    if not (is_invertible(path.samples[0]) and is_invertible(path.samples[-1])):
        raise EndpointSingular("path endpoint is not invertible")
    gap = min(np.abs(ev[0]).min(), np.abs(ev[-1]).min())
    disp = np.abs(np.diff(ev, axis=0)).max(axis=1)
    worst = int(np.argmax(disp))
    if disp[worst] >= 0.5 * gap:
        raise SamplingTooCoarse(
            f"eigenvalue displacement {disp[worst]:.3g} at step {worst} is not below half the endpoint gap {gap:.3g}"
        )
    crossings = int(np.sum(np.signbit(ev[1:]) != np.signbit(ev[:-1])))
    return -1 if crossings % 2 else 1


def _check_window(window_N, even=False):
    if int(window_N) != window_N or window_N < 1:
        raise ValueError(f"window_N must be a positive integer, got {window_N}")
    if even and window_N % 2:
        raise OddWindowUnsupported(f"window_N={window_N} is odd; the truncated shift needs det=+1")
    return int(window_N)


def tilde_L1(theta, window_N):
    """``P_+ - P_- + theta P_0`` on the window ``-N..N``."""
    N = _check_window(window_N)
    k = np.arange(-N, N + 1)
    return np.diag(np.where(k > 0, 1.0, np.where(k < 0, -1.0, float(theta))))


def conjugator_N(window_N):
    """Truncated signed shift ``A_+(P_+ + P_0) - A_- P_-``.

    ``e_k -> e_{k+1}`` for ``0 <= k < N``, ``e_k -> -e_{k+1}`` for ``k < 0``,
    and the cyclic closure ``e_N -> e_{-N}``.
    """
    N = _check_window(window_N, even=True)
    d = 2 * N + 1
    M = np.zeros((d, d))
    for k in range(-N, N + 1):
        if k == N:
            M[0, k + N] = 1.0
        else:
            M[k + 1 + N, k + N] = 1.0 if k >= 0 else -1.0
    return M


_LOG_CACHE = {}


def _skew_log(window_N):
    # d = 2N+1 is odd and N^d = (-1)^N I = I, so -1 is not an eigenvalue and
    # the principal logarithm is real
    if window_N not in _LOG_CACHE:
        K = np.real(logm(conjugator_N(window_N)))
        _LOG_CACHE[window_N] = 0.5 * (K - K.T)
    return _LOG_CACHE[window_N]


def tilde_L2_path(s, window_N):
    """``W_s^T L1_{-1} W_s`` with ``W_s = exp((1-s) log N)``.

    At ``s=1`` this is ``tilde_L1(-1)``; at ``s=0`` it is ``tilde_L1(+1)``
    with the sign at ``k=N`` flipped.
    """
    W = expm((1.0 - s) * _skew_log(_check_window(window_N, even=True)))
    L = W.T @ tilde_L1(-1.0, window_N) @ W
    return 0.5 * (L + L.T)


def tilde_L1_path(window_N, samples=9):
    theta = np.linspace(-1.0, 1.0, samples)
    return TruncatedOperatorPath(theta, [tilde_L1(t, window_N) for t in theta], window_N=window_N)


def tilde_L_loop(window_N, samples_per_segment=16):
    """Closed truncation of the parity -1 loop, based at ``tilde_L1(+1)``.

    Segments, in traversal order over a parameter running through ``[0, 3]``:

    ``L1``      ``tilde_L1(theta)`` for theta from 1 down to -1;
    ``L2``      ``tilde_L2_path(s)`` for s from 1 down to 0, ending at the
                defective copy of ``tilde_L1(+1)``;
    ``defect``  straight line moving the entry at ``k=N`` from -1 back to +1.
    """
    N = _check_window(window_N, even=True)
    if samples_per_segment < 8:
        raise ValueError("samples_per_segment must be at least 8")
    n = samples_per_segment
    u = np.linspace(0.0, 1.0, n + 1)
    seg1 = [tilde_L1(1.0 - 2.0 * x, N) for x in u]
    seg2 = [tilde_L2_path(1.0 - x, N) for x in u]
    D = tilde_L1(1.0, N)
    seg3 = []
    for x in u:
        M = D.copy()
        M[2 * N, 2 * N] = -1.0 + 2.0 * x
        seg3.append(M)
    # the first sample of each later segment repeats the previous end point
    samples = seg1 + seg2[1:] + seg3[1:]
    params = np.concatenate([u, 1.0 + u[1:], 2.0 + u[1:]])
    samples[-1] = samples[0].copy()
    segments = (("L1", 0, n), ("L2", n, 2 * n), ("defect", 2 * n, 3 * n))
    return TruncatedOperatorPath(params, samples, closed=True, window_N=N, segments=segments)


@dataclass
class LoopParity:
    value: int
    segment_parities: tuple
    cut_points: tuple

    def to_dict(self):
        return {
            "parity": self.value,
            "segment_parities": list(self.segment_parities),
            "cut_points": list(self.cut_points),
        }


def closed_loop_parity(path, max_segments=4):
    """Parity of a closed finite-dimensional loop with its segment decomposition.

    Uses the named segments of ``path`` when all their end points are
    invertible; otherwise cuts at up to ``max_segments`` evenly spread
    invertible samples.  The value is the product of the segment parities,
    which telescopes to ``deg(I) = +1``.
    """
    if not path.closed:
        raise ValueError("closed_loop_parity needs a closed path")
    K = len(path) - 1  # last sample repeats the first
    regular = [i for i in range(K) if is_invertible(path.samples[i])]
    if not regular:
        raise NoRegularPoint("no invertible sample on the loop")
    if path.segments and all(i % K in regular for _, a, b in path.segments for i in (a, b)):
        cuts = [a for _, a, _ in path.segments]
    else:
        step = max(1, len(regular) // max_segments)
        cuts = regular[::step][:max_segments]
    bounds = list(cuts) + [cuts[0] + K]
    parities = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        idx = np.arange(a, b + 1) % K
        seg = TruncatedOperatorPath(np.arange(len(idx), dtype=float), path.samples[idx])
        parities.append(parity_segment(seg))
    return LoopParity(int(np.prod(parities)), tuple(parities), tuple(cuts))


def is_transversal(samples, V, tol=SINGULAR_TOL):
    """True when ``im(L) + span(V)`` is the whole space for every sample."""
    V = np.asarray(V, dtype=float).reshape(np.shape(samples)[1], -1)
    for L in samples:
        s = np.linalg.svd(np.hstack([L, V]), compute_uv=False)
        if s[-1] <= tol * max(1.0, s[0]):
            return False
    return True


def find_transversal(path, tol=SINGULAR_TOL):
    """Greedy choice of ``V`` with ``im(L) + V`` = whole space along the path.

    Each sample contributes the left-singular directions that neither its
    image nor the current ``V`` cover.
    """
    d = path.dim
    basis = []
    for L in path.samples:
        V = np.array(basis).T.reshape(d, -1)
        U, s, _ = np.linalg.svd(np.hstack([L, V]))
        s = np.concatenate([s, np.zeros(d - len(s))])
        missing = U[:, s <= tol * max(1.0, s[0])]
        if missing.shape[1]:
            # project out the current basis before appending
            if V.shape[1]:
                missing = missing - V @ (V.T @ missing)
            basis.extend(missing.T)
            basis = list(orthonormal_frame(basis).T)
    V = np.array(basis).T.reshape(d, -1)
    assert is_transversal(path.samples, V, tol)
    return V


def kernel_frames(samples, V, tol=SINGULAR_TOL):
    """Fibres ``{u : L u in span V}`` of the kernel bundle ``E(L, V)``.

    Works for arbitrary (not necessarily symmetric) square samples.  Also
    returns the smallest singular value of the projected operator ``P L`` at
    every sample, which controls how fast the fibres can turn.
    """
    samples = np.asarray(samples, dtype=float)
    d = samples.shape[1]
    V = np.asarray(V, dtype=float).reshape(d, -1)
    k = V.shape[1]
    if k == 0:
        return [np.zeros((d, 0)) for _ in samples], np.full(len(samples), np.inf)
    if k == d:
        return [np.eye(d) for _ in samples], np.full(len(samples), np.inf)
    Q = null_space(V.T)  # orthonormal basis of the complement of V
    _, s, Vt = np.linalg.svd(Q.T @ samples)
    smin = s[:, -1]
    bad = np.nonzero(smin <= tol * np.maximum(1.0, s[:, 0]))[0]
    if bad.size:
        raise NotTransversal(f"projected operator is not surjective at sample {bad[0]}")
    return [F.T for F in Vt[:, d - k :, :]], smin


# sin of the fibre rotation across a step is at most |dL| / sigma_min(P L);
# a quarter keeps every step far below the pi/4 alignment limit
ROTATION_BOUND = 0.25


def kernel_bundle(path, V):
    """Loop bundle ``E(L, V)`` over a closed sampled family.

    Raises ``LoopNotResolved`` when some step ``|L_{i+1} - L_i|`` is not below
    a quarter of ``sigma_min(P L)`` at its ends, i.e. when the sampling cannot
    guarantee that consecutive fibres are close (the caller must refine).
    """
    if not path.closed:
        raise ValueError("kernel_bundle needs a closed path")
    frames, smin = kernel_frames(path.samples[:-1], V)
    step = np.linalg.norm(np.diff(path.samples, axis=0), 2, axis=(1, 2))
    margin = np.minimum(smin, np.roll(smin, -1))
    ratio = step / margin
    worst = int(np.argmax(ratio))
    if ratio[worst] >= ROTATION_BOUND:
        raise LoopNotResolved(
            f"step {worst}: |dL| = {step[worst]:.3g} is not below {ROTATION_BOUND} * sigma_min(PL) = {ROTATION_BOUND * margin[worst]:.3g}"
        )
    return bundle_from_frames(frames, path.parameters[:-1])


def random_symmetric_path(rng, dim, samples=200, closed=False, degree=3, scale=1.0):
    """Smooth random path ``t -> C_0 + sum_j A_j cos(j t) + B_j sin(j t)``.

    Closed paths run over ``[0, 2 pi]`` and are exactly periodic; open ones
    over ``[0, pi]``.  Returns the path and a callable evaluating it at any
    ``t`` (for resampling).
    """

    def sym():
        A = rng.standard_normal((dim, dim))
        return scale * (A + A.T) / 2.0

    coeffs = [sym()] + [(sym() / j, sym() / j) for j in range(1, degree + 1)]

    def evaluate(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.broadcast_to(coeffs[0], (len(t), dim, dim)).copy()
        for j, (A, B) in enumerate(coeffs[1:], start=1):
            out += np.cos(j * t)[:, None, None] * A + np.sin(j * t)[:, None, None] * B
        return out

    t = np.linspace(0.0, 2.0 * np.pi if closed else np.pi, samples)
    S = evaluate(t)
    if closed:
        S[-1] = S[0]
    return TruncatedOperatorPath(t, S, closed=closed), evaluate
