"""Linear Hamiltonian systems ``J u' + A(lambda, t) u = 0`` over parameter tori.

The equation is integrated as ``u' = J A u``.  Subspaces of solutions decaying
at ``+inf`` (resp. ``-inf``) are obtained by seeding the stable (unstable)
eigenspace of the limit matrix at ``t = T`` (``t = -T``) and integrating
towards ``t = 0`` in the direction in which those subspaces expand.  A
nontrivial homoclinic solution exists exactly when the two subspaces at
``t = 0`` intersect.
"""

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import schur

from .errors import IntegrationFailure, NotHyperbolic, NumericalFailure
from .numerics import principal_angles

log = logging.getLogger(__name__)

DEFAULT_HORIZON = 20.0
DEFAULT_TOL_ANGLE = 1e-3
DEFAULT_TOL_HYPERBOLIC = 1e-6
REORTHO_SPAN = 1.0
RTOL = 1e-10
ATOL = 1e-12
SCAN_CHUNK = 64


class AsymptoticResidualWarning(UserWarning):
    """``A(lambda, +-T)`` is still far from its declared limit."""


def symplectic_J(n=1):
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, -I], [I, Z]])


def canonical_angles(angles):
    """Representatives of torus coordinates in ``[-pi, pi)``."""
    a = np.asarray(angles, dtype=float)
    return np.mod(a + np.pi, 2.0 * np.pi) - np.pi


class HamiltonianFamily:
    """Base class for families ``A(lambda, t)`` of symmetric ``2n x 2n`` matrices.

    Subclasses implement :meth:`evaluate`, :meth:`asymptotic_plus` and
    :meth:`asymptotic_minus`; :meth:`evaluate_batch` may be overridden with a
    vectorised version.  Points are arrays of ``torus_dim`` angles.
    Evaluators must be pure so that scans can run them in worker processes.
    """

    half_dim = 1
    torus_dim = 1
    breakpoints = ()

    def evaluate(self, point, t):
        raise NotImplementedError

    def evaluate_batch(self, points, t):
        return np.stack([self.evaluate(p, t) for p in points])

    def asymptotic_plus(self, point):
        raise NotImplementedError

    def asymptotic_minus(self, point):
        raise NotImplementedError

    def default_loop(self, s):
        """Loop once around the last torus coordinate, others at 0."""
        point = np.zeros(self.torus_dim)
        point[-1] = -np.pi + 2.0 * np.pi * s
        return point

    def describe(self):
        return {"family": type(self).__name__, "half_dim": self.half_dim, "torus_dim": self.torus_dim}


class ConstantFamily(HamiltonianFamily):
    """``A(lambda, t) = A`` for all parameters and times."""

    def __init__(self, A, torus_dim=1):
        self.A = np.asarray(A, dtype=float)
        self.half_dim = self.A.shape[0] // 2
        self.torus_dim = torus_dim

    def evaluate(self, point, t):
        return self.A

    def evaluate_batch(self, points, t):
        return np.broadcast_to(self.A, (len(points),) + self.A.shape)

    def asymptotic_plus(self, point):
        return self.A

    def asymptotic_minus(self, point):
        return self.A


class FunctionFamily(HamiltonianFamily):
    """Family assembled from user callables ``evaluate(point, t)``, ``plus(point)``, ``minus(point)``."""

    def __init__(self, evaluate, plus, minus, half_dim=1, torus_dim=1, breakpoints=()):
        self._evaluate, self._plus, self._minus = evaluate, plus, minus
        self.half_dim, self.torus_dim = half_dim, torus_dim
        self.breakpoints = tuple(breakpoints)

    def evaluate(self, point, t):
        return np.asarray(self._evaluate(point, t), dtype=float)

    def asymptotic_plus(self, point):
        return np.asarray(self._plus(point), dtype=float)

    def asymptotic_minus(self, point):
        return np.asarray(self._minus(point), dtype=float)


@dataclass
class AsymptoticSplitting:
    stable: np.ndarray
    unstable: np.ndarray
    spectral_gap: float


def hyperbolic_splitting(A_inf, tol=DEFAULT_TOL_HYPERBOLIC):
    """Stable/unstable invariant subspaces of ``J A_inf`` via ordered real Schur forms."""
    A_inf = np.asarray(A_inf, dtype=float)
    M = symplectic_J(A_inf.shape[0] // 2) @ A_inf
    ev = np.linalg.eigvals(M)
    gap = float(np.abs(ev.real).min())
    if gap < tol:
        raise NotHyperbolic(f"J A has an eigenvalue with |Re| = {gap:.3g} < {tol:.3g}")
    _, Zs, ks = schur(M, output="real", sort="lhp")
    _, Zu, ku = schur(M, output="real", sort="rhp")
    return AsymptoticSplitting(Zs[:, :ks], Zu[:, :ku], gap)


def _knots(t_from, t_to, breakpoints, span):
    direction = np.sign(t_to - t_from)
    n = int(np.ceil(abs(t_to - t_from) / span - 1e-12))
    knots = set(np.round(t_from + direction * span * np.arange(n + 1), 12)) | {t_to}
    lo, hi = sorted((t_from, t_to))
    knots |= {b for b in breakpoints if lo < b < hi}
    knots = sorted(k for k in knots if lo <= k <= hi)
    return knots if direction > 0 else knots[::-1]


def _orthonormalise(U):
    Q, R = np.linalg.qr(U)
    # keep the orientation of the transported basis
    signs = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    signs[signs == 0] = 1.0
    return Q * signs[..., None, :]


def transport_frames(family, points, t_from, t_to, frames, rtol=RTOL, atol=ATOL, span=REORTHO_SPAN):
    """Transport a batch of frames under ``u' = J A(point, t) u``.

    ``frames`` has shape ``(B, 2n, k)``; the batch shares one adaptive RK45
    step controller.  Frames are re-orthonormalised after every ``span`` time
    units and at the family's breakpoints.
    """
    points = np.asarray(points, dtype=float).reshape(len(frames), -1)
    U = np.asarray(frames, dtype=float)
    B, d, k = U.shape
    if t_from == t_to:
        raise ValueError("t_from and t_to must differ")
    if k == 0:
        return U.copy()
    J = symplectic_J(d // 2)

    def rhs(t, y):
        A = family.evaluate_batch(points, t)
        return (J @ A @ y.reshape(B, d, k)).ravel()

    U = _orthonormalise(U)
    knots = _knots(t_from, t_to, family.breakpoints, span)
    for a, b in zip(knots[:-1], knots[1:]):
        sol = solve_ivp(rhs, (a, b), U.ravel(), method="RK45", rtol=rtol, atol=atol)
        if not sol.success:
            raise IntegrationFailure(f"integration {a:g} -> {b:g} failed: {sol.message}")
        U = sol.y[:, -1].reshape(B, d, k)
        if not np.all(np.isfinite(U)):
            raise IntegrationFailure(f"non-finite state at t={b:g}")
        U = _orthonormalise(U)
    return U


def integrate_frame(family, point, t_from, t_to, F, rtol=RTOL, atol=ATOL, span=REORTHO_SPAN):
    """Orthonormal frame of the subspace obtained by transporting ``span(F)``."""
    F = np.asarray(F, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    if F.shape[1] == 0:
        raise ValueError("empty frame")
    return transport_frames(family, [point], t_from, t_to, F[None], rtol, atol, span)[0]


def fundamental_matrix(family, point, t_from, t_to, rtol=RTOL, atol=ATOL):
    """Unnormalised flow map ``Phi(t_to, t_from)`` (no re-orthonormalisation)."""
    d = 2 * family.half_dim
    J = symplectic_J(family.half_dim)

    def rhs(t, y):
        return (J @ family.evaluate(point, t) @ y.reshape(d, d)).ravel()

    Phi = np.eye(d)
    knots = _knots(t_from, t_to, family.breakpoints, abs(t_to - t_from))
    for a, b in zip(knots[:-1], knots[1:]):
        sol = solve_ivp(rhs, (a, b), Phi.ravel(), method="RK45", rtol=rtol, atol=atol)
        if not sol.success:
            raise IntegrationFailure(sol.message)
        Phi = sol.y[:, -1].reshape(d, d)
    return Phi


def _check_residual(family, point, t, limit, residual_tol):
    r = float(np.linalg.norm(family.evaluate(point, t) - limit, 2))
    if r > residual_tol:
        warnings.warn(
            f"|A(lambda, {t:g}) - A(lambda, {'+' if t > 0 else '-'}inf)| = {r:.3g} exceeds {residual_tol:g}",
            AsymptoticResidualWarning,
            stacklevel=3,
        )
    return r


def stable_at_zero(family, point, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL_HYPERBOLIC, residual_tol=0.1):
    """Frame of ``E^s(lambda, 0)``: stable eigenspace of ``J A(+inf)`` at ``T`` integrated back to 0."""
    limit = family.asymptotic_plus(point)
    split = hyperbolic_splitting(limit, tol)
    _check_residual(family, point, horizon, limit, residual_tol)
    return integrate_frame(family, point, horizon, 0.0, split.stable)


def unstable_at_zero(family, point, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL_HYPERBOLIC, residual_tol=0.1):
    """Frame of ``E^u(lambda, 0)``: unstable eigenspace of ``J A(-inf)`` at ``-T`` integrated forward to 0."""
    limit = family.asymptotic_minus(point)
    split = hyperbolic_splitting(limit, tol)
    _check_residual(family, point, -horizon, limit, residual_tol)
    return integrate_frame(family, point, -horizon, 0.0, split.unstable)


@dataclass
class BoundarySubspaces:
    stable_at_zero: np.ndarray
    unstable_at_zero: np.ndarray
    smallest_angle: float
    angles: np.ndarray = None


def _kernel_from_frames(Es, Eu, tol_angle):
    ang = principal_angles(Es, Eu)
    smallest = float(ang[0]) if ang.size else float(np.pi / 2)
    return BoundarySubspaces(Es, Eu, smallest, ang), int(np.sum(ang < tol_angle))


def kernel_dimension(family, point, horizon=DEFAULT_HORIZON, tol_angle=DEFAULT_TOL_ANGLE, tol=DEFAULT_TOL_HYPERBOLIC):
    """Dimension of the space of homoclinic solutions at ``point``.

    Counted as the number of principal angles between ``E^s(lambda, 0)`` and
    ``E^u(lambda, 0)`` below ``tol_angle``.
    """
    Es = stable_at_zero(family, point, horizon, tol)
    Eu = unstable_at_zero(family, point, horizon, tol)
    return _kernel_from_frames(Es, Eu, tol_angle)


@dataclass
class CellRecord:
    index: tuple
    angles: tuple
    smallest_angle: float
    kernel_dim: int | None
    error: str | None = None


@dataclass
class ScanResult:
    grid_shape: tuple
    cells: list
    flagged: list
    wrap_counts: tuple
    cycles: list = field(default_factory=list)
    components: int = 0
    settings: dict = field(default_factory=dict)

    def rows(self):
        """One CSV row per cell: coordinates, smallest angle, kernel dimension."""
        m = len(self.grid_shape)
        header = [f"i{j + 1}" for j in range(m)] + [f"theta{j + 1}" for j in range(m)] + ["smallest_angle", "kernel_dim", "error"]
        body = []
        for c in self.cells:
            body.append(
                list(c.index)
                + [f"{a:.12g}" for a in c.angles]
                + [f"{c.smallest_angle:.12g}", "" if c.kernel_dim is None else c.kernel_dim, c.error or ""]
            )
        return header, body

    def to_dict(self):
        return {
            "grid_shape": list(self.grid_shape),
            "flagged": [list(i) for i in self.flagged],
            "flagged_count": len(self.flagged),
            "wrap_counts": list(self.wrap_counts),
            "cycles": [list(c) for c in self.cycles],
            "components": self.components,
            "failed_cells": sum(1 for c in self.cells if c.error),
            "settings": dict(self.settings),
        }


def grid_angles(resolution):
    return -np.pi + 2.0 * np.pi * np.arange(resolution) / resolution


def _seed(family, points, horizon, tol, which):
    seeds, errors = {}, {}
    for i, p in enumerate(points):
        try:
            limit = family.asymptotic_plus(p) if which == "plus" else family.asymptotic_minus(p)
            split = hyperbolic_splitting(limit, tol)
            seeds[i] = split.stable if which == "plus" else split.unstable
        except NumericalFailure as exc:
            errors[i] = f"{type(exc).__name__}: {exc}"
    return seeds, errors


def _transport_group(family, points, seeds, t_from):
    """Transport seeds to t=0, falling back to one-by-one on batch failure."""
    idx = sorted(seeds)
    out, errors = {}, {}
    if not idx:
        return out, errors
    try:
        F = transport_frames(family, points[idx], t_from, 0.0, np.stack([seeds[i] for i in idx]))
        out.update(zip(idx, F))
    except NumericalFailure:
        for i in idx:
            try:
                out[i] = integrate_frame(family, points[i], t_from, 0.0, seeds[i])
            except NumericalFailure as exc:
                errors[i] = f"{type(exc).__name__}: {exc}"
    return out, errors


def _scan_chunk(args):
    family, points, horizon, tol_angle, tol = args
    points = np.asarray(points, dtype=float)
    sp, e1 = _seed(family, points, horizon, tol, "plus")
    su, e2 = _seed(family, points, horizon, tol, "minus")
    Es, e3 = _transport_group(family, points, sp, horizon)
    Eu, e4 = _transport_group(family, points, su, -horizon)
    results = []
    for i in range(len(points)):
        err = e1.get(i) or e2.get(i) or e3.get(i) or e4.get(i)
        if err:
            results.append((float("nan"), None, err))
            continue
        sub, kdim = _kernel_from_frames(Es[i], Eu[i], tol_angle)
        results.append((sub.smallest_angle, kdim, None))
    return results


def scan_bifurcation_set(family, resolutions, horizon=DEFAULT_HORIZON, tol_angle=DEFAULT_TOL_ANGLE, tol=DEFAULT_TOL_HYPERBOLIC, workers=1):
    """Kernel dimension over a full torus grid.

    Grid coordinate ``j`` along an axis of resolution ``R`` is the angle
    ``-pi + 2 pi j / R``.  Cells are processed in fixed lexicographic chunks so
    results do not depend on ``workers``.
    """
    resolutions = tuple(int(r) for r in np.atleast_1d(resolutions))
    if len(resolutions) != family.torus_dim:
        raise ValueError(f"need {family.torus_dim} resolutions, got {len(resolutions)}")
    axes = [grid_angles(r) for r in resolutions]
    index = list(np.ndindex(*resolutions))
    points = np.array([[axes[j][i[j]] for j in range(len(i))] for i in index])
    chunks = [(family, points[a : a + SCAN_CHUNK], horizon, tol_angle, tol) for a in range(0, len(points), SCAN_CHUNK)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_scan_chunk, chunks))
    else:
        parts = [_scan_chunk(c) for c in chunks]
    flat = [r for part in parts for r in part]
    cells = [
        CellRecord(tuple(int(x) for x in i), tuple(float(x) for x in p), ang, kd, err)
        for i, p, (ang, kd, err) in zip(index, points, flat)
    ]
    flagged = [c.index for c in cells if c.kernel_dim is not None and c.kernel_dim >= 1]
    wraps, cycles, ncomp = wrap_counts(flagged, resolutions)
    settings = {"horizon": horizon, "tol_angle": tol_angle, "tol_hyperbolic": tol, "resolutions": list(resolutions)}
    return ScanResult(resolutions, cells, flagged, wraps, cycles, ncomp, settings)


def wrap_counts(cells, resolutions):
    """Winding of a set of torus grid cells.

    Cells are joined to their (periodic) Moore neighbours; each connected
    component is lifted to the integer lattice by breadth-first search and
    every non-tree edge contributes the lattice vector by which it closes a
    cycle around the torus.

    Returns
    -------
    wraps : tuple of int
        Shortest nonzero winding vector found (all zeros if nothing wraps),
        sign-normalised so its first nonzero entry is positive.
    cycles : list of tuple
        All distinct normalised winding vectors.
    components : int
    """
    R = np.array(resolutions)
    m = len(R)
    cellset = {tuple(c) for c in cells}
    offsets = [o for o in np.ndindex(*(3,) * m) if any(x != 1 for x in o)]
    offsets = [np.array(o) - 1 for o in offsets]
    lift = {}
    found = set()
    components = 0
    for start in sorted(cellset):
        if start in lift:
            continue
        components += 1
        lift[start] = np.array(start)
        queue = [start]
        while queue:
            c = queue.pop(0)
            for o in offsets:
                n = tuple((np.array(c) + o) % R)
                if n not in cellset:
                    continue
                target = lift[c] + o
                if n not in lift:
                    lift[n] = target
                    queue.append(n)
                else:
                    w = (target - lift[n]) // R
                    if np.any(w):
                        nz = w[np.nonzero(w)[0][0]]
                        found.add(tuple(int(x) for x in (w if nz > 0 else -w)))
    cycles = sorted(found, key=lambda w: (sum(abs(x) for x in w), w))
    wraps = cycles[0] if cycles else (0,) * m
    return wraps, cycles, components
