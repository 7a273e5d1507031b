"""Acceptance criteria, runnable from pytest and from ``indexbundle verify``.

Each criterion returns a :class:`CriterionResult`; wall-clock limits are
part of the pass condition.
"""

import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import fredholm as fh
from .bundles import Z2Class, check_theorem_hypotheses, index_bundle_w1_loop, w1
from .errors import LoopNotResolved, NotTransversal, SamplingTooCoarse
from .hamiltonian import (
    AsymptoticResidualWarning,
    grid_angles,
    scan_bifurcation_set,
    stable_at_zero,
    symplectic_J,
    unstable_at_zero,
)
from .numerics import principal_angles
from .scenarios import analytic_solution_minus, analytic_solution_plus, e2, moebius_family, pejsachowicz_family


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    runtime: float
    limit: float

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({self.runtime:.2f}s / limit {self.limit:g}s)"


def _timed(number, name, limit):
    def deco(fn):
        def run(seed=0):
            t0 = time.perf_counter()
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", AsymptoticResidualWarning)
                ok, detail = fn(seed)
            dt = time.perf_counter() - t0
            if dt >= limit:
                ok, detail = False, f"{detail}; runtime limit exceeded"
            return CriterionResult(number, name, bool(ok), detail, dt, limit)

        run.number, run.title = number, name
        return run

    return deco


@_timed(1, "truncated L1 parity", 1.0)
def criterion_1(seed):
    got = {N: fh.parity_segment(fh.tilde_L1_path(N)) for N in range(1, 11)}
    return all(v == -1 for v in got.values()), f"parities for N=1..10: {sorted(set(got.values()))}"


@_timed(2, "conjugation identity with boundary defect", 1.0)
def criterion_2(seed):
    worst_interior, defects = 0.0, []
    for N in range(2, 21, 2):
        C = fh.conjugator_N(N)
        D = C.T @ fh.tilde_L1(-1.0, N) @ C - fh.tilde_L1(1.0, N)
        mask = np.ones_like(D, dtype=bool)
        mask[2 * N, 2 * N] = False
        worst_interior = max(worst_interior, np.abs(D[mask]).max())
        defects.append(float(abs(D[2 * N, 2 * N])))
    ok = worst_interior < 1e-12 and all(abs(x - 2.0) < 1e-12 for x in defects)
    return ok, f"max interior deviation {worst_interior:.1e}, defect sizes {sorted(set(defects))}"


@_timed(3, "finite-dimensional closed loops have parity +1", 10.0)
def criterion_3(seed):
    lp = fh.closed_loop_parity(fh.tilde_L_loop(4))
    ok = lp.value == 1 and lp.segment_parities == (-1, 1, -1)
    rng = np.random.default_rng(seed)
    values = []
    for _ in range(100):
        path, _ = fh.random_symmetric_path(rng, int(rng.integers(1, 9)), samples=200, closed=True)
        values.append(fh.closed_loop_parity(path).value)
    ok = ok and all(v == 1 for v in values)
    return ok, f"tilde L loop {lp.value} with segments {lp.segment_parities}; random loops {sorted(set(values))}"


@_timed(4, "degree = sign(det) = (-1)^m", 5.0)
def criterion_4(seed):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(200):
        d = int(rng.integers(1, 11))
        T = rng.standard_normal((d, d))
        while not fh.is_invertible(T):
            T = rng.standard_normal((d, d))
        sign_det = int(np.linalg.slogdet(T)[0])
        ev = np.linalg.eigvals(T)
        # LAPACK returns real eigenvalues with an exactly zero imaginary part
        m = int(np.sum((ev.imag == 0) & (ev.real < 0)))
        if not fh.leray_schauder_degree(T) == sign_det == (-1) ** m:
            bad += 1
    return bad == 0, f"{200 - bad}/200 agree"


def _endpoint_gap(S):
    ev = np.linalg.eigvalsh(S[[0, -1]])
    return np.abs(ev).min()


def resolved_flow(path, evaluate, attempts=4):
    """spectral_flow_mod2, resampling the path more finely while too coarse."""
    for _ in range(attempts):
        try:
            return fh.spectral_flow_mod2(path), path
        except SamplingTooCoarse:
            t = np.linspace(path.parameters[0], path.parameters[-1], 4 * len(path))
            path = fh.TruncatedOperatorPath(t, evaluate(t))
    return fh.spectral_flow_mod2(path), path


@_timed(5, "parity = spectral flow mod 2, (C) and (N)", 30.0)
def criterion_5(seed):
    rng = np.random.default_rng(seed)
    n_flow = n_c = n_n = 0
    checked_c = checked_n = 0
    done = 0
    while done < 200:
        path, ev = fh.random_symmetric_path(rng, int(rng.integers(1, 9)), samples=2000)
        if _endpoint_gap(path.samples) < 0.1:
            continue
        done += 1
        flow, path = resolved_flow(path, ev)
        parity = fh.parity_segment(path)
        n_flow += flow == parity
        eigs = np.linalg.eigvalsh(path.samples)
        gaps = np.abs(eigs).min(axis=1)
        disp = np.abs(np.diff(eigs, axis=0)).max(axis=1)
        # (C) at a few interior invertible cut points
        for c in range(len(path) // 7, len(path) - 1, len(path) // 7):
            if gaps[c] > 1e-6:
                checked_c += 1
                n_c += parity == fh.parity_segment(path, 0, c) * fh.parity_segment(path, c, -1)
        # (N) on windows whose eigenvalues provably stay away from zero
        for a in range(0, len(path) - 20, max(1, len(path) // 5)):
            b = a + 20
            if gaps[a : b + 1].min() > 2 * disp[a:b].max():
                checked_n += 1
                n_n += fh.parity_segment(path, a, b) == 1
    ok = n_flow == 200 and n_c == checked_c and n_n == checked_n and checked_c > 0 and checked_n > 0
    return ok, f"flow agreement {n_flow}/200, (C) {n_c}/{checked_c}, (N) {n_n}/{checked_n}"


def random_frame(rng, d, k):
    Q, _ = np.linalg.qr(rng.standard_normal((d, k)))
    return Q


def kernel_w1_random_family(rng, V_dims=(1, 2), samples=400, margin=0.02):
    """w1 of E(L, V) for one random closed family and several random V.

    ``V`` is redrawn until ``P L`` stays surjective with ``sigma_min >= margin``
    along the loop; the loop is resampled finer until every step is resolved.
    """
    while True:
        d = int(rng.integers(max(V_dims) + 1, 7))
        path, evaluate = fh.random_symmetric_path(rng, d, samples=samples, closed=True)
        Vs = [random_frame(rng, d, k) for k in V_dims]
        try:
            if all(fh.kernel_frames(path.samples, V)[1].min() >= margin for V in Vs):
                break
        except NotTransversal:
            continue
    out = []
    for V in Vs:
        n = samples
        while True:
            try:
                out.append(w1(fh.kernel_bundle(path, V)))
                break
            except LoopNotResolved:
                n *= 4
                t = np.linspace(0.0, 2 * np.pi, n)
                S = evaluate(t)
                S[-1] = S[0]
                path = fh.TruncatedOperatorPath(t, S, closed=True)
    return out


@_timed(6, "kernel bundle w1 is trivial and V-independent", 10.0)
def criterion_6(seed):
    rng = np.random.default_rng(seed)
    results = [kernel_w1_random_family(rng) for _ in range(20)]
    ok = all(r[0] is r[1] is Z2Class.TRIVIAL for r in results)
    return ok, f"{sum(r[0] is r[1] for r in results)}/20 V-independent, classes {sorted({str(x) for r in results for x in r})}"


@_timed(7, "Moebius scenario w1", 10.0)
def criterion_7(seed):
    fam = moebius_family()
    got = []
    for K in (64, 256):
        r = index_bundle_w1_loop(fam, K=K)
        got.append((r.w1_plus, r.w1_minus, r.w1_index))
    expect = (Z2Class.NONTRIVIAL, Z2Class.TRIVIAL, Z2Class.NONTRIVIAL)
    return all(g == expect for g in got), "K=64: " + "/".join(map(str, got[0])) + "; K=256: " + "/".join(map(str, got[1]))


@_timed(8, "Pejsachowicz m=1 transport and bifurcation point", 60.0)
def criterion_8(seed):
    fam = pejsachowicz_family(1)
    worst_s = worst_u = 0.0
    for theta in grid_angles(32):
        Es = stable_at_zero(fam, [theta], horizon=20.0)
        Eu = unstable_at_zero(fam, [theta], horizon=20.0)
        worst_s = max(worst_s, principal_angles(Es, e2(theta)).max())
        worst_u = max(worst_u, principal_angles(Eu, [1.0, 0.0]).max())
    scan = scan_bifurcation_set(fam, (256,), horizon=20.0)
    zero_cell = (int(np.argmin(np.abs(grid_angles(256)))),)
    ok = worst_s < 1e-5 and worst_u < 1e-5 and scan.flagged == [zero_cell]
    return ok, f"max angle E^s {worst_s:.1e}, E^u {worst_u:.1e}; flagged {scan.flagged} (theta=0 cell {zero_cell})"


@_timed(9, "Pejsachowicz m=2 flagged set geometry and winding", 300.0)
def criterion_9(seed):
    R = 64
    scan = scan_bifurcation_set(pejsachowicz_family(2), (R, R), horizon=20.0, workers=4)
    h = 2 * np.pi / R
    dist = [abs(np.angle(np.exp(1j * sum(c.angles)))) / np.sqrt(2) for c in scan.cells if c.kernel_dim]
    near = bool(dist) and max(dist) <= h
    wraps = scan.wrap_counts
    ok = near and all(w != 0 for w in wraps) and not any(c.error for c in scan.cells)
    return ok, f"{len(scan.flagged)} flagged cells, max distance to line {max(dist, default=float('nan')):.2e} (cell {h:.3f}), wrap counts {wraps}"


def fd_derivative(f, t, h, direction):
    """Sixth-order one-sided difference stencil pointing in ``direction``."""
    c = np.array([-49 / 20, 6.0, -15 / 2, 20 / 3, -15 / 4, 6 / 5, -1 / 6])
    return sum(ci * f(t + direction * i * h) for i, ci in enumerate(c)) / (direction * h)


@_timed(10, "closed-form homoclinic halves solve the ODE", 5.0)
def criterion_10(seed):
    rng = np.random.default_rng(seed)
    J = symplectic_J(1)
    worst = 0.0
    for m in (1, 2, 3):
        fam = pejsachowicz_family(m)
        point = rng.uniform(-np.pi, np.pi, m)
        for sol, ts, direction in (
            (analytic_solution_minus, np.linspace(-5.0, 0.0, 100), -1),
            (analytic_solution_plus, np.linspace(0.0, 5.0, 100), 1),
        ):
            for t in ts:
                du = fd_derivative(lambda s: sol(point, s), t, 1e-3, direction)
                r = J @ du + fam.evaluate(point, t) @ sol(point, t)
                worst = max(worst, float(np.linalg.norm(r)))
    return worst < 1e-8, f"max residual {worst:.1e}"


@_timed(11, "bifurcation criterion pipeline on Pejsachowicz m=1", 60.0)
def criterion_11(seed):
    rep = check_theorem_hypotheses(pejsachowicz_family(1), resolutions=(256,))
    ok = rep.regular_point_found and rep.w1_index is Z2Class.NONTRIVIAL and rep.prediction and rep.scan_confirms
    return ok, (
        f"regular point {rep.regular_point}, w1_index {rep.w1_index}, "
        f"predicted {rep.prediction}, flagged {rep.scan.flagged}"
    )


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


def run_all(seed=0, echo=print):
    results = []
    for crit in CRITERIA:
        r = crit(seed)
        if echo:
            echo(r.line())
        results.append(r)
    return results
