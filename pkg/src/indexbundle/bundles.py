"""Loops of subspaces as discretised vector bundles over the circle.

Over S^1 a real vector bundle is classified by its orientability, so the first
Stiefel-Whitney class is read off as the holonomy sign of a continuous frame
transport around the loop.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentGapTooLarge, LoopNotResolved, NotAligned, NotHyperbolic
from .numerics import principal_angles

MAX_GAP = np.pi / 4


class Z2Class(enum.Enum):
    TRIVIAL = "trivial"
    NONTRIVIAL = "nontrivial"

    @classmethod
    def from_sign(cls, sign):
        return cls.TRIVIAL if sign > 0 else cls.NONTRIVIAL

    def __add__(self, other):
        return Z2Class.TRIVIAL if self is other else Z2Class.NONTRIVIAL

    def __str__(self):
        return self.value


@dataclass
class LoopBundle:
    """Frames sampled around a closed loop, aligned to their predecessors.

    ``params`` are loop parameters in ``[0, 1)``; parameter 1 is identified
    with 0.  ``step_signs[i]`` is the orientation sign of the raw overlap
    between frame ``i`` and frame ``i + 1`` (the last entry is the seam back to
    frame 0), so their product equals the holonomy sign.
    """

    params: np.ndarray
    frames: list
    aligned: bool = False
    holonomy_sign: int | None = None
    step_signs: list = field(default_factory=list)
    raw_frames: list = field(default_factory=list)

    @property
    def rank(self):
        return self.frames[0].shape[1] if self.frames else 0

    @property
    def max_gap(self):
        """Largest principal angle between consecutive fibres, seam included."""
        n = len(self.frames)
        gaps = [principal_angles(self.frames[i], self.frames[(i + 1) % n]) for i in range(n)]
        return max((float(g.max()) for g in gaps if g.size), default=0.0)


def _transport(params, raw):
    """Sequential Procrustes fold over already-resolved raw frames.

    Since ``polar(M R) = polar(M) R`` for orthogonal ``R``, the alignment of
    frame ``i`` to the aligned frame ``i-1`` is the product of the relative
    polar factors ``polar(F_i^T F_{i-1})``; these are computed in one batch.
    """
    F = np.stack(raw)
    n, d, k = F.shape
    if k == 0:
        return LoopBundle(np.asarray(params, dtype=float), list(F), True, 1, [1] * n, list(raw))
    nxt = np.roll(F, -1, axis=0)
    M = np.swapaxes(nxt, 1, 2) @ F  # M[i] = F_{i+1}^T F_i, seam last
    U, s, Vt = np.linalg.svd(M)
    worst = int(np.argmin(s[:, -1]))
    angle = float(np.arccos(np.clip(s[worst, -1], -1.0, 1.0)))
    if angle >= MAX_GAP:
        raise AlignmentGapTooLarge(f"largest principal angle {angle:.3f} between fibres {worst} and {(worst + 1) % n}")
    P = U @ Vt
    R = np.empty((n, k, k))
    R[0] = np.eye(k)
    for i in range(1, n):
        R[i] = P[i - 1] @ R[i - 1]
    aligned = F @ R
    # seam: re-align frame 0 to the transported last frame
    holonomy = 1 if np.linalg.det(P[-1] @ R[-1]) > 0 else -1
    steps = [1 if x > 0 else -1 for x in np.linalg.det(M)]
    return LoopBundle(
        params=np.asarray(params, dtype=float),
        frames=list(aligned),
        aligned=True,
        holonomy_sign=holonomy,
        step_signs=steps,
        raw_frames=list(raw),
    )


def bundle_from_frames(frames, params=None):
    """Build an aligned loop bundle from a fixed list of fibre frames.

    The loop closes from ``frames[-1]`` back to ``frames[0]``.  No refinement
    is possible here, so a gap of ``pi/4`` or more raises ``LoopNotResolved``.
    """
    frames = [np.asarray(F, dtype=float) for F in frames]
    if not frames:
        raise ValueError("empty loop")
    ranks = {F.shape for F in frames}
    if len(ranks) != 1:
        raise ValueError(f"fibres of varying shape: {sorted(ranks)}")
    if params is None:
        params = np.arange(len(frames)) / len(frames)
    try:
        return _transport(params, frames)
    except AlignmentGapTooLarge as exc:
        raise LoopNotResolved(f"consecutive fibres too far apart: {exc}") from exc


def transport_loop(sampler, K=64, refine_limit=10):
    """Continuously transport frames around a loop.

    Parameters
    ----------
    sampler : callable
        Maps a loop parameter ``s`` in ``[0, 1]`` to a frame; ``s = 1`` is the
        same fibre as ``s = 0``.
    K : int
        Initial number of equally spaced samples.
    refine_limit : int
        Maximum bisection depth for intervals whose fibres are ``pi/4`` or more
        apart.
    """
    if K < 2:
        raise ValueError("need at least two samples")
    params = [i / K for i in range(K)]
    raw = [np.asarray(sampler(s), dtype=float) for s in params]
    shape = raw[0].shape
    out_p, out_f = [params[0]], [raw[0]]
    # walk the intervals, bisecting where the next fibre is too far away
    for i in range(K):
        stack = [(params[i], raw[i], 1.0 if i == K - 1 else params[i + 1], raw[(i + 1) % K], 0)]
        while stack:
            sa, Fa, sb, Fb, depth = stack.pop()
            if Fb.shape != shape:
                raise ValueError("sampler returned frames of varying rank")
            gap = principal_angles(Fa, Fb)
            if gap.size == 0 or gap.max() < MAX_GAP:
                if sb < 1.0:
                    out_p.append(sb)
                    out_f.append(Fb)
                continue
            if depth >= refine_limit:
                raise LoopNotResolved(f"gap {gap.max():.3f} between s={sa:.6g} and s={sb:.6g} after {depth} bisections")
            sm = 0.5 * (sa + sb)
            Fm = np.asarray(sampler(sm), dtype=float)
            # LIFO: push the right half first so the left half is emitted first
            stack.append((sm, Fm, sb, Fb, depth + 1))
            stack.append((sa, Fa, sm, Fm, depth + 1))
    return _transport(out_p, out_f)


def w1(bundle):
    """First Stiefel-Whitney class of a loop bundle."""
    if not bundle.aligned or bundle.holonomy_sign is None:
        raise NotAligned("bundle has not been transported")
    return Z2Class.from_sign(bundle.holonomy_sign)


@dataclass
class IndexBundleW1:
    w1_plus: Z2Class
    w1_minus: Z2Class
    w1_index: Z2Class
    bundle_plus: LoopBundle
    bundle_minus: LoopBundle

    def to_dict(self):
        return {
            "w1_plus": str(self.w1_plus),
            "w1_minus": str(self.w1_minus),
            "w1_index": str(self.w1_index),
            "holonomy_plus": self.bundle_plus.holonomy_sign,
            "holonomy_minus": self.bundle_minus.holonomy_sign,
            "samples_plus": len(self.bundle_plus.frames),
            "samples_minus": len(self.bundle_minus.frames),
        }


def index_bundle_w1_loop(family, loop=None, K=64, tol=1e-6, refine_limit=10):
    """w1 of the stable bundles at both ends of time and of their difference.

    ``loop`` maps ``s`` in ``[0, 1]`` to a parameter point of ``family``;
    defaults to ``family.default_loop``.  The index bundle is the formal
    difference ``[E^s(+inf)] - [E^s(-inf)]``, so its w1 is the Z2 sum.
    """
    from .hamiltonian import hyperbolic_splitting

    loop = loop or family.default_loop

    def sampler(which):
        limit = family.asymptotic_plus if which == "plus" else family.asymptotic_minus

        def f(s):
            point = loop(s)
            try:
                return hyperbolic_splitting(limit(point), tol).stable
            except NotHyperbolic as exc:
                raise NotHyperbolic(f"{which} limit not hyperbolic at s={s:.6g}: {exc}", parameter=point) from exc

        return f

    bp = transport_loop(sampler("plus"), K, refine_limit)
    bm = transport_loop(sampler("minus"), K, refine_limit)
    wp, wm = w1(bp), w1(bm)
    return IndexBundleW1(wp, wm, wp + wm, bp, bm)


@dataclass
class HypothesisReport:
    regular_point_found: bool
    regular_point: tuple | None
    w1_index: Z2Class | None
    prediction: bool
    scan_confirms: bool
    flagged_count: int
    w1: IndexBundleW1 | None = None
    scan: object = None
    errors: list = field(default_factory=list)

    def to_dict(self):
        return {
            "regular_point_found": self.regular_point_found,
            "regular_point": None if self.regular_point is None else [float(x) for x in self.regular_point],
            "w1_index": None if self.w1_index is None else str(self.w1_index),
            "w1": None if self.w1 is None else self.w1.to_dict(),
            "bifurcation_predicted": self.prediction,
            "scan_confirms": self.scan_confirms,
            "flagged_count": self.flagged_count,
            "errors": list(self.errors),
        }


def check_theorem_hypotheses(family, loop=None, resolutions=None, horizon=20.0, tol_angle=1e-3, K=64, workers=1, scan=None):
    """Evaluate the w1 bifurcation criterion on a family.

    The criterion predicts a nonempty bifurcation set when (a) some parameter
    has only the trivial homoclinic solution and (b) w1 of the stable bundles
    at plus and minus infinity differ along ``loop``.  The prediction is then
    compared against the candidate set flagged by a grid scan.
    """
    from .hamiltonian import scan_bifurcation_set

    errors = []
    if scan is None:
        if resolutions is None:
            resolutions = (256,) * family.torus_dim
        scan = scan_bifurcation_set(family, resolutions, horizon=horizon, tol_angle=tol_angle, workers=workers)
    regular = [c for c in scan.cells if c.kernel_dim == 0]
    best = max(regular, key=lambda c: c.smallest_angle, default=None)
    errors.extend(f"cell {c.index}: {c.error}" for c in scan.cells if c.error)

    info = None
    try:
        info = index_bundle_w1_loop(family, loop, K)
    except Exception as exc:  # report carries partial failures
        errors.append(f"w1: {type(exc).__name__}: {exc}")
    w1_index = None if info is None else info.w1_index
    prediction = best is not None and w1_index is Z2Class.NONTRIVIAL
    return HypothesisReport(
        regular_point_found=best is not None,
        regular_point=None if best is None else best.angles,
        w1_index=w1_index,
        prediction=prediction,
        scan_confirms=len(scan.flagged) > 0,
        flagged_count=len(scan.flagged),
        w1=info,
        scan=scan,
        errors=errors,
    )
