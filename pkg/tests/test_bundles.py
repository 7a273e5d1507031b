import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from indexbundle.bundles import (
    LoopBundle,
    Z2Class,
    bundle_from_frames,
    check_theorem_hypotheses,
    index_bundle_w1_loop,
    transport_loop,
    w1,
)
from indexbundle.errors import LoopNotResolved, NotAligned
from indexbundle.hamiltonian import ConstantFamily
from indexbundle.scenarios import J2, moebius_family, pejsachowicz_family, s_theta

pytestmark = pytest.mark.filterwarnings("ignore::indexbundle.hamiltonian.AsymptoticResidualWarning")


def line(angle):
    return np.array([[np.cos(angle)], [np.sin(angle)]])


def moebius_line(s):
    return line(np.pi * s)


def full_turn(s):
    return line(2 * np.pi * s)


def constant(s):
    return np.eye(3)[:, :2]


def block_diag(F, G):
    out = np.zeros((F.shape[0] + G.shape[0], F.shape[1] + G.shape[1]))
    out[: F.shape[0], : F.shape[1]] = F
    out[F.shape[0] :, F.shape[1] :] = G
    return out


def test_z2_arithmetic():
    T, N = Z2Class.TRIVIAL, Z2Class.NONTRIVIAL
    assert T + T is T and N + N is T and T + N is N and N + T is N
    assert Z2Class.from_sign(-1) is N
    assert str(N) == "nontrivial"


@pytest.mark.parametrize(
    "sampler, sign",
    [(constant, 1), (moebius_line, -1), (full_turn, 1)],
)
def test_transport_examples(sampler, sign):
    b = transport_loop(sampler, K=64)
    assert b.holonomy_sign == sign
    assert w1(b) is Z2Class.from_sign(sign)


def test_transport_refines_coarse_loops():
    b = transport_loop(full_turn, K=3)
    assert b.holonomy_sign == 1
    assert len(b.frames) > 3
    assert b.max_gap < np.pi / 4


def test_transport_gives_up_past_refine_limit():
    def jump(s):
        return line(0.0 if s < 0.5 else np.pi / 2)

    with pytest.raises(LoopNotResolved):
        transport_loop(jump, K=8, refine_limit=3)


def test_bundle_from_coarse_frames_rejected():
    with pytest.raises(LoopNotResolved):
        bundle_from_frames([line(0.0), line(np.pi / 2)])


def test_w1_needs_transport():
    with pytest.raises(NotAligned):
        w1(LoopBundle(np.zeros(2), [line(0.0), line(0.1)]))


@pytest.mark.parametrize("K", [16, 64, 256])
@pytest.mark.parametrize("sampler", [moebius_line, full_turn])
def test_holonomy_basepoint_independent(K, sampler):
    frames = [sampler(i / K) for i in range(K)]
    ref = bundle_from_frames(frames).holonomy_sign
    for shift in (1, K // 3, K - 1):
        assert bundle_from_frames(frames[shift:] + frames[:shift]).holonomy_sign == ref


@pytest.mark.parametrize("sampler", [moebius_line, full_turn])
def test_holonomy_refinement_stable(sampler):
    signs = {transport_loop(sampler, K=K).holonomy_sign for K in (8, 16, 32, 64, 128)}
    assert len(signs) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_step_signs_multiply_to_holonomy(seed, k):
    rng = np.random.default_rng(seed)
    # random smooth loop of k-frames in R^4 with arbitrary per-sample sign flips
    A = rng.standard_normal((4, 4))
    A = A - A.T
    base = np.linalg.qr(rng.standard_normal((4, k)))[0]
    frames = []
    for s in np.arange(64) / 64:
        F = expm(2 * np.pi * s * A / max(1.0, np.abs(A).max())) @ base
        frames.append(F * rng.choice([-1.0, 1.0], size=k))
    try:
        b = bundle_from_frames(frames)
    except LoopNotResolved:
        return
    assert int(np.prod(b.step_signs)) == b.holonomy_sign


@pytest.mark.parametrize("f, g", [(moebius_line, moebius_line), (moebius_line, full_turn), (full_turn, full_turn)])
def test_direct_sum_holonomy_is_product(f, g):
    hf = transport_loop(f).holonomy_sign
    hg = transport_loop(g).holonomy_sign
    hsum = transport_loop(lambda s: block_diag(f(s), g(s))).holonomy_sign
    assert hsum == hf * hg


# index bundle


def test_moebius_scenario_w1():
    for K in (64, 256):
        res = index_bundle_w1_loop(moebius_family(), K=K)
        assert (res.w1_plus, res.w1_minus, res.w1_index) == (Z2Class.NONTRIVIAL, Z2Class.TRIVIAL, Z2Class.NONTRIVIAL)


def test_moebius_negative_coefficient_still_nontrivial():
    res = index_bundle_w1_loop(moebius_family(a_plus=-1.0))
    assert res.w1_plus is Z2Class.NONTRIVIAL


def test_pejsachowicz_w1():
    res = index_bundle_w1_loop(pejsachowicz_family(1))
    assert (res.w1_plus, res.w1_minus, res.w1_index) == (Z2Class.NONTRIVIAL, Z2Class.TRIVIAL, Z2Class.NONTRIVIAL)
    assert res.to_dict()["holonomy_plus"] == -1


def test_loop_independent_asymptotics_trivial():
    res = index_bundle_w1_loop(ConstantFamily(J2 @ s_theta(0.3)))
    assert (res.w1_plus, res.w1_minus, res.w1_index) == (Z2Class.TRIVIAL,) * 3


def test_hypotheses_pejsachowicz():
    rep = check_theorem_hypotheses(pejsachowicz_family(1))
    assert rep.regular_point_found
    assert rep.regular_point == pytest.approx((-np.pi,))
    assert rep.w1_index is Z2Class.NONTRIVIAL
    assert rep.prediction and rep.scan_confirms
    assert rep.scan.flagged == [(128,)]
    d = rep.to_dict()
    assert d["bifurcation_predicted"] is True and d["errors"] == []


def test_hypotheses_moebius():
    rep = check_theorem_hypotheses(moebius_family(), resolutions=(64,))
    assert rep.regular_point_found and rep.prediction


def test_hypotheses_constant_family_no_prediction():
    rep = check_theorem_hypotheses(ConstantFamily(J2 @ s_theta(0.3)), resolutions=(16,))
    assert rep.w1_index is Z2Class.TRIVIAL
    assert not rep.prediction
    assert not rep.scan_confirms
