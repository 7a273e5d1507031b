"""Built-in Hamiltonian families with non-orientable stable bundles.

``moebius``
    Asymptotics ``a_- J S_0`` at ``-inf`` and ``a_+ J S_theta`` at ``+inf``,
    joined by the profile ``chi(t) = (1 + tanh(t / scale)) / 2``.  The stable
    bundle at ``+inf`` is a Moebius band over the circle.

``pejsachowicz``
    ``A(lambda, t) = arctan(t) J S_{theta_1 + ... + theta_m}`` for ``t >= 0``
    and ``arctan(t) J S_0`` for ``t < 0`` over the torus ``T^m``.  Homoclinic
    solutions exist exactly where ``theta_1 + ... + theta_m = 0 mod 2 pi``.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, InvalidConfig
from .hamiltonian import HamiltonianFamily, symplectic_J

J2 = symplectic_J(1)
SCENARIOS = ("moebius", "pejsachowicz")


def s_theta(theta):
    """Reflection of the plane in the line spanned by ``e2(theta)``."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [s, -c]])


def e1(theta):
    """Eigenvector of ``S_theta`` for eigenvalue -1."""
    return np.array([-np.sin(theta / 2), np.cos(theta / 2)])


def e2(theta):
    """Eigenvector of ``S_theta`` for eigenvalue +1."""
    return np.array([np.cos(theta / 2), np.sin(theta / 2)])


def _j_s_batch(theta):
    # J S_theta = [[-sin, cos], [cos, sin]]
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([-s, c], -1), np.stack([c, s], -1)], -2)


@dataclass
class ScenarioConfig:
    name: str
    a_plus: float = 1.0
    a_minus: float = 1.0
    m: int = 1
    profile_scale: float = 1.0
    inert_dims: int = 0

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise InvalidConfig(f"unknown scenario {self.name!r}; expected one of {SCENARIOS}")
        if self.a_plus == 0 or self.a_minus == 0:
            raise InvalidConfig("a_plus and a_minus must be nonzero")
        if int(self.m) != self.m or self.m < 1:
            raise InvalidConfig("m must be a positive integer")
        if self.profile_scale <= 0:
            raise InvalidConfig("profile_scale must be positive")
        if self.inert_dims < 0:
            raise InvalidConfig("inert_dims must be nonnegative")

    def to_dict(self):
        return asdict(self)


class MoebiusFamily(HamiltonianFamily):
    """Interpolation between ``a_- J S_0`` and ``a_+ J S_theta``.

    The circle coordinate ``theta`` is the last torus coordinate; the
    ``inert_dims`` leading coordinates play the role of a parameter space the
    family does not depend on.
    """

    def __init__(self, a_plus=1.0, a_minus=1.0, profile_scale=1.0, inert_dims=0):
        if a_plus == 0 or a_minus == 0:
            raise InvalidConfig("a_plus and a_minus must be nonzero")
        self.a_plus, self.a_minus = float(a_plus), float(a_minus)
        self.profile_scale = float(profile_scale)
        self.inert_dims = int(inert_dims)
        self.half_dim = 1
        self.torus_dim = 1 + self.inert_dims

    def profile(self, t):
        return 0.5 * (1.0 + np.tanh(t / self.profile_scale))

    def evaluate(self, point, t):
        return self.evaluate_batch(np.atleast_2d(point), t)[0]

    def evaluate_batch(self, points, t):
        theta = np.asarray(points, dtype=float)[:, -1]
        chi = self.profile(t)
        return (1.0 - chi) * self.a_minus * _j_s_batch(np.zeros_like(theta)) + chi * self.a_plus * _j_s_batch(theta)

    def asymptotic_plus(self, point):
        return self.a_plus * J2 @ s_theta(np.atleast_1d(point)[-1])

    def asymptotic_minus(self, point):
        return self.a_minus * J2 @ s_theta(0.0)

    def describe(self):
        return {
            "family": "moebius",
            "a_plus": self.a_plus,
            "a_minus": self.a_minus,
            "profile_scale": self.profile_scale,
            "inert_dims": self.inert_dims,
        }


class PejsachowiczFamily(HamiltonianFamily):
    """``arctan(t) J S_{sum theta}`` for ``t >= 0``, ``arctan(t) J S_0`` for ``t < 0``.

    Continuous but not smooth at ``t = 0``, which is declared as a breakpoint.
    """

    breakpoints = (0.0,)

    def __init__(self, m=1):
        if int(m) != m or m < 1:
            raise InvalidConfig("m must be a positive integer")
        self.m = int(m)
        self.half_dim = 1
        self.torus_dim = self.m

    def evaluate(self, point, t):
        return self.evaluate_batch(np.atleast_2d(point), t)[0]

    def evaluate_batch(self, points, t):
        points = np.asarray(points, dtype=float)
        theta = points.sum(axis=1) if t >= 0 else np.zeros(len(points))
        return np.arctan(t) * _j_s_batch(theta)

    def asymptotic_plus(self, point):
        return (np.pi / 2) * J2 @ s_theta(np.sum(point))

    def asymptotic_minus(self, point):
        return -(np.pi / 2) * J2 @ s_theta(0.0)

    def default_loop(self, s):
        point = np.zeros(self.m)
        point[0] = -np.pi + 2.0 * np.pi * s
        return point

    def describe(self):
        return {"family": "pejsachowicz", "m": self.m}


def moebius_family(config=None, **kw):
    c = config or ScenarioConfig("moebius", **kw)
    return MoebiusFamily(c.a_plus, c.a_minus, c.profile_scale, c.inert_dims)


def pejsachowicz_family(m=1):
    return PejsachowiczFamily(m)


def build_family(config):
    if config.name == "moebius":
        return moebius_family(config)
    return pejsachowicz_family(config.m)


def _decay(t):
    return np.sqrt(t * t + 1.0) * np.exp(-t * np.arctan(t))


def analytic_solution_minus(point, t):
    """Decaying solution on ``t <= 0``: ``sqrt(t^2+1) exp(-t arctan t) (1, 0)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t > 0):
        raise DomainError("the minus solution is defined for t <= 0")
    return _decay(t)[..., None] * np.array([1.0, 0.0])


def analytic_solution_plus(point, t):
    """Decaying solution on ``t >= 0`` along ``e2(theta_1 + ... + theta_m)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("the plus solution is defined for t >= 0")
    return _decay(t)[..., None] * e2(np.sum(point))
