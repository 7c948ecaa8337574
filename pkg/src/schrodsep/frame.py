"""Time-dependent frames: rotation, diagonal scaling and translation.

A frame carries nine smooth functions of time, three Euler angles
(alpha, beta, gamma), three positive scales (h1, h2, h3) and three
translations (w1, w2, w3).  The moving chart is

    x = T(t) H(t) z(omega) + w(t),

with T the Euler rotation, H = diag(h).  Which scales may differ is
dictated by the split class of the chart: a completely split chart allows
three independent scales, a partially split one forces h1 = h2, and a
non-split one forces h1 = h2 = h3.  Frames are validated against these
constraints on a probe time grid at construction.

Profiles expose analytic first and second time derivatives because the
potential formulas need them pointwise; differentiating opaque evaluators
numerically would inject noise exactly where the residual checks are most
sensitive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .coords import CoordinateSystem, SplitClass, forward, jacobian
from .errors import ConfigurationError, SingularityError

#: Construction-time validation grid for profile and class constraints.
PROBE_TIMES = np.linspace(-2.0, 2.0, 64)

_CLASS_TOL = 1e-12
_DERIV_TOL = 1e-6
_DET_GUARD = 1e-12


@dataclass(frozen=True)
class TimeProfile:
    """A smooth scalar function of time with two analytic derivatives.

    ``fn(t)`` returns the triple (value, d/dt, d2/dt2).
    """

    fn: Callable[[float], tuple[float, float, float]]

    def __call__(self, t: float) -> tuple[float, float, float]:
        return self.fn(t)

    def value(self, t: float) -> float:
        return self.fn(t)[0]


def constant(c: float) -> TimeProfile:
    c = float(c)
    return TimeProfile(lambda t: (c, 0.0, 0.0))


def polynomial(coefficients: Sequence[float]) -> TimeProfile:
    """Polynomial in t with ascending coefficients (c0 + c1 t + ...)."""
    p = np.polynomial.Polynomial(list(coefficients))
    d1 = p.deriv()
    d2 = d1.deriv()
    return TimeProfile(lambda t: (float(p(t)), float(d1(t)), float(d2(t))))


def sinusoid(
    amplitude: float, angular_frequency: float, phase: float = 0.0, offset: float = 0.0
) -> TimeProfile:
    """offset + amplitude * sin(angular_frequency * t + phase)."""
    A = float(amplitude)
    om = float(angular_frequency)
    ph = float(phase)
    off = float(offset)

    def fn(t: float) -> tuple[float, float, float]:
        s = math.sin(om * t + ph)
        c = math.cos(om * t + ph)
        return (off + A * s, A * om * c, -A * om * om * s)

    return TimeProfile(fn)


def profile_product(p: TimeProfile, q: TimeProfile) -> TimeProfile:
    def fn(t: float) -> tuple[float, float, float]:
        pv, p1, p2 = p(t)
        qv, q1, q2 = q(t)
        return (pv * qv, p1 * qv + pv * q1, p2 * qv + 2.0 * p1 * q1 + pv * q2)

    return TimeProfile(fn)


def _check_profile(name: str, p: TimeProfile) -> None:
    h = 1e-5
    for t in PROBE_TIMES:
        v, d1, d2 = p(float(t))
        if not (math.isfinite(v) and math.isfinite(d1) and math.isfinite(d2)):
            raise ConfigurationError(f"profile {name}: non-finite at t={t}")
        fd1 = (p(float(t) + h)[0] - p(float(t) - h)[0]) / (2.0 * h)
        if abs(d1 - fd1) > _DERIV_TOL * (1.0 + abs(d1)):
            raise ConfigurationError(
                f"profile {name}: first derivative inconsistent at t={t} "
                f"(analytic {d1!r}, finite difference {fd1!r})"
            )
        fd2 = (p(float(t) + h)[1] - p(float(t) - h)[1]) / (2.0 * h)
        if abs(d2 - fd2) > _DERIV_TOL * (1.0 + abs(d2)):
            raise ConfigurationError(
                f"profile {name}: second derivative inconsistent at t={t}"
            )


@dataclass(frozen=True)
class FrameSpec:
    """Validated time-dependent frame for one split class.

    Use :func:`make_frame` (or :func:`identity_frame`) instead of the raw
    constructor; validation happens there.
    """

    alpha: TimeProfile
    beta: TimeProfile
    gamma: TimeProfile
    h1: TimeProfile
    h2: TimeProfile
    h3: TimeProfile
    w1: TimeProfile
    w2: TimeProfile
    w3: TimeProfile
    class_of: SplitClass

    def scales(self, t: float) -> tuple[float, float, float]:
        return (self.h1(t)[0], self.h2(t)[0], self.h3(t)[0])

    def translation(self, t: float) -> np.ndarray:
        return np.array([self.w1(t)[0], self.w2(t)[0], self.w3(t)[0]])


_ZERO = constant(0.0)
_ONE = constant(1.0)


def make_frame(
    class_of: SplitClass | str,
    *,
    alpha: TimeProfile = _ZERO,
    beta: TimeProfile = _ZERO,
    gamma: TimeProfile = _ZERO,
    h1: TimeProfile = _ONE,
    h2: TimeProfile | None = None,
    h3: TimeProfile | None = None,
    w1: TimeProfile = _ZERO,
    w2: TimeProfile = _ZERO,
    w3: TimeProfile = _ZERO,
) -> FrameSpec:
    """Build and validate a frame for the given split class.

    Omitted scale profiles default to the tied value where the class
    requires a tie (h2 from h1 for partial and non-split classes, h3 from
    h1 for non-split) and to unity otherwise.

    Raises
    ------
    ConfigurationError
        On a profile derivative inconsistency, a non-positive scale, or a
        violated class tie on the probe grid.
    """
    cls = SplitClass(class_of)
    if cls is SplitClass.COMPLETE:
        h2 = h1 if h2 is None else h2
        h3 = h1 if h3 is None else h3
    elif cls is SplitClass.PARTIAL:
        h2 = h1 if h2 is None else h2
        h3 = _ONE if h3 is None else h3
    else:
        h2 = h1 if h2 is None else h2
        h3 = h1 if h3 is None else h3

    profiles = {
        "alpha": alpha, "beta": beta, "gamma": gamma,
        "h1": h1, "h2": h2, "h3": h3,
        "w1": w1, "w2": w2, "w3": w3,
    }
    for name, p in profiles.items():
        if not isinstance(p, TimeProfile):
            raise ConfigurationError(f"profile {name} must be a TimeProfile")
        _check_profile(name, p)

    for t in PROBE_TIMES:
        hv = (h1(float(t))[0], h2(float(t))[0], h3(float(t))[0])
        if min(hv) <= 0.0:
            raise ConfigurationError(f"scale profiles must stay positive; h(t={t}) = {hv}")
        if cls is not SplitClass.COMPLETE and abs(hv[0] - hv[1]) > _CLASS_TOL:
            raise ConfigurationError(
                f"{cls.value} class requires h1 = h2; differ by {hv[0] - hv[1]:.3e} at t={t}"
            )
        if cls is SplitClass.NONSPLIT and abs(hv[0] - hv[2]) > _CLASS_TOL:
            raise ConfigurationError(
                f"nonsplit class requires h1 = h3; differ by {hv[0] - hv[2]:.3e} at t={t}"
            )

    return FrameSpec(alpha, beta, gamma, h1, h2, h3, w1, w2, w3, cls)


def identity_frame(class_of: SplitClass | str) -> FrameSpec:
    """The static frame: no rotation, unit scales, no translation."""
    return make_frame(SplitClass(class_of))


def rotation_matrix(frame: FrameSpec, t: float) -> np.ndarray:
    """The Euler rotation T(t); orthogonal with det +-1."""
    ca, sa = math.cos(frame.alpha(t)[0]), math.sin(frame.alpha(t)[0])
    cb, sb = math.cos(frame.beta(t)[0]), math.sin(frame.beta(t)[0])
    cg, sg = math.cos(frame.gamma(t)[0]), math.sin(frame.gamma(t)[0])
    return np.array(
        [
            [ca * cb - sa * sb * cg, -ca * sb - sa * cb * cg, sa * sg],
            [sa * cb + ca * sb * cg, -sa * sb + ca * cb * cg, -ca * sg],
            [sb * sg, cb * sg, cg],
        ]
    )


def rotation_rates(frame: FrameSpec, t: float) -> tuple[float, float, float]:
    """The three half-rates (s1, s2, s3) of the angular-velocity matrix.

    2*s1 = alpha' + beta' cos(gamma)
    2*s2 = beta' cos(alpha) sin(gamma) - gamma' sin(alpha)
    2*s3 = beta' sin(alpha) sin(gamma) + gamma' cos(alpha)

    All three vanish on an interval precisely when the frame does not
    rotate there, which is the compatibility criterion for potentials that
    require a symmetric M matrix.
    """
    a, da, _ = frame.alpha(t)
    _, db, _ = frame.beta(t)
    g, dg, _ = frame.gamma(t)
    ca, sa = math.cos(a), math.sin(a)
    cg, sg = math.cos(g), math.sin(g)
    s1 = 0.5 * (da + db * cg)
    s2 = 0.5 * (db * ca * sg - dg * sa)
    s3 = 0.5 * (db * sa * sg + dg * ca)
    return (s1, s2, s3)


def rotation_rate(frame: FrameSpec, t: float) -> np.ndarray:
    """The angular-velocity matrix dT/dt T^{-1}, assembled in closed form.

    Skew-symmetric; entries (2,1), (3,1), (3,2) are 2*s1, 2*s2, 2*s3 from
    :func:`rotation_rates`.
    """
    s1, s2, s3 = rotation_rates(frame, t)
    return np.array(
        [
            [0.0, -2.0 * s1, -2.0 * s2],
            [2.0 * s1, 0.0, -2.0 * s3],
            [2.0 * s2, 2.0 * s3, 0.0],
        ]
    )


def m_matrix(frame: FrameSpec, t: float) -> np.ndarray:
    """M(t) = dT/dt T^{-1} + T dH/dt H^{-1} T^{-1}.

    The first addend is skew, the second symmetric, so the skew part of M
    is exactly the angular-velocity matrix.
    """
    T = rotation_matrix(frame, t)
    rel = []
    for p in (frame.h1, frame.h2, frame.h3):
        v, d1, _ = p(t)
        if v <= 0.0:
            raise ConfigurationError(f"scale profile non-positive at t={t}")
        rel.append(d1 / v)
    return rotation_rate(frame, t) + T @ np.diag(rel) @ T.T


def _require_compatible(system: CoordinateSystem, frame: FrameSpec) -> None:
    if frame.class_of is not system.split_class:
        raise ConfigurationError(
            f"frame of class {frame.class_of.value} cannot drive the "
            f"{system.split_class.value} chart {system.sid.value}"
        )


def embed(system: CoordinateSystem, frame: FrameSpec, t: float, omega) -> np.ndarray:
    """Cartesian position x = T(t) H(t) z(omega) + w(t)."""
    _require_compatible(system, frame)
    z = forward(system, omega)
    hz = np.array(frame.scales(t)) * z
    return rotation_matrix(frame, t) @ hz + frame.translation(t)


def unembed(frame: FrameSpec, t: float, x) -> np.ndarray:
    """Chart-space target z = H^{-1} T^T (x - w); feeds coords.invert."""
    y = rotation_matrix(frame, t).T @ (np.asarray(x, dtype=float) - frame.translation(t))
    return y / np.array(frame.scales(t))


def omega_gradients(system: CoordinateSystem, frame: FrameSpec, t: float, omega) -> np.ndarray:
    """Gradients of omega_i in Cartesian x at the embedded point.

    Returns a 3x3 array whose i-th row is grad omega_i, computed as the
    i-th row of (T H J)^{-1} with J the chart Jacobian.
    """
    _require_compatible(system, frame)
    J = jacobian(system, omega)
    A = rotation_matrix(frame, t) @ (np.array(frame.scales(t))[:, None] * J)
    det = float(np.linalg.det(A))
    if abs(det) <= _DET_GUARD * float(np.linalg.norm(A)) ** 3:
        raise SingularityError(
            f"{system.sid.value}: embedded Jacobian singular at t={t}, omega={tuple(omega)}"
        )
    # Adjugate transpose over determinant; rows of the inverse.
    a = A
    adj = np.array(
        [
            [a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1],
             a[0, 2] * a[2, 1] - a[0, 1] * a[2, 2],
             a[0, 1] * a[1, 2] - a[0, 2] * a[1, 1]],
            [a[1, 2] * a[2, 0] - a[1, 0] * a[2, 2],
             a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0],
             a[0, 2] * a[1, 0] - a[0, 0] * a[1, 2]],
            [a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0],
             a[0, 1] * a[2, 0] - a[0, 0] * a[2, 1],
             a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]],
        ]
    )
    return adj / det
