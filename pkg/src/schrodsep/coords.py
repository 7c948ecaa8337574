"""Catalogue of separable orthogonal coordinate systems on R^3.

Each system is given by an implicit map x = z(omega) from a coordinate box
to Cartesian space.  All eleven base charts are orthogonal and every
component function omega_a(x) of the inverse map is harmonic.  Two shifted
variants of the prolate spheroidal chart (third component offset by +-a)
are included because they admit extra separable potentials.

The charts fall into three split classes which control how they may be
combined with time-dependent scale factors:

* ``complete``  - all three axes scale independently (cartesian),
* ``partial``   - axes 1 and 2 share a scale factor (the three cylinder
  charts),
* ``nonsplit``  - all axes share one scale factor (the seven remaining
  genuinely three-dimensional charts).

Angles are kept in their principal boxes; radial-like axes that make the
map blow up at an endpoint are flagged singular and excluded from the
admissible set, with an interior safety margin ``EPS_DOM`` used by the
samplers and the Newton clamp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .elliptic import Modulus, jacobi
from .errors import ConfigurationError, DomainError, InversionError, SingularityError

EPS_DOM = 1e-6
#: Unbounded axes are truncated to this symmetric box when sampling.
SAMPLE_TRUNC = 3.0

_INF = math.inf


class SystemId(str, Enum):
    CARTESIAN = "cartesian"
    CYLINDRICAL = "cylindrical"
    PARABOLIC_CYLINDRICAL = "parabolic_cylindrical"
    ELLIPTIC_CYLINDRICAL = "elliptic_cylindrical"
    SPHERICAL = "spherical"
    PROLATE_SPHEROIDAL = "prolate_spheroidal"
    PROLATE_SPHEROIDAL_II_PLUS = "prolate_spheroidal_ii_plus"
    PROLATE_SPHEROIDAL_II_MINUS = "prolate_spheroidal_ii_minus"
    OBLATE_SPHEROIDAL = "oblate_spheroidal"
    PARABOLIC = "parabolic"
    PARABOLOIDAL = "paraboloidal"
    ELLIPSOIDAL = "ellipsoidal"
    CONICAL = "conical"


class SplitClass(str, Enum):
    COMPLETE = "complete"
    PARTIAL = "partial"
    NONSPLIT = "nonsplit"


_SPLIT: dict[SystemId, SplitClass] = {
    SystemId.CARTESIAN: SplitClass.COMPLETE,
    SystemId.CYLINDRICAL: SplitClass.PARTIAL,
    SystemId.PARABOLIC_CYLINDRICAL: SplitClass.PARTIAL,
    SystemId.ELLIPTIC_CYLINDRICAL: SplitClass.PARTIAL,
    SystemId.SPHERICAL: SplitClass.NONSPLIT,
    SystemId.PROLATE_SPHEROIDAL: SplitClass.NONSPLIT,
    SystemId.PROLATE_SPHEROIDAL_II_PLUS: SplitClass.NONSPLIT,
    SystemId.PROLATE_SPHEROIDAL_II_MINUS: SplitClass.NONSPLIT,
    SystemId.OBLATE_SPHEROIDAL: SplitClass.NONSPLIT,
    SystemId.PARABOLIC: SplitClass.NONSPLIT,
    SystemId.PARABOLOIDAL: SplitClass.NONSPLIT,
    SystemId.ELLIPSOIDAL: SplitClass.NONSPLIT,
    SystemId.CONICAL: SplitClass.NONSPLIT,
}

#: Systems whose formulas use the focal scale ``a``.
_USES_A = {
    SystemId.ELLIPTIC_CYLINDRICAL,
    SystemId.PROLATE_SPHEROIDAL,
    SystemId.PROLATE_SPHEROIDAL_II_PLUS,
    SystemId.PROLATE_SPHEROIDAL_II_MINUS,
    SystemId.OBLATE_SPHEROIDAL,
    SystemId.PARABOLOIDAL,
    SystemId.ELLIPSOIDAL,
}

#: Systems whose formulas use Jacobi elliptic functions of a fixed modulus.
_USES_K = {SystemId.ELLIPSOIDAL, SystemId.CONICAL}


@dataclass(frozen=True)
class AxisInterval:
    """One coordinate axis: interval hull plus singular-endpoint flags.

    A singular endpoint is one where the map itself degenerates or blows
    up; it is excluded from the admissible set.  Non-singular finite
    endpoints remain evaluable (periodic seams, closed interval ends).
    """

    lo: float
    hi: float
    singular_lo: bool = False
    singular_hi: bool = False

    def contains(self, w: float) -> bool:
        if not (self.lo <= w <= self.hi):
            return False
        if self.singular_lo and w <= self.lo:
            return False
        if self.singular_hi and w >= self.hi:
            return False
        return True


@dataclass(frozen=True)
class CoordinateSystem:
    """A concrete chart: system id plus its fixed parameters.

    Parameters
    ----------
    sid : SystemId
    a : float
        Focal scale, used only by the charts in ``_USES_A``.
    kmod : Modulus or None
        Elliptic modulus data, required by ellipsoidal and conical charts.
    """

    sid: SystemId
    a: float = 1.0
    kmod: Modulus | None = None

    @property
    def split_class(self) -> SplitClass:
        return _SPLIT[self.sid]

    @property
    def domain(self) -> tuple[AxisInterval, AxisInterval, AxisInterval]:
        return _domain(self)

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        bits = []
        if self.sid in _USES_A:
            bits.append(f"a={self.a}")
        if self.kmod is not None:
            bits.append(f"k={self.kmod.k}")
        return f"{self.sid.value}({', '.join(bits)})" if bits else self.sid.value


def make_system(name: str | SystemId, a: float = 1.0, k: float | None = None) -> CoordinateSystem:
    """Build a :class:`CoordinateSystem`, validating its parameters."""
    try:
        sid = SystemId(name)
    except ValueError:
        raise ConfigurationError(f"unknown coordinate system {name!r}") from None
    if sid in _USES_A and not a > 0.0:
        raise ConfigurationError(f"{sid.value} needs a focal scale a > 0, got {a!r}")
    kmod = None
    if sid in _USES_K:
        if k is None:
            raise ConfigurationError(f"{sid.value} needs an elliptic modulus k")
        from .elliptic import modulus

        kmod = modulus(float(k))
    elif k is not None:
        raise ConfigurationError(f"{sid.value} takes no elliptic modulus")
    return CoordinateSystem(sid=sid, a=float(a), kmod=kmod)


def all_system_ids() -> tuple[str, ...]:
    return tuple(s.value for s in SystemId)


def base_system_ids() -> tuple[str, ...]:
    """The eleven base charts (shifted prolate variants excluded)."""
    skip = {SystemId.PROLATE_SPHEROIDAL_II_PLUS, SystemId.PROLATE_SPHEROIDAL_II_MINUS}
    return tuple(s.value for s in SystemId if s not in skip)


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------


def _domain(system: CoordinateSystem) -> tuple[AxisInterval, AxisInterval, AxisInterval]:
    sid = system.sid
    R = AxisInterval(-_INF, _INF)
    if sid is SystemId.CARTESIAN:
        return (R, R, R)
    if sid is SystemId.CYLINDRICAL:
        return (R, AxisInterval(0.0, 2.0 * math.pi), R)
    if sid is SystemId.PARABOLIC_CYLINDRICAL:
        return (AxisInterval(0.0, _INF), R, R)
    if sid is SystemId.ELLIPTIC_CYLINDRICAL:
        return (AxisInterval(0.0, _INF), AxisInterval(-math.pi, math.pi), R)
    if sid is SystemId.SPHERICAL:
        return (AxisInterval(0.0, _INF, singular_lo=True), R, AxisInterval(0.0, 2.0 * math.pi))
    if sid in (
        SystemId.PROLATE_SPHEROIDAL,
        SystemId.PROLATE_SPHEROIDAL_II_PLUS,
        SystemId.PROLATE_SPHEROIDAL_II_MINUS,
    ):
        return (AxisInterval(0.0, _INF, singular_lo=True), R, AxisInterval(0.0, 2.0 * math.pi))
    if sid is SystemId.OBLATE_SPHEROIDAL:
        return (
            AxisInterval(0.0, 0.5 * math.pi, singular_lo=True),
            R,
            AxisInterval(0.0, 2.0 * math.pi),
        )
    if sid is SystemId.PARABOLIC:
        return (R, R, AxisInterval(0.0, 2.0 * math.pi))
    if sid is SystemId.PARABOLOIDAL:
        return (R, AxisInterval(0.0, math.pi), R)
    if sid is SystemId.ELLIPSOIDAL:
        m = system.kmod
        return (
            AxisInterval(0.0, m.K, singular_lo=True),
            AxisInterval(-m.Kprime, m.Kprime),
            AxisInterval(0.0, 4.0 * m.K),
        )
    if sid is SystemId.CONICAL:
        m = system.kmod
        return (
            AxisInterval(0.0, _INF, singular_lo=True),
            AxisInterval(-m.Kprime, m.Kprime),
            AxisInterval(0.0, 4.0 * m.K),
        )
    raise ConfigurationError(f"unhandled system {sid!r}")


def check_domain(system: CoordinateSystem, omega) -> None:
    """Raise :class:`DomainError` naming the offending axis if outside."""
    dom = _domain(system)
    for i in range(3):
        w = float(omega[i])
        if not math.isfinite(w) or not dom[i].contains(w):
            raise DomainError(
                f"{system.sid.value}: omega_{i + 1} = {w!r} outside axis interval "
                f"[{dom[i].lo}, {dom[i].hi}]",
                axis=i + 1,
            )


def sampling_box(system: CoordinateSystem) -> np.ndarray:
    """Interior sampling sub-box, shape (3, 2).

    Unbounded ends are truncated to +-SAMPLE_TRUNC and every finite end is
    pulled inward by EPS_DOM.
    """
    out = np.empty((3, 2))
    for i, ax in enumerate(_domain(system)):
        lo = -SAMPLE_TRUNC if ax.lo == -_INF else ax.lo + EPS_DOM
        hi = SAMPLE_TRUNC if ax.hi == _INF else ax.hi - EPS_DOM
        if not lo < hi:
            raise ConfigurationError(f"degenerate sampling box on axis {i + 1}")
        out[i, 0] = lo
        out[i, 1] = hi
    return out


def sample_domain(system: CoordinateSystem, seed: int, n: int) -> np.ndarray:
    """Deterministic interior samples, shape (n, 3)."""
    if n < 0:
        raise ConfigurationError(f"sample count must be >= 0, got {n}")
    box = sampling_box(system)
    rng = np.random.default_rng(seed)
    return rng.uniform(box[:, 0], box[:, 1], size=(n, 3))


# ---------------------------------------------------------------------------
# raw forward maps and Jacobians (scalar math; no domain checks here)
# ---------------------------------------------------------------------------


def _fwd_cartesian(s, w1, w2, w3):
    return (w1, w2, w3)


def _jac_cartesian(s, w1, w2, w3):
    return ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


def _fwd_cylindrical(s, w1, w2, w3):
    e = math.exp(w1)
    return (e * math.cos(w2), e * math.sin(w2), w3)


def _jac_cylindrical(s, w1, w2, w3):
    e = math.exp(w1)
    c, sn = math.cos(w2), math.sin(w2)
    return ((e * c, -e * sn, 0.0), (e * sn, e * c, 0.0), (0.0, 0.0, 1.0))


def _fwd_parabolic_cylindrical(s, w1, w2, w3):
    return (0.5 * (w1 * w1 - w2 * w2), w1 * w2, w3)


def _jac_parabolic_cylindrical(s, w1, w2, w3):
    return ((w1, -w2, 0.0), (w2, w1, 0.0), (0.0, 0.0, 1.0))


def _fwd_elliptic_cylindrical(s, w1, w2, w3):
    a = s.a
    return (a * math.cosh(w1) * math.cos(w2), a * math.sinh(w1) * math.sin(w2), w3)


def _jac_elliptic_cylindrical(s, w1, w2, w3):
    a = s.a
    ch, sh = math.cosh(w1), math.sinh(w1)
    c, sn = math.cos(w2), math.sin(w2)
    return ((a * sh * c, -a * ch * sn, 0.0), (a * ch * sn, a * sh * c, 0.0), (0.0, 0.0, 1.0))


def _fwd_spherical(s, w1, w2, w3):
    r = 1.0 / w1
    se = 1.0 / math.cosh(w2)
    return (r * se * math.cos(w3), r * se * math.sin(w3), r * math.tanh(w2))


def _jac_spherical(s, w1, w2, w3):
    r = 1.0 / w1
    r2 = r * r
    se = 1.0 / math.cosh(w2)
    th = math.tanh(w2)
    c, sn = math.cos(w3), math.sin(w3)
    return (
        (-r2 * se * c, -r * se * th * c, -r * se * sn),
        (-r2 * se * sn, -r * se * th * sn, r * se * c),
        (-r2 * th, r * se * se, 0.0),
    )


def _prolate_core(s, w1, w2, w3, shift):
    a = s.a
    cs = 1.0 / math.sinh(w1)
    ct = math.cosh(w1) * cs
    se = 1.0 / math.cosh(w2)
    th = math.tanh(w2)
    c, sn = math.cos(w3), math.sin(w3)
    return (a * cs * se * c, a * cs * se * sn, a * (ct * th + shift))


def _prolate_jac(s, w1, w2, w3):
    a = s.a
    cs = 1.0 / math.sinh(w1)
    ct = math.cosh(w1) * cs
    se = 1.0 / math.cosh(w2)
    th = math.tanh(w2)
    c, sn = math.cos(w3), math.sin(w3)
    return (
        (-a * cs * ct * se * c, -a * cs * se * th * c, -a * cs * se * sn),
        (-a * cs * ct * se * sn, -a * cs * se * th * sn, a * cs * se * c),
        (-a * cs * cs * th, a * ct * se * se, 0.0),
    )


def _fwd_prolate(s, w1, w2, w3):
    return _prolate_core(s, w1, w2, w3, 0.0)


def _fwd_prolate_plus(s, w1, w2, w3):
    return _prolate_core(s, w1, w2, w3, 1.0)


def _fwd_prolate_minus(s, w1, w2, w3):
    return _prolate_core(s, w1, w2, w3, -1.0)


def _fwd_oblate(s, w1, w2, w3):
    a = s.a
    cs = 1.0 / math.sin(w1)
    ct = math.cos(w1) * cs
    se = 1.0 / math.cosh(w2)
    th = math.tanh(w2)
    c, sn = math.cos(w3), math.sin(w3)
    return (a * cs * se * c, a * cs * se * sn, a * ct * th)


def _jac_oblate(s, w1, w2, w3):
    a = s.a
    cs = 1.0 / math.sin(w1)
    ct = math.cos(w1) * cs
    se = 1.0 / math.cosh(w2)
    th = math.tanh(w2)
    c, sn = math.cos(w3), math.sin(w3)
    return (
        (-a * cs * ct * se * c, -a * cs * se * th * c, -a * cs * se * sn),
        (-a * cs * ct * se * sn, -a * cs * se * th * sn, a * cs * se * c),
        (-a * cs * cs * th, a * ct * se * se, 0.0),
    )


def _fwd_parabolic(s, w1, w2, w3):
    e = math.exp(w1 + w2)
    return (e * math.cos(w3), e * math.sin(w3), 0.5 * (math.exp(2.0 * w1) - math.exp(2.0 * w2)))


def _jac_parabolic(s, w1, w2, w3):
    e = math.exp(w1 + w2)
    c, sn = math.cos(w3), math.sin(w3)
    return (
        (e * c, e * c, -e * sn),
        (e * sn, e * sn, e * c),
        (math.exp(2.0 * w1), -math.exp(2.0 * w2), 0.0),
    )


def _fwd_paraboloidal(s, w1, w2, w3):
    a = s.a
    return (
        2.0 * a * math.cosh(w1) * math.cos(w2) * math.sinh(w3),
        2.0 * a * math.sinh(w1) * math.sin(w2) * math.cosh(w3),
        0.5 * a * (math.cosh(2.0 * w1) + math.cos(2.0 * w2) - math.cosh(2.0 * w3)),
    )


def _jac_paraboloidal(s, w1, w2, w3):
    a = s.a
    ch1, sh1 = math.cosh(w1), math.sinh(w1)
    co2, si2 = math.cos(w2), math.sin(w2)
    ch3, sh3 = math.cosh(w3), math.sinh(w3)
    return (
        (2.0 * a * sh1 * co2 * sh3, -2.0 * a * ch1 * si2 * sh3, 2.0 * a * ch1 * co2 * ch3),
        (2.0 * a * ch1 * si2 * ch3, 2.0 * a * sh1 * co2 * ch3, 2.0 * a * sh1 * si2 * sh3),
        (a * math.sinh(2.0 * w1), -a * math.sin(2.0 * w2), -a * math.sinh(2.0 * w3)),
    )


def _fwd_ellipsoidal(s, w1, w2, w3):
    a, m = s.a, s.kmod
    s1, c1, d1 = jacobi(w1, m.k)
    s2, c2, d2 = jacobi(w2, m.kprime)
    s3, c3, d3 = jacobi(w3, m.k)
    inv = 1.0 / s1
    return (a * inv * d2 * s3, a * d1 * inv * c2 * c3, a * c1 * inv * s2 * d3)


def _jac_ellipsoidal(s, w1, w2, w3):
    a, m = s.a, s.kmod
    k2 = m.k * m.k
    kp2 = m.kprime * m.kprime
    s1, c1, d1 = jacobi(w1, m.k)
    s2, c2, d2 = jacobi(w2, m.kprime)
    s3, c3, d3 = jacobi(w3, m.k)
    inv = 1.0 / s1
    inv2 = inv * inv
    return (
        (-a * c1 * d1 * inv2 * d2 * s3, -a * inv * kp2 * s2 * c2 * s3, a * inv * d2 * c3 * d3),
        (-a * c1 * inv2 * c2 * c3, -a * d1 * inv * s2 * d2 * c3, -a * d1 * inv * c2 * s3 * d3),
        (-a * d1 * inv2 * s2 * d3, a * c1 * inv * c2 * d2 * d3, -a * c1 * inv * s2 * k2 * s3 * c3),
    )


def _fwd_conical(s, w1, w2, w3):
    m = s.kmod
    s2, c2, d2 = jacobi(w2, m.kprime)
    s3, c3, d3 = jacobi(w3, m.k)
    r = 1.0 / w1
    return (r * d2 * s3, r * c2 * c3, r * s2 * d3)


def _jac_conical(s, w1, w2, w3):
    m = s.kmod
    k2 = m.k * m.k
    kp2 = m.kprime * m.kprime
    s2, c2, d2 = jacobi(w2, m.kprime)
    s3, c3, d3 = jacobi(w3, m.k)
    r = 1.0 / w1
    r2 = r * r
    return (
        (-r2 * d2 * s3, -r * kp2 * s2 * c2 * s3, r * d2 * c3 * d3),
        (-r2 * c2 * c3, -r * s2 * d2 * c3, -r * c2 * s3 * d3),
        (-r2 * s2 * d3, r * c2 * d2 * d3, -r * s2 * k2 * s3 * c3),
    )


_FORWARD = {
    SystemId.CARTESIAN: _fwd_cartesian,
    SystemId.CYLINDRICAL: _fwd_cylindrical,
    SystemId.PARABOLIC_CYLINDRICAL: _fwd_parabolic_cylindrical,
    SystemId.ELLIPTIC_CYLINDRICAL: _fwd_elliptic_cylindrical,
    SystemId.SPHERICAL: _fwd_spherical,
    SystemId.PROLATE_SPHEROIDAL: _fwd_prolate,
    SystemId.PROLATE_SPHEROIDAL_II_PLUS: _fwd_prolate_plus,
    SystemId.PROLATE_SPHEROIDAL_II_MINUS: _fwd_prolate_minus,
    SystemId.OBLATE_SPHEROIDAL: _fwd_oblate,
    SystemId.PARABOLIC: _fwd_parabolic,
    SystemId.PARABOLOIDAL: _fwd_paraboloidal,
    SystemId.ELLIPSOIDAL: _fwd_ellipsoidal,
    SystemId.CONICAL: _fwd_conical,
}

_JACOBIAN = {
    SystemId.CARTESIAN: _jac_cartesian,
    SystemId.CYLINDRICAL: _jac_cylindrical,
    SystemId.PARABOLIC_CYLINDRICAL: _jac_parabolic_cylindrical,
    SystemId.ELLIPTIC_CYLINDRICAL: _jac_elliptic_cylindrical,
    SystemId.SPHERICAL: _jac_spherical,
    SystemId.PROLATE_SPHEROIDAL: _prolate_jac,
    SystemId.PROLATE_SPHEROIDAL_II_PLUS: _prolate_jac,
    SystemId.PROLATE_SPHEROIDAL_II_MINUS: _prolate_jac,
    SystemId.OBLATE_SPHEROIDAL: _jac_oblate,
    SystemId.PARABOLIC: _jac_parabolic,
    SystemId.PARABOLOIDAL: _jac_paraboloidal,
    SystemId.ELLIPSOIDAL: _jac_ellipsoidal,
    SystemId.CONICAL: _jac_conical,
}


def raw_forward(system: CoordinateSystem, w1: float, w2: float, w3: float):
    """Forward map as a plain tuple, without domain checks."""
    return _FORWARD[system.sid](system, w1, w2, w3)


def raw_jacobian(system: CoordinateSystem, w1: float, w2: float, w3: float):
    """Jacobian rows as nested tuples, J[a][i] = d z_a / d omega_i."""
    return _JACOBIAN[system.sid](system, w1, w2, w3)


def forward(system: CoordinateSystem, omega) -> np.ndarray:
    """Map coordinates to Cartesian space, z = z(omega).

    Raises a :class:`DomainError` naming the offending axis when omega is
    outside the admissible set.
    """
    check_domain(system, omega)
    return np.array(raw_forward(system, float(omega[0]), float(omega[1]), float(omega[2])))


#: Relative determinant guard for Jacobian degeneracy.
DET_GUARD = 1e-12


def jacobian(system: CoordinateSystem, omega) -> np.ndarray:
    """Analytic Jacobian, columns are dz/domega_i.

    Raises :class:`SingularityError` when the determinant falls below
    ``DET_GUARD`` relative to the product of column norms.
    """
    check_domain(system, omega)
    rows = raw_jacobian(system, float(omega[0]), float(omega[1]), float(omega[2]))
    J = np.array(rows)
    det = _det3(rows)
    scale = float(np.linalg.norm(J)) ** 3
    if abs(det) <= DET_GUARD * scale:
        raise SingularityError(
            f"{system.sid.value}: Jacobian determinant {det!r} below guard at omega={tuple(omega)}"
        )
    return J


def _det3(m) -> float:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def _solve3(m, r):
    """Solve the 3x3 system m @ x = r by the adjugate; tuples in, tuple out."""
    det = _det3(m)
    if det == 0.0:
        raise SingularityError("singular 3x3 system in Newton step")
    inv_det = 1.0 / det
    x0 = (
        r[0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (r[1] * m[2][2] - m[1][2] * r[2])
        + m[0][2] * (r[1] * m[2][1] - m[1][1] * r[2])
    )
    x1 = (
        m[0][0] * (r[1] * m[2][2] - m[1][2] * r[2])
        - r[0] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * r[2] - r[1] * m[2][0])
    )
    x2 = (
        m[0][0] * (m[1][1] * r[2] - r[1] * m[2][1])
        - m[0][1] * (m[1][0] * r[2] - r[1] * m[2][0])
        + r[0] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )
    return (x0 * inv_det, x1 * inv_det, x2 * inv_det)


def _clamp_box(system: CoordinateSystem, slack: float) -> tuple[tuple[float, float], ...]:
    """Newton clamp intervals: domain shrunk by EPS_DOM.

    ``slack > 0`` relaxes non-singular finite endpoints outward, which lets
    finite-difference stencils cross a periodic seam or a closed interval
    end where the map continues smoothly.
    """
    out = []
    for ax in _domain(system):
        lo, hi = ax.lo, ax.hi
        if lo != -_INF:
            if ax.singular_lo or slack == 0.0:
                lo += EPS_DOM
            else:
                lo -= slack
        if hi != _INF:
            if ax.singular_hi or slack == 0.0:
                hi -= EPS_DOM
            else:
                hi += slack
        out.append((lo, hi))
    return tuple(out)


#: Default and guaranteed Newton convergence factors (times 1 + |z|).  The
#: iteration aims for TARGET_TOL and the result is accepted when it beats
#: CONTRACT_TOL; in practice quadratic convergence lands near machine
#: precision, which downstream finite differencing relies on.
CONTRACT_TOL = 1e-11
TARGET_TOL = 1e-13
MAX_NEWTON_ITERS = 50


def invert(
    system: CoordinateSystem,
    z,
    guess,
    *,
    max_iter: int = MAX_NEWTON_ITERS,
    slack: float = 0.0,
) -> np.ndarray:
    """Invert the forward map by Newton iteration with the analytic Jacobian.

    Parameters
    ----------
    z : array_like, shape (3,)
        Cartesian target.
    guess : array_like, shape (3,)
        Starting point; clamped into the shrunk domain box.
    slack : float
        Optional outward relaxation of non-singular finite endpoints.

    Returns
    -------
    numpy.ndarray
        omega with ||forward(omega) - z|| <= CONTRACT_TOL * (1 + ||z||).

    Raises
    ------
    InversionError
        If the contract tolerance is not met within ``max_iter`` Newton
        steps; carries the last iterate and its residual.
    """
    zt = (float(z[0]), float(z[1]), float(z[2]))
    zn = math.sqrt(zt[0] ** 2 + zt[1] ** 2 + zt[2] ** 2)
    tol_target = TARGET_TOL * (1.0 + zn)
    tol_accept = CONTRACT_TOL * (1.0 + zn)
    box = _clamp_box(system, slack)
    fwd = _FORWARD[system.sid]
    jac = _JACOBIAN[system.sid]

    def clamp(w):
        return tuple(min(max(w[i], box[i][0]), box[i][1]) for i in range(3))

    w = clamp((float(guess[0]), float(guess[1]), float(guess[2])))
    f = fwd(system, *w)
    r = math.sqrt((f[0] - zt[0]) ** 2 + (f[1] - zt[1]) ** 2 + (f[2] - zt[2]) ** 2)
    for _ in range(max_iter):
        if r <= tol_target:
            break
        try:
            step = _solve3(jac(system, *w), (f[0] - zt[0], f[1] - zt[1], f[2] - zt[2]))
        except SingularityError as exc:
            raise InversionError(
                f"{system.sid.value}: singular Jacobian during inversion at omega={w}",
                last_omega=np.array(w),
                residual=r,
            ) from exc
        # Cap the raw step to tame wild early iterates, then backtrack if
        # the residual refuses to drop.
        mag = max(abs(step[0]), abs(step[1]), abs(step[2]))
        s = 1.0 if mag <= 1.0 else 1.0 / mag
        improved = False
        for _bt in range(12):
            w_new = clamp((w[0] - s * step[0], w[1] - s * step[1], w[2] - s * step[2]))
            f_new = fwd(system, *w_new)
            r_new = math.sqrt(
                (f_new[0] - zt[0]) ** 2 + (f_new[1] - zt[1]) ** 2 + (f_new[2] - zt[2]) ** 2
            )
            if r_new < r or r_new <= tol_target:
                improved = True
                break
            s *= 0.5
        if not improved:
            break
        w, f, r = w_new, f_new, r_new
    if r <= tol_accept:
        # One full polishing step: quadratic convergence turns a landing
        # just under the target into an essentially machine-precision one,
        # which keeps Newton noise out of downstream difference stencils.
        if r > 0.0:
            try:
                step = _solve3(jac(system, *w), (f[0] - zt[0], f[1] - zt[1], f[2] - zt[2]))
                w_new = clamp((w[0] - step[0], w[1] - step[1], w[2] - step[2]))
                f_new = fwd(system, *w_new)
                r_new = math.sqrt(
                    (f_new[0] - zt[0]) ** 2 + (f_new[1] - zt[1]) ** 2 + (f_new[2] - zt[2]) ** 2
                )
                if r_new < r:
                    w = w_new
            except SingularityError:
                pass
        return np.array(w)
    raise InversionError(
        f"{system.sid.value}: Newton inversion stalled with residual {r:.3e} "
        f"(needed {tol_accept:.3e})",
        last_omega=np.array(w),
        residual=r,
    )
