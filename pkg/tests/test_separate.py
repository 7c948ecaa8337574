"""Tests for the reduced ODEs, factor integration, and reassembly."""

import io
import math

import numpy as np
import pytest

from schrodsep.coords import make_system
from schrodsep.errors import (
    ConfigurationError,
    DomainError,
    IntegrationError,
    OutOfRangeError,
    TurningPointError,
)
from schrodsep.frame import TimeProfile, identity_frame, make_frame
from schrodsep.potential import coulomb_spec, electrostatic_spec, magnetic_spec
from schrodsep.separate import (
    AxisInterpolant,
    QKind,
    SeparationConstants,
    evaluate_action,
    evaluate_psi,
    hj_solve,
    lambda_jacobian,
    ode_coefficient,
    separate,
    solve_phi0,
    solve_phi_a,
    write_interpolant_csv,
)

from test_stackel import build, wiggly_frame


def free_particle():
    return magnetic_spec(make_system("cartesian"), identity_frame("complete"))


def exp_profile(rate):
    return TimeProfile(
        lambda t: (
            math.exp(rate * t),
            rate * math.exp(rate * t),
            rate * rate * math.exp(rate * t),
        )
    )


# ---------------------------------------------------------------------------
# Separation constants


def test_constants_coerced_to_float():
    lam = SeparationConstants(1, 2, 3)
    assert lam.as_tuple() == (1.0, 2.0, 3.0)


def test_constants_reject_complex():
    with pytest.raises(ConfigurationError):
        SeparationConstants(1.0, 2.0 + 1.0j, 3.0)


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), -float("inf")])
def test_constants_reject_nonfinite(bad):
    with pytest.raises(ConfigurationError):
        SeparationConstants(bad, 0.0, 0.0)


# ---------------------------------------------------------------------------
# ODE coefficients


def test_coefficient_cartesian_identity_row():
    assert ode_coefficient(free_particle(), 1, 0.3, SeparationConstants(-1, 0, 0)) == -1.0


def test_coefficient_coulomb_spherical():
    spec = coulomb_spec("spherical", q=5.0)
    got = ode_coefficient(spec, 1, 1.0, SeparationConstants(2.0, 3.0, 7.0))
    assert got == pytest.approx(4.0)


def test_coefficient_coulomb_parabolic():
    spec = coulomb_spec("parabolic", q=0.0)
    got = ode_coefficient(spec, 1, 0.0, SeparationConstants(1.0, 1.0, 1.0))
    assert got == pytest.approx(-1.0)


def test_coefficient_bad_axis():
    with pytest.raises(ConfigurationError):
        ode_coefficient(free_particle(), 0, 0.0, SeparationConstants(0, 0, 0))


def test_coefficient_outside_domain():
    spec = coulomb_spec("spherical", q=1.0)
    with pytest.raises(DomainError) as info:
        ode_coefficient(spec, 1, -0.5, SeparationConstants(0, 0, 0))
    assert info.value.axis == 1


# ---------------------------------------------------------------------------
# Temporal factor


def test_phi0_static_is_plain_phase():
    lam = SeparationConstants(0.8, 0.0, 0.0)
    phi0 = solve_phi0(free_particle(), lam, (-2.0, 2.0), 0.0)
    for t in (-1.7, -0.2, 0.9, 1.3):
        want = complex(math.cos(0.8 * t), math.sin(0.8 * t))
        assert phi0(t) == pytest.approx(want, abs=1e-12)


def test_phi0_anchor_normalization():
    phi0 = solve_phi0(free_particle(), SeparationConstants(2.0, -1.0, 0.5), (-2.0, 2.0), 0.3)
    assert phi0(0.3) == 1.0 + 0.0j


def test_phi0_envelope_for_expanding_frame():
    rate = 0.4
    frame = make_frame("nonsplit", h1=exp_profile(rate))
    spec = magnetic_spec(make_system("spherical"), frame)
    phi0 = solve_phi0(spec, SeparationConstants(0, 0, 0), (-2.0, 2.0), 0.0)
    for t in (-1.0, 0.5, 1.5):
        assert abs(phi0(t)) == pytest.approx(math.exp(-1.5 * rate * t), rel=1e-10)


def test_phi0_anchor_outside_range_rejected():
    with pytest.raises(ConfigurationError):
        solve_phi0(free_particle(), SeparationConstants(0, 0, 0), (-1.0, 1.0), 2.0)


def test_phi0_evaluation_outside_range_rejected():
    phi0 = solve_phi0(free_particle(), SeparationConstants(0, 0, 0), (-1.0, 1.0), 0.0)
    with pytest.raises(OutOfRangeError):
        phi0(1.5)


# ---------------------------------------------------------------------------
# Spatial factors


def test_phi_a_harmonic_matches_cosine():
    k = 2.0
    phi = solve_phi_a(free_particle(), 1, SeparationConstants(-k * k, 0, 0), (-1.0, 1.0))
    grid = np.linspace(-1.0, 1.0, 601)
    worst = max(abs(phi(w) - math.cos(k * (w + 1.0))) for w in grid)
    assert worst <= 1e-9
    worst_d = max(
        abs(phi.evaluate(w)[1] + k * math.sin(k * (w + 1.0))) for w in grid
    )
    assert worst_d <= 1e-8


def test_phi_a_hyperbolic_matches_cosh():
    k = 2.0
    phi = solve_phi_a(free_particle(), 2, SeparationConstants(0, k * k, 0), (0.0, 1.5))
    grid = np.linspace(0.0, 1.5, 400)
    worst = max(abs(phi(w) - math.cosh(k * w)) / math.cosh(k * w) for w in grid)
    assert worst <= 1e-9


def test_phi_a_complex_initial_data():
    k = 1.3
    phi = solve_phi_a(
        free_particle(), 3, SeparationConstants(0, 0, -k * k), (0.0, 2.0), (1.0, 1j * k)
    )
    for w in (0.4, 1.1, 1.9):
        assert phi(w) == pytest.approx(np.exp(1j * k * w), abs=1e-9)


def test_phi_a_taylor_series_oracle():
    # Around omega0 = 1/2 the coefficient -2/w^2 + 1/w^3 is analytic, so the
    # solution has a power series whose recurrence is an independent route.
    spec = coulomb_spec("spherical", q=1.0)
    lam = SeparationConstants(0.0, 2.0, 0.3)
    w0 = 0.5
    phi = solve_phi_a(spec, 1, lam, (w0, 1.5))
    n_terms = 70
    c = np.array(
        [
            (-1.0) ** m
            * (-2.0 * (m + 1) * w0 ** (-2 - m) + 0.5 * (m + 2) * (m + 1) * w0 ** (-3 - m))
            for m in range(n_terms)
        ]
    )
    coef = np.zeros(n_terms + 2)
    coef[0] = 1.0
    for n in range(n_terms):
        coef[n + 2] = sum(c[m] * coef[n - m] for m in range(n + 1)) / ((n + 2) * (n + 1))
    for s in (0.02, 0.04, 0.06, 0.08, 0.10):
        series = sum(coef[n] * s**n for n in range(n_terms + 2))
        assert abs(phi(w0 + s) - series) <= 1e-8


def test_phi_a_rejects_range_outside_domain():
    spec = coulomb_spec("spherical", q=1.0)
    with pytest.raises(DomainError):
        solve_phi_a(spec, 1, SeparationConstants(0, 0, 0), (-1.0, 1.0))


def test_phi_a_rejects_empty_range():
    with pytest.raises(ConfigurationError):
        solve_phi_a(free_particle(), 1, SeparationConstants(0, 0, 0), (1.0, 1.0))


def test_phi_a_overflow_reports_location():
    spec = magnetic_spec(
        make_system("cartesian"), identity_frame("complete"), f10=lambda w: 1e8
    )
    with pytest.raises(IntegrationError) as info:
        solve_phi_a(spec, 1, SeparationConstants(0, 0, 0), (0.0, 2.0))
    assert info.value.location is not None
    assert 0.0 <= info.value.location <= 2.0


def test_interpolant_range_enforced():
    phi = solve_phi_a(free_particle(), 1, SeparationConstants(-1, 0, 0), (0.0, 1.0))
    with pytest.raises(OutOfRangeError):
        phi(1.2)


# ---------------------------------------------------------------------------
# Reassembled wavefunction


def test_plane_wave_reconstruction():
    k = np.array([0.9, -1.2, 0.5])
    spec = free_particle()
    lam = SeparationConstants(*(-k * k))
    initial = tuple(
        (np.exp(1j * kk * -1.5), 1j * kk * np.exp(1j * kk * -1.5)) for kk in k
    )
    sol = separate(spec, lam, omega_ranges=((-1.5, 1.5),) * 3, initial_data=initial)
    rng = np.random.default_rng(0)
    for _ in range(30):
        t = rng.uniform(-1.5, 1.5)
        x = rng.uniform(-1.4, 1.4, 3)
        want = np.exp(1j * (k @ x - k @ k * t))
        assert abs(evaluate_psi(sol, t, x, x) - want) <= 1e-8


def test_trivial_solution_is_unity():
    sol = separate(free_particle(), SeparationConstants(0, 0, 0), omega_ranges=((-1, 1),) * 3)
    for t, x in ((0.0, (0.1, 0.2, 0.3)), (0.8, (-0.5, 0.9, 0.0))):
        assert evaluate_psi(sol, t, x, x) == 1.0 + 0.0j


def test_envelope_survives_reassembly():
    rate = 0.3
    ex = exp_profile(rate)
    frame = make_frame("complete", h1=ex, h2=ex, h3=ex)
    spec = electrostatic_spec(make_system("cartesian"), frame)
    sol = separate(spec, SeparationConstants(0, 0, 0), omega_ranges=((-1, 1),) * 3)
    omega = np.array([0.4, -0.2, 0.7])
    t = 1.2
    x_t = omega * math.exp(rate * t)
    x_0 = omega
    ratio = abs(evaluate_psi(sol, t, x_t, omega)) / abs(evaluate_psi(sol, 0.0, x_0, omega))
    assert ratio == pytest.approx(math.exp(-1.5 * rate * t), rel=1e-9)


def test_q_kind_tracks_potential_family():
    sol_m = separate(free_particle(), SeparationConstants(0, 0, 0), omega_ranges=((-1, 1),) * 3)
    assert sol_m.q_kind is QKind.UNIT
    frame = make_frame("complete", h1=exp_profile(0.2))
    spec_e = electrostatic_spec(make_system("cartesian"), frame)
    sol_e = separate(spec_e, SeparationConstants(0, 0, 0), omega_ranges=((-1, 1),) * 3)
    assert sol_e.q_kind is QKind.PHASE
    spec_c = coulomb_spec("spherical", q=1.0)
    sol_c = separate(
        spec_c, SeparationConstants(0, 0, 0), omega_ranges=((0.5, 1.5), (0.3, 1.2), (0.3, 1.2))
    )
    assert sol_c.q_kind is QKind.UNIT


def test_superposition_in_initial_data():
    spec = free_particle()
    lam = SeparationConstants(-1.2, 0, 0)
    span = ((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))
    a, b = 0.7 - 0.2j, 1.1 + 0.4j
    sol_u = separate(spec, lam, omega_ranges=span, initial_data=((1, 0), (1, 0), (1, 0)))
    sol_v = separate(spec, lam, omega_ranges=span, initial_data=((0, 1), (1, 0), (1, 0)))
    sol_w = separate(spec, lam, omega_ranges=span, initial_data=((a, b), (1, 0), (1, 0)))
    rng = np.random.default_rng(3)
    for _ in range(10):
        t = rng.uniform(-1, 1)
        x = rng.uniform(-0.9, 0.9, 3)
        combined = a * evaluate_psi(sol_u, t, x, x) + b * evaluate_psi(sol_v, t, x, x)
        assert abs(evaluate_psi(sol_w, t, x, x) - combined) <= 1e-10


def test_lambda_jacobian_full_rank():
    for name in ("cartesian", "cylindrical", "spherical", "ellipsoidal"):
        system = build(name)
        frame = wiggly_frame(system.split_class.value)
        spec = magnetic_spec(system, frame)
        from schrodsep.coords import sample_domain

        for omega in sample_domain(system, seed=7, n=10):
            J = lambda_jacobian(spec, 0.4, omega)
            sigma = np.linalg.svd(J, compute_uv=False)
            assert sigma[-1] >= 1e-10


# ---------------------------------------------------------------------------
# Hamilton-Jacobi branch


def test_hj_cartesian_linear_action():
    hj = hj_solve(free_particle(), SeparationConstants(1, 1, 1), ((0, 2),) * 3)
    x = np.array([0.5, 1.0, 1.5])
    got = evaluate_action(hj, 0.7, x, x)
    assert got == pytest.approx(-3 * 0.7 + x.sum(), abs=1e-12)


def test_hj_sign_flip_negates_one_axis():
    lam = SeparationConstants(1, 1, 1)
    base = hj_solve(free_particle(), lam, ((0, 2),) * 3, (1, 1, 1))
    flip = hj_solve(free_particle(), lam, ((0, 2),) * 3, (-1, 1, 1))
    x = np.array([0.5, 1.0, 1.5])
    assert evaluate_action(flip, 0.7, x, x) == pytest.approx(
        evaluate_action(base, 0.7, x, x) - 2 * x[0], abs=1e-12
    )


def test_hj_turning_point_detected():
    with pytest.raises(TurningPointError) as info:
        hj_solve(free_particle(), SeparationConstants(-1, 1, 1), ((0, 2),) * 3)
    assert info.value.axis == 1


def test_hj_invalid_signs_rejected():
    with pytest.raises(ConfigurationError):
        hj_solve(free_particle(), SeparationConstants(1, 1, 1), ((0, 2),) * 3, (2, 1, 1))


def test_hj_additive_gauge_shift():
    hj = hj_solve(free_particle(), SeparationConstants(1, 1, 1), ((0, 2),) * 3)
    shift = 0.37
    shifted_term = AxisInterpolant(
        axis=1,
        nodes=hj.terms[0].nodes,
        values=hj.terms[0].values + shift,
        slopes=hj.terms[0].slopes,
    )
    import dataclasses

    shifted = dataclasses.replace(hj, terms=(shifted_term, hj.terms[1], hj.terms[2]))
    x = np.array([0.5, 1.0, 1.5])
    assert evaluate_action(shifted, 0.7, x, x) == pytest.approx(
        evaluate_action(hj, 0.7, x, x) + shift, abs=1e-12
    )


def test_hj_nontrivial_radicand():
    # Axis 1 of the spherical chart: radicand lam1/w^4 - lam2/w^2 stays
    # positive on (0.5, 1.2) for lam = (2, 1, 0), and the term's slope must
    # match the square root pointwise.
    spec = magnetic_spec(make_system("spherical"), identity_frame("nonsplit"))
    lam = SeparationConstants(2.0, 1.0, 0.0)
    hj = hj_solve(spec, lam, ((0.5, 1.2), (0.3, 1.0), (0.3, 1.0)))
    for w in (0.55, 0.8, 1.15):
        expect = math.sqrt(2.0 / w**4 - 1.0 / w**2)
        assert hj.terms[0].evaluate(w)[1] == pytest.approx(expect, rel=1e-12)


# ---------------------------------------------------------------------------
# Export


def test_interpolant_csv_round_trip():
    phi = solve_phi_a(free_particle(), 1, SeparationConstants(-4.0, 0, 0), (0.0, 0.5))
    buf = io.StringIO()
    write_interpolant_csv(phi, buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "omega,re_phi,im_phi,re_dphi,im_dphi"
    assert len(lines) == len(phi.nodes) + 1
    first = [float(tok) for tok in lines[1].split(",")]
    assert first == [0.0, 1.0, 0.0, 0.0, 0.0]
    mid = [float(tok) for tok in lines[len(lines) // 2].split(",")]
    w = mid[0]
    assert mid[1] == pytest.approx(math.cos(2.0 * w), abs=1e-9)
