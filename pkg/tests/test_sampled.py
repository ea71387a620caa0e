"""Sampled-data layer: periodic orbit, consistency, linearized cycle map."""

import numpy as np
import pytest

from cotstab import (DegenerateSwitchingError, DomainError, Scheme,
                     audio_susceptibility, control_to_output, expm,
                     expm_integral, linearize, orbit_sample, period_residual,
                     poles, solve_period, steady_state_at)
from helpers import FAST, FAST_D, FAST_T, operating, random_operating

def test_orbit_is_a_fixed_point_of_the_cycle_map():
    rng = np.random.default_rng(7101)
    # push the start state through both stages by hand: it must come back
    for _ in range(10):
        _, _, d, T, m, _, u, ss = random_operating(rng)
        xd = expm(m.A1, d) @ ss.x0_0 + expm_integral(m.A1, m.B1 @ u, d)
        xT = expm(m.A2, T - d) @ xd + expm_integral(m.A2, m.B2 @ u, T - d)
        scale = np.linalg.norm(ss.x0_0) + 1.0
        assert np.linalg.norm(xT - ss.x0_0) <= 1e-9 * scale
        assert np.allclose(xd, ss.x0_d, rtol=1e-9, atol=1e-12 * scale)


def test_velocity_is_off_stage_rate_at_cycle_start():
    rng = np.random.default_rng(7102)
    _, _, _, _, m, _, u, ss = random_operating(rng)
    assert np.allclose(ss.xdot0_minus, m.A2 @ ss.x0_0 + m.B2 @ u, rtol=1e-12)


def test_steady_state_rejects_bad_on_time():
    m, _, u, _ = operating(FAST, Scheme.V_COTC,
                           FAST_D, FAST_T, 0.0)
    with pytest.raises(DomainError):
        steady_state_at(m, 0.0, FAST_T, u)
    with pytest.raises(DomainError):
        steady_state_at(m, FAST_T, FAST_T, u)


def test_consistent_vc_zeroes_the_switching_residual():
    rng = np.random.default_rng(7103)
    for _ in range(10):
        ma = float(rng.uniform(0.0, 5e4))
        _, _, _, T, m, ramp, u, ss = random_operating(rng, ma=ma)
        # y at the boundary must meet the ramp
        assert ss.y_end == pytest.approx(ma * T, abs=1e-9 * (1.0 + ma * T))
        assert period_residual(m, ramp, u, T) == pytest.approx(
            0.0, abs=1e-9 * (1.0 + ma * T))


def test_solve_period_recovers_the_design_period():
    rng = np.random.default_rng(7104)
    _, _, _, T, m, ramp, u, _ = random_operating(rng, ma=2e4)
    found = solve_period(m, ramp, u, 0.55 * T, 1.9 * T)
    assert len(found) == 1
    t_root, ss_root = found[0]
    assert t_root == pytest.approx(T, rel=1e-9)
    assert ss_root.y_end == pytest.approx(ramp.ma * t_root, rel=1e-9)


def test_orbit_sample_continuity_and_endpoints():
    rng = np.random.default_rng(7105)
    _, _, d, T, m, _, _, ss = random_operating(rng)
    x0, _ = orbit_sample(m, ss, 0.0)
    xT, yT = orbit_sample(m, ss, T)
    scale = np.linalg.norm(ss.x0_0) + 1.0
    assert np.allclose(x0, ss.x0_0, rtol=1e-12)
    assert np.linalg.norm(xT - ss.x0_0) <= 1e-9 * scale
    assert yT == pytest.approx(ss.y_end, abs=1e-9 * (1.0 + abs(ss.y_end)))
    xd, _ = orbit_sample(m, ss, d)
    assert np.allclose(xd, ss.x0_d, rtol=1e-9, atol=1e-12 * scale)
    with pytest.raises(DomainError):
        orbit_sample(m, ss, -1e-9)


def test_no_ramp_map_is_singular():
    rng = np.random.default_rng(7106)
    # switching feedback removes one direction: a pole sits at the origin
    for _ in range(20):
        _, _, _, _, m, _, u, ss = random_operating(rng, ma=0.0)
        lin = linearize(m, ss, 0.0)
        eigs = np.abs(np.linalg.eigvals(lin.Phi))
        assert eigs.min() <= 1e-9 * max(1.0, eigs.max())


def test_linearize_denominator_is_slope_margin():
    rng = np.random.default_rng(7107)
    _, _, _, _, m, _, u, ss = random_operating(rng, ma=0.0)
    ydot = float(m.Cvec @ ss.xdot0_minus)
    lin = linearize(m, ss, 0.0)
    assert lin.denom == pytest.approx(ydot, rel=1e-12)
    with pytest.raises(DegenerateSwitchingError):
        linearize(m, ss, ydot)  # ramp slope equal to feedback slope


def test_poles_helper_matches_linearize():
    m, ramp, u, ss = operating(FAST, Scheme.V_COTC,
                               FAST_D, FAST_T, 0.0)
    got = poles(m, ramp, u, FAST_T)
    lin = linearize(m, ss, 0.0)
    assert np.allclose(np.sort_complex(got), np.sort_complex(lin.poles()))


def test_reference_poles_without_ramp():
    # high-ripple buck: one pole at the origin, one past -1 (unstable)
    m, ramp, u, _ = operating(FAST, Scheme.V_COTC,
                              FAST_D, FAST_T, 0.0)
    got = np.sort(poles(m, ramp, u, FAST_T).real)
    assert got[0] == pytest.approx(-1.0512484, abs=1e-6)
    assert got[1] == pytest.approx(0.0, abs=1e-12)


def test_transfer_functions_are_finite_off_poles():
    rng = np.random.default_rng(7108)
    _, _, _, T, m, _, u, ss = random_operating(rng, ma=3e4)
    lin = linearize(m, ss, 3e4)
    z = np.exp(1j * 0.3 * np.pi)
    for fn in (control_to_output, audio_susceptibility):
        val = fn(lin, z)
        assert np.isfinite(val.real) and np.isfinite(val.imag)
    # dc gain of the reference channel is real
    dc = control_to_output(lin, 1.0 + 0.0j)
    assert abs(dc.imag) <= 1e-9 * (1.0 + abs(dc.real))


def test_forward_and_reversed_products_share_spectrum():
    rng = np.random.default_rng(7109)
    # the two stage-product orderings are similar matrices
    _, _, _, _, m, _, _, ss = random_operating(rng)
    lin = linearize(m, ss, 0.0)
    a = np.sort_complex(np.linalg.eigvals(lin.W))
    b = np.sort_complex(np.linalg.eigvals(lin.Wr))
    assert np.allclose(a, b, rtol=1e-9, atol=1e-12)
