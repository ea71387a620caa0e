"""Exact periodic steady state and small-signal analysis of the cycle map.

The converter alternates between an on stage of fixed length ``d`` and an
off stage that ends when the feedback signal meets the compensating ramp.
Cycle-to-cycle, the state obeys an exact map built from matrix
exponentials; a periodic orbit is a fixed point of that map.  This module
computes the orbit, the Jacobian of the map around it (whose eigenvalues
are the sampled-data poles), and the discrete-time transfer functions from
the two inputs (source voltage, control reference) to the output voltage.
No averaging is involved anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSwitchingError,
    DomainError,
    PoleEvaluationError,
    SingularMatrixError,
)
from .linalg import eigenvalues, expm, expm_integral, solve_linear
from .models import ConverterModel, RampSpec

__all__ = [
    "SteadyState",
    "LinearizedMap",
    "steady_state_at",
    "consistent_vc",
    "period_residual",
    "solve_period",
    "linearize",
    "poles",
    "control_to_output",
    "audio_susceptibility",
    "orbit_sample",
]


@dataclass(frozen=True)
class SteadyState:
    """Periodic orbit of the cycle map, sampled at the stage boundaries.

    ``x0_0`` is the state at the cycle start, ``x0_d`` the state at the end
    of the on stage, ``xdot0_minus`` the state velocity just before the
    cycle boundary (off-stage dynamics evaluated at the fixed point).
    ``y_end`` is the feedback signal at the cycle boundary; at a consistent
    operating point it equals the ramp amplitude ``ma * T``.
    """

    x0_0: np.ndarray
    x0_d: np.ndarray
    xdot0_minus: np.ndarray
    T: float
    d: float
    u: np.ndarray
    y_end: float

    @property
    def D(self):
        return self.d / self.T


def _stage_pieces(m: ConverterModel, d: float, T: float):
    """Stage transition matrices and driven integrals for one cycle."""
    p1 = expm(m.A1, d)
    p2 = expm(m.A2, T - d)
    j1b1 = expm_integral(m.A1, m.B1, d)
    j2b2 = expm_integral(m.A2, m.B2, T - d)
    return p1, p2, j1b1, j2b2


def steady_state_at(m: ConverterModel, d: float, T: float, u) -> SteadyState:
    """Exact fixed point of the cycle map for a cycle (d, T).

    Solves the two-point periodicity condition for the state at the cycle
    start.  The on-time and the period are both prescribed here; whether
    the pair is consistent with a given ramp is a separate question
    (see :func:`solve_period` and :func:`consistent_vc`).
    """
    if not 0.0 < d < T:
        raise DomainError(f"need 0 < d < T, got d={d!r}, T={T!r}")
    u = np.asarray(u, dtype=float)
    p1, p2, j1b1, j2b2 = _stage_pieces(m, d, T)
    lhs = np.eye(m.n) - p2 @ p1
    rhs = p2 @ (j1b1 @ u) + j2b2 @ u
    try:
        x0 = solve_linear(lhs, rhs)
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            "periodicity matrix I - exp(A2 (T-d)) exp(A1 d) is singular; "
            "for models with an integrator state, build the analysis from "
            "ConverterModel.regularized() to shift the zero pole. "
            + str(exc),
            condition=exc.condition,
        ) from exc
    xd = p1 @ x0 + j1b1 @ u
    v = m.A2 @ x0 + m.B2 @ u
    y_end = float(m.Cvec @ x0 + m.Dvec @ u)
    return SteadyState(x0_0=x0, x0_d=xd, xdot0_minus=v, T=float(T),
                       d=float(d), u=u, y_end=y_end)


def consistent_vc(m: ConverterModel, ramp: RampSpec, T: float, vs: float) -> float:
    """Control reference that makes (d, T) a steady cycle under the ramp.

    At a consistent operating point the feedback signal meets the ramp at
    the cycle boundary.  The residual is affine in ``vc``, so two
    evaluations pin it exactly.
    """
    r0 = steady_state_at(m, ramp.d, T, (vs, 0.0)).y_end - ramp.ma * T
    r1 = steady_state_at(m, ramp.d, T, (vs, 1.0)).y_end - ramp.ma * T
    slope = r1 - r0
    if abs(slope) < 1e-14 * (abs(r0) + abs(r1) + 1e-300):
        raise DegenerateSwitchingError(
            "switching residual does not depend on the control reference")
    return -r0 / slope


def period_residual(m: ConverterModel, ramp: RampSpec, u, T: float) -> float:
    """Feedback-minus-ramp mismatch at the cycle boundary for period T."""
    ss = steady_state_at(m, ramp.d, T, u)
    return ss.y_end - ramp.ma * T


def solve_period(m: ConverterModel, ramp: RampSpec, u, T_lo: float,
                 T_hi: float, grid: int = 2000):
    """All periods in [T_lo, T_hi] whose steady cycle meets the ramp.

    Scans the boundary residual on a uniform grid and polishes each sign
    change with the bracketing root finder.  Near-tangent double roots are
    also reported when the residual dips to zero without changing sign.
    Multiple roots indicate proximity to a saddle-node point.  Returns a
    list of (T, SteadyState) pairs in ascending T; empty when no cycle
    closes in the bracket.
    """
    from .linalg import find_root

    if not ramp.d < T_lo < T_hi:
        raise DomainError(
            f"bracket must satisfy d < T_lo < T_hi, got d={ramp.d!r}, "
            f"T_lo={T_lo!r}, T_hi={T_hi!r}")
    ts = np.linspace(T_lo, T_hi, int(grid))
    res = np.array([period_residual(m, ramp, u, t) for t in ts])
    scale = float(np.max(np.abs(res))) or 1.0
    roots = []
    for i in range(len(ts) - 1):
        a, b = res[i], res[i + 1]
        if a == 0.0:
            roots.append(ts[i])
        elif a * b < 0.0:
            roots.append(find_root(
                lambda t: period_residual(m, ramp, u, t), ts[i], ts[i + 1]))
    if res[-1] == 0.0:
        roots.append(ts[-1])
    # tangency catch: an interior |residual| minimum that touches zero at
    # grid resolution counts as an even-multiplicity root
    for i in range(1, len(ts) - 1):
        if (abs(res[i]) <= 1e-7 * scale and res[i] != 0.0
                and abs(res[i - 1]) >= abs(res[i]) <= abs(res[i + 1])
                and res[i - 1] * res[i] > 0.0 and res[i] * res[i + 1] > 0.0):
            roots.append(ts[i])
    roots.sort()
    out = []
    min_sep = 1e-9 * (T_hi - T_lo)
    for r in roots:
        if out and abs(r - out[-1][0]) <= min_sep:
            continue
        out.append((float(r), steady_state_at(m, ramp.d, r, u)))
    return out


@dataclass(frozen=True)
class LinearizedMap:
    """Small-signal cycle-to-cycle dynamics around a periodic orbit.

    ``Phi`` maps a state perturbation across one cycle; ``Gamma`` maps the
    held input perturbation (columns: source, control reference).  ``W`` is
    the open-loop stage product in forward order, ``Wr`` the same two
    factors in reversed order (its resolvent appears in the pole placement
    function).  ``denom`` is the switching transversality factor: the slope
    margin between feedback and ramp at the crossing.
    """

    Phi: np.ndarray
    Gamma: np.ndarray
    Evec: np.ndarray
    T: float
    W: np.ndarray
    Wr: np.ndarray
    denom: float

    @property
    def Gamma1(self):
        return self.Gamma[:, 0]

    @property
    def Gamma2(self):
        return self.Gamma[:, 1]

    def poles(self):
        """Eigenvalues of Phi, sorted by real part then imaginary part."""
        eigs = eigenvalues(self.Phi)
        order = np.lexsort((eigs.imag, eigs.real))
        return eigs[order]


def linearize(m: ConverterModel, ss: SteadyState, ma: float) -> LinearizedMap:
    """Jacobian and input sensitivities of the cycle map at the orbit.

    Differentiates the constrained map (state propagation plus the
    ramp-crossing condition that sets each period) at the fixed point.
    Requires the crossing to be transversal: the feedback slope at the
    cycle boundary must differ from the ramp slope.
    """
    p1, p2, j1b1, j2b2 = _stage_pieces(m, ss.d, ss.T)
    v = ss.xdot0_minus
    cv = float(m.Cvec @ v)
    denom = cv - ma
    if abs(denom) <= 1e-12 * (abs(cv) + abs(ma) + 1e-300):
        raise DegenerateSwitchingError(
            "ramp slope equals the feedback slope at the switching instant; "
            "the switching instant is not locally well defined")
    w = p2 @ p1
    proj = np.eye(m.n) - np.outer(v, m.Cvec) / denom
    phi = proj @ w
    gamma_u = p2 @ j1b1 + j2b2
    gamma = proj @ gamma_u - np.outer(v, m.Dvec) / denom
    return LinearizedMap(Phi=phi, Gamma=gamma, Evec=m.E, T=ss.T,
                         W=w, Wr=p1 @ p2, denom=denom)


def poles(m: ConverterModel, ramp: RampSpec, u, T: float):
    """Sampled-data poles at the operating point (ramp.d, T)."""
    ss = steady_state_at(m, ramp.d, T, u)
    return linearize(m, ss, ramp.ma).poles()


def _resolvent_apply(lin: LinearizedMap, z: complex, vec) -> complex:
    eigs = eigenvalues(lin.Phi)
    if np.min(np.abs(eigs - z)) <= 1e-12 * max(1.0, abs(z)):
        raise PoleEvaluationError(
            f"z = {z!r} coincides with a pole of the linearized map")
    n = lin.Phi.shape[0]
    sol = solve_linear(z * np.eye(n) - lin.Phi.astype(complex), vec)
    return complex(lin.Evec @ sol)


def control_to_output(lin: LinearizedMap, z) -> complex:
    """Reference-to-output transfer function of the sampled dynamics at z.

    Evaluated through a linear solve of the resolvent; z may be any complex
    number off the pole set.  The effective frequency response uses
    z = exp(j w T) and is meaningful up to half the switching frequency.
    """
    return _resolvent_apply(lin, complex(z), lin.Gamma2.astype(complex))


def audio_susceptibility(lin: LinearizedMap, z) -> complex:
    """Source-to-output transfer function of the sampled dynamics at z."""
    return _resolvent_apply(lin, complex(z), lin.Gamma1.astype(complex))


def orbit_sample(m: ConverterModel, ss: SteadyState, t: float):
    """State and feedback signal on the periodic orbit at time t in [0, T].

    Propagates from the nearest stage boundary with exact exponentials.
    Intended for trajectory inspection and cross-checks, one instant per
    call.
    """
    if not 0.0 <= t <= ss.T:
        raise DomainError(f"t must lie in [0, T], got {t!r}")
    if t <= ss.d:
        x = expm(m.A1, t) @ ss.x0_0 + expm_integral(m.A1, m.B1 @ ss.u, t)
    else:
        tau = t - ss.d
        x = expm(m.A2, tau) @ ss.x0_d + expm_integral(m.A2, m.B2 @ ss.u, tau)
    y = float(m.Cvec @ x + m.Dvec @ ss.u)
    return x, y
