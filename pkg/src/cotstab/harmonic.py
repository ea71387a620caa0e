"""Frequency-domain route to the same boundaries: harmonic balance.

Instead of stage-transition matrices, the converter is treated as a linear
filter driven by the square-wave diode voltage, and a bifurcation is a
balance condition on a harmonic series.  Period doubling inserts a
half-frequency perturbation and balances it against the ramp; the
saddle-node condition differentiates the steady series with respect to the
period.  The series converge slowly (terms fall off like 1/n), so partial
sums are averaged over their final stretch before use.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import DomainError, InfiniteLoopGainError, UsageError
from .models import BuckParams, Scheme

__all__ = [
    "square_wave_coeff",
    "period2_coeff",
    "gv",
    "gi",
    "scheme_gain",
    "scheme_gain_derivative",
    "loop_gain",
    "y0_series",
    "hb_pdb_splot",
    "hb_pdb_first_harmonic",
    "loop_gain_pdb",
    "l1_plot",
    "l2_plot",
    "h_plot",
    "hb_snb_condition",
    "series_identities_check",
    "convergence_points",
]

TAIL_FRACTION = 0.1  # partial sums averaged over this final fraction


def _tail_average(terms: np.ndarray):
    """Average of the trailing partial sums; tames oscillatory tails."""
    partials = np.cumsum(terms)
    k = max(1, int(round(len(partials) * TAIL_FRACTION)))
    return np.mean(partials[-k:])


def convergence_points(nh: int) -> list[int]:
    """Truncation depths reported alongside a series result."""
    pts = sorted({max(1, nh // 4), max(1, nh // 2), nh})
    return pts


def square_wave_coeff(n: int, vs: float, d: float, T: float) -> complex:
    """Fourier coefficient of the diode voltage over one cycle.

    The waveform is vs during the on-time and 0 after it; coefficient n
    is taken against exp(-j n ws t) with ws = 2 pi / T.  The n = 0 limit
    is the average vs d / T.
    """
    if n == 0:
        return complex(vs * d / T)
    return vs / (2j * math.pi * n) * (1.0 - cmath.exp(-2j * math.pi * n * d / T))


def period2_coeff(n: int, vs: float, d: float, T: float,
                  delta: float = 0.0) -> complex:
    """Fourier coefficient of the diode voltage over two cycles.

    Describes a subharmonic orbit: two on-pulses of the same width, the
    second displaced by ``delta`` from its nominal position one cycle
    later.  The base period is 2 T, so even coefficients at delta = 0
    reduce to the one-cycle coefficients and odd ones vanish.
    """
    if n == 0:
        return complex(vs * d / T)
    ws = 2.0 * math.pi / T
    pulse = vs / (2j * math.pi * n) * (1.0 - cmath.exp(-1j * n * ws * d / 2.0))
    comb = 1.0 + (-1) ** n * cmath.exp(1j * n * ws * delta / 2.0)
    return pulse * comb


def _filter_polys(p: BuckParams):
    """Shared denominator and the two numerators of the power-stage filter."""
    den = (p.L * p.C * (1.0 + p.Rc / p.R),
           p.L / p.R + p.Rc * p.C,
           1.0)
    num_v = (p.Rc * p.C, 1.0)
    num_i = ((1.0 + p.Rc / p.R) * p.C, 1.0 / p.R)
    return den, num_v, num_i


def gv(s: complex, p: BuckParams) -> complex:
    """Diode voltage to output voltage transfer function."""
    den, num_v, _ = _filter_polys(p)
    return complex(np.polyval(num_v, s) / np.polyval(den, s))


def gi(s: complex, p: BuckParams) -> complex:
    """Diode voltage to inductor current transfer function."""
    den, _, num_i = _filter_polys(p)
    return complex(np.polyval(num_i, s) / np.polyval(den, s))


def _scheme_weights(scheme: Scheme, p: BuckParams):
    """Weights (voltage path, scaled current path) of the feedback signal."""
    if scheme is Scheme.V_COTC:
        return 1.0, 0.0
    if scheme is Scheme.C_COTC:
        return 0.0, p.Ri
    if scheme is Scheme.V_COTC_CURRENT_RAMP:
        return 1.0, p.Ri
    raise UsageError(f"unknown scheme {scheme!r}")


def scheme_gain(s: complex, p: BuckParams, scheme: Scheme) -> complex:
    """Loop transfer numerator: minus the diode-to-feedback path.

    The feedback comparator closes with negative sign, so the gain that
    enters every balance condition is the negative of the physical path
    (output voltage, sense-scaled inductor current, or their sum).
    """
    wv, wi = _scheme_weights(scheme, p)
    out = 0.0 + 0.0j
    if wv:
        out += wv * gv(s, p)
    if wi:
        out += wi * gi(s, p)
    return -out


def scheme_gain_derivative(s: complex, p: BuckParams, scheme: Scheme) -> complex:
    """d/ds of :func:`scheme_gain`, by exact rational differentiation."""
    den, num_v, num_i = _filter_polys(p)
    wv, wi = _scheme_weights(scheme, p)
    dden = np.polyder(np.array(den))
    dval = np.polyval(den, s)
    ddval = np.polyval(dden, s)
    out = 0.0 + 0.0j
    for w, num in ((wv, num_v), (wi, num_i)):
        if not w:
            continue
        nval = np.polyval(num, s)
        dnval = np.polyval(np.polyder(np.array(num)), s)
        out += w * (dnval * dval - nval * ddval) / (dval * dval)
    return -complex(out)


def loop_gain(s: complex, p: BuckParams, scheme: Scheme, ma: float,
              T: float) -> complex:
    """Sampled-loop transfer function scaled by source and ramp height."""
    if ma == 0.0:
        raise InfiniteLoopGainError(
            "loop gain is unbounded without a ramp; use the unscaled "
            "series forms instead")
    return scheme_gain(s, p, scheme) * p.vs / (ma * T)


def y0_series(t, p: BuckParams, scheme: Scheme, vc: float, d: float,
              T: float, nh: int = 2000):
    """Steady feedback signal reconstructed from its harmonic series.

    Sums the filtered square-wave harmonics and subtracts the reference.
    Accepts a scalar or an array of times; returns real values (the
    conjugate-pair sum is taken explicitly).
    """
    ws = 2.0 * math.pi / T
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    base = float(square_wave_coeff(0, p.vs, d, T).real
                 * (-scheme_gain(0.0, p, scheme)).real) - vc
    ns = np.arange(1, nh + 1)
    coeffs = np.array([square_wave_coeff(int(n), p.vs, d, T) for n in ns])
    gains = np.array([-scheme_gain(1j * n * ws, p, scheme) for n in ns])
    phases = np.exp(1j * np.outer(tt, ns) * ws)
    vals = base + 2.0 * np.real(phases @ (coeffs * gains))
    return vals[0] if np.isscalar(t) or np.ndim(t) == 0 else vals


def _pdb_terms(p: BuckParams, scheme: Scheme, d: float, T: float,
               nh: int) -> np.ndarray:
    """One-sided half-harmonic terms of the period-doubling balance."""
    ws = 2.0 * math.pi / T
    ns = np.arange(1, nh + 1)
    terms = np.empty(nh, dtype=complex)
    for i, n in enumerate(ns):
        s = 0.5j * n * ws
        terms[i] = ((cmath.exp(-0.5j * n * ws * d) - 1.0) * (-1.0) ** n
                    * scheme_gain(s, p, scheme))
    return terms


def h_plot(omega_s: float, p: BuckParams, scheme: Scheme, d: float,
           nh: int = 2000) -> complex:
    """One-sided subharmonic balance sum H at a switching frequency.

    The period-doubling boundary in this form reads Re H = T ma / vs.
    """
    if omega_s <= 0.0:
        raise DomainError(f"switching frequency must be positive, got {omega_s!r}")
    T = 2.0 * math.pi / omega_s
    return complex(_tail_average(_pdb_terms(p, scheme, d, T, nh)))


def l2_plot(omega_s: float, p: BuckParams, scheme: Scheme, d: float,
            nh: int = 2000) -> complex:
    """Two-sided subharmonic balance sum; boundary at 2 T ma / vs.

    Summed by explicit conjugate pairs in ascending harmonic order, so its
    agreement with twice the real part of :func:`h_plot` is a genuine
    cross-check rather than an algebraic identity of the code.
    """
    if omega_s <= 0.0:
        raise DomainError(f"switching frequency must be positive, got {omega_s!r}")
    T = 2.0 * math.pi / omega_s
    ws = omega_s
    terms = np.empty(nh, dtype=complex)
    for i, n in enumerate(range(1, nh + 1)):
        up = ((cmath.exp(-0.5j * n * ws * d) - 1.0) * (-1.0) ** n
              * scheme_gain(0.5j * n * ws, p, scheme))
        dn = ((cmath.exp(0.5j * n * ws * d) - 1.0) * (-1.0) ** n
              * scheme_gain(-0.5j * n * ws, p, scheme))
        terms[i] = up + dn
    return complex(_tail_average(terms))


def l1_plot(omega_s: float, p: BuckParams, scheme: Scheme, ma: float,
            d: float, nh: int = 2000) -> complex:
    """Two-sided balance sum normalized by the loop scale; boundary at 2."""
    if ma == 0.0:
        raise InfiniteLoopGainError("the normalized form needs a nonzero ramp")
    T = 2.0 * math.pi / omega_s
    return l2_plot(omega_s, p, scheme, d, nh) * p.vs / (ma * T)


def loop_gain_pdb(p: BuckParams, scheme: Scheme, ma: float, d: float,
                  T: float, nh: int = 2000, form: str = "two_sided") -> complex:
    """Period-doubling balance in loop-gain form.

    ``two_sided`` sums both harmonic signs (boundary value 2);
    ``one_sided`` keeps positive harmonics (boundary: real part 1);
    ``first_harmonic`` truncates the one-sided form at the half-switching
    frequency, the classical slope-compensation estimate.
    """
    omega_s = 2.0 * math.pi / T
    if form == "two_sided":
        return l1_plot(omega_s, p, scheme, ma, d, nh)
    if form == "one_sided":
        if ma == 0.0:
            raise InfiniteLoopGainError("the normalized form needs a nonzero ramp")
        return h_plot(omega_s, p, scheme, d, nh) * p.vs / (ma * T)
    if form == "first_harmonic":
        if ma == 0.0:
            raise InfiniteLoopGainError("the normalized form needs a nonzero ramp")
        D = d / T
        term = (1.0 - cmath.exp(-1j * math.pi * D)) * scheme_gain(
            0.5j * omega_s, p, scheme)
        return term * p.vs / (ma * T)
    raise UsageError(
        f"form must be two_sided, one_sided or first_harmonic, got {form!r}")


def hb_pdb_splot(p: BuckParams, scheme: Scheme, d: float, T: float,
                 nh: int = 2000) -> float:
    """Critical ramp slope at period doubling, from the harmonic series.

    Independent of the stage-transition route; the two are compared
    point by point in the regression suite.
    """
    omega_s = 2.0 * math.pi / T
    return float(h_plot(omega_s, p, scheme, d, nh).real * p.vs / T)


def hb_pdb_first_harmonic(p: BuckParams, scheme: Scheme, d: float,
                          T: float) -> float:
    """First-harmonic estimate of the critical ramp slope."""
    omega_s = 2.0 * math.pi / T
    D = d / T
    term = (1.0 - cmath.exp(-1j * math.pi * D)) * scheme_gain(
        0.5j * omega_s, p, scheme)
    return float(term.real * p.vs / T)


def hb_snb_condition(p: BuckParams, scheme: Scheme, d: float, T: float,
                     nh: int = 2000) -> float:
    """Critical ramp slope at the saddle-node boundary, series route.

    Differentiates the steady balance with respect to the period; each
    harmonic contributes a filtered term plus a frequency-sensitivity term
    through the exact derivative of the path gain.
    """
    ws = 2.0 * math.pi / T
    terms = np.empty(nh + 1, dtype=complex)
    terms[0] = d / T ** 2 * scheme_gain(0.0, p, scheme)
    for i, n in enumerate(range(1, nh + 1)):
        val = 0.0 + 0.0j
        for sign in (1.0, -1.0):
            s = 1j * sign * n * ws
            e = cmath.exp(-1j * sign * n * ws * d)
            val += (d / T ** 2 * e * scheme_gain(s, p, scheme)
                    + (1.0 - e) / T ** 2 * scheme_gain_derivative(s, p, scheme))
        terms[i + 1] = val
    return float(_tail_average(terms).real * p.vs)


def series_identities_check(D: float, nterms: int = 2000) -> dict[str, tuple[float, float]]:
    """Closed-form values of the two slowly converging support series.

    Returns computed-versus-exact pairs for the alternating cosine series
    (limit -pi^2 D^2 / 4) and the alternating sine series (limit -pi D / 2).
    """
    if not 0.0 <= D <= 1.0:
        raise DomainError(f"duty must lie in [0, 1], got {D!r}")
    ks = np.arange(1, nterms + 1, dtype=float)
    alt = (-1.0) ** ks
    cos_terms = (1.0 - np.cos(math.pi * ks * D)) * alt / ks ** 2
    sin_terms = np.sin(math.pi * ks * D) * alt / ks
    cos_val = float(_tail_average(cos_terms).real)
    sin_val = float(_tail_average(sin_terms).real)
    return {
        "alternating_cosine": (cos_val, -math.pi ** 2 * D ** 2 / 4.0),
        "alternating_sine": (sin_val, -math.pi * D / 2.0),
    }
