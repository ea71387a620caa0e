"""
Slow poles and the falling-ramp tangency
========================================

Current feedback turns the converter into a near-integrator: one cycle-map
pole sits just inside +1 and the transient is orders of magnitude slower
than the switching rate.  A falling external ramp pushes that pole the
other way, and at a steep enough negative slope the switching curve
becomes tangent to the ramp: a saddle-node, with one pole crossing +1.
"""

from pathlib import Path

import numpy as np

from cotstab import BuckParams, RampSpec, Scheme, build_model
from cotstab.bifurcation import (
    ct_pole_formula,
    equivalent_ct_pole,
    snb_boundary_approx,
    snb_boundary_exact,
)
from cotstab.sampled import consistent_vc, poles
from cotstab.tables import Table, write_table

# a 12 V-class point-of-load buck with sensed inductor current
p = BuckParams(R=10.0, L=3.1e-6, C=3e-4, Rc=4.5e-3, Ri=0.15, vs=13.2)
d, T = 0.26e-6, 1.04e-6
m = build_model(p, Scheme.C_COTC)


def at_slope(ma):
    ramp = RampSpec(ma=ma, d=d)
    vc = consistent_vc(m, ramp, T, p.vs)
    return ramp, np.array([p.vs, vc])


ramp0, u0 = at_slope(0.0)
lam = np.sort(poles(m, ramp0, u0, T))
print(f"poles at ma=0: {lam[0]:+.2e} and {lam[1]:+.8f}")

# the slow pole expressed as a continuous-time rate, two conventions and
# one closed form
print(f"  (1 - pole)/T: {equivalent_ct_pole(lam[1], T, 'linear'):.2f} 1/s")
print(f"  -ln(pole)/T:  {equivalent_ct_pole(lam[1], T, 'log'):.2f} 1/s")
print(f"  closed form (Eq51): "
      f"{ct_pole_formula(p, Scheme.C_COTC, d, T, 'Eq51'):.2f} 1/s")

# the tangency threshold: exact, and the closed form used for design
snb = snb_boundary_exact(m, p.vs, d, T)
eq56 = snb_boundary_approx(m, p, d, T, "Eq56")
print(f"\nsaddle-node threshold: exact {snb:.1f} V/s, "
      f"closed form {eq56:.1f} V/s")

# past the threshold one pole has left through +1
rampt, ut = at_slope(-100000.0)
lam_t = np.sort(poles(m, rampt, ut, T))
print(f"poles at ma=-100000: {lam_t[0]:+.5f} and {lam_t[1]:+.6f} "
      "(outside the circle)")

# threshold against duty, exact next to the closed form
table = Table(["duty", "snb_exact_vps", "snb_closed_vps"])
for D in np.linspace(0.1, 0.6, 51):
    dD = float(D) * T
    table.add(float(D), snb_boundary_exact(m, p.vs, dD, T),
              snb_boundary_approx(m, p, dD, T, "Eq56"))
out = Path(__file__).parent / "snb_vs_duty.csv"
write_table(table, path=str(out))
print(f"threshold curve written to {out.name}")
