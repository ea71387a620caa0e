"""
Sizing the ramp for a whole operating range
===========================================

A regulated converter holds its output fixed while the source voltage
moves, so the duty ratio sweeps a range.  The ramp must be sized for the
worst duty in that range, and the boundary's zero crossing tells where
the converter is stable with no ramp at all.
"""

from pathlib import Path

import numpy as np

from cotstab import BuckParams, Scheme, build_model
from cotstab.bifurcation import (
    family_point,
    pdb_boundary_exact,
    pdb_onset_duty,
    range_max_pdb_ramp,
)
from cotstab.sampled import consistent_vc, poles
from cotstab import RampSpec
from cotstab.tables import Table, write_table

p = BuckParams(R=0.5, L=2e-6, C=2e-5, Rc=0.02, vs=5.0)
d = 1.2e-6   # on-time is fixed by the controller
vo = 2.0     # regulated output

# the duty indexes the family: lower duty means higher source voltage
# and a longer period
table = Table(["duty", "ramp_vps"], metadata={"vo_volts": vo,
                                              "d_seconds": d})
for D in np.linspace(0.2, 0.999, 81):
    pD, TD = family_point(p, d, vo, float(D))
    mD = build_model(pD, Scheme.V_COTC)
    table.add(float(D), pdb_boundary_exact(mD, pD.vs, d, TD))
out = Path(__file__).parent / "pdb_vs_duty.csv"
write_table(table, path=str(out))
print(f"boundary curve written to {out.name}")

# worst case over the range: the required slope grows monotonically
# toward full duty here, so the edge dominates
d_at, worst = range_max_pdb_ramp(p, Scheme.V_COTC, d, vo, 0.2, 1.0)
print(f"worst duty in [0.2, 1]: D = {d_at:.4f}, "
      f"required slope {worst:.1f} V/s")

# below the onset duty no ramp is needed at all
d_star = pdb_onset_duty(p, Scheme.V_COTC, 0.0, d, vo)
print(f"no-ramp boundary crossing at D* = {d_star:.5f}")

# at the crossing the map is exactly marginal: poles {0, -1}
p_star, t_star = family_point(p, d, vo, d_star)
m_star = build_model(p_star, Scheme.V_COTC)
ramp = RampSpec(ma=0.0, d=d)
vc = consistent_vc(m_star, ramp, t_star, p_star.vs)
lam = sorted(poles(m_star, ramp, np.array([p_star.vs, vc]), t_star),
             key=abs)
print(f"marginal point: T = {t_star * 1e6:.4f} us, vs = {p_star.vs:.4f} V, "
      f"poles {lam[0]:+.2e} and {lam[1]:+.9f}")
