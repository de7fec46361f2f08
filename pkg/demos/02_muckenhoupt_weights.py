"""Muckenhoupt diagnostics for the radial weight family <x>^a.

For q = 2 and n = 3 the class boundary sits at a = -3 and a = 3: inside
the open interval the cube products settle to a finite sup, at and beyond
the boundary they keep growing (or stop converging under quadrature
refinement, which is how the checker catches |x|^(-3) on shrinking cubes).
"""

import numpy as np

from stokeslab import RadialWeight, admissible_range, aq_check, feasibility, feasibility_scan

for alpha in (-3.0, -2.0, 0.0, 2.0):
    rep = aq_check(RadialWeight(alpha), q=2.0)
    print(f"<x>^{alpha:+.0f}: verdict {rep.verdict:12s} sup ~ {rep.sup_estimate:.3f}")

rep = aq_check(
    RadialWeight(-3.0, "homogeneous"), q=2.0,
    cube_sides=[10.0**e for e in np.linspace(-3, 0.2, 12)], centers=[0.0],
)
print(f"|x|^-3 on cubes shrinking to 0: verdict {rep.verdict}")

lo, hi = admissible_range(q=3.0, n=3)
print(f"\n<x>^(sq) in the A_q class for q=3, n=3 iff s in ({lo}, {hi})")

window = feasibility(n=5, q1=4.0, q2=3.0)
print(f"small-data hypothesis window at (n, q1, q2) = (5, 4, 3): "
      f"({window.lo:.4f}, {window.hi:.4f})")

total, nonempty, widest = feasibility_scan(3, step=0.01)
print(f"n = 3 sweep at step 0.01: {nonempty} of {total} grid points admit a "
      f"window (widest margin {widest:.3f}) -- the window closes at n = 3")
