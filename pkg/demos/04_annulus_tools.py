"""The exterior-domain toolkit at desk scale.

A right inverse of the divergence on the annulus D_R = {R < |x| < R+1}
with exact support containment, and the cut-off-plus-correction extension
turning a field solenoidal outside a ball into a globally solenoidal one
that agrees with the input far out.
"""

import numpy as np

from stokeslab import AnnulusSpec, Field, Grid, bogovskii_apply, divergence_defect, solenoidal_extension

R = 2.0
grid = Grid(3, 96, 8.0)
spec = AnnulusSpec(R)

# divergence data: a dipole-type derivative of a radial bump, mean-zero
r = np.sqrt(grid.radius_sq())
t = (r - (R + 0.5)) / 0.35
ds = np.where(np.abs(t) < 1, -8 * t * (1 - t * t) ** 3 / 0.35, 0.0)
f = Field(grid, ds * grid.coords()[0] / np.maximum(r, 1e-300))

B = bogovskii_apply(f, spec)
outside = (r <= R) | (r >= R + 1.0)
print(f"div B = f relative error: {divergence_defect(B, f, spec):.4f}")
print(f"samples outside closure(D_R) identically zero: "
      f"{bool(np.all(B.data[:, outside] == 0.0))}")

# solenoidal extension of a curl field living outside |x| = 1
R = 1.0
X, Y, _ = grid.coords()
t = (r - (R + 2.0)) / 1.0
prof = np.where(np.abs(t) < 1, (1 - t * t) ** 3, 0.0)
A = np.stack([-Y * prof, X * prof, np.zeros(grid.shape)])
k = grid.wavenumbers()
Ah = [np.fft.fftn(A[j]) for j in range(3)]
u0 = Field(grid, np.stack([
    np.fft.ifftn(1j * (k[1] * Ah[2] - k[2] * Ah[1])).real,
    np.fft.ifftn(1j * (k[2] * Ah[0] - k[0] * Ah[2])).real,
    np.fft.ifftn(1j * (k[0] * Ah[1] - k[1] * Ah[0])).real,
]))
v0, info = solenoidal_extension(u0, AnnulusSpec(R), report=True)
far = r >= R + 3.0
print(f"\nextension: global divergence defect {info['div_v0_rel']:.4f}")
print(f"v0 == u0 beyond |x| = R+3: {bool(np.array_equal(v0.data[:, far], u0.data[:, far]))}")
