"""Cut-off functions, the annulus divergence solver, and solenoidal extension.

The divergence solver realizes a right inverse of div on mean-zero data
over the annulus D_R = {R < |x| < R+1}: radial transport moves each ray's
mass across the shell, and a Poisson solve on the unit sphere (spherical
harmonics) redistributes the per-ray masses tangentially.  The output is
supported exactly in the closed annulus and the construction is second
order accurate in the grid spacing.  Everything here is n = 3 only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from .grid import Field, Grid

__all__ = [
    "AnnulusSpec",
    "RadialCutoff",
    "CutoffPair",
    "build_cutoffs",
    "bogovskii_apply",
    "solenoidal_extension",
    "divergence_defect",
]


@dataclass(frozen=True)
class AnnulusSpec:
    """Annulus D_R = {x : R < |x| < R + 1}."""

    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"annulus inner radius must be positive, got {self.R}")

    def validate_for(self, grid: Grid) -> None:
        if grid.n != 3:
            raise ValueError("annulus tools are implemented for n = 3 only")
        if not self.R + 2.0 <= grid.L:
            raise ValueError(
                f"annulus D_{self.R} needs margin >= 1 inside the cube: "
                f"R + 2 = {self.R + 2} exceeds L = {grid.L}"
            )


def _smoothstep7(t):
    """C^3 smoothstep: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    return t**4 * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t**3)


def _smoothstep7_d(t):
    tc = np.clip(t, 0.0, 1.0)
    return np.where(
        (t > 0.0) & (t < 1.0),
        tc**3 * (140.0 - 420.0 * tc + 420.0 * tc * tc - 140.0 * tc**3),
        0.0,
    )


class RadialCutoff:
    """Radial profile equal to 1 for |x| <= r_on, 0 for |x| >= r_off."""

    def __init__(self, r_on: float, r_off: float):
        if not r_off > r_on:
            raise ValueError("cutoff needs r_off > r_on")
        self.r_on = float(r_on)
        self.r_off = float(r_off)

    def profile(self, r):
        return 1.0 - _smoothstep7((r - self.r_on) / (self.r_off - self.r_on))

    def profile_d(self, r):
        return -_smoothstep7_d((r - self.r_on) / (self.r_off - self.r_on)) / (
            self.r_off - self.r_on
        )

    def field(self, grid: Grid) -> Field:
        return Field(grid, self.profile(np.sqrt(grid.radius_sq())))

    def gradient_field(self, grid: Grid) -> Field:
        """Analytic gradient, profile'(r) x/|x|."""
        r = np.sqrt(grid.radius_sq())
        rs = np.where(r > 0, r, 1.0)
        dp = self.profile_d(r) / rs
        return Field(grid, np.stack([dp * xi for xi in grid.coords()]))


@dataclass(frozen=True)
class CutoffPair:
    """The two shell cut-offs used by the extension: phi (radii R+2 / R+3)
    and psi (radii R+1 / R+2)."""

    phi: RadialCutoff
    psi: RadialCutoff


def build_cutoffs(R: float) -> CutoffPair:
    return CutoffPair(phi=RadialCutoff(R + 2.0, R + 3.0), psi=RadialCutoff(R + 1.0, R + 2.0))


# ---------------------------------------------------------------------------
# spherical harmonic helper (fully normalized, Condon-Shortley)
# ---------------------------------------------------------------------------


class _SphereSolver:
    """Poisson solve on the unit sphere via Gauss-Legendre x uniform grid."""

    def __init__(self, n_theta=64, n_phi=128, lmax=40):
        self.n_theta, self.n_phi, self.lmax = n_theta, n_phi, lmax
        mu, wgl = np.polynomial.legendre.leggauss(n_theta)
        self.mu = mu
        self.wgl = wgl
        self.sin_t = np.sqrt(1.0 - mu**2)
        self.theta = np.arccos(mu)
        self.phi = 2.0 * np.pi * np.arange(n_phi) / n_phi

    def _legendre_block(self, m, mu, sin_t, deriv=False):
        """Normalized P_l^m(mu) for l = m..lmax at the given points.

        Returns (P, dPdtheta) with dPdtheta only when deriv is True.
        """
        lmax = self.lmax
        out = np.zeros((lmax + 1,) + mu.shape)
        pmm = np.full(mu.shape, np.sqrt(1.0 / (4.0 * np.pi)))
        for k in range(1, m + 1):
            pmm = -np.sqrt((2.0 * k + 1.0) / (2.0 * k)) * sin_t * pmm
        out[m] = pmm
        if m + 1 <= lmax:
            out[m + 1] = np.sqrt(2.0 * m + 3.0) * mu * pmm
        for l in range(m + 2, lmax + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            out[l] = a * (mu * out[l - 1] - b * out[l - 2])
        if not deriv:
            return out, None
        dout = np.zeros_like(out)
        st = np.where(sin_t > 0, sin_t, 1.0)
        for l in range(m, lmax + 1):
            if l == 0:
                continue
            e = np.sqrt((l * l - m * m) * (2.0 * l + 1.0) / (2.0 * l - 1.0))
            prev = out[l - 1] if l - 1 >= m else 0.0
            # from (1-mu^2) dP_l^m/dmu = (l+m) P_{l-1}^m - l mu P_l^m
            dout[l] = (l * mu * out[l] - e * prev) / st
        return out, dout

    def analyze(self, values):
        """Harmonic coefficients of values sampled on the (theta, phi) grid."""
        fk = np.fft.fft(values, axis=1) * (2.0 * np.pi / self.n_phi)
        coef = {}
        for m in range(0, self.lmax + 1):
            P, _ = self._legendre_block(m, self.mu, self.sin_t)
            wP = P * self.wgl  # (lmax+1, n_theta)
            colp = fk[:, m] if m < self.n_phi else 0.0
            coef[m] = wP @ colp
            if m > 0:
                coln = fk[:, self.n_phi - m]
                coef[-m] = wP @ coln
        return coef

    def inv_laplacian(self, coef):
        out = {}
        for m, c in coef.items():
            ll = np.arange(self.lmax + 1, dtype=float)
            denom = -ll * (ll + 1.0)
            denom[0] = 1.0
            cc = c / denom
            cc[0] = 0.0
            if abs(m) > 0:
                cc[: abs(m)] = 0.0
            out[m] = cc
        return out

    def synth_at(self, coef, theta, phi, deriv=False):
        """Evaluate sum_lm coef Y_lm at scattered points.

        Returns (value, d/dtheta, (1/sin)d/dphi); derivative slots are None
        unless deriv is True.
        """
        mu = np.cos(theta)
        sin_t = np.sin(theta)
        st = np.where(sin_t > 0, sin_t, 1.0)
        val = np.zeros(theta.shape, dtype=complex)
        dth = np.zeros(theta.shape, dtype=complex) if deriv else None
        dph = np.zeros(theta.shape, dtype=complex) if deriv else None
        for m in range(0, self.lmax + 1):
            if m not in coef and -m not in coef:
                continue
            P, dP = self._legendre_block(m, mu, sin_t, deriv=deriv)
            em = np.exp(1j * m * phi)
            for mm, phase in ((m, em), (-m, np.conj(em))) if m > 0 else ((0, em),):
                if mm not in coef:
                    continue
                c = coef[mm]
                ww = np.tensordot(c, P, axes=(0, 0))
                val += ww * phase
                if deriv:
                    dth += np.tensordot(c, dP, axes=(0, 0)) * phase
                    dph += ww * (1j * mm) * phase / st
        if deriv:
            return val.real, dth.real, dph.real
        return val.real, None, None


# ---------------------------------------------------------------------------
# the annulus divergence solver
# ---------------------------------------------------------------------------

# transition window of the radial mass-transport profile, inside (0, 1)
_TRANSPORT_LO = 0.15
_TRANSPORT_HI = 0.85


class _FieldSampler:
    """Point evaluation of a periodic grid field.

    The samples are first upsampled 2x by trigonometric interpolation (the
    fields are band-limited), then read off with a cubic spline; the spline
    coefficients are prepared once.
    """

    def __init__(self, data, grid: Grid):
        from scipy.ndimage import spline_filter
        from scipy.signal import resample

        fine = data
        for ax in range(3):
            fine = resample(fine, 2 * grid.N, axis=ax)
        self.coeffs = spline_filter(fine, order=3, mode="grid-wrap")
        self.L = grid.L
        self.h = grid.h / 2.0

    def __call__(self, points):
        idx = (points + self.L) / self.h
        return map_coordinates(
            self.coeffs,
            [idx[..., 0], idx[..., 1], idx[..., 2]],
            order=3,
            mode="grid-wrap",
            prefilter=False,
        )


def bogovskii_apply(
    f: Field,
    spec: AnnulusSpec,
    mean_rtol: float = 1e-10,
    n_theta: int = 64,
    n_phi: int = 128,
    lmax: int = 40,
    n_rad: int = 24,
) -> Field:
    """Solve div B = f on D_R with supp B inside closure(D_R), B = 0 elsewhere.

    f must be a scalar field supported in the annulus with grid mean at most
    mean_rtol times its L^1 norm (the mean-zero class); otherwise rejected.
    """
    grid = f.grid
    spec.validate_for(grid)
    if f.is_vector:
        raise ValueError("divergence data must be a scalar field")
    R = spec.R
    r = np.sqrt(grid.radius_sq())
    inside = (r > R) & (r < R + 1.0)
    outside_closed = (r <= R) | (r >= R + 1.0)
    if np.any(f.data[outside_closed] != 0.0):
        raise ValueError("f must vanish identically outside the open annulus")

    vol = grid.cell_volume
    total = float(np.sum(f.data) * vol)
    l1 = float(np.sum(np.abs(f.data)) * vol)
    if l1 == 0.0:
        return Field(grid, np.zeros((3,) + grid.shape))
    if abs(total) > mean_rtol * l1:
        raise ValueError(
            f"annulus data is not mean-zero: grid mean {total:.3e} exceeds "
            f"{mean_rtol:.1e} * ||f||_L1 = {mean_rtol * l1:.3e}"
        )

    sph = _SphereSolver(n_theta=n_theta, n_phi=n_phi, lmax=lmax)
    sample_f = _FieldSampler(f.data, grid)

    # per-ray masses m(omega) = int_R^{R+1} f(rho omega) rho^2 drho on the sphere grid
    tg, vg = np.polynomial.legendre.leggauss(n_rad)
    rho = R + 0.5 * (tg + 1.0)          # nodes on [R, R+1]
    wrho = 0.5 * vg
    st = sph.sin_t[:, None]
    dirs = np.stack(
        [
            st * np.cos(sph.phi)[None, :],
            st * np.sin(sph.phi)[None, :],
            np.broadcast_to(sph.mu[:, None], (sph.n_theta, sph.n_phi)),
        ],
        axis=-1,
    )  # (n_theta, n_phi, 3)
    pts = rho[:, None, None, None] * dirs[None]
    fvals = sample_f(pts)
    m_grid = np.tensordot(wrho * rho**2, fvals, axes=(0, 0))

    # correct the (tiny) residual mean so the l=0 mode is exactly absent
    coef = sph.analyze(m_grid)
    coef[0][0] = 0.0
    phi_coef = sph.inv_laplacian(coef)

    # annulus target points
    sel = np.nonzero(inside)
    X, Y, Z = grid.coords()
    px, py, pz = X[sel], Y[sel], Z[sel]
    pr = r[sel]
    theta_p = np.arccos(np.clip(pz / pr, -1.0, 1.0))
    phi_p = np.mod(np.arctan2(py, px), 2.0 * np.pi)

    # tangential part: (M'(r)/r) grad_S Phi
    _, dth, dph = sph.synth_at(phi_coef, theta_p, phi_p, deriv=True)
    m_p, _, _ = sph.synth_at(coef, theta_p, phi_p)

    width = _TRANSPORT_HI - _TRANSPORT_LO
    tt = (pr - (R + _TRANSPORT_LO)) / width
    M = _smoothstep7(tt)
    Md = _smoothstep7_d(tt) / width

    # radial part: (int_R^r f rho^2 - M(r) m(omega)) / r^2 along each ray
    half = 0.5 * (pr - R)
    rho_p = R + half[None, :] * (tg[:, None] + 1.0)      # (n_rad, Np)
    ray_pts = rho_p[..., None] * np.stack(
        [px / pr, py / pr, pz / pr], axis=-1
    )[None]
    fray = sample_f(ray_pts)
    F_p = np.sum((vg[:, None] * rho_p**2) * fray, axis=0) * half

    v_r = (F_p - M * m_p) / pr**2

    sin_tp = np.sin(theta_p)
    cos_tp = np.cos(theta_p)
    cph, sph_ = np.cos(phi_p), np.sin(phi_p)
    that = np.stack([cos_tp * cph, cos_tp * sph_, -sin_tp])
    phat = np.stack([-sph_, cph, np.zeros_like(cph)])
    rhat = np.stack([px, py, pz]) / pr

    tang = (Md / pr) * (dth * that + dph * phat)
    Bsel = v_r * rhat + tang

    out = np.zeros((3,) + grid.shape)
    for j in range(3):
        comp = np.zeros(grid.shape)
        comp[sel] = Bsel[j]
        out[j] = comp
    return Field(grid, out)


def divergence_defect(B: Field, f: Field, spec: AnnulusSpec, margin: float = 0.0):
    """Relative L^2 error of the spectral divergence of B against f.

    Measured over interior annulus points at distance > margin from the
    annulus boundary (margin 0 measures over the whole grid).
    """
    from .grid import divergence, l2_norm

    div = divergence(B)
    g = B.grid
    if margin > 0.0:
        r = np.sqrt(g.radius_sq())
        region = (r > spec.R + margin) & (r < spec.R + 1.0 - margin)
    else:
        region = np.ones(g.shape, dtype=bool)
    err = np.sqrt(np.sum((div.data - f.data)[region] ** 2) * g.cell_volume)
    return err / l2_norm(f)


def solenoidal_extension(
    u0: Field,
    spec: AnnulusSpec,
    div_rtol: float = 1e-8,
    report: bool = False,
):
    """Extend a field solenoidal outside B_R to a solenoidal field everywhere.

    Computes (1 - phi) u0 + B[(grad phi) . u0] with phi the cut-off equal to
    1 inside |x| <= R+2 and 0 outside |x| >= R+3; the divergence correction
    lives on the annulus D_{R+2}.  Requires R + 4 <= L.
    """
    from .grid import divergence, l2_norm

    grid = u0.grid
    if not u0.is_vector:
        raise ValueError("solenoidal_extension expects a vector field")
    R = spec.R
    inner = AnnulusSpec(R + 2.0)
    inner.validate_for(grid)

    r = np.sqrt(grid.radius_sq())
    div_u0 = divergence(u0)
    ext = r > R
    defect = np.sqrt(np.sum(div_u0.data[ext] ** 2) * grid.cell_volume)
    scale = l2_norm(u0) * np.sqrt(grid.min_wavenumber_sq())
    if defect > div_rtol * max(scale, 1e-300):
        raise ValueError(
            f"u0 is not solenoidal on the exterior region: relative divergence "
            f"{defect / max(scale, 1e-300):.3e} exceeds {div_rtol:.1e}"
        )

    cut = build_cutoffs(R).phi
    phi = cut.field(grid).data
    gphi = cut.gradient_field(grid).data
    fb_data = np.sum(gphi * u0.data, axis=0)
    fb = Field(grid, fb_data)

    # mean-zero holds analytically; on the grid only to quadrature accuracy
    B = bogovskii_apply(fb, inner, mean_rtol=max(1e-10, 0.5 * grid.h))
    v0 = Field(grid, (1.0 - phi) * u0.data + B.data)
    if report:
        info = {
            "bog_defect": divergence_defect(B, fb, inner),
            "div_v0_rel": float(
                np.sqrt(np.sum(divergence(v0).data ** 2) * grid.cell_volume)
                / max(l2_norm(u0) * np.sqrt(grid.min_wavenumber_sq()), 1e-300)
            ),
        }
        return v0, info
    return v0
