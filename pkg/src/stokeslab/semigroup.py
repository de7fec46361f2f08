"""Heat kernel, heat/Stokes semigroup, Leray projection, fractional integrals,
and the two-weight decay-rate harness.

The semigroup acts by the spectral multiplier exp(-t |xi|^2); on solenoidal
mean-zero fields this is the Stokes evolution of the truncated whole space.
The decay harness records weighted norms along a time ladder, fits the
log-log slope, and compares the series against the predicted envelope
    t^(-(n/2)(1/p - 1/q) - |a|/2) (1 + t)^(-(s - s0)/2)
scaled to touch the first sample.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .grid import Field, Grid, integrate
from .weights import admissible_range

__all__ = [
    "heat_kernel",
    "heat_kernel_field",
    "heat_apply",
    "leray_project",
    "stokes_apply",
    "semigroup_gradient_apply",
    "half_laplacian",
    "fractional_integral",
    "kernel_domination_constant",
    "riesz_gradient_check",
    "DecaySeries",
    "ExponentFit",
    "fit_power_law",
    "predicted_exponent",
    "decay_rate",
    "decay_harness",
    "write_decay_csv",
]


def heat_kernel(n: int, t: float, x) -> np.ndarray:
    """Gaussian heat kernel (4 pi t)^(-n/2) exp(-|x|^2 / (4t)); x has shape (..., n)."""
    if not t > 0:
        raise ValueError(f"heat kernel needs t > 0, got {t}")
    x = np.asarray(x, dtype=float)
    r_sq = np.sum(x**2, axis=-1)
    return (4.0 * np.pi * t) ** (-n / 2.0) * np.exp(-r_sq / (4.0 * t))


def heat_kernel_field(grid: Grid, t: float) -> Field:
    if not t > 0:
        raise ValueError(f"heat kernel needs t > 0, got {t}")
    val = (4.0 * np.pi * t) ** (-grid.n / 2.0) * np.exp(-grid.radius_sq() / (4.0 * t))
    return Field(grid, val)


def _multiplier_apply(f: Field, mult) -> Field:
    g = f.grid
    if f.is_vector:
        out = np.empty_like(f.data)
        for j in range(g.n):
            out[j] = np.fft.ifftn(mult * np.fft.fftn(f.data[j])).real
        return Field(g, out)
    return Field(g, np.fft.ifftn(mult * np.fft.fftn(f.data)).real)


def heat_apply(f: Field, t: float) -> Field:
    """Heat semigroup, multiplier exp(-t |xi|^2); t = 0 is the identity."""
    if t < 0:
        raise ValueError(f"heat semigroup needs t >= 0, got {t}")
    if t == 0:
        return f.copy()
    return _multiplier_apply(f, np.exp(-t * f.grid.wavenumber_sq()))


def leray_project(v: Field) -> Field:
    """Projection onto solenoidal fields, multiplier I - xi xi^T/|xi|^2, zero mode -> 0.

    Nyquist planes are dropped as well: those frequencies lack conjugate
    partners on an even real grid, and a matrix-valued multiplier there
    breaks idempotency.  Band-limited fields are unaffected.
    """
    g = v.grid
    if not v.is_vector:
        raise ValueError("Leray projection expects a vector field")
    k = g.wavenumbers()
    ksq = g.wavenumber_sq()
    ksq_safe = np.where(ksq == 0.0, 1.0, ksq)
    idx = np.abs(np.fft.fftfreq(g.N) * g.N)
    keep = ~np.logical_or.reduce(
        np.meshgrid(*([idx == g.N // 2] * g.n), indexing="ij")
    )
    vh = [np.fft.fftn(v.data[j]) for j in range(g.n)]
    dot = sum(k[j] * vh[j] for j in range(g.n)) / ksq_safe
    out = np.empty_like(v.data)
    zero = (0,) * g.n
    for j in range(g.n):
        ph = (vh[j] - k[j] * dot) * keep
        ph[zero] = 0.0
        out[j] = np.fft.ifftn(ph).real
    return Field(g, out)


def stokes_apply(v: Field, t: float) -> Field:
    """Stokes semigroup on the truncated whole space: heat flow after projection."""
    if t < 0:
        raise ValueError(f"Stokes semigroup needs t >= 0, got {t}")
    return heat_apply(leray_project(v), t)


def semigroup_gradient_apply(f: Field, t: float, j: int) -> Field:
    """d/dx_j of the heat evolution, multiplier i xi_j exp(-t |xi|^2); t > 0."""
    if not t > 0:
        raise ValueError(f"semigroup gradient needs t > 0, got {t}")
    g = f.grid
    mult = 1j * g.wavenumbers()[j] * np.exp(-t * g.wavenumber_sq())
    return _multiplier_apply(f, mult)


def half_laplacian(f: Field) -> Field:
    """(-Laplace)^(1/2), multiplier |xi|."""
    return _multiplier_apply(f, np.sqrt(f.grid.wavenumber_sq()))


def fractional_integral(f: Field, lam: float) -> Field:
    """Convolution with |y|^(lam - n) by direct quadrature on the offset lattice.

    The singular cell at y = 0 is replaced by the exact integral of the
    kernel over the ball of equal volume.
    """
    g = f.grid
    n = g.n
    if not 0.0 < lam < n:
        raise ValueError(f"fractional order must lie in (0, {n}), got {lam}")
    if f.is_vector:
        raise ValueError("fractional integral expects a scalar field")
    h = g.h
    off = h * (np.arange(2 * g.N - 1) - (g.N - 1))
    off_sq = sum(o**2 for o in np.meshgrid(*([off] * n), indexing="ij"))
    with np.errstate(divide="ignore"):
        ker = np.where(off_sq > 0, off_sq ** (0.5 * (lam - n)), 0.0) * h**n
    # near-singular cells: replace midpoint values by sub-quadrature cell averages
    near = np.argwhere(off_sq <= (3.0 * h) ** 2)
    sub = (np.arange(7) + 0.5) / 7.0 - 0.5
    sub_pts = np.stack(np.meshgrid(*([sub * h] * n), indexing="ij"), -1).reshape(-1, n)
    for idx in near:
        y0 = h * (idx - (g.N - 1))
        r_sq = np.sum((y0 + sub_pts) ** 2, axis=1)
        if np.all(r_sq > 0):
            ker[tuple(idx)] = np.mean(r_sq ** (0.5 * (lam - n))) * h**n
    # the singular cell: fine sub-quadrature, innermost sub-cell as the exact
    # kernel integral over the ball of equal volume
    msub = 15
    hs = h / msub
    subc = hs * (np.arange(msub) - (msub - 1) / 2.0)
    rc_sq = sum(c**2 for c in np.meshgrid(*([subc] * n), indexing="ij")).ravel()
    ball_radius = (hs**n * math.gamma(n / 2.0 + 1.0)) ** (1.0 / n) / math.sqrt(math.pi)
    sphere_area = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
    cell = float(np.sum(rc_sq[rc_sq > 0] ** (0.5 * (lam - n)))) * hs**n
    cell += sphere_area * ball_radius**lam / lam
    center = (g.N - 1,) * n
    ker[center] = cell
    return Field(g, fftconvolve(f.data, ker, mode="same"))


def kernel_domination_constant(n: int, lam: float) -> float:
    """Smallest C with E_t(x) <= C |x|^(lam-n) t^(-lam/2) pointwise."""
    a = n - lam
    peak = (2.0 * a / math.e) ** (a / 2.0) if a > 0 else 1.0
    return peak / (4.0 * math.pi) ** (n / 2.0)


def riesz_gradient_check(v: Field, q: float = 2.0, s: float = 0.0) -> float:
    """Ratio of weighted norms of grad v and (-Laplace)^(1/2) v."""
    from .grid import gradient

    if v.is_vector:
        raise ValueError("riesz check expects a scalar field")
    den_field = half_laplacian(v)
    den = integrate(den_field, q, s)
    if den < 1e-14:
        raise ValueError("(-Laplace)^(1/2) v vanishes; input is (numerically) constant")
    num = integrate(gradient(v), q, s)
    return num / den


@dataclass(frozen=True)
class DecaySeries:
    t: np.ndarray
    values: np.ndarray
    n: int
    p: float
    q: float
    s: float
    s0: float
    alpha_order: int

    def __post_init__(self):
        t = np.asarray(self.t, float)
        v = np.asarray(self.values, float)
        if not np.all(np.diff(t) > 0):
            raise ValueError("time ladder must be strictly increasing")
        if not np.all(v > 0):
            raise ValueError("decay series values must be positive")


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float

    def __post_init__(self):
        if not -1e-12 <= self.r_squared <= 1.0 + 1e-12:
            raise ValueError(f"r^2 out of range: {self.r_squared}")


def fit_power_law(t, values) -> ExponentFit:
    """Least-squares fit of log(value) against log(t)."""
    lt = np.log(np.asarray(t, float))
    lv = np.log(np.asarray(values, float))
    A = np.vstack([lt, np.ones_like(lt)]).T
    (slope, intercept), res, *_ = np.linalg.lstsq(A, lv, rcond=None)
    ss_tot = float(np.sum((lv - lv.mean()) ** 2))
    ss_res = float(np.sum((A @ np.array([slope, intercept]) - lv) ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else max(0.0, 1.0 - ss_res / ss_tot)
    return ExponentFit(slope=float(slope), intercept=float(intercept), r_squared=min(r2, 1.0))


def predicted_exponent(n: int, p: float, q: float, s: float, s0: float, alpha_order: int) -> float:
    """Large-time log-log slope of the two-weight decay envelope."""
    return -(n / 2.0) * (1.0 / p - 1.0 / q) - alpha_order / 2.0 - (s - s0) / 2.0


def decay_rate(t, n: int, p: float, q: float, s: float, s0: float, alpha_order: int):
    t = np.asarray(t, float)
    return t ** (-(n / 2.0) * (1.0 / p - 1.0 / q) - alpha_order / 2.0) * (1.0 + t) ** (
        -(s - s0) / 2.0
    )


def _vector_magnitude_field(g: Grid, spectral_components) -> Field:
    mag_sq = np.zeros(g.shape)
    for comp in spectral_components:
        mag_sq += np.fft.ifftn(comp).real ** 2
    return Field(g, np.sqrt(mag_sq))


def decay_harness(
    u0: Field,
    p: float,
    q: float,
    s: float,
    s0: float,
    alpha_order: int,
    t_ladder,
):
    """Weighted decay study of the projected heat evolution of u0.

    Returns (DecaySeries, ExponentFit over t >= 1, bound_compliance), where
    the compliance is the max of series/envelope with the envelope anchored
    at the first ladder point.
    """
    g = u0.grid
    n = g.n
    if not (1.0 < p <= q):
        raise ValueError(f"need 1 < p <= q, got p={p}, q={q}")
    lo_q = -n / q
    hi_p = n * (1.0 - 1.0 / p)
    if not (lo_q < s0 <= s < hi_p):
        raise ValueError(
            f"weight exponents outside the admissible window "
            f"({lo_q:.3f}, {hi_p:.3f}): s0={s0}, s={s}"
        )
    lo, hi = admissible_range(q, n)
    if not lo < s0 < hi:
        raise ValueError(f"s0={s0} outside the A_q window ({lo:.3f}, {hi:.3f})")
    if alpha_order not in (0, 1):
        raise ValueError("derivative order must be 0 or 1")
    t_ladder = np.asarray(sorted(float(t) for t in t_ladder))
    if t_ladder[0] <= 0:
        raise ValueError("decay ladder requires positive times")

    proj = leray_project(u0) if u0.is_vector else u0
    if u0.is_vector:
        base = [np.fft.fftn(proj.data[j]) for j in range(n)]
    else:
        fh = np.fft.fftn(proj.data)
        fh[(0,) * n] = 0.0
        base = [fh]
    k = g.wavenumbers()
    ksq = g.wavenumber_sq()

    values = []
    for t in t_ladder:
        prop = np.exp(-t * ksq)
        if alpha_order == 0:
            comps = [b * prop for b in base]
        else:
            comps = [1j * k[j] * b * prop for b in base for j in range(n)]
        mag = _vector_magnitude_field(g, comps)
        values.append(integrate(mag, q, s0))
    values = np.asarray(values)

    series = DecaySeries(t=t_ladder, values=values, n=n, p=p, q=q, s=s, s0=s0,
                         alpha_order=alpha_order)
    rate = decay_rate(t_ladder, n, p, q, s, s0, alpha_order)
    envelope = values[0] / rate[0] * rate
    compliance = float(np.max(values / envelope))
    fit_mask = t_ladder >= 1.0
    if fit_mask.sum() >= 2:
        fit = fit_power_law(t_ladder[fit_mask], values[fit_mask])
    else:
        fit = fit_power_law(t_ladder, values)
    return series, fit, compliance


def write_decay_csv(path, series: DecaySeries, fit: ExponentFit) -> None:
    """CSV with columns t, norm, predicted_envelope, ratio; fit JSON footer."""
    g_rate = decay_rate(series.t, series.n, series.p, series.q, series.s, series.s0,
                        series.alpha_order)
    envelope = series.values[0] / g_rate[0] * g_rate
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "norm", "predicted_envelope", "ratio"])
        for t, v, e in zip(series.t, series.values, envelope):
            wr.writerow([repr(float(t)), repr(float(v)), repr(float(e)),
                         repr(float(v / e))])
        wr.writerow([])
        wr.writerow(["# fit", json.dumps({"slope": fit.slope,
                                          "intercept": fit.intercept,
                                          "r_squared": fit.r_squared})])
