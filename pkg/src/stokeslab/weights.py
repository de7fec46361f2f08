"""Muckenhoupt diagnostics for radial weights, exponent windows, maximal function.

The A_q checker evaluates the cube product
    (avg_Q w) (avg_Q w^(-1/(q-1)))^(q-1)
over a ladder of origin-anchored cubes by midpoint quadrature at two
resolutions.  Verdicts are heuristic by construction: a finite sample can
only observe a sup stabilizing or still growing.  A per-cube refinement
jump flags averages that keep changing under quadrature refinement, which
is how non-integrable local singularities (and the homogenization of huge
cubes) are caught; thresholds below were calibrated on the <x>^a family.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .grid import Field, Grid

__all__ = [
    "RadialWeight",
    "AqSample",
    "AqReport",
    "aq_check",
    "admissible_range",
    "maximal_function",
    "mollifier_sup",
    "HypothesisSet",
    "Interval",
    "feasibility",
    "feasibility_scan",
    "sobolev_embedding_ratio",
]

# verdict thresholds (see module docstring)
STABLE_GROWTH = 1.05       # last-decade sup growth below this reads as settled
DIVERGING_GROWTH = 1.5     # last-decade sup growth at or above this diverges
JUMP_DIVERGING = 0.17      # refinement jump marking a divergent cube average
JUMP_RESOLVED = 0.10       # refinement jump small enough to trust the cube


@dataclass(frozen=True)
class RadialWeight:
    """Radial weight <x>^s (inhomogeneous) or |x|^s (homogeneous)."""

    s: float
    form: str = "inhomogeneous"

    def __post_init__(self):
        if not np.isfinite(self.s):
            raise ValueError("weight exponent must be finite")
        if self.form not in ("inhomogeneous", "homogeneous"):
            raise ValueError(f"unknown weight form {self.form!r}")

    def values_r2(self, r_sq):
        """Weight values from |x|^2; the homogeneous form is +inf at 0 for s < 0."""
        if self.form == "inhomogeneous":
            return (1.0 + r_sq) ** (0.5 * self.s)
        with np.errstate(divide="ignore"):
            return np.where(
                r_sq > 0.0,
                r_sq ** (0.5 * self.s),
                np.inf if self.s < 0 else (0.0 if self.s > 0 else 1.0),
            )

    def sample(self, grid: Grid):
        return self.values_r2(grid.radius_sq())


@dataclass(frozen=True)
class AqSample:
    center: float          # offset along the first coordinate axis
    side: float
    product: float
    refinement_jump: float


@dataclass
class AqReport:
    q: float
    weight: RadialWeight
    samples: list = field(default_factory=list)
    sup_estimate: float = 1.0
    verdict: str = "inconclusive"

    def to_json(self) -> str:
        return json.dumps(
            {
                "q": self.q,
                "weight": {"form": self.weight.form, "s": self.weight.s},
                "samples": [
                    {
                        "center": s.center,
                        "side": s.side,
                        "product": s.product,
                        "refinement_jump": s.refinement_jump,
                    }
                    for s in self.samples
                ],
                "sup": self.sup_estimate,
                "verdict": self.verdict,
            },
            indent=2,
        )


def _cube_points(n: int, m: int):
    ax = (np.arange(m) + 0.5) / m - 0.5
    pts = np.meshgrid(*([ax] * n), indexing="ij")
    u1 = pts[0].ravel()
    u_sq = sum(p**2 for p in pts).ravel()
    return u1, u_sq


def _cube_product(w: RadialWeight, q: float, offset: float, side: float, u1, u_sq):
    # |c e1 + side u|^2 expanded; offset is the center's coordinate on axis 1
    r_sq = offset**2 + 2.0 * offset * side * u1 + side**2 * u_sq
    vals = w.values_r2(r_sq)
    with np.errstate(divide="ignore", over="ignore"):
        inv = vals ** (-1.0 / (q - 1.0))
    a1 = float(np.mean(vals))
    a2 = float(np.mean(inv))
    if not (np.isfinite(a1) and np.isfinite(a2)):
        return np.inf
    return a1 * a2 ** (q - 1.0)


def aq_check(
    w: RadialWeight,
    q: float,
    cube_sides=None,
    centers=None,
    n: int = 3,
    base_points: int = 32,
) -> AqReport:
    """Sampled Muckenhoupt A_q diagnostic for a radial weight.

    cube_sides must span at least three decades.  Each cube product is
    computed at base_points and 2x base_points per axis; the relative jump
    between the two is recorded alongside the refined product.
    """
    if not q > 1.0:
        raise ValueError(f"Muckenhoupt index q must exceed 1, got {q}")
    if cube_sides is None:
        cube_sides = [2.0**k for k in range(-3, 11)]
    cube_sides = sorted(float(s) for s in cube_sides)
    if cube_sides[0] <= 0:
        raise ValueError("cube sides must be positive")
    if cube_sides[-1] / cube_sides[0] < 1e3:
        raise ValueError("cube ladder must span at least three decades of side length")
    if centers is None:
        centers = [0.0, 1.0, 8.0, 64.0]

    m = max(8, int(np.ceil(32768 ** (1.0 / n))))
    m = max(m, base_points if n == 3 else m)
    coarse = _cube_points(n, m)
    fine = _cube_points(n, 2 * m)

    report = AqReport(q=float(q), weight=w)
    max_jump = 0.0
    sup_by_side = {}
    for side in cube_sides:
        best = 0.0
        for c in centers:
            p1 = _cube_product(w, q, c, side, *coarse)
            p2 = _cube_product(w, q, c, side, *fine)
            if np.isinf(p1) or np.isinf(p2):
                jump = np.inf
                prod = p2
            else:
                jump = abs(p2 / p1 - 1.0)
                prod = p2
            assert not np.isfinite(prod) or prod >= 1.0 - 1e-9, "Jensen violated"
            report.samples.append(AqSample(center=c, side=side, product=prod,
                                           refinement_jump=jump))
            max_jump = max(max_jump, jump)
            best = max(best, prod)
        sup_by_side[side] = best

    sides = np.array(sorted(sup_by_side))
    running = np.maximum.accumulate([sup_by_side[s] for s in sides])
    report.sup_estimate = float(running[-1])

    # per-decade growth of the running sup
    decades = np.floor(np.log10(sides) - np.log10(sides[-1]) + 1e-12)
    last = running[-1]
    prev_mask = decades < decades[-1] - 1e-9
    prev = running[prev_mask][-1] if prev_mask.any() else running[0]
    last_growth = last / prev if prev > 0 else np.inf

    if max_jump >= JUMP_DIVERGING or last_growth >= DIVERGING_GROWTH:
        report.verdict = "diverging"
    elif max_jump < JUMP_RESOLVED and last_growth < STABLE_GROWTH:
        report.verdict = "finite"
    else:
        report.verdict = "inconclusive"
    return report


def admissible_range(q: float, n: int):
    """Open interval of s with <x>^(sq) in the A_q class: (-n/q, n(1-1/q))."""
    if not q > 1.0:
        raise ValueError(f"Lebesgue index q must exceed 1, got {q}")
    return (-n / q, n * (1.0 - 1.0 / q))


def maximal_function(f: Field, radius_ladder=None) -> Field:
    """Centered maximal function approximated over a ladder of ball radii.

    Ball averages are circular convolutions with normalized lattice-ball
    indicators (min-image metric); the result is a lower bound of the true
    maximal function that grows as the ladder refines.  The smallest radius
    is always the grid spacing, so the output dominates |f| pointwise.
    """
    g = f.grid
    if radius_ladder is None:
        radius_ladder = np.geomspace(g.h, g.L, 24)
    radius_ladder = np.unique(np.concatenate([[g.h], np.asarray(radius_ladder, float)]))
    if radius_ladder[0] < g.h or radius_ladder[-1] > np.sqrt(g.n) * g.L:
        raise ValueError("radius ladder must live in [h, sqrt(n) L]")

    mag = f.magnitude()
    Fm = np.fft.fftn(mag)
    # min-image offset distances in wrapped order
    d1 = np.minimum(np.arange(g.N) * g.h, 2 * g.L - np.arange(g.N) * g.h)
    off_sq = sum(dd**2 for dd in np.meshgrid(*([d1] * g.n), indexing="ij"))
    out = np.zeros(g.shape)
    for r in radius_ladder:
        ind = off_sq < r * r
        cnt = int(ind.sum())
        avg = np.fft.ifftn(Fm * np.fft.fftn(ind.astype(float))).real / cnt
        np.maximum(out, avg, out=out)
    return Field(g, out)


def mollifier_sup(f: Field, eps_ladder=None) -> Field:
    """sup over the ladder of Gaussian mollifications of |f| (discrete masses)."""
    g = f.grid
    if eps_ladder is None:
        eps_ladder = np.geomspace(g.h / 2.0, g.L / 6.0, 12)
    mag = f.magnitude()
    Fm = np.fft.fftn(mag)
    d1 = np.minimum(np.arange(g.N) * g.h, 2 * g.L - np.arange(g.N) * g.h)
    off_sq = sum(dd**2 for dd in np.meshgrid(*([d1] * g.n), indexing="ij"))
    out = np.zeros(g.shape)
    for eps in eps_ladder:
        ker = np.exp(-off_sq / (2.0 * eps**2))
        ker /= ker.sum()
        conv = np.fft.ifftn(Fm * np.fft.fftn(ker)).real
        np.maximum(out, conv, out=out)
    return Field(g, out)


class Interval(tuple):
    """Open interval (lo, hi); empty when lo >= hi."""

    def __new__(cls, lo, hi):
        return super().__new__(cls, (float(lo), float(hi)))

    @property
    def lo(self):
        return self[0]

    @property
    def hi(self):
        return self[1]

    @property
    def empty(self) -> bool:
        return not self[0] < self[1]


@dataclass(frozen=True)
class HypothesisSet:
    """Exponent bookkeeping for the periodic-solution hypotheses."""

    n: int
    q1: float
    q2: float
    s: float | None = None

    def __post_init__(self):
        if not 1.0 < self.q1 < self.n:
            raise ValueError(f"need 1 < q1 < n, got q1={self.q1}, n={self.n}")
        if not self.n / 2.0 < self.q2 < self.n:
            raise ValueError(f"need n/2 < q2 < n, got q2={self.q2}, n={self.n}")

    @property
    def q12(self) -> float:
        return self.q1 * self.q2 / (self.q1 + self.q2)

    @property
    def q2_star(self) -> float:
        return self.n * self.q2 / (self.n - self.q2)

    @property
    def q22_star(self) -> float:
        q2s = self.q2_star
        return q2s * self.q2 / (q2s + self.q2)

    def s_window(self) -> Interval:
        lo = max(0.0, 2.0 - self.n / self.q2)
        hi = min(
            self.n * (1.0 - 1.0 / self.q1),
            (self.n / 2.0) * (1.0 - 1.0 / self.q12),
            (self.n / 2.0) * (1.0 - 1.0 / self.q22_star),
        )
        return Interval(lo, hi)


def feasibility(n: int, q1: float, q2: float) -> Interval:
    """Open window of weight exponents s compatible with the hypotheses."""
    return HypothesisSet(n=n, q1=q1, q2=q2).s_window()


def feasibility_scan(n: int, step: float = 0.01):
    """Vectorized sweep of (q1, q2); returns (grid count, nonempty count, widest)."""
    q1 = np.arange(1.0 + step, float(n), step)
    q2 = np.arange(n / 2.0 + step, float(n), step)
    Q1, Q2 = np.meshgrid(q1, q2, indexing="ij")
    q12 = Q1 * Q2 / (Q1 + Q2)
    q2s = n * Q2 / (n - Q2)
    q22 = q2s * Q2 / (q2s + Q2)
    lo = np.maximum(0.0, 2.0 - n / Q2)
    hi = np.minimum.reduce(
        [n * (1.0 - 1.0 / Q1), (n / 2.0) * (1.0 - 1.0 / q12), (n / 2.0) * (1.0 - 1.0 / q22)]
    )
    width = hi - lo
    nonempty = width > 0.0
    widest = float(width.max()) if width.size else -np.inf
    return int(width.size), int(np.count_nonzero(nonempty)), widest


def sobolev_embedding_ratio(f: Field, q: float, s: float) -> float:
    """Ratio of the weighted L^{q*} norm of f to the weighted L^q norm of grad f."""
    from .grid import gradient, integrate

    g = f.grid
    if not 1.0 < q < g.n:
        raise ValueError(f"embedding requires 1 < q < n, got q={q}")
    q_star = g.n * q / (g.n - q)
    if f.is_vector:
        grad_sq = np.zeros(g.shape)
        for j in range(g.n):
            grad_sq += gradient(Field(g, f.data[j])).magnitude() ** 2
        grad = Field(g, np.sqrt(grad_sq))
    else:
        grad = gradient(f)
    num = integrate(f, q_star, s)
    den = integrate(grad, q, s)
    if den < 1e-14:
        raise ValueError("gradient norm vanishes; embedding ratio undefined")
    return num / den
