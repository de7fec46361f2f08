"""Time-periodic mild solutions of the truncated Navier-Stokes system.

The history-integral map

    H[u](t) = integral_{-infty}^t e^{-(t-tau)A} { B[u](tau) + P f(tau) } dtau

is evaluated on M uniform nodes per period through the factorization
sum_k S(kT) J(t) with J the one-period integral.  The node data h(tau) is
identified with its trigonometric interpolant, for which both J and the
geometric tail sum in k are available in closed form per (spatial mode,
temporal frequency); the tail is truncated at the first k with
exp(-k T kappa_min) below tail_eps, which multiplies the exact answer by
(1 - exp(-(K+1) T |xi|^2)).  The zero spatial mode carries no decay on the
torus and is projected out of forcing and solution throughout.

Fixed points of the map are T-periodic mild solutions; picard_solve
iterates from u = 0 and reports per-node residuals.  periodicity_check
re-simulates one period with an independent ETDRK4 exponential integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Field, Grid
from .weights import HypothesisSet

__all__ = [
    "PeriodicForce",
    "PicardConfig",
    "PeriodicSolution",
    "single_mode_force",
    "random_solenoidal_force",
    "nonlinearity",
    "poincare_map",
    "picard_solve",
    "periodicity_check",
    "weighted_report",
    "ContractionError",
]


class ContractionError(RuntimeError):
    """Raised when the fixed-point residuals stop contracting."""

    def __init__(self, growth_factor, history):
        super().__init__(
            f"outside contraction regime: residual growth factor "
            f"{growth_factor:.3f} over the last iterations"
        )
        self.growth_factor = growth_factor
        self.history = history


@dataclass(frozen=True)
class PeriodicForce:
    """T-periodic forcing; the sampler is always evaluated at t mod T."""

    T: float
    sampler: object          # callable (t, grid) -> vector Field
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("period must be positive")

    def field(self, grid: Grid, t: float) -> Field:
        f = self.sampler(float(t) % self.T, grid)
        return Field(grid, self.amplitude * f.data)

    def rescaled(self, amplitude: float) -> "PeriodicForce":
        return PeriodicForce(T=self.T, sampler=self.sampler, amplitude=amplitude)


@dataclass(frozen=True)
class PicardConfig:
    M: int = 16
    tol: float = 1e-8
    max_iter: int = 40
    tail_eps: float = 1e-12
    linear_only: bool = False

    def __post_init__(self):
        if self.M < 8 or self.M % 2 != 0:
            raise ValueError("node count M must be even and >= 8")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if not self.tail_eps > 0:
            raise ValueError("tail threshold must be positive")


@dataclass
class PeriodicSolution:
    grid: Grid
    T: float
    node_times: np.ndarray
    snapshots: np.ndarray          # (M, n) + grid.shape
    residuals: np.ndarray          # per-node relative residual at exit
    iterations: int
    converged: bool
    residual_history: list = field(default_factory=list)

    def snapshot(self, m: int) -> Field:
        return Field(self.grid, self.snapshots[m])


def single_mode_force(T: float, k_index: int = 1, wave_axis: int = 2,
                      component: int = 0, amplitude: float = 1.0) -> PeriodicForce:
    """cos(xi . x) cos(2 pi t / T) on one velocity component, xi along wave_axis.

    The component is orthogonal to the wavevector, so the mode is solenoidal
    and the Leray projection leaves it untouched.
    """
    if component == wave_axis:
        raise ValueError("component must differ from the wave axis to stay solenoidal")
    omega = 2.0 * math.pi / T

    def sampler(t, grid):
        k = 2.0 * math.pi * k_index / (2.0 * grid.L)
        x = grid.coords()[wave_axis]
        data = np.zeros((grid.n,) + grid.shape)
        data[component] = np.cos(k * x) * math.cos(omega * t)
        return Field(grid, data)

    return PeriodicForce(T=T, sampler=sampler, amplitude=amplitude)


def random_solenoidal_force(T: float, seed: int, k0: float = 1.0,
                            amplitude: float = 1.0) -> PeriodicForce:
    """Seeded smooth solenoidal profile times cos(2 pi t / T)."""
    from .corpus import random_smooth_field
    from .semigroup import leray_project

    omega = 2.0 * math.pi / T
    cache = {}

    def sampler(t, grid):
        key = (grid.n, grid.N, grid.L)
        if key not in cache:
            raw = random_smooth_field(grid, seed, components=grid.n, k0=k0)
            cache[key] = leray_project(raw).data
        return Field(grid, cache[key] * math.cos(omega * t))

    return PeriodicForce(T=T, sampler=sampler, amplitude=amplitude)


# ---------------------------------------------------------------------------
# spectral helpers (real FFT layout)
# ---------------------------------------------------------------------------


class _Workspace:
    def __init__(self, grid: Grid):
        if grid.n != 3:
            raise ValueError("the periodic solver runs at n = 3")
        self.grid = grid
        N, h = grid.N, grid.h
        kf = 2.0 * np.pi * np.fft.fftfreq(N, d=h)
        kr = 2.0 * np.pi * np.fft.rfftfreq(N, d=h)
        self.k = [
            kf[:, None, None],
            kf[None, :, None],
            kr[None, None, :],
        ]
        self.ksq = self.k[0] ** 2 + self.k[1] ** 2 + self.k[2] ** 2
        self.ksq_safe = np.where(self.ksq == 0.0, 1.0, self.ksq)
        idx = np.abs(np.fft.fftfreq(N) * N)
        idr = np.abs(np.fft.rfftfreq(N) * N)
        cut = N / 3.0
        self.mask = (
            (idx[:, None, None] < cut)
            & (idx[None, :, None] < cut)
            & (idr[None, None, :] < cut)
        )
        # Parseval weights on the half spectrum
        wr = np.full(N // 2 + 1, 2.0)
        wr[0] = 1.0
        wr[-1] = 1.0
        self.pw = wr[None, None, :]
        self.rshape = (N, N, N // 2 + 1)

    def rfft(self, data):
        return np.fft.rfftn(data, axes=(-3, -2, -1))

    def irfft(self, hat):
        return np.fft.irfftn(hat, s=self.grid.shape, axes=(-3, -2, -1))

    def l2(self, hat) -> float:
        g = self.grid
        scale = g.cell_volume / g.N**g.n
        return float(np.sqrt(np.sum(self.pw * np.abs(hat) ** 2) * scale))

    def project(self, hat):
        """Leray projection and zero-mode removal in place."""
        dot = (self.k[0] * hat[0] + self.k[1] * hat[1] + self.k[2] * hat[2]) / self.ksq_safe
        for j in range(3):
            hat[j] -= self.k[j] * dot
            hat[j][0, 0, 0] = 0.0
        return hat

    def nonlin_hat(self, uh):
        """-P(u . grad u) with 2/3-rule de-aliasing, in spectral space."""
        u = self.irfft(uh)
        conv = np.empty_like(u)
        for i in range(3):
            acc = np.zeros(self.grid.shape)
            for j in range(3):
                acc += u[j] * self.irfft(1j * self.k[j] * uh[i])
            conv[i] = acc
        ch = self.rfft(conv)
        ch *= self.mask
        return self.project(-ch)

    def solenoidal_defect(self, uh) -> float:
        div = 1j * (self.k[0] * uh[0] + self.k[1] * uh[1] + self.k[2] * uh[2])
        num = self.l2(div[None])
        den = self.l2(np.sqrt(self.ksq)[None] * uh)
        return num / den if den > 0 else 0.0


def _force_hats(force: PeriodicForce, ws: _Workspace, times) -> np.ndarray:
    out = np.empty((len(times), 3) + ws.rshape, dtype=complex)
    for m, t in enumerate(times):
        fh = ws.rfft(force.field(ws.grid, t).data)
        fh *= ws.mask
        out[m] = ws.project(fh)
    return out


def _resolve_periodic(h_hats: np.ndarray, ws: _Workspace, T: float,
                      tail_eps: float) -> np.ndarray:
    """Node values of the history integral for node data h (spectral)."""
    kappa_min = ws.grid.min_wavenumber_sq()
    if kappa_min * T < 1e-6:
        raise ValueError(
            f"non-convergent tail: kappa_min * T = {kappa_min * T:.2e} < 1e-6"
        )
    M = h_hats.shape[0]
    K = int(math.ceil(math.log(1.0 / tail_eps) / (T * kappa_min)))
    Hf = np.fft.fft(h_hats, axis=0)
    nu_omega = 2.0 * np.pi / T * np.fft.fftfreq(M) * M
    tail = -np.expm1(-(K + 1) * T * ws.ksq)       # 1 - exp(...), zero at xi = 0
    denom = ws.ksq[None, None] + 1j * nu_omega[:, None, None, None, None]
    denom = np.where(denom == 0.0, 1.0, denom)
    Hf *= tail[None, None] / denom
    return np.fft.ifft(Hf, axis=0)


def nonlinearity(u: Field, solenoidal_rtol: float = 1e-8) -> Field:
    """-P(u . grad u), spectrally de-aliased; u must be solenoidal."""
    ws = _Workspace(u.grid)
    if not u.is_vector:
        raise ValueError("the advection nonlinearity expects a vector field")
    uh = ws.rfft(u.data).astype(complex)
    defect = ws.solenoidal_defect(uh)
    if defect > solenoidal_rtol:
        raise ValueError(
            f"input is not solenoidal: relative divergence {defect:.3e}"
        )
    return Field(u.grid, ws.irfft(ws.nonlin_hat(uh)))


def _map_hats(u_hats, f_hats, ws: _Workspace, force_T, cfg: PicardConfig):
    M = u_hats.shape[0]
    h_hats = np.empty_like(u_hats)
    for m in range(M):
        h_hats[m] = f_hats[m]
        if not cfg.linear_only:
            h_hats[m] += ws.nonlin_hat(u_hats[m])
    return _resolve_periodic(h_hats, ws, force_T, cfg.tail_eps)


def poincare_map(snapshots, force: PeriodicForce, cfg: PicardConfig,
                 grid: Grid) -> np.ndarray:
    """One application of the history-integral map to node snapshots."""
    ws = _Workspace(grid)
    times = force.T * np.arange(cfg.M) / cfg.M
    snapshots = np.asarray(snapshots, dtype=float)
    if snapshots.shape != (cfg.M, 3) + grid.shape:
        raise ValueError("snapshots must have shape (M, 3) + grid.shape")
    u_hats = np.stack([ws.rfft(snapshots[m]).astype(complex) for m in range(cfg.M)])
    f_hats = _force_hats(force, ws, times)
    out = _map_hats(u_hats, f_hats, ws, force.T, cfg)
    return np.stack([ws.irfft(out[m]) for m in range(cfg.M)])


def picard_solve(force: PeriodicForce, cfg: PicardConfig, grid: Grid) -> PeriodicSolution:
    """Iterate u <- H[u] from u = 0 until the node residuals settle."""
    ws = _Workspace(grid)
    times = force.T * np.arange(cfg.M) / cfg.M
    f_hats = _force_hats(force, ws, times)
    u_hats = np.zeros((cfg.M, 3) + ws.rshape, dtype=complex)

    history = []
    residuals = np.zeros(cfg.M)
    converged = False
    grow_count = 0
    it = 0
    for it in range(1, cfg.max_iter + 1):
        new = _map_hats(u_hats, f_hats, ws, force.T, cfg)
        scale = max(max(ws.l2(new[m]) for m in range(cfg.M)), 1e-300)
        residuals = np.array(
            [ws.l2(new[m] - u_hats[m]) / scale for m in range(cfg.M)]
        )
        res = float(residuals.max())
        history.append(res)
        u_hats = new
        if res <= cfg.tol:
            converged = True
            break
        if len(history) >= 2 and history[-1] >= history[-2]:
            grow_count += 1
            if grow_count >= 3:
                growth = history[-1] / max(history[-4], 1e-300)
                raise ContractionError(growth, history)
        else:
            grow_count = 0

    snapshots = np.stack([ws.irfft(u_hats[m]) for m in range(cfg.M)])
    return PeriodicSolution(
        grid=grid,
        T=force.T,
        node_times=times,
        snapshots=snapshots,
        residuals=residuals,
        iterations=it,
        converged=converged,
        residual_history=history,
    )


def periodicity_check(sol: PeriodicSolution, force: PeriodicForce,
                      cfg: PicardConfig, steps: int = 256) -> float:
    """March u(0) over one period with ETDRK4 and compare against u(0).

    Returns the relative defect |u_marched(T) - u(0)| / |u(0)| in L^2 (zero
    when both vanish).
    """
    ws = _Workspace(sol.grid)
    dt = force.T / steps
    L = -ws.ksq

    # phi-function coefficients by contour averaging around L*dt
    ncirc = 32
    circ = np.exp(2j * np.pi * (np.arange(ncirc) + 0.5) / ncirc)
    zc = L[..., None] * dt + circ
    E = np.exp(L * dt)
    E2 = np.exp(L * dt / 2.0)
    zeta = dt * ((np.exp(zc / 2.0) - 1.0) / zc).mean(axis=-1)
    alph = dt * ((-4.0 - zc + np.exp(zc) * (4.0 - 3.0 * zc + zc**2)) / zc**3).mean(axis=-1)
    beta = dt * ((2.0 + zc + np.exp(zc) * (-2.0 + zc)) / zc**3).mean(axis=-1)
    gamm = dt * ((-4.0 - 3.0 * zc - zc**2 + np.exp(zc) * (4.0 - zc)) / zc**3).mean(axis=-1)

    def rhs(uh, t):
        fh = ws.rfft(force.field(ws.grid, t).data).astype(complex)
        fh *= ws.mask
        ws.project(fh)
        if cfg.linear_only:
            return fh
        return fh + ws.nonlin_hat(uh)

    uh = ws.rfft(sol.snapshots[0]).astype(complex)
    u0_norm = ws.l2(uh)
    t = 0.0
    for _ in range(steps):
        N1 = rhs(uh, t)
        a = E2 * uh + zeta * N1
        N2 = rhs(a, t + dt / 2.0)
        b = E2 * uh + zeta * N2
        N3 = rhs(b, t + dt / 2.0)
        c = E2 * a + zeta * (2.0 * N3 - N1)
        N4 = rhs(c, t + dt)
        uh = E * uh + alph * N1 + 2.0 * beta * (N2 + N3) + gamm * N4
        t += dt

    start = ws.rfft(sol.snapshots[0]).astype(complex)
    if u0_norm == 0.0:
        return float(ws.l2(uh))
    return float(ws.l2(uh - start) / u0_norm)


def weighted_report(sol: PeriodicSolution, force: PeriodicForce,
                    q1: float, q2: float, s: float) -> dict:
    """Weighted solution norms against the forcing norm of the smallness theory.

    Reports sup over nodes of |<x>^s u|_{q1} + |<x>^s grad u|_{q2}, the
    forcing size |f|_s = sup_m |<x>^{2s} f(t_m)| in the intersection norm
    (max of the two component norms), and their ratio.
    """
    from .grid import Field as F, gradient

    g = sol.grid
    hs = HypothesisSet(n=g.n, q1=q1, q2=q2, s=s)

    def wnorm(f, q, ws):
        # the derived exponent q12 can reach down to L^1 for diagnostic pairs
        if not q >= 1.0:
            raise ValueError(f"norm index must be >= 1, got {q}")
        wq = g.bracket(ws * q)
        return float((np.sum(f.magnitude() ** q * wq) * g.cell_volume) ** (1.0 / q))

    sup_u = 0.0
    for m in range(len(sol.node_times)):
        u = sol.snapshot(m)
        grad_sq = np.zeros(g.shape)
        for j in range(g.n):
            grad_sq += gradient(F(g, u.data[j])).magnitude() ** 2
        nu = wnorm(u, q1, s) + wnorm(F(g, np.sqrt(grad_sq)), q2, s)
        sup_u = max(sup_u, nu)

    sup_f = 0.0
    for t in sol.node_times:
        ff = force.field(g, t)
        if np.all(ff.data == 0.0):
            continue
        nf = max(wnorm(ff, hs.q12, 2.0 * s), wnorm(ff, hs.q22_star, 2.0 * s))
        sup_f = max(sup_f, nf)

    applicable = sup_f > 0.0
    return {
        "q1": q1,
        "q2": q2,
        "s": s,
        "q12": hs.q12,
        "q22_star": hs.q22_star,
        "sup_u_norm": sup_u,
        "force_norm": sup_f,
        "ratio": sup_u / sup_f if applicable else float("nan"),
        "applicable": applicable,
    }
