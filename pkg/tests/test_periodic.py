import math

import numpy as np
import pytest

from stokeslab.grid import Field, Grid, gradient, integrate, l2_norm
from stokeslab.corpus import random_smooth_field
from stokeslab.semigroup import leray_project
from stokeslab.periodic import (
    ContractionError,
    PeriodicForce,
    PicardConfig,
    nonlinearity,
    periodicity_check,
    picard_solve,
    poincare_map,
    random_solenoidal_force,
    single_mode_force,
    weighted_report,
)

T = 2.0 * math.pi


def small_grid():
    return Grid(3, 32, 16.0)


def test_force_is_exactly_periodic():
    g = small_grid()
    force = random_solenoidal_force(T, seed=1, amplitude=0.5)
    # evaluation goes through t mod T, so reduced arguments agree bitwise
    assert np.array_equal(force.field(g, 0.3).data, force.field(g, 0.3 % T).data)
    # shifted by whole periods the argument only drifts at roundoff level
    a = force.field(g, 0.3)
    b = force.field(g, 0.3 + 5 * T)
    assert np.abs(a.data - b.data).max() <= 1e-13 * np.abs(a.data).max()


def test_force_amplitude_scales_norms():
    g = small_grid()
    force = single_mode_force(T, amplitude=1.0)
    doubled = force.rescaled(2.0)
    na = integrate(force.field(g, 0.2), 2.0, 1.0)
    nb = integrate(doubled.field(g, 0.2), 2.0, 1.0)
    assert nb == pytest.approx(2.0 * na, rel=1e-14)


def test_picard_config_validation():
    with pytest.raises(ValueError):
        PicardConfig(M=6)
    with pytest.raises(ValueError):
        PicardConfig(M=9)
    with pytest.raises(ValueError):
        PicardConfig(tol=0.0)
    with pytest.raises(ValueError):
        PicardConfig(tail_eps=0.0)
    with pytest.raises(ValueError):
        PeriodicForce(T=0.0, sampler=None)


def test_nonlinearity_zero():
    g = small_grid()
    out = nonlinearity(Field(g, np.zeros((3,) + g.shape)))
    assert np.all(out.data == 0.0)


def test_nonlinearity_mode_arithmetic():
    # two solenoidal cosine modes: the advection lives on sums/differences of
    # the wavevectors; the zero mode is removed by the projection convention
    g = small_grid()
    k0 = 2 * np.pi / (2 * g.L)
    X, Y, Z = g.coords()
    data = np.zeros((3,) + g.shape)
    data[0] = np.cos(2 * k0 * Z)
    data[1] = np.cos(3 * k0 * X)
    u = Field(g, data)
    B = nonlinearity(u)
    Bh = np.fft.fftn(B.data, axes=(1, 2, 3))
    peak0 = np.abs(Bh).max()
    assert abs(Bh[:, 0, 0, 0]).max() <= 1e-16 * peak0
    allowed = np.zeros(g.shape, dtype=bool)
    for ix in (-3, 3, 0):
        for iz in (-2, 2, 0):
            allowed[ix, 0, iz] = True
    peak = np.abs(Bh).max()
    assert peak > 0
    assert np.abs(Bh[:, ~allowed]).max() <= 1e-10 * peak


def test_nonlinearity_rejects_nonsolenoidal():
    g = small_grid()
    u = random_smooth_field(g, 5, components=3)   # not projected
    with pytest.raises(ValueError, match="solenoidal"):
        nonlinearity(u)


def test_nonlinearity_output_solenoidal_and_mean_zero():
    from stokeslab.grid import divergence

    g = small_grid()
    u = leray_project(random_smooth_field(g, 6, components=3))
    B = nonlinearity(u)
    assert B.data.mean() == pytest.approx(0.0, abs=1e-16)
    scale = np.sqrt(sum(l2_norm(gradient(Field(g, B.data[j]))) ** 2 for j in range(3)))
    assert l2_norm(divergence(B)) <= 1e-10 * scale


def test_nonlinearity_weighted_hoelder_bound():
    # |u . grad u| <= |u| |grad u| pointwise makes the weighted product bound
    # exact on the grid; the projected term is recorded against the corpus max
    g = small_grid()
    s = 0.5
    for seed in (1, 2, 3):
        u = leray_project(random_smooth_field(g, seed, components=3))
        B = nonlinearity(u)
        nu = integrate(u, 2.0, s)
        grmag = np.sqrt(
            sum(gradient(Field(g, u.data[j])).magnitude() ** 2 for j in range(3))
        )
        ngr = integrate(Field(g, grmag), 2.0, s)
        w = (1.0 + g.radius_sq()) ** s
        raw = np.zeros(g.shape)
        for i in range(3):
            acc = np.zeros(g.shape)
            for j in range(3):
                acc += u.data[j] * gradient(Field(g, u.data[i])).data[j]
            raw += acc**2
        n_raw = np.sum(np.sqrt(raw) * w) * g.cell_volume
        n_proj = np.sum(B.magnitude() * w) * g.cell_volume
        assert n_raw <= nu * ngr * (1 + 1e-12)
        assert n_proj <= 2.5 * nu * ngr


def test_zero_force_fixed_point():
    g = small_grid()
    force = single_mode_force(T, amplitude=0.0)
    sol = picard_solve(force, PicardConfig(M=8), g)
    assert sol.converged
    assert sol.iterations == 1
    assert np.all(sol.snapshots == 0.0)


def test_linear_single_mode_matches_ode_solution():
    g = small_grid()
    force = single_mode_force(T, k_index=1, wave_axis=2, component=0)
    cfg = PicardConfig(M=16, tol=1e-10, max_iter=5, linear_only=True)
    sol = picard_solve(force, cfg, g)
    kappa = (math.pi / g.L) ** 2
    omega = 2 * math.pi / T
    k1 = 2 * math.pi / (2 * g.L)
    x3 = g.coords()[2]
    amp = 1.0 / math.hypot(kappa, omega)
    for m, t in enumerate(sol.node_times):
        exact = np.cos(k1 * x3) * (kappa * math.cos(omega * t)
                                   + omega * math.sin(omega * t)) / (kappa**2 + omega**2)
        assert np.abs(sol.snapshots[m][0] - exact).max() <= 1e-6 * amp
        assert np.abs(sol.snapshots[m][1:]).max() <= 1e-12


def test_poincare_map_translation_equivariance():
    # shifting the forcing by T/2 shifts the node values by M/2 slots exactly
    g = small_grid()
    cfg = PicardConfig(M=16, linear_only=True)
    base = single_mode_force(T)

    def shifted_sampler(t, grid):
        return base.sampler((t + T / 2.0) % T, grid)

    shifted = PeriodicForce(T=T, sampler=shifted_sampler)
    zeros = np.zeros((cfg.M, 3) + g.shape)
    out_base = poincare_map(zeros, base, cfg, g)
    out_shift = poincare_map(zeros, shifted, cfg, g)
    rolled = np.roll(out_base, -cfg.M // 2, axis=0)
    assert np.abs(out_shift - rolled).max() <= 1e-12 * np.abs(out_base).max()


def test_node_refinement_converges_for_nonharmonic_forcing():
    # time profile exp(sin(w t)) has a full harmonic series; the node error
    # against the harmonic-series solution must at least halve when M doubles
    g = Grid(3, 16, 16.0)
    omega = 2 * math.pi / T
    k1 = 2 * math.pi / (2 * g.L)
    kappa = (math.pi / g.L) ** 2

    def sampler(t, grid):
        data = np.zeros((grid.n,) + grid.shape)
        data[0] = np.cos(k1 * grid.coords()[2]) * math.exp(math.sin(omega * t))
        return Field(grid, data)

    force = PeriodicForce(T=T, sampler=sampler)
    # oracle: harmonic expansion of exp(sin), resolved far beyond both M values
    nh = 128
    tt = T * np.arange(nh) / nh
    ck = np.fft.fft(np.exp(np.sin(omega * tt))) / nh
    freqs = np.fft.fftfreq(nh, d=1.0 / nh)

    def exact_profile(t):
        resp = ck / (kappa + 1j * freqs * omega)
        return float(np.sum(resp * np.exp(1j * freqs * omega * t)).real)

    errs = []
    for M in (8, 16):
        cfg = PicardConfig(M=M, tol=1e-12, max_iter=5, linear_only=True)
        sol = picard_solve(force, cfg, g)
        x3 = np.cos(k1 * g.coords()[2])
        err = max(
            np.abs(sol.snapshots[m][0] - exact_profile(t) * x3).max()
            for m, t in enumerate(sol.node_times)
        )
        errs.append(err)
    assert errs[1] <= 0.5 * errs[0] + 1e-14


def test_tail_rejection():
    g = small_grid()
    force = single_mode_force(1e-5)
    with pytest.raises(ValueError, match="tail"):
        picard_solve(force, PicardConfig(M=8, linear_only=True), g)


def test_outside_contraction_regime_raises():
    g = small_grid()
    force = random_solenoidal_force(T, seed=42, amplitude=2000.0)
    with pytest.raises(ContractionError) as err:
        picard_solve(force, PicardConfig(M=8, tol=1e-8, max_iter=30), g)
    assert err.value.growth_factor > 0


def test_nonlinear_solve_contracts_and_is_solenoidal():
    from stokeslab.grid import divergence

    g = small_grid()
    force = random_solenoidal_force(T, seed=42, amplitude=0.02)
    sol = picard_solve(force, PicardConfig(M=8, tol=1e-8, max_iter=30), g)
    assert sol.converged
    assert sol.iterations <= 20
    hist = sol.residual_history
    assert all(hist[i + 1] < hist[i] for i in range(1, len(hist) - 1))
    for m in range(8):
        u = sol.snapshot(m)
        assert u.data.mean() == pytest.approx(0.0, abs=1e-15)
        scale = np.sqrt(
            sum(l2_norm(gradient(Field(g, u.data[j]))) ** 2 for j in range(3))
        )
        if scale > 0:
            assert l2_norm(divergence(u)) <= 1e-8 * scale


def test_nonlinear_contraction_factor_below_half():
    g = small_grid()
    force = random_solenoidal_force(T, seed=42, amplitude=0.02)
    sol = picard_solve(force, PicardConfig(M=8, tol=1e-10, max_iter=30), g)
    hist = sol.residual_history
    assert all(hist[i + 1] <= 0.5 * hist[i] for i in range(len(hist) - 1))


def test_periodicity_check_zero_solution():
    g = small_grid()
    force = single_mode_force(T, amplitude=0.0)
    sol = picard_solve(force, PicardConfig(M=8), g)
    assert periodicity_check(sol, force, PicardConfig(M=8), steps=32) == 0.0


def test_periodicity_check_linear_single_mode():
    g = small_grid()
    force = single_mode_force(T)
    cfg = PicardConfig(M=16, tol=1e-10, max_iter=5, linear_only=True)
    sol = picard_solve(force, cfg, g)
    assert periodicity_check(sol, force, cfg, steps=512) <= 1e-6


def test_weighted_ratio_stable_under_amplitude_halving():
    g = small_grid()
    cfg = PicardConfig(M=8, tol=1e-9, max_iter=20)
    ratios = []
    for eps in (0.02, 0.01):
        force = random_solenoidal_force(T, seed=9, amplitude=eps)
        sol = picard_solve(force, cfg, g)
        ratios.append(weighted_report(sol, force, 2.0, 2.0, 1.0)["ratio"])
    assert abs(ratios[0] / ratios[1] - 1.0) <= 0.05


def test_weighted_report_zero_case_not_applicable():
    g = small_grid()
    force = single_mode_force(T, amplitude=0.0)
    sol = picard_solve(force, PicardConfig(M=8), g)
    rep = weighted_report(sol, force, 2.0, 2.0, 1.0)
    assert not rep["applicable"]
    assert math.isnan(rep["ratio"])


def test_weighted_report_force_norm_homogeneous():
    g = small_grid()
    cfg = PicardConfig(M=8, tol=1e-8, max_iter=20)
    f1 = random_solenoidal_force(T, seed=9, amplitude=0.01)
    f2 = f1.rescaled(0.02)
    sol = picard_solve(f1, cfg, g)
    r1 = weighted_report(sol, f1, 2.0, 2.0, 1.0)
    r2 = weighted_report(sol, f2, 2.0, 2.0, 1.0)
    assert r2["force_norm"] == pytest.approx(2.0 * r1["force_norm"], rel=1e-13)
