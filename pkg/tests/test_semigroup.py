import csv

import numpy as np
import pytest

from stokeslab.grid import Field, Grid, integrate, l2_norm
from stokeslab.corpus import corpus_seeds, random_smooth_field, refine_field
from stokeslab.semigroup import (
    decay_harness,
    fit_power_law,
    fractional_integral,
    heat_apply,
    heat_kernel,
    heat_kernel_field,
    kernel_domination_constant,
    leray_project,
    predicted_exponent,
    riesz_gradient_check,
    semigroup_gradient_apply,
    stokes_apply,
    write_decay_csv,
)


def test_heat_kernel_point_values():
    t = 1.0 / (4.0 * np.pi)
    assert heat_kernel(3, t, np.zeros(3)) == pytest.approx(1.0, rel=1e-14)
    t = 0.7
    x = np.array([2.0 * np.sqrt(t), 0.0, 0.0])
    expected = (4 * np.pi * t) ** -1.5 * np.exp(-1.0)
    assert heat_kernel(3, t, x) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ValueError):
        heat_kernel(3, 0.0, np.zeros(3))


def test_heat_kernel_unit_mass():
    g = Grid(3, 64, 12.0)
    total = np.sum(heat_kernel_field(g, 1.0).data) * g.cell_volume
    assert abs(total - 1.0) < 1e-10


def test_heat_apply_gaussian_semigroup():
    # evolving the kernel at t0 for time t gives the kernel at t0 + t
    g = Grid(3, 64, 16.0)
    t0, t = 1.0, 1.5
    evolved = heat_apply(heat_kernel_field(g, t0), t)
    target = heat_kernel_field(g, t0 + t)
    rel = np.abs(evolved.data - target.data).max() / target.data.max()
    assert rel < 1e-8


def test_heat_apply_mode_eigenvalue():
    g = Grid(3, 32, 8.0)
    k = 2 * np.pi * 2 / (2 * g.L)
    f = Field(g, np.cos(k * g.coords()[0]))
    out = heat_apply(f, 0.8)
    assert np.abs(out.data - np.exp(-0.8 * k * k) * f.data).max() < 1e-12


def test_heat_apply_identity_and_rejection():
    g = Grid(3, 16, 4.0)
    f = random_smooth_field(g, 1)
    assert np.array_equal(heat_apply(f, 0.0).data, f.data)
    with pytest.raises(ValueError):
        heat_apply(f, -0.1)


def test_heat_semigroup_law():
    g = Grid(3, 32, 8.0)
    f = random_smooth_field(g, 9)
    for a in (0.1, 0.5, 1.0):
        for b in (0.1, 0.5, 1.0):
            lhs = heat_apply(f, a + b)
            rhs = heat_apply(heat_apply(f, a), b)
            assert np.abs(lhs.data - rhs.data).max() <= 1e-10 * np.abs(lhs.data).max()


def test_heat_l2_contraction():
    g = Grid(3, 32, 8.0)
    for seed in corpus_seeds(3, 4):
        f = random_smooth_field(g, seed)
        n0 = l2_norm(f)
        for t in (0.1, 1.0, 8.0):
            assert l2_norm(heat_apply(f, t)) <= n0 * (1 + 1e-13)


def test_heat_mass_conservation():
    g = Grid(3, 32, 8.0)
    f = random_smooth_field(g, 4)
    for t in (0.5, 2.0):
        assert heat_apply(f, t).data.mean() == pytest.approx(f.data.mean(), abs=1e-14)


def test_leray_annihilates_gradients():
    from stokeslab.grid import gradient

    g = Grid(3, 32, 8.0)
    gr = gradient(random_smooth_field(g, 5))
    out = leray_project(gr)
    assert l2_norm(out) <= 1e-10 * l2_norm(gr)


def test_leray_keeps_solenoidal_mode():
    g = Grid(3, 32, 8.0)
    k = 2 * np.pi / (2 * g.L)
    data = np.zeros((3,) + g.shape)
    data[0] = np.cos(3 * k * g.coords()[2])    # e1 amplitude, wavevector along e3
    v = Field(g, data)
    out = leray_project(v)
    assert np.abs(out.data - v.data).max() < 1e-12


def test_leray_idempotent_and_selfadjoint():
    from stokeslab.grid import inner

    g = Grid(3, 32, 8.0)
    v = random_smooth_field(g, 6, components=3)
    w = random_smooth_field(g, 7, components=3)
    pv = leray_project(v)
    ppv = leray_project(pv)
    assert np.abs(ppv.data - pv.data).max() <= 1e-12 * np.abs(pv.data).max()
    lhs = sum(inner(Field(g, pv.data[j]), Field(g, w.data[j])) for j in range(3))
    pw = leray_project(w)
    rhs = sum(inner(Field(g, v.data[j]), Field(g, pw.data[j])) for j in range(3))
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)


def test_leray_output_solenoidal():
    from stokeslab.grid import divergence, gradient

    g = Grid(3, 32, 8.0)
    v = random_smooth_field(g, 8, components=3)
    pv = leray_project(v)
    scale = np.sqrt(sum(l2_norm(gradient(Field(g, pv.data[j]))) ** 2 for j in range(3)))
    assert l2_norm(divergence(pv)) <= 1e-10 * scale


def test_stokes_equals_heat_on_solenoidal():
    g = Grid(3, 32, 8.0)
    v = leray_project(random_smooth_field(g, 10, components=3))
    t = 0.7
    a = stokes_apply(v, t)
    b = heat_apply(v, t)
    assert np.abs(a.data - b.data).max() <= 1e-12 * np.abs(b.data).max()


def test_stokes_kills_gradients_all_t():
    from stokeslab.grid import gradient

    g = Grid(3, 32, 8.0)
    gr = gradient(random_smooth_field(g, 11))
    for t in (0.0, 0.5, 2.0):
        assert l2_norm(stokes_apply(gr, t)) <= 1e-10 * l2_norm(gr)


def test_projection_commutes_with_heat():
    g = Grid(3, 32, 8.0)
    v = random_smooth_field(g, 12, components=3)
    t = 0.3
    a = leray_project(heat_apply(v, t))
    b = heat_apply(leray_project(v), t)
    assert np.abs(a.data - b.data).max() <= 1e-12 * np.abs(b.data).max()


def test_gradient_apply_antisymmetry_and_mode():
    g = Grid(3, 32, 8.0)
    gauss = Field(g, np.exp(-g.radius_sq()))
    out = semigroup_gradient_apply(gauss, 0.5, 0)
    flipped = out.data[::-1]            # x -> -x on axis 0 up to the grid shift
    assert np.abs(np.roll(flipped, 1, axis=0) + out.data).max() < 1e-10
    k = 2 * np.pi * 3 / (2 * g.L)
    mode = Field(g, np.cos(k * g.coords()[1]))
    t = 0.4
    dy = semigroup_gradient_apply(mode, t, 1)
    assert np.abs(dy.data - (-k * np.exp(-t * k * k) * np.sin(k * g.coords()[1]))).max() < 1e-11
    with pytest.raises(ValueError):
        semigroup_gradient_apply(mode, 0.0, 1)


def test_gradient_apply_smoothing_bound():
    # sup_kappa (t kappa)^(1/2) e^(-t kappa) = (2e)^(-1/2) bounds the ratio
    g = Grid(3, 32, 16.0)
    cap = (2 * np.e) ** -0.5
    for seed in corpus_seeds(31, 3):
        u = random_smooth_field(g, seed)
        n0 = l2_norm(u)
        for t in (0.25, 1.0, 4.0):
            grad_sq = sum(
                l2_norm(semigroup_gradient_apply(u, t, j)) ** 2 for j in range(3)
            )
            assert np.sqrt(t * grad_sq) / n0 <= cap * (1 + 1e-10)


def test_fractional_integral_gaussian_oracle():
    # I_2 of exp(-|y|^2) at the origin equals 4 pi * int r e^{-r^2} dr = 2 pi
    g = Grid(3, 96, 5.0)
    conv = fractional_integral(Field(g, np.exp(-g.radius_sq())), 2.0)
    center = (g.N // 2,) * 3
    assert abs(conv.data[center] - 2 * np.pi) / (2 * np.pi) < 1e-3


def test_fractional_integral_positive():
    g = Grid(3, 48, 8.0)
    f = Field(g, np.exp(-g.radius_sq()))
    out = fractional_integral(f, 1.5)
    assert out.data.min() >= 0.0


def test_fractional_integral_rejects_bad_order():
    g = Grid(3, 16, 4.0)
    f = Field(g, np.exp(-g.radius_sq()))
    for lam in (0.0, 3.0, -1.0):
        with pytest.raises(ValueError):
            fractional_integral(f, lam)


def test_fractional_two_weight_ratio_stable():
    # lam = n(1/p - 1/q) with p = 2, q = 6; same function on both grids
    coarse = random_smooth_field(Grid(3, 48, 8.0), 17)
    fine = refine_field(coarse)
    ratios = []
    for f in (coarse, fine):
        out = fractional_integral(f, 1.0)
        ratios.append(integrate(out, 6.0, 0.5) / integrate(f, 2.0, 0.5))
    assert abs(ratios[1] / ratios[0] - 1.0) < 0.05


def test_heat_kernel_dominated_by_riesz_kernel():
    # E_t(x) <= C |x|^(lam-n) t^(-lam/2) with the analytic constant
    g = Grid(3, 48, 12.0)
    lam = 1.5
    C = kernel_domination_constant(3, lam)
    r = np.sqrt(g.radius_sq())
    mask = r > 0
    for t in (1.0, 4.0):
        E = heat_kernel_field(g, t).data
        bound = C * r[mask] ** (lam - 3) * t ** (-lam / 2.0)
        assert np.all(E[mask] <= bound * (1 + 1e-12))


def test_riesz_ratio_unweighted_is_one():
    g = Grid(3, 32, 8.0)
    f = random_smooth_field(g, 19)
    assert riesz_gradient_check(f, 2.0, 0.0) == pytest.approx(1.0, abs=1e-10)


def test_riesz_ratio_weighted_corpus():
    g = Grid(3, 48, 16.0)
    ratios = [
        riesz_gradient_check(random_smooth_field(g, seed), 2.0, 1.0)
        for seed in corpus_seeds(5, 5)
    ]
    assert max(ratios) < 1.2


def test_riesz_rejects_constant():
    g = Grid(3, 16, 4.0)
    with pytest.raises(ValueError):
        riesz_gradient_check(Field(g, np.full(g.shape, 2.0)))


def test_fit_power_law_exact():
    t = np.geomspace(1.0, 64.0, 9)
    fit = fit_power_law(t, t**-1.0)
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_decay_harness_rejections():
    g = Grid(3, 16, 8.0)
    u = random_smooth_field(g, 2, components=3)
    with pytest.raises(ValueError):
        decay_harness(u, 4.0, 2.0, 0.0, 0.0, 0, [1.0, 2.0])     # p > q
    with pytest.raises(ValueError):
        decay_harness(u, 2.0, 2.0, 2.0, 0.0, 0, [1.0, 2.0])     # s too large
    with pytest.raises(ValueError):
        decay_harness(u, 2.0, 2.0, 1.0, -2.0, 0, [1.0, 2.0])    # s0 below -n/q


def test_decay_harness_weighted_case():
    g = Grid(3, 48, 16.0)
    u = random_smooth_field(g, 77, components=3)
    ladder = np.geomspace(1.0, 64.0, 9)
    series, fit, compliance = decay_harness(u, 2.0, 2.0, 1.0, 0.0, 0, ladder)
    assert compliance <= 1.05
    assert fit.slope <= predicted_exponent(3, 2.0, 2.0, 1.0, 0.0, 0) + 0.1
    assert np.all(np.diff(series.t) > 0)


def test_decay_csv_roundtrip(tmp_path):
    g = Grid(3, 32, 16.0)
    u = random_smooth_field(g, 78, components=3)
    series, fit, _ = decay_harness(u, 2.0, 6.0, 0.0, 0.0, 0, np.geomspace(1, 16, 5))
    path = tmp_path / "decay.csv"
    write_decay_csv(path, series, fit)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "norm", "predicted_envelope", "ratio"]
    assert len(rows) >= 7
    back = np.array([[float(c) for c in row] for row in rows[1:6]])
    assert np.array_equal(back[:, 0], series.t)
    assert np.array_equal(back[:, 1], series.values)


def test_leray_idempotent_for_rough_data_any_dimension():
    # full-spectrum input: unpaired Nyquist planes are dropped, so a second
    # application changes nothing and the output is exactly solenoidal
    from stokeslab.grid import divergence, gradient

    for n, N in ((3, 16), (4, 12)):
        g = Grid(n, N, 2.0)
        rng = np.random.default_rng(0)
        v = Field(g, rng.standard_normal((n,) + g.shape))
        pv = leray_project(v)
        ppv = leray_project(pv)
        assert np.abs(ppv.data - pv.data).max() <= 1e-12
        gscale = np.sqrt(
            sum(l2_norm(gradient(Field(g, pv.data[j]))) ** 2 for j in range(n))
        )
        assert l2_norm(divergence(pv)) <= 1e-12 * gscale
