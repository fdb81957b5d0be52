"""Kernel families: normalization, Levy integrability, concentration, Fourier
symbols and the complement weights, against closed forms and brute quadrature."""

import numpy as np
import pytest
import scipy.integrate as si

from nonlocal_cvp import kernels as K


def test_stable_normalization_coefficient():
    k = K.fractional_kernel(1.0, normalization="stable")
    assert k.params["coef"] == pytest.approx(0.25, abs=1e-15)   # a = a(2-a)/(2|S^0|)


def test_exact_normalization_coefficient():
    k = K.fractional_kernel(1.0, normalization="exact")
    assert k.params["coef"] == pytest.approx(1.0 / np.pi, rel=1e-14)


def test_window_density():
    k = K.window_kernel(beta=2.0, eps=0.1, p=2.0)
    assert k.params["coef"] == pytest.approx(1500.0, rel=1e-12)
    assert k.density(0.05) == pytest.approx(1500.0, rel=1e-12)
    assert k.density(0.11) == 0.0


def test_density_even_nonnegative():
    k = K.fractional_kernel(0.7, normalization="exact")
    r = np.array([0.1, 0.5, 2.0])
    assert np.all(k.density(r) == k.density(-r))
    assert np.all(k.density(r) > 0)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_levy_integral_stable_normalized(alpha):
    k = K.fractional_kernel(alpha, normalization="stable")
    assert K.levy_integral(k) == pytest.approx(1.0, abs=1e-8)


def test_levy_integral_window_normalized():
    k = K.window_kernel(beta=2.0, eps=0.05, p=2.0)
    assert K.levy_integral(k) == pytest.approx(1.0, abs=1e-10)


def test_levy_integral_unnormalized_is_four():
    # closed form: int (1 ^ h^2)|h|^-2 dh = 2(int_0^1 1 + int_1^inf h^-2) = 4
    k = K.fractional_kernel(1.0, normalization="unnormalized")
    assert K.levy_integral(k) == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("builder", [
    lambda: K.log_window_kernel(0.01, 0.5),
    lambda: K.rescaled_kernel(K.fractional_kernel(0.8, normalization="stable"), 0.05),
    lambda: K.rescaled_kernel(K.fractional_kernel(1.4, normalization="stable"), 0.2),
])
def test_levy_integral_dirac_families(builder):
    assert K.levy_integral(builder()) == pytest.approx(1.0, abs=1e-6)


def test_non_integrable_kernel_rejected():
    with pytest.raises(K.NonIntegrableKernelError):
        K.custom_kernel(lambda r: r**-3.5, sing_power=-3.5, sing_coef=1.0,
                        sing_radius=1.0, support=1.0, p=2.0)


def test_concentration_closed_form():
    # 2a[(1-d^(2-a))/(2-a) + 1/a] for delta < 1; equals (2-a)/2 at delta=1
    for alpha, delta in ((1.9, 0.5), (1.0, 0.3), (0.5, 0.8)):
        k = K.fractional_kernel(alpha, normalization="stable")
        a = k.params["coef"]
        ref = 2 * a * ((1 - delta ** (2 - alpha)) / (2 - alpha) + 1.0 / alpha)
        assert K.concentration_mass(k, delta) == pytest.approx(ref, rel=1e-12)
    k = K.fractional_kernel(1.9, normalization="stable")
    assert K.concentration_mass(k, 0.5) < 0.14
    assert K.concentration_mass(k, 1.0) == pytest.approx((2 - 1.9) / 2, rel=1e-12)


def test_concentration_window_inside_delta():
    k = K.window_kernel(beta=2.0, eps=0.05, p=2.0)
    assert K.concentration_mass(k, 0.1) == 0.0


def test_concentration_decreases_along_family():
    grid = [1.0, 1.5, 1.9, 1.99]
    vals = [K.concentration_mass(K.fractional_kernel(a, normalization="stable"), 0.5)
            for a in grid]
    assert vals[-1] < vals[0] / 10.0


def test_levy_integral_normalized_along_eps_grid():
    for eps in np.geomspace(0.02, 0.3, 5):
        k = K.window_kernel(beta=1.0, eps=float(eps), p=2.0)
        assert K.levy_integral(k) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("xi", [0.5, 1.0, 2.0])
def test_symbol_fractional_exact(alpha, xi):
    k = K.fractional_kernel(alpha, normalization="exact")
    assert K.symbol(k, xi) == pytest.approx(xi**alpha, rel=1e-6)


def test_symbol_zero_and_even():
    k = K.fractional_kernel(1.2, normalization="exact")
    assert K.symbol(k, 0.0) == 0.0
    for xi in np.linspace(0.3, 3.0, 7):
        assert abs(K.symbol(k, xi) - K.symbol(k, -xi)) <= 1e-12 * max(1, K.symbol(k, xi))


def test_symbol_compact_kernel_brute_force():
    k = K.window_kernel(beta=2.0, eps=0.3, p=2.0)
    xi = 1.7
    ref = 2 * si.quad(lambda h: (1 - np.cos(xi * h)) * float(k.density(h)), 0, 0.3)[0]
    assert K.symbol(k, xi) == pytest.approx(ref, rel=1e-9)


def test_symbol_rescaled_kernel_brute_force():
    # rescaled fractional: singular core, power middle band, power far branch
    k = K.rescaled_kernel(K.fractional_kernel(1.2, normalization="stable"), 0.2)
    xi = 1.3
    from nonlocal_cvp import quadrature
    t, w = quadrature.jacobi_rule(0.0, 0.2, 2.0 + k.sing_power, 60)
    inner = (w * (2 * np.sin(0.5 * xi * t) ** 2 / t**2)
             * k.sing_coef * k.smooth_factor(t)).sum()
    x, w = quadrature.composite_rule(np.geomspace(0.2, 2000.0, 4000), 10)
    mid = (w * (1 - np.cos(xi * x)) * k.density(x)).sum()
    ref = 2 * (inner + mid + k.tail_mass(2000.0))
    assert K.symbol(k, xi) == pytest.approx(ref, rel=1e-6)


def test_weight_essinf_closed_form():
    k = K.fractional_kernel(1.0, normalization="unnormalized")
    w = K.WeightSpec(k, (0.4, 0.6), "essinf")
    assert K.weight_eval(w, 2.0) == pytest.approx(1.6**-2, rel=1e-13)
    # grid-minimization oracle
    ys = np.linspace(0.4, 0.6, 10_000)
    assert K.weight_eval(w, 2.0) == pytest.approx(k.density(np.abs(2.0 - ys)).min(), rel=1e-6)


def test_weight_essinf_center_symmetry():
    k = K.fractional_kernel(0.8, normalization="exact")
    w = K.WeightSpec(k, (0.4, 0.6), "essinf")
    # x at the center of K: minimum attained at either endpoint, |K|/2 away
    assert K.weight_eval(w, 0.5) == pytest.approx(float(k.density(0.1)), rel=1e-13)


def test_weight_integral_closed_form():
    k = K.fractional_kernel(1.0, normalization="unnormalized")
    w = K.WeightSpec(k, (0.4, 0.6), "integral")
    assert K.weight_eval(w, 2.0) == pytest.approx(1 / 1.4 - 1 / 1.6, rel=1e-12)


def test_weight_integral_capped_quadrature_oracle():
    k = K.fractional_kernel(1.0, normalization="unnormalized")
    w = K.WeightSpec(k, (0.0, 1.0), "integral")
    ref = si.quad(lambda y: min(1.0, abs(2.0 - y) ** -2.0), 0, 1)[0]
    assert K.weight_eval(w, 2.0) == pytest.approx(ref, rel=1e-10)
    ref_in = si.quad(lambda y: min(1.0, abs(0.3 - y) ** -2.0), 0, 1, points=[0.3])[0]
    assert K.weight_eval(w, 0.3) == pytest.approx(ref_in, rel=1e-10)


def test_weight_monotone_in_distance():
    k = K.fractional_kernel(1.3, normalization="exact")
    w = K.WeightSpec(k, (0.3, 0.7), "essinf")
    xs = [0.8, 1.0, 1.4, 2.0, 3.0]
    vals = [K.weight_eval(w, x) for x in xs]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_weight_grid_fallback_non_monotone_kernel():
    k = K.log_window_kernel(0.01, 0.5)    # vanishes near 0: not non-increasing
    w = K.WeightSpec(k, (0.4, 0.6), "essinf")
    assert K.weight_eval(w, 0.55) == 0.0


def test_make_kernel_dispatch():
    k = K.make_kernel("fractional", alpha=0.9, normalization="stable")
    assert k.family == "fractional"
    k2 = K.make_kernel("rescaled", base={"family": "fractional", "alpha": 0.8,
                                         "normalization": "stable"}, eps=0.1)
    assert k2.family == "rescaled"
    with pytest.raises(ValueError):
        K.make_kernel("nope")
    with pytest.raises(ValueError):
        K.make_kernel("fractional", alpha=2.5)


def test_singular_exponent_consistency():
    k = K.fractional_kernel(1.3, normalization="exact")
    assert k.singular_exponent == pytest.approx(1.3)
    kw = K.window_kernel(beta=2.0, eps=0.1, p=2.0)
    assert kw.singular_exponent == pytest.approx(2.0 - 2.0 - 1.0)


def test_tail_mass_matches_quadrature():
    # band identity: tail(R) - tail(R2) = int_R^R2 nu, with a finite band
    # scipy.quad can certify
    for build in (lambda: K.fractional_kernel(0.7, normalization="exact"),
                  lambda: K.window_kernel(1.5, 0.2, 2.0),
                  lambda: K.rescaled_kernel(K.fractional_kernel(1.1, normalization="stable"), 0.1)):
        k = build()
        for R, R2 in ((0.05, 0.5), (0.5, 1.5), (0.11, 3.0)):
            hi = min(R2, k.support)
            if R >= hi:
                assert k.tail_mass(R) == 0.0
                continue
            ref = si.quad(lambda r: float(k.density(r)), R, hi,
                          points=[b for b in k.breakpoints if R < b < hi] or None,
                          limit=400)[0]
            band = k.tail_mass(R) - k.tail_mass(R2)
            assert band == pytest.approx(ref, rel=1e-7)
