import numpy as np
import pytest
from scipy import integrate

from photonstack.errors import ConfigError, DivergentSourceError
from photonstack.greens import (
    VARIANT_FLIPPED,
    VARIANT_NORMAL,
    greens_function,
    interface_coefficients,
    region_integrals,
    solve_bases,
    solve_wave_basis,
)
from photonstack.stack import ConstantIndex, Layer, LayerStack
from photonstack.units import c, omega_from_ev

from conftest import INF, cavity_stack

RNG = np.random.default_rng(20260211)


def uniform_stack(n: complex, width: float = 8e-6) -> LayerStack:
    return LayerStack.assemble(
        [Layer(INF, ConstantIndex(n), 350.0 if (n * n).imag > 0 else None),
         Layer(width, ConstantIndex(n)),
         Layer(INF, ConstantIndex(n), 350.0 if (n * n).imag > 0 else None)],
        allow_lossless_bounds=(n * n).imag <= 0,
    )


# --- analytic oracles ------------------------------------------------------

def test_homogeneous_green_function_matches_closed_form():
    """In a uniform medium G(x, x') = i e^{ik|x-x'|} / (2k)."""
    n = 1.5 + 0.3j
    stack = uniform_stack(n)
    om = omega_from_ev(np.array([0.05, 0.11, 0.2]))
    basis = solve_wave_basis(stack, om)
    k = n * om / c
    for x, src in [(2e-6, 6e-6), (-3e-6, 4e-6), (1e-6, 1e-6), (12e-6, -5e-6)]:
        got = basis.sample(x, src).value
        want = 1j * np.exp(1j * k * abs(x - src)) / (2 * k)
        assert np.max(np.abs(got - want) / np.abs(want)) < 1e-12


def test_vacuum_green_function_with_lossless_bounds():
    stack = uniform_stack(1.0)
    om = omega_from_ev(np.array([0.08, 0.16]))
    basis = solve_wave_basis(stack, om)
    k0 = om / c
    got = basis.sample(3e-6, 5e-6).value
    want = 1j * np.exp(1j * k0 * 2e-6) / (2 * k0)
    assert np.max(np.abs(got - want) / np.abs(want)) < 1e-12
    # coincident value: Im G(x,x) = 1/(2 k0)
    coin = basis.coincident_value(4e-6)
    assert np.max(np.abs(coin.imag - 1 / (2 * k0)) * 2 * k0) < 1e-12


def test_vacuum_wronskian_is_anchored_plane_wave_form():
    """The right solution is referenced at the last interface, so the
    uniform-medium Wronskian carries a phase e^{-ik0 span}."""
    stack = uniform_stack(1.0)
    om = omega_from_ev(np.array([0.1]))
    basis = solve_wave_basis(stack, om)
    k0 = om / c
    span = stack.interfaces[-1] - stack.interfaces[0]
    w = basis.true_wronskian()
    assert np.max(np.abs(w * np.exp(1j * k0 * span) - 2j * k0) / (2 * k0)) < 1e-10


def test_derivative_jump_across_source():
    """dG/dx jumps by -1 across the source point."""
    stack = cavity_stack()
    om = omega_from_ev(np.array([0.11]))
    basis = solve_wave_basis(stack, om)
    src = 4.3e-6
    h = 1e-9
    # Richardson-extrapolated one-sided derivatives of G in x
    def deriv(side):
        f = lambda d: basis.sample(src + side * d, src).value
        d1 = (f(2 * h) - f(h)) / h
        d2 = (f(h) - f(h / 2)) / (h / 2)
        return side * (2 * d2 - d1)
    jump = deriv(+1) - deriv(-1)
    assert np.max(np.abs(jump + 1.0)) < 1e-6


def test_reciprocity_between_field_and_source():
    stack = cavity_stack()
    om = omega_from_ev(np.linspace(0.02, 0.24, 9))
    basis = solve_wave_basis(stack, om)
    pairs = [(2e-6, 7e-6), (-4e-6, 3e-6), (1e-6, 14e-6), (-6e-6, 16e-6)]
    for x, src in pairs:
        a = basis.sample(x, src).value
        b = basis.sample(src, x).value
        assert np.max(np.abs(a - b) / np.abs(a)) < 1e-8


def test_wronskian_constant_across_layers(cavity_bases):
    basis = cavity_bases.normal
    scaled, log_scale = basis.layer_wronskians()
    true = scaled * np.exp(log_scale)
    ref = true[0]
    for w in true[1:]:
        assert np.max(np.abs(w - ref) / np.abs(ref)) < 1e-10
    assert np.array_equal(basis.true_wronskian(), true[0])


def test_flipped_variant_equals_normal_when_homogeneous():
    stack = uniform_stack(1.8 + 0.2j)
    om = omega_from_ev(np.array([0.07, 0.19]))
    normal = solve_wave_basis(stack, om, VARIANT_NORMAL)
    flipped = solve_wave_basis(stack, om, VARIANT_FLIPPED)
    for x, src in [(1e-6, 6e-6), (-2e-6, 9e-6), (3e-6, 3e-6)]:
        a = normal.sample(x, src).value
        b = flipped.sample(x, src).value
        assert np.max(np.abs(a - b) / np.abs(a)) < 1e-12


def test_interface_coefficients_satisfy_scalar_matching():
    n_l, n_r = 1.5 + 0.3j, 2.5 + 0.5j
    r, t = interface_coefficients(n_l, n_r, VARIANT_NORMAL)
    assert r == pytest.approx((n_l - n_r) / (n_l + n_r))
    assert t == pytest.approx(2 * n_l / (n_l + n_r))
    assert t == pytest.approx(1 + r)
    rf, tf = interface_coefficients(n_l, n_r, VARIANT_FLIPPED)
    assert rf == pytest.approx(-r)
    assert tf == pytest.approx(t)


def test_green_function_continuous_across_interfaces(cavity_bases):
    basis = cavity_bases.normal
    src = 5e-6
    for b in (0.0, 10e-6):
        eps = 1e-12
        lo = basis.sample(b - eps, src).value
        hi = basis.sample(b + eps, src).value
        assert np.max(np.abs(lo - hi) / np.abs(lo)) < 1e-4


def test_greens_function_wrapper_matches_sample(cavity_bases):
    basis = cavity_bases.normal
    s = greens_function(basis, 2e-6, 8e-6)
    direct = basis.sample(2e-6, 8e-6)
    assert np.array_equal(s.value, direct.value)
    assert s.field_point == 2e-6 and s.source == 8e-6


# --- closed-form source integrals vs adaptive quadrature -------------------

def _quad_integrals(basis, x, j, lo, hi):
    """Brute-force integrals over source positions of |G|^2 and of the
    squared field-point derivative |dG/dx|^2, by adaptive quadrature."""
    def gg(s):
        return np.abs(basis.sample(x, s).value[0]) ** 2

    def dgg(s):
        return np.abs(basis.sample(x, s).x_derivative[0]) ** 2

    kink = [x] if lo < x < hi else None
    gg_val, _ = integrate.quad(gg, lo, hi, limit=400, epsabs=0, epsrel=1e-11, points=kink)
    dgg_val, _ = integrate.quad(dgg, lo, hi, limit=400, epsabs=0, epsrel=1e-11, points=kink)
    return gg_val, dgg_val


@pytest.mark.parametrize("x", [4e-6, -2e-6])
def test_region_integrals_match_quadrature_finite(x):
    stack = cavity_stack()
    om = omega_from_ev(np.array([0.11]))
    basis = solve_wave_basis(stack, om)
    cases = [
        (1, 1e-6, 9e-6),          # gap interval, may contain x
        (1, 6e-6, 8e-6),          # fully to the right
        (0, -5e-6, -1e-6),        # inside the left medium
        (2, 11e-6, 15e-6),        # inside the right medium
    ]
    for j, lo, hi in cases:
        got = region_integrals(basis, x, j, lo, hi)
        want_gg, want_dgg = _quad_integrals(basis, x, j, lo, hi)
        assert abs(got.gg[0] - want_gg) / want_gg < 1e-8
        assert abs(got.dgg[0] - want_dgg) / want_dgg < 1e-8


def test_region_integrals_semi_infinite_tails():
    """The closed-form tails equal the boundary sample divided by twice
    the decay rate (the outer solutions are single exponentials)."""
    stack = cavity_stack()
    om = omega_from_ev(np.array([0.05, 0.11, 0.2]))
    basis = solve_wave_basis(stack, om)
    x = 5e-6
    for j, edge in ((0, 0.0), (2, 10e-6)):
        lo, hi = stack.layer_bounds(j)
        got = region_integrals(basis, x, j, lo, hi)
        kappa = basis.wavenumbers[j].imag
        s = basis.sample(x, edge)
        want_gg = np.abs(s.value) ** 2 / (2 * kappa)
        want_dgg = np.abs(s.x_derivative) ** 2 / (2 * kappa)
        assert np.max(np.abs(got.gg - want_gg) / want_gg) < 1e-10
        assert np.max(np.abs(got.dgg - want_dgg) / want_dgg) < 1e-10


def test_lossless_tail_raises():
    stack = uniform_stack(1.0)
    om = omega_from_ev(np.array([0.1]))
    basis = solve_wave_basis(stack, om)
    lo, hi = stack.layer_bounds(2)
    with pytest.raises(DivergentSourceError):
        region_integrals(basis, 4e-6, 2, lo, hi)


def test_region_integral_gradients_match_finite_differences():
    stack = cavity_stack()
    om = omega_from_ev(np.array([0.11]))
    basis = solve_wave_basis(stack, om)
    x = 4.7e-6
    h = 2e-10
    for j, lo, hi in [(0, -INF, 0.0), (1, 0.0, 10e-6), (2, 10e-6, INF)]:
        got = region_integrals(basis, x, j, lo, hi, gradient=True)
        plus = region_integrals(basis, x + h, j, lo, hi)
        minus = region_integrals(basis, x - h, j, lo, hi)
        fd_gg = (plus.gg[0] - minus.gg[0]) / (2 * h)
        fd_dgg = (plus.dgg[0] - minus.dgg[0]) / (2 * h)
        scale_gg = max(abs(fd_gg), abs(got.d_gg[0]))
        scale_dgg = max(abs(fd_dgg), abs(got.d_dgg[0]))
        assert abs(got.d_gg[0] - fd_gg) / scale_gg < 1e-5
        assert abs(got.d_dgg[0] - fd_dgg) / scale_dgg < 1e-5


def test_random_point_region_closure(cavity_bases, cavity):
    """Summing |G|^2 integrals over all source regions, weighted by each
    layer's Im[k^2], reproduces Im G(x, x) exactly."""
    basis = cavity_bases.normal
    om = cavity_bases.omega
    for _ in range(10):
        x = RNG.uniform(-8e-6, 18e-6)
        total = np.zeros(om.shape)
        for j in range(3):
            k2im = (basis.wavenumbers[j] ** 2).imag
            lo, hi = cavity.layer_bounds(j)
            if np.all(k2im == 0.0):
                continue
            total += k2im * region_integrals(basis, x, j, lo, hi).gg
        im_g = basis.coincident_value(x).imag
        assert np.max(np.abs(total - im_g) / np.abs(im_g)) < 1e-10


def test_lossless_outer_rejected_per_frequency():
    stack = LayerStack.assemble(
        [Layer(INF, ConstantIndex(1.0)),
         Layer(5e-6, ConstantIndex(1.5)),
         Layer(INF, ConstantIndex(2.5 + 0.5j), 300.0)],
        allow_lossless_bounds=True,
    )
    rebuilt = LayerStack(stack.layers, stack.interfaces, allow_lossless_bounds=False)
    with pytest.raises(ConfigError, match="outer layer must be lossy"):
        solve_wave_basis(rebuilt, omega_from_ev(0.1))


def test_omega_validation():
    stack = cavity_stack()
    with pytest.raises(ConfigError):
        solve_wave_basis(stack, 0.0)
    with pytest.raises(ConfigError):
        solve_wave_basis(stack, np.array([1e14, -1e14]))


def test_solve_bases_carries_both_variants(cavity):
    om = omega_from_ev(np.array([0.1]))
    pair = solve_bases(cavity, om)
    assert pair.normal.variant == VARIANT_NORMAL
    assert pair.flipped.variant == VARIANT_FLIPPED
    assert np.array_equal(pair.omega, om)
