"""Mode densities and photon occupancies of the layered field.

The electric mode density is read off the imaginary part of the Green's
function at coincidence; the magnetic one comes from the flipped-reflection
basis weighted by the local n^2. Their sum (electric part weighted by
|n|^2) is the total mode density that enters energy and pressure.

Photon occupancies attribute the field at a point to the thermal sources
that radiated it: each lossy region contributes in proportion to its
absorption-weighted propagation integral, filled at the Bose-Einstein
occupancy of its own temperature. Equal source temperatures collapse all
three occupancies to the common Bose-Einstein value; between sources at
different temperatures they interpolate, and the matching effective
temperatures are frequency dependent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .greens import BasisPair, WaveBasis, region_integrals
from .stack import LayerStack, Region, TemperatureProfile
from .units import CROSS_SECTION, LDOS_UNIT, c, hbar, k_B


def source_occupation(omega, temperature: float):
    """Bose-Einstein occupancy 1 / (e^{hbar omega / k_B T} - 1)."""
    if temperature <= 0.0:
        raise ConfigError("temperature must be positive")
    x = hbar * np.asarray(omega, dtype=float) / (k_B * temperature)
    return 1.0 / np.expm1(x)


def occupation_temperature(number, omega):
    """Temperature whose Bose-Einstein occupancy equals ``number``.

    Zero occupancy maps to 0 K (nothing radiates at that frequency).
    """
    n = np.asarray(number, dtype=float)
    om = np.asarray(omega, dtype=float)
    with np.errstate(divide="ignore"):
        denom = np.log1p(1.0 / np.where(n > 0, n, 1.0))
    out = np.where(n > 0, hbar * om / (k_B * denom), 0.0)
    if not out.shape:
        return float(out)
    return out


@dataclass(frozen=True, eq=False)
class LdosTriplet:
    """Electric, magnetic, and total mode densities at one point (SI,
    states per volume per angular frequency)."""

    electric: np.ndarray
    magnetic: np.ndarray
    total: np.ndarray
    x: float

    def vacuum_units(self):
        """The same densities in units of the free-space total, 2/(pi c S)."""
        return (
            self.electric / LDOS_UNIT,
            self.magnetic / LDOS_UNIT,
            self.total / LDOS_UNIT,
        )


def ldos(stack: LayerStack, bases: BasisPair, x: float) -> LdosTriplet:
    """Mode densities at x from the coincident Green's functions."""
    om = bases.omega
    nn = stack.layers[stack.layer_index(x)].n_at(om)
    pref = 2.0 * om / (math.pi * c * c * CROSS_SECTION)
    electric = pref * bases.normal.coincident_value(x).imag
    magnetic = pref * (nn * nn * bases.flipped.coincident_value(x)).imag
    total = np.abs(nn) ** 2 * electric + magnetic
    return LdosTriplet(electric, magnetic, total, x)


def ldos_gradient(stack: LayerStack, bases: BasisPair, x: float):
    """d/dx of the three mode densities, within one layer."""
    om = bases.omega
    nn = stack.layers[stack.layer_index(x)].n_at(om)
    pref = 2.0 * om / (math.pi * c * c * CROSS_SECTION)
    d_e = pref * bases.normal.coincident_gradient(x).imag
    d_m = pref * (nn * nn * bases.flipped.coincident_gradient(x)).imag
    return d_e, d_m, np.abs(nn) ** 2 * d_e + d_m


@dataclass(frozen=True, eq=False)
class OccupationSums:
    """Absorption-weighted source integrals behind the occupancies.

    ``d_*`` are the unfilled (denominator) sums, ``f_*`` the
    occupancy-filled ones; primed entries are field-point derivatives
    when requested.
    """

    d_e: np.ndarray
    f_e: np.ndarray
    d_m: np.ndarray
    f_m: np.ndarray
    d_e_prime: np.ndarray | None = None
    f_e_prime: np.ndarray | None = None
    d_m_prime: np.ndarray | None = None
    f_m_prime: np.ndarray | None = None


def occupation_sums(
    stack: LayerStack,
    basis: WaveBasis,
    regions: tuple[Region, ...] | list[Region],
    x: float,
    *,
    gradient: bool = False,
) -> OccupationSums:
    """Accumulate the per-region propagation integrals that weight each
    source's occupancy, optionally with analytic x-derivatives."""
    om = basis.omega
    k0sq = (om / c) ** 2
    shape = om.shape
    d_e = np.zeros(shape)
    f_e = np.zeros(shape)
    d_m = np.zeros(shape)
    f_m = np.zeros(shape)
    dp_e = np.zeros(shape) if gradient else None
    fp_e = np.zeros(shape) if gradient else None
    dp_m = np.zeros(shape) if gradient else None
    fp_m = np.zeros(shape) if gradient else None
    for reg in regions:
        n2im = (stack.layers[reg.layer].n_at(om) ** 2).imag
        ri = region_integrals(basis, x, reg.layer, reg.lo, reg.hi, gradient=gradient)
        eta = source_occupation(om, reg.temperature)
        we = n2im * ri.gg
        wm = n2im * ri.dgg / k0sq
        d_e += we
        f_e += we * eta
        d_m += wm
        f_m += wm * eta
        if gradient:
            wep = n2im * ri.d_gg
            wmp = n2im * ri.d_dgg / k0sq
            dp_e += wep
            fp_e += wep * eta
            dp_m += wmp
            fp_m += wmp * eta
    return OccupationSums(d_e, f_e, d_m, f_m, dp_e, fp_e, dp_m, fp_m)


@dataclass(frozen=True, eq=False)
class PhotonNumberTriplet:
    """Mean photon numbers of the electric, magnetic, and total mode
    densities at one point."""

    electric: np.ndarray
    magnetic: np.ndarray
    total: np.ndarray
    x: float


def photon_numbers(
    stack: LayerStack,
    basis: WaveBasis,
    profile: TemperatureProfile,
    x: float,
) -> PhotonNumberTriplet:
    """Source-resolved mean photon numbers at x.

    A structure with no lossy layer has no thermal sources; all three
    numbers are then zero.
    """
    regions = profile.source_regions(stack)
    om = basis.omega
    if not regions:
        zero = np.zeros(om.shape)
        return PhotonNumberTriplet(zero, zero.copy(), zero.copy(), x)
    sums = occupation_sums(stack, basis, regions, x)
    nn = stack.layers[stack.layer_index(x)].n_at(om)
    an2 = np.abs(nn) ** 2
    electric = sums.f_e / sums.d_e
    magnetic = sums.f_m / sums.d_m
    total = (an2 * sums.f_e + sums.f_m) / (an2 * sums.d_e + sums.d_m)
    return PhotonNumberTriplet(electric, magnetic, total, x)


@dataclass(frozen=True, eq=False)
class TemperatureTriplet:
    """Effective temperatures matching each photon number, in kelvin."""

    electric: np.ndarray
    magnetic: np.ndarray
    total: np.ndarray
    x: float


def effective_temperatures(
    numbers: PhotonNumberTriplet, omega
) -> TemperatureTriplet:
    return TemperatureTriplet(
        occupation_temperature(numbers.electric, omega),
        occupation_temperature(numbers.magnetic, omega),
        occupation_temperature(numbers.total, omega),
        numbers.x,
    )


def ldos_closure_residuals(stack: LayerStack, bases: BasisPair, x: float):
    """Relative mismatch between the coincident-Green's-function mode
    densities and their source-integral forms, summed over every lossy
    layer. Both should agree to roundoff; a large residual flags a broken
    basis solve."""
    om = bases.omega
    k0sq = (om / c) ** 2
    sum_e = np.zeros(om.shape)
    sum_m = np.zeros(om.shape)
    for j, layer in enumerate(stack.layers):
        n2im = (layer.n_at(om) ** 2).imag
        if not np.any(n2im != 0.0):
            continue
        lo, hi = stack.layer_bounds(j)
        ri = region_integrals(bases.normal, x, j, lo, hi)
        sum_e += n2im * ri.gg
        sum_m += n2im * ri.dgg / k0sq
    pref = 2.0 * om**3 / (math.pi * c**4 * CROSS_SECTION)
    surf = ldos(stack, bases, x)
    int_e = pref * sum_e
    int_m = pref * sum_m
    tiny = np.finfo(float).tiny
    res_e = np.abs(surf.electric - int_e) / np.maximum(np.abs(surf.electric), tiny)
    res_m = np.abs(surf.magnetic - int_m) / np.maximum(np.abs(surf.magnetic), tiny)
    return res_e, res_m
