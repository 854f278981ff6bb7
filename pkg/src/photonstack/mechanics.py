"""Field fluctuations, energy density, pressure, and Casimir force terms.

Spectral energy density and pressure share one expression,
``hbar omega rho_tot (n_tot + 1/2)``; the force density is its negative
spatial derivative away from interfaces, split into three named pieces:

* zero-point: ``-(hbar omega / 2) d(rho_tot)/dx``,
* thermal: ``-hbar omega d(rho_tot)/dx n_tot``,
* occupation-gradient: ``-hbar omega rho_tot d(n_tot)/dx``.

The last piece vanishes at thermal equilibrium; the first two trade off
against each other through the mode-density gradient.

All spatial derivatives are closed-form (the mode densities through the
coincident Green's-function gradient, the occupancies through the
analytic derivatives of the source integrals), so the decomposition sums
exactly to the energy-density gradient at smooth points. Interfaces
carry delta-function force contributions that pointwise evaluation
cannot see; net forces on a body therefore always use the pressure
difference between two smooth probe points, which includes them
implicitly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import InterfacePointError
from .greens import BasisPair, solve_bases
from .spectral import (
    LdosTriplet,
    PhotonNumberTriplet,
    TemperatureTriplet,
    effective_temperatures,
    ldos,
    ldos_gradient,
    occupation_sums,
    photon_numbers,
)
from .stack import LayerSlices, LayerStack, TemperatureProfile
from .units import c, epsilon_0, hbar


@dataclass(frozen=True, eq=False)
class EnergyPressureSample:
    """Spectral field fluctuations, energy density, and pressure at x.

    ``energy_density`` and ``pressure`` are one quantity; both names are
    kept because they enter different balances.
    """

    e_fluct: np.ndarray
    b_fluct: np.ndarray
    energy_density: np.ndarray
    pressure: np.ndarray
    x: float


def energy_pressure(
    stack: LayerStack, bases: BasisPair, profile: TemperatureProfile, x: float
) -> EnergyPressureSample:
    om = bases.omega
    dens = ldos(stack, bases, x)
    nums = photon_numbers(stack, bases.normal, profile, x)
    e_fluct = (hbar * om / epsilon_0) * dens.electric * (nums.electric + 0.5)
    b_fluct = (hbar * om / (epsilon_0 * c * c)) * dens.magnetic * (nums.magnetic + 0.5)
    u = hbar * om * dens.total * (nums.total + 0.5)
    return EnergyPressureSample(e_fluct, b_fluct, u, u, x)


@dataclass(frozen=True, eq=False)
class ForceDensitySample:
    """The three force-density terms and their sum at one smooth point;
    fd_residual carries the finite-difference cross-check when requested."""

    zero_point: np.ndarray
    thermal: np.ndarray
    occupation: np.ndarray
    total: np.ndarray
    x: float
    fd_residual: np.ndarray | None = None


def _total_number_and_gradient(stack, basis, profile, x):
    regions = profile.source_regions(stack)
    om = basis.omega
    if not regions:
        zero = np.zeros(om.shape)
        return zero, zero
    sums = occupation_sums(stack, basis, regions, x, gradient=True)
    an2 = np.abs(stack.layers[stack.layer_index(x)].n_at(om)) ** 2
    denom = an2 * sums.d_e + sums.d_m
    n_tot = (an2 * sums.f_e + sums.f_m) / denom
    n_tot_prime = (
        an2 * sums.f_e_prime
        + sums.f_m_prime
        - n_tot * (an2 * sums.d_e_prime + sums.d_m_prime)
    ) / denom
    return n_tot, n_tot_prime


def _profile_edges(stack: LayerStack, profile: TemperatureProfile | None):
    """Interface positions plus any interior slice boundaries; the
    occupancy gradient jumps across each of them."""
    edges = list(stack.interfaces)
    if profile is not None:
        for entry in profile.entries:
            if isinstance(entry, LayerSlices):
                edges.extend(entry.boundaries[1:-1])
    return sorted(edges)


def force_density(
    stack: LayerStack,
    bases: BasisPair,
    profile: TemperatureProfile,
    x: float,
    *,
    fd_check: bool = False,
) -> ForceDensitySample:
    """Analytic force-density decomposition at a non-interface point.

    With ``fd_check`` the sample also carries the relative deviation of
    the summed terms from a Richardson-extrapolated central difference of
    the energy density (step: local wavelength / 1000, shortened near
    boundaries so the probes never cross one).
    """
    if any(x == b for b in stack.interfaces):
        raise InterfacePointError(
            f"x = {x!r} lies on an interface where the force density holds a "
            "delta contribution; integrate via the pressure difference instead"
        )
    om = bases.omega
    _, _, d_rho_tot = ldos_gradient(stack, bases, x)
    rho_tot = ldos(stack, bases, x).total
    n_tot, n_tot_prime = _total_number_and_gradient(stack, bases.normal, profile, x)
    zcf = -0.5 * hbar * om * d_rho_tot
    tcf = -hbar * om * d_rho_tot * n_tot
    ncf = -hbar * om * rho_tot * n_tot_prime
    total = zcf + tcf + ncf
    fd = None
    if fd_check:
        fd = _fd_residual(stack, bases, profile, x, total)
    return ForceDensitySample(zcf, tcf, ncf, total, x, fd)


def _fd_residual(stack, bases, profile, x, total):
    om = bases.omega
    n_re = max(
        float(np.max(np.real(layer.n_at(om)))) for layer in stack.layers
    )
    lam = 2.0 * np.pi * c / (float(np.max(om)) * n_re)
    h = lam / 1000.0
    dist = min(abs(x - b) for b in _profile_edges(stack, profile))
    if dist < 4.0 * h:
        h = dist / 4.0
    def grad(step):
        up = energy_pressure(stack, bases, profile, x + step).energy_density
        dn = energy_pressure(stack, bases, profile, x - step).energy_density
        return (up - dn) / (2.0 * step)
    coarse = grad(h)
    fine = grad(0.5 * h)
    fd = -(4.0 * fine - coarse) / 3.0
    scale = np.maximum(np.abs(total), np.abs(fd))
    tiny = np.finfo(float).tiny
    return np.abs(total - fd) / np.maximum(scale, tiny)


def net_force(
    stack: LayerStack,
    bases: BasisPair,
    profile: TemperatureProfile,
    x1: float,
    x2: float,
):
    """Spectral force per unit area on the material between two smooth
    probe points, positive toward +x; the pressure-difference form keeps
    the interface delta contributions."""
    if not x1 < x2:
        raise InterfacePointError("probe points must satisfy x1 < x2")
    p1 = energy_pressure(stack, bases, profile, x1).pressure
    p2 = energy_pressure(stack, bases, profile, x2).pressure
    return p1 - p2


def net_force_occupation_route(
    stack: LayerStack,
    bases: BasisPair,
    profile: TemperatureProfile,
    x1: float,
    x2: float,
):
    """Equivalent force expression for probes with equal mode density
    (mirror-symmetric structures): hbar omega rho_tot (n1 - n2)."""
    om = bases.omega
    rho1 = ldos(stack, bases, x1).total
    n1 = photon_numbers(stack, bases.normal, profile, x1).total
    n2 = photon_numbers(stack, bases.normal, profile, x2).total
    return hbar * om * rho1 * (n1 - n2)


@dataclass(frozen=True, eq=False)
class IntegratedForce:
    """Frequency-integrated net force per area, thermal part and finite-
    grid zero-point part reported separately (the latter has no cutoff
    and grows with the grid's upper edge)."""

    thermal: float
    zero_point: float
    x1: float
    x2: float


def frequency_integrated_force(
    stack: LayerStack,
    profile: TemperatureProfile,
    x1: float,
    x2: float,
    omega_grid,
) -> IntegratedForce:
    om = np.asarray(omega_grid, dtype=float)
    if om.ndim != 1 or om.size < 2 or np.any(np.diff(om) <= 0):
        raise InterfacePointError("frequency grid must be 1D and increasing")
    bases = solve_bases(stack, om)
    rho1 = ldos(stack, bases, x1).total
    rho2 = ldos(stack, bases, x2).total
    n1 = photon_numbers(stack, bases.normal, profile, x1).total
    n2 = photon_numbers(stack, bases.normal, profile, x2).total
    thermal_integrand = hbar * om * (rho1 * n1 - rho2 * n2)
    zero_integrand = 0.5 * hbar * om * (rho1 - rho2)
    peak = float(np.max(np.abs(thermal_integrand)))
    if peak > 0 and abs(float(thermal_integrand[-1])) > 1e-6 * peak:
        warnings.warn(
            "thermal force integrand is not negligible at the grid's upper "
            "edge; widen the frequency grid",
            stacklevel=2,
        )
    return IntegratedForce(
        thermal=float(trapezoid(thermal_integrand, om)),
        zero_point=float(trapezoid(zero_integrand, om)),
        x1=x1,
        x2=x2,
    )


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Every pointwise spectral quantity at one position, over the basis
    frequencies; force is None on interface points."""

    x: float
    densities: LdosTriplet
    numbers: PhotonNumberTriplet
    temperatures: TemperatureTriplet
    energy: EnergyPressureSample
    force: ForceDensitySample | None


def spectral_field(
    stack: LayerStack,
    bases: BasisPair,
    profile: TemperatureProfile,
    x: float,
    *,
    with_force: bool = True,
) -> SpectralField:
    densities = ldos(stack, bases, x)
    numbers = photon_numbers(stack, bases.normal, profile, x)
    temps = effective_temperatures(numbers, bases.omega)
    energy = energy_pressure(stack, bases, profile, x)
    force = None
    if with_force and not any(x == b for b in stack.interfaces):
        force = force_density(stack, bases, profile, x)
    return SpectralField(x, densities, numbers, temps, energy, force)
