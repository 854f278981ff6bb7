"""Green's functions of the 1D Helmholtz operator in layered media.

Conventions
-----------
G solves ``G'' + (omega n(x)/c)^2 G = -delta(x - x')`` with outgoing-wave
behavior in both semi-infinite outer layers (time dependence e^{-i omega t},
so e^{+ikx} travels right). It is assembled from two homogeneous solutions:

* ``psi_left``: purely left-going in the first layer,
* ``psi_right``: purely right-going in the last layer,

as ``G(x, x') = -psi_left(x_<) psi_right(x_>) / W`` with the Wronskian
``W = psi_left psi_right' - psi_left' psi_right``, a constant across the
structure. In a uniform medium this reduces to ``i e^{ik|x-x'|} / (2k)``.

Within each layer a solution is stored as an amplitude pair (a, b) of
``a e^{ik(x-ref)} + b e^{-ik(x-ref)}`` about a per-layer reference point,
together with a real log-scale factor: the physical solution is
``exp(scale) * (a e^{...} + b e^{...})``. Amplitudes are renormalized at
every interface crossing, so the transfer march never overflows no matter
how optically thick the layers are. Pointwise evaluation deep inside a
layer and the closed-form layer integrals keep at most one factor of
``exp(2 Im[k] * span)``, which bounds usable spans to a few hundred
absorption lengths; that covers any micron-scale structure by a wide
margin.

The magnetic mode density calls for an auxiliary "flipped-reflection"
variant of the basis in which every interface reflection coefficient is
negated while transmission is kept; it matches the normal variant
whenever all layers share one index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateBasisError, DivergentSourceError
from .stack import LayerStack
from .units import c

VARIANT_NORMAL = "normal"
VARIANT_FLIPPED = "flipped"

_DEGENERACY_FLOOR = 1e-13
_WRONSKIAN_DRIFT_TOL = 1e-8
_SERIES_THRESHOLD = 1e-6


def interface_coefficients(n_left, n_right, variant: str = VARIANT_NORMAL):
    """Normal-incidence reflection and transmission amplitudes for a wave
    arriving from the left medium.

    Returns ``(r, t)`` with ``r = (n_left - n_right)/(n_left + n_right)``
    and ``t = 2 n_left/(n_left + n_right)``; the flipped variant negates
    r and keeps t.
    """
    nl = np.asarray(n_left, dtype=complex)
    nr = np.asarray(n_right, dtype=complex)
    if np.any(nl.real <= 0) or np.any(nr.real <= 0):
        raise ConfigError("refractive indices must have positive real part")
    if np.any(nl.imag < 0) or np.any(nr.imag < 0):
        raise ConfigError("refractive indices must have nonnegative imaginary part")
    if variant not in (VARIANT_NORMAL, VARIANT_FLIPPED):
        raise ConfigError(f"unknown basis variant {variant!r}")
    denom = nl + nr
    r = (nl - nr) / denom
    t = 2.0 * nl / denom
    if variant == VARIANT_FLIPPED:
        r = -r
    if not r.shape:
        return complex(r), complex(t)
    return r, t


@dataclass(frozen=True, eq=False)
class GreensSample:
    """G and its field-point derivative at one (field, source) pair."""

    value: np.ndarray
    x_derivative: np.ndarray
    field_point: float
    source: float
    variant: str


@dataclass(frozen=True, eq=False)
class WaveBasis:
    """The two outgoing solutions of one stack at a set of frequencies.

    All amplitude arrays have shape ``(n_layers,) + omega.shape``. The
    stored Wronskian ``wronskian_scaled[j]`` belongs to the rescaled
    amplitudes of layer j; the physical Wronskian is recovered by
    multiplying with ``exp(scale_left[j] + scale_right[j])``.
    """

    stack: LayerStack
    omega: np.ndarray
    variant: str
    wavenumbers: np.ndarray
    refs: tuple[float, ...]
    a_left: np.ndarray
    b_left: np.ndarray
    scale_left: np.ndarray
    a_right: np.ndarray
    b_right: np.ndarray
    scale_right: np.ndarray
    wronskian_scaled: np.ndarray

    # -- solution evaluation -------------------------------------------------

    def _solution(self, a, b, j: int, x: float):
        u = x - self.refs[j]
        kk = self.wavenumbers[j]
        ep = np.exp(1j * kk * u)
        em = np.exp(-1j * kk * u)
        phi = a[j] * ep + b[j] * em
        dphi = 1j * kk * (a[j] * ep - b[j] * em)
        return phi, dphi

    def _left(self, j: int, x: float):
        return self._solution(self.a_left, self.b_left, j, x)

    def _right(self, j: int, x: float):
        return self._solution(self.a_right, self.b_right, j, x)

    def solution_value(self, side: str, x: float):
        """Physical value and derivative of one basis solution at x.

        Intended for verification; applies the stored log-scale factor,
        which can overflow for extremely thick lossy interior layers.
        """
        j = self.stack.layer_index(x)
        if side == "left":
            phi, dphi = self._left(j, x)
            s = np.exp(self.scale_left[j])
        elif side == "right":
            phi, dphi = self._right(j, x)
            s = np.exp(self.scale_right[j])
        else:
            raise ConfigError("side must be 'left' or 'right'")
        return phi * s, dphi * s

    def layer_wronskians(self):
        """Per-layer scaled Wronskians and their log-scale offsets."""
        return self.wronskian_scaled, self.scale_left + self.scale_right

    def true_wronskian(self):
        """Physical Wronskian evaluated from the first layer's amplitudes."""
        return self.wronskian_scaled[0] * np.exp(self.scale_left[0] + self.scale_right[0])

    # -- Green's function ----------------------------------------------------

    def coincident_value(self, x: float):
        j = self.stack.layer_index(x)
        phi_l, _ = self._left(j, x)
        phi_r, _ = self._right(j, x)
        return -phi_l * phi_r / self.wronskian_scaled[j]

    def coincident_gradient(self, x: float):
        """d/dx of G(x, x) along the diagonal, within one layer."""
        j = self.stack.layer_index(x)
        phi_l, dphi_l = self._left(j, x)
        phi_r, dphi_r = self._right(j, x)
        return -(dphi_l * phi_r + phi_l * dphi_r) / self.wronskian_scaled[j]

    def sample(self, x: float, source: float) -> GreensSample:
        xlo, xhi = (x, source) if x <= source else (source, x)
        ja = self.stack.layer_index(xlo)
        jb = self.stack.layer_index(xhi)
        phi_l, dphi_l = self._left(ja, xlo)
        phi_r, dphi_r = self._right(jb, xhi)
        cross = np.exp(self.scale_right[jb] - self.scale_right[ja])
        w = self.wronskian_scaled[ja]
        value = -phi_l * phi_r * cross / w
        if x < source:
            deriv = -dphi_l * phi_r * cross / w
        else:
            # field point at or right of the source: differentiate psi_right
            deriv = -phi_l * dphi_r * cross / w
        return GreensSample(value, deriv, x, source, self.variant)


@dataclass(frozen=True)
class BasisPair:
    """Normal and flipped-reflection bases solved at the same frequencies."""

    normal: WaveBasis
    flipped: WaveBasis

    @property
    def omega(self):
        return self.normal.omega


def _renormalized(a, b):
    scale = np.maximum(np.abs(a), np.abs(b))
    return a / scale, b / scale, np.log(scale)


def solve_wave_basis(stack: LayerStack, omega, variant: str = VARIANT_NORMAL) -> WaveBasis:
    """March the two outgoing solutions through the stack.

    Parameters
    ----------
    stack : LayerStack
    omega : float or array_like
        Angular frequencies in rad/s; all downstream quantities broadcast
        over this shape.
    variant : "normal" or "flipped"
        The flipped variant negates every interface reflection (used for
        the magnetic mode density).

    Raises DegenerateBasisError if the two solutions become numerically
    linearly dependent, and ConfigError for lossless outer layers unless
    the stack was assembled with ``allow_lossless_bounds``.
    """
    om = np.asarray(omega, dtype=float)
    if np.any(om <= 0) or not np.all(np.isfinite(om)):
        raise ConfigError("omega must be positive and finite")
    layers = stack.layers
    nlay = len(layers)
    wshape = om.shape

    n = np.empty((nlay,) + wshape, dtype=complex)
    for j, layer in enumerate(layers):
        n[j] = layer.n_at(om)
    if not stack.allow_lossless_bounds:
        for j in (0, nlay - 1):
            if np.any((n[j] * n[j]).imag <= 0):
                raise ConfigError(
                    f"layer {j}: outer layer must be lossy at every requested "
                    "frequency (Im[n^2] > 0)"
                )

    k = n * (om / c)
    refs = tuple(
        stack.interfaces[0] if j == 0 else stack.interfaces[j - 1] for j in range(nlay)
    )
    # in-layer distance from the reference point to the layer's right interface
    deltas = [0.0] + [layers[j].thickness for j in range(1, nlay - 1)] + [0.0]

    r = np.empty((nlay - 1,) + wshape, dtype=complex)
    t = np.empty((nlay - 1,) + wshape, dtype=complex)
    for m in range(nlay - 1):
        rm, tm = interface_coefficients(n[m], n[m + 1], variant)
        r[m] = rm
        t[m] = tm

    a_l = np.zeros((nlay,) + wshape, dtype=complex)
    b_l = np.zeros((nlay,) + wshape, dtype=complex)
    s_l = np.zeros((nlay,) + wshape, dtype=float)
    b_l[0] = 1.0
    for m in range(nlay - 1):
        km = k[m]
        d = deltas[m]
        av = a_l[m] * np.exp((1j * km.real - 2.0 * km.imag) * d)
        bv = b_l[m] * np.exp(-1j * km.real * d)
        f = t[m] / (1.0 - r[m] * r[m])
        a2 = f * (av - r[m] * bv)
        b2 = f * (bv - r[m] * av)
        a_l[m + 1], b_l[m + 1], logs = _renormalized(a2, b2)
        s_l[m + 1] = s_l[m] + km.imag * d + logs

    a_r = np.zeros((nlay,) + wshape, dtype=complex)
    b_r = np.zeros((nlay,) + wshape, dtype=complex)
    s_r = np.zeros((nlay,) + wshape, dtype=float)
    a_r[nlay - 1] = 1.0
    for m in range(nlay - 2, -1, -1):
        # left-side amplitude values at the interface x_m
        a1 = (a_r[m + 1] + r[m] * b_r[m + 1]) / t[m]
        b1 = (r[m] * a_r[m + 1] + b_r[m + 1]) / t[m]
        km = k[m]
        d = deltas[m]
        a2 = a1 * np.exp(-1j * km.real * d)
        b2 = b1 * np.exp((1j * km.real - 2.0 * km.imag) * d)
        a_r[m], b_r[m], logs = _renormalized(a2, b2)
        s_r[m] = s_r[m + 1] + km.imag * d + logs

    cross = a_r * b_l - a_l * b_r
    floor = np.abs(a_r * b_l) + np.abs(a_l * b_r)
    if np.any(floor == 0.0) or np.any(np.abs(cross) < _DEGENERACY_FLOOR * floor):
        raise DegenerateBasisError(
            "outgoing solutions are numerically linearly dependent"
        )
    wt = 2j * k * cross

    # constancy of the physical Wronskian across neighboring layers
    for j in range(1, nlay):
        shift = np.exp(s_l[j] + s_r[j] - s_l[j - 1] - s_r[j - 1])
        drift = np.abs(wt[j] * shift - wt[j - 1]) / np.abs(wt[j - 1])
        if np.any(drift > _WRONSKIAN_DRIFT_TOL):
            raise DegenerateBasisError(
                f"Wronskian drifts by {float(np.max(drift)):.3e} between layers "
                f"{j - 1} and {j}"
            )

    return WaveBasis(
        stack=stack,
        omega=om,
        variant=variant,
        wavenumbers=k,
        refs=refs,
        a_left=a_l,
        b_left=b_l,
        scale_left=s_l,
        a_right=a_r,
        b_right=b_r,
        scale_right=s_r,
        wronskian_scaled=wt,
    )


def solve_bases(stack: LayerStack, omega) -> BasisPair:
    """Solve both basis variants at the same frequencies."""
    return BasisPair(
        normal=solve_wave_basis(stack, omega, VARIANT_NORMAL),
        flipped=solve_wave_basis(stack, omega, VARIANT_FLIPPED),
    )


def greens_function(basis: WaveBasis, x: float, source: float) -> GreensSample:
    """G(x, source) and its field-point derivative.

    At coincident points the derivative takes its limit from x > source.
    """
    return basis.sample(x, source)


# ---------------------------------------------------------------------------
# closed-form source integrals

@dataclass(frozen=True, eq=False)
class RegionIntegrals:
    """Integrals of |G|^2 and |dG/dx|^2 over one source region, with
    optional derivatives with respect to the field point."""

    gg: np.ndarray
    dgg: np.ndarray
    d_gg: np.ndarray | None = None
    d_dgg: np.ndarray | None = None


def _exp_int(alpha, t1: float, t2: float):
    # int_{t1}^{t2} e^{alpha t} dt for finite bounds; series below the
    # cancellation threshold, exact form otherwise
    span = t2 - t1
    z = alpha * span
    small = np.abs(z) < _SERIES_THRESHOLD
    zsafe = np.where(small, 1.0, z)
    ec = np.where(small, 1.0 + z * 0.5 + z * z / 6.0, (np.exp(zsafe) - 1.0) / zsafe)
    return np.exp(alpha * t1) * span * ec


def _interval_sq(a, b, kk, t1: float, t2: float):
    """Integral of |a e^{ikt} + b e^{-ikt}|^2 over [t1, t2] (t may be
    infinite, in which case the growing coefficient must vanish)."""
    kappa = kk.imag
    if t1 == -math.inf:
        if np.any(a != 0):
            raise DivergentSourceError("left tail carries a growing wave component")
        if np.any(kappa <= 0):
            raise DivergentSourceError("semi-infinite source layer must be lossy")
        return np.abs(b) ** 2 * np.exp(2.0 * kappa * t2) / (2.0 * kappa)
    if t2 == math.inf:
        if np.any(b != 0):
            raise DivergentSourceError("right tail carries a growing wave component")
        if np.any(kappa <= 0):
            raise DivergentSourceError("semi-infinite source layer must be lossy")
        return np.abs(a) ** 2 * np.exp(-2.0 * kappa * t1) / (2.0 * kappa)
    out = np.abs(a) ** 2 * _exp_int(-2.0 * kappa + 0j, t1, t2)
    out = out + np.abs(b) ** 2 * _exp_int(2.0 * kappa + 0j, t1, t2)
    out = out + 2.0 * a * np.conj(b) * _exp_int(2j * kk.real, t1, t2)
    return out.real


def region_integrals(
    basis: WaveBasis, x: float, j: int, lo: float, hi: float, *, gradient: bool = False
) -> RegionIntegrals:
    """Closed-form source integrals over the part of layer j in [lo, hi].

    For a source interval on one side of the field point, G restricted to
    that interval is a fixed two-exponential profile times an x-dependent
    coefficient, so each integral is the profile integral times the
    squared coefficient; the interval containing the field point splits
    at x. Gradients differentiate the coefficients analytically (the
    profile integrals only move through the split point).
    """
    st = basis.stack
    A = st.layer_index(x)
    w = basis.wronskian_scaled[A]
    kj = basis.wavenumbers[j]
    ref = basis.refs[j]

    if j < A or (j == A and hi <= x):
        phi_r, dphi_r = basis._right(A, x)
        s = np.exp(basis.scale_left[j] - basis.scale_left[A])
        coeff = -phi_r * s / w
        dcoeff = -dphi_r * s / w
        prof = _interval_sq(basis.a_left[j], basis.b_left[j], kj, lo - ref, hi - ref)
    elif j > A or (j == A and lo >= x):
        phi_l, dphi_l = basis._left(A, x)
        s = np.exp(basis.scale_right[j] - basis.scale_right[A])
        coeff = -phi_l * s / w
        dcoeff = -dphi_l * s / w
        prof = _interval_sq(basis.a_right[j], basis.b_right[j], kj, lo - ref, hi - ref)
    else:
        phi_l, dphi_l = basis._left(A, x)
        phi_r, dphi_r = basis._right(A, x)
        c_lo = -phi_r / w
        cd_lo = -dphi_r / w
        c_hi = -phi_l / w
        cd_hi = -dphi_l / w
        u = x - ref
        prof_lo = _interval_sq(basis.a_left[A], basis.b_left[A], kj, lo - ref, u)
        prof_hi = _interval_sq(basis.a_right[A], basis.b_right[A], kj, u, hi - ref)
        gg = np.abs(c_lo) ** 2 * prof_lo + np.abs(c_hi) ** 2 * prof_hi
        dgg = np.abs(cd_lo) ** 2 * prof_lo + np.abs(cd_hi) ** 2 * prof_hi
        if not gradient:
            return RegionIntegrals(gg, dgg)
        k2 = basis.wavenumbers[A] ** 2
        d_gg = (
            2.0 * (cd_lo * np.conj(c_lo)).real * prof_lo
            + 2.0 * (cd_hi * np.conj(c_hi)).real * prof_hi
        )
        # the |G|^2 boundary terms at the split cancel; the |dG/dx|^2 ones
        # survive because the derivative kernel jumps across the source
        d_dgg = (
            -2.0 * (k2 * c_lo * np.conj(cd_lo)).real * prof_lo
            - 2.0 * (k2 * c_hi * np.conj(cd_hi)).real * prof_hi
            + np.abs(cd_lo) ** 2 * np.abs(phi_l) ** 2
            - np.abs(cd_hi) ** 2 * np.abs(phi_r) ** 2
        )
        return RegionIntegrals(gg, dgg, d_gg, d_dgg)

    gg = np.abs(coeff) ** 2 * prof
    dgg = np.abs(dcoeff) ** 2 * prof
    if not gradient:
        return RegionIntegrals(gg, dgg)
    k2 = basis.wavenumbers[A] ** 2
    d_gg = 2.0 * (dcoeff * np.conj(coeff)).real * prof
    d_dgg = -2.0 * (k2 * coeff * np.conj(dcoeff)).real * prof
    return RegionIntegrals(gg, dgg, d_gg, d_dgg)


def source_integral_weights(basis: WaveBasis, x: float, layer: int):
    """Closed-form ``int |G(x, x')|^2 dx'`` and ``int |dG/dx (x, x')|^2 dx'``
    over all of layer ``layer``."""
    lo, hi = basis.stack.layer_bounds(layer)
    ri = region_integrals(basis, x, layer, lo, hi)
    return ri.gg, ri.dgg
