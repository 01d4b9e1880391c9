"""Matched Gaussian modes of the membrane cavity and the HG standing-wave basis.

The fundamental mode is described by two Gaussian beams sharing a curved,
wavefront-matching surface at the membrane's top face: a beam of waist
``w1`` at the flat mirror inside the membrane, and a beam of waist ``w2``
whose (possibly virtual) waist sits a distance ``x02`` from the flat
mirror in the air region. Matching requires equal beam radius and equal
wavefront curvature on that surface, curvature ``R`` on the fiber mirror,
and a waist on the flat mirror.

The axial coordinate ``z`` runs from the flat mirror (z = 0) toward the
fiber mirror (z = L); the membrane occupies [0, t_d].

All Rayleigh ranges and the matched interface curvature depend only on the
geometry (R, L, t_d, n_d), not on wavelength; beam radii scale as
sqrt(wavelength).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import eval_hermite

from .errors import DegenerateGeometryError, InvalidConfigError, StabilityError
from .units import C_LIGHT


def guoy_phase(distance_from_waist: float, waist: float, wavelength: float, index: float = 1.0):
    """Axial Guoy phase ``arctan(x lambda_medium / (pi w^2))`` in radians."""
    if waist <= 0:
        raise InvalidConfigError(f"waist must be > 0, got {waist}")
    lam_medium = wavelength / index
    return np.arctan(np.asarray(distance_from_waist) * lam_medium / (math.pi * waist**2))


def half_symmetric_waist(length: float, roc: float, wavelength: float) -> float:
    """Waist (on the flat mirror) of a bare flat/curved two-mirror cavity."""
    if not 0 < length < roc:
        raise StabilityError(f"bare half-symmetric cavity needs 0 < L < R, got L={length}, R={roc}")
    return math.sqrt(wavelength / math.pi) * (length * (roc - length)) ** 0.25


@dataclass(frozen=True)
class GaussianModePair:
    """The matched fundamental Gaussian mode of the membrane cavity."""

    w1: float  # waist in the membrane, located at the flat mirror [m]
    w2: float  # waist of the air-region beam [m]
    x02: float  # air-region waist position measured from the flat mirror [m]
    interface_roc: float  # shared wavefront curvature at the membrane face [m]
    wavelength: float  # vacuum wavelength the radii refer to [m]
    # generating geometry
    fiber_roc: float
    length: float
    membrane_thickness: float
    membrane_index: float

    @property
    def rayleigh_membrane(self) -> float:
        """Rayleigh range of the membrane-region beam (uses lambda/n)."""
        return math.pi * self.w1**2 * self.membrane_index / self.wavelength

    @property
    def rayleigh_air(self) -> float:
        return math.pi * self.w2**2 / self.wavelength

    def beam_radius(self, z):
        """1/e^2 intensity radius at axial position z (region-aware)."""
        z = np.asarray(z, dtype=float)
        t_d = self.membrane_thickness
        z1, z2 = self.rayleigh_membrane, self.rayleigh_air
        in_membrane = z <= t_d
        w_mem = self.w1 * np.sqrt(1.0 + (z / z1) ** 2) if t_d > 0 else np.inf
        w_air = self.w2 * np.sqrt(1.0 + ((z - self.x02) / z2) ** 2)
        return np.where(in_membrane, w_mem, w_air) if t_d > 0 else w_air

    def wavefront_roc(self, z: float) -> float:
        t_d = self.membrane_thickness
        if z <= t_d and t_d > 0:
            z1 = self.rayleigh_membrane
            return math.inf if z == 0 else z * (1.0 + (z1 / z) ** 2)
        z2 = self.rayleigh_air
        d = z - self.x02
        return math.inf if d == 0 else d * (1.0 + (z2 / d) ** 2)

    def guoy_phase_membrane(self, z: float) -> float:
        """Guoy phase accumulated inside the membrane from the flat mirror."""
        if self.membrane_thickness == 0:
            return 0.0
        return math.atan(z / self.rayleigh_membrane)

    def guoy_phase_air(self, z: float) -> float:
        """Guoy phase of the air-region beam at z, measured from its waist."""
        return math.atan((z - self.x02) / self.rayleigh_air)

    @property
    def fiber_mirror_radius(self) -> float:
        """Beam radius on the fiber mirror."""
        return float(self.beam_radius(self.length))


def match_membrane_cavity_mode(
    fiber_roc: float, length: float, membrane_thickness: float, membrane_index: float, wavelength: float
) -> GaussianModePair:
    """Solve the four matching conditions for the membrane-cavity mode.

    Reduces to one equation in the interface curvature ``rho``: given rho,
    the membrane-side Rayleigh range follows from the waist-on-mirror
    condition, the air-side beam from curvature R on the fiber mirror, and
    the residual is the beam-radius mismatch at the interface.
    """
    R, L, t_d, n_d = fiber_roc, length, membrane_thickness, membrane_index
    if t_d < 0 or t_d >= L:
        raise InvalidConfigError(f"membrane thickness must lie in [0, L), got {t_d}")
    effective = L - t_d * (1.0 - 1.0 / n_d)
    if R <= effective:
        raise StabilityError(
            f"unstable geometry: fiber ROC {R} must exceed diffraction-effective length {effective}"
        )

    if t_d == 0.0:
        z2 = math.sqrt(L * (R - L))
        w2 = math.sqrt(wavelength * z2 / math.pi)
        return GaussianModePair(
            w1=w2, w2=w2, x02=0.0, interface_roc=math.inf, wavelength=wavelength,
            fiber_roc=R, length=L, membrane_thickness=0.0, membrane_index=1.0,
        )

    g = L - t_d

    def air_side(rho):
        u = g * (R - g) / (rho - R + 2.0 * g)  # u = t_d - x02
        z2_sq = u * (rho - u)
        return u, z2_sq

    def mismatch(rho):
        z1 = math.sqrt(t_d * (rho - t_d))
        u, z2_sq = air_side(rho)
        z2 = math.sqrt(z2_sq)
        w_mem_sq = (z1 + t_d**2 / z1) / n_d
        w_air_sq = z2 + u**2 / z2
        return w_mem_sq - w_air_sq

    # domain: rho beyond both branch points (z1 real, z2 real with u > 0)
    b = R - 2.0 * g
    rho_c = 0.5 * (b + math.sqrt(b * b + 4.0 * g * (R - g)))
    rho_lo = max(t_d, rho_c) * (1.0 + 1e-9) + 1e-12
    rho_hi = max(10.0 * R, 4.0 * rho_lo)
    f_lo = mismatch(rho_lo)
    tries = 0
    while mismatch(rho_hi) * f_lo > 0:
        rho_hi *= 4.0
        tries += 1
        if tries > 60:
            raise StabilityError(
                "mode matching failed: no interface curvature satisfies the "
                f"boundary conditions (R={R}, L={L}, t_d={t_d}, n_d={n_d}); "
                "the beam-radius matching condition has no root"
            )
    rho = brentq(mismatch, rho_lo, rho_hi, xtol=1e-18, rtol=8.881784197001252e-16)

    z1 = math.sqrt(t_d * (rho - t_d))
    u, z2_sq = air_side(rho)
    z2 = math.sqrt(z2_sq)
    w1 = math.sqrt(wavelength * z1 / (math.pi * n_d))
    w2 = math.sqrt(wavelength * z2 / math.pi)
    return GaussianModePair(
        w1=w1, w2=w2, x02=t_d - u, interface_roc=rho, wavelength=wavelength,
        fiber_roc=R, length=L, membrane_thickness=t_d, membrane_index=n_d,
    )


def effective_roc(length: float, delta_nu_trans: float, fsr: float) -> float:
    """Mirror curvature from the transverse-mode spacing of a flat/curved cavity."""
    if not 0.0 < delta_nu_trans < fsr:
        raise DegenerateGeometryError(
            f"transverse spacing must lie strictly between 0 and the FSR, got "
            f"{delta_nu_trans} vs FSR {fsr}"
        )
    s = math.sin(math.pi * delta_nu_trans / fsr)
    return length / (s * s)


def transverse_mode_spacing(length: float, roc: float, fsr: float) -> float:
    """Inverse of :func:`effective_roc`: spacing between adjacent transverse modes."""
    if roc < length:
        raise DegenerateGeometryError(f"need R >= L for a stable cavity, got R={roc}, L={length}")
    return fsr / math.pi * math.asin(math.sqrt(length / roc))


# ---------------------------------------------------------------------------
# Hermite-Gaussian standing-wave basis (ideal lossless mirrors)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HGModeIndex:
    """Transverse orders (p, q) and the longitudinal half-wave count m."""

    p: int
    q: int
    m: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise InvalidConfigError("transverse orders must be >= 0")

    @property
    def transverse_order(self) -> int:
        return self.p + self.q


def hg_transverse(p: int, x, w):
    """Per-plane normalized 1D Hermite-Gaussian factor u_p(x; w)."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    xi = math.sqrt(2.0) * x / w
    norm = (2.0 / math.pi) ** 0.25 / np.sqrt((2.0**p) * math.factorial(p) * w)
    return norm * eval_hermite(p, xi) * np.exp(-((x / w) ** 2))


def _interface_phase(mode: GaussianModePair, N: int, k: float) -> tuple[float, float, float]:
    """(Phi_i, psi_i, B): membrane-side phase at the interface, the matched
    air-side phase (continuous branch), and the air amplitude for unit
    membrane amplitude.

    Matching keeps value and slope continuous with effective wavenumbers
    n_d k and k; the Guoy phase rates are paraxially small against k and are
    neglected in the slope condition.
    """
    t_d, n_d = mode.membrane_thickness, mode.membrane_index
    if t_d == 0.0:
        return 0.0, 0.0, 1.0
    phi_i = n_d * k * t_d - N * mode.guoy_phase_membrane(t_d)
    j = math.floor(phi_i / math.pi + 0.5)
    phi_r = phi_i - j * math.pi
    psi_i = j * math.pi + math.atan(math.tan(phi_r) / n_d)
    B = math.sqrt(math.sin(phi_i) ** 2 + (n_d * math.cos(phi_i)) ** 2)
    return phi_i, psi_i, B


def _air_phase(mode: GaussianModePair, N: int, k: float, z):
    _, psi_i, _ = _interface_phase(mode, N, k)
    t_d = mode.membrane_thickness
    guoy = N * (
        np.arctan((np.asarray(z, float) - mode.x02) / mode.rayleigh_air)
        - math.atan((t_d - mode.x02) / mode.rayleigh_air)
    )
    return k * (np.asarray(z, float) - t_d) - guoy + psi_i


def _total_phase(mode: GaussianModePair, N: int, k: float) -> float:
    """Accumulated standing-wave phase at the fiber mirror (= m pi on resonance)."""
    return float(_air_phase(mode, N, k, mode.length))


class StandingWaveMode:
    """One real-valued eigenmode of the ideal-mirror membrane cavity.

    The longitudinal factor has a node at both mirrors, continuous value
    and slope at the membrane face, and carries the Guoy phase of the
    transverse order ``N = p + q + 1``. The mode is normalized so
    ``integral(psi n0^2 psi) = 1`` over the zero-order (curved-interface)
    geometry.
    """

    def __init__(self, mode: GaussianModePair, index: HGModeIndex, k: float):
        self.mode = mode
        self.index = index
        self.k = k  # vacuum wavenumber
        self.N = index.p + index.q + 1
        self._norm = 1.0
        self._norm = 1.0 / math.sqrt(self._self_overlap())

    def longitudinal(self, z):
        """Standing-wave factor S(z) with unit membrane amplitude (flat split)."""
        z = np.asarray(z, dtype=float)
        t_d = self.mode.membrane_thickness
        if t_d == 0.0:
            return np.sin(_air_phase(self.mode, self.N, self.k, z))
        return np.where(z <= t_d, self.longitudinal_membrane(z), self.longitudinal_air(z))

    def longitudinal_membrane(self, z):
        m = self.mode
        if m.membrane_thickness == 0.0:
            return np.sin(_air_phase(m, self.N, self.k, z))
        return np.sin(m.membrane_index * self.k * z - self.N * np.arctan(z / m.rayleigh_membrane))

    def longitudinal_air(self, z):
        _, _, B = _interface_phase(self.mode, self.N, self.k)
        return B * np.sin(_air_phase(self.mode, self.N, self.k, z))

    def total_phase(self) -> float:
        return _total_phase(self.mode, self.N, self.k)

    @property
    def frequency(self) -> float:
        return self.k * C_LIGHT / (2.0 * math.pi)

    @property
    def eigenvalue(self) -> float:
        """kappa = (omega / c)^2 = k^2."""
        return self.k**2

    # -- transverse structure ---------------------------------------------------

    def transverse(self, x, y, z):
        w = self.mode.beam_radius(z)
        return hg_transverse(self.index.p, x, w) * hg_transverse(self.index.q, y, w)

    def field(self, x, y, z):
        """Normalized mode amplitude; region chosen by the curved interface."""
        x, y, z = np.broadcast_arrays(
            np.asarray(x, float), np.asarray(y, float), np.asarray(z, float)
        )
        t_d = self.mode.membrane_thickness
        if t_d == 0.0:
            s = self.longitudinal(z)
        else:
            z_surface = interface_surface(self.mode, np.hypot(x, y))
            s = np.where(z <= z_surface, self.longitudinal_membrane(z), self.longitudinal_air(z))
        return self._norm * self.transverse(x, y, z) * s

    # -- normalization -----------------------------------------------------------

    def _self_overlap(self) -> float:
        m = self.mode
        t_d, n_d, L = m.membrane_thickness, m.membrane_index, m.length
        lam_dense = 2.0 * math.pi / (self.k * max(n_d, 1.0))
        n_samples = max(int(100 * L / (lam_dense / 2.0)), 2000)
        if t_d == 0.0:
            z = np.linspace(0.0, L, n_samples)
            return float(np.trapz(self.longitudinal(z) ** 2, z))
        z_mem = np.linspace(0.0, t_d, max(int(n_samples * t_d / L), 200))
        z_air = np.linspace(t_d, L, max(int(n_samples * (L - t_d) / L), 200))
        flat = float(
            np.trapz((n_d * self.longitudinal_membrane(z_mem)) ** 2, z_mem)
            + np.trapz(self.longitudinal_air(z_air) ** 2, z_air)
        )
        return flat + shell_overlap_correction(self, self)


def interface_surface(mode: GaussianModePair, r):
    """Axial position of the wavefront-matching membrane surface at radius r.

    The surface passes through (r=0, z=t_d) and sags toward the flat mirror
    as ``t_d - r^2 / (2 rho)``; the sag is clamped to half the membrane
    thickness to stay inside the paraxial regime.
    """
    t_d = mode.membrane_thickness
    rho = mode.interface_roc
    if not math.isfinite(rho):
        return np.full_like(np.asarray(r, float), t_d)
    sag = np.minimum(np.asarray(r, float) ** 2 / (2.0 * rho), 0.5 * t_d)
    return t_d - sag


def _shell_quadrature(mode: GaussianModePair, n_r: int = 128, n_phi: int = 32, n_z: int = 12):
    """Quadrature nodes/weights over the volume between the curved
    wavefront-matching surface and the true flat membrane face.

    Returns (x, y, z, w) flattened arrays such that
    ``integral_shell f dV ~= sum(w * f(x, y, z))``.
    """
    from numpy.polynomial.legendre import leggauss

    t_d = mode.membrane_thickness
    rho = mode.interface_roc
    r_max = 6.0 * float(mode.beam_radius(t_d))
    r_nodes, r_weights = leggauss(n_r)
    r = 0.5 * r_max * (r_nodes + 1.0)
    wr = 0.5 * r_max * r_weights * r  # includes the radial Jacobian
    phi = (np.arange(n_phi) + 0.5) * (2.0 * math.pi / n_phi)
    wphi = 2.0 * math.pi / n_phi
    z_nodes, z_weights = leggauss(n_z)

    sag = np.minimum(r**2 / (2.0 * rho), 0.5 * t_d)  # depth of the shell column at r
    # z in [t_d - sag, t_d] per column
    z = t_d - 0.5 * sag[:, None] * (1.0 - z_nodes[None, :])
    wz = 0.5 * sag[:, None] * z_weights[None, :]

    R, PHI, ZI = np.broadcast_arrays(r[:, None, None], phi[None, :, None], z[:, None, :])
    W = wr[:, None, None] * wphi * wz[:, None, :]
    x = R * np.cos(PHI)
    y = R * np.sin(PHI)
    return x.ravel(), y.ravel(), ZI.ravel(), W.ravel()


def shell_overlap_correction(mode_a: StandingWaveMode, mode_b: StandingWaveMode) -> float:
    """Correction replacing the flat-interface overlap integral with the
    curved-interface one: inside the shell the modes are air-like but the
    flat bookkeeping counted them as membrane-like."""
    gm = mode_a.mode
    if gm.membrane_thickness == 0.0 or not math.isfinite(gm.interface_roc):
        return 0.0
    n_d = gm.membrane_index
    x, y, z, w = _shell_quadrature(gm)
    ua = mode_a.transverse(x, y, z)
    ub = mode_b.transverse(x, y, z)
    s_air = mode_a.longitudinal_air(z) * mode_b.longitudinal_air(z)
    s_mem = mode_a.longitudinal_membrane(z) * mode_b.longitudinal_membrane(z)
    integrand = ua * ub * (s_air - n_d**2 * s_mem)
    return float(np.sum(w * integrand))


def solve_standing_mode(mode: GaussianModePair, p: int, q: int, m: int) -> StandingWaveMode:
    """Eigen-wavenumber of the (p, q, m) mode by bracketed root finding.

    The accumulated standing-wave phase at the fiber mirror is strictly
    increasing in k; the eigencondition is ``total_phase == m pi``.
    """
    if m < 1:
        raise InvalidConfigError(f"longitudinal index must be >= 1, got {m}")
    gm = mode
    l_opt = gm.length + (gm.membrane_index - 1.0) * gm.membrane_thickness
    N = p + q + 1

    def phase_at(k):
        return _total_phase(gm, N, k) - m * math.pi

    k_est = m * math.pi / l_opt
    lo, hi = 0.9 * k_est, 1.1 * k_est
    f_lo, f_hi = phase_at(lo), phase_at(hi)
    tries = 0
    while f_lo > 0:
        lo *= 0.9
        f_lo = phase_at(lo)
        tries += 1
        if tries > 50:
            raise InvalidConfigError(f"could not bracket eigenmode (p={p}, q={q}, m={m})")
    while f_hi < 0:
        hi *= 1.1
        f_hi = phase_at(hi)
        tries += 1
        if tries > 100:
            raise InvalidConfigError(f"could not bracket eigenmode (p={p}, q={q}, m={m})")
    k = brentq(phase_at, lo, hi, xtol=1e-12, rtol=8.9e-16)
    return StandingWaveMode(gm, HGModeIndex(p, q, m), k)


def hg_field(index: HGModeIndex, mode: GaussianModePair, point) -> float:
    """Normalized HG basis amplitude at a 3D point (x, y, z)."""
    sm = solve_standing_mode(mode, index.p, index.q, index.m)
    x, y, z = point
    return float(sm.field(x, y, z))
