"""Transfer-matrix forward model of the membrane-in-cavity system.

Field convention: a two-component vector ``(E+, E-)`` of right/left moving
amplitudes. A transfer matrix maps the vector on the left of an element to
the vector on its right, so a cavity traversed left to right composes as
``M_n @ ... @ M_1``.

The full cavity matrix runs from the flat-mirror substrate, through the
flat mirror stack (built for air termination), an air->membrane correction
interface, the membrane, the membrane->air interface, the air gap, and the
fiber mirror stack into the fiber substrate::

    S = M_amg @ L_air @ D_da @ L_membrane @ D_ad @ M_gma

With ``(E_trans, 0) = S (E_in, E_ref)`` the amplitude responses are
``r = -S21/S22`` and ``t = det(S)/S22``.

Propagation matrices are ``diag(exp(-i(k n d - phi)), exp(+i(k n d - phi)))``
where ``phi`` is the accumulated Guoy phase of the matched Gaussian mode
(zero when no mode is supplied). Interfaces touching the membrane use the
roughness-reduced coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import (
    InsufficientRangeError,
    InvalidConfigError,
    ResolutionError,
    StabilityError,
)
from .media import (
    Layer,
    MirrorStack,
    OpticalMedium,
    RoughInterface,
    fresnel_coefficients,
    rough_interface_coefficients,
)
from .units import C_LIGHT


@dataclass(frozen=True)
class TransferMatrix:
    """A 2x2 complex map of (right-moving, left-moving) field amplitudes."""

    m: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.m, dtype=complex)
        if arr.shape[-2:] != (2, 2):
            raise ValueError(f"transfer matrix must be 2x2, got shape {arr.shape}")
        object.__setattr__(self, "m", arr)

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(self.m @ other.m)

    @property
    def determinant(self) -> complex:
        m = self.m
        return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]

    def inverse(self) -> "TransferMatrix":
        m = self.m
        inv = np.empty_like(m)
        inv[..., 0, 0] = m[..., 1, 1]
        inv[..., 0, 1] = -m[..., 0, 1]
        inv[..., 1, 0] = -m[..., 1, 0]
        inv[..., 1, 1] = m[..., 0, 0]
        return TransferMatrix(inv / self.determinant[..., None, None])

    def transmission_reflection(self, flux_ratio: float = 1.0) -> tuple[float, float]:
        """Power (T, R) for unit input from the left.

        ``flux_ratio`` is Re(n_out)/Re(n_in) of the bounding media.
        """
        m = self.m
        t = self.determinant / m[..., 1, 1]
        r = -m[..., 1, 0] / m[..., 1, 1]
        return np.abs(t) ** 2 * flux_ratio, np.abs(r) ** 2


def _mat(a, b, c, d) -> np.ndarray:
    """Stack four broadcastable entries into an (..., 2, 2) array."""
    a, b, c, d = np.broadcast_arrays(
        np.asarray(a, complex), np.asarray(b, complex), np.asarray(c, complex), np.asarray(d, complex)
    )
    out = np.empty(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = c
    out[..., 1, 1] = d
    return out


def _interface(r_ij, t_ij, r_ji, t_ji) -> np.ndarray:
    """Interface matrix from the four amplitude coefficients.

    Derived from the scattering relations of the interface; for lossless
    Fresnel coefficients it reduces to the familiar index-ratio form and
    preserves E-field continuity across the interface.
    """
    return _mat(
        (t_ij * t_ji - r_ij * r_ji) / t_ji,
        r_ji / t_ji,
        -r_ij / t_ji,
        1.0 / t_ji,
    )


def _fresnel_interface(n_i, n_j) -> np.ndarray:
    r_ij, t_ij = fresnel_coefficients(n_i, n_j)
    r_ji, t_ji = fresnel_coefficients(n_j, n_i)
    return _interface(r_ij, t_ij, r_ji, t_ji)


def _rough_interface(n_i: OpticalMedium, n_j: OpticalMedium, sigma: float, wavelength) -> np.ndarray:
    """Interface matrix with roughness-reduced coefficients, vectorized in wavelength."""
    lam = np.asarray(wavelength, dtype=float)
    r0_ij, t0_ij = fresnel_coefficients(n_i.n, n_j.n)
    r0_ji, t0_ji = fresnel_coefficients(n_j.n, n_i.n)
    k_sigma = 2.0 * np.pi * sigma / lam
    fr_ij = np.exp(-2.0 * (k_sigma * n_i.n.real) ** 2)
    fr_ji = np.exp(-2.0 * (k_sigma * n_j.n.real) ** 2)
    ft = np.exp(-0.5 * (k_sigma * (n_i.n.real - n_j.n.real)) ** 2)
    return _interface(r0_ij * fr_ij, t0_ij * ft, r0_ji * fr_ji, t0_ji * ft)


def _propagation(n: complex, distance: float, wavelength, guoy: float = 0.0) -> np.ndarray:
    lam = np.asarray(wavelength, dtype=float)
    phase = 2.0 * np.pi * n * distance / lam - guoy
    return _mat(np.exp(1j * phase), 0.0, 0.0, np.exp(-1j * phase))


def propagation_matrix(
    medium: OpticalMedium, distance: float, wavelength: float, guoy_phase: float = 0.0
) -> TransferMatrix:
    """Free propagation over ``distance`` including an optional Guoy phase.

    The right-moving amplitude advances as ``exp(+i (2 pi n d / lambda - phi))``
    so a positive Im(n) attenuates it (Beer-Lambert); the left-moving
    amplitude carries the conjugate phase. Lossless propagation is unimodular.
    """
    if distance < 0:
        raise InvalidConfigError(f"propagation distance must be >= 0, got {distance}")
    return TransferMatrix(_propagation(medium.n, distance, wavelength, guoy_phase))


def stack_matrix(stack: MirrorStack, wavelength, ambient: OpticalMedium = OpticalMedium(1.0)) -> np.ndarray:
    """Transfer matrix of a mirror stack from its substrate into ``ambient``.

    Vectorized over ``wavelength`` (returns shape ``(..., 2, 2)``).
    """
    lam = np.asarray(wavelength, dtype=float)
    shape = lam.shape
    M = np.broadcast_to(np.eye(2, dtype=complex), shape + (2, 2)).copy()
    prev = stack.substrate.n
    for layer in stack.layers:
        n = layer.medium.n
        M = _propagation(n, layer.thickness, lam) @ _fresnel_interface(prev, n) @ M
        prev = n
    return _fresnel_interface(prev, ambient.n) @ M


def mirror_transmission(stack: MirrorStack, wavelength: float, ambient: OpticalMedium = OpticalMedium(1.0)) -> float:
    """Normal-incidence power transmission of one mirror, substrate to ambient."""
    M = stack_matrix(stack, wavelength, ambient)
    tm = TransferMatrix(M)
    T, _ = tm.transmission_reflection(ambient.n.real / stack.substrate.n.real)
    return float(T)


@dataclass(frozen=True)
class CavityConfig:
    """Geometry and loss description of the membrane-in-cavity system.

    ``membrane`` may be None for a bare two-mirror cavity. ``roughness_ad``
    applies to the air-membrane interface facing the cavity, and
    ``roughness_dm`` to the membrane-mirror interface at the flat mirror.
    """

    fiber_mirror: MirrorStack
    flat_mirror: MirrorStack
    cavity_length: float  # meters, mirror coating surface to mirror coating surface
    fiber_roc: float  # meters
    membrane: Optional[Layer] = None
    roughness_ad: float = 0.0  # meters rms
    roughness_dm: float = 0.0  # meters rms
    guoy_enabled: bool = True

    def __post_init__(self):
        if self.cavity_length <= 0:
            raise InvalidConfigError(f"cavity length must be > 0, got {self.cavity_length}")
        if not 0.0 <= self.membrane_thickness < self.cavity_length:
            raise InvalidConfigError(
                f"membrane thickness {self.membrane_thickness} must lie in [0, L={self.cavity_length})"
            )
        if self.roughness_ad < 0 or self.roughness_dm < 0:
            raise InvalidConfigError("rms roughness must be >= 0")
        if self.fiber_roc <= self.effective_length:
            raise StabilityError(
                f"unstable geometry: fiber mirror ROC {self.fiber_roc} must exceed the "
                f"diffraction-effective length {self.effective_length}"
            )

    @property
    def membrane_thickness(self) -> float:
        return self.membrane.thickness if self.membrane is not None else 0.0

    @property
    def membrane_index(self) -> complex:
        return self.membrane.medium.n if self.membrane is not None else 1.0 + 0.0j

    @property
    def membrane_medium(self) -> OpticalMedium:
        return self.membrane.medium if self.membrane is not None else OpticalMedium(1.0)

    @property
    def effective_length(self) -> float:
        """Length governing transverse-mode stability, shortened by the membrane."""
        t_d, n_d = self.membrane_thickness, self.membrane_index.real
        return self.cavity_length - t_d * (1.0 - 1.0 / n_d)

    def with_length(self, length: float) -> "CavityConfig":
        return replace(self, cavity_length=length)


@dataclass(frozen=True)
class ResonancePeak:
    """One resonance found by a scan, with axis-tagged metadata."""

    axis: str  # "length" or "frequency"
    position: float
    fwhm: float
    fsr: float
    finesse: float
    character: float  # field-energy fraction inside the membrane, in [0, 1]
    peak_transmission: float

    def __post_init__(self):
        if self.fwhm <= 0:
            raise ValueError("fwhm must be > 0")


@dataclass(frozen=True)
class SpectralTrace:
    """Sampled (axis, transmission, reflection) response curves."""

    axis: str
    samples: np.ndarray
    transmission: np.ndarray
    reflection: np.ndarray


class _Assembled:
    """Cavity matrices at one frequency, with the air gap kept symbolic.

    ``S(L) = M_amg @ L_air(L) @ Q`` where ``Q`` collects everything from the
    flat-mirror substrate through the membrane's top interface. Since only
    the air-gap phase depends on L, scans along the length axis reuse one
    assembly.
    """

    def __init__(self, cfg: CavityConfig, mode, frequency):
        freq = np.asarray(frequency, dtype=float)
        lam = C_LIGHT / freq
        t_d = cfg.membrane_thickness
        n_air = OpticalMedium(1.0)

        if cfg.guoy_enabled and mode is not None:
            self.guoy_d = mode.guoy_phase_membrane(t_d)
            self.guoy_a = mode.guoy_phase_air(cfg.cavity_length)
        else:
            self.guoy_d = 0.0
            self.guoy_a = 0.0

        M_gma = stack_matrix(cfg.flat_mirror, lam, n_air)
        if t_d > 0:
            D_ad = _rough_interface(n_air, cfg.membrane_medium, cfg.roughness_dm, lam)
            L_d = _propagation(cfg.membrane_index, t_d, lam, self.guoy_d)
            D_da = _rough_interface(cfg.membrane_medium, n_air, cfg.roughness_ad, lam)
            Q = D_da @ L_d @ D_ad @ M_gma
        else:
            Q = M_gma
        self.M_amg = np.linalg.inv(stack_matrix(cfg.fiber_mirror, lam, n_air))
        self.Q = Q
        self.freq = freq
        self.lam = lam
        self.t_d = t_d
        self.cfg = cfg
        self.flux_ratio = cfg.fiber_mirror.substrate.n.real / cfg.flat_mirror.substrate.n.real
        # S22(L) = P exp(+i theta) + W exp(-i theta), theta = k (L - t_d) - guoy_a
        self.P = self.M_amg[..., 1, 0] * Q[..., 0, 1]
        self.W = self.M_amg[..., 1, 1] * Q[..., 1, 1]
        self.det_S = (
            (self.M_amg[..., 0, 0] * self.M_amg[..., 1, 1] - self.M_amg[..., 0, 1] * self.M_amg[..., 1, 0])
            * (Q[..., 0, 0] * Q[..., 1, 1] - Q[..., 0, 1] * Q[..., 1, 0])
        )

    def theta(self, length) -> np.ndarray:
        k = 2.0 * np.pi * self.freq / C_LIGHT
        return k * (np.asarray(length, float) - self.t_d) - self.guoy_a

    def air_gap_matrix(self, length) -> np.ndarray:
        th = self.theta(length)
        return _mat(np.exp(1j * th), 0.0, 0.0, np.exp(-1j * th))

    def system(self, length) -> np.ndarray:
        return self.M_amg @ self.air_gap_matrix(length) @ self.Q

    def s22(self, length) -> np.ndarray:
        th = self.theta(length)
        return self.P * np.exp(1j * th) + self.W * np.exp(-1j * th)

    def s21(self, length) -> np.ndarray:
        th = self.theta(length)
        return (self.M_amg[..., 1, 0] * self.Q[..., 0, 0]) * np.exp(1j * th) + (
            self.M_amg[..., 1, 1] * self.Q[..., 1, 0]
        ) * np.exp(-1j * th)

    def response(self, length):
        s22 = self.s22(length)
        T = np.abs(self.det_S / s22) ** 2 * self.flux_ratio
        R = np.abs(self.s21(length) / s22) ** 2
        return T, R

    def resonance_phase(self, length) -> np.ndarray:
        """Phase whose odd multiples of pi mark |S22| minima (resonances)."""
        return np.angle(self.P / self.W) + 2.0 * self.theta(length)


def cavity_system_matrix(cfg: CavityConfig, mode, wavelength: float) -> TransferMatrix:
    """Full substrate-to-substrate cavity matrix at one vacuum wavelength."""
    asm = _Assembled(cfg, mode, C_LIGHT / wavelength)
    return TransferMatrix(asm.system(cfg.cavity_length))


def response(cfg: CavityConfig, mode, length: float, frequency: float) -> tuple[float, float]:
    """Normalized transmitted and reflected power for unit input."""
    asm = _Assembled(cfg, mode, frequency)
    T, R = asm.response(length)
    return float(T), float(R)


def _quadratic_crossing(x: np.ndarray, y: np.ndarray, level: float, i: int) -> float:
    """Crossing of ``y == level`` between samples i and i+1, quadratic fit."""
    j0 = max(0, min(i - 1, len(x) - 3))
    xs, ys = x[j0 : j0 + 3], y[j0 : j0 + 3] - level
    coeffs = np.polyfit(xs - xs[0], ys, 2)
    roots = np.roots(coeffs) + xs[0]
    roots = roots[np.isreal(roots)].real
    lo, hi = min(x[i], x[i + 1]), max(x[i], x[i + 1])
    inside = [r for r in roots if lo - 1e-30 <= r <= hi + 1e-30]
    if inside:
        return float(inside[0])
    # fall back to linear interpolation
    y0, y1 = y[i] - level, y[i + 1] - level
    return float(x[i] + (x[i + 1] - x[i]) * y0 / (y0 - y1))


def _parabolic_peak(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    i = int(np.argmax(y))
    if i == 0 or i == len(x) - 1:
        return float(x[i]), float(y[i])
    denom = y[i - 1] - 2 * y[i] + y[i + 1]
    if denom == 0:
        return float(x[i]), float(y[i])
    dx = 0.5 * (y[i - 1] - y[i + 1]) / denom
    xp = x[i] + dx * (x[i + 1] - x[i])
    yp = y[i] - 0.25 * (y[i - 1] - y[i + 1]) * dx
    return float(xp), float(yp)


def _refine_peak(evaluate, x0: float, width0: float, rel_tol: float = 1e-3, max_rounds: int = 16):
    """Iteratively measure a peak's position, height and FWHM.

    ``evaluate(x_array) -> T_array``. The window shrinks/recenters until the
    FWHM estimate is stable to ``rel_tol``.
    """
    x_peak, width = x0, width0
    fwhm_prev = None
    for _ in range(max_rounds):
        grid = np.linspace(x_peak - 3.0 * width, x_peak + 3.0 * width, 121)
        T = evaluate(grid)
        x_peak, t_peak = _parabolic_peak(grid, T)
        half = 0.5 * t_peak
        above = T >= half
        if not above.any():
            width *= 4.0
            continue
        idx = np.where(above)[0]
        i_lo, i_hi = idx[0], idx[-1]
        if i_lo == 0 or i_hi == len(grid) - 1:
            width *= 2.0
            continue
        left = _quadratic_crossing(grid, T, half, i_lo - 1)
        right = _quadratic_crossing(grid, T, half, i_hi)
        fwhm = right - left
        if fwhm_prev is not None and abs(fwhm - fwhm_prev) <= rel_tol * fwhm:
            return x_peak, t_peak, fwhm
        fwhm_prev = fwhm
        width = fwhm
    raise ResolutionError(
        f"linewidth refinement did not converge near {x0} (last estimate {fwhm_prev})"
    )


def _airy_fwhm_theta(P: complex, W: complex) -> float:
    """FWHM of the |S22|^-2 resonance in units of the air-gap phase theta."""
    ap, aw = abs(P), abs(W)
    arg = 1.0 - (ap - aw) ** 2 / (2.0 * ap * aw)
    arg = min(1.0, max(-1.0, arg))
    return math.acos(arg)


def _resonant_lengths(asm: _Assembled, lo: float, hi: float) -> np.ndarray:
    """All resonant lengths in [lo, hi] for a fixed-frequency assembly."""
    k = 2.0 * np.pi * float(asm.freq) / C_LIGHT
    phi0 = float(np.angle(asm.P / asm.W)) - 2.0 * asm.guoy_a - 2.0 * k * asm.t_d
    # resonance: phi0 + 2 k L = pi (mod 2 pi)
    j_lo = math.floor((phi0 + 2.0 * k * lo - math.pi) / (2.0 * math.pi))
    out = []
    j = j_lo
    while True:
        L = (math.pi + 2.0 * math.pi * j - phi0) / (2.0 * k)
        if L > hi:
            break
        if L >= lo:
            out.append(L)
        j += 1
    return np.asarray(out)


def _resonant_frequencies(asm_factory, lo: float, hi: float, samples: int) -> np.ndarray:
    """Bracket and polish resonance frequencies of ``xi(f) = pi (mod 2pi)``."""
    from scipy.optimize import brentq

    grid = np.linspace(lo, hi, samples)
    asm = asm_factory(grid)
    xi = np.unwrap(asm.resonance_phase(asm.cfg.cavity_length))
    roots = []
    targets_lo = math.floor((xi.min() - math.pi) / (2 * math.pi))
    targets_hi = math.ceil((xi.max() - math.pi) / (2 * math.pi))
    interp_sign = {}
    for j in range(targets_lo, targets_hi + 1):
        target = math.pi + 2.0 * math.pi * j
        diff = xi - target
        sign_change = np.where(np.sign(diff[:-1]) * np.sign(diff[1:]) < 0)[0]
        for i in sign_change:
            def g(f, _target=target, _i=i):
                a = asm_factory(np.asarray([f]))
                val = float(a.resonance_phase(a.cfg.cavity_length)[0])
                # track the branch of the coarse grid
                offset = round((xi[_i] - val) / (2 * math.pi))
                return val + 2 * math.pi * offset - _target

            try:
                root = brentq(g, grid[i], grid[i + 1], xtol=1e-3, rtol=1e-14)
            except ValueError:
                continue
            roots.append(root)
    return np.asarray(sorted(roots))


def _membrane_energy_fraction(cfg: CavityConfig, mode, length: float, frequency: float) -> float:
    if cfg.membrane_thickness == 0.0:
        return 0.0
    profile = intracavity_field_profile(
        cfg, mode, length, frequency, samples_per_halfwave=8, check_resonance=False
    )
    return profile.membrane_energy_fraction


def scan_resonances(
    cfg: CavityConfig,
    mode,
    axis: str,
    fixed: float,
    scan_range: tuple[float, float],
    samples: int = 0,
    with_character: bool = True,
) -> tuple[list[ResonancePeak], SpectralTrace]:
    """Locate resonances along a length or frequency scan.

    ``axis='length'`` scans cavity length at fixed frequency ``fixed``;
    ``axis='frequency'`` scans frequency at fixed length ``fixed``. Peak
    widths come from half-maximum crossings on an adaptively refined grid;
    the FSR of each peak is the spacing to its neighbours.
    """
    lo, hi = float(min(scan_range)), float(max(scan_range))
    if axis == "length":
        asm = _Assembled(cfg, mode, fixed)
        positions = _resonant_lengths(asm, lo, hi)
        k = 2.0 * np.pi * fixed / C_LIGHT

        def evaluate(x):
            return asm.response(x)[0]

        width_guess = [_airy_fwhm_theta(asm.P, asm.W) / (2.0 * k)] * len(positions)
        cfg_for_character = lambda L: (L, fixed)
    elif axis == "frequency":
        t_d = cfg.membrane_thickness
        n_d = cfg.membrane_index.real
        l_opt = cfg.cavity_length + (n_d - 1.0) * t_d
        fsr_avg = C_LIGHT / (2.0 * l_opt)
        min_samples = max(int(math.ceil((hi - lo) / fsr_avg * 8)) + 2, 16)
        samples = max(samples, min_samples)

        def asm_factory(freqs):
            return _Assembled(cfg, mode, freqs)

        positions = _resonant_frequencies(asm_factory, lo, hi, samples)
        width_guess = []
        for f in positions:
            a = _Assembled(cfg, mode, f)
            dtheta = _airy_fwhm_theta(complex(a.P), complex(a.W))
            # d(xi)/df ~ 4 pi L_opt / c plus stack dispersion; finite difference
            df = fsr_avg * 1e-4
            a2 = _Assembled(cfg, mode, f + df)
            dxi = (
                float(a2.resonance_phase(cfg.cavity_length))
                - float(a.resonance_phase(cfg.cavity_length))
            )
            dxi = (dxi + math.pi) % (2 * math.pi) - math.pi
            width_guess.append(abs(dtheta / (dxi / df)))

        def evaluate(freqs):
            a = _Assembled(cfg, mode, freqs)
            return a.response(cfg.cavity_length)[0]

        cfg_for_character = lambda f: (cfg.cavity_length, f)
    else:
        raise InvalidConfigError(f"unknown scan axis {axis!r}")

    if len(positions) < 2:
        raise InsufficientRangeError(
            f"found {len(positions)} resonance(s) in {scan_range}; need >= 2 for an FSR"
        )

    refined = []
    for x0, w0 in zip(positions, width_guess):
        x_peak, t_peak, fwhm = _refine_peak(evaluate, float(x0), float(w0))
        refined.append((x_peak, t_peak, fwhm))

    peaks = []
    pos = [r[0] for r in refined]
    for i, (x_peak, t_peak, fwhm) in enumerate(refined):
        gaps = []
        if i > 0:
            gaps.append(pos[i] - pos[i - 1])
        if i < len(pos) - 1:
            gaps.append(pos[i + 1] - pos[i])
        fsr = float(np.mean(gaps))
        if with_character:
            L_c, f_c = cfg_for_character(x_peak)
            character = _membrane_energy_fraction(cfg, mode, L_c, f_c)
        else:
            character = 0.0
        peaks.append(
            ResonancePeak(
                axis=axis,
                position=x_peak,
                fwhm=fwhm,
                fsr=fsr,
                finesse=fsr / fwhm,
                character=character,
                peak_transmission=t_peak,
            )
        )

    # assemble a trace: coarse background plus fine windows around each peak
    coarse = np.linspace(lo, hi, max(samples, 512))
    windows = [np.linspace(p.position - 3 * p.fwhm, p.position + 3 * p.fwhm, 61) for p in peaks]
    grid = np.unique(np.concatenate([coarse] + windows))
    grid = grid[(grid >= lo) & (grid <= hi)]
    if axis == "length":
        T, R = asm.response(grid)
    else:
        a = _Assembled(cfg, mode, grid)
        T, R = a.response(cfg.cavity_length)
    trace = SpectralTrace(axis=axis, samples=grid, transmission=np.asarray(T), reflection=np.asarray(R))
    return peaks, trace


@dataclass(frozen=True)
class FieldProfile:
    """Intracavity field sampled along the optical axis.

    ``z`` is measured from the flat mirror's coating surface toward the
    fiber; the membrane occupies [0, t_d] and the air gap [t_d, L]. The
    stack interiors are included (negative z for the flat mirror).
    """

    z: np.ndarray
    field: np.ndarray  # complex amplitude E+ + E-
    index: np.ndarray  # local refractive index (real part)
    interface_field: float  # |E| at the membrane's cavity-side surface
    e_max_membrane: float
    e_max_location: float
    membrane_energy_fraction: float
    off_resonance: bool


def intracavity_field_profile(
    cfg: CavityConfig,
    mode,
    length: float,
    frequency: float,
    samples_per_halfwave: int = 24,
    check_resonance: bool = True,
) -> FieldProfile:
    """Sample the standing-wave field amplitude through the whole structure."""
    asm = _Assembled(cfg, mode, frequency)
    lam = C_LIGHT / frequency
    t_d = cfg.membrane_thickness

    s22 = complex(asm.s22(length))
    e_ref = -complex(asm.s21(length)) / s22

    off_resonance = False
    if check_resonance:
        res = _resonant_lengths(asm, length - lam / 2, length + lam / 2)
        if len(res):
            nearest = res[np.argmin(np.abs(res - length))]
            k = 2.0 * np.pi * frequency / C_LIGHT
            fwhm_L = _airy_fwhm_theta(complex(asm.P), complex(asm.W)) / (2.0 * k)
            off_resonance = abs(nearest - length) > fwhm_L
        else:
            off_resonance = True

    # walk the structure left to right accumulating labelled segments
    segments = []  # (z_start, thickness, n, guoy_total_for_segment, entry_kind)
    z = -cfg.flat_mirror.total_thickness
    for layer in cfg.flat_mirror.layers:
        segments.append((z, layer.thickness, layer.medium.n, 0.0, "fresnel"))
        z += layer.thickness
    if t_d > 0:
        segments.append((0.0, t_d, cfg.membrane_index, asm.guoy_d, "mirror-membrane"))
        segments.append((t_d, length - t_d, 1.0 + 0.0j, asm.guoy_a - asm.guoy_d, "membrane-air"))
    else:
        segments.append((0.0, length, 1.0 + 0.0j, asm.guoy_a, "fresnel"))
    z = length
    for layer in cfg.fiber_mirror.layers[::-1]:
        segments.append((z, layer.thickness, layer.medium.n, 0.0, "fresnel"))
        z += layer.thickness

    # matrices to cross into each segment, starting from the flat substrate
    n_air = OpticalMedium(1.0)
    vec = np.array([1.0 + 0.0j, e_ref])
    zs, fields, indices = [], [], []
    prev_n = cfg.flat_mirror.substrate.n
    for (z0, d, n, guoy, entry) in segments:
        if entry == "mirror-membrane":
            # the stack matrix terminates into air; the membrane correction follows
            D = _rough_interface(n_air, cfg.membrane_medium, cfg.roughness_dm, lam) @ _fresnel_interface(prev_n, 1.0)
        elif entry == "membrane-air":
            D = _rough_interface(cfg.membrane_medium, n_air, cfg.roughness_ad, lam)
        else:
            D = _fresnel_interface(prev_n, n)
        vec = D @ vec
        count = max(int(samples_per_halfwave * d / (lam / (2 * abs(n.real)))) + 2, 4)
        local = np.linspace(0.0, d, count)
        k_seg = 2.0 * np.pi * n / lam
        guoy_rate = guoy / d if d > 0 else 0.0
        phase = k_seg * local - guoy_rate * local
        e_plus = vec[0] * np.exp(1j * phase)
        e_minus = vec[1] * np.exp(-1j * phase)
        zs.append(z0 + local)
        fields.append(e_plus + e_minus)
        indices.append(np.full(count, n.real))
        vec = _propagation(n, d, lam, guoy) @ vec
        prev_n = n

    z_all = np.concatenate(zs)
    e_all = np.concatenate(fields)
    n_all = np.concatenate(indices)

    inside = (z_all >= 0.0) & (z_all <= length)
    membrane = inside & (z_all <= t_d) if t_d > 0 else np.zeros_like(inside)
    energy_total = np.trapz((n_all[inside] * np.abs(e_all[inside])) ** 2, z_all[inside])
    if t_d > 0:
        energy_mem = np.trapz((n_all[membrane] * np.abs(e_all[membrane])) ** 2, z_all[membrane])
        frac = float(energy_mem / energy_total)
        i_interface = int(np.argmin(np.abs(z_all - t_d)))
        interface_field = float(np.abs(e_all[i_interface]))
        i_max = int(np.argmax(np.abs(e_all) * membrane))
        e_max, e_loc = float(np.abs(e_all[i_max])), float(z_all[i_max])
    else:
        frac = 0.0
        interface_field = 0.0
        i_max = int(np.argmax(np.abs(e_all) * inside))
        e_max, e_loc = float(np.abs(e_all[i_max])), float(z_all[i_max])

    return FieldProfile(
        z=z_all,
        field=e_all,
        index=n_all,
        interface_field=interface_field,
        e_max_membrane=e_max,
        e_max_location=e_loc,
        membrane_energy_fraction=frac,
        off_resonance=off_resonance,
    )


@dataclass(frozen=True)
class FinesseCurve:
    """Length-scan finesse along one resonance branch versus wavelength."""

    wavelengths: np.ndarray
    branch_lengths: np.ndarray
    finesse: np.ndarray
    peak_transmission: np.ndarray
    interface_intensity: np.ndarray  # |E|^2 at the air-membrane interface, E_max-normalized


def _matched_mode(cfg: CavityConfig, length: float, wavelength: float):
    from .gaussian import match_membrane_cavity_mode

    if not cfg.guoy_enabled:
        return None
    return match_membrane_cavity_mode(
        cfg.fiber_roc, length, cfg.membrane_thickness, cfg.membrane_index.real, wavelength
    )


def track_branch_length(cfg: CavityConfig, wavelength: float, near_length: float) -> tuple[float, object]:
    """Resonant length nearest ``near_length`` with a self-consistent mode."""
    L = near_length
    mode = _matched_mode(cfg, L, wavelength)
    for _ in range(3):
        asm = _Assembled(cfg, mode, C_LIGHT / wavelength)
        candidates = _resonant_lengths(asm, L - wavelength, L + wavelength)
        L_new = float(candidates[np.argmin(np.abs(candidates - L))])
        mode = _matched_mode(cfg, L_new, wavelength)
        if abs(L_new - L) < 1e-15:
            L = L_new
            break
        L = L_new
    return L, mode


def finesse_at(cfg: CavityConfig, wavelength: float, near_length: float) -> tuple[float, float, float, float]:
    """Length-scan finesse on the branch near ``near_length``.

    Returns (finesse, resonant length, peak transmission, normalized
    interface intensity |E_s/E_max|^2).
    """
    L_res, mode = track_branch_length(cfg, wavelength, near_length)
    freq = C_LIGHT / wavelength
    asm = _Assembled(cfg, mode, freq)
    k = 2.0 * np.pi * freq / C_LIGHT

    def evaluate(x):
        return asm.response(x)[0]

    width0 = _airy_fwhm_theta(complex(asm.P), complex(asm.W)) / (2.0 * k)
    x_peak, t_peak, fwhm = _refine_peak(evaluate, L_res, width0)
    finesse = (wavelength / 2.0) / fwhm
    profile = intracavity_field_profile(
        cfg.with_length(x_peak), mode, x_peak, freq, samples_per_halfwave=16, check_resonance=False
    )
    if profile.e_max_membrane > 0:
        s_norm = (profile.interface_field / profile.e_max_membrane) ** 2
    else:
        s_norm = 0.0
    return finesse, x_peak, t_peak, s_norm


def finesse_vs_wavelength(
    cfg: CavityConfig,
    wavelengths: Sequence[float],
    anchor_length: float | None = None,
) -> FinesseCurve:
    """Finesse along the resonance branch through ``anchor_length``.

    The branch is tracked continuously from the first wavelength; at each
    point the cavity length is re-tuned to the nearest resonance and the
    length-scan linewidth is measured there.
    """
    lams = np.asarray(sorted(wavelengths), dtype=float)
    L = cfg.cavity_length if anchor_length is None else anchor_length
    out_f, out_L, out_T, out_s = [], [], [], []
    for lam in lams:
        f, L, t_peak, s2 = finesse_at(cfg, lam, L)
        out_f.append(f)
        out_L.append(L)
        out_T.append(t_peak)
        out_s.append(s2)
    return FinesseCurve(
        wavelengths=lams,
        branch_lengths=np.asarray(out_L),
        finesse=np.asarray(out_f),
        peak_transmission=np.asarray(out_T),
        interface_intensity=np.asarray(out_s),
    )
