"""Optical media, dielectric mirror stacks, and interface coefficients.

Conventions used throughout the toolkit:

- Normal incidence only.
- Complex refractive index ``n = n' + i k`` with ``k >= 0``; a positive
  imaginary part attenuates a forward-propagating wave.
- Amplitude Fresnel coefficients for a wave going from medium ``i`` into
  medium ``j``::

      r_ij = (n_i - n_j) / (n_i + n_j)
      t_ij = 2 n_i / (n_i + n_j)

  which satisfy ``r_ij = -r_ji`` and ``t_ij t_ji - r_ij r_ji = 1``.
- Surface roughness with rms amplitude ``sigma`` scales the specular
  coefficients by

      r_ij -> r_ij * exp(-2 (2 pi sigma Re(n_i) / lambda)^2)
      t_ij -> t_ij * exp(-(1/2) (2 pi sigma (Re(n_i) - Re(n_j)) / lambda)^2)

  (scalar scattering theory; the removed power is lost, not redirected).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import InvalidConfigError


class Termination(Enum):
    """Which index the cavity-facing layer of a mirror stack has."""

    HIGH = "high-index"
    LOW = "low-index"


@dataclass(frozen=True)
class OpticalMedium:
    """A non-dispersive medium described by one complex refractive index."""

    refractive_index: complex

    def __post_init__(self):
        n = complex(self.refractive_index)
        if n.real <= 0:
            raise InvalidConfigError(f"refractive index must have Re(n) > 0, got {n}")
        if n.imag < 0:
            raise InvalidConfigError(f"refractive index must have Im(n) >= 0, got {n}")
        object.__setattr__(self, "refractive_index", n)

    @property
    def n(self) -> complex:
        return self.refractive_index


VACUUM = OpticalMedium(1.0)


@dataclass(frozen=True)
class Layer:
    """One physical layer of a dielectric stack."""

    medium: OpticalMedium
    thickness: float  # meters

    def __post_init__(self):
        if self.thickness <= 0:
            raise InvalidConfigError(f"layer thickness must be > 0, got {self.thickness}")


@dataclass(frozen=True)
class MirrorStack:
    """An ordered dielectric stack, substrate side first.

    ``layers[0]`` touches the substrate; ``layers[-1]`` faces the cavity.
    ``termination`` records whether the cavity-facing layer is the high- or
    low-index material of the stack.
    """

    layers: tuple[Layer, ...]
    substrate: OpticalMedium
    termination: Termination

    def __post_init__(self):
        layers = tuple(self.layers)
        if len(layers) < 1:
            raise InvalidConfigError("mirror stack needs at least one layer")
        object.__setattr__(self, "layers", layers)
        if len(layers) >= 2:
            last = layers[-1].medium.n.real
            prev = layers[-2].medium.n.real
            is_high = last >= prev
            wants_high = self.termination is Termination.HIGH
            if is_high != wants_high and abs(last - prev) > 1e-12:
                raise InvalidConfigError(
                    f"stack termination {self.termination.value} inconsistent with "
                    f"cavity-facing index {last} next to {prev}"
                )

    @property
    def total_thickness(self) -> float:
        return sum(layer.thickness for layer in self.layers)

    def with_absorption(self, kappa: float) -> "MirrorStack":
        """Return a copy with ``i*kappa`` added to every layer index."""
        layers = tuple(
            Layer(OpticalMedium(l.medium.n + 1j * kappa), l.thickness) for l in self.layers
        )
        return MirrorStack(layers, self.substrate, self.termination)


@dataclass(frozen=True)
class RoughInterface:
    """A planar interface between two media with rms roughness ``sigma``."""

    n_i: OpticalMedium
    n_j: OpticalMedium
    sigma: float = 0.0  # meters, rms

    def __post_init__(self):
        if self.sigma < 0:
            raise InvalidConfigError(f"rms roughness must be >= 0, got {self.sigma}")


def fresnel_coefficients(n_i: complex, n_j: complex) -> tuple[complex, complex]:
    """Lossless normal-incidence amplitude coefficients (r_ij, t_ij)."""
    n_i, n_j = complex(n_i), complex(n_j)
    return (n_i - n_j) / (n_i + n_j), 2.0 * n_i / (n_i + n_j)


def rough_interface_coefficients(
    iface: RoughInterface, wavelength: float
) -> tuple[complex, complex]:
    """Roughness-reduced amplitude coefficients (r_ij, t_ij) at ``wavelength``.

    With sigma = 0 this reduces exactly to the Fresnel coefficients. The
    roughness exponents use the real parts of the indices.
    """
    if wavelength <= 0:
        raise InvalidConfigError(f"wavelength must be > 0, got {wavelength}")
    ni, nj = iface.n_i.n, iface.n_j.n
    r0, t0 = fresnel_coefficients(ni, nj)
    k_sigma = 2.0 * math.pi * iface.sigma / wavelength
    r = r0 * math.exp(-2.0 * (k_sigma * ni.real) ** 2)
    t = t0 * math.exp(-0.5 * (k_sigma * (ni.real - nj.real)) ** 2)
    return r, t


def build_quarter_wave_stack(
    n_high: complex,
    n_low: complex,
    substrate: OpticalMedium,
    layer_count: int,
    design_wavelength: float,
    termination: Termination = Termination.HIGH,
) -> MirrorStack:
    """Build an alternating quarter-wave stack, substrate side first.

    Each layer has physical thickness ``design_wavelength / (4 Re(n))``.
    The cavity-facing layer matches ``termination``; the alternation is
    constructed backwards from that requirement.
    """
    n_high, n_low = complex(n_high), complex(n_low)
    if design_wavelength <= 0:
        raise InvalidConfigError(f"design wavelength must be > 0, got {design_wavelength}")
    if layer_count < 1:
        raise InvalidConfigError(f"layer count must be >= 1, got {layer_count}")
    for n in (n_high, n_low):
        if n.real < 1:
            raise InvalidConfigError(f"coating index must have Re(n) >= 1, got {n}")
    if abs(n_high) < abs(n_low):
        raise InvalidConfigError("|n_high| must be >= |n_low|")

    last = n_high if termination is Termination.HIGH else n_low
    other = n_low if termination is Termination.HIGH else n_high
    # index pattern counted from the cavity side, then reversed
    pattern = [last if i % 2 == 0 else other for i in range(layer_count)][::-1]
    layers = tuple(
        Layer(OpticalMedium(n), design_wavelength / (4.0 * n.real)) for n in pattern
    )
    return MirrorStack(layers=layers, substrate=substrate, termination=termination)
