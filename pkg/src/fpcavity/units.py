"""Unit-suffixed quantity parsing.

All internal quantities are SI (meters, hertz, radians). Config files and
CLI flags may attach an explicit unit suffix to any physical number, e.g.
``"10.5 um"``, ``"4.07 THz"``, ``"0.19 nm"``. Bare numbers are accepted
only for dimensionless quantities.
"""

from __future__ import annotations

from .errors import InvalidConfigError

C_LIGHT = 299_792_458.0  # m/s, exact

_LENGTH = {
    "m": 1.0,
    "mm": 1e-3,
    "um": 1e-6,
    "µm": 1e-6,  # micro sign
    "μm": 1e-6,  # greek mu
    "nm": 1e-9,
    "pm": 1e-12,
}

_FREQUENCY = {
    "hz": 1.0,
    "khz": 1e3,
    "mhz": 1e6,
    "ghz": 1e9,
    "thz": 1e12,
}


def _split(text: str) -> tuple[float, str]:
    parts = str(text).strip().split()
    if len(parts) == 1:
        # allow "10.5um" without a space
        s = parts[0]
        idx = len(s)
        while idx > 0 and not (s[idx - 1].isdigit() or s[idx - 1] == "."):
            idx -= 1
        num, unit = s[:idx], s[idx:]
    elif len(parts) == 2:
        num, unit = parts
    else:
        raise InvalidConfigError(f"cannot parse quantity {text!r}")
    try:
        value = float(num)
    except ValueError as exc:
        raise InvalidConfigError(f"cannot parse number in {text!r}") from exc
    return value, unit.strip()


def parse_length(text: str | float) -> float:
    """Parse a length with unit suffix into meters."""
    if isinstance(text, (int, float)):
        raise InvalidConfigError(
            f"length {text!r} needs an explicit unit suffix (m, mm, um, nm, pm)"
        )
    value, unit = _split(text)
    try:
        return value * _LENGTH[unit if unit != "µm" else "um"]
    except KeyError:
        raise InvalidConfigError(f"unknown length unit {unit!r} in {text!r}") from None


def parse_frequency(text: str | float) -> float:
    """Parse a frequency with unit suffix into hertz."""
    if isinstance(text, (int, float)):
        raise InvalidConfigError(
            f"frequency {text!r} needs an explicit unit suffix (Hz, kHz, MHz, GHz, THz)"
        )
    value, unit = _split(text)
    try:
        return value * _FREQUENCY[unit.lower()]
    except KeyError:
        raise InvalidConfigError(f"unknown frequency unit {unit!r} in {text!r}") from None


def wavelength_to_frequency(wavelength_m: float) -> float:
    return C_LIGHT / wavelength_m


def frequency_to_wavelength(frequency_hz: float) -> float:
    return C_LIGHT / frequency_hz
