"""Scalar angular-spectrum diffraction for metasurface output fields.

The transfer function on the sampling grid is exp(i z sqrt(k^2 - kx^2 -
ky^2)); evanescent components either decay physically (complex square
root) or are zeroed when the plan band-limits.  Propagation on a fixed
grid is exactly unitary over the propagating band and exactly forms a
semigroup in z; callers pad when linear (non-wrapping) behavior over a
window is required.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_WAVELENGTH = 808e-9


@dataclass(frozen=True)
class ComplexField:
    """2-D complex amplitude grid with its pixel pitch and wavelength (meters)."""

    values: np.ndarray
    pitch: float
    wavelength: float = DEFAULT_WAVELENGTH

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 2:
            raise ValueError(f"field must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def dims(self):
        return self.values.shape

    def intensity(self):
        return np.abs(self.values) ** 2

    def power(self):
        return float(np.sum(self.intensity()))


@dataclass(frozen=True)
class PropagationPlan:
    """Propagation distance in meters; band_limit zeroes evanescent components."""

    z: float
    band_limit: bool = True

    def __post_init__(self):
        if self.z < 0.0:
            raise ValueError(f"propagation distance must be >= 0, got {self.z}")


def _transfer_function(dims, pitch, wavelength, z, band_limit):
    fy = np.fft.fftfreq(dims[0], pitch)
    fx = np.fft.fftfreq(dims[1], pitch)
    fy2 = fy[:, None] ** 2
    fx2 = fx[None, :] ** 2
    arg = (1.0 / wavelength) ** 2 - fx2 - fy2
    kz = 2.0 * np.pi * np.sqrt(arg.astype(complex))
    h = np.exp(1j * z * kz)
    if band_limit:
        h = np.where(arg >= 0.0, h, 0.0)
    return h

def angular_spectrum_propagate(f, plan):
    """Propagate a field by ``plan.z`` on its own grid."""
    h = _transfer_function(f.dims, f.pitch, f.wavelength, plan.z, plan.band_limit)
    out = np.fft.ifft2(np.fft.fft2(f.values) * h)
    return ComplexField(out, f.pitch, f.wavelength)


def backpropagate(f, z, band_limit=True):
    """Inverse propagation over distance z >= 0 via phase conjugation."""
    plan = PropagationPlan(z, band_limit)
    conj = ComplexField(f.values.conj(), f.pitch, f.wavelength)
    return ComplexField(angular_spectrum_propagate(conj, plan).values.conj(), f.pitch, f.wavelength)


def pad_field(f, factor=2):
    """Zero-pad to the next power of two at least factor * current dims (centered)."""
    rows, cols = f.dims
    target = 1 << int(np.ceil(np.log2(max(rows, cols) * factor)))
    out = np.zeros((target, target), dtype=complex)
    r0 = (target - rows) // 2
    c0 = (target - cols) // 2
    out[r0 : r0 + rows, c0 : c0 + cols] = f.values
    return ComplexField(out, f.pitch, f.wavelength)


def crop_field(f, dims):
    """Centered crop back to ``dims``."""
    rows, cols = dims
    R, C = f.dims
    r0 = (R - rows) // 2
    c0 = (C - cols) // 2
    return ComplexField(f.values[r0 : r0 + rows, c0 : c0 + cols].copy(), f.pitch, f.wavelength)


def propagate_padded(f, plan, factor=2):
    """Pad, propagate, crop: linear propagation of a window without wraparound."""
    padded = angular_spectrum_propagate(pad_field(f, factor), plan)
    return crop_field(padded, f.dims)
