"""Phase/amplitude hologram encoding into slit antennas, synthesis and reconstruction.

A target complex profile is encoded per lattice cell: the phase is
quantized to eight levels and the amplitude A in [0, 1] sets the slit
angle through the |sin(2 theta)| = A rule.  Classes 0..3 carry the four
length-resonance phases with the transmitting axis in the first
quadrant; classes 4..7 reuse the same lengths with the axis flipped into
the fourth quadrant, whose sign of sin(2 theta) supplies the extra pi.
The realized cross-polarized phase is therefore class * pi/4 for all
eight levels, while the co-polarized response cos^2(theta) is even in
theta: under orthogonal illumination the pi flips vanish and the image
scrambles.
"""

from __future__ import annotations

import numpy as np

from .metasurface import (
    PERIOD_NM,
    PHASE_CLASS_LENGTHS_NM,
    SLIT_WIDTH_NM,
    SlitLayout,
)
from .polarization import polarizer_ket
from .propagation import (
    ComplexField,
    PropagationPlan,
    angular_spectrum_propagate,
    backpropagate,
    crop_field,
    pad_field,
)

DEFAULT_Z_DESIGN = 50e-6  # Fresnel number ~ 11 for a 128-cell hologram at 300 nm pitch


def quantize_phase_class(phase):
    """Nearest of the 8 phase levels (k*pi/4), ties broken toward the lower class."""
    level = np.asarray(phase, dtype=float) / (np.pi / 4.0)
    return np.ceil(level - 0.5).astype(int) % 8


def encode_hologram(amplitude, phase, period_nm=PERIOD_NM):
    """Encode an amplitude/phase profile into a slit layout, one slit per cell.

    Cells with amplitude exactly 0 emit no slit.  Slit lengths follow the
    class's base phase level; orientation theta = arcsin(A)/2.
    """
    amp = np.asarray(amplitude, dtype=float)
    ph = np.asarray(phase, dtype=float)
    if amp.shape != ph.shape or amp.ndim != 2:
        raise ValueError("amplitude and phase must be 2-D grids of equal dims")
    if amp.min() < 0.0 or amp.max() > 1.0:
        raise ValueError("target amplitudes must lie in [0, 1]")

    rows, cols = np.nonzero(amp > 0.0)
    a = amp[rows, cols]
    cls = quantize_phase_class(ph[rows, cols])
    # classes 0..3 keep the transmitting axis in the first quadrant; classes
    # 4..7 flip it into the fourth, whose sin(2 theta) sign supplies the
    # extra pi, so the realized cross-pol phase is class * pi/4 throughout
    theta = 0.5 * np.arcsin(a) * np.where(cls < 4, 1.0, -1.0)
    lengths = np.asarray(PHASE_CLASS_LENGTHS_NM)[cls % 4]
    return SlitLayout(
        x_nm=(cols + 0.5) * period_nm,
        y_nm=(rows + 0.5) * period_nm,
        orientation=theta,
        length_nm=lengths,
        width_nm=np.full(rows.size, SLIT_WIDTH_NM),
        phase_class=cls,
        period_nm=period_nm,
        dims=amp.shape,
    )


def synthesize_field(layout, input_pol, analyzer, dims=None, wavelength=None):
    """Complex field right behind the metasurface for one input/analyzer combination.

    Per occupied cell the amplitude is <analyzer| J_slit |input>; empty
    cells are zero.  The grid pitch is the lattice period.
    """
    if dims is None:
        dims = layout.dims
    if dims is None:
        raise ValueError("layout has no dims; pass dims explicitly")
    period = layout.period_nm
    rowc = np.floor(layout.y_nm / period).astype(int)
    colc = np.floor(layout.x_nm / period).astype(int)
    if len(layout) and (rowc.min() < 0 or colc.min() < 0 or rowc.max() >= dims[0] or colc.max() >= dims[1]):
        raise ValueError("layout cells fall outside the requested grid")

    bra = polarizer_ket(analyzer).conj()
    ket = np.asarray(input_pol, dtype=complex)
    if ket.shape != (2,):
        raise ValueError("input polarization must be a 2-component ket")
    ct, st = np.cos(layout.orientation), np.sin(layout.orientation)
    proj_in = ct * ket[0] + st * ket[1]
    proj_out = bra[0] * ct + bra[1] * st
    vals = np.exp(1j * (layout.phase_class % 4) * np.pi / 4.0) * proj_out * proj_in

    grid = np.zeros(dims, dtype=complex)
    np.add.at(grid, (rowc, colc), vals)
    kwargs = {} if wavelength is None else {"wavelength": wavelength}
    return ComplexField(grid, period * 1e-9, **kwargs)


def design_hologram(target_amplitude, z=DEFAULT_Z_DESIGN, period_nm=PERIOD_NM, pad_factor=2):
    """Slit layout that reconstructs ``target_amplitude`` at distance z.

    The target is zero-padded, back-propagated to the metasurface plane,
    normalized to unit peak amplitude and encoded.  Reconstruction with
    the designed (cross-polarized) illumination then inverts the same
    transform up to phase quantization.
    """
    tgt = np.asarray(target_amplitude, dtype=float)
    if tgt.min() < 0.0 or tgt.max() > 1.0:
        raise ValueError("target amplitudes must lie in [0, 1]")
    field = pad_field(ComplexField(tgt, period_nm * 1e-9), pad_factor)
    at_surface = backpropagate(field, z)
    mag = np.abs(at_surface.values)
    peak = mag.max()
    if peak <= 0.0:
        raise ValueError("target image is empty")
    return encode_hologram(mag / peak, np.angle(at_surface.values), period_nm)


def reconstruct_hologram(layout, input_pol, analyzer, z=DEFAULT_Z_DESIGN, out_dims=None):
    """Synthesize the analyzed field and propagate it to the image plane.

    Returns the propagated ComplexField; ``out_dims`` crops the result
    (e.g. back to the original target window).
    """
    field = synthesize_field(layout, input_pol, analyzer)
    out = angular_spectrum_propagate(field, PropagationPlan(z))
    if out_dims is not None:
        out = crop_field(out, out_dims)
    return out


def scramble_metric(img_a, img_b):
    """Pearson correlation between two intensity images (same dims)."""
    a = np.asarray(img_a, dtype=float).ravel()
    b = np.asarray(img_b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError("images must have identical dims")
    if a.std() == 0.0 or b.std() == 0.0:
        raise ValueError("correlation undefined for a zero-variance image")
    return float(np.corrcoef(a, b)[0, 1])


def builtin_target_image(dims=128):
    """Deterministic binary test image (disk, annulus and cross) used for acceptance runs."""
    n = int(dims)
    yy, xx = np.mgrid[0:n, 0:n]
    cy = cx = (n - 1) / 2.0
    r = np.hypot(yy - cy, xx - cx)
    img = (r <= 0.12 * n) | ((r >= 0.30 * n) & (r <= 0.38 * n))
    arm = (np.abs(yy - cy) <= 0.035 * n) | (np.abs(xx - cx) <= 0.035 * n)
    img |= arm & (r <= 0.26 * n) & (r >= 0.16 * n)
    return img.astype(float)
