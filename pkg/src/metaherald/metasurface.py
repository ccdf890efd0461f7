"""Polarization-selective metasurface model.

A metasurface is described at two levels: per-pixel intensity
transmittances for the two orthogonal slit families (``AmplitudeMask``),
which feed the measurement operator, and the explicit slit-antenna
lattice (``SlitLayout``) used by the hologram engine and the fabrication
text export.

Pattern A transmits the polarization at the metasurface angle xi
(the triangle at xi = 0 transmits V), pattern B the orthogonal one
(the star transmits H).  Slit orientation angles name the transmitting
(short, TM) axis, measured from the V axis like every other angle in
this package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pgmio import atomic_write_text, read_pgm, write_pgm
from .polarization import projector

PERIOD_NM = 300.0
SLIT_WIDTH_NM = 50.0
UNIFORM_SLIT_LENGTH_NM = 190.0
# slit length per base phase level: 0, pi/4, pi/2, 3pi/4 (classes 4..7 reuse them)
PHASE_CLASS_LENGTHS_NM = (170.0, 200.0, 240.0, 280.0)

MIN_MASK_DIM = 64


@dataclass(frozen=True)
class AmplitudeMask:
    """Per-pixel intensity transmittances of the two slit patterns.

    theta_a / theta_b are grids in [0, 1]; for the star/triangle device
    they are binary and disjoint (theta_a * theta_b = 0 everywhere).
    """

    theta_a: np.ndarray
    theta_b: np.ndarray
    pitch: float = PERIOD_NM * 1e-9

    def __post_init__(self):
        a = np.asarray(self.theta_a, dtype=float)
        b = np.asarray(self.theta_b, dtype=float)
        if a.ndim != 2 or a.shape != b.shape:
            raise ValueError(f"pattern grids must be 2-D with equal dims, got {a.shape} and {b.shape}")
        for name, g in (("theta_a", a), ("theta_b", b)):
            if g.min() < 0.0 or g.max() > 1.0:
                raise ValueError(f"{name} values must lie in [0, 1]")
        object.__setattr__(self, "theta_a", a)
        object.__setattr__(self, "theta_b", b)

    @property
    def dims(self):
        return self.theta_a.shape

    def is_binary_disjoint(self, tol=0.0):
        binary = np.isin(self.theta_a, (0.0, 1.0)).all() and np.isin(self.theta_b, (0.0, 1.0)).all()
        return bool(binary and np.max(self.theta_a * self.theta_b) <= tol)

    def swapped(self):
        """Mask with the two patterns exchanged."""
        return AmplitudeMask(self.theta_b.copy(), self.theta_a.copy(), self.pitch)


def _point_in_polygon(px, py, verts):
    """Even-odd crossing test, vectorized over pixel coordinate grids."""
    inside = np.zeros(px.shape, dtype=bool)
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        crosses = (y0 <= py) != (y1 <= py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (px < xcross)
    return inside


def _regular_polygon(cx, cy, radii, phase):
    n = len(radii)
    angles = phase + 2.0 * np.pi * np.arange(n) / n
    return [(cx + r * np.sin(t), cy - r * np.cos(t)) for r, t in zip(radii, angles)]


def generate_star_triangle_mask(dims=(256, 256), pitch=PERIOD_NM * 1e-9, swap=False):
    """Binary disjoint star (pattern B) and triangle (pattern A) on a zero background.

    The triangle occupies the left half of the frame, the five-pointed
    star the right half; shapes scale with the frame.  ``swap``
    exchanges which pattern carries which shape.
    """
    rows, cols = dims
    if rows < MIN_MASK_DIM or cols < MIN_MASK_DIM:
        raise ValueError(f"mask dims too small to render both shapes: {rows}x{cols} (need >= {MIN_MASK_DIM})")

    yy, xx = np.mgrid[0:rows, 0:cols]
    px = xx + 0.5
    py = yy + 0.5
    scale = min(rows, cols)

    tri = _regular_polygon(0.27 * cols, 0.52 * rows, [0.24 * scale] * 3, phase=0.0)
    triangle = _point_in_polygon(px, py, tri)

    r_out = 0.26 * scale
    r_in = r_out * np.sin(np.pi / 10) / np.sin(3 * np.pi / 10)
    radii = [r_out if i % 2 == 0 else r_in for i in range(10)]
    star = _point_in_polygon(px, py, _regular_polygon(0.72 * cols, 0.5 * rows, radii, phase=0.0))

    star &= ~triangle  # paranoid: geometry keeps them apart anyway
    theta_a = triangle.astype(float)
    theta_b = star.astype(float)
    if theta_a.sum() == 0 or theta_b.sum() == 0:
        raise ValueError("mask dims too small to render both shapes")
    if swap:
        theta_a, theta_b = theta_b, theta_a
    return AmplitudeMask(theta_a, theta_b, pitch)


def measurement_operator(mask, pixel, xi):
    """POVM element seen by a signal photon at ``pixel`` for metasurface angle ``xi``.

    E = theta_a * chi(xi) + theta_b * chi(xi + 90deg); Hermitian with
    eigenvalues in [0, 1].
    """
    row, col = pixel
    rows, cols = mask.dims
    if not (0 <= row < rows and 0 <= col < cols):
        raise IndexError(f"pixel {pixel} outside mask dims {mask.dims}")
    return mask.theta_a[row, col] * projector(xi) + mask.theta_b[row, col] * projector(xi + np.pi / 2)


@dataclass(frozen=True)
class SlitLayout:
    """Slit antennas on the square lattice: centers in nm, transmitting-axis angles in radians."""

    x_nm: np.ndarray
    y_nm: np.ndarray
    orientation: np.ndarray
    length_nm: np.ndarray
    width_nm: np.ndarray
    phase_class: np.ndarray
    period_nm: float = PERIOD_NM
    dims: tuple | None = None

    def __post_init__(self):
        arrays = {
            "x_nm": np.asarray(self.x_nm, dtype=float),
            "y_nm": np.asarray(self.y_nm, dtype=float),
            "orientation": np.asarray(self.orientation, dtype=float),
            "length_nm": np.asarray(self.length_nm, dtype=float),
            "width_nm": np.asarray(self.width_nm, dtype=float),
            "phase_class": np.asarray(self.phase_class, dtype=int),
        }
        n = arrays["x_nm"].size
        for name, a in arrays.items():
            if a.ndim != 1 or a.size != n:
                raise ValueError(f"{name} must be a 1-D array of length {n}")
            object.__setattr__(self, name, a)
        if np.any((arrays["phase_class"] < 0) | (arrays["phase_class"] > 7)):
            raise ValueError("phase_class entries must be in 0..7")

    def __len__(self):
        return self.x_nm.size


def slit_jones(orientation, phase_class):
    """Ideal Jones matrix of one slit antenna.

    J = exp(i * (phase_class mod 4) * pi/4) * R(theta) diag(1, 0) R(-theta)
    in the (V, H) basis: a rank-1 projector onto the transmitting axis
    times the length-resonance phase (four levels).  Classes 4..7 denote
    the quadrant-flipped slit family: when the orientation sits in the
    second/fourth quadrant the cross-polarized element sin(2 theta)/2
    changes sign, which is the geometric extra pi that completes the
    eight phase levels.  The cross-polarized magnitude is |sin(2 theta)|/2
    for every class.
    """
    if int(phase_class) != phase_class or not (0 <= int(phase_class) <= 7):
        raise ValueError(f"phase_class must be an integer in 0..7, got {phase_class}")
    return np.exp(1j * (int(phase_class) % 4) * np.pi / 4.0) * projector(orientation)


def layout_star_triangle(mask):
    """One slit per transmitting mask cell on the Methods lattice.

    Pattern-B (star) cells get an H-transmitting slit (orientation 90 deg)
    on the unshifted lattice; pattern-A (triangle) cells get a
    V-transmitting slit (orientation 0) on the lattice shifted by half a
    period in both directions.
    """
    if not mask.is_binary_disjoint():
        raise ValueError("layout_star_triangle needs a binary, disjoint mask")
    period = PERIOD_NM
    half = period / 2.0

    b_rows, b_cols = np.nonzero(mask.theta_b)
    a_rows, a_cols = np.nonzero(mask.theta_a)

    x = np.concatenate([b_cols * period, a_cols * period + half])
    y = np.concatenate([b_rows * period, a_rows * period + half])
    orientation = np.concatenate([np.full(b_rows.size, np.pi / 2.0), np.zeros(a_rows.size)])
    n = x.size
    layout = SlitLayout(
        x_nm=x,
        y_nm=y,
        orientation=orientation,
        length_nm=np.full(n, UNIFORM_SLIT_LENGTH_NM),
        width_nm=np.full(n, SLIT_WIDTH_NM),
        phase_class=np.zeros(n, dtype=int),
        period_nm=period,
        dims=mask.dims,
    )
    bad = count_overlaps(layout)
    if bad:
        raise RuntimeError(f"slit layout construction produced {bad} overlapping pairs")
    return layout


def mask_from_layout(layout, dims):
    """Rasterize a star/triangle layout back to binary pattern grids."""
    rows, cols = dims
    theta_a = np.zeros((rows, cols))
    theta_b = np.zeros((rows, cols))
    period = layout.period_nm
    half = period / 2.0
    vertical = np.isclose(np.cos(2.0 * layout.orientation), 1.0)  # orientation ~ 0 mod pi
    for xs, ys, grid, off in (
        (layout.x_nm[vertical], layout.y_nm[vertical], theta_a, half),
        (layout.x_nm[~vertical], layout.y_nm[~vertical], theta_b, 0.0),
    ):
        r = np.rint((ys - off) / period).astype(int)
        c = np.rint((xs - off) / period).astype(int)
        if r.size and (r.min() < 0 or c.min() < 0 or r.max() >= rows or c.max() >= cols):
            raise ValueError("layout does not fit the requested dims")
        grid[r, c] = 1.0
    return AmplitudeMask(theta_a, theta_b, pitch=period * 1e-9)


def _slit_axes(theta):
    # transmitting (short) axis and long axis as xy unit vectors
    u = np.array([np.sin(theta), np.cos(theta)])
    w = np.array([np.cos(theta), -np.sin(theta)])
    return u, w


def slits_overlap(layout, i, j):
    """Exact oriented-rectangle intersection test between slits i and j."""
    d = np.array([layout.x_nm[j] - layout.x_nm[i], layout.y_nm[j] - layout.y_nm[i]])
    ui, wi = _slit_axes(layout.orientation[i])
    uj, wj = _slit_axes(layout.orientation[j])
    half_i = (layout.width_nm[i] / 2.0, layout.length_nm[i] / 2.0)
    half_j = (layout.width_nm[j] / 2.0, layout.length_nm[j] / 2.0)
    for axis in (ui, wi, uj, wj):
        ri = half_i[0] * abs(axis @ ui) + half_i[1] * abs(axis @ wi)
        rj = half_j[0] * abs(axis @ uj) + half_j[1] * abs(axis @ wj)
        if abs(axis @ d) > ri + rj:
            return False
    return True


def count_overlaps(layout):
    """Number of overlapping slit pairs, using lattice bucketing so large layouts stay O(n)."""
    n = len(layout)
    if n < 2:
        return 0
    period = layout.period_nm
    buckets = {}
    for idx in range(n):
        key = (int(layout.x_nm[idx] // period), int(layout.y_nm[idx] // period))
        buckets.setdefault(key, []).append(idx)
    # two slits can only intersect if their centers are within one period
    bad = 0
    for (bx, by), members in buckets.items():
        neighbors = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                neighbors.extend(buckets.get((bx + dx, by + dy), ()))
        for i in members:
            for j in neighbors:
                if j > i and slits_overlap(layout, i, j):
                    bad += 1
    return bad


def write_layout(path, layout):
    """Text export: one slit per line, space-separated, degrees at the interface."""
    lines = [f"# period_nm={layout.period_nm:g}"]
    deg = np.degrees(layout.orientation)
    for i in range(len(layout)):
        lines.append(
            f"{layout.x_nm[i]:g} {layout.y_nm[i]:g} {deg[i]:.6g} "
            f"{layout.length_nm[i]:g} {layout.width_nm[i]:g} {layout.phase_class[i]}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_layout(path):
    """Load a layout text file written by :func:`write_layout`."""
    period = PERIOD_NM
    cols = [[], [], [], [], [], []]
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "period_nm=" in line:
                    period = float(line.split("period_nm=")[1])
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValueError(f"{path}: malformed slit line: {line!r}")
            for c, p in zip(cols, parts):
                c.append(float(p))
    return SlitLayout(
        x_nm=np.array(cols[0]),
        y_nm=np.array(cols[1]),
        orientation=np.radians(cols[2]),
        length_nm=np.array(cols[3]),
        width_nm=np.array(cols[4]),
        phase_class=np.array(cols[5], dtype=int),
        period_nm=period,
    )


def write_mask_pgm(prefix_a, prefix_b, mask):
    """Export both pattern grids as 8-bit PGMs (255 = fully transmitting)."""
    write_pgm(prefix_a, mask.theta_a * 255.0, maxval=255)
    write_pgm(prefix_b, mask.theta_b * 255.0, maxval=255)


def read_mask_pgm(path_a, path_b, pitch=PERIOD_NM * 1e-9):
    """Load a mask previously exported with :func:`write_mask_pgm`."""
    a, maxval_a = read_pgm(path_a)
    b, maxval_b = read_pgm(path_b)
    return AmplitudeMask(a / maxval_a, b / maxval_b, pitch)
