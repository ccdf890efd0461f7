import numpy as np
import pytest

from metaherald.metasurface import (
    AmplitudeMask,
    count_overlaps,
    generate_star_triangle_mask,
    layout_star_triangle,
    mask_from_layout,
    measurement_operator,
    read_layout,
    read_mask_pgm,
    slit_jones,
    slits_overlap,
    write_layout,
    write_mask_pgm,
)
from metaherald.polarization import IDENTITY_2, projector


def test_star_triangle_mask_construction():
    mask = generate_star_triangle_mask((256, 256))
    assert mask.theta_a.sum() > 0 and mask.theta_b.sum() > 0
    assert np.max(mask.theta_a * mask.theta_b) == 0.0
    assert np.max(mask.theta_a + mask.theta_b) <= 1.0
    assert mask.is_binary_disjoint()


def test_star_triangle_mask_swap_preserves_area():
    mask = generate_star_triangle_mask((256, 256))
    swapped = generate_star_triangle_mask((256, 256), swap=True)
    total = mask.theta_a.sum() + mask.theta_b.sum()
    assert swapped.theta_a.sum() + swapped.theta_b.sum() == total
    np.testing.assert_array_equal(swapped.theta_a, mask.theta_b)
    np.testing.assert_array_equal(swapped.theta_b, mask.theta_a)


def test_mask_dims_too_small():
    with pytest.raises(ValueError):
        generate_star_triangle_mask((32, 32))


def test_measurement_operator_examples():
    mask = generate_star_triangle_mask((128, 128))
    tri_pixel = tuple(np.argwhere(mask.theta_a > 0)[0])
    star_pixel = tuple(np.argwhere(mask.theta_b > 0)[0])
    bg_pixel = tuple(np.argwhere((mask.theta_a == 0) & (mask.theta_b == 0))[0])

    np.testing.assert_allclose(measurement_operator(mask, tri_pixel, 0.0), np.diag([1.0, 0.0]), atol=1e-15)
    np.testing.assert_allclose(measurement_operator(mask, bg_pixel, 0.3), np.zeros((2, 2)), atol=1e-15)
    np.testing.assert_allclose(
        measurement_operator(mask, star_pixel, np.pi / 4), projector(3 * np.pi / 4), atol=1e-15
    )
    with pytest.raises(IndexError):
        measurement_operator(mask, (128, 0), 0.0)


def test_measurement_operator_povm_bounds():
    rng = np.random.default_rng(3)
    grids = np.stack([rng.uniform(size=(4, 4)), rng.uniform(size=(4, 4))])
    mask = AmplitudeMask(grids[0], grids[1])
    for xi in rng.uniform(0.0, np.pi, size=100):
        for row in range(4):
            for col in range(4):
                eigs = np.linalg.eigvalsh(measurement_operator(mask, (row, col), xi))
                assert eigs.min() >= -1e-12 and eigs.max() <= 1.0 + 1e-12


def test_fully_transmitting_pixel_gives_identity():
    mask = AmplitudeMask(np.ones((2, 2)), np.ones((2, 2)))
    for xi in np.linspace(0.0, np.pi, 17):
        np.testing.assert_allclose(measurement_operator(mask, (0, 0), xi), IDENTITY_2, atol=1e-12)


def test_single_triangle_pixel_layout():
    theta_a = np.zeros((4, 4))
    theta_a[2, 1] = 1.0
    mask = AmplitudeMask(theta_a, np.zeros((4, 4)))
    layout = layout_star_triangle(mask)
    assert len(layout) == 1
    assert layout.x_nm[0] == 1 * 300 + 150 and layout.y_nm[0] == 2 * 300 + 150
    assert layout.orientation[0] == 0.0  # V-transmitting slit for the triangle pattern
    assert layout.length_nm[0] == 190.0 and layout.width_nm[0] == 50.0


def test_empty_mask_gives_empty_layout():
    mask = AmplitudeMask(np.zeros((4, 4)), np.zeros((4, 4)))
    assert len(layout_star_triangle(mask)) == 0


def test_checkerboard_layout_has_no_overlaps():
    yy, xx = np.mgrid[0:10, 0:10]
    checker = ((yy + xx) % 2).astype(float)
    mask = AmplitudeMask(checker, 1.0 - checker)
    layout = layout_star_triangle(mask)
    assert len(layout) == 100
    assert count_overlaps(layout) == 0
    # independent brute-force oracle over every pair
    brute = sum(
        slits_overlap(layout, i, j) for i in range(len(layout)) for j in range(i + 1, len(layout))
    )
    assert brute == 0


def test_layout_mask_round_trip():
    mask = generate_star_triangle_mask((64, 64))
    layout = layout_star_triangle(mask)
    back = mask_from_layout(layout, mask.dims)
    np.testing.assert_array_equal(back.theta_a, mask.theta_a)
    np.testing.assert_array_equal(back.theta_b, mask.theta_b)


def test_slit_jones_examples():
    j = slit_jones(np.pi / 4, 0)
    assert abs(abs(j[0, 1]) - 0.5) < 1e-12
    j0 = slit_jones(0.0, 3)
    assert abs(j0[0, 1]) < 1e-15 and abs(j0[1, 0]) < 1e-15
    # a class-4 slit sits in the quadrant-flipped family: at its proper
    # orientation -22.5deg the cross-pol element is 0.5*sin(45deg) with phase pi
    j4 = slit_jones(np.radians(-22.5), 4)
    cross = j4[0, 1]
    assert abs(abs(cross) - 0.5 * np.sin(np.pi / 4)) < 1e-12
    assert abs(abs(np.angle(cross)) - np.pi) < 1e-12


def test_slit_jones_eight_realized_phase_levels():
    # amplitude 0.6 at each class, orientation following the quadrant rule
    theta = 0.5 * np.arcsin(0.6)
    for cls in range(8):
        j = slit_jones(theta if cls < 4 else -theta, cls)
        cross = j[0, 1]
        assert abs(abs(cross) - 0.3) < 1e-12
        phase_err = np.angle(cross * np.exp(-1j * cls * np.pi / 4.0))
        assert abs(phase_err) < 1e-12


def test_slit_jones_rank_one_unit_phase():
    for theta in np.linspace(0.0, np.pi, 181):
        for cls in range(8):
            j = slit_jones(theta, cls)
            s = np.linalg.svd(j, compute_uv=False)
            assert s[1] <= 1e-12
            assert abs(s[0] - 1.0) < 1e-12  # phase factor has unit magnitude


def test_slit_jones_invalid_class():
    with pytest.raises(ValueError):
        slit_jones(0.1, 8)
    with pytest.raises(ValueError):
        slit_jones(0.1, -1)


def test_layout_text_round_trip(tmp_path):
    mask = generate_star_triangle_mask((64, 64))
    layout = layout_star_triangle(mask)
    path = tmp_path / "layout.txt"
    write_layout(path, layout)
    header = path.read_text().splitlines()[0]
    assert header == "# period_nm=300"
    loaded = read_layout(path)
    assert len(loaded) == len(layout)
    np.testing.assert_allclose(loaded.x_nm, layout.x_nm)
    np.testing.assert_allclose(loaded.y_nm, layout.y_nm)
    np.testing.assert_allclose(loaded.orientation, layout.orientation, atol=1e-7)
    np.testing.assert_array_equal(loaded.phase_class, layout.phase_class)
    back = mask_from_layout(loaded, mask.dims)
    np.testing.assert_array_equal(back.theta_a, mask.theta_a)


def test_mask_pgm_round_trip(tmp_path):
    mask = generate_star_triangle_mask((64, 64))
    pa, pb = tmp_path / "tri.pgm", tmp_path / "star.pgm"
    write_mask_pgm(pa, pb, mask)
    loaded = read_mask_pgm(pa, pb)
    np.testing.assert_array_equal(loaded.theta_a, mask.theta_a)
    np.testing.assert_array_equal(loaded.theta_b, mask.theta_b)
