import numpy as np
import pytest

from metaherald.propagation import (
    ComplexField,
    PropagationPlan,
    angular_spectrum_propagate,
    backpropagate,
    crop_field,
    pad_field,
    propagate_padded,
)

from _oracles import rayleigh_sommerfeld_direct, smooth_random_field

WL = 808e-9


def rms(values):
    return float(np.sqrt(np.mean(np.abs(values) ** 2)))


def random_field(n, pitch, seed, wavelength=WL):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return ComplexField(vals, pitch, wavelength)


def test_zero_distance_is_identity():
    f = random_field(64, WL, seed=1)
    out = angular_spectrum_propagate(f, PropagationPlan(0.0))
    assert rms(out.values - f.values) / rms(f.values) < 1e-12


def test_plane_wave_picks_up_global_phase():
    f = ComplexField(np.ones((64, 64), dtype=complex), 2 * WL, WL)
    z = 1e-3
    out = angular_spectrum_propagate(f, PropagationPlan(z))
    expected = np.exp(1j * 2.0 * np.pi / WL * z)
    assert np.max(np.abs(out.values - expected)) < 1e-10
    assert abs(out.power() - f.power()) / f.power() < 1e-10


def test_energy_conservation_without_evanescent_content():
    # pitch >= lambda/2 leaves no evanescent band, so |H| = 1 on the whole grid
    f = random_field(128, WL, seed=2)
    for z in (10e-6, 200e-6, 5e-3):
        out = angular_spectrum_propagate(f, PropagationPlan(z, band_limit=False))
        assert abs(out.power() - f.power()) / f.power() < 1e-10


def test_semigroup_property():
    f = random_field(96, 0.4 * WL, seed=3)  # includes an evanescent band
    z1, z2 = 7e-6, 23e-6
    one = angular_spectrum_propagate(f, PropagationPlan(z1 + z2))
    two = angular_spectrum_propagate(
        angular_spectrum_propagate(f, PropagationPlan(z1)), PropagationPlan(z2)
    )
    assert rms(one.values - two.values) / rms(one.values) < 1e-9


def test_backpropagate_inverts_propagate():
    # pitch = lambda: no evanescent band, so the round trip is exact
    f = random_field(64, WL, seed=4)
    z = 30e-6
    fwd = angular_spectrum_propagate(f, PropagationPlan(z))
    back = backpropagate(fwd, z)
    assert rms(back.values - f.values) / rms(f.values) < 1e-10

    # with an evanescent band the round trip reproduces the band-limited part
    g = random_field(64, 0.4 * WL, seed=7)
    limited = angular_spectrum_propagate(g, PropagationPlan(0.0, band_limit=True))
    back = backpropagate(angular_spectrum_propagate(g, PropagationPlan(z)), z)
    assert rms(back.values - limited.values) / rms(limited.values) < 1e-10


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_matches_rayleigh_sommerfeld_direct_sum(seed):
    pitch = 0.4 * WL
    z = 20e-6
    f = smooth_random_field(32, pitch, seed=seed)
    padded = pad_field(f, factor=64)  # 2048x2048: keeps kernel images out of the window
    out = crop_field(angular_spectrum_propagate(padded, PropagationPlan(z, band_limit=False)), f.dims)
    ref = rayleigh_sommerfeld_direct(f, z)
    assert rms(out.values - ref.values) / rms(ref.values) < 1e-6


def test_matches_rayleigh_sommerfeld_at_200um():
    pitch = 0.4 * WL
    z = 200e-6
    f = smooth_random_field(32, pitch, seed=1, window_sigma=0.30)
    padded = pad_field(f, factor=128)  # 4096: the long throw needs the larger window
    out = crop_field(angular_spectrum_propagate(padded, PropagationPlan(z, band_limit=False)), f.dims)
    ref = rayleigh_sommerfeld_direct(f, z)
    assert rms(out.values - ref.values) / rms(ref.values) < 1e-6


def test_band_limit_zeroes_evanescent_components():
    n, pitch = 64, 0.4 * WL
    f = random_field(n, pitch, seed=5)
    z = 50e-6
    out = angular_spectrum_propagate(f, PropagationPlan(z, band_limit=True))
    spec = np.fft.fft2(out.values)
    fy = np.fft.fftfreq(n, pitch)
    fx = np.fft.fftfreq(n, pitch)
    evanescent = (fy[:, None] ** 2 + fx[None, :] ** 2) > (1.0 / WL) ** 2
    assert np.max(np.abs(spec[evanescent])) < 1e-9


def test_pad_crop_round_trip():
    f = random_field(48, WL, seed=6)
    padded = pad_field(f, factor=2)
    assert padded.dims == (128, 128)
    back = crop_field(padded, f.dims)
    np.testing.assert_array_equal(back.values, f.values)
    out = propagate_padded(f, PropagationPlan(0.0))
    assert rms(out.values - f.values) < 1e-12


def test_validation_errors():
    with pytest.raises(ValueError):
        PropagationPlan(-1e-6)
    with pytest.raises(ValueError):
        ComplexField(np.zeros(4), 1e-6)
    with pytest.raises(ValueError):
        ComplexField(np.array([[np.inf, 0.0], [0.0, 0.0]]), 1e-6)
