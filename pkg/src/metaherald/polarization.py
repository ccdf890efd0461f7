"""Two-qubit polarization algebra for herald/signal photon pairs.

Single-photon operators live in the ordered basis (V, H); two-photon
operators in (V_h V_s, V_h H_s, H_h V_s, H_h H_s), herald slot first.
A polarizer angle phi is measured from the V axis, so the transmitted
ket is cos(phi)|V> + sin(phi)|H>.  Everything is plain numpy; all
functions are pure and all returned arrays are freshly allocated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-10

KET_V = np.array([1.0, 0.0], dtype=complex)
KET_H = np.array([0.0, 1.0], dtype=complex)
KET_D = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)   # polarizer at 45 deg
KET_AD = np.array([-1.0, 1.0], dtype=complex) / np.sqrt(2.0)  # polarizer at 135 deg

IDENTITY_2 = np.eye(2, dtype=complex)
IDENTITY_4 = np.eye(4, dtype=complex)


def polarizer_ket(phi):
    """Unit ket transmitted by a linear polarizer at angle ``phi`` (radians from V)."""
    return np.array([np.cos(phi), np.sin(phi)], dtype=complex)


def projector(phi):
    """Rank-1 projector onto the polarizer axis at ``phi``.

    Satisfies projector(phi) + projector(phi + pi/2) = identity and is
    pi-periodic in phi.
    """
    k = polarizer_ket(phi)
    return np.outer(k, k.conj())


def tensor(a, b):
    """Kronecker product of two single-photon (2x2) operators, herald slot first."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError(f"tensor expects two 2x2 operators, got {a.shape} and {b.shape}")
    return np.kron(a, b)


def trace_expectation(rho, op):
    """Real expectation value Tr(rho @ op) of a 4x4 operator on a two-photon state.

    For Hermitian ``op`` and a valid density matrix the trace is real to
    within 1e-12; only the real part is returned.
    """
    rho = np.asarray(rho, dtype=complex)
    op = np.asarray(op, dtype=complex)
    if rho.shape != (4, 4) or op.shape != (4, 4):
        raise ValueError(f"trace_expectation expects 4x4 matrices, got {rho.shape} and {op.shape}")
    return float(np.trace(rho @ op).real)


def _two_photon_ket(herald, signal):
    return np.kron(herald, signal)


def mixed_state():
    """Equal classical mixture of |H_h V_s> and |V_h H_s> (the beamsplitter pair state)."""
    hv = _two_photon_ket(KET_H, KET_V)
    vh = _two_photon_ket(KET_V, KET_H)
    return 0.5 * (np.outer(hv, hv.conj()) + np.outer(vh, vh.conj()))


def pure_state():
    """Polarization singlet (|H_h V_s> - |V_h H_s>)/sqrt(2) as a density matrix."""
    psi = (_two_photon_ket(KET_H, KET_V) - _two_photon_ket(KET_V, KET_H)) / np.sqrt(2.0)
    return np.outer(psi, psi.conj())


@dataclass(frozen=True)
class StateModel:
    """Two-knob family interpolating the singlet, the classical mixture and white noise.

    lambda_coherence weights the singlet coherences (1 = fully entangled,
    0 = classical mixture); v_white is the complement of admixed
    unpolarized noise (1 = no noise, 0 = maximally mixed).
    """

    lambda_coherence: float
    v_white: float

    def __post_init__(self):
        if not (0.0 <= self.lambda_coherence <= 1.0):
            raise ValueError(f"lambda_coherence must be in [0, 1], got {self.lambda_coherence}")
        if not (0.0 <= self.v_white <= 1.0):
            raise ValueError(f"v_white must be in [0, 1], got {self.v_white}")


PURE_MODEL = StateModel(1.0, 1.0)
MIXED_MODEL = StateModel(0.0, 1.0)


def model_state(model):
    """Density matrix v*[lam*rho_pure + (1-lam)*rho_mixed] + (1-v)*I/4."""
    lam = model.lambda_coherence
    v = model.v_white
    rho = v * (lam * pure_state() + (1.0 - lam) * mixed_state())
    rho += (1.0 - v) * IDENTITY_4 / 4.0
    return rho


def heralded_signal_state(rho, phi):
    """Unnormalized signal state after heralding through a polarizer at ``phi``.

    Returns Tr_h[(chi(phi) (x) 1) rho]; its trace is the herald pass
    probability.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 density matrix, got {rho.shape}")
    chi = projector(phi)
    r = rho.reshape(2, 2, 2, 2)  # [h, s, h', s']
    return np.einsum("ab,bsat->st", chi, r)


def herald_pass_probability(rho, phi):
    """Probability that the herald photon passes a polarizer at ``phi``."""
    return float(np.trace(heralded_signal_state(rho, phi)).real)


def check_density_matrix(rho, tol=HERMITICITY_TOL, psd_tol=PSD_TOL):
    """Raise ValueError unless ``rho`` is Hermitian, unit-trace and PSD within tolerance."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected 4x4, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol or abs(np.trace(rho).imag) > tol:
        raise ValueError("density matrix trace is not 1")
    eigs = np.linalg.eigvalsh(rho)
    if eigs.min() < -psd_tol:
        raise ValueError(f"density matrix has negative eigenvalue {eigs.min():.3e}")
    return rho
