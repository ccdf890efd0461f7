"""CHSH correlations, Bell parameter search, and calibration of the state model.

The analyzer observable at angle theta is sigma(theta) = chi(theta) -
chi(theta + 90deg), which decomposes exactly as cos(2 theta) sigma(0) +
sin(2 theta) sigma(45deg); correlations are therefore bilinear in
(cos 2theta, sin 2theta), and the brute-force setting search exploits
that to evaluate E on dense angle grids cheaply.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polarization import StateModel, model_state, projector, tensor, trace_expectation

TSIRELSON = 2.0 * np.sqrt(2.0)


@dataclass(frozen=True)
class ChshSetting:
    """Analyzer angles (radians): herald pair (a, a_prime), signal pair (b, b_prime)."""

    a: float
    a_prime: float
    b: float
    b_prime: float


# Maximizes |S| for the singlet under S = E(a,b) - E(a,b') + E(a',b) + E(a',b'),
# giving S = -2*sqrt(2) exactly.
CANONICAL_SINGLET_SETTING = ChshSetting(np.pi / 4, 0.0, np.pi / 8, -np.pi / 8)


def analyzer_observable(theta):
    """Dichotomic polarization observable chi(theta) - chi(theta + 90deg)."""
    return projector(theta) - projector(theta + np.pi / 2)


def correlation_E(rho, a, b):
    """Correlation E(a, b) = Tr[rho sigma(a) (x) sigma(b)], in [-1, 1]."""
    return trace_expectation(rho, tensor(analyzer_observable(a), analyzer_observable(b)))


def chsh_S(rho, setting):
    """CHSH statistic S = E(a,b) - E(a,b') + E(a',b) + E(a',b')."""
    return (
        correlation_E(rho, setting.a, setting.b)
        - correlation_E(rho, setting.a, setting.b_prime)
        + correlation_E(rho, setting.a_prime, setting.b)
        + correlation_E(rho, setting.a_prime, setting.b_prime)
    )


def _correlation_block(rho):
    """2x2 matrix T with E(a,b) = u(a)^T T u(b), u(theta) = (cos 2theta, sin 2theta)."""
    basis = (analyzer_observable(0.0), analyzer_observable(np.pi / 4))
    return np.array([[trace_expectation(rho, tensor(x, y)) for y in basis] for x in basis])


def _s_value(T, a, ap, b, bp):
    def e(x, y):
        ux = np.array([np.cos(2 * x), np.sin(2 * x)])
        uy = np.array([np.cos(2 * y), np.sin(2 * y)])
        return ux @ T @ uy

    return e(a, b) - e(a, bp) + e(ap, b) + e(ap, bp)


def _refine(T, angles, sign, step=np.radians(0.5)):
    """Coordinate-descent polish of sign * S around a grid optimum."""
    angles = list(angles)
    best = sign * _s_value(T, *angles)
    while step > 1e-7:
        improved = False
        for i in range(4):
            for delta in (step, -step):
                trial = list(angles)
                trial[i] += delta
                val = sign * _s_value(T, *trial)
                if val > best + 1e-15:
                    best, angles, improved = val, trial, True
        if not improved:
            step *= 0.5
    return best, angles


def max_chsh_S(rho, step_deg=0.5, full_output=False):
    """Brute-force maximum of |S| over all four analyzer angles.

    Dense grid at ``step_deg`` resolution (angles mod pi), followed by a
    local refinement; accurate to well below 1e-3 in S.
    """
    T = _correlation_block(rho)
    grid = np.radians(np.arange(0.0, 180.0, step_deg))
    u = np.stack([np.cos(2 * grid), np.sin(2 * grid)], axis=1)
    E = u @ T @ u.T  # E[i, j] = E(grid[i], grid[j])

    n = grid.size
    best = {+1: (-np.inf, None), -1: (-np.inf, None)}
    for ia in range(n):
        plus = E[ia][None, :] + E  # (a', b) -> E[a,b] + E[a',b]
        minus = E - E[ia][None, :]  # (a', b') -> E[a',b'] - E[a,b']
        for sign in (+1, -1):
            sp = sign * plus
            sm = sign * minus
            tot = sp.max(axis=1) + sm.max(axis=1)
            iap = int(np.argmax(tot))
            if tot[iap] > best[sign][0]:
                ib = int(np.argmax(sp[iap]))
                ibp = int(np.argmax(sm[iap]))
                best[sign] = (tot[iap], (grid[ia], grid[iap], grid[ib], grid[ibp]))

    results = {}
    for sign in (+1, -1):
        val, angles = _refine(T, best[sign][1], sign, step=np.radians(step_deg))
        results[sign] = (val, angles)
    sign = +1 if results[+1][0] >= results[-1][0] else -1
    s_abs, angles = results[sign]
    if full_output:
        return s_abs, ChshSetting(*angles)
    return s_abs


def calibrate_model(target_s, step_deg=1.0, tol=1e-4):
    """StateModel whose maximal |S| equals ``target_s``.

    Targets above 2 keep v = 1 and bisect the coherence knob; targets at
    or below 2 keep lambda = 0 and bisect the white-noise knob, per the
    deterministic convention.
    """
    if not (0.0 < target_s <= TSIRELSON + 1e-9):
        raise ValueError(f"target S must be in (0, 2*sqrt(2)], got {target_s}")
    target_s = min(target_s, TSIRELSON)

    if target_s > 2.0:
        def candidate(x):
            return StateModel(lambda_coherence=x, v_white=1.0)
    else:
        def candidate(x):
            return StateModel(lambda_coherence=0.0, v_white=x)

    lo, hi = 0.0, 1.0
    f_hi = max_chsh_S(model_state(candidate(hi)), step_deg=step_deg)
    if abs(f_hi - target_s) <= tol:
        return candidate(hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        f_mid = max_chsh_S(model_state(candidate(mid)), step_deg=step_deg)
        if abs(f_mid - target_s) <= tol * 0.1:
            return candidate(mid)
        if f_mid < target_s:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return candidate(0.5 * (lo + hi))


def joint_probabilities(rho, a, b):
    """2x2 joint outcome probabilities at two-channel analyzers (a, b).

    Entry [i, j] is the probability of herald outcome i (0 = passes a,
    1 = passes a + 90deg) and signal outcome j; the four sum to 1.
    """
    p = np.empty((2, 2))
    for i, x in enumerate((a, a + np.pi / 2)):
        for j, y in enumerate((b, b + np.pi / 2)):
            p[i, j] = trace_expectation(rho, tensor(projector(x), projector(y)))
    return p


def sample_chsh_counts(rho, a, b, n_pairs, rng):
    """Multinomial coincidence counts at one analyzer setting: 2x2 integer array."""
    p = joint_probabilities(rho, a, b).ravel()
    p = np.clip(p, 0.0, None)
    return rng.multinomial(int(n_pairs), p / p.sum()).reshape(2, 2)


def _estimate_e(counts):
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    if n <= 0:
        raise ValueError("empty counts at one CHSH setting")
    e = (counts[0, 0] - counts[0, 1] - counts[1, 0] + counts[1, 1]) / n
    stderr = np.sqrt(max(1.0 - e * e, 0.0) / n)
    return e, stderr


def chsh_from_counts(counts_ab, counts_abp, counts_apb, counts_apbp):
    """Statistical S and propagated standard error from counts at the four settings."""
    e1, s1 = _estimate_e(counts_ab)
    e2, s2 = _estimate_e(counts_abp)
    e3, s3 = _estimate_e(counts_apb)
    e4, s4 = _estimate_e(counts_apbp)
    s = e1 - e2 + e3 + e4
    return s, float(np.sqrt(s1**2 + s2**2 + s3**2 + s4**2))


def measure_chsh(rho, setting, n_per_setting, seed):
    """Sample all four settings with substreams of ``seed`` and estimate (S, stderr)."""
    from .montecarlo import substream

    pairs = [
        (setting.a, setting.b),
        (setting.a, setting.b_prime),
        (setting.a_prime, setting.b),
        (setting.a_prime, setting.b_prime),
    ]
    counts = [
        sample_chsh_counts(rho, a, b, n_per_setting, substream(seed, 16 + i))
        for i, (a, b) in enumerate(pairs)
    ]
    return chsh_from_counts(*counts)
