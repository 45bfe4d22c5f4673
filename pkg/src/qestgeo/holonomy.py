"""Discrete phase transport along curves of states.

The loop phase is the argument of the chain product of consecutive
overlaps <phi_k|phi_{k+1}>, closed with the starting vector.  Every
state appears once as a bra and once as a ket, so the result does not
depend on the phase of any individual state.  Open curves subtract the
direct overlap between the endpoints, which is the discrete version of
comparing the transported endpoint against the reference whose overlap
with the start is real.

Segments whose overlap magnitude falls below 1e-6 are refined by
inserting parameter midpoints, up to three levels, before giving up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hilbert
from .errors import AnchorError, RefinementError, UndefinedPhaseError
from .model import Curve

MIN_OVERLAP = 1e-6
MAX_REFINE_LEVELS = 3
RAY_CLOSURE_TOL = 1e-8


@dataclass(frozen=True)
class PhaseResult:
    gamma: float
    n_segments: int
    min_overlap: float


def _refined_states(model, thetas):
    """Evaluate the chain, inserting midpoints where overlaps collapse."""
    thetas = [np.asarray(t, dtype=float) for t in thetas]
    states = [model.evaluate(t) for t in thetas]
    for _ in range(MAX_REFINE_LEVELS):
        new_thetas = [thetas[0]]
        new_states = [states[0]]
        refined = False
        for k in range(len(thetas) - 1):
            ov = abs(hilbert.inner(states[k], states[k + 1]))
            if ov <= MIN_OVERLAP:
                mid = 0.5 * (thetas[k] + thetas[k + 1])
                new_thetas.append(mid)
                new_states.append(model.evaluate(mid))
                refined = True
            new_thetas.append(thetas[k + 1])
            new_states.append(states[k + 1])
        thetas, states = new_thetas, new_states
        if not refined:
            return thetas, states
    for k in range(len(states) - 1):
        ov = abs(hilbert.inner(states[k], states[k + 1]))
        if ov <= MIN_OVERLAP:
            raise RefinementError(
                f"segment {k} stays near-orthogonal (|overlap| = {ov:.2e}) "
                f"after {MAX_REFINE_LEVELS} refinement levels",
                segment=(thetas[k].tolist(), thetas[k + 1].tolist()),
                overlap=ov,
            )
    return thetas, states


def _ray_distance(a, b):
    pa = np.outer(a.coords, a.coords.conj())
    pb = np.outer(b.coords, b.coords.conj())
    return float(np.linalg.norm(pa - pb))


def berry_phase_loop(curve):
    """Holonomy phase of a closed curve, in (-pi, pi].

    The listed points must return to the starting ray; the closing
    vector is replaced by the starting one, so only ray closure (not
    vector equality) is required.
    """
    if not curve.closed:
        raise ValueError("berry_phase_loop needs a closed curve")
    _, states = _refined_states(curve.model, curve.points)
    dist = _ray_distance(states[0], states[-1])
    if dist >= RAY_CLOSURE_TOL:
        raise ValueError(
            f"curve marked closed but endpoint rays differ by {dist:.2e}"
        )
    chain = states[:-1] + [states[0]]
    prod = 1.0 + 0.0j
    min_ov = np.inf
    for k in range(len(chain) - 1):
        ov = hilbert.inner(chain[k], chain[k + 1])
        min_ov = min(min_ov, abs(ov))
        prod *= ov / abs(ov)
    return PhaseResult(
        gamma=float(np.angle(prod)),
        n_segments=len(chain) - 1,
        min_overlap=float(min_ov),
    )


def berry_phase_open(curve):
    """Transport phase of an open chain, in (-pi, pi].

    Equals the argument of the chain product times the conjugated direct
    overlap <phi_0|phi_K>; for curves that happen to be closed it agrees
    with :func:`berry_phase_loop`.  Orthogonal endpoints leave the
    relative phase undefined.
    """
    _, states = _refined_states(curve.model, curve.points)
    direct = hilbert.inner(states[0], states[-1])
    if abs(direct) <= MIN_OVERLAP:
        raise UndefinedPhaseError(
            f"endpoint overlap magnitude {abs(direct):.2e} leaves the phase undefined"
        )
    prod = 1.0 + 0.0j
    min_ov = np.inf
    for k in range(len(states) - 1):
        ov = hilbert.inner(states[k], states[k + 1])
        min_ov = min(min_ov, abs(ov))
        prod *= ov / abs(ov)
    prod *= np.conj(direct) / abs(direct)
    return PhaseResult(
        gamma=float(np.angle(prod)),
        n_segments=len(states) - 1,
        min_overlap=float(min_ov),
    )


def curvature_check(model, theta, i, j, eps, n_sub=8):
    """Loop phase of a small coordinate rectangle against the curvature.

    The rectangle runs theta -> theta+eps*e_i -> theta+eps*(e_i+e_j) ->
    theta+eps*e_j -> theta, each side cut into ``n_sub`` segments.  The
    second-order prediction for this orientation is half the (i, j)
    curvature entry times the enclosed coordinate area:

        predicted = 0.5 * J_tilde[i, j] * eps**2

    and the measured phase matches it to O(eps^3).  Returns
    ``(measured, predicted)``.
    """
    from .geometry import berry_curvature  # local import avoids a cycle

    theta = np.asarray(theta, dtype=float)
    if model.m < 2:
        raise ValueError("curvature check needs at least two parameters")
    e_i = np.zeros(model.m)
    e_j = np.zeros(model.m)
    e_i[i] = 1.0
    e_j[j] = 1.0
    corners = [theta, theta + eps * e_i, theta + eps * (e_i + e_j), theta + eps * e_j,
               theta]
    points = []
    for a, b in zip(corners[:-1], corners[1:]):
        for s in range(n_sub):
            points.append(a + (b - a) * s / n_sub)
    points.append(corners[-1])
    measured = berry_phase_loop(Curve(model, tuple(points), closed=True)).gamma
    j_tilde = berry_curvature(model.horizontal_lift(theta))
    predicted = 0.5 * j_tilde[i, j] * eps * eps
    return float(measured), float(predicted)


def align_phases(states, threshold=MIN_OVERLAP):
    """Rotate each state so its overlap with a common anchor is real.

    Tries each state as the anchor until one overlaps every other state
    above ``threshold``; raises :class:`AnchorError` when none does.
    Returns ``(aligned_states, anchor_index)``.
    """
    n = len(states)
    for anchor in range(n):
        ovs = [hilbert.inner(states[anchor], s) for s in states]
        if all(abs(ov) > threshold for ov in ovs):
            aligned = [
                s.with_amplitudes(np.exp(-1j * np.angle(ov)) * s.amplitudes)
                for s, ov in zip(states, ovs)
            ]
            return aligned, anchor
    raise AnchorError(
        "no sample overlaps every other sample; cannot phase-align the family"
    )


def is_quasi_parallel(model, sample_thetas, tol=1e-6, align=True):
    """Test whether the family admits a joint phase gauge with real overlaps.

    Evaluates the model on the samples, aligns phases against an anchor,
    and scans all pairs for residual imaginary overlap relative to the
    overlap magnitude (floored at 1e-3 so near-orthogonal pairs do not
    inflate the ratio).  Returns ``(flag, witness)`` where the witness
    holds the maximizing pair and its value.

    ``align=False`` skips the gauge fix and tests the family exactly as
    evaluated.  The two agree whenever the evaluated family is itself
    horizontal (``<phi|d phi> = 0``); a non-horizontal lift can carry a
    removable phase twist that only the aligned test forgives.
    """
    thetas = [np.asarray(t, dtype=float) for t in sample_thetas]
    states = [model.evaluate(t) for t in thetas]
    aligned = states
    if align:
        aligned, _ = align_phases(states)
    worst = 0.0
    worst_pair = (thetas[0], thetas[0])
    for a in range(len(aligned)):
        for b in range(a + 1, len(aligned)):
            ov = hilbert.inner(aligned[a], aligned[b])
            ratio = abs(ov.imag) / max(abs(ov), 1e-3)
            if ratio > worst:
                worst = ratio
                worst_pair = (thetas[a], thetas[b])
    witness = {
        "pair": (worst_pair[0].tolist(), worst_pair[1].tolist()),
        "value": float(worst),
    }
    return bool(worst < tol), witness
