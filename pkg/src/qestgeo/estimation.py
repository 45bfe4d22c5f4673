"""Measurements, induced statistics, and Fisher-information machinery.

POVMs act in the orthonormal coordinates of a space, so grid-cell
measurements carry the quadrature weight automatically.  Probability
derivatives are taken through the lift, d_i p = Re <phi| E |l_i>, which
is exact at the evaluation point and keeps the classical-vs-quantum
Fisher comparison free of finite-difference noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hilbert
from .errors import (
    MeasurementDefinitionError,
    NonRealOverlapError,
    SingularSupportError,
    SpaceMismatchError,
)
from .holonomy import align_phases, is_quasi_parallel

PSD_TOL = 1e-10
RESOLUTION_TOL = 1e-8
PROB_CLIP = 1e-12
SUPPORT_MASS_TOL = 1e-10
SUPPORT_SCORE_TOL = 1e-8


class CellPovm:
    """One rank-1 projector per basis index or quadrature-weighted grid cell."""

    def __init__(self, space):
        self.space = space
        self.outcomes = self._labels(space)

    @staticmethod
    def _labels(space):
        if isinstance(space, hilbert.GridSpace):
            return tuple(float(x) for x in space.points)
        if space.labels is not None:
            return tuple(space.labels)
        return tuple(range(space.dim))

    @property
    def n_outcomes(self):
        return self.space.dim

    def probabilities(self, state):
        if state.space != self.space:
            raise SpaceMismatchError("state does not live on the measured space")
        return np.abs(state.coords) ** 2

    def scores(self, state, lifts):
        # d_i p_w = Re <phi| E_w |l_i>, exact through the projector derivative
        phi = state.coords
        return np.stack([(np.conj(phi) * l.coords).real for l in lifts])

    def node_fisher(self, lifts, mask):
        # limit contribution Re <l_i| E_w |l_j> of outcomes whose
        # probability vanishes quadratically
        w = np.stack([l.coords[mask] for l in lifts])
        return (w.conj() @ w.T).real


class ProjectorPovm:
    """Rank-1 projectors onto an orthonormal family, plus the complement.

    When the family does not span the space, the remainder projector is
    appended as a final catch-all outcome so the elements resolve the
    identity.
    """

    def __init__(self, basis, ortho_tol=RESOLUTION_TOL):
        if not basis:
            raise MeasurementDefinitionError("projector POVM needs at least one vector")
        self.space = basis[0].space
        u = np.column_stack([b.coords for b in basis])
        gram = u.conj().T @ u
        if np.max(np.abs(gram - np.eye(u.shape[1]))) > ortho_tol:
            raise MeasurementDefinitionError(
                "projector POVM vectors are not orthonormal"
            )
        self._u = u
        self.has_complement = u.shape[1] < self.space.dim
        self.outcomes = tuple(range(u.shape[1])) + (
            ("rest",) if self.has_complement else ()
        )

    @property
    def n_outcomes(self):
        return self._u.shape[1] + (1 if self.has_complement else 0)

    def probabilities(self, state):
        if state.space != self.space:
            raise SpaceMismatchError("state does not live on the measured space")
        amps = self._u.conj().T @ state.coords
        p = np.abs(amps) ** 2
        if self.has_complement:
            rest = max(0.0, 1.0 - float(np.sum(p)))
            p = np.concatenate([p, [rest]])
        return p

    def scores(self, state, lifts):
        phi_amp = self._u.conj().T @ state.coords
        rows = []
        for l in lifts:
            l_amp = self._u.conj().T @ l.coords
            s = (np.conj(phi_amp) * l_amp).real
            if self.has_complement:
                s = np.concatenate([s, [-np.sum(s)]])
            rows.append(s)
        return np.stack(rows)

    def node_fisher(self, lifts, mask):
        l_amp = np.stack([self._u.conj().T @ l.coords for l in lifts])
        rank1 = mask[: self._u.shape[1]]
        w = l_amp[:, rank1]
        out = (w.conj() @ w.T).real
        if self.has_complement and mask[-1]:
            full = np.stack([l.coords for l in lifts])
            gram = (full.conj() @ full.T).real
            out = out + gram - (l_amp.conj() @ l_amp.T).real
        return out


class MatrixPovm:
    """Explicit PSD elements; validated to resolve the identity."""

    def __init__(self, elements, outcomes=None, space=None):
        self.elements = [np.asarray(e, dtype=complex) for e in elements]
        if not self.elements:
            raise MeasurementDefinitionError("empty POVM")
        d = self.elements[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for k, e in enumerate(self.elements):
            if e.shape != (d, d):
                raise MeasurementDefinitionError(f"element {k} is not {d}x{d}")
            if np.max(np.abs(e - e.conj().T)) > PSD_TOL:
                raise MeasurementDefinitionError(f"element {k} is not Hermitian")
            if np.min(np.linalg.eigvalsh(0.5 * (e + e.conj().T))) < -PSD_TOL:
                raise MeasurementDefinitionError(f"element {k} is not PSD")
            total += e
        if np.max(np.abs(total - np.eye(d))) > RESOLUTION_TOL:
            raise MeasurementDefinitionError("elements do not sum to the identity")
        self.space = space
        self.outcomes = tuple(outcomes) if outcomes else tuple(range(len(self.elements)))

    @property
    def n_outcomes(self):
        return len(self.elements)

    def probabilities(self, state):
        c = state.coords
        return np.array([float(np.real(np.vdot(c, e @ c))) for e in self.elements])

    def scores(self, state, lifts):
        c = state.coords
        rows = []
        for l in lifts:
            lc = l.coords
            rows.append(
                np.array([float(np.real(np.vdot(c, e @ lc))) for e in self.elements])
            )
        return np.stack(rows)

    def node_fisher(self, lifts, mask):
        m = len(lifts)
        out = np.zeros((m, m))
        for k, masked in enumerate(mask):
            if not masked:
                continue
            e = self.elements[k]
            for a in range(m):
                for b in range(m):
                    out[a, b] += float(np.real(np.vdot(lifts[a].coords,
                                                       e @ lifts[b].coords)))
        return out


def grid_pvm(space):
    """Projective measurement of the grid position (or basis label)."""
    return CellPovm(space)


def induced_distribution(povm, state_or_rho):
    """Outcome probabilities tr(rho E_w), clipped of roundoff negatives."""
    if isinstance(state_or_rho, hilbert.StateVector):
        p = povm.probabilities(state_or_rho)
    else:
        rho = np.asarray(state_or_rho, dtype=complex)
        if hasattr(povm, "elements"):
            p = np.array([float(np.real(np.trace(rho @ e))) for e in povm.elements])
        elif isinstance(povm, CellPovm):
            p = np.real(np.diag(rho)).copy()
        else:
            u = povm._u
            p = np.real(np.einsum("ia,ij,ja->a", u.conj(), rho, u)).copy()
            if povm.has_complement:
                p = np.concatenate([p, [max(0.0, 1.0 - float(np.sum(p)))]])
    if np.min(p) < -PSD_TOL:
        raise MeasurementDefinitionError(
            f"induced probability {np.min(p):.2e} is negative beyond tolerance"
        )
    p = np.clip(p, 0.0, None)
    total = float(np.sum(p))
    if abs(total - 1.0) > RESOLUTION_TOL:
        raise MeasurementDefinitionError(
            f"induced probabilities sum to {total:.12f}, not 1"
        )
    return p


@dataclass(frozen=True)
class ClassicalFamily:
    """Outcome distribution p(w|theta) with its parameter derivatives.

    ``node_fisher``, when present, maps (theta, dropped-outcome mask) to
    the limit Fisher contribution of outcomes whose probability vanishes
    quadratically at theta; measurement-induced families provide it,
    plain probability tables cannot.
    """

    m: int
    n_outcomes: int
    probabilities: object
    scores: object
    node_fisher: object = None

    @staticmethod
    def from_probability_fn(p_fn, m, fd_step=1e-6):
        """Wrap a plain probability function; scores by central differences."""

        def scores(theta):
            theta = np.atleast_1d(np.asarray(theta, dtype=float))
            rows = []
            for i in range(m):
                h = fd_step * max(1.0, abs(theta[i]))
                up = theta.copy()
                dn = theta.copy()
                up[i] += h
                dn[i] -= h
                rows.append((np.asarray(p_fn(up)) - np.asarray(p_fn(dn))) / (2 * h))
            return np.stack(rows)

        probe = np.asarray(p_fn(np.zeros(m)))
        return ClassicalFamily(m=m, n_outcomes=probe.size,
                               probabilities=lambda th: np.asarray(p_fn(th)),
                               scores=scores)


def measurement_family(model, povm):
    """Classical family induced by measuring a model with a fixed POVM."""

    def probabilities(theta):
        return induced_distribution(povm, model.evaluate(theta))

    def scores(theta):
        lift = model.horizontal_lift(theta)
        return povm.scores(lift.phi, lift.lifts)

    def node_fisher(theta, mask):
        lift = model.horizontal_lift(theta)
        return povm.node_fisher(lift.lifts, mask)

    return ClassicalFamily(
        m=model.m,
        n_outcomes=povm.n_outcomes,
        probabilities=probabilities,
        scores=scores,
        node_fisher=node_fisher,
    )


def classical_fisher(family, theta):
    """Fisher matrix sum_w dp_i dp_j / p over the supported outcomes.

    Outcomes below the probability clip must carry negligible derivative,
    otherwise the family has a genuinely singular support and the
    computation aborts.  When the family knows its measurement structure,
    clipped outcomes whose probability vanishes quadratically (a state
    node sitting exactly on the evaluation point) contribute their finite
    limit Re <l_i|E|l_j> instead of being dropped, which is what the
    chain-rule form 4 sum (da_i)^2 yields for real amplitude families.
    """
    p = np.asarray(family.probabilities(theta), dtype=float)
    s = np.asarray(family.scores(theta), dtype=float)
    support = p > PROB_CLIP
    dropped = ~support
    if np.any(dropped):
        bad = np.max(np.abs(s[:, dropped])) if s[:, dropped].size else 0.0
        if bad > SUPPORT_SCORE_TOL:
            raise SingularSupportError(
                f"outcome with p < {PROB_CLIP:.0e} carries score {bad:.2e}"
            )
    mass = float(np.sum(p[support]))
    if mass < 1.0 - SUPPORT_MASS_TOL:
        raise SingularSupportError(
            f"support mass {mass:.12f} is below 1 - {SUPPORT_MASS_TOL:.0e}"
        )
    w = s[:, support] / np.sqrt(p[support])
    j = w @ w.T
    if np.any(dropped) and family.node_fisher is not None:
        j = j + np.asarray(family.node_fisher(theta, dropped), dtype=float)
    return 0.5 * (j + j.T)


def optimal_measurement_quasi_parallel(model, sample_thetas, tol=1e-6):
    """Fixed projective measurement attaining the quantum Fisher matrix.

    Requires the family to pass :func:`is_quasi_parallel` on the samples.
    The sample states are phase-aligned and orthonormalized over the
    reals; measuring in that basis gives a classical Fisher matrix equal
    to the quantum one at every sampled point, with a single measurement
    that never depends on the parameter.
    """
    flag, witness = is_quasi_parallel(model, sample_thetas, tol)
    if not flag:
        raise NonRealOverlapError(
            "family is not quasi-parallel on the samples "
            f"(witness {witness['value']:.3e} at pair {witness['pair']})",
            pair=tuple(witness["pair"]),
            imag=witness["value"],
        )
    states = [model.evaluate(t) for t in sample_thetas]
    aligned, _ = align_phases(states)
    basis = hilbert.gram_schmidt_real(aligned, tol=1e-8)
    return ProjectorPovm(basis)


def sample_outcomes(povm, state_or_rho, n, seed):
    """n i.i.d. outcome indices; identical seeds give identical draws."""
    if n < 1:
        raise ValueError("need n >= 1 draws")
    p = induced_distribution(povm, state_or_rho)
    p = p / np.sum(p)
    rng = np.random.default_rng(seed)
    return rng.choice(len(p), size=int(n), p=p)


def split_seeds(seed, n_streams):
    """Independent child seeds for parallel workers."""
    return [s.generate_state(1)[0] for s in np.random.SeedSequence(seed).spawn(n_streams)]


@dataclass(frozen=True)
class EstimatorStats:
    """Empirical moments of an estimator over sampled outcomes."""

    estimate_fn: object
    mean: np.ndarray
    covariance: np.ndarray
    n: int
    seed: object = None


def estimator_covariance(outcomes, estimate_fn, seed=None):
    """Unbiased sample mean and covariance of estimate_fn over outcomes.

    ``estimate_fn`` receives the whole outcome-index array and returns
    per-draw estimates, shape (n,) or (n, m).
    """
    outcomes = np.asarray(outcomes)
    n = outcomes.shape[0]
    if n < 2:
        raise ValueError("need at least two outcomes for a covariance")
    est = np.asarray(estimate_fn(outcomes), dtype=float)
    if est.ndim == 1:
        est = est[:, None]
    mean = est.mean(axis=0)
    centered = est - mean
    cov = centered.T @ centered / (n - 1)
    return EstimatorStats(estimate_fn=estimate_fn, mean=mean, covariance=cov,
                          n=n, seed=seed)
