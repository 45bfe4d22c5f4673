"""Metric, curvature, spectrum and error bounds at a parameter point.

From the lift vectors l_1..l_m the module assembles the real part of the
Gram matrix (the SLD Fisher matrix), its imaginary part (the curvature
matrix of the phase connection), and the spectrum of the metric-adjoint
map D = J_S^{-1} J_tilde.  The eigenvalues of D come in pairs +-i beta_j
with 0 <= beta_j <= 1; they quantify how far the family is from being
measurable classically, and they enter the attainable error bound

    CR(J_S) = sum_j 4 / (1 + sqrt(1 - beta_j^2))

which equals m exactly when the curvature vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficiencyError, SpectralConsistencyError

RANK_TOL = 1e-10
METRIC_SCALE_FLOOR = 1e-12
BETA_BOUND_TOL = 1e-6
QUASI_CLASSICAL_TOL = 1e-8


def _is_singular(eigvals, rank_tol=RANK_TOL):
    # relative rank test, with an absolute floor so the all-zero metric
    # (pure-gauge directions) is caught as well
    largest = float(eigvals[-1])
    return largest <= METRIC_SCALE_FLOOR or eigvals[0] <= rank_tol * largest


@dataclass(frozen=True)
class WeightMatrix:
    """Real symmetric nonnegative weight for the error functional."""

    matrix: np.ndarray

    def __post_init__(self):
        g = np.array(self.matrix, dtype=float, copy=True)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("weight must be a square matrix")
        if np.max(np.abs(g - g.T)) > 1e-12:
            raise ValueError("weight must be symmetric within 1e-12")
        if np.min(np.linalg.eigvalsh(g)) < -1e-12:
            raise ValueError("weight must be positive semidefinite")
        g.setflags(write=False)
        object.__setattr__(self, "matrix", g)


def _gram(lift):
    vecs = [l.coords for l in lift.lifts]
    m = len(vecs)
    g = np.empty((m, m), dtype=complex)
    for a in range(m):
        for b in range(a, m):
            g[a, b] = np.vdot(vecs[a], vecs[b])
            g[b, a] = np.conj(g[a, b])
    return g


def sld_fisher(lift):
    """Real part of the lift Gram matrix; symmetric PSD."""
    g = _gram(lift).real
    return 0.5 * (g + g.T)


def berry_curvature(lift):
    """Imaginary part of the lift Gram matrix; antisymmetric."""
    g = _gram(lift).imag
    return 0.5 * (g - g.T)


def _inverse_sqrt(j_s, rank_tol=RANK_TOL):
    j_s = np.asarray(j_s, dtype=float)
    eigvals, eigvecs = np.linalg.eigh(j_s)
    if _is_singular(eigvals, rank_tol):
        null = eigvals <= max(rank_tol * eigvals[-1], METRIC_SCALE_FLOOR)
        raise RankDeficiencyError(
            f"metric is singular: eigenvalues {eigvals.tolist()}",
            null_directions=eigvecs[:, null],
        )
    return eigvecs @ np.diag(eigvals**-0.5) @ eigvecs.T


def _beta_spectrum(j_s, j_tilde, rank_tol=RANK_TOL):
    """Singular values of the metric-whitened curvature, one per pair."""
    inv_sqrt = _inverse_sqrt(j_s, rank_tol)
    k = inv_sqrt @ np.asarray(j_tilde, dtype=float) @ inv_sqrt
    k = 0.5 * (k - k.T)
    svals = np.linalg.svd(k, compute_uv=False)
    # antisymmetric real: singular values pair up as (b, b); keep one of each
    betas = svals[0::2]
    return [float(b) for b in betas if b > rank_tol * max(1.0, svals[0] if len(svals) else 1.0)]


def d_transform(j_s, j_tilde, rank_tol=RANK_TOL):
    """Metric-adjoint of the curvature: D = J_S^{-1} J_tilde.

    Returns ``(D, betas)`` with betas the nonzero pair magnitudes of the
    spectrum +-i beta_j, sorted descending.  The spectrum is extracted
    from the symmetrized J_S^{-1/2} J_tilde J_S^{-1/2}, which is exactly
    antisymmetric in the metric frame, so the pairing is numerically
    guaranteed.  Raises :class:`RankDeficiencyError` when the metric is
    singular at relative tolerance ``rank_tol``.
    """
    j_s = np.asarray(j_s, dtype=float)
    j_tilde = np.asarray(j_tilde, dtype=float)
    betas = _beta_spectrum(j_s, j_tilde, rank_tol)
    d = np.linalg.solve(j_s, j_tilde)
    return d, betas


def d_via_projection(lift, x):
    """Complex-structure action computed at the vector level.

    Multiplies the lift of the tangent X by the imaginary unit, projects
    the result back onto the real span of the lift frame with respect to
    Re<*|*>, and returns the frame coordinates of the projection.  The
    orientation of the unit (-i rather than +i) is fixed so that the
    result agrees with ``d_transform(J_S, J_tilde) @ x`` for the
    convention J_tilde = Im<l_i|l_j>; the opposite orientation yields the
    transposed map.
    """
    x = np.asarray(x, dtype=float)
    m = lift.m
    if x.shape != (m,):
        raise ValueError(f"tangent coefficients must have shape ({m},)")
    frame = np.column_stack([l.coords for l in lift.lifts])
    l_x = frame @ x
    rotated = -1j * l_x
    # least squares over the reals: stack real and imaginary parts
    a = np.concatenate([frame.real, frame.imag], axis=0)
    b = np.concatenate([rotated.real, rotated.imag], axis=0)
    coeffs, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < m:
        raise RankDeficiencyError(
            f"lift frame spans only {rank} of {m} real directions"
        )
    return coeffs


def sld_bound(weight, j_s, rank_tol=RANK_TOL):
    """Lower bound Tr G J_S^{-1} on the weighted estimation error."""
    g = weight.matrix if isinstance(weight, WeightMatrix) else np.asarray(weight, float)
    j_s = np.asarray(j_s, dtype=float)
    eigvals = np.linalg.eigvalsh(j_s)
    if _is_singular(eigvals, rank_tol):
        raise RankDeficiencyError(
            f"metric is singular: eigenvalues {eigvals.tolist()}"
        )
    return float(np.trace(np.linalg.solve(j_s, g)))


def attainable_cr_js(j_s, j_tilde, rank_tol=RANK_TOL):
    """Attainable error bound at weight G = J_S.

    Each curvature pair beta_j contributes 4 / (1 + sqrt(1 - beta_j^2));
    directions outside any pair contribute 1, the classical value, which
    is also the beta -> 0 limit of half a pair.  The total is >= m with
    equality exactly when the curvature vanishes.
    """
    j_s = np.asarray(j_s, dtype=float)
    m = j_s.shape[0]
    betas = _beta_spectrum(j_s, j_tilde, rank_tol)
    for b in betas:
        if b > 1.0 + BETA_BOUND_TOL:
            raise SpectralConsistencyError(
                f"beta = {b:.8f} exceeds 1 beyond tolerance {BETA_BOUND_TOL:.0e}; "
                "the inputs are not the metric and curvature of a pure-state family"
            )
    clamped = [min(b, 1.0) for b in betas]
    paired = sum(4.0 / (1.0 + np.sqrt(1.0 - b * b)) for b in clamped)
    unpaired = m - 2 * len(clamped)
    return float(paired + unpaired)


def is_quasi_classical(j_tilde, j_s=None, tol=QUASI_CLASSICAL_TOL):
    """True when the curvature vanishes relative to the metric scale."""
    j_tilde = np.asarray(j_tilde, dtype=float)
    scale = 1.0
    if j_s is not None:
        scale = max(1.0, float(np.max(np.abs(j_s))))
    return bool(np.max(np.abs(j_tilde)) < tol * scale)


@dataclass(frozen=True)
class GeometryReport:
    """All point-local geometric quantities of a model at one theta."""

    theta: np.ndarray
    sld_fisher: np.ndarray
    berry_curvature: np.ndarray
    d_matrix: np.ndarray | None
    betas: tuple
    cr_js: float | None
    quasi_classical: bool
    rank_deficient: bool

    @property
    def m(self):
        return self.sld_fisher.shape[0]

    def sld_bound(self, weight):
        """Tr G J_S^{-1}; raises on a rank-deficient metric."""
        return sld_bound(weight, self.sld_fisher)


def analyze(model, theta, rank_tol=RANK_TOL, qc_tol=QUASI_CLASSICAL_TOL):
    """Geometry report of ``model`` at ``theta``.

    Rank deficiency of the metric is reported as a flag here; only the
    bound computations (``sld_bound``, ``cr_js``) treat it as an error,
    so the corresponding fields come back as None.
    """
    lift = model.horizontal_lift(theta)
    j_s = sld_fisher(lift)
    j_t = berry_curvature(lift)
    eigvals = np.linalg.eigvalsh(j_s)
    deficient = bool(_is_singular(eigvals, rank_tol))
    if deficient:
        d_matrix, betas, cr = None, (), None
    else:
        d_matrix, beta_list = d_transform(j_s, j_t, rank_tol)
        betas = tuple(beta_list)
        cr = attainable_cr_js(j_s, j_t, rank_tol)
    return GeometryReport(
        theta=lift.theta,
        sld_fisher=j_s,
        berry_curvature=j_t,
        d_matrix=d_matrix,
        betas=betas,
        cr_js=cr,
        quasi_classical=is_quasi_classical(j_t, j_s, qc_tol),
        rank_deficient=deficient,
    )
