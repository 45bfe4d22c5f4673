"""Parametrized pure-state families and their horizontal lifts.

A model maps a parameter point to a unit state vector; derivatives come
either from user-supplied closed forms or from central differences.  The
horizontal lift of the i-th coordinate direction is

    l_i = 2 d_i phi - 2 <phi | d_i phi> phi,

which is orthogonal to phi and reproduces the projector derivative.  The
module also carries the catalog of concrete example families (shifted
wave packets, spin rotations, a two-well profile with a phase step, a
ring threaded by flux, and the full spin-1/2 ray family).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import hilbert
from .errors import DomainError, ModelDefinitionError
from .hilbert import BasisSpace, GridSpace, StateVector

NORM_DRIFT_TOL = 1e-6
DEFAULT_FD_STEP = 1e-4
LIFT_ORTHO_TOL_ANALYTIC = 1e-8
LIFT_ORTHO_TOL_FD = 1e-6


@dataclass(frozen=True)
class HorizontalLift:
    """States and lift vectors at one parameter point."""

    theta: np.ndarray
    phi: StateVector
    lifts: tuple

    @property
    def m(self):
        return len(self.lifts)


@dataclass(frozen=True)
class PureStateModel:
    """Family theta -> |phi(theta)> over a box domain in R^m.

    ``evaluate_fn`` must return amplitudes already normalized up to a
    drift below 1e-6 (catalog constructors cache their normalization
    constants to guarantee this).  ``tangent_fn(theta, i)``, when given,
    returns the closed-form derivative amplitudes; otherwise central
    differences with per-component step ``fd_step * max(1, |theta_i|)``
    are used.
    """

    space: object
    m: int
    domain: tuple
    evaluate_fn: object
    tangent_fn: object = None
    fd_step: float = DEFAULT_FD_STEP
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    sample_grid: tuple = ()

    def contains(self, theta):
        theta = _as_theta(theta, self.m)
        return all(lo <= t <= hi for t, (lo, hi) in zip(theta, self.domain))

    def evaluate(self, theta):
        theta = _as_theta(theta, self.m)
        if not self.contains(theta):
            raise DomainError(f"theta {theta.tolist()} outside domain {self.domain}")
        state = StateVector(self.space, self.evaluate_fn(theta))
        drift = abs(state.norm() - 1.0)
        if drift >= NORM_DRIFT_TOL:
            raise ModelDefinitionError(
                f"norm drift {drift:.3e} at theta {theta.tolist()} "
                f"(limit {NORM_DRIFT_TOL:.0e}); check grid truncation"
            )
        return StateVector(self.space, state.amplitudes, normalize=True)

    def tangent(self, theta, i):
        """Unnormalized derivative d_i |phi> at theta."""
        theta = _as_theta(theta, self.m)
        if not 0 <= i < self.m:
            raise IndexError(f"component {i} out of range for m={self.m}")
        if self.tangent_fn is not None:
            return StateVector(self.space, self.tangent_fn(theta, i))
        h = self.fd_step * max(1.0, abs(theta[i]))
        up = theta.copy()
        dn = theta.copy()
        up[i] += h
        dn[i] -= h
        if not (self.contains(up) and self.contains(dn)):
            raise DomainError(
                f"finite-difference step {h:.1e} in component {i} leaves the "
                f"domain at theta {theta.tolist()}"
            )
        amp = (self.evaluate(up).amplitudes - self.evaluate(dn).amplitudes) / (2.0 * h)
        return StateVector(self.space, amp)

    def horizontal_lift(self, theta):
        theta = _as_theta(theta, self.m)
        phi = self.evaluate(theta)
        tol = LIFT_ORTHO_TOL_ANALYTIC if self.tangent_fn else LIFT_ORTHO_TOL_FD
        lifts = []
        for i in range(self.m):
            t = self.tangent(theta, i)
            l_amp = 2.0 * t.amplitudes - 2.0 * hilbert.inner(phi, t) * phi.amplitudes
            lift = StateVector(self.space, l_amp)
            overlap = abs(hilbert.inner(lift, phi))
            if overlap >= tol:
                raise ModelDefinitionError(
                    f"lift {i} fails orthogonality: |<l|phi>| = {overlap:.3e}"
                )
            lifts.append(lift)
        return HorizontalLift(theta=theta, phi=phi, lifts=tuple(lifts))


@dataclass(frozen=True)
class Curve:
    """Ordered parameter points of a model, optionally closed as rays."""

    model: PureStateModel
    points: tuple
    closed: bool = False

    def __post_init__(self):
        pts = tuple(_as_theta(p, self.model.m) for p in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValueError("a curve needs at least two points")

    def states(self):
        return [self.model.evaluate(p) for p in self.points]


def _as_theta(theta, m):
    arr = np.atleast_1d(np.asarray(theta, dtype=float))
    if arr.shape != (m,):
        raise DomainError(f"theta has shape {arr.shape}, model expects ({m},)")
    return arr


def rephased(model, alpha, grad_alpha=None):
    """Gauge transform phi -> exp(i alpha(theta)) phi.

    ``alpha`` maps a theta array to a real phase.  With an analytic base
    tangent, ``grad_alpha(theta) -> array(m)`` must be supplied so the
    product rule stays closed form; finite-difference models need
    nothing extra.
    """

    def ev(theta):
        return np.exp(1j * alpha(theta)) * model.evaluate_fn(theta)

    tangent_fn = None
    if model.tangent_fn is not None:
        if grad_alpha is None:
            raise ValueError("grad_alpha is required to rephase an analytic model")

        def tangent_fn(theta, i):
            base = model.tangent_fn(theta, i)
            phi = model.evaluate_fn(theta)
            return np.exp(1j * alpha(theta)) * (base + 1j * grad_alpha(theta)[i] * phi)

    return PureStateModel(
        space=model.space,
        m=model.m,
        domain=model.domain,
        evaluate_fn=ev,
        tangent_fn=tangent_fn,
        fd_step=model.fd_step,
        kind=f"rephased:{model.kind}",
        params=dict(model.params),
        sample_grid=model.sample_grid,
    )


# ---------------------------------------------------------------------------
# base profiles for the grid families


@dataclass(frozen=True)
class Profile:
    """Complex 1-d profile with an optional closed-form x-derivative."""

    name: str
    f: object
    df: object = None


def gaussian_profile(width=1.0, center=0.0):
    w = float(width)
    c = float(center)
    norm = np.pi ** (-0.25) / np.sqrt(w)

    def f(x):
        return norm * np.exp(-((x - c) ** 2) / (2.0 * w * w)) + 0j

    def df(x):
        return -(x - c) / (w * w) * f(x)

    return Profile(f"gaussian(width={w:g},center={c:g})", f, df)


def hermite_profile(n):
    """n-th harmonic-oscillator eigenfunction (unit frequency)."""
    n = int(n)
    if n < 0:
        raise ValueError("n must be >= 0")

    def hpoly(k, x):
        coeffs = np.zeros(k + 1)
        coeffs[k] = 1.0
        return np.polynomial.hermite.hermval(x, coeffs)

    norm = (2.0**n * math.factorial(n) * np.sqrt(np.pi)) ** -0.5

    def f(x):
        return norm * hpoly(n, x) * np.exp(-0.5 * x * x) + 0j

    def df(x):
        # H_n' = 2 n H_{n-1}
        lead = 2.0 * n * hpoly(n - 1, x) if n > 0 else 0.0
        return norm * (lead - x * hpoly(n, x)) * np.exp(-0.5 * x * x) + 0j

    return Profile(f"hermite(n={n})", f, df)


def boosted_profile(base, p0):
    """Multiply a profile by the plane-wave factor exp(i p0 x)."""
    p0 = float(p0)

    def f(x):
        return np.exp(1j * p0 * x) * base.f(x)

    df = None
    if base.df is not None:

        def df(x):
            return np.exp(1j * p0 * x) * (base.df(x) + 1j * p0 * base.f(x))

    return Profile(f"boosted(p0={p0:g},{base.name})", f, df)


def chirped_profile(chirp, width=1.0):
    """Gaussian with quadratic phase exp(i c x^2)."""
    c = float(chirp)
    base = gaussian_profile(width)

    def f(x):
        return np.exp(1j * c * x * x) * base.f(x)

    def df(x):
        return np.exp(1j * c * x * x) * (base.df(x) + 2j * c * x * base.f(x))

    return Profile(f"chirped(c={c:g},width={width:g})", f, df)


def two_well_profile(alpha):
    """Quartic-node packet with a phase step at the node.

    f(x) = x^2 exp(-x^2 + i g(x)), g = 0 for x >= 0 and alpha for x < 0.
    The step sits under the node, so the profile and its almost-
    everywhere derivative stay square-integrable.
    """
    a = float(alpha)

    def g(x):
        return np.where(x >= 0.0, 0.0, a)

    def f(x):
        return x * x * np.exp(-x * x + 1j * g(x))

    def df(x):
        return (2.0 * x - 2.0 * x**3) * np.exp(-x * x + 1j * g(x))

    return Profile(f"two_well(alpha={a:g})", f, df)


PROFILE_BUILDERS = {
    "gaussian": lambda p: gaussian_profile(p.get("width", 1.0), p.get("center", 0.0)),
    "hermite": lambda p: hermite_profile(p["n"]),
    "boosted_gaussian": lambda p: boosted_profile(
        gaussian_profile(p.get("width", 1.0)), p["p0"]
    ),
    "chirped_gaussian": lambda p: chirped_profile(p["chirp"], p.get("width", 1.0)),
    "two_well": lambda p: two_well_profile(p["alpha"]),
}


def make_profile(spec):
    """Profile from a name or a {'name': ..., params...} mapping."""
    if isinstance(spec, Profile):
        return spec
    if isinstance(spec, str):
        name, params = spec, {}
    else:
        params = dict(spec)
        name = params.pop("name")
    if name not in PROFILE_BUILDERS:
        raise ValueError(f"unknown profile {name!r}; known: {sorted(PROFILE_BUILDERS)}")
    return PROFILE_BUILDERS[name](params)


# ---------------------------------------------------------------------------
# catalog


def _grid_from_params(params, default_n=512, default_lower=-10.0, default_upper=10.0,
                      periodic=False):
    grid = params.get("grid", {})
    if isinstance(grid, GridSpace):
        return grid
    return GridSpace(
        int(grid.get("n", default_n)),
        float(grid.get("lower", default_lower)),
        float(grid.get("upper", default_upper)),
        periodic=bool(grid.get("periodic", periodic)),
    )


def _grid_norm_factor(profile, space):
    """Normalization constant on the model's own grid, computed once."""
    raw = StateVector(space, profile.f(space.points))
    nrm = raw.norm()
    if nrm == 0.0:
        raise ValueError(f"profile {profile.name} vanishes on the grid")
    return 1.0 / nrm


def _position_shift(params):
    profile = make_profile(params.get("profile", "gaussian"))
    space = _grid_from_params(params)
    c = _grid_norm_factor(profile, space)
    domain = tuple(params.get("domain", ((-2.0, 2.0),)))
    x = space.points

    def ev(theta):
        return c * profile.f(x - theta[0])

    tangent_fn = None
    if profile.df is not None:

        def tangent_fn(theta, i):
            return -c * profile.df(x - theta[0])

    return PureStateModel(
        space=space, m=1, domain=domain, evaluate_fn=ev, tangent_fn=tangent_fn,
        kind="position_shift", params={"profile": profile.name},
        sample_grid=tuple((t,) for t in np.linspace(-1.0, 1.0, 5)),
    )


def _momentum_shift(params):
    profile = make_profile(params.get("profile", "gaussian"))
    space = _grid_from_params(params)
    c = _grid_norm_factor(profile, space)
    domain = tuple(params.get("domain", ((-2.0, 2.0),)))
    x = space.points
    base = c * profile.f(x)

    def ev(theta):
        return np.exp(1j * theta[0] * x) * base

    def tangent_fn(theta, i):
        return 1j * x * np.exp(1j * theta[0] * x) * base

    return PureStateModel(
        space=space, m=1, domain=domain, evaluate_fn=ev, tangent_fn=tangent_fn,
        kind="momentum_shift", params={"profile": profile.name},
        sample_grid=tuple((t,) for t in np.linspace(-1.0, 1.0, 5)),
    )


def _position_momentum_shift(params):
    profile = make_profile(params.get("profile", "gaussian"))
    space = _grid_from_params(params)
    c = _grid_norm_factor(profile, space)
    domain = tuple(params.get("domain", ((-2.0, 2.0), (-2.0, 2.0))))
    x = space.points

    def ev(theta):
        return np.exp(1j * theta[1] * x) * c * profile.f(x - theta[0])

    tangent_fn = None
    if profile.df is not None:

        def tangent_fn(theta, i):
            plane = np.exp(1j * theta[1] * x)
            if i == 0:
                return -plane * c * profile.df(x - theta[0])
            return 1j * x * plane * c * profile.f(x - theta[0])

    diag = np.linspace(-1.0, 1.0, 5)
    return PureStateModel(
        space=space, m=2, domain=domain, evaluate_fn=ev, tangent_fn=tangent_fn,
        kind="position_momentum_shift", params={"profile": profile.name},
        sample_grid=tuple((t, t) for t in diag),
    )


def _spin_jz(params):
    amp = np.asarray(params["amplitudes"], dtype=complex)
    if amp.ndim != 1 or amp.size < 2:
        raise ValueError("amplitudes must be a 1-d sequence of length >= 2")
    amp = amp / np.linalg.norm(amp)
    d = amp.size
    total_spin = (d - 1) / 2.0
    m_values = np.arange(d) - total_spin
    space = BasisSpace(d, labels=tuple(m_values))

    def ev(theta):
        return np.exp(-1j * theta[0] * m_values) * amp

    def tangent_fn(theta, i):
        return -1j * m_values * np.exp(-1j * theta[0] * m_values) * amp

    return PureStateModel(
        space=space, m=1, domain=((-np.inf, np.inf),), evaluate_fn=ev,
        tangent_fn=tangent_fn, kind="spin_jz",
        params={"S": total_spin},
        sample_grid=tuple((t,) for t in np.linspace(0.0, 2.0, 5)),
    )


def _two_well(params):
    alpha = float(params.get("alpha", np.pi / 2))
    profile = two_well_profile(alpha)
    space = _grid_from_params(params, default_n=2048, default_lower=-8.0,
                              default_upper=8.0)
    c = _grid_norm_factor(profile, space)
    domain = tuple(params.get("domain", ((-2.0, 2.0),)))
    x = space.points

    def ev(theta):
        return c * profile.f(x - theta[0])

    def tangent_fn(theta, i):
        # profile derivative taken almost everywhere; the quartic node
        # sits exactly on the phase step, so the step never contributes
        return -c * profile.df(x - theta[0])

    return PureStateModel(
        space=space, m=1, domain=domain, evaluate_fn=ev, tangent_fn=tangent_fn,
        kind="two_well", params={"alpha": alpha},
        sample_grid=tuple((t,) for t in np.linspace(-1.0, 1.0, 5)),
    )


def _ring_flux(params):
    alpha = float(params.get("alpha", 0.3))
    space = _grid_from_params(params, default_n=1024, default_lower=0.0,
                              default_upper=2.0 * np.pi, periodic=True)
    if not space.periodic:
        raise ValueError("ring_flux requires a periodic grid")
    omega = space.points
    raw = StateVector(space, (2.0 - np.cos(omega)) + 0j)
    c = 1.0 / raw.norm()
    domain = tuple(params.get("domain", ((-2.0 * np.pi, 4.0 * np.pi),)))

    def ev(theta):
        s = np.mod(omega - theta[0], 2.0 * np.pi)
        return c * (2.0 - np.cos(s)) * np.exp(1j * alpha * (s + theta[0]))

    def tangent_fn(theta, i):
        # theta-derivative of the transported profile, taken away from
        # the moving phase step (measure zero on the grid)
        s = np.mod(omega - theta[0], 2.0 * np.pi)
        return -c * np.sin(s) * np.exp(1j * alpha * (s + theta[0]))

    return PureStateModel(
        space=space, m=1, domain=domain, evaluate_fn=ev, tangent_fn=tangent_fn,
        kind="ring_flux", params={"alpha": alpha},
        sample_grid=tuple((t,) for t in np.linspace(0.5, 5.5, 5)),
    )


def _bloch(params):
    space = BasisSpace(2, labels=("up", "down"))
    domain = tuple(params.get("domain", ((0.0, np.pi), (-4.0 * np.pi, 4.0 * np.pi))))

    def ev(theta):
        pol, az = theta
        return np.array(
            [np.cos(pol / 2.0), np.exp(1j * az) * np.sin(pol / 2.0)], dtype=complex
        )

    def tangent_fn(theta, i):
        pol, az = theta
        if i == 0:
            return np.array(
                [-0.5 * np.sin(pol / 2.0), 0.5 * np.exp(1j * az) * np.cos(pol / 2.0)],
                dtype=complex,
            )
        return np.array([0.0, 1j * np.exp(1j * az) * np.sin(pol / 2.0)], dtype=complex)

    pol_line = np.linspace(0.6, 2.2, 5)
    az_line = np.linspace(0.0, 1.5, 5)
    return PureStateModel(
        space=space, m=2, domain=domain, evaluate_fn=ev, tangent_fn=tangent_fn,
        kind="bloch", params={},
        sample_grid=tuple(zip(pol_line, az_line)),
    )


CATALOG = {
    "position_shift": _position_shift,
    "momentum_shift": _momentum_shift,
    "position_momentum_shift": _position_momentum_shift,
    "spin_jz": _spin_jz,
    "two_well": _two_well,
    "ring_flux": _ring_flux,
    "bloch": _bloch,
}


def catalog(name, params=None):
    """Construct a catalog model by name.

    Known names: position_shift, momentum_shift, position_momentum_shift,
    spin_jz, two_well, ring_flux, bloch.  Grid families accept a
    ``profile`` spec and a ``grid`` mapping (n, lower, upper, periodic);
    spin_jz needs ``amplitudes``; two_well and ring_flux take ``alpha``.
    """
    if name not in CATALOG:
        raise ValueError(f"unknown catalog model {name!r}; known: {sorted(CATALOG)}")
    return CATALOG[name](dict(params or {}))
