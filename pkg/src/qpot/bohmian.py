"""Hydrodynamic decomposition and derived field quantities.

psi = sqrt(rho) exp(i S / hbar) gives a density rho, an action phase S and a
velocity field u = (1/m) dS/dz. The quantum potential
Q = -(hbar^2 / 2m) (sqrt(rho))'' / sqrt(rho) is stored per particle in
joules so it compares directly with the other potential energies.

Q diverges at nodes of the engineered profile. Every numerical Q comes with
a validity mask: points where the amplitude is negligible or where the
finite-difference stencil is corrupted by a nearby node are flagged invalid,
and a two-point guard band is eroded around them.
"""

from dataclasses import dataclass

import numpy as np

from .core import HBAR, RealField
from .engineering import ProfileSpec, engineered_profile, profile_derivative
from .errors import (
    DomainError,
    EmptyFieldError,
    GridError,
    NodeSingularity,
    TrajectoryLost,
)

QField = RealField

AMPLITUDE_CUT = 1e-6  # relative sqrt(rho) threshold for masking
CURVATURE_CUT = 0.05  # dimensionless curvature |d2(sqrt rho)| h^2 / sqrt(rho)
GUARD_BAND = 2  # grid points eroded around every masked point


@dataclass(frozen=True)
class MadelungFields:
    grid: object
    density: np.ndarray  # m^-1
    phase: np.ndarray  # J s, unwrapped
    velocity: np.ndarray  # m/s
    valid: np.ndarray


def madelung_decompose(psi, mass):
    """Split psi into density, unwrapped action phase and velocity field.

    The velocity u = (hbar/m) d(arg psi)/dz uses central differences and is
    masked wherever the density falls below 1e-12 of its peak (the phase is
    meaningless there).
    """
    z = psi.grid.z
    rho = psi.density()
    peak = rho.max()
    if peak == 0:
        raise EmptyFieldError("cannot decompose the zero wavefunction")
    valid = rho >= 1e-12 * peak
    theta = np.unwrap(np.angle(psi.values))
    phase = HBAR * theta
    velocity = (HBAR / mass) * np.gradient(theta, z)
    # derivative stencil needs valid neighbors on both sides
    valid = valid & np.roll(valid, 1) & np.roll(valid, -1)
    valid[0] = valid[-1] = False
    return MadelungFields(psi.grid, rho, phase, velocity, valid)


def _second_derivative(values, dz, spacing=1):
    """Central 3-point second derivative at stride `spacing` grid cells."""
    out = np.full_like(values, np.nan)
    s = spacing
    out[s:-s] = (values[2 * s :] - 2 * values[s:-s] + values[: -2 * s]) / (s * dz) ** 2
    return out


def quantum_potential(rho, mass, hbar=None, amplitude_cut=AMPLITUDE_CUT,
                      curvature_cut=CURVATURE_CUT, guard=GUARD_BAND):
    """Q = -(hbar^2/2m) (sqrt rho)''/sqrt(rho) with node-aware masking.

    The second derivative is a 3-point central stencil refined by one
    Richardson step (combining spacings h and 2h). A point is masked when
    its amplitude is below amplitude_cut of the peak, or when the
    dimensionless curvature |d2 sqrt(rho)| h^2 / sqrt(rho) at either stencil
    width exceeds curvature_cut: genuine packet structure varies on scales
    far above the grid spacing, so a large value always indicates an
    unresolved node or numerical junk, not physics. A guard band is then
    eroded around every masked point.
    """
    if hbar is None:
        hbar = HBAR
    if isinstance(rho, RealField):
        grid, vals = rho.grid, rho.values
    else:
        raise GridError("quantum_potential expects a RealField density")
    if np.any(vals < 0):
        raise DomainError("density must be non-negative")
    dz = grid.dz
    amp = np.sqrt(vals)
    peak = amp.max()
    if peak == 0:
        raise EmptyFieldError("density is identically zero")

    d2h = _second_derivative(amp, dz, 1)
    d22 = _second_derivative(amp, dz, 2)
    d2 = (4.0 * d2h - d22) / 3.0

    valid = amp >= amplitude_cut * peak
    with np.errstate(invalid="ignore", divide="ignore"):
        curv_h = np.abs(d2h) * dz**2 / np.where(amp > 0, amp, 1.0)
        curv_2h = np.abs(d22) * (2 * dz) ** 2 / np.where(amp > 0, amp, 1.0)
        junk = (curv_h > curvature_cut) | (curv_2h > curvature_cut)
    valid &= ~junk
    valid &= np.isfinite(d2)
    valid[:2] = valid[-2:] = False

    if guard > 0:
        bad = ~valid
        for _ in range(guard):
            bad = bad | np.roll(bad, 1) | np.roll(bad, -1)
        valid = ~bad

    if not np.any(valid):
        raise EmptyFieldError("all points masked in quantum_potential")

    q = np.zeros_like(vals)
    q[valid] = -(hbar**2 / (2 * mass)) * d2[valid] / amp[valid]
    return QField(grid, q, valid)


def residual_potential(z, params, spec=None, node_tol=1e-6):
    """Closed-form net potential left over after the Gaussian truncation.

    For the packet P(z) exp(-(z-z0)^2/4 sigma^2) the quantum potential is
    exactly +c4/z^4 plus

        Q_res = (hbar^2 / 4 m sigma^2) [1 + 2 s P'/P - s^2/(2 sigma^2)],

    s = z - z0. (Write sqrt(rho) = P e with e the envelope; then
    (sqrt rho)''/sqrt(rho) = P''/P + 2 P'e'/(P e) + e''/e, the first term
    cancels the surface attraction, and e'/e = -s/2 sigma^2,
    e''/e = s^2/4 sigma^4 - 1/2 sigma^2 collect into the bracket above.)
    Setting P' = 0 recovers the pure-Gaussian quantum potential, a useful
    sanity anchor: Q_res(z0) = +hbar^2/(4 m sigma^2).

    Raises NodeSingularity when any requested point sits within node_tol of
    a node of the oscillating factor.
    """
    if spec is None:
        spec = ProfileSpec()
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError("residual_potential requires z > 0")
    _node_check(z, params, spec, node_tol)
    z0 = spec.mean(params)
    sig = spec.sigma(params)
    s = z - z0
    p = engineered_profile(z, params, spec)
    dp = profile_derivative(z, params, spec)
    pref = params.hbar**2 / (4 * params.mass * sig**2)
    out = pref * (1.0 + 2.0 * s * dp / p - s**2 / (2 * sig**2))
    return out if out.ndim else float(out)


def residual_potential_expanded(z, params, spec=None, node_tol=1e-6):
    """Same residual written out through the oscillating factor alpha.

    With P = z alpha, alpha = c1 cos(theta) + c2 sin(theta):

        Q_res = (hbar^2/2m) [ (6 - 4 z0/z + 4 s alpha'/alpha) / zeta
                              - 4 s^2 / zeta^2 ],     zeta = 4 sigma^2.

    Algebraically identical to residual_potential; kept as an independent
    route for cross-checking.
    """
    if spec is None:
        spec = ProfileSpec()
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError("residual_potential_expanded requires z > 0")
    _node_check(z, params, spec, node_tol)
    z0 = spec.mean(params)
    sig = spec.sigma(params)
    a = params.profile_scale
    th = a / z
    alpha = spec.c1 * np.cos(th) + spec.c2 * np.sin(th)
    dalpha = (a / z**2) * (spec.c1 * np.sin(th) - spec.c2 * np.cos(th))
    s = z - z0
    zeta = 4 * sig**2
    pref = params.hbar**2 / (2 * params.mass)
    out = pref * ((6.0 - 4.0 * z0 / z + 4.0 * s * dalpha / alpha) / zeta
                  - 4.0 * s**2 / zeta**2)
    return out if out.ndim else float(out)


def _node_check(z, params, spec, node_tol):
    amp = np.hypot(spec.c1, spec.c2)
    th = np.where(z > 0, params.profile_scale / z, 0.0)
    alpha = spec.c1 * np.cos(th) + spec.c2 * np.sin(th)
    near = np.abs(alpha) < node_tol * amp
    if np.any(near):
        zbad = np.asarray(z)[near]
        raise NodeSingularity(float(np.atleast_1d(zbad)[0]))


def profile_node_mask(grid, params, spec=None, rel_tol=1e-6, guard=GUARD_BAND):
    """Boolean mask, True away from profile nodes.

    A grid point is inside the node zone when |P| < rel_tol * max |P| over
    the grid; the zone is widened by `guard` points on each side.
    """
    if spec is None:
        spec = ProfileSpec()
    z = grid.z
    p = np.zeros_like(z)
    pos = z > 0
    p[pos] = engineered_profile(z[pos], params, spec)
    ok = np.abs(p) >= rel_tol * np.abs(p).max()
    ok[~pos] = False
    bad = ~ok
    for _ in range(guard):
        bad = bad | np.roll(bad, 1) | np.roll(bad, -1)
    return ~bad


def weighted_fields(grid, params, spec=None, support_cut=1e-6):
    """Density-weighted fields of the truncated engineered packet.

    Returns (rho * Q, rho * (Q + V_surface), rho) as RealFields. The
    product rho * Q is evaluated in closed form, which is polynomial in P
    and P' and therefore finite through the profile nodes:

        rho Q     = rho c4/z^4 + rho Q_res
        rho Q_res = N e^2 pref (P^2 + 2 s P P' - s^2 P^2 / 2 sigma^2)

    The validity mask marks the packet support, rho >= support_cut * max rho;
    the z = 0 endpoint is always masked (rho vanishes there exactly while Q
    grows without bound, so the product has no limit on the grid).
    """
    if spec is None:
        spec = ProfileSpec()
    z = grid.z
    z0 = spec.mean(params)
    sig = spec.sigma(params)
    pos = z > 0

    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    p[pos] = engineered_profile(z[pos], params, spec)
    dp[pos] = profile_derivative(z[pos], params, spec)
    env2 = np.exp(-((z - z0) ** 2) / (2 * sig**2))
    rho = env2 * p**2
    norm = np.trapezoid(rho, z)
    if norm <= 0:
        raise EmptyFieldError("engineered density vanished on this grid")
    rho /= norm

    s = z - z0
    pref = params.hbar**2 / (4 * params.mass * sig**2)
    w_res = (env2 / norm) * pref * (p**2 + 2 * s * p * dp - s**2 * p**2 / (2 * sig**2))
    w_cp = np.zeros_like(z)
    w_cp[pos] = rho[pos] * params.c4 / z[pos] ** 4
    w_q = w_cp + w_res

    support = rho >= support_cut * rho.max()
    support[~pos] = False
    return (
        RealField(grid, w_q, support),
        RealField(grid, w_res, support),
        RealField(grid, rho, support),
    )


@dataclass(frozen=True)
class VelocityFieldSeries:
    """Velocity snapshots u(z, t_k) with per-snapshot validity masks."""

    grid: object
    times: np.ndarray
    velocities: np.ndarray  # shape (n_times, n_points)
    valid: np.ndarray  # same shape, boolean

    def __post_init__(self):
        if self.velocities.shape != (len(self.times), self.grid.n_points):
            raise GridError("velocity array shape mismatch")

    @classmethod
    def from_wavefunctions(cls, psis, times, mass):
        fields = [madelung_decompose(p, mass) for p in psis]
        grid = psis[0].grid
        u = np.array([f.velocity for f in fields])
        v = np.array([f.valid for f in fields])
        return cls(grid, np.asarray(times, dtype=float), u, v)

    def sample(self, z, t):
        """Bilinear interpolation of u, raising TrajectoryLost outside the
        valid region of the bracketing snapshots."""
        times = self.times
        if t <= times[0]:
            i0 = i1 = 0
            w = 0.0
        elif t >= times[-1]:
            i0 = i1 = len(times) - 1
            w = 0.0
        else:
            i1 = int(np.searchsorted(times, t))
            i0 = i1 - 1
            w = (t - times[i0]) / (times[i1] - times[i0])
        zg = self.grid.z
        for i in (i0, i1):
            lo, hi = _valid_bounds(self.valid[i], zg)
            if not (lo <= z <= hi):
                raise TrajectoryLost(t, z)
        u0 = np.interp(z, zg, self.velocities[i0])
        u1 = np.interp(z, zg, self.velocities[i1])
        return (1 - w) * u0 + w * u1


def _valid_bounds(mask, z):
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return np.inf, -np.inf
    return z[idx[0]], z[idx[-1]]


def trajectory_integrate(series, z_start, t_span=None, substeps=1):
    """Integrate dz/dt = u(z, t) with classical 4th-order steps.

    The velocity field is interpolated linearly in z and t between stored
    snapshots. Returns (times, positions). Raises TrajectoryLost when the
    path leaves the valid region.
    """
    times = series.times
    if t_span is not None:
        t0, t1 = t_span
        sel = (times >= t0 - 1e-30) & (times <= t1 + 1e-30)
        times = times[sel]
    if len(times) < 2:
        raise GridError("need at least two snapshots to integrate")
    path = [float(z_start)]
    zc = float(z_start)
    for k in range(len(times) - 1):
        ta, tb = times[k], times[k + 1]
        h = (tb - ta) / substeps
        for j in range(substeps):
            t = ta + j * h
            k1 = series.sample(zc, t)
            k2 = series.sample(zc + 0.5 * h * k1, t + 0.5 * h)
            k3 = series.sample(zc + 0.5 * h * k2, t + 0.5 * h)
            k4 = series.sample(zc + h * k3, t + h)
            zc = zc + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        path.append(zc)
    return times, np.array(path)


def continuity_residual(fields_a, fields_b, dt, z_exclude_below=0.0):
    """Check d(rho)/dt + d(rho u)/dz = 0 between two stored snapshots.

    Both derivatives are formed at the midpoint in time (centered in t,
    central differences in z). Returns the max residual over the commonly
    valid points with z >= z_exclude_below, normalized by max |d rho/dt|.
    The identity only holds where the evolution is unitary, so the absorber
    region must be excluded by the caller.
    """
    grid = fields_a.grid
    z = grid.z
    drho_dt = (fields_b.density - fields_a.density) / dt
    flux = 0.5 * (
        fields_a.density * fields_a.velocity + fields_b.density * fields_b.velocity
    )
    dflux_dz = np.gradient(flux, z)
    ok = fields_a.valid & fields_b.valid & (z >= z_exclude_below)
    ok[:1] = ok[-1:] = False
    if not np.any(ok):
        raise EmptyFieldError("no commonly valid points for the continuity check")
    scale = np.abs(drho_dt[ok]).max()
    if scale == 0:
        return 0.0
    return float(np.abs(drho_dt[ok] + dflux_dz[ok]).max() / scale)
