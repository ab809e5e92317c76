"""Physical constants, unit scaling, grids, wavefunctions and elementary functionals.

Everything downstream computes in SI units. The numbers involved stay well
inside double range (the Crank-Nicolson coefficients are dimensionless
ratios), so internal scaling is only needed at the I/O boundary, where
lengths are reported in micrometers and times in milliseconds.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GridError, NormalizationError

HBAR = 1.054571817e-34  # J s

# Rubidium-87 defaults
DEFAULT_MASS = 1.44e-25  # kg
DEFAULT_C4 = 9.1e-56  # J m^4
DEFAULT_DELTA = 0.15e-6  # m


@dataclass(frozen=True)
class PhysicalParams:
    """Atom, surface and trap parameters, all SI.

    absorber_strength defaults to the magnitude of the surface potential at
    the absorber edge delta, which makes the absorption time below delta much
    shorter than the millisecond packet dynamics. trap_omega defaults to
    hbar/(2 m sigma^2) so that a Gaussian of width sigma is the trap ground
    state.
    """

    mass: float = DEFAULT_MASS
    c4: float = DEFAULT_C4
    z0: float = 2.3e-6
    sigma: float = 1.0e-6
    c1: float = 1.0
    c2: float = 0.0
    delta: float = DEFAULT_DELTA
    absorber_strength: float | None = None
    trap_omega: float | None = None
    hbar: float = HBAR

    def __post_init__(self):
        if self.mass <= 0:
            raise ConfigError(f"mass must be positive, got {self.mass}")
        if self.c4 < 0:
            raise ConfigError(f"c4 must be non-negative, got {self.c4}")
        if self.sigma <= 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.z0 <= 0:
            raise ConfigError(f"z0 must be positive, got {self.z0}")
        if self.delta <= 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if self.z0 <= self.delta:
            raise ConfigError(
                f"z0 = {self.z0} must exceed the absorber edge delta = {self.delta}"
            )
        if self.c1 == 0 and self.c2 == 0:
            raise ConfigError("profile coefficients (c1, c2) must not both vanish")
        if self.hbar <= 0:
            raise ConfigError("hbar must be positive")
        if self.absorber_strength is None:
            object.__setattr__(self, "absorber_strength", self.c4 / self.delta**4)
        elif self.absorber_strength < 0:
            raise ConfigError(
                f"absorber_strength must be non-negative, got {self.absorber_strength}"
            )
        if self.trap_omega is None:
            object.__setattr__(
                self, "trap_omega", self.hbar / (2 * self.mass * self.sigma**2)
            )
        elif self.trap_omega <= 0:
            raise ConfigError(f"trap_omega must be positive, got {self.trap_omega}")

    @property
    def profile_scale(self):
        """Characteristic length sqrt(2 m c4)/hbar of the profile oscillation."""
        return np.sqrt(2 * self.mass * self.c4) / self.hbar

    def replace(self, **kwargs):
        """Copy with some fields replaced; derived defaults are recomputed
        when their inputs change unless explicitly pinned."""
        current = {
            "mass": self.mass,
            "c4": self.c4,
            "z0": self.z0,
            "sigma": self.sigma,
            "c1": self.c1,
            "c2": self.c2,
            "delta": self.delta,
            "absorber_strength": self.absorber_strength,
            "trap_omega": self.trap_omega,
            "hbar": self.hbar,
        }
        # recompute derived quantities if their inputs moved
        if ("sigma" in kwargs or "mass" in kwargs) and "trap_omega" not in kwargs:
            current["trap_omega"] = None
        if ("c4" in kwargs or "delta" in kwargs) and "absorber_strength" not in kwargs:
            current["absorber_strength"] = None
        current.update(kwargs)
        return PhysicalParams(**current)


class UnitScale:
    """Conversion between SI and the internal reporting units.

    Lengths are scaled to length_unit (default micrometer) and times to
    time_unit (default millisecond). The mass unit is chosen so that the
    scaled Planck constant equals one, which keeps every derived quantity
    within a few orders of magnitude of unity.
    """

    _dims = {
        "length": (1, 0, 0),
        "time": (0, 1, 0),
        "mass": (0, 0, 1),
        "velocity": (1, -1, 0),
        "energy": (2, -2, 1),
        "action": (2, -1, 1),
        "frequency": (0, -1, 0),
        "inverse_length": (-1, 0, 0),
    }

    def __init__(self, length_unit=1e-6, time_unit=1e-3, hbar=HBAR):
        if length_unit <= 0 or time_unit <= 0:
            raise ConfigError("unit scales must be positive")
        self.length_unit = length_unit
        self.time_unit = time_unit
        self.mass_unit = hbar * time_unit / length_unit**2
        self.energy_unit = self.mass_unit * length_unit**2 / time_unit**2

    def factor(self, dimension):
        try:
            lp, tp, mp = self._dims[dimension]
        except KeyError:
            raise ConfigError(f"unknown dimension {dimension!r}") from None
        return self.length_unit**lp * self.time_unit**tp * self.mass_unit**mp

    def to_internal(self, value, dimension):
        return value / self.factor(dimension)

    def to_si(self, value, dimension):
        return value * self.factor(dimension)


@dataclass(frozen=True)
class Grid1D:
    """Uniform spatial grid on [z_min, z_max], z_min fixed at the surface."""

    z_max: float
    n_points: int
    z_min: float = 0.0
    z: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_points < 2:
            raise GridError(f"need at least 2 grid points, got {self.n_points}")
        if self.z_max <= self.z_min:
            raise GridError(f"z_max = {self.z_max} must exceed z_min = {self.z_min}")
        pts = np.linspace(self.z_min, self.z_max, self.n_points)
        pts.flags.writeable = False
        object.__setattr__(self, "z", pts)

    @property
    def dz(self):
        return (self.z_max - self.z_min) / (self.n_points - 1)

    def resolves_profile(self, params, points_per_cycle=10):
        """True when dz resolves the local profile wavelength at the
        absorber edge: lambda(delta) = 2 pi delta^2 / (sqrt(2 m c4)/hbar)."""
        scale = params.profile_scale
        if scale == 0:
            return True
        return self.dz <= 2 * np.pi * params.delta**2 / scale / points_per_cycle

    def index_of(self, z):
        """Nearest grid index for a coordinate inside the grid."""
        if not (self.z_min <= z <= self.z_max):
            raise GridError(f"coordinate {z} outside grid [{self.z_min}, {self.z_max}]")
        return int(round((z - self.z_min) / self.dz))


def default_grid(params=None, z_max=10e-6, n_points=4096):
    """Default box: [0, 10 um] with 4096 points (dz about 2.4 nm), enough for
    ten points per profile cycle at the absorber edge. For packets sitting
    far out the box is widened to keep z0 + 6 sigma inside."""
    if params is not None:
        z_max = max(z_max, params.z0 + 6 * params.sigma)
        base_dz = 10e-6 / (4096 - 1)
        n_points = max(n_points, int(np.ceil(z_max / base_dz)) + 1)
    return Grid1D(z_max=z_max, n_points=n_points)


@dataclass(frozen=True)
class Wavefunction:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.z.shape:
            raise GridError(
                f"values shape {vals.shape} does not match grid ({self.grid.n_points},)"
            )
        object.__setattr__(self, "values", vals)

    def norm(self):
        return float(np.sqrt(np.trapezoid(np.abs(self.values) ** 2, self.grid.z)))

    def density(self):
        return np.abs(self.values) ** 2

    def with_values(self, values):
        return Wavefunction(self.grid, values)


@dataclass(frozen=True)
class RealField:
    """Real scalar field on a grid with an optional validity mask."""

    grid: Grid1D
    values: np.ndarray
    valid: np.ndarray | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.z.shape:
            raise GridError(
                f"values shape {vals.shape} does not match grid ({self.grid.n_points},)"
            )
        object.__setattr__(self, "values", vals)
        if self.valid is not None:
            mask = np.asarray(self.valid, dtype=bool)
            if mask.shape != vals.shape:
                raise GridError("validity mask shape does not match values")
            object.__setattr__(self, "valid", mask)
            if not np.all(np.isfinite(vals[mask])):
                raise ValueError("non-finite value at a valid grid point")
        else:
            if not np.all(np.isfinite(vals)):
                raise ValueError("non-finite value in unmasked field")

    def valid_mask(self):
        if self.valid is None:
            return np.ones_like(self.values, dtype=bool)
        return self.valid


def normalize(psi):
    """Rescale to unit norm under the trapezoid rule."""
    n = psi.norm()
    if n == 0 or not np.isfinite(n):
        raise NormalizationError(f"cannot normalize wavefunction with norm {n}")
    return psi.with_values(psi.values / n)


def moments(psi):
    """Mean position, standard deviation and norm of |psi|^2.

    Moments are computed on the density normalized by the current norm, so
    they are invariant under rescaling.
    """
    z = psi.grid.z
    rho = psi.density()
    n2 = np.trapezoid(rho, z)
    if n2 <= 0 or not np.isfinite(n2):
        raise NormalizationError(f"zero or invalid norm {n2}")
    mean = np.trapezoid(z * rho, z) / n2
    second = np.trapezoid(z**2 * rho, z) / n2
    std = float(np.sqrt(max(second - mean**2, 0.0)))
    return float(mean), std, float(np.sqrt(n2))
