"""Truncated Lagrangian domain, staggered mesh, discrete state, initial data.

The infinite line is truncated to [-L, L] with the far-field rest state
(v, u, theta, z) = (1, 0, 1, 0) imposed through fixed boundary nodes
(u = 0) and ghost cells (v = 1, theta = 1, z = 0).  Velocity lives on the
N+1 mesh nodes; volume, temperature, and reactant fraction live on the N
cell centers.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .constitutive import GasParameters
from .errors import ConfigError

__all__ = [
    "Grid",
    "State",
    "ScenarioSpec",
    "ParameterReport",
    "InitialDataReport",
    "build_grid",
    "make_initial_data",
    "validate_parameters",
    "validate_initial_data",
    "scenario_catalog",
    "boundary_band_cells",
]

FAR_FIELD = (1.0, 0.0, 1.0, 0.0)
INITIAL_FAR_FIELD_TOL = 1e-8


@dataclass(frozen=True)
class Grid:
    """Uniform staggered mesh on [-L, L]: N cells, N+1 nodes."""

    L: float
    N: int
    dx: float
    cell_centers: np.ndarray
    node_positions: np.ndarray


@dataclass
class State:
    """Discrete fields at one instant: v, theta, z on cells, u on nodes."""

    t: float
    v: np.ndarray
    theta: np.ndarray
    z: np.ndarray
    u: np.ndarray

    def copy(self) -> "State":
        return State(self.t, self.v.copy(), self.theta.copy(), self.z.copy(), self.u.copy())


@dataclass(frozen=True)
class ScenarioSpec:
    """Initial-data family plus domain, mesh, and solver configuration."""

    family: str = "gaussian"
    amplitude_v: float = 0.0
    amplitude_u: float = 0.0
    amplitude_theta: float = 0.0
    amplitude_z: float = 0.0
    width: float = 1.0
    params: GasParameters = field(default_factory=GasParameters)
    L: float = 20.0
    N: int = 512
    T_end: float = 20.0
    cfl: float = 0.5
    picard_tol: float = 1e-10
    picard_max_iters: int = 50
    floor_v: float = 1e-6
    floor_theta: float = 1e-6

    def __post_init__(self):
        if self.family not in ("equilibrium", "gaussian", "compact_bump"):
            raise ConfigError(f"unknown initial-data family {self.family!r}")
        if self.width <= 0:
            raise ConfigError("width must be > 0")
        if not (0.0 < self.cfl <= 1.0):
            raise ConfigError("cfl must lie in (0, 1]")
        if self.T_end <= 0:
            raise ConfigError("T_end must be > 0")
        if self.picard_tol <= 0 or self.picard_max_iters < 1:
            raise ConfigError("Picard tolerance must be > 0 and iteration cap >= 1")
        if self.floor_v <= 0 or self.floor_theta <= 0:
            raise ConfigError("positivity floors must be > 0")


def build_grid(L: float, N: int) -> Grid:
    """Build the uniform staggered grid; N must be even and at least 8."""
    if L <= 0:
        raise ConfigError(f"domain half-width must be > 0, got {L}")
    if N < 8 or N % 2 != 0:
        raise ConfigError(f"cell count must be even and >= 8, got {N}")
    dx = 2.0 * L / N
    nodes = -L + dx * np.arange(N + 1)
    cells = 0.5 * (nodes[:-1] + nodes[1:])
    return Grid(L=float(L), N=int(N), dx=dx, cell_centers=cells, node_positions=nodes)


def _gaussian_profile(x, width):
    return np.exp(-(x**2) / width**2)


def _compact_bump_profile(x, width, L):
    # Support capped at |x| <= L/2 so the outer half of the domain is exactly
    # at the far-field state regardless of the width parameter.
    half = min(0.5 * L, 4.0 * width)
    s2 = (x / half) ** 2
    out = np.zeros_like(x)
    inside = s2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
    return out


def make_initial_data(spec: ScenarioSpec, grid: Grid) -> State:
    """Sample the configured initial-data family onto the grid.

    The perturbation profile multiplies each amplitude; the equilibrium
    family returns the exact rest state.  Raises ConfigError when an
    amplitude would violate positivity of v or theta or push z out of [0, 1].
    """
    if spec.family == "equilibrium":
        profile_c = np.zeros(grid.N)
        profile_n = np.zeros(grid.N + 1)
    elif spec.family == "gaussian":
        profile_c = _gaussian_profile(grid.cell_centers, spec.width)
        profile_n = _gaussian_profile(grid.node_positions, spec.width)
    else:
        profile_c = _compact_bump_profile(grid.cell_centers, spec.width, grid.L)
        profile_n = _compact_bump_profile(grid.node_positions, spec.width, grid.L)

    if spec.family != "equilibrium":
        # profiles peak at 1, so the amplitude alone decides positivity
        if spec.amplitude_v <= -1.0:
            raise ConfigError("amplitude_v would make the initial volume nonpositive")
        if spec.amplitude_theta <= -1.0:
            raise ConfigError("amplitude_theta would make the initial temperature nonpositive")
        if not (0.0 <= spec.amplitude_z <= 1.0):
            raise ConfigError("amplitude_z must lie in [0, 1] to keep z within bounds")

    v = 1.0 + spec.amplitude_v * profile_c
    theta = 1.0 + spec.amplitude_theta * profile_c
    z = spec.amplitude_z * profile_c
    u = spec.amplitude_u * profile_n
    u[0] = 0.0
    u[-1] = 0.0
    return State(t=0.0, v=v, theta=theta, z=z, u=u)


@dataclass(frozen=True)
class ParameterReport:
    """Admissibility report for the conductivity/rate exponents (b, beta)."""

    b: float
    beta: float
    admissible: bool
    conditions: dict
    regions: dict

    def summary(self) -> str:
        verdict = "admissible" if self.admissible else "inadmissible"
        lines = [f"(b, beta) = ({self.b}, {self.beta}): {verdict}"]
        for name, ok in self.conditions.items():
            lines.append(f"  condition {name}: {'pass' if ok else 'fail'}")
        for name, ok in self.regions.items():
            lines.append(f"  region {name}: {'inside' if ok else 'outside'}")
        return "\n".join(lines)


def validate_parameters(params: GasParameters) -> ParameterReport:
    """Check (b, beta) admissibility; also classify against older, narrower ranges."""
    b, beta = params.b, params.beta
    conditions = {
        "b > 12/7": b > 12.0 / 7.0,
        "0 <= beta < b + 9": 0.0 <= beta < b + 9.0,
    }
    regions = {
        "b >= 11/3, beta <= b + 9": b >= 11.0 / 3.0 and 0.0 <= beta <= b + 9.0,
        "9/4 < b < 3, beta < 2b + 6": 9.0 / 4.0 < b < 3.0 and 0.0 <= beta < 2.0 * b + 6.0,
        "b >= 3, beta < b + 9": b >= 3.0 and 0.0 <= beta < b + 9.0,
    }
    return ParameterReport(
        b=b,
        beta=beta,
        admissible=all(conditions.values()),
        conditions=conditions,
        regions=regions,
    )


def boundary_band_cells(N: int) -> int:
    """Number of cells per side making up the outermost 5% band."""
    return max(1, int(round(0.05 * N)))


@dataclass(frozen=True)
class InitialDataReport:
    """Positivity, confinement, far-field, and norm checks on initial data."""

    min_v: float
    min_theta: float
    z_min: float
    z_max: float
    far_field_deviation: float
    norms: dict
    passed: bool
    failures: tuple

    def summary(self) -> str:
        head = "initial data OK" if self.passed else "initial data INVALID: " + "; ".join(self.failures)
        return (
            f"{head}\n"
            f"  min v0 = {self.min_v:.6g}, min theta0 = {self.min_theta:.6g}, "
            f"z0 range = [{self.z_min:.3g}, {self.z_max:.3g}]\n"
            f"  far-field deviation (outer 5% cells) = {self.far_field_deviation:.3e}\n"
            f"  perturbation norms: "
            + ", ".join(f"{k} = {val:.6g}" for k, val in self.norms.items())
        )


def validate_initial_data(state: State, grid: Grid) -> InitialDataReport:
    """Report-only validation; callers treat a failed report as fatal."""
    if state.v.shape != (grid.N,) or state.u.shape != (grid.N + 1,):
        raise ConfigError("state shape does not match grid")
    failures = []
    min_v = float(np.min(state.v))
    min_theta = float(np.min(state.theta))
    z_min = float(np.min(state.z))
    z_max = float(np.max(state.z))
    if min_v <= 0:
        failures.append("v0 not strictly positive")
    if min_theta <= 0:
        failures.append("theta0 not strictly positive")
    if z_min < 0 or z_max > 1:
        failures.append("z0 leaves [0, 1]")

    band = boundary_band_cells(grid.N)
    dev_fields = [state.v - 1.0, state.theta - 1.0, state.z]
    far = 0.0
    for f in dev_fields:
        far = max(far, float(np.max(np.abs(f[:band]))), float(np.max(np.abs(f[-band:]))))
    far = max(far, float(np.max(np.abs(state.u[: band + 1]))), float(np.max(np.abs(state.u[-band - 1:]))))
    if far >= INITIAL_FAR_FIELD_TOL:
        failures.append(f"far-field deviation {far:.3e} exceeds {INITIAL_FAR_FIELD_TOL:.0e}")

    dx = grid.dx
    u_c = 0.5 * (state.u[:-1] + state.u[1:])
    dev2 = (state.v - 1.0) ** 2 + u_c**2 + (state.theta - 1.0) ** 2 + state.z**2
    grads = [np.diff(f) / dx for f in (state.v, state.theta, state.z)]
    grad2 = sum(np.sum(g**2) for g in grads) * dx + np.sum((np.diff(state.u) / dx) ** 2) * dx
    norms = {
        "z_L1": float(np.sum(np.abs(state.z)) * dx),
        "dev_L2": float(np.sqrt(np.sum(dev2) * dx)),
        "dev_H1": float(np.sqrt(np.sum(dev2) * dx + grad2)),
    }
    for key, val in norms.items():
        if not np.isfinite(val):
            failures.append(f"norm {key} not finite")

    return InitialDataReport(
        min_v=min_v,
        min_theta=min_theta,
        z_min=z_min,
        z_max=z_max,
        far_field_deviation=far,
        norms=norms,
        passed=not failures,
        failures=tuple(failures),
    )


def scenario_catalog() -> dict:
    """Named scenarios used by the command line and the test suite."""
    params = GasParameters()
    canonical = ScenarioSpec(
        family="gaussian",
        amplitude_v=0.1,
        amplitude_u=0.1,
        amplitude_theta=0.2,
        amplitude_z=0.5,
        width=1.0,
        params=params,
        L=20.0,
        N=512,
        T_end=20.0,
        cfl=0.5,
    )
    return {
        "canonical": canonical,
        "equilibrium": replace(canonical, family="equilibrium", amplitude_v=0.0,
                               amplitude_u=0.0, amplitude_theta=0.0, amplitude_z=0.0, T_end=1.0),
        "species_pulse": replace(canonical, amplitude_v=0.0, amplitude_u=0.0,
                                 amplitude_theta=0.0, amplitude_z=0.5, T_end=5.0),
        "compact": replace(canonical, family="compact_bump", T_end=10.0),
        "sweep_base": replace(canonical, N=256, T_end=10.0),
    }
