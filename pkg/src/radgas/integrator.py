"""Time integration of the coupled system by symmetric operator splitting.

One composed step applies, in palindromic order,

    species(dt/2) -> heat(dt/2) -> hydro(dt) -> heat(dt/2) -> species(dt/2).

The hydro substep is a position-Verlet update of (v, u) with the viscous
force treated by a trapezoidal (Crank-Nicolson) tridiagonal solve; pressure
is explicit under an acoustic CFL condition.  The heat substep solves the
temperature equation with trapezoidal time weighting and Picard-frozen
coefficients, one tridiagonal solve per sweep.  The species substep is a
trapezoidal solve subcycled just enough that the update matrix keeps the
discrete maximum principle, so 0 <= z <= max(z) holds for arbitrary data.

Positivity failures and non-convergence reject the step and retry at dt/2;
repeated rejection raises BlowUpError.
"""

import math
from dataclasses import dataclass

import numpy as np

from .constitutive import (
    GasParameters,
    conductivity,
    constitutive_partials,
    energy_theta_chord,
    pressure,
    reaction_rate,
)
from .domain import Grid, ScenarioSpec, State, build_grid, make_initial_data, validate_initial_data
from .errors import (
    BlowUpError,
    ConfigError,
    ConvergenceError,
    PositivityError,
    SingularMatrixError,
)

__all__ = [
    "StepControls",
    "StepOutcome",
    "RunResult",
    "tridiagonal_solve",
    "select_timestep",
    "hydro_step",
    "heat_step",
    "species_step",
    "strang_step",
    "run_simulation",
    "controls_for",
]

Z_BOUND_TOL = 1e-12
_PIVOT_FLOOR = 1e-300


@dataclass(frozen=True)
class StepControls:
    """Timestep selection, iteration, and positivity-floor settings."""

    cfl: float = 0.5
    dt_min: float = 1e-12
    dt_max: float = math.inf
    picard_tol: float = 1e-10
    picard_max_iters: int = 50
    floor_v: float = 1e-6
    floor_theta: float = 1e-6
    max_step_rejections: int = 30

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise ConfigError("cfl must lie in (0, 1]")
        if self.dt_min <= 0 or self.dt_max < self.dt_min:
            raise ConfigError("need 0 < dt_min <= dt_max")
        if self.floor_v <= 0 or self.floor_theta <= 0:
            raise ConfigError("positivity floors must be > 0")
        if self.picard_tol <= 0 or self.picard_max_iters < 1:
            raise ConfigError("Picard tolerance must be > 0 and iteration cap >= 1")


def controls_for(spec: ScenarioSpec, dt_max: float = math.inf) -> StepControls:
    """Build step controls from a scenario, optionally capping the timestep."""
    return StepControls(
        cfl=spec.cfl,
        dt_max=dt_max,
        picard_tol=spec.picard_tol,
        picard_max_iters=spec.picard_max_iters,
        floor_v=spec.floor_v,
        floor_theta=spec.floor_theta,
    )


@dataclass
class StepOutcome:
    """Result of one accepted composed step."""

    new_state: State
    dt_used: float
    picard_iters: int
    rejected_count: int
    species_consumed: float = 0.0


def tridiagonal_solve(lower, diag, upper, rhs):
    """Solve a tridiagonal system by forward elimination and back substitution.

    ``lower`` and ``upper`` hold the n-1 off-diagonal entries, ``diag`` and
    ``rhs`` the n diagonal/right-hand-side entries.  Raises
    SingularMatrixError when a pivot magnitude falls below 1e-300; callers
    normally guarantee strict diagonal dominance, so this only fires on
    degenerate input.
    """
    d = np.asarray(diag, dtype=float).tolist()
    r = np.asarray(rhs, dtype=float).tolist()
    lo = np.asarray(lower, dtype=float).tolist()
    up = np.asarray(upper, dtype=float).tolist()
    n = len(d)
    if len(r) != n or len(lo) != n - 1 or len(up) != n - 1:
        raise ConfigError("tridiagonal arrays have inconsistent lengths")

    cp = [0.0] * n
    rp = [0.0] * n
    piv = d[0]
    if abs(piv) < _PIVOT_FLOOR:
        raise SingularMatrixError("zero pivot at row 0")
    if n > 1:
        cp[0] = up[0] / piv
    rp[0] = r[0] / piv
    for i in range(1, n):
        piv = d[i] - lo[i - 1] * cp[i - 1]
        if abs(piv) < _PIVOT_FLOOR:
            raise SingularMatrixError(f"zero pivot at row {i}")
        if i < n - 1:
            cp[i] = up[i] / piv
        rp[i] = (r[i] - lo[i - 1] * rp[i - 1]) / piv
    x = [0.0] * n
    x[n - 1] = rp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = rp[i] - cp[i] * x[i + 1]
    return np.array(x)


def select_timestep(state: State, grid: Grid, params: GasParameters, controls: StepControls) -> float:
    """Acoustic CFL timestep, clamped to [dt_min, dt_max].

    The per-cell signal speed is v*sqrt(max(-p_v + p_theta^2*theta/e_theta, 0)/v)
    evaluated from the constitutive partials; the cell velocity scale is the
    larger of the two adjacent node speeds.  Diffusive terms place no
    restriction because they are integrated implicitly.
    """
    p_v, p_theta, _, e_theta = constitutive_partials(params, state.v, state.theta)
    gamma2 = np.maximum(-p_v + p_theta**2 * state.theta / e_theta, 0.0)
    c = state.v * np.sqrt(gamma2 / state.v)
    u_cell = np.maximum(np.abs(state.u[:-1]), np.abs(state.u[1:]))
    speed = float(np.max(u_cell + c))
    if speed <= 0.0:
        return controls.dt_max if math.isfinite(controls.dt_max) else 1.0
    raw = controls.cfl * grid.dx / speed
    return min(max(raw, controls.dt_min), controls.dt_max)


def _source_eval(fn, t, x):
    if fn is None:
        return 0.0
    return fn(t, x)


def hydro_step(state, grid, params, dt, controls=None, sources=None, t_start=None):
    """Advance (v, u) by dt with theta frozen.

    Position-Verlet: half volume update, trapezoidal implicit solve for the
    new velocity (explicit pressure gradient, implicit viscous stress), half
    volume update with the new velocity.  Mass telescopes exactly because
    boundary nodes never move.
    """
    controls = controls or StepControls()
    t0 = state.t if t_start is None else t_start
    dx = grid.dx
    h = dt
    u = state.u
    th = state.theta

    sv1 = _source_eval(getattr(sources, "Sv", None), t0 + 0.25 * h, grid.cell_centers)
    v_half = state.v + 0.5 * h * (np.diff(u) / dx + sv1)
    if np.min(v_half) <= controls.floor_v:
        raise PositivityError("specific volume fell below floor in half update")

    p = pressure(params, v_half, th)
    w = params.mu / (dx * dx * v_half)
    grad_p = (p[1:] - p[:-1]) / dx
    su = _source_eval(getattr(sources, "Su", None), t0 + 0.5 * h, grid.node_positions[1:-1])

    # trapezoidal viscous solve on interior nodes; u = 0 pinned at both ends
    visc_old = w[1:] * (u[2:] - u[1:-1]) - w[:-1] * (u[1:-1] - u[:-2])
    rhs = u[1:-1] + 0.5 * h * visc_old + h * (-grad_p + su)
    diag = 1.0 + 0.5 * h * (w[:-1] + w[1:])
    off_lower = -0.5 * h * w[1:-1]
    off_upper = -0.5 * h * w[1:-1]
    u_new = np.zeros_like(u)
    u_new[1:-1] = tridiagonal_solve(off_lower, diag, off_upper, rhs)

    sv2 = _source_eval(getattr(sources, "Sv", None), t0 + 0.75 * h, grid.cell_centers)
    v_new = v_half + 0.5 * h * (np.diff(u_new) / dx + sv2)
    if np.min(v_new) <= controls.floor_v:
        raise PositivityError("specific volume fell below floor")

    return State(state.t, v_new, th.copy(), state.z.copy(), u_new)


def _face_coefficients(cell_values, dx):
    """Arithmetic face averages of a per-cell diffusivity, divided by dx^2.

    The two domain-end faces carry zero flux: perturbations are compactly
    supported away from the walls, so the far-field gradient vanishes and a
    closed end keeps every discrete balance (species mass, conducted energy)
    an exact telescoping identity.
    """
    n = cell_values.shape[0]
    a = np.zeros(n + 1)
    a[1:-1] = 0.5 * (cell_values[:-1] + cell_values[1:]) / (dx * dx)
    return a


def _flux_divergence(values, a):
    """a_{i+1}(f_{i+1}-f_i) - a_i(f_i-f_{i-1}) with zero-flux end faces."""
    jumps = a[1:-1] * np.diff(values)
    out = np.zeros_like(values)
    out[:-1] += jumps
    out[1:] -= jumps
    return out


def heat_step(state, grid, params, dt, controls=None, sources=None, t_start=None):
    """Advance theta by dt with v, u, z frozen; returns (state, picard_iters).

    Trapezoidal in time: the implicit half uses conduction coefficients and
    sources frozen at the latest Picard iterate, so each sweep is one
    tridiagonal solve and the converged update is a genuine Crank-Nicolson
    step of the nonlinear equation.  The time derivative is weighted by the
    exact secant of internal energy in theta, which makes the per-step energy
    balance an identity rather than an approximation.
    """
    controls = controls or StepControls()
    t0 = state.t if t_start is None else t_start
    dx = grid.dx
    h = dt
    v = state.v
    th_old = state.theta
    z = state.z
    u_x = np.diff(state.u) / dx
    viscous_heating = params.mu * u_x**2 / v

    def volumetric_sources(th):
        _, p_theta, _, _ = constitutive_partials(params, v, th)
        return -th * p_theta * u_x + viscous_heating + params.lam * reaction_rate(params, th) * z

    a_old = _face_coefficients(conductivity(params, v, th_old) / v, dx)
    flux_old = _flux_divergence(th_old, a_old)
    src_old = volumetric_sources(th_old) + _source_eval(
        getattr(sources, "Stheta", None), t0, grid.cell_centers
    )

    th_star = th_old
    iters = 0
    for iters in range(1, controls.picard_max_iters + 1):
        a_new = _face_coefficients(conductivity(params, v, th_star) / v, dx)
        src_new = volumetric_sources(th_star) + _source_eval(
            getattr(sources, "Stheta", None), t0 + h, grid.cell_centers
        )
        e_chord = energy_theta_chord(params, v, th_old, th_star)

        diag = e_chord / h + 0.5 * (a_new[:-1] + a_new[1:])
        lower = -0.5 * a_new[1:-1]
        upper = -0.5 * a_new[1:-1]
        rhs = e_chord * th_old / h + 0.5 * flux_old + 0.5 * (src_old + src_new)

        th_next = tridiagonal_solve(lower, diag, upper, rhs)
        if np.min(th_next) <= 0.0:
            raise ConvergenceError("temperature iterate left the positive cone")
        change = float(np.max(np.abs(th_next - th_star)))
        th_star = th_next
        if change < controls.picard_tol:
            break
    else:
        raise ConvergenceError(
            f"heat solve did not reach {controls.picard_tol:g} in {controls.picard_max_iters} sweeps"
        )

    if np.min(th_star) <= controls.floor_theta:
        raise PositivityError("temperature fell below floor")
    return State(state.t, v.copy(), th_star, z.copy(), state.u.copy()), iters


def _species_update(state, grid, params, dt, sources=None, t_start=None):
    """Trapezoidal reactant update subcycled to keep the maximum principle.

    The subcycle length is chosen so the explicit half of each trapezoidal
    solve has nonnegative coefficients; combined with the M-matrix implicit
    half this guarantees 0 <= z' <= max(z) for arbitrary admissible data.
    Returns (z_new, consumed) where consumed integrates the reaction sink
    with the exact quadrature the scheme uses, making

        sum(z_new)*dx + consumed = sum(z_old)*dx + injected sources

    an identity up to solver round-off (end faces carry no flux).
    """
    t0 = state.t if t_start is None else t_start
    dx = grid.dx
    phi = reaction_rate(params, state.theta)
    a = _face_coefficients(params.d / state.v**2, dx)
    rate_scale = a[:-1] + a[1:] + phi
    lam_max = float(np.max(rate_scale))
    n_sub = max(1, math.ceil(0.5 * dt * lam_max))
    delta = dt / n_sub

    z = state.z
    consumed = 0.0
    src_fn = getattr(sources, "Sz", None)
    for k in range(n_sub):
        tau = t0 + k * delta
        src = 0.5 * (_source_eval(src_fn, tau, grid.cell_centers)
                     + _source_eval(src_fn, tau + delta, grid.cell_centers))
        flux_z = _flux_divergence(z, a)
        diag = 1.0 / delta + 0.5 * rate_scale
        lower = -0.5 * a[1:-1]
        upper = -0.5 * a[1:-1]
        rhs = z / delta + 0.5 * flux_z - 0.5 * phi * z + src
        z_new = tridiagonal_solve(lower, diag, upper, rhs)
        consumed += delta * float(np.sum(phi * 0.5 * (z + z_new))) * dx
        z = z_new
    return z, consumed


def species_step(state, grid, params, dt, sources=None, t_start=None):
    """Advance z by dt with v, theta frozen; preserves 0 <= z <= max(z)."""
    z_new, _ = _species_update(state, grid, params, dt, sources=sources, t_start=t_start)
    return State(state.t, state.v.copy(), state.theta.copy(), z_new, state.u.copy())


def _check_state_bounds(state, controls, forced):
    if np.min(state.v) <= controls.floor_v:
        raise PositivityError("specific volume fell below floor")
    if np.min(state.theta) <= controls.floor_theta:
        raise PositivityError("temperature fell below floor")
    if state.u[0] != 0.0 or state.u[-1] != 0.0:
        raise PositivityError("boundary nodes moved")
    if not forced:
        if np.min(state.z) < -Z_BOUND_TOL or np.max(state.z) > 1.0 + Z_BOUND_TOL:
            raise PositivityError("reactant fraction left [0, 1]")


def strang_step(state, grid, params, dt, controls=None, sources=None, heat_first=False):
    """One composed step with rejection control; returns a StepOutcome.

    On PositivityError or ConvergenceError the attempt is discarded and
    retried from the original state at half the timestep, up to
    max_step_rejections times, after which BlowUpError reports the suspected
    loss of the a priori bounds.
    """
    controls = controls or StepControls()
    dt_try = dt
    rejected = 0
    while True:
        try:
            t0 = state.t
            half = 0.5 * dt_try
            windows = ((t0, half), (t0 + half, half))
            consumed = 0.0

            def species_sub(s, widx):
                nonlocal consumed
                z_new, c = _species_update(
                    s, grid, params, windows[widx][1], sources=sources, t_start=windows[widx][0]
                )
                consumed += c
                return State(s.t, s.v.copy(), s.theta.copy(), z_new, s.u.copy())

            def heat_sub(s, widx):
                return heat_step(
                    s, grid, params, windows[widx][1], controls,
                    sources=sources, t_start=windows[widx][0],
                )

            iters = 0
            if heat_first:
                s1, it1 = heat_sub(state, 0)
                s2 = species_sub(s1, 0)
                s3 = hydro_step(s2, grid, params, dt_try, controls, sources=sources, t_start=t0)
                s4 = species_sub(s3, 1)
                s5, it2 = heat_sub(s4, 1)
            else:
                s1 = species_sub(state, 0)
                s2, it1 = heat_sub(s1, 0)
                s3 = hydro_step(s2, grid, params, dt_try, controls, sources=sources, t_start=t0)
                s4, it2 = heat_sub(s3, 1)
                s5 = species_sub(s4, 1)
            iters = max(it1, it2)

            _check_state_bounds(s5, controls, forced=sources is not None)
            s5.t = t0 + dt_try
            return StepOutcome(
                new_state=s5,
                dt_used=dt_try,
                picard_iters=iters,
                rejected_count=rejected,
                species_consumed=consumed,
            )
        except (PositivityError, ConvergenceError) as exc:
            rejected += 1
            dt_try *= 0.5
            if rejected > controls.max_step_rejections or dt_try < controls.dt_min:
                raise BlowUpError(
                    f"step at t = {state.t:.6g} failed after {rejected} rejections "
                    f"(last dt = {2 * dt_try:.3e}): {exc}"
                ) from exc


@dataclass
class RunResult:
    """Full output of a simulation: diagnostics history plus optional states."""

    spec: ScenarioSpec
    grid: Grid
    params: GasParameters
    final_state: State
    records: list
    states: list | None
    sample_times: np.ndarray
    species_consumed: float

    def column(self, name: str) -> np.ndarray:
        """Time series of one DiagnosticsRecord field (norm labels allowed)."""
        first = self.records[0]
        if hasattr(first, name):
            return np.array([getattr(r, name) for r in self.records])
        return np.array([r.norms[name] for r in self.records])

    def __iter__(self):
        """Unpack as (final_state, diagnostics history)."""
        return iter((self.final_state, self.records))


def run_simulation(
    spec: ScenarioSpec,
    sample_cadence: float = 0.1,
    keep_states: bool = False,
    controls: StepControls | None = None,
    sources=None,
) -> RunResult:
    """Integrate the scenario from t = 0 to T_end, sampling diagnostics.

    Every accepted state satisfies the positivity floors and (for unforced
    runs) reactant confinement, otherwise BlowUpError propagates.  Sampling
    lands exactly on multiples of the cadence because the timestep is capped
    by the distance to the next sample time.
    """
    from .functionals import accumulate_XY_increment, make_record

    if sample_cadence <= 0:
        raise ConfigError("sample_cadence must be > 0")
    grid = build_grid(spec.L, spec.N)
    params = spec.params
    state = make_initial_data(spec, grid)
    report = validate_initial_data(state, grid)
    if not report.passed:
        raise ConfigError("initial data rejected: " + "; ".join(report.failures))
    controls = controls or controls_for(spec)

    records = []
    states = [] if keep_states else None
    X_acc = 0.0
    Y_run = 0.0
    rec, Y_run = make_record(state, grid, params, X_acc, Y_run)
    records.append(rec)
    if keep_states:
        states.append(state.copy())
    sample_times = [0.0]
    prev_sample = state.copy()
    consumed_total = 0.0

    k_sample = 1
    t_eps = 1e-12 * max(1.0, spec.T_end)
    while state.t < spec.T_end - t_eps:
        t_next = min(k_sample * sample_cadence, spec.T_end)
        dt = select_timestep(state, grid, params, controls)
        dt = min(dt, t_next - state.t)
        try:
            outcome = strang_step(state, grid, params, dt, controls, sources=sources)
        except BlowUpError as exc:
            raise BlowUpError(f"run aborted at t = {state.t:.6g}: {exc}") from exc
        state = outcome.new_state
        consumed_total += outcome.species_consumed

        if state.t >= t_next - t_eps:
            dX = accumulate_XY_increment(prev_sample, state, params, grid)
            X_acc += dX
            rec, Y_run = make_record(state, grid, params, X_acc, Y_run)
            records.append(rec)
            sample_times.append(state.t)
            if keep_states:
                states.append(state.copy())
            prev_sample = state.copy()
            k_sample += 1

    return RunResult(
        spec=spec,
        grid=grid,
        params=params,
        final_state=state,
        records=records,
        states=states,
        sample_times=np.array(sample_times),
        species_consumed=consumed_total,
    )
