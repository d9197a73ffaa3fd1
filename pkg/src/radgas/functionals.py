"""Analytic functionals and probes evaluated on discrete states and histories.

Spatial integrals use the midpoint rule on cells; gradient quantities live
on interior faces; time integrals over sampled histories use the trapezoid
rule.  All functions here are read-only.
"""

import math
from dataclasses import dataclass

import numpy as np

from .constitutive import (
    GasParameters,
    conductivity,
    entropy_eta,
    internal_energy,
    pressure,
)
from .domain import Grid, State, boundary_band_cells
from .errors import ConfigError, InsufficientHistory, WindowOutOfDomain

__all__ = [
    "DiagnosticsRecord",
    "ProbeWindow",
    "RepresentationProbe",
    "conserved_quantities",
    "dissipation_rate",
    "entropy_energy",
    "accumulate_XY",
    "accumulate_XY_increment",
    "norms",
    "interval_probe",
    "oscillation_ratio",
    "representation_check",
    "temperature_envelope_check",
    "theta_bound_from_Y",
    "make_record",
    "CSV_COLUMNS",
]

CSV_COLUMNS = (
    "t", "mass_dev", "momentum", "total_energy", "G", "V", "X", "Y",
    "min_v", "max_v", "min_theta", "max_theta", "max_z", "z_L1",
    "dev_L2", "dev_L4", "dev_Linf", "grad_L2", "boundary_dev",
)


@dataclass
class DiagnosticsRecord:
    """One sampled row of run diagnostics."""

    t: float
    mass_dev: float
    momentum: float
    total_energy: float
    G: float
    V: float
    X_acc: float
    Y_run: float
    min_v: float
    max_v: float
    min_theta: float
    max_theta: float
    max_z: float
    z_L1: float
    norms: dict
    boundary_deviation: float

    @staticmethod
    def csv_header() -> str:
        return ",".join(CSV_COLUMNS)

    def csv_row(self) -> str:
        values = (
            self.t, self.mass_dev, self.momentum, self.total_energy, self.G,
            self.V, self.X_acc, self.Y_run, self.min_v, self.max_v,
            self.min_theta, self.max_theta, self.max_z, self.z_L1,
            self.norms["L2"], self.norms["L4"], self.norms["Linf"],
            self.norms["grad_L2"], self.boundary_deviation,
        )
        return ",".join(f"{x:.17g}" for x in values)


@dataclass(frozen=True)
class ProbeWindow:
    """Interval averages over the window [-k-1, k+1] and where they are attained."""

    k: int
    a_k: float
    b_k: float
    avg_v: float
    avg_theta: float

    def block(self) -> str:
        return (
            f"interval probe k = {self.k} (window [-{self.k + 1}, {self.k + 1}])\n"
            f"  avg v = {self.avg_v:.10g} attained nearest x = {self.a_k:.6g}\n"
            f"  avg theta = {self.avg_theta:.10g} attained nearest x = {self.b_k:.6g}"
        )


@dataclass
class RepresentationProbe:
    """Reconstruction of v on a probe window from velocity and stress history."""

    k: int
    B: np.ndarray
    Q: float
    v_reconstructed: np.ndarray
    max_rel_error: float

    def block(self) -> str:
        return (
            f"volume representation k = {self.k}\n"
            f"  Q = {self.Q:.10g}, B range = [{np.min(self.B):.10g}, {np.max(self.B):.10g}]\n"
            f"  max relative reconstruction error = {self.max_rel_error:.3e}"
        )


def _node_masses(grid: Grid) -> np.ndarray:
    m = np.full(grid.N + 1, grid.dx)
    m[0] = 0.5 * grid.dx
    m[-1] = 0.5 * grid.dx
    return m


def _u_on_cells(u: np.ndarray) -> np.ndarray:
    return 0.5 * (u[:-1] + u[1:])


def conserved_quantities(state: State, grid: Grid, params: GasParameters):
    """(mass deviation, momentum, total relative energy) of a state.

    Momentum and kinetic energy weight nodes with half-cell lumped masses;
    the energy is measured relative to the rest state and includes the
    chemical reservoir lam*z.
    """
    dx = grid.dx
    mass_dev = float(np.sum(state.v - 1.0) * dx)
    masses = _node_masses(grid)
    momentum = float(np.sum(masses * state.u))
    e_rest = internal_energy(params, 1.0, 1.0)
    internal = np.sum(internal_energy(params, state.v, state.theta) - e_rest) * dx
    kinetic = 0.5 * np.sum(masses * state.u**2)
    chemical = params.lam * np.sum(state.z) * dx
    return mass_dev, momentum, float(internal + kinetic + chemical)


def dissipation_rate(state: State, grid: Grid, params: GasParameters) -> float:
    """Viscous plus conductive entropy production; zero only for flat states."""
    dx = grid.dx
    u_x = np.diff(state.u) / dx
    viscous = params.mu * u_x**2 / (state.v * state.theta)
    th_f = 0.5 * (state.theta[:-1] + state.theta[1:])
    v_f = 0.5 * (state.v[:-1] + state.v[1:])
    th_x = np.diff(state.theta) / dx
    conductive = conductivity(params, v_f, th_f) * th_x**2 / (v_f * th_f**2)
    return float((np.sum(viscous) + np.sum(conductive)) * dx)


def entropy_energy(state: State, grid: Grid, params: GasParameters) -> float:
    """Entropy functional plus kinetic energy; zero only at equilibrium."""
    eta = entropy_eta(params, state.v, state.theta)
    kinetic = 0.5 * np.sum(_node_masses(grid) * state.u**2)
    return float(np.sum(eta) * grid.dx + kinetic)


def _Y_now(state: State, grid: Grid, params: GasParameters) -> float:
    th_f = 0.5 * (state.theta[:-1] + state.theta[1:])
    th_x = np.diff(state.theta) / grid.dx
    return float(np.sum((1.0 + th_f ** (2.0 * params.b)) * th_x**2) * grid.dx)


def accumulate_XY_increment(prev: State, cur: State, params: GasParameters, grid: Grid) -> float:
    """Contribution to the time-integrated temperature-rate functional between two samples."""
    dt = cur.t - prev.t
    if dt <= 0:
        return 0.0
    th_t = (cur.theta - prev.theta) / dt
    weight = 1.0 + cur.theta ** (params.b + 3.0)
    return float(dt * np.sum(weight * th_t**2) * grid.dx)


def accumulate_XY(states, params: GasParameters, grid: Grid):
    """(X, Y) over a sampled history.

    X integrates (1 + theta^(b+3)) * theta_t^2 with backward differences
    between consecutive samples; Y is the running supremum of the weighted
    squared temperature gradient, including the initial sample.  Both are
    nondecreasing in the history length by construction.
    """
    if len(states) < 2:
        raise InsufficientHistory("need at least 2 sampled states")
    X = 0.0
    Y = _Y_now(states[0], grid, params)
    for prev, cur in zip(states[:-1], states[1:]):
        X += accumulate_XY_increment(prev, cur, params, grid)
        Y = max(Y, _Y_now(cur, grid, params))
    return X, Y


def norms(state: State, grid: Grid) -> dict:
    """Deviation norms of (v-1, u, theta-1, z) and their discrete gradients."""
    dx = grid.dx
    devs = (state.v - 1.0, _u_on_cells(state.u), state.theta - 1.0, state.z)
    p2 = sum(np.sum(f**2) for f in devs) * dx
    p4 = sum(np.sum(f**4) for f in devs) * dx
    linf = max(float(np.max(np.abs(f))) for f in devs)
    grads2 = sum(np.sum((np.diff(f) / dx) ** 2) for f in (state.v, state.theta, state.z)) * dx
    grads2 += np.sum((np.diff(state.u) / dx) ** 2) * dx
    return {
        "L2": float(np.sqrt(p2)),
        "L4": float(p4**0.25),
        "Linf": linf,
        "grad_L2": float(np.sqrt(grads2)),
    }


def _boundary_deviation(state: State, grid: Grid) -> float:
    band = boundary_band_cells(grid.N)
    worst = 0.0
    for f in (state.v - 1.0, state.theta - 1.0, state.z):
        worst = max(worst, float(np.max(np.abs(f[:band]))), float(np.max(np.abs(f[-band:]))))
    worst = max(
        worst,
        float(np.max(np.abs(state.u[: band + 1]))),
        float(np.max(np.abs(state.u[-band - 1:]))),
    )
    return worst


def make_record(state: State, grid: Grid, params: GasParameters, X_acc: float, Y_run: float):
    """Assemble a DiagnosticsRecord; returns (record, updated running Y)."""
    mass_dev, momentum, total_energy = conserved_quantities(state, grid, params)
    Y_run = max(Y_run, _Y_now(state, grid, params))
    rec = DiagnosticsRecord(
        t=state.t,
        mass_dev=mass_dev,
        momentum=momentum,
        total_energy=total_energy,
        G=entropy_energy(state, grid, params),
        V=dissipation_rate(state, grid, params),
        X_acc=X_acc,
        Y_run=Y_run,
        min_v=float(np.min(state.v)),
        max_v=float(np.max(state.v)),
        min_theta=float(np.min(state.theta)),
        max_theta=float(np.max(state.theta)),
        max_z=float(np.max(state.z)),
        z_L1=float(np.sum(np.abs(state.z)) * grid.dx),
        norms=norms(state, grid),
        boundary_deviation=_boundary_deviation(state, grid),
    )
    return rec, Y_run


def _window_cells(grid: Grid, k: int):
    if k < 0:
        raise WindowOutOfDomain(f"window index must be >= 0, got {k}")
    lo, hi = -(k + 1.0), k + 1.0
    mask = (grid.cell_centers >= lo) & (grid.cell_centers <= hi)
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        raise WindowOutOfDomain(f"window [{lo}, {hi}] contains no cells")
    return idx


def interval_probe(state: State, grid: Grid, k: int) -> ProbeWindow:
    """Window averages of v and theta and the cells attaining them.

    Ties in the distance to the average break toward the smallest cell index.
    """
    idx = _window_cells(grid, k)
    avg_v = float(np.mean(state.v[idx]))
    avg_th = float(np.mean(state.theta[idx]))
    ia = idx[int(np.argmin(np.abs(state.v[idx] - avg_v)))]
    ib = idx[int(np.argmin(np.abs(state.theta[idx] - avg_th)))]
    return ProbeWindow(
        k=k,
        a_k=float(grid.cell_centers[ia]),
        b_k=float(grid.cell_centers[ib]),
        avg_v=avg_v,
        avg_theta=avg_th,
    )


def oscillation_ratio(state: State, grid: Grid, params: GasParameters, m: float, k: int) -> float:
    """Sup over the window of |theta^m - theta^m(b_k)| divided by sqrt(V).

    The exponent must satisfy 0 <= m <= (b+4)/2.  Returns 0 when both the
    oscillation and the dissipation vanish.
    """
    if not (0.0 <= m <= 0.5 * (params.b + 4.0)):
        raise ConfigError(f"oscillation exponent m = {m} outside [0, (b+4)/2]")
    idx = _window_cells(grid, k)
    probe = interval_probe(state, grid, k)
    ib = int(np.argmin(np.abs(grid.cell_centers - probe.b_k)))
    th_m = state.theta[idx] ** m
    osc = float(np.max(np.abs(th_m - state.theta[ib] ** m)))
    V = dissipation_rate(state, grid, params)
    return osc / max(math.sqrt(V), 1e-30)


def _cutoff(y: np.ndarray, k: int) -> np.ndarray:
    """1 left of k+1, linear ramp down to 0 on [k+1, k+2], 0 beyond."""
    return np.clip(k + 2.0 - y, 0.0, 1.0)


def _suffix_trapezoid(w: np.ndarray, dx: float) -> np.ndarray:
    """T[i] = trapezoidal integral of w from point i to the last point."""
    seg = 0.5 * (w[:-1] + w[1:]) * dx
    out = np.zeros_like(w)
    out[:-1] = np.cumsum(seg[::-1])[::-1]
    return out


def _strip_weights(grid: Grid, lo: float, hi: float) -> np.ndarray:
    """Exact overlap of each cell with [lo, hi]; the interval edges rarely
    align with cell faces, so midpoint summation over selected cells would
    misstate the measure."""
    left = grid.cell_centers - 0.5 * grid.dx
    right = grid.cell_centers + 0.5 * grid.dx
    return np.clip(np.minimum(right, hi) - np.maximum(left, lo), 0.0, None)


def representation_check(states, grid: Grid, params: GasParameters, k: int, t: float) -> RepresentationProbe:
    """Reconstruct v on the window [-k-1, k+1] at time t from the history.

    B comes from the cut-off-weighted integral of the velocity change to the
    right of each point, Q from the time integral over the ramp strip
    [k+1, k+2] of the total stress, and the reconstruction discretizes the
    closed-form volume formula with trapezoids over the stored samples.
    """
    if k + 2.0 > grid.L:
        raise WindowOutOfDomain(f"need k + 2 <= L, got k = {k}, L = {grid.L}")
    if len(states) < 2:
        raise InsufficientHistory("need at least 2 sampled states")
    times = np.array([s.t for s in states])
    if t > times[-1] + 1e-9:
        raise InsufficientHistory(f"history ends at t = {times[-1]:.6g} before requested {t:.6g}")
    m_t = int(np.argmin(np.abs(times - t)))
    idx = _window_cells(grid, k)
    dx = grid.dx
    xc = grid.cell_centers
    cut = _cutoff(xc, k)
    strip_w = _strip_weights(grid, k + 1.0, k + 2.0)
    u0_c = _u_on_cells(states[0].u)
    v0 = states[0].v

    n_hist = m_t + 1
    B = np.empty((n_hist, idx.size))
    stress_integral = np.empty(n_hist)
    for m in range(n_hist):
        s = states[m]
        w = (u0_c - _u_on_cells(s.u)) * cut
        B[m] = v0[idx] * np.exp(_suffix_trapezoid(w, dx)[idx] / params.mu)
        u_x = np.diff(s.u) / dx
        total_stress = params.mu * u_x / s.v - pressure(params, s.v, s.theta)
        stress_integral[m] = float(np.sum(total_stress * strip_w))

    # Q(s) for every sample via a running trapezoid of the strip integral
    Q = np.empty(n_hist)
    Q[0] = 1.0
    acc = 0.0
    for m in range(1, n_hist):
        acc += 0.5 * (stress_integral[m - 1] + stress_integral[m]) * (times[m] - times[m - 1])
        Q[m] = math.exp(acc / params.mu)

    BQ_t = B[-1] * Q[-1]
    integrand = np.empty((n_hist, idx.size))
    for m in range(n_hist):
        s = states[m]
        integrand[m] = BQ_t * s.v[idx] * pressure(params, s.v[idx], s.theta[idx]) / (B[m] * Q[m])
    time_int = np.zeros(idx.size)
    for m in range(1, n_hist):
        time_int += 0.5 * (integrand[m - 1] + integrand[m]) * (times[m] - times[m - 1])

    v_rec = BQ_t + time_int / params.mu
    v_true = states[m_t].v[idx]
    max_rel = float(np.max(np.abs(v_rec - v_true) / np.abs(v_true)))
    return RepresentationProbe(
        k=k,
        B=B[-1],
        Q=float(Q[-1]),
        v_reconstructed=v_rec,
        max_rel_error=max_rel,
    )


def temperature_envelope_check(states) -> float:
    """Smallest certified constant for the temperature lower envelope.

    Scans all sampled pairs s < t of the identity
    theta_min(t) * (1 + (t - s) * theta_min(s)) / theta_min(s) using a prefix
    minimum, so the cost is linear in the history length.  A strictly
    positive return certifies the discrete lower envelope for the run.
    """
    if len(states) < 2:
        raise InsufficientHistory("need at least 2 sampled states")
    best = math.inf
    worst_ratio = math.inf
    for i, s in enumerate(states[1:], start=1):
        prev = states[i - 1]
        m_prev = float(np.min(prev.theta))
        best = min(best, 1.0 / m_prev - prev.t)
        m_t = float(np.min(s.theta))
        worst_ratio = min(worst_ratio, m_t * (s.t + best))
    return worst_ratio


def theta_bound_from_Y(params: GasParameters, Y: float) -> float:
    """Temperature ceiling scale 1 + Y^(1/(2b+6)) implied by the gradient functional."""
    if Y < 0:
        raise ConfigError("Y must be nonnegative")
    return 1.0 + Y ** (1.0 / (2.0 * params.b + 6.0))
