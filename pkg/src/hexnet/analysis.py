"""Verification that the synthesized system realizes its hierarchy.

Covers equilibrium residuals, the eigenvalue/edge correspondence at every
designed equilibrium, symbolic itineraries extracted from trajectories,
and the constructive witnesses for the excitable top-level connections
(forward convergence plus backward-divergence evidence).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NotAnEdgeError, NumericalFailureError
from .hierarchy import Digraph, out_neighbors
from .integrator import (
    IntegratorConfig,
    TERMINATION_COMPLETED,
    TERMINATION_DIVERGED,
    Trajectory,
    integrate,
)
from .vectorfield import (
    VARIANT_BOUNDED,
    Equilibrium,
    FieldParams,
    bump,
    designed_equilibria,
    eval_field,
    jacobian,
)

__all__ = [
    "ResidualReport",
    "AttributedEigenvalue",
    "EquilibriumEigenCheck",
    "CorrespondenceReport",
    "Visit",
    "ItineraryReport",
    "ItineraryCheck",
    "WitnessSpec",
    "WitnessResult",
    "RealizationReport",
    "verify_equilibria",
    "eigen_at",
    "check_edge_eigen_correspondence",
    "extract_itinerary",
    "check_itinerary_against",
    "witness_initial_condition",
    "run_witness",
    "verify_realization",
]

LEVEL_SUPER = "super"
LEVEL_SUB = "sub"

DEFAULT_NEAR_TOL = 0.1
DEFAULT_MIN_DWELL = 1.0
DEFAULT_WITNESS_DELTAS = (1e-1, 1e-2, 1e-3)
WITNESS_CONVERGENCE_TOL = 1e-6


# ---------------------------------------------------------------------------
# equilibrium residuals
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ResidualReport:
    residuals: list[tuple[str, float]]
    max_residual: float
    tol: float
    passed: bool


def verify_equilibria(p: FieldParams, tol: float = 1e-12) -> ResidualReport:
    """Sup-norm field residual at every designed equilibrium."""
    rows = []
    worst = 0.0
    for eq in designed_equilibria(p):
        r = float(np.abs(eval_field(eq.state, p)).max())
        rows.append((eq.name, r))
        worst = max(worst, r)
    return ResidualReport(rows, worst, tol, worst <= tol)


# ---------------------------------------------------------------------------
# eigenvalues with coordinate attribution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttributedEigenvalue:
    coord: int  # flat coordinate index the eigenvalue is attributed to
    real: float
    imag: float = 0.0


def _block_eigs(block: np.ndarray, offset: int) -> list[AttributedEigenvalue]:
    n = block.shape[0]
    diag = np.diagonal(block)
    off = block - np.diag(diag)
    if np.abs(off).max(initial=0.0) <= 1e-12 * (1.0 + np.abs(diag).max(initial=0.0)):
        return [AttributedEigenvalue(offset + i, float(diag[i])) for i in range(n)]
    try:
        vals, vecs = np.linalg.eig(block)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigenvalue solve failed: {exc}") from exc
    out = []
    for m in range(n):
        c = int(np.argmax(np.abs(vecs[:, m])))
        out.append(AttributedEigenvalue(offset + c, float(vals[m].real), float(vals[m].imag)))
    return out


def eigen_at(eq: Equilibrium, p: FieldParams) -> list[AttributedEigenvalue]:
    """Eigenvalues of the Jacobian at a designed equilibrium.

    The Jacobian is block lower-triangular (X drives, never listens), so the
    spectrum is the union over the diagonal blocks; at designed equilibria the
    blocks are diagonal and each eigenvalue belongs to one coordinate axis.
    """
    J = jacobian(eq.state, p)
    layout = p.layout
    out = _block_eigs(J[layout.super_slice, layout.super_slice], 0)
    for j in range(layout.n_super):
        sl = layout.sub_slice(j)
        out.extend(_block_eigs(J[sl, sl], sl.start))
    return out


@dataclass(eq=False)
class EquilibriumEigenCheck:
    name: str
    expected: frozenset[int]  # 0-based out-neighbor directions
    observed: frozenset[int]
    passed: bool


@dataclass(eq=False)
class CorrespondenceReport:
    checks: list[EquilibriumEigenCheck]
    passed: bool


def check_edge_eigen_correspondence(p: FieldParams) -> CorrespondenceReport:
    """At every Super(j) and Sub(j, i): the directions with positive transverse
    eigenvalue must be exactly the prescribed out-neighbors."""
    layout = p.layout
    gamma = p.hierarchy.superstructure
    checks = []
    for eq in designed_equilibria(p):
        if eq.kind == "origin":
            continue
        eigs = eigen_at(eq, p)
        by_coord = {e.coord: e.real for e in eigs}
        if eq.kind == "super":
            expected = frozenset(out_neighbors(gamma, eq.j))
            observed = frozenset(
                m for m in range(layout.n_super) if m != eq.j and by_coord[m] > 0.0
            )
        else:
            g = p.hierarchy.substructures[eq.j]
            expected = frozenset(out_neighbors(g, eq.i))
            off = layout.sub_offset(eq.j)
            observed = frozenset(
                m
                for m in range(layout.block_sizes[eq.j])
                if m != eq.i and by_coord[off + m] > 0.0
            )
        checks.append(EquilibriumEigenCheck(eq.name, expected, observed, expected == observed))
    return CorrespondenceReport(checks, all(c.passed for c in checks))


# ---------------------------------------------------------------------------
# itineraries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Visit:
    vertex: int  # 0-based
    t_enter: float
    t_exit: float
    window: int | None = None

    @property
    def dwell(self) -> float:
        return self.t_exit - self.t_enter


@dataclass(eq=False)
class ItineraryReport:
    level: str  # "super" | "sub"
    j: int | None
    visits: list[Visit]
    active_windows: list[tuple[float, float]] | None
    near_tol: float
    min_dwell: float

    def labels(self) -> list[int]:
        """Visit sequence with 1-based vertex labels."""
        return [v.vertex + 1 for v in self.visits]


def _vertex_stream(block: np.ndarray, near_tol: float) -> np.ndarray:
    """Per-sample visited vertex (or -1): the dominant coordinate, provided it
    exceeds 1 - near_tol.

    Deliberately weaker than a sup-norm ball test: trajectories enter the
    saturation phase of a vertex while the previously dominant coordinate is
    still of order near_tol, and the figures' shading reads exactly this way.
    """
    am = block.argmax(axis=1)
    top = block[np.arange(block.shape[0]), am]
    return np.where(top > 1.0 - near_tol, am, -1)


def _runs_to_visits(
    vert: np.ndarray,
    times: np.ndarray,
    min_dwell: float,
    window_of: np.ndarray | None,
) -> list[Visit]:
    visits = []
    cur = -1
    start = 0
    n = vert.shape[0]
    for idx in range(n + 1):
        v = vert[idx] if idx < n else -1
        if idx < n and v == cur:
            continue
        if cur >= 0:
            t0, t1 = float(times[start]), float(times[idx - 1])
            if t1 - t0 >= min_dwell:
                win = int(window_of[start]) if window_of is not None else None
                visits.append(Visit(int(cur), t0, t1, win))
        cur, start = v, idx
    return visits


def extract_itinerary(
    traj: Trajectory,
    p: FieldParams,
    level: str,
    j: int | None = None,
    near_tol: float = DEFAULT_NEAR_TOL,
    min_dwell: float = DEFAULT_MIN_DWELL,
) -> ItineraryReport:
    """Symbolic visit sequence of the superstructure or of substructure j.

    For a substructure, only samples inside its active windows (gate value
    positive) are considered, so a visit never spans a window boundary.
    """
    if not 0.0 < near_tol < 0.5:
        raise ValueError("near_tol must lie in (0, 0.5) for visit uniqueness")
    layout = p.layout
    X = traj.states[:, layout.super_slice]
    if level == LEVEL_SUPER:
        vert = _vertex_stream(X, near_tol)
        visits = _runs_to_visits(vert, traj.times, min_dwell, None)
        return ItineraryReport(LEVEL_SUPER, None, visits, None, near_tol, min_dwell)

    if level != LEVEL_SUB or j is None:
        raise ValueError("level must be 'super' or 'sub' (with block index j)")
    z = (X * X).sum(axis=1) - 2.0 * X[:, j] + 1.0
    active = z < p.epsilon  # bump_j(X) > 0
    windows: list[tuple[float, float]] = []
    window_of = np.full(traj.times.shape[0], -1, dtype=int)
    in_win = False
    for idx, flag in enumerate(active):
        if flag:
            if not in_win:
                windows.append((float(traj.times[idx]), float(traj.times[idx])))
                in_win = True
            windows[-1] = (windows[-1][0], float(traj.times[idx]))
            window_of[idx] = len(windows) - 1
        else:
            in_win = False
    block = traj.states[:, layout.sub_slice(j)]
    vert = _vertex_stream(block, near_tol)
    vert = np.where(active, vert, -1)
    visits = _runs_to_visits(vert, traj.times, min_dwell, window_of)
    return ItineraryReport(LEVEL_SUB, j, visits, windows, near_tol, min_dwell)


@dataclass(eq=False)
class ItineraryCheck:
    passed: bool
    violations: list[tuple[int, int, float]]  # (from, to, transition time), 0-based
    n_pairs: int


def check_itinerary_against(report: ItineraryReport, d: Digraph) -> ItineraryCheck:
    """Every consecutive visit pair must be an edge of d.

    For substructure reports, pairs are only formed inside one active window;
    across a window boundary the block resumes the vertex it was paused at,
    which is a continuation rather than a transition.
    """
    violations = []
    n_pairs = 0
    for prev, nxt in zip(report.visits, report.visits[1:]):
        if prev.window is not None and prev.window != nxt.window:
            continue
        n_pairs += 1
        if (prev.vertex, nxt.vertex) not in d.edges:
            violations.append((prev.vertex, nxt.vertex, nxt.t_enter))
    return ItineraryCheck(not violations, violations, n_pairs)


# ---------------------------------------------------------------------------
# witnesses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WitnessSpec:
    """An excitable-connection witness for superstructure edge (j, k)."""

    j: int
    k: int
    delta: float

    @property
    def eta(self) -> float:
        """Offset placed on the X_j deficit, on X_k and on x^k_1."""
        return self.delta / 2.0


def witness_initial_condition(w: WitnessSpec, p: FieldParams) -> np.ndarray:
    """The constructive initial condition within delta of Sub(j, 1).

    Lives in the invariant subspace where only blocks j and k are populated:
    X_j = 1 - eta, X_k = eta, x^j = e_1, x^k_1 = eta, everything else exactly
    zero, with eta = delta / 2.
    """
    if not w.delta > 0.0:
        raise ValueError("delta must be positive")
    if w.delta >= 1.0:
        raise ValueError("delta must be below 1 for a meaningful witness")
    if (w.j, w.k) not in p.hierarchy.superstructure.edges:
        raise NotAnEdgeError(
            f"({w.j + 1},{w.k + 1}) is not an edge of the superstructure"
        )
    layout = p.layout
    state = np.zeros(layout.dimension)
    eta = w.eta
    state[w.j] = 1.0 - eta
    state[w.k] = eta
    state[layout.sub_offset(w.j)] = 1.0
    state[layout.sub_offset(w.k)] = eta
    return state


@dataclass(eq=False)
class WitnessResult:
    spec: WitnessSpec
    variant: str
    forward_converged: bool
    forward_distance: float
    forward_time: float
    backward_diverged: bool
    backward_time: float
    backward_coordinate: int | None = None
    backward_coordinate_name: str | None = None
    backward_coordinate_gate: float | None = None  # bump of its block at the end
    backward_inactive_gap: float | None = None  # bounded: max |x - 1| over live sub coords

    @property
    def passed(self) -> bool:
        if not self.forward_converged:
            return False
        if self.variant == VARIANT_BOUNDED:
            return not self.backward_diverged and (
                self.backward_inactive_gap is not None
                and self.backward_inactive_gap <= 1e-3
            )
        return self.backward_diverged


def _chunked_until(s0, p, direction, chunk, max_time, rtol, atol, done):
    """Integrate in chunks until done(last_state) or the budget runs out."""
    state = s0
    total = 0.0
    traj = None
    while total < max_time:
        cfg = IntegratorConfig(
            t_end=chunk, rtol=rtol, atol=atol, sample_dt=chunk / 8.0, direction=direction
        )
        traj = integrate(state, p, cfg)
        total += traj.last_time
        state = traj.last_state
        if traj.termination != TERMINATION_COMPLETED or done(state):
            break
    return traj, state, total


def run_witness(
    w: WitnessSpec,
    p: FieldParams,
    unit_timescales: bool = True,
    rtol: float = 1e-10,
    atol: float = 1e-10,
    max_time: float = 400.0,
) -> WitnessResult:
    """Forward run to the target equilibrium plus a backward run.

    Witness dynamics uses unit timescales by default; convergence needs no
    timescale separation and the realization statement is scale-neutral.
    Forward: integrate until the sup-distance to Sub(k, 1) falls below 1e-7
    (reported against the 1e-6 criterion). Backward: the standard variant
    must reach the divergence bound in a gated-off substructure coordinate;
    the bounded variant stays in [0, 1] and its live substructure coordinates
    approach 1.
    """
    p_run = replace(p, phi=1.0, psi=1.0, omega=1.0) if unit_timescales else p
    s0 = witness_initial_condition(w, p_run)
    layout = p_run.layout

    target = np.zeros(layout.dimension)
    target[w.k] = 1.0
    target[layout.sub_offset(w.k)] = 1.0
    if p_run.variant == VARIANT_BOUNDED:
        # substructure coordinates at exactly 1 are invariant under the
        # bounded decay, so the connection targets the {0,1} copy of the
        # destination network with those coordinates still at 1
        pinned = (s0 == 1.0).copy()
        pinned[: layout.n_super] = False
        target[pinned] = 1.0

    def near_target(state):
        return float(np.abs(state - target).max()) <= 0.1 * WITNESS_CONVERGENCE_TOL

    _, fstate, ftime = _chunked_until(
        s0, p_run, "forward", 40.0, max_time, rtol, atol, near_target
    )
    fdist = float(np.abs(fstate - target).max())

    sub_live = np.zeros(layout.dimension, dtype=bool)
    sub_live[layout.n_super:] = True
    sub_live &= s0 > 0.0

    if p_run.variant == VARIANT_BOUNDED:
        def back_done(state):
            return float(np.abs(state[sub_live] - 1.0).max()) <= 1e-4
    else:
        def back_done(state):
            return False  # runs until divergence or budget

    btraj, bstate, btime = _chunked_until(
        s0, p_run, "backward", 30.0, max_time, rtol, atol, back_done
    )
    diverged = btraj.termination == TERMINATION_DIVERGED
    coord = btraj.diverged_coordinate
    name = gate = None
    if coord is not None:
        name = layout.coord_names()[coord]
        level, j, _ = layout.coord_level(coord)
        if level == LEVEL_SUB:
            gate = float(bump(
                float(bstate[layout.super_slice] @ bstate[layout.super_slice])
                - 2.0 * float(bstate[j]) + 1.0,
                p_run.epsilon,
            ))
    gap = float(np.abs(bstate[sub_live] - 1.0).max()) if sub_live.any() else None

    return WitnessResult(
        spec=w,
        variant=p_run.variant,
        forward_converged=fdist <= WITNESS_CONVERGENCE_TOL,
        forward_distance=fdist,
        forward_time=ftime,
        backward_diverged=diverged,
        backward_time=btime,
        backward_coordinate=coord,
        backward_coordinate_name=name,
        backward_coordinate_gate=gate,
        backward_inactive_gap=gap,
    )


# ---------------------------------------------------------------------------
# full realization check
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ItineraryOutcome:
    scenario_index: int
    level: str
    j: int | None
    report: ItineraryReport
    check: ItineraryCheck


@dataclass(eq=False)
class RealizationReport:
    residuals: ResidualReport
    eigen: CorrespondenceReport
    itineraries: list[ItineraryOutcome]
    witnesses: list[WitnessResult]

    @property
    def passed(self) -> bool:
        return (
            self.residuals.passed
            and self.eigen.passed
            and all(o.check.passed for o in self.itineraries)
            and all(w.passed for w in self.witnesses)
        )


def verify_realization(
    p: FieldParams,
    scenarios: list[tuple[np.ndarray, IntegratorConfig]],
    near_tol: float = DEFAULT_NEAR_TOL,
    min_dwell: float = DEFAULT_MIN_DWELL,
    deltas: tuple[float, ...] = DEFAULT_WITNESS_DELTAS,
    residual_tol: float = 1e-12,
) -> RealizationReport:
    """Aggregate residual, eigenvalue, itinerary and witness verification."""
    residuals = verify_equilibria(p, residual_tol)
    eigen = check_edge_eigen_correspondence(p)

    itineraries = []
    gamma = p.hierarchy.superstructure
    for idx, (s0, cfg) in enumerate(scenarios):
        traj = integrate(s0, p, cfg)
        rep = extract_itinerary(traj, p, LEVEL_SUPER, near_tol=near_tol, min_dwell=min_dwell)
        itineraries.append(
            ItineraryOutcome(idx, LEVEL_SUPER, None, rep, check_itinerary_against(rep, gamma))
        )
        for j, g in enumerate(p.hierarchy.substructures):
            rep = extract_itinerary(
                traj, p, LEVEL_SUB, j=j, near_tol=near_tol, min_dwell=min_dwell
            )
            itineraries.append(
                ItineraryOutcome(idx, LEVEL_SUB, j, rep, check_itinerary_against(rep, g))
            )

    witnesses = []
    for (j, k) in sorted(gamma.edges):
        for delta in deltas:
            witnesses.append(run_witness(WitnessSpec(j, k, delta), p))

    return RealizationReport(residuals, eigen, itineraries, witnesses)
