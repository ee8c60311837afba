"""Adaptive Dormand-Prince 5(4) integration of the field in the log chart.

Coordinates that start at exactly zero span invariant subspaces; they are
masked out of the integration entirely and stay bitwise zero in every output
sample. All positive coordinates are integrated as logarithms, which keeps
deeply decayed components representable and their growth rates finite. Dense
output on a uniform sample grid comes from the free 4th-order interpolant of
the embedded pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, NonFiniteError, TimeOutOfRangeError
from .vectorfield import FieldParams, growth_rates, _EXP_CLAMP

__all__ = [
    "IntegratorConfig",
    "StepStats",
    "Trajectory",
    "integrate",
    "sample_at",
    "DIVERGENCE_BOUND",
    "TERMINATION_COMPLETED",
    "TERMINATION_DIVERGED",
    "TERMINATION_STEP_FAILURE",
]

DIVERGENCE_BOUND = 1.0e6
_LOG_DIVERGENCE = np.log(DIVERGENCE_BOUND)

TERMINATION_COMPLETED = "completed"
TERMINATION_DIVERGED = "diverged"
TERMINATION_STEP_FAILURE = "step_failure"

_DIRECTIONS = ("forward", "backward")

# Dormand-Prince 5(4) tableau, the embedded error weights, and the free
# 4th-order interpolant (coefficients of theta..theta^4 per stage).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = (
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0
_INITIAL_STEP = 1e-4
_PI_ALPHA = 0.7 / 5.0
_PI_BETA = 0.4 / 5.0


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float
    rtol: float = 1e-12
    atol: float = 1e-12
    max_step: float | None = None
    sample_dt: float = 0.1
    direction: str = "forward"

    def __post_init__(self):
        if not self.rtol > 0.0 or not self.atol > 0.0:
            raise ValueError("rtol and atol must be positive")
        if self.t_end < 0.0:
            raise ValueError("t_end must be nonnegative")
        if not self.sample_dt > 0.0:
            raise ValueError("sample_dt must be positive")
        if self.max_step is not None and not self.max_step > 0.0:
            raise ValueError("max_step must be positive")
        if self.direction not in _DIRECTIONS:
            raise ValueError(f"direction must be one of {_DIRECTIONS}")


@dataclass(eq=False)
class StepStats:
    accepted: int = 0
    rejected: int = 0
    final_step: float = 0.0
    n_evals: int = 0


@dataclass(eq=False)
class Trajectory:
    """Uniform-grid samples in the original chart plus termination metadata."""

    times: np.ndarray
    states: np.ndarray
    stats: StepStats
    termination: str
    mask: np.ndarray
    last_time: float
    last_state: np.ndarray
    diverged_coordinate: int | None = None
    diverged_time: float | None = None

    @property
    def final_state(self) -> np.ndarray:
        return self.last_state


class _LogField:
    """Fast callable for the masked log-chart field (optionally time reversed)."""

    def __init__(self, p: FieldParams, mask: np.ndarray, sign: float):
        self._p = p
        self._mask = mask
        self._sign = sign

    def __call__(self, u: np.ndarray) -> np.ndarray:
        # caller holds the errstate; this is the per-stage hot path
        v = np.exp(np.minimum(u, _EXP_CLAMP))
        v[self._mask] = 0.0
        rates = growth_rates(v, self._p)
        rates[self._mask] = 0.0
        if self._sign < 0:
            np.negative(rates, out=rates)
        return rates


def _sample_grid(t_end: float, dt: float) -> np.ndarray:
    n_full = int(np.floor(t_end / dt + 1e-9))
    grid = np.arange(n_full + 1, dtype=float) * dt
    if grid[-1] > t_end:
        grid[-1] = t_end
    elif t_end - grid[-1] > 1e-9 * max(dt, 1.0):
        grid = np.append(grid, t_end)
    return grid


def _to_state(u: np.ndarray, unmasked: np.ndarray, d: int) -> np.ndarray:
    out = np.zeros(d)
    with np.errstate(under="ignore"):
        out[unmasked] = np.exp(u[unmasked])
    return out


def integrate(s0, p: FieldParams, cfg: IntegratorConfig) -> Trajectory:
    """Integrate from a nonnegative state; exact zeros define the mask.

    Samples are produced on the grid {0, sample_dt, 2 sample_dt, ..., t_end}
    by dense interpolation. Termination is "completed", or "diverged" when an
    unmasked log-coordinate exceeds log(1e6), or "step_failure" on step-size
    underflow. Backward direction integrates the time-reversed field.
    """
    d = p.layout.dimension
    s0 = np.asarray(s0, dtype=float)
    if s0.shape != (d,):
        raise DimensionMismatchError(f"initial state has shape {s0.shape}, expected ({d},)")
    if not np.isfinite(s0).all():
        raise NonFiniteError("initial state contains non-finite entries")
    if np.any(s0 < 0.0):
        raise ValueError("initial state must be nonnegative")

    mask = s0 == 0.0
    unmasked = ~mask
    grid = _sample_grid(cfg.t_end, cfg.sample_dt)
    n_samples = grid.shape[0]
    states = np.zeros((n_samples, d))
    states[0] = s0
    stats = StepStats()

    if cfg.t_end == 0.0 or not unmasked.any():
        # nothing to integrate: time span empty or every coordinate pinned at 0
        return Trajectory(
            times=grid,
            states=states[: 1] if cfg.t_end == 0.0 else states,
            termination=TERMINATION_COMPLETED,
            stats=stats,
            mask=mask,
            last_time=grid[-1] if cfg.t_end > 0.0 else 0.0,
            last_state=s0.copy(),
        )

    u = np.zeros(d)
    u[unmasked] = np.log(s0[unmasked])
    sign = 1.0 if cfg.direction == "forward" else -1.0
    rhs = _LogField(p, mask, sign)

    max_step = cfg.max_step if cfg.max_step is not None else np.inf
    t = 0.0
    h = min(_INITIAL_STEP, cfg.t_end, max_step)
    K = np.empty((7, d))
    next_i = 1
    err_prev = 1.0
    termination = TERMINATION_COMPLETED
    div_coord: int | None = None
    div_time: float | None = None
    n_unmasked = int(unmasked.sum())

    with np.errstate(under="ignore", over="ignore", invalid="ignore"):
        f0 = rhs(u)
        stats.n_evals += 1
        while t < cfg.t_end:
            if h >= cfg.t_end - t:
                h = cfg.t_end - t
                t_new = cfg.t_end
            else:
                t_new = t + h
            K[0] = f0
            for i in range(1, 7):
                K[i] = rhs(u + h * (_A[i] @ K[:i]))
            stats.n_evals += 6
            u_new = u + h * (_B @ K)
            err = h * (_E @ K)
            scale = cfg.atol + cfg.rtol * np.maximum(
                np.abs(u[unmasked]), np.abs(u_new[unmasked])
            )
            ratio = err[unmasked] / scale
            err_norm = float(np.sqrt((ratio @ ratio) / n_unmasked))
            if not np.isfinite(err_norm):
                err_norm = np.inf

            if err_norm <= 1.0:
                # emit dense-output samples covered by this step
                if next_i < n_samples and grid[next_i] <= t_new + 1e-10:
                    j_end = next_i
                    while j_end < n_samples and grid[j_end] <= t_new + 1e-10:
                        j_end += 1
                    theta = (grid[next_i:j_end] - t) / h
                    powers = np.vander(theta, 5, increasing=True)[:, 1:]
                    interp = u[None, :] + h * (powers @ (_P.T @ K))
                    for row, ui in zip(range(next_i, j_end), interp):
                        states[row] = _to_state(ui, unmasked, d)
                    next_i = j_end
                t, u, f0 = t_new, u_new, K[6]
                stats.accepted += 1
                stats.final_step = h
                if err_norm == 0.0:
                    fac = _FAC_MAX
                else:
                    fac = _SAFETY * err_norm**-_PI_ALPHA * err_prev**_PI_BETA
                    fac = min(_FAC_MAX, max(_FAC_MIN, fac))
                h = min(h * fac, max_step)
                err_prev = max(err_norm, 1e-10)
                u_max = float(u[unmasked].max())
                if u_max > _LOG_DIVERGENCE:
                    termination = TERMINATION_DIVERGED
                    flat = np.flatnonzero(unmasked)
                    div_coord = int(flat[int(np.argmax(u[unmasked]))])
                    div_time = t
                    break
            else:
                stats.rejected += 1
                h *= min(1.0, max(_FAC_MIN, _SAFETY * err_norm**-0.2))
            if h < 1e-12 * max(1.0, t):
                termination = TERMINATION_STEP_FAILURE
                break

    if termination != TERMINATION_COMPLETED:
        states = states[:next_i]
        grid = grid[:next_i]

    return Trajectory(
        times=grid,
        states=states,
        stats=stats,
        termination=termination,
        mask=mask,
        last_time=t,
        last_state=_to_state(u, unmasked, d),
        diverged_coordinate=div_coord,
        diverged_time=div_time,
    )


def sample_at(traj: Trajectory, t: float) -> np.ndarray:
    """State at time t by linear interpolation between stored samples."""
    times = traj.times
    if t < times[0] or t > times[-1]:
        raise TimeOutOfRangeError(
            f"t={t} outside recorded range [{times[0]}, {times[-1]}]"
        )
    idx = int(np.searchsorted(times, t))
    if idx < times.shape[0] and times[idx] == t:
        return traj.states[idx].copy()
    t0, t1 = times[idx - 1], times[idx]
    w = (t - t0) / (t1 - t0)
    return (1.0 - w) * traj.states[idx - 1] + w * traj.states[idx]
