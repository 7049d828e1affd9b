"""Fixed-step closed-loop simulation of the two case studies.

A scenario pins a plant, a controller flavor (nominal / cbf / issf), an input
disturbance, and for the truck a leader acceleration profile.  Integration is
classical RK4 with the controller evaluated inside every sub-stage
(continuous-time idealization) and time signals sampled at sub-stage times.
Runs are deterministic: identical scenarios produce bit-identical logs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import ControlAffineDynamics, SignalDomainError, linear_class_kappa, state_vector
from .disturbance import DisturbanceSignal, lag_residual, zero_disturbance
from .issf import EpsilonFunction, solve_h_star
from .plants import (
    PENDULUM_STATE_LABELS,
    TRUCK_STATE_LABELS,
    PendulumParams,
    TruckParams,
    pendulum_barrier,
    pendulum_cbf_filter,
    pendulum_dynamics,
    pendulum_issf_filter,
    pendulum_nominal,
    range_policy_inverse,
    truck_dynamics,
    truck_headway,
    truck_nominal,
    truck_robust_filter,
    truck_safe_filter,
)

__all__ = [
    "LeaderProfile",
    "Scenario",
    "ScenarioResult",
    "SimulationError",
    "SteadyStateWindowError",
    "constant_speed_profile",
    "hard_brake_profile",
    "leader_profile_from_csv",
    "rk4_step",
    "run_scenario",
    "steady_state_shift",
    "truck_lag_disturbance",
]

CONTROLLERS = ("nominal", "cbf", "issf")

# Speeds are clamped at zero (vehicles do not reverse in the braking
# scenarios); only undershoots beyond this are counted as clamp events so the
# integrator's terminal-braking rounding does not show up in the log.
_CLAMP_LOG_TOL = 1e-9


class SimulationError(RuntimeError):
    """Integration produced a non-finite state."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class SteadyStateWindowError(ValueError):
    """No qualifying constant-leader-speed window in the trajectory."""


# ---------------------------------------------------------------------------
# Leader profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LeaderProfile:
    """Lead-vehicle acceleration signal with its induced speed."""

    kind: str
    v0: float
    duration: float
    accel: Callable[[float], float]
    speed: Callable[[float], float]


def constant_speed_profile(v0: float, v_bar_l: float = 20.0) -> LeaderProfile:
    if not 0.0 <= v0 <= v_bar_l:
        raise ValueError(f"v0 must lie in [0, {v_bar_l}], got {v0}")
    return LeaderProfile("constant", v0, math.inf, lambda t: 0.0, lambda t: v0)


def hard_brake_profile(
    v0: float,
    t_brake: float,
    a_peak: float,
    duration: float,
    v_bar_l: float = 20.0,
    a_under_l: float = 10.0,
) -> LeaderProfile:
    """Constant speed v0 until t_brake, trapezoidal deceleration to standstill.

    ``duration`` is the total braking time; the ramp time follows from the
    requirement that the speed reaches exactly zero:
    ramp = duration - v0/|a_peak|, hold = 2 v0/|a_peak| - duration.
    """
    if not 0.0 < v0 <= v_bar_l:
        raise ValueError(f"v0 must lie in (0, {v_bar_l}], got {v0}")
    if not a_peak < 0.0:
        raise ValueError(f"a_peak must be negative (braking), got {a_peak}")
    if abs(a_peak) > a_under_l:
        raise ValueError(
            f"peak deceleration {abs(a_peak)} exceeds the leader limit {a_under_l}"
        )
    t_min = v0 / abs(a_peak)
    if not t_min - 1e-12 <= duration <= 2.0 * t_min + 1e-12:
        raise ValueError(
            f"duration must lie in [{t_min:g}, {2 * t_min:g}] for the speed to "
            f"reach exactly zero, got {duration}"
        )
    ramp = duration - t_min
    hold = duration - 2.0 * ramp
    t1 = t_brake + ramp            # full deceleration reached
    t2 = t1 + hold                 # ramp-down begins
    t_end = t_brake + duration

    def accel(t):
        if t < t_brake or t >= t_end:
            return 0.0
        if t < t1:
            return a_peak * (t - t_brake) / ramp if ramp > 0 else a_peak
        if t < t2:
            return a_peak
        return a_peak * (t_end - t) / ramp if ramp > 0 else 0.0

    v_at_t1 = v0 + 0.5 * a_peak * ramp
    v_at_t2 = v_at_t1 + a_peak * hold

    def speed(t):
        if t <= t_brake:
            return v0
        if t >= t_end:
            return 0.0
        if t < t1:
            tau = t - t_brake
            return v0 + 0.5 * a_peak * tau * tau / ramp if ramp > 0 else v0 + a_peak * tau
        if t < t2:
            return v_at_t1 + a_peak * (t - t1)
        tau = t - t2
        return v_at_t2 + a_peak * (tau - 0.5 * tau * tau / ramp) if ramp > 0 else v_at_t2

    return LeaderProfile("hard_brake", v0, math.inf, accel, speed)


def leader_profile_from_csv(
    path,
    v0: float,
    v_bar_l: float = 20.0,
    a_bounds: tuple[float, float] = (-10.0, 5.0),
) -> LeaderProfile:
    """Zero-order-hold leader acceleration from a CSV with header ``t,a_L``.

    Acceleration samples outside ``a_bounds`` are rejected at load; an induced
    speed outside [0, v_bar_l] only warns (the simulator clamps the state).
    """
    import csv as _csv

    t, a = [], []
    with open(path, newline="") as handle:
        reader = _csv.reader(handle)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["t", "a_L"]:
            raise ValueError(f"{path}: expected header 't,a_L', got {header}")
        for row in reader:
            if not row:
                continue
            t.append(float(row[0]))
            a.append(float(row[1]))
    t = np.asarray(t, dtype=float)
    a = np.asarray(a, dtype=float)
    if t.size < 2 or not np.all(np.diff(t) > 0):
        raise ValueError(f"{path}: need >= 2 strictly increasing sample times")
    if np.any(a < a_bounds[0]) or np.any(a > a_bounds[1]):
        raise ValueError(f"{path}: acceleration samples violate bounds {a_bounds}")
    if not 0.0 <= v0 <= v_bar_l:
        raise ValueError(f"v0 must lie in [0, {v_bar_l}], got {v0}")

    # induced speed is piecewise linear under the hold
    v_knots = v0 + np.concatenate(([0.0], np.cumsum(a[:-1] * np.diff(t))))
    if np.any(v_knots < -1e-9) or np.any(v_knots > v_bar_l + 1e-9):
        warnings.warn("induced leader speed leaves [0, v_bar_l]; the simulator will clamp")
    t0, t1 = float(t[0]), float(t[-1])

    def accel(tau):
        if tau < t0 or tau > t1:
            raise SignalDomainError(f"t={tau:g} outside leader profile domain [{t0:g}, {t1:g}]")
        idx = int(np.searchsorted(t, tau, side="right")) - 1
        return float(a[idx])

    def speed(tau):
        if tau < t0 or tau > t1:
            raise SignalDomainError(f"t={tau:g} outside leader profile domain [{t0:g}, {t1:g}]")
        return float(np.interp(tau, t, v_knots))

    return LeaderProfile("sampled", v0, t1, accel, speed)


# ---------------------------------------------------------------------------
# Integrator
# ---------------------------------------------------------------------------


def rk4_step(
    dynamics: ControlAffineDynamics,
    controller: Callable[[np.ndarray, float], np.ndarray],
    disturbance: Callable[[float], float],
    x: np.ndarray,
    t: float,
    dt: float,
) -> np.ndarray:
    """One classical RK4 step of  xdot = f(x,t) + g(x,t) (k(x,t) + d(t)).

    The end stage samples time signals just inside the step: piecewise
    signals with breakpoints on the step grid must resolve to the piece
    governing this step, otherwise the integrator loses its order at jumps.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")

    def deriv(xs, ts):
        u = controller(xs, ts)
        du = u + disturbance(ts)
        dx = dynamics.drift(xs, ts) + dynamics.actuation(xs, ts) @ du
        if not np.isfinite(dx).all():
            raise SimulationError(
                f"non-finite derivative at t={ts:g}, state={xs!r}", t=ts, state=xs
            )
        return dx

    t_mid = t + 0.5 * dt
    t_end = t + dt - 1e-9 * dt
    k1 = deriv(x, t)
    k2 = deriv(x + (0.5 * dt) * k1, t_mid)
    k3 = deriv(x + (0.5 * dt) * k2, t_mid)
    k4 = deriv(x + dt * k3, t_end)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """One closed-loop run: plant + controller flavor + disturbance (+ leader)."""

    name: str
    plant: str                      # "pendulum" | "truck"
    controller: str                 # "nominal" | "cbf" | "issf"
    x0: tuple
    horizon: float                  # [s]
    dt: float                       # [s]
    disturbance: DisturbanceSignal
    pendulum: Optional[PendulumParams] = None
    truck: Optional[TruckParams] = None
    leader: Optional[LeaderProfile] = None
    epsilon: Optional[EpsilonFunction] = None
    delta: float = 0.0              # declared disturbance bound for the h* report

    def __post_init__(self):
        if self.plant not in ("pendulum", "truck"):
            raise ValueError(f"unknown plant {self.plant!r}")
        if self.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller {self.controller!r}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.horizon < self.dt:
            raise ValueError(f"horizon must be >= dt, got {self.horizon}")
        if self.plant == "pendulum" and self.pendulum is None:
            raise ValueError("pendulum scenario needs pendulum params")
        if self.plant == "truck" and (self.truck is None or self.leader is None):
            raise ValueError("truck scenario needs truck params and a leader profile")
        if self.controller == "issf" and self.epsilon is None:
            raise ValueError("issf controller needs an epsilon function")


@dataclass
class ScenarioResult:
    """Time-indexed closed-loop log plus summary metrics.

    The h column is the barrier re-evaluated at the logged states, so it can
    always be recomputed from the state log alone.
    """

    name: str
    plant: str
    controller: str
    dt: float
    state_labels: tuple
    time: np.ndarray
    states: np.ndarray
    u_nom: np.ndarray
    u_filt: np.ndarray
    d: np.ndarray
    h: np.ndarray
    h_min: float
    h_star: Optional[float]
    clamp_counts: dict

    def to_csv(self, path) -> None:
        """Plot-ready log: t,<state columns>,u_nom,u_filt,d,h at 9 significant digits."""
        header = "t," + ",".join(self.state_labels) + ",u_nom,u_filt,d,h"
        with open(path, "w", newline="") as handle:
            handle.write(header + "\n")
            for k in range(self.time.size):
                cells = [self.time[k], *self.states[k], self.u_nom[k],
                         self.u_filt[k], self.d[k], self.h[k]]
                handle.write(",".join(f"{c:.9g}" for c in cells) + "\n")


def _pendulum_maps(scn: Scenario):
    p = scn.pendulum
    dyn = pendulum_dynamics(p)
    barrier = pendulum_barrier(p)
    nominal = pendulum_nominal(p)

    def u_nominal(x, t):
        return nominal(x)

    if scn.controller == "nominal":
        u_control = u_nominal
    elif scn.controller == "cbf":
        filt = pendulum_cbf_filter(p)
        u_control = lambda x, t: filt.filter(x)
    else:
        filt = pendulum_issf_filter(p, scn.epsilon)
        u_control = lambda x, t: filt.filter(x)

    def h_of(x, t):
        return barrier(x).h

    return dyn, u_nominal, u_control, h_of, p.alpha_c, None


def _truck_maps(scn: Scenario):
    p = scn.truck
    accel = scn.leader.accel
    dyn = truck_dynamics(p, accel)

    def u_nominal(x, t):
        return np.array([truck_nominal(p, x[0], x[1], x[2])])

    if scn.controller == "nominal":
        u_control = u_nominal
    elif scn.controller == "cbf":
        def u_control(x, t):
            return np.array([truck_safe_filter(p, x[0], x[1], x[2], accel(t))])
    else:
        eps = scn.epsilon

        def u_control(x, t):
            return np.array(
                [truck_robust_filter(p, x[0], x[1], x[2], accel(t), eps.eps0, eps.lam)]
            )

    def h_of(x, t):
        return x[0] - truck_headway(p, x[1], x[2])

    def clamp(x, counts):
        # vehicles do not reverse; see _CLAMP_LOG_TOL for why tiny
        # integrator undershoots are clamped silently
        if x[1] < 0.0:
            if x[1] < -_CLAMP_LOG_TOL:
                counts["v"] += 1
            x[1] = 0.0
        if x[2] < 0.0:
            if x[2] < -_CLAMP_LOG_TOL:
                counts["v_L"] += 1
            x[2] = 0.0
        return x

    return dyn, u_nominal, u_control, h_of, p.alpha_c, clamp


def run_scenario(scn: Scenario) -> ScenarioResult:
    """Integrate a scenario and log (t, state, u_nom, u_filt, d, h) per step."""
    if scn.plant == "pendulum":
        dyn, u_nominal, u_control, h_of, alpha_c, clamp = _pendulum_maps(scn)
        labels = PENDULUM_STATE_LABELS
    else:
        dyn, u_nominal, u_control, h_of, alpha_c, clamp = _truck_maps(scn)
        labels = TRUCK_STATE_LABELS

    x = state_vector(scn.x0, dim=dyn.state_dim).copy()
    if h_of(x, 0.0) < 0.0:
        warnings.warn(f"scenario {scn.name!r}: initial state is outside the safe set")

    dt = scn.dt
    n_steps = int(math.floor(scn.horizon / dt + 1e-9))
    time = np.arange(n_steps + 1) * dt
    states = np.empty((n_steps + 1, dyn.state_dim))
    u_nom = np.empty(n_steps + 1)
    u_filt = np.empty(n_steps + 1)
    d_log = np.empty(n_steps + 1)
    h_log = np.empty(n_steps + 1)
    clamp_counts = {label: 0 for label in labels[1:]} if clamp else {}

    disturbance = scn.disturbance
    for k in range(n_steps + 1):
        t = time[k]
        states[k] = x
        u_nom[k] = float(u_nominal(x, t)[0])
        u_filt[k] = float(u_control(x, t)[0])
        d_log[k] = disturbance(t)
        h_log[k] = h_of(x, t)
        if k < n_steps:
            try:
                x = rk4_step(dyn, u_control, disturbance, x, t, dt)
            except SimulationError as err:
                wrapped = SimulationError(
                    f"scenario {scn.name!r} failed at t={t:g}: {err}",
                    t=t, state=states[k],
                )
                # partial log up to the failing step, so callers can flush it
                wrapped.partial = ScenarioResult(
                    name=scn.name, plant=scn.plant, controller=scn.controller,
                    dt=dt, state_labels=labels,
                    time=time[: k + 1], states=states[: k + 1],
                    u_nom=u_nom[: k + 1], u_filt=u_filt[: k + 1],
                    d=d_log[: k + 1], h=h_log[: k + 1],
                    h_min=float(np.min(h_log[: k + 1])), h_star=None,
                    clamp_counts=clamp_counts,
                )
                raise wrapped from err
            if clamp is not None:
                x = clamp(x, clamp_counts)

    h_star = None
    if scn.controller == "issf":
        h_star = solve_h_star(linear_class_kappa(alpha_c), scn.epsilon, scn.delta)

    return ScenarioResult(
        name=scn.name,
        plant=scn.plant,
        controller=scn.controller,
        dt=dt,
        state_labels=labels,
        time=time,
        states=states,
        u_nom=u_nom,
        u_filt=u_filt,
        d=d_log,
        h=h_log,
        h_min=float(np.min(h_log)),
        h_star=h_star,
        clamp_counts=clamp_counts,
    )


# ---------------------------------------------------------------------------
# Metrics and scenario helpers
# ---------------------------------------------------------------------------


def steady_state_shift(result: ScenarioResult, p: TruckParams, v_star: float) -> float:
    """Shift of the settled following distance against the range-policy target.

    Looks for the first window where the leader holds v_star (|v_L - v*| <=
    0.01 for at least 10 s), averages D over the window's last 5 s, and
    subtracts the range-policy distance for v_star.  Positive values mean the
    controller settles farther away than the cruise policy asks.
    """
    if result.plant != "truck":
        raise ValueError("steady-state shift is defined for truck runs")
    t = result.time
    v_l = result.states[:, 2]
    mask = np.abs(v_l - v_star) <= 0.01
    padded = np.concatenate(([False], mask, [False])).astype(int)
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1  # inclusive
    for s, e in zip(starts, ends):
        if t[e] - t[s] >= 10.0 - 1e-9:
            sel = (t >= t[e] - 5.0 - 1e-9) & (t <= t[e] + 1e-9)
            d_mean = float(np.mean(result.states[sel, 0]))
            return d_mean - range_policy_inverse(p, v_star)
    raise SteadyStateWindowError(
        f"no window with |v_L - {v_star:g}| <= 0.01 lasting 10 s"
    )


def truck_lag_disturbance(
    p: TruckParams,
    leader: LeaderProfile,
    x0: tuple,
    horizon: float,
    tau: float = 0.6,
    dt_ref: float = 0.01,
) -> DisturbanceSignal:
    """Synthetic stand-in for the actuation lag seen on the real truck.

    Runs the safety-filtered braking scenario without disturbance, records the
    commanded acceleration, and returns the first-order-lag residual of that
    command.  The reference run always uses ``dt_ref`` so the synthesized
    signal does not change when the consuming scenario's step size does.
    """
    reference = run_scenario(
        Scenario(
            name="lag-reference",
            plant="truck",
            controller="cbf",
            x0=tuple(x0),
            horizon=horizon,
            dt=dt_ref,
            disturbance=zero_disturbance(),
            truck=p,
            leader=leader,
        )
    )
    return lag_residual(reference.time, reference.u_filt, tau)
