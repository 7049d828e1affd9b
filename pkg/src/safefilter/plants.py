"""The two concrete case studies.

Inverted pendulum: torque-actuated, elliptical barrier over (angle, rate),
feedback-linearizing nominal controller.

Connected truck: car-following state (headway D, own speed v, leader speed
v_L) with acceleration input, quadratic headway barrier h = D - rho(v, v_L),
range/speed-policy cruise controller, and scalar safe / robust filter
compositions that exploit lg_h < 0 in the driving domain.

Barrier gradients are hand-differentiated (two plants, closed forms, zero
dependency weight); a finite-difference cross-check lives in `verification`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cbf import LG_ZERO_TOL, CbfFilter
from .core import BarrierEvaluation, ControlAffineDynamics, linear_class_kappa
from .issf import EpsilonFunction, IssfFilter

__all__ = [
    "PendulumParams",
    "TruckParams",
    "pendulum_barrier",
    "pendulum_cbf_filter",
    "pendulum_dynamics",
    "pendulum_issf_filter",
    "pendulum_nominal",
    "range_policy",
    "range_policy_inverse",
    "speed_policy",
    "truck_barrier",
    "truck_dynamics",
    "truck_headway",
    "truck_nominal",
    "truck_robust_filter",
    "truck_safe_filter",
]

PENDULUM_STATE_LABELS = ("theta", "theta_dot")
TRUCK_STATE_LABELS = ("D", "v", "v_L")


# ---------------------------------------------------------------------------
# Inverted pendulum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PendulumParams:
    mass: float = 2.0      # [kg]
    length: float = 1.0    # [m]
    gravity: float = 10.0  # [m/s^2]
    a: float = 0.25        # angle semi-axis of the safe ellipse [rad]
    b: float = 0.5         # rate semi-axis [rad/s]
    alpha_c: float = 0.2   # barrier constraint rate [1/s]
    kp: float = 0.6        # nominal proportional gain [1/s^2]
    kd: float = 0.6        # nominal derivative gain [1/s]

    def __post_init__(self):
        for name in ("mass", "length", "gravity", "a", "b", "alpha_c", "kp", "kd"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        # alpha_c <= b/a is required for certification, not construction.


def pendulum_dynamics(p: PendulumParams) -> ControlAffineDynamics:
    """State (theta, theta_dot), input torque at the base."""
    g_over_l = p.gravity / p.length
    g_col = np.array([[0.0], [1.0 / (p.mass * p.length * p.length)]])

    def drift(x, t=0.0):
        return np.array([x[1], g_over_l * math.sin(x[0])])

    def actuation(x, t=0.0):
        return g_col

    return ControlAffineDynamics(drift, actuation, state_dim=2, input_dim=1)


def pendulum_barrier(p: PendulumParams) -> Callable[[np.ndarray], BarrierEvaluation]:
    """Elliptical barrier 1 - theta^2/a^2 - thdot^2/b^2 - theta*thdot/(a*b).

    The cross term matters: it keeps the barrier compatible with the drift on
    the lg_h = 0 line (thdot = -(b/2a) theta); without it certification fails.
    """
    a, b = p.a, p.b
    g_over_l = p.gravity / p.length
    ml2 = p.mass * p.length * p.length

    def barrier(x):
        th = float(x[0])
        om = float(x[1])
        h = 1.0 - th * th / (a * a) - om * om / (b * b) - th * om / (a * b)
        dh_dth = -2.0 * th / (a * a) - om / (a * b)
        dh_dom = -2.0 * om / (b * b) - th / (a * b)
        lf_h = dh_dth * om + dh_dom * g_over_l * math.sin(th)
        lg_h = dh_dom / ml2
        return BarrierEvaluation(h, lf_h, lg_h)

    return barrier


def pendulum_nominal(p: PendulumParams) -> Callable[[np.ndarray], np.ndarray]:
    """Feedback-linearizing stabilizer to upright; closed loop is linear."""
    ml2 = p.mass * p.length * p.length
    g_over_l = p.gravity / p.length

    def nominal(x):
        u = ml2 * (-g_over_l * math.sin(x[0]) - p.kp * x[0] - p.kd * x[1])
        return np.array([u])

    return nominal


def pendulum_cbf_filter(p: PendulumParams) -> CbfFilter:
    return CbfFilter(pendulum_barrier(p), linear_class_kappa(p.alpha_c), pendulum_nominal(p))


def pendulum_issf_filter(p: PendulumParams, epsilon: EpsilonFunction) -> IssfFilter:
    return IssfFilter(
        pendulum_barrier(p), linear_class_kappa(p.alpha_c), pendulum_nominal(p), epsilon
    )


# ---------------------------------------------------------------------------
# Connected truck
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruckParams:
    """Published truck controller-design parameter set (the defaults)."""

    c0: float = 2.0        # headway polynomial constant [m]
    c1: float = 1.1        # [s]
    c2: float = 0.6        # [s]
    c3: float = 0.03       # [s^2/m]
    c4: float = -0.03      # [s^2/m]
    c5: float = -0.03      # [s^2/m]
    alpha_c: float = 0.1   # barrier constraint rate [1/s]
    gain_range: float = 0.4   # range-policy error gain [1/s]
    gain_speed: float = 0.5   # speed error gain [1/s]
    kappa: float = 0.8        # 1/kappa is the desired time headway [1/s]
    d_st: float = 5.0         # stopping distance [m]
    d_go: float = 30.0        # free-flow distance [m]
    v_bar_l: float = 20.0     # leader speed cap [m/s]
    a_bar_l: float = 5.0      # leader acceleration cap [m/s^2]
    a_under_l: float = 10.0   # leader deceleration cap, magnitude [m/s^2]
    delta: float = 4.5        # input disturbance bound [m/s^2]
    eps0: float = 0.5         # robustness gain scale [s^3/m]
    lam: float = 0.4          # robustness gain shaping [1/m]

    def __post_init__(self):
        for name in (
            "alpha_c", "gain_range", "gain_speed", "kappa", "d_st", "d_go",
            "v_bar_l", "a_bar_l", "a_under_l", "eps0",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.delta < 0 or self.lam < 0:
            raise ValueError("delta and lam must be nonnegative")
        if abs(self.d_go - (self.v_bar_l / self.kappa + self.d_st)) > 1e-9:
            raise ValueError(
                f"d_go must equal v_bar_l/kappa + d_st = "
                f"{self.v_bar_l / self.kappa + self.d_st!r}, got {self.d_go!r}"
            )


def truck_headway(p: TruckParams, v: float, v_l: float) -> float:
    """Minimum safe bumper-to-bumper distance given both speeds [m]."""
    return p.c0 + p.c1 * v + p.c2 * v_l + p.c3 * v * v + p.c4 * v * v_l + p.c5 * v_l * v_l


def _truck_lie_derivatives(p: TruckParams, v: float, v_l: float, a_l: float):
    lf_h = v_l - v - a_l * (p.c2 + p.c4 * v + 2.0 * p.c5 * v_l)
    lg_h = -(p.c1 + 2.0 * p.c3 * v + p.c4 * v_l)
    return lf_h, lg_h


def truck_barrier(p: TruckParams, a_l: float) -> Callable[[np.ndarray], BarrierEvaluation]:
    """Headway barrier h = D - rho(v, v_L) for the current measured leader accel.

    a_l is the leader acceleration exogenous at the evaluation instant
    (received over V2V in deployment, read off the scenario profile here).
    """

    def barrier(x):
        d_gap, v, v_l = float(x[0]), float(x[1]), float(x[2])
        h = d_gap - truck_headway(p, v, v_l)
        lf_h, lg_h = _truck_lie_derivatives(p, v, v_l, a_l)
        return BarrierEvaluation(h, lf_h, lg_h)

    return barrier


def truck_dynamics(p: TruckParams, leader_accel: Callable[[float], float]) -> ControlAffineDynamics:
    """Connected car-following model: Ddot = v_L - v, vdot = u, v_Ldot = a_L(t)."""
    g_col = np.array([[0.0], [1.0], [0.0]])

    def drift(x, t=0.0):
        return np.array([x[2] - x[1], 0.0, leader_accel(t)])

    def actuation(x, t=0.0):
        return g_col

    return ControlAffineDynamics(drift, actuation, state_dim=3, input_dim=1, exogenous=leader_accel)


def range_policy(p: TruckParams, d: float) -> float:
    """Desired speed from headway distance: saturated ramp, continuous at both knots."""
    if d < p.d_st:
        return 0.0
    if d <= p.d_go:
        return p.kappa * (d - p.d_st)
    return p.v_bar_l


def range_policy_inverse(p: TruckParams, v: float) -> float:
    """Distance at which the range policy commands speed v, for v in [0, v_bar_l]."""
    if not 0.0 <= v <= p.v_bar_l:
        raise ValueError(f"v must lie in [0, {p.v_bar_l}], got {v}")
    # multiply by the time headway 1/kappa rather than dividing: for the
    # published kappa = 0.8 this keeps v = 16 -> D = 25 exact in floats
    return p.d_st + v * (1.0 / p.kappa)


def speed_policy(p: TruckParams, v_l: float) -> float:
    """Leader-speed feedthrough, saturated at the cap v_bar_l."""
    return v_l if v_l <= p.v_bar_l else p.v_bar_l


def truck_nominal(p: TruckParams, d: float, v: float, v_l: float) -> float:
    """Connected cruise controller: range-policy and relative-speed error terms."""
    return p.gain_range * (range_policy(p, d) - v) + p.gain_speed * (speed_policy(p, v_l) - v)


def truck_safe_filter(p: TruckParams, d: float, v: float, v_l: float, a_l: float) -> float:
    """min{k_n, k_s} in the driving domain where lg_h < 0.

    If lg_h >= 0 is ever reached (far outside the domain of interest), the
    sign-switched form below is still the exact closed-form filter, so no
    special handling is needed beyond the switch.
    """
    h = d - truck_headway(p, v, v_l)
    lf_h, lg_h = _truck_lie_derivatives(p, v, v_l, a_l)
    u_nom = truck_nominal(p, d, v, v_l)
    if abs(lg_h) <= LG_ZERO_TOL:
        return u_nom
    u_safe = -(lf_h + p.alpha_c * h) / lg_h
    return min(u_nom, u_safe) if lg_h < 0.0 else max(u_nom, u_safe)


def truck_robust_filter(
    p: TruckParams,
    d: float,
    v: float,
    v_l: float,
    a_l: float,
    eps0: float | None = None,
    lam: float | None = None,
) -> float:
    """min{k_n, k_s + lg_h/eps(h)}: the safe command robustified for bounded
    input disturbance.  The added term is negative in the driving domain, i.e.
    earlier and harder braking."""
    eps0 = p.eps0 if eps0 is None else eps0
    lam = p.lam if lam is None else lam
    h = d - truck_headway(p, v, v_l)
    lf_h, lg_h = _truck_lie_derivatives(p, v, v_l, a_l)
    u_nom = truck_nominal(p, d, v, v_l)
    if abs(lg_h) <= LG_ZERO_TOL:
        return u_nom
    u_safe = -(lf_h + p.alpha_c * h) / lg_h + lg_h / (eps0 * math.exp(lam * h))
    return min(u_nom, u_safe) if lg_h < 0.0 else max(u_nom, u_safe)
