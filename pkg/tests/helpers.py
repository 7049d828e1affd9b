"""Independent oracles and samplers shared across the test suite.

Nothing here may call the closed-form filter formulas: the projection oracle
is derived from the geometry of a point-to-half-space projection, the grid
oracle from brute-force enumeration, so both stay independent of the code
paths they check.
"""

import numpy as np

from safefilter import PendulumParams, TruckParams

GRID_LO = -100.0
GRID_HI = 100.0
GRID_STEP = 1e-3


def project_halfspace(u_nom, normal, rhs):
    """Euclidean projection of u_nom onto {u : normal . u >= rhs}.

    If the point already satisfies the constraint it is its own projection;
    otherwise it moves along the normal until the constraint is active.
    """
    u_nom = np.atleast_1d(np.asarray(u_nom, dtype=float))
    normal = np.atleast_1d(np.asarray(normal, dtype=float))
    s = float(normal @ normal)
    if s == 0.0:
        return u_nom  # degenerate constraint: either trivially true or infeasible
    slack = float(normal @ u_nom) - rhs
    if slack >= 0.0:
        return u_nom
    return u_nom - (slack / s) * normal


def grid_search_scalar(u_nom, lg, rhs, enumerate_all=False):
    """argmin_{u in grid, lg*u >= rhs} |u - u_nom| over the uniform grid
    [GRID_LO, GRID_HI] with step GRID_STEP.

    The fast path locates the feasibility boundary index and clamps the
    nearest-to-nominal index into the feasible range, which is exactly the
    enumeration argmin (up to ties at half-step midpoints); ``enumerate_all``
    runs the literal brute force for cross-checking the fast path.
    """
    n = int(round((GRID_HI - GRID_LO) / GRID_STEP))

    def point(i):
        return GRID_LO + i * GRID_STEP

    if enumerate_all:
        grid = GRID_LO + np.arange(n + 1) * GRID_STEP
        feasible = lg * grid >= rhs
        if not np.any(feasible):
            raise ValueError("no feasible grid point")
        cost = np.where(feasible, np.abs(grid - u_nom), np.inf)
        return float(grid[int(np.argmin(cost))])

    if lg == 0.0:
        if 0.0 < rhs:
            raise ValueError("no feasible grid point")
        i_lo, i_hi = 0, n
    elif lg > 0.0:
        bound = rhs / lg  # u >= bound
        if bound > GRID_HI:
            raise ValueError("no feasible grid point")
        i_lo = 0 if bound < GRID_LO else int(np.ceil((bound - GRID_LO) / GRID_STEP))
        # settle float rounding against the same predicate enumeration uses
        while i_lo <= n and lg * point(i_lo) < rhs:
            i_lo += 1
        while i_lo > 0 and lg * point(i_lo - 1) >= rhs:
            i_lo -= 1
        i_hi = n
        if i_lo > n:
            raise ValueError("no feasible grid point")
    else:
        bound = rhs / lg  # u <= bound
        if bound < GRID_LO:
            raise ValueError("no feasible grid point")
        i_hi = n if bound > GRID_HI else int(np.floor((bound - GRID_LO) / GRID_STEP))
        while i_hi >= 0 and lg * point(i_hi) < rhs:
            i_hi -= 1
        while i_hi < n and lg * point(i_hi + 1) >= rhs:
            i_hi += 1
        i_lo = 0
        if i_hi < 0:
            raise ValueError("no feasible grid point")
    nearest = int(round((u_nom - GRID_LO) / GRID_STEP))
    return point(min(max(nearest, i_lo), i_hi))


def sample_pendulum_states(rng, count):
    """States across and beyond the safe ellipse; filter outputs stay in the grid."""
    theta = rng.uniform(-0.4, 0.4, count)
    theta_dot = rng.uniform(-0.8, 0.8, count)
    return np.column_stack([theta, theta_dot])


def sample_truck_states(rng, count):
    """Driving-envelope states plus the leader acceleration measured with them."""
    d = rng.uniform(0.0, 60.0, count)
    v = rng.uniform(0.0, 20.0, count)
    v_l = rng.uniform(0.0, 20.0, count)
    a_l = rng.uniform(-10.0, 5.0, count)
    return np.column_stack([d, v, v_l, a_l])


def default_pendulum():
    return PendulumParams()


def default_truck():
    return TruckParams()
