# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=False
"""Compiled macro-step kernel.

Twin of `mergeplan._pykernel`: identical arithmetic in identical operation
order (same libm calls, no fused multiply-add thanks to -ffp-contract=off),
so the two lanes return bit-identical states and rewards. See the pure module
for the semantics documentation.
"""

from libc.math cimport exp, floor, sqrt

BACKEND = "compiled"


cdef class KernelParams:
    cdef public double dt, accel, v_lat, v_max, v_min
    cdef public double half_width, road_width, lane_width, half_lane
    cdef public int max_lane, goal_human, goal_robot
    cdef public double car_length, half_length, car_width, road_length
    cdef public double alpha, beta, centering, centering_rest

    def __init__(self, double dt, double accel, double v_lat, double v_max,
                 double v_min, double half_width, double road_width,
                 double lane_width, int max_lane, double car_length,
                 double car_width, double road_length, int goal_human,
                 int goal_robot, double alpha, double centering):
        self.dt = dt
        self.accel = accel
        self.v_lat = v_lat
        self.v_max = v_max
        self.v_min = v_min
        self.half_width = half_width
        self.road_width = road_width
        self.lane_width = lane_width
        self.half_lane = lane_width / 2.0
        self.max_lane = max_lane
        self.car_length = car_length
        self.half_length = car_length / 2.0
        self.car_width = car_width
        self.road_length = road_length
        self.goal_human = goal_human
        self.goal_robot = goal_robot
        self.alpha = alpha
        self.beta = 1.0 - alpha
        self.centering = centering
        self.centering_rest = 1.0 - centering


def make_params(phys, road, geom, alpha):
    from .model import CENTERING_WEIGHT

    return KernelParams(
        phys.dt, phys.accel, phys.v_lat, phys.v_max, phys.v_min,
        geom.width / 2.0, road.width, road.lane_width, road.num_lanes - 1,
        geom.length, geom.width, road.road_length, road.goal_lane_human,
        road.goal_lane_robot, alpha, CENTERING_WEIGHT,
    )


cdef struct MacroResult:
    double y_h, x_h, v_h, y_r, x_r, v_r
    double g_joint, g_robot, g_human
    bint terminal
    int subs


cdef void _macro(KernelParams kp, double y_h, double x_h, double v_h,
                 double y_r, double x_r, double v_r, int a_h, int a_r,
                 int n_sub, MacroResult* res) noexcept:
    cdef double dt = kp.dt
    cdef double accel = kp.accel
    cdef double v_lat = kp.v_lat
    cdef double v_max = kp.v_max
    cdef double v_min = kp.v_min
    cdef double half_w = kp.half_width
    cdef double road_w = kp.road_width
    cdef double lane_w = kp.lane_width
    cdef double half_lane = kp.half_lane
    cdef int max_lane = kp.max_lane
    cdef double car_len = kp.car_length
    cdef double half_len = kp.half_length
    cdef double car_w = kp.car_width
    cdef double road_len = kp.road_length
    cdef int goal_h = kp.goal_human
    cdef int goal_r = kp.goal_robot
    cdef double alpha = kp.alpha
    cdef double beta = kp.beta
    cdef double centering = kp.centering
    cdef double rest = kp.centering_rest

    cdef double g_joint = 0.0
    cdef double g_robot = 0.0
    cdef double g_human = 0.0
    cdef bint terminal = False
    cdef int subs = 0

    cdef int i, lane
    cdef double v2, vx, vy, x2, dx, dy, sl, r_h, r_r
    cdef bint blocked, collided

    for i in range(n_sub):
        # human car
        if a_h == 0:
            v2 = v_h + accel * dt
            if v2 > v_max:
                v2 = v_max
            y_h = y_h + v_h * dt
            v_h = v2
        elif a_h == 1:
            v2 = v_h - accel * dt
            if v2 < v_min:
                v2 = v_min
            y_h = y_h + v_h * dt
            v_h = v2
        elif a_h == 2:
            y_h = y_h + v_h * dt
        else:
            vx = v_h if v_h < v_lat else v_lat
            if a_h == 3:
                x2 = x_h + vx * dt
                blocked = x2 + half_w > road_w
            else:
                x2 = x_h - vx * dt
                blocked = x2 - half_w < 0.0
            if blocked:
                y_h = y_h + v_h * dt
            else:
                vy = sqrt(v_h * v_h - vx * vx)
                y_h = y_h + vy * dt
                if x2 > road_w - half_w:
                    x2 = road_w - half_w
                if x2 < half_w:
                    x2 = half_w
                x_h = x2
        # robot car (same pre-state convention; cars move simultaneously)
        if a_r == 0:
            v2 = v_r + accel * dt
            if v2 > v_max:
                v2 = v_max
            y_r = y_r + v_r * dt
            v_r = v2
        elif a_r == 1:
            v2 = v_r - accel * dt
            if v2 < v_min:
                v2 = v_min
            y_r = y_r + v_r * dt
            v_r = v2
        elif a_r == 2:
            y_r = y_r + v_r * dt
        else:
            vx = v_r if v_r < v_lat else v_lat
            if a_r == 3:
                x2 = x_r + vx * dt
                blocked = x2 + half_w > road_w
            else:
                x2 = x_r - vx * dt
                blocked = x2 - half_w < 0.0
            if blocked:
                y_r = y_r + v_r * dt
            else:
                vy = sqrt(v_r * v_r - vx * vx)
                y_r = y_r + vy * dt
                if x2 > road_w - half_w:
                    x2 = road_w - half_w
                if x2 < half_w:
                    x2 = half_w
                x_r = x2
        subs += 1

        dx = x_h - x_r
        if dx < 0.0:
            dx = -dx
        dy = y_h - y_r
        if dy < 0.0:
            dy = -dy
        collided = dx < car_w and dy < car_len
        if collided:
            r_h = -10.0
            r_r = -10.0
        else:
            lane = <int>floor(x_h / lane_w)
            if lane > max_lane:
                lane = max_lane
            if lane == goal_h:
                sl = x_h - (lane + 0.5) * lane_w
                if sl < 0.0:
                    sl = -sl
                sl = sl / half_lane
                if sl > 1.0:
                    sl = 1.0
                r_h = centering * exp(-sl) + rest
            else:
                r_h = 0.0
            lane = <int>floor(x_r / lane_w)
            if lane > max_lane:
                lane = max_lane
            if lane == goal_r:
                sl = x_r - (lane + 0.5) * lane_w
                if sl < 0.0:
                    sl = -sl
                sl = sl / half_lane
                if sl > 1.0:
                    sl = 1.0
                r_r = centering * exp(-sl) + rest
            else:
                r_r = 0.0
        g_joint += alpha * r_r + beta * r_h
        g_robot += r_r
        g_human += r_h
        if collided or y_h + half_len > road_len or y_r + half_len > road_len:
            terminal = True
            break

    res.y_h = y_h
    res.x_h = x_h
    res.v_h = v_h
    res.y_r = y_r
    res.x_r = x_r
    res.v_r = v_r
    res.g_joint = g_joint
    res.g_robot = g_robot
    res.g_human = g_human
    res.terminal = terminal
    res.subs = subs


def macro_step(KernelParams kp, state, int a_h, int a_r, int n_sub):
    """Apply one joint action for up to `n_sub` sim sub-steps.

    Same contract as `mergeplan._pykernel.macro_step`.
    """
    cdef MacroResult res
    _macro(kp, state[0], state[1], state[2], state[3], state[4], state[5],
           a_h, a_r, n_sub, &res)
    return ((res.y_h, res.x_h, res.v_h, res.y_r, res.x_r, res.v_r),
            res.g_joint, res.g_robot, res.g_human,
            res.terminal, res.subs)


def macro_expand(KernelParams kp, state, int n_sub, h_actions, r_actions):
    """macro_step over the joint action product, human-major order.

    Same contract as `mergeplan._pykernel.macro_expand`.
    """
    cdef double y_h = state[0]
    cdef double x_h = state[1]
    cdef double v_h = state[2]
    cdef double y_r = state[3]
    cdef double x_r = state[4]
    cdef double v_r = state[5]
    cdef MacroResult res
    cdef int a_h, a_r
    out = []
    for a_h in h_actions:
        for a_r in r_actions:
            _macro(kp, y_h, x_h, v_h, y_r, x_r, v_r, a_h, a_r, n_sub, &res)
            out.append((
                a_h, a_r,
                (res.y_h, res.x_h, res.v_h, res.y_r, res.x_r, res.v_r),
                res.g_joint, res.g_robot, res.g_human,
                res.terminal, res.subs,
            ))
    return out
