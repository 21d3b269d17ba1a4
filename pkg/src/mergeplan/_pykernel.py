"""Pure-Python macro-step kernel.

This is the fallback twin of the compiled extension `mergeplan._kernel`: the
same flat-float arithmetic in the same operation order, so both lanes produce
bit-identical states and rewards. World states travel through the kernel as
plain 6-tuples (y_h, x_h, v_h, y_r, x_r, v_r); actions as ints in canonical
enumeration order (0=accelerate, 1=decelerate, 2=stay, 3=turn right,
4=turn left).

The car-stepping logic is deliberately inlined per car inside the sub-step
loop: this module is the planner's innermost loop when the extension is not
available, and call overhead dominates otherwise.
"""
from __future__ import annotations

from math import exp, floor, sqrt

BACKEND = "python"


class KernelParams:
    """Scenario constants flattened for the hot loop."""

    __slots__ = (
        "dt", "accel", "v_lat", "v_max", "v_min",
        "half_width", "road_width", "lane_width", "half_lane", "max_lane",
        "car_length", "half_length", "car_width", "road_length",
        "goal_human", "goal_robot", "alpha", "beta", "centering", "centering_rest",
    )

    def __init__(self, dt, accel, v_lat, v_max, v_min, half_width, road_width,
                 lane_width, max_lane, car_length, car_width, road_length,
                 goal_human, goal_robot, alpha, centering):
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
        dt=phys.dt, accel=phys.accel, v_lat=phys.v_lat, v_max=phys.v_max,
        v_min=phys.v_min, half_width=geom.width / 2.0, road_width=road.width,
        lane_width=road.lane_width, max_lane=road.num_lanes - 1,
        car_length=geom.length, car_width=geom.width,
        road_length=road.road_length, goal_human=road.goal_lane_human,
        goal_robot=road.goal_lane_robot, alpha=alpha,
        centering=CENTERING_WEIGHT,
    )


def macro_step(kp, state, a_h, a_r, n_sub):
    """Apply one joint action for up to `n_sub` sim sub-steps.

    A turn that would push a car body past a road edge degrades to `stay` for
    that sub-step only. Rewards are evaluated on each post-sub-step state and
    accumulated; the loop stops early when a terminal state (collision or road
    end) is produced. Returns (state, joint_reward, robot_reward, human_reward,
    terminal, sub_steps_taken).
    """
    dt = kp.dt
    accel = kp.accel
    v_lat = kp.v_lat
    v_max = kp.v_max
    v_min = kp.v_min
    half_w = kp.half_width
    road_w = kp.road_width
    lane_w = kp.lane_width
    half_lane = kp.half_lane
    max_lane = kp.max_lane
    car_len = kp.car_length
    half_len = kp.half_length
    car_w = kp.car_width
    road_len = kp.road_length
    goal_h = kp.goal_human
    goal_r = kp.goal_robot
    alpha = kp.alpha
    beta = kp.beta
    centering = kp.centering
    rest = kp.centering_rest

    y_h, x_h, v_h, y_r, x_r, v_r = state
    g_joint = 0.0
    g_robot = 0.0
    g_human = 0.0
    terminal = False
    subs = 0

    for _ in range(n_sub):
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
            lane = int(floor(x_h / lane_w))
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
            lane = int(floor(x_r / lane_w))
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

    return (y_h, x_h, v_h, y_r, x_r, v_r), g_joint, g_robot, g_human, terminal, subs


def macro_expand(kp, state, n_sub, h_actions, r_actions):
    """macro_step over the joint action product, human-major order.

    Returns a list of tuples (a_h, a_r, state, joint_reward, robot_reward,
    human_reward, terminal, sub_steps_taken).
    """
    out = []
    for a_h in h_actions:
        for a_r in r_actions:
            s2, gj, gr, gh, term, subs = macro_step(kp, state, a_h, a_r, n_sub)
            out.append((a_h, a_r, s2, gj, gr, gh, term, subs))
    return out
