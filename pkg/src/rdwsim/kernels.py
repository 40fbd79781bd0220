"""Numeric hot kernels: geometry queries, grid search, the walking policy and
the MPC tree search.

Every function here is compiled with numba's ``@njit`` unless the environment
variable ``RDWSIM_NO_NUMBA`` is set to ``1``/``true``, in which case the same
source runs as plain Python (slower, identical results).  No ``fastmath`` is
used anywhere so both backends evaluate IEEE double arithmetic in the same
order.
"""

from __future__ import annotations

import math
import os

import numpy as np

NUMBA_ENABLED = os.environ.get("RDWSIM_NO_NUMBA", "").strip().lower() not in (
    "1",
    "true",
    "yes",
)

if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(func):
            return func

        return deco


TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

# Intersection predicate tolerance; scene scale is <= 20 m in double precision.
GEOM_EPS = 1e-9

# Costs closer than this count as tied in the tree search, so symmetric
# states resolve by action preference instead of accumulation-order noise.
MPC_TIE_EPS = 1e-9


@njit(cache=True)
def wrap_angle(a):
    """Normalize an angle to (-pi, pi]."""
    a = a % TWO_PI
    if a > math.pi:
        a -= TWO_PI
    return a


@njit(cache=True)
def point_segment_dist(px, py, ax, ay, bx, by):
    abx = bx - ax
    aby = by - ay
    apx = px - ax
    apy = py - ay
    denom = abx * abx + aby * aby
    if denom <= 0.0:
        return math.hypot(apx, apy)
    t = (apx * abx + apy * aby) / denom
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return math.hypot(px - (ax + t * abx), py - (ay + t * aby))


@njit(cache=True)
def min_dist_to_edges(px, py, edges):
    best = np.inf
    for e in range(edges.shape[0]):
        d = point_segment_dist(px, py, edges[e, 0], edges[e, 1], edges[e, 2], edges[e, 3])
        if d < best:
            best = d
    return best


@njit(cache=True)
def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


@njit(cache=True)
def segments_properly_intersect(ax, ay, bx, by, cx, cy, dx, dy):
    d1 = _cross(cx, cy, dx, dy, ax, ay)
    d2 = _cross(cx, cy, dx, dy, bx, by)
    d3 = _cross(ax, ay, bx, by, cx, cy)
    d4 = _cross(ax, ay, bx, by, dx, dy)
    return ((d1 > 0.0) != (d2 > 0.0)) and ((d3 > 0.0) != (d4 > 0.0))


@njit(cache=True)
def segment_segment_dist(ax, ay, bx, by, cx, cy, dx, dy):
    if segments_properly_intersect(ax, ay, bx, by, cx, cy, dx, dy):
        return 0.0
    d = point_segment_dist(ax, ay, cx, cy, dx, dy)
    t = point_segment_dist(bx, by, cx, cy, dx, dy)
    if t < d:
        d = t
    t = point_segment_dist(cx, cy, ax, ay, bx, by)
    if t < d:
        d = t
    t = point_segment_dist(dx, dy, ax, ay, bx, by)
    if t < d:
        d = t
    return d


@njit(cache=True)
def segment_min_dist_to_edges(ax, ay, bx, by, edges):
    best = np.inf
    for e in range(edges.shape[0]):
        d = segment_segment_dist(
            ax, ay, bx, by, edges[e, 0], edges[e, 1], edges[e, 2], edges[e, 3]
        )
        if d < best:
            best = d
    return best


@njit(cache=True)
def raycast_edges(ox, oy, dx, dy, edges, max_range):
    """Distance along ray (ox,oy)+t*(dx,dy) to the first edge hit, capped."""
    best = max_range
    for e in range(edges.shape[0]):
        ax = edges[e, 0]
        ay = edges[e, 1]
        ex = edges[e, 2] - ax
        ey = edges[e, 3] - ay
        denom = dx * ey - dy * ex
        if abs(denom) < 1e-12:
            continue
        rx = ax - ox
        ry = ay - oy
        t = (rx * ey - ry * ex) / denom
        u = (rx * dy - ry * dx) / denom
        if t >= -GEOM_EPS and u >= -GEOM_EPS and u <= 1.0 + GEOM_EPS:
            if t < 0.0:
                t = 0.0
            if t < best:
                best = t
    return best


@njit(cache=True)
def point_in_poly(px, py, vx, vy):
    """Crossing-number test; points on an edge count as inside."""
    n = vx.shape[0]
    inside = False
    j = n - 1
    for i in range(n):
        if point_segment_dist(px, py, vx[j], vy[j], vx[i], vy[i]) <= GEOM_EPS:
            return True
        if (vy[i] > py) != (vy[j] > py):
            xint = vx[j] + (py - vy[j]) * (vx[i] - vx[j]) / (vy[i] - vy[j])
            if px < xint:
                inside = not inside
        j = i
    return inside


@njit(cache=True)
def point_in_any_poly(px, py, pvx, pvy, offsets):
    for k in range(offsets.shape[0] - 1):
        if point_in_poly(px, py, pvx[offsets[k] : offsets[k + 1]], pvy[offsets[k] : offsets[k + 1]]):
            return True
    return False


@njit(cache=True)
def _in_poly_crossing(px, py, vx, vy):
    # valid only for points > GEOM_EPS away from every edge
    n = vx.shape[0]
    inside = False
    j = n - 1
    for i in range(n):
        if (vy[i] > py) != (vy[j] > py):
            xint = vx[j] + (py - vy[j]) * (vx[i] - vx[j]) / (vy[i] - vy[j])
            if px < xint:
                inside = not inside
        j = i
    return inside


@njit(cache=True)
def free_clearance(px, py, edges, bvx, bvy, ovx, ovy, ooff):
    """Clearance to the nearest edge; 0.0 if the point is not in free space."""
    d = min_dist_to_edges(px, py, edges)
    if d <= GEOM_EPS:
        return 0.0
    if not _in_poly_crossing(px, py, bvx, bvy):
        return 0.0
    for k in range(ooff.shape[0] - 1):
        if _in_poly_crossing(px, py, ovx[ooff[k] : ooff[k + 1]], ovy[ooff[k] : ooff[k + 1]]):
            return 0.0
    return d


@njit(cache=True)
def sweep_min_clearance(px, py, angle, edges, bvx, bvy, ovx, ovy, ooff, step, max_dist):
    """Minimum clearance over points sampled every `step` along `angle`
    (excluding the start point; 0.0 if any sample leaves free space)."""
    ca = math.cos(angle)
    sa = math.sin(angle)
    n = int(max_dist / step)
    worst = np.inf
    for i in range(1, n + 1):
        x = px + i * step * ca
        y = py + i * step * sa
        c = free_clearance(x, y, edges, bvx, bvy, ovx, ovy, ooff)
        if c < worst:
            worst = c
            if worst <= 0.0:
                return 0.0
    return worst


@njit(cache=True)
def apf_force(px, py, sx, sy, w):
    """Resultant repulsive force from edge samples: sum of w/d^2 away from each."""
    fx = 0.0
    fy = 0.0
    for i in range(sx.shape[0]):
        dx = px - sx[i]
        dy = py - sy[i]
        d = math.hypot(dx, dy)
        if d < 1e-9:
            d = 1e-9
        f = w[i] / (d * d * d)
        fx += dx * f
        fy += dy * f
    return fx, fy


# ---------------------------------------------------------------------------
# occupancy grids / flood fill / A*
# ---------------------------------------------------------------------------


@njit(cache=True)
def scene_grids(x0, y0, nx, ny, cell, edges, bvx, bvy, ovx, ovy, ooff, nav_margin):
    """Per-cell free mask, navigable mask (clearance > nav_margin) and clearance."""
    free = np.zeros((nx, ny), dtype=np.uint8)
    nav = np.zeros((nx, ny), dtype=np.uint8)
    clear = np.zeros((nx, ny), dtype=np.float64)
    for i in range(nx):
        cx = x0 + (i + 0.5) * cell
        for j in range(ny):
            cy = y0 + (j + 0.5) * cell
            if not point_in_poly(cx, cy, bvx, bvy):
                continue
            if point_in_any_poly(cx, cy, ovx, ovy, ooff):
                continue
            d = min_dist_to_edges(cx, cy, edges)
            free[i, j] = 1
            clear[i, j] = d
            if d > nav_margin:
                nav[i, j] = 1
    return free, nav, clear


@njit(cache=True)
def flood_fill_count(mask, si, sj):
    """Number of mask cells 4-connected to (si, sj)."""
    nx, ny = mask.shape
    if mask[si, sj] == 0:
        return 0
    seen = np.zeros((nx, ny), dtype=np.uint8)
    queue = np.empty((nx * ny, 2), dtype=np.int64)
    queue[0, 0] = si
    queue[0, 1] = sj
    seen[si, sj] = 1
    head = 0
    tail = 1
    count = 0
    while head < tail:
        ci = queue[head, 0]
        cj = queue[head, 1]
        head += 1
        count += 1
        if ci > 0 and mask[ci - 1, cj] and not seen[ci - 1, cj]:
            seen[ci - 1, cj] = 1
            queue[tail, 0] = ci - 1
            queue[tail, 1] = cj
            tail += 1
        if ci < nx - 1 and mask[ci + 1, cj] and not seen[ci + 1, cj]:
            seen[ci + 1, cj] = 1
            queue[tail, 0] = ci + 1
            queue[tail, 1] = cj
            tail += 1
        if cj > 0 and mask[ci, cj - 1] and not seen[ci, cj - 1]:
            seen[ci, cj - 1] = 1
            queue[tail, 0] = ci
            queue[tail, 1] = cj - 1
            tail += 1
        if cj < ny - 1 and mask[ci, cj + 1] and not seen[ci, cj + 1]:
            seen[ci, cj + 1] = 1
            queue[tail, 0] = ci
            queue[tail, 1] = cj + 1
            tail += 1
    return count


@njit(cache=True)
def label_components(mask):
    """4-connected component labels for mask cells; -1 outside the mask."""
    nx, ny = mask.shape
    labels = np.full((nx, ny), -1, dtype=np.int64)
    queue = np.empty((nx * ny, 2), dtype=np.int64)
    next_label = 0
    for si in range(nx):
        for sj in range(ny):
            if mask[si, sj] == 0 or labels[si, sj] >= 0:
                continue
            labels[si, sj] = next_label
            queue[0, 0] = si
            queue[0, 1] = sj
            head = 0
            tail = 1
            while head < tail:
                ci = queue[head, 0]
                cj = queue[head, 1]
                head += 1
                if ci > 0 and mask[ci - 1, cj] and labels[ci - 1, cj] < 0:
                    labels[ci - 1, cj] = next_label
                    queue[tail, 0] = ci - 1
                    queue[tail, 1] = cj
                    tail += 1
                if ci < nx - 1 and mask[ci + 1, cj] and labels[ci + 1, cj] < 0:
                    labels[ci + 1, cj] = next_label
                    queue[tail, 0] = ci + 1
                    queue[tail, 1] = cj
                    tail += 1
                if cj > 0 and mask[ci, cj - 1] and labels[ci, cj - 1] < 0:
                    labels[ci, cj - 1] = next_label
                    queue[tail, 0] = ci
                    queue[tail, 1] = cj - 1
                    tail += 1
                if cj < ny - 1 and mask[ci, cj + 1] and labels[ci, cj + 1] < 0:
                    labels[ci, cj + 1] = next_label
                    queue[tail, 0] = ci
                    queue[tail, 1] = cj + 1
                    tail += 1
            next_label += 1
    return labels


@njit(cache=True)
def _heap_push(heap_f, heap_n, size, f, node):
    i = size
    heap_f[i] = f
    heap_n[i] = node
    while i > 0:
        parent = (i - 1) // 2
        # tie-break on node index keeps expansion order deterministic
        if heap_f[i] < heap_f[parent] or (
            heap_f[i] == heap_f[parent] and heap_n[i] < heap_n[parent]
        ):
            heap_f[i], heap_f[parent] = heap_f[parent], heap_f[i]
            heap_n[i], heap_n[parent] = heap_n[parent], heap_n[i]
            i = parent
        else:
            break
    return size + 1


@njit(cache=True)
def _heap_pop(heap_f, heap_n, size):
    top_f = heap_f[0]
    top_n = heap_n[0]
    size -= 1
    heap_f[0] = heap_f[size]
    heap_n[0] = heap_n[size]
    i = 0
    while True:
        l = 2 * i + 1
        r = l + 1
        best = i
        if l < size and (
            heap_f[l] < heap_f[best]
            or (heap_f[l] == heap_f[best] and heap_n[l] < heap_n[best])
        ):
            best = l
        if r < size and (
            heap_f[r] < heap_f[best]
            or (heap_f[r] == heap_f[best] and heap_n[r] < heap_n[best])
        ):
            best = r
        if best == i:
            break
        heap_f[i], heap_f[best] = heap_f[best], heap_f[i]
        heap_n[i], heap_n[best] = heap_n[best], heap_n[i]
        i = best
    return top_f, top_n, size


SQRT2 = math.sqrt(2.0)


@njit(cache=True)
def astar_grid(nav, si, sj, gi, gj):
    """8-connected A* (no corner cutting). Returns (n, 2) cell path or (0, 2)."""
    nx, ny = nav.shape
    n_cells = nx * ny
    if nav[si, sj] == 0 or nav[gi, gj] == 0:
        return np.empty((0, 2), dtype=np.int64)
    g = np.full(n_cells, np.inf)
    came = np.full(n_cells, -1, dtype=np.int64)
    closed = np.zeros(n_cells, dtype=np.uint8)
    heap_f = np.empty(8 * n_cells, dtype=np.float64)
    heap_n = np.empty(8 * n_cells, dtype=np.int64)
    start = si * ny + sj
    goal = gi * ny + gj
    g[start] = 0.0
    dx0 = abs(si - gi)
    dy0 = abs(sj - gj)
    h0 = (dx0 + dy0) + (SQRT2 - 2.0) * min(dx0, dy0)
    size = _heap_push(heap_f, heap_n, 0, h0, start)
    found = False
    while size > 0:
        f, node, size = _heap_pop(heap_f, heap_n, size)
        if closed[node]:
            continue
        closed[node] = 1
        if node == goal:
            found = True
            break
        ci = node // ny
        cj = node % ny
        for di in range(-1, 2):
            for dj in range(-1, 2):
                if di == 0 and dj == 0:
                    continue
                ni = ci + di
                nj = cj + dj
                if ni < 0 or nj < 0 or ni >= nx or nj >= ny:
                    continue
                if nav[ni, nj] == 0:
                    continue
                if di != 0 and dj != 0:
                    if nav[ci + di, cj] == 0 or nav[ci, cj + dj] == 0:
                        continue
                    step = SQRT2
                else:
                    step = 1.0
                nnode = ni * ny + nj
                if closed[nnode]:
                    continue
                cand = g[node] + step
                if cand < g[nnode]:
                    g[nnode] = cand
                    came[nnode] = node
                    ddx = abs(ni - gi)
                    ddy = abs(nj - gj)
                    h = (ddx + ddy) + (SQRT2 - 2.0) * min(ddx, ddy)
                    size = _heap_push(heap_f, heap_n, size, cand + h, nnode)
    if not found:
        return np.empty((0, 2), dtype=np.int64)
    length = 1
    node = goal
    while node != start:
        node = came[node]
        length += 1
    path = np.empty((length, 2), dtype=np.int64)
    node = goal
    for k in range(length - 1, -1, -1):
        path[k, 0] = node // ny
        path[k, 1] = node % ny
        node = came[node]
    return path


# ---------------------------------------------------------------------------
# walking policy (turn toward the next waypoint, then walk)
# ---------------------------------------------------------------------------

WAYPOINT_EPS = 1e-9


@njit(cache=True)
def policy_command(px, py, heading, cursor, wx, wy, dt, speed, omega, align_tol):
    """One frame of the turn-then-walk policy.

    Returns (dv, dtheta, cursor, reached).  dv is 0 while the bearing to the
    next waypoint exceeds align_tol; the caller advances the pose with
    heading += dtheta first, then moves dv along the new heading.
    """
    n = wx.shape[0]
    dx = 0.0
    dy = 0.0
    while cursor < n:
        dx = wx[cursor] - px
        dy = wy[cursor] - py
        if dx * dx + dy * dy > WAYPOINT_EPS * WAYPOINT_EPS:
            break
        cursor += 1
    if cursor >= n:
        return 0.0, 0.0, cursor, True
    bearing = math.atan2(dy, dx)
    err = wrap_angle(bearing - heading)
    max_turn = omega * dt
    dtheta = err
    if dtheta > max_turn:
        dtheta = max_turn
    elif dtheta < -max_turn:
        dtheta = -max_turn
    dv = 0.0
    if abs(err) <= align_tol:
        dist = math.hypot(dx, dy)
        dv = speed * dt
        if dist < dv:
            dv = dist
    return dv, dtheta, cursor, False


@njit(cache=True)
def policy_advance(px, py, heading, cursor, wx, wy, n_steps, dt, speed, omega, align_tol):
    """Run policy_command for n_steps frames, applying the motion each frame."""
    for _ in range(n_steps):
        dv, dtheta, cursor, reached = policy_command(
            px, py, heading, cursor, wx, wy, dt, speed, omega, align_tol
        )
        if reached:
            break
        heading = wrap_angle(heading + dtheta)
        px += dv * math.cos(heading)
        py += dv * math.sin(heading)
    return px, py, heading, cursor


# ---------------------------------------------------------------------------
# MPC tree search (3 curvature actions x 3 walk-direction hypotheses per stage)
# ---------------------------------------------------------------------------


@njit(cache=True)
def mpc_segment(
    px,
    py,
    ph,
    vh,
    action,
    turn,
    edges,
    bvx,
    bvy,
    ovx,
    ovy,
    ooff,
    body_radius,
    seg_len,
    sub_step,
    min_radius,
    curvature_penalty,
    reset_cost,
):
    """Simulate one hypothesized path segment under a curvature action.

    Both headings first turn by the hypothesized virtual turn (rotation maps
    1:1 here; the actions only bend the physical path).  The stage cost is the
    reset penalty if any substep endpoint comes within body_radius of an edge,
    plus the proximity integral max(0, 1 - clearance) ds, plus a flat penalty
    for curvature actions.
    """
    vh = wrap_angle(vh + turn)
    ph = wrap_angle(ph + turn)
    curv = 0.0
    if action == 1:
        curv = 1.0 / min_radius
    elif action == 2:
        curv = -1.0 / min_radius
    cost = 0.0
    if action != 0:
        cost = curvature_penalty
    n = int(round(seg_len / sub_step))
    hit = False
    for _ in range(n):
        ph = wrap_angle(ph + curv * sub_step)
        px += sub_step * math.cos(ph)
        py += sub_step * math.sin(ph)
        c = free_clearance(px, py, edges, bvx, bvy, ovx, ovy, ooff)
        if c <= body_radius:
            hit = True
        pen = 1.0 - c
        if pen > 0.0:
            cost += pen * sub_step
    if hit:
        cost += reset_cost
    return px, py, ph, vh, cost


@njit(cache=True)
def mpc_search(
    px,
    py,
    ph,
    vh,
    depth,
    g_fwd,
    g_left,
    g_right,
    edges,
    bvx,
    bvy,
    ovx,
    ovy,
    ooff,
    body_radius,
    seg_len,
    sub_step,
    min_radius,
    curvature_penalty,
    reset_cost,
    alpha,
    prune,
):
    """Branch-and-bound expected-cost search; returns (action, cost).

    Actions: 0 none, 1 left curvature, 2 right curvature, evaluated in that
    order; an action only displaces the incumbent when its cost is smaller by
    more than MPC_TIE_EPS, so ties resolve to none, then left.  Stage and
    child costs are weighted by the direction probability of the segment
    hypothesis; child costs additionally decay by alpha.
    """
    if depth <= 0:
        return 0, 0.0
    best_cost = np.inf
    best_action = 0
    for a in range(3):
        flat = 0.0
        if a != 0:
            flat = curvature_penalty
        if prune and flat >= best_cost - MPC_TIE_EPS:
            continue
        cost_c = 0.0
        pruned = False
        for s in range(3):
            if s == 0:
                gamma_s = g_fwd
                turn = 0.0
            elif s == 1:
                gamma_s = g_left
                turn = HALF_PI
            else:
                gamma_s = g_right
                turn = -HALF_PI
            nx, ny, nph, nvh, stage = mpc_segment(
                px,
                py,
                ph,
                vh,
                a,
                turn,
                edges,
                bvx,
                bvy,
                ovx,
                ovy,
                ooff,
                body_radius,
                seg_len,
                sub_step,
                min_radius,
                curvature_penalty,
                reset_cost,
            )
            cost_c += gamma_s * stage
            if prune and cost_c >= best_cost - MPC_TIE_EPS:
                pruned = True
                break
            if depth > 1:
                _, child_cost = mpc_search(
                    nx,
                    ny,
                    nph,
                    nvh,
                    depth - 1,
                    g_fwd,
                    g_left,
                    g_right,
                    edges,
                    bvx,
                    bvy,
                    ovx,
                    ovy,
                    ooff,
                    body_radius,
                    seg_len,
                    sub_step,
                    min_radius,
                    curvature_penalty,
                    reset_cost,
                    alpha,
                    prune,
                )
                cost_c += alpha * gamma_s * child_cost
        if not pruned and cost_c < best_cost - MPC_TIE_EPS:
            best_cost = cost_c
            best_action = a
    return best_action, best_cost
