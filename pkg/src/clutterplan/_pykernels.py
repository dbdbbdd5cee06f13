"""Pure-Python reference kernels.

Every function here has a twin in ``_ckernels.pyx`` that performs the same
floating-point operations in the same order, so both backends return
bit-identical results.  Inputs are flat coordinate buffers:

* a *polygon set* is ``(xs, ys, start)`` where part ``p`` owns the vertices
  ``xs[start[p]:start[p + 1]]`` (counter-clockwise, convex);
* poses are packed as ``x, y, theta`` triples.

Arrays arrive as numpy buffers and are converted to lists once at entry.
"""
from __future__ import annotations

import math

INF = float("inf")
TWO_PI = 2.0 * math.pi
RES_TOL = 1e-9


def _wrap(th):
    th = math.remainder(th, TWO_PI)
    if th == -math.pi:
        th = math.pi
    return th


def _sat(ax, ay, a0, a1, bx, by, b0, b1):
    """Signed SAT separation of two convex polygons given as index ranges.

    Returns ``(sep, nx, ny)``.  ``sep < 0`` means penetration of depth
    ``-sep`` and ``(nx, ny)`` is the unit direction that moves ``a`` out of
    ``b``; otherwise ``sep`` is the largest gap over all edge normals.
    """
    best = INF
    bnx = 0.0
    bny = 0.0
    for side in range(2):
        if side == 0:
            px, py, p0, p1 = ax, ay, a0, a1
        else:
            px, py, p0, p1 = bx, by, b0, b1
        n = p1 - p0
        for i in range(n):
            i0 = p0 + i
            i1 = p0 + i + 1 if i + 1 < n else p0
            ex = px[i1] - px[i0]
            ey = py[i1] - py[i0]
            length = math.sqrt(ex * ex + ey * ey)
            if length <= 0.0:
                continue
            nx = ey / length
            ny = -ex / length
            amin = INF
            amax = -INF
            for k in range(a0, a1):
                d = ax[k] * nx + ay[k] * ny
                if d < amin:
                    amin = d
                if d > amax:
                    amax = d
            bmin = INF
            bmax = -INF
            for k in range(b0, b1):
                d = bx[k] * nx + by[k] * ny
                if d < bmin:
                    bmin = d
                if d > bmax:
                    bmax = d
            dpos = bmax - amin
            dneg = amax - bmin
            if dpos < dneg:
                depth = dpos
                sx = nx
                sy = ny
            else:
                depth = dneg
                sx = -nx
                sy = -ny
            if depth < best:
                best = depth
                bnx = sx
                bny = sy
    return -best, bnx, bny


def _separated(ax, ay, a0, a1, bx, by, b0, b1, tol):
    """True iff some edge normal separates the polygons by at least ``tol``."""
    for side in range(2):
        if side == 0:
            px, py, p0, p1 = ax, ay, a0, a1
        else:
            px, py, p0, p1 = bx, by, b0, b1
        n = p1 - p0
        for i in range(n):
            i0 = p0 + i
            i1 = p0 + i + 1 if i + 1 < n else p0
            ex = px[i1] - px[i0]
            ey = py[i1] - py[i0]
            length = math.sqrt(ex * ex + ey * ey)
            if length <= 0.0:
                continue
            nx = ey / length
            ny = -ex / length
            amin = INF
            amax = -INF
            for k in range(a0, a1):
                d = ax[k] * nx + ay[k] * ny
                if d < amin:
                    amin = d
                if d > amax:
                    amax = d
            bmin = INF
            bmax = -INF
            for k in range(b0, b1):
                d = bx[k] * nx + by[k] * ny
                if d < bmin:
                    bmin = d
                if d > bmax:
                    bmax = d
            if bmin - amax >= tol or amin - bmax >= tol:
                return True
    return False


def _disc_poly(cx, cy, r, px, py, p0, p1):
    """Penetration of a disc into a convex polygon.

    Returns ``(depth, dx, dy, qx, qy)``: moving the polygon by ``depth`` along
    ``(dx, dy)`` clears the disc; ``(qx, qy)`` is the contact point.
    ``depth <= 0`` means no contact.
    """
    n = p1 - p0
    inside = True
    smax = -INF
    kmax = 0
    best_d2 = INF
    qx = 0.0
    qy = 0.0
    enx = 0.0
    eny = 0.0
    for i in range(n):
        i0 = p0 + i
        i1 = p0 + i + 1 if i + 1 < n else p0
        ex = px[i1] - px[i0]
        ey = py[i1] - py[i0]
        length = math.sqrt(ex * ex + ey * ey)
        if length <= 0.0:
            continue
        nx = ey / length
        ny = -ex / length
        s = (cx - px[i0]) * nx + (cy - py[i0]) * ny
        if s > 0.0:
            inside = False
        if s > smax:
            smax = s
            kmax = i
        t = ((cx - px[i0]) * ex + (cy - py[i0]) * ey) / (length * length)
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        sx = px[i0] + t * ex
        sy = py[i0] + t * ey
        d2 = (sx - cx) * (sx - cx) + (sy - cy) * (sy - cy)
        if d2 < best_d2:
            best_d2 = d2
            qx = sx
            qy = sy
            enx = nx
            eny = ny
    if inside:
        i0 = p0 + kmax
        i1 = p0 + kmax + 1 if kmax + 1 < n else p0
        ex = px[i1] - px[i0]
        ey = py[i1] - py[i0]
        length = math.sqrt(ex * ex + ey * ey)
        return r - smax, -ey / length, ex / length, cx, cy
    d = math.sqrt(best_d2)
    if d >= r:
        return r - d, 0.0, 0.0, qx, qy
    if d <= 1e-15:
        return r - d, -enx, -eny, qx, qy
    return r - d, (qx - cx) / d, (qy - cy) / d, qx, qy


def sat_mtv(ax, ay, bx, by):
    ax = list(ax)
    ay = list(ay)
    bx = list(bx)
    by = list(by)
    return _sat(ax, ay, 0, len(ax), bx, by, 0, len(bx))


def disc_penetration(cx, cy, r, px, py):
    px = list(px)
    py = list(py)
    return _disc_poly(cx, cy, r, px, py, 0, len(px))


def disc_hits_any(cx, cy, r, xs, ys, start, tol):
    """True iff the disc penetrates any part deeper than ``tol``."""
    xs = list(xs)
    ys = list(ys)
    start = list(start)
    for p in range(len(start) - 1):
        depth = _disc_poly(cx, cy, r, xs, ys, start[p], start[p + 1])[0]
        if depth > tol:
            return True
    return False


def sets_collide(ax, ay, astart, bx, by, bstart, tol):
    """True iff some part of set ``a`` is closer than ``tol`` to some part of ``b``.

    ``tol = 0`` flags strict overlap only; ``tol > 0`` also flags near misses.
    """
    return _collide(list(ax), list(ay), list(astart), list(bx), list(by), list(bstart), tol)


def _collide(ax, ay, astart, bx, by, bstart, tol):
    for p in range(len(astart) - 1):
        a0 = astart[p]
        a1 = astart[p + 1]
        axmin = min(ax[a0:a1])
        axmax = max(ax[a0:a1])
        aymin = min(ay[a0:a1])
        aymax = max(ay[a0:a1])
        for q in range(len(bstart) - 1):
            b0 = bstart[q]
            b1 = bstart[q + 1]
            if min(bx[b0:b1]) - axmax >= tol or axmin - max(bx[b0:b1]) >= tol:
                continue
            if min(by[b0:b1]) - aymax >= tol or aymin - max(by[b0:b1]) >= tol:
                continue
            if not _separated(ax, ay, a0, a1, bx, by, b0, b1, tol):
                return True
    return False


def first_blocked(lx, ly, lstart, poses, ox, oy, ostart, xmin, ymin, xmax, ymax, tol):
    """Index of the first pose (flat ``x, y, theta`` triples) at which the body
    leaves the box or comes within ``tol`` of the obstacle set; -1 if none."""
    lx = list(lx)
    ly = list(ly)
    lstart = list(lstart)
    poses = list(poses)
    ox = list(ox)
    oy = list(oy)
    ostart = list(ostart)
    nv = len(lx)
    for i in range(len(poses) // 3):
        x = poses[3 * i]
        y = poses[3 * i + 1]
        c = math.cos(poses[3 * i + 2])
        s = math.sin(poses[3 * i + 2])
        wx = [c * lx[v] - s * ly[v] + x for v in range(nv)]
        wy = [s * lx[v] + c * ly[v] + y for v in range(nv)]
        if min(wx) < xmin or max(wx) > xmax or min(wy) < ymin or max(wy) > ymax:
            return i
        if ox and _collide(wx, wy, lstart, ox, oy, ostart, tol):
            return i
    return -1


def max_penetration(xs, ys, start, owner):
    """Largest SAT penetration between parts owned by different objects."""
    xs = list(xs)
    ys = list(ys)
    start = list(start)
    owner = list(owner)
    worst = 0.0
    n = len(start) - 1
    for p in range(n):
        for q in range(p + 1, n):
            if owner[p] == owner[q]:
                continue
            sep = _sat(xs, ys, start[p], start[p + 1], xs, ys, start[q], start[q + 1])[0]
            if -sep > worst:
                worst = -sep
    return worst


def _seg_point_d2(px, py, ax, ay, bx, by):
    ex = bx - ax
    ey = by - ay
    l2 = ex * ex + ey * ey
    t = 0.0
    if l2 > 0.0:
        t = ((px - ax) * ex + (py - ay) * ey) / l2
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    dx = ax + t * ex - px
    dy = ay + t * ey - py
    return dx * dx + dy * dy


def _poly_dist(ax, ay, a0, a1, bx, by, b0, b1):
    """Euclidean distance between disjoint convex polygons (0 if they overlap)."""
    if not _separated(ax, ay, a0, a1, bx, by, b0, b1, 0.0):
        return 0.0
    best = INF
    na = a1 - a0
    nb = b1 - b0
    for i in range(na):
        i0 = a0 + i
        i1 = a0 + i + 1 if i + 1 < na else a0
        for k in range(b0, b1):
            d2 = _seg_point_d2(bx[k], by[k], ax[i0], ay[i0], ax[i1], ay[i1])
            if d2 < best:
                best = d2
    for i in range(nb):
        i0 = b0 + i
        i1 = b0 + i + 1 if i + 1 < nb else b0
        for k in range(a0, a1):
            d2 = _seg_point_d2(ax[k], ay[k], bx[i0], by[i0], bx[i1], by[i1])
            if d2 < best:
                best = d2
    return math.sqrt(best)


def grasp_table(tx, ty, ox, oy, ostart, centers, n_angles, stroke,
                finger_len, finger_thick, clearance, xmin, ymin, xmax, ymax):
    """Feasibility and clearance for every (center, angle) grasp configuration.

    Returns two flat lists indexed ``c * n_angles + k``: ``feasible`` (0/1)
    and ``margin`` (distance from the un-inflated fingers to the nearest
    obstacle part, ``inf`` without obstacles, ``-1`` when infeasible).
    """
    tx = list(tx)
    ty = list(ty)
    ox = list(ox)
    oy = list(oy)
    ostart = list(ostart)
    centers = list(centers)
    nc = len(centers) // 2
    nobs = len(ostart) - 1
    half = 0.5 * stroke
    feasible = [0] * (nc * n_angles)
    margin = [-1.0] * (nc * n_angles)
    fx = [0.0, 0.0, 0.0, 0.0]
    fy = [0.0, 0.0, 0.0, 0.0]
    gx = [0.0, 0.0, 0.0, 0.0]
    gy = [0.0, 0.0, 0.0, 0.0]
    us = [0.0, 0.0, 0.0, 0.0]
    ws = [0.0, 0.0, 0.0, 0.0]
    for c in range(nc):
        cx = centers[2 * c]
        cy = centers[2 * c + 1]
        for k in range(n_angles):
            phi = TWO_PI * k / n_angles
            ux = math.cos(phi)
            uy = math.sin(phi)
            wx = -uy
            wy = ux
            ok = True
            for v in range(len(tx)):
                p = (tx[v] - cx) * ux + (ty[v] - cy) * uy
                if p < -(half - clearance) or p > half - clearance:
                    ok = False
                    break
            best = INF
            side = 1.0
            for f in range(2):
                if not ok:
                    break
                if f == 1:
                    side = -1.0
                # inflated footprint for collision, plain footprint for margin
                for j in range(2):
                    if j == 0:
                        u0 = half - clearance
                        u1 = half + finger_thick + clearance
                        w1 = 0.5 * finger_len + clearance
                    else:
                        u0 = half
                        u1 = half + finger_thick
                        w1 = 0.5 * finger_len
                    us[0] = u0
                    ws[0] = -w1
                    us[1] = u1
                    ws[1] = -w1
                    us[2] = u1
                    ws[2] = w1
                    us[3] = u0
                    ws[3] = w1
                    for v in range(4):
                        # the -1 side mirrors u and w, which keeps CCW order
                        uu = side * us[v]
                        ww = side * ws[v]
                        xv = cx + uu * ux + ww * wx
                        yv = cy + uu * uy + ww * wy
                        if j == 0:
                            fx[v] = xv
                            fy[v] = yv
                        else:
                            gx[v] = xv
                            gy[v] = yv
                for v in range(4):
                    if fx[v] < xmin or fx[v] > xmax or fy[v] < ymin or fy[v] > ymax:
                        ok = False
                        break
                if not ok:
                    break
                for q in range(nobs):
                    b0 = ostart[q]
                    b1 = ostart[q + 1]
                    if not _separated(fx, fy, 0, 4, ox, oy, b0, b1, 0.0):
                        ok = False
                        break
                    d = _poly_dist(gx, gy, 0, 4, ox, oy, b0, b1)
                    if d < best:
                        best = d
            if ok:
                feasible[c * n_angles + k] = 1
                margin[c * n_angles + k] = best
    return feasible, margin


def _update_world(lx, ly, wx, wy, pstart, ostart, pose, i):
    x = pose[3 * i]
    y = pose[3 * i + 1]
    th = pose[3 * i + 2]
    c = math.cos(th)
    s = math.sin(th)
    for v in range(pstart[ostart[i]], pstart[ostart[i + 1]]):
        wx[v] = c * lx[v] - s * ly[v] + x
        wy[v] = s * lx[v] + c * ly[v] + y


def _part_box(wx, wy, v0, v1, box, p):
    xmin = INF
    xmax = -INF
    ymin = INF
    ymax = -INF
    for v in range(v0, v1):
        if wx[v] < xmin:
            xmin = wx[v]
        if wx[v] > xmax:
            xmax = wx[v]
        if wy[v] < ymin:
            ymin = wy[v]
        if wy[v] > ymax:
            ymax = wy[v]
    box[4 * p] = xmin
    box[4 * p + 1] = ymin
    box[4 * p + 2] = xmax
    box[4 * p + 3] = ymax


def _refresh(lx, ly, wx, wy, pstart, ostart, pose, box, i):
    _update_world(lx, ly, wx, wy, pstart, ostart, pose, i)
    for p in range(ostart[i], ostart[i + 1]):
        _part_box(wx, wy, pstart[p], pstart[p + 1], box, p)


def _translate(pose, i, tx, ty):
    pose[3 * i] = pose[3 * i] + tx
    pose[3 * i + 1] = pose[3 * i + 1] + ty


def _rotate_about_centroid(pose, cxl, cyl, i, dth):
    x = pose[3 * i]
    y = pose[3 * i + 1]
    th = pose[3 * i + 2]
    c = math.cos(th)
    s = math.sin(th)
    gx = c * cxl[i] - s * cyl[i] + x
    gy = s * cxl[i] + c * cyl[i] + y
    th = _wrap(th + dth)
    c = math.cos(th)
    s = math.sin(th)
    pose[3 * i] = gx - (c * cxl[i] - s * cyl[i])
    pose[3 * i + 1] = gy - (s * cxl[i] + c * cyl[i])
    pose[3 * i + 2] = th


def _resolve(lx, ly, wx, wy, pstart, ostart, pose, box, cxl, cyl, rho2, rmax,
             fscale, use_pusher, qx, qy, radius, mu_rot, iters):
    nobj = len(ostart) - 1
    events = 0
    for _ in range(iters):
        moved = False
        if use_pusher:
            for i in range(nobj):
                for p in range(ostart[i], ostart[i + 1]):
                    if (box[4 * p] - qx >= radius or qx - box[4 * p + 2] >= radius
                            or box[4 * p + 1] - qy >= radius or qy - box[4 * p + 3] >= radius):
                        continue
                    depth, dx, dy, hx, hy = _disc_poly(qx, qy, radius, wx, wy,
                                                       pstart[p], pstart[p + 1])
                    if depth <= RES_TOL:
                        continue
                    th = pose[3 * i + 2]
                    c = math.cos(th)
                    s = math.sin(th)
                    gx = c * cxl[i] - s * cyl[i] + pose[3 * i]
                    gy = s * cxl[i] + c * cyl[i] + pose[3 * i + 1]
                    mx = depth * dx
                    my = depth * dy
                    cross = (hx - gx) * my - (hy - gy) * mx
                    dth = mu_rot * fscale[i] * cross / rho2[i]
                    lim = 0.5 * depth / rmax[i]
                    if dth > lim:
                        dth = lim
                    elif dth < -lim:
                        dth = -lim
                    _translate(pose, i, mx, my)
                    if dth != 0.0:
                        _rotate_about_centroid(pose, cxl, cyl, i, dth)
                    _refresh(lx, ly, wx, wy, pstart, ostart, pose, box, i)
                    moved = True
                    events += 1
        for i in range(nobj):
            for j in range(i + 1, nobj):
                for p in range(ostart[i], ostart[i + 1]):
                    for q in range(ostart[j], ostart[j + 1]):
                        if (box[4 * q] >= box[4 * p + 2] or box[4 * p] >= box[4 * q + 2]
                                or box[4 * q + 1] >= box[4 * p + 3]
                                or box[4 * p + 1] >= box[4 * q + 3]):
                            continue
                        sep, nx, ny = _sat(wx, wy, pstart[p], pstart[p + 1],
                                           wx, wy, pstart[q], pstart[q + 1])
                        if -sep <= RES_TOL:
                            continue
                        h = -0.5 * sep
                        _translate(pose, i, h * nx, h * ny)
                        _translate(pose, j, -h * nx, -h * ny)
                        _refresh(lx, ly, wx, wy, pstart, ostart, pose, box, i)
                        _refresh(lx, ly, wx, wy, pstart, ostart, pose, box, j)
                        moved = True
                        events += 1
        if not moved:
            break
    return events


def _centroid(pose, cxl, cyl, i):
    th = pose[3 * i + 2]
    c = math.cos(th)
    s = math.sin(th)
    return c * cxl[i] - s * cyl[i] + pose[3 * i], s * cxl[i] + c * cyl[i] + pose[3 * i + 1]


def _limit_travel(lx, ly, wx, wy, pstart, ostart, pose, box, cxl, cyl, c0x, c0y, reach):
    # quasi-static: nothing gets farther from where it started than the pusher has travelled
    for i in range(len(ostart) - 1):
        gx, gy = _centroid(pose, cxl, cyl, i)
        ex = gx - c0x[i]
        ey = gy - c0y[i]
        d2 = ex * ex + ey * ey
        if d2 > reach * reach:
            f = reach / math.sqrt(d2)
            _translate(pose, i, ex * f - ex, ey * f - ey)
            _refresh(lx, ly, wx, wy, pstart, ostart, pose, box, i)


def push_objects(lx, ly, pstart, ostart, pose, cxl, cyl, rho2, rmax, fscale,
                 sx, sy, dx, dy, dist, radius, substep, mu_rot, iters, settle_iters):
    """Advance a disc pusher along a segment and settle the contacts.

    ``pose`` is a flat ``[x0, y0, th0, x1, ...]`` buffer updated in place.
    Returns the number of contact-resolution events.
    """
    lx = list(lx)
    ly = list(ly)
    pstart = list(pstart)
    ostart = list(ostart)
    buf = list(pose)
    cxl = list(cxl)
    cyl = list(cyl)
    rho2 = list(rho2)
    rmax = list(rmax)
    fscale = list(fscale)
    nobj = len(ostart) - 1
    nv = len(lx)
    wx = [0.0] * nv
    wy = [0.0] * nv
    box = [0.0] * (4 * (len(pstart) - 1))
    c0x = [0.0] * nobj
    c0y = [0.0] * nobj
    for i in range(nobj):
        _refresh(lx, ly, wx, wy, pstart, ostart, buf, box, i)
        c0x[i], c0y[i] = _centroid(buf, cxl, cyl, i)
    nsteps = int(math.ceil(dist / substep - 1e-9))
    if nsteps < 1:
        nsteps = 1
    events = 0
    for k in range(1, nsteps + 1):
        t = k * substep
        if t > dist:
            t = dist
        qx = sx + dx * t
        qy = sy + dy * t
        for _ in range(iters):
            e = _resolve(lx, ly, wx, wy, pstart, ostart, buf, box, cxl, cyl, rho2,
                         rmax, fscale, True, qx, qy, radius, mu_rot, 1)
            if e == 0:
                break
            events += e
            _limit_travel(lx, ly, wx, wy, pstart, ostart, buf, box, cxl, cyl, c0x, c0y, t)
    if events > 0:
        for _ in range(settle_iters):
            e = _resolve(lx, ly, wx, wy, pstart, ostart, buf, box, cxl, cyl, rho2,
                         rmax, fscale, False, 0.0, 0.0, radius, mu_rot, 1)
            if e == 0:
                break
            events += e
            _limit_travel(lx, ly, wx, wy, pstart, ostart, buf, box, cxl, cyl, c0x, c0y, dist)
    for m in range(len(buf)):
        pose[m] = buf[m]
    return events
