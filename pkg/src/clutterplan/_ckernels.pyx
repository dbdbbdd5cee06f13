# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; operation-for-operation twin of ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos, ceil, remainder, M_PI, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI
cdef double RES_TOL = 1e-9


cdef inline double _wrap(double th) noexcept nogil:
    th = remainder(th, TWO_PI)
    if th == -M_PI:
        th = M_PI
    return th


cdef double _sat(const double* ax, const double* ay, Py_ssize_t a0, Py_ssize_t a1,
                 const double* bx, const double* by, Py_ssize_t b0, Py_ssize_t b1,
                 double* onx, double* ony) noexcept nogil:
    cdef double best = INFINITY, bnx = 0.0, bny = 0.0
    cdef double ex, ey, length, nx, ny, amin, amax, bmin, bmax, d, dpos, dneg, depth, sx, sy
    cdef const double* px
    cdef const double* py
    cdef Py_ssize_t p0, p1, n, i, i0, i1, k
    cdef int side
    for side in range(2):
        if side == 0:
            px = ax; py = ay; p0 = a0; p1 = a1
        else:
            px = bx; py = by; p0 = b0; p1 = b1
        n = p1 - p0
        for i in range(n):
            i0 = p0 + i
            i1 = p0 + i + 1 if i + 1 < n else p0
            ex = px[i1] - px[i0]
            ey = py[i1] - py[i0]
            length = sqrt(ex * ex + ey * ey)
            if length <= 0.0:
                continue
            nx = ey / length
            ny = -ex / length
            amin = INFINITY
            amax = -INFINITY
            for k in range(a0, a1):
                d = ax[k] * nx + ay[k] * ny
                if d < amin:
                    amin = d
                if d > amax:
                    amax = d
            bmin = INFINITY
            bmax = -INFINITY
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
    onx[0] = bnx
    ony[0] = bny
    return -best


cdef bint _separated(const double* ax, const double* ay, Py_ssize_t a0, Py_ssize_t a1,
                     const double* bx, const double* by, Py_ssize_t b0, Py_ssize_t b1,
                     double tol) noexcept nogil:
    cdef double ex, ey, length, nx, ny, amin, amax, bmin, bmax, d
    cdef const double* px
    cdef const double* py
    cdef Py_ssize_t p0, p1, n, i, i0, i1, k
    cdef int side
    for side in range(2):
        if side == 0:
            px = ax; py = ay; p0 = a0; p1 = a1
        else:
            px = bx; py = by; p0 = b0; p1 = b1
        n = p1 - p0
        for i in range(n):
            i0 = p0 + i
            i1 = p0 + i + 1 if i + 1 < n else p0
            ex = px[i1] - px[i0]
            ey = py[i1] - py[i0]
            length = sqrt(ex * ex + ey * ey)
            if length <= 0.0:
                continue
            nx = ey / length
            ny = -ex / length
            amin = INFINITY
            amax = -INFINITY
            for k in range(a0, a1):
                d = ax[k] * nx + ay[k] * ny
                if d < amin:
                    amin = d
                if d > amax:
                    amax = d
            bmin = INFINITY
            bmax = -INFINITY
            for k in range(b0, b1):
                d = bx[k] * nx + by[k] * ny
                if d < bmin:
                    bmin = d
                if d > bmax:
                    bmax = d
            if bmin - amax >= tol or amin - bmax >= tol:
                return True
    return False


cdef double _disc_poly(double cx, double cy, double r, const double* px, const double* py,
                       Py_ssize_t p0, Py_ssize_t p1, double* odx, double* ody,
                       double* oqx, double* oqy) noexcept nogil:
    cdef Py_ssize_t n = p1 - p0, i, i0, i1, kmax = 0
    cdef bint inside = True
    cdef double smax = -INFINITY, best_d2 = INFINITY
    cdef double qx = 0.0, qy = 0.0, enx = 0.0, eny = 0.0
    cdef double ex, ey, length, nx, ny, s, t, sx, sy, d2, d
    for i in range(n):
        i0 = p0 + i
        i1 = p0 + i + 1 if i + 1 < n else p0
        ex = px[i1] - px[i0]
        ey = py[i1] - py[i0]
        length = sqrt(ex * ex + ey * ey)
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
        length = sqrt(ex * ex + ey * ey)
        odx[0] = -ey / length
        ody[0] = ex / length
        oqx[0] = cx
        oqy[0] = cy
        return r - smax
    d = sqrt(best_d2)
    oqx[0] = qx
    oqy[0] = qy
    if d >= r:
        odx[0] = 0.0
        ody[0] = 0.0
        return r - d
    if d <= 1e-15:
        odx[0] = -enx
        ody[0] = -eny
        return r - d
    odx[0] = (qx - cx) / d
    ody[0] = (qy - cy) / d
    return r - d


def sat_mtv(const double[::1] ax, const double[::1] ay, const double[::1] bx, const double[::1] by):
    cdef double nx, ny, sep
    sep = _sat(&ax[0], &ay[0], 0, ax.shape[0], &bx[0], &by[0], 0, bx.shape[0], &nx, &ny)
    return sep, nx, ny


def disc_penetration(double cx, double cy, double r, const double[::1] px, const double[::1] py):
    cdef double dx, dy, qx, qy, depth
    depth = _disc_poly(cx, cy, r, &px[0], &py[0], 0, px.shape[0], &dx, &dy, &qx, &qy)
    return depth, dx, dy, qx, qy


def disc_hits_any(double cx, double cy, double r, const double[::1] xs, const double[::1] ys,
                  const int[::1] start, double tol):
    cdef Py_ssize_t p
    cdef double dx, dy, qx, qy
    if xs.shape[0] == 0:
        return False
    for p in range(start.shape[0] - 1):
        if _disc_poly(cx, cy, r, &xs[0], &ys[0], start[p], start[p + 1], &dx, &dy, &qx, &qy) > tol:
            return True
    return False


cdef void _range_box(const double* xs, const double* ys, Py_ssize_t v0, Py_ssize_t v1,
                     double* out) noexcept nogil:
    cdef Py_ssize_t v
    out[0] = INFINITY
    out[1] = INFINITY
    out[2] = -INFINITY
    out[3] = -INFINITY
    for v in range(v0, v1):
        if xs[v] < out[0]:
            out[0] = xs[v]
        if xs[v] > out[2]:
            out[2] = xs[v]
        if ys[v] < out[1]:
            out[1] = ys[v]
        if ys[v] > out[3]:
            out[3] = ys[v]


cdef bint _collide(const double* ax, const double* ay, const int* astart, Py_ssize_t na,
                   const double* bx, const double* by, const int* bstart, Py_ssize_t nb,
                   double tol) noexcept nogil:
    cdef Py_ssize_t p, q
    cdef double ab[4]
    cdef double bb[4]
    for p in range(na):
        _range_box(ax, ay, astart[p], astart[p + 1], ab)
        for q in range(nb):
            _range_box(bx, by, bstart[q], bstart[q + 1], bb)
            if bb[0] - ab[2] >= tol or ab[0] - bb[2] >= tol:
                continue
            if bb[1] - ab[3] >= tol or ab[1] - bb[3] >= tol:
                continue
            if not _separated(ax, ay, astart[p], astart[p + 1], bx, by, bstart[q], bstart[q + 1], tol):
                return True
    return False


def sets_collide(const double[::1] ax, const double[::1] ay, const int[::1] astart,
                 const double[::1] bx, const double[::1] by, const int[::1] bstart, double tol):
    cdef bint hit
    if ax.shape[0] == 0 or bx.shape[0] == 0:
        return False
    with nogil:
        hit = _collide(&ax[0], &ay[0], &astart[0], astart.shape[0] - 1,
                       &bx[0], &by[0], &bstart[0], bstart.shape[0] - 1, tol)
    return hit


def first_blocked(const double[::1] lx, const double[::1] ly, const int[::1] lstart, const double[::1] poses,
                  const double[::1] ox, const double[::1] oy, const int[::1] ostart,
                  double xmin, double ymin, double xmax, double ymax, double tol):
    cdef Py_ssize_t i, v, nv = lx.shape[0], n = poses.shape[0] // 3
    cdef Py_ssize_t no = ostart.shape[0] - 1
    cdef double x, y, c, s
    cdef double* wx
    cdef double* wy
    cdef long found = -1
    cdef bint out
    if nv == 0:
        return -1
    wx = <double*>malloc(nv * sizeof(double))
    wy = <double*>malloc(nv * sizeof(double))
    if wx == NULL or wy == NULL:
        free(wx)
        free(wy)
        raise MemoryError()
    with nogil:
        for i in range(n):
            x = poses[3 * i]
            y = poses[3 * i + 1]
            c = cos(poses[3 * i + 2])
            s = sin(poses[3 * i + 2])
            out = False
            for v in range(nv):
                wx[v] = c * lx[v] - s * ly[v] + x
                wy[v] = s * lx[v] + c * ly[v] + y
                if wx[v] < xmin or wx[v] > xmax or wy[v] < ymin or wy[v] > ymax:
                    out = True
            if out:
                found = i
                break
            if ox.shape[0] > 0 and _collide(wx, wy, &lstart[0], lstart.shape[0] - 1,
                                            &ox[0], &oy[0], &ostart[0], no, tol):
                found = i
                break
    free(wx)
    free(wy)
    return found


def max_penetration(const double[::1] xs, const double[::1] ys, const int[::1] start,
                    const int[::1] owner):
    cdef Py_ssize_t p, q, n = start.shape[0] - 1
    cdef double worst = 0.0, sep, nx, ny
    if xs.shape[0] == 0:
        return 0.0
    with nogil:
        for p in range(n):
            for q in range(p + 1, n):
                if owner[p] == owner[q]:
                    continue
                sep = _sat(&xs[0], &ys[0], start[p], start[p + 1],
                           &xs[0], &ys[0], start[q], start[q + 1], &nx, &ny)
                if -sep > worst:
                    worst = -sep
    return worst


cdef inline double _seg_point_d2(double px, double py, double ax, double ay,
                                 double bx, double by) noexcept nogil:
    cdef double ex = bx - ax, ey = by - ay
    cdef double l2 = ex * ex + ey * ey
    cdef double t = 0.0, dx, dy
    if l2 > 0.0:
        t = ((px - ax) * ex + (py - ay) * ey) / l2
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    dx = ax + t * ex - px
    dy = ay + t * ey - py
    return dx * dx + dy * dy


cdef double _poly_dist(const double* ax, const double* ay, Py_ssize_t a0, Py_ssize_t a1,
                       const double* bx, const double* by, Py_ssize_t b0, Py_ssize_t b1) noexcept nogil:
    cdef double best = INFINITY, d2
    cdef Py_ssize_t na = a1 - a0, nb = b1 - b0, i, i0, i1, k
    if not _separated(ax, ay, a0, a1, bx, by, b0, b1, 0.0):
        return 0.0
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
    return sqrt(best)


def grasp_table(const double[::1] tx, const double[::1] ty, const double[::1] ox,
                const double[::1] oy, const int[::1] ostart, const double[::1] centers,
                int n_angles, double stroke, double finger_len, double finger_thick,
                double clearance, double xmin, double ymin, double xmax, double ymax):
    cdef Py_ssize_t nc = centers.shape[0] // 2
    cdef Py_ssize_t nobs = ostart.shape[0] - 1
    cdef Py_ssize_t ntv = tx.shape[0]
    cdef double half = 0.5 * stroke
    feasible_arr = np.zeros(nc * n_angles, dtype=np.intc)
    margin_arr = np.full(nc * n_angles, -1.0)
    cdef int[::1] feasible = feasible_arr
    cdef double[::1] margin = margin_arr
    cdef double fx[4]
    cdef double fy[4]
    cdef double gx[4]
    cdef double gy[4]
    cdef double us[4]
    cdef double ws[4]
    cdef const double* oxp = &ox[0] if ox.shape[0] > 0 else NULL
    cdef const double* oyp = &oy[0] if oy.shape[0] > 0 else NULL
    cdef Py_ssize_t c, v, q, b0, b1
    cdef int k, f, j
    cdef double cx, cy, phi, ux, uy, wx, wy, p, best, side, u0, u1, w1, uu, ww, xv, yv, d
    cdef bint ok
    with nogil:
        for c in range(nc):
            cx = centers[2 * c]
            cy = centers[2 * c + 1]
            for k in range(n_angles):
                phi = TWO_PI * k / n_angles
                ux = cos(phi)
                uy = sin(phi)
                wx = -uy
                wy = ux
                ok = True
                for v in range(ntv):
                    p = (tx[v] - cx) * ux + (ty[v] - cy) * uy
                    if p < -(half - clearance) or p > half - clearance:
                        ok = False
                        break
                best = INFINITY
                side = 1.0
                for f in range(2):
                    if not ok:
                        break
                    if f == 1:
                        side = -1.0
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
                        if not _separated(fx, fy, 0, 4, oxp, oyp, b0, b1, 0.0):
                            ok = False
                            break
                        d = _poly_dist(gx, gy, 0, 4, oxp, oyp, b0, b1)
                        if d < best:
                            best = d
                if ok:
                    feasible[c * n_angles + k] = 1
                    margin[c * n_angles + k] = best
    return feasible_arr.tolist(), margin_arr.tolist()


cdef struct World:
    const double* lx
    const double* ly
    double* wx
    double* wy
    const int* pstart
    const int* ostart
    double* pose
    double* box
    const double* cxl
    const double* cyl
    const double* rho2
    const double* rmax
    const double* fscale
    Py_ssize_t nobj


cdef void _refresh(World* w, Py_ssize_t i) noexcept nogil:
    cdef double x = w.pose[3 * i], y = w.pose[3 * i + 1], th = w.pose[3 * i + 2]
    cdef double c = cos(th), s = sin(th)
    cdef Py_ssize_t v, p
    for v in range(w.pstart[w.ostart[i]], w.pstart[w.ostart[i + 1]]):
        w.wx[v] = c * w.lx[v] - s * w.ly[v] + x
        w.wy[v] = s * w.lx[v] + c * w.ly[v] + y
    for p in range(w.ostart[i], w.ostart[i + 1]):
        _range_box(w.wx, w.wy, w.pstart[p], w.pstart[p + 1], &w.box[4 * p])


cdef inline void _translate(double* pose, Py_ssize_t i, double tx, double ty) noexcept nogil:
    pose[3 * i] = pose[3 * i] + tx
    pose[3 * i + 1] = pose[3 * i + 1] + ty


cdef void _rotate_about_centroid(World* w, Py_ssize_t i, double dth) noexcept nogil:
    cdef double x = w.pose[3 * i], y = w.pose[3 * i + 1], th = w.pose[3 * i + 2]
    cdef double c = cos(th), s = sin(th)
    cdef double gx = c * w.cxl[i] - s * w.cyl[i] + x
    cdef double gy = s * w.cxl[i] + c * w.cyl[i] + y
    th = _wrap(th + dth)
    c = cos(th)
    s = sin(th)
    w.pose[3 * i] = gx - (c * w.cxl[i] - s * w.cyl[i])
    w.pose[3 * i + 1] = gy - (s * w.cxl[i] + c * w.cyl[i])
    w.pose[3 * i + 2] = th


cdef long _resolve(World* w, bint use_pusher, double qx, double qy, double radius,
                   double mu_rot, int iters) noexcept nogil:
    cdef long events = 0
    cdef int it
    cdef bint moved
    cdef Py_ssize_t i, j, p, q
    cdef double depth, dx, dy, hx, hy, th, c, s, gx, gy, mx, my, cross, dth, lim, sep, nx, ny, h
    cdef double* box = w.box
    for it in range(iters):
        moved = False
        if use_pusher:
            for i in range(w.nobj):
                for p in range(w.ostart[i], w.ostart[i + 1]):
                    if (box[4 * p] - qx >= radius or qx - box[4 * p + 2] >= radius
                            or box[4 * p + 1] - qy >= radius or qy - box[4 * p + 3] >= radius):
                        continue
                    depth = _disc_poly(qx, qy, radius, w.wx, w.wy, w.pstart[p], w.pstart[p + 1],
                                       &dx, &dy, &hx, &hy)
                    if depth <= RES_TOL:
                        continue
                    th = w.pose[3 * i + 2]
                    c = cos(th)
                    s = sin(th)
                    gx = c * w.cxl[i] - s * w.cyl[i] + w.pose[3 * i]
                    gy = s * w.cxl[i] + c * w.cyl[i] + w.pose[3 * i + 1]
                    mx = depth * dx
                    my = depth * dy
                    cross = (hx - gx) * my - (hy - gy) * mx
                    dth = mu_rot * w.fscale[i] * cross / w.rho2[i]
                    lim = 0.5 * depth / w.rmax[i]
                    if dth > lim:
                        dth = lim
                    elif dth < -lim:
                        dth = -lim
                    _translate(w.pose, i, mx, my)
                    if dth != 0.0:
                        _rotate_about_centroid(w, i, dth)
                    _refresh(w, i)
                    moved = True
                    events += 1
        for i in range(w.nobj):
            for j in range(i + 1, w.nobj):
                for p in range(w.ostart[i], w.ostart[i + 1]):
                    for q in range(w.ostart[j], w.ostart[j + 1]):
                        if (box[4 * q] >= box[4 * p + 2] or box[4 * p] >= box[4 * q + 2]
                                or box[4 * q + 1] >= box[4 * p + 3]
                                or box[4 * p + 1] >= box[4 * q + 3]):
                            continue
                        sep = _sat(w.wx, w.wy, w.pstart[p], w.pstart[p + 1],
                                   w.wx, w.wy, w.pstart[q], w.pstart[q + 1], &nx, &ny)
                        if -sep <= RES_TOL:
                            continue
                        h = -0.5 * sep
                        _translate(w.pose, i, h * nx, h * ny)
                        _translate(w.pose, j, -h * nx, -h * ny)
                        _refresh(w, i)
                        _refresh(w, j)
                        moved = True
                        events += 1
        if not moved:
            break
    return events


cdef void _limit_travel(World* w, const double* c0x, const double* c0y, double reach) noexcept nogil:
    # quasi-static: nothing gets farther from where it started than the pusher has travelled
    cdef Py_ssize_t i
    cdef double th, c, s, gx, gy, ex, ey, d2, f
    for i in range(w.nobj):
        th = w.pose[3 * i + 2]
        c = cos(th)
        s = sin(th)
        gx = c * w.cxl[i] - s * w.cyl[i] + w.pose[3 * i]
        gy = s * w.cxl[i] + c * w.cyl[i] + w.pose[3 * i + 1]
        ex = gx - c0x[i]
        ey = gy - c0y[i]
        d2 = ex * ex + ey * ey
        if d2 > reach * reach:
            f = reach / sqrt(d2)
            _translate(w.pose, i, ex * f - ex, ey * f - ey)
            _refresh(w, i)


def push_objects(const double[::1] lx, const double[::1] ly, const int[::1] pstart,
                 const int[::1] ostart, double[::1] pose, const double[::1] cxl,
                 const double[::1] cyl, const double[::1] rho2, const double[::1] rmax,
                 const double[::1] fscale, double sx, double sy, double dx, double dy,
                 double dist, double radius, double substep, double mu_rot, int iters,
                 int settle_iters):
    cdef World w
    cdef Py_ssize_t nv = lx.shape[0], npart = pstart.shape[0] - 1, i
    cdef long events = 0
    cdef int k, nsteps, it
    cdef long e
    cdef double t, qx, qy, th, c, s
    cdef Py_ssize_t nobj = ostart.shape[0] - 1
    if nobj <= 0 or nv == 0:
        return 0
    w.wx = <double*>malloc(nv * sizeof(double))
    w.wy = <double*>malloc(nv * sizeof(double))
    w.box = <double*>malloc(4 * npart * sizeof(double))
    cdef double* c0x = <double*>malloc(nobj * sizeof(double))
    cdef double* c0y = <double*>malloc(nobj * sizeof(double))
    if w.wx == NULL or w.wy == NULL or w.box == NULL or c0x == NULL or c0y == NULL:
        free(w.wx)
        free(w.wy)
        free(w.box)
        free(c0x)
        free(c0y)
        raise MemoryError()
    w.lx = &lx[0]
    w.ly = &ly[0]
    w.pstart = &pstart[0]
    w.ostart = &ostart[0]
    w.pose = &pose[0]
    w.cxl = &cxl[0]
    w.cyl = &cyl[0]
    w.rho2 = &rho2[0]
    w.rmax = &rmax[0]
    w.fscale = &fscale[0]
    w.nobj = ostart.shape[0] - 1
    with nogil:
        for i in range(w.nobj):
            _refresh(&w, i)
            th = w.pose[3 * i + 2]
            c = cos(th)
            s = sin(th)
            c0x[i] = c * w.cxl[i] - s * w.cyl[i] + w.pose[3 * i]
            c0y[i] = s * w.cxl[i] + c * w.cyl[i] + w.pose[3 * i + 1]
        nsteps = <int>ceil(dist / substep - 1e-9)
        if nsteps < 1:
            nsteps = 1
        for k in range(1, nsteps + 1):
            t = k * substep
            if t > dist:
                t = dist
            qx = sx + dx * t
            qy = sy + dy * t
            for it in range(iters):
                e = _resolve(&w, True, qx, qy, radius, mu_rot, 1)
                if e == 0:
                    break
                events += e
                _limit_travel(&w, c0x, c0y, t)
        if events > 0:
            for it in range(settle_iters):
                e = _resolve(&w, False, 0.0, 0.0, radius, mu_rot, 1)
                if e == 0:
                    break
                events += e
                _limit_travel(&w, c0x, c0y, dist)
    free(w.wx)
    free(w.wy)
    free(w.box)
    free(c0x)
    free(c0y)
    return events
