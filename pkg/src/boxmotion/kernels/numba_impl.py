"""numba-compiled twins of the kernels in ``numpy_impl``.

Loops are written scalar-per-pixel; no fastmath so both backends stay
numerically interchangeable. Compiled artifacts are cached on disk.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _correlate1d_rows(img, kern):
    h, w = img.shape
    r = kern.shape[0] // 2
    out = np.empty((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for k in range(kern.shape[0]):
                xi = x + k - r
                if xi < 0:
                    xi = 0
                elif xi > w - 1:
                    xi = w - 1
                acc += img[y, xi] * kern[k]
            out[y, x] = acc
    return out


@njit(cache=True)
def _correlate1d_cols(img, kern):
    h, w = img.shape
    r = kern.shape[0] // 2
    out = np.empty((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for k in range(kern.shape[0]):
                yi = y + k - r
                if yi < 0:
                    yi = 0
                elif yi > h - 1:
                    yi = h - 1
                acc += img[yi, x] * kern[k]
            out[y, x] = acc
    return out


@njit(cache=True)
def sep_convolve(img, ky, kx):
    return _correlate1d_cols(_correlate1d_rows(img, kx), ky)


@njit(cache=True)
def warp_bilinear(img, ia, ib, itx, ic, id_, ity):
    h, w = img.shape
    out = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            sx = ia * x + ib * y + itx
            sy = ic * x + id_ * y + ity
            x0 = int(np.floor(sx))
            y0 = int(np.floor(sy))
            fx = sx - x0
            fy = sy - y0
            acc = 0.0
            for dy in range(2):
                yi = y0 + dy
                if yi < 0 or yi > h - 1:
                    continue
                wy = fy if dy == 1 else 1.0 - fy
                for dx in range(2):
                    xi = x0 + dx
                    if xi < 0 or xi > w - 1:
                        continue
                    wx = fx if dx == 1 else 1.0 - fx
                    acc += wx * wy * img[yi, xi]
            out[y, x] = acc
    return out


@njit(cache=True)
def median2d(img, radius):
    h, w = img.shape
    k = 2 * radius + 1
    out = np.empty((h, w), dtype=np.float64)
    buf = np.empty(k * k, dtype=np.float64)
    for y in range(h):
        for x in range(w):
            i = 0
            for dy in range(-radius, radius + 1):
                yi = y + dy
                if yi < 0:
                    yi = 0
                elif yi > h - 1:
                    yi = h - 1
                for dx in range(-radius, radius + 1):
                    xi = x + dx
                    if xi < 0:
                        xi = 0
                    elif xi > w - 1:
                        xi = w - 1
                    buf[i] = img[yi, xi]
                    i += 1
            s = np.sort(buf)
            out[y, x] = s[(k * k) // 2]
    return out


@njit(cache=True, inline="always")
def _bilinear(img, x, y, h, w):
    x0 = int(np.floor(x))
    y0 = int(np.floor(y))
    fx = x - x0
    fy = y - y0
    x1 = x0 + 1
    y1 = y0 + 1
    if x1 > w - 1:
        x1 = w - 1
    if y1 > h - 1:
        y1 = h - 1
    return (
        img[y0, x0] * (1.0 - fx) * (1.0 - fy)
        + img[y0, x1] * fx * (1.0 - fy)
        + img[y1, x0] * (1.0 - fx) * fy
        + img[y1, x1] * fx * fy
    )


@njit(cache=True)
def lk_level(prev, gx, gy, nxt, pts, guess, radius, max_iters, eps, min_eig_floor):
    h, w = prev.shape
    n = pts.shape[0]
    side = 2 * radius + 1
    n_win = side * side
    flow = guess.copy()
    status = np.zeros(n, dtype=np.uint8)
    lim = float(max(w, h))

    tmpl = np.empty((side, side), dtype=np.float64)
    wgx = np.empty((side, side), dtype=np.float64)
    wgy = np.empty((side, side), dtype=np.float64)

    for i in range(n):
        px = pts[i, 0]
        py = pts[i, 1]
        if not (px - radius >= 0 and px + radius <= w - 1 and py - radius >= 0 and py + radius <= h - 1):
            continue

        gxx = 0.0
        gxy = 0.0
        gyy = 0.0
        for a in range(side):
            for b in range(side):
                sx = px + (b - radius)
                sy = py + (a - radius)
                tmpl[a, b] = _bilinear(prev, sx, sy, h, w)
                vx_ = _bilinear(gx, sx, sy, h, w)
                vy_ = _bilinear(gy, sx, sy, h, w)
                wgx[a, b] = vx_
                wgy[a, b] = vy_
                gxx += vx_ * vx_
                gxy += vx_ * vy_
                gyy += vy_ * vy_

        tr = gxx + gyy
        min_eig = 0.5 * (tr - np.sqrt((gxx - gyy) ** 2 + 4.0 * gxy * gxy))
        if min_eig < min_eig_floor * n_win:
            continue
        det = gxx * gyy - gxy * gxy
        if det <= 0.0:
            continue

        vx = guess[i, 0]
        vy = guess[i, 1]
        ok = True
        for _ in range(max_iters):
            qx = px + vx
            qy = py + vy
            if not (qx - radius >= 0 and qx + radius <= w - 1 and qy - radius >= 0 and qy + radius <= h - 1):
                ok = False
                break
            bx = 0.0
            by = 0.0
            for a in range(side):
                for b in range(side):
                    diff = tmpl[a, b] - _bilinear(nxt, qx + (b - radius), qy + (a - radius), h, w)
                    bx += diff * wgx[a, b]
                    by += diff * wgy[a, b]
            dx = (gyy * bx - gxy * by) / det
            dy = (gxx * by - gxy * bx) / det
            vx += dx
            vy += dy
            if dx * dx + dy * dy < eps * eps:
                break
        if not ok or not (np.isfinite(vx) and np.isfinite(vy)):
            continue
        if vx * vx + vy * vy > lim * lim:
            continue
        flow[i, 0] = vx
        flow[i, 1] = vy
        status[i] = 1
    return flow, status


@njit(cache=True)
def enumerate_pairs(color, motion, inbox, offsets, stride, eta):
    h, w = motion.shape
    n_off = offsets.shape[0]

    count = 0
    for py in range(0, h, stride):
        for px in range(0, w, stride):
            for k in range(n_off):
                qy = py + offsets[k, 0]
                qx = px + offsets[k, 1]
                if qy < 0 or qy >= h or qx < 0 or qx >= w:
                    continue
                if inbox[py, px] or inbox[qy, qx]:
                    count += 1

    ay = np.empty(count, dtype=np.int64)
    ax = np.empty(count, dtype=np.int64)
    by = np.empty(count, dtype=np.int64)
    bx = np.empty(count, dtype=np.int64)
    psi = np.empty(count, dtype=np.float64)
    phi = np.empty(count, dtype=np.float64)

    i = 0
    for py in range(0, h, stride):
        for px in range(0, w, stride):
            for k in range(n_off):
                qy = py + offsets[k, 0]
                qx = px + offsets[k, 1]
                if qy < 0 or qy >= h or qx < 0 or qx >= w:
                    continue
                if not (inbox[py, px] or inbox[qy, qx]):
                    continue
                ay[i] = py
                ax[i] = px
                by[i] = qy
                bx[i] = qx
                psi[i] = np.exp(-abs(motion[py, px] - motion[qy, qx]) * eta)
                d0 = color[py, px, 0] - color[qy, qx, 0]
                d1 = color[py, px, 1] - color[qy, qx, 1]
                d2 = color[py, px, 2] - color[qy, qx, 2]
                phi[i] = np.exp(-np.sqrt(d0 * d0 + d1 * d1 + d2 * d2) * eta)
                i += 1
    return ay, ax, by, bx, psi, phi


@njit(cache=True)
def affinity_loss_accum(rho, ay, ax, by, bx, eps):
    value = 0.0
    grad = np.zeros_like(rho)
    for i in range(ay.shape[0]):
        ra = rho[ay[i], ax[i]]
        rb = rho[by[i], bx[i]]
        rab = ra * rb + (1.0 - ra) * (1.0 - rb)
        c = rab if rab > eps else eps
        value += -np.log(c)
        if rab > eps:
            grad[ay[i], ax[i]] += -(2.0 * rb - 1.0) / rab
            grad[by[i], bx[i]] += -(2.0 * ra - 1.0) / rab
    return value, grad


@njit(cache=True)
def touch_counts(ay, ax, by, bx, positive, h, w):
    pos = np.zeros((h, w), dtype=np.int64)
    tot = np.zeros((h, w), dtype=np.int64)
    for i in range(ay.shape[0]):
        tot[ay[i], ax[i]] += 1
        tot[by[i], bx[i]] += 1
        if positive[i]:
            pos[ay[i], ax[i]] += 1
            pos[by[i], bx[i]] += 1
    return pos, tot
