"""Pure-numpy versions of the hot pixel kernels.

Every function here has a numba twin in ``numba_impl`` with the same
signature and the same numeric semantics. Which module backs the package
is decided in ``kernels.__init__`` from the BOXMOTION_BACKEND env var.
"""

import numpy as np


def _correlate1d(img, kern, axis):
    # edge-clamped 1-D correlation along the given axis
    r = len(kern) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    padded = np.pad(img, pad, mode="edge")
    win = np.lib.stride_tricks.sliding_window_view(padded, len(kern), axis=axis)
    return win @ kern


def sep_convolve(img, ky, kx):
    """Separable correlation with edge-clamped borders: rows by kx, columns by ky."""
    return _correlate1d(_correlate1d(img, kx, axis=1), ky, axis=0)


def warp_bilinear(img, ia, ib, itx, ic, id_, ity):
    """Inverse-mapping affine warp with bilinear sampling, zero outside the source.

    (ia..ity) are the coefficients of the INVERSE transform: each output pixel
    (x, y) is filled from source position (ia*x + ib*y + itx, ic*x + id_*y + ity).
    """
    h, w = img.shape
    ys, xs = np.mgrid[0:h, 0:w]
    sx = ia * xs + ib * ys + itx
    sy = ic * xs + id_ * ys + ity

    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0
    out = np.zeros((h, w), dtype=np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            xi = x0 + dx
            yi = y0 + dy
            wgt = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            vals = img[np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)]
            out += np.where(valid, wgt * vals, 0.0)
    return out


def median2d(img, radius):
    """Median over the (2r+1)^2 window, edge-clamped borders."""
    k = 2 * radius + 1
    padded = np.pad(img, radius, mode="edge")
    win = np.lib.stride_tricks.sliding_window_view(padded, (k, k))
    return np.median(win.reshape(img.shape[0], img.shape[1], k * k), axis=2)


def _sample_window(img, cx, cy, radius):
    # bilinear samples on the (2r+1)^2 grid centred at (cx, cy); caller checks bounds
    h, w = img.shape
    offs = np.arange(-radius, radius + 1, dtype=np.float64)
    xs = cx + offs[None, :]
    ys = cy + offs[:, None]
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    return (
        img[y0, x0] * (1 - fx) * (1 - fy)
        + img[y0, x1] * fx * (1 - fy)
        + img[y1, x0] * (1 - fx) * fy
        + img[y1, x1] * fx * fy
    )


def lk_level(prev, gx, gy, nxt, pts, guess, radius, max_iters, eps, min_eig_floor):
    """One pyramid level of iterative Lucas-Kanade for a batch of points.

    pts: (N,2) point positions [x, y] at this level's scale.
    guess: (N,2) displacement carried down from the coarser level.
    Returns (flow (N,2) total displacement at this level, status (N,) uint8).
    """
    h, w = prev.shape
    n = pts.shape[0]
    n_win = (2 * radius + 1) ** 2
    flow = guess.copy()
    status = np.zeros(n, dtype=np.uint8)
    lim = float(max(w, h))

    for i in range(n):
        px, py = pts[i, 0], pts[i, 1]
        if not (px - radius >= 0 and px + radius <= w - 1 and py - radius >= 0 and py + radius <= h - 1):
            continue
        tmpl = _sample_window(prev, px, py, radius)
        wgx = _sample_window(gx, px, py, radius)
        wgy = _sample_window(gy, px, py, radius)
        gxx = float(np.sum(wgx * wgx))
        gxy = float(np.sum(wgx * wgy))
        gyy = float(np.sum(wgy * wgy))
        tr = gxx + gyy
        min_eig = 0.5 * (tr - np.sqrt((gxx - gyy) ** 2 + 4.0 * gxy * gxy))
        if min_eig < min_eig_floor * n_win:
            continue
        det = gxx * gyy - gxy * gxy
        if det <= 0.0:
            continue

        vx, vy = guess[i, 0], guess[i, 1]
        ok = True
        for _ in range(max_iters):
            qx, qy = px + vx, py + vy
            if not (qx - radius >= 0 and qx + radius <= w - 1 and qy - radius >= 0 and qy + radius <= h - 1):
                ok = False
                break
            diff = tmpl - _sample_window(nxt, qx, qy, radius)
            bx = float(np.sum(diff * wgx))
            by = float(np.sum(diff * wgy))
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


def enumerate_pairs(color, motion, inbox, offsets, stride, eta):
    """Emit local pixel pairs (p, p+offset) for p on the stride grid.

    Keeps a pair when either endpoint lies inside a box (per ``inbox``).
    Returns (ay, ax, by, bx, psi, phi) with a = the grid point p. Ordering
    and endpoint canonicalization are handled by the caller.
    """
    h, w = motion.shape
    py = np.arange(0, h, stride, dtype=np.int64)
    px = np.arange(0, w, stride, dtype=np.int64)
    gy, gx = np.meshgrid(py, px, indexing="ij")
    gy = gy.ravel()
    gx = gx.ravel()

    ays, axs, bys, bxs = [], [], [], []
    for k in range(offsets.shape[0]):
        dy, dx = int(offsets[k, 0]), int(offsets[k, 1])
        qy = gy + dy
        qx = gx + dx
        ok = (qy >= 0) & (qy < h) & (qx >= 0) & (qx < w)
        sy, sx_, ty, tx = gy[ok], gx[ok], qy[ok], qx[ok]
        keep = inbox[sy, sx_] | inbox[ty, tx]
        ays.append(sy[keep])
        axs.append(sx_[keep])
        bys.append(ty[keep])
        bxs.append(tx[keep])

    ay = np.concatenate(ays) if ays else np.empty(0, dtype=np.int64)
    ax = np.concatenate(axs) if axs else np.empty(0, dtype=np.int64)
    by = np.concatenate(bys) if bys else np.empty(0, dtype=np.int64)
    bx = np.concatenate(bxs) if bxs else np.empty(0, dtype=np.int64)

    psi = np.exp(-np.abs(motion[ay, ax] - motion[by, bx]) * eta)
    cd = color[ay, ax, :] - color[by, bx, :]
    phi = np.exp(-np.sqrt(np.sum(cd * cd, axis=1)) * eta)
    return ay, ax, by, bx, psi, phi


def affinity_loss_accum(rho, ay, ax, by, bx, eps):
    """Loss value and gradient accumulated over positive pairs.

    Pair term: -log(max(rho_ab, eps)) with rho_ab = ra*rb + (1-ra)*(1-rb).
    The gradient is zero wherever the clamp is active.
    """
    ra = rho[ay, ax]
    rb = rho[by, bx]
    rab = ra * rb + (1.0 - ra) * (1.0 - rb)
    value = float(np.sum(-np.log(np.maximum(rab, eps))))
    coef = np.where(rab > eps, 1.0 / rab, 0.0)
    grad = np.zeros_like(rho)
    np.add.at(grad, (ay, ax), -(2.0 * rb - 1.0) * coef)
    np.add.at(grad, (by, bx), -(2.0 * ra - 1.0) * coef)
    return value, grad


def touch_counts(ay, ax, by, bx, positive, h, w):
    """Per-pixel counts of (positive, total) pairs touching each pixel."""
    pos = np.zeros((h, w), dtype=np.int64)
    tot = np.zeros((h, w), dtype=np.int64)
    ones = np.ones(ay.shape[0], dtype=np.int64)
    np.add.at(tot, (ay, ax), ones)
    np.add.at(tot, (by, bx), ones)
    p = positive.astype(np.int64)
    np.add.at(pos, (ay, ax), p)
    np.add.at(pos, (by, bx), p)
    return pos, tot
