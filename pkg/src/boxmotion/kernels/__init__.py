"""Backend selection for the hot pixel kernels.

BOXMOTION_BACKEND=numpy forces the pure-numpy fallback, =numba requires the
compiled kernels, unset/auto uses numba when importable. Both implementations
stay importable directly (``kernels.numpy_impl`` / ``kernels.numba_impl``)
for equivalence tests and benchmarks.
"""

import os

from boxmotion.kernels import numpy_impl

_choice = os.environ.get("BOXMOTION_BACKEND", "auto").lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(f"BOXMOTION_BACKEND must be auto, numba or numpy, got {_choice!r}")

if _choice == "numpy":
    _impl = numpy_impl
    BACKEND = "numpy"
else:
    try:
        from boxmotion.kernels import numba_impl as _impl

        BACKEND = "numba"
    except ImportError:
        if _choice == "numba":
            raise
        _impl = numpy_impl
        BACKEND = "numpy"

sep_convolve = _impl.sep_convolve
warp_bilinear = _impl.warp_bilinear
median2d = _impl.median2d
lk_level = _impl.lk_level
enumerate_pairs = _impl.enumerate_pairs
affinity_loss_accum = _impl.affinity_loss_accum
touch_counts = _impl.touch_counts


def warmup():
    """Trigger JIT compilation of every kernel on tiny inputs (no-op on numpy)."""
    import numpy as np

    img = np.zeros((8, 8), dtype=np.float64)
    k = np.array([0.25, 0.5, 0.25])
    sep_convolve(img, k, k)
    warp_bilinear(img, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0)
    median2d(img, 1)
    pts = np.array([[4.0, 4.0]])
    lk_level(img, img, img, img, pts, np.zeros((1, 2)), 2, 1, 0.01, 1e-4)
    color = np.zeros((8, 8, 3), dtype=np.float64)
    inbox = np.ones((8, 8), dtype=np.bool_)
    offs = np.array([[0, 1], [1, 0]], dtype=np.int64)
    ay, ax, by, bx, psi, phi = enumerate_pairs(color, img, inbox, offs, 1, 0.5)
    affinity_loss_accum(np.full((8, 8), 0.5), ay, ax, by, bx, 1e-6)
    touch_counts(ay, ax, by, bx, np.ones(ay.shape[0], dtype=np.bool_), 8, 8)
