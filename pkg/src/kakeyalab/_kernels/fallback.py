"""Pure-numpy rasterization kernel.

Same contract as the compiled kernel in _rastercore.pyx: given profile
values at every slab center, emit the flat indices of all grid cells whose
center lies within Euclidean distance delta of the curve, slab by slab.
Used when the extension is unavailable or KAKEYALAB_NO_EXT is set.
"""
import numpy as np

BACKEND = "python"

# Cells at distance exactly delta belong to the tube; the relative slack
# keeps that decision stable for non-dyadic profile values.
MEMBERSHIP_SLACK = 1.0 + 1e-12


def tube_cells(prof: np.ndarray, delta: float, h: float, M: int) -> np.ndarray:
    """Flat cell indices hit by one curved tube.

    prof has shape (M, d-1): the profile evaluated at slab centers
    x_d = -1 + (i + 0.5) h, i = 0..M-1.  A cell (l_1..l_{d-1}, i) is hit
    iff its center x' = -1 + (l + 0.5) h satisfies |x' - prof[i]| <= delta.
    Flat index: ((l_1 * M + l_2) * ... ) * M + i, last coordinate fastest.
    """
    prof = np.ascontiguousarray(prof, dtype=np.float64)
    n_slab, n_hor = prof.shape
    if n_slab != M:
        raise ValueError("profile must be sampled at every slab center")
    w = int(np.floor(2.0 * delta / h)) + 2  # window width per axis, with slack
    lo = np.ceil((prof - delta + 1.0) / h - 0.5).astype(np.int64)  # (M, d-1)
    offs = np.arange(w, dtype=np.int64)

    cands = []
    for ax in range(n_hor):
        sh = [1] * (1 + n_hor)
        sh[1 + ax] = w
        cands.append(lo[:, ax].reshape([M] + [1] * n_hor) + offs.reshape(sh))

    dist2 = np.zeros([M] + [w] * n_hor)
    valid = np.ones([M] + [w] * n_hor, dtype=bool)
    for ax in range(n_hor):
        centers = -1.0 + (cands[ax] + 0.5) * h
        diff = centers - prof[:, ax].reshape([M] + [1] * n_hor)
        dist2 = dist2 + diff * diff
        valid &= (cands[ax] >= 0) & (cands[ax] < M)
    valid &= dist2 <= delta * delta * MEMBERSHIP_SLACK

    flat = np.zeros([M] + [w] * n_hor, dtype=np.int64)
    for ax in range(n_hor):
        flat = flat * M + cands[ax]
    flat = flat * M + np.arange(M, dtype=np.int64).reshape([M] + [1] * n_hor)
    return flat[valid]
