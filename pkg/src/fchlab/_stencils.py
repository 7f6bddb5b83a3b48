"""Fourth-order finite-difference stencils used by the energy evaluator.

Periodic directions use centered differences via np.roll; bounded
directions (the z axis, the sphere polar angle) switch to one-sided
stencils of the same order on the two layers nearest each end.
"""

from __future__ import annotations

import numpy as np

__all__ = ["d1_periodic", "d2_periodic", "d1_bounded", "d2_bounded"]


def d1_periodic(f, axis, h):
    # grouped so that equal neighbors cancel exactly in floating point
    return (
        8.0 * (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis))
        - (np.roll(f, -2, axis=axis) - np.roll(f, 2, axis=axis))
    ) / (12.0 * h)


def d2_periodic(f, axis, h):
    return (
        16.0 * (np.roll(f, 1, axis=axis) + np.roll(f, -1, axis=axis))
        - (np.roll(f, 2, axis=axis) + np.roll(f, -2, axis=axis))
        - 30.0 * f
    ) / (12.0 * h * h)


_D1_EDGE = np.array(
    [
        [-25.0, 48.0, -36.0, 16.0, -3.0],
        [-3.0, -10.0, 18.0, -6.0, 1.0],
    ]
)

_D2_EDGE = np.array(
    [
        [45.0, -154.0, 214.0, -156.0, 61.0, -10.0],
        [10.0, -15.0, -4.0, 14.0, -6.0, 1.0],
    ]
)


def _apply_edges(out, f, h, table, power):
    # integer coefficient tables keep the stencil exact on constants
    k = table.shape[1]
    head = np.tensordot(table, f[..., :k], axes=([1], [-1]))
    tail = np.tensordot(table, f[..., -1:-k - 1:-1], axes=([1], [-1]))
    sign = -1.0 if power == 1 else 1.0
    scale = 12.0 * h**power
    out[..., 0] = head[0] / scale
    out[..., 1] = head[1] / scale
    out[..., -1] = sign * tail[0] / scale
    out[..., -2] = sign * tail[1] / scale
    return out


def _centered_last(f, h, power):
    out = np.empty_like(f)
    if power == 1:
        out[..., 2:-2] = (8.0 * (f[..., 3:-1] - f[..., 1:-3]) - (f[..., 4:] - f[..., :-4])) / (12.0 * h)
    else:
        out[..., 2:-2] = (
            16.0 * (f[..., 1:-3] + f[..., 3:-1]) - (f[..., :-4] + f[..., 4:]) - 30.0 * f[..., 2:-2]
        ) / (12.0 * h * h)
    return out


def d1_bounded(f, axis, h):
    f = np.moveaxis(f, axis, -1)
    if f.shape[-1] < 6:
        raise ValueError("bounded stencils need at least 6 samples")
    out = _centered_last(f, h, 1)
    out = _apply_edges(out, f, h, _D1_EDGE, 1)
    return np.moveaxis(out, -1, axis)


def d2_bounded(f, axis, h):
    f = np.moveaxis(f, axis, -1)
    if f.shape[-1] < 6:
        raise ValueError("bounded stencils need at least 6 samples")
    out = _centered_last(f, h, 2)
    out = _apply_edges(out, f, h, _D2_EDGE, 2)
    return np.moveaxis(out, -1, axis)
