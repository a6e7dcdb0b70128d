"""Compiled Numerov march shared by every radial integration."""

import math

import numba
import numpy as np

RESCALE_AT = 1e150


@numba.njit(cache=True, nogil=True)
def numerov_march(q, dv, energies, h, i0, start0, start1, out):
    """Integrate ``f'' = -(E + q(r)) f`` outward on the grid ``r_i = i*h``.

    ``q`` holds ``-V(r) - l(l+1)/r^2`` per grid point (``q[0]`` unused), with
    ``V`` averaged at a jump. ``dv[i]`` is the jump ``V(r_i+) - V(r_i-)`` of
    a discontinuity sitting on grid point ``i`` (0 elsewhere). A stencil
    centred next to the jump sees the one-sided limit of ``V`` there; the
    stencil centred on it uses the average plus a correction for the jump
    in ``f'''`` (``(h^3/12) dv f'``, with ``f'`` by central difference).
    This keeps the global error at the smooth-case order.

    Away from jumps the recurrence runs in summed form on ``y = w f``,
    carrying the first difference ``y_{i+1} - y_i``; this keeps rounding
    error from growing like the square of the number of steps.

    Row ``m`` of ``out`` receives the solution for ``energies[m]``, zero
    before index ``i0`` and seeded with ``start0[m], start1[m]`` at
    ``i0, i0+1``. Whenever ``|f|`` exceeds ``RESCALE_AT`` the row computed
    so far is divided by it; the returned array holds the accumulated
    natural-log scale per row.
    """
    n = q.shape[0]
    nm = energies.shape[0]
    c = h * h / 12.0
    h2 = h * h
    log_scale = np.zeros(nm)
    for m in range(nm):
        e = energies[m]
        for i in range(i0):
            out[m, i] = 0.0
        out[m, i0] = start0[m]
        out[m, i0 + 1] = start1[m]
        reseed = True
        y = 0.0
        d = 0.0
        for i in range(i0 + 1, n - 1):
            near_jump = dv[i - 1] != 0.0 or dv[i] != 0.0 or dv[i + 1] != 0.0
            if near_jump:
                w_prev = 1.0 + c * (e + q[i - 1] - 0.5 * dv[i - 1])
                w_next = 1.0 + c * (e + q[i + 1] + 0.5 * dv[i + 1])
                w_cur = 1.0 + c * (e + q[i])
                fix = 0.5 * c * dv[i]
                f_next = ((12.0 - 10.0 * w_cur) * out[m, i] - (w_prev + fix) * out[m, i - 1]) / (w_next - fix)
                reseed = True
            else:
                if reseed:
                    y_prev = (1.0 + c * (e + q[i - 1])) * out[m, i - 1]
                    y = (1.0 + c * (e + q[i])) * out[m, i]
                    d = y - y_prev
                    reseed = False
                d -= h2 * (e + q[i]) * out[m, i]
                y += d
                f_next = y / (1.0 + c * (e + q[i + 1]))
            out[m, i + 1] = f_next
            if abs(f_next) > RESCALE_AT:
                inv = 1.0 / RESCALE_AT
                for j in range(i0, i + 2):
                    out[m, j] *= inv
                y *= inv
                d *= inv
                log_scale[m] += math.log(RESCALE_AT)
    return log_scale
