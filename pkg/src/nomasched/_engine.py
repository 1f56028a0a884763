"""Compiled hot loops behind run_adaptation.

Threshold updates feed back into the next slot's decision, so these loops
cannot be vectorised across slots; numba keeps multi-million-slot runs fast.
No fastmath: the constant-step rule compares thresholds for bitwise equality
with their running minimum, which fastmath reassociation would break.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def rm_equality_chunk(
    decide_values, score_values, members, w, lam, counts, t_start, harmonic, s, dec_out
):
    """Harmonic (or constant) stochastic-approximation steps over one chunk.

    Mutates lam and counts in place; t_start is the 1-based index of the
    chunk's first slot. Returns the summed scored values.
    """
    rows, m = decide_values.shape
    n = lam.shape[0]
    util = 0.0
    for r in range(rows):
        best = -np.inf
        arg = 0
        for j in range(m):
            sj = decide_values[r, j]
            for i in range(n):
                if members[j, i]:
                    sj += lam[i]
            if sj > best:
                best = sj
                arg = j
        dec_out[r] = arg
        util += score_values[r, arg]
        t = t_start + r
        step = 1.0 / t if harmonic else s
        for i in range(n):
            if members[arg, i]:
                counts[i] += 1
                lam[i] -= step * (1.0 - w[i])
            else:
                lam[i] += step * w[i]
    return util


@njit(cache=True)
def algorithm2_chunk(
    decide_values, score_values, members, lower, lam, counts, t_start, s, dec_out
):
    """Constant-step heuristic for lower demands over one chunk.

    Per slot: decide, then shrink every threshold toward the current minimum
    scaled by its scheduling surplus, then lift the minimum-threshold users
    that are short of their demand (and everyone at a negative minimum).
    """
    rows, m = decide_values.shape
    n = lam.shape[0]
    util = 0.0
    old = np.empty(n, dtype=np.float64)
    for r in range(rows):
        best = -np.inf
        arg = 0
        for j in range(m):
            sj = decide_values[r, j]
            for i in range(n):
                if members[j, i]:
                    sj += lam[i]
            if sj > best:
                best = sj
                arg = j
        dec_out[r] = arg
        util += score_values[r, arg]
        t = t_start + r
        lam_min = lam[0]
        for i in range(1, n):
            if lam[i] < lam_min:
                lam_min = lam[i]
        for i in range(n):
            old[i] = lam[i]
        for i in range(n):
            ind = 0.0
            if members[arg, i]:
                ind = 1.0
                counts[i] += 1
            lam[i] = old[i] - s * (old[i] - lam_min) * (ind - lower[i])
        for i in range(n):
            if old[i] == lam_min:
                share = counts[i] / t
                if share < lower[i]:
                    lam[i] += s * (lower[i] - share)
                if lam_min < 0.0:
                    lam[i] += s
    return util
