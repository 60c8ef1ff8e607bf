"""Jitted inner loops of the discrete Monge-Ampere operator and its Gauss-Seidel solver.

Values live on the flattened bounding-box lattice plus one trailing ghost
slot; exterior nodes and the ghost hold 0 throughout.  A directional second
difference at node ``i`` is ``c * (alpha - U[i])`` where ``alpha`` is the
arm-weighted mean of the two neighbor values.  Full-stencil nodes use the
constant lattice offsets; cut nodes (``slot[k] >= 0``) read their own
neighbor indices, weights and coefficients.

The operator, ``min over pairs of prod over the pair of max(c (alpha - U[i]), 0)``,
is decreasing in ``U[i]``, so the per-node equation has a closed-form root.
"""
import numba as nb
import numpy as np

_opts = {"cache": True, "nogil": True}


@nb.njit(**_opts)
def _alpha(U, i, s, d, offsets, cnbp, cnbm, cwp, cwm):
    if s < 0:
        o = offsets[d]
        return 0.5 * (U[i + o] + U[i - o])
    return cwp[s, d] * U[cnbp[s, d]] + cwm[s, d] * U[cnbm[s, d]]


@nb.njit(**_opts)
def _coef(s, d, cint, cc):
    return cint[d] if s < 0 else cc[s, d]


@nb.njit(**_opts)
def node_operator(U, i, s, offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs):
    best = np.inf
    for p in range(pairs.shape[0]):
        prod = 1.0
        for j in range(pairs.shape[1]):
            d = pairs[p, j]
            a = _alpha(U, i, s, d, offsets, cnbp, cnbm, cwp, cwm)
            prod *= max(_coef(s, d, cint, cc) * (a - U[i]), 0.0)
        if prod < best:
            best = prod
    return best


@nb.njit(**_opts)
def operator(U, flat, slot, offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs):
    out = np.empty(flat.shape[0])
    for k in range(flat.shape[0]):
        out[k] = node_operator(U, flat[k], slot[k], offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs)
    return out


@nb.njit(**_opts)
def node_root(U, i, s, fk, offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs):
    """Center value at which the node equation holds with neighbors frozen.

    For f = 0 this is the limit f -> 0+, the largest value keeping every
    directional difference nonnegative.
    """
    best = np.inf
    if pairs.shape[1] == 1:
        for p in range(pairs.shape[0]):
            d = pairs[p, 0]
            x = _alpha(U, i, s, d, offsets, cnbp, cnbm, cwp, cwm) - fk / _coef(s, d, cint, cc)
            if x < best:
                best = x
        return best
    for p in range(pairs.shape[0]):
        d1 = pairs[p, 0]
        d2 = pairs[p, 1]
        a1 = _alpha(U, i, s, d1, offsets, cnbp, cnbm, cwp, cwm)
        a2 = _alpha(U, i, s, d2, offsets, cnbp, cnbm, cwp, cwm)
        # (a1 - x)(a2 - x) = f / (c1 c2) with x below both roots
        half = 0.5 * (a1 - a2)
        g = fk / (_coef(s, d1, cint, cc) * _coef(s, d2, cint, cc))
        x = 0.5 * (a1 + a2) - np.sqrt(g + half * half)
        if x < best:
            best = x
    return best


@nb.njit(**_opts)
def residual(U, f_root, flat, slot, offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs):
    """Sup over nodes of |MA_h(u)^(1/n) - f^(1/n)|; ``f_root`` holds f^(1/n)."""
    r = 0.0
    one_d = pairs.shape[1] == 1
    for k in range(flat.shape[0]):
        v = node_operator(U, flat[k], slot[k], offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs)
        root = v if one_d else np.sqrt(v)
        r = max(r, abs(root - f_root[k]))
    return r


@nb.njit(**_opts)
def sweep(U, f, order, omega, flat, slot, offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs):
    for t in range(order.shape[0]):
        k = order[t]
        i = flat[k]
        x = node_root(U, i, slot[k], f[k], offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs)
        U[i] += omega * (x - U[i])


@nb.njit(parallel=True, cache=True)
def colored_sweep(U, f, members, color_ptr, omega, flat, slot, offsets, cint,
                  cnbp, cnbm, cwp, cwm, cc, pairs):
    """One pass over color classes; nodes of one class share no stencil arm."""
    for ci in range(color_ptr.shape[0] - 1):
        lo = color_ptr[ci]
        hi = color_ptr[ci + 1]
        for t in nb.prange(hi - lo):
            k = members[lo + t]
            i = flat[k]
            x = node_root(U, i, slot[k], f[k], offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs)
            U[i] += omega * (x - U[i])


@nb.njit(**_opts)
def solve_serial(U, f, f_root, omega, tol, max_sweeps, check_every,
                 flat, slot, offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs):
    """Alternate forward and reverse sweeps until the residual drops below ``tol``.

    Returns (sweeps used, final residual).
    """
    m = flat.shape[0]
    fwd = np.arange(m)
    bwd = fwd[::-1].copy()
    res = residual(U, f_root, flat, slot, offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs)
    sweeps = 0
    while res > tol and sweeps < max_sweeps:
        for _ in range(check_every):
            order = fwd if sweeps % 2 == 0 else bwd
            sweep(U, f, order, omega, flat, slot, offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs)
            sweeps += 1
            if sweeps >= max_sweeps:
                break
        res = residual(U, f_root, flat, slot, offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs)
    return sweeps, res


@nb.njit(**_opts)
def solve_colored(U, f, f_root, omega, tol, max_sweeps, check_every, members, color_ptr,
                  flat, slot, offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs):
    res = residual(U, f_root, flat, slot, offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs)
    sweeps = 0
    while res > tol and sweeps < max_sweeps:
        for _ in range(check_every):
            colored_sweep(U, f, members, color_ptr, omega, flat, slot, offsets, cint,
                          cnbp, cnbm, cwp, cwm, cc, pairs)
            sweeps += 1
            if sweeps >= max_sweeps:
                break
        res = residual(U, f_root, flat, slot, offsets, cint, cnbp, cnbm, cwp, cwm, cc, pairs)
    return sweeps, res


@nb.njit(**_opts)
def directional_differences(U, flat, slot, offsets, cint, cnbp, cnbm, cwp, cwm, cc):
    """(m, D) array of second differences along every stencil vector."""
    m = flat.shape[0]
    D = offsets.shape[0]
    out = np.empty((m, D))
    for k in range(m):
        i = flat[k]
        s = slot[k]
        for d in range(D):
            a = _alpha(U, i, s, d, offsets, cnbp, cnbm, cwp, cwm)
            out[k, d] = _coef(s, d, cint, cc) * (a - U[i])
    return out
