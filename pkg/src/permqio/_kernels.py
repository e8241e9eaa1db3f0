"""Compiled inner loops.

Both kernels take a route-cost model in load-dependent form: a vehicle weight,
per-node parcel weights (0 at the depot), a coefficient matrix and an additive
matrix. A TSP is the special case with unit vehicle weight, zero parcels and
zero additive term.
"""
import numba
import numpy as np


@numba.njit(cache=True)
def enumerate_min(n, full_load, node_weights, coeff, resistance, rtol):
    """Lexicographic scan of all routes; returns (first minimising route, count)."""
    perm = np.arange(1, n + 1)
    best_perm = perm.copy()
    best = np.inf
    count = 0
    while True:
        load = full_load
        prev = 0
        cost = 0.0
        for i in range(n):
            s = perm[i]
            cost += load * coeff[prev, s] + resistance[prev, s]
            load -= node_weights[s]
            prev = s
        cost += load * coeff[prev, 0] + resistance[prev, 0]
        count += 1
        if count == 1 or cost < best - rtol * abs(best):
            best = cost
            best_perm[:] = perm
        i = n - 2
        while i >= 0 and perm[i] > perm[i + 1]:
            i -= 1
        if i < 0:
            break
        j = n - 1
        while perm[j] < perm[i]:
            j -= 1
        perm[i], perm[j] = perm[j], perm[i]
        lo, hi = i + 1, n - 1
        while lo < hi:
            perm[lo], perm[hi] = perm[hi], perm[lo]
            lo += 1
            hi -= 1
    return best_perm, count


@numba.njit(cache=True)
def swap_cost(route, k, energy, full_load, w, c, rho):
    """Cost after swapping positions k, k+1; same arithmetic order as the numpy path."""
    n = route.shape[0]
    a = route[k]
    b = route[k + 1]
    prev = route[k - 1] if k > 0 else 0
    nxt = route[k + 2] if k + 2 < n else 0
    delivered = 0.0
    for j in range(k + 2):
        delivered += w[route[j]]
    tail = full_load - delivered
    wa = w[a]
    wb = w[b]
    head = tail + wa + wb
    old = (head * c[prev, a] + rho[prev, a]
           + (tail + wb) * c[a, b] + rho[a, b]
           + tail * c[b, nxt] + rho[b, nxt])
    new = (head * c[prev, b] + rho[prev, b]
           + (tail + wa) * c[b, a] + rho[b, a]
           + tail * c[a, nxt] + rho[a, nxt])
    return energy + (new - old)


@numba.njit(cache=True)
def metropolis_sweep(states, energies, temps, ks, us, full_load, w, c, rho, proposals, proposal_e):
    """Run ``ks.shape[0]`` proposal rounds over all rows, in place.

    Every proposed route and its cost are written to ``proposals[t, r]`` and
    ``proposal_e[t, r]``. Returns the number of accepted moves.
    """
    count = states.shape[0]
    accepted = 0
    for t in range(ks.shape[0]):
        for r in range(count):
            k = ks[t, r]
            e_new = swap_cost(states[r], k, energies[r], full_load, w, c, rho)
            proposals[t, r, :] = states[r]
            proposals[t, r, k] = states[r, k + 1]
            proposals[t, r, k + 1] = states[r, k]
            proposal_e[t, r] = e_new
            if us[t, r] < np.exp(-(e_new - energies[r]) / temps[r]):
                tmp = states[r, k]
                states[r, k] = states[r, k + 1]
                states[r, k + 1] = tmp
                energies[r] = e_new
                accepted += 1
    return accepted
