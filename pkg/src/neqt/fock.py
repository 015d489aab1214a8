"""Exact many-body machinery for spinless fermions on a few modes.

Basis states are occupation bitmasks grouped into particle-number sectors
(mode i is bit i; a basis state is the ordered product of creation operators
with the lowest mode leftmost).  Everything that appears in the runs --
Hamiltonians, currents, Gibbs weights -- is gauge invariant, so all work is
done sector by sector with dense matrices.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


def sector_states(n_modes: int, n_particles: int) -> np.ndarray:
    """Sorted bitmasks of all n_particles-fermion states on n_modes modes."""
    states = [sum(1 << i for i in combo)
              for combo in combinations(range(n_modes), n_particles)]
    return np.array(sorted(states), dtype=np.uint64)


def occupancy(states: np.ndarray, n_modes: int) -> np.ndarray:
    """(dim, n_modes) array of occupation numbers."""
    bits = (states[:, None] >> np.arange(n_modes, dtype=np.uint64)[None, :]) & np.uint64(1)
    return bits.astype(float)


def one_body_operator(states: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Dense sector matrix of sum_ij h[i,j] a_i^dagger a_j.

    Jordan-Wigner sign: moving a_j to its mode crosses the occupied modes
    below j; re-inserting at i crosses those below i in the intermediate
    state.
    """
    dim = states.size
    n = h.shape[0]
    out = np.zeros((dim, dim), dtype=complex)
    one = np.uint64(1)

    occ = occupancy(states, n)
    out[np.arange(dim), np.arange(dim)] = occ @ np.real(np.diag(h))

    for i in range(n):
        for j in range(n):
            if i == j or h[i, j] == 0.0:
                continue
            bi, bj = one << np.uint64(i), one << np.uint64(j)
            mask = ((states & bj) != 0) & ((states & bi) == 0)
            src = states[mask]
            if src.size == 0:
                continue
            mid = src ^ bj
            dst = mid | bi
            par_j = np.bitwise_count(src & (bj - one))
            par_i = np.bitwise_count(mid & (bi - one))
            sign = np.where((par_i + par_j) % 2 == 0, 1.0, -1.0)
            rows = np.searchsorted(states, dst)
            cols = np.flatnonzero(mask)
            out[rows, cols] += h[i, j] * sign
    return out


def pair_interaction_diag(states: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Diagonal of (1/2) sum_xy w(x,y) n_x n_y in the occupation basis."""
    occ = occupancy(states, w.shape[0])
    return 0.5 * np.einsum("si,ij,sj->s", occ, w, occ)


def weighted_number_diag(states: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Diagonal of sum_x weights[x] n_x."""
    return occupancy(states, weights.size) @ weights
