"""Numba kernels over index space: arrays are [i, j] with i along e1 and j along e2."""
from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True)
def forward_sweep(weights):
    n1, n2 = weights.shape
    table = np.empty((n1, n2), dtype=np.float64)
    table[0, 0] = weights[0, 0]
    for i in range(1, n1):
        table[i, 0] = weights[i, 0] + table[i - 1, 0]
    for j in range(1, n2):
        table[0, j] = weights[0, j] + table[0, j - 1]
    for i in range(1, n1):
        for j in range(1, n2):
            left = table[i - 1, j]
            down = table[i, j - 1]
            table[i, j] = weights[i, j] + (left if left >= down else down)
    return table


@nb.njit(cache=True)
def forward_last_row(weights):
    n1, n2 = weights.shape
    row = np.empty(n2, dtype=np.float64)
    row[0] = weights[0, 0]
    for j in range(1, n2):
        row[j] = weights[0, j] + row[j - 1]
    for i in range(1, n1):
        row[0] = weights[i, 0] + row[0]
        for j in range(1, n2):
            row[j] = weights[i, j] + (row[j] if row[j] >= row[j - 1] else row[j - 1])
    return row


@nb.njit(cache=True)
def trace_successor(table, i, j, stop_i, stop_j):
    # up-right trace on a backward table, e1 on ties; keeps the first point
    # beyond (stop_i, stop_j) when the path leaves the box before the anchor
    n = (stop_i - i) + (stop_j - j) + 2
    out = np.empty((n, 2), dtype=np.int64)
    k = 0
    out[k, 0] = i
    out[k, 1] = j
    n1, n2 = table.shape
    while i <= stop_i and j <= stop_j:
        if i + 1 >= n1 and j + 1 >= n2:
            break
        if i + 1 >= n1:
            j += 1
        elif j + 1 >= n2:
            i += 1
        elif table[i + 1, j] >= table[i, j + 1]:
            i += 1
        else:
            j += 1
        k += 1
        out[k, 0] = i
        out[k, 1] = j
    return out[: k + 1]


@nb.njit(cache=True)
def backtrack_predecessor(table, i, j):
    # down-left trace on a forward table; -e1 on ties
    n = i + j + 1
    out = np.empty((n, 2), dtype=np.int64)
    k = 0
    out[k, 0] = i
    out[k, 1] = j
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        elif table[i - 1, j] >= table[i, j - 1]:
            i -= 1
        else:
            j -= 1
        k += 1
        out[k, 0] = i
        out[k, 1] = j
    return out[: k + 1]


@nb.njit(cache=True)
def exit_from(table, i, j):
    while i > 0 and j > 0:
        if table[i - 1, j] >= table[i, j - 1]:
            i -= 1
        else:
            j -= 1
    if j == 0:
        return i
    return -j


@nb.njit(cache=True)
def exit_labels(table):
    n1, n2 = table.shape
    labels = np.empty((n1, n2), dtype=np.int64)
    labels[0, 0] = 0
    for i in range(1, n1):
        labels[i, 0] = i
    for j in range(1, n2):
        labels[0, j] = -j
    for i in range(1, n1):
        for j in range(1, n2):
            if table[i - 1, j] >= table[i, j - 1]:
                labels[i, j] = labels[i - 1, j]
            else:
                labels[i, j] = labels[i, j - 1]
    return labels


@nb.njit(cache=True)
def first_common_vertex(table, ai, aj, bi, bj, hi_i, hi_j):
    # paths follow the backward-table successor rule inside [0..hi_i] x [0..hi_j];
    # returns (i, j, 1) at the first shared vertex or (-1, -1, 0) if either leaves
    while True:
        if ai == bi and aj == bj:
            return ai, aj, 1
        if ai > hi_i or aj > hi_j or bi > hi_i or bj > hi_j:
            return -1, -1, 0
        if ai + aj <= bi + bj:
            if table[ai + 1, aj] >= table[ai, aj + 1]:
                ai += 1
            else:
                aj += 1
        else:
            if table[bi + 1, bj] >= table[bi, bj + 1]:
                bi += 1
            else:
                bj += 1


@nb.njit(cache=True)
def dual_reaches_square(table, ring_i, ring_j, lo_i, lo_j, side_i, side_j):
    # corner c steps -e1 iff table[c - e1] <= table[c - e2]; returns True if any
    # dual path from the ring corners enters corners [lo_i..side_i] x [lo_j..side_j]
    # lo_i, lo_j >= 1
    for r in range(ring_i.shape[0]):
        ci = ring_i[r]
        cj = ring_j[r]
        while ci >= lo_i and cj >= lo_j:
            if ci <= side_i and cj <= side_j:
                return True
            if table[ci - 1, cj] <= table[ci, cj - 1]:
                ci -= 1
            else:
                cj -= 1
    return False


@nb.njit(cache=True)
def dual_trace(table, ci, cj, lo_i, lo_j):
    # lo_i, lo_j >= 1; keeps the first corner past the lower-left edge
    n = (ci - lo_i) + (cj - lo_j) + 2
    out = np.empty((n, 2), dtype=np.int64)
    k = 0
    out[k, 0] = ci
    out[k, 1] = cj
    while ci >= lo_i and cj >= lo_j:
        if table[ci - 1, cj] <= table[ci, cj - 1]:
            ci -= 1
        else:
            cj -= 1
        k += 1
        out[k, 0] = ci
        out[k, 1] = cj
    return out[: k + 1]


@nb.njit(cache=True)
def step_decisions(table, lo_i, lo_j, n1, n2):
    out = np.empty((n1, n2), dtype=np.bool_)
    for i in range(n1):
        for j in range(n2):
            out[i, j] = table[lo_i + i + 1, lo_j + j] >= table[lo_i + i, lo_j + j + 1]
    return out
