"""Compiled tridiagonal kernels for the Crank-Nicolson step.

The system matrix is ``A = I + i dt/(2 hbar) H`` restricted to interior
nodes; its off-diagonal is the constant ``off`` and the right-hand side uses
``B = conj-structure of A``: ``B_diag = 2 - A_diag`` and ``B_off = -off``.
"""

import numpy as np
from numba import njit

# far below any observable; keeps the sweep free of subnormal arithmetic
FLUSH = 1e-150


@njit(cache=True, nogil=True)
def factor(diag, off):
    """Forward-elimination coefficients of the Thomas algorithm.

    Returns ``(cp, inv, ok)`` where ``inv`` holds reciprocal pivots and
    ``ok`` is False if a pivot vanished.
    """
    n = diag.shape[0]
    cp = np.empty(n, np.complex128)
    inv = np.empty(n, np.complex128)
    if diag[0] == 0:
        return cp, inv, False
    inv[0] = 1.0 / diag[0]
    cp[0] = off * inv[0]
    for i in range(1, n):
        den = diag[i] - off * cp[i - 1]
        if den == 0:
            return cp, inv, False
        inv[i] = 1.0 / den
        cp[i] = off * inv[i]
    return cp, inv, True


@njit(cache=True, nogil=True)
def solve_tridiagonal(off, cp, inv, rhs):
    """Solve a factored tridiagonal system with constant off-diagonal ``off``."""
    n = rhs.shape[0]
    d = np.empty(n, np.complex128)
    prev = 0j
    for i in range(n):
        prev = (rhs[i] - off * prev) * inv[i]
        d[i] = prev
    out = np.empty(n, np.complex128)
    nxt = 0j
    for i in range(n - 1, -1, -1):
        nxt = d[i] - cp[i] * nxt
        out[i] = nxt
    return out


@njit(cache=True, nogil=True)
def cn_advance(psi, diag, off, cp, inv, work):
    """One Crank-Nicolson step, in place on ``psi`` (walls stay zero)."""
    n = diag.shape[0]
    prev = 0j
    for i in range(n):
        r = (2.0 - diag[i]) * psi[i + 1] - off * (psi[i] + psi[i + 2])
        prev = (r - off * prev) * inv[i]
        if abs(prev.real) < FLUSH and abs(prev.imag) < FLUSH:
            prev = 0j
        work[i] = prev
    nxt = 0j
    for i in range(n - 1, -1, -1):
        nxt = work[i] - cp[i] * nxt
        if abs(nxt.real) < FLUSH and abs(nxt.imag) < FLUSH:
            nxt = 0j
        psi[i + 1] = nxt
    psi[0] = 0j
    psi[n + 1] = 0j
