"""Lossless power-injection kernels and their analytic derivatives.

All functions work on a dense symmetric B = -Im(Y_bus) (see netmodel) and
vectors V, theta indexed consistently with it:

    P_i = -sum_{j != i} V_i V_j B_ij sin(theta_i - theta_j)
    Q_i = V_i^2 B_ii + sum_{j != i} V_i V_j B_ij cos(theta_i - theta_j)

The kernels are numba-compiled; they are shared by the small-signal
linearization (reduced network) and the OPF constraint evaluators (full
network), so there is a single implementation of these formulas in the
package. Finite-difference oracles in the test suite pin them down.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "injections",
    "injection_jacobian_blocks",
    "weighted_injection_hessian",
]


@njit(cache=True)
def _injections(B, V, theta):
    n = B.shape[0]
    P = np.zeros(n)
    Q = np.zeros(n)
    for i in range(n):
        Q[i] = V[i] * V[i] * B[i, i]
        for j in range(n):
            if j == i or B[i, j] == 0.0:
                continue
            d = theta[i] - theta[j]
            P[i] -= V[i] * V[j] * B[i, j] * np.sin(d)
            Q[i] += V[i] * V[j] * B[i, j] * np.cos(d)
    return P, Q


@njit(cache=True)
def _jacobian_blocks(B, V, theta):
    n = B.shape[0]
    dP_dth = np.zeros((n, n))
    dP_dV = np.zeros((n, n))
    dQ_dth = np.zeros((n, n))
    dQ_dV = np.zeros((n, n))
    for i in range(n):
        dQ_dV[i, i] = 2.0 * V[i] * B[i, i]
        for j in range(n):
            if j == i or B[i, j] == 0.0:
                continue
            d = theta[i] - theta[j]
            s = np.sin(d)
            c = np.cos(d)
            bij = B[i, j]
            dP_dth[i, i] -= V[i] * V[j] * bij * c
            dP_dth[i, j] = V[i] * V[j] * bij * c
            dP_dV[i, i] -= V[j] * bij * s
            dP_dV[i, j] = -V[i] * bij * s
            dQ_dth[i, i] -= V[i] * V[j] * bij * s
            dQ_dth[i, j] = V[i] * V[j] * bij * s
            dQ_dV[i, i] += V[j] * bij * c
            dQ_dV[i, j] = V[i] * bij * c
    return dP_dth, dP_dV, dQ_dth, dQ_dV


@njit(cache=True)
def _weighted_hessian(B, V, theta, wP, wQ):
    """sum_i wP_i * hess(P_i) + wQ_i * hess(Q_i) over z = (theta, V)."""
    n = B.shape[0]
    H = np.zeros((2 * n, 2 * n))
    for i in range(n):
        H[n + i, n + i] += wQ[i] * 2.0 * B[i, i]
        for j in range(n):
            if j == i or B[i, j] == 0.0:
                continue
            d = theta[i] - theta[j]
            s = np.sin(d)
            c = np.cos(d)
            bij = B[i, j]
            w = wP[i]
            wq = wQ[i]
            vv = V[i] * V[j]
            # theta-theta
            taa = w * vv * bij * s - wq * vv * bij * c
            tab = -w * vv * bij * s + wq * vv * bij * c
            H[i, i] += taa
            H[j, j] += taa
            H[i, j] += tab
            H[j, i] += tab
            # V-V (no V_i^2 / V_j^2 terms from off-diagonal contributions)
            vij = -w * bij * s + wq * bij * c
            H[n + i, n + j] += vij
            H[n + j, n + i] += vij
            # V-theta
            a_ii = -w * V[j] * bij * c - wq * V[j] * bij * s
            a_ij = w * V[j] * bij * c + wq * V[j] * bij * s
            a_ji = -w * V[i] * bij * c - wq * V[i] * bij * s
            a_jj = w * V[i] * bij * c + wq * V[i] * bij * s
            H[n + i, i] += a_ii
            H[i, n + i] += a_ii
            H[n + i, j] += a_ij
            H[j, n + i] += a_ij
            H[n + j, i] += a_ji
            H[i, n + j] += a_ji
            H[n + j, j] += a_jj
            H[j, n + j] += a_jj
    return H


def _check(B: np.ndarray, V: np.ndarray, theta: np.ndarray):
    B = np.ascontiguousarray(B, dtype=np.float64)
    V = np.ascontiguousarray(V, dtype=np.float64)
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    n = B.shape[0]
    if B.shape != (n, n):
        raise ValueError("B must be square")
    if V.shape != (n,) or theta.shape != (n,):
        raise ValueError(
            f"dimension mismatch: B is {n}x{n}, V has {V.shape}, theta has {theta.shape}"
        )
    return B, V, theta


def injections(B, V, theta) -> tuple[np.ndarray, np.ndarray]:
    """Net active/reactive power injected into the network at each bus."""
    return _injections(*_check(B, V, theta))


def injection_jacobian_blocks(B, V, theta):
    """(dP/dtheta, dP/dV, dQ/dtheta, dQ/dV) as dense n-by-n blocks."""
    return _jacobian_blocks(*_check(B, V, theta))


def weighted_injection_hessian(B, V, theta, wP, wQ) -> np.ndarray:
    """Hessian of sum_i (wP_i P_i + wQ_i Q_i) over stacked (theta, V)."""
    B, V, theta = _check(B, V, theta)
    wP = np.ascontiguousarray(wP, dtype=np.float64)
    wQ = np.ascontiguousarray(wQ, dtype=np.float64)
    if wP.shape != V.shape or wQ.shape != V.shape:
        raise ValueError("weight vectors must have one entry per bus")
    return _weighted_hessian(B, V, theta, wP, wQ)
