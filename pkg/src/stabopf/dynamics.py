"""Grid-forming inverter model: small-signal linearization and eigen oracle.

Each inverter i runs P-f / Q-V droop control behind first-order power
measurement filters:

    theta_i'  = omega_b * dw_i
    dw_i'     = -dw_i / tau_p + (m_p beta_p / tau_p) (P0_i - P_i)
    dV_i'     = -dV_i / tau_q + (m_q beta_q / tau_q) (Q0_i - Q_i)

with P_i, Q_i the lossless injections on the Kron-reduced network. The
setpoints P0, Q0, V0 are constants and vanish under differentiation, so the
linearization depends only on the operating point and the reduced network.
State ordering of the 3n x 3n system matrix: (theta_1..n, dw_1..n, dV_1..n).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from .eigensolve import _qr_eigvals, EigenSolveError
from .injections import _jacobian_blocks, injection_jacobian_blocks
from .netmodel import ReducedNetwork

__all__ = [
    "InverterParams",
    "OperatingPoint",
    "StateMatrix",
    "EigenReport",
    "reference_params",
    "injection_jacobian",
    "linearize",
    "eigen_stability",
]

OMEGA_BASE = 2.0 * np.pi * 60.0


@dataclass(frozen=True)
class InverterParams:
    m_p: float  # P-omega droop gain
    m_q: float  # Q-V droop gain
    tau_p: float  # active-power filter time constant (s)
    tau_q: float  # reactive-power filter time constant (s)
    beta_p: float = 1.0  # filter DC gains
    beta_q: float = 1.0
    omega_b: float = OMEGA_BASE  # base angular frequency (rad/s)

    def __post_init__(self):
        for name in ("m_p", "m_q", "tau_p", "tau_q", "beta_p", "beta_q", "omega_b"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"InverterParams.{name} must be strictly positive")


def reference_params(m_q: float, m_p: float = 6.0) -> InverterParams:
    """Parameter set used by the bundled experiments: unit filter gains,
    0.1 s measurement filters, 60 Hz base."""
    return InverterParams(m_p=m_p, m_q=m_q, tau_p=0.1, tau_q=0.1)


@dataclass(frozen=True)
class OperatingPoint:
    """Steady-state (V, theta) on the reduced network buses."""

    V: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        theta = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "theta", theta)
        if V.shape != theta.shape or V.ndim != 1:
            raise ValueError("V and theta must be 1-D with matching shapes")
        if np.any(V <= 0.0):
            raise ValueError("voltage magnitudes must be positive")

    def angle_violations(self, red: ReducedNetwork) -> list[tuple[int, int, float]]:
        """Reduced edges whose angle difference breaks |d_theta| < pi/2."""
        out = []
        for i in range(red.n):
            for j in red.neighbors[i]:
                if j <= i:
                    continue
                d = abs(float(self.theta[i] - self.theta[j]))
                if d >= np.pi / 2:
                    out.append((i, j, d))
        return out


@dataclass(frozen=True)
class StateMatrix:
    A: np.ndarray
    n: int  # number of inverters; A is 3n x 3n


@dataclass(frozen=True)
class EigenReport:
    eigenvalues: np.ndarray  # all eigenvalues, unordered
    trivial_zero_index: int | None  # removed rotational mode, None if flagged
    max_re: float  # largest real part among remaining eigenvalues
    stable: bool  # max_re < 0 strictly
    flagged: bool = False  # smallest-modulus eigenvalue exceeded zero_tol


def injection_jacobian(red: ReducedNetwork, op: OperatingPoint):
    """Partial derivative blocks (dP/dtheta, dP/dV, dQ/dtheta, dQ/dV) of the
    lossless injections on the reduced network."""
    if op.V.shape[0] != red.n:
        raise ValueError(
            f"operating point has {op.V.shape[0]} buses, reduced network has {red.n}"
        )
    return injection_jacobian_blocks(red.B_red, op.V, op.theta)


@njit(cache=True)
def _state_matrix(B, V, theta, kp, kq, inv_tau_p, inv_tau_q, omega_b):
    """Assemble the 3n x 3n linearization; kp = m_p*beta_p/tau_p etc."""
    n = B.shape[0]
    dP_dth, dP_dV, dQ_dth, dQ_dV = _jacobian_blocks(B, V, theta)
    A = np.zeros((3 * n, 3 * n))
    for i in range(n):
        A[i, n + i] = omega_b[i]
        A[n + i, n + i] = -inv_tau_p[i]
        A[2 * n + i, 2 * n + i] = -inv_tau_q[i]
        for j in range(n):
            A[n + i, j] = -kp[i] * dP_dth[i, j]
            A[n + i, 2 * n + j] = -kp[i] * dP_dV[i, j]
            A[2 * n + i, j] = -kq[i] * dQ_dth[i, j]
            A[2 * n + i, 2 * n + j] += -kq[i] * dQ_dV[i, j]
    return A


def _param_arrays(params: list[InverterParams]):
    kp = np.array([p.m_p * p.beta_p / p.tau_p for p in params])
    kq = np.array([p.m_q * p.beta_q / p.tau_q for p in params])
    itp = np.array([1.0 / p.tau_p for p in params])
    itq = np.array([1.0 / p.tau_q for p in params])
    wb = np.array([p.omega_b for p in params])
    return kp, kq, itp, itq, wb


def linearize(
    red: ReducedNetwork, params: list[InverterParams], op: OperatingPoint
) -> StateMatrix:
    """Analytic Jacobian of the droop dynamics at the operating point."""
    if len(params) != red.n:
        raise ValueError(f"need one InverterParams per reduced bus ({red.n})")
    if op.V.shape[0] != red.n:
        raise ValueError("operating point dimension does not match reduced network")
    viol = op.angle_violations(red)
    if viol:
        warnings.warn(
            f"operating point breaks the |theta_i - theta_j| < pi/2 assumption "
            f"on reduced edges {[(i, j) for i, j, _ in viol]}",
            stacklevel=2,
        )
    kp, kq, itp, itq, wb = _param_arrays(params)
    A = _state_matrix(red.B_red, op.V, op.theta, kp, kq, itp, itq, wb)
    return StateMatrix(A, red.n)


def eigen_stability(A: StateMatrix | np.ndarray, zero_tol: float = 1e-7) -> EigenReport:
    """Classify small-signal stability from the state-matrix spectrum.

    The rotational invariance of the dynamics produces exactly one zero
    eigenvalue; the smallest-modulus eigenvalue is removed when its modulus
    is within zero_tol, and stability requires every remaining eigenvalue to
    have a strictly negative real part. If the smallest modulus exceeds
    zero_tol the report is flagged and nothing is removed.
    """
    M = A.A if isinstance(A, StateMatrix) else np.asarray(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("state matrix must be square")
    n = M.shape[0]
    re = np.empty(n)
    im = np.empty(n)
    bad = _qr_eigvals(np.ascontiguousarray(M), re, im)
    if bad:
        raise EigenSolveError(
            f"QR iteration stalled on a block of size {bad} "
            f"(n={n}, max|A|={np.max(np.abs(M)):.3e}, "
            f"cond estimate={np.linalg.cond(M + np.eye(n) * 1e-300):.3e})"
        )
    lam = re + 1j * im
    k = int(np.argmin(np.abs(lam)))
    if np.abs(lam[k]) <= zero_tol:
        rest = np.delete(re, k)
        max_re = float(np.max(rest)) if rest.size else -np.inf
        return EigenReport(lam, k, max_re, stable=max_re < 0.0)
    # no removable rotational mode: report over the full spectrum, flagged
    max_re = float(np.max(re))
    return EigenReport(lam, None, max_re, stable=max_re < 0.0, flagged=True)
