"""Dense convex quadratic programming by a primal-dual interior-point method.

Solves   min 1/2 x'Px + q'x   s.t.  Ax = b,  Gx <= h

with a Mehrotra predictor-corrector iteration. Sized for the subproblems the
SQP solver generates (tens to a few hundred variables/constraints); all
linear algebra is dense. P must be positive semidefinite and positive
definite on the equality null space (the SQP layer guarantees this via its
damped quasi-Newton updates).

Newton system per iteration, with slacks s > 0 and duals z > 0:

    rd = Px + q + A'y + G'z      rp = Ax - b
    rg = Gx + s - h              rc = z*s (+ corrector) - sigma*mu

    (P + G' diag(z/s) G) dx + A' dy = -rd + G'((rc - z*rg)/s)
    A dx = -rp
    ds = -rg - G dx
    dz = -(rc + z*ds)/s
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["QpResult", "solve_qp"]


@dataclass
class QpResult:
    x: np.ndarray
    y: np.ndarray  # equality multipliers
    z: np.ndarray  # inequality multipliers (>= 0)
    s: np.ndarray  # inequality slacks (>= 0)
    status: str  # "optimal" | "max_iter" | "singular"
    iterations: int
    gap: float
    residual: float


def _chol_solve(L, B):
    return np.linalg.solve(L.T, np.linalg.solve(L, B))


def _solve_kkt(P, A, G, W, r1, r2, reg=0.0):
    """Solve  (P + G'WG + reg I) dx + A' dy = r1,  A dx = r2."""
    n = P.shape[0]
    M = P + reg * np.eye(n)
    if G is not None and G.shape[0]:
        M = M + (G.T * W) @ G
    try:
        L = np.linalg.cholesky(M)
        solve = lambda B: _chol_solve(L, B)  # noqa: E731
    except np.linalg.LinAlgError:
        Minv = np.linalg.inv(M + 1e-14 * np.eye(n))
        solve = lambda B: Minv @ B  # noqa: E731
    if A is None or A.shape[0] == 0:
        return solve(r1), np.zeros(0)
    MinvAt = solve(A.T)
    Minvr1 = solve(r1)
    S = A @ MinvAt + reg * np.eye(A.shape[0])
    dy = np.linalg.solve(S, A @ Minvr1 - r2)
    dx = Minvr1 - MinvAt @ dy
    return dx, dy


def _max_step(v, dv):
    """Largest alpha in (0, 1] keeping v + alpha*dv nonnegative."""
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def solve_qp(
    P: np.ndarray,
    q: np.ndarray,
    A: np.ndarray | None = None,
    b: np.ndarray | None = None,
    G: np.ndarray | None = None,
    h: np.ndarray | None = None,
    tol: float = 1e-9,
    max_iter: int = 60,
) -> QpResult:
    n = q.shape[0]
    A = np.zeros((0, n)) if A is None else np.asarray(A, dtype=float)
    b = np.zeros(0) if b is None else np.asarray(b, dtype=float)
    G = np.zeros((0, n)) if G is None else np.asarray(G, dtype=float)
    h = np.zeros(0) if h is None else np.asarray(h, dtype=float)
    mE, mI = A.shape[0], G.shape[0]

    if mI == 0:
        # pure equality QP: single KKT solve
        try:
            x, y = _solve_kkt(P, A, None, None, -q, b)
        except np.linalg.LinAlgError:
            x, y = _solve_kkt(P, A, None, None, -q, b, reg=1e-10)
        res = float(np.max(np.abs(P @ x + q + A.T @ y))) if n else 0.0
        if mE:
            res = max(res, float(np.max(np.abs(A @ x - b))))
        status = "optimal" if res < 1e-7 * (1.0 + float(np.max(np.abs(q)))) else "singular"
        return QpResult(x, y, np.zeros(0), np.zeros(0), status, 1, 0.0, res)

    # starting point: equality-consistent x, strictly positive (s, z)
    x = np.zeros(n)
    if mE:
        x, *_ = np.linalg.lstsq(A, b, rcond=None)
    s = h - G @ x
    s = s + (max(0.0, -float(np.min(s))) + 1.0)
    z = np.ones(mI)
    y = np.zeros(mE)

    scale = 1.0 + max(
        float(np.max(np.abs(q))),
        float(np.max(np.abs(h))) if mI else 0.0,
        float(np.max(np.abs(b))) if mE else 0.0,
    )
    status = "max_iter"
    it = 0
    best = None
    best_merit = np.inf
    stalls = 0
    for it in range(1, max_iter + 1):
        rd = P @ x + q + A.T @ y + G.T @ z
        rp = A @ x - b
        rg = G @ x + s - h
        mu = float(z @ s) / mI
        res = max(
            float(np.max(np.abs(rd))),
            float(np.max(np.abs(rp))) if mE else 0.0,
            float(np.max(np.abs(rg))),
        )
        merit = max(res, mu)
        if merit < best_merit:
            best_merit = merit
            best = (x.copy(), y.copy(), z.copy(), s.copy(), mu, res)
        if res < tol * scale and mu < tol * scale:
            status = "optimal"
            break

        # extreme complementarity ratios wreck the normal equations; cap them
        W = np.clip(z / s, 1e-10, 1e12)
        rc_aff = z * s  # predictor (affine scaling)
        r1 = -rd + G.T @ ((rc_aff - z * rg) / s)
        reg = 0.0
        for attempt in range(4):
            try:
                dx_a, dy_a = _solve_kkt(P, A, G, W, r1, -rp, reg=reg)
                break
            except np.linalg.LinAlgError:
                reg = 1e-12 * 100.0**attempt * (1.0 + float(np.max(np.abs(P))))
        else:
            break
        ds_a = -rg - G @ dx_a
        dz_a = -(rc_aff + z * ds_a) / s

        alpha_p = _max_step(s, ds_a)
        alpha_d = _max_step(z, dz_a)
        mu_aff = float((z + alpha_d * dz_a) @ (s + alpha_p * ds_a)) / mI
        sigma = (max(mu_aff, 0.0) / mu) ** 3 if mu > 0 else 0.1

        # corrector
        rc = z * s + dz_a * ds_a - sigma * mu
        r1 = -rd + G.T @ ((rc - z * rg) / s)
        dx, dy = _solve_kkt(P, A, G, W, r1, -rp, reg=reg)
        ds = -rg - G @ dx
        dz = -(rc + z * ds) / s

        alpha = 0.99995 * min(_max_step(s, ds), _max_step(z, dz))
        alpha = min(alpha, 1.0)
        if alpha < 1e-10:
            stalls += 1
            if stalls >= 2:
                break
        else:
            stalls = 0
        x = x + alpha * dx
        s = s + alpha * ds
        z = z + alpha * dz
        if mE:
            y = y + alpha * dy

    if status != "optimal" and best is not None:
        x, y, z, s, mu, res = best
        if res < 100.0 * tol * scale and mu < 100.0 * tol * scale:
            status = "optimal"
        return QpResult(x, y, z, s, status, it, mu, res)
    rd = P @ x + q + A.T @ y + G.T @ z
    res = max(
        float(np.max(np.abs(rd))),
        float(np.max(np.abs(A @ x - b))) if mE else 0.0,
        float(np.max(np.abs(np.maximum(G @ x - h, 0.0)))),
    )
    mu = float(z @ s) / mI if mI else 0.0
    return QpResult(x, y, z, s, status, it, mu, res)
