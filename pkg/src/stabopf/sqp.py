"""Dense SQP solver for smooth NLPs with exact constraint Jacobians.

    min f(x)   s.t.   cE(x) = 0,   cI(x) <= 0

The main loop is a damped-BFGS SQP with an l1 merit line search; each step
solves a convex QP subproblem (interior-point, see qp.py), falling back to an
elastic (slack-penalized) subproblem when the linearized constraints are
inconsistent. A converged iterate is then refined by Newton iterations on the
active-set KKT system, which identifies the final active set exactly and
drives the KKT residual to ~1e-10 so the reported multipliers are usable as
shadow prices. Rank-deficient active constraint gradients are reported as
status "degenerate" together with least-norm multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .qp import solve_qp

__all__ = ["NlpProblem", "KktResidual", "SqpResult", "solve_sqp"]


@dataclass
class NlpProblem:
    n: int
    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    eq_constraints: Callable[[np.ndarray], np.ndarray]
    eq_jacobian: Callable[[np.ndarray], np.ndarray]
    ineq_constraints: Callable[[np.ndarray], np.ndarray]
    ineq_jacobian: Callable[[np.ndarray], np.ndarray]
    # exact Lagrangian Hessian (x, lam_eq, mu_ineq) -> (n, n); None disables
    # the Newton polish's exact curvature and falls back to BFGS curvature.
    lagrangian_hessian: Callable | None = None


@dataclass
class KktResidual:
    stationarity: float
    eq_violation: float
    ineq_violation: float
    complementarity: float

    @property
    def total(self) -> float:
        return max(
            self.stationarity,
            self.eq_violation,
            self.ineq_violation,
            self.complementarity,
        )


@dataclass
class SqpResult:
    x: np.ndarray
    lam_eq: np.ndarray
    mu_ineq: np.ndarray
    f: float
    kkt: KktResidual
    status: str  # optimal | max_iter | line_search_failure | degenerate | infeasible
    iterations: int
    active_set: list[int] = field(default_factory=list)
    message: str = ""


def _kkt_residual(prob, x, lam, mu, g=None, cE=None, JE=None, cI=None, JI=None):
    g = prob.gradient(x) if g is None else g
    cE = prob.eq_constraints(x) if cE is None else cE
    JE = prob.eq_jacobian(x) if JE is None else JE
    cI = prob.ineq_constraints(x) if cI is None else cI
    JI = prob.ineq_jacobian(x) if JI is None else JI
    stat = g.copy()
    if lam.size:
        stat += JE.T @ lam
    if mu.size:
        stat += JI.T @ mu
    return KktResidual(
        stationarity=float(np.max(np.abs(stat))) if stat.size else 0.0,
        eq_violation=float(np.max(np.abs(cE))) if cE.size else 0.0,
        ineq_violation=float(np.max(np.maximum(cI, 0.0))) if cI.size else 0.0,
        complementarity=float(np.max(np.abs(mu * cI))) if cI.size else 0.0,
    )


def _merit(f, cE, cI, nu):
    v = 0.0
    if cE.size:
        v += float(np.sum(np.abs(cE)))
    if cI.size:
        v += float(np.sum(np.maximum(cI, 0.0)))
    return f + nu * v


def _restoration_step(cE, JE, cI, JI):
    """Least-norm Gauss-Newton step toward constraint feasibility."""
    rows = []
    res = []
    if cE.size:
        rows.append(JE)
        res.append(cE)
    viol = np.flatnonzero(cI > 0.0)
    if viol.size:
        rows.append(JI[viol])
        res.append(cI[viol])
    if not rows:
        return np.zeros(JE.shape[1] if cE.size else JI.shape[1])
    A = np.vstack(rows)
    r = np.concatenate(res)
    d, *_ = np.linalg.lstsq(A, -r, rcond=None)
    return d


def _elastic_qp(B, g, JE, cE, JI, cI, nu):
    """l1-relaxed subproblem: slacks on every constraint, penalized by nu."""
    n = g.size
    mE, mI = cE.size, cI.size
    N = n + 2 * mE + mI
    P = np.zeros((N, N))
    P[:n, :n] = B
    q = np.concatenate([g, nu * np.ones(2 * mE + mI)])
    A = None
    b = None
    if mE:
        A = np.hstack([JE, -np.eye(mE), np.eye(mE), np.zeros((mE, mI))])
        b = -cE
    rows = []
    rhs = []
    if mI:
        rows.append(np.hstack([JI, np.zeros((mI, 2 * mE)), -np.eye(mI)]))
        rhs.append(-cI)
    slack = np.hstack([np.zeros((2 * mE + mI, n)), -np.eye(2 * mE + mI)])
    rows.append(slack)
    rhs.append(np.zeros(2 * mE + mI))
    G = np.vstack(rows)
    h = np.concatenate(rhs)
    r = solve_qp(P, q, A, b, G, h)
    d = r.x[:n]
    y = r.y if mE else np.zeros(0)
    z = r.z[:mI] if mI else np.zeros(0)
    return d, y, z, r.status


def solve_sqp(
    prob: NlpProblem,
    x0: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 200,
    hessian_init: np.ndarray | None = None,
    lam0: np.ndarray | None = None,
    mu0: np.ndarray | None = None,
) -> SqpResult:
    x = np.asarray(x0, dtype=float).copy()
    n = prob.n
    cE = prob.eq_constraints(x)
    cI = prob.ineq_constraints(x)
    mE, mI = cE.size, cI.size
    lam = np.zeros(mE) if lam0 is None else np.asarray(lam0, dtype=float).copy()
    mu = np.zeros(mI) if mu0 is None else np.asarray(mu0, dtype=float).copy()
    B = np.eye(n) if hessian_init is None else hessian_init.copy()
    nu = 1.0
    loop_tol = max(1e-7, tol)
    status = "max_iter"
    it = 0
    bad_steps = 0

    g = prob.gradient(x)
    JE = prob.eq_jacobian(x)
    JI = prob.ineq_jacobian(x)
    f = prob.objective(x)

    for it in range(1, max_iter + 1):
        kkt = _kkt_residual(prob, x, lam, mu, g, cE, JE, cI, JI)
        dual_ok = (not mI) or float(np.min(mu)) >= -1e-9
        if kkt.total <= loop_tol and dual_ok:
            status = "converged"
            break

        r = solve_qp(B, g, JE if mE else None, -cE if mE else None,
                     JI if mI else None, -cI if mI else None)
        g_scale = 1.0 + (float(np.max(np.abs(g))) if g.size else 0.0)
        if r.status == "optimal" or (r.residual <= 1e-3 * g_scale and r.gap <= 1e-3 * g_scale):
            # a slightly inexact subproblem still yields a usable direction
            d, y_qp, z_qp = r.x, r.y, r.z
        else:
            d, y_qp, z_qp, est = _elastic_qp(B, g, JE, cE, JI, cI, max(10.0, 2 * nu))
            if est != "optimal":
                # last resort: a pure feasibility-restoration direction
                d = _restoration_step(cE, JE, cI, JI)
                y_qp = lam
                z_qp = mu
                if float(np.max(np.abs(d))) < 1e-14:
                    status = "subproblem_failure"
                    break

        # the QP multipliers are fresh dual estimates at the current x; once
        # they certify a near-KKT feasible point, the Newton polish takes
        # over (it owns the final accuracy and active-set identification)
        kkt_qp = _kkt_residual(prob, x, y_qp, z_qp, g, cE, JE, cI, JI)
        if kkt_qp.total <= 1e-4 and _feasible_enough(cE, cI, 1e-6):
            lam, mu = y_qp, z_qp
            status = "converged"
            break
        if float(np.max(np.abs(d))) <= 1e-10 * (1.0 + float(np.max(np.abs(x)))):
            lam, mu = y_qp, z_qp
            status = "converged" if _feasible_enough(cE, cI, 1e-5) else "max_iter"
            break

        dual_scale = max(
            float(np.max(np.abs(y_qp))) if y_qp.size else 0.0,
            float(np.max(z_qp)) if z_qp.size else 0.0,
        )
        nu = max(nu, 1.2 * dual_scale + 1e-3)

        phi0 = _merit(f, cE, cI, nu)
        viol0 = (np.sum(np.abs(cE)) if mE else 0.0) + (
            np.sum(np.maximum(cI, 0.0)) if mI else 0.0
        )
        D = float(g @ d) - nu * viol0
        noise = 1e-12 * (1.0 + abs(phi0))
        alpha = 1.0
        ls_ok = False
        for _ in range(40):
            x_t = x + alpha * d
            f_t = prob.objective(x_t)
            cE_t = prob.eq_constraints(x_t)
            cI_t = prob.ineq_constraints(x_t)
            if _merit(f_t, cE_t, cI_t, nu) <= phi0 + 1e-4 * alpha * min(D, 0.0) + noise:
                ls_ok = True
                break
            alpha *= 0.5
        if not ls_ok:
            bad_steps += 1
            if bad_steps >= 3:
                status = "line_search_failure"
                break
            alpha = 1e-8  # tiny step to escape a flat merit neighborhood
            x_t = x + alpha * d
            f_t = prob.objective(x_t)
            cE_t = prob.eq_constraints(x_t)
            cI_t = prob.ineq_constraints(x_t)
        else:
            bad_steps = 0

        lam_new = (1 - alpha) * lam + alpha * y_qp if mE else lam
        mu_new = (1 - alpha) * mu + alpha * z_qp if mI else mu

        # damped BFGS on the Lagrangian gradient
        g_t = prob.gradient(x_t)
        JE_t = prob.eq_jacobian(x_t)
        JI_t = prob.ineq_jacobian(x_t)
        gL_new = g_t.copy()
        gL_old = g.copy()
        if mE:
            gL_new += JE_t.T @ lam_new
            gL_old += JE.T @ lam_new
        if mI:
            gL_new += JI_t.T @ mu_new
            gL_old += JI.T @ mu_new
        s = x_t - x
        yv = gL_new - gL_old
        sBs = float(s @ (B @ s))
        sy = float(s @ yv)
        if sBs > 1e-16:
            if sy < 0.2 * sBs:
                theta = 0.8 * sBs / (sBs - sy)
                yv = theta * yv + (1.0 - theta) * (B @ s)
                sy = float(s @ yv)
            if sy > 1e-12 * max(1.0, sBs):
                Bs = B @ s
                B = B - np.outer(Bs, Bs) / sBs + np.outer(yv, yv) / sy

        x, f, g, cE, JE, cI, JI = x_t, f_t, g_t, cE_t, JE_t, cI_t, JI_t
        lam, mu = lam_new, mu_new

    # polish any feasible-enough endpoint regardless of how the loop ended;
    # the polish verdict (kkt <= tol) decides optimality honestly
    if _feasible_enough(cE, cI, 1e-4):
        return _polish(prob, x, lam, mu, B, tol, it)
    kkt = _kkt_residual(prob, x, lam, mu, g, cE, JE, cI, JI)
    if status in ("converged", "max_iter", "subproblem_failure"):
        status = "infeasible" if status == "subproblem_failure" else "max_iter"
    return SqpResult(x, lam, mu, f, kkt, status, it)


def _feasible_enough(cE, cI, tol):
    v = float(np.max(np.abs(cE))) if cE.size else 0.0
    if cI.size:
        v = max(v, float(np.max(np.maximum(cI, 0.0))))
    return v <= tol


def _polish(prob, x, lam, mu, B, tol, outer_iters) -> SqpResult:
    """Newton refinement on the active-set KKT system.

    Iteratively solves stationarity + active constraints as a square
    nonlinear system, dropping constraints whose multipliers go negative and
    adding ones that become violated, until the classification is consistent.
    """
    n = prob.n
    cI = prob.ineq_constraints(x)
    mI = cI.size
    mE = prob.eq_constraints(x).size
    act_tol = 1e-6
    # slack-driven classification: QP duals on loosely-slack rows are noisy
    # at handover accuracy, so multipliers do not vote here; rows that turn
    # out to be needed get added by the violation check below
    mu_full = mu.copy()
    active = sorted(np.flatnonzero(cI >= -act_tol).tolist())
    degenerate = False
    message = ""

    for round_ in range(30):
        nA = len(active)
        lam_w = lam.copy()
        mu_w = np.maximum(mu_full[active], 0.0)
        xw = x.copy()
        best_pt = (xw.copy(), lam_w.copy(), mu_w.copy())
        best_Fn = np.inf
        for newton_it in range(40):
            g = prob.gradient(xw)
            cE = prob.eq_constraints(xw)
            JE = prob.eq_jacobian(xw)
            cI_w = prob.ineq_constraints(xw)
            JI = prob.ineq_jacobian(xw)
            JA = JI[active] if nA else np.zeros((0, n))
            cA = cI_w[active] if nA else np.zeros(0)
            mu_vec = np.zeros(mI)
            if nA:
                mu_vec[active] = mu_w
            stat = g + (JE.T @ lam_w if mE else 0.0) + (JA.T @ mu_w if nA else 0.0)
            F = np.concatenate([stat, cE, cA])
            Fn = float(np.max(np.abs(F))) if F.size else 0.0
            if not np.isfinite(Fn):
                xw, lam_w, mu_w = best_pt
                break
            if Fn < best_Fn:
                best_Fn = Fn
                best_pt = (xw.copy(), lam_w.copy(), mu_w.copy())
            if Fn <= 0.25 * tol:
                break
            if prob.lagrangian_hessian is not None:
                H = prob.lagrangian_hessian(xw, lam_w, mu_vec)
            else:
                H = B
            K = np.zeros((n + mE + nA, n + mE + nA))
            K[:n, :n] = H
            if mE:
                K[:n, n : n + mE] = JE.T
                K[n : n + mE, :n] = JE
            if nA:
                K[:n, n + mE :] = JA.T
                K[n + mE :, :n] = JA
            try:
                step = np.linalg.solve(K, -F)
            except np.linalg.LinAlgError:
                # singular KKT matrix here is a step-computation detail
                # (e.g. flat curvature); degeneracy is judged by the final
                # rank test of the active constraint gradients below
                step, *_ = np.linalg.lstsq(K, -F, rcond=None)
            if not np.all(np.isfinite(step)):
                xw, lam_w, mu_w = best_pt
                break
            # damped update: accept the first step that reduces ||F||;
            # if nothing in the backtracking range helps, restore the best
            # iterate and stop this round
            scale = 1.0
            improved = False
            for _ in range(8):
                x_n = xw + scale * step[:n]
                lam_n = lam_w + scale * step[n : n + mE]
                mu_n = mu_w + scale * step[n + mE :]
                g_n = prob.gradient(x_n)
                cE_n = prob.eq_constraints(x_n)
                cA_n = prob.ineq_constraints(x_n)[active] if nA else np.zeros(0)
                stat_n = g_n + (prob.eq_jacobian(x_n).T @ lam_n if mE else 0.0)
                if nA:
                    stat_n = stat_n + prob.ineq_jacobian(x_n)[active].T @ mu_n
                F_n = np.concatenate([stat_n, cE_n, cA_n])
                Fn_new = float(np.max(np.abs(F_n))) if F_n.size else 0.0
                if np.isfinite(Fn_new) and Fn_new < Fn:
                    improved = True
                    break
                scale *= 0.5
            if not improved:
                xw, lam_w, mu_w = best_pt
                break
            xw, lam_w, mu_w = x_n, lam_n, mu_n

        cI_w = prob.ineq_constraints(xw)
        # classification consistency
        if nA and float(np.min(mu_w)) < -1e-9:
            drop = active[int(np.argmin(mu_w))]
            active = [a for a in active if a != drop]
            mu_full = np.zeros(mI)
            continue
        violated = [
            i for i in range(mI) if i not in active and cI_w[i] > 1e-9
        ]
        if violated:
            active = sorted(active + violated)
            mu_full = np.zeros(mI)
            continue
        x, lam = xw, lam_w
        mu_full = np.zeros(mI)
        if nA:
            mu_full[active] = np.maximum(mu_w, 0.0)
        break
    else:
        message = "active-set classification did not settle"

    # rank check of active constraint gradients (positive linear independence
    # failures and redundant activities surface here)
    JE = prob.eq_jacobian(x)
    JI = prob.ineq_jacobian(x)
    JA = JI[active] if active else np.zeros((0, n))
    rows = np.vstack([JE, JA]) if (mE or active) else np.zeros((0, n))
    if rows.shape[0]:
        sv = np.linalg.svd(rows, compute_uv=False)
        if sv[0] > 0 and (sv[-1] < 1e-8 * sv[0] or rows.shape[0] > n):
            degenerate = True
            # least-norm multipliers for the degenerate stationarity system
            g = prob.gradient(x)
            sol, *_ = np.linalg.lstsq(rows.T, -g, rcond=None)
            lam = sol[:mE]
            mu_full = np.zeros(mI)
            if active:
                mu_full[active] = np.maximum(sol[mE:], 0.0)

    kkt = _kkt_residual(prob, x, lam, mu_full)
    f = prob.objective(x)
    if degenerate:
        status = "degenerate"
        cond = float(sv[0] / max(sv[-1], 1e-300)) if rows.shape[0] else np.inf
        message = message or f"active gradient condition {cond:.3e}"
    elif kkt.total <= tol and (not mI or float(np.min(mu_full)) >= -1e-10):
        status = "optimal"
    else:
        status = "max_iter"
    return SqpResult(x, lam, mu_full, f, kkt, status, outer_iters, list(active), message)
