"""Stability-constrained AC optimal power flow: assembly and solution.

The decision vector is x = (P_G, Q_G per inverter; V, theta per bus) with the
reference angle fixed to zero (eliminated from the optimization variables)
and, when an experiment pins it, the reference voltage fixed likewise.
Equalities are the lossless power-balance equations at every bus; the
inequalities are generator/voltage box limits, squared apparent-power branch
limits measured at the from side, and the split voltage-difference stability
constraints. The Lagrangian convention is

    L = J + lam_P' (P_G - P_D - P_net) + lam_Q' (Q_G - Q_D - Q_net)
        + nu' q + mu' h,        q <= 0, h <= 0, nu, mu >= 0,

so an inequality's multiplier is the marginal decrease of the optimal cost
per unit relaxation of its bound.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .injections import (
    injections,
    injection_jacobian_blocks,
    weighted_injection_hessian,
)
from .netmodel import Network, SusceptanceMatrix
from .sqp import NlpProblem, SqpResult, solve_sqp
from .stabcert import StabilityConstraintSet

__all__ = [
    "CostModel",
    "GenLimits",
    "DecisionVector",
    "OpfProblem",
    "OpfSolution",
    "ConstraintBundle",
    "assemble",
    "evaluate_constraints",
    "default_starts",
    "solve",
    "solve_sweep",
    "solution_record",
]


@dataclass(frozen=True)
class CostModel:
    """Quadratic generation cost sum_i a + b P + c P^2 + d Q^2 per inverter."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.a.shape == self.b.shape == self.c.shape == self.d.shape):
            raise ValueError("cost coefficient arrays must share a shape")
        if np.any(self.c < 0) or np.any(self.d < 0):
            raise ValueError("quadratic cost coefficients must be nonnegative")

    @classmethod
    def with_q_ratio(cls, a, b, c, eta_q: float) -> "CostModel":
        """Reactive-power quadratic cost tied to the active one: d = eta_q * c."""
        c = np.asarray(c, dtype=float)
        return cls(np.asarray(a, float), np.asarray(b, float), c, eta_q * c)

    @property
    def p_only(self) -> bool:
        return bool(np.all(self.d == 0.0))


@dataclass(frozen=True)
class GenLimits:
    p_min: np.ndarray
    p_max: np.ndarray
    q_min: np.ndarray
    q_max: np.ndarray

    def __post_init__(self):
        for name in ("p_min", "p_max", "q_min", "q_max"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(self.p_min > self.p_max) or np.any(self.q_min > self.q_max):
            raise ValueError("generator limits must satisfy lower <= upper")


@dataclass(frozen=True)
class DecisionVector:
    P_G: np.ndarray  # per inverter bus
    Q_G: np.ndarray
    V: np.ndarray  # per bus
    theta: np.ndarray  # per bus; theta[ref] == 0


@dataclass(frozen=True)
class ConstraintBundle:
    eq: np.ndarray
    eq_jac: np.ndarray
    ineq: np.ndarray
    ineq_jac: np.ndarray
    labels: tuple[tuple[str, int], ...]  # one (kind, id) label per inequality row


@dataclass
class OpfProblem:
    net: Network
    B: SusceptanceMatrix
    cost: CostModel
    stab: StabilityConstraintSet | None
    limits: GenLimits
    fix_ref_voltage: float | None = None

    # derived indexing, populated by assemble()
    gen_buses: tuple[int, ...] = ()
    gen_pos: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    ref_pos: int = 0
    v_var: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    t_var: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    n_var: int = 0
    stab_rows: tuple[tuple[int, int, float], ...] = ()  # (bus pos i, bus pos j, gamma)
    pinned: tuple[int, ...] = ()  # stab row indices held as equalities
    # (from pos, to pos, alpha*b/tap, smax, 1/tap) per branch
    branch_rows: tuple[tuple[int, int, float, float, float], ...] = ()
    ineq_labels: tuple[tuple[str, int], ...] = ()

    # -- variable packing ----------------------------------------------------

    @property
    def nb(self) -> int:
        return self.net.n_bus

    @property
    def ng(self) -> int:
        return len(self.gen_buses)

    def pack(self, dv: DecisionVector) -> np.ndarray:
        x = np.zeros(self.n_var)
        x[: self.ng] = dv.P_G
        x[self.ng : 2 * self.ng] = dv.Q_G
        for k in range(self.nb):
            if self.v_var[k] >= 0:
                x[self.v_var[k]] = dv.V[k]
            if self.t_var[k] >= 0:
                x[self.t_var[k]] = dv.theta[k]
        return x

    def unpack(self, x: np.ndarray) -> DecisionVector:
        V = np.empty(self.nb)
        theta = np.zeros(self.nb)
        for k in range(self.nb):
            V[k] = (
                x[self.v_var[k]]
                if self.v_var[k] >= 0
                else float(self.fix_ref_voltage)
            )
            if self.t_var[k] >= 0:
                theta[k] = x[self.t_var[k]]
        return DecisionVector(
            x[: self.ng].copy(), x[self.ng : 2 * self.ng].copy(), V, theta
        )

    def _vt(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        V = np.empty(self.nb)
        theta = np.zeros(self.nb)
        for k in range(self.nb):
            V[k] = (
                x[self.v_var[k]]
                if self.v_var[k] >= 0
                else float(self.fix_ref_voltage)
            )
            if self.t_var[k] >= 0:
                theta[k] = x[self.t_var[k]]
        return V, theta

    # -- objective -----------------------------------------------------------

    def objective(self, x: np.ndarray) -> float:
        P = x[: self.ng]
        Q = x[self.ng : 2 * self.ng]
        c = self.cost
        return float(np.sum(c.a + c.b * P + c.c * P * P + c.d * Q * Q))

    def objective_gradient(self, x: np.ndarray) -> np.ndarray:
        g = np.zeros(self.n_var)
        P = x[: self.ng]
        Q = x[self.ng : 2 * self.ng]
        g[: self.ng] = self.cost.b + 2.0 * self.cost.c * P
        g[self.ng : 2 * self.ng] = 2.0 * self.cost.d * Q
        return g

    # -- constraints ----------------------------------------------------------

    def _stab_value(self, V, row):
        i, j, gamma = row
        return V[j] - V[i] - gamma

    def equality(self, x: np.ndarray) -> np.ndarray:
        V, theta = self._vt(x)
        P_net, Q_net = injections(self.B.B, V, theta)
        P_D, Q_D = self.net.loads()
        gP = -P_D - P_net
        gQ = -Q_D - Q_net
        gP[self.gen_pos] += x[: self.ng]
        gQ[self.gen_pos] += x[self.ng : 2 * self.ng]
        parts = [gP, gQ]
        if self.pinned:
            parts.append(
                np.array([self._stab_value(V, self.stab_rows[r]) for r in self.pinned])
            )
        return np.concatenate(parts)

    def equality_jacobian(self, x: np.ndarray) -> np.ndarray:
        nb, ng = self.nb, self.ng
        V, theta = self._vt(x)
        dP_dth, dP_dV, dQ_dth, dQ_dV = injection_jacobian_blocks(self.B.B, V, theta)
        J = np.zeros((2 * nb + len(self.pinned), self.n_var))
        for gi, k in enumerate(self.gen_pos):
            J[k, gi] = 1.0
            J[nb + k, ng + gi] = 1.0
        for col in range(nb):
            vv, tv = self.v_var[col], self.t_var[col]
            if vv >= 0:
                J[:nb, vv] = -dP_dV[:, col]
                J[nb : 2 * nb, vv] = -dQ_dV[:, col]
            if tv >= 0:
                J[:nb, tv] -= dP_dth[:, col]
                J[nb : 2 * nb, tv] -= dQ_dth[:, col]
        for r_out, r in enumerate(self.pinned):
            i, j, _ = self.stab_rows[r]
            if self.v_var[j] >= 0:
                J[2 * nb + r_out, self.v_var[j]] = 1.0
            if self.v_var[i] >= 0:
                J[2 * nb + r_out, self.v_var[i]] = -1.0
        return J

    def _branch_terms(self, V, theta, row):
        i, j, b, smax, inv_a = row
        c = np.cos(theta[i] - theta[j])
        s = np.sin(theta[i] - theta[j])
        u = inv_a * V[i] * V[i] - V[i] * V[j] * c
        w = V[i] * V[j] * s
        return i, j, b, smax, c, s, u, w, inv_a

    def inequality(self, x: np.ndarray) -> np.ndarray:
        ng = self.ng
        P = x[:ng]
        Q = x[ng : 2 * ng]
        V, theta = self._vt(x)
        vals = [
            P - self.limits.p_max,
            self.limits.p_min - P,
            Q - self.limits.q_max,
            self.limits.q_min - Q,
        ]
        v_lo, v_hi = self.net.voltage_bounds()
        free = self.v_var >= 0
        vals.append((V - v_hi)[free])
        vals.append((v_lo - V)[free])
        br = np.empty(len(self.branch_rows))
        for r, row in enumerate(self.branch_rows):
            _, _, b, smax, _, _, u, w, _ = self._branch_terms(V, theta, row)
            br[r] = b * b * (u * u + w * w) - smax * smax
        vals.append(br)
        free_rows = [r for r in range(len(self.stab_rows)) if r not in self.pinned]
        st = np.array([self._stab_value(V, self.stab_rows[r]) for r in free_rows])
        vals.append(st)
        return np.concatenate(vals)

    def inequality_jacobian(self, x: np.ndarray) -> np.ndarray:
        ng, nb = self.ng, self.nb
        V, theta = self._vt(x)
        rows = []
        eye = np.zeros((ng, self.n_var))
        eye[:, :ng] = np.eye(ng)
        rows.append(eye)  # P - p_max
        rows.append(-eye)  # p_min - P
        eyq = np.zeros((ng, self.n_var))
        eyq[:, ng : 2 * ng] = np.eye(ng)
        rows.append(eyq)
        rows.append(-eyq)
        free = [k for k in range(nb) if self.v_var[k] >= 0]
        vb = np.zeros((len(free), self.n_var))
        for r, k in enumerate(free):
            vb[r, self.v_var[k]] = 1.0
        rows.append(vb)  # V - v_hi
        rows.append(-vb)  # v_lo - V
        br = np.zeros((len(self.branch_rows), self.n_var))
        for r, row in enumerate(self.branch_rows):
            i, j, b, _, c, s, u, w, inv_a = self._branch_terms(V, theta, row)
            f = 2.0 * b * b
            # d/dVi, d/dVj, d/dth_i, d/dth_j of u and w
            du = (2 * inv_a * V[i] - V[j] * c, -V[i] * c, V[i] * V[j] * s, -V[i] * V[j] * s)
            dw = (V[j] * s, V[i] * s, V[i] * V[j] * c, -V[i] * V[j] * c)
            cols = (self.v_var[i], self.v_var[j], self.t_var[i], self.t_var[j])
            for col, duk, dwk in zip(cols, du, dw):
                if col >= 0:
                    br[r, col] += f * (u * duk + w * dwk)
        rows.append(br)
        free_rows = [r for r in range(len(self.stab_rows)) if r not in self.pinned]
        st = np.zeros((len(free_rows), self.n_var))
        for r_out, r in enumerate(free_rows):
            i, j, _ = self.stab_rows[r]
            if self.v_var[j] >= 0:
                st[r_out, self.v_var[j]] = 1.0
            if self.v_var[i] >= 0:
                st[r_out, self.v_var[i]] = -1.0
        rows.append(st)
        return np.vstack(rows)

    def lagrangian_hessian(self, x, lam, mu) -> np.ndarray:
        nb, ng = self.nb, self.ng
        H = np.zeros((self.n_var, self.n_var))
        H[np.arange(ng), np.arange(ng)] = 2.0 * self.cost.c
        H[np.arange(ng, 2 * ng), np.arange(ng, 2 * ng)] = 2.0 * self.cost.d
        V, theta = self._vt(x)
        # power balance rows enter with residual g = ... - injection
        wP = -lam[:nb]
        wQ = -lam[nb : 2 * nb]
        H2 = weighted_injection_hessian(self.B.B, V, theta, wP, wQ)
        idx = np.concatenate([self.t_var, self.v_var])  # H2 order: theta then V
        for a in range(2 * nb):
            ia = idx[a]
            if ia < 0:
                continue
            for bcol in range(2 * nb):
                ib = idx[bcol]
                if ib >= 0:
                    H[ia, ib] += H2[a, bcol]
        # active branch-flow rows: finite differences of the analytic gradient
        n_op_box = 4 * ng + 2 * int(np.sum(self.v_var >= 0))
        for r, row in enumerate(self.branch_rows):
            m = mu[n_op_box + r]
            if m == 0.0:
                continue
            i, j, b, smax, inv_a = row
            cols = [c for c in (self.v_var[i], self.v_var[j], self.t_var[i], self.t_var[j]) if c >= 0]
            hstep = 1e-6
            for col in cols:
                xp = x.copy()
                xp[col] += hstep
                xm = x.copy()
                xm[col] -= hstep
                gp = self._branch_grad_cols(xp, row, cols)
                gm = self._branch_grad_cols(xm, row, cols)
                H[np.ix_(cols, [col])] += (m * (gp - gm) / (2 * hstep))[:, None]
        return 0.5 * (H + H.T)

    def _branch_grad_cols(self, x, row, cols):
        V, theta = self._vt(x)
        i, j, b, _, c, s, u, w, inv_a = self._branch_terms(V, theta, row)
        f = 2.0 * b * b
        du = {self.v_var[i]: 2 * inv_a * V[i] - V[j] * c, self.v_var[j]: -V[i] * c,
              self.t_var[i]: V[i] * V[j] * s, self.t_var[j]: -V[i] * V[j] * s}
        dw = {self.v_var[i]: V[j] * s, self.v_var[j]: V[i] * s,
              self.t_var[i]: V[i] * V[j] * c, self.t_var[j]: -V[i] * V[j] * c}
        return np.array([f * (u * du.get(col, 0.0) + w * dw.get(col, 0.0)) for col in cols])

    def as_nlp(self) -> NlpProblem:
        return NlpProblem(
            n=self.n_var,
            objective=self.objective,
            gradient=self.objective_gradient,
            eq_constraints=self.equality,
            eq_jacobian=self.equality_jacobian,
            ineq_constraints=self.inequality,
            ineq_jacobian=self.inequality_jacobian,
            lagrangian_hessian=self.lagrangian_hessian,
        )


@dataclass(frozen=True)
class OpfSolution:
    x: DecisionVector
    objective: float
    lam_P: np.ndarray  # per bus
    lam_Q: np.ndarray
    nu_op: np.ndarray  # operational inequality multipliers (box + branch rows)
    mu_stab: np.ndarray  # stability multipliers, one per stab row (pinned included)
    active_set: tuple[str, ...]
    kkt_residual: float
    status: str  # optimal | infeasible | max_iter | degenerate
    iterations: int = 0
    start_index: int = -1
    message: str = ""
    op_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    op_labels: tuple[tuple[str, int], ...] = ()
    stab_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    stab_pairs: tuple[tuple[int, int], ...] = ()  # (constrained bus id, neighbor id)

    def operational_slacks(self) -> np.ndarray:
        """Slack (>= 0 means satisfied) of every non-stability inequality."""
        return -self.op_values

    def stab_slacks(self) -> np.ndarray:
        return -self.stab_values


def assemble(
    net: Network,
    B: SusceptanceMatrix,
    cost: CostModel,
    stab: StabilityConstraintSet | None,
    limits: GenLimits,
    fix_ref_voltage: float | None = None,
    pin_stab: Sequence[int] = (),
) -> OpfProblem:
    """Build the optimization problem around callable evaluators.

    pin_stab lists stability rows to hold as equalities; used to select the
    boundary representative of a flat optimal manifold when a study reports
    a binding-but-zero-price solution. The caller is responsible for
    verifying that the pinned solve is a KKT point of the original problem
    (same objective, nonnegative multiplier on the pinned row).
    """
    if tuple(B.bus_ids) != tuple(net.bus_ids):
        raise ValueError("susceptance matrix was built from a different network")
    gen_buses = net.inverter_ids
    ng = len(gen_buses)
    for arr in (cost.a, limits.p_min):
        if arr.shape != (ng,):
            raise ValueError("cost/limit arrays must have one entry per inverter bus")
    if stab is not None:
        if not set(stab.red.kept) <= set(gen_buses):
            raise ValueError("stability constraint set references non-inverter buses")

    prob = OpfProblem(net, B, cost, stab, limits, fix_ref_voltage)
    prob.pinned = tuple(sorted(set(int(r) for r in pin_stab)))
    prob.gen_buses = gen_buses
    prob.gen_pos = np.array([net.index_of(i) for i in gen_buses])
    prob.ref_pos = net.index_of(net.ref_bus)

    nb = net.n_bus
    v_var = np.full(nb, -1, dtype=int)
    t_var = np.full(nb, -1, dtype=int)
    nxt = 2 * ng
    for k in range(nb):
        if fix_ref_voltage is not None and k == prob.ref_pos:
            continue
        v_var[k] = nxt
        nxt += 1
    for k in range(nb):
        if k == prob.ref_pos:
            continue
        t_var[k] = nxt
        nxt += 1
    prob.v_var, prob.t_var, prob.n_var = v_var, t_var, nxt

    idx = {bid: net.index_of(bid) for bid in net.bus_ids}
    prob.branch_rows = tuple(
        (idx[br.from_bus], idx[br.to_bus], B.alpha * br.b / br.tap, br.S_max, 1.0 / br.tap)
        for br in net.branches
    )
    if stab is not None:
        kept_pos = [idx[bid] for bid in stab.red.kept]
        prob.stab_rows = tuple(
            (kept_pos[c.i], kept_pos[c.j], c.gamma) for c in stab.constraints
        )
    if any(r >= len(prob.stab_rows) for r in prob.pinned):
        raise ValueError("pin_stab references a stability row that does not exist")
    labels: list[tuple[str, int]] = []
    labels += [("pg_max", i) for i in range(ng)]
    labels += [("pg_min", i) for i in range(ng)]
    labels += [("qg_max", i) for i in range(ng)]
    labels += [("qg_min", i) for i in range(ng)]
    free = [k for k in range(nb) if v_var[k] >= 0]
    labels += [("v_max", k) for k in free]
    labels += [("v_min", k) for k in free]
    labels += [("branch", r) for r in range(len(prob.branch_rows))]
    labels += [("stab", r) for r in range(len(prob.stab_rows)) if r not in prob.pinned]
    prob.ineq_labels = tuple(labels)
    return prob


def evaluate_constraints(prob: OpfProblem, dv: DecisionVector) -> ConstraintBundle:
    """Equality residuals, inequality values, and their analytic Jacobians."""
    x = prob.pack(dv)
    return ConstraintBundle(
        eq=prob.equality(x),
        eq_jac=prob.equality_jacobian(x),
        ineq=prob.inequality(x),
        ineq_jac=prob.inequality_jacobian(x),
        labels=prob.ineq_labels,
    )


def newton_power_flow(
    net: Network,
    B: SusceptanceMatrix,
    V_spec: dict[int, float],
    P_sched: dict[int, float] | None = None,
    tol: float = 1e-12,
    max_iter: int = 40,
) -> DecisionVector:
    """Feasible operating point: classic Newton power flow on the lossless net.

    Buses in V_spec hold their voltage magnitude (PV behavior); the reference
    bus absorbs the active-power imbalance. Scheduled generator injections
    come from P_sched (defaults to a uniform split of the total load). The
    result satisfies every power-balance equation, with generator P/Q backed
    out from the solved injections; limits are NOT enforced here.
    """
    nb = net.n_bus
    P_D, Q_D = net.loads()
    gen_ids = net.inverter_ids
    ref = net.index_of(net.ref_bus)
    if P_sched is None:
        share = float(np.sum(P_D)) / len(gen_ids)
        P_sched = {i: share for i in gen_ids}
    P_inj = -P_D.copy()
    for bid, p in P_sched.items():
        P_inj[net.index_of(bid)] += p

    spec_pos = {net.index_of(bid): v for bid, v in V_spec.items()}
    V = np.ones(nb)
    for k, v in spec_pos.items():
        V[k] = v
    theta = np.zeros(nb)
    th_un = [k for k in range(nb) if k != ref]
    v_un = [k for k in range(nb) if k not in spec_pos]

    for _ in range(max_iter):
        P_net, Q_net = injections(B.B, V, theta)
        rP = (P_inj - P_net)[th_un]
        rQ = (-Q_D - Q_net)[v_un]
        mis = np.concatenate([rP, rQ])
        if float(np.max(np.abs(mis))) < tol:
            break
        dP_dth, dP_dV, dQ_dth, dQ_dV = injection_jacobian_blocks(B.B, V, theta)
        J = np.zeros((len(th_un) + len(v_un),) * 2)
        J[: len(th_un), : len(th_un)] = dP_dth[np.ix_(th_un, th_un)]
        J[: len(th_un), len(th_un) :] = dP_dV[np.ix_(th_un, v_un)]
        J[len(th_un) :, : len(th_un)] = dQ_dth[np.ix_(v_un, th_un)]
        J[len(th_un) :, len(th_un) :] = dQ_dV[np.ix_(v_un, v_un)]
        try:
            step = np.linalg.solve(J, mis)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(J, mis, rcond=None)
        theta[th_un] += step[: len(th_un)]
        V[v_un] += step[len(th_un) :]

    P_net, Q_net = injections(B.B, V, theta)
    gpos = [net.index_of(i) for i in gen_ids]
    return DecisionVector(
        P_G=(P_D + P_net)[gpos],
        Q_G=(Q_D + Q_net)[gpos],
        V=V,
        theta=theta,
    )


def default_starts(
    prob: OpfProblem, n_random: int = 8, seed: int = 0, base: DecisionVector | None = None
) -> list[DecisionVector]:
    """Flat start (uniform load split, V = 1) plus seeded perturbations."""
    net = prob.net
    P_D, Q_D = net.loads()
    ng = prob.ng
    share_p = float(np.sum(P_D)) / ng
    share_q = float(np.sum(Q_D)) / ng
    flat = DecisionVector(
        P_G=np.clip(np.full(ng, share_p), prob.limits.p_min, prob.limits.p_max),
        Q_G=np.clip(np.full(ng, share_q), prob.limits.q_min, prob.limits.q_max),
        V=np.ones(net.n_bus),
        theta=np.zeros(net.n_bus),
    )
    starts = [base, flat] if base is not None else [flat]
    rng = np.random.default_rng(seed)
    ref = base if base is not None else flat
    for _ in range(n_random):
        V = ref.V + rng.uniform(-0.03, 0.03, net.n_bus)
        theta = ref.theta + rng.uniform(-0.05, 0.05, net.n_bus)
        theta[prob.ref_pos] = 0.0
        if prob.fix_ref_voltage is not None:
            V[prob.ref_pos] = prob.fix_ref_voltage
        starts.append(
            DecisionVector(
                P_G=np.clip(ref.P_G * rng.uniform(0.8, 1.2, ng), prob.limits.p_min, prob.limits.p_max),
                Q_G=np.clip(ref.Q_G + rng.uniform(-0.2, 0.2, ng), prob.limits.q_min, prob.limits.q_max),
                V=V,
                theta=theta,
            )
        )
    return starts


def _hessian_init(prob: OpfProblem) -> np.ndarray:
    diag = np.concatenate(
        [
            np.maximum(2.0 * prob.cost.c, 1e-2),
            np.maximum(2.0 * prob.cost.d, 1e-2),
            np.full(prob.n_var - 2 * prob.ng, 1.0),
        ]
    )
    return np.diag(diag)


def _to_solution(prob: OpfProblem, res: SqpResult, start_index: int) -> OpfSolution:
    nb = prob.nb
    n_stab = len(prob.stab_rows)
    n_free = n_stab - len(prob.pinned)
    mu = res.mu_ineq
    nu_op = mu[: mu.size - n_free] if mu.size else mu
    mu_free = mu[mu.size - n_free :] if n_free else np.zeros(0)
    mu_stab = np.zeros(n_stab)
    free_rows = [r for r in range(n_stab) if r not in prob.pinned]
    for k, r in enumerate(free_rows):
        mu_stab[r] = mu_free[k]
    for k, r in enumerate(prob.pinned):
        mu_stab[r] = res.lam_eq[2 * nb + k]
    ineq_vals = prob.inequality(res.x)
    op_values = ineq_vals[: ineq_vals.size - n_free]
    dv = prob.unpack(res.x)
    stab_values = np.array(
        [prob._stab_value(dv.V, row) for row in prob.stab_rows]
    )
    op_labels = prob.ineq_labels[: len(prob.ineq_labels) - n_free]
    act = [
        f"{kind}[{i}]"
        for (kind, i), v in zip(op_labels, op_values)
        if abs(v) <= 1e-6
    ]
    act += [f"stab[{r}]" for r in range(n_stab) if abs(stab_values[r]) <= 1e-6]
    status = {
        "optimal": "optimal",
        "degenerate": "degenerate",
        "max_iter": "max_iter",
        "line_search_failure": "max_iter",
        "infeasible": "infeasible",
    }.get(res.status, res.status)
    return OpfSolution(
        x=dv,
        objective=res.f,
        lam_P=res.lam_eq[:nb],
        lam_Q=res.lam_eq[nb : 2 * nb],
        nu_op=nu_op,
        mu_stab=mu_stab,
        active_set=tuple(act),
        kkt_residual=res.kkt.total,
        status=status,
        iterations=res.iterations,
        start_index=start_index,
        message=res.message,
        op_values=op_values,
        op_labels=op_labels,
        stab_values=stab_values,
        stab_pairs=tuple(
            (prob.net.bus_ids[i], prob.net.bus_ids[j]) for i, j, _ in prob.stab_rows
        ),
    )


def solve(
    prob: OpfProblem,
    starts: Sequence[DecisionVector] | None = None,
    tol: float = 1e-8,
    max_iter: int = 200,
    seed: int = 0,
) -> OpfSolution:
    """Best KKT point across the given starts (lowest objective wins).

    Every returned multiplier belongs to the Lagrangian convention in the
    module docstring; status reflects the best start's termination.
    """
    if starts is None:
        starts = default_starts(prob, seed=seed)
    if not starts:
        raise ValueError("need at least one start")
    nlp = prob.as_nlp()
    B0 = _hessian_init(prob)
    results: list[OpfSolution] = []
    for si, dv in enumerate(starts):
        res = solve_sqp(nlp, prob.pack(dv), tol=tol, max_iter=max_iter, hessian_init=B0)
        results.append(_to_solution(prob, res, si))
    good = [r for r in results if r.status == "optimal"]
    if good:
        return min(good, key=lambda r: r.objective)
    degen = [r for r in results if r.status == "degenerate"]
    if degen:
        return min(degen, key=lambda r: r.objective)
    # no start converged: return the most feasible attempt for diagnostics
    return min(results, key=lambda r: r.kkt_residual)


def solve_sweep(
    make_problem: Callable[[float], OpfProblem],
    parameter_axis: Sequence[float],
    warm_start: bool = True,
    tol: float = 1e-8,
    seed: int = 0,
    n_random: int = 2,
) -> list[tuple[float, OpfSolution]]:
    """Solve a family of problems along a monotone parameter axis.

    With warm_start, each solve's start list is headed by the previous
    solution; per-point failures are recorded and the sweep continues.
    """
    axis = list(parameter_axis)
    if len(axis) > 1:
        d = np.diff(axis)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("parameter axis must be monotone")
    out: list[tuple[float, OpfSolution]] = []
    prev: DecisionVector | None = None
    for p in axis:
        prob = make_problem(p)
        starts = default_starts(prob, n_random=n_random, seed=seed, base=prev)
        sol = solve(prob, starts, tol=tol)
        out.append((p, sol))
        if warm_start and sol.status in ("optimal", "degenerate"):
            prev = sol.x
    return out


def solution_record(prob: OpfProblem, sol: OpfSolution, params: dict | None = None) -> dict:
    """Line-serializable record of one solve (for the JSONL solution log)."""
    digest = hashlib.sha256()
    payload = {
        "buses": [(b.id, b.kind, b.P_D, b.Q_D, b.V_min, b.V_max) for b in prob.net.buses],
        "branches": [(br.from_bus, br.to_bus, br.b, br.S_max, br.tap) for br in prob.net.branches],
        "alpha": prob.B.alpha,
        "cost": [prob.cost.a.tolist(), prob.cost.b.tolist(), prob.cost.c.tolist(), prob.cost.d.tolist()],
        "limits": [prob.limits.p_min.tolist(), prob.limits.p_max.tolist(),
                   prob.limits.q_min.tolist(), prob.limits.q_max.tolist()],
        "stab": [(i, j, g) for i, j, g in prob.stab_rows],
        "fix_ref_voltage": prob.fix_ref_voltage,
    }
    digest.update(json.dumps(payload, sort_keys=True).encode())
    return {
        "problem_hash": digest.hexdigest()[:16],
        "params": params or {},
        "status": sol.status,
        "objective": sol.objective,
        "kkt_residual": sol.kkt_residual,
        "P_G": sol.x.P_G.tolist(),
        "Q_G": sol.x.Q_G.tolist(),
        "V": sol.x.V.tolist(),
        "theta": sol.x.theta.tolist(),
        "lam_P": sol.lam_P.tolist(),
        "lam_Q": sol.lam_Q.tolist(),
        "nu_op": sol.nu_op.tolist(),
        "mu_stab": sol.mu_stab.tolist(),
        "active_set": list(sol.active_set),
    }
