"""Economic interpretation of the stability constraints.

Post-processing of solved OPF instances: per-bus aggregation of stability
multipliers (nodal stability shadow prices), the max-form/split-form
multiplier correspondence, numerical verification that binding stability
constraints carry zero prices under active-power-only cost in a lossless
network, reduced (tangent-space) stationarity checks, and construction of
cost coefficients that realize a strictly positive stability price at a
given operating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .netmodel import ReducedNetwork
from .opfcore import CostModel, DecisionVector, OpfProblem, OpfSolution, solve

__all__ = [
    "NsspReport",
    "MaxFormMultipliers",
    "Theorem1Report",
    "StationarityCheck",
    "CostSearchResult",
    "BINDING_TOL",
    "STRICT_SLACK",
    "compute_nssp",
    "aggregate_max_multiplier",
    "verify_zero_price_structure",
    "verify_reduced_stationarity",
    "find_positive_price_costs",
]

BINDING_TOL = 1e-6  # |h| below this counts as binding
STRICT_SLACK = 1e-4  # slack above this counts as strictly inactive


@dataclass(frozen=True)
class NsspReport:
    """Nodal stability shadow price: per-bus sum of pair multipliers."""

    values: dict[int, float]  # bus id -> sum of its constraints' multipliers
    contributions: tuple[tuple[int, int, float], ...]  # (bus i, bus j, mu_ij)
    binding: tuple[bool, ...]  # per stability row

    def value_array(self, red: ReducedNetwork) -> np.ndarray:
        return np.array([self.values[b] for b in red.kept])


def compute_nssp(sol: OpfSolution, red: ReducedNetwork) -> NsspReport:
    """Sum the split-constraint multipliers onto their constrained bus.

    By complementary slackness only binding pairs contribute; the sum is an
    identity, not an estimate.
    """
    values = {b: 0.0 for b in red.kept}
    contributions = []
    for (bi, bj), mu in zip(sol.stab_pairs, sol.mu_stab):
        values[bi] += float(mu)
        contributions.append((bi, bj, float(mu)))
    binding = tuple(bool(abs(v) <= BINDING_TOL) for v in sol.stab_values)
    return NsspReport(values, tuple(contributions), binding)


@dataclass(frozen=True)
class MaxFormMultipliers:
    """Chosen multipliers for the per-bus max-form constraint."""

    lam: dict[int, float]  # bus id -> max-form multiplier (= split sum)
    weights: dict[int, dict[int, float]]  # bus id -> {neighbor: alpha_ij}


def aggregate_max_multiplier(sol: OpfSolution) -> MaxFormMultipliers:
    """Split-form multipliers summed per bus, with the convex-combination
    weights that reproduce the max-form subgradient."""
    lam: dict[int, float] = {}
    groups: dict[int, list[tuple[int, float]]] = {}
    for (bi, bj), mu in zip(sol.stab_pairs, sol.mu_stab):
        lam[bi] = lam.get(bi, 0.0) + float(mu)
        groups.setdefault(bi, []).append((bj, float(mu)))
    weights: dict[int, dict[int, float]] = {}
    for bi, pairs in groups.items():
        tot = lam[bi]
        if tot > 0.0:
            weights[bi] = {bj: mu / tot for bj, mu in pairs}
        else:
            weights[bi] = {}
    return MaxFormMultipliers(lam, weights)


def _positively_linearly_independent(alphas: np.ndarray) -> bool:
    """True iff no nonzero nonnegative combination of the rows vanishes."""
    m = alphas.shape[0]
    if m == 0:
        return True
    res = linprog(
        c=-np.ones(m),
        A_eq=alphas.T,
        b_eq=np.zeros(alphas.shape[1]),
        bounds=[(0.0, 1.0)] * m,
        method="highs",
    )
    if not res.success:
        return False
    return float(-res.fun) <= 1e-9


@dataclass(frozen=True)
class Theorem1Report:
    applicable: bool
    violated_hypothesis: str | None
    passed: bool
    n_binding_stab: int
    max_binding_mu: float
    lam_P_spread: float
    lam_Q_max: float
    details: str = ""


def verify_zero_price_structure(sol: OpfSolution, prob: OpfProblem) -> Theorem1Report:
    """Check the zero-shadow-price structure of binding stability constraints.

    Hypotheses: active-power-only cost, every operational inequality strictly
    inactive, and positively linearly independent active stability rows (the
    network is lossless by construction). When they hold, every binding
    stability constraint must carry a (numerically) zero multiplier, all
    active-power balance multipliers must agree, and the reactive balance
    multipliers must vanish. An unmet hypothesis yields "not applicable",
    never a silent pass.
    """
    def na(reason: str) -> Theorem1Report:
        return Theorem1Report(False, reason, False, 0, np.nan, np.nan, np.nan)

    if sol.status not in ("optimal",):
        return na(f"solution status is {sol.status}")
    if not prob.cost.p_only:
        return na("objective includes reactive-power cost (d != 0)")
    op_slack = sol.operational_slacks()
    if op_slack.size and float(np.min(op_slack)) <= STRICT_SLACK:
        k = int(np.argmin(op_slack))
        kind, i = sol.op_labels[k]
        return na(f"operational inequality {kind}[{i}] is not strictly inactive "
                  f"(slack {op_slack[k]:.2e})")
    binding = [r for r, v in enumerate(sol.stab_values) if abs(v) <= BINDING_TOL]
    n_red = len(prob.stab.red.kept) if prob.stab is not None else 0
    if binding:
        kept_index = {b: k for k, b in enumerate(prob.stab.red.kept)}
        alphas = np.zeros((len(binding), n_red))
        for row, r in enumerate(binding):
            bi, bj = sol.stab_pairs[r]
            alphas[row, kept_index[bj]] = 1.0
            alphas[row, kept_index[bi]] = -1.0
        if not _positively_linearly_independent(alphas):
            return na("active stability rows are not positively linearly independent")

    max_mu = float(np.max(np.abs(sol.mu_stab[binding]))) if binding else 0.0
    spread = float(np.max(sol.lam_P) - np.min(sol.lam_P))
    lamq = float(np.max(np.abs(sol.lam_Q)))
    passed = max_mu <= 1e-6 and spread <= 1e-6 and lamq <= 1e-6
    return Theorem1Report(
        True, None, passed, len(binding), max_mu, spread, lamq,
        details=f"binding rows {binding}",
    )


@dataclass(frozen=True)
class StationarityCheck:
    reduced_gradient_norm: float  # || Zt grad J + mu Zt grad h ||_inf
    tangent_basis_dim: int
    projected_objective_gradient: np.ndarray
    projected_constraint_gradient: np.ndarray
    implied_mu: float
    sosc_min_curvature: float | None = None
    sosc_directions: int = 0


def _equality_tangent_basis(prob: OpfProblem, x: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the power-balance tangent space at x."""
    JE = prob.equality_jacobian(x)[: 2 * prob.nb]  # pinned rows are not part of g
    U, s, Vt = np.linalg.svd(JE)
    tol = 1e-8 * (s[0] if s.size else 1.0)
    rank = int(np.sum(s > tol))
    if rank < JE.shape[0]:
        raise ValueError(
            f"equality Jacobian is rank-deficient (rank {rank} of {JE.shape[0]})"
        )
    return Vt[rank:].T  # columns span the null space


def _stab_gradient(prob: OpfProblem, row: int) -> np.ndarray:
    i, j, _ = prob.stab_rows[row]
    g = np.zeros(prob.n_var)
    if prob.v_var[j] >= 0:
        g[prob.v_var[j]] = 1.0
    if prob.v_var[i] >= 0:
        g[prob.v_var[i]] = -1.0
    return g


def verify_reduced_stationarity(
    sol: OpfSolution,
    prob: OpfProblem,
    constraint_index: int,
    sosc_probe: bool = True,
    n_directions: int = 20,
    seed: int = 0,
) -> StationarityCheck:
    """Project the stationarity relation onto the equality tangent space.

    Requires the given stability constraint to be the only active
    inequality ("independently binding"). The implied multiplier solves the
    projected relation in least squares; a sampled-curvature probe of the
    Lagrangian along tangent directions that keep the constraint active is
    reported as second-order evidence, not proof.
    """
    active_stab = [r for r, v in enumerate(sol.stab_values) if abs(v) <= BINDING_TOL]
    if active_stab != [constraint_index]:
        raise ValueError(
            f"constraint {constraint_index} is not independently binding among the "
            f"stability rows (active: {active_stab})"
        )
    op_slack = sol.operational_slacks()
    if op_slack.size and float(np.min(op_slack)) <= BINDING_TOL:
        k = int(np.argmin(op_slack))
        kind, i = sol.op_labels[k]
        raise ValueError(f"operational inequality {kind}[{i}] is also active")

    x = prob.pack(sol.x)
    Z = _equality_tangent_basis(prob, x)
    gz = Z.T @ prob.objective_gradient(x)
    hz = Z.T @ _stab_gradient(prob, constraint_index)
    denom = float(hz @ hz)
    mu = -float(gz @ hz) / denom if denom > 0 else 0.0
    resid = float(np.max(np.abs(gz + mu * hz))) if gz.size else 0.0

    min_curv = None
    n_dir = 0
    if sosc_probe and Z.shape[1] > 1:
        # directions tangent to the equalities and to the active constraint
        hz_unit = hz / np.linalg.norm(hz) if denom > 0 else hz
        rng = np.random.default_rng(seed)
        lam_full = np.concatenate([sol.lam_P, sol.lam_Q])

        def lagrangian(xx):
            g = prob.equality(xx)[: 2 * prob.nb]
            h = prob._vt(xx)[0]
            i, j, gamma = prob.stab_rows[constraint_index]
            hs = h[j] - h[i] - gamma
            return prob.objective(xx) + float(lam_full @ g) + mu * hs

        t = 1e-4
        L0 = lagrangian(x)
        min_curv = np.inf
        for _ in range(n_directions):
            d = Z @ rng.standard_normal(Z.shape[1])
            if denom > 0:
                d = d - (d @ (Z @ hz_unit)) * (Z @ hz_unit)
            nd = np.linalg.norm(d)
            if nd < 1e-12:
                continue
            d /= nd
            curv = (lagrangian(x + t * d) - 2 * L0 + lagrangian(x - t * d)) / (t * t)
            min_curv = min(min_curv, float(curv))
            n_dir += 1
    return StationarityCheck(
        reduced_gradient_norm=resid,
        tangent_basis_dim=Z.shape[1],
        projected_objective_gradient=gz,
        projected_constraint_gradient=hz,
        implied_mu=mu,
        sosc_min_curvature=min_curv,
        sosc_directions=n_dir,
    )


@dataclass(frozen=True)
class CostSearchResult:
    found: bool
    cost: CostModel | None
    mu_target: float
    certificate: str = ""
    verification: OpfSolution | None = None
    verified: bool = False


def find_positive_price_costs(
    prob_template: OpfProblem,
    target: DecisionVector,
    constraint_index: int,
    mu_target: float = 1.0,
    d_floor: float = 1e-2,
    force_p_only: bool = False,
    verify: bool = True,
    tol: float = 1e-8,
) -> CostSearchResult:
    """Cost coefficients making the target point reduced-stationary with a
    strictly positive price on the given stability constraint.

    Solves the linear system mapping rho = (b, c, d) to the projected
    objective gradient, with rho >= 0 and (unless force_p_only) at least
    d_floor of total reactive quadratic cost, then confirms by re-solving the
    OPF with the found coefficients.
    """
    prob = prob_template
    ng = prob.ng
    x = prob.pack(target)
    Z = _equality_tangent_basis(prob, x)
    # rows of the objective-gradient map over (P_G, Q_G); V/theta rows vanish
    D = np.zeros((prob.n_var, 3 * ng))
    P = x[:ng]
    Q = x[ng : 2 * ng]
    for k in range(ng):
        D[k, k] = 1.0  # dJ/dP_k from b_k
        D[k, ng + k] = 2.0 * P[k]  # from c_k
        D[ng + k, 2 * ng + k] = 2.0 * Q[k]  # dJ/dQ_k from d_k
    A = Z.T @ D
    hz = Z.T @ _stab_gradient(prob, constraint_index)

    nr = 3 * ng
    bounds = [(0.0, None)] * nr
    A_eq = A
    b_eq = -mu_target * hz
    A_ub = None
    b_ub = None
    if force_p_only:
        for k in range(2 * ng, 3 * ng):
            bounds[k] = (0.0, 0.0)
    else:
        row = np.zeros(nr)
        row[2 * ng :] = -1.0  # sum(d) >= d_floor
        A_ub = row[None, :]
        b_ub = np.array([-d_floor])
    res = linprog(
        c=np.ones(nr),
        A_eq=A_eq,
        b_eq=b_eq,
        A_ub=A_ub,
        b_ub=b_ub,
        bounds=bounds,
        method="highs",
    )
    if not res.success:
        return CostSearchResult(
            False, None, mu_target,
            certificate=f"linear program infeasible: {res.message}",
        )
    rho = res.x
    cost = CostModel(
        a=np.zeros(ng), b=rho[:ng], c=rho[ng : 2 * ng], d=rho[2 * ng :]
    )
    result = CostSearchResult(True, cost, mu_target, verification=None)
    if not verify:
        return result
    from .opfcore import assemble  # local import to avoid a cycle at module load

    vprob = assemble(
        prob.net, prob.B, cost, prob.stab, prob.limits,
        fix_ref_voltage=prob.fix_ref_voltage,
    )
    vsol = solve(vprob, [target], tol=tol)
    ok = (
        vsol.status == "optimal"
        and abs(vsol.stab_values[constraint_index]) <= BINDING_TOL
        and vsol.mu_stab[constraint_index] > 1e-8
    )
    return CostSearchResult(True, cost, mu_target, verification=vsol, verified=ok)
