import numpy as np
import pytest

from stabopf.dynamics import (
    InverterParams,
    OperatingPoint,
    eigen_stability,
    injection_jacobian,
    linearize,
    reference_params,
)
from stabopf.eigensolve import real_eigenvalues
from stabopf.injections import injections
from stabopf.netmodel import Branch, Bus, Network, build_susceptance, kron_reduce

from conftest import finite_difference_jacobian


def random_reduced(rng, n):
    """Connected random reduced network with unit-ish couplings."""
    buses = tuple(Bus(i + 1, "inverter") for i in range(n))
    branches = [
        Branch(i + 1, i + 2, float(rng.uniform(0.5, 5.0)), 10.0) for i in range(n - 1)
    ]
    for _ in range(n // 2):
        i, j = rng.choice(n, size=2, replace=False) + 1
        if i != j and all({b.from_bus, b.to_bus} != {i, j} for b in branches):
            branches.append(Branch(int(i), int(j), float(rng.uniform(0.5, 5.0)), 10.0))
    net = Network(buses, tuple(branches), ref_bus=1)
    return kron_reduce(build_susceptance(net), net)


def random_op(rng, n):
    return OperatingPoint(
        V=rng.uniform(0.9, 1.1, n), theta=np.concatenate([[0.0], rng.uniform(-0.5, 0.5, n - 1)])
    )


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        InverterParams(m_p=6, m_q=0.0, tau_p=0.1, tau_q=0.1)


def test_jacobian_zero_angle_decoupling(two_bus_reduced):
    _, red = two_bus_reduced
    red8 = type(red)(0.8 * red.B_red, red.kept, red.neighbors)
    op = OperatingPoint(np.array([1.0, 1.0]), np.zeros(2))
    dP_dth, dP_dV, dQ_dth, dQ_dV = injection_jacobian(red8, op)
    assert np.allclose(dP_dV, 0.0)
    assert np.allclose(dQ_dth, 0.0)
    assert not np.allclose(dP_dth, 0.0)


def test_jacobian_matches_finite_differences(two_bus_reduced):
    _, red = two_bus_reduced
    op = OperatingPoint(np.array([1.0, 1.02]), np.array([0.0, -0.1]))
    dP_dth, dP_dV, dQ_dth, dQ_dV = injection_jacobian(red, op)

    def inj(z):
        P, Q = injections(red.B_red, z[2:], z[:2])
        return np.concatenate([P, Q])

    J = finite_difference_jacobian(inj, np.concatenate([op.theta, op.V]))
    scale = max(1.0, np.abs(J).max())
    assert np.abs(np.block([[dP_dth, dP_dV], [dQ_dth, dQ_dV]]) - J).max() / scale < 1e-6


def test_jacobian_sparsity_matches_adjacency():
    rng = np.random.default_rng(3)
    red = random_reduced(rng, 5)
    op = random_op(rng, 5)
    dP_dth, _, _, dQ_dV = injection_jacobian(red, op)
    for i in range(5):
        for j in range(5):
            if i != j and j not in red.neighbors[i]:
                assert dP_dth[i, j] == 0.0
                assert dQ_dV[i, j] == 0.0


def test_linearize_matches_vector_field_jacobian():
    """Analytic state matrix vs central differences of the droop dynamics."""
    rng = np.random.default_rng(11)
    for n in (2, 3, 5):
        red = random_reduced(rng, n)
        params = [
            InverterParams(
                m_p=float(rng.uniform(1, 8)),
                m_q=float(rng.uniform(0.2, 4)),
                tau_p=float(rng.uniform(0.05, 0.3)),
                tau_q=float(rng.uniform(0.05, 0.3)),
                beta_p=float(rng.uniform(0.5, 1.5)),
                beta_q=float(rng.uniform(0.5, 1.5)),
            )
            for _ in range(n)
        ]
        op = random_op(rng, n)
        A = linearize(red, params, op).A

        kp = np.array([p.m_p * p.beta_p / p.tau_p for p in params])
        kq = np.array([p.m_q * p.beta_q / p.tau_q for p in params])
        itp = np.array([1 / p.tau_p for p in params])
        itq = np.array([1 / p.tau_q for p in params])
        wb = np.array([p.omega_b for p in params])

        def rhs(x):
            th, dw, dV = x[:n], x[n : 2 * n], x[2 * n :]
            P, Q = injections(red.B_red, op.V + dV, th)
            return np.concatenate(
                [wb * dw, -itp * dw - kp * P, -itq * dV - kq * Q]
            )

        x0 = np.concatenate([op.theta, np.zeros(2 * n)])
        Afd = finite_difference_jacobian(rhs, x0)
        assert np.abs(A - Afd).max() / max(1.0, np.abs(Afd).max()) < 1e-6


def test_linearize_block_decoupling_at_zero_angles():
    rng = np.random.default_rng(5)
    red = random_reduced(rng, 4)
    params = [reference_params(1.5)] * 4
    op = OperatingPoint(rng.uniform(0.95, 1.05, 4), np.zeros(4))
    A = linearize(red, params, op).A
    n = 4
    # cross blocks vanish when all angle differences are zero
    assert np.allclose(A[n : 2 * n, 2 * n :], 0.0, atol=1e-12)  # dP/dV path
    assert np.allclose(A[2 * n :, :n], 0.0, atol=1e-12)  # dQ/dtheta path


def test_linearize_filter_diagonal(two_bus_reduced):
    _, red = two_bus_reduced
    params = [reference_params(1.0), reference_params(1.0)]  # tau_p = 0.1
    op = OperatingPoint(np.ones(2), np.zeros(2))
    A = linearize(red, params, op).A
    assert np.allclose(np.diag(A)[2:4], -10.0)
    assert np.allclose(A[0, 2], 2 * np.pi * 60)


def test_linearize_warns_on_angle_spread_violation(two_bus_reduced):
    _, red = two_bus_reduced
    op = OperatingPoint(np.ones(2), np.array([0.0, 1.8]))
    with pytest.warns(UserWarning, match="pi/2"):
        linearize(red, [reference_params(1.0)] * 2, op)


def test_eigen_stability_diagonal_case():
    rep = eigen_stability(np.diag([0.0, -1.0, -2.0]), zero_tol=1e-8)
    assert rep.trivial_zero_index is not None
    assert rep.max_re == -1.0
    assert rep.stable and not rep.flagged


def test_eigen_stability_flagged_when_no_zero_mode():
    rep = eigen_stability(np.diag([-1.0, -2.0]), zero_tol=1e-8)
    assert rep.flagged and rep.trivial_zero_index is None
    assert rep.max_re == -1.0


def test_trivial_mode_always_present():
    """Uniform angle shift is in the null space at every operating point."""
    rng = np.random.default_rng(7)
    for _ in range(40):
        n = int(rng.integers(2, 6))
        red = random_reduced(rng, n)
        params = [reference_params(float(rng.uniform(0.3, 4)))] * n
        A = linearize(red, params, random_op(rng, n)).A
        lam = real_eigenvalues(A)
        assert np.min(np.abs(lam)) <= 1e-8 * max(1.0, np.abs(A).max())


def test_two_bus_small_droop_point_stable(two_bus_reduced):
    _, red = two_bus_reduced
    red2 = type(red)(0.2 * red.B_red, red.kept, red.neighbors)  # coupling 2
    params = [reference_params(0.2)] * 2
    op = OperatingPoint(np.array([1.0, 1.0]), np.array([0.0, 0.02]))
    rep = eigen_stability(linearize(red2, params, op))
    assert rep.stable


def test_max_re_continuity():
    rng = np.random.default_rng(19)
    red = random_reduced(rng, 3)
    params = [reference_params(1.0)] * 3
    for _ in range(20):
        op = random_op(rng, 3)
        r0 = eigen_stability(linearize(red, params, op))
        op2 = OperatingPoint(op.V + 1e-8, op.theta)
        r1 = eigen_stability(linearize(red, params, op2))
        assert abs(r0.max_re - r1.max_re) <= 1e-5 * max(1.0, abs(r0.max_re))
