import numpy as np
import pytest

from stabopf.netmodel import (
    Branch,
    Bus,
    CaseError,
    Network,
    build_susceptance,
    builtin_case_path,
    kron_reduce,
    load_case,
    parse_case,
    with_loads,
)

TWO_BUS_TEXT = """
[system]
ref_bus = 1
base_MVA = 100

[buses]
1 inverter 0.45 0.45 0.95 1.05
2 inverter 0.70 0.00 0.95 1.05

[branches]
1 2 10.0 3.0
"""


def test_parse_two_bus_text():
    net = parse_case(TWO_BUS_TEXT)
    assert net.n_bus == 2
    assert len(net.branches) == 1
    assert net.branches[0].b == 10.0
    assert net.ref_bus == 1
    assert net.buses[0].P_D == 0.45 and net.buses[1].P_D == 0.70


def test_parse_empty_bus_list():
    with pytest.raises(CaseError, match="no buses"):
        parse_case("[system]\nref_bus = 1\n[buses]\n[branches]\n")


def test_parse_nonzero_resistance_rejected():
    text = TWO_BUS_TEXT.replace("1 2 10.0 3.0", "1 2 10.0 3.0 1.0 0.01")
    with pytest.raises(CaseError, match="lossless"):
        parse_case(text)


def test_parse_malformed_field_reports_line():
    text = TWO_BUS_TEXT.replace("1 2 10.0 3.0", "1 2 ten 3.0")
    with pytest.raises(CaseError, match="line 11"):
        parse_case(text)


def test_parse_39_bus_fixture():
    net = load_case(builtin_case_path("ieee39_lossless"))
    assert net.n_bus == 39
    assert len(net.branches) == 46
    assert len(net.inverter_ids) == 10
    assert net.ref_bus == 31
    P_D, _ = net.loads()
    assert np.isclose(P_D.sum(), 62.5423)


def test_network_validation_errors():
    b1 = Bus(1, "inverter")
    b2 = Bus(2, "load")
    with pytest.raises(CaseError, match="not connected"):
        Network((b1, b2), (), ref_bus=1)
    with pytest.raises(CaseError, match="ref_bus"):
        Network((b1,), (), ref_bus=9)
    with pytest.raises(CaseError, match="inverter"):
        Network((b2,), (), ref_bus=2)


def test_build_susceptance_two_bus(two_bus):
    B = build_susceptance(two_bus, alpha=1.0).B
    # off-diagonal coupling magnitude 10, diagonals +10 so the lossless
    # injection formulas hold verbatim (hand check: P2 = 10 V2 sin(theta2),
    # Q2 = 10 V2^2 - 10 V1 V2 cos(theta2))
    assert np.allclose(B, [[10.0, -10.0], [-10.0, 10.0]])


def test_build_susceptance_linear_in_alpha(ieee39):
    B1 = build_susceptance(ieee39, alpha=1.0).B
    B2 = build_susceptance(ieee39, alpha=2.0).B
    assert np.allclose(B2, 2.0 * B1)


def test_build_susceptance_three_bus_line_graph():
    buses = tuple(Bus(i, "inverter") for i in (1, 2, 3))
    branches = (Branch(1, 2, 1.0, 5.0), Branch(2, 3, 1.0, 5.0))
    net = Network(buses, branches, ref_bus=1)
    B = build_susceptance(net).B
    # hand-assembled admittance: Laplacian structure with positive diagonal
    assert np.allclose(B, [[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])


def test_susceptance_sparsity_matches_graph(ieee39):
    B = build_susceptance(ieee39).B
    idx = {bid: k for k, bid in enumerate(ieee39.bus_ids)}
    edges = {
        tuple(sorted((idx[br.from_bus], idx[br.to_bus]))) for br in ieee39.branches
    }
    n = ieee39.n_bus
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) in edges:
                assert B[i, j] != 0.0
            else:
                assert B[i, j] == 0.0
    assert np.allclose(B, B.T, atol=1e-12)


def test_kron_identity_when_nothing_eliminated(two_bus):
    B = build_susceptance(two_bus)
    red = kron_reduce(B, two_bus)
    # both buses host inverters (and carry load): reduction must not touch B
    assert np.allclose(red.B_red, B.B)
    assert red.kept == (1, 2)


def test_kron_three_bus_chain_series_combination():
    buses = (Bus(1, "inverter"), Bus(2, "load"), Bus(3, "inverter"))
    branches = (Branch(1, 2, 1.0, 5.0), Branch(2, 3, 1.0, 5.0))
    net = Network(buses, branches, ref_bus=1)
    red = kron_reduce(build_susceptance(net), net)
    # one-bus Schur complement by hand: series combination of two unit lines
    assert np.allclose(red.B_red, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-12)
    assert red.neighbors == (frozenset({1}), frozenset({0}))


def test_kron_39_bus_dense(ieee39_reduced):
    _, red = ieee39_reduced
    assert red.B_red.shape == (10, 10)
    off = red.B_red[~np.eye(10, dtype=bool)]
    assert np.all(np.abs(off) > 1e-6)  # all retained buses pairwise adjacent
    assert all(len(s) == 9 for s in red.neighbors)
    assert np.allclose(red.B_red, red.B_red.T, atol=1e-12)


def test_kron_commutes_with_scaling_for_zero_loads():
    buses = (Bus(1, "inverter"), Bus(2, "load"), Bus(3, "load"), Bus(4, "inverter"))
    branches = (
        Branch(1, 2, 2.0, 5.0),
        Branch(2, 3, 3.0, 5.0),
        Branch(3, 4, 1.5, 5.0),
        Branch(2, 4, 0.7, 5.0),
    )
    net = Network(buses, branches, ref_bus=1)
    red1 = kron_reduce(build_susceptance(net, 1.0), net)
    red3 = kron_reduce(build_susceptance(net, 3.0), net)
    assert np.allclose(red3.B_red, 3.0 * red1.B_red, rtol=1e-10)


def test_kron_load_conversion_only_on_eliminated_buses():
    buses = (Bus(1, "inverter"), Bus(2, "load", P_D=0.5, Q_D=0.25), Bus(3, "inverter"))
    branches = (Branch(1, 2, 1.0, 5.0), Branch(2, 3, 1.0, 5.0))
    net = Network(buses, branches, ref_bus=1)
    red = kron_reduce(build_susceptance(net), net)
    # complex reduction with shunt (P - jQ) at the eliminated bus, by hand
    y = -1j * np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
    y[1, 1] += 0.5 - 0.25j
    yr = y[np.ix_([0, 2], [0, 2])] - y[np.ix_([0, 2], [1])] @ y[np.ix_([1], [0, 2])] / y[1, 1]
    assert np.allclose(red.B_red, -yr.imag, atol=1e-12)


def test_with_loads_roundtrip(two_bus):
    net = with_loads(two_bus, [0.1, 0.2], [0.3, 0.4])
    P, Q = net.loads()
    assert np.allclose(P, [0.1, 0.2]) and np.allclose(Q, [0.3, 0.4])
    # original untouched (immutability)
    assert two_bus.buses[0].P_D == 0.45
