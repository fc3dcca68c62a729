"""Network data model: case files, susceptance matrices, Kron reduction.

The susceptance convention throughout is B = -Im(Y_bus) for a lossless
network: diagonals carry +sum of incident line susceptances, off-diagonals
carry -b for each line, so that the lossless injection formulas

    P_i = -sum_j V_i V_j B_ij sin(theta_i - theta_j)
    Q_i = V_i^2 B_ii + sum_j V_i V_j B_ij cos(theta_i - theta_j)

hold verbatim (asserted by the two-bus unit test).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

__all__ = [
    "Bus",
    "Branch",
    "Network",
    "SusceptanceMatrix",
    "ReducedNetwork",
    "CaseError",
    "ReductionError",
    "parse_case",
    "load_case",
    "builtin_case_path",
    "build_susceptance",
    "kron_reduce",
    "with_loads",
]

INVERTER = "inverter"
LOAD = "load"

_KINDS = (INVERTER, LOAD)


class CaseError(ValueError):
    """Raised for malformed or physically invalid case data."""


class ReductionError(RuntimeError):
    """Raised when Kron reduction cannot eliminate the requested buses."""


@dataclass(frozen=True)
class Bus:
    id: int
    kind: str
    P_D: float = 0.0
    Q_D: float = 0.0
    V_min: float = 0.95
    V_max: float = 1.05

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise CaseError(f"bus {self.id}: unknown kind {self.kind!r}")
        if not (self.V_min > 0.0):
            raise CaseError(f"bus {self.id}: V_min must be positive")
        if self.V_min > self.V_max:
            raise CaseError(f"bus {self.id}: V_min > V_max")
        if not (np.isfinite(self.P_D) and np.isfinite(self.Q_D)):
            raise CaseError(f"bus {self.id}: loads must be finite")


@dataclass(frozen=True)
class Branch:
    """Lossless series element. ``b`` is the positive series susceptance
    (1/x); resistance is identically zero by the lossless network assumption.
    ``tap`` is an off-nominal in-phase transformer ratio applied on the from
    side (1.0 for ordinary lines); it scales the stamped susceptance entries
    exactly as a lossless two-winding transformer does."""

    from_bus: int
    to_bus: int
    b: float
    S_max: float
    tap: float = 1.0

    def __post_init__(self):
        if self.from_bus == self.to_bus:
            raise CaseError(f"branch {self.from_bus}-{self.to_bus}: self-loop")
        if not (self.b > 0.0 and np.isfinite(self.b)):
            raise CaseError(
                f"branch {self.from_bus}-{self.to_bus}: series susceptance must be > 0"
            )
        if not (self.S_max > 0.0):
            raise CaseError(f"branch {self.from_bus}-{self.to_bus}: S_max must be > 0")
        if not (self.tap > 0.0 and np.isfinite(self.tap)):
            raise CaseError(f"branch {self.from_bus}-{self.to_bus}: tap must be > 0")


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    ref_bus: int
    base_MVA: float = 100.0

    def __post_init__(self):
        if len(self.buses) == 0:
            raise CaseError("no buses")
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise CaseError("duplicate bus ids")
        idset = set(ids)
        if self.ref_bus not in idset:
            raise CaseError(f"ref_bus {self.ref_bus} is not a bus")
        if not any(b.kind == INVERTER for b in self.buses):
            raise CaseError("network has no inverter bus")
        for br in self.branches:
            if br.from_bus not in idset or br.to_bus not in idset:
                raise CaseError(
                    f"branch {br.from_bus}-{br.to_bus} references unknown bus"
                )
        if not self._connected():
            raise CaseError("network graph is not connected")

    def _connected(self) -> bool:
        if len(self.buses) == 1:
            return True
        adj: dict[int, set[int]] = {b.id: set() for b in self.buses}
        for br in self.branches:
            adj[br.from_bus].add(br.to_bus)
            adj[br.to_bus].add(br.from_bus)
        seen = {self.buses[0].id}
        stack = [self.buses[0].id]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(self.buses)

    # -- convenience lookups ------------------------------------------------

    @property
    def bus_ids(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.buses)

    @property
    def inverter_ids(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.buses if b.kind == INVERTER)

    def index_of(self, bus_id: int) -> int:
        return self.bus_ids.index(bus_id)

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def loads(self) -> tuple[np.ndarray, np.ndarray]:
        """(P_D, Q_D) vectors in bus order."""
        return (
            np.array([b.P_D for b in self.buses]),
            np.array([b.Q_D for b in self.buses]),
        )

    def voltage_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.array([b.V_min for b in self.buses]),
            np.array([b.V_max for b in self.buses]),
        )


def with_loads(net: Network, P_D: Sequence[float], Q_D: Sequence[float]) -> Network:
    """Functional update of the bus loads (types are immutable)."""
    if len(P_D) != net.n_bus or len(Q_D) != net.n_bus:
        raise CaseError("load vectors must have one entry per bus")
    buses = tuple(
        replace(b, P_D=float(p), Q_D=float(q))
        for b, p, q in zip(net.buses, P_D, Q_D)
    )
    return Network(buses, net.branches, net.ref_bus, net.base_MVA)


@dataclass(frozen=True)
class SusceptanceMatrix:
    """Dense symmetric bus susceptance matrix, B = -Im(Y_bus).

    ``alpha`` records the uniform line-susceptance scaling the matrix was
    built with, so per-branch quantities (flow limits) can stay consistent.
    """

    B: np.ndarray
    bus_ids: tuple[int, ...]
    alpha: float = 1.0

    def __post_init__(self):
        B = self.B
        if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] != len(self.bus_ids):
            raise CaseError("susceptance matrix shape does not match bus list")


@dataclass(frozen=True)
class ReducedNetwork:
    """Result of Kron reduction onto the inverter buses."""

    B_red: np.ndarray
    kept: tuple[int, ...]  # bus ids, in reduced index order
    neighbors: tuple[frozenset[int], ...]  # reduced-index adjacency sets

    @property
    def n(self) -> int:
        return len(self.kept)


# -- case file parsing ------------------------------------------------------

_SECTIONS = ("system", "buses", "branches")


def parse_case(text: str) -> Network:
    """Parse the structured-text case format.

    Sections: ``[system]`` with ``ref_bus`` and ``base_MVA`` key/value pairs;
    ``[buses]`` records ``id kind Pd Qd Vmin Vmax``; ``[branches]`` records
    ``from to b Smax`` with an optional trailing resistance column that must
    be zero (the model is lossless). ``#`` starts a comment. All quantities
    are per unit on base_MVA.
    """
    system: dict[str, str] = {}
    buses: list[Bus] = []
    branches: list[Branch] = []
    section = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise CaseError(f"line {lineno}: unknown section [{section}]")
            continue
        if section is None:
            raise CaseError(f"line {lineno}: data before any section header")
        try:
            if section == "system":
                if "=" not in line:
                    raise CaseError(f"line {lineno}: expected key = value")
                key, val = (s.strip() for s in line.split("=", 1))
                system[key.lower()] = val
            elif section == "buses":
                parts = line.split()
                if len(parts) != 6:
                    raise CaseError(
                        f"line {lineno}: bus record needs 6 fields "
                        f"(id kind Pd Qd Vmin Vmax), got {len(parts)}"
                    )
                buses.append(
                    Bus(
                        id=int(parts[0]),
                        kind=parts[1].lower(),
                        P_D=float(parts[2]),
                        Q_D=float(parts[3]),
                        V_min=float(parts[4]),
                        V_max=float(parts[5]),
                    )
                )
            elif section == "branches":
                parts = line.split()
                if len(parts) not in (4, 5, 6):
                    raise CaseError(
                        f"line {lineno}: branch record needs 4 fields "
                        f"(from to b Smax [tap [r]]), got {len(parts)}"
                    )
                if len(parts) == 6 and float(parts[5]) != 0.0:
                    raise CaseError(
                        f"line {lineno}: nonzero branch resistance {parts[5]}; "
                        "the network model is lossless (series conductance must be zero)"
                    )
                tap = float(parts[4]) if len(parts) >= 5 else 1.0
                branches.append(
                    Branch(
                        from_bus=int(parts[0]),
                        to_bus=int(parts[1]),
                        b=float(parts[2]),
                        S_max=float(parts[3]),
                        tap=tap if tap != 0.0 else 1.0,
                    )
                )
        except CaseError:
            raise
        except ValueError as exc:
            raise CaseError(f"line {lineno}: malformed field ({exc})") from exc

    if not buses:
        raise CaseError("no buses")
    if "ref_bus" not in system:
        raise CaseError("[system] section must define ref_bus")
    try:
        ref_bus = int(system["ref_bus"])
        base = float(system.get("base_mva", 100.0))
    except ValueError as exc:
        raise CaseError(f"malformed [system] value ({exc})") from exc

    return Network(tuple(buses), tuple(branches), ref_bus, base)


def builtin_case_path(name: str) -> str:
    """Path of a case file shipped with the package (e.g. ``two_bus``)."""
    from importlib.resources import files

    p = files("stabopf.cases").joinpath(f"{name}.case")
    return str(p)


def load_case(path: str) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_case(fh.read())


# -- susceptance assembly and reduction -------------------------------------


def build_susceptance(net: Network, alpha: float = 1.0) -> SusceptanceMatrix:
    """Assemble B = -Im(Y_bus) with every line susceptance scaled by alpha.

    An ordinary line stamps +alpha*b on both diagonals and -alpha*b off the
    diagonal (graph-Laplacian structure). A from-side tap ratio a stamps
    b/a^2 on the from diagonal, b on the to diagonal and -b/a off-diagonal,
    matching the lossless two-winding transformer admittance.
    """
    if not alpha > 0.0:
        raise ValueError("alpha must be positive")
    n = net.n_bus
    index = {bid: k for k, bid in enumerate(net.bus_ids)}
    B = np.zeros((n, n))
    for br in net.branches:
        i, j = index[br.from_bus], index[br.to_bus]
        b = alpha * br.b
        a = br.tap
        B[i, i] += b / (a * a)
        B[j, j] += b
        B[i, j] -= b / a
        B[j, i] -= b / a
    return SusceptanceMatrix(B, net.bus_ids, alpha)


def kron_reduce(
    B: SusceptanceMatrix, net: Network, nominal_V: float = 1.0
) -> ReducedNetwork:
    """Eliminate all non-inverter buses by a Schur complement on Y_bus.

    Constant-power loads at the eliminated buses are first converted into
    equivalent shunt admittances (P - jQ)/nominal_V^2 on the diagonal; the
    complex reduced matrix then yields B_red = -Im(Y_red). Loads at retained
    buses are not converted, so a network with nothing to eliminate reduces
    to B restricted to the inverter buses exactly.
    """
    if tuple(B.bus_ids) != tuple(net.bus_ids):
        raise ValueError("susceptance matrix was built from a different network")
    kept_ids = net.inverter_ids
    kept = [net.index_of(i) for i in kept_ids]
    elim = [k for k in range(net.n_bus) if net.buses[k].kind != INVERTER]

    if not elim:
        B_red = B.B[np.ix_(kept, kept)].copy()
    else:
        Y = -1j * B.B.astype(complex)
        for k in elim:
            bus = net.buses[k]
            Y[k, k] += (bus.P_D - 1j * bus.Q_D) / (nominal_V**2)
        Yee = Y[np.ix_(elim, elim)]
        Yke = Y[np.ix_(kept, elim)]
        Yek = Y[np.ix_(elim, kept)]
        cond = np.linalg.cond(Yee)
        if not np.isfinite(cond) or cond > 1e14:
            bad = [net.buses[k].id for k in elim]
            raise ReductionError(
                f"singular elimination block (cond={cond:.3e}); "
                f"eliminated buses: {bad}"
            )
        Y_red = Y[np.ix_(kept, kept)] - Yke @ np.linalg.solve(Yee, Yek)
        B_red = -np.imag(Y_red)

    B_red = 0.5 * (B_red + B_red.T)  # enforce exact symmetry
    scale = max(1.0, float(np.max(np.abs(B_red))))
    nbrs = tuple(
        frozenset(
            j
            for j in range(len(kept))
            if j != i and abs(B_red[i, j]) > 1e-10 * scale
        )
        for i in range(len(kept))
    )
    return ReducedNetwork(B_red, kept_ids, nbrs)
