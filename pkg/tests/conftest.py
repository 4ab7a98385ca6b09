import numpy as np
import pytest

from qanneal.cost import (
    CostFunction,
    GraphPartitionInstance,
    LocalTerm,
    graph_partition_cost,
)


def complete_graph_instance(v: int, lam: float = 0.0, p: float = 1.0) -> GraphPartitionInstance:
    edges = tuple((a, b) for a in range(v) for b in range(a + 1, v))
    return GraphPartitionInstance(v=v, edges=edges, j=1.0, lam=lam, p=p)


@pytest.fixture
def two_state_cost() -> CostFunction:
    """n=1 cost with C(0)=0, C(1)=1 and bounds (-0.5, 1.5), so C_nor = 0.25, 0.75."""
    return CostFunction(
        n=1, constant=0.0, terms=(LocalTerm((0,), (0.0, 1.0)),), c_min=-0.5, c_max=1.5
    )


@pytest.fixture
def k4_cost() -> CostFunction:
    """Complete 4-vertex partitioning cost with balance penalty 1 (cost = cut + penalty)."""
    return graph_partition_cost(complete_graph_instance(4, lam=1.0))


@pytest.fixture
def k4_cost_plain() -> CostFunction:
    """Complete 4-vertex partitioning cost without penalty (cost = cut size)."""
    return graph_partition_cost(complete_graph_instance(4, lam=0.0))


def full_table_cost(n: int, values: np.ndarray, c_min: float = 0.0, c_max: float = 1.0) -> CostFunction:
    """Cost with one n-local term assigning an explicit value to every state."""
    return CostFunction(
        n=n,
        constant=0.0,
        terms=(LocalTerm(tuple(range(n)), tuple(float(v) for v in values)),),
        c_min=c_min,
        c_max=c_max,
    )


@pytest.fixture
def high_floor_cost() -> CostFunction:
    """Gapped n=8 instance whose normalized costs all sit just below 1.

    Near the upper bound the energy map is strongly contracting, which makes
    the effective cost converge to the true minimum extremely fast as t -> 0.
    """
    rng = np.random.default_rng(77)
    values = 0.9985 + 0.001 * rng.random(256)
    values[int(np.argmin(values))] = 0.998
    return full_table_cost(8, values)


@pytest.fixture
def plateau_cost() -> CostFunction:
    """n=8 instance with a 255-state ground plateau and one excited state.

    The ground level dominates the ensemble so strongly that the normalized
    free energy sits within t*log(256/255) of the minimum energy.
    """
    values = np.full(256, 0.3)
    values[137] = 0.7
    return full_table_cost(8, values)


def random_state(n_search: int, n_control: int, seed: int) -> "np.ndarray":
    rng = np.random.default_rng(seed)
    size = 1 << (n_search + n_control)
    amps = rng.normal(size=size) + 1j * rng.normal(size=size)
    return amps / np.linalg.norm(amps)


def composite_phases(cost) -> np.ndarray:
    """Product of all per-term gate phases for every basis state (direct composition)."""
    from qanneal.statevec import build_phase_tables

    size = 1 << cost.n
    acc = np.ones(size, dtype=complex)
    for qubits, table in build_phase_tables(cost, sign=+1):
        sub = np.zeros(size, dtype=np.int64)
        idx = np.arange(size)
        for j, q in enumerate(qubits):
            sub |= ((idx >> q) & 1) << j
        acc *= np.asarray(table.phases)[sub]
    return acc


def literal_step_states(cost) -> list[np.ndarray]:
    """The four displayed states of the single-control circuit, built directly."""
    import math

    from qanneal.cost import normalized_all

    size = 1 << cost.n
    theta = 0.5 * np.pi * normalized_all(cost)
    psi0 = np.zeros(2 * size, dtype=complex)
    psi0[:size] = 1 / math.sqrt(size)
    psi1 = np.full(2 * size, 1 / math.sqrt(2 * size), dtype=complex)
    psi2 = np.concatenate([np.exp(1j * theta), np.exp(-1j * theta)]) / math.sqrt(2 * size)
    # the flipped-control branch carries the i sin(theta) phase left by the Hadamard pair
    psi3 = np.concatenate([np.cos(theta), 1j * np.sin(theta)]) / math.sqrt(size)
    return [psi0, psi1, psi2, psi3]
