"""Dense state-vector engine over a search register plus a control register.

The gate set is deliberately small: Hadamards, diagonal k-qubit phase gates,
and singly-controlled diagonals (enough to realize the cost unitary and its
controlled-inverse construction).

Index convention (fixed): basis index = (control_index << n_search) | search_index,
i.e. search qubits occupy the low-order bit positions and control qubits the
high-order ones.  Qubit ``q`` is bit ``q`` of the basis index; control qubit
``j`` (0-based) is global qubit ``n_search + j``.
"""

from __future__ import annotations

import cmath
import os
from dataclasses import dataclass

import numpy as np

from .cost import CostFunction

DEFAULT_MAX_QUBITS = 26
NORM_ATOL = 1e-12
PHASE_MOD_ATOL = 1e-12

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)


class CapExceededError(RuntimeError):
    """Raised when a dense state would exceed the configured qubit cap."""


def max_qubits() -> int:
    """Amplitude cap on n_search + n_control; QANNEAL_MAX_QUBITS overrides the default."""
    return int(os.environ.get("QANNEAL_MAX_QUBITS", DEFAULT_MAX_QUBITS))


def _check_cap(total: int, cap: int | None):
    cap = max_qubits() if cap is None else cap
    if total > cap:
        raise CapExceededError(
            f"{total} qubits exceed the dense-amplitude cap of {cap}; "
            "use the closed-form mode for this size"
        )


@dataclass(frozen=True)
class QuantumState:
    """Normalized amplitudes over search (low bits) x control (high bits) registers."""

    n_search: int
    n_control: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if self.n_search < 1 or self.n_control < 0:
            raise ValueError("need n_search >= 1 and n_control >= 0")
        if amps.shape != (1 << self.total_qubits,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, expected ({1 << self.total_qubits},)"
            )
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > NORM_ATOL * max(1.0, norm_sq):
            raise ValueError(f"state is not normalized: sum |a|^2 = {norm_sq!r}")

    @property
    def total_qubits(self) -> int:
        return self.n_search + self.n_control

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def _tensor(self) -> np.ndarray:
        # axis i of the tensor view corresponds to qubit (total - 1 - i)
        return self.amplitudes.reshape([2] * self.total_qubits)


@dataclass(frozen=True)
class PhaseTable:
    """Diagonal of a k-qubit phase gate: 2^k unit-modulus entries.

    Entry ``s`` multiplies the basis states whose bits on the gate's qubits
    form the sub-index ``s`` (first qubit = least significant sub-index bit).
    """

    phases: tuple[complex, ...]

    def __post_init__(self):
        phases = tuple(complex(p) for p in self.phases)
        object.__setattr__(self, "phases", phases)
        k = self.arity
        if len(phases) != 1 << k:
            raise ValueError(f"phase table length {len(phases)} is not a power of two")
        if any(abs(abs(p) - 1.0) > PHASE_MOD_ATOL for p in phases):
            raise ValueError("phase table entries must have unit modulus")

    @property
    def arity(self) -> int:
        return max(0, (len(self.phases) - 1).bit_length())

    def power(self, exponent: int) -> "PhaseTable":
        """Elementwise integer power; stays diagonal and unit-modulus."""
        return PhaseTable(tuple(p**exponent for p in self.phases))

    def conjugate(self) -> "PhaseTable":
        return PhaseTable(tuple(p.conjugate() for p in self.phases))


def uniform_superposition(n_search: int, n_control: int, cap: int | None = None) -> QuantumState:
    """Equal amplitude on every search assignment, control register all zero."""
    if n_search < 1 or n_control < 0:
        raise ValueError("need n_search >= 1 and n_control >= 0")
    _check_cap(n_search + n_control, cap)
    amps = np.zeros(1 << (n_search + n_control), dtype=complex)
    amps[: 1 << n_search] = 1.0 / np.sqrt(1 << n_search)
    return QuantumState(n_search, n_control, amps)


def _check_qubits(qubits: tuple[int, ...], total: int):
    if any(b <= a for a, b in zip(qubits, qubits[1:])):
        raise ValueError(f"qubit indices must be strictly increasing, got {qubits}")
    if qubits and (qubits[0] < 0 or qubits[-1] >= total):
        raise IndexError(f"qubit indices {qubits} out of range for {total} qubits")


def apply_hadamard(state: QuantumState, qubit: int) -> QuantumState:
    """Standard 2x2 Hadamard on one qubit."""
    total = state.total_qubits
    if not 0 <= qubit < total:
        raise IndexError(f"qubit {qubit} out of range for {total} qubits")
    psi = state._tensor()
    axis = total - 1 - qubit
    psi = np.moveaxis(np.moveaxis(psi, axis, -1) @ _HADAMARD.T, -1, axis)
    return QuantumState(state.n_search, state.n_control, np.ascontiguousarray(psi).reshape(-1))


def apply_diagonal(state: QuantumState, qubits: tuple[int, ...], table: PhaseTable) -> QuantumState:
    """Multiply each amplitude by the phase selected by its bits on ``qubits``."""
    qubits = tuple(qubits)
    total = state.total_qubits
    _check_qubits(qubits, total)
    if len(qubits) != table.arity:
        raise ValueError(f"table arity {table.arity} does not match {len(qubits)} qubits")
    shape = [1] * total
    for q in qubits:
        shape[total - 1 - q] = 2
    ph = np.asarray(table.phases, dtype=complex).reshape(shape)
    amps = (state._tensor() * ph).reshape(-1)
    return QuantumState(state.n_search, state.n_control, amps)


def controlled_table(
    control_qubit: int, qubits: tuple[int, ...], table: PhaseTable
) -> tuple[tuple[int, ...], PhaseTable]:
    """Fold a control qubit into a diagonal: identity on control 0, the table on control 1."""
    if control_qubit in qubits:
        raise ValueError(f"control qubit {control_qubit} overlaps the targets {qubits}")
    combined = tuple(sorted(qubits + (control_qubit,)))
    control_pos = combined.index(control_qubit)
    target_pos = [combined.index(q) for q in qubits]
    subs = np.arange(1 << len(combined))
    orig = np.zeros_like(subs)
    for j, pos in enumerate(target_pos):
        orig |= ((subs >> pos) & 1) << j
    phases = np.where(
        (subs >> control_pos) & 1,
        np.asarray(table.phases, dtype=complex)[orig],
        1.0 + 0.0j,
    )
    return combined, PhaseTable(tuple(phases))


def apply_controlled_diagonal(
    state: QuantumState, control_qubit: int, qubits: tuple[int, ...], table: PhaseTable
) -> QuantumState:
    """Apply the table on the control = 1 subspace only."""
    combined, full = controlled_table(control_qubit, tuple(qubits), table)
    return apply_diagonal(state, combined, full)


def build_phase_tables(
    cost: CostFunction, sign: int = +1
) -> list[tuple[tuple[int, ...], PhaseTable]]:
    """Per-term diagonal gates whose product multiplies |x> by exp(sign*i*pi/2*C_nor(x)).

    One table per canonical term plus one arity-0 table for the constant; the
    lower bound is split evenly across all of them, so composing the returned
    gates reproduces the normalized-cost phase exactly.
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    n_tables = len(cost.terms) + 1
    offset = cost.c_min / n_tables
    scale = (np.pi / 2.0) / cost.span
    tables: list[tuple[tuple[int, ...], PhaseTable]] = [
        ((), PhaseTable((cmath.exp(sign * 1j * scale * (cost.constant - offset)),)))
    ]
    for term in cost.terms:
        phases = np.exp(sign * 1j * scale * (np.asarray(term.values) - offset))
        tables.append((term.qubits, PhaseTable(tuple(phases))))
    return tables


def apply_u_pm(state: QuantumState, control_qubit: int, cost: CostFunction) -> QuantumState:
    """Controlled cost unitary: U on the control-0 branch, U^-1 on the control-1 branch.

    Realized as the gate product: for every phase table, the unconditional gate
    followed by its controlled inverse-square.
    """
    if state.n_search != cost.n:
        raise ValueError(f"state has {state.n_search} search qubits but cost has n = {cost.n}")
    if not state.n_search <= control_qubit < state.total_qubits:
        raise IndexError(f"control qubit {control_qubit} is not a control-register qubit")
    psi = state
    for qubits, table in build_phase_tables(cost, sign=+1):
        psi = apply_diagonal(psi, qubits, table)
        psi = apply_controlled_diagonal(psi, control_qubit, qubits, table.power(-2))
    return psi


def marginal_probabilities(state: QuantumState, qubit_subset: tuple[int, ...]) -> np.ndarray:
    """Born-rule marginal over a subset of qubits (sub-index convention as PhaseTable)."""
    qubits = tuple(qubit_subset)
    total = state.total_qubits
    _check_qubits(qubits, total)
    probs = np.abs(state._tensor()) ** 2
    drop = tuple(total - 1 - q for q in range(total) if q not in qubits)
    return probs.sum(axis=drop).reshape(-1)


def max_amplitude_deviation(a: QuantumState | np.ndarray, b: QuantumState | np.ndarray) -> float:
    """Largest elementwise amplitude difference between two states."""
    va = a.amplitudes if isinstance(a, QuantumState) else np.asarray(a)
    vb = b.amplitudes if isinstance(b, QuantumState) else np.asarray(b)
    if va.shape != vb.shape:
        raise ValueError(f"shape mismatch: {va.shape} vs {vb.shape}")
    return float(np.max(np.abs(va - vb)))


def dump_amplitudes(state: QuantumState, path: str):
    """Debug dump: little-endian float64 pairs (re, im) in basis-index order."""
    with open(path, "wb") as fh:
        fh.write(state.amplitudes.astype("<c16").tobytes())


def load_amplitudes(path: str, n_search: int, n_control: int) -> QuantumState:
    with open(path, "rb") as fh:
        amps = np.frombuffer(fh.read(), dtype="<c16")
    return QuantumState(n_search, n_control, amps.astype(complex))
