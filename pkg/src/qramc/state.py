"""Sparse state-vector simulation.

States are stored as a mapping from basis bit-strings (qubit 0 = leftmost
character) to complex amplitudes; only nonzero entries are kept.  All
operations are pure: they return a new state and never mutate their input.
Amplitudes with magnitude below PRUNE_EPS are dropped after each instruction,
and iteration always runs in sorted basis order so results are bit-identical
across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .circuit import GateSpec, QramCircuit, Rag, Read

PRUNE_EPS = 1e-14

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_GATE_1Q = {
    "X": ((0, 1), (1, 0)),
    "Y": ((0, -1j), (1j, 0)),
    "Z": ((1, 0), (0, -1)),
    "H": ((_INV_SQRT2, _INV_SQRT2), (_INV_SQRT2, -_INV_SQRT2)),
    "S": ((1, 0), (0, 1j)),
    "SDG": ((1, 0), (0, -1j)),
    "T": ((1, 0), (0, complex(math.cos(math.pi / 4), math.sin(math.pi / 4)))),
    "TDG": ((1, 0), (0, complex(math.cos(math.pi / 4), -math.sin(math.pi / 4)))),
}


class SimulationError(RuntimeError):
    """Raised when an instruction cannot be applied to the current state."""


def u3_matrix(theta: float, phi: float, lam: float):
    """Generic single-qubit rotation (Z-Y-Z Euler angles, see GateSpec)."""
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    eip = complex(math.cos(phi), math.sin(phi))
    eil = complex(math.cos(lam), math.sin(lam))
    return ((c, -eil * s), (eip * s, eip * eil * c))


@dataclass(frozen=True)
class SparseState:
    qubit_count: int
    amplitudes: dict

    @classmethod
    def zero(cls, qubit_count: int) -> "SparseState":
        return cls(qubit_count, {"0" * qubit_count: 1.0 + 0.0j})

    @classmethod
    def basis(cls, bits: str) -> "SparseState":
        return cls(len(bits), {bits: 1.0 + 0.0j})

    def norm_sq(self) -> float:
        return sum(abs(a) ** 2 for _, a in sorted(self.amplitudes.items()))

    def sorted_items(self):
        return sorted(self.amplitudes.items())

    def tensor(self, other: "SparseState") -> "SparseState":
        amps = {}
        for b1, a1 in self.sorted_items():
            for b2, a2 in other.sorted_items():
                amps[b1 + b2] = a1 * a2
        return SparseState(self.qubit_count + other.qubit_count, amps)


def _pruned(qubit_count: int, amps: dict) -> SparseState:
    return SparseState(
        qubit_count, {b: a for b, a in amps.items() if abs(a) >= PRUNE_EPS}
    )


def _with_bit(basis: str, pos: int, bit: str) -> str:
    if basis[pos] == bit:
        return basis
    return basis[:pos] + bit + basis[pos + 1:]


def inner_product(a: SparseState, b: SparseState) -> complex:
    if a.qubit_count != b.qubit_count:
        raise ValueError("states have different qubit counts")
    keys = sorted(set(a.amplitudes) & set(b.amplitudes))
    return sum(a.amplitudes[k].conjugate() * b.amplitudes[k] for k in keys)


def fidelity(a: SparseState, b: SparseState) -> float:
    return abs(inner_product(a, b)) ** 2


def apply_gate(state: SparseState, gate: GateSpec) -> SparseState:
    for q in gate.targets:
        if not 0 <= q < state.qubit_count:
            raise SimulationError(f"gate target {q} out of range")
    if gate.kind == "CNOT":
        control, target = gate.targets
        amps = {}
        for basis, amp in state.sorted_items():
            if basis[control] == "1":
                basis = _with_bit(basis, target, "01"[basis[target] == "0"])
            amps[basis] = amps.get(basis, 0) + amp
        return _pruned(state.qubit_count, amps)

    matrix = u3_matrix(*gate.angles) if gate.kind == "U3" else _GATE_1Q[gate.kind]
    q = gate.targets[0]
    amps = {}
    for basis, amp in state.sorted_items():
        col = int(basis[q])
        for row in (0, 1):
            coeff = matrix[row][col]
            if coeff == 0:
                continue
            nb = _with_bit(basis, q, "01"[row])
            amps[nb] = amps.get(nb, 0) + coeff * amp
    return _pruned(state.qubit_count, amps)


def apply_rag(state: SparseState, circuit: QramCircuit) -> SparseState:
    """Swap the swap qubit with the memory qubit selected by the address register."""
    aw = circuit.address_width
    W = circuit.W
    if state.qubit_count != circuit.total_qubits:
        raise SimulationError("state size does not match circuit")
    amps = {}
    for basis, amp in state.sorted_items():
        address = int(basis[:aw], 2) if aw else 0
        swap_pos = circuit.swap_qubit
        mem_pos = W + address
        b, x = basis[swap_pos], basis[mem_pos]
        if b != x:
            basis = _with_bit(_with_bit(basis, swap_pos, x), mem_pos, b)
        amps[basis] = amps.get(basis, 0) + amp
    return _pruned(state.qubit_count, amps)


def apply_read(state: SparseState, instr: Read, input_bits: str) -> SparseState:
    for q in (*instr.address, instr.target):
        if not 0 <= q < state.qubit_count:
            raise SimulationError(f"READ qubit {q} out of range")
    n = len(input_bits)
    amps = {}
    for basis, amp in state.sorted_items():
        value = 0
        for q in instr.address:
            value = value * 2 + int(basis[q])
        if value >= n:
            raise SimulationError(
                f"READ address {value} out of range for input of length {n}"
            )
        if input_bits[value] == "1":
            basis = _with_bit(basis, instr.target, "01"[basis[instr.target] == "0"])
        amps[basis] = amps.get(basis, 0) + amp
    return _pruned(state.qubit_count, amps)


@dataclass
class SparsityReport:
    """Per-step maximum memory Hamming weight over the supported basis states."""

    declared_m: int
    per_step_max_weight: list = field(default_factory=list)

    @property
    def max_weight(self) -> int:
        return max(self.per_step_max_weight, default=0)

    @property
    def first_violation_step(self) -> int | None:
        for step, w in enumerate(self.per_step_max_weight):
            if w > self.declared_m:
                return step
        return None

    @property
    def ok(self) -> bool:
        return self.first_violation_step is None


def _memory_weight(state: SparseState, W: int, M: int) -> int:
    return max((basis[W:W + M].count("1") for basis in state.amplitudes), default=0)


def run(circuit: QramCircuit, input_bits: str, monitor_sparsity: bool = True,
        step_callback=None) -> tuple[SparseState, SparsityReport | None]:
    """Execute the circuit from the all-zero state.

    Returns the final state and, when monitoring, the per-step sparsity report.
    ``step_callback(step, state)`` is invoked after each instruction (step is
    1-based).
    """
    if len(input_bits) != circuit.n:
        raise SimulationError(
            f"input length {len(input_bits)} does not match n={circuit.n}"
        )
    state = SparseState.zero(circuit.total_qubits)
    report = SparsityReport(circuit.m, [0]) if monitor_sparsity else None
    for step, ins in enumerate(circuit.instructions, start=1):
        if isinstance(ins, GateSpec):
            state = apply_gate(state, ins)
        elif isinstance(ins, Read):
            state = apply_read(state, ins, input_bits)
        elif isinstance(ins, Rag):
            state = apply_rag(state, circuit)
        else:
            raise SimulationError(f"unknown instruction {ins!r}")
        if report is not None:
            report.per_step_max_weight.append(
                _memory_weight(state, circuit.W, circuit.M)
            )
        if step_callback is not None:
            step_callback(step, state)
        drift = abs(state.norm_sq() - 1.0)
        if drift > 1e-9:
            raise SimulationError(f"norm drift {drift:.3e} after step {step}")
    return state, report


def measure_distribution(state: SparseState, positions) -> dict:
    """Exact marginal outcome distribution over the given qubit positions."""
    positions = list(positions)
    for q in positions:
        if not 0 <= q < state.qubit_count:
            raise ValueError(f"measured position {q} out of range")
    probs: dict[str, float] = {}
    for basis, amp in state.sorted_items():
        key = "".join(basis[q] for q in positions)
        probs[key] = probs.get(key, 0.0) + abs(amp) ** 2
    return probs


def tv_distance(p: dict, q: dict) -> float:
    """Half the L1 distance between two outcome distributions."""
    keys = sorted(set(p) | set(q))
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
