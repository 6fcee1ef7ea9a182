"""Compressed execution: replace the M memory qubits by a superposed radix tree.

A compressed run keeps the W work qubits, replays every non-RAG instruction
verbatim, and replaces each RAG by the membership-swap operation on a tree
region storing the set of memory positions currently holding a 1 (each
position written as a log2(M)-bit string).  In exact allocator mode the two
executions produce identical work-qubit statistics; in approximate mode each
rank-superposition use may deviate by at most the per-use budget, and the
flagged remainder mass is dropped from the state and reported rather than
renormalized.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .circuit import (
    CircuitError,
    GateSpec,
    QramCircuit,
    Rag,
    Read,
    ceil_log2,
    is_power_of_two,
    validate_qram,
)
from .prefix_tree import RankSuperposition
from .qradix import OpCounters, QrtCapacityError, QrtRegion, prepare_canonical, swap
from .state import (
    SimulationError,
    SparseState,
    apply_gate,
    apply_read,
    fidelity,
    measure_distribution,
    run,
    tv_distance,
)


class CompressionError(SimulationError):
    """A compressed run failed; carries the 1-based step where it happened."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


class SparsityError(SimulationError):
    """The direct run exceeded the declared memory sparsity."""


EXACT_TV_THRESHOLD = 1e-9


@dataclass
class CompressedRun:
    circuit: QramCircuit
    mode: str
    eps_per_use: float | None
    final_state: SparseState
    region: QrtRegion
    counters: OpCounters

    @property
    def qubits_direct(self) -> int:
        return self.circuit.total_qubits

    @property
    def qubits_compressed(self) -> int:
        return self.circuit.W + self.region.total_bits


@dataclass
class EquivalenceReport:
    tv_distance: float
    qubits_direct: int
    qubits_compressed: int
    superpose_uses: int
    remainder_mass: float
    mode: str
    eps_per_use: float | None
    threshold: float
    passed: bool
    checkpoint_fidelities: list = field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            f"tv_distance={self.tv_distance!r}",
            f"qubits_direct={self.qubits_direct}",
            f"qubits_compressed={self.qubits_compressed}",
            f"superpose_uses={self.superpose_uses}",
            f"remainder_mass={self.remainder_mass!r}",
            f"mode={self.mode}",
            f"eps_per_use={'' if self.eps_per_use is None else repr(self.eps_per_use)}",
            f"threshold={self.threshold!r}",
            f"passed={'true' if self.passed else 'false'}",
        ]
        for step, fid in self.checkpoint_fidelities:
            lines.append(f"checkpoint_fidelity_{step}={fid!r}")
        return "\n".join(lines) + "\n"


def _require_valid(circuit: QramCircuit) -> None:
    violations = validate_qram(circuit)
    if violations:
        raise CircuitError("; ".join(violations))


def compressed_region(circuit: QramCircuit) -> QrtRegion:
    return QrtRegion(word_length=circuit.address_width, capacity=circuit.m,
                     start=circuit.W)


def compress_run(circuit: QramCircuit, input_bits: str, mode: str = "exact",
                 eps_per_use: float | None = None,
                 total_eps: float | None = None,
                 step_callback=None) -> CompressedRun:
    """Execute the circuit with the memory register stored as a tree region.

    ``mode`` is "exact" or "approx".  Approximate mode takes a per-use rank
    superposition budget ``eps_per_use``, or derives one as total_eps / (2 T)
    since each RAG costs at most two allocations.
    """
    _require_valid(circuit)
    if len(input_bits) != circuit.n:
        raise SimulationError(
            f"input length {len(input_bits)} does not match n={circuit.n}"
        )
    region = compressed_region(circuit)
    if mode == "approx":
        if eps_per_use is None:
            if total_eps is None:
                raise ValueError("approx mode needs eps_per_use or total_eps")
            eps_per_use = total_eps / (2 * max(circuit.T, 1))
        alloc_mode = RankSuperposition(max_k=region.block_count - 1,
                                       eps=eps_per_use)
    elif mode == "exact":
        if eps_per_use is not None or total_eps is not None:
            raise ValueError("exact mode takes no error budget")
        alloc_mode = "exact"
    else:
        raise ValueError(f"unknown mode {mode!r}")

    counters = OpCounters()
    work = SparseState.zero(circuit.W)
    state = work.tensor(prepare_canonical((), region.word_length, region.capacity))
    e_positions = list(range(circuit.address_width))
    b_position = circuit.swap_qubit
    for step, ins in enumerate(circuit.instructions, start=1):
        try:
            if isinstance(ins, Rag):
                state = swap(state, e_positions, region, b_position,
                             mode=alloc_mode, counters=counters)
            elif isinstance(ins, Read):
                state = apply_read(state, ins, input_bits)
            elif isinstance(ins, GateSpec):
                state = apply_gate(state, ins)
            else:
                raise SimulationError(f"unknown instruction {ins!r}")
        except QrtCapacityError as exc:
            raise CompressionError(str(exc), step) from exc
        if step_callback is not None:
            step_callback(step, state)
    return CompressedRun(circuit, mode, eps_per_use if mode == "approx" else None,
                         state, region, counters)


def map_direct_to_compressed(direct_state: SparseState, circuit: QramCircuit,
                             region: QrtRegion | None = None,
                             _cache: dict | None = None) -> SparseState:
    """Rewrite a direct-run state with each memory pattern as its canonical tree.

    This is the linear correspondence the compressed run is expected to track:
    |u>|v> maps to |u> tensor the canonical tree state for the set of 1
    positions of v.
    """
    region = region or compressed_region(circuit)
    W, M = circuit.W, circuit.M
    aw = circuit.address_width
    cache = _cache if _cache is not None else {}
    amps: dict[str, complex] = {}
    for basis, amp in direct_state.sorted_items():
        u, v = basis[:W], basis[W:]
        elements = frozenset(
            format(i, f"0{aw}b") for i in range(M) if v[i] == "1"
        )
        if elements not in cache:
            cache[elements] = prepare_canonical(
                elements, region.word_length, region.capacity
            )
        for rbits, ramp in cache[elements].sorted_items():
            key = u + rbits
            amps[key] = amps.get(key, 0) + amp * ramp
    return SparseState(W + region.total_bits, amps)


def equivalence_check(circuit: QramCircuit, input_bits: str, measured=None,
                      mode: str = "exact", eps_per_use: float | None = None,
                      total_eps: float | None = None,
                      checkpoints=()) -> EquivalenceReport:
    """Run both executions and compare their outcome distributions.

    ``measured`` lists work-qubit positions (defaults to all of them).
    ``checkpoints`` lists 1-based steps at which the compressed state is
    compared, by fidelity, against the canonical image of the direct state.
    """
    _require_valid(circuit)
    measured = list(range(circuit.W)) if measured is None else list(measured)
    for q in measured:
        if not 0 <= q < circuit.W:
            raise ValueError(f"measured position {q} is not a work qubit")
    checkpoints = set(checkpoints)

    direct_at: dict[int, SparseState] = {}

    def direct_cb(step, state):
        if step in checkpoints:
            direct_at[step] = state

    direct_final, report = run(circuit, input_bits, monitor_sparsity=True,
                               step_callback=direct_cb)
    if not report.ok:
        raise SparsityError(
            f"memory weight reached {report.max_weight} > declared m={circuit.m} "
            f"at step {report.first_violation_step}"
        )

    fidelities: list = []
    cache: dict = {}
    region = compressed_region(circuit)

    def compressed_cb(step, state):
        if step in checkpoints:
            expected = map_direct_to_compressed(direct_at[step], circuit,
                                                region, cache)
            fidelities.append((step, fidelity(expected, state)))

    result = compress_run(circuit, input_bits, mode=mode,
                          eps_per_use=eps_per_use, total_eps=total_eps,
                          step_callback=compressed_cb if checkpoints else None)

    dist_direct = measure_distribution(direct_final, measured)
    dist_comp = measure_distribution(result.final_state, measured)
    tv = tv_distance(dist_direct, dist_comp)
    if mode == "exact":
        threshold = EXACT_TV_THRESHOLD
    else:
        threshold = result.counters.superpose_uses * result.eps_per_use
    return EquivalenceReport(
        tv_distance=tv,
        qubits_direct=result.qubits_direct,
        qubits_compressed=result.qubits_compressed,
        superpose_uses=result.counters.superpose_uses,
        remainder_mass=result.counters.remainder_mass,
        mode=mode,
        eps_per_use=result.eps_per_use,
        threshold=threshold,
        passed=tv <= threshold,
        checkpoint_fidelities=fidelities,
    )


def random_sparse_circuit(seed: int, W: int, M: int, m: int, T: int,
                          n: int = 4) -> QramCircuit:
    """Deterministic random circuit that is m-sparse by construction.

    Address qubits only ever see classical X flips, so every RAG touches a
    known address; the generator tracks the set of addresses that may hold a
    1 and revisits an old address instead of opening a fresh one whenever the
    set is full.  Prefixes of the emitted instruction list stay m-sparse, so
    the list is simply truncated to T.
    """
    probe = QramCircuit(n, W, M, m, ())
    violations = validate_qram(probe)
    if violations:
        raise CircuitError("infeasible parameters: " + "; ".join(violations))

    rng = random.Random(seed)
    aw = probe.address_width
    swap_q = probe.swap_qubit
    nonaddr = list(range(aw, W))  # swap qubit and any spare work qubits
    read_width = ceil_log2(n)
    address_value = 0
    may_hold_one: set[int] = set()
    instructions = []

    def emit_address(target: int):
        nonlocal address_value
        for pos in range(aw):
            want = (target >> (aw - 1 - pos)) & 1
            have = (address_value >> (aw - 1 - pos)) & 1
            if want != have:
                instructions.append(GateSpec("X", (pos,)))
        address_value = target

    while len(instructions) < T:
        roll = rng.random()
        if roll < 0.35:
            kind = rng.choice(("H", "H", "X", "Y", "Z", "S", "T", "U3"))
            q = rng.choice(nonaddr)
            if kind == "U3":
                angles = tuple(rng.uniform(0, 2 * 3.141592653589793) for _ in range(3))
                instructions.append(GateSpec("U3", (q,), angles))
            else:
                instructions.append(GateSpec(kind, (q,)))
        elif roll < 0.50:
            target = rng.choice(nonaddr)
            control = rng.choice([q for q in range(W) if q != target])
            instructions.append(GateSpec("CNOT", (control, target)))
        elif roll < 0.62 and read_width < W:
            address = tuple(rng.sample(range(W), read_width))
            spare = [q for q in nonaddr if q not in address]
            if not spare:
                continue
            instructions.append(Read(address, rng.choice(spare)))
        else:
            if len(may_hold_one) < m and (not may_hold_one or rng.random() < 0.6):
                addr = rng.randrange(M)
            else:
                addr = rng.choice(sorted(may_hold_one))
            emit_address(addr)
            may_hold_one.add(addr)
            instructions.append(Rag())

    circuit = QramCircuit(n, W, M, m, tuple(instructions[:T]))
    _require_valid(circuit)
    return circuit
