import math

import pytest

from qramc.circuit import GateSpec, QramCircuit, Rag, Read, parse_circuit
from qramc.state import (
    SimulationError,
    SparseState,
    apply_gate,
    apply_rag,
    apply_read,
    fidelity,
    measure_distribution,
    run,
    tv_distance,
)

INV_SQRT2 = 1 / math.sqrt(2)


def amp(state, basis):
    return state.amplitudes.get(basis, 0j)


def test_hadamard_on_zero():
    state = apply_gate(SparseState.zero(2), GateSpec("H", (0,)))
    assert amp(state, "00") == pytest.approx(INV_SQRT2)
    assert amp(state, "10") == pytest.approx(INV_SQRT2)


def test_x_flips_second_qubit():
    state = apply_gate(SparseState.zero(2), GateSpec("X", (1,)))
    assert state.amplitudes == {"01": pytest.approx(1)}


def test_cnot_spreads_entanglement():
    state = apply_gate(SparseState.zero(2), GateSpec("H", (0,)))
    state = apply_gate(state, GateSpec("CNOT", (0, 1)))
    assert amp(state, "00") == pytest.approx(INV_SQRT2)
    assert amp(state, "11") == pytest.approx(INV_SQRT2)
    assert amp(state, "10") == 0j


@pytest.mark.parametrize("kind", ["H", "X", "Y", "Z", "S", "SDG", "T", "TDG"])
def test_named_gates_preserve_norm(kind):
    state = apply_gate(SparseState.zero(3), GateSpec("H", (1,)))
    state = apply_gate(state, GateSpec(kind, (1,)))
    assert state.norm_sq() == pytest.approx(1.0, abs=1e-12)


def test_u3_preserves_norm_and_matches_named():
    # U3(pi, 0, pi) is X up to global phase
    state = apply_gate(SparseState.zero(1), GateSpec("U3", (0,), (math.pi, 0.0, math.pi)))
    assert abs(amp(state, "1")) == pytest.approx(1.0, abs=1e-12)
    assert state.norm_sq() == pytest.approx(1.0, abs=1e-12)


def test_dagger_gates_invert():
    state = SparseState.zero(1)
    state = apply_gate(state, GateSpec("H", (0,)))
    state = apply_gate(state, GateSpec("T", (0,)))
    state = apply_gate(state, GateSpec("TDG", (0,)))
    state = apply_gate(state, GateSpec("H", (0,)))
    assert amp(state, "0") == pytest.approx(1.0)


def test_gate_target_out_of_range():
    with pytest.raises(SimulationError, match="out of range"):
        apply_gate(SparseState.zero(2), GateSpec("H", (2,)))


def rag_circuit(W=3, M=4):
    return QramCircuit(2, W, M, 2, ())


def test_rag_moves_swap_bit_into_memory():
    # address register = 01 (value 1), swap bit = 1, memory all zero
    circuit = rag_circuit()
    state = SparseState.basis("011" + "0000")
    state = apply_rag(state, circuit)
    assert state.amplitudes == {"0100100": pytest.approx(1)}


def test_rag_identity_when_swap_and_memory_agree():
    circuit = rag_circuit()
    state = SparseState.basis("0000000")
    assert apply_rag(state, circuit).amplitudes == {"0000000": pytest.approx(1)}


def test_rag_is_an_involution():
    circuit = rag_circuit()
    start = apply_gate(SparseState.basis("0110000"), GateSpec("H", (2,)))
    once = apply_rag(start, circuit)
    twice = apply_rag(once, circuit)
    assert fidelity(start, twice) == pytest.approx(1.0, abs=1e-12)


def test_read_xors_selected_input_bit():
    instr = Read((0, 1), 2)
    # address 00 -> input bit 0 (='1'): target flips
    state = apply_read(SparseState.zero(3), instr, "10")
    assert state.amplitudes == {"001": pytest.approx(1)}
    # address 01 -> input bit 1 (='0'): unchanged
    state = apply_read(SparseState.basis("010"), instr, "10")
    assert state.amplitudes == {"010": pytest.approx(1)}


def test_read_twice_is_identity():
    instr = Read((0,), 1)
    start = apply_gate(SparseState.zero(2), GateSpec("H", (0,)))
    twice = apply_read(apply_read(start, instr, "11"), instr, "11")
    assert fidelity(start, twice) == pytest.approx(1.0, abs=1e-12)


def test_read_address_out_of_range():
    instr = Read((0, 1), 2)
    state = SparseState.basis("110")  # address value 3 >= n=3
    with pytest.raises(SimulationError, match="out of range"):
        apply_read(state, instr, "101")


def test_run_empty_circuit():
    circuit = parse_circuit("QRAM n=2 W=3 M=4 m=2\n")
    state, report = run(circuit, "00")
    assert state.amplitudes == {"0" * 7: pytest.approx(1)}
    assert report.max_weight == 0 and report.ok


def test_run_writes_one_into_memory_address_three():
    # set address to 3 (bits 11), raise swap bit, RAG
    text = "QRAM n=2 W=3 M=4 m=2\nX 0\nX 1\nX 2\nRAG\n"
    state, report = run(parse_circuit(text), "00")
    (basis,) = state.amplitudes
    assert basis[3:] == "0001"
    assert report.max_weight == 1
    assert report.per_step_max_weight == [0, 0, 0, 0, 1]


def test_run_superposed_write_reports_weight_one():
    text = "QRAM n=2 W=3 M=4 m=2\nH 2\nRAG\n"
    state, report = run(parse_circuit(text), "00")
    weights = {basis[3:].count("1") for basis in state.amplitudes}
    assert weights == {0, 1}
    assert report.max_weight == 1 and report.ok


def test_run_is_deterministic():
    text = "QRAM n=2 W=3 M=4 m=2\nH 2\nT 2\nRAG\nX 0\nRAG\n"
    a, _ = run(parse_circuit(text), "10")
    b, _ = run(parse_circuit(text), "10")
    assert a == b
    da = measure_distribution(a, [0, 1, 2])
    db = measure_distribution(b, [0, 1, 2])
    assert da == db


def test_measure_distribution_marginals():
    bell = apply_gate(SparseState.zero(2), GateSpec("H", (0,)))
    bell = apply_gate(bell, GateSpec("CNOT", (0, 1)))
    assert measure_distribution(bell, [0]) == pytest.approx({"0": 0.5, "1": 0.5})
    assert measure_distribution(SparseState.basis("01"), [1]) == {"1": pytest.approx(1.0)}
    plus = apply_gate(apply_gate(SparseState.zero(2), GateSpec("H", (0,))),
                      GateSpec("H", (1,)))
    assert measure_distribution(plus, [0, 1]) == pytest.approx(
        {"00": 0.25, "01": 0.25, "10": 0.25, "11": 0.25}
    )


def test_norm_accumulation_over_long_run():
    lines = ["QRAM n=2 W=3 M=4 m=2"] + ["H 2", "T 2", "RAG"] * 40
    state, _ = run(parse_circuit("\n".join(lines) + "\n"), "00")
    assert abs(state.norm_sq() - 1.0) <= 1e-9


def test_tv_distance():
    assert tv_distance({"0": 1.0}, {"0": 1.0}) == 0
    assert tv_distance({"0": 1.0}, {"1": 1.0}) == pytest.approx(1.0)
    assert tv_distance({"0": 0.75, "1": 0.25}, {"0": 0.25, "1": 0.75}) == pytest.approx(0.5)
