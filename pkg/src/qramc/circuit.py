"""Circuit model for quantum random-access-machine programs.

A circuit acts on W work qubits followed by M memory qubits; qubit 0 is the
leftmost bit of a written basis string.  Ordinary gates and input-oracle reads
touch work qubits only.  The random-access gate (RAG) has fixed wiring: the
address is read from work qubits 0..log2(M)-1 (most significant bit first),
the swap qubit is work qubit log2(M), and the addressed bits are the memory
qubits in their natural order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


SINGLE_QUBIT_GATES = ("H", "X", "Y", "Z", "S", "SDG", "T", "TDG")


class CircuitError(ValueError):
    """Raised on malformed circuit text or on a broken circuit restriction."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def is_power_of_two(x: int) -> bool:
    return x >= 1 and x & (x - 1) == 0


def ceil_log2(x: int) -> int:
    if x < 1:
        raise ValueError(f"ceil_log2 undefined for {x}")
    return (x - 1).bit_length()


@dataclass(frozen=True)
class GateSpec:
    """A gate application: one of the named gates, U3, or CNOT.

    ``angles`` holds (theta, phi, lam) for U3 only.  U3 is the generic
    single-qubit rotation with matrix

        [[cos(theta/2),            -e^{i lam} sin(theta/2)],
         [e^{i phi} sin(theta/2),  e^{i (phi+lam)} cos(theta/2)]]
    """

    kind: str
    targets: tuple[int, ...]
    angles: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class Read:
    """Input-oracle query: XOR input bit x[value(address)] into the target."""

    address: tuple[int, ...]
    target: int


@dataclass(frozen=True)
class Rag:
    """Random-access gate; operands are fixed by the circuit header."""


Instruction = GateSpec | Read | Rag


@dataclass(frozen=True)
class QramCircuit:
    n: int
    W: int
    M: int
    m: int
    instructions: tuple[Instruction, ...]

    @property
    def T(self) -> int:
        return len(self.instructions)

    @property
    def address_width(self) -> int:
        return self.M.bit_length() - 1

    @property
    def swap_qubit(self) -> int:
        return self.address_width

    @property
    def total_qubits(self) -> int:
        return self.W + self.M


def validate_qram(circuit: QramCircuit) -> list[str]:
    """Return all broken restrictions, empty if the circuit is legal.

    Each entry names the offending header field or 1-based instruction index.
    """
    errs = []
    if circuit.n < 1:
        errs.append(f"header: n must be >= 1 (got {circuit.n})")
    if circuit.W < 1:
        errs.append(f"header: W must be >= 1 (got {circuit.W})")
    if not is_power_of_two(circuit.M) or circuit.M < 2:
        errs.append(f"header: M must be a power of 2 and >= 2 (got {circuit.M})")
    if not is_power_of_two(circuit.m):
        errs.append(f"header: m must be a power of 2 (got {circuit.m})")
    elif circuit.m > circuit.M:
        errs.append(f"header: m must be <= M (got m={circuit.m}, M={circuit.M})")
    if is_power_of_two(circuit.M) and circuit.M >= 2:
        need = circuit.address_width + 1
        if circuit.W < need:
            errs.append(
                f"header: W must be >= log2(M)+1 = {need} to hold the address "
                f"register and swap qubit (got W={circuit.W})"
            )

    read_width = ceil_log2(circuit.n) if circuit.n >= 1 else 0
    for idx, ins in enumerate(circuit.instructions, start=1):
        where = f"instruction {idx}"
        if isinstance(ins, GateSpec):
            if ins.kind == "CNOT":
                if len(ins.targets) != 2:
                    errs.append(f"{where}: CNOT takes exactly 2 targets")
                elif ins.targets[0] == ins.targets[1]:
                    errs.append(f"{where}: CNOT targets must be distinct")
            elif ins.kind in SINGLE_QUBIT_GATES or ins.kind == "U3":
                if len(ins.targets) != 1:
                    errs.append(f"{where}: {ins.kind} takes exactly 1 target")
                if ins.kind == "U3" and (ins.angles is None or len(ins.angles) != 3):
                    errs.append(f"{where}: U3 requires 3 angles")
            else:
                errs.append(f"{where}: unknown gate kind {ins.kind!r}")
            for q in ins.targets:
                if not 0 <= q < circuit.W:
                    errs.append(
                        f"{where}: gates act on work qubits only "
                        f"(target {q} out of range 0..{circuit.W - 1})"
                    )
        elif isinstance(ins, Read):
            if len(ins.address) != read_width:
                errs.append(
                    f"{where}: READ needs exactly ceil(log2(n)) = {read_width} "
                    f"address qubits (got {len(ins.address)})"
                )
            if len(set(ins.address)) != len(ins.address):
                errs.append(f"{where}: READ address qubits must be distinct")
            if ins.target in ins.address:
                errs.append(f"{where}: READ target must not be an address qubit")
            for q in (*ins.address, ins.target):
                if not 0 <= q < circuit.W:
                    errs.append(
                        f"{where}: READ acts on work qubits only "
                        f"(qubit {q} out of range 0..{circuit.W - 1})"
                    )
        elif isinstance(ins, Rag):
            pass  # wiring fixed by the header; header rules cover it
        else:
            errs.append(f"{where}: unknown instruction {ins!r}")
    return errs


def _parse_int(token: str, line: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise CircuitError(f"expected integer {what}, got {token!r}", line) from None


def _parse_float(token: str, line: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise CircuitError(f"expected number {what}, got {token!r}", line) from None
    if not math.isfinite(value):
        raise CircuitError(f"{what} must be finite, got {token!r}", line)
    return value


def parse_circuit(text: str) -> QramCircuit:
    """Parse circuit text and validate it.

    Raises CircuitError with a line number on syntax problems, or listing the
    broken restrictions when the parsed circuit is illegal.
    """
    lines = text.splitlines()
    header = None
    header_line = 0
    instructions: list[Instruction] = []
    for lineno, raw in enumerate(lines, start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        tokens = body.split()
        if header is None:
            if tokens[0] != "QRAM":
                raise CircuitError("first line must be a 'QRAM n=... W=... M=... m=...' header", lineno)
            if len(tokens) != 5:
                raise CircuitError("header must have exactly the fields n, W, M, m", lineno)
            fields = {}
            for tok, name in zip(tokens[1:], ("n", "W", "M", "m")):
                if not tok.startswith(name + "="):
                    raise CircuitError(f"expected {name}=<int>, got {tok!r}", lineno)
                fields[name] = _parse_int(tok[len(name) + 1:], lineno, name)
            header = fields
            header_line = lineno
            continue

        op = tokens[0].upper()
        if op in SINGLE_QUBIT_GATES:
            if len(tokens) != 2:
                raise CircuitError(f"{op} takes exactly one qubit", lineno)
            instructions.append(GateSpec(op, (_parse_int(tokens[1], lineno, "qubit"),)))
        elif op == "U3":
            if len(tokens) != 5:
                raise CircuitError("U3 takes a qubit and three angles", lineno)
            q = _parse_int(tokens[1], lineno, "qubit")
            angles = tuple(_parse_float(t, lineno, "angle") for t in tokens[2:5])
            instructions.append(GateSpec("U3", (q,), angles))
        elif op == "CNOT":
            if len(tokens) != 3:
                raise CircuitError("CNOT takes a control and a target qubit", lineno)
            instructions.append(
                GateSpec("CNOT", (_parse_int(tokens[1], lineno, "control"),
                                  _parse_int(tokens[2], lineno, "target")))
            )
        elif op == "READ":
            if len(tokens) == 2:
                address: tuple[int, ...] = ()
                target = _parse_int(tokens[1], lineno, "target")
            elif len(tokens) == 3:
                address = tuple(
                    _parse_int(t, lineno, "address qubit")
                    for t in tokens[1].split(",") if t
                )
                target = _parse_int(tokens[2], lineno, "target")
            else:
                raise CircuitError("READ takes an address list and a target qubit", lineno)
            instructions.append(Read(address, target))
        elif op == "RAG":
            if len(tokens) != 1:
                raise CircuitError("RAG takes no operands", lineno)
            instructions.append(Rag())
        else:
            raise CircuitError(f"unknown instruction {tokens[0]!r}", lineno)

    if header is None:
        raise CircuitError("missing 'QRAM ...' header", len(lines) or 1)
    circuit = QramCircuit(header["n"], header["W"], header["M"], header["m"],
                          tuple(instructions))
    violations = validate_qram(circuit)
    if violations:
        raise CircuitError("; ".join(violations), header_line)
    return circuit


def serialize_circuit(circuit: QramCircuit) -> str:
    """Render the canonical text form (parse of the output reproduces the circuit)."""
    out = [f"QRAM n={circuit.n} W={circuit.W} M={circuit.M} m={circuit.m}"]
    for ins in circuit.instructions:
        if isinstance(ins, GateSpec):
            if ins.kind == "U3":
                t, p, l = ins.angles
                out.append(f"U3 {ins.targets[0]} {t!r} {p!r} {l!r}")
            elif ins.kind == "CNOT":
                out.append(f"CNOT {ins.targets[0]} {ins.targets[1]}")
            else:
                out.append(f"{ins.kind} {ins.targets[0]}")
        elif isinstance(ins, Read):
            if ins.address:
                out.append(f"READ {','.join(str(q) for q in ins.address)} {ins.target}")
            else:
                out.append(f"READ {ins.target}")
        else:
            out.append("RAG")
    return "\n".join(out) + "\n"
