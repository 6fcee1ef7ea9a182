"""Command-line interface.

Subcommands: ``run`` executes a circuit file directly and writes its exact
outcome distribution plus a sparsity report, ``compare`` runs the direct and
compressed executions and reports their total-variation distance, and
``demo`` drives the bundled data structures with a scripted, seeded
transcript.  All reports are plain text: sorted ``bitstring<TAB>probability``
lines for distributions and ``key=value`` lines otherwise.

Exit codes: 0 success, 1 usage/parse/validation errors, 2 runtime errors.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from fractions import Fraction

from .app_trees import AppTreeError, CpTree, KedTree, grid_id, sparsity_count
from .circuit import CircuitError, parse_circuit
from .compress import equivalence_check
from .radix_tree import dump_tree, from_set, to_set
from .state import SimulationError, measure_distribution, run


class _CliError(Exception):
    """Usage error; argparse failures are mapped here to keep exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliError(message)


def _parse_measure(spec: str, limit: int) -> list:
    """Accept 'a..b' (inclusive) or a comma list of positions."""
    try:
        if ".." in spec:
            lo, hi = spec.split("..", 1)
            positions = list(range(int(lo), int(hi) + 1))
        else:
            positions = [int(tok) for tok in spec.split(",") if tok]
    except ValueError:
        raise _CliError(f"bad measure spec {spec!r}") from None
    if not positions:
        raise _CliError("measure spec selects no qubits")
    for q in positions:
        if not 0 <= q < limit:
            raise _CliError(f"measured qubit {q} out of range 0..{limit - 1}")
    return positions


def _write(path: str | None, text: str) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _distribution_text(dist: dict) -> str:
    return "".join(f"{bits}\t{prob:.17g}\n" for bits, prob in sorted(dist.items()))


def _load_circuit(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_circuit(fh.read())


def _seed_from(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("QRAMC_SEED", "0"))


def cmd_run(args) -> int:
    circuit = _load_circuit(args.circuit)
    measured = (_parse_measure(args.measure, circuit.W)
                if args.measure else list(range(circuit.W)))
    state, report = run(circuit, args.input, monitor_sparsity=True)
    _write(args.output, _distribution_text(measure_distribution(state, measured)))
    sys.stdout.write(
        f"declared_m={circuit.m}\n"
        f"max_weight={report.max_weight}\n"
        f"sparse_ok={'true' if report.ok else 'false'}\n"
    )
    if not report.ok:
        sys.stdout.write(f"first_violation_step={report.first_violation_step}\n")
        if args.enforce_sparsity:
            sys.stderr.write(
                f"error: memory weight exceeded m={circuit.m} at step "
                f"{report.first_violation_step}\n"
            )
            return 2
    return 0


def cmd_compare(args) -> int:
    circuit = _load_circuit(args.circuit)
    measured = (_parse_measure(args.measure, circuit.W)
                if args.measure else list(range(circuit.W)))
    checkpoints = ()
    if args.checkpoints:
        checkpoints = range(1, circuit.T + 1)
    report = equivalence_check(
        circuit, args.input, measured, mode=args.mode,
        eps_per_use=args.eps if args.mode == "approx" else None,
        checkpoints=checkpoints,
    )
    _write(args.output, report.to_text())
    return 0 if report.passed else 2


def _demo_radix(args) -> int:
    items = ("0000", "1001", "1011", "1111")
    tree = from_set(items, 4)
    sys.stdout.write(f"set: {' '.join(items)}\n")
    sys.stdout.write(dump_tree(tree))
    sys.stdout.write(f"round_trip: {' '.join(sorted(to_set(tree)))}\n")
    return 0


def _demo_ked(args) -> int:
    rng = random.Random(_seed_from(args))
    sigma = args.sigma
    tree = KedTree(args.n, args.k, sigma)
    width = tree.label_width
    live = {}
    for step in range(2 * args.n):
        free = [i for i in range(1, args.n + 1) if i not in live]
        if live and (not free or rng.random() < 0.4):
            i = rng.choice(sorted(live))
            label = live.pop(i)
            tree.delete(i, label)
            op = f"delete ({i}, {label})"
        else:
            i = rng.choice(free)
            label = format(rng.randrange(sigma), f"0{width}b")
            live[i] = label
            tree.insert(i, label)
            op = f"insert ({i}, {label})"
        sys.stdout.write(f"{op} -> query={tree.query()}\n")
    encoding = tree.encode()
    sys.stdout.write(f"encoding_bits={len(encoding)}\n")
    sys.stdout.write(f"one_bits={sparsity_count(encoding)}\n")
    sys.stdout.write(f"final_query={tree.query()}\n")
    return 0


def _demo_cp(args) -> int:
    rng = random.Random(_seed_from(args))
    eps = Fraction(args.eps)
    points = [tuple(rng.randint(1, args.length) for _ in range(args.d))
              for _ in range(args.n)]
    tree = CpTree(points, eps, args.length)
    for i, p in enumerate(points, start=1):
        tree.insert(i, p)
        sys.stdout.write(
            f"insert ({i}, {p}) box={grid_id(p, eps)} -> query={tree.query()}\n"
        )
    for leaf in range(tree.sigma_size):
        size = tree._size(leaf)
        if size:
            sys.stdout.write(
                f"box {tree._box_of_leaf(leaf)}: points={size} "
                f"external={tree._externals[leaf]}\n"
            )
    encoding = tree.encode()
    sys.stdout.write(f"encoding_bits={len(encoding)}\n")
    sys.stdout.write(f"one_bits={sparsity_count(encoding)}\n")
    sys.stdout.write(f"final_query={tree.query()}\n")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="qramc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a circuit directly")
    p_run.add_argument("--circuit", required=True)
    p_run.add_argument("--input", required=True, help="oracle input bit-string")
    p_run.add_argument("--measure", help="'a..b' or comma list of work qubits")
    p_run.add_argument("--output", help="distribution file (default stdout)")
    p_run.add_argument("--enforce-sparsity", action="store_true")
    p_run.set_defaults(fn=cmd_run)

    p_cmp = sub.add_parser("compare", help="compare direct and compressed runs")
    p_cmp.add_argument("--circuit", required=True)
    p_cmp.add_argument("--input", required=True)
    p_cmp.add_argument("--measure")
    p_cmp.add_argument("--mode", choices=("exact", "approx"), default="exact")
    p_cmp.add_argument("--eps", type=float, default=0.1,
                       help="per-use allocator budget in approx mode")
    p_cmp.add_argument("--checkpoints", action="store_true",
                       help="compare the states step by step as well")
    p_cmp.add_argument("--output", help="report file (default stdout)")
    p_cmp.set_defaults(fn=cmd_compare)

    p_demo = sub.add_parser("demo", help="drive a bundled data structure")
    demo_sub = p_demo.add_subparsers(dest="demo", required=True)

    d_radix = demo_sub.add_parser("radix")
    d_radix.set_defaults(fn=_demo_radix)

    d_ked = demo_sub.add_parser("ked")
    d_ked.add_argument("--n", type=int, default=4)
    d_ked.add_argument("--k", type=int, default=2)
    d_ked.add_argument("--sigma", type=int, default=4)
    d_ked.add_argument("--seed", type=int)
    d_ked.set_defaults(fn=_demo_ked)

    d_cp = demo_sub.add_parser("cp")
    d_cp.add_argument("--d", type=int, default=1)
    d_cp.add_argument("--eps", default="2",
                      help="distance threshold (int or decimal string)")
    d_cp.add_argument("--n", type=int, default=4)
    d_cp.add_argument("--length", type=int, default=8, help="cube side")
    d_cp.add_argument("--seed", type=int)
    d_cp.set_defaults(fn=_demo_cp)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (CircuitError, AppTreeError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except SimulationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
