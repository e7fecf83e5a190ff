"""Command-line entry point: tensor computation, benchmarks, optimization, verify.

Commands
--------
``tensor``    compute the geometric tensor of a circuit file at given
              parameters and write it as CSV or a packed binary dump.
``bench``     sweep parameter counts for selected algorithms, recording
              measured against predicted primitive counts (plot-ready CSV).
``optimize``  natural-gradient (or plain-gradient) minimization of a
              Pauli-sum Hamiltonian file, emitting a per-step trace CSV.
``verify``    run the cross-algorithm, finite-difference, gauge and count
              suites; non-zero exit on any failure.

Exit codes: 0 success, 1 verification/optimization failure, 2 usage or parse
error, 3 resource limit.  The environment variable QNG_MEMORY_BUDGET_BYTES
overrides the default 4 GiB guard on the register-hungry alg7/alg8 baselines.

Circuit file format (one gate per line after the header; the gate's position
is its parameter index; ``#`` starts a comment):

    qubits N
    rx Q | ry Q | rz Q          Pauli rotation exp(i*theta/2 * sigma) on Q
    crx C Q | cry C Q | crz C Q rotation on Q controlled by C
    prx Q RATE | pry .. | prz ..  phased rotation (gauge tests)
    gen C P.. [; C P..]         exp(i*sum c_j*theta*sigma_j), <= 3 qubits,
                                e.g.  gen 0.5 X0 ; 0.25 Z0 Z1
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ansatz import AnsatzCircuit, random_circuit, random_parameters
from .baselines import (
    DEFAULT_MEMORY_BUDGET_BYTES,
    BaselineId,
    compute_li_tensor,
    cost_model,
)
from .errors import ParseError, ResourceLimitError, SingularMetricError
from .gates import (
    ControlledPauliRotation,
    GateGenerator,
    GeneratedGate,
    ParameterizedGate,
    PauliRotation,
    PauliString,
    PhasedPauliRotation,
    linear_generator_term,
)
from .metric import (
    compute_berry_vector,
    compute_geometric_tensor,
    main_algorithm_cost,
    write_tensor_binary,
    write_tensor_csv,
)
from .optimizer import (
    NATURAL_GRADIENT,
    PLAIN_GRADIENT,
    OptimizerConfig,
    parse_hamiltonian_file,
    run_optimization,
)
from .statevector import OpCounter, track_allocations
from .verify import DEFAULT_SEED, run_checks

__all__ = ["main", "parse_circuit_file", "parse_circuit_text"]

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3

# Default guard against accidentally allocating beyond-memory registers.
MAX_QUBITS_GUARD = 28
MEMORY_BUDGET_ENV = "QNG_MEMORY_BUDGET_BYTES"

BENCH_SEED_DEFAULT = 1234

_ROTATIONS = {"rx": "X", "ry": "Y", "rz": "Z"}
_CONTROLLED = {"crx": "X", "cry": "Y", "crz": "Z"}
_PHASED = {"prx": "X", "pry": "Y", "prz": "Z"}


# ---------------------------------------------------------------------------
# Circuit file parsing
# ---------------------------------------------------------------------------


def _parse_qubit(token: str, num_qubits: int, role: str) -> int:
    if not token.isdigit():
        raise ValueError(f"{role} must be a qubit index, got {token!r}")
    qubit = int(token)
    if qubit >= num_qubits:
        raise ValueError(f"{role} {qubit} out of range for {num_qubits} qubits")
    return qubit


def _parse_gate_line(tokens: list[str], num_qubits: int) -> ParameterizedGate:
    word = tokens[0].lower()
    if word in _ROTATIONS:
        if len(tokens) != 2:
            raise ValueError(f"{word} takes exactly one qubit")
        qubit = _parse_qubit(tokens[1], num_qubits, "target")
        return PauliRotation(PauliString.single(qubit, _ROTATIONS[word]))
    if word in _CONTROLLED:
        if len(tokens) != 3:
            raise ValueError(f"{word} takes a control and a target qubit")
        control = _parse_qubit(tokens[1], num_qubits, "control")
        target = _parse_qubit(tokens[2], num_qubits, "target")
        if control == target:
            raise ValueError(f"control and target must differ, both are {control}")
        return ControlledPauliRotation(control, PauliString.single(target, _CONTROLLED[word]))
    if word in _PHASED:
        if len(tokens) != 3:
            raise ValueError(f"{word} takes a qubit and a phase rate")
        qubit = _parse_qubit(tokens[1], num_qubits, "target")
        try:
            rate = float(tokens[2])
        except ValueError:
            raise ValueError(f"phase rate must be a number, got {tokens[2]!r}")
        return PhasedPauliRotation(PauliString.single(qubit, _PHASED[word]), rate)
    if word == "gen":
        terms = []
        for chunk in " ".join(tokens[1:]).split(";"):
            parts = chunk.split()
            if len(parts) < 2:
                raise ValueError("each gen term needs a coefficient and Pauli factors")
            try:
                rate = float(parts[0])
            except ValueError:
                raise ValueError(f"gen coefficient must be a number, got {parts[0]!r}")
            pauli = PauliString.parse(" ".join(parts[1:]))
            for qubit in pauli.qubits:
                _parse_qubit(str(qubit), num_qubits, "gen qubit")
            terms.append(linear_generator_term(rate, pauli))
        return GeneratedGate(GateGenerator(tuple(terms)))
    raise ValueError(f"unknown gate {word!r}")


def parse_circuit_text(text: str, source: str = "<string>") -> AnsatzCircuit:
    """Parse the line-based circuit format; see the module docstring."""
    num_qubits: int | None = None
    gates: list[ParameterizedGate] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if num_qubits is None:
            if tokens[0].lower() != "qubits" or len(tokens) != 2 or not tokens[1].isdigit():
                raise ParseError(f"{source}:{lineno}: expected header 'qubits N'")
            num_qubits = int(tokens[1])
            if num_qubits < 1:
                raise ParseError(f"{source}:{lineno}: need at least one qubit")
            continue
        try:
            gates.append(_parse_gate_line(tokens, num_qubits))
        except ValueError as exc:
            raise ParseError(f"{source}:{lineno}: {exc}")
    if num_qubits is None:
        raise ParseError(f"{source}: missing 'qubits N' header")
    if not gates:
        raise ParseError(f"{source}: circuit has no gates")
    return AnsatzCircuit(num_qubits, tuple(gates))


def parse_circuit_file(path) -> AnsatzCircuit:
    path = Path(path)
    return parse_circuit_text(path.read_text(), source=str(path))


def _parse_param_values(text: str, expected: int) -> np.ndarray:
    try:
        values = np.array([float(part) for part in text.split(",") if part.strip()])
    except ValueError:
        raise ParseError(f"could not parse parameter list {text!r}")
    if values.size != expected:
        raise ParseError(f"circuit has {expected} parameters, got {values.size}")
    return values


def _memory_budget() -> int:
    raw = os.environ.get(MEMORY_BUDGET_ENV)
    if raw is None:
        return DEFAULT_MEMORY_BUDGET_BYTES
    try:
        return int(raw)
    except ValueError:
        raise ParseError(f"invalid {MEMORY_BUDGET_ENV}={raw!r}")


def _guard_qubits(num_qubits: int, allow_large: bool) -> None:
    if num_qubits > MAX_QUBITS_GUARD and not allow_large:
        raise ResourceLimitError(
            f"{num_qubits} qubits exceeds the default guard of {MAX_QUBITS_GUARD}; "
            f"pass --allow-large to run anyway"
        )


# ---------------------------------------------------------------------------
# tensor
# ---------------------------------------------------------------------------


def _cmd_tensor(args: argparse.Namespace) -> int:
    circuit = parse_circuit_file(args.circuit)
    _guard_qubits(circuit.num_qubits, args.allow_large)
    params = _parse_param_values(args.params, circuit.num_parameters)
    counter = OpCounter()
    if args.algorithm == "main":
        tensor = compute_geometric_tensor(
            circuit, params, counter,
            use_diagonal_shortcut=not args.no_diag_shortcut,
        )
        matrix = tensor.matrix
    else:
        alg = BaselineId.parse(args.algorithm)
        li = compute_li_tensor(alg, circuit, params, counter,
                               memory_budget_bytes=_memory_budget())
        berry = compute_berry_vector(circuit, params, counter)
        matrix = li.to_matrix() - np.outer(np.conj(berry.entries), berry.entries)
    if args.format == "bin":
        write_tensor_binary(matrix, args.out)
    else:
        write_tensor_csv(matrix, args.out)
    size = circuit.num_parameters
    print(f"wrote {size}x{size} tensor to {args.out} "
          f"(gates={counter.gate_applications}, clones={counter.clones}, "
          f"inner_products={counter.inner_products})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

BENCH_HEADER = ("alg,P,gates,clones,inner_products,registers_peak,"
                "predicted_gates,predicted_clones,wall_ms,status")


@dataclass
class BenchRow:
    alg: str
    num_parameters: int
    counter: OpCounter | None
    registers_peak: int | None
    predicted_gates: int
    predicted_clones: int
    wall_ms: float | None

    def format_csv(self) -> str:
        predicted = f"{self.predicted_gates},{self.predicted_clones}"
        if self.counter is None:
            return (f"{self.alg},{self.num_parameters},,,,,{predicted},,skipped")
        return (
            f"{self.alg},{self.num_parameters},{self.counter.gate_applications},"
            f"{self.counter.clones},{self.counter.inner_products},"
            f"{self.registers_peak},{predicted},{self.wall_ms:.3f},ok"
        )


def _parse_algorithm_list(spec: str) -> list[str]:
    """Expand tokens like ``alg2..alg8,main`` or ``all`` into algorithm names."""
    ordered = [member.value for member in BaselineId]
    names: list[str] = []
    for token in spec.split(","):
        token = token.strip().lower()
        if not token:
            continue
        if token == "all":
            names.extend(ordered + ["main"])
        elif ".." in token:
            lo, hi = token.split("..", 1)
            BaselineId.parse(lo), BaselineId.parse(hi)
            start, stop = ordered.index(lo), ordered.index(hi)
            if start > stop:
                raise ParseError(f"empty algorithm range {token!r}")
            names.extend(ordered[start:stop + 1])
        elif token == "main":
            names.append("main")
        else:
            names.append(BaselineId.parse(token).value)
    if not names:
        raise ParseError(f"no algorithms selected in {spec!r}")
    return names


def _bench_point(alg: str, num_parameters: int, num_qubits: int, seed: int,
                 budget: int) -> BenchRow:
    # The circuit depends only on (seed, P) so all algorithms at one sweep
    # point see identical inputs.
    rng = np.random.default_rng([seed, num_parameters])
    circuit = random_circuit(num_qubits, num_parameters, rng)
    params = random_parameters(num_parameters, rng)
    if alg == "main":
        gates, clones, _ = main_algorithm_cost(num_parameters)
    else:
        model = cost_model(BaselineId.parse(alg), num_parameters)
        gates, clones = model.gates, model.clones
    counter = OpCounter()
    started = time.perf_counter()
    try:
        with track_allocations() as tally:
            if alg == "main":
                compute_geometric_tensor(circuit, params, counter)
            else:
                compute_li_tensor(BaselineId.parse(alg), circuit, params, counter,
                                  memory_budget_bytes=budget)
    except ResourceLimitError:
        return BenchRow(alg, num_parameters, None, None, gates, clones, None)
    wall_ms = (time.perf_counter() - started) * 1e3
    return BenchRow(alg, num_parameters, counter, tally.peak_live("workspace"),
                    gates, clones, wall_ms)


def run_bench(algorithms: list[str], p_values: list[int], num_qubits: int,
              seed: int, jobs: int, budget: int) -> list[BenchRow]:
    points = [(alg, p) for alg in algorithms for p in p_values]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(
                lambda point: _bench_point(point[0], point[1], num_qubits, seed, budget),
                points,
            ))
    else:
        rows = [_bench_point(alg, p, num_qubits, seed, budget) for alg, p in points]
    order = {alg: index for index, alg in enumerate(algorithms)}
    rows.sort(key=lambda row: (order[row.alg], row.num_parameters))
    return rows


def _cmd_bench(args: argparse.Namespace) -> int:
    algorithms = _parse_algorithm_list(args.algorithms)
    if args.plist:
        p_values = sorted({int(part) for part in args.plist.split(",") if part.strip()})
    else:
        if args.pmax < args.pmin:
            raise ParseError("--pmax must be >= --pmin")
        p_values = list(range(args.pmin, args.pmax + 1, args.pstep))
    if not p_values or min(p_values) < 1:
        raise ParseError("sweep values must be >= 1")
    rows = run_bench(algorithms, p_values, args.qubits, args.seed, args.jobs,
                     _memory_budget())
    lines = [BENCH_HEADER] + [row.format_csv() for row in rows]
    Path(args.out).write_text("\n".join(lines) + "\n")
    skipped = sum(1 for row in rows if row.counter is None)
    print(f"wrote {len(rows)} bench rows to {args.out}"
          + (f" ({skipped} skipped over memory budget)" if skipped else ""))
    return EXIT_OK


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------


def _cmd_optimize(args: argparse.Namespace) -> int:
    circuit = parse_circuit_file(args.circuit)
    _guard_qubits(circuit.num_qubits, args.allow_large)
    hamiltonian = parse_hamiltonian_file(args.hamiltonian)
    if hamiltonian.max_qubit >= circuit.num_qubits:
        raise ParseError(
            f"hamiltonian touches qubit {hamiltonian.max_qubit}, but the circuit "
            f"has {circuit.num_qubits} qubits"
        )
    if args.params is not None:
        initial = _parse_param_values(args.params, circuit.num_parameters)
    else:
        initial = random_parameters(circuit.num_parameters,
                                    np.random.default_rng(args.seed))
    config = OptimizerConfig(
        timestep=args.dt,
        regularization=args.lam,
        max_steps=args.steps,
        energy_tolerance=args.energy_tol,
        mode=PLAIN_GRADIENT if args.plain else NATURAL_GRADIENT,
    )
    trace = run_optimization(circuit, initial, hamiltonian, config)
    trace.write_csv(args.out)
    print(f"final energy {trace.final_energy:.12g} after "
          f"{trace.records[-1].step} steps; wrote trace to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _cmd_verify(args: argparse.Namespace) -> int:
    results = run_checks(seed=args.seed, quick=args.quick,
                         tolerance_override=args.tol)
    for result in results:
        print(result.format_line())
    failed = [result for result in results if not result.passed]
    if failed:
        print(f"{len(failed)} of {len(results)} checks FAILED")
        return EXIT_FAILURE
    print(f"all {len(results)} checks passed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument plumbing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qngsim",
        description="Geometric-tensor computation, benchmarks and "
                    "natural-gradient optimization on a statevector simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    tensor = sub.add_parser("tensor", help="compute the geometric tensor of a circuit")
    tensor.add_argument("--circuit", required=True, help="circuit file")
    tensor.add_argument("--params", required=True,
                        help="comma-separated parameter values, one per gate")
    tensor.add_argument("--algorithm", default="main",
                        help="main (default) or one of alg2..alg8")
    tensor.add_argument("--no-diag-shortcut", action="store_true",
                        help="always evaluate diagonal entries explicitly")
    tensor.add_argument("--format", choices=("csv", "bin"), default="csv")
    tensor.add_argument("--out", required=True, help="output path")
    tensor.add_argument("--allow-large", action="store_true",
                        help=f"lift the {MAX_QUBITS_GUARD}-qubit guard")
    tensor.set_defaults(handler=_cmd_tensor)

    bench = sub.add_parser("bench", help="sweep P, recording measured vs predicted costs")
    bench.add_argument("--algorithms", default="all",
                       help="comma list; ranges like alg2..alg8, plus main or all")
    bench.add_argument("--pmin", type=int, default=1)
    bench.add_argument("--pmax", type=int, default=32)
    bench.add_argument("--pstep", type=int, default=1)
    bench.add_argument("--plist", default=None,
                       help="explicit comma-separated P values (overrides the range)")
    bench.add_argument("--qubits", type=int, default=4,
                       help="fixed circuit width for every sweep point")
    bench.add_argument("--seed", type=int, default=BENCH_SEED_DEFAULT)
    bench.add_argument("--jobs", type=int, default=1,
                       help="sweep points computed in parallel")
    bench.add_argument("--out", required=True)
    bench.set_defaults(handler=_cmd_bench)

    optimize = sub.add_parser("optimize", help="minimize a Pauli-sum Hamiltonian")
    optimize.add_argument("--circuit", required=True)
    optimize.add_argument("--hamiltonian", required=True)
    optimize.add_argument("--dt", type=float, default=0.05, help="update timestep")
    optimize.add_argument("--lambda", dest="lam", type=float, default=1e-8,
                          help="Tikhonov shift added to the metric")
    optimize.add_argument("--steps", type=int, default=500, help="maximum steps")
    optimize.add_argument("--energy-tol", type=float, default=1e-10,
                          help="stop when the energy change drops below this")
    optimize.add_argument("--params", default=None,
                          help="initial parameters (default: seeded uniform)")
    optimize.add_argument("--seed", type=int, default=BENCH_SEED_DEFAULT)
    optimize.add_argument("--plain", action="store_true",
                          help="plain gradient descent instead of natural gradient")
    optimize.add_argument("--out", required=True)
    optimize.add_argument("--allow-large", action="store_true",
                          help=f"lift the {MAX_QUBITS_GUARD}-qubit guard")
    optimize.set_defaults(handler=_cmd_optimize)

    verify = sub.add_parser("verify", help="run the consistency suites")
    verify.add_argument("--quick", action="store_true",
                        help="reduced suite, finishes in a few seconds")
    verify.add_argument("--seed", type=int, default=DEFAULT_SEED)
    verify.add_argument("--tol", type=float, default=None,
                        help="override every comparison tolerance")
    verify.set_defaults(handler=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse has already printed its message
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.handler(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceLimitError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except SingularMetricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
