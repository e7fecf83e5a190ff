"""Ordered parameterized circuits acting on a fixed basis input state.

A circuit is a sequence of P gates, each owning exactly one parameter; gate k
is bound index-for-index to entry k of the parameter vector.  Gates are
applied first-to-last, so the prepared state is ``U_P ... U_1 |in>``.
Parameters are radians for rotation gates and are never wrapped.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .gates import (
    ControlledPauliRotation,
    ParameterizedGate,
    PauliRotation,
    PauliString,
    PhasedPauliRotation,
)
from .statevector import OpCounter, Statevector, apply_operator, make_basis_state

__all__ = [
    "AnsatzCircuit",
    "as_rng",
    "input_state",
    "phased_variant",
    "prepare_ansatz_state",
    "prepare_partial_state",
    "random_circuit",
    "random_layered_circuit",
    "random_parameters",
]

_ROTATION_AXES = ("X", "Y", "Z")


@dataclass(frozen=True)
class AnsatzCircuit:
    """P parameterized gates on ``num_qubits`` qubits, fed ``|input_basis>``."""

    num_qubits: int
    gates: tuple[ParameterizedGate, ...]
    input_basis: int = 0

    def __post_init__(self) -> None:
        gates = tuple(self.gates)
        if self.num_qubits < 1:
            raise ValueError(f"num_qubits must be >= 1, got {self.num_qubits}")
        if not gates:
            raise ValueError("a circuit needs at least one gate")
        if not 0 <= self.input_basis < (1 << self.num_qubits):
            raise ValueError(
                f"input basis index {self.input_basis} out of range for "
                f"{self.num_qubits} qubits"
            )
        for position, gate in enumerate(gates):
            for qubit in gate.qubit_indices:
                if qubit >= self.num_qubits:
                    raise ValueError(
                        f"gate {position} acts on qubit {qubit}, but the circuit "
                        f"has only {self.num_qubits} qubits"
                    )
        object.__setattr__(self, "gates", gates)

    @property
    def num_parameters(self) -> int:
        return len(self.gates)


def as_rng(seed_or_rng: int | np.random.Generator) -> np.random.Generator:
    """Accept either a seed or a ready Generator (PCG64 via default_rng)."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def coerce_parameters(circuit: AnsatzCircuit, params) -> np.ndarray:
    """Validate and convert a parameter vector for ``circuit``."""
    values = np.asarray(params, dtype=np.float64)
    if values.shape != (circuit.num_parameters,):
        raise ValueError(
            f"expected {circuit.num_parameters} parameters, got shape {values.shape}"
        )
    return values


def input_state(circuit: AnsatzCircuit, kind: str = "input") -> Statevector:
    return make_basis_state(circuit.num_qubits, circuit.input_basis, kind=kind)


def prepare_ansatz_state(circuit: AnsatzCircuit, params,
                         counter: OpCounter) -> Statevector:
    """``U_P(theta_P) ... U_1(theta_1)|in>``; exactly P gate applications."""
    return prepare_partial_state(circuit, params, circuit.num_parameters, counter)


def prepare_partial_state(circuit: AnsatzCircuit, params, upto: int,
                          counter: OpCounter) -> Statevector:
    """The state after the first ``upto`` gates; ``upto=0`` gives ``|in>``."""
    values = coerce_parameters(circuit, params)
    if not 0 <= upto <= circuit.num_parameters:
        raise ValueError(
            f"upto must be in [0, {circuit.num_parameters}], got {upto}"
        )
    state = input_state(circuit, kind="state")
    for k in range(upto):
        apply_operator(state, circuit.gates[k].unitary(values[k]), counter)
    return state


# ---------------------------------------------------------------------------
# Seeded test circuits
# ---------------------------------------------------------------------------


def random_circuit(num_qubits: int, num_parameters: int,
                   seed_or_rng: int | np.random.Generator,
                   include_controlled: bool = True) -> AnsatzCircuit:
    """A seeded layered circuit with exactly ``num_parameters`` gates.

    Layers repeat the pattern "one rotation per qubit (axis drawn uniformly
    from X/Y/Z), then controlled-Z rotations around a ring", truncated once
    the requested gate count is reached.  With ``include_controlled=False``
    (or a single qubit) only the rotation sublayers are emitted, which keeps
    every gate eligible for the phased variant used in gauge tests.
    """
    if num_parameters < 1:
        raise ValueError(f"num_parameters must be >= 1, got {num_parameters}")
    rng = as_rng(seed_or_rng)
    gates: list[ParameterizedGate] = []
    use_ring = include_controlled and num_qubits >= 2
    while len(gates) < num_parameters:
        for qubit in range(num_qubits):
            axis = _ROTATION_AXES[int(rng.integers(0, 3))]
            gates.append(PauliRotation(PauliString.single(qubit, axis)))
            if len(gates) == num_parameters:
                break
        if use_ring and len(gates) < num_parameters:
            for qubit in range(num_qubits):
                target = (qubit + 1) % num_qubits
                gates.append(ControlledPauliRotation(qubit, PauliString.single(target, "Z")))
                if len(gates) == num_parameters:
                    break
    return AnsatzCircuit(num_qubits, tuple(gates))


def random_layered_circuit(num_qubits: int, layers: int,
                           seed_or_rng: int | np.random.Generator,
                           include_controlled: bool = True) -> AnsatzCircuit:
    """``layers`` full layers of the :func:`random_circuit` pattern."""
    if layers < 1:
        raise ValueError(f"layers must be >= 1, got {layers}")
    per_layer = num_qubits * 2 if (include_controlled and num_qubits >= 2) else num_qubits
    return random_circuit(num_qubits, layers * per_layer, seed_or_rng,
                          include_controlled=include_controlled)


def random_parameters(num_parameters: int,
                      seed_or_rng: int | np.random.Generator) -> np.ndarray:
    """Uniform draws from [0, 2*pi), one per parameter."""
    rng = as_rng(seed_or_rng)
    return rng.uniform(0.0, 2.0 * np.pi, size=num_parameters)


def phased_variant(circuit: AnsatzCircuit, phase_rate: float) -> AnsatzCircuit:
    """Replace every rotation by its phased variant at the given rate.

    Each gate picks up a parameter-dependent global phase
    ``exp(i * phase_rate * theta_k)``; only plain Pauli rotations (and already
    phased ones) can be converted.
    """
    converted = []
    for position, gate in enumerate(circuit.gates):
        if isinstance(gate, PhasedPauliRotation):
            converted.append(replace(gate, phase_rate=phase_rate))
        elif isinstance(gate, PauliRotation):
            converted.append(
                PhasedPauliRotation(gate.axis, phase_rate, scale=gate.scale)
            )
        else:
            raise ValueError(
                f"gate {position} ({type(gate).__name__}) has no phased variant"
            )
    return AnsatzCircuit(circuit.num_qubits, tuple(converted), circuit.input_basis)
