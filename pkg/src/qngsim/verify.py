"""End-to-end consistency suites behind the ``verify`` CLI command.

Each check pits independently computed quantities against each other on
seeded inputs and reports the worst deviation: every baseline strategy
against every other and against the main recurrent algorithm, the geometric
tensor against a central-difference evaluation of its definition, gauge
invariance under parameter-dependent global phases, the a-priori diagonal
shortcut against explicit evaluation, and instrumented primitive counts
against the closed-form cost model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import (
    AnsatzCircuit,
    coerce_parameters,
    phased_variant,
    prepare_ansatz_state,
    random_circuit,
    random_parameters,
)
from .baselines import BaselineId, compute_li_tensor, cost_model
from .metric import compute_berry_vector, compute_geometric_tensor
from .statevector import OpCounter

__all__ = [
    "CheckResult",
    "DEFAULT_SEED",
    "finite_difference_tensor",
    "run_checks",
]

DEFAULT_SEED = 2021

# The three reference gates+clones totals for P = 100 runs.
REFERENCE_TOTALS_P100 = {
    BaselineId.ALG3: 681750,
    BaselineId.ALG6: 20401,
    BaselineId.ALG8: 5251,
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    detail: str = ""

    def format_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = (
            f"{status}  {self.name}: max deviation {self.max_deviation:.3e} "
            f"(tolerance {self.tolerance:.3e})"
        )
        if self.detail:
            line += f" [{self.detail}]"
        return line


def finite_difference_tensor(circuit: AnsatzCircuit, params,
                             step: float = 1e-5) -> np.ndarray:
    """The geometric tensor straight from its definition, by central differences.

    Each ``|d_i psi>`` is ``(|psi(theta + h e_i)> - |psi(theta - h e_i)>)/2h``
    on the raw amplitude vectors (the global phase of the prepared state is
    well-defined, so no phase fixing is needed).
    """
    theta = coerce_parameters(circuit, params)
    count = circuit.num_parameters
    scratch = OpCounter()

    def amplitudes_at(shifted: np.ndarray) -> np.ndarray:
        return prepare_ansatz_state(circuit, shifted, scratch).amplitudes

    psi = amplitudes_at(theta)
    derivs = np.zeros((count, psi.size), dtype=np.complex128)
    for i in range(count):
        shift = np.zeros(count)
        shift[i] = step
        derivs[i] = (amplitudes_at(theta + shift) - amplitudes_at(theta - shift)) / (2 * step)
    overlaps = np.conj(derivs) @ derivs.T
    berry = derivs @ np.conj(psi)  # berry[i] = <psi | d_i psi>
    return overlaps - np.outer(np.conj(berry), berry)


# ---------------------------------------------------------------------------
# Individual checks
# ---------------------------------------------------------------------------


def _random_cases(seed: int, num_cases: int, num_qubits: int, num_parameters: int,
                  include_controlled: bool = True):
    for case in range(num_cases):
        rng = np.random.default_rng([seed, case])
        circuit = random_circuit(num_qubits, num_parameters, rng,
                                 include_controlled=include_controlled)
        params = random_parameters(num_parameters, rng)
        yield circuit, params


def check_baseline_equivalence(seed: int, quick: bool,
                               tolerance: float) -> CheckResult:
    """All seven baselines and the main algorithm agree on L entrywise."""
    num_cases = 4 if quick else 20
    num_qubits, num_parameters = (3, 6) if quick else (4, 8)
    worst = 0.0
    for circuit, params in _random_cases(seed, num_cases, num_qubits, num_parameters):
        tensors = [
            compute_li_tensor(alg, circuit, params, OpCounter())
            for alg in BaselineId
        ]
        main = compute_geometric_tensor(circuit, params, OpCounter(),
                                        use_diagonal_shortcut=False)
        tensors.append(main.li)
        for i, left in enumerate(tensors):
            for right in tensors[i + 1:]:
                worst = max(worst, left.max_abs_difference(right))
    return CheckResult("baseline_equivalence", worst <= tolerance, worst, tolerance,
                       f"{num_cases} circuits, P={num_parameters}")


def check_finite_difference(seed: int, quick: bool, tolerance: float) -> CheckResult:
    """Main-algorithm G against the central-difference oracle."""
    num_cases = 3 if quick else 8
    worst = 0.0
    for circuit, params in _random_cases(seed + 1, num_cases, 4, 8):
        computed = compute_geometric_tensor(circuit, params, OpCounter()).matrix
        oracle = finite_difference_tensor(circuit, params)
        worst = max(worst, float(np.max(np.abs(computed - oracle))))
    return CheckResult("finite_difference", worst <= tolerance, worst, tolerance,
                       f"{num_cases} circuits, central step 1e-5")


def check_gauge_invariance(seed: int, quick: bool, tolerance: float) -> CheckResult:
    """A parameter-dependent global phase moves L and T but not G."""
    num_cases = 2 if quick else 5
    phase_rate = 0.7
    worst_g = 0.0
    weakest_move = np.inf
    for circuit, params in _random_cases(seed + 2, num_cases, 3, 6,
                                         include_controlled=False):
        plain = compute_geometric_tensor(circuit, params, OpCounter(),
                                         use_diagonal_shortcut=False)
        phased = compute_geometric_tensor(phased_variant(circuit, phase_rate),
                                          params, OpCounter(),
                                          use_diagonal_shortcut=False)
        worst_g = max(worst_g, float(np.max(np.abs(plain.matrix - phased.matrix))))
        moved_l = plain.li.max_abs_difference(phased.li)
        moved_t = float(np.max(np.abs(plain.berry.entries - phased.berry.entries)))
        weakest_move = min(weakest_move, moved_l, moved_t)
    moved = weakest_move >= 1e-3
    detail = f"L and T moved by >= {weakest_move:.3e} while G stayed put"
    return CheckResult("gauge_invariance", worst_g <= tolerance and moved,
                       worst_g, tolerance, detail)


def check_diagonal_shortcut(seed: int, quick: bool, tolerance: float) -> CheckResult:
    """G with the a-priori diagonal shortcut equals G without it."""
    num_cases = 2 if quick else 6
    worst = 0.0
    for circuit, params in _random_cases(seed + 3, num_cases, 3, 8):
        fast = compute_geometric_tensor(circuit, params, OpCounter(),
                                        use_diagonal_shortcut=True)
        slow = compute_geometric_tensor(circuit, params, OpCounter(),
                                        use_diagonal_shortcut=False)
        worst = max(worst, float(np.max(np.abs(fast.matrix - slow.matrix))))
        worst = max(worst, float(np.max(np.abs(
            fast.berry.entries - slow.berry.entries))))
    return CheckResult("diagonal_shortcut", worst <= tolerance, worst, tolerance,
                       f"{num_cases} circuits with rotation and controlled gates")


def check_count_exactness(seed: int, quick: bool) -> CheckResult:
    """Instrumented gate/clone counts equal the cost model, integer for integer."""
    max_parameters = 10 if quick else 50
    rng = np.random.default_rng([seed, 99])
    worst = 0
    for num_parameters in range(1, max_parameters + 1):
        circuit = random_circuit(2, num_parameters, rng)
        params = random_parameters(num_parameters, rng)
        for alg in BaselineId:
            counter = OpCounter()
            compute_li_tensor(alg, circuit, params, counter)
            predicted = cost_model(alg, num_parameters)
            worst = max(worst, abs(counter.gate_applications - predicted.gates),
                        abs(counter.clones - predicted.clones))
    return CheckResult("count_exactness", worst == 0, float(worst), 0.0,
                       f"all baselines, P = 1..{max_parameters}")


def check_reference_totals(quick: bool) -> CheckResult:
    """Three recorded gates+clones totals at P = 100, measured and closed-form."""
    worst = 0
    rng = np.random.default_rng(7)
    circuit = random_circuit(2, 100, rng)
    params = random_parameters(100, rng)
    for alg, expected in REFERENCE_TOTALS_P100.items():
        predicted = cost_model(alg, 100)
        worst = max(worst, abs(predicted.gates + predicted.clones - expected))
        if quick and alg is BaselineId.ALG3:
            continue  # the cubic one takes a few seconds; closed form only
        counter = OpCounter()
        compute_li_tensor(alg, circuit, params, counter)
        worst = max(worst, abs(counter.gates_plus_clones - expected))
    return CheckResult("reference_totals", worst == 0, float(worst), 0.0,
                       "gates+clones at P=100: 681750 / 20401 / 5251")


def check_berry_consistency(seed: int, quick: bool, tolerance: float) -> CheckResult:
    """The standalone O(P) Berry-vector pass matches the main algorithm's T."""
    num_cases = 2 if quick else 6
    worst = 0.0
    for circuit, params in _random_cases(seed + 4, num_cases, 3, 7):
        standalone = compute_berry_vector(circuit, params, OpCounter())
        main = compute_geometric_tensor(circuit, params, OpCounter())
        worst = max(worst, float(np.max(np.abs(
            standalone.entries - main.berry.entries))))
    return CheckResult("berry_consistency", worst <= tolerance, worst, tolerance)


def run_checks(seed: int = DEFAULT_SEED, quick: bool = False,
               tolerance_override: float | None = None) -> list[CheckResult]:
    """Run the whole suite; an override tightens/loosens every comparison
    tolerance (the integer count checks are exact either way)."""

    def tol(default: float) -> float:
        return default if tolerance_override is None else tolerance_override

    return [
        check_count_exactness(seed, quick),
        check_reference_totals(quick),
        check_baseline_equivalence(seed, quick, tol(1e-10)),
        check_finite_difference(seed, quick, tol(1e-6)),
        check_gauge_invariance(seed, quick, tol(1e-9)),
        check_diagonal_shortcut(seed, quick, tol(1e-10)),
        check_berry_consistency(seed, quick, tol(1e-12)),
    ]
