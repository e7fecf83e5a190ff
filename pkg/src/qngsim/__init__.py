"""Statevector simulation of quantum natural gradient.

The package computes the quantum geometric tensor of a parameterized circuit
with a recurrent algorithm costing O(P^2) gate/clone operations and a fixed
number of workspace registers, validates it against seven reference
strategies and finite differences, and uses it to drive natural-gradient
minimization of Pauli-sum Hamiltonians.
"""

from .ansatz import (
    AnsatzCircuit,
    input_state,
    phased_variant,
    prepare_ansatz_state,
    prepare_partial_state,
    random_circuit,
    random_layered_circuit,
    random_parameters,
)
from .baselines import (
    DEFAULT_MEMORY_BUDGET_BYTES,
    BaselineId,
    compute_li_tensor,
    cost_model,
)
from .errors import (
    ParseError,
    ResourceLimitError,
    SingularMetricError,
    UnsupportedGateError,
)
from .gates import (
    ControlledPauliRotation,
    GateGenerator,
    GeneratedGate,
    GeneratorTerm,
    ParameterizedGate,
    PauliRotation,
    PauliString,
    PhasedPauliRotation,
    linear_generator_term,
)
from .metric import (
    BerryVector,
    GeometricTensor,
    LiTensor,
    compute_berry_vector,
    compute_geometric_tensor,
    main_algorithm_cost,
    read_tensor_binary,
    write_tensor_binary,
    write_tensor_csv,
)
from .optimizer import (
    NATURAL_GRADIENT,
    PLAIN_GRADIENT,
    OptimizationTrace,
    OptimizerConfig,
    PauliSumHamiltonian,
    StepRecord,
    energy_expectation,
    energy_gradient,
    natural_gradient_step,
    parse_hamiltonian_file,
    parse_hamiltonian_text,
    run_optimization,
)
from .statevector import (
    MatrixGateOperator,
    OpCounter,
    PauliStringOperator,
    Statevector,
    apply_operator,
    clone_into,
    inner_product,
    make_basis_state,
    track_allocations,
)

__version__ = "0.1.0"
