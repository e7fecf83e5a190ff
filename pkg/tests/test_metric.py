"""The main recurrent tensor evaluation: oracles, invariants, costs, registers."""

import numpy as np
import pytest

from qngsim.ansatz import (
    AnsatzCircuit,
    phased_variant,
    prepare_ansatz_state,
    random_circuit,
    random_parameters,
)
from qngsim.baselines import naive_full_li_matrix
from qngsim.gates import (
    ControlledPauliRotation,
    PauliRotation,
    PauliString,
    PhasedPauliRotation,
)
from qngsim.metric import (
    LiTensor,
    compute_berry_vector,
    compute_geometric_tensor,
    main_algorithm_cost,
    read_tensor_binary,
    write_tensor_binary,
    write_tensor_csv,
)
from qngsim.statevector import OpCounter, Statevector, track_allocations
from qngsim.verify import finite_difference_tensor


def rx_circuit():
    return AnsatzCircuit(1, (PauliRotation(PauliString.single(0, "X")),))


# ---------------------------------------------------------------------------
# Worked examples
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.7, -2.4])
def test_single_rx_tensor_is_quarter(theta):
    tensor = compute_geometric_tensor(rx_circuit(), [theta], OpCounter())
    np.testing.assert_allclose(tensor.matrix, [[0.25]], atol=1e-12)
    np.testing.assert_allclose(tensor.berry.entries, [0.0], atol=1e-12)
    oracle = finite_difference_tensor(rx_circuit(), [theta])
    np.testing.assert_allclose(tensor.matrix, oracle, atol=1e-6)


def test_rz_then_rx_at_zero_matches_finite_differences():
    circuit = AnsatzCircuit(1, (
        PauliRotation(PauliString.single(0, "Z")),
        PauliRotation(PauliString.single(0, "X")),
    ))
    tensor = compute_geometric_tensor(circuit, [0.0, 0.0], OpCounter())
    oracle = finite_difference_tensor(circuit, [0.0, 0.0])
    np.testing.assert_allclose(tensor.matrix, oracle, atol=1e-6)


def test_single_phased_rotation_berry_entry():
    # phase term contributes i/2; the axis term averages to zero on |0>
    gate = PhasedPauliRotation(PauliString.single(0, "X"), phase_rate=0.5)
    circuit = AnsatzCircuit(1, (gate,))
    for theta in (0.0, 0.8, -1.3):
        berry = compute_berry_vector(circuit, [theta], OpCounter())
        np.testing.assert_allclose(berry.entries, [0.5j], atol=1e-12)


# ---------------------------------------------------------------------------
# Oracle equivalence
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_tensor_matches_naive_route(seed):
    # G from the recurrent algorithm vs (full naive L) - conj(T) T
    rng = np.random.default_rng([31, seed])
    circuit = random_circuit(4, 8, rng)
    params = random_parameters(8, rng)
    tensor = compute_geometric_tensor(circuit, params, OpCounter())
    full = naive_full_li_matrix(circuit, params, OpCounter())
    berry = compute_berry_vector(circuit, params, OpCounter()).entries
    oracle = full - np.outer(np.conj(berry), berry)
    np.testing.assert_allclose(tensor.matrix, oracle, atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_tensor_matches_finite_differences(seed):
    rng = np.random.default_rng([32, seed])
    circuit = random_circuit(4, 8, rng)
    params = random_parameters(8, rng)
    tensor = compute_geometric_tensor(circuit, params, OpCounter())
    oracle = finite_difference_tensor(circuit, params)
    np.testing.assert_allclose(tensor.matrix, oracle, atol=1e-6)


def test_gauge_invariance_under_parameter_dependent_phase():
    rng = np.random.default_rng(33)
    circuit = random_circuit(3, 6, rng, include_controlled=False)
    params = random_parameters(6, rng)
    plain = compute_geometric_tensor(circuit, params, OpCounter(),
                                     use_diagonal_shortcut=False)
    phased = compute_geometric_tensor(phased_variant(circuit, 0.7), params,
                                      OpCounter(), use_diagonal_shortcut=False)
    assert np.max(np.abs(plain.matrix - phased.matrix)) <= 1e-9
    assert plain.li.max_abs_difference(phased.li) >= 1e-3
    assert np.max(np.abs(plain.berry.entries - phased.berry.entries)) >= 1e-3
    # rate 0 is the plain gate family in phased clothing
    zero = compute_geometric_tensor(phased_variant(circuit, 0.0), params,
                                    OpCounter(), use_diagonal_shortcut=False)
    np.testing.assert_allclose(zero.matrix, plain.matrix, atol=1e-12)


# ---------------------------------------------------------------------------
# Structural invariants
# ---------------------------------------------------------------------------


def test_tensor_is_hermitian_by_construction():
    rng = np.random.default_rng(34)
    circuit = random_circuit(4, 10, rng)
    params = random_parameters(10, rng)
    matrix = compute_geometric_tensor(circuit, params, OpCounter()).matrix
    assert np.max(np.abs(matrix - matrix.conj().T)) <= 1e-12


def test_tensor_hermitian_with_both_triangles_computed_independently():
    # debug route: the naive strategy evaluates all P^2 entries separately
    rng = np.random.default_rng(35)
    circuit = random_circuit(3, 6, rng)
    params = random_parameters(6, rng)
    full = naive_full_li_matrix(circuit, params, OpCounter())
    berry = compute_berry_vector(circuit, params, OpCounter()).entries
    tensor = full - np.outer(np.conj(berry), berry)
    assert np.max(np.abs(tensor - tensor.conj().T)) <= 1e-10


@pytest.mark.parametrize("seed", range(4))
def test_real_part_positive_semidefinite(seed):
    rng = np.random.default_rng([36, seed])
    circuit = random_circuit(4, 8, rng)
    params = random_parameters(8, rng)
    metric = compute_geometric_tensor(circuit, params, OpCounter()).fubini_study_metric
    assert np.min(np.linalg.eigvalsh(metric)) >= -1e-8


def test_berry_entries_purely_imaginary_for_rotation_circuits():
    rng = np.random.default_rng(37)
    circuit = random_circuit(3, 9, rng, include_controlled=False)
    params = random_parameters(9, rng)
    berry = compute_berry_vector(circuit, params, OpCounter())
    assert np.max(np.abs(berry.entries.real)) <= 1e-10


def test_berry_vector_consistent_with_main_algorithm():
    rng = np.random.default_rng(38)
    circuit = random_circuit(3, 7, rng)
    params = random_parameters(7, rng)
    standalone = compute_berry_vector(circuit, params, OpCounter())
    main = compute_geometric_tensor(circuit, params, OpCounter())
    np.testing.assert_allclose(standalone.entries, main.berry.entries, atol=1e-12)


def test_berry_vector_linear_gate_cost():
    counter = OpCounter()
    circuit = random_circuit(3, 20, seed_or_rng=39)
    compute_berry_vector(circuit, random_parameters(20, 40), counter)
    assert counter.gate_applications <= 2 * 20 + 2
    assert counter.inner_products == 20


# ---------------------------------------------------------------------------
# Diagonal shortcut
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(4))
def test_diagonal_shortcut_equivalence(seed):
    rng = np.random.default_rng([41, seed])
    circuit = random_circuit(3, 8, rng)  # mixes plain and controlled rotations
    params = random_parameters(8, rng)
    fast = compute_geometric_tensor(circuit, params, OpCounter(),
                                    use_diagonal_shortcut=True)
    slow = compute_geometric_tensor(circuit, params, OpCounter(),
                                    use_diagonal_shortcut=False)
    assert np.max(np.abs(fast.matrix - slow.matrix)) <= 1e-10


def test_shortcut_skips_one_inner_product_per_eligible_gate():
    circuit = random_circuit(3, 9, seed_or_rng=42)
    params = random_parameters(9, 43)
    eligible = sum(
        isinstance(g, (PauliRotation, ControlledPauliRotation)) for g in circuit.gates
    )
    assert eligible == 9
    with_shortcut = OpCounter()
    compute_geometric_tensor(circuit, params, with_shortcut)
    without = OpCounter()
    compute_geometric_tensor(circuit, params, without, use_diagonal_shortcut=False)
    assert without.inner_products - with_shortcut.inner_products == eligible
    assert with_shortcut.gate_applications == without.gate_applications
    assert with_shortcut.clones == without.clones


def test_shortcut_not_taken_for_phased_gates():
    circuit = phased_variant(random_circuit(2, 4, 44, include_controlled=False), 0.3)
    with_flag = OpCounter()
    compute_geometric_tensor(circuit, random_parameters(4, 45), with_flag)
    without = OpCounter()
    compute_geometric_tensor(circuit, random_parameters(4, 45), without,
                             use_diagonal_shortcut=False)
    assert with_flag.inner_products == without.inner_products


# ---------------------------------------------------------------------------
# Cost and register accounting
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("num_parameters", [1, 2, 3, 8, 17])
def test_primitive_counts_match_recorded_formulas(num_parameters):
    rng = np.random.default_rng([46, num_parameters])
    circuit = random_circuit(3, num_parameters, rng)
    params = random_parameters(num_parameters, rng)
    counter = OpCounter()
    compute_geometric_tensor(circuit, params, counter, use_diagonal_shortcut=False)
    assert counter.as_tuple() == main_algorithm_cost(num_parameters)


@pytest.mark.parametrize("num_parameters", [3, 17])
def test_exactly_five_workspace_registers(num_parameters):
    rng = np.random.default_rng([47, num_parameters])
    circuit = random_circuit(3, num_parameters, rng)
    params = random_parameters(num_parameters, rng)
    with track_allocations() as tally:
        compute_geometric_tensor(circuit, params, OpCounter())
    assert tally.peak_live("workspace") == 5
    assert tally.total_allocated("workspace") == 5
    assert tally.total_allocated() == 6  # the circuit input is the only extra


def test_final_state_register_holds_ansatz_state():
    rng = np.random.default_rng(48)
    circuit = random_circuit(3, 6, rng)
    params = random_parameters(6, rng)
    register = Statevector.zeros(circuit.num_qubits)
    compute_geometric_tensor(circuit, params, OpCounter(), final_state=register)
    expected = prepare_ansatz_state(circuit, params, OpCounter())
    np.testing.assert_allclose(register.amplitudes, expected.amplitudes, atol=1e-14)


# ---------------------------------------------------------------------------
# LiTensor container and serialization
# ---------------------------------------------------------------------------


def test_li_tensor_packing_and_mirroring():
    li = LiTensor(3)
    li.set(0, 1, 1 + 2j)
    li.set(1, 1, 5.0)
    assert li.get(1, 0) == 1 - 2j
    matrix = li.to_matrix()
    assert matrix[1, 0] == 1 - 2j
    assert matrix[1, 1] == 5.0
    with pytest.raises(IndexError):
        li.set(2, 1, 0.0)


def test_li_tensor_diagonal_real_nonnegative():
    rng = np.random.default_rng(49)
    circuit = random_circuit(3, 8, rng)
    params = random_parameters(8, rng)
    li = compute_geometric_tensor(circuit, params, OpCounter(),
                                  use_diagonal_shortcut=False).li
    diag = np.array([li.get(i, i) for i in range(8)])
    assert np.max(np.abs(diag.imag)) <= 1e-10
    assert np.min(diag.real) >= -1e-10


def test_tensor_csv_output(tmp_path):
    tensor = compute_geometric_tensor(rx_circuit(), [0.4], OpCounter())
    path = tmp_path / "g.csv"
    write_tensor_csv(tensor, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "i,j,re,im"
    assert lines[1] == "0,0,0.25,0"


def test_tensor_binary_round_trip(tmp_path):
    rng = np.random.default_rng(50)
    circuit = random_circuit(3, 5, rng)
    tensor = compute_geometric_tensor(circuit, random_parameters(5, rng), OpCounter())
    path = tmp_path / "g.bin"
    write_tensor_binary(tensor, path)
    recovered = read_tensor_binary(path)
    np.testing.assert_array_equal(recovered, tensor.matrix)
    with pytest.raises(ValueError):
        read_tensor_binary(__file__)
