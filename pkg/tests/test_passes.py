import math

import numpy as np
import pytest

from pgmq.circuit import (Circuit, CircuitError, Measure, SingleQubit,
                          ZzRotation, cnot, to_unitary)
from pgmq.cost import NO_ANCILLA, ANCILLA_MERGED, sequence_cost
from pgmq.gadgets import GadgetSequence, PhaseGadget
from pgmq.passes import (CnotLayer, CompileOptions, _exact_matching,
                         _greedy_matching, conjugate_sequence,
                         conjugation_cost_matrix, norm_reduction_step,
                         optimize, pg_left, pg_right, sequence_adjoint)
from pgmq.qasm import to_zz_basis
from conftest import random_circuit, sequence_unitary


def zz_circuit(n, depth, rng):
    return to_zz_basis(random_circuit(n, depth, rng))


def layer_unitary(layer):
    c = Circuit(layer.n, layer.to_gates())
    return to_unitary(c)


# --- CnotLayer -------------------------------------------------------------

def test_cnot_layer_replay_and_invertibility(rng):
    for _ in range(30):
        n = 4
        layer = CnotLayer(n)
        for _ in range(int(rng.integers(0, 10))):
            a, b = rng.choice(n, size=2, replace=False)
            layer.append(int(a), int(b))
        assert layer.replay_matches()
        assert layer.is_invertible()
        u = layer_unitary(layer)
        v = layer_unitary(layer.adjoint())
        assert np.max(np.abs(u @ v - np.eye(2 ** n))) < 1e-12


def test_cnot_layer_prepend_runs_first():
    layer = CnotLayer(3)
    layer.append(0, 1)
    layer.prepend(1, 2)
    u = layer_unitary(layer)
    want = to_unitary(Circuit(3, [cnot(1, 2), cnot(0, 1)]))
    assert np.max(np.abs(u - want)) < 1e-12


# --- gadget extraction -----------------------------------------------------

def test_pg_left_factors_exactly(rng):
    for _ in range(25):
        c = zz_circuit(int(rng.integers(2, 5)), int(rng.integers(1, 25)), rng)
        seq, layer = pg_left(c)
        got = sequence_unitary(seq) @ layer_unitary(layer)
        assert np.max(np.abs(got - to_unitary(c))) < 1e-9


def test_pg_right_factors_exactly(rng):
    for _ in range(25):
        c = zz_circuit(int(rng.integers(2, 5)), int(rng.integers(1, 25)), rng)
        layer, seq = pg_right(c)
        got = layer_unitary(layer) @ sequence_unitary(seq)
        assert np.max(np.abs(got - to_unitary(c))) < 1e-9


def test_pg_left_rejects_measure():
    c = Circuit(1, [Measure(0, 0)], classical_bits=1)
    with pytest.raises(CircuitError):
        pg_left(c)


def test_pg_left_rejects_noncanonical_cnot():
    from pgmq.circuit import GeneralizedCnot
    c = Circuit(2, [GeneralizedCnot("X", 0, "Z", 1)])
    with pytest.raises(CircuitError):
        pg_left(c)


def test_sequence_adjoint_dense(rng):
    for _ in range(25):
        c = zz_circuit(3, int(rng.integers(1, 20)), rng)
        seq, _ = pg_left(c)
        adj = sequence_adjoint(seq)
        u = sequence_unitary(seq)
        assert np.max(np.abs(sequence_unitary(adj) - u.conj().T)) < 1e-9


def test_pg_left_counts_commutation_events(rng):
    c = Circuit(3, [ZzRotation(0.3, 0, 1), cnot(0, 2), cnot(1, 2)])
    counter = {}
    pg_left(c, counter)
    # first CNOT crosses one gadget, second crosses one gadget
    assert counter["events"] == 2


# --- conjugation and norm reduction ----------------------------------------

def test_conjugate_sequence_dense(rng):
    for _ in range(30):
        n = 4
        c = zz_circuit(n, int(rng.integers(1, 20)), rng)
        seq, _ = pg_left(c)
        a, b = rng.choice(n, size=2, replace=False)
        conj = conjugate_sequence(seq, int(a), int(b))
        cu = to_unitary(Circuit(n, [cnot(int(a), int(b))]))
        want = cu @ sequence_unitary(seq) @ cu
        assert np.max(np.abs(sequence_unitary(conj) - want)) < 1e-9


def test_conjugation_cost_matrix_matches_bruteforce(rng):
    n = 3
    c = zz_circuit(n, 12, rng)
    seq, _ = pg_left(c)
    cm = conjugation_cost_matrix(seq, NO_ANCILLA)
    cur = float(sequence_cost(seq, NO_ANCILLA).total_norm)
    for a in range(n):
        for b in range(n):
            if a == b:
                assert cm[a, b] == pytest.approx(cur)
            else:
                want = sequence_cost(conjugate_sequence(seq, a, b),
                                     NO_ANCILLA).total_norm
                assert cm[a, b] == pytest.approx(want, abs=1e-12)


def test_norm_reduction_step_preserves_unitary_and_improves(rng):
    hits = 0
    for _ in range(20):
        n = 4
        c = zz_circuit(n, 18, rng)
        seq, _ = pg_left(c)
        applied, nxt, improved = norm_reduction_step(seq, NO_ANCILLA)
        if not improved:
            continue
        hits += 1
        u = sequence_unitary(seq)
        v = sequence_unitary(nxt)
        pre = to_unitary(Circuit(n, [cnot(a, b) for a, b in applied]))
        assert np.max(np.abs(pre @ v @ pre - u)) < 1e-9
        assert (sequence_cost(nxt, NO_ANCILLA).total_norm
                < sequence_cost(seq, NO_ANCILLA).total_norm + 1e-9)
    assert hits > 0


def test_greedy_matching_half_of_exact():
    weights = {(0, 1): 3.0, (1, 2): 2.9, (2, 3): 3.0, (0, 3): 1.0}
    greedy = _greedy_matching(weights)
    exact = _exact_matching(weights)
    wg = sum(weights[tuple(sorted(e))] for e in greedy)
    we = sum(weights[tuple(sorted(e))] for e in exact)
    assert wg >= we / 2 - 1e-12
    assert we == pytest.approx(6.0)


def test_matchings_are_vertex_disjoint(rng):
    weights = {}
    for a in range(6):
        for b in range(a + 1, 6):
            weights[(a, b)] = float(rng.random())
    for pairs in (_greedy_matching(weights), _exact_matching(weights)):
        used = [q for e in pairs for q in e]
        assert len(used) == len(set(used))


# --- the driver ------------------------------------------------------------

def program_unitary(prog):
    return to_unitary(prog.to_circuit())


def test_optimize_preserves_unitary(rng):
    for _ in range(10):
        n = int(rng.integers(2, 5))
        c = random_circuit(n, int(rng.integers(5, 30)), rng)
        prog = optimize(c)
        assert np.max(np.abs(program_unitary(prog) - to_unitary(c))) < 1e-8


def test_optimize_realized_circuit_no_ancilla(rng):
    for _ in range(6):
        n = 3
        c = random_circuit(n, 15, rng)
        prog = optimize(c, CompileOptions(scheme=NO_ANCILLA))
        u = to_unitary(prog.realized_circuit())
        assert np.max(np.abs(u - to_unitary(c))) < 1e-8


def test_optimize_realized_circuit_ancilla(rng):
    for _ in range(6):
        n = 3
        c = random_circuit(n, 15, rng)
        prog = optimize(c, CompileOptions(scheme=ANCILLA_MERGED))
        u = to_unitary(prog.realized_circuit())
        dim = 2 ** n
        if u.shape[0] == dim:        # no big gadget -> no ancilla wire needed
            assert np.max(np.abs(u - to_unitary(c))) < 1e-8
        else:
            assert np.max(np.abs(u[:dim, :dim] - to_unitary(c))) < 1e-8
            assert np.max(np.abs(u[dim:, :dim])) < 1e-10


def test_optimize_cost_trace_strictly_decreasing(rng):
    for _ in range(8):
        c = random_circuit(4, 25, rng)
        prog = optimize(c)
        trace = prog.cost_trace
        assert len(trace) == prog.iterations + 1
        for earlier, later in zip(trace, trace[1:]):
            assert later < earlier
        assert prog.cost().key() == trace[-1]


def test_optimize_keeps_measurement_map():
    c = Circuit(2, [cnot(0, 1), Measure(0, 1), Measure(1, 0)],
                classical_bits=2)
    prog = optimize(c)
    assert prog.measurement_map == {0: 1, 1: 0}


def test_optimize_rejects_mid_circuit_measure():
    c = Circuit(2, [Measure(0, 0), cnot(0, 1)], classical_bits=1)
    with pytest.raises(CircuitError):
        optimize(c)


def test_optimize_never_worse_than_baseline_count(rng):
    from pgmq.cost import baseline_parallel_merge
    from pgmq.qasm import to_zz_basis
    for _ in range(6):
        c = random_circuit(4, 20, rng, p_local=0.2)
        prog = optimize(c)
        base_count, _ = baseline_parallel_merge(to_zz_basis(c))
        assert prog.cost().mq_count <= base_count


def test_optimize_empty_circuit():
    prog = optimize(Circuit(2, []))
    assert prog.cost().mq_count == 0
    assert np.max(np.abs(program_unitary(prog) - np.eye(4))) < 1e-12
