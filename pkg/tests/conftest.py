import numpy as np
import pytest
from scipy.stats import unitary_group

from pgmq.circuit import Circuit, SingleQubit, ZzRotation, cnot, to_unitary
from pgmq.gadgets import GadgetSequence


def random_circuit(n: int, depth: int, rng, p_local=0.35, p_cnot=0.35) -> Circuit:
    """Random circuit over Haar single-qubit gates, CNOTs, and ZZ rotations."""
    c = Circuit(n, [])
    for _ in range(depth):
        r = rng.random()
        if r < p_local:
            q = int(rng.integers(n))
            c.add(SingleQubit(q, unitary_group.rvs(2, random_state=rng)))
        elif r < p_local + p_cnot:
            a, b = rng.choice(n, size=2, replace=False)
            c.add(cnot(int(a), int(b)))
        else:
            a, b = rng.choice(n, size=2, replace=False)
            c.add(ZzRotation(float(rng.uniform(-2.0, 2.0)), int(a), int(b)))
    return c


def sequence_unitary(seq: GadgetSequence) -> np.ndarray:
    """Dense unitary of a gadget sequence including frame and phase."""
    c = Circuit(seq.num_qubits, [])
    for g in seq.gadgets:
        c.add(g)
    for g in seq.frame.gates():
        c.add(g)
    c.global_phase = seq.phase
    return to_unitary(c)


@pytest.fixture
def rng():
    return np.random.default_rng(20260826)
