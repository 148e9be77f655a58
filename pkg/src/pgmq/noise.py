"""Stochastic Pauli noise injection and fidelity estimation.

Noise model: before every entangling gate, each participating qubit
independently picks up a Z error (dephasing) with a fixed probability, and a
uniformly random Pauli error (depolarization) with a probability scaled by
the gate's nuclear norm relative to a fully entangling two-qubit gate.
Single-qubit gates are noiseless.

Fidelities are estimated two ways: a closed-form success probability (the
chance that no error fires anywhere), and a Monte Carlo estimate comparing
sampled bitstring distributions to the ideal one via total variation
distance.  Monte Carlo draws use counter-based per-sample substreams so the
result is reproducible regardless of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import (Barrier, Circuit, CircuitError, GeneralizedCnot,
                      Measure, SingleQubit, ZzRotation, gate_apply,
                      pauli_gate)
from .cost import FULL_TQ_PHASE, nuclear_norm
from .gadgets import MultiQubitGate

STATEVECTOR_CAP = 16
_PAULI_CHOICES = ("X", "Y", "Z")


@dataclass(frozen=True)
class NoiseModel:
    """Per-qubit error probabilities attached to entangling gates."""

    p_dephase: float = 1e-3
    p_depol_tq: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        for name in ("p_dephase", "p_depol_tq"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise CircuitError(f"{name} must lie in [0, 1], got {p}")


def gate_norm(gate) -> float:
    """Nuclear norm of one entangling gate (0 for non-entangling gates)."""
    if isinstance(gate, MultiQubitGate):
        return nuclear_norm(gate)
    if isinstance(gate, ZzRotation):
        return abs(gate.theta)
    if isinstance(gate, GeneralizedCnot):
        return FULL_TQ_PHASE
    return 0.0


def depol_prob(gate, model: NoiseModel) -> float:
    """Per-qubit depolarization probability of a gate: the fully entangling
    two-qubit rate scaled by the gate's nuclear-norm ratio."""
    nu = gate_norm(gate)
    if nu == 0.0:
        return 0.0
    return min(1.0, model.p_depol_tq * nu / FULL_TQ_PHASE)


def _as_circuit(program) -> Circuit:
    if isinstance(program, Circuit):
        return program
    return program.realized_circuit()


def _entangling_sites(circuit: Circuit):
    """Yield (gate, participating qubits, depol rate placeholder) for every
    entangling gate in time order."""
    for g in circuit.gates:
        if isinstance(g, (Barrier, Measure, SingleQubit)):
            continue
        if gate_norm(g) > 0.0:
            yield g, tuple(sorted(set(g.qubits)))


def _draw_insertions(gate, qubits, model: NoiseModel, rng) -> list:
    """Pauli gates to insert before one entangling gate.  Draw order is
    fixed (qubit-major, dephasing then depolarization) for reproducibility."""
    p_dep = depol_prob(gate, model)
    out = []
    for q in qubits:
        if rng.random() < model.p_dephase:
            out.append(pauli_gate("Z", q))
        if rng.random() < p_dep:
            out.append(pauli_gate(_PAULI_CHOICES[rng.integers(3)], q))
    return out


def inject_noise(program, model: NoiseModel, rng) -> Circuit:
    """One noisy instance: the circuit with random Pauli errors inserted
    before each entangling gate (single-qubit gates stay noiseless)."""
    circuit = _as_circuit(program)
    out = Circuit(circuit.num_qubits, [], global_phase=circuit.global_phase)
    for g in circuit.gates:
        if not isinstance(g, (Barrier, Measure, SingleQubit)) \
                and gate_norm(g) > 0.0:
            for ins in _draw_insertions(g, tuple(sorted(set(g.qubits))),
                                        model, rng):
                out.add(ins)
        out.add(g)
    return out


def success_probability(program, model: NoiseModel) -> float:
    """Closed-form fidelity estimate: the probability that no error fires at
    any (entangling gate, participating qubit) site."""
    circuit = _as_circuit(program)
    f = 1.0
    for g, qubits in _entangling_sites(circuit):
        p_dep = depol_prob(g, model)
        f *= ((1.0 - model.p_dephase) * (1.0 - p_dep)) ** len(qubits)
    return f


# ---------------------------------------------------------------------------
# Statevector simulation and distributions
# ---------------------------------------------------------------------------

def statevector(circuit: Circuit, cap: int = STATEVECTOR_CAP) -> np.ndarray:
    """Final state |psi> = U |0...0> (gates applied in time order)."""
    n = circuit.num_qubits
    if n > cap:
        raise CircuitError(f"register too large for statevector ({n} > {cap})")
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1.0
    for g in circuit.gates:
        if isinstance(g, (Barrier, Measure)):
            continue
        psi = gate_apply(psi, g, n)
    return circuit.global_phase * psi


def probabilities(circuit: Circuit, num_bits: int | None = None,
                  cap: int = STATEVECTOR_CAP) -> np.ndarray:
    """Measurement probabilities over the low `num_bits` qubits (high qubits,
    e.g. an ancilla, are traced out)."""
    n = circuit.num_qubits
    num_bits = n if num_bits is None else num_bits
    p = np.abs(statevector(circuit, cap)) ** 2
    if num_bits < n:
        p = p.reshape(2 ** (n - num_bits), 2 ** num_bits).sum(axis=0)
    return p


@dataclass(frozen=True)
class ShotDistribution:
    """Bitstring distribution; keys are little-endian bitstrings rendered
    most-significant qubit first."""

    probs: dict
    total_shots: int | None = None

    def __post_init__(self):
        total = sum(self.probs.values())
        if abs(total - 1.0) > 1e-9:
            raise CircuitError(f"probabilities sum to {total}, not 1")
        widths = {len(k) for k in self.probs}
        if len(widths) > 1:
            raise CircuitError("mixed bitstring widths in distribution")

    @property
    def width(self) -> int:
        return len(next(iter(self.probs))) if self.probs else 0

    @staticmethod
    def from_vector(p: np.ndarray, total_shots: int | None = None,
                    keep_zeros: bool = False) -> "ShotDistribution":
        nb = int(p.size).bit_length() - 1
        probs = {format(i, f"0{nb}b"): float(v) for i, v in enumerate(p)
                 if keep_zeros or v > 0.0}
        return ShotDistribution(probs, total_shots)

    def vector(self) -> np.ndarray:
        out = np.zeros(2 ** self.width)
        for k, v in self.probs.items():
            out[int(k, 2)] = v
        return out


def tvd_fidelity(ideal: ShotDistribution, sampled: ShotDistribution) -> float:
    """One minus half the total variation distance between two bitstring
    distributions."""
    if ideal.probs and sampled.probs and ideal.width != sampled.width:
        raise CircuitError("distributions have different bit widths")
    keys = set(ideal.probs) | set(sampled.probs)
    tvd = sum(abs(ideal.probs.get(k, 0.0) - sampled.probs.get(k, 0.0))
              for k in keys)
    return 1.0 - 0.5 * tvd


def relative_error(f_comp: float, f_inp: float) -> float:
    """Improvement of the compiled fidelity over the input fidelity, as a
    fraction of the input infidelity; NaN when the input is already ideal."""
    if f_inp >= 1.0:
        return math.nan
    return (f_comp - f_inp) / (1.0 - f_inp)


# ---------------------------------------------------------------------------
# Monte Carlo fidelity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloResult:
    fidelity: float
    ci_low: float
    ci_high: float
    samples: int
    shots: int
    seed: int
    distribution: ShotDistribution = field(repr=False, default=None)
    bootstrap_fidelities: np.ndarray = field(repr=False, default=None,
                                             compare=False)

    def to_dict(self) -> dict:
        return {"fidelity": self.fidelity,
                "ci95": [self.ci_low, self.ci_high],
                "samples": self.samples, "shots": self.shots,
                "seed": self.seed}


def _sample_rng(seed: int, sample: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, sample]))


def _noisy_probabilities(circuit: Circuit, model: NoiseModel, rng,
                         num_bits: int, cap: int) -> np.ndarray:
    """Probabilities of one noisy instance, applying insertions inline with
    the same draw order as inject_noise."""
    n = circuit.num_qubits
    if n > cap:
        raise CircuitError(f"register too large for statevector ({n} > {cap})")
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1.0
    for g in circuit.gates:
        if isinstance(g, (Barrier, Measure)):
            continue
        if not isinstance(g, SingleQubit) and gate_norm(g) > 0.0:
            for ins in _draw_insertions(g, tuple(sorted(set(g.qubits))),
                                        model, rng):
                psi = gate_apply(psi, ins, n)
        psi = gate_apply(psi, g, n)
    p = np.abs(psi) ** 2
    if num_bits < n:
        p = p.reshape(2 ** (n - num_bits), 2 ** num_bits).sum(axis=0)
    return p


def monte_carlo_fidelity(program, input_circuit: Circuit, model: NoiseModel,
                         samples: int = 1000, shots: int = 10,
                         cap: int = STATEVECTOR_CAP,
                         bootstrap: int = 200) -> MonteCarloResult:
    """Total-variation fidelity of the noisy program against the ideal
    distribution of `input_circuit`, averaged over `samples` noisy instances
    of `shots` measurement shots each, with a bootstrap 95% CI."""
    circuit = _as_circuit(program)
    num_bits = input_circuit.num_qubits
    if circuit.num_qubits < num_bits:
        raise CircuitError("program register smaller than the input's")
    ideal = probabilities(input_circuit, cap=cap)
    dim = 2 ** num_bits
    seed = model.seed

    drawn = np.empty((samples, shots), dtype=np.int64)
    for s in range(samples):
        rng = _sample_rng(seed, s)
        p = _noisy_probabilities(circuit, model, rng, num_bits, cap)
        p = p / p.sum()
        drawn[s] = rng.choice(dim, size=shots, p=p)

    total = samples * shots
    merged = np.bincount(drawn.ravel(), minlength=dim) / total
    fid = 1.0 - 0.5 * float(np.abs(merged - ideal).sum())

    boot_rng = np.random.Generator(np.random.Philox(key=[seed, 2 ** 63]))
    fids = np.empty(bootstrap)
    for b in range(bootstrap):
        rows = boot_rng.integers(0, samples, size=samples)
        counts = np.bincount(drawn[rows].ravel(), minlength=dim) / total
        fids[b] = 1.0 - 0.5 * float(np.abs(counts - ideal).sum())
    # basic (reversed-percentile) bootstrap: resampling re-adds shot noise,
    # which biases the convex TVD statistic down; reflection corrects this
    q_lo, q_hi = np.percentile(fids, [2.5, 97.5])
    lo, hi = 2 * fid - q_hi, 2 * fid - q_lo

    dist = ShotDistribution.from_vector(merged, total_shots=total)
    return MonteCarloResult(fid, float(lo), float(hi), samples, shots, seed,
                            dist, fids)


def relative_error_ci(mc_comp: MonteCarloResult,
                      mc_inp: MonteCarloResult) -> tuple[float, float, float]:
    """Relative error with a basic-bootstrap 95% CI, pairing the bootstrap
    replicates of two independent Monte Carlo runs."""
    eps = relative_error(mc_comp.fidelity, mc_inp.fidelity)
    reps = np.array([relative_error(fc, fi)
                     for fc, fi in zip(mc_comp.bootstrap_fidelities,
                                       mc_inp.bootstrap_fidelities)])
    q_lo, q_hi = np.percentile(reps, [2.5, 97.5])
    return eps, float(2 * eps - q_hi), float(2 * eps - q_lo)
