"""Cost model: nuclear-norm of multiqubit gates, realization of gadget
sequences into native gates (with or without an ancilla-merged interface),
the straightforward parallel-merge baseline, and benchmark metrics.

Realization conventions:
  * a one-qubit gadget is a frame rotation and never counts as a multiqubit
    gate;
  * a two-qubit gadget is exactly one native gate (pair phase alpha*pi/2)
    plus axis-change locals;
  * larger gadgets use the fanout construction: two star gates without an
    ancilla, or interface-merged star gates (M+1 for a run of M) with one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, CircuitError, GeneralizedCnot, SingleQubit, \
    ZzRotation
from .gadgets import (
    _Z_TO,
    GadgetSequence,
    LocalFrame,
    MultiQubitGate,
    PhaseGadget,
    fanout_to_mq,
    merge_interface,
    pauli_rotation,
    pg_commutes,
)

NO_ANCILLA = "no-ancilla"
ANCILLA_MERGED = "ancilla-merged"
AUTO = "auto"

FULL_TQ_PHASE = math.pi / 4


@dataclass(frozen=True)
class CostVector:
    """Lexicographic compilation cost: gate count first, then total norm."""

    mq_count: int
    total_norm: float

    def key(self, weight: float | None = None):
        if weight is None:
            return (self.mq_count, round(self.total_norm, 9))
        return round(self.mq_count + weight * self.total_norm, 9)


def nuclear_norm(gate: MultiQubitGate | np.ndarray) -> float:
    """Sum of absolute eigenvalues of the symmetric phase matrix."""
    m = gate.phase_matrix() if isinstance(gate, MultiQubitGate) else np.asarray(gate)
    if m.size == 0:
        return 0.0
    if np.max(np.abs(m - m.T)) > 1e-12:
        raise CircuitError("phase matrix must be symmetric")
    return float(np.sum(np.abs(np.linalg.eigvalsh(m))))


def star_norm(k: int, theta: float = FULL_TQ_PHASE) -> float:
    """Closed-form nuclear norm of a star-shaped gate with k spokes."""
    return abs(theta) * math.sqrt(k)


@dataclass(eq=False)
class Realization:
    """Native-gate realization of a gadget sequence."""

    num_qubits: int              # including the ancilla when used
    items: list                  # time-ordered gates (locals + MultiQubitGate)
    mq_gates: list               # the MultiQubitGate subset, in order
    phase: complex
    ancilla: int | None = None
    clifford_gates: list = None  # fanout/interface subset (Clifford phases)

    def __post_init__(self):
        if self.clifford_gates is None:
            self.clifford_gates = []

    def cost(self) -> CostVector:
        return CostVector(len(self.mq_gates),
                          sum((nuclear_norm(g) for g in self.mq_gates), 0.0))

    def to_circuit(self) -> Circuit:
        c = Circuit(self.num_qubits, [], global_phase=self.phase)
        for g in self.items:
            c.add(g)
        return c


def _emit_frame(frame: LocalFrame, mq: MultiQubitGate, items: list,
                mq_gates: list, cliffords: list | None = None) -> complex:
    items.extend(frame.right_gates())
    if mq.pairs:
        items.append(mq)
        mq_gates.append(mq)
        if cliffords is not None:
            cliffords.append(mq)
    items.extend(frame.left_gates())
    return frame.phase


def _emit_pair_group(group: list, items: list, mq_gates: list) -> None:
    """One programmable gate implementing a product of two-qubit gadgets
    whose per-qubit axes are consistent: conjugate each touched qubit into
    the Z basis and sum the pair phases."""
    axes: dict = {}
    pairs: dict = {}
    for g in group:
        a, b = g.support
        axes[a] = axes[b] = g.axis
        pairs[(a, b)] = pairs.get((a, b), 0.0) + g.alpha * math.pi / 2
    conj = sorted(q for q, ax in axes.items() if ax != "Z")
    for q in conj:
        items.append(SingleQubit(q, _Z_TO[axes[q]].conj().T, "basis"))
    mq = MultiQubitGate(pairs)
    if mq.pairs:
        items.append(mq)
        mq_gates.append(mq)
    for q in conj:
        items.append(SingleQubit(q, _Z_TO[axes[q]], "basis"))


def _stream_units(gadgets: list) -> list:
    """Partition a gadget stream into realization units, in time order:
    ("single", g), ("pairs", [g, ...]) for maximal groups of consecutive
    two-qubit gadgets with consistent per-qubit axes (single-qubit gadgets
    that commute with a pending group hop in front of it), ("big", g)."""
    units: list = []
    axes: dict = {}
    group: list = []

    def flush():
        nonlocal axes, group
        if group:
            units.append(("pairs", group))
        axes, group = {}, []

    for g in gadgets:
        k = len(g.support)
        if k == 2:
            if group and any(axes.get(q, g.axis) != g.axis for q in g.support):
                flush()
            group.append(g)
            for q in g.support:
                axes[q] = g.axis
        elif k == 1:
            if group and not all(pg_commutes(g, h) for h in group):
                flush()
            units.append(("single", g))
        else:
            flush()
            units.append(("big", g))
    flush()
    return units


def _realize_no_ancilla(seq: GadgetSequence) -> Realization:
    items: list = []
    mq_gates: list = []
    cliffords: list = []
    phase = seq.phase
    for kind, val in _stream_units(seq.gadgets):
        if kind == "single":
            items.append(pauli_rotation(val.axis, -val.alpha * math.pi,
                                        val.support[0]))
        elif kind == "pairs":
            _emit_pair_group(val, items, mq_gates)
        else:
            g = val
            jstar = g.support[0]
            controls = [q for q in g.support if q != jstar]
            taxis = "X" if g.axis == "Z" else "Z"
            fan = [GeneralizedCnot(g.axis, q, taxis, jstar) for q in controls]
            mq, frame = fanout_to_mq(fan)
            phase *= _emit_frame(frame, mq, items, mq_gates, cliffords)
            items.append(pauli_rotation(g.axis, -g.alpha * math.pi, jstar))
            mq2, frame2 = fanout_to_mq(fan)
            phase *= _emit_frame(frame2, mq2, items, mq_gates, cliffords)
    items.extend(seq.frame.gates())
    return Realization(seq.num_qubits, items, mq_gates, phase,
                       clifford_gates=cliffords)


def _realize_ancilla(seq: GadgetSequence, ancilla: int | None = None) -> Realization:
    a = seq.num_qubits if ancilla is None else ancilla
    n = max(seq.num_qubits, a + 1)
    items: list = []
    mq_gates: list = []
    cliffords: list = []
    phase = seq.phase

    def fan_gate(g: PhaseGadget):
        fan = [GeneralizedCnot(g.axis, q, "Y", a) for q in g.support]
        return fanout_to_mq(fan)

    def emit_run(run: list) -> None:
        """M consecutive large-support gadgets as M+1 multiqubit gates:
        leading fanout, merged interfaces, trailing fanout."""
        nonlocal phase
        mq, frame = fan_gate(run[0])
        phase *= _emit_frame(frame, mq, items, mq_gates, cliffords)
        for i, g in enumerate(run):
            items.append(pauli_rotation("Z", -g.alpha * math.pi, a))
            if i + 1 < len(run):
                h = run[i + 1]
                mq, frame = merge_interface(g.support, h.support, a,
                                            g.axis, h.axis)
                phase *= _emit_frame(frame, mq, items, mq_gates, cliffords)
        mq, frame = fan_gate(run[-1])
        phase *= _emit_frame(frame, mq, items, mq_gates, cliffords)

    run: list = []
    for kind, val in _stream_units(seq.gadgets):
        if kind == "big":
            run.append(val)
            continue
        if run and not (kind == "single"
                        and all(pg_commutes(val, h) for h in run)):
            emit_run(run)
            run = []
        if kind == "single":
            items.append(pauli_rotation(val.axis, -val.alpha * math.pi,
                                        val.support[0]))
        else:
            _emit_pair_group(val, items, mq_gates)
    if run:
        emit_run(run)
    items.extend(seq.frame.gates())
    return Realization(n, items, mq_gates, phase, ancilla=a,
                       clifford_gates=cliffords)


def realize(seq: GadgetSequence, scheme: str = AUTO,
            ancilla: int | None = None) -> Realization:
    """Turn a gadget sequence into native multiqubit gates plus locals.

    With the ancilla scheme, a run of M multiqubit gadgets costs M+1 gates
    (interfaces merged); without, each costs two star gates.  `auto` picks
    the scheme with the lower cost (count first, then norm)."""
    if scheme == NO_ANCILLA:
        return _realize_no_ancilla(seq)
    if scheme == ANCILLA_MERGED:
        if ancilla is not None and any(ancilla in g.support for g in seq.gadgets):
            raise CircuitError("ancilla collides with a gadget support")
        return _realize_ancilla(seq, ancilla)
    if scheme == AUTO:
        r1 = _realize_no_ancilla(seq)
        r2 = _realize_ancilla(seq, ancilla)
        return r1 if r1.cost().key() <= r2.cost().key() else r2
    raise CircuitError(f"unknown realization scheme {scheme!r}")


def sequence_cost(seq: GadgetSequence, scheme: str = AUTO) -> CostVector:
    return realize(seq, scheme).cost()


# ---------------------------------------------------------------------------
# Baseline and metrics
# ---------------------------------------------------------------------------

def baseline_parallel_merge(circuit: Circuit) -> tuple[int, float]:
    """Fuse only trivially parallel entangling gates (disjoint supports, no
    intervening single-qubit gate) into shared multiqubit gates; returns the
    resulting (gate count, total nuclear norm)."""
    layers: list[dict] = []
    support: set[int] = set()
    pairs: dict = {}

    def flush():
        nonlocal pairs, support
        if pairs:
            layers.append(pairs)
        pairs, support = {}, set()

    for g in circuit.gates:
        if isinstance(g, ZzRotation):
            theta = g.theta
        elif isinstance(g, GeneralizedCnot):
            theta = FULL_TQ_PHASE
        else:
            qs = set(g.qubits)
            if qs & support:
                flush()
            continue
        a, b = sorted(g.qubits)
        if {a, b} & support:
            flush()
        key = (a, b)
        pairs[key] = pairs.get(key, 0.0) + theta
        support.update((a, b))
    flush()
    count = len(layers)
    norm = sum(nuclear_norm(MultiQubitGate(dict(p))) for p in layers)
    return count, norm


def input_norm(circuit: Circuit) -> float:
    """Total nuclear norm of the input's entangling gates, one per gate."""
    total = 0.0
    for g in circuit.gates:
        if isinstance(g, ZzRotation):
            total += abs(g.theta)
        elif isinstance(g, GeneralizedCnot):
            total += FULL_TQ_PHASE
    return total


def metrics(seq: GadgetSequence, input_circuit: Circuit,
            scheme: str = AUTO) -> dict:
    """Benchmark metrics relating a compiled body to its input circuit:
    entangling-gate vs multiqubit count, baseline-merge ratio, and nuclear
    norm reduction."""
    from .qasm import two_qubit_count
    tq = two_qubit_count(input_circuit)
    comp = sequence_cost(seq, scheme)
    base_count, base_norm = baseline_parallel_merge(input_circuit)
    in_norm = input_norm(input_circuit)

    def ratio(a, b):
        return a / b if b > 0 else (math.inf if a > 0 else 1.0)

    return {
        "twoQubitCount": tq,
        "compiledMqCount": comp.mq_count,
        "compiledNorm": comp.total_norm,
        "baselineMqCount": base_count,
        "baselineNorm": base_norm,
        "inputNorm": in_norm,
        "gateCountRatio": ratio(tq, comp.mq_count),
        "baselineRatio": ratio(base_count, comp.mq_count),
        "normRatio": ratio(in_norm, comp.total_norm),
    }
