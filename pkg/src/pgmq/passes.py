"""Compilation passes: pulling CNOTs out of a circuit into GF(2) edge layers
(left- and right-handed primitives), nuclear-norm reduction by CNOT-pair
conjugation with maximum-weight matching, and the iterative driver producing
the three-layer compiled form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import (
    Barrier,
    Circuit,
    CircuitError,
    GeneralizedCnot,
    Measure,
    SingleQubit,
    ZzRotation,
    cnot,
    layerize,
    form_su4_blocks,
    Su4Block,
)
from .cost import AUTO, CostVector, sequence_cost
from .gadgets import (
    GadgetSequence,
    PhaseGadget,
    commute_cnot,
    simplify,
)
from .su4 import minimize_block_phase


# ---------------------------------------------------------------------------
# GF(2) CNOT layers
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class CnotLayer:
    """A CNOT-only circuit as an invertible bit-matrix |x> -> |Ax> over GF(2),
    together with the CNOT word (time order) realizing it."""

    n: int
    matrix: np.ndarray = None
    word: list = field(default_factory=list)

    def __post_init__(self):
        if self.matrix is None:
            self.matrix = np.eye(self.n, dtype=np.uint8)

    def append(self, control: int, target: int) -> None:
        """Add a CNOT at the end (later in time)."""
        self.matrix[target, :] ^= self.matrix[control, :]
        self.word.append((control, target))

    def prepend(self, control: int, target: int) -> None:
        """Add a CNOT at the beginning (earlier in time)."""
        self.matrix[:, control] ^= self.matrix[:, target]
        self.word.insert(0, (control, target))

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.matrix, np.eye(self.n, dtype=np.uint8)))

    def is_invertible(self) -> bool:
        m = self.matrix.copy()
        for col in range(self.n):
            piv = next((r for r in range(col, self.n) if m[r, col]), None)
            if piv is None:
                return False
            if piv != col:
                m[[col, piv]] = m[[piv, col]]
            for r in range(self.n):
                if r != col and m[r, col]:
                    m[r, :] ^= m[col, :]
        return True

    def replay_matches(self) -> bool:
        fresh = CnotLayer(self.n)
        for c, t in self.word:
            fresh.append(c, t)
        return bool(np.array_equal(fresh.matrix, self.matrix))

    def adjoint(self) -> "CnotLayer":
        out = CnotLayer(self.n)
        for c, t in reversed(self.word):
            out.append(c, t)
        return out

    def to_gates(self) -> list:
        return [cnot(c, t) for c, t in self.word]

    def copy(self) -> "CnotLayer":
        return CnotLayer(self.n, self.matrix.copy(), list(self.word))


# ---------------------------------------------------------------------------
# Single-qubit gates as one-qubit gadgets
# ---------------------------------------------------------------------------

def _zyz_angles(u: np.ndarray) -> tuple[float, float, float, float]:
    """(delta, a, b, c) with u = e^{i delta} Rz(a) Ry(b) Rz(c)."""
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    delta = math.atan2(det.imag, det.real) / 2
    v = u * np.exp(-1j * delta)
    b = 2 * math.atan2(abs(v[1, 0]), abs(v[0, 0]))
    if abs(v[1, 0]) < 1e-12:
        a_plus_c = 2 * np.angle(v[1, 1])
        a_minus_c = 0.0
    elif abs(v[0, 0]) < 1e-12:
        a_plus_c = 0.0
        a_minus_c = 2 * np.angle(v[1, 0])
    else:
        a_plus_c = 2 * np.angle(v[1, 1])
        a_minus_c = 2 * np.angle(v[1, 0])
    return delta, (a_plus_c + a_minus_c) / 2, b, (a_plus_c - a_minus_c) / 2


def single_qubit_gadgets(gate: SingleQubit) -> tuple[list, complex]:
    """Exact rewrite of a one-qubit unitary as up to three axis gadgets
    (Z, X, Z pattern) plus a scalar phase."""
    q = gate.qubit
    delta, a, b, c = _zyz_angles(gate.matrix)
    # Ry(b) = Rz(pi/2) Rx(b) Rz(-pi/2); Rz(t) = G_Z(-t/pi), Rx(t) = G_X(-t/pi)
    angles = [("Z", c - math.pi / 2), ("X", b), ("Z", a + math.pi / 2)]
    out = []
    for axis, theta in angles:  # time order
        alpha = -theta / math.pi
        if abs(math.fmod(alpha, 4.0)) > 1e-14:
            out.append(PhaseGadget(axis, alpha, (q,)))
    return out, np.exp(1j * delta)


# ---------------------------------------------------------------------------
# Left- and right-handed primitives
# ---------------------------------------------------------------------------

def pg_left(circuit: Circuit, counter: dict | None = None,
            do_simplify: bool = True) -> tuple[GadgetSequence, CnotLayer]:
    """Factor circuit = U_PG . U_C (matrix order) by pulling every CNOT to
    the beginning of the circuit through the accumulated gadgets."""
    n = circuit.num_qubits
    layer = CnotLayer(n)
    seq = GadgetSequence(n, [], phase=circuit.global_phase)
    events = 0
    for g in circuit.gates:
        if isinstance(g, Barrier):
            continue
        if isinstance(g, Measure):
            raise CircuitError("strip measurements before compiling")
        if isinstance(g, SingleQubit):
            gads, ph = single_qubit_gadgets(g)
            seq.gadgets.extend(gads)
            seq.phase *= ph
        elif isinstance(g, ZzRotation):
            seq.gadgets.append(
                PhaseGadget("Z", 2 * g.theta / math.pi, (g.qubit_a, g.qubit_b)))
        elif isinstance(g, GeneralizedCnot):
            if not g.is_canonical:
                raise CircuitError("pg_left needs canonical CNOTs; "
                                   "run to_zz_basis first")
            for i in range(len(seq.gadgets) - 1, -1, -1):
                seq.gadgets[i] = commute_cnot(g, seq.gadgets[i])
                events += 1
            layer.append(g.control, g.target)
        else:
            raise CircuitError(f"unsupported gate kind: {type(g).__name__}")
    if counter is not None:
        counter["events"] = counter.get("events", 0) + events
    if do_simplify:
        seq = simplify(seq)
    return seq, layer


def sequence_adjoint(seq: GadgetSequence) -> GadgetSequence:
    """Adjoint of a gadget sequence, renormalized to the standard shape
    (gadgets, then trailing Pauli frame, then scalar)."""
    frame = seq.frame.copy()
    gadgets = []
    for g in reversed(seq.gadgets):
        alpha = -g.alpha
        # moving the (Hermitian) frame string from the front of the adjoint
        # to the back conjugates each gadget, flipping anticommuting angles
        odd = sum(1 for q in g.support
                  if frame.paulis.get(q, "I") not in ("I", g.axis)) % 2
        if odd:
            alpha = -alpha
        gadgets.append(PhaseGadget(g.axis, alpha, g.support))
    return GadgetSequence(seq.num_qubits, gadgets, frame,
                          np.conj(seq.phase), seq.ancilla)


def pg_right(circuit: Circuit, counter: dict | None = None,
             do_simplify: bool = True) -> tuple[CnotLayer, GadgetSequence]:
    """Factor circuit = U_C . U_PG (matrix order): the mirrored primitive,
    implemented by running pg_left on the adjoint circuit."""
    seq_t, layer_t = pg_left(circuit.adjoint(), counter, do_simplify)
    return layer_t.adjoint(), sequence_adjoint(seq_t)


# ---------------------------------------------------------------------------
# Nuclear-norm reduction by CNOT-pair conjugation
# ---------------------------------------------------------------------------

def conjugate_sequence(seq: GadgetSequence, control: int,
                       target: int) -> GadgetSequence:
    """C . seq . C for the canonical CNOT (self-inverse conjugation)."""
    c = cnot(control, target)
    out = seq.copy()
    out.gadgets = [commute_cnot(c, g) for g in out.gadgets]
    out.phase *= out.frame.conjugate_by_cnot_word([(control, target)])
    return out


def conjugation_cost_matrix(seq: GadgetSequence,
                            scheme: str = AUTO) -> np.ndarray:
    """Entry (n, m): total nuclear norm after conjugating every gadget with
    the CNOT controlled on n targeting m; diagonal holds the current norm."""
    n = seq.num_qubits
    cur = float(sequence_cost(seq, scheme).total_norm)
    out = np.full((n, n), cur, dtype=float)
    touched = {q for g in seq.gadgets for q in g.support}
    for a in range(n):
        for b in range(n):
            # a CNOT on two untouched wires conjugates every gadget trivially
            if a != b and (a in touched or b in touched):
                out[a, b] = sequence_cost(
                    conjugate_sequence(seq, a, b), scheme).total_norm
    return out


def _greedy_matching(weights: dict) -> list:
    chosen, used = [], set()
    for (a, b), w in sorted(weights.items(), key=lambda kv: (-kv[1], kv[0])):
        if a not in used and b not in used:
            chosen.append((a, b))
            used.update((a, b))
    return chosen


def _exact_matching(weights: dict) -> list:
    import networkx as nx
    g = nx.Graph()
    for (a, b), w in weights.items():
        g.add_edge(a, b, weight=w)
    return [tuple(sorted(e)) for e in nx.max_weight_matching(g)]


def norm_reduction_step(seq: GadgetSequence, scheme: str = AUTO,
                        matcher: str = "greedy") -> tuple[list, GadgetSequence, bool]:
    """One round of commuting-CNOT conjugations lowering the total norm.

    Returns (applied CNOTs, conjugated sequence, improved).  Candidate pair
    weights are current norm minus the best of the two conjugation
    directions, clipped at zero; accepted pairs are vertex-disjoint."""
    cm = conjugation_cost_matrix(seq, scheme)
    cur = cm[0, 0] if seq.num_qubits else 0.0
    n = seq.num_qubits
    weights = {}
    for a in range(n):
        for b in range(a + 1, n):
            w = cur - min(cm[a, b], cm[b, a])
            if w > 1e-9:
                weights[(a, b)] = w
    pairs = _exact_matching(weights) if matcher == "exact" \
        else _greedy_matching(weights)
    applied = []
    out = seq
    for a, b in sorted(pairs):
        c, t = (a, b) if cm[a, b] <= cm[b, a] else (b, a)
        out = conjugate_sequence(out, c, t)
        applied.append((c, t))
    return applied, out, bool(applied)


# ---------------------------------------------------------------------------
# Compiled program and the iterative driver
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class CompileOptions:
    scheme: str = AUTO
    cost_order: str = "lex"        # "lex" or "weighted"
    cost_weight: float = 1.0       # used when cost_order == "weighted"
    max_iters: int = 50
    matcher: str = "greedy"

    def cost_key(self, cv: CostVector):
        if self.cost_order == "weighted":
            return cv.key(self.cost_weight)
        return cv.key()


@dataclass(eq=False)
class CompiledProgram:
    """Three-layer compiled form: CNOT layer, gadget body (with trailing
    Pauli frame and phase), CNOT layer; plus the stripped measurement map."""

    num_qubits: int
    pre: CnotLayer
    body: GadgetSequence
    post: CnotLayer
    measurement_map: dict = field(default_factory=dict)  # qubit -> bit
    scheme: str = AUTO
    iterations: int = 0
    commutation_events: int = 0
    cost_trace: list = field(default_factory=list)  # accepted cost keys

    def cost(self) -> CostVector:
        return sequence_cost(self.body, self.scheme)

    def to_circuit(self) -> Circuit:
        """Ideal replay: pre layer, gadget body, frame, post layer."""
        c = Circuit(self.num_qubits, [], global_phase=self.body.phase)
        for g in self.pre.to_gates():
            c.add(g)
        for g in self.body.gadgets:
            c.add(g)
        for g in self.body.frame.gates():
            c.add(g)
        for g in self.post.to_gates():
            c.add(g)
        return c

    def realized_circuit(self, scheme: str | None = None) -> Circuit:
        """Replay with the body realized as native multiqubit gates (the
        ancilla, when used, is the final qubit)."""
        from .cost import realize
        r = realize(self.body, scheme or self.scheme)
        c = Circuit(r.num_qubits, [], global_phase=r.phase)
        for g in self.pre.to_gates():
            c.add(g)
        for g in r.items:
            c.add(g)
        for g in self.post.to_gates():
            c.add(g)
        return c


def _strip_measures(circuit: Circuit) -> tuple[Circuit, dict]:
    mmap = {}
    gates = []
    for g in circuit.gates:
        if isinstance(g, Measure):
            mmap[g.qubit] = g.bit
        elif isinstance(g, Barrier):
            continue
        else:
            if mmap:
                raise CircuitError("only terminal measurements are supported")
            gates.append(g)
    return Circuit(circuit.num_qubits, gates,
                   global_phase=circuit.global_phase), mmap


def _block_pass(circuit: Circuit) -> Circuit:
    """layerize -> SU(4) blocks -> per-block phase minimization, flattened
    back to locals + ZZ rotations + canonical CNOTs."""
    items = form_su4_blocks(layerize(circuit))
    out = Circuit(circuit.num_qubits, [], global_phase=circuit.global_phase)
    for it in items:
        if isinstance(it, Su4Block):
            blk = minimize_block_phase(it.unitary, it.pair)
            out.global_phase *= blk.phase
            for g in blk.to_gates():
                out.add(g)
        else:
            out.add(it)
    return out


def optimize(circuit: Circuit, opts: CompileOptions | None = None) -> CompiledProgram:
    """Compile a CNOT/ZZ-basis circuit into the three-layer form, iterating
    norm-reducing CNOT conjugations until the cost stops decreasing."""
    opts = opts or CompileOptions()
    from .qasm import to_zz_basis
    stripped, mmap = _strip_measures(circuit)
    raw = to_zz_basis(stripped)
    blocked = _block_pass(raw)
    counter = {"events": 0}
    n = circuit.num_qubits

    # four gadgetization candidates: left- and right-handed extraction, each
    # on the SU(4)-blocked circuit and on the plain lowered one (blocking can
    # smear locals into otherwise-mergeable commuting layers)
    candidates = []
    for flat in (blocked, raw):
        seq_l, pre_l = pg_left(flat, counter)
        candidates.append((seq_l, pre_l, CnotLayer(n)))
        post_r, seq_r = pg_right(flat, counter)
        candidates.append((seq_r, CnotLayer(n), post_r))
    keys = [opts.cost_key(sequence_cost(s, opts.scheme))
            for s, _, _ in candidates]
    cur = min(keys)
    seq, pre, post = candidates[keys.index(cur)]

    iters = 0
    trace = [cur]
    for _ in range(opts.max_iters):
        applied, nxt, improved = norm_reduction_step(seq, opts.scheme,
                                                     opts.matcher)
        if not improved:
            break
        nxt = simplify(nxt)
        key = opts.cost_key(sequence_cost(nxt, opts.scheme))
        if key >= cur:
            break
        # U_PG = C . U_PG' . C: the outer CNOT joins the post layer, the
        # inner one the pre layer
        for c, t in applied:
            post.prepend(c, t)
            pre.append(c, t)
        seq, cur = nxt, key
        trace.append(cur)
        iters += 1

    return CompiledProgram(n, pre, seq, post, mmap, opts.scheme, iters,
                           counter["events"], trace)
