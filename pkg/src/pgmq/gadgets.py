"""Phase-gadget algebra: fanout decomposition, interface merging, CNOT and
gadget commutation, and gadget-sequence simplification.

A fanout (a product of generalized CNOTs sharing one target qubit t with
target axis Q) is block-diagonal in the Q-eigenbasis of t: the +1 sector is
the identity and the -1 sector applies the product of the control Paulis.
Matching that sector action against

    exp(i*chi) * exp(i*t*Q_t) * exp(i*pi/4 * sum_q P_q Q_t) * prod_q e^{-i*pi/4*P_q}

gives an exact closed form for the multiqubit-gate realization of any fanout
or fanout-fanout interface, including overlapping supports.  The Pauli-type
couplings are then conjugated to Z(x)Z form by single-qubit Cliffords, which
supplies the local frame around each U_MQ instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import (
    PAULI,
    Circuit,
    CircuitError,
    GeneralizedCnot,
    SingleQubit,
    hadamard,
)

TWO_PI = 2 * math.pi

# Pauli single-qubit products: (a, b) -> (coeff, axis), meaning a @ b = coeff * axis
_PAULI_MUL = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


def pauli_mul(a: str, b: str) -> tuple[complex, str]:
    return _PAULI_MUL[(a, b)]


def pauli_rotation(axis: str, theta: float, q: int) -> SingleQubit:
    """exp(-i * theta/2 * P) on qubit q."""
    m = math.cos(theta / 2) * np.eye(2) - 1j * math.sin(theta / 2) * PAULI[axis]
    return SingleQubit(q, m, f"r{axis.lower()}", theta)


# Clifford V with V Z V^dag = P, used to turn P-type couplings into Z-type.
_Z_TO = {
    "Z": np.eye(2, dtype=complex),
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    # R_x(-pi/2): rotates Z -> Y
    "Y": (math.cos(math.pi / 4) * np.eye(2)
          + 1j * math.sin(math.pi / 4) * PAULI["X"]),
}


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class PhaseGadget:
    """G_P(alpha, J) = exp(i * alpha * pi/2 * P_j1 P_j2 ...)."""

    axis: str
    alpha: float
    support: tuple[int, ...]

    def __post_init__(self):
        if self.axis not in ("X", "Y", "Z"):
            raise CircuitError("gadget axis must be X, Y or Z")
        sup = tuple(sorted(self.support))
        if not sup or len(set(sup)) != len(sup):
            raise CircuitError("gadget support must be a nonempty set")
        self.support = sup
        # alpha has period 4; keep it in (-2, 2]
        a = math.fmod(self.alpha, 4.0)
        if a > 2.0:
            a -= 4.0
        elif a <= -2.0:
            a += 4.0
        self.alpha = a

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.support

    def local_unitary(self) -> np.ndarray:
        k = len(self.support)
        p = np.array([1.0])
        for _ in range(k):
            p = np.kron(PAULI[self.axis], p)
        ang = self.alpha * math.pi / 2
        return math.cos(ang) * np.eye(2 ** k) + 1j * math.sin(ang) * p

    def adjoint(self) -> "PhaseGadget":
        return PhaseGadget(self.axis, -self.alpha, self.support)


@dataclass(eq=False)
class MultiQubitGate:
    """exp(i * sum_{n<m} theta_nm Z_n Z_m); pair phases stored upper-triangular."""

    pairs: dict = field(default_factory=dict)

    def __post_init__(self):
        norm = {}
        for (n, m), th in self.pairs.items():
            if n == m:
                raise CircuitError("phase matrix must have zero diagonal")
            key = (min(n, m), max(n, m))
            norm[key] = norm.get(key, 0.0) + th
        self.pairs = {k: v for k, v in norm.items() if abs(v) > 0.0}

    @property
    def support(self) -> tuple[int, ...]:
        s: set[int] = set()
        for (n, m), th in self.pairs.items():
            if abs(th) > 1e-15:
                s.update((n, m))
        return tuple(sorted(s))

    qubits = support

    def phase_matrix(self, num_qubits: int | None = None) -> np.ndarray:
        """Full symmetric matrix with theta/2 on each of the (n,m), (m,n) slots."""
        qs = self.support
        if num_qubits is None:
            idx = {q: i for i, q in enumerate(qs)}
            size = len(qs)
        else:
            idx = {q: q for q in range(num_qubits)}
            size = num_qubits
        m = np.zeros((size, size))
        for (a, b), th in self.pairs.items():
            m[idx[a], idx[b]] += th / 2
            m[idx[b], idx[a]] += th / 2
        return m

    def local_unitary(self) -> np.ndarray:
        qs = self.support
        k = len(qs)
        pos = {q: i for i, q in enumerate(qs)}
        diag = np.zeros(2 ** k)
        for (a, b), th in self.pairs.items():
            ia, ib = pos[a], pos[b]
            for x in range(2 ** k):
                sa = 1 - 2 * ((x >> ia) & 1)
                sb = 1 - 2 * ((x >> ib) & 1)
                diag[x] += th * sa * sb
        return np.diag(np.exp(1j * diag))

    def adjoint(self) -> "MultiQubitGate":
        return MultiQubitGate({k: -v for k, v in self.pairs.items()})


@dataclass(eq=False)
class PauliFrame:
    """A Pauli-string correction applied after a gadget sequence."""

    paulis: dict = field(default_factory=dict)  # qubit -> axis, identities omitted

    def is_identity(self) -> bool:
        return not self.paulis

    def multiply_right(self, string: dict) -> complex:
        """Frame <- frame * string (matrix order); returns the scalar picked up."""
        coeff = 1.0 + 0j
        for q, p in string.items():
            c, r = pauli_mul(self.paulis.get(q, "I"), p)
            coeff *= c
            if r == "I":
                self.paulis.pop(q, None)
            else:
                self.paulis[q] = r
        return coeff

    def gates(self) -> list[SingleQubit]:
        from .circuit import pauli_gate
        return [pauli_gate(p, q) for q, p in sorted(self.paulis.items())]

    # images of single-qubit Paulis under conjugation by CNOT(c, t):
    # letter on the control contributes (on_c, on_t), ditto for the target
    _CNOT_CTRL = {"X": ("X", "X"), "Y": ("Y", "X"), "Z": ("Z", "I")}
    _CNOT_TARG = {"X": ("I", "X"), "Y": ("Z", "Y"), "Z": ("Z", "Z")}

    def conjugate_by_cnot_word(self, word: list[tuple[int, int]]) -> complex:
        """Replace the frame P by A P A^dag for the CNOT circuit A given as a
        (control, target) word in time order; returns the +/-1 sign picked up
        (conjugation can flip signs, e.g. X_c Z_t -> -Y_c Y_t)."""
        coeff = 1.0 + 0j
        for c, t in word:
            cc, ct = self._CNOT_CTRL[self.paulis.get(c, "I")] \
                if c in self.paulis else ("I", "I")
            tc, tt = self._CNOT_TARG[self.paulis.get(t, "I")] \
                if t in self.paulis else ("I", "I")
            kc, rc = pauli_mul(cc, tc)
            kt, rt = pauli_mul(ct, tt)
            coeff *= kc * kt
            for q, r in ((c, rc), (t, rt)):
                if r == "I":
                    self.paulis.pop(q, None)
                else:
                    self.paulis[q] = r
        return coeff

    def copy(self) -> "PauliFrame":
        return PauliFrame(dict(self.paulis))


@dataclass(eq=False)
class GadgetSequence:
    """Ordered phase gadgets plus a trailing Pauli frame and a global phase."""

    num_qubits: int
    gadgets: list = field(default_factory=list)
    frame: PauliFrame = field(default_factory=PauliFrame)
    phase: complex = 1.0 + 0j
    ancilla: int | None = None

    def __post_init__(self):
        if self.ancilla is not None:
            for g in self.gadgets:
                if self.ancilla in g.support:
                    raise CircuitError("ancilla may not appear in a gadget support")

    def to_circuit(self) -> Circuit:
        c = Circuit(self.num_qubits, [], global_phase=self.phase)
        for g in self.gadgets:
            c.add(g)
        for sq in self.frame.gates():
            c.add(sq)
        return c

    def copy(self) -> "GadgetSequence":
        return GadgetSequence(
            self.num_qubits,
            [PhaseGadget(g.axis, g.alpha, g.support) for g in self.gadgets],
            self.frame.copy(), self.phase, self.ancilla)


@dataclass(eq=False)
class LocalFrame:
    """Single-qubit dressings around a U_MQ: matrix = left . U_MQ . right."""

    left: dict = field(default_factory=dict)    # qubit -> 2x2
    right: dict = field(default_factory=dict)
    phase: complex = 1.0 + 0j

    def left_gates(self) -> list[SingleQubit]:
        return [SingleQubit(q, m, "frameL") for q, m in sorted(self.left.items())]

    def right_gates(self) -> list[SingleQubit]:
        return [SingleQubit(q, m, "frameR") for q, m in sorted(self.right.items())]


# ---------------------------------------------------------------------------
# Fanout and interface identities
# ---------------------------------------------------------------------------

def decompose_pg(g: PhaseGadget, jstar: int, num_qubits: int | None = None,
                 ancilla: bool = False) -> Circuit:
    """Fanout . single-qubit rotation . fanout realization of a gadget.

    With ancilla=True, jstar must lie outside the support; the fanout then
    targets the ancilla (axis Y) and the middle rotation acts on it.  The
    ancilla must start in |0> for the logical action to equal g.
    """
    if ancilla:
        if jstar in g.support:
            raise CircuitError("ancilla jstar must lie outside the support")
        controls = list(g.support)
        target_axis = "Y"
    else:
        if jstar not in g.support:
            raise CircuitError("jstar must be in the gadget support")
        controls = [q for q in g.support if q != jstar]
        target_axis = "X" if g.axis == "Z" else "Z"
    n = num_qubits if num_qubits is not None else max([jstar, *g.support]) + 1
    fan = [GeneralizedCnot(g.axis, q, target_axis, jstar) for q in controls]
    mid = pauli_rotation(g.axis if not ancilla else "Z", -g.alpha * math.pi, jstar)
    c = Circuit(n, [])
    for gate in fan:
        c.add(gate)
    c.add(mid)
    for gate in fan:
        c.add(gate)
    return c


def _fuse(controls: list[tuple[int, str]], target: int,
          target_axis: str) -> tuple[MultiQubitGate, LocalFrame]:
    """Exact U_MQ + locals for an ordered product of generalized CNOTs sharing
    (target, target_axis).  Later list entries act later in time."""
    # net Pauli per control qubit, built in matrix order (later gates left)
    net: dict[int, tuple[complex, str]] = {}
    for q, axis in controls:
        c0, p0 = net.get(q, (1.0 + 0j, "I"))
        c1, p1 = pauli_mul(axis, p0)
        net[q] = (c0 * c1, p1)
    coeff = 1.0 + 0j
    live: dict[int, str] = {}
    for q, (c, p) in net.items():
        coeff *= c
        if p != "I":
            live[q] = p
    n_live = len(live)
    # sector equations: e^{i(chi+t)} = 1,  e^{i(chi-t)} (-i)^n coeff_sector = coeff
    # where coeff_sector comes from prod e^{-i pi/2 P} = (-i)^n prod P
    delta = n_live * math.pi / 2 + np.angle(coeff)
    chi = delta / 2
    tshift = -delta / 2
    mq = MultiQubitGate({(q, target): math.pi / 4 for q in live})
    frame = LocalFrame(phase=np.exp(1j * chi))
    if not live:
        return mq, frame
    vq_t = _Z_TO[target_axis]
    q_t = PAULI[target_axis]
    exp_t = math.cos(tshift) * np.eye(2) + 1j * math.sin(tshift) * q_t
    frame.left[target] = exp_t @ vq_t
    frame.right[target] = vq_t.conj().T
    for q, p in live.items():
        v = _Z_TO[p]
        rot = (math.cos(math.pi / 4) * np.eye(2)
               - 1j * math.sin(math.pi / 4) * PAULI[p])  # e^{-i pi/4 P}
        frame.left[q] = v
        frame.right[q] = v.conj().T @ rot
    return mq, frame


def fanout_to_mq(fanout: list[GeneralizedCnot]) -> tuple[MultiQubitGate, LocalFrame]:
    """One U_MQ (star-shaped pi/4 phases) plus locals for a fanout."""
    if not fanout:
        return MultiQubitGate({}), LocalFrame()
    target = fanout[0].target
    taxis = fanout[0].target_axis
    for g in fanout:
        if g.target != target or g.target_axis != taxis:
            raise CircuitError("fanout gates must share one target")
    return _fuse([(g.control, g.control_axis) for g in fanout], target, taxis)


def merge_interface(j_set, k_set, a: int, first_axis: str = "Z",
                    second_axis: str = "X") -> tuple[MultiQubitGate, LocalFrame]:
    """Fuse the closing fanout of a first gadget (first_axis over j_set) with
    the opening fanout of the next (second_axis over k_set), both targeting
    the ancilla a with axis Y, into one star-shaped Clifford U_MQ."""
    j_set, k_set = set(j_set), set(k_set)
    if a in j_set | k_set:
        raise CircuitError("ancilla lies inside the merged supports")
    controls = [(q, first_axis) for q in sorted(j_set)]
    controls += [(q, second_axis) for q in sorted(k_set)]
    return _fuse(controls, a, "Y")


def commute_cnot(cnot_gate: GeneralizedCnot, g: PhaseGadget,
                 direction: str = "left") -> PhaseGadget:
    """Move a canonical CNOT across a gadget: C.G = G'.C and G.C = C.G'.

    The canonical CNOT is self-inverse, so both directions produce the same
    conjugated gadget G' = C G C.
    """
    if not cnot_gate.is_canonical:
        raise CircuitError("commute_cnot needs a canonical (Z^X) CNOT")
    if direction not in ("left", "right"):
        raise CircuitError("direction must be 'left' or 'right'")
    j, k = cnot_gate.control, cnot_gate.target
    sup = set(g.support)
    if g.axis == "Z":
        if k in sup:
            sup = sup - {j} if j in sup else sup | {j}
    elif g.axis == "X":
        if j in sup:
            sup = sup - {k} if k in sup else sup | {k}
    else:
        raise CircuitError("only X and Z gadgets commute through CNOTs")
    if not sup:
        # removing the last qubit cannot happen: the rule removes j (Z case)
        # only when both j and k are present
        raise CircuitError("commutation emptied a gadget support")
    return PhaseGadget(g.axis, g.alpha, tuple(sorted(sup)))


def pg_commutes(g1: PhaseGadget, g2: PhaseGadget) -> bool:
    """Gadgets commute iff same axis or an even support overlap."""
    if g1.axis == g2.axis:
        return True
    return len(set(g1.support) & set(g2.support)) % 2 == 0


# ---------------------------------------------------------------------------
# Sequence simplification
# ---------------------------------------------------------------------------

ALPHA_EPS = 1e-12


def _push_string_to_frame(seq: GadgetSequence, start: int, string: dict,
                          scalar: complex) -> None:
    """Move a Pauli string from just after gadget `start` through the rest of
    the sequence into the trailing frame, flipping angles it anticommutes
    with."""
    for g in seq.gadgets[start + 1:]:
        odd = sum(1 for q in g.support
                  if string.get(q, "I") not in ("I", g.axis)) % 2
        if odd:
            g.alpha = -g.alpha
    scalar *= seq.frame.multiply_right(string)
    seq.phase *= scalar


def simplify(seq: GadgetSequence) -> GadgetSequence:
    """Fixed point of: bubble-merge equal (axis, support) gadgets, normalize
    angles into [-1/2, 1/2) extracting Pauli corrections, drop trivial
    gadgets.  The unitary is preserved exactly."""
    out = seq.copy()
    changed = True
    while changed:
        changed = False
        # (a)+(b): scan left to right, pulling later equal gadgets back across
        # everything they commute with
        i = 0
        while i < len(out.gadgets):
            gi = out.gadgets[i]
            j = i + 1
            while j < len(out.gadgets):
                gj = out.gadgets[j]
                if (gj.axis == gi.axis and gj.support == gi.support
                        and all(pg_commutes(out.gadgets[k], gj)
                                for k in range(i + 1, j))):
                    gi.alpha = gi.alpha + gj.alpha
                    gi.__post_init__()
                    del out.gadgets[j]
                    changed = True
                    continue
                j += 1
            i += 1
        # (c): angle normalization with Pauli extraction
        for idx, g in enumerate(out.gadgets):
            shift = math.floor(g.alpha + 0.5)
            if shift != 0:
                g.alpha -= shift
                scalar = 1j ** (shift % 4)
                string = {q: g.axis for q in g.support} if shift % 2 else {}
                _push_string_to_frame(out, idx, string, scalar)
                changed = True
        # (d): drop trivial gadgets
        kept = [g for g in out.gadgets if abs(g.alpha) > ALPHA_EPS]
        if len(kept) != len(out.gadgets):
            out.gadgets = kept
            changed = True
    return out
