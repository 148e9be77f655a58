"""Core circuit IR: gates, dense-unitary oracle, layering, SU(4) block formation.

Conventions (fixed once, used everywhere):
  * little-endian -- qubit 0 is the least significant tensor factor, so a
    basis index x has bit q equal to (x >> q) & 1.
  * G_P(alpha, J) = exp(+i * alpha * pi/2 * P_j1 P_j2 ...), alpha dimensionless.
  * ZzRotation(theta) = exp(+i * theta * Z (x) Z) = G_Z(2*theta/pi, {n, m}).
  * C_{P_j ^ Q_k} = exp[i (I - P_j)(I - Q_k) pi/4]; the canonical CNOT is
    C_{Z_j ^ X_k} and equals the usual CNOT matrix with no extra phase.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

I2 = np.eye(2, dtype=complex)
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

DEFAULT_ORACLE_CAP = 12


class CircuitError(Exception):
    pass


# ---------------------------------------------------------------------------
# Gates
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class SingleQubit:
    """Arbitrary 2x2 unitary on one qubit, optionally carrying a name/angle."""

    qubit: int
    matrix: np.ndarray
    name: str = "u"
    angle: float | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise CircuitError("single-qubit gate needs a 2x2 matrix")
        if np.max(np.abs(m @ m.conj().T - I2)) > 1e-12:
            raise CircuitError(f"gate {self.name!r} is not unitary to 1e-12")
        self.matrix = m

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)

    def local_unitary(self) -> np.ndarray:
        return self.matrix

    def adjoint(self) -> "SingleQubit":
        return SingleQubit(self.qubit, self.matrix.conj().T, self.name + "_dg")


@dataclass(eq=False)
class GeneralizedCnot:
    """C_{P_j ^ Q_k}: control axis P on qubit j, target axis Q on qubit k.

    Equals the projector form |+P><+P| (x) I + |-P><-P| (x) Q, which matches
    exp[i (I-P)(I-Q) pi/4] exactly (no global phase).
    """

    control_axis: str
    control: int
    target_axis: str
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise CircuitError("generalized CNOT needs distinct qubits")
        if self.control_axis not in "XYZ" or self.target_axis not in "XYZ":
            raise CircuitError("axes must be X, Y or Z")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control, self.target)

    @property
    def is_canonical(self) -> bool:
        return self.control_axis == "Z" and self.target_axis == "X"

    def local_unitary(self) -> np.ndarray:
        # local index order: control least significant
        p = PAULI[self.control_axis]
        q = PAULI[self.target_axis]
        plus = (I2 + p) / 2
        minus = (I2 - p) / 2
        return np.kron(I2, plus) + np.kron(q, minus)

    def adjoint(self) -> "GeneralizedCnot":
        return GeneralizedCnot(self.control_axis, self.control,
                               self.target_axis, self.target)


@dataclass(eq=False)
class ZzRotation:
    """exp(i * theta * Z_a Z_b)."""

    theta: float
    qubit_a: int
    qubit_b: int

    def __post_init__(self):
        if self.qubit_a == self.qubit_b:
            raise CircuitError("ZZ rotation needs distinct qubits")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit_a, self.qubit_b)

    def local_unitary(self) -> np.ndarray:
        zz = np.kron(PAULI["Z"], PAULI["Z"])
        return np.cos(self.theta) * np.eye(4) + 1j * np.sin(self.theta) * zz

    def adjoint(self) -> "ZzRotation":
        return ZzRotation(-self.theta, self.qubit_a, self.qubit_b)


@dataclass(eq=False)
class Measure:
    qubit: int
    bit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(eq=False)
class Barrier:
    over: tuple[int, ...] = ()

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.over


# ---------------------------------------------------------------------------
# Named single-qubit constructors
# ---------------------------------------------------------------------------

def rx(theta: float, q: int) -> SingleQubit:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return SingleQubit(q, np.array([[c, -1j * s], [-1j * s, c]]), "rx", theta)


def ry(theta: float, q: int) -> SingleQubit:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return SingleQubit(q, np.array([[c, -s], [s, c]]), "ry", theta)


def rz(theta: float, q: int) -> SingleQubit:
    return SingleQubit(q, np.diag([np.exp(-1j * theta / 2),
                                   np.exp(1j * theta / 2)]), "rz", theta)


def u1(lam: float, q: int) -> SingleQubit:
    return SingleQubit(q, np.diag([1.0, np.exp(1j * lam)]), "u1", lam)


def u3(theta: float, phi: float, lam: float, q: int) -> SingleQubit:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    m = np.array([[c, -np.exp(1j * lam) * s],
                  [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]])
    return SingleQubit(q, m, "u3")


def hadamard(q: int) -> SingleQubit:
    return SingleQubit(q, np.array([[1, 1], [1, -1]]) / np.sqrt(2), "h")


def pauli_gate(axis: str, q: int) -> SingleQubit:
    return SingleQubit(q, PAULI[axis], axis.lower())


def cnot(control: int, target: int) -> GeneralizedCnot:
    return GeneralizedCnot("Z", control, "X", target)


# ---------------------------------------------------------------------------
# Circuit
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Circuit:
    num_qubits: int
    gates: list = field(default_factory=list)
    classical_bits: int = 0
    global_phase: complex = 1.0 + 0j

    def __post_init__(self):
        for g in self.gates:
            self._check(g)

    def _check(self, g):
        for q in g.qubits:
            if not (0 <= q < self.num_qubits):
                raise CircuitError(f"qubit {q} out of range (N={self.num_qubits})")
        if isinstance(g, Measure) and not (0 <= g.bit < self.classical_bits):
            raise CircuitError(f"classical bit {g.bit} out of range")

    def add(self, g) -> "Circuit":
        self._check(g)
        self.gates.append(g)
        return self

    def adjoint(self) -> "Circuit":
        if any(isinstance(g, Measure) for g in self.gates):
            raise CircuitError("cannot take adjoint of a measured circuit")
        rev = [g.adjoint() for g in reversed(self.gates)]
        return Circuit(self.num_qubits, rev, self.classical_bits,
                       np.conj(self.global_phase))


# ---------------------------------------------------------------------------
# Dense oracle
# ---------------------------------------------------------------------------

def _embed_axes(n: int, qubits: tuple[int, ...]) -> list[int]:
    # axis index of qubit q in an (2,)*n reshaped array is n-1-q
    return [n - 1 - q for q in qubits]


def apply_local(mat: np.ndarray, local: np.ndarray, qubits: tuple[int, ...],
                n: int) -> np.ndarray:
    """Left-multiply a 2^n x (...) array by a local operator on `qubits`.

    `local` is 2^k x 2^k with qubits[0] as its least significant index.
    """
    k = len(qubits)
    rest = mat.shape[1:]
    t = mat.reshape((2,) * n + rest)
    # local reshaped index order: (o_{k-1}, ..., o_0, i_{k-1}, ..., i_0) where
    # slot j corresponds to qubits[j]
    loc = local.reshape((2,) * (2 * k))
    loc_in = [2 * k - 1 - j for j in range(k)]          # input axis of slot j
    t_in = [n - 1 - qubits[j] for j in range(k)]        # t axis of qubits[j]
    t = np.tensordot(loc, t, axes=(loc_in, t_in))
    # loc's output axes land first, ordered (o_{k-1}, ..., o_0); move each
    # back to its qubit's axis position.
    src = list(range(k))
    dst = [n - 1 - qubits[k - 1 - i] for i in range(k)]
    t = np.moveaxis(t, src, dst)
    return t.reshape((2 ** n,) + rest)


def gate_apply(mat: np.ndarray, gate, n: int) -> np.ndarray:
    """Apply one gate to the rows of `mat` (a unitary or statevector)."""
    if isinstance(gate, Barrier):
        return mat
    if isinstance(gate, Measure):
        raise CircuitError("measurement has no unitary action")
    local = gate.local_unitary()
    return apply_local(mat, local, gate.qubits, n)


def to_unitary(circuit: Circuit, cap: int = DEFAULT_ORACLE_CAP) -> np.ndarray:
    """Dense 2^N x 2^N unitary of the circuit (leftmost gate applied first)."""
    n = circuit.num_qubits
    if n > cap:
        raise CircuitError(f"register too large for dense oracle ({n} > {cap})")
    if any(isinstance(g, Measure) for g in circuit.gates):
        raise CircuitError("measurement present; strip measures first")
    u = np.eye(2 ** n, dtype=complex)
    for g in circuit.gates:
        u = gate_apply(u, g, n)
    return circuit.global_phase * u


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max-entry distance between a and b modulo a global phase."""
    tr = np.trace(a.conj().T @ b)
    ph = tr / abs(tr) if abs(tr) > 1e-14 else 1.0
    return float(np.max(np.abs(a * ph - b)))


# ---------------------------------------------------------------------------
# Layering
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Layer:
    gates: list = field(default_factory=list)

    @property
    def support(self) -> set[int]:
        s: set[int] = set()
        for g in self.gates:
            s.update(g.qubits)
        return s


def gates_commute(a, b, tol: float = 1e-10) -> bool:
    """Dense commutation check on the joint support (at most 4 qubits)."""
    qs = tuple(sorted(set(a.qubits) | set(b.qubits)))
    if set(a.qubits).isdisjoint(b.qubits):
        return True
    k = len(qs)
    pos = {q: i for i, q in enumerate(qs)}
    ua = apply_local(np.eye(2 ** k, dtype=complex), a.local_unitary(),
                     tuple(pos[q] for q in a.qubits), k)
    ub = apply_local(np.eye(2 ** k, dtype=complex), b.local_unitary(),
                     tuple(pos[q] for q in b.qubits), k)
    return bool(np.max(np.abs(ua @ ub - ub @ ua)) < tol)


_LAYERABLE = (SingleQubit, GeneralizedCnot, ZzRotation)


def layerize(circuit: Circuit) -> list[Layer]:
    """Greedy commuting layers: each gate goes right after the last layer it
    fails to commute with (layer 0 if it commutes with everything)."""
    layers: list[Layer] = []
    for g in circuit.gates:
        if not isinstance(g, _LAYERABLE):
            raise CircuitError(f"unsupported gate kind for layerize: {type(g).__name__}")
        blocked = -1
        for idx in range(len(layers) - 1, -1, -1):
            lay = layers[idx]
            if set(g.qubits).isdisjoint(lay.support):
                continue
            if any(not gates_commute(g, other) for other in lay.gates):
                blocked = idx
                break
        target = blocked + 1
        if target == len(layers):
            layers.append(Layer())
        layers[target].gates.append(g)
    return layers


def concat_layers(layers: list[Layer], num_qubits: int,
                  global_phase: complex = 1.0) -> Circuit:
    gates = [g for lay in layers for g in lay.gates]
    return Circuit(num_qubits, gates, global_phase=global_phase)


# ---------------------------------------------------------------------------
# SU(4) block formation
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Su4Block:
    """Accumulated 4x4 unitary on an ordered qubit pair (low, high).

    The low qubit is the least significant index of the 4x4 matrix.
    """

    pair: tuple[int, int]
    unitary: np.ndarray

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.pair

    def local_unitary(self) -> np.ndarray:
        return self.unitary

    def absorb(self, gate) -> None:
        if len(gate.qubits) == 1:
            pos = self.pair.index(gate.qubits[0])
            loc = apply_local(np.eye(4, dtype=complex), gate.local_unitary(),
                              (pos,), 2)
        else:
            pos = tuple(self.pair.index(q) for q in gate.qubits)
            loc = apply_local(np.eye(4, dtype=complex), gate.local_unitary(),
                              pos, 2)
        self.unitary = loc @ self.unitary


def form_su4_blocks(layers: list[Layer]) -> list:
    """Collapse the layered circuit into Su4Blocks plus leftover single-qubit
    gates, preserving the overall unitary.  Returns the ordered item list."""
    items: list = []
    last_touch: dict[int, int] = {}

    def new_item(it) -> int:
        items.append(it)
        idx = len(items) - 1
        for q in it.qubits:
            last_touch[q] = idx
        return idx

    for lay in layers:
        for g in lay.gates:
            qs = g.qubits
            if len(qs) == 1:
                q = qs[0]
                idx = last_touch.get(q)
                it = items[idx] if idx is not None else None
                if isinstance(it, Su4Block) and q in it.pair:
                    it.absorb(g)
                else:
                    new_item(g)
            elif len(qs) == 2:
                a, b = qs
                ia, ib = last_touch.get(a), last_touch.get(b)
                it = items[ia] if ia is not None else None
                if (ia is not None and ia == ib and isinstance(it, Su4Block)
                        and set(it.pair) == {a, b}):
                    it.absorb(g)
                else:
                    pair = (min(a, b), max(a, b))
                    block = Su4Block(pair, np.eye(4, dtype=complex))
                    # absorb trailing loose single-qubit gates on these wires
                    for q in pair:
                        iq = last_touch.get(q)
                        if iq is not None and isinstance(items[iq], SingleQubit):
                            block.absorb(items[iq])
                            items[iq] = None
                    block.absorb(g)
                    new_item(block)
            else:
                raise CircuitError("form_su4_blocks expects 1- or 2-qubit gates")
    return [it for it in items if it is not None]


def items_to_circuit(items: list, num_qubits: int,
                     global_phase: complex = 1.0) -> Circuit:
    c = Circuit(num_qubits, [], global_phase=global_phase)
    for it in items:
        c.add(it)
    return c
