"""Lossless JSON serialization of compiled programs.

Bit-matrix rows are hex strings (row i encodes sum_j M[i,j] << j); angles are
printed with 17 significant digits so parsing reproduces the exact IEEE-754
double.  Serialization is deterministic: serialize -> parse -> serialize is
byte-identical.
"""

from __future__ import annotations

import json

import numpy as np

from .circuit import CircuitError
from .gadgets import GadgetSequence, MultiQubitGate, PauliFrame, PhaseGadget
from .passes import CnotLayer, CompiledProgram

SCHEMA_VERSION = "1.0"


def _fmt(x: float) -> float:
    """Round-trip a double through its 17-significant-digit decimal form so
    the emitted JSON text is canonical."""
    return float(f"{float(x):.17g}")


def _layer_to_json(layer: CnotLayer) -> dict:
    rows = []
    for i in range(layer.n):
        bits = int(sum(int(b) << j for j, b in enumerate(layer.matrix[i])))
        rows.append(format(bits, "x"))
    return {"matrix": rows, "word": [[int(c), int(t)] for c, t in layer.word]}


def _layer_from_json(obj: dict, n: int) -> CnotLayer:
    layer = CnotLayer(n)
    for c, t in obj.get("word", []):
        layer.append(int(c), int(t))
    rows = obj.get("matrix")
    if rows is not None:
        mat = np.zeros((n, n), dtype=np.uint8)
        for i, h in enumerate(rows):
            bits = int(h, 16)
            for j in range(n):
                mat[i, j] = (bits >> j) & 1
        if not np.array_equal(mat, layer.matrix):
            raise CircuitError("layer matrix inconsistent with its CNOT word")
    return layer


def _body_to_json(seq: GadgetSequence) -> list:
    out = []
    for g in seq.gadgets:
        if isinstance(g, PhaseGadget):
            out.append({"type": "gadget", "axis": g.axis,
                        "alpha": _fmt(g.alpha),
                        "support": [int(q) for q in g.support]})
        elif isinstance(g, MultiQubitGate):
            out.append({"type": "mq",
                        "pairs": [[int(n), int(m), _fmt(th)]
                                  for (n, m), th in sorted(g.pairs.items())]})
        else:
            raise CircuitError(f"unsupported body element {type(g).__name__}")
    return out


def _body_from_json(items: list) -> list:
    out = []
    for obj in items:
        if obj["type"] == "gadget":
            out.append(PhaseGadget(obj["axis"], float(obj["alpha"]),
                                   tuple(int(q) for q in obj["support"])))
        elif obj["type"] == "mq":
            out.append(MultiQubitGate({(int(n), int(m)): float(th)
                                       for n, m, th in obj["pairs"]}))
        else:
            raise CircuitError(f"unknown body element type {obj['type']!r}")
    return out


def program_to_json(prog: CompiledProgram) -> dict:
    """Schema: version, numQubits, ancilla, preLayer, body, frames, phase,
    postLayer, measurementMap."""
    ph = complex(prog.body.phase)
    return {
        "version": SCHEMA_VERSION,
        "numQubits": int(prog.num_qubits),
        "ancilla": None if prog.body.ancilla is None else int(prog.body.ancilla),
        "preLayer": _layer_to_json(prog.pre),
        "body": _body_to_json(prog.body),
        "frames": [[int(q), p] for q, p in sorted(prog.body.frame.paulis.items())],
        "phase": [_fmt(ph.real), _fmt(ph.imag)],
        "postLayer": _layer_to_json(prog.post),
        "measurementMap": [[int(q), int(b)]
                           for q, b in sorted(prog.measurement_map.items())],
        "scheme": prog.scheme,
    }


def program_from_json(obj: dict) -> CompiledProgram:
    if obj.get("version") != SCHEMA_VERSION:
        raise CircuitError(f"unsupported program version {obj.get('version')!r}")
    n = int(obj["numQubits"])
    ancilla = obj.get("ancilla")
    body = GadgetSequence(
        n,
        _body_from_json(obj["body"]),
        PauliFrame({int(q): p for q, p in obj.get("frames", [])}),
        complex(*obj.get("phase", [1.0, 0.0])),
        None if ancilla is None else int(ancilla),
    )
    return CompiledProgram(
        n,
        _layer_from_json(obj["preLayer"], n),
        body,
        _layer_from_json(obj["postLayer"], n),
        {int(q): int(b) for q, b in obj.get("measurementMap", [])},
        obj.get("scheme", "auto"),
    )


def dumps(prog: CompiledProgram) -> str:
    return json.dumps(program_to_json(prog), indent=2) + "\n"


def loads(text: str) -> CompiledProgram:
    return program_from_json(json.loads(text))


def save(prog: CompiledProgram, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(prog))


def load(path) -> CompiledProgram:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
