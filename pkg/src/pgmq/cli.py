"""Command-line interface: compile, verify, bench, simulate.

Exit codes: 0 success, 1 verification failure, 2 parse error or unsupported
input, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import Circuit, CircuitError, to_unitary, phase_distance
from .cost import ANCILLA_MERGED, AUTO, NO_ANCILLA, metrics
from .noise import (NoiseModel, monte_carlo_fidelity, relative_error,
                    success_probability)
from .passes import CompileOptions, CompiledProgram, optimize
from .qasm import QasmError, parse_qasm_file
from .serialize import dumps as program_dumps, load as program_load

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_PARSE = 2
EXIT_INTERNAL = 3

DEFAULT_ORACLE_CAP = 10
VERIFY_TOL = 1e-8


def _compile_options(args) -> CompileOptions:
    scheme = AUTO
    if getattr(args, "ancilla", None) is True:
        scheme = ANCILLA_MERGED
    elif getattr(args, "ancilla", None) is False:
        scheme = NO_ANCILLA
    cost = getattr(args, "cost", "lex")
    if cost == "lex":
        order, weight = "lex", 1.0
    elif cost.startswith("weighted:"):
        order, weight = "weighted", float(cost.split(":", 1)[1])
    else:
        raise CircuitError(f"unknown cost order {cost!r} (lex or weighted:w)")
    return CompileOptions(scheme=scheme, cost_order=order, cost_weight=weight,
                          max_iters=args.max_iters)


def _opts_hash(opts: CompileOptions, seed: int) -> str:
    import hashlib
    text = f"{opts.scheme}|{opts.cost_order}|{opts.cost_weight}" \
           f"|{opts.max_iters}|{opts.matcher}|{seed}"
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def _verify_program(prog: CompiledProgram, circuit: Circuit, cap: int,
                    seed: int = 0) -> tuple[bool, float]:
    """Compare the program replay against the input circuit, modulo global
    phase: dense unitaries up to `cap` qubits, 20 random states above."""
    from .passes import _strip_measures
    stripped, _ = _strip_measures(circuit)
    replay = prog.to_circuit()
    if circuit.num_qubits <= cap:
        err = phase_distance(to_unitary(stripped, cap=cap),
                             to_unitary(replay, cap=cap))
        return err <= VERIFY_TOL, err
    from .noise import statevector
    rng = np.random.default_rng(seed)
    n = circuit.num_qubits
    worst = 0.0
    for _ in range(20):
        amp = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
        amp /= np.linalg.norm(amp)
        a = _apply_circuit(stripped, amp)
        b = _apply_circuit(replay, amp)
        tr = np.vdot(a, b)
        ph = tr / abs(tr) if abs(tr) > 1e-14 else 1.0
        worst = max(worst, float(np.max(np.abs(a * ph - b))))
    return worst <= VERIFY_TOL, worst


def _apply_circuit(circuit: Circuit, state: np.ndarray) -> np.ndarray:
    from .circuit import Barrier, Measure, gate_apply
    psi = state.copy()
    for g in circuit.gates:
        if isinstance(g, (Barrier, Measure)):
            continue
        psi = gate_apply(psi, g, circuit.num_qubits)
    return circuit.global_phase * psi


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_compile(args) -> int:
    circuit = parse_qasm_file(args.input)
    opts = _compile_options(args)
    prog = optimize(circuit, opts)
    out = Path(args.out or Path(args.input).with_suffix(".program.json").name)
    out.write_text(program_dumps(prog), encoding="utf-8")

    m = metrics(prog.body, circuit, opts.scheme)
    m.update({"name": Path(args.input).stem, "numQubits": circuit.num_qubits,
              "iterations": prog.iterations, "scheme": prog.scheme,
              "seed": args.seed, "version": __version__,
              "optsHash": _opts_hash(opts, args.seed)})
    metrics_path = out.with_name(out.stem + ".metrics.json")
    metrics_path.write_text(json.dumps(m, indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")
    print(f"wrote {out} and {metrics_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    prog = program_load(args.program)
    circuit = parse_qasm_file(args.input)
    ok, err = _verify_program(prog, circuit, args.oracle_cap, args.seed)
    print(f"{'PASS' if ok else 'FAIL'}: max deviation {err:.3e} "
          f"(tolerance {VERIFY_TOL:.0e})")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_simulate(args) -> int:
    prog = program_load(args.program)
    model = NoiseModel(args.p_dephase, args.p_depol_tq, args.seed)
    report = {"program": str(args.program), "seed": args.seed,
              "pDephase": args.p_dephase, "pDepolTq": args.p_depol_tq,
              "successProbability": success_probability(prog, model)}
    input_circuit = None
    if args.input:
        input_circuit = parse_qasm_file(args.input)
        report["successProbabilityInput"] = success_probability(
            input_circuit, model)
        report["relativeErrorSuccessProb"] = relative_error(
            report["successProbability"], report["successProbabilityInput"])
    if args.samples > 0:
        ideal = input_circuit or prog.to_circuit()
        mc = monte_carlo_fidelity(prog, ideal, model,
                                  samples=args.samples, shots=args.shots)
        report["monteCarlo"] = mc.to_dict()
        if input_circuit is not None:
            mc_in = monte_carlo_fidelity(input_circuit, input_circuit, model,
                                         samples=args.samples,
                                         shots=args.shots)
            report["monteCarloInput"] = mc_in.to_dict()
            report["relativeErrorMonteCarlo"] = relative_error(
                mc.fidelity, mc_in.fidelity)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


CSV_COLUMNS = ["name", "numQubits", "twoQubitCount", "baselineMqCount",
               "compiledMqCount", "inputNorm", "compiledNorm",
               "gateCountRatio", "baselineRatio", "normRatio",
               "fInput", "fCompiled", "relativeError", "method", "seed"]


def _num(x) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, float):
        if math.isnan(x):
            return "n/a"
        return f"{x:.9g}"
    return str(x)


def bench_record(path: Path, opts: CompileOptions, model: NoiseModel,
                 sim_cap: int, samples: int, shots: int) -> dict:
    circuit = parse_qasm_file(path)
    t0 = time.perf_counter()
    prog = optimize(circuit, opts)
    wall = time.perf_counter() - t0
    rec = {"name": path.stem, "numQubits": circuit.num_qubits}
    rec.update(metrics(prog.body, circuit, opts.scheme))
    if circuit.num_qubits <= sim_cap:
        f_inp = success_probability(circuit, model)
        f_comp = success_probability(prog, model)
        rec.update({"fInput": f_inp, "fCompiled": f_comp,
                    "relativeError": relative_error(f_comp, f_inp),
                    "method": "success-prob"})
        if samples > 0:
            mc_in = monte_carlo_fidelity(circuit, circuit, model,
                                         samples=samples, shots=shots)
            mc = monte_carlo_fidelity(prog, circuit, model,
                                      samples=samples, shots=shots)
            rec.update({"fInput": mc_in.fidelity, "fCompiled": mc.fidelity,
                        "relativeError": relative_error(mc.fidelity,
                                                        mc_in.fidelity),
                        "method": "monte-carlo"})
    else:
        rec.update({"fInput": None, "fCompiled": None,
                    "relativeError": None, "method": "n/a"})
    rec.update({"seed": model.seed, "wallTime": wall,
                "version": __version__})
    return rec


def cmd_bench(args) -> int:
    opts = _compile_options(args)
    model = NoiseModel(args.p_dephase, args.p_depol_tq, args.seed)
    files = sorted(Path(args.directory).glob("*.qasm"))
    if not files:
        print(f"no .qasm files in {args.directory}", file=sys.stderr)
        return EXIT_PARSE
    records, skipped = [], []
    for f in files:
        try:
            records.append(bench_record(f, opts, model, args.oracle_cap,
                                        args.samples, args.shots))
        except (QasmError, CircuitError) as exc:
            skipped.append({"name": f.stem, "error": str(exc)})
    records.sort(key=lambda r: (r["name"], r["numQubits"]))

    def mean(key):
        vals = [r[key] for r in records
                if isinstance(r.get(key), (int, float))
                and not (isinstance(r[key], float) and math.isnan(r[key]))]
        return sum(vals) / len(vals) if vals else None

    aggregate = {"note": "aggregate means are qualitative",
                 "meanGateCountRatio": mean("gateCountRatio"),
                 "meanBaselineRatio": mean("baselineRatio"),
                 "meanNormRatio": mean("normRatio"),
                 "meanRelativeError": mean("relativeError")}
    report = {"version": __version__, "seed": args.seed,
              "optsHash": _opts_hash(opts, args.seed),
              "circuits": records, "skipped": skipped,
              "aggregate": aggregate}
    if args.out:
        Path(args.out).write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(CSV_COLUMNS)
            for r in records:
                w.writerow([_num(r.get(c)) for c in CSV_COLUMNS])
    if not args.out and not args.csv:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_compile_flags(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--ancilla", dest="ancilla", action="store_true",
                       default=None, help="force the ancilla-merged scheme")
    group.add_argument("--no-ancilla", dest="ancilla", action="store_false",
                       help="forbid the ancilla-merged scheme")
    p.add_argument("--cost", default="lex",
                   help="cost order: lex or weighted:W (default lex)")
    p.add_argument("--max-iters", type=int, default=50)


def _add_noise_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p-dephase", type=float, default=1e-3)
    p.add_argument("--p-depol-tq", type=float, default=1e-3)
    p.add_argument("--samples", type=int, default=0,
                   help="Monte Carlo noise samples (0 = closed form only)")
    p.add_argument("--shots", type=int, default=10)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pgmq",
        description="Phase-gadget compiler for programmable multiqubit "
                    "entangling gates")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a QASM file to program JSON")
    p.add_argument("input")
    p.add_argument("--out", help="program JSON path")
    p.add_argument("--seed", type=int, default=0)
    _add_compile_flags(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("verify", help="check a program against its source")
    p.add_argument("program")
    p.add_argument("input")
    p.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="fidelity estimates for a program")
    p.add_argument("program")
    p.add_argument("--input", help="source QASM for relative-error reporting")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here")
    _add_noise_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="compile and score a directory of QASM")
    p.add_argument("directory")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--csv", help="report CSV path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP,
                   help="largest register simulated for fidelities")
    _add_compile_flags(p)
    _add_noise_flags(p)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QasmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CircuitError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
