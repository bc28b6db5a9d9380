"""Command line front end: design / obfuscate / attack / evaluate / bench.

Stages hand data over through files; every JSON artifact echoes the
run configuration (seeds included) so any output can be regenerated
byte-identically.  Exit codes: 0 success, 1 infeasible spec or attack
failure, 2 usage or I/O problems.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from firlock import design as fd
from firlock import decoys as dc
from firlock import tmcm as tm
from firlock import netlist as gn
from firlock import verilog as vg
from firlock import attack as atk
from firlock import evaluate as ev

__all__ = ["main", "bundled_spec_text"]

BENCH_FILTERS = (1, 2, 3)
BENCH_KEY_BITS = {1: 32, 2: 64, 3: 128}


def bundled_spec_text(index: int) -> str:
    """JSON text of one of the packaged reference filter specs."""
    return resources.files("firlock").joinpath(f"specs/filter{index}.json").read_text("utf-8")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_json(path: Path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc


def _config_dict(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys}


def _run_design(spec: fd.FilterSpec, grid_density: float, verify_density: float):
    grid = fd.build_frequency_grid(spec, grid_density)
    coeffs = fd.design_coefficients(spec, grid)
    bounds = fd.coefficient_bounds(spec, grid)
    qf = fd.quantize(coeffs, bounds, spec.Q)
    vgrid = fd.build_frequency_grid(spec, verify_density)
    report = fd.verify_spec(qf, spec, vgrid)
    float_report = fd.verify_response(coeffs.h, spec, vgrid)
    return grid, coeffs, bounds, qf, report, float_report


def cmd_design(args) -> int:
    spec_path = Path(args.spec)
    if not spec_path.is_file():
        print(f"error: spec file not found: {spec_path}", file=sys.stderr)
        return 2
    spec = fd.FilterSpec.from_file(spec_path)
    config = _config_dict(args, ["spec", "grid_density", "verify_density", "out"])
    try:
        _, coeffs, bounds, qf, report, float_report = _run_design(
            spec, args.grid_density, args.verify_density
        )
    except fd.InfeasibleSpec as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = spec_path.stem
    _write_json(
        out / f"{stem}.float.json",
        {
            "spec": spec.to_json_dict(),
            "h": list(coeffs.h),
            "lower": list(bounds.lower),
            "upper": list(bounds.upper),
            "run_config": config,
        },
    )
    _write_json(
        out / f"{stem}.quant.json",
        {"spec": spec.to_json_dict(), **qf.to_json_dict(), "run_config": config},
    )
    _write_json(
        out / f"{stem}.verify.json",
        {
            "spec": spec.to_json_dict(),
            "quantized": report.to_json_dict(),
            "float": float_report.to_json_dict(),
            "run_config": config,
        },
    )
    print(f"designed {stem}: N={spec.N}, mbw={qf.mbw}, quantized response "
          f"{'meets spec' if report.ok else 'violates spec (quantization)'}")
    return 0


def _obfuscate(qf, dsm, p, ibw, seed):
    da = dc.assign_decoys(qf, p, dsm, seed)
    tmcm, key = tm.build_tmcm(qf, da, ibw, seed + 1)
    nl = gn.lower_to_gates(tmcm)
    return da, tmcm, key, nl


def cmd_obfuscate(args) -> int:
    quant_path = Path(args.quant)
    if not quant_path.is_file():
        print(f"error: quantized filter file not found: {quant_path}", file=sys.stderr)
        return 2
    doc = _read_json(quant_path)
    qf = fd.QuantizedFilter.from_json_dict(doc)
    spec_dict = doc.get("spec")
    if args.p < qf.N:
        print(f"error: p must be at least N ({qf.N})", file=sys.stderr)
        return 2
    config = _config_dict(args, ["quant", "dsm", "p", "ibw", "seed_obfuscate", "out"])
    dsm = dc.DecoyMethod.parse(args.dsm)
    da, tmcm, key, nl = _obfuscate(qf, dsm, args.p, args.ibw, args.seed_obfuscate)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "netlist.json", {**nl.to_json_dict(), "run_config": config})
    header = json.dumps(config, sort_keys=True)
    (out / "design.v").write_text(vg.emit_verilog(nl, header=f"config: {header}"), "utf-8")
    (out / "key.hex").write_text(key.to_hex() + "\n", "utf-8")
    _write_json(out / "layout.json", {**key.layout_json_dict(), "run_config": config})
    _write_json(
        out / "secret-assignment.json",
        {
            "secret": True,
            "spec": spec_dict,
            "quantized": qf.to_json_dict(),
            "decoys": da.to_json_dict(),
            "tmcm": tmcm.to_json_dict(),
            "key_hex": key.to_hex(),
            "run_config": config,
        },
    )
    print(f"obfuscated: N={tmcm.N}, p={tmcm.p}, cbw={tmcm.cbw}, "
          f"{len(nl.gates)} gates, key {key.to_hex()}")
    return 0


def cmd_attack(args) -> int:
    nl_path = Path(args.netlist)
    if not nl_path.is_file():
        print(f"error: netlist file not found: {nl_path}", file=sys.stderr)
        return 2
    config = _config_dict(args, ["netlist", "seed_attack", "ground_truth", "out"])
    nl = gn.GateNetlist.from_json_dict(_read_json(nl_path))
    try:
        recovered = atk.extract_constants(nl, seed=args.seed_attack)
    except (atk.NoConsistentBit, atk.VerificationMismatch, atk.ExtractionAnomaly) as exc:
        print(f"error: extraction failed: {exc}", file=sys.stderr)
        return 1
    try:
        verdict = atk.classify_dsm(recovered)
    except atk.InconclusiveClassification:
        verdict = None
    truth = None
    if args.ground_truth:
        secret = _read_json(Path(args.ground_truth))
        truth = secret["quantized"]["coeffs"]
    report = atk.compile_report(recovered, ground_truth=truth, dsm_verdict=verdict)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "recovered.json", {**recovered.to_json_dict(), "run_config": config})
    _write_json(out / "report.json", {**report.to_json_dict(), "run_config": config})
    label = verdict.label if verdict else "inconclusive"
    cdc = "n/a" if report.cdc is None else report.cdc
    print(f"attack: vc={report.vc}, cdc={cdc}, apc=2^{report.apc_log2}, dsm={label}")
    return 0


def _rebuild_from_secret(doc):
    spec = fd.FilterSpec.from_json_dict(doc["spec"])
    tmcm = tm.ObfuscatedTMCM.from_json_dict(doc["tmcm"])
    key = tm.SecretKey.from_hex(doc["key_hex"], tmcm.key_widths)
    return spec, tm.build_folded_filter(tmcm), key


def cmd_evaluate(args) -> int:
    secret_path = Path(args.secret)
    if not secret_path.is_file():
        print(f"error: secret assignment file not found: {secret_path}", file=sys.stderr)
        return 2
    config = _config_dict(
        args, ["secret", "keys", "max_hd", "seed_eval", "curve_points", "verify_density", "out"]
    )
    doc = _read_json(secret_path)
    spec, filt, key = _rebuild_from_secret(doc)
    wrong = []
    if args.keys > 0:
        wrong = list(ev.sample_wrong_keys(key, args.keys, args.max_hd, args.seed_eval).keys)
    report = ev.behavior_report(
        filt, key, spec, wrong,
        grid_density=args.verify_density, curve_points=args.curve_points,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "behavior.json", {**report.to_json_dict(), "run_config": config})
    (out / "curves.csv").write_text(ev.emit_curves(report), "utf-8")
    print(f"evaluate: {len(wrong)} wrong keys, violation fraction "
          f"{report.violation_fraction:.3f}")
    return 0


def cmd_bench(args) -> int:
    """End-to-end run of the three reference filters, one row per method."""
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    methods = ("hd", "rd", "hdrd") if args.dsm == "all" else (args.dsm,)
    rows = []
    for index in BENCH_FILTERS:
        spec = fd.FilterSpec.from_json_dict(json.loads(bundled_spec_text(index)))
        grid = fd.build_frequency_grid(spec, args.grid_density)
        coeffs = fd.design_coefficients(spec, grid)
        bounds = fd.coefficient_bounds(spec, grid)
        qf = fd.quantize(coeffs, bounds, spec.Q)
        p = BENCH_KEY_BITS[index]
        for method in methods:
            da, tmcm, key, nl = _obfuscate(
                qf, dc.DecoyMethod.parse(method), p, args.ibw, args.seed_obfuscate
            )
            recovered = atk.extract_constants(nl, seed=args.seed_attack)
            try:
                verdict = atk.classify_dsm(recovered)
            except atk.InconclusiveClassification:
                verdict = None
            report = atk.compile_report(
                recovered, ground_truth=qf.coeffs, dsm_verdict=verdict
            )
            filt = tm.build_folded_filter(tmcm)
            wrong = list(ev.sample_wrong_keys(key, args.keys, args.max_hd, args.seed_eval).keys)
            wrong += ev.single_slice_corruptions(key)
            behavior = ev.behavior_report(filt, key, spec, wrong)
            rows.append(
                {
                    "filter": index,
                    "p": p,
                    "dsm": method,
                    "acc": None if verdict is None else verdict.score,
                    "vc": report.vc,
                    "cdc": report.cdc,
                    "apc_log2": report.apc_log2,
                    "violation_fraction": behavior.violation_fraction,
                }
            )
    _write_json(out / "bench.json", {"rows": rows})
    print(f"{'filter':>6} {'p':>4} {'dsm':>5} {'acc':>6} {'vc':>4} {'cdc':>4} "
          f"{'apc':>6} {'wrong-key viol.':>15}")
    for r in rows:
        acc = "-" if r["acc"] is None else f"{r['acc']:.2f}"
        print(f"{r['filter']:>6} {r['p']:>4} {r['dsm']:>5} {acc:>6} {r['vc']:>4} "
              f"{r['cdc']:>4} {'2^' + str(r['apc_log2']):>6} {r['violation_fraction']:>15.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="firlock",
        description="FIR filter design, key-based obfuscation, attack, and evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="LP design, bounds, quantization")
    p_design.add_argument("--spec", required=True, help="filter spec JSON file")
    p_design.add_argument("--grid-density", type=float, default=16.0, dest="grid_density")
    p_design.add_argument("--verify-density", type=float, default=160.0, dest="verify_density")
    p_design.add_argument("--out", default=".")
    p_design.set_defaults(func=cmd_design)

    p_obf = sub.add_parser("obfuscate", help="decoys, TMCM, key, netlist, Verilog")
    p_obf.add_argument("--quant", required=True, help="quantized filter JSON (design output)")
    p_obf.add_argument("--dsm", choices=["hd", "rd", "hdrd"], default="hdrd")
    p_obf.add_argument("--p", type=int, required=True, help="number of key bits")
    p_obf.add_argument("--ibw", type=int, default=32, help="filter input bit-width")
    p_obf.add_argument("--seed-obfuscate", type=int, default=1, dest="seed_obfuscate")
    p_obf.add_argument("--out", default=".")
    p_obf.set_defaults(func=cmd_obfuscate)

    p_atk = sub.add_parser("attack", help="extract constants and recover coefficients")
    p_atk.add_argument("--netlist", required=True, help="netlist JSON (obfuscate output)")
    p_atk.add_argument("--seed-attack", type=int, default=2, dest="seed_attack")
    p_atk.add_argument("--ground-truth", default=None, dest="ground_truth",
                       help="secret-assignment.json, enables cdc scoring")
    p_atk.add_argument("--out", default=".")
    p_atk.set_defaults(func=cmd_attack)

    p_eval = sub.add_parser("evaluate", help="wrong-key behavior report and curves")
    p_eval.add_argument("--secret", required=True, help="secret-assignment.json")
    p_eval.add_argument("--keys", type=int, default=50, help="wrong keys to sample")
    p_eval.add_argument("--max-hd", type=int, default=4, dest="max_hd")
    p_eval.add_argument("--seed-eval", type=int, default=3, dest="seed_eval")
    p_eval.add_argument("--curve-points", type=int, default=257, dest="curve_points")
    p_eval.add_argument("--verify-density", type=float, default=160.0, dest="verify_density")
    p_eval.add_argument("--out", default=".")
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser("bench", help="all three reference filters end to end")
    p_bench.add_argument("--dsm", choices=["hd", "rd", "hdrd", "all"], default="all")
    p_bench.add_argument("--ibw", type=int, default=32)
    p_bench.add_argument("--grid-density", type=float, default=16.0, dest="grid_density")
    p_bench.add_argument("--keys", type=int, default=50)
    p_bench.add_argument("--max-hd", type=int, default=4, dest="max_hd")
    p_bench.add_argument("--seed-obfuscate", type=int, default=1, dest="seed_obfuscate")
    p_bench.add_argument("--seed-attack", type=int, default=2, dest="seed_attack")
    p_bench.add_argument("--seed-eval", type=int, default=3, dest="seed_eval")
    p_bench.add_argument("--out", default=".")
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
