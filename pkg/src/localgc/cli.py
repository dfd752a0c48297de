"""Command line entry point.

    localgc validate SPEC.json
    localgc run SPEC.json [--out-dir DIR] [--threads K] [--seed-override S]

Exit codes: 0 success, 1 a certificate or expectation failed, 2 usage or
spec error.  The default output directory is ``$LOCALGC_OUT_DIR`` or
``./results``.  CSV bodies depend only on the spec and seed; run metadata
with timestamps goes to a ``.meta.json`` sidecar.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .experiments import rows_to_csv, run_spec, spec_hash, validate_spec

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
OUT_DIR_ENV = "LOCALGC_OUT_DIR"


def load_spec(path):
    """Parse a spec file; returns (spec, diagnostics)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        return None, [f"{path}: cannot read ({exc.strerror})"]
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if text.splitlines() else ""
        return None, [f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", f"    {line}"]
    return spec, validate_spec(spec)


def validate(path) -> list[str]:
    return load_spec(path)[1]


def write_outputs(spec, result, out_dir: Path, started: float, threads: int) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = spec.get("outputs", {})
    stem = spec.get("name", spec["kind"])
    digest = spec_hash(spec)
    csv_path = out_dir / outputs.get("csv", f"{stem}.csv")
    csv_path.write_bytes(rows_to_csv(result.rows, spec.get("seed", 0), digest).encode("utf-8"))
    files = [csv_path]
    if result.jsonl:
        p = out_dir / outputs.get("jsonl", f"{stem}.jsonl")
        p.write_bytes(result.jsonl.encode("utf-8"))
        files.append(p)
    if result.text:
        p = out_dir / outputs.get("text", f"{stem}.txt")
        p.write_bytes(result.text.encode("utf-8"))
        files.append(p)
    meta = {"spec": spec, "spec_hash": digest, "passed": result.passed, "notes": result.notes,
            "threads": threads, "version": __version__, "started": started,
            "finished": time.time(), "files": [f.name for f in files]}
    meta_path = csv_path.with_suffix(csv_path.suffix + ".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
    return files + [meta_path]


def _parser():
    ap = argparse.ArgumentParser(prog="localgc", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment spec")
    r.add_argument("spec")
    r.add_argument("--out-dir", default=None)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--seed-override", type=int, default=None)
    v = sub.add_parser("validate", help="check a spec without running it")
    v.add_argument("spec")
    return ap


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    spec, diags = load_spec(args.spec)
    if args.command == "validate":
        for d in diags:
            print(d, file=sys.stderr)
        if not diags:
            print(f"{args.spec}: ok")
        return EXIT_USAGE if diags else EXIT_OK
    if spec is not None and args.seed_override is not None:
        spec["seed"] = args.seed_override
        diags = validate_spec(spec)
    if diags:
        for d in diags:
            print(d, file=sys.stderr)
        return EXIT_USAGE
    if args.threads < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out_dir or os.environ.get(OUT_DIR_ENV, "results"))
    started = time.time()
    try:
        result = run_spec(spec, threads=args.threads)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    files = write_outputs(spec, result, out_dir, started, args.threads)
    if result.text:
        sys.stdout.write(result.text)
    for f in files:
        print(f"wrote {f}")
    if not result.passed:
        print(f"{spec['kind']}: FAILED {json.dumps(result.notes, default=str)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
