#!/usr/bin/env python3
"""Validates report.json from several CLI runs against the bundled schema.

Usage: validate_report.py BLINK SCHEMA WORKDIR
"""

import json
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema


def run(blink, *args, expect=0):
    proc = subprocess.run([blink, *args], capture_output=True, text=True)
    if proc.returncode != expect:
        sys.exit(f"{' '.join(args)}: exit {proc.returncode}, expected {expect}\n{proc.stderr}")


def main():
    blink, schema_path, work = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
    schema = json.loads(schema_path.read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    shutil.rmtree(work, ignore_errors=True)
    work.mkdir(parents=True)
    fixture = work / "fixture"
    run(blink, "gen-fixture", "--seed", "11", "--signals", "16", "--windows", "150", "--noise", "0.01",
        "-o", str(fixture))
    ini = str(fixture / "blink.ini")

    def check(name, out, extra=()):
        report = json.loads((out / "report.json").read_text())
        errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
        for e in errors:
            print(f"{name}: {'/'.join(map(str, e.path))}: {e.message}")
        for a in report["artifacts"]:
            if not (out / a["name"]).is_file():
                errors.append(a["name"])
                print(f"{name}: listed artifact {a['name']} is missing")
        for key, want in extra:
            node = report
            for part in key:
                node = node[part]
            if node != want:
                errors.append(key)
                print(f"{name}: {'/'.join(key)} is {node!r}, expected {want!r}")
        print(f"{name}: {'ok' if not errors else 'INVALID'}")
        return not errors

    ok = True
    partial = work / "partial"
    run(blink, "run", "extract-activity", "-c", ini, "--set", f"paths.output={partial}")
    ok &= check("extract-activity only", partial, [(("metrics",), None), (("overhead",), None)])

    run(blink, "run", "ingest-power", "-c", ini, "--set", f"paths.output={partial}", "--set",
        f"paths.scope={work / 'absent.csv'}", expect=3)
    ok &= check("failed phase", partial, [(("phases", "ingest-power", "status"), "failed")])

    run(blink, "run", "ingest-power", "-c", ini, "--set", f"paths.output={partial}")
    run(blink, "run", "identify", "-c", ini, "--set", f"paths.output={partial}")
    ok &= check("identify without monitor", partial, [(("overhead",), None)])

    full = work / "full"
    run(blink, "run", "all", "-c", ini, "--set", f"paths.output={full}")
    ok &= check("all phases", full)
    run(blink, "run", "all", "-c", ini, "--set", f"paths.output={full}")
    ok &= check("rerun", full, [(("last_invocation", "ran"), [])])

    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
