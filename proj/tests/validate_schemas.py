"""Validate every fixture against the system schema and CLI reports against the report schema."""

import json
import pathlib
import subprocess
import sys

import jsonschema

RUNS = [
    ("inspect", "free_particle.json", ["--tensors", "all"]),
    ("inspect", "damped_oscillator.json", ["--tensors", "all", "--npoints", "2", "--timing"]),
    ("inspect", "knife_edge.json", ["--tensors", "all"]),
    ("inspect", "rolling_ball.json", ["--tensors", "all", "--npoints", "1", "--order", "2"]),
    ("verify", "tan_system.json", ["--npoints", "3"]),
    ("verify", "knife_edge_nonholonomic.json", ["--npoints", "2"]),
    ("verify", "knife_edge.json", ["--npoints", "2", "--perturb", "1e-3"]),
    ("reduce", "rolling_ball.json", ["--npoints", "3"]),
    ("roots", "knife_edge.json", []),
    ("roots", "complex_roots.json", []),
]


def main() -> int:
    cli, schema_dir, fixture_dir = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    system_schema = json.loads((schema_dir / "system.schema.json").read_text())
    report_schema = json.loads((schema_dir / "report.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(system_schema)
    jsonschema.Draft202012Validator.check_schema(report_schema)
    system = jsonschema.Draft202012Validator(system_schema)
    report = jsonschema.Draft202012Validator(report_schema)

    failures = 0
    for path in sorted(fixture_dir.glob("*.json")):
        errors = list(system.iter_errors(json.loads(path.read_text())))
        for e in errors:
            print(f"{path.name}: {e.json_path}: {e.message}")
        failures += bool(errors)

    for command, name, extra in RUNS:
        proc = subprocess.run([cli, command, str(fixture_dir / name), *extra], capture_output=True, text=True)
        if proc.returncode not in (0, 1):
            print(f"{command} {name}: exit {proc.returncode}: {proc.stderr.strip()}")
            failures += 1
            continue
        doc = json.loads(proc.stdout)
        errors = list(report.iter_errors(doc))
        for e in errors:
            print(f"{command} {name}: {e.json_path}: {e.message}")
        failures += bool(errors)
        if json.loads(json.dumps(doc)) != doc:
            print(f"{command} {name}: report does not round-trip")
            failures += 1

    # Invalid documents must be rejected by the schema too.
    for bad in ({"kind": "sode", "coords": ["x"]}, {"kind": "constrained", "coords": ["x"], "F": ["0"]},
                {"kind": "sode", "coords": ["u_x"], "F": ["0"]}):
        if system.is_valid(bad):
            print(f"schema accepted an invalid system: {bad}")
            failures += 1

    print(f"{failures} schema failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
