#!/usr/bin/env python3
"""Runs the tool and validates its JSON outputs against schema/.

usage: validate_schemas.py <tool> <schema dir> <work dir>
"""
import json
import pathlib
import shutil
import subprocess
import sys

import jsonschema


def load(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def run(tool, *args, expect=0):
    proc = subprocess.run([tool, *args], capture_output=True, text=True)
    if proc.returncode != expect:
        raise SystemExit(f"{args}: exit {proc.returncode}, expected {expect}\n{proc.stdout}{proc.stderr}")
    return proc.stdout


def main():
    tool, schema_dir, work = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    shutil.rmtree(work, ignore_errors=True)
    work.mkdir(parents=True)
    schemas = {p.name.split(".")[0]: load(p) for p in schema_dir.glob("*.schema.json")}
    for schema in schemas.values():
        jsonschema.Draft202012Validator.check_schema(schema)

    def check(name, doc):
        jsonschema.Draft202012Validator(schemas[name]).validate(doc)
        print(f"ok {name}")

    data, spec = str(work / "data.csv"), str(work / "spec.json")
    run(tool, "generate", "--n", "120", "--seed", "1", "--out", data, "--spec-out", spec)
    check("column_spec", load(spec))

    check("fit_output", json.loads(run(tool, "fit", "--data", data, "--spec", spec, "--eta-starts", "2")))
    check("fit_output", json.loads(run(tool, "fit", "--data", data, "--spec", spec, "--eta-starts", "2",
                                       "--tau", "inf", "--bootstrap", "100")))
    for method in ("rwast", "wast", "sst"):
        check("test_output", json.loads(run(tool, "test", "--data", data, "--spec", spec, "--B", "100",
                                            "--method", method, "--sst-grid", "30", "--timing")))

    config = work / "sim.json"
    config.write_text(json.dumps({"ns": [60], "methods": ["AHu"], "eta_starts": 1}))
    check("simulate_config", load(config))
    check("simulate_output", json.loads(run(tool, "simulate", "--suite", "estimation", "--config",
                                            str(config), "--reps", "1", "--out-dir", str(work / "sim"))))

    check("error", json.loads(run(tool, "fit", "--data", str(work / "missing.csv"), "--spec", spec, expect=1)))
    check("error", json.loads(run(tool, "fit", expect=1)))

    bad = {"ns": [60], "bogus": 1}
    try:
        jsonschema.Draft202012Validator(schemas["simulate_config"]).validate(bad)
    except jsonschema.ValidationError:
        print("ok simulate_config rejects unknown keys")
    else:
        raise SystemExit("simulate_config accepted an unknown key")


if __name__ == "__main__":
    main()
