"""Runs the ivqr binary over every subcommand and validates the JSON it
writes (stdout reports, stderr errors) against the bundled schemas."""

import json
import pathlib
import subprocess
import sys
import tempfile

from jsonschema import Draft202012Validator


def main() -> int:
    ivqr, schema_dir, demo = sys.argv[1], pathlib.Path(sys.argv[2]), sys.argv[3]
    report = Draft202012Validator(json.loads((schema_dir / "report.schema.json").read_text()))
    error = Draft202012Validator(json.loads((schema_dir / "error.schema.json").read_text()))
    cols = ["--input", demo, "--y", "y", "--x", "const,d,w1,dw1", "--z", "const,s,w1,sw1"]
    tmp = pathlib.Path(tempfile.mkdtemp())

    ok_runs = [
        ["estimate", *cols, "--tau", "0.15,0.5,0.85", "--timings"],
        ["estimate", *cols, "--standardize-z", "--target", "treatment=d,dw1", "--subsample", "50"],
        ["jacobian", *cols, "--beta", "1,1,1,1", "--scheme", "gaussian"],
        ["jacobian", *cols, "--draws", "50"],
        ["jacobian", "--input", demo, "--y", "y", "--density", "--tau", "0.25,0.75"],
        ["milp-export", *cols, "--out", str(tmp / "a.lp")],
        ["milp-export", *cols, "--model", "hd-ivqr", "--lambda", "0.1", "--out", str(tmp / "b.lp")],
        ["milp-export", *cols, "--model", "censored", "--out", str(tmp / "c.lp")],
        ["milp-export", *cols, "--model", "censored-ivqr", "--censor", "w1", "--out", str(tmp / "d.lp")],
        ["simulate", "rmse", "--replications", "3", "--n", "100,200", "--lambdas", "1", "--betas", "1.5"],
        ["simulate", "early-stop", "--replications", "3", "--n", "40", "--p", "2"],
        ["simulate", "coverage", "--replications", "2", "--n", "300", "--q", "1", "--tau", "0.5",
         "--subsample", "40", "--draws", "30", "--rectangle-draws", "500"],
    ]
    bad_runs = [
        (["estimate", *cols, "--tau", "1.5"], 2),
        (["simulate", "bogus"], 2),
        (["milp-export", *cols, "--model", "censored-ivqr", "--out", str(tmp / "e.lp")], 2),
        (["estimate", "--input", str(tmp / "missing.csv"), "--y", "y", "--x", "a", "--z", "a"], 3),
        (["estimate", "--input", demo, "--y", "y", "--x", "const,d", "--z", "const"], 3),
        (["estimate", "--bogus-flag"], 2),
    ]

    failures = 0
    for args in ok_runs:
        proc = subprocess.run([ivqr, *args], capture_output=True, text=True)
        if proc.returncode != 0:
            print(f"FAIL exit {proc.returncode}: {' '.join(args)}\n{proc.stderr}")
            failures += 1
            continue
        errors = list(report.iter_errors(json.loads(proc.stdout)))
        for e in errors[:5]:
            print(f"FAIL schema: {' '.join(args)}: {e.json_path}: {e.message}")
        failures += bool(errors)
    for args, code in bad_runs:
        proc = subprocess.run([ivqr, *args], capture_output=True, text=True)
        if proc.returncode != code:
            print(f"FAIL expected exit {code}, got {proc.returncode}: {' '.join(args)}")
            failures += 1
            continue
        errors = list(error.iter_errors(json.loads(proc.stderr)))
        for e in errors[:5]:
            print(f"FAIL error schema: {' '.join(args)}: {e.message}")
        failures += bool(errors)
    print(f"{len(ok_runs) + len(bad_runs) - failures}/{len(ok_runs) + len(bad_runs)} runs conform")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
