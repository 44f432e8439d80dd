"""Driving the command line front end from Python.

Each subcommand writes JSON (and CSV where tabular) plus manifest.json into
--out, and returns 0 on success or the error's exit code.
"""
import json
import tempfile
from pathlib import Path

from shiftcover.cli import main

out = Path(tempfile.mkdtemp())
seq = '{"kind": "linear", "params": {}, "horizon": 1000}'
print("cover:", main(["cover", "--seq", seq, "--interval", "2,4", "--epsilon", "0.5", "--out", str(out / "cover")]))
print((out / "cover" / "grid.csv").read_text().splitlines()[:3])

# the linear sequence has a divergent reciprocal sum, so nonexist reports exit 3
print("nonexist:", main(["nonexist", "--seq", seq, "--interval", "2,3", "--out", str(out / "ne")]))
print(json.loads((out / "ne" / "error.json").read_text())["error"])
