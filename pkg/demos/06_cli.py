"""The qmot command line, driven from Python.

Writes two matrices to a temporary directory, then runs dist, interp,
metric, flow and ops check. Every JSON output echoes its "config".

Run: python3 demos/06_cli.py
"""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from qmot.io import write_matrix


def qmot(*args):
    res = subprocess.run([sys.executable, "-m", "qmot.cli", *map(str, args)],
                         capture_output=True, text=True)
    print(f"$ qmot {' '.join(map(str, args))}   (exit {res.returncode})")
    out = res.stdout or res.stderr
    print("  " + out.strip().replace("\n", "\n  ")[:600])
    return res


with tempfile.TemporaryDirectory() as tmp:
    d = Path(tmp)
    write_matrix(np.array([[1.0, 0.3], [0.3, 0.5]]), d / "a.json")
    write_matrix(np.array([[0.6, -0.2j], [0.2j, 1.4]]), d / "b.json")
    qmot("dist", "--rho0", d / "a.json", "--rho1", d / "b.json", "--mode", "wf")
    qmot("interp", "--rho0", d / "a.json", "--rho1", d / "b.json", "--out", d / "path.csv")
    print("  path.csv header:", (d / "path.csv").read_text().splitlines()[0])
    qmot("metric", "--rho", d / "a.json", "--delta", d / "b.json")
    qmot("flow", "--rho0", d / "a.json", "--functional", "entropy", "--steps", 200,
         "--out", d / "flow.csv")
    qmot("ops", "check", "--n", 3, "--trials", 20)
    # a structured error: balanced transport needs equal traces
    res = qmot("dist", "--rho0", d / "a.json", "--rho1", d / "b.json", "--mode", "balanced")
    print("  error code:", json.loads(res.stderr)["code"])
