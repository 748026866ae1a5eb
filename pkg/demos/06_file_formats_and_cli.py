"""
File formats and the command line
=================================

Everything the ``metapred`` command consumes and emits: the dataset CSV,
the simulation config, and the three report formats. This script writes
the input files to a temp directory and drives the installed CLI through
subprocess, which is exactly how external pipelines would use it.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

DATASET = """\
study,effect,se
Alpha,0.42,0.21
Bravo,-0.08,0.28
Charlie,0.55,0.19
Delta,0.26,0.24
Echo,0.78,0.30
"""

SIM_CONFIG = """\
# two scenarios x three methods, desk scale
n = [7]
tau2 = [0.05, 0.2]
reps = 100
seed = 7
methods = [hts, jeffreys, dumouchel]
"""


def run(*args, env=None):
    cmd = [sys.executable, "-m", "metapred.cli", *args]
    print(f"$ metapred {' '.join(args)}")
    proc = subprocess.run(cmd, capture_output=True, text=True, env=env)
    print(proc.stdout)
    if proc.returncode != 0:
        print(f"(exit {proc.returncode}) {proc.stderr}")
    return proc


with tempfile.TemporaryDirectory() as tmp:
    data = Path(tmp) / "trials.csv"
    data.write_text(DATASET)
    config = Path(tmp) / "study.cfg"
    config.write_text(SIM_CONFIG)

    # the analysis table in each format
    run("analyze", "--data", str(data), "--methods", "hts,jeffreys,dumouchel",
        "--format", "csv")
    run("analyze", "--data", str(data), "--methods", "hts,jeffreys", "--format",
        "plotdata")

    # the prior registry and a density table
    run("priors", "list")
    run("priors", "density", "--prior", "shrinkage", "--data", str(data),
        "--tau-grid", "0.1..0.5 step 0.1")

    # a tiny coverage study; output is byte-stable for a given seed
    run("simulate", "--config", str(config), "--parallelism", "2")

    # a malformed file exits 3 (data error), stderr carries the reason
    bad = Path(tmp) / "bad.csv"
    bad.write_text("study,effect,se\nA,0.5,0\nB,0.2,0.1\n")
    run("analyze", "--data", str(bad))
