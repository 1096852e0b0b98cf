"""Driving the library from the command line.

Every subcommand reads a JSON configuration and writes <subcommand>.csv and
<subcommand>.json.  Both embed the configuration, and reruns are byte-identical.
This script runs a few subcommands on the configurations in demos/configs.
"""

import pathlib
import subprocess
import sys
import tempfile

here = pathlib.Path(__file__).parent / "configs"
with tempfile.TemporaryDirectory() as out:
    for sub, cfg in (("solve", "solve_pme.json"), ("dtn-check", "dtn.json"), ("compare", "compare_stefan.json"),
                     ("energy-check", "energy.json")):
        r = subprocess.run([sys.executable, "-m", "fracfilt", sub, "--config", str(here / cfg), "--out", out],
                           capture_output=True, text=True)
        lines = (pathlib.Path(out) / f"{sub}.csv").read_text().splitlines()
        print(f"$ fracfilt {sub} --config configs/{cfg}   (exit {r.returncode}, {len(lines) - 2} rows)")
        for line in lines[1:4]:
            print("   ", line)
    r = subprocess.run([sys.executable, "-m", "fracfilt", "solve", "--config", str(here / "invalid.json")],
                       capture_output=True, text=True)
    print(f"$ fracfilt solve --config configs/invalid.json   (exit {r.returncode})")
    print("   ", r.stderr.strip().replace("\n", "\n    "))
