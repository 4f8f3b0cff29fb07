"""
File formats and the command line
=================================

Round-trips an instance through the text format, solves it from the shell
the way a batch run would, and validates the solution file independently.
"""

import json
import subprocess
import tempfile
from pathlib import Path

from vrpmtw.model import (parse_instance, parse_solution, random_instance,
                          validate_solution, write_instance)

work = Path(tempfile.mkdtemp(prefix="vrpmtw-demo-"))

# the text format is line-oriented: a VEHICLE block, then one CUSTOMER line
# per visit with coordinates, demand, service time and its window pairs
instance = random_instance(12, seed=3, max_windows=3)
path = work / "demo12.txt"
path.write_text(write_instance(instance))
print(f"wrote {path}")
print("".join(path.read_text().splitlines(keepends=True)[:8]) + "...\n")

# parsing it back yields the same instance
again = parse_instance(path.read_text())
assert again.n == instance.n
assert again.vehicle_capacity == instance.vehicle_capacity

# the installed `vrpmtw` script drives the same solver; --iterations makes
# the run reproducible bit for bit for a given seed
out = work / "demo12.sol.json"
cmd = ["vrpmtw", "solve", "--instance", str(path), "--b", "1",
       "--iterations", "1500", "--seed", "4", "--out", str(out)]
print("$", " ".join(cmd))
subprocess.run(cmd, check=True)

# solution files are plain JSON: routes, optional schedules, cost, meta
doc = json.loads(out.read_text())
print(f"\nmeta: {doc['meta']}")

solution = parse_solution(out.read_text())
report = validate_solution(again.with_flags(minimise_time=True), solution)
print(f"validator: {report if report else 'clean'}")

# the validate subcommand wraps the same check for shell pipelines
rc = subprocess.run(["vrpmtw", "validate", "--instance", str(path),
                     "--solution", str(out), "--b", "1"]).returncode
print(f"vrpmtw validate exit code: {rc}")
