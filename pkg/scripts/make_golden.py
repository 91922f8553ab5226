"""Regenerate the golden suite report (tests/golden/suite_report.json).

Only rerun after a deliberate behavior change, then review the diff.
"""

import argparse
from pathlib import Path

from shadowlab.experiment import dumps, execute_suite

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

target = Path(__file__).resolve().parents[1] / "tests" / "golden" / "suite_report.json"
res = execute_suite(args.seed)
target.write_text(dumps(res.report), encoding="utf-8")
print(f"wrote {target} (exit status {res.exit_code})")
