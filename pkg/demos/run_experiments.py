"""
Running configured experiments
==============================

Each JSON file under configs/ names an experiment kind and spells out every
budget.  Reports land in reports/<name>/ as jsonl, text and csv.
"""

import sys
from pathlib import Path

from predlab.harness import ExperimentConfig, run_experiment

here = Path(__file__).parent
status = 0
for path in sorted((here / "configs").glob("*.json")):
    cfg = ExperimentConfig.load(path)
    cfg = ExperimentConfig(**{**cfg.__dict__, "output_dir": str(here / "reports" / path.stem),
                              "cache_dir": str(here / "cache")})
    rep = run_experiment(cfg)
    print(rep.to_text())
    status |= not rep.passed

sys.exit(status)
