"""
A synthetic study end to end
============================

Simulate all four techniques, summarise the errors and compare strategies
on held-out participants. The same run is available as ``heisenvote run``.
"""

import tempfile
from pathlib import Path

from heisenvote.pipeline import RunConfig, pipeline_run

out = Path(tempfile.mkdtemp())
paths = pipeline_run(RunConfig(out_dir=str(out), seed=1, participants=12, events=81))
for name in ("heisenberg_proportion", "quadrant_distribution", "evaluation"):
    print(paths[name].read_text())

print("manifest:", paths["manifest"])
