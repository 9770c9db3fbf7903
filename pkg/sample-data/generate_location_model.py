#!/usr/bin/env python3
"""
Generates sample-data/location9.model, the desk-scale discretization of the
normal location example, for the im-auditor CLI.

Run from the repo root:
    python sample-data/generate_location_model.py

What is baked in:
  - data and parameter frames on the grid 3, 4, ..., 11
  - likelihood: N(θ, 1) binned on the same grid, tails folded into the end bins
  - prior: mass 0.9 on {θ <= 7}, 0.1 on the whole frame
  - interval prior with the same two focal sets on the real line, for im-curve

Try it:
    im-auditor audit sample-data/location9.model --im gb
    im-auditor im-curve --prior sample-data/location9.model --y 7.5 9
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from im_auditor.modelfile import ModelBundle, serialize_model  # noqa: E402
from im_auditor.randomset import IntervalPrior, discretized_location_model  # noqa: E402

OUTPUT = Path(__file__).parent / "location9.model"

model = discretized_location_model(9)
bundle = ModelBundle(
    data_frame=model.data_frame,
    param_frame=model.param_frame,
    likelihood=model.likelihood,
    prior=model.prior,
    interval_prior=IntervalPrior.half_line(7.0, 0.9),
)
OUTPUT.write_text(serialize_model(bundle), encoding="utf-8")
print(f"Written: {OUTPUT}")
