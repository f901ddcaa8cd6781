"""Regenerate reference_values.json from the independent reference filter.

    python tests/oracle/compute_reference.py
"""

import json
import time
from pathlib import Path

from reference_filter import steady_stats

if __name__ == "__main__":
    t0 = time.time()
    stats = steady_stats(n_trials=100, seed=2024)
    stats["seconds"] = round(time.time() - t0, 1)
    out = Path(__file__).with_name("reference_values.json")
    out.write_text(json.dumps(stats, indent=2) + "\n")
    print(json.dumps(stats, indent=2))
