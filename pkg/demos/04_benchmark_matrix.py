"""A small experiment sweep written to CSV, the same way the CLI does it.

Three synthetic rivet locations on one panel, every ordered pair, two step
sizes, two noise levels, two seeds, the three cheap baselines. The adaptive
methods are left out to keep the demo fast; add "OTCAR" and "OFJDAR" to
``methods`` for the full comparison.

Run: python3 demos/04_benchmark_matrix.py [out_dir]
"""

import sys
import tempfile

from ofjdar.bench import ExperimentConfig, emit_report, run_matrix

config = ExperimentConfig.from_dict({
    "domains": [{"name": f"L{i}", "domain_seed": i, "shift_magnitude": 0.5} for i in range(3)],
    "methods": ["OSD", "OTD", "CTD"],
    "delta_ns": [1, 10],
    "noise_levels": [0, 10],
    "seeds": [0, 1],
})
table = run_matrix(config)
out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="ofjdar-demo-")
paths = emit_report(table, out)

print(f"{len(table.rows)} cells, all ok: {table.all_ok}")
for method in ("OSD", "OTD", "CTD"):
    for dn in (1, 10):
        cells = [table.median(method=method, delta_n=dn, noise=n) for n in (0.0, 10.0)]
        print(f"{method} dN={dn:2d}: median RMSE noise 0 -> {cells[0]:.3f}, noise 10 -> {cells[1]:.3f}")
print("written:", ", ".join(str(p) for p in paths.values()))
