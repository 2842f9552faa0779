"""A small SER experiment through the harness.

The config format is the one the CLI reads. All curves see the same
channels, messages and noise at each trial index, so their differences
are not Monte Carlo noise between independent runs.
"""

import tempfile
from pathlib import Path

from ciforge import sim

CONFIG = """
[experiment]
experiment = ser
K = 8
Nt = 8
M = 16
schemes = qam, qam:zf, rmqam
snr_grid_db = 15:40:5
trials = 2000
target_errors = 100
seed = 1
"""

cfg = sim.parse_config(CONFIG)
recs, manifest = sim.run_experiment(cfg)
for r in recs:
    print(f"{r.scheme:6s} {r.strategy:5s} {r.snr_db:5.1f} dB  SER {r.ser:.2e}  ({r.symbol_errors}/{r.symbols})")

for scheme, strat in (("qam", "lcqp"), ("qam", "zf"), ("rmqam", "psqp")):
    print(f"{scheme}:{strat} reaches 1e-2 at {sim.snr_at_ser(recs, scheme, strat, 1e-2):.2f} dB")

out = Path(tempfile.mkdtemp())
paths = sim.emit(recs, out, "ser", manifest)
print("\nwrote", ", ".join(p.name for p in paths.values()), "to", out)
