"""What replacement buys when a MAP is oversubscribed.

Nodes keep arriving under a MAP with small thresholds while movers hand off
into it. Without replacement the MAP turns them away. With it, a resident
with at least as many sessions is moved to another MAP it can reach.

Run: python3 demos/replacement.py
"""

import numpy as np

from hmip_lab import Simulator, load_scenario
from hmip_lab.metrics import probabilities

sc = load_scenario("overload.scn")
for label in ("ac", "ac-norepl", "naive", "baseline"):
    blocking, dropping = zip(*(probabilities(Simulator(sc, label, seed).run()) for seed in range(1, 11)))
    print(f"{label:10s} blocking {np.mean(blocking):.3f}   dropping {np.mean(dropping):.3f}")
