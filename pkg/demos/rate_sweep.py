"""Push a hot spot past saturation and compare AC with plain HMIPv6.

Eight static nodes sit under MAP1, whose uplink carries 2 Mb/s. Raising the
per-flow rate saturates that link under plain HMIPv6. With admission
control, MAP1 evicts residents to the roomier MAP3 instead.

Run: python3 demos/rate_sweep.py
"""

from hmip_lab import Simulator, load_scenario, with_overrides

base = load_scenario("rate_sweep.scn")
print(f"{'rate':>6} | {'ac pkts':>8} {'delay':>7} | {'baseline pkts':>13} {'delay':>7}")
for rate in (0.1e6, 0.2e6, 0.3e6, 0.4e6, 0.5e6):
    sc = with_overrides(base, rate_bps=rate)
    ac = Simulator(sc, "ac", 1).run().summary()
    bl = Simulator(sc, "baseline", 1).run().summary()
    print(f"{rate / 1e6:5.1f}M | {ac['throughput_pkts']:8d} {ac['handoff_delay_mean_s']:7.3f} | "
          f"{bl['throughput_pkts']:13d} {bl['handoff_delay_mean_s']:7.3f}")
