"""Follow MN19 across the three-MAP topology and watch each registration.

Run: python3 demos/fig4_walkthrough.py
"""

from hmip_lab import Simulator, load_scenario

sc = load_scenario("fig4.scn")
sim = Simulator(sc, "ac", seed=1)
report = sim.run()

print("MN19's journey")
for h in report.handoffs:
    latency = "no sample" if h.latency is None else f"{h.latency * 1000:.1f} ms"
    print(f"  t={h.start:5.1f}s  {h.kind:5s}  signalling {h.signaling_delay * 1000:.0f} ms, interruption {latency}")

# The log is a plain list of tuples; filter it to see the control plane.
print("\nRegistrations seen by the MAPs")
for entry in sim.log:
    if entry[1] == "registration" and entry[2] == "MN19":
        t, _, mn, map_id, mn_class, outcome, ack = entry
        print(f"  t={t:7.3f}s  {map_id}: {mn_class:7s} -> {outcome} ({ack})")

s = report.summary()
print(f"\ndelivered {s['throughput_pkts']} packets, loss {s['packet_loss']:.4%}")
