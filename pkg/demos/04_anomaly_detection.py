"""Anomaly detection across arriving partitions: diff the canonical FD set,
probe the lost dependency approximately, then relax it metrically.

Run with: python3 demos/04_anomaly_detection.py
"""

from deprof import (
    AnomalyState,
    FD,
    SweepConfig,
    advance_canonical,
    afd_probe,
    discover_fds,
    fd_diff,
    from_rows,
    mfd_sweep,
    suggest_sweep_bound,
)

# Sensor readings: each device reports a constant calibrated value. In the
# second batch one device drifts by +5.
batch_1 = from_rows(
    ["device", "reading"],
    [[f"dev{d}", 100 * (d + 1)] for d in range(5) for _ in range(6)],
    source="batch-1",
)
drifted = [[f"dev{d}", 100 * (d + 1)] for d in range(5) for _ in range(6)]
drifted[-1][1] += 5
batch_2 = from_rows(["device", "reading"], drifted, source="batch-2")

state = AnomalyState()
fds_1 = discover_fds(batch_1, max_lhs=1)
state = advance_canonical(state, "batch-1", fds_1)
print(f"batch-1: canonical set has {len(fds_1)} FDs")

fds_2 = discover_fds(batch_2, max_lhs=1)
lost, gained = fd_diff(state.canonical_fds, fds_2)
print(f"batch-2: lost {len(lost)}, gained {len(gained)}")
for fd in lost:
    names = batch_2.attribute_names()
    print(f"  lost: [{', '.join(names[a] for a in fd.lhs)}] -> {names[fd.rhs]}")

    g1, first = afd_probe(batch_2, fd, ["0.001", "0.01", "0.05"])
    print(f"  g1 = {g1}; first admitting threshold: {first}")

    bound = suggest_sweep_bound(batch_2, fd.rhs)  # one standard deviation
    print(f"  sweep bound from column std: {bound:.1f}")
    sweep = mfd_sweep(batch_2, fd, SweepConfig(d=bound, step=1))
    if sweep.found:
        print(f"  dependency holds again once relaxed to p = {sweep.p}")
    else:
        print(f"  no relaxation up to {bound:.1f} restores it: {sweep.diagnostic}")

# The expert decides the drift is a new norm and accepts batch 2.
state = advance_canonical(state, "batch-2", fds_2)
print(f"\naccepted; history length {len(state.history)}, "
      f"canonical set now {len(state.canonical_fds)} FDs")
