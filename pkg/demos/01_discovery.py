"""Walk through dependency discovery and validation on a small table.

Run with: python3 demos/01_discovery.py
"""

from fractions import Fraction

from deprof import (
    FD,
    MFDStatement,
    build_pli,
    discover_afds,
    discover_fds,
    from_rows,
    g1_error,
    intersect_pli,
    validate_mfd,
)

# A toy flights table: route determines both distance and carrier, except
# for one bad row where somebody fat-fingered the distance.
rows = [
    ["AMS-LED", 1699, "KL"],
    ["AMS-LED", 1699, "KL"],
    ["HEL-LED", 301, "AY"],
    ["HEL-LED", 301, "AY"],
    ["HEL-LED", 310, "AY"],  # typo: should be 301
    ["CDG-LED", 2845, "AF"],
]
relation = from_rows(["route", "distance_km", "carrier"], rows)

print("== stripped partitions ==")
p_route = build_pli(relation, 0)
p_dist = build_pli(relation, 1)
print("route clusters:   ", p_route.clusters)
print("distance clusters:", p_dist.clusters)
print("intersection:     ", intersect_pli(p_route, p_dist).clusters)

print("\n== exact minimal FDs (max lhs 2) ==")
fdset = discover_fds(relation, max_lhs=2)
for fd in fdset.fds:
    lhs = ", ".join(fdset.schema[a] for a in fd.lhs)
    print(f"  [{lhs}] -> {fdset.schema[fd.rhs]}")

print("\n== the broken dependency, approximately ==")
broken = FD(lhs=(0,), rhs=1)  # route -> distance_km
print("g1(route -> distance_km) =", g1_error(relation, broken))
for afd in discover_afds(relation, threshold=Fraction(1, 10), max_lhs=1):
    lhs = ", ".join(relation.attribute_names()[a] for a in afd.fd.lhs)
    print(f"  [{lhs}] -> {relation.attribute_names()[afd.fd.rhs]}  g1={afd.error}")

print("\n== metric relaxation: does route determine distance up to 10 km? ==")
stmt = MFDStatement(lhs=(0,), rhs=(1,), metric="euclidean", p=10)
verdict = validate_mfd(relation, stmt)
print("holds:", verdict.holds, "| smallest satisfying p:", verdict.global_diameter)
