"""Sorted-neighborhood dedup: rank near-keys, slide the window, merge pairs.

Run with: python3 demos/03_deduplication.py
"""

from deprof import DedupConfig, DedupSession, from_rows, rank_dedup_keys

rows = [
    ["ann kovac", "oak st 7", "111-22-33", "accounting"],
    ["Ann Kovac", "oak st 7", "111-22-33", "accounting"],  # same person, case diff
    ["bob maier", "elm rd 12", "222-33-44", "sales"],
    ["bob maier", "elm rd 12b", "222-33-44", "sales"],  # street typo
    ["cid orlov", "main sq 1", "333-44-55", "it"],
    ["dora ruiz", "birch ln 3", "444-55-66", "sales"],
]
relation = from_rows(["name", "street", "phone", "dept"], rows)
cfg = DedupConfig(threshold="0.4", window=3, k=3)

print("== key candidates (largest dependent list first) ==")
for candidate in rank_dedup_keys(relation, cfg):
    names = relation.attribute_names()
    deps = ", ".join(names[a] for a in candidate.rhs_list)
    marker = "  (unique)" if candidate.is_unique else ""
    print(f"  {names[candidate.lhs]} -> {{{deps}}}{marker}")

session = DedupSession(relation, cfg)
print(f"\nsorting by {relation.attribute_names()[session.chosen.lhs]!r}, "
      f"window {cfg.window}, k={cfg.k}")

while True:
    pair = session.propose()
    if pair is None:
        break
    a = relation.row_values(pair.row_a)
    b = relation.row_values(pair.row_b)
    print(f"\nproposed pair ({pair.row_a}, {pair.row_b}), matches on {pair.match_count} attrs:")
    print("  keep:   ", a)
    print("  discard:", b)
    session.decide(pair, "a")  # scripted demo: always keep the first row

print(f"\nrows before: {relation.row_count}, after: {session.current.row_count}")
print("journal:", [entry.to_json() for entry in session.journal])
