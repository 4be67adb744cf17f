"""Canonical JSON forms and human-readable rendering of results.

Every engine result has one JSON document shape, emitted identically by the
CLI and the task service, and a text form per instance (for example
``[lhs, names] -> rhs``) that regex filtering and the human renderer both
work from. JSON bytes are canonical: sorted keys, fixed separators, so
identical results are byte-identical.
"""

from __future__ import annotations

import json
from typing import Any, Sequence

from .afd import AFD
from .anomaly import AnomalyState, DiffRecord, HistoryEntry, SweepResult
from .dedup import DuplicatePair, KeyCandidate
from .fd import FD, FDSet
from .mfd import ClusterViolation, MFDStatement, MFDVerdict
from .relation import Relation, render_value
from .typo import TypoReport, ViolationCluster


def fd_text(fd: FD, schema: Sequence[str]) -> str:
    lhs = ", ".join(schema[a] for a in fd.lhs)
    return f"[{lhs}] -> {schema[fd.rhs]}"


def fd_to_json(fd: FD, schema: Sequence[str]) -> dict:
    return {
        "lhs": [schema[a] for a in fd.lhs],
        "rhs": schema[fd.rhs],
        "lhs_indexes": list(fd.lhs),
        "rhs_index": fd.rhs,
        "text": fd_text(fd, schema),
    }


def afd_to_json(afd: AFD, schema: Sequence[str]) -> dict:
    doc = fd_to_json(afd.fd, schema)
    doc["error"] = {
        "numerator": afd.error.numerator,
        "denominator": afd.error.denominator,
        "decimal": float(afd.error),
    }
    doc["text"] = f"{fd_text(afd.fd, schema)} (g1={float(afd.error):.6g})"
    return doc


def fdset_to_json(fdset: FDSet) -> dict:
    return {
        "provenance": fdset.provenance,
        "schema": list(fdset.schema),
        "fds": [fd_to_json(fd, fdset.schema) for fd in fdset.fds],
    }


def verdict_to_json(verdict: MFDVerdict, stmt: MFDStatement, schema: Sequence[str]) -> dict:
    return {
        "statement": {
            "lhs": [schema[a] for a in stmt.lhs],
            "rhs": [schema[a] for a in stmt.rhs],
            "metric": stmt.metric,
            "p": stmt.p,
        },
        "holds": verdict.holds,
        "global_diameter": verdict.global_diameter,
        "violating_clusters": [_violation_to_json(v) for v in verdict.violating_clusters],
    }


def _violation_to_json(violation: ClusterViolation) -> dict:
    return {
        "rows": list(violation.rows),
        "diameter": violation.diameter,
        "witness": list(violation.witness) if violation.witness else None,
        "incomparable": violation.incomparable,
        "text": _violation_text(violation),
    }


def _violation_text(violation: ClusterViolation) -> str:
    if violation.incomparable:
        return f"rows {list(violation.rows)} incomparable (null rhs)"
    return f"rows {list(violation.rows)} diameter {violation.diameter:.6g}"


def typo_report_to_json(report: TypoReport, schema: Sequence[str]) -> dict:
    clusters = []
    for cluster, displayed, fixes in zip(report.clusters, report.displayed, report.fixes):
        clusters.append(
            {
                "lhs_value": [render_value(v) for v in cluster.lhs_value],
                "rows": list(cluster.rows),
                "central": {
                    "value": render_value(cluster.central_value),
                    "count": cluster.central_count,
                },
                "members": [
                    {
                        "row": m.row,
                        "value": render_value(m.value),
                        "distance": m.distance,
                    }
                    for m in cluster.members
                ],
                "displayed": displayed,
                "fixes": [
                    {
                        "row": f.row,
                        "current": render_value(f.current),
                        "suggested": render_value(f.suggested),
                    }
                    for f in fixes
                ],
                "text": _cluster_text(cluster),
            }
        )
    return {"afd": afd_to_json(report.afd, schema), "clusters": clusters}


def _cluster_text(cluster: ViolationCluster) -> str:
    lhs = ", ".join(render_value(v) for v in cluster.lhs_value)
    return (
        f"lhs=[{lhs}] rows {list(cluster.rows)} central "
        f"{render_value(cluster.central_value)!r} x{cluster.central_count}"
    )


def key_candidate_to_json(candidate: KeyCandidate, schema: Sequence[str]) -> dict:
    return {
        "lhs": schema[candidate.lhs],
        "lhs_index": candidate.lhs,
        "rhs_list": [schema[a] for a in candidate.rhs_list],
        "rhs_count": candidate.rhs_count,
        "is_unique": candidate.is_unique,
        "text": f"{schema[candidate.lhs]} -> {{{', '.join(schema[a] for a in candidate.rhs_list)}}}",
    }


def pair_to_json(pair: DuplicatePair, relation: Relation) -> dict:
    schema = relation.attribute_names()
    return {
        "row_a": pair.row_a,
        "row_b": pair.row_b,
        "matched_attrs": [schema[a] for a in pair.matched_attrs],
        "match_count": pair.match_count,
        "values_a": [render_value(relation.value(pair.row_a, a)) for a in range(len(schema))],
        "values_b": [render_value(relation.value(pair.row_b, a)) for a in range(len(schema))],
        "text": f"rows ({pair.row_a}, {pair.row_b}) match on {pair.match_count} attrs",
    }


def sweep_to_json(result: SweepResult) -> dict:
    return {
        "found": result.found,
        "p": result.p,
        "global_diameter": result.verdict.global_diameter if result.verdict else None,
        "diagnostic": result.diagnostic,
    }


def diff_to_json(diff: DiffRecord, schema: Sequence[str]) -> dict:
    return {
        "lost": [fd_to_json(fd, schema) for fd in diff.lost],
        "gained": [fd_to_json(fd, schema) for fd in diff.gained],
    }


def anomaly_state_to_json(state: AnomalyState) -> dict:
    doc: dict[str, Any] = {
        "canonical_fds": fdset_to_json(state.canonical_fds) if state.canonical_fds else None,
        "canonical_mfds": [
            {"lhs": list(s.lhs), "rhs": list(s.rhs), "metric": s.metric, "p": s.p}
            for s in state.canonical_mfds
        ],
        "history": [
            {
                "partition_id": entry.partition_id,
                "fds": fdset_to_json(entry.fds),
                "diff": diff_to_json(entry.diff, entry.fds.schema),
            }
            for entry in state.history
        ],
    }
    return doc


def anomaly_state_from_json(doc: dict) -> AnomalyState:
    def fdset(sub: dict) -> FDSet:
        return FDSet(
            fds=tuple(
                FD(lhs=tuple(f["lhs_indexes"]), rhs=f["rhs_index"]) for f in sub["fds"]
            ),
            schema=tuple(sub["schema"]),
            provenance=sub["provenance"],
        )

    history = []
    for entry in doc.get("history", []):
        schema = tuple(entry["fds"]["schema"])
        history.append(
            HistoryEntry(
                partition_id=entry["partition_id"],
                fds=fdset(entry["fds"]),
                diff=DiffRecord(
                    lost=tuple(
                        FD(lhs=tuple(f["lhs_indexes"]), rhs=f["rhs_index"])
                        for f in entry["diff"]["lost"]
                    ),
                    gained=tuple(
                        FD(lhs=tuple(f["lhs_indexes"]), rhs=f["rhs_index"])
                        for f in entry["diff"]["gained"]
                    ),
                ),
            )
        )
    return AnomalyState(
        canonical_fds=fdset(doc["canonical_fds"]) if doc.get("canonical_fds") else None,
        canonical_mfds=tuple(
            MFDStatement(lhs=tuple(s["lhs"]), rhs=tuple(s["rhs"]), metric=s["metric"], p=s["p"])
            for s in doc.get("canonical_mfds", [])
        ),
        history=tuple(history),
    )


def canonical_json_bytes(doc: Any) -> bytes:
    """Deterministic JSON encoding; identical docs yield identical bytes."""
    return (
        json.dumps(doc, sort_keys=True, indent=2, separators=(",", ": "), allow_nan=False)
        + "\n"
    ).encode("utf-8")


# -- human rendering ---------------------------------------------------------


def render_human(kind: str, doc: dict) -> str:
    """Plain-text rendering of a result document; pure in the document."""
    renderer = _RENDERERS.get(kind)
    if renderer is None:
        return json.dumps(doc, sort_keys=True, indent=2)
    return renderer(doc)


def _render_fdset(doc: dict) -> str:
    fds = doc.get("fds", [])
    if not fds:
        return "no dependencies found\n"
    lines = [f"{len(fds)} dependencies over {doc.get('provenance', '?')}:"]
    lines += [f"  {fd['text']}" for fd in fds]
    return "\n".join(lines) + "\n"


def _render_afds(doc: dict) -> str:
    afds = doc.get("afds", [])
    if not afds:
        return "no dependencies found\n"
    lines = [f"{len(afds)} approximate dependencies (threshold {doc.get('threshold')}):"]
    for afd in afds:
        error = afd["error"]
        lines.append(
            f"  {afd['text']}  [{error['numerator']}/{error['denominator']}]"
        )
    return "\n".join(lines) + "\n"


def _render_verdict(doc: dict) -> str:
    stmt = doc["statement"]
    head = (
        f"MFD [{', '.join(stmt['lhs'])}] -> [{', '.join(stmt['rhs'])}] "
        f"({stmt['metric']}, p={stmt['p']}): "
        + ("HOLDS" if doc["holds"] else "VIOLATED")
    )
    lines = [head, f"  global diameter: {doc['global_diameter']}"]
    for violation in doc["violating_clusters"]:
        lines.append("  " + violation["text"])
    return "\n".join(lines) + "\n"


def _render_typo(doc: dict) -> str:
    lines = [f"inspecting {doc['afd']['text']}"]
    shown = [c for c in doc["clusters"] if c["displayed"]]
    hidden = len(doc["clusters"]) - len(shown)
    for cluster in shown:
        central = cluster["central"]
        lines.append(f"  cluster rows {cluster['rows']}")
        lines.append(f"    central value: {central['value']!r} (x{central['count']})")
        for member in cluster["members"]:
            marker = "*" if member["value"] == central["value"] else " "
            lines.append(
                f"    {marker} row {member['row']}: {member['value']!r}"
                f" (distance {member['distance']})"
            )
        for fix in cluster["fixes"]:
            lines.append(
                f"    fix row {fix['row']}: {fix['current']!r} -> {fix['suggested']!r}"
            )
    if hidden:
        lines.append(f"  ({hidden} clusters hidden by radius/ratio filter)")
    if not shown:
        lines.append("  nothing to display at these settings")
    return "\n".join(lines) + "\n"


def _render_dedup(doc: dict) -> str:
    lines = [
        f"key candidate: {doc['chosen_key']['text']}",
        f"{len(doc['pairs'])} candidate pairs (window {doc['config']['window']}, k={doc['config']['k']}):",
    ]
    for pair in doc["pairs"]:
        lines.append(f"  {pair['text']}")
    if not doc["pairs"]:
        lines.append("  none")
    return "\n".join(lines) + "\n"


def _render_anomaly(doc: dict) -> str:
    lines = []
    for step in doc["partitions"]:
        lines.append(f"partition {step['partition_id']}: {step['fd_count']} FDs")
        diff = step["diff"]
        for fd in diff["lost"]:
            lines.append(f"  lost: {fd['text']}")
        for fd in diff["gained"]:
            lines.append(f"  gained: {fd['text']}")
        for probe in step.get("probes", []):
            lines.append(
                f"  probe {probe['fd']['text']}: g1={probe['g1']['decimal']:.6g}"
                + (
                    f", admitted at threshold {probe['first_holding']}"
                    if probe["first_holding"] is not None
                    else ", no listed threshold admits it"
                )
            )
            sweep = probe.get("sweep")
            if sweep:
                if sweep["found"]:
                    lines.append(f"  sweep: holds at p={sweep['p']}")
                else:
                    lines.append(f"  sweep: {sweep['diagnostic']}")
        lines.append(f"  accepted: {step['accepted']}")
    return "\n".join(lines) + "\n"


_RENDERERS = {
    "fd_discovery": _render_fdset,
    "afd_discovery": _render_afds,
    "mfd_validation": _render_verdict,
    "scenario_typo": _render_typo,
    "scenario_dedup": _render_dedup,
    "scenario_anomaly": _render_anomaly,
}
