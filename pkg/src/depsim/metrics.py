"""Offline metrics over a finished trace.

Everything here is recomputable from the JSONL trace alone (plus the
scenario for topology-aware fields), so a report can be regenerated
long after the run. Ground truth for suspicion accuracy comes from the
crash/recover entries in the same trace: a suspicion is true while its
peer is inside a crash window and false otherwise.
"""

from __future__ import annotations

from .scenario import Scenario


def _crash_windows(entries: list[dict]) -> dict[str, list[tuple[int, int | None]]]:
    windows: dict[str, list[tuple[int, int | None]]] = {}
    for e in entries:
        if e["kind"] == "crash":
            windows.setdefault(e["node"], []).append((e["t"], None))
        elif e["kind"] == "recover":
            spans = windows.get(e["node"])
            if spans and spans[-1][1] is None:
                spans[-1] = (spans[-1][0], e["t"])
    return windows


def _crashed_at(windows: dict[str, list[tuple[int, int | None]]], node: str, t: int) -> bool:
    for start, stop in windows.get(node, ()):
        if start <= t and (stop is None or t < stop):
            return True
    return False


def compute_metrics(entries: list[dict], scenario: Scenario | None = None, warmup: int | None = None) -> dict:
    if warmup is None:
        warmup = scenario.detector.t_bootstrap if scenario is not None else 0
    windows = _crash_windows(entries)
    topology = scenario.topology if scenario is not None else None

    counts: dict[str, int] = {}
    drops: dict[str, int] = {}
    susp_total = susp_true = susp_false = susp_false_late = 0
    refutes = rejoins = removals = 0
    inv_outcomes: dict[str, int] = {}
    latencies: list[int] = []
    plans_ok = plans_failed = 0
    notices_origin = notices_applied = notice_dups = notices_incomplete = 0
    audits_allow = audits_deny = 0
    crashes: list[dict] = []
    suspects_by_peer: dict[str, list[tuple[int, str]]] = {}
    views_by_peer: dict[str, list[int]] = {}

    for e in entries:
        kind = e["kind"]
        counts[kind] = counts.get(kind, 0) + 1
        detail = e["detail"]
        if kind == "drop":
            reason = detail.get("reason", "?")
            drops[reason] = drops.get(reason, 0) + 1
        elif kind == "crash":
            crashes.append(
                {
                    "node": e["node"],
                    "at": e["t"],
                    "recovered_at": None,
                    "first_suspect_at": None,
                    "last_member_suspect_at": None,
                    "member_suspectors": 0,
                    "members_silent": [],
                    "global_view_at": None,
                    "removed_by": 0,
                }
            )
        elif kind == "recover":
            for rec in reversed(crashes):
                if rec["node"] == e["node"] and rec["recovered_at"] is None:
                    rec["recovered_at"] = e["t"]
                    break
        elif kind == "suspect":
            susp_total += 1
            peer = detail["peer"]
            suspects_by_peer.setdefault(peer, []).append((e["t"], e["node"]))
            if _crashed_at(windows, peer, e["t"]):
                susp_true += 1
            else:
                susp_false += 1
                if e["t"] > warmup:
                    susp_false_late += 1
        elif kind == "refute":
            refutes += 1
            if detail.get("rejoin"):
                rejoins += 1
        elif kind == "remove":
            removals += 1
        elif kind == "global_view":
            views_by_peer.setdefault(detail["peer"], []).append(e["t"])
        elif kind == "invoke_done":
            outcome = detail["outcome"]
            inv_outcomes[outcome] = inv_outcomes.get(outcome, 0) + 1
            if outcome == "success":
                latencies.append(detail["latency"])
        elif kind == "plan_done":
            if detail["ok"]:
                plans_ok += 1
            else:
                plans_failed += 1
        elif kind == "notice_applied":
            if detail.get("origin"):
                notices_origin += 1
            else:
                notices_applied += 1
        elif kind == "notice_dup":
            notice_dups += 1
        elif kind == "propagation_incomplete":
            notices_incomplete += 1
        elif kind == "audit":
            if detail["decision"] == "allow":
                audits_allow += 1
            else:
                audits_deny += 1

    for rec in crashes:
        stop = rec["recovered_at"]
        in_window = [
            (t, node)
            for t, node in suspects_by_peer.get(rec["node"], ())
            if rec["at"] <= t and (stop is None or t < stop)
        ]
        if in_window:
            rec["first_suspect_at"] = min(t for t, _ in in_window)
        for t in views_by_peer.get(rec["node"], ()):
            if rec["at"] <= t and (stop is None or t < stop):
                rec["global_view_at"] = t
                break
        if topology is not None:
            members = topology.clusters[topology.cluster_of[rec["node"]]]
            suspectors = {node for _, node in in_window}
            member_times = [t for t, node in in_window if node in members]
            rec["member_suspectors"] = sum(1 for m in members if m in suspectors)
            rec["last_member_suspect_at"] = max(member_times) if member_times else None
            rec["members_silent"] = sorted(
                m
                for m in members
                if m != rec["node"] and m not in suspectors and not _crashed_at(windows, m, rec["at"])
            )
        rec["removed_by"] = 0

    if crashes:
        # removals attributed in a second pass so the per-crash dicts exist
        for e in entries:
            if e["kind"] != "remove":
                continue
            peer = e["detail"]["peer"]
            for rec in reversed(crashes):
                stop = rec["recovered_at"]
                if rec["node"] == peer and rec["at"] <= e["t"] and (stop is None or e["t"] < stop):
                    rec["removed_by"] += 1
                    break

    return {
        "scenario": scenario.name if scenario is not None else None,
        "ticks": entries[-1]["t"] if entries else 0,
        "events": len(entries),
        "messages": {
            "sends": counts.get("send", 0),
            "delivers": counts.get("deliver", 0),
            "drops": {k: drops[k] for k in sorted(drops)},
        },
        "suspicions": {
            "total": susp_total,
            "true": susp_true,
            "false": susp_false,
            "false_after_warmup": susp_false_late,
            "warmup": warmup,
            "refutes": refutes,
            "rejoins": rejoins,
            "removals": removals,
        },
        "crashes": crashes,
        "invocations": {
            "total": sum(inv_outcomes.values()),
            "success": inv_outcomes.get("success", 0),
            "no_quorum": inv_outcomes.get("no_quorum", 0),
            "all_failed": inv_outcomes.get("all_failed", 0),
            "latency_mean": round(sum(latencies) / len(latencies), 3) if latencies else None,
            "latency_max": max(latencies) if latencies else None,
        },
        "analysis": {
            "diagnoses": counts.get("diagnosis", 0),
            "predictions": counts.get("prediction", 0),
            "patterns_learned": counts.get("pattern_learned", 0),
            "records_dropped": counts.get("record_dropped", 0),
        },
        "repair": {
            "plans": counts.get("plan", 0),
            "ok": plans_ok,
            "failed": plans_failed,
            "alerts": counts.get("alert_operator", 0),
        },
        "notices": {
            "created": notices_origin,
            "applied": notices_applied,
            "dups": notice_dups,
            "incomplete": notices_incomplete,
        },
        "access": {
            "requests": counts.get("access", 0),
            "audits": counts.get("audit", 0),
            "allowed": audits_allow,
            "denied": audits_deny,
        },
        "module_errors": counts.get("module_error", 0),
    }
