"""Metrics reports: recomputable from the trace, with crash windows as
ground truth for suspicion accuracy."""

from conftest import base_scenario, details, kind, run

from depsim.metrics import compute_metrics


def entry(t, kind_, node, seq=0, **detail):
    return {"t": t, "seq": seq, "kind": kind_, "node": node, "detail": detail}


def test_empty_trace():
    rep = compute_metrics([])
    assert rep["events"] == 0 and rep["ticks"] == 0
    assert rep["messages"] == {"sends": 0, "delivers": 0, "drops": {}}
    assert rep["invocations"]["latency_mean"] is None


def test_suspicion_truth_against_crash_windows():
    trace = [
        entry(10, "crash", "b"),
        entry(40, "suspect", "a", peer="b", gap=30),  # true: b is down
        entry(60, "recover", "b"),
        entry(70, "suspect", "a", peer="b", gap=9),  # false: b is back
        entry(80, "refute", "a", peer="b", rejoin=True),
        entry(300, "suspect", "c", peer="d", gap=50),  # false, past warmup
    ]
    rep = compute_metrics(trace, warmup=100)
    s = rep["suspicions"]
    assert (s["total"], s["true"], s["false"]) == (3, 1, 2)
    assert s["false_after_warmup"] == 1
    assert s["rejoins"] == 1 and s["refutes"] == 1


def test_crash_records_detection_and_removal():
    trace = [
        entry(10, "crash", "b"),
        entry(42, "suspect", "a", peer="b", gap=30),
        entry(45, "suspect", "c", peer="b", gap=33),
        entry(50, "global_view", "a", peer="b", status="suspected"),
        entry(90, "remove", "a", peer="b"),
        entry(200, "recover", "b"),
        entry(300, "suspect", "a", peer="b", gap=99),  # outside the window
    ]
    rep = compute_metrics(trace, warmup=0)
    rec = rep["crashes"][0]
    assert rec["node"] == "b" and rec["at"] == 10 and rec["recovered_at"] == 200
    assert rec["first_suspect_at"] == 42
    assert rec["global_view_at"] == 50
    assert rec["removed_by"] == 1


def test_member_accounting_needs_topology():
    scn = base_scenario()
    trace = [
        entry(10, "crash", "b"),
        entry(40, "suspect", "a", peer="b", gap=30),
        entry(55, "suspect", "c", peer="b", gap=45),
    ]
    rep = compute_metrics(trace, scenario=scn)
    rec = rep["crashes"][0]
    assert rec["member_suspectors"] == 2
    assert rec["last_member_suspect_at"] == 55
    assert rec["members_silent"] == ["d"]  # a, c spoke; b is the crashed node


def test_drop_reasons_and_counts():
    trace = [
        entry(1, "send", "a", dst="b", msg="M", msg_id=1),
        entry(2, "deliver", "b", src="a", msg="M", msg_id=1, sent_at=1),
        entry(3, "drop", "b", reason="loss", src="a", msg="M", msg_id=2),
        entry(4, "drop", "b", reason="target_crashed", src="a", msg="M", msg_id=3),
        entry(5, "drop", "b", reason="loss", src="a", msg="M", msg_id=4),
    ]
    rep = compute_metrics(trace)
    assert rep["messages"] == {"sends": 1, "delivers": 1, "drops": {"loss": 2, "target_crashed": 1}}


def test_invocation_rollup():
    trace = [
        entry(5, "invoke_done", "a", invocation="i1", container="c", outcome="success", value="v", responders=["b"], latency=4),
        entry(9, "invoke_done", "a", invocation="i2", container="c", outcome="success", value="v", responders=["b"], latency=10),
        entry(12, "invoke_done", "a", invocation="i3", container="c", outcome="no_quorum", value=None, responders=[], latency=8),
        entry(20, "invoke_done", "a", invocation="i4", container="c", outcome="all_failed", value=None, responders=[], latency=0),
    ]
    inv = compute_metrics(trace)["invocations"]
    assert inv == {
        "total": 4,
        "success": 2,
        "no_quorum": 1,
        "all_failed": 1,
        "latency_mean": 7.0,
        "latency_max": 10,
    }


def test_notice_and_repair_rollup():
    trace = [
        entry(1, "plan", "a", plan="p1", subject="s", fault_class="F", actions=["x"]),
        entry(2, "plan_done", "a", plan="p1", ok=True),
        entry(3, "plan_done", "a", plan="p2", ok=False),
        entry(4, "alert_operator", "a", plan="p2", reason="r"),
        entry(5, "notice_applied", "a", notice="n1", origin=True),
        entry(6, "notice_applied", "b", notice="n1", origin=False),
        entry(7, "notice_dup", "c", notice="n1", src="a"),
        entry(8, "propagation_incomplete", "a", notice="n1", dst="d", retries=20),
    ]
    rep = compute_metrics(trace)
    assert rep["repair"] == {"plans": 1, "ok": 1, "failed": 1, "alerts": 1}
    assert rep["notices"] == {"created": 1, "applied": 1, "dups": 1, "incomplete": 1}


def test_access_rollup():
    trace = [
        entry(1, "access", "a", request="r1", subject="u", object="o", op="read"),
        entry(1, "audit", "a", request="r1", subject="u", object="o", op="read", decision="allow", reason="x", matched_rule="m", policy_version=1),
        entry(2, "access", "a", request="r2", subject="u", object="o", op="write"),
        entry(2, "audit", "a", request="r2", subject="u", object="o", op="write", decision="deny", reason="x", matched_rule="m", policy_version=1),
    ]
    rep = compute_metrics(trace)
    assert rep["access"] == {"requests": 2, "audits": 2, "allowed": 1, "denied": 1}


def test_warmup_defaults_to_detector_bootstrap():
    scn = base_scenario()  # t_bootstrap 50 in the shared fixture
    trace = [entry(30, "suspect", "a", peer="b", gap=20)]
    rep = compute_metrics(trace, scenario=scn)
    assert rep["suspicions"]["warmup"] == 50
    assert rep["suspicions"]["false"] == 1
    assert rep["suspicions"]["false_after_warmup"] == 0


def test_metrics_from_live_run():
    scn = base_scenario(
        faults=[{"kind": "crash", "node": "b", "at": 150}],
        workload={
            "invocations": [
                {"client": "a", "container": "store", "request": "get", "start": 10, "period": 20}
            ]
        },
    )
    r = run(scn)
    rep = compute_metrics(r.trace, scenario=scn)
    assert rep["scenario"] == "t"
    assert rep["events"] == len(r.trace)
    assert rep["messages"]["sends"] == len(kind(r.trace, "send"))
    assert rep["suspicions"]["false_after_warmup"] == 0
    rec = rep["crashes"][0]
    assert rec["node"] == "b" and rec["first_suspect_at"] is not None
    assert rec["members_silent"] == []
    assert rec["member_suspectors"] == 3
    assert rep["invocations"]["success"] == rep["invocations"]["total"]
    assert rep["module_errors"] == 0
