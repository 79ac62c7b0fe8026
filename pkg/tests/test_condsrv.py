"""Condition store: truth flips, blocking waits, watchdog, determinism."""

from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from treeboot import (
    ConditionStore,
    DeadlockError,
    DependencyGraph,
    GraphError,
    ModuleKey,
    VirtualClock,
)


def make_store(graph, timeout=500.0):
    clock = VirtualClock()
    return ConditionStore(graph, clock=clock, deadlock_timeout_ms=timeout), clock


# -- construction -----------------------------------------------------------


def test_new_store_all_false(two_app_graph):
    store, _ = make_store(two_app_graph)
    snap = store.snapshot()
    assert len(snap) == 4
    assert not any(snap.values())


def test_new_store_empty_graph_waits_return_immediately():
    store, _ = make_store(DependencyGraph())
    assert store.snapshot() == {}
    report = store.wait_for_conditions("anything", "[x]")
    assert report.waited_ms == 0.0
    assert report.conditions_waited_on == frozenset()


def test_new_store_rejects_invalid_graph():
    bad = DependencyGraph(preconditions=((ModuleKey("m"), ("missing",)),))
    with pytest.raises(GraphError):
        ConditionStore(bad)


def test_new_store_rejects_bad_timeout(two_app_graph):
    with pytest.raises(ValueError):
        ConditionStore(two_app_graph, deadlock_timeout_ms=0)


# -- set_condition ------------------------------------------------------------


def test_set_condition_flips_exact_match(two_app_graph):
    store, _ = make_store(two_app_graph)
    flipped = store.set_condition("generic_server", "[app1_server1]")
    assert flipped == {"cond_app1_server1"}
    assert store.snapshot()["cond_app1_server1"] is True


def test_set_condition_idempotent(two_app_graph):
    store, _ = make_store(two_app_graph)
    store.set_condition("generic_server", "[app1_server1]")
    before = store.snapshot()
    assert store.set_condition("generic_server", "[app1_server1]") == set()
    assert store.snapshot() == before


def test_set_condition_unknown_module_noop(two_app_graph):
    store, _ = make_store(two_app_graph)
    assert store.set_condition("unknown_mod", "[x]") == set()
    assert not any(store.snapshot().values())


def test_set_condition_wildcard_declaration_matches_any_args(two_app_graph):
    assert store_flip(two_app_graph, "app1_rootsup", "[a]") == {"cond_app1_rootsup"}
    assert store_flip(two_app_graph, "app1_rootsup", None) == {"cond_app1_rootsup"}


def store_flip(graph, module, args):
    store, _ = make_store(graph)
    return store.set_condition(module, args)


# -- snapshot ------------------------------------------------------------------


def test_snapshot_single_flip(two_app_graph):
    store, _ = make_store(two_app_graph)
    store.set_condition("app1_rootsup", "[x]")
    snap = store.snapshot()
    assert snap["cond_app1_rootsup"] is True
    assert sum(snap.values()) == 1


# -- wait_for_conditions --------------------------------------------------------


def test_wait_returns_immediately_when_satisfied(two_app_graph):
    store, _ = make_store(two_app_graph)
    store.set_condition("app1_rootsup", None)
    for n in (1, 2, 3):
        store.set_condition("generic_server", f"[app1_server{n}]")
    report = store.wait_for_conditions("generic_server", "[app2_server1]")
    assert report.waited_ms == 0.0
    assert report.conditions_waited_on == frozenset()


def test_wait_no_precondition_entry_returns_immediately(two_app_graph):
    store, _ = make_store(two_app_graph)
    report = store.wait_for_conditions("app1_rootsup", "[x]")
    assert report.waited_ms == 0.0
    assert report.conditions_waited_on == frozenset()


def test_wait_releases_exactly_after_last_distinct_flip(two_app_graph):
    store, clock = make_store(two_app_graph)
    outcome = {}

    def waiter():
        outcome["report"] = store.wait_for_conditions(
            "generic_server", "[app2_server1]", node="w")

    with clock.attached():
        t = clock.spawn(waiter, "w")
        flips = [
            ("app1_rootsup", None),
            ("generic_server", "[app1_server1]"),
            ("generic_server", "[app1_server1]"),  # repeat: no progress
            ("generic_server", "[app1_server2]"),
            ("generic_server", "[app1_server3]"),
        ]
        for i, (module, args) in enumerate(flips):
            clock.sleep(10)
            store.set_condition(module, args)
            with clock.cond:
                released = store.blocked_count == 0
            # released only once the fourth distinct condition flipped
            assert released == (i == len(flips) - 1), f"after flip {i}"
    t.join(5)
    report = outcome["report"]
    assert report.conditions_waited_on == {
        "cond_app1_rootsup", "cond_app1_server1",
        "cond_app1_server2", "cond_app1_server3",
    }
    assert report.waited_ms == 50.0  # registered at 0, released at the 5th step


def test_waiters_released_in_registration_order(two_app_graph):
    store, clock = make_store(two_app_graph)

    def waiter(name):
        store.wait_for_conditions("generic_server", "[app2_server1]", node=name)

    with clock.attached():
        first = clock.spawn(lambda: waiter("first"), "first")
        # deterministic registration order: wait until the first is parked
        with clock.cond:
            clock.wait(lambda: store.blocked_count == 1, deadline=100)
        second = clock.spawn(lambda: waiter("second"), "second")
        with clock.cond:
            clock.wait(lambda: store.blocked_count == 2, deadline=100)
        store.set_condition("app1_rootsup", None)
        for n in (1, 2, 3):
            store.set_condition("generic_server", f"[app1_server{n}]")
    first.join(5)
    second.join(5)
    ends = [e for e in store.trace.events if e.kind == "wait_end"]
    assert [e.node for e in ends] == ["first", "second"]


# -- watchdog ---------------------------------------------------------------------


def test_watchdog_reports_two_cycle(cycle_graph):
    store, clock = make_store(cycle_graph, timeout=500.0)
    failures = []

    def waiter(module, args):
        try:
            store.wait_for_conditions(module, args, node=module)
        except DeadlockError as exc:
            failures.append(exc.report)

    with clock.attached():
        t1 = clock.spawn(lambda: waiter("worker_a", "[x]"), "a")
        t2 = clock.spawn(lambda: waiter("worker_b", "[y]"), "b")
    t1.join(5)
    t2.join(5)
    assert len(failures) == 2
    report = failures[0]
    assert failures[1] is report  # one shared report
    assert clock.now() == 500.0
    assert report.elapsed_ms == 500.0
    assert report.blocked == (
        (ModuleKey("worker_a", "[x]"), frozenset({"cond_b"})),
        (ModuleKey("worker_b", "[y]"), frozenset({"cond_a"})),
    )
    assert report.unset_conditions == {"cond_a", "cond_b"}
    # every reported-unmet condition is false in the store
    snap = store.snapshot()
    assert all(not snap[c] for c in report.unset_conditions)
    assert any(e.kind == "deadlock" for e in store.trace.events)


def test_watchdog_scan_no_waiters(two_app_graph):
    store, _ = make_store(two_app_graph)
    assert store.watchdog_scan() is None


def test_watchdog_quiet_window_extends_on_progress(two_app_graph):
    # flips keep arriving within the timeout, so the watchdog never fires
    store, clock = make_store(two_app_graph, timeout=100.0)
    outcome = {}

    def waiter():
        outcome["report"] = store.wait_for_conditions(
            "generic_server", "[app2_server1]", node="w")

    with clock.attached():
        t = clock.spawn(waiter, "w")
        for module, args in (
            ("app1_rootsup", None),
            ("generic_server", "[app1_server1]"),
            ("generic_server", "[app1_server2]"),
            ("generic_server", "[app1_server3]"),
        ):
            clock.sleep(80)  # below the 100 ms timeout, but 4 x 80 > timeout
            store.set_condition(module, args)
    t.join(5)
    assert outcome["report"].waited_ms == 320.0
    assert not any(e.kind == "deadlock" for e in store.trace.events)


# -- monotonicity property ---------------------------------------------------------


_module = st.sampled_from(["app1_rootsup", "generic_server", "nobody"])
_args = st.sampled_from([None, "[app1_server1]", "[app1_server2]",
                         "[app1_server3]", "[app2_server1]", "[zzz]"])


@given(st.lists(st.tuples(_module, _args), max_size=25))
@settings(max_examples=50)
def test_snapshot_monotone_under_any_set_sequence(ops):
    """Later snapshots are pointwise >= earlier ones; flips are exactly
    the false->true transitions."""
    from conftest import TWO_APP_GRAPH
    from treeboot import parse_release_graph

    store, _ = make_store(parse_release_graph(TWO_APP_GRAPH))
    previous = store.snapshot()
    for module, args in ops:
        flipped = store.set_condition(module, args)
        current = store.snapshot()
        for name in current:
            assert current[name] >= previous[name]
            if name in flipped:
                assert not previous[name] and current[name]
        previous = current
