"""Runtime deadlock detection on a deliberately cyclic dependency graph.

worker_a waits on the condition set by worker_b and vice versa.  The
validator refuses such a graph, but with the override the system boots
and both waiters block; the watchdog then aborts the run and reports
exactly who was stuck on what.

Run:
    python demos/demo_deadlock.py
"""

from pathlib import Path

from treeboot import (
    BootRefusedError,
    DeadlockError,
    VirtualClock,
    boot,
    parse_release,
    parse_release_graph,
)

DATA = Path(__file__).parent / "data"


def main():
    graph = parse_release_graph((DATA / "cycle2.rgraph").read_text())
    witness = graph.cycle_check()
    print("cycle witness:", " -> ".join(str(k) for k in witness + witness[:1]))

    release = parse_release((DATA / "cycle2.rel").read_text(), base_dir=DATA)

    print("\nboot without override:")
    try:
        boot(release, base_dir=DATA, clock=VirtualClock())
    except BootRefusedError as exc:
        print(" ", exc)

    print("\nboot with allow_cycles and a 500 ms watchdog:")
    try:
        boot(release, base_dir=DATA, clock=VirtualClock(),
             allow_cycles=True, deadlock_timeout_ms=500)
    except DeadlockError as exc:
        report = exc.report
        print(f"  deadlock after {report.elapsed_ms:.0f} virtual ms")
        for key, unmet in report.blocked:
            print(f"    {key} blocked on {', '.join(sorted(unmet))}")


if __name__ == "__main__":
    main()
