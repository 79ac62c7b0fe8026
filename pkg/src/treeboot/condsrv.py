"""The condition store: runtime coordination for dependency-gated startup.

Holds the boolean truth value of every declared condition (all false at
the start of a run, monotonically flipped to true), blocks starting
modules until their preconditions hold, and watches for runs that stop
making progress (deadlock).

Threading contract: any number of tasks may call ``set_condition`` and
``wait_for_conditions`` concurrently.  All state is guarded by the clock's
coordination lock; waiter release decisions (and their trace events) are
made atomically inside ``set_condition`` in registration order, so traces
are deterministic even though thread wake-up order is not.
"""

from __future__ import annotations

from dataclasses import dataclass

from .clock import Clock, WallClock
from .depgraph import DependencyGraph, ModuleKey
from .errors import DeadlockError
from .tracing import TraceSink

__all__ = ["WaitReport", "DeadlockReport", "ConditionStore", "DEFAULT_DEADLOCK_TIMEOUT_MS"]

DEFAULT_DEADLOCK_TIMEOUT_MS = 30_000.0


@dataclass(frozen=True)
class WaitReport:
    """Outcome of one wait_for_conditions call."""

    key: ModuleKey
    waited_ms: float
    conditions_waited_on: frozenset[str]


@dataclass(frozen=True)
class DeadlockReport:
    """Snapshot of a run that stopped making progress.

    ``blocked`` lists every waiter alive at detection time with the
    conditions it was still missing (sorted by module key for determinism);
    ``unset_conditions`` is the union of those missing conditions; all of
    them were false when the report was taken.
    """

    blocked: tuple[tuple[ModuleKey, frozenset[str]], ...]
    unset_conditions: frozenset[str]
    elapsed_ms: float

    def summary(self) -> str:
        keys = ", ".join(str(key) for key, _ in self.blocked)
        conds = ", ".join(sorted(self.unset_conditions))
        return (
            f"{len(self.blocked)} waiter(s) blocked [{keys}] "
            f"on unset conditions [{conds}] after {self.elapsed_ms:g} ms"
        )


class _Waiter:
    __slots__ = ("key", "node", "unmet", "initial_unmet", "seq", "registered_ms",
                 "report", "abort")

    def __init__(self, key, node, unmet, seq, registered_ms):
        self.key = key
        self.node = node
        self.unmet = unmet
        self.initial_unmet = frozenset(unmet)
        self.seq = seq
        self.registered_ms = registered_ms
        self.report: WaitReport | None = None
        self.abort: DeadlockReport | None = None


class ConditionStore:
    """Truth values plus blocking waits over a validated dependency graph."""

    def __init__(
        self,
        graph: DependencyGraph,
        *,
        deadlock_timeout_ms: float = DEFAULT_DEADLOCK_TIMEOUT_MS,
        clock: Clock | None = None,
        trace: TraceSink | None = None,
    ):
        graph.require_valid()
        if deadlock_timeout_ms <= 0:
            raise ValueError("deadlock_timeout_ms must be positive")
        self.graph = graph
        self.clock = clock if clock is not None else WallClock()
        self.trace = trace if trace is not None else TraceSink()
        self.deadlock_timeout_ms = deadlock_timeout_ms
        self._truth: dict[str, bool] = {name: False for _, name in graph.conditions}
        self._waiters: list[_Waiter] = []
        self._next_seq = 0
        self._last_progress_ms = self.clock.now()

    # -- observability ---------------------------------------------------

    def snapshot(self) -> dict[str, bool]:
        with self.clock.cond:
            return dict(self._truth)

    @property
    def blocked_count(self) -> int:
        with self.clock.cond:
            return len(self._waiters)

    # -- the two runtime entry points -------------------------------------

    def set_condition(self, module: str, args: str | None = None, *, node: str = "-") -> set[str]:
        """Flip every condition (module, args) satisfies; release waiters.

        Returns the set of conditions that transitioned false -> true.
        Idempotent; unknown modules are a no-op by design.
        """
        with self.clock.cond:
            now = self.clock.now()
            flipped = {
                name
                for name in self.graph.conditions_set_by(module, args)
                if not self._truth[name]
            }
            for name in sorted(flipped):
                self._truth[name] = True
                self.trace.emit(now, "condition_set", node,
                                condition=name, module=module, args=args)
            if flipped:
                self._last_progress_ms = now
                still_blocked: list[_Waiter] = []
                for waiter in sorted(self._waiters, key=lambda w: w.seq):
                    waiter.unmet -= flipped
                    if waiter.unmet:
                        still_blocked.append(waiter)
                    else:
                        self._release(waiter, now)
                self._waiters = still_blocked
                self.clock.notify_all()
            return flipped

    def wait_for_conditions(self, module: str, args: str | None = None, *, node: str = "-") -> WaitReport:
        """Block the calling task until all preconditions of (module, args)
        are true.  Immediate when there are none or all already hold.

        Raises :class:`DeadlockError` when the watchdog aborts the wait.
        """
        key = ModuleKey(module, args)
        with self.clock.cond:
            now = self.clock.now()
            needed = self.graph.expand_preconditions(key)
            unmet = {name for name in needed if not self._truth[name]}
            self.trace.emit(now, "wait_begin", node, module=module, args=args,
                            conditions=",".join(sorted(unmet)))
            if not unmet:
                self.trace.emit(now, "wait_end", node, module=module, args=args)
                return WaitReport(key, 0.0, frozenset())
            waiter = _Waiter(key, node, set(unmet), self._next_seq, now)
            self._next_seq += 1
            self._waiters.append(waiter)
            while True:
                deadline = max(waiter.registered_ms, self._last_progress_ms) + self.deadlock_timeout_ms
                self.clock.wait(lambda: waiter.report is not None or waiter.abort is not None,
                                deadline)
                if waiter.abort is not None:
                    raise DeadlockError(waiter.abort)
                if waiter.report is not None:
                    return waiter.report
                report = self._scan(self.clock.now())
                if report is not None:
                    raise DeadlockError(waiter.abort or report)

    # -- deadlock watchdog -------------------------------------------------

    def watchdog_scan(self) -> DeadlockReport | None:
        """Abort and report every blocked wait if some waiter has been
        stuck for a full timeout with no condition flip in that window."""
        with self.clock.cond:
            return self._scan(self.clock.now())

    def _scan(self, now: float) -> DeadlockReport | None:
        if not self._waiters:
            return None
        quiet_since = max(self._last_progress_ms,
                          min(w.registered_ms for w in self._waiters))
        if now - quiet_since < self.deadlock_timeout_ms:
            return None
        blocked = tuple(
            (w.key, frozenset(w.unmet))
            for w in sorted(self._waiters, key=lambda w: (w.key.module, w.key.args or ""))
        )
        unset = frozenset().union(*(missing for _, missing in blocked))
        report = DeadlockReport(blocked, unset, now - self._last_progress_ms)
        self.trace.emit(now, "deadlock", "-",
                        blocked=",".join(str(key) for key, _ in blocked))
        for waiter in self._waiters:
            waiter.abort = report
        self._waiters = []
        self.clock.notify_all()
        return report

    # -- internals -----------------------------------------------------------

    def _release(self, waiter: _Waiter, now: float) -> None:
        # Emitted here, under the lock and in registration order, so the
        # trace position of wait_end never depends on thread wake-up order.
        waiter.report = WaitReport(
            waiter.key,
            now - waiter.registered_ms,
            waiter.initial_unmet,
        )
        self.trace.emit(now, "wait_end", waiter.node,
                        module=waiter.key.module, args=waiter.key.args)
