"""Supervision-tree runtime with dependency-gated, optionally concurrent starts.

Supervisors start their children strictly in order, each child
acknowledging (ack) once its startup finished.  A child tagged
``concurrent`` is started through a *wrapper* supervisor instead: the
wrapper acks its parent immediately, hands the real start to a one-shot
starter task, and later *attaches* the started child.  Crashes of the
attached child terminate the wrapper (restart budget zero), so the
original parent's restart policy still applies to the slot — the tree
shape and the restart semantics survive parallelization.

Every worker and supervisor start is bracketed by the condition store:
wait for preconditions immediately before init, publish the completed
conditions immediately after.

Threading model: sequential children run inline in their supervisor's
thread (a blocked sequential child blocks the whole chain, by design);
a new thread exists only per fork point.  All shared state is guarded by
the clock's coordination lock.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .condsrv import ConditionStore
from .clock import VirtualClock
from .depgraph import DependencyGraph, ModuleKey
from .errors import DeadlockError, QuiescenceTimeout, StartupError, TreeError
from .tracing import TraceEvent

__all__ = [
    "InitModel",
    "SupervisorFlags",
    "ChildSpec",
    "Node",
    "Runtime",
    "StartupReport",
    "CrashOutcome",
    "Violation",
    "start_supervisor",
    "run_worker_lifecycle",
    "await_quiescence",
    "inject_crash",
    "wrap_concurrent",
    "check_trace",
    "parse_tree",
    "serialize_tree",
]

WRAPPER_SUFFIX = "#wrap"


@dataclass(frozen=True)
class InitModel:
    """Simulated (or user-supplied) init work for a node.

    kinds: ``none`` (free), ``sleep`` (timed, non-CPU-bound), ``busy``
    (timed CPU burn that releases the interpreter lock, so lanes really
    compete for cores), ``fail`` (always raises), ``call`` (run ``fn``).
    """

    kind: str = "none"
    duration_ms: float = 0.0
    fn: Callable[[str | None], None] | None = None

    @staticmethod
    def sleep(duration_ms: float) -> "InitModel":
        return InitModel("sleep", duration_ms)

    @staticmethod
    def busy(duration_ms: float) -> "InitModel":
        return InitModel("busy", duration_ms)

    @staticmethod
    def call(fn: Callable[[str | None], None]) -> "InitModel":
        return InitModel("call", 0.0, fn)

    @staticmethod
    def failing() -> "InitModel":
        return InitModel("fail")


@dataclass(frozen=True)
class SupervisorFlags:
    strategy: str = "one_for_one"
    max_restarts: int = 3
    max_seconds: float = 5.0

    def __post_init__(self):
        if self.strategy != "one_for_one":
            raise ValueError(f"unsupported strategy {self.strategy!r}")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be >= 0")
        if self.max_seconds <= 0:
            raise ValueError("max_seconds must be > 0")


WRAPPER_FLAGS = SupervisorFlags("one_for_one", 0, 1.0)


@dataclass(frozen=True)
class ChildSpec:
    """Extended child specification.

    ``start_mode`` distinguishes a plain sequential start from a
    concurrent (fork point) start; it defaults to sequential so original
    seven-field specifications keep their meaning.
    """

    id: str
    module: str
    args: str | None = None
    restart: str = "permanent"  # permanent | temporary
    shutdown: float | str = "brutal"
    kind: str = "worker"  # worker | supervisor
    modules: tuple[str, ...] = ()
    start_mode: str = "sequential"  # sequential | concurrent
    init: InitModel = field(default_factory=InitModel)
    flags: SupervisorFlags = field(default_factory=SupervisorFlags)
    children: tuple["ChildSpec", ...] = ()

    def __post_init__(self):
        if self.kind not in ("worker", "supervisor"):
            raise ValueError(f"bad child kind {self.kind!r}")
        if self.start_mode not in ("sequential", "concurrent"):
            raise ValueError(f"bad start_mode {self.start_mode!r}")
        if self.restart not in ("permanent", "temporary"):
            raise ValueError(f"bad restart {self.restart!r}")
        if self.kind == "worker" and self.children:
            raise ValueError(f"worker {self.id!r} cannot have children")
        seen = set()
        for child in self.children:
            if child.id in seen:
                raise ValueError(f"duplicate child id {child.id!r} under {self.id!r}")
            seen.add(child.id)

    def key(self) -> ModuleKey:
        return ModuleKey(self.module, self.args)

    def iter_nodes(self) -> Iterable["ChildSpec"]:
        yield self
        for child in self.children:
            yield from child.iter_nodes()


class Node:
    """A live supervision-tree node (worker, supervisor, or wrapper)."""

    __slots__ = ("path", "spec", "kind", "state", "parent", "children",
                 "flags", "restart_times", "_runtime")

    def __init__(self, path, spec, kind, parent, flags, runtime):
        self.path = path
        self.spec = spec
        self.kind = kind  # worker | supervisor | wrapper
        self.state = "starting"  # starting | running | terminated
        self.parent = parent
        self.children: list[Node] = []
        self.flags = flags
        self.restart_times: list[float] = []
        self._runtime = runtime

    def find(self, path: str) -> "Node | None":
        if self.path == path:
            return self
        for child in self.children:
            found = child.find(path)
            if found is not None:
                return found
        return None

    def shape(self):
        """Nested (id-ish, kind, children) tuples of live nodes."""
        name = self.path.rsplit("/", 1)[-1]
        return (name, self.kind,
                tuple(c.shape() for c in self.children if c.state != "terminated"))

    def __repr__(self):
        return f"<Node {self.path} {self.kind} {self.state}>"


@dataclass(frozen=True)
class StartupReport:
    duration_ms: float
    node_count: int
    wrapper_count: int


@dataclass(frozen=True)
class CrashOutcome:
    """Decision cascade after a crash: (supervisor path, decision) hops,
    innermost supervisor first."""

    hops: tuple[tuple[str, str], ...] = ()

    @property
    def final(self) -> str:
        return self.hops[-1][1] if self.hops else "noop"


class _StartFailure(Exception):
    """Internal: a child (or subtree) start failed after exhausting the
    supervising budget; escalates one level per raise."""

    def __init__(self, node_path: str):
        self.node_path = node_path
        super().__init__(node_path)


_BUSY_CHUNK = b"\x00" * (128 * 1024)


def busy_spin_ms(duration_ms: float) -> None:
    """Burn ``duration_ms`` of this thread's CPU time.

    Measured with the per-thread CPU clock, so contention stretches the
    wall time but never shrinks the work.  Hashing large buffers drops the
    interpreter lock, so concurrent lanes genuinely occupy multiple cores.
    """
    digest = hashlib.sha256()
    deadline = time.thread_time() + duration_ms / 1000.0
    while time.thread_time() < deadline:
        digest.update(_BUSY_CHUNK)


class Runtime:
    """Executes supervision trees against a condition store.

    One Runtime per run.  ``force_sequential`` downgrades every concurrent
    tag (the baseline measurement configuration).
    """

    def __init__(self, store: ConditionStore, *, force_sequential: bool = False):
        self.store = store
        self.clock = store.clock
        self.trace = store.trace
        self.force_sequential = force_sequential
        self.roots: list[Node] = []
        self._outstanding = 0  # concurrent starts not yet attached/failed
        self._failure: BaseException | None = None
        self._acked_paths: set[str] = set()
        self._wrapper_count = 0
        self._t0: float | None = None
        self._last_done_ms = 0.0

    # -- public surface ---------------------------------------------------

    def start_supervisor(self, flags: SupervisorFlags, children: tuple[ChildSpec, ...],
                         *, path: str = "root", module: str | None = None,
                         args: str | None = None) -> Node:
        spec = ChildSpec(
            id=path.rsplit("/", 1)[-1], module=module or path, args=args,
            kind="supervisor", flags=flags, children=tuple(children),
        )
        return self.start_tree(spec, path=path)

    def start_tree(self, spec: ChildSpec, *, path: str | None = None) -> Node:
        """Start a root node; blocks until it acked.  Raises StartupError
        when its start fails, DeadlockError when a wait was aborted."""
        full_path = path if path is not None else spec.id
        with self.clock.attached():
            node = Node(full_path, spec, self._node_kind(spec), None,
                        spec.flags if spec.kind == "supervisor" else None, self)
            with self.clock.cond:
                self.roots.append(node)
            self._emit("start_request", full_path)
            try:
                ok = self._run_lifecycle(node, spec)
            except _StartFailure as exc:
                raise StartupError(
                    f"root {full_path} failed to start", exc.node_path) from None
            if not ok:
                raise StartupError(f"root {full_path} failed to start", full_path)
            return node

    def await_quiescence(self, timeout_ms: float | None = None) -> StartupReport:
        """Block until every node acked and every concurrent attach
        finished; returns the startup timing report."""
        with self.clock.attached():
            with self.clock.cond:
                deadline = None if timeout_ms is None else self.clock.now() + timeout_ms
                done = self.clock.wait(
                    lambda: self._outstanding == 0 or self._failure is not None,
                    deadline,
                )
                if self._failure is not None:
                    raise self._failure
                if not done:
                    raise QuiescenceTimeout(
                        f"startup incomplete after {timeout_ms:g} ms: "
                        f"{len(self._acked_paths)} node(s) acked, "
                        f"{self._outstanding} concurrent start(s) outstanding",
                        len(self._acked_paths), self._outstanding,
                    )
                t0 = self._t0 if self._t0 is not None else 0.0
                declared = {p for p in self._acked_paths if not p.endswith(WRAPPER_SUFFIX)}
                return StartupReport(self._last_done_ms - t0, len(declared),
                                     self._wrapper_count)

    def inject_crash(self, node: Node) -> CrashOutcome:
        """Terminate a running node and let its supervisor react."""
        with self.clock.attached():
            with self.clock.cond:
                if node.state == "terminated":
                    return CrashOutcome()
                self._emit("crash", node.path, reason="injected")
                self._terminate_subtree(node, emit_self=False)
            hops: list[tuple[str, str]] = []
            if node.parent is not None:
                self._handle_child_exit(node.parent, node, hops)
            else:
                with self.clock.cond:
                    self._fail(StartupError(f"root {node.path} crashed", node.path))
            return CrashOutcome(tuple(hops))

    # -- lifecycle ----------------------------------------------------------

    def _node_kind(self, spec: ChildSpec) -> str:
        return "supervisor" if spec.kind == "supervisor" else "worker"

    def _run_lifecycle(self, node: Node, spec: ChildSpec) -> bool:
        """wait -> init -> publish conditions -> (children) -> ack."""
        self.store.wait_for_conditions(spec.module, spec.args, node=node.path)
        self._emit("init_begin", node.path, module=spec.module, args=spec.args)
        try:
            self._run_init(spec.init, spec.args)
        except Exception as exc:
            with self.clock.cond:
                self._emit("crash", node.path,
                           reason=f"init-failure:{type(exc).__name__}")
                node.state = "terminated"
            return False
        self._emit("init_end", node.path, module=spec.module, args=spec.args)
        self.store.set_condition(spec.module, spec.args, node=node.path)
        if spec.kind == "supervisor":
            for child_spec in spec.children:
                self._start_child_slot(node, child_spec)
        with self.clock.cond:
            node.state = "running"
            self._ack(node.path)
        return True

    def _run_init(self, init: InitModel, args: str | None) -> None:
        if init.kind == "none":
            return
        if init.kind == "sleep":
            self.clock.sleep(init.duration_ms)
        elif init.kind == "busy":
            if isinstance(self.clock, VirtualClock):
                self.clock.sleep(init.duration_ms)  # simulated burn
            else:
                busy_spin_ms(init.duration_ms)
        elif init.kind == "fail":
            raise RuntimeError("simulated init failure")
        elif init.kind == "call":
            init.fn(args)
        else:
            raise ValueError(f"unknown init kind {init.kind!r}")

    def _start_child_slot(self, parent: Node, spec: ChildSpec) -> Node | None:
        """Start one child slot; sequential slots retry against the
        parent's restart budget, exhaustion escalates."""
        mode = "sequential" if self.force_sequential else spec.start_mode
        if mode == "concurrent":
            return self.wrap_concurrent(parent, spec)
        child_path = f"{parent.path}/{spec.id}"
        while True:
            node = Node(child_path, spec, self._node_kind(spec), parent,
                        spec.flags if spec.kind == "supervisor" else None, self)
            with self.clock.cond:
                parent.children.append(node)
            self._emit("start_request", child_path)
            try:
                ok = self._run_lifecycle(node, spec)
            except _StartFailure:
                ok = False
            if ok:
                return node
            with self.clock.cond:
                parent.children.remove(node)
                retry = self._allow_restart(parent)
                if not retry:
                    self._terminate_supervisor(parent, reason="child-start-failure")
            if not retry:
                raise _StartFailure(parent.path)

    def wrap_concurrent(self, parent: Node, spec: ChildSpec) -> Node:
        """Insert the wrapper: ack the parent now, start the child in a
        detached one-shot starter task, attach on completion."""
        child_path = f"{parent.path}/{spec.id}"
        wrapper_path = child_path + WRAPPER_SUFFIX
        wrapper = Node(wrapper_path, spec, "wrapper", parent, WRAPPER_FLAGS, self)
        with self.clock.cond:
            parent.children.append(wrapper)
            self._outstanding += 1
            self._wrapper_count += 1
        self._emit("start_request", wrapper_path)
        with self.clock.cond:
            wrapper.state = "running"
            self._ack(wrapper_path)

        def starter():
            try:
                self._run_concurrent_start(wrapper, spec, child_path)
            except DeadlockError as exc:
                with self.clock.cond:
                    if wrapper.state != "terminated":
                        wrapper.state = "terminated"
                        self._emit("terminate", wrapper_path, reason="deadlock")
                    self._fail(exc)
            except BaseException as exc:  # defensive: surface, never hang
                with self.clock.cond:
                    self._fail(exc)
            finally:
                with self.clock.cond:
                    self._outstanding -= 1
                    self.clock.notify_all()

        self.clock.spawn(starter, name=f"starter:{child_path}")
        return wrapper

    def _run_concurrent_start(self, wrapper: Node, spec: ChildSpec, child_path: str):
        node = Node(child_path, spec, self._node_kind(spec), wrapper,
                    spec.flags if spec.kind == "supervisor" else None, self)
        self._emit("start_request", child_path)
        try:
            ok = self._run_lifecycle(node, spec)
        except _StartFailure:
            ok = False
        if ok:
            with self.clock.cond:
                wrapper.children.append(node)
                self._emit("attach", wrapper.path, child=child_path)
                self._last_done_ms = max(self._last_done_ms, self.clock.now())
            return
        # Start failed: the wrapper's zero budget terminates it and the
        # slot's fate goes back to the original parent.
        with self.clock.cond:
            wrapper.state = "terminated"
            self._emit("terminate", wrapper.path, reason="child-start-failure")
        hops: list[tuple[str, str]] = []
        if wrapper.parent is not None:
            self._handle_child_exit(wrapper.parent, wrapper, hops)

    # -- crash handling -------------------------------------------------------

    def _handle_child_exit(self, sup: Node, child: Node, hops: list) -> None:
        restart_spec: ChildSpec | None = None
        with self.clock.cond:
            if sup.state == "terminated":
                return
            if child in sup.children:
                sup.children.remove(child)
            spec = child.spec
            if spec.restart == "temporary" and child.kind != "wrapper":
                hops.append((sup.path, "removed"))
                return
            if self._allow_restart(sup):
                hops.append((sup.path, "restarted"))
                restart_spec = spec
            else:
                hops.append((sup.path, "escalated"))
                self._terminate_supervisor(sup, reason="restart-budget-exhausted")
        if restart_spec is not None:
            self._restart_slot(sup, restart_spec)
            return
        if sup.parent is not None:
            self._handle_child_exit(sup.parent, sup, hops)
        else:
            with self.clock.cond:
                self._fail(StartupError(f"root {sup.path} terminated", sup.path))

    def _restart_slot(self, sup: Node, spec: ChildSpec) -> None:
        mode = "sequential" if self.force_sequential else spec.start_mode
        if mode == "concurrent":
            self.wrap_concurrent(sup, spec)
            return
        child_path = f"{sup.path}/{spec.id}"
        node = Node(child_path, spec, self._node_kind(spec), sup,
                    spec.flags if spec.kind == "supervisor" else None, self)
        with self.clock.cond:
            sup.children.append(node)
        self._emit("start_request", child_path)
        try:
            ok = self._run_lifecycle(node, spec)
        except _StartFailure:
            ok = False
        if not ok:
            with self.clock.cond:
                if node in sup.children:
                    sup.children.remove(node)
            hops: list[tuple[str, str]] = []
            self._handle_child_exit(sup, node, hops)

    def _allow_restart(self, sup: Node) -> bool:
        # Budget: at most max_restarts restarts per max_seconds window.
        if sup.flags is None:
            return False
        now = self.clock.now()
        window = sup.flags.max_seconds * 1000.0
        sup.restart_times = [t for t in sup.restart_times if now - t < window]
        if len(sup.restart_times) < sup.flags.max_restarts:
            sup.restart_times.append(now)
            return True
        return False

    def _terminate_supervisor(self, sup: Node, *, reason: str) -> None:
        self._terminate_subtree(sup, emit_self=True, reason=reason)

    def _terminate_subtree(self, node: Node, *, emit_self: bool, reason: str = "killed") -> None:
        for child in list(node.children):
            if child.state != "terminated":
                self._terminate_subtree(child, emit_self=True, reason="parent-terminated")
        if node.state != "terminated":
            node.state = "terminated"
            if emit_self:
                self._emit("terminate", node.path, reason=reason)

    # -- bookkeeping ------------------------------------------------------------

    def _fail(self, exc: BaseException) -> None:
        if self._failure is None:
            self._failure = exc
        self.clock.notify_all()

    def _ack(self, path: str) -> None:
        event = self._emit("ack", path)
        self._acked_paths.add(path)
        self._last_done_ms = max(self._last_done_ms, event.ts)

    def _emit(self, kind: str, node: str, **detail) -> TraceEvent:
        event = self.trace.emit(self.clock.now(), kind, node, **detail)
        if kind == "start_request" and self._t0 is None:
            self._t0 = event.ts
        return event


# -- operation-style entry points ------------------------------------------


def start_supervisor(flags: SupervisorFlags, children, store: ConditionStore,
                     *, path: str = "root", module: str | None = None,
                     args: str | None = None, force_sequential: bool = False) -> Node:
    """Start a supervisor with the given children; returns after its ack."""
    runtime = Runtime(store, force_sequential=force_sequential)
    return runtime.start_supervisor(flags, tuple(children), path=path,
                                    module=module, args=args)


def run_worker_lifecycle(spec: ChildSpec, store: ConditionStore,
                         *, path: str | None = None) -> bool:
    """Run a single worker's start: wait, init, publish, ack.

    True on ack; False when the init failed (crash traced, no conditions
    published).  A watchdog abort raises :class:`DeadlockError`.
    """
    runtime = Runtime(store)
    node_path = path if path is not None else spec.id
    with runtime.clock.attached():
        node = Node(node_path, spec, "worker", None, None, runtime)
        runtime._emit("start_request", node_path)
        return runtime._run_lifecycle(node, spec)


def await_quiescence(root: Node, timeout_ms: float | None = None) -> StartupReport:
    return root._runtime.await_quiescence(timeout_ms)


def inject_crash(node: Node) -> CrashOutcome:
    return node._runtime.inject_crash(node)


def wrap_concurrent(parent: Node, spec: ChildSpec) -> Node:
    """Start a concurrent-tagged child of a running supervisor through a
    wrapper; returns the wrapper, which has already acked."""
    if spec.start_mode != "concurrent":
        raise ValueError(f"child {spec.id!r} is not tagged concurrent")
    return parent._runtime.wrap_concurrent(parent, spec)


# -- trace checking -----------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    seqs: tuple[int, ...] = ()

    def render(self) -> str:
        refs = f" (events {', '.join(map(str, self.seqs))})" if self.seqs else ""
        return f"{self.code}: {self.message}{refs}"


class _NodeInfo:
    __slots__ = ("path", "spec", "parent", "slot_index", "depth")

    def __init__(self, path, spec, parent, slot_index, depth):
        self.path = path
        self.spec = spec
        self.parent = parent
        self.slot_index = slot_index
        self.depth = depth


def _walk_declared(tree) -> dict[str, _NodeInfo]:
    """Flatten a root spec or [(prefix, root spec)] forest into path->info."""
    if isinstance(tree, ChildSpec):
        forest = [("", tree)]
    else:
        forest = [(prefix, spec) for prefix, spec in tree]
    table: dict[str, _NodeInfo] = {}

    def visit(spec: ChildSpec, path: str, parent: str | None, slot: int, depth: int):
        table[path] = _NodeInfo(path, spec, parent, slot, depth)
        for index, child in enumerate(spec.children):
            visit(child, f"{path}/{child.id}", path, index, depth + 1)

    for prefix, root in forest:
        root_path = f"{prefix}/{root.id}" if prefix else root.id
        visit(root, root_path, None, 0, 0)
    return table


_LIFECYCLE_ORDER = ("start_request", "wait_begin", "wait_end",
                    "init_begin", "init_end", "condition_set", "ack")


def check_trace(events: list[TraceEvent], graph: DependencyGraph, tree) -> list[Violation]:
    """Verify one run's trace against the declared tree and graph.

    Empty list means every checked rule holds: per-node lifecycle
    bracketing, precondition safety, sibling start ordering, wrapper
    non-blocking, structure preservation, and crash escalation through
    wrappers.  ``tree`` is a root ChildSpec or a list of (prefix, root)
    pairs for multi-application traces.
    """
    declared = _walk_declared(tree)
    events = sorted(events, key=lambda e: e.seq)
    violations: list[Violation] = []

    wrappers_present = any(e.node.endswith(WRAPPER_SUFFIX) for e in events)

    def effective_concurrent(info: _NodeInfo) -> bool:
        return wrappers_present and info.spec.start_mode == "concurrent" \
            and info.parent is not None

    expected_paths = set(declared)
    wrapper_of: dict[str, str] = {}
    for path, info in declared.items():
        if effective_concurrent(info):
            wrapper_of[path] = path + WRAPPER_SUFFIX
            expected_paths.add(path + WRAPPER_SUFFIX)

    # first occurrence of each (node, kind); first condition_set per condition
    first: dict[tuple[str, str], TraceEvent] = {}
    first_set: dict[str, TraceEvent] = {}
    for event in events:
        first.setdefault((event.node, event.kind), event)
        if event.kind == "condition_set":
            name = event.get("condition")
            if name is not None and name not in first_set:
                first_set[name] = event

    if not events and declared:
        return [Violation("missing-events", "trace is empty but the tree declares nodes")]

    # structure: only expected nodes may appear
    seen_nodes = {e.node for e in events if e.node != "-"}
    for node in sorted(seen_nodes - expected_paths):
        violations.append(Violation("structure-mismatch",
                                    f"trace mentions undeclared node {node}"))

    # per-node lifecycle bracketing (first occurrences, seq order)
    for path in sorted(expected_paths):
        chain = [first[(path, kind)] for kind in _LIFECYCLE_ORDER if (path, kind) in first]
        for left, right in zip(chain, chain[1:]):
            if left.seq > right.seq:
                code = "event-order"
                if left.kind == "wait_end" and right.kind == "init_begin":
                    code = "wait-before-init"
                if left.kind == "init_end" and right.kind == "condition_set":
                    code = "set-after-init"
                violations.append(Violation(
                    code,
                    f"{path}: {right.kind} precedes {left.kind}",
                    (right.seq, left.seq),
                ))
        if (path, "ack") not in first:
            violations.append(Violation("missing-events", f"{path} never acked"))

    # precondition safety: every needed condition set before init_begin
    for path, info in sorted(declared.items()):
        needed = graph.expand_preconditions(info.spec.key())
        if not needed:
            continue
        init_begin = first.get((path, "init_begin"))
        if init_begin is None:
            continue
        for name in sorted(needed):
            setter = first_set.get(name)
            if setter is None:
                violations.append(Violation(
                    "unsatisfied-precondition",
                    f"{path} ran init but condition {name} was never set",
                    (init_begin.seq,)))
            elif setter.seq > init_begin.seq:
                violations.append(Violation(
                    "unsatisfied-precondition",
                    f"{path} ran init before condition {name} was set",
                    (init_begin.seq, setter.seq)))

    # sibling order: ack of slot i precedes start_request of slot i+1
    for path, info in sorted(declared.items()):
        if info.spec.kind != "supervisor":
            continue
        slots = []
        for child in info.spec.children:
            child_path = f"{path}/{child.id}"
            slots.append(wrapper_of.get(child_path, child_path))
        for left_path, right_path in zip(slots, slots[1:]):
            left_ack = first.get((left_path, "ack"))
            right_req = first.get((right_path, "start_request"))
            if left_ack and right_req and left_ack.seq > right_req.seq:
                violations.append(Violation(
                    "sequential-order",
                    f"{right_path} was requested before sibling {left_path} acked",
                    (right_req.seq, left_ack.seq)))

    # wrapper rules: immediate ack, attach present, crash escalation
    for child_path, wrapper_path in sorted(wrapper_of.items()):
        info = declared[child_path]
        wrapper_ack = first.get((wrapper_path, "ack"))
        child_init_end = first.get((child_path, "init_end"))
        if (info.spec.init.duration_ms > 0 and wrapper_ack and child_init_end
                and wrapper_ack.seq > child_init_end.seq):
            violations.append(Violation(
                "wrapper-blocked",
                f"{wrapper_path} acked only after {child_path} finished init",
                (wrapper_ack.seq, child_init_end.seq)))
        attach = first.get((wrapper_path, "attach"))
        child_crash = first.get((child_path, "crash"))
        if attach is None and child_crash is None:
            violations.append(Violation(
                "missing-attach",
                f"{wrapper_path} never attached {child_path}"))
        if attach is not None and child_crash is not None \
                and child_crash.seq > attach.seq:
            terminated = any(
                e.kind == "terminate" and e.node == wrapper_path
                and e.seq > child_crash.seq
                for e in events
            )
            if not terminated:
                violations.append(Violation(
                    "wrapper-survived-crash",
                    f"{wrapper_path} did not terminate after {child_path} crashed",
                    (child_crash.seq,)))

    return violations


# -- tree description files ---------------------------------------------------
#
# One node per line, two-space indentation per level::
#
#     sup root module=app1_rootsup restarts=3/5
#       worker server1 module=generic_server args=[app1_server1] init=sleep:50
#       worker server2 module=generic_server args=[app1_server2] mode=concurrent
#
# keys: module= args=([tok] or *), restart=permanent|temporary,
# shutdown=brutal|<ms>, init=none|sleep:<ms>|busy:<ms>|fail,
# mode=sequential|concurrent, restarts=<max>/<seconds> (supervisors).


def _parse_init(token: str, line: int) -> InitModel:
    if token == "none":
        return InitModel()
    if token == "fail":
        return InitModel.failing()
    for prefix, maker in (("sleep:", InitModel.sleep), ("busy:", InitModel.busy)):
        if token.startswith(prefix):
            try:
                return maker(float(token[len(prefix):]))
            except ValueError:
                raise TreeError(f"bad init duration in {token!r}", line) from None
    raise TreeError(f"unknown init model {token!r}", line)


def parse_tree(text: str) -> ChildSpec:
    """Parse a tree description file into its root ChildSpec."""
    stack: list[tuple[int, dict]] = []  # (depth, mutable node)
    root: dict | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        indent = len(stripped) - len(stripped.lstrip())
        if indent % 2 != 0:
            raise TreeError("indentation must be multiples of two spaces", lineno)
        depth = indent // 2
        tokens = stripped.split()
        kind_tok, node_id = tokens[0], tokens[1] if len(tokens) > 1 else None
        if kind_tok not in ("sup", "worker") or node_id is None:
            raise TreeError(f"expected 'sup <id>' or 'worker <id>', got {stripped.strip()!r}",
                            lineno)
        fields: dict = {
            "id": node_id,
            "module": node_id,
            "args": None,
            "restart": "permanent",
            "shutdown": "brutal",
            "kind": "supervisor" if kind_tok == "sup" else "worker",
            "start_mode": "sequential",
            "init": InitModel(),
            "flags": SupervisorFlags(),
            "children": [],
            "line": lineno,
        }
        for token in tokens[2:]:
            if "=" not in token:
                raise TreeError(f"expected key=value, got {token!r}", lineno)
            key, value = token.split("=", 1)
            if key == "module":
                fields["module"] = value
            elif key == "args":
                fields["args"] = None if value == "*" else value
            elif key == "restart":
                fields["restart"] = value
            elif key == "shutdown":
                fields["shutdown"] = value if value == "brutal" else float(value)
            elif key == "modules":
                fields["modules"] = tuple(value.split(","))
            elif key == "init":
                fields["init"] = _parse_init(value, lineno)
            elif key == "mode":
                if value not in ("sequential", "concurrent"):
                    raise TreeError(f"bad mode {value!r}", lineno)
                fields["start_mode"] = value
            elif key == "restarts":
                try:
                    max_restarts, max_seconds = value.split("/", 1)
                    fields["flags"] = SupervisorFlags("one_for_one",
                                                      int(max_restarts),
                                                      float(max_seconds))
                except ValueError:
                    raise TreeError(f"expected restarts=<max>/<seconds>, got {value!r}",
                                    lineno) from None
            else:
                raise TreeError(f"unknown key {key!r}", lineno)

        while stack and stack[-1][0] >= depth:
            stack.pop()
        if depth == 0:
            if root is not None:
                raise TreeError("multiple top-level nodes; a tree has one root", lineno)
            root = fields
        else:
            if not stack:
                raise TreeError("indented node without a parent", lineno)
            parent = stack[-1][1]
            if parent["kind"] != "supervisor":
                raise TreeError(f"worker {parent['id']!r} cannot have children", lineno)
            parent["children"].append(fields)
        stack.append((depth, fields))

    if root is None:
        raise TreeError("empty tree file")

    def build(node: dict) -> ChildSpec:
        line = node.pop("line")
        children = tuple(build(c) for c in node.pop("children"))
        try:
            return ChildSpec(children=children, **node)
        except ValueError as exc:
            raise TreeError(str(exc), line) from None

    return build(root)


def serialize_tree(spec: ChildSpec) -> str:
    """Render a ChildSpec tree back into the file format."""
    lines: list[str] = []

    def render(node: ChildSpec, depth: int):
        parts = ["sup" if node.kind == "supervisor" else "worker", node.id]
        if node.module != node.id:
            parts.append(f"module={node.module}")
        if node.args is not None:
            parts.append(f"args={node.args}")
        if node.restart != "permanent":
            parts.append(f"restart={node.restart}")
        if node.modules:
            parts.append(f"modules={','.join(node.modules)}")
        if node.init.kind in ("sleep", "busy"):
            parts.append(f"init={node.init.kind}:{node.init.duration_ms:g}")
        elif node.init.kind == "fail":
            parts.append("init=fail")
        if node.start_mode != "sequential":
            parts.append(f"mode={node.start_mode}")
        if node.kind == "supervisor" and node.flags != SupervisorFlags():
            parts.append(f"restarts={node.flags.max_restarts}/{node.flags.max_seconds:g}")
        lines.append("  " * depth + " ".join(parts))
        for child in node.children:
            render(child, depth + 1)

    render(spec, 0)
    return "\n".join(lines) + "\n"
