"""Single-task reference executor: the event order a strictly sequential
startup must produce, computed without threads, clocks, or the condition
store.  Used as the oracle for sequential-mode equivalence."""

from __future__ import annotations

from treeboot import ChildSpec, DependencyGraph


def _detail(**kw) -> tuple[tuple[str, str], ...]:
    return tuple((k, str(v)) for k, v in kw.items() if v is not None)


def run_reference(apps, graph: DependencyGraph) -> list[tuple[str, str, tuple]]:
    """(kind, node, detail) triples for a sequential run of the forest.

    Raises RuntimeError if some wait would block (a sequential run could
    never finish such a system).
    """
    groups = {g.name: g.members for g in graph.groups}
    truth: set[str] = set()
    out: list[tuple[str, str, tuple]] = []

    def naive_expand(module: str, args: str | None) -> set[str]:
        names: list[str] = []
        for key, lst in graph.preconditions:
            if key.module == module and key.args in (None, args):
                names.extend(lst)
        expanded: set[str] = set()
        for name in names:
            expanded.update(groups.get(name, (name,)))
        return expanded

    def naive_sets(module: str, args: str | None) -> set[str]:
        return {
            name for key, name in graph.conditions
            if key.module == module and (key.args is None or key.args == args)
        }

    def exec_node(spec: ChildSpec, path: str) -> None:
        unmet = sorted(n for n in naive_expand(spec.module, spec.args)
                       if n not in truth)
        out.append(("wait_begin", path,
                    _detail(module=spec.module, args=spec.args,
                            conditions=",".join(unmet))))
        if unmet:
            raise RuntimeError(f"{path} would block forever on {unmet}")
        out.append(("wait_end", path, _detail(module=spec.module, args=spec.args)))
        out.append(("init_begin", path, _detail(module=spec.module, args=spec.args)))
        out.append(("init_end", path, _detail(module=spec.module, args=spec.args)))
        for name in sorted(naive_sets(spec.module, spec.args) - truth):
            truth.add(name)
            out.append(("condition_set", path,
                        _detail(condition=name, module=spec.module,
                                args=spec.args)))
        for child in spec.children:
            child_path = f"{path}/{child.id}"
            out.append(("start_request", child_path, ()))
            exec_node(child, child_path)
        out.append(("ack", path, ()))

    for prefix, root in apps:
        root_path = f"{prefix}/{root.id}" if prefix else root.id
        out.append(("start_request", root_path, ()))
        exec_node(root, root_path)
    return out
