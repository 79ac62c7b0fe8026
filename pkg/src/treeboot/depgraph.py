"""Startup dependency graphs: conditions, condition groups, preconditions.

A graph declares which named boolean *conditions* each module startup sets
and which conditions (or groups of them) a module startup must observe
before running its init.  Graphs are loaded from ``.rgraph`` files or built
programmatically, validated once, and treated as read-only afterwards.

File format (line oriented, UTF-8, ``#`` comments)::

    [conditions]
    <module> <args|*> -> <condition_name>
    [groups]
    <group_name> = <name> (, <name>)*
    [preconditions]
    <module> <args|*> <- <name> (, <name>)*

``<args>`` is an opaque bracketed token such as ``[app1_server1]``; ``*``
declares the entry for *any* arguments.  Names in group members and
precondition lists may be condition names or group names; the two share a
single namespace.  Sections may appear in any order, each at most once.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property

from .errors import GraphError

__all__ = [
    "ModuleKey",
    "ConditionGroup",
    "Diagnostic",
    "DependencyGraph",
    "parse_release_graph",
    "serialize_release_graph",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")


def _is_ident(token: str) -> bool:
    return bool(_IDENT.match(token))


@dataclass(frozen=True)
class ModuleKey:
    """A module name plus optional opaque argument token.

    ``args=None`` is the wildcard: the entry applies to the module started
    with *any* arguments.  Argument tokens are compared for exact equality
    only, never inspected.
    """

    module: str
    args: str | None = None

    def matches_start(self, module: str, args: str | None) -> bool:
        """True when a start of (module, args) falls under this key."""
        return self.module == module and (self.args is None or self.args == args)

    def __str__(self) -> str:
        return self.module if self.args is None else f"{self.module}{self.args}"


@dataclass(frozen=True)
class ConditionGroup:
    name: str
    members: tuple[str, ...]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    line: int | None = None
    column: int | None = None

    def render(self) -> str:
        where = f"line {self.line}: " if self.line is not None else ""
        return f"{where}{self.severity}[{self.code}] {self.message}"


@dataclass(frozen=True)
class DependencyGraph:
    """Vertices (conditions), groups, and edges (preconditions).

    Declaration order is preserved; equality is structural.  Instances are
    immutable, so a validated graph can be shared freely across threads.
    """

    conditions: tuple[tuple[ModuleKey, str], ...] = ()
    groups: tuple[ConditionGroup, ...] = ()
    preconditions: tuple[tuple[ModuleKey, tuple[str, ...]], ...] = ()

    # -- validation ----------------------------------------------------

    def validate(self) -> list[Diagnostic]:
        """Return every problem found; an empty list means usable."""
        return _validate(self.conditions, self.groups, self.preconditions, {})

    def require_valid(self) -> None:
        errors = [d for d in self.validate() if d.severity == "error"]
        if errors:
            raise GraphError(errors)

    # -- lookup tables (built lazily, graph assumed validated) ---------

    @cached_property
    def condition_names(self) -> frozenset[str]:
        return frozenset(name for _, name in self.conditions)

    @cached_property
    def _group_members(self) -> dict[str, tuple[str, ...]]:
        return {g.name: g.members for g in self.groups}

    @cached_property
    def _setter_by_condition(self) -> dict[str, ModuleKey]:
        return {name: key for key, name in self.conditions}

    @cached_property
    def _conditions_by_module(self) -> dict[str, list[tuple[ModuleKey, str]]]:
        table: dict[str, list[tuple[ModuleKey, str]]] = {}
        for key, name in self.conditions:
            table.setdefault(key.module, []).append((key, name))
        return table

    @cached_property
    def _precondition_by_key(self) -> dict[ModuleKey, tuple[str, ...]]:
        return {key: names for key, names in self.preconditions}

    # -- queries --------------------------------------------------------

    def expand_names(self, names) -> set[str]:
        """Replace group names with their member conditions."""
        out: set[str] = set()
        for name in names:
            members = self._group_members.get(name)
            if members is None:
                out.add(name)
            else:
                out.update(members)
        return out

    def expand_preconditions(self, key: ModuleKey) -> set[str]:
        """All conditions the start of ``key`` must wait for.

        The exact entry for the key and the wildcard entry for the same
        module are unioned; group names are fully expanded.  Empty set when
        no entry applies.
        """
        names: list[str] = []
        exact = self._precondition_by_key.get(key)
        if exact is not None:
            names.extend(exact)
        if key.args is not None:
            wildcard = self._precondition_by_key.get(ModuleKey(key.module))
            if wildcard is not None:
                names.extend(wildcard)
        return self.expand_names(names)

    def conditions_set_by(self, module: str, args: str | None = None) -> set[str]:
        """Conditions satisfied when (module, args) finishes its init."""
        out: set[str] = set()
        for key, name in self._conditions_by_module.get(module, ()):
            if key.matches_start(module, args):
                out.add(name)
        return out

    def setter_of(self, condition: str) -> ModuleKey | None:
        """The module key whose startup sets this condition."""
        return self._setter_by_condition.get(condition)

    def cycle_check(self) -> list[ModuleKey] | None:
        """Return None when the module-level wait graph is acyclic,
        otherwise one witness cycle as a module-key sequence.

        Edge direction: setter -> waiter (the waiter's start must come
        after the setter's init).  A wildcard key is conservatively
        treated as matching every exact key with the same module name.
        """
        vertices: list[ModuleKey] = []
        seen: set[ModuleKey] = set()
        for key, _ in self.conditions:
            if key not in seen:
                seen.add(key)
                vertices.append(key)
        for key, _ in self.preconditions:
            if key not in seen:
                seen.add(key)
                vertices.append(key)

        by_module: dict[str, list[ModuleKey]] = {}
        for v in vertices:
            by_module.setdefault(v.module, []).append(v)

        def closure(key: ModuleKey) -> list[ModuleKey]:
            related = by_module.get(key.module, [])
            if key.args is None:
                return related  # wildcard touches every variant
            return [k for k in related if k == key or k.args is None]

        edges: dict[ModuleKey, list[ModuleKey]] = {v: [] for v in vertices}
        edge_set: set[tuple[ModuleKey, ModuleKey]] = set()
        for waiter_key, names in self.preconditions:
            for cond in sorted(self.expand_names(names)):
                setter_key = self._setter_by_condition.get(cond)
                if setter_key is None:
                    continue
                for src in closure(setter_key):
                    for dst in closure(waiter_key):
                        if (src, dst) not in edge_set:
                            edge_set.add((src, dst))
                            edges[src].append(dst)

        color: dict[ModuleKey, int] = {}
        stack: list[ModuleKey] = []

        def dfs(v: ModuleKey) -> list[ModuleKey] | None:
            color[v] = 1
            stack.append(v)
            for w in edges[v]:
                state = color.get(w, 0)
                if state == 0:
                    found = dfs(w)
                    if found is not None:
                        return found
                elif state == 1:
                    return stack[stack.index(w):]
            stack.pop()
            color[v] = 2
            return None

        for v in vertices:
            if color.get(v, 0) == 0:
                witness = dfs(v)
                if witness is not None:
                    return witness
        return None


# -- shared validation core (file parser passes source locations) --------


def _validate(conditions, groups, preconditions, lines: dict) -> list[Diagnostic]:
    diags: list[Diagnostic] = []

    def err(code, message, lockey=None):
        diags.append(Diagnostic("error", code, message, lines.get(lockey)))

    declared: set[str] = set()
    seen_keys: set[ModuleKey] = set()
    for idx, (key, name) in enumerate(conditions):
        if not _is_ident(key.module):
            err("malformed-key", f"bad module name {key.module!r}", ("c", idx))
        if key.args is not None and (not key.args or any(c.isspace() for c in key.args)):
            err("malformed-key", f"bad argument token {key.args!r}", ("c", idx))
        if not _is_ident(name):
            err("malformed-key", f"bad condition name {name!r}", ("c", idx))
        if name in declared:
            err("duplicate-condition", f"condition {name!r} declared twice", ("c", idx))
        declared.add(name)
        if key in seen_keys:
            err("duplicate-module-key", f"module key {key} declared twice", ("c", idx))
        seen_keys.add(key)

    group_names: set[str] = set()
    for idx, group in enumerate(groups):
        if not _is_ident(group.name):
            err("malformed-key", f"bad group name {group.name!r}", ("g", idx))
        if group.name in group_names:
            err("duplicate-group", f"group {group.name!r} declared twice", ("g", idx))
        group_names.add(group.name)
        if group.name in declared:
            err("name-collision",
                f"{group.name!r} is both a condition and a group", ("g", idx))
        if not group.members:
            err("empty-group", f"group {group.name!r} has no members", ("g", idx))
        for member in group.members:
            if member not in declared:
                err("unknown-name",
                    f"group {group.name!r} references unknown condition {member!r}",
                    ("g", idx))
            elif member in group_names and member != group.name:
                # flat groups only; a member must be a condition
                err("unknown-name",
                    f"group {group.name!r} may not contain group {member!r}", ("g", idx))

    known = declared | group_names
    precond_keys: set[ModuleKey] = set()
    for idx, (key, names) in enumerate(preconditions):
        if not _is_ident(key.module):
            err("malformed-key", f"bad module name {key.module!r}", ("p", idx))
        if key.args is not None and (not key.args or any(c.isspace() for c in key.args)):
            err("malformed-key", f"bad argument token {key.args!r}", ("p", idx))
        if key in precond_keys:
            err("duplicate-module-key", f"precondition key {key} declared twice", ("p", idx))
        precond_keys.add(key)
        if not names:
            err("empty-preconditions", f"empty precondition list for {key}", ("p", idx))
        for name in names:
            if name not in known:
                err("unknown-name", f"unknown condition or group {name!r}", ("p", idx))
    return diags


# -- file format ----------------------------------------------------------

_SECTIONS = ("conditions", "groups", "preconditions")


def parse_release_graph(source: str) -> DependencyGraph:
    """Parse ``.rgraph`` text into a validated graph.

    Raises :class:`GraphError` carrying one diagnostic (with line number)
    per problem found, covering both syntax and semantic checks.
    """
    diags: list[Diagnostic] = []
    conditions: list[tuple[ModuleKey, str]] = []
    groups: list[ConditionGroup] = []
    preconditions: list[tuple[ModuleKey, tuple[str, ...]]] = []
    lines: dict = {}

    section = None
    seen_sections: set[str] = set()

    def syntax(code, message, lineno):
        diags.append(Diagnostic("error", code, message, lineno))

    def parse_key(module_tok: str, args_tok: str, lineno: int) -> ModuleKey | None:
        if not _is_ident(module_tok):
            syntax("malformed-key", f"bad module name {module_tok!r}", lineno)
            return None
        if args_tok == "*":
            return ModuleKey(module_tok)
        if not (args_tok.startswith("[") and args_tok.endswith("]")):
            syntax("malformed-key",
                   f"argument token must be bracketed or '*', got {args_tok!r}", lineno)
            return None
        return ModuleKey(module_tok, args_tok)

    def parse_name_list(text: str, lineno: int) -> tuple[str, ...] | None:
        names = [n.strip() for n in text.split(",")] if text.strip() else []
        if not names:
            return ()
        for name in names:
            if not _is_ident(name):
                syntax("malformed-key", f"bad name {name!r}", lineno)
                return None
        return tuple(names)

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                syntax("syntax-error", f"unknown section {name!r}", lineno)
                section = None
                continue
            if name in seen_sections:
                syntax("duplicate-section", f"section [{name}] appears twice", lineno)
            seen_sections.add(name)
            section = name
            continue
        if section is None:
            syntax("syntax-error", f"entry outside any section: {line!r}", lineno)
            continue
        if section == "conditions":
            m = re.fullmatch(r"(\S+)\s+(\S+)\s*->\s*(\S+)", line)
            if not m:
                syntax("syntax-error",
                       f"expected '<module> <args|*> -> <condition>', got {line!r}", lineno)
                continue
            key = parse_key(m.group(1), m.group(2), lineno)
            if key is None:
                continue
            lines[("c", len(conditions))] = lineno
            conditions.append((key, m.group(3)))
        elif section == "groups":
            m = re.fullmatch(r"(\S+)\s*=\s*(.*)", line)
            if not m:
                syntax("syntax-error",
                       f"expected '<group> = <name>, ...', got {line!r}", lineno)
                continue
            members = parse_name_list(m.group(2), lineno)
            if members is None:
                continue
            lines[("g", len(groups))] = lineno
            groups.append(ConditionGroup(m.group(1), members))
        else:
            m = re.fullmatch(r"(\S+)\s+(\S+)\s*<-\s*(.*)", line)
            if not m:
                syntax("syntax-error",
                       f"expected '<module> <args|*> <- <name>, ...', got {line!r}", lineno)
                continue
            key = parse_key(m.group(1), m.group(2), lineno)
            names = parse_name_list(m.group(3), lineno)
            if key is None or names is None:
                continue
            lines[("p", len(preconditions))] = lineno
            preconditions.append((key, names))

    diags.extend(_validate(conditions, groups, preconditions, lines))
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise GraphError(errors)
    return DependencyGraph(tuple(conditions), tuple(groups), tuple(preconditions))


def serialize_release_graph(graph: DependencyGraph) -> str:
    """Render a graph back to ``.rgraph`` text (declaration order kept)."""
    out: list[str] = []
    if graph.conditions:
        out.append("[conditions]")
        for key, name in graph.conditions:
            args = key.args if key.args is not None else "*"
            out.append(f"{key.module} {args} -> {name}")
    if graph.groups:
        out.append("[groups]")
        for group in graph.groups:
            out.append(f"{group.name} = {', '.join(group.members)}")
    if graph.preconditions:
        out.append("[preconditions]")
        for key, names in graph.preconditions:
            args = key.args if key.args is not None else "*"
            out.append(f"{key.module} {args} <- {', '.join(names)}")
    return "\n".join(out) + ("\n" if out else "")
