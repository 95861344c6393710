"""Abstract syntax of Picost systems and threads.

Terms are frozen dataclasses, so they hash and compare structurally and can be
shared freely. This module owns the binding discipline: free names, capture
avoiding substitution, the fresh-name supply, structural canonical forms,
beta-normalization and garbage collection of dead restricted code.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Set, Tuple, Union

logger = logging.getLogger(__name__)

# Upper bound on renaming rounds when choosing canonical bound names
CANONICAL_ROUNDS = 6
# Upper bound on top-level unfoldings in unwind_normalize
UNWIND_LIMIT = 16
# Base given to hoisted binders when keys must not depend on their spelling
BOUND_BASE = "_b"


@dataclass(frozen=True)
class Name:
    """Channel/resource name; suffix is the fresh-supply index, printed as base#k"""

    base: str
    suffix: Optional[int] = None

    def __post_init__(self):
        if not self.base:
            raise ValueError("Name base must be non-empty")

    def sort_key(self) -> Tuple[str, int]:
        return (self.base, -1 if self.suffix is None else self.suffix)

    def __lt__(self, other: "Name") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return self.base if self.suffix is None else f"{self.base}#{self.suffix}"


@dataclass(frozen=True)
class Owner:
    """Principal that sponsors code"""

    id: str

    def __lt__(self, other: "Owner") -> bool:
        return self.id < other.id

    def __str__(self) -> str:
        return self.id


@dataclass(frozen=True)
class ResType:
    """Resource type: cost to use and cost to provide"""

    use_cost: int = 0
    provide_cost: int = 0

    def __post_init__(self):
        if self.use_cost < 0 or self.provide_cost < 0:
            raise ValueError(f"Resource costs must be naturals, got ({self.use_cost},{self.provide_cost})")

    def __lt__(self, other: "ResType") -> bool:
        return (self.use_cost, self.provide_cost) < (other.use_cost, other.provide_cost)

    def __str__(self) -> str:
        return f"({self.use_cost},{self.provide_cost})"


ZERO_TYPE = ResType(0, 0)


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NameVal:
    name: Name


@dataclass(frozen=True)
class Var:
    ident: str


@dataclass(frozen=True)
class Nat:
    value: int


@dataclass(frozen=True)
class Str:
    value: str


@dataclass(frozen=True)
class Ctor:
    tag: str
    arg: "Value"


@dataclass(frozen=True)
class TupleVal:
    items: Tuple["Value", ...]


Value = Union[NameVal, Var, Nat, Str, Ctor, TupleVal]


def name_val(base: str, suffix: Optional[int] = None) -> NameVal:
    return NameVal(Name(base, suffix))


def value_names(v: Value) -> FrozenSet[Name]:
    if isinstance(v, NameVal):
        return frozenset((v.name,))
    if isinstance(v, Ctor):
        return value_names(v.arg)
    if isinstance(v, TupleVal):
        return frozenset().union(*(value_names(i) for i in v.items))
    return frozenset()


def value_vars(v: Value) -> FrozenSet[str]:
    if isinstance(v, Var):
        return frozenset((v.ident,))
    if isinstance(v, Ctor):
        return value_vars(v.arg)
    if isinstance(v, TupleVal):
        return frozenset().union(*(value_vars(i) for i in v.items))
    return frozenset()


def is_closed_value(v: Value) -> bool:
    return not value_vars(v)


def subst_value(v: Value, mapping: Mapping[str, Value]) -> Value:
    if isinstance(v, Var):
        return mapping.get(v.ident, v)
    if isinstance(v, Ctor):
        return Ctor(v.tag, subst_value(v.arg, mapping))
    if isinstance(v, TupleVal):
        return TupleVal(tuple(subst_value(i, mapping) for i in v.items))
    return v


def rename_value(v: Value, mapping: Mapping[Name, Name]) -> Value:
    if isinstance(v, NameVal):
        target = mapping.get(v.name)
        return v if target is None else NameVal(target)
    if isinstance(v, Ctor):
        return Ctor(v.tag, rename_value(v.arg, mapping))
    if isinstance(v, TupleVal):
        return TupleVal(tuple(rename_value(i, mapping) for i in v.items))
    return v


def format_value(v: Value) -> str:
    """Surface syntax of a value"""
    if isinstance(v, NameVal):
        return str(v.name)
    if isinstance(v, Var):
        return v.ident
    if isinstance(v, Nat):
        return str(v.value)
    if isinstance(v, Str):
        return json.dumps(v.value)
    if isinstance(v, Ctor):
        return f"{v.tag}({format_value(v.arg)})"
    return "(" + ", ".join(format_value(i) for i in v.items) + ")"


# ---------------------------------------------------------------------------
# Threads and systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Input:
    chan: Value
    params: Tuple[str, ...]
    body: "Thread"


@dataclass(frozen=True)
class Output:
    chan: Value
    args: Tuple[Value, ...]
    body: "Thread"


@dataclass(frozen=True)
class Match:
    left: Value
    right: Value
    then: "Thread"
    orelse: "Thread"


@dataclass(frozen=True)
class New:
    name: Name
    rtype: ResType
    body: "Thread"


@dataclass(frozen=True)
class Par:
    left: "Thread"
    right: "Thread"


@dataclass(frozen=True)
class Rec:
    var: str
    body: "Thread"


@dataclass(frozen=True)
class RecVar:
    ident: str


@dataclass(frozen=True)
class Stop:
    pass


Thread = Union[Input, Output, Match, New, Par, Rec, RecVar, Stop]

STOP = Stop()


@dataclass(frozen=True)
class Owned:
    owner: Owner
    thread: Thread


@dataclass(frozen=True)
class SysPar:
    left: "System"
    right: "System"


@dataclass(frozen=True)
class SysNew:
    name: Name
    rtype: ResType
    body: "System"


@dataclass(frozen=True)
class Nil:
    pass


System = Union[Owned, SysPar, SysNew, Nil]

NIL = Nil()


def par_threads(threads: Iterable[Thread]) -> Thread:
    items = list(threads)
    if not items:
        return STOP
    result = items[-1]
    for t in reversed(items[:-1]):
        result = Par(t, result)
    return result


def par_systems(systems: Iterable[System]) -> System:
    items = list(systems)
    if not items:
        return NIL
    result = items[-1]
    for m in reversed(items[:-1]):
        result = SysPar(m, result)
    return result


# ---------------------------------------------------------------------------
# Names and variables
# ---------------------------------------------------------------------------


@lru_cache(maxsize=65536)
def thread_free_names(t: Thread) -> FrozenSet[Name]:
    if isinstance(t, Input):
        return value_names(t.chan) | thread_free_names(t.body)
    if isinstance(t, Output):
        names = value_names(t.chan).union(*(value_names(a) for a in t.args))
        return names | thread_free_names(t.body)
    if isinstance(t, Match):
        return (value_names(t.left) | value_names(t.right)
                | thread_free_names(t.then) | thread_free_names(t.orelse))
    if isinstance(t, New):
        return thread_free_names(t.body) - {t.name}
    if isinstance(t, Par):
        return thread_free_names(t.left) | thread_free_names(t.right)
    if isinstance(t, Rec):
        return thread_free_names(t.body)
    return frozenset()


@lru_cache(maxsize=65536)
def thread_names(t: Thread) -> FrozenSet[Name]:
    """All names occurring in t, free or bound"""
    if isinstance(t, Input):
        return value_names(t.chan) | thread_names(t.body)
    if isinstance(t, Output):
        return value_names(t.chan).union(*(value_names(a) for a in t.args)) | thread_names(t.body)
    if isinstance(t, Match):
        return value_names(t.left) | value_names(t.right) | thread_names(t.then) | thread_names(t.orelse)
    if isinstance(t, New):
        return thread_names(t.body) | {t.name}
    if isinstance(t, Par):
        return thread_names(t.left) | thread_names(t.right)
    if isinstance(t, Rec):
        return thread_names(t.body)
    return frozenset()


@lru_cache(maxsize=65536)
def thread_free_vars(t: Thread) -> FrozenSet[str]:
    if isinstance(t, Input):
        return value_vars(t.chan) | (thread_free_vars(t.body) - set(t.params))
    if isinstance(t, Output):
        return value_vars(t.chan).union(*(value_vars(a) for a in t.args)) | thread_free_vars(t.body)
    if isinstance(t, Match):
        return value_vars(t.left) | value_vars(t.right) | thread_free_vars(t.then) | thread_free_vars(t.orelse)
    if isinstance(t, (New, Rec)):
        return thread_free_vars(t.body)
    if isinstance(t, Par):
        return thread_free_vars(t.left) | thread_free_vars(t.right)
    return frozenset()


@lru_cache(maxsize=65536)
def thread_free_recvars(t: Thread) -> FrozenSet[str]:
    if isinstance(t, RecVar):
        return frozenset((t.ident,))
    if isinstance(t, Rec):
        return thread_free_recvars(t.body) - {t.var}
    if isinstance(t, (Input, Output, New)):
        return thread_free_recvars(t.body)
    if isinstance(t, Match):
        return thread_free_recvars(t.then) | thread_free_recvars(t.orelse)
    if isinstance(t, Par):
        return thread_free_recvars(t.left) | thread_free_recvars(t.right)
    return frozenset()


@lru_cache(maxsize=65536)
def free_names(m: System) -> FrozenSet[Name]:
    """fn(M): channel names occurring free in a system"""
    if isinstance(m, Owned):
        return thread_free_names(m.thread)
    if isinstance(m, SysPar):
        return free_names(m.left) | free_names(m.right)
    if isinstance(m, SysNew):
        return free_names(m.body) - {m.name}
    return frozenset()


@lru_cache(maxsize=65536)
def system_names(m: System) -> FrozenSet[Name]:
    """All names of a system, free or bound"""
    if isinstance(m, Owned):
        return thread_names(m.thread)
    if isinstance(m, SysPar):
        return system_names(m.left) | system_names(m.right)
    if isinstance(m, SysNew):
        return system_names(m.body) | {m.name}
    return frozenset()


def bound_names(m: System) -> FrozenSet[Name]:
    return system_names(m) - free_names(m)


def owners_of(m: System) -> FrozenSet[Owner]:
    if isinstance(m, Owned):
        return frozenset((m.owner,))
    if isinstance(m, SysPar):
        return owners_of(m.left) | owners_of(m.right)
    if isinstance(m, SysNew):
        return owners_of(m.body)
    return frozenset()


def system_free_vars(m: System) -> FrozenSet[str]:
    if isinstance(m, Owned):
        return thread_free_vars(m.thread) | thread_free_recvars(m.thread)
    if isinstance(m, SysPar):
        return system_free_vars(m.left) | system_free_vars(m.right)
    if isinstance(m, SysNew):
        return system_free_vars(m.body)
    return frozenset()


def is_closed(m: System) -> bool:
    return not system_free_vars(m)


def fresh_name(base: str, avoid: Iterable[Name]) -> Name:
    """First name of the deterministic supply base, base#1, base#2, ... not in avoid"""
    taken = avoid if isinstance(avoid, (set, frozenset)) else set(avoid)
    candidate = Name(base)
    index = 0
    while candidate in taken:
        index += 1
        candidate = Name(base, index)
    return candidate


def _fresh_ident(base: str, avoid: Iterable[str]) -> str:
    taken = set(avoid)
    candidate = base
    index = 0
    while candidate in taken:
        index += 1
        candidate = f"{base}_{index}"
    return candidate


# ---------------------------------------------------------------------------
# Renaming and substitution
# ---------------------------------------------------------------------------


def rename_thread(t: Thread, mapping: Mapping[Name, Name]) -> Thread:
    """Simultaneous capture-avoiding renaming of free names"""
    mapping = {k: v for k, v in mapping.items() if k != v and k in thread_free_names(t)}
    if not mapping:
        return t
    return _rename(t, mapping)


def _rename(t: Thread, mapping: Dict[Name, Name]) -> Thread:
    if not mapping:
        return t
    if isinstance(t, Input):
        return Input(rename_value(t.chan, mapping), t.params, _rename(t.body, mapping))
    if isinstance(t, Output):
        return Output(rename_value(t.chan, mapping), tuple(rename_value(a, mapping) for a in t.args),
                      _rename(t.body, mapping))
    if isinstance(t, Match):
        return Match(rename_value(t.left, mapping), rename_value(t.right, mapping),
                     _rename(t.then, mapping), _rename(t.orelse, mapping))
    if isinstance(t, New):
        inner = {k: v for k, v in mapping.items() if k != t.name and k in thread_free_names(t.body)}
        if not inner:
            return t
        name, body = t.name, t.body
        if name in inner.values():
            avoid = set(thread_names(body)) | set(inner) | set(inner.values())
            name = fresh_name(t.name.base, avoid)
            body = _rename(body, {t.name: name})
        return New(name, t.rtype, _rename(body, inner))
    if isinstance(t, Par):
        return Par(_rename(t.left, mapping), _rename(t.right, mapping))
    if isinstance(t, Rec):
        return Rec(t.var, _rename(t.body, mapping))
    return t


def substitute(t: Thread, x: str, v: Value) -> Thread:
    """T{x:=v}"""
    return substitute_many(t, {x: v})


def substitute_many(t: Thread, mapping: Mapping[str, Value]) -> Thread:
    """Simultaneous capture-avoiding substitution of values for variables"""
    live = {k: v for k, v in mapping.items() if k in thread_free_vars(t)}
    if not live:
        return t
    if isinstance(t, Input):
        chan = subst_value(t.chan, live)
        inner = {k: v for k, v in live.items() if k not in t.params}
        params, body = t.params, t.body
        incoming = frozenset().union(*(value_vars(v) for v in inner.values()))
        clashing = [p for p in params if p in incoming]
        if clashing:
            avoid = set(incoming) | set(thread_free_vars(body)) | set(params) | set(inner)
            renames = {}
            for p in clashing:
                fresh = _fresh_ident(p, avoid)
                avoid.add(fresh)
                renames[p] = Var(fresh)
            params = tuple(renames[p].ident if p in renames else p for p in params)
            body = substitute_many(body, renames)
        return Input(chan, params, substitute_many(body, inner))
    if isinstance(t, Output):
        return Output(subst_value(t.chan, live), tuple(subst_value(a, live) for a in t.args),
                      substitute_many(t.body, live))
    if isinstance(t, Match):
        return Match(subst_value(t.left, live), subst_value(t.right, live),
                     substitute_many(t.then, live), substitute_many(t.orelse, live))
    if isinstance(t, New):
        incoming = frozenset().union(*(value_names(v) for v in live.values()))
        name, body = t.name, t.body
        if name in incoming:
            name = fresh_name(t.name.base, set(thread_names(body)) | set(incoming))
            body = _rename(body, {t.name: name})
        return New(name, t.rtype, substitute_many(body, live))
    if isinstance(t, Par):
        return Par(substitute_many(t.left, live), substitute_many(t.right, live))
    if isinstance(t, Rec):
        return Rec(t.var, substitute_many(t.body, live))
    return t


def substitute_recvar(t: Thread, x: str, replacement: Thread) -> Thread:
    """T{X:=U} for a recursion variable"""
    if x not in thread_free_recvars(t):
        return t
    if isinstance(t, RecVar):
        return replacement
    if isinstance(t, Rec):
        return Rec(t.var, substitute_recvar(t.body, x, replacement))
    if isinstance(t, Input):
        params, body = t.params, t.body
        clashing = [p for p in params if p in thread_free_vars(replacement)]
        if clashing:
            avoid = set(thread_free_vars(replacement)) | set(thread_free_vars(body)) | set(params)
            renames = {}
            for p in clashing:
                fresh = _fresh_ident(p, avoid)
                avoid.add(fresh)
                renames[p] = Var(fresh)
            params = tuple(renames[p].ident if p in renames else p for p in params)
            body = substitute_many(body, renames)
        return Input(t.chan, params, substitute_recvar(body, x, replacement))
    if isinstance(t, Output):
        return Output(t.chan, t.args, substitute_recvar(t.body, x, replacement))
    if isinstance(t, Match):
        return Match(t.left, t.right, substitute_recvar(t.then, x, replacement),
                     substitute_recvar(t.orelse, x, replacement))
    if isinstance(t, New):
        name, body = t.name, t.body
        if name in thread_free_names(replacement):
            name = fresh_name(t.name.base, set(thread_names(body)) | set(thread_names(replacement)))
            body = _rename(body, {t.name: name})
        return New(name, t.rtype, substitute_recvar(body, x, replacement))
    if isinstance(t, Par):
        return Par(substitute_recvar(t.left, x, replacement), substitute_recvar(t.right, x, replacement))
    return t


def unfold(t: Rec) -> Thread:
    """One unwinding step: rec X.T becomes T{X := rec X.T}"""
    return substitute_recvar(t.body, t.var, t)


def rename_system(m: System, mapping: Mapping[Name, Name]) -> System:
    mapping = {k: v for k, v in mapping.items() if k != v and k in free_names(m)}
    if not mapping:
        return m
    if isinstance(m, Owned):
        return Owned(m.owner, rename_thread(m.thread, mapping))
    if isinstance(m, SysPar):
        return SysPar(rename_system(m.left, mapping), rename_system(m.right, mapping))
    if isinstance(m, SysNew):
        inner = {k: v for k, v in mapping.items() if k != m.name}
        name, body = m.name, m.body
        if name in inner.values():
            name = fresh_name(m.name.base, set(system_names(body)) | set(inner) | set(inner.values()))
            body = rename_system(body, {m.name: name})
        return SysNew(name, m.rtype, rename_system(body, inner))
    return m


def substitute_system(m: System, mapping: Mapping[str, Value]) -> System:
    """Instantiate value variables of a system template"""
    if not mapping:
        return m
    if isinstance(m, Owned):
        return Owned(m.owner, substitute_many(m.thread, mapping))
    if isinstance(m, SysPar):
        return SysPar(substitute_system(m.left, mapping), substitute_system(m.right, mapping))
    if isinstance(m, SysNew):
        incoming = frozenset().union(*(value_names(v) for v in mapping.values()))
        name, body = m.name, m.body
        if name in incoming:
            name = fresh_name(m.name.base, set(system_names(body)) | set(incoming))
            body = rename_system(body, {m.name: name})
        return SysNew(name, m.rtype, substitute_system(body, mapping))
    return m


def desugar_choice(p: Thread, q: Thread, avoid: Iterable[Name] = ()) -> Thread:
    """p (+) q as (new c:(0,0)) (c!() | c?().p | c?().q) with c fresh"""
    taken = set(avoid) | set(thread_names(p)) | set(thread_names(q))
    c = fresh_name("c", taken)
    chan = NameVal(c)
    return New(c, ZERO_TYPE, Par(Output(chan, (), STOP), Par(Input(chan, (), p), Input(chan, (), q))))


# ---------------------------------------------------------------------------
# Term keys (total order, alpha-invariant for thread-level binders)
# ---------------------------------------------------------------------------


def _value_key(v: Value, scope: Mapping[Name, str], vscope: Mapping[str, str], mask: FrozenSet[Name]) -> str:
    if isinstance(v, NameVal):
        if v.name in scope:
            return scope[v.name]
        if v.name in mask:
            return "?" + v.name.base
        return str(v.name)
    if isinstance(v, Var):
        return vscope.get(v.ident, "$" + v.ident)
    if isinstance(v, Nat):
        return str(v.value)
    if isinstance(v, Str):
        return json.dumps(v.value)
    if isinstance(v, Ctor):
        return f"{v.tag}({_value_key(v.arg, scope, vscope, mask)})"
    return "<" + ",".join(_value_key(i, scope, vscope, mask) for i in v.items) + ">"


def _thread_key(t: Thread, scope: Dict[Name, str], vscope: Dict[str, str], rscope: Dict[str, str],
                mask: FrozenSet[Name]) -> str:
    depth = len(scope) + len(vscope) + len(rscope)
    if isinstance(t, Input):
        inner = dict(vscope)
        tokens = []
        for i, p in enumerate(t.params):
            inner[p] = f"${depth + i}"
            tokens.append(inner[p])
        chan = _value_key(t.chan, scope, vscope, mask)
        return f"{chan}?({','.join(tokens)}).{_thread_key(t.body, scope, inner, rscope, mask)}"
    if isinstance(t, Output):
        chan = _value_key(t.chan, scope, vscope, mask)
        args = ",".join(_value_key(a, scope, vscope, mask) for a in t.args)
        return f"{chan}!({args}).{_thread_key(t.body, scope, vscope, rscope, mask)}"
    if isinstance(t, Match):
        left = _value_key(t.left, scope, vscope, mask)
        right = _value_key(t.right, scope, vscope, mask)
        return (f"if[{left}={right}]({_thread_key(t.then, scope, vscope, rscope, mask)})"
                f"({_thread_key(t.orelse, scope, vscope, rscope, mask)})")
    if isinstance(t, New):
        inner = dict(scope)
        inner[t.name] = f"^{depth}"
        return f"new[{inner[t.name]}:{t.rtype}]({_thread_key(t.body, inner, vscope, rscope, mask)})"
    if isinstance(t, Par):
        return (f"par({_thread_key(t.left, scope, vscope, rscope, mask)})"
                f"({_thread_key(t.right, scope, vscope, rscope, mask)})")
    if isinstance(t, Rec):
        inner = dict(rscope)
        inner[t.var] = f"&{depth}"
        return f"rec[{inner[t.var]}]({_thread_key(t.body, scope, vscope, inner, mask)})"
    if isinstance(t, RecVar):
        return rscope.get(t.ident, "X:" + t.ident)
    return "stop"


@lru_cache(maxsize=131072)
def thread_key(t: Thread, mask: FrozenSet[Name] = frozenset()) -> str:
    """Order key of a thread; names in mask are abstracted to their base"""
    return _thread_key(t, {}, {}, {}, mask)


def component_key(owner: Owner, t: Thread, mask: FrozenSet[Name] = frozenset()) -> str:
    return f"[{owner.id}]{thread_key(t, mask)}"


@lru_cache(maxsize=65536)
def system_key(m: System) -> str:
    """Order key of a system as written (no canonicalization)"""
    if isinstance(m, Owned):
        return component_key(m.owner, m.thread)
    if isinstance(m, SysPar):
        return f"({system_key(m.left)}|{system_key(m.right)})"
    if isinstance(m, SysNew):
        return f"new[{m.name}:{m.rtype}]({system_key(m.body)})"
    return "0"


def _names_in_order(t: Thread, bound: FrozenSet[Name] = frozenset()) -> Iterator[Name]:
    """Free names of t in pre-order of first occurrence"""

    def of_value(v: Value) -> Iterator[Name]:
        if isinstance(v, NameVal):
            if v.name not in bound:
                yield v.name
        elif isinstance(v, Ctor):
            yield from of_value(v.arg)
        elif isinstance(v, TupleVal):
            for i in v.items:
                yield from of_value(i)

    if isinstance(t, Input):
        yield from of_value(t.chan)
        yield from _names_in_order(t.body, bound)
    elif isinstance(t, Output):
        yield from of_value(t.chan)
        for a in t.args:
            yield from of_value(a)
        yield from _names_in_order(t.body, bound)
    elif isinstance(t, Match):
        yield from of_value(t.left)
        yield from of_value(t.right)
        yield from _names_in_order(t.then, bound)
        yield from _names_in_order(t.orelse, bound)
    elif isinstance(t, New):
        yield from _names_in_order(t.body, bound | {t.name})
    elif isinstance(t, Par):
        yield from _names_in_order(t.left, bound)
        yield from _names_in_order(t.right, bound)
    elif isinstance(t, Rec):
        yield from _names_in_order(t.body, bound)


# ---------------------------------------------------------------------------
# Flat forms, canonicalization, beta-normalization, garbage collection
# ---------------------------------------------------------------------------


Component = Tuple[Owner, Thread]
Binder = Tuple[Name, ResType]


@dataclass(frozen=True)
class Flat:
    """(new binders)(component | ... | component) with all restrictions hoisted"""

    binders: Tuple[Binder, ...]
    components: Tuple[Component, ...]

    @property
    def bound(self) -> FrozenSet[Name]:
        return frozenset(n for n, _ in self.binders)

    def free_names(self) -> FrozenSet[Name]:
        names: Set[Name] = set()
        for _, t in self.components:
            names |= thread_free_names(t)
        return frozenset(names) - self.bound

    def to_system(self) -> System:
        body = par_systems(Owned(o, t) for o, t in self.components)
        for name, rtype in reversed(self.binders):
            body = SysNew(name, rtype, body)
        return body


def flatten(m: System, beta: bool = False) -> Flat:
    """Hoist every restriction outward, renaming binders apart when hoisting would capture.

    With beta=True the housekeeping rewrites split, export, match and mismatch are
    applied on the way down.
    """
    avoid: Set[Name] = set(system_names(m))
    free = free_names(m)
    used: Set[Name] = set()
    binders: List[Binder] = []
    components: List[Component] = []

    def bind(name: Name, rtype: ResType) -> Name:
        target = name
        if name in used or name in free:
            target = fresh_name(name.base, avoid)
            avoid.add(target)
        used.add(target)
        binders.append((target, rtype))
        return target

    def thread(owner: Owner, t: Thread) -> None:
        if isinstance(t, Stop):
            return
        if beta and isinstance(t, Par):
            thread(owner, t.left)
            thread(owner, t.right)
            return
        if beta and isinstance(t, New):
            target = bind(t.name, t.rtype)
            thread(owner, rename_thread(t.body, {t.name: target}))
            return
        if beta and isinstance(t, Match) and is_closed_value(t.left) and is_closed_value(t.right):
            thread(owner, t.then if t.left == t.right else t.orelse)
            return
        components.append((owner, t))

    def walk(s: System, mapping: Dict[Name, Name]) -> None:
        if isinstance(s, SysPar):
            walk(s.left, mapping)
            walk(s.right, mapping)
        elif isinstance(s, SysNew):
            target = bind(s.name, s.rtype)
            inner = dict(mapping)
            inner[s.name] = target
            walk(s.body, inner)
        elif isinstance(s, Owned):
            thread(s.owner, rename_thread(s.thread, mapping))

    walk(m, {})
    return Flat(tuple(binders), tuple(components))


def _canonical_inner(t: Thread, avoid: FrozenSet[Name], enclosing: FrozenSet[Name] = frozenset()) -> Thread:
    """Rename thread-level restriction binders by the fresh supply"""
    if isinstance(t, New):
        target = fresh_name(t.name.base, avoid | enclosing)
        body = rename_thread(t.body, {t.name: target}) if target != t.name else t.body
        return New(target, t.rtype, _canonical_inner(body, avoid, enclosing | {target}))
    if isinstance(t, Input):
        return Input(t.chan, t.params, _canonical_inner(t.body, avoid, enclosing))
    if isinstance(t, Output):
        return Output(t.chan, t.args, _canonical_inner(t.body, avoid, enclosing))
    if isinstance(t, Match):
        return Match(t.left, t.right, _canonical_inner(t.then, avoid, enclosing),
                     _canonical_inner(t.orelse, avoid, enclosing))
    if isinstance(t, Par):
        return Par(_canonical_inner(t.left, avoid, enclosing), _canonical_inner(t.right, avoid, enclosing))
    if isinstance(t, Rec):
        return Rec(t.var, _canonical_inner(t.body, avoid, enclosing))
    return t


def canonical_flat(flat: Flat) -> Flat:
    """Sort components and rename hoisted binders to supply order"""
    free = flat.free_names()
    binders = list(flat.binders)
    components = list(flat.components)
    for _ in range(CANONICAL_ROUNDS):
        mask = frozenset(n for n, _ in binders)
        components.sort(key=lambda c: (component_key(c[0], c[1], mask), component_key(c[0], c[1])))
        order: List[Name] = []
        for _, t in components:
            for name in _names_in_order(t):
                if name in mask and name not in order:
                    order.append(name)
        rtypes = dict(binders)
        unused = sorted((n for n in mask if n not in order), key=lambda n: (n.base, rtypes[n], n.sort_key()))
        taken: Set[Name] = set(free)
        mapping: Dict[Name, Name] = {}
        for name in order + unused:
            target = fresh_name(name.base, taken)
            taken.add(target)
            mapping[name] = target
        stable = all(k == v for k, v in mapping.items())
        if not stable:
            components = [(o, rename_thread(t, mapping)) for o, t in components]
            binders = [(mapping[n], r) for n, r in binders]
        if stable:
            break
    avoid = frozenset(free) | frozenset(n for n, _ in binders)
    components = [(o, _canonical_inner(t, avoid)) for o, t in components]
    components.sort(key=lambda c: (component_key(c[0], c[1], frozenset(n for n, _ in binders)),
                                   component_key(c[0], c[1])))
    binders.sort(key=lambda b: b[0].sort_key())
    return Flat(tuple(binders), tuple(components))


@lru_cache(maxsize=65536)
def struct_canonical(m: System) -> System:
    """Canonical representative of the structural-congruence class of m"""
    return canonical_flat(flatten(m)).to_system()


def erase_binders(flat: Flat, keep: FrozenSet[str] = frozenset()) -> Flat:
    """Rename hoisted binders in binding order to the BOUND_BASE supply; binders with a base in keep stay"""
    kept = {n for n, _ in flat.binders if n.base in keep}
    taken: Set[Name] = set(flat.free_names()) | kept
    mapping: Dict[Name, Name] = {}
    for name, _ in flat.binders:
        if name in kept:
            continue
        target = fresh_name(BOUND_BASE, taken)
        taken.add(target)
        mapping[name] = target
    if all(k == v for k, v in mapping.items()):
        return flat
    return Flat(tuple((mapping.get(n, n), r) for n, r in flat.binders),
                tuple((o, rename_thread(t, mapping)) for o, t in flat.components))


@lru_cache(maxsize=65536)
def canonical_key(m: System, keep: FrozenSet[str] = frozenset()) -> str:
    """Key of the congruence class of m up to renaming of bound names.

    Binders whose base is in keep are compared by base, so a scoped resource such
    as a restricted adv never matches a differently named binder.
    """
    return system_key(canonical_flat(erase_binders(flatten(m), keep)).to_system())


def struct_eq(m: System, n: System) -> bool:
    return canonical_key(m) == canonical_key(n)


@lru_cache(maxsize=65536)
def beta_normalize(m: System) -> System:
    """Apply split, export, match and mismatch exhaustively; recursion is left folded"""
    return canonical_flat(flatten(m, beta=True)).to_system()


def is_beta_normal(m: System) -> bool:
    for _, t in flatten(m).components:
        if isinstance(t, (Par, New)):
            return False
        if isinstance(t, Match) and is_closed_value(t.left) and is_closed_value(t.right):
            return False
    return True


def _subject_name(v: Value) -> Optional[Name]:
    return v.name if isinstance(v, NameVal) else None


def _usage(t: Thread, name: Name, acc: Set[str]) -> None:
    """Collect how name is used in t: 'in' subject, 'out' subject or 'other'"""
    if name not in thread_names(t):
        return
    if isinstance(t, Input):
        if _subject_name(t.chan) == name:
            acc.add("in")
        elif name in value_names(t.chan):
            acc.add("other")
        _usage(t.body, name, acc)
    elif isinstance(t, Output):
        if _subject_name(t.chan) == name:
            acc.add("out")
        elif name in value_names(t.chan):
            acc.add("other")
        if any(name in value_names(a) for a in t.args):
            acc.add("other")
        _usage(t.body, name, acc)
    elif isinstance(t, Match):
        if name in value_names(t.left) or name in value_names(t.right):
            acc.add("other")
        _usage(t.then, name, acc)
        _usage(t.orelse, name, acc)
    elif isinstance(t, New):
        if t.name != name:
            _usage(t.body, name, acc)
    elif isinstance(t, Par):
        _usage(t.left, name, acc)
        _usage(t.right, name, acc)
    elif isinstance(t, Rec):
        _usage(t.body, name, acc)


def collect_garbage_flat(flat: Flat) -> Flat:
    """Drop code blocked forever on a private channel and restrictions nobody uses"""
    binders = list(flat.binders)
    components = list(flat.components)
    changed = True
    while changed:
        changed = False
        for name, rtype in list(binders):
            usage: Set[str] = set()
            for _, t in components:
                _usage(t, name, usage)
            if not usage:
                binders.remove((name, rtype))
                changed = True
                continue
            if usage == {"in"} or usage == {"out"}:
                kind = Input if usage == {"in"} else Output
                kept = [(o, t) for o, t in components
                        if not (isinstance(t, kind) and _subject_name(t.chan) == name)]
                if len(kept) != len(components):
                    components = kept
                    changed = True
    return Flat(tuple(binders), tuple(components))


@lru_cache(maxsize=65536)
def collect_garbage(m: System) -> System:
    return canonical_flat(collect_garbage_flat(flatten(m, beta=True))).to_system()


@lru_cache(maxsize=16384)
def unwind_normalize(m: System) -> System:
    """Beta-normal form with every top-level recursion unfolded once; used for template matching"""
    current = collect_garbage(m)
    for _ in range(UNWIND_LIMIT):
        flat = flatten(current)
        if not any(isinstance(t, Rec) for _, t in flat.components):
            break
        unfolded = tuple((o, unfold(t) if isinstance(t, Rec) else t) for o, t in flat.components)
        following = collect_garbage(Flat(flat.binders, unfolded).to_system())
        if canonical_key(following) == canonical_key(current):
            break
        current = following
    return current
