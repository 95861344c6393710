"""Operational semantics of Picost configurations.

States are kept normalized (beta-normal, garbage-collected, canonical, dynamic names that
are no longer free forgotten), so syntactic equality of state keys decides identity.
Recursion is unwound lazily by a weight-zero tau step. Every transition carries the record
delta as its weight.
"""

from __future__ import annotations

import hashlib
import itertools
import logging
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Callable, Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Set, Tuple, Union

from . import config
from .costenv import (
    Configuration, CostEnv, charge, forget, format_funds, funds_view, register, register_all, transfer,
)
from .errors import EnvError
from .syntax import (
    Binder, Ctor, Flat, Input, Name, NameVal, Output, Owner, Rec, ResType, Thread, Value,
    TupleVal, canonical_key, collect_garbage, flatten, format_value, free_names, fresh_name, rename_thread,
    substitute_many, system_names, thread_names, unfold, unwind_normalize,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Labels and transitions
# ---------------------------------------------------------------------------


def _format_payload(payload: Sequence[Value]) -> str:
    return ", ".join(format_value(v) for v in payload)


def _format_bound(bound: Sequence[Binder]) -> str:
    if not bound:
        return ""
    return "(new " + ", ".join(f"{n}:{t}" for n, t in bound) + ") "


@dataclass(frozen=True)
class Tau:
    def __str__(self) -> str:
        return "tau"


TAU = Tau()


@dataclass(frozen=True)
class InputLabel:
    user: Owner
    bound: Tuple[Binder, ...]
    chan: Name
    payload: Tuple[Value, ...]
    provider: Owner

    def __str__(self) -> str:
        return f"[{self.user}>{self.provider}] {_format_bound(self.bound)}{self.chan}?({_format_payload(self.payload)})"


@dataclass(frozen=True)
class OutputLabel:
    user: Owner
    bound: Tuple[Binder, ...]
    chan: Name
    payload: Tuple[Value, ...]
    provider: Owner

    def __str__(self) -> str:
        return f"[{self.user}>{self.provider}] {_format_bound(self.bound)}{self.chan}!({_format_payload(self.payload)})"


@dataclass(frozen=True)
class AbsInput:
    user: Owner
    bound: Tuple[Binder, ...]
    chan: Name
    payload: Tuple[Value, ...]

    def __str__(self) -> str:
        return f"[{self.user}>] {_format_bound(self.bound)}{self.chan}?({_format_payload(self.payload)})"


@dataclass(frozen=True)
class AbsOutput:
    bound: Tuple[Name, ...]
    chan: Name
    payload: Tuple[Value, ...]
    provider: Owner

    def __str__(self) -> str:
        extruded = f"(new {', '.join(str(n) for n in self.bound)}) " if self.bound else ""
        return f"[>{self.provider}] {extruded}{self.chan}!({_format_payload(self.payload)})"


@dataclass(frozen=True)
class FundLabel:
    user: Owner
    amount: int
    provider: Owner

    def __str__(self) -> str:
        return f"fund[{self.user}>{self.provider}]({self.amount})"


Label = Union[Tau, InputLabel, OutputLabel, AbsInput, AbsOutput, FundLabel]


@dataclass(frozen=True)
class WeightedTransition:
    """label, weight = record delta, target; channel names the communication subject when there is one"""

    label: Label
    weight: int
    target: Configuration
    channel: Optional[Name] = field(default=None, compare=False)


@dataclass(frozen=True)
class ActionOptions:
    """Finite instantiation of input payloads.

    With inputs=None the candidates are the registered names, the universe and one fresh
    name per palette type (palette None means the environment's own types plus (0,0)).
    An explicit inputs tuple replaces all of them and disables fresh inputs.
    """

    universe: Tuple[Value, ...] = ()
    palette: Optional[Tuple[ResType, ...]] = None
    fresh_inputs: bool = True
    inputs: Optional[Tuple[Value, ...]] = None
    # names no fresh input or extruded name may take, e.g. those of the other side of a comparison
    reserved: FrozenSet[Name] = frozenset()


@dataclass(frozen=True)
class ExplorationBounds:
    tau_depth: int = config.TAU_DEPTH
    weight_cap: int = config.WEIGHT_CAP
    state_cap: int = config.STATE_CAP
    credit_cap: int = config.CREDIT_CAP
    allow_negative_credit: bool = False


DEFAULT_OPTIONS = ActionOptions()


# ---------------------------------------------------------------------------
# Normal forms
# ---------------------------------------------------------------------------


def normalize(c: Configuration) -> Configuration:
    """Beta-normal, garbage-collected, canonical system; stale dynamic names forgotten"""
    system = collect_garbage(c.system)
    return Configuration(forget(c.env, free_names(system)), system)


def state_key(c: Configuration) -> Hashable:
    """Identity of a semantic state up to renaming of bound names; the record is history, not state"""
    return (canonical_key(c.system, c.env.scoped_bases), c.env.static_view)


def describe_state(c: Configuration) -> str:
    from .frontend import pretty_system
    return f"{pretty_system(c.system)}  <{c.env.describe()}>"


def _prepared(c: Configuration) -> Flat:
    """Flat form whose restriction binders are disjoint from the registered names"""
    flat = flatten(c.system)
    clashes = [n for n, _ in flat.binders if n in c.env.domain]
    if not clashes:
        return flat
    avoid = set(c.env.domain) | set(system_names(c.system))
    mapping: Dict[Name, Name] = {}
    for name in clashes:
        target = fresh_name(name.base, avoid)
        avoid.add(target)
        mapping[name] = target
    binders = tuple((mapping.get(n, n), t) for n, t in flat.binders)
    components = tuple((o, rename_thread(t, mapping)) for o, t in flat.components)
    return Flat(binders, components)


def _subject(t: Thread) -> Optional[Name]:
    return t.chan.name if isinstance(t, (Input, Output)) and isinstance(t.chan, NameVal) else None


def _replace(components: Sequence[Tuple[Owner, Thread]], updates: Dict[int, Thread]) -> Tuple:
    return tuple((o, updates.get(i, t)) for i, (o, t) in enumerate(components))


def _flat_names(flat: Flat) -> Set[Name]:
    names = {n for n, _ in flat.binders}
    for _, t in flat.components:
        names |= thread_names(t)
    return names


def _drop_name(env: CostEnv, name: Name) -> CostEnv:
    return forget(env, env.domain - {name})


def _settle(env: CostEnv, flat: Flat) -> Configuration:
    return normalize(Configuration(env, flat.to_system()))


def _sorted_unique(transitions: Iterable[WeightedTransition]) -> Tuple[WeightedTransition, ...]:
    seen: Set[Tuple] = set()
    unique = []
    for tr in transitions:
        ident = (tr.label, tr.weight, state_key(tr.target))
        if ident in seen:
            continue
        seen.add(ident)
        unique.append(tr)
    unique.sort(key=lambda tr: (str(tr.label), tr.weight, canonical_key(tr.target.system), tr.target.env.describe()))
    return tuple(unique)


def _unwindings(c: Configuration, flat: Flat) -> List[WeightedTransition]:
    steps = []
    for i, (_, t) in enumerate(flat.components):
        if isinstance(t, Rec):
            target = _settle(c.env, Flat(flat.binders, _replace(flat.components, {i: unfold(t)})))
            steps.append(WeightedTransition(TAU, 0, target))
    return steps


def _communicate(c: Configuration, flat: Flat, out_index: int, in_index: int) -> Optional[WeightedTransition]:
    """Rule (comm) between two top-level components, under rule (new) when the channel is restricted.

    Each continuation keeps its own owner: the sender's stays with the user, the
    instantiated input body with the provider, exactly as the output and input
    actions leave them.
    """
    user, out = flat.components[out_index]
    provider, inp = flat.components[in_index]
    a = _subject(out)
    if a is None or a != _subject(inp) or len(out.args) != len(inp.params):
        return None
    scope = dict(flat.binders)
    env = c.env
    if a in scope:
        env = register(env, a, scope[a])
    elif a not in env.domain:
        return None
    charged = charge(env, user, a, provider)
    if charged is None:
        return None
    if a in scope:
        charged = _drop_name(charged, a)
    body = substitute_many(inp.body, dict(zip(inp.params, out.args)))
    target = _settle(charged, Flat(flat.binders, _replace(flat.components, {out_index: out.body,
                                                                                in_index: body})))
    return WeightedTransition(TAU, target.record - c.record, target, channel=a)


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16384)
def reductions(c: Configuration) -> Tuple[WeightedTransition, ...]:
    """All one-step reductions of a configuration, deterministic order"""
    flat = _prepared(c)
    steps = _unwindings(c, flat)
    components = flat.components
    for i, (_, t) in enumerate(components):
        if not isinstance(t, Output):
            continue
        for j, (_, s) in enumerate(components):
            if i != j and isinstance(s, Input):
                step = _communicate(c, flat, i, j)
                if step is not None:
                    steps.append(step)
    return _sorted_unique(steps)


# ---------------------------------------------------------------------------
# Concrete actions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Offer:
    index: int
    owner: Owner
    chan: Name
    thread: Thread


def _offers(flat: Flat) -> Tuple[List[_Offer], List[_Offer]]:
    inputs, outputs = [], []
    for i, (o, t) in enumerate(flat.components):
        chan = _subject(t)
        if chan is None:
            continue
        (inputs if isinstance(t, Input) else outputs).append(_Offer(i, o, chan, t))
    return inputs, outputs


def _ordered_names(values: Iterable[Value]) -> List[Name]:
    order: List[Name] = []

    def visit(v: Value) -> None:
        if isinstance(v, NameVal):
            if v.name not in order:
                order.append(v.name)
        elif isinstance(v, Ctor):
            visit(v.arg)
        elif isinstance(v, TupleVal):
            for item in v.items:
                visit(item)

    for v in values:
        visit(v)
    return order


_FRESH = object()
# Base of every name the environment learns, unless the name belongs to a scoped resource
FRESH_BASE = "fresh"


def _learned_name(base: str, env: CostEnv, taken: Set[Name]) -> Name:
    """Name under which a fresh input or an extruded private name enters the environment"""
    name = fresh_name(base if base in env.scoped_bases else FRESH_BASE, taken)
    taken.add(name)
    return name


def _input_candidates(c: Configuration, options: ActionOptions) -> Tuple[List[Value], List[ResType]]:
    if options.inputs is not None:
        known = [v for v in options.inputs if all(n in c.env.domain for n in _ordered_names([v]))]
        return known, []
    known: List[Value] = [NameVal(n) for n in sorted(c.env.domain)]
    known.extend(v for v in options.universe if v not in known)
    if not options.fresh_inputs:
        return known, []
    palette = options.palette if options.palette is not None else tuple(sorted(c.env.palette()))
    return known, list(palette)


def _input_actions(c: Configuration, flat: Flat, offer: _Offer, options: ActionOptions) -> List[WeightedTransition]:
    inp: Input = offer.thread
    known, palette = _input_candidates(c, options)
    choices: List[Any] = list(known) + [(_FRESH, t) for t in palette]
    avoid = set(c.env.domain) | _flat_names(flat) | options.reserved
    steps = []
    for combo in itertools.product(choices, repeat=len(inp.params)):
        taken = set(avoid)
        payload: List[Value] = []
        bound: List[Binder] = []
        for choice in combo:
            if isinstance(choice, tuple) and choice and choice[0] is _FRESH:
                name = _learned_name(FRESH_BASE, c.env, taken)
                bound.append((name, choice[1]))
                payload.append(NameVal(name))
            else:
                payload.append(choice)
        env = register_all(c.env, bound)
        body = substitute_many(inp.body, dict(zip(inp.params, payload)))
        after = Flat(flat.binders, _replace(flat.components, {offer.index: body}))
        for user in sorted(env.owner_set):
            charged = charge(env, user, offer.chan, offer.owner)
            if charged is None:
                continue
            target = _settle(charged, after)
            label = InputLabel(user, tuple(bound), offer.chan, tuple(payload), offer.owner)
            steps.append(WeightedTransition(label, target.record - c.record, target, channel=offer.chan))
    return steps


def _output_actions(c: Configuration, flat: Flat, offer: _Offer, options: ActionOptions) -> List[WeightedTransition]:
    scope = dict(flat.binders)
    private = [n for n in _ordered_names(offer.thread.args) if n in scope]
    taken = set(c.env.domain) | (_flat_names(flat) - set(private)) | options.reserved
    mapping = {n: _learned_name(n.base, c.env, taken) for n in private}
    extruded = tuple((mapping[n], scope[n]) for n in private)
    env = register_all(c.env, extruded)
    remaining = tuple(b for b in flat.binders if b[0] not in mapping)
    components = tuple((o, rename_thread(t, mapping)) for o, t in flat.components)
    out: Output = components[offer.index][1]
    after = Flat(remaining, _replace(components, {offer.index: out.body}))
    steps = []
    for provider in sorted(env.owner_set):
        charged = charge(env, offer.owner, offer.chan, provider)
        if charged is None:
            continue
        target = _settle(charged, after)
        label = OutputLabel(offer.owner, extruded, offer.chan, tuple(out.args), provider)
        steps.append(WeightedTransition(label, target.record - c.record, target, channel=offer.chan))
    return steps


@lru_cache(maxsize=16384)
def concrete_actions(c: Configuration, options: ActionOptions = DEFAULT_OPTIONS) -> Tuple[WeightedTransition, ...]:
    """tau, input and output transitions with every owner annotation whose charge is payable"""
    flat = _prepared(c)
    scope = dict(flat.binders)
    inputs, outputs = _offers(flat)
    steps = _unwindings(c, flat)
    for out in outputs:
        for inp in inputs:
            if out.chan == inp.chan and out.index != inp.index:
                step = _communicate(c, flat, out.index, inp.index)
                if step is not None:
                    steps.append(step)
    for inp in inputs:
        if inp.chan not in scope and inp.chan in c.env.domain:
            steps.extend(_input_actions(c, flat, inp, options))
    for out in outputs:
        if out.chan not in scope and out.chan in c.env.domain:
            steps.extend(_output_actions(c, flat, out, options))
    return _sorted_unique(steps)


def fund_quanta(env: CostEnv) -> FrozenSet[int]:
    return frozenset(r.rtype.use_cost for r in env.resources) | {0}


@lru_cache(maxsize=16384)
def abstract_actions(c: Configuration, observers: FrozenSet[Owner], quanta: Optional[FrozenSet[int]] = None,
                     options: ActionOptions = DEFAULT_OPTIONS) -> Tuple[WeightedTransition, ...]:
    """Owner-erased actions visible to the observers, plus fund transfers among them"""
    unknown = [o for o in observers if o not in c.env.owner_set]
    if unknown:
        raise EnvError(f"Observer {unknown[0]} has no funds entry")
    steps = []
    for tr in concrete_actions(c, options):
        label = tr.label
        if isinstance(label, Tau):
            steps.append(tr)
        elif isinstance(label, OutputLabel) and label.provider in observers:
            abstract = AbsOutput(tuple(n for n, _ in label.bound), label.chan, label.payload, label.provider)
            steps.append(replace(tr, label=abstract))
        elif isinstance(label, InputLabel) and label.user in observers:
            steps.append(replace(tr, label=AbsInput(label.user, label.bound, label.chan, label.payload)))
    amounts = sorted(fund_quanta(c.env) if quanta is None else quanta)
    for user in sorted(observers):
        for provider in sorted(observers):
            for k in amounts:
                moved = transfer(c.env, user, k, provider)
                if moved is not None:
                    steps.append(WeightedTransition(FundLabel(user, k, provider), 0, Configuration(moved, c.system)))
    return _sorted_unique(steps)


# ---------------------------------------------------------------------------
# Weak moves
# ---------------------------------------------------------------------------


Step = Tuple[Any, int, Any]


@dataclass
class WeakMoves:
    moves: Dict[Any, List[Tuple[int, Any]]]
    truncated: bool = False


def weak_moves(state: Any, steps: Callable[[Any], Sequence[Step]], key: Callable[[Any], Hashable],
               bounds: ExplorationBounds) -> WeakMoves:
    """Weak moves of any weighted LTS: tau* lambda tau* with summed weights; tau includes staying put"""
    truncated = False

    def tau_star(start: Any) -> List[Tuple[int, Any]]:
        nonlocal truncated
        seen = {(key(start), 0)}
        reached = [(0, start)]
        frontier = [(start, 0, 0)]
        while frontier:
            current, weight, depth = frontier.pop(0)
            for label, w, target in steps(current):
                if not isinstance(label, Tau):
                    continue
                if depth >= bounds.tau_depth:
                    truncated = True
                    break
                total = weight + w
                if abs(total) > bounds.weight_cap:
                    truncated = True
                    continue
                ident = (key(target), total)
                if ident in seen:
                    continue
                if len(seen) >= bounds.state_cap:
                    truncated = True
                    continue
                seen.add(ident)
                reached.append((total, target))
                frontier.append((target, total, depth + 1))
        return reached

    before = tau_star(state)
    moves: Dict[Any, List[Tuple[int, Any]]] = {TAU: list(before)}
    after_cache: Dict[Hashable, List[Tuple[int, Any]]] = {}
    for w0, s0 in before:
        for label, w1, s1 in steps(s0):
            if isinstance(label, Tau):
                continue
            k1 = key(s1)
            if k1 not in after_cache:
                after_cache[k1] = tau_star(s1)
            bucket = moves.setdefault(label, [])
            for w2, s2 in after_cache[k1]:
                bucket.append((w0 + w1 + w2, s2))
    for label, bucket in moves.items():
        unique: Dict[Tuple[int, Hashable], Tuple[int, Any]] = {}
        for w, s in bucket:
            unique.setdefault((w, key(s)), (w, s))
        moves[label] = list(unique.values())
    return WeakMoves(moves, truncated)


def _concrete_steps(options: ActionOptions) -> Callable[[Configuration], List[Step]]:
    def steps(c: Configuration) -> List[Step]:
        return [(tr.label, tr.weight, tr.target) for tr in concrete_actions(c, options)]
    return steps


def weak_closure(c: Configuration, bounds: Optional[ExplorationBounds] = None,
                 options: ActionOptions = DEFAULT_OPTIONS) -> WeakMoves:
    """Weak concrete moves of a configuration"""
    return weak_moves(normalize(c), _concrete_steps(options), state_key, bounds or ExplorationBounds())


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunStrategy:
    """avoid: channel bases never used; require: bases the run must use; until_cycle: stop back at the start"""

    avoid: FrozenSet[str] = frozenset()
    require: FrozenSet[str] = frozenset()
    until_cycle: bool = False


@dataclass
class TraceStep:
    label: Label
    weight: int
    channel: Optional[Name]
    config: Configuration


@dataclass
class Trace:
    initial: Configuration
    steps: List[TraceStep]
    complete: bool
    truncated: bool = False

    @property
    def final(self) -> Configuration:
        return self.steps[-1].config if self.steps else self.initial

    @property
    def total_weight(self) -> int:
        return sum(s.weight for s in self.steps)


def run(c: Configuration, steps: int = config.RUN_STEPS, strategy: RunStrategy = RunStrategy()) -> Trace:
    """First maximal run (depth-first, deterministic) satisfying the strategy"""
    start_time = time.time()
    start = normalize(c)
    keep = start.env.scoped_bases
    home = canonical_key(unwind_normalize(start.system), keep)
    failed: Set[Tuple] = set()
    path: List[WeightedTransition] = []
    on_path: Set[Hashable] = {state_key(start)}
    hit_limit = False

    def finished(used: FrozenSet[str]) -> bool:
        return strategy.require <= used

    def search(cfg: Configuration, used: FrozenSet[str]) -> bool:
        nonlocal hit_limit
        progressed = any(t.channel is not None for t in path)
        if strategy.until_cycle and progressed and canonical_key(unwind_normalize(cfg.system), keep) == home:
            return finished(used)
        enabled = reductions(cfg)
        allowed = [t for t in enabled if t.channel is None or t.channel.base not in strategy.avoid]
        if not enabled:
            return finished(used) and not strategy.until_cycle
        if len(path) >= steps:
            hit_limit = True
            return True
        memo = (state_key(cfg), used)
        if memo in failed:
            return False
        for t in allowed:
            target_key = state_key(t.target)
            if target_key in on_path and not strategy.until_cycle:
                continue
            if target_key in on_path and canonical_key(unwind_normalize(t.target.system), keep) != home:
                continue
            path.append(t)
            on_path.add(target_key)
            more = {t.channel.base} & strategy.require if t.channel is not None else set()
            if search(t.target, used | frozenset(more)):
                return True
            path.pop()
            on_path.discard(target_key)
        failed.add(memo)
        return False

    complete = search(start, frozenset())
    trace = Trace(start, [TraceStep(t.label, t.weight, t.channel, t.target) for t in path],
                  complete=complete and not hit_limit, truncated=hit_limit)
    elapsed = (time.time() - start_time) * 1000
    logger.info(f"Completed run of {len(trace.steps)} steps (record {trace.final.record}) in {elapsed:.2f}ms")
    return trace


def trace_to_json(trace: Trace) -> List[Dict[str, Any]]:
    return [
        {
            "label": str(step.label),
            "weight": step.weight,
            "record_after": step.config.record,
            "owner_funds_after": funds_view(step.config.env),
        }
        for step in trace.steps
    ]


# ---------------------------------------------------------------------------
# Barbs
# ---------------------------------------------------------------------------


@dataclass
class BarbReport:
    barbs: FrozenSet[Tuple[Name, str]]
    truncated: bool


def _exposed(c: Configuration) -> Set[Tuple[Name, str]]:
    flat = _prepared(c)
    scope = dict(flat.binders)
    owners = sorted(c.env.owner_set)
    exposed = set()
    for owner, t in flat.components:
        a = _subject(t)
        if a is None or a in scope or a not in c.env.domain:
            continue
        if isinstance(t, Input) and any(charge(c.env, u, a, owner) is not None for u in owners):
            exposed.add((a, "?"))
        if isinstance(t, Output) and any(charge(c.env, owner, a, p) is not None for p in owners):
            exposed.add((a, "!"))
    return exposed


def barbs(c: Configuration, depth: int = config.BARB_DEPTH) -> BarbReport:
    """Payable unrestricted prefixes of configurations reachable within depth reductions"""
    start = normalize(c)
    seen = {state_key(start)}
    frontier = [start]
    found: Set[Tuple[Name, str]] = set()
    truncated = False
    for level in range(depth + 1):
        following = []
        for cfg in frontier:
            found |= _exposed(cfg)
            successors = reductions(cfg)
            if level == depth:
                truncated = truncated or any(state_key(t.target) not in seen for t in successors)
                continue
            for t in successors:
                k = state_key(t.target)
                if k not in seen:
                    seen.add(k)
                    following.append(t.target)
        frontier = following
        if not frontier:
            break
    return BarbReport(frozenset(found), truncated)


# ---------------------------------------------------------------------------
# LTS fragments and DOT
# ---------------------------------------------------------------------------


@dataclass
class Lts:
    initial: Hashable
    states: Dict[Hashable, Configuration]
    edges: List[Tuple[Hashable, str, int, Hashable]]
    truncated: bool = False


def explore(c: Configuration, bounds: Optional[ExplorationBounds] = None,
            actions: Optional[Callable[[Configuration], Sequence[WeightedTransition]]] = None) -> Lts:
    """Breadth-first LTS fragment up to the state cap"""
    bounds = bounds or ExplorationBounds()
    actions = actions or concrete_actions
    start = normalize(c)
    initial = state_key(start)
    states = {initial: start}
    edges = []
    queue = [start]
    truncated = False
    while queue:
        cfg = queue.pop(0)
        source = state_key(cfg)
        for tr in actions(cfg):
            target = state_key(tr.target)
            if target not in states:
                if len(states) >= bounds.state_cap:
                    truncated = True
                    continue
                states[target] = tr.target
                queue.append(tr.target)
            edges.append((source, str(tr.label), tr.weight, target))
    if truncated:
        logger.warning(f"LTS exploration stopped at the state cap of {bounds.state_cap}")
    return Lts(initial, states, edges, truncated)


def _digest(key: Hashable) -> str:
    return hashlib.sha1(repr(key).encode("utf-8")).hexdigest()[:10]


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(lts: Lts) -> str:
    lines = ["digraph picost {", "  rankdir=LR;", "  node [shape=box, fontname=\"monospace\"];"]
    for key in sorted(lts.states, key=_digest):
        cfg = lts.states[key]
        shape = ", peripheries=2" if key == lts.initial else ""
        lines.append(f"  n{_digest(key)} [label=\"{_digest(key)}\\nrec={cfg.record}\"{shape}];")
    for source, label, weight, target in sorted(lts.edges, key=lambda e: (_digest(e[0]), e[1], e[2], _digest(e[3]))):
        lines.append(f"  n{_digest(source)} -> n{_digest(target)} [label=\"{_dot_escape(label)}@{weight}\"];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def owner_funds_line(env: CostEnv) -> str:
    return ", ".join(f"{o}={format_funds(f)}" for o, f in env.owners)
