"""Amortised weighted bisimulation: weighted LTS views, the credit game and witness families.

check_amortised computes, for every pair of states reachable in the game arena, the least
credit from which the defender survives (a greatest fixpoint computed from below).
Thresholds above the credit cap become infinite. Defender answers are genuine weak moves,
so a Proven verdict never depends on the exploration bounds.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Hashable, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from . import config
from .costenv import (
    EXTERNAL, INF, Configuration, CostEnv, ZERO_TYPE, format_funds, register_all, with_external,
)
from .errors import EnvError, WitnessError
from .semantics import (
    DEFAULT_OPTIONS, ActionOptions, ExplorationBounds, Step, WeakMoves, abstract_actions, concrete_actions,
    describe_state, normalize, reductions, state_key, weak_moves,
)
from .syntax import (
    Owner, System, Value, canonical_key, free_names, substitute_system, system_names, unwind_normalize,
)

logger = logging.getLogger(__name__)

INF_CREDIT = math.inf


# ---------------------------------------------------------------------------
# Views
# ---------------------------------------------------------------------------


class WltsView(ABC):
    """A weighted LTS as seen by the game: strong steps, weak steps, node condition"""

    def __init__(self, bounds: Optional[ExplorationBounds] = None):
        self.bounds = bounds or ExplorationBounds()
        self._strong: Dict[Hashable, List[Step]] = {}
        self._weak: Dict[Hashable, WeakMoves] = {}

    @abstractmethod
    def steps(self, state: Any) -> Sequence[Step]:
        """Strong transitions (label, weight, target)"""

    def key(self, state: Any) -> Hashable:
        return state_key(state)

    def admissible(self, left: Any, right: Any) -> bool:
        return True

    def describe(self, state: Any) -> str:
        return describe_state(state)

    def strong_steps(self, state: Any) -> List[Step]:
        k = self.key(state)
        if k not in self._strong:
            self._strong[k] = list(self.steps(state))
        return self._strong[k]

    def weak_steps(self, state: Any) -> WeakMoves:
        k = self.key(state)
        if k not in self._weak:
            self._weak[k] = weak_moves(state, self.strong_steps, self.key, self.bounds)
        return self._weak[k]


class ConcreteView(WltsView):
    """Full concrete actions, owner annotations included"""

    def __init__(self, options: ActionOptions = DEFAULT_OPTIONS, bounds: Optional[ExplorationBounds] = None):
        super().__init__(bounds)
        self.options = options

    def steps(self, state: Configuration) -> Sequence[Step]:
        return [(tr.label, tr.weight, tr.target) for tr in concrete_actions(state, self.options)]


class AbstractView(WltsView):
    """Owner-erased actions of the observers; paired states must agree on observer funds"""

    def __init__(self, observers: Iterable[Owner], quanta: Optional[FrozenSet[int]] = None,
                 options: ActionOptions = DEFAULT_OPTIONS, bounds: Optional[ExplorationBounds] = None):
        super().__init__(bounds)
        self.observers = frozenset(observers)
        self.quanta = quanta
        self.options = options

    def steps(self, state: Configuration) -> Sequence[Step]:
        return [(tr.label, tr.weight, tr.target)
                for tr in abstract_actions(state, self.observers, self.quanta, self.options)]

    def admissible(self, left: Configuration, right: Configuration) -> bool:
        return all(left.env.funds(o) == right.env.funds(o) for o in self.observers)


class TauView(WltsView):
    """Reductions only; checking over it decides cost improvement"""

    def steps(self, state: Configuration) -> Sequence[Step]:
        return [(tr.label, tr.weight, tr.target) for tr in reductions(state)]


class ExplicitWlts(WltsView):
    """Hand-built weighted LTS over hashable states; tau steps use semantics.TAU"""

    def __init__(self, transitions: Mapping[Hashable, Sequence[Step]], bounds: Optional[ExplorationBounds] = None):
        super().__init__(bounds)
        self.transitions = {s: list(ts) for s, ts in transitions.items()}

    def steps(self, state: Hashable) -> Sequence[Step]:
        return self.transitions.get(state, [])

    def key(self, state: Hashable) -> Hashable:
        return state

    def describe(self, state: Hashable) -> str:
        return str(state)


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CreditedPair:
    left: Any
    right: Any
    credit: float


@dataclass
class GameMove:
    """One round of a losing defence: the challenge, the best answer and what it would need"""

    side: str
    label: str
    weight: int
    response_weight: Optional[int]
    required: float
    left: str
    right: str


@dataclass
class Verdict:
    required: float
    pairs: int
    truncated: bool

    @property
    def kind(self) -> str:
        return type(self).__name__

    @property
    def ok(self) -> bool:
        return False


@dataclass
class Proven(Verdict):
    witness: List[CreditedPair] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return True


@dataclass
class RefutedWithinBounds(Verdict):
    cause: List[GameMove] = field(default_factory=list)


@dataclass
class Inconclusive(Verdict):
    reason: str = ""


def format_credit(value: float) -> str:
    if value == INF_CREDIT:
        return "inf"
    if value == -INF_CREDIT:
        return "-inf"
    return str(int(value))


# ---------------------------------------------------------------------------
# The credit game
# ---------------------------------------------------------------------------


@dataclass
class _Challenge:
    side: str
    label: Any
    weight: int
    responses: List[Tuple[int, Tuple[Hashable, Hashable]]]


class _Arena:
    """Pairs reachable from the initial pair, with their challenges and thresholds"""

    def __init__(self, view: WltsView, bounds: ExplorationBounds):
        self.view = view
        self.bounds = bounds
        self.floor = -INF_CREDIT if bounds.allow_negative_credit else 0
        self.states: Dict[Tuple[Hashable, Hashable], Tuple[Any, Any]] = {}
        self.challenges: Dict[Tuple[Hashable, Hashable], List[_Challenge]] = {}
        self.dependents: Dict[Tuple[Hashable, Hashable], Set[Tuple[Hashable, Hashable]]] = {}
        self.blocked: Set[Tuple[Hashable, Hashable]] = set()
        self.unexplored: Set[Tuple[Hashable, Hashable]] = set()
        self.threshold: Dict[Tuple[Hashable, Hashable], float] = {}
        self.truncated = False

    def pair_key(self, left: Any, right: Any) -> Tuple[Hashable, Hashable]:
        return (self.view.key(left), self.view.key(right))

    def build(self, left: Any, right: Any) -> Tuple[Hashable, Hashable]:
        root = self.pair_key(left, right)
        self.states[root] = (left, right)
        queue = deque([root])
        while queue:
            pair = queue.popleft()
            s, t = self.states[pair]
            if not self.view.admissible(s, t):
                self.blocked.add(pair)
                self.challenges[pair] = []
                continue
            weak_left = self.view.weak_steps(s)
            weak_right = self.view.weak_steps(t)
            self.truncated = self.truncated or weak_left.truncated or weak_right.truncated
            challenges = []
            for label, v, s2 in self.view.strong_steps(s):
                responses = [(w, self._reach(s2, t2, pair, queue)) for w, t2 in weak_right.moves.get(label, [])]
                challenges.append(_Challenge("left", label, v, responses))
            for label, w, t2 in self.view.strong_steps(t):
                responses = [(v, self._reach(s2, t2, pair, queue)) for v, s2 in weak_left.moves.get(label, [])]
                challenges.append(_Challenge("right", label, w, responses))
            self.challenges[pair] = challenges
        return root

    def _reach(self, s: Any, t: Any, parent: Tuple[Hashable, Hashable], queue: deque) -> Tuple[Hashable, Hashable]:
        pair = self.pair_key(s, t)
        self.dependents.setdefault(pair, set()).add(parent)
        if pair not in self.states and pair not in self.unexplored:
            if len(self.states) >= self.bounds.state_cap:
                self.unexplored.add(pair)
                self.truncated = True
            else:
                self.states[pair] = (s, t)
                queue.append(pair)
        return pair

    def value(self, pair: Tuple[Hashable, Hashable]) -> float:
        if pair in self.unexplored:
            return INF_CREDIT
        return self.threshold.get(pair, self.floor)

    def requirement(self, challenge: _Challenge) -> Tuple[float, Optional[int], Optional[Tuple]]:
        """Least credit meeting the challenge, with the answering weight and successor"""
        best: Tuple[float, Optional[int], Optional[Tuple]] = (INF_CREDIT, None, None)
        for answer, successor in challenge.responses:
            if challenge.side == "left":
                need = self.value(successor) - challenge.weight + answer
            else:
                need = self.value(successor) - answer + challenge.weight
            if need < best[0]:
                best = (need, answer, successor)
        return best

    def evaluate(self, pair: Tuple[Hashable, Hashable]) -> float:
        if pair in self.blocked or pair in self.unexplored:
            return INF_CREDIT
        value = self.floor
        for challenge in self.challenges[pair]:
            value = max(value, self.requirement(challenge)[0])
        if value > self.bounds.credit_cap:
            return INF_CREDIT
        return value

    def solve(self) -> None:
        pending = deque(self.states)
        queued = set(pending)
        while pending:
            pair = pending.popleft()
            queued.discard(pair)
            value = self.evaluate(pair)
            if value > self.value(pair):
                self.threshold[pair] = value
                for parent in self.dependents.get(pair, ()):
                    if parent in self.states and parent not in queued:
                        pending.append(parent)
                        queued.add(parent)

    def cause(self, root: Tuple[Hashable, Hashable], limit: int = 12) -> List[GameMove]:
        moves: List[GameMove] = []
        pair = root
        visited: Set[Tuple[Hashable, Hashable]] = set()
        while pair in self.states and pair not in visited and len(moves) < limit:
            visited.add(pair)
            s, t = self.states[pair]
            if pair in self.blocked:
                moves.append(GameMove("node", "observer funds differ", 0, None, INF_CREDIT,
                                      self.view.describe(s), self.view.describe(t)))
                break
            worst = None
            for challenge in self.challenges[pair]:
                need, answer, successor = self.requirement(challenge)
                if worst is None or need > worst[0]:
                    worst = (need, answer, successor, challenge)
            if worst is None:
                break
            need, answer, successor, challenge = worst
            moves.append(GameMove(challenge.side, str(challenge.label), challenge.weight, answer, need,
                                  self.view.describe(s), self.view.describe(t)))
            if successor is None:
                break
            pair = successor
        return moves


def check_amortised(view: WltsView, s: Any, t: Any, n0: int,
                    bounds: Optional[ExplorationBounds] = None) -> Verdict:
    """Decide s below t at credit n0 inside the bounded arena"""
    bounds = bounds or view.bounds
    if n0 > bounds.credit_cap:
        raise ValueError(f"Credit {n0} exceeds the credit cap {bounds.credit_cap}")
    start_time = time.time()
    logger.info(f"Starting amortised check at credit {n0} with {type(view).__name__}")
    arena = _Arena(view, bounds)
    root = arena.build(s, t)
    arena.solve()
    required = arena.value(root)
    elapsed = (time.time() - start_time) * 1000
    logger.info(f"Completed amortised check over {len(arena.states)} pairs in {elapsed:.2f}ms "
                f"(required credit {format_credit(required)})")
    if required <= n0:
        witness = [CreditedPair(a, b, arena.value(p)) for p, (a, b) in arena.states.items()
                   if arena.value(p) != INF_CREDIT]
        return Proven(required, len(arena.states), arena.truncated, witness=witness)
    if arena.truncated:
        logger.warning("Amortised check truncated by exploration bounds; verdict inconclusive")
        return Inconclusive(required, len(arena.states), True,
                            reason="exploration bounds were hit before the defence could be settled")
    return RefutedWithinBounds(required, len(arena.states), False, cause=arena.cause(root))


def naive_verify(view: WltsView, witness: Sequence[CreditedPair]) -> List[str]:
    """Check the transfer clauses directly on a witness; returns the violations"""
    floor = -INF_CREDIT if view.bounds.allow_negative_credit else 0
    index = {(view.key(p.left), view.key(p.right)): p.credit for p in witness}

    def holds(successor_left: Any, successor_right: Any, credit: float) -> bool:
        member = index.get((view.key(successor_left), view.key(successor_right)))
        return credit >= floor and member is not None and member <= credit

    violations = []
    for pair in witness:
        n = pair.credit
        if not view.admissible(pair.left, pair.right):
            violations.append(f"node condition fails at {view.describe(pair.left)} / {view.describe(pair.right)}")
            continue
        right_weak = view.weak_steps(pair.right)
        for label, v, s2 in view.strong_steps(pair.left):
            if not any(holds(s2, t2, n + v - w) for w, t2 in right_weak.moves.get(label, [])):
                violations.append(f"left {label}@{v} unanswered at credit {format_credit(n)}")
        left_weak = view.weak_steps(pair.left)
        for label, w, t2 in view.strong_steps(pair.right):
            if not any(holds(s2, t2, n + v - w) for v, s2 in left_weak.moves.get(label, [])):
                violations.append(f"right {label}@{w} unanswered at credit {format_credit(n)}")
    return violations


# ---------------------------------------------------------------------------
# Configuration-level checks
# ---------------------------------------------------------------------------


def shared_options(c: Configuration, d: Configuration, universe: Sequence[Value] = ()) -> ActionOptions:
    """Input instantiation shared by both sides so their labels can match"""
    palette = tuple(sorted(c.env.palette() | d.env.palette() | {ZERO_TYPE}))
    reserved = c.env.domain | d.env.domain | system_names(c.system) | system_names(d.system)
    return ActionOptions(universe=tuple(universe), palette=palette, reserved=reserved)


def check_configurations(c: Configuration, d: Configuration, n0: int,
                         bounds: Optional[ExplorationBounds] = None, universe: Sequence[Value] = ()) -> Verdict:
    """Amortised preorder over concrete actions"""
    view = ConcreteView(shared_options(c, d, universe), bounds)
    return check_amortised(view, normalize(c), normalize(d), n0)


def external_pair(c: Configuration, d: Configuration) -> Tuple[Configuration, Configuration]:
    return (Configuration(with_external(c.env, EXTERNAL), c.system),
            Configuration(with_external(d.env, EXTERNAL), d.system))


def check_abstract_preorder(c: Configuration, d: Configuration, n0: int, observers: Iterable[Owner],
                            bounds: Optional[ExplorationBounds] = None, quanta: Optional[FrozenSet[int]] = None,
                            universe: Sequence[Value] = ()) -> Verdict:
    """Amortised preorder over the observers' abstract actions, with the observer-funds node condition"""
    observers = frozenset(observers)
    for cfg in (c, d):
        missing = observers - cfg.env.owner_set
        if missing:
            raise EnvError(f"Observers without funds entry: {', '.join(sorted(o.id for o in missing))}")
    view = AbstractView(observers, quanta, shared_options(c, d, universe), bounds)
    return check_amortised(view, normalize(c), normalize(d), n0)


def check_cost_improving(c: Configuration, d: Configuration, n0: int,
                         bounds: Optional[ExplorationBounds] = None) -> Verdict:
    """Amortised preorder over reductions only"""
    return check_amortised(TauView(bounds), normalize(c), normalize(d), n0)


# ---------------------------------------------------------------------------
# Witness families
# ---------------------------------------------------------------------------


FundsTable = Tuple[Tuple[Owner, int], ...]


@dataclass(frozen=True)
class WitnessEntry:
    """Template pair; params range over carriers; members need credit >= min_credit"""

    name: str
    left: System
    right: System
    params: Tuple[Tuple[str, str], ...]
    min_credit: int
    env_left: str
    env_right: str
    min_funds_left: FundsTable = ()
    min_funds_right: FundsTable = ()
    initial: bool = False


@dataclass(frozen=True)
class FundSample:
    left: FundsTable = ()
    right: FundsTable = ()


@dataclass
class WitnessFamily:
    entries: List[WitnessEntry]
    carriers: Dict[str, Tuple[Value, ...]]
    envs: Dict[str, CostEnv]
    observers: Optional[FrozenSet[Owner]] = None
    inputs: Tuple[Value, ...] = ()
    fund_samples: Tuple[FundSample, ...] = ()
    quanta: Optional[FrozenSet[int]] = None


@dataclass
class EntryReport:
    name: str
    instances: int = 0
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass
class WitnessReport:
    """truncated: weak closures hit the bounds; closure_truncated: reached pairs beyond the cap went unchecked"""

    entries: List[EntryReport]
    truncated: bool = False
    reached: int = 0
    closure_truncated: bool = False

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries) and not self.truncated

    @property
    def failures(self) -> List[str]:
        return [f"{e.name}: {f}" for e in self.entries for f in e.failures]


def _env_matches(state: CostEnv, family: CostEnv, min_funds: Mapping[Owner, int]) -> bool:
    if state.owner_set != family.owner_set:
        return False
    for owner in family.owner_set:
        expected, actual = family.funds(owner), state.funds(owner)
        if expected == INF:
            if actual != INF:
                return False
        elif actual == INF or actual < min_funds.get(owner, 0):
            return False
    for resource in family.resources:
        if resource.name not in state.domain or state.resource(resource.name) != resource:
            return False
    return all(n in family.domain or n in state.dynamic for n in state.domain)


class _FamilyIndex:
    def __init__(self, family: WitnessFamily):
        self.family = family
        self.keep: FrozenSet[str] = frozenset().union(*(e.scoped_bases for e in family.envs.values()))
        self.members: Dict[Tuple[str, str], List[WitnessEntry]] = {}

    def _key(self, left: System, right: System) -> Tuple[str, str]:
        return (canonical_key(unwind_normalize(left), self.keep), canonical_key(unwind_normalize(right), self.keep))

    def add(self, entry: WitnessEntry, left: System, right: System) -> None:
        bucket = self.members.setdefault(self._key(left, right), [])
        if entry not in bucket:
            bucket.append(entry)

    def match(self, left: Configuration, right: Configuration, credit: float) -> Optional[WitnessEntry]:
        """Entry whose instances include the pair at this credit, if any"""
        for entry in self.members.get(self._key(left.system, right.system), []):
            if entry.min_credit > credit:
                continue
            if (_env_matches(left.env, self.family.envs[entry.env_left], dict(entry.min_funds_left))
                    and _env_matches(right.env, self.family.envs[entry.env_right], dict(entry.min_funds_right))):
                return entry
        return None


def _assignments(entry: WitnessEntry, carriers: Mapping[str, Tuple[Value, ...]]) -> List[Dict[str, Value]]:
    for _, carrier in entry.params:
        if carrier not in carriers:
            raise WitnessError(f"Entry {entry.name} uses unknown carrier {carrier}")
    params = [p for p, _ in entry.params]
    pools = [carriers[c] for _, c in entry.params]
    return [dict(zip(params, combo)) for combo in itertools.product(*pools)]


def _apply_sample(env: CostEnv, sample: FundsTable, minimum: FundsTable) -> Optional[CostEnv]:
    updates = {o: f for o, f in sample if o in env.owner_set and env.funds(o) != INF}
    env = env.with_funds(updates) if updates else env
    for owner, least in minimum:
        funds = env.funds(owner)
        if funds != INF and funds < least:
            return None
    return env


def _instantiate(template: System, mapping: Mapping[str, Value], env: CostEnv, entry: str) -> Configuration:
    system = unwind_normalize(substitute_system(template, mapping))
    missing = sorted(free_names(system) - env.domain)
    try:
        return Configuration(register_all(env, [(n, ZERO_TYPE) for n in missing]), system)
    except EnvError as e:
        raise WitnessError(f"Entry {entry} cannot be instantiated: {e}") from e


@dataclass(frozen=True)
class _Reached:
    entry: str
    left: Configuration
    right: Configuration
    credit: int


def verify_witness(family: WitnessFamily, bounds: Optional[ExplorationBounds] = None,
                   closure: int = config.WITNESS_CLOSURE) -> WitnessReport:
    """Check the transfer clauses for every instantiated entry at its minimal credit.

    Every successor pair an answer relies on is then checked as well, at the credit it
    is reached with, until no new pair turns up or closure pairs have been checked.
    """
    start_time = time.time()
    bounds = bounds or ExplorationBounds()
    options = ActionOptions(inputs=tuple(family.inputs), fresh_inputs=False)
    if family.observers is None:
        view: WltsView = ConcreteView(options, bounds)
    else:
        view = AbstractView(family.observers, family.quanta, options, bounds)
    for entry in family.entries:
        for name in (entry.env_left, entry.env_right):
            if name not in family.envs:
                raise WitnessError(f"Entry {entry.name} refers to unknown environment {name}")

    index = _FamilyIndex(family)
    plan: List[Tuple[WitnessEntry, Dict[str, Value]]] = []
    for entry in family.entries:
        for mapping in _assignments(entry, family.carriers):
            index.add(entry, substitute_system(entry.left, mapping), substitute_system(entry.right, mapping))
            plan.append((entry, mapping))

    reports: Dict[str, EntryReport] = {e.name: EntryReport(e.name) for e in family.entries}
    samples = family.fund_samples or (FundSample(),)
    checked: Dict[Tuple[Hashable, Hashable], float] = {}
    pending: deque = deque()
    truncated = False
    for entry, mapping in plan:
        report = reports[entry.name]
        for sample in samples:
            env_left = _apply_sample(family.envs[entry.env_left], sample.left, entry.min_funds_left)
            env_right = _apply_sample(family.envs[entry.env_right], sample.right, entry.min_funds_right)
            if env_left is None or env_right is None:
                continue
            left = _instantiate(entry.left, mapping, env_left, entry.name)
            right = _instantiate(entry.right, mapping, env_right, entry.name)
            report.instances += 1
            key = (view.key(left), view.key(right))
            checked[key] = min(checked.get(key, INF_CREDIT), entry.min_credit)
            failures, hit, reached = _check_member(view, index, left, right, entry.min_credit)
            truncated = truncated or hit
            pending.extend(reached)
            where = ", ".join(f"{k}={v}" for k, v in _describe_mapping(mapping).items())
            funds = _describe_sample(sample)
            report.failures.extend(f"[{where}{funds}] {f}" for f in failures)

    extra = 0
    closure_truncated = False
    while pending:
        pair = pending.popleft()
        key = (view.key(pair.left), view.key(pair.right))
        if checked.get(key, INF_CREDIT) <= pair.credit:
            continue
        if extra >= closure:
            closure_truncated = True
            break
        checked[key] = pair.credit
        extra += 1
        failures, hit, reached = _check_member(view, index, pair.left, pair.right, pair.credit)
        truncated = truncated or hit
        pending.extend(reached)
        where = f"reached, funds {_describe_funds(pair.left.env)}|{_describe_funds(pair.right.env)}"
        reports[pair.entry].failures.extend(f"[{where}] {f}" for f in failures)

    elapsed = (time.time() - start_time) * 1000
    result = WitnessReport(list(reports.values()), truncated, extra, closure_truncated)
    if closure_truncated:
        logger.warning(f"Witness closure stopped after {extra} reached pairs")
    logger.info(f"Completed witness verification of {len(plan)} instantiations and {extra} reached pairs "
                f"in {elapsed:.2f}ms ({len(result.failures)} failures)")
    return result


def _describe_funds(env: CostEnv) -> str:
    return ",".join(f"{o}={format_funds(f)}" for o, f in env.owners)


def _describe_mapping(mapping: Mapping[str, Value]) -> Dict[str, str]:
    from .syntax import format_value
    return {k: format_value(v) for k, v in sorted(mapping.items())}


def _describe_sample(sample: FundSample) -> str:
    if not sample.left and not sample.right:
        return ""
    left = ",".join(f"{o}={format_funds(f)}" for o, f in sample.left)
    right = ",".join(f"{o}={format_funds(f)}" for o, f in sample.right)
    return f" funds {left}|{right}"


def _check_member(view: WltsView, index: _FamilyIndex, left: Configuration, right: Configuration,
                  credit: int) -> Tuple[List[str], bool, List[_Reached]]:
    """Transfer clauses for one pair; also returns the successor pairs the answers rely on"""
    if not view.admissible(left, right):
        return ["observer funds differ"], False, []
    failures: List[str] = []
    reached: List[_Reached] = []
    weak_left = view.weak_steps(left)
    weak_right = view.weak_steps(right)

    def answer(s2: Configuration, t2: Configuration, rest: int) -> bool:
        if rest < 0:
            return False
        entry = index.match(s2, t2, rest)
        if entry is None:
            return False
        reached.append(_Reached(entry.name, s2, t2, rest))
        return True

    for label, v, s2 in view.strong_steps(left):
        if not any(answer(s2, t2, credit + v - w) for w, t2 in weak_right.moves.get(label, [])):
            failures.append(f"left challenge {label}@{v} has no answer within the family at credit {credit}")
    for label, w, t2 in view.strong_steps(right):
        if not any(answer(s2, t2, credit + v - w) for v, s2 in weak_left.moves.get(label, [])):
            failures.append(f"right challenge {label}@{w} has no answer within the family at credit {credit}")
    return failures, weak_left.truncated or weak_right.truncated, reached
