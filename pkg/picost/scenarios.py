"""Worked example configurations and the comparisons drawn between them.

Every scenario is built from the shipped corpus (programs in ``.picost`` files, environments in
JSON) so that the CLI, the tests and the corpus describe the same systems. Ids accept parameters
either as keywords or positionally in parentheses: ``publishing(216)``, ``kill-switch(k=3, funds=2)``.
"""

import logging
import re
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from . import config
from .costenv import EXTERNAL, INF, Configuration, CostEnv, Funds
from .equivalence import (
    Verdict, check_abstract_preorder, check_configurations, check_cost_improving, external_pair,
)
from .errors import ScenarioError
from .frontend import Definition, SourceUnit, load_env, load_program, parse_system
from .semantics import ExplorationBounds, RunStrategy
from .syntax import Owner, Str, System, Value

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Scenario:
    name: str
    system: System
    env: CostEnv
    value_universe: Tuple[Value, ...] = ()
    notes: str = ""

    @property
    def configuration(self) -> Configuration:
        return Configuration(self.env, self.system)


@dataclass(frozen=True)
class ScenarioInfo:
    """Registry entry: builder plus its parameters as (name, converter, default)"""

    name: str
    summary: str
    build: Callable[..., Scenario]
    params: Tuple[Tuple[str, Callable[[str], Any], Any], ...] = ()

    @property
    def signature(self) -> str:
        if not self.params:
            return self.name
        return f"{self.name}(" + ", ".join(f"{p}={_show(d)}" for p, _, d in self.params) + ")"


_REGISTRY: Dict[str, ScenarioInfo] = {}


def _show(value: Any) -> str:
    return "inf" if value == INF else str(value)


def _nat(text: str) -> int:
    value = int(text)
    if value < 0:
        raise ValueError(f"expected a natural number, got {text}")
    return value


def _funds(text: str) -> Funds:
    return INF if text == "inf" else _nat(text)


def _choice(*options: str) -> Callable[[str], str]:
    def convert(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text}")
        return text
    return convert


def scenario(name: str, summary: str, **params: Tuple[Callable[[str], Any], Any]):
    """Register a builder under name; params map to (converter, default) in positional order"""
    def register(fn: Callable[..., Scenario]) -> Callable[..., Scenario]:
        _REGISTRY[name] = ScenarioInfo(name, summary, fn, tuple((p, c, d) for p, (c, d) in params.items()))
        return fn
    return register


# ---------------------------------------------------------------------------
# Corpus access
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _program(stem: str) -> SourceUnit:
    return load_program(config.get_corpus_file(f"{stem}.picost"))


def _definitions(stem: str) -> Mapping[str, Definition]:
    return _program(stem).definitions


@lru_cache(maxsize=None)
def _env(stem: str) -> CostEnv:
    return load_env(config.get_corpus_file(f"{stem}.json"))


def _entry(stem: str) -> System:
    system = _program(stem).system
    if system is None:
        raise ScenarioError(f"Corpus program {stem} has no system entry")
    return system


def _all_funds(env: CostEnv, funds: Funds) -> CostEnv:
    return env.with_funds({o: funds for o, _ in env.owners})


# ---------------------------------------------------------------------------
# Library
# ---------------------------------------------------------------------------

# reqR and reqS types per variant: (reqR provide, reqS provide)
_LIBRARY_TYPES = {"local": (3, 5), "central": (1, 1)}


def _library_env(variant: str, funds: Funds) -> CostEnv:
    return _all_funds(_env(f"library_{variant}"), funds)


def _library_lib(variant: str) -> str:
    return f"new reqS:(0,{_LIBRARY_TYPES[variant][1]}) in [lib] (Library | Store)"


def _library_sys(variant: str) -> str:
    return f"new reqR:(0,{_LIBRARY_TYPES[variant][0]}) in ([pub] Reader | {_library_lib(variant)})"


def _library(name: str, text: str, variant: str, funds: Funds, notes: str) -> Scenario:
    return Scenario(
        name=name,
        system=parse_system(text, _definitions("library")),
        env=_library_env(variant, funds),
        value_universe=(Str("dune"),),
        notes=notes,
    )


@scenario("library-local", "Book prodding the library with local costs", funds=(_funds, INF))
def _library_local(funds: Funds) -> Scenario:
    return _library("library-local", f'[pub] Book("dune") | {_library_sys("local")}', "local", funds,
                    "one request costs 5 without the depository and 10 with it")


@scenario("library-central", "Book prodding the library with central costs", funds=(_funds, INF))
def _library_central(funds: Funds) -> Scenario:
    return _library("library-central", f'[pub] Book("dune") | {_library_sys("central")}', "central", funds,
                    "one request costs 11 without the depository and 12 with it")


@scenario("library-sys-local", "Reader and library, local costs", funds=(_funds, INF))
def _library_sys_local(funds: Funds) -> Scenario:
    return _library("library-sys-local", _library_sys("local"), "local", funds, "Sys under local costs")


@scenario("library-sys-central", "Reader and library, central costs", funds=(_funds, INF))
def _library_sys_central(funds: Funds) -> Scenario:
    return _library("library-sys-central", _library_sys("central"), "central", funds, "Sys under central costs")


@scenario("library-lib-local", "Library and depository alone, local costs", funds=(_funds, INF))
def _library_lib_local(funds: Funds) -> Scenario:
    return _library("library-lib-local", _library_lib("local"), "local", funds, "front desk charges 3 per request")


@scenario("library-lib-central", "Library and depository alone, central costs", funds=(_funds, INF))
def _library_lib_central(funds: Funds) -> Scenario:
    return _library("library-lib-central", _library_lib("central"), "central", funds,
                    "front desk charges 1 per request")


@scenario("reader-local", "Reader alone, local costs", funds=(_funds, INF))
def _reader_local(funds: Funds) -> Scenario:
    return _library("reader-local", "[pub] Reader", "local", funds, "reader with reqR free at (0,3)")


@scenario("reader-central", "Reader alone, central costs", funds=(_funds, INF))
def _reader_central(funds: Funds) -> Scenario:
    return _library("reader-central", "[pub] Reader", "central", funds, "reader with reqR free at (0,1)")


# ---------------------------------------------------------------------------
# Fund transfer
# ---------------------------------------------------------------------------


@scenario("fund-transfer", "dad pays kate k through a private resource", k=(_nat, 5), funds=(_funds, 10))
def _fund_transfer(k: int, funds: Funds) -> Scenario:
    system = parse_system(f"[dad] req?(x). new s:({k},0) in x!(s). s! | [kate] Kate", _definitions("transfer"))
    env = _env("transfer").with_funds({Owner("dad"): funds})
    return Scenario("fund-transfer", system, env, notes=f"dad loses {k}, kate gains {k}")


# ---------------------------------------------------------------------------
# Publishing
# ---------------------------------------------------------------------------

_PUBLISHING_ENVS = ("327", "216")


def _publishing_env(env: str) -> CostEnv:
    return _env(f"publishing_{env}")


@scenario("publishing", "publisher, news service, ad agency and reader", env=(_choice(*_PUBLISHING_ENVS), "327"))
def _publishing(env: str) -> Scenario:
    return Scenario("publishing", _entry("publishing"), _publishing_env(env),
                    notes="one cycle records 1 under 327 and 2 under 216")


@scenario("kickback", "publishing with the agency paying p back through k", env=(_choice(*_PUBLISHING_ENVS), "327"))
def _kickback(env: str) -> Scenario:
    system = parse_system("[p] PK | [n] N | [a] AK | [r] R", _definitions("publishing"))
    return Scenario("kickback", system, _publishing_env(env), notes="one cycle records 2 under 327 and 3 under 216")


@scenario("publisher", "publisher alone, every owner with infinite funds", env=(_choice(*_PUBLISHING_ENVS), "327"))
def _publisher(env: str) -> Scenario:
    system = parse_system("[p] P", _definitions("publishing"))
    return Scenario("publisher", system, _all_funds(_publishing_env(env), INF),
                    notes="compared abstractly for an external observer")


def _pa_env(funds: Funds) -> CostEnv:
    return _env("pa_327").with_funds({Owner("p"): funds})


@scenario("pa", "publisher and agency with adv restricted", funds=(_funds, 5))
def _pa(funds: Funds) -> Scenario:
    system = parse_system("new adv:(2,0) in ([p] P | [a] A)", _definitions("publishing"))
    return Scenario("pa", system, _pa_env(funds), notes="p needs 5 to get through news and adv")


@scenario("pa-k", "publisher and agency with the kickback", funds=(_funds, 5))
def _pa_k(funds: Funds) -> Scenario:
    system = parse_system("new adv:(2,0) in ([p] PK | [a] AK)", _definitions("publishing"))
    return Scenario("pa-k", system, _pa_env(funds), notes="one more unit of profit per cycle than pa")


# ---------------------------------------------------------------------------
# Small examples
# ---------------------------------------------------------------------------

_UD_ENVS = ("25", "42")
_NONCOMP_SIDES = ("gamma", "delta")
_PAYERS = ("o1", "o2")


@scenario("ud", "alternating up and down", env=(_choice(*_UD_ENVS), "25"))
def _ud(env: str) -> Scenario:
    costs = {"25": "up costs 2, down costs 5", "42": "up costs 4, down costs 2"}[env]
    return Scenario("ud", _entry("ud"), _env(f"ud_{env}"), notes=costs)


@scenario("noncomp-singleton", "a single use of a", side=(_choice(*_NONCOMP_SIDES), "gamma"))
def _noncomp_singleton(side: str) -> Scenario:
    return Scenario("noncomp-singleton", parse_system("[o] a!"), _env(f"noncomp_{side}"),
                    notes="related at credit 0 across the two environments")


@scenario("noncomp-pair", "uses of a and b by the same owner", side=(_choice(*_NONCOMP_SIDES), "gamma"))
def _noncomp_pair(side: str) -> Scenario:
    return Scenario("noncomp-pair", _entry("noncomp"), _env(f"noncomp_{side}"),
                    notes="o cannot afford both uses under delta")


@scenario("output-types", "extrusion of a private name of type (use,0)", use=(_nat, 1))
def _output_types(use: int) -> Scenario:
    system = parse_system(f"new r:({use},0) in [o] a!(r)")
    return Scenario("output-types", system, _env("output_types"), notes="labels differ only in the extruded type")


@scenario("owner-id", "one use of a paid for by o1 or by o2", owner=(_choice(*_PAYERS), "o1"))
def _owner_id(owner: str) -> Scenario:
    return Scenario("owner-id", parse_system(f"[{owner}] a!"), _env("owner_id"),
                    notes="o1 and o2 hold the same funds; only the concrete labels name the payer")


@scenario("kill-switch", "omega is observable iff o can pay k", k=(_nat, 3), funds=(_funds, 3))
def _kill_switch(k: int, funds: Funds) -> Scenario:
    system = parse_system(f"[o] new r:({k},0) in (r! | r?. omega!)")
    env = _env("kill_switch").with_funds({Owner("o"): funds})
    return Scenario("kill-switch", system, env, notes="barb omega! appears only when k <= funds")


# ---------------------------------------------------------------------------
# Lookup
# ---------------------------------------------------------------------------

_ID = re.compile(r"^\s*([a-z][a-z0-9-]*)\s*(?:\((.*)\))?\s*$")


def parse_scenario_id(text: str) -> Tuple[str, Dict[str, str]]:
    """Split "name(a, key=b)" into the name and its arguments keyed by parameter name"""
    match = _ID.match(text)
    if not match:
        raise ScenarioError(f"Malformed scenario id: {text}")
    name, raw = match.group(1), match.group(2)
    if name not in _REGISTRY:
        raise ScenarioError(f"Unknown scenario: {name}")
    params = _REGISTRY[name].params
    arguments: Dict[str, str] = {}
    if raw is None or not raw.strip():
        return name, arguments
    for position, part in enumerate(p.strip() for p in raw.split(",")):
        if "=" in part:
            key, value = (s.strip() for s in part.split("=", 1))
        elif position < len(params):
            key, value = params[position][0], part
        else:
            raise ScenarioError(f"Too many arguments for scenario {name}")
        arguments[key] = value
    return name, arguments


def build(name: str, **params: Any) -> Scenario:
    """Build a scenario by id; string parameters are converted, others taken as given"""
    start_time = time.time()
    base, arguments = parse_scenario_id(name)
    arguments.update(params)
    info = _REGISTRY[base]
    known = {p for p, _, _ in info.params}
    unknown = sorted(set(arguments) - known)
    if unknown:
        raise ScenarioError(f"Scenario {base} has no parameter {unknown[0]}")

    values = {}
    for param, convert, default in info.params:
        raw = arguments.get(param, default)
        try:
            values[param] = convert(raw) if isinstance(raw, str) else raw
        except ValueError as e:
            raise ScenarioError(f"Invalid value for {param} in scenario {base}: {e}") from e
    result = info.build(**values)
    elapsed = (time.time() - start_time) * 1000
    logger.info(f"Completed building scenario {base} {values} in {elapsed:.2f}ms")
    return result


def list_scenarios() -> List[ScenarioInfo]:
    return [_REGISTRY[name] for name in sorted(_REGISTRY)]


# ---------------------------------------------------------------------------
# Run variants
# ---------------------------------------------------------------------------

_LIBRARY_VARIANTS = {
    "no-store": RunStrategy(avoid=frozenset({"reqS"})),
    "store": RunStrategy(require=frozenset({"reqS"})),
}
_CYCLE_VARIANTS = {"cycle": RunStrategy(until_cycle=True)}

RUN_VARIANTS: Dict[str, Dict[str, RunStrategy]] = {
    "library-local": _LIBRARY_VARIANTS,
    "library-central": _LIBRARY_VARIANTS,
    "library-sys-local": _LIBRARY_VARIANTS,
    "library-sys-central": _LIBRARY_VARIANTS,
    "publishing": _CYCLE_VARIANTS,
    "kickback": _CYCLE_VARIANTS,
    "pa": _CYCLE_VARIANTS,
    "pa-k": _CYCLE_VARIANTS,
}


def run_variant(name: str, variant: Optional[str]) -> RunStrategy:
    base, _ = parse_scenario_id(name)
    if variant is None:
        return RunStrategy()
    variants = RUN_VARIANTS.get(base, {})
    if variant not in variants:
        choices = ", ".join(sorted(variants)) or "none"
        raise ScenarioError(f"Scenario {base} has no run variant {variant} (available: {choices})")
    return variants[variant]


# ---------------------------------------------------------------------------
# Comparisons
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Comparison:
    """left is compared against right: view is concrete, abstract or tau; observers "external" adds the observer"""

    name: str
    left: str
    right: str
    credit: int
    view: str = "concrete"
    observers: Tuple[str, ...] = ()
    expected: str = "Proven"
    notes: str = ""


COMPARISONS: Dict[str, Comparison] = {c.name: c for c in (
    Comparison("ud", "ud(25)", "ud(42)", 2, notes="the reverse direction needs more credit every cycle"),
    Comparison("ud-reverse", "ud(42)", "ud(25)", 10, expected="RefutedWithinBounds"),
    Comparison("reader", "reader-central", "reader-local", 0, view="abstract", observers=("external",)),
    Comparison("sys", "library-sys-central", "library-sys-local", 2),
    Comparison("lib", "library-lib-central", "library-lib-local", 0, expected="RefutedWithinBounds",
               notes="the central desk earns 2 less per request, for any starting credit"),
    Comparison("publisher-env", "publisher(216)", "publisher(327)", 0, view="abstract", observers=("external",)),
    Comparison("kickback", "pa-k", "pa", 0, view="abstract", observers=("external",)),
    Comparison("noncomp-singleton", "noncomp-singleton(gamma)", "noncomp-singleton(delta)", 0),
    Comparison("noncomp", "noncomp-pair(gamma)", "noncomp-pair(delta)", 0, expected="RefutedWithinBounds",
               notes="related components, unrelated composition"),
    Comparison("noncomp-observed", "noncomp-singleton(gamma)", "noncomp-singleton(delta)", 0, view="abstract",
               observers=("o",), expected="RefutedWithinBounds", notes="o's funds differ at the start"),
    Comparison("output-types", "output-types(1)", "output-types(2)", 0, expected="RefutedWithinBounds"),
    Comparison("output-types-abstract", "output-types(1)", "output-types(2)", 0, view="abstract",
               observers=("external",)),
    Comparison("owner-id", "owner-id(o1)", "owner-id(o2)", 0, expected="RefutedWithinBounds",
               notes="the labels differ in the paying owner although no context can observe it"),
    Comparison("owner-id-abstract", "owner-id(o1)", "owner-id(o2)", 0, view="abstract", observers=("external",)),
)}


def _universe(*scenarios: Scenario) -> Tuple[Value, ...]:
    seen: Dict[Value, None] = {}
    for s in scenarios:
        seen.update(dict.fromkeys(s.value_universe))
    return tuple(seen)


def compare(left: Configuration, right: Configuration, credit: int, view: str = "concrete",
            observers: Sequence[str] = (), bounds: Optional[ExplorationBounds] = None,
            universe: Sequence[Value] = ()) -> Verdict:
    """Dispatch a preorder check between two configurations"""
    if view == "concrete":
        return check_configurations(left, right, credit, bounds, universe)
    if view == "tau":
        return check_cost_improving(left, right, credit, bounds)
    if view != "abstract":
        raise ScenarioError(f"Unknown view {view}")
    if list(observers) == ["external"]:
        left, right = external_pair(left, right)
        chosen = [EXTERNAL]
    else:
        chosen = [Owner(o) for o in observers]
    if not chosen:
        raise ScenarioError("An abstract comparison needs at least one observer")
    return check_abstract_preorder(left, right, credit, chosen, bounds, universe=universe)


def run_comparison(name: str, credit: Optional[int] = None,
                   bounds: Optional[ExplorationBounds] = None) -> Verdict:
    if name not in COMPARISONS:
        raise ScenarioError(f"Unknown comparison: {name}")
    comparison = COMPARISONS[name]
    left, right = build(comparison.left), build(comparison.right)
    logger.info(f"Starting comparison {name}: {comparison.left} against {comparison.right}")
    return compare(left.configuration, right.configuration,
                   comparison.credit if credit is None else credit,
                   comparison.view, comparison.observers, bounds, _universe(left, right))
