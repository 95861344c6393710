"""Cost environments: owner funds, resource costs, the expenditure record and recording policies.

An environment is an immutable value. Partial operations (charge, transfer) return None when
the funds precondition fails; misuse (unknown owner or resource, duplicate registration)
raises EnvError.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Tuple, Union

from .errors import EnvError
from .syntax import (
    Name, Owner, ResType, System, ZERO_TYPE, free_names, is_closed, owners_of,
)

logger = logging.getLogger(__name__)

Funds = Union[int, float]
INF: float = math.inf


def format_funds(funds: Funds) -> str:
    return "inf" if funds == INF else str(int(funds))


@dataclass(frozen=True, order=True)
class RecPolicy:
    """Linear recording policy: the record changes by u_coeff*use + p_coeff*provide"""

    u_coeff: int = 1
    p_coeff: int = -1

    def apply(self, use_cost: int, provide_cost: int) -> int:
        return self.u_coeff * use_cost + self.p_coeff * provide_cost

    @property
    def is_standard(self) -> bool:
        return self == STANDARD

    def __str__(self) -> str:
        return "standard" if self.is_standard else f"custom({self.u_coeff:+d},{self.p_coeff:+d})"


STANDARD = RecPolicy(1, -1)

# Owner standing for the observing context; added with infinite funds
EXTERNAL = Owner("ext")


@dataclass(frozen=True)
class Resource:
    name: Name
    rtype: ResType
    policy: RecPolicy = STANDARD


@dataclass(frozen=True)
class CostEnv:
    """Owner funds, resource table, record, policies for later-registered names, dynamic names"""

    owners: Tuple[Tuple[Owner, Funds], ...]
    resources: Tuple[Resource, ...]
    record: int = 0
    scoped: Tuple[Tuple[str, RecPolicy], ...] = ()
    dynamic: FrozenSet[Name] = field(default_factory=frozenset)

    @classmethod
    def build(cls, owners: Mapping[Owner, Funds], resources: Mapping[Name, Tuple[ResType, RecPolicy]],
              record: int = 0, scoped: Optional[Mapping[str, RecPolicy]] = None) -> "CostEnv":
        """Validated constructor used by scenarios and the environment loader"""
        if len(owners) < 2:
            raise EnvError(f"A cost environment needs at least two owners, got {len(owners)}")
        for owner, funds in owners.items():
            if funds != INF and (funds < 0 or int(funds) != funds):
                raise EnvError(f"Funds of {owner} must be a natural or inf, got {funds}")
        return cls(
            owners=tuple(sorted(((o, f if f == INF else int(f)) for o, f in owners.items()),
                                key=lambda item: item[0].id)),
            resources=tuple(sorted((Resource(n, t, p) for n, (t, p) in resources.items()),
                                   key=lambda r: r.name.sort_key())),
            record=record,
            scoped=tuple(sorted((scoped or {}).items())),
        )

    # -- lookups -----------------------------------------------------------

    @cached_property
    def _funds(self) -> Dict[Owner, Funds]:
        return dict(self.owners)

    @cached_property
    def _table(self) -> Dict[Name, Resource]:
        return {r.name: r for r in self.resources}

    @cached_property
    def domain(self) -> FrozenSet[Name]:
        """dom of the use/provide tables"""
        return frozenset(self._table)

    @cached_property
    def owner_set(self) -> FrozenSet[Owner]:
        return frozenset(self._funds)

    @cached_property
    def static_view(self) -> Tuple:
        """Everything but the record; two states with equal views behave identically"""
        return (self.owners, self.resources, self.scoped)

    def funds(self, owner: Owner) -> Funds:
        if owner not in self._funds:
            raise EnvError(f"Unknown owner {owner}")
        return self._funds[owner]

    def resource(self, name: Name) -> Resource:
        if name not in self._table:
            raise EnvError(f"Unknown resource {name}")
        return self._table[name]

    def rtype(self, name: Name) -> ResType:
        return self.resource(name).rtype

    def use_cost(self, name: Name) -> int:
        return self.resource(name).rtype.use_cost

    def provide_cost(self, name: Name) -> int:
        return self.resource(name).rtype.provide_cost

    def policy(self, name: Name) -> RecPolicy:
        return self.resource(name).policy

    def scoped_policy(self, base: str) -> RecPolicy:
        return dict(self.scoped).get(base, STANDARD)

    @cached_property
    def scoped_bases(self) -> FrozenSet[str]:
        return frozenset(base for base, _ in self.scoped)

    def palette(self) -> FrozenSet[ResType]:
        return frozenset(r.rtype for r in self.resources) | {ZERO_TYPE}

    # -- functional updates -----------------------------------------------

    def with_funds(self, updates: Mapping[Owner, Funds]) -> "CostEnv":
        unknown = [o for o in updates if o not in self._funds]
        if unknown:
            raise EnvError(f"Unknown owner {unknown[0]}")
        owners = tuple((o, updates.get(o, f)) for o, f in self.owners)
        return CostEnv(owners, self.resources, self.record, self.scoped, self.dynamic)

    def with_record(self, record: int) -> "CostEnv":
        return CostEnv(self.owners, self.resources, record, self.scoped, self.dynamic)

    def with_resource(self, name: Name, rtype: ResType, policy: RecPolicy = STANDARD) -> "CostEnv":
        """Static replacement of a resource entry (used by scenario variants and mutations)"""
        table = dict(self._table)
        table[name] = Resource(name, rtype, policy)
        resources = tuple(sorted(table.values(), key=lambda r: r.name.sort_key()))
        return CostEnv(self.owners, resources, self.record, self.scoped, self.dynamic - {name})

    def describe(self) -> str:
        funds = ", ".join(f"{o}={format_funds(f)}" for o, f in self.owners)
        costs = ", ".join(f"{r.name}:{r.rtype}{'' if r.policy.is_standard else ' ' + str(r.policy)}"
                          for r in self.resources)
        return f"funds[{funds}] costs[{costs}] record={self.record}"


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def charge(env: CostEnv, user: Owner, a: Name, provider: Owner) -> Optional[CostEnv]:
    """Charge user for using a provided by provider; None when either party cannot pay"""
    resource = env.resource(a)
    user_funds = env.funds(user)
    provider_funds = env.funds(provider)
    use, provide = resource.rtype.use_cost, resource.rtype.provide_cost
    if user_funds < use or provider_funds < provide:
        return None
    funds = dict(env.owners)
    funds[user] = funds[user] - use
    funds[provider] = funds[provider] + use - provide
    owners = tuple((o, funds[o]) for o, _ in env.owners)
    return CostEnv(owners, env.resources, env.record + resource.policy.apply(use, provide), env.scoped, env.dynamic)


def register(env: CostEnv, a: Name, rtype: ResType) -> CostEnv:
    """Add a fresh resource; its policy is the scoped one for its base name, standard otherwise"""
    if a in env.domain:
        raise EnvError(f"Resource {a} is already registered")
    resources = tuple(sorted(env.resources + (Resource(a, rtype, env.scoped_policy(a.base)),),
                             key=lambda r: r.name.sort_key()))
    return CostEnv(env.owners, resources, env.record, env.scoped, env.dynamic | {a})


def register_all(env: CostEnv, names: Iterable[Tuple[Name, ResType]]) -> CostEnv:
    for name, rtype in names:
        env = register(env, name, rtype)
    return env


def transfer(env: CostEnv, user: Owner, k: int, provider: Owner) -> Optional[CostEnv]:
    """Move k funds from user to provider; None when the user cannot pay"""
    if k < 0:
        raise EnvError(f"Transfer amount must be a natural, got {k}")
    user_funds = env.funds(user)
    env.funds(provider)
    if user_funds < k:
        return None
    if user == provider:
        return env
    funds = dict(env.owners)
    funds[user] = funds[user] - k
    funds[provider] = funds[provider] + k
    owners = tuple((o, funds[o]) for o, _ in env.owners)
    return CostEnv(owners, env.resources, env.record, env.scoped, env.dynamic)


def with_external(env: CostEnv, e: Owner) -> CostEnv:
    """Add an external owner with infinite funds"""
    if e in env.owner_set:
        raise EnvError(f"Owner {e} is already present")
    owners = tuple(sorted(env.owners + ((e, INF),), key=lambda item: item[0].id))
    return CostEnv(owners, env.resources, env.record, env.scoped, env.dynamic)


def is_simple(env: CostEnv) -> bool:
    """All registered resources cost nothing to provide"""
    return all(r.rtype.provide_cost == 0 for r in env.resources)


def forget(env: CostEnv, keep: Iterable[Name]) -> CostEnv:
    """Drop dynamic names that are not in keep; statically declared names always stay"""
    keep = frozenset(keep)
    stale = env.dynamic - keep
    if not stale:
        return env
    resources = tuple(r for r in env.resources if r.name not in stale)
    return CostEnv(env.owners, resources, env.record, env.scoped, env.dynamic - stale)


def funds_view(env: CostEnv) -> Dict[str, str]:
    return {o.id: format_funds(f) for o, f in env.owners}


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Configuration:
    """A cost environment paired with a closed system whose free names are all registered"""

    env: CostEnv
    system: System

    def __post_init__(self):
        if not is_closed(self.system):
            raise EnvError("Configuration system must be closed")
        unknown = free_names(self.system) - self.env.domain
        if unknown:
            names = ", ".join(sorted(str(n) for n in unknown))
            raise EnvError(f"Free names not registered in the environment: {names}")
        missing = owners_of(self.system) - self.env.owner_set
        if missing:
            raise EnvError(f"Owners without funds entry: {', '.join(sorted(o.id for o in missing))}")

    @property
    def record(self) -> int:
        return self.env.record
