"""Textual syntax for Picost programs, cost environments and witness families.

Programs are parsed with a lark Earley grammar and resolved against a scope of value
variables, recursion variables and definitions. Environments and witness families are
JSON documents validated with pydantic.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Literal, Mapping, Optional, Sequence, Tuple, Union

from lark import Lark, Token, Tree
from lark.exceptions import UnexpectedEOF, UnexpectedInput
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, ValidationError, field_validator

from .costenv import EXTERNAL, INF, STANDARD, CostEnv, RecPolicy, with_external
from .equivalence import FundSample, WitnessEntry, WitnessFamily
from .errors import EnvError, SyntaxIssue, UnboundIdentifier, WitnessError
from .syntax import (
    NIL, STOP, Ctor, Input, Match, Name, NameVal, Nat, New, Output, Owned, Owner, Par, Rec, RecVar,
    ResType, Str, SysNew, SysPar, System, Thread, TupleVal, Value, Var, ZERO_TYPE, desugar_choice, format_value,
    substitute_many, system_free_vars,
)

logger = logging.getLogger(__name__)

GRAMMAR = r"""
    start:          definition* ("system" system)?
    system_text:    system
    value_text:     value

    definition:     "def" NAME formals? "=" thread
    formals:        "(" [NAME ("," NAME)*] ")"

    ?system:        sys_term
                  | sys_term "|" system                   -> sys_par
    ?sys_term:      "[" NAME "]" thread_term              -> owned
                  | "new" decl "in" sys_term              -> sys_new
                  | "0"                                   -> nil
                  | "(" system ")"

    ?thread:        choice
                  | choice "|" thread                     -> par
    ?choice:        thread_term
                  | choice "(+)" thread_term              -> sum
    ?thread_term:   NAME "?" params? ("." thread_term)?   -> input
                  | NAME "!" args? ("." thread_term)?     -> output
                  | "new" decl "in" thread_term           -> new
                  | "rec" NAME "." thread_term            -> rec
                  | "if" value "=" value "then" thread_term "else" thread_term -> match
                  | "stop"                                -> stop
                  | NAME                                  -> ref
                  | NAME args                             -> call
                  | "(" thread ")"

    params:         "(" [NAME ("," NAME)*] ")"
    args:           "(" [value ("," value)*] ")"
    decl:           NAME (":" "(" INT "," INT ")")?

    value:          NAME                                  -> vname
                  | NAME "(" value ")"                    -> ctor
                  | INT                                   -> nat
                  | ESCAPED_STRING                        -> string
                  | "(" value ("," value)+ ")"            -> tuple

    NAME:           /(?!(new|in|rec|if|then|else|stop|def|system)\b)[A-Za-z_][A-Za-z0-9_]*(#[0-9]+)?/
    COMMENT:        /\/\/[^\n]*/

    %import common (ESCAPED_STRING, INT, WS)
    %ignore WS
    %ignore COMMENT
"""

_PARSER = Lark(GRAMMAR, start=["start", "system_text", "value_text"], propagate_positions=True)


# ---------------------------------------------------------------------------
# Programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Definition:
    """def name(formals) = body; the formals occur in body as value variables"""

    name: str
    formals: Tuple[str, ...]
    body: Thread


@dataclass
class SourceUnit:
    definitions: Dict[str, Definition] = field(default_factory=dict)
    system: Optional[System] = None


def parse_name(text: str) -> Name:
    base, _, suffix = text.partition("#")
    return Name(base, int(suffix) if suffix else None)


def _position(node: Union[Tree, Token]) -> Tuple[Optional[int], Optional[int]]:
    if isinstance(node, Token):
        return node.line, node.column
    meta = getattr(node, "meta", None)
    if meta is None or getattr(meta, "empty", True):
        return None, None
    return meta.line, meta.column


def _parse_tree(text: str, start: str) -> Tree:
    try:
        return _PARSER.parse(text, start=start)
    except UnexpectedEOF as e:
        lines = text.splitlines() or [""]
        raise SyntaxIssue("Unexpected end of input", len(lines), len(lines[-1]) + 1) from e
    except UnexpectedInput as e:
        pos = getattr(e, "pos_in_stream", None)
        found = repr(text[pos:pos + 12]) if pos is not None and pos < len(text) else "end of input"
        raise SyntaxIssue(f"Unexpected input {found}", e.line, e.column) from e


class _Resolver:
    """Turns parse trees into terms, expanding definitions and binding variables"""

    def __init__(self, pending: Mapping[str, Tree], known: Optional[Mapping[str, Definition]] = None):
        self.pending = dict(pending)
        self.resolved: Dict[str, Definition] = dict(known or {})
        self.in_progress: List[str] = []

    def definition(self, name: str, where: Union[Tree, Token]) -> Definition:
        if name in self.resolved:
            return self.resolved[name]
        if name not in self.pending:
            raise UnboundIdentifier(f"Unknown process identifier {name}", *_position(where))
        if name in self.in_progress:
            cycle = " -> ".join(self.in_progress + [name])
            raise SyntaxIssue(f"Definitions are not recursive (use rec): {cycle}", *_position(where))
        self.in_progress.append(name)
        tree = self.pending[name]
        children = tree.children[1:]
        formals: Tuple[str, ...] = ()
        if isinstance(children[0], Tree) and children[0].data == "formals":
            formals = self._identifiers(children[0])
            children = children[1:]
        body = self.thread(children[0], frozenset(formals), frozenset())
        self.in_progress.pop()
        definition = Definition(name, formals, body)
        self.resolved[name] = definition
        return definition

    def _identifiers(self, tree: Tree) -> Tuple[str, ...]:
        idents = tuple(str(t) for t in tree.children if t is not None)
        if len(set(idents)) != len(idents):
            raise SyntaxIssue(f"Duplicate parameter in ({', '.join(idents)})", *_position(tree))
        return idents

    def expand(self, name: str, args: Sequence[Value], where: Union[Tree, Token]) -> Thread:
        definition = self.definition(name, where)
        if len(args) != len(definition.formals):
            raise SyntaxIssue(f"{name} expects {len(definition.formals)} arguments, got {len(args)}",
                              *_position(where))
        return substitute_many(definition.body, dict(zip(definition.formals, args)))

    def value(self, tree: Tree, variables: FrozenSet[str]) -> Value:
        kind = tree.data
        if kind == "vname":
            return self.name_value(tree.children[0], variables)
        if kind == "ctor":
            return Ctor(str(tree.children[0]), self.value(tree.children[1], variables))
        if kind == "nat":
            return Nat(int(tree.children[0]))
        if kind == "string":
            return Str(json.loads(str(tree.children[0])))
        return TupleVal(tuple(self.value(c, variables) for c in tree.children))

    def name_value(self, token: Token, variables: FrozenSet[str]) -> Value:
        text = str(token)
        return Var(text) if text in variables else NameVal(parse_name(text))

    def decl(self, tree: Tree) -> Tuple[Name, ResType]:
        name = parse_name(str(tree.children[0]))
        if len(tree.children) == 1:
            return name, ZERO_TYPE
        return name, ResType(int(tree.children[1]), int(tree.children[2]))

    def thread(self, tree: Union[Tree, Token], variables: FrozenSet[str], recvars: FrozenSet[str]) -> Thread:
        kind = tree.data
        children = tree.children
        if kind in ("input", "output"):
            chan = self.name_value(children[0], variables)
            rest = list(children[1:])
            listing = None
            if rest and isinstance(rest[0], Tree) and rest[0].data in ("params", "args"):
                listing = rest.pop(0)
            if kind == "input":
                params = self._identifiers(listing) if listing is not None else ()
                body = self.thread(rest[0], variables | frozenset(params), recvars) if rest else STOP
                return Input(chan, params, body)
            args = tuple(self.value(v, variables) for v in listing.children if v is not None) if listing else ()
            body = self.thread(rest[0], variables, recvars) if rest else STOP
            return Output(chan, args, body)
        if kind == "new":
            name, rtype = self.decl(children[0])
            return New(name, rtype, self.thread(children[1], variables, recvars))
        if kind == "rec":
            var = str(children[0])
            return Rec(var, self.thread(children[1], variables, recvars | {var}))
        if kind == "match":
            return Match(self.value(children[0], variables), self.value(children[1], variables),
                         self.thread(children[2], variables, recvars), self.thread(children[3], variables, recvars))
        if kind == "stop":
            return STOP
        if kind == "ref":
            ident = str(children[0])
            if ident in recvars:
                return RecVar(ident)
            return self.expand(ident, (), children[0])
        if kind == "call":
            args = tuple(self.value(v, variables) for v in children[1].children if v is not None)
            return self.expand(str(children[0]), args, children[0])
        if kind == "par":
            return Par(self.thread(children[0], variables, recvars), self.thread(children[1], variables, recvars))
        if kind == "sum":
            return desugar_choice(self.thread(children[0], variables, recvars),
                                  self.thread(children[1], variables, recvars))
        raise SyntaxIssue(f"Unexpected construct {kind}", *_position(tree))

    def system(self, tree: Tree, variables: FrozenSet[str]) -> System:
        kind = tree.data
        children = tree.children
        if kind == "owned":
            return Owned(Owner(str(children[0])), self.thread(children[1], variables, frozenset()))
        if kind == "sys_new":
            name, rtype = self.decl(children[0])
            return SysNew(name, rtype, self.system(children[1], variables))
        if kind == "sys_par":
            return SysPar(self.system(children[0], variables), self.system(children[1], variables))
        if kind == "nil":
            return NIL
        raise SyntaxIssue(f"Unexpected construct {kind}", *_position(tree))


def _collect_definitions(tree: Tree) -> Tuple[Dict[str, Tree], Optional[Tree]]:
    pending: Dict[str, Tree] = {}
    entry = None
    for child in tree.children:
        if isinstance(child, Tree) and child.data == "definition":
            name = str(child.children[0])
            if name in pending:
                raise SyntaxIssue(f"Duplicate definition {name}", *_position(child.children[0]))
            pending[name] = child
        else:
            entry = child
    return pending, entry


def parse_program(text: str) -> SourceUnit:
    """Definitions followed by an optional entry system"""
    tree = _parse_tree(text, "start")
    pending, entry = _collect_definitions(tree)
    resolver = _Resolver(pending)
    for name, node in pending.items():
        resolver.definition(name, node)
    system = None
    if entry is not None:
        system = resolver.system(entry, frozenset())
        loose = system_free_vars(system)
        if loose:
            raise UnboundIdentifier(f"Unbound value variables in the entry system: {', '.join(sorted(loose))}",
                                    *_position(entry))
    logger.debug(f"Parsed program with {len(pending)} definitions")
    return SourceUnit(resolver.resolved, system)


def parse_definitions(text: str) -> Dict[str, Definition]:
    return parse_program(text).definitions


def parse_system(text: str, definitions: Optional[Mapping[str, Definition]] = None) -> System:
    """A closed system, optionally against already parsed definitions"""
    return parse_system_template(text, definitions, ())


def parse_system_template(text: str, definitions: Optional[Mapping[str, Definition]] = None,
                          params: Iterable[str] = ()) -> System:
    """A system whose free value variables are among params"""
    params = frozenset(params)
    tree = _parse_tree(text, "system_text")
    system = _Resolver({}, definitions).system(tree.children[0], params)
    loose = system_free_vars(system) - params
    if loose:
        raise UnboundIdentifier(f"Unbound value variables: {', '.join(sorted(loose))}", *_position(tree))
    return system


def parse_value(text: str) -> Value:
    tree = _parse_tree(text, "value_text")
    return _Resolver({}).value(tree.children[0], frozenset())


def load_program(path: Union[str, Path]) -> SourceUnit:
    return parse_program(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Pretty printing
# ---------------------------------------------------------------------------


def _decl(name: Name, rtype: ResType) -> str:
    return str(name) if rtype == ZERO_TYPE else f"{name}:{rtype}"


def _term(t: Thread) -> str:
    """t at thread_term precedence"""
    if isinstance(t, Par):
        return f"({pretty_thread(t)})"
    return pretty_thread(t)


def _continuation(t: Thread) -> str:
    return "" if t == STOP else "." + _term(t)


def pretty_thread(t: Thread) -> str:
    if isinstance(t, Input):
        params = f"({', '.join(t.params)})" if t.params else ""
        return f"{format_value(t.chan)}?{params}{_continuation(t.body)}"
    if isinstance(t, Output):
        args = f"({', '.join(format_value(a) for a in t.args)})" if t.args else ""
        return f"{format_value(t.chan)}!{args}{_continuation(t.body)}"
    if isinstance(t, Match):
        return (f"if {format_value(t.left)} = {format_value(t.right)} "
                f"then {_term(t.then)} else {_term(t.orelse)}")
    if isinstance(t, New):
        return f"new {_decl(t.name, t.rtype)} in {_term(t.body)}"
    if isinstance(t, Par):
        return f"{_term(t.left)} | {pretty_thread(t.right)}"
    if isinstance(t, Rec):
        return f"rec {t.var}. {_term(t.body)}"
    if isinstance(t, RecVar):
        return t.ident
    return "stop"


def pretty_system(m: System) -> str:
    if isinstance(m, Owned):
        return f"[{m.owner}] {_term(m.thread)}"
    if isinstance(m, SysNew):
        body = pretty_system(m.body)
        if isinstance(m.body, SysPar):
            body = f"({body})"
        return f"new {_decl(m.name, m.rtype)} in {body}"
    if isinstance(m, SysPar):
        left = pretty_system(m.left)
        if isinstance(m.left, SysPar):
            left = f"({left})"
        return f"{left} | {pretty_system(m.right)}"
    return "0"


def pretty_program(unit: SourceUnit) -> str:
    lines = []
    for definition in unit.definitions.values():
        formals = f"({', '.join(definition.formals)})" if definition.formals else ""
        lines.append(f"def {definition.name}{formals} = {pretty_thread(definition.body)}")
    if unit.system is not None:
        lines.append(f"system {pretty_system(unit.system)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------


class PolicyModel(BaseModel):
    """Recording policy coefficients: the record moves by u*use + p*provide"""

    model_config = ConfigDict(extra="forbid")

    u: int
    p: int


class ResourceModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    use: NonNegativeInt
    provide: NonNegativeInt
    rec: Union[Literal["standard"], PolicyModel] = "standard"


class EnvDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    owners: Dict[str, Union[Literal["inf"], NonNegativeInt]]
    resources: Dict[str, ResourceModel] = Field(default_factory=dict)
    record: int = 0
    scoped: Dict[str, Union[Literal["standard"], PolicyModel]] = Field(default_factory=dict)

    @field_validator("owners")
    @classmethod
    def at_least_two_owners(cls, owners: Dict[str, Union[str, int]]) -> Dict[str, Union[str, int]]:
        if len(owners) < 2:
            raise ValueError(f"a cost environment needs at least two owners, got {len(owners)}")
        return owners


class EntryModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    left: str
    right: str
    params: Dict[str, str] = Field(default_factory=dict)
    min_credit: NonNegativeInt = 0
    env_left: str
    env_right: str
    min_funds_left: Dict[str, NonNegativeInt] = Field(default_factory=dict)
    min_funds_right: Dict[str, NonNegativeInt] = Field(default_factory=dict)
    initial: bool = False


class FundSampleModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    left: Dict[str, NonNegativeInt] = Field(default_factory=dict)
    right: Dict[str, NonNegativeInt] = Field(default_factory=dict)


class WitnessDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    definitions: str = ""
    envs: Dict[str, EnvDocument]
    carriers: Dict[str, List[str]] = Field(default_factory=dict)
    entries: List[EntryModel]
    observers: Union[None, Literal["external"], List[str]] = None
    inputs: List[str] = Field(default_factory=list)
    fund_samples: List[FundSampleModel] = Field(default_factory=list)
    quanta: Optional[List[NonNegativeInt]] = None


class TraceStepModel(BaseModel):
    label: str
    weight: int
    record_after: int
    owner_funds_after: Dict[str, str]


class TraceModel(BaseModel):
    steps: List[TraceStepModel]
    final_record: int
    final_funds: Dict[str, str]
    complete: bool
    truncated: bool


class GameMoveModel(BaseModel):
    side: str
    label: str
    weight: int
    response_weight: Optional[int] = None
    required: str
    left: str
    right: str


class VerdictModel(BaseModel):
    kind: Literal["Proven", "RefutedWithinBounds", "Inconclusive"]
    credit: int
    required: str
    pairs: int
    truncated: bool
    cause: List[GameMoveModel] = Field(default_factory=list)
    reason: str = ""


def _pointer(loc: Sequence[Union[str, int]]) -> str:
    return "/" + "/".join(str(part).replace("~", "~0").replace("/", "~1") for part in loc)


def _schema_error(e: ValidationError, what: str) -> EnvError:
    first = e.errors()[0]
    details = "; ".join(f"{_pointer(err['loc'])}: {err['msg']}" for err in e.errors()[:5])
    logger.debug(f"Invalid {what} document: {details}")
    return EnvError(f"Invalid {what} at {_pointer(first['loc'])}: {first['msg']}")


def _policy(model: Union[str, PolicyModel]) -> RecPolicy:
    return STANDARD if model == "standard" else RecPolicy(model.u, model.p)


def env_from_document(doc: EnvDocument) -> CostEnv:
    owners = {Owner(o): (INF if f == "inf" else f) for o, f in doc.owners.items()}
    resources = {parse_name(n): (ResType(r.use, r.provide), _policy(r.rec)) for n, r in doc.resources.items()}
    scoped = {base: _policy(p) for base, p in doc.scoped.items()}
    return CostEnv.build(owners, resources, record=doc.record, scoped=scoped)


def env_to_document(env: CostEnv) -> EnvDocument:
    def policy(p: RecPolicy) -> Union[str, PolicyModel]:
        return "standard" if p.is_standard else PolicyModel(u=p.u_coeff, p=p.p_coeff)

    return EnvDocument(
        owners={o.id: ("inf" if f == INF else int(f)) for o, f in env.owners},
        resources={str(r.name): ResourceModel(use=r.rtype.use_cost, provide=r.rtype.provide_cost, rec=policy(r.policy))
                   for r in env.resources},
        record=env.record,
        scoped={base: policy(p) for base, p in env.scoped},
    )


def parse_env(text: str) -> CostEnv:
    try:
        doc = EnvDocument.model_validate_json(text)
    except ValidationError as e:
        raise _schema_error(e, "environment") from e
    return env_from_document(doc)


def load_env(path: Union[str, Path]) -> CostEnv:
    return parse_env(Path(path).read_text(encoding="utf-8"))


def pretty_env(env: CostEnv) -> str:
    return env_to_document(env).model_dump_json(indent=2) + "\n"


def _funds_table(table: Mapping[str, int]) -> Tuple[Tuple[Owner, int], ...]:
    return tuple(sorted((Owner(o), f) for o, f in table.items()))


def parse_witness(text: str) -> WitnessFamily:
    """Witness family with templates resolved against the shared definitions"""
    try:
        doc = WitnessDocument.model_validate_json(text)
    except ValidationError as e:
        raise _schema_error(e, "witness family") from e
    definitions = parse_definitions(doc.definitions)
    envs = {name: env_from_document(env) for name, env in doc.envs.items()}
    observers = None
    if doc.observers == "external":
        envs = {name: with_external(env, EXTERNAL) for name, env in envs.items()}
        observers = frozenset((EXTERNAL,))
    elif doc.observers is not None:
        observers = frozenset(Owner(o) for o in doc.observers)
    carriers = {name: tuple(parse_value(v) for v in values) for name, values in doc.carriers.items()}

    entries = []
    for entry in doc.entries:
        for carrier in entry.params.values():
            if carrier not in carriers:
                raise WitnessError(f"Entry {entry.name} uses unknown carrier {carrier}")
        for env_name in (entry.env_left, entry.env_right):
            if env_name not in envs:
                raise WitnessError(f"Entry {entry.name} refers to unknown environment {env_name}")
        params = tuple(entry.params.items())
        entries.append(WitnessEntry(
            name=entry.name,
            left=parse_system_template(entry.left, definitions, entry.params),
            right=parse_system_template(entry.right, definitions, entry.params),
            params=params,
            min_credit=entry.min_credit,
            env_left=entry.env_left,
            env_right=entry.env_right,
            min_funds_left=_funds_table(entry.min_funds_left),
            min_funds_right=_funds_table(entry.min_funds_right),
            initial=entry.initial,
        ))
    samples = tuple(FundSample(_funds_table(s.left), _funds_table(s.right)) for s in doc.fund_samples)
    logger.info(f"Loaded witness family with {len(entries)} entries and {len(carriers)} carriers")
    return WitnessFamily(
        entries=entries,
        carriers=carriers,
        envs=envs,
        observers=observers,
        inputs=tuple(parse_value(v) for v in doc.inputs),
        fund_samples=samples,
        quanta=frozenset(doc.quanta) if doc.quanta is not None else None,
    )


def load_witness(path: Union[str, Path]) -> WitnessFamily:
    return parse_witness(Path(path).read_text(encoding="utf-8"))
