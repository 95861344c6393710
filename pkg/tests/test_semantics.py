"""Tests for reductions, labelled actions, runs, barbs and LTS exploration"""

import pytest

from picost.costenv import STANDARD, Configuration, CostEnv
from picost.frontend import parse_system
from picost.scenarios import build, run_variant
from picost.semantics import (
    TAU, ExplorationBounds, FundLabel, barbs, concrete_actions, abstract_actions, explore, normalize, reductions,
    run, state_key, to_dot, trace_to_json, weak_closure,
)
from picost.syntax import Name, Owner, ResType, struct_eq

O, P = Owner("o"), Owner("p")


def small_env(o_funds=10, p_funds=10) -> CostEnv:
    return CostEnv.build({O: o_funds, P: p_funds}, {Name("a"): (ResType(1, 0), STANDARD),
                                                   Name("b"): (ResType(0, 0), STANDARD)})


def library_run(name: str, variant: str, **params):
    return run(build(name, **params).configuration, strategy=run_variant(name, variant))


class TestReductions:
    """Test the reduction relation"""

    def test_communication_charges(self):
        """Test a communication is weighted by the use cost"""
        c = Configuration(small_env(), parse_system("[o] a!(b) | [p] a?(x). x!"))
        steps = reductions(c)
        assert len(steps) == 1
        assert steps[0].label == TAU
        assert steps[0].weight == 1
        assert steps[0].target.env.funds(O) == 9
        assert steps[0].channel == Name("a")

    def test_unpayable_communication_blocked(self):
        """Test a communication the user cannot pay does not reduce"""
        c = Configuration(small_env(o_funds=0), parse_system("[o] a! | [p] a?"))
        assert reductions(c) == ()

    def test_continuations_keep_owners(self):
        """Test the sender's continuation stays with the sender and the input body runs under the provider"""
        c = Configuration(small_env(), parse_system("[o] a!(b). b! | [p] a?(x). x?"))
        steps = reductions(c)
        assert len(steps) == 1
        assert struct_eq(steps[0].target.system, parse_system("[o] b! | [p] b?"))

    def test_sender_continuation_charged_to_sender(self):
        """Test a use released by a communication is still paid for by the sender"""
        env = CostEnv.build({Owner("u"): 0, Owner("p"): 1, Owner("q"): 0},
                            {Name("a"): (ResType(0, 0), STANDARD), Name("b"): (ResType(1, 0), STANDARD)})
        c = Configuration(env, parse_system("[u] a!. b! | [p] a? | [q] b?"))
        steps = reductions(c)
        assert [t.channel for t in steps] == [Name("a")]
        assert reductions(steps[0].target) == ()
        assert steps[0].target.env.funds(Owner("p")) == 1

    def test_unwinding_is_silent(self):
        """Test recursion unwinds with weight 0"""
        c = build("ud").configuration
        steps = reductions(c)
        assert [(t.label, t.weight) for t in steps] == [(TAU, 0)]

    def test_normalize_stable(self):
        """Test normalization is idempotent on state keys"""
        c = normalize(build("library-local").configuration)
        assert state_key(normalize(c)) == state_key(c)

    def test_weak_closure_includes_silent_steps(self):
        """Test the weak closure reaches states behind a communication"""
        c = Configuration(small_env(), parse_system("[o] a!(b) | [p] a?(x). x!"))
        closure = weak_closure(c)
        assert sorted(w for w, _ in closure.moves[TAU]) == [0, 1]
        assert any(label != TAU for label in closure.moves)
        assert not closure.truncated

    def test_weak_closure_depth_bound(self):
        """Test a zero silent depth truncates the closure"""
        c = Configuration(small_env(), parse_system("[o] a!(b) | [p] a?(x). x!"))
        closure = weak_closure(c, ExplorationBounds(tau_depth=0))
        assert closure.truncated
        assert [w for w, _ in closure.moves[TAU]] == [0]


class TestLabelledActions:
    """Test concrete and abstract labelled actions"""

    def test_output_to_every_provider(self):
        """Test an output is offered once per provider that can pay"""
        c = normalize(build("ud").configuration)
        unwound = reductions(c)[0].target
        outputs = [t for t in concrete_actions(unwound) if t.label != TAU]
        assert len(outputs) == 2
        assert {t.weight for t in outputs} == {2}
        assert {str(t.label) for t in outputs} == {"[o>o] up!()", "[o>e] up!()"}

    def test_abstract_actions_hide_unobserved(self):
        """Test an abstract view keeps only steps involving observers"""
        c = normalize(build("ud").configuration)
        unwound = reductions(c)[0].target
        steps = abstract_actions(unwound, frozenset({Owner("e")}), frozenset({0, 2}))
        funds_moves = [t for t in steps if isinstance(t.label, FundLabel)]
        others = [t for t in steps if not isinstance(t.label, FundLabel) and t.label != TAU]
        assert len(others) == 1
        assert str(others[0].label) == "[>e] up!()"
        assert all(t.weight == 0 for t in funds_moves)

    def test_reductions_agree_with_silent_actions(self):
        """Test the silent labelled actions are exactly the reductions over reachable states"""
        total = 0
        for name in ("publishing", "kickback", "library-local", "library-sys-central"):
            lts = explore(build(name).configuration, ExplorationBounds(state_cap=300))
            for cfg in lts.states.values():
                strong = {(t.weight, state_key(t.target)) for t in reductions(cfg)}
                silent = {(t.weight, state_key(t.target)) for t in concrete_actions(cfg) if t.label == TAU}
                assert strong == silent
            total += len(lts.states)
        assert total >= 500


class TestLibraryRuns:
    """Test the book prodding runs"""

    @pytest.mark.parametrize("name,variant,record", [
        ("library-local", "no-store", 5),
        ("library-local", "store", 10),
        ("library-central", "no-store", 11),
        ("library-central", "store", 12),
    ])
    def test_run_records(self, name, variant, record):
        """Test one request records the expected total"""
        trace = library_run(name, variant)
        assert trace.complete
        assert trace.final.record == record
        assert trace.total_weight == record

    def test_finite_funds_split(self):
        """Test who pays in the local run without the depository"""
        trace = library_run("library-local", "no-store", funds=10)
        assert trace.final.env.funds(Owner("pub")) == 8
        assert trace.final.env.funds(Owner("lib")) == 7

    def test_trace_json(self):
        """Test trace steps serialize with records and funds"""
        trace = library_run("library-local", "no-store")
        steps = trace_to_json(trace)
        assert steps[-1]["record_after"] == 5
        assert steps[0]["owner_funds_after"]["pub"] == "inf"
        assert {"label", "weight", "record_after", "owner_funds_after"} <= set(steps[0])


class TestOtherRuns:
    """Test fund transfer and the publishing cycles"""

    @pytest.mark.parametrize("k", [1, 5, 10])
    def test_fund_transfer(self, k):
        """Test dad pays kate exactly k"""
        trace = run(build("fund-transfer", k=k).configuration)
        assert trace.complete
        assert trace.final.env.funds(Owner("dad")) == 10 - k
        assert trace.final.env.funds(Owner("kate")) == k

    @pytest.mark.parametrize("name,env,record", [
        ("publishing", "327", 1),
        ("publishing", "216", 2),
        ("kickback", "327", 2),
        ("kickback", "216", 3),
    ])
    def test_publishing_cycle(self, name, env, record):
        """Test one publishing cycle records the expected profit"""
        trace = run(build(name, env=env).configuration, strategy=run_variant(name, "cycle"))
        assert trace.complete
        assert trace.final.record == record

    def test_publisher_profit(self):
        """Test the publisher gains one unit per cycle under 327"""
        trace = run(build("publishing").configuration, strategy=run_variant("publishing", "cycle"))
        assert trace.final.env.funds(Owner("p")) == trace.initial.env.funds(Owner("p")) + 1

    def test_publisher_needs_provide_cost(self):
        """Test p cannot close a cycle with 5 since providing publish costs it 1 after news and adv"""
        c = build("publishing").configuration
        short = Configuration(c.env.with_funds({P: 5}), c.system)
        trace = run(short, strategy=run_variant("publishing", "cycle"))
        assert not trace.complete
        assert trace.initial.env.funds(P) == 5

    def test_step_limit_truncates(self):
        """Test a run stops at the step limit"""
        trace = run(build("library-local").configuration, steps=2)
        assert trace.truncated
        assert not trace.complete
        assert len(trace.steps) == 2


class TestBarbs:
    """Test observable barbs"""

    def test_kill_switch_affordable(self):
        """Test omega is observable when o can pay k"""
        report = barbs(build("kill-switch", k=3, funds=3).configuration)
        assert (Name("omega"), "!") in report.barbs

    def test_kill_switch_unaffordable(self):
        """Test omega is hidden when o cannot pay k"""
        report = barbs(build("kill-switch", k=3, funds=2).configuration)
        assert (Name("omega"), "!") not in report.barbs

    def test_restricted_names_hidden(self):
        """Test restricted channels never show as barbs"""
        report = barbs(build("kill-switch").configuration)
        assert all(name.base != "r" for name, _ in report.barbs)


class TestExplore:
    """Test LTS fragments and DOT output"""

    def test_explore_ud(self):
        """Test the up-down fragment is small and closed"""
        lts = explore(build("ud").configuration, ExplorationBounds(state_cap=50))
        assert not lts.truncated
        assert lts.initial in lts.states
        assert {w for _, _, w, _ in lts.edges} <= {0, 2, 5}

    def test_state_cap(self):
        """Test exploration stops at the state cap"""
        lts = explore(build("publishing").configuration, ExplorationBounds(state_cap=20))
        assert lts.truncated
        assert len(lts.states) == 20

    def test_dot(self):
        """Test DOT output marks the initial state"""
        dot = to_dot(explore(build("ud").configuration, ExplorationBounds(state_cap=50)))
        assert dot.startswith("digraph picost {")
        assert "peripheries=2" in dot
        assert dot.rstrip().endswith("}")
