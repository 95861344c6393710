"""Tests for the amortised preorder, its views and witness families"""

import json
import random

import pytest

from picost.config import get_corpus_file
from picost.costenv import INF, Configuration
from picost.equivalence import (
    ExplicitWlts, Inconclusive, Proven, RefutedWithinBounds, check_amortised, check_configurations,
    check_cost_improving, format_credit, naive_verify, verify_witness,
)
from picost.frontend import parse_system, parse_witness
from picost.scenarios import build, compare, run_comparison
from picost.semantics import TAU, ExplorationBounds


SHORT_FUNDS_FAMILY = {
    "envs": {
        "cheap": {"owners": {"o": 3, "p": "inf"},
                  "resources": {"a": {"use": 1, "provide": 0}, "b": {"use": 1, "provide": 0}}},
        "dear": {"owners": {"o": 3, "p": "inf"},
                 "resources": {"a": {"use": 1, "provide": 0}, "b": {"use": 3, "provide": 0}}},
    },
    "entries": [
        {"name": "start", "left": "[o] a!. b!", "right": "[o] a!. b!", "min_credit": 5,
         "env_left": "cheap", "env_right": "dear", "initial": True},
        {"name": "then", "left": "[o] b!", "right": "[o] b!", "min_credit": 5,
         "env_left": "cheap", "env_right": "dear"},
        {"name": "done", "left": "[o] stop", "right": "[o] stop", "env_left": "cheap", "env_right": "dear"},
    ],
}


def random_wlts(rng: random.Random, states: int = 4) -> ExplicitWlts:
    transitions = {}
    for s in range(states):
        transitions[s] = [(rng.choice(["a", "b", TAU]), rng.randint(0, 3), rng.randrange(states))
                          for _ in range(rng.randint(0, 3))]
    return ExplicitWlts(transitions, ExplorationBounds(weight_cap=64))


def mutated_witness(stem: str, edit) -> str:
    doc = json.loads(get_corpus_file(f"{stem}.json").read_text(encoding="utf-8"))
    edit(doc)
    return json.dumps(doc)


def set_credit(name: str, credit: int):
    def edit(doc):
        next(e for e in doc["entries"] if e["name"] == name)["min_credit"] = credit
    return edit


class TestExplicitGames:
    """Test the credit game on hand-built weighted LTSs"""

    def test_cheaper_loop_below(self):
        """Test a cheaper loop is below a dearer one at credit 0"""
        view = ExplicitWlts({"s": [("a", 1, "s")], "t": [("a", 2, "t")]})
        verdict = check_amortised(view, "t", "s", 0)
        assert isinstance(verdict, Proven)
        assert verdict.required == 0

    def test_dearer_loop_refuted(self):
        """Test the loop losing a unit per round is refuted at any credit"""
        view = ExplicitWlts({"s": [("a", 1, "s")], "t": [("a", 2, "t")]})
        verdict = check_amortised(view, "s", "t", 10)
        assert isinstance(verdict, RefutedWithinBounds)
        assert verdict.cause
        assert verdict.cause[0].label == "a"

    def test_one_off_debt(self):
        """Test a single dearer step needs exactly its difference in credit"""
        view = ExplicitWlts({"s": [("a", 1, "s1")], "t": [("a", 4, "t1")]})
        assert check_amortised(view, "s", "t", 3).ok
        assert not check_amortised(view, "s", "t", 2).ok

    def test_missing_label(self):
        """Test an unanswerable challenge refutes"""
        view = ExplicitWlts({"s": [("a", 0, "s")], "t": [("b", 0, "t")]})
        assert isinstance(check_amortised(view, "s", "t", 0), RefutedWithinBounds)

    def test_weak_answer(self):
        """Test silent steps may precede the answer"""
        view = ExplicitWlts({"s": [("a", 3, "s1")], "t": [(TAU, 0, "t1")], "t1": [("a", 2, "t2")]})
        verdict = check_amortised(view, "s", "t", 0)
        assert verdict.ok
        assert verdict.required == 0

    def test_credit_cap(self):
        """Test starting credits above the cap are rejected"""
        view = ExplicitWlts({"s": []}, ExplorationBounds(credit_cap=4))
        with pytest.raises(ValueError):
            check_amortised(view, "s", "s", 5)

    def test_negative_credit_mode(self):
        """Test the losing loop passes once credits may go negative"""
        view = ExplicitWlts({"s": [("a", 1, "s")], "t": [("a", 2, "t")]}, ExplorationBounds(allow_negative_credit=True))
        verdict = check_amortised(view, "s", "t", 0)
        assert verdict.ok
        assert format_credit(verdict.required) == "-inf"

    def test_reflexive(self):
        """Test every state is below itself at credit 0"""
        rng = random.Random(11)
        for _ in range(100):
            view = random_wlts(rng)
            for s in view.transitions:
                assert check_amortised(view, s, s, 0).ok

    def test_monotone_and_witnessed(self):
        """Test verdicts are monotone in the credit and proofs pass the direct check"""
        rng = random.Random(5)
        for _ in range(100):
            view = random_wlts(rng)
            s, t = rng.randrange(4), rng.randrange(4)
            previous = False
            for n in range(4):
                verdict = check_amortised(view, s, t, n)
                assert verdict.ok or not previous
                previous = verdict.ok
                if isinstance(verdict, Proven):
                    assert naive_verify(view, verdict.witness) == []

    def test_state_cap_inconclusive(self):
        """Test an arena cut short by the state cap is inconclusive, not refuted"""
        chain = {i: [("a", 0, i + 1)] for i in range(50)}
        chain.update({f"t{i}": [("a", 1, f"t{i + 1}")] for i in range(50)})
        view = ExplicitWlts(chain, ExplorationBounds(state_cap=5))
        verdict = check_amortised(view, 0, "t0", 0)
        assert isinstance(verdict, Inconclusive)


class TestConfigurationChecks:
    """Test the preorder on worked examples"""

    def test_up_down(self):
        """Test the cheaper up-down needs credit 2"""
        verdict = run_comparison("ud")
        assert isinstance(verdict, Proven)
        assert verdict.required == 2
        assert not run_comparison("ud", credit=1).ok

    @pytest.mark.parametrize("credit", range(0, 11))
    def test_up_down_reverse(self, credit):
        """Test the dearer up-down is never below the cheaper one"""
        assert isinstance(run_comparison("ud-reverse", credit=credit), RefutedWithinBounds)

    def test_up_down_reverse_negative(self):
        """Test the reverse holds when credits may go negative"""
        left, right = build("ud(42)").configuration, build("ud(25)").configuration
        verdict = check_configurations(left, right, 0, ExplorationBounds(allow_negative_credit=True))
        assert verdict.ok

    def test_components_related(self):
        """Test a single use of a is related across the two environments"""
        assert run_comparison("noncomp-singleton").ok

    def test_composition_unrelated(self):
        """Test the same owner using a and b is not related"""
        assert isinstance(run_comparison("noncomp"), RefutedWithinBounds)

    def test_observer_funds_differ(self):
        """Test the abstract view fails the node condition when observer funds differ"""
        verdict = run_comparison("noncomp-observed")
        assert isinstance(verdict, RefutedWithinBounds)
        assert verdict.cause[0].side == "node"

    def test_output_types_concrete(self):
        """Test extruded types tell the concrete labels apart"""
        assert isinstance(run_comparison("output-types"), RefutedWithinBounds)

    def test_output_types_abstract(self):
        """Test an external observer cannot tell the extruded types apart"""
        assert run_comparison("output-types-abstract").ok

    def test_library_system(self):
        """Test the central library system is below the local one at credit 2"""
        assert run_comparison("sys").ok

    @pytest.mark.parametrize("credit", range(0, 9))
    def test_library_front_desk(self, credit):
        """Test the front desk alone is not related at any credit"""
        assert isinstance(run_comparison("lib", credit=credit), RefutedWithinBounds)

    def test_reader(self):
        """Test the reader alone is related for an external observer"""
        assert run_comparison("reader").ok

    def test_publisher_env(self):
        """Test the publisher is below itself across the two cost environments"""
        assert run_comparison("publisher-env").ok

    def test_kickback(self):
        """Test the kickback variant is below the plain one"""
        assert run_comparison("kickback").ok

    def test_kickback_short_funds(self):
        """Test both sides stall alike when p is short of funds"""
        left, right = build("pa-k(4)"), build("pa(4)")
        assert compare(left.configuration, right.configuration, 0, "abstract", ("external",)).ok

    def test_alpha_variant_outputs(self):
        """Test extruding differently named private names of one type is related both ways"""
        env = build("output-types(1)").env
        left = Configuration(env, parse_system("new r:(1,0) in [o] a!(r)"))
        right = Configuration(env, parse_system("new s:(1,0) in [o] a!(s)"))
        assert check_configurations(left, right, 0).ok
        assert check_configurations(right, left, 0).ok

    def test_alpha_variant_inputs(self):
        """Test fresh inputs get the same name whatever the input parameter is called"""
        env = build("output-types(1)").env
        left = Configuration(env, parse_system("[o] a?(x). x!"))
        right = Configuration(env, parse_system("[o] a?(y). y!"))
        assert check_configurations(left, right, 0).ok

    def test_owner_identification(self):
        """Test concrete labels tell apart which owner pays for the same use"""
        verdict = run_comparison("owner-id")
        assert isinstance(verdict, RefutedWithinBounds)
        assert verdict.cause

    def test_owner_identification_abstract(self):
        """Test an external observer cannot tell which owner pays"""
        assert run_comparison("owner-id-abstract").ok

    def test_tau_view(self):
        """Test cost improvement compares reductions only"""
        generous, frugal = build("fund-transfer(k=2)").configuration, build("fund-transfer(k=1)").configuration
        assert check_cost_improving(generous, frugal, 0).ok
        assert isinstance(check_cost_improving(frugal, generous, 0), RefutedWithinBounds)
        assert check_cost_improving(frugal, generous, 1).ok


class TestWitnessFamilies:
    """Test witness family verification"""

    def test_library_family(self):
        """Test the library family verifies"""
        report = verify_witness(parse_witness(get_corpus_file("library_witness.json").read_text(encoding="utf-8")))
        assert report.passed, report.failures
        assert all(e.instances > 0 for e in report.entries)
        assert not report.closure_truncated

    def test_reached_pairs_checked(self):
        """Test a successor pair failing only at funds no sample lists breaks the family"""
        family = parse_witness(json.dumps(SHORT_FUNDS_FAMILY))
        listed_only = verify_witness(family, closure=0)
        assert listed_only.passed
        assert listed_only.closure_truncated
        report = verify_witness(family)
        assert not report.passed
        assert any("reached, funds o=2" in f for f in report.failures)

    def test_kickback_family(self):
        """Test the kickback family verifies on every fund sample"""
        report = verify_witness(parse_witness(get_corpus_file("kickback_witness.json").read_text(encoding="utf-8")))
        assert report.passed, report.failures
        assert report.reached > 0

    @pytest.mark.parametrize("entry,credit", [("idle", 0), ("asked", 4), ("deciding", 2)])
    def test_library_credit_too_low(self, entry, credit):
        """Test lowering an entry credit breaks the family"""
        report = verify_witness(parse_witness(mutated_witness("library_witness", set_credit(entry, credit))))
        assert not report.passed

    def test_library_env_changed(self):
        """Test changing a provide cost breaks the family"""
        def edit(doc):
            doc["envs"]["central"]["resources"]["goLib"]["provide"] = 4
        report = verify_witness(parse_witness(mutated_witness("library_witness", edit)))
        assert not report.passed

    def test_library_template_changed(self):
        """Test changing a restricted type in the templates breaks the family"""
        text = get_corpus_file("library_witness.json").read_text(encoding="utf-8").replace("reqS:(0,5)", "reqS:(0,6)")
        assert not verify_witness(parse_witness(text)).passed

    def test_kickback_type_changed(self):
        """Test a kickback resource with the costs swapped breaks the family"""
        text = get_corpus_file("kickback_witness.json").read_text(encoding="utf-8").replace("k:(1,0)", "k:(0,1)")
        assert not verify_witness(parse_witness(text)).passed

    def test_funds_are_finite_in_samples(self):
        """Test fund samples only touch finite owners"""
        family = parse_witness(get_corpus_file("kickback_witness.json").read_text(encoding="utf-8"))
        assert family.fund_samples
        for sample in family.fund_samples:
            assert all(f != INF for _, f in sample.left + sample.right)
