"""Tests for the shipped scenarios and comparisons"""

import pytest

from picost.costenv import INF
from picost.errors import ScenarioError
from picost.scenarios import (
    COMPARISONS, RUN_VARIANTS, build, compare, list_scenarios, parse_scenario_id, run_comparison, run_variant,
)
from picost.syntax import Owner, free_names, is_closed


class TestScenarioIds:
    """Test scenario id parsing"""

    def test_plain(self):
        """Test an id without arguments"""
        assert parse_scenario_id("ud") == ("ud", {})

    def test_positional(self):
        """Test positional arguments follow the declared order"""
        assert parse_scenario_id("kill-switch(3, 2)") == ("kill-switch", {"k": "3", "funds": "2"})

    def test_keywords(self):
        """Test keyword arguments"""
        assert parse_scenario_id("kill-switch(funds=2)") == ("kill-switch", {"funds": "2"})

    def test_unknown(self):
        """Test unknown scenarios raise"""
        with pytest.raises(ScenarioError):
            parse_scenario_id("nosuch")

    def test_malformed(self):
        """Test malformed ids raise"""
        with pytest.raises(ScenarioError):
            parse_scenario_id("ud(25")

    def test_too_many_arguments(self):
        """Test surplus positional arguments raise"""
        with pytest.raises(ScenarioError):
            parse_scenario_id("ud(25, 42)")


class TestBuild:
    """Test building scenarios"""

    def test_every_scenario_is_a_configuration(self):
        """Test every default scenario is closed and fully registered"""
        for info in list_scenarios():
            built = build(info.name)
            c = built.configuration
            assert is_closed(c.system)
            assert free_names(c.system) <= c.env.domain

    def test_parameters_converted(self):
        """Test string parameters are converted"""
        built = build("kill-switch(k=4, funds=inf)")
        assert built.env.funds(Owner("o")) == INF

    def test_keyword_parameters(self):
        """Test parameters given as keywords override the id"""
        built = build("fund-transfer", k=3, funds=7)
        assert built.env.funds(Owner("dad")) == 7

    def test_bad_choice(self):
        """Test choices are checked"""
        with pytest.raises(ScenarioError):
            build("ud(99)")

    def test_bad_number(self):
        """Test naturals are checked"""
        with pytest.raises(ScenarioError):
            build("kill-switch(k=-1)")

    def test_unknown_parameter(self):
        """Test unknown parameters raise"""
        with pytest.raises(ScenarioError):
            build("ud(speed=2)")

    def test_signatures(self):
        """Test signatures show the defaults"""
        signatures = {info.name: info.signature for info in list_scenarios()}
        assert signatures["kill-switch"] == "kill-switch(k=3, funds=3)"
        assert signatures["library-local"] == "library-local(funds=inf)"
        assert signatures["owner-id"] == "owner-id(owner=o1)"


class TestVariants:
    """Test named run strategies"""

    def test_library_variants(self):
        """Test the library variants avoid or require the depository"""
        assert run_variant("library-local", "no-store").avoid == frozenset({"reqS"})
        assert run_variant("library-central", "store").require == frozenset({"reqS"})

    def test_no_variant(self):
        """Test no variant means the plain run"""
        assert not run_variant("ud", None).until_cycle

    def test_unknown_variant(self):
        """Test unknown variants raise with the available choices"""
        with pytest.raises(ScenarioError) as exc_info:
            run_variant("publishing", "store")
        assert "cycle" in str(exc_info.value)

    def test_registered_variants_resolve(self):
        """Test every registered variant resolves"""
        for name, variants in RUN_VARIANTS.items():
            for variant in variants:
                assert run_variant(name, variant) is variants[variant]


class TestComparisons:
    """Test the registered comparisons"""

    def test_sides_build(self):
        """Test every comparison refers to buildable scenarios"""
        for comparison in COMPARISONS.values():
            build(comparison.left)
            build(comparison.right)

    @pytest.mark.parametrize("name", sorted(COMPARISONS))
    def test_expected_verdicts(self, name):
        """Test each comparison reaches its recorded verdict"""
        assert run_comparison(name).kind == COMPARISONS[name].expected

    def test_unknown_comparison(self):
        """Test unknown comparisons raise"""
        with pytest.raises(ScenarioError):
            run_comparison("nosuch")

    def test_unknown_view(self):
        """Test unknown views raise"""
        c = build("ud").configuration
        with pytest.raises(ScenarioError):
            compare(c, c, 0, view="sideways")

    def test_abstract_needs_observers(self):
        """Test an abstract comparison needs observers"""
        c = build("ud").configuration
        with pytest.raises(ScenarioError):
            compare(c, c, 0, view="abstract")
