#!/usr/bin/env python3
"""
Tests for closed forms and bounds
Exact values, integer bound forms and the bound sandwich against search
"""

import pytest

from formulas import (
    BoundsReport,
    best_odd_divisor,
    bound_statement,
    general_floor,
    s_bounds,
    s_exact,
    s_Zn3,
    sf_bounds,
    strong_size_cap,
    torsion_induction_size,
    w_bounds,
    w_exact_small_t,
    weak_power_lower,
    weak_size_cap,
)
from group_core import DomainError, Group, groups_up_to, parse_group
from independence import INFINITY
from search import max_independent, max_sum_free, max_weakly_independent

SANDWICH_GROUPS = list(groups_up_to(16))


def tags(report: BoundsReport):
    return {tag: value for _, value, tag in report.provenance}


# ============================================================================
# INTEGER FORMS
# ============================================================================

class TestIntegerForms:
    def test_sumset_count_cap(self):
        assert strong_size_cap(11, 4) == 2
        assert strong_size_cap(7, 2) == 3
        assert strong_size_cap(7, 1) == 7

    def test_star_sumset_cap(self):
        assert weak_size_cap(8, INFINITY) == 3
        assert weak_size_cap(16, 2) == 15

    def test_general_floor_without_roots(self):
        assert general_floor(16, 3, 2) == 1
        assert general_floor(200, 1, 2) == 10
        assert general_floor(199, 1, 2) == 9

    def test_torsion_induction(self):
        assert torsion_induction_size(16, 3, 2) == 1
        assert torsion_induction_size(4, 5, 2) == 0

    def test_weak_power_lower_is_strict(self):
        assert weak_power_lower(16, 2) == 2
        assert weak_power_lower(64, 3) == 3

    def test_best_odd_divisor(self):
        assert best_odd_divisor(Group.cyclic(25)) == (5, 5)
        assert best_odd_divisor(Group.cyclic(9)) == (9, 1)
        assert best_odd_divisor(parse_group("3x3")) == (1, 0)


# ============================================================================
# s(G, t)
# ============================================================================

class TestStrongClosedForms:
    def test_exact_values(self):
        assert s_exact(parse_group("2x2x2"), 2) == 0
        assert s_exact(Group.cyclic(8), 3) == 2
        assert s_exact(Group.cyclic(49), 3) == 8
        assert s_exact(Group.cyclic(7), 5) is None
        assert s_exact(Group.cyclic(7), 0) == 7
        assert s_exact(Group.cyclic(7), 1) == 6

    def test_exponent_at_most_t(self):
        assert s_exact(parse_group("3x3"), 3) == 0
        assert s_exact(Group.cyclic(4), 4) == 0

    def test_cyclic_three(self):
        assert s_Zn3(12) == 3
        assert s_Zn3(35) == 7
        assert s_Zn3(25) == 5
        assert s_Zn3(9) == 1
        with pytest.raises(DomainError):
            s_Zn3(1)

    @pytest.mark.parametrize("n", range(2, 31))
    def test_cyclic_three_matches_exact(self, n):
        assert s_exact(Group.cyclic(n), 3) == s_Zn3(n)

    def test_bounds_provenance(self):
        report = s_bounds(Group.cyclic(11), 4)
        assert report.upper == 2
        assert report.lower == 1
        assert report.is_open
        assert tags(report)["sumset-count"] == 2
        assert tags(report)["bh-construction"] == 1

    def test_bounds_collapse_on_exact(self):
        report = s_bounds(Group.cyclic(8), 3)
        assert report.lower == report.upper == report.exact == 2
        assert not report.is_open
        assert report.to_dict()["provenance"][-1]["tag"] == "closed-form"

    def test_negative_t(self):
        with pytest.raises(DomainError):
            s_bounds(Group.cyclic(8), -1)


# ============================================================================
# w(G, t) AND sf(G)
# ============================================================================

class TestWeakAndSumFree:
    def test_weak_exact(self):
        assert w_exact_small_t(Group.cyclic(10), 2) == 5
        assert w_exact_small_t(Group.cyclic(5), 2) == 2
        assert w_exact_small_t(Group.cyclic(5), 0) == 5
        assert w_exact_small_t(Group.cyclic(5), 3) is None

    def test_weak_bounds(self):
        report = w_bounds(Group.cyclic(16), 2)
        assert report.lower >= 2
        assert tags(report)["weak-power"] >= 2
        infinite = w_bounds(parse_group("2x2x2"), INFINITY)
        assert infinite.lower == 3
        assert infinite.upper == 3

    def test_sum_free_bounds(self):
        seven = sf_bounds(Group.cyclic(7))
        assert (seven.lower, seven.upper) == (2, 3)
        two = sf_bounds(Group.cyclic(2))
        assert (two.lower, two.upper) == (1, 1)
        assert sf_bounds(Group.cyclic(10)).upper == 5


class TestProvenanceStatements:
    @pytest.mark.parametrize("group", list(groups_up_to(36)), ids=str)
    def test_every_tag_has_a_statement(self, group):
        reports = [s_bounds(group, t) for t in range(0, 7)]
        reports += [w_bounds(group, t) for t in (0, 1, 2, 3, 4, 5, INFINITY)]
        reports.append(sf_bounds(group))
        for report in reports:
            for entry in report.to_dict()["provenance"]:
                assert entry["statement"] == bound_statement(entry["tag"])

    def test_parametrised_tags(self):
        assert "smallest divisor p" in bound_statement("three-kneser-p5")
        assert bound_statement("three-kneser-mod2") != bound_statement("three-kneser")
        assert "odd divisor d" in bound_statement("three-cosets-odd-d25")
        assert bound_statement("projection-d6") == bound_statement("projection-d9")
        with pytest.raises(DomainError):
            bound_statement("folklore")


# ============================================================================
# SANDWICH AGAINST SEARCH
# ============================================================================

def assert_strong_sandwich(group):
    for t in range(2, 6):
        result = max_independent(group, t)
        assert result.exact
        value = result.max_size
        report = s_bounds(group, t)
        assert report.contains(value), f"s({group},{t})={value} outside [{report.lower}, {report.upper}]"
        if report.exact is not None:
            assert report.exact == value


def assert_weak_sandwich(group):
    for t in range(2, 6):
        result = max_weakly_independent(group, t)
        assert result.exact
        value = result.max_size
        report = w_bounds(group, t)
        assert report.contains(value), f"w({group},{t})={value} outside [{report.lower}, {report.upper}]"
    assert max_weakly_independent(group, 2).max_size == w_exact_small_t(group, 2)


def assert_three_between_ninth_and_quarter(group):
    value = max_independent(group, 3).max_size
    assert group.order / 9 <= value <= group.order / 4


class TestSandwich:
    @pytest.mark.parametrize("group", SANDWICH_GROUPS, ids=str)
    def test_strong(self, group):
        assert_strong_sandwich(group)

    @pytest.mark.parametrize("group", SANDWICH_GROUPS, ids=str)
    def test_weak(self, group):
        assert_weak_sandwich(group)

    @pytest.mark.parametrize("group", SANDWICH_GROUPS, ids=str)
    def test_sum_free(self, group):
        assert sf_bounds(group).contains(max_sum_free(group).max_size)

    @pytest.mark.parametrize("group", [g for g in groups_up_to(24) if g.exponent > 3], ids=str)
    def test_three_between_ninth_and_quarter(self, group):
        assert_three_between_ninth_and_quarter(group)


@pytest.mark.slow
class TestSandwichFullScale:
    @pytest.mark.parametrize("group", list(groups_up_to(36)), ids=str)
    def test_strong(self, group):
        assert_strong_sandwich(group)

    @pytest.mark.parametrize("group", list(groups_up_to(36)), ids=str)
    def test_weak(self, group):
        assert_weak_sandwich(group)

    @pytest.mark.parametrize("group", list(groups_up_to(36)), ids=str)
    def test_sum_free(self, group):
        assert sf_bounds(group).contains(max_sum_free(group).max_size)

    @pytest.mark.parametrize("group", [g for g in groups_up_to(48) if g.exponent > 3], ids=str)
    def test_three_between_ninth_and_quarter(self, group):
        assert_three_between_ninth_and_quarter(group)
