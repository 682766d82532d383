import pytest

from pncatoms import gf2
from pncatoms.atoms import CIGraph, TransmissionPattern, catalog, get_atom
from pncatoms.patterns import (UNGUARDED, SearchInconclusive, find_pattern, initial_spans,
                               lower_bound_conditions, min_slots, simulate, verify)


def _names(atom):
    return atom.flow_set.packet_names


def test_cross_first_slot_gives_a_plus_c():
    atom = get_atom("VI")
    report = simulate(TransmissionPattern(atom.pnc_pattern.slots[:1]), atom.ci_graph, atom.flow_set)
    assert report.valid
    a_plus_c = gf2.parse_expression("A+C", _names(atom))
    for node in ("R", "B", "D"):
        assert gf2.contains(report.spans[node], a_plus_c)


def test_empty_pattern_keeps_initial_spans():
    atom = get_atom("V")
    report = simulate(TransmissionPattern(()), atom.ci_graph, atom.flow_set)
    assert report.valid
    assert report.spans == initial_spans(atom.ci_graph, atom.flow_set)


def test_missing_guard_is_reported():
    atom = get_atom("V")
    ci = atom.ci_graph
    kept = tuple(ie for ie in ci.i_edges if not (ie.interferer == "B" and ie.receiver == "D"))
    assert len(kept) == len(ci.i_edges) - 1
    report = simulate(atom.pnc_pattern, CIGraph(ci.peripherals, ci.c_edges, kept), atom.flow_set)
    assert not report.valid
    assert any(v.node == "D" and v.reason == UNGUARDED for v in report.violations)


def test_truncated_twrc_does_not_decode():
    atom = get_atom("I")
    report = simulate(TransmissionPattern(atom.pnc_pattern.slots[:1]), atom.ci_graph, atom.flow_set)
    assert report.valid and not report.all_decoded


def test_worked_decodes():
    viii = get_atom("VIII")
    report = simulate(viii.pnc_pattern, viii.ci_graph, viii.flow_set)
    assert report.decoded[("E", "B")]
    iii = get_atom("III")
    assert simulate(iii.pnc_pattern, iii.ci_graph, iii.flow_set).decoded[("B", "C")]


def test_spans_never_shrink():
    for atom in catalog():
        pattern = atom.pnc_pattern
        prev = initial_spans(atom.ci_graph, atom.flow_set)
        for k in range(1, len(pattern) + 1):
            cur = simulate(TransmissionPattern(pattern.slots[:k]), atom.ci_graph, atom.flow_set).spans
            assert all(gf2.is_subspace(prev[n], cur[n]) for n in prev)
            prev = cur


def test_simulate_is_deterministic():
    atom = get_atom("IX")
    a = simulate(atom.pnc_pattern, atom.ci_graph, atom.flow_set)
    b = simulate(atom.pnc_pattern, atom.ci_graph, atom.flow_set)
    assert a.to_dict(_names(atom)) == b.to_dict(_names(atom))


def test_unknown_label_is_rejected():
    atom = get_atom("I")
    bad = TransmissionPattern(atom.pnc_pattern.relabel({"A": "Z", "B": "B"}).slots)
    with pytest.raises(ValueError):
        simulate(bad, atom.ci_graph, atom.flow_set)


@pytest.mark.parametrize("cid,expected", [("I", 2), ("II", 2), ("V", 2), ("VI", 3)])
def test_small_atoms_minimum(cid, expected):
    atom = get_atom(cid)
    assert min_slots(atom.ci_graph, atom.flow_set) == expected
    assert min_slots(atom.ci_graph, atom.flow_set, allow_peripheral_downlink=True) == expected


def test_search_result_is_a_valid_pattern():
    atom = get_atom("VI")
    pattern = find_pattern(atom.ci_graph, atom.flow_set, 3)
    report = simulate(pattern, atom.ci_graph, atom.flow_set)
    assert report.valid and report.all_decoded
    assert find_pattern(atom.ci_graph, atom.flow_set, 2) is None


def test_budget_exhaustion_is_explicit():
    atom = get_atom("IX")
    with pytest.raises(SearchInconclusive):
        min_slots(atom.ci_graph, atom.flow_set, 5, budget=50)


def test_search_preconditions():
    atom = get_atom("I")
    with pytest.raises(ValueError):
        min_slots(atom.ci_graph, atom.flow_set, max_slots=9)


@pytest.mark.parametrize("cid,bound,a2", [("I", 2, False), ("VI", 3, False), ("VII", 3, True),
                                          ("III", 3, True)])
def test_lower_bound_conditions(cid, bound, a2):
    cond = lower_bound_conditions(get_atom(cid))
    assert cond.prop_a1_bound == bound
    assert cond.prop_a2_applies is a2


def test_verify_snc_uses_connectivity_only():
    for atom in catalog():
        assert verify(atom, "snc")
