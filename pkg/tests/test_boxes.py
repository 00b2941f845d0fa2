import json
from fractions import Fraction

import numpy as np
import pytest

from boxlab import boxes
from boxlab.boxes import (
    JointDistribution,
    SignalingError,
    TwoQubitDistribution,
    bell_inequality_value,
    chsh_value,
    expectation,
    gyni_value,
    hardy_cabello_check,
    marginal,
    paper_distribution,
    rahaman_check,
    svetlichny_value,
    trace_out_third,
    validate,
)

import oracles

SVET = boxes.SVETLICHNY_DISPLAYED


def uniform():
    return JointDistribution.uniform()


def brute_expectation(entries, settings):
    total = Fraction(0)
    for key, value in entries.items():
        s, o = key.split("|")
        if s == settings:
            total += value * (-1) ** o.count("-")
    return total


@pytest.mark.parametrize("name", boxes.FIXTURE_IDS)
def test_fixtures_are_valid_no_signaling_boxes(name):
    d = paper_distribution(name)
    assert d.exact
    report = validate(d)
    assert report.ok, report.details
    assert report.worst_signaling == 0.0


@pytest.mark.parametrize(
    "name, nonzero, values",
    [("set20", 16, {Fraction(1, 2)}), ("set21", 16, {Fraction(1, 2)}), ("set23", 24, {Fraction(1, 3)}),
     ("set_c04", 18, {Fraction(3, 5), Fraction(2, 5), Fraction(1, 5)})],
)
def test_fixture_shapes(name, nonzero, values):
    d = paper_distribution(name)
    vals = [v for _, v in d.items() if v != 0]
    assert len(vals) == nonzero
    assert set(vals) == values


def test_unknown_fixture():
    with pytest.raises(KeyError):
        paper_distribution("set99")


def test_uniform_valid():
    assert validate(uniform()).ok


def test_moved_entry_signals():
    entries = dict(boxes._FIXTURES["set20"])
    # move UUU|+++ mass onto UUU|++- : normalization survives, but the (2,3) and (1,3)
    # marginals now depend on the first and second party's setting
    entries.pop("UUU|+++")
    entries["UUU|++-"] = Fraction(1, 2)
    report = validate(JointDistribution.from_entries(entries))
    assert report.positivity_ok and report.normalization_ok
    assert not report.no_signaling_ok
    assert report.worst_signaling == pytest.approx(0.5)
    flagged = {k.split(":")[0] for c, k, _ in report.details if c == "no-signaling"}
    assert flagged == {"party1", "party2"}


def test_negative_and_nonfinite_entries():
    entries = {"UUU|+++": 1.5, "UUU|---": -0.5}
    report = validate(JointDistribution.from_entries(entries))
    assert not report.positivity_ok
    assert report.worst_negativity == pytest.approx(0.5)
    with pytest.raises(ValueError):
        JointDistribution(np.full((2,) * 6, np.nan))


def test_no_signaling_equation_count():
    assert len(list(boxes.no_signaling_pairs(3))) == 48
    assert len(list(boxes.no_signaling_pairs(2))) == 8


def test_marginals():
    d = paper_distribution("set23")
    assert marginal(d, (0, 1), "DU", "++") == 0
    assert marginal(d, (0, 2), "UD", "++") == 0
    assert marginal(uniform(), (1, 2), "UD", "+-") == Fraction(1, 4)


def test_marginal_of_signaling_box_is_ambiguous():
    entries = dict(boxes._FIXTURES["set20"])
    entries.pop("UUU|+++")
    entries["UUU|++-"] = Fraction(1, 2)
    with pytest.raises(SignalingError):
        marginal(JointDistribution.from_entries(entries), (1, 2), "UU", "++")
    # the (1,2) marginal only sums over the moved outcome, so it stays well defined
    assert marginal(JointDistribution.from_entries(entries), (0, 1), "UU", "++") == Fraction(1, 2)


@pytest.mark.parametrize("name", boxes.FIXTURE_IDS)
def test_expectation_matches_brute_force(name):
    d = paper_distribution(name)
    entries = boxes._FIXTURES[name]
    for settings in ("UUU", "UUD", "DDD", "DUD"):
        assert expectation(d, settings) == brute_expectation(entries, settings)


def test_expectation_examples():
    assert expectation(paper_distribution("set20"), "UUU") == 1
    assert expectation(uniform(), "DUD") == 0


def test_bell_inequality_value():
    assert bell_inequality_value(paper_distribution("set20")) == Fraction(1, 2)
    all_plus = JointDistribution.deterministic([(0, 0)] * 3)
    assert bell_inequality_value(all_plus) == -2
    assert bell_inequality_value(uniform()) == Fraction(-3, 8)


@pytest.mark.parametrize(
    "name, C, P, Q",
    [("set20", Fraction(1, 2), Fraction(1, 2), 0), ("set21", Fraction(1, 2), Fraction(1, 2), 0),
     ("set23", Fraction(1, 3), Fraction(1, 3), 0), ("set_c04", Fraction(2, 5), Fraction(3, 5), Fraction(1, 5))],
)
def test_hardy_cabello_values(name, C, P, Q):
    res = hardy_cabello_check(paper_distribution(name))
    assert (res.C, res.P, res.Q) == (C, P, Q)
    assert res.zeros_ok and res.succeeds


def test_rahaman():
    res = rahaman_check(paper_distribution("set23"))
    assert res.ok and res.P == Fraction(1, 3)
    res = rahaman_check(paper_distribution("set20"))
    assert not res.ok
    # P(D1,U2|++) summed by hand from set20: DUU|++- and DUD|++- each carry 1/2
    assert res.zeros["D1U2|++"] == Fraction(1, 2)
    assert not rahaman_check(uniform()).ok


def test_rahaman_rejects_signaling():
    entries = {"UUU|+++": 1, "UUD|---": 1, "UDU|+++": 1, "UDD|+++": 1, "DUU|+++": 1, "DUD|+++": 1, "DDU|+++": 1, "DDD|+++": 1}
    with pytest.raises(SignalingError):
        rahaman_check(JointDistribution.from_entries(entries))


def test_svetlichny_and_gyni_on_fixtures():
    d23 = paper_distribution("set23")
    assert svetlichny_value(d23, SVET[1]) == Fraction(16, 3)
    assert gyni_value(d23) == Fraction(4, 3)
    for name in ("set20", "set21"):
        d = paper_distribution(name)
        assert gyni_value(d) <= 1
        assert all(svetlichny_value(d, p) <= 4 for p in SVET)
    assert gyni_value(uniform()) == Fraction(1, 2)


def test_local_deterministic_bounds():
    count = 0
    for responses, table in oracles.deterministic_boxes(3):
        d = JointDistribution.from_entries(table)
        assert validate(d).ok
        assert bell_inequality_value(d) <= 0
        assert gyni_value(d) <= 1
        for pattern in list(SVET) + boxes.svetlichny_family():
            assert svetlichny_value(d, pattern) <= 4
        count += 1
    assert count == 64


def test_svetlichny_family():
    family = boxes.svetlichny_family()
    assert len(family) == 8
    assert SVET[0] in family
    assert all(p[0] == 1 for p in family)
    assert SVET[1] not in family
    with pytest.raises(ValueError):
        svetlichny_value(uniform(), (1,) * 7)


def test_trace_out_third():
    d2 = trace_out_third(paper_distribution("set21"))
    assert isinstance(d2, TwoQubitDistribution)
    assert chsh_value(d2) == 4
    u2 = trace_out_third(uniform())
    assert all(v == Fraction(1, 4) for _, v in u2.items())
    assert chsh_value(u2) == 0


def test_chsh_algebraic_maximum():
    # E(U,U) = +1 and the other three correlators -1
    entries = {"UU|++": Fraction(1, 2), "UU|--": Fraction(1, 2)}
    for s in ("UD", "DU", "DD"):
        entries[f"{s}|+-"] = Fraction(1, 2)
        entries[f"{s}|-+"] = Fraction(1, 2)
    d2 = TwoQubitDistribution.from_entries(entries)
    assert validate(d2).ok
    assert chsh_value(d2) == 4


def test_quantum_box_obeys_tsirelson():
    from boxlab import quantum
    from boxlab.closed_form import CabelloPoint, solve_constraints

    sol = solve_constraints(CabelloPoint(1.0, 1.0, 1.0, 1.0, 0.0))
    d = quantum.born_distribution(quantum.ghz_state(1.0), sol.angles)
    assert abs(chsh_value(trace_out_third(d))) <= 2 * 2**0.5 + 1e-12


def test_json_roundtrip_exact_and_float():
    d = paper_distribution("set_c04")
    data = json.loads(json.dumps(d.to_json()))
    assert data["format"] == "box322-v1"
    assert data["entries"]["DDD|---"] == {"num": 1, "den": 5}
    back = JointDistribution.from_json(data)
    assert back.exact and np.array_equal(back.table, d.table)
    f = d.to_float()
    back = JointDistribution.from_json(f.to_json())
    assert not back.exact
    np.testing.assert_array_equal(back.table, f.table)


def test_json_rejects_bad_format():
    with pytest.raises(ValueError):
        JointDistribution.from_json({"format": "other", "entries": {}})
    with pytest.raises(ValueError):
        JointDistribution.from_json({"format": "box322-v1", "entries": {"UUX|+++": 1.0}})


def test_validation_csv():
    entries = {"UUU|+++": 1.5, "UUU|---": -0.5}
    text = validate(JointDistribution.from_entries(entries)).to_csv()
    assert text.splitlines()[0] == "check,constraint,violation"
    assert "positivity,UUU|---,0.5" in text
