import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from boxlab import quantum
from boxlab.closed_form import (
    GAMMA0,
    CabelloPoint,
    hardy_profile,
    nqubit_hardy_max,
    positivity_threshold,
    prob_P,
    prob_Q,
    scan_C,
    scan_to_csv,
    sign_changes,
    solve_constraints,
    success_C,
    success_C_array,
)

import oracles

tangent = st.floats(1e-2, 1e2)
ent = st.floats(1e-3, 1.0)
phase = st.floats(-math.pi, math.pi)


def born_terms(point):
    """Born-rule P, Q and the three zero probabilities for the constrained angles at ``point``."""
    sol = solve_constraints(point)
    psi = oracles.ghz(point.t)

    def prob(settings, plus):
        vecs = []
        for a, s in zip(sol.angles, settings):
            theta, ph = (a.alpha, a.delta) if s == "U" else (a.beta, a.gamma)
            vecs.append(oracles.eigvec(theta, ph, plus))
        return oracles.born_probability(psi, vecs)

    return prob("UUU", True), prob("DDD", False), [prob(s, True) for s in ("DUU", "UDU", "UUD")]


def test_prob_P_examples():
    delta = math.acos(0.25)
    assert prob_P(1.0, math.pi / 4, math.pi / 4, math.pi / 4, delta) == pytest.approx(10 / 64, abs=1e-15)
    assert prob_P(0.0, 0.0, 0.0, 0.0, 1.234) == 0.0
    with pytest.raises(ValueError):
        prob_P(1.0, math.pi / 2, 0.1, 0.1, 0.0)


def test_prob_Q_examples():
    assert prob_Q(1.0, math.pi / 4, math.pi / 4, math.pi / 4, GAMMA0) == pytest.approx(1 / 64, abs=1e-15)
    assert prob_Q(1.0, math.pi / 4, math.pi / 4, math.pi / 4, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_prob_P_Q_match_born_rule():
    rng = np.random.default_rng(7)
    for _ in range(200):
        t = rng.uniform(0, 1)
        a = rng.uniform(0, 1.5, 3)
        b = rng.uniform(0, 1.5, 3)
        dphi = rng.uniform(-math.pi, math.pi, 3)
        gphi = rng.uniform(-math.pi, math.pi, 3)
        psi = oracles.ghz(t)
        p = oracles.born_probability(psi, [oracles.eigvec(a[k], dphi[k], True) for k in range(3)])
        q = oracles.born_probability(psi, [oracles.eigvec(b[k], gphi[k], False) for k in range(3)])
        assert prob_P(t, *a, dphi.sum()) == pytest.approx(p, abs=1e-12)
        assert prob_Q(t, *b, gphi.sum()) == pytest.approx(q, abs=1e-12)


def test_solve_constraints_hardy_point():
    sol = solve_constraints(CabelloPoint(1.0, 1.0, 1.0, 1.0, 0.0))
    for a in sol.angles:
        assert a.alpha == pytest.approx(math.pi / 4, abs=1e-15)
    assert sol.delta == pytest.approx(3 * math.pi / 2, abs=1e-12)
    _, _, zeros = born_terms(CabelloPoint(1.0, 1.0, 1.0, 1.0, 0.0))
    assert max(zeros) <= 1e-12


def test_solve_constraints_phase_and_tangent_equations():
    point = CabelloPoint(0.5, 2.0, 3.0, 0.4, 0.9)
    sol = solve_constraints(point)
    a1, a2, a3 = sol.angles
    assert math.tan(a1.alpha) ** 2 == pytest.approx(2 / 1.2 * 0.5, rel=1e-12)
    assert a1.gamma + a2.delta + a3.delta == pytest.approx(math.pi, abs=1e-12)
    assert a1.delta + a2.gamma + a3.delta == pytest.approx(math.pi, abs=1e-12)
    assert a1.delta + a2.delta + a3.gamma == pytest.approx(math.pi, abs=1e-12)
    assert math.tan(a1.beta) * math.tan(a2.alpha) * math.tan(a3.alpha) == pytest.approx(0.5, rel=1e-12)
    assert sol.gamma == pytest.approx(0.9, abs=1e-12)
    _, _, zeros = born_terms(point)
    assert max(zeros) <= 1e-12
    _, _, zeros = born_terms(CabelloPoint(1.0, 1.0, 1.0, 1.0, GAMMA0))
    assert max(zeros) <= 1e-12


@pytest.mark.parametrize("point", [CabelloPoint(0.0, 1, 1, 1, 0), CabelloPoint(0.5, 0.0, 1, 1, 0)])
def test_solve_constraints_domain(point):
    with pytest.raises(ValueError):
        solve_constraints(point)


def test_solve_constraints_rejects_even_branch():
    with pytest.raises(ValueError):
        solve_constraints(CabelloPoint(0.5, 1, 1, 1, 0), branches=(0, 1, 1))


def test_success_C_examples():
    assert success_C(CabelloPoint(1, 1, 1, 1, GAMMA0)) == pytest.approx(9 / 64, abs=1e-15)
    for t in np.linspace(0, 0.31, 20):
        assert success_C(CabelloPoint(t, 1, 1, 1, GAMMA0)) < 0
    for x, y, z, g in [(1, 2, 3, 0.1), (0.1, 10, 5, -2.0), (1e4, 1e4, 0.2, GAMMA0)]:
        expected = -1 / ((1 + x * x) * (1 + y * y) * (1 + z * z))
        assert success_C(CabelloPoint(0.0, x, y, z, g)) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ValueError):
        success_C(CabelloPoint(0.0, 0.0, 1.0, 1.0, 0.0))


@given(ent, tangent, tangent, tangent, phase)
def test_decomposition_into_P_minus_Q(t, x, y, z, g):
    point = CabelloPoint(t, x, y, z, g)
    sol = solve_constraints(point)
    p = prob_P(t, *(a.alpha for a in sol.angles), sol.delta)
    q = prob_Q(t, math.atan(x), math.atan(y), math.atan(z), g)
    assert success_C(point) == pytest.approx(p - q, abs=1e-12)


@given(ent, tangent, tangent, tangent, phase)
def test_permutation_symmetry(t, x, y, z, g):
    base = success_C(CabelloPoint(t, x, y, z, g))
    for perm in itertools.permutations((x, y, z)):
        assert success_C(CabelloPoint(t, *perm, g)) == pytest.approx(base, abs=1e-12)


@given(st.floats(0.0, 1.0), tangent, tangent, tangent, phase)
def test_array_form_matches_scalar(t, x, y, z, g):
    assert success_C_array(t, x, y, z, g) == pytest.approx(success_C(CabelloPoint(t, x, y, z, g)), abs=1e-13)


def test_rescaled_branch_is_continuous():
    # xyz crosses the rescaling threshold of 1e3 between these points
    for t in (0.01, 0.3, 1.0):
        below = success_C(CabelloPoint(t, 10.0, 10.0, 9.999999999, GAMMA0))
        above = success_C(CabelloPoint(t, 10.0, 10.0, 10.000000001, GAMMA0))
        assert below == pytest.approx(above, abs=1e-10)


def test_hardy_slice_has_vanishing_Q():
    rng = np.random.default_rng(3)
    for _ in range(200):
        t, x, y = rng.uniform(0.05, 1), rng.uniform(0.1, 5), rng.uniform(0.1, 5)
        z = 1 / (t * x * y)
        assert prob_Q(t, math.atan(x), math.atan(y), math.atan(z), 0.0) == pytest.approx(0.0, abs=1e-12)


def test_hardy_profile():
    assert hardy_profile(1.0) == 0.125
    s = 0.5 ** (-1 / 3)
    assert hardy_profile(0.5) == pytest.approx(success_C(CabelloPoint(0.5, s, s, s, 0.0)), abs=1e-12)
    assert hardy_profile(1e-9) < 1e-17
    with pytest.raises(ValueError):
        hardy_profile(0.0)


def test_nqubit_hardy_max():
    assert nqubit_hardy_max(3) == pytest.approx(1 / 8, abs=1e-16)
    assert nqubit_hardy_max(4) == pytest.approx(3 / 32, abs=1e-16)
    vals = [nqubit_hardy_max(n) for n in range(3, 40)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        nqubit_hardy_max(2)


def test_scan_examples():
    rows = scan_C(1, 1, 1, GAMMA0, np.linspace(0, 1, 201))
    assert rows[-1] == (1.0, pytest.approx(0.140625, abs=1e-15))
    (t0, c0), = scan_C(1e4, 1e4, 0.2, GAMMA0, [0.0])
    assert -2e-16 < c0 < -5e-17
    ts = np.linspace(1e-4, 1, 5001)
    vals = [c for _, c in scan_C(1e2, 1e2, 0.02, GAMMA0, ts)]
    assert min(vals) > 0
    assert max(vals) <= 0.00031


def test_scan_csv_roundtrip():
    rows = scan_C(1, 1, 1, GAMMA0, [0.0, 0.5, 1.0])
    text = scan_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "t,C"
    back = [tuple(float(v) for v in line.split(",")) for line in lines[1:]]
    assert back == rows


def _brentq_root(x, y, z, g, lo, hi):
    return brentq(lambda t: success_C(CabelloPoint(t, x, y, z, g)), lo, hi, xtol=1e-16, rtol=1e-14)


def test_positivity_threshold_examples():
    r = positivity_threshold(1, 1, 1, GAMMA0)
    assert r == pytest.approx(0.3126, abs=1e-3)
    assert r == pytest.approx(_brentq_root(1, 1, 1, GAMMA0, 0.2, 0.4), abs=1e-9)

    roots = sign_changes(1e4, 1e4, 0.2, GAMMA0)
    assert len(roots) == 2
    assert roots[0] <= 1e-8
    assert roots[0] == pytest.approx(_brentq_root(1e4, 1e4, 0.2, GAMMA0, 1e-12, 1e-8), rel=1e-8)
    assert roots[1] == pytest.approx(0.8198, abs=1e-4)

    r = positivity_threshold(1, 1, 1, 0.0)
    assert r == pytest.approx(_brentq_root(1, 1, 1, 0.0, 0.01, 1.0), abs=1e-9)


def test_positivity_threshold_never_succeeds():
    # large Q with small P: C stays negative on [0, 1]
    assert positivity_threshold(0.01, 0.01, 0.01, math.pi) is None
