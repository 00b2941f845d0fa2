"""Behaviors ("boxes") for two and three parties with two settings and two outcomes each.

A behavior is stored as an array indexed ``[s_1, ..., s_n, o_1, ..., o_n]``
with setting U=0, D=1 and outcome +=0, -=1.  Entries may be floats or
:class:`fractions.Fraction` (object array); every evaluator below works on
either, so fixtures can be checked in exact arithmetic.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

TOL = 1e-9
FORMAT_TAG = "box322-v1"

SETTING_CHARS = "UD"
OUTCOME_CHARS = "+-"


class SignalingError(ValueError):
    """A marginal was requested from a behavior whose marginals depend on remote settings."""


def parse_key(key: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """``"UDU|+-+"`` -> ((0, 1, 0), (0, 1, 0))."""
    try:
        settings, outcomes = key.split("|")
        s = tuple(SETTING_CHARS.index(c) for c in settings)
        o = tuple(OUTCOME_CHARS.index(c) for c in outcomes)
    except ValueError:
        raise ValueError(f"malformed behavior key {key!r}") from None
    if len(s) != len(o) or not s:
        raise ValueError(f"malformed behavior key {key!r}")
    return s, o


def format_key(settings: Sequence[int], outcomes: Sequence[int]) -> str:
    return "".join(SETTING_CHARS[s] for s in settings) + "|" + "".join(OUTCOME_CHARS[o] for o in outcomes)


def _settings_index(settings) -> tuple[int, ...]:
    if isinstance(settings, str):
        return tuple(SETTING_CHARS.index(c) for c in settings)
    return tuple(int(s) for s in settings)


def _outcomes_index(outcomes) -> tuple[int, ...]:
    if isinstance(outcomes, str):
        return tuple(OUTCOME_CHARS.index(c) for c in outcomes)
    # integers are outcome values, +1 or -1
    try:
        return tuple({1: 0, -1: 1}[int(o)] for o in outcomes)
    except KeyError:
        raise ValueError(f"outcomes must be '+'/'-' or +1/-1, got {outcomes!r}") from None


class Behavior:
    """Conditional probability table p(outcomes | settings) for ``n`` parties."""

    n_parties: int | None = None

    def __init__(self, table):
        arr = np.array(table, dtype=object if _is_exact(table) else float)
        n = arr.ndim // 2
        if arr.shape != (2,) * (2 * n) or n == 0:
            raise ValueError(f"behavior table must have shape (2,)*2n, got {arr.shape}")
        if self.n_parties is not None and n != self.n_parties:
            raise ValueError(f"{type(self).__name__} needs {self.n_parties} parties, got {n}")
        if not all(math.isfinite(float(v)) for v in arr.flat):
            raise ValueError("behavior entries must be finite")
        arr.setflags(write=False)
        self._table = arr

    @property
    def table(self) -> np.ndarray:
        return self._table

    @property
    def n(self) -> int:
        return self._table.ndim // 2

    @property
    def exact(self) -> bool:
        return self._table.dtype == object

    def p(self, settings, outcomes):
        """Single entry, e.g. ``d.p("UUU", "+++")``."""
        return self._table[_settings_index(settings) + _outcomes_index(outcomes)]

    def __getitem__(self, key: str):
        s, o = parse_key(key)
        return self._table[s + o]

    def to_float(self) -> "Behavior":
        return type(self)(self._table.astype(float))

    def items(self) -> Iterable[tuple[str, object]]:
        for idx in itertools.product(range(2), repeat=2 * self.n):
            yield format_key(idx[: self.n], idx[self.n :]), self._table[idx]

    @classmethod
    def from_entries(cls, entries: Mapping[str, object], n: int | None = None):
        """Build from ``{"UUU|+++": value, ...}``; missing keys are zero."""
        if n is None:
            n = cls.n_parties or len(parse_key(next(iter(entries)))[0])
        exact = all(isinstance(v, (int, Fraction)) for v in entries.values())
        table = np.empty((2,) * (2 * n), dtype=object if exact else float)
        table.fill(Fraction(0) if exact else 0.0)
        for key, value in entries.items():
            s, o = parse_key(key)
            if len(s) != n:
                raise ValueError(f"key {key!r} does not describe {n} parties")
            table[s + o] = Fraction(value) if exact else float(value)
        return cls(table)

    @classmethod
    def uniform(cls, n: int | None = None):
        n = n or cls.n_parties
        return cls(np.full((2,) * (2 * n), Fraction(1, 2**n), dtype=object))

    @classmethod
    def deterministic(cls, responses: Sequence[Sequence[int]]):
        """Local deterministic box; ``responses[k][s]`` is party k's outcome index for setting s."""
        n = len(responses)
        table = np.full((2,) * (2 * n), Fraction(0), dtype=object)
        for settings in itertools.product(range(2), repeat=n):
            outs = tuple(responses[k][settings[k]] for k in range(n))
            table[settings + outs] = Fraction(1)
        return cls(table)

    def to_json(self) -> dict:
        entries = {}
        for key, value in self.items():
            if value == 0:
                continue
            if isinstance(value, Fraction):
                entries[key] = {"num": value.numerator, "den": value.denominator}
            else:
                entries[key] = float(value)
        return {"format": FORMAT_TAG, "entries": entries}

    @classmethod
    def from_json(cls, data: Mapping):
        if data.get("format") != FORMAT_TAG:
            raise ValueError(f"expected format {FORMAT_TAG!r}, got {data.get('format')!r}")
        entries = {}
        for key, value in data.get("entries", {}).items():
            if isinstance(value, Mapping):
                entries[key] = Fraction(int(value["num"]), int(value["den"]))
            elif isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError(f"bad entry for {key!r}: {value!r}")
            else:
                entries[key] = float(value)
        n = cls.n_parties or 3
        return cls.from_entries(entries, n=n) if entries else cls(np.zeros((2,) * (2 * n)))

    def __repr__(self):
        nonzero = sum(1 for _, v in self.items() if v != 0)
        return f"{type(self).__name__}(n={self.n}, nonzero={nonzero}, exact={self.exact})"


class JointDistribution(Behavior):
    n_parties = 3


class TwoQubitDistribution(Behavior):
    n_parties = 2


def _is_exact(table) -> bool:
    arr = np.asarray(table, dtype=object)
    return arr.size > 0 and all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in arr.flat)


# --------------------------------------------------------------------------- validation


@dataclass
class ValidationReport:
    positivity_ok: bool
    normalization_ok: bool
    no_signaling_ok: bool
    worst_negativity: float
    worst_normalization: float
    worst_signaling: float
    details: list[tuple[str, str, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.positivity_ok and self.normalization_ok and self.no_signaling_ok

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "constraint", "violation"])
        for row in self.details:
            w.writerow([row[0], row[1], f"{row[2]:.17g}"])
        return buf.getvalue()


def no_signaling_pairs(n: int):
    """Yield (party, label, index_set_U, index_set_D) for every no-signaling equality.

    Each index set lists full-table indices whose sum is the marginal of the
    other parties with ``party`` measuring U (resp. D).  There are
    n * 2^(n-1) * 2^(n-1) equalities, 48 for three parties.
    """
    for k in range(n):
        others = [j for j in range(n) if j != k]
        for rest_s in itertools.product(range(2), repeat=n - 1):
            for rest_o in itertools.product(range(2), repeat=n - 1):
                sides = []
                for sk in range(2):
                    idxs = []
                    for ok in range(2):
                        s = [0] * n
                        o = [0] * n
                        s[k], o[k] = sk, ok
                        for j, sj, oj in zip(others, rest_s, rest_o):
                            s[j], o[j] = sj, oj
                        idxs.append(tuple(s) + tuple(o))
                    sides.append(idxs)
                label = f"party{k + 1}:" + format_key(rest_s, rest_o)
                yield k, label, sides[0], sides[1]


def validate(d: Behavior, tol: float = TOL) -> ValidationReport:
    """Positivity, normalization and no-signaling checks."""
    table, n = d.table, d.n
    details = []
    worst_neg = 0.0
    for key, value in d.items():
        if value < 0:
            worst_neg = max(worst_neg, float(-value))
            if -value > tol:
                details.append(("positivity", key, float(-value)))
    worst_norm = 0.0
    for settings in itertools.product(range(2), repeat=n):
        total = sum(table[settings + o] for o in itertools.product(range(2), repeat=n))
        err = float(abs(total - 1))
        worst_norm = max(worst_norm, err)
        if err > tol:
            details.append(("normalization", "".join(SETTING_CHARS[s] for s in settings), err))
    worst_ns = 0.0
    for _, label, side_u, side_d in no_signaling_pairs(n):
        err = float(abs(sum(table[i] for i in side_u) - sum(table[i] for i in side_d)))
        worst_ns = max(worst_ns, err)
        if err > tol:
            details.append(("no-signaling", label, err))
    return ValidationReport(
        positivity_ok=worst_neg <= tol,
        normalization_ok=worst_norm <= tol,
        no_signaling_ok=worst_ns <= tol,
        worst_negativity=worst_neg,
        worst_normalization=worst_norm,
        worst_signaling=worst_ns,
        details=details,
    )


# --------------------------------------------------------------------------- marginals & correlators


def marginal(d: Behavior, parties: Sequence[int], settings, outcomes, tol: float = TOL):
    """Marginal probability of ``parties`` (0-based) seeing ``outcomes`` under ``settings``.

    Evaluated for every setting choice of the ignored parties; raises
    :class:`SignalingError` if those values disagree beyond ``tol``.
    """
    parties = list(parties)
    s_sel, o_sel = _settings_index(settings), _outcomes_index(outcomes)
    if not (len(parties) == len(s_sel) == len(o_sel)):
        raise ValueError("parties, settings and outcomes must match in length")
    rest = [j for j in range(d.n) if j not in parties]
    values = []
    for rest_s in itertools.product(range(2), repeat=len(rest)):
        s = [0] * d.n
        for j, v in zip(parties, s_sel):
            s[j] = v
        for j, v in zip(rest, rest_s):
            s[j] = v
        total = 0
        for rest_o in itertools.product(range(2), repeat=len(rest)):
            o = [0] * d.n
            for j, v in zip(parties, o_sel):
                o[j] = v
            for j, v in zip(rest, rest_o):
                o[j] = v
            total = total + d.table[tuple(s) + tuple(o)]
        values.append(total)
    spread = max(float(abs(v - values[0])) for v in values)
    if spread > tol:
        raise SignalingError(f"marginal depends on ignored settings (spread {spread:.3g})")
    return values[0]


def expectation(d: Behavior, settings):
    """Expectation of the product of the +1/-1 outcomes for the given settings."""
    s = _settings_index(settings)
    total = 0
    for o in itertools.product(range(2), repeat=d.n):
        sign = -1 if sum(o) % 2 else 1
        total = total + sign * d.table[s + o]
    return total


def bell_inequality_value(d: JointDistribution):
    """P(UUU|+++) - P(DDD|---) - [P(DUU|+++) + P(UDU|+++) + P(UUD|+++)]; positive means violation."""
    return (
        d.p("UUU", "+++")
        - d.p("DDD", "---")
        - (d.p("DUU", "+++") + d.p("UDU", "+++") + d.p("UUD", "+++"))
    )


@dataclass(frozen=True)
class HardyCabelloResult:
    C: object
    P: object
    Q: object
    zeros_ok: bool

    @property
    def succeeds(self) -> bool:
        return self.zeros_ok and self.C > 0


def hardy_cabello_check(d: JointDistribution, tol: float = TOL) -> HardyCabelloResult:
    P = d.p("UUU", "+++")
    Q = d.p("DDD", "---")
    zeros = (d.p("DUU", "+++"), d.p("UDU", "+++"), d.p("UUD", "+++"))
    return HardyCabelloResult(C=P - Q, P=P, Q=Q, zeros_ok=all(abs(z) <= tol for z in zeros))


@dataclass(frozen=True)
class RahamanResult:
    P: object
    zeros: dict
    ok: bool


def rahaman_check(d: JointDistribution, tol: float = TOL) -> RahamanResult:
    """Hardy-type conditions with pair-marginal zeros; raises SignalingError for signaling boxes."""
    if not validate(d, tol).no_signaling_ok:
        raise SignalingError("pair marginals are ill-defined for a signaling behavior")
    P = d.p("UUU", "+++")
    zeros = {
        "D1U2|++": marginal(d, (0, 1), "DU", "++", tol),
        "D2U3|++": marginal(d, (1, 2), "DU", "++", tol),
        "U1D3|++": marginal(d, (0, 2), "UD", "++", tol),
        "D1D2D3|---": d.p("DDD", "---"),
    }
    ok = P > tol and all(abs(v) <= tol for v in zeros.values())
    return RahamanResult(P=P, zeros=zeros, ok=ok)


# Sign patterns are listed in setting order UUU, UUD, UDU, UDD, DUU, DUD, DDU, DDD.
SETTING_TRIPLES = tuple(itertools.product(range(2), repeat=3))

SVETLICHNY_CANONICAL = (1, 1, 1, -1, 1, -1, -1, -1)
# The second instance displayed alongside the C = 1/3 box.
SVETLICHNY_SECOND = (1, -1, 1, 1, -1, 1, 1, 1)
SVETLICHNY_DISPLAYED = (SVETLICHNY_CANONICAL, SVETLICHNY_SECOND)


def svetlichny_family() -> list[tuple[int, ...]]:
    """Relabelings of the canonical Svetlichny expression, one representative per global sign.

    Generated by party permutations, per-party setting swaps and per-party
    outcome flips conditioned on the D setting.
    """
    found = set()
    for perm in itertools.permutations(range(3)):
        for swap in itertools.product(range(2), repeat=3):
            for flip in itertools.product(range(2), repeat=3):
                pattern = {}
                for s, sign in zip(SETTING_TRIPLES, SVETLICHNY_CANONICAL):
                    s2 = tuple(s[perm[k]] ^ swap[k] for k in range(3))
                    pattern[s2] = sign * (-1) ** sum(f * v for f, v in zip(flip, s2))
                vec = tuple(pattern[s] for s in SETTING_TRIPLES)
                if vec[0] < 0:
                    vec = tuple(-v for v in vec)
                found.add(vec)
    return sorted(found, reverse=True)


def svetlichny_value(d: JointDistribution, pattern: Sequence[int] = SVETLICHNY_CANONICAL):
    """|sum_s pattern[s] * E(s)|; the hybrid-local bound is 4."""
    if len(pattern) != 8 or any(abs(v) != 1 for v in pattern):
        raise ValueError("pattern must hold eight +1/-1 signs")
    return abs(sum(sign * expectation(d, s) for sign, s in zip(pattern, SETTING_TRIPLES)))


def gyni_value(d: JointDistribution):
    """Guess-your-neighbour's-input sum; at most 1 for quantum behaviors."""
    return d.p("UUU", "+++") + d.p("UDD", "--+") + d.p("DUD", "+--") + d.p("DDU", "-+-")


def trace_out_third(d: JointDistribution, tol: float = TOL) -> TwoQubitDistribution:
    table = np.empty((2, 2, 2, 2), dtype=object if d.exact else float)
    for s1, s2, o1, o2 in itertools.product(range(2), repeat=4):
        table[s1, s2, o1, o2] = marginal(d, (0, 1), (s1, s2), _from_idx((o1, o2)), tol)
    return TwoQubitDistribution(table)


def _from_idx(outs):
    return "".join(OUTCOME_CHARS[o] for o in outs)


def chsh_value(d2: TwoQubitDistribution):
    """E(U,U) - E(D,U) - E(U,D) - E(D,D)."""
    return expectation(d2, "UU") - expectation(d2, "DU") - expectation(d2, "UD") - expectation(d2, "DD")


# --------------------------------------------------------------------------- fixtures

_HALF = Fraction(1, 2)
_THIRD = Fraction(1, 3)


def _spread(rows: Mapping[str, Sequence[str]], value) -> dict[str, Fraction]:
    return {f"{s}|{o}": value for s, outs in rows.items() for o in outs}


_FIXTURES = {
    "set20": _spread(
        {
            "UUU": ("+++", "-+-"),
            "UUD": ("++-", "-++"),
            "UDU": ("+-+", "---"),
            "UDD": ("+--", "--+"),
            "DUU": ("++-", "-++"),
            "DUD": ("++-", "-++"),
            "DDU": ("+--", "--+"),
            "DDD": ("+--", "--+"),
        },
        _HALF,
    ),
    "set21": _spread(
        {
            "UUU": ("+++", "--+"),
            "UUD": ("++-", "---"),
            "UDU": ("+-+", "-++"),
            "UDD": ("+--", "-+-"),
            "DUU": ("+-+", "-++"),
            "DUD": ("+--", "-+-"),
            "DDU": ("+-+", "-++"),
            "DDD": ("+--", "-+-"),
        },
        _HALF,
    ),
    "set23": _spread(
        {
            "UUU": ("+++", "-+-", "--+"),
            "UUD": ("++-", "-++", "---"),
            "UDU": ("+-+", "-+-", "--+"),
            "UDD": ("+--", "-+-", "--+"),
            "DUU": ("+-+", "-++", "-+-"),
            "DUD": ("+--", "-++", "-+-"),
            "DDU": ("+-+", "-+-", "--+"),
            "DDD": ("+--", "-+-", "--+"),
        },
        _THIRD,
    ),
    "set_c04": {
        key: Fraction(value)
        for key, value in {
            "UUU|+++": "3/5", "UUU|--+": "2/5",
            "UUD|++-": "3/5", "UUD|---": "2/5",
            "UDU|+-+": "3/5", "UDU|-++": "2/5",
            "UDD|+--": "3/5", "UDD|-+-": "2/5",
            "DUU|+-+": "2/5", "DUU|-++": "3/5",
            "DUD|+--": "2/5", "DUD|-+-": "3/5",
            "DDU|+-+": "2/5", "DDU|-++": "2/5", "DDU|--+": "1/5",
            "DDD|+--": "2/5", "DDD|-+-": "2/5", "DDD|---": "1/5",
        }.items()
    },
}

FIXTURE_IDS = tuple(_FIXTURES)


def paper_distribution(name: str) -> JointDistribution:
    """One of the explicit no-signaling boxes: set20, set21, set23 or set_c04 (exact rationals)."""
    try:
        entries = _FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURE_IDS)}") from None
    return JointDistribution.from_entries(entries)


def load_distribution(path) -> JointDistribution:
    with open(path, encoding="utf-8") as fh:
        return JointDistribution.from_json(json.load(fh))
