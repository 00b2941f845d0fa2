"""Closed-form success probabilities for Cabello's argument on generalized GHZ states.

The state is t|vvv> + |www> (normalized).  With the three "zero" probabilities
P(D U U|+++), P(U D U|+++), P(U U D|+++) forced to vanish, the free data are
the entanglement t, the D-basis tangents x, y, z (x = tan beta_1 ...) and the
total D phase gamma.  Everything else follows from :func:`solve_constraints`.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .quantum import QubitAngles

#: Phase giving the global maximum 9/64 (cos gamma0 = 7/8).
GAMMA0 = -math.acos(7.0 / 8.0)

# Above this value of xyz the success function is evaluated in rescaled form.
_RESCALE_XYZ = 1e3


@dataclass(frozen=True)
class CabelloPoint:
    t: float
    x: float
    y: float
    z: float
    gamma: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"t={self.t!r} outside [0, 1]")
        if min(self.x, self.y, self.z) < 0.0:
            raise ValueError("x, y, z must be non-negative")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.t, self.x, self.y, self.z, self.gamma)


@dataclass(frozen=True)
class ConstraintSolution:
    angles: tuple[QubitAngles, QubitAngles, QubitAngles]
    branches: tuple[int, int, int]

    @property
    def delta(self) -> float:
        return sum(a.delta for a in self.angles)

    @property
    def gamma(self) -> float:
        return sum(a.gamma for a in self.angles)


def _tan(angle: float) -> float:
    if not 0.0 <= angle < math.pi / 2:
        raise ValueError(f"angle {angle!r} outside [0, pi/2); use the tangent parameterization")
    return math.tan(angle)


def prob_P(t: float, a1: float, a2: float, a3: float, delta: float) -> float:
    """P(U1,U2,U3|+++) for the generalized GHZ state; ``delta`` is the summed U phase."""
    ta, tb, tc = _tan(a1), _tan(a2), _tan(a3)
    prod = ta * tb * tc
    num = t * t + prod * prod + 2.0 * t * math.cos(delta) * prod
    den = (1.0 + t * t) * (1.0 + ta * ta) * (1.0 + tb * tb) * (1.0 + tc * tc)
    return num / den


def prob_Q(t: float, b1: float, b2: float, b3: float, gamma: float) -> float:
    """P(D1,D2,D3|---) for the generalized GHZ state; ``gamma`` is the summed D phase."""
    ta, tb, tc = _tan(b1), _tan(b2), _tan(b3)
    prod = ta * tb * tc
    num = 1.0 + (t * prod) ** 2 - 2.0 * t * math.cos(gamma) * prod
    den = (1.0 + t * t) * (1.0 + ta * ta) * (1.0 + tb * tb) * (1.0 + tc * tc)
    return num / den


def solve_constraints(point: CabelloPoint, branches: Sequence[int] = (1, 1, 1)) -> ConstraintSolution:
    """Measurement angles making the three zero-probabilities vanish at ``point``.

    Phases are split evenly across the qubits; only their sums are fixed by
    the zero conditions.  Even branch integers would need tan products equal
    to -t, which has no solution with angles in [0, pi/2].
    """
    m1, m2, m3 = (int(m) for m in branches)
    if any(m % 2 == 0 for m in (m1, m2, m3)):
        raise ValueError("even branch integers admit no real solution with angles in [0, pi/2]")
    t, x, y, z = point.t, point.x, point.y, point.z
    if t <= 0.0 or min(x, y, z) <= 0.0:
        raise ValueError("zero conditions need t > 0 and x, y, z > 0")

    delta = ((m1 + m2 + m3) * math.pi - point.gamma) / 2.0
    tans_sq = (x * t / (y * z), y * t / (x * z), z * t / (x * y))
    angles = []
    for tan_sq, tan_beta, m in zip(tans_sq, (x, y, z), (m1, m2, m3)):
        angles.append(
            QubitAngles(
                alpha=math.atan(math.sqrt(tan_sq)),
                delta=delta / 3.0,
                beta=math.atan(tan_beta),
                gamma=m * math.pi - 2.0 * delta / 3.0,
            )
        )
    return ConstraintSolution(angles=tuple(angles), branches=(m1, m2, m3))


def success_C(point: CabelloPoint) -> float:
    """Success probability P - Q of the argument, with the zero conditions eliminated."""
    t, x, y, z, gamma = point.as_tuple()
    w = x * y * z
    norm = 1.0 + t * t
    second = (1.0 + (t * w) ** 2 - 2.0 * t * w * math.cos(gamma)) / (
        norm * (1.0 + x * x) * (1.0 + y * y) * (1.0 + z * z)
    )
    if t == 0.0:
        if w == 0.0:
            raise ValueError("success function undefined at t = 0 with xyz = 0")
        return -second
    bracket = t + w - 2.0 * math.sqrt(t * w) * math.sin(gamma / 2.0)
    if w > _RESCALE_XYZ:
        # numerator and denominator divided by w**3
        den = w * norm * (1.0 + t * x * x / w) * (1.0 + t * y * y / w) * (1.0 + t * z * z / w)
        first = t * t * bracket / den
    else:
        den = norm * (w + t * x * x) * (w + t * y * y) * (w + t * z * z)
        if den == 0.0:
            raise ValueError("success function denominator vanishes")
        first = (t * w) ** 2 * bracket / den
    return first - second


def success_C_array(t, x, y, z, gamma) -> np.ndarray:
    """Vectorized :func:`success_C` for grid searches (no rescaling; keep xyz moderate)."""
    t, x, y, z, gamma = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, y, z, gamma)))
    w = x * y * z
    norm = 1.0 + t * t
    first = (t * w) ** 2 * (t + w - 2.0 * np.sqrt(t * w) * np.sin(gamma / 2.0))
    first = first / (norm * (w + t * x * x) * (w + t * y * y) * (w + t * z * z))
    second = (1.0 + (t * w) ** 2 - 2.0 * t * w * np.cos(gamma)) / (norm * (1 + x * x) * (1 + y * y) * (1 + z * z))
    return first - second


def hardy_profile(t: float) -> float:
    """Success probability on the Hardy slice x = y = z = t^(-1/3), gamma = 0."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t={t!r} outside (0, 1]")
    return t * t / (1.0 + t ** (4.0 / 3.0)) ** 3


def nqubit_hardy_max(n: int) -> float:
    """Maximum Hardy success probability for n >= 3 qubits in the generalized GHZ family."""
    if int(n) != n or n < 3:
        raise ValueError("n must be an integer >= 3")
    return (1.0 + math.cos(math.pi / (n - 1))) / 2.0**n


def scan_C(x: float, y: float, z: float, gamma: float, ts: Iterable[float]) -> list[tuple[float, float]]:
    return [(float(t), success_C(CabelloPoint(float(t), x, y, z, gamma))) for t in ts]


def scan_to_csv(rows: Iterable[tuple[float, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "C"])
    for t, c in rows:
        writer.writerow([f"{t:.17g}", f"{c:.17g}"])
    return buf.getvalue()


def _bisect(f, lo: float, hi: float, flo: float, xtol: float = 1e-15, rtol: float = 1e-9) -> float:
    for _ in range(300):
        if hi - lo <= xtol + rtol * hi:
            break
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _default_grid() -> np.ndarray:
    return np.unique(np.concatenate([[0.0], np.logspace(-16, 0, 321), np.linspace(0.0, 1.0, 2001)]))


def sign_changes(x: float, y: float, z: float, gamma: float, grid: Sequence[float] | None = None) -> list[float]:
    """All roots of t -> C(t, x, y, z, gamma) on [0, 1] detected on ``grid`` and refined by bisection."""
    ts = np.asarray(_default_grid() if grid is None else grid, dtype=float)

    def f(t):
        return success_C(CabelloPoint(t, x, y, z, gamma))

    vals = [f(t) for t in ts]
    roots = []
    for (t0, f0), (t1, f1) in zip(zip(ts, vals), zip(ts[1:], vals[1:])):
        if f0 == 0.0:
            roots.append(float(t0))
        elif (f0 > 0) != (f1 > 0) and f1 != 0.0:
            roots.append(_bisect(f, float(t0), float(t1), f0))
    return roots


def positivity_threshold(x: float, y: float, z: float, gamma: float) -> float | None:
    """Smallest t in (0, 1] where C changes sign, or None when it never does."""
    roots = [r for r in sign_changes(x, y, z, gamma) if r > 0.0]
    return roots[0] if roots else None
