"""Numerical maximization of Hardy/Cabello success probabilities.

Every search is a coarse grid followed by bounded pattern-search refinement
from the best few grid points.  Zero conditions are never penalized; they
are eliminated by solving for the U-basis angles, so every evaluated point
is exactly feasible.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import quantum
from .closed_form import CabelloPoint, success_C, success_C_array
from .quantum import QubitAngles

X_MAX = 10.0
SHRINK_TOL = 1e-8
HALF_PI = math.pi / 2


@dataclass
class OptimizationResult:
    objective: str
    names: tuple[str, ...]
    argmax: tuple[float, ...]
    value: float
    evaluations: int
    stages: list[tuple[str, float]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "objective": self.objective,
            "argmax": dict(zip(self.names, self.argmax)),
            "value": self.value,
            "evaluations": self.evaluations,
            "stages": [{"stage": s, "best": v} for s, v in self.stages],
        }


class _Counted:
    def __init__(self, fn: Callable[[np.ndarray], float]):
        self.fn = fn
        self.calls = 0

    def __call__(self, p) -> float:
        self.calls += 1
        return self.fn(np.asarray(p, dtype=float))


def pattern_search(f, x0, lower, upper, step: float = 0.25, tol: float = SHRINK_TOL, max_iter: int = 2000):
    """Maximize ``f`` over a box by compass search; steps are fractions of the box width.

    Returns (x, f(x)).  Each sweep tries +-step along every axis and moves to
    the best improvement; without one the step is halved until below ``tol``.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    width = upper - lower
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    fx = f(x)
    h = step
    for _ in range(max_iter):
        if h < tol:
            break
        best_x, best_f = x, fx
        for i in range(x.size):
            if width[i] == 0.0:
                continue
            for sign in (1.0, -1.0):
                trial = x.copy()
                trial[i] = min(max(trial[i] + sign * h * width[i], lower[i]), upper[i])
                if trial[i] == x[i]:
                    continue
                ft = f(trial)
                if ft > best_f:
                    best_x, best_f = trial, ft
        if best_f > fx:
            # one pattern move along the successful direction
            jump = np.clip(best_x + (best_x - x), lower, upper)
            fj = f(jump)
            x, fx = (jump, fj) if fj > best_f else (best_x, best_f)
        else:
            h *= 0.5
    return x, fx


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("BOXLAB_THREADS", "1")))
    except ValueError:
        return 1


def _multistart(
    name: str,
    names: Sequence[str],
    objective: Callable[[np.ndarray], float],
    grid_points: np.ndarray,
    grid_values: np.ndarray,
    lower,
    upper,
    n_starts: int = 6,
    workers: int | None = None,
) -> OptimizationResult:
    f = _Counted(objective)
    f.calls += len(grid_values)
    finite = np.where(np.isfinite(grid_values), grid_values, -np.inf)
    order = np.argsort(-finite, kind="stable")
    starts = [grid_points[i] for i in order[:n_starts]]
    stages = [("grid", float(finite[order[0]]))]

    def refine(x0):
        return pattern_search(f, x0, lower, upper)

    workers = workers or _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(refine, starts))
    else:
        runs = [refine(s) for s in starts]
    best_x, best_f = starts[0], stages[0][1]
    for x, fx in runs:
        if fx > best_f or (fx == best_f and tuple(x) < tuple(best_x)):
            best_x, best_f = x, fx
    stages.append(("refine", float(best_f)))
    return OptimizationResult(name, tuple(names), tuple(float(v) for v in best_x), float(best_f), f.calls, stages)


def _grid(axes: Sequence[np.ndarray]) -> np.ndarray:
    return np.array(list(itertools.product(*axes)), dtype=float)


# --------------------------------------------------------------------------- three qubits


def _cna3(p: np.ndarray) -> float:
    t, x, y, z, g = p
    return success_C(CabelloPoint(t, x, y, z, g))


def maximize_three_qubit_cna(x_max: float = X_MAX, points: int = 11, workers: int | None = None) -> OptimizationResult:
    """Global maximum of the Cabello success probability over (t, x, y, z, gamma)."""
    lower = np.array([0.0, 1e-6, 1e-6, 1e-6, -math.pi])
    upper = np.array([1.0, x_max, x_max, x_max, math.pi])
    tan_axis = np.geomspace(0.05, x_max, points)
    axes = [np.linspace(0, 1, points), tan_axis, tan_axis, tan_axis, np.linspace(-math.pi, math.pi, points)]
    grid = _grid(axes)
    vals = success_C_array(*grid.T)
    res = _multistart("cna3", ("t", "x", "y", "z", "gamma"), _cna3, grid, vals, lower, upper, workers=workers)
    t, *xyz, g = res.argmax
    res.argmax = (t, *sorted(xyz), g)
    return res


def _hna3(p: np.ndarray) -> float:
    t, x, y = p
    return success_C(CabelloPoint(t, x, y, 1.0 / (t * x * y), 0.0))


def maximize_three_qubit_hna(points: int = 21) -> OptimizationResult:
    """Hardy slice txyz = 1, gamma = 0, where Q vanishes identically."""
    lower = np.array([1e-3, 0.05, 0.05])
    upper = np.array([1.0, 20.0, 20.0])
    axes = [np.linspace(1e-3, 1, points), np.geomspace(0.05, 20, points), np.geomspace(0.05, 20, points)]
    grid = _grid(axes)
    t, x, y = grid.T
    vals = success_C_array(t, x, y, 1.0 / (t * x * y), 0.0)
    res = _multistart("hna3", ("t", "x", "y"), _hna3, grid, vals, lower, upper)
    t, x, y = res.argmax
    res.names = ("t", "x", "y", "z", "gamma")
    res.argmax = (t, x, y, 1.0 / (t * x * y), 0.0)
    return res


def maximize_cna_fixed_t(
    t: float, symmetric: bool = False, log_tan_range: tuple[float, float] = (-3.0, 5.0), points: int = 9
) -> OptimizationResult:
    """Best success probability at fixed entanglement t.

    Tangents are searched in log10 space over ``log_tan_range`` so that the
    very lopsided settings needed at small t are reachable.  At t = 0 the
    value is the analytic supremum over the box, -1/(1 + X^2)^3.
    """
    lo, hi = log_tan_range
    if t == 0.0:
        X = 10.0**hi
        return OptimizationResult(
            "cna_fixed_t", ("x", "y", "z", "gamma"), (X, X, X, 0.0), -1.0 / (1.0 + X * X) ** 3, 0, [("analytic", -1.0 / (1.0 + X * X) ** 3)]
        )
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t={t!r} outside [0, 1]")

    if symmetric:
        def objective(p):
            x = 10.0 ** p[0]
            return success_C(CabelloPoint(t, x, x, x, p[1]))

        lower, upper = np.array([lo, -math.pi]), np.array([hi, math.pi])
        axes = [np.linspace(lo, hi, 4 * points), np.linspace(-math.pi, math.pi, 4 * points)]
        names = ("log10_x", "gamma")
        grid = _grid(axes)
        xs = 10.0 ** grid[:, 0]
        vals = success_C_array(t, xs, xs, xs, grid[:, 1])
    else:
        def objective(p):
            return success_C(CabelloPoint(t, 10.0 ** p[0], 10.0 ** p[1], 10.0 ** p[2], p[3]))

        lower, upper = np.array([lo, lo, lo, -math.pi]), np.array([hi, hi, hi, math.pi])
        axes = [np.linspace(lo, hi, points)] * 3 + [np.linspace(-math.pi, math.pi, points)]
        names = ("log10_x", "log10_y", "log10_z", "gamma")
        grid = _grid(axes)
        vals = success_C_array(t, *(10.0 ** grid[:, :3].T), grid[:, 3])
    res = _multistart("cna_fixed_t", names, objective, grid, vals, lower, upper)
    *logs, g = res.argmax
    xs = [10.0**v for v in logs]
    if symmetric:
        xs = xs * 3
    res.names = ("x", "y", "z", "gamma")
    res.argmax = (*xs, g)
    return res


# --------------------------------------------------------------------------- two qubits


def two_qubit_cabello_setup(theta: float, beta1: float, beta2: float, gamma: float):
    """State and bases for cos(theta)|00> + sin(theta)|11> with P(D1,U2|++) = P(U1,D2|++) = 0.

    Only the summed D phase matters; it is carried by qubit 1.
    """
    c, s = math.cos(theta), math.sin(theta)
    a2 = math.atan2(c * math.cos(beta1), s * math.sin(beta1))
    a1 = math.atan2(c * math.cos(beta2), s * math.sin(beta2))
    g1, g2 = gamma, 0.0
    q1 = QubitAngles(alpha=a1, delta=math.pi - g2, beta=beta1, gamma=g1)
    q2 = QubitAngles(alpha=a2, delta=math.pi - g1, beta=beta2, gamma=g2)
    return quantum.schmidt_state(theta), (q1, q2)


def two_qubit_terms(theta: float, beta1: float, beta2: float, gamma: float) -> dict[str, float]:
    """Born-rule R, S and the two zero-condition probabilities."""
    psi, angles = two_qubit_cabello_setup(theta, beta1, beta2, gamma)
    jp = quantum.joint_probability
    return {
        "R": jp(psi, angles, "UU", (1, 1)),
        "S": jp(psi, angles, "DD", (-1, -1)),
        "zero_DU": jp(psi, angles, "DU", (1, 1)),
        "zero_UD": jp(psi, angles, "UD", (1, 1)),
    }


def _cna2(p) -> float:
    terms = two_qubit_terms(*p)
    return terms["R"] - terms["S"]


def hardy_beta2(theta: float, beta1: float) -> float:
    """D angle of qubit 2 making P(D1,D2|--) vanish when the summed D phase is pi."""
    return math.atan2(math.sin(theta) * math.cos(beta1), math.cos(theta) * math.sin(beta1))


def _hna2(p) -> float:
    theta, beta1 = p
    return two_qubit_terms(theta, beta1, hardy_beta2(theta, beta1), math.pi)["R"]


def maximize_two_qubit_hardy(theta: float | None = None, points: int = 41) -> OptimizationResult:
    """Hardy success probability R with S = 0; ``theta`` pins the Schmidt angle."""
    if theta is None:
        lower, upper = np.array([0.0, 0.0]), np.array([HALF_PI, HALF_PI])
        axes = [np.linspace(0, HALF_PI, points)] * 2
    else:
        lower, upper = np.array([theta, 0.0]), np.array([theta, HALF_PI])
        axes = [np.array([theta]), np.linspace(0, HALF_PI, points)]
    grid = _grid(axes)
    vals = np.array([_hna2(p) for p in grid])
    res = _multistart("hna2", ("theta", "beta1"), _hna2, grid, vals, lower, upper)
    th, b1 = res.argmax
    res.names = ("theta", "beta1", "beta2", "gamma")
    res.argmax = (th, b1, hardy_beta2(th, b1), math.pi)
    return res


def maximize_two_qubit_cabello(
    theta: float | None = None, gamma: float | None = None, points: int = 11
) -> OptimizationResult:
    """Cabello success probability R - S over Schmidt angle, D angles and summed D phase.

    ``theta`` or ``gamma`` pin that coordinate (e.g. gamma in {0, pi} for real measurements).
    """
    lower = np.array([0.0, 0.0, 0.0, -math.pi])
    upper = np.array([HALF_PI, HALF_PI, HALF_PI, math.pi])
    axes = [np.linspace(0, HALF_PI, points)] * 3 + [np.linspace(-math.pi, math.pi, points)]
    if theta is not None:
        lower[0] = upper[0] = theta
        axes[0] = np.array([theta])
    if gamma is not None:
        lower[3] = upper[3] = gamma
        axes[3] = np.array([gamma])
    grid = _grid(axes)
    vals = np.array([_cna2(p) for p in grid])
    return _multistart("cna2", ("theta", "beta1", "beta2", "gamma"), _cna2, grid, vals, lower, upper)


TARGETS = {
    "cna3": maximize_three_qubit_cna,
    "hna3": maximize_three_qubit_hna,
    "cna2": maximize_two_qubit_cabello,
    "hna2": maximize_two_qubit_hardy,
}
