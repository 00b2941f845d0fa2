"""Two-phase simplex (Bland's rule) and LP builders over the no-signaling polytope."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import boxes
from .boxes import JointDistribution, TwoQubitDistribution, format_key, parse_key

PIVOT_TOL = 1e-10
INFEASIBLE_TOL = 1e-8

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """Optimize ``objective @ x`` subject to ``A_eq x = b_eq``, ``A_ub x <= b_ub`` and ``x >= 0``."""

    objective: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    maximize: bool = True
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        n = c.shape[0]
        A = np.asarray(self.A_eq, dtype=float).reshape(-1, n)
        b = np.asarray(self.b_eq, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError("A_eq and b_eq disagree in row count")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "A_eq", A)
        object.__setattr__(self, "b_eq", b)
        if self.A_ub is not None:
            Au = np.asarray(self.A_ub, dtype=float).reshape(-1, n)
            bu = np.asarray(self.b_ub, dtype=float).reshape(-1)
            if Au.shape[0] != bu.shape[0]:
                raise ValueError("A_ub and b_ub disagree in row count")
            object.__setattr__(self, "A_ub", Au)
            object.__setattr__(self, "b_ub", bu)
        if self.names is not None and len(self.names) != n:
            raise ValueError("one name per variable required")

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    def with_equality(self, coeffs, rhs: float) -> "LinearProgram":
        return replace(self, A_eq=np.vstack([self.A_eq, coeffs]), b_eq=np.append(self.b_eq, rhs))

    def with_objective(self, coeffs, maximize: bool = True) -> "LinearProgram":
        return replace(self, objective=np.asarray(coeffs, dtype=float), maximize=maximize)

    def value_at(self, x) -> float:
        return float(self.objective @ np.asarray(x, dtype=float))

    def residuals(self, x) -> tuple[float, float, float]:
        """(max |A_eq x - b_eq|, max positive part of A_ub x - b_ub, max negativity of x)."""
        x = np.asarray(x, dtype=float)
        eq = float(np.max(np.abs(self.A_eq @ x - self.b_eq), initial=0.0))
        ub = 0.0
        if self.A_ub is not None and len(self.b_ub):
            ub = float(np.max(self.A_ub @ x - self.b_ub, initial=0.0))
        neg = float(max(0.0, -x.min())) if x.size else 0.0
        return eq, max(ub, 0.0), neg

    def to_json(self) -> dict:
        data = {
            "maximize": self.maximize,
            "objective": self.objective.tolist(),
            "A_eq": self.A_eq.tolist(),
            "b_eq": self.b_eq.tolist(),
        }
        if self.A_ub is not None:
            data["A_ub"] = self.A_ub.tolist()
            data["b_ub"] = self.b_ub.tolist()
        if self.names is not None:
            data["names"] = list(self.names)
        return data

    @classmethod
    def from_json(cls, data: dict) -> "LinearProgram":
        names = data.get("names")
        return cls(
            objective=data["objective"],
            A_eq=data["A_eq"],
            b_eq=data["b_eq"],
            A_ub=data.get("A_ub"),
            b_ub=data.get("b_ub"),
            maximize=data.get("maximize", True),
            names=tuple(names) if names is not None else None,
        )


@dataclass
class LpSolution:
    status: str
    value: float | None = None
    point: np.ndarray | None = None
    basis: tuple[int, ...] = ()
    iterations: int = 0
    names: tuple[str, ...] | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def as_distribution(self) -> JointDistribution | TwoQubitDistribution:
        if self.point is None:
            raise ValueError(f"no point for a {self.status} LP")
        n = {64: 3, 16: 2}.get(self.point.shape[0])
        if n is None:
            raise ValueError("point does not describe a behavior")
        cls = JointDistribution if n == 3 else TwoQubitDistribution
        return cls(np.clip(self.point, 0.0, None).reshape((2,) * (2 * n)))

    def to_json(self) -> dict:
        data = {"status": self.status, "value": self.value, "iterations": self.iterations}
        if self.point is not None:
            data["basis"] = list(self.basis)
            if self.names is not None:
                data["point"] = {k: float(v) for k, v in zip(self.names, self.point) if abs(v) > PIVOT_TOL}
            else:
                data["point"] = self.point.tolist()
        return data


class _Tableau:
    """Dense simplex tableau; the last row holds reduced costs, the last column the rhs."""

    def __init__(self, T: np.ndarray, basis: list[int]):
        self.T = T
        self.basis = basis
        self.iterations = 0

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col
        self.iterations += 1

    def run(self, allowed: np.ndarray) -> str:
        """Minimize with Bland's rule over columns where ``allowed`` is True."""
        T = self.T
        m = T.shape[0] - 1
        while True:
            costs = T[-1, :-1]
            candidates = np.flatnonzero((costs < -PIVOT_TOL) & allowed)
            if candidates.size == 0:
                return OPTIMAL
            col = int(candidates[0])
            column = T[:m, col]
            rows = np.flatnonzero(column > PIVOT_TOL)
            if rows.size == 0:
                return UNBOUNDED
            ratios = T[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
            row = int(min(ties, key=lambda r: self.basis[r]))
            self.pivot(row, col)


def simplex_solve(lp: LinearProgram) -> LpSolution:
    """Solve ``lp`` with the two-phase simplex method and Bland's anti-cycling rule.

    Redundant equality rows are tolerated: their artificial variables either
    get pivoted out after phase 1 or the row is dropped as linearly dependent.
    """
    n = lp.n_vars
    n_slack = 0 if lp.A_ub is None else lp.A_ub.shape[0]
    A = np.hstack([lp.A_eq, np.zeros((lp.A_eq.shape[0], n_slack))])
    b = lp.b_eq.copy()
    if n_slack:
        A = np.vstack([A, np.hstack([lp.A_ub, np.eye(n_slack)])])
        b = np.concatenate([b, lp.b_ub])
    flip = b < 0
    A[flip] *= -1.0
    b = np.where(flip, -b, b)
    m, nx = A.shape
    c = -lp.objective if lp.maximize else lp.objective.copy()
    c = np.concatenate([c, np.zeros(n_slack)])

    if m == 0:
        if np.any(c < -PIVOT_TOL):
            return LpSolution(UNBOUNDED, names=lp.names)
        return LpSolution(OPTIMAL, 0.0, np.zeros(n), names=lp.names)

    # phase 1: one artificial per row
    T = np.zeros((m + 1, nx + m + 1))
    T[:m, :nx] = A
    T[:m, nx : nx + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :nx] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    tab = _Tableau(T, list(range(nx, nx + m)))
    tab.run(np.ones(nx + m, dtype=bool))
    if -tab.T[-1, -1] > INFEASIBLE_TOL:
        return LpSolution(INFEASIBLE, iterations=tab.iterations, names=lp.names)

    # drive artificials out of the basis; drop rows that are linearly dependent
    keep = []
    for r in range(m):
        if tab.basis[r] >= nx:
            row = tab.T[r, :nx]
            cols = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if cols.size == 0:
                continue
            tab.pivot(r, int(cols[0]))
        keep.append(r)
    T2 = np.zeros((len(keep) + 1, nx + 1))
    T2[:-1, :nx] = tab.T[keep, :nx]
    T2[:-1, -1] = tab.T[keep, -1]
    basis = [tab.basis[r] for r in keep]
    T2[-1, :nx] = c
    for r, j in enumerate(basis):
        T2[-1] -= c[j] * T2[r]
    tab2 = _Tableau(T2, basis)
    tab2.iterations = tab.iterations
    status = tab2.run(np.ones(nx, dtype=bool))
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, iterations=tab2.iterations, names=lp.names)

    x = np.zeros(nx)
    for r, j in enumerate(tab2.basis):
        x[j] = tab2.T[r, -1]
    x[np.abs(x) < 1e-14] = 0.0
    point = x[:n]
    value = float(lp.objective @ point)
    return LpSolution(
        OPTIMAL,
        value,
        point,
        basis=tuple(sorted(j for j in tab2.basis if j < n)),
        iterations=tab2.iterations,
        names=lp.names,
    )


# --------------------------------------------------------------------------- builders


def _names(n_parties: int) -> tuple[str, ...]:
    return tuple(
        format_key(idx[:n_parties], idx[n_parties:]) for idx in itertools.product(range(2), repeat=2 * n_parties)
    )


def _indicator(names: Sequence[str], terms: dict[str, float]) -> np.ndarray:
    pos = {k: i for i, k in enumerate(names)}
    row = np.zeros(len(names))
    for key, coeff in terms.items():
        parse_key(key)
        row[pos[key]] += coeff
    return row


def nosignaling_polytope(n_parties: int = 3) -> LinearProgram:
    """Normalization and no-signaling equalities, zero objective; positivity comes from x >= 0."""
    names = _names(n_parties)
    N = len(names)
    rows, rhs = [], []
    for settings in itertools.product(range(2), repeat=n_parties):
        prefix = "".join(boxes.SETTING_CHARS[s] for s in settings) + "|"
        rows.append(np.array([1.0 if k.startswith(prefix) else 0.0 for k in names]))
        rhs.append(1.0)
    for _, _, side_u, side_d in boxes.no_signaling_pairs(n_parties):
        row = np.zeros(N)
        for idx in side_u:
            row[np.ravel_multi_index(idx, (2,) * (2 * n_parties))] += 1.0
        for idx in side_d:
            row[np.ravel_multi_index(idx, (2,) * (2 * n_parties))] -= 1.0
        rows.append(row)
        rhs.append(0.0)
    return LinearProgram(objective=np.zeros(N), A_eq=np.array(rows), b_eq=np.array(rhs), names=names)


def _with_zeros(lp: LinearProgram, keys: Sequence[str]) -> LinearProgram:
    for key in keys:
        lp = lp.with_equality(_indicator(lp.names, {key: 1.0}), 0.0)
    return lp


HARDY_ZEROS = ("DUU|+++", "UDU|+++", "UUD|+++")


def build_gnst_problem() -> LinearProgram:
    """Maximize P(UUU|+++) - P(DDD|---) over no-signaling boxes obeying the three Hardy zeros."""
    lp = _with_zeros(nosignaling_polytope(3), HARDY_ZEROS)
    return lp.with_objective(_indicator(lp.names, {"UUU|+++": 1.0, "DDD|---": -1.0}))


def _fixed_P(p_target: float) -> LinearProgram:
    lp = build_gnst_problem()
    return lp.with_equality(_indicator(lp.names, {"UUU|+++": 1.0}), p_target)


def max_Q_given_P(p_target: float, c_min: float = 0.5) -> LpSolution:
    """Largest Q = P(DDD|---) with P(UUU|+++) = p_target while keeping P - Q >= c_min.

    With the default c_min = 0.5 (the no-signaling optimum) this is feasible
    only for p_target = 0.5, where Q must vanish.
    """
    lp = _fixed_P(p_target)
    q = _indicator(lp.names, {"DDD|---": 1.0})
    lp = replace(lp, A_ub=q[None, :], b_ub=np.array([p_target - c_min]))
    return simplex_solve(lp.with_objective(q))


def min_Q_given_P(p_target: float) -> LpSolution:
    """Smallest Q compatible with P(UUU|+++) = p_target; p_target - value is the best C at that P."""
    lp = _fixed_P(p_target)
    return simplex_solve(lp.with_objective(_indicator(lp.names, {"DDD|---": 1.0}), maximize=False))


def _marginal_zero_rows(names, parties: tuple[int, int], settings: str, outcomes: str):
    """One equality per setting of the ignored party: the pair marginal vanishes."""
    (other,) = [k for k in range(3) if k not in parties]
    rows = []
    for s_other in "UD":
        terms = {}
        for o_other in "+-":
            s = [""] * 3
            o = [""] * 3
            for k, sv, ov in zip(parties, settings, outcomes):
                s[k], o[k] = sv, ov
            s[other], o[other] = s_other, o_other
            terms["".join(s) + "|" + "".join(o)] = 1.0
        rows.append(_indicator(names, terms))
    return rows


def build_rahaman_problem() -> LinearProgram:
    """Maximize P(UUU|+++) under pair-marginal zeros D1U2, D2U3, U1D3 and P(DDD|---) = 0."""
    lp = nosignaling_polytope(3)
    for parties, settings in (((0, 1), "DU"), ((1, 2), "DU"), ((0, 2), "UD")):
        for row in _marginal_zero_rows(lp.names, parties, settings, "++"):
            lp = lp.with_equality(row, 0.0)
    lp = _with_zeros(lp, ("DDD|---",))
    return lp.with_objective(_indicator(lp.names, {"UUU|+++": 1.0}))


GYNI_TERMS = ("UUU|+++", "UDD|--+", "DUD|+--", "DDU|-+-")


def build_gyni_problem() -> LinearProgram:
    lp = nosignaling_polytope(3)
    return lp.with_objective(_indicator(lp.names, {k: 1.0 for k in GYNI_TERMS}))


def max_gyni_nosignaling() -> LpSolution:
    return simplex_solve(build_gyni_problem())


def build_two_qubit_cabello_problem() -> LinearProgram:
    """Two-party boxes with P(D1,U2|++) = P(U1,D2|++) = 0, objective R - S."""
    lp = _with_zeros(nosignaling_polytope(2), ("DU|++", "UD|++"))
    return lp.with_objective(_indicator(lp.names, {"UU|++": 1.0, "DD|--": -1.0}))


def random_feasible_points(lp: LinearProgram, count: int, rng: np.random.Generator, vertices: int = 4) -> np.ndarray:
    """Random points of the feasible set: convex mixtures of vertices reached from random objectives."""
    pool = []
    for _ in range(max(8, 2 * vertices)):
        sol = simplex_solve(lp.with_objective(rng.normal(size=lp.n_vars)))
        if not sol.optimal:
            raise ValueError(f"cannot sample a {sol.status} polytope")
        pool.append(sol.point)
    pool = np.array(pool)
    out = np.empty((count, lp.n_vars))
    for i in range(count):
        pick = rng.choice(len(pool), size=min(vertices, len(pool)), replace=False)
        weights = rng.dirichlet(np.ones(len(pick)))
        out[i] = weights @ pool[pick]
    return out


def solve_named(problem: str) -> LpSolution:
    """Resolve a CLI problem id: gnst, rahaman, gyni or gap:<p>."""
    if problem == "gnst":
        return simplex_solve(build_gnst_problem())
    if problem == "rahaman":
        return simplex_solve(build_rahaman_problem())
    if problem == "gyni":
        return max_gyni_nosignaling()
    if problem.startswith("gap:"):
        try:
            p = float(problem[4:])
        except ValueError:
            raise ValueError(f"malformed gap value in {problem!r}") from None
        if not np.isfinite(p):
            raise ValueError(f"malformed gap value in {problem!r}")
        return max_Q_given_P(p)
    raise ValueError(f"unknown LP problem {problem!r}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False)
