"""Born-rule probabilities for 2- and 3-qubit pure states under local projective measurements.

Each qubit k carries two dichotomic observables U_k and D_k.  Their +1/-1
eigenvectors are written in the qubit's own basis {|v_k>, |w_k>}, which is
encoded here as computational index 0 (v) and 1 (w)::

    |u+> = cos(alpha)|v> + e^{i delta} sin(alpha)|w>
    |u-> = -e^{-i delta} sin(alpha)|v> + cos(alpha)|w>

and likewise for |d+-> with (beta, gamma).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12

U, D = "U", "D"
PLUS, MINUS = +1, -1
SETTINGS = (U, D)
OUTCOMES = (PLUS, MINUS)


@dataclass(frozen=True)
class QubitAngles:
    """Measurement angles for one qubit: (alpha, delta) define U, (beta, gamma) define D."""

    alpha: float
    delta: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            val = getattr(self, name)
            if not (-NORM_TOL <= val <= math.pi / 2 + NORM_TOL):
                raise ValueError(f"{name}={val!r} outside [0, pi/2]")


def ghz_state(t: float, n: int = 3) -> np.ndarray:
    """Amplitudes of t|0...0> + |1...1>, normalized, for n qubits."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t={t!r} outside [0, 1]")
    if n < 1:
        raise ValueError("need at least one qubit")
    psi = np.zeros(2**n, dtype=complex)
    norm = math.sqrt(1.0 + t * t)
    psi[0] = t / norm
    psi[-1] = 1.0 / norm
    return psi


def schmidt_state(theta: float) -> np.ndarray:
    """Two-qubit state cos(theta)|00> + sin(theta)|11>."""
    return np.array([math.cos(theta), 0.0, 0.0, math.sin(theta)], dtype=complex)


def eigenvector(angles: QubitAngles, setting: str, outcome: int) -> np.ndarray:
    if setting == U:
        theta, phase = angles.alpha, angles.delta
    elif setting == D:
        theta, phase = angles.beta, angles.gamma
    else:
        raise ValueError(f"unknown setting {setting!r}")
    c, s = math.cos(theta), math.sin(theta)
    if outcome == PLUS:
        return np.array([c, np.exp(1j * phase) * s])
    if outcome == MINUS:
        return np.array([-np.exp(-1j * phase) * s, c])
    raise ValueError(f"unknown outcome {outcome!r}")


def measurement_projector(angles: QubitAngles, setting: str, outcome: int) -> np.ndarray:
    """Rank-1 projector onto the eigenvector of ``setting`` with eigenvalue ``outcome``."""
    vec = eigenvector(angles, setting, outcome)
    return np.outer(vec, vec.conj())


def _check_state(state: np.ndarray, n: int) -> None:
    if state.shape != (2**n,):
        raise ValueError(f"state of length {state.shape[0]} does not match {n} qubits")
    norm = float(np.vdot(state, state).real)
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (|psi|^2 = {norm!r})")


def expectation_of_projectors(state: np.ndarray, projectors: Sequence[np.ndarray]) -> float:
    """<psi| P_1 (x) ... (x) P_n |psi> without forming the full Kronecker product."""
    n = len(projectors)
    _check_state(state, n)
    phi = state.reshape((2,) * n)
    for k, proj in enumerate(projectors):
        phi = np.moveaxis(np.tensordot(proj, phi, axes=([1], [k])), 0, k)
    return float(np.vdot(state, phi.reshape(-1)).real)


def joint_probability(
    state: np.ndarray,
    angles: Sequence[QubitAngles],
    settings: Sequence[str],
    outcomes: Sequence[int],
) -> float:
    """Probability of ``outcomes`` when qubit k measures ``settings[k]``."""
    if not len(angles) == len(settings) == len(outcomes):
        raise ValueError("angles, settings and outcomes must have one entry per qubit")
    projectors = [measurement_projector(a, s, o) for a, s, o in zip(angles, settings, outcomes)]
    return expectation_of_projectors(state, projectors)


def born_table(state: np.ndarray, angles: Sequence[QubitAngles]) -> np.ndarray:
    """All joint probabilities as an array indexed [s_1..s_n, o_1..o_n] (U=0, D=1, +=0, -=1)."""
    n = len(angles)
    _check_state(state, n)
    table = np.empty((2,) * (2 * n))
    for settings in itertools.product(range(2), repeat=n):
        labels = [SETTINGS[s] for s in settings]
        for outs in itertools.product(range(2), repeat=n):
            signs = [OUTCOMES[o] for o in outs]
            table[settings + outs] = joint_probability(state, angles, labels, signs)
    return table


def born_distribution(state: np.ndarray, angles: Sequence[QubitAngles]):
    """Three-qubit behavior predicted by the Born rule, as a :class:`JointDistribution`."""
    from .boxes import JointDistribution

    if len(angles) != 3:
        raise ValueError("born_distribution needs exactly three qubits")
    return JointDistribution(born_table(state, angles))
