"""n-scroll Chua system: fixed-step RK4 integration and modulation sequences.

The system is

    dz1/dt = alpha * (z2 - q(z1))
    dz2/dt = z1 - z2 + z3
    dz3/dt = -beta * z2

with q a sine nonlinearity between symmetric linear tails. The default
parameter set produces an eight-scroll attractor from the standard initial
state (0.1, 0.1, 0.1).
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .backend import kernels
from .errors import DivergenceError, InvalidInputError

DIVERGENCE_GUARD = 1.0e3
DEFAULT_STEP = 0.005
DEFAULT_BURN_IN = 10_000


class ChaosState(NamedTuple):
    z1: float
    z2: float
    z3: float


DEFAULT_INITIAL = ChaosState(0.1, 0.1, 0.1)


@dataclass(frozen=True)
class ChuaParams:
    alpha: float = 10.814
    beta: float = 14.0
    a: float = 1.3
    b: float = 0.11
    c: float = 7.0
    d: float = 0.0

    def __post_init__(self):
        if self.a <= 0:
            raise InvalidInputError("parameter a must be positive")

    @property
    def breakpoint(self) -> float:
        """|z1| beyond which the nonlinearity leaves the sine branch (2ac)."""
        return 2.0 * self.a * self.c


def q_nonlinearity(z1: float, params: ChuaParams) -> float:
    """Piecewise nonlinearity: linear tails outside +-2ac, sine inside."""
    t = params.breakpoint
    slope = params.b * math.pi / (2.0 * params.a)
    if z1 >= t:
        return slope * (z1 - t)
    if z1 <= -t:
        return slope * (z1 + t)
    return -params.b * math.sin(math.pi * z1 / (2.0 * params.a) + params.d)


def derivatives(state: ChaosState, params: ChuaParams) -> ChaosState:
    z1, z2, z3 = state
    return ChaosState(
        params.alpha * (z2 - q_nonlinearity(z1, params)),
        z1 - z2 + z3,
        -params.beta * z2,
    )


@dataclass
class ChaosTrajectory:
    """Post-burn-in samples of an integrated run.

    ``samples`` is (n, 3); row i is the state after burn_in + (i+1)*stride
    steps, so sample times are (burn_in + (i+1)*stride) * step_size.
    """

    params: ChuaParams
    step_size: float
    burn_in: int
    samples: np.ndarray
    stride: int = 1

    def times(self) -> np.ndarray:
        n = self.samples.shape[0]
        return (self.burn_in + (np.arange(n) + 1) * self.stride) * self.step_size


def integrate(
    initial,
    params: ChuaParams,
    step_size: float = DEFAULT_STEP,
    burn_in: int = DEFAULT_BURN_IN,
    n_samples: int = 1,
    stride: int = 1,
) -> ChaosTrajectory:
    """Classical RK4 with fixed step; the first ``burn_in`` steps are dropped.

    Raises DivergenceError (with the offending global step index) if any
    state component leaves [-1e3, 1e3].
    """
    if not (0.0 < step_size <= 0.1):
        raise InvalidInputError(f"step_size must be in (0, 0.1], got {step_size}")
    if n_samples < 1:
        raise InvalidInputError("n_samples must be >= 1")
    if burn_in < 0:
        raise InvalidInputError("burn_in must be >= 0")
    if stride < 1:
        raise InvalidInputError("stride must be >= 1")
    z0 = np.asarray(initial, dtype=np.float64)
    if z0.shape != (3,):
        raise InvalidInputError("initial state must have three components")
    samples, diverged = kernels().chua_rk4(
        z0,
        params.alpha,
        params.beta,
        params.a,
        params.b,
        params.c,
        params.d,
        step_size,
        burn_in,
        n_samples,
        stride,
        DIVERGENCE_GUARD,
    )
    if diverged >= 0:
        raise DivergenceError(
            f"state component exceeded {DIVERGENCE_GUARD:g}", diverged
        )
    return ChaosTrajectory(
        params=params,
        step_size=step_size,
        burn_in=burn_in,
        samples=samples,
        stride=stride,
    )


def modulation_sequence(traj: ChaosTrajectory, n: int, normalize: bool = False):
    """First ``n`` values of the z3 state column, in sample order.

    With ``normalize`` the whole column is scaled by 1/max|z3| over the
    trajectory before truncation, mapping it into [-1, 1].
    """
    if n < 0 or n > traj.samples.shape[0]:
        raise InvalidInputError(
            f"requested {n} values from a trajectory of {traj.samples.shape[0]}"
        )
    z3 = traj.samples[:, 2]
    if normalize:
        peak = np.abs(z3).max()
        if peak > 0:
            z3 = z3 / peak
    return z3[:n].copy()
