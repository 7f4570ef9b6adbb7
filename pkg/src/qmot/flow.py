"""Gradient flows of entropy and quadratic energy on positive definite matrices.

Two functionals,

    S(rho) = -tr(rho log rho - rho)          (ascended)
    U(rho) = 1/2 tr((rho - target)^2)        (descended)

flow along the WFS or WF geometry. With ``p = log rho`` (entropy) or
``p = rho - target`` (quadratic) the flows read

    WFS: rho' = -1/2 div_L(rho grad_L p + grad_L p rho) - (rho p + p rho)/(2 alpha)
    WF:  rho' = -1/2 div_L(rho grad_L p + grad_L p rho) - p/alpha

and are integrated with explicit Euler steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DimensionError
from .geometry import Mode
from .hermitian import (EPS_PD, as_hermitian, check_pd, hermitian_part, is_pd, matrix_log,
                        min_eig)
from .lindblad import LindbladBasis, div_L, grad_L


class Functional(str, Enum):
    ENTROPY = "entropy"
    QUADRATIC = "quadratic"


@dataclass(frozen=True, eq=False)
class FlowConfig:
    functional: Functional = Functional.ENTROPY
    metric: Mode = Mode.WFS
    alpha: float = 1.0
    dt: float = 1e-3
    steps: int = 5000
    target: np.ndarray | None = None
    eps_pd: float = EPS_PD

    def __post_init__(self):
        object.__setattr__(self, "functional", Functional(self.functional))
        object.__setattr__(self, "metric", Mode(self.metric))
        if self.metric not in (Mode.WFS, Mode.WF):
            raise ValueError(f"gradient flows use metric wfs or wf, got {self.metric.value}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.functional is Functional.QUADRATIC:
            if self.target is None:
                raise ValueError("the quadratic functional needs a target matrix")
            object.__setattr__(self, "target", as_hermitian(self.target))


@dataclass
class FlowTrajectory:
    times: np.ndarray
    states: np.ndarray
    values: np.ndarray
    left_cone: bool = False
    message: str = ""
    config: FlowConfig = field(default_factory=FlowConfig)

    def __len__(self):
        return len(self.times)

    @property
    def min_eigenvalues(self) -> np.ndarray:
        return min_eig(self.states)


def entropy(rho) -> float:
    w, _ = check_pd(rho, EPS_PD)
    return float(-np.sum(w * np.log(w) - w))


def quadratic_energy(rho, target) -> float:
    rho = np.asarray(rho)
    target = np.asarray(target)
    if rho.shape != target.shape:
        raise DimensionError(f"shape mismatch {rho.shape} vs {target.shape}")
    return 0.5 * float(np.sum(np.abs(rho - target) ** 2))


def functional_value(rho, config: FlowConfig) -> float:
    if config.functional is Functional.ENTROPY:
        return entropy(rho)
    return quadratic_energy(rho, config.target)


def potential(rho, config: FlowConfig) -> np.ndarray:
    """``log rho`` for the entropy, ``rho - target`` for the quadratic energy."""
    if config.functional is Functional.ENTROPY:
        return matrix_log(rho, config.eps_pd)
    return hermitian_part(rho - config.target)


def flow_rhs(rho, config: FlowConfig, B: LindbladBasis) -> np.ndarray:
    rho = hermitian_part(rho)
    check_pd(rho, config.eps_pd)
    p = potential(rho, config)
    g = grad_L(B, p)
    out = -0.5 * div_L(B, rho @ g + g @ rho)
    if config.metric is Mode.WFS:
        out = out - (rho @ p + p @ rho) / (2 * config.alpha)
    else:
        out = out - p / config.alpha
    return hermitian_part(out)


def run_flow(rho_init, config: FlowConfig, B: LindbladBasis) -> FlowTrajectory:
    """Explicit Euler integration; stops early if an iterate leaves the PD cone."""
    rho = as_hermitian(rho_init)
    check_pd(rho, config.eps_pd, "rho_init")
    states = [rho]
    values = [functional_value(rho, config)]
    left, msg = False, ""
    for m in range(config.steps):
        nxt = hermitian_part(rho + config.dt * flow_rhs(rho, config, B))
        if not is_pd(nxt, config.eps_pd):
            left = True
            msg = (f"step {m + 1} left the positive definite cone "
                   f"(min eigenvalue {float(min_eig(nxt)):.3e})")
            break
        rho = nxt
        states.append(rho)
        values.append(functional_value(rho, config))
    times = config.dt * np.arange(len(states))
    return FlowTrajectory(times, np.array(states), np.array(values), left, msg, config)
