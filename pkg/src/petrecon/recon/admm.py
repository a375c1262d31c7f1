"""
ADMM reconstruction with the network as image representation.

The image is constrained to ``x = f(alpha)``. Every outer iteration takes one EM step, solves the
per-voxel x-subproblem in closed form, runs a few Nesterov-accelerated gradient steps on the
network input ``alpha`` and updates the scaled dual variable ``mu``.
"""

from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from petrecon.constants import DEFAULT_ADMM_INIT_ITERATIONS
from petrecon.errors import NumericalError
from petrecon.network.unet import ResidualUNet
from petrecon.network.volume import apply_volume, residual_gradient
from petrecon.profile import measure_time
from petrecon.recon.base import ReconConfig, Reconstructor
from petrecon.recon.likelihood import em_update, poisson_loglik
from petrecon.recon.mlem import mlem
from petrecon.scanner.projector import SystemMatrix

DIAGNOSTIC_COLUMNS = ["iter", "loglik", "residual", "alpha_obj", "L"]
DEFAULT_RHO_FACTOR = 0.1


class AdmmConfig(BaseModel):
    """
    ADMM settings.

    Attributes:
        rho: Penalty parameter, None for ``0.1 * median(p) / median(x_init)``
        max_iterations: Outer iterations
        sub_iterations: Gradient steps of the alpha-subproblem per outer iteration
        step: Initial gradient step size, also the cap of the step carried between outer iterations
        shrink: Step-size factor applied when a step increases the objective
        max_backtracks: Step reductions allowed per sub-iteration
        init_iterations: MLEM iterations of the initial image
        alpha_init: Initial network input, the network output of the MLEM image or the image itself
        snapshots: Outer iterations at which ``f(alpha)`` is recorded
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    rho: Optional[float] = Field(None, gt=0)
    max_iterations: int = Field(20, ge=1)
    sub_iterations: int = Field(5, ge=1)
    step: float = Field(1.0, gt=0)
    shrink: float = Field(0.5, gt=0, lt=1)
    max_backtracks: int = Field(30, ge=0)
    init_iterations: int = Field(DEFAULT_ADMM_INIT_ITERATIONS, ge=1)
    alpha_init: Literal["network_output", "em_image"] = "network_output"
    snapshots: Tuple[int, ...] = ()

    @model_validator(mode="after")
    def _check_snapshots(self) -> "AdmmConfig":
        bad = [s for s in self.snapshots if not 1 <= s <= self.max_iterations]
        if bad:
            raise ValueError(f"Snapshots {bad} lie outside [1, {self.max_iterations}]")
        return self


class AdmmState(BaseModel):
    """
    Iterates of the ADMM loop.

    Attributes:
        x: Image
        alpha: Network input
        mu: Scaled dual variable
        theta: Extrapolated network input of the momentum scheme
        t: Momentum sequence value
        step: Step size the next alpha-subproblem starts from
        rho: Penalty parameter
        iteration: Completed outer iterations
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    x: np.ndarray
    alpha: np.ndarray
    mu: np.ndarray
    theta: np.ndarray
    t: float = Field(1.0, ge=1)
    step: float = Field(..., gt=0)
    rho: float = Field(..., gt=0)
    iteration: int = 0

    def dump(self) -> Dict[str, np.ndarray]:
        return {"x": self.x.copy(), "alpha": self.alpha.copy(), "mu": self.mu.copy()}


class AdmmResult(BaseModel):
    """Final image, snapshots, per-iteration diagnostics and the last state."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    image: np.ndarray
    snapshots: Dict[int, np.ndarray] = Field(default_factory=dict)
    diagnostics: pd.DataFrame
    state: AdmmState


def em_step(y: np.ndarray, system: SystemMatrix, s: np.ndarray, r: np.ndarray, x: np.ndarray) -> np.ndarray:
    """The EM data-fit update of the image."""
    return em_update(y, system, x, s, r)


def x_update(x_em: np.ndarray, f_alpha: np.ndarray, mu: np.ndarray, rho: float, p: np.ndarray) -> np.ndarray:
    """
    Maximize ``p (x_em log x - x) - rho/2 (x - c)^2`` with ``c = f_alpha - mu`` per voxel.

    The maximizer is the non-negative root of ``rho x^2 + (p - rho c) x - p x_em = 0``, evaluated in
    a cancellation-free form for either sign of ``c - p / rho``.
    """
    c = f_alpha - mu
    a = c - p / rho
    q = x_em * p / rho
    disc = np.sqrt(a * a + 4.0 * q)
    small = np.divide(2.0 * q, disc - a, out=np.zeros_like(a), where=(a < 0) & (disc - a > 0))
    return np.where(a >= 0, 0.5 * (a + disc), small)


def dual_update(mu: np.ndarray, x: np.ndarray, f_alpha: np.ndarray) -> np.ndarray:
    """``mu + x - f(alpha)``."""
    return mu + x - f_alpha


def _failure_state(state: Optional[AdmmState], alpha: np.ndarray) -> Dict[str, np.ndarray]:
    return state.dump() if state is not None else {"alpha": alpha.copy()}


def _objective(net: ResidualUNet, alpha: np.ndarray, z: np.ndarray, state: Optional[AdmmState]):
    f_alpha = apply_volume(net, alpha)
    if not np.all(np.isfinite(f_alpha)):
        raise NumericalError("Network output became non-finite", _failure_state(state, alpha))
    return 0.5 * float(np.sum((f_alpha - z) ** 2)), f_alpha


def alpha_subproblem(
    net: ResidualUNet, alpha: np.ndarray, z: np.ndarray, cfg: AdmmConfig, step: Optional[float] = None, state=None
) -> Tuple[np.ndarray, float, List[float]]:
    """
    Approximately minimize ``0.5 ||f(alpha) - z||^2`` by Nesterov-accelerated gradient steps.

    A step that increases the objective is retried with a smaller step size after restarting the
    momentum, so the returned objective sequence never increases.

    Args:
        net: The network
        alpha: Current network input
        z: Target volume ``x + mu``
        cfg: Sub-iteration count and step-size control
        step: Step size to start from, ``cfg.step`` when None
        state: ADMM state included in the failure dump

    Returns:
        tuple: ``(alpha, step, objectives)`` with the objective before and after every sub-iteration

    Raises:
        NumericalError: If the network output or its gradient becomes non-finite
    """
    step = cfg.step if step is None else step
    current, _ = _objective(net, alpha, z, state)
    objectives = [current]
    theta = alpha.copy()
    t = 1.0
    at_alpha = True

    for _ in range(cfg.sub_iterations):
        _, grad, _ = residual_gradient(net, theta, z)
        if not np.all(np.isfinite(grad)):
            raise NumericalError("Network input gradient became non-finite", _failure_state(state, theta))
        accepted = None
        for _attempt in range(cfg.max_backtracks + 1):
            candidate = theta - step * grad
            value, _ = _objective(net, candidate, z, state)
            if value <= current:
                accepted = candidate
                break
            step *= cfg.shrink
            if not at_alpha:
                # Restart the momentum from the last accepted point
                theta = alpha.copy()
                t = 1.0
                at_alpha = True
                _, grad, _ = residual_gradient(net, theta, z)
        if accepted is None:
            logger.debug(f"Alpha step rejected after {cfg.max_backtracks} reductions (step {step:.3g})")
            objectives.append(current)
            break

        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        theta = accepted + ((t - 1.0) / t_next) * (accepted - alpha)
        alpha, current, t = accepted, value, t_next
        at_alpha = False
        objectives.append(current)

    return alpha, step, objectives


def default_rho(p: np.ndarray, x_init: np.ndarray) -> float:
    """``0.1 * median(p) / median(x_init)`` over the positive entries."""
    p_pos = p[p > 0]
    x_pos = x_init[x_init > 0]
    if p_pos.size == 0 or x_pos.size == 0:
        return 1.0
    return DEFAULT_RHO_FACTOR * float(np.median(p_pos)) / float(np.median(x_pos))


@measure_time(logger_instance=logger)
def reconstruct_admm(
    y: np.ndarray,
    system: SystemMatrix,
    s: np.ndarray,
    r: np.ndarray,
    net: ResidualUNet,
    cfg: AdmmConfig,
    x_init: Optional[np.ndarray] = None,
    callback: Optional[Callable[[int, dict], None]] = None,
) -> AdmmResult:
    """
    ADMM reconstruction with the network representation.

    Args:
        y: Measured counts
        system: System matrix
        s: Expected scatters
        r: Expected randoms
        net: Trained network
        cfg: ADMM settings
        x_init: Initial image, MLEM with ``cfg.init_iterations`` iterations when None
        callback: Called with ``(iteration, diagnostics row)`` after every outer iteration

    Returns:
        AdmmResult: ``max(f(alpha), 0)`` of the last iterate, snapshots and diagnostics

    Raises:
        NumericalError: If an iterate becomes non-finite; the error carries x, alpha and mu
    """
    if x_init is None:
        x_init = mlem(y, system, s, r, ReconConfig(iterations=cfg.init_iterations, snapshots=())).image
    x = np.array(x_init, dtype=np.float64)
    p = system.sensitivity
    alpha = apply_volume(net, x) if cfg.alpha_init == "network_output" else x.copy()
    rho = cfg.rho if cfg.rho is not None else default_rho(p, x)
    state = AdmmState(x=x, alpha=alpha, mu=np.zeros_like(x), theta=alpha.copy(), step=cfg.step, rho=rho)
    logger.debug(f"ADMM with rho={rho:.4g}, {cfg.max_iterations} iterations of {cfg.sub_iterations} sub-steps")

    rows = []
    snapshots = {}
    f_alpha = apply_volume(net, state.alpha)
    for it in range(1, cfg.max_iterations + 1):
        x_em = em_step(y, system, s, r, state.x)
        state.x = x_update(x_em, f_alpha, state.mu, rho, p)
        if not np.all(np.isfinite(state.x)):
            raise NumericalError(f"Image became non-finite in iteration {it}", state.dump())

        alpha, step, objectives = alpha_subproblem(net, state.alpha, state.x + state.mu, cfg, state.step, state)
        state.alpha, state.theta = alpha, alpha.copy()
        # The next subproblem starts one growth step above the last accepted step, at most cfg.step
        state.step = min(cfg.step, step / cfg.shrink)
        f_alpha = apply_volume(net, state.alpha)
        state.mu = dual_update(state.mu, state.x, f_alpha)
        state.iteration = it

        x_norm = float(np.linalg.norm(state.x))
        row = {
            "iter": it,
            "loglik": poisson_loglik(y, system, state.x, s, r),
            "residual": float(np.linalg.norm(state.x - f_alpha)) / x_norm if x_norm > 0 else 0.0,
            "alpha_obj": objectives[-1],
            "L": step,
        }
        rows.append(row)
        logger.debug(f"ADMM {it}: loglik {row['loglik']:.6g}, residual {row['residual']:.4g}")
        if it in cfg.snapshots:
            snapshots[it] = np.maximum(f_alpha, 0.0)
        if callback is not None:
            callback(it, row)

    diagnostics = pd.DataFrame(rows, columns=DIAGNOSTIC_COLUMNS)
    return AdmmResult(image=np.maximum(f_alpha, 0.0), snapshots=snapshots, diagnostics=diagnostics, state=state)


class AdmmReconstructor(Reconstructor):
    """ADMM with the network representation, swept over the outer iteration."""

    sweep_parameter = "iterations"

    def __init__(self, system, scatters, randoms, network: ResidualUNet, config: Optional[AdmmConfig] = None):
        super().__init__(system, scatters, randoms)
        self.network = network
        self.config = config or AdmmConfig()

    def reconstruct(self, counts: np.ndarray) -> np.ndarray:
        self._check_counts(counts)
        return reconstruct_admm(counts, self.system, self.scatters, self.randoms, self.network, self.config).image

    def sweep(self, counts: np.ndarray, values: Sequence[float]) -> List[np.ndarray]:
        self._check_counts(counts)
        iterations = [int(v) for v in values]
        settings = self.config.model_dump()
        settings.update(max_iterations=max(iterations), snapshots=tuple(sorted(set(iterations))))
        cfg = AdmmConfig(**settings)
        result = reconstruct_admm(counts, self.system, self.scatters, self.randoms, self.network, cfg)
        return [result.snapshots[i] for i in iterations]
