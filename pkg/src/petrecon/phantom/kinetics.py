"""
Tracer kinetics.

This module provides the analytic blood input function, the two-tissue compartment model and
the conversion of a label volume into frame-averaged activity.
"""

import math
from typing import Dict, Mapping, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import optimize, stats

from petrecon.constants import DEFAULT_FRAME_END, DEFAULT_FRAME_START, DEFAULT_ODE_STEP
from petrecon.errors import ConfigurationError, DomainError
from petrecon.image.volume import ImageVolume, LabelVolume

SeedLike = Union[int, Sequence[int]]


class InputFunctionParams(BaseModel):
    """
    Coefficients of the three-exponential plasma input
    ``C_p(t) = (a1 t - a2 - a3) exp(-l1 t) + a2 exp(-l2 t) + a3 exp(-l3 t)``.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    a1: float = Field(851.1225, ge=0)
    a2: float = Field(20.8113, ge=0)
    a3: float = Field(21.8798, ge=0)
    l1: float = Field(4.13311, gt=0)
    l2: float = Field(0.01043, gt=0)
    l3: float = Field(0.1191, gt=0)


class KineticParams(BaseModel):
    """Two-tissue compartment rate constants and blood volume fraction."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    K1: float = Field(..., ge=0)
    k2: float = Field(..., ge=0)
    k3: float = Field(..., ge=0)
    k4: float = Field(..., ge=0)
    V: float = Field(..., ge=0, le=1)


class TimeFrame(BaseModel):
    """An acquisition frame in minutes post injection."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    t_start: float = Field(DEFAULT_FRAME_START, ge=0)
    t_end: float = Field(DEFAULT_FRAME_END, gt=0)

    @model_validator(mode="after")
    def _check_order(self) -> "TimeFrame":
        if not self.t_start < self.t_end:
            raise ValueError(f"t_start ({self.t_start}) must be smaller than t_end ({self.t_end})")
        return self

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


AIR = KineticParams(K1=0.0, k2=0.0, k3=0.0, k4=0.0, V=0.0)

# Mean kinetic parameters per tissue (K1 in mL/min/cm3, k2..k4 in 1/min)
DEFAULT_KINETICS: Dict[str, KineticParams] = {
    "air": AIR,
    "myocardium": KineticParams(K1=0.6, k2=1.2, k3=0.1, k4=0.001, V=0.0),
    "liver": KineticParams(K1=0.864, k2=0.981, k3=0.005, k4=0.016, V=0.0),
    "lung": KineticParams(K1=0.108, k2=0.735, k3=0.016, k4=0.013, V=0.017),
    "kidney": KineticParams(K1=0.263, k2=0.299, k3=0.0, k4=0.0, V=0.438),
    "spleen": KineticParams(K1=1.207, k2=1.909, k3=0.008, k4=0.014, V=0.0),
    "pancreas": KineticParams(K1=0.648, k2=1.64, k3=0.027, k4=0.016, V=0.107),
    "soft tissue": KineticParams(K1=0.047, k2=0.325, k3=0.084, k4=0.0, V=0.019),
    "marrow": KineticParams(K1=0.425, k2=1.055, k3=0.023, k4=0.013, V=0.04),
    "lung lesion": KineticParams(K1=0.63, k2=0.842, k3=0.092, k4=0.014, V=0.132),
}


def blood_input(t: Union[float, np.ndarray], params: Optional[InputFunctionParams] = None):
    """
    Evaluate the plasma input function.

    Args:
        t: Time(s) in minutes, must be non-negative
        params: Input function coefficients, defaults to the standard FDG input

    Returns:
        The plasma activity at ``t``, a float for scalar input
    """
    p = params or InputFunctionParams()
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0):
        raise DomainError("Blood input is only defined for t >= 0")

    value = (
        (p.a1 * t_arr - p.a2 - p.a3) * np.exp(-p.l1 * t_arr)
        + p.a2 * np.exp(-p.l2 * t_arr)
        + p.a3 * np.exp(-p.l3 * t_arr)
    )
    value = np.maximum(value, 0.0)
    if value.ndim == 0:
        return float(value)
    return value


def input_peak_time(params: Optional[InputFunctionParams] = None, horizon: float = 10.0) -> float:
    """Time of the maximum of the plasma input, located by a bounded scalar search."""
    p = params or InputFunctionParams()
    coarse = np.linspace(0.0, horizon, 2001)
    k = int(np.argmax(blood_input(coarse, p)))
    lower = coarse[max(k - 1, 0)]
    upper = coarse[min(k + 1, coarse.size - 1)]
    result = optimize.minimize_scalar(
        lambda t: -blood_input(t, p), bounds=(lower, upper), method="bounded", options={"xatol": 1e-10}
    )
    return float(result.x)


def _input_scalar(t: float, p: InputFunctionParams) -> float:
    return (
        (p.a1 * t - p.a2 - p.a3) * math.exp(-p.l1 * t) + p.a2 * math.exp(-p.l2 * t) + p.a3 * math.exp(-p.l3 * t)
    )


class CompartmentSolver:
    """
    Fixed-step RK4 integrator of the two-tissue model for a batch of parameter sets.

    The state per parameter set is ``(C_f, C_b, integral of C_T)``. Integration runs on the lattice
    ``k * step`` from t = 0; a query between lattice nodes takes one partial step from the last node,
    so results do not depend on which other times are queried.

    Args:
        params: Kinetic parameter sets integrated side by side
        input_params: Plasma input coefficients
        step: Lattice spacing in minutes
    """

    def __init__(
        self,
        params: Sequence[KineticParams],
        input_params: Optional[InputFunctionParams] = None,
        step: float = DEFAULT_ODE_STEP,
    ):
        if step <= 0:
            raise DomainError(f"ODE step must be positive, got {step}")
        self.input_params = input_params or InputFunctionParams()
        self.step = float(step)
        self.K1 = np.array([p.K1 for p in params], dtype=np.float64)
        self.k2 = np.array([p.k2 for p in params], dtype=np.float64)
        self.k3 = np.array([p.k3 for p in params], dtype=np.float64)
        self.k4 = np.array([p.k4 for p in params], dtype=np.float64)
        self.V = np.array([p.V for p in params], dtype=np.float64)

    def _derivative(self, t: float, state: np.ndarray) -> np.ndarray:
        cp = _input_scalar(t, self.input_params)
        free, bound = state[0], state[1]
        d = np.empty_like(state)
        d[0] = self.K1 * cp - (self.k2 + self.k3) * free + self.k4 * bound
        d[1] = self.k3 * free - self.k4 * bound
        d[2] = (1.0 - self.V) * (free + bound) + self.V * cp
        return d

    def _rk4(self, t: float, state: np.ndarray, h: float) -> np.ndarray:
        d1 = self._derivative(t, state)
        d2 = self._derivative(t + 0.5 * h, state + 0.5 * h * d1)
        d3 = self._derivative(t + 0.5 * h, state + 0.5 * h * d2)
        d4 = self._derivative(t + h, state + h * d3)
        return state + (h / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)

    def states(self, times: Sequence[float]) -> np.ndarray:
        """
        Integrate to each query time.

        Args:
            times: Strictly increasing, non-negative query times

        Returns:
            np.ndarray: Array of shape ``(len(times), 3, n_params)``
        """
        t = np.asarray(times, dtype=np.float64)
        if t.ndim != 1 or t.size == 0:
            raise DomainError("Query times must be a non-empty 1D sequence")
        if t[0] < 0:
            raise DomainError("Query times must be non-negative")
        if np.any(np.diff(t) <= 0):
            raise DomainError("Query times must be strictly increasing")

        h = self.step
        out = np.empty((t.size, 3, self.K1.size), dtype=np.float64)
        node_state = np.zeros((3, self.K1.size), dtype=np.float64)
        node = 0
        for q, tq in enumerate(t):
            # Snap to the lattice when a query sits on a node up to rounding
            target = int(math.floor(tq / h + 1e-9))
            while node < target:
                node_state = self._rk4(node * h, node_state, h)
                node += 1
            remainder = tq - node * h
            if remainder > 1e-12:
                out[q] = self._rk4(node * h, node_state, remainder)
            else:
                out[q] = node_state
        return out

    def tissue_curves(self, times: Sequence[float]) -> np.ndarray:
        """Tissue activity ``C_T`` at each query time, shape ``(len(times), n_params)``."""
        states = self.states(times)
        cp = blood_input(np.asarray(times, dtype=np.float64), self.input_params)
        return np.maximum((1.0 - self.V) * (states[:, 0] + states[:, 1]) + self.V * cp[:, None], 0.0)

    def frame_means(self, frame: TimeFrame) -> np.ndarray:
        """Average of ``C_T`` over the frame for each parameter set."""
        states = self.states([frame.t_start, frame.t_end])
        integral = states[1, 2] - states[0, 2]
        return np.maximum(integral / frame.duration, 0.0)


def two_tissue_tac(
    params: KineticParams,
    input_params: Optional[InputFunctionParams],
    times: Sequence[float],
    step: float = DEFAULT_ODE_STEP,
) -> np.ndarray:
    """
    Time activity curve of one tissue under the two-tissue compartment model.

    Args:
        params: Kinetic parameters
        input_params: Plasma input coefficients, None for the defaults
        times: Strictly increasing, non-negative times in minutes
        step: RK4 lattice spacing in minutes

    Returns:
        np.ndarray: ``C_T`` at every time

    Raises:
        DomainError: If the time grid is negative or not strictly increasing
    """
    return CompartmentSolver([params], input_params, step).tissue_curves(times)[:, 0]


def sample_kinetics(mean: KineticParams, cv: float, seed: SeedLike) -> KineticParams:
    """
    Draw kinetic parameters from Gaussians truncated at 0 (and at 1 for V).

    Args:
        mean: Mean parameters
        cv: Coefficient of variation; 0 returns ``mean`` unchanged
        seed: Seed of the draw

    Returns:
        KineticParams: The sampled parameters
    """
    if cv < 0:
        raise DomainError(f"Coefficient of variation must be non-negative, got {cv}")
    if cv == 0:
        return mean.model_copy()

    rng = np.random.default_rng(seed)
    values = {}
    for name, value in mean.model_dump().items():
        if value == 0:
            values[name] = 0.0
            continue
        scale = cv * value
        upper = 1.0 if name == "V" else np.inf
        dist = stats.truncnorm((0.0 - value) / scale, (upper - value) / scale, loc=value, scale=scale)
        values[name] = float(dist.rvs(random_state=rng))
    return KineticParams(**values)


def sample_kinetics_table(table: Mapping[str, KineticParams], cv: float, seed: SeedLike) -> Dict[str, KineticParams]:
    """Sample every tissue of a table, each tissue on its own stream derived from ``seed``."""
    base = [seed] if isinstance(seed, int) else list(seed)
    return {
        tissue: sample_kinetics(params, cv, base + [index])
        for index, (tissue, params) in enumerate(sorted(table.items()))
    }


def frame_activity(
    labels: LabelVolume,
    table: Mapping[str, KineticParams],
    frame: Optional[TimeFrame] = None,
    input_params: Optional[InputFunctionParams] = None,
    step: float = DEFAULT_ODE_STEP,
) -> ImageVolume:
    """
    Convert a label volume to the mean activity over an acquisition frame.

    Args:
        labels: The labelled phantom
        table: Kinetic parameters per tissue name
        frame: Acquisition frame, 20-60 min by default
        input_params: Plasma input coefficients
        step: RK4 lattice spacing in minutes

    Returns:
        ImageVolume: Frame-averaged activity

    Raises:
        ConfigurationError: If a label's tissue has no kinetic parameters
    """
    frame = frame or TimeFrame()
    present = [int(v) for v in np.unique(labels.data)]
    tissues = []
    for label in present:
        tissue = labels.tissues.get(label)
        if tissue is None or tissue not in table:
            raise ConfigurationError(f"No kinetic parameters for label {label} (tissue '{tissue}')")
        tissues.append(tissue)

    unique_tissues = sorted(set(tissues))
    means = CompartmentSolver([table[t] for t in unique_tissues], input_params, step).frame_means(frame)
    per_tissue = dict(zip(unique_tissues, means))

    lookup = np.zeros(max(present) + 1, dtype=np.float64)
    for label, tissue in zip(present, tissues):
        lookup[label] = per_tissue[tissue]
    return ImageVolume(labels.grid, lookup[labels.data])
