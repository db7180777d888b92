"""Switching-resolved boost converter model.

The plant state is ``x = [i_l, v_c]``: inductor current and the voltage on the
ideal part of the output capacitor. Within each switch state the dynamics are
affine, ``dx/dt = M x + u``, and the measured outputs ``v_out`` and ``v_mos``
are affine in ``x``. The capacitor branch carries ``esr + r_track`` in series
with the capacitance, and that branch sits in parallel with the load.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import (
    ConvergenceError,
    DiscontinuousConductionError,
    InvalidDegradationError,
    InvalidParameterError,
)
from .frame import AcquisitionFrame

ESR_NETWORK_RESISTOR = 0.200
ESR_NETWORK_SIZE = 5
CAP_UNIT = 33e-6
CAP_BANK_SIZE = 5

STEADY_STATE_RTOL = 1e-9


@dataclass(frozen=True)
class ConverterParams:
    v_in: float
    l: float
    c: float
    esr: float
    r_load: float
    f_sw: float
    duty: float
    r_l: float = 0.0
    r_track: float = 0.0
    v_diode: float = 0.0
    r_dson: float = 0.0

    def __post_init__(self):
        for name in ("l", "c", "r_load", "f_sw"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be > 0, got {value!r}")
        for name in ("esr", "r_l", "r_track", "r_dson", "v_diode"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InvalidParameterError(f"{name} must be >= 0, got {value!r}")
        if not (0.0 < self.duty < 1.0):
            raise InvalidParameterError(f"duty must lie in (0, 1), got {self.duty!r}")
        if not math.isfinite(self.v_in):
            raise InvalidParameterError("v_in must be finite")

    @property
    def period(self) -> float:
        return 1.0 / self.f_sw

    @property
    def t_on(self) -> float:
        return self.duty / self.f_sw

    @property
    def r_branch(self) -> float:
        """Total resistance in series with the capacitance."""
        return self.esr + self.r_track

    def replace(self, **changes) -> "ConverterParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class DegradationState:
    """Jumper settings of the ESR resistor network and the capacitor bank.

    ``n_parallel_esr_resistors`` of the 200 mOhm resistors are paralleled and
    the combination is put in series with the capacitor; 0 shorts the network.
    """

    n_parallel_esr_resistors: int = 0
    n_parallel_caps: int = 3

    def __post_init__(self):
        k = self.n_parallel_esr_resistors
        n = self.n_parallel_caps
        if not (isinstance(k, (int, np.integer)) and 0 <= k <= ESR_NETWORK_SIZE):
            raise InvalidDegradationError(
                f"n_parallel_esr_resistors must be an integer in 0..{ESR_NETWORK_SIZE}, got {k!r}")
        if not (isinstance(n, (int, np.integer)) and 1 <= n <= CAP_BANK_SIZE):
            raise InvalidDegradationError(
                f"n_parallel_caps must be an integer in 1..{CAP_BANK_SIZE}, got {n!r}")

    @property
    def added_esr(self) -> float:
        k = self.n_parallel_esr_resistors
        return ESR_NETWORK_RESISTOR / k if k else 0.0

    @property
    def capacitance(self) -> float:
        return self.n_parallel_caps * CAP_UNIT


def apply_degradation(base: ConverterParams, deg: DegradationState) -> ConverterParams:
    """Return ``base`` with the resistor network and capacitor bank applied.

    ``base.r_track`` is read as the single-capacitor parasitic; paralleling
    ``n`` capacitors also parallels their tracks, so it is divided by ``n``.
    """
    if not isinstance(deg, DegradationState):
        raise InvalidDegradationError(f"expected DegradationState, got {type(deg).__name__}")
    return base.replace(
        esr=base.esr + deg.added_esr,
        c=deg.capacitance,
        r_track=base.r_track / deg.n_parallel_caps,
    )


@dataclass(frozen=True)
class AcStage:
    """AC-coupled pre-amplification ahead of the quantizer for one channel."""

    dc: float
    gain: float

    def __post_init__(self):
        if not (self.gain > 0 and math.isfinite(self.gain)):
            raise InvalidParameterError(f"AC stage gain must be > 0, got {self.gain!r}")


@dataclass(frozen=True)
class SimConfig:
    sample_rate: float = 2e6
    n_periods: int = 1
    integrator_substeps: int = 10
    noise_sigma: Mapping[str, float] = field(default_factory=dict)
    adc_bits: int = 0
    adc_fullscale: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    ac_stage: Mapping[str, AcStage] = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        from .adc import CHANNELS

        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise InvalidParameterError("sample_rate must be > 0")
        if int(self.n_periods) != self.n_periods or self.n_periods < 1:
            raise InvalidParameterError("n_periods must be a positive integer")
        if int(self.integrator_substeps) != self.integrator_substeps or self.integrator_substeps < 10:
            raise InvalidParameterError("integrator_substeps must be an integer >= 10")
        if self.adc_bits < 0 or int(self.adc_bits) != self.adc_bits:
            raise InvalidParameterError("adc_bits must be a non-negative integer")
        for mapping_name in ("noise_sigma", "adc_fullscale", "ac_stage"):
            for key in getattr(self, mapping_name):
                if key not in CHANNELS:
                    raise InvalidParameterError(f"{mapping_name}: unknown channel {key!r}")
        for key, sigma in self.noise_sigma.items():
            if not (sigma >= 0 and math.isfinite(sigma)):
                raise InvalidParameterError(f"noise_sigma[{key}] must be >= 0")
        for key, span in self.adc_fullscale.items():
            lo, hi = span
            if not hi > lo:
                raise InvalidParameterError(f"adc_fullscale[{key}] must be (low, high) with high > low")
        if self.adc_bits and set(self.adc_fullscale) != set(CHANNELS):
            raise InvalidParameterError("adc_fullscale needs a range for every channel when adc_bits > 0")
        if self.ac_stage and not self.adc_bits:
            raise InvalidParameterError("ac_stage requires adc_bits > 0")

    def check_against(self, params: ConverterParams) -> None:
        if self.sample_rate < 100 * params.f_sw * (1 - 1e-12):
            raise InvalidParameterError(
                f"sample_rate {self.sample_rate:g} Hz is below 100 x f_sw ({100 * params.f_sw:g} Hz)")

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


# -- switched affine model ---------------------------------------------------

def mode_dynamics(params: ConverterParams, on: bool) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(M, u)`` with ``dx/dt = M @ x + u`` for one switch state."""
    p = params
    rb = p.r_branch
    rsum = p.r_load + rb
    if on:
        m = np.array([[-(p.r_l + p.r_dson) / p.l, 0.0],
                      [0.0, -1.0 / (rsum * p.c)]])
        u = np.array([p.v_in / p.l, 0.0])
    else:
        # v_out = (rb*R*i_l + R*v_c)/(R + rb); reduces to v_out = v_c when rb = 0
        r_par = rb * p.r_load / rsum
        m = np.array([[-(p.r_l + r_par) / p.l, -(p.r_load / rsum) / p.l],
                      [p.r_load / (rsum * p.c), -1.0 / (rsum * p.c)]])
        u = np.array([(p.v_in - p.v_diode) / p.l, 0.0])
    return m, u


def mode_outputs(params: ConverterParams, on: bool, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(v_out, v_mos)`` for states ``x`` of shape (2, ...)."""
    p = params
    rsum = p.r_load + p.r_branch
    i_l, v_c = x[0], x[1]
    if on:
        v_out = v_c * (p.r_load / rsum)
        v_mos = p.r_dson * i_l
    else:
        v_out = (p.r_branch * p.r_load * i_l + p.r_load * v_c) / rsum
        v_mos = v_out + p.v_diode
    return v_out, v_mos


def rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class _Grid:
    knots: np.ndarray       # integration knot times in [0, T], last == T
    on: np.ndarray          # switch state on each segment [knots[j], knots[j+1]]
    sample_knots: np.ndarray  # knot indices that are sample instants
    sample_on: np.ndarray   # switch state in force at each sample instant


def _build_grid(params: ConverterParams, cfg: SimConfig) -> _Grid:
    period = params.period
    t_sw = params.t_on
    h = 1.0 / (cfg.sample_rate * cfg.integrator_substeps)
    tol = 1e-9 * period

    n_sub = math.ceil(period / h - 1e-6)
    j = np.arange(n_sub)
    knots = j * h
    is_sample = (j % cfg.integrator_substeps) == 0

    hit = np.flatnonzero(np.abs(knots - t_sw) < tol)
    if hit.size:
        knots[hit[0]] = t_sw
    else:
        pos = int(np.searchsorted(knots, t_sw))
        knots = np.insert(knots, pos, t_sw)
        is_sample = np.insert(is_sample, pos, False)
    knots = np.append(knots, period)
    is_sample = np.append(is_sample, False)

    seg_on = knots[1:] <= t_sw + tol
    sample_knots = np.flatnonzero(is_sample)
    sample_on = knots[sample_knots] < t_sw - tol
    return _Grid(knots, seg_on, sample_knots, sample_on)


def _propagate(params, grid, y0, record=False):
    """Integrate one period from ``y0`` (shape (2,) or (2, k))."""
    dyn = {True: mode_dynamics(params, True), False: mode_dynamics(params, False)}
    affine_col = y0.ndim == 2

    def field_for(on):
        m, u = dyn[on]
        if affine_col:
            # columns 0..k-2 propagate homogeneous solutions, last column the forced one
            forcing = np.zeros_like(y0)
            forcing[:, -1] = u
            return lambda y: m @ y + forcing
        return lambda y: m @ y + u

    fields = {True: field_for(True), False: field_for(False)}
    y = y0.copy()
    states = [y] if record else None
    knots = grid.knots
    for j in range(len(knots) - 1):
        y = rk4_step(fields[bool(grid.on[j])], y, knots[j + 1] - knots[j])
        if record:
            states.append(y)
    if record:
        return y, np.array(states)
    return y


def period_map(params: ConverterParams, cfg: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """Affine one-period map ``x(T) = phi @ x(0) + gamma`` of the integrator."""
    grid = _build_grid(params, cfg)
    z0 = np.zeros((2, 3))
    z0[0, 0] = z0[1, 1] = 1.0
    zt = _propagate(params, grid, z0)
    return zt[:, :2], zt[:, 2]


def _rel_change(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def steady_state(params: ConverterParams, cfg: SimConfig) -> np.ndarray:
    """Start-of-period state of the periodic steady state."""
    phi, gamma = period_map(params, cfg)
    try:
        x = np.linalg.solve(np.eye(2) - phi, gamma)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError("period map has no unique fixed point") from exc
    return x


@dataclass(frozen=True)
class Trajectory:
    """Steady-state period at integrator resolution."""

    t: np.ndarray       # knot times, t[0] = 0 and t[-1] = T
    x: np.ndarray       # states at the knots, shape (len(t), 2)
    seg_on: np.ndarray  # switch state on [t[j], t[j+1]]


def _settle(params: ConverterParams, cfg: SimConfig, grid: _Grid):
    x = steady_state(params, cfg)

    max_periods = max(cfg.n_periods, math.ceil(10 * params.r_load * params.c / params.period))
    settled = 0
    for _ in range(max_periods):
        x_end, states = _propagate(params, grid, x, record=True)
        settled = settled + 1 if _rel_change(x_end, x) < STEADY_STATE_RTOL else 0
        if settled >= cfg.n_periods:
            break
        x = x_end
    else:
        raise ConvergenceError(
            f"no periodic steady state within {max_periods} periods "
            f"(last relative change {_rel_change(x_end, x):.3g})")
    return states


def steady_trajectory(params: ConverterParams, cfg: SimConfig) -> Trajectory:
    cfg.check_against(params)
    grid = _build_grid(params, cfg)
    return Trajectory(grid.knots.copy(), _settle(params, cfg, grid), grid.on.copy())


def simulate_clean(params: ConverterParams, cfg: SimConfig) -> AcquisitionFrame:
    """Noise-free steady-state capture of one switching period."""
    cfg.check_against(params)
    grid = _build_grid(params, cfg)
    states = _settle(params, cfg, grid)

    if states[:, 0].min() <= 0.0:
        raise DiscontinuousConductionError(
            f"inductor current reaches {states[:, 0].min():.4g} A; "
            "only continuous conduction is supported")

    samples = states[grid.sample_knots].T
    v_out = np.empty(samples.shape[1])
    v_mos = np.empty(samples.shape[1])
    for on in (True, False):
        mask = grid.sample_on == on
        v_out[mask], v_mos[mask] = mode_outputs(params, on, samples[:, mask])

    n = samples.shape[1]
    return AcquisitionFrame(
        sample_rate=cfg.sample_rate,
        t=np.arange(n) / cfg.sample_rate,
        i_l=samples[0].copy(),
        v_out=v_out,
        v_c=samples[1].copy(),
        v_mos=v_mos,
        metadata=frame_metadata(params),
    )


def frame_metadata(params: ConverterParams) -> dict[str, float]:
    return {
        "f_sw_hz": params.f_sw,
        "v_in_v": params.v_in,
        "duty": params.duty,
        "esr_ohm": params.esr,
        "r_track_ohm": params.r_track,
        "c_f": params.c,
        "l_h": params.l,
        "r_load_ohm": params.r_load,
    }


def simulate(params: ConverterParams, cfg: SimConfig, rng: np.random.Generator | None = None) -> AcquisitionFrame:
    """Simulate to steady state and return one measured switching period.

    Noise and quantization come last; ``rng`` overrides ``cfg.seed``.
    """
    from .adc import measure

    frame = simulate_clean(params, cfg)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    return measure(frame, cfg, rng)
