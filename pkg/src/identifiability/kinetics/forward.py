"""Log ignition delay of the two-step mechanism as a three-parameter forward model.

The fuel-oxidation pre-exponential factor is ``A = 10 ** logA`` with
``logA = theta1 + tanh(theta2 + theta3 * phi) * T0 / 1000``.
"""

from __future__ import annotations

import numba
import numpy as np

from ..errors import InvalidArgumentError, ModelEvaluationError, NoIgnitionError
from ..model import ForwardModel, PriorSpec, StatisticalModel, register_model
from .mechanism import Mechanism, load_mechanism
from .reactor import (
    ATOL_CONC, ATOL_TEMP, MIN_IGNITION_RISE, MIN_STEP, MIN_STEP_RELATIVE, RTOL, KineticsInput, _A,
    _E, _density, _initial_vector, _integrate, _parabola_vertex, _rate_constants, chemical_time_scale,
)

PARAM_NAMES = ("theta1", "theta2", "theta3")
# first window is WINDOW * tau0; it grows by WINDOW_GROWTH until ignition is seen
WINDOW = 2.0
WINDOW_GROWTH = 4.0
MAX_WINDOWS = 8
MAX_STEPS = 1_000_000

_IGNITED, _NO_IGNITION, _STIFF = 0, 1, 2


def preexponential_logA(theta, T0: float, phi: float) -> float:
    """Base-10 logarithm of the fuel-oxidation pre-exponential factor."""
    t1, t2, t3 = (float(v) for v in theta)
    return t1 + np.tanh(t2 + t3 * phi) * T0 / 1000.0


@numba.njit(cache=True)
def _ignition_grid(log10A, y0s, P0s, tau_unit, Ea, orders, net, W, low, high, t_mid, r_cal, r_si,
                   floor, rtol, atol_n, atol_T, a_tab, e_tab, pre_template, param_idx):
    """Ignition delays for every (row, input) pair of ``log10A`` (K x n)."""
    K, n = log10A.shape
    out = np.empty((K, n))
    status = np.zeros((K, n), dtype=np.int64)
    pre = pre_template.copy()
    for k in range(K):
        for j in range(n):
            A = 10.0 ** log10A[k, j]
            pre[param_idx] = A
            t_end = WINDOW * tau_unit[j] / A
            out[k, j] = np.nan
            status[k, j] = _NO_IGNITION
            for _ in range(MAX_WINDOWS):
                h_min = min(MIN_STEP, MIN_STEP_RELATIVE * t_end)
                res = _integrate(y0s[j], t_end, P0s[j], pre, Ea, orders, net, W, low, high, t_mid,
                                 r_cal, r_si, floor, rtol, atol_n[j], atol_T, h_min, False,
                                 MAX_STEPS, a_tab, e_tab)
                code = res[0]
                peak = res[6]
                T_max = res[7]
                if code != 0:
                    status[k, j] = _STIFF
                    break
                # a peak still rising at the window end is not yet the ignition point
                if T_max - y0s[j, -1] >= MIN_IGNITION_RISE and not np.isnan(peak[4]):
                    if np.isnan(peak[0]):
                        out[k, j] = peak[2]
                    else:
                        out[k, j] = _parabola_vertex(peak[0], peak[1], peak[2], peak[3],
                                                     peak[4], peak[5])
                    status[k, j] = _IGNITED
                    break
                t_end *= WINDOW_GROWTH
    return out, status


class CombustionForward(ForwardModel):
    """theta -> natural log of ignition delay (s) at each reactor input."""

    param_names = PARAM_NAMES

    def __init__(self, inputs, mech: Mechanism | None = None, rtol: float = RTOL):
        self.inputs = tuple(inputs)
        if not self.inputs:
            raise InvalidArgumentError("at least one reactor input is required")
        self.mech = mech or load_mechanism()
        self.rtol = float(rtol)
        mech = self.mech
        self._y0 = np.array([_initial_vector(inp, mech) for inp in self.inputs])
        self._P0 = np.array([inp.P0 for inp in self.inputs], dtype=float)
        rho0 = np.array([_density(y[:-1], inp.T0, inp.P0, mech)
                         for y, inp in zip(self._y0, self.inputs)])
        self._atol_n = ATOL_CONC / rho0 * (self.rtol / RTOL)
        self._atol_T = ATOL_TEMP * (self.rtol / RTOL)
        # tau0 scales exactly as 1/A, so one evaluation at A = 1 serves every theta
        self._tau_unit = np.array([chemical_time_scale(inp, 1.0, mech) for inp in self.inputs])
        self._pre = _rate_constants(mech, 0.0)
        self._param_idx = int(np.flatnonzero(np.isnan(mech.pre_exponential))[0])
        self._T0 = np.array([inp.T0 for inp in self.inputs], dtype=float)
        self._phi = np.array([inp.phi for inp in self.inputs], dtype=float)

    def n_outputs(self, d=None) -> int:
        return len(self.inputs)

    def log10A(self, thetas) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        if thetas.shape[1] != 3:
            raise InvalidArgumentError(f"theta must have 3 components, got {thetas.shape[1]}")
        t1, t2, t3 = thetas[:, 0:1], thetas[:, 1:2], thetas[:, 2:3]
        return t1 + np.tanh(t2 + t3 * self._phi) * self._T0 / 1000.0

    def ignition_delays(self, thetas) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        mech = self.mech
        t_ign, status = _ignition_grid(
            self.log10A(thetas), self._y0, self._P0, self._tau_unit, mech.activation_energy,
            mech.orders, mech.net, mech.molecular_weights, mech.thermo_low, mech.thermo_high,
            mech.t_mid, mech.r_cal, mech.r_si, mech.concentration_floor, self.rtol,
            self._atol_n, self._atol_T, _A, _E, self._pre, self._param_idx,
        )
        bad = np.argwhere(status != _IGNITED)
        if bad.size:
            k, j = bad[0]
            inp = self.inputs[j]
            where = f"T0={inp.T0} K, phi={inp.phi}"
            if status[k, j] == _NO_IGNITION:
                raise NoIgnitionError(f"no ignition at {where}", theta=thetas[k])
            raise ModelEvaluationError(f"step size collapse at {where}", theta=thetas[k])
        return t_ign

    def evaluate(self, theta, d=None) -> np.ndarray:
        return self.evaluate_batch(np.asarray(theta, dtype=float)[None, :], d)[0]

    def evaluate_batch(self, thetas, d=None) -> np.ndarray:
        return np.log(self.ignition_delays(thetas))


def combustion_forward(theta, inputs) -> np.ndarray:
    """Natural-log ignition delays for one parameter vector."""
    return CombustionForward(inputs).evaluate(theta)


DEFAULT_TEMPERATURES = (1100.0, 1400.0, 1700.0, 2000.0)


@register_model("methane_2step")
def _build_methane(settings: dict) -> tuple[StatisticalModel, PriorSpec]:
    temps = settings.get("temperatures", DEFAULT_TEMPERATURES)
    phi = float(settings.get("phi", 1.0))
    P0 = float(settings.get("pressure", 100e3))
    noise = float(settings.get("noise_variance", 0.1))
    if not noise > 0:
        raise InvalidArgumentError("noise variance must be positive")
    inputs = [KineticsInput(float(T), phi, P0) for T in temps]
    forward = CombustionForward(inputs, rtol=float(settings.get("rtol", RTOL)))
    model = StatisticalModel(forward, tuple(inputs), noise * np.eye(len(inputs)),
                             name="methane_2step")
    prior = PriorSpec(PARAM_NAMES, np.array([18.0, 0.0, 0.0]), np.ones(3))
    return model, prior
