"""Adiabatic constant-pressure ideal-gas reactor for the two-step mechanism.

The state integrated internally is ``(n_1, ..., n_S, T)`` with ``n_s`` in
mol per gram of mixture. Stoichiometry is then a linear invariant of the ODE,
which explicit Runge-Kutta steps preserve to round-off, so element totals
only drift through the non-negativity clamp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from ..errors import InvalidArgumentError, NoIgnitionError, StiffnessError
from .mechanism import Mechanism, load_mechanism

P_REF_TO_CGS = 1e-6  # g/m^3 -> g/cm^3
RTOL = 1e-8
ATOL_CONC = 1e-14  # mol/cm^3
ATOL_TEMP = 1e-6  # K
MIN_STEP = 1e-18  # s
MIN_STEP_RELATIVE = 1e-15  # of the integration window
MIN_IGNITION_RISE = 50.0  # K

_OK, _COLLAPSE, _MAX_STEPS = 0, 1, 2


@dataclass(frozen=True)
class KineticsInput:
    T0: float  # K
    phi: float
    P0: float = 100e3  # Pa

    def __post_init__(self):
        if not 900.0 <= self.T0 <= 2500.0:
            raise InvalidArgumentError(f"T0={self.T0} K outside [900, 2500]")
        if not self.phi > 0:
            raise InvalidArgumentError(f"phi must be positive, got {self.phi}")
        if not self.P0 > 0:
            raise InvalidArgumentError(f"P0 must be positive, got {self.P0}")


@dataclass
class ReactorState:
    concentrations: np.ndarray  # mol/cm^3, mechanism species order
    T: float  # K
    P: float  # Pa

    def __post_init__(self):
        self.concentrations = np.maximum(np.asarray(self.concentrations, dtype=float), 0.0)

    @classmethod
    def initial(cls, inp: KineticsInput, mech: Mechanism | None = None) -> "ReactorState":
        mech = mech or load_mechanism()
        x = mech.initial_mole_fractions(inp.phi)
        c_total = inp.P0 / (mech.r_si * inp.T0) * P_REF_TO_CGS  # mol/cm^3
        return cls(x * c_total, inp.T0, inp.P0)


@dataclass
class Trajectory:
    time: np.ndarray  # s
    temperature: np.ndarray  # K
    concentrations: np.ndarray  # (n_points, S) mol/cm^3
    species: tuple[str, ...] = ()
    # exact dT/dt from the right-hand side at each point; optional
    temperature_rate: np.ndarray | None = field(default=None)

    def concentration(self, name: str) -> np.ndarray:
        return self.concentrations[:, self.species.index(name)]


# --------------------------------------------------------------------------
# compiled kernels


@numba.njit(cache=True)
def _nasa7(a, T):
    cp = a[0] + T * (a[1] + T * (a[2] + T * (a[3] + T * a[4])))
    h = T * (a[0] + T * (a[1] / 2.0 + T * (a[2] / 3.0 + T * (a[3] / 4.0 + T * a[4] / 5.0)))) + a[5]
    return cp, h


@numba.njit(cache=True)
def _rates(c, T, A, Ea, orders, net, r_cal, floor, out):
    """Reaction rates (mol/cm^3/s) into ``out``; ``c`` must be non-negative."""
    R, S = orders.shape
    for r in range(R):
        k = A[r] * np.exp(-Ea[r] / (r_cal * T))
        for s in range(S):
            o = orders[r, s]
            if o == 0.0:
                continue
            if net[r, s] < 0.0 and c[s] <= 0.0:
                k = 0.0
                break
            if o == 1.0:
                k *= c[s]
            else:
                k *= max(c[s], floor) ** o
        out[r] = k


@numba.njit(cache=True)
def _rhs(y, P, A, Ea, orders, net, W, low, high, t_mid, r_cal, r_si, floor, rates, out):
    S = W.shape[0]
    T = y[S]
    total = 0.0
    for s in range(S):
        total += max(y[s], 0.0)
    rho = P / (total * r_si * T) * 1e-6  # g/cm^3
    c = np.empty(S)
    for s in range(S):
        c[s] = rho * max(y[s], 0.0)
    _rates(c, T, A, Ea, orders, net, r_cal, floor, rates)
    hsum = 0.0
    cpsum = 0.0
    for s in range(S):
        wdot = 0.0
        for r in range(rates.shape[0]):
            wdot += net[r, s] * rates[r]
        dn = wdot / rho
        out[s] = dn
        a = low[s] if T < t_mid else high[s]
        cp, h = _nasa7(a, T)
        hsum += h * dn
        cpsum += cp * max(y[s], 0.0)
    # the gas constant cancels between molar enthalpy and heat capacity
    out[S] = -hsum / cpsum


# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@numba.njit(cache=True)
def _integrate(y0, t_end, P, A, Ea, orders, net, W, low, high, t_mid, r_cal, r_si, floor,
               rtol, atol_n, atol_T, h_min, record, max_steps, a_tab, e_tab):
    N = y0.shape[0]
    S = N - 1
    rates = np.empty(A.shape[0])
    # species with a negative reaction order: below atol they count as depleted,
    # otherwise the diverging rate factor stalls the step size at extinction
    depletable = np.zeros(S, dtype=np.bool_)
    for r in range(orders.shape[0]):
        for s in range(S):
            if orders[r, s] < 0.0:
                depletable[s] = True
    K = np.empty((7, N))
    y = y0.copy()
    ytmp = np.empty(N)
    ynew = np.empty(N)
    _rhs(y, P, A, Ea, orders, net, W, low, high, t_mid, r_cal, r_si, floor, rates, K[0])

    cap = 1024 if record else 1
    ts = np.empty(cap)
    ys = np.empty((cap, N))
    gs = np.empty(cap)
    if record:
        ts[0] = 0.0
        ys[0] = y
        gs[0] = K[0, S]
    npts = 1

    # streaming peak of dT/dt: (t_prev, g_prev), (t_max, g_max), (t_next, g_next)
    peak = np.empty(6)
    peak[0] = np.nan
    peak[1] = np.nan
    peak[2] = 0.0
    peak[3] = K[0, S]
    peak[4] = np.nan
    peak[5] = np.nan
    t_last = 0.0
    g_last = K[0, S]
    need_next = True
    T_max = y[S]
    T_min = y[S]

    t = 0.0
    h = t_end * 1e-6
    status = 0
    steps = 0
    while t < t_end:
        if steps >= max_steps:
            status = 2
            break
        if t + h > t_end:
            h = t_end - t
        for st in range(1, 7):
            for i in range(N):
                acc = 0.0
                for j in range(st):
                    acc += a_tab[st, j] * K[j, i]
                ytmp[i] = y[i] + h * acc
            _rhs(ytmp, P, A, Ea, orders, net, W, low, high, t_mid, r_cal, r_si, floor, rates, K[st])
        for i in range(N):
            ynew[i] = ytmp[i]  # last stage is evaluated at the 5th-order solution (FSAL)
        err = 0.0
        for i in range(N):
            e = 0.0
            for j in range(7):
                e += e_tab[j] * K[j, i]
            e *= h
            atol = atol_T if i == S else atol_n
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            err += (e / sc) ** 2
        err = np.sqrt(err / N)
        if err <= 1.0:
            t += h
            steps += 1
            clamped = False
            for i in range(S):
                if ynew[i] < 0.0 or (depletable[i] and 0.0 < ynew[i] < atol_n):
                    ynew[i] = 0.0
                    clamped = True
            for i in range(N):
                y[i] = ynew[i]
            if clamped:
                _rhs(y, P, A, Ea, orders, net, W, low, high, t_mid, r_cal, r_si, floor, rates, K[0])
            else:
                for i in range(N):
                    K[0, i] = K[6, i]
            g = K[0, S]
            if y[S] > T_max:
                T_max = y[S]
            if y[S] < T_min:
                T_min = y[S]
            if g > peak[3]:
                peak[0] = t_last
                peak[1] = g_last
                peak[2] = t
                peak[3] = g
                peak[4] = np.nan
                peak[5] = np.nan
                need_next = True
            elif need_next:
                peak[4] = t
                peak[5] = g
                need_next = False
            t_last = t
            g_last = g
            if record:
                if npts == cap:
                    cap *= 2
                    ts2 = np.empty(cap)
                    ys2 = np.empty((cap, N))
                    gs2 = np.empty(cap)
                    ts2[:npts] = ts[:npts]
                    ys2[:npts] = ys[:npts]
                    gs2[:npts] = gs[:npts]
                    ts, ys, gs = ts2, ys2, gs2
                ts[npts] = t
                ys[npts] = y
                gs[npts] = g
                npts += 1
            fac = 0.9 * err ** -0.2 if err > 0.0 else 5.0
            h *= min(5.0, max(0.2, fac))
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
        if h < h_min and t < t_end:
            status = 1
            break
    return status, t, y, ts[:npts], ys[:npts], gs[:npts], peak, T_max, T_min


@numba.njit(cache=True)
def _integrate_fixed(y0, t_end, dt, P, A, Ea, orders, net, W, low, high, t_mid, r_cal, r_si, floor):
    """Classical RK4 at constant step; returns times and temperatures."""
    N = y0.shape[0]
    S = N - 1
    n_steps = int(np.ceil(t_end / dt))
    rates = np.empty(A.shape[0])
    k1 = np.empty(N)
    k2 = np.empty(N)
    k3 = np.empty(N)
    k4 = np.empty(N)
    tmp = np.empty(N)
    y = y0.copy()
    ts = np.empty(n_steps + 1)
    Ts = np.empty(n_steps + 1)
    ts[0] = 0.0
    Ts[0] = y[S]
    for step in range(n_steps):
        _rhs(y, P, A, Ea, orders, net, W, low, high, t_mid, r_cal, r_si, floor, rates, k1)
        for i in range(N):
            tmp[i] = y[i] + 0.5 * dt * k1[i]
        _rhs(tmp, P, A, Ea, orders, net, W, low, high, t_mid, r_cal, r_si, floor, rates, k2)
        for i in range(N):
            tmp[i] = y[i] + 0.5 * dt * k2[i]
        _rhs(tmp, P, A, Ea, orders, net, W, low, high, t_mid, r_cal, r_si, floor, rates, k3)
        for i in range(N):
            tmp[i] = y[i] + dt * k3[i]
        _rhs(tmp, P, A, Ea, orders, net, W, low, high, t_mid, r_cal, r_si, floor, rates, k4)
        for i in range(N):
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        for i in range(S):
            if y[i] < 0.0:
                y[i] = 0.0
        ts[step + 1] = (step + 1) * dt
        Ts[step + 1] = y[S]
    return ts, Ts


# --------------------------------------------------------------------------
# python surface


def _rate_constants(mech: Mechanism, A: float) -> np.ndarray:
    pre = mech.pre_exponential.copy()
    pre[np.isnan(pre)] = A
    return pre


def reaction_rates(state: ReactorState, A: float, mech: Mechanism | None = None) -> np.ndarray:
    """Rates (k1, k2f, k2b) in mol/cm^3/s at ``state`` for pre-exponential ``A``."""
    mech = mech or load_mechanism()
    out = np.empty(len(mech.pre_exponential))
    c = np.maximum(np.asarray(state.concentrations, dtype=float), 0.0)
    _rates(c, float(state.T), _rate_constants(mech, A), mech.activation_energy, mech.orders,
           mech.net, mech.r_cal, mech.concentration_floor, out)
    return out


def _initial_vector(inp: KineticsInput, mech: Mechanism) -> np.ndarray:
    x = mech.initial_mole_fractions(inp.phi)
    n = x / np.dot(x, mech.molecular_weights)  # mol/g
    return np.append(n, inp.T0)


def _density(n: np.ndarray, T: float, P: float, mech: Mechanism) -> np.ndarray:
    return P / (n.sum(axis=-1) * mech.r_si * T) * P_REF_TO_CGS


def chemical_time_scale(inp: KineticsInput, A: float, mech: Mechanism | None = None) -> float:
    """Fuel content over its initial consumption rate, s (inf when A == 0)."""
    mech = mech or load_mechanism()
    state = ReactorState.initial(inp, mech)
    k = reaction_rates(state, A, mech)[0]
    c_fuel = state.concentrations[mech.index(mech.fuel)]
    return np.inf if k <= 0 else c_fuel / k


def _run(inp, A, t_end, mech, record, rtol, max_steps):
    if not t_end > 0:
        raise InvalidArgumentError(f"t_end must be positive, got {t_end}")
    y0 = _initial_vector(inp, mech)
    rho0 = _density(y0[:-1], inp.T0, inp.P0, mech)
    # the absolute floor is stated for concentrations; scale it to mol/g
    atol_n = ATOL_CONC / rho0 * (rtol / RTOL)
    atol_T = ATOL_TEMP * (rtol / RTOL)
    # windows shorter than a microsecond get a proportionally smaller floor
    h_min = min(MIN_STEP, MIN_STEP_RELATIVE * t_end)
    out = _integrate(y0, float(t_end), float(inp.P0), _rate_constants(mech, A),
                     mech.activation_energy, mech.orders, mech.net, mech.molecular_weights,
                     mech.thermo_low, mech.thermo_high, mech.t_mid, mech.r_cal, mech.r_si,
                     mech.concentration_floor, rtol, atol_n, atol_T, h_min, record,
                     max_steps, _A, _E)
    status, t, y = out[0], out[1], out[2]
    if status == _COLLAPSE:
        n = y[:-1]
        conc = _density(n, y[-1], inp.P0, mech) * n
        raise StiffnessError(
            f"step size collapsed below {h_min:.3g} s at t={t:.6g} s",
            state=ReactorState(conc, y[-1], inp.P0), time=t,
        )
    if status == _MAX_STEPS:
        raise StiffnessError(f"exceeded {max_steps} steps at t={t:.6g} s", time=t)
    return out


def integrate_reactor(inp: KineticsInput, A: float, t_end: float, *, rtol: float = RTOL,
                      max_steps: int = 10_000_000, mech: Mechanism | None = None) -> Trajectory:
    """Integrate species and energy equations from the fresh mixture up to ``t_end``."""
    mech = mech or load_mechanism()
    _, _, _, ts, ys, gs, _, _, _ = _run(inp, A, t_end, mech, True, rtol, max_steps)
    n = ys[:, :-1]
    T = ys[:, -1]
    conc = _density(n, T, inp.P0, mech)[:, None] * n
    return Trajectory(ts.copy(), T.copy(), conc, mech.species, gs.copy())


@numba.njit(cache=True)
def _parabola_vertex(t0, g0, t1, g1, t2, g2):
    # vertex of the quadratic through three points with t0 < t1 < t2
    d0 = (g1 - g0) / (t1 - t0)
    d1 = (g2 - g1) / (t2 - t1)
    curv = (d1 - d0) / (t2 - t0)
    if curv >= 0.0:
        return t1
    tv = 0.5 * (t0 + t1) - d0 / (2.0 * curv)
    return min(max(tv, t0), t2)


def ignition_delay(trajectory: Trajectory) -> float:
    """Time of maximum dT/dt, refined by a parabola through the discrete peak."""
    t = np.asarray(trajectory.time, dtype=float)
    T = np.asarray(trajectory.temperature, dtype=float)
    if t.size < 3 or T.max() - T[0] < MIN_IGNITION_RISE:
        raise NoIgnitionError(f"temperature rise below {MIN_IGNITION_RISE} K")
    g = trajectory.temperature_rate
    g = np.gradient(T, t) if g is None else np.asarray(g, dtype=float)
    k = int(np.argmax(g))
    if k == 0 or k == t.size - 1:
        return float(t[k])
    return float(_parabola_vertex(t[k - 1], g[k - 1], t[k], g[k], t[k + 1], g[k + 1]))


def ignition_delay_direct(inp: KineticsInput, A: float, t_end: float, *, rtol: float = RTOL,
                          max_steps: int = 10_000_000, mech: Mechanism | None = None) -> float:
    """Same result as ``ignition_delay(integrate_reactor(...))`` without storing the path."""
    mech = mech or load_mechanism()
    _, _, _, _, _, _, peak, T_max, _ = _run(inp, A, t_end, mech, False, rtol, max_steps)
    if T_max - inp.T0 < MIN_IGNITION_RISE:
        raise NoIgnitionError(f"temperature rise below {MIN_IGNITION_RISE} K by t={t_end:.3g} s")
    t_prev, g_prev, t_max, g_max, t_next, g_next = peak
    if np.isnan(t_prev) or np.isnan(t_next):
        return float(t_max)
    return float(_parabola_vertex(t_prev, g_prev, t_max, g_max, t_next, g_next))


def fixed_step_temperature(inp: KineticsInput, A: float, t_end: float, dt: float,
                           mech: Mechanism | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Reference RK4 run at constant ``dt``; used to cross-check the adaptive path."""
    mech = mech or load_mechanism()
    y0 = _initial_vector(inp, mech)
    return _integrate_fixed(y0, float(t_end), float(dt), float(inp.P0), _rate_constants(mech, A),
                            mech.activation_energy, mech.orders, mech.net,
                            mech.molecular_weights, mech.thermo_low, mech.thermo_high,
                            mech.t_mid, mech.r_cal, mech.r_si, mech.concentration_floor)


def element_totals(trajectory: Trajectory, mech: Mechanism | None = None) -> np.ndarray:
    """Atoms of C, H, O, N per gram of mixture along the trajectory."""
    mech = mech or load_mechanism()
    n = trajectory.concentrations / _density_from_conc(trajectory, mech)[:, None]
    return n @ mech.element_matrix


def _density_from_conc(trajectory, mech):
    return trajectory.concentrations @ mech.molecular_weights
