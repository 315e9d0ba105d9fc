"""Event-driven integration of the discontinuous system and its return map.

Integration runs zone by zone with the smooth field of the current zone.
After every accepted step the dense interpolant is scanned for sign
changes of x - a_i on the zone's two edges; a crossing is refined with
Brent's method to the event time tolerance, the step is cut there and
the solver restarts with the neighbouring zone's field. No step ever
spans a boundary. Contacts where x touches a_i at a turning point (y = 0)
without crossing are logged as grazing events and the zone is kept.

The return map uses the section {x = 0, y > 0}, entered from x < 0.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple

import numpy as np
from scipy.integrate import DOP853
from scipy.optimize import brentq

from app.utils.errors import (
    EscapeError,
    EventLocalizationError,
    InvalidInputError,
    NoReturnError,
    NumericalFailure,
)
from app.utils.model import TWO_PI, _require_finite
from app.utils.quadrature import MACHINE_EPS
from app.utils.workers import map_ordered

logger = logging.getLogger(__name__)

UPWARD = 1
DOWNWARD = -1
GRAZING = 0


@dataclass(frozen=True)
class IntegrationOptions:
    rtol: float = 1e-12
    atol: float = 1e-14
    event_tol: float = 1e-12
    max_revolutions: float = 2.0
    max_radius_factor: float = 10.0
    graze_tol: float = 1e-9
    max_step: float = math.inf

    @classmethod
    def from_settings(cls, settings):
        return cls(
            rtol=float(settings.get("integrator", "rtol")),
            atol=float(settings.get("integrator", "atol")),
            event_tol=float(settings.get("integrator", "event_tol")),
            max_revolutions=float(settings.get("integrator", "max_revolutions")),
            max_radius_factor=float(settings.get("integrator", "max_radius_factor")),
            graze_tol=float(settings.get("grazing", "tol_factor")),
        )

    @property
    def max_time(self):
        return TWO_PI * self.max_revolutions


class ZoneEvent(NamedTuple):
    t: float
    breakpoint_index: int
    direction: int
    x: float
    y: float


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    zone: np.ndarray
    events: List[ZoneEvent] = field(default_factory=list)
    stats: Dict[str, int] = field(default_factory=dict)

    @property
    def final_state(self):
        return float(self.x[-1]), float(self.y[-1])

    @property
    def radius(self):
        return np.hypot(self.x, self.y)

    @property
    def energy(self):
        return 0.5 * (self.x ** 2 + self.y ** 2)

    def crossings(self):
        return [e for e in self.events if e.direction != GRAZING]


@dataclass(frozen=True)
class SectionState:
    y0: float

    def __post_init__(self):
        y0 = _require_finite(self.y0, "y0")
        if y0 <= 0.0:
            raise InvalidInputError(f"section coordinate must be positive, got {y0!r}", field="y0")
        object.__setattr__(self, "y0", y0)

    @property
    def h(self):
        return 0.5 * self.y0 * self.y0

    @property
    def point(self):
        return 0.0, self.y0


@dataclass(frozen=True)
class SectionReturn:
    y: float
    t: float
    x: float = 0.0

    @property
    def energy(self):
        return 0.5 * self.y * self.y


@dataclass(frozen=True)
class DisplacementRecord:
    r: float
    h: float
    epsilon: float
    P: float
    d: float

    @classmethod
    def from_return(cls, r, epsilon, section_return):
        h = 0.5 * r * r
        P = section_return.energy
        return cls(r=r, h=h, epsilon=epsilon, P=P, d=P - h)


class _Recorder:
    def __init__(self, direction, output_step):
        self.direction = direction
        self.output_step = output_step
        self.next_output = output_step
        self.t, self.x, self.y, self.zone = [], [], [], []

    def add(self, tau, state, zone):
        self.t.append(self.direction * tau)
        self.x.append(float(state[0]))
        self.y.append(float(state[1]))
        self.zone.append(zone)

    def add_step(self, dense, tau_end, state_end, zone):
        if self.output_step is None:
            self.add(tau_end, state_end, zone)
            return
        while self.next_output <= tau_end * (1.0 + 4.0 * MACHINE_EPS):
            self.add(self.next_output, dense(min(self.next_output, tau_end)), zone)
            self.next_output += self.output_step

    def close(self, tau, state, zone):
        if not self.t or abs(self.direction * tau - self.t[-1]) > 0.0:
            self.add(tau, state, zone)

    def build(self, events, stats):
        return Trajectory(
            t=np.array(self.t), x=np.array(self.x), y=np.array(self.y),
            zone=np.array(self.zone, dtype=int), events=events, stats=stats,
        )


class EventIntegrator:
    """Integrates x' = y, y' = -x + eps g zone by zone with boundary events.

    ``time_direction=-1`` integrates backward in time; events are then
    reported in integration order with negative times.
    """

    def __init__(self, system, epsilon, options=None, time_direction=1):
        if time_direction not in (1, -1):
            raise InvalidInputError("must be 1 or -1", field="time_direction")
        self.system = system
        self.partition = system.partition
        self.epsilon = _require_finite(epsilon, "epsilon")
        self.options = options or IntegrationOptions()
        self.direction = time_direction

    def _field(self, zone):
        base = self.system.zone_field(zone, self.epsilon)
        if self.direction == 1:
            return base
        return lambda tau, s: -base(-tau, s)

    def _refine(self, func, lo, hi):
        """Root of func on [lo, hi] to the event time tolerance.

        A bracket whose end values agree in sign only through rounding
        resolves to the end with the smaller residual.
        """
        f_lo, f_hi = func(lo), func(hi)
        if f_lo == 0.0 or hi <= lo:
            return lo
        if f_hi == 0.0:
            return hi
        if f_lo * f_hi > 0.0:
            return lo if abs(f_lo) <= abs(f_hi) else hi
        try:
            return brentq(func, lo, hi, xtol=self.options.event_tol, rtol=4.0 * MACHINE_EPS, maxiter=200)
        except RuntimeError as e:
            raise EventLocalizationError(f"event localization did not converge on [{lo:.17g}, {hi:.17g}]: {e}")

    def _turning_point(self, dense, tau0, tau1):
        """Extremum of x on the step, as (tau, 'max' | 'min') or None."""
        rate0 = self.direction * float(dense(tau0)[1])
        rate1 = self.direction * float(dense(tau1)[1])
        if rate0 >= 0.0 > rate1:
            kind = "max"
        elif rate0 <= 0.0 < rate1:
            kind = "min"
        else:
            return None
        tau = self._refine(lambda s: dense(s)[1], tau0, tau1)
        return tau, kind

    def _crossing(self, dense, checkpoints, level, direction):
        for (tp, xp), (tq, xq) in zip(checkpoints, checkpoints[1:]):
            vp, vq = xp - level, xq - level
            if direction == UPWARD:
                hit = vp <= 0.0 < vq
            else:
                hit = vp > 0.0 >= vq
            if hit:
                return self._refine(lambda s: dense(s)[0] - level, tp, tq)
        return None

    def run(self, start, t_max, stop_at_section=False, output_step=None):
        """Integrate from ``start`` for up to ``t_max`` time units.

        Returns ``(trajectory, section_return)``; the second item is None
        unless ``stop_at_section`` is set and the section was reached.
        """
        opts = self.options
        state = np.array([_require_finite(start[0], "x"), _require_finite(start[1], "y")])
        t_max = _require_finite(t_max, "t_max")
        if t_max <= 0.0:
            raise InvalidInputError(f"must be positive, got {t_max!r}", field="t_max")
        max_radius = opts.max_radius_factor * max(float(np.hypot(*state)), 1e-12)

        zone = self.partition.zone_index(state[0])
        recorder = _Recorder(self.direction, output_step)
        recorder.add(0.0, state, zone)
        events = []
        stats = {"steps": 0, "nfev": 0, "restarts": 0}
        tau = 0.0
        last_graze = None

        while True:
            solver = DOP853(self._field(zone), tau, state, t_max, rtol=opts.rtol, atol=opts.atol,
                            max_step=opts.max_step)
            switched = False
            while solver.status == "running":
                message = solver.step()
                stats["steps"] += 1
                if solver.status == "failed":
                    stats["nfev"] += solver.nfev
                    raise NumericalFailure(f"integrator failed at t={self.direction * solver.t:.6g}: {message}")

                tau0, tau1 = solver.t_old, solver.t
                state1 = solver.y.copy()
                dense = solver.dense_output()

                if float(np.hypot(*state1)) > max_radius:
                    stats["nfev"] += solver.nfev
                    raise EscapeError(
                        f"no return: trajectory escaped beyond radius {max_radius:.6g} "
                        f"at t={self.direction * tau1:.6g}"
                    )

                checkpoints = [(tau0, float(dense(tau0)[0]))]
                turning = self._turning_point(dense, tau0, tau1)
                if turning is not None:
                    checkpoints.append((turning[0], float(dense(turning[0])[0])))
                checkpoints.append((tau1, float(dense(tau1)[0])))

                lower, upper = self.partition.bounds(zone)
                candidates = []
                if math.isfinite(upper):
                    hit = self._crossing(dense, checkpoints, upper, UPWARD)
                    if hit is not None:
                        candidates.append((hit, "zone", zone + 1, UPWARD))
                if math.isfinite(lower):
                    hit = self._crossing(dense, checkpoints, lower, DOWNWARD)
                    if hit is not None:
                        candidates.append((hit, "zone", zone, DOWNWARD))
                if stop_at_section and zone == 0:
                    hit = self._section_crossing(dense, checkpoints)
                    if hit is not None:
                        candidates.append((hit, "section", 0, UPWARD))

                event = min(candidates, key=lambda c: c[0]) if candidates else None
                horizon = event[0] if event else tau1

                if turning is not None and turning[0] <= horizon:
                    last_graze = self._log_graze(turning, dense, zone, events, last_graze)

                if event is None:
                    recorder.add_step(dense, tau1, state1, zone)
                    state, tau = state1, tau1
                    continue

                tau_e, kind, index, direction = event
                state_e = np.array(dense(tau_e), dtype=float)
                recorder.add_step(dense, tau_e, state_e, zone)
                stats["nfev"] += solver.nfev
                if kind == "section":
                    recorder.close(tau_e, state_e, zone)
                    trajectory = recorder.build(events, stats)
                    return trajectory, SectionReturn(y=float(state_e[1]), t=self.direction * tau_e, x=float(state_e[0]))

                events.append(ZoneEvent(self.direction * tau_e, index, direction, float(state_e[0]), float(state_e[1])))
                logger.debug("zone event a_%d dir %+d at t=%.17g", index, direction, self.direction * tau_e)
                zone = zone + direction
                state, tau = state_e, tau_e
                stats["restarts"] += 1
                switched = True
                break

            if switched:
                continue
            stats["nfev"] += solver.nfev
            if stop_at_section:
                raise NoReturnError(
                    f"no return to the section within t={t_max:.6g}",
                    estimate=(float(state[0]), float(state[1])),
                )
            recorder.close(tau, state, zone)
            return recorder.build(events, stats), None

    def _section_crossing(self, dense, checkpoints):
        for (tp, xp), (tq, xq) in zip(checkpoints, checkpoints[1:]):
            if xp < 0.0 <= xq:
                tau = self._refine(lambda s: dense(s)[0], tp, tq)
                if self.direction * dense(tau)[1] > 0.0:
                    return tau
        return None

    def _log_graze(self, turning, dense, zone, events, last_graze):
        tau, kind = turning
        x, y = (float(v) for v in dense(tau))
        lower, upper = self.partition.bounds(zone)
        tol = self.options.graze_tol * max(1.0, abs(x))
        if kind == "max" and math.isfinite(upper) and -tol <= x - upper <= 0.0:
            index = zone + 1
        elif kind == "min" and math.isfinite(lower) and 0.0 < x - lower <= tol:
            index = zone
        else:
            return last_graze
        if last_graze is not None and last_graze[0] == index and abs(tau - last_graze[1]) <= 10.0 * self.options.event_tol:
            return last_graze
        events.append(ZoneEvent(self.direction * tau, index, GRAZING, x, y))
        logger.info("grazing contact with x = a_%d at t=%.6g", index, self.direction * tau)
        return index, tau


def integrate_to_section(system, y0, epsilon, options=None):
    """First return of the orbit through (0, y0) to the section {x = 0, y > 0}."""
    section = SectionState(y0)
    options = options or IntegrationOptions()
    integrator = EventIntegrator(system, epsilon, options)
    trajectory, section_return = integrator.run(section.point, options.max_time, stop_at_section=True)
    return section_return, trajectory


def displacement(system, r, epsilon, options=None):
    """d(h, eps) = P(h, eps) - h with h = r^2 / 2, measured in energy."""
    section = SectionState(r)
    section_return, _ = integrate_to_section(system, section.y0, epsilon, options)
    return DisplacementRecord.from_return(section.y0, float(epsilon), section_return)


def simulate(system, start, epsilon, t_max, options=None, output_step=None, time_direction=1):
    if output_step is not None:
        output_step = _require_finite(output_step, "output_step")
        if output_step <= 0.0:
            raise InvalidInputError(f"must be positive, got {output_step!r}", field="output_step")
    integrator = EventIntegrator(system, epsilon, options, time_direction=time_direction)
    trajectory, _ = integrator.run(start, t_max, output_step=output_step)
    return trajectory


def displacement_sweep(system, r_values, epsilons, options=None, jobs=1):
    """Displacement records for every (r, eps) pair, eps-major, in input order."""
    pairs = [(float(r), float(e)) for e in epsilons for r in r_values]
    return map_ordered(lambda pair: displacement(system, pair[0], pair[1], options), pairs, jobs)
